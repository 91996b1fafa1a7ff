/**
 * Calculator wiring: form -> /v1/score -> result view, plus the what-if
 * panel issuing a second request with one feature overridden. Submission is
 * enabled only when every field validates; service failures keep the form
 * intact and show an inline message.
 */

import { ScoringClient, ServiceError, type ScoreRequest, type ScoreResponse } from "./api.js";
import {
  LAB_FIELDS,
  LAB_UNITS,
  SUBGROUPS,
  emptyForm,
  isValid,
  toScoreRequest,
  validateForm,
  type FormState,
  type LabField,
} from "./form.js";
import {
  DISCLAIMER,
  renderResult,
  renderServiceError,
  renderWhatIf,
} from "./view.js";

export class CalculatorApp {
  readonly state: FormState = emptyForm();
  baseline: ScoreResponse | null = null;
  baselineRequest: ScoreRequest | null = null;

  private readonly inputs = new Map<string, HTMLInputElement | HTMLSelectElement>();
  private readonly hints = new Map<string, HTMLElement>();
  private submitButton!: HTMLButtonElement;
  private resultPanel!: HTMLElement;
  private whatIfPanel!: HTMLElement;
  private whatIfFeature!: HTMLSelectElement;
  private whatIfSlider!: HTMLInputElement;
  private whatIfT2dm!: HTMLInputElement;
  private whatIfClient: ScoringClient;

  constructor(
    private readonly root: HTMLElement,
    private readonly client: ScoringClient,
    whatIfClient?: ScoringClient,
  ) {
    // separate client so a busy what-if slider never aborts a form submit
    this.whatIfClient = whatIfClient ?? client;
    this.build();
  }

  private build(): void {
    this.root.replaceChildren();
    const form = document.createElement("form");
    form.className = "calculator-form";
    form.noValidate = true;

    for (const field of LAB_FIELDS) {
      form.appendChild(this.labRow(field));
    }
    form.appendChild(this.sexRow());
    form.appendChild(this.subgroupRow());
    form.appendChild(this.flagRow("t2dm", "Type 2 diabetes"));
    form.appendChild(this.flagRow("hypertension", "Hypertension"));

    this.submitButton = document.createElement("button");
    this.submitButton.type = "submit";
    this.submitButton.textContent = "Estimate risk";
    this.submitButton.disabled = true;
    form.appendChild(this.submitButton);

    form.addEventListener("submit", (event) => {
      event.preventDefault();
      void this.submit();
    });
    this.root.appendChild(form);

    this.resultPanel = document.createElement("section");
    this.resultPanel.className = "result-panel";
    this.root.appendChild(this.resultPanel);

    this.root.appendChild(this.buildWhatIf());

    const disclaimer = document.createElement("p");
    disclaimer.className = "disclaimer";
    disclaimer.textContent = DISCLAIMER;
    this.root.appendChild(disclaimer);
  }

  private labRow(field: LabField): HTMLElement {
    const row = document.createElement("label");
    row.className = "field-row";
    row.append(`${field} (${LAB_UNITS[field]}) `);
    const input = document.createElement("input");
    input.name = field;
    input.inputMode = "decimal";
    input.addEventListener("input", () => {
      this.state.labs[field] = input.value;
      this.refreshValidation();
    });
    row.appendChild(input);
    const hint = document.createElement("span");
    hint.className = "field-hint";
    row.appendChild(hint);
    this.inputs.set(field, input);
    this.hints.set(field, hint);
    return row;
  }

  private sexRow(): HTMLElement {
    const row = document.createElement("label");
    row.className = "field-row";
    row.append("Sex ");
    const select = document.createElement("select");
    select.name = "sex";
    for (const value of ["", "male", "female"]) {
      const option = document.createElement("option");
      option.value = value;
      option.textContent = value || "choose";
      select.appendChild(option);
    }
    select.addEventListener("change", () => {
      this.state.sex = select.value as FormState["sex"];
      this.refreshValidation();
    });
    row.appendChild(select);
    const hint = document.createElement("span");
    hint.className = "field-hint";
    row.appendChild(hint);
    this.inputs.set("sex", select);
    this.hints.set("sex", hint);
    return row;
  }

  private subgroupRow(): HTMLElement {
    const row = document.createElement("label");
    row.className = "field-row";
    row.append("Race/ethnicity ");
    const select = document.createElement("select");
    select.name = "subgroup";
    const blank = document.createElement("option");
    blank.value = "";
    blank.textContent = "choose";
    select.appendChild(blank);
    for (const value of SUBGROUPS) {
      const option = document.createElement("option");
      option.value = value;
      option.textContent = value;
      select.appendChild(option);
    }
    select.addEventListener("change", () => {
      this.state.subgroup = select.value;
      this.refreshValidation();
    });
    row.appendChild(select);
    const hint = document.createElement("span");
    hint.className = "field-hint";
    row.appendChild(hint);
    this.inputs.set("subgroup", select);
    this.hints.set("subgroup", hint);
    return row;
  }

  private flagRow(key: "t2dm" | "hypertension", label: string): HTMLElement {
    const row = document.createElement("label");
    row.className = "field-row flag-row";
    const input = document.createElement("input");
    input.type = "checkbox";
    input.name = key;
    input.addEventListener("change", () => {
      this.state[key] = input.checked;
      this.refreshValidation();
    });
    row.appendChild(input);
    row.append(` ${label}`);
    this.inputs.set(key, input);
    return row;
  }

  private buildWhatIf(): HTMLElement {
    const panel = document.createElement("section");
    panel.className = "whatif-controls";

    this.whatIfFeature = document.createElement("select");
    this.whatIfFeature.name = "whatif-feature";
    for (const field of LAB_FIELDS) {
      const option = document.createElement("option");
      option.value = field;
      option.textContent = field;
      this.whatIfFeature.appendChild(option);
    }
    panel.appendChild(this.whatIfFeature);

    this.whatIfSlider = document.createElement("input");
    this.whatIfSlider.type = "range";
    this.whatIfSlider.name = "whatif-value";
    this.whatIfSlider.disabled = true;
    this.whatIfSlider.addEventListener("input", () => {
      void this.runWhatIf(Number(this.whatIfSlider.value));
    });
    this.whatIfFeature.addEventListener("change", () => this.resetWhatIfSlider());
    panel.appendChild(this.whatIfSlider);

    const toggleRow = document.createElement("label");
    toggleRow.className = "whatif-toggle";
    this.whatIfT2dm = document.createElement("input");
    this.whatIfT2dm.type = "checkbox";
    this.whatIfT2dm.name = "whatif-t2dm";
    this.whatIfT2dm.disabled = true;
    this.whatIfT2dm.addEventListener("change", () => {
      void this.runWhatIfT2dm(this.whatIfT2dm.checked);
    });
    toggleRow.appendChild(this.whatIfT2dm);
    toggleRow.append(" what if: type 2 diabetes");
    panel.appendChild(toggleRow);

    this.whatIfPanel = document.createElement("div");
    this.whatIfPanel.className = "whatif-panel";
    panel.appendChild(this.whatIfPanel);
    return panel;
  }

  refreshValidation(): void {
    const errors = validateForm(this.state);
    for (const [name, hint] of this.hints) {
      const touched =
        name in this.state.labs
          ? this.state.labs[name as LabField] !== ""
          : (this.inputs.get(name) as HTMLSelectElement).value !== "";
      hint.textContent = touched && errors[name as keyof typeof errors]
        ? errors[name as keyof typeof errors]!
        : "";
    }
    this.submitButton.disabled = !isValid(this.state);
  }

  async submit(): Promise<void> {
    if (!isValid(this.state)) return;
    const request = toScoreRequest(this.state);
    try {
      const response = await this.client.score(request);
      if (response === null) return; // superseded
      this.baseline = response;
      this.baselineRequest = request;
      renderResult(this.resultPanel, response);
      this.resetWhatIfSlider();
    } catch (err) {
      const message =
        err instanceof ServiceError
          ? `scoring failed (${err.status}): ` +
            err.errors.map((e) => `${e.field}: ${e.error}`).join("; ")
          : "scoring service unreachable";
      renderServiceError(this.resultPanel, message);
    }
  }

  private resetWhatIfSlider(): void {
    this.whatIfPanel.replaceChildren();
    if (!this.baselineRequest) {
      this.whatIfSlider.disabled = true;
      this.whatIfT2dm.disabled = true;
      return;
    }
    const field = this.whatIfFeature.value as LabField;
    const current = this.baselineRequest.features[field]!;
    this.whatIfSlider.min = String(Math.max(0.1, current / 2));
    this.whatIfSlider.max = String(current * 1.5);
    this.whatIfSlider.step = "any";
    this.whatIfSlider.value = String(current);
    this.whatIfSlider.disabled = false;
    this.whatIfT2dm.disabled = false;
    this.whatIfT2dm.checked = (this.baselineRequest.flags["T2DM"] ?? 0) === 1;
  }

  async runWhatIf(value: number): Promise<void> {
    if (!this.baseline || !this.baselineRequest) return;
    const field = this.whatIfFeature.value as LabField;
    const request: ScoreRequest = {
      ...this.baselineRequest,
      features: { ...this.baselineRequest.features, [field]: value },
    };
    await this.compare(request, `${field} = ${value}`);
  }

  async runWhatIfT2dm(on: boolean): Promise<void> {
    if (!this.baseline || !this.baselineRequest) return;
    const request: ScoreRequest = {
      ...this.baselineRequest,
      flags: { ...this.baselineRequest.flags, T2DM: on ? 1 : 0 },
    };
    await this.compare(request, `type 2 diabetes ${on ? "present" : "absent"}`);
  }

  private async compare(request: ScoreRequest, label: string): Promise<void> {
    if (!this.baseline) return;
    try {
      const response = await this.whatIfClient.score(request);
      if (response === null) return; // superseded by a newer what-if
      renderWhatIf(this.whatIfPanel, this.baseline, response, label);
    } catch (err) {
      const message =
        err instanceof ServiceError ? `what-if failed (${err.status})` : "service unreachable";
      renderServiceError(this.whatIfPanel, message);
    }
  }

  /** Test hook: drive the form as a user would. */
  setForm(state: FormState): void {
    Object.assign(this.state.labs, state.labs);
    this.state.sex = state.sex;
    this.state.subgroup = state.subgroup;
    this.state.t2dm = state.t2dm;
    this.state.hypertension = state.hypertension;
    for (const field of LAB_FIELDS) {
      (this.inputs.get(field) as HTMLInputElement).value = state.labs[field];
    }
    (this.inputs.get("sex") as HTMLSelectElement).value = state.sex;
    (this.inputs.get("subgroup") as HTMLSelectElement).value = state.subgroup;
    (this.inputs.get("t2dm") as HTMLInputElement).checked = state.t2dm;
    (this.inputs.get("hypertension") as HTMLInputElement).checked = state.hypertension;
    this.refreshValidation();
  }
}
