/**
 * Form state and validation for the calculator inputs. Values stay as the
 * clinician typed them; conversion to a ScoreRequest happens only after
 * every field validates, and the round trip back is value-lossless.
 */

import type { ScoreRequest } from "./api.js";

export const LAB_FIELDS = ["BMI", "TG", "ALT", "AST", "HDL"] as const;
export type LabField = (typeof LAB_FIELDS)[number];

export const SUBGROUPS = [
  "NH-White",
  "NH-Asian",
  "NH-Black",
  "NH-Other",
  "Hispanic",
] as const;

export const LAB_UNITS: Record<LabField, string> = {
  BMI: "kg/m²",
  TG: "mg/dL",
  ALT: "U/L",
  AST: "U/L",
  HDL: "mg/dL",
};

export interface FormState {
  labs: Record<LabField, string>;
  sex: "male" | "female" | "";
  subgroup: string;
  t2dm: boolean;
  hypertension: boolean;
}

export function emptyForm(): FormState {
  return {
    labs: { BMI: "", TG: "", ALT: "", AST: "", HDL: "" },
    sex: "",
    subgroup: "",
    t2dm: false,
    hypertension: false,
  };
}

export type FormErrors = Partial<Record<LabField | "sex" | "subgroup", string>>;

export function validateForm(state: FormState): FormErrors {
  const errors: FormErrors = {};
  for (const field of LAB_FIELDS) {
    const raw = state.labs[field].trim();
    if (raw === "") {
      errors[field] = "required";
      continue;
    }
    const value = Number(raw);
    if (!Number.isFinite(value)) {
      errors[field] = "enter a number";
    } else if (value <= 0) {
      errors[field] = "must be positive";
    }
  }
  if (state.sex !== "male" && state.sex !== "female") {
    errors.sex = "required";
  }
  if (!SUBGROUPS.includes(state.subgroup as (typeof SUBGROUPS)[number])) {
    errors.subgroup = "required";
  }
  return errors;
}

export function isValid(state: FormState): boolean {
  return Object.keys(validateForm(state)).length === 0;
}

export function toScoreRequest(state: FormState): ScoreRequest {
  const errors = validateForm(state);
  if (Object.keys(errors).length > 0) {
    throw new Error(`form has invalid fields: ${Object.keys(errors).join(", ")}`);
  }
  const features: Record<string, number> = {};
  for (const field of LAB_FIELDS) {
    features[field] = Number(state.labs[field]);
  }
  return {
    features,
    sex: state.sex as "male" | "female",
    subgroup: state.subgroup,
    flags: { T2DM: state.t2dm ? 1 : 0, hypertension: state.hypertension ? 1 : 0 },
  };
}

export function fromScoreRequest(request: ScoreRequest): FormState {
  const labs = {} as Record<LabField, string>;
  for (const field of LAB_FIELDS) {
    labs[field] = String(request.features[field] ?? "");
  }
  return {
    labs,
    sex: request.sex,
    subgroup: request.subgroup,
    t2dm: (request.flags["T2DM"] ?? 0) === 1,
    hypertension: (request.flags["hypertension"] ?? 0) === 1,
  };
}
