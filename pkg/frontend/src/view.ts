/**
 * DOM rendering. Every number shown here is a ScoreResponse field, a
 * difference of two such fields, or (for the what-if odds line) a ratio of
 * two served odds fields — the view never recomputes model quantities.
 */

import type { ScoreResponse } from "./api.js";

export function fmtProbability(p: number): string {
  return p.toFixed(3);
}

export function fmtPercent(p: number): string {
  return `${(100 * p).toFixed(1)}%`;
}

export function fmtSigned(x: number): string {
  const text = x.toFixed(3);
  return x >= 0 ? `+${text}` : text;
}

export function fmtRatio(x: number): string {
  return `×${x.toFixed(2)}`;
}

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export function renderResult(container: HTMLElement, response: ScoreResponse): void {
  container.replaceChildren();

  const gauge = el("div", "gauge");
  const fill = el("div", "gauge-fill");
  fill.style.width = fmtPercent(response.probability);
  gauge.appendChild(fill);
  container.appendChild(gauge);

  const prob = el("p", "probability");
  prob.append(el("span", "probability-value", fmtProbability(response.probability)));
  prob.append(el("span", "probability-pct", ` (${fmtPercent(response.probability)})`));
  container.appendChild(prob);

  container.appendChild(
    el("p", "log-odds", `log-odds ${fmtSigned(response.log_odds)}`),
  );

  if (response.capped.length > 0) {
    container.appendChild(
      el("p", "capped-note", `capped to plausible range: ${response.capped.join(", ")}`),
    );
  }

  if (response.policy_decision !== null) {
    container.appendChild(
      el(
        "p",
        "policy-note",
        `${response.policy_constraint} policy decision: ` +
          (response.policy_decision === 1 ? "flag for follow-up" : "no flag"),
      ),
    );
  }

  const bars = el("div", "shap-bars");
  const entries = Object.entries(response.contributions);
  const maxAbs = Math.max(...entries.map(([, phi]) => Math.abs(phi)), 1e-12);
  for (const [feature, phi] of entries) {
    const row = el("div", "shap-row");
    row.appendChild(el("span", "shap-name", feature));
    const track = el("div", "shap-track");
    const bar = el("div", phi >= 0 ? "shap-bar pos" : "shap-bar neg");
    bar.style.width = `${((50 * Math.abs(phi)) / maxAbs).toFixed(1)}%`;
    if (phi >= 0) {
      bar.style.marginLeft = "50%";
    } else {
      bar.style.marginLeft = `${(50 - (50 * Math.abs(phi)) / maxAbs).toFixed(1)}%`;
    }
    track.appendChild(bar);
    row.appendChild(track);
    row.appendChild(el("span", "shap-value", fmtSigned(phi)));
    bars.appendChild(row);
  }
  container.appendChild(bars);

  container.appendChild(el("p", "model-id", `model ${response.model_id}`));
}

export function renderWhatIf(
  container: HTMLElement,
  baseline: ScoreResponse,
  variant: ScoreResponse,
  label: string,
): void {
  container.replaceChildren();
  container.appendChild(el("h3", "whatif-title", `what if: ${label}`));

  const table = el("div", "whatif-table");
  const rows: Array<[string, string, string]> = [
    [
      "probability",
      fmtProbability(baseline.probability),
      fmtProbability(variant.probability),
    ],
  ];
  for (const [name, base, alt] of rows) {
    const row = el("div", "whatif-row");
    row.appendChild(el("span", "whatif-name", name));
    row.appendChild(el("span", "whatif-base", base));
    row.appendChild(el("span", "whatif-variant", alt));
    table.appendChild(row);
  }
  container.appendChild(table);

  container.appendChild(
    el(
      "p",
      "whatif-delta",
      `Δ probability ${fmtSigned(variant.probability - baseline.probability)}`,
    ),
  );
  container.appendChild(
    el(
      "p",
      "whatif-delta-logodds",
      `Δ log-odds ${fmtSigned(variant.log_odds - baseline.log_odds)}`,
    ),
  );
  container.appendChild(
    el("p", "whatif-odds-ratio", `odds ${fmtRatio(variant.odds / baseline.odds)}`),
  );
}

export function renderServiceError(container: HTMLElement, message: string): void {
  container.replaceChildren(el("p", "service-error", message));
}

export const DISCLAIMER =
  "Research tool. The underlying model was trained on a matched cohort, so the " +
  "displayed probability is not calibrated to population prevalence; " +
  "standardization constants are reconstructed estimates.";
