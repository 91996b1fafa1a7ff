import { ScoringClient } from "./api.js";
import { CalculatorApp } from "./app.js";

const root = document.getElementById("app");
if (root) {
  // separate clients so slider traffic never cancels a submit
  new CalculatorApp(root, new ScoringClient(""), new ScoringClient(""));
}
