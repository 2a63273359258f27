import { Api } from "./api";
import { SessionStore } from "./state";
import { MetricsPanel } from "./panels/metrics";
import { AlgorithmsPanel } from "./panels/algorithms";
import { WranglingPanel } from "./panels/wrangling";
import { ModelsPanel } from "./panels/models";
import { HistoryPanel } from "./panels/history";
import { ComparisonPanel } from "./panels/comparison";
import "./styles.css";

const store = new SessionStore(new Api(""));

const root = document.getElementById("app")!;

const header = document.createElement("header");
header.innerHTML = "<h1>stackbench</h1>";
const openHeart = document.createElement("button");
openHeart.textContent = "open heart-disease session";
openHeart.addEventListener("click", () => {
  void store.createSession({ builtin: "heart", label_column: "Diagnosis", seed: 1, n_folds: 5 });
});
header.appendChild(openHeart);

const fileInput = document.createElement("input");
fileInput.type = "file";
fileInput.accept = ".csv";
fileInput.addEventListener("change", async () => {
  const file = fileInput.files?.[0];
  if (!file) return;
  const text = await file.text();
  void store.createSession({ csv_text: text });
});
header.appendChild(fileInput);
root.appendChild(header);

const grid = document.createElement("main");
grid.className = "panel-grid";
grid.appendChild(new MetricsPanel(store).el);
grid.appendChild(new HistoryPanel(store).el);
grid.appendChild(new ComparisonPanel(store).el);
grid.appendChild(new AlgorithmsPanel(store).el);
grid.appendChild(new WranglingPanel(store).el);
grid.appendChild(new ModelsPanel(store).el);
root.appendChild(grid);
