// Browser wiring: renders Controller state and forwards DOM events.
// All logic lives in controller.ts; keep this file dumb.

import { ApiClient, ApiError } from "./api.js";
import { Controller } from "./controller.js";
import { parseCodepoint, scalars } from "./scalars.js";

const api = new ApiClient("");
const controller = new Controller(api, navigator.clipboard);

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

const banner = el<HTMLDivElement>("banner");
const dbSummary = el<HTMLSpanElement>("db-summary");
const palette = el<HTMLDivElement>("palette");
const paletteHint = el<HTMLParagraphElement>("palette-hint");
const editor = el<HTMLDivElement>("editor");
const countBadge = el<HTMLSpanElement>("count-badge");
const violationBox = el<HTMLParagraphElement>("violations");
const fallbackBox = el<HTMLTextAreaElement>("copy-fallback");
const statsBox = el<HTMLPreElement>("stats");
const responseBox = el<HTMLPreElement>("llm-response");

function note(message: string, isError = false): void {
  banner.textContent = message;
  banner.className = isError ? "banner error" : "banner";
}

function describe(error: unknown): string {
  if (error instanceof ApiError) {
    const line = (error.detail as { line_number?: number } | null)?.line_number;
    return line ? `${error.message} (line ${line})` : error.message;
  }
  return String(error);
}

function renderPalette(): void {
  palette.replaceChildren();
  paletteHint.textContent = controller.state.paletteHint ?? "";
  for (const item of controller.state.palette) {
    const button = document.createElement("button");
    button.className = item.effective ? "glyph effective" : "glyph";
    button.textContent = item.char;
    const verdicts = Object.entries(item.recognizability)
      .map(([model, verdict]) => `${model}: ${verdict}`)
      .join(", ");
    button.title = `U+${item.codepoint} · ${item.readability}${
      verdicts ? ` · ${verdicts}` : ""
    }`;
    button.addEventListener("click", () => applyGlyph(parseCodepoint(item.codepoint)));

    const probe = document.createElement("button");
    probe.className = "probe";
    probe.textContent = "?";
    probe.title = "copy the probe prompt for this glyph";
    probe.addEventListener("click", () => copyProbe(parseCodepoint(item.codepoint)));

    const cell = document.createElement("span");
    cell.append(button, probe);
    palette.append(cell);
  }
}

function renderEditor(): void {
  editor.replaceChildren();
  // one span per scalar keeps click positions surrogate-safe
  scalars(controller.state.perturbedText).forEach((ch, index) => {
    const span = document.createElement("span");
    span.textContent = ch;
    span.dataset.scalar = String(index);
    if (index === controller.state.selected) span.classList.add("selected");
    const edited = controller.state.edits.some((e) => e.position === index);
    if (edited) span.classList.add("edited");
    span.addEventListener("click", () => selectPosition(index));
    editor.append(span);
  });
  countBadge.textContent = `${controller.state.perturbedCount} perturbed`;
  violationBox.textContent = controller.state.violations
    .map((v) => `[${v.rule}] ${v.message}`)
    .join("\n");
}

function renderStats(): void {
  const stats = controller.state.stats;
  if (!stats) {
    statsBox.textContent = controller.state.statsNote ?? "no statistics yet";
    return;
  }
  const row = (s: { n: number; min: number; max: number; mean: number; std: number }) =>
    `n=${s.n} min=${s.min} max=${s.max} mean=${s.mean.toFixed(2)} std=${s.std.toFixed(2)}`;
  statsBox.textContent = [
    `model ${stats.model}`,
    `attempts to fool   ${row(stats.attempts_to_fool)}`,
    `perturbed chars    ${row(stats.perturbed_chars)}`,
    stats.question_chars ? `question length    ${row(stats.question_chars)}` : "",
  ]
    .filter(Boolean)
    .join("\n");
}

async function selectPosition(index: number): Promise<void> {
  try {
    await controller.selectScalar(index);
    renderPalette();
    renderEditor();
  } catch (error) {
    note(describe(error), true);
  }
}

async function applyGlyph(codepoint: number): Promise<void> {
  try {
    const result = await controller.chooseGlyph(codepoint);
    renderEditor();
    note(result.ok ? "edit applied" : "rejected by the server", !result.ok);
  } catch (error) {
    note(describe(error), true);
  }
}

async function copyProbe(codepoint: number): Promise<void> {
  try {
    await controller.copyProbePrompt(codepoint);
    afterCopy("probe prompt");
  } catch (error) {
    note(describe(error), true);
  }
}

function afterCopy(what: string): void {
  const copy = controller.state.lastCopy;
  if (!copy) return;
  if (copy.outcome === "clipboard") {
    note(`${what} copied to clipboard`);
    fallbackBox.hidden = true;
  } else {
    // clipboard unavailable: show the payload for manual selection
    fallbackBox.hidden = false;
    fallbackBox.value = copy.payload;
    fallbackBox.select();
    note(`clipboard unavailable; ${what} shown below`, true);
  }
}

el<HTMLInputElement>("db-file").addEventListener("change", async (event) => {
  const input = event.target as HTMLInputElement;
  const file = input.files?.[0];
  if (!file) return;
  try {
    const summary = await controller.uploadDb(
      new Uint8Array(await file.arrayBuffer()),
    );
    dbSummary.textContent = `${summary.groups} groups (${summary.merged_groups} merged, ${summary.skipped_rows} rows skipped)`;
    renderPalette();
    note("database loaded");
  } catch (error) {
    note(describe(error), true);
  }
});

el<HTMLInputElement>("char-input").addEventListener("input", async (event) => {
  const value = (event.target as HTMLInputElement).value;
  try {
    await controller.lookupChar(value);
    renderPalette();
  } catch (error) {
    note(describe(error), true);
  }
});

el<HTMLButtonElement>("show-text").addEventListener("click", () => {
  const text = el<HTMLTextAreaElement>("question-input").value;
  const id = el<HTMLInputElement>("question-id").value || "adhoc";
  controller.setQuestion(text, id);
  renderEditor();
  note("question loaded; click a character to select it");
});

el<HTMLButtonElement>("copy-text").addEventListener("click", async () => {
  await controller.copyPerturbed();
  afterCopy("perturbed text");
});

el<HTMLButtonElement>("send-llm").addEventListener("click", async () => {
  try {
    const exchange = await controller.copyPerturbed().then(() =>
      api.sendPrompt(
        el<HTMLSelectElement>("provider").value,
        controller.state.perturbedText,
      ),
    );
    responseBox.textContent =
      (exchange.response_text as string) ||
      `transport: ${exchange.transport_status}`;
  } catch (error) {
    note(describe(error), true);
  }
});

el<HTMLSelectElement>("model").addEventListener("change", (event) => {
  controller.setModel((event.target as HTMLSelectElement).value);
});

for (const verdict of ["fooled", "not_fooled", "unclear"] as const) {
  el<HTMLButtonElement>(`verdict-${verdict}`).addEventListener("click", async () => {
    try {
      const ack = await controller.recordVerdict(verdict);
      note(`attempt ${ack.attempt_number} recorded (${verdict})`);
      renderStats();
    } catch (error) {
      note(describe(error), true);
    }
  });
}

el<HTMLButtonElement>("refresh-stats").addEventListener("click", async () => {
  try {
    await controller.refreshStats();
    renderStats();
  } catch (error) {
    note(describe(error), true);
  }
});

api
  .health()
  .then((h) => {
    if (h.db_loaded) {
      dbSummary.textContent = "database already loaded";
    }
  })
  .catch(() => note("service unreachable", true));
