// DOM-free core of the UI. The browser layer (main.ts) only renders
// this state and forwards events; tests drive the controller directly.
//
// Two rules shape everything here:
//   - the client never transforms question text itself; every edit is
//     sent to /api/perturb and only a 200 marks it applied;
//   - all positions are Unicode scalar indices, converted from UTF-16
//     at the event boundary.

import {
  ApiClient,
  ApiError,
  AttemptAck,
  DbSummary,
  GlyphEntry,
  Plan,
  PlanEdit,
  StatsPayload,
  Violation,
} from "./api.js";
import { ClipboardLike, CopyOutcome, copyText } from "./clipboard.js";
import { sha256Hex } from "./hash.js";
import {
  formatCodepoint,
  scalarAt,
  scalarLength,
  utf16ToScalar,
} from "./scalars.js";

export interface PaletteItem extends GlyphEntry {
  effective: boolean; // readable/marginal and not recognized by the model
}

export interface UiState {
  db: DbSummary | null;
  enteredChar: string | null;
  palette: PaletteItem[];
  paletteHint: string | null;
  questionId: string;
  model: string;
  sourceText: string;
  perturbedText: string;
  perturbedCount: number;
  selected: number | null; // scalar index into the question text
  edits: PlanEdit[]; // server-confirmed edits only
  violations: Violation[];
  lastCopy: { payload: string; outcome: CopyOutcome } | null;
  stats: StatsPayload | null;
  statsNote: string | null;
}

export type ApplyResult =
  | { ok: true; text: string; count: number }
  | { ok: false; violations: Violation[] };

function freshState(): UiState {
  return {
    db: null,
    enteredChar: null,
    palette: [],
    paletteHint: null,
    questionId: "adhoc",
    model: "mock",
    sourceText: "",
    perturbedText: "",
    perturbedCount: 0,
    selected: null,
    edits: [],
    violations: [],
    lastCopy: null,
    stats: null,
    statsNote: null,
  };
}

export class Controller {
  readonly state: UiState = freshState();
  private sourceHash: Promise<string> | null = null;

  constructor(
    private api: ApiClient,
    private clipboard?: ClipboardLike,
  ) {}

  async uploadDb(bytes: Uint8Array, format = "auto"): Promise<DbSummary> {
    const summary = await this.api.uploadDb(bytes, format);
    this.state.db = summary;
    // a new db invalidates the palette, not the question text
    this.state.palette = [];
    this.state.enteredChar = null;
    return summary;
  }

  /** Palette for a single typed character; hint instead of throw on bad input. */
  async lookupChar(input: string): Promise<PaletteItem[]> {
    if (scalarLength(input) !== 1) {
      this.state.palette = [];
      this.state.paletteHint = "enter exactly one character";
      return [];
    }
    this.state.enteredChar = input;
    return this.refreshPalette(input.codePointAt(0)!);
  }

  private async refreshPalette(codepoint: number): Promise<PaletteItem[]> {
    const hex = formatCodepoint(codepoint);
    const listing = await this.api.homoglyphs(hex);
    const picks = await this.api.candidates(hex, this.state.model);
    const effective = new Set(picks.candidates.map((c) => c.codepoint));
    this.state.palette = listing.homoglyphs.map((entry) => ({
      ...entry,
      effective: effective.has(entry.codepoint),
    }));
    this.state.paletteHint = this.state.palette.length
      ? null
      : `no homoglyphs for ${String.fromCodePoint(codepoint)}`;
    return this.state.palette;
  }

  setQuestion(text: string, questionId = "adhoc"): void {
    this.state.sourceText = text;
    this.state.perturbedText = text;
    this.state.perturbedCount = 0;
    this.state.questionId = questionId;
    this.state.selected = null;
    this.state.edits = [];
    this.state.violations = [];
    this.sourceHash = null;
  }

  setModel(model: string): void {
    this.state.model = model;
  }

  /** Click handler entry point: UTF-16 offset into the displayed text. */
  async selectUtf16(offset: number): Promise<number> {
    return this.selectScalar(utf16ToScalar(this.state.perturbedText, offset));
  }

  async selectScalar(index: number): Promise<number> {
    if (index < 0 || index >= scalarLength(this.state.sourceText)) {
      throw new RangeError(`selection ${index} outside the question`);
    }
    this.state.selected = index;
    // palette follows the ORIGINAL character: replacements must share
    // its group, even after the position was already perturbed.
    await this.refreshPalette(scalarAt(this.state.sourceText, index).codePointAt(0)!);
    return index;
  }

  private async buildPlan(edits: PlanEdit[]): Promise<Plan> {
    this.sourceHash ??= sha256Hex(this.state.sourceText);
    return {
      format: "glyphkit-plan",
      version: 1,
      hash: "sha256",
      source_hash: await this.sourceHash,
      edits: [...edits].sort((a, b) => a.position - b.position),
    };
  }

  /**
   * Apply the palette choice at the selected position. The edit set is
   * re-sent as one plan; state changes only on a server 200.
   */
  async chooseGlyph(codepoint: number): Promise<ApplyResult> {
    const position = this.state.selected;
    if (position === null) throw new Error("no character selected");
    const original = scalarAt(this.state.sourceText, position);

    const edits = this.state.edits.filter((e) => e.position !== position);
    if (codepoint !== original.codePointAt(0)) {
      edits.push({
        position,
        original: formatCodepoint(original.codePointAt(0)!),
        replacement: formatCodepoint(codepoint),
      });
    } // picking the original character reverts that position

    const plan = await this.buildPlan(edits);
    try {
      const result = await this.api.perturb(this.state.sourceText, plan);
      this.state.edits = plan.edits;
      this.state.perturbedText = result.text;
      this.state.perturbedCount = result.perturbed_char_count;
      this.state.violations = [];
      return { ok: true, text: result.text, count: result.perturbed_char_count };
    } catch (error) {
      if (error instanceof ApiError && error.code === "validation_failed") {
        const detail = error.detail as { violations?: Violation[] } | null;
        this.state.violations = detail?.violations ?? [];
        return { ok: false, violations: this.state.violations };
      }
      throw error;
    }
  }

  /** "Copy text": the clipboard gets the server's rendering untouched. */
  async copyPerturbed(): Promise<string> {
    const payload = this.state.perturbedText;
    const outcome = await copyText(this.clipboard, payload);
    this.state.lastCopy = { payload, outcome };
    return payload;
  }

  async copyProbePrompt(codepoint: number): Promise<string> {
    const payload = await this.api.probePrompt(formatCodepoint(codepoint));
    const outcome = await copyText(this.clipboard, payload);
    this.state.lastCopy = { payload, outcome };
    return payload;
  }

  /** Next dense attempt number comes from the server's log, not a guess. */
  private async nextAttemptNumber(): Promise<number> {
    const listing = await this.api.listAttempts(
      this.state.questionId,
      this.state.model,
    );
    return listing.attempts.length + 1;
  }

  async recordVerdict(
    verdict: "fooled" | "not_fooled" | "unclear",
  ): Promise<AttemptAck> {
    const plan = await this.buildPlan(this.state.edits);
    const ack = await this.api.recordAttempt({
      question_id: this.state.questionId,
      model: this.state.model,
      attempt_number: await this.nextAttemptNumber(),
      source_text: this.state.sourceText,
      perturbed_text: this.state.perturbedText,
      plan,
      perturbed_char_count: this.state.perturbedCount,
      verdict,
    });
    await this.refreshStats();
    return ack;
  }

  async refreshStats(): Promise<StatsPayload | null> {
    try {
      this.state.stats = await this.api.stats(this.state.model);
      this.state.statsNote = null;
    } catch (error) {
      if (error instanceof ApiError && error.code === "no_fooled_attempts") {
        this.state.stats = null;
        this.state.statsNote = error.message;
        return null;
      }
      throw error;
    }
    return this.state.stats;
  }
}
