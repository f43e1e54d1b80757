// Criterion under test: the full instructor loop against the real
// backend with the mock provider — upload db, look up '7', perturb one
// character, copy byte-exact text, record two attempts, watch stats
// refresh, and confirm astral-plane indices agree with the server.

import { type ChildProcess, spawn } from "node:child_process";
import { readFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { Controller } from "../src/controller.js";
import { sha256Hex } from "../src/hash.js";
import { scalars, scalarToUtf16 } from "../src/scalars.js";

const here = dirname(fileURLToPath(import.meta.url));
const repoRoot = join(here, "..", "..");
const dbFile = join(repoRoot, "src", "glyphkit", "data", "sample_homoglyphs.txt");

const port = 8900 + (process.pid % 500);
const base = `http://127.0.0.1:${port}`;

let server: ChildProcess;
const api = new ApiClient(base);
const copied: string[] = [];
const controller = new Controller(api, {
  writeText: async (text) => {
    copied.push(text);
  },
});

async function waitForHealth(): Promise<void> {
  const deadline = Date.now() + 20000;
  for (;;) {
    try {
      const health = await api.health();
      if (health.status === "ok") return;
    } catch {
      // not up yet
    }
    if (Date.now() > deadline) throw new Error("service never became healthy");
    await new Promise((resolve) => setTimeout(resolve, 200));
  }
}

beforeAll(async () => {
  const sessionFile = join(
    tmpdir(),
    `glyphkit-e2e-${process.pid}-${Date.now()}.jsonl`,
  );
  server = spawn(
    process.env.PYTHON ?? "python3",
    [
      "-m", "glyphkit", "serve",
      "--host", "127.0.0.1",
      "--port", String(port),
      "--session", sessionFile,
      "--mock",
    ],
    { cwd: repoRoot, stdio: ["ignore", "pipe", "pipe"] },
  );
  await waitForHealth();
});

afterAll(() => {
  server?.kill();
});

// astral glyph up front so UTF-16 and scalar indices drift
const QUESTION = "\u{1D7D5} jars hold 7 liters each.";
const TARGET = scalars(QUESTION).indexOf("7"); // scalar index of the plain '7'

describe("instructor loop against the live service", () => {
  it("uploads the database and reports group counts", async () => {
    const bytes = new Uint8Array(readFileSync(dbFile));
    const summary = await controller.uploadDb(bytes);
    expect(summary.groups).toBe(21);
    expect((await api.health()).db_loaded).toBe(true);
  });

  it("rejects a malformed upload with the offending line number", async () => {
    const bad = new TextEncoder().encode("0037,1D7D5\nZZZ,0038\n");
    await expect(controller.uploadDb(bad)).rejects.toMatchObject({
      code: "syntax_error",
      detail: { line_number: 2 },
    });
    // the previous database must still be live
    const relisted = await api.dbSummary();
    expect(relisted.groups).toBe(21);
  });

  it("lists homoglyphs for '7' in database order", async () => {
    const palette = await controller.lookupChar("7");
    expect(palette.length).toBeGreaterThan(0);
    expect(palette[0]?.codepoint).toBe("1D7D5");
    expect(palette.every((p) => p.codepoint !== "0037")).toBe(true);
  });

  it("perturbs one character through the server", async () => {
    controller.setQuestion(QUESTION, "q-e2e");
    const selected = await controller.selectUtf16(
      scalarToUtf16(QUESTION, TARGET),
    );
    expect(selected).toBe(TARGET);

    const result = await controller.chooseGlyph(0x1d7df); // sans-serif 7
    expect(result.ok).toBe(true);
    expect(controller.state.perturbedCount).toBe(1);
    expect(scalars(controller.state.perturbedText)[TARGET]).toBe("\u{1D7DF}");
  });

  it("copies the clipboard payload byte-for-byte from /api/perturb", async () => {
    const payload = await controller.copyPerturbed();
    expect(copied.at(-1)).toBe(payload);

    // independent request with the same plan; compare raw UTF-8 bytes
    const direct = await api.perturb(QUESTION, {
      format: "glyphkit-plan",
      version: 1,
      hash: "sha256",
      source_hash: await sha256Hex(QUESTION),
      edits: controller.state.edits,
    });
    const encoder = new TextEncoder();
    expect([...encoder.encode(payload)]).toEqual([
      ...encoder.encode(direct.text),
    ]);
  });

  it("agrees with the server about astral-plane indices", async () => {
    const perturbed = controller.state.perturbedText;
    const source = scalars(QUESTION);
    const after = scalars(perturbed);
    const changed = after
      .map((ch, i) => (ch === source[i] ? -1 : i))
      .filter((i) => i >= 0);
    expect(changed).toEqual([TARGET]); // exactly the selected scalar moved
    // UTF-16 offsets differ between the two texts at the same scalar
    expect(scalarToUtf16(perturbed, TARGET)).toBe(scalarToUtf16(QUESTION, TARGET));
    expect(perturbed.length).toBe(QUESTION.length + 1); // astral widened
  });

  it("relays the perturbed text to the mock provider unchanged", async () => {
    const exchange = await api.sendPrompt("mock", controller.state.perturbedText);
    expect(exchange.transport_status).toBe("ok");
    expect(exchange.response_text).toBe(controller.state.perturbedText);
  });

  it("records two attempts and sees the stats refresh", async () => {
    const first = await controller.recordVerdict("not_fooled");
    expect(first.attempt_number).toBe(1);
    expect(controller.state.stats).toBeNull();
    expect(controller.state.statsNote).toBeTruthy();

    const second = await controller.recordVerdict("fooled");
    expect(second.attempt_number).toBe(2);
    const stats = controller.state.stats;
    expect(stats?.attempts_to_fool).toMatchObject({ n: 1, mean: 2 });
    expect(stats?.perturbed_chars).toMatchObject({ n: 1, mean: 1 });
  });

  it("copies the probe prompt for a chosen glyph", async () => {
    const prompt = await controller.copyProbePrompt(0x38);
    expect(prompt).toBe("What is 8?");
    expect(copied.at(-1)).toBe("What is 8?");

    const astral = await controller.copyProbePrompt(0x1d7d5);
    expect([...astral].map((c) => c.codePointAt(0))).toEqual(
      [..."What is \u{1D7D5}?"].map((c) => c.codePointAt(0)),
    );
  });

  it("surfaces a duplicate attempt number as a conflict", async () => {
    await expect(
      api.recordAttempt({
        question_id: "q-e2e",
        model: "mock",
        attempt_number: 1, // already taken
        source_text: QUESTION,
        perturbed_text: QUESTION,
        plan: {
          format: "glyphkit-plan",
          version: 1,
          hash: "sha256",
          source_hash: await sha256Hex(QUESTION),
          edits: [],
        },
        perturbed_char_count: 0,
        verdict: "unclear",
      }),
    ).rejects.toMatchObject({ status: 409, code: "sequence_error" });
  });
});
