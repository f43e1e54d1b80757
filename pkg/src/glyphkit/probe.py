"""Recognizability probes: does a model see through a homoglyph?

A probe sends the fixed prompt ``What is <char>?`` for a single candidate
character and records whether the model identified it. Verdicts accumulate
in an append-only ledger where the latest verdict per (codepoint, model)
pair wins. The ledger also stores human readability ratings, and the two
together drive candidate filtering: a glyph is worth substituting only when
a human can read it and the model could not name it.
"""

from __future__ import annotations

import datetime
import enum
import json
import re
import unicodedata
from dataclasses import dataclass

from .homoglyphs import (
    GlyphAnnotation,
    HomoglyphDatabase,
    MAX_SCALAR,
    Readability,
    Recognizability,
    format_codepoint,
    parse_codepoint,
)
from .llm import Exchange

PROBE_PROMPT_TEMPLATE = "What is {}?"

_UNPRINTABLE_CATEGORIES = {"Cc", "Cn", "Cs"}

_DIGIT_NAMES = {
    "0": "zero", "1": "one", "2": "two", "3": "three", "4": "four",
    "5": "five", "6": "six", "7": "seven", "8": "eight", "9": "nine",
}


class ProbeVerdict(str, enum.Enum):
    RECOGNIZED = "recognized"
    UNRECOGNIZED = "unrecognized"
    UNCLEAR = "unclear"


class UnprintableError(Exception):
    """The codepoint has no visible rendering to ask about."""


def now_iso() -> str:
    """Current UTC time, second resolution, ISO-8601 with Z suffix."""
    return datetime.datetime.now(datetime.timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def make_probe_prompt(codepoint: int) -> str:
    """The exact probe prompt for one codepoint.

    Raises :class:`UnprintableError` for control, unassigned, and surrogate
    codepoints; there is nothing visible to ask about.
    """
    if not isinstance(codepoint, int) or isinstance(codepoint, bool):
        raise TypeError("codepoint must be an int")
    if not 0 <= codepoint <= MAX_SCALAR:
        raise ValueError(f"{codepoint} is outside the Unicode range")
    if unicodedata.category(chr(codepoint)) in _UNPRINTABLE_CATEGORIES:
        raise UnprintableError(
            f"U+{codepoint:04X} is not a printable character"
        )
    return PROBE_PROMPT_TEMPLATE.format(chr(codepoint))


@dataclass(frozen=True)
class ProbeResult:
    """Outcome of one probe of one codepoint against one model."""

    codepoint: int
    model: str
    prompt: str
    response_excerpt: str
    verdict: ProbeVerdict
    timestamp: str
    auto: bool = False

    def __post_init__(self):
        if not self.model:
            raise ValueError("probe model must be non-empty")


def probe_to_record(result: ProbeResult) -> dict:
    return {
        "kind": "probe",
        "codepoint": format_codepoint(result.codepoint),
        "model": result.model,
        "prompt": result.prompt,
        "response_excerpt": result.response_excerpt,
        "verdict": result.verdict.value,
        "timestamp": result.timestamp,
        "auto": result.auto,
    }


def probe_from_record(record: dict) -> ProbeResult:
    return ProbeResult(
        codepoint=parse_codepoint(str(record["codepoint"])),
        model=record["model"],
        prompt=record.get("prompt", ""),
        response_excerpt=record.get("response_excerpt", ""),
        verdict=ProbeVerdict(record["verdict"]),
        timestamp=record.get("timestamp", ""),
        auto=bool(record.get("auto", False)),
    )


def readability_to_record(codepoint: int, rating: Readability, timestamp: str) -> dict:
    return {
        "kind": "readability",
        "codepoint": format_codepoint(codepoint),
        "readability": rating.value,
        "timestamp": timestamp,
    }


class ProbeLedger:
    """Append-only store of probe verdicts and readability ratings.

    With a path, every record is appended to a JSONL file as it arrives and
    replayed on open; without one the ledger is in-memory only. Existing
    records are never rewritten: a new probe of the same pair simply lands
    later in the file and takes precedence on lookup.
    """

    def __init__(self, path=None):
        self.path = path
        self.records: list[dict] = []
        self._latest: dict[tuple[int, str], ProbeResult] = {}
        self._readability: dict[int, Readability] = {}
        self._models: set[str] = set()
        if path is not None:
            self._replay()

    def _replay(self):
        try:
            fh = open(self.path, "r", encoding="utf-8")
        except FileNotFoundError:
            return
        with fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                record = json.loads(line)
                self._absorb(record)

    def _absorb(self, record: dict):
        kind = record.get("kind")
        if kind == "probe":
            result = probe_from_record(record)
            self.records.append(record)
            self._latest[(result.codepoint, result.model)] = result
            self._models.add(result.model)
        elif kind == "readability":
            self.records.append(record)
            cp = parse_codepoint(str(record["codepoint"]))
            self._readability[cp] = Readability(record["readability"])
        # Other kinds (session records sharing the file) are not ours.

    def _append(self, record: dict):
        if self.path is not None:
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(record, ensure_ascii=False) + "\n")

    def record(self, result: ProbeResult) -> "ProbeLedger":
        record = probe_to_record(result)
        self._append(record)
        self._absorb(record)
        return self

    def rate(self, codepoint: int, rating: Readability) -> "ProbeLedger":
        record = readability_to_record(codepoint, rating, now_iso())
        self._append(record)
        self._absorb(record)
        return self

    def verdict(self, codepoint: int, model: str) -> ProbeVerdict | None:
        """Most recent verdict for the pair; None when never probed."""
        result = self._latest.get((codepoint, model))
        return None if result is None else result.verdict

    def recognizability(self, codepoint: int, model: str) -> Recognizability:
        verdict = self.verdict(codepoint, model)
        if verdict is ProbeVerdict.RECOGNIZED:
            return Recognizability.RECOGNIZED
        if verdict is ProbeVerdict.UNRECOGNIZED:
            return Recognizability.UNRECOGNIZED
        return Recognizability.UNKNOWN

    def readability(self, codepoint: int) -> Readability:
        return self._readability.get(codepoint, Readability.UNRATED)

    def models(self) -> list[str]:
        return sorted(self._models)

    def annotation(self, codepoint: int) -> GlyphAnnotation:
        recognizability = {
            model: self.recognizability(codepoint, model)
            for model in self.models()
            if (codepoint, model) in self._latest
        }
        return GlyphAnnotation(
            codepoint=codepoint,
            readability=self.readability(codepoint),
            recognizability=recognizability,
        )


def record_probe(ledger: ProbeLedger, result: ProbeResult) -> ProbeLedger:
    """Append one probe result; the newest verdict per pair wins on lookup."""
    return ledger.record(result)


def rate_readability(
    ledger: ProbeLedger, codepoint: int, rating: Readability
) -> ProbeLedger:
    return ledger.rate(codepoint, rating)


def auto_verdict(
    db: HomoglyphDatabase | None, codepoint: int, response_text: str
) -> ProbeVerdict:
    """Heuristic verdict from a probe response.

    The model counts as having recognized the glyph when its reply names the
    canonical character: the character itself for digits and symbols, the
    spelled-out digit name, or the bare letter as a word. Empty replies are
    unclear. Automatic verdicts should be stored with ``auto=True`` so a
    human pass can revisit them.
    """
    if not response_text.strip():
        return ProbeVerdict.UNCLEAR
    canonical = chr(db.canonical(codepoint)) if db is not None else chr(codepoint)
    if canonical in _DIGIT_NAMES:
        if canonical in response_text:
            return ProbeVerdict.RECOGNIZED
        if re.search(
            rf"\b{_DIGIT_NAMES[canonical]}\b", response_text, re.IGNORECASE
        ):
            return ProbeVerdict.RECOGNIZED
        return ProbeVerdict.UNRECOGNIZED
    if canonical.isalpha() and ord(canonical) < 0x80:
        if re.search(rf"\b{re.escape(canonical)}\b", response_text, re.IGNORECASE):
            return ProbeVerdict.RECOGNIZED
        return ProbeVerdict.UNRECOGNIZED
    return (
        ProbeVerdict.RECOGNIZED
        if canonical in response_text
        else ProbeVerdict.UNRECOGNIZED
    )


def probe_from_exchange(
    codepoint: int,
    exchange: Exchange,
    verdict: ProbeVerdict,
    *,
    auto: bool = False,
    excerpt_limit: int = 200,
) -> ProbeResult:
    """Package an LLM exchange as a probe result, trimming the response."""
    excerpt = exchange.response_text[:excerpt_limit]
    return ProbeResult(
        codepoint=codepoint,
        model=exchange.model_id,
        prompt=exchange.prompt,
        response_excerpt=excerpt,
        verdict=verdict,
        timestamp=now_iso(),
        auto=auto,
    )


def effective_candidates(
    db: HomoglyphDatabase,
    ledger: ProbeLedger,
    codepoint: int,
    model: str,
) -> list[int]:
    """Group-mates of ``codepoint`` worth substituting against ``model``.

    A candidate must be rated readable or marginal by a human AND have a
    latest probe verdict of unrecognized for this model. Unprobed and
    unclear candidates are excluded: hoping is not a strategy. Readable
    candidates sort before marginal ones, then by codepoint.
    """
    picked = [
        alt
        for alt in db.lookup(codepoint)
        if ledger.readability(alt) in (Readability.READABLE, Readability.MARGINAL)
        and ledger.verdict(alt, model) is ProbeVerdict.UNRECOGNIZED
    ]
    picked.sort(
        key=lambda cp: (
            0 if ledger.readability(cp) is Readability.READABLE else 1,
            cp,
        )
    )
    return picked
