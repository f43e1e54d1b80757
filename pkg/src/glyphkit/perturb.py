"""Perturbation plans: positioned homoglyph substitutions over one text.

A plan records which characters of a specific source text get swapped for
which group-mates. Plans are bound to the source text by a SHA-256 hash so a
stale plan can never be applied to edited text. All positions are scalar
(codepoint) indices into the string, never byte or UTF-16 offsets.

The module also contains the digit-target suggester: a deterministic scanner
that labels every ASCII digit in a question as arithmetic (safe to leave
alone, it carries quantity meaning) or symbolic (a name-like digit that is a
cheap perturbation target).
"""

from __future__ import annotations

import enum
import hashlib
import json
import re
from dataclasses import dataclass

from .homoglyphs import (
    HomoglyphDatabase,
    format_codepoint,
    parse_codepoint,
    validate_codepoint,
)

HASH_ALGORITHM = "sha256"
PLAN_FORMAT = "glyphkit-plan"
PLAN_VERSION = 1


class PerturbError(Exception):
    """Base class for plan validation and application failures."""


class HashMismatch(PerturbError):
    """The plan was built for a different source text."""


class InvalidEdit(PerturbError):
    """An edit does not fit the text or the database; carries its position."""

    def __init__(self, message: str, position: int | None = None):
        super().__init__(message)
        self.position = position


class LengthMismatch(PerturbError):
    """Two texts compared character-wise have different scalar lengths."""


def text_hash(text: str) -> str:
    """SHA-256 hex digest of the text's UTF-8 bytes."""
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class Edit:
    """Replace the character ``original`` at ``position`` with ``replacement``."""

    position: int
    original: int
    replacement: int

    def __post_init__(self):
        if not isinstance(self.position, int) or self.position < 0:
            raise ValueError("edit position must be a non-negative int")
        validate_codepoint(self.original)
        validate_codepoint(self.replacement)


@dataclass(frozen=True)
class PerturbationPlan:
    """An ordered set of edits bound to one source text by hash."""

    source_hash: str
    edits: tuple[Edit, ...]

    def __post_init__(self):
        if not re.fullmatch(r"[0-9a-f]{64}", self.source_hash):
            raise ValueError("source_hash must be a lowercase sha256 hex digest")


@dataclass(frozen=True)
class Violation:
    """One validation finding; ``position`` is None for plan-level issues."""

    rule: str
    position: int | None
    message: str


def build_plan(
    db: HomoglyphDatabase,
    text: str,
    replacements: list[tuple[int, int]],
) -> PerturbationPlan:
    """Build a plan from (position, replacement codepoint) pairs.

    Originals are read from the text; pairs may arrive in any order. Raises
    :class:`InvalidEdit` when a pair cannot form a valid edit.
    """
    edits = []
    for position, replacement in sorted(replacements):
        if not 0 <= position < len(text):
            raise InvalidEdit(
                f"position {position} outside text of length {len(text)}", position
            )
        edits.append(Edit(position, ord(text[position]), replacement))
    plan = PerturbationPlan(text_hash(text), tuple(edits))
    problems = [v for v in validate_plan(db, text, plan) if v.rule != "source_hash"]
    if problems:
        first = problems[0]
        raise InvalidEdit(first.message, first.position)
    return plan


def validate_plan(
    db: HomoglyphDatabase, text: str, plan: PerturbationPlan
) -> list[Violation]:
    """Check a plan against text and database; return every violation.

    An empty report means :func:`apply_plan` will succeed. Nothing is
    mutated; violations are data, not exceptions.
    """
    violations: list[Violation] = []
    if plan.source_hash != text_hash(text):
        violations.append(
            Violation(
                "source_hash",
                None,
                "plan hash does not match the supplied text",
            )
        )
    previous = -1
    for edit in plan.edits:
        if edit.position <= previous:
            violations.append(
                Violation(
                    "edit_order",
                    edit.position,
                    f"edit positions must be strictly increasing "
                    f"(saw {edit.position} after {previous})",
                )
            )
        previous = edit.position
        if edit.position >= len(text):
            violations.append(
                Violation(
                    "position_range",
                    edit.position,
                    f"position {edit.position} outside text of length {len(text)}",
                )
            )
            continue
        actual = ord(text[edit.position])
        if actual != edit.original:
            violations.append(
                Violation(
                    "original_mismatch",
                    edit.position,
                    f"text has U+{actual:04X} at {edit.position}, "
                    f"plan expected U+{edit.original:04X}",
                )
            )
        if edit.replacement == edit.original:
            violations.append(
                Violation(
                    "identity_edit",
                    edit.position,
                    f"replacement equals original U+{edit.original:04X}",
                )
            )
            continue
        group = db.group_of(edit.original)
        if group is None or edit.replacement not in group.members:
            violations.append(
                Violation(
                    "same_group",
                    edit.position,
                    f"U+{edit.original:04X} and U+{edit.replacement:04X} "
                    f"are not homoglyphs of each other",
                )
            )
    return violations


def apply_plan(db: HomoglyphDatabase, text: str, plan: PerturbationPlan) -> str:
    """Apply a plan, returning the perturbed text.

    Raises :class:`HashMismatch` when the plan was built for different text
    and :class:`InvalidEdit` for the first structural violation.
    """
    violations = validate_plan(db, text, plan)
    for v in violations:
        if v.rule == "source_hash":
            raise HashMismatch(v.message)
    if violations:
        first = violations[0]
        raise InvalidEdit(first.message, first.position)
    chars = list(text)
    for edit in plan.edits:
        chars[edit.position] = chr(edit.replacement)
    return "".join(chars)


def invert_plan(plan: PerturbationPlan, perturbed_text: str) -> PerturbationPlan:
    """Plan that maps the perturbed text back to the original."""
    edits = tuple(
        Edit(e.position, e.replacement, e.original) for e in plan.edits
    )
    return PerturbationPlan(text_hash(perturbed_text), edits)


def count_perturbed_chars(original: str, perturbed: str) -> int:
    """Number of positions where the two texts differ.

    Raises :class:`LengthMismatch` when scalar lengths differ; substitution
    never changes length, so unequal lengths mean the pair is not an
    original/perturbed pair at all.
    """
    if len(original) != len(perturbed):
        raise LengthMismatch(
            f"texts differ in length ({len(original)} vs {len(perturbed)})"
        )
    return sum(1 for a, b in zip(original, perturbed) if a != b)


def plan_to_json(plan: PerturbationPlan) -> dict:
    return {
        "format": PLAN_FORMAT,
        "version": PLAN_VERSION,
        "hash": HASH_ALGORITHM,
        "source_hash": plan.source_hash,
        "edits": [
            {
                "position": e.position,
                "original": format_codepoint(e.original),
                "replacement": format_codepoint(e.replacement),
            }
            for e in plan.edits
        ],
    }


def plan_from_json(obj: dict) -> PerturbationPlan:
    if not isinstance(obj, dict):
        raise ValueError("plan must be a JSON object")
    if obj.get("format", PLAN_FORMAT) != PLAN_FORMAT:
        raise ValueError(f"not a perturbation plan: format={obj.get('format')!r}")
    if obj.get("version", PLAN_VERSION) != PLAN_VERSION:
        raise ValueError(f"unsupported plan version {obj.get('version')!r}")
    if obj.get("hash", HASH_ALGORITHM) != HASH_ALGORITHM:
        raise ValueError(f"unsupported hash algorithm {obj.get('hash')!r}")
    source_hash = obj.get("source_hash")
    if not isinstance(source_hash, str):
        raise ValueError("plan is missing source_hash")
    raw_edits = obj.get("edits")
    if not isinstance(raw_edits, list):
        raise ValueError("plan is missing its edits list")
    edits = []
    for raw in raw_edits:
        if not isinstance(raw, dict):
            raise ValueError("each edit must be a JSON object")
        position = raw.get("position")
        if not isinstance(position, int) or isinstance(position, bool):
            raise ValueError("edit position must be an integer")
        edits.append(
            Edit(
                position=position,
                original=parse_codepoint(str(raw.get("original"))),
                replacement=parse_codepoint(str(raw.get("replacement"))),
            )
        )
    return PerturbationPlan(source_hash, tuple(edits))


def save_plan(plan: PerturbationPlan, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(plan_to_json(plan), fh, ensure_ascii=False, indent=2)
        fh.write("\n")


def load_plan(path) -> PerturbationPlan:
    with open(path, "r", encoding="utf-8") as fh:
        return plan_from_json(json.load(fh))


# --- digit target suggestion -------------------------------------------------

class Role(str, enum.Enum):
    ARITHMETIC = "arithmetic"
    SYMBOLIC = "symbolic"
    # Reserved for non-digit targets; suggest_targets only emits the two
    # digit roles because effectiveness claims only exist for digits.
    OTHER = "other"


@dataclass(frozen=True)
class TargetSuggestion:
    """One digit occurrence with its inferred role."""

    position: int
    codepoint: int
    role: Role
    rationale: str


# Operators that mark a digit as taking part in actual arithmetic. '^' is
# deliberately absent: exponent digits are handled by the exponent rule, and
# the base in constructs like 0^n stays symbolic.
_OPERATORS = {"+", "-", "*", "/", "=", "−"}

_DIGIT_RUN = re.compile(r"[0-9]+")
_BRACED_EXPONENT = re.compile(r"\^\{([^{}]*)\}")
_WORD_AFTER = re.compile(r"\s*-?\s*([A-Za-z]{2,})")


def _prev_nonspace(text: str, index: int) -> str | None:
    i = index - 1
    while i >= 0 and text[i] == " ":
        i -= 1
    return text[i] if i >= 0 else None


def _next_nonspace(text: str, index: int) -> str | None:
    i = index
    while i < len(text) and text[i] == " ":
        i += 1
    return text[i] if i < len(text) else None


def _classify_run(text: str, start: int, end: int, exponent_spans: set[int]):
    """Return (role, rationale) for the digit run text[start:end]."""
    prev = _prev_nonspace(text, start)
    nxt = _next_nonspace(text, end)

    if start in exponent_spans or prev == "^":
        return Role.ARITHMETIC, "exponent position"

    word = _WORD_AFTER.match(text, end)
    if word:
        return Role.ARITHMETIC, f"quantity before unit word {word.group(1)!r}"

    if prev in _OPERATORS:
        return Role.ARITHMETIC, f"adjacent to operator {prev!r}"
    if nxt in _OPERATORS:
        return Role.ARITHMETIC, f"adjacent to operator {nxt!r}"

    if (
        end < len(text)
        and text[end].isalpha()
        and (end + 1 >= len(text) or not text[end + 1].isalpha())
    ):
        return Role.ARITHMETIC, f"coefficient of variable {text[end]!r}"

    return Role.SYMBOLIC, "no arithmetic context"


def suggest_targets(text: str) -> list[TargetSuggestion]:
    """Classify every ASCII digit in the text as arithmetic or symbolic.

    Each digit occurrence appears exactly once. Arithmetic digits come
    first, then symbolic ones, each ordered by position. Symbolic digits are
    the recommended substitution targets; arithmetic ones are listed so a
    caller can see what was ruled out and why.
    """
    exponent_spans: set[int] = set()
    for m in _BRACED_EXPONENT.finditer(text):
        exponent_spans.update(range(m.start(1), m.end(1)))

    suggestions: list[TargetSuggestion] = []
    for run in _DIGIT_RUN.finditer(text):
        role, rationale = _classify_run(text, run.start(), run.end(), exponent_spans)
        for offset, ch in enumerate(run.group(0)):
            suggestions.append(
                TargetSuggestion(
                    position=run.start() + offset,
                    codepoint=ord(ch),
                    role=role,
                    rationale=rationale,
                )
            )
    suggestions.sort(key=lambda s: (0 if s.role is Role.ARITHMETIC else 1, s.position))
    return suggestions
