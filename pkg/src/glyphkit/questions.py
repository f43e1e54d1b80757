"""Homework question corpus and meaning-preserving rewrite helpers.

Questions live in JSONL corpora. Two rewrites prepare a question for
perturbation without changing what it asks:

* :func:`variable_template` introduces named variables for noun phrases
  ("a nonzero rational number" becomes ``x``) so later perturbations have a
  compact token to attack.
* :func:`inject_coefficient` plants a numeric coefficient next to a variable
  (``x`` becomes ``7x``), giving the text a digit that can be swapped for a
  homoglyph.
"""

from __future__ import annotations

import enum
import json
import re
from dataclasses import dataclass, field

from .session import SummaryStats, summarize


class QuestionPrepError(Exception):
    """Base class for rewrite failures."""


class VariableNotFound(QuestionPrepError):
    """The requested variable never occurs as a standalone token."""


class AmbiguousVariable(QuestionPrepError):
    """The variable letter also appears inside words and nothing disambiguates."""


class PhraseNotFound(QuestionPrepError):
    """One or more template phrases are missing from the text."""

    def __init__(self, missing: list[str]):
        super().__init__(
            "phrase(s) not found in text: " + ", ".join(repr(p) for p in missing)
        )
        self.missing = tuple(missing)


class EmptyCorpusError(QuestionPrepError):
    """Statistics were requested over a corpus with no questions."""


@dataclass(frozen=True)
class Question:
    """One corpus entry; ``text`` is stored exactly as authored."""

    id: str
    text: str
    source: str = ""
    tags: frozenset[str] = field(default_factory=frozenset)

    def __post_init__(self):
        if not self.id:
            raise ValueError("question id must be non-empty")
        if not self.text:
            raise ValueError("question text must be non-empty")
        object.__setattr__(self, "tags", frozenset(self.tags))

    @property
    def char_count(self) -> int:
        return len(self.text)


class Stage(str, enum.Enum):
    ORIGINAL = "original"
    VARIABLES_INTRODUCED = "variables_introduced"
    COEFFICIENT_INJECTED = "coefficient_injected"


# Which parent stages each stage may derive from. Coefficients can go
# straight into an original question when it already has math tokens.
_ALLOWED_PARENTS = {
    Stage.ORIGINAL: {None},
    Stage.VARIABLES_INTRODUCED: {Stage.ORIGINAL},
    Stage.COEFFICIENT_INJECTED: {Stage.ORIGINAL, Stage.VARIABLES_INTRODUCED},
}


@dataclass(frozen=True)
class RewriteRecord:
    """One stage of a question's rewrite history."""

    question_id: str
    stage: Stage
    text: str
    parent_stage: Stage | None = None

    def __post_init__(self):
        if not self.question_id:
            raise ValueError("question_id must be non-empty")
        if not self.text:
            raise ValueError("rewrite text must be non-empty")
        if self.parent_stage not in _ALLOWED_PARENTS[self.stage]:
            raise ValueError(
                f"stage {self.stage.value} cannot derive from "
                f"{self.parent_stage.value if self.parent_stage else 'nothing'}"
            )


def load_corpus(path) -> list[Question]:
    """Read a JSONL corpus; unknown fields are tolerated and dropped."""
    questions = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_number, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{line_number}: invalid JSON: {exc}") from exc
            if not isinstance(obj, dict):
                raise ValueError(f"{path}:{line_number}: expected a JSON object")
            try:
                questions.append(
                    Question(
                        id=str(obj["id"]),
                        text=str(obj["text"]),
                        source=str(obj.get("source", "")),
                        tags=frozenset(obj.get("tags", ())),
                    )
                )
            except KeyError as exc:
                raise ValueError(
                    f"{path}:{line_number}: missing field {exc.args[0]!r}"
                ) from exc
    return questions


def save_corpus(questions: list[Question], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for q in questions:
            record = {
                "id": q.id,
                "text": q.text,
                "source": q.source,
                "tags": sorted(q.tags),
            }
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")


_MATH_SPAN = re.compile(r"\$([^$]*)\$")
_COEFFICIENT = re.compile(r"[1-9][0-9]{0,2}")


def _is_letter(ch: str) -> bool:
    return ch.isalpha()


def _standalone_positions(text: str, variable: str) -> tuple[list[int], bool]:
    """Positions where ``variable`` stands alone, plus an embedded-letter flag.

    When the text contains $...$ math spans, only occurrences inside spans
    count and word-embedded letters elsewhere are irrelevant. Without spans,
    an occurrence flanked by letters marks the variable as embedded.
    """
    spans = list(_MATH_SPAN.finditer(text))
    standalone: list[int] = []
    embedded = False
    if spans:
        for span in spans:
            content, base = span.group(1), span.start(1)
            for i, ch in enumerate(content):
                if ch != variable:
                    continue
                before = content[i - 1] if i > 0 else ""
                after = content[i + 1] if i + 1 < len(content) else ""
                if not _is_letter(before) and not _is_letter(after):
                    standalone.append(base + i)
        return standalone, False
    for i, ch in enumerate(text):
        if ch != variable:
            continue
        before = text[i - 1] if i > 0 else ""
        after = text[i + 1] if i + 1 < len(text) else ""
        if _is_letter(before) or _is_letter(after):
            embedded = True
        else:
            standalone.append(i)
    return standalone, embedded


def inject_coefficient(
    text: str,
    variable: str,
    coefficient: str,
    occurrence: int | None = None,
) -> str:
    """Insert ``coefficient`` directly before a standalone ``variable``.

    ``occurrence`` selects among standalone occurrences (0-based, negatives
    allowed); the default is the last one, which in templated questions is
    the claim clause rather than the variable introduction.

    Raises :class:`VariableNotFound` when the variable never stands alone
    and :class:`AmbiguousVariable` when it only appears inside words with no
    math delimiters to disambiguate.
    """
    if len(variable) != 1 or not variable.isalpha():
        raise ValueError(f"variable must be a single letter, got {variable!r}")
    if not _COEFFICIENT.fullmatch(coefficient):
        raise ValueError(
            f"coefficient must be 1-3 digits not starting with 0, got {coefficient!r}"
        )
    positions, embedded = _standalone_positions(text, variable)
    if not positions:
        if embedded:
            raise AmbiguousVariable(
                f"{variable!r} appears only inside words; "
                f"wrap the variable in $...$ to disambiguate"
            )
        raise VariableNotFound(f"{variable!r} does not occur as a standalone token")
    if embedded:
        raise AmbiguousVariable(
            f"{variable!r} appears both standalone and inside words; "
            f"wrap the variable in $...$ to disambiguate"
        )
    if occurrence is None:
        occurrence = -1
    try:
        at = positions[occurrence]
    except IndexError:
        raise ValueError(
            f"occurrence {occurrence} out of range; "
            f"{variable!r} stands alone {len(positions)} time(s)"
        ) from None
    return text[:at] + coefficient + text[at:]


def _pluralize(noun: str) -> str:
    if re.search(r"(s|x|z|ch|sh)$", noun):
        return noun + "es"
    if re.search(r"[^aeiou]y$", noun):
        return noun[:-1] + "ies"
    return noun + "s"


def _join_and(items: list[str]) -> str:
    if len(items) == 1:
        return items[0]
    return ", ".join(items[:-1]) + " and " + items[-1]


def _indefinite_article(phrase: str) -> str:
    return "an" if phrase[:1].lower() in "aeiou" else "a"


def variable_template(
    text: str,
    bindings: list[tuple[str, str]],
    math_delimiters: bool = False,
) -> str:
    """Rewrite a question to introduce variables for noun phrases.

    Each binding is ``(letter, phrase)``. The output is a binding sentence
    followed by the original text with each exact phrase (and a leading
    a/an/the, when present) replaced by its variable. When every phrase ends
    in the same noun the binding sentence factors it out:

        Let x and y be nonzero rational and irrational numbers respectively.

    Raises :class:`PhraseNotFound` listing every missing phrase. With
    ``math_delimiters`` the variables are wrapped in ``$...$``.
    """
    if not bindings:
        raise ValueError("at least one (variable, phrase) binding is required")
    letters = [v for v, _ in bindings]
    if len(set(letters)) != len(letters):
        raise ValueError("variable letters must be distinct")
    for letter, phrase in bindings:
        if len(letter) != 1 or not letter.isalpha():
            raise ValueError(f"variable must be a single letter, got {letter!r}")
        if not phrase.strip():
            raise ValueError("bound phrases must be non-empty")

    patterns = {}
    missing = []
    for letter, phrase in bindings:
        pattern = re.compile(
            r"(?:\b(?:a|an|the)\s+)?\b" + re.escape(phrase) + r"\b"
        )
        if not pattern.search(text):
            missing.append(phrase)
        patterns[letter] = pattern
    if missing:
        raise PhraseNotFound(missing)

    def token(letter: str) -> str:
        return f"${letter}$" if math_delimiters else letter

    claim = text
    # Longest phrase first so one phrase can never clobber part of another.
    for letter, phrase in sorted(bindings, key=lambda b: -len(b[1])):
        claim = patterns[letter].sub(token(letter), claim)

    phrases = [p for _, p in bindings]
    heads = [p.split()[-1] for p in phrases]
    names = _join_and([token(v) for v in letters])
    if len(bindings) == 1:
        phrase = phrases[0]
        intro = f"Let {names} be {_indefinite_article(phrase)} {phrase}."
    elif len(set(heads)) == 1:
        modifiers = [p.rsplit(None, 1)[0] if " " in p else "" for p in phrases]
        if all(modifiers):
            intro = (
                f"Let {names} be {_join_and(modifiers)} "
                f"{_pluralize(heads[0])} respectively."
            )
        else:
            intro = f"Let {names} be {_pluralize(heads[0])}."
    else:
        intro = f"Let {names} be {_join_and(phrases)} respectively."
    return intro + " " + claim


def question_stats(corpus: list[Question]) -> SummaryStats:
    """Character-count statistics over a corpus.

    Raises :class:`EmptyCorpusError` for an empty corpus.
    """
    if not corpus:
        raise EmptyCorpusError("cannot compute statistics over an empty corpus")
    return summarize([q.char_count for q in corpus])
