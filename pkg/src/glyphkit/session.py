"""Append-only session log of perturbation attempts plus summary statistics.

A session records every attempt to fool a model with a perturbed question.
Records land in a JSONL file whose first field tags the record kind
(``attempt``, ``probe``, ``readability``, ``bias_annotation``); unknown
fields inside records are tolerated so older logs stay loadable.

The store never trusts its caller: on write it recomputes the plan hash and
the perturbed-character count from the texts in the attempt, and it enforces
dense attempt numbering per (question, model) so "attempt 3" always means
the third try.
"""

from __future__ import annotations

import enum
import json
import math
import threading
from dataclasses import dataclass
from importlib import resources

from . import llm, perturb, probe
from .homoglyphs import Readability


class SessionError(Exception):
    """Base class for session store failures."""


class SequenceError(SessionError):
    """An attempt number breaks the dense per-(question, model) sequence."""


class IntegrityError(SessionError):
    """Stored derived values disagree with the attempt's own texts."""


class EmptySampleError(SessionError):
    """Statistics were requested over zero values."""


class NoFooledAttempts(SessionError):
    """No first-fooled sample exists; names the questions still standing."""

    def __init__(self, message: str, questions: list[str]):
        super().__init__(message)
        self.questions = tuple(questions)


@dataclass(frozen=True)
class SummaryStats:
    """Population summary of one numeric sample."""

    n: int
    min: float
    max: float
    mean: float
    std: float

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("a summary needs at least one value")
        if not self.min <= self.max:
            raise ValueError("min cannot exceed max")
        # Tiny slack for float round-off in the mean.
        eps = 1e-9 * max(1.0, abs(self.min), abs(self.max))
        if not (self.min - eps <= self.mean <= self.max + eps):
            raise ValueError("mean must lie between min and max")
        if self.std < 0:
            raise ValueError("standard deviation cannot be negative")

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "min": self.min,
            "max": self.max,
            "mean": self.mean,
            "std": self.std,
        }


def summarize(sample) -> SummaryStats:
    """Single-pass n/min/max/mean/population-std over an iterable.

    Uses Welford's update so huge samples stream without a second pass.
    The standard deviation divides by n (population form), matching how
    whole-corpus figures are usually reported. Raises
    :class:`EmptySampleError` for an empty sample.
    """
    n = 0
    mean = 0.0
    m2 = 0.0
    lo = math.inf
    hi = -math.inf
    for value in sample:
        x = float(value)
        n += 1
        delta = x - mean
        mean += delta / n
        m2 += delta * (x - mean)
        lo = min(lo, x)
        hi = max(hi, x)
    if n == 0:
        raise EmptySampleError("cannot summarize an empty sample")
    return SummaryStats(n=n, min=lo, max=hi, mean=mean, std=math.sqrt(m2 / n))


class AttemptVerdict(str, enum.Enum):
    FOOLED = "fooled"
    NOT_FOOLED = "not_fooled"
    UNCLEAR = "unclear"


@dataclass(frozen=True)
class Attempt:
    """One perturbed-question attempt against one model.

    ``source_text`` is the unperturbed question text the plan was built for;
    keeping it in the record makes every attempt independently verifiable.
    """

    question_id: str
    model: str
    attempt_number: int
    source_text: str
    perturbed_text: str
    plan: perturb.PerturbationPlan
    perturbed_char_count: int
    verdict: AttemptVerdict
    timestamp: str
    exchange: llm.Exchange | None = None
    bias_note: str | None = None

    def __post_init__(self):
        if not self.question_id:
            raise ValueError("question_id must be non-empty")
        if not self.model:
            raise ValueError("model must be non-empty")
        if self.attempt_number < 1:
            raise ValueError("attempt numbers start at 1")
        if self.perturbed_char_count < 0:
            raise ValueError("perturbed_char_count cannot be negative")


@dataclass(frozen=True)
class BiasAnnotation:
    """A flagged span of a question that might tip the model off."""

    question_id: str
    start: int
    end: int
    note: str

    def __post_init__(self):
        if not self.question_id:
            raise ValueError("question_id must be non-empty")
        if not (0 <= self.start < self.end):
            raise ValueError("annotation span must satisfy 0 <= start < end")


def attempt_to_record(attempt: Attempt) -> dict:
    record = {
        "kind": "attempt",
        "question_id": attempt.question_id,
        "model": attempt.model,
        "attempt_number": attempt.attempt_number,
        "source_text": attempt.source_text,
        "perturbed_text": attempt.perturbed_text,
        "plan": perturb.plan_to_json(attempt.plan),
        "perturbed_char_count": attempt.perturbed_char_count,
        "verdict": attempt.verdict.value,
        "timestamp": attempt.timestamp,
    }
    if attempt.exchange is not None:
        record["exchange"] = llm.exchange_to_dict(attempt.exchange)
    if attempt.bias_note is not None:
        record["bias_note"] = attempt.bias_note
    return record


def attempt_from_record(record: dict) -> Attempt:
    exchange = record.get("exchange")
    return Attempt(
        question_id=record["question_id"],
        model=record["model"],
        attempt_number=int(record["attempt_number"]),
        source_text=record["source_text"],
        perturbed_text=record["perturbed_text"],
        plan=perturb.plan_from_json(record["plan"]),
        perturbed_char_count=int(record["perturbed_char_count"]),
        verdict=AttemptVerdict(record["verdict"]),
        timestamp=record.get("timestamp", ""),
        exchange=None if exchange is None else llm.exchange_from_dict(exchange),
        bias_note=record.get("bias_note"),
    )


class SessionStore:
    """JSONL-backed store of attempts, probes, and bias annotations.

    All writes append; nothing is ever rewritten in place. A single lock
    serializes writers within the process, and each record is flushed as it
    is written so a crash loses at most the record being written.
    """

    def __init__(self, path=None):
        self.path = path
        self._lock = threading.Lock()
        self._attempts: dict[tuple[str, str], list[Attempt]] = {}
        self._bias: list[BiasAnnotation] = []
        self.probes = probe.ProbeLedger(None)
        if path is not None:
            self._replay()

    def _replay(self):
        try:
            fh = open(self.path, "r", encoding="utf-8")
        except FileNotFoundError:
            return
        with fh:
            for line_number, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    record = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise SessionError(
                        f"{self.path}:{line_number}: invalid JSON: {exc}"
                    ) from exc
                self._absorb(record)

    def _absorb(self, record: dict):
        kind = record.get("kind")
        if kind == "attempt":
            attempt = attempt_from_record(record)
            key = (attempt.question_id, attempt.model)
            self._attempts.setdefault(key, []).append(attempt)
        elif kind in ("probe", "readability"):
            self.probes._absorb(record)
        elif kind == "bias_annotation":
            self._bias.append(
                BiasAnnotation(
                    question_id=record["question_id"],
                    start=int(record["start"]),
                    end=int(record["end"]),
                    note=record.get("note", ""),
                )
            )
        # Unknown kinds pass through untouched for forward compatibility.

    def _append(self, record: dict):
        if self.path is None:
            return
        with open(self.path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")
            fh.flush()

    # -- attempts ------------------------------------------------------

    def record_attempt(self, attempt: Attempt) -> Attempt:
        """Validate and append one attempt.

        Raises :class:`SequenceError` unless the attempt number is exactly
        one past the last for its (question, model) pair, and
        :class:`IntegrityError` when the plan hash or the perturbed-character
        count disagree with the attempt's own texts.
        """
        with self._lock:
            key = (attempt.question_id, attempt.model)
            expected = len(self._attempts.get(key, [])) + 1
            if attempt.attempt_number != expected:
                raise SequenceError(
                    f"expected attempt {expected} for question "
                    f"{attempt.question_id!r} and model {attempt.model!r}, "
                    f"got {attempt.attempt_number}"
                )
            if attempt.plan.source_hash != perturb.text_hash(attempt.source_text):
                raise IntegrityError(
                    "plan source_hash does not match the attempt's source_text"
                )
            try:
                recount = perturb.count_perturbed_chars(
                    attempt.source_text, attempt.perturbed_text
                )
            except perturb.LengthMismatch as exc:
                raise IntegrityError(str(exc)) from exc
            if recount != attempt.perturbed_char_count:
                raise IntegrityError(
                    f"perturbed_char_count is {attempt.perturbed_char_count} "
                    f"but the texts differ in {recount} position(s)"
                )
            self._append(attempt_to_record(attempt))
            self._attempts.setdefault(key, []).append(attempt)
        return attempt

    def attempts(
        self,
        question_id: str | None = None,
        model: str | None = None,
    ) -> list[Attempt]:
        out = []
        for (qid, mdl), attempts in sorted(self._attempts.items()):
            if question_id is not None and qid != question_id:
                continue
            if model is not None and mdl != model:
                continue
            out.extend(attempts)
        return out

    def models(self) -> list[str]:
        return sorted({model for _, model in self._attempts})

    def question_ids(self, model: str | None = None) -> list[str]:
        return sorted(
            {
                qid
                for qid, mdl in self._attempts
                if model is None or mdl == model
            }
        )

    # -- probes and annotations ----------------------------------------

    def record_probe(self, result: probe.ProbeResult) -> probe.ProbeResult:
        with self._lock:
            record = probe.probe_to_record(result)
            self._append(record)
            self.probes._absorb(record)
        return result

    def rate_readability(self, codepoint: int, rating: Readability) -> None:
        with self._lock:
            record = probe.readability_to_record(codepoint, rating, probe.now_iso())
            self._append(record)
            self.probes._absorb(record)

    def record_bias(
        self, annotation: BiasAnnotation, question_text: str | None = None
    ) -> BiasAnnotation:
        """Append a bias annotation, bounds-checked against the text if given."""
        if question_text is not None and annotation.end > len(question_text):
            raise ValueError(
                f"annotation span ends at {annotation.end} but the text has "
                f"{len(question_text)} characters"
            )
        with self._lock:
            self._append(
                {
                    "kind": "bias_annotation",
                    "question_id": annotation.question_id,
                    "start": annotation.start,
                    "end": annotation.end,
                    "note": annotation.note,
                }
            )
            self._bias.append(annotation)
        return annotation

    def bias_annotations(self, question_id: str | None = None) -> list[BiasAnnotation]:
        return [
            a for a in self._bias if question_id is None or a.question_id == question_id
        ]

    # -- statistics ----------------------------------------------------

    def first_fooled(self, model: str) -> dict[str, Attempt]:
        """Per question, the first attempt that fooled ``model``.

        Raises :class:`NoFooledAttempts` when the model has no attempts at
        all or when some attempted question was never fooled; the exception
        names the offending questions so the caller can go finish the job.
        """
        question_ids = self.question_ids(model)
        if not question_ids:
            raise NoFooledAttempts(
                f"no attempts recorded for model {model!r}", []
            )
        fooled: dict[str, Attempt] = {}
        unfooled: list[str] = []
        for qid in question_ids:
            attempts = self._attempts[(qid, model)]
            hit = next(
                (a for a in attempts if a.verdict is AttemptVerdict.FOOLED), None
            )
            if hit is None:
                unfooled.append(qid)
            else:
                fooled[qid] = hit
        if unfooled:
            raise NoFooledAttempts(
                f"model {model!r} was never fooled on: " + ", ".join(unfooled),
                unfooled,
            )
        return fooled

    def attempts_to_fool_sample(self, model: str) -> list[int]:
        fooled = self.first_fooled(model)
        return [fooled[qid].attempt_number for qid in sorted(fooled)]

    def perturbed_chars_sample(self, model: str) -> list[int]:
        fooled = self.first_fooled(model)
        return [fooled[qid].perturbed_char_count for qid in sorted(fooled)]

    def attempts_to_fool(self, model: str) -> SummaryStats:
        """Stats over the first fooling attempt number, one value per question."""
        return summarize(self.attempts_to_fool_sample(model))

    def perturbed_chars_stats(self, model: str) -> SummaryStats:
        """Stats over perturbed characters in each question's first fooling attempt."""
        return summarize(self.perturbed_chars_sample(model))


def load_reference_stats() -> dict:
    """Bundled reference statistics for comparison in reports.

    Returns ``{"question_chars": SummaryStats, "attempts_to_fool": {model:
    SummaryStats}, "perturbed_chars": {model: SummaryStats}}``. Values are
    validated through :class:`SummaryStats` on load.
    """
    raw = json.loads(
        resources.files("glyphkit.data")
        .joinpath("reference_stats.json")
        .read_text(encoding="utf-8")
    )
    out: dict = {"question_chars": SummaryStats(**raw["question_chars"])}
    for section in ("attempts_to_fool", "perturbed_chars"):
        out[section] = {
            model: SummaryStats(**stats) for model, stats in raw[section].items()
        }
    return out
