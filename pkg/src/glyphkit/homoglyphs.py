"""Homoglyph group database: parsing, lookup, and canonical skeletons.

A homoglyph group is a set of Unicode scalar values that render close enough
to be mistaken for one another (the digit 7, its mathematical-bold twin, and
so on). Groups come from plain text files in one of two layouts:

* ``group_lines``: one group per line, comma-separated hex codepoints,
  ``#`` starts a comment.
* ``confusables``: one mapping per line, ``SRC ; TARGET ; TYPE`` with hex
  fields; rows where either side is a codepoint sequence are skipped.

Overlapping groups are merged transitively, so no codepoint ever belongs to
two groups. Every group carries a canonical member used to build "skeletons":
a skeleton maps each character of a text to its group's canonical form, which
makes two texts comparable modulo homoglyph swaps.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field

MAX_SCALAR = 0x10FFFF
_SURROGATE_LO = 0xD800
_SURROGATE_HI = 0xDFFF

_HEX_TOKEN = re.compile(r"[0-9A-Fa-f]{1,6}")

GROUP_LINES = "group_lines"
CONFUSABLES = "confusables"
FORMATS = (GROUP_LINES, CONFUSABLES)


class HomoglyphError(Exception):
    """Base class for database parsing and lookup failures."""


class DecodeError(HomoglyphError):
    """Raised when a database file is not valid UTF-8."""


class DatabaseSyntaxError(HomoglyphError):
    """Raised for a malformed line; carries the 1-based line number."""

    def __init__(self, message: str, line_number: int):
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


class EmptyDatabaseError(HomoglyphError):
    """Raised when a file yields no groups at all."""


def is_scalar(value: int) -> bool:
    """True when ``value`` is a Unicode scalar (in range, not a surrogate)."""
    return 0 <= value <= MAX_SCALAR and not (_SURROGATE_LO <= value <= _SURROGATE_HI)


def validate_codepoint(value: int) -> int:
    if not isinstance(value, int) or isinstance(value, bool):
        raise TypeError(f"codepoint must be an int, got {type(value).__name__}")
    if not is_scalar(value):
        raise ValueError(f"U+{value:04X} is not a Unicode scalar value")
    return value


def format_codepoint(value: int) -> str:
    """Uppercase hex with the conventional 4-digit minimum, no prefix."""
    return f"{value:04X}"


def parse_codepoint(token: str) -> int:
    """Parse a bare hex codepoint token (case-insensitive, no prefix)."""
    if not _HEX_TOKEN.fullmatch(token):
        raise ValueError(f"malformed codepoint token {token!r}")
    value = int(token, 16)
    if not is_scalar(value):
        raise ValueError(f"U+{value:04X} is not a Unicode scalar value")
    return value


class Readability(str, enum.Enum):
    """Human judgement of how cleanly a glyph renders in running text."""

    UNRATED = "unrated"
    READABLE = "readable"
    MARGINAL = "marginal"
    UNREADABLE = "unreadable"


class Recognizability(str, enum.Enum):
    """Whether a given model identified the glyph when probed."""

    UNKNOWN = "unknown"
    RECOGNIZED = "recognized"
    UNRECOGNIZED = "unrecognized"


@dataclass(frozen=True)
class HomoglyphGroup:
    """One merged group of mutually confusable codepoints.

    ``members`` keeps first-appearance order from the source file and always
    contains the canonical codepoint. The canonical member is the group's
    unique ASCII codepoint when exactly one exists, otherwise the numerically
    smallest member.
    """

    id: str
    members: tuple[int, ...]
    canonical: int

    def __post_init__(self):
        if len(self.members) < 2:
            raise ValueError("a homoglyph group needs at least two members")
        if len(set(self.members)) != len(self.members):
            raise ValueError("group members must be distinct")
        for m in self.members:
            validate_codepoint(m)
        if self.canonical not in self.members:
            raise ValueError("canonical codepoint must be a group member")

    def alternatives(self, codepoint: int) -> tuple[int, ...]:
        """Members other than ``codepoint``, in stored order."""
        return tuple(m for m in self.members if m != codepoint)


@dataclass(frozen=True)
class GlyphAnnotation:
    """Readability and per-model recognizability attached to one codepoint."""

    codepoint: int
    readability: Readability = Readability.UNRATED
    recognizability: dict[str, Recognizability] = field(default_factory=dict)

    def __post_init__(self):
        validate_codepoint(self.codepoint)
        for model in self.recognizability:
            if not model:
                raise ValueError("model names in recognizability must be non-empty")


def _pick_canonical(members: tuple[int, ...]) -> int:
    ascii_members = [m for m in members if m < 0x80]
    if len(ascii_members) == 1:
        return ascii_members[0]
    return min(members)


class HomoglyphDatabase:
    """Immutable collection of merged homoglyph groups with O(1) lookup."""

    def __init__(
        self,
        groups: tuple[HomoglyphGroup, ...],
        *,
        merged_group_count: int = 0,
        skipped_rows: int = 0,
    ):
        index: dict[int, HomoglyphGroup] = {}
        for group in groups:
            for member in group.members:
                if member in index:
                    raise ValueError(
                        f"U+{member:04X} appears in more than one group"
                    )
                index[member] = group
        self.groups = tuple(groups)
        self.merged_group_count = merged_group_count
        self.skipped_rows = skipped_rows
        self._index = index
        # str.translate wants {ord: replacement}; canonical members map to
        # themselves implicitly by being absent.
        self._skeleton_table = {
            member: chr(group.canonical)
            for group in groups
            for member in group.members
            if member != group.canonical
        }

    def __len__(self) -> int:
        return len(self.groups)

    def __contains__(self, codepoint: int) -> bool:
        return codepoint in self._index

    def group_of(self, codepoint: int) -> HomoglyphGroup | None:
        validate_codepoint(codepoint)
        return self._index.get(codepoint)

    def canonical(self, codepoint: int) -> int:
        """Canonical form of ``codepoint``; itself when ungrouped."""
        group = self.group_of(codepoint)
        return codepoint if group is None else group.canonical

    def lookup(self, codepoint: int) -> tuple[int, ...]:
        """Alternatives for ``codepoint`` (group minus itself); () if unknown."""
        group = self.group_of(codepoint)
        return () if group is None else group.alternatives(codepoint)

    def skeleton(self, text: str) -> str:
        """Replace every grouped character with its canonical form.

        Length-preserving and idempotent; characters outside every group
        pass through untouched.
        """
        return text.translate(self._skeleton_table)

    def same_skeleton(self, a: str, b: str) -> bool:
        return self.skeleton(a) == self.skeleton(b)


def lookup_homoglyphs(db: HomoglyphDatabase, codepoint: int) -> tuple[int, ...]:
    """Module-level alias for :meth:`HomoglyphDatabase.lookup`."""
    return db.lookup(codepoint)


def skeleton(db: HomoglyphDatabase, text: str) -> str:
    """Module-level alias for :meth:`HomoglyphDatabase.skeleton`."""
    return db.skeleton(text)


def _decode(data: bytes) -> str:
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise DecodeError(f"database file is not valid UTF-8: {exc}") from exc
    # A leading BOM is tolerated, nothing else is normalized.
    if text.startswith("﻿"):
        text = text[1:]
    return text


def _parse_token(token: str, line_number: int) -> int:
    try:
        return parse_codepoint(token)
    except ValueError as exc:
        raise DatabaseSyntaxError(str(exc), line_number) from exc


def _iter_group_lines(text: str):
    """Yield (line_number, members) for each group line."""
    for line_number, raw in enumerate(text.split("\n"), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        members: list[int] = []
        for token in line.split(","):
            token = token.strip()
            if not token:
                raise DatabaseSyntaxError("empty codepoint field", line_number)
            cp = _parse_token(token, line_number)
            if cp not in members:
                members.append(cp)
        if len(members) < 2:
            raise DatabaseSyntaxError(
                "a group line needs at least two distinct codepoints", line_number
            )
        yield line_number, members


def _iter_confusables(text: str, skipped: list[int]):
    """Yield (line_number, [src, target]) pairs; count skipped sequence rows."""
    for line_number, raw in enumerate(text.split("\n"), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = [f.strip() for f in line.split(";")]
        if len(fields) < 2:
            raise DatabaseSyntaxError(
                "expected 'SRC ; TARGET ; TYPE' fields", line_number
            )
        src_tokens = fields[0].split()
        target_tokens = fields[1].split()
        if not src_tokens or not target_tokens:
            raise DatabaseSyntaxError("empty SRC or TARGET field", line_number)
        src = [_parse_token(t, line_number) for t in src_tokens]
        target = [_parse_token(t, line_number) for t in target_tokens]
        if len(src) > 1 or len(target) > 1:
            # Sequence mappings cannot take part in single-character
            # substitution, so they are dropped (but counted).
            skipped[0] += 1
            continue
        if src[0] == target[0]:
            raise DatabaseSyntaxError(
                "SRC and TARGET are the same codepoint", line_number
            )
        yield line_number, [src[0], target[0]]


class _UnionFind:
    def __init__(self):
        self.parent: dict[int, int] = {}

    def add(self, item: int):
        self.parent.setdefault(item, item)

    def find(self, item: int) -> int:
        root = item
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[item] != root:
            self.parent[item], item = root, self.parent[item]
        return root

    def union(self, a: int, b: int):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[rb] = ra


def _assemble(source_groups: list[list[int]], skipped_rows: int) -> HomoglyphDatabase:
    uf = _UnionFind()
    first_seen: list[int] = []
    seen: set[int] = set()
    for members in source_groups:
        for cp in members:
            uf.add(cp)
            if cp not in seen:
                seen.add(cp)
                first_seen.append(cp)
        head = members[0]
        for cp in members[1:]:
            uf.union(head, cp)

    # Stored member order is global first-appearance order, which also fixes
    # the order groups are numbered in.
    members_by_root: dict[int, list[int]] = {}
    root_order: list[int] = []
    for cp in first_seen:
        root = uf.find(cp)
        if root not in members_by_root:
            members_by_root[root] = []
            root_order.append(root)
        members_by_root[root].append(cp)

    sources_by_root: dict[int, int] = {}
    for members in source_groups:
        root = uf.find(members[0])
        sources_by_root[root] = sources_by_root.get(root, 0) + 1

    groups = []
    for i, root in enumerate(root_order, start=1):
        members = tuple(members_by_root[root])
        groups.append(
            HomoglyphGroup(
                id=f"g{i:04d}",
                members=members,
                canonical=_pick_canonical(members),
            )
        )
    merged = sum(1 for root in root_order if sources_by_root[root] > 1)
    return HomoglyphDatabase(
        tuple(groups), merged_group_count=merged, skipped_rows=skipped_rows
    )


def parse_homoglyph_file(data: bytes, format: str = GROUP_LINES) -> HomoglyphDatabase:
    """Parse raw database bytes in the given format.

    Raises :class:`DecodeError` for non-UTF-8 input,
    :class:`DatabaseSyntaxError` (with line number) for malformed lines, and
    :class:`EmptyDatabaseError` when no groups survive parsing.
    """
    if format not in FORMATS:
        raise ValueError(f"unknown database format {format!r}")
    text = _decode(data)
    skipped = [0]
    if format == GROUP_LINES:
        source_groups = [members for _, members in _iter_group_lines(text)]
    else:
        source_groups = [pair for _, pair in _iter_confusables(text, skipped)]
    if not source_groups:
        raise EmptyDatabaseError("no homoglyph groups found in input")
    return _assemble(source_groups, skipped[0])


def detect_format(data: bytes) -> str:
    """Guess the file format: a ';' outside comments means confusables."""
    text = _decode(data)
    for raw in text.split("\n"):
        line = raw.split("#", 1)[0]
        if ";" in line:
            return CONFUSABLES
    return GROUP_LINES


def load_database(path, format: str | None = None) -> HomoglyphDatabase:
    """Read a database file from disk, auto-detecting the format by default."""
    with open(path, "rb") as fh:
        data = fh.read()
    return parse_homoglyph_file(data, format or detect_format(data))
