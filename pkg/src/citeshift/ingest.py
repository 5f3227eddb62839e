"""Reading, cleaning and aligning yearly journal-journal citation snapshots.

A snapshot is a sparse cited x citing count matrix. Rows are cited journals
(who receives), columns are citing journals (who gives). Files use the edge
list layout ``citing,cited,count``.
"""

from __future__ import annotations

import csv
import io
import re
from collections import defaultdict
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Literal, Mapping, TextIO

Axis = Literal["cited", "citing"]
AXES: tuple[str, ...] = ("cited", "citing")

SNAPSHOT_HEADER = ("citing", "cited", "count")
CHANGES_HEADER = ("old", "new", "kind")
CHANGE_KINDS = ("rename", "merge", "split")

_WS = re.compile(r"\s+")


class ParseError(ValueError):
    """Malformed input line. ``lineno`` is 1-based."""

    def __init__(self, message: str, lineno: int | None = None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


class ValidationError(ValueError):
    pass


def canonical_id(name: str) -> str:
    """Uppercase, trim and collapse internal whitespace runs."""
    cid = _WS.sub(" ", name.strip()).upper()
    if not cid:
        raise ValidationError("empty journal id")
    return cid


def check_axis(axis: str) -> str:
    if axis not in AXES:
        raise ValueError(f"axis must be one of {AXES}, got {axis!r}")
    return axis


@dataclass(frozen=True)
class CitationSnapshot:
    """One year of aggregated journal-journal citations.

    ``relations`` maps ``(cited, citing)`` to a positive count.
    """

    relations: Mapping[tuple[str, str], int]
    year: int | None = None
    registry: frozenset[str] = field(default=frozenset())
    citing_processed: frozenset[str] = field(default=frozenset())

    def __post_init__(self):
        rel = dict(self.relations)
        reg = set(self.registry)
        citing = set(self.citing_processed)
        for (cited, citer), count in rel.items():
            if count < 1:
                raise ValidationError(
                    f"relation ({cited!r}, {citer!r}) has non-positive count {count}"
                )
            reg.add(cited)
            reg.add(citer)
            citing.add(citer)
        object.__setattr__(self, "relations", rel)
        object.__setattr__(self, "registry", frozenset(reg))
        object.__setattr__(self, "citing_processed", frozenset(citing))

    @property
    def total_citations(self) -> int:
        return sum(self.relations.values())

    @cached_property
    def rows(self) -> dict[str, dict[str, int]]:
        """cited -> {citing: count}: who cites each journal."""
        out: dict[str, dict[str, int]] = defaultdict(dict)
        for (cited, citer), count in self.relations.items():
            out[cited][citer] = count
        return dict(out)

    @cached_property
    def columns(self) -> dict[str, dict[str, int]]:
        """citing -> {cited: count}: whom each journal cites."""
        out: dict[str, dict[str, int]] = defaultdict(dict)
        for (cited, citer), count in self.relations.items():
            out[citer][cited] = count
        return dict(out)

    def vector(self, journal: str, axis: Axis) -> dict[str, int]:
        """The journal's row (axis='cited') or column (axis='citing')."""
        table = self.rows if check_axis(axis) == "cited" else self.columns
        return dict(table.get(journal, {}))

    def restrict(self, journals: Iterable[str]) -> "CitationSnapshot":
        """Sub-snapshot keeping relations with both endpoints in ``journals``."""
        keep = frozenset(journals)
        rel = {k: v for k, v in self.relations.items() if k[0] in keep and k[1] in keep}
        return CitationSnapshot(rel, self.year, keep & self.registry)

    def transpose(self) -> "CitationSnapshot":
        rel = {(citer, cited): v for (cited, citer), v in self.relations.items()}
        return CitationSnapshot(rel, self.year, self.registry)

    def __eq__(self, other):
        if not isinstance(other, CitationSnapshot):
            return NotImplemented
        return (
            self.relations == other.relations
            and self.registry == other.registry
            and self.year == other.year
        )

    def __hash__(self):
        return hash((self.year, self.registry, frozenset(self.relations.items())))


@dataclass(frozen=True)
class NameChangeRecord:
    old_id: str
    new_id: str
    kind: str = "rename"

    def __post_init__(self):
        object.__setattr__(self, "old_id", canonical_id(self.old_id))
        object.__setattr__(self, "new_id", canonical_id(self.new_id))
        if self.kind not in CHANGE_KINDS:
            raise ValidationError(f"unknown change kind {self.kind!r}")
        if self.kind == "rename" and self.old_id == self.new_id:
            raise ValidationError(f"rename of {self.old_id!r} onto itself")


@dataclass(frozen=True)
class AlignedPair:
    prior: CitationSnapshot
    posterior: CitationSnapshot
    matched: frozenset[str]
    dropped: frozenset[str]
    added: frozenset[str]

    @cached_property
    def comparable_prior(self) -> CitationSnapshot:
        """Prior relations among matched journals only."""
        return self.prior.restrict(self.matched)

    @cached_property
    def comparable_posterior(self) -> CitationSnapshot:
        return self.posterior.restrict(self.matched)


@dataclass(frozen=True)
class SummaryStats:
    journals: int
    relations: int
    total_citations: int
    relations_after_filter: int
    citations_after_filter: int

    def to_dict(self) -> dict:
        return {
            "journals": self.journals,
            "relations": self.relations,
            "total_citations": self.total_citations,
            "relations_after_filter": self.relations_after_filter,
            "citations_after_filter": self.citations_after_filter,
        }


def iter_csv_rows(stream: TextIO, header: tuple[str, ...]):
    """Yield (lineno, fields) for non-comment, non-blank, non-header lines."""
    lines = ((n, line) for n, line in enumerate(stream, start=1))
    seen_data = False
    for lineno, line in lines:
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        try:
            fields = next(csv.reader([line]))
        except csv.Error as exc:
            raise ParseError(str(exc), lineno) from exc
        fields = [f.strip() for f in fields]
        if not seen_data:
            seen_data = True
            if tuple(f.lower() for f in fields) == header:
                continue
        yield lineno, fields


def parse_edge_list(stream: TextIO | str, year: int | None = None) -> CitationSnapshot:
    """Parse ``citing,cited,count`` lines into a snapshot.

    Duplicate (cited, citing) pairs are summed. The header line is optional.
    """
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    rel: dict[tuple[str, str], int] = defaultdict(int)
    for lineno, fields in iter_csv_rows(stream, SNAPSHOT_HEADER):
        if len(fields) != 3:
            raise ParseError(f"expected 3 fields, got {len(fields)}", lineno)
        citing, cited, raw = fields
        try:
            count = int(raw)
        except ValueError:
            raise ParseError(f"count {raw!r} is not an integer", lineno) from None
        if count <= 0:
            raise ValidationError(f"line {lineno}: count must be positive, got {count}")
        try:
            rel[(canonical_id(cited), canonical_id(citing))] += count
        except ValidationError as exc:
            raise ParseError(str(exc), lineno) from None
    return CitationSnapshot(dict(rel), year)


def serialize_snapshot(snapshot: CitationSnapshot, stream: TextIO) -> None:
    """Write in the edge list format, sorted by (citing, cited)."""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(SNAPSHOT_HEADER)
    for (cited, citer), count in sorted(
        snapshot.relations.items(), key=lambda kv: (kv[0][1], kv[0][0])
    ):
        writer.writerow((citer, cited, count))


def snapshot_to_text(snapshot: CitationSnapshot) -> str:
    buf = io.StringIO()
    serialize_snapshot(snapshot, buf)
    return buf.getvalue()


def read_snapshot(path: str | Path, year: int | None = None) -> CitationSnapshot:
    with open(path, encoding="utf-8", newline="") as fh:
        return parse_edge_list(fh, year)


def parse_name_changes(stream: TextIO | str) -> list[NameChangeRecord]:
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    records = []
    for lineno, fields in iter_csv_rows(stream, CHANGES_HEADER):
        if len(fields) != 3:
            raise ParseError(f"expected 3 fields, got {len(fields)}", lineno)
        old, new, kind = fields
        try:
            records.append(NameChangeRecord(old, new, kind.lower()))
        except ValidationError as exc:
            raise ParseError(str(exc), lineno) from None
    return records


def read_name_changes(path: str | Path) -> list[NameChangeRecord]:
    with open(path, encoding="utf-8", newline="") as fh:
        return parse_name_changes(fh)


def _resolve_renames(changes: Iterable[NameChangeRecord]) -> dict[str, str]:
    direct: dict[str, str] = {}
    for rec in changes:
        if rec.kind != "rename":
            continue
        if direct.get(rec.old_id, rec.new_id) != rec.new_id:
            raise ValidationError(f"conflicting renames for {rec.old_id!r}")
        direct[rec.old_id] = rec.new_id
    resolved = {}
    for start in direct:
        seen = [start]
        cur = direct[start]
        while cur in direct:
            if cur in seen:
                raise ValidationError("rename cycle: " + " -> ".join(seen + [cur]))
            seen.append(cur)
            cur = direct[cur]
        resolved[start] = cur
    return resolved


def apply_name_changes(
    snapshot: CitationSnapshot, changes: Iterable[NameChangeRecord]
) -> tuple[CitationSnapshot, list[str]]:
    """Relabel renamed journals on both axes; merges and splits are skipped.

    Chains (a->b, b->c) resolve to the final name. Returns the relabelled
    snapshot and one warning per skipped merge/split record.
    """
    changes = list(changes)
    warnings = [
        f"{rec.kind} {rec.old_id} -> {rec.new_id} not applied"
        for rec in changes
        if rec.kind != "rename"
    ]
    mapping = _resolve_renames(changes)
    if not mapping:
        return snapshot, warnings
    rel: dict[tuple[str, str], int] = defaultdict(int)
    for (cited, citer), count in snapshot.relations.items():
        rel[(mapping.get(cited, cited), mapping.get(citer, citer))] += count
    registry = frozenset(mapping.get(j, j) for j in snapshot.registry)
    return CitationSnapshot(dict(rel), snapshot.year, registry), warnings


def align_years(prior: CitationSnapshot, posterior: CitationSnapshot) -> AlignedPair:
    matched = prior.registry & posterior.registry
    return AlignedPair(
        prior=prior,
        posterior=posterior,
        matched=matched,
        dropped=prior.registry - matched,
        added=posterior.registry - matched,
    )


def drop_single_relations(snapshot: CitationSnapshot) -> CitationSnapshot:
    """Remove count == 1 cells (the "all others" bucket). Registry is kept."""
    rel = {k: v for k, v in snapshot.relations.items() if v >= 2}
    return CitationSnapshot(rel, snapshot.year, snapshot.registry)


def marginals(snapshot: CitationSnapshot, axis: Axis) -> dict[str, int]:
    """Total received (axis='cited') or given (axis='citing') per journal."""
    pos = 0 if check_axis(axis) == "cited" else 1
    out: dict[str, int] = defaultdict(int)
    for key, count in snapshot.relations.items():
        out[key[pos]] += count
    return dict(out)


def summary_stats(snapshot: CitationSnapshot) -> SummaryStats:
    filtered = [v for v in snapshot.relations.values() if v >= 2]
    return SummaryStats(
        journals=len(snapshot.registry),
        relations=len(snapshot.relations),
        total_citations=snapshot.total_citations,
        relations_after_filter=len(filtered),
        citations_after_filter=sum(filtered),
    )
