"""Journal rankings by entropy production between two aligned years.

Four indicator families over an :class:`~citeshift.ingest.AlignedPair`:

* file level: each journal's signed share (delta I) of the change in the
  distribution of total citations;
* vector level: I between a journal's own prior and posterior citation
  vectors, with the comparable window N;
* the same vector values normalized by log2 N and by N;
* matrix level: the raw term sum f_q log2(f_q / f_p) per journal, which is
  additive over the whole matrix because n_p and n_q are constants there.

Only journals matched across both years take part; relations touching a
dropped or added journal are left out of every comparison.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

from .entropy import (
    InformationError,
    information_from_frequencies,
    normalize_change,
    term_contributions,
)
from .ingest import AlignedPair, Axis, check_axis, marginals


class VectorResult(NamedTuple):
    journal: str
    i_bits: float
    n_comparable: int
    raw_term: float = 0.0


class VectorRanking(NamedTuple):
    results: list[VectorResult]
    omitted: dict[str, str]


class NormalizedResult(NamedTuple):
    journal: str
    i_bits: float
    n_comparable: int
    i_per_log2n: float
    i_per_n: float


class NormalizedRanking(NamedTuple):
    by_log2n: list[NormalizedResult]
    by_n: list[NormalizedResult]
    omitted: list[str]


class MatrixTerm(NamedTuple):
    journal: str
    term: float


@dataclass(frozen=True)
class ChangeEntry:
    journal: str
    delta_i: float
    vector_i: float | None
    n_comparable: int
    i_per_log2n: float | None
    i_per_n: float | None
    matrix_term: float


@dataclass(frozen=True)
class ChangeReport:
    axis: str
    file_i_bits: float
    entries: tuple[ChangeEntry, ...]
    excluded: dict[str, str] = field(default_factory=dict)
    dropped: int = 0
    added: int = 0

    @property
    def file_i_millibits(self) -> float:
        return self.file_i_bits * 1000.0

    @property
    def positive_contributors(self) -> int:
        return count_positive_contributors(self)

    def vector_ranking(self) -> list[VectorResult]:
        scored = [
            VectorResult(e.journal, e.vector_i, e.n_comparable)
            for e in self.entries
            if e.vector_i is not None
        ]
        return _ranked(scored, lambda r: r.i_bits)


def _ranked(items: Iterable, value) -> list:
    # value descending, journal id ascending
    return sorted(items, key=lambda it: (-value(it), it.journal))


def file_level_change(pair: AlignedPair, axis: Axis = "cited") -> tuple[float, dict[str, float]]:
    """File-level I over the marginal distribution, with per-journal delta I.

    Journals whose prior marginal is zero are new on this axis and carry no
    delta. The deltas sum to the returned total.
    """
    check_axis(axis)
    prior = marginals(pair.comparable_prior, axis)
    post = marginals(pair.comparable_posterior, axis)
    result = information_from_frequencies(prior, post)
    deltas = term_contributions(prior, post)
    return result.i_bits, deltas


def count_positive_contributors(report: ChangeReport) -> int:
    return sum(1 for e in report.entries if e.delta_i > 0)


def vector_change_ranking(pair: AlignedPair, axis: Axis = "cited") -> VectorRanking:
    """I per journal between its prior and posterior axis vectors.

    For axis='cited' the vector is the journal's row (who cites it); for
    'citing' its column. Journals without comparable support are returned
    in ``omitted`` with the reason.
    """
    check_axis(axis)
    prior, post = pair.comparable_prior, pair.comparable_posterior
    results, omitted = [], {}
    for journal in sorted(pair.matched):
        try:
            res = information_from_frequencies(
                prior.vector(journal, axis), post.vector(journal, axis)
            )
        except InformationError as exc:
            omitted[journal] = str(exc)
            continue
        results.append(VectorResult(journal, res.i_bits, res.n_comparable, res.raw_term))
    return VectorRanking(_ranked(results, lambda r: r.i_bits), omitted)


def normalized_ranking(vector_results: Sequence[VectorResult]) -> NormalizedRanking:
    rows, omitted = [], []
    for r in vector_results:
        if r.n_comparable < 2:
            omitted.append(r.journal)
            continue
        per_log, per_n = normalize_change(r.i_bits, r.n_comparable)
        rows.append(NormalizedResult(r.journal, r.i_bits, r.n_comparable, per_log, per_n))
    return NormalizedRanking(
        _ranked(rows, lambda r: r.i_per_log2n),
        _ranked(rows, lambda r: r.i_per_n),
        sorted(omitted),
    )


def _matrix_term(prior_vec: dict[str, int], post_vec: dict[str, int]) -> float:
    return math.fsum(
        fq * math.log2(fq / prior_vec[k])
        for k, fq in sorted(post_vec.items())
        if fq > 0 and prior_vec.get(k, 0) > 0
    )


def matrix_term_ranking(pair: AlignedPair, axis: Axis = "cited") -> list[MatrixTerm]:
    """Raw sum f_q log2(f_q / f_p) per journal over cells present in both years."""
    check_axis(axis)
    prior, post = pair.comparable_prior, pair.comparable_posterior
    terms = [
        MatrixTerm(j, _matrix_term(prior.vector(j, axis), post.vector(j, axis)))
        for j in sorted(pair.matched)
    ]
    return _ranked(terms, lambda t: t.term)


def build_change_report(pair: AlignedPair, axis: Axis = "cited") -> ChangeReport:
    """All four indicator families for one axis, entries sorted by delta I."""
    file_i, deltas = file_level_change(pair, axis)
    vectors = vector_change_ranking(pair, axis)
    by_journal = {r.journal: r for r in vectors.results}
    terms = {t.journal: t.term for t in matrix_term_ranking(pair, axis)}

    entries = []
    for journal, delta in deltas.items():
        vec = by_journal.get(journal)
        per_log = per_n = None
        if vec is not None and vec.n_comparable >= 2:
            per_log, per_n = normalize_change(vec.i_bits, vec.n_comparable)
        entries.append(
            ChangeEntry(
                journal=journal,
                delta_i=delta,
                vector_i=None if vec is None else vec.i_bits,
                n_comparable=0 if vec is None else vec.n_comparable,
                i_per_log2n=per_log,
                i_per_n=per_n,
                matrix_term=terms.get(journal, 0.0),
            )
        )
    excluded = {j: "no prior marginal on this axis" for j in sorted(pair.matched - deltas.keys())}
    return ChangeReport(
        axis=axis,
        file_i_bits=file_i,
        entries=tuple(_ranked(entries, lambda e: e.delta_i)),
        excluded=excluded,
        dropped=len(pair.dropped),
        added=len(pair.added),
    )


REPORT_COLUMNS = ("journal", "delta_i_bits", "vector_i_bits", "n", "i_per_log2n", "i_per_n", "matrix_term")


def _entry_row(e: ChangeEntry) -> dict:
    return {
        "journal": e.journal,
        "delta_i_bits": e.delta_i,
        "vector_i_bits": e.vector_i,
        "n": e.n_comparable,
        "i_per_log2n": e.i_per_log2n,
        "i_per_n": e.i_per_n,
        "matrix_term": e.matrix_term,
    }


def report_to_dict(report: ChangeReport) -> dict:
    return {
        "axis": report.axis,
        "file_i_bits": report.file_i_bits,
        "file_i_millibits": report.file_i_millibits,
        "positive_contributors": report.positive_contributors,
        "dropped_journals": report.dropped,
        "added_journals": report.added,
        "excluded_journals": len(report.excluded),
        "entries": [_entry_row(e) for e in report.entries],
    }


def report_to_json(report: ChangeReport) -> str:
    return json.dumps(report_to_dict(report), indent=2) + "\n"


def rows_to_csv(columns: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow(["" if v is None else (repr(v) if isinstance(v, float) else v) for v in row])
    return buf.getvalue()


def report_to_csv(report: ChangeReport) -> str:
    return rows_to_csv(
        REPORT_COLUMNS,
        ([_entry_row(e)[c] for c in REPORT_COLUMNS] for e in report.entries),
    )
