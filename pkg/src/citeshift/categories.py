"""Macro-journals: summing journal-level change over subject categories."""

from __future__ import annotations

import io
import math
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence, TextIO

import numpy as np
from scipy.stats import rankdata

from .ingest import ParseError, iter_csv_rows, canonical_id
from .rankings import VectorResult, rows_to_csv

CATEGORY_HEADER = ("journal", "category")
CATEGORY_COLUMNS = ("category", "i_sum_bits", "n_journals", "i_avg_bits")


@dataclass(frozen=True)
class CategoryScheme:
    """Many-to-many journal <-> category assignment."""

    assignments: Mapping[str, frozenset[str]]
    categories: Mapping[str, frozenset[str]]

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[str, str]]) -> "CategoryScheme":
        by_journal: dict[str, set[str]] = defaultdict(set)
        by_category: dict[str, set[str]] = defaultdict(set)
        for journal, category in pairs:
            by_journal[journal].add(category)
            by_category[category].add(journal)
        return cls(
            {j: frozenset(c) for j, c in by_journal.items()},
            {c: frozenset(j) for c, j in by_category.items()},
        )

    def membership_counts(self) -> dict[str, int]:
        return {j: len(c) for j, c in self.assignments.items()}


@dataclass(frozen=True)
class CategoryChange:
    category: str
    i_sum: float
    n_journals: int

    @property
    def i_avg(self) -> float:
        return self.i_sum / self.n_journals


@dataclass(frozen=True)
class MacroJournalChange:
    rows: list[CategoryChange]
    skipped: frozenset[str] = field(default_factory=frozenset)
    """Scheme journals that had no vector result."""


def parse_category_scheme(stream: TextIO | str) -> CategoryScheme:
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    pairs = []
    for lineno, fields in iter_csv_rows(stream, CATEGORY_HEADER):
        if len(fields) != 2 or not fields[1]:
            raise ParseError("expected journal,category", lineno)
        pairs.append((canonical_id(fields[0]), fields[1]))
    return CategoryScheme.from_pairs(pairs)


def read_category_scheme(path: str | Path) -> CategoryScheme:
    with open(path, encoding="utf-8", newline="") as fh:
        return parse_category_scheme(fh)


def macro_journal_change(
    vector_results: Iterable[VectorResult], scheme: CategoryScheme
) -> MacroJournalChange:
    """Sum member vector I per category.

    A journal in k categories counts fully in each of them. Journals without
    a vector result are neither summed nor counted.
    """
    scored = {r.journal: r.i_bits for r in vector_results}
    rows = []
    for category, members in scheme.categories.items():
        values = [scored[j] for j in sorted(members) if j in scored]
        if values:
            rows.append(CategoryChange(category, math.fsum(values), len(values)))
    rows.sort(key=lambda r: (-r.i_avg, r.category))
    skipped = frozenset(j for j in scheme.assignments if j not in scored)
    return MacroJournalChange(rows, skipped)


def categories_to_csv(rows: Sequence[CategoryChange]) -> str:
    return rows_to_csv(
        CATEGORY_COLUMNS, ((r.category, r.i_sum, r.n_journals, r.i_avg) for r in rows)
    )


def spearman_rho(x: Sequence[float], y: Sequence[float]) -> float:
    """Rank correlation with average ranks for ties.

    Without ties this is 1 - 6 sum d^2 / (n (n^2 - 1)); with ties it is the
    Pearson correlation of the rank vectors.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError(f"length mismatch: {x.shape} vs {y.shape}")
    n = x.size
    if n < 2:
        raise ValueError("need at least two observations")
    rx, ry = rankdata(x), rankdata(y)
    if len(np.unique(x)) == n and len(np.unique(y)) == n:
        d2 = float(np.sum((rx - ry) ** 2))
        return 1.0 - 6.0 * d2 / (n * (n * n - 1))
    rx -= rx.mean()
    ry -= ry.mean()
    denom = math.sqrt(float(rx @ rx) * float(ry @ ry))
    if denom == 0.0:
        raise ValueError("rank correlation undefined for a constant input")
    return float(rx @ ry) / denom
