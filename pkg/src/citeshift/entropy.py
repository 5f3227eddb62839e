"""Expected information between an a priori and an a posteriori distribution.

All logarithms are base 2, so values are in bits. Frequency inputs are
aligned first: categories new in the posterior (zero prior count) are set
aside, since they would divide by zero; categories that vanished keep a zero
posterior count and contribute ``0 log 0 = 0``. Totals ``n_p`` and ``n_q``
are taken over that aligned support, which makes

    I = (log2 n_p - log2 n_q) + (1 / n_q) * sum f_q log2(f_q / f_p)

an exact identity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Hashable, Mapping, Sequence

import numpy as np

NEGATIVE_TOLERANCE = 1e-12
PROBABILITY_TOLERANCE = 1e-9


class InformationError(ValueError):
    pass


class NoPriorSupportError(InformationError):
    pass


class NoComparableSupportError(InformationError):
    pass


class SupportDomainError(InformationError):
    """A posterior mass sits where the prior has none."""


class ChannelTooNarrowError(InformationError):
    pass


class ConsistencyError(ArithmeticError):
    """A result that must be non-negative came out clearly negative."""


@dataclass(frozen=True)
class FrequencyVector:
    entries: Mapping[Hashable, int]

    def __post_init__(self):
        entries = dict(self.entries)
        for key, value in entries.items():
            if value < 0:
                raise ValueError(f"negative count {value} for {key!r}")
        object.__setattr__(self, "entries", entries)

    @property
    def n(self) -> int:
        return sum(self.entries.values())

    @classmethod
    def coerce(cls, value) -> "FrequencyVector":
        if isinstance(value, FrequencyVector):
            return value
        if isinstance(value, Mapping):
            return cls(value)
        return cls(dict(enumerate(value)))


@dataclass(frozen=True)
class AlignedDistributions:
    support: tuple
    f_p: tuple
    f_q: tuple
    n_p: int
    n_q: int
    excluded_new: tuple


@dataclass(frozen=True)
class InformationResult:
    i_bits: float
    raw_term: float
    n_p: int
    n_q: int
    n_comparable: int

    @property
    def millibits(self) -> float:
        return self.i_bits * 1000.0


def _sort_key(category):
    return (type(category).__name__, category)


def _clamp(value: float) -> float:
    if value >= 0.0:
        return value
    if value >= -NEGATIVE_TOLERANCE:
        return 0.0
    raise ConsistencyError(f"expected information came out negative: {value!r}")


def align_support(f_p, f_q) -> AlignedDistributions:
    f_p = FrequencyVector.coerce(f_p)
    f_q = FrequencyVector.coerce(f_q)
    support = tuple(sorted((c for c, v in f_p.entries.items() if v > 0), key=_sort_key))
    if not support:
        raise NoPriorSupportError("prior distribution has no positive entry")
    fp = tuple(f_p.entries[c] for c in support)
    fq = tuple(f_q.entries.get(c, 0) for c in support)
    n_q = sum(fq)
    if n_q == 0:
        raise NoComparableSupportError("posterior has no mass on the prior support")
    excluded = tuple(
        sorted(
            (c for c, v in f_q.entries.items() if v > 0 and f_p.entries.get(c, 0) == 0),
            key=_sort_key,
        )
    )
    return AlignedDistributions(support, fp, fq, sum(fp), n_q, excluded)


def expected_information(p: Sequence[float], q: Sequence[float]) -> float:
    """Sum of q_i log2(q_i / p_i) over two probability vectors."""
    p = np.asarray(p, dtype=np.float64).ravel()
    q = np.asarray(q, dtype=np.float64).ravel()
    if p.shape != q.shape:
        raise ValueError(f"shape mismatch: {p.shape} vs {q.shape}")
    if np.any(p < 0) or np.any(q < 0):
        raise ValueError("probabilities must be non-negative")
    for name, v in (("p", p), ("q", q)):
        if abs(v.sum() - 1.0) > PROBABILITY_TOLERANCE:
            raise ValueError(f"{name} sums to {v.sum()!r}, not 1")
    mask = q > 0
    if np.any(p[mask] == 0):
        raise SupportDomainError("q > 0 where p = 0; align the support first")
    terms = q[mask] * np.log2(q[mask] / p[mask])
    return _clamp(math.fsum(terms.tolist()))


def information_from_frequencies(f_p, f_q) -> InformationResult:
    aligned = align_support(f_p, f_q)
    raw = math.fsum(
        fq * math.log2(fq / fp) for fp, fq in zip(aligned.f_p, aligned.f_q) if fq > 0
    )
    i_bits = (math.log2(aligned.n_p) - math.log2(aligned.n_q)) + raw / aligned.n_q
    n_comp = sum(1 for fq in aligned.f_q if fq > 0)
    return InformationResult(_clamp(i_bits), raw, aligned.n_p, aligned.n_q, n_comp)


def term_contributions(f_p, f_q) -> dict:
    """Signed per-category terms q_i log2(q_i / p_i); they sum to I.

    Categories on the aligned support only; vanished ones map to 0.0.
    """
    aligned = align_support(f_p, f_q)
    out = {}
    for cat, fp, fq in zip(aligned.support, aligned.f_p, aligned.f_q):
        if fq == 0:
            out[cat] = 0.0
            continue
        qi = fq / aligned.n_q
        out[cat] = qi * math.log2(qi / (fp / aligned.n_p))
    return out


def joint_information(P, Q) -> float:
    """Expected information between two multi-index probability arrays."""
    P = np.asarray(P, dtype=np.float64)
    Q = np.asarray(Q, dtype=np.float64)
    if P.shape != Q.shape:
        raise ValueError(f"shape mismatch: {P.shape} vs {Q.shape}")
    return expected_information(P.ravel(), Q.ravel())


def normalize_change(i_bits: float, n: int) -> tuple[float, float]:
    """Scale I by the channel width: returns (I / log2 N, I / N)."""
    if n < 2:
        raise ChannelTooNarrowError(f"channel too narrow: N = {n} < 2")
    return i_bits / math.log2(n), i_bits / n
