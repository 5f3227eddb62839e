"""Citation environments of a seed journal and their factor/MDS structure.

An environment is every journal holding at least ``threshold_pct`` percent
of the seed's total cited or total citing citations. Its journals are
correlated on one axis, factor analysed (principal components on the
correlation matrix, eigenvalue > 1, varimax) and mapped in two dimensions
with SMACOF on ``1 - r``.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .ingest import Axis, CitationSnapshot, check_axis, canonical_id
from .rankings import rows_to_csv

RETENTION_EPS = 1e-9


class DelineationError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Environment:
    seed: str
    threshold_pct: float
    journals: tuple[str, ...]
    submatrix: np.ndarray
    """Dense counts, rows cited and columns citing, both in ``journals`` order."""


@dataclass(frozen=True, eq=False)
class Correlation:
    journals: tuple[str, ...]
    matrix: np.ndarray
    axis: str = "cited"
    zero_variance: tuple[str, ...] = ()


@dataclass(frozen=True, eq=False)
class FactorSolution:
    journals: tuple[str, ...]
    correlation: np.ndarray
    eigenvalues: np.ndarray
    retained: int
    loadings: np.ndarray
    unrotated: np.ndarray
    rotation: np.ndarray
    explained_variance_pct: np.ndarray

    def loading_of(self, journal: str) -> np.ndarray:
        return self.loadings[self.journals.index(journal)]


@dataclass(frozen=True, eq=False)
class MdsMap:
    journals: tuple[str, ...]
    coordinates: np.ndarray
    stress: float
    iterations: int
    stress_history: tuple[float, ...] = field(default=())


def delineate(snapshot: CitationSnapshot, seed: str, threshold_pct: float = 1.0) -> Environment:
    """Collect the seed's citation environment at a percentage threshold."""
    seed = canonical_id(seed)
    if seed not in snapshot.registry:
        raise DelineationError(f"seed {seed!r} not in snapshot")
    if not 0 < threshold_pct <= 100:
        raise DelineationError(f"threshold_pct must be in (0, 100], got {threshold_pct}")
    cited_by = snapshot.rows.get(seed, {})
    cites = snapshot.columns.get(seed, {})
    total_cited, total_citing = sum(cited_by.values()), sum(cites.values())
    if total_cited == 0 and total_citing == 0:
        raise DelineationError(f"seed {seed!r} has no citations in either direction")

    members = {seed}
    for partners, total in ((cited_by, total_cited), (cites, total_citing)):
        if total == 0:
            continue
        # count / total >= pct / 100, kept in exact-ish integer form
        members.update(j for j, c in partners.items() if c * 100.0 >= threshold_pct * total)

    journals = tuple(sorted(members))
    index = {j: i for i, j in enumerate(journals)}
    sub = np.zeros((len(journals), len(journals)), dtype=np.int64)
    for cited in journals:
        for citer, count in snapshot.rows.get(cited, {}).items():
            if citer in index:
                sub[index[cited], index[citer]] = count
    return Environment(seed, float(threshold_pct), journals, sub)


def correlation_matrix(env: Environment, axis: Axis = "cited") -> Correlation:
    """Pearson r between the journals' citation profiles within the environment.

    On the cited axis a journal's profile is what it receives from each
    environment journal; on the citing axis what it gives. Constant
    profiles get r = 0 off the diagonal and are listed in ``zero_variance``.
    """
    check_axis(axis)
    n = len(env.journals)
    if n < 2:
        raise DelineationError("correlation needs at least two journals")
    X = env.submatrix.astype(np.float64)
    if axis == "citing":
        X = X.T
    X = X - X.mean(axis=1, keepdims=True)
    norms = np.sqrt(np.einsum("ij,ij->i", X, X))
    flat = norms == 0.0
    safe = np.where(flat, 1.0, norms)
    R = (X @ X.T) / np.outer(safe, safe)
    R[flat, :] = 0.0
    R[:, flat] = 0.0
    R = np.clip((R + R.T) / 2.0, -1.0, 1.0)
    np.fill_diagonal(R, 1.0)
    zero_var = tuple(j for j, f in zip(env.journals, flat) if f)
    return Correlation(env.journals, R, axis, zero_var)


def varimax(
    loadings: np.ndarray, normalize: bool = True, tol: float = 1e-6, max_iter: int = 100
) -> tuple[np.ndarray, np.ndarray]:
    """Orthogonal varimax rotation; returns (rotated loadings, rotation matrix).

    Kaiser's pairwise planar rotations: each sweep turns every pair of
    factors by the closed-form angle that maximises the criterion, until
    no angle exceeds ``tol`` radians.
    """
    L = np.array(loadings, dtype=np.float64)
    p, k = L.shape
    if k < 2:
        return L, np.eye(k)
    h = np.sqrt(np.sum(L**2, axis=1))
    h_safe = np.where(h > 0, h, 1.0)
    if normalize:
        L = L / h_safe[:, None]
    R = np.eye(k)
    for _ in range(max_iter):
        turned = False
        for a in range(k - 1):
            for b in range(a + 1, k):
                x, y = L[:, a], L[:, b]
                u, v = x * x - y * y, 2.0 * x * y
                A, B = u.sum(), v.sum()
                num = 2.0 * np.sum(u * v) - 2.0 * A * B / p
                den = np.sum(u * u - v * v) - (A * A - B * B) / p
                phi = math.atan2(num, den) / 4.0
                if abs(phi) < tol:
                    continue
                turned = True
                c, s = math.cos(phi), math.sin(phi)
                G = np.array([[c, -s], [s, c]])
                L[:, [a, b]] = L[:, [a, b]] @ G
                R[:, [a, b]] = R[:, [a, b]] @ G
        if not turned:
            break
    if normalize:
        L = L * h_safe[:, None]
    return L, R


def _orient(columns: np.ndarray) -> np.ndarray:
    """Sign per column so that the largest-magnitude entry is positive."""
    idx = np.argmax(np.abs(columns), axis=0)
    signs = np.sign(columns[idx, np.arange(columns.shape[1])])
    signs[signs == 0] = 1.0
    return signs


def factor_solution(
    correlation: Correlation | np.ndarray,
    journals: Sequence[str] | None = None,
    rotate: bool = True,
) -> FactorSolution:
    """Principal components of a correlation matrix, eigenvalue > 1 kept.

    Loadings are eigenvectors scaled by sqrt(eigenvalue), varimax rotated
    when two or more factors are kept. Rotated factors are ordered by the
    variance they carry; ``explained_variance_pct`` follows that order.
    """
    if isinstance(correlation, Correlation):
        journals = correlation.journals if journals is None else journals
        R = correlation.matrix
    else:
        R = np.asarray(correlation, dtype=np.float64)
    if R.ndim != 2 or R.shape[0] != R.shape[1]:
        raise ValueError(f"correlation must be square, got {R.shape}")
    if not np.allclose(R, R.T, atol=1e-12, rtol=0.0):
        raise ValueError("correlation matrix is not symmetric")
    n = R.shape[0]
    journals = tuple(journals) if journals is not None else tuple(f"V{i}" for i in range(n))

    vals, vecs = np.linalg.eigh(R)
    order = np.argsort(-vals, kind="stable")
    vals, vecs = vals[order], vecs[:, order]
    retained = int(np.sum(vals > 1.0 + RETENTION_EPS))

    unrotated = vecs[:, :retained] * np.sqrt(vals[:retained])
    unrotated = unrotated * _orient(unrotated)
    if rotate and retained >= 2:
        loadings, rotation = varimax(unrotated)
        ss = np.sum(loadings**2, axis=0)
        perm = np.argsort(-ss, kind="stable")
        signs = _orient(loadings[:, perm])
        loadings = loadings[:, perm] * signs
        rotation = rotation[:, perm] * signs
    else:
        loadings, rotation = unrotated.copy(), np.eye(retained)
    explained = np.sum(loadings**2, axis=0) / n * 100.0
    return FactorSolution(
        journals=journals,
        correlation=R,
        eigenvalues=vals,
        retained=retained,
        loadings=loadings,
        unrotated=unrotated,
        rotation=rotation,
        explained_variance_pct=explained,
    )


def central_tendency(solution: FactorSolution, factor_index: int) -> str:
    """Journal with the largest absolute loading on a factor."""
    if solution.retained == 0:
        raise DelineationError("no factors retained")
    if not 0 <= factor_index < solution.retained:
        raise IndexError(f"factor {factor_index} out of range 0..{solution.retained - 1}")
    col = np.abs(solution.loadings[:, factor_index])
    best = col.max()
    return min(j for j, v in zip(solution.journals, col) if v == best)


def interfactorial_complexity(
    solution: FactorSolution, journal: str, loading_threshold: float = 0.5
) -> frozenset[int]:
    """Factors on which ``journal`` loads at or above the threshold in absolute value."""
    if not 0 < loading_threshold < 1:
        raise ValueError("loading_threshold must lie in (0, 1)")
    row = solution.loading_of(journal)
    return frozenset(int(i) for i in np.flatnonzero(np.abs(row) >= loading_threshold))


def is_complex(solution: FactorSolution, journal: str, loading_threshold: float = 0.5) -> bool:
    return len(interfactorial_complexity(solution, journal, loading_threshold)) >= 2


def _distances(X: np.ndarray) -> np.ndarray:
    diff = X[:, None, :] - X[None, :, :]
    return np.sqrt(np.sum(diff**2, axis=-1))


def normalized_stress(X: np.ndarray, D: np.ndarray) -> float:
    """sum (d_ij - delta_ij)^2 / sum delta_ij^2 over pairs i < j."""
    iu = np.triu_indices(D.shape[0], k=1)
    target = D[iu]
    denom = float(np.sum(target**2))
    if denom == 0.0:
        return 0.0
    return float(np.sum((_distances(X)[iu] - target) ** 2)) / denom


def classical_scaling(D: np.ndarray, dim: int = 2) -> np.ndarray:
    """Torgerson scaling: top eigenvectors of the double-centred squared distances."""
    n = D.shape[0]
    J = np.eye(n) - np.full((n, n), 1.0 / n)
    B = -0.5 * J @ (D**2) @ J
    vals, vecs = np.linalg.eigh((B + B.T) / 2.0)
    order = np.argsort(-vals, kind="stable")[:dim]
    X = vecs[:, order] * np.sqrt(np.clip(vals[order], 0.0, None))
    return X * _orient(X)


def smacof(
    D: np.ndarray,
    init: np.ndarray | None = None,
    max_iter: int = 500,
    tol: float = 1e-8,
    journals: Sequence[str] | None = None,
) -> MdsMap:
    """Metric SMACOF with unit weights via the Guttman transform."""
    D = np.asarray(D, dtype=np.float64)
    n = D.shape[0]
    X = classical_scaling(D) if init is None else np.array(init, dtype=np.float64)
    history = [normalized_stress(X, D)]
    iterations = 0
    for iterations in range(1, max_iter + 1):
        if history[-1] == 0.0:
            iterations -= 1
            break
        dist = _distances(X)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(dist > 0, D / dist, 0.0)
        B = -ratio
        np.fill_diagonal(B, 0.0)
        np.fill_diagonal(B, -B.sum(axis=1))
        X = B @ X / n
        history.append(normalized_stress(X, D))
        prev, cur = history[-2], history[-1]
        if prev - cur < tol * prev:
            break
    journals = tuple(journals) if journals is not None else tuple(f"V{i}" for i in range(n))
    return MdsMap(journals, X, history[-1], iterations, tuple(history))


def mds_embed(correlation: Correlation | np.ndarray, journals: Sequence[str] | None = None) -> MdsMap:
    """Two-dimensional map of a correlation matrix using 1 - r dissimilarities."""
    if isinstance(correlation, Correlation):
        journals = correlation.journals if journals is None else journals
        R = correlation.matrix
    else:
        R = np.asarray(correlation, dtype=np.float64)
    if R.shape[0] < 3:
        raise DelineationError("a 2-D map needs at least three journals")
    if not np.allclose(R, R.T, atol=1e-12, rtol=0.0):
        raise ValueError("correlation matrix is not symmetric")
    D = 1.0 - R
    np.fill_diagonal(D, 0.0)
    return smacof(D, journals=journals)


def congruence(a: np.ndarray, b: np.ndarray) -> float:
    """Tucker's congruence coefficient between two loading vectors."""
    denom = math.sqrt(float(a @ a) * float(b @ b))
    return 0.0 if denom == 0.0 else float(a @ b) / denom


def match_factors(
    prior: FactorSolution, posterior: FactorSolution, exclude: Sequence[str] = ()
) -> dict[int, int]:
    """One-to-one prior -> posterior factor matching by loading congruence.

    Computed over journals present in both solutions, minus ``exclude``.
    Greedy on descending |congruence|; pairs with no positive overlap stay
    unmatched.
    """
    common = sorted((set(prior.journals) & set(posterior.journals)) - set(exclude))
    if not common or prior.retained == 0 or posterior.retained == 0:
        return {}
    pi = [prior.journals.index(j) for j in common]
    qi = [posterior.journals.index(j) for j in common]
    A, B = prior.loadings[pi], posterior.loadings[qi]
    scores = [
        (abs(congruence(A[:, a], B[:, b])), a, b)
        for a in range(prior.retained)
        for b in range(posterior.retained)
    ]
    scores.sort(key=lambda t: (-t[0], t[1], t[2]))
    out: dict[int, int] = {}
    used: set[int] = set()
    for score, a, b in scores:
        if score <= 0.0 or a in out or b in used:
            continue
        out[a] = b
        used.add(b)
    return out


@dataclass(frozen=True)
class SeedShift:
    seed: str
    prior_retained: int
    posterior_retained: int
    prior_factor: int
    prior_loading: float
    matched_factor: int | None
    loading_on_matched: float
    new_factors: tuple[int, ...]
    new_factor: int | None
    new_loading: float

    @property
    def branched_off(self) -> bool:
        return self.new_factor is not None and self.new_loading > abs(self.loading_on_matched)

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__} | {
            "branched_off": self.branched_off
        }


def track_seed(prior: FactorSolution, posterior: FactorSolution, seed: str) -> SeedShift:
    """Follow the seed from its dominant prior factor into the posterior solution.

    The prior factor is matched into the posterior by congruence over the
    other shared journals. Posterior factors that match no prior factor are
    new; the seed's best loading among them is reported.
    """
    if prior.retained == 0:
        raise DelineationError("prior solution retains no factors")
    prior_row = prior.loading_of(seed)
    pf = int(np.argmax(np.abs(prior_row)))
    matching = match_factors(prior, posterior, exclude=[seed])
    post_row = posterior.loading_of(seed) if seed in posterior.journals else np.zeros(posterior.retained)
    mf = matching.get(pf)
    on_matched = 0.0 if mf is None else float(post_row[mf])
    new = tuple(b for b in range(posterior.retained) if b not in set(matching.values()))
    nf, nl = None, 0.0
    if new:
        nf = max(new, key=lambda b: (abs(post_row[b]), -b))
        nl = float(post_row[nf])
    return SeedShift(
        seed=seed,
        prior_retained=prior.retained,
        posterior_retained=posterior.retained,
        prior_factor=pf,
        prior_loading=float(prior_row[pf]),
        matched_factor=mf,
        loading_on_matched=on_matched,
        new_factors=new,
        new_factor=nf,
        new_loading=nl,
    )


def factor_report_csv(solution: FactorSolution) -> str:
    cols = ["journal"] + [f"factor_{i}" for i in range(solution.retained)]
    rows = [["explained_variance_pct"] + [float(v) for v in solution.explained_variance_pct]]
    rows += [[j] + [float(v) for v in solution.loadings[i]] for i, j in enumerate(solution.journals)]
    return rows_to_csv(cols, rows)


def _primary_factor(solution: FactorSolution, i: int) -> tuple[int | None, float | None]:
    if solution.retained == 0:
        return None, None
    row = solution.loadings[i]
    f = int(np.argmax(np.abs(row)))
    return f, float(row[f])


def map_csv(solution: FactorSolution, mds: MdsMap) -> str:
    rows = []
    for i, j in enumerate(mds.journals):
        f, loading = _primary_factor(solution, solution.journals.index(j))
        x, y = (float(v) for v in mds.coordinates[i])
        rows.append([j, x, y, f, loading])
    return rows_to_csv(("journal", "x", "y", "factor", "loading"), rows)


def _dot_quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def map_dot(
    solution: FactorSolution,
    mds: MdsMap,
    name: str = "environment",
    edge_threshold: float = 0.5,
    scale: float = 5.0,
) -> str:
    """Undirected DOT graph: positions from the map, fill colour from the factor.

    Edges join journals with r >= ``edge_threshold``.
    """
    buf = io.StringIO()
    buf.write(f"graph {_dot_quote(name)} {{\n")
    buf.write(f"  graph [stress={_dot_quote(f'{mds.stress:.6g}')}];\n")
    buf.write('  node [shape=circle, style=filled, colorscheme=set312, fontsize=8];\n')
    for i, j in enumerate(mds.journals):
        f, loading = _primary_factor(solution, solution.journals.index(j))
        x, y = (float(v) * scale for v in mds.coordinates[i])
        attrs = [f'pos="{x:.4f},{y:.4f}!"']
        if f is not None:
            attrs += [f"factor={f}", f"fillcolor={f % 12 + 1}", f'loading="{loading:.5f}"']
        buf.write(f"  {_dot_quote(j)} [{', '.join(attrs)}];\n")
    R = solution.correlation
    idx = [solution.journals.index(j) for j in mds.journals]
    for a in range(len(idx)):
        for b in range(a + 1, len(idx)):
            r = float(R[idx[a], idx[b]])
            if r >= edge_threshold:
                buf.write(
                    f"  {_dot_quote(mds.journals[a])} -- {_dot_quote(mds.journals[b])}"
                    f' [weight="{r:.4f}"];\n'
                )
    buf.write("}\n")
    return buf.getvalue()
