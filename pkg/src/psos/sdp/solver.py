"""Low-rank augmented-Lagrangian coordinate ascent for the partial SOS relaxation."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .._accel import USE_NUMBA
from ..model import GraphModel, RegionCovering
from .catalog import EMPTY, ConstraintCatalog, GramIndex, compile_constraints
from .kernels import sweep
from .subproblem import LocalSystem

log = logging.getLogger(__name__)

LINEAR_FORMS = ("mixed", "vertex", "edge")
MULTIPLIER_STEPS = ("owner", "shared", "every")


class SolverDivergence(RuntimeError):
    pass


@dataclass(frozen=True)
class SolverConfig:
    rank: int = 10
    rho: float = 1.0
    tol: float = 1e-4
    max_sweeps: int = 500
    seed: int = 0
    # how the objective is split between vertex and pair vectors
    linear_form: str = "vertex"
    # which variable updates take the multiplier step of a shared equality
    multiplier_step: str = "owner"
    divergence_window: int = 50
    # residual below which the divergence guard stays silent
    divergence_floor: float = 1e-2
    use_numba: bool | None = None

    def __post_init__(self):
        if self.rank < 2:
            raise ValueError("rank must be at least 2")
        if not (self.rho > 0 and self.tol > 0 and self.max_sweeps > 0):
            raise ValueError("rho, tol and max_sweeps must be positive")
        if self.linear_form not in LINEAR_FORMS:
            raise ValueError(f"linear_form must be one of {LINEAR_FORMS}")
        if self.multiplier_step not in MULTIPLIER_STEPS:
            raise ValueError(f"multiplier_step must be one of {MULTIPLIER_STEPS}")


@dataclass(eq=False)
class GramState:
    """Rank-r Gram vectors, one row per index of ``index``, plus multipliers."""

    index: GramIndex
    vectors: np.ndarray
    multipliers: np.ndarray | None = None

    @property
    def rank(self) -> int:
        return self.vectors.shape[1]

    def copy(self) -> "GramState":
        lam = None if self.multipliers is None else self.multipliers.copy()
        return GramState(self.index, self.vectors.copy(), lam)

    def inner(self, s: int, t: int) -> float:
        return float(self.vectors[s] @ self.vectors[t])

    def bias(self) -> np.ndarray:
        """<sigma_empty, sigma_s> for every row s."""
        return self.vectors @ self.vectors[EMPTY]


@dataclass(frozen=True)
class SweepRecord:
    sweep: int
    objective: float
    residual: float
    delta: float


@dataclass
class SolveResult:
    state: GramState
    trace: list[SweepRecord] = field(default_factory=list)
    converged: bool = False

    @property
    def sweeps(self) -> int:
        return len(self.trace)

    def trace_csv(self) -> str:
        lines = ["sweep,objective,residual,delta"]
        lines += [f"{t.sweep},{t.objective!r},{t.residual!r},{t.delta!r}" for t in self.trace]
        return "\n".join(lines) + "\n"


def init_state(cov: RegionCovering, model: GraphModel, config: SolverConfig,
               index: GramIndex | None = None) -> GramState:
    """sigma_empty = e_1; every other vector uniform on the sphere, in row order."""
    if index is None:
        index = GramIndex.from_covering(cov, model.num_vertices)
    rng = np.random.default_rng(config.seed)
    vec = rng.standard_normal((index.size, config.rank))
    vec[EMPTY] = 0.0
    vec[EMPTY, 0] = 1.0
    vec /= np.linalg.norm(vec, axis=1, keepdims=True)
    return GramState(index, vec)


@dataclass(frozen=True, eq=False)
class LinearTerms:
    """c_s = sum_q coef[q] * sigma[idx[q]] for q in ptr[s]:ptr[s+1]."""

    ptr: np.ndarray
    idx: np.ndarray
    coef: np.ndarray

    def of(self, s: int, vectors: np.ndarray) -> np.ndarray:
        sl = slice(self.ptr[s], self.ptr[s + 1])
        return self.coef[sl] @ vectors[self.idx[sl]]


def linear_terms(model: GraphModel, index: GramIndex, form: str = "vertex") -> LinearTerms:
    """Coefficients of the objective's linear part for every Gram vector.

    ``mixed``: vertex i sees sum_t w_it sigma_t + h_i sigma_empty, a covered
    pair (a, b) sees w_ab sigma_empty + h_a sigma_b + h_b sigma_a.
    ``vertex``: the gradient of the relaxation objective written on vertex
    vectors only (pairs see nothing).
    ``edge``: covered edges are written as <sigma_ab, sigma_empty>; vertices
    keep their field and any uncovered couplings.
    """
    n = index.num_vertices
    terms: list[list[tuple[int, float]]] = [[] for _ in range(index.size)]
    for i in range(n):
        h = float(model.vertex_weights[i])
        if h != 0.0:
            terms[index.vertex(i)].append((EMPTY, h))
    for (i, j), w in zip(model.edges.tolist(), model.edge_weights.tolist()):
        covered = index.has_pair(i, j)
        if w == 0.0:
            continue
        if form == "edge" and covered:
            terms[index.pair(i, j)].append((EMPTY, w))
            continue
        terms[index.vertex(i)].append((index.vertex(j), w))
        terms[index.vertex(j)].append((index.vertex(i), w))
        if form == "mixed" and covered:
            terms[index.pair(i, j)].append((EMPTY, w))
    if form == "mixed":
        for (a, b) in index.pairs:
            s = index.pair(a, b)
            ha, hb = float(model.vertex_weights[a]), float(model.vertex_weights[b])
            if ha != 0.0:
                terms[s].append((index.vertex(b), ha))
            if hb != 0.0:
                terms[s].append((index.vertex(a), hb))
    ptr = np.zeros(index.size + 1, dtype=np.int64)
    ptr[1:] = np.cumsum([len(t) for t in terms])
    idx = np.array([q for t in terms for q, _ in t], dtype=np.int64)
    coef = np.array([w for t in terms for _, w in t], dtype=np.float64)
    return LinearTerms(ptr, idx, coef)


def assemble_local(s: int, state: GramState, model: GraphModel, catalog: ConstraintCatalog,
                   lin: LinearTerms | None = None, form: str = "vertex") -> LocalSystem:
    if s == EMPTY:
        raise KeyError("the empty-set vector is never updated")
    if not 0 < s < state.index.size:
        raise KeyError(f"unknown Gram index {s}")
    if lin is None:
        lin = linear_terms(model, state.index, form)
    sig = state.vectors
    lam = state.multipliers if state.multipliers is not None else catalog.zero_multipliers()
    sl = slice(catalog.inc_ptr[s], catalog.inc_ptr[s + 1])
    A = sig[catalog.inc_partner[sl]]
    b = np.einsum("ij,ij->i", sig[catalog.inc_t[sl]], sig[catalog.inc_p[sl]])
    lrow = catalog.inc_sign[sl] * lam[catalog.inc_eq[sl]]
    return LocalSystem(A, b, lin.of(s, sig), lrow)


def sdp_objective(state: GramState, model: GraphModel) -> float:
    """sum_e w_e <sigma_i, sigma_j> + sum_i h_i <sigma_i, sigma_empty>."""
    sig = state.vectors
    idx = state.index
    if model.num_vertices > idx.num_vertices:
        raise KeyError("state does not cover every model vertex")
    if model.num_edges:
        vi = sig[1 + model.edges[:, 0]]
        vj = sig[1 + model.edges[:, 1]]
        e = float(model.edge_weights @ np.einsum("ij,ij->i", vi, vj))
    else:
        e = 0.0
    v = float(model.vertex_weights @ (sig[1:1 + model.num_vertices] @ sig[EMPTY]))
    return e + v


def constraint_values(state: GramState, catalog: ConstraintCatalog) -> np.ndarray:
    eq = catalog.equalities
    sig = state.vectors
    if len(eq) == 0:
        return np.zeros(0)
    left = np.einsum("ij,ij->i", sig[eq[:, 0]], sig[eq[:, 1]])
    right = np.einsum("ij,ij->i", sig[eq[:, 2]], sig[eq[:, 3]])
    return left - right


def residual_norm(state: GramState, catalog: ConstraintCatalog) -> float:
    h = constraint_values(state, catalog)
    return float(np.sqrt(h @ h))


@dataclass(frozen=True, eq=False)
class MomentMatrix:
    vertex_block: np.ndarray
    edge_moments: dict[tuple[int, int], float]

    @property
    def n(self) -> int:
        return self.vertex_block.shape[0]


def moment_matrix(state: GramState) -> MomentMatrix:
    idx = state.index
    V = state.vectors[1:1 + idx.num_vertices]
    M = V @ V.T
    M = 0.5 * (M + M.T)
    np.fill_diagonal(M, 1.0)
    bias = state.vectors[1 + idx.num_vertices:] @ state.vectors[EMPTY]
    edges = {p: float(v) for p, v in zip(idx.pairs, bias)}
    return MomentMatrix(M, edges)


@dataclass(frozen=True, eq=False)
class Problem:
    """Everything a sweep needs that does not change between sweeps."""

    model: GraphModel
    cov: RegionCovering
    catalog: ConstraintCatalog
    lin: LinearTerms

    @classmethod
    def build(cls, model: GraphModel, cov: RegionCovering, form: str = "vertex") -> "Problem":
        cat = compile_constraints(cov, model.num_vertices)
        return cls(model, cov, cat, linear_terms(model, cat.index, form))

    @property
    def index(self) -> GramIndex:
        return self.catalog.index


def multiplier_weights(cat: ConstraintCatalog, order: np.ndarray, mode: str = "owner") -> np.ndarray:
    """Per-incidence multiplier step sizes for one sweep over ``order``.

    ``owner``: an equality's multiplier moves once per sweep, when the last of
    its active variables is updated. ``shared``: every active variable moves it
    by 1/(number of active variables). ``every``: each active variable moves it
    by a full step.
    """
    nnz = len(cat.inc_eq)
    rank = np.full(cat.num_vars, -1, dtype=np.int64)
    rank[order] = np.arange(len(order))
    var = np.repeat(np.arange(cat.num_vars), np.diff(cat.inc_ptr))
    r = rank[var]
    active = r >= 0
    if mode == "every":
        return active.astype(np.float64)
    K = len(cat.equalities)
    if mode == "shared":
        cnt = np.bincount(cat.inc_eq, weights=active, minlength=K)
        return np.where(active, 1.0 / np.maximum(cnt[cat.inc_eq], 1.0), 0.0)
    last = np.full(K, -1, dtype=np.int64)
    np.maximum.at(last, cat.inc_eq, r)
    w = np.zeros(nnz)
    w[active & (r == last[cat.inc_eq])] = 1.0
    return w


def partial_sos(model: GraphModel, cov: RegionCovering, config: SolverConfig,
                state: GramState | None = None, reliables=(), problem: Problem | None = None,
                ) -> SolveResult:
    """Coordinate ascent over the non-reliable Gram vectors until the sweep change drops below tol.

    Reliable rows are held fixed (callers set them to +-sigma_empty). The
    returned state is a copy; multipliers are carried in it for warm starts.
    """
    if problem is None:
        problem = Problem.build(model, cov, config.linear_form)
    cat = problem.catalog
    if state is None:
        state = init_state(cov, model, config, cat.index)
    state = state.copy()
    if state.multipliers is None:
        state.multipliers = cat.zero_multipliers()
    if state.vectors.shape[0] != cat.num_vars:
        raise ValueError("state does not match the covering's Gram index")

    fixed = np.zeros(cat.num_vars, dtype=bool)
    fixed[EMPTY] = True
    for s in reliables:
        fixed[int(s)] = True
    order = np.flatnonzero(~fixed).astype(np.int64)
    result = SolveResult(state)
    if len(order) == 0:
        result.converged = True
        return result

    sig = np.ascontiguousarray(state.vectors)
    lam = state.multipliers
    use_numba = USE_NUMBA if config.use_numba is None else config.use_numba
    args = (cat.inc_ptr, cat.inc_eq, cat.inc_partner, cat.inc_t, cat.inc_p, cat.inc_sign,
            problem.lin.ptr, problem.lin.idx, problem.lin.coef,
            multiplier_weights(cat, order, config.multiplier_step), float(config.rho))
    prev = None
    bad = 0
    for k in range(1, config.max_sweeps + 1):
        delta, _ = sweep(sig, lam, order, *args, use_numba=use_numba)
        state.vectors = sig
        obj = sdp_objective(state, model)
        res = residual_norm(state, cat)
        if not (np.isfinite(delta) and np.isfinite(obj)):
            raise SolverDivergence(f"non-finite iterate at sweep {k}")
        result.trace.append(SweepRecord(k, obj, res, float(delta)))
        if (prev is not None and obj < prev.objective and res > prev.residual
                and res > config.divergence_floor):
            bad += 1
            if bad >= config.divergence_window:
                raise SolverDivergence(
                    f"objective fell and residual grew for {bad} consecutive sweeps "
                    f"(sweep {k}: objective {obj:.6g}, residual {res:.3g})")
        else:
            bad = 0
        prev = result.trace[-1]
        if delta <= config.tol:
            result.converged = True
            break
    log.debug("partial_sos: %d sweeps, objective %.6g, residual %.3g",
              result.sweeps, result.trace[-1].objective, result.trace[-1].residual)
    return result


def integral_state(index: GramIndex, x, rank: int = 10) -> GramState:
    """Rank-one state sigma_S = prod_{i in S} x_i * sigma_empty."""
    x = np.asarray(x, dtype=np.float64)
    signs = np.ones(index.size)
    signs[1:1 + index.num_vertices] = x
    for k, (a, b) in enumerate(index.pairs):
        signs[1 + index.num_vertices + k] = x[a] * x[b]
    vec = np.zeros((index.size, rank))
    vec[:, 0] = signs
    return GramState(index, vec)
