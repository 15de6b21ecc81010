"""Ground-truth oracles: exhaustive MAP, chordless cycles and metric-polytope checks."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from ._accel import USE_NUMBA, njit
from .model import GraphModel, ModelError, objective_value

MAX_EXHAUSTIVE = 28
MAX_CYCLE_VERTICES = 64
MAX_CYCLE_LEN = 12


class OracleLimitError(ModelError):
    pass


def _adjacency(model: GraphModel):
    n = model.num_vertices
    e = model.edges
    w = model.edge_weights
    src = np.concatenate([e[:, 0], e[:, 1]])
    dst = np.concatenate([e[:, 1], e[:, 0]])
    ww = np.concatenate([w, w])
    order = np.argsort(src, kind="stable")
    ptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(src, minlength=n), out=ptr[1:])
    return ptr, dst[order].astype(np.int64), ww[order]


@njit
def _gray_search_numba(n, ptr, nbr, wts, h, eps):
    # vertex i is bit n-1-i, so the code orders assignments lexicographically
    # with +1 < -1 and vertex 0 most significant
    x = np.ones(n)
    val = 0.0
    for i in range(n):
        val += h[i]
        for q in range(ptr[i], ptr[i + 1]):
            if nbr[q] > i:
                val += wts[q]
    best = val
    best_code = 0
    code = 0
    total = 1 << n
    for k in range(1, total):
        b = 0
        kk = k
        while (kk & 1) == 0:
            kk >>= 1
            b += 1
        i = n - 1 - b
        loc = h[i]
        for q in range(ptr[i], ptr[i + 1]):
            loc += wts[q] * x[nbr[q]]
        val -= 2.0 * x[i] * loc
        x[i] = -x[i]
        code ^= 1 << b
        if val > best + eps:
            best = val
            best_code = code
        elif val >= best - eps and code < best_code:
            if val > best:
                best = val
            best_code = code
    return best_code


def _chunk_search_numpy(model: GraphModel, eps: float, chunk_bits: int = 16) -> int:
    n = model.num_vertices
    bits = min(n, chunk_bits)
    shifts = np.arange(n - 1, -1, -1, dtype=np.int64)
    best = -np.inf
    best_code = 0
    step = 1 << bits
    e0, e1 = model.edges[:, 0], model.edges[:, 1]
    for start in range(0, 1 << n, step):
        codes = np.arange(start, start + step, dtype=np.int64)
        X = 1.0 - 2.0 * ((codes[:, None] >> shifts[None, :]) & 1)
        vals = X @ model.vertex_weights
        if len(e0):
            vals += (X[:, e0] * X[:, e1]) @ model.edge_weights
        m = vals.max()
        if m > best + eps:
            best = m
            best_code = int(codes[np.flatnonzero(vals >= m - eps)[0]])
        elif m >= best - eps:
            cand = int(codes[np.flatnonzero(vals >= best - eps)[0]])
            best_code = min(best_code, cand)
            best = max(best, m)
    return best_code


def _decode(code: int, n: int) -> np.ndarray:
    return np.array([-1 if (code >> (n - 1 - i)) & 1 else 1 for i in range(n)], dtype=np.int8)


def exhaustive_map(model: GraphModel, use_numba: bool | None = None) -> tuple[np.ndarray, float]:
    """Global maximiser by Gray-code enumeration.

    Ties go to the lexicographically smallest assignment with +1 before -1.
    """
    n = model.num_vertices
    if n > MAX_EXHAUSTIVE:
        raise OracleLimitError(f"exhaustive search limited to n <= {MAX_EXHAUSTIVE}, got {n}")
    scale = float(np.abs(model.edge_weights).sum() + np.abs(model.vertex_weights).sum())
    eps = 1e-11 * max(scale, 1.0)
    if use_numba is None:
        use_numba = USE_NUMBA
    if use_numba:
        ptr, nbr, wts = _adjacency(model)
        code = _gray_search_numba(n, ptr, nbr, wts, np.ascontiguousarray(model.vertex_weights), eps)
    else:
        code = _chunk_search_numpy(model, eps)
    x = _decode(int(code), n)
    return x, objective_value(model, x)


# ---------------------------------------------------------------- cycles

@dataclass(frozen=True)
class CycleList:
    cycles: tuple[tuple[int, ...], ...]

    def __len__(self):
        return len(self.cycles)

    def __iter__(self):
        return iter(self.cycles)

    def by_length(self) -> dict[int, int]:
        out: dict[int, int] = {}
        for c in self.cycles:
            out[len(c)] = out.get(len(c), 0) + 1
        return out


def _adj_masks(n: int, edges) -> list[int]:
    adj = [0] * n
    for i, j in edges:
        adj[i] |= 1 << j
        adj[j] |= 1 << i
    return adj


def enumerate_chordless_cycles(model: GraphModel, max_len: int = MAX_CYCLE_LEN) -> CycleList:
    """All chordless cycles of length 3..max_len, each once.

    A cycle is reported starting at its smallest vertex, with the second
    vertex smaller than the last.
    """
    n = model.num_vertices
    if n > MAX_CYCLE_VERTICES or max_len > MAX_CYCLE_LEN:
        raise OracleLimitError(f"cycle enumeration limited to n <= {MAX_CYCLE_VERTICES}, "
                               f"max_len <= {MAX_CYCLE_LEN}")
    adj = _adj_masks(n, model.edges.tolist())
    out = []

    def extend(path, blocked):
        # blocked: vertices adjacent to an interior path vertex (or on the path)
        last = path[-1]
        start = path[0]
        cand = adj[last] & ~blocked
        while cand:
            w = (cand & -cand).bit_length() - 1
            cand &= cand - 1
            if w < start:
                continue
            if adj[w] >> start & 1:
                if len(path) >= 2 and path[1] < w:
                    out.append(tuple(path) + (w,))
                continue
            if len(path) + 1 < max_len:
                path.append(w)
                extend(path, blocked | adj[last] | (1 << w))
                path.pop()

    for v in range(n):
        for u in range(v + 1, n):
            if adj[v] >> u & 1:
                extend([v, u], (1 << v) | (1 << u) | ((1 << (v + 1)) - 1))
    out.sort(key=lambda c: (len(c), c))
    return CycleList(tuple(out))


# ---------------------------------------------------------------- metric polytope

@dataclass(frozen=True)
class Violation:
    kind: str
    ids: tuple[int, ...]
    lhs: float
    rhs: float

    @property
    def slack(self) -> float:
        return self.lhs - self.rhs


@dataclass
class ViolationReport:
    """Inequalities of the form lhs >= rhs; negative slack is a violation."""

    violations: list[Violation] = field(default_factory=list)
    checked: int = 0

    @property
    def ok(self) -> bool:
        return not self.violations

    @property
    def max_violation(self) -> float:
        return max((-v.slack for v in self.violations), default=0.0)

    def of_kind(self, kind: str) -> list[Violation]:
        return [v for v in self.violations if v.kind == kind]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["kind", "ids", "lhs", "rhs", "slack"])
        for v in self.violations:
            w.writerow([v.kind, " ".join(map(str, v.ids)), repr(v.lhs), repr(v.rhs), repr(v.slack)])
        return buf.getvalue()


def _as_matrix(M) -> np.ndarray:
    return np.asarray(getattr(M, "vertex_block", M), dtype=np.float64)


def triangle_inequalities(M, triples, tol: float = 1e-6) -> ViolationReport:
    """|M_ij + M_jk| <= 1 + M_ik for every choice of middle vertex j."""
    M = _as_matrix(M)
    rep = ViolationReport()
    for t in triples:
        for i, j, k in ((t[0], t[1], t[2]), (t[1], t[0], t[2]), (t[0], t[2], t[1])):
            lhs = 1.0 + M[i, k]
            rhs = abs(M[i, j] + M[j, k])
            rep.checked += 1
            if lhs - rhs < -tol:
                rep.violations.append(Violation("triangle", (i, j, k), lhs, rhs))
    return rep


def check_metric_polytope(M, cycles, tol: float = 1e-6, triples=None) -> ViolationReport:
    """Bounds |M_ij| <= 1, cyclic inequalities on every cycle, triangle inequalities.

    Cyclic: M(F) - M(C minus F) >= 2 - |C| for every odd-size edge subset F.
    Triangle inequalities are checked on ``triples`` (default: the 3-cycles).
    """
    M = _as_matrix(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("moment matrix must be square")
    rep = ViolationReport()
    n = M.shape[0]
    iu, ju = np.triu_indices(n, 1)
    vals = np.abs(M[iu, ju])
    rep.checked += len(vals)
    for q in np.flatnonzero(vals > 1.0 + tol):
        rep.violations.append(Violation("bound", (int(iu[q]), int(ju[q])), 1.0, float(vals[q])))
    cycles = list(cycles)
    for cyc in cycles:
        L = len(cyc)
        if L > MAX_CYCLE_LEN:
            raise OracleLimitError(f"cycle longer than {MAX_CYCLE_LEN}")
        me = np.array([M[cyc[a], cyc[(a + 1) % L]] for a in range(L)])
        total = me.sum()
        for size in range(1, L + 1, 2):
            for F in combinations(range(L), size):
                fsum = me[list(F)].sum()
                lhs = 2.0 * fsum - total
                rhs = 2.0 - L
                rep.checked += 1
                if lhs - rhs < -tol:
                    rep.violations.append(Violation("cyclic", tuple(cyc) + (-1,) + F, float(lhs), rhs))
    if triples is None:
        triples = [c for c in cycles if len(c) == 3]
    tri = triangle_inequalities(M, triples, tol)
    rep.violations += tri.violations
    rep.checked += tri.checked
    return rep


# ---------------------------------------------------------------- ratios

@dataclass(frozen=True)
class Ratios:
    values: tuple[float, ...]
    fallback: bool  # True: reference was not positive, values are raw objectives


def ratio_to_best(values, reference: float | None = None) -> Ratios:
    vals = [float(v) for v in values]
    if not vals:
        raise ValueError("need at least one value")
    ref = max(vals) if reference is None else float(reference)
    if not (ref > 0 and math.isfinite(ref)):
        return Ratios(tuple(vals), True)
    return Ratios(tuple(v / ref for v in vals), False)
