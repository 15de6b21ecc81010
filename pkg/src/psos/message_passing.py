"""Message-passing baselines: loopy BP (sum- and max-product) and plaquette GBP.

All messages live in the log domain and are shifted so their largest entry is
zero after every update. Updates are synchronous; damping mixes the new and
the previous message, new = (1 - inertia) * update + inertia * old.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from itertools import product

import numpy as np
import scipy.sparse as sp
from scipy.special import logsumexp

from .model import GraphModel, StructureError, _dims, _plaquettes

log = logging.getLogger(__name__)

SIGNS = np.array([1.0, -1.0])  # state 0 is x = +1
# log-messages are clipped here so diverging runs stay finite
LOG_FLOOR = -1e6


@dataclass
class MPResult:
    assignment: np.ndarray
    beliefs: np.ndarray  # b_i(+1); max-marginal ratio for max-product
    converged: bool
    iterations: int
    trace: list[float] = field(default_factory=list)

    def trace_csv(self) -> str:
        rows = ["iter,max_delta"] + [f"{k + 1},{d!r}" for k, d in enumerate(self.trace)]
        return "\n".join(rows) + "\n"


def _check_damping(damping: float):
    if not 0.0 <= damping < 1.0:
        raise ValueError("damping must lie in [0, 1)")


def _normalize(m: np.ndarray) -> np.ndarray:
    return np.maximum(m - m.max(axis=-1, keepdims=True), LOG_FLOOR)


def _decode(logb: np.ndarray) -> np.ndarray:
    """+1 unless the -1 state is strictly more likely."""
    return np.where(logb[:, 1] > logb[:, 0], -1, 1).astype(np.int8)


def _bp(model: GraphModel, damping: float, max_iters: int, tol: float, maxprod: bool) -> MPResult:
    _check_damping(damping)
    n = model.num_vertices
    m = model.num_edges
    e = model.edges
    src = np.concatenate([e[:, 0], e[:, 1]])
    dst = np.concatenate([e[:, 1], e[:, 0]])
    w = np.concatenate([model.edge_weights, model.edge_weights])
    rev = np.concatenate([np.arange(m, 2 * m), np.arange(m)])
    # pair[d, a, b] = w_d * x_src(a) * x_dst(b)
    pair = w[:, None, None] * SIGNS[None, :, None] * SIGNS[None, None, :]
    unary = model.vertex_weights[:, None] * SIGNS[None, :]
    gather = sp.csr_matrix((np.ones(2 * m), (dst, np.arange(2 * m))), shape=(n, 2 * m))

    msgs = np.zeros((2 * m, 2))
    best = (np.inf, msgs)
    trace = []
    converged = False
    it = 0
    for it in range(1, max_iters + 1):
        incoming = gather @ msgs
        cavity = unary[src] + incoming[src] - msgs[rev]
        scores = pair + cavity[:, :, None]
        if maxprod:
            upd = np.maximum(scores[:, 0], scores[:, 1])
        else:
            upd = np.logaddexp(scores[:, 0], scores[:, 1])
        new = _normalize((1.0 - damping) * _normalize(upd) + damping * msgs)
        delta = float(np.abs(new - msgs).max()) if len(new) else 0.0
        msgs = new
        trace.append(delta)
        if delta < best[0]:
            best = (delta, msgs)
        if delta < tol:
            converged = True
            break
    if not converged:
        log.info("%s BP did not converge in %d iterations (best delta %.3g)",
                 "max-product" if maxprod else "sum-product", max_iters, best[0])
        msgs = best[1]
    logb = unary + gather @ msgs
    logb = logb - logsumexp(logb, axis=1, keepdims=True)
    p_plus = np.exp(logb[:, 0])
    if maxprod:
        x = _decode(logb)
    else:
        x = np.where(p_plus >= 0.5, 1, -1).astype(np.int8)
    return MPResult(x, p_plus, converged, it, trace)


def bp_sum_product(model: GraphModel, damping: float = 0.5, max_iters: int = 2000,
                   tol: float = 1e-8) -> MPResult:
    """Damped loopy sum-product; decodes x_i = +1 iff b_i(+1) >= 1/2."""
    return _bp(model, damping, max_iters, tol, maxprod=False)


def bp_max_product(model: GraphModel, damping: float = 0.5, max_iters: int = 2000,
                   tol: float = 1e-8) -> MPResult:
    """Damped loopy max-product (min-sum); decodes by the larger max-marginal."""
    return _bp(model, damping, max_iters, tol, maxprod=True)


# ---------------------------------------------------------------- GBP


def _states(k: int) -> np.ndarray:
    """(2^k, k) matrix of +-1 values; the first vertex is the most significant bit."""
    return np.array(list(product((1.0, -1.0), repeat=k))).reshape(1 << k, k)


def _project(P: tuple, J: tuple) -> np.ndarray:
    """State index of the sub-region J for every state of P."""
    pos = [P.index(v) for v in J]
    X = _states(len(P))
    bits = (X[:, pos] < 0).astype(np.int64)
    weights = 1 << np.arange(len(J) - 1, -1, -1)
    return bits @ weights if len(J) else np.zeros(len(X), dtype=np.int64)


@dataclass(frozen=True)
class RegionGraph:
    regions: tuple[tuple[int, ...], ...]
    links: tuple[tuple[int, int], ...]  # (parent, child) region ids
    counting: tuple[int, ...]


def plaquette_region_graph(model: GraphModel, side) -> RegionGraph:
    """Complete plaquettes over all model edges over all vertices.

    Edges not inside a complete plaquette become top-level regions, so a
    plaquette-free model reduces to the Bethe region graph.
    """
    rows, cols = _dims(side)
    if model.num_vertices != rows * cols:
        raise StructureError("GBP needs a grid model")
    edges = [tuple(e) for e in model.edges.tolist()]
    eset = set(edges)
    for i, j in edges:
        r1, c1 = divmod(i, cols)
        r2, c2 = divmod(j, cols)
        if abs(r1 - r2) + abs(c1 - c2) != 1:
            raise StructureError(f"edge {(i, j)} is not a grid edge")
    plaqs = []
    for a, b, c, d in _plaquettes((rows, cols)):
        sides = [(a, b), (a, c), (b, d), (c, d)]
        if all(s in eset for s in sides):
            plaqs.append(tuple(sorted((a, b, c, d))))
    regions = plaqs + edges + [(v,) for v in range(model.num_vertices)]
    rid = {r: k for k, r in enumerate(regions)}
    links = []
    for p in plaqs:
        a, b, c, d = p  # sorted: tl, tr, bl, br
        for s in ((a, b), (a, c), (b, d), (c, d)):
            links.append((rid[p], rid[s]))
    for e in edges:
        links.append((rid[e], rid[(e[0],)]))
        links.append((rid[e], rid[(e[1],)]))
    parents: dict[int, list[int]] = {}
    for p, c in links:
        parents.setdefault(c, []).append(p)
    counting = [0] * len(regions)
    for k in range(len(regions)):  # regions are listed top-down
        anc = _ancestors(k, parents)
        counting[k] = 1 - sum(counting[a] for a in anc)
    return RegionGraph(tuple(regions), tuple(links), tuple(counting))


def _ancestors(k, parents) -> set[int]:
    out: set[int] = set()
    stack = list(parents.get(k, []))
    while stack:
        a = stack.pop()
        if a not in out:
            out.add(a)
            stack.extend(parents.get(a, []))
    return out


def _descendants(k, children) -> set[int]:
    out: set[int] = set()
    stack = list(children.get(k, []))
    while stack:
        a = stack.pop()
        if a not in out:
            out.add(a)
            stack.extend(children.get(a, []))
    return out


def _factor_table(region: tuple, model_factors, exclude: tuple = ()) -> np.ndarray:
    """Sum of the factors inside ``region`` but not inside ``exclude``."""
    X = _states(len(region))
    rset, xset = set(region), set(exclude)
    out = np.zeros(len(X))
    pos = {v: a for a, v in enumerate(region)}
    for scope, w in model_factors:
        if set(scope) <= rset and not set(scope) <= xset:
            term = np.full(len(X), w)
            for v in scope:
                term = term * X[:, pos[v]]
            out += term
    return out


class _GBPPlan:
    """Index tables for vectorised parent-to-child updates."""

    def __init__(self, model: GraphModel, rg: RegionGraph):
        self.rg = rg
        regions = rg.regions
        factors = [((int(i), int(j)), float(w)) for (i, j), w in zip(model.edges.tolist(), model.edge_weights)]
        factors += [((v,), float(h)) for v, h in enumerate(model.vertex_weights) if h != 0.0]
        children: dict[int, list[int]] = {}
        for p, c in rg.links:
            children.setdefault(p, []).append(c)
        E = {k: _descendants(k, children) | {k} for k in range(len(regions))}
        Dn = {k: _descendants(k, children) for k in range(len(regions))}

        self.sizes = [1 << len(regions[c]) for _, c in rg.links]
        self.offset = np.concatenate([[0], np.cumsum(self.sizes)]).astype(np.int64)
        nmsg = int(self.offset[-1])

        t_rows, t_cols = [], []
        d_rows, d_cols = [], []
        t_off = d_off = 0
        base = []
        groups: dict[tuple[int, int], list] = {}
        for L, (P, C) in enumerate(rg.links):
            RP, RC = regions[P], regions[C]
            nP, nC = 1 << len(RP), 1 << len(RC)
            base.append(_factor_table(RP, factors, RC))
            for M, (I, J) in enumerate(rg.links):
                if J in E[P] and J not in E[C] and I not in E[P]:
                    proj = _project(RP, regions[J])
                    t_rows.extend(t_off + np.arange(nP))
                    t_cols.extend(self.offset[M] + proj)
                if J in E[C] and I in Dn[P] and I not in E[C]:
                    proj = _project(RC, regions[J])
                    d_rows.extend(d_off + np.arange(nC))
                    d_cols.extend(self.offset[M] + proj)
            proj = _project(RP, RC)
            order = np.argsort(proj, kind="stable").reshape(nC, nP // nC) + t_off
            groups.setdefault((nP, nC), []).append((L, order, d_off))
            t_off += nP
            d_off += nC
        self.base = np.concatenate(base) if base else np.zeros(0)
        self.ST = sp.csr_matrix((np.ones(len(t_rows)), (t_rows, t_cols)), shape=(t_off, nmsg))
        self.SD = sp.csr_matrix((np.ones(len(d_rows)), (d_rows, d_cols)), shape=(d_off, nmsg))
        self.groups = []
        for (nP, nC), items in groups.items():
            Ls = np.array([it[0] for it in items])
            red = np.stack([it[1] for it in items])
            dpos = np.array([it[2] for it in items])[:, None] + np.arange(nC)[None, :]
            mpos = self.offset[Ls][:, None] + np.arange(nC)[None, :]
            self.groups.append((red, dpos, mpos))
        self.nmsg = nmsg

        # vertex beliefs: factor on v plus messages into v from outside {v}
        n = model.num_vertices
        rid = {r: k for k, r in enumerate(regions)}
        b_rows, b_cols = [], []
        for v in range(n):
            k = rid[(v,)]
            for M, (I, J) in enumerate(rg.links):
                if J == k:
                    b_rows.extend([2 * v, 2 * v + 1])
                    b_cols.extend([self.offset[M], self.offset[M] + 1])
        self.SB = sp.csr_matrix((np.ones(len(b_rows)), (b_rows, b_cols)), shape=(2 * n, nmsg))
        self.unary = model.vertex_weights[:, None] * SIGNS[None, :]

    def update(self, msgs: np.ndarray, maxprod: bool) -> np.ndarray:
        T = self.base + self.ST @ msgs
        Dv = self.SD @ msgs
        out = np.empty_like(msgs)
        for red, dpos, mpos in self.groups:
            vals = T[red]
            agg = vals.max(axis=-1) if maxprod else logsumexp(vals, axis=-1)
            agg = agg - Dv[dpos]
            out[mpos] = _normalize(agg)
        return out

    def normalize(self, msgs: np.ndarray) -> np.ndarray:
        out = np.empty_like(msgs)
        for _, _, mpos in self.groups:
            blk = msgs[mpos]
            out[mpos] = _normalize(blk)
        return out

    def vertex_logbeliefs(self, msgs: np.ndarray) -> np.ndarray:
        return self.unary + (self.SB @ msgs).reshape(-1, 2)


def gbp_plaquette(model: GraphModel, side, damping: float = 0.1, max_iters: int = 2000,
                  tol: float = 1e-8, maxprod: bool = False) -> MPResult:
    """Parent-to-child GBP on plaquettes / edges / vertices; argmax decoding per vertex."""
    _check_damping(damping)
    rg = plaquette_region_graph(model, side)
    plan = _GBPPlan(model, rg)
    msgs = np.zeros(plan.nmsg)
    best = (np.inf, msgs)
    trace = []
    converged = False
    it = 0
    for it in range(1, max_iters + 1):
        upd = plan.update(msgs, maxprod)
        new = plan.normalize((1.0 - damping) * upd + damping * msgs)
        delta = float(np.abs(new - msgs).max()) if len(new) else 0.0
        msgs = new
        trace.append(delta)
        if delta < best[0]:
            best = (delta, msgs)
        if delta < tol:
            converged = True
            break
    if not converged:
        log.info("GBP did not converge in %d iterations (best delta %.3g)", max_iters, best[0])
        msgs = best[1]
    logb = plan.vertex_logbeliefs(msgs)
    logb = logb - logsumexp(logb, axis=1, keepdims=True)
    return MPResult(_decode(logb), np.exp(logb[:, 0]), converged, it, trace)
