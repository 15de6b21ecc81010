"""Turning Gram states into +-1 assignments: sign rounding and CLAP."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .model import GraphModel, RegionCovering
from .sdp import EMPTY, GramState, Problem, SolverConfig, SweepRecord, init_state, partial_sos

log = logging.getLogger(__name__)

# confidence thresholds are kept as integer tenths to avoid drift
START_LEVEL = 9


def sign_round(state: GramState) -> np.ndarray:
    """x_i = sign(<sigma_i, sigma_empty>), zero mapped to +1."""
    n = state.index.num_vertices
    bias = state.vectors[1:1 + n] @ state.vectors[EMPTY]
    return np.where(bias < 0, -1, 1).astype(np.int8)


@dataclass(frozen=True)
class ClapState:
    reliables: dict = field(default_factory=dict)  # Gram row -> fixed sign
    level: int = START_LEVEL
    promotions: frozenset = frozenset()

    @property
    def confidence(self) -> float:
        return self.level / 10


def promote(state: GramState, clap: ClapState) -> tuple[GramState, ClapState]:
    """Fix every free vector whose bias exceeds the confidence to +-sigma_empty.

    If nothing qualifies the confidence drops by 0.1 and the state is returned
    unchanged.
    """
    bias = state.bias()
    thr = clap.confidence
    hits = [s for s in range(1, state.index.size)
            if s not in clap.reliables and abs(bias[s]) > thr]
    if not hits:
        return state, replace(clap, level=clap.level - 1, promotions=frozenset())
    new = state.copy()
    rel = dict(clap.reliables)
    for s in hits:
        sgn = -1 if bias[s] < 0 else 1
        new.vectors[s] = sgn * new.vectors[EMPTY]
        rel[s] = sgn
    return new, replace(clap, reliables=rel, promotions=frozenset(hits))


def fix_all(state: GramState, clap: ClapState) -> tuple[GramState, ClapState]:
    """Confidence exhausted: fix the remaining vectors by the sign of their bias."""
    bias = state.bias()
    new = state.copy()
    rel = dict(clap.reliables)
    hits = []
    for s in range(1, state.index.size):
        if s in rel:
            continue
        sgn = -1 if bias[s] < 0 else 1
        new.vectors[s] = sgn * new.vectors[EMPTY]
        rel[s] = sgn
        hits.append(s)
    return new, replace(clap, reliables=rel, promotions=frozenset(hits))


@dataclass
class ClapResult:
    assignment: np.ndarray
    state: GramState
    lifts: int
    sweeps: int
    residual: float
    converged: bool
    trace: list[SweepRecord] = field(default_factory=list)  # all lifts, sweeps numbered globally

    def trace_csv(self) -> str:
        lines = ["sweep,objective,residual,delta"]
        lines += [f"{t.sweep},{t.objective!r},{t.residual!r},{t.delta!r}" for t in self.trace]
        return "\n".join(lines) + "\n"


def clap(model: GraphModel, cov: RegionCovering, config: SolverConfig,
         reset_multipliers: bool = False, problem: Problem | None = None) -> ClapResult:
    """Alternate partial-SOS solves over the free vectors with confidence-based fixing."""
    if problem is None:
        problem = Problem.build(model, cov, config.linear_form)
    total = problem.index.size - 1
    state = init_state(cov, model, config, problem.index)
    cl = ClapState()
    lifts = sweeps = 0
    residual = float("nan")
    converged = True
    trace: list[SweepRecord] = []
    while len(cl.reliables) < total:
        if reset_multipliers:
            state.multipliers = None
        res = partial_sos(model, cov, config, state, cl.reliables.keys(), problem)
        state = res.state
        lifts += 1
        trace += [replace(t, sweep=sweeps + t.sweep) for t in res.trace]
        sweeps += res.sweeps
        converged &= res.converged
        if res.trace:
            residual = res.trace[-1].residual
        cl = replace(cl, level=START_LEVEL, promotions=frozenset())
        while True:
            state, cl = promote(state, cl)
            if cl.promotions:
                break
            if cl.level <= 0:
                state, cl = fix_all(state, cl)
                break
        log.debug("lift %d: %d promoted at confidence %.1f, %d/%d fixed",
                  lifts, len(cl.promotions), cl.confidence, len(cl.reliables), total)
    return ClapResult(sign_round(state), state, lifts, sweeps, residual, converged, trace)
