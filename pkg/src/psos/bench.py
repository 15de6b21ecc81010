"""Seeded benchmark batches over the solvers, with CSV records and quantile summaries."""
from __future__ import annotations

import csv
import io
import logging
import math
import time
from dataclasses import dataclass, field, fields, replace

import numpy as np

from .message_passing import bp_max_product, bp_sum_product, gbp_plaquette
from .model import (
    BinaryImage,
    GraphModel,
    add_noise,
    gen_denoise_model,
    gen_spinglass,
    infer_grid_side,
    objective_value,
    plain_grid,
    plaquette_covering,
    triangle_covering,
    vertex_covering,
    with_all_diagonals,
    _dims,
)
from .oracle import MAX_EXHAUSTIVE, exhaustive_map, ratio_to_best
from .rounding import clap, sign_round
from .sdp import SolverConfig, partial_sos

log = logging.getLogger(__name__)

ALGORITHMS = ("psos4", "psos2", "bp-sp", "bp-mp", "gbp", "exact")
REGIONS = ("triangle", "plaquette", "vertex")
QUANTILES = (0.05, 0.10, 0.60)
RECORD_HEADER = ("instance", "algorithm", "n", "seed", "objective", "ratio", "iterations",
                 "converged", "runtime_ms", "residual")


@dataclass
class Outcome:
    assignment: np.ndarray
    objective: float
    iterations: int
    converged: bool
    residual: float = float("nan")
    trace_csv: str = ""
    state: object = None


def run_algorithm(alg: str, model: GraphModel, side=None, config: SolverConfig | None = None,
                  regions: str | None = None) -> Outcome:
    """Run one algorithm on a grid model; ``side`` defaults to the square side."""
    if alg not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {alg!r}")
    config = config or SolverConfig()
    if alg == "exact":
        x, val = exhaustive_map(model)
        return Outcome(x, val, 1 << model.num_vertices, True)
    if side is None:
        side = infer_grid_side(model)
    rows, cols = _dims(side)
    if alg in ("bp-sp", "bp-mp", "gbp"):
        base = plain_grid(model, (rows, cols))
        if alg == "gbp":
            r = gbp_plaquette(base, (rows, cols))
        elif alg == "bp-sp":
            r = bp_sum_product(base)
        else:
            r = bp_max_product(base)
        return Outcome(r.assignment, objective_value(model, r.assignment), r.iterations,
                       r.converged, trace_csv=r.trace_csv())
    regions = regions or ("triangle" if alg == "psos4" else "vertex")
    if regions == "triangle":
        work = with_all_diagonals(model, (rows, cols))
        cov = triangle_covering((rows, cols))
    elif regions == "plaquette":
        work = model
        cov = plaquette_covering((rows, cols))
    elif regions == "vertex":
        work = model
        cov = vertex_covering(model.num_vertices)
    else:
        raise ValueError(f"unknown regions {regions!r}")
    if alg == "psos4":
        r = clap(work, cov, config)
        return Outcome(r.assignment, objective_value(model, r.assignment), r.sweeps, r.converged,
                       r.residual, r.trace_csv(), r.state)
    res = partial_sos(work, cov, config)
    x = sign_round(res.state)
    resid = res.trace[-1].residual if res.trace else 0.0
    return Outcome(x, objective_value(model, x), res.sweeps, res.converged, resid,
                   res.trace_csv(), res.state)


# ---------------------------------------------------------------- plans


def synthetic_image(rows: int, cols: int) -> BinaryImage:
    """A disc and a bar on a dark background."""
    r, c = np.mgrid[0:rows, 0:cols]
    disc = (r - 0.4 * rows) ** 2 + (c - 0.4 * cols) ** 2 < (0.25 * min(rows, cols)) ** 2
    bar = (r > 0.7 * rows) & (r < 0.85 * rows) & (c > 0.2 * cols) & (c < 0.9 * cols)
    return BinaryImage.from_array(np.where(disc | bar, 1, -1))


@dataclass(frozen=True)
class BenchPlan:
    family: str = "spinglass"
    sides: tuple[int, ...] = (4,)
    dist: int = 1
    noise: str = "bernoulli"
    p: float = 0.2
    theta0: float = 1.26
    reps: int = 1
    seed: int = 0
    algs: tuple[str, ...] = ALGORITHMS
    rank: int = 10
    rho: float = 1.0
    tol: float = 1e-4
    max_sweeps: int = 500
    image: str | None = None

    def __post_init__(self):
        if self.family not in ("spinglass", "denoise"):
            raise ValueError(f"unknown family {self.family!r}")
        if self.reps < 1:
            raise ValueError("reps must be at least 1")
        bad = [a for a in self.algs if a not in ALGORITHMS]
        if bad:
            raise ValueError(f"unknown algorithms {bad}")
        if not self.sides or min(self.sides) < 2:
            raise ValueError("grid sides must be at least 2")

    @property
    def config(self) -> SolverConfig:
        return SolverConfig(rank=self.rank, rho=self.rho, tol=self.tol, max_sweeps=self.max_sweeps)

    def rep_seed(self, k: int) -> int:
        return self.seed + k

    @classmethod
    def parse(cls, text: str) -> "BenchPlan":
        """key=value lines; '#' starts a comment. Lists are comma separated."""
        kw: dict = {}
        conv = {"sides": lambda v: tuple(int(s) for s in v.split(",")),
                "algs": lambda v: tuple(s.strip() for s in v.split(",") if s.strip())}
        types = {f.name: f.type for f in fields(cls)}
        for k, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"plan line {k}: expected key=value")
            key, val = (s.strip() for s in line.split("=", 1))
            if key == "side":
                key = "sides"
            if key not in types:
                raise ValueError(f"plan line {k}: unknown key {key!r}")
            try:
                if key in conv:
                    kw[key] = conv[key](val)
                elif types[key] in ("int", int):
                    kw[key] = int(val)
                elif types[key] in ("float", float):
                    kw[key] = float(val)
                else:
                    kw[key] = val
            except ValueError:
                raise ValueError(f"plan line {k}: bad value {val!r} for {key}") from None
        return cls(**kw)


@dataclass
class BenchRecord:
    instance: str
    algorithm: str
    n: int
    seed: int
    objective: float
    ratio: float
    iterations: int
    converged: bool
    runtime_ms: float
    residual: float

    def row(self) -> list[str]:
        return [self.instance, self.algorithm, str(self.n), str(self.seed), repr(self.objective),
                repr(self.ratio), str(self.iterations), str(int(self.converged)),
                f"{self.runtime_ms:.3f}", repr(self.residual)]


def make_instance(plan: BenchPlan, side: int, seed: int) -> tuple[str, GraphModel, tuple[int, int]]:
    """Instance name, model and grid shape for one replication."""
    if plan.family == "spinglass":
        return f"spinglass-s{side}-d{plan.dist}-{seed}", gen_spinglass(side, plan.dist, seed), (side, side)
    if plan.image:
        from .io import read_pgm

        clean = read_pgm(plan.image)
    else:
        clean = synthetic_image(side, side)
    noisy = add_noise(clean, plan.noise, plan.p, seed)
    model = gen_denoise_model(noisy, plan.theta0)
    return f"denoise-s{side}-{plan.noise}-{seed}", model, (clean.height, clean.width)


def run_bench(plan: BenchPlan) -> list[BenchRecord]:
    out: list[BenchRecord] = []
    for side in plan.sides:
        for k in range(plan.reps):
            seed = plan.rep_seed(k)
            name, model, dims = make_instance(plan, side, seed)
            recs = []
            for alg in plan.algs:
                t0 = time.perf_counter()
                try:
                    o = run_algorithm(alg, model, dims, replace(plan.config, seed=seed))
                    rec = BenchRecord(name, alg, model.num_vertices, seed, o.objective, math.nan,
                                      o.iterations, o.converged, 0.0, o.residual)
                except Exception as exc:  # recorded per row, the batch continues
                    log.warning("%s on %s failed: %s", alg, name, exc)
                    rec = BenchRecord(name, alg, model.num_vertices, seed, math.nan, math.nan,
                                      0, False, 0.0, math.nan)
                rec.runtime_ms = 1e3 * (time.perf_counter() - t0)
                recs.append(rec)
            _fill_ratios(recs, model.num_vertices <= MAX_EXHAUSTIVE and "exact" in plan.algs)
            out += recs
            log.info("%s done", name)
    return out


def _fill_ratios(recs: list[BenchRecord], use_exact: bool):
    ok = [r for r in recs if math.isfinite(r.objective)]
    if not ok:
        return
    ref = None
    if use_exact:
        ex = [r.objective for r in ok if r.algorithm == "exact"]
        ref = ex[0] if ex else None
    ratios = ratio_to_best([r.objective for r in ok], ref)
    if ratios.fallback:
        return
    for r, v in zip(ok, ratios.values):
        r.ratio = v


def records_csv(recs: list[BenchRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RECORD_HEADER)
    for r in recs:
        w.writerow(r.row())
    return buf.getvalue()


def read_records(text: str) -> list[BenchRecord]:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or tuple(rows[0]) != RECORD_HEADER:
        raise ValueError("not a results CSV")
    out = []
    for r in rows[1:]:
        out.append(BenchRecord(r[0], r[1], int(r[2]), int(r[3]), float(r[4]), float(r[5]),
                               int(r[6]), bool(int(r[7])), float(r[8]), float(r[9])))
    return out


@dataclass
class Summary:
    algorithm: str
    count: int
    quantiles: tuple[float, ...] = field(default_factory=tuple)


def summarize(recs: list[BenchRecord], qs=QUANTILES) -> list[Summary]:
    """Ratio quantiles per algorithm, in first-seen algorithm order."""
    algs = list(dict.fromkeys(r.algorithm for r in recs))
    out = []
    for a in algs:
        vals = np.array([r.ratio for r in recs if r.algorithm == a and math.isfinite(r.ratio)])
        q = tuple(float(v) for v in np.quantile(vals, qs)) if len(vals) else tuple(math.nan for _ in qs)
        out.append(Summary(a, len(vals), q))
    return out


def summary_csv(summ: list[Summary], qs=QUANTILES) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["algorithm", "count"] + [f"q{round(100 * q):02d}" for q in qs])
    for s in summ:
        w.writerow([s.algorithm, s.count] + [repr(v) for v in s.quantiles])
    return buf.getvalue()
