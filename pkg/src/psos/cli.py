"""Command-line entry point: psos {gen-spinglass,gen-denoise,solve,verify,bench}."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import io as pio
from .bench import ALGORITHMS, REGIONS, BenchPlan, records_csv, run_algorithm, run_bench, summarize, summary_csv
from .model import add_noise, gen_denoise_model, gen_spinglass, infer_grid_side
from .oracle import MAX_CYCLE_LEN, check_metric_polytope, enumerate_chordless_cycles
from .sdp import SolverConfig, moment_matrix

log = logging.getLogger("psos")

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on bad usage; we want 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _side(text: str):
    if "x" in text:
        r, c = text.lower().split("x", 1)
        return int(r), int(c)
    return int(text)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="psos", description="MAP inference on binary pairwise grid models.")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    g = sub.add_parser("gen-spinglass", help="write a random spin-glass grid model")
    g.add_argument("--side", type=int, required=True)
    g.add_argument("--dist", type=int, choices=(1, 2, 3, 4), default=1)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)

    d = sub.add_parser("gen-denoise", help="add noise to a PGM image and write the denoising model")
    d.add_argument("--image", required=True)
    d.add_argument("--noise", choices=("bernoulli", "blockwise"), default="bernoulli")
    d.add_argument("--p", type=float, default=0.2)
    d.add_argument("--theta0", type=float, default=1.26)
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--out-model", required=True)
    d.add_argument("--out-noisy")

    s = sub.add_parser("solve", help="run one algorithm on a model file")
    s.add_argument("--model", required=True)
    s.add_argument("--alg", choices=ALGORITHMS, default="psos4")
    s.add_argument("--rank", type=int, default=10)
    s.add_argument("--rho", type=float, default=1.0)
    s.add_argument("--tol", type=float, default=1e-4)
    s.add_argument("--max-sweeps", type=int, default=500)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--regions", choices=REGIONS)
    s.add_argument("--side", type=_side, help="grid shape R or RxC (default: square)")
    s.add_argument("--out-assignment")
    s.add_argument("--out-state", help="save the final Gram state (.npz)")
    s.add_argument("--trace", help="per-sweep / per-iteration CSV")

    v = sub.add_parser("verify", help="metric-polytope check of a saved Gram state")
    v.add_argument("--model", required=True)
    v.add_argument("--state", required=True)
    v.add_argument("--cycles-max-len", type=int, default=MAX_CYCLE_LEN)
    v.add_argument("--tol", type=float, default=1e-4)
    v.add_argument("--out", help="violations CSV")

    b = sub.add_parser("bench", help="run a benchmark plan")
    b.add_argument("--plan", required=True)
    b.add_argument("--out", required=True)
    b.add_argument("--summary", help="quantile summary CSV (default: <out stem>.summary.csv)")
    return p


def _gen_spinglass(a) -> int:
    pio.write_model(a.out, gen_spinglass(a.side, a.dist, a.seed))
    return EXIT_OK


def _gen_denoise(a) -> int:
    clean = pio.read_pgm(a.image)
    noisy = add_noise(clean, a.noise, a.p, a.seed)
    pio.write_model(a.out_model, gen_denoise_model(noisy, a.theta0))
    if a.out_noisy:
        pio.write_pgm(a.out_noisy, noisy)
    return EXIT_OK


def _solve(a) -> int:
    model = pio.read_model(a.model)
    cfg = SolverConfig(rank=a.rank, rho=a.rho, tol=a.tol, max_sweeps=a.max_sweeps, seed=a.seed)
    side = a.side
    if side is None and a.alg != "exact":
        side = infer_grid_side(model)
    out = run_algorithm(a.alg, model, side, cfg, a.regions)
    print(f"objective {out.objective:.17g}")
    print(f"iterations {out.iterations} converged {int(out.converged)}")
    if a.out_assignment:
        pio.write_assignment(a.out_assignment, out.assignment)
    else:
        print("assignment " + " ".join("1" if v > 0 else "-1" for v in out.assignment))
    if a.trace and out.trace_csv:
        Path(a.trace).write_text(out.trace_csv)
    if a.out_state:
        if out.state is None:
            raise ValueError(f"algorithm {a.alg} has no Gram state")
        pio.save_state(a.out_state, out.state)
    return EXIT_OK


def _verify(a) -> int:
    model = pio.read_model(a.model)
    state = pio.load_state(a.state)
    if state.index.num_vertices < model.num_vertices:
        raise ValueError("state has fewer vertices than the model")
    M = moment_matrix(state).vertex_block[:model.num_vertices, :model.num_vertices]
    cycles = enumerate_chordless_cycles(model, a.cycles_max_len)
    rep = check_metric_polytope(M, cycles, tol=a.tol)
    print(f"cycles {len(cycles)} checked {rep.checked} violations {len(rep.violations)} "
          f"max_violation {rep.max_violation:.3g}")
    print("ok" if rep.ok else "violated")
    if a.out:
        Path(a.out).write_text(rep.to_csv())
    return EXIT_OK


def _bench(a) -> int:
    plan = BenchPlan.parse(Path(a.plan).read_text())
    recs = run_bench(plan)
    Path(a.out).write_text(records_csv(recs))
    summ = summarize(recs)
    dest = a.summary or str(Path(a.out).with_suffix("")) + ".summary.csv"
    Path(dest).write_text(summary_csv(summ))
    for s in summ:
        qs = "/".join(f"{q:.3f}" for q in s.quantiles)
        print(f"{s.algorithm:6s} n={s.count:4d} q05/q10/q60 {qs}")
    return EXIT_OK


COMMANDS = {"gen-spinglass": _gen_spinglass, "gen-denoise": _gen_denoise, "solve": _solve,
            "verify": _verify, "bench": _bench}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.cmd](args)
    except (OSError, ValueError, KeyError, RuntimeError, FloatingPointError) as exc:
        print(f"psos {args.cmd}: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
