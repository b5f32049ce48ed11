"""Command-line entry point: ``outdeg1 <command> ...``."""

from __future__ import annotations

import argparse
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import io as docs
from .assumptions import LoopBreakError, construct_loop_break, estimate_p_epsilon, verify_k_looping
from .geometry import Window
from .models import Model, NavigationModel, SegmentModel, make_model
from .navigation_model import NavigationSolution
from .process import RngSpec, sample_ppp
from .render import render_svg
from .segment_model import SegmentSolution, SolverDegeneracy
from .stats import replicate_rng, summaries_to_csv, summarize

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_DEGENERATE = 0, 1, 2, 3


class ConfigError(Exception):
    pass


def _positive(kind):
    def parse(s: str):
        v = kind(s)
        if not (v > 0 and math.isfinite(v)):
            raise argparse.ArgumentTypeError(f"expected a positive number, got {s}")
        return v

    return parse


def _nonneg_int(s: str) -> int:
    v = int(s)
    if v < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {s}")
    return v


def _seed(s: str) -> int:
    v = int(s)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return v


def _model(args) -> Model:
    if args.model == "navigation" and args.epsilon is None:
        raise ConfigError("--model navigation requires --epsilon")
    if args.model == "segment" and args.epsilon is not None:
        raise ConfigError("--epsilon only applies to --model navigation")
    try:
        return make_model(args.model, args.epsilon)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _pmap(fn, items, threads: int):
    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            return list(ex.map(fn, items))
    return [fn(i) for i in items]


def _add_model_flags(p: argparse.ArgumentParser, side_default: float | None = None) -> None:
    p.add_argument("--model", choices=("segment", "navigation"), default="segment")
    p.add_argument("--epsilon", type=float, help="cone half-angle in radians (navigation only)")
    p.add_argument("--intensity", type=_positive(float), default=1.0)
    if side_default is None:
        p.add_argument("--side", type=_positive(float), required=True)
    else:
        p.add_argument("--side", type=_positive(float), default=side_default)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--threads", type=_positive(int), default=1)


# ---------------------------------------------------------------------------


def cmd_simulate(args) -> int:
    model = _model(args)
    window = Window.square(args.side)
    margin = 0.2 * args.side if args.core_margin is None else args.core_margin
    if args.solutions:
        Path(args.solutions).mkdir(parents=True, exist_ok=True)

    def one(r: int):
        config = sample_ppp(window, args.intensity, replicate_rng(args.seed, r))
        sol = model.solve(config)
        summary, _ = summarize(config, sol.target, r, args.side, args.intensity, margin)
        return config, sol, summary

    try:
        results = _pmap(one, range(args.replicates), args.threads)
    except SolverDegeneracy as exc:
        print(f"solver degeneracy: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    degenerate = [r for r, (_, sol, _) in enumerate(results) if sol.is_degenerate()]
    if args.solutions:
        for r, (config, sol, _) in enumerate(results):
            docs.write_config(config, Path(args.solutions) / f"config_{r:04d}.json")
            (Path(args.solutions) / f"solution_{r:04d}.csv").write_text(sol.to_csv())
    Path(args.out).write_text(summaries_to_csv([s for _, _, s in results]))
    if degenerate:
        print(f"degenerate replicates: {degenerate}", file=sys.stderr)
        if args.strict:
            return EXIT_DEGENERATE
    return EXIT_OK


def cmd_loopcheck(args) -> int:
    model = _model(args)
    window = Window.square(args.side)
    names = ("cond_i", "cond_ii", "cond_iii", "backward_preserved", "backward_inclusion")
    reports: list[dict] = []
    r = 0
    while len(reports) < args.anchors:
        if r >= args.max_replicates:
            raise ConfigError("not enough determined anchors; raise --max-replicates")
        config = sample_ppp(window, args.intensity, replicate_rng(args.seed, r))
        sol = model.solve(config)
        cand = np.flatnonzero(sol.target >= 0)
        gen = replicate_rng(args.seed, r, 1).generator()
        pick = gen.permutation(cand)[: min(args.per_config, args.anchors - len(reports))]
        for x in pick.tolist():
            entry: dict = {"replicate": r, "anchor": x}
            try:
                wit = construct_loop_break(model, config, sol, x)
                rep = verify_k_looping(config, x, wit.added, model, before=sol)
                entry.update(rep.as_dict())
                entry["passed"] = rep.passed and rep.backward_inclusion
            except LoopBreakError as exc:
                entry.update({k: False for k in names})
                entry.update(degenerate=exc.degenerate, passed=False, error=str(exc))
            reports.append(entry)
        r += 1
    n = len(reports)
    fractions = {k: (sum(e[k] for e in reports) / n if n else None) for k in (*names, "passed")}
    failures = [e for e in reports if not e["passed"]]
    body = {
        "model": model.name,
        "epsilon": getattr(model, "epsilon", None),
        "intensity": args.intensity,
        "side": args.side,
        "seed": args.seed,
        "anchors": n,
        "pass_fraction": fractions,
        "failures": failures,
        "unflagged_failures": sum(1 for e in failures if not e.get("degenerate")),
    }
    text = docs.dumps(docs.document("outdeg1-loopcheck", body))
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    if n and fractions["passed"] < 0.99:
        return EXIT_FAIL
    return EXIT_OK


def cmd_shield(args) -> int:
    if not 0 < args.epsilon < 1:
        raise ConfigError("--epsilon must lie in (0, 1)")
    rep = estimate_p_epsilon(args.epsilon, args.intensity, args.trials, RngSpec(args.seed), threads=args.threads)
    text = docs.dumps(docs.document("outdeg1-shield", {"seed": args.seed, **rep.as_dict()}))
    if args.out:
        Path(args.out).write_text(text)
    print(f"p_hat={rep.p_hat!r} ci95=[{rep.ci95[0]!r}, {rep.ci95[1]!r}] successes={rep.successes}/{rep.trials}")
    return EXIT_OK


def _load_solution(path: str, model: Model):
    text = Path(path).read_text()
    cls = SegmentSolution if isinstance(model, SegmentModel) else NavigationSolution
    return cls.from_csv(text)


def cmd_render(args) -> int:
    model = _model(args)
    try:
        config = docs.read_config(args.input)
        sol = _load_solution(args.solution, model) if args.solution else model.solve(config)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read input: {exc}") from exc
    if sol.n != len(config):
        raise ConfigError("solution and configuration sizes differ")
    ends = sol.impact if isinstance(model, SegmentModel) else None
    Path(args.out).write_text(render_svg(config, sol.target, ends))
    return EXIT_OK


def cmd_sample(args) -> int:
    config = sample_ppp(Window.square(args.side), args.intensity, RngSpec(args.seed))
    docs.write_config(config, args.out)
    return EXIT_OK


def cmd_solve(args) -> int:
    model = _model(args)
    try:
        config = docs.read_config(args.input)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read input: {exc}") from exc
    sol = model.solve(config)
    Path(args.out).write_text(sol.to_csv())
    if args.strict and sol.is_degenerate():
        return EXIT_DEGENERATE
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="outdeg1", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="sample, solve and summarize replicates")
    _add_model_flags(p)
    p.add_argument("--replicates", type=_nonneg_int, default=1)
    p.add_argument("--core-margin", type=float)
    p.add_argument("--out", required=True, help="RunSummary CSV")
    p.add_argument("--solutions", help="directory for per-replicate config and solution files")
    p.add_argument("--strict", action="store_true", help="exit 3 on any degenerate replicate")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("loopcheck", help="construct and verify loop-break witnesses")
    _add_model_flags(p, side_default=20.0)
    p.add_argument("--anchors", type=_nonneg_int, default=100)
    p.add_argument("--per-config", type=_positive(int), default=10)
    p.add_argument("--max-replicates", type=_positive(int), default=100000)
    p.add_argument("--out")
    p.set_defaults(func=cmd_loopcheck)

    p = sub.add_parser("shield", help="estimate the epsilon-shield probability of H(0)")
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--intensity", type=_positive(float), required=True)
    p.add_argument("--trials", type=_positive(int), required=True)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--threads", type=_positive(int), default=1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_shield)

    p = sub.add_parser("render", help="draw a configuration as SVG")
    p.add_argument("--input", required=True, help="configuration document")
    p.add_argument("--solution", help="solution CSV; solved on the fly when omitted")
    p.add_argument("--model", choices=("segment", "navigation"), default="segment")
    p.add_argument("--epsilon", type=float)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("sample", help="write one Poisson configuration document")
    p.add_argument("--intensity", type=_positive(float), default=1.0)
    p.add_argument("--side", type=_positive(float), required=True)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("solve", help="solve a configuration document")
    p.add_argument("--input", required=True)
    p.add_argument("--model", choices=("segment", "navigation"), default="segment")
    p.add_argument("--epsilon", type=float)
    p.add_argument("--out", required=True)
    p.add_argument("--strict", action="store_true")
    p.set_defaults(func=cmd_solve)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
