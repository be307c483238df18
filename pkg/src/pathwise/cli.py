"""Command-line surface: generators, partitions, studies, audits.

One subcommand per study; no interactive mode.  Every run prints a JSON
report to stdout with floats serialized at 17 significant digits, so a fixed
config (seeds included) produces byte-identical reports.  Relative output
paths resolve against the PATHWISE_OUT environment variable when it is set.

Exit codes: 0 typical result, 1 atypicality flagged by an audit, 2 vacuous
check (a reported bound >= 1), 4 invalid usage or runtime failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .audit import (
    MonteCarloConfig,
    crossing_bound_report,
    deviation_event,
    deviation_frequency,
    upcrossing_strategy,
    wealth,
    _admitted,
)
from .calculus import (
    c2_function,
    follmer_integral,
    occupation_density_check,
    tanaka_meyer,
)
from .localtime import convergence_study, local_time_field
from .partitions import lebesgue_partition, mesh_along, save_partition_csv
from .paths import (
    Path,
    brownian_path,
    constant_path,
    linear_path,
    load_csv,
    random_segment_path,
    save_csv,
    tent_path,
    zigzag_path,
)

OUTPUT_ENV = "PATHWISE_OUT"

__all__ = ["RunConfig", "main", "dumps_report"]


# ---------------------------------------------------------------------------
# deterministic JSON


def _fmt_float(x: float) -> str:
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    return format(x, ".17g")


def _dump(obj, parts: list, indent: int, level: int) -> None:
    pad = " " * (indent * level)
    pad_in = " " * (indent * (level + 1))
    if isinstance(obj, bool):
        parts.append("true" if obj else "false")
    elif isinstance(obj, (int, np.integer)):
        parts.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        parts.append(_fmt_float(float(obj)))
    elif obj is None:
        parts.append("null")
    elif isinstance(obj, str):
        parts.append(json.dumps(obj))
    elif isinstance(obj, dict):
        if not obj:
            parts.append("{}")
            return
        parts.append("{\n")
        for i, key in enumerate(sorted(obj)):
            parts.append(f"{pad_in}{json.dumps(str(key))}: ")
            _dump(obj[key], parts, indent, level + 1)
            parts.append(",\n" if i < len(obj) - 1 else "\n")
        parts.append(pad + "}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            parts.append("[]")
            return
        parts.append("[\n")
        for i, item in enumerate(seq):
            parts.append(pad_in)
            _dump(item, parts, indent, level + 1)
            parts.append(",\n" if i < len(seq) - 1 else "\n")
        parts.append(pad + "]")
    else:
        raise TypeError(f"cannot serialize {type(obj).__name__} in a report")


def dumps_report(obj, indent: int = 2) -> str:
    """JSON with sorted keys and floats at exactly 17 significant digits."""
    parts: list = []
    _dump(obj, parts, indent, 0)
    return "".join(parts) + "\n"


def _out_path(name: str | None) -> str | None:
    if name is None:
        return None
    base = os.environ.get(OUTPUT_ENV)
    if base and not os.path.isabs(name):
        return os.path.join(base, name)
    return name


def _emit(report: dict, params: dict) -> None:
    text = dumps_report(report)
    sys.stdout.write(text)
    out = _out_path(params.get("report"))
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)


# ---------------------------------------------------------------------------
# run configuration


@dataclass(frozen=True)
class RunConfig:
    """A subcommand name plus its fully resolved parameters.

    Round-trips through JSON without loss: parameters are plain scalars,
    strings, or null, and float formatting keeps 17 significant digits.
    """

    command: str
    params: dict

    def to_json(self) -> str:
        return dumps_report({"command": self.command, "params": self.params})

    @staticmethod
    def from_json(text: str) -> "RunConfig":
        raw = json.loads(text)
        return RunConfig(command=str(raw["command"]), params=dict(raw["params"]))

    def save(self, filename) -> None:
        with open(filename, "w", encoding="utf-8") as fh:
            fh.write(self.to_json())

    @staticmethod
    def load(filename) -> "RunConfig":
        with open(filename, encoding="utf-8") as fh:
            return RunConfig.from_json(fh.read())


def _parse_levels(text: str) -> list[int]:
    """'4..8' -> [4..8]; '3,5,7' -> [3,5,7]; '6' -> [6]."""
    text = str(text).strip()
    if ".." in text:
        lo, hi = text.split("..", 1)
        lo, hi = int(lo), int(hi)
        if hi < lo:
            raise ValueError(f"empty level range {text!r}")
        return list(range(lo, hi + 1))
    return [int(tok) for tok in text.split(",") if tok.strip()]


_GENERATORS = ("brownian", "tent", "constant", "linear", "zigzag", "segments")


def _make_path(params: dict) -> Path:
    src = params.get("path")
    if src:
        return load_csv(src if os.path.exists(src) else (_out_path(src) or src))
    gen = params.get("gen")
    if not gen:
        raise ValueError("need --path FILE or --gen NAME")
    seed = int(params.get("seed") or 0)
    T = float(params.get("T") or 1.0)
    if gen == "brownian":
        dt = params.get("dt")
        return brownian_path(T, float(dt) if dt else 2.0**-20, seed)
    if gen == "tent":
        return tent_path(height=float(params.get("high") or 1.0))
    if gen == "constant":
        return constant_path(float(params.get("value") or 0.0), T)
    if gen == "linear":
        return linear_path(T, slope=float(params.get("slope") or 1.0))
    if gen == "zigzag":
        return zigzag_path(
            low=float(params.get("low") or 0.0),
            high=float(params.get("high") or 1.0),
            cycles=int(params.get("cycles") or 2),
            start=params.get("start"),
        )
    if gen == "segments":
        return random_segment_path(
            seed,
            segments=params.get("segments"),
            bound=params.get("bound"),
        )
    raise ValueError(f"unknown generator {gen!r}; choose from {_GENERATORS}")


_NAMED_G = {
    "identity": lambda x: x,
    "square": lambda x: x * x,
    "sin": np.sin,
    "exp": np.exp,
}


# ---------------------------------------------------------------------------
# subcommand handlers (each takes the resolved params dict)


def cmd_generate(params: dict) -> int:
    path = _make_path(params)
    out = _out_path(params.get("out"))
    if out:
        save_csv(path, out)
    _emit(
        {
            "kind": params.get("gen") or "file",
            "samples": int(path.times.size),
            "end_time": path.end_time,
            "start_value": path.start_value,
            "end_value": path.end_value,
            "min_value": float(path.values.min()),
            "max_value": float(path.values.max()),
            "out": out,
        },
        params,
    )
    return 0


def cmd_partition(params: dict) -> int:
    path = _make_path(params)
    part = lebesgue_partition(path, int(params["level"]), params.get("t"))
    out = _out_path(params.get("out"))
    if out:
        save_partition_csv(part, out)
    _emit(
        {
            "level": part.level,
            "spacing": part.spacing,
            "stops": part.stop_count(),
            "truncated": part.truncated,
            "mesh": mesh_along(path, part),
            "horizon": part.horizon,
            "out": out,
        },
        params,
    )
    return 0


def cmd_localtime(params: dict) -> int:
    path = _make_path(params)
    field = local_time_field(path, int(params["level"]), params.get("horizon"))
    t = float(params["t"]) if params.get("t") is not None else field.horizon
    sec = field.section(t)
    out = _out_path(params.get("out"))
    if out:
        field.export_csv(out)
    ug = field.u_grid
    vals = sec.evaluate(ug)
    _emit(
        {
            "level": field.level,
            "t": t,
            "total_mass": sec.integral(),
            "max_site_value": float(vals.max()) if vals.size else 0.0,
            "support": [float(ug[0]), float(ug[-1])],
            "out": out,
        },
        params,
    )
    return 0


def cmd_converge(params: dict) -> int:
    path = _make_path(params)
    levels = _parse_levels(params["levels"])
    report = convergence_study(
        path,
        levels,
        horizon=params.get("t"),
        alpha=float(params.get("alpha") or 0.35),
        profile_p=params.get("p"),
    )
    _emit(report.to_dict(), params)
    return 0


def cmd_identity(params: dict) -> int:
    path = _make_path(params)
    t = params.get("t")
    res = tanaka_meyer(path, int(params["level"]), float(params["u"]), t)
    _emit(
        {
            "level": int(params["level"]),
            "u": float(params["u"]),
            "t": float(t) if t is not None else path.end_time,
            "local_time": res.local_time,
            "rhs": res.rhs,
            "gap": res.gap,
        },
        params,
    )
    return 0


def cmd_occupation(params: dict) -> int:
    path = _make_path(params)
    region = None
    if params.get("lo") is not None or params.get("hi") is not None:
        if params.get("lo") is None or params.get("hi") is None:
            raise ValueError("--lo and --hi must be given together")
        region = [(float(params["lo"]), float(params["hi"]))]
    report = occupation_density_check(path, int(params["level"]), region, params.get("t"))
    _emit(report.to_dict(), params)
    return 0


def cmd_integrate(params: dict) -> int:
    path = _make_path(params)
    g_name = params.get("g") or "identity"
    if g_name not in _NAMED_G:
        raise ValueError(f"unknown integrand {g_name!r}; choose from {sorted(_NAMED_G)}")
    levels = _parse_levels(params.get("levels") or "2..8")
    result = follmer_integral(
        _NAMED_G[g_name],
        path,
        levels,
        t=params.get("t"),
        tol=float(params.get("tol") or 1e-6),
    )
    out = result.to_dict()
    out["g"] = g_name
    _emit(out, params)
    return 0


def _wealth_trajectory(path: Path, u: float, n: int, K: float):
    from .audit import resolve

    strat = upcrossing_strategy(u, n, K)
    resolved = resolve(strat, path)
    stamps = [float(t) for t in resolved.times if math.isfinite(t)]
    stamps.append(path.end_time)
    return tuple((t, 1.0 + wealth(strat, path, t)) for t in stamps)


def cmd_audit(params: dict) -> int:
    levels = _parse_levels(params.get("levels") or "3..7")
    seeds = params.get("seeds")
    if seeds and (params.get("gen") or "brownian") == "brownian" and not params.get("path"):
        dt = float(params.get("dt") or 2.0**-20)
        T = float(params.get("T") or 1.0)
        reports = []
        for seed in range(int(seeds)):
            path = brownian_path(T, dt, seed)
            reports.append(crossing_bound_report(path, T, levels))
        n_flagged = sum(1 for r in reports if r.flagged)
        ratios = []
        for r in reports:
            pos = [c for c in r.c_levels if c > 0]
            ratios.append(max(pos) / min(pos) if len(pos) >= 2 else 1.0)
        summary = {
            "levels": levels,
            "seeds": int(seeds),
            "n_flagged": n_flagged,
            "median_c_ratio": float(np.median(ratios)),
            "reports": [r.to_dict() for r in reports],
        }
        _emit(summary, params)
        return 1 if 2 * n_flagged > int(seeds) else 0
    path = _make_path(params)
    report = crossing_bound_report(path, params.get("t"), levels)
    if params.get("u") is not None:
        traj = _wealth_trajectory(
            path,
            float(params["u"]),
            int(params.get("n") or levels[0]),
            float(params.get("K") or 1.0),
        )
        report = dataclasses.replace(report, wealth_trajectory=traj)
    _emit(report.to_dict(), params)
    return 1 if report.flagged else 0


def _mc_seed_worker(job) -> tuple[int, bool, bool]:
    seed, level, alpha, K, T, dt = job
    path = brownian_path(T, dt, seed)
    ok = _admitted(path, level, K, T)
    dev = False
    if ok:
        dev = deviation_event(path, level, 2.0 ** (-level * alpha), T)
    return seed, ok, dev


def cmd_montecarlo(params: dict) -> int:
    config = MonteCarloConfig(
        seeds=int(params.get("seeds") or 50),
        level=int(params.get("level") or 8),
        alpha=float(params.get("alpha") or 0.25),
        K=float(params.get("K") or 4.0),
        T=float(params.get("T") or 1.0),
        dt=params.get("dt"),
    )
    jobs = int(params.get("jobs") or 1)
    if jobs > 1:
        if not (0.0 < config.alpha < 0.5) or config.level < 2:
            raise ValueError("alpha must lie in (0, 1/2) and level must be >= 2")
        work = [
            (seed, config.level, config.alpha, config.K, config.T, config.step())
            for seed in config.seed_list()
        ]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = sorted(pool.map(_mc_seed_worker, work))
        admitted = sum(1 for _, ok, _ in results if ok)
        deviations = sum(1 for _, ok, dev in results if ok and dev)
        n = config.level
        log_bound = math.log(2.0) - 2.0 ** (n * (0.5 - config.alpha)) + 16.0 * config.K * n * n
        bound = math.exp(log_bound) if log_bound < 700.0 else math.inf
        from .audit import DeviationReport

        report = DeviationReport(
            level=n,
            alpha=config.alpha,
            K=config.K,
            T=config.T,
            threshold=2.0 ** (-n * config.alpha),
            n_paths=len(work),
            n_admitted=admitted,
            n_deviations=deviations,
            empirical_freq=deviations / admitted if admitted else 0.0,
            exponential_bound=bound,
            log_exponential_bound=log_bound,
            vacuous=not (bound < 1.0),
        )
    else:
        report = deviation_frequency(config)
    _emit(report.to_dict(), params)
    return 2 if report.vacuous else 0


_HANDLERS = {
    "generate": cmd_generate,
    "partition": cmd_partition,
    "localtime": cmd_localtime,
    "converge": cmd_converge,
    "identity": cmd_identity,
    "occupation": cmd_occupation,
    "integrate": cmd_integrate,
    "audit": cmd_audit,
    "montecarlo": cmd_montecarlo,
}


# ---------------------------------------------------------------------------
# argument parsing


class _Parser(argparse.ArgumentParser):
    # usage errors land on the runtime-failure exit code, keeping 2 for
    # vacuous checks
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(4)


def _add_source_args(sp) -> None:
    sp.add_argument("--path", help="CSV path file (t,value)")
    sp.add_argument("--gen", choices=_GENERATORS, help="generate the input path")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--T", type=float, default=None, help="generator time horizon")
    sp.add_argument("--dt", type=float, default=None, help="generator time step")
    sp.add_argument("--low", type=float, default=None)
    sp.add_argument("--high", type=float, default=None)
    sp.add_argument("--cycles", type=int, default=None)
    sp.add_argument("--start", type=float, default=None)
    sp.add_argument("--value", type=float, default=None)
    sp.add_argument("--slope", type=float, default=None)
    sp.add_argument("--segments", type=int, default=None)
    sp.add_argument("--bound", type=float, default=None)


def _add_common(sp) -> None:
    sp.add_argument("--report", help="also write the JSON report to this file")
    sp.add_argument("--save-config", dest="save_config", help="write the resolved RunConfig JSON")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pathwise", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("generate", help="generate a path and write it as CSV")
    _add_source_args(sp)
    sp.add_argument("--out", help="CSV output file")
    _add_common(sp)

    sp = sub.add_parser("partition", help="level-crossing partition of a path")
    _add_source_args(sp)
    sp.add_argument("--level", type=int, required=True)
    sp.add_argument("--t", type=float, default=None, help="horizon (default: path end)")
    sp.add_argument("--out", help="CSV output file (k,tau,value)")
    _add_common(sp)

    sp = sub.add_parser("localtime", help="discrete local time field")
    _add_source_args(sp)
    sp.add_argument("--level", type=int, required=True)
    sp.add_argument("--t", type=float, default=None, help="section time (default: horizon)")
    sp.add_argument("--horizon", type=float, default=None)
    sp.add_argument("--out", help="long-format CSV (t,u,L)")
    _add_common(sp)

    sp = sub.add_parser("converge", help="local-time uniform-distance convergence study")
    _add_source_args(sp)
    sp.add_argument("--levels", required=True, help="e.g. 4..8 or 4,6,8")
    sp.add_argument("--alpha", type=float, default=None)
    sp.add_argument("--p", type=float, default=None, help="also track the p-variation profile")
    sp.add_argument("--t", type=float, default=None)
    _add_common(sp)

    sp = sub.add_parser("identity", help="local time vs payoff-minus-integral at one site")
    _add_source_args(sp)
    sp.add_argument("--level", type=int, required=True)
    sp.add_argument("--u", type=float, required=True)
    sp.add_argument("--t", type=float, default=None)
    _add_common(sp)

    sp = sub.add_parser("occupation", help="occupation-time identity check")
    _add_source_args(sp)
    sp.add_argument("--level", type=int, required=True)
    sp.add_argument("--lo", type=float, default=None)
    sp.add_argument("--hi", type=float, default=None)
    sp.add_argument("--t", type=float, default=None)
    _add_common(sp)

    sp = sub.add_parser("integrate", help="pathwise integral of g(S) dS over dyadic levels")
    _add_source_args(sp)
    sp.add_argument("--g", choices=sorted(_NAMED_G), default="identity")
    sp.add_argument("--levels", default="2..8")
    sp.add_argument("--t", type=float, default=None)
    sp.add_argument("--tol", type=float, default=None)
    _add_common(sp)

    sp = sub.add_parser("audit", help="crossing-bound constants and atypicality flag")
    _add_source_args(sp)
    sp.add_argument("--levels", default="3..7")
    sp.add_argument("--seeds", type=int, default=None, help="sweep Brownian seeds 0..N-1")
    sp.add_argument("--t", type=float, default=None)
    sp.add_argument("--u", type=float, default=None, help="attach an upcrossing wealth trajectory")
    sp.add_argument("--n", type=int, default=None)
    sp.add_argument("--K", type=float, default=None)
    _add_common(sp)

    sp = sub.add_parser("montecarlo", help="deviation-frequency study vs the exponential bound")
    sp.add_argument("--seeds", type=int, default=50)
    sp.add_argument("--level", type=int, default=8)
    sp.add_argument("--alpha", type=float, default=0.25)
    sp.add_argument("--K", type=float, default=4.0)
    sp.add_argument("--T", type=float, default=1.0)
    sp.add_argument("--dt", type=float, default=None)
    sp.add_argument("--jobs", type=int, default=1)
    _add_common(sp)

    sp = sub.add_parser("run", help="execute a saved RunConfig JSON")
    sp.add_argument("config", help="RunConfig JSON file")
    return parser


_SKIP_KEYS = {"command", "save_config", "config"}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.command == "run":
            config = RunConfig.load(args.config)
            if config.command not in _HANDLERS:
                raise ValueError(f"unknown command {config.command!r} in config")
            return _HANDLERS[config.command](config.params)
        params = {k: v for k, v in vars(args).items() if k not in _SKIP_KEYS}
        config = RunConfig(command=args.command, params=params)
        if getattr(args, "save_config", None):
            config.save(_out_path(args.save_config))
        return _HANDLERS[args.command](params)
    except Exception as exc:  # noqa: BLE001 - single reporting point for the CLI
        print(f"error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
