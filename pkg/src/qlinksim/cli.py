"""``qlinksim sweep|verify|analytics``.

Exit codes: 0 success, 1 usage or configuration error, 2 invariant failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import secrets
import sys
import time
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__, analytics, config, verify
from .config import ConfigError
from .montecarlo import SweepRow, make_grid, run_sweep
from .noise import fidelity_of, p_b_of_fidelity

log = logging.getLogger("qlinksim")

CSV_FIELDS = ["d", "t", "p_b", "p_l", "trials", "failures", "p_link", "ci_low", "ci_high", "mean_rounds", "seed"]

EXIT_OK, EXIT_USAGE, EXIT_INVARIANT = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _num(x: float) -> str:
    return repr(float(x))


def csv_record(row: SweepRow, trials: int) -> list[str]:
    est, rounds = row.estimate, row.mean_rounds
    if est is None:
        stats = [str(trials), "nan", "nan", "nan", "nan", "nan"]
    else:
        stats = [str(est.trials), str(est.failures), _num(est.p_hat), _num(est.ci_low), _num(est.ci_high),
                 _num(rounds.value)]
    return [str(row.d), str(row.t), _num(row.p_b), _num(row.p_l)] + stats + [str(row.seed)]


def _versions() -> dict:
    import pymatching
    import scipy

    return {"qlinksim": __version__, "verify_suites": verify.SUITE_VERSION, "numpy": np.__version__,
            "scipy": scipy.__version__, "pymatching": pymatching.__version__}


def _sweep_plans(cfg: dict, seed: int):
    ds = config.parse_ints(cfg["d"])
    p_bs = config.parse_floats(cfg["p_b"])
    p_ls = config.parse_floats(cfg["p_l"])
    if not ds or not p_bs or not p_ls:
        raise ConfigError("empty sweep")
    even = [d for d in ds if d % 2 == 0]
    if even:
        raise ConfigError(f"threshold sweeps need odd code distances, got {even}")
    t = None if cfg["t"].strip().lower() == "d" else config.parse_scalar(cfg["t"], int)
    error_type = cfg["error_type"].lower()
    if error_type not in ("x", "z", "combined"):
        raise ConfigError(f"error type must be x, z or combined, got {error_type!r}")
    try:
        return make_grid(ds, p_bs, p_ls, trials=config.parse_scalar(cfg["trials"], int), master_seed=seed, t=t,
                         perfect_measurement=config.parse_bool(cfg["perfect_measurement"]), error_type=error_type)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _seed(cfg: dict) -> int:
    if cfg.get("seed") not in (None, ""):
        seed = config.parse_scalar(cfg["seed"], int)
        if not 0 <= seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        return seed
    return secrets.randbits(64)


def cmd_sweep(args) -> int:
    cfg = config.resolve(config.SWEEP_DEFAULTS, args.preset, args.config, _flag_values(args, SWEEP_FLAGS))
    seed = _seed(cfg)
    cfg["seed"] = str(seed)
    plans = _sweep_plans(cfg, seed)
    unit = cfg["unit"]
    if unit not in ("cycle", "measurement"):
        raise ConfigError(f"unit must be cycle or measurement, got {unit!r}")
    workers = config.parse_scalar(cfg["workers"], int)

    out = Path(cfg["out"])
    out.parent.mkdir(parents=True, exist_ok=True)
    manifest_path = out.with_suffix(".manifest.json")
    started = time.time()
    manifest = {
        "command": "sweep",
        "config": cfg,
        "master_seed": seed,
        "points": [
            {"index": i, "d": p.d, "t": p.depth, "p_b": p.p_b, "p_l": p.p_l, "seed": p.master_seed}
            for i, p in enumerate(plans)
        ],
        "versions": _versions(),
        "started": datetime.fromtimestamp(started, timezone.utc).isoformat(),
        "status": "running",
    }
    manifest_path.write_text(json.dumps(manifest, indent=2))

    with out.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_FIELDS)
        fh.flush()

        def flush_row(row: SweepRow):
            writer.writerow(csv_record(row, plans[0].trials))
            fh.flush()
            if row.error:
                log.warning("point d=%d p_b=%g p_l=%g failed: %s", row.d, row.p_b, row.p_l, row.error)
            else:
                log.info("d=%d t=%d p_b=%g p_l=%g p_link=%.4g", row.d, row.t, row.p_b, row.p_l, row.estimate.p_hat)

        result = run_sweep(plans, workers=workers, unit=unit, on_row=flush_row)

    finished = time.time()
    manifest.update(
        status="complete",
        finished=datetime.fromtimestamp(finished, timezone.utc).isoformat(),
        wall_seconds=finished - started,
        errors=[{"index": i, "error": r.error} for i, r in enumerate(result.rows) if r.error],
    )
    if config.parse_bool(cfg["figure"]) and result.ok_rows():
        from .plotting import render_sweep

        manifest["figure"] = str(render_sweep(result, out.with_suffix(".png")))
    manifest_path.write_text(json.dumps(manifest, indent=2))
    print(f"wrote {out} ({len(result.rows)} rows), manifest {manifest_path}")
    return EXIT_OK


def cmd_verify(args) -> int:
    names = list(verify.SUITES) if args.suite in (None, "all") else [s.strip() for s in args.suite.split(",")]
    unknown = [n for n in names if n not in verify.SUITES]
    if unknown:
        raise ConfigError(f"unknown suite(s) {unknown}; choose from {', '.join(verify.SUITES)}")
    results = []
    for name in names:
        kwargs = {}
        if name == "min-weight" and args.d:
            kwargs["distances"] = tuple(config.parse_ints(args.d))
        if name == "oracle-equivalence" and args.instances:
            kwargs["instances"] = args.instances
        results.append(verify.SUITES[name](**kwargs))
    report = {"passed": all(r.passed for r in results), "suites": [r.to_dict() for r in results],
              "versions": _versions()}
    text = json.dumps(report, indent=2)
    print(text)
    if args.out:
        Path(args.out).write_text(text)
    return EXIT_OK if report["passed"] else EXIT_INVARIANT


def analytics_report(cfg: dict) -> dict:
    f = lambda key: config.parse_scalar(cfg[key], float)  # noqa: E731
    i = lambda key: config.parse_scalar(cfg[key], int)  # noqa: E731
    try:
        fidelity = f("fidelity")
        p_b = round(p_b_of_fidelity(fidelity), 12)
        p_l = f("p_l")
        timing = analytics.TimingParams(f("t_g"), f("t_m"), f("t_b"))
        chain = analytics.ChainSpec(i("n_links"), f("p_c"), 1.0 - p_l)
        if config.parse_bool(cfg["calibrate"]):
            cal = analytics.calibrate(p_l, fidelity, i("d_ref"), i("calibration_trials"),
                                      config.parse_scalar(cfg.get("seed") or "0", int), f("d_10"), i("workers"))
        else:
            cal = analytics.ScalingCalibration(i("d_ref"), f("p_ref"), f("d_10"),
                                               f("cal_p_l"), f("cal_fidelity"))
        d = analytics.required_distance(chain, cal)
        return {
            "fidelity": fidelity,
            "p_b": p_b,
            "p_l": p_l,
            "timing": {"t_g": timing.t_g, "t_m": timing.t_m, "t_b": timing.t_b, "round_time": timing.round_time},
            "calibration": {"d_ref": cal.d_ref, "p_ref": cal.p_ref, "d_10": cal.d_10, "p_l": cal.p_l,
                            "fidelity": cal.fidelity,
                            "matches_operating_point": bool(math.isclose(cal.p_l, p_l)
                                                            and math.isclose(cal.fidelity, fidelity))},
            "n_links": chain.n_links,
            "p_c": chain.p_c,
            "required_distance": d,
            "cycle_time_s": analytics.cycle_time(d, timing),
            "cycle_time_lossy_s": analytics.cycle_time_lossy(d, timing, p_l),
            "qubits_per_repeater": analytics.qubits_per_repeater(d, i("k")),
            "bell_pairs_per_logical_qubit": analytics.bell_pairs_per_logical_qubit(d),
            "heralded_rate_hz": analytics.heralded_rate(chain, cal, timing, i("generators")),
            "check_fidelity": fidelity_of(p_b),
        }
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def cmd_analytics(args) -> int:
    cfg = config.resolve(config.ANALYTICS_DEFAULTS, args.preset, args.config, _flag_values(args, ANALYTICS_FLAGS))
    report = analytics_report(cfg)
    text = json.dumps(report, indent=2)
    print(text)
    if args.out:
        Path(args.out).write_text(text)
    return EXIT_OK


SWEEP_FLAGS = ["seed", "workers", "out", "error_type", "perfect_measurement", "d", "p_b", "p_l", "t", "trials",
               "unit", "figure"]
ANALYTICS_FLAGS = ["seed", "workers", "n_links", "p_c", "p_l", "fidelity", "t_g", "t_m", "t_b", "d_10", "d_ref",
                   "p_ref", "cal_p_l", "cal_fidelity", "k", "generators", "calibrate", "calibration_trials"]


def _flag_values(args, names) -> dict:
    values = {n: getattr(args, n, None) for n in names}
    for pair in getattr(args, "set", None) or []:
        if "=" not in pair:
            raise ConfigError(f"--set expects KEY=VALUE, got {pair!r}")
        key, value = pair.split("=", 1)
        values[config.normalise_key(key)] = value
    return values


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qlinksim", description="Surface-code repeater link simulator.")
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p):
        p.add_argument("--config", help="flat key = value config file")
        p.add_argument("--preset", help=f"one of {', '.join(config.PRESETS)}")
        p.add_argument("--seed", type=int, help="master seed (unsigned 64-bit)")
        p.add_argument("--workers", type=int)
        p.add_argument("--out", help="output path")
        p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override any config key")

    sw = sub.add_parser("sweep", help="Monte Carlo sweep to CSV + manifest + figure")
    common(sw)
    sw.add_argument("--error-type", choices=["x", "z", "combined"])
    sw.add_argument("--perfect-measurement", action="store_const", const="true")
    sw.add_argument("--d", help="code distances, e.g. 3,5,7")
    sw.add_argument("--p-b", dest="p_b", help="Bell error rates, list or start:stop:step")
    sw.add_argument("--p-l", dest="p_l", help="loss rates, list or start:stop:step")
    sw.add_argument("--t", help="rounds per block, or 'd'")
    sw.add_argument("--trials", type=int)
    sw.add_argument("--unit", choices=["cycle", "measurement"], help="unit of mean_rounds")
    sw.add_argument("--no-figure", dest="figure", action="store_const", const="false")
    sw.set_defaults(func=cmd_sweep)

    ve = sub.add_parser("verify", help="run invariant suites")
    common(ve)
    ve.add_argument("--suite", help=f"comma list of {', '.join(verify.SUITES)} or 'all'")
    ve.add_argument("--d", help="distances for the min-weight suite")
    ve.add_argument("--instances", type=int, help="instances for oracle-equivalence")
    ve.set_defaults(func=cmd_verify)

    an = sub.add_parser("analytics", help="rate and resource formulas")
    common(an)
    an.add_argument("--n-links", dest="n_links", type=int)
    an.add_argument("--p-c", dest="p_c", type=float)
    an.add_argument("--p-l", dest="p_l", type=float)
    an.add_argument("--fidelity", type=float)
    an.add_argument("--t-g", dest="t_g", type=float)
    an.add_argument("--t-m", dest="t_m", type=float)
    an.add_argument("--t-b", dest="t_b", type=float)
    an.add_argument("--d-10", dest="d_10", type=float)
    an.add_argument("--d-ref", dest="d_ref", type=int)
    an.add_argument("--p-ref", dest="p_ref", type=float)
    an.add_argument("--cal-p-l", dest="cal_p_l", type=float, help="loss rate p_ref was fitted at")
    an.add_argument("--cal-fidelity", dest="cal_fidelity", type=float, help="fidelity p_ref was fitted at")
    an.add_argument("--k", type=int, help="repeater strip width in columns")
    an.add_argument("--generators", type=int)
    an.add_argument("--calibrate", action="store_const", const="true", help="fit p_ref by simulation")
    an.add_argument("--calibration-trials", dest="calibration_trials", type=int)
    an.set_defaults(func=cmd_analytics)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"qlinksim: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
