"""Command-line entry point: ``beamsnr <subcommand> [options]``."""

from __future__ import annotations

import argparse
import sys
from dataclasses import asdict

from . import estimator, harness
from .errors import DegenerateInputError, InvalidArgumentError, SampleParseError
from .hwmodel import PROFILES


def parse_snr_grid(text: str) -> list:
    """``"a:b:step"`` (inclusive) or a comma list such as ``"0,10,20"``."""
    text = text.strip()
    try:
        if ":" in text:
            parts = [float(p) for p in text.split(":")]
            if len(parts) != 3 or parts[2] <= 0 or parts[1] < parts[0]:
                raise ValueError
            a, b, step = parts
            n = int(round((b - a) / step))
            grid = [a + i * step for i in range(n + 1) if a + i * step <= b + 1e-9]
        else:
            grid = [float(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid SNR grid {text!r}; use a:b:step or a comma list") from None
    if not grid:
        raise argparse.ArgumentTypeError("empty SNR grid")
    return [round(g, 12) for g in grid]


def _estimator_list(text: str) -> list:
    names = [t.strip() for t in text.split(",") if t.strip()]
    if names == ["all"]:
        return list(harness.ESTIMATORS)
    return names


def _global_options(p: argparse.ArgumentParser, suppress: bool):
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    p.add_argument("--seed", type=int, default=d(None), help="master seed (default: config value or 0)")
    p.add_argument("--config", default=d(None), help="JSON file with SweepConfig fields")
    p.add_argument("--out", default=d(None), help="output file (default: stdout)")
    p.add_argument("--format", choices=("csv", "json"), default=d("csv"), help="output format")


def _schedule_options(p):
    p.add_argument("--alpha", type=float, help="rare-event probability")
    p.add_argument("--M1", type=int, help="first breakpoint")
    p.add_argument("--M2", type=int, help="second breakpoint")
    p.add_argument("--noise-ref", dest="noise_ref", choices=("mean", "sum"), help="threshold convention")


def _sweep_options(p):
    p.add_argument("--M", type=int, help="antenna count")
    p.add_argument("--L", type=int, help="path count")
    p.add_argument("--snr", dest="snr_grid", type=parse_snr_grid, help="SNR grid in dB, a:b:step or list")
    p.add_argument("--trials", type=int, help="trials per SNR point")
    p.add_argument("--estimators", type=_estimator_list, help="comma list or 'all'")
    p.add_argument("--gamma", type=float, help="constant threshold for proposed_fixed")
    p.add_argument("--decay", type=float, help="per-path power decay")
    p.add_argument("--fx-profile", dest="fx_profile", choices=sorted(PROFILES), help="fixed-point word lengths")
    p.add_argument("--threads", type=int, help="worker threads for sample generation")
    _schedule_options(p)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="beamsnr", description="Blind beamspace noise power and SNR estimation.")
    _global_options(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")
    common = argparse.ArgumentParser(add_help=False)
    _global_options(common, suppress=True)

    p = sub.add_parser("sweep", parents=[common], help="Monte-Carlo SNR sweep over estimators")
    _sweep_options(p)
    p.add_argument("--timing", action="store_true", default=None,
                   help="fill wall_ms (makes output timing dependent)")

    p = sub.add_parser("orderstat", parents=[common], help="gap statistics of sorted noise powers")
    p.add_argument("--M", type=int, default=64)
    p.add_argument("--N0", type=float, default=1.0)
    p.add_argument("--trials", type=int, default=100000)

    p = sub.add_parser("estimate", parents=[common], help="estimate from one sample file")
    p.add_argument("input", help="sample file: 're,im' text lines, or binary little-endian float64 pairs")
    p.add_argument("--binary", action="store_true", default=None, help="force binary input")
    p.add_argument("--text", dest="binary", action="store_false", help="force text input")
    p.add_argument("--domain", choices=("antenna", "beamspace"), default="antenna")
    p.add_argument("--gamma", type=float, help="use one constant threshold")
    p.add_argument("--fx", dest="fx_profile", choices=sorted(PROFILES), help="also run the fixed-point model")
    p.add_argument("--trace", help="write the fixed-point step trace here (needs --fx)")
    _schedule_options(p)

    p = sub.add_parser("fxcompare", parents=[common], help="fixed-point model against the float estimator")
    _sweep_options(p)
    p.add_argument("--trace", help="write the step trace of the first trial here")

    p = sub.add_parser("schedule", parents=[common], help="print the threshold schedule")
    p.add_argument("--M", type=int, default=64)
    _schedule_options(p)
    return parser


SWEEP_KEYS = ("M", "L", "snr_grid", "trials", "estimators", "alpha", "M1", "M2", "gamma", "noise_ref",
              "decay", "fx_profile", "threads", "timing")


def _load_config(args) -> harness.SweepConfig:
    base = {}
    if args.config:
        base = harness.SweepConfig.from_json(args.config).to_dict()
    for k in SWEEP_KEYS:
        v = getattr(args, k, None)
        if v is not None:
            base[k] = v
    if args.seed is not None:
        base["seed"] = args.seed
    return harness.SweepConfig.from_dict(base)


def _schedule_kwargs(args) -> dict:
    kw = {"alpha": estimator.DEFAULT_ALPHA, "M1": None, "M2": None, "noise_ref": "mean"}
    if args.config:
        cfg = harness.SweepConfig.from_json(args.config)
        kw.update(alpha=cfg.alpha, M1=cfg.M1, M2=cfg.M2, noise_ref=cfg.noise_ref)
    for k in kw:
        v = getattr(args, k, None)
        if v is not None:
            kw[k] = v
    return kw


def _emit(text: str, args):
    if args.out:
        harness.atomic_write_text(args.out, text)
    else:
        sys.stdout.write(text)


def cmd_sweep(args) -> int:
    cfg = _load_config(args)
    records = harness.run_sweep(cfg)
    _emit(harness.records_to_csv(records) if args.format == "csv" else harness.records_to_json(records, cfg), args)
    return 0


def cmd_orderstat(args) -> int:
    rep = harness.run_orderstat_validation(args.M, args.N0, args.trials, args.seed or 0)
    if args.format == "json":
        _emit(harness.dumps_json(rep.to_dict()), args)
    else:
        cols = ("m", "mean", "expected_mean", "std_err", "z", "var", "expected_var", "var_rel_err")
        _emit(harness.rows_to_csv(cols, [[getattr(r, c) for c in cols] for r in rep.rows]), args)
    print(f"orderstat M={rep.M} trials={rep.trials} max|corr|={rep.max_abs_corr:.4f} "
          f"mean_ok={rep.mean_ok} var_ok={rep.var_ok} corr_ok={rep.corr_ok}", file=sys.stderr)
    return 0 if rep.passed else 1


def cmd_estimate(args) -> int:
    if args.trace and not args.fx_profile:
        raise InvalidArgumentError("--trace needs --fx")
    kw = _schedule_kwargs(args)
    trace_fh = open(args.trace, "w", encoding="utf-8") if args.trace else None
    try:
        res = harness.estimate_file(args.input, None, gamma=args.gamma, domain=args.domain, binary=args.binary,
                                    fx_profile=args.fx_profile, trace=trace_fh, **kw)
    finally:
        if trace_fh is not None:
            trace_fh.close()
    if args.format == "json":
        _emit(harness.dumps_json(res), args)
    else:
        e = res["estimate"]
        cols = ["M", "n0_hat", "px_hat", "rho_hat", "m_star", "hit", "S_M"]
        row = [res["M"], e["n0_hat"], e["px_hat"], e["rho_hat"], e["m_star"], e["hit"], e["S_M"]]
        if "fx" in res:
            cols += ["fx_n0_hat", "fx_px_hat", "fx_rho_hat", "fx_m_star"]
            f = res["fx"]
            row += [f["n0_hat"], f["px_hat"], f["rho_hat"], f["m_star"]]
        _emit(harness.rows_to_csv(cols, [row]), args)
    return 0


def cmd_fxcompare(args) -> int:
    cfg = _load_config(args)
    trace_fh = open(args.trace, "w", encoding="utf-8") if args.trace else None
    try:
        recs = harness.run_fxcompare(cfg, trace=trace_fh)
    finally:
        if trace_fh is not None:
            trace_fh.close()
    if args.format == "json":
        _emit(harness.dumps_json({"config": cfg.to_dict(), "records": [asdict(r) for r in recs]}), args)
    else:
        cols = ("snr_db", "trials", "sort_exact", "n0_within", "rho_within", "m_star_agree",
                "unexpected_saturations", "n0_max_abs_err")
        _emit(harness.rows_to_csv(cols, [[getattr(r, c) for c in cols] for r in recs]), args)
    return 0 if all(r.passed() for r in recs) else 1


def cmd_schedule(args) -> int:
    kw = _schedule_kwargs(args)
    s = estimator.build_schedule(args.M, **kw)
    f = estimator.fixed_schedule(args.M, kw["alpha"], kw["noise_ref"])
    d = s.to_dict()
    d["fixed_gamma"] = f.gamma1
    d["noise_ref"] = kw["noise_ref"]
    if args.format == "json":
        _emit(harness.dumps_json(d), args)
    else:
        cols = ("M", "alpha", "noise_ref", "gamma1", "gamma2", "gamma3", "M1", "M2", "z1", "z2", "z3", "fixed_gamma")
        z = d["z"]
        _emit(harness.rows_to_csv(cols, [[d["M"], d["alpha"], d["noise_ref"], d["gamma1"], d["gamma2"],
                                          d["gamma3"], d["M1"], d["M2"], z[0], z[1], z[2], d["fixed_gamma"]]]), args)
    return 0


COMMANDS = {"sweep": cmd_sweep, "orderstat": cmd_orderstat, "estimate": cmd_estimate,
            "fxcompare": cmd_fxcompare, "schedule": cmd_schedule}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (InvalidArgumentError, SampleParseError, DegenerateInputError, OSError) as e:
        print(f"beamsnr: error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
