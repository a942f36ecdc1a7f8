"""``cssf`` command-line front end.

Exit codes: 0 pass, 1 residual failure, 2 usage error, 3 numeric abort.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path

from . import config as cfgmod
from . import store, svg
from .curve import ImmersionError
from .flow import FlowConfig, SingularityError, integrate
from .functionals import pair_from_spec
from .geometry import OriginHitError
from .monotonicity import report_passes, snapshot_terms, theorem_rhs, verify_generic
from .presets import DEFAULTS, preset

EXIT_OK, EXIT_RESIDUAL, EXIT_USAGE, EXIT_ABORT = 0, 1, 2, 3

#: theorem-form right side vs the generic one, relative to 1 + |rhs|
TOL_THEOREM = 1e-8

log = logging.getLogger("cssf")


class UsageError(Exception):
    pass


def _initial_curve(cfg: cfgmod.RunConfig):
    return preset(cfg.preset, cfg.n_nodes, cfg.frame, origin_shift=cfg.origin_shift,
                  **cfg.preset_params)


def _integrate(cfg: cfgmod.RunConfig):
    flow_cfg = FlowConfig(t_end=cfg.t_end, dt_safety=cfg.dt_safety,
                          snapshot_every=cfg.snapshot_every, resample_every=cfg.resample_every)
    return integrate(_initial_curve(cfg), flow_cfg)


def _traj_dir(cfg) -> Path:
    return Path(cfg.output_dir) / "trajectory"


def _save_partial(cfg, exc: SingularityError):
    traj = exc.trajectory
    if traj is not None and len(traj):
        last = traj.states[-1]
        out = Path(cfg.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        path = store.write_snapshot(last, out / "last_good.csv")
        key = "t" if last.frame == "physical" else "tau"
        print(f"last good snapshot: {key}={last.time!r} -> {path}", file=sys.stderr)


def cmd_run(cfg) -> int:
    traj = _integrate(cfg)
    manifest = store.write_trajectory(traj, _traj_dir(cfg))
    print(f"wrote {len(traj)} snapshots -> {manifest}")
    if "svg" in cfg.formats:
        for plane in ("xy", "xz"):
            path = svg.write(Path(cfg.output_dir) / f"curves_{plane}.svg",
                             svg.curves_svg(traj, plane))
            print(f"wrote {path}")
    return EXIT_OK


def _theorem_name(pair):
    if pair.name == "huisken" or pair.name == "log" or pair.name.startswith("lambda:"):
        return pair.name
    return None


def cmd_verify(cfg, pair_spec: str | None) -> int:
    if cfg.frame != "rescaled":
        raise UsageError("verify needs frame = rescaled")
    try:
        pair = pair_from_spec(pair_spec or cfg.pair)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    traj = _integrate(cfg)
    if len(traj) < 3:
        raise UsageError("need at least three snapshots; lower snapshot_every or raise t_end")
    reports = verify_generic(pair, traj)
    theorem = _theorem_name(pair)
    failed = 0
    print(f"pair={pair.name} preset={cfg.preset} n={cfg.n_nodes} snapshots={len(traj)}")
    if reports:
        r0 = reports[0]
        if "singular_sum" in r0.extra_terms:
            print(f"singular_sum at tau={traj.times[0]!r}: "
                  f"{_first_singular(pair, traj):.6f}")
    for r in reports:
        ok = report_passes(r)
        tol_i, tol_f = r.tolerances.get("instant"), r.tolerances.get("fd")
        parts = [f"tau={r.tau:.6f}", f"E={r.energy:.9g}", f"lhs_fd={r.lhs_finite_diff:.6e}",
                 f"res_fd={r.residual_fd:.3e} (thr {_thr(tol_f, r.lhs_finite_diff)})",
                 f"res_inst={r.residual_instant:.3e} (thr {_thr(tol_i, r.lhs_instant)})"]
        if theorem and r.excluded_count == 0:
            th = theorem_rhs(theorem, traj.states[traj.times.index(r.tau)])["total"]
            generic = r.dissipation + r.d1_integral + r.d2_integral
            diff = th - generic
            thr = TOL_THEOREM * (1.0 + abs(generic))
            ok &= abs(diff) <= thr
            parts.append(f"thm-generic={diff:.3e} (thr {thr:.3e})")
        if r.excluded_count:
            parts.append(f"excluded={r.excluded_count}")
        if r.warnings:
            parts.append("warn: " + "; ".join(r.warnings))
        parts.append("PASS" if ok else "FAIL")
        failed += not ok
        print("  ".join(parts))
    worst = max((abs(r.residual_fd) for r in reports), default=0.0)
    print(f"max |residual_fd| = {worst:.3e}; {len(reports) - failed}/{len(reports)} passed")
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = pair.name.replace(":", "_").replace(",", "_")
    if "json" in cfg.formats:
        store.write_reports_json(reports, out / f"reports_{stem}.json")
    if "csv" in cfg.formats:
        store.write_reports_csv(reports, out / f"summary_{stem}.csv")
    if "svg" in cfg.formats and reports:
        svg.write(out / f"residuals_{stem}.svg", _residual_plot(reports))
    return EXIT_OK if failed == 0 else EXIT_RESIDUAL


def _first_singular(pair, traj):
    return snapshot_terms(pair, traj.states[0])["extra"].get("singular_sum", math.nan)


def _thr(tol, lhs):
    return "off" if tol is None else f"{tol * (1.0 + abs(lhs)):.3e}"


def _residual_plot(reports):
    taus = [r.tau for r in reports]
    return svg.series_svg(taus, {"residual_fd": [r.residual_fd for r in reports],
                                 "residual_inst": [r.residual_instant for r in reports]},
                          "identity residuals")


def cmd_presets() -> int:
    for name, params in DEFAULTS.items():
        args = ", ".join(f"{k}={v!r}" for k, v in params.items())
        print(f"{name}({args})")
    return EXIT_OK


def cmd_export(cfg, what: str, fmt: str, trajectory: str | None, pair_spec: str | None) -> int:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    if what == "functions":
        if fmt != "svg":
            raise UsageError("functions export supports svg only")
        for name, doc in (("f_lambda", svg.flambda_svg()), ("h", svg.h_svg()),
                          ("rb", svg.rb_svg())):
            print(f"wrote {svg.write(out / f'{name}.svg', doc)}")
        return EXIT_OK
    src = Path(trajectory) if trajectory else _traj_dir(cfg)
    try:
        traj = store.read_trajectory(src)
    except FileNotFoundError:
        raise UsageError(f"no trajectory at {src}; run `cssf run` first") from None
    if len(traj) == 0:
        raise UsageError("trajectory is empty")
    if what == "curves":
        if fmt == "svg":
            for plane in ("xy", "xz"):
                print(f"wrote {svg.write(out / f'curves_{plane}.svg', svg.curves_svg(traj, plane))}")
        else:
            for k, state in enumerate(traj.states):
                store.write_frame_dump(state, out / f"frame_{k:05d}.csv")
            print(f"wrote {len(traj)} frame dumps to {out}")
        return EXIT_OK
    try:
        pair = pair_from_spec(pair_spec or cfg.pair)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if len(traj) < 3:
        raise UsageError("energies need at least three snapshots")
    reports = verify_generic(pair, traj)
    stem = pair.name.replace(":", "_").replace(",", "_")
    if fmt == "svg":
        doc = svg.series_svg([r.tau for r in reports], {"energy": [r.energy for r in reports]},
                             f"energy ({pair.name})")
        print(f"wrote {svg.write(out / f'energy_{stem}.svg', doc)}")
        print(f"wrote {svg.write(out / f'residuals_{stem}.svg', _residual_plot(reports))}")
    else:
        print(f"wrote {store.write_reports_csv(reports, out / f'summary_{stem}.csv')}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cssf", description="curve shortening flow lab")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="flat key = value file")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override one config key (repeatable)")

    common(sub.add_parser("run", help="integrate a preset and store the trajectory"))
    p = sub.add_parser("verify", help="check the monotonicity identity along a run")
    common(p)
    p.add_argument("--pair", help="huisken | lambda:<x> | log | sphere | radial:<weight>")
    sub.add_parser("presets", help="list preset curves and their default parameters")
    p = sub.add_parser("export", help="write SVG or CSV artifacts from a stored run")
    common(p)
    p.add_argument("--what", choices=("curves", "energies", "functions"), required=True)
    p.add_argument("--format", choices=("svg", "csv"), default="svg")
    p.add_argument("--trajectory", help="trajectory directory (default <output_dir>/trajectory)")
    p.add_argument("--pair")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    cfg = None
    try:
        if args.command == "presets":
            return cmd_presets()
        cfg = cfgmod.load(args.config, args.set)
        if args.command == "run":
            return cmd_run(cfg)
        if args.command == "verify":
            return cmd_verify(cfg, args.pair)
        return cmd_export(cfg, args.what, args.format, args.trajectory, args.pair)
    except (cfgmod.ConfigError, UsageError) as exc:
        print(f"cssf: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SingularityError as exc:
        print(f"cssf: abort: {exc}", file=sys.stderr)
        _save_partial(cfg, exc)
        return EXIT_ABORT
    except (ImmersionError, OriginHitError) as exc:
        print(f"cssf: abort: {exc}", file=sys.stderr)
        return EXIT_ABORT
    except ValueError as exc:
        # remaining ValueErrors come from preset/pair parameter checks
        print(f"cssf: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
