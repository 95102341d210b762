"""Command-line interface: configs in, reproducible CSV artifacts out.

Subcommands cover the exposure CDFs, coverage CCDFs, the joint
SINR/exposure metric, (N, d) contour sweeps, and the oracle validation
suites.  Every run writes a manifest sidecar echoing the full config so
results can be re-derived byte-for-byte; dB/dBm conversion happens only
here at the flag boundary.

Exit codes: 0 ok, 2 config error, 3 numerical failure, 4 validation
suite failure.
"""

from __future__ import annotations

import argparse
import csv
import logging
import math
import sys
import time
from dataclasses import dataclass, field, asdict, replace

import numpy as np

from . import __version__, antenna, charfun, metrics as mt, montecarlo as mc
from . import network as net
from .network import NetworkConfig, UserKind
from .specfun import ConvergenceError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_VALIDATION = 4

VALIDATION_SUITES = ("cf", "moments", "gilpelaez", "mc")


class ValidationFailure(Exception):
    """A validation suite found deviations beyond tolerance."""


def _parse_float_list(text: str) -> np.ndarray:
    """Grid syntax: either comma-separated values or lo:hi:count."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise net.ConfigError(f"grid {text!r}: expected lo:hi:count")
        lo, hi, count = float(parts[0]), float(parts[1]), int(parts[2])
        if count < 1:
            raise net.ConfigError(f"grid {text!r}: count must be >= 1")
        return np.linspace(lo, hi, count)
    try:
        return np.array([float(v) for v in text.split(",") if v.strip()])
    except ValueError as exc:
        raise net.ConfigError(f"bad grid value in {text!r}") from exc


def _parse_int_list(text: str) -> list[int]:
    vals = _parse_float_list(text)
    out = [int(v) for v in vals]
    if any(v != int(v) for v in vals):
        raise net.ConfigError(f"expected integers in {text!r}")
    return out


def _ascending(grid: np.ndarray, name: str) -> np.ndarray:
    if grid.size == 0 or np.any(np.diff(grid) <= 0):
        raise net.ConfigError(f"{name} must be nonempty and strictly ascending")
    return grid


def _apply_threads(n: int | None) -> None:
    if n is None:
        return
    if n < 1:
        raise net.ConfigError(f"--threads must be >= 1, got {n}")
    try:
        import threadpoolctl

        threadpoolctl.threadpool_limits(limits=n)
    except ImportError:
        logger.debug("threadpoolctl not installed; --threads recorded only")


@dataclass
class RunManifest:
    """Structured text sidecar tying every output to its provenance."""

    command: str
    config_path: str
    config_echo: dict
    config_hash: str
    quad: dict
    seed: int | None
    version: str
    wall_time_s: float = 0.0
    outputs: list = field(default_factory=list)

    def write(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(f"command: {self.command}\n")
            fh.write(f"version: {self.version}\n")
            fh.write(f"config_path: {self.config_path}\n")
            fh.write(f"config_hash: {self.config_hash}\n")
            fh.write(f"seed: {self.seed if self.seed is not None else 'none'}\n")
            fh.write(f"wall_time_s: {self.wall_time_s:.3f}\n")
            fh.write("quad:\n")
            for k, v in self.quad.items():
                fh.write(f"  {k} = {v}\n")
            fh.write("outputs:\n")
            for out in self.outputs:
                fh.write(f"  - {out}\n")
            fh.write("config_echo:\n")
            for k, v in self.config_echo.items():
                fh.write(f"  {k} = {v}\n")


def parse_manifest_config(path) -> NetworkConfig:
    """Re-parse the config echoed in a manifest (round-trip check)."""
    items = {}
    in_echo = False
    with open(path) as fh:
        for raw in fh:
            if raw.rstrip() == "config_echo:":
                in_echo = True
                continue
            if in_echo:
                if not raw.startswith("  ") or "=" not in raw:
                    break
                key, _, value = raw.strip().partition("=")
                items[key.strip()] = value.strip()
    return net._config_from_items(items)


def _new_manifest(args, cfg: NetworkConfig, seed: int | None = None) -> RunManifest:
    return RunManifest(
        command=args.command,
        config_path=args.config,
        config_echo=cfg.to_dict(),
        config_hash=cfg.config_hash(),
        quad=asdict(mt.DEFAULT_QUAD),
        seed=seed,
        version=__version__,
    )


def _finish(manifest: RunManifest, t0: float, out_path: str) -> None:
    manifest.wall_time_s = time.time() - t0
    manifest.write(out_path + ".manifest.txt")


def _write_curve_csv(path, thresholds, values, method, config_hash, db_col, db_vals):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["threshold", "value", "method", "config_hash", db_col])
        for t, v, tdb in zip(thresholds, values, db_vals):
            writer.writerow(
                [repr(float(t)), repr(float(v)), method, config_hash, repr(float(tdb))]
            )


def _write_mc_csv(path, result: mc.EmpiricalResult, db_col, db_vals):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["threshold", "value", "method", "config_hash",
             "ci_lo", "ci_hi", "n", "seed", db_col]
        )
        rows = zip(result.thresholds, result.samples, result.ci_halfwidth, db_vals)
        for t, v, hw, tdb in rows:
            writer.writerow(
                [repr(float(t)), repr(float(v)), result.method, result.config_hash,
                 repr(float(max(v - hw, 0.0))), repr(float(min(v + hw, 1.0))),
                 result.n_realizations, result.seed, repr(float(tdb))]
            )


def _mc_suffix(out: str) -> str:
    stem, dot, ext = out.rpartition(".")
    return f"{stem}.mc.{ext}" if dot else f"{out}.mc"


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_emfe(args) -> int:
    t0 = time.time()
    cfg = net.load_config(args.config)
    user = UserKind.parse(args.user)
    if args.pattern is not None:
        k_max = min(cfg.pattern.k_max, antenna.max_side_lobes(cfg.pattern.n_elements))
        cfg = cfg.with_pattern(
            antenna.AntennaPattern(
                kind=args.pattern, n_elements=cfg.pattern.n_elements, k_max=k_max
            )
        )
    if user is UserKind.RANDOM and cfg.separation > 0:
        logger.warning("random user exposure ignores separation d=%g m", cfg.separation)
    te_dbm = _ascending(_parse_float_list(args.te_grid), "--te-grid")
    te = np.array([net.dbm_to_watts(v) for v in te_dbm])

    seed = args.mc[1] if args.mc else None
    manifest = _new_manifest(args, cfg, seed)
    if cfg.pattern.kind == "theoretical_ula":
        if not args.mc:
            raise net.ConfigError(
                "theoretical_ula has no closed form; pass --mc n seed"
            )
    else:
        curve = mt.emfe_curve(cfg, user, te)
        _write_curve_csv(
            args.out, te, curve.values, f"analytic-{user.value}",
            cfg.config_hash(), "threshold_dbm", te_dbm,
        )
        manifest.outputs.append(args.out)
    if args.mc:
        n, seed = args.mc
        res = mc.empirical_cdf(cfg, user.value, te, n, seed)
        mc_path = _mc_suffix(args.out) if cfg.pattern.kind != "theoretical_ula" else args.out
        _write_mc_csv(mc_path, res, "threshold_dbm", te_dbm)
        manifest.outputs.append(mc_path)
    _finish(manifest, t0, args.out)
    return EXIT_OK


def cmd_coverage(args) -> int:
    t0 = time.time()
    cfg = net.load_config(args.config)
    tc_db = _ascending(_parse_float_list(args.tc_grid), "--tc-grid")
    tc = np.array([net.db_to_linear(v) for v in tc_db])
    seed = args.mc[1] if args.mc else None
    manifest = _new_manifest(args, cfg, seed)

    rows = [(t, v, "analytic-sinr", tdb)
            for t, v, tdb in zip(tc, mt.coverage_ccdf(cfg, tc), tc_db)]
    if args.include_snr:
        rows += [(t, v, "analytic-snr", tdb)
                 for t, v, tdb in zip(tc, mt.snr_ccdf(cfg, tc), tc_db)]
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["threshold", "value", "method", "config_hash", "threshold_db"])
        for t, v, method, tdb in rows:
            writer.writerow(
                [repr(float(t)), repr(float(v)), method, cfg.config_hash(), repr(float(tdb))]
            )
    manifest.outputs.append(args.out)
    if args.mc:
        n, seed = args.mc
        res = mc.empirical_cdf(cfg, "sinr", tc, n, seed)
        ccdf = mc.EmpiricalResult(
            thresholds=res.thresholds,
            samples=1.0 - res.samples,
            ci_halfwidth=res.ci_halfwidth,
            seed=res.seed,
            n_realizations=res.n_realizations,
            config_hash=res.config_hash,
            method="mc-sinr-ccdf",
        )
        mc_path = _mc_suffix(args.out)
        _write_mc_csv(mc_path, ccdf, "threshold_db", tc_db)
        manifest.outputs.append(mc_path)
    _finish(manifest, t0, args.out)
    return EXIT_OK


def cmd_scaiu(args) -> int:
    t0 = time.time()
    cfg = net.load_config(args.config)
    tc = net.db_to_linear(args.tc)
    te_dbm = _ascending(_parse_float_list(args.te_grid), "--te-grid")
    te = np.array([net.dbm_to_watts(v) for v in te_dbm])
    d_grid = (
        _ascending(_parse_float_list(args.d_grid), "--d-grid")
        if args.d_grid is not None
        else np.array([cfg.separation])
    )
    manifest = _new_manifest(args, cfg)

    header = ["threshold", "value", "method", "config_hash",
              "threshold_dbm", "d_m", "scaiu_h", "f_cov"]
    if args.bounds:
        header += ["flb", "fub"]
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for d in d_grid:
            dcfg = cfg if d == cfg.separation else replace(cfg, separation=float(d))
            ev = mt.ScaiuEvaluator(dcfg, tc)
            for t, tdb in zip(te, te_dbm):
                j = ev.joint(float(t))
                row = [repr(float(t)), repr(float(j)), "analytic-joint",
                       dcfg.config_hash(), repr(float(tdb)), repr(float(d)),
                       repr(float(ev.conditional(float(t)))), repr(float(ev.coverage))]
                if args.bounds:
                    lb, ub = ev.frechet(float(t))
                    row += [repr(float(lb)), repr(float(ub))]
                writer.writerow(row)
    manifest.outputs.append(args.out)
    _finish(manifest, t0, args.out)
    return EXIT_OK


def cmd_contour(args) -> int:
    t0 = time.time()
    cfg = net.load_config(args.config)
    n_list = _parse_int_list(args.n_list)
    d_list = _parse_float_list(args.d_list)
    levels = _parse_float_list(args.levels)
    t_e = net.dbm_to_watts(args.te) if args.te is not None else None
    t_c = net.db_to_linear(args.tc) if args.tc is not None else None
    manifest = _new_manifest(args, cfg)

    # one grid evaluation serves every level
    sweep = mt.contour_sweep(
        cfg, n_list, d_list, args.metric, float(levels[0]), t_e=t_e, t_c=t_c
    )
    sweep.write_grid_csv(args.out)
    manifest.outputs.append(args.out)
    stem, dot, ext = args.out.rpartition(".")
    for i, level in enumerate(levels):
        if i > 0:
            sweep = mt.SweepResult(
                n_list=sweep.n_list,
                d_list=sweep.d_list,
                values=sweep.values,
                level=float(level),
                contour=mt._edge_crossings(
                    sweep.n_list.astype(float), sweep.d_list, sweep.values, float(level)
                ),
                metric=sweep.metric,
                config_hash=sweep.config_hash,
            )
        path = f"{stem}.level{i}.{ext}" if dot else f"{args.out}.level{i}"
        sweep.write_contour_csv(path)
        manifest.outputs.append(path)
    _finish(manifest, t0, args.out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# validation suites
# ---------------------------------------------------------------------------

def _suite_moments(cfg: NetworkConfig):
    n = cfg.pattern.n_elements
    worst = 0.0
    lines = []
    kinds = [
        antenna.AntennaPattern(kind="flat_top", n_elements=n),
        antenna.AntennaPattern(kind="truncated_cos", n_elements=n),
        antenna.AntennaPattern(kind="gaussian", n_elements=n),
        antenna.AntennaPattern(
            kind="multi_cos", n_elements=n,
            k_max=min(cfg.pattern.k_max, antenna.max_side_lobes(n)),
        ),
    ]
    for pat in kinds:
        for k in range(1, 5):
            dev = abs(antenna.gain_moment(pat, k) - antenna.gain_moment_quadrature(pat, k))
            worst = max(worst, dev)
            lines.append(f"{pat.kind} k={k}: dev={dev:.3e}")
    return worst < 1e-8, worst, lines


def _suite_cf(cfg: NetworkConfig):
    # upper end capped where the fading-CF oracle quadrature stays fast
    q_grid = np.geomspace(1e3, 1e12, 50)
    r0s = (0.1 * cfg.disk_radius, 0.02 * cfg.disk_radius)
    worst = 0.0
    lines = []
    for m in (1, 2, 3):
        mcfg = replace(cfg, nakagami_m=m)
        for r0 in r0s:
            for name, closed, oracle in (
                ("signal_au",
                 lambda q: charfun.cf_signal_au(mcfg, q, r0),
                 lambda q: charfun.cf_signal_au_oracle(mcfg, q, r0)),
                ("signal_iu",
                 lambda q: charfun.cf_signal_iu(mcfg, q, r0, 0.8),
                 lambda q: charfun.cf_signal_iu_oracle(mcfg, q, r0, 0.8)),
                ("interference",
                 lambda q: charfun.cf_interference(mcfg, q, r0),
                 lambda q: charfun.cf_interference_oracle(mcfg, q, r0)),
            ):
                got = np.asarray(closed(q_grid), dtype=complex).ravel()
                want = np.array([oracle(float(q)) for q in q_grid])
                dev = float(np.max(np.abs(got - want)))
                worst = max(worst, dev)
                lines.append(f"m={m} r0={r0:.1f} {name}: dev={dev:.3e}")
    return worst < 1e-5, worst, lines


def _suite_gilpelaez(cfg: NetworkConfig):
    m = 3

    def cf_vec(q):
        return (1.0 - 1j * np.asarray(q) / m) ** (-m)

    from scipy.special import gammainc

    ts = np.array([0.2, 0.5, 1.0, 2.0, 4.0])
    got = mt.gil_pelaez_cdf(cf_vec, ts, mt.QuadratureSpec(q_nodes_per_decade=128))
    dev = float(np.max(np.abs(got - gammainc(m, m * ts))))
    return dev < 1e-7, dev, [f"gamma(m=3) law: dev={dev:.3e}"]


def _suite_mc(cfg: NetworkConfig, n: int, seed: int):
    lines = []
    hits = 0
    total = 0
    worst = 0.0
    sim_quantiles = np.array([0.05, 0.1, 0.25, 0.5, 0.75, 0.9, 0.95])
    for kind in ("au", "iu", "ru"):
        data = np.sort(mc.simulate(cfg, n, seed)[kind])
        thresholds = np.quantile(data, sim_quantiles)
        emp = mc.empirical_cdf(cfg, kind, thresholds, n, seed)
        ana = np.atleast_1d(mt.emfe_cdf(cfg, kind, thresholds))
        se = np.maximum(emp.ci_halfwidth / 1.96, 1e-12)
        for t, e, a, s in zip(thresholds, emp.samples, ana, se):
            total += 1
            ok = abs(e - a) <= 3 * s
            hits += ok
            worst = max(worst, abs(e - a) / (3 * s))
            lines.append(
                f"{kind} T={t:.3e}: mc={e:.4f} analytic={a:.4f} "
                f"{'ok' if ok else 'OUT'}"
            )
    sinr = np.sort(mc.simulate(cfg, n, seed)["sinr"])
    thresholds = np.quantile(sinr, sim_quantiles)
    emp = mc.empirical_cdf(cfg, "sinr", thresholds, n, seed)
    ana = np.atleast_1d(mt.coverage_ccdf(cfg, thresholds))
    se = np.maximum(emp.ci_halfwidth / 1.96, 1e-12)
    for t, e, a, s in zip(thresholds, 1.0 - emp.samples, ana, se):
        total += 1
        ok = abs(e - a) <= 3 * s
        hits += ok
        worst = max(worst, abs(e - a) / (3 * s))
        lines.append(f"sinr T={t:.3e}: mc={e:.4f} analytic={a:.4f} {'ok' if ok else 'OUT'}")
    frac = hits / total
    return frac >= 0.95, worst, lines + [f"within 3 s.e.: {hits}/{total}"]


def cmd_validate(args) -> int:
    t0 = time.time()
    cfg = net.load_config(args.config)
    seed = args.seed
    manifest = _new_manifest(args, cfg, seed)
    if args.suite == "moments":
        ok, worst, lines = _suite_moments(cfg)
    elif args.suite == "cf":
        ok, worst, lines = _suite_cf(cfg)
    elif args.suite == "gilpelaez":
        ok, worst, lines = _suite_gilpelaez(cfg)
    else:
        ok, worst, lines = _suite_mc(cfg, args.mc_n, seed)
    report = [
        f"suite: {args.suite}",
        f"config_hash: {cfg.config_hash()}",
        f"max_deviation: {worst:.6e}",
        f"status: {'PASS' if ok else 'FAIL'}",
        "",
    ] + lines
    if args.out:
        with open(args.out, "w") as fh:
            fh.write("\n".join(report) + "\n")
        manifest.outputs.append(args.out)
        _finish(manifest, t0, args.out)
    else:
        print("\n".join(report))
    if not ok:
        raise ValidationFailure(f"suite {args.suite} max deviation {worst:.3e}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser and entry point
# ---------------------------------------------------------------------------

def _add_mc_flag(sub):
    sub.add_argument(
        "--mc", nargs=2, type=int, metavar=("N", "SEED"),
        help="companion Monte Carlo curve with N realizations",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="emfnet",
        description="EMF exposure and coverage statistics for beamforming networks",
    )
    parser.add_argument("--version", action="version", version=f"emfnet {__version__}")
    parser.add_argument("--threads", type=int, default=None,
                        help="cap worker/BLAS thread count")
    parser.add_argument("-v", "--verbose", action="store_true")
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("emfe", help="exposure CDF curves")
    p.add_argument("config")
    p.add_argument("--user", required=True, choices=[k.value for k in UserKind])
    p.add_argument("--pattern", choices=antenna.PATTERN_KINDS, default=None)
    p.add_argument("--te-grid", required=True,
                   help="exposure thresholds in dBm (list or lo:hi:count)")
    p.add_argument("--out", required=True)
    _add_mc_flag(p)
    p.set_defaults(func=cmd_emfe)

    p = subs.add_parser("coverage", help="SINR coverage CCDF")
    p.add_argument("config")
    p.add_argument("--tc-grid", required=True,
                   help="SINR thresholds in dB (list or lo:hi:count)")
    p.add_argument("--include-snr", action="store_true")
    p.add_argument("--out", required=True)
    _add_mc_flag(p)
    p.set_defaults(func=cmd_coverage)

    p = subs.add_parser("scaiu", help="joint SINR/exposure metric sweeps")
    p.add_argument("config")
    p.add_argument("--tc", type=float, default=10.0, help="SINR threshold in dB")
    p.add_argument("--te-grid", required=True)
    p.add_argument("--d-grid", default=None, help="AU-IU separations in m")
    p.add_argument("--bounds", action="store_true", help="add Frechet bound columns")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_scaiu)

    p = subs.add_parser("contour", help="(N, d) level-set sweeps")
    p.add_argument("config")
    p.add_argument("--n-list", required=True)
    p.add_argument("--d-list", required=True)
    p.add_argument("--metric", required=True, choices=("EmfeCdf", "Scaiu"))
    p.add_argument("--levels", required=True)
    p.add_argument("--te", type=float, default=None, help="exposure threshold in dBm")
    p.add_argument("--tc", type=float, default=None, help="SINR threshold in dB")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_contour)

    p = subs.add_parser("validate", help="oracle-equivalence suites")
    p.add_argument("config")
    p.add_argument("--suite", required=True, choices=VALIDATION_SUITES)
    p.add_argument("--mc-n", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        _apply_threads(args.threads)
        return args.func(args)
    except (net.ConfigError, FileNotFoundError, ValueError) as exc:
        print(f"emfnet: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValidationFailure as exc:
        print(f"emfnet: validation failure: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (mt.MetricsError, ConvergenceError, FloatingPointError, ArithmeticError) as exc:
        print(f"emfnet: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
