"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 numerical failure in every point,
3 I/O error.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import platform
import sys
from importlib import metadata
from pathlib import Path

import numpy as np

from . import __version__
from .channel import (ChannelFileError, GeometryError, PathLossModel, Geometry, SystemConfig,
                      generate_channels, load_channels, preset, save_channels)
from .driver import SCHEMES, BcdOptions, bcd_solve, pareto_sweep, zeta_grid
from .rate import RateProfile
from .singleuser import corner_point

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL, EXIT_IO = 0, 1, 2, 3

log = logging.getLogger("irsifc")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _complex_list(arr):
    arr = np.asarray(arr)
    return np.stack([arr.real, arr.imag], axis=-1).tolist()


def _parse_zeta(text, K=None):
    try:
        values = [float(x) for x in text.split(",")]
        zeta = RateProfile(tuple(values))
    except ValueError as exc:
        raise UsageError(f"invalid rate profile {text!r}: {exc}") from exc
    if K is not None and len(zeta) != K:
        raise UsageError(f"rate profile {text!r} has {len(zeta)} entries, channel has K={K}")
    return zeta


def _bcd_options(args) -> BcdOptions:
    return BcdOptions(eps=args.eps, eps_bisect=args.eps_bisect, n_rand=args.n_rand,
                      max_outer=args.max_outer, v_init=args.v_init, seed=args.seed,
                      feas_tol=args.feas_tol)


def _versions():
    out = {"irsifc": __version__, "python": platform.python_version(), "numpy": np.__version__}
    try:
        out["scipy"] = metadata.version("scipy")
    except metadata.PackageNotFoundError:
        pass
    return out


def _read_json(path):
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path} is not valid JSON: {exc}") from exc


# -- generate ------------------------------------------------------------------

def cmd_generate(args):
    file_cfg = _read_json(args.config) if args.config else {}
    name = args.preset or file_cfg.get("preset")
    seed = args.seed if args.seed is not None else int(file_cfg.get("seed", 0))
    snr_db = args.snr_db if args.snr_db is not None else float(file_cfg.get("snr_db", 20.0))
    snr_ref = args.snr_reference or file_cfg.get("snr_reference", "direct")
    try:
        plm = PathLossModel(**file_cfg["pathloss"]) if file_cfg.get("pathloss") else PathLossModel()
        if name:
            overrides = {k: v for k, v in (("M", args.M), ("N", args.N)) if v is not None}
            config, geom, plm = preset(name, seed=seed, snr_db=snr_db, snr_reference=snr_ref,
                                       plm=plm, **overrides)
        elif "config" in file_cfg and "geometry" in file_cfg:
            cfg = dict(file_cfg["config"])
            cfg["seed"] = seed
            for key in ("M", "N"):
                if getattr(args, key) is not None:
                    cfg[key] = getattr(args, key)
            config = SystemConfig(**cfg)
            geom = Geometry(**file_cfg["geometry"])
        else:
            raise UsageError("need --preset or a config file with 'config' and 'geometry'")
        cs = generate_channels(config, geom, plm)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, UsageError):
            raise
        raise UsageError(f"bad configuration: {exc}") from exc
    save_channels(cs, args.out)
    print(f"wrote {args.out}: K={cs.K} M={cs.M} N={cs.N} seed={config.seed} sigma2={config.sigma2!r}")
    return EXIT_OK


# -- sweep ---------------------------------------------------------------------

def points_to_csv(points, K) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["scheme"] + [f"zeta_{k + 1}" for k in range(K)] + ["R"]
                    + [f"R_{k + 1}" for k in range(K)] + ["seed", "status"])
    for p in points:
        writer.writerow([p.scheme] + [repr(float(z)) for z in p.zeta] + [repr(float(p.R))]
                        + [repr(float(r)) for r in p.rates] + [p.seed, p.status])
    return buf.getvalue()


def _sha256(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _sweep_manifest(args, zetas, schemes, opts):
    return {
        "command": "sweep",
        "channel_file": str(Path(args.channels).resolve()),
        "channel_sha256": _sha256(args.channels),
        "zetas": [list(z.zeta) for z in zetas],
        "schemes": list(schemes),
        "options": opts.to_dict(),
        "versions": _versions(),
        "output": str(Path(args.out).resolve()),
    }


def cmd_sweep(args):
    if args.from_manifest:
        man = _read_json(args.from_manifest)
        if man.get("command") != "sweep":
            raise UsageError(f"{args.from_manifest} is not a sweep manifest")
        args.channels = args.channels or man["channel_file"]
        args.out = args.out or man["output"]
        opts = BcdOptions(**man["options"])
        schemes = man["schemes"]
        zeta_specs = [RateProfile(tuple(z)) for z in man["zetas"]]
    else:
        if not args.channels:
            raise UsageError("sweep needs a channel file")
        opts = _bcd_options(args)
        schemes = args.schemes.split(",") if args.schemes else list(SCHEMES)
        zeta_specs = None
    if not args.out:
        raise UsageError("sweep needs --out")
    unknown = [s for s in schemes if s not in SCHEMES]
    if unknown:
        raise UsageError(f"unknown scheme(s) {unknown}; choose from {SCHEMES}")
    cs = load_channels(args.channels)
    if args.from_manifest and _sha256(args.channels) != man["channel_sha256"]:
        log.warning("channel file differs from the one recorded in the manifest")
    if zeta_specs is None:
        if args.zeta:
            zeta_specs = [_parse_zeta(z, cs.K) for z in args.zeta]
        else:
            try:
                zeta_specs = zeta_grid(args.points, cs.K)
            except ValueError as exc:
                raise UsageError(str(exc)) from exc
    points = pareto_sweep(cs, zeta_specs, opts, schemes, jobs=args.jobs)
    Path(args.out).write_text(points_to_csv(points, cs.K))
    manifest_path = args.manifest or str(args.out) + ".manifest.json"
    Path(manifest_path).write_text(json.dumps(_sweep_manifest(args, zeta_specs, schemes, opts),
                                              indent=2) + "\n")
    n_fail = sum(p.status != "ok" for p in points)
    print(f"wrote {args.out} ({len(points)} points, {n_fail} failed) and {manifest_path}")
    return EXIT_NUMERICAL if points and n_fail == len(points) else EXIT_OK


# -- single / singleuser ---------------------------------------------------------

def cmd_single(args):
    cs = load_channels(args.channels)
    zeta = _parse_zeta(args.zeta, cs.K)
    opts = _bcd_options(args)
    report = bcd_solve(cs, zeta, opts)
    out = {
        "command": "single",
        "channel_file": str(Path(args.channels).resolve()),
        "channel_sha256": _sha256(args.channels),
        "zeta": list(zeta.zeta),
        "options": opts.to_dict(),
        "versions": _versions(),
        "R": report.R,
        "R_trace": report.R_trace,
        "stage_trace": [list(t) for t in report.stage_trace],
        "rates": report.rates.tolist(),
        "iterations": report.iterations,
        "converged": report.converged,
        "failures": report.failures,
        "w": _complex_list(report.state.w),
        "v": _complex_list(report.state.v),
    }
    corner = [k for k, z in enumerate(zeta.zeta) if z == 1.0]
    if corner:
        k = corner[0]
        _, su_rate, su = corner_point(cs, k)
        bcd_snr = 2.0 ** report.rates[k] - 1.0
        out["singleuser_comparison"] = {
            "user": k, "coordinate_ascent_rate": su_rate, "coordinate_ascent_snr": su.snr,
            "bcd_rate": float(report.rates[k]), "bcd_snr": float(bcd_snr),
            "relative_snr_gap": float((bcd_snr - su.snr) / su.snr),
        }
        print(f"single-user comparison (user {k + 1}): BCD R={report.rates[k]:.6f}, "
              f"coordinate ascent R={su_rate:.6f}")
    text = json.dumps(out, indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(text)
        print(f"wrote {args.out}: R={report.R:.6f} after {report.iterations} iterations")
    else:
        sys.stdout.write(text)
    return EXIT_NUMERICAL if report.failures and not report.R_trace else EXIT_OK


def cmd_singleuser(args):
    cs = load_channels(args.channels)
    k = args.user - 1
    if not 0 <= k < cs.K:
        raise UsageError(f"--user must be in 1..{cs.K}")
    v_init = None
    if args.random_init:
        rng = np.random.default_rng(args.seed)
        v_init = np.exp(1j * rng.uniform(0, 2 * np.pi, size=(cs.K, cs.N)))
    state, rate_k, rep = corner_point(cs, k, v_init, args.ca_eps, args.max_sweeps)
    out = {
        "command": "singleuser",
        "channel_file": str(Path(args.channels).resolve()),
        "user": args.user, "random_init": args.random_init, "seed": args.seed,
        "snr": rep.snr, "rate": rate_k, "sweeps": rep.sweeps, "converged": rep.converged,
        "snr_trace": rep.snr_trace,
        "w": _complex_list(state.w), "v": _complex_list(state.v),
    }
    text = json.dumps(out, indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(text)
        print(f"wrote {args.out}: user {args.user} SNR={rep.snr:.6g} R={rate_k:.6f}")
    else:
        sys.stdout.write(text)
    return EXIT_OK


# -- parser --------------------------------------------------------------------

def _add_bcd_flags(p):
    d = BcdOptions()
    p.add_argument("--eps", type=float, default=d.eps, help="outer BCD stopping gain (bits)")
    p.add_argument("--eps-bisect", type=float, default=d.eps_bisect, help="bisection width (bits)")
    p.add_argument("--n-rand", type=int, default=d.n_rand, help="Gaussian randomizations per probe")
    p.add_argument("--max-outer", type=int, default=d.max_outer)
    p.add_argument("--v-init", choices=("ones", "random", "singleuser"), default=d.v_init)
    p.add_argument("--seed", type=int, default=d.seed, help="algorithm seed")
    p.add_argument("--feas-tol", type=float, default=d.feas_tol)


def build_parser():
    parser = _Parser(prog="irsifc", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="count", default=0)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="draw a channel realization")
    g.add_argument("--config", help="JSON config (preset/seed/snr_db or config+geometry+pathloss)")
    g.add_argument("--preset", choices=("paper", "desk"))
    g.add_argument("--seed", type=int)
    g.add_argument("--snr-db", type=float)
    g.add_argument("--snr-reference", choices=("direct", "transmit"))
    g.add_argument("--M", type=int)
    g.add_argument("--N", type=int)
    g.add_argument("--out", "-o", required=True)
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("sweep", help="trace the rate region over a grid of rate profiles")
    s.add_argument("channels", nargs="?")
    s.add_argument("--points", type=int, default=5, help="evenly spaced profiles (K=2)")
    s.add_argument("--zeta", action="append", help="explicit profile, e.g. 0.5,0.5 (repeatable)")
    s.add_argument("--schemes", help=f"comma-separated subset of {','.join(SCHEMES)}")
    s.add_argument("--jobs", type=int, default=0, help="worker processes (0 = all cores)")
    s.add_argument("--out", "-o")
    s.add_argument("--manifest")
    s.add_argument("--from-manifest", help="re-run a sweep exactly as recorded")
    _add_bcd_flags(s)
    s.set_defaults(func=cmd_sweep)

    one = sub.add_parser("single", help="one BCD run with a full report")
    one.add_argument("channels")
    one.add_argument("--zeta", required=True)
    one.add_argument("--out", "-o")
    _add_bcd_flags(one)
    one.set_defaults(func=cmd_single)

    su = sub.add_parser("singleuser", help="single-user maximum-rate point by coordinate ascent")
    su.add_argument("channels")
    su.add_argument("--user", type=int, default=1, help="1-based user index")
    su.add_argument("--random-init", action="store_true")
    su.add_argument("--seed", type=int, default=0)
    su.add_argument("--ca-eps", type=float, default=1e-8)
    su.add_argument("--max-sweeps", type=int, default=500)
    su.add_argument("--out", "-o")
    su.set_defaults(func=cmd_singleuser)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"irsifc: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ChannelFileError, GeometryError) as exc:
        print(f"irsifc: error: {exc}", file=sys.stderr)
        return EXIT_IO if isinstance(exc, ChannelFileError) else EXIT_USAGE
    except OSError as exc:
        print(f"irsifc: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
