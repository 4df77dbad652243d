"""Command-line front end: ``nfdmlab {run, presets, selftest, transform}``."""

from __future__ import annotations

import argparse
import csv
import math
import sys
from pathlib import Path

import numpy as np

from . import harness, selftest, waveio
from . import transceiver as trx
from .core import LinkConfig, NonlinearSpectrum, denormalize, normalize
from .inft import TimeGrid, inverse_nft
from .nft import ScatteringConfig, dump_csv, forward_nft


def _cmd_run(args) -> int:
    cfg = harness.load_config(args.config, seed=args.seed)
    results = harness.run_experiment(cfg, threads=args.threads)
    paths = harness.emit_results(results, args.out_dir, cfg)
    for r in results:
        if r.failed:
            print(f"{r.system} {r.launch_power_dbm:g} dBm FAILED: {r.error}", file=sys.stderr)
        else:
            print(f"{r.system} {r.launch_power_dbm:g} dBm  N={r.n_subcarriers}  BER={r.ber:.3e}  "
                  f"Q={r.q_factor_db:.2f} dB  GMI={r.gmi_bits:.3f}  EVM={r.evm_db:.2f} dB")
    print(f"config hash {harness.config_hash(cfg)}; wrote {', '.join(str(p) for p in paths)}")
    return 1 if any(r.failed for r in results) else 0


def _cmd_presets(args) -> int:
    print(f"{'#':>2} {'N':>4} {'T0 ns':>6} {'GI ns':>6} {'gross Gb/s':>11} {'BW GHz':>7}")
    for i, fr in enumerate(harness.tab1_presets(), 1):
        r = trx.frame_rates(fr)
        print(f"{i:>2} {fr.n_subcarriers:>4} {fr.t0 * 1e9:>6.1f} {fr.guard_interval * 1e9:>6.1f} "
              f"{r.gross_bps / 1e9:>11.2f} {r.bandwidth_hz / 1e9:>7.2f}")
    return 0


def _cmd_selftest(args) -> int:
    checks = selftest.run_all()
    for c in checks:
        print(f"{'ok  ' if c.ok else 'FAIL'} {c.name}: {c.detail}")
    return 0 if all(c.ok for c in checks) else 1


def _read_spectrum_csv(path) -> NonlinearSpectrum:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    xi = np.array([float(r["xi"]) for r in rows])
    q = np.array([complex(float(r["q_re"]), float(r["q_im"])) for r in rows])
    return NonlinearSpectrum(xi, q)


def _cmd_transform(args) -> int:
    link = trx.nft_link(LinkConfig())
    scale = args.time_scale_ps * 1e-12
    if args.inverse:
        spec = _read_spectrum_csv(args.file)
        dxi = spec.xi_grid[1] - spec.xi_grid[0]
        # lattice xi_j = j pi / (2 n dt) of a centered grid
        n = int(round(math.pi / (2 * dxi * args.dt)))
        sig = inverse_nft(spec, TimeGrid.centered(n * args.dt, args.dt), args.tolerance)
        if args.physical:
            sig = denormalize(sig, link, scale)
        out = Path(args.output or Path(args.file).with_suffix(".bin"))
        waveio.write_waveform(out, sig)
        print(f"wrote {len(sig)} samples to {out}")
        return 0
    sig = waveio.read_waveform(args.file)
    # waveform files carry no time origin: samples are taken as centered on t = 0
    sig = sig.replace(t0_offset=-(len(sig) - 1) * sig.dt / 2)
    if sig.units == "physical":
        sig = normalize(sig, link, scale)
    xi = np.linspace(args.xi_min, args.xi_max, args.n_xi)
    spec = forward_nft(sig, ScatteringConfig(xi))
    out = Path(args.output or Path(args.file).with_suffix(".csv"))
    dump_csv(spec, out)
    print(f"wrote {len(spec)} spectral points to {out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nfdmlab", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a sweep described by a config file")
    run.add_argument("config")
    run.add_argument("--seed", type=int, default=None, help="override the config seed")
    run.add_argument("--threads", type=int, default=1)
    run.add_argument("--out-dir", default="results")
    run.set_defaults(func=_cmd_run)

    sub.add_parser("presets", help="list the six system presets").set_defaults(func=_cmd_presets)
    sub.add_parser("selftest", help="run the closed-form oracle checks").set_defaults(func=_cmd_selftest)

    tr = sub.add_parser("transform", help="forward NFT of a waveform file, or inverse NFT of a spectrum CSV",
                        description="Waveform samples are taken as centered on t = 0.")
    tr.add_argument("file")
    tr.add_argument("--inverse", action="store_true", help="FILE is a spectrum CSV on a lattice")
    tr.add_argument("--output", "-o", default=None)
    tr.add_argument("--time-scale-ps", type=float, default=62.5, help="normalization time scale")
    tr.add_argument("--xi-min", type=float, default=-10.0)
    tr.add_argument("--xi-max", type=float, default=10.0)
    tr.add_argument("--n-xi", type=int, default=401)
    tr.add_argument("--dt", type=float, default=0.125, help="normalized sample spacing for --inverse")
    tr.add_argument("--tolerance", type=float, default=1e-4)
    tr.add_argument("--physical", action="store_true", help="write the inverse result in physical units")
    tr.set_defaults(func=_cmd_transform)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ValueError, ArithmeticError) as exc:
        print(f"nfdmlab: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
