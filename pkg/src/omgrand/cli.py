"""Command-line entry point: ``omgrand <subcommand> ...``."""
import argparse
import sys

import numpy as np

from . import framing
from .channel import ChannelParams
from .constellation import build_constellation
from .dacp import MODELS, AmplitudeGrid, design_dacp
from .formats import read_constellation, read_dacp, write_constellation, write_dacp
from .shaping import ShapingCode, assign_gray, build_code


def _floats(text):
    try:
        vals = [float(v) for v in text.replace(" ", "").split(",") if v]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _ints(text):
    vals = _floats(text)
    if any(v != int(v) or v < 1 for v in vals):
        raise argparse.ArgumentTypeError("expected positive integers")
    return [int(v) for v in vals]


def _positive(kind):
    def parse(text):
        v = kind(text)
        if not v > 0:
            raise argparse.ArgumentTypeError(f"must be positive, got {text}")
        return v
    return parse


def cmd_design(args):
    grid = AmplitudeGrid.uniform(args.grid_step, args.grid_count)
    params = ChannelParams(args.n0, grid.peak, args.avg_power)
    dist, trace = design_dacp(grid, params, tol=args.tol, max_iter=args.max_iter, model=args.model)
    meta = {
        "model": args.model, "iterations": len(trace.iterations),
        "gap": f"{trace.gap()[-1]:.3e}", "converged": str(trace.converged).lower(),
    }
    write_dacp(args.output, dist, args.n0, meta)
    status = "converged" if trace.converged else "NOT converged"
    print(f"{status} after {len(trace.iterations)} iterations, gap {trace.gap()[-1]:.3e} nats, "
          f"amplitude entropy {dist.entropy_bits():.4f} bits -> {args.output}")
    if not trace.converged:
        print("warning: design did not converge; output flagged", file=sys.stderr)
    return 0


def cmd_quantize(args):
    dist, n0, meta = read_dacp(args.input)
    cons = build_constellation(dist, args.k, n0=n0)
    write_constellation(args.output, cons, meta)
    print(f"{len(cons)} points on {len(cons.rings)} rings, energy {cons.energy:.6f}, "
          f"entropy {cons.entropy_bits:.4f} bits -> {args.output}")
    return 0


def cmd_codebook(args):
    cons, meta = read_constellation(args.input)
    code = assign_gray(build_code(cons.probs), cons)
    cons.codewords = code.codewords
    write_constellation(args.output, cons, meta)
    print(f"mean codeword length {code.mean_length:.4f} bits, "
          f"max {code.max_length} -> {args.output}")
    return 0


def _load_coded(path):
    cons, meta = read_constellation(path)
    if not cons.codewords:
        raise ValueError(f"{path} has no codeword column; run 'codebook' first")
    return cons, ShapingCode(cons.codewords, cons.probs), meta


def cmd_frame(args):
    from .sim import OmLink, plan_point

    cons, code, _ = _load_coded(args.input)
    snr, kind = (args.eb_n0, "eb") if args.eb_n0 else (args.es_n0, "es")
    if args.ns and len(args.ns) != len(snr):
        raise ValueError("--ns needs one entry per SNR point")
    link = OmLink(cons, code)
    print(f"{'Eb/N0 (dB)':>10} {'N_b':>8} {'N_s':>8} {'rate':>7} {'a':>6} {'p_indel':>10}")
    for i, s in enumerate(snr):
        if args.ns:
            es = framing.undb(s) * (cons.entropy_bits / (1 + 1 / args.ns[i]) if kind == "eb" else 1)
            p = framing.estimate_p_indel(cons, code, es, trials=args.trials, rng=args.seed).p
            plan = framing.make_plan(cons, code, es, p, args.a or np.nan, n_symbols=args.ns[i])
        else:
            plan = plan_point(link, s, kind, args.a, args.seed, i, args.a_grid, args.tune_bits,
                              args.trials)
        print(f"{plan.eb_n0_db:10.2f} {plan.n_bits:8d} {plan.n_symbols:8d} {plan.rate:7.3f} "
              f"{plan.a_param:6.3g} {plan.p_indel:10.3e}")
    return 0


def _sweep_config(args, scheme):
    from .sim import SweepConfig

    snr, kind = (args.eb_n0, "eb") if args.eb_n0 else (args.es_n0, "es")
    extra = {}
    if scheme != "qam128":
        extra = dict(a_param=args.a, a_grid=tuple(args.a_grid), tune_bits=args.tune_bits)
    cfg = SweepConfig(scheme, snr, getattr(args, "input", None), snr_kind=kind,
                      min_bit_errors=args.min_errors, max_bits=args.max_bits, seed=args.seed,
                      **({"workers": args.workers} if args.workers else {}), **extra)
    return cfg


def _print_records(records):
    print(f"{'Es/N0':>7} {'Eb/N0':>7} {'bits':>11} {'bit err':>8} {'BER':>10} {'SER':>10}")
    for r in records:
        print(f"{r.es_n0_db:7.2f} {r.eb_n0_db:7.2f} {r.bits:11d} {r.bit_errors:8d} "
              f"{r.ber:10.3e} {r.ser:10.3e}")


def cmd_simulate(args):
    from .sim import run_sweep

    cfg = _sweep_config(args, args.scheme)
    records, _ = run_sweep(cfg, out=args.output)
    _print_records(records)
    return 0


def cmd_qam(args):
    from .qam import union_bound
    from .sim import run_sweep

    cfg = _sweep_config(args, "qam128")
    records, _ = run_sweep(cfg, out=args.output)
    _print_records(records)
    if args.bound:
        for r in records:
            ser, ber = union_bound(framing.undb(r.eb_n0_db))
            print(f"union bound at {r.eb_n0_db:.2f} dB: SER {ser:.3e} BER {ber:.3e}")
    return 0


def _add_sweep_flags(p, om=True):
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--es-n0", type=_floats, help="comma-separated Es/N0 points in dB")
    g.add_argument("--eb-n0", type=_floats, help="comma-separated Eb/N0 points in dB")
    p.add_argument("--min-errors", type=_positive(int), default=100,
                   help="stop a point after this many bit errors (default 100)")
    p.add_argument("--max-bits", type=_positive(int), default=10 ** 8,
                   help="or after this many message bits (default 1e8)")
    p.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
    p.add_argument("--workers", type=_positive(int), default=None,
                   help="worker processes (default $OMGRAND_WORKERS or 1)")
    p.add_argument("-o", "--output", required=True, help="CSV output path")
    if om:
        _add_a_flags(p)


def _add_a_flags(p):
    p.add_argument("--a", type=_positive(float), default=None,
                   help="fixed frame-length parameter a; tuned over --a-grid if omitted")
    p.add_argument("--a-grid", type=_floats, default=list(framing.DEFAULT_A_GRID),
                   help="candidate a values for tuning")
    p.add_argument("--tune-bits", type=_positive(int), default=10 ** 6,
                   help="simulated bits per candidate a while tuning (default 1e6)")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="omgrand",
        description="Capacity-optimal constellation design, Huffman shaping and "
                    "length-correcting demodulation over the complex AWGN channel.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("design", help="cutting-plane design of the amplitude distribution")
    p.add_argument("--grid-step", type=_positive(float), required=True, help="amplitude grid spacing")
    p.add_argument("--grid-count", type=_positive(int), required=True,
                   help="number of grid amplitudes, starting at 0")
    p.add_argument("--n0", type=_positive(float), required=True, help="noise density N0")
    p.add_argument("--avg-power", type=_positive(float), required=True, help="average power limit")
    p.add_argument("--tol", type=_positive(float), default=1e-4,
                   help="stop when the capacity bound gap (nats) falls below this (default 1e-4)")
    p.add_argument("--max-iter", type=_positive(int), default=500, help="iteration cap (default 500)")
    p.add_argument("--model", choices=MODELS, default="complex",
                   help="mutual information of the amplitude alone or of the complex channel "
                        "with uniform phase (default complex)")
    p.add_argument("-o", "--output", required=True, help="DACP file to write")
    p.set_defaults(func=cmd_design)

    p = sub.add_parser("quantize", help="place K constellation points on the designed rings")
    p.add_argument("-i", "--input", required=True, help="DACP file")
    p.add_argument("--k", type=_positive(int), required=True, help="number of points")
    p.add_argument("-o", "--output", required=True, help="constellation file to write")
    p.set_defaults(func=cmd_quantize)

    p = sub.add_parser("codebook", help="add the Huffman shaping codeword column")
    p.add_argument("-i", "--input", required=True, help="constellation file")
    p.add_argument("-o", "--output", required=True, help="constellation file to write")
    p.set_defaults(func=cmd_codebook)

    p = sub.add_parser("frame", help="message-length table per SNR")
    p.add_argument("-i", "--input", required=True, help="constellation file with codewords")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--es-n0", type=_floats, help="comma-separated Es/N0 points in dB")
    g.add_argument("--eb-n0", type=_floats, help="comma-separated Eb/N0 points in dB")
    p.add_argument("--ns", type=_ints, default=None, help="force these symbol counts, one per point")
    p.add_argument("--trials", type=_positive(int), default=10 ** 6,
                   help="symbols used to estimate the indel probability (default 1e6)")
    p.add_argument("--seed", type=int, default=0, help="seed (default 0)")
    _add_a_flags(p)
    p.set_defaults(func=cmd_frame)

    p = sub.add_parser("simulate", help="Monte Carlo BER/SER sweep to CSV")
    p.add_argument("-i", "--input", required=True, help="constellation file with codewords")
    p.add_argument("--scheme", choices=("om-grand", "om-nocorrect", "qam128"), default="om-grand",
                   help="link to simulate (default om-grand)")
    _add_sweep_flags(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("qam", help="uncoded 128-QAM baseline sweep to CSV")
    _add_sweep_flags(p, om=False)
    p.add_argument("--bound", action="store_true", help="also print the union-bound approximation")
    p.set_defaults(func=cmd_qam)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ValueError, ArithmeticError, RuntimeError) as exc:
        print(f"omgrand: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
