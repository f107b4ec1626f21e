"""Command-line front end: ``phototherm <verb> [--config PATH] [flags]``.

Exit codes: 0 success, 1 validation threshold exceeded, 2 usage or I/O
error, 3 degenerate fit, 4 ambiguous oracle eigenvalue.
"""
from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import bath as bathmod
from .cooling import sweep
from .dynamics import (
    AmbiguousModeError,
    Exponential,
    Instantaneous,
    build_drift,
    effective_mode,
    fit_damping,
    simulate_ringdown,
)
from .fitdata import UnidentifiableFitError, fit_eta, load_dataset, model_terms, params_for_dataset
from .params import TWO_PI, desk_params, load_config
from .svg import write_line_plot
from .validate import detuning_grid, max_deviation, oracle_comparison

EXIT_OK, EXIT_THRESHOLD, EXIT_USAGE, EXIT_FIT, EXIT_AMBIGUOUS = 0, 1, 2, 3, 4


def fmt(v) -> str:
    return format(float(v), ".17g")


def write_csv(path, header, rows):
    text = ",".join(header) + "\n" + "".join(",".join(fmt(v) for v in row) + "\n" for row in rows)
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _outputs(args):
    """Resolve (csv_path, svg_path) from --output/--format."""
    out = Path(args.output) if args.output else None
    csv_path = svg_path = None
    if args.format in ("csv", "both"):
        csv_path = out
    if args.format in ("svg", "both"):
        if out is None:
            raise ValueError("--format svg/both needs --output")
        svg_path = out.with_suffix(".svg")
    return csv_path, svg_path


def positive_int(text):
    v = int(text)
    if v <= 0:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {text}")
    return v


def positive_float(text):
    v = float(text)
    if not v > 0 or not math.isfinite(v):
        raise argparse.ArgumentTypeError(f"must be a positive number, got {text}")
    return v


def cmd_sweep(args):
    p = load_config(args.config)
    kc_hz = p.cavity.kappa_c / TWO_PI
    lo = args.detuning_from if args.detuning_from is not None else -5 * kc_hz
    hi = args.detuning_to if args.detuning_to is not None else 5 * kc_hz
    grid_hz = np.linspace(lo, hi, args.points)
    results = sweep(p, grid_hz * TWO_PI)
    rows = [(d, r.kappa_th, r.kappa_rp, r.kappa_eff) for d, (_, r) in zip(grid_hz, results)]
    csv_path, svg_path = _outputs(args)
    if args.format in ("csv", "both"):
        write_csv(csv_path, ["delta_c_hz", "kappa_th_rad_s", "kappa_rp_rad_s", "kappa_eff_rad_s"], rows)
    if svg_path is not None:
        write_line_plot(
            svg_path,
            [("kappa_eff", grid_hz, [r[3] for r in rows])],
            title="effective mechanical linewidth",
            xlabel="detuning [Hz]",
            ylabel="kappa_eff [rad/s]",
        )
    return EXIT_OK


def cmd_fit(args):
    p = load_config(args.config)
    data = load_dataset(args.data)
    res = fit_eta(data, p, include_rp=not args.no_rp)
    print(f"eta_th_over_gamma={fmt(res.eta_over_gamma)}")
    print(f"stderr={fmt(res.stderr)}")
    print(f"residual_rms={fmt(res.residual_rms)}")
    print(f"n_points={res.n_points}")
    if args.svg:
        q = params_for_dataset(p, data.meta)
        order = np.argsort(data.delta_c)
        S, base = model_terms(data, q, include_rp=not args.no_rp)
        model = base + res.eta_over_gamma * S
        x = data.delta_c[order] / TWO_PI
        write_line_plot(
            args.svg,
            [("data", x, data.kappa[order]), ("fit", x, model[order])],
            title=data.meta.label or "fit",
            xlabel="detuning [Hz]",
            ylabel="kappa_eff [rad/s]",
        )
    return EXIT_OK


def cmd_validate(args):
    p = load_config(args.config) if args.config else desk_params(args.hierarchy)
    points = oracle_comparison(p, detuning_grid(p, args.span, args.points))
    dev = max_deviation(points, p.mech.kappa_m)
    for pt in points:
        print(
            f"delta_c_hz={fmt(pt.delta_c / TWO_PI)} analytic={fmt(pt.analytic_shift)} "
            f"oracle={fmt(pt.oracle_shift)}"
        )
    print(f"max_deviation={fmt(dev)}")
    print(f"threshold={fmt(args.threshold)}")
    return EXIT_OK if dev <= args.threshold else EXIT_THRESHOLD


def _kernel(args, p):
    if args.kernel == "instantaneous":
        return Instantaneous()
    if args.kernel == "bath":
        if not args.bath:
            raise ValueError("--kernel bath needs --bath PATH")
        return bathmod.kernel_to_spec(bathmod.load_bath(args.bath))
    return Exponential(args.tau if args.tau is not None else p.phototherm.tau_th)


def cmd_simulate(args):
    p = load_config(args.config)
    G = build_drift(p, _kernel(args, p))
    mode = effective_mode(G, p)
    t_final = args.t_final
    if t_final is None:
        t_final = max(5.0 / abs(mode.kappa_eff), 6 * math.pi / mode.omega_eff)
    steps = args.steps
    if steps is None:
        steps = int(min(2_000_000, max(1000, 20 * t_final * mode.omega_eff / TWO_PI)))
    trace = simulate_ringdown(G, 1.0, t_final, steps)
    fit = fit_damping(trace)
    print(f"kappa={fmt(fit.kappa)}")
    print(f"omega={fmt(fit.omega)}")
    print(f"kappa_eigen={fmt(mode.kappa_eff)}")
    print(f"omega_eigen={fmt(mode.omega_eff)}")
    if trace.fallback:
        print("fallback=expm")
    csv_path, svg_path = _outputs(args)
    if args.format in ("csv", "both") and args.output:
        rows = zip(trace.times, trace.values.real, trace.values.imag, np.abs(trace.values))
        write_csv(csv_path, ["t_s", "re_b", "im_b", "abs_b"], rows)
    if svg_path is not None:
        write_line_plot(
            svg_path,
            [("|b|", trace.times, np.abs(trace.values)), ("Re b", trace.times, trace.values.real)],
            title="mechanical ring-down",
            xlabel="t [s]",
            ylabel="b",
        )
    return EXIT_OK


def cmd_bath_kernel(args):
    spec = bathmod.load_bath(args.bath)
    kmin = min(m.kappa_mu for m in spec.modes)
    t_final = args.t_final if args.t_final is not None else 10.0 / kmin
    samples = bathmod.synthesize_kernel(spec, np.linspace(0.0, t_final, args.steps))
    fit = bathmod.fit_exponential(samples)
    print(f"tau={fmt(fit.tau)}")
    print(f"amplitude={fmt(fit.amplitude)}")
    print(f"residual={fmt(fit.residual)}")
    if args.output:
        v = samples.values
        write_csv(args.output, ["t_s", "re_m", "im_m"], zip(samples.times, v.real, v.imag))
    return EXIT_OK


def build_parser():
    ap = argparse.ArgumentParser(prog="phototherm", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="verb", required=True)

    def output_flags(sp):
        sp.add_argument("--output", "-o", help="CSV output path (SVG goes next to it)")
        sp.add_argument("--format", choices=("csv", "svg", "both"), default="csv")

    sp = sub.add_parser("sweep", help="damping rates over a detuning grid")
    sp.add_argument("--config", required=True)
    sp.add_argument("--detuning-from", type=float, help="Hz (default -5 kappa_c)")
    sp.add_argument("--detuning-to", type=float, help="Hz (default +5 kappa_c)")
    sp.add_argument("--points", type=positive_int, default=401)
    output_flags(sp)
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("fit", help="fit eta_th/gamma to a linewidth dataset")
    sp.add_argument("--config", required=True)
    sp.add_argument("--data", required=True)
    sp.add_argument("--no-rp", action="store_true", help="do not subtract radiation-pressure damping")
    sp.add_argument("--svg", help="write data/fit overlay")
    sp.set_defaults(func=cmd_fit)

    sp = sub.add_parser("validate", help="compare analytic rates with the eigenvalue oracle")
    sp.add_argument("--config", help="parameter set (default: desk-scale family)")
    sp.add_argument("--hierarchy", type=positive_float, default=100.0, help="desk-scale separation factor")
    sp.add_argument("--points", type=positive_int, default=21)
    sp.add_argument("--span", type=positive_float, default=3.0, help="grid half-width in units of kappa_c")
    sp.add_argument("--threshold", type=float, default=0.02)
    sp.set_defaults(func=cmd_validate)

    sp = sub.add_parser("simulate", help="ring-down simulation and damping fit")
    sp.add_argument("--config", required=True)
    sp.add_argument("--kernel", choices=("exponential", "instantaneous", "bath"), default="exponential")
    sp.add_argument("--tau", type=positive_float, help="kernel time constant [s]")
    sp.add_argument("--bath", help="bath CSV for --kernel bath")
    sp.add_argument("--t-final", type=positive_float)
    sp.add_argument("--steps", type=positive_int)
    output_flags(sp)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("bath-kernel", help="memory kernel from a phonon bath")
    sp.add_argument("--bath", required=True)
    sp.add_argument("--config", help="ignored; accepted for uniformity")
    sp.add_argument("--t-final", type=positive_float)
    sp.add_argument("--steps", type=positive_int, default=2001)
    sp.add_argument("--output", "-o")
    sp.set_defaults(func=cmd_bath_kernel)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UnidentifiableFitError as exc:
        print(f"phototherm: {exc}", file=sys.stderr)
        return EXIT_FIT
    except AmbiguousModeError as exc:
        print(f"phototherm: {exc}", file=sys.stderr)
        return EXIT_AMBIGUOUS
    except (OSError, ValueError, ArithmeticError, RuntimeError) as exc:
        print(f"phototherm: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
