"""Command-line interface.

Subcommands::

    aloof models    visibility curves and a model comparison table
    aloof optics    trace a beamline and report path separations
    aloof wien      Wien-filter round trip on a synthetic scan
    aloof pipeline  synthetic interferogram, analysis and model comparison
    aloof analyze   contrast profile of a PGM image

Exit codes: 0 success, 2 configuration error, 3 quadrature did not
converge, 4 degraded analysis (flagged slabs or failed extraction),
5 unreadable input file, 1 anything else.
"""

from __future__ import annotations

import argparse
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .csvio import write_csv
from .errors import AloofError, ConfigError, ConvergenceError, DomainError, ExtractionError, FormatError
from .runconfig import RunConfig, apply_overrides, load_run_config

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_CONFIG = 2
EXIT_CONVERGENCE = 3
EXIT_DEGRADED = 4
EXIT_FORMAT = 5


def _um(x):
    return f"{x * 1e6:g}"


def _run_config(args):
    cfg = load_run_config(args.config) if getattr(args, "config", None) else RunConfig()
    cfg = apply_overrides(cfg, getattr(args, "material", None), getattr(args, "model", None),
                          getattr(args, "dx", None), getattr(args, "out", None),
                          getattr(args, "seed", None), getattr(args, "tol", None))
    try:
        return cfg.validate()
    except DomainError as exc:
        raise ConfigError(str(exc), cfg.source) from None


def _inputs(cfg, dx, synthetic=False):
    from .decoherence import DecoherenceInput
    from .physics import InteractionGeometry, get_material
    geo = InteractionGeometry(cfg.plate_length, dx, cfg.resolved_surface_offset(synthetic))
    return DecoherenceInput(get_material(cfg.material), cfg.beam(), geo)


def _quad_config(cfg):
    from .decoherence.markov import DEFAULT_CONFIG
    from dataclasses import replace
    return replace(DEFAULT_CONFIG, relative_tolerance=cfg.rel_tol, absolute_tolerance=cfg.abs_tol)


def _run_provenance(cfg, command):
    return {"command": command, "seed": cfg.seed, "config_file": cfg.source or ""}


# -- models -------------------------------------------------------------------------

def cmd_models(args):
    from .decoherence import resolve_model, visibility_curve, write_curve_csv
    cfg = _run_config(args)
    models = [resolve_model(m) for m in cfg.models]
    out = Path(cfg.out)
    z = cfg.z_grid()
    qcfg = _quad_config(cfg)
    blocks = []
    nonconverged = 0
    for dx in cfg.separations:
        inp = _inputs(cfg, dx)
        curves = [visibility_curve(m, inp, qcfg, workers=cfg.workers, z_grid=z) for m in models]
        for c in curves:
            nonconverged += sum(1 for f in c.flags if f)
            path = out / f"curve_{c.model}_dx{_um(dx)}um.csv"
            write_curve_csv(c, path, _run_provenance(cfg, "models"))
            print(f"wrote {path}")
        blocks.append((dx, curves))
    header = ["dx_m", "z_m"] + [f"V_{m}" for m in models] + [f"flag_{m}" for m in models]
    rows = []
    for dx, curves in blocks:
        for i, zi in enumerate(z):
            rows.append([dx, float(zi)] + [float(c.visibility_values[i]) for c in curves]
                        + [c.flags[i] for c in curves])
    prov = _run_provenance(cfg, "models")
    prov.update({"material": cfg.material, "models": ",".join(models),
                 "separations_m": ",".join(repr(d) for d in cfg.separations),
                 "rel_tol": cfg.rel_tol, "abs_tol": cfg.abs_tol})
    path = write_csv(out / "comparison.csv", prov, header, rows)
    print(f"wrote {path}")
    if nonconverged:
        print(f"warning: {nonconverged} curve points did not reach the quadrature tolerance",
              file=sys.stderr)
        return EXIT_CONVERGENCE
    return EXIT_OK


# -- optics ---------------------------------------------------------------------------

def cmd_optics(args):
    from .optics import load_beamline, path_separation, trace_pair
    path = args.config
    if path and not Path(path).is_file():
        raise ConfigError(f"beamline file {path!r} does not exist")
    bl = load_beamline(path)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        plus, minus = trace_pair(bl)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    pos = bl.positions()
    marks = {idx: name for name, idx in bl.markers.items()}
    print(f"{'idx':>3} {'element':<22} {'s [m]':>8} {'x+ [um]':>12} {'slope+':>12} "
          f"{'x- [um]':>12} {'slope-':>12} {'dx [um]':>10}")
    rows = []
    for i in range(len(plus)):
        label = "entrance" if i == 0 else bl.names[i - 1]
        if i in marks:
            label += f" <{marks[i]}>"
        dx = abs(plus[i].x - minus[i].x)
        print(f"{i:>3} {label:<22} {pos[i]:8.4f} {plus[i].x * 1e6:12.4f} {plus[i].slope:12.4e} "
              f"{minus[i].x * 1e6:12.4f} {minus[i].slope:12.4e} {dx * 1e6:10.4f}")
        rows.append([i, label, pos[i], plus[i].x, plus[i].slope, minus[i].x, minus[i].slope, dx])
    print("path separation at markers:")
    for name in bl.markers:
        print(f"  {name:<14} {path_separation(bl, name) * 1e6:.4f} um")
    if args.out:
        prov = {"command": "optics", "beamline": path or "reference_beamline.ini",
                "beam_voltage_V": bl.u_beam}
        p = write_csv(Path(args.out) / "optics_trace.csv", prov,
                      ["boundary", "element", "s_m", "x_plus_m", "slope_plus", "x_minus_m",
                       "slope_minus", "dx_m"], rows)
        print(f"wrote {p}")
    return EXIT_OK


# -- wien -----------------------------------------------------------------------------

def cmd_wien(args):
    from .optics import WienFilter, wien_extract_separation, wien_synthetic_scan
    cfg = _run_config(args)
    w = cfg.wien
    wf = WienFilter(w.get("plate_length", 0.1), w.get("plate_gap", 5e-3))
    dx_true = cfg.separations[0] if args.dx is not None else w.get("dx_true", 2.9e-6)
    noise = w.get("noise", 0.01) if args.noise is None else args.noise
    beam = cfg.beam()
    l_c = beam.coherence_length
    l_c_sigma = l_c * cfg.energy_spread_sigma / cfg.energy_spread
    scan = wien_synthetic_scan(wf, beam.acceleration_voltage, dx_true, l_c, noise, cfg.seed,
                               int(w.get("n_points", 41)), w.get("span", 3.0))
    prov = {"command": "wien", "seed": cfg.seed, "dx_true_m": dx_true, "noise": noise,
            "wien_plate_length_m": wf.plate_length, "wien_plate_gap_m": wf.plate_gap,
            "beam_voltage_V": beam.acceleration_voltage, "coherence_length_m": l_c,
            "coherence_length_sigma_m": l_c_sigma}
    out = Path(cfg.out)
    try:
        res = wien_extract_separation(scan, wf, beam.acceleration_voltage, l_c, l_c_sigma)
    except ExtractionError as exc:
        write_csv(out / "wien_scan.csv", prov, ["u_wf_V", "contrast"], scan.tolist())
        print(f"extraction failed: {exc}", file=sys.stderr)
        return EXIT_DEGRADED
    prov.update({"dx_estimate_m": res.dx, "dx_uncertainty_m": res.uncertainty,
                 "critical_voltage_V": res.critical_voltage})
    p = write_csv(out / "wien_scan.csv", prov, ["u_wf_V", "contrast"], scan.tolist())
    print(f"coherence length   {l_c * 1e9:.2f} +- {l_c_sigma * 1e9:.2f} nm")
    print(f"dx true            {dx_true * 1e6:.4f} um")
    print(f"dx estimate        {res.dx * 1e6:.4f} +- {res.uncertainty * 1e6:.4f} um "
          f"({100 * res.fractional_uncertainty:.1f} %)")
    print(f"relative error     {100 * (res.dx / dx_true - 1):+.3f} %")
    print(f"wrote {p}")
    return EXIT_OK


# -- pipeline / analyze ----------------------------------------------------------------

def _image_setup(cfg):
    from dataclasses import replace
    from .fringes import ImageGeometry
    from .pipeline import DEFAULT_BASE
    im = cfg.image
    geo = ImageGeometry(int(im.get("n_x", 200)), int(im.get("n_z", 160)),
                        im.get("pitch_x", 1e-6), im.get("pitch_z", 0.25e-6),
                        im.get("z_bottom", 0.125e-6))
    base = replace(DEFAULT_BASE, contrast=im.get("contrast", DEFAULT_BASE.contrast),
                   spacing=im.get("spacing", DEFAULT_BASE.spacing),
                   phase=im.get("phase", DEFAULT_BASE.phase),
                   envelope_width=im.get("envelope_width", DEFAULT_BASE.envelope_width))
    return geo, base


def cmd_pipeline(args):
    from .decoherence import resolve_model, visibility_curve, write_curve_csv
    from .decoherence.curves import constant_curve
    from .fringes import write_image, write_profile_csv
    from .pipeline import run_pipeline
    cfg = _run_config(args)
    im = cfg.image
    geo, base = _image_setup(cfg)
    z = geo.row_z()
    dx = cfg.separations[0]
    tag = cfg.models[0].strip().lower()
    if tag in ("constant", "none"):
        curve = constant_curve(z, 1.0)
    else:
        curve = visibility_curve(resolve_model(tag), _inputs(cfg, dx, synthetic=True),
                                 _quad_config(cfg),
                                 workers=cfg.workers, z_grid=z)
    res = run_pipeline(curve, geo, base, im.get("total_counts", 5e5), cfg.seed,
                       im.get("slab_height", 2e-6), im.get("reference_band", 5e-6))
    out = Path(cfg.out)
    prov = _run_provenance(cfg, "pipeline")
    prov.update({"model": curve.model, "material": cfg.material, "dx_m": dx,
                 "total_counts": im.get("total_counts", 5e5), "base_contrast": base.contrast})
    res.image.metadata.update({"model": curve.model, "dx_m": dx})
    write_image(res.image, out / "image.pgm")
    write_curve_csv(curve, out / "curve.csv", prov)
    write_profile_csv(res.profile, out / "profile.csv", prov)
    dev = res.max_deviation()
    dev_raw = res.max_deviation(normalized_model=False)
    cprov = dict(prov)
    cprov.update({"max_abs_deviation_normalized_model": dev,
                  "max_abs_deviation_raw_model": dev_raw,
                  "median_sigma": res.median_sigma(), "compare_z_min_m": 5e-6})
    rows = [[float(zc), float(c), float(s), float(vm), float(vn), f]
            for zc, c, s, vm, vn, f in zip(res.profile.z_centers, res.profile.contrast,
                                           res.profile.sigma, res.model_at_slabs,
                                           res.model_normalized, res.profile.flags)]
    write_csv(out / "comparison.csv", cprov,
              ["z_m", "contrast", "sigma", "V_model", "V_model_normalized", "flag"], rows)
    print(f"wrote {out / 'image.pgm'}, curve.csv, profile.csv, comparison.csv")
    print(f"max |C - V_model/V_band| (z > 5 um) = {dev:.4f}")
    print(f"max |C - V_model|        (z > 5 um) = {dev_raw:.4f}")
    print(f"median fit sigma                    = {res.median_sigma():.4f}")
    if not curve.converged:
        return EXIT_CONVERGENCE
    return EXIT_DEGRADED if res.profile.degraded else EXIT_OK


def cmd_analyze(args):
    from .fringes import normalize_profile, read_image, slice_and_fit, write_profile_csv
    image = read_image(args.image, args.sidecar)
    shear = [float(s) for s in args.shear.split(",")] if args.shear else None
    profile = slice_and_fit(image, args.slab_height * 1e-6, shear)
    if not args.no_normalize:
        try:
            profile = normalize_profile(profile, args.band * 1e-6)
        except DomainError as exc:
            print(f"warning: not normalized: {exc}", file=sys.stderr)
    out = Path(args.out or ".")
    prov = {"command": "analyze", "image": str(args.image)}
    prov.update({f"image_{k}": v for k, v in sorted(image.metadata.items())})
    p = write_profile_csv(profile, out / "profile.csv", prov)
    bad = sum(1 for f in profile.flags if f not in ("ok", "reduced", "clamped"))
    print(f"wrote {p} ({len(profile.flags)} slabs, {bad} flagged)")
    return EXIT_DEGRADED if profile.degraded else EXIT_OK


# -- entry point ---------------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(prog="aloof", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"aloof {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, model=True):
        p.add_argument("--config", help="run configuration file")
        p.add_argument("--material", help="bundled material name or material file")
        if model:
            p.add_argument("--model", help="comma-separated model tags")
        p.add_argument("--dx", help="path separation(s), e.g. '9.4um' or '9.3um,6.5um'")
        p.add_argument("--out", help="output directory")
        p.add_argument("--seed", type=int, help="random seed")
        p.add_argument("--tol", type=float, help="relative quadrature tolerance")

    common(sub.add_parser("models", help="model visibility curves"))
    p = sub.add_parser("optics", help="trace a beamline file")
    p.add_argument("--config", help="beamline file (default: bundled reference beamline)")
    p.add_argument("--out", help="directory for the trace CSV")
    p = sub.add_parser("wien", help="Wien-filter round trip")
    common(p, model=False)
    p.add_argument("--noise", type=float, help="relative contrast noise")
    common(sub.add_parser("pipeline", help="synthetic experiment"))
    p = sub.add_parser("analyze", help="contrast profile of an image")
    p.add_argument("image", help="PGM image (sidecar: same name with .meta)")
    p.add_argument("--sidecar", help="metadata file if not next to the image")
    p.add_argument("--out", help="output directory")
    p.add_argument("--slab-height", type=float, default=2.0, help="slab height in um")
    p.add_argument("--band", type=float, default=5.0, help="reference band in um")
    p.add_argument("--shear", help="row shift polynomial coefficients a0,a1,... in pixels")
    p.add_argument("--no-normalize", action="store_true")
    return parser


COMMANDS = {"models": cmd_models, "optics": cmd_optics, "wien": cmd_wien,
            "pipeline": cmd_pipeline, "analyze": cmd_analyze}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConvergenceError as exc:
        print(f"convergence error: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except FormatError as exc:
        print(f"format error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except DomainError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except AloofError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
