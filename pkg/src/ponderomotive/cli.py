"""Command-line workbench.

Exit codes: 0 success, 2 validation error, 3 fit did not converge, 4 I/O error.
"""
import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__, io
from ._kernels import BACKEND
from .cavity import feasibility_lhs, feasibility_rhs
from .config import PRESETS, build_scenario, load_config, set_value
from .errors import ConfigError, DegenerateDataError, DomainError, ValidationError
from .estimation import (calibrate_homodyne_angle, fit_driven_response, fit_thermal_spectrum)
from .noise import (SOURCES, budget_at_minimum, displacement_spectrum, squeezing_metrics,
                    synthesize_spectrum)

log = logging.getLogger("ponderomotive")

EXIT_OK, EXIT_VALIDATION, EXIT_NONCONVERGED, EXIT_IO = 0, 2, 3, 4


class NotConverged(Exception):
    pass


def _parse_phis(text):
    items = [t.strip() for t in text.split(",")]
    if not any(items):
        raise ConfigError("--phi", "empty angle list")
    try:
        return [float(t) for t in items if t]
    except ValueError:
        raise ConfigError("--phi", f"not a comma-separated list of degrees: {text!r}") from None


def _phi_tag(deg):
    return f"{deg:+08.3f}".replace(".", "p")


def _write_table(out, stem, header, columns, fmt):
    if fmt == "json":
        path = out / f"{stem}.json"
        payload = {name: np.asarray(col).tolist() for name, col in zip(header, columns)}
        path.write_text(json.dumps(payload, indent=1) + "\n")
    else:
        path = out / f"{stem}.csv"
        io.write_rows(path, header, zip(*columns))
    return str(path)


def _spectrum_columns(spec):
    rel = spec.relative_sources()
    header = ["frequency_hz", "total_rel_shot"] + list(SOURCES)
    return header, [spec.frequency, spec.relative()] + [rel[s] for s in SOURCES]


def _summary(cmd, cfg, scn, args, **extra):
    summary = {
        "command": cmd,
        "version": __version__,
        "backend": BACKEND,
        "seed": args.seed,
        "scenario": cfg,
        "reference": scn.reference,
        "quantum_regime_margin": scn.margin,
    }
    summary.update(extra)
    return summary


def _write_summary(out, summary):
    path = out / "summary.json"
    summary["outputs"] = summary.get("outputs", []) + [str(path)]
    path.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return summary


def _load(args):
    return load_config(args.config, args.preset, args.set or ())


def _outdir(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_synth(args):
    cfg = _load(args)
    scn, grid, angles = build_scenario(cfg)
    phis_deg = _parse_phis(args.phi) if args.phi is not None else [float(np.degrees(a)) for a in angles]
    if not phis_deg:
        raise ConfigError("--phi", "empty angle list")
    for deg in phis_deg:
        if not -90.0 < deg <= 90.0:
            raise ConfigError("--phi", f"angle {deg} deg outside (-90, 90]")
    out = _outdir(args)
    f_m = scn.oscillator.resonance_hz
    outputs, reports = [], []
    for deg in phis_deg:
        spec = synthesize_spectrum(scn, grid, np.radians(deg))
        header, cols = _spectrum_columns(spec)
        outputs.append(_write_table(out, f"spectrum_phi{_phi_tag(deg)}", header, cols, args.format))
        reports.append(squeezing_metrics(spec, f_m).as_dict())
    disp = displacement_spectrum(scn, grid)
    if args.measured_noise > 0:
        rng = np.random.default_rng(args.seed)
        disp = disp * np.exp(args.measured_noise * rng.standard_normal(disp.shape))
    outputs.append(_write_table(out, "displacement", ["frequency_hz", "psd_m2_per_hz"], [grid, disp], args.format))
    summary = _write_summary(out, _summary("synth", cfg, scn, args, squeezing=reports, outputs=outputs,
                                           measured_noise=args.measured_noise))
    print(json.dumps({"squeezing": reports, "outputs": summary["outputs"]}, indent=2))
    return EXIT_OK


def _budget(cfg):
    scn, grid, _ = build_scenario(cfg)
    spec = synthesize_spectrum(scn, grid, scn.detection.homodyne_angle)
    return scn, spec, squeezing_metrics(spec, scn.oscillator.resonance_hz)


def cmd_budget(args):
    cfg = _load(args)
    scn, spec, report = _budget(cfg)
    out = _outdir(args)
    header, cols = _spectrum_columns(spec)
    path = _write_table(out, "budget", header, cols, args.format)
    summary = _write_summary(out, _summary(
        "budget", cfg, scn, args, squeezing=[report.as_dict()],
        min_total_db=report.min_relative_psd_db, budget_at_minimum=budget_at_minimum(spec),
        outputs=[path]))
    print(json.dumps({"min_total_db": summary["min_total_db"], "at_frequency_hz": report.at_frequency,
                      "quantum_regime_margin": summary["quantum_regime_margin"],
                      "outputs": summary["outputs"]}, indent=2))
    return EXIT_OK


def cmd_feasibility(args):
    cfg = _load(args)
    scn, _, _ = build_scenario(cfg)
    lhs = feasibility_lhs(scn.cavity, scn.laser)
    rhs = feasibility_rhs(scn.oscillator, scn.environment)
    margin = lhs / rhs
    verdict = "quantum-dominated" if margin > 1 else "thermal-dominated"
    result = {"lhs_n2_per_hz": lhs, "rhs_n2_per_hz": rhs, "margin": margin, "verdict": verdict}
    if args.format == "json":
        print(json.dumps(result, indent=2))
    else:
        print(f"back-action (LHS)  {lhs:.6e} N^2/Hz")
        print(f"thermal (RHS)      {rhs:.6e} N^2/Hz")
        print(f"margin             {margin:.6g}")
        print(f"verdict            {verdict}")
    return EXIT_OK


def _parse_axis(text):
    parts = text.rsplit(":", 3)
    if len(parts) != 4:
        raise ConfigError("--axis", "expected PATH:START:STOP:STEPS")
    path, start, stop, steps = parts
    try:
        start, stop = float(start), float(stop)
        steps = int(steps)
    except ValueError:
        raise ConfigError("--axis", f"bad range in {text!r}") from None
    if steps < 1:
        raise ConfigError("--axis", "steps must be >= 1")
    return path, np.linspace(start, stop, steps)


def cmd_sweep(args):
    cfg = _load(args)
    path, values = _parse_axis(args.axis)
    rows = []
    for value in values:
        step_cfg = set_value(cfg, path, float(value))
        scn, _, report = _budget(step_cfg)
        rows.append((float(value), report.min_relative_psd_db, scn.margin))
    out = _outdir(args)
    cols = [list(c) for c in zip(*rows)]
    table = _write_table(out, "sweep", ["value", "min_db", "margin"], cols, args.format)
    scn, _, _ = build_scenario(cfg)
    _write_summary(out, _summary("sweep", cfg, scn, args, axis=path, outputs=[table],
                                 sweep=[dict(zip(("value", "min_db", "margin"), r)) for r in rows]))
    for r in rows:
        print(f"{r[0]:.6g}\t{r[1]:.4f}\t{r[2]:.6g}")
    return EXIT_OK


def cmd_fit(args):
    if args.mode == "thermal":
        if args.temperature is None:
            raise ConfigError("--temperature", "required for thermal fits")
        data = io.read_spectrum_csv(args.csv)
        result = fit_thermal_spectrum(data, args.temperature)
    else:
        if args.force_calibration is None:
            raise ConfigError("--force-calibration", "required for driven fits")
        data, phase = io.read_response_csv(args.csv)
        result = fit_driven_response(data.frequency, data.psd, args.force_calibration, phase=phase,
                                     weight=data.weight)
    payload = result.as_dict()
    text = json.dumps(payload, indent=2)
    print(text)
    if args.out is not None:
        out = _outdir(args)
        (out / "fit.json").write_text(text + "\n")
    if not result.converged:
        raise NotConverged(result.message)
    return EXIT_OK


def cmd_angle_cal(args):
    sweep = io.read_offset_sweep_csv(args.csv)
    cal = calibrate_homodyne_angle(sweep)
    rows = [(c.offset, c.phi_abs, float(np.degrees(c.phi_signed)), int(c.ambiguous)) for c in cal]
    out = _outdir(args)
    header = ["offset_v", "phi_abs_rad", "phi_signed_deg", "ambiguous"]
    path = _write_table(out, "angle_cal", header, [list(c) for c in zip(*rows)], args.format)
    for r in rows:
        print(f"{r[0]:.6g}\t{r[1]:.9f}\t{r[2]:.4f}\t{'ambiguous' if r[3] else 'exact'}")
    print(path)
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="ponderomotive", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default=None, help="output directory")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--seed", type=int, default=0, help="seed for synthetic measurement noise")
    scenario = argparse.ArgumentParser(add_help=False)
    scenario.add_argument("--config", help="TOML or JSON scenario file")
    scenario.add_argument("--preset", choices=sorted(PRESETS))
    scenario.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE",
                          help="override one configuration value (repeatable)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", parents=[common, scenario], help="quadrature spectra per homodyne angle")
    p.add_argument("--phi", help="comma-separated angles in degrees, e.g. --phi=0,-20,-44")
    p.add_argument("--measured-noise", type=float, default=0.0,
                   help="log-normal noise level added to displacement.csv")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("budget", parents=[common, scenario], help="per-source noise budget")
    p.set_defaults(func=cmd_budget)

    p = sub.add_parser("feasibility", parents=[common, scenario], help="quantum-regime margin")
    p.set_defaults(func=cmd_feasibility)

    p = sub.add_parser("sweep", parents=[common, scenario], help="sweep one parameter")
    p.add_argument("--axis", required=True, metavar="PATH:START:STOP:STEPS",
                   help="e.g. laser.power_mw:2:30:15")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("fit", parents=[common], help="fit a measured spectrum")
    p.add_argument("csv")
    p.add_argument("--mode", choices=("thermal", "driven"), default="thermal")
    p.add_argument("--temperature", type=float, help="bath temperature in K")
    p.add_argument("--force-calibration", type=float, help="N per modulation unit (driven mode)")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("angle-cal", parents=[common], help="homodyne angle from an offset sweep")
    p.add_argument("csv")
    p.set_defaults(func=cmd_angle_cal)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.out is None and args.command not in ("fit", "feasibility"):
        args.out = "."
    try:
        return args.func(args)
    except NotConverged as exc:
        print(f"error: fit did not converge: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED
    except (ConfigError, ValidationError, DomainError, DegenerateDataError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
