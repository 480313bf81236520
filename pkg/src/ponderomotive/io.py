"""CSV ingestion and export.  Column layouts are listed in ``schema.json``."""
import csv
import json
from importlib import resources

import numpy as np

from .errors import ConfigError
from .estimation import MeasuredSpectrum
from .noise import SOURCES


class SchemaError(ConfigError):
    """A CSV file does not match its documented layout."""


def schema():
    return json.loads(resources.files("ponderomotive").joinpath("schema.json").read_text())


def _fmt(x):
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def _read_columns(path, required, optional=()):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise SchemaError(str(path), "empty file") from None
        missing = [c for c in required if c not in header]
        if missing:
            raise SchemaError(str(path), f"missing column(s) {missing}; header is {header}")
        allowed = set(required) | set(optional)
        extra = [c for c in header if c not in allowed]
        if extra:
            raise SchemaError(str(path), f"unexpected column(s) {extra}")
        cols = {name: [] for name in header}
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(header):
                raise SchemaError(f"{path}:{lineno}", f"expected {len(header)} fields, got {len(row)}")
            for name, cell in zip(header, row):
                try:
                    cols[name].append(float(cell))
                except ValueError:
                    raise SchemaError(f"{path}:{lineno}", f"column {name!r}: not a number: {cell!r}") from None
    return {k: np.asarray(v, dtype=float) for k, v in cols.items()}


def _checked_spectrum(path, f, y, w=None):
    try:
        return MeasuredSpectrum(f, y, w)
    except ValueError as exc:
        raise SchemaError(str(path), str(exc)) from None


def read_spectrum_csv(path):
    cols = _read_columns(path, ("frequency_hz", "psd_m2_per_hz"), ("weight",))
    return _checked_spectrum(path, cols["frequency_hz"], cols["psd_m2_per_hz"], cols.get("weight"))


def read_response_csv(path):
    """Driven response: frequency, |x/u| and optional phase (rad)."""
    cols = _read_columns(path, ("frequency_hz", "magnitude_m_per_unit"), ("phase_rad", "weight"))
    spec = _checked_spectrum(path, cols["frequency_hz"], cols["magnitude_m_per_unit"], cols.get("weight"))
    return spec, cols.get("phase_rad")


def read_offset_sweep_csv(path):
    cols = _read_columns(path, ("offset_v", "s_inf"))
    return list(zip(cols["offset_v"].tolist(), cols["s_inf"].tolist()))


def write_rows(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) if isinstance(v, (float, int, np.floating, np.integer))
                             and not isinstance(v, bool) else v for v in row])


def write_spectrum_csv(path, spec):
    """Total and per-source PSD relative to the spectrum's reference level."""
    rel = spec.relative_sources()
    header = ["frequency_hz", "total_rel_shot"] + list(SOURCES)
    columns = [spec.frequency, spec.relative()] + [rel[name] for name in SOURCES]
    write_rows(path, header, zip(*columns))


def write_displacement_csv(path, frequency, psd):
    write_rows(path, ["frequency_hz", "psd_m2_per_hz"], zip(frequency, psd))
