"""Datasets of stretch/shear vs. nominal stress, file I/O, and fit metrics.

A dataset holds up to three loading protocols: uniaxial tension (stretch >= 1),
uniaxial compression (stretch <= 1, stresses negative), and simple shear.
The on-disk format is a small CSV with header ``mode,control,stress_kpa``;
``control`` is the stretch for the uniaxial modes and the shear amount for
shear. Values are written with ``repr`` so that a write/read cycle restores
the exact floating-point values.
"""

import csv
import json
import os
import tempfile
from dataclasses import dataclass, field

import numpy as np

from .errors import DataFormatError, DomainError
from .materials import unit_stress_shear, unit_stress_uniaxial

CSV_HEADER = ("mode", "control", "stress_kpa")
_MODES = ("tension", "compression", "shear")

#: control ranges of the default forward-simulation protocol:
#: tension stretch 1..2, compression stretch 1..0.5, shear 0..0.5
DEFAULT_RANGES = ((1.0, 2.0), (1.0, 0.5), (0.0, 0.5))


def _as_pairs(values, name):
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        return np.zeros((0, 2))
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise DomainError(f"{name} must be an (n, 2) array of (control, stress) pairs")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} contains non-finite values")
    return arr.copy()


@dataclass(frozen=True)
class Dataset:
    """Three loading protocols of (control, stress) pairs, stresses in kPa."""

    tension: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))
    compression: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))
    shear: np.ndarray = field(default_factory=lambda: np.zeros((0, 2)))
    provenance: str = ""

    def __post_init__(self):
        object.__setattr__(self, "tension", _as_pairs(self.tension, "tension"))
        object.__setattr__(self, "compression", _as_pairs(self.compression, "compression"))
        object.__setattr__(self, "shear", _as_pairs(self.shear, "shear"))
        if self.tension.size and np.any(self.tension[:, 0] < 1.0):
            raise DomainError("tension stretches must be >= 1")
        if self.compression.size and np.any(self.compression[:, 0] > 1.0):
            raise DomainError("compression stretches must be <= 1")
        if self.compression.size and np.any(self.compression[:, 0] <= 0.0):
            raise DomainError("compression stretches must be positive")

    @property
    def max_tension_stress(self):
        return float(self.tension[:, 1].max()) if self.tension.size else None

    @property
    def min_compression_stress(self):
        return float(self.compression[:, 1].min()) if self.compression.size else None

    @property
    def max_shear_stress(self):
        return float(self.shear[:, 1].max()) if self.shear.size else None

    @property
    def n_points(self):
        return self.tension.shape[0] + self.compression.shape[0] + self.shear.shape[0]

    def protocols(self):
        """Yield (mode name, controls, stresses) for the non-empty protocols."""
        for name, block in (("tension", self.tension),
                            ("compression", self.compression),
                            ("shear", self.shear)):
            yield name, block[:, 0], block[:, 1]


def generate_synthetic(true_params, ranges=None, n_increments=10,
                       noise_std=0.0, seed=None, provenance=None):
    """Forward-simulate a dataset from known model weights.

    Each protocol gets ``n_increments + 1`` equidistant control values over
    its range. Noise is off by default; when ``noise_std`` is positive,
    Gaussian noise with that standard deviation (kPa) is added to every
    stress using ``seed``.
    """
    if ranges is None:
        ranges = DEFAULT_RANGES
    (t0, t1), (c0, c1), (s0, s1) = ranges
    n = int(n_increments)
    if n < 1:
        raise DomainError("n_increments must be >= 1")
    lam_t = np.linspace(t0, t1, n + 1)
    lam_c = np.linspace(c0, c1, n + 1)
    gam_s = np.linspace(s0, s1, n + 1)

    amp, exps = true_params.amplitudes, true_params.exponents
    p_t = amp @ unit_stress_uniaxial(true_params.family, lam_t, exps)
    p_c = amp @ unit_stress_uniaxial(true_params.family, lam_c, exps)
    p_s = amp @ unit_stress_shear(true_params.family, gam_s, exps)
    if noise_std > 0.0:
        rng = np.random.default_rng(seed)
        p_t = p_t + rng.normal(0.0, noise_std, p_t.shape)
        p_c = p_c + rng.normal(0.0, noise_std, p_c.shape)
        p_s = p_s + rng.normal(0.0, noise_std, p_s.shape)
    if provenance is None:
        provenance = f"synthetic {true_params.family.value}"
    return Dataset(
        tension=np.column_stack([lam_t, p_t]),
        compression=np.column_stack([lam_c, p_c]),
        shear=np.column_stack([gam_s, p_s]),
        provenance=provenance,
    )


def write_csv(dataset, path):
    """Write a dataset; the write is atomic (temp file + rename)."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(CSV_HEADER)
            for mode, controls, stresses in dataset.protocols():
                for c, s in zip(controls, stresses):
                    writer.writerow([mode, repr(float(c)), repr(float(s))])
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_csv(path):
    if not os.path.exists(path):
        raise DataFormatError(f"no such dataset file: {path}")
    rows = {"tension": [], "compression": [], "shear": []}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != CSV_HEADER:
            raise DataFormatError(
                f"expected header {','.join(CSV_HEADER)}, got {header}", line=1
            )
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 3:
                raise DataFormatError(f"expected 3 columns, got {len(row)}", line=lineno)
            mode = row[0].strip()
            if mode not in _MODES:
                raise DataFormatError(f"unknown mode tag {mode!r}", line=lineno)
            try:
                control, stress = float(row[1]), float(row[2])
            except ValueError as exc:
                raise DataFormatError(str(exc), line=lineno) from None
            rows[mode].append((control, stress))
    try:
        return Dataset(
            tension=np.array(rows["tension"]).reshape(-1, 2),
            compression=np.array(rows["compression"]).reshape(-1, 2),
            shear=np.array(rows["shear"]).reshape(-1, 2),
            provenance=os.path.basename(path),
        )
    except DomainError as exc:
        raise DataFormatError(f"invalid dataset: {exc}") from exc


def dataset_to_json(dataset):
    """JSON-ready dict mirroring the CSV fields plus normalization stats."""
    return {
        "provenance": dataset.provenance,
        "tension": dataset.tension.tolist(),
        "compression": dataset.compression.tolist(),
        "shear": dataset.shear.tolist(),
        "max_tension_stress": dataset.max_tension_stress,
        "min_compression_stress": dataset.min_compression_stress,
        "max_shear_stress": dataset.max_shear_stress,
    }


def write_json(dataset, path):
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            json.dump(dataset_to_json(dataset), fh, indent=2)
            fh.write("\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def r_squared(model_stresses, dataset):
    """Coefficient of determination per protocol.

    ``model_stresses`` maps protocol names to predicted stress arrays on the
    dataset's control grid. Protocols with fewer than two points or constant
    measured stress have no defined value and are reported as None.
    """
    out = {}
    for mode, _, measured in dataset.protocols():
        pred = np.asarray(model_stresses[mode], dtype=float)
        if pred.shape != measured.shape:
            raise DomainError(f"{mode}: model stresses do not match the data grid")
        ss_tot = float(np.sum((measured - measured.mean()) ** 2)) if measured.size else 0.0
        if measured.size < 2 or ss_tot == 0.0:
            out[mode] = None
            continue
        ss_res = float(np.sum((pred - measured) ** 2))
        out[mode] = 1.0 - ss_res / ss_tot
    for mode in _MODES:
        out.setdefault(mode, None)
    return out
