"""Data losses, the Lp penalty family, and analytic gradients.

The data loss accumulates, per loading protocol, the squared residuals
between model and measured stress. With max-stress normalization each
protocol's residuals are divided by the largest recorded stress magnitude of
that protocol before squaring, which makes the three contributions
dimensionless and comparable; without it the residuals stay in kPa.

The penalty is alpha * sum(|w_i / nu_i| ** p) over the eight term amplitudes
(inner exponents of the invariant family are never penalized). p = 0 counts
the amplitudes above the zero threshold instead.
"""

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import ConfigurationError, DomainError, TermOverflowError
from .materials import (
    EXP_ARG_MAX,
    ModelFamily,
    unit_stress_shear,
    unit_stress_uniaxial,
)


class Normalization(Enum):
    NONE = "none"
    MAX_STRESS = "max_stress"

    @classmethod
    def parse(cls, name):
        for norm in cls:
            if name in (norm.value, norm.name.lower()):
                return norm
        raise DomainError(f"unknown normalization {name!r}")


class Reduction(Enum):
    """How a protocol's squared residuals are accumulated.

    MEAN divides each protocol's sum of squares by its number of points and
    is the default everywhere. SUM leaves the plain sums; with equal point
    counts the two differ only by that count, but calibrated penalty
    parameters inherit the factor, so the choice must be explicit.
    """

    MEAN = "mean"
    SUM = "sum"

    @classmethod
    def parse(cls, name):
        for red in cls:
            if name == red.value:
                return red
        raise DomainError(f"unknown reduction {name!r}")


@dataclass(frozen=True)
class PenaltyConfig:
    """Lp penalty: power ``p``, strength ``alpha``, optional per-term divisors.

    ``tau_zero`` is the absolute threshold (applied after the optional
    normalization by ``weight_norms``) below which an amplitude counts as
    zero, both for the p = 0 penalty and for reported term counts.
    ``epsilon_smooth`` regularizes the gradient of |w|**p for p < 1.
    """

    p: float = 1.0
    alpha: float = 0.0
    weight_norms: np.ndarray = field(default=None)
    epsilon_smooth: float = 1e-8
    tau_zero: float = 1e-4

    def __post_init__(self):
        if self.p < 0.0 or not np.isfinite(self.p):
            raise ConfigurationError(f"penalty power must be >= 0, got {self.p}")
        if self.alpha < 0.0 or not np.isfinite(self.alpha):
            raise ConfigurationError(f"penalty parameter must be >= 0, got {self.alpha}")
        if self.weight_norms is not None:
            norms = np.asarray(self.weight_norms, dtype=float).copy()
            if norms.shape != (8,):
                raise ConfigurationError("weight_norms must be an 8-vector")
            if np.any(norms <= 0.0) or not np.all(np.isfinite(norms)):
                raise ConfigurationError("weight_norms must be positive and finite")
            object.__setattr__(self, "weight_norms", norms)

    @classmethod
    def none(cls):
        return cls(p=1.0, alpha=0.0)


@dataclass(frozen=True)
class LossBreakdown:
    data_tension: float
    data_compression: float
    data_shear: float
    penalty: float
    total: float

    @property
    def data_total(self):
        return self.data_tension + self.data_compression + self.data_shear


def _breakdown(dt, dc, ds, pen):
    dt, dc, ds, pen = float(dt), float(dc), float(ds), float(pen)
    return LossBreakdown(dt, dc, ds, pen, dt + dc + ds + pen)


class LossModel:
    """Evaluation context binding one family to one dataset.

    Precomputes the per-protocol control grids, measured stresses, and
    normalization divisors so that repeated loss/gradient evaluations during
    optimization stay cheap. For the families without free exponents the
    per-term stress matrices are fixed and cached outright.
    """

    def __init__(self, family, dataset, normalization=Normalization.MAX_STRESS,
                 reduction=Reduction.MEAN):
        self.family = family
        self.dataset = dataset
        self.normalization = normalization
        self.reduction = reduction
        self.protocols = []
        divisors = {
            "tension": dataset.max_tension_stress,
            "compression": dataset.min_compression_stress,
            "shear": dataset.max_shear_stress,
        }
        for mode, controls, stresses in dataset.protocols():
            if controls.size == 0:
                continue
            if normalization is Normalization.MAX_STRESS:
                div = divisors[mode]
                if div == 0.0:
                    raise ConfigurationError(
                        f"max-stress normalization needs a non-zero {mode} stress"
                    )
            else:
                div = 1.0
            self.protocols.append((mode, controls, stresses, float(div)))
        self._assemble()

    def _assemble(self):
        # Flatten all protocols into single arrays. Both load paths share the
        # structure P = P1 * (I1-side response) + P2 * (I2-side response):
        # uniaxial has P1 = 2(lam - lam^-2), P2 = P1/lam, while shear has
        # P1 = P2 = 2*gamma with x = y = gamma^2.
        xs, ys, p1s, p2s, meas, divs, slices = [], [], [], [], [], [], {}
        start = 0
        for mode, controls, stresses, div in self.protocols:
            if mode == "shear":
                z = controls * controls
                pref = 2.0 * controls
                xs.append(z)
                ys.append(z)
                p1s.append(pref)
                p2s.append(pref)
            else:
                x = controls ** 2 + 2.0 / controls - 3.0
                y = 2.0 * controls + controls ** -2 - 3.0
                pref = 2.0 * (controls - controls ** -2)
                xs.append(x)
                ys.append(y)
                p1s.append(pref)
                p2s.append(pref / controls)
            meas.append(stresses)
            # the mean reduction folds 1/sqrt(n) into the residual weights
            scale = div if self.reduction is Reduction.SUM else div * np.sqrt(controls.size)
            divs.append(np.full(controls.size, scale))
            slices[mode] = slice(start, start + controls.size)
            start += controls.size
        if start == 0:
            raise ConfigurationError("dataset has no points")
        self._x = np.concatenate(xs)
        self._y = np.concatenate(ys)
        self._p1 = np.concatenate(p1s)
        self._p2 = np.concatenate(p2s)
        self._meas = np.concatenate(meas)
        self._div = np.concatenate(divs)
        self._slices = slices
        self._x2 = self._x * self._x
        self._y2 = self._y * self._y
        # feature and prefactor of each exponential slot (terms 2, 4, 6, 8):
        # unit stress = pref * b * exp(b * z), d/db = pref * exp(b*z) * (1 + b*z)
        self._exp_feat = (self._x, self._x2, self._y, self._y2)
        self._exp_pref = (self._p1, self._p1 * 2.0 * self._x,
                          self._p2, self._p2 * 2.0 * self._y)
        self._arg_scale = tuple(float(z.max()) for z in self._exp_feat)
        if self.family is ModelFamily.INVARIANT8:
            self._units = np.zeros((8, start))
            self._units[0] = self._p1
            self._units[2] = self._p1 * 2.0 * self._x
            self._units[4] = self._p2
            self._units[6] = self._p2 * 2.0 * self._y
        else:
            blocks = []
            for mode, controls, _, _ in self.protocols:
                if mode == "shear":
                    blocks.append(unit_stress_shear(self.family, controls, None))
                else:
                    blocks.append(unit_stress_uniaxial(self.family, controls, None))
            self._units = np.concatenate(blocks, axis=1)

    def _unit_matrix(self, exponents, exp_slots=(0, 1, 2, 3)):
        """Per-term unit stresses at every data point, shape (8, n).

        For the invariant family only the exponential rows named by
        ``exp_slots`` (0..3 for terms 2, 4, 6, 8) are refreshed; rows of
        masked-off terms keep whatever they held, which is safe because
        their amplitudes are pinned at zero.
        """
        if self.family is not ModelFamily.INVARIANT8:
            return self._units
        u = self._units
        for s in exp_slots:
            b = exponents[s]
            if b * self._arg_scale[s] > EXP_ARG_MAX:
                raise TermOverflowError(2 * s + 2, b * self._arg_scale[s])
            u[2 * s + 1] = self._exp_pref[s] * (b * np.exp(b * self._exp_feat[s]))
        return u

    def raw_loss_and_gradient(self, amplitudes, exponents, config,
                              exp_slots=(0, 1, 2, 3)):
        """Hot-path evaluation on bare arrays: ``(total, d_amp, d_exp)``.

        Skips the per-protocol breakdown; used by the optimizer inner loop.
        """
        units = self._unit_matrix(exponents, exp_slots)
        r = (amplitudes @ units - self._meas) / self._div
        total = float(r @ r)
        rw = 2.0 * r / self._div
        d_amp = units @ rw + _penalty_gradient_raw(amplitudes, config)
        d_exp = np.zeros(4)
        if self.family is ModelFamily.INVARIANT8:
            for s in exp_slots:
                a = amplitudes[2 * s + 1]
                if a == 0.0:
                    continue
                b, z = exponents[s], self._exp_feat[s]
                d_exp[s] = a * ((self._exp_pref[s] * (np.exp(b * z) * (1.0 + b * z))) @ rw)
        total += _penalty_raw(amplitudes, config)
        return total, d_amp, d_exp

    def _split(self, r2_pointwise):
        parts = {"tension": 0.0, "compression": 0.0, "shear": 0.0}
        for mode, sl in self._slices.items():
            parts[mode] = float(r2_pointwise[sl].sum())
        return parts

    def term_stresses(self, params):
        """Per-term model stresses on the data grid: {mode: (8, n) array}."""
        units = self._unit_matrix(params.exponents)
        per = params.amplitudes[:, None] * units
        return {mode: per[:, sl].copy() for mode, sl in self._slices.items()}

    def stresses(self, params):
        """Total model stresses on the data grid: {mode: (n,) array}."""
        units = self._unit_matrix(params.exponents)
        p = params.amplitudes @ units
        return {mode: p[sl].copy() for mode, sl in self._slices.items()}

    def data_loss(self, params):
        units = self._unit_matrix(params.exponents)
        r = (params.amplitudes @ units - self._meas) / self._div
        parts = self._split(r * r)
        return _breakdown(parts["tension"], parts["compression"], parts["shear"], 0.0)

    def loss_and_gradient(self, params, config):
        """Total loss with analytic gradients.

        Returns ``(breakdown, d_amp, d_exp)``; the gradient of the p = 0
        penalty is zero (its discrete part is handled by enumeration, not
        descent) and for 0 < p < 1 the amplitude gradient uses the
        epsilon-smoothed |w|.
        """
        units = self._unit_matrix(params.exponents)
        r = (params.amplitudes @ units - self._meas) / self._div
        parts = self._split(r * r)
        rw = 2.0 * r / self._div
        d_amp = units @ rw + penalty_gradient(params, config)
        d_exp = np.zeros(4)
        if self.family is ModelFamily.INVARIANT8:
            for s in range(4):
                a = params.amplitudes[2 * s + 1]
                b, z = params.exponents[s], self._exp_feat[s]
                d_exp[s] = a * ((self._exp_pref[s]
                                 * (np.exp(b * z) * (1.0 + b * z))) @ rw)
        pen = penalty(params, config)
        return (
            _breakdown(parts["tension"], parts["compression"], parts["shear"], pen),
            d_amp,
            d_exp,
        )

    def total_loss(self, params, config):
        base = self.data_loss(params)
        pen = penalty(params, config)
        return _breakdown(base.data_tension, base.data_compression, base.data_shear, pen)


def _penalty_raw(amplitudes, config):
    if config.alpha == 0.0:
        return 0.0
    z = np.abs(amplitudes)
    if config.weight_norms is not None:
        z = z / config.weight_norms
    if config.p == 0.0:
        return config.alpha * float(np.count_nonzero(z > config.tau_zero))
    return config.alpha * float(np.sum(z ** config.p))


def _penalty_gradient_raw(amplitudes, config):
    if config.alpha == 0.0 or config.p == 0.0:
        return 0.0
    z = np.abs(amplitudes)
    nu = config.weight_norms
    if nu is not None:
        z = z / nu
    p = config.p
    if p >= 1.0:
        base = z ** (p - 1.0) if p != 1.0 else np.ones(8)
    else:
        base = (z + config.epsilon_smooth) ** (p - 1.0)
    g = config.alpha * p * base
    return g / nu if nu is not None else g


def penalty(params, config):
    """alpha * ||theta||_p^p over the (optionally normalized) amplitudes."""
    return _penalty_raw(params.amplitudes, config)


def penalty_gradient(params, config):
    """d(penalty)/d(amplitudes) on the non-negative orthant.

    At w = 0 the right-sided derivative is used, so that with projection a
    weight parked at zero stays there unless the data gradient beats the
    penalty's pull.
    """
    g = _penalty_gradient_raw(params.amplitudes, config)
    return g if isinstance(g, np.ndarray) else np.zeros(8)


def _normalized_amplitudes(params, config):
    w = np.abs(params.amplitudes)
    if config.weight_norms is not None:
        return w / config.weight_norms
    return w


def data_loss(params, dataset, normalization=Normalization.MAX_STRESS,
              reduction=Reduction.MEAN):
    """Per-protocol mean (or summed) squared stress residuals."""
    return LossModel(params.family, dataset, normalization, reduction).data_loss(params)


def total_loss(params, dataset, normalization=Normalization.MAX_STRESS,
               config=None, reduction=Reduction.MEAN):
    if config is None:
        config = PenaltyConfig.none()
    return LossModel(params.family, dataset, normalization,
                     reduction).total_loss(params, config)


def loss_gradient(params, dataset, normalization=Normalization.MAX_STRESS,
                  config=None, reduction=Reduction.MEAN):
    """Analytic gradient of the total loss: ``(d_amp, d_exp)``."""
    if config is None:
        config = PenaltyConfig.none()
    model = LossModel(params.family, dataset, normalization, reduction)
    _, d_amp, d_exp = model.loss_and_gradient(params, config)
    return d_amp, d_exp


def count_active(params, config=None):
    """Number of amplitudes above the zero threshold."""
    if config is None:
        config = PenaltyConfig.none()
    return int(np.count_nonzero(_normalized_amplitudes(params, config) > config.tau_zero))


def check_gradient(params, dataset, normalization=Normalization.MAX_STRESS,
                   config=None, step=1e-6, reduction=Reduction.MEAN):
    """Worst relative error of the analytic gradient vs. central differences.

    Only meaningful at interior points (all perturbed weights stay positive).
    """
    if config is None:
        config = PenaltyConfig.none()
    model = LossModel(params.family, dataset, normalization, reduction)
    _, d_amp, d_exp = model.loss_and_gradient(params, config)

    def central(make):
        hi = model.total_loss(make(+step), config).total
        lo = model.total_loss(make(-step), config).total
        return (hi - lo) / (2.0 * step)

    slots = (0, 4) if params.family is ModelFamily.MOONEY_RIVLIN else range(8)
    worst = 0.0
    for k in slots:
        if params.amplitudes[k] < step:
            continue
        def bump_amp(h, k=k):
            amp = params.amplitudes.copy()
            amp[k] += h
            return params.replace(amplitudes=amp)
        fd = central(bump_amp)
        denom = max(abs(fd), abs(d_amp[k]), 1e-12)
        worst = max(worst, abs(fd - d_amp[k]) / denom)
    if params.family is ModelFamily.INVARIANT8:
        for j in range(4):
            def bump_exp(h, j=j):
                exp = params.exponents.copy()
                exp[j] += h
                return params.replace(exponents=exp)
            fd = central(bump_exp)
            denom = max(abs(fd), abs(d_exp[j]), 1e-12)
            worst = max(worst, abs(fd - d_exp[j]) / denom)
    return worst
