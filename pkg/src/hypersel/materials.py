"""Two eight-term incompressible hyperelastic model families.

Both families write the free energy as a sum of eight independent terms whose
amplitudes carry units of kPa:

* ``INVARIANT8`` builds terms from the invariants I1 and I2: linear,
  quadratic, and exponential functions of (I1 - 3) and (I2 - 3). The four
  exponential terms own an extra dimensionless inner exponent, for twelve
  free parameters in total.
* ``STRETCH8`` is an Ogden-type series in the principal stretches with the
  fixed exponent ladder [+2, +4, +6, +8, -2, -4, -6, -8], so stresses are
  linear in the eight amplitudes.
* ``MOONEY_RIVLIN`` is the classical two-term special case shared by both
  families (terms 1 and 5).

Stresses are the closed-form nominal (Piola) components on the incompressible
uniaxial path, P11(lambda), and the simple-shear path, P12(gamma), with the
pressure already eliminated through the zero normal-stress condition. Every
stress decomposes additively into per-term contributions, and analytic
derivatives with respect to all free weights are provided.
"""

from dataclasses import dataclass, field
from enum import Enum
from itertools import combinations

import numpy as np

from .errors import DomainError, TermOverflowError

# exp() arguments beyond this raise TermOverflowError instead of returning inf
EXP_ARG_MAX = 700.0

# Fixed exponent ladder of the principal-stretch family.
STRETCH_EXPONENTS = np.array([2.0, 4.0, 6.0, 8.0, -2.0, -4.0, -6.0, -8.0])

# 0-based indices of the exponential terms (terms 2, 4, 6, 8) and the slot
# each one's inner exponent occupies in the 4-vector of exponents.
EXP_TERM_INDICES = (1, 3, 5, 7)

TERM_LABELS_INVARIANT8 = (
    "I1-3",
    "exp(I1-3)",
    "(I1-3)^2",
    "exp((I1-3)^2)",
    "I2-3",
    "exp(I2-3)",
    "(I2-3)^2",
    "exp((I2-3)^2)",
)
TERM_LABELS_STRETCH8 = (
    "lam^+2",
    "lam^+4",
    "lam^+6",
    "lam^+8",
    "lam^-2",
    "lam^-4",
    "lam^-6",
    "lam^-8",
)


class ModelFamily(Enum):
    INVARIANT8 = "inv8"
    STRETCH8 = "str8"
    MOONEY_RIVLIN = "mr"

    @classmethod
    def parse(cls, name):
        for fam in cls:
            if name in (fam.value, fam.name.lower()):
                return fam
        raise DomainError(f"unknown model family {name!r}")


def term_labels(family):
    if family is ModelFamily.STRETCH8:
        return TERM_LABELS_STRETCH8
    return TERM_LABELS_INVARIANT8


@dataclass(frozen=True)
class TermMask:
    """Which of the eight terms are allowed to carry a non-zero amplitude."""

    active: tuple

    def __post_init__(self):
        if len(self.active) != 8:
            raise DomainError("a term mask needs exactly 8 flags")
        object.__setattr__(self, "active", tuple(bool(a) for a in self.active))

    @classmethod
    def from_terms(cls, terms):
        """Build a mask from 1-based term numbers, e.g. (1, 5) for Mooney-Rivlin."""
        terms = set(int(t) for t in terms)
        if not terms <= set(range(1, 9)):
            raise DomainError(f"term numbers must lie in 1..8, got {sorted(terms)}")
        return cls(tuple(t + 1 in terms for t in range(8)))

    @classmethod
    def all_active(cls):
        return cls((True,) * 8)

    @property
    def indices(self):
        return tuple(i for i, a in enumerate(self.active) if a)

    @property
    def terms(self):
        return tuple(i + 1 for i in self.indices)

    @property
    def count(self):
        return sum(self.active)

    @property
    def exponential_count(self):
        return sum(1 for i in self.indices if i in EXP_TERM_INDICES)


def masks_of_cardinality(k):
    """All term masks with exactly k active terms, in lexicographic order."""
    return [TermMask.from_terms(c) for c in combinations(range(1, 9), k)]


@dataclass(frozen=True)
class ParamVector:
    """Model weights for one family.

    ``amplitudes`` always has length 8. For INVARIANT8 the entries are the
    merged products of first- and second-layer weights for the non-exponential
    terms and the outer weights of the exponential terms; ``exponents`` holds
    the four inner exponents of terms 2, 4, 6, and 8. STRETCH8 and
    MOONEY_RIVLIN have no free exponents (``exponents`` is None), and a
    MOONEY_RIVLIN vector may only populate terms 1 and 5.
    """

    family: ModelFamily
    amplitudes: np.ndarray
    exponents: np.ndarray = field(default=None)

    def __post_init__(self):
        amp = np.asarray(self.amplitudes, dtype=float).copy()
        if amp.shape != (8,):
            raise DomainError("amplitudes must be an 8-vector")
        if not np.all(np.isfinite(amp)) or np.any(amp < 0.0):
            raise DomainError("amplitudes must be finite and non-negative")
        object.__setattr__(self, "amplitudes", amp)
        if self.family is ModelFamily.INVARIANT8:
            exp = np.asarray(
                self.exponents if self.exponents is not None else np.zeros(4),
                dtype=float,
            ).copy()
            if exp.shape != (4,):
                raise DomainError("INVARIANT8 needs a 4-vector of inner exponents")
            if not np.all(np.isfinite(exp)) or np.any(exp < 0.0):
                raise DomainError("inner exponents must be finite and non-negative")
            object.__setattr__(self, "exponents", exp)
        else:
            if self.exponents is not None:
                raise DomainError(f"{self.family.value} has no free exponents")
            if self.family is ModelFamily.MOONEY_RIVLIN:
                off = [k for k in range(8) if k not in (0, 4) and amp[k] != 0.0]
                if off:
                    raise DomainError(
                        "Mooney-Rivlin only uses terms 1 and 5; "
                        f"got non-zero amplitude in terms {[k + 1 for k in off]}"
                    )

    @classmethod
    def mooney_rivlin(cls, w1, w5):
        amp = np.zeros(8)
        amp[0], amp[4] = w1, w5
        return cls(ModelFamily.MOONEY_RIVLIN, amp)

    @classmethod
    def invariant(cls, amplitudes, exponents):
        return cls(ModelFamily.INVARIANT8, np.asarray(amplitudes, dtype=float),
                   np.asarray(exponents, dtype=float))

    @classmethod
    def stretch(cls, weights):
        return cls(ModelFamily.STRETCH8, np.asarray(weights, dtype=float))

    def replace(self, amplitudes=None, exponents=None):
        amp = self.amplitudes if amplitudes is None else amplitudes
        if self.family is ModelFamily.INVARIANT8:
            exp = self.exponents if exponents is None else exponents
        else:
            exp = None
        return ParamVector(self.family, np.asarray(amp, dtype=float), exp)

    def masked(self, mask):
        amp = self.amplitudes.copy()
        amp[[not a for a in mask.active]] = 0.0
        return self.replace(amplitudes=amp)


def _check_exp_args(args, term):
    hi = float(np.max(args)) if np.size(args) else 0.0
    if hi > EXP_ARG_MAX:
        raise TermOverflowError(term, hi)


def _invariant_unit_responses(exponents, x, y):
    """Per-term energy-derivative factors of the invariant family.

    Returns g1 (4, n) for the I1 terms and g2 (4, n) for the I2 terms, where
    the k-th row is d(term_k)/dI at unit amplitude.
    """
    b2, b4, b6, b8 = exponents
    for b, z, term in ((b2, x, 2), (b4, x * x, 4), (b6, y, 6), (b8, y * y, 8)):
        _check_exp_args(b * z, term)
    g1 = np.stack([
        np.ones_like(x),
        b2 * np.exp(b2 * x),
        2.0 * x,
        2.0 * x * b4 * np.exp(b4 * x * x),
    ])
    g2 = np.stack([
        np.ones_like(y),
        b6 * np.exp(b6 * y),
        2.0 * y,
        2.0 * y * b8 * np.exp(b8 * y * y),
    ])
    return g1, g2


def _invariant_unit_response_dexp(exponents, x, y):
    """d g / d exponent for the four exponential terms, rows in term order 2,4,6,8."""
    b2, b4, b6, b8 = exponents
    return np.stack([
        np.exp(b2 * x) * (1.0 + b2 * x),
        2.0 * x * np.exp(b4 * x * x) * (1.0 + b4 * x * x),
        np.exp(b6 * y) * (1.0 + b6 * y),
        2.0 * y * np.exp(b8 * y * y) * (1.0 + b8 * y * y),
    ])


def _uniaxial_prefactors(lam):
    lam = np.asarray(lam, dtype=float)
    if np.any(~np.isfinite(lam)) or np.any(lam <= 0.0):
        raise DomainError("uniaxial stretches must be finite and positive")
    x = lam * lam + 2.0 / lam - 3.0
    y = 2.0 * lam + 1.0 / (lam * lam) - 3.0
    pref = 2.0 * (lam - lam ** -2)
    return lam, x, y, pref


def unit_stress_uniaxial(family, lam, exponents=None):
    """Per-term uniaxial stress at unit amplitude, shape (8, n)."""
    lam, x, y, pref = _uniaxial_prefactors(lam)
    if family is ModelFamily.STRETCH8:
        a = STRETCH_EXPONENTS[:, None]
        return a / lam * (lam ** a - lam ** (-a / 2.0))
    if family is ModelFamily.MOONEY_RIVLIN:
        units = np.zeros((8, lam.size))
        units[0] = pref
        units[4] = pref / lam
        return units
    g1, g2 = _invariant_unit_responses(exponents, x, y)
    return np.concatenate([pref * g1, (pref / lam) * g2])


def unit_stress_shear(family, gamma, exponents=None):
    """Per-term shear stress at unit amplitude, shape (8, n)."""
    gamma = np.asarray(gamma, dtype=float)
    if np.any(~np.isfinite(gamma)):
        raise DomainError("shear amounts must be finite")
    if family is ModelFamily.STRETCH8:
        lam = 0.5 * (gamma + np.sqrt(4.0 + gamma * gamma))
        a = STRETCH_EXPONENTS[:, None]
        return a * (lam ** (a + 1.0) - lam ** (1.0 - a)) / (1.0 + lam * lam)
    if family is ModelFamily.MOONEY_RIVLIN:
        units = np.zeros((8, gamma.size))
        units[0] = 2.0 * gamma
        units[4] = 2.0 * gamma
        return units
    z = gamma * gamma
    g1, g2 = _invariant_unit_responses(exponents, z, z)
    return 2.0 * gamma * np.concatenate([g1, g2])


def unit_stress_uniaxial_dexp(lam, exponents):
    """d(unit uniaxial stress)/d(inner exponent) for terms 2,4,6,8, shape (4, n)."""
    lam, x, y, pref = _uniaxial_prefactors(lam)
    dg = _invariant_unit_response_dexp(exponents, x, y)
    out = np.empty_like(dg)
    out[0] = pref * dg[0]
    out[1] = pref * dg[1]
    out[2] = (pref / lam) * dg[2]
    out[3] = (pref / lam) * dg[3]
    return out


def unit_stress_shear_dexp(gamma, exponents):
    gamma = np.asarray(gamma, dtype=float)
    z = gamma * gamma
    dg = _invariant_unit_response_dexp(exponents, z, z)
    return 2.0 * gamma * dg


def _unit_energy_terms(params, state):
    fam = params.family
    if fam is ModelFamily.STRETCH8:
        lams = np.array([state.lambda1, state.lambda2, state.lambda3])
        return np.sum(lams[None, :] ** STRETCH_EXPONENTS[:, None], axis=1) - 3.0
    x = state.I1 - 3.0
    y = state.I2 - 3.0
    if fam is ModelFamily.MOONEY_RIVLIN:
        units = np.zeros(8)
        units[0], units[4] = x, y
        return units
    b2, b4, b6, b8 = params.exponents
    for b, z, term in ((b2, x, 2), (b4, x * x, 4), (b6, y, 6), (b8, y * y, 8)):
        _check_exp_args(np.asarray(b * z), term)
    return np.array([
        x,
        np.expm1(b2 * x),
        x * x,
        np.expm1(b4 * x * x),
        y,
        np.expm1(b6 * y),
        y * y,
        np.expm1(b8 * y * y),
    ])


def energy(params, state):
    """Free energy (kPa) of a model at one deformation state."""
    return float(params.amplitudes @ _unit_energy_terms(params, state))


def energy_terms(params, state):
    """Per-term free-energy contributions, shape (8,)."""
    return params.amplitudes * _unit_energy_terms(params, state)


def stress_uniaxial(params, lam):
    """Nominal uniaxial stress P11 at stretch ``lam``.

    Returns the total and the eight additive per-term contributions (kPa).
    """
    units = unit_stress_uniaxial(params.family, [lam], params.exponents)
    per_term = params.amplitudes * units[:, 0]
    return float(per_term.sum()), per_term


def stress_shear(params, gamma):
    """Nominal shear stress P12 at shear amount ``gamma``, plus per-term parts."""
    units = unit_stress_shear(params.family, [gamma], params.exponents)
    per_term = params.amplitudes * units[:, 0]
    return float(per_term.sum()), per_term


def stress_gradient(params, mode, control):
    """Analytic d(stress)/d(weights) at one load point.

    Returns ``(d_amp, d_exp)`` where ``d_amp`` has shape (8,) and ``d_exp``
    has shape (4,) (all zeros for families without free exponents).
    """
    from .kinematics import LoadMode

    if mode is LoadMode.SHEAR:
        units = unit_stress_shear(params.family, [control], params.exponents)
    else:
        units = unit_stress_uniaxial(params.family, [control], params.exponents)
    d_amp = units[:, 0]
    d_exp = np.zeros(4)
    if params.family is ModelFamily.INVARIANT8:
        if mode is LoadMode.SHEAR:
            dex = unit_stress_shear_dexp([control], params.exponents)
        else:
            dex = unit_stress_uniaxial_dexp([control], params.exponents)
        d_exp = params.amplitudes[list(EXP_TERM_INDICES)] * dex[:, 0]
    return d_amp, d_exp
