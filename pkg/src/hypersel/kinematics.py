"""Kinematics of incompressible uniaxial and simple-shear load paths.

Scalar load controls (a stretch ``lambda`` or a shear amount ``gamma``) map to
full principal-stretch triples and the isotropic strain invariants. Volume is
preserved exactly, so I3 = 1 by construction.
"""

import math
from dataclasses import dataclass
from enum import Enum

from .errors import DomainError


class LoadMode(Enum):
    TENSION = "tension"
    COMPRESSION = "compression"
    SHEAR = "shear"


@dataclass(frozen=True)
class DeformationState:
    """Principal stretches and invariants at one load point."""

    lambda1: float
    lambda2: float
    lambda3: float
    I1: float
    I2: float
    I3: float
    mode: LoadMode
    control: float


def uniaxial_state(lam):
    """Incompressible uniaxial state at stretch ``lam``.

    The lateral stretches are lam**(-1/2), giving
    I1 = lam**2 + 2/lam and I2 = 2*lam + 1/lam**2.
    lam = 1 is classified as tension so that a load point shared by both
    uniaxial protocols is only counted once downstream.
    """
    lam = float(lam)
    if not math.isfinite(lam) or lam <= 0.0:
        raise DomainError(f"uniaxial stretch must be finite and positive, got {lam}")
    lat = lam ** -0.5
    mode = LoadMode.TENSION if lam >= 1.0 else LoadMode.COMPRESSION
    return DeformationState(
        lambda1=lam,
        lambda2=lat,
        lambda3=lat,
        I1=lam * lam + 2.0 / lam,
        I2=2.0 * lam + 1.0 / (lam * lam),
        I3=1.0,
        mode=mode,
        control=lam,
    )


def shear_state(gamma):
    """Simple-shear state at shear amount ``gamma``.

    In-plane stretches are (+-gamma + sqrt(4 + gamma**2)) / 2 with
    lambda3 = 1, and I1 = I2 = 3 + gamma**2.
    """
    gamma = float(gamma)
    if not math.isfinite(gamma):
        raise DomainError(f"shear amount must be finite, got {gamma}")
    root = math.sqrt(4.0 + gamma * gamma)
    return DeformationState(
        lambda1=0.5 * (gamma + root),
        lambda2=0.5 * (-gamma + root),
        lambda3=1.0,
        I1=3.0 + gamma * gamma,
        I2=3.0 + gamma * gamma,
        I3=1.0,
        mode=LoadMode.SHEAR,
        control=gamma,
    )


def invariants_from_stretches(l1, l2, l3):
    """Generic incompressible invariants I1 = sum(li**2), I2 = sum(li**-2).

    Assumes l1*l2*l3 = 1; I3 is returned as the squared volume ratio so the
    assumption can be checked by the caller.
    """
    if min(l1, l2, l3) <= 0.0:
        raise DomainError("principal stretches must be positive")
    i1 = l1 * l1 + l2 * l2 + l3 * l3
    i2 = l1 ** -2 + l2 ** -2 + l3 ** -2
    i3 = (l1 * l2 * l3) ** 2
    return i1, i2, i3
