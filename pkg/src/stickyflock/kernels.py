"""Communication protocols and their odd antiderivatives.

A kernel is one of a closed set of families, each with closed-form
primitives::

    phi(r)      communication weight, even, nonincreasing in |r|
    Phi(r)      = int_0^r phi, odd and nondecreasing
    Psi(r)      = int_0^r Phi, even (used for Phi * rho over uniform pieces)

All evaluation functions accept scalars or numpy arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import special

__all__ = [
    "Family",
    "CommunicationKernel",
    "phi",
    "phi_primitive",
    "phi_second_primitive",
    "phi_primitive_inverse",
    "sup_primitive",
    "flocking_threshold_holds",
]


class Family(str, Enum):
    ZERO = "zero"
    CONSTANT = "constant"
    ALGEBRAIC_TAIL = "algebraic_tail"
    COMPACT_TENT = "compact_tent"
    WEAKLY_SINGULAR = "weakly_singular"


@dataclass(frozen=True)
class CommunicationKernel:
    """Immutable description of a communication protocol.

    Use the named constructors rather than filling fields by hand:
    ``zero()``, ``constant(c)``, ``algebraic_tail(beta)``,
    ``compact_tent(width, height)`` and ``weakly_singular(c_s, s)``.
    """

    family: Family
    c: float = 0.0
    beta: float = 0.0
    width: float = 0.0
    height: float = 0.0
    s: float = 0.0

    def __post_init__(self):
        fam = Family(self.family)
        object.__setattr__(self, "family", fam)
        if fam is Family.CONSTANT and not self.c >= 0:
            raise ValueError("constant kernel needs c >= 0")
        if fam is Family.ALGEBRAIC_TAIL and not self.beta > 0:
            raise ValueError("algebraic tail needs beta > 0")
        if fam is Family.COMPACT_TENT and not (self.width > 0 and self.height >= 0):
            raise ValueError("tent needs width > 0 and height >= 0")
        if fam is Family.WEAKLY_SINGULAR:
            if not 0 < self.s < 1:
                raise ValueError("weakly singular kernel needs s in (0, 1)")
            if not self.c > 0:
                raise ValueError("weakly singular kernel needs c_s > 0")

    @classmethod
    def zero(cls) -> "CommunicationKernel":
        return cls(Family.ZERO)

    @classmethod
    def constant(cls, c: float = 1.0) -> "CommunicationKernel":
        return cls(Family.CONSTANT, c=float(c))

    @classmethod
    def algebraic_tail(cls, beta: float) -> "CommunicationKernel":
        return cls(Family.ALGEBRAIC_TAIL, beta=float(beta))

    @classmethod
    def compact_tent(cls, width: float, height: float = 1.0) -> "CommunicationKernel":
        return cls(Family.COMPACT_TENT, width=float(width), height=float(height))

    @classmethod
    def weakly_singular(cls, c_s: float = 1.0, s: float = 0.5) -> "CommunicationKernel":
        return cls(Family.WEAKLY_SINGULAR, c=float(c_s), s=float(s))

    # -- configuration round trip ------------------------------------------

    @classmethod
    def from_config(cls, cfg: dict) -> "CommunicationKernel":
        """Build a kernel from ``{"family": ..., <params>}``."""
        if not isinstance(cfg, dict) or "family" not in cfg:
            raise ValueError("kernel spec must be an object with a 'family' key")
        try:
            fam = Family(cfg["family"])
        except ValueError:
            raise ValueError(f"unknown kernel family {cfg['family']!r}") from None
        if fam is Family.ZERO:
            return cls.zero()
        if fam is Family.CONSTANT:
            return cls.constant(cfg.get("c", 1.0))
        if fam is Family.ALGEBRAIC_TAIL:
            return cls.algebraic_tail(cfg["beta"])
        if fam is Family.COMPACT_TENT:
            return cls.compact_tent(cfg["width"], cfg.get("height", 1.0))
        return cls.weakly_singular(cfg.get("c_s", 1.0), cfg["s"])

    def to_config(self) -> dict:
        fam = self.family
        if fam is Family.ZERO:
            return {"family": fam.value}
        if fam is Family.CONSTANT:
            return {"family": fam.value, "c": self.c}
        if fam is Family.ALGEBRAIC_TAIL:
            return {"family": fam.value, "beta": self.beta}
        if fam is Family.COMPACT_TENT:
            return {"family": fam.value, "width": self.width, "height": self.height}
        return {"family": fam.value, "c_s": self.c, "s": self.s}

    # -- properties ----------------------------------------------------------

    @property
    def bounded(self) -> bool:
        return self.family is not Family.WEAKLY_SINGULAR

    @property
    def fat_tail(self) -> bool:
        """True when int_1^inf phi diverges."""
        fam = self.family
        if fam is Family.CONSTANT:
            return self.c > 0
        if fam is Family.ALGEBRAIC_TAIL:
            return self.beta <= 1
        return fam is Family.WEAKLY_SINGULAR

    @property
    def lipschitz_on_positive(self) -> float:
        fam = self.family
        if fam in (Family.ZERO, Family.CONSTANT):
            return 0.0
        if fam is Family.ALGEBRAIC_TAIL:
            b = self.beta
            r = 1.0 / math.sqrt(b + 1.0)
            return b * r * (1.0 + r * r) ** (-(b + 2.0) / 2.0)
        if fam is Family.COMPACT_TENT:
            return self.height / self.width
        return math.inf

    @property
    def holder_exponent(self) -> float:
        """Exponent s with phi(r) <= c |r|^(s-1) near 0 (1 for bounded kernels)."""
        return self.s if self.family is Family.WEAKLY_SINGULAR else 1.0

    def phi(self, r):
        return phi(self, r)

    def Phi(self, r):
        return phi_primitive(self, r)

    def Psi(self, r):
        return phi_second_primitive(self, r)

    def Phi_inv(self, y):
        return phi_primitive_inverse(self, y)

    @property
    def sup_Phi(self) -> float:
        return sup_primitive(self)


def _out(value, like):
    if np.ndim(like) == 0:
        return float(value)
    return value


def phi(kernel: CommunicationKernel, r):
    """Communication weight phi(|r|); phi(0) means phi(0+) for bounded families."""
    a = np.abs(np.asarray(r, dtype=float))
    fam = kernel.family
    if fam is Family.ZERO:
        val = np.zeros_like(a)
    elif fam is Family.CONSTANT:
        val = np.full_like(a, kernel.c)
    elif fam is Family.ALGEBRAIC_TAIL:
        val = (1.0 + a * a) ** (-kernel.beta / 2.0)
    elif fam is Family.COMPACT_TENT:
        val = kernel.height * np.maximum(0.0, 1.0 - a / kernel.width)
    else:
        if np.any(a == 0):
            raise ValueError("weakly singular phi is undefined at r = 0; use Phi")
        val = kernel.c * a ** (kernel.s - 1.0)
    return _out(val, r)


def _algebraic_Phi_pos(beta: float, a: np.ndarray) -> np.ndarray:
    if beta == 1.0:
        return np.arcsinh(a)
    if beta == 2.0:
        return np.arctan(a)
    if beta == 3.0:
        return a / np.sqrt(1.0 + a * a)
    return a * special.hyp2f1(0.5, beta / 2.0, 1.5, -a * a)


def phi_primitive(kernel: CommunicationKernel, r):
    """Odd antiderivative Phi(r) = int_0^r phi."""
    r_arr = np.asarray(r, dtype=float)
    a = np.abs(r_arr)
    fam = kernel.family
    if fam is Family.ZERO:
        pos = np.zeros_like(a)
    elif fam is Family.CONSTANT:
        pos = kernel.c * a
    elif fam is Family.ALGEBRAIC_TAIL:
        pos = _algebraic_Phi_pos(kernel.beta, a)
    elif fam is Family.COMPACT_TENT:
        w, h = kernel.width, kernel.height
        b = np.minimum(a, w)
        pos = h * (b - b * b / (2.0 * w))
    else:
        pos = (kernel.c / kernel.s) * a ** kernel.s
    return _out(np.sign(r_arr) * pos, r)


def _first_moment(kernel: CommunicationKernel, a: np.ndarray) -> np.ndarray:
    """G(a) = int_0^a y phi(y) dy for a >= 0."""
    fam = kernel.family
    if fam is Family.ZERO:
        return np.zeros_like(a)
    if fam is Family.CONSTANT:
        return 0.5 * kernel.c * a * a
    if fam is Family.ALGEBRAIC_TAIL:
        b = kernel.beta
        if b == 2.0:
            return 0.5 * np.log1p(a * a)
        return ((1.0 + a * a) ** (1.0 - b / 2.0) - 1.0) / (2.0 - b)
    if fam is Family.COMPACT_TENT:
        w, h = kernel.width, kernel.height
        b = np.minimum(a, w)
        return h * (b * b / 2.0 - b ** 3 / (3.0 * w))
    return kernel.c * a ** (kernel.s + 1.0) / (kernel.s + 1.0)


def phi_second_primitive(kernel: CommunicationKernel, r):
    """Even function Psi(r) = int_0^r Phi, via Psi(r) = |r| Phi(|r|) - int_0^|r| y phi(y) dy."""
    a = np.abs(np.asarray(r, dtype=float))
    val = a * np.asarray(phi_primitive(kernel, a)) - _first_moment(kernel, a)
    return _out(val, r)


def sup_primitive(kernel: CommunicationKernel) -> float:
    """sup_{R > 0} Phi(R), possibly +inf."""
    fam = kernel.family
    if fam is Family.ZERO:
        return 0.0
    if fam is Family.CONSTANT:
        return math.inf if kernel.c > 0 else 0.0
    if fam is Family.ALGEBRAIC_TAIL:
        b = kernel.beta
        if b <= 1.0:
            return math.inf
        return 0.5 * math.sqrt(math.pi) * math.gamma((b - 1.0) / 2.0) / math.gamma(b / 2.0)
    if fam is Family.COMPACT_TENT:
        return 0.5 * kernel.width * kernel.height
    return math.inf


def _bisect_inverse(kernel: CommunicationKernel, y: float) -> float:
    lo, hi = 0.0, 1.0
    while phi_primitive(kernel, hi) < y:
        lo, hi = hi, 2.0 * hi
        if hi > 1e300:
            return math.inf
    while hi - lo > 1e-12 * hi:
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi:  # interval at float resolution
            break
        if phi_primitive(kernel, mid) >= y:
            hi = mid
        else:
            lo = mid
    return hi


def phi_primitive_inverse(kernel: CommunicationKernel, y: float) -> float:
    """inf{R >= 0 : Phi(R) >= y}; +inf when the level is never reached."""
    y = float(y)
    if y < 0:
        raise ValueError("Phi^{-1} is only defined for y >= 0")
    if y == 0:
        return 0.0
    sup = sup_primitive(kernel)
    if y > sup:
        return math.inf
    fam = kernel.family
    if fam is Family.CONSTANT:
        return y / kernel.c
    if fam is Family.WEAKLY_SINGULAR:
        return (kernel.s * y / kernel.c) ** (1.0 / kernel.s)
    if fam is Family.COMPACT_TENT:
        w, h = kernel.width, kernel.height
        if y >= sup:
            return w
        return w * (1.0 - math.sqrt(max(0.0, 1.0 - 2.0 * y / (h * w))))
    # algebraic tail
    if y >= sup:
        return math.inf
    b = kernel.beta
    if b == 1.0:
        return math.sinh(y)
    if b == 2.0:
        return math.tan(y)
    if b == 3.0:
        return y / math.sqrt(1.0 - y * y)
    return _bisect_inverse(kernel, y)


def flocking_threshold_holds(kernel: CommunicationKernel, D0: float, V0: float) -> bool:
    """sup Phi > Phi(D0) + V0."""
    if D0 < 0 or V0 < 0:
        raise ValueError("D0 and V0 must be nonnegative")
    return sup_primitive(kernel) > phi_primitive(kernel, D0) + V0
