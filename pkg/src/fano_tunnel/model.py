"""Domain types shared by all modules.

Energies and times are dimensionless with hbar = 1.  The two-level system is
described in the basis |+>, |-> of the sigma_3 eigenvectors; the localized
states are |l> = (|+> + |->)/sqrt(2) and |r> = (|+> - |->)/sqrt(2).  Only the
independent entries rho_pp = <+|rho|+> and rho_pm = <+|rho|-> of the reduced
density matrix are stored; unit trace and hermiticity are structural.
"""

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

TOL_POS = 1e-10  # slack allowed on det(rho) >= 0


class Topology(Enum):
    """Whether both couplings address the same continuum or orthogonal ones."""

    SINGLE_CONTINUUM = "single"
    ORTHOGONAL_CONTINUA = "orthogonal"


# ---------------------------------------------------------------------------
# coupling functions g(eta)

class Coupling:
    """Energy-dependent coupling amplitude of a discrete level to the band."""

    def __call__(self, eta):
        return np.sqrt(self.squared(eta))

    def squared(self, eta):
        raise NotImplementedError

    def is_zero(self):
        return False


@dataclass(frozen=True)
class ConstantCoupling(Coupling):
    value: float

    def __post_init__(self):
        if self.value < 0:
            raise ValueError("constant coupling amplitude must be >= 0")

    def squared(self, eta):
        return np.full_like(np.asarray(eta, dtype=float), self.value ** 2)

    def __call__(self, eta):
        return np.full_like(np.asarray(eta, dtype=float), self.value)

    def is_zero(self):
        return self.value == 0.0


@dataclass(frozen=True)
class PowerLawCoupling(Coupling):
    """g^2(eta) = prefactor * eta**exponent (defined for eta >= 0)."""

    prefactor: float
    exponent: float

    def __post_init__(self):
        if self.prefactor < 0:
            raise ValueError("power-law prefactor must be >= 0")
        if self.exponent < 0:
            raise ValueError("power-law exponent must be >= 0")

    def squared(self, eta):
        eta = np.asarray(eta, dtype=float)
        return self.prefactor * np.where(eta > 0.0, eta, 0.0) ** self.exponent

    def is_zero(self):
        return self.prefactor == 0.0


@dataclass(frozen=True)
class TabulatedCoupling(Coupling):
    """Coupling amplitude given on knots, linearly interpolated between them."""

    knots_eta: tuple
    knots_value: tuple

    def __post_init__(self):
        eta = np.asarray(self.knots_eta, dtype=float)
        val = np.asarray(self.knots_value, dtype=float)
        if eta.ndim != 1 or eta.size < 2 or eta.shape != val.shape:
            raise ValueError("tabulated coupling needs matching 1-d knot arrays")
        if not np.all(np.diff(eta) > 0):
            raise ValueError("tabulated knots must be strictly increasing")
        if np.any(val < 0):
            raise ValueError("tabulated coupling amplitudes must be >= 0")
        object.__setattr__(self, "knots_eta", tuple(float(x) for x in eta))
        object.__setattr__(self, "knots_value", tuple(float(x) for x in val))

    def __call__(self, eta):
        return np.interp(np.asarray(eta, dtype=float), self.knots_eta, self.knots_value)

    def squared(self, eta):
        return self.__call__(eta) ** 2

    def is_zero(self):
        return all(v == 0.0 for v in self.knots_value)


def coupling_for_width(width):
    """Constant coupling realizing a given Golden-Rule width: g = sqrt(w/2pi)."""
    if width < 0:
        raise ValueError("width must be >= 0")
    return ConstantCoupling(math.sqrt(width / (2.0 * math.pi)))


ZERO_COUPLING = ConstantCoupling(0.0)


# ---------------------------------------------------------------------------
# model parameters

@dataclass(frozen=True)
class ModelParams:
    """Two-level splitting + discrete bath level + continuum band + couplings.

    ``g`` couples |+0_b> to the |-,eta> continuum, ``g_prime`` couples |-0_b>
    to the |+,eta> continuum.  The constructor is permissive; use
    :func:`validate` for invariant checking.
    """

    epsilon: float
    e0: float
    eta_min: float
    eta_max: float
    g: Coupling = ZERO_COUPLING
    g_prime: Coupling = ZERO_COUPLING
    topology: Topology = Topology.SINGLE_CONTINUUM


@dataclass
class ValidationReport:
    violations: list = field(default_factory=list)
    warnings: list = field(default_factory=list)

    @property
    def ok(self):
        return not self.violations


def validate(params):
    """Check ModelParams invariants; report violations and broad-band warnings.

    The broad-band warning triggers when the discrete level e0 or e0+epsilon
    sits within one Golden-Rule width of a band edge, so the continuum cannot
    spread it symmetrically.
    """
    rep = ValidationReport()
    if not params.eta_min < params.eta_max:
        rep.violations.append("eta_min < eta_max is violated")
    if not params.epsilon > 0:
        rep.violations.append("epsilon > 0 is violated")
    for name, c in (("g", params.g), ("g_prime", params.g_prime)):
        if isinstance(c, TabulatedCoupling) and rep.ok:
            if c.knots_eta[0] > params.eta_min or c.knots_eta[-1] < params.eta_max:
                rep.violations.append(
                    f"tabulated coupling {name} does not span the band"
                )
    if not rep.ok:
        return rep

    e_up = params.e0 + params.epsilon
    probe = min(max(e_up, params.eta_min), params.eta_max)
    width = 2.0 * math.pi * float(params.g.squared(probe))
    if width > 0.0:
        for label, level in (("e0", params.e0), ("e0+epsilon", e_up)):
            if (level - params.eta_min) < width or (params.eta_max - level) < width:
                rep.warnings.append(
                    f"discrete level at band edge: {label}={level:g} lies within "
                    f"one width ({width:g}) of a band edge"
                )
    return rep


# ---------------------------------------------------------------------------
# reduced density matrix and Bloch vector

@dataclass(frozen=True)
class ReducedDensity:
    """2x2 reduced density matrix; rho_mm = 1 - rho_pp is implied."""

    rho_pp: float
    rho_pm: complex

    @property
    def det(self):
        return self.rho_pp * (1.0 - self.rho_pp) - abs(self.rho_pm) ** 2

    def matrix(self):
        return np.array(
            [[self.rho_pp, self.rho_pm], [np.conj(self.rho_pm), 1.0 - self.rho_pp]],
            dtype=complex,
        )

    def check(self, tol=TOL_POS):
        if not -tol <= self.rho_pp <= 1.0 + tol:
            raise ValueError(f"rho_pp={self.rho_pp} outside [0, 1]")
        if self.det < -tol:
            raise ValueError(f"det rho = {self.det} < -{tol}")
        return self


@dataclass(frozen=True)
class BlochVector:
    bx: float
    by: float
    bz: float

    @property
    def norm(self):
        return math.sqrt(self.bx ** 2 + self.by ** 2 + self.bz ** 2)

    def as_array(self):
        return np.array([self.bx, self.by, self.bz])


def bloch_from_rho(rho):
    """Bloch components b_i = Tr(rho sigma_i); by = -2 Im rho_pm.

    With this sign convention the localized initial state |l><l| maps to
    (1, 0, 0) and tunneling probability is P = (1 - bx)/2.
    """
    return BlochVector(
        bx=2.0 * rho.rho_pm.real,
        by=-2.0 * rho.rho_pm.imag,
        bz=2.0 * rho.rho_pp - 1.0,
    )


def rho_from_bloch(b):
    """Inverse of :func:`bloch_from_rho`."""
    return ReducedDensity(
        rho_pp=0.5 * (1.0 + b.bz),
        rho_pm=0.5 * (b.bx - 1j * b.by),
    )


# ---------------------------------------------------------------------------
# time grid

@dataclass(frozen=True)
class TimeGrid:
    """Uniformly spaced times in [t_start, t_end] (hbar = 1 units)."""

    t_start: float
    t_end: float
    n_points: int

    def __post_init__(self):
        if self.t_start < 0:
            raise ValueError("t_start must be >= 0")
        if not self.t_end > self.t_start:
            raise ValueError("t_end must exceed t_start")
        if self.n_points < 2:
            raise ValueError("n_points must be >= 2")

    @property
    def dt(self):
        return (self.t_end - self.t_start) / (self.n_points - 1)

    def times(self):
        return np.linspace(self.t_start, self.t_end, self.n_points)
