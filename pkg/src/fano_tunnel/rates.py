"""Decomposition of the tunneling rate into dissipative and unitary parts.

The reduced density rho(t) = sum_k p_k |t,k><t,k| has eigenvalues
p_{1,2} = (1 +- |b|)/2 and dominant natural orbital along n = b/|b| in Bloch
form.  For a projector (1 + m.sigma)/2 the occupation P = (1 + b.m)/2 splits
as P_dot = R_d + R_u with

    R_d = (n.m) d|b|/dt / 2        (eigenvalue motion: decoherence),
    R_u = |b| d(n.m)/dt / 2        (eigenvector rotation: unitary motion).

Everything is computed in Bloch form; the natural orbitals themselves are
never constructed, which removes their phase ambiguity.  Time derivatives
are analytic for closed-form trajectories and 4th-order finite differences
otherwise.
"""

from dataclasses import dataclass, field

import numpy as np

from .dynamics import Trajectory, _closed_bloch
from .errors import GridTooCoarse
from .model import Topology

_DEGENERATE_NORM = 1e-12
FD_RESIDUAL_TOL = 1e-6

RIGHT_AXIS = np.array([-1.0, 0.0, 0.0])  # |r><r| = (1 - sigma_1)/2
LEFT_AXIS = np.array([1.0, 0.0, 0.0])


@dataclass(frozen=True)
class Projector:
    """Rank-1 projector (1 + axis.sigma)/2 on the two-level space."""

    axis: tuple = (-1.0, 0.0, 0.0)

    def __post_init__(self):
        a = np.asarray(self.axis, dtype=float)
        if a.shape != (3,):
            raise ValueError("projector axis must be a 3-vector")
        if abs(np.linalg.norm(a) - 1.0) > 1e-12:
            raise ValueError("projector axis must be a unit vector to 1e-12")
        object.__setattr__(self, "axis", tuple(float(x) for x in a))

    def axis_array(self):
        return np.asarray(self.axis)


RIGHT_PROJECTOR = Projector((-1.0, 0.0, 0.0))


@dataclass(frozen=True)
class EigenDecomposition:
    p1: float
    p2: float
    axis: tuple  # None when degenerate
    degenerate: bool


def eigendecompose(rho):
    """Eigenvalues and dominant-orbital orientation of a reduced density."""
    b = np.array([2.0 * rho.rho_pm.real, -2.0 * rho.rho_pm.imag,
                  2.0 * rho.rho_pp - 1.0])
    r = float(np.linalg.norm(b))
    p1, p2 = 0.5 * (1.0 + r), 0.5 * (1.0 - r)
    if r < _DEGENERATE_NORM:
        return EigenDecomposition(p1=p1, p2=p2, axis=None, degenerate=True)
    n = b / r
    return EigenDecomposition(p1=p1, p2=p2, axis=tuple(n), degenerate=False)


@dataclass
class RateSeries:
    """Rate decomposition along a trajectory, stored as arrays."""

    t: np.ndarray
    P: np.ndarray
    P_dot: np.ndarray
    R_d: np.ndarray
    R_u: np.ndarray
    p1: np.ndarray
    orbital_overlap: np.ndarray  # |<projector state|t,1>|^2
    meta: dict = field(default_factory=dict)

    @property
    def residual(self):
        return np.max(np.abs(self.R_d + self.R_u - self.P_dot))

    def __len__(self):
        return self.t.shape[0]


def _fd_derivative(y, dt):
    """4th-order first derivative on a uniform grid (one-sided at the ends)."""
    y = np.asarray(y, dtype=float)
    n = y.shape[0]
    if n < 6:
        raise GridTooCoarse("need at least 6 grid points for the 4th-order stencil")
    d = np.empty_like(y)
    d[2:-2] = (y[:-4] - 8.0 * y[1:-3] + 8.0 * y[3:-1] - y[4:]) / (12.0 * dt)
    fwd = np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / (12.0 * dt)
    for i in (0, 1):
        d[i] = np.dot(fwd, y[i:i + 5])
        d[n - 1 - i] = -np.dot(fwd, y[n - 1 - i:n - 6 - i if n - 6 - i >= 0 else None:-1])
    return d


def _bloch_and_derivative(trajectory):
    closed = trajectory.meta.get("closed")
    if closed is not None:
        b, bdot = _closed_bloch(closed["gamma"], closed["gamma_prime"],
                                closed["omega"], trajectory.t, closed["topology"])
        return b, bdot, "analytic"
    dt = trajectory.t[1] - trajectory.t[0]
    if not np.allclose(np.diff(trajectory.t), dt, rtol=1e-9, atol=1e-12):
        raise GridTooCoarse("finite-difference rates need a uniform time grid")
    b = trajectory.bloch()
    bdot = np.vstack([_fd_derivative(b[i], dt) for i in range(3)])
    return b, bdot, "finite-difference"


def _decompose(b, bdot, axis):
    """Bloch-form split; returns (P, P_dot, R_d, R_u, p1, overlap)."""
    m = axis[:, None]
    r = np.linalg.norm(b, axis=0)
    bm = np.sum(b * m, axis=0)
    bdm = np.sum(bdot * m, axis=0)
    p = 0.5 * (1.0 + bm)
    p_dot = 0.5 * bdm
    degenerate = r < _DEGENERATE_NORM
    r_safe = np.where(degenerate, 1.0, r)
    rdot = np.sum(b * bdot, axis=0) / r_safe
    u = bm / r_safe
    udot = bdm / r_safe - bm * rdot / r_safe ** 2
    r_d = 0.5 * u * rdot
    r_u = 0.5 * r * udot
    # at an exact degeneracy the split convention is R_u = 0, R_d = P_dot
    r_d = np.where(degenerate, p_dot, r_d)
    r_u = np.where(degenerate, 0.0, r_u)
    p1 = 0.5 * (1.0 + r)
    overlap = np.where(degenerate, 0.5, 0.5 * (1.0 + u))
    return p, p_dot, r_d, r_u, p1, overlap


def rate_decomposition(trajectory, projector=RIGHT_PROJECTOR):
    """Split P_dot into R_d + R_u along a trajectory.

    Closed-form trajectories are differentiated analytically; anything else
    uses 4th-order finite differences and raises GridTooCoarse when the
    R_d + R_u = P_dot identity is violated beyond 1e-6.
    """
    b, bdot, mode = _bloch_and_derivative(trajectory)
    p, p_dot, r_d, r_u, p1, overlap = _decompose(b, bdot, projector.axis_array())
    series = RateSeries(t=trajectory.t, P=p, P_dot=p_dot, R_d=r_d, R_u=r_u,
                        p1=p1, orbital_overlap=overlap,
                        meta={"derivatives": mode, "projector": projector.axis})
    if mode == "finite-difference" and series.residual > FD_RESIDUAL_TOL:
        raise GridTooCoarse(
            f"rate-split residual {series.residual:.3e} exceeds {FD_RESIDUAL_TOL:g}; "
            "refine the time grid"
        )
    return series


def projector_rate_decomposition(trajectory, subspace):
    """Rate split for a projector onto a list of orthonormal pure states.

    States are given as Bloch axes.  In two dimensions orthonormality forces
    either a single state or an antipodal pair (the full space); the rank-1
    case reproduces :func:`rate_decomposition` exactly and the rank-2 case
    gives P = 1 with both rates identically zero.
    """
    axes = [np.asarray(a, dtype=float) for a in subspace]
    if not 1 <= len(axes) <= 2:
        raise ValueError("subspace must contain one or two states")
    for a in axes:
        if a.shape != (3,) or abs(np.linalg.norm(a) - 1.0) > 1e-10:
            raise ValueError("subspace states must be unit Bloch vectors to 1e-10")
    if len(axes) == 2:
        # |<psi1|psi2>|^2 = (1 + m1.m2)/2 must vanish
        if abs(1.0 + float(np.dot(axes[0], axes[1]))) > 2e-10:
            raise ValueError("subspace states are not orthonormal to 1e-10")
    b, bdot, mode = _bloch_and_derivative(trajectory)
    parts = [_decompose(b, bdot, a) for a in axes]
    p = sum(q[0] for q in parts)
    p_dot = sum(q[1] for q in parts)
    r_d = sum(q[2] for q in parts)
    r_u = sum(q[3] for q in parts)
    p1 = parts[0][4]
    overlap = sum(q[5] for q in parts)
    series = RateSeries(t=trajectory.t, P=p, P_dot=p_dot, R_d=r_d, R_u=r_u,
                        p1=p1, orbital_overlap=overlap,
                        meta={"derivatives": mode, "rank": len(axes)})
    if mode == "finite-difference" and series.residual > FD_RESIDUAL_TOL:
        raise GridTooCoarse(
            f"rate-split residual {series.residual:.3e} exceeds {FD_RESIDUAL_TOL:g}; "
            "refine the time grid"
        )
    return series
