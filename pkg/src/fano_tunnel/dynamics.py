"""Reduced dynamics of the two-level subsystem from the localized start.

Three interchangeable evolution methods produce rho(t) from
rho(0) = |l><l|:

* ``CLOSED_FORM``  the broad-band Breit-Wigner formulas (constant couplings
  only).  These transcribe the standard closed expressions, whose
  re-correlation term is leading order in epsilon/(Gamma+Gamma'); see the
  quadrature/oracle paths for the exact dynamics.
* ``QUADRATURE``   Fourier transforms of the exact spectral densities plus,
  for a single continuum, the re-correlation double integral evaluated as a
  cross-correlation in energy and a principal-value Fourier transform.
* ``ORACLE``       the brute-force finite discretization (module oracle).

Conventions: evolution is exp(-iHt) and rho_pm = <+|rho|->, so the undamped
limit gives rho_pm(t) = exp(-i epsilon t)/2 and the single-relaxation decay
rho_pm(t) = exp(-i(e_R - e0)t - Gamma t/2)/2.
"""

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.signal import fftconvolve
from scipy.special import sici

from . import spectral
from ._kernels import phase_sum
from .errors import DomainError, MethodUnavailable, PositivityViolation, QuadratureFailure
from .model import ConstantCoupling, ReducedDensity, Topology, validate

_MAX_FOURIER_NODES = 2_000_000
_MAX_CORR_NODES = 400_000


class EvolutionMethod(Enum):
    CLOSED_FORM = "closed"
    QUADRATURE = "quadrature"
    ORACLE = "oracle"


# ---------------------------------------------------------------------------
# trajectory containers

@dataclass(frozen=True)
class TrajectoryPoint:
    t: float
    rho: ReducedDensity
    P: float
    delta: float


@dataclass
class Trajectory:
    """rho(t) on a time grid, stored as arrays; indexable as TrajectoryPoints."""

    t: np.ndarray
    rho_pp: np.ndarray
    rho_pm: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def P(self):
        return 0.5 * (1.0 - 2.0 * self.rho_pm.real)

    @property
    def det(self):
        return self.rho_pp * (1.0 - self.rho_pp) - np.abs(self.rho_pm) ** 2

    @property
    def delta(self):
        return np.maximum(2.0 * self.det, 0.0)

    def bloch(self):
        """Bloch components, shape (3, n_points)."""
        return np.vstack([
            2.0 * self.rho_pm.real,
            -2.0 * self.rho_pm.imag,
            2.0 * self.rho_pp - 1.0,
        ])

    def __len__(self):
        return self.t.shape[0]

    def __getitem__(self, i):
        rho = ReducedDensity(float(self.rho_pp[i]), complex(self.rho_pm[i]))
        return TrajectoryPoint(
            t=float(self.t[i]), rho=rho,
            P=float(self.P[i]), delta=float(self.delta[i]),
        )


# ---------------------------------------------------------------------------
# pointwise observables

def tunneling_probability(rho):
    """P = Tr(|r><r| rho) = (1 - 2 Re rho_pm)/2."""
    return 0.5 * (1.0 - 2.0 * rho.rho_pm.real)


def idempotency_defect(rho, tol=1e-10):
    """Linear entropy delta = 1 - Tr(rho^2) = 2 det rho, clipped at zero."""
    d = rho.det
    if d < -tol:
        raise PositivityViolation(f"det rho = {d} < -{tol}")
    return max(2.0 * d, 0.0)


def delta_asymptote(gamma, gamma_prime, topology):
    """t -> infinity limit of delta for the two-relaxation-time closed form.

    Defined only for strictly positive widths: the long-time limit does not
    commute with sending either width to zero.
    """
    if gamma <= 0.0 or gamma_prime <= 0.0:
        raise DomainError("delta asymptote requires both widths > 0")
    if topology == Topology.ORTHOGONAL_CONTINUA:
        return 0.5
    return 0.5 - 2.0 * gamma * gamma_prime / (gamma + gamma_prime) ** 2


# ---------------------------------------------------------------------------
# closed forms (broad band, constant couplings)

def _closed_two_arrays(gamma, gamma_prime, omega, ts, topology):
    ts = np.asarray(ts, dtype=float)
    rho_pp = 0.5 * (1.0 + np.exp(-gamma * ts) - np.exp(-gamma_prime * ts))
    m = 0.5 * (gamma + gamma_prime)
    total = gamma + gamma_prime
    c = 0.0
    if topology == Topology.SINGLE_CONTINUUM and total > 0.0:
        c = 2.0 * math.sqrt(gamma * gamma_prime) / total
    decay = np.exp(-m * ts)
    rho_pm = 0.5 * (np.exp(-1j * omega * ts) * decay
                    + c * np.exp(1j * omega * ts) * (1.0 - decay))
    return rho_pp, rho_pm


def _closed_bloch(gamma, gamma_prime, omega, ts, topology):
    """Bloch vector and its analytic time derivative for the closed form."""
    ts = np.asarray(ts, dtype=float)
    m = 0.5 * (gamma + gamma_prime)
    total = gamma + gamma_prime
    c = 0.0
    if topology == Topology.SINGLE_CONTINUUM and total > 0.0:
        c = 2.0 * math.sqrt(gamma * gamma_prime) / total
    ea, eb, em = np.exp(-gamma * ts), np.exp(-gamma_prime * ts), np.exp(-m * ts)
    cw, sw = np.cos(omega * ts), np.sin(omega * ts)
    # rho_pm = x + i y with x = cos(wt)(em + c(1-em))/... expanded explicitly
    x = 0.5 * (cw * em + c * cw * (1.0 - em))
    y = 0.5 * (-sw * em + c * sw * (1.0 - em))
    dem = -m * em
    dx = 0.5 * (-omega * sw * em + cw * dem + c * (-omega * sw) * (1.0 - em) - c * cw * dem)
    dy = 0.5 * (-omega * cw * em - sw * dem + c * omega * cw * (1.0 - em) - c * sw * dem)
    b = np.vstack([2.0 * x, -2.0 * y, ea - eb])
    bdot = np.vstack([2.0 * dx, -2.0 * dy, -gamma * ea + gamma_prime * eb])
    return b, bdot


def closed_single(gamma, omega, t):
    """Single-relaxation closed form: rho_pp = e^{-Gt}/2,
    rho_pm = e^{-i w t - G t/2}/2 with w = e_R - e0."""
    if gamma < 0.0:
        raise DomainError("width must be >= 0")
    pp, pm = _closed_two_arrays(gamma, 0.0, omega, np.array([t], float),
                                Topology.SINGLE_CONTINUUM)
    return ReducedDensity(float(pp[0]), complex(pm[0]))


def closed_two(gamma, gamma_prime, omega, t, topology=Topology.SINGLE_CONTINUUM):
    """Two-relaxation-time closed form with re-correlation coefficient
    2 sqrt(G G')/(G + G') (single continuum) or without it (orthogonal)."""
    if gamma < 0.0 or gamma_prime < 0.0:
        raise DomainError("widths must be >= 0")
    pp, pm = _closed_two_arrays(gamma, gamma_prime, omega, np.array([t], float), topology)
    return ReducedDensity(float(pp[0]), complex(pm[0]))


# ---------------------------------------------------------------------------
# quadrature path

def _gl5_panels(lo, hi, max_width):
    """Nodes and weights of composite 5-point Gauss-Legendre panels."""
    span = hi - lo
    n_panels = max(8, int(math.ceil(span / max_width)))
    if n_panels * 5 > _MAX_FOURIER_NODES:
        raise QuadratureFailure(
            f"oscillatory quadrature needs {n_panels} panels; time grid too long "
            "for this band"
        )
    x, w = np.polynomial.legendre.leggauss(5)
    edges = np.linspace(lo, hi, n_panels + 1)
    half = 0.5 * (edges[1:] - edges[:-1])
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def _survival_amplitude(tables, which, discrete, width, ts, t_max):
    """u(t) = int rho(E) e^{-iEt} dE + sum_d w_d e^{-iE_d t} for one channel."""
    ch = tables.cha if which == "a" else tables.chb
    dens = tables.density_a if which == "a" else tables.density_b
    parts = []
    if not ch.coupling.is_zero():
        cap = min(width / 20.0 if width > 0 else np.inf, math.pi / (8.0 * max(t_max, 1e-12)))
        cap = min(cap, (ch.hi - ch.lo) / 8.0)
        nodes, weights = _gl5_panels(ch.lo, ch.hi, cap)
        coeffs = weights * dens(nodes)
        parts.append((nodes, coeffs))
    if discrete:
        e_d = np.array([e for e, _ in discrete])
        w_d = np.array([w for _, w in discrete])
        parts.append((e_d, w_d))
    energies = np.concatenate([p[0] for p in parts])
    coeffs = np.concatenate([p[1] for p in parts]).astype(np.complex128)
    u = phase_sum(energies, coeffs, ts)
    norm = float(np.sum(coeffs).real)
    return u, norm


def _filon_ab(theta):
    """Oscillatory weights A = int_0^1 (1-u) e^{-i theta u} du and
    B = int_0^1 u e^{-i theta u} du, series-switched near theta = 0."""
    theta = np.asarray(theta, dtype=float)
    small = np.abs(theta) < 1e-3
    th = np.where(small, 1.0, theta)  # avoid 0/0 in the exact branch
    eth = np.exp(-1j * th)
    b_exact = (eth * (1.0 + 1j * th) - 1.0) / th ** 2
    a_exact = (1.0 - eth) / (1j * th) - b_exact
    ts2 = theta * theta
    a_ser = 0.5 - 1j * theta / 6.0 - ts2 / 24.0 + 1j * theta * ts2 / 120.0 + ts2 * ts2 / 720.0
    b_ser = 0.5 - 1j * theta / 3.0 - ts2 / 8.0 + 1j * theta * ts2 / 30.0 + ts2 * ts2 / 144.0
    return np.where(small, a_ser, a_exact), np.where(small, b_ser, b_exact)


def _filon_linear(w, r, ts):
    """int r(w) e^{-iwt} dw on a uniform grid, r piecewise linear; exact in t."""
    h = w[1] - w[0]
    theta = h * np.asarray(ts, dtype=float)
    a, b = _filon_ab(theta)
    t_all = phase_sum(w, r.astype(np.complex128), ts)
    ph_first = r[0] * np.exp(-1j * w[0] * ts)
    ph_last = r[-1] * np.exp(-1j * w[-1] * ts)
    return h * (a * (t_all - ph_last) + b * np.exp(1j * theta) * (t_all - ph_first))


def _pv_unit_transform(a, b, ts):
    """PV int_a^b e^{-iwt}/w dw for a < 0 < b and t >= 0."""
    ts = np.asarray(ts, dtype=float)
    out = np.empty(ts.shape, dtype=np.complex128)
    zero = ts == 0.0
    out[zero] = math.log(b / abs(a))
    tp = ts[~zero]
    si_b, ci_b = sici(b * tp)
    si_a, ci_a = sici(abs(a) * tp)
    out[~zero] = (ci_b - ci_a) - 1j * (si_b + si_a)
    return out


def _recorrelation(params, tables, width_a, width_b, ts):
    """Re-correlation term T2(t) = int beta_t(eta) conj(alpha_t(eta)) d eta.

    With w = E - eps - E' the smooth part becomes a single principal-value
    Fourier integral of the cross-correlation Q(w) of channel densities and
    kernel pieces; the delta line contributes K_delta e^{-i eps t}.
    """
    p = params
    eps = p.epsilon
    span = p.eta_max - p.eta_min
    dx = min(width_a, width_b) / 40.0
    n = int(math.ceil(span / dx))
    if n > _MAX_CORR_NODES:
        raise QuadratureFailure(
            "re-correlation grid would need %d nodes; widths too narrow "
            "relative to the band" % n
        )
    dx = span / n
    xs = p.eta_min + (np.arange(n) + 0.5) * dx      # channel-A eigenvalues
    es = xs + eps                                   # channel-B eigenvalues

    q2a = np.asarray(p.g.squared(xs), dtype=float)
    q2b = np.asarray(p.g_prime.squared(xs), dtype=float)
    prod = np.sqrt(q2a * q2b)
    xa = tables.xa(xs)
    xb = tables.xb(es)
    da = xa * xa + math.pi ** 2 * q2a * q2a
    db = xb * xb + math.pi ** 2 * q2b * q2b
    with np.errstate(divide="ignore", invalid="ignore"):
        rho_a = np.where(q2a > 0.0, q2a / da, 0.0)
        rho_b = np.where(q2b > 0.0, q2b / db, 0.0)
        phi_a = np.where(prod > 0.0, prod * xa / da, 0.0)
        phi_b = np.where(prod > 0.0, prod * xb / db, 0.0)
        dline = np.where(
            prod > 0.0,
            prod * (math.pi ** 2 * q2a * q2b + xa * xb) / (da * db),
            0.0,
        )
    gx = tables.cross_shift(xs)

    # delta line: integrand aligned on the shared grid (E_k - eps = x_k)
    k_delta = dx * float(np.sum(dline))

    # smooth part: Q(w) = int rho_B(E) hA(E-eps-w) dE - int hB(E) rho_A(E-eps-w) dE
    h_a = rho_a * gx + phi_a
    h_b = rho_b * gx + phi_b
    # correlate(f, h)[j + n - 1] = sum_k f[k] h[k-j]; with f on the B grid and
    # h on the A grid the lag j corresponds exactly to w = j*dx.
    q_w = dx * (fftconvolve(rho_b, h_a[::-1], mode="full")
                - fftconvolve(h_b, rho_a[::-1], mode="full"))
    w = dx * np.arange(-(n - 1), n)
    i0 = n - 1
    q0 = q_w[i0]
    r = np.empty_like(q_w)
    nz = w != 0.0
    r[nz] = (q_w[nz] - q0) / w[nz]
    r[i0] = (-q_w[i0 + 2] + 8.0 * q_w[i0 + 1] - 8.0 * q_w[i0 - 1] + q_w[i0 - 2]) / (12.0 * dx)

    smooth = _filon_linear(w, r, ts) + q0 * _pv_unit_transform(w[0], w[-1], ts)
    return np.exp(-1j * eps * ts) * (smooth + k_delta)


def _quadrature_trajectory(params, ts):
    tables = spectral.SpectralTables(params)
    e_ra, width_a = spectral.resonance(params, spectral.Channel.A)
    e_rb, width_b = spectral.resonance(params, spectral.Channel.B)
    disc_a = spectral.discrete_roots(params, spectral.Channel.A)
    disc_b = spectral.discrete_roots(params, spectral.Channel.B)
    t_max = float(np.max(ts))
    u_a, norm_a = _survival_amplitude(tables, "a", disc_a, width_a, ts, t_max)
    u_b, norm_b = _survival_amplitude(tables, "b", disc_b, width_b, ts, t_max)
    rho_pp = 0.5 * (1.0 + np.abs(u_a) ** 2 - np.abs(u_b) ** 2)
    rho_pm = 0.5 * u_a * np.conj(u_b)
    meta = {
        "method": "quadrature",
        "omega": e_ra - e_rb,
        "widths": (width_a, width_b),
        "completeness": (norm_a, norm_b),
        "topology": params.topology,
    }
    if (params.topology == Topology.SINGLE_CONTINUUM
            and not params.g.is_zero() and not params.g_prime.is_zero()):
        t2 = _recorrelation(params, tables, width_a, width_b, ts)
        rho_pm = rho_pm + 0.5 * t2
        t2_zero = _recorrelation(params, tables, width_a, width_b, np.array([0.0]))
        meta["recorrelation_zero_residual"] = float(abs(t2_zero[0]))
    return Trajectory(t=np.asarray(ts, float), rho_pp=rho_pp, rho_pm=rho_pm, meta=meta)


# ---------------------------------------------------------------------------
# entry point

def evolve(params, grid, method=EvolutionMethod.QUADRATURE, n_bins=4000,
           solver="secular"):
    """Evolve rho(0) = |l><l| on the grid with the requested method."""
    rep = validate(params)
    if not rep.ok:
        raise ValueError("invalid model parameters: " + "; ".join(rep.violations))
    ts = grid.times()
    if method == EvolutionMethod.CLOSED_FORM:
        if not (isinstance(params.g, ConstantCoupling)
                and isinstance(params.g_prime, ConstantCoupling)):
            raise MethodUnavailable("closed form requires constant couplings")
        if rep.warnings:
            raise MethodUnavailable(
                "closed form requires the broad-band regime: " + "; ".join(rep.warnings)
            )
        e_ra, width_a = spectral.resonance(params, spectral.Channel.A)
        e_rb, width_b = spectral.resonance(params, spectral.Channel.B)
        omega = e_ra - e_rb
        rho_pp, rho_pm = _closed_two_arrays(width_a, width_b, omega, ts, params.topology)
        meta = {
            "method": "closed",
            "omega": omega,
            "widths": (width_a, width_b),
            "topology": params.topology,
            "closed": dict(gamma=width_a, gamma_prime=width_b, omega=omega,
                           topology=params.topology),
        }
        return Trajectory(t=ts, rho_pp=rho_pp, rho_pm=rho_pm, meta=meta)
    if method == EvolutionMethod.QUADRATURE:
        return _quadrature_trajectory(params, ts)
    if method == EvolutionMethod.ORACLE:
        from . import oracle

        model = oracle.discretize(params, n_bins)
        return oracle.evolve_oracle(model, grid, solver=solver)
    raise ValueError(f"unknown evolution method {method!r}")
