"""Stationary solution of a discrete level coupled to a continuum band.

Each invariant subspace of the model is a Friedrichs problem: one discrete
state |d> at energy d0 coupled to a band of energy-normalized continuum
states.  Channel A is {|+0_b>, |-,eta>} (level epsilon + e0, eigenvalues in
[eta_min, eta_max]); channel B is {|-0_b>, |+,eta>} (level e0, continuum
state |+,eta> carries eta + epsilon, so eigenvalues live on the shifted band
[eta_min + epsilon, eta_max + epsilon]).

For eigenvalue E the level's spectral density is

    rho(E) = q(E)^2 / (X(E)^2 + pi^2 q(E)^4),      X(E) = E - d0 - F(E),

where q(E) is the coupling at the continuum state of that eigenvalue and
F(E) = PV int q^2(E')/(E - E') dE' is the level-shift function.  Out-of-band
roots of X(E) are discrete eigenstates with weight 1/(1 - dF/dE).
"""

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy import integrate
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from .errors import DomainError, QuadratureFailure, RootNotBracketed
from .model import ConstantCoupling, ModelParams, Topology

_QUAD_OPTS = dict(epsabs=1e-12, epsrel=1e-9, limit=300)
_EDGE_LOG_FLOOR = -650.0  # ln of the smallest edge distance probed for roots


class Channel(Enum):
    A = "a"
    B = "b"


@dataclass(frozen=True)
class _Friedrichs:
    """One invariant subspace reduced to level-plus-band normal form."""

    level: float      # bare discrete energy d0
    lo: float         # lower edge of the eigenvalue band
    hi: float         # upper edge
    offset: float     # eigenvalue = eta + offset
    coupling: object  # coupling amplitude as a function of eta

    def q2(self, E):
        return np.asarray(self.coupling.squared(np.asarray(E) - self.offset), dtype=float)

    def q(self, E):
        return np.asarray(self.coupling(np.asarray(E) - self.offset), dtype=float)


def _channel_of(params, channel):
    if channel == Channel.A:
        return _Friedrichs(
            level=params.epsilon + params.e0,
            lo=params.eta_min,
            hi=params.eta_max,
            offset=0.0,
            coupling=params.g,
        )
    return _Friedrichs(
        level=params.e0,
        lo=params.eta_min + params.epsilon,
        hi=params.eta_max + params.epsilon,
        offset=params.epsilon,
        coupling=params.g_prime,
    )


# ---------------------------------------------------------------------------
# quadrature helpers

def _quad(f, a, b, points=None, **kw):
    opts = dict(_QUAD_OPTS)
    opts.update(kw)
    if points is not None:
        pts = sorted(p for p in points if a < p < b)
        if pts:
            opts["points"] = pts
    res = integrate.quad(f, a, b, full_output=1, **opts)
    val, err = res[0], res[1]
    if err > max(5e-9, 1e-7 * abs(val)):
        raise QuadratureFailure(
            f"integral on [{a:g}, {b:g}] converged to abserr={err:g} only"
        )
    return val


def _coupling_knots(coupling, offset=0.0):
    knots = getattr(coupling, "knots_eta", None)
    if knots is None:
        return None
    return [k + offset for k in knots]


def _shift_inside(ch, x):
    """F at an eigenvalue x strictly inside (lo, hi), subtracted-singularity form.

    PV int q2(E')/(x-E') dE' = int (q2(E') - q2(x))/(x-E') dE'
                               + q2(x) * ln((x-lo)/(hi-x)).
    """
    q2x = float(ch.q2(x))
    log_term = q2x * math.log((x - ch.lo) / (ch.hi - x)) if q2x != 0.0 else 0.0
    if isinstance(ch.coupling, ConstantCoupling):
        return log_term  # subtracted integrand vanishes identically
    if ch.coupling.is_zero():
        return 0.0

    def integrand(ep):
        d = x - ep
        if d == 0.0:
            # limit is -d(q2)/dE; the point is measure zero for quad
            return 0.0
        return (float(ch.q2(ep)) - q2x) / d

    val = _quad(integrand, ch.lo, ch.hi, points=_coupling_knots(ch.coupling, ch.offset))
    return val + log_term


def _shift_outside(ch, side, delta):
    """F at distance delta beyond the 'lo' or 'hi' edge.

    Working in the edge distance directly (u = ln of the distance to the
    nearer edge) keeps the integral exact even when delta is far below the
    floating-point spacing of the edge value, as happens for weakly bound
    edge states.
    """
    if ch.coupling.is_zero():
        return 0.0
    span = ch.hi - ch.lo
    if isinstance(ch.coupling, ConstantCoupling):
        val = ch.coupling.value ** 2 * math.log(delta / (span + delta))
        return val if side == "lo" else -val
    ua, ub = math.log(delta), math.log(span + delta)
    if side == "lo":
        x = ch.lo - delta
        return -_quad(lambda u: float(ch.q2(x + math.exp(u))), ua, ub)
    x = ch.hi + delta
    return _quad(lambda u: float(ch.q2(x - math.exp(u))), ua, ub)


def _shift(ch, E):
    E = float(E)
    if ch.lo < E < ch.hi:
        return _shift_inside(ch, E)
    if E == ch.lo or E == ch.hi:
        raise DomainError("shift function diverges exactly at a band edge")
    if E < ch.lo:
        return _shift_outside(ch, "lo", ch.lo - E)
    return _shift_outside(ch, "hi", E - ch.hi)


def _shift_slope_outside(ch, side, delta):
    """dF/dE at edge distance delta outside the band (always < 0)."""
    if ch.coupling.is_zero():
        return 0.0
    span = ch.hi - ch.lo
    if isinstance(ch.coupling, ConstantCoupling):
        return -ch.coupling.value ** 2 * (1.0 / delta - 1.0 / (span + delta))
    ua, ub = math.log(delta), math.log(span + delta)
    sgn = 1.0 if side == "lo" else -1.0
    x = ch.lo - delta if side == "lo" else ch.hi + delta
    return -_quad(
        lambda u: float(ch.q2(x + sgn * math.exp(u))) * math.exp(-u), ua, ub
    )


def _dispersion(ch, E):
    return E - ch.level - _shift(ch, E)


# ---------------------------------------------------------------------------
# public operations

def shift_function(params, channel, E):
    """Level-shift function F(E) of the requested channel (PV integral)."""
    return _shift(_channel_of(params, channel), E)


def spectral_density(params, channel, E):
    """Spectral density of the discrete level at in-band eigenvalue E."""
    ch = _channel_of(params, channel)
    E = float(E)
    if not ch.lo <= E <= ch.hi:
        raise DomainError(f"E={E} outside the channel band [{ch.lo}, {ch.hi}]")
    if ch.coupling.is_zero():
        return 0.0
    if E == ch.lo or E == ch.hi:
        return 0.0  # density vanishes at the edges (log-divergent shift)
    q2 = float(ch.q2(E))
    if q2 == 0.0:
        return 0.0
    x = E - ch.level - _shift_inside(ch, E)
    return q2 / (x * x + math.pi ** 2 * q2 * q2)


def resonance(params, channel):
    """Root e_R of X(E) inside the band and its Golden-Rule width.

    With several in-band roots (edge artifacts of the log-divergent shift)
    the one closest to the bare level is returned.
    """
    ch = _channel_of(params, channel)
    if ch.coupling.is_zero():
        return ch.level, 0.0  # uncoupled limit: the bare level, zero width
    pad = 1e-9 * (ch.hi - ch.lo)
    n_scan = 2001 if isinstance(ch.coupling, ConstantCoupling) else 241
    grid = np.linspace(ch.lo + pad, ch.hi - pad, n_scan)
    vals = np.array([_dispersion(ch, x) for x in grid])
    sign = np.sign(vals)
    idx = np.nonzero(sign[:-1] * sign[1:] < 0)[0]
    if idx.size == 0:
        raise RootNotBracketed("dispersion function has no sign change in the band")
    roots = [
        brentq(lambda x: _dispersion(ch, x), grid[i], grid[i + 1],
               xtol=1e-12 * (ch.hi - ch.lo), rtol=8.9e-16)
        for i in idx
    ]
    e_r = min(roots, key=lambda r: abs(r - ch.level))
    width = 2.0 * math.pi * float(ch.q2(e_r))
    return e_r, width


def _outside_root(ch, side):
    """Root of the dispersion function below ('lo') or above ('hi') the band.

    The dispersion function is strictly increasing outside the band, so there
    is at most one root per side.  The search runs in u = ln(edge distance),
    which resolves roots binding exponentially close to an edge; roots whose
    distance rounds to zero at double precision are dropped (their spectral
    weight is below 1e-12).
    """
    span = ch.hi - ch.lo
    sgn = -1.0 if side == "lo" else 1.0
    edge = ch.lo if side == "lo" else ch.hi

    def w_of_u(u):
        delta = math.exp(u)
        x = edge + sgn * delta
        val = x - ch.level - _shift_outside(ch, side, delta)
        return val * sgn

    u_in = _EDGE_LOG_FLOOR
    try:
        w_edge = w_of_u(u_in)
    except (OverflowError, QuadratureFailure):
        return None
    if not w_edge < 0.0:
        return None  # no sign change reachable: no root on this side
    u_out = math.log(max(span, 1.0))
    while w_of_u(u_out) < 0.0:
        u_out += math.log(4.0)
        if u_out > 700.0:
            return None
    u_star = brentq(w_of_u, u_in, u_out, xtol=1e-14, rtol=8.9e-16)
    delta = math.exp(u_star)
    e_d = edge + sgn * delta
    if e_d == edge:
        return None  # bound within one ulp of the edge: weight ~ 0
    slope = _shift_slope_outside(ch, side, delta)
    weight = 1.0 / (1.0 - slope)
    return e_d, weight


def discrete_roots(params, channel):
    """Out-of-band eigenvalues with their spectral weights (may be empty)."""
    ch = _channel_of(params, channel)
    if ch.coupling.is_zero():
        return [(ch.level, 1.0)]
    found = []
    for side in ("lo", "hi"):
        root = _outside_root(ch, side)
        if root is not None:
            found.append(root)
    return found


@dataclass
class SpectralSolution:
    """Bundle of the stationary solution for one channel."""

    channel: Channel
    lo: float
    hi: float
    resonance_energy: float
    width: float
    discrete: list

    def __post_init__(self):
        self._params = None

    def density(self, E):
        return spectral_density(self._params, self.channel, E)

    def shift(self, E):
        return shift_function(self._params, self.channel, E)


def solve(params, channel):
    """Solve one channel: resonance, width, discrete roots, density/shift."""
    ch = _channel_of(params, channel)
    e_r, width = resonance(params, channel)
    sol = SpectralSolution(
        channel=channel,
        lo=ch.lo,
        hi=ch.hi,
        resonance_energy=e_r,
        width=width,
        discrete=discrete_roots(params, channel),
    )
    sol._params = params
    return sol


def band_completeness(params, channel):
    """Band integral of the density plus discrete weights (exactly 1 in theory)."""
    ch = _channel_of(params, channel)
    if ch.coupling.is_zero():
        return 1.0
    if isinstance(ch.coupling, ConstantCoupling):
        dens = lambda E: spectral_density(params, channel, E)
    else:
        # per-point PV quadrature inside an adaptive integral is too slow;
        # the spline table reproduces the density to ~1e-8
        tables = SpectralTables(params, n_samples=801)
        vec = tables.density_a if channel == Channel.A else tables.density_b
        dens = lambda E: float(vec(E))
    try:
        e_r, width = resonance(params, channel)
        hints = [e_r - 5 * width, e_r - width, e_r, e_r + width, e_r + 5 * width]
    except RootNotBracketed:
        hints = []
    hints += [ch.lo + 1e-6 * (ch.hi - ch.lo), ch.hi - 1e-6 * (ch.hi - ch.lo)]
    hints += _coupling_knots(ch.coupling, ch.offset) or []
    val = _quad(dens, ch.lo, ch.hi, points=hints, limit=500)
    return val + sum(w for _, w in discrete_roots(params, channel))


# ---------------------------------------------------------------------------
# re-correlation kernel (single-continuum topology only)
#
# The overlap of the two channels' continuum eigenfunctions at eigenvalues
# (E, E') decomposes, after the principal-value/delta algebra of the product
# of two standing-wave solutions, into
#
#     int B A* d eta = b0(E) a0(E') * [ S(E, E') + C(E) delta(E' - (E-eps)) ]
#
# with a smooth-off-the-line part S carrying a PV pole on E' = E - eps and a
# delta line exactly on it:
#
#     S(E, E') = [Phi_A(E') - Phi_B(E)] / (E - eps - E'),
#     Phi_A(E') = G(E') + X_A(E') g'(E')/g(E'),
#     Phi_B(E)  = G(E-eps) + X_B(E) g(E-eps)/g'(E-eps),
#     C(E)      = pi^2 g g' + X_B(E) X_A(E-eps) / (g g')   at eta = E - eps,
#
# where G(x) = PV int g(eta) g'(eta)/(x - eta) d eta is the cross shift.  The
# normalization is fixed by the same algebra reproducing <psi_E|psi_E'> =
# delta(E-E') within one channel.

def _cross_shift(params, x):
    lo, hi = params.eta_min, params.eta_max
    x = float(x)

    def prod2(eta):
        eta = np.asarray(eta)
        return np.asarray(params.g(eta), dtype=float) * np.asarray(
            params.g_prime(eta), dtype=float
        )

    if params.g.is_zero() or params.g_prime.is_zero():
        return 0.0
    if isinstance(params.g, ConstantCoupling) and isinstance(params.g_prime, ConstantCoupling):
        c = params.g.value * params.g_prime.value
        return c * math.log(abs(x - lo) / abs(hi - x)) if c else 0.0
    if lo < x < hi:
        px = float(prod2(x))
        pts = (_coupling_knots(params.g) or []) + (_coupling_knots(params.g_prime) or [])

        def integrand(eta):
            d = x - eta
            return (float(prod2(eta)) - px) / d if d != 0.0 else 0.0

        val = _quad(integrand, lo, hi, points=pts)
        return val + px * math.log((x - lo) / (hi - x))
    sgn = 1.0 if x < lo else -1.0
    ua = math.log(abs(lo - x) if x < lo else x - hi)
    ub = math.log(abs(hi - x) if x < lo else x - lo)
    return -sgn * _quad(lambda u: float(prod2(x + sgn * math.exp(u))), ua, ub)


def _require_overlap_domain(params, E, Eprime=None):
    if params.topology != Topology.SINGLE_CONTINUUM:
        raise DomainError("continuum overlap is identically zero for orthogonal continua")
    chb = _channel_of(params, Channel.B)
    cha = _channel_of(params, Channel.A)
    if not chb.lo <= E <= chb.hi:
        raise DomainError(f"E={E} outside channel-B band [{chb.lo}, {chb.hi}]")
    if Eprime is not None and not cha.lo <= Eprime <= cha.hi:
        raise DomainError(f"E'={Eprime} outside channel-A band [{cha.lo}, {cha.hi}]")


def continuum_amplitude_overlap(params, E, Eprime):
    """Smooth part S(E, E') of the two-channel continuum overlap kernel.

    Normalized per unit b0(E) a0(E'); the full distributional overlap adds
    the delta line C(E) delta(E' - (E - eps)), see
    :func:`recorrelation_delta_coefficient`.  On the line E' = E - eps the
    smooth part is a principal value and not finite pointwise.
    """
    _require_overlap_domain(params, E, Eprime)
    eps = params.epsilon
    cha = _channel_of(params, Channel.A)
    chb = _channel_of(params, Channel.B)
    ga, gpa = float(params.g(Eprime)), float(params.g_prime(Eprime))
    gb, gpb = float(params.g(E - eps)), float(params.g_prime(E - eps))
    xa = Eprime - cha.level - _shift(cha, Eprime)
    xb = E - chb.level - _shift(chb, E)
    phi_a = _cross_shift(params, Eprime) + xa * gpa / ga
    phi_b = _cross_shift(params, E - eps) + xb * gb / gpb
    return complex((phi_a - phi_b) / (E - eps - Eprime))


def recorrelation_delta_coefficient(params, E):
    """Coefficient of the delta line at E' = E - eps in the overlap kernel."""
    _require_overlap_domain(params, E)
    eps = params.epsilon
    cha = _channel_of(params, Channel.A)
    chb = _channel_of(params, Channel.B)
    g = float(params.g(E - eps))
    gp = float(params.g_prime(E - eps))
    xa = (E - eps) - cha.level - _shift(cha, E - eps)
    xb = E - chb.level - _shift(chb, E)
    return math.pi ** 2 * g * gp + xa * xb / (g * gp)


# ---------------------------------------------------------------------------
# vectorized tables used by the dynamics quadrature path

class SpectralTables:
    """Densities, shifts and kernel pieces of both channels, vectorized.

    Constant couplings evaluate in closed form; otherwise the smooth
    remainder of each shift function (shift minus its log term) is sampled
    once and spline-interpolated, which keeps the log divergence at the band
    edges exact.
    """

    def __init__(self, params, n_samples=1601):
        self.params = params
        self.n_samples = n_samples
        self.cha = _channel_of(params, Channel.A)
        self.chb = _channel_of(params, Channel.B)
        self._fa = self._build_shift_table(self.cha, n_samples)
        self._fb = self._build_shift_table(self.chb, n_samples)
        self._gx = None  # cross-shift table built lazily (needs extra quads)

    @staticmethod
    def _log_ratio(x, lo, hi):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore"):
            return np.log((x - lo) / (hi - x))

    def _build_shift_table(self, ch, n):
        if ch.coupling.is_zero():
            return lambda E: np.zeros_like(np.asarray(E, dtype=float))
        if isinstance(ch.coupling, ConstantCoupling):
            c2 = ch.coupling.value ** 2
            return lambda E: c2 * self._log_ratio(E, ch.lo, ch.hi)
        pad = 1e-9 * (ch.hi - ch.lo)
        xs = np.linspace(ch.lo + pad, ch.hi - pad, n)
        smooth = np.array([
            _shift_inside(ch, x) - float(ch.q2(x)) * math.log((x - ch.lo) / (ch.hi - x))
            for x in xs
        ])
        spl = CubicSpline(xs, smooth)

        def table(E):
            E = np.asarray(E, dtype=float)
            return spl(E) + ch.q2(E) * self._log_ratio(E, ch.lo, ch.hi)

        return table

    def _build_cross_table(self, n):
        p = self.params
        if p.g.is_zero() or p.g_prime.is_zero():
            return lambda x: np.zeros_like(np.asarray(x, dtype=float))
        if isinstance(p.g, ConstantCoupling) and isinstance(p.g_prime, ConstantCoupling):
            c = p.g.value * p.g_prime.value
            return lambda x: c * self._log_ratio(x, p.eta_min, p.eta_max)
        pad = 1e-9 * (p.eta_max - p.eta_min)
        xs = np.linspace(p.eta_min + pad, p.eta_max - pad, n)
        prod = lambda e: np.asarray(p.g(e), dtype=float) * np.asarray(p.g_prime(e), dtype=float)
        smooth = np.array([
            _cross_shift(p, x) - float(prod(x)) * math.log((x - p.eta_min) / (p.eta_max - x))
            for x in xs
        ])
        spl = CubicSpline(xs, smooth)

        def table(x):
            x = np.asarray(x, dtype=float)
            return spl(x) + prod(x) * self._log_ratio(x, p.eta_min, p.eta_max)

        return table

    # -- channel A pieces (arguments in the A band) --

    def xa(self, E):
        return np.asarray(E, dtype=float) - self.cha.level - self._fa(E)

    def density_a(self, E):
        q2 = self.cha.q2(E)
        x = self.xa(E)
        with np.errstate(invalid="ignore"):
            rho = np.where(q2 > 0.0, q2 / (x * x + math.pi ** 2 * q2 * q2), 0.0)
        return rho

    # -- channel B pieces (arguments in the shifted B band) --

    def xb(self, E):
        return np.asarray(E, dtype=float) - self.chb.level - self._fb(E)

    def density_b(self, E):
        q2 = self.chb.q2(E)
        x = self.xb(E)
        with np.errstate(invalid="ignore"):
            rho = np.where(q2 > 0.0, q2 / (x * x + math.pi ** 2 * q2 * q2), 0.0)
        return rho

    def cross_shift(self, x):
        if self._gx is None:
            self._gx = self._build_cross_table(self.n_samples)
        return self._gx(x)
