"""Brute-force validator: discretize the band, diagonalize, partial-trace.

The continuum is replaced by N uniform bins of width Delta, each carrying
coupling g(eta_i) sqrt(Delta) so the Golden-Rule width survives the limit.
Each invariant subspace then becomes an (N+1) x (N+1) symmetric arrow matrix

    block_a = [[eps + e0, g_i...], [g_i, diag(eta_i)]],
    block_b = [[e0, g'_i...],      [g'_i, diag(eta_i + eps)]],

whose exact spectral evolution yields rho(t).  A uniformly discretized
continuum is periodic: the oracle is faithful only up to the recurrence time
2 pi / Delta.

Two eigensolvers are available: ``secular`` (default) exploits the arrow
structure via interlacing bisection in O(N^2) with analytic eigenvector
components, ``dense`` calls numpy.linalg.eigh on the materialized blocks.
They agree to machine precision; the dense path is the maximally boring
cross-check but costs O(N^3).
"""

from dataclasses import dataclass

import numpy as np

from ._kernels import arrow_weights, phase_sum, secular_roots
from .dynamics import Trajectory
from .errors import EigenFailure
from .model import Topology

_MAX_BINS = 20000
_REC_CHUNK = 1024  # rows per block in the re-correlation contraction


@dataclass
class DiscretizedModel:
    params: object
    n_bins: int
    bin_width: float
    bin_energies: np.ndarray      # midpoints eta_i
    bin_couplings_a: np.ndarray   # g(eta_i) sqrt(Delta)
    bin_couplings_b: np.ndarray   # g'(eta_i) sqrt(Delta)

    @property
    def level_a(self):
        return self.params.epsilon + self.params.e0

    @property
    def level_b(self):
        return self.params.e0

    @property
    def recurrence_time(self):
        return 2.0 * np.pi / self.bin_width

    def _block(self, level, couplings, diag):
        n = self.n_bins
        h = np.zeros((n + 1, n + 1))
        h[0, 0] = level
        h[0, 1:] = couplings
        h[1:, 0] = couplings
        h[np.arange(1, n + 1), np.arange(1, n + 1)] = diag
        return h

    @property
    def block_a(self):
        return self._block(self.level_a, self.bin_couplings_a, self.bin_energies)

    @property
    def block_b(self):
        return self._block(self.level_b, self.bin_couplings_b,
                           self.bin_energies + self.params.epsilon)


def discretize(params, n_bins):
    """Uniform midpoint discretization with sqrt(Delta) coupling scaling."""
    if n_bins < 10:
        raise ValueError("n_bins must be >= 10")
    delta = (params.eta_max - params.eta_min) / n_bins
    etas = params.eta_min + (np.arange(n_bins) + 0.5) * delta
    root = np.sqrt(delta)
    return DiscretizedModel(
        params=params,
        n_bins=n_bins,
        bin_width=delta,
        bin_energies=etas,
        bin_couplings_a=np.asarray(params.g(etas), dtype=float) * root,
        bin_couplings_b=np.asarray(params.g_prime(etas), dtype=float) * root,
    )


# ---------------------------------------------------------------------------
# eigensystems of one arrow block

class _BlockSystem:
    """Eigenvalues, apex weights and bin geometry of one coupled block."""

    def __init__(self, level, etas, couplings, solver):
        keep = couplings != 0.0
        self.level = level
        self.etas = etas[keep]
        self.g = couplings[keep]
        self.keep = np.nonzero(keep)[0]
        self.coupled = self.etas.size > 0
        self._vec = None
        if not self.coupled:
            self.lams = np.array([level])
            self.weights = np.array([1.0])
            return
        if solver == "dense":
            self._solve_dense()
        elif solver == "secular":
            self._solve_secular()
        else:
            raise ValueError(f"unknown oracle solver {solver!r}")

    def _solve_dense(self):
        n = self.etas.size
        h = np.zeros((n + 1, n + 1))
        h[0, 0] = self.level
        h[0, 1:] = self.g
        h[1:, 0] = self.g
        h[np.arange(1, n + 1), np.arange(1, n + 1)] = self.etas
        try:
            lams, vec = np.linalg.eigh(h)
        except np.linalg.LinAlgError as exc:
            raise EigenFailure(str(exc)) from exc
        self.lams = lams
        self._vec = vec
        self.weights = vec[0, :] ** 2

    def _solve_secular(self):
        d0 = self.level
        etas, g2 = self.etas, self.g ** 2
        span = etas[-1] - etas[0]

        def f(x):
            return x - d0 - np.sum(g2 / (x - etas))

        step = max(1.0, 0.1 * span if span > 0 else 1.0)
        lo = min(etas[0], d0) - step
        while f(lo) >= 0.0:
            step *= 2.0
            lo = min(etas[0], d0) - step
        step = max(1.0, 0.1 * span if span > 0 else 1.0)
        hi = max(etas[-1], d0) + step
        while f(hi) <= 0.0:
            step *= 2.0
            hi = max(etas[-1], d0) + step
        self.lams = secular_roots(d0, etas, g2, lo, hi)
        self.weights = arrow_weights(etas, g2, self.lams)

    def survival(self, ts):
        """<d| exp(-iHt) |d> over the block's own eigenbasis."""
        return phase_sum(self.lams, self.weights.astype(np.complex128), ts)

    def bin_matrix(self, rows):
        """Apex-weighted eigenvector components on the selected bins,
        M[i, k] = v_k[i] * v_k[apex] = g_i w_k / (lam_k - eta_i)."""
        if self._vec is not None:
            return self._vec[1 + rows, :] * self._vec[0, :][None, :]
        with np.errstate(divide="ignore", invalid="ignore"):
            m = (self.g[rows, None] * self.weights[None, :]
                 / (self.lams[None, :] - self.etas[rows, None]))
        # eigenvalues pinned to a bin energy at double resolution carry zero
        # apex weight; their columns contribute nothing
        return np.where(np.isfinite(m), m, 0.0)


def evolve_oracle(model, grid, solver="secular"):
    """Exact evolution of the discretized model; returns a Trajectory."""
    if model.n_bins > _MAX_BINS:
        raise ValueError(f"n_bins={model.n_bins} exceeds the dense-solve guard "
                         f"({_MAX_BINS})")
    params = model.params
    ts = grid.times()
    # block_b's bin energies carry the +eps of the |+,eta> product states
    block_a = _BlockSystem(model.level_a, model.bin_energies,
                           model.bin_couplings_a, solver)
    block_b = _BlockSystem(model.level_b, model.bin_energies + params.epsilon,
                           model.bin_couplings_b, solver)
    u_a = block_a.survival(ts)
    u_b = block_b.survival(ts)
    rho_pp = 0.5 * (1.0 + np.abs(u_a) ** 2 - np.abs(u_b) ** 2)
    rho_pm = 0.5 * u_a * np.conj(u_b)

    meta = {
        "method": "oracle",
        "n_bins": model.n_bins,
        "recurrence_time": model.recurrence_time,
        "completeness": (float(np.sum(block_a.weights)),
                         float(np.sum(block_b.weights))),
        "topology": params.topology,
    }

    if (params.topology == Topology.SINGLE_CONTINUUM
            and block_a.coupled and block_b.coupled):
        rho_pm = rho_pm + 0.5 * _recorrelation_sum(block_a, block_b, ts)

    return Trajectory(t=ts, rho_pp=rho_pp, rho_pm=rho_pm, meta=meta)


def _recorrelation_sum(block_a, block_b, ts):
    """sum_i beta_i(t) conj(alpha_i(t)) over bins coupled in both blocks.

    alpha_i(t) = sum_k M_a[i,k] exp(-i lam_k t) with the analytic arrow
    eigenvector components; evaluated in row chunks to bound memory.
    """
    common, ia, ib = np.intersect1d(block_a.keep, block_b.keep,
                                    return_indices=True)
    if common.size == 0:
        return np.zeros(ts.shape[0], dtype=np.complex128)
    # contiguous real/imag phase blocks keep the chunk products on the BLAS path
    arg_a = np.outer(block_a.lams, ts)
    arg_b = np.outer(block_b.lams, ts)
    cos_a, sin_a = np.cos(arg_a), np.sin(arg_a)
    cos_b, sin_b = np.cos(arg_b), np.sin(arg_b)
    out = np.zeros(ts.shape[0], dtype=np.complex128)
    for start in range(0, common.size, _REC_CHUNK):
        ra = ia[start:start + _REC_CHUNK]
        rb = ib[start:start + _REC_CHUNK]
        ma = block_a.bin_matrix(ra)
        mb = block_b.bin_matrix(rb)
        alpha = (ma @ cos_a) - 1j * (ma @ sin_a)
        beta = (mb @ cos_b) - 1j * (mb @ sin_b)
        out += np.sum(beta * np.conj(alpha), axis=0)
    return out
