"""Hot numeric kernels, in numba and pure-numpy versions.

Three operations dominate runtime:

* ``phase_sum``      S(t_j) = sum_k c_k exp(-i E_k t_j), the workhorse behind
                     every spectral Fourier transform and eigenbasis evolution;
* ``secular_roots``  all eigenvalues of a symmetric arrow matrix
                     [[d0, g^T], [g, diag(etas)]] via bisection on the secular
                     function f(x) = x - d0 - sum_i g_i^2/(x - eta_i), one root
                     per interlacing interval;
* ``arrow_weights``  squared first components of the arrow eigenvectors,
                     w_k = 1 / (1 + sum_i g_i^2/(lam_k - eta_i)^2).

The numpy fallbacks are algorithmically identical (same bisection sequence,
same panelization) so both backends produce the same numbers to the last few
ulp; see bench/benchmark_kernels.py for the speed comparison.
"""

import numpy as np

from . import _backend

_CHUNK = 1 << 22  # max elements of a temporary (times x energies) block


# ---------------------------------------------------------------------------
# pure-numpy implementations

def phase_sum_numpy(energies, coeffs, times):
    energies = np.asarray(energies, dtype=np.float64)
    coeffs = np.asarray(coeffs, dtype=np.complex128)
    times = np.asarray(times, dtype=np.float64)
    out = np.empty(times.shape[0], dtype=np.complex128)
    step = max(1, _CHUNK // max(1, energies.shape[0]))
    for start in range(0, times.shape[0], step):
        tc = times[start:start + step]
        out[start:start + step] = np.exp(-1j * np.outer(tc, energies)) @ coeffs
    return out


def secular_roots_numpy(d0, etas, g2, lo0, hi0, n_iter=72):
    n = etas.shape[0]
    lo = np.empty(n + 1)
    hi = np.empty(n + 1)
    lo[0], lo[1:] = lo0, etas
    hi[:n], hi[n] = etas, hi0
    roots = np.empty(n + 1)
    step = max(1, _CHUNK // max(1, n))
    with np.errstate(divide="ignore", invalid="ignore"):
        for start in range(0, n + 1, step):
            l = lo[start:start + step].copy()
            h = hi[start:start + step].copy()
            for _ in range(n_iter):
                mid = 0.5 * (l + h)
                s = mid - d0 - np.sum(g2 / (mid[:, None] - etas[None, :]), axis=1)
                neg = s < 0.0
                l = np.where(neg, mid, l)
                h = np.where(neg, h, mid)
            roots[start:start + step] = 0.5 * (l + h)
    return roots


def arrow_weights_numpy(etas, g2, lams):
    out = np.empty(lams.shape[0])
    step = max(1, _CHUNK // max(1, etas.shape[0]))
    with np.errstate(divide="ignore"):
        for start in range(0, lams.shape[0], step):
            lc = lams[start:start + step]
            s = np.sum(g2 / (lc[:, None] - etas[None, :]) ** 2, axis=1)
            out[start:start + step] = 1.0 / (1.0 + s)
    return out


# ---------------------------------------------------------------------------
# numba implementations

if _backend.HAVE_NUMBA:
    from numba import njit, prange

    @njit(cache=True, parallel=True)
    def phase_sum_numba(energies, coeffs, times):  # pragma: no cover - jitted
        out = np.empty(times.shape[0], dtype=np.complex128)
        for j in prange(times.shape[0]):
            t = times[j]
            acc = 0.0 + 0.0j
            for k in range(energies.shape[0]):
                acc += coeffs[k] * np.exp(-1j * energies[k] * t)
            out[j] = acc
        return out

    @njit(cache=True, parallel=True)
    def secular_roots_numba(d0, etas, g2, lo0, hi0, n_iter=72):  # pragma: no cover
        n = etas.shape[0]
        roots = np.empty(n + 1)
        for k in prange(n + 1):
            lo = lo0 if k == 0 else etas[k - 1]
            hi = hi0 if k == n else etas[k]
            for _ in range(n_iter):
                mid = 0.5 * (lo + hi)
                if mid <= lo or mid >= hi:
                    break
                s = mid - d0
                for i in range(n):
                    s -= g2[i] / (mid - etas[i])
                if s < 0.0:
                    lo = mid
                else:
                    hi = mid
            roots[k] = 0.5 * (lo + hi)
        return roots

    @njit(cache=True, parallel=True)
    def arrow_weights_numba(etas, g2, lams):  # pragma: no cover - jitted
        out = np.empty(lams.shape[0])
        for k in prange(lams.shape[0]):
            s = 0.0
            for i in range(etas.shape[0]):
                d = lams[k] - etas[i]
                s += g2[i] / (d * d)
            out[k] = 1.0 / (1.0 + s)
        return out
else:  # pragma: no cover - environment without numba
    phase_sum_numba = None
    secular_roots_numba = None
    arrow_weights_numba = None


# ---------------------------------------------------------------------------
# dispatchers

def phase_sum(energies, coeffs, times):
    """sum_k coeffs[k] * exp(-1j * energies[k] * t) for every t."""
    energies = np.ascontiguousarray(energies, dtype=np.float64)
    coeffs = np.ascontiguousarray(coeffs, dtype=np.complex128)
    times = np.ascontiguousarray(times, dtype=np.float64)
    if _backend.USE_NUMBA:
        return phase_sum_numba(energies, coeffs, times)
    return phase_sum_numpy(energies, coeffs, times)


def secular_roots(d0, etas, g2, lo0, hi0, n_iter=72):
    """All n+1 eigenvalues of the arrow matrix [[d0, g^T], [g, diag(etas)]].

    ``etas`` must be strictly increasing and every ``g2`` entry positive;
    ``lo0``/``hi0`` must already bracket the extreme roots (secular function
    negative at lo0, positive at hi0).
    """
    etas = np.ascontiguousarray(etas, dtype=np.float64)
    g2 = np.ascontiguousarray(g2, dtype=np.float64)
    if _backend.USE_NUMBA:
        return secular_roots_numba(float(d0), etas, g2, float(lo0), float(hi0), n_iter)
    return secular_roots_numpy(float(d0), etas, g2, float(lo0), float(hi0), n_iter)


def arrow_weights(etas, g2, lams):
    """Squared overlap of each arrow eigenvector with the apex basis state."""
    etas = np.ascontiguousarray(etas, dtype=np.float64)
    g2 = np.ascontiguousarray(g2, dtype=np.float64)
    lams = np.ascontiguousarray(lams, dtype=np.float64)
    if _backend.USE_NUMBA:
        return arrow_weights_numba(etas, g2, lams)
    return arrow_weights_numpy(etas, g2, lams)
