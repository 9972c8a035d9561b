"""Hot numeric kernels with a numba path and a pure-numpy fallback.

The numba path is used when numba imports cleanly and the environment
variable ``POISSON_PINSKER_DISABLE_NUMBA`` is unset (or "0"). Both paths
are always importable as ``numba_impl`` / ``numpy_impl`` so they can be
compared directly.
"""

import os

import numpy as np

ENV_FLAG = "POISSON_PINSKER_DISABLE_NUMBA"

# numpy fallback: chunk size bounding the (events x frequencies) temporary
_CHUNK = 1 << 20
# numba sine_sums: recompute sin/cos directly every this many harmonics
_ANCHOR = 64


def _np_cosine_series(theta, t, tau):
    t = np.asarray(t, dtype=np.float64)
    out = np.full(t.shape, theta[0] / np.sqrt(tau))
    if theta.size > 1:
        l = np.arange(1, theta.size, dtype=np.float64)
        phase = np.multiply.outer(t, l) * (np.pi / tau)
        out = out + np.sqrt(2.0 / tau) * (np.cos(phase) @ theta[1:])
    return out


def _np_intensity_series(theta, t, tau):
    t = np.asarray(t, dtype=np.float64)
    if theta.size < 2:
        return np.zeros(t.shape)
    l = np.arange(1, theta.size, dtype=np.float64)
    w = l * (np.pi / tau)
    phase = np.multiply.outer(t, w)
    return -np.sqrt(2.0 / tau) * (np.sin(phase) @ (theta[1:] * w))


def _np_sine_sums(x, L, tau):
    x = np.asarray(x, dtype=np.float64)
    out = np.zeros(L)
    if L == 0 or x.size == 0:
        return out
    l = np.arange(1, L + 1, dtype=np.float64)
    step = max(1, _CHUNK // L)
    for start in range(0, x.size, step):
        chunk = x[start:start + step]
        out += np.sin(np.multiply.outer(chunk, l) * (np.pi / tau)).sum(axis=0)
    return out


numpy_impl = {
    "cosine_series": _np_cosine_series,
    "intensity_series": _np_intensity_series,
    "sine_sums": _np_sine_sums,
}


def _build_numba():
    from numba import njit

    @njit(cache=True, nogil=True)
    def cosine_series(theta, t, tau):
        c0 = theta[0] / np.sqrt(tau)
        s2 = np.sqrt(2.0 / tau)
        out = np.empty(t.size)
        for i in range(t.size):
            acc = 0.0
            for l in range(1, theta.size):
                acc += theta[l] * np.cos(np.pi * l * t[i] / tau)
            out[i] = c0 + s2 * acc
        return out

    @njit(cache=True, nogil=True)
    def intensity_series(theta, t, tau):
        s2 = np.sqrt(2.0 / tau)
        out = np.empty(t.size)
        for i in range(t.size):
            acc = 0.0
            for l in range(1, theta.size):
                w = np.pi * l / tau
                acc += theta[l] * w * np.sin(w * t[i])
            out[i] = -s2 * acc
        return out

    @njit(cache=True, nogil=True)
    def sine_sums(x, L, tau):
        # rotate (cos, sin) by the event's base angle; re-anchor every
        # _ANCHOR steps so rounding drift stays at a few ulps
        out = np.zeros(L)
        for i in range(x.size):
            a = np.pi * x[i] / tau
            ca, sa = np.cos(a), np.sin(a)
            c, s = ca, sa
            for l in range(1, L + 1):
                if l % _ANCHOR == 0:
                    c, s = np.cos(l * a), np.sin(l * a)
                out[l - 1] += s
                c, s = c * ca - s * sa, s * ca + c * sa
        return out

    return {
        "cosine_series": cosine_series,
        "intensity_series": intensity_series,
        "sine_sums": sine_sums,
    }


try:
    numba_impl = _build_numba()
except ImportError:  # pragma: no cover - numba is a hard dependency in practice
    numba_impl = None


def _use_numba():
    flag = os.environ.get(ENV_FLAG, "").strip().lower()
    return numba_impl is not None and flag in ("", "0", "false", "no")


BACKEND = "numba" if _use_numba() else "numpy"
_impl = numba_impl if BACKEND == "numba" else numpy_impl


def cosine_series(theta, t, tau):
    """Evaluate sum_l theta_l phi_l(t) at every entry of ``t``."""
    theta = np.ascontiguousarray(theta, dtype=np.float64)
    t = np.ascontiguousarray(np.atleast_1d(t), dtype=np.float64)
    return _impl["cosine_series"](theta, t, float(tau))


def intensity_series(theta, t, tau):
    """Term-wise derivative of the cosine series ``theta`` at ``t``."""
    theta = np.ascontiguousarray(theta, dtype=np.float64)
    t = np.ascontiguousarray(np.atleast_1d(t), dtype=np.float64)
    return _impl["intensity_series"](theta, t, float(tau))


def sine_sums(x, L, tau):
    """Return ``s[l-1] = sum_i sin(pi * l * x_i / tau)`` for ``l = 1..L``."""
    x = np.ascontiguousarray(x, dtype=np.float64)
    return _impl["sine_sums"](x, int(L), float(tau))
