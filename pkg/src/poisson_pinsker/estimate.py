"""Empirical mean function and its Pinsker-type shrinkage in the cosine basis."""

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _kernels
from .model import ModelError, series_eval
from .simulate import FLOAT_FMT, pooled_events, sidecar_path


def empirical_mean_eval(obs, t):
    """(1/n) * sum_j X_j(t)."""
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < 0) or np.any(t_arr > obs.tau):
        raise ModelError(f"time outside [0, {obs.tau}]")
    events = pooled_events(obs)
    out = np.searchsorted(events, t_arr, side="right") / obs.n
    return float(out) if out.ndim == 0 else out


def coeffs_from_events(events, n, tau, L_max):
    """Exact cosine coefficients of the step function (1/n) sum 1{t_i <= t}.

    Integration by parts turns each coefficient into a sum over events, so no
    quadrature is involved.
    """
    events = np.asarray(events, dtype=float)
    out = np.empty(L_max + 1)
    out[0] = math.fsum(tau - events) / (n * math.sqrt(tau))
    if L_max > 0:
        l = np.arange(1, L_max + 1)
        s = _kernels.sine_sums(events, L_max, tau)
        out[1:] = -(1.0 / n) * math.sqrt(2.0 / tau) * (tau / (np.pi * l)) * s
    return out


@dataclass(frozen=True, eq=False)
class SpectralEstimate:
    coeffs: np.ndarray
    tau: float
    n: int
    kind: str
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float)
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        if self.kind not in ("empirical", "pinsker"):
            raise ModelError(f"unknown estimate kind {self.kind!r}")

    def __call__(self, t):
        return series_eval(self.coeffs, t, self.tau)


def empirical_coeffs(obs, L_max):
    if L_max < 0:
        raise ModelError("L_max must be >= 0")
    c = coeffs_from_events(pooled_events(obs), obs.n, obs.tau, int(L_max))
    return SpectralEstimate(c, obs.tau, obs.n, "empirical")


def pinsker_bandwidth(m, R, S, tau, n):
    """[(S / (n R)) (tau / pi) m / ((2m-1)(m-1))]^(m / (2m-1))."""
    if int(m) != m or m < 2:
        raise ModelError("m must be an integer >= 2")
    if not (R > 0 and S > 0 and tau > 0) or n < 1:
        raise ModelError("R, S, tau must be positive and n >= 1")
    base = (S / (n * R)) * (tau / math.pi) * m / ((2 * m - 1) * (m - 1))
    return base ** (m / (2 * m - 1))


def cutoff(alpha, tau, m):
    """Real cutoff (tau/pi) alpha^(-1/m); weights vanish beyond its floor."""
    if not alpha > 0:
        raise ModelError("alpha must be positive")
    return (tau / math.pi) * alpha ** (-1.0 / m)


def shrink_weights(alpha, m, tau, L_max):
    """Weights 1 at l = 0 and (1 - (pi l / tau)^m alpha)_+ for l = 1..L_max."""
    l = np.arange(L_max + 1, dtype=float)
    w = np.maximum(0.0, 1.0 - (np.pi * l / tau) ** m * alpha)
    w[0] = 1.0
    return w


@dataclass(frozen=True, eq=False)
class EstimatorConfig:
    m: int
    R: float
    S: float
    tau: float
    n: int
    alpha: float
    N: float
    weights: np.ndarray

    @classmethod
    def build(cls, m, R, S, tau, n):
        alpha = pinsker_bandwidth(m, R, S, tau, n)
        N = cutoff(alpha, tau, m)
        w = shrink_weights(alpha, m, tau, int(math.floor(N)))
        w.setflags(write=False)
        return cls(int(m), float(R), float(S), float(tau), int(n), alpha, N, w)

    @property
    def last_index(self):
        return self.weights.size - 1

    def weight(self, l):
        """Weight at any index, zero past the cutoff."""
        l = np.asarray(l)
        out = np.where(l <= self.last_index, self.weights[np.minimum(l, self.last_index)], 0.0)
        return float(out) if out.ndim == 0 else out

    def to_dict(self):
        return {"m": self.m, "R": self.R, "S": self.S, "tau": self.tau, "n": self.n,
                "alpha": self.alpha, "N": self.N}


def plug_in_mass(obs):
    """Lambda_hat_n(tau): the empirical total mass, for exploratory use."""
    return sum(len(p) for p in obs.paths) / obs.n


def pinsker_estimate(emp, config):
    k = config.last_index
    if emp.coeffs.size < k + 1:
        raise ModelError(
            f"empirical estimate has {emp.coeffs.size} coefficients, need {k + 1}"
        )
    if emp.n != config.n or abs(emp.tau - config.tau) > 1e-12 * config.tau:
        raise ModelError("estimate and configuration disagree on n or tau")
    coeffs = emp.coeffs[: k + 1] * config.weights
    return SpectralEstimate(coeffs, emp.tau, emp.n, "pinsker", meta=config.to_dict())


def write_estimate(est, path, extra=None):
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["l", "coefficient"])
        for l, c in enumerate(est.coeffs):
            w.writerow([l, format(c, FLOAT_FMT)])
    meta = {"kind": est.kind, "n": est.n, "tau": est.tau, **est.meta}
    if extra:
        meta.update(extra)
    with open(sidecar_path(path), "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def read_estimate(path):
    path = Path(path)
    with open(sidecar_path(path)) as fh:
        meta = json.load(fh)
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        if next(r, None) != ["l", "coefficient"]:
            raise ModelError("bad estimate header")
        rows = [(int(a), float(b)) for a, b in r]
    coeffs = np.zeros(len(rows))
    for l, c in rows:
        coeffs[l] = c
    kind, n, tau = meta.pop("kind"), int(meta.pop("n")), float(meta.pop("tau"))
    return SpectralEstimate(coeffs, tau, n, kind, meta=meta)
