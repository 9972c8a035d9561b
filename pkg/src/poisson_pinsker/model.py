"""Cosine basis, finite cosine-series mean functions and smoothness classes."""

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _kernels
from .quadrature import DEFAULT_NODES, simpson_integral

DEFAULT_GRID = 4097


class ModelError(ValueError):
    """Raised for malformed models or out-of-domain arguments."""


def boundary_tolerance(S):
    return 1e-9 * max(1.0, abs(S))


@dataclass(frozen=True)
class CosineBasis:
    """Orthonormal cosine system on [0, tau]."""

    tau: float = 1.0

    def __post_init__(self):
        if not self.tau > 0:
            raise ModelError("tau must be positive")

    def __call__(self, l, t):
        return basis_eval(l, t, self.tau)

    def frequency(self, l):
        return np.pi * np.asarray(l) / self.tau


def _check_time(t, tau):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0) or np.any(t > tau) or np.any(np.isnan(t)):
        raise ModelError(f"time outside [0, {tau}]")
    return t


def basis_eval(l, t, tau=1.0):
    """phi_0 = 1/sqrt(tau); phi_l(t) = sqrt(2/tau) cos(pi l t / tau)."""
    if int(l) != l or l < 0:
        raise ModelError("basis index must be a non-negative integer")
    if not tau > 0:
        raise ModelError("tau must be positive")
    t = _check_time(t, tau)
    if l == 0:
        out = np.full(t.shape, 1.0 / math.sqrt(tau))
    else:
        out = math.sqrt(2.0 / tau) * np.cos(np.pi * l * t / tau)
    return float(out) if out.ndim == 0 else out


def series_eval(theta, t, tau=1.0):
    """Sum of ``theta[l] * phi_l(t)``; scalar in, scalar out."""
    theta = np.asarray(theta, dtype=float)
    if theta.ndim != 1 or theta.size == 0 or not np.all(np.isfinite(theta)):
        raise ModelError("theta must be a finite non-empty vector")
    t = _check_time(t, tau)
    out = _kernels.cosine_series(theta, t.ravel(), tau).reshape(t.shape)
    return float(out) if out.ndim == 0 else out


def sobolev_functional(theta, m, tau=1.0):
    """sum_{l>=1} (pi l / tau)^(2m) theta_l^2."""
    if m < 1:
        raise ModelError("m must be >= 1")
    theta = np.asarray(theta, dtype=float)
    w = (np.pi * np.arange(1, theta.size) / tau) ** (2 * m)
    return math.fsum(w * theta[1:] ** 2)


def _frozen(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class IntensityModel:
    """Mean function given as a finite cosine series on [0, tau].

    ``S`` defaults to the value of the series at ``tau``. ``lambda_max`` is
    the coefficient-sum bound sqrt(2/tau) * sum |theta_l| pi l / tau, which
    dominates the intensity everywhere.
    """

    tau: float
    theta: np.ndarray
    S: float = None
    name: str = None
    lambda_max: float = field(init=False)

    def __post_init__(self):
        if not self.tau > 0:
            raise ModelError("tau must be positive")
        theta = _frozen(self.theta)
        if theta.ndim != 1 or theta.size == 0 or not np.all(np.isfinite(theta)):
            raise ModelError("theta must be a finite non-empty vector")
        object.__setattr__(self, "theta", theta)
        if self.S is None:
            object.__setattr__(self, "S", float(self.mean(self.tau)))
        object.__setattr__(self, "S", float(self.S))
        l = np.arange(1, theta.size)
        bound = math.sqrt(2.0 / self.tau) * math.fsum(np.abs(theta[1:]) * np.pi * l / self.tau)
        object.__setattr__(self, "lambda_max", bound)

    @property
    def degree(self):
        return self.theta.size - 1

    @property
    def model_id(self):
        if self.name:
            return self.name
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return "model-" + hashlib.sha256(blob).hexdigest()[:12]

    def mean(self, t):
        return series_eval(self.theta, t, self.tau)

    def intensity(self, t):
        return intensity_eval(self, t)

    def coefficient(self, l):
        """Cosine coefficient of the mean function (zero past the degree)."""
        l = np.asarray(l)
        padded = np.where(l <= self.degree, self.theta[np.minimum(l, self.degree)], 0.0)
        return float(padded) if padded.ndim == 0 else padded

    def integral(self):
        """Integral of the mean function over one period."""
        return self.theta[0] * math.sqrt(self.tau)

    def to_dict(self):
        return {"tau": self.tau, "theta": [float(x) for x in self.theta], "S": self.S}


@dataclass(frozen=True)
class EllipsoidSpec:
    m: int
    R: float
    S: float
    tau: float = 1.0

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 2:
            raise ModelError("m must be an integer >= 2")
        if not self.R > 0:
            raise ModelError("R must be positive")
        if not self.S > 0:
            raise ModelError("S must be positive")
        if not self.tau > 0:
            raise ModelError("tau must be positive")
        object.__setattr__(self, "m", int(self.m))


def intensity_eval(model, t):
    """Intensity (derivative of the mean function) at ``t``."""
    t = _check_time(t, model.tau)
    out = _kernels.intensity_series(model.theta, t.ravel(), model.tau).reshape(t.shape)
    return float(out) if out.ndim == 0 else out


def cosine_integral(model, k):
    """c_k = integral over [0, tau] of cos(pi k t / tau) * lambda(t), closed form.

    For k = 0 this is the mass Lambda(tau) - Lambda(0).
    """
    k = np.asarray(k, dtype=float)
    scalar = k.ndim == 0
    k = np.atleast_1d(k)
    j = np.arange(1, model.theta.size, dtype=float)
    th = model.theta[1:]
    parity = 1.0 - (-1.0) ** (j[None, :] + k[:, None])
    denom = j[None, :] ** 2 - k[:, None] ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(denom != 0, th * j**2 * parity / denom, 0.0)
    out = -math.sqrt(2.0 / model.tau) * terms.sum(axis=1)
    return float(out[0]) if scalar else out


def intensity_cosine_coeff(model, l, method="exact", nodes=DEFAULT_NODES):
    """Cosine coefficient lambda_l of the intensity.

    ``method="exact"`` uses the closed form available for finite series;
    ``method="quadrature"`` integrates lambda * phi_l by composite Simpson.
    """
    if int(l) != l or l < 0:
        raise ModelError("l must be a non-negative integer")
    if method == "quadrature":
        return simpson_integral(
            lambda t: intensity_eval(model, t) * basis_eval(l, t, model.tau),
            0.0, model.tau, nodes,
        )
    if method != "exact":
        raise ModelError(f"unknown method {method!r}")
    c = cosine_integral(model, l)
    return c / math.sqrt(model.tau) if l == 0 else math.sqrt(2.0 / model.tau) * c


def intensity_sobolev_functional(model, m, L_max=1000):
    """Partial sum of (pi l / tau)^(2(m-1)) lambda_l^2 for l = 1..L_max.

    Diagnostic only: for a fixed basis this is not the same quantity as
    ``sobolev_functional`` of the mean function.
    """
    l = np.arange(1, L_max + 1)
    lam = math.sqrt(2.0 / model.tau) * cosine_integral(model, l)
    return math.fsum((np.pi * l / model.tau) ** (2 * (m - 1)) * lam**2)


# Nonnegativity certification. Every cosine-series mean function has an
# intensity of the form sum_j b_j sin(j u), u = pi t / tau, which vanishes at
# both ends, so a plain Lipschitz argument can never certify it. We divide out
# sin(u) and certify g(u) = sum_j b_j U_{j-1}(cos u) instead.


def _sine_weights(model):
    j = np.arange(1, model.theta.size, dtype=float)
    return -math.sqrt(2.0 / model.tau) * (np.pi * j / model.tau) * model.theta[1:]


def _reduced_intensity(b, t, tau):
    x = np.cos(np.pi * np.asarray(t, dtype=float) / tau)
    u_prev, u_cur = np.zeros_like(x), np.ones_like(x)
    out = np.zeros_like(x)
    for bj in b:
        out += bj * u_cur
        u_prev, u_cur = u_cur, 2.0 * x * u_cur - u_prev
    return out


def _reduced_lipschitz(b, tau):
    j = np.arange(1, b.size + 1, dtype=float)
    return (np.pi / tau) * math.fsum(np.abs(b) * (j - 1) * j * (j + 1) / 3.0)


def _certify_nonnegative(model, grid_size, max_depth=40, budget=2_000_000):
    b = _sine_weights(model)
    if b.size == 0 or not np.any(b):
        return True, True
    lip = _reduced_lipschitz(b, model.tau)
    t = np.linspace(0.0, model.tau, grid_size)
    g = _reduced_intensity(b, t, model.tau)
    if np.any(g < 0):
        return False, False
    lo, hi, glo, ghi = t[:-1], t[1:], g[:-1], g[1:]
    spent = grid_size
    for _ in range(max_depth):
        bad = 0.5 * (glo + ghi) - 0.5 * lip * (hi - lo) < 0
        if not np.any(bad):
            return True, True
        lo, hi, glo, ghi = lo[bad], hi[bad], glo[bad], ghi[bad]
        mid = 0.5 * (lo + hi)
        gmid = _reduced_intensity(b, mid, model.tau)
        spent += mid.size
        if np.any(gmid < 0):
            return False, False
        if spent > budget:
            break
        lo, hi = np.concatenate((lo, mid)), np.concatenate((mid, hi))
        glo, ghi = np.concatenate((glo, gmid)), np.concatenate((gmid, ghi))
    return True, False


@dataclass(frozen=True)
class MembershipVerdict:
    member: bool
    starts_at_zero: bool
    mass_matches: bool
    nonnegative: bool
    within_radius: bool
    reasons: tuple
    mean_at_zero: float
    mean_at_tau: float
    intensity_min_grid: float
    sobolev: float
    nonnegative_certified: bool

    def to_dict(self):
        d = dict(self.__dict__)
        d["reasons"] = list(self.reasons)
        return d


def validate_model(model, spec, grid_size=DEFAULT_GRID):
    """Check Lambda(0)=0, Lambda(tau)=S, lambda >= 0 and the Sobolev radius.

    Failures are reported in the verdict, never raised.
    """
    if grid_size < 2:
        raise ModelError("grid_size must be >= 2")
    tol = boundary_tolerance(spec.S)
    at0 = series_eval(model.theta, 0.0, model.tau)
    at_tau = series_eval(model.theta, model.tau, model.tau)
    grid = np.linspace(0.0, model.tau, grid_size)
    lam_min = float(np.min(intensity_eval(model, grid)))
    grid_ok, certified = _certify_nonnegative(model, grid_size)
    q = sobolev_functional(model.theta, spec.m, model.tau)

    starts = abs(at0) <= tol
    mass = abs(at_tau - spec.S) <= tol and abs(model.tau - spec.tau) <= 1e-12 * spec.tau
    within = q <= spec.R
    reasons = []
    if not starts:
        reasons.append("boundary: Lambda(0) != 0")
    if not mass:
        reasons.append("boundary: Lambda(tau) != S")
    if not grid_ok:
        reasons.append("negativity")
    elif not certified:
        reasons.append("negativity: not certified")
    if not within:
        reasons.append("sobolev excess")
    return MembershipVerdict(
        member=not reasons,
        starts_at_zero=starts,
        mass_matches=mass,
        nonnegative=grid_ok and certified,
        within_radius=within,
        reasons=tuple(reasons),
        mean_at_zero=at0,
        mean_at_tau=at_tau,
        intensity_min_grid=lam_min,
        sobolev=q,
        nonnegative_certified=certified,
    )


def raised_cosine(S=5.0, tau=1.0):
    """Lambda(t) = (S/2)(1 - cos(pi t / tau))."""
    theta = [0.5 * S * math.sqrt(tau), -0.5 * S * math.sqrt(tau / 2.0)]
    return IntensityModel(tau=tau, theta=theta, name="raised-cosine")


def two_harmonic(S=5.0, tau=1.0):
    """a(1 - cos u) + b(1 - cos 3u) with b = a/9, u = pi t / tau.

    The intensity is proportional to sin u (2 - (4/3) sin^2 u) >= 0.
    """
    a = 0.5 * S * 9.0 / 10.0
    b = a / 9.0
    r = math.sqrt(tau / 2.0)
    theta = [(a + b) * math.sqrt(tau), -a * r, 0.0, -b * r]
    return IntensityModel(tau=tau, theta=theta, name="two-harmonic")


BUILTIN_MODELS = {
    "raised-cosine": raised_cosine,
    "two-harmonic": two_harmonic,
}


def model_from_dict(d, name=None):
    unknown = set(d) - {"tau", "theta", "S", "name"}
    if unknown:
        raise ModelError(f"unknown model keys: {sorted(unknown)}")
    try:
        tau = float(d["tau"])
        theta = [float(x) for x in d["theta"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelError(f"malformed model: {exc}") from None
    model = IntensityModel(tau=tau, theta=theta, name=d.get("name", name))
    if "S" in d:
        stated = float(d["S"])
        if abs(stated - model.S) > boundary_tolerance(stated):
            raise ModelError(
                f"stated S={stated!r} disagrees with the series value {model.S!r}"
            )
    return model


def load_model(path):
    path = Path(path)
    with open(path) as fh:
        d = json.load(fh)
    return model_from_dict(d, name=d.get("name", path.stem))


def save_model(model, path):
    with open(path, "w") as fh:
        json.dump(model.to_dict(), fh, indent=2)
        fh.write("\n")
