"""Deterministic risk engine and Monte Carlo MISE harness.

Variance of an empirical cosine coefficient, l >= 1:

    sigma_l^2 = (1/n) int (int_t^tau phi_l)^2 dLambda
              = (1/(n tau)) (tau / (pi l))^2 [Lambda(tau) - c_{2l}],

with c_k = int cos(pi k t / tau) lambda(t) dt. Infinite tails of
sum sigma_l^2 are summed in closed form with polygamma functions, so every
deterministic quantity below is exact up to rounding.
"""

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np
from scipy.special import polygamma, psi

from . import _kernels
from .estimate import EstimatorConfig, coeffs_from_events, pinsker_bandwidth
from .model import IntensityModel, ModelError, cosine_integral, series_eval, sobolev_functional
from .quadrature import piecewise_gauss, simpson_integral
from .simulate import FLOAT_FMT, _thin, sample_pooled, substream


class NumericalError(ArithmeticError):
    """A non-finite or inconsistent numeric result."""


def _finite(x, what):
    if not np.all(np.isfinite(x)):
        raise NumericalError(f"non-finite {what}")
    return x


def sigma_sq(model, l, n, scaled_cosine=False):
    """Variance of the l-th empirical cosine coefficient, l >= 1.

    ``scaled_cosine=True`` returns (1/n)(tau/(pi l))^2 [S - (2/tau) c_{2l}], a
    variant kept only for comparison; it does not match the variance.
    """
    l_arr = np.asarray(l)
    if np.any(l_arr < 1) or np.any(l_arr != np.floor(l_arr)):
        raise ModelError("sigma_sq is defined for integer l >= 1")
    if n < 1:
        raise ModelError("n must be >= 1")
    l_arr = l_arr.astype(float)
    tau = model.tau
    mass = cosine_integral(model, 0)
    c2l = cosine_integral(model, 2 * l_arr)
    scale = (tau / (np.pi * l_arr)) ** 2 / n
    if scaled_cosine:
        out = scale * (mass - (2.0 / tau) * c2l)
    else:
        out = scale * (mass - c2l) / tau
    return float(out) if np.ndim(out) == 0 else out


def sigma_sq_quadrature(intensity, l, n, tau=1.0, nodes=2**14 + 1):
    """Same closed form as ``sigma_sq`` for an arbitrary intensity callable,
    with both integrals done by composite Simpson."""
    if l < 1:
        raise ModelError("sigma_sq is defined for l >= 1")
    mass = simpson_integral(intensity, 0.0, tau, nodes)
    c2l = simpson_integral(lambda t: np.cos(2 * np.pi * l * t / tau) * intensity(t),
                           0.0, tau, nodes)
    return (tau / (np.pi * l)) ** 2 * (mass - c2l) / (n * tau)


def variance_l0(model, n):
    """Variance of the zeroth empirical coefficient, (1/(n tau)) int (tau-t)^2 dLambda."""
    tau = model.tau
    j = np.arange(1, model.theta.size, dtype=float)
    # int (tau - t) phi_j dt in closed form
    moments = math.sqrt(2.0 / tau) * (tau / (np.pi * j)) ** 2 * (1.0 - (-1.0) ** j)
    first = model.theta[0] * tau**1.5 / 2.0 + math.fsum(model.theta[1:] * moments)
    at0 = series_eval(model.theta, 0.0, tau)
    return (2.0 * first - tau**2 * at0) / (n * tau)


def _inverse_square_tail(L):
    """sum_{l > L} 1 / l^2."""
    return float(polygamma(1, L + 1))


def _cosine_tail(model, L):
    """sum_{l > L} c_{2l} / l^2 in closed form (needs L + 1 > degree / 2)."""
    acc = []
    for j in range(1, model.theta.size, 2):
        th = model.theta[j]
        if th == 0.0:
            continue
        a = j / 2.0
        if L + 1 - a <= 0:
            raise ModelError("tail start must exceed half the model degree")
        inner = _inverse_square_tail(L) - (psi(L + 1 + a) - psi(L + 1 - a)) / j
        acc.append(th * inner)
    return -2.0 * math.sqrt(2.0 / model.tau) * math.fsum(acc)


def tail_sigma_sq(model, n, L):
    """sum_{l > L} sigma_l^2, exact."""
    tau = model.tau
    mass = cosine_integral(model, 0)
    return (tau / math.pi) ** 2 * (mass * _inverse_square_tail(L) - _cosine_tail(model, L)) / (n * tau)


def excess_for_weights(model, n, weights, tail_weight=0.0):
    """E||shrunk - Lambda||^2 - E||empirical - Lambda||^2 for shrinkage
    ``weights`` (index 0 must be 1) and a constant weight past the vector."""
    weights = np.asarray(weights, dtype=float)
    if weights.size == 0 or weights[0] != 1.0:
        raise ModelError("weights[0] must be 1")
    K = weights.size - 1
    L = max(K, model.degree)
    l = np.arange(1, L + 1)
    w = np.where(l <= K, weights[np.minimum(l, K)], tail_weight)
    var = sigma_sq(model, l, n) if L > 0 else np.empty(0)
    bias = model.coefficient(l) if L > 0 else np.empty(0)
    terms = list((w**2 - 1.0) * var) + list((w - 1.0) ** 2 * bias**2)
    if tail_weight != 1.0:
        terms.append((tail_weight**2 - 1.0) * tail_sigma_sq(model, n, L))
    return _finite(math.fsum(terms), "excess")


def exact_excess(model, config):
    """Exact second-order excess of the shrinkage estimator over the empirical one."""
    if abs(model.tau - config.tau) > 1e-12 * config.tau:
        raise ModelError("model and configuration disagree on tau")
    return excess_for_weights(model, config.n, config.weights)


def third_term(model, config):
    """Part of the excess driven by the intensity's cosine coefficients:
    (1/(n tau)) sum_l (tau/(pi l))^2 (1 - K_l^2) c_{2l}."""
    K = config.last_index
    tau, n = config.tau, config.n
    L = max(K, model.degree)
    l = np.arange(1, L + 1, dtype=float)
    w = config.weight(l.astype(int))
    head = (tau / (np.pi * l)) ** 2 * (1.0 - w**2) * cosine_integral(model, 2 * l)
    tail = (tau / math.pi) ** 2 * _cosine_tail(model, L)
    return math.fsum(list(head) + [tail]) / (n * tau)


def _kernel_sum(c, m, tau):
    N = (tau / math.pi) * c ** (-1.0 / m)
    K = int(math.floor(N))
    l = np.arange(1, K + 1, dtype=float)
    w = np.maximum(0.0, 1.0 - (np.pi * l / tau) ** m * c)
    head = (tau / (np.pi * l)) ** 2 * (w**2 - 1.0)
    return math.fsum(list(head) + [-((tau / math.pi) ** 2) * _inverse_square_tail(K)])


def H_objective(c, m, R, S, tau, n):
    """(S/n) sum_{l>=1} (tau/(pi l))^2 (K_l(c)^2 - 1) + c^2 R, tail summed exactly."""
    if not c > 0:
        raise ModelError("c must be positive")
    return (S / n) * _kernel_sum(c, m, tau) + c * c * R


def argmin_H(m, R, S, tau, n, grid_points=10_000, span=10.0, center=None):
    """Brute-force minimizer of ``H_objective`` over a log grid."""
    if center is None:
        center = pinsker_bandwidth(m, R, S, tau, n)
    grid = np.geomspace(center / span, center * span, grid_points)
    values = np.array([H_objective(c, m, R, S, tau, n) for c in grid])
    return float(grid[np.argmin(values)])


def pinsker_constant(m, R, S, tau=1.0, drop_tau=False):
    """(2m-1) R [(S tau / (pi R)) m / ((2m-1)(m-1))]^(2m/(2m-1)).

    ``drop_tau=True`` drops tau from the bracket (identical when tau = 1).
    """
    if int(m) != m or m < 2:
        raise ModelError("m must be an integer >= 2")
    scale = 1.0 if drop_tau else tau
    base = (S * scale / (math.pi * R)) * m / ((2 * m - 1) * (m - 1))
    return (2 * m - 1) * R * base ** (2 * m / (2 * m - 1))


def normalized_pinsker_constant(m, R, S, tau, n):
    """(2m-1) alpha_n^2 R n^(2m/(2m-1)); algebraically free of n."""
    alpha = pinsker_bandwidth(m, R, S, tau, n)
    return (2 * m - 1) * alpha**2 * R * n ** (2 * m / (2 * m - 1))


def rate_exponent(m):
    return 2 * m / (2 * m - 1)


def third_term_max_factor(config):
    """max_l |1 - K_l^2| / (pi l / tau)^m, attained within the cutoff."""
    K = config.last_index
    l = np.arange(1, K + 2, dtype=float)
    w = config.weight(l.astype(int))
    return float(np.max((1.0 - w**2) / (np.pi * l / config.tau) ** config.m))


def third_term_bound(config):
    """Cauchy-Schwarz bound on |third_term| using the radius R:

        (2 alpha / n) * sqrt(R) * (1 / sqrt(2 tau)) * (sum_l (tau/(pi l))^2)^(1/2)
    """
    cs = math.sqrt(config.R) * config.tau / (math.sqrt(2.0 * config.tau) * math.sqrt(6.0))
    return 2.0 * config.alpha / config.n * cs


# ---------------------------------------------------------------------------
# Monte Carlo


def empirical_ise(theta, events, n, tau, coeffs=None):
    """Integrated squared error of the empirical mean function, closed form.

    int Lhat^2 = (1/n^2) sum_k (tau - t_(k)) (2k - 1) over sorted events, and
    the cross term only needs the finitely many coefficients of the truth.
    """
    events = np.sort(np.asarray(events, dtype=float))
    D = theta.size - 1
    if coeffs is None:
        coeffs = coeffs_from_events(events, n, tau, D)
    k = np.arange(1, events.size + 1)
    sq = math.fsum((tau - events) * (2 * k - 1)) / n**2
    cross = math.fsum(theta * coeffs[: D + 1])
    return sq - 2.0 * cross + math.fsum(theta**2)


def empirical_ise_quadrature(theta, events, n, tau):
    events = np.sort(np.asarray(events, dtype=float))

    def f(t):
        step = np.searchsorted(events, t, side="right") / n
        return (step - _kernels.cosine_series(theta, t, tau)) ** 2

    return piecewise_gauss(f, events, 0.0, tau)


def _rep_events(theta, tau, lambda_max, n, seed, rep, pooled):
    if pooled:
        return sample_pooled(_Lite(theta, tau, lambda_max), n, substream(seed, rep, 0))
    parts = [_thin(theta, tau, lambda_max, substream(seed, rep, j)) for j in range(n)]
    return np.sort(np.concatenate(parts), kind="stable") if parts else np.empty(0)


@dataclass
class _Lite:
    theta: np.ndarray
    tau: float
    lambda_max: float


def _mc_block(args):
    theta, tau, lambda_max, n, seed, reps, L, weights, pooled, keep = args
    D = theta.size - 1
    top = max(L, D, 0 if weights is None else weights.size - 1)
    out = []
    for rep in reps:
        ev = _rep_events(theta, tau, lambda_max, n, seed, rep, pooled)
        c = coeffs_from_events(ev, n, tau, top)
        if keep:
            out.append(c[: L + 1])
            continue
        ise_emp = empirical_ise(theta, ev, n, tau, coeffs=c)
        if weights is None:
            out.append((ise_emp, np.nan, ev.size))
            continue
        K = weights.size - 1
        full = np.zeros(max(K, D) + 1)
        full[: K + 1] = weights
        truth = np.zeros_like(full)
        truth[: D + 1] = theta
        ise_pin = math.fsum((full * c[: full.size] - truth) ** 2)
        out.append((ise_emp, ise_pin, ev.size))
    return out


def _run_reps(model, n, reps, seed, L, weights, pooled, keep, workers):
    blocks = _split(reps, workers)
    jobs = [(model.theta, model.tau, model.lambda_max, int(n), int(seed), b, L,
             weights, pooled, keep) for b in blocks]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_mc_block, jobs))
    else:
        results = [_mc_block(j) for j in jobs]
    return [r for block in results for r in block]


def _split(reps, workers):
    workers = max(1, int(workers))
    size = -(-reps // workers)
    return [range(a, min(reps, a + size)) for a in range(0, reps, size)]


def coefficient_monte_carlo(model, n, reps, seed, L_max, workers=1, pooled=False):
    """Empirical coefficients 0..L_max for each replication, shape (reps, L_max+1)."""
    rows = _run_reps(model, n, reps, seed, L_max, None, pooled, True, workers)
    return np.vstack(rows)


def _mean_se(x):
    x = np.asarray(x, dtype=float)
    mean = math.fsum(x) / x.size
    var = math.fsum((x - mean) ** 2) / (x.size - 1)
    return mean, math.sqrt(var / x.size)


@dataclass(frozen=True)
class RiskReport:
    estimator: str
    mise: float
    mise_se: float
    mise_empirical: float
    mise_empirical_se: float
    first_order: float
    mise_pinsker: float = None
    mise_pinsker_se: float = None
    excess_exact: float = None
    excess_mc: float = None
    excess_mc_se: float = None
    normalized_excess: float = None
    normalized_excess_exact: float = None
    pi_constant: float = None
    n: int = None
    reps: int = None
    seed: int = None
    pooled: bool = False
    mean_events: float = None
    quadrature_gap: float = None

    def to_dict(self):
        return asdict(self)


def mise_monte_carlo(model, n, reps, seed, config=None, workers=1, pooled=False):
    """Monte Carlo MISE of the empirical estimator, and of the shrinkage
    estimator when ``config`` is given.

    Both estimators see the same simulated data in each replication, so the
    excess estimate is a common-random-numbers difference.
    """
    if reps < 2:
        raise ModelError("reps must be >= 2")
    if n < 1:
        raise ModelError("n must be >= 1")
    weights = None if config is None else np.asarray(config.weights)
    if config is not None and config.n != n:
        raise ModelError("configuration was built for a different n")
    rows = _run_reps(model, n, reps, seed, 0, weights, pooled, False, workers)
    ise_emp = np.array([r[0] for r in rows])
    _finite(ise_emp, "integrated squared error")

    ev0 = _rep_events(model.theta, model.tau, model.lambda_max, n, seed, 0, pooled)
    gap = abs(empirical_ise_quadrature(model.theta, ev0, n, model.tau) - ise_emp[0])
    if gap > 1e-8 * max(1.0, ise_emp[0]):
        raise NumericalError(f"spectral and quadrature errors disagree by {gap:.3g}")

    m_emp, se_emp = _mean_se(ise_emp)
    first = model.integral() / n
    common = dict(n=int(n), reps=int(reps), seed=int(seed), pooled=bool(pooled),
                  mean_events=math.fsum(r[2] for r in rows) / reps, quadrature_gap=gap,
                  mise_empirical=m_emp, mise_empirical_se=se_emp, first_order=first)
    if config is None:
        return RiskReport(estimator="empirical", mise=m_emp, mise_se=se_emp, **common)

    ise_pin = _finite(np.array([r[1] for r in rows]), "integrated squared error")
    m_pin, se_pin = _mean_se(ise_pin)
    ex_mc, ex_se = _mean_se(ise_pin - ise_emp)
    scale = n ** rate_exponent(config.m)
    ex = exact_excess(model, config)
    return RiskReport(
        estimator="pinsker", mise=m_pin, mise_se=se_pin,
        mise_pinsker=m_pin, mise_pinsker_se=se_pin,
        excess_exact=ex, excess_mc=ex_mc, excess_mc_se=ex_se,
        normalized_excess=ex_mc * scale, normalized_excess_exact=ex * scale,
        pi_constant=pinsker_constant(config.m, config.R, config.S, config.tau),
        **common,
    )


# ---------------------------------------------------------------------------
# Convergence sweep


@dataclass(frozen=True)
class SweepRow:
    n: int
    alpha: float
    N: float
    excess: float
    excess_se: float
    normalized_excess: float
    minus_pi: float
    ratio: float
    third_term_bound_normalized: float

    FIELDS = ("n", "alpha", "N", "excess", "excess_se", "normalized_excess",
              "minus_pi", "ratio", "third_term_bound_normalized")


def resolve_radius(model, m, R):
    """``R="boundary"`` puts the truth on the ellipsoid boundary."""
    if R == "boundary":
        return sobolev_functional(model.theta, m, model.tau)
    R = float(R)
    if not R > 0:
        raise ModelError("R must be positive")
    return R


def convergence_sweep(model, m, R, n_list, mode="exact", seed=0, reps=2000,
                      workers=1, pooled=False, S=None):
    """Normalized excess n^(2m/(2m-1)) * excess against -Pi over ``n_list``.

    ``mode="exact"`` needs no simulation; ``mode="mc"`` estimates the excess
    with common random numbers and reports its standard error.
    """
    if not n_list:
        raise ModelError("n_list must be non-empty")
    if list(n_list) != sorted(n_list):
        raise ModelError("n_list must be ascending")
    if mode not in ("exact", "mc"):
        raise ModelError(f"unknown mode {mode!r}")
    R = resolve_radius(model, m, R)
    S = model.S if S is None else float(S)
    minus_pi = -pinsker_constant(m, R, S, model.tau)
    rows = []
    for n in n_list:
        n = int(n)
        cfg = EstimatorConfig.build(m, R, S, model.tau, n)
        if mode == "exact":
            ex, se = exact_excess(model, cfg), 0.0
        else:
            rep = mise_monte_carlo(model, n, reps, seed, cfg, workers=workers, pooled=pooled)
            ex, se = rep.excess_mc, rep.excess_mc_se
        scale = n ** rate_exponent(m)
        rows.append(SweepRow(
            n=n, alpha=cfg.alpha, N=cfg.N, excess=ex, excess_se=se,
            normalized_excess=ex * scale, minus_pi=minus_pi,
            ratio=ex * scale / minus_pi,
            third_term_bound_normalized=third_term_bound(cfg) * scale,
        ))
    for r in rows:
        _finite([r.excess, r.normalized_excess, r.ratio], "sweep row")
    return rows


def write_sweep_csv(rows, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SweepRow.FIELDS)
        for r in rows:
            w.writerow([r.n] + [format(getattr(r, f), FLOAT_FMT) for f in SweepRow.FIELDS[1:]])
    return path


def write_json(obj, path):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")
    return path


def _json_default(x):
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, IntensityModel):
        return x.to_dict()
    raise TypeError(f"not JSON serializable: {type(x)!r}")
