"""Periodic inhomogeneous Poisson observations sampled by thinning.

Randomness contract: period ``j`` of replication ``r`` under master seed
``s`` is drawn from ``SeedSequence(s, spawn_key=(r, j))``. That is the same
child ``SeedSequence(s).spawn(...)[r].spawn(...)[j]`` would produce, so
results never depend on how periods or replications are scheduled.
"""

import csv
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import _kernels
from .model import ModelError

FLOAT_FMT = ".17g"


def substream(seed, replication, period):
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(replication), int(period)))
    return np.random.Generator(np.random.PCG64(ss))


def _thin(theta, tau, lambda_max, rng, scale=1):
    # draw order is part of the reproducibility contract: count, times, marks
    k = rng.poisson(scale * lambda_max * tau) if lambda_max > 0 else 0
    times = np.sort(rng.uniform(0.0, tau, k))
    marks = rng.uniform(0.0, lambda_max, k)
    if k == 0:
        return times
    lam = _kernels.intensity_series(theta, times, tau)
    return times[marks < lam]


@dataclass(frozen=True, eq=False)
class PeriodPath:
    """Sorted event times of one period, all in [0, tau)."""

    events: np.ndarray

    def __post_init__(self):
        ev = np.array(self.events, dtype=float)
        if ev.ndim != 1:
            raise ModelError("events must be one-dimensional")
        if ev.size and (np.any(np.diff(ev) < 0) or ev[0] < 0):
            raise ModelError("events must be sorted and non-negative")
        ev.setflags(write=False)
        object.__setattr__(self, "events", ev)

    def __len__(self):
        return self.events.size


def count_at(path, t, tau=None):
    """Number of events <= t (the counting path X_j(t))."""
    if t < 0 or (tau is not None and t > tau):
        raise ModelError(f"time {t} outside [0, tau]")
    return int(np.searchsorted(path.events, t, side="right"))


def sample_period(model, rng):
    return PeriodPath(_thin(model.theta, model.tau, model.lambda_max, rng))


@dataclass(frozen=True, eq=False)
class ObservationSet:
    paths: tuple
    model_id: str
    seed: int
    tau: float
    replication: int = 0

    @property
    def n(self):
        return len(self.paths)

    def counts(self):
        return np.array([len(p) for p in self.paths], dtype=np.int64)

    def same_events(self, other):
        return self.n == other.n and all(
            np.array_equal(a.events, b.events) for a, b in zip(self.paths, other.paths)
        )


def _sample_block(args):
    theta, tau, lambda_max, seed, replication, periods = args
    return [_thin(theta, tau, lambda_max, substream(seed, replication, j)) for j in periods]


def _blocks(n, workers):
    size = -(-n // workers)
    return [range(a, min(n, a + size)) for a in range(0, n, size)]


def sample_observations(model, n, seed, replication=0, workers=1):
    """Sample ``n`` independent periods. ``workers > 1`` fans periods out to
    processes; the result is identical for any worker count."""
    if int(n) != n or n < 1:
        raise ModelError("n must be >= 1")
    n = int(n)
    jobs = [(model.theta, model.tau, model.lambda_max, seed, replication, r)
            for r in _blocks(n, max(1, workers))]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_sample_block, jobs))
    else:
        chunks = [_sample_block(j) for j in jobs]
    paths = tuple(PeriodPath(ev) for chunk in chunks for ev in chunk)
    return ObservationSet(paths=paths, model_id=model.model_id, seed=int(seed),
                          tau=model.tau, replication=replication)


def sample_pooled(model, n, rng):
    """Superposition of ``n`` periods drawn in one shot from a single stream.

    Same distribution as pooling ``sample_observations``; used as a fast path
    for large-n Monte Carlo where per-period substreams are too costly.
    """
    return _thin(model.theta, model.tau, model.lambda_max, rng, scale=n)


def pooled_events(obs):
    """All event times of all periods, sorted ascending."""
    if not obs.paths:
        return np.empty(0)
    return np.sort(np.concatenate([p.events for p in obs.paths]), kind="stable")


def observations_sidecar(obs):
    return {
        "model_id": obs.model_id,
        "tau": obs.tau,
        "n": obs.n,
        "seed": obs.seed,
        "replication": obs.replication,
        "sampler": "thinning",
    }


def sidecar_path(path):
    return Path(path).with_suffix(".json")


def write_observations(obs, path, extra=None):
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["period_index", "event_time"])
        for j, p in enumerate(obs.paths):
            for t in p.events:
                w.writerow([j, format(t, FLOAT_FMT)])
    meta = observations_sidecar(obs)
    if extra:
        meta.update(extra)
    with open(sidecar_path(path), "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def read_observations(path):
    path = Path(path)
    with open(sidecar_path(path)) as fh:
        meta = json.load(fh)
    n = int(meta["n"])
    buckets = [[] for _ in range(n)]
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r, None)
        if header != ["period_index", "event_time"]:
            raise ModelError(f"bad observation header: {header}")
        for row in r:
            j, t = int(row[0]), float(row[1])
            if not 0 <= j < n:
                raise ModelError(f"period index {j} out of range")
            buckets[j].append(t)
    paths = tuple(PeriodPath(np.sort(b)) for b in buckets)
    return ObservationSet(paths=paths, model_id=meta["model_id"], seed=int(meta["seed"]),
                          tau=float(meta["tau"]), replication=int(meta.get("replication", 0)))
