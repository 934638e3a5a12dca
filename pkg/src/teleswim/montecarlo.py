"""Exact simulation of the run-and-tumble particle.

Tumbles are the epochs of a Poisson process with intensity lambda(t), drawn by
Ogata-style thinning against the exact maximum of lambda on the remaining
horizon.  Between tumbles the particle moves at c0 w(t) in a fixed direction,
so its displacement over [t1, t2] is sigma * c0 * (tau(t2) - tau(t1)); no time
stepping is involved.

Random numbers come from one splitmix64 stream per path.  The stream of path
``i`` is seeded with the ``i``-th splitmix64 output of ``base_seed`` and each
draw depends only on that seed and the draw index, so a path's trajectory is
independent of how paths are batched or how many workers run them.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .analytic import TelegraphParams
from .errors import CapabilityError, DomainError
from .grids import DensityGrid
from .profiles import RateProfile, TimeProfile

__all__ = [
    "RNG_VERSION",
    "Path",
    "PathEnsemble",
    "derive_seeds",
    "simulate_path",
    "simulate_ensemble",
    "simulate_ensemble_time_changed",
    "empirical_histogram",
    "empirical_msd",
    "worker_count",
]

RNG_VERSION = "splitmix64-v1"
CHUNK_SIZE = 1 << 15

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_MASK64 = (1 << 64) - 1


def _mix(z):
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def _uniform(state):
    """Advance each stream in place and return one uniform in (0, 1) per stream."""
    state += _GOLDEN
    z = _mix(state)
    return ((z >> np.uint64(11)).astype(np.float64) + 0.5) * (1.0 / 9007199254740992.0)


def derive_seeds(base_seed: int, n: int, start: int = 0) -> np.ndarray:
    """Per-path seeds: splitmix64 outputs number ``start .. start+n-1`` of ``base_seed``."""
    base = np.uint64(int(base_seed) & _MASK64)
    counters = np.arange(start + 1, start + n + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        return _mix(base + counters * _GOLDEN)


def worker_count() -> int:
    env = os.environ.get("TELESWIM_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise DomainError(f"TELESWIM_THREADS must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


@dataclass
class Path:
    seed: int
    tumble_times: list
    final_position: float
    n_tumbles: int
    initial_direction: int


@dataclass
class PathEnsemble:
    params: TelegraphParams
    profile: TimeProfile
    rate: RateProfile
    t_end: float
    n_paths: int
    base_seed: int
    seeds: np.ndarray
    final_positions: np.ndarray
    n_tumbles: np.ndarray
    initial_direction: np.ndarray
    method: str = "thinning"
    rng: str = RNG_VERSION
    meta: dict = field(default_factory=dict)

    @property
    def front(self) -> float:
        return self.params.c0 * float(self.profile.tau(self.t_end))

    def zero_tumble_fraction(self) -> float:
        return float(np.count_nonzero(self.n_tumbles == 0)) / self.n_paths

    def moments(self) -> dict:
        """Mean, MSD about x0 and their standard errors (exactly rounded sums)."""
        d = self.final_positions - self.params.x0
        n = self.n_paths
        mean = math.fsum(d) / n
        d2 = d * d
        msd = math.fsum(d2) / n
        var = math.fsum((d - mean) ** 2) / max(n - 1, 1)
        var2 = math.fsum((d2 - msd) ** 2) / max(n - 1, 1)
        return {
            "mean": mean + self.params.x0,
            "mean_stderr": math.sqrt(var / n),
            "msd": msd,
            "msd_stderr": math.sqrt(var2 / n),
            "variance": var,
        }


def _check_inputs(params, rate, t_end):
    if not (t_end > 0 and math.isfinite(t_end)):
        raise DomainError(f"t_end must be positive, got {t_end!r}")
    lam = getattr(rate, "lambda0", None)
    if lam is not None and lam != params.lambda0:
        raise DomainError(f"rate lambda0={lam} disagrees with params.lambda0={params.lambda0}")


def _thinning_chunk(params, profile, rate, sample_times, tau_samples, seeds, record_events):
    """Simulate the paths with the given seeds, recording X at each sample time."""
    c0, x0 = params.c0, params.x0
    t_end = float(sample_times[-1])
    n, n_samp = seeds.size, sample_times.size
    positions = np.empty((n, n_samp))
    n_tumbles = np.zeros(n, dtype=np.int64)
    events = []

    state = seeds.copy()
    sigma = np.where(_uniform(state) < 0.5, 1.0, -1.0)
    initial = sigma.astype(np.int8)

    idx = np.arange(n)
    clock = np.zeros(n)
    t_last = np.zeros(n)
    tau_last = np.zeros(n)
    x = np.full(n, float(x0))
    next_k = np.zeros(n, dtype=np.int64)

    while idx.size:
        bound = np.asarray(rate.bound(profile, clock, t_end), dtype=float)
        if not np.all(np.isfinite(bound)):
            raise CapabilityError("tumbling rate is unbounded on the simulation horizon")
        e = -np.log(_uniform(state))
        u = _uniform(state)
        with np.errstate(divide="ignore"):
            cand = clock + np.where(bound > 0, e / np.where(bound > 0, bound, 1.0), np.inf)
        done = cand >= t_end
        live = ~done
        accept = np.zeros(idx.size, dtype=bool)
        if live.any():
            lam = np.asarray(rate.rate(profile, cand[live]), dtype=float)
            accept[live] = u[live] * bound[live] < lam

        # close sampling windows that end at this event (or at the horizon)
        boundary = np.where(done, np.inf, np.where(accept, cand, -np.inf))
        while True:
            pending = next_k < n_samp
            k = np.minimum(next_k, n_samp - 1)
            hit = pending & (boundary > sample_times[k])
            if not hit.any():
                break
            h = np.flatnonzero(hit)
            kk = k[h]
            positions[idx[h], kk] = x[h] + sigma[h] * c0 * (tau_samples[kk] - tau_last[h])
            next_k[h] += 1

        if accept.any():
            a = np.flatnonzero(accept)
            tau_c = np.asarray(profile.tau(cand[a]), dtype=float)
            x[a] += sigma[a] * c0 * (tau_c - tau_last[a])
            tau_last[a] = tau_c
            t_last[a] = cand[a]
            sigma[a] = -sigma[a]
            n_tumbles[idx[a]] += 1
            if record_events:
                events.append((idx[a].copy(), cand[a].copy()))

        clock = np.where(live, cand, clock)
        keep = np.flatnonzero(live)
        idx, clock, t_last, tau_last, x, sigma, next_k, state = (
            arr[keep] for arr in (idx, clock, t_last, tau_last, x, sigma, next_k, state)
        )

    fronts = c0 * tau_samples
    positions = np.clip(positions, x0 - fronts, x0 + fronts)
    return positions, n_tumbles, initial, events


def _time_changed_chunk(params, profile, lam, tau_samples, seeds):
    """Proportional case: homogeneous Poisson(lam) tumbles on the tau clock."""
    c0, x0 = params.c0, params.x0
    tau_end = float(tau_samples[-1])
    n, n_samp = seeds.size, tau_samples.size
    positions = np.empty((n, n_samp))
    n_tumbles = np.zeros(n, dtype=np.int64)
    state = seeds.copy()
    sigma = np.where(_uniform(state) < 0.5, 1.0, -1.0)
    initial = sigma.astype(np.int8)
    idx = np.arange(n)
    tau_last = np.zeros(n)
    x = np.full(n, float(x0))
    next_k = np.zeros(n, dtype=np.int64)
    while idx.size:
        if lam > 0:
            cand = tau_last - np.log(_uniform(state)) / lam
        else:
            cand = np.full(idx.size, np.inf)
        done = cand >= tau_end
        boundary = np.where(done, np.inf, cand)
        while True:
            pending = next_k < n_samp
            k = np.minimum(next_k, n_samp - 1)
            hit = pending & (boundary > tau_samples[k])
            if not hit.any():
                break
            h = np.flatnonzero(hit)
            kk = k[h]
            positions[idx[h], kk] = x[h] + sigma[h] * c0 * (tau_samples[kk] - tau_last[h])
            next_k[h] += 1
        live = ~done
        x[live] += sigma[live] * c0 * (cand[live] - tau_last[live])
        tau_last = np.where(live, cand, tau_last)
        sigma = np.where(live, -sigma, sigma)
        n_tumbles[idx[live]] += 1
        keep = np.flatnonzero(live)
        idx, tau_last, x, sigma, next_k, state = (arr[keep] for arr in (idx, tau_last, x, sigma, next_k, state))
    fronts = c0 * tau_samples
    positions = np.clip(positions, x0 - fronts, x0 + fronts)
    return positions, n_tumbles, initial, []


def _run(chunk_fn, seeds, workers=None):
    chunks = [seeds[i : i + CHUNK_SIZE] for i in range(0, seeds.size, CHUNK_SIZE)]
    workers = min(workers or worker_count(), len(chunks))
    if workers <= 1:
        results = [chunk_fn(c) for c in chunks]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(chunk_fn, chunks))
    positions = np.concatenate([r[0] for r in results])
    n_tumbles = np.concatenate([r[1] for r in results])
    initial = np.concatenate([r[2] for r in results])
    return positions, n_tumbles, initial, results


def _sample_grid(sample_times):
    ts = np.asarray(sample_times, dtype=float)
    if ts.ndim != 1 or ts.size == 0 or np.any(ts < 0) or np.any(np.diff(ts) <= 0):
        raise DomainError("sample times must be a nonempty, strictly ascending list of times >= 0")
    if not ts[-1] > 0:
        raise DomainError("the last sample time must be positive")
    return ts


def simulate_path(params: TelegraphParams, profile: TimeProfile, rate: RateProfile, t_end: float, seed: int) -> Path:
    """One trajectory, with its tumble epochs, driven by the stream ``seed``."""
    _check_inputs(params, rate, t_end)
    ts = np.array([float(t_end)])
    seeds = np.array([int(seed) & _MASK64], dtype=np.uint64)
    pos, n_tum, initial, events = _thinning_chunk(params, profile, rate, ts, np.atleast_1d(profile.tau(ts)), seeds, True)
    times = sorted(float(t) for _, tt in events for t in tt)
    return Path(int(seeds[0]), times, float(pos[0, 0]), int(n_tum[0]), int(initial[0]))


def _ensemble_positions(params, profile, rate, sample_times, n_paths, base_seed, workers, method):
    if n_paths < 1:
        raise DomainError("n_paths must be >= 1")
    ts = _sample_grid(sample_times)
    _check_inputs(params, rate, float(ts[-1]))
    tau_s = np.atleast_1d(np.asarray(profile.tau(ts), dtype=float))
    seeds = derive_seeds(base_seed, n_paths)
    if method == "thinning":
        def fn(chunk):
            return _thinning_chunk(params, profile, rate, ts, tau_s, chunk, False)
    elif method == "time_change":
        if not rate.proportional:
            raise CapabilityError("the time-changed sampler needs lambda(t) = lambda0 w(t)")
        def fn(chunk):
            return _time_changed_chunk(params, profile, rate.lambda0, tau_s, chunk)
    else:
        raise DomainError(f"unknown method {method!r}")
    positions, n_tumbles, initial, _ = _run(fn, seeds, workers)
    return ts, seeds, positions, n_tumbles, initial


def simulate_ensemble(params, profile, rate, t_end, n_paths, base_seed, workers=None, method="thinning") -> PathEnsemble:
    """``n_paths`` independent trajectories to ``t_end``; path i uses ``derive_seeds(base_seed, n)[i]``."""
    ts, seeds, positions, n_tumbles, initial = _ensemble_positions(
        params, profile, rate, [float(t_end)], n_paths, base_seed, workers, method
    )
    return PathEnsemble(
        params=params,
        profile=profile,
        rate=rate,
        t_end=float(t_end),
        n_paths=int(n_paths),
        base_seed=int(base_seed),
        seeds=seeds,
        final_positions=positions[:, -1].copy(),
        n_tumbles=n_tumbles,
        initial_direction=initial,
        method=method,
    )


def simulate_ensemble_time_changed(params, profile, rate, t_end, n_paths, base_seed, workers=None) -> PathEnsemble:
    """Same law as :func:`simulate_ensemble` for the proportional case, sampled on the tau clock."""
    return simulate_ensemble(params, profile, rate, t_end, n_paths, base_seed, workers, method="time_change")


def empirical_histogram(ensemble: PathEnsemble, n_bins: int, include_atoms: bool = True) -> DensityGrid:
    """Histogram density on [x0 - c0 tau, x0 + c0 tau].

    With ``include_atoms`` the zero-tumble paths become two atoms at the fronts
    instead of being binned into the edge cells.
    """
    if n_bins < 2:
        raise DomainError("n_bins must be >= 2")
    if ensemble.n_paths == 0 or ensemble.final_positions.size == 0:
        raise DomainError("empty ensemble")
    x0, front = ensemble.params.x0, ensemble.front
    pos = ensemble.final_positions
    n = pos.size
    atoms = []
    if include_atoms:
        ballistic = ensemble.n_tumbles == 0
        right = int(np.count_nonzero(ballistic & (pos > x0)))
        left = int(np.count_nonzero(ballistic)) - right
        atoms = [(x0 - front, left / n), (x0 + front, right / n)]
        atoms = [a for a in atoms if a[1] > 0]
        pos = pos[~ballistic]
    half = front if front > 0 else 0.5
    edges = np.linspace(x0 - half, x0 + half, n_bins + 1)
    counts, _ = np.histogram(pos, bins=edges)
    dx = edges[1] - edges[0]
    centers = 0.5 * (edges[1:] + edges[:-1])
    return DensityGrid(
        centers,
        counts / (n * dx),
        time=ensemble.t_end,
        atoms=atoms,
        meta={"source": "montecarlo", "n_paths": n, "rng": ensemble.rng, "base_seed": ensemble.base_seed},
    )


def empirical_msd(params, profile, rate, sample_times, n_paths, base_seed, workers=None, method="thinning"):
    """[(t, msd, stderr), ...]; paths are simulated once to the largest time."""
    ts, _, positions, _, _ = _ensemble_positions(params, profile, rate, sample_times, n_paths, base_seed, workers, method)
    out = []
    for k, t in enumerate(ts):
        d2 = (positions[:, k] - params.x0) ** 2
        m = math.fsum(d2) / n_paths
        var = math.fsum((d2 - m) ** 2) / max(n_paths - 1, 1)
        out.append((float(t), m, math.sqrt(var / n_paths)))
    return out
