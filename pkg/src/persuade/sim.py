"""Monte-Carlo simulation of the per-period disclosure game.

Each path carries a hidden two-state Markov chain and the public belief.
A period runs in the game's event order: the state may flip, the belief
drifts by one no-information step, the policy acts at the drifted belief
(a split draws the message conditionally on the true state), and the
period payoff (1 - x) x^n u(belief) accrues at the post-message belief.
Period weights (1 - x) x^n, n = 0, 1, ..., sum to one over an infinite
horizon, so simulated means are directly comparable to the solver's value.

Paths are simulated in fixed-size chunks, each with its own child of the
master seed sequence, and chunk aggregates are folded in chunk order with
math.fsum.  Results are therefore bit-identical for a given seed no matter
how many worker threads run (set PERSUADE_THREADS to parallelize).  State
randomness is drawn before any policy-dependent quantity, so runs with the
same seed see identical state paths under different policies.
"""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .errors import HorizonTooShort, OutOfRange
from .model import Problem
from .dynamics import drift_discrete, switch_probabilities
from .solver import MarkovPolicy, Solution

__all__ = [
    "SimConfig",
    "SimResult",
    "CalibrationBin",
    "default_period",
    "simulate",
    "compare_policies",
    "write_trace_csv",
    "write_calibration_csv",
]

_CHUNK = 4096
# 21 equal bins: with a bin count that shares no small factor with the
# decimal grids cuts are usually written in (multiples of 0.05 or 0.1),
# posterior atoms at cut values land in bin interiors instead of on edges,
# where a center-based calibration tolerance carries no information.
_N_BINS = 21
DEFAULT_MAX_TAIL = 0.05


def default_period(problem: Problem) -> float:
    """Period short relative to every rate in the instance."""
    return 0.01 / (problem.rates.lambda0 + problem.rates.lambda1 + problem.discounting.r)


@dataclass(frozen=True, slots=True)
class SimConfig:
    """Simulation run parameters."""

    delta: float
    horizon: int
    n_paths: int
    seed: int
    initial_belief: float

    def __post_init__(self) -> None:
        if self.delta <= 0.0:
            raise OutOfRange(f"period length must be positive, got {self.delta!r}")
        if self.horizon < 1:
            raise OutOfRange(f"horizon must be at least 1 period, got {self.horizon!r}")
        if self.n_paths < 1:
            raise OutOfRange(f"need at least one path, got {self.n_paths!r}")
        if not (0.0 <= self.initial_belief <= 1.0):
            raise OutOfRange(f"initial belief outside [0, 1]: {self.initial_belief!r}")


@dataclass(frozen=True, slots=True)
class CalibrationBin:
    """Belief-bin tally: how often the state was 1 when the belief fell here."""

    lo: float
    hi: float
    count: int
    state_one: int
    belief_sum: float

    @property
    def center(self) -> float:
        return 0.5 * (self.lo + self.hi)

    @property
    def half_width(self) -> float:
        return 0.5 * (self.hi - self.lo)

    @property
    def frequency(self) -> float:
        return self.state_one / self.count if self.count else math.nan

    @property
    def predicted(self) -> float:
        return self.belief_sum / self.count if self.count else math.nan

    @property
    def std_error(self) -> float:
        if not self.count:
            return math.nan
        p = min(max(self.predicted, 0.0), 1.0)
        return math.sqrt(p * (1.0 - p) / self.count)


@dataclass(frozen=True, slots=True, eq=False)
class SimResult:
    """Aggregates of one simulation run."""

    config: SimConfig
    mean_discounted_payoff: float
    std_error: float
    tail_bound: float
    calibration: tuple[CalibrationBin, ...]
    trace: np.ndarray | None = None

    @property
    def n_paths(self) -> int:
        return self.config.n_paths


def _thread_count() -> int:
    raw = os.environ.get("PERSUADE_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _run_chunk(problem, policy, config, n_paths, seed_seq, weights, want_trace):
    """Simulate one chunk of paths; returns order-independent aggregates."""
    rng = np.random.Generator(np.random.Philox(seed_seq))
    prob_up, prob_down = switch_probabilities(problem.rates, config.delta)
    drift0 = drift_discrete(problem.rates, 0.0, config.delta)
    drift_slope = drift_discrete(problem.rates, 1.0, config.delta) - drift0
    payoff = problem.payoff

    split_params = []
    for region in policy.regions:
        if region.action == "split":
            split_params.append((region.low_target, region.high_target))
        else:
            split_params.append(None)

    state = rng.random(n_paths) < config.initial_belief
    belief = np.full(n_paths, float(config.initial_belief))
    totals = np.zeros(n_paths)
    bin_counts = np.zeros(_N_BINS, dtype=np.int64)
    bin_state_one = np.zeros(_N_BINS, dtype=np.int64)
    bin_belief_sum = np.zeros(_N_BINS)
    trace = np.empty((config.horizon, 5)) if want_trace else None

    for n in range(config.horizon):
        flip_draw = rng.random(n_paths)
        message_draw = rng.random(n_paths)
        flip = np.where(state, flip_draw < prob_down, flip_draw < prob_up)
        state = state ^ flip
        belief = drift0 + drift_slope * belief
        drifted = belief[0] if want_trace else 0.0
        region_idx = policy.region_index(belief)
        for k, params in enumerate(split_params):
            if params is None:
                continue
            mask = region_idx == k
            if not mask.any():
                continue
            lo, hi = params
            q = belief[mask]
            width = hi - lo
            # message "high" rates per state, from the Bayes-plausible split
            beta1 = hi * (q - lo) / (q * width)
            beta0 = (1.0 - hi) * (q - lo) / ((1.0 - q) * width)
            p_high = np.where(state[mask], beta1, beta0)
            high = message_draw[mask] < p_high
            belief[mask] = np.where(high, hi, lo)
        flow = payoff.value(belief)
        totals += weights[n] * flow
        bins = np.clip((belief * _N_BINS).astype(np.int64), 0, _N_BINS - 1)
        bin_counts += np.bincount(bins, minlength=_N_BINS)
        bin_state_one += np.bincount(bins[state], minlength=_N_BINS)
        bin_belief_sum += np.bincount(bins, weights=belief, minlength=_N_BINS)
        if want_trace:
            trace[n] = (n, (n + 1) * config.delta, float(state[0]), drifted, float(belief[0]))

    return (
        float(np.sum(totals)),
        float(np.sum(totals * totals)),
        bin_counts,
        bin_state_one,
        bin_belief_sum,
        trace,
    )


def simulate(problem: Problem, policy: MarkovPolicy, config: SimConfig,
             record_trace: bool = False,
             max_tail: float = DEFAULT_MAX_TAIL) -> SimResult:
    """Run the discrete game under a fixed policy and aggregate path payoffs.

    The truncation error of stopping after `horizon` periods is at most
    x^horizon times the payoff spread; HorizonTooShort is raised when that
    bound exceeds max_tail.  With record_trace the first path of the first
    chunk is kept period by period (columns: period, elapsed time, state,
    drifted belief, post-message belief).
    """
    x = math.exp(-problem.discounting.r * config.delta)
    levels = problem.payoff.levels
    spread = max(levels) - min(levels)
    tail_bound = x ** config.horizon * spread
    if tail_bound > max_tail:
        needed = math.ceil(math.log(spread / max_tail) / (problem.discounting.r * config.delta))
        raise HorizonTooShort(
            f"truncation bound {tail_bound:.3g} exceeds {max_tail}; "
            f"need a horizon of about {needed} periods"
        )

    weights = (1.0 - x) * x ** np.arange(config.horizon)
    n_chunks = (config.n_paths + _CHUNK - 1) // _CHUNK
    children = np.random.SeedSequence(config.seed).spawn(n_chunks)
    sizes = [min(_CHUNK, config.n_paths - i * _CHUNK) for i in range(n_chunks)]

    def job(i: int):
        return _run_chunk(problem, policy, config, sizes[i], children[i],
                          weights, record_trace and i == 0)

    threads = _thread_count()
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            outputs = list(pool.map(job, range(n_chunks)))
    else:
        outputs = [job(i) for i in range(n_chunks)]

    total = math.fsum(out[0] for out in outputs)
    total_sq = math.fsum(out[1] for out in outputs)
    counts = sum(out[2] for out in outputs)
    state_one = sum(out[3] for out in outputs)
    belief_sum = sum(out[4] for out in outputs)
    trace = outputs[0][5]

    n = config.n_paths
    mean = total / n
    if n > 1:
        variance = max(0.0, (total_sq - n * mean * mean) / (n - 1))
        std_error = math.sqrt(variance / n)
    else:
        std_error = math.nan
    edges = np.linspace(0.0, 1.0, _N_BINS + 1)
    calibration = tuple(
        CalibrationBin(float(edges[k]), float(edges[k + 1]), int(counts[k]),
                       int(state_one[k]), float(belief_sum[k]))
        for k in range(_N_BINS)
    )
    return SimResult(
        config=config,
        mean_discounted_payoff=mean,
        std_error=std_error,
        tail_bound=tail_bound,
        calibration=calibration,
        trace=trace,
    )


def compare_policies(problem: Problem, solution: Solution, policies, beliefs,
                     config: SimConfig, allowance: float = 0.01,
                     max_tail: float = DEFAULT_MAX_TAIL) -> list[dict]:
    """Simulate each policy from each starting belief against the solver value.

    Every run reuses the same seed, so policies face identical state paths.
    A row is flagged when its simulated mean exceeds the solver's value by
    more than three standard errors plus the discretization allowance,
    which would contradict the value function's optimality.
    """
    rows = []
    for name, policy in dict(policies).items():
        for belief in beliefs:
            run_config = replace(config, initial_belief=float(belief))
            result = simulate(problem, policy, run_config, max_tail=max_tail)
            solver_value = solution.value.value(float(belief))
            excess = result.mean_discounted_payoff - solver_value
            rows.append({
                "policy": name,
                "initial_belief": float(belief),
                "mean": result.mean_discounted_payoff,
                "std_error": result.std_error,
                "solver_value": solver_value,
                "excess": excess,
                "beats_value": excess > 3.0 * result.std_error + allowance,
            })
    return rows


def write_trace_csv(result: SimResult, path) -> None:
    """Write the recorded sample path as CSV."""
    if result.trace is None:
        raise ValueError("simulation was run without record_trace")
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["period", "time", "state", "drifted_belief", "belief"])
        for row in result.trace:
            writer.writerow([int(row[0]), repr(float(row[1])), int(row[2]),
                             repr(float(row[3])), repr(float(row[4]))])


def write_calibration_csv(result: SimResult, path) -> None:
    """Write the belief-calibration table as CSV."""
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["bin_lo", "bin_hi", "bin_center", "count", "state_one",
                         "frequency", "predicted", "std_error"])
        for b in result.calibration:
            writer.writerow([b.lo, b.hi, b.center, b.count, b.state_one,
                             b.frequency, b.predicted, b.std_error])
