import logging
from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np

from .analytic import drift_steady_state
from .trajectory import DriftTrajectory, TrajectorySource

logger = logging.getLogger(__name__)

CHUNK_TRIALS = 10_000

UpdateSampler = Callable[[np.random.Generator, int], np.ndarray]


def gaussian_updates(sigma2: float) -> UpdateSampler:
    scale = float(np.sqrt(sigma2))

    def sample(rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.normal(0.0, scale, size)

    return sample


def rademacher_updates(sigma2: float) -> UpdateSampler:
    scale = float(np.sqrt(sigma2))

    def sample(rng: np.random.Generator, size: int) -> np.ndarray:
        return scale * (2.0 * rng.integers(0, 2, size) - 1.0)

    return sample


UPDATE_SAMPLERS = {
    "gaussian": gaussian_updates,
    "rademacher": rademacher_updates,
}


class DriftCase(Enum):
    BOTH_RECEIVED = "both_received"
    ONLY_FIRST = "only_first"
    ONLY_SECOND = "only_second"
    NEITHER = "neither"


def classify_transition(r_i: bool, r_k: bool) -> DriftCase:
    if r_i and r_k:
        return DriftCase.BOTH_RECEIVED
    if r_i:
        return DriftCase.ONLY_FIRST
    if r_k:
        return DriftCase.ONLY_SECOND
    return DriftCase.NEITHER


def replica_transition(d_t: np.ndarray, r_i: np.ndarray, r_k: np.ndarray, delta: np.ndarray) -> np.ndarray:
    """Four-case update of D = theta^(i,j) - theta^(k,j) after one broadcast"""
    return np.where(
        r_i & r_k, 0.0,
        np.where(r_i, delta, np.where(r_k, -delta, d_t)),
    )


def mc_drift_process(
    p: float,
    sigma2_dist: UpdateSampler,
    iterations: int,
    trials: int,
    seed: int,
) -> DriftTrajectory:
    """Empirical E_t of the replica-pair process, D_0 = 0.

    Trials are processed in fixed-size chunks, each with its own child seed,
    so the result does not depend on how chunks are scheduled.
    """
    if iterations < 1 or trials < 1:
        raise ValueError(f"Need at least one iteration and one trial (T={iterations}, trials={trials})")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"drop rate must lie in [0, 1], got {p}")

    sums = np.zeros(iterations + 1)
    chunk_count = -(-trials // CHUNK_TRIALS)
    children = np.random.SeedSequence(seed).spawn(chunk_count)
    for chunk, child in enumerate(children):
        size = min(CHUNK_TRIALS, trials - chunk * CHUNK_TRIALS)
        rng = np.random.default_rng(child)
        d = np.zeros(size)
        for t in range(iterations):
            r_i = rng.random(size) >= p
            r_k = rng.random(size) >= p
            d = replica_transition(d, r_i, r_k, sigma2_dist(rng, size))
            sums[t + 1] += float(d @ d)

    values = sums / trials
    return DriftTrajectory(TrajectorySource.MONTE_CARLO, np.arange(iterations + 1), values)


@dataclass(frozen=True)
class DriftVerification:
    p: float
    sigma2: float
    trials: int
    iterations: int
    tail_mean: float
    predicted: float
    relative_error: float
    tolerance: float
    trajectory: DriftTrajectory

    @property
    def passed(self) -> bool:
        return self.relative_error <= self.tolerance


def verify_drift(
    p: float,
    sigma2: float,
    trials: int,
    iterations: int,
    seed: int = 0,
    tolerance: float = 0.05,
    distribution: str = "gaussian",
) -> DriftVerification:
    """Compare the MC tail mean (second half of the run) with 2p/(1+p) sigma^2"""
    if distribution not in UPDATE_SAMPLERS:
        raise ValueError(f"Unknown update distribution '{distribution}'; choose from {sorted(UPDATE_SAMPLERS)}")
    trajectory = mc_drift_process(p, UPDATE_SAMPLERS[distribution](sigma2), iterations, trials, seed)
    predicted = drift_steady_state(p, sigma2)
    tail = trajectory.tail_mean(0.5)
    if predicted > 0:
        relative_error = abs(tail - predicted) / predicted
    else:
        relative_error = abs(tail)
    logger.info(f"MC drift p={p} sigma2={sigma2}: tail mean {tail:.6f}, predicted {predicted:.6f} ({relative_error:.2%})")
    return DriftVerification(
        p=p,
        sigma2=sigma2,
        trials=trials,
        iterations=iterations,
        tail_mean=tail,
        predicted=predicted,
        relative_error=relative_error,
        tolerance=tolerance,
        trajectory=trajectory,
    )
