import itertools
import logging
from collections import deque
from dataclasses import dataclass
from typing import Deque, Dict, List, Optional, Sequence, Tuple

import numpy as np

from core.sharding import ShardLayout
from core.types import ReceptionMask
from .montecarlo import DriftCase, classify_transition

logger = logging.getLogger(__name__)

DEFAULT_SIGMA2_WINDOW = 100
ALL_PAIRS_MAX_WORKERS = 8
SAMPLED_PAIRS = 32

Pair = Tuple[int, int]


def estimate_sigma2(update_history: Sequence[np.ndarray], window: int) -> float:
    """Mean per-coordinate squared update magnitude over the last ``window`` updates"""
    if window < 1:
        raise ValueError(f"window must be at least 1, got {window}")
    if len(update_history) == 0:
        raise ValueError("Cannot estimate sigma2 from an empty update history")
    recent = list(update_history)[-window:]
    return float(np.mean([float(u @ u) / u.shape[0] for u in recent]))


class Sigma2Tracker:
    """Sliding-window sigma^2 estimate per shard"""

    def __init__(self, num_shards: int, window: int = DEFAULT_SIGMA2_WINDOW):
        if window < 1:
            raise ValueError(f"window must be at least 1, got {window}")
        self.window = window
        self.history: Dict[int, Deque[np.ndarray]] = {j: deque(maxlen=window) for j in range(num_shards)}

    def update(self, updates: Dict[int, np.ndarray]) -> Dict[int, float]:
        for shard, delta in updates.items():
            self.history[shard].append(np.asarray(delta, dtype=np.float64))
        return self.current()

    def current(self) -> Dict[int, float]:
        return {
            shard: estimate_sigma2(history, self.window)
            for shard, history in self.history.items()
            if history
        }


def sample_pairs(num_workers: int, seed: int, max_pairs: int = SAMPLED_PAIRS) -> List[Pair]:
    """All worker pairs for small clusters, otherwise a fixed seeded subset"""
    pairs = list(itertools.combinations(range(num_workers), 2))
    if num_workers <= ALL_PAIRS_MAX_WORKERS or len(pairs) <= max_pairs:
        return pairs
    rng = np.random.default_rng([seed, num_workers])
    chosen = np.sort(rng.choice(len(pairs), size=max_pairs, replace=False))
    return [pairs[k] for k in chosen]


def pairwise_drift(
    views: Sequence[np.ndarray],
    shard: Optional[int] = None,
    layout: Optional[ShardLayout] = None,
    pairs: Optional[Sequence[Pair]] = None,
) -> np.ndarray:
    """||theta^(i,j) - theta^(k,j)||^2 / dim_j for every (i, k) pair, i < k"""
    if len(views) < 2:
        raise ValueError(f"Drift needs at least two workers, got {len(views)}")
    stacked = np.vstack([np.atleast_1d(np.asarray(v, dtype=np.float64)) for v in views])
    if layout is not None and shard is not None:
        stacked = stacked[:, layout.slice(shard)]
    if pairs is None:
        pairs = list(itertools.combinations(range(len(views)), 2))
    first = np.array([i for i, _ in pairs])
    second = np.array([k for _, k in pairs])
    diff = stacked[first] - stacked[second]
    return np.mean(diff * diff, axis=1)


@dataclass
class CaseTableReport:
    checks: int = 0
    violations: int = 0
    literal_checks: int = 0
    literal_matches: int = 0

    def __add__(self, other: "CaseTableReport") -> "CaseTableReport":
        return CaseTableReport(
            checks=self.checks + other.checks,
            violations=self.violations + other.violations,
            literal_checks=self.literal_checks + other.literal_checks,
            literal_matches=self.literal_matches + other.literal_matches,
        )


def check_case_table(
    prev_views: Sequence[np.ndarray],
    new_views: Sequence[np.ndarray],
    prev_owner_shards: Sequence[np.ndarray],
    new_owner_shards: Sequence[np.ndarray],
    mask: ReceptionMask,
    layout: ShardLayout,
    pairs: Sequence[Pair],
) -> CaseTableReport:
    """Check D_{t+1} against the four broadcast outcomes for every pair and shard.

    A replica that catches up gains delta = theta_{t+1} - (its view at t), so
    D_{t+1} must be 0, +delta^(k), -delta^(i) or D_t. When the replica that
    missed the broadcast was current at t, the increment is exactly +-dtheta_t.
    """
    report = CaseTableReport()
    for j in range(layout.num_shards):
        span = layout.slice(j)
        fresh = new_owner_shards[j]
        stale_owner = prev_owner_shards[j]
        step = fresh - stale_owner
        for i, k in pairs:
            v_i, v_k = prev_views[i][span], prev_views[k][span]
            actual = new_views[i][span] - new_views[k][span]
            case = classify_transition(bool(mask.entries[i, j]), bool(mask.entries[k, j]))
            if case is DriftCase.BOTH_RECEIVED:
                expected = np.zeros_like(actual)
            elif case is DriftCase.ONLY_FIRST:
                expected = fresh - v_k
            elif case is DriftCase.ONLY_SECOND:
                expected = -(fresh - v_i)
            else:
                expected = v_i - v_k
            report.checks += 1
            if not np.array_equal(actual, expected):
                report.violations += 1
                logger.warning(f"Case table violated for pair ({i}, {k}) shard {j} ({case.value})")

            lagging = v_k if case is DriftCase.ONLY_FIRST else v_i if case is DriftCase.ONLY_SECOND else None
            if lagging is not None and np.array_equal(lagging, stale_owner):
                report.literal_checks += 1
                literal = step if case is DriftCase.ONLY_FIRST else -step
                if np.array_equal(actual, literal):
                    report.literal_matches += 1
    return report
