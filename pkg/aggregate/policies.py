import logging
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from core.exceptions import MessageError
from core.types import GradientPiece, ordered_sum

logger = logging.getLogger(__name__)


class AggregationVariant(Enum):
    OMIT_RENORMALIZE = "omit_renormalize"
    STALE_SUBSTITUTE = "stale_substitute"


class ZeroSurvivorFallback(Enum):
    REUSE_PREV = "reuse_prev"
    ZERO = "zero"
    SKIP = "skip"


class AggregateSignal(Enum):
    SKIP = "skip"


SKIP = AggregateSignal.SKIP

AggregateResult = Union[np.ndarray, AggregateSignal]


@dataclass(frozen=True)
class AggregationPolicy:
    variant: AggregationVariant = AggregationVariant.OMIT_RENORMALIZE
    zero_survivor_fallback: ZeroSurvivorFallback = ZeroSurvivorFallback.REUSE_PREV
    # Alternative reading of "renormalise" for stale substitution; tests only.
    divide_by_fresh: bool = False

    @classmethod
    def from_names(cls, variant: str, fallback: str = "reuse_prev", divide_by_fresh: bool = False) -> "AggregationPolicy":
        try:
            return cls(
                variant=AggregationVariant(variant),
                zero_survivor_fallback=ZeroSurvivorFallback(fallback),
                divide_by_fresh=divide_by_fresh,
            )
        except ValueError as e:
            raise ValueError(f"Unknown aggregation setting: {e}") from e


@dataclass(frozen=True)
class GradientCache:
    """Last piece received from each sender for one shard (zeros before the first delivery)"""
    pieces: Tuple[np.ndarray, ...]

    @classmethod
    def zeros(cls, num_senders: int, size: int) -> "GradientCache":
        return cls(pieces=tuple(np.zeros(size) for _ in range(num_senders)))

    def __len__(self) -> int:
        return len(self.pieces)


def _check_row(pieces: Sequence[Optional[GradientPiece]], mask_row: Sequence[bool]) -> np.ndarray:
    mask_row = np.asarray(mask_row, dtype=bool)
    if len(pieces) != mask_row.shape[0]:
        raise MessageError(f"{len(pieces)} pieces but mask row of length {mask_row.shape[0]}")
    for sender, delivered in enumerate(mask_row):
        if delivered and pieces[sender] is None:
            raise MessageError(f"Mask marks sender {sender} as delivered but no piece is present")
    return mask_row


def zero_survivor_fallback(
    policy: AggregationPolicy,
    prev_aggregate: Optional[np.ndarray],
    shard_size: Optional[int] = None,
) -> AggregateResult:
    """What to use for g_hat when nothing arrived for a shard"""
    fallback = policy.zero_survivor_fallback
    if fallback is ZeroSurvivorFallback.SKIP:
        return SKIP
    if fallback is ZeroSurvivorFallback.ZERO:
        if shard_size is None:
            if prev_aggregate is None:
                raise MessageError("Zero fallback needs the shard size")
            shard_size = prev_aggregate.shape[0]
        return np.zeros(shard_size)
    if prev_aggregate is not None:
        return np.array(prev_aggregate, dtype=np.float64, copy=True)
    if shard_size is None:
        raise MessageError("Cannot reuse the previous aggregate: no history and no shard size")
    return np.zeros(shard_size)


def aggregate_omit_renormalize(
    pieces: Sequence[Optional[GradientPiece]],
    mask_row: Sequence[bool],
    policy: AggregationPolicy = AggregationPolicy(),
    prev_aggregate: Optional[np.ndarray] = None,
    shard_size: Optional[int] = None,
) -> AggregateResult:
    """(sum_i s_i g_i) / (sum_i s_i) over the senders whose piece arrived"""
    mask_row = _check_row(pieces, mask_row)
    survivors = [pieces[i].values for i in range(len(pieces)) if mask_row[i]]
    if not survivors:
        logger.warning("No gradient piece survived; applying zero-survivor fallback")
        if shard_size is None:
            present = [p for p in pieces if p is not None]
            shard_size = present[0].values.shape[0] if present else None
        return zero_survivor_fallback(policy, prev_aggregate, shard_size)
    return ordered_sum(survivors) / len(survivors)


def aggregate_stale_substitute(
    pieces: Sequence[Optional[GradientPiece]],
    mask_row: Sequence[bool],
    cache: GradientCache,
    policy: AggregationPolicy = AggregationPolicy(variant=AggregationVariant.STALE_SUBSTITUTE),
    prev_aggregate: Optional[np.ndarray] = None,
) -> Tuple[AggregateResult, GradientCache]:
    """Dropped senders contribute their cached previous piece; the mean runs over all N slots"""
    mask_row = _check_row(pieces, mask_row)
    if len(cache) != len(pieces):
        raise MessageError(f"Cache holds {len(cache)} senders, expected {len(pieces)}")

    contributions: List[np.ndarray] = []
    for sender, delivered in enumerate(mask_row):
        if delivered:
            values = pieces[sender].values
            if values.shape != cache.pieces[sender].shape:
                raise MessageError(
                    f"Cache entry for sender {sender} has shape {cache.pieces[sender].shape}, piece has {values.shape}"
                )
            contributions.append(np.array(values, copy=True))
        else:
            contributions.append(cache.pieces[sender])
    updated = GradientCache(pieces=tuple(contributions))

    fresh = int(mask_row.sum())
    if policy.divide_by_fresh:
        if fresh == 0:
            return zero_survivor_fallback(policy, prev_aggregate, cache.pieces[0].shape[0]), updated
        return ordered_sum(contributions) / fresh, updated
    return ordered_sum(contributions) / len(contributions), updated


def aggregate_shard(
    policy: AggregationPolicy,
    pieces: Sequence[Optional[GradientPiece]],
    mask_row: Sequence[bool],
    cache: Optional[GradientCache],
    prev_aggregate: Optional[np.ndarray],
    shard_size: int,
) -> Tuple[AggregateResult, Optional[GradientCache]]:
    if policy.variant is AggregationVariant.STALE_SUBSTITUTE:
        if cache is None:
            cache = GradientCache.zeros(len(pieces), shard_size)
        return aggregate_stale_substitute(pieces, mask_row, cache, policy, prev_aggregate)
    result = aggregate_omit_renormalize(pieces, mask_row, policy, prev_aggregate, shard_size)
    return result, cache
