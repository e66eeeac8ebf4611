import logging
from dataclasses import dataclass
from enum import Enum
from typing import Union

import numpy as np

from core.exceptions import MessageError
from core.sharding import ShardLayout
from core.types import GradientPiece, ParamShardMsg, Phase, ReceptionMask

logger = logging.getLogger(__name__)

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX_A = np.uint64(0xBF58476D1CE4E5B9)
_MIX_B = np.uint64(0x94D049BB133111EB)
_PHASE_CODES = {Phase.GRADIENT: 1, Phase.PARAMETER: 2}


class Dropped(Enum):
    DROPPED = "dropped"


DROPPED = Dropped.DROPPED


@dataclass(frozen=True)
class DropConfig:
    p_grad: float = 0.0
    p_param: float = 0.0
    seed: int = 0
    # Gradient phase only; off just to reach the zero-survivor path.
    self_delivery: bool = True

    def __post_init__(self):
        for name in ("p_grad", "p_param"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {value}")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed}")

    def rate(self, phase: Phase) -> float:
        return self.p_grad if phase is Phase.GRADIENT else self.p_param


def _splitmix(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * _MIX_A
    z = (z ^ (z >> np.uint64(27))) * _MIX_B
    return z ^ (z >> np.uint64(31))


def uniform_draws(seed: int, phase: Phase, t, src, dst, shard) -> np.ndarray:
    """Counter-based uniforms in [0, 1): a pure hash of the full message tuple"""
    fields = np.broadcast_arrays(
        np.asarray(t, dtype=np.uint64),
        np.asarray(src, dtype=np.uint64),
        np.asarray(dst, dtype=np.uint64),
        np.asarray(shard, dtype=np.uint64),
    )
    with np.errstate(over="ignore"):
        key = _splitmix(np.full(fields[0].shape, np.uint64(seed), dtype=np.uint64) + _GOLDEN)
        key = _splitmix(key ^ (np.uint64(_PHASE_CODES[phase]) * _GOLDEN))
        for value in fields:
            key = _splitmix((key + _GOLDEN) ^ value)
    return (key >> np.uint64(11)).astype(np.float64) * (1.0 / 9007199254740992.0)


def drop_decisions(cfg: DropConfig, phase: Phase, t, src, dst, shard) -> np.ndarray:
    """Vectorized delivery decisions; True means the message arrived"""
    delivered = uniform_draws(cfg.seed, phase, t, src, dst, shard) >= cfg.rate(phase)
    # An owner's broadcast to itself is local memory and never drops.
    if cfg.self_delivery or phase is Phase.PARAMETER:
        delivered = delivered | (np.asarray(src) == np.asarray(dst))
    return delivered


def drop_decision(cfg: DropConfig, phase: Phase, t: int, src: int, dst: int, shard: int) -> bool:
    return bool(drop_decisions(cfg, phase, t, src, dst, shard))


def transmit(
    payload: Union[GradientPiece, ParamShardMsg],
    cfg: DropConfig,
    phase: Phase,
    t: int,
    src: int,
    dst: int,
    shard: int,
) -> Union[GradientPiece, ParamShardMsg, Dropped]:
    if payload.shard_id != shard:
        raise MessageError(f"Payload carries shard {payload.shard_id} but was sent as shard {shard}")
    if drop_decision(cfg, phase, t, src, dst, shard):
        return payload
    logger.debug(f"Dropped {phase.value} message t={t} {src}->{dst} shard={shard}")
    return DROPPED


def reception_mask(cfg: DropConfig, phase: Phase, t: int, layout: ShardLayout) -> ReceptionMask:
    """All delivery decisions of one phase at iteration t"""
    workers = np.arange(layout.num_workers)[:, None]
    shards = np.arange(layout.num_shards)[None, :]
    owners = shards % layout.num_workers
    if phase is Phase.GRADIENT:
        src, dst = workers, owners
    else:
        src, dst = owners, workers
    src, dst, shard = np.broadcast_arrays(src, dst, shards)
    entries = drop_decisions(cfg, phase, t, src, dst, shard)
    return ReceptionMask(phase=phase, iteration=t, entries=entries)
