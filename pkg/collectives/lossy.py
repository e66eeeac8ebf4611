import logging
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from core.exceptions import MessageError, ShardLayoutError
from core.sharding import ShardLayout
from core.types import GradientPiece, Phase, ReceptionMask, ordered_sum
from netsim.channel import DropConfig, reception_mask

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GradientExchangeResult:
    """What every shard owner holds after the lossy reduce-scatter.

    ``received[j]`` is indexed by sender; dropped slots are None.
    """
    received: Dict[int, List[Optional[GradientPiece]]]
    mask: ReceptionMask

    def delivered_pieces(self, shard: int) -> List[GradientPiece]:
        return [piece for piece in self.received[shard] if piece is not None]

    def received_count(self, shard: int) -> int:
        return int(self.mask.row(shard).sum())


class ViewAction(Enum):
    KEEP_STALE = "keep_stale"


KEEP_STALE = ViewAction.KEEP_STALE


@dataclass(frozen=True)
class NewValue:
    values: np.ndarray


@dataclass(frozen=True)
class ParamViewUpdate:
    """decisions[i][j] says what worker i did with the broadcast of shard j"""
    decisions: Tuple[Tuple[Union[NewValue, ViewAction], ...], ...]
    mask: ReceptionMask

    def is_fresh(self, worker: int, shard: int) -> bool:
        return isinstance(self.decisions[worker][shard], NewValue)


def _validate_grid(all_pieces: Sequence[Sequence[GradientPiece]], layout: ShardLayout):
    if len(all_pieces) != layout.num_workers:
        raise MessageError(f"Gradient grid has {len(all_pieces)} rows, expected {layout.num_workers} workers")
    for i, row in enumerate(all_pieces):
        if len(row) != layout.num_shards:
            raise MessageError(f"Worker {i} sent {len(row)} pieces, expected {layout.num_shards}")
        for j, piece in enumerate(row):
            if piece is None:
                raise MessageError(f"Missing gradient piece ({i}, {j})")
            if piece.shard_id != j or piece.owner != i:
                raise MessageError(
                    f"Piece at ({i}, {j}) is labelled ({piece.owner}, {piece.shard_id})"
                )
            if piece.values.shape != (layout.size(j),):
                raise MessageError(
                    f"Piece ({i}, {j}) has length {piece.values.shape[0]}, shard size is {layout.size(j)}"
                )


def reduce_scatter_lossy(
    all_pieces: Sequence[Sequence[GradientPiece]],
    layout: ShardLayout,
    cfg: DropConfig,
    t: int,
) -> GradientExchangeResult:
    """Route every piece g_t^(i,j) to the owner of shard j through the lossy channel.

    No aggregation happens here; the raw mask is handed to the aggregation policy.
    """
    _validate_grid(all_pieces, layout)
    mask = reception_mask(cfg, Phase.GRADIENT, t, layout)

    received: Dict[int, List[Optional[GradientPiece]]] = {}
    for j in range(layout.num_shards):
        row = mask.row(j)
        received[j] = [all_pieces[i][j] if row[i] else None for i in range(layout.num_workers)]

    logger.debug(f"reduce-scatter t={t}: delivered {int(mask.entries.sum())}/{mask.entries.size} pieces")
    return GradientExchangeResult(received=received, mask=mask)


def all_gather_lossy(
    owner_params: Sequence[np.ndarray],
    prev_views: Sequence[np.ndarray],
    layout: ShardLayout,
    cfg: DropConfig,
    t: int,
) -> Tuple[List[np.ndarray], ParamViewUpdate]:
    """Broadcast every owner's theta_{t+1}^(j); undelivered shards keep the stale value"""
    if len(owner_params) != layout.num_shards:
        raise ShardLayoutError(f"Expected {layout.num_shards} owner shards, got {len(owner_params)}")
    if len(prev_views) != layout.num_workers:
        raise ShardLayoutError(f"Expected {layout.num_workers} views, got {len(prev_views)}")
    for j, shard in enumerate(owner_params):
        if np.shape(shard) != (layout.size(j),):
            raise ShardLayoutError(f"Owner shard {j} has shape {np.shape(shard)}, expected ({layout.size(j)},)")
    for i, view in enumerate(prev_views):
        if np.shape(view) != (layout.total_dim,):
            raise ShardLayoutError(f"View of worker {i} has shape {np.shape(view)}, expected ({layout.total_dim},)")

    mask = reception_mask(cfg, Phase.PARAMETER, t, layout)
    new_views = []
    decisions = []
    for i in range(layout.num_workers):
        view = np.array(prev_views[i], dtype=np.float64, copy=True)
        row = []
        for j in range(layout.num_shards):
            if mask.entries[i, j]:
                view[layout.slice(j)] = owner_params[j]
                row.append(NewValue(values=np.array(owner_params[j], dtype=np.float64, copy=True)))
            else:
                row.append(KEEP_STALE)
        new_views.append(view)
        decisions.append(tuple(row))

    return new_views, ParamViewUpdate(decisions=tuple(decisions), mask=mask)


def lossy_all_reduce(
    vectors: Sequence[np.ndarray],
    layout: ShardLayout,
    cfg: DropConfig,
    t: int,
    initial_views: Optional[Sequence[np.ndarray]] = None,
) -> List[np.ndarray]:
    """SUM all-reduce as reduce-scatter followed by all-gather, both lossy"""
    grid = [
        [GradientPiece(shard_id=j, owner=i, values=piece) for j, piece in enumerate(layout.split(np.asarray(v, dtype=np.float64)))]
        for i, v in enumerate(vectors)
    ]
    exchange = reduce_scatter_lossy(grid, layout, cfg, t)
    reduced = [ordered_sum([piece.values for piece in exchange.delivered_pieces(j)]) for j in range(layout.num_shards)]
    if initial_views is None:
        initial_views = [np.zeros(layout.total_dim) for _ in range(layout.num_workers)]
    views, _ = all_gather_lossy(reduced, initial_views, layout, cfg, t)
    return views


def replay_views(
    initial_views: Sequence[np.ndarray],
    owner_history: Sequence[Sequence[np.ndarray]],
    masks: Sequence[ReceptionMask],
    layout: ShardLayout,
) -> List[np.ndarray]:
    """Rebuild every view from the owners' broadcast history and parameter masks"""
    views = [np.array(v, dtype=np.float64, copy=True) for v in initial_views]
    for shards, mask in zip(owner_history, masks):
        if mask.phase is not Phase.PARAMETER:
            raise MessageError("Only parameter-phase masks can be replayed")
        for i in range(layout.num_workers):
            for j in range(layout.num_shards):
                if mask.entries[i, j]:
                    views[i][layout.slice(j)] = shards[j]
    return views
