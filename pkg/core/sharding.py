from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from .exceptions import ShardLayoutError


@dataclass(frozen=True)
class ShardLayout:
    """Partition of a flat parameter vector into contiguous shards.

    Shard j is owned by worker ``j % num_workers``. With the default of one
    shard per worker this is simply worker j.
    """
    total_dim: int
    num_shards: int
    boundaries: Tuple[Tuple[int, int], ...]
    num_workers: int = 0

    def __post_init__(self):
        if self.num_workers == 0:
            object.__setattr__(self, "num_workers", self.num_shards)
        if len(self.boundaries) != self.num_shards:
            raise ShardLayoutError(
                f"Expected {self.num_shards} ranges, got {len(self.boundaries)}"
            )
        cursor = 0
        for start, stop in self.boundaries:
            if start != cursor or stop <= start:
                raise ShardLayoutError(f"Shard ranges must tile [0, {self.total_dim}) without gaps")
            cursor = stop
        if cursor != self.total_dim:
            raise ShardLayoutError(f"Shard ranges cover [0, {cursor}) instead of [0, {self.total_dim})")

    @property
    def sizes(self) -> List[int]:
        return [stop - start for start, stop in self.boundaries]

    def size(self, shard: int) -> int:
        start, stop = self.boundaries[shard]
        return stop - start

    def slice(self, shard: int) -> slice:
        start, stop = self.boundaries[shard]
        return slice(start, stop)

    def owner(self, shard: int) -> int:
        return shard % self.num_workers

    def owned_by(self, worker: int) -> List[int]:
        return [j for j in range(self.num_shards) if self.owner(j) == worker]

    def split(self, vector: np.ndarray) -> List[np.ndarray]:
        if vector.shape != (self.total_dim,):
            raise ShardLayoutError(
                f"Vector of shape {vector.shape} does not match layout dimension {self.total_dim}"
            )
        return [vector[start:stop] for start, stop in self.boundaries]

    def join(self, pieces: Sequence[np.ndarray]) -> np.ndarray:
        if len(pieces) != self.num_shards:
            raise ShardLayoutError(f"Expected {self.num_shards} pieces, got {len(pieces)}")
        for j, piece in enumerate(pieces):
            if piece.shape != (self.size(j),):
                raise ShardLayoutError(
                    f"Piece {j} has shape {piece.shape}, shard size is {self.size(j)}"
                )
        return np.concatenate(pieces).astype(np.float64, copy=False)


def shard_partition(d: int, n: int, num_workers: int = 0) -> ShardLayout:
    """Split [0, d) into n contiguous near-equal ranges.

    The first ``d mod n`` shards get ``ceil(d/n)`` entries, the rest ``floor(d/n)``.
    """
    if d < 1 or n < 1:
        raise ShardLayoutError(f"Dimension and shard count must be positive (d={d}, N={n})")
    if d < n:
        raise ShardLayoutError(f"Cannot split d={d} into N={n} non-empty shards")

    base, extra = divmod(d, n)
    boundaries = []
    start = 0
    for j in range(n):
        stop = start + base + (1 if j < extra else 0)
        boundaries.append((start, stop))
        start = stop

    return ShardLayout(
        total_dim=d,
        num_shards=n,
        boundaries=tuple(boundaries),
        num_workers=num_workers or n,
    )
