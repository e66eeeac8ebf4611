from typing import List, Sequence

import numpy as np

from core.exceptions import MessageError
from core.types import ordered_sum


def all_reduce_reference(vectors: Sequence[np.ndarray]) -> np.ndarray:
    """Lossless SUM all-reduce, accumulated in ascending worker order"""
    if not vectors:
        raise MessageError("all-reduce needs at least one vector")
    lengths = {np.shape(v) for v in vectors}
    if len(lengths) != 1:
        raise MessageError(f"all-reduce inputs differ in length: {sorted(lengths)}")
    return ordered_sum([np.asarray(v, dtype=np.float64) for v in vectors])


def reduce_broadcast_reference(vectors: Sequence[np.ndarray], root: int = 0) -> List[np.ndarray]:
    """Parameter-server reading of all-reduce: reduce onto ``root`` then broadcast"""
    if not 0 <= root < len(vectors):
        raise MessageError(f"Root {root} outside 0..{len(vectors) - 1}")
    reduced = all_reduce_reference(vectors)
    return [reduced.copy() for _ in vectors]
