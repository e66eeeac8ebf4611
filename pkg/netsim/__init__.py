from .channel import (
    DropConfig,
    DROPPED,
    Dropped,
    drop_decision,
    drop_decisions,
    reception_mask,
    transmit,
    uniform_draws,
)

__all__ = [
    'DropConfig',
    'DROPPED',
    'Dropped',
    'drop_decision',
    'drop_decisions',
    'reception_mask',
    'transmit',
    'uniform_draws',
]
