from .trajectory import DriftTrajectory, TrajectorySource, write_trajectories
from .analytic import (
    drift_recurrence_step,
    drift_closed_form,
    drift_steady_state,
    recurrence_trajectory,
    closed_form_trajectory,
)
from .montecarlo import (
    DriftCase,
    DriftVerification,
    UPDATE_SAMPLERS,
    classify_transition,
    gaussian_updates,
    rademacher_updates,
    replica_transition,
    mc_drift_process,
    verify_drift,
)
from .estimators import (
    CaseTableReport,
    Sigma2Tracker,
    check_case_table,
    estimate_sigma2,
    pairwise_drift,
    sample_pairs,
)

__all__ = [
    'DriftTrajectory',
    'TrajectorySource',
    'write_trajectories',
    'drift_recurrence_step',
    'drift_closed_form',
    'drift_steady_state',
    'recurrence_trajectory',
    'closed_form_trajectory',
    'DriftCase',
    'DriftVerification',
    'UPDATE_SAMPLERS',
    'classify_transition',
    'gaussian_updates',
    'rademacher_updates',
    'replica_transition',
    'mc_drift_process',
    'verify_drift',
    'CaseTableReport',
    'Sigma2Tracker',
    'check_case_table',
    'estimate_sigma2',
    'pairwise_drift',
    'sample_pairs',
]
