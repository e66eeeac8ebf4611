import numpy as np

from .trajectory import DriftTrajectory, TrajectorySource


def _check(p: float, sigma2: float):
    if not 0.0 <= p < 1.0:
        raise ValueError(f"drop rate must lie in [0, 1), got {p}")
    if sigma2 < 0:
        raise ValueError(f"sigma2 must be non-negative, got {sigma2}")


def drift_recurrence_step(e_t: float, p: float, sigma2: float) -> float:
    """E_{t+1} = p^2 E_t + 2p(1-p) sigma^2"""
    _check(p, sigma2)
    if e_t < 0:
        raise ValueError(f"E_t must be non-negative, got {e_t}")
    return p * p * e_t + 2.0 * p * (1.0 - p) * sigma2


def drift_closed_form(t: int, e0: float, p: float, sigma2: float) -> float:
    _check(p, sigma2)
    if e0 < 0 or t < 0:
        raise ValueError(f"Need t >= 0 and E0 >= 0 (t={t}, E0={e0})")
    decay = (p * p) ** t
    return decay * e0 + 2.0 * p * (1.0 - p) * sigma2 * (1.0 - decay) / (1.0 - p * p)


def drift_steady_state(p: float, sigma2: float) -> float:
    """lim E[D_t^2] = 2p/(1+p) sigma^2"""
    _check(p, sigma2)
    return 2.0 * p / (1.0 + p) * sigma2


def recurrence_trajectory(iterations: int, e0: float, p: float, sigma2: float) -> DriftTrajectory:
    values = [float(e0)]
    for _ in range(iterations):
        values.append(drift_recurrence_step(values[-1], p, sigma2))
    return DriftTrajectory(TrajectorySource.RECURRENCE, np.arange(iterations + 1), np.array(values))


def closed_form_trajectory(iterations: int, e0: float, p: float, sigma2: float) -> DriftTrajectory:
    values = np.array([drift_closed_form(t, e0, p, sigma2) for t in range(iterations + 1)])
    return DriftTrajectory(TrajectorySource.CLOSED_FORM, np.arange(iterations + 1), values)
