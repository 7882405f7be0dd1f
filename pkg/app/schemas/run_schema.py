from typing import List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator

from app.schemas.geometry_schema import HausdorffEstimate
from app.schemas.network_schema import GainCertificate

Mode = Literal["approx", "exact"]
Integrator = Literal["euler", "rk4"]
InitKind = Literal["center", "random"]


class SolverState(BaseModel):
    '''
    Time-t state of the distributed dynamics, stacked by player:
    x, y are (N, n); phi, zeta are (N, M) with zeta = phi + q(x).
    multipliers holds the last projection duals per player (warm starts).
    '''
    model_config = ConfigDict(arbitrary_types_allowed=True)

    t: float
    x: np.ndarray
    phi: np.ndarray
    zeta: np.ndarray
    y: np.ndarray
    multipliers: Optional[List[Optional[np.ndarray]]] = None

    @field_validator("x", "phi", "zeta", "y", mode="before")
    def validate_blocks(cls, v):
        arr = np.asarray(v, dtype=float)
        if arr.ndim != 2:
            raise ValueError("State blocks must be stacked (players, components) arrays")
        return arr


class StepStats(BaseModel):
    """Accumulated projection cost over a run"""
    projection_time: float = 0.0
    projections: int = 0
    qp_iterations: int = 0

    def record(self, elapsed: float, iterations: int = 0):
        self.projection_time += elapsed
        self.projections += 1
        self.qp_iterations += iterations


class Trajectory(BaseModel):
    """Recorded samples: times (K,), x (K, N, n), zeta (K, N, M)"""
    model_config = ConfigDict(arbitrary_types_allowed=True)

    times: np.ndarray
    x: np.ndarray
    zeta: np.ndarray

    @property
    def samples(self) -> int:
        return int(self.times.shape[0])


class RunReport(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    mode: Mode
    integrator: Integrator = "euler"
    converged: bool
    steps: int
    wall_time: float
    x_final: np.ndarray
    zeta_final: np.ndarray
    qp_iterations_total: int
    projection_time: float
    terminal_residuals: Tuple[float, float]
    certificate: Optional[GainCertificate] = None
    hausdorff: Optional[List[HausdorffEstimate]] = None
    seed: Optional[int] = None

    @property
    def mean_projection_time(self) -> float:
        return self.projection_time / self.steps if self.steps else 0.0
