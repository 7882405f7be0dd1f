import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator


class QpSolution(BaseModel):
    '''
    Projection of a point onto {y : B y <= b} with its dual certificate
    '''
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    point: np.ndarray
    multipliers: np.ndarray
    iterations: int
    kkt_residual: float

    @field_validator("point", "multipliers", mode="before")
    def validate_vectors(cls, v):
        return np.asarray(v, dtype=float)

    @field_validator("multipliers")
    def validate_multipliers(cls, v):
        if np.any(v < 0):
            raise ValueError("Multipliers must be nonnegative")
        return v

    @field_validator("kkt_residual")
    def validate_residual(cls, v):
        if v < 0:
            raise ValueError("KKT residual must be nonnegative")
        return v

    @property
    def active(self) -> np.ndarray:
        return np.flatnonzero(self.multipliers > 0)
