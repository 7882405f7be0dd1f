from typing import Optional, Tuple

from pydantic import BaseModel, field_validator, model_validator


class EpsilonReport(BaseModel):
    epsilon_hat: float
    per_player_gaps: Tuple[float, ...]
    ne_distance: Optional[float] = None
    delta_H: Optional[float] = None
    h_vector: Optional[Tuple[float, ...]] = None

    @model_validator(mode="after")
    def validate_max(self):
        if self.per_player_gaps and self.epsilon_hat != max(self.per_player_gaps):
            raise ValueError("epsilon_hat must equal the largest per-player gap")
        return self

    @property
    def h_max(self) -> Optional[float]:
        return max(self.h_vector) if self.h_vector else None


class RateFit(BaseModel):
    """Least-squares line through (t, log ||x(t) - x_ref||)"""
    slope: float
    intercept: float
    r_squared: float
    samples: int

    @field_validator("samples")
    def validate_samples(cls, v):
        if v < 2:
            raise ValueError("A rate fit needs at least two samples")
        return v


class PublishedFlag(BaseModel):
    m: int
    measured: float
    published: Optional[float]
    ratio: Optional[float]
    flagged: bool
