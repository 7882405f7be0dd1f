from typing import Any, Callable, Dict, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.schemas.geometry_schema import ConvexBody, Polyhedron

FeasibleSet = Union[ConvexBody, Polyhedron]

# f_i(x_i, Q) -> float, gradients -> vectors, q_i(x_i) -> M-vector, Jacobian -> M x n
PayoffFn = Callable[[int, np.ndarray, np.ndarray], float]
GradientFn = Callable[[int, np.ndarray, np.ndarray], np.ndarray]
AggregationFn = Callable[[int, np.ndarray], np.ndarray]


def identity_map(i: int, x_i: np.ndarray) -> np.ndarray:
    return np.asarray(x_i, dtype=float)


def identity_jacobian(i: int, x_i: np.ndarray) -> np.ndarray:
    return np.eye(len(x_i))


class GameConstants(BaseModel):
    """Strong monotonicity and Lipschitz constants of the pseudo-gradient"""
    kappa: float = Field(gt=0)
    c1: float = Field(gt=0)
    c2: float = Field(gt=0)
    c3: float = Field(gt=0)
    varsigma: Optional[Tuple[float, ...]] = None

    @property
    def c(self) -> float:
        return self.c1 + self.c2 * self.c3


class AggregativeGame(BaseModel):
    '''
    N players with actions x_i in R^n, each paying f_i(x_i, Q(x)) where
    Q(x) = (1/N) sum q_i(x_i) lives in R^M.

    grad_x / grad_Q may be None, in which case central differences of the
    payoff are used.
    '''
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    name: str
    N: int = Field(ge=1)
    n: int = Field(ge=1)
    M: int = Field(ge=1)
    bodies: Tuple[FeasibleSet, ...]
    payoff: PayoffFn
    grad_x: Optional[GradientFn] = None
    grad_Q: Optional[GradientFn] = None
    q: AggregationFn = identity_map
    q_jac: Callable[[int, np.ndarray], np.ndarray] = identity_jacobian
    constants: GameConstants
    parameters: Dict[str, Any] = {}

    @field_validator("name")
    def validate_name(cls, v):
        if not v.strip():
            raise ValueError("Game name cannot be empty")
        return v

    @model_validator(mode="after")
    def validate_bodies(self):
        if len(self.bodies) != self.N:
            raise ValueError(f"Expected {self.N} feasible sets, got {len(self.bodies)}")
        for i, body in enumerate(self.bodies):
            if body.dim != self.n:
                raise ValueError(f"Feasible set of player {i} has dimension {body.dim}, expected {self.n}")
        return self


class ConstantsEstimate(BaseModel):
    """Sampled counterparts of GameConstants"""
    kappa: float
    c1: float
    c2: float
    c3: float
    varsigma: Tuple[float, ...]
    samples: int
    divergent: Tuple[str, ...] = ()
