from typing import Literal, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator, model_validator
from scipy.optimize import linprog

ROW_NORM_TOL = 1e-12
VERTEX_TOL = 1e-10


def _as_vector(value) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.ndim != 1:
        raise ValueError("Expected a one-dimensional vector")
    return arr


def _is_bounded(B: np.ndarray, b: np.ndarray) -> bool:
    # finite support value along every +-e_j; linprog status 3 is "unbounded"
    n = B.shape[1]
    for j in range(n):
        for sign in (1.0, -1.0):
            cost = np.zeros(n)
            cost[j] = -sign
            result = linprog(cost, A_ub=B, b_ub=b, bounds=[(None, None)] * n, method="highs")
            if result.status == 2:
                raise ValueError("Polyhedron is empty")
            if result.status == 3:
                return False
    return True


class ConvexBody(BaseModel):
    '''
    Exactly-projectable compact convex set: an axis-aligned ellipsoid
    E_v(c) = {x : sum((x - c)^2 / v^2) <= 1} or a ball (all semiaxes equal)
    '''
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    kind: Literal["ellipsoid", "ball"]
    center: np.ndarray
    semiaxes: np.ndarray

    @field_validator("center", "semiaxes", mode="before")
    def validate_vectors(cls, v):
        return _as_vector(v)

    @field_validator("semiaxes")
    def validate_semiaxes(cls, v):
        if not np.all(np.isfinite(v)) or np.any(v <= 0):
            raise ValueError("All semiaxes must be strictly positive")
        return v

    @model_validator(mode="after")
    def validate_shape(self):
        if self.center.shape != self.semiaxes.shape:
            raise ValueError("center and semiaxes must have the same length")
        if self.kind == "ball" and not np.all(self.semiaxes == self.semiaxes[0]):
            raise ValueError("A ball needs identical semiaxes")
        return self

    @classmethod
    def ellipsoid(cls, semiaxes, center=None) -> "ConvexBody":
        semiaxes = _as_vector(semiaxes)
        center = np.zeros_like(semiaxes) if center is None else center
        return cls(kind="ellipsoid", center=center, semiaxes=semiaxes)

    @classmethod
    def ball(cls, radius: float, dim: int, center=None) -> "ConvexBody":
        center = np.zeros(dim) if center is None else center
        return cls(kind="ball", center=center, semiaxes=np.full(dim, float(radius)))

    @property
    def dim(self) -> int:
        return int(self.center.shape[0])


class Polyhedron(BaseModel):
    '''
    Halfspace system {y : B y <= b} with unit-norm rows, plus the inscribed
    vertices that generated it (may be empty for user-supplied systems)
    '''
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    B: np.ndarray
    b: np.ndarray
    vertices: np.ndarray
    construction_gaps: Tuple[float, ...] = ()

    @field_validator("B", "vertices", mode="before")
    def validate_matrices(cls, v):
        arr = np.asarray(v, dtype=float)
        if arr.ndim == 1 and arr.size == 0:
            return arr.reshape(0, 0)
        if arr.ndim != 2:
            raise ValueError("Expected a two-dimensional array")
        return arr

    @field_validator("b", mode="before")
    def validate_offsets(cls, v):
        return _as_vector(v)

    @model_validator(mode="after")
    def validate_system(self):
        p, n = self.B.shape
        if p == 0 or n == 0:
            raise ValueError("Polyhedron needs at least one halfspace")
        if self.b.shape != (p,):
            raise ValueError(f"b must have {p} entries")
        norms = np.linalg.norm(self.B, axis=1)
        if np.any(np.abs(norms - 1.0) > ROW_NORM_TOL):
            raise ValueError("Every row of B must have unit Euclidean norm")
        if self.vertices.size:
            if self.vertices.shape[1] != n:
                raise ValueError(f"Vertices must have dimension {n}")
            slack = self.vertices @ self.B.T - self.b
            if np.any(slack > VERTEX_TOL):
                raise ValueError("A stored vertex violates B v <= b")
        if not _is_bounded(self.B, self.b):
            raise ValueError("Polyhedron is unbounded along a coordinate axis")
        return self

    @property
    def dim(self) -> int:
        return int(self.B.shape[1])

    @property
    def p(self) -> int:
        return int(self.B.shape[0])

    @property
    def s(self) -> int:
        return int(self.vertices.shape[0]) if self.vertices.size else 0


class HausdorffEstimate(BaseModel):
    value: float
    resolution: int
    refined: bool
    # unit direction attaining the largest support gap
    direction: Tuple[float, ...] = ()

    @field_validator("value")
    def validate_value(cls, v):
        if v < 0:
            raise ValueError("Hausdorff estimate must be nonnegative")
        return v
