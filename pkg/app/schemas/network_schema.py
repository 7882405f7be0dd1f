import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator


class Digraph(BaseModel):
    '''
    Weighted communication digraph. weights[i, j] > 0 iff player i receives
    from player j (edge j -> i).
    '''
    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    weights: np.ndarray
    label: str = "custom"

    @field_validator("weights", mode="before")
    def validate_weights(cls, v):
        A = np.asarray(v, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError("Weight matrix must be square")
        if A.shape[0] < 2:
            raise ValueError("A communication graph needs at least 2 nodes")
        if not np.all(np.isfinite(A)) or np.any(A < 0):
            raise ValueError("Weights must be finite and nonnegative")
        if np.any(np.diag(A) != 0):
            raise ValueError("Weight matrix must have a zero diagonal")
        return A

    @property
    def N(self) -> int:
        return int(self.weights.shape[0])

    @property
    def edge_count(self) -> int:
        return int(np.count_nonzero(self.weights))


class GainCertificate(BaseModel):
    """Outcome of the beta1/beta2 gain conditions for a graph and a set of game constants"""
    model_config = ConfigDict(populate_by_name=True)

    beta1: float
    beta2: float
    kappa: float
    c1: float
    c2: float
    c3: float
    c: float
    lam: float = Field(serialization_alias="lambda")
    beta1_upper: float
    beta2_lower: float
    beta1_ok: bool
    beta2_ok: bool

    @property
    def ok(self) -> bool:
        return self.beta1_ok and self.beta2_ok
