from typing import Any, Dict, Literal, Optional

from pydantic import BaseModel, Field, field_validator, model_validator

from app import settings

ApproxMode = Literal["regular", "greedy", "box", "halfspaces", "exact"]


class ModelSpec(BaseModel):
    name: str
    params: Dict[str, Any] = {}

    @field_validator("name")
    def validate_name(cls, v):
        if not v or not v.strip():
            raise ValueError("Model name is required")
        return v.strip()


class GraphSpec(BaseModel):
    type: Literal["ring", "complete", "er", "weights"] = "ring"
    N: Optional[int] = Field(default=None, ge=2)
    p: float = Field(default=0.5, gt=0, le=1)
    seed: int = 0
    weights_file: Optional[str] = None

    @model_validator(mode="after")
    def validate_weights(self):
        if self.type == "weights" and not self.weights_file:
            raise ValueError("graph.type=weights needs graph.weights_file")
        return self


class ApproxSpec(BaseModel):
    '''
    regular:m  uniform-angle inscribed m-gon (2D)
    greedy:s   support-function greedy polyhedron with s vertices (2D/3D)
    box        inscribed axis box, any dimension
    halfspaces:<file>  user-supplied polyhedron block
    exact      no approximation (exact projections)
    '''
    mode: ApproxMode = "regular"
    count: Optional[int] = Field(default=8, ge=3)
    file: Optional[str] = None

    @classmethod
    def parse(cls, text: str) -> "ApproxSpec":
        head, _, tail = text.strip().partition(":")
        head = head.strip().lower()
        if head in ("regular", "greedy"):
            if not tail:
                raise ValueError(f"'{head}' needs a vertex count, e.g. {head}:8")
            try:
                count = int(tail)
            except ValueError:
                raise ValueError(f"Vertex count must be an integer, got '{tail}'") from None
            return cls(mode=head, count=count)
        if head == "halfspaces":
            return cls(mode="halfspaces", count=None, file=tail.strip())
        if head in ("exact", "box"):
            return cls(mode=head, count=None)
        raise ValueError(f"Unknown approximation '{text}'")

    @model_validator(mode="after")
    def validate_file(self):
        if self.mode == "halfspaces" and not self.file:
            raise ValueError("halfspaces approximation needs a file path")
        if self.mode in ("regular", "greedy") and self.count is None:
            raise ValueError(f"{self.mode} approximation needs a vertex count")
        return self

    @property
    def label(self) -> str:
        if self.mode in ("regular", "greedy"):
            return f"{self.mode}:{self.count}"
        if self.mode == "halfspaces":
            return f"halfspaces:{self.file}"
        return self.mode


class SolverSpec(BaseModel):
    beta1: float = Field(default=0.1, gt=0)
    beta2: float = Field(default=1.0, gt=0)
    h: float = Field(default=0.01, gt=0)
    t_tol: float = Field(default=1e-3, gt=0)
    max_steps: int = Field(default=100_000, ge=1)
    seed: Optional[int] = None
    integrator: Literal["euler", "rk4"] = "euler"
    init: Literal["center", "random"] = "center"
    record_every: int = Field(default=1, ge=1)
    warm_start: bool = True


class OutputSpec(BaseModel):
    dir: str = settings.DEFAULT_OUT_DIR
    repeats: int = Field(default=5, ge=1)


class ExperimentConfig(BaseModel):
    model: ModelSpec
    graph: GraphSpec = GraphSpec()
    approx: ApproxSpec = ApproxSpec()
    solver: SolverSpec = SolverSpec()
    output: OutputSpec = OutputSpec()
