import logging
from typing import Any, Dict, Optional

import numpy as np

from app.schemas.game_schema import AggregativeGame, GameConstants
from app.schemas.geometry_schema import ConvexBody

logger = logging.getLogger(__name__)

DEFAULTS: Dict[str, Any] = {
    "N": 4,
    "slope": 0.01,
    "intercept": None,  # defaults to N
    "offset": 13.0,
    "semiaxes": (4.0, 3.0),
    "center": (0.0, 0.0),
}


def build_cournot(overrides: Optional[Dict[str, Any]] = None) -> AggregativeGame:
    """
    Two-good Cournot oligopoly.

    Player i (1-based) pays f_i(x_i, Q) = x_i'(d_i(x_i) - p(Q)) with
    production cost d_i(x_i) = 0.5(x_i + (offset - i) 1) and inverse demand
    p(Q) = intercept 1 - slope Q. Every player is restricted to the same
    ellipse, E_{4,3}(0,0) by default.
    """
    params = {**DEFAULTS, **(overrides or {})}
    unknown = set(params) - set(DEFAULTS)
    if unknown:
        raise ValueError(f"Unknown Cournot parameters: {sorted(unknown)}")

    N = int(params["N"])
    slope = float(params["slope"])
    intercept = float(N if params["intercept"] is None else params["intercept"])
    offset = float(params["offset"])
    semiaxes = np.asarray(params["semiaxes"], dtype=float)
    center = np.asarray(params["center"], dtype=float)
    n = semiaxes.shape[0]

    def payoff(i: int, x_i: np.ndarray, Q: np.ndarray) -> float:
        cost = 0.5 * (x_i + (offset - (i + 1)))
        price = intercept - slope * Q
        return float(x_i @ (cost - price))

    def grad_x(i: int, x_i: np.ndarray, Q: np.ndarray) -> np.ndarray:
        return x_i + 0.5 * (offset - (i + 1)) - (intercept - slope * Q)

    def grad_Q(i: int, x_i: np.ndarray, Q: np.ndarray) -> np.ndarray:
        return slope * x_i

    body = ConvexBody.ellipsoid(semiaxes, center)
    logger.debug(f"Built Cournot game N={N} slope={slope} intercept={intercept}")
    return AggregativeGame(
        name="cournot",
        N=N,
        n=n,
        M=n,
        bodies=tuple(body for _ in range(N)),
        payoff=payoff,
        grad_x=grad_x,
        grad_Q=grad_Q,
        constants=GameConstants(kappa=1.0, c1=1.0 + slope / N, c2=slope, c3=1.0),
        parameters={**params, "intercept": intercept},
    )
