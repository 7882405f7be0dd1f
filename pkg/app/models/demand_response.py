import logging
from typing import Any, Dict, Optional

import numpy as np

from app.schemas.game_schema import AggregativeGame, GameConstants
from app.schemas.geometry_schema import ConvexBody

logger = logging.getLogger(__name__)

DEFAULTS: Dict[str, Any] = {
    "N": 10,
    "n": 3,
    "iota": 0.05,
    "omega": 0.001,
    "p0": 1.0,
    "pi_scale": 0.5,
    "semiaxes": (7.0, 6.0, 5.0),
    "radius": None,
}


def build_demand_response(overrides: Optional[Dict[str, Any]] = None) -> AggregativeGame:
    '''
    Demand response among N consumers.

    Consumer i (1-based) pays
        f_i(x_i, Q) = iota (x_i - pi_i)'(x_i - pi_i) + x_i' P(Q)
    with target pi_i = pi_scale (N - i) 1 and price P(Q) = omega N Q + p0 1.

    Setting `radius` replaces the ellipsoid by a ball of dimension n; setting
    `n` without `radius` requires matching `semiaxes`.
    '''
    params = {**DEFAULTS, **(overrides or {})}
    unknown = set(params) - set(DEFAULTS)
    if unknown:
        raise ValueError(f"Unknown demand response parameters: {sorted(unknown)}")

    N = int(params["N"])
    iota = float(params["iota"])
    omega = float(params["omega"])
    p0 = float(params["p0"])
    pi_scale = float(params["pi_scale"])

    if params["radius"] is not None:
        n = int(params["n"])
        body = ConvexBody.ball(float(params["radius"]), n)
    else:
        semiaxes = np.asarray(params["semiaxes"], dtype=float)
        n = semiaxes.shape[0]
        if "n" in (overrides or {}) and int(params["n"]) != n:
            raise ValueError(f"n={params['n']} does not match {n} semiaxes")
        body = ConvexBody.ellipsoid(semiaxes)

    targets = [pi_scale * (N - (i + 1)) * np.ones(n) for i in range(N)]

    def payoff(i: int, x_i: np.ndarray, Q: np.ndarray) -> float:
        deviation = x_i - targets[i]
        return float(iota * deviation @ deviation + x_i @ (omega * N * Q + p0))

    def grad_x(i: int, x_i: np.ndarray, Q: np.ndarray) -> np.ndarray:
        return 2.0 * iota * (x_i - targets[i]) + omega * N * Q + p0

    def grad_Q(i: int, x_i: np.ndarray, Q: np.ndarray) -> np.ndarray:
        return omega * N * x_i

    strong = 2.0 * iota + omega
    logger.debug(f"Built demand response game N={N} n={n} kind={body.kind}")
    return AggregativeGame(
        name="demand_response",
        N=N,
        n=n,
        M=n,
        bodies=tuple(body for _ in range(N)),
        payoff=payoff,
        grad_x=grad_x,
        grad_Q=grad_Q,
        constants=GameConstants(kappa=strong, c1=strong, c2=omega * N, c3=1.0),
        parameters={**params, "n": n},
    )
