import logging
from functools import wraps
from typing import Callable

from app.schemas.game_schema import AggregativeGame
from app.schemas.network_schema import Digraph, GainCertificate
from app.services.network_service import NetworkService

logger = logging.getLogger(__name__)


class GainGate:
    """Gain-condition gating for solver runs (warn and continue)"""

    @staticmethod
    def check(game: AggregativeGame, graph: Digraph, beta1: float, beta2: float) -> GainCertificate:
        """
        Evaluate the gain conditions for a game on a graph.

        Args:
            game: provides kappa, c1, c2, c3
            graph: communication digraph (provides lambda)
            beta1: projection gain
            beta2: consensus gain

        Returns:
            GainCertificate; a failing certificate is logged, never raised
        """
        k = game.constants
        certificate = NetworkService.gain_gate(graph, k.kappa, k.c1, k.c2, k.c3, beta1, beta2)
        if not certificate.beta1_ok:
            logger.warning(
                f"beta1={beta1} violates 0 < beta1 < {certificate.beta1_upper:.6g}; convergence is not guaranteed"
            )
        elif not certificate.beta2_ok:
            logger.warning(
                f"beta2={beta2} is below the required {certificate.beta2_lower:.6g} on '{graph.label}'"
            )
        else:
            logger.info(
                f"Gain conditions hold on '{graph.label}' (lambda={certificate.lam:.6g}, "
                f"beta2 > {certificate.beta2_lower:.6g})"
            )
        return certificate

    @staticmethod
    def certified(func: Callable) -> Callable:
        """
        Decorator for run functions taking (game, ..., graph=, beta1=, beta2=)
        keyword arguments: evaluates the gate and passes the certificate on
        as `certificate=` unless the caller already supplied one.
        """
        @wraps(func)
        def wrapper(game: AggregativeGame, *args, **kwargs):
            if kwargs.get("certificate") is None:
                kwargs["certificate"] = GainGate.check(
                    game, kwargs["graph"], kwargs["beta1"], kwargs["beta2"]
                )
            return func(game, *args, **kwargs)
        return wrapper
