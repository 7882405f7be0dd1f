import logging
import math
import random

import networkx as nx
import numpy as np
from pydantic import ValidationError
from tenacity import RetryError, retry, retry_if_exception_type, stop_after_attempt

from app.exceptions import DisconnectedGraphError, InvalidInputError
from app.schemas.network_schema import Digraph, GainCertificate

logger = logging.getLogger(__name__)

BALANCE_TOL = 1e-12
ZERO_EIGENVALUE = 1e-9
ER_MAX_ATTEMPTS = 1000


class NetworkService:

    @staticmethod
    def from_weights(matrix, label: str = "custom") -> Digraph:
        try:
            return Digraph(weights=matrix, label=label)
        except ValidationError as e:
            raise InvalidInputError(f"Invalid weight matrix: {e.errors()[0]['msg']}") from e

    @staticmethod
    def from_networkx(G: nx.DiGraph, label: str) -> Digraph:
        # nx rows are sources; ours are receivers
        return NetworkService.from_weights(nx.to_numpy_array(G, nodelist=sorted(G.nodes)).T, label)

    @staticmethod
    def to_networkx(g: Digraph) -> nx.DiGraph:
        return nx.from_numpy_array(g.weights.T, create_using=nx.DiGraph)

    @staticmethod
    def _check_size(N: int):
        if N < 2:
            raise InvalidInputError(f"A communication graph needs N >= 2, got {N}")

    @staticmethod
    def ring(N: int) -> Digraph:
        """Directed cycle 1 -> 2 -> ... -> N -> 1 with unit weights"""
        NetworkService._check_size(N)
        return NetworkService.from_networkx(nx.cycle_graph(N, create_using=nx.DiGraph), f"ring{N}")

    @staticmethod
    def complete(N: int) -> Digraph:
        NetworkService._check_size(N)
        return NetworkService.from_networkx(nx.complete_graph(N, create_using=nx.DiGraph), f"complete{N}")

    @staticmethod
    def erdos_renyi(N: int, p: float, seed: int = 0) -> Digraph:
        """
        Undirected G(N, p) used in both directions, redrawn until connected.
        All draws come from one seeded generator, so the result is
        reproducible from (N, p, seed).
        """
        NetworkService._check_size(N)
        if not 0 < p <= 1:
            raise InvalidInputError(f"Edge probability must lie in (0, 1], got {p}")
        rng = random.Random(seed)

        @retry(retry=retry_if_exception_type(DisconnectedGraphError), stop=stop_after_attempt(ER_MAX_ATTEMPTS))
        def draw() -> nx.Graph:
            G = nx.gnp_random_graph(N, p, seed=rng)
            if not nx.is_connected(G):
                raise DisconnectedGraphError("Erdos-Renyi draw is disconnected")
            return G

        try:
            G = draw()
        except RetryError as e:
            logger.error(f"No connected ER graph after {ER_MAX_ATTEMPTS} draws (N={N}, p={p})")
            raise DisconnectedGraphError(f"Could not draw a connected ER graph with N={N}, p={p}") from e
        attempts = draw.statistics.get("attempt_number", 1)
        logger.info(f"ER graph N={N} p={p} seed={seed} connected after {attempts} draw(s)")
        return NetworkService.from_networkx(G.to_directed(), f"er{N}")

    @staticmethod
    def laplacian(g: Digraph) -> np.ndarray:
        """L = diag(row sums) - A, so L 1 = 0"""
        return np.diag(g.weights.sum(axis=1)) - g.weights

    @staticmethod
    def is_weight_balanced(g: Digraph) -> bool:
        in_weight = g.weights.sum(axis=1)
        out_weight = g.weights.sum(axis=0)
        return bool(np.max(np.abs(in_weight - out_weight)) <= BALANCE_TOL)

    @staticmethod
    def is_strongly_connected(g: Digraph) -> bool:
        return bool(nx.is_strongly_connected(NetworkService.to_networkx(g)))

    @staticmethod
    def symmetrized_spectrum(g: Digraph) -> np.ndarray:
        """Ascending eigenvalues of (L + L')/2"""
        L = NetworkService.laplacian(g)
        return np.linalg.eigvalsh(0.5 * (L + L.T))

    @staticmethod
    def lambda_min_positive(g: Digraph) -> float:
        '''
        Smallest eigenvalue of (L + L')/2 above 1e-9.

        Raises:
            DisconnectedGraphError: graph not strongly connected, or no
                eigenvalue above the threshold
        '''
        if not NetworkService.is_strongly_connected(g):
            raise DisconnectedGraphError(f"Graph '{g.label}' is not strongly connected")
        if not NetworkService.is_weight_balanced(g):
            logger.warning(f"Graph '{g.label}' is not weight-balanced; (L + L')/2 may be indefinite")
        spectrum = NetworkService.symmetrized_spectrum(g)
        positive = spectrum[spectrum > ZERO_EIGENVALUE]
        if positive.size == 0:
            raise DisconnectedGraphError(f"Graph '{g.label}' has no positive symmetrized eigenvalue")
        return float(positive[0])

    @staticmethod
    def gain_gate(
        g: Digraph,
        kappa: float,
        c1: float,
        c2: float,
        c3: float,
        beta1: float,
        beta2: float,
    ) -> GainCertificate:
        '''
        Evaluate the gain conditions
            0 < beta1 < 2 kappa / c^2
            beta2 > 2 c2 c3 (2 + beta1 kappa + 2 beta1 c) / (lambda (2 kappa - beta1 c^2))
        with c = c1 + c2 c3. The beta2 bound is +inf once beta1 violates the first.
        '''
        if min(kappa, c1, c2, c3) <= 0:
            raise InvalidInputError("kappa, c1, c2 and c3 must be positive")
        lam = NetworkService.lambda_min_positive(g)
        c = c1 + c2 * c3
        beta1_upper = 2.0 * kappa / c ** 2
        beta1_ok = 0.0 < beta1 < beta1_upper
        denominator = lam * (2.0 * kappa - beta1 * c ** 2)
        if beta1_ok and denominator > 0:
            beta2_lower = 2.0 * c2 * c3 * (2.0 + beta1 * kappa + 2.0 * beta1 * c) / denominator
        else:
            beta2_lower = math.inf
        return GainCertificate(
            beta1=beta1, beta2=beta2,
            kappa=kappa, c1=c1, c2=c2, c3=c3,
            c=c, lam=lam,
            beta1_upper=beta1_upper,
            beta2_lower=beta2_lower,
            beta1_ok=beta1_ok,
            beta2_ok=bool(beta2 > beta2_lower),
        )
