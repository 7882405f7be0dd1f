import logging
from typing import Optional, Sequence

import numpy as np

from app.exceptions import InfeasibleError, InvalidInputError
from app.schemas.geometry_schema import Polyhedron
from app.schemas.qp_schema import QpSolution

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-10
MAX_SWEEPS = 1_000_000
REFINE_EVERY = 25
DIVERGENCE_LIMIT = 1e12


def kkt_residual(poly: Polyhedron, z, point, multipliers) -> float:
    """Largest of the primal, dual, complementarity and stationarity residuals"""
    z = np.asarray(z, dtype=float)
    point = np.asarray(point, dtype=float)
    multipliers = np.asarray(multipliers, dtype=float)
    slack = poly.b - poly.B @ point
    primal = max(0.0, float(-np.min(slack)))
    dual = max(0.0, float(-np.min(multipliers)))
    complementarity = float(np.max(np.abs(multipliers * slack)))
    stationarity = float(np.linalg.norm(point - z + poly.B.T @ multipliers))
    return max(primal, dual, complementarity, stationarity)


def _solve_on_support(B: np.ndarray, b: np.ndarray, z: np.ndarray, support: Sequence[int]):
    # y = z - B_S^T lam with B_S y = b_S
    p = B.shape[0]
    multipliers = np.zeros(p)
    if len(support) == 0:
        return z.copy(), multipliers
    rows = np.asarray(sorted(support), dtype=int)
    B_S = B[rows]
    gram = B_S @ B_S.T
    lam, *_ = np.linalg.lstsq(gram, B_S @ z - b[rows], rcond=None)
    multipliers[rows] = lam
    return z - B_S.T @ lam, multipliers


def _active_set_refine(poly: Polyhedron, z: np.ndarray, guess: Sequence[int], tol: float):
    """
    Primal-dual active-set cleanup started from a guessed support.

    Drops the most negative multiplier or adds the most violated facet until
    the equality-constrained solution is a KKT point. Returns None when the
    pass does not settle within 4p changes.
    """
    B, b = poly.B, poly.b
    support = set(int(j) for j in guess)
    for _ in range(4 * poly.p + 1):
        point, multipliers = _solve_on_support(B, b, z, list(support))
        violation = B @ point - b
        worst_dual = int(np.argmin(multipliers))
        if multipliers[worst_dual] < -tol:
            support.discard(worst_dual)
            continue
        worst_primal = int(np.argmax(violation))
        if violation[worst_primal] > tol:
            if worst_primal in support:
                return None
            support.add(worst_primal)
            continue
        multipliers = np.maximum(multipliers, 0.0)
        return point, multipliers
    return None


class PolyprojService:
    """Euclidean projection onto {y : B y <= b} (the per-step quadratic program)"""

    @staticmethod
    def project_polyhedron(
        poly: Polyhedron,
        z,
        tol: float = DEFAULT_TOL,
        warm_start: Optional[np.ndarray] = None,
    ) -> QpSolution:
        '''
        Solve min ||z - y||^2 s.t. B y <= b.

        Hildreth dual cyclic coordinate ascent; with unit-norm rows each dual
        coordinate update is mu_j <- max(0, mu_j + B_j y - b_j) and the primal
        iterate y = z - B^T mu is kept in sync. An active-set pass polishes the
        result periodically and whenever a sweep stalls above tolerance.

        Args:
            poly: bounded, nonempty polyhedron
            z: point to project
            tol: KKT tolerance
            warm_start: multipliers from a previous, nearby projection

        Returns:
            QpSolution with point, multipliers, sweep count and KKT residual

        Raises:
            InvalidInputError: dimension mismatch or tol <= 0
            InfeasibleError: dual iterates diverge or sweeps are exhausted
        '''
        z = np.asarray(z, dtype=float)
        if z.shape != (poly.dim,):
            raise InvalidInputError(f"Point must have dimension {poly.dim}, got shape {z.shape}")
        if tol <= 0:
            raise InvalidInputError("tol must be positive")
        if not np.all(np.isfinite(z)):
            raise InvalidInputError("Point contains non-finite entries")

        B, b = poly.B, poly.b
        p = poly.p
        if np.all(B @ z <= b):
            # feasible input: the certificate is trivially valid, skip validation
            return QpSolution.model_construct(point=z.copy(), multipliers=np.zeros(p), iterations=0, kkt_residual=0.0)

        if warm_start is not None:
            guess = np.flatnonzero(np.asarray(warm_start) > 0)
            if guess.size:
                refined = _active_set_refine(poly, z, guess, tol)
                if refined is not None:
                    residual = kkt_residual(poly, z, *refined)
                    if residual <= tol:
                        return QpSolution(point=refined[0], multipliers=refined[1], iterations=0,
                                          kkt_residual=residual)

        rows = [row for row in B]
        offsets = [float(value) for value in b]
        mu = np.zeros(p)
        y = z.copy()

        for sweep in range(1, MAX_SWEEPS + 1):
            previous = y.copy()
            changed = False
            for j in range(p):
                row = rows[j]
                updated = mu[j] + float(row @ y) - offsets[j]
                if updated < 0.0:
                    updated = 0.0
                step = updated - mu[j]
                if step != 0.0:
                    mu[j] = updated
                    y -= step * row
                    changed = True

            if float(np.linalg.norm(mu)) > DIVERGENCE_LIMIT:
                logger.error(f"Dual iterates diverged after {sweep} sweeps")
                raise InfeasibleError("Polyhedron appears empty: projection dual diverged")

            moved = float(np.linalg.norm(y - previous))
            if moved < tol or not changed:
                residual = kkt_residual(poly, z, y, mu)
                if residual <= tol:
                    return QpSolution(point=y, multipliers=mu, iterations=sweep, kkt_residual=residual)

            if moved < tol or not changed or sweep % REFINE_EVERY == 0:
                support = np.flatnonzero((mu > 0) | (B @ y - b > -1e-9))
                refined = _active_set_refine(poly, z, support, tol)
                if refined is not None:
                    residual = kkt_residual(poly, z, *refined)
                    if residual <= tol:
                        return QpSolution(point=refined[0], multipliers=refined[1], iterations=sweep,
                                          kkt_residual=residual)

        logger.error(f"Projection did not reach tol={tol:g} in {MAX_SWEEPS} sweeps")
        raise InfeasibleError("Projection sweeps exhausted without a KKT point")

    @staticmethod
    def kkt_residual(poly: Polyhedron, z, solution: QpSolution) -> float:
        return kkt_residual(poly, z, solution.point, solution.multipliers)

    @staticmethod
    def project_by_enumeration(poly: Polyhedron, z) -> np.ndarray:
        """
        Brute-force projection: project onto every facet line and every
        pairwise facet intersection, keep the feasible candidate closest to z.
        Exact in 2D; used as a test oracle.
        """
        z = np.asarray(z, dtype=float)
        B, b = poly.B, poly.b
        if np.all(B @ z <= b + 1e-12):
            return z.copy()
        candidates = [z - (float(B[j] @ z) - b[j]) * B[j] for j in range(poly.p)]
        for j in range(poly.p):
            for k in range(j + 1, poly.p):
                point, _ = _solve_on_support(B, b, z, [j, k])
                candidates.append(point)
        best = None
        best_distance = np.inf
        for point in candidates:
            if np.all(B @ point <= b + 1e-9):
                distance = float(np.linalg.norm(point - z))
                if distance < best_distance:
                    best, best_distance = point, distance
        if best is None:
            raise InfeasibleError("No feasible candidate found by enumeration")
        return best
