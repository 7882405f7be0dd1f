import itertools
import logging
import math
from typing import List, Optional, Sequence, Union

import numpy as np
from pydantic import ValidationError
from scipy.optimize import brentq, linprog, minimize, minimize_scalar
from scipy.spatial import ConvexHull

from app.exceptions import DomainError, InvalidInputError
from app.schemas.geometry_schema import ConvexBody, HausdorffEstimate, Polyhedron

logger = logging.getLogger(__name__)

FeasibleSet = Union[ConvexBody, Polyhedron]

UNIT_TOL = 1e-12
BOUNDARY_TOL = 1e-10
GRID_2D = 4096
GRID_3D = 20480


def _unit(u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    norm = np.linalg.norm(u)
    if norm == 0.0 or not np.isfinite(norm):
        raise InvalidInputError("Direction must be a nonzero finite vector")
    if abs(norm - 1.0) > UNIT_TOL:
        raise InvalidInputError(f"Direction must have unit norm, got {norm:.3e}")
    return u


def _fibonacci_sphere(count: int) -> np.ndarray:
    k = np.arange(count) + 0.5
    polar = np.arccos(1.0 - 2.0 * k / count)
    azimuth = math.pi * (1.0 + math.sqrt(5.0)) * k
    return np.column_stack([
        np.sin(polar) * np.cos(azimuth),
        np.sin(polar) * np.sin(azimuth),
        np.cos(polar),
    ])


def _spherical(angles) -> np.ndarray:
    polar, azimuth = angles
    return np.array([
        math.sin(polar) * math.cos(azimuth),
        math.sin(polar) * math.sin(azimuth),
        math.cos(polar),
    ])


class GeometryService:
    """Feasible-set geometry: support functions, projections, inscribed polyhedrons"""

    # ------------------------------------------------------------------ bodies

    @staticmethod
    def membership_residual(body: ConvexBody, x) -> float:
        """sum((x - c)^2 / v^2) - 1, nonpositive inside the body"""
        w = (np.asarray(x, dtype=float) - body.center) / body.semiaxes
        return float(w @ w - 1.0)

    @staticmethod
    def support_value(shape: FeasibleSet, u) -> float:
        """g(u) = max <u, x> over the set"""
        u = np.asarray(u, dtype=float)
        if isinstance(shape, ConvexBody):
            return float(u @ shape.center + np.linalg.norm(shape.semiaxes * u))
        if shape.s:
            return float(np.max(shape.vertices @ u))
        result = linprog(-u, A_ub=shape.B, b_ub=shape.b, bounds=[(None, None)] * shape.dim, method="highs")
        return float(-result.fun)

    @staticmethod
    def support_point(body: ConvexBody, u) -> np.ndarray:
        """
        argmax of <u, x> over the body.

        For E_v(c) this is c + (v^2 * u) / ||v * u||, which lies on the boundary.

        Raises:
            InvalidInputError: zero-norm or non-unit direction
        """
        u = _unit(u)
        scaled = body.semiaxes * u
        return body.center + body.semiaxes * scaled / np.linalg.norm(scaled)

    @staticmethod
    def project_exact(shape: FeasibleSet, z) -> np.ndarray:
        '''
        Euclidean projection onto the feasible set.

        Ellipsoids solve the secular equation
            sum(v^2 (z - c)^2 / (v^2 + lam)^2) = 1,  lam > 0
        with a bracketing root finder; polyhedral sets defer to the QP solver.
        '''
        z = np.asarray(z, dtype=float)
        if isinstance(shape, Polyhedron):
            # local import: polyproj depends on this module
            from app.services.polyproj_service import PolyprojService
            return PolyprojService.project_polyhedron(shape, z).point

        w = z - shape.center
        v2 = shape.semiaxes ** 2
        if float(np.sum(w * w / v2)) <= 1.0:
            return z.copy()

        if shape.kind == "ball":
            radius = shape.semiaxes[0]
            return shape.center + radius * w / np.linalg.norm(w)

        def secular(lam: float) -> float:
            return float(np.sum(v2 * w * w / (v2 + lam) ** 2) - 1.0)

        hi = float(np.max(shape.semiaxes) * np.linalg.norm(w))
        while secular(hi) > 0.0:
            hi *= 2.0
        lam = brentq(secular, 0.0, hi, xtol=1e-15, rtol=4.0 * np.finfo(float).eps, maxiter=500)
        return shape.center + v2 * w / (v2 + lam)

    @staticmethod
    def kkt_residual_exact(body: ConvexBody, z, x) -> float:
        """Stationarity residual of the ellipsoid projection x of z"""
        z = np.asarray(z, dtype=float)
        x = np.asarray(x, dtype=float)
        gap = z - x
        if np.linalg.norm(gap) == 0.0:
            return max(0.0, GeometryService.membership_residual(body, x))
        normal = (x - body.center) / body.semiaxes ** 2
        normal /= np.linalg.norm(normal)
        multiplier = float(gap @ normal)
        parallel = np.linalg.norm(gap - multiplier * normal)
        boundary = abs(GeometryService.membership_residual(body, x))
        return float(max(parallel, boundary, max(0.0, -multiplier)))

    @staticmethod
    def curvature_nu(body: ConvexBody) -> float:
        """
        Maximum principal curvature bound used as the arc curvature nu.

        Ellipsoids use max over axes of max(v) / v_i^2; balls give 1/r exactly.
        """
        v = body.semiaxes
        if body.kind == "ball":
            return float(1.0 / v[0])
        return float(np.max(np.max(v) / v ** 2))

    @staticmethod
    def delta_bound(h: Sequence[float], nu: Sequence[float], c3: float) -> float:
        '''
        Closed-form perturbation bound
            delta(H) = (1 + c3) * sqrt(sum((2/nu_i) arccos(1 - nu_i h_i) + h_i)^2)

        Raises:
            DomainError: nu_i h_i outside [0, 2]
            InvalidInputError: length mismatch or c3 <= 0
        '''
        h = np.asarray(h, dtype=float)
        nu = np.asarray(nu, dtype=float)
        if h.shape != nu.shape:
            raise InvalidInputError("h and nu must have the same length")
        if c3 <= 0:
            raise InvalidInputError("c3 must be positive")
        if np.any(nu <= 0):
            raise InvalidInputError("Curvatures must be positive")
        product = nu * h
        if np.any(product < 0) or np.any(product > 2.0):
            raise DomainError(
                f"nu*h = {float(np.max(product)):.4f} outside [0, 2]; approximation too coarse for the arc bound"
            )
        terms = 2.0 / nu * np.arccos(1.0 - product) + h
        return float((1.0 + c3) * np.sqrt(np.sum(terms ** 2)))

    @staticmethod
    def sample_interior(shape: FeasibleSet, count: int, rng: np.random.Generator) -> np.ndarray:
        """Random feasible points: uniform in ellipsoids, Dirichlet mixtures of polyhedron vertices"""
        if isinstance(shape, ConvexBody):
            n = shape.dim
            direction = rng.standard_normal((count, n))
            direction /= np.linalg.norm(direction, axis=1, keepdims=True)
            radius = rng.random(count) ** (1.0 / n)
            return shape.center + (direction * radius[:, None]) * shape.semiaxes
        if not shape.s:
            raise InvalidInputError("Sampling a polyhedron requires its vertex list")
        weights = rng.dirichlet(np.ones(shape.s), size=count)
        return weights @ shape.vertices

    # -------------------------------------------------------------- polyhedra

    @staticmethod
    def _build(B, b, vertices, gaps: Sequence[float] = ()) -> Polyhedron:
        try:
            return Polyhedron(B=B, b=b, vertices=vertices, construction_gaps=tuple(gaps))
        except ValidationError as e:
            raise InvalidInputError(f"Invalid polyhedron: {e.errors()[0]['msg']}") from e

    @staticmethod
    def polygon_from_vertices(vertices: np.ndarray, gaps: Sequence[float] = ()) -> Polyhedron:
        """Halfspaces from consecutive counter-clockwise vertex pairs"""
        vertices = np.asarray(vertices, dtype=float)
        edges = np.roll(vertices, -1, axis=0) - vertices
        normals = np.column_stack([edges[:, 1], -edges[:, 0]])
        normals /= np.linalg.norm(normals, axis=1, keepdims=True)
        offsets = np.einsum("ij,ij->i", normals, vertices)
        return GeometryService._build(normals, offsets, vertices, gaps)

    @staticmethod
    def polytope_from_vertices(vertices: np.ndarray, gaps: Sequence[float] = ()) -> Polyhedron:
        """Halfspaces of the 3D convex hull (qhull facets come with unit normals)"""
        hull = ConvexHull(vertices)
        B = hull.equations[:, :-1]
        b = -hull.equations[:, -1]
        B = B / np.linalg.norm(B, axis=1, keepdims=True)
        # qhull offsets carry roundoff; make every vertex satisfy its own facets
        b = np.maximum(b, np.max(vertices @ B.T, axis=0))
        return GeometryService._build(B, b, vertices, gaps)

    @staticmethod
    def inscribe_regular(body: ConvexBody, m: int) -> Polyhedron:
        """
        Inscribed m-gon with vertices at parameter angles 2*pi*k/m
        (first vertex on the positive first axis).
        """
        if body.dim != 2:
            raise InvalidInputError("inscribe_regular needs a two-dimensional body")
        if m < 3:
            raise InvalidInputError(f"Need at least 3 vertices, got {m}")
        theta = 2.0 * np.pi * np.arange(m) / m
        vertices = body.center + body.semiaxes * np.column_stack([np.cos(theta), np.sin(theta)])
        poly = GeometryService.polygon_from_vertices(vertices)
        logger.debug(f"Inscribed regular {m}-gon with {poly.p} facets")
        return poly

    @staticmethod
    def inscribe_box(body: ConvexBody) -> Polyhedron:
        """Axis-aligned box with corners c +- v/sqrt(n); inscribed in any dimension"""
        n = body.dim
        half = body.semiaxes / math.sqrt(n)
        eye = np.eye(n)
        B = np.vstack([eye, -eye])
        b = np.concatenate([body.center + half, -(body.center - half)])
        # 2^n corners are not stored
        return GeometryService._build(B, b, np.empty((0, 0)))

    @staticmethod
    def inscribe_cross_polytope(body: ConvexBody) -> Polyhedron:
        """Convex hull of the 2n axis points c +- v_j e_j; 2^n facets"""
        n = body.dim
        if n > 12:
            raise InvalidInputError(f"A cross-polytope in dimension {n} has too many facets to store")
        signs = np.array(list(itertools.product((1.0, -1.0), repeat=n)))
        scaled = signs / body.semiaxes
        norms = np.linalg.norm(scaled, axis=1)
        B = scaled / norms[:, None]
        b = B @ body.center + 1.0 / norms
        eye = np.diag(body.semiaxes)
        vertices = np.vstack([body.center + eye, body.center - eye])
        return GeometryService._build(B, b, vertices)

    @staticmethod
    def seed_simplex(body: ConvexBody) -> np.ndarray:
        """Support points along the vertex directions of a regular simplex"""
        n = body.dim
        if n == 2:
            angles = np.pi / 2.0 + 2.0 * np.pi * np.arange(3) / 3.0
            directions = np.column_stack([np.cos(angles), np.sin(angles)])
        elif n == 3:
            directions = np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], dtype=float)
            directions /= math.sqrt(3.0)
        else:
            raise InvalidInputError("Automatic seeds exist for dimensions 2 and 3 only")
        return np.array([GeometryService.support_point(body, u) for u in directions])

    @staticmethod
    def inscribe_greedy(body: ConvexBody, s: int, seed: Optional[np.ndarray] = None) -> Polyhedron:
        '''
        Greedy inscribed polyhedron.

        Starting from a simplex of boundary points, repeatedly take the facet
        normal u maximizing g_body(u) - g_poly(u), add support_point(body, u)
        and rebuild the hull until s vertices exist. The max facet gap of every
        intermediate polyhedron is kept in construction_gaps.

        Raises:
            InvalidInputError: dimension outside {2, 3}, s too small, seed off
                the boundary or affinely dependent
        '''
        n = body.dim
        if n not in (2, 3):
            raise InvalidInputError("Greedy construction supports dimensions 2 and 3")
        seed = GeometryService.seed_simplex(body) if seed is None else np.asarray(seed, dtype=float)
        if seed.shape != (n + 1, n):
            raise InvalidInputError(f"Seed must hold {n + 1} points of dimension {n}")
        if s < n + 1:
            raise InvalidInputError(f"Need s >= {n + 1}, got {s}")
        for point in seed:
            if abs(GeometryService.membership_residual(body, point)) > BOUNDARY_TOL:
                raise InvalidInputError("Seed points must lie on the body boundary")
        if np.linalg.matrix_rank(seed[1:] - seed[0], tol=1e-9) < n:
            raise InvalidInputError("Seed simplex is degenerate (affinely dependent)")

        gaps: List[float] = []
        if n == 2:
            center = seed.mean(axis=0)
            order = np.argsort(np.arctan2(seed[:, 1] - center[1], seed[:, 0] - center[0]))
            vertices = [p for p in seed[order]]
            while True:
                poly_vertices = np.array(vertices)
                edges = np.roll(poly_vertices, -1, axis=0) - poly_vertices
                normals = np.column_stack([edges[:, 1], -edges[:, 0]])
                normals /= np.linalg.norm(normals, axis=1, keepdims=True)
                offsets = np.einsum("ij,ij->i", normals, poly_vertices)
                facet_gaps = np.array([
                    GeometryService.support_value(body, u) for u in normals
                ]) - offsets
                worst = int(np.argmax(facet_gaps))
                gaps.append(float(facet_gaps[worst]))
                if len(vertices) >= s:
                    break
                vertices.insert(worst + 1, GeometryService.support_point(body, normals[worst]))
            return GeometryService.polygon_from_vertices(np.array(vertices), gaps)

        hull = ConvexHull(seed, incremental=True)
        while True:
            normals = hull.equations[:, :-1]
            normals = normals / np.linalg.norm(normals, axis=1, keepdims=True)
            offsets = np.max(hull.points @ normals.T, axis=0)
            facet_gaps = np.array([
                GeometryService.support_value(body, u) for u in normals
            ]) - offsets
            worst = int(np.argmax(facet_gaps))
            gaps.append(float(facet_gaps[worst]))
            if hull.points.shape[0] >= s:
                break
            hull.add_points(GeometryService.support_point(body, normals[worst])[None, :])
        points = np.array(hull.points)
        hull.close()
        return GeometryService.polytope_from_vertices(points, gaps)

    # -------------------------------------------------------------- hausdorff

    @staticmethod
    def _gap(body: ConvexBody, poly: Polyhedron, directions: np.ndarray) -> np.ndarray:
        body_support = directions @ body.center + np.linalg.norm(directions * body.semiaxes, axis=1)
        poly_support = np.max(directions @ poly.vertices.T, axis=1)
        return body_support - poly_support

    @staticmethod
    def hausdorff_estimate(body: ConvexBody, poly: Polyhedron) -> HausdorffEstimate:
        '''
        Hausdorff distance between a body and an inscribed polyhedron.

        Since poly is inside body, H = max over unit u of g_body(u) - g_poly(u).
        2D: 4096 uniform angles, 3D: 20480 Fibonacci-sphere points, each refined
        locally around the best direction. Higher dimensions evaluate the facet
        normals only (no refinement).

        Raises:
            InvalidInputError: a vertex lies outside the body
        '''
        if poly.dim != body.dim:
            raise InvalidInputError("Body and polyhedron dimensions differ")
        for vertex in (poly.vertices if poly.s else []):
            if GeometryService.membership_residual(body, vertex) > BOUNDARY_TOL:
                raise InvalidInputError("Polyhedron vertex outside the body; not an inscribed polyhedron")

        n = body.dim
        if n > 3 or not poly.s:
            body_support = poly.B @ body.center + np.linalg.norm(poly.B * body.semiaxes, axis=1)
            facet_gaps = body_support - poly.b
            best = int(np.argmax(facet_gaps))
            return HausdorffEstimate(value=max(0.0, float(facet_gaps[best])), resolution=poly.p, refined=False,
                                     direction=tuple(float(c) for c in poly.B[best]))

        if n == 2:
            angles = 2.0 * np.pi * np.arange(GRID_2D) / GRID_2D
            directions = np.column_stack([np.cos(angles), np.sin(angles)])
            gaps = GeometryService._gap(body, poly, directions)
            best = int(np.argmax(gaps))
            step = 2.0 * np.pi / GRID_2D

            def negative_gap(angle: float) -> float:
                u = np.array([[math.cos(angle), math.sin(angle)]])
                return -float(GeometryService._gap(body, poly, u)[0])

            result = minimize_scalar(
                negative_gap,
                bounds=(angles[best] - step, angles[best] + step),
                method="bounded",
                options={"xatol": 1e-12},
            )
            angle = float(result.x) if -float(result.fun) > float(gaps[best]) else float(angles[best])
            value = max(float(gaps[best]), -float(result.fun))
            return HausdorffEstimate(value=max(0.0, value), resolution=GRID_2D, refined=True,
                                     direction=(math.cos(angle), math.sin(angle)))

        directions = _fibonacci_sphere(GRID_3D)
        gaps = GeometryService._gap(body, poly, directions)
        best = directions[int(np.argmax(gaps))]
        start = np.array([math.acos(max(-1.0, min(1.0, best[2]))), math.atan2(best[1], best[0])])

        def negative_gap_3d(angles: np.ndarray) -> float:
            return -float(GeometryService._gap(body, poly, _spherical(angles)[None, :])[0])

        result = minimize(negative_gap_3d, start, method="Nelder-Mead",
                          options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 2000})
        value = max(float(np.max(gaps)), -float(result.fun))
        direction = _spherical(result.x) if -float(result.fun) > float(np.max(gaps)) else best
        return HausdorffEstimate(value=max(0.0, value), resolution=GRID_3D, refined=True,
                                 direction=tuple(float(c) for c in direction))

    # ---------------------------------------------------------- serialization

    @staticmethod
    def polyhedron_to_text(poly: Polyhedron) -> str:
        '''
        Plain-text block:
            p n
            p rows of "B_row b"
            s
            s vertex rows
        '''
        lines = [f"{poly.p} {poly.dim}"]
        for row, offset in zip(poly.B, poly.b):
            lines.append(" ".join(f"{value:.17g}" for value in (*row, offset)))
        lines.append(str(poly.s))
        for vertex in (poly.vertices if poly.s else []):
            lines.append(" ".join(f"{value:.17g}" for value in vertex))
        return "\n".join(lines) + "\n"

    @staticmethod
    def polyhedron_from_text(text: str) -> Polyhedron:
        rows = [line.split() for line in text.splitlines() if line.strip() and not line.startswith("#")]
        try:
            p, n = (int(token) for token in rows[0])
            matrix = np.array([[float(token) for token in row] for row in rows[1:1 + p]])
            s = int(rows[1 + p][0])
            vertices = np.array([[float(token) for token in row] for row in rows[2 + p:2 + p + s]])
        except (IndexError, ValueError) as e:
            raise InvalidInputError(f"Malformed polyhedron block: {e}") from e
        if matrix.shape != (p, n + 1) or (s and vertices.shape != (s, n)):
            raise InvalidInputError("Polyhedron block dimensions do not match its header")
        return GeometryService._build(matrix[:, :n], matrix[:, n], vertices if s else np.empty((0, 0)))
