"""Parametrized submanifolds of the quadric and the canonical Euclidean lift.

A :class:`ConformalImmersion` evaluates a point field u -> A_0(u) on the
quadric together with (analytic or finite-difference) tangent maps.  The
canonical lift sends a Euclidean immersion f into R^n to

    A_0(u) = (1, f(u), |f(u)|^2 / 2)

in coordinates (x^0, x^1..x^n, x^{n+1}); this satisfies (A_0, A_0) = 0
identically.  Hyperspheres and hyperplanes of R^n lift to exterior points:
a sphere with center c and radius rho to (1, c, (|c|^2 - rho^2)/2) / rho,
a hyperplane with unit normal N through p to (0, N, p . N).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ImmersionRankError, ShapeError
from .tolerances import DEFAULT_FD_STEP, TAU_QUADRIC


@dataclass
class EuclideanBacking:
    """Euclidean data behind a canonical lift (used for oriented gauges)."""

    f: Callable[[np.ndarray], np.ndarray]
    jac: Callable[[np.ndarray], np.ndarray] | None = None


class ConformalImmersion:
    """A d-parameter immersion into the quadric.

    Args:
        d: parameter dimension.
        n: conformal dimension (ambient vectors have length n+2).
        point: evaluator u -> A_0(u), a length-(n+2) array with
            (A_0, A_0) = 0 up to the quadric tolerance.
        jac: optional analytic tangent map u -> (n+2, d).
        fd_step: fallback step for finite-difference tangents.
        euclidean: optional Euclidean backing when the immersion is a
            canonical lift.
        name: label used in reports.
    """

    def __init__(
        self,
        d: int,
        n: int,
        point: Callable[[np.ndarray], np.ndarray],
        jac: Callable[[np.ndarray], np.ndarray] | None = None,
        fd_step: float = DEFAULT_FD_STEP,
        euclidean: EuclideanBacking | None = None,
        name: str = "immersion",
    ):
        self.d = int(d)
        self.n = int(n)
        self._point = point
        self._jac = jac
        self.fd_step = float(fd_step)
        self.euclidean = euclidean
        self.name = name

    def point(self, u) -> np.ndarray:
        u = np.atleast_1d(np.asarray(u, dtype=float))
        p = np.asarray(self._point(u), dtype=float)
        if p.shape != (self.n + 2,):
            raise ShapeError(
                f"immersion returned shape {p.shape}, expected ({self.n + 2},)"
            )
        return p

    def tangents(self, u) -> np.ndarray:
        """Tangent vectors d A_0 / d u^k as columns of an (n+2, d) matrix."""
        u = np.atleast_1d(np.asarray(u, dtype=float))
        if self._jac is not None:
            J = np.asarray(self._jac(u), dtype=float)
            if J.shape != (self.n + 2, self.d):
                raise ShapeError(
                    f"jacobian shape {J.shape}, expected ({self.n + 2}, {self.d})"
                )
            return J
        h = self.fd_step
        cols = []
        for k in range(self.d):
            e = np.zeros(self.d)
            e[k] = h
            cols.append((self.point(u + e) - self.point(u - e)) / (2.0 * h))
        return np.column_stack(cols) if cols else np.zeros((self.n + 2, 0))

    def quadric_residual(self, u, form) -> float:
        """Relative magnitude of (A_0, A_0); should stay below TAU_QUADRIC."""
        p = self.point(u)
        from .ambient import scalar_product

        return abs(scalar_product(p, p, form)) / float(p @ p)

    def __repr__(self):
        return f"ConformalImmersion({self.name}, d={self.d}, n={self.n})"


def lift_euclidean(
    f: Callable[[np.ndarray], np.ndarray],
    d: int,
    n: int,
    jac: Callable[[np.ndarray], np.ndarray] | None = None,
    fd_step: float = DEFAULT_FD_STEP,
    name: str = "lift",
) -> ConformalImmersion:
    """Canonical conformal lift of a Euclidean immersion f: R^d -> R^n.

    ``jac``, when given, is the Euclidean jacobian u -> (n, d); the lifted
    jacobian is assembled from it exactly.
    """

    def point(u):
        fu = np.asarray(f(u), dtype=float)
        if fu.shape != (n,):
            raise ShapeError(f"f returned shape {fu.shape}, expected ({n},)")
        return np.concatenate(([1.0], fu, [0.5 * float(fu @ fu)]))

    lifted_jac = None
    if jac is not None:

        def lifted_jac(u):
            fu = np.asarray(f(u), dtype=float)
            J = np.asarray(jac(u), dtype=float)
            if J.shape != (n, d):
                raise ShapeError(f"jac returned shape {J.shape}, expected ({n}, {d})")
            top = np.zeros((1, d))
            bottom = (fu @ J)[None, :]
            return np.vstack([top, J, bottom])

    return ConformalImmersion(
        d=d,
        n=n,
        point=point,
        jac=lifted_jac,
        fd_step=fd_step,
        euclidean=EuclideanBacking(f=f, jac=jac),
        name=name,
    )


def sphere_lift(center, radius: float) -> np.ndarray:
    """Exterior point representing the hypersphere (center, radius)."""
    c = np.asarray(center, dtype=float)
    if radius <= 0:
        raise ImmersionRankError("hypersphere radius must be positive")
    return np.concatenate(([1.0], c, [0.5 * (float(c @ c) - radius**2)])) / radius


def hyperplane_lift(normal, point) -> np.ndarray:
    """Exterior point representing the hyperplane through ``point`` with
    unit ``normal`` (the zero-curvature limit of a hypersphere)."""
    nvec = np.asarray(normal, dtype=float)
    nrm = np.linalg.norm(nvec)
    if nrm < 1e-14:
        raise ImmersionRankError("hyperplane normal must be nonzero")
    nvec = nvec / nrm
    p = np.asarray(point, dtype=float)
    return np.concatenate(([0.0], nvec, [float(p @ nvec)]))


def check_on_quadric(p: np.ndarray, form, tol: float = TAU_QUADRIC) -> bool:
    from .ambient import scalar_product

    return abs(scalar_product(p, p, form)) <= tol * float(p @ p)
