"""Adapted moving frames over quadric submanifolds and their connection forms.

A frame {A_0, .., A_{n+1}} adapted to an immersion has A_0 on the quadric,
a block of unit tangent vectors, an exterior unit vector A_n fixed by the
"finite hyperplane" gauge (A_n, e_{n+1}) = 0, optional extra unit normals
A_1..A_m for reduced-rank inputs, and the unique null A_{n+1} completing
the standard Gram pattern.  Connection coefficients are recovered per
coordinate direction by central differences of the frame field followed by
an exact linear solve; residual verifiers evaluate the Pfaffian relations
and the structure equations the true connection satisfies identically.

Row layout of a frame matrix F (one row per frame vector):

    row 0        A_0              quadric point
    rows 1..m    A_a              plane-generator block (empty if maximal)
    rows m+1..n-1  A_p            orthonormal tangents
    row n        A_n              gauge-fixed exterior vector
    row n+1      A_{n+1}          null partner of A_0
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Callable

import numpy as np

from .ambient import AmbientForm, make_ambient_form
from .errors import (
    FrameDegeneracyError,
    GaugeError,
    ImmersionRankError,
    RankAmbiguityError,
    ShapeError,
)
from .immersion import ConformalImmersion
from .tolerances import DEFAULT_FD_STEP, TAU_GRAM, TAU_QUADRIC, TAU_RANK

_SEED_PIVOT = 0.3  # minimal projection norm to accept a normal seed


# ---------------------------------------------------------------------------
# Moving frames
# ---------------------------------------------------------------------------


@dataclass
class MovingFrame:
    """An adapted frame at one parameter value."""

    u: np.ndarray
    F: np.ndarray
    n: int
    m: int = 0
    gram_deviation: float = 0.0
    base: "MovingFrame | None" = dc_field(default=None, repr=False)

    @property
    def A0(self) -> np.ndarray:
        return self.F[0]

    @property
    def An(self) -> np.ndarray:
        return self.F[self.n]

    @property
    def Anp1(self) -> np.ndarray:
        return self.F[self.n + 1]

    @property
    def tangent_rows(self) -> slice:
        return slice(self.m + 1, self.n)

    @property
    def generator_rows(self) -> slice:
        return slice(1, self.m + 1)

    def tangent_count(self) -> int:
        return self.n - 1 - self.m


def gram_deviation(F: np.ndarray, form: AmbientForm) -> float:
    """Entrywise distance of the frame Gram matrix from the target pattern."""
    return float(np.max(np.abs(F @ form.G @ F.T - form.G)))


def shift_generator(n: int) -> np.ndarray:
    """Nilpotent generator of the gauge motion along a rectilinear generator:
    A_n gains A_0, A_{n+1} gains A_n."""
    E = np.zeros((n + 2, n + 2))
    E[n, 0] = 1.0
    E[n + 1, n] = 1.0
    return E


def shift_matrix(n: int, s: float) -> np.ndarray:
    """exp(s E): the frame transformation moving the vertex by s A_0."""
    E = shift_generator(n)
    return np.eye(n + 2) + s * E + 0.5 * s * s * (E @ E)


# ---------------------------------------------------------------------------
# Frame adaptation
# ---------------------------------------------------------------------------


def _measure_rank(singular_values: np.ndarray, tol: float = TAU_RANK):
    """Numerical rank with an explicit dead band.

    Returns (rank, ambiguous_flag).  Singular values inside
    [cutoff/10, 10*cutoff] are ambiguous; deciding on them is refused by
    callers that branch on rank.
    """
    sv = np.asarray(singular_values, dtype=float)
    if sv.size == 0 or sv[0] == 0.0:
        return 0, False
    cutoff = tol * sv[0]
    ambiguous = bool(np.any((sv > cutoff / 10.0) & (sv < cutoff * 10.0)))
    return int(np.sum(sv >= cutoff)), ambiguous


def _orthonormalize(columns: list[np.ndarray]) -> list[np.ndarray]:
    out: list[np.ndarray] = []
    for c in columns:
        w = c.copy()
        for q in out:
            w -= (w @ q) * q
        nrm = np.linalg.norm(w)
        if nrm < 1e-13:
            raise ImmersionRankError("dependent tangent vectors")
        out.append(w / nrm)
    return out


def _normal_block(
    W: np.ndarray,
    tangent_basis: list[np.ndarray],
    count: int,
    reference_normals: list[np.ndarray] | None,
) -> list[np.ndarray]:
    """Orthonormal basis of the Euclidean normal space of span(W).

    Seeds are the reference normals when given (keeps stencil frames
    smooth), otherwise fixed chart vectors starting with the last
    coordinate axis.  The first accepted vector seeds the exterior gauge.
    """
    nn = W.shape[0]
    seeds: list[np.ndarray] = []
    if reference_normals:
        seeds.extend(reference_normals)
    base = [np.eye(nn)[nn - 1]] + [np.eye(nn)[k] for k in range(nn - 1)]
    seeds.extend(base)
    accepted: list[np.ndarray] = []
    for s in seeds:
        if len(accepted) == count:
            break
        w = s.copy()
        for t in tangent_basis:
            w -= (w @ t) * t
        for q in accepted:
            w -= (w @ q) * q
        nrm = np.linalg.norm(w)
        if nrm < _SEED_PIVOT:
            continue
        accepted.append(w / nrm)
    if len(accepted) < count:
        raise FrameDegeneracyError("could not complete the normal block")
    return accepted


def _oriented_normal(W: np.ndarray) -> np.ndarray:
    """Unit normal of a hypersurface tangent block, oriented so that
    det[W | N] > 0."""
    nn, d = W.shape
    _, _, vt = np.linalg.svd(W.T, full_matrices=True)
    N = vt[-1]
    if np.linalg.det(np.column_stack([W, N])) < 0:
        N = -N
    return N


def build_adapted_frame(
    imm: ConformalImmersion,
    u,
    form: AmbientForm | None = None,
    reference: MovingFrame | None = None,
    require_maximal: bool = False,
    rank_tol: float = TAU_RANK,
) -> MovingFrame:
    """Construct the adapted frame of an immersion at parameter u.

    The tangent block is an orthonormalization of the coordinate tangents;
    the exterior vector A_n is the unique gauge-fixed unit vector of the
    orthogonal complement with vanishing 0-th coordinate (for hypersurfaces
    the orientation follows the parametrization, otherwise a seeded choice
    kept continuous through ``reference``); A_{n+1} is solved uniquely.
    """
    u = np.atleast_1d(np.asarray(u, dtype=float))
    n = imm.n
    if form is None:
        form = make_ambient_form(n)
    a0 = imm.point(u)
    qres = abs(float(a0 @ form.G @ a0)) / float(a0 @ a0)
    if qres > TAU_QUADRIC:
        raise ImmersionRankError(
            f"immersion point leaves the quadric (relative residual {qres:.2e})"
        )
    a00 = a0[0]
    if abs(a00) < 1e-8 * np.linalg.norm(a0):
        raise GaugeError(
            "lift passes through the infinity gauge point; supply a frame "
            "gauge vector not orthogonal to A_0 (fallback: any exterior "
            "point off the tangent hyperplane)"
        )

    T = imm.tangents(u)
    # representatives with vanishing 0-th coordinate; Euclidean inner
    # products of their middle block realize the ambient pairing exactly
    V = T - np.outer(a0, T[0] / a00)
    W = V[1 : n + 1]
    sv = np.linalg.svd(W, compute_uv=False) if W.size else np.zeros(0)
    rank, ambiguous = _measure_rank(sv, rank_tol)
    if ambiguous:
        raise RankAmbiguityError(
            "tangent rank indecisive; singular values in the dead band",
            spectrum=sv,
        )
    if rank < imm.d:
        raise ImmersionRankError(
            f"tangent map has rank {rank} < parameter dimension {imm.d}"
        )
    if require_maximal and rank != n - 1:
        raise ImmersionRankError(
            f"maximal-rank adaptation needs rank {n - 1}, measured {rank}"
        )

    tangent_basis = _orthonormalize(list(W.T)) if imm.d else []

    count = n - rank  # normals: one for A_n plus m = n - rank - 1 extras
    if rank == n - 1:
        normals = [_oriented_normal(W)]
    else:
        ref_normals = None
        if reference is not None:
            rows = [reference.F[n]] + [
                reference.F[k] for k in range(1, reference.m + 1)
            ]
            ref_normals = [r[1 : n + 1] for r in rows]
        normals = _normal_block(W, tangent_basis, count, ref_normals)

    a_mid = a0[1 : n + 1]

    # rows (0, w, w.a_mid / a00) pair to zero with A_0 exactly; for the
    # true tangent directions this reproduces their ambient representative
    def zero_pairing_row(w):
        return np.concatenate(([0.0], w, [float(w @ a_mid) / a00]))

    tangent_vectors = [zero_pairing_row(t) for t in tangent_basis]
    An = zero_pairing_row(normals[0])
    Aa = [zero_pairing_row(N) for N in normals[1:]]

    # A_{n+1}: null, pairs to -1 with A_0, orthogonal to everything else
    others = Aa + tangent_vectors + [An]
    rows = [form.G @ a0] + [form.G @ v for v in others]
    Msys = np.vstack(rows)
    rhs = np.zeros(len(rows))
    rhs[0] = -1.0
    y0, *_ = np.linalg.lstsq(Msys, rhs, rcond=None)
    t = 0.5 * float(y0 @ form.G @ y0)
    anp1 = y0 + t * a0

    F = np.vstack([a0, *Aa, *tangent_vectors, An, anp1])
    if reference is not None:
        F = _align_frame(F, reference.F)
    mf = MovingFrame(
        u=u,
        F=F,
        n=n,
        m=len(Aa),
        gram_deviation=gram_deviation(F, form),
    )
    if mf.gram_deviation > TAU_GRAM:
        raise FrameDegeneracyError(
            f"adapted frame violates the Gram pattern by {mf.gram_deviation:.2e}"
        )
    return mf


def _align_frame(F: np.ndarray, ref: np.ndarray) -> np.ndarray:
    """Sign-align a frame with a nearby reference; rows 0 and n+1 flip as
    a pair to keep their pairing at -1."""
    F = F.copy()
    last = F.shape[0] - 1
    if F[0] @ ref[0] + F[last] @ ref[last] < 0:
        F[0] = -F[0]
        F[last] = -F[last]
    for i in range(1, last):
        if F[i] @ ref[i] < 0:
            F[i] = -F[i]
    return F


def adapt_frame(
    imm: ConformalImmersion,
    u,
    form: AmbientForm | None = None,
    reference: MovingFrame | None = None,
) -> MovingFrame:
    """Adapted frame for a maximal-rank (hypersurface) immersion."""
    if imm.d != imm.n - 1:
        raise ImmersionRankError(
            f"hypersurface adaptation needs d = n-1, got d={imm.d}, n={imm.n}"
        )
    return build_adapted_frame(
        imm, u, form=form, reference=reference, require_maximal=True
    )


# ---------------------------------------------------------------------------
# Frame fields and connection recovery
# ---------------------------------------------------------------------------


@dataclass
class ConnectionMatrix:
    """Connection coefficients per coordinate direction at one node.

    ``omega[k][xi, eta]`` is the value of the form carrying A_xi onto
    A_eta, evaluated on the k-th coordinate direction.
    """

    u: np.ndarray
    h: float
    omega: np.ndarray  # (d, n+2, n+2)
    solve_residual: float
    frame: MovingFrame

    def direction(self, k: int) -> np.ndarray:
        return self.omega[k]


class FrameField:
    """A field of adapted frames over a rectangular parameter grid.

    Frames at arbitrary parameters are built on demand (finite-difference
    stencils use steps much smaller than the grid spacing); grid nodes are
    the analysis points.  ``kind`` is "lift" for fields coming from a
    quadric immersion (these carry the extra analytic generator direction)
    and "chart" for frame fields over a chart of the exterior space.
    """

    def __init__(
        self,
        frame_fn: Callable[..., MovingFrame],
        d: int,
        n: int,
        axes: tuple[np.ndarray, ...] | None = None,
        fd_step: float = DEFAULT_FD_STEP,
        kind: str = "lift",
        immersion: ConformalImmersion | None = None,
        name: str = "field",
    ):
        self._frame_fn = frame_fn
        self.d = int(d)
        self.n = int(n)
        self.axes = tuple(np.asarray(a, dtype=float) for a in axes) if axes else None
        self.fd_step = float(fd_step)
        self.kind = kind
        self.immersion = immersion
        self.name = name
        self.form = make_ambient_form(n)

    # -- construction ------------------------------------------------------

    @classmethod
    def from_immersion(
        cls,
        imm: ConformalImmersion,
        axes=None,
        fd_step: float = DEFAULT_FD_STEP,
        maximal: bool = True,
    ) -> "FrameField":
        form = make_ambient_form(imm.n)

        def fn(u, reference=None):
            return build_adapted_frame(
                imm, u, form=form, reference=reference, require_maximal=maximal
            )

        return cls(
            fn,
            d=imm.d,
            n=imm.n,
            axes=axes,
            fd_step=fd_step,
            kind="lift",
            immersion=imm,
            name=imm.name,
        )

    def transformed(self, fn: Callable, name: str | None = None) -> "FrameField":
        """Pointwise frame transformation F -> fn(u, frame) (must be smooth
        in u to keep finite differences meaningful)."""

        def frame_fn(u, reference=None):
            base_ref = reference.base if reference is not None else None
            mf = self.frame(u, reference=base_ref)
            F2 = fn(np.atleast_1d(np.asarray(u, dtype=float)), mf)
            return MovingFrame(
                u=mf.u,
                F=F2,
                n=self.n,
                m=mf.m,
                gram_deviation=gram_deviation(F2, self.form),
                base=mf,
            )

        out = FrameField(
            frame_fn,
            d=self.d,
            n=self.n,
            axes=self.axes,
            fd_step=self.fd_step,
            kind=self.kind,
            immersion=self.immersion,
            name=name or (self.name + "+transform"),
        )
        return out

    def gauge_shifted(self, s: float) -> "FrameField":
        """Move the frame vertex along every generator by s."""
        T = shift_matrix(self.n, s)
        return self.transformed(lambda u, mf: T @ mf.F, name=f"{self.name}+shift")

    def with_fd_step(self, h: float) -> "FrameField":
        out = FrameField(
            self._frame_fn,
            d=self.d,
            n=self.n,
            axes=self.axes,
            fd_step=h,
            kind=self.kind,
            immersion=self.immersion,
            name=self.name,
        )
        return out

    # -- evaluation --------------------------------------------------------

    def frame(self, u, reference: MovingFrame | None = None) -> MovingFrame:
        return self._frame_fn(u, reference=reference)

    def connection(
        self,
        u,
        h: float | None = None,
        reference: MovingFrame | None = None,
    ) -> ConnectionMatrix:
        """Recover all connection coefficients at u by central differences."""
        u = np.atleast_1d(np.asarray(u, dtype=float))
        h = self.fd_step if h is None else float(h)
        F0 = self.frame(u, reference=reference)
        mats = []
        resid = 0.0
        for k in range(self.d):
            e = np.zeros(self.d)
            e[k] = h
            Fp = self.frame(u + e, reference=F0).F
            Fm = self.frame(u - e, reference=F0).F
            dF = (Fp - Fm) / (2.0 * h)
            omega = np.linalg.solve(F0.F.T, dF.T).T
            if np.max(np.abs(omega)) * h > 0.5:
                raise FrameDegeneracyError(
                    "frame field discontinuous across the stencil"
                )
            back = omega @ F0.F
            scale = max(np.max(np.abs(dF)), 1.0)
            resid = max(resid, float(np.max(np.abs(back - dF))) / scale)
            mats.append(omega)
        omega = np.asarray(mats) if mats else np.zeros((0, self.n + 2, self.n + 2))
        return ConnectionMatrix(
            u=u, h=h, omega=omega, solve_residual=resid, frame=F0
        )

    # -- realized tangent directions (grid axes + generator) ----------------

    def realized_directions(self, u, h: float | None = None):
        u = np.atleast_1d(np.asarray(u, dtype=float))
        h = self.fd_step if h is None else float(h)
        conn = self.connection(u, h)
        dirs = [
            RealizedDirection(self, u, h, kind="grid", axis=k, omega=conn.omega[k])
            for k in range(self.d)
        ]
        if self.kind == "lift":
            E = shift_generator(self.n)
            dirs.append(
                RealizedDirection(self, u, h, kind="generator", axis=None, omega=E)
            )
        return dirs

    # -- grid helpers --------------------------------------------------------

    def node_u(self, idx: tuple[int, ...]) -> np.ndarray:
        if self.axes is None:
            raise ShapeError("frame field has no grid")
        return np.array([self.axes[k][i] for k, i in enumerate(idx)])

    def node_indices(self):
        if self.axes is None:
            raise ShapeError("frame field has no grid")
        shape = tuple(len(a) for a in self.axes)
        return list(np.ndindex(shape))

    def grid_frames(self) -> dict[tuple[int, ...], MovingFrame]:
        """Frames at every grid node, sign-aligned by BFS from the first
        node so adjacent frames overlap positively."""
        idxs = self.node_indices()
        frames: dict[tuple[int, ...], MovingFrame] = {}
        seen = set()
        from collections import deque

        queue = deque([idxs[0]])
        seen.add(idxs[0])
        frames[idxs[0]] = self.frame(self.node_u(idxs[0]))
        shape = tuple(len(a) for a in self.axes)
        while queue:
            cur = queue.popleft()
            for k in range(self.d):
                for step in (-1, 1):
                    nxt = list(cur)
                    nxt[k] += step
                    if not (0 <= nxt[k] < shape[k]):
                        continue
                    nxt = tuple(nxt)
                    if nxt in seen:
                        continue
                    seen.add(nxt)
                    mf = self.frame(self.node_u(nxt))
                    F = _align_frame(mf.F, frames[cur].F)
                    frames[nxt] = MovingFrame(
                        u=mf.u,
                        F=F,
                        n=mf.n,
                        m=mf.m,
                        gram_deviation=mf.gram_deviation,
                    )
                    queue.append(nxt)
        return frames


@dataclass
class RealizedDirection:
    """One realized tangent direction of the swept hypersurface at a node.

    Grid directions carry finite-difference calculus; the generator
    direction is analytic (the frame moves by the one-parameter gauge
    group, so its connection value is the shift generator and derivatives
    along it are commutators).
    """

    field: FrameField
    u: np.ndarray
    h: float
    kind: str
    axis: int | None
    omega: np.ndarray

    def derivative_of(self, other: "RealizedDirection") -> np.ndarray:
        """Directional derivative along self of other's connection matrix."""
        if self.kind == "grid" and other.kind == "grid":
            e = np.zeros(self.field.d)
            e[self.axis] = self.h
            cp = self.field.connection(self.u + e, self.h)
            cm = self.field.connection(self.u - e, self.h)
            return (cp.omega[other.axis] - cm.omega[other.axis]) / (2.0 * self.h)
        if self.kind == "generator" and other.kind == "grid":
            E = self.omega
            return E @ other.omega - other.omega @ E
        # derivative of the constant generator matrix
        return np.zeros_like(self.omega)


def maurer_cartan(field: FrameField, u, h: float | None = None) -> ConnectionMatrix:
    """Connection coefficients of the frame field at a node (all directions)."""
    return field.connection(u, h)


# ---------------------------------------------------------------------------
# Residual verifiers
# ---------------------------------------------------------------------------


def pfaffian_residual(conn: ConnectionMatrix) -> dict[str, float]:
    """Evaluate every adapted-frame Pfaffian relation per direction.

    With the identity tangent metric the relations read: vanishing of the
    two null-pair corner forms, opposite traces of the null pair, the
    identification of tangent forms across the pairing, the two vertex
    identifications, skew-symmetry of the tangent rotation block, and the
    vanishing of the vertex diagonal.  Returns the max-abs violation of
    each named relation (reported, not enforced).
    """
    n = conn.frame.n
    om = conn.omega
    i_rng = range(1, n)
    out = {
        "corner_0_np1": float(np.max(np.abs(om[:, 0, n + 1]))),
        "corner_np1_0": float(np.max(np.abs(om[:, n + 1, 0]))),
        "null_trace": float(np.max(np.abs(om[:, 0, 0] + om[:, n + 1, n + 1]))),
        "tangent_pairing": float(
            np.max(np.abs(om[:, list(i_rng), n + 1] - om[:, 0, list(i_rng)]))
        )
        if n > 1
        else 0.0,
        "screen_pairing": float(
            np.max(np.abs(om[:, list(i_rng), 0] - om[:, n + 1, list(i_rng)]))
        )
        if n > 1
        else 0.0,
        "vertex_np1": float(np.max(np.abs(om[:, n, n + 1] - om[:, 0, n]))),
        "vertex_0": float(np.max(np.abs(om[:, n, 0] - om[:, n + 1, n]))),
        "vertex_diag": float(np.max(np.abs(om[:, n, n]))),
    }
    skew = 0.0
    metric = 0.0
    for d in range(om.shape[0]):
        blk = om[d][1:n, 1:n]
        metric = max(metric, float(np.max(np.abs(blk + blk.T))) if n > 1 else 0.0)
        skew = max(
            skew,
            float(np.max(np.abs(om[d][n, 1:n] + om[d][1:n, n]))) if n > 1 else 0.0,
        )
    out["tangent_rotation_skew"] = metric
    out["vertex_tangent_skew"] = skew
    return out


@dataclass
class StructureReport:
    residual: np.ndarray
    max_abs: float
    vertex_row_max: float


def structure_residual(
    field: FrameField, u, axes_pair=(0, 1), h: float | None = None
) -> StructureReport:
    """Residual of the integrability (structure) equations on two axes.

    Computes d omega (e_a, e_b) - (omega wedge omega)(e_a, e_b) over the
    full index range; for a genuine frame field this vanishes to the
    finite-difference order.  The vertex row restricted residual covers
    the coframe rows separately.
    """
    u = np.atleast_1d(np.asarray(u, dtype=float))
    h = field.fd_step if h is None else float(h)
    a, b = axes_pair
    dirs = field.realized_directions(u, h)
    da, db = dirs[a], dirs[b]
    d_ab = da.derivative_of(db) - db.derivative_of(da)
    wedge = da.omega @ db.omega - db.omega @ da.omega
    resid = d_ab - wedge
    return StructureReport(
        residual=resid,
        max_abs=float(np.max(np.abs(resid))),
        vertex_row_max=float(np.max(np.abs(resid[field.n]))),
    )
