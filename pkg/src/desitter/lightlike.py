"""Maximal-rank theory of the swept null hypersurface.

A hypersurface on the quadric determines, through its tangent
hyperspheres, a ruled hypersurface of the exterior space whose generators
are the null lines through A_0 and A_n.  This module computes its
fundamental tensors, the focal points of every generator with their
multiplicities and fold/conic types, and the invariant normalization
(trace-free tensor, harmonic pole, third-order screen span).

Tensor indices i, j run over the tangent block (frame rows 1..n-1); all
arrays are 0-based over that block.  The tangent metric is the identity by
the frame convention, which the first-form check verifies explicitly.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from .ambient import normalize_projective, scalar_product
from .errors import (
    MultiplicityChangeSignal,
    NormalizationUndefinedError,
    TrackingError,
)
from .frames import ConnectionMatrix, FrameField, MovingFrame, shift_matrix
from .immersion import lift_euclidean  # re-export: canonical lift lives here
from .tolerances import (
    TAU_CONIC,
    TAU_DET,
    TAU_FOLD,
    TAU_MULT,
    TAU_RANK,
    TRACK_OVERLAP,
)

__all__ = [
    "lift_euclidean",
    "generator_line",
    "fundamental_forms",
    "lambda_form",
    "gauge_shift",
    "foci",
    "classify_foci",
    "invariants",
    "normalization",
    "focal_manifold_sample",
    "SecondOrderData",
    "FocusEntry",
    "FocusSet",
    "LightlikePoint",
    "NormalizationData",
    "FocalMesh",
]


# ---------------------------------------------------------------------------
# Data containers
# ---------------------------------------------------------------------------


@dataclass
class SecondOrderData:
    """Second-order tensors at a node (tangent-block arrays, 0-based)."""

    g: np.ndarray
    nu: np.ndarray
    nu_symmetry: float
    lam: np.ndarray
    lam_symmetry: float
    lam_mean: float
    a: np.ndarray
    apolarity: float
    first_form_deviation: float
    lightlike_residual: float
    tangent_rank: int
    reduced_rank: bool
    singular_gauge: bool
    inverse_consistency: float | None = None


@dataclass
class FocusEntry:
    s: float
    multiplicity: int
    B: np.ndarray
    directions: np.ndarray  # (multiplicity, n-1) eigenvector components
    label: str = "unlabeled"
    s_derivative: float | None = None
    covector: np.ndarray | None = None
    eq65_residual: float | None = None


@dataclass
class FocusSet:
    entries: list[FocusEntry]
    frame: MovingFrame
    near_transition: bool = False

    @property
    def roots(self) -> np.ndarray:
        return np.array([e.s for e in self.entries])

    def total_multiplicity(self) -> int:
        return sum(e.multiplicity for e in self.entries)

    def labels(self) -> list[str]:
        return [e.label for e in self.entries]


@dataclass
class LightlikePoint:
    """A point z = A_n + s A_0 of a generator with its tangent hyperplane."""

    u: np.ndarray
    s: float
    z: np.ndarray
    eta: np.ndarray  # polar covector of the tangent hyperplane


@dataclass
class NormalizationData:
    lam_mean: float
    C: np.ndarray
    lambda_k: np.ndarray
    C_i: np.ndarray  # rows are the span points
    zeta_rank: int
    zeta_excludes_A0: bool
    cone_form: np.ndarray
    lambda_ijk: np.ndarray | None = None
    lambda_k_consistency: float | None = None


@dataclass
class FocalMesh:
    points: list[np.ndarray | None]  # normalized B per node, None on gaps
    nodes: list[np.ndarray]
    rank: int
    singular_values: np.ndarray
    causal: str
    gaps: int


# ---------------------------------------------------------------------------
# Block extraction helpers
# ---------------------------------------------------------------------------


def _blocks(conn: ConnectionMatrix):
    """Connection sub-blocks used throughout: P[d,j] = basis forms of the
    quadric hypersurface, R[d,j] = basis forms at the vertex, and the
    columns feeding the second-order solves."""
    n = conn.frame.n
    om = conn.omega
    P = om[:, 0, 1:n]  # omega_0^j(e_d)
    R = om[:, n, 1:n]  # omega_n^j(e_d)
    Q = om[:, 1:n, n]  # omega_i^n(e_d)
    S = om[:, 1:n, n + 1]  # omega_i^{n+1}(e_d)
    return P, R, Q, S


def _solve_coefficients(basis: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Solve values[d, i] = sum_j coef[i, j] basis[d, j] for coef."""
    sol, *_ = np.linalg.lstsq(basis, values, rcond=None)
    return sol.T


# ---------------------------------------------------------------------------
# Generator lines
# ---------------------------------------------------------------------------


@dataclass
class GeneratorLine:
    A0: np.ndarray
    An: np.ndarray

    def point(self, s: float) -> np.ndarray:
        return self.An + s * self.A0

    def basis(self) -> np.ndarray:
        return np.vstack([self.A0, self.An])


def generator_line(field: FrameField, u) -> GeneratorLine:
    """The isotropic generator at u, spanned by the gauge-fixed frame pair."""
    mf = field.frame(u)
    return GeneratorLine(A0=mf.A0.copy(), An=mf.An.copy())


def line_intersection(l1: GeneratorLine, l2: GeneratorLine) -> np.ndarray | None:
    """Common point of two lines in homogeneous coordinates, or None."""
    B = np.vstack([l1.basis(), -l2.basis()])  # rows; solve x^T B = 0 style
    # coefficients (a, b, c, d) with a A0 + b An = c A0' + d An'
    _, sv, vt = np.linalg.svd(B.T, full_matrices=False)
    if sv[-1] > 1e-8 * sv[0]:
        return None
    coef = vt[-1]
    p = coef[0] * l1.A0 + coef[1] * l1.An
    if np.linalg.norm(p) < 1e-12:
        return None
    return normalize_projective(p)


# ---------------------------------------------------------------------------
# Fundamental forms and the two second-order tensors
# ---------------------------------------------------------------------------


def fundamental_forms(
    field: FrameField, u, h: float | None = None, rank_tol: float = TAU_RANK
) -> SecondOrderData:
    """First and second fundamental data at a node.

    The tangent metric is the identity by frame convention (verified
    against the finite-difference first form).  The tensor nu solves
    omega_i^{n+1} = nu_ij omega_n^j when the vertex map has full rank;
    a rank-deficient vertex map yields the least-norm solution together
    with ``reduced_rank`` or ``singular_gauge`` flags: full tangent rank of
    the quadric hypersurface with deficient vertex rank means the gauge
    vertex sits on a focus, while deficient tangent rank belongs to the
    reduced-rank pipeline.
    """
    u = np.atleast_1d(np.asarray(u, dtype=float))
    conn = field.connection(u, h)
    n = field.n
    P, R, Q, S = _blocks(conn)

    sv_p = np.linalg.svd(P, compute_uv=False)
    sv_r = np.linalg.svd(R, compute_uv=False)
    cut = rank_tol * max(sv_p[0], 1e-300)
    tangent_rank = int(np.sum(sv_p >= cut))
    cut_r = rank_tol * max(sv_r[0], 1e-300) if sv_r[0] > 0 else np.inf
    vertex_rank = 0 if not np.isfinite(cut_r) else int(np.sum(sv_r >= cut_r))

    full = n - 1
    reduced_rank = tangent_rank < full
    singular_gauge = (not reduced_rank) and vertex_rank < full

    if vertex_rank == full:
        nu_t = np.linalg.solve(R, S)
    else:
        nu_t, *_ = np.linalg.lstsq(R, S, rcond=None)
    nu_raw = nu_t.T
    nu_sym = float(np.max(np.abs(nu_raw - nu_raw.T)))
    nu = 0.5 * (nu_raw + nu_raw.T)

    lam, lam_sym = _lambda_from(conn)
    lam_mean = float(np.trace(lam)) / full
    a = lam - lam_mean * np.eye(full)

    # first-form verification: (dA_n, dA_n) coordinates vs R g R^T
    F0 = conn.frame
    G = field.form.G
    dAn = []
    hh = conn.h
    for k in range(field.d):
        e = np.zeros(field.d)
        e[k] = hh
        Fp = field.frame(u + e, reference=F0).F
        Fm = field.frame(u - e, reference=F0).F
        dAn.append((Fp[n] - Fm[n]) / (2.0 * hh))
    dAn = np.asarray(dAn)
    first_fd = dAn @ G @ dAn.T
    first_frame = R @ R.T
    first_dev = float(np.max(np.abs(first_fd - first_frame)))

    return SecondOrderData(
        g=np.eye(full),
        nu=nu,
        nu_symmetry=nu_sym,
        lam=lam,
        lam_symmetry=lam_sym,
        lam_mean=lam_mean,
        a=a,
        apolarity=abs(float(np.trace(a))),
        first_form_deviation=first_dev,
        lightlike_residual=float(np.max(np.abs(conn.omega[:, n, n + 1]))),
        tangent_rank=tangent_rank,
        reduced_rank=reduced_rank,
        singular_gauge=singular_gauge,
    )


def _lambda_from(conn: ConnectionMatrix):
    P, _, Q, _ = _blocks(conn)
    lam_t = np.linalg.solve(P, Q)
    lam_raw = lam_t.T
    sym = float(np.max(np.abs(lam_raw - lam_raw.T)))
    return 0.5 * (lam_raw + lam_raw.T), sym


def lambda_form(field: FrameField, u, h: float | None = None) -> SecondOrderData:
    """Second-order tensor of the quadric hypersurface plus the inverse
    consistency check nu = -lam^{-1} (meaningful only off singular gauges).
    """
    data = fundamental_forms(field, u, h)
    lam = data.lam
    full = lam.shape[0]
    sv = np.linalg.svd(lam, compute_uv=False)
    if sv[-1] > TAU_DET * max(sv[0], 1.0) and not data.reduced_rank:
        data.inverse_consistency = float(
            np.max(np.abs(data.nu + np.linalg.inv(lam)))
        )
    else:
        data.singular_gauge = True
    return data


def gauge_shift(obj, s: float):
    """Move the frame vertex along the generator: A_n + s A_0.

    Accepts a MovingFrame or a FrameField; tensors transform by the closed
    form (lam shifts by -s on the diagonal), projective invariants do not.
    """
    if isinstance(obj, FrameField):
        return obj.gauge_shifted(s)
    if isinstance(obj, MovingFrame):
        T = shift_matrix(obj.n, s)
        F2 = T @ obj.F
        return MovingFrame(
            u=obj.u, F=F2, n=obj.n, m=obj.m, gram_deviation=obj.gram_deviation
        )
    raise TypeError(f"cannot gauge-shift {type(obj)!r}")


# ---------------------------------------------------------------------------
# Foci
# ---------------------------------------------------------------------------


def _cluster_roots(roots: np.ndarray, tol: float = TAU_MULT):
    """Group sorted roots into multiplicity clusters by relative gap."""
    clusters = []
    start = 0
    for k in range(1, len(roots) + 1):
        if k == len(roots) or roots[k] - roots[k - 1] > tol * (1.0 + abs(roots[k])):
            clusters.append((start, k))
            start = k
    return clusters


def foci(
    lam: np.ndarray,
    g: np.ndarray | None,
    frame: MovingFrame,
    tol_mult: float = TAU_MULT,
) -> FocusSet:
    """Real roots of det(lam - s g) = 0 with multiplicities and the focal
    points B_h = A_n + s_h A_0.

    With the identity tangent metric the pencil is an ordinary symmetric
    eigenproblem, so all roots are real by construction.
    """
    lam = np.asarray(lam, dtype=float)
    if g is not None:
        gm = np.asarray(g, dtype=float)
        if np.max(np.abs(gm - np.eye(gm.shape[0]))) > 1e-12:
            # congruence to the standard problem: L^-1 lam L^-T
            L = np.linalg.cholesky(gm)
            Li = np.linalg.inv(L)
            lam = Li @ lam @ Li.T
    w, V = np.linalg.eigh(0.5 * (lam + lam.T))
    entries = []
    near = False
    clusters = _cluster_roots(w, tol_mult)
    for a, b in clusters:
        s = float(np.mean(w[a:b]))
        entries.append(
            FocusEntry(
                s=s,
                multiplicity=b - a,
                B=frame.An + s * frame.A0,
                directions=V[:, a:b].T.copy(),
            )
        )
    for k in range(1, len(entries)):
        gap = entries[k].s - entries[k - 1].s
        if gap < 10.0 * tol_mult * (1.0 + abs(entries[k].s)):
            near = True
    return FocusSet(entries=entries, frame=frame, near_transition=near)


def _ambient_direction(frame: MovingFrame, comps: np.ndarray) -> np.ndarray:
    """Tangent-block components -> ambient vector."""
    return comps @ frame.F[1 : frame.n]


def _match_root(
    field: FrameField,
    frame0: MovingFrame,
    entry: FocusEntry,
    conn_u: ConnectionMatrix,
    u_shift: np.ndarray,
    h: float,
    tol_mult: float,
):
    """Track entry's root cluster to a stencil point; returns its mean root.

    Matching is by ambient overlap of eigenvectors, which is frame-gauge
    independent; a cluster whose multiplicity changed raises the
    multiplicity-change signal, and weak overlap raises a tracking error.
    """
    conn1 = field.connection(u_shift, h, reference=frame0)
    lam1, _ = _lambda_from(conn1)
    w, V = np.linalg.eigh(lam1)
    frame1 = conn1.frame
    G = field.form.G
    center_dirs = [_ambient_direction(frame0, c) for c in entry.directions]
    cols = []
    for c in center_dirs:
        overlaps = np.array(
            [abs(scalar_product(c, _ambient_direction(frame1, V[:, k]), G))
             for k in range(V.shape[1])]
        )
        k = int(np.argmax(overlaps))
        if overlaps[k] < TRACK_OVERLAP:
            raise TrackingError(
                f"eigenvector overlap {overlaps[k]:.3f} below threshold"
            )
        cols.append(k)
    cols = sorted(set(cols))
    if len(cols) != entry.multiplicity:
        raise MultiplicityChangeSignal("root cluster collapsed across stencil")
    clusters1 = _cluster_roots(w, tol_mult)
    for a, b in clusters1:
        if cols[0] >= a and cols[-1] < b:
            if (b - a) != entry.multiplicity:
                raise MultiplicityChangeSignal(
                    "root multiplicity changes across the stencil"
                )
            return float(np.mean(w[a:b]))
    raise MultiplicityChangeSignal("matched eigenvectors split across clusters")


def classify_foci(
    field: FrameField,
    u,
    focus_set: FocusSet,
    h: float | None = None,
    tol_mult: float = TAU_MULT,
    tol_fold: float = TAU_FOLD,
    tol_conic: float = TAU_CONIC,
) -> FocusSet:
    """Label each focus as fold / conic / unresolved.

    For a simple root the decisive quantity is the gauge-corrected
    derivative of the root field along its own principal direction,

        s_deriv = [d s + s w_0^0 + w_n^0] (principal direction),

    recovered by solving for the full covector on the basis forms and
    contracting.  Multiple roots are conic by necessity; for them the
    residual of the vanishing of the covector on the cluster's own
    directions is reported.
    """
    u = np.atleast_1d(np.asarray(u, dtype=float))
    h = field.fd_step if h is None else float(h)
    conn = field.connection(u, h)
    frame0 = conn.frame
    n = field.n
    P, _, _, _ = _blocks(conn)
    scale = 1.0 + float(np.max(np.abs(focus_set.roots)))

    if focus_set.near_transition:
        for e in focus_set.entries:
            e.label = "unresolved"
        return focus_set

    for entry in focus_set.entries:
        ds = np.zeros(field.d)
        try:
            for k in range(field.d):
                ev = np.zeros(field.d)
                ev[k] = h
                sp = _match_root(field, frame0, entry, conn, u + ev, h, tol_mult)
                sm = _match_root(field, frame0, entry, conn, u - ev, h, tol_mult)
                ds[k] = (sp - sm) / (2.0 * h)
        except (TrackingError, MultiplicityChangeSignal):
            entry.label = "unresolved"
            continue
        lhs = ds + entry.s * conn.omega[:, 0, 0] + conn.omega[:, n, 0]
        covec, *_ = np.linalg.lstsq(P, lhs, rcond=None)
        entry.covector = covec
        if entry.multiplicity >= 2:
            entry.label = "conic"
            entry.eq65_residual = float(
                np.max(np.abs(entry.directions @ covec))
            )
            continue
        s_der = float(entry.directions[0] @ covec)
        entry.s_derivative = s_der
        if abs(s_der) > tol_fold * scale:
            entry.label = "fold"
        elif abs(s_der) < tol_conic * scale:
            entry.label = "conic"
        else:
            entry.label = "unresolved"
    return focus_set


# ---------------------------------------------------------------------------
# Invariant data and normalization
# ---------------------------------------------------------------------------


def invariants(field: FrameField, u, h: float | None = None):
    """Trace split of the second-order tensor and the harmonic pole.

    Returns (SecondOrderData, NormalizationData-precursor): the trace-free
    tensor a_ij, the mean root, the pole C = A_n + mean A_0 and the central
    cone form a_ij w^i w^j on tangent directions.
    """
    data = lambda_form(field, u, h)
    mf = field.frame(u)
    C = mf.An + data.lam_mean * mf.A0
    norm = NormalizationData(
        lam_mean=data.lam_mean,
        C=C,
        lambda_k=np.zeros(field.n - 1),
        C_i=np.zeros((0, field.n + 2)),
        zeta_rank=0,
        zeta_excludes_A0=False,
        cone_form=data.a.copy(),
    )
    return data, norm


def normalization(
    field: FrameField,
    u,
    h: float | None = None,
    compute_third_order: bool = False,
) -> NormalizationData:
    """Invariant normalization from third-order data.

    Requires the trace-free tensor to be nondegenerate; the span points
    C_i = lambda_i A_0 - a_i^j A_j then determine the invariant screen
    subspace.  With ``compute_third_order`` the full symmetric third-order
    coefficients are recovered by covariant differences and checked for
    consistency with the directly recovered lambda_k.
    """
    u = np.atleast_1d(np.asarray(u, dtype=float))
    h = field.fd_step if h is None else float(h)
    conn = field.connection(u, h)
    n = field.n
    frame0 = conn.frame
    data = lambda_form(field, u, h)
    a = data.a
    sv = np.linalg.svd(a, compute_uv=False)
    if sv[-1] < TAU_DET * max(sv[0], 1.0):
        raise NormalizationUndefinedError(
            "trace-free second-order tensor is degenerate; the invariant "
            "normalization requires a nondegenerate tensor"
        )

    P, _, _, _ = _blocks(conn)
    # recover lambda_k from the mean-root field
    dmean = np.zeros(field.d)
    for k in range(field.d):
        e = np.zeros(field.d)
        e[k] = h
        cp = field.connection(u + e, h, reference=frame0)
        cm = field.connection(u - e, h, reference=frame0)
        lp, _ = _lambda_from(cp)
        lm, _ = _lambda_from(cm)
        dmean[k] = (np.trace(lp) - np.trace(lm)) / (n - 1) / (2.0 * h)
    lhs = dmean + data.lam_mean * conn.omega[:, 0, 0] + conn.omega[:, n, 0]
    lambda_k, *_ = np.linalg.lstsq(P, lhs, rcond=None)

    C_i = np.array(
        [
            lambda_k[i] * frame0.A0 - a[i] @ frame0.F[1:n]
            for i in range(n - 1)
        ]
    )
    sv_z = np.linalg.svd(C_i, compute_uv=False)
    zeta_rank = int(np.sum(sv_z >= TAU_RANK * sv_z[0]))
    with_a0 = np.vstack([C_i, frame0.A0])
    sv_a0 = np.linalg.svd(with_a0, compute_uv=False)
    excludes = int(np.sum(sv_a0 >= TAU_RANK * sv_a0[0])) == zeta_rank + 1

    mf = frame0
    out = NormalizationData(
        lam_mean=data.lam_mean,
        C=mf.An + data.lam_mean * mf.A0,
        lambda_k=lambda_k,
        C_i=C_i,
        zeta_rank=zeta_rank,
        zeta_excludes_A0=excludes,
        cone_form=a.copy(),
    )

    if compute_third_order:
        full = n - 1
        lam0 = data.lam
        rhs_rows = np.zeros((field.d, full, full))
        for k in range(field.d):
            e = np.zeros(field.d)
            e[k] = h
            cp = field.connection(u + e, h, reference=frame0)
            cm = field.connection(u - e, h, reference=frame0)
            lp, _ = _lambda_from(cp)
            lm, _ = _lambda_from(cm)
            dlam = (lp - lm) / (2.0 * h)
            om = conn.omega[k]
            rot = om[1:n, 1:n]  # rot[i, k] = form carrying A_i onto A_k
            nabla = dlam - rot @ lam0 - lam0 @ rot.T
            rhs_rows[k] = (
                nabla + lam0 * om[0, 0] + np.eye(full) * om[n, 0]
            )
        lam_ijk = np.zeros((full, full, full))
        for i in range(full):
            for j in range(full):
                sol, *_ = np.linalg.lstsq(P, rhs_rows[:, i, j], rcond=None)
                lam_ijk[i, j] = sol
        out.lambda_ijk = lam_ijk
        contracted = np.einsum("iik->k", lam_ijk) / (n - 1)
        out.lambda_k_consistency = float(np.max(np.abs(contracted - lambda_k)))
    return out


# ---------------------------------------------------------------------------
# Focal manifolds
# ---------------------------------------------------------------------------


def focal_manifold_sample(
    field: FrameField,
    focus_index: int,
    nodes: list[np.ndarray],
    h: float | None = None,
    tol_mult: float = TAU_MULT,
    rank_tol: float = 1e-6,
) -> FocalMesh:
    """Sample a focal sheet over a set of nodes and measure its rank.

    The focus is selected by its index in the ascending root order at the
    first node and tracked to every other node and stencil point by
    eigenvector overlap.  The differential of the sheet is measured modulo
    the point itself (projective rank); the causal verdict restricts the
    ambient form to the measured tangent directions.
    """
    h = field.fd_step if h is None else float(h)
    points: list[np.ndarray | None] = []
    gaps = 0
    diffs = []
    G = field.form.G
    for u in nodes:
        u = np.atleast_1d(np.asarray(u, dtype=float))
        try:
            conn = field.connection(u, h)
            lam, _ = _lambda_from(conn)
            fs = foci(lam, None, conn.frame, tol_mult)
            flat = []
            for e in fs.entries:
                flat.extend([e] * e.multiplicity)
            entry = flat[focus_index]
            B0 = entry.B
            dB = []
            for k in range(field.d):
                e_v = np.zeros(field.d)
                e_v[k] = h
                sp = _match_root(field, conn.frame, entry, conn, u + e_v, h, tol_mult)
                sm = _match_root(field, conn.frame, entry, conn, u - e_v, h, tol_mult)
                fp = field.frame(u + e_v, reference=conn.frame)
                fm = field.frame(u - e_v, reference=conn.frame)
                Bp = fp.An + sp * fp.A0
                Bm = fm.An + sm * fm.A0
                dB.append((Bp - Bm) / (2.0 * h))
            # project off the point itself ((B, B) = 1 by construction)
            vs = []
            for v in dB:
                vs.append(v - scalar_product(v, B0, field.form) * B0)
            points.append(normalize_projective(B0))
            diffs.append(np.asarray(vs))
        except (TrackingError, MultiplicityChangeSignal):
            points.append(None)
            gaps += 1
    if not diffs:
        raise TrackingError("focal tracking failed at every node")
    # pooled rank over nodes: max of per-node ranks
    rank = 0
    sv_last = np.zeros(field.d)
    causal = "degenerate"
    for vs in diffs:
        sv = np.linalg.svd(vs, compute_uv=False)
        r = int(np.sum(sv >= rank_tol * max(1.0, sv[0])))
        if r > rank:
            rank = r
            sv_last = sv
    # causal type from the restricted form on the measured directions
    signs = []
    for vs in diffs:
        gram = vs @ G @ vs.T
        w = np.linalg.eigvalsh(gram)
        signs.extend(w)
    signs = np.asarray(signs)
    tol_c = rank_tol * max(1.0, float(np.max(np.abs(signs))) if signs.size else 1.0)
    if rank == 0:
        causal = "point"
    elif np.all(signs > -tol_c) and np.sum(signs > tol_c) >= rank:
        causal = "spacelike"
    elif np.any(signs < -tol_c):
        causal = "timelike"
    return FocalMesh(
        points=points,
        nodes=[np.atleast_1d(np.asarray(x, dtype=float)) for x in nodes],
        rank=rank,
        singular_values=sv_last,
        causal=causal,
        gaps=gaps,
    )
