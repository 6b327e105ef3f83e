"""Ambient geometry: the signature-(n+1, 1) bilinear form, causal
classification of points and lines, geodesic and curvature identity checks.

The projective space carries an oval quadric cut out by a quadratic form of
signature (n+1, 1).  Its exterior models a Lorentzian space of constant
curvature +1; the quadric itself carries the conformal geometry all other
modules build on.  Everything here is pure value semantics over numpy
arrays, safe to call concurrently.

Index conventions, used package-wide:

* full coordinate / frame indices run 0 .. n+1;
* the "reduced" index list [0, 1, .., n-1, n+1] labels the coframe of the
  exterior space at a frame vertex (the slot n is excluded).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegenerateLineError,
    DimensionError,
    FrameDegeneracyError,
    InvalidPointError,
    ShapeError,
    StencilError,
)
from .tolerances import TAU_DISC, TAU_QUADRIC


# ---------------------------------------------------------------------------
# Bilinear form
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AmbientForm:
    """The ambient symmetric bilinear form on homogeneous coordinates.

    Attributes:
        n: conformal dimension (the quadric has dimension n).
        G: (n+2, n+2) symmetric matrix; entries 1 on the diagonal slots
           1..n, -1 on the (0, n+1) / (n+1, 0) corners, 0 elsewhere.
    """

    n: int
    G: np.ndarray = field(repr=False)

    @property
    def size(self) -> int:
        return self.n + 2


def make_ambient_form(n: int) -> AmbientForm:
    """Build the ambient form for conformal dimension ``n`` (n >= 2)."""
    if int(n) != n or n < 2:
        raise DimensionError(f"conformal dimension must be an integer >= 2, got {n}")
    n = int(n)
    G = np.zeros((n + 2, n + 2))
    for i in range(1, n + 1):
        G[i, i] = 1.0
    G[0, n + 1] = -1.0
    G[n + 1, 0] = -1.0
    return AmbientForm(n=n, G=G)


def reduced_indices(n: int) -> list[int]:
    """Coordinate indices of the exterior-space coframe (slot n removed)."""
    return list(range(n)) + [n + 1]


def reduced_metric(form: AmbientForm) -> np.ndarray:
    """The (n+1, n+1) metric of the exterior space: G without row/col n."""
    idx = reduced_indices(form.n)
    return form.G[np.ix_(idx, idx)]


# ---------------------------------------------------------------------------
# Points and scalar products
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HomogeneousPoint:
    """A nonzero projective point with a normalization convention tag.

    ``convention`` records how ``coords`` were scaled ("raw", "unit", or a
    family-specific tag such as "canonical-lift"); projective identity does
    not depend on it.
    """

    coords: np.ndarray
    convention: str = "raw"

    def __post_init__(self):
        c = np.asarray(self.coords, dtype=float)
        if c.ndim != 1:
            raise ShapeError("homogeneous coordinates must be a 1-d vector")
        if not np.any(c):
            raise InvalidPointError("zero vector is not a projective point")
        object.__setattr__(self, "coords", c)

    def normalized(self) -> "HomogeneousPoint":
        """Unit Euclidean norm, sign fixed by first nonzero component > 0."""
        return HomogeneousPoint(normalize_projective(self.coords), "unit")


def as_vector(x) -> np.ndarray:
    if isinstance(x, HomogeneousPoint):
        return x.coords
    return np.asarray(x, dtype=float)


def normalize_projective(x) -> np.ndarray:
    """Canonical representative: unit norm, first nonzero component positive."""
    v = as_vector(x)
    nrm = np.linalg.norm(v)
    if nrm == 0.0:
        raise InvalidPointError("zero vector is not a projective point")
    v = v / nrm
    for c in v:
        if abs(c) > 1e-12:
            if c < 0:
                v = -v
            break
    return v


def points_close(x, y, tol: float = 1e-9) -> bool:
    """Projective closeness: distance between sign-matched unit vectors."""
    return projective_distance(x, y) < tol


def projective_distance(x, y) -> float:
    a = as_vector(x)
    b = as_vector(y)
    a = a / np.linalg.norm(a)
    b = b / np.linalg.norm(b)
    return min(np.linalg.norm(a - b), np.linalg.norm(a + b))


def scalar_product(x, y, form: AmbientForm) -> float:
    """Bilinear pairing of two homogeneous vectors under the ambient form."""
    a = as_vector(x)
    b = as_vector(y)
    if a.shape != (form.size,) or b.shape != (form.size,):
        raise ShapeError(
            f"expected vectors of length {form.size}, got {a.shape} and {b.shape}"
        )
    return float(a @ form.G @ b)


# ---------------------------------------------------------------------------
# Causal classification
# ---------------------------------------------------------------------------


class CausalClass(enum.Enum):
    # points
    ON_QUADRIC = "on_quadric"
    DE_SITTER_EXTERIOR = "de_sitter_exterior"
    HYPERBOLIC_INTERIOR = "hyperbolic_interior"
    # lines / hyperplanes
    SPACELIKE = "spacelike"
    TIMELIKE = "timelike"
    LIGHTLIKE = "lightlike"


def classify_point(x, form: AmbientForm, tol: float = TAU_QUADRIC) -> CausalClass:
    """Causal type of a point by the sign of its scalar square.

    The tolerance band is relative: |(x,x)| < tol * |x|^2 counts as lying
    on the quadric, so the answer is invariant under rescaling of x.
    """
    v = as_vector(x)
    scale = float(v @ v)
    if scale == 0.0:
        raise InvalidPointError("zero vector is not a projective point")
    q = scalar_product(v, v, form)
    if abs(q) < tol * scale:
        return CausalClass.ON_QUADRIC
    return (
        CausalClass.DE_SITTER_EXTERIOR if q > 0 else CausalClass.HYPERBOLIC_INTERIOR
    )


def classify_line(x, y, form: AmbientForm, tol: float = TAU_DISC) -> CausalClass:
    """Causal type of the line through two independent points.

    Counts real intersections with the quadric via the discriminant of the
    restricted quadratic form: two -> timelike, none -> spacelike, a double
    root -> lightlike (tangent).
    """
    a = as_vector(x)
    b = as_vector(y)
    a = a / np.linalg.norm(a)
    b = b / np.linalg.norm(b)
    # independence check on the normalized pair
    sv = np.linalg.svd(np.stack([a, b]), compute_uv=False)
    if sv[-1] < 1e-12:
        raise DegenerateLineError("points are projectively equal; no line spanned")
    qxx = scalar_product(a, a, form)
    qyy = scalar_product(b, b, form)
    qxy = scalar_product(a, b, form)
    disc = qxy * qxy - qxx * qyy
    if disc > tol:
        return CausalClass.TIMELIKE
    if disc < -tol:
        return CausalClass.SPACELIKE
    return CausalClass.LIGHTLIKE


# ---------------------------------------------------------------------------
# Frames along a curve (used by the geodesic residual)
# ---------------------------------------------------------------------------


def _complete_polar_frame(x: np.ndarray, form: AmbientForm) -> np.ndarray:
    """Adapted frame with vertex at an exterior point x.

    Returns an (n+2, n+2) matrix whose rows are A_0, A_1..A_{n-1}, A_n = x
    normalized, A_{n+1}, satisfying the standard Gram pattern.  Seeds are
    fixed coordinate vectors, so the frame varies smoothly with x as long
    as no seed projection degenerates.
    """
    n = form.n
    G = form.G
    q = scalar_product(x, x, form)
    if q <= 0:
        raise InvalidPointError("frame vertex must be an exterior point")
    an = x / np.sqrt(q)

    def proj_off(v, units):
        # remove components along unit vectors (signature-aware)
        for u, sign in units:
            v = v - sign * (v @ G @ u) * u
        return v

    e = np.eye(n + 2)
    # timelike seed: e_0 + e_{n+1} has scalar square -2
    t = proj_off(e[0] + e[n + 1], [(an, 1.0)])
    tt = scalar_product(t, t, form)
    if tt >= -1e-12:
        raise FrameDegeneracyError("timelike seed degenerated")
    that = t / np.sqrt(-tt)
    # spacelike block from coordinate seeds
    units = [(an, 1.0), (that, -1.0)]
    space = []
    seeds = [e[k] for k in range(1, n + 1)] + [e[0] - e[n + 1]]
    for s in seeds:
        if len(space) == n:
            break
        w = proj_off(s, units)
        ww = scalar_product(w, w, form)
        if ww < 1e-10:
            continue
        w = w / np.sqrt(ww)
        space.append(w)
        units.append((w, 1.0))
    if len(space) < n:
        raise FrameDegeneracyError("could not complete a spacelike block")
    a_i = space[: n - 1]
    y = space[n - 1]
    a0 = (that + y) / np.sqrt(2.0)
    anp1 = (that - y) / np.sqrt(2.0)
    return np.vstack([a0, *a_i, an, anp1])


def curve_frames(samples: np.ndarray, form: AmbientForm) -> np.ndarray:
    """Adapted frames along a sampled exterior curve, sign-aligned in order."""
    samples = np.asarray(samples, dtype=float)
    frames = []
    prev = None
    for x in samples:
        F = _complete_polar_frame(x, form)
        if prev is not None:
            F = _align_to_reference(F, prev)
        frames.append(F)
        prev = F
    return np.asarray(frames)


def _align_to_reference(F: np.ndarray, ref: np.ndarray) -> np.ndarray:
    """Flip frame-vector signs to match a nearby reference frame.

    The null pair (rows 0 and n+1) must flip together to preserve their
    pairing; spacelike rows flip independently.
    """
    F = F.copy()
    m = F.shape[0]
    if F[0] @ ref[0] + F[m - 1] @ ref[m - 1] < 0:
        F[0] = -F[0]
        F[m - 1] = -F[m - 1]
    for i in range(1, m - 1):
        if F[i] @ ref[i] < 0:
            F[i] = -F[i]
    return F


def curve_connection(frames: np.ndarray, dt: float) -> np.ndarray:
    """Connection matrices along a curve by central differences.

    Returns an array of shape (m-2, n+2, n+2): entry [k] is the matrix of
    1-form values at node k+1, with d A_xi = Omega[xi, eta] A_eta.
    """
    m = frames.shape[0]
    out = []
    for k in range(1, m - 1):
        dF = (frames[k + 1] - frames[k - 1]) / (2.0 * dt)
        out.append(np.linalg.solve(frames[k].T, dF.T).T)
    return np.asarray(out)


@dataclass
class GeodesicReport:
    residual: float
    per_node: np.ndarray
    alphas: np.ndarray


def geodesic_residual(
    samples,
    dt: float,
    form: AmbientForm,
    omegas: np.ndarray | None = None,
    frames: np.ndarray | None = None,
) -> GeodesicReport:
    """Deviation of a sampled curve from the projective geodesic equation.

    The tangent components xi^u (u in the reduced index list) are read off
    the connection along the curve; the residual at each node is

        d xi/dt + xi . omega - alpha xi

    with alpha fitted per node by least squares, normalized by |xi|.
    Straight projective lines give O(h^2); genuinely curved paths stay
    bounded away from zero as the sampling step shrinks.
    """
    samples = np.asarray(samples, dtype=float)
    if samples.ndim != 2 or samples.shape[1] != form.size:
        raise ShapeError("curve samples must be (m, n+2)")
    if samples.shape[0] < 5:
        raise StencilError("need at least 5 curve samples")
    if frames is None:
        frames = curve_frames(samples, form)
    if omegas is None:
        omegas = curve_connection(frames, dt)
    red = reduced_indices(form.n)
    n_row = form.n
    # xi at interior nodes 1..m-2 (omegas[k] belongs to node k+1)
    xi = omegas[:, n_row, :][:, red]
    speed = np.linalg.norm(xi, axis=1)
    if np.max(speed) < 1e-12:
        raise InvalidPointError("stationary curve: tangent vanishes")
    sub = omegas[:, red, :][:, :, red]
    residuals = []
    alphas = []
    for k in range(1, xi.shape[0] - 1):
        if speed[k] < 1e-12 * np.max(speed):
            raise InvalidPointError("stationary curve: tangent vanishes at a node")
        dxi = (xi[k + 1] - xi[k - 1]) / (2.0 * dt)
        b = dxi + xi[k] @ sub[k]
        alpha = float(xi[k] @ b) / float(xi[k] @ xi[k])
        r = b - alpha * xi[k]
        residuals.append(np.linalg.norm(r) / speed[k])
        alphas.append(alpha)
    per_node = np.asarray(residuals)
    return GeodesicReport(
        residual=float(np.max(per_node)), per_node=per_node, alphas=np.asarray(alphas)
    )


# ---------------------------------------------------------------------------
# Curvature identity check on a frame field
# ---------------------------------------------------------------------------


@dataclass
class CurvatureReport:
    """Assembled curvature components and their deviation from the target.

    ``components`` holds R^r_{s u v} over reduced indices in coordinate
    order [0, 1.., n-1, n+1]; components outside the realized direction
    span are completed from the constant-curvature closed form, so
    ``form_deviation`` (raw 2-form mismatch on realized pairs) is the
    honest numerical content.
    """

    components: np.ndarray
    target: np.ndarray
    form_deviation: float
    component_deviation: float
    ricci: np.ndarray
    ricci_deviation: float
    realized_pairs: int


def curvature_target(form: AmbientForm) -> np.ndarray:
    """Closed-form components of a constant-curvature space: R^r_suv =
    delta_u^r g_sv - delta_v^r g_su, over reduced indices."""
    g = reduced_metric(form)
    m = g.shape[0]
    eye = np.eye(m)
    return np.einsum("ur,sv->rsuv", eye, g) - np.einsum("vr,su->rsuv", eye, g)


def ricci_from_components(R: np.ndarray) -> np.ndarray:
    """Contract R^r_{s r v} over the fiber/coframe-aligned index."""
    return np.einsum("rsrv->sv", R)


def ambient_curvature_check(field, node, h: float | None = None) -> CurvatureReport:
    """Check the constant-curvature identity on a frame field at a node.

    Finite-difference curvature 2-forms (exterior derivative of the
    connection minus its reduced-index wedge square) are compared on every
    realized direction pair against the closed-form right side.  The
    component tensor is then assembled by least squares over realized
    pairs, completed outside them by the closed form, and contracted to a
    Ricci deviation report.
    """
    n = field.n
    form = field.form
    red = reduced_indices(n)
    h = field.fd_step if h is None else h
    dirs = field.realized_directions(node, h)  # list of RealizedDirection
    q = len(dirs)
    if q < 2:
        raise StencilError("need at least two realized directions")
    g = reduced_metric(form)
    target = curvature_target(form)
    m = len(red)

    # coframe rows theta_a^u = omega_n^u(e_a)
    theta = np.array([d.omega[n, :][red] for d in dirs])

    pair_vals = []  # measured FD 2-form, indexed [pair][s, r] over reduced
    pair_pred = []
    pairs = []
    for a in range(q):
        for b in range(a + 1, q):
            da, db = dirs[a], dirs[b]
            # d omega (e_a, e_b) on the full matrix
            d_ab = da.derivative_of(db) - db.derivative_of(da)
            wedge = da.omega @ db.omega - db.omega @ da.omega
            # restrict and subtract the reduced-index wedge part
            omega_red_a = da.omega[np.ix_(red, red)]
            omega_red_b = db.omega[np.ix_(red, red)]
            wedge_red = omega_red_a @ omega_red_b - omega_red_b @ omega_red_a
            fd_form = d_ab[np.ix_(red, red)] - wedge_red
            # predicted: Omega_s^r = g_sv w^r w^v  (antisymmetrized pair value)
            th_a = theta[a]
            th_b = theta[b]
            pred = np.einsum("sv,r,v->sr", g, th_a, th_b) - np.einsum(
                "sv,r,v->sr", g, th_b, th_a
            )
            pair_vals.append(fd_form)
            pair_pred.append(pred)
            pairs.append((a, b))

    pair_vals = np.asarray(pair_vals)
    pair_pred = np.asarray(pair_pred)
    form_deviation = float(np.max(np.abs(pair_vals - pair_pred))) if pairs else 0.0

    # assemble the deviation tensor least-norm over realized pairs, then
    # complete with the closed form
    n_pairs = len(pairs)
    cols = [(u, v) for u in range(m) for v in range(u + 1, m)]
    M = np.zeros((n_pairs, len(cols)))
    for k, (a, b) in enumerate(pairs):
        for c, (u, v) in enumerate(cols):
            M[k, c] = theta[a][u] * theta[b][v] - theta[b][u] * theta[a][v]
    dev = np.zeros((m, m, m, m))
    resid = pair_vals - pair_pred  # [pair][s, r]
    for s in range(m):
        for r in range(m):
            y = resid[:, s, r]
            x, *_ = np.linalg.lstsq(M, y, rcond=None)
            for c, (u, v) in enumerate(cols):
                dev[r, s, u, v] = x[c]
                dev[r, s, v, u] = -x[c]
    components = target + dev
    ricci = ricci_from_components(components)
    ricci_target = n * g
    return CurvatureReport(
        components=components,
        target=target,
        form_deviation=form_deviation,
        component_deviation=float(np.max(np.abs(dev))),
        ricci=ricci,
        ricci_deviation=float(np.max(np.abs(ricci - ricci_target))),
        realized_pairs=n_pairs,
    )
