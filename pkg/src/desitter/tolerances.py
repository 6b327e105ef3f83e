"""Default numerical tolerances, frozen in one place.

Values are chosen for double precision with unit-scaled geometry and the
default finite-difference steps.  Operations take explicit overrides where
a criterion pins a different value.
"""

# Relative tolerance for "lies on the quadric": |(x,x)| < TAU_QUADRIC * |x|^2.
TAU_QUADRIC = 1e-10

# Discriminant tolerance for the causal type of a line.
TAU_DISC = 1e-9

# Max entrywise deviation of an adapted frame's Gram matrix.
TAU_GRAM = 1e-9

# Relative rank cutoff for singular values; the dead band
# [TAU_RANK / 10, 10 * TAU_RANK] triggers explicit ambiguity errors.
TAU_RANK = 1e-7

# Relative determinant cutoff below which a square system counts singular.
TAU_DET = 1e-8

# Apolarity bound for trace-free tensors.
TAU_APOLAR = 1e-10

# Root clustering gap: roots within TAU_MULT * (1 + |s|) share a cluster.
TAU_MULT = 1e-6

# Fold / conic decision bands on the gauge-corrected root derivative.
TAU_FOLD = 1e-3
TAU_CONIC = 1e-5

# Eigenvector overlap below which tracking across a stencil is refused.
TRACK_OVERLAP = 0.7

# Screen integrability tolerance on unit-scaled domains.
TAU_INTEGRABLE = 1e-6

# Default finite-difference step per axis (unit-scaled domains).
DEFAULT_FD_STEP = 1e-4

# Valid range for user-supplied finite-difference steps.
FD_STEP_MIN = 1e-7
FD_STEP_MAX = 1e-2
