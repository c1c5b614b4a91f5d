"""Gaussian random projections and their diagnostic checks.

A map is a t x d matrix with i.i.d. N(0, 1/t) entries.  For a fixed vector
v, the squared length ratio ||Pi v||^2 / ||v||^2 is distributed as a
chi-square with t degrees of freedom divided by t, independent of v and of
the ambient dimension d; the diagnostics in this module lean on that fact.
"""

import numpy as np

from . import geometry
from ._rng import rng_stream


class JLMap:
    """A linear map R^d -> R^t given by its (t, d) matrix.

    ``seed`` records how the matrix was drawn (informational; maps built
    directly from a matrix keep whatever value is passed).
    """

    def __init__(self, matrix, seed=0):
        m = np.asarray(matrix, dtype=np.float64)
        if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
            raise ValueError(f"matrix must be a non-empty 2-d array, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise ValueError("matrix must contain only finite values")
        self.matrix = m.copy()
        self.matrix.setflags(write=False)
        self.t, self.d = m.shape
        self.seed = int(seed)

    def __repr__(self):
        return f"JLMap(t={self.t}, d={self.d}, seed={self.seed})"


def sample_jl(d, t, seed, stream=0):
    """Draw a t x d map with i.i.d. N(0, 1/t) entries, deterministic in (seed, stream)."""
    d = int(d)
    t = int(t)
    if d < 1 or t < 1:
        raise ValueError("d and t must be positive")
    rng = rng_stream(seed, stream)
    m = rng.normal(0.0, 1.0 / np.sqrt(t), size=(t, d))
    return JLMap(m, seed=seed)


def identity_map(d):
    """The t = d identity map (useful as a no-op baseline)."""
    return JLMap(np.eye(int(d)), seed=0)


def apply(pi, x):
    """Apply a map to a vector, an (n, d) array, a Dataset, or a WeightedSet."""
    if isinstance(x, geometry.WeightedSet):
        if x.d != pi.d:
            raise ValueError(f"data dimension {x.d} != map input dimension {pi.d}")
        return geometry.WeightedSet(x.points @ pi.matrix.T, x.weights)
    if isinstance(x, geometry.Dataset):
        if x.d != pi.d:
            raise ValueError(f"data dimension {x.d} != map input dimension {pi.d}")
        return geometry.Dataset(x.points @ pi.matrix.T)
    arr = np.asarray(x, dtype=np.float64)
    if arr.shape[-1] != pi.d:
        raise ValueError(f"input dimension {arr.shape[-1]} != map input dimension {pi.d}")
    return arr @ pi.matrix.T


def moment_ratio_samples(z, t, trials, seed):
    """Monte Carlo samples of ||Pi v||^z / ||v||^z for a fixed vector v.

    The ratio ||Pi v||^2 / ||v||^2 equals a chi-square with t degrees of
    freedom divided by t, so the samples are drawn from that law directly;
    this keeps the cost O(trials) even for very large t.
    """
    z = geometry._check_z(z)
    t = int(t)
    trials = int(trials)
    if t < 1 or trials < 1:
        raise ValueError("t and trials must be positive")
    rng = rng_stream(seed)
    ratio_sq = rng.chisquare(t, size=trials) / t
    return ratio_sq ** (z / 2.0)


def moment_bound_statistic(z, eps, t, trials, seed):
    """Estimate E[(||Pi v||^z / ||v||^z - 1)_+] by Monte Carlo.

    For target dimension t large enough relative to z and eps, this one-sided
    expected overshoot falls below ((1 + eps)^z - 1) / 100.  Returns the
    sample mean of the positive part.
    """
    eps = float(eps)
    if eps <= 0:
        raise ValueError("eps must be positive")
    samples = moment_ratio_samples(z, t, trials, seed)
    return float(np.mean(np.maximum(samples - 1.0, 0.0)))


def moment_bound_threshold(z, eps):
    """The target value ((1 + eps)^z - 1) / 100 for :func:`moment_bound_statistic`."""
    z = geometry._check_z(z)
    eps = float(eps)
    if eps <= 0:
        raise ValueError("eps must be positive")
    return ((1.0 + eps) ** z - 1.0) / 100.0


# Relative slack on singular-value comparisons: the check is exact in spirit
# but must tolerate last-bit rounding from the SVD itself.
_SV_SLACK = 1e-12


def is_subspace_embedding(pi, subspace, eps):
    """Whether the map distorts no vector of the subspace by more than 1 + eps.

    True iff every singular value s of ``pi.matrix @ basis.T`` satisfies
    1/(1 + eps) <= s <= 1 + eps; the extreme singular values are exactly the
    extreme length-distortion factors over the subspace.
    """
    eps = float(eps)
    if eps < 0:
        raise ValueError("eps must be non-negative")
    if subspace.d != pi.d:
        raise ValueError(f"subspace ambient {subspace.d} != map input dimension {pi.d}")
    s = np.linalg.svd(pi.matrix @ subspace.basis.T, compute_uv=False)
    lo, hi = float(np.min(s)), float(np.max(s))
    return (hi <= (1.0 + eps) * (1.0 + _SV_SLACK)
            and lo >= (1.0 + eps) ** -1 * (1.0 - _SV_SLACK))


def distortion_range(pi, data):
    """All-pairs distance distortion of a finite point set.

    Returns (lo, hi): the smallest and largest value of
    ||Pi x - Pi y|| / ||x - y|| over pairs with x != y.  Requires at least
    one distinct pair.
    """
    pts = data.points if isinstance(data, geometry.Dataset) else np.asarray(data, dtype=np.float64)
    if pts.shape[1] != pi.d:
        raise ValueError(f"data dimension {pts.shape[1]} != map input dimension {pi.d}")
    proj = pts @ pi.matrix.T
    iu = np.triu_indices(pts.shape[0], k=1)
    orig = np.linalg.norm(pts[iu[0]] - pts[iu[1]], axis=1)
    mask = orig > 0
    if not np.any(mask):
        raise ValueError("need at least one pair of distinct points")
    new = np.linalg.norm(proj[iu[0]][mask] - proj[iu[1]][mask], axis=1)
    ratio = new / orig[mask]
    return float(np.min(ratio)), float(np.max(ratio))


def is_bi_lipschitz(pi, data, eps):
    """Whether every pairwise distance is preserved within a 1 + eps factor."""
    eps = float(eps)
    if eps < 0:
        raise ValueError("eps must be non-negative")
    lo, hi = distortion_range(pi, data)
    return hi <= 1.0 + eps and lo >= 1.0 / (1.0 + eps)


def write_map(path, pi):
    """Serialize a map in the shared matrix text format (seed in a comment)."""
    geometry.write_points(path, pi.matrix, comments=[f"seed {pi.seed}"])


def read_map(path):
    """Read a map written by :func:`write_map`."""
    seed = 0
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            line = raw.strip()
            if line.startswith("#"):
                parts = line[1:].split()
                if len(parts) == 2 and parts[0] == "seed":
                    seed = int(parts[1])
            elif line:
                break
    return JLMap(geometry.read_points(path), seed=seed)
