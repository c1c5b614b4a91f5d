"""Hard instances where random projection breaks constrained fitting problems.

Two families are provided.  In both, the optimum of the original instance is
known in closed form, while the same objective evaluated after a random
Gaussian projection to very few dimensions collapses, so the ratio

    cost_original / cost_projected

grows without bound as ``n`` grows.  Both families live on standard basis
vectors, which makes projecting them equivalent to reading columns of the
projection matrix -- no ``n x n`` identity matrix is ever materialised.

* ``medoid``: minimise the sum of squared distances to a center that must be
  one of the data points.  The instance is ``e_1, ..., e_n``.
* ``css``: approximate the data by the span of a single data point (column
  subset selection with one column, squared residual objective).  The
  instance is ``(e_{n+1} + e_i) / sqrt(2)`` for ``i = 1, ..., n``.
"""

import numpy as np

from .geometry import Dataset
from .jl import sample_jl

__all__ = [
    "gen_medoid_instance", "gen_css_instance",
    "medoid_cost", "css_cost",
    "medoid_optimum", "css_optimum",
    "RatioReport", "counterexample_trial",
]


def gen_medoid_instance(n):
    """The n standard basis vectors of R^n, as a Dataset."""
    if n < 2:
        raise ValueError("need at least two points")
    return Dataset(np.eye(n))


def gen_css_instance(n):
    """n unit vectors in R^{n+1} sharing a common direction.

    Row i is (e_{n+1} + e_i)/sqrt(2); every pair has inner product 1/2.
    """
    if n < 2:
        raise ValueError("need at least two points")
    pts = np.zeros((n, n + 1))
    pts[:, :n] = np.eye(n)
    pts[:, n] = 1.0
    return Dataset(pts / np.sqrt(2.0))


def medoid_cost(points):
    """min_j sum_i ||x_i - x_j||^2 with the center restricted to the rows.

    Uses the expansion ||x_i - x_j||^2 = ||x_i||^2 + ||x_j||^2 - 2 <x_i, x_j>
    so the whole sweep is O(n d).
    """
    x = np.asarray(points, dtype=float)
    norms_sq = np.sum(x * x, axis=1)
    total = float(np.sum(norms_sq))
    s = np.sum(x, axis=0)
    per_center = total + len(x) * norms_sq - 2.0 * (x @ s)
    return float(np.min(per_center))


def css_cost(points):
    """Best squared residual of projecting all rows onto the span of one row.

    Rows that are exactly zero span nothing and are skipped as candidates;
    if every row is zero the residual is the total mass (which is then 0).
    """
    x = np.asarray(points, dtype=float)
    norms = np.linalg.norm(x, axis=1)
    total = float(np.sum(norms ** 2))
    keep = norms > 0
    if not np.any(keep):
        return total
    u = x[keep] / norms[keep, None]
    scatter = x.T @ x                       # (d, d): cheap when d << n
    captured = np.einsum("ij,jk,ik->i", u, scatter, u)
    return float(total - np.max(captured))


def medoid_optimum(n):
    """Exact optimum of the basis-vector medoid instance: 2(n-1)."""
    return 2.0 * (n - 1)


def css_optimum(n):
    """Exact optimum of the shared-direction instance: 3(n-1)/4."""
    return 0.75 * (n - 1)


class RatioReport:
    """One trial of original-vs-projected cost for a hard instance."""

    def __init__(self, which, n, t, seed, cost_original, cost_projected):
        self.which = which
        self.n = int(n)
        self.t = int(t)
        self.seed = int(seed)
        self.cost_original = float(cost_original)
        self.cost_projected = float(cost_projected)
        if self.cost_projected > 0.0:
            self.ratio = self.cost_original / self.cost_projected
        else:
            self.ratio = np.inf

    def __repr__(self):
        return (f"RatioReport(which={self.which!r}, n={self.n}, t={self.t}, "
                f"seed={self.seed}, ratio={self.ratio:.4g})")


def counterexample_trial(which, n, t, seed):
    """Project one hard instance and compare costs.

    ``which`` is "medoid" or "css".  The projected point set is assembled
    straight from columns of the sampled map, so the cost of a trial is
    O(n t) time and memory even for n in the tens of thousands.
    """
    if n < 2:
        raise ValueError("need at least two points")
    if which == "medoid":
        pi = sample_jl(n, t, seed)
        proj = pi.matrix.T.copy()                     # row i = pi @ e_i
        return RatioReport(which, n, t, seed, medoid_optimum(n),
                           medoid_cost(proj))
    if which == "css":
        pi = sample_jl(n + 1, t, seed)
        cols = pi.matrix.T                            # (n+1, t)
        proj = (cols[:n] + cols[n]) / np.sqrt(2.0)
        return RatioReport(which, n, t, seed, css_optimum(n),
                           css_cost(proj))
    raise ValueError(f"unknown instance family: {which!r}")
