"""Point sets, candidate solutions, projections, and cost evaluation.

The four problem families share one cost interface: a solution is a set of
k "shapes" (points, a linear subspace, an affine flat, or lines), the
distance from a data point to the solution is the Euclidean distance to the
nearest shape, and the objective is the sum of z-th powers of distances,
optionally weighted.

All solution types are validated and immutable after construction, so they
can be shared freely across threads.
"""

import numpy as np

PROBLEMS = ("clustering", "subspace", "flat", "lines")

# Tolerance for orthonormality / canonical-form checks.
ORTHO_TOL = 1e-9
# Tolerance for unit-norm checks on line directions.
UNIT_TOL = 1e-12


def _as_matrix(points, name="points"):
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2:
        raise ValueError(f"{name} must be a 2-d array, got shape {pts.shape}")
    if pts.shape[0] < 1 or pts.shape[1] < 1:
        raise ValueError(f"{name} must be non-empty, got shape {pts.shape}")
    if not np.all(np.isfinite(pts)):
        raise ValueError(f"{name} must contain only finite values")
    return pts


def _freeze(a):
    a = np.array(a, dtype=np.float64, copy=True)
    a.setflags(write=False)
    return a


class Dataset:
    """An ordered set of n points in R^d, stored as an (n, d) float array."""

    def __init__(self, points):
        pts = _as_matrix(points)
        self.points = _freeze(pts)
        self.n, self.d = pts.shape

    def __len__(self):
        return self.n

    def __repr__(self):
        return f"Dataset(n={self.n}, d={self.d})"


class WeightedSet(Dataset):
    """A dataset with a non-negative weight per point (not all zero)."""

    def __init__(self, points, weights):
        super().__init__(points)
        w = np.asarray(weights, dtype=np.float64)
        if w.shape != (self.n,):
            raise ValueError(f"weights must have shape ({self.n},), got {w.shape}")
        if not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite")
        if np.any(w < 0):
            raise ValueError("weights must be non-negative")
        if not np.any(w > 0):
            raise ValueError("at least one weight must be positive")
        self.weights = _freeze(w)

    def __repr__(self):
        return f"WeightedSet(n={self.n}, d={self.d})"


class CenterSet:
    """k candidate centers in R^d for the clustering problem."""

    def __init__(self, centers):
        c = _as_matrix(centers, "centers")
        self.centers = _freeze(c)
        self.k, self.d = c.shape

    def __repr__(self):
        return f"CenterSet(k={self.k}, d={self.d})"


class Subspace:
    """A j-dimensional linear subspace of R^d given by an orthonormal basis.

    The constructor rejects a basis whose rows are not orthonormal to within
    ``ORTHO_TOL``; use :meth:`from_spanning` to orthonormalize raw spanning
    vectors first.
    """

    def __init__(self, basis):
        b = _as_matrix(basis, "basis")
        j, d = b.shape
        if j > d:
            raise ValueError(f"basis has {j} rows but ambient dimension is {d}")
        gram = b @ b.T
        if np.max(np.abs(gram - np.eye(j))) > ORTHO_TOL:
            raise ValueError("basis rows are not orthonormal; "
                             "use Subspace.from_spanning to orthonormalize")
        self.basis = _freeze(b)
        self.dim = j
        self.d = d

    @classmethod
    def from_spanning(cls, vectors):
        """Build a subspace from raw (possibly dependent) spanning vectors."""
        v = _as_matrix(vectors, "vectors")
        q = _orthonormal_rows(v)
        if q.shape[0] == 0:
            raise ValueError("spanning vectors are all zero")
        return cls(q)

    def __repr__(self):
        return f"Subspace(dim={self.dim}, d={self.d})"


def _orthonormal_rows(v):
    """Orthonormal basis (as rows) for the row space of v, dropping rank deficiency."""
    u, s, vt = np.linalg.svd(v, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.empty((0, v.shape[1]))
    rank = int(np.sum(s > max(v.shape) * np.finfo(np.float64).eps * s[0]))
    return vt[:rank]


class Flat:
    """An affine flat τ + span(B) in canonical form: τ orthogonal to span(B)."""

    def __init__(self, direction, translation):
        if not isinstance(direction, Subspace):
            direction = Subspace(direction)
        tau = np.asarray(translation, dtype=np.float64)
        if tau.shape != (direction.d,):
            raise ValueError(f"translation must have shape ({direction.d},)")
        if not np.all(np.isfinite(tau)):
            raise ValueError("translation must be finite")
        inplane = direction.basis @ tau
        if np.max(np.abs(inplane), initial=0.0) > ORTHO_TOL * max(1.0, float(np.linalg.norm(tau))):
            raise ValueError("translation must be orthogonal to the direction span; "
                             "use Flat.from_point to canonicalize")
        self.direction = direction
        self.translation = _freeze(tau)
        self.dim = direction.dim
        self.d = direction.d

    @classmethod
    def from_point(cls, direction, point):
        """The flat through `point` with the given direction, canonicalized."""
        if not isinstance(direction, Subspace):
            direction = Subspace(direction)
        p = np.asarray(point, dtype=np.float64)
        tau = p - direction.basis.T @ (direction.basis @ p)
        # Scrub rounding residue so the canonical-form check passes exactly.
        tau = tau - direction.basis.T @ (direction.basis @ tau)
        return cls(direction, tau)

    def __repr__(self):
        return f"Flat(dim={self.dim}, d={self.d})"


class Line:
    """A line v + t·u in canonical form.

    ``u`` has unit norm, its first coordinate of magnitude above ``UNIT_TOL``
    is positive, and the anchor ``v`` is the point of the line closest to the
    origin (so ⟨v, u⟩ = 0).  Use :meth:`canonical` or :meth:`through` to
    build a line from unnormalized data.
    """

    def __init__(self, anchor, direction):
        v = np.asarray(anchor, dtype=np.float64)
        u = np.asarray(direction, dtype=np.float64)
        if v.ndim != 1 or v.shape != u.shape:
            raise ValueError("anchor and direction must be 1-d arrays of equal length")
        if v.shape[0] < 1:
            raise ValueError("ambient dimension must be at least 1")
        if not (np.all(np.isfinite(v)) and np.all(np.isfinite(u))):
            raise ValueError("anchor and direction must be finite")
        nrm = float(np.linalg.norm(u))
        if abs(nrm - 1.0) > UNIT_TOL:
            raise ValueError("direction must have unit norm; use Line.canonical")
        lead = np.flatnonzero(np.abs(u) > UNIT_TOL)
        if lead.size == 0 or u[lead[0]] <= 0:
            raise ValueError("leading direction coordinate must be positive; "
                             "use Line.canonical")
        if abs(float(v @ u)) > ORTHO_TOL * max(1.0, float(np.linalg.norm(v))):
            raise ValueError("anchor must be orthogonal to direction; use Line.canonical")
        self.anchor = _freeze(v)
        self.direction = _freeze(u)
        self.d = v.shape[0]

    @classmethod
    def canonical(cls, anchor, direction):
        """Canonicalize an arbitrary (anchor, direction) description of a line."""
        v = np.asarray(anchor, dtype=np.float64)
        u = np.asarray(direction, dtype=np.float64)
        nrm = float(np.linalg.norm(u))
        if nrm == 0.0 or not np.all(np.isfinite(u)):
            raise ValueError("direction must be a nonzero finite vector")
        u = u / nrm
        lead = np.flatnonzero(np.abs(u) > UNIT_TOL)
        if u[lead[0]] < 0:
            u = -u
        v = v - (v @ u) * u
        v = v - (v @ u) * u  # second pass scrubs rounding residue
        return cls(v, u)

    @classmethod
    def through(cls, p, q):
        """The line through two distinct points."""
        p = np.asarray(p, dtype=np.float64)
        q = np.asarray(q, dtype=np.float64)
        if np.array_equal(p, q):
            raise ValueError("points must be distinct")
        return cls.canonical(p, q - p)

    def __eq__(self, other):
        if not isinstance(other, Line):
            return NotImplemented
        return (np.array_equal(self.anchor, other.anchor)
                and np.array_equal(self.direction, other.direction))

    def __hash__(self):
        return hash((self.anchor.tobytes(), self.direction.tobytes()))

    def __repr__(self):
        return f"Line(d={self.d})"


class LineSet:
    """k candidate lines, all in the same ambient dimension."""

    def __init__(self, lines):
        lines = list(lines)
        if len(lines) < 1:
            raise ValueError("need at least one line")
        for ln in lines:
            if not isinstance(ln, Line):
                raise ValueError("all entries must be Line instances")
        d = lines[0].d
        if any(ln.d != d for ln in lines):
            raise ValueError("all lines must share the same ambient dimension")
        self.lines = tuple(lines)
        self.k = len(lines)
        self.d = d

    def __len__(self):
        return self.k

    def __repr__(self):
        return f"LineSet(k={self.k}, d={self.d})"


# ---------------------------------------------------------------------------
# Projections


def project_subspace(x, subspace):
    """Orthogonal projection of a point (or rows of a matrix) onto a subspace."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != subspace.d:
        raise ValueError(f"point dimension {x.shape[-1]} != subspace ambient {subspace.d}")
    b = subspace.basis
    return (x @ b.T) @ b


def project_flat(x, flat):
    """Orthogonal projection of a point (or rows of a matrix) onto a flat."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != flat.d:
        raise ValueError(f"point dimension {x.shape[-1]} != flat ambient {flat.d}")
    b = flat.direction.basis
    return flat.translation + ((x - flat.translation) @ b.T) @ b


def project_line(x, line):
    """Orthogonal projection of a point (or rows of a matrix) onto a line."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != line.d:
        raise ValueError(f"point dimension {x.shape[-1]} != line ambient {line.d}")
    t = (x - line.anchor) @ line.direction
    return line.anchor + np.multiply.outer(t, line.direction)


# ---------------------------------------------------------------------------
# Distances, assignment, and cost


def _points_of(data):
    if isinstance(data, Dataset):
        return data.points
    return _as_matrix(data)


def _sq_dists_to_centers(pts, centers):
    sq = (np.sum(pts * pts, axis=1)[:, None]
          + np.sum(centers * centers, axis=1)[None, :]
          - 2.0 * pts @ centers.T)
    np.maximum(sq, 0.0, out=sq)
    return sq


def _sq_dists_to_lines(pts, lineset):
    n = pts.shape[0]
    sq = np.empty((n, lineset.k))
    for j, ln in enumerate(lineset.lines):
        w = pts - ln.anchor
        along = w @ ln.direction
        sq[:, j] = np.sum(w * w, axis=1) - along * along
    np.maximum(sq, 0.0, out=sq)
    return sq


def distances(problem, data, solution):
    """Per-point Euclidean distance to the nearest shape of the solution.

    Parameters
    ----------
    problem : str
        One of ``PROBLEMS``.
    data : Dataset, WeightedSet, or (n, d) array
    solution : CenterSet, Subspace, Flat, or LineSet matching the problem.

    Returns
    -------
    (n,) float array of distances.
    """
    pts = _points_of(data)
    if problem == "clustering":
        if not isinstance(solution, CenterSet):
            raise ValueError("clustering expects a CenterSet")
        _check_dim(pts, solution.d)
        return np.sqrt(np.min(_sq_dists_to_centers(pts, solution.centers), axis=1))
    if problem == "subspace":
        if not isinstance(solution, Subspace):
            raise ValueError("subspace expects a Subspace")
        _check_dim(pts, solution.d)
        res = pts - project_subspace(pts, solution)
        return np.linalg.norm(res, axis=1)
    if problem == "flat":
        if not isinstance(solution, Flat):
            raise ValueError("flat expects a Flat")
        _check_dim(pts, solution.d)
        res = pts - project_flat(pts, solution)
        return np.linalg.norm(res, axis=1)
    if problem == "lines":
        if not isinstance(solution, LineSet):
            raise ValueError("lines expects a LineSet")
        _check_dim(pts, solution.d)
        return np.sqrt(np.min(_sq_dists_to_lines(pts, solution), axis=1))
    raise ValueError(f"unknown problem {problem!r}; expected one of {PROBLEMS}")


def _check_dim(pts, d):
    if pts.shape[1] != d:
        raise ValueError(f"data dimension {pts.shape[1]} != solution dimension {d}")


def assignment(problem, data, solution):
    """Index of the nearest shape per point; ties go to the lowest index.

    Defined for "clustering" (nearest center) and "lines" (nearest line).
    """
    pts = _points_of(data)
    if problem == "clustering":
        _check_dim(pts, solution.d)
        return np.argmin(_sq_dists_to_centers(pts, solution.centers), axis=1)
    if problem == "lines":
        _check_dim(pts, solution.d)
        return np.argmin(_sq_dists_to_lines(pts, solution), axis=1)
    raise ValueError("assignment is defined for 'clustering' and 'lines' only")


def cost_pow(problem, data, solution, z):
    """Sum of z-th powers of distances, weighted if data is a WeightedSet."""
    z = _check_z(z)
    dist = distances(problem, data, solution)
    if isinstance(data, WeightedSet):
        w = data.weights
    else:
        w = None
    if z == 2.0:
        vals = dist * dist
    elif z == 1.0:
        vals = dist
    else:
        vals = dist ** z
    if w is None:
        return float(np.sum(vals))
    return float(np.sum(w * vals))


def cost(problem, data, solution, z):
    """The z-th root of :func:`cost_pow` (a metric-scale objective)."""
    z = _check_z(z)
    return cost_pow(problem, data, solution, z) ** (1.0 / z)


def _check_z(z):
    z = float(z)
    if not np.isfinite(z) or z < 1.0:
        raise ValueError("z must be a finite number >= 1")
    return z


# ---------------------------------------------------------------------------
# Text I/O
#
# Format: first non-comment line "n d", then n lines of d space-separated
# floats.  Lines starting with '#' are ignored.  Values are written with
# repr(), which round-trips float64 exactly.


def write_points(path, data, comments=()):
    """Write a Dataset or (n, d) array in the plain text format."""
    pts = _points_of(data)
    with open(path, "w", encoding="utf-8") as fh:
        for c in comments:
            fh.write(f"# {c}\n")
        fh.write(f"{pts.shape[0]} {pts.shape[1]}\n")
        for row in pts:
            fh.write(" ".join(repr(float(v)) for v in row) + "\n")


def read_points(path):
    """Read an (n, d) float array written by :func:`write_points`."""
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            rows.append(line)
    if not rows:
        raise ValueError(f"{path}: no data lines")
    head = rows[0].split()
    if len(head) != 2:
        raise ValueError(f"{path}: header must be 'n d', got {rows[0]!r}")
    n, d = int(head[0]), int(head[1])
    if len(rows) - 1 != n:
        raise ValueError(f"{path}: expected {n} data rows, found {len(rows) - 1}")
    out = np.empty((n, d))
    for i, line in enumerate(rows[1:]):
        vals = line.split()
        if len(vals) != d:
            raise ValueError(f"{path}: row {i} has {len(vals)} values, expected {d}")
        out[i] = [float(v) for v in vals]
    if not np.all(np.isfinite(out)):
        raise ValueError(f"{path}: non-finite values")
    return out


def write_dataset(path, data, comments=()):
    write_points(path, data, comments)


def read_dataset(path):
    return Dataset(read_points(path))
