"""Reference solvers for the four problem families.

Small instances get exact answers (enumeration with pruning for the
discrete problems, closed forms for the z = 2 continuous ones); everything
else is served by deterministic multi-restart local search.  Every solver
returns a :class:`SolveReport` whose stated cost is re-evaluated through
:func:`projclust.geometry.cost_pow`, so reports are comparable across
methods.

All solvers accept a Dataset or a WeightedSet.
"""

import numpy as np

from . import geometry
from .geometry import WeightedSet, CenterSet, Subspace, Flat, Line, LineSet
from ._rng import rng_stream

EXACT_CLUSTERING_MAX_N = 14
EXACT_LINES_MAX_N = 12


class SolveReport:
    """Outcome of one solve: the solution plus bookkeeping.

    ``cost`` is always ``cost_pow ** (1/z)`` for the z the solver ran with.
    """

    def __init__(self, solution, cost, cost_pow, method, restarts, converged):
        self.solution = solution
        self.cost = float(cost)
        self.cost_pow = float(cost_pow)
        self.method = str(method)
        self.restarts = int(restarts)
        self.converged = bool(converged)

    def __repr__(self):
        return (f"SolveReport(method={self.method!r}, cost={self.cost:.6g}, "
                f"restarts={self.restarts}, converged={self.converged})")


def _report(problem, data, solution, z, method, restarts, converged):
    cp = geometry.cost_pow(problem, data, solution, z)
    return SolveReport(solution, cp ** (1.0 / z), cp, method, restarts, converged)


def _data_arrays(data):
    pts = geometry._points_of(data)
    if isinstance(data, WeightedSet):
        return pts, data.weights
    return pts, np.ones(pts.shape[0])


# ---------------------------------------------------------------------------
# Single-center subproblem


def _weighted_median_1d(x, w):
    order = np.argsort(x, kind="stable")
    cw = np.cumsum(w[order])
    half = 0.5 * cw[-1]
    i = int(np.searchsorted(cw, half))
    return float(x[order[min(i, len(x) - 1)]])


def _weiszfeld(pts, w, max_iter=10_000, tol=1e-10):
    """Weighted geometric median by iteratively reweighted averaging."""
    c = np.average(pts, axis=0, weights=w)
    prev = np.inf
    for _ in range(max_iter):
        diff = pts - c
        dist = np.linalg.norm(diff, axis=1)
        if np.any(dist == 0.0):
            # nudge off a data point so the iteration stays defined
            c = c + 1e-12 * (1.0 + np.abs(c))
            diff = pts - c
            dist = np.linalg.norm(diff, axis=1)
        inv = w / dist
        c = (inv[:, None] * pts).sum(axis=0) / inv.sum()
        val = float(np.sum(w * np.linalg.norm(pts - c, axis=1)))
        if prev - val < tol * max(val, 1e-300):
            break
        prev = val
    return c


def _descent_center(pts, w, z, max_iter=500, tol=1e-8):
    """Gradient descent with backtracking on the convex power-z center cost."""
    c = np.average(pts, axis=0, weights=w)
    step = 1.0

    def cost(cc):
        return float(np.sum(w * np.linalg.norm(pts - cc, axis=1) ** z))

    val = cost(c)
    for _ in range(max_iter):
        diff = c - pts
        dist = np.linalg.norm(diff, axis=1)
        coef = np.where(dist > 0, z * dist ** (z - 2.0), 0.0) * w
        grad = (coef[:, None] * diff).sum(axis=0)
        gnorm = float(np.linalg.norm(grad))
        if gnorm == 0.0:
            break
        improved = False
        for _ in range(40):
            cand = c - step * grad / max(gnorm, 1.0)
            cval = cost(cand)
            if cval < val:
                improved = True
                break
            step *= 0.5
        if not improved:
            break
        c, old = cand, val
        val = cval
        step *= 1.5
        if old - val < tol * max(val, 1e-300):
            break
    return c


def opt_center(pts, z, weights=None):
    """The best single center for a weighted point set under power z."""
    pts = geometry._points_of(pts)
    w = np.ones(pts.shape[0]) if weights is None else np.asarray(weights, dtype=np.float64)
    z = geometry._check_z(z)
    if pts.shape[0] == 1:
        return pts[0].copy()
    if z == 2.0:
        return np.average(pts, axis=0, weights=w)
    if z == 1.0:
        if pts.shape[1] == 1:
            return np.array([_weighted_median_1d(pts[:, 0], w)])
        return _weiszfeld(pts, w)
    return _descent_center(pts, w, z)


def _center_cost(pts, w, z):
    c = opt_center(pts, z, w)
    return c, float(np.sum(w * np.linalg.norm(pts - c, axis=1) ** z))


# ---------------------------------------------------------------------------
# Clustering


def solve_clustering_exact(data, k, z):
    """Optimal power-z clustering by canonical partition enumeration.

    Branch-and-bound over set partitions into at most k blocks; partial
    costs only grow as points join blocks, so subtrees above the incumbent
    are pruned.  Refuses n > EXACT_CLUSTERING_MAX_N.
    """
    pts, w = _data_arrays(data)
    n, d = pts.shape
    k = int(k)
    z = geometry._check_z(z)
    if k < 1:
        raise ValueError("k must be positive")
    if n > EXACT_CLUSTERING_MAX_N:
        raise ValueError(
            f"exact clustering is limited to n <= {EXACT_CLUSTERING_MAX_N}, got n = {n}")
    if k >= n:
        sol = CenterSet(pts)
        return _report("clustering", data, sol, z, "partition-enumeration", 0, True)

    memo = {}

    def block_cost(mask, idx):
        got = memo.get(mask)
        if got is None:
            if len(idx) == 1:
                got = 0.0
            elif z == 2.0:
                bw = w[idx]
                bp = pts[idx]
                tot = bw.sum()
                s = bw @ bp
                got = float(bw @ np.sum(bp * bp, axis=1) - (s @ s) / tot)
                got = max(got, 0.0)
            else:
                got = _center_cost(pts[idx], w[idx], z)[1]
            memo[mask] = got
        return got

    best = [np.inf, None]
    blocks = []          # list of lists of indices
    masks = []
    costs = []

    def dfs(i, partial):
        if partial >= best[0]:
            return
        if i == n:
            best[0] = partial
            best[1] = [list(b) for b in blocks]
            return
        for b in range(len(blocks)):
            old_mask, old_cost = masks[b], costs[b]
            blocks[b].append(i)
            masks[b] = old_mask | (1 << i)
            costs[b] = block_cost(masks[b], blocks[b])
            dfs(i + 1, partial - old_cost + costs[b])
            blocks[b].pop()
            masks[b], costs[b] = old_mask, old_cost
        if len(blocks) < k:
            blocks.append([i])
            masks.append(1 << i)
            costs.append(0.0)
            dfs(i + 1, partial)
            blocks.pop()
            masks.pop()
            costs.pop()

    dfs(0, 0.0)
    centers = np.vstack([opt_center(pts[idx], z, w[idx]) for idx in best[1]])
    sol = CenterSet(centers)
    return _report("clustering", data, sol, z, "partition-enumeration", 0, True)


def _dz_seed(pts, w, k, z, rng):
    """Cost-proportional seeding: each new center drawn by current power-z cost."""
    n = pts.shape[0]
    first = int(rng.integers(n))
    centers = [pts[first]]
    for _ in range(k - 1):
        dist = np.min(
            np.stack([np.linalg.norm(pts - c, axis=1) for c in centers]), axis=0)
        p = w * dist ** z
        tot = p.sum()
        if tot <= 0:
            centers.append(pts[int(rng.integers(n))])
            continue
        centers.append(pts[int(rng.choice(n, p=p / tot))])
    return np.vstack(centers)


def solve_clustering_heuristic(data, k, z, restarts=20, seed=0):
    """Generalized Lloyd iteration with cost-proportional seeding.

    Restart r draws its seeding from stream r of ``seed``, so results are
    reproducible and independent of evaluation order.  Empty clusters are
    re-seeded from the point with the largest current distance.
    """
    pts, w = _data_arrays(data)
    n, d = pts.shape
    k = int(k)
    z = geometry._check_z(z)
    restarts = int(restarts)
    if k < 1 or restarts < 1:
        raise ValueError("k and restarts must be positive")
    if k >= n:
        sol = CenterSet(pts)
        return _report("clustering", data, sol, z, "lloyd-multirestart", restarts, True)

    best = (np.inf, None, False)
    for r in range(restarts):
        rng = rng_stream(seed, r)
        centers = _dz_seed(pts, w, k, z, rng)
        prev_assign = None
        converged = False
        for _ in range(100):
            cs = CenterSet(centers)
            assign = geometry.assignment("clustering", pts, cs)
            # revive empty clusters at the worst-served point
            dist = geometry.distances("clustering", pts, cs)
            for b in range(k):
                if not np.any(assign == b):
                    far = int(np.argmax(dist))
                    centers[b] = pts[far]
                    assign = geometry.assignment("clustering", pts, CenterSet(centers))
                    dist = geometry.distances("clustering", pts, CenterSet(centers))
            if prev_assign is not None and np.array_equal(assign, prev_assign):
                converged = True
                break
            prev_assign = assign
            centers = np.vstack([
                opt_center(pts[assign == b], z, w[assign == b])
                if np.any(assign == b) else centers[b]
                for b in range(k)])
        cp = geometry.cost_pow("clustering", data, CenterSet(centers), z)
        if cp < best[0]:
            best = (cp, centers.copy(), converged)
    sol = CenterSet(best[1])
    return _report("clustering", data, sol, z, "lloyd-multirestart", restarts, best[2])


# ---------------------------------------------------------------------------
# Subspace and flat


def _weighted_pca_basis(pts, w, k):
    """Top-k right singular directions of the sqrt-weighted point matrix."""
    scaled = pts * np.sqrt(w)[:, None]
    _, _, vt = np.linalg.svd(scaled, full_matrices=True)
    return vt[:k]


def _subspace_cost(pts, w, basis, z):
    res_sq = np.maximum(np.sum(pts * pts, axis=1) - np.sum((pts @ basis.T) ** 2, axis=1), 0.0)
    return float(np.sum(w * res_sq ** (z / 2.0)))


def _grassmann_descent(pts, w, basis, z, max_iter=200, tol=1e-8):
    """Projected gradient descent over orthonormal k-frames."""
    b = basis.copy()
    val = _subspace_cost(pts, w, b, z)
    step = 1.0
    scale = float(np.max(np.linalg.norm(pts, axis=1)))
    floor = 1e-12 * max(scale, 1.0)
    for _ in range(max_iter):
        res_sq = np.maximum(
            np.sum(pts * pts, axis=1) - np.sum((pts @ b.T) ** 2, axis=1), 0.0)
        r = np.sqrt(res_sq)
        coef = w * np.maximum(r, floor) ** (z - 2.0)
        grad = -z * (b @ (pts.T * coef) @ pts)
        gnorm = float(np.linalg.norm(grad))
        if gnorm == 0.0:
            break
        improved = False
        for _ in range(40):
            q, _ = np.linalg.qr((b - step * grad / gnorm).T)
            cand = q.T[: b.shape[0]]
            cval = _subspace_cost(pts, w, cand, z)
            if cval < val:
                improved = True
                break
            step *= 0.5
        if not improved:
            break
        b, old = cand, val
        val = cval
        step *= 1.5
        if old - val < tol * max(val, 1e-300):
            break
    return b, val


def solve_subspace(data, k, z, candidates=30):
    """Best k-dimensional linear subspace.

    Exact for z = 2 (top singular directions).  For other z, spans of
    sampled k-point subsets plus the z = 2 solution are scored and the best
    few are polished by gradient descent over orthonormal frames; this is a
    heuristic with no optimality guarantee.
    """
    pts, w = _data_arrays(data)
    n, d = pts.shape
    k = int(k)
    z = geometry._check_z(z)
    if not 1 <= k < d:
        raise ValueError("need 1 <= k < d (a full-dimensional subspace is trivial)")
    svd_basis = _weighted_pca_basis(pts, w, k)
    if z == 2.0:
        sol = Subspace(svd_basis)
        return _report("subspace", data, sol, z, "svd", 0, True)
    pool = [svd_basis]
    rng = np.random.default_rng(0)   # internal, fixed: results are deterministic
    for _ in range(candidates):
        idx = rng.choice(n, size=min(k, n), replace=False)
        basis = geometry._orthonormal_rows(pts[idx])
        if basis.shape[0] < k:
            filler = geometry._orthonormal_rows(
                np.vstack([basis, rng.normal(size=(k - basis.shape[0], d))]))
            basis = filler
        pool.append(basis[:k])
    scored = sorted(pool, key=lambda b: _subspace_cost(pts, w, b, z))
    best_b, best_v = None, np.inf
    for b in scored[:3]:
        rb, rv = _grassmann_descent(pts, w, b, z)
        if rv < best_v:
            best_b, best_v = rb, rv
    sol = Subspace(geometry._orthonormal_rows(best_b))
    if sol.dim < k:   # guard against a rank drop during refinement
        sol = Subspace(_weighted_pca_basis(pts, w, k))
    return _report("subspace", data, sol, z, "span-search+descent", 0, True)


def _complement_basis(basis, d):
    # Columns k..d-1 of the full Q factor span the orthogonal complement.
    q, _ = np.linalg.qr(basis.T, mode="complete")
    return q[:, basis.shape[0]:].T


def solve_flat(data, k, z, candidates=10):
    """Best k-dimensional affine flat.

    Exact for z = 2: the flat through the weighted centroid spanned by the
    top principal directions.  For other z, alternates an optimal
    translation (a single-center problem in the orthogonal complement) with
    direction descent, starting from the z = 2 solution and a few sampled
    anchors.
    """
    pts, w = _data_arrays(data)
    n, d = pts.shape
    k = int(k)
    z = geometry._check_z(z)
    if not 1 <= k < d:
        raise ValueError("need 1 <= k < d (a full-dimensional flat is trivial)")
    centroid = np.average(pts, axis=0, weights=w)
    pca = _weighted_pca_basis(pts - centroid, w, k)
    if z == 2.0:
        sol = Flat.from_point(Subspace(pca), centroid)
        return _report("flat", data, sol, z, "centered-svd", 0, True)

    rng = np.random.default_rng(0)
    anchors = [centroid] + [pts[int(rng.integers(n))] for _ in range(candidates)]
    best = (np.inf, None)
    for anchor in anchors:
        basis = pca
        point = anchor
        val = np.inf
        for _ in range(10):
            basis, _ = _grassmann_descent(pts - point, w, basis, z, max_iter=60)
            comp = _complement_basis(basis, d)
            coords = pts @ comp.T
            tau_c = opt_center(coords, z, w)
            point = tau_c @ comp
            new_val = _subspace_cost(pts - point, w, basis, z)
            if val - new_val < 1e-8 * max(new_val, 1e-300):
                val = new_val
                break
            val = new_val
        if val < best[0]:
            best = (val, (basis, point))
    basis, point = best[1]
    sol = Flat.from_point(Subspace(geometry._orthonormal_rows(basis)), point)
    return _report("flat", data, sol, z, "alternating-descent", 0, True)


# ---------------------------------------------------------------------------
# Lines


def _fit_line(pts, w, fallback_dir):
    """Weighted least-squares line through a group (exact for z = 2)."""
    if pts.shape[0] == 1:
        return Line.canonical(pts[0], fallback_dir)
    centroid = np.average(pts, axis=0, weights=w)
    centered = (pts - centroid) * np.sqrt(w)[:, None]
    _, s, vt = np.linalg.svd(centered, full_matrices=False)
    direction = vt[0] if s[0] > 0 else fallback_dir
    return Line.canonical(centroid, direction)


def _default_dir(d):
    e = np.zeros(d)
    e[0] = 1.0
    return e


def solve_lines_exact(data, k, z):
    """Optimal k-line solution for z = 2 by partition enumeration.

    Each block of a partition gets its exact least-squares line, so the best
    partition yields the optimum.  Restricted to z = 2 (other powers have no
    closed-form per-block fit) and n <= EXACT_LINES_MAX_N.
    """
    pts, w = _data_arrays(data)
    n, d = pts.shape
    k = int(k)
    z = geometry._check_z(z)
    if z != 2.0:
        raise ValueError("exact line solving is available for z = 2 only")
    if k < 1:
        raise ValueError("k must be positive")
    if n > EXACT_LINES_MAX_N:
        raise ValueError(f"exact line solving is limited to n <= {EXACT_LINES_MAX_N}, got n = {n}")
    fallback = _default_dir(d)
    if 2 * k >= n:
        # pair the points up: every partition into <= k blocks of <= 2 is free
        lines = []
        for i in range(0, n - 1, 2):
            a, b = pts[i], pts[i + 1]
            lines.append(Line.through(a, b) if not np.array_equal(a, b)
                         else Line.canonical(a, fallback))
        if n % 2:
            lines.append(Line.canonical(pts[-1], fallback))
        lines = lines[:k] if len(lines) >= k else lines + [lines[-1]] * (k - len(lines))
        sol = LineSet(lines)
        return _report("lines", data, sol, z, "partition-enumeration", 0, True)

    memo = {}

    def block_cost(mask, idx):
        got = memo.get(mask)
        if got is None:
            if len(idx) <= 2:
                got = 0.0
            else:
                bp = pts[idx]
                bw = w[idx]
                ln = _fit_line(bp, bw, fallback)
                res = bp - geometry.project_line(bp, ln)
                got = float(np.sum(bw * np.sum(res * res, axis=1)))
            memo[mask] = got
        return got

    best = [np.inf, None]
    blocks, masks, costs = [], [], []

    def dfs(i, partial):
        if partial >= best[0]:
            return
        if i == n:
            best[0] = partial
            best[1] = [list(b) for b in blocks]
            return
        for b in range(len(blocks)):
            old_mask, old_cost = masks[b], costs[b]
            blocks[b].append(i)
            masks[b] = old_mask | (1 << i)
            costs[b] = block_cost(masks[b], blocks[b])
            dfs(i + 1, partial - old_cost + costs[b])
            blocks[b].pop()
            masks[b], costs[b] = old_mask, old_cost
        if len(blocks) < k:
            blocks.append([i])
            masks.append(1 << i)
            costs.append(0.0)
            dfs(i + 1, partial)
            blocks.pop()
            masks.pop()
            costs.pop()

    dfs(0, 0.0)
    lines = []
    for idx in best[1]:
        bp = pts[idx]
        if len(idx) == 1:
            lines.append(Line.canonical(bp[0], fallback))
        elif len(idx) == 2 and np.array_equal(bp[0], bp[1]):
            lines.append(Line.canonical(bp[0], fallback))
        elif len(idx) == 2:
            lines.append(Line.through(bp[0], bp[1]))
        else:
            lines.append(_fit_line(bp, w[idx], fallback))
    while len(lines) < k:
        lines.append(lines[-1])
    sol = LineSet(lines)
    return _report("lines", data, sol, z, "partition-enumeration", 0, True)


def solve_lines_heuristic(data, k, z, restarts=20, seed=0):
    """Alternating assign/refit search for k lines with random restarts.

    Refits use the least-squares line per group (exact for z = 2, a
    reasonable surrogate otherwise); empty groups are re-seeded at the
    worst-served point.
    """
    pts, w = _data_arrays(data)
    n, d = pts.shape
    k = int(k)
    z = geometry._check_z(z)
    restarts = int(restarts)
    if k < 1 or restarts < 1:
        raise ValueError("k and restarts must be positive")
    fallback = _default_dir(d)

    def line_through_indices(i, j):
        if np.array_equal(pts[i], pts[j]):
            return Line.canonical(pts[i], fallback)
        return Line.through(pts[i], pts[j])

    best = (np.inf, None, False)
    for r in range(restarts):
        rng = rng_stream(seed, r)
        if n >= 2:
            idx = rng.choice(n, size=(k, 2), replace=True)
            lines = [line_through_indices(int(a), int(b)) if a != b
                     else Line.canonical(pts[int(a)], fallback)
                     for a, b in idx]
        else:
            lines = [Line.canonical(pts[0], fallback)] * k
        prev_assign = None
        converged = False
        for _ in range(100):
            ls = LineSet(lines)
            assign = geometry.assignment("lines", pts, ls)
            dist = geometry.distances("lines", pts, ls)
            for b in range(k):
                if not np.any(assign == b):
                    far = int(np.argmax(dist))
                    lines[b] = Line.canonical(pts[far], lines[b].direction)
                    ls = LineSet(lines)
                    assign = geometry.assignment("lines", pts, ls)
                    dist = geometry.distances("lines", pts, ls)
            if prev_assign is not None and np.array_equal(assign, prev_assign):
                converged = True
                break
            prev_assign = assign
            lines = [
                _fit_line(pts[assign == b], w[assign == b], lines[b].direction)
                if np.any(assign == b) else lines[b]
                for b in range(k)]
        cp = geometry.cost_pow("lines", data, LineSet(lines), z)
        if cp < best[0]:
            best = (cp, list(lines), converged)
    sol = LineSet(best[1])
    return _report("lines", data, sol, z, "alternating-multirestart", restarts, best[2])


def solve_lines(data, k, z, restarts=20, seed=0, method="auto"):
    pts, _ = _data_arrays(data)
    if method == "exact" or (method == "auto" and float(z) == 2.0
                             and pts.shape[0] <= EXACT_LINES_MAX_N):
        return solve_lines_exact(data, k, z)
    if method in ("auto", "heuristic"):
        return solve_lines_heuristic(data, k, z, restarts=restarts, seed=seed)
    raise ValueError(f"unknown method {method!r}")


def solve_clustering(data, k, z, restarts=20, seed=0, method="auto"):
    pts, _ = _data_arrays(data)
    if method == "exact" or (method == "auto" and pts.shape[0] <= 12):
        return solve_clustering_exact(data, k, z)
    if method in ("auto", "heuristic"):
        return solve_clustering_heuristic(data, k, z, restarts=restarts, seed=seed)
    raise ValueError(f"unknown method {method!r}")


def solve(problem, data, k, z, restarts=20, seed=0, method="auto"):
    """One entry point for all four problems; see the per-problem solvers."""
    if problem == "clustering":
        return solve_clustering(data, k, z, restarts=restarts, seed=seed, method=method)
    if problem == "subspace":
        return solve_subspace(data, k, z)
    if problem == "flat":
        return solve_flat(data, k, z)
    if problem == "lines":
        return solve_lines(data, k, z, restarts=restarts, seed=seed, method=method)
    raise ValueError(f"unknown problem {problem!r}; expected one of {geometry.PROBLEMS}")
