"""Stripe distance, best admissible stripe fits, and cube classification.

The distance of u to unions of stripes orthogonal to e_i over a cube Q is

    D_i(u, Q) = inf_F (1/|Q|) Int_Q |u - chi_F|,

where F ranges over unions of stripes whose boundaries are planes orthogonal
to e_i with consecutive boundaries at least eta apart. Because u takes values
in [0, 1] and chi_F in {0, 1}, the integrand is linear in u on each side, so
the cube optimum is attained on the perpendicular-averaged profile and the
minimization reduces to an exact dynamic program over grid-aligned boundary
positions. The empty union and all of space are admissible candidates.
"""

from dataclasses import dataclass

import numpy as np

from .core import ScalarField


@dataclass(frozen=True)
class StripeFit:
    """Best admissible union of stripes orthogonal to one axis over a cube."""

    direction: int
    eta: float
    transitions: np.ndarray  # sorted boundary positions, torus coordinates
    distance: float
    admissible: bool


@dataclass(frozen=True)
class CubeClassification:
    """Per-cube stripe-distance labels over a grid of sampled centers."""

    centers: np.ndarray  # (n_cubes, d)
    labels: list
    distances: np.ndarray  # (n_cubes, d)
    sigma: float
    eta: float
    l: float


def _cube_profile(field, direction, z, l):
    """Perpendicular-averaged profile of the cube along `direction`.

    Returns (columns, weights, profile): traversal-ordered cell indices of the
    interval [z_i - l/2, z_i + l/2] (unwrapped), the fractional coverage of
    each column, and the perpendicular weighted mean of u per grid cell.
    """
    p = field.params
    if np.isscalar(z):
        z = (float(z),) * p.d
    z = tuple(float(c) for c in z)
    if len(z) != p.d:
        raise ValueError("cube center needs %d coordinates" % p.d)
    l = float(l)
    if not 0.0 < l <= p.L:
        raise ValueError("cube side must lie in (0, L], got %r" % l)
    hs = p.spacing
    ax = direction - 1

    # weighted mean over the perpendicular section of the cube
    prof = field.values
    for j in range(p.d - 1, -1, -1):
        if j == ax:
            continue
        a = (z[j] - l / 2.0) % p.L
        edges = np.arange(p.n + 1) * hs
        w = np.clip(min(a + l, p.L), edges[:-1], edges[1:]) - np.clip(a, edges[:-1], edges[1:])
        if a + l > p.L:
            w += np.clip(a + l - p.L, edges[:-1], edges[1:]) - np.clip(0.0, edges[:-1], edges[1:])
        w = w / w.sum()
        prof = np.tensordot(prof, w, axes=([j], [0]))

    a = (z[ax] - l / 2.0) % p.L
    k0 = int(np.floor(a / hs + 1e-12))
    k1 = int(np.ceil((a + l) / hs - 1e-12))
    cols = (k0 + np.arange(k1 - k0)) % p.n
    lo = np.maximum(a, (k0 + np.arange(k1 - k0)) * hs)
    hi = np.minimum(a + l, (k0 + np.arange(k1 - k0) + 1) * hs)
    weights = (hi - lo) / hs
    return cols, weights, prof, k0


def stripe_fit_distance(field, i, cube, eta):
    """Exact discrete optimum of the stripe distance in direction i over cube.

    Boundaries are restricted to grid cell edges; consecutive boundaries must
    be at least eta apart. Solved by dynamic programming over columns with an
    inside/outside state and a gap counter; returns the optimal StripeFit.
    """
    p = field.params
    eta = float(eta)
    if eta < p.spacing * (1.0 - 1e-12):
        raise ValueError("eta below the grid spacing is not resolvable")
    z, l = cube
    cols, weights, prof, k0 = _cube_profile(field, i, z, l)
    costs = np.stack([prof[cols], 1.0 - prof[cols]])  # state 0: outside F
    ncols = len(cols)
    hs = p.spacing
    gmin = int(np.ceil(eta / hs - 1e-9))
    cap = gmin  # gaps at least gmin behave identically

    big = np.inf
    dp = np.full((2, cap + 1), big)
    dp[:, cap] = 0.0  # no boundary seen yet: the first flip is unconstrained
    parent = np.zeros((ncols, 2, cap + 1, 2), dtype=np.int64)
    for j in range(ncols):
        ndp = np.full((2, cap + 1), big)
        for s in (0, 1):
            for g in range(cap + 1):
                if dp[s, g] == big:
                    continue
                # crossing the boundary before column j consumes column j-1
                g2 = g if j == 0 else min(g + 1, cap)
                if dp[s, g] < ndp[s, g2]:
                    ndp[s, g2] = dp[s, g]
                    parent[j, s, g2] = (s, g)
                # flip at the boundary before column j
                if j > 0 and g2 >= gmin and dp[s, g] < ndp[1 - s, 0]:
                    ndp[1 - s, 0] = dp[s, g]
                    parent[j, 1 - s, 0] = (s, g)
        ndp += weights[j] * costs[:, j][:, None]
        dp = ndp

    flat = dp.ravel()
    best = int(np.argmin(flat))
    s, g = best // (cap + 1), best % (cap + 1)
    distance = float(flat[best] / weights.sum())

    # walk the parents back to recover boundary positions
    flips = []
    for j in range(ncols - 1, -1, -1):
        ps, pg = parent[j, s, g]
        if j > 0 and ps != s:
            flips.append(j)
        s, g = int(ps), int(pg)
    positions = np.array(sorted(((k0 + j) * hs) % p.L for j in flips))
    gaps_ok = True
    if len(flips) > 1:
        fl = np.array(sorted(flips))
        gaps_ok = bool((np.diff(fl) * hs >= eta - 1e-12).all())
    return StripeFit(
        direction=i,
        eta=eta,
        transitions=positions,
        distance=distance,
        admissible=gaps_ok,
    )


def direction_distance(field, cube, eta):
    """(D_eta, best_direction): min over axes of the per-direction distance.

    Ties are broken by the lowest axis index.
    """
    best = None
    best_i = None
    for i in range(1, field.params.d + 1):
        fit = stripe_fit_distance(field, i, cube, eta)
        if best is None or fit.distance < best:
            best = fit.distance
            best_i = i
    return best, best_i


def classify_cubes(field, l, eta, sigma, stride):
    """Label sampled cubes by which directions fit stripes within sigma.

    A cube gets label A_i when only direction i has distance <= sigma, A_-1
    when at least two directions do, and A_0 when none does. Centers are
    sampled on a grid of the given stride. Diagnostic output only.
    """
    p = field.params
    l = float(l)
    if not l < p.L:
        raise ValueError("cube side l must be smaller than the period L")
    stride = float(stride)
    if stride < p.spacing * (1.0 - 1e-12):
        raise ValueError("stride below the grid spacing oversamples the field")
    steps = int(np.floor(p.L / stride + 1e-9))
    axes = [np.arange(steps) * stride] * p.d
    centers = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, p.d)
    distances = np.zeros((len(centers), p.d))
    labels = []
    for k, z in enumerate(centers):
        for i in range(1, p.d + 1):
            distances[k, i - 1] = stripe_fit_distance(field, i, (tuple(z), l), eta).distance
        close = np.nonzero(distances[k] <= sigma)[0]
        if len(close) >= 2:
            labels.append("A_-1")
        elif len(close) == 0:
            labels.append("A_0")
        else:
            labels.append("A_%d" % (close[0] + 1))
    return CubeClassification(
        centers=centers,
        labels=labels,
        distances=distances,
        sigma=float(sigma),
        eta=float(eta),
        l=l,
    )


def classification_csv(classification):
    d = classification.centers.shape[1]
    head = ",".join("center_%d" % (k + 1) for k in range(d))
    head += "," + ",".join("d_%d" % (k + 1) for k in range(d)) + ",label"
    lines = [head]
    for k in range(len(classification.centers)):
        coords = ",".join("%.17g" % c for c in classification.centers[k])
        dists = ",".join("%.17g" % v for v in classification.distances[k])
        lines.append("%s,%s,%s" % (coords, dists, classification.labels[k]))
    return "\n".join(lines) + "\n"
