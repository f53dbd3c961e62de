"""Localized decomposition of the energy into per-direction slice terms.

The torus energy is bounded from below by an average of localized cube
energies Fbar_i(u, Q_l(z)), one per coordinate direction. Each Fbar_i
collects four parts:

  R  - couples the one-dimensional interface measure of a slice interval
       with the same-slice pair interaction, weighted by the kernel marginal;
  V  - penalizes variation of the slice increments across neighboring
       slices (an integral of a squared cross difference);
  W  - the same cross-difference square accumulated pointwise over a cube;
  Wc - the double-well mass on cells where the gradient vanishes.

Pair interactions are attributed to intervals [a, b] straddled by the pair
(s, s+rho), normalized by G(rho) = |rho| min(|rho|, L). Carrying out the
(a, b) integration analytically leaves the weight
w(s, rho; I) = |I cap [s, s+rho]| / min(|rho|, L) (one period of a counted).

All kernel sums run over the full image lattice: offsets rho = m h + j L are
split into the in-period part (j = 0, exact) and the periodic tail (j >= 1,
summed explicitly up to a large cutoff with the remainder recorded in the
quadrature budget). On the grid the decomposition is exact up to the gap
between the continuum kernel first moment c_tau and its lattice counterpart,
which is nonnegative for the midpoint lattice, so the lower bound holds by
construction.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import zeta as hurwitz_zeta

from .core import ScalarField
from .energy import double_well, offset_weights, total_energy
from .kernel import scale_length, marginal_coefficient

_TAIL_IMAGES = 50000  # periodic kernel images summed explicitly per offset


def omega(t):
    """Antiderivative of 6 sqrt(W): omega(t) = 3 t^2 - 2 t^3 on [0, 1]."""
    t = np.asarray(t, dtype=np.float64)
    out = 3.0 * t * t - 2.0 * t * t * t
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class SlicePrefix:
    """Prefix integral of the one-dimensional interface density along a slice.

    cum_mm[j] is the integral of the slice interface density over [0, j*h);
    samples holds the slice values for difference queries. The density is
    nonnegative, so cum_mm is nondecreasing and cum_mm[-1] is the full-period
    interface measure of the slice.
    """

    direction: int
    x_perp: tuple
    cum_mm: np.ndarray
    samples: np.ndarray
    spacing: float
    period: float

    @property
    def total(self):
        return float(self.cum_mm[-1])


def _direction_interface_cells(field):
    """Per-direction interface cell integrals, shape (d,) + grid shape.

    Cell c contributes h^d * [3 a |g_i| |g|_1 + (3/a) W(u) |g_i| / |g|_1] to
    direction i when |g|_1 >= theta_g, and zero otherwise (those cells are
    routed to the gradient-free well term). Summed over i and over the grid
    this reproduces the interface part of the Modica-Mortola term on the
    active cells; dividing by h^(d-1) gives per-slice line integrals.
    """
    p = field.params
    v = field.values
    hs = p.spacing
    alpha = p.alpha
    theta = p.gradient_threshold
    grads = [(np.roll(v, -1, axis=ax) - v) / hs for ax in range(p.d)]
    g1 = sum(np.abs(g) for g in grads)
    active = g1 >= theta
    wv = double_well(v)
    cells = np.zeros((p.d,) + p.shape)
    inv = np.zeros_like(g1)
    np.divide(1.0, g1, out=inv, where=active)
    for ax in range(p.d):
        ga = np.abs(grads[ax])
        dens = 3.0 * alpha * ga * g1 + (3.0 / alpha) * wv * ga * inv
        cells[ax] = np.where(active, dens, 0.0) * hs**p.d
    flat = ~active
    return cells, flat


def slice_prefix(field, direction, x_perp=()):
    """SlicePrefix for the slice of `field` along axis `direction` (1..d)."""
    p = field.params
    if not 1 <= direction <= p.d:
        raise ValueError("direction must be an axis index in 1..%d" % p.d)
    ax = direction - 1
    if np.isscalar(x_perp):
        x_perp = (int(x_perp),)
    x_perp = tuple(int(k) for k in x_perp)
    if len(x_perp) != p.d - 1:
        raise ValueError(
            "x_perp needs %d perpendicular indices, got %r" % (p.d - 1, x_perp)
        )
    cells, _ = _direction_interface_cells(field)
    idx = list(x_perp)
    idx.insert(ax, slice(None))
    line = cells[ax][tuple(idx)] / p.spacing ** (p.d - 1)
    samples = field.values[tuple(idx)]
    cum = np.concatenate([[0.0], np.cumsum(line)])
    return SlicePrefix(
        direction=direction,
        x_perp=x_perp,
        cum_mm=cum,
        samples=samples.copy(),
        spacing=p.spacing,
        period=p.L,
    )


def _prefix_at(prefix, y):
    """Piecewise-linear prefix value at position y, periodically unrolled."""
    L = prefix.period
    k = np.floor(np.asarray(y, dtype=np.float64) / L)
    frac = np.asarray(y) - k * L
    nodes = np.arange(len(prefix.cum_mm)) * prefix.spacing
    return k * prefix.total + np.interp(frac, nodes, prefix.cum_mm)


def interval_mm(prefix, s, t):
    """Interface measure of the slice over [s, t] (swapped when t < s)."""
    lo, hi = (s, t) if t >= s else (t, s)
    return float(_prefix_at(prefix, hi) - _prefix_at(prefix, lo))


def _marginal_value(params, t):
    """Discrete kernel marginal: perpendicular lattice sum of K at axis gap t."""
    a = scale_length(params)
    pe = params.p
    t = np.asarray(t, dtype=np.float64)
    if params.d == 1:
        return (t + a) ** (-pe)
    if params.d == 2:
        hs = params.spacing
        return hs * ((t + a) ** (-pe) + 2.0 * hs ** (-pe) * hurwitz_zeta(pe, (t + a) / hs + 1.0))
    raise NotImplementedError("slice decomposition is implemented for d <= 2")


def _perp_weights(params, t):
    """Collapsed cross-slice kernel row: for each perpendicular offset class
    m2 the image sum of K(t + |m2 h + j L|), d = 2 only."""
    a = scale_length(params)
    pe = params.p
    L = params.L
    hs = params.spacing
    m2 = np.arange(params.n) * hs
    t = np.asarray(t, dtype=np.float64)[..., None]
    return L ** (-pe) * (
        hurwitz_zeta(pe, (t + m2 + a) / L) + hurwitz_zeta(pe, (t + (L - m2) + a) / L)
    )


_KPACK_CACHE = {}


def _marginal_tail_sums(params):
    """T0[m] = sum_{j>=1} Khat(m h + j L) and T1[m] = sum_{j>=1} j Khat(m h + j L),
    plus the lattice first moment c_disc and the dropped remainder bound."""
    if params in _KPACK_CACHE:
        return _KPACK_CACHE[params]
    N, hs, L = params.n, params.spacing, params.L
    m = np.arange(N) * hs
    t0 = np.zeros(N)
    t1 = np.zeros(N)
    # accumulate the image sums in blocks to keep memory flat in N
    block = max(1, min(_TAIL_IMAGES, 10**7 // max(N, 1)))
    for j0 in range(1, _TAIL_IMAGES + 1, block):
        j = np.arange(j0, min(j0 + block, _TAIL_IMAGES + 1))
        kh = _marginal_value(params, m[:, None] + j[None, :] * L)
        t0 += kh.sum(axis=1)
        t1 += (kh * j[None, :]).sum(axis=1)
    # remainder of T1 beyond the cutoff, bounded by the continuum moment tail
    c = marginal_coefficient(params)
    q = params.p - params.d + 1
    a = scale_length(params)
    r0 = _TAIL_IMAGES * L
    rem = (c / L) * (r0 + a) ** (2.0 - q) / (q - 2.0) * 2.0
    k0 = _marginal_value(params, m[1:])
    c_disc = 2.0 * hs * (
        (m[1:] * k0).sum()
        + (m[1:] * t0[1:]).sum()
        + L * t1[1:].sum()
        + L * t1[0]
    )
    out = (t0, t1, float(c_disc), float(rem))
    _KPACK_CACHE[params] = out
    if len(_KPACK_CACHE) > 16:
        _KPACK_CACHE.pop(next(iter(_KPACK_CACHE)))
    return out


def _axis_correlate(values, weights, axes):
    """Circular correlation sum_m w[m] x(. + m) along the given axes."""
    shape = tuple(values.shape[ax] for ax in axes)
    wf = np.conj(np.fft.rfftn(weights.reshape(shape), axes=range(weights.ndim)))
    vf = np.fft.rfftn(values, axes=axes)
    full = np.ones(values.ndim, dtype=int)
    for k, ax in enumerate(axes):
        full[ax] = vf.shape[ax]
    return np.fft.irfftn(vf * wf.reshape(full), s=shape, axes=axes)


def _tap_vector(n, m, sign):
    """Overlap taps of the window [s, s + sign*m*h] with the cells, unit h."""
    t = np.zeros(n)
    offs = range(0, m + 1)
    for j in offs:
        w = 0.5 if j in (0, m) else 1.0
        t[(sign * j) % n] += w
    return t


def _window_conv(q, taps, ax):
    """Circular convolution (q * taps) along axis ax."""
    n = q.shape[ax]
    qf = np.fft.rfft(q, axis=ax)
    tf = np.fft.rfft(taps)
    shape = [1] * q.ndim
    shape[ax] = tf.shape[0]
    return np.fft.irfft(qf * tf.reshape(shape), n=n, axis=ax)


_CELL_CACHE = {}


def _cells(field, direction, table):
    """Cube-level cell arrays for direction i: summing array X over the cells
    of a region gives the corresponding integral.

    Returns a dict with keys r, v, w, wc, mm and a quadrature budget.
    """
    key = (id(field), direction)
    hit = _CELL_CACHE.get(key)
    if hit is not None and hit[0] is field:
        return hit[1]

    p = field.params
    if p.d > 2:
        raise NotImplementedError("slice decomposition is implemented for d <= 2")
    ax = direction - 1
    v = field.values
    N, hs, L, d = p.n, p.spacing, p.L, p.d
    perp_measure = hs ** (d - 1)

    cells_i, flat = _direction_interface_cells(field)
    mslice = cells_i[ax] / perp_measure  # per-slice cell integrals
    mtot = mslice.sum(axis=ax, keepdims=True)
    pc = np.cumsum(mslice, axis=ax) - 0.5 * mslice  # prefix at cell centers

    t0, t1, c_disc, tail_rem = _marginal_tail_sums(p)
    k0 = _marginal_value(p, np.arange(N) * hs)
    if d == 2:
        kp0 = _perp_weights(p, np.arange(N) * hs)
        jj = np.arange(1, 513)
        kptail = _perp_weights(p, (np.arange(N) * hs)[:, None] + jj[None, :] * L).sum(axis=1)
        pax = 1 - ax

    idx = np.arange(N)
    sh = [1] * d
    sh[ax] = N

    r_cells = -mslice.copy()
    v_cells = np.zeros_like(v)

    # offsets that are whole periods: no pair difference, interface term only
    r_cells += (hs**3 / L) * 2.0 * float(N * t1[0]) * mtot

    for m in range(1, N):
        tail_r = np.zeros_like(mtot)
        tail_v = 0.0
        for sign in (1, -1):
            pos = sign * m
            take = (idx + pos) % N
            wraps = (idx + pos) // N
            pc_far = np.take(pc, take, axis=ax) + wraps.reshape(sh) * mtot
            mwin = sign * (pc_far - pc)
            diff = np.take(v, take, axis=ax) - v
            q0 = mwin - diff * diff
            taps = _tap_vector(N, m, sign)
            r_cells += (k0[m] * hs**2 / m) * _window_conv(q0, taps, ax)
            tail_r = tail_r + t0[m] * q0.sum(axis=ax, keepdims=True) + N * t1[m] * mtot
            if d == 2:
                aarr = diff
                row = kp0[m]
                rs = row.sum()
                c1 = _axis_correlate(aarr, row, (pax,))
                c2 = _axis_correlate(aarr * aarr, row, (pax,))
                qv = rs * aarr * aarr - 2.0 * aarr * c1 + c2
                v_cells += (hs ** (d - 1) / (2.0 * d)) * (hs**2 / m) * _window_conv(qv, taps, ax)
                rowt = kptail[m]
                rst = rowt.sum()
                c1t = _axis_correlate(aarr, rowt, (pax,))
                c2t = _axis_correlate(aarr * aarr, rowt, (pax,))
                qvt = rst * aarr * aarr - 2.0 * aarr * c1t + c2t
                tail_v = tail_v + qvt.sum(axis=ax, keepdims=True)
        r_cells += (hs**3 / L) * tail_r
        if d == 2:
            v_cells += (hs ** (d - 1) / (2.0 * d)) * (hs**3 / L) * tail_v

    r_cells = r_cells * perp_measure
    v_cells = v_cells * perp_measure

    # pointwise cross-slice term over collapsed full-kernel offset classes
    w_cells = np.zeros_like(v)
    if d == 2:
        ow = offset_weights(p)
        for mi in range(1, N):
            aarr = np.roll(v, -mi, axis=ax) - v
            row = np.take(ow.w, mi, axis=ax)
            rs = row.sum()
            c1 = _axis_correlate(aarr, row, (pax,))
            c2 = _axis_correlate(aarr * aarr, row, (pax,))
            w_cells += rs * aarr * aarr - 2.0 * aarr * c1 + c2
        w_cells *= hs ** (2 * d) / (2.0 * d)

    wc_cells = (
        (3.0 * (table.c_tau - 1.0) / (d * p.alpha))
        * double_well(v)
        * flat.astype(np.float64)
        * hs**d
    )

    budget = {
        "c_tau": float(table.c_tau),
        "c_disc": c_disc,
        "moment_margin": float(table.c_tau) - c_disc,
        "tail_images": _TAIL_IMAGES,
        "tail_remainder": tail_rem,
        "theta_g": float(p.gradient_threshold),
        "c_tau_below_one": bool(table.c_tau <= 1.0),
    }
    out = {"r": r_cells, "v": v_cells, "w": w_cells, "wc": wc_cells,
           "mm": cells_i[ax], "budget": budget}
    _CELL_CACHE[key] = (field, out)
    if len(_CELL_CACHE) > 8:
        _CELL_CACHE.pop(next(iter(_CELL_CACHE)))
    return out


def _interval_cell_weights(params, interval):
    """Fractional coverage of each cell by the interval (a, b) in [0, L]."""
    a, b = float(interval[0]), float(interval[1])
    L = params.L
    if not (0.0 <= a < b <= L + 1e-12):
        raise ValueError("interval %r is not contained in [0, %r)" % (interval, L))
    hs = params.spacing
    edges = np.arange(params.n + 1) * hs
    lo = np.clip(a, edges[:-1], edges[1:])
    hi = np.clip(b, edges[:-1], edges[1:])
    return (hi - lo) / hs


def _slice_take(arr, params, direction, x_perp):
    ax = direction - 1
    if np.isscalar(x_perp):
        x_perp = (int(x_perp),)
    x_perp = tuple(int(k) for k in x_perp)
    if len(x_perp) != params.d - 1:
        raise ValueError(
            "x_perp needs %d perpendicular indices, got %r" % (params.d - 1, x_perp)
        )
    idx = list(x_perp)
    idx.insert(ax, slice(None))
    return arr[tuple(idx)]


def r_term(field, direction, x_perp, interval, table):
    """Slice interval energy R: minus the interval interface measure plus the
    weighted same-slice pair interaction attributed to the interval."""
    p = field.params
    cells = _cells(field, direction, table)
    line = _slice_take(cells["r"], p, direction, x_perp) / p.spacing ** (p.d - 1)
    return float((line * _interval_cell_weights(p, interval)).sum())


def v_term(field, direction, x_perp, interval, table):
    """Cross-slice variation attributed to the interval; always >= 0."""
    p = field.params
    cells = _cells(field, direction, table)
    line = _slice_take(cells["v"], p, direction, x_perp) / p.spacing ** (p.d - 1)
    return float((line * _interval_cell_weights(p, interval)).sum())


def _cube_cell_weights(params, z, l):
    """Per-axis fractional cell coverage of the cube Q_l(z), wrapped."""
    if np.isscalar(z):
        z = (float(z),) * params.d
    z = tuple(float(c) for c in z)
    if len(z) != params.d:
        raise ValueError("cube center needs %d coordinates" % params.d)
    l = float(l)
    if not 0.0 < l <= params.L:
        raise ValueError("cube side must lie in (0, L], got %r" % l)
    hs = params.spacing
    L = params.L
    edges = np.arange(params.n + 1) * hs
    weights = []
    for c in z:
        a = (c - l / 2.0) % L
        w = np.zeros(params.n)
        # the cube edge [a, a+l) may wrap once around the torus
        for (lo, hi) in ((a, min(a + l, L)), (0.0, a + l - L) if a + l > L else (0.0, 0.0)):
            if hi <= lo:
                continue
            w += (np.clip(hi, edges[:-1], edges[1:]) - np.clip(lo, edges[:-1], edges[1:])) / hs
        weights.append(w)
    return weights


def _cube_sum(arr, params, z, l):
    ws = _cube_cell_weights(params, z, l)
    out = arr
    for w in reversed(ws):
        out = out @ w if out.ndim > 1 else float(out @ w)
    return float(out)


def w_term(field, direction, cube, table):
    """Pointwise cross-slice term accumulated over the cube; always >= 0."""
    z, l = cube
    cells = _cells(field, direction, table)
    return _cube_sum(cells["w"], field.params, z, l)


def wcal_term(field, cube, table):
    """Gradient-free double-well mass of the cube, normalized by l^d.

    Carries the sign of (c_tau - 1); runs with c_tau <= 1 are flagged in the
    report instead of asserting nonnegativity.
    """
    z, l = cube
    p = field.params
    cells = _cells(field, 1, table)
    return _cube_sum(cells["wc"], p, z, l) / float(l) ** p.d


def localized_cube_energy(field, z, l, table):
    """Per-direction localized energies Fbar_i(u, Q_l(z)) and their sum.

    Fbar_i = (R + V/2 + W/2) / l^d + Wc / l^d. The V and W halves together
    account exactly for the cross-slice interaction once.
    """
    p = field.params
    l = float(l)
    if not l < p.L:
        raise ValueError("cube side l must be smaller than the period L")
    vol = l**p.d
    fbar = np.zeros(p.d)
    for i in range(1, p.d + 1):
        cells = _cells(field, i, table)
        total = (
            _cube_sum(cells["r"], p, z, l)
            + 0.5 * _cube_sum(cells["v"], p, z, l)
            + 0.5 * _cube_sum(cells["w"], p, z, l)
            + _cube_sum(cells["wc"], p, z, l)
        )
        fbar[i - 1] = total / vol
    return fbar, float(fbar.sum())


@dataclass(frozen=True)
class DecompositionReport:
    """Localized decomposition evaluated on every grid-aligned cube."""

    l: float
    centers: np.ndarray  # (n_cubes, d)
    r_value: np.ndarray  # (d, n_cubes)
    v_value: np.ndarray
    w_value: np.ndarray
    wcal_value: np.ndarray
    fbar_i: np.ndarray
    lower_bound_residual: float
    quadrature_budget: dict


def _box_sums(arr, nl):
    """Rolling wrapped box sum over nl cells per axis, anchored at each cell."""
    out = arr
    for ax in range(arr.ndim):
        acc = np.zeros_like(out)
        for j in range(nl):
            acc += np.roll(out, -j, axis=ax)
        out = acc
    return out


def lower_bound_report(field, l, table):
    """Evaluate every localized cube energy and the global lower-bound residual.

    residual = F(u) - (1/L^d) sum_i Int Fbar_i(u, Q_l(z)) dz, computed with
    cubes anchored at every grid cell so the average over centers is exact.
    The residual is nonnegative up to the recorded quadrature budget.
    """
    p = field.params
    l = float(l)
    if not l < p.L:
        raise ValueError("cube side l must be smaller than the period L")
    nl = l / p.spacing
    if abs(nl - round(nl)) > 1e-9:
        raise ValueError("cube side l must be a whole number of grid cells")
    nl = int(round(nl))
    vol = l**p.d
    n_cubes = p.n**p.d

    r_value = np.zeros((p.d, n_cubes))
    v_value = np.zeros((p.d, n_cubes))
    w_value = np.zeros((p.d, n_cubes))
    wcal_value = np.zeros((p.d, n_cubes))
    fbar_i = np.zeros((p.d, n_cubes))
    budget = None
    for i in range(1, p.d + 1):
        cells = _cells(field, i, table)
        budget = dict(cells["budget"])
        r_value[i - 1] = _box_sums(cells["r"], nl).ravel() / vol
        v_value[i - 1] = _box_sums(cells["v"], nl).ravel() / vol
        w_value[i - 1] = _box_sums(cells["w"], nl).ravel() / vol
        wcal_value[i - 1] = _box_sums(cells["wc"], nl).ravel() / vol
        fbar_i[i - 1] = (
            r_value[i - 1] + 0.5 * v_value[i - 1] + 0.5 * w_value[i - 1] + wcal_value[i - 1]
        )

    anchors = np.stack(
        np.meshgrid(*([np.arange(p.n)] * p.d), indexing="ij"), axis=-1
    ).reshape(-1, p.d)
    centers = (anchors + 0.5 * nl) * p.spacing

    total = total_energy(field, table).total
    rhs = (p.spacing**p.d / p.L**p.d) * float(fbar_i.sum())
    budget["cube_side"] = l
    budget["cube_cells"] = nl
    return DecompositionReport(
        l=l,
        centers=centers,
        r_value=r_value,
        v_value=v_value,
        w_value=w_value,
        wcal_value=wcal_value,
        fbar_i=fbar_i,
        lower_bound_residual=float(total - rhs),
        quadrature_budget=budget,
    )


def report_csv(report):
    lines = ["direction,%s,r,v,w,wcal,fbar" % ",".join(
        "center_%d" % (k + 1) for k in range(report.centers.shape[1])
    )]
    d = report.r_value.shape[0]
    for i in range(d):
        for k in range(report.centers.shape[0]):
            coords = ",".join("%.17g" % c for c in report.centers[k])
            lines.append(
                "%d,%s,%.17g,%.17g,%.17g,%.17g,%.17g"
                % (
                    i + 1,
                    coords,
                    report.r_value[i, k],
                    report.v_value[i, k],
                    report.w_value[i, k],
                    report.wcal_value[i, k],
                    report.fbar_i[i, k],
                )
            )
    return "\n".join(lines) + "\n"


def report_summary(report):
    b = report.quadrature_budget
    lines = [
        "localized decomposition summary",
        "cube side: %.17g (%d cells)" % (report.l, b["cube_cells"]),
        "cubes per direction: %d" % report.centers.shape[0],
        "lower bound residual: %.17g" % report.lower_bound_residual,
        "kernel first moment: continuum %.17g, lattice %.17g (margin %.3g)"
        % (b["c_tau"], b["c_disc"], b["moment_margin"]),
        "periodic images summed: %d (remainder bound %.3g)"
        % (b["tail_images"], b["tail_remainder"]),
        "gradient threshold theta_g: %.3g" % b["theta_g"],
    ]
    if b["c_tau_below_one"]:
        lines.append("flag: c_tau <= 1, gradient-free well term is nonpositive")
    return "\n".join(lines) + "\n"
