import numpy as np
import pytest
from scipy import ndimage

from stripeforge.core import Params, ScalarField, make_random_field, make_stripe_field
from stripeforge import energy as en
from stripeforge import kernel as kn
from stripeforge import decompose as dc


def smooth_field(params, seed, sigma_cells=2.0, amp=0.45):
    rng = np.random.default_rng(seed)
    noise = ndimage.gaussian_filter(rng.standard_normal(params.shape), sigma_cells, mode="wrap")
    noise -= noise.mean()
    return ScalarField(params, 0.5 + amp * noise / np.abs(noise).max())


def params_1d(n=32, tau=0.5, eps=0.25, L=1.0, p=3.0):
    return Params(d=1, p=p, tau=tau, eps=eps, L=L, n_per_unit=n)


def params_2d(n=16, tau=0.5, eps=0.25):
    return Params(d=2, p=4.0, tau=tau, eps=eps, L=1.0, n_per_unit=n)


def cell_interval(rng, params):
    """Random cell-aligned interval [a, b] inside [0, L]."""
    ka = int(rng.integers(0, params.n - 1))
    kb = int(rng.integers(ka + 1, params.n + 1))
    return ka * params.spacing, kb * params.spacing


def test_omega_values():
    assert dc.omega(0.0) == 0.0
    assert dc.omega(1.0) == 1.0
    assert dc.omega(0.5) == 0.5


def test_omega_difference_quotient_bound():
    # (omega(b+t) - omega(b)) / t^2 >= 3 - 2t >= 1 for 0 <= b <= b+t <= 1
    for t in np.linspace(1e-3, 1.0, 41):
        bs = np.linspace(0.0, 1.0 - t, 37)
        quot = (dc.omega(bs + t) - dc.omega(bs)) / t**2
        assert np.all(quot >= 3.0 - 2.0 * t - 1e-12)
        assert np.all(quot >= 1.0 - 1e-12)


def test_slice_prefix_monotone_and_totals():
    p = params_2d()
    f = smooth_field(p, 0)
    total = 0.0
    for i in (1, 2):
        for k in range(p.n):
            pref = dc.slice_prefix(f, i, (k,))
            assert np.all(np.diff(pref.cum_mm) >= 0.0)
            total += pref.total * p.spacing ** (p.d - 1)
    # independent recomputation of the interface density on active cells
    v = f.values
    hs = p.spacing
    g1 = sum(np.abs(np.roll(v, -1, axis=ax) - v) / hs for ax in range(p.d))
    active = g1 >= p.gradient_threshold
    expected = float(
        ((3.0 * p.alpha * g1**2 + (3.0 / p.alpha) * en.double_well(v)) * active).sum()
    ) * hs**p.d
    assert total == pytest.approx(expected, rel=1e-12)


def test_slice_prefix_validation():
    p = params_2d(n=8)
    f = smooth_field(p, 1)
    with pytest.raises(ValueError):
        dc.slice_prefix(f, 0, (1,))
    with pytest.raises(ValueError):
        dc.slice_prefix(f, 1, ())


def test_interval_mm_additivity_and_constant():
    p = params_1d()
    f = smooth_field(p, 3)
    pref = dc.slice_prefix(f, 1, ())
    a, b, c = 0.13, 0.52, 0.97
    lhs = dc.interval_mm(pref, a, c)
    rhs = dc.interval_mm(pref, a, b) + dc.interval_mm(pref, b, c)
    assert lhs == pytest.approx(rhs, abs=1e-14)
    # wrap-around additivity across the period
    full = dc.interval_mm(pref, 0.0, 2.0)
    assert full == pytest.approx(2.0 * pref.total, rel=1e-14)
    const = ScalarField(p, np.full(p.n, 0.3))
    pref0 = dc.slice_prefix(const, 1, ())
    assert dc.interval_mm(pref0, 0.0, 1.0) == 0.0


def test_interval_mm_matches_direct_quadrature():
    p = params_1d()
    f = smooth_field(p, 4)
    pref = dc.slice_prefix(f, 1, ())
    hs = p.spacing
    v = f.values
    # independent piecewise-constant cell densities for d = 1
    g = np.abs(np.roll(v, -1) - v) / hs
    dens = 3.0 * p.alpha * g * g + (3.0 / p.alpha) * en.double_well(v)
    dens[g < p.gradient_threshold] = 0.0
    rng = np.random.default_rng(0)
    for _ in range(20):
        s = float(rng.uniform(0, 1))
        t = s + float(rng.uniform(0, 3))
        direct = 0.0
        for k in range(int(np.floor(s / hs)), int(np.ceil(t / hs)) + 1):
            lo = max(s, k * hs)
            hi = min(t, (k + 1) * hs)
            if hi > lo:
                direct += dens[k % p.n] * (hi - lo)
        assert dc.interval_mm(pref, s, t) == pytest.approx(direct, rel=1e-12, abs=1e-14)


def _overlap_measure(interval, s, rho, L):
    """Literal torus measure of positions in `interval` covered by the window
    from s to s+rho (capped at one period), by explicit interval clipping."""
    lo, hi = (s + rho, s) if rho < 0 else (s, s + rho)
    if hi - lo >= L:
        return interval[1] - interval[0]
    pieces = []
    start = lo % L
    length = hi - lo
    if start + length <= L:
        pieces.append((start, start + length))
    else:
        pieces.append((start, L))
        pieces.append((0.0, start + length - L))
    out = 0.0
    for a0, b0 in pieces:
        out += max(0.0, min(b0, interval[1]) - max(a0, interval[0]))
    return out


def test_pair_weight_integrates_to_g():
    # integrating the attribution weight over all of [0, L) recovers
    # G(rho) / |rho| = min(|rho|, L) for every offset
    L = 1.0
    for rho in (0.2, -0.35, 0.8, 1.7, -2.3):
        got = _overlap_measure((0.0, L), 0.41, rho, L)
        assert got == pytest.approx(min(abs(rho), L), abs=1e-14)


def _oracle_r_1d(field, interval, images=dc._TAIL_IMAGES):
    """Literal disintegration of the slice interaction for d = 1.

    The pair attribution measure is computed by explicit interval clipping for
    every lattice offset; periodic images are summed directly term by term.
    """
    p = field.params
    N, hs, L = p.n, p.spacing, p.L
    a_len = kn.scale_length(p)
    pref = dc.slice_prefix(field, 1, ())
    u = pref.samples
    centers = (np.arange(N) + 0.5) * hs
    acc = 0.0
    isz = interval[1] - interval[0]
    j = np.arange(1, images + 1)
    for m in range(1, N):
        for sign in (1, -1):
            rho0 = sign * m * hs
            diff2 = (np.roll(u, -sign * m) - u) ** 2
            win0 = np.array([dc.interval_mm(pref, s, s + rho0) for s in centers])
            q0 = win0 - diff2
            khat0 = (m * hs + a_len) ** (-p.p)
            for k, s in enumerate(centers):
                w = _overlap_measure(interval, s, rho0, L) / min(abs(rho0), L)
                acc += w * q0[k] * khat0
            kj = (m * hs + j * L + a_len) ** (-p.p)
            acc += (isz / L) * float((kj * (j * pref.total * N + q0.sum())).sum())
    # whole-period offsets carry no pair difference, only interface mass
    kj0 = (j * L + a_len) ** (-p.p)
    acc += (isz / L) * 2.0 * float((kj0 * j).sum()) * pref.total * N
    return -dc.interval_mm(pref, interval[0], interval[1]) + hs * hs * acc


def test_r_term_zero_field():
    p = params_1d()
    tab = kn.build_table(p)
    f = ScalarField(p, np.zeros(p.n))
    assert dc.r_term(f, 1, (), (0.0, 0.5), tab) == 0.0


def test_r_term_lower_bound():
    p = params_2d()
    tab = kn.build_table(p)
    f = smooth_field(p, 7)
    rng = np.random.default_rng(1)
    for _ in range(10):
        k = int(rng.integers(0, p.n))
        a0, b0 = cell_interval(rng, p)
        pref = dc.slice_prefix(f, 1, (k,))
        r = dc.r_term(f, 1, (k,), (a0, b0), tab)
        assert r >= -dc.interval_mm(pref, a0, b0) - 1e-10


def test_r_term_rejects_bad_interval():
    p = params_1d()
    tab = kn.build_table(p)
    f = smooth_field(p, 0)
    with pytest.raises(ValueError):
        dc.r_term(f, 1, (), (0.5, 1.5), tab)


def test_r_term_matches_literal_disintegration():
    # acceptance: reduced-weight route vs literal interval-clipped measures
    p = params_1d(n=32)
    tab = kn.build_table(p)
    rng = np.random.default_rng(5)
    worst = 0.0
    for trial in range(20):
        f = smooth_field(p, 100 + trial)
        interval = cell_interval(rng, p)
        got = dc.r_term(f, 1, (), interval, tab)
        want = _oracle_r_1d(f, interval)
        worst = max(worst, abs(got - want) / max(1.0, abs(want)))
    assert worst < 1e-8


def test_v_term_zero_for_one_dimensional_field():
    p = params_2d()
    tab = kn.build_table(p)
    f = make_stripe_field(p, 1, 0.25)
    assert dc.v_term(f, 1, (3,), (0.0, 1.0), tab) == pytest.approx(0.0, abs=1e-14)
    assert dc.v_term(f, 2, (3,), (0.0, 1.0), tab) == pytest.approx(0.0, abs=1e-14)


def test_v_term_nonnegative():
    p = params_2d()
    tab = kn.build_table(p)
    f = smooth_field(p, 11)
    for k in range(0, p.n, 5):
        assert dc.v_term(f, 1, (k,), (0.1875, 0.6875), tab) >= -1e-12


def _perp_tail(A, L, pe, M):
    """sum_{i > M} (A + i L)^-pe approximated by the midpoint integral rule."""
    return (A + (M + 0.5) * L) ** (1.0 - pe) / ((pe - 1.0) * L)


def _oracle_v_2d(field, direction, x_perp, interval, jmax=512, imax=2000):
    """Brute-force cross-slice integral with literal attribution weights."""
    p = field.params
    N, hs, L = p.n, p.spacing, p.L
    a_len = kn.scale_length(p)
    ax = direction - 1
    pax = 1 - ax
    v = field.values
    centers = (np.arange(N) + 0.5) * hs
    i2 = np.arange(-imax, imax + 1)
    jj = np.arange(1, jmax + 1)
    acc = 0.0
    isz = interval[1] - interval[0]
    for m in range(1, N):
        for sign in (1, -1):
            A = np.roll(v, -sign * m, axis=ax) - v
            line = np.take(A, x_perp, axis=pax)  # slice increments a(s)
            wts = np.array(
                [_overlap_measure(interval, s, sign * m * hs, L) for s in centers]
            ) / (m * hs)
            for m2 in range(N):
                other = np.take(A, (x_perp + m2) % N, axis=pax)
                fvals = (line - other) ** 2  # per s
                ydist = np.abs(m2 * hs + i2 * L)
                ap = m * hs + m2 * hs + a_len
                am = m * hs - m2 * hs + a_len
                # in-period slice offset, literal weight per s
                k0 = float(((m * hs + ydist + a_len) ** (-p.p)).sum())
                k0 += _perp_tail(ap, L, p.p, imax) + _perp_tail(am, L, p.p, imax)
                acc += k0 * float((wts * fvals).sum())
                # periodic images in the slice direction, uniform weight
                kt = float(
                    ((m * hs + jj[:, None] * L + ydist[None, :] + a_len) ** (-p.p)).sum()
                )
                kt += float(
                    _perp_tail(ap + jj * L, L, p.p, imax).sum()
                    + _perp_tail(am + jj * L, L, p.p, imax).sum()
                )
                acc += (isz / L) * kt * float(fvals.sum())
    return acc * hs**3 / (2.0 * p.d)


def test_v_term_matches_brute_force():
    p = params_2d(n=8)
    tab = kn.build_table(p)
    base = make_stripe_field(p, 1, 0.25).values
    sheared = np.stack([np.roll(base[:, k], k) for k in range(p.n)], axis=1)
    f = ScalarField(p, sheared)
    got = dc.v_term(f, 1, (2,), (0.125, 0.625), tab)
    want = _oracle_v_2d(f, 1, 2, (0.125, 0.625))
    assert got > 0.0
    assert got == pytest.approx(want, rel=1e-10)


def test_w_term_zero_for_one_dimensional_field():
    p = params_2d()
    tab = kn.build_table(p)
    f = make_stripe_field(p, 2, 0.25)
    for i in (1, 2):
        assert dc.w_term(f, i, ((0.5, 0.5), 0.25), tab) == pytest.approx(0.0, abs=1e-14)


def test_w_term_matches_literal_roll_loop():
    p = params_2d(n=8)
    tab = kn.build_table(p)
    base = make_stripe_field(p, 1, 0.25).values.copy()
    cb = np.indices(p.shape).sum(axis=0) % 2
    v = np.clip(base * 0.9 + 0.05 + 0.08 * cb, 0.0, 1.0)
    f = ScalarField(p, v)
    w = en.offset_weights(p).w
    N, hs = p.n, p.spacing
    want = np.zeros(p.shape)
    for mi in range(1, N):
        A = np.roll(v, -mi, axis=0) - v
        for mp in range(N):
            want += w[mi, mp] * (A - np.roll(A, -mp, axis=1)) ** 2
    want *= hs ** (2 * p.d) / (2.0 * p.d)
    cells = dc._cells(f, 1, tab)["w"]
    assert np.allclose(cells, want, atol=1e-13, rtol=0)
    got = dc.w_term(f, 1, ((0.25, 0.25), 0.5), tab)
    ws = dc._cube_cell_weights(p, (0.25, 0.25), 0.5)
    ref = float(ws[0] @ want @ ws[1])
    assert got == pytest.approx(ref, rel=1e-12)


def test_wcal_values():
    p0 = params_1d(tau=1.0, eps=1.0, p=3.0)
    tab0 = kn.build_table(p0)
    zero = ScalarField(p0, np.zeros(p0.n))
    assert dc.wcal_term(zero, (0.5, 0.5), tab0) == 0.0
    half = ScalarField(p0, np.full(p0.n, 0.5))
    # p = 3, tau = 1 has c_tau = 1, so the prefactor vanishes
    assert dc.wcal_term(half, (0.5, 0.5), tab0) == pytest.approx(0.0, abs=1e-12)
    p1 = params_1d(tau=1.0, eps=1.0, p=4.0)
    tab1 = kn.build_table(p1)
    half1 = ScalarField(p1, np.full(p1.n, 0.5))
    # c_tau = 1/3: value is 3 (1/3 - 1) W(1/2) / alpha = -1 / (8 alpha)
    want = -1.0 / (8.0 * p1.alpha)
    assert dc.wcal_term(half1, (0.5, 0.5), tab1) == pytest.approx(want, rel=1e-9)


def test_localized_cube_energy_zero_field():
    p = params_2d()
    tab = kn.build_table(p)
    zero = ScalarField(p, np.zeros(p.shape))
    fbar, total = dc.localized_cube_energy(zero, (0.5, 0.5), 0.25, tab)
    assert np.all(fbar == 0.0) and total == 0.0


def test_localized_cube_energy_parts():
    # reassemble Fbar_i for a non-wrapping cube from the term APIs
    p = params_2d()
    tab = kn.build_table(p)
    f = smooth_field(p, 13)
    z, l = (0.5, 0.5), 0.25
    fbar, total = dc.localized_cube_energy(f, z, l, tab)
    ws = dc._cube_cell_weights(p, z, l)
    scale = p.spacing ** (p.d - 1)
    for i in (1, 2):
        ax = i - 1
        interval = (z[ax] - l / 2.0, z[ax] + l / 2.0)
        r_int = v_int = 0.0
        for k in range(p.n):
            wk = ws[1 - ax][k]
            if wk == 0.0:
                continue
            r_int += wk * dc.r_term(f, i, (k,), interval, tab)
            v_int += wk * dc.v_term(f, i, (k,), interval, tab)
        got = (
            (r_int + 0.5 * v_int) * scale + 0.5 * dc.w_term(f, i, (z, l), tab)
        ) / l**p.d + dc.wcal_term(f, (z, l), tab)
        assert fbar[ax] == pytest.approx(got, rel=1e-10)
    assert total == pytest.approx(float(fbar.sum()), abs=1e-15)


def test_lower_bound_residual_zero_field():
    p = params_2d()
    tab = kn.build_table(p)
    zero = ScalarField(p, np.zeros(p.shape))
    rep = dc.lower_bound_report(zero, 0.25, tab)
    assert rep.lower_bound_residual == 0.0


def test_lower_bound_random_fields():
    p = params_2d()
    tab = kn.build_table(p)
    for seed in range(10):
        f = make_random_field(p, seed, 0.12)
        rep = dc.lower_bound_report(f, 0.25, tab)
        assert rep.lower_bound_residual >= -1e-6
        assert rep.v_value.min() >= -1e-12
        assert rep.w_value.min() >= -1e-12
        assert rep.wcal_value.min() >= 0.0  # c_tau > 1 here


def test_lower_bound_residual_matches_moment_margin():
    # the grid decomposition is exact apart from the kernel first-moment gap
    p = params_2d()
    tab = kn.build_table(p)
    f = make_random_field(p, 3, 0.12)
    rep = dc.lower_bound_report(f, 0.25, tab)
    cells, _ = dc._direction_interface_cells(f)
    pred = rep.quadrature_budget["moment_margin"] * float(cells.sum()) / p.L**p.d
    assert rep.lower_bound_residual == pytest.approx(pred, rel=1e-3)
    assert rep.lower_bound_residual >= 0.0


def test_lower_bound_one_dimensional_near_tight():
    p = params_1d(n=64, tau=0.5, eps=0.1, L=2.0)
    tab = kn.build_table(p)
    f = make_stripe_field(p, 1, 0.5)
    rep = dc.lower_bound_report(f, 0.5, tab)
    total = en.total_energy(f, tab).total
    assert rep.lower_bound_residual >= 0.0
    assert rep.lower_bound_residual <= 0.05 * max(1.0, abs(total))


def test_report_rejects_bad_cube_side():
    p = params_2d(n=8)
    tab = kn.build_table(p)
    f = make_random_field(p, 0, 0.2)
    with pytest.raises(ValueError):
        dc.lower_bound_report(f, 1.5, tab)
    with pytest.raises(ValueError):
        dc.lower_bound_report(f, 0.3, tab)


def test_report_csv_and_summary():
    p = params_2d(n=8)
    tab = kn.build_table(p)
    f = make_random_field(p, 0, 0.2)
    rep = dc.lower_bound_report(f, 0.25, tab)
    csv = dc.report_csv(rep)
    lines = csv.strip().split("\n")
    assert lines[0] == "direction,center_1,center_2,r,v,w,wcal,fbar"
    assert len(lines) == 1 + 2 * p.n**2
    summary = dc.report_summary(rep)
    assert "lower bound residual" in summary
    assert str(rep.quadrature_budget["tail_images"]) in summary
