"""Numerical verification suite for the structural inequalities behind the
localized lower bound.

Each check instantiates concrete fields, intervals, or windows that satisfy
the hypotheses of one inequality by construction, evaluates both sides
numerically, and records the worst margin. Hard checks fail the suite when a
margin drops below its tolerance. A few estimates involve constants that are
finite but not given explicitly; those run in monitor mode: the empirical
constant is extracted at two grid resolutions and the suite asserts it stays
within a factor of two under refinement.

Instances whose hypotheses cannot be realized at the configured parameters
(for example when the interface-window scan below finds no admissible window
half-width at the configured tau, or when no sampled window has negative
local energy) are skipped and counted, never silently dropped.

All instance generation is driven by the seeds in the configuration, so two
runs with equal configurations produce identical reports.
"""

from dataclasses import dataclass, field as dc_field, replace
import os
import time

import numpy as np

from .core import Params, ScalarField, make_random_field, make_stripe_field
from . import decompose as dc
from . import energy as en
from . import kernel as kn
from . import onedim as od
from . import stripes as st

DEFAULT_TOLERANCES = {
    "omega_quotient": 1e-11,
    "pair_positivity": 1e-9,
    "damped_pair_positivity": 1e-9,
    "period_shift": 1e-9,
    "disintegration_weight": 1e-5,
    "interface_bump": 1e-6,
    "negative_r_window": 1e-6,
    "v_nonnegative": 1e-9,
    "w_nonnegative": 1e-9,
    "lower_bound_residual": 1e-6,
    "stripe_overlap_quarter": 0.0,
    "stripe_distance_zero": 1e-12,
    "one_dimensional_rv": 1e-9,
    "c0_stability": 2.0,
    "c1_stability": 2.0,
    "rv_margin_stability": 2.0,
}

HARD_CHECKS = (
    "omega_quotient",
    "pair_positivity",
    "damped_pair_positivity",
    "period_shift",
    "disintegration_weight",
    "interface_bump",
    "negative_r_window",
    "v_nonnegative",
    "w_nonnegative",
    "lower_bound_residual",
    "stripe_overlap_quarter",
    "stripe_distance_zero",
    "one_dimensional_rv",
)

MONITOR_CHECKS = ("c0_stability", "c1_stability", "rv_margin_stability")

ALL_CHECKS = HARD_CHECKS + MONITOR_CHECKS


@dataclass(frozen=True)
class VerifyConfig:
    """Parameters of the verification suite.

    upsilon is the interface-measure unit used by the window estimates and
    must lie in (1, 17/16]; delta is the jump defect, sigma the stripe
    distance threshold, nu the small-volume fraction of the cube bound, l the
    cube side for localized checks. seeds drive every random instance;
    sizes_1d / sizes_2d are grid points per axis of the sampled field pools.
    checks selects a subset of check names (None runs everything); entries in
    tolerances override DEFAULT_TOLERANCES per check.
    """

    upsilon: float = 17.0 / 16.0
    delta: float = 0.01
    sigma: float = 0.05
    nu: float = 0.05
    l: float = 0.25
    seeds: tuple = tuple(range(1, 21))
    sizes_1d: tuple = (32, 64)
    sizes_2d: tuple = (16,)
    pairs_per_field: int = 80
    checks: tuple = None
    tolerances: dict = dc_field(default_factory=dict)

    def __post_init__(self):
        if not 1.0 < self.upsilon <= 17.0 / 16.0:
            raise ValueError(
                "upsilon must lie in (1, 17/16], got %r" % (self.upsilon,)
            )
        if not 0.0 < self.delta < 0.5:
            raise ValueError("delta must lie in (0, 0.5), got %r" % (self.delta,))
        if not self.sigma > 0.0:
            raise ValueError("sigma must be positive, got %r" % (self.sigma,))
        if not self.nu > 0.0:
            raise ValueError("nu must be positive, got %r" % (self.nu,))
        if not self.l > 0.0:
            raise ValueError("l must be positive, got %r" % (self.l,))
        if len(self.seeds) == 0:
            raise ValueError("seeds must not be empty")
        if self.pairs_per_field < 1:
            raise ValueError("pairs_per_field must be at least 1")
        unknown = set(self.tolerances) - set(DEFAULT_TOLERANCES)
        if unknown:
            raise ValueError("unknown tolerance keys: %s" % sorted(unknown))
        if self.checks is not None:
            bad = set(self.checks) - set(ALL_CHECKS)
            if bad:
                raise ValueError("unknown check names: %s" % sorted(bad))

    def tol(self, name):
        return float(self.tolerances.get(name, DEFAULT_TOLERANCES[name]))


@dataclass(frozen=True)
class CheckResult:
    name: str
    kind: str  # "hard" or "monitor"
    instances: int
    skipped: int
    failures: int
    worst_margin: float
    wall_time: float
    note: str = ""


@dataclass(frozen=True)
class SuiteReport:
    config: VerifyConfig
    checks: list
    passed: bool
    wall_time: float


def delta_zero(params):
    """Short pair scale delta_0 = max(tau^(1/beta), 2h): the kernel scale
    when the grid resolves it, two cells otherwise."""
    return max(kn.scale_length(params), 2.0 * params.spacing)


def eta_zero(params, upsilon):
    """Window half-width certified by the kernel bracket, or None.

    A half-width eta_0 qualifies when every pair window [s, s+rho] with
    3 eta_0 <= |rho| <= 4 eta_0 containing the doubled window carries enough
    kernel mass:

        2 eta_0 * Int_{3 eta_0 <= |rho| <= 4 eta_0} (|rho| + a)^(-q) drho
            >= 8 upsilon / (upsilon - 1),   q = p - d + 1.

    The qualifying half-widths form an interval; the scan returns a value
    near its upper end (0.8 of the largest qualifying candidate) so that the
    short pair scale delta_0 stays well below eta_0. Returns None when no
    candidate below L/6 qualifies, which happens whenever tau is not small.
    """
    a = kn.scale_length(params)
    q = params.p - params.d + 1
    if q <= 2.0:
        return None

    def bracket(e):
        integral = 4.0 * e * ((3.0 * e + a) ** (1.0 - q) - (4.0 * e + a) ** (1.0 - q)) / (q - 1.0)
        return integral - 8.0 * upsilon / (upsilon - 1.0)

    lo = max(a / 8.0, 2.0 * params.spacing)
    hi = params.L / 6.0
    if lo >= hi:
        return None
    cand = np.geomspace(lo, hi, 512)
    ok = cand[bracket(cand) >= 0.0]
    if len(ok) == 0:
        return None
    e = 0.8 * float(ok[-1])
    if bracket(e) < 0.0:
        e = float(ok[-1])
    return e


# --- instance pools ------------------------------------------------------

def _params_1d(n):
    return Params(d=1, p=3.0, tau=0.5, eps=0.25, L=1.0, n_per_unit=n)


def _params_2d(n):
    return Params(d=2, p=4.0, tau=0.5, eps=0.25, L=1.0, n_per_unit=n)


def _ramp_stripe_1d(n):
    """One-dimensional stripe with linear ramps twice the balanced width.

    The balanced ramp width sqrt(30) alpha equates the gradient and well
    parts of the interface measure; doubling it keeps a safe positive margin
    in the period-shift bound while staying far from the equality case.
    """
    p = Params(d=1, p=3.0, tau=0.5, eps=0.05, L=1.0, n_per_unit=n)
    w = 2.0 * np.sqrt(30.0) * p.alpha
    x = (np.arange(p.n) + 0.5) * p.spacing
    u = np.clip((x - (p.L / 4 - w / 2)) / w, 0, 1) - np.clip(
        (x - (3 * p.L / 4 - w / 2)) / w, 0, 1
    )
    return ScalarField(p, u)


def _pool_1d(config):
    out = []
    for n in config.sizes_1d:
        for seed in config.seeds:
            out.append(make_random_field(_params_1d(n), seed, 0.1))
        out.append(_ramp_stripe_1d(n))
    return out


def _pool_2d(config):
    out = []
    for n in config.sizes_2d:
        for seed in config.seeds:
            out.append(make_random_field(_params_2d(n), seed, 0.12))
    return out


_FINE_CACHE = {}


def _fine_params():
    """Small-tau one-dimensional grid that resolves the kernel scale, the
    interface width, and the certified window half-width simultaneously."""
    return Params(d=1, p=3.0, tau=8e-5, eps=0.05, L=0.002, n_per_unit=1_000_000)


def _fine_setup(upsilon):
    key = round(upsilon, 12)
    if key not in _FINE_CACHE:
        p = _fine_params()
        _FINE_CACHE[key] = (p, kn.build_table(p), eta_zero(p, upsilon))
        if len(_FINE_CACHE) > 4:
            _FINE_CACHE.pop(next(iter(_FINE_CACHE)))
    return _FINE_CACHE[key]


def _rng(config, label):
    return np.random.default_rng([sum(map(ord, label))] + list(config.seeds))


# --- hard checks ----------------------------------------------------------

def _check_omega_quotient(config):
    """(omega(b+t) - omega(b)) / t^2 >= 3 - 2t >= 1 on 0 <= b <= b+t <= 1."""
    t0 = time.time()
    tol = config.tol("omega_quotient")
    bs = np.linspace(0.0, 1.0, 81)
    ts = np.linspace(0.05, 1.0, 96)
    b, t = np.meshgrid(bs, ts, indexing="ij")
    mask = b + t <= 1.0 + 1e-15
    b, t = b[mask], np.minimum(t[mask], 1.0 - b[mask])
    quot = (dc.omega(b + t) - dc.omega(b)) / (t * t)
    m1 = quot - (3.0 - 2.0 * t)
    m2 = (3.0 - 2.0 * t) - 1.0
    worst = float(min(m1.min(), m2.min()))
    failures = int((m1 < -tol).sum() + (m2 < -tol).sum())
    return [CheckResult("omega_quotient", "hard", int(b.size), 0, failures,
                        worst, time.time() - t0)]


def _sample_pairs(field, rng, npairs):
    """Sampled (prefix, cell, offset) triples on grid-aligned slice pairs."""
    p = field.params
    out = []
    for _ in range(npairs):
        if p.d == 1:
            pref = dc.slice_prefix(field, 1)
        else:
            di = int(rng.integers(1, p.d + 1))
            perp = tuple(int(rng.integers(0, p.n)) for _ in range(p.d - 1))
            pref = dc.slice_prefix(field, di, perp)
        k = int(rng.integers(0, p.n))
        m = int(rng.integers(1, p.n))
        out.append((pref, k, m))
    return out


def _check_pair_positivity(config):
    """Interface measure of a window dominates the squared endpoint jump,
    plainly and with the (1 + 2 delta) damping on pairs with a bounded jump."""
    t0 = time.time()
    tol1 = config.tol("pair_positivity")
    tol2 = config.tol("damped_pair_positivity")
    delta = config.delta
    rng = _rng(config, "pair_positivity")
    n1 = s1 = f1 = 0
    n2 = s2 = f2 = 0
    w1 = np.inf
    w2 = np.inf
    for fld in _pool_1d(config) + _pool_2d(config):
        hs = fld.params.spacing
        for pref, k, m in _sample_pairs(fld, rng, config.pairs_per_field):
            u = pref.samples
            s = (k + 0.5) * hs
            mm = dc.interval_mm(pref, s, s + m * hs)
            diff = float(u[(k + m) % len(u)] - u[k])
            marg = mm - diff * diff
            n1 += 1
            w1 = min(w1, marg)
            f1 += marg < -tol1
            if abs(diff) <= 1.0 - delta:
                marg = mm / (1.0 + 2.0 * delta) - diff * diff
                n2 += 1
                w2 = min(w2, marg)
                f2 += marg < -tol2
            else:
                s2 += 1
    dt = time.time() - t0
    return [
        CheckResult("pair_positivity", "hard", n1, s1, int(f1), float(w1), dt / 2),
        CheckResult("damped_pair_positivity", "hard", n2, s2, int(f2), float(w2), dt / 2),
    ]


def _check_period_shift(config):
    """|rho| times the full-period interface measure dominates the integrated
    absolute increment of omega(u) under the shift by rho."""
    t0 = time.time()
    tol = config.tol("period_shift")
    instances = failures = 0
    worst = np.inf
    for fld in _pool_1d(config):
        p = fld.params
        pref = dc.slice_prefix(fld, 1)
        u = pref.samples
        for m in (1, 2, 4, 8, 16, p.n // 4, p.n // 2):
            lhs = m * p.spacing * pref.total
            rhs = float(np.abs(dc.omega(np.roll(u, -m)) - dc.omega(u)).sum() * p.spacing)
            marg = lhs - rhs
            instances += 1
            worst = min(worst, marg)
            failures += marg < -tol
    return [CheckResult("period_shift", "hard", instances, 0, int(failures),
                        float(worst), time.time() - t0)]


def _overlap_measure(s, rho, a, b, L):
    """Length of [a, b] covered by the window [s, s + rho] on the torus."""
    total = np.zeros_like(np.asarray(s, dtype=np.float64))
    for k in (-1.0, 0.0, 1.0):
        lo = np.maximum(a, s + k * L)
        hi = np.minimum(b, s + rho + k * L)
        total += np.maximum(hi - lo, 0.0)
    return total


def _check_disintegration_weight(config):
    """The pair weight |I cap [s, s+rho]| / min(|rho|, L) integrates to |I|
    over a period of window starts, the normalization G(rho) = |rho| min(|rho|, L)."""
    t0 = time.time()
    tol = config.tol("disintegration_weight")
    rng = _rng(config, "disintegration_weight")
    L = 1.0
    instances = failures = 0
    worst = np.inf
    for _ in range(40):
        rho = float(rng.uniform(0.01, 1.0)) * L
        a = float(rng.uniform(0.0, L))
        b = a + float(rng.uniform(0.01, L - a))
        # the overlap is piecewise linear in s: integrate it exactly by the
        # trapezoid rule on its breakpoints
        bps = np.unique(np.concatenate(
            [np.array([a - rho, a, b - rho, b]) % L, [0.0, L]]))
        w = _overlap_measure(bps, rho, a, b, L) / min(rho, L)
        integral = float(np.trapezoid(w, bps)) if hasattr(np, "trapezoid") else float(np.trapz(w, bps))
        err = abs(integral - (b - a))
        marg = -err
        instances += 1
        worst = min(worst, marg)
        failures += err > tol
    return [CheckResult("disintegration_weight", "hard", instances, 0, int(failures),
                        float(worst), time.time() - t0)]


def _ramp_bump_field(params, eta0, k, wcells):
    """k alternating linear ramps packed inside (L/2 - eta0, L/2 + eta0).

    When k is odd the field returns to zero through one extra ramp far from
    the window so that all the window interface mass sits inside it.
    """
    hs = params.spacing
    N = params.n
    abar = params.L / 2.0
    u = np.zeros(N)
    gap = int(round(1.5 * eta0 / (k + 1) / hs)) - wcells
    if gap < 2:
        raise ValueError("window too narrow for %d ramps of %d cells" % (k, wcells))
    pos = int(round((abar - 0.7 * eta0) / hs))
    level = 0.0
    for _ in range(k):
        ramp = np.linspace(0.0, 1.0, wcells + 1)[1:]
        u[pos:pos + wcells] = ramp if level == 0.0 else 1.0 - ramp
        level = 1.0 - level
        u[pos + wcells:pos + wcells + gap] = level
        pos += wcells + gap
    if level == 1.0:
        u[pos:] = 1.0
        far = (pos + int(round(0.3 * N))) % N
        u[far:far + wcells] = np.linspace(1.0, 0.0, wcells + 1)[1:]
        u[far + wcells:] = 0.0
    return ScalarField(params, np.clip(u, 0.0, 1.0))


def _check_interface_bump(config):
    """Windows carrying at least k upsilon of interface measure across the
    doubled window force local energy at least k upsilon on the half window."""
    t0 = time.time()
    tol = config.tol("interface_bump")
    ups = config.upsilon
    p, tab, eta0 = _fine_setup(ups)
    cases = ((1, 8), (2, 8), (3, 8), (1, 12))
    if eta0 is None:
        return [CheckResult("interface_bump", "hard", 0, len(cases), 0, np.inf,
                            time.time() - t0, "no certified window width at this tau")]
    abar = p.L / 2.0
    instances = skipped = failures = 0
    worst = np.inf
    for k, wc in cases:
        fld = _ramp_bump_field(p, eta0, k, wc)
        pref = dc.slice_prefix(fld, 1)
        mwin = dc.interval_mm(pref, abar - eta0, abar + eta0)
        keff = int(np.floor(mwin / ups + 1e-12))
        if keff < 1:
            skipped += 1
            continue
        r = dc.r_term(fld, 1, (), (abar - eta0 / 2, abar + eta0 / 2), tab)
        marg = r - keff * ups
        instances += 1
        worst = min(worst, marg)
        failures += marg < -tol
    return [CheckResult("interface_bump", "hard", instances, skipped, int(failures),
                        float(worst), time.time() - t0,
                        "eta0=%.3g" % eta0)]


def _window_conclusions(field, abar, eta0, delta0, delta, upsilon, r_value):
    """Margins of the structural conclusions at a window with negative local
    energy: bounded energy from below, bounded doubled-window interface
    measure, an almost-unit jump across a short pair, and flat tails on both
    sides of the jump. Returns (worst margin, note)."""
    p = field.params
    hs = p.spacing
    u = field.values
    n = p.n
    margins = {"energy_floor": r_value + upsilon}

    pref = dc.slice_prefix(field, 1)
    margins["measure_cap"] = upsilon - dc.interval_mm(pref, abar - eta0, abar + eta0)

    lo = abar - eta0 / 2.0 - delta0 / 2.0
    hi = abar + eta0 / 2.0 + delta0 / 2.0
    k0 = int(np.floor(lo / hs))
    k1 = int(np.ceil(hi / hs))
    idx = np.arange(k0, k1 + 1)
    seg = u[idx % n]
    mmax = max(1, int(np.floor(delta0 / hs)))
    best = -1.0
    best_pair = (0, 0)
    for m in range(1, mmax + 1):
        dvals = np.abs(seg[m:] - seg[:-m])
        j = int(np.argmax(dvals))
        if dvals[j] > best:
            best = float(dvals[j])
            best_pair = (idx[j], idx[j + m])
    margins["jump"] = best - (1.0 - delta)

    s0 = (best_pair[0] + 0.5) * hs
    t0p = (best_pair[1] + 0.5) * hs
    bound = 0.25 + np.sqrt(2.0 * delta)
    ut0 = float(u[best_pair[1] % n])
    us0 = float(u[best_pair[0] % n])
    kt = np.arange(best_pair[1], int(np.ceil((abar + eta0) / hs)) + 1)
    if len(kt):
        margins["flat_right"] = bound - float(np.abs(u[kt % n] - ut0).max())
    ks = np.arange(int(np.floor((abar - eta0) / hs)), best_pair[0] + 1)
    if len(ks):
        margins["flat_left"] = bound - float(np.abs(u[ks % n] - us0).max())
    worst = min(margins.values())
    note = "s0=%.3g t0=%.3g" % (s0, t0p)
    return worst, note


def _check_negative_r_window(config):
    """On windows where the local slice energy is negative, check the
    conclusions bundle of the negative-window alternative. Windows with
    nonnegative local energy are skipped and counted."""
    t0 = time.time()
    tol = config.tol("negative_r_window")
    ups = config.upsilon
    p, tab, eta0 = _fine_setup(ups)
    if eta0 is None:
        return [CheckResult("negative_r_window", "hard", 0, 1, 0, np.inf,
                            time.time() - t0, "no certified window width at this tau")]
    d0 = delta_zero(p)
    instances = skipped = failures = 0
    worst = np.inf
    rmin = np.inf
    offsets = (0.0, 0.25 * eta0, -0.25 * eta0, 0.25 * p.L)
    for phase in (0.0, 0.1 * p.L):
        fld = en.mollified_stripe_field(p, 1, p.L / 2.0, phase=phase)
        for off in offsets:
            abar = (p.L / 2.0 + phase + off) % p.L
            lo, hi = abar - eta0, abar + eta0
            if lo < 0.0 or hi > p.L:
                continue
            r = dc.r_term(fld, 1, (), (abar - eta0 / 2, abar + eta0 / 2), tab)
            rmin = min(rmin, r)
            if r >= 0.0:
                skipped += 1
                continue
            marg, _ = _window_conclusions(fld, abar, eta0, d0, config.delta, ups, r)
            instances += 1
            worst = min(worst, marg)
            failures += marg < -tol
    note = "min local energy %.3g over candidates" % rmin
    return [CheckResult("negative_r_window", "hard", instances, skipped,
                        int(failures), float(worst), time.time() - t0, note)]


def _check_localized_group(config):
    """Shared pass over the 2d pool: per-cell nonnegativity of the two
    cross-slice terms and the global lower-bound residual."""
    t0 = time.time()
    tol_v = config.tol("v_nonnegative")
    tol_w = config.tol("w_nonnegative")
    tol_r = config.tol("lower_bound_residual")
    nv = nw = nr = 0
    fv = fw = fr = 0
    wv = ww = wr = np.inf
    tables = {}
    for fld in _pool_2d(config):
        p = fld.params
        if p not in tables:
            tables[p] = kn.build_table(p)
        tab = tables[p]
        for i in range(1, p.d + 1):
            cells = dc._cells(fld, i, tab)
            nv += cells["v"].size
            nw += cells["w"].size
            mv = float(cells["v"].min())
            mw = float(cells["w"].min())
            wv = min(wv, mv)
            ww = min(ww, mw)
            fv += int((cells["v"] < -tol_v).sum())
            fw += int((cells["w"] < -tol_w).sum())
        rep = dc.lower_bound_report(fld, config.l, tab)
        nr += 1
        wr = min(wr, rep.lower_bound_residual)
        fr += rep.lower_bound_residual < -tol_r
    dt = (time.time() - t0) / 3.0
    return [
        CheckResult("v_nonnegative", "hard", nv, 0, fv, wv, dt),
        CheckResult("w_nonnegative", "hard", nw, 0, fw, ww, dt),
        CheckResult("lower_bound_residual", "hard", nr, 0, int(fr), float(wr), dt),
    ]


def _stripe_measure(T, h):
    """Measure of [0, T] inside the stripe phase ((t mod 2h) < h), signed."""
    k = np.floor(T / (2.0 * h))
    return h * k + np.minimum(T - 2.0 * h * k, h)


def _check_stripe_overlap_quarter(config):
    """For an exact stripe profile, the quarter-offset square integrated over
    the sliding window boxes exceeds alen^(d+1) / 8 in dimension two."""
    t0 = time.time()
    tol = config.tol("stripe_overlap_quarter")
    rng = _rng(config, "stripe_overlap_quarter")
    instances = failures = 0
    worst = np.inf
    d = 2
    for h in (0.25, 0.5):
        for _ in range(10):
            alen = float(rng.uniform(0.3, 0.9)) * h
            # anchor near a stripe boundary so the jump region is sampled
            b = h * int(rng.integers(1, 4))
            t0p = b - float(rng.uniform(0.05, 0.95)) * alen
            s0 = t0p + float(rng.uniform(-1.0, 1.0)) * alen
            # chi(x) - chi(y) over [s0 - alen, s0] x [t0, t0 + alen]: exact
            # since chi is piecewise constant the double integral splits by
            # the occupied measure of each factor interval
            mx1 = float(_stripe_measure(s0, h) - _stripe_measure(s0 - alen, h))
            my1 = float(_stripe_measure(t0p + alen, h) - _stripe_measure(t0p, h))
            mx0, my0 = alen - mx1, alen - my1
            val = (
                mx1 * my1 * (0.25 - 0.0) ** 2
                + mx0 * my0 * (0.25 - 0.0) ** 2
                + mx1 * my0 * (0.25 - 1.0) ** 2
                + mx0 * my1 * (0.25 + 1.0) ** 2
            )
            val *= (2.0 * alen) ** (d - 1)
            marg = val - alen ** (d + 1) / 8.0
            instances += 1
            worst = min(worst, marg)
            failures += marg < -tol
    return [CheckResult("stripe_overlap_quarter", "hard", instances, 0,
                        int(failures), float(worst), time.time() - t0)]


def _check_stripe_distance_zero(config):
    """Exact stripe fields have zero stripe distance in their own direction
    for every admissible boundary gap, and the right direction is selected."""
    t0 = time.time()
    tol = config.tol("stripe_distance_zero")
    instances = failures = 0
    worst = np.inf
    p = _params_2d(max(config.sizes_2d))
    for i in (1, 2):
        for h in (0.25, 0.125):
            fld = make_stripe_field(p, i, h)
            for z in (0.5, 0.25):
                fit = st.stripe_fit_distance(fld, i, ((z, z), 0.5), h / 2.0)
                marg = tol - fit.distance
                instances += 1
                worst = min(worst, marg)
                failures += fit.distance > tol
                dist, best_i = st.direction_distance(fld, ((z, z), 0.5), h / 2.0)
                instances += 1
                ok = best_i == i and dist <= tol
                failures += not ok
                worst = min(worst, tol - dist if ok else -1.0)
    return [CheckResult("stripe_distance_zero", "hard", instances, 0,
                        int(failures), float(worst), time.time() - t0)]


def _rv_totals(field, direction, tab):
    cells = dc._cells(field, direction, tab)
    ax = direction - 1
    r_slices = cells["r"].sum(axis=ax)
    v_slices = cells["v"].sum(axis=ax)
    return r_slices, v_slices


def _check_one_dimensional_rv(config):
    """One-dimensional fields have vanishing slice energy and cross-slice
    variation in every transverse direction, slice by slice."""
    t0 = time.time()
    tol = config.tol("one_dimensional_rv")
    p = _params_2d(max(config.sizes_2d))
    tab = kn.build_table(p)
    instances = failures = 0
    worst = np.inf
    for i in (1, 2):
        for builder in (lambda: en.mollified_stripe_field(p, i, 0.25),
                        lambda: make_stripe_field(p, i, 0.25)):
            fld = builder()
            j = 3 - i
            r_slices, v_slices = _rv_totals(fld, j, tab)
            for rv, vv in zip(r_slices.ravel(), v_slices.ravel()):
                instances += 1
                worst = min(worst, -abs(float(rv)), -abs(float(vv)))
                failures += abs(float(rv)) > tol or abs(float(vv)) > tol
    return [CheckResult("one_dimensional_rv", "hard", instances, 0,
                        int(failures), float(worst), time.time() - t0)]


# --- monitor checks -------------------------------------------------------

def _stability_result(name, values, config, t0, note_extra=""):
    """Monitor verdict from empirical constants at increasing resolution."""
    cap = config.tol(name)
    floor = 1e-12
    vals = [max(v, floor) for v in values]
    ratio = max(vals[k + 1] / vals[k] for k in range(len(vals) - 1))
    ratio = max(ratio, max(vals[k] / vals[k + 1] for k in range(len(vals) - 1)))
    failures = int(ratio > cap)
    note = "constants %s, ratio %.3g%s" % (
        "/".join("%.4g" % v for v in values), ratio, note_extra)
    return CheckResult(name, "monitor", len(values), 0, failures,
                       float(cap - ratio), time.time() - t0, note)


def _check_c0_stability(config):
    """Empirical constant in the linear-in-length lower bound for slice
    intervals, R(I) >= C* |I| - C0, across grid refinement."""
    t0 = time.time()
    rng = _rng(config, "c0_stability")
    consts = []
    for npu in (32, 64):
        p = Params(d=1, p=3.0, tau=0.5, eps=0.1, L=2.0, n_per_unit=npu)
        res = od.optimal_period_search(p, h_min=2.0, h_max=4.0, coarse_points=7)
        tab = kn.build_table(p)
        fields = [make_random_field(p, s, 0.1) for s in list(config.seeds)[:5]]
        fields.append(en.mollified_stripe_field(p, 1, 1.0))
        c0 = 0.0
        for fld in fields:
            for _ in range(8):
                a = float(rng.uniform(0.0, p.L * 0.75))
                b = a + float(rng.uniform(0.1, p.L - a))
                r = dc.r_term(fld, 1, (), (a, b), tab)
                c0 = max(c0, res.c_star * (b - a) - r)
        consts.append(c0)
    return [_stability_result("c0_stability", consts, config, t0)]


def _check_c1_stability(config):
    """Empirical constant in the small-volume cube bound: fields close to a
    constant phase on the cube have localized energy bounded below."""
    t0 = time.time()
    nu, l, ups = config.nu, config.l, config.upsilon
    consts = []
    for npu in (16, 32):
        p = _params_2d(npu)
        tab = kn.build_table(p)
        a0 = kn.scale_length(p)
        c1 = 0.0
        for frac in (0.5, 1.0):
            x = (np.arange(p.n) + 0.5) * p.spacing
            r2 = (x[:, None] - 0.5) ** 2 + (x[None, :] - 0.5) ** 2
            blob = np.exp(-r2 / (2 * (l / 6) ** 2))
            blob *= frac * nu * l**p.d / (blob.sum() * p.spacing**p.d)
            fld = ScalarField(p, np.clip(1.0 - blob, 0.0, 1.0))
            _, tot = dc.localized_cube_energy(fld, (0.5, 0.5), l, tab)
            c1 = max(c1, -tot * a0 / (ups * nu * p.d))
        consts.append(c1)
    return [_stability_result("c1_stability", consts, config, t0,
                              ", scale a")]


def _check_rv_margin_stability(config):
    """Strict positivity margin of the transverse slice energy on fields that
    are stripes plus a small non-one-dimensional wobble, across refinement."""
    t0 = time.time()
    margins = []
    for npu in (16, 32):
        p = _params_2d(npu)
        tab = kn.build_table(p)
        base = en.mollified_stripe_field(p, 2, 0.25)
        x1 = (np.arange(p.n) + 0.5) * p.spacing
        wob = 0.8 * config.sigma * np.sin(2 * np.pi * x1 / p.L)[:, None]
        fld = ScalarField(p, np.clip(base.values + wob, 0.0, 1.0))
        r_slices, v_slices = _rv_totals(fld, 1, tab)
        margins.append(float(r_slices.sum() + v_slices.sum()))
    res = _stability_result("rv_margin_stability", margins, config, t0)
    if min(margins) <= 0.0:
        res = replace(res, failures=res.failures + 1,
                      note=res.note + ", margin not positive")
    return [res]


_GROUPS = (
    (("omega_quotient",), _check_omega_quotient),
    (("pair_positivity", "damped_pair_positivity"), _check_pair_positivity),
    (("period_shift",), _check_period_shift),
    (("disintegration_weight",), _check_disintegration_weight),
    (("interface_bump",), _check_interface_bump),
    (("negative_r_window",), _check_negative_r_window),
    (("v_nonnegative", "w_nonnegative", "lower_bound_residual"), _check_localized_group),
    (("stripe_overlap_quarter",), _check_stripe_overlap_quarter),
    (("stripe_distance_zero",), _check_stripe_distance_zero),
    (("one_dimensional_rv",), _check_one_dimensional_rv),
    (("c0_stability",), _check_c0_stability),
    (("c1_stability",), _check_c1_stability),
    (("rv_margin_stability",), _check_rv_margin_stability),
)


def run_suite(config=None):
    """Run the configured checks and return a SuiteReport.

    The suite passes when no check records a failure. The worker count comes
    from the STRIPEFORGE_THREADS environment variable (default 1); instance
    generation is seeded, so the report does not depend on scheduling.
    """
    if config is None:
        config = VerifyConfig()
    wanted = set(config.checks) if config.checks is not None else set(ALL_CHECKS)
    groups = [(names, fn) for names, fn in _GROUPS if wanted & set(names)]
    t0 = time.time()
    workers = int(os.environ.get("STRIPEFORGE_THREADS", "1") or "1")
    if workers > 1 and len(groups) > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=workers) as ex:
            outs = list(ex.map(lambda g: g[1](config), groups))
    else:
        outs = [fn(config) for _, fn in groups]
    checks = []
    for (names, _), results in zip(groups, outs):
        checks.extend(r for r in results if r.name in wanted)
    passed = all(c.failures == 0 for c in checks)
    return SuiteReport(config=config, checks=checks, passed=passed,
                       wall_time=time.time() - t0)


def report_text(report):
    lines = ["verification suite: %d checks, %.1fs" % (len(report.checks), report.wall_time)]
    for c in report.checks:
        line = "%-24s %-7s instances=%-6d skipped=%-4d failures=%-4d worst=%.3g  (%.2fs)" % (
            c.name, c.kind, c.instances, c.skipped, c.failures, c.worst_margin, c.wall_time)
        if c.note:
            line += "  [%s]" % c.note
        lines.append(line)
    lines.append("result: %s" % ("PASS" if report.passed else "FAIL"))
    return "\n".join(lines) + "\n"


def report_csv(report):
    lines = ["name,kind,instances,skipped,failures,worst_margin,wall_time"]
    for c in report.checks:
        lines.append("%s,%s,%d,%d,%d,%.17g,%.3f" % (
            c.name, c.kind, c.instances, c.skipped, c.failures,
            c.worst_margin, c.wall_time))
    return "\n".join(lines) + "\n"
