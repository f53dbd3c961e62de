"""One-dimensional problem: optimal profile, half-period h*, energy density C*.

Profiles are optimized on [0, h] only and extended to period 2h by the
reflection rule g(h + t) = 1 - g(h - t), which the optimal profiles satisfy;
structural enforcement halves the unknowns and makes the symmetry residual
exactly zero.

For ambient dimension d the nonlocal term uses the discrete perpendicular
marginal of the kernel (the exact collapse of the d-dimensional offset sum
for fields depending on one coordinate), so a 1D profile extended to the
torus has the same energy density reported here.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import zeta as hurwitz_zeta

from .core import Profile1D
from .kernel import scale_length, marginal_coefficient, build_table
from .energy import double_well, double_well_prime


@dataclass(frozen=True)
class OneDimResult:
    h_star: float
    c_star: float
    profile: Profile1D
    search_trace: np.ndarray  # rows (h, best energy at h)
    grid_level: float  # n_per_unit used


_MW_CACHE = {}


def marginal_weights(params, N):
    """Per-class 1D weights what[m]: all kernel images and perpendicular offsets.

    For a field u(x) = g(x_i) on the torus the full nonlocal sum collapses to
    (hs^2/L) * sum_m what[m] * sum_k (g_k - g_{k+m})^2 with L = N*hs, where
    what[m] = hs^(d-1) * sum over axis images j and perp offsets of K.
    """
    key = (params.d, params.p, params.tau, params.n_per_unit, N)
    if key in _MW_CACHE:
        return _MW_CACHE[key]
    hs = 1.0 / params.n_per_unit
    L = N * hs
    a = scale_length(params)
    p = params.p
    m = np.arange(N) * hs
    if params.d == 1:
        # every image summed exactly: two arithmetic progressions of gap L
        w = L ** (-p) * (hurwitz_zeta(p, (m + a) / L) + hurwitz_zeta(p, (L - m + a) / L))
        w[0] -= a ** (-p)
    elif params.d == 2:
        # near images |j| <= J: perp axis summed exactly by zeta; beyond that
        # the discrete perp sum equals the continuum marginal Khat to O((hs/t)^2)
        # relative, and Khat is a power law whose image sum is again a zeta
        J = 32
        w = np.zeros(N)
        for j in range(-J, J + 1):
            t = np.abs(m + j * L)
            w += hs * ((t + a) ** (-p) + 2.0 * hs ** (-p) * hurwitz_zeta(p, (t + a) / hs + 1.0))
        w[0] -= hs * a ** (-p)
        q = p - params.d + 1
        c = marginal_coefficient(params)
        w += c * L ** (-q) * (
            hurwitz_zeta(q, (m + a) / L + J + 1) + hurwitz_zeta(q, (L - m + a) / L + J + 1)
        )
    else:
        raise NotImplementedError("1D reduction implemented for ambient d <= 2")
    out = (w, float(w.sum()), np.fft.rfft(w))
    _MW_CACHE[key] = out
    if len(_MW_CACHE) > 256:
        _MW_CACHE.pop(next(iter(_MW_CACHE)))
    return out


def _full_profile(z):
    return np.concatenate([z, 1.0 - z[::-1]])


def _energy_and_gradient(z, params, c_tau, weights):
    """Energy density F of the reflected profile and its gradient in the free half."""
    g = _full_profile(z)
    N = g.size
    hs = 1.0 / params.n_per_unit
    L = N * hs
    alpha = params.alpha
    w, w_tot, w_hat = weights

    dg = np.roll(g, -1) - g
    m1 = 3.0 * alpha * (dg * dg).sum() / hs + (3.0 / alpha) * double_well(g).sum() * hs

    # circular correlation conv[x] = sum_m w[m] g[x+m] via FFT
    conv = np.fft.irfft(np.fft.rfft(g) * np.conj(w_hat), N)
    mu2 = float((g * g).sum())
    nl = hs * hs * (2.0 * w_tot * mu2 - 2.0 * float((g * conv).sum()))

    c_weight = c_tau - 1.0
    energy = (m1 * c_weight - nl) / L

    grad_m1 = -6.0 * alpha * (dg - np.roll(dg, 1)) / hs + (3.0 / alpha) * double_well_prime(g) * hs
    grad_nl = 4.0 * hs * hs * (w_tot * g - conv)
    grad_full = (grad_m1 * c_weight - grad_nl) / L
    grad_z = grad_full[: z.size] - grad_full[z.size :][::-1]
    return energy, grad_z


def optimal_profile_for_period(params, h, init=None, max_iter=4000, move_tol=1e-11, energy_tol=1e-14,
                               collect_trace=None):
    """Minimize the 1D energy density at fixed half-period h (period 2h).

    Projected gradient descent with a safeguarded Barzilai-Borwein step and
    monotone backtracking; the recorded energy trace is nonincreasing.
    """
    hs = 1.0 / params.n_per_unit
    nh = h / hs
    if abs(nh - round(nh)) > 1e-9:
        raise ValueError("h = %r is not representable on the grid (spacing %r)" % (h, hs))
    nh = int(round(nh))
    if nh < 2:
        raise ValueError("h = %r gives fewer than 2 cells per half-period" % (h,))
    N = 2 * nh
    weights = marginal_weights(params, N)
    c_tau = build_table(params).c_tau

    if init is None:
        x = (np.arange(nh) + 0.5) * hs
        dist = np.minimum(x, h - x)
        z = 1.0 / (1.0 + np.exp(-np.clip(dist / params.alpha, -500, 500)))
    else:
        z = np.clip(np.asarray(init, dtype=np.float64).copy(), 0.0, 1.0)
        if z.size != nh:
            z = np.interp(np.linspace(0, 1, nh), np.linspace(0, 1, z.size), z)

    e, grad = _energy_and_gradient(z, params, c_tau, weights)
    step = 1.0 / max(1e-12, np.abs(grad).max() / 0.1)
    trace = [e]
    z_old, g_old = None, None
    for _ in range(max_iter):
        if z_old is not None:
            s = z - z_old
            y = grad - g_old
            sy = float(s @ y)
            if sy > 1e-30:
                step = float(s @ s) / sy
            step = min(max(step, 1e-7), 1e7)
        z_new = np.clip(z - step * grad, 0.0, 1.0)
        e_new, g_new = _energy_and_gradient(z_new, params, c_tau, weights)
        bt = 0
        while e_new > e and bt < 40:
            step *= 0.5
            z_new = np.clip(z - step * grad, 0.0, 1.0)
            e_new, g_new = _energy_and_gradient(z_new, params, c_tau, weights)
            bt += 1
        if e_new > e:
            break
        move = np.abs(z_new - z).max()
        z_old, g_old = z, grad
        z, grad, e = z_new, g_new, e_new
        trace.append(e)
        if move < move_tol or (len(trace) > 2 and trace[-2] - trace[-1] < energy_tol * max(1.0, abs(e))):
            break

    if collect_trace is not None:
        collect_trace.extend(trace)
    return Profile1D(h=h, samples=z, energy_density=e, symmetry_residual=0.0)


def _snap(h, hs):
    return max(2, int(round(h / hs))) * hs


def optimal_period_search(params, h_min=0.2, h_max=5.0, coarse_points=25):
    """Minimize over the half-period h within [h_min, h_max].

    A warm-started sweep with capped iterations brackets the minimum, then a
    grid-snapped golden-section refinement plus a final local grid scan pins
    h* down to the grid spacing; every kept value is re-solved to full
    convergence. Raises if the minimum sits at a bracket edge.
    """
    if not 0 < h_min < h_max:
        raise ValueError("need 0 < h_min < h_max")
    hs = 1.0 / params.n_per_unit
    full = {}

    def ev(h):
        h = _snap(h, hs)
        if h not in full:
            near = min(full, key=lambda t: abs(t - h)) if full else None
            warm = full[near].samples if near is not None else None
            prof = optimal_profile_for_period(params, h, init=warm)
            cold = optimal_profile_for_period(params, h)
            if cold.energy_density < prof.energy_density:
                prof = cold
            full[h] = prof
        return full[h].energy_density

    # stage 1: sweep with capped iterations to bracket the minimum
    sweep_hs = sorted({_snap(h, hs) for h in np.linspace(h_min, h_max, coarse_points)})
    sweep = []
    warm = None
    for h in sweep_hs:
        prof = optimal_profile_for_period(params, h, init=warm, max_iter=600)
        warm = prof.samples
        sweep.append((h, prof.energy_density))
    energies = [e for _, e in sweep]
    i = int(np.argmin(energies))
    if i == 0 or i == len(sweep) - 1:
        raise ValueError(
            "period search minimum at bracket edge h=%g (energy %g); enlarge [h_min, h_max]"
            % (sweep[i][0], sweep[i][1])
        )
    a, b = sweep[i - 1][0], sweep[i + 1][0]

    # stage 2: golden-section on the bracket, snapped to the grid
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    c = b - invphi * (b - a)
    d_ = a + invphi * (b - a)
    while b - a > 4 * hs:
        if ev(c) < ev(d_):
            b, d_ = d_, c
            c = b - invphi * (b - a)
        else:
            a, c = c, d_
            d_ = a + invphi * (b - a)
    for h in np.arange(_snap(a, hs), _snap(b, hs) + hs / 2, hs):
        if round(h / hs) >= 2:
            ev(h)

    h_star = min(full, key=lambda t: full[t].energy_density)
    prof = full[h_star]
    trace = sorted(set(sweep) | {(h, q.energy_density) for h, q in full.items()})
    return OneDimResult(
        h_star=h_star,
        c_star=prof.energy_density,
        profile=prof,
        search_trace=np.array(trace),
        grid_level=params.n_per_unit,
    )


def search_trace_csv(result):
    lines = ["h,energy"]
    for h, e in result.search_trace:
        lines.append("%.17g,%.17g" % (h, e))
    return "\n".join(lines) + "\n"
