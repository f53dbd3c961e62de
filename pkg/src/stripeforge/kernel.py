"""Interaction kernel, its 1D marginal, moments, and truncation bounds.

The kernel is K(zeta) = (||zeta||_1 + a)^{-p} with a = tau^(1/beta). Its
marginal over the d-1 coordinates orthogonal to an axis reduces, via level
sets of the 1-norm, to

    Khat(t) = c_{d-1} * Int_0^inf s^{d-2} (|t| + s + a)^{-p} ds,
    c_{d-1} = 2^{d-1} / (d-2)!

whose repeated antidifferentiation collapses to the closed form
Khat(t) = 2^{d-1} * Gamma(p-d+1)/Gamma(p) * (|t| + a)^{d-1-p}.
"""

from dataclasses import dataclass
import math

import numpy as np
from scipy import integrate
from scipy.interpolate import PchipInterpolator


def scale_length(params):
    """The regularizing length a = tau^(1/beta) added to the 1-norm."""
    return params.tau ** (1.0 / params.beta)


def kernel_value(zeta, params):
    """K(zeta) = (||zeta||_1 + a)^{-p}; zeta has the d coordinates in its last axis."""
    z = np.asarray(zeta, dtype=np.float64)
    r = np.abs(z) if params.d == 1 and z.ndim == 0 else np.abs(z).sum(axis=-1)
    return kernel_from_norm(r, params)


def kernel_from_norm(r, params):
    """K as a function of the 1-norm radius r = ||zeta||_1."""
    a = scale_length(params)
    return (np.asarray(r, dtype=np.float64) + a) ** (-params.p)


def marginal_coefficient(params):
    """Coefficient of (|t| + a)^{d-1-p} in the marginal Khat."""
    d, p = params.d, params.p
    return 2.0 ** (d - 1) * math.gamma(p - d + 1) / math.gamma(p)


def kernel_marginal(t, params):
    """Khat(t): the kernel integrated over the d-1 orthogonal coordinates."""
    a = scale_length(params)
    c = marginal_coefficient(params)
    return c * (np.abs(np.asarray(t, dtype=np.float64)) + a) ** (params.d - 1 - params.p)


def _first_moment_closed(params, a):
    # C = 2 * Int_0^inf t * c * (t + a)^{d-1-p} dt with q = p - d + 1:
    #   = 2 c a^{2-q} / ((q - 1)(q - 2)), finite because p >= d + 2 gives q >= 3.
    q = params.p - params.d + 1
    c = marginal_coefficient(params)
    return 2.0 * c * a ** (2.0 - q) / ((q - 1.0) * (q - 2.0))


def kernel_moments(params):
    """(c_tau, j_c): first 1-norm moment of the rescaled and unrescaled kernel.

    c_tau = Int_R |t| Khat(t) dt; j_c is the same moment with the scale
    length a set to 1 (the original, unrescaled kernel).
    """
    c_tau = _first_moment_closed(params, scale_length(params))
    j_c = _first_moment_closed(params, 1.0)
    return c_tau, j_c


def c_tau_quadrature(params, a=None):
    """Adaptive-quadrature evaluation of the first marginal moment (oracle path)."""
    if a is None:
        a = scale_length(params)
    c = marginal_coefficient(params)
    expo = params.d - 1 - params.p

    val, err = integrate.quad(
        lambda t: 2.0 * t * c * (t + a) ** expo, 0.0, np.inf, epsabs=0.0, epsrel=1e-12
    )
    if err > max(params.quad_tol, 1e-12 * abs(val)) * 10:
        raise RuntimeError(
            "moment quadrature did not converge: error estimate %g" % err
        )
    return val


def tail_bound(r, params):
    """Closed-form upper bound for Int_{||zeta||_1 > r} K(zeta) dzeta.

    The 1-norm shell measure is (2^d/(d-1)!) s^{d-1} ds and s^{d-1} <=
    (s+a)^{d-1}, so the tail is at most (2^d/(d-1)!) (r+a)^{d-p} / (p-d).
    Exact for d = 1.
    """
    a = scale_length(params)
    d, p = params.d, params.p
    coeff = 2.0**d / math.factorial(d - 1)
    return coeff * (np.asarray(r, dtype=np.float64) + a) ** (d - p) / (p - d)


def default_r_cut(params):
    """Smallest radius with tail_bound(r) < 1e-8 * |c_tau| (inverted in closed form)."""
    if params.r_cut is not None:
        return float(params.r_cut)
    c_tau, _ = kernel_moments(params)
    a = scale_length(params)
    d, p = params.d, params.p
    coeff = 2.0**d / math.factorial(d - 1)
    target = 1e-8 * abs(c_tau)
    r = (target * (p - d) / coeff) ** (1.0 / (d - p)) - a
    return max(float(r), 4.0 * params.spacing)


@dataclass(frozen=True)
class KernelTable:
    """Precomputed marginal table and moments for one parameter set."""

    params: "object"
    r_cut: float
    radial_grid: np.ndarray
    radial_samples: np.ndarray
    tail_coefficient: float
    c_tau: float
    j_c: float
    _interp: "object"

    def marginal(self, t):
        """Khat(t) via the monotone tabulation (closed form outside the table)."""
        t = np.abs(np.asarray(t, dtype=np.float64))
        out = np.empty_like(t, dtype=np.float64)
        inside = t <= self.r_cut
        a = scale_length(self.params)
        out[inside] = np.exp(self._interp(np.log(t[inside] + a)))
        out[~inside] = kernel_marginal(t[~inside], self.params)
        return out

    def marginal_exact(self, t):
        return kernel_marginal(t, self.params)


def build_table(params, n_samples=512):
    """Build the KernelTable: log-spaced Khat tabulation up to r_cut plus moments."""
    r_cut = default_r_cut(params)
    c_tau, j_c = kernel_moments(params)
    a = scale_length(params)
    t_min = min(params.spacing, a) / 16.0
    grid = np.concatenate([[0.0], np.geomspace(t_min, r_cut, n_samples)])
    samples = kernel_marginal(grid, params)
    # in (log(t + a), log Khat) coordinates the tabulated data is monotone and
    # the interpolation error of the power-law marginal is negligible
    interp = PchipInterpolator(np.log(grid + a), np.log(samples), extrapolate=True)
    d, p = params.d, params.p
    tail_coeff = 2.0**d / math.factorial(d - 1) / (p - d)
    return KernelTable(
        params=params,
        r_cut=r_cut,
        radial_grid=grid,
        radial_samples=samples,
        tail_coefficient=tail_coeff,
        c_tau=c_tau,
        j_c=j_c,
        _interp=interp,
    )
