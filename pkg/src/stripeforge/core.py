"""Parameter records, periodic scalar fields, field constructors, field I/O.

All fields live on a uniform tensor grid over the torus [0, L)^d with spacing
1/n_per_unit; samples sit at cell centers and index arithmetic wraps modulo
the grid size in every axis.
"""

from dataclasses import dataclass, field, replace
import io

import numpy as np
from scipy import ndimage

FIELD_MAGIC = "stripeforge-field 1"


@dataclass(frozen=True)
class Params:
    """Physical and numerical parameters of one problem instance.

    d, p, tau, eps, L are the model parameters; beta and alpha are derived.
    n_per_unit is the grid resolution (cells per unit length); r_cut is the
    kernel truncation radius (None = use the kernel module default rule);
    theta_g the gradient-zero threshold (None = 1e-8 / grid spacing);
    quad_tol the quadrature tolerance for kernel moments.
    """

    d: int
    p: float
    tau: float
    eps: float
    L: float
    n_per_unit: float
    r_cut: float | None = None
    theta_g: float | None = None
    quad_tol: float = 1e-10

    def __post_init__(self):
        if self.d < 1 or int(self.d) != self.d:
            raise ValueError("d must be an integer >= 1, got %r" % (self.d,))
        if not self.p >= self.d + 2:
            raise ValueError("p must satisfy p >= d + 2, got p=%r, d=%r" % (self.p, self.d))
        if not self.tau > 0:
            raise ValueError("tau must be positive, got %r" % (self.tau,))
        if not self.eps > 0:
            raise ValueError("eps must be positive, got %r" % (self.eps,))
        if not self.L > 0:
            raise ValueError("L must be positive, got %r" % (self.L,))
        if not self.n_per_unit > 0:
            raise ValueError("n_per_unit must be positive, got %r" % (self.n_per_unit,))
        n = self.n_per_unit * self.L
        if abs(n - round(n)) > 1e-9 * max(1.0, n):
            raise ValueError(
                "n_per_unit * L = %r is not an integer: grid does not close on the torus" % (n,)
            )
        if self.r_cut is not None and not self.r_cut > 0:
            raise ValueError("r_cut must be positive when given, got %r" % (self.r_cut,))

    @property
    def beta(self):
        return self.p - self.d - 1

    @property
    def alpha(self):
        return self.eps * self.tau ** (1.0 / self.beta)

    @property
    def n(self):
        """Grid points per axis."""
        return int(round(self.n_per_unit * self.L))

    @property
    def spacing(self):
        return self.L / self.n

    @property
    def shape(self):
        return (self.n,) * self.d

    @property
    def gradient_threshold(self):
        return self.theta_g if self.theta_g is not None else 1e-8 / self.spacing

    def with_resolution(self, n_per_unit):
        return replace(self, n_per_unit=n_per_unit)


@dataclass(frozen=True)
class ScalarField:
    """Periodic grid function u: [0, L)^d -> [0, 1], immutable after construction."""

    params: Params
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.shape != self.params.shape:
            raise ValueError(
                "field shape %r does not match grid shape %r" % (v.shape, self.params.shape)
            )
        if v.size and (v.min() < 0.0 or v.max() > 1.0):
            bad = np.unravel_index(int(np.argmax((v < 0.0) | (v > 1.0))), v.shape)
            raise ValueError(
                "field values must lie in [0, 1]; first offending sample at index %r is %r"
                % (bad, float(v[bad]))
            )
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def cell_centers(self, axis=0):
        n = self.params.n
        return (np.arange(n) + 0.5) * self.params.spacing


@dataclass(frozen=True)
class Profile1D:
    """Reflection-symmetric periodic 1D profile on [0, h] with period 2h.

    The 2h-periodic extension g satisfies g(h + t) = 1 - g(h - t) up to
    symmetry_residual.
    """

    h: float
    samples: np.ndarray
    energy_density: float
    symmetry_residual: float

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=np.float64)
        if s.min() < 0.0 or s.max() > 1.0:
            raise ValueError("profile samples must lie in [0, 1]")
        s = s.copy()
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    def full_period(self):
        """Samples over one full period [0, 2h), built by the reflection rule."""
        return np.concatenate([self.samples, 1.0 - self.samples[::-1]])


def make_stripe_field(params, direction, half_period, phase=0.0):
    """Indicator field of alternating slabs of width half_period orthogonal to `direction`.

    u(x) = 1 where ((x_direction - phase) mod 2h) < h, else 0.
    half_period must divide L/2 evenly and be commensurate with the grid.
    Axes are numbered 1..d.
    """
    if not 1 <= direction <= params.d:
        raise ValueError("direction must be an axis index in 1..%d" % params.d)
    h = float(half_period)
    if h <= 0:
        raise ValueError("half_period must be positive")
    k = params.L / (2.0 * h)
    if abs(k - round(k)) > 1e-9:
        raise ValueError(
            "half_period %r does not divide L/2 = %r evenly: the stripe pattern "
            "would not close on the torus" % (h, params.L / 2.0)
        )
    cells = h / params.spacing
    if abs(cells - round(cells)) > 1e-9:
        raise ValueError(
            "half_period %r is not a whole number of grid cells (spacing %r)"
            % (h, params.spacing)
        )
    x = (np.arange(params.n) + 0.5) * params.spacing
    line = (((x - phase) % (2.0 * h)) < h).astype(np.float64)
    shape = [1] * params.d
    shape[direction - 1] = params.n
    values = np.broadcast_to(line.reshape(shape), params.shape).copy()
    return ScalarField(params, values)


def make_random_field(params, seed, smoothness):
    """Deterministic random field: periodically smoothed white noise clipped to [0, 1]."""
    if smoothness < params.spacing:
        raise ValueError(
            "smoothness %r is below the grid spacing %r" % (smoothness, params.spacing)
        )
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal(params.shape)
    sigma = smoothness / params.spacing
    smooth = ndimage.gaussian_filter(noise, sigma=sigma, mode="wrap")
    smooth = smooth - smooth.mean()
    scale = np.std(smooth)
    if scale == 0.0:
        smooth = np.zeros_like(smooth)
    else:
        smooth = smooth / (4.0 * scale)
    values = np.clip(0.5 + smooth, 0.0, 1.0)
    return ScalarField(params, values)


def _header_lines(field):
    p = field.params
    return [
        FIELD_MAGIC,
        "d=%d" % p.d,
        "n=%d" % p.n,
        "L=%.17g" % p.L,
        "tau=%.17g" % p.tau,
        "eps=%.17g" % p.eps,
        "p=%.17g" % p.p,
    ]


def save_field(field, path):
    """Write a field to `path`. '.csv' paths get decimal text, others raw binary.

    Both carry the same header (d, N per axis, L, tau, eps, p); the binary
    payload is row-major little-endian float64, the CSV payload one value per
    line with 17 significant digits.
    """
    path = str(path)
    lines = _header_lines(field)
    if path.endswith(".csv"):
        out = io.StringIO()
        for ln in lines:
            out.write(ln + "\n")
        out.write("format=csv\n")
        for v in field.values.ravel(order="C"):
            out.write("%.17g\n" % v)
        with open(path, "w") as fh:
            fh.write(out.getvalue())
    else:
        with open(path, "wb") as fh:
            for ln in lines:
                fh.write((ln + "\n").encode("ascii"))
            fh.write(b"format=binary\n")
            fh.write(field.values.ravel(order="C").astype("<f8").tobytes())
    return path


class FieldFormatError(ValueError):
    pass


def _parse_header(lines):
    if not lines or lines[0] != FIELD_MAGIC:
        raise FieldFormatError("missing or wrong magic line; expected %r" % FIELD_MAGIC)
    header = {}
    for ln in lines[1:]:
        if "=" not in ln:
            raise FieldFormatError("malformed header line %r" % ln)
        key, val = ln.split("=", 1)
        header[key.strip()] = val.strip()
    for key in ("d", "n", "L", "tau", "eps", "p", "format"):
        if key not in header:
            raise FieldFormatError("header is missing key %r" % key)
    return header


def load_field(path, n_per_unit=None, **param_overrides):
    """Read a field written by save_field; the round trip is bit-exact.

    Numerical-control parameters not carried in the file (r_cut, theta_g,
    quad_tol) may be supplied as overrides.
    """
    path = str(path)
    if path.endswith(".csv"):
        with open(path) as fh:
            raw = fh.read().splitlines()
        split = next((i for i, ln in enumerate(raw) if ln.startswith("format=")), None)
        if split is None:
            raise FieldFormatError("header is missing key 'format'")
        header = _parse_header(raw[: split + 1])
        payload_lines = [ln for ln in raw[split + 1 :] if ln.strip()]
        data = np.empty(len(payload_lines))
        for i, ln in enumerate(payload_lines):
            try:
                data[i] = float(ln)
            except ValueError:
                raise FieldFormatError("record %d is not a number: %r" % (i, ln))
    else:
        with open(path, "rb") as fh:
            blob = fh.read()
        lines = []
        pos = 0
        while True:
            nl = blob.find(b"\n", pos)
            if nl < 0:
                raise FieldFormatError("truncated header")
            line = blob[pos:nl].decode("ascii", errors="replace")
            lines.append(line)
            pos = nl + 1
            if line.startswith("format="):
                break
            if len(lines) > 32:
                raise FieldFormatError("header is missing key 'format'")
        header = _parse_header(lines)
        data = np.frombuffer(blob[pos:], dtype="<f8").astype(np.float64)

    d = int(header["d"])
    n = int(header["n"])
    L = float(header["L"])
    if data.size != n**d:
        raise FieldFormatError(
            "payload has %d samples but header d=%d, n=%d implies %d" % (data.size, d, n, n**d)
        )
    bad = np.nonzero((data < 0.0) | (data > 1.0) | ~np.isfinite(data))[0]
    if bad.size:
        raise FieldFormatError(
            "record %d has value %r outside the admissible range [0, 1]"
            % (int(bad[0]), float(data[bad[0]]))
        )
    params = Params(
        d=d,
        p=float(header["p"]),
        tau=float(header["tau"]),
        eps=float(header["eps"]),
        L=L,
        n_per_unit=n / L if n_per_unit is None else n_per_unit,
        **param_overrides,
    )
    if params.n != n:
        raise FieldFormatError("n=%d in header inconsistent with n_per_unit*L" % n)
    return ScalarField(params, data.reshape((n,) * d))
