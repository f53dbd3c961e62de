import numpy as np
import pytest

from stripeforge.core import (
    FieldFormatError,
    Params,
    ScalarField,
    load_field,
    make_random_field,
    make_stripe_field,
    save_field,
)


def test_params_derived_quantities():
    p = Params(d=2, p=4.0, tau=0.05, eps=0.05, L=2.0, n_per_unit=16)
    assert p.beta == 1.0
    assert p.alpha == 0.05 * 0.05
    assert p.n == 32
    assert p.spacing == pytest.approx(1.0 / 16.0)


def test_params_validation():
    with pytest.raises(ValueError):
        Params(d=2, p=3.0, tau=1.0, eps=1.0, L=1.0, n_per_unit=8)  # p < d + 2
    with pytest.raises(ValueError):
        Params(d=1, p=3.0, tau=-1.0, eps=1.0, L=1.0, n_per_unit=8)
    with pytest.raises(ValueError):
        Params(d=1, p=3.0, tau=1.0, eps=1.0, L=1.0, n_per_unit=8.5)  # grid does not close


def test_field_range_enforced():
    p = Params(d=1, p=3.0, tau=1.0, eps=1.0, L=1.0, n_per_unit=8)
    with pytest.raises(ValueError):
        ScalarField(p, np.full(8, 1.5))


def test_stripe_single_1d():
    p = Params(d=1, p=3.0, tau=1.0, eps=1.0, L=2.0, n_per_unit=8)
    f = make_stripe_field(p, 1, 1.0)
    assert np.array_equal(f.values, np.r_[np.ones(8), np.zeros(8)])


def test_stripe_constant_perpendicular():
    p = Params(d=2, p=4.0, tau=1.0, eps=1.0, L=4.0, n_per_unit=4)
    f = make_stripe_field(p, 2, 1.0)
    # field constant along the perpendicular axis
    assert np.ptp(f.values, axis=0).max() == 0.0


def test_stripe_half_mass():
    p = Params(d=2, p=4.0, tau=1.0, eps=1.0, L=4.0, n_per_unit=4)
    f = make_stripe_field(p, 1, 1.0)
    assert f.values.sum() == f.values.size / 2


def test_stripe_rejects_incommensurate():
    p = Params(d=1, p=3.0, tau=1.0, eps=1.0, L=2.0, n_per_unit=8)
    with pytest.raises(ValueError):
        make_stripe_field(p, 1, 0.3)


def test_random_field_deterministic_and_bounded():
    p = Params(d=2, p=4.0, tau=1.0, eps=1.0, L=1.0, n_per_unit=16)
    f1 = make_random_field(p, 7, smoothness=0.125)
    f2 = make_random_field(p, 7, smoothness=0.125)
    f3 = make_random_field(p, 8, smoothness=0.125)
    assert np.array_equal(f1.values, f2.values)
    assert not np.array_equal(f1.values, f3.values)
    assert f1.values.min() >= 0.0 and f1.values.max() <= 1.0


@pytest.mark.parametrize("seed", range(100))
def test_roundtrip_binary_many_seeds(tmp_path, seed):
    p = Params(d=1, p=3.0, tau=0.5, eps=0.5, L=1.0, n_per_unit=16)
    f = make_random_field(p, seed, smoothness=0.125)
    path = save_field(f, tmp_path / "f.bin")
    g = load_field(path)
    assert np.array_equal(f.values, g.values)


def test_roundtrip_csv(tmp_path):
    p = Params(d=2, p=4.0, tau=0.5, eps=0.5, L=1.0, n_per_unit=8)
    f = make_random_field(p, 5, smoothness=0.25)
    path = save_field(f, str(tmp_path / "f.csv"))
    g = load_field(path)
    assert np.array_equal(f.values, g.values)
    assert g.params.d == 2 and g.params.L == 1.0


def test_load_rejects_shape_mismatch(tmp_path):
    p = Params(d=1, p=3.0, tau=1.0, eps=1.0, L=1.0, n_per_unit=8)
    f = make_random_field(p, 1, smoothness=0.25)
    path = save_field(f, tmp_path / "f.bin")
    blob = open(path, "rb").read().replace(b"d=1", b"d=2")
    open(path, "wb").write(blob)
    with pytest.raises(FieldFormatError, match="payload"):
        load_field(path)


def test_load_rejects_out_of_range(tmp_path):
    path = tmp_path / "f.csv"
    lines = [
        "stripeforge-field 1",
        "d=1",
        "n=4",
        "L=1",
        "tau=1",
        "eps=1",
        "p=3",
        "format=csv",
        "0.5",
        "1.5",
        "0.5",
        "0.5",
    ]
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(FieldFormatError, match="record 1"):
        load_field(str(path))


def test_load_rejects_missing_header(tmp_path):
    path = tmp_path / "f.csv"
    path.write_text("stripeforge-field 1\nd=1\nformat=csv\n0.5\n")
    with pytest.raises(FieldFormatError):
        load_field(str(path))


def test_profile_full_period_reflection():
    from stripeforge.core import Profile1D

    prof = Profile1D(h=1.0, samples=np.linspace(0, 1, 8), energy_density=0.0, symmetry_residual=0.0)
    g = prof.full_period()
    assert np.allclose(g + g[::-1], 1.0)
