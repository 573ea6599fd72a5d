import math
from fractions import Fraction

import numpy as np
import pytest

from invdim import systems
from invdim.errors import InvalidInputError, SamplerError, UnsupportedOperationError
from invdim.systems import REGISTRY, escaped, invariance_defect, make_system

from helpers import FD_STEP, domain_points
from oracles import cantor_intervals, finite_difference_jacobian, max_gap_to_intervals, ternary_digits

INVERTIBLE = [name for name in REGISTRY if make_system(name).has_inverse]


@pytest.mark.parametrize(
    "name, x, expected",
    [
        ("cat_map", [0.1, 0.2], [0.4, 0.3]),
        ("cat_map", [0.6, 0.7], [0.9, 0.3]),
        ("toral_endomorphism", [0.4, 0.5], [0.8, 0.5]),
        ("circle_expanding", [0.5], [0.5]),
        ("circle_expanding", [0.4], [0.2]),
        ("cookie_cutter", [0.1], [0.3]),
        ("cookie_cutter", [0.9], [0.7]),
        ("linear_horseshoe", [0.5, 0.1], [0.1, 0.4]),
        ("linear_horseshoe", [0.5, 0.9], [0.9, 0.4]),
        ("henon", [0.0, 0.0], [1.0, 0.0]),
        ("henon", [1.0, 0.5], [0.1, 0.3]),
        ("contracting_affine", [0.4, -0.2], [0.2, -0.1]),
    ],
)
def test_evaluate_examples(name, x, expected):
    np.testing.assert_allclose(make_system(name).evaluate(x), expected, atol=1e-14)


@pytest.mark.parametrize("name, x", [("cookie_cutter", [0.5]), ("linear_horseshoe", [0.5, 0.5])])
def test_points_in_gap_escape(name, x):
    assert escaped(make_system(name).evaluate(x))


def test_escape_propagates():
    sys_ = make_system("cookie_cutter")
    assert escaped(sys_.evaluate(sys_.evaluate([0.5]))).all()


def test_batched_evaluate_matches_single_points():
    sys_ = make_system("henon")
    pts = domain_points(sys_, 20, seed=3)
    batch = sys_.evaluate(pts)
    for p, row in zip(pts, batch):
        np.testing.assert_array_equal(sys_.evaluate(p), row)


def test_torus_images_are_wrapped():
    sys_ = make_system("toral_endomorphism")
    img = sys_.evaluate(np.random.default_rng(0).random((1000, 2)))
    assert np.all((img >= 0) & (img < 1))


@pytest.mark.parametrize("name", sorted(REGISTRY))
def test_jacobian_matches_finite_differences(name):
    sys_ = make_system(name)
    wrap = sys_.ambient.is_torus
    for x in domain_points(sys_, 100, seed=11):
        exact = sys_.jacobian(x)
        fd = finite_difference_jacobian(sys_.evaluate, x, FD_STEP, wrap=wrap)
        np.testing.assert_allclose(fd, exact, rtol=1e-4, atol=1e-4 * np.abs(exact).max())


@pytest.mark.parametrize("name", INVERTIBLE)
def test_inverse_jacobian_matches_finite_differences(name):
    sys_ = make_system(name)
    for x in domain_points(sys_, 100, seed=12, inverse=True):
        exact = sys_.inverse_jacobian(x)
        fd = finite_difference_jacobian(sys_.inverse_evaluate, x, FD_STEP, wrap=sys_.ambient.is_torus)
        np.testing.assert_allclose(fd, exact, rtol=1e-4, atol=1e-4 * np.abs(exact).max())


@pytest.mark.parametrize("name", INVERTIBLE)
def test_inverse_round_trip(name):
    sys_ = make_system(name)
    x = domain_points(sys_, 200, seed=5)
    back = sys_.inverse_evaluate(sys_.evaluate(x))
    np.testing.assert_allclose(sys_.ambient.difference(back, x), 0.0, atol=1e-12)


@pytest.mark.parametrize("name", INVERTIBLE)
def test_inverse_jacobian_inverts_jacobian_along_the_map(name):
    sys_ = make_system(name)
    x = domain_points(sys_, 50, seed=6)
    prod = sys_.inverse_jacobian(sys_.evaluate(x)) @ sys_.jacobian(x)
    np.testing.assert_allclose(prod, np.broadcast_to(np.eye(2), prod.shape), atol=1e-12)


@pytest.mark.parametrize("name", ["circle_expanding", "cookie_cutter"])
def test_non_injective_maps_have_no_inverse(name):
    sys_ = make_system(name)
    assert not sys_.has_inverse and not sys_.is_diffeomorphism
    with pytest.raises(UnsupportedOperationError):
        sys_.inverse_evaluate([0.1])
    with pytest.raises(UnsupportedOperationError):
        sys_.inverse_jacobian([0.1])


def test_toral_endomorphism_invertible_only_with_unit_determinant():
    assert not make_system("toral_endomorphism", p=2, q=3).has_inverse
    unit = make_system("toral_endomorphism", p=1, q=1)
    assert unit.has_inverse and unit.degree == 1


def test_cookie_cutter_sample_has_only_ternary_digits_0_and_2():
    cloud = make_system("cookie_cutter").sample(2000, seed=4)
    for x in cloud.points[:, 0]:
        assert set(ternary_digits(x, 20)) <= {0, 2}


def test_horseshoe_sample_lies_in_product_cantor_set():
    # lam = 1/5, mu = 4: x in the middle-3/5 Cantor set, y in the middle-1/2 one
    pts = make_system("linear_horseshoe").sample(5000, seed=2).points
    assert max_gap_to_intervals(pts[:, 0], cantor_intervals(12, Fraction(1, 5))) < 1e-12
    assert max_gap_to_intervals(pts[:, 1], cantor_intervals(12, Fraction(1, 4))) < 1e-12
    # the oracle does see a point in the middle gap
    assert max_gap_to_intervals([0.5], cantor_intervals(12, Fraction(1, 5))) == pytest.approx(0.3)


def test_horseshoe_orbits_stay_in_the_strips():
    sys_ = make_system("linear_horseshoe")
    cloud = sys_.sample(5000, seed=2)
    orbit = sys_.forward_orbit(cloud, 32)
    assert not escaped(orbit).any()
    np.testing.assert_array_equal(orbit[0], cloud.points)


@pytest.mark.parametrize("name", ["linear_horseshoe", "cookie_cutter", "circle_expanding"])
def test_symbolic_orbit_matches_numeric_iteration_initially(name):
    sys_ = make_system(name)
    cloud = sys_.sample(500, seed=9)
    orbit = sys_.forward_orbit(cloud, 8)
    x = cloud.points
    for k in range(1, 9):
        x = sys_.evaluate(x)
        # numeric iteration loses a factor of the expansion rate per step
        np.testing.assert_allclose(sys_.ambient.difference(orbit[k], x), 0.0, atol=1e-9)


@pytest.mark.parametrize(
    "name, inverse, tol",
    [
        ("cookie_cutter", False, 5e-4),
        ("circle_expanding", False, 5e-4),
        ("linear_horseshoe", False, 0.02),
        ("linear_horseshoe", True, 0.02),
        ("henon", False, 0.02),
        ("cat_map", False, 0.02),
        ("cat_map", True, 0.02),
    ],
)
def test_invariance_defect_small(name, inverse, tol):
    sys_ = make_system(name)
    cloud = sys_.sample(20000, seed=1)
    assert invariance_defect(sys_, cloud, inverse=inverse) < tol


def test_henon_sample_is_bounded_and_not_escaped():
    cloud = make_system("henon").sample(10000, seed=0)
    assert np.all(np.abs(cloud.points[:, 0]) < 1.5) and np.all(np.abs(cloud.points[:, 1]) < 0.5)
    assert cloud.meta["method"] == "forward-iteration"


def test_contracting_affine_collapses_to_fixed_point():
    sys_ = make_system("contracting_affine", c1=0.5, c2=-0.25)
    cloud = sys_.sample(1000, seed=0)
    np.testing.assert_allclose(cloud.points, np.broadcast_to([1.0, -0.5], cloud.points.shape), atol=1e-12)


def test_contracting_affine_rejects_expanding_matrix():
    with pytest.raises(InvalidInputError):
        make_system("contracting_affine", a11=1.5)


@pytest.mark.parametrize("name", sorted(REGISTRY))
def test_sampling_is_deterministic(name, monkeypatch):
    sys_ = make_system(name)
    first = sys_.sample(3000, seed=42).points
    monkeypatch.setenv("INVDIM_THREADS", "8")
    np.testing.assert_array_equal(sys_.sample(3000, seed=42).points, first)


@pytest.mark.parametrize("name", ["henon", "linear_horseshoe", "cookie_cutter"])
def test_different_seeds_give_different_samples(name):
    sys_ = make_system(name)
    assert not np.array_equal(sys_.sample(500, seed=1).points, sys_.sample(500, seed=2).points)


def test_grid_sampler_fills_torus():
    cloud = make_system("cat_map").sample(10000, seed=0)
    assert len(cloud) == 10000
    np.testing.assert_allclose(np.sort(np.unique(cloud.points[:, 0])), (np.arange(100) + 0.5) / 100)
    assert cloud.meta["resolution"] == pytest.approx(math.sqrt(2) / 200)


def test_sample_meta_records_provenance():
    meta = make_system("linear_horseshoe").sample(1000, seed=7).meta
    assert meta["seed"] == 7 and meta["budget"] == 1000 and meta["method"] == "symbolic"
    assert meta["resolution"] > 0


def test_escaping_sampler_raises_with_escape_point():
    with pytest.raises(SamplerError) as info:
        make_system("henon", a=5.0).sample(100, seed=0, transient=10, orbits=2)
    assert info.value.escape_point is not None


@pytest.mark.parametrize("budget", [0, -5, 2.5])
def test_bad_budget_rejected(budget):
    with pytest.raises(InvalidInputError):
        make_system("cookie_cutter").sample(budget, seed=0)


@pytest.mark.parametrize(
    "name, params",
    [
        ("no_such_map", {}),
        ("linear_horseshoe", {"lam": 0.6}),
        ("linear_horseshoe", {"mu": 1.5}),
        ("circle_expanding", {"k": 1}),
        ("cookie_cutter", {"alpha": 1.2}),
        ("henon", {"c": 1.0}),
    ],
)
def test_bad_system_specification(name, params):
    with pytest.raises(InvalidInputError):
        make_system(name, **params)


def test_describe_lists_metadata():
    info = make_system("circle_expanding", k=4).describe()
    assert info["degree"] == 4 and info["ambient"] == {"kind": "FlatTorus", "dim": 1}
    assert info["reference_dimension"] == 1.0


def test_module_level_wrappers_match_methods():
    sys_ = make_system("henon")
    x = np.array([[0.1, 0.2]])
    np.testing.assert_array_equal(systems.evaluate(sys_, x), sys_.evaluate(x))
    np.testing.assert_array_equal(systems.jacobian(sys_, x), sys_.jacobian(x))
    np.testing.assert_array_equal(systems.inverse_evaluate(sys_, x), sys_.inverse_evaluate(x))
    np.testing.assert_array_equal(systems.inverse_jacobian(sys_, x), sys_.inverse_jacobian(x))
    cloud = systems.sample_invariant_set(sys_, 100, seed=0)
    assert len(cloud) == 100
