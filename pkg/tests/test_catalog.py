import numpy as np
import pytest

from possem import catalog
from possem.catalog import _nullform_polys
from possem.multop import is_multiplication


def test_names_and_lookup():
    assert "ex1_3" in catalog.names()
    with pytest.raises(KeyError):
        catalog.get("no_such_system")


def test_seeded_lookup():
    entry = catalog.get("rand_coupled(7)")
    sys_ = entry.build()
    assert sys_.m == 2
    again = catalog.get("rand_coupled(7)").build()
    x = np.array([0.3, 0.6])
    assert np.allclose(sys_.eval_coefficient(0, 1, x), again.eval_coefficient(0, 1, x))


def test_nullform_curl_identities():
    # the three coefficient derivatives cancel pairwise, coefficientwise
    c12, c13, c23 = _nullform_polys()
    assert c12.partial(1).allclose(-1 * c13.partial(2))
    assert c12.partial(0).allclose(c23.partial(2))
    assert c13.partial(0).allclose(-1 * c23.partial(1))


def test_nullform_boundary_vanishing():
    sys_ = catalog.get("ex3_5_nullform").build()
    rng = np.random.default_rng(0)
    for k in range(3):
        for l in range(3):
            if k == l:
                continue
            for _ in range(40):
                x = rng.uniform(-1, 1, 3)
                side = rng.integers(0, 2)
                x[k if side else l] = rng.choice([-1.0, 1.0])
                assert abs(sys_.eval_coefficient(k, l, x)[0, 0]) <= 1e-14


def test_embedded_nullform_coupling_never_multiplication():
    sys_ = catalog.get("ex5_5").build()
    fld = sys_.coefficient(0, 1)
    rng = np.random.default_rng(1)
    seen_nonzero = 0
    for _ in range(50):
        x = rng.uniform(-0.9, 0.9, 3)
        C = fld.eval(x)
        if abs(C[0, 1]) > 1e-9:
            seen_nonzero += 1
            assert not is_multiplication(C)
    assert seen_nonzero > 30


def test_catalog_expected_verdicts_marked():
    for name in catalog.names():
        entry = catalog.get(name)
        assert entry.expected in ("positive-decoupled", "not-positive", None)


def test_random_coupled_floor():
    with pytest.raises(ValueError):
        catalog.random_coupled(0, coupling=0.05)


def test_random_systems_are_elliptic():
    from possem.coefficients import check_ellipticity

    for seed in (0, 1, 2):
        assert check_ellipticity(catalog.get("rand_decoupled").build(seed=seed)).passed
        assert check_ellipticity(catalog.get("rand_coupled").build(seed=seed)).passed
