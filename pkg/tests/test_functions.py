import math
import warnings
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from perspvol.errors import CombinatorialBlowupError, DomainError, RangeError
from perspvol.functions import (
    ExpLinearForm,
    PowerLinearForm,
    SuperPolyForm,
    check_genericity,
    evaluate,
    function_from_dict,
    homogeneity_degree,
    is_exact_power,
    is_supermodular_on_vertices,
    subset_sums,
)
from perspvol.geometry import BoxDomain

coef = st.floats(0.05, 3.0)


def test_evaluate_examples():
    assert evaluate(PowerLinearForm([1, 1], 2), [1, 1]) == 4
    assert evaluate(ExpLinearForm([1]), [0]) == 0
    # g(e - 1) = e^{ln(e)^2} - 1 = e - 1
    assert evaluate(SuperPolyForm([1]), [math.e - 1]) == pytest.approx(math.e - 1, rel=1e-15)


def test_evaluate_errors():
    with pytest.raises(DomainError):
        evaluate(PowerLinearForm([1, 1], 2), [1.0])
    with pytest.raises(DomainError):
        evaluate(SuperPolyForm([1, 1]), [1.0, -0.5])
    with pytest.raises(DomainError):
        PowerLinearForm([1.0], 1.5).g(-1.0)
    with pytest.raises(RangeError):
        ExpLinearForm([1.0])([800.0])
    with pytest.raises(RangeError):
        SuperPolyForm([1.0])([1e300])


def test_constructor_validation():
    with pytest.raises(DomainError):
        PowerLinearForm([1.0], 0.5)
    with pytest.raises(DomainError):
        ExpLinearForm([1.0, -1.0])
    with pytest.raises(DomainError):
        ExpLinearForm([])
    with pytest.warns(UserWarning):
        ExpLinearForm([1.0, 0.0])


def test_homogeneity_degree():
    assert homogeneity_degree(PowerLinearForm([1.0], 3)) == 3
    assert homogeneity_degree(PowerLinearForm([1.0], 1)) == 1
    assert homogeneity_degree(ExpLinearForm([1.0])) is None
    assert homogeneity_degree(SuperPolyForm([1.0])) is None


def test_exact_evaluation_and_detection():
    f = PowerLinearForm([1, Fraction(1, 2)], 3)
    assert f.exact([1, 2]) == 8
    assert is_exact_power(f, (1, 2), 1)
    assert not is_exact_power(f, (1.0, 2), 1)
    assert not is_exact_power(PowerLinearForm([1], 2.5), (1,), 1)
    assert not is_exact_power(ExpLinearForm([1]), (1,), 1)


@given(st.lists(coef, min_size=1, max_size=4), st.sampled_from([1, 1.5, 2, 3, 4.5]),
       st.floats(0.0, 2.0), st.integers(0, 2**31))
def test_power_homogeneity(c, q, lam, seed):
    f = PowerLinearForm(c, q)
    x = np.random.default_rng(seed).uniform(0, 2, len(c))
    assert abs(f(lam * x) - lam**q * f(x)) <= 1e-9 * (1 + abs(f(x)))


@given(st.sampled_from(["power", "exp", "superpoly"]), st.lists(coef, min_size=1, max_size=4), st.integers(0, 2**31))
def test_midpoint_convexity(kind, c, seed):
    f = {"power": PowerLinearForm(c, 2.5), "exp": ExpLinearForm(c), "superpoly": SuperPolyForm(c)}[kind]
    rng = np.random.default_rng(seed)
    X, Y = rng.uniform(0, 3, (2, 50, len(c)))
    mid, avg = f((X + Y) / 2), (f(X) + f(Y)) / 2
    assert np.all(mid <= avg + 1e-12 * (1 + np.abs(avg)))


@pytest.mark.parametrize("kind", ["power", "exp", "superpoly"])
def test_zero_at_origin(kind):
    f = function_from_dict({"kind": kind, "c": [1.0, 2.0], "q": 2})
    assert f([0.0, 0.0]) == 0


def test_function_round_trip():
    for f in (PowerLinearForm([1.0, 2.0], 2.5), ExpLinearForm([0.5]), SuperPolyForm([1.0, 1.0])):
        assert function_from_dict(f.to_dict()) == f
    with pytest.raises(DomainError):
        function_from_dict({"kind": "log", "c": [1]})
    with pytest.raises(DomainError):
        function_from_dict({"kind": "power", "c": [1]})


def test_genericity_examples():
    assert check_genericity([1, 2, 3])
    res = check_genericity([1, -1])
    assert not res and res.witness == (0, 1)
    assert check_genericity([1, 1 + 1e-15], tol=1e-12)
    assert not check_genericity([0.0, 1.0])


def test_genericity_cap():
    with pytest.raises(CombinatorialBlowupError):
        check_genericity(np.ones(21))
    assert len(subset_sums([1.0, 2.0, 4.0])) == 8
    assert subset_sums([1.0, 2.0, 4.0]).tolist() == list(range(8))


@given(st.lists(st.floats(-2, 2), min_size=1, max_size=6), st.floats(1e-12, 1e-2), st.floats(0.0, 1.0))
def test_genericity_monotone_in_tol(c, tol, shrink):
    assume(max(abs(x) for x in c) > 0)
    if check_genericity(c, tol):
        assert check_genericity(c, tol * shrink)


@given(st.lists(st.floats(-2, 2), min_size=1, max_size=5))
def test_genericity_witness_is_violating(c):
    c = np.array(c)
    res = check_genericity(c)
    if not res:
        assert abs(c[list(res.witness)].sum()) <= 1e-9 * np.max(np.abs(c))


def test_supermodularity_examples():
    box2 = BoxDomain([1.0, 1.0], 1.0)
    assert is_supermodular_on_vertices(ExpLinearForm([1, 1]), box2)
    assert is_supermodular_on_vertices(PowerLinearForm([1, 1], 2), box2)
    assert is_supermodular_on_vertices(SuperPolyForm([1, 1]), box2)
    assert is_supermodular_on_vertices(PowerLinearForm([3.0], 2.0), BoxDomain([1.0], 5.0))


def test_supermodularity_detects_violation():
    class Neg(PowerLinearForm):
        def g(self, t):
            return -np.asarray(t, dtype=float) ** 2

    assert not is_supermodular_on_vertices(Neg([1, 1], 2), BoxDomain([1.0, 1.0], 1.0))


def test_supermodularity_cap():
    with pytest.raises(CombinatorialBlowupError):
        is_supermodular_on_vertices(ExpLinearForm(np.ones(11)), BoxDomain(np.ones(11), 1.0))


@given(st.lists(coef, min_size=2, max_size=4), st.floats(0.1, 5.0), st.floats(0.05, 3.0))
def test_families_supermodular_on_random_boxes(c, v, u):
    box = BoxDomain([v] * len(c), u)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for f in (PowerLinearForm(c, 2.0), ExpLinearForm(c), SuperPolyForm(c)):
            assert is_supermodular_on_vertices(f, box)
