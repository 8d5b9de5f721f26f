import math
import warnings
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from perspvol.envelope import (
    ConstantBound,
    concave_envelope,
    constant_bound,
    evaluate_envelope,
    integrate_envelope,
    integrate_envelope_by_cells,
)
from perspvol.errors import CombinatorialBlowupError, DomainError, SupermodularityError
from perspvol.functions import ExpLinearForm, PowerLinearForm, SuperPolyForm
from perspvol.geometry import BoxDomain


def test_constant_bound_examples():
    assert constant_bound(ExpLinearForm([1, 1]), BoxDomain([1, 1], 1)).F == pytest.approx(math.e**4 - 1)
    assert constant_bound(PowerLinearForm([1], 2), BoxDomain([1], 1)).F == 4
    assert constant_bound(PowerLinearForm([1.0], 2), BoxDomain([0.7], 1e-12)).F == pytest.approx(0.49)
    bound = ConstantBound(3.0)
    assert bound([1.0, 2.0]) == 3.0
    assert bound(np.zeros((4, 2))).tolist() == [3.0] * 4


def test_secant_in_one_dimension():
    env = concave_envelope(PowerLinearForm([1.0], 2), BoxDomain([1.0], 1.0))
    assert len(env) == 1
    x = np.linspace(1, 2, 11)[:, None]
    assert np.allclose(env(x), 3 * x.ravel() - 2, rtol=0, atol=1e-14)


def test_two_dimensional_examples():
    f = ExpLinearForm([1.0, 1.0])
    env = concave_envelope(f, BoxDomain([1.0, 1.0], 1.0))
    assert len(env) == 2
    assert env([2.0, 2.0]) == pytest.approx(math.e**4 - 1)
    g = PowerLinearForm([1, 1], 2)
    env = concave_envelope(g, BoxDomain([1, 1], 1))
    # midpoint of the diagonal edge joining vertex values 4 and 16
    assert env([1.5, 1.5]) == pytest.approx(10.0, abs=1e-12)


def test_integrate_envelope_examples():
    assert integrate_envelope(PowerLinearForm([1], 2), BoxDomain([1], 1)) == Fraction(5, 2)
    assert integrate_envelope(PowerLinearForm([1], 2), BoxDomain([1.0], 1.0)) == pytest.approx(2.5)
    assert integrate_envelope(PowerLinearForm([1, 1], 2), BoxDomain([1, 1], 1)) == Fraction(58, 6)


def test_integrate_envelope_against_monte_carlo():
    # Monte Carlo integral of the constructed piecewise-linear function
    f = PowerLinearForm([1.0, 1.0], 2)
    env = concave_envelope(f, BoxDomain([1.0, 1.0], 1.0))
    X = 1.0 + np.random.default_rng(42).random((10**6, 2))
    vals = env(X)
    se = vals.std(ddof=1) / math.sqrt(len(vals))
    assert abs(vals.mean() - 58 / 6) <= 4 * se


def test_constant_function_envelope():
    class Const(PowerLinearForm):
        def g(self, t):
            return np.full(np.shape(t), 2.5)

    box = BoxDomain([1.0, 1.0, 1.0], 0.5)
    assert integrate_envelope(Const([1, 1, 1], 1), box) == pytest.approx(2.5 * 0.125)


def test_not_supermodular_rejected():
    class Neg(PowerLinearForm):
        def g(self, t):
            return -np.asarray(t, dtype=float) ** 2

    with pytest.raises(SupermodularityError):
        concave_envelope(Neg([1, 1], 2), BoxDomain([1.0, 1.0], 1.0))
    with pytest.raises(SupermodularityError):
        integrate_envelope(Neg([1, 1], 2), BoxDomain([1.0, 1.0], 1.0))


def test_caps_and_errors():
    with pytest.raises(CombinatorialBlowupError):
        concave_envelope(ExpLinearForm(np.ones(10)), BoxDomain(np.ones(10), 0.1))
    with pytest.raises(CombinatorialBlowupError):
        integrate_envelope(ExpLinearForm(np.ones(21)), BoxDomain(np.ones(21), 0.1), check=False)
    env = concave_envelope(ExpLinearForm([1.0, 1.0]), BoxDomain([1.0, 1.0], 1.0))
    with pytest.raises(DomainError):
        evaluate_envelope(env, [0.5, 1.5])
    with pytest.raises(DomainError):
        evaluate_envelope(env, [1.5])
    with pytest.raises(DomainError):
        concave_envelope(ExpLinearForm([1.0]), BoxDomain([1.0, 1.0], 1.0))


def test_cells_interpolate_their_vertices():
    f = ExpLinearForm([1.0, 0.5, 2.0])
    env = concave_envelope(f, BoxDomain([0.2, 0.4, 0.1], 0.8))
    for cell in env.cells():
        assert np.allclose(cell(cell.vertices), f(cell.vertices), rtol=1e-12)
        assert set(cell.to_dict()) == {"permutation", "vertices", "gradient", "offset"}


def test_continuity_on_shared_facets():
    f = PowerLinearForm([1.0, 2.0, 0.5], 3)
    box = BoxDomain([0.5, 0.5, 0.5], 1.0)
    env = concave_envelope(f, box)
    rng = np.random.default_rng(0)
    y = rng.random((500, 3))
    y[:, 1] = y[:, 0]  # on the facet x0 = x1 shared by two cells
    X = box.v0_array + y
    cells = [env.cell(i) for i in range(len(env))]
    for x in X[:50]:
        # evaluate with every cell whose closed region contains x
        vals = [c(x) for c in cells if np.all(np.diff(((x - box.v0_array))[list(c.perm)]) >= -1e-15)]
        assert len(vals) >= 2
        assert max(vals) - min(vals) <= 1e-10 * max(1.0, abs(vals[0]))


def test_arrays_read_only():
    env = concave_envelope(ExpLinearForm([1.0, 1.0]), BoxDomain([1.0, 1.0], 1.0))
    with pytest.raises(ValueError):
        env.gradients[0, 0] = 1.0


def random_case(draw_c, q, v, u, kind):
    box = BoxDomain([v] * len(draw_c), u)
    f = {"power": PowerLinearForm(draw_c, q), "exp": ExpLinearForm(draw_c), "superpoly": SuperPolyForm(draw_c)}[kind]
    return f, box


cases = st.tuples(
    st.lists(st.floats(0.1, 1.5), min_size=1, max_size=4),
    st.sampled_from([1, 1.5, 2, 3]),
    st.floats(0.1, 2.0),
    st.floats(0.1, 2.0),
    st.sampled_from(["power", "exp", "superpoly"]),
    st.integers(0, 2**31),
)


@given(cases)
def test_envelope_properties(case):
    *args, seed = case
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        f, box = random_case(*args)
    env = concave_envelope(f, box)
    d = box.dim
    V = box.vertices()
    assert np.allclose(env(V), f(V), rtol=1e-9, atol=0)
    rng = np.random.default_rng(seed)
    X = box.v0_array + float(box.u) * rng.random((2000, d))
    Y = box.v0_array + float(box.u) * rng.random((2000, d))
    fx, ex, ey = f(X), env(X), env(Y)
    assert np.all(ex >= fx - 1e-9 * (1 + np.abs(fx)))
    assert np.all(env((X + Y) / 2) >= (ex + ey) / 2 - 1e-9 * (1 + np.abs(ex)))
    F = constant_bound(f, box).F
    assert np.all(F >= ex - 1e-9 * (1 + abs(F)))
    assert integrate_envelope(env) == pytest.approx(integrate_envelope_by_cells(env), rel=1e-10)
    assert integrate_envelope(f, box) == pytest.approx(integrate_envelope(env), rel=1e-12)


def test_to_dict_round_trip_shape():
    env = concave_envelope(PowerLinearForm([1.0, 1.0], 2), BoxDomain([1.0, 1.0], 1.0))
    doc = env.to_dict()
    assert doc["box"]["kind"] == "box"
    assert [c["permutation"] for c in doc["cells"]] == [[0, 1], [1, 0]]
    assert doc["cells"][0]["gradient"] == [7.0, 5.0]
