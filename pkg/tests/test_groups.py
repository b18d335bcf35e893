"""Group models: charts, Haar data, modular functions, quadrature."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from calwave import build_quadrature, builtin_group, dual_action
from calwave.groups import GroupElement

ALL_GROUPS = [
    "dilation1d_pos",
    "dilation1d_full",
    "diag_pos(2)",
    "similitude2",
    "rotation2",
    "shear_scale2",
    "shear2",
]

EXPECTED_UNIMODULAR_G = {
    "dilation1d_pos": False,
    "dilation1d_full": False,
    "diag_pos(2)": False,
    "similitude2": False,
    "rotation2": True,
    "shear_scale2": False,
    "shear2": True,
}


def _random_coords(g, rng, n=1):
    cols = []
    for ax in g.axes:
        if ax.kind == "line":
            cols.append(rng.uniform(-2.0, 2.0, n))
        elif ax.kind == "circle":
            cols.append(rng.uniform(0.0, ax.period, n))
        else:
            cols.append(rng.choice(ax.values, n))
    return np.stack(cols, axis=-1)


@pytest.mark.parametrize("name", ALL_GROUPS)
def test_chart_identity(name):
    g = builtin_group(name)
    assert np.allclose(g.identity.matrix, np.eye(g.d), atol=1e-14)
    assert np.isclose(g.modular_H(g.identity.matrix), 1.0)
    assert np.isclose(g.dilation_modulus(g.identity.matrix), 1.0)


@pytest.mark.parametrize("name", ALL_GROUPS)
def test_modular_data_multiplicative(name):
    g = builtin_group(name)
    rng = np.random.default_rng(7)
    a = g.chart(_random_coords(g, rng, 64))
    b = g.chart(_random_coords(g, rng, 64))
    prod = a @ b
    assert np.allclose(
        g.modular_H(prod), g.modular_H(a) * g.modular_H(b), rtol=1e-10
    )
    assert np.allclose(
        g.dilation_modulus(prod),
        g.dilation_modulus(a) * g.dilation_modulus(b),
        rtol=1e-10,
    )
    assert np.allclose(
        g.modular_G(prod), g.modular_G(a) * g.modular_G(b), rtol=1e-10
    )


@pytest.mark.parametrize("name", ALL_GROUPS)
def test_unimodularity_flags(name):
    g = builtin_group(name)
    assert g.is_unimodular_G() is EXPECTED_UNIMODULAR_G[name]


@given(
    t1=st.floats(-3, 3, allow_nan=False),
    t2=st.floats(-3, 3, allow_nan=False),
    s1=st.floats(-3, 3, allow_nan=False),
    s2=st.floats(-3, 3, allow_nan=False),
)
@settings(max_examples=50, deadline=None)
def test_shear_scale_modular_hypothesis(t1, t2, s1, s2):
    g = builtin_group("shear_scale2")
    a = g.chart(np.array([t1, s1]))
    b = g.chart(np.array([t2, s2]))
    assert np.isclose(g.modular_H(a @ b), g.modular_H(a) * g.modular_H(b),
                      rtol=1e-9)
    # Delta_H(h) = a^{-1/2} and delta(h) = a^{3/2} in this parametrization
    assert np.isclose(g.modular_H(a), np.exp(-t1 / 2), rtol=1e-12)
    assert np.isclose(g.dilation_modulus(a), np.exp(1.5 * t1), rtol=1e-12)


def test_dual_action_is_right_action():
    rng = np.random.default_rng(3)
    for name in ALL_GROUPS:
        g = builtin_group(name)
        xi = rng.uniform(-2, 2, g.d)
        h1 = g.element(_random_coords(g, rng)[0])
        h2 = g.element(_random_coords(g, rng)[0])
        once = dual_action(g, dual_action(g, xi, h1), h2)
        combined = dual_action(g, xi, h1.matrix @ h2.matrix)
        assert np.allclose(once, combined, atol=1e-12)


def test_degenerate_element_rejected():
    with pytest.raises(ValueError):
        GroupElement(matrix=np.zeros((2, 2)), chart_coords=np.zeros(2))
    g = builtin_group("similitude2")
    with pytest.raises(ValueError):
        dual_action(g, np.array([1.0, 0.0]), np.zeros((2, 2)))


def test_quadrature_total_weight():
    g = builtin_group("dilation1d_pos")
    q = build_quadrature(g, [128])
    assert np.isclose(q.total_weight, 8.0)  # default box (-4, 4)
    g = builtin_group("dilation1d_full")
    q = build_quadrature(g, [128])
    assert np.isclose(q.total_weight, 16.0)  # two signs
    g = builtin_group("similitude2")
    q = build_quadrature(g, [64, 32])
    assert np.isclose(q.total_weight, 8.0 * 2 * np.pi)


def test_quadrature_integrates_smooth_function():
    g = builtin_group("dilation1d_pos")
    q = build_quadrature(g, [512])
    val = float(np.sum(q.weights * np.exp(-q.nodes[:, 0] ** 2)))
    assert abs(val - np.sqrt(np.pi)) < 1e-4


def test_quadrature_left_invariance_exact():
    # Translating the integrand by g0 = e^{1/2} equals shifting the chart box:
    # midpoint nodes shift rigidly, so the sums agree to rounding.
    g = builtin_group("dilation1d_pos")

    def f(t):
        return np.exp(-((t - 0.3) ** 2))

    q1 = build_quadrature(g, [256], [(-4.0, 4.0)])
    q2 = build_quadrature(g, [256], [(-4.5, 3.5)])
    lhs = float(np.sum(q1.weights * f(q1.nodes[:, 0])))
    rhs = float(np.sum(q2.weights * f(q2.nodes[:, 0] + 0.5)))
    assert abs(lhs - rhs) < 1e-12


def test_quadrature_caches_match_chart():
    g = builtin_group("shear_scale2")
    q = build_quadrature(g, [8, 8])
    mats = g.chart(q.nodes)
    assert np.allclose(q.matrices, mats)
    assert np.allclose(q.deltas, np.abs(np.linalg.det(mats)))
    assert np.allclose(q.modulars, g.modular_H(mats))


@pytest.mark.parametrize("name", ["similitude2", "shear_scale2", "diag_pos(2)"])
def test_dilation_modulus_scales_volume(name):
    # delta(h) = |det h|: Monte-Carlo volume of h([0,1]^d).
    g = builtin_group(name)
    rng = np.random.default_rng(11)
    h = g.chart(_random_coords(g, rng)[0])
    corners = np.array([[0, 0], [1, 0], [0, 1], [1, 1]], dtype=float) @ h.T
    lo, hi = corners.min(axis=0), corners.max(axis=0)
    n = 400_000
    pts = rng.uniform(lo, hi, size=(n, 2))
    back = pts @ np.linalg.inv(h).T
    inside = np.all((back >= 0) & (back <= 1), axis=1)
    vol = float(np.prod(hi - lo)) * inside.mean()
    assert abs(vol - g.dilation_modulus(h)) / g.dilation_modulus(h) < 0.02


def test_builtin_group_errors_and_params():
    with pytest.raises(ValueError):
        builtin_group("nonsense")
    assert builtin_group("diag_pos(3)").d == 3
    assert builtin_group("diag_pos").d == 2
    assert builtin_group("sl2z_demo").name == "sl2z_demo"


def test_quadrature_errors():
    g = builtin_group("dilation1d_pos")
    with pytest.raises(ValueError):
        build_quadrature(g, [1])
    with pytest.raises(ValueError):
        build_quadrature(g, [16], [(2.0, 2.0)])
