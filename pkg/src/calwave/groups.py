"""Matrix dilation groups with explicit charts, Haar data and the dual action.

A group model packages everything downstream numerics need about a closed
matrix group H < GL(d, R): a global chart, the left Haar density in chart
coordinates, the modular function, and the dilation modulus (the factor by
which group elements scale Lebesgue measure on R^d).

Charts use log coordinates for scale axes, so the Haar density is constant
there and plain midpoint quadrature stays uniform.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

TWO_PI = 2.0 * math.pi

#: Determinant magnitude below which a matrix is rejected as a group element.
DET_FLOOR = 1e-12


@dataclass(frozen=True)
class Axis:
    """One chart axis: an unbounded line, a circle, or a finite label set."""

    kind: str  # "line" | "circle" | "discrete"
    lo: float = -4.0  # default truncation for line axes
    hi: float = 4.0
    period: float = TWO_PI  # circle only
    values: tuple[float, ...] = ()  # discrete only


@dataclass(frozen=True)
class GroupElement:
    """A group element together with the chart coordinates that produced it."""

    matrix: np.ndarray
    chart_coords: np.ndarray

    def __post_init__(self):
        if abs(np.linalg.det(self.matrix)) <= DET_FLOOR:
            raise ValueError("degenerate group element")


@dataclass(frozen=True)
class GroupModel:
    """A matrix dilation group H with chart, Haar density and modular data.

    ``chart`` maps stacked chart coordinates (..., k) to matrices (..., d, d).
    ``haar_density`` is the left Haar density w.r.t. Lebesgue measure in the
    chart; ``modular_H`` evaluates Delta_H from the matrix itself.  The
    dilation modulus delta(h) = |det h| is shared by all models since the
    base group is R^d with Lebesgue measure.
    """

    name: str
    d: int
    axes: tuple[Axis, ...]
    chart: Callable[[np.ndarray], np.ndarray]
    haar_density: Callable[[np.ndarray], np.ndarray]
    modular_H: Callable[[np.ndarray], np.ndarray]
    id_coords: np.ndarray

    @property
    def k(self) -> int:
        return len(self.axes)

    def element(self, coords) -> GroupElement:
        coords = np.asarray(coords, dtype=float)
        return GroupElement(matrix=self.chart(coords), chart_coords=coords)

    @property
    def identity(self) -> GroupElement:
        return self.element(self.id_coords)

    def dilation_modulus(self, matrix: np.ndarray) -> np.ndarray:
        return np.abs(np.linalg.det(matrix))

    def modular_G(self, matrix: np.ndarray) -> np.ndarray:
        """Delta_G(h) = Delta_H(h) / delta(h) on the dilation factor."""
        return self.modular_H(matrix) / self.dilation_modulus(matrix)

    def is_unimodular_G(self, probe_coords: np.ndarray | None = None) -> bool:
        """Check Delta_G == 1 on a coarse sample of the chart."""
        if probe_coords is None:
            probe_coords = _probe_coords(self)
        vals = self.modular_G(self.chart(probe_coords))
        return bool(np.allclose(vals, 1.0, rtol=1e-10, atol=1e-12))


def _probe_coords(g: GroupModel, n: int = 5) -> np.ndarray:
    cols = []
    for ax in g.axes:
        if ax.kind == "line":
            cols.append(np.linspace(ax.lo * 0.5, ax.hi * 0.5, n))
        elif ax.kind == "circle":
            cols.append(np.linspace(0.0, ax.period, n, endpoint=False))
        else:
            cols.append(np.resize(np.asarray(ax.values, dtype=float), n))
    return np.stack(cols, axis=-1)


def dual_action(g: GroupModel, xi, h: GroupElement | np.ndarray) -> np.ndarray:
    """Right dual action xi.h = h^T xi on frequency space."""
    matrix = h.matrix if isinstance(h, GroupElement) else np.asarray(h, dtype=float)
    if abs(np.linalg.det(matrix)) <= DET_FLOOR:
        raise ValueError("degenerate group element")
    return matrix.T @ np.asarray(xi, dtype=float)


def dual_action_points(xis: np.ndarray, matrix: np.ndarray) -> np.ndarray:
    """Vectorized dual action: rows of ``xis`` mapped to rows of xi.h."""
    return xis @ matrix


def modular_G(g: GroupModel, h: GroupElement) -> float:
    return float(g.modular_G(h.matrix))


@dataclass(frozen=True)
class QuadratureRule:
    """Discretization of the left Haar integral over a chart sub-domain.

    Weights already include the Haar density and the chart cell volume, so
    ``sum(weights * f(nodes))`` approximates the truncated Haar integral.
    Matrices, dilation moduli and modular values are cached per node since
    every downstream operation needs them.
    """

    nodes: np.ndarray  # (M, k)
    weights: np.ndarray  # (M,)
    truncation: tuple  # per-axis descriptor of the covered sub-domain
    matrices: np.ndarray = field(repr=False, default=None)
    deltas: np.ndarray = field(repr=False, default=None)
    modulars: np.ndarray = field(repr=False, default=None)

    def __len__(self) -> int:
        return len(self.weights)

    @property
    def total_weight(self) -> float:
        return float(self.weights.sum())


def build_quadrature(
    g: GroupModel,
    resolution: Sequence[int],
    truncation: Sequence[tuple[float, float] | None] | None = None,
) -> QuadratureRule:
    """Tensor-product midpoint rule over the chart.

    Circle axes are covered fully; line axes are truncated to the given box
    (default: the axis' declared range).  Discrete axes enumerate all values
    with unit cell weight.
    """
    resolution = list(resolution)
    if truncation is None:
        truncation = [None] * g.k
    axes_nodes, axes_cells, descr = [], [], []
    ri = 0
    for i, ax in enumerate(g.axes):
        if ax.kind == "discrete":
            axes_nodes.append(np.asarray(ax.values, dtype=float))
            axes_cells.append(np.ones(len(ax.values)))
            descr.append(("discrete", ax.values))
            continue
        n = resolution[ri] if ri < len(resolution) else resolution[-1]
        ri += 1
        if n < 2:
            raise ValueError("need at least 2 nodes per non-point axis")
        if ax.kind == "circle":
            step = ax.period / n
            axes_nodes.append((np.arange(n) + 0.5) * step)
            axes_cells.append(np.full(n, step))
            descr.append(("circle", 0.0, ax.period))
        else:
            box = truncation[i] if truncation[i] is not None else (ax.lo, ax.hi)
            lo, hi = float(box[0]), float(box[1])
            if not hi > lo:
                raise ValueError("empty truncation box")
            step = (hi - lo) / n
            axes_nodes.append(lo + (np.arange(n) + 0.5) * step)
            axes_cells.append(np.full(n, step))
            descr.append(("line", lo, hi))
    grids = np.meshgrid(*axes_nodes, indexing="ij")
    cells = np.meshgrid(*axes_cells, indexing="ij")
    nodes = np.stack([a.ravel() for a in grids], axis=-1)
    cellvol = np.prod(np.stack([c.ravel() for c in cells], axis=-1), axis=-1)
    weights = g.haar_density(nodes) * cellvol
    if not np.all(np.isfinite(weights)) or np.any(weights <= 0):
        raise ValueError("quadrature weights must be finite and positive")
    matrices = g.chart(nodes)
    return QuadratureRule(
        nodes=nodes,
        weights=weights,
        truncation=tuple(descr),
        matrices=matrices,
        deltas=np.abs(np.linalg.det(matrices)),
        modulars=g.modular_H(matrices),
    )


# ---------------------------------------------------------------------------
# builtin catalog


def _ones(matrix: np.ndarray) -> np.ndarray:
    return np.ones(matrix.shape[:-2]) if matrix.ndim > 2 else np.float64(1.0)


def _flat_density(coords: np.ndarray) -> np.ndarray:
    coords = np.atleast_2d(coords)
    return np.ones(coords.shape[0])


def _rotation(theta: np.ndarray) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    out = np.empty(np.shape(theta) + (2, 2))
    out[..., 0, 0] = c
    out[..., 0, 1] = -s
    out[..., 1, 0] = s
    out[..., 1, 1] = c
    return out


def _dilation1d_pos() -> GroupModel:
    def chart(coords):
        t = np.asarray(coords, dtype=float)[..., 0]
        return np.exp(t)[..., None, None]

    return GroupModel(
        name="dilation1d_pos",
        d=1,
        axes=(Axis("line"),),
        chart=chart,
        haar_density=_flat_density,
        modular_H=_ones,
        id_coords=np.zeros(1),
    )


def _dilation1d_full() -> GroupModel:
    def chart(coords):
        coords = np.asarray(coords, dtype=float)
        t, sign = coords[..., 0], coords[..., 1]
        return (sign * np.exp(t))[..., None, None]

    return GroupModel(
        name="dilation1d_full",
        d=1,
        axes=(Axis("line"), Axis("discrete", values=(1.0, -1.0))),
        chart=chart,
        haar_density=_flat_density,
        modular_H=_ones,
        id_coords=np.array([0.0, 1.0]),
    )


def _diag_pos(d: int) -> GroupModel:
    def chart(coords):
        t = np.asarray(coords, dtype=float)
        out = np.zeros(t.shape[:-1] + (d, d))
        for i in range(d):
            out[..., i, i] = np.exp(t[..., i])
        return out

    return GroupModel(
        name=f"diag_pos({d})",
        d=d,
        axes=tuple(Axis("line") for _ in range(d)),
        chart=chart,
        haar_density=_flat_density,
        modular_H=_ones,
        id_coords=np.zeros(d),
    )


def _similitude2() -> GroupModel:
    def chart(coords):
        coords = np.asarray(coords, dtype=float)
        t, theta = coords[..., 0], coords[..., 1]
        return np.exp(t)[..., None, None] * _rotation(theta)

    return GroupModel(
        name="similitude2",
        d=2,
        axes=(Axis("line"), Axis("circle")),
        chart=chart,
        haar_density=_flat_density,
        modular_H=_ones,
        id_coords=np.zeros(2),
    )


def _rotation2() -> GroupModel:
    def chart(coords):
        theta = np.asarray(coords, dtype=float)[..., 0]
        return _rotation(theta)

    return GroupModel(
        name="rotation2",
        d=2,
        axes=(Axis("circle"),),
        chart=chart,
        haar_density=_flat_density,
        modular_H=_ones,
        id_coords=np.zeros(1),
    )


def _shear_scale2() -> GroupModel:
    # h = diag(a, sqrt(a)) . [[1, s], [0, 1]] with a = e^t; left Haar
    # measure is dt ds in this chart and Delta_H(h) = a^{-1/2}.
    def chart(coords):
        coords = np.asarray(coords, dtype=float)
        t, s = coords[..., 0], coords[..., 1]
        a = np.exp(t)
        out = np.zeros(t.shape + (2, 2))
        out[..., 0, 0] = a
        out[..., 0, 1] = a * s
        out[..., 1, 1] = np.sqrt(a)
        return out

    def modular(matrix):
        return np.asarray(matrix)[..., 0, 0] ** -0.5

    return GroupModel(
        name="shear_scale2",
        d=2,
        axes=(Axis("line"), Axis("line")),
        chart=chart,
        haar_density=_flat_density,
        modular_H=modular,
        id_coords=np.zeros(2),
    )


def _shear2() -> GroupModel:
    def chart(coords):
        s = np.asarray(coords, dtype=float)[..., 0]
        out = np.zeros(s.shape + (2, 2))
        out[..., 0, 0] = 1.0
        out[..., 0, 1] = s
        out[..., 1, 1] = 1.0
        return out

    return GroupModel(
        name="shear2",
        d=2,
        axes=(Axis("line"),),
        chart=chart,
        haar_density=_flat_density,
        modular_H=_ones,
        id_coords=np.zeros(1),
    )


_CATALOG = {
    "dilation1d_pos": _dilation1d_pos,
    "dilation1d_full": _dilation1d_full,
    "diag_pos": _diag_pos,
    "similitude2": _similitude2,
    "rotation2": _rotation2,
    "shear_scale2": _shear_scale2,
    "shear2": _shear2,
}


def builtin_group(name: str, **params):
    """Return a catalog group model by name.

    ``diag_pos`` takes a dimension parameter (``diag_pos(2)`` or
    ``builtin_group("diag_pos", d=2)``).  ``sl2z_demo`` returns the discrete
    enumeration model used only by the divergence demo.
    """
    if name == "sl2z_demo":
        from .sl2z import Sl2zModel

        return Sl2zModel()
    base = name
    if name.startswith("diag_pos"):
        base = "diag_pos"
        if "(" in name:
            params.setdefault("d", int(name[name.index("(") + 1 : name.index(")")]))
        params.setdefault("d", 2)
    if base not in _CATALOG:
        raise ValueError(f"unknown group {name!r}")
    return _CATALOG[base](**params)
