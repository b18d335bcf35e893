"""Dual-orbit analysis: stabilizer probes, transversals and orbit measures."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .groups import GroupModel, QuadratureRule
from .spectral import BandMask, SpectralFunction, evaluate_offgrid

SHELL_FACTOR = 1.5
SHELL_COUNT = 20


def _shell_points(
    g: GroupModel,
    radius: float,
    circle_samples: int = 16,
    face_samples: int = 17,
) -> np.ndarray:
    """Chart points on the boundary shell of the sup-norm ball of the given
    radius around the identity, taken along the noncompact (line) axes only.

    Compact axes cannot cause unboundedness, so circle axes are swept over a
    full period and discrete axes enumerate all labels at every shell.
    """
    line_idx = [i for i, ax in enumerate(g.axes) if ax.kind == "line"]
    fixed: list[np.ndarray] = []
    for ax in g.axes:
        if ax.kind == "line":
            fixed.append(None)
        elif ax.kind == "circle":
            fixed.append(np.linspace(0.0, ax.period, circle_samples, endpoint=False))
        else:
            fixed.append(np.asarray(ax.values, dtype=float))
    if not line_idx:
        cols = np.meshgrid(*fixed, indexing="ij")
        return np.stack([c.ravel() for c in cols], axis=-1)
    # one face pair per line axis: that coordinate pinned at +/- radius,
    # the remaining line coordinates swept over [-radius, radius]
    pts = []
    sweep = np.linspace(-radius, radius, face_samples)
    for pin in line_idx:
        for sign in (-radius, radius):
            cols = []
            for i, ax in enumerate(g.axes):
                if i == pin:
                    cols.append(np.array([sign]))
                elif ax.kind == "line":
                    cols.append(sweep)
                else:
                    cols.append(fixed[i])
            mesh = np.meshgrid(*cols, indexing="ij")
            pts.append(np.stack([c.ravel() for c in mesh], axis=-1))
    # line offsets are relative to the identity's chart coordinates
    shift = np.zeros(g.k)
    for i in line_idx:
        shift[i] = np.asarray(g.id_coords, dtype=float)[i]
    return np.concatenate(pts, axis=0) + shift


def probe_epsilon_stabilizer(
    g: GroupModel,
    xi,
    eps: float,
    search_box: float | None = None,
) -> dict:
    """Probe boundedness of the epsilon-stabilizer {h : |xi.h - xi| < eps}.

    Samples geometric shells (factor 1.5, 20 shells) of chart radius along
    the noncompact axes, out to ``search_box`` (default: the chart's declared
    line range).  Bounded means some inner shell contains near-fixing
    elements (the identity always does) while no outer shell does.  Hits on
    the outermost shell return ``bounded=False`` with an infinite radius,
    meaning "not bounded within the search box".
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    xi = np.asarray(xi, dtype=float)
    line_axes = [ax for ax in g.axes if ax.kind == "line"]
    if not line_axes:
        # compact chart: the whole group fits in radius 0
        return {"bounded": True, "bounding_radius": 0.0, "shells": SHELL_COUNT}
    rmax = search_box if search_box is not None else max(
        max(abs(ax.lo), abs(ax.hi)) for ax in line_axes
    )
    radii = rmax * SHELL_FACTOR ** np.arange(-(SHELL_COUNT - 1), 1)
    last_hit = 0  # shell 0 is the identity, always a hit
    for idx, r in enumerate(radii, start=1):
        coords = _shell_points(g, float(r))
        mats = g.chart(coords)
        imgs = np.einsum("mij,i->mj", mats.reshape(-1, g.d, g.d), np.atleast_1d(xi))
        if np.any(np.linalg.norm(imgs - xi, axis=-1) < eps):
            last_hit = idx
    if last_hit == len(radii):
        return {"bounded": False, "bounding_radius": float("inf"), "shells": SHELL_COUNT}
    radius = 0.0 if last_hit == 0 else float(radii[last_hit - 1])
    return {"bounded": True, "bounding_radius": radius, "shells": SHELL_COUNT}


@dataclass(frozen=True)
class TransversalModel:
    """A set C meeting each dual orbit once, with the splitting xi = c.h.

    ``parametrization`` maps transversal coordinates (n, m) to frequency
    points (n, d); ``inverse`` maps frequency points (n, d) to coordinate
    pairs ``(coords, hcoords)`` with chart(hcoords)^T parametrization(coords)
    reproducing the input.
    """

    name: str
    m: int
    domain: tuple  # per-coordinate ("line", lo, hi) or ("discrete", values)
    parametrization: Callable[[np.ndarray], np.ndarray]
    inverse: Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]]

    def split(self, g: GroupModel, xis: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        coords, hcoords = self.inverse(np.atleast_2d(np.asarray(xis, dtype=float)))
        return coords, hcoords

    def roundtrip_error(self, g: GroupModel, xis: np.ndarray) -> np.ndarray:
        xis = np.atleast_2d(np.asarray(xis, dtype=float))
        coords, hcoords = self.inverse(xis)
        cs = self.parametrization(coords)
        mats = g.chart(hcoords)
        rebuilt = np.einsum("nij,ni->nj", mats, cs)
        return np.linalg.norm(rebuilt - xis, axis=-1)


@dataclass
class OrbitReport:
    """Summary of one dual orbit: representative, stabilizer, transversal."""

    representative: np.ndarray
    stabilizer_class: str  # trivial | compact_nontrivial | noncompact | undetermined
    epsilon_used: float
    transversal_coord: np.ndarray | None
    chart_of_orbit: str

    def to_json(self) -> dict:
        return {
            "representative": list(map(float, self.representative)),
            "stabilizer_class": self.stabilizer_class,
            "epsilon_used": self.epsilon_used,
            "transversal_coord": None
            if self.transversal_coord is None
            else list(map(float, np.atleast_1d(self.transversal_coord))),
            "chart_of_orbit": self.chart_of_orbit,
        }


def builtin_transversal(g: GroupModel, mask: BandMask) -> TransversalModel:
    """Closed-form transversal for a supported (group, mask) pair.

    Each model is a canonical splitting xi = c.h: the round trip through
    ``inverse`` is exact, and distinct coordinates hit distinct orbits on the
    mask up to the usual null sets.
    """
    name = getattr(g, "name", "")

    if name == "dilation1d_pos":
        # orbits of R+ on R* are the two half-lines; C = {-1, +1}
        def param(coords):
            return np.atleast_2d(coords)[:, :1].copy()

        def inv(xis):
            xis = np.atleast_2d(xis)
            sgn = np.sign(xis[:, 0])
            _require_offsingular(sgn)
            t = np.log(np.abs(xis[:, 0]))
            return sgn[:, None], t[:, None]

        return TransversalModel(
            name="signs", m=1,
            domain=(("discrete", (-1.0, 1.0)),),
            parametrization=param, inverse=inv,
        )

    if name == "dilation1d_full":
        # full dilations: canonical splitting through C = {-1, +1} using the
        # positive chart component
        def param(coords):
            return np.atleast_2d(coords)[:, :1].copy()

        def inv(xis):
            xis = np.atleast_2d(xis)
            sgn = np.sign(xis[:, 0])
            _require_offsingular(sgn)
            t = np.log(np.abs(xis[:, 0]))
            h = np.stack([t, np.ones_like(t)], axis=-1)
            return sgn[:, None], h

        return TransversalModel(
            name="signs", m=1,
            domain=(("discrete", (-1.0, 1.0)),),
            parametrization=param, inverse=inv,
        )

    if name.startswith("diag_pos") and g.d == 2 and mask.name == "quadrant":
        signs = mask.params.get("signs", "++")
        c = np.array([1.0 if ch == "+" else -1.0 for ch in signs])

        def param(coords):
            coords = np.atleast_2d(coords)
            return np.broadcast_to(c, (len(coords), 2)).copy()

        def inv(xis):
            xis = np.atleast_2d(xis)
            _require_offsingular(np.prod(xis, axis=1))
            t = np.log(np.abs(xis))
            return np.zeros((len(xis), 0)), t

        return TransversalModel(
            name=f"quadrant_point({signs})", m=0, domain=(),
            parametrization=param, inverse=inv,
        )

    if name == "similitude2":
        # transitive on the punctured plane; C = {(1, 0)}
        def param(coords):
            coords = np.atleast_2d(coords)
            out = np.zeros((len(coords), 2))
            out[:, 0] = 1.0
            return out

        def inv(xis):
            xis = np.atleast_2d(xis)
            r = np.linalg.norm(xis, axis=1)
            _require_offsingular(r)
            # xi = e^t R(theta)^T (1,0) = e^t (cos, -sin)(theta)
            theta = -np.arctan2(xis[:, 1], xis[:, 0])
            return np.zeros((len(xis), 0)), np.stack([np.log(r), theta], axis=-1)

        return TransversalModel(
            name="point(1,0)", m=0, domain=(),
            parametrization=param, inverse=inv,
        )

    if name == "rotation2":
        lo = mask.params.get("r1", mask.null_guard)
        hi = mask.params.get("r2", float("inf"))

        def param(coords):
            coords = np.atleast_2d(coords)
            out = np.zeros((len(coords), 2))
            out[:, 0] = coords[:, 0]
            return out

        def inv(xis):
            xis = np.atleast_2d(xis)
            r = np.linalg.norm(xis, axis=1)
            _require_offsingular(r)
            theta = -np.arctan2(xis[:, 1], xis[:, 0])
            return r[:, None], theta[:, None]

        return TransversalModel(
            name="positive_ray", m=1,
            domain=(("line", float(lo), float(hi)),),
            parametrization=param, inverse=inv,
        )

    if name == "shear_scale2" and mask.name == "cone":
        slope = float(mask.params["slope"])

        # C = {(sigma, u): |u| < slope}; splitting a = |xi1|,
        # s = (xi2 - sqrt(a) u) / (a sigma) with ray coordinate u = xi2/xi1
        def param(coords):
            coords = np.atleast_2d(coords)
            return coords[:, :2].copy()

        def inv(xis):
            xis = np.atleast_2d(xis)
            _require_offsingular(xis[:, 0])
            sgn = np.sign(xis[:, 0])
            a = np.abs(xis[:, 0])
            u = xis[:, 1] / xis[:, 0]
            s = (xis[:, 1] - np.sqrt(a) * u) / (a * sgn)
            coords = np.stack([sgn, u], axis=-1)
            h = np.stack([np.log(a), s], axis=-1)
            return coords, h

        return TransversalModel(
            name="cone_rays", m=2,
            domain=(("discrete", (-1.0, 1.0)), ("line", -slope, slope)),
            parametrization=param, inverse=inv,
        )

    if name == "shear2" and mask.name == "halfplane_strip":
        lo, hi = float(mask.params["lo"]), float(mask.params["hi"])

        # orbits are vertical lines {xi1 = const != 0}; C = {(r, 0)}
        def param(coords):
            coords = np.atleast_2d(coords)
            out = np.zeros((len(coords), 2))
            out[:, 0] = coords[:, 0]
            return out

        def inv(xis):
            xis = np.atleast_2d(xis)
            _require_offsingular(xis[:, 0])
            s = xis[:, 1] / xis[:, 0]
            return xis[:, :1].copy(), s[:, None]

        return TransversalModel(
            name="horizontal_axis", m=1,
            domain=(("line", lo, hi),),
            parametrization=param, inverse=inv,
        )

    raise ValueError(
        f"no closed-form transversal for ({name}, {mask.name}); "
        "orbit space may be non-regular"
    )


def _require_offsingular(vals: np.ndarray, floor: float = 1e-300) -> None:
    if np.any(np.abs(vals) <= floor):
        raise ValueError("point lies on the singular set of the transversal")


def orbit_measure_integral(
    g: GroupModel,
    xi,
    f: SpectralFunction,
    q: QuadratureRule,
) -> float:
    """Integral of |f|^2 over the orbit of xi against the pushforward of
    Haar measure: sum_i w_i |f(xi.h_i)|^2.  Off-grid points contribute 0."""
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    imgs = np.einsum("mij,i->mj", q.matrices, xi)
    vals = evaluate_offgrid(f, imgs)
    return float(np.sum(q.weights * np.abs(vals) ** 2))


def analyze_orbit(
    g: GroupModel,
    xi,
    eps: float = 0.05,
    transversal: TransversalModel | None = None,
) -> OrbitReport:
    """Assemble an OrbitReport for one frequency point."""
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    probe = probe_epsilon_stabilizer(g, xi, eps)
    compact_axes = all(ax.kind != "line" for ax in g.axes)
    if not probe["bounded"]:
        cls = "noncompact"
    elif compact_axes:
        cls = "compact_nontrivial"
    elif probe["bounding_radius"] <= 0.0:
        cls = "trivial"
    else:
        # bounded hits beyond the innermost shell: cannot distinguish a small
        # compact stabilizer from epsilon-slack around a trivial one
        cls = "trivial" if probe["bounding_radius"] < 10 * eps else "undetermined"
    coord = None
    chart = "none"
    if transversal is not None:
        coords, hcoords = transversal.split(g, xi[None, :])
        coord = coords[0]
        chart = (
            f"xi = c.h with c in {transversal.name}, "
            f"h at chart {np.round(hcoords[0], 6).tolist()}"
        )
    return OrbitReport(
        representative=xi,
        stabilizer_class=cls,
        epsilon_used=eps,
        transversal_coord=coord,
        chart_of_orbit=chart,
    )
