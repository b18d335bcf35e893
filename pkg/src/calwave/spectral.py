"""Frequency grids, invariant band masks and sampled Plancherel-domain functions."""

from __future__ import annotations

import io
import json
import struct
from dataclasses import dataclass, field, replace
from itertools import product
from typing import Callable

import numpy as np

from .groups import GroupModel, QuadratureRule

MAGIC = b"CWSF1\n"


@dataclass(frozen=True)
class UniformGrid:
    """A uniform rectangular grid, used both in space and in frequency."""

    shape: tuple[int, ...]
    spacing: tuple[float, ...]
    origin: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "shape", tuple(int(n) for n in self.shape))
        object.__setattr__(self, "spacing", tuple(float(s) for s in self.spacing))
        object.__setattr__(self, "origin", tuple(float(o) for o in self.origin))
        if any(n < 2 for n in self.shape):
            raise ValueError("grid needs at least 2 samples per axis")
        if any(s <= 0 for s in self.spacing):
            raise ValueError("grid spacing must be positive")

    @property
    def d(self) -> int:
        return len(self.shape)

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    def axes(self) -> list[np.ndarray]:
        return [
            self.origin[i] + np.arange(self.shape[i]) * self.spacing[i]
            for i in range(self.d)
        ]

    def points(self) -> np.ndarray:
        """All grid points as an (N, d) array in C order."""
        mesh = np.meshgrid(*self.axes(), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    @classmethod
    def from_extent(cls, shape, extent) -> "UniformGrid":
        """Grid covering [lo, hi) per axis with the given sample counts."""
        shape = tuple(int(n) for n in np.atleast_1d(shape))
        extent = np.atleast_2d(np.asarray(extent, dtype=float))
        spacing = tuple((hi - lo) / n for (lo, hi), n in zip(extent, shape))
        origin = tuple(extent[:, 0])
        return cls(shape=shape, spacing=spacing, origin=origin)

    def close_to(self, other: "UniformGrid", tol: float = 1e-9) -> bool:
        return (
            self.shape == other.shape
            and np.allclose(self.spacing, other.spacing, rtol=tol, atol=tol)
            and np.allclose(self.origin, other.origin, rtol=tol, atol=tol)
        )


# FrequencyGrid and the spatial grid share the same layout.
FrequencyGrid = UniformGrid


def default_null_guard(grid: UniformGrid) -> float:
    """Radius below which points near singular sets are dropped from statistics."""
    return 2.0 * max(grid.spacing)


@dataclass(frozen=True)
class BandMask:
    """An H-invariant frequency band X, as a vectorized point predicate.

    ``predicate`` is the support set (where spectral values may live).
    ``interior_predicate`` additionally keeps ``null_guard`` away from the
    band edges and singular sets; "a.e." statistics sample there, since
    grid interpolation is meaningless within a cell of the boundary.
    """

    name: str
    params: dict
    null_guard: float
    predicate: Callable[[np.ndarray], np.ndarray] = field(repr=False, default=None)
    interior_predicate: Callable[[np.ndarray], np.ndarray] = field(
        repr=False, default=None
    )

    @property
    def descriptor(self) -> str:
        inner = ", ".join(f"{k}={v}" for k, v in sorted(self.params.items()))
        return f"{self.name}({inner}); null_guard={self.null_guard:g}"

    def __call__(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        return self.predicate(pts)

    def interior(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        if self.interior_predicate is None:
            return self.predicate(pts)
        return self.interior_predicate(pts)

    def to_json(self) -> dict:
        return {"name": self.name, "params": self.params, "null_guard": self.null_guard}


def mask_catalog(name: str, params: dict | None = None, null_guard: float = 0.0) -> BandMask:
    """Catalog of band masks: full, annulus, halfplane_strip, quadrant, cone."""
    params = dict(params or {})
    eta = float(null_guard)

    if name == "full":
        def pred(pts):
            return np.linalg.norm(pts, axis=1) > eta

        inner = pred

    elif name == "annulus":
        r1, r2 = float(params["r1"]), float(params["r2"])

        def pred(pts):
            r = np.linalg.norm(pts, axis=1)
            return (r >= r1) & (r <= r2) & (r > eta)

        def inner(pts):
            r = np.linalg.norm(pts, axis=1)
            return (r >= r1 + eta) & (r <= r2 - eta) & (r > eta)

    elif name == "halfplane_strip":
        lo, hi = float(params["lo"]), float(params["hi"])
        two_sided = bool(params.get("two_sided", False))

        def pred(pts):
            x = np.abs(pts[:, 0]) if two_sided else pts[:, 0]
            return (x > lo) & (x < hi) & (np.abs(pts[:, 0]) > eta)

        def inner(pts):
            x = np.abs(pts[:, 0]) if two_sided else pts[:, 0]
            return (x > lo + eta) & (x < hi - eta) & (np.abs(pts[:, 0]) > eta)

    elif name == "quadrant":
        signs = params.get("signs", "++")
        sign_vec = np.array([1.0 if ch == "+" else -1.0 for ch in signs])

        def pred(pts):
            return np.all(pts * sign_vec > eta, axis=1)

        inner = pred

    elif name == "cone":
        slope = float(params["slope"])
        axis = int(params.get("axis", 0))

        def pred(pts):
            x = np.abs(pts[:, axis])
            rest = np.delete(pts, axis, axis=1)
            return (x > eta) & (np.linalg.norm(rest, axis=1) <= slope * x - eta)

        def inner(pts):
            x = np.abs(pts[:, axis])
            rest = np.delete(pts, axis, axis=1)
            return (x > 2 * eta) & (np.linalg.norm(rest, axis=1)
                                    <= slope * x - 2 * eta)

    else:
        raise ValueError(f"unknown mask {name!r}")

    return BandMask(name=name, params=params, null_guard=eta, predicate=pred,
                    interior_predicate=inner)


def union_mask(masks: list[BandMask]) -> BandMask:
    def pred(pts):
        out = np.zeros(len(pts), dtype=bool)
        for m in masks:
            out |= m(pts)
        return out

    def inner(pts):
        out = np.zeros(len(pts), dtype=bool)
        for m in masks:
            out |= m.interior(pts)
        return out

    return BandMask(
        name="union",
        params={"of": [m.to_json() for m in masks]},
        null_guard=min(m.null_guard for m in masks),
        predicate=pred,
        interior_predicate=inner,
    )


@dataclass
class SpectralFunction:
    """A Plancherel-domain function sampled on a grid, supported in a band."""

    grid: UniformGrid
    values: np.ndarray
    mask: BandMask

    def __post_init__(self):
        values = np.asarray(self.values, dtype=complex).reshape(self.grid.shape)
        keep = self.mask(self.grid.points()).reshape(self.grid.shape)
        self.values = np.where(keep, values, 0.0)

    @classmethod
    def from_callable(cls, grid: UniformGrid, fn, mask: BandMask) -> "SpectralFunction":
        vals = np.asarray(fn(grid.points()), dtype=complex).reshape(grid.shape)
        return cls(grid=grid, values=vals, mask=mask)

    def l2_norm(self) -> float:
        return float(
            np.sqrt(np.sum(np.abs(self.values) ** 2) * self.grid.cell_volume)
        )

    def with_values(self, values) -> "SpectralFunction":
        return SpectralFunction(grid=self.grid, values=values, mask=self.mask)

    def boundary_level(self) -> float:
        """Max |value| on the outermost cell shell; bounds unseen off-grid mass."""
        v = np.abs(self.values)
        level = 0.0
        for ax in range(v.ndim):
            level = max(
                level,
                float(np.max(np.take(v, 0, axis=ax))),
                float(np.max(np.take(v, -1, axis=ax))),
            )
        return level


def _interpolate(f: SpectralFunction, pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Multilinear interpolation; returns (values, inside-bbox flags)."""
    pts = np.atleast_2d(np.asarray(pts, dtype=float))
    grid = f.grid
    d = grid.d
    u = (pts - np.asarray(grid.origin)) / np.asarray(grid.spacing)
    nmax = np.asarray(grid.shape) - 1
    inside = np.all((u >= 0.0) & (u <= nmax), axis=1)
    u = np.clip(u, 0.0, nmax)
    i0 = np.minimum(u.astype(np.int64), np.asarray(grid.shape) - 2)
    frac = u - i0
    out = np.zeros(len(pts), dtype=complex)
    for corner in product((0, 1), repeat=d):
        w = np.ones(len(pts))
        idx = []
        for ax, c in enumerate(corner):
            w = w * (frac[:, ax] if c else 1.0 - frac[:, ax])
            idx.append(i0[:, ax] + c)
        out += w * f.values[tuple(idx)]
    out[~inside] = 0.0
    return out, inside


def evaluate_offgrid(f: SpectralFunction, xi) -> np.ndarray | complex:
    """Multilinear interpolation of f at arbitrary points; 0 outside the
    grid bounding box and off the support mask."""
    xi = np.asarray(xi, dtype=float)
    single = xi.ndim == 1
    pts = np.atleast_2d(xi)
    vals, _ = _interpolate(f, pts)
    vals = np.where(f.mask(pts), vals, 0.0)
    return complex(vals[0]) if single else vals


def l2_norm(f: SpectralFunction) -> float:
    return f.l2_norm()


def _without_null_guard(mask: BandMask) -> BandMask:
    """The same mask with the singular-set guard removed, where possible.

    Invariance must be judged against the guard-free set: an image landing
    inside the guard zone is a measure-zero-neighborhood artifact, not a
    genuine violation.
    """
    if mask.name == "union":
        members = [
            _without_null_guard(mask_catalog(m["name"], m["params"], m["null_guard"]))
            for m in mask.params.get("of", [])
        ]
        return union_mask(members) if members else mask
    try:
        return mask_catalog(mask.name, mask.params, 0.0)
    except ValueError:
        return mask


def check_mask_invariance(
    g: GroupModel,
    mask: BandMask,
    grid: UniformGrid,
    q: QuadratureRule,
    n_samples: int = 400,
    rng: np.random.Generator | None = None,
) -> dict:
    """Statistical H-invariance check of a mask on a grid.

    Samples masked grid points and quadrature nodes, and checks that the
    images xi.h that stay inside the grid bounding box still satisfy the
    guard-free mask.  Returns the agreement fraction and a violation count.
    """
    rng = rng or np.random.default_rng(0)
    bare = _without_null_guard(mask)
    pts = grid.points()
    masked = pts[mask.interior(pts)]
    if len(masked) == 0:
        raise ValueError("empty mask after null guard")
    take = rng.choice(len(masked), size=min(n_samples, len(masked)), replace=False)
    xis = masked[take]
    node_take = rng.choice(len(q), size=min(64, len(q)), replace=False)
    lo = np.asarray(grid.origin)
    hi = lo + (np.asarray(grid.shape) - 1) * np.asarray(grid.spacing)
    agree = 0
    total = 0
    for i in node_take:
        imgs = xis @ q.matrices[i]
        ongrid = np.all((imgs >= lo) & (imgs <= hi), axis=1)
        if not ongrid.any():
            continue
        same = bare(imgs[ongrid])
        total += int(ongrid.sum())
        agree += int(same.sum())
    fraction = agree / total if total else 1.0
    return {"agreement": fraction, "checked": total, "violations": total - agree}


# ---------------------------------------------------------------------------
# serialization: JSON header + little-endian float64 (re, im) payload


def save_spectral(path, f: SpectralFunction, kind: str = "spectral") -> None:
    header = {
        "kind": kind,
        "shape": list(f.grid.shape),
        "spacing": list(f.grid.spacing),
        "origin": list(f.grid.origin),
        "mask": f.mask.to_json(),
    }
    hbytes = json.dumps(header).encode()
    payload = np.empty(f.values.size * 2, dtype="<f8")
    flat = f.values.ravel()
    payload[0::2] = flat.real
    payload[1::2] = flat.imag
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<Q", len(hbytes)))
        fh.write(hbytes)
        fh.write(payload.tobytes())


def load_spectral(path) -> SpectralFunction:
    with open(path, "rb") as fh:
        magic = fh.read(len(MAGIC))
        if magic != MAGIC:
            raise ValueError(f"{path}: not a calwave spectral file")
        (hlen,) = struct.unpack("<Q", fh.read(8))
        header = json.loads(fh.read(hlen).decode())
        raw = np.frombuffer(fh.read(), dtype="<f8")
    grid = UniformGrid(
        shape=tuple(header["shape"]),
        spacing=tuple(header["spacing"]),
        origin=tuple(header["origin"]),
    )
    values = (raw[0::2] + 1j * raw[1::2]).reshape(grid.shape)
    m = header["mask"]
    mask = mask_catalog(m["name"], m["params"], m["null_guard"])
    return SpectralFunction(grid=grid, values=values, mask=mask)


def export_csv(path, f: SpectralFunction) -> None:
    """CSV export of 1D data or a 2D mid-row/mid-column slice pair."""
    axes = f.grid.axes()
    with open(path, "w") as fh:
        if f.grid.d == 1:
            fh.write("xi,re,im\n")
            for x, v in zip(axes[0], f.values):
                fh.write(f"{x:.12g},{v.real:.12g},{v.imag:.12g}\n")
        elif f.grid.d == 2:
            mid = f.grid.shape[1] // 2
            fh.write("axis,coord,re,im\n")
            for x, v in zip(axes[0], f.values[:, mid]):
                fh.write(f"row,{x:.12g},{v.real:.12g},{v.imag:.12g}\n")
            mid0 = f.grid.shape[0] // 2
            for y, v in zip(axes[1], f.values[mid0, :]):
                fh.write(f"col,{y:.12g},{v.real:.12g},{v.imag:.12g}\n")
        else:
            raise ValueError("CSV export supports 1D and 2D grids only")
