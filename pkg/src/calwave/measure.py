"""Measure disintegration over dual orbits: pseudo-images, the
Radon-Nikodym factor kappa and its cocycle law, and the orbit-space mass
test for admissible vectors."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .calderon import orbit_integral_field
from .groups import GroupModel, QuadratureRule
from .orbits import TransversalModel
from .spectral import BandMask, SpectralFunction, UniformGrid, _interpolate

MU_FLOOR = 1e-12


# ---------------------------------------------------------------------------
# pseudo-image of the grid measure on the orbit space


@dataclass
class OrbitWeight:
    """Per-bin mass of the pseudo-image measure on transversal coordinates."""

    transversal: TransversalModel
    axes: tuple  # per coordinate: ("discrete", values) or ("line", edges)
    weights: dict
    failures: int
    checked: int

    @property
    def total(self) -> float:
        return float(sum(self.weights.values()))

    def keys_of(self, coords: np.ndarray) -> list[tuple]:
        coords = np.atleast_2d(coords)
        keys = []
        for row in coords:
            key = []
            for j, ax in enumerate(self.axes):
                if ax[0] == "discrete":
                    vals = np.asarray(ax[1])
                    key.append(float(vals[np.argmin(np.abs(vals - row[j]))]))
                else:
                    edges = ax[1]
                    k = int(np.clip(np.searchsorted(edges, row[j]) - 1,
                                    0, len(edges) - 2))
                    key.append(k)
            keys.append(tuple(key))
        return keys

    def center_of(self, key: tuple) -> np.ndarray:
        out = []
        for j, ax in enumerate(self.axes):
            if ax[0] == "discrete":
                out.append(key[j])
            else:
                edges = ax[1]
                out.append(0.5 * (edges[key[j]] + edges[key[j] + 1]))
        return np.asarray(out, dtype=float)

    def to_json(self) -> dict:
        return {
            "total": self.total,
            "bins": [
                {"coord": list(map(float, self.center_of(k))), "weight": w}
                for k, w in sorted(self.weights.items())
            ],
            "inverse_failures": self.failures,
        }


def _split_with_fallback(
    transversal: TransversalModel, pts: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized transversal inverse with per-point failure tracking."""
    try:
        coords, hcoords = transversal.inverse(pts)
        ok = np.ones(len(pts), dtype=bool)
        return coords, hcoords, ok
    except ValueError:
        pass
    m = transversal.m
    coords = np.zeros((len(pts), m))
    k = None
    ok = np.zeros(len(pts), dtype=bool)
    hlist = []
    for i, p in enumerate(pts):
        try:
            c, h = transversal.inverse(p[None, :])
        except ValueError:
            hlist.append(None)
            continue
        coords[i] = c[0]
        hlist.append(h[0])
        ok[i] = True
        k = len(h[0])
    hcoords = np.zeros((len(pts), k or 1))
    for i, h in enumerate(hlist):
        if h is not None:
            hcoords[i] = h
    return coords, hcoords, ok


def _coordinate_axes(
    transversal: TransversalModel, coords: np.ndarray, bins: int
) -> tuple:
    axes = []
    for j, dom in enumerate(transversal.domain):
        if dom[0] == "discrete":
            axes.append(("discrete", tuple(dom[1])))
        else:
            lo, hi = dom[1], dom[2]
            if not np.isfinite(lo):
                lo = float(np.min(coords[:, j]))
            if not np.isfinite(hi):
                hi = float(np.max(coords[:, j])) * (1 + 1e-12)
            axes.append(("line", np.linspace(lo, hi, bins + 1)))
    return tuple(axes)


def pseudo_image(
    g: GroupModel,
    phi: SpectralFunction,
    mask: BandMask,
    transversal: TransversalModel,
    q: QuadratureRule | None = None,
    bins: int = 32,
) -> OrbitWeight:
    """Bin the grid mass phi(xi) d(xi) by the transversal coordinate of
    xi's orbit.  Binning partitions the masked grid, so total mass is
    conserved exactly."""
    pts = phi.grid.points()
    sel = mask(pts)
    if not sel.any():
        raise ValueError("empty mask after null guard")
    masked = pts[sel]
    masses = np.clip(phi.values.ravel()[sel].real, 0.0, None) * phi.grid.cell_volume
    coords, _, ok = _split_with_fallback(transversal, masked)
    failures = int((~ok).sum())
    if failures > 0.01 * len(masked):
        raise ValueError(
            f"transversal inverse failed at {failures}/{len(masked)} masked points"
        )
    axes = _coordinate_axes(transversal, coords[ok], bins)
    ow = OrbitWeight(
        transversal=transversal, axes=axes, weights={},
        failures=failures, checked=len(masked),
    )
    keys = ow.keys_of(coords[ok])
    for key, m in zip(keys, masses[ok]):
        ow.weights[key] = ow.weights.get(key, 0.0) + float(m)
    return ow


# ---------------------------------------------------------------------------
# the measure mu and the Radon-Nikodym factor kappa


@dataclass
class MuField:
    """The measure mu(B) = int_X phi(xi) |{h : xi.h in B}| d(xi), stored as
    mass per cell of a frequency grid."""

    grid: UniformGrid
    density: np.ndarray  # mass per cell, shape = grid.shape


def build_mu_field(
    g: GroupModel,
    phi: SpectralFunction,
    q: QuadratureRule,
    grid: UniformGrid | None = None,
) -> MuField:
    """Pull-back evaluation of the mu density.

    Each node h_i pushes phi(xi) d(xi) forward to the density
    phi(eta . h_i^{-1}) / |det h_i|; summing the pull-backs over the rule
    avoids the lattice-aliasing combs a particle deposit would produce."""
    grid = grid or phi.grid
    pts = grid.points()
    density = np.zeros(len(pts))
    for i in range(len(q)):
        hinv = np.linalg.inv(q.matrices[i])
        det = abs(np.linalg.det(q.matrices[i]))
        vals = _interpolate(phi, pts @ hinv)[0]
        density += q.weights[i] / det * np.clip(vals.real, 0.0, None)
    return MuField(grid=grid, density=(density * grid.cell_volume).reshape(grid.shape))


def kappa_estimate(mu: MuField, xi, box_factor: float = 4.0) -> float:
    """Raw estimate of d(lambda)/d(mu) at xi: Lebesgue mass over mu-mass of a
    box of ``box_factor`` grid spacings around xi (fractional cell overlap)."""
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    grid = mu.grid
    mass = mu.density
    lebesgue = 1.0
    for ax in range(grid.d):
        half = 0.5 * box_factor * grid.spacing[ax]
        lebesgue *= 2.0 * half
        centers = grid.axes()[ax]
        dx = grid.spacing[ax]
        overlap = np.clip(
            np.minimum(centers + dx / 2, xi[ax] + half)
            - np.maximum(centers - dx / 2, xi[ax] - half),
            0.0, dx,
        ) / dx
        mass = np.tensordot(overlap, mass, axes=(0, 0))
    mass = float(mass)
    if mass <= MU_FLOOR:
        raise ValueError("mu mass below floor near the requested point")
    return lebesgue / mass


# ---------------------------------------------------------------------------
# disintegration


@dataclass
class Disintegration:
    """A numerical measure decomposition d(lambda) = d(beta_O) d(lambda-bar).

    ``kappa_constants`` holds one orbit constant per transversal bin; kappa
    at an arbitrary point is extended along orbits by the cocycle law
    kappa(c.h) = kappa(c) Delta_G(h)^{-1}.
    """

    g: GroupModel
    mask: BandMask
    transversal: TransversalModel
    orbit_weight: OrbitWeight
    mu: MuField = field(repr=False)
    phi: SpectralFunction = field(repr=False)
    kappa_constants: dict = field(repr=False)
    total_orbit_mass: float = 0.0

    def kappa(self, xis) -> np.ndarray:
        xis = np.atleast_2d(np.asarray(xis, dtype=float))
        coords, hcoords = self.transversal.inverse(xis)
        keys = self.orbit_weight.keys_of(coords)
        consts = np.array([self.kappa_constants[k] for k in keys])
        dG = self.g.modular_G(self.g.chart(hcoords))
        return consts / dG

    def to_json(self) -> dict:
        return {
            "total_orbit_mass": self.total_orbit_mass,
            "bins": self.orbit_weight.to_json()["bins"],
            "kappa_constants": [
                {"bin_center": list(map(float, self.orbit_weight.center_of(k))),
                 "constant": v}
                for k, v in sorted(self.kappa_constants.items())
            ],
        }


def build_disintegration(
    g: GroupModel,
    phi: SpectralFunction,
    mask: BandMask,
    transversal: TransversalModel,
    q: QuadratureRule,
    bins: int = 32,
    kappa_samples: int = 1500,
    rng: np.random.Generator | None = None,
) -> Disintegration:
    """Assemble the pseudo-image, the mu field, and per-bin kappa constants.

    Constants are medians of cocycle-corrected raw estimates
    kappa_raw(xi) * Delta_G(h(xi)) over sampled points of each bin.
    """
    rng = rng or np.random.default_rng(0)
    ow = pseudo_image(g, phi, mask, transversal, q, bins=bins)
    mu = build_mu_field(g, phi, q)
    pts = phi.grid.points()
    sel = mask.interior(pts)
    masked = pts[sel]
    if len(masked) > kappa_samples:
        masked = masked[rng.choice(len(masked), size=kappa_samples, replace=False)]
    coords, hcoords, ok = _split_with_fallback(transversal, masked)
    dG = g.modular_G(g.chart(hcoords))
    keys = ow.keys_of(coords)
    per_bin: dict = {}
    for i in range(len(masked)):
        if not ok[i]:
            continue
        try:
            raw = kappa_estimate(mu, masked[i])
        except ValueError:
            continue
        per_bin.setdefault(keys[i], []).append(raw * float(dG[i]))
    constants = {k: float(np.median(v)) for k, v in per_bin.items()}
    for k in ow.weights:
        constants.setdefault(k, float("nan"))
    return Disintegration(
        g=g, mask=mask, transversal=transversal, orbit_weight=ow, mu=mu,
        phi=phi, kappa_constants=constants, total_orbit_mass=ow.total,
    )


def verify_disintegration(
    g: GroupModel,
    disint: Disintegration,
    f: SpectralFunction,
    q: QuadratureRule,
) -> dict:
    """Check int f d(lambda) = sum_bins weight * int_O f d(beta_O) where the
    orbit measures are normalized by the phi-mass each orbit carries."""
    pts = f.grid.points()
    sel = disint.mask(pts)
    cellvol = f.grid.cell_volume
    lhs = float(np.sum(np.clip(f.values.ravel()[sel].real, 0.0, None)) * cellvol)
    # kappa along the orbit of a bin representative c: the bin constant
    # cancels in the normalized ratio, leaving the Delta_G^{-1} profile
    kprofile = q.deltas / q.modulars  # Delta_G(h_i)^{-1}
    rhs = 0.0
    skipped = 0.0
    mu_of_phi = disint.mu  # phi-deposited measure, reused for normalization
    for key, w in disint.orbit_weight.weights.items():
        if w <= 0:
            continue
        c = disint.transversal.parametrization(
            disint.orbit_weight.center_of(key)[None, :]
        )[0]
        imgs = np.einsum("mij,i->mj", q.matrices, c)
        fv, inside = _interpolate(f, imgs)
        fv = np.where(inside & disint.mask(imgs), fv.real, 0.0)
        phi_orbit = _phi_on_orbit(disint, imgs, inside)
        denom = float(np.sum(q.weights * kprofile * phi_orbit))
        if denom <= MU_FLOOR:
            skipped += w
            continue
        rhs += w * float(np.sum(q.weights * kprofile * np.clip(fv, 0.0, None))) / denom
    rel_err = abs(lhs - rhs) / lhs if lhs > 0 else abs(rhs)
    return {"lhs": lhs, "rhs": rhs, "rel_err": rel_err, "skipped_weight": skipped}


def _phi_on_orbit(disint: Disintegration, imgs: np.ndarray,
                  inside: np.ndarray) -> np.ndarray:
    """phi sampled along an orbit; the orbit measure is normalized by the
    phi-mass the orbit carries so bins integrate against unit-mass fibers."""
    vals, ok = _interpolate(disint.phi, imgs)
    return np.where(ok & disint.mask(imgs), np.clip(vals.real, 0.0, None), 0.0)


def phi_decomposition_identity(
    g: GroupModel,
    phi: SpectralFunction,
    f: SpectralFunction,
    q: QuadratureRule,
    mask: BandMask | None = None,
) -> dict:
    """Check int f d(lambda) = int phi/Phi * int_H f(xi.h) delta(h)
    Delta_H(h)^{-1} dh d(lambda), with Phi(xi) = int_H phi(xi.h) dh."""
    mask = mask or phi.mask
    pts = phi.grid.points()
    sel = mask(pts)
    cellvol = phi.grid.cell_volume
    fv = np.clip(f.values.ravel()[sel].real, 0.0, None)
    lhs = float(np.sum(fv) * cellvol)
    phi_l1, _ = orbit_integral_field(g, phi, pts[sel], q, power=1.0)
    if np.any(phi_l1 <= MU_FLOOR):
        raise ValueError("Phi floor violation: phi not weakly admissible here")
    inner = np.zeros(sel.sum())
    masked = pts[sel]
    for i in range(len(q)):
        imgs = masked @ q.matrices[i]
        vals, inside = _interpolate(f, imgs)
        vals = np.where(inside & mask(imgs), np.clip(vals.real, 0.0, None), 0.0)
        inner += q.weights[i] * q.deltas[i] / q.modulars[i] * vals
    phiv = np.clip(phi.values.ravel()[sel].real, 0.0, None)
    rhs = float(np.sum(phiv / phi_l1 * inner) * cellvol)
    rel_err = abs(lhs - rhs) / lhs if lhs > 0 else abs(rhs)
    return {"lhs": lhs, "rhs": rhs, "rel_err": rel_err}


# ---------------------------------------------------------------------------
# orbit-space mass (the unimodular admissibility criterion)


@dataclass
class OrbitSpaceMass:
    value: float
    finite: bool
    trace: list  # (grid_scale, mass) pairs inspected for divergence

    def to_json(self) -> dict:
        return {
            "value": None if not self.finite else self.value,
            "finite": self.finite,
            "trace": [[s, m] for s, m in self.trace],
        }


def orbit_space_mass(
    g: GroupModel,
    mask: BandMask,
    transversal: TransversalModel,
    admissible_phi: SpectralFunction,
    q: QuadratureRule,
    rebuild: Callable[[float], SpectralFunction] | None = None,
    growth_limit: float = 0.5,
) -> OrbitSpaceMass:
    """Estimate the orbit-space mass as ||phi||^2 for an admissible phi.

    Divergence is detected heuristically: when ``rebuild`` supplies the
    admissible vector on a 2x-enlarged grid and the mass grows by more than
    ``growth_limit``, the mass is flagged infinite with the trace recorded.
    """
    if not g.is_unimodular_G():
        raise ValueError("criterion not applicable: G is not unimodular")
    pts = admissible_phi.grid.points()
    sel = mask(pts)
    cellvol = admissible_phi.grid.cell_volume
    mass = float(np.sum(np.abs(admissible_phi.values.ravel()[sel]) ** 2) * cellvol)
    trace = [(1.0, mass)]
    if rebuild is not None:
        phi2 = rebuild(2.0)
        pts2 = phi2.grid.points()
        sel2 = mask(pts2)
        mass2 = float(
            np.sum(np.abs(phi2.values.ravel()[sel2]) ** 2) * phi2.grid.cell_volume
        )
        trace.append((2.0, mass2))
        if mass > 0 and abs(mass2 - mass) > growth_limit * mass:
            return OrbitSpaceMass(value=math.inf, finite=False, trace=trace)
    return OrbitSpaceMass(value=mass, finite=True, trace=trace)
