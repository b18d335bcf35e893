"""FFT-based generalized wavelet analysis, synthesis and isometry checks.

Conventions: forward kernel e^{-2 pi i xi.x}, measure-weighted sums, so the
discrete transform matches the integral transform on band-limited signals.
For a spatial grid x_j = x0 + j dx (n samples) the companion frequency grid
is xi_q = (q - n//2) / (n dx), which is symmetric about 0 for even n.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .groups import GroupModel, QuadratureRule
from .spectral import BandMask, SpectralFunction, UniformGrid, evaluate_offgrid


def allpass_mask() -> BandMask:
    """Mask admitting every frequency (used for plain Fourier data)."""
    return BandMask(
        name="allpass", params={}, null_guard=0.0,
        predicate=lambda pts: np.ones(len(np.atleast_2d(pts)), dtype=bool),
    )


@dataclass
class Signal:
    """A sampled signal on a uniform spatial grid."""

    grid: UniformGrid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex).reshape(self.grid.shape)

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.values) ** 2) * self.grid.cell_volume))

    @classmethod
    def from_callable(cls, grid: UniformGrid, fn) -> "Signal":
        return cls(grid=grid, values=np.asarray(fn(grid.points())).reshape(grid.shape))


def frequency_grid_of(spatial: UniformGrid) -> UniformGrid:
    spacing = tuple(1.0 / (n * dx) for n, dx in zip(spatial.shape, spatial.spacing))
    origin = tuple(-(n // 2) * s for n, s in zip(spatial.shape, spacing))
    return UniformGrid(shape=spatial.shape, spacing=spacing, origin=origin)


def _phase(freq: UniformGrid, x0, sign: float) -> np.ndarray:
    """exp(sign * 2 pi i xi . x0) over the frequency grid."""
    out = np.ones(freq.shape, dtype=complex)
    for ax, xs in enumerate(freq.axes()):
        shape = [1] * freq.d
        shape[ax] = -1
        out = out * np.exp(sign * 2j * np.pi * xs * x0[ax]).reshape(shape)
    return out


def space_to_freq(f: Signal, mask: BandMask | None = None) -> SpectralFunction:
    """Discrete Fourier transform as a Riemann sum of the integral transform."""
    freq = frequency_grid_of(f.grid)
    fhat = np.fft.fftshift(np.fft.fftn(f.values)) * f.grid.cell_volume
    fhat = fhat * _phase(freq, f.grid.origin, -1.0)
    return SpectralFunction(grid=freq, values=fhat, mask=mask or allpass_mask())


def freq_to_space(fhat: SpectralFunction, spatial: UniformGrid) -> Signal:
    """Inverse of space_to_freq onto the given spatial grid."""
    if not frequency_grid_of(spatial).close_to(fhat.grid):
        raise ValueError("grid mismatch: frequency grid is not the dual of the "
                         "spatial grid")
    values = fhat.values * _phase(fhat.grid, spatial.origin, +1.0)
    out = np.fft.ifftn(np.fft.ifftshift(values)) / spatial.cell_volume
    return Signal(grid=spatial, values=out)


@dataclass
class WaveletCoefficients:
    """Samples of the wavelet transform on (translation grid) x (H nodes).

    ``planes[i]`` holds V f(., h_i) over the spatial grid; the left Haar
    measure factor w_i / delta(h_i) of G is applied in norms and synthesis,
    keeping the stored planes plain cross-correlations.
    """

    spatial_grid: UniformGrid
    q: QuadratureRule
    planes: np.ndarray = field(repr=False)  # (M,) + spatial shape

    def coefficient_norm(self) -> float:
        per_plane = np.sum(
            np.abs(self.planes.reshape(len(self.q), -1)) ** 2, axis=1
        ) * self.spatial_grid.cell_volume
        return float(np.sqrt(np.sum(self.q.weights / self.q.deltas * per_plane)))


def _check_compat(f: Signal, psi_hat: SpectralFunction) -> UniformGrid:
    freq = frequency_grid_of(f.grid)
    if not freq.close_to(psi_hat.grid):
        raise ValueError("grid mismatch: psi_hat must live on the dual grid of "
                         "the signal")
    return freq


def analyze(
    g: GroupModel,
    f: Signal,
    psi_hat: SpectralFunction,
    q: QuadratureRule,
) -> WaveletCoefficients:
    """V f(b, h) = <f, pi(b, h) psi> for b on the signal grid and h on the
    quadrature nodes, evaluated in frequency: the plane for node h is the
    inverse transform of fhat(xi) conj(delta(h)^{1/2} psi_hat(h^T xi))."""
    freq = _check_compat(f, psi_hat)
    fhat = space_to_freq(f)
    pts = freq.points()
    planes = np.empty((len(q),) + f.grid.shape, dtype=complex)
    for i in range(len(q)):
        kernel = np.conj(
            np.sqrt(q.deltas[i]) * evaluate_offgrid(psi_hat, pts @ q.matrices[i])
        ).reshape(freq.shape)
        planes[i] = freq_to_space(
            SpectralFunction(grid=freq, values=fhat.values * kernel,
                             mask=allpass_mask()),
            f.grid,
        ).values
    return WaveletCoefficients(spatial_grid=f.grid, q=q, planes=planes)


def coefficient_norm(w: WaveletCoefficients) -> float:
    return w.coefficient_norm()


def synthesize(
    g: GroupModel,
    w: WaveletCoefficients,
    psi_hat: SpectralFunction,
    q: QuadratureRule,
) -> Signal:
    """Weak-sense inversion: accumulates fhat_rec(xi) = sum_i (w_i/delta_i)
    FFT(plane_i)(xi) delta_i^{1/2} psi_hat(h_i^T xi) and inverts.  Equals the
    frame-operator image (multiplication by Phi in frequency); exact
    reconstruction iff psi is admissible."""
    if w.q is not q:
        if len(w.q) != len(q) or not np.allclose(w.q.nodes, q.nodes):
            raise ValueError("grid mismatch: coefficients carry a different "
                             "quadrature rule")
    freq = frequency_grid_of(w.spatial_grid)
    if not freq.close_to(psi_hat.grid):
        raise ValueError("grid mismatch: psi_hat must live on the dual grid of "
                         "the signal")
    pts = freq.points()
    acc = np.zeros(freq.shape, dtype=complex)
    for i in range(len(q)):
        plane_hat = space_to_freq(Signal(grid=w.spatial_grid, values=w.planes[i]))
        kernel = (
            np.sqrt(q.deltas[i]) * evaluate_offgrid(psi_hat, pts @ q.matrices[i])
        ).reshape(freq.shape)
        acc += q.weights[i] / q.deltas[i] * plane_hat.values * kernel
    return freq_to_space(
        SpectralFunction(grid=freq, values=acc, mask=allpass_mask()), w.spatial_grid
    )


def roundtrip(
    g: GroupModel,
    f: Signal,
    psi_hat: SpectralFunction,
    q: QuadratureRule,
) -> dict:
    """Streaming synthesize(analyze(f)) without materializing the planes.

    Mathematically identical to the two-step path: the composition is
    multiplication of fhat by Phi(xi) = sum_i w_i |psi_hat(xi.h_i)|^2, and
    the coefficient norm is sum |fhat|^2 Phi d(xi) by per-plane Parseval.
    """
    freq = _check_compat(f, psi_hat)
    fhat = space_to_freq(f)
    pts = freq.points()
    phi = np.zeros(len(pts))
    for i in range(len(q)):
        vals = evaluate_offgrid(psi_hat, pts @ q.matrices[i])
        phi += q.weights[i] * np.abs(vals) ** 2
    phi = phi.reshape(freq.shape)
    f_rec = freq_to_space(
        SpectralFunction(grid=freq, values=fhat.values * phi, mask=allpass_mask()),
        f.grid,
    )
    cellvol = freq.cell_volume
    coeff_norm = float(np.sqrt(np.sum(np.abs(fhat.values) ** 2 * phi) * cellvol))
    fnorm = f.norm()
    err = Signal(grid=f.grid, values=f_rec.values - f.values).norm()
    return {
        "f_rec": f_rec,
        "signal_norm": fnorm,
        "coefficient_norm": coeff_norm,
        "rel_l2_error": err / fnorm if fnorm > 0 else err,
        "isometry_ratio": coeff_norm / fnorm if fnorm > 0 else float("nan"),
    }
