"""Shared seed profiles and builders for the test suite."""

import numpy as np

from calwave import SpectralFunction, UniformGrid


def logshell(center, width):
    """Radial profile exp(-((ln r - ln center)/width)^2), zero at the origin."""

    def fn(pts):
        r = np.linalg.norm(np.atleast_2d(pts), axis=1)
        out = np.zeros(len(r))
        pos = r > 0
        out[pos] = np.exp(-(((np.log(r[pos]) - np.log(center)) / width) ** 2))
        return out

    return fn


def tensor_logshell(mu, width):
    """Product over axes of exp(-((ln|xi_j| - mu)/width)^2); vanishes on axes."""

    def fn(pts):
        pts = np.atleast_2d(pts)
        out = np.ones(len(pts))
        for j in range(pts.shape[1]):
            a = np.abs(pts[:, j])
            col = np.zeros(len(pts))
            pos = a > 0
            col[pos] = np.exp(-(((np.log(a[pos]) - mu) / width) ** 2))
            out *= col
        return out

    return fn


def radial_bump(center, width):
    def fn(pts):
        r = np.linalg.norm(np.atleast_2d(pts), axis=1)
        return np.exp(-(((r - center) / width) ** 2))

    return fn


def shear_scale_cone_seed(center=2.0, scale_width=0.7, ray_width=0.4,
                          ray_cut=0.9):
    """Tensor seed in the (ln|xi1|, xi2/xi1) coordinates of the cone."""

    def fn(pts):
        pts = np.atleast_2d(pts)
        x = np.abs(pts[:, 0])
        out = np.zeros(len(pts))
        ok = x > 0
        u = np.zeros(len(pts))
        u[ok] = pts[ok, 1] / pts[ok, 0]
        out[ok] = (
            np.exp(-(((np.log(x[ok]) - np.log(center)) / scale_width) ** 2))
            * np.exp(-((u[ok] / ray_width) ** 2))
            * (np.abs(u[ok]) < ray_cut)
        )
        return out

    return fn


def spectral(grid_shape, extent, fn, mask):
    grid = UniformGrid.from_extent(grid_shape, extent)
    return SpectralFunction.from_callable(grid, fn, mask)
