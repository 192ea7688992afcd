"""Initial-condition bank and the built-in chemoattractant profile."""
from __future__ import annotations

import numpy as np
from scipy.special import ive

from ..errors import ConfigError
from ..grid import GridSpec, KineticField, ScalarField
from .io import read_field


def isotropic(grid: GridSpec) -> np.ndarray:
    return np.full(grid.shape, 1.0 / (2 * np.pi))


def two_mode(
    grid: GridSpec, a: float = 0.4, b: float = 0.3, c: float = 0.0, d: float = 0.0, theta0: float = 0.0
) -> np.ndarray:
    """(1 + a cos(2 pi x1) cos 2t + b cos(2 pi x2) sin 2t + c cos(2 pi x1) sin t
    + d cos 2(t - theta0)) / (2 pi).

    Unit mass for any amplitudes; pi-periodic in theta when ``c == 0``.
    """
    x1, x2, th = grid.mesh()
    cx = np.cos(2 * np.pi * x1)
    cy = np.cos(2 * np.pi * x2)
    f = (
        1.0
        + a * cx * grid.cos2_theta
        + b * cy * grid.sin2_theta
        + c * cx * grid.sin_theta
        + d * np.cos(2 * (th - theta0))
    )
    return np.broadcast_to(f, grid.shape) / (2 * np.pi)


def bump_profile(theta: np.ndarray, theta0: float, width: float) -> np.ndarray:
    """Nematic von Mises density exp(k cos 2(t - t0)) / (2 pi I0(k)), k = 1/width^2."""
    kappa = 1.0 / width**2
    return np.exp(kappa * (np.cos(2 * (theta - theta0)) - 1.0)) / (2 * np.pi * ive(0, kappa))


def bump(grid: GridSpec, theta0: float = 0.0, width: float = 0.5) -> np.ndarray:
    """Bump sampled on the theta nodes, rescaled to unit mass on the grid."""
    prof = bump_profile(grid.theta, theta0, width)
    prof = prof / (prof.sum() * grid.dtheta)
    return np.broadcast_to(prof, grid.shape).copy()


def initial_field(cfg) -> KineticField:
    g = cfg.grid
    if cfg.ic == "isotropic":
        vals = isotropic(g)
    elif cfg.ic == "two-mode":
        vals = two_mode(g, cfg.ic_a, cfg.ic_b, cfg.ic_c, cfg.ic_d, cfg.bump_theta0)
    elif cfg.ic == "bump":
        vals = bump(g, cfg.bump_theta0, cfg.bump_width)
    else:
        f = read_field(cfg.ic_file)
        if f.grid != g:
            raise ConfigError(f"ic_file grid {f.grid} does not match configured grid", "ic_file")
        return KineticField(g, f.values, 0.0)
    return KineticField(g, vals, 0.0)


def cosine_signal(grid: GridSpec, amplitude: float = 1.0) -> ScalarField:
    x1 = grid.x1[:, None]
    return ScalarField(grid, np.broadcast_to(amplitude * np.cos(2 * np.pi * x1), grid.xshape))
