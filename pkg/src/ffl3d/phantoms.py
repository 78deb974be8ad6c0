"""Analytic indicator phantoms evaluated at cell centers."""

import numpy as np

from .grids import Volume3D


def ball_phantom(grid, center=(0.0, 0.0, 0.0), radius=0.5):
    """Binary indicator of a ball (boundary inclusive)."""
    if radius <= 0:
        raise ValueError("radius must be positive")
    pts = grid.center_mesh()
    d2 = np.sum((pts - np.asarray(center, dtype=float)) ** 2, axis=-1)
    return Volume3D(grid, (d2 <= radius * radius).astype(float))


def cone_phantom(grid, apex=(0.6, 0.0, 0.0), base_center=(-0.6, 0.0, 0.0), base_radius=0.45):
    """Binary indicator of a solid cone with the given apex and base."""
    apex = np.asarray(apex, dtype=float)
    base = np.asarray(base_center, dtype=float)
    axis = base - apex
    height = np.linalg.norm(axis)
    if height == 0:
        raise ValueError("apex and base_center must differ")
    if base_radius <= 0:
        raise ValueError("base_radius must be positive")
    axis = axis / height
    pts = grid.center_mesh() - apex
    along = pts @ axis
    radial2 = np.sum(pts * pts, axis=-1) - along * along
    limit = base_radius * np.clip(along, 0.0, height) / height
    inside = (along >= 0) & (along <= height) & (radial2 <= limit * limit + 1e-300)
    return Volume3D(grid, inside.astype(float))
