"""Regular grids, volumes and images on them."""

from dataclasses import dataclass
import numpy as np


def _centers(lo, hi, n):
    # cell centers lo + (0.5 + i) * delta, reproduced with this exact formula
    delta = (hi - lo) / n
    return lo + (0.5 + np.arange(n)) * delta


@dataclass(frozen=True)
class Grid3D:
    """Axis-aligned box split into Nx*Ny*Nz cells, identified by centers."""

    extents: tuple  # ((x1, x2), (y1, y2), (z1, z2))
    dims: tuple  # (Nx, Ny, Nz)

    def __post_init__(self):
        if len(self.extents) != 3 or len(self.dims) != 3:
            raise ValueError("need three extent pairs and three dims")
        for (lo, hi), n in zip(self.extents, self.dims):
            if not lo < hi:
                raise ValueError(f"inverted extent [{lo}, {hi}]")
            if n < 1:
                raise ValueError("dims must be >= 1")
        object.__setattr__(self, "extents", tuple((float(a), float(b)) for a, b in self.extents))
        object.__setattr__(self, "dims", tuple(int(n) for n in self.dims))

    @property
    def spacing(self):
        return tuple((hi - lo) / n for (lo, hi), n in zip(self.extents, self.dims))

    def centers(self, axis):
        (lo, hi), n = self.extents[axis], self.dims[axis]
        return _centers(lo, hi, n)

    def center_mesh(self):
        """Cell-center coordinates, shape (Nx, Ny, Nz, 3)."""
        xs, ys, zs = (self.centers(i) for i in range(3))
        X, Y, Z = np.meshgrid(xs, ys, zs, indexing="ij")
        return np.stack([X, Y, Z], axis=-1)

    @property
    def cell_volume(self):
        dx, dy, dz = self.spacing
        return dx * dy * dz

    def plane_grid(self):
        """The shared (xi, z) projection grid: y- and z-extents and dims."""
        return Grid2D((self.extents[1], self.extents[2]), (self.dims[1], self.dims[2]))


@dataclass(frozen=True)
class Grid2D:
    """2D counterpart of Grid3D, used for projections and trace fields."""

    extents: tuple  # ((u1, u2), (v1, v2))
    dims: tuple  # (N1, N2)

    def __post_init__(self):
        if len(self.extents) != 2 or len(self.dims) != 2:
            raise ValueError("need two extent pairs and two dims")
        for (lo, hi), n in zip(self.extents, self.dims):
            if not lo < hi:
                raise ValueError(f"inverted extent [{lo}, {hi}]")
            if n < 1:
                raise ValueError("dims must be >= 1")
        object.__setattr__(self, "extents", tuple((float(a), float(b)) for a, b in self.extents))
        object.__setattr__(self, "dims", tuple(int(n) for n in self.dims))

    @property
    def spacing(self):
        return tuple((hi - lo) / n for (lo, hi), n in zip(self.extents, self.dims))

    def centers(self, axis):
        (lo, hi), n = self.extents[axis], self.dims[axis]
        return _centers(lo, hi, n)

    @property
    def cell_area(self):
        du, dv = self.spacing
        return du * dv


def make_grid(extents, dims):
    """Build a Grid3D; extents = ((x1,x2),(y1,y2),(z1,z2)), dims = (Nx,Ny,Nz)."""
    return Grid3D(tuple(extents), tuple(dims))


@dataclass
class Volume3D:
    """Scalar field on a Grid3D; values indexed [ix, iy, iz]."""

    grid: Grid3D
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.dims:
            raise ValueError(
                f"value shape {self.values.shape} does not match grid dims {self.grid.dims}"
            )


@dataclass
class Image2D:
    """Scalar field on a Grid2D; values indexed [i1, i2]."""

    grid: Grid2D
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.dims:
            raise ValueError(
                f"value shape {self.values.shape} does not match grid dims {self.grid.dims}"
            )
