"""Scan geometry: drive parameters, angles and the receive-coil matrix."""

from dataclasses import dataclass, field
import numpy as np


def default_angles(count):
    """Equidistant angles l*pi/count for l = 0..count-1."""
    return tuple(l * np.pi / count for l in range(count))


@dataclass(frozen=True)
class ScanGeometry:
    """All parameters of a 3D FFL scan.

    The drive fields are cos(2*pi*f_i*t + phi_i) with integer cycle
    counts f_i per period, so the FFL trajectory closes after one period.
    ``h`` is the resolution parameter H_sat/G setting the kernel width.
    """

    angles: tuple
    gradient: float = 1.0
    amplitude1: float = 1.0
    amplitude2: float = 1.0
    freq1: int = 201
    freq2: int = 202
    phase1: float = np.pi / 2
    phase2: float = np.pi / 2
    period: float = 1.0
    samples_per_angle: int = 400_000
    h: float = 1e-2
    mu0: float = 1.25663706212e-6
    moment: float = 1.0
    sensitivity: np.ndarray = field(default_factory=lambda: np.eye(3))

    def __post_init__(self):
        object.__setattr__(self, "angles", tuple(float(a) for a in self.angles))
        if self.gradient <= 0:
            raise ValueError("gradient must be positive")
        if self.h <= 0:
            raise ValueError("h must be positive")
        if self.samples_per_angle < 2:
            raise ValueError("need at least 2 samples per angle")
        ang = np.asarray(self.angles)
        if ang.size == 0:
            raise ValueError("need at least one angle")
        if np.any(ang < 0) or np.any(ang >= np.pi):
            raise ValueError("angles must lie in [0, pi)")
        if np.any(np.diff(ang) <= 0):
            raise ValueError("angles must be strictly increasing")
        P = np.asarray(self.sensitivity, dtype=float)
        if P.shape != (3, 3):
            raise ValueError("sensitivity must be a 3x3 matrix")
        if not np.all(np.isfinite(P)) or abs(np.linalg.det(P)) < 1e-300:
            raise ValueError("sensitivity matrix must be invertible")
        object.__setattr__(self, "sensitivity", P)

    @property
    def sensitivity_inv(self):
        return np.linalg.inv(self.sensitivity)

    def sample_times(self):
        """Sample times t_m = m*T/L, endpoint exclusive."""
        L = self.samples_per_angle
        return np.arange(L) * (self.period / L)
