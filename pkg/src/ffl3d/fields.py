"""Magnetic field models, FFL trajectories and the signal-frame transform."""

from dataclasses import dataclass
import numpy as np

_FFL_GEN = np.diag([0.0, -1.0, 1.0])  # gradient matrix of the theta=0 FFL field


def rotation_matrix(theta):
    """Counterclockwise rotation about the z-axis."""
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def e_theta(theta):
    return np.array([np.cos(theta), np.sin(theta), 0.0])


def e_theta_perp(theta):
    return np.array([-np.sin(theta), np.cos(theta), 0.0])


def e_theta_matrix(theta):
    """Frame matrix E_theta: rotation about z combined with a z flip.

    Orthogonal with determinant -1, so its inverse is its transpose.
    """
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, -1.0]])


def static_field(x, theta, gradient):
    """Static FFL field G * R_theta diag(0,-1,1) R_theta^T x.

    Vanishes exactly on the line spanned by e_theta.  ``x`` may have any
    leading batch shape (..., 3).
    """
    R = rotation_matrix(theta)
    M = gradient * (R @ _FFL_GEN @ R.T)
    return np.asarray(x, dtype=float) @ M.T


def drive_values(t, geom):
    """The two drive waveforms Lambda_i(t) = cos(2*pi*f_i*t + phi_i)."""
    t = np.asarray(t, dtype=float)
    l1 = np.cos(2.0 * np.pi * geom.freq1 * t + geom.phase1)
    l2 = np.cos(2.0 * np.pi * geom.freq2 * t + geom.phase2)
    return l1, l2


def applied_field(x, t, theta, geom):
    """Total field: static FFL field plus the two-axis drive.

    H = (A1*Lambda1(t) - G<x, e_theta_perp>) e_theta_perp
        + (-A2*Lambda2(t) + G*z) e_z
    """
    x = np.asarray(x, dtype=float)
    l1, l2 = drive_values(t, geom)
    ep = e_theta_perp(theta)
    xi = x @ ep
    c_perp = geom.amplitude1 * l1 - geom.gradient * xi
    c_z = -geom.amplitude2 * l2 + geom.gradient * x[..., 2]
    return np.multiply.outer(c_perp, ep) + np.multiply.outer(c_z, np.array([0.0, 0.0, 1.0]))


@dataclass(frozen=True)
class TrajectorySample:
    """FFL/plane intersection point in (xi, z) coordinates and its velocity."""

    t: np.ndarray
    r: np.ndarray
    v: np.ndarray


def ffl_trajectory(t, geom):
    """Lissajous trajectory r(t) = (A1*Lambda1/G, A2*Lambda2/G) with analytic velocity."""
    t = np.asarray(t, dtype=float)
    l1, l2 = drive_values(t, geom)
    G = geom.gradient
    r = np.stack([geom.amplitude1 * l1 / G, geom.amplitude2 * l2 / G], axis=-1)
    w1 = 2.0 * np.pi * geom.freq1
    w2 = 2.0 * np.pi * geom.freq2
    v = np.stack(
        [
            -geom.amplitude1 * w1 * np.sin(w1 * t + geom.phase1) / G,
            -geom.amplitude2 * w2 * np.sin(w2 * t + geom.phase2) / G,
        ],
        axis=-1,
    )
    return TrajectorySample(t=t, r=r, v=v)


def transform_signal(s, theta, geom):
    """Map raw coil voltages into the common scan frame.

    s_tilde = -(1/(m*mu0)) E_theta^-1 P^-1 s.  Linear and invertible;
    see :func:`untransform_signal`.
    """
    E = e_theta_matrix(theta)
    M = -(1.0 / (geom.moment * geom.mu0)) * (E.T @ geom.sensitivity_inv)
    return np.asarray(s, dtype=float) @ M.T


def untransform_signal(s_tilde, theta, geom):
    """Inverse of :func:`transform_signal`."""
    E = e_theta_matrix(theta)
    M = -(geom.moment * geom.mu0) * (geom.sensitivity @ E)
    return np.asarray(s_tilde, dtype=float) @ M.T


def maxwell_validate(field, spacing):
    """Central-difference divergence/curl/Jacobian-asymmetry norms.

    ``field`` has shape (Nx, Ny, Nz, 3) sampled on a regular grid with
    the given (dx, dy, dz) spacing.  Returns max-norms over the interior,
    i.e. how far the samples are from a divergence- and curl-free field.
    """
    field = np.asarray(field, dtype=float)
    if field.ndim != 4 or field.shape[-1] != 3:
        raise ValueError("field must have shape (Nx, Ny, Nz, 3)")
    if min(field.shape[:3]) < 3:
        raise ValueError("need at least 3 samples per axis for central differences")
    dx, dy, dz = spacing
    # J[i, j] = dH_i/dx_j on the interior
    J = np.empty(tuple(n - 2 for n in field.shape[:3]) + (3, 3))
    inner = (slice(1, -1), slice(1, -1), slice(1, -1))
    for j, d in enumerate((dx, dy, dz)):
        lo = [slice(1, -1)] * 3
        hi = [slice(1, -1)] * 3
        lo[j] = slice(0, -2)
        hi[j] = slice(2, None)
        J[..., :, j] = (field[tuple(hi)] - field[tuple(lo)]) / (2.0 * d)
    div = J[..., 0, 0] + J[..., 1, 1] + J[..., 2, 2]
    asym = J - np.swapaxes(J, -1, -2)
    curl = np.stack([asym[..., 2, 1], asym[..., 0, 2], asym[..., 1, 0]], axis=-1)
    return {
        "div_norm": float(np.max(np.abs(div))),
        "curl_norm": float(np.max(np.abs(curl))),
        "jac_asym_norm": float(np.max(np.abs(asym))),
    }


def sample_static_field(theta, gradient, n=5, extent=1.0):
    """Static field sampled on a centered cubic grid, for validation."""
    xs = np.linspace(-extent, extent, n)
    X, Y, Z = np.meshgrid(xs, xs, xs, indexing="ij")
    pts = np.stack([X, Y, Z], axis=-1)
    d = xs[1] - xs[0]
    return static_field(pts, theta, gradient), (d, d, d)
