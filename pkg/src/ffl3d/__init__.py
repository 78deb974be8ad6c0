"""3D field-free-line magnetic particle imaging: simulation and reconstruction."""

from .geometry import ScanGeometry, default_angles
from .grids import Grid2D, Grid3D, Image2D, Volume3D, make_grid
from .physics import kernel_jacobian, kernel_kappa, langevin, langevin_deriv
from .fields import (
    applied_field,
    e_theta,
    e_theta_matrix,
    e_theta_perp,
    ffl_trajectory,
    maxwell_validate,
    static_field,
    transform_signal,
    untransform_signal,
)
from .phantoms import ball_phantom, cone_phantom
from .xray import xray_project
from .forward import SignalRecord, add_noise, core_operator_at, simulate_fast, simulate_oracle
from .solvers import Convolution2D, SolverError, cg_solve, laplacian_apply, lstsq_qr, sample_kappa_kernel
from .recon import (
    CoreField,
    ProjectionStack,
    ReconConfig,
    ReconError,
    ramp_window,
    reconstruct,
    stage1_bin,
    stage1_solve,
    stage1_trace,
    stage2_deconvolve,
    stage3_fbp,
)
from .metrics import volume_metrics

__version__ = "0.1.0"
