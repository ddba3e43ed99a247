//! Thermal polarization kernel C(|k|), the screening kernels b1, b2 and the
//! linearized screening of an external charge.

mod kernel;

pub use kernel::{
    c1_at_zero, fermi_ratio_opposite, fermi_ratio_same, response_direct, response_direct_parts,
    response_reduced, w_kernel, zeta_lambda, ResponseKernel, ResponseOptions, ResponseRoute,
};

mod linear;

pub use linear::{
    build_screening_kernels, debye_report, fit_slope, linear_screen, DebyeOptions, DebyeReport,
    ScreeningKernels, ScreeningOptions, ScreeningResult,
};
