//! Numerical engine for quadratic polynomial skew products
//! `F(z, w) = (z² + d, w² + az² + bz + c)`.
//!
//! The crate covers fiber dynamics and Green functions ([`dynamics`]), the
//! base polynomial ([`julia`]), Lyapunov exponents ([`lyapunov`]),
//! parameter-space fields on complex lines ([`bifurcation`]), vertical
//! multiplier potentials ([`pern`]), the behaviour of bifurcations near the
//! hyperplane at infinity ([`infinity`]) and monodromy of lifted loops
//! ([`topology`]).

pub mod bifurcation;
pub mod cyclic;
pub mod dynamics;
pub mod error;
pub mod infinity;
pub mod io;
pub mod julia;
pub mod lyapunov;
pub mod pern;
pub mod slice;
pub mod topology;

pub use num_complex::Complex64 as Cx;

pub use bifurcation::{
    bz_mask, classify_cdm, ddc, decomposition_check, field_lv, CdmLabel, CdmVerdict, ClassMask, DecompositionReport,
    Estimator, Mask, Quantity, ScalarField,
};
pub use dynamics::{
    escape_radius_fiber, fiber_orbit, green_base, normalize_quadratic, rho, step, sup_rho_on_julia, BaseQuadratic,
    OrbitOutcome, OrbitStatus, SkewParams,
};
pub use error::{Error, Result};
pub use julia::{
    fatou_component_id, julia_samples, periodic_points, sample_mu_p, FatouLabel, MeasureLabel, MeasureSamples,
    PeriodicPoint,
};
pub use lyapunov::{
    lyap_base, lyap_vertical_measure, lyap_vertical_periodic, lyap_vertical_return, EstimatorKind, LyapEstimate,
};
pub use slice::ComplexLineSlice;
pub use topology::{
    component_type, jonsson_check, julia_topology_label, lift_curve, roots_in_component_count, JonssonReport,
    LiftResult, LoopParam, TopologyLabel,
};
