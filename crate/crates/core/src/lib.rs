//! Numerical Finsler geometry: the Cartan-connection tensor tower, the
//! horizontal differential, co-differential and Laplacian on horizontal forms
//! over the sphere bundle, and quadrature on the sphere bundle.
//!
//! Everything is generic over the coefficient type ([`Real`], `f32` or `f64`);
//! the `*64` aliases below fix `f64`, which is what the test suites use.

pub mod catalog;
pub mod connection;
pub mod curvature;
pub mod error;
pub mod fields;
pub mod forms;
pub mod jets;
pub mod linalg;
pub mod metric;
pub mod quadrature;
pub mod scalar;
pub mod tensor;

pub use catalog::{builtin_form, builtin_metric, builtin_vector_field, list_builtins, MetricDoc};
pub use connection::{Tower, TensorField};
pub use curvature::{curvature_at, flag_curvature_tensor, ricci_identity_residual, CurvatureAtPoint};
pub use error::{FinslerError, Result};
pub use forms::{
    associate_one_form, energy_identity_residual, horizontal_codifferential, horizontal_differential,
    horizontal_laplacian, k_scalar, laplacian_expansion_p, pointwise_inner, weitzenbock_residual, AssociatedForm,
    HorizontalForm,
};
pub use fields::{Coefficient, TrigPoly, TrigTerm, VectorField};
pub use jets::{fd_partial, partial, Jet, JetRequest, ScalarField, SmoothField};
pub use metric::{ChartSpec, CovectorField, CustomMetric, Family, FinslerStructure, MatrixField, SpherePoint};
pub use quadrature::{
    adjointness_defect, bochner_integral, divergence_integral_check, global_inner_product, integrate_scalar,
    is_h_harmonic, volume_density, QuadratureGrid, VolumeDensity,
};
pub use scalar::{Real, Scalar};
pub use tensor::{JetTensor, Slot, TensorValue};

pub type Jet64 = Jet<f64>;
pub type Structure64 = FinslerStructure<f64>;
pub type SpherePoint64 = SpherePoint<f64>;
pub type TensorValue64 = TensorValue<f64>;
pub type Form64 = HorizontalForm<f64>;
pub type Grid64 = QuadratureGrid<f64>;
