//! Positive fixed points of cubic Hammerstein operators with a rank-two
//! piecewise-trigonometric kernel, and the translation-invariant Gibbs
//! measures they induce on Cayley trees.
//!
//! The operator `H₃f(t) = ∫₀¹ K(t,u) f(u)³ du` with
//! `K(t,u) = ζ₁(t)F₁(u) + ζ₂(t)F₂(u)` maps into the span of `ζ₁, ζ₂`, so its
//! fixed points solve a cubic system in two unknowns. That system reduces
//! to a quartic in the ratio `ξ = y/x`, whose positive roots are isolated
//! and lifted back to functions.
//!
//! ```
//! use hammfix::{fixed_functions, KernelSpec, SolveOptions};
//!
//! let spec = KernelSpec::trig(12.0, 1.0)?;
//! let fixed = fixed_functions(&spec, &SolveOptions::default())?;
//! assert_eq!(fixed.len(), 3);
//! # Ok::<(), hammfix::Error>(())
//! ```

// `!(x > 0.0)` is how NaN gets rejected along with nonpositive values
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![cfg_attr(test, allow(clippy::excessive_precision))]

pub mod error;
pub mod fixpoints;
pub mod func;
pub mod gibbs;
pub mod kernels;
pub mod polyroots;
pub mod quadrature;
pub mod reduction;

pub use error::{Error, Result};
pub use fixpoints::{
    classify_regime, fixed_functions, fixed_functions_from, lift_root, rk_fixed_function, rk_function_of, scan_phase,
    tableau_for, threshold_ratio, CubicFixedPoint, FixedFunction, FixedPointDescriptor, Regime,
    RegimeClassification, RkFunction, ScanGrid, ScanRow, SolveOptions, TableauSource,
};
pub use func::{Piecewise, UnitFunction};
pub use gibbs::{
    boundary_field, eq5_residual, hammerstein_residual, marginal_compatibility, rk_residual, DiscretizedSpin,
    GibbsCheckReport, ModelSpec, ResidualOptions,
};
pub use kernels::{BasisFunction, BasisKind, KernelParams, KernelSpec};
pub use polyroots::{
    classify_discriminant, positive_roots, positive_roots_general, DiscriminantRegime, DiscriminantReport, Root,
    RootMethod, RootSet,
};
pub use quadrature::{integrate, integrate_with, sup_norm, IntegralResult, IntegrationRequest, QuadratureError};
pub use reduction::{
    build_quartic, coefficients_closed_form, coefficients_quadrature, cubic_apply, CoefficientTableau, Provenance,
    Quartic,
};
