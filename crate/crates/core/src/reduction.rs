//! Reduction of the cubic Hammerstein operator with a rank-2 kernel to a
//! homogeneous cubic map on the plane.
//!
//! A fixed function has the form `f = x φ₁ + y φ₂` where `(x, y)` is a
//! fixed point of
//!
//! ```text
//! C(x,y) = (a11 x³ + 3a12 x²y + 3a21 xy² + a22 y³,
//!           b11 x³ + 3b12 x²y + 3b21 xy² + b22 y³)
//! ```
//!
//! with `a1j = ∫ψ₁ φ₁^(3−j') φ₂^j'` and the `b` row using `ψ₂`. Writing
//! `ξ = y/x`, fixed points correspond to positive roots of
//! `P₄(ξ) = μ₀ξ⁴ + μ₁ξ³ + 3μ₂ξ² + μ₃ξ + μ₄`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::KernelSpec;
use crate::quadrature::{integrate_with, IntegralResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    ClosedForm,
    Quadrature,
}

/// The eight coefficients of the cubic map.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefficientTableau {
    pub a11: f64,
    pub a12: f64,
    pub a21: f64,
    pub a22: f64,
    pub b11: f64,
    pub b12: f64,
    pub b21: f64,
    pub b22: f64,
    pub provenance: Provenance,
    pub error_bound: f64,
}

pub const ENTRY_NAMES: [&str; 8] = ["a11", "a12", "a21", "a22", "b11", "b12", "b21", "b22"];

impl CoefficientTableau {
    /// A tableau from raw entries, in `ENTRY_NAMES` order. Every entry must
    /// be positive and finite.
    pub fn new(entries: [f64; 8], provenance: Provenance, error_bound: f64) -> Result<Self> {
        for (name, v) in ENTRY_NAMES.iter().zip(entries) {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "tableau entry {name} must be positive, got {v}"
                )));
            }
        }
        let [a11, a12, a21, a22, b11, b12, b21, b22] = entries;
        Ok(Self {
            a11,
            a12,
            a21,
            a22,
            b11,
            b12,
            b21,
            b22,
            provenance,
            error_bound,
        })
    }

    pub fn entries(&self) -> [f64; 8] {
        [
            self.a11, self.a12, self.a21, self.a22, self.b11, self.b12, self.b21, self.b22,
        ]
    }

    /// Largest entrywise difference to another tableau.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.entries()
            .iter()
            .zip(other.entries())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    /// Largest violation of `b11 = a22, b12 = a21, b21 = a12, b22 = a11`.
    pub fn mirror_defect(&self) -> f64 {
        [
            self.b11 - self.a22,
            self.b12 - self.a21,
            self.b21 - self.a12,
            self.b22 - self.a11,
        ]
        .iter()
        .map(|d| d.abs())
        .fold(0.0, f64::max)
    }

    pub fn is_mirror_symmetric(&self, tol: f64) -> bool {
        self.mirror_defect() <= tol
    }

    /// `a11 + 3a12 ξ + 3a21 ξ² + a22 ξ³`, the first component of `C(1, ξ)`.
    pub fn first_row_at(&self, xi: f64) -> f64 {
        ((self.a22 * xi + 3.0 * self.a21) * xi + 3.0 * self.a12) * xi + self.a11
    }
}

/// Coefficients by quadrature of the eight defining integrals, split at the
/// kernel's breakpoints. `error_bound` is `8·tol`.
pub fn coefficients_quadrature(spec: &KernelSpec, tol: f64) -> Result<CoefficientTableau> {
    let [phi1, phi2] = spec.phi();
    let breaks = spec.breakpoints();
    let mut entries = [0.0; 8];
    for (row, psi) in spec.psi().iter().enumerate() {
        for j in 0..4 {
            let entry = ENTRY_NAMES[4 * row + j];
            let p1 = 3 - j as i32;
            let p2 = j as i32;
            let IntegralResult { value, .. } = integrate_with(
                |u| psi.eval(u) * phi1.eval(u).powi(p1) * phi2.eval(u).powi(p2),
                &breaks,
                tol,
            )
            .map_err(|source| Error::Coefficient { entry, source })?;
            entries[4 * row + j] = value;
        }
    }
    CoefficientTableau::new(entries, Provenance::Quadrature, 8.0 * tol)
}

/// Closed-form coefficients of the trigonometric kernel family. `a = 0` or
/// `b = 0` (not both) is accepted.
pub fn coefficients_closed_form(a: f64, b: f64) -> Result<CoefficientTableau> {
    if !(a >= 0.0 && b >= 0.0 && a.is_finite() && b.is_finite() && a + b > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "closed-form coefficients need a, b >= 0 (not both zero), got a = {a}, b = {b}"
        )));
    }
    let a11 = 527.0 * a / (280.0 * PI) + 17.0 * b / (12.0 * PI) + b / 2.0;
    let a12 = 29.0 * a / (40.0 * PI) + 3.0 * b / (4.0 * PI) + b / 4.0;
    let a21 = 7.0 * a / (24.0 * PI) + 3.0 * b / (4.0 * PI) + b / 4.0;
    let a22 = a / (8.0 * PI) + 17.0 * b / (12.0 * PI) + b / 2.0;
    let scale = a11.max(a12).max(a21).max(a22);
    CoefficientTableau::new(
        [a11, a12, a21, a22, a22, a21, a12, a11],
        Provenance::ClosedForm,
        8.0 * f64::EPSILON * scale,
    )
}

/// `P₄(ξ) = μ₀ξ⁴ + μ₁ξ³ + 3μ₂ξ² + μ₃ξ + μ₄`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Quartic {
    pub mu0: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub mu3: f64,
    pub mu4: f64,
    pub source: CoefficientTableau,
}

impl Quartic {
    /// Power-basis coefficients, highest degree first.
    pub fn coefficients(&self) -> [f64; 5] {
        [self.mu0, self.mu1, 3.0 * self.mu2, self.mu3, self.mu4]
    }

    pub fn eval(&self, xi: f64) -> f64 {
        horner(&self.coefficients(), xi)
    }

    /// Largest coefficient magnitude in the power basis.
    pub fn scale(&self) -> f64 {
        self.coefficients().iter().map(|c| c.abs()).fold(0.0, f64::max)
    }

    /// The linear coefficient as it reads after substituting the mirror
    /// identities with the row indices transposed: `a11 − 3a12`. The true
    /// value is `μ₃ = a11 − 3b12`; reports print both.
    pub fn transposed_linear_coefficient(&self) -> f64 {
        self.source.a11 - 3.0 * self.source.a12
    }
}

pub(crate) fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().fold(0.0, |acc, c| acc * x + c)
}

/// Assembles `P₄` from the general coefficient relations.
pub fn build_quartic(tab: &CoefficientTableau) -> Quartic {
    Quartic {
        mu0: tab.a22,
        mu1: 3.0 * tab.a21 - tab.b22,
        mu2: tab.a12 - tab.b21,
        mu3: tab.a11 - 3.0 * tab.b12,
        mu4: -tab.b11,
        source: *tab,
    }
}

/// `C(x, y)`.
pub fn cubic_apply(tab: &CoefficientTableau, x: f64, y: f64) -> (f64, f64) {
    let (x2, y2) = (x * x, y * y);
    let first = tab.a11 * x2 * x + 3.0 * tab.a12 * x2 * y + 3.0 * tab.a21 * x * y2 + tab.a22 * y2 * y;
    let second =
        tab.b11 * x2 * x + 3.0 * tab.b12 * x2 * y + 3.0 * tab.b21 * x * y2 + tab.b22 * y2 * y;
    (first, second)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::BasisFunction;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    // mpmath, 30 digits, of ∫F₁ζ₁³ … ∫F₁ζ₂³ with the a/b parts separated
    const A_PART: [f64; 4] = [
        0.599104678638777442501441023552,
        0.230774667483248236864881456890,
        0.0928403834702722791985155286340,
        0.0397887357729738339422209408431,
    ];
    const B_PART: [f64; 4] = [
        0.950939005427036784678503996222,
        0.488732414637843003653325645059,
        0.488732414637843003653325645059,
        0.950939005427036784678503996222,
    ];

    fn first_row(t: &CoefficientTableau) -> [f64; 4] {
        [t.a11, t.a12, t.a21, t.a22]
    }

    #[test]
    fn quadrature_separates_a_and_b_parts() {
        for (a, b, want) in [(1.0, 0.0, A_PART), (0.0, 1.0, B_PART)] {
            let k = KernelSpec::trig_nonnegative(a, b).unwrap();
            let t = coefficients_quadrature(&k, 1e-12).unwrap();
            for (got, want) in first_row(&t).iter().zip(want) {
                assert!((got - want).abs() <= 1e-10, "({a},{b}): {got} vs {want}");
            }
            assert!(t.mirror_defect() <= 1e-10);
        }
    }

    #[test]
    fn closed_form_at_unit_parameters() {
        let t = coefficients_closed_form(1.0, 1.0).unwrap();
        let expected: Vec<f64> = A_PART.iter().zip(B_PART).map(|(x, y)| x + y).collect();
        for (got, want) in first_row(&t).iter().zip(&expected) {
            assert_relative_eq!(*got, *want, max_relative = 1e-14);
        }
        assert_eq!(t.provenance, Provenance::ClosedForm);
    }

    #[test]
    fn closed_form_b_only_is_symmetric() {
        let t = coefficients_closed_form(0.0, 1.0).unwrap();
        assert_eq!(t.a11, t.a22);
        assert_eq!(t.a12, t.a21);
        for (got, want) in first_row(&t).iter().zip(B_PART) {
            assert_relative_eq!(*got, want, max_relative = 1e-14);
        }
    }

    #[test]
    fn closed_form_rejects_negative() {
        assert!(coefficients_closed_form(-1.0, 1.0).is_err());
        assert!(coefficients_closed_form(0.0, 0.0).is_err());
    }

    #[test]
    fn constant_generic_kernel_gives_ones() {
        let one = || BasisFunction::user("one", |_| 1.0, vec![]);
        let k = KernelSpec::generic(one(), one(), one(), one()).unwrap();
        let t = coefficients_quadrature(&k, 1e-12).unwrap();
        for v in t.entries() {
            assert_relative_eq!(v, 1.0, max_relative = 1e-14);
        }
        assert_eq!(t.provenance, Provenance::Quadrature);
        assert_eq!(t.error_bound, 8e-12);
    }

    #[test]
    fn quartic_of_ones() {
        let t = CoefficientTableau::new([1.0; 8], Provenance::ClosedForm, 0.0).unwrap();
        let q = build_quartic(&t);
        assert_eq!(q.coefficients(), [1.0, 2.0, 0.0, -2.0, -1.0]);
    }

    #[test]
    fn quartic_at_unit_parameters() {
        let t = coefficients_closed_form(1.0, 1.0).unwrap();
        let q = build_quartic(&t);
        let c = 3.0 * (A_PART[2] + B_PART[2]) - (A_PART[0] + B_PART[0]);
        assert_relative_eq!(q.mu1, c, max_relative = 1e-13);
        assert_relative_eq!(q.mu3, -c, max_relative = 1e-13);
        assert_relative_eq!(q.mu0, -q.mu4);
        assert_eq!(q.mu2, 0.0);
        // 3·0.5815728 − 1.5500437
        assert!((q.mu1 - 0.194674710258531621).abs() < 1e-14);
    }

    #[test]
    fn cubic_apply_examples() {
        let t = CoefficientTableau::new([1.0; 8], Provenance::ClosedForm, 0.0).unwrap();
        assert_eq!(cubic_apply(&t, 1.0, 1.0), (8.0, 8.0));
        assert_eq!(cubic_apply(&t, 0.0, 0.0), (0.0, 0.0));
    }

    #[test]
    fn rejects_nonpositive_entry() {
        let mut e = [1.0; 8];
        e[5] = 0.0;
        assert!(CoefficientTableau::new(e, Provenance::Quadrature, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn trig_quartic_vanishes_at_plus_minus_one(a in 1e-3f64..50.0, b in 1e-3f64..50.0) {
            let q = build_quartic(&coefficients_closed_form(a, b).unwrap());
            let s = q.scale();
            prop_assert!(q.eval(1.0).abs() <= 1e-14 * s);
            prop_assert!(q.eval(-1.0).abs() <= 1e-14 * s);
            prop_assert!(q.mu0 > 0.0 && q.mu4 < 0.0);
        }

        #[test]
        fn cubic_map_is_homogeneous(
            e in proptest::array::uniform8(0.01f64..100.0),
            x in -10.0f64..10.0,
            y in -10.0f64..10.0,
        ) {
            let t = CoefficientTableau::new(e, Provenance::Quadrature, 0.0).unwrap();
            let (p, q) = cubic_apply(&t, x, y);
            let (p2, q2) = cubic_apply(&t, 2.0 * x, 2.0 * y);
            prop_assert!((p2 - 8.0 * p).abs() <= 1e-12 * p2.abs().max(1.0));
            prop_assert!((q2 - 8.0 * q).abs() <= 1e-12 * q2.abs().max(1.0));
        }

        #[test]
        fn quartic_encodes_ratio_condition(
            e in proptest::array::uniform8(0.01f64..100.0),
            xi in 0.01f64..100.0,
        ) {
            // P₄(ξ) = ξ·C₁(1,ξ) − C₂(1,ξ)
            let t = CoefficientTableau::new(e, Provenance::Quadrature, 0.0).unwrap();
            let q = build_quartic(&t);
            let (c1, c2) = cubic_apply(&t, 1.0, xi);
            let direct = xi * c1 - c2;
            prop_assert!((q.eval(xi) - direct).abs() <= 1e-11 * (xi * c1).abs().max(c2.abs()).max(1.0));
            prop_assert!(q.mu0 > 0.0 && q.mu4 < 0.0);
        }
    }
}
