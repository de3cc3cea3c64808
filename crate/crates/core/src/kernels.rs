//! Rank-2 degenerate kernels `K(t,u) = φ₁(t)ψ₁(u) + φ₂(t)ψ₂(u)` on `[0,1]²`.
//!
//! The built-in family is assembled from four piecewise trigonometric
//! functions with a single kink at `1/2`:
//!
//! ```text
//! ζ₁(u) = 1/2 + sin 2πu  on [0, 1/2],   1/2              on [1/2, 1]
//! ζ₂(u) = 1/2            on [0, 1/2],   1/2 − sin 2πu    on [1/2, 1]
//! F₁(t) = a cos πt + b   on [0, 1/2],   b                on [1/2, 1]
//! F₂(t) = b              on [0, 1/2],   −a cos πt + b    on [1/2, 1]
//! ```
//!
//! The ζ pair is the t-side (φ) factor and the F pair is the u-side (ψ)
//! weight, so the kernel is `K(t,u) = ζ₁(t)F₁(u) + ζ₂(t)F₂(u)` and every
//! fixed function of the cubic Hammerstein operator lies in `span{ζ₁, ζ₂}`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::func::{normalize_breakpoints, UnitFunction};

/// Grid size for the positivity spot-check of user kernels.
pub const POSITIVITY_GRID: usize = 64;

#[derive(Clone)]
pub enum BasisKind {
    Zeta1,
    Zeta2,
    F1 { a: f64, b: f64 },
    F2 { a: f64, b: f64 },
    User {
        name: String,
        rule: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    },
}

impl fmt::Debug for BasisKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Zeta1 => f.write_str("Zeta1"),
            Self::Zeta2 => f.write_str("Zeta2"),
            Self::F1 { a, b } => write!(f, "F1 {{ a: {a}, b: {b} }}"),
            Self::F2 { a, b } => write!(f, "F2 {{ a: {a}, b: {b} }}"),
            Self::User { name, .. } => write!(f, "User({name})"),
        }
    }
}

/// One factor of a degenerate kernel, with its non-smooth points.
#[derive(Clone, Debug)]
pub struct BasisFunction {
    kind: BasisKind,
    breakpoints: Vec<f64>,
}

impl BasisFunction {
    pub fn zeta1() -> Self {
        Self::builtin(BasisKind::Zeta1)
    }

    pub fn zeta2() -> Self {
        Self::builtin(BasisKind::Zeta2)
    }

    pub fn f1(a: f64, b: f64) -> Self {
        Self::builtin(BasisKind::F1 { a, b })
    }

    pub fn f2(a: f64, b: f64) -> Self {
        Self::builtin(BasisKind::F2 { a, b })
    }

    /// A caller-supplied factor. `breakpoints` lists the interior points
    /// where the rule is not smooth; entries outside `(0,1)` are dropped.
    pub fn user<F>(name: impl Into<String>, rule: F, breakpoints: impl Into<Vec<f64>>) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let mut breakpoints = breakpoints.into();
        normalize_breakpoints(&mut breakpoints);
        Self {
            kind: BasisKind::User {
                name: name.into(),
                rule: Arc::new(rule),
            },
            breakpoints,
        }
    }

    fn builtin(kind: BasisKind) -> Self {
        Self {
            kind,
            breakpoints: vec![0.5],
        }
    }

    pub fn kind(&self) -> &BasisKind {
        &self.kind
    }

    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        match &self.kind {
            BasisKind::Zeta1 => {
                if t <= 0.5 {
                    0.5 + (2.0 * PI * t).sin()
                } else {
                    0.5
                }
            }
            BasisKind::Zeta2 => {
                if t <= 0.5 {
                    0.5
                } else {
                    0.5 - (2.0 * PI * t).sin()
                }
            }
            BasisKind::F1 { a, b } => {
                if t <= 0.5 {
                    a * (PI * t).cos() + b
                } else {
                    *b
                }
            }
            BasisKind::F2 { a, b } => {
                if t <= 0.5 {
                    *b
                } else {
                    -a * (PI * t).cos() + b
                }
            }
            BasisKind::User { rule, .. } => rule(t),
        }
    }
}

impl UnitFunction for BasisFunction {
    fn eval(&self, t: f64) -> f64 {
        BasisFunction::eval(self, t)
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.breakpoints.clone()
    }
}

/// Serialized kernel parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family")]
pub enum KernelParams {
    // wire tag fixed by the report format
    #[serde(rename = "trig")]
    Trig { a: f64, b: f64 },
    #[serde(rename = "generic")]
    Generic,
}

/// A rank-2 degenerate kernel. `phi` are the t-side factors, `psi` the
/// u-side factors.
#[derive(Clone, Debug)]
pub struct KernelSpec {
    phi: [BasisFunction; 2],
    psi: [BasisFunction; 2],
    params: KernelParams,
}

impl KernelSpec {
    /// The trigonometric family `ζ₁(t)F₁(u;a,b) + ζ₂(t)F₂(u;a,b)`; requires
    /// `a > 0` and `b > 0`.
    pub fn trig(a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite() && b > 0.0 && b.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "kernel parameters must be positive and finite, got a = {a}, b = {b}"
            )));
        }
        Ok(Self::trig_family(a, b))
    }

    /// Same family on the closed quadrant `a, b ≥ 0` (not both zero). The
    /// boundary kernels are only nonnegative; they are used to separate the
    /// `a` and `b` contributions of the coefficient integrals.
    pub fn trig_nonnegative(a: f64, b: f64) -> Result<Self> {
        if !(a >= 0.0 && b >= 0.0 && a.is_finite() && b.is_finite() && a + b > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "kernel parameters must be nonnegative and not both zero, got a = {a}, b = {b}"
            )));
        }
        Ok(Self::trig_family(a, b))
    }

    fn trig_family(a: f64, b: f64) -> Self {
        Self {
            phi: [BasisFunction::zeta1(), BasisFunction::zeta2()],
            psi: [BasisFunction::f1(a, b), BasisFunction::f2(a, b)],
            params: KernelParams::Trig { a, b },
        }
    }

    /// A user kernel. Positivity of every factor and of `K` is spot-checked
    /// on a 64×64 grid of `[0,1]²`.
    pub fn generic(
        phi1: BasisFunction,
        phi2: BasisFunction,
        psi1: BasisFunction,
        psi2: BasisFunction,
    ) -> Result<Self> {
        let spec = Self {
            phi: [phi1, phi2],
            psi: [psi1, psi2],
            params: KernelParams::Generic,
        };
        let grid = unit_grid(POSITIVITY_GRID);
        for basis in spec.phi.iter().chain(&spec.psi) {
            for &t in &grid {
                let v = basis.eval(t);
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::NonPositiveFunction { t, value: v });
                }
            }
        }
        for &t in &grid {
            for &u in &grid {
                let v = spec.eval_unchecked(t, u);
                if !(v > 0.0 && v.is_finite()) {
                    return Err(Error::NonPositiveKernel { t, u, value: v });
                }
            }
        }
        Ok(spec)
    }

    pub fn from_params(params: KernelParams) -> Result<Self> {
        match params {
            KernelParams::Trig { a, b } => Self::trig(a, b),
            KernelParams::Generic => Err(Error::InvalidParameter(
                "generic kernels carry code and cannot be rebuilt from parameters".into(),
            )),
        }
    }

    pub fn params(&self) -> KernelParams {
        self.params
    }

    /// `(a, b)` for the trigonometric family.
    pub fn trig_params(&self) -> Option<(f64, f64)> {
        match self.params {
            KernelParams::Trig { a, b } => Some((a, b)),
            KernelParams::Generic => None,
        }
    }

    pub fn phi(&self) -> &[BasisFunction; 2] {
        &self.phi
    }

    pub fn psi(&self) -> &[BasisFunction; 2] {
        &self.psi
    }

    /// `K(t,u)`, rejecting arguments outside the unit square.
    pub fn eval(&self, t: f64, u: f64) -> Result<f64> {
        if !((0.0..=1.0).contains(&t) && (0.0..=1.0).contains(&u)) {
            return Err(Error::OutOfDomain { t, u });
        }
        Ok(self.eval_unchecked(t, u))
    }

    #[inline]
    pub fn eval_unchecked(&self, t: f64, u: f64) -> f64 {
        self.phi[0].eval(t) * self.psi[0].eval(u) + self.phi[1].eval(t) * self.psi[1].eval(u)
    }

    /// Union of the breakpoints of all four factors.
    pub fn breakpoints(&self) -> Vec<f64> {
        crate::func::merge_breakpoints(
            self.phi
                .iter()
                .chain(&self.psi)
                .map(|basis| basis.breakpoints.clone()),
        )
    }

    /// Breakpoints in `t` only.
    pub fn t_breakpoints(&self) -> Vec<f64> {
        crate::func::merge_breakpoints(self.phi.iter().map(|basis| basis.breakpoints.clone()))
    }

    /// Breakpoints in `u` only.
    pub fn u_breakpoints(&self) -> Vec<f64> {
        crate::func::merge_breakpoints(self.psi.iter().map(|basis| basis.breakpoints.clone()))
    }
}

/// `n` equally spaced points on `[0,1]` including both ends.
pub(crate) fn unit_grid(n: usize) -> Vec<f64> {
    debug_assert!(n >= 2);
    let last = (n - 1) as f64;
    (0..n).map(|i| i as f64 / last).collect()
}
