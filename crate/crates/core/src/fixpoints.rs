//! Positive fixed points of the cubic Hammerstein operator
//! `(H₃f)(t) = ∫₀¹ K(t,u) f³(u) du` for rank-2 kernels, and the phase
//! classification of the trigonometric family.
//!
//! Each positive root `ξ₀` of `P₄` lifts to the fixed point
//! `(x₀, ξ₀x₀)` of the cubic map with
//! `x₀ = (a11 + 3a12ξ₀ + 3a21ξ₀² + a22ξ₀³)^(−1/2)`, and then to the fixed
//! function `f = x₀φ₁ + y₀φ₂`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::func::UnitFunction;
use crate::kernels::{BasisFunction, KernelSpec};
use crate::polyroots::{positive_roots, DISCRIMINANT_BAND, ROOT_TOL};
use crate::quadrature::COEFFICIENT_TOL;
use crate::reduction::{
    build_quartic, coefficients_closed_form, coefficients_quadrature, cubic_apply,
    CoefficientTableau,
};

/// Lifted roots whose cubic residual exceeds this are rejected.
pub const CUBIC_GATE: f64 = 1e-8;

/// `35(44 + 15π)/318`, the critical ratio `a/b`.
pub fn threshold_ratio() -> f64 {
    35.0 * (44.0 + 15.0 * PI) / 318.0
}

/// A fixed point `(x₀, y₀)` of the cubic map on the open quadrant.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CubicFixedPoint {
    pub xi0: f64,
    pub x0: f64,
    pub y0: f64,
    pub cubic_residual: f64,
}

/// Lifts a positive root of `P₄` to a fixed point of the cubic map.
pub fn lift_root(tab: &CoefficientTableau, xi0: f64) -> Result<CubicFixedPoint> {
    if !(xi0 > 0.0 && xi0.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "ratio must be positive, got {xi0}"
        )));
    }
    let radicand = tab.first_row_at(xi0);
    if !(radicand > 0.0) {
        return Err(Error::Internal(format!(
            "nonpositive radicand {radicand} at xi = {xi0}"
        )));
    }
    let x0 = radicand.sqrt().recip();
    let y0 = xi0 * x0;
    let (cx, cy) = cubic_apply(tab, x0, y0);
    let cubic_residual = (cx - x0).abs().max((cy - y0).abs());
    if !(cubic_residual <= CUBIC_GATE) {
        return Err(Error::ResidualGate {
            xi: xi0,
            residual: cubic_residual,
            gate: CUBIC_GATE,
        });
    }
    Ok(CubicFixedPoint {
        xi0,
        x0,
        y0,
        cubic_residual,
    })
}

/// `t ↦ c₁φ₁(t) + c₂φ₂(t)`.
#[derive(Clone, Debug)]
pub struct FixedFunction {
    pub coeffs: [f64; 2],
    phi: [BasisFunction; 2],
}

impl FixedFunction {
    pub fn new(coeffs: [f64; 2], phi: [BasisFunction; 2]) -> Self {
        Self { coeffs, phi }
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.coeffs[0] * self.phi[0].eval(t) + self.coeffs[1] * self.phi[1].eval(t)
    }

    /// `λ·f`, still in the span of the same factors.
    pub fn scaled(&self, lambda: f64) -> Self {
        Self {
            coeffs: [lambda * self.coeffs[0], lambda * self.coeffs[1]],
            phi: self.phi.clone(),
        }
    }
}

impl UnitFunction for FixedFunction {
    fn eval(&self, t: f64) -> f64 {
        FixedFunction::eval(self, t)
    }

    fn breakpoints(&self) -> Vec<f64> {
        crate::func::merge_breakpoints(self.phi.iter().map(UnitFunction::breakpoints))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FixedPointDescriptor {
    pub xi0: f64,
    pub x0: f64,
    pub y0: f64,
    /// Multiplicity of `ξ₀` as a root of `P₄`.
    pub multiplicity: u32,
    pub cubic_residual: f64,
    /// Sup-norm of `H₃f − f`, filled in by the verification layer.
    pub hammerstein_residual: Option<f64>,
    #[serde(skip)]
    pub f: FixedFunction,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TableauSource {
    /// Closed form for the trigonometric family, quadrature otherwise.
    #[default]
    Auto,
    ClosedForm,
    Quadrature,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveOptions {
    pub quad_tol: f64,
    pub root_tol: f64,
    pub source: TableauSource,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            quad_tol: COEFFICIENT_TOL,
            root_tol: ROOT_TOL,
            source: TableauSource::Auto,
        }
    }
}

pub fn tableau_for(spec: &KernelSpec, opts: &SolveOptions) -> Result<CoefficientTableau> {
    match (opts.source, spec.trig_params()) {
        (TableauSource::Auto | TableauSource::ClosedForm, Some((a, b))) => {
            coefficients_closed_form(a, b)
        }
        (TableauSource::ClosedForm, None) => Err(Error::Unsupported(
            "closed-form coefficients exist only for the trigonometric family".into(),
        )),
        _ => coefficients_quadrature(spec, opts.quad_tol),
    }
}

/// Every positive fixed point of `H₃` for `spec`, sorted by `ξ₀`.
pub fn fixed_functions(spec: &KernelSpec, opts: &SolveOptions) -> Result<Vec<FixedPointDescriptor>> {
    let tab = tableau_for(spec, opts)?;
    fixed_functions_from(spec, &tab, opts)
}

/// As [`fixed_functions`] with a precomputed tableau.
pub fn fixed_functions_from(
    spec: &KernelSpec,
    tab: &CoefficientTableau,
    opts: &SolveOptions,
) -> Result<Vec<FixedPointDescriptor>> {
    let quartic = build_quartic(tab);
    let roots = positive_roots(&quartic, opts.root_tol)?;
    let mut out = Vec::with_capacity(roots.distinct());
    for root in &roots.roots {
        let p = lift_root(tab, root.xi)?;
        out.push(FixedPointDescriptor {
            xi0: p.xi0,
            x0: p.x0,
            y0: p.y0,
            multiplicity: root.mult,
            cubic_residual: p.cubic_residual,
            hammerstein_residual: None,
            f: FixedFunction::new([p.x0, p.y0], spec.phi().clone()),
        });
    }
    if !(1..=3).contains(&out.len()) {
        return Err(Error::Internal(format!(
            "{} positive fixed points, outside 1..=3",
            out.len()
        )));
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Unique,
    Two,
    Three,
}

impl Regime {
    pub fn expected_count(self) -> usize {
        match self {
            Self::Unique => 1,
            Self::Two => 2,
            Self::Three => 3,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegimeClassification {
    pub a: f64,
    pub b: f64,
    pub threshold: f64,
    /// Half-width in `a` of the band treated as the threshold itself.
    pub band: f64,
    pub regime: Regime,
    pub expected_count: usize,
}

/// Places `(a, b)` relative to `a = 35(44+15π)b/318`.
///
/// The band is the image in `a` of the discriminant band
/// `|D| ≤ 1e-9·4a22²` used by the root finder.
pub fn classify_regime(a: f64, b: f64) -> Result<RegimeClassification> {
    if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "regime needs a, b > 0, got a = {a}, b = {b}"
        )));
    }
    let threshold = threshold_ratio() * b;
    // 3a21 − a11 + 2a22 = 53(threshold − a)/(70π)
    let a22_at_threshold = coefficients_closed_form(threshold, b)?.a22;
    let band = DISCRIMINANT_BAND * a22_at_threshold * 70.0 * PI / 53.0;
    let regime = if (a - threshold).abs() <= band {
        Regime::Two
    } else if a < threshold {
        Regime::Unique
    } else {
        Regime::Three
    };
    Ok(RegimeClassification {
        a,
        b,
        threshold,
        band,
        regime,
        expected_count: regime.expected_count(),
    })
}

/// `g(t) = (f(t)/f(0))³`, the fixed point of `R₃` matching an `H₃` fixed
/// point.
#[derive(Clone, Debug)]
pub struct RkFunction {
    f: FixedFunction,
    f0: f64,
    power: i32,
}

impl RkFunction {
    pub fn eval(&self, t: f64) -> f64 {
        (self.f.eval(t) / self.f0).powi(self.power)
    }
}

impl UnitFunction for RkFunction {
    fn eval(&self, t: f64) -> f64 {
        RkFunction::eval(self, t)
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.f.breakpoints()
    }
}

pub fn rk_fixed_function(desc: &FixedPointDescriptor) -> Result<RkFunction> {
    rk_function_of(&desc.f, 3)
}

/// `(f/f(0))^k` for an arbitrary function in the span.
pub fn rk_function_of(f: &FixedFunction, k: u32) -> Result<RkFunction> {
    let f0 = f.eval(0.0);
    if !(f0 > 0.0) {
        return Err(Error::NonPositiveFunction { t: 0.0, value: f0 });
    }
    Ok(RkFunction {
        f: f.clone(),
        f0,
        power: k as i32,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanGrid {
    pub a_min: f64,
    pub a_max: f64,
    pub a_steps: usize,
    pub b_min: f64,
    pub b_max: f64,
    pub b_steps: usize,
}

impl ScanGrid {
    pub fn a_values(&self) -> Vec<f64> {
        linspace(self.a_min, self.a_max, self.a_steps)
    }

    pub fn b_values(&self) -> Vec<f64> {
        linspace(self.b_min, self.b_max, self.b_steps)
    }

    fn validate(&self) -> Result<()> {
        let ok = |lo: f64, hi: f64, n: usize| lo > 0.0 && hi >= lo && hi.is_finite() && n >= 1;
        if !ok(self.a_min, self.a_max, self.a_steps) || !ok(self.b_min, self.b_max, self.b_steps) {
            return Err(Error::InvalidParameter(format!(
                "scan ranges must be positive, nonempty and ordered: {self:?}"
            )));
        }
        Ok(())
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let step = (hi - lo) / (n - 1) as f64;
    (0..n)
        .map(|i| if i == n - 1 { hi } else { lo + step * i as f64 })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanRow {
    pub a_index: usize,
    pub b_index: usize,
    pub a: f64,
    pub b: f64,
    pub threshold: f64,
    pub regime: Regime,
    pub expected_count: usize,
    pub count: usize,
    pub xis: Vec<f64>,
    pub max_residual: f64,
    /// Computed count disagrees with the regime.
    pub flagged: bool,
    /// Counts just below and just above the band, for cells inside it.
    pub neighbor_counts: Option<[usize; 2]>,
    pub error: Option<String>,
}

/// Evaluates [`fixed_functions`] on a grid of `(a, b)`; rows come back in
/// `(b_index, a_index)` order whatever the worker count.
pub fn scan_phase(grid: &ScanGrid, opts: &SolveOptions) -> Result<Vec<ScanRow>> {
    grid.validate()?;
    let a_values = grid.a_values();
    let b_values = grid.b_values();
    let cells: Vec<(usize, usize)> = (0..b_values.len())
        .flat_map(|j| (0..a_values.len()).map(move |i| (i, j)))
        .collect();
    Ok(cells
        .into_par_iter()
        .map(|(i, j)| scan_cell(i, j, a_values[i], b_values[j], opts))
        .collect())
}

fn count_at(a: f64, b: f64, opts: &SolveOptions) -> Result<Vec<FixedPointDescriptor>> {
    let spec = KernelSpec::trig(a, b)?;
    fixed_functions(&spec, opts)
}

fn scan_cell(a_index: usize, b_index: usize, a: f64, b: f64, opts: &SolveOptions) -> ScanRow {
    let mut row = ScanRow {
        a_index,
        b_index,
        a,
        b,
        threshold: threshold_ratio() * b,
        regime: Regime::Unique,
        expected_count: 0,
        count: 0,
        xis: Vec::new(),
        max_residual: f64::NAN,
        flagged: true,
        neighbor_counts: None,
        error: None,
    };
    let class = match classify_regime(a, b) {
        Ok(c) => c,
        Err(e) => {
            row.error = Some(e.to_string());
            return row;
        }
    };
    row.threshold = class.threshold;
    row.regime = class.regime;
    row.expected_count = class.expected_count;
    match count_at(a, b, opts) {
        Ok(descs) => {
            row.count = descs.len();
            row.xis = descs.iter().map(|d| d.xi0).collect();
            row.max_residual = descs.iter().map(|d| d.cubic_residual).fold(0.0, f64::max);
            row.flagged = row.count != class.expected_count;
        }
        Err(e) => row.error = Some(e.to_string()),
    }
    if class.regime == Regime::Two {
        let step = 4.0 * class.band;
        let below = count_at(class.threshold - step, b, opts).map(|d| d.len());
        let above = count_at(class.threshold + step, b, opts).map(|d| d.len());
        if let (Ok(lo), Ok(hi)) = (below, above) {
            row.neighbor_counts = Some([lo, hi]);
        }
    }
    row
}
