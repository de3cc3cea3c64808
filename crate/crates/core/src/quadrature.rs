//! Adaptive Gauss–Kronrod integration on `[0,1]` and sup-norms on grids.
//!
//! Each panel is integrated with the 21-point Kronrod extension of the
//! 10-point Gauss–Legendre rule; `|K21 − G10|` is the panel error estimate.
//! The interval is first cut at every declared breakpoint, then the panel
//! with the largest estimate is bisected until the summed estimate drops
//! below the tolerance. Panel selection breaks ties on the left endpoint,
//! so identical requests give bit-identical results.

use std::f64::consts::PI;

use thiserror::Error;

/// Tolerance used for coefficient integrals.
pub const COEFFICIENT_TOL: f64 = 1e-10;
/// Tolerance used for residual evaluations.
pub const RESIDUAL_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_SUBDIVISIONS: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegralResult {
    pub value: f64,
    pub error_estimate: f64,
    /// Number of bisections performed after the breakpoint split.
    pub subdivisions_used: usize,
}

#[derive(Clone, Debug, Error, PartialEq)]
pub enum QuadratureError {
    #[error("invalid integration request: {0}")]
    InvalidRequest(String),
    #[error("integrand is not finite at {at}: {value}")]
    NonFinite { at: f64, value: f64 },
    #[error(
        "tolerance {abs_tol:e} not met after {} subdivisions (best {} ± {:e})",
        best.subdivisions_used, best.value, best.error_estimate
    )]
    ToleranceNotMet { best: IntegralResult, abs_tol: f64 },
}

/// An integral over `[0,1]`.
#[derive(Clone, Debug)]
pub struct IntegrationRequest<F> {
    pub integrand: F,
    /// Strictly increasing points inside `(0,1)`.
    pub breakpoints: Vec<f64>,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
}

impl<F: Fn(f64) -> f64> IntegrationRequest<F> {
    pub fn new(integrand: F) -> Self {
        Self {
            integrand,
            breakpoints: Vec::new(),
            abs_tol: COEFFICIENT_TOL,
            max_subdivisions: DEFAULT_MAX_SUBDIVISIONS,
        }
    }

    pub fn breakpoints(mut self, breakpoints: impl Into<Vec<f64>>) -> Self {
        self.breakpoints = breakpoints.into();
        self
    }

    pub fn abs_tol(mut self, abs_tol: f64) -> Self {
        self.abs_tol = abs_tol;
        self
    }

    pub fn max_subdivisions(mut self, max_subdivisions: usize) -> Self {
        self.max_subdivisions = max_subdivisions;
        self
    }

    pub fn integrate(&self) -> Result<IntegralResult, QuadratureError> {
        integrate(self)
    }

    fn validate(&self) -> Result<(), QuadratureError> {
        if !(self.abs_tol > 0.0 && self.abs_tol.is_finite()) {
            return Err(QuadratureError::InvalidRequest(format!(
                "abs_tol must be positive, got {}",
                self.abs_tol
            )));
        }
        if self.max_subdivisions == 0 {
            return Err(QuadratureError::InvalidRequest(
                "max_subdivisions must be positive".into(),
            ));
        }
        let mut prev = 0.0;
        for &b in &self.breakpoints {
            if !(b > prev && b < 1.0) {
                return Err(QuadratureError::InvalidRequest(format!(
                    "breakpoints must be strictly increasing inside (0,1): {:?}",
                    self.breakpoints
                )));
            }
            prev = b;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug)]
struct Panel {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
}

/// Integrates `req.integrand` over `[0,1]`.
pub fn integrate<F: Fn(f64) -> f64>(
    req: &IntegrationRequest<F>,
) -> Result<IntegralResult, QuadratureError> {
    req.validate()?;
    let f = &req.integrand;

    let mut edges = Vec::with_capacity(req.breakpoints.len() + 2);
    edges.push(0.0);
    edges.extend_from_slice(&req.breakpoints);
    edges.push(1.0);

    let mut panels = edges
        .windows(2)
        .map(|w| kronrod21(f, w[0], w[1]))
        .collect::<Result<Vec<_>, _>>()?;

    let mut bisections = 0;
    loop {
        let (value, error) = totals(&panels);
        if error <= req.abs_tol {
            return Ok(IntegralResult {
                value,
                error_estimate: error,
                subdivisions_used: bisections,
            });
        }
        if bisections >= req.max_subdivisions {
            return Err(QuadratureError::ToleranceNotMet {
                best: IntegralResult {
                    value,
                    error_estimate: error,
                    subdivisions_used: bisections,
                },
                abs_tol: req.abs_tol,
            });
        }
        let worst = worst_panel(&panels);
        let Panel { lo, hi, .. } = panels[worst];
        let mid = 0.5 * (lo + hi);
        if !(mid > lo && mid < hi) {
            // interval exhausted at f64 resolution
            return Err(QuadratureError::ToleranceNotMet {
                best: IntegralResult {
                    value,
                    error_estimate: error,
                    subdivisions_used: bisections,
                },
                abs_tol: req.abs_tol,
            });
        }
        let left = kronrod21(f, lo, mid)?;
        let right = kronrod21(f, mid, hi)?;
        panels[worst] = left;
        panels.insert(worst + 1, right);
        bisections += 1;
    }
}

/// Convenience wrapper: integral of `f` over `[0,1]` split at `breakpoints`.
pub fn integrate_with<F: Fn(f64) -> f64>(
    f: F,
    breakpoints: &[f64],
    abs_tol: f64,
) -> Result<IntegralResult, QuadratureError> {
    IntegrationRequest::new(f)
        .breakpoints(breakpoints.to_vec())
        .abs_tol(abs_tol)
        .integrate()
}

// panels stay sorted by `lo`, so summing in order is deterministic
fn totals(panels: &[Panel]) -> (f64, f64) {
    panels
        .iter()
        .fold((0.0, 0.0), |(v, e), p| (v + p.value, e + p.error))
}

fn worst_panel(panels: &[Panel]) -> usize {
    let mut best = 0;
    for (i, p) in panels.iter().enumerate().skip(1) {
        if p.error > panels[best].error {
            best = i;
        }
    }
    best
}

#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

fn sample<F: Fn(f64) -> f64>(f: &F, t: f64) -> Result<f64, QuadratureError> {
    let v = f(t);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(QuadratureError::NonFinite { at: t, value: v })
    }
}

fn kronrod21<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64) -> Result<Panel, QuadratureError> {
    let centre = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);

    let fc = sample(f, centre)?;
    let mut kronrod = WGK[10] * fc;
    let mut gauss = 0.0;
    for j in 0..10 {
        let dx = half * XGK[j];
        let pair = sample(f, centre - dx)? + sample(f, centre + dx)?;
        kronrod += WGK[j] * pair;
        // Gauss nodes sit at the odd Kronrod indices
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Ok(Panel {
        lo,
        hi,
        value: kronrod * half,
        error: ((kronrod - gauss) * half).abs(),
    })
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`,
/// nodes ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    let nf = n as f64;
    for i in 0..m {
        // Tricomi's initial guess, then Newton on P_n
        let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let step = p / d;
            x -= step;
            if step.abs() <= 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d.is_finite() {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Largest `|f|` over a uniform grid of `grid_size` points on `[0,1]`.
///
/// With `refine`, a golden-section search on the two cells around every
/// grid-local maximum may raise the value; it never lowers it.
pub fn sup_norm<F: Fn(f64) -> f64>(
    f: F,
    grid_size: usize,
    refine: bool,
) -> Result<f64, QuadratureError> {
    try_sup_norm(|t| sample(&f, t), grid_size, refine)
}

/// [`sup_norm`] for fallible evaluation rules.
pub fn try_sup_norm<F, E>(f: F, grid_size: usize, refine: bool) -> Result<f64, E>
where
    F: Fn(f64) -> Result<f64, E>,
    E: From<QuadratureError>,
{
    if grid_size < 2 {
        return Err(QuadratureError::InvalidRequest(format!(
            "sup_norm needs at least 2 grid points, got {grid_size}"
        ))
        .into());
    }
    let eval = |t: f64| -> Result<f64, E> {
        let v = f(t)?;
        if v.is_finite() {
            Ok(v.abs())
        } else {
            Err(QuadratureError::NonFinite { at: t, value: v }.into())
        }
    };
    let last = (grid_size - 1) as f64;
    let values = (0..grid_size)
        .map(|i| eval(i as f64 / last))
        .collect::<Result<Vec<_>, E>>()?;
    let mut best = values.iter().copied().fold(0.0, f64::max);
    if refine && best > 0.0 {
        for i in 0..grid_size {
            let left = if i > 0 { values[i - 1] } else { f64::NEG_INFINITY };
            let right = values.get(i + 1).copied().unwrap_or(f64::NEG_INFINITY);
            if values[i] > 0.0 && values[i] >= left && values[i] >= right {
                let lo = i.saturating_sub(1) as f64 / last;
                let hi = (i + 1).min(grid_size - 1) as f64 / last;
                best = best.max(golden_max(&eval, lo, hi)?);
            }
        }
    }
    Ok(best)
}

fn golden_max<F, E>(f: &F, mut lo: f64, mut hi: f64) -> Result<f64, E>
where
    F: Fn(f64) -> Result<f64, E>,
{
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    let mut best = f1.max(f2);
    for _ in 0..60 {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = f(x1)?;
            best = best.max(f1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = f(x2)?;
            best = best.max(f2);
        }
        if hi - lo < 1e-12 {
            break;
        }
    }
    Ok(best)
}
