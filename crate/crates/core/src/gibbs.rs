//! Independent checks of fixed points: sup-norm residuals of the integral
//! equations, and a brute-force compatibility test of finite-volume Gibbs
//! distributions on a Cayley tree.
//!
//! The spin space `[0,1]` is discretised with composite Gauss–Legendre
//! nodes. For the ball `V_n` of radius `n`, the weight of a configuration is
//!
//! ```text
//! ∏_x w(σ_x) · ∏_{parent p → child c} K(σ_p, σ_c) · ∏_{x ∈ W_n} exp(h(σ_x))
//! ```
//!
//! with `K = exp(Jβ·δ)`, `h = ln f − ln f(0)`, and edges oriented away from
//! the root. Summing out the outer sphere `W_n` and comparing with the
//! distribution on `V_{n−1}` gives the total-variation discrepancy.
//!
//! The root field for `V_0` is `(s/k)·h`, where `s` is the root's number
//! of successors. It coincides with `h` when `s = k`, and for `s = k + 1`
//! it is what a translation-invariant `f` must induce at the root.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::func::{merge_breakpoints, UnitFunction};
use crate::kernels::KernelSpec;
use crate::quadrature::{gauss_legendre, integrate_with, try_sup_norm, RESIDUAL_TOL};

/// Largest number of weighted configurations a compatibility check will
/// enumerate.
pub const ENUMERATION_BUDGET: f64 = 1e8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResidualOptions {
    pub tol: f64,
    pub grid: usize,
    pub refine: bool,
}

impl Default for ResidualOptions {
    fn default() -> Self {
        Self {
            tol: RESIDUAL_TOL,
            grid: 101,
            refine: true,
        }
    }
}

fn positive_at<F: UnitFunction + ?Sized>(f: &F, t: f64) -> Result<f64> {
    let v = f.eval(t);
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonPositiveFunction { t, value: v })
    }
}

/// `sup_t |∫₀¹ K(t,u) f(u)^k du − f(t)|`.
pub fn hammerstein_residual<F: UnitFunction + ?Sized>(
    spec: &KernelSpec,
    f: &F,
    k: u32,
    opts: &ResidualOptions,
) -> Result<f64> {
    let breaks = merge_breakpoints([spec.u_breakpoints(), f.breakpoints()]);
    let k = k as i32;
    try_sup_norm(
        |t| -> Result<f64> {
            let image = integrate_with(|u| spec.eval_unchecked(t, u) * f.eval(u).powi(k), &breaks, opts.tol)?;
            Ok(image.value - f.eval(t))
        },
        opts.grid,
        opts.refine,
    )
}

/// `sup_t |(R_k g)(t) − g(t)|` with
/// `(R_k g)(t) = (∫K(t,u)g(u)du / ∫K(0,u)g(u)du)^k`.
pub fn rk_residual<F: UnitFunction + ?Sized>(
    spec: &KernelSpec,
    g: &F,
    k: u32,
    opts: &ResidualOptions,
) -> Result<f64> {
    let breaks = merge_breakpoints([spec.u_breakpoints(), g.breakpoints()]);
    let denom = integrate_with(|u| spec.eval_unchecked(0.0, u) * g.eval(u), &breaks, opts.tol)?.value;
    if !(denom > 0.0) {
        return Err(Error::NonPositiveFunction { t: 0.0, value: denom });
    }
    try_sup_norm(
        |t| -> Result<f64> {
            let num = integrate_with(|u| spec.eval_unchecked(t, u) * g.eval(u), &breaks, opts.tol)?.value;
            Ok((num / denom).powi(k as i32) - g.eval(t))
        },
        opts.grid,
        opts.refine,
    )
}

/// `h_t = ln f(t) − ln f(0)`, the same at every vertex.
pub struct BoundaryField<'a, F: UnitFunction + ?Sized> {
    f: &'a F,
    log_f0: f64,
}

pub fn boundary_field<F: UnitFunction + ?Sized>(f: &F) -> Result<BoundaryField<'_, F>> {
    let f0 = positive_at(f, 0.0)?;
    Ok(BoundaryField { f, log_f0: f0.ln() })
}

impl<F: UnitFunction + ?Sized> BoundaryField<'_, F> {
    pub fn eval(&self, t: f64) -> Result<f64> {
        Ok(positive_at(self.f, t)?.ln() - self.log_f0)
    }
}

/// Nearest-neighbour model on a Cayley tree of order `k` whose transfer
/// weight `exp(Jβ·δ(t,u))` is a given kernel.
#[derive(Clone, Debug)]
pub struct ModelSpec {
    kernel: KernelSpec,
    k: u32,
    jbeta: f64,
    root_branching: u32,
}

impl ModelSpec {
    /// Order-`k` tree, root with `k + 1` neighbours.
    pub fn new(kernel: KernelSpec, k: u32, jbeta: f64) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidParameter(format!("tree order must be >= 2, got {k}")));
        }
        if !(jbeta != 0.0 && jbeta.is_finite()) {
            return Err(Error::InvalidParameter(format!("Jβ must be nonzero, got {jbeta}")));
        }
        Ok(Self {
            kernel,
            k,
            jbeta,
            root_branching: k + 1,
        })
    }

    /// Root successor count; `k + 1` (whole tree) or `k` (rooted half-tree).
    pub fn with_root_branching(mut self, root_branching: u32) -> Result<Self> {
        if root_branching != self.k && root_branching != self.k + 1 {
            return Err(Error::InvalidParameter(format!(
                "root branching must be k = {} or k + 1, got {root_branching}",
                self.k
            )));
        }
        self.root_branching = root_branching;
        Ok(self)
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn jbeta(&self) -> f64 {
        self.jbeta
    }

    pub fn root_branching(&self) -> u32 {
        self.root_branching
    }

    /// `δ(t,u) = ln K(t,u) / Jβ`.
    pub fn potential(&self, t: f64, u: f64) -> f64 {
        self.kernel.eval_unchecked(t, u).ln() / self.jbeta
    }

    /// `exp(Jβ·δ(t,u))`.
    pub fn weight(&self, t: f64, u: f64) -> f64 {
        (self.jbeta * self.potential(t, u)).exp()
    }
}

/// Quadrature discretisation of the spin space with Lebesgue weights.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscretizedSpin {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl DiscretizedSpin {
    /// `m` Gauss–Legendre nodes spread over the panels cut by `breakpoints`.
    pub fn gauss_legendre(m: usize, breakpoints: &[f64]) -> Result<Self> {
        let mut breaks = breakpoints.to_vec();
        crate::func::normalize_breakpoints(&mut breaks);
        let panels = breaks.len() + 1;
        if m < panels {
            return Err(Error::InvalidParameter(format!(
                "{m} spin nodes cannot cover {panels} panels"
            )));
        }
        let mut edges = vec![0.0];
        edges.extend(breaks);
        edges.push(1.0);
        let mut nodes = Vec::with_capacity(m);
        let mut weights = Vec::with_capacity(m);
        for (p, w) in edges.windows(2).enumerate() {
            let count = m / panels + usize::from(p < m % panels);
            let (x, wt) = gauss_legendre(count);
            let half = 0.5 * (w[1] - w[0]);
            let mid = 0.5 * (w[1] + w[0]);
            nodes.extend(x.iter().map(|x| mid + half * x));
            weights.extend(wt.iter().map(|wt| half * wt));
        }
        Ok(Self { nodes, weights })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Translation-invariant compatibility residual of a boundary function:
/// `sup_t |∏_{successors} ∫K(t,u)f̂(u)du / ∫K(0,u)f̂(u)du − f̂(t)|`,
/// with `f̂ = f/f(0)`.
pub fn eq5_residual<F: UnitFunction + ?Sized>(
    model: &ModelSpec,
    f: &F,
    opts: &ResidualOptions,
) -> Result<f64> {
    let f0 = positive_at(f, 0.0)?;
    let normalized = |u: f64| f.eval(u) / f0;
    let breaks = merge_breakpoints([model.kernel.u_breakpoints(), f.breakpoints()]);
    let denom = integrate_with(|u| model.weight(0.0, u) * normalized(u), &breaks, opts.tol)?.value;
    try_sup_norm(
        |t| -> Result<f64> {
            let num = integrate_with(|u| model.weight(t, u) * normalized(u), &breaks, opts.tol)?.value;
            let ratio = num / denom;
            let product: f64 = (0..model.k).map(|_| ratio).product();
            Ok(product - normalized(t))
        },
        opts.grid,
        opts.refine,
    )
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GibbsCheckReport {
    pub eq5_residual: f64,
    pub marginal_discrepancy: f64,
    pub n: u32,
    pub m: usize,
    pub k: u32,
    pub root_branching: u32,
    #[serde(rename = "Jbeta")]
    pub jbeta: f64,
    /// Partition functions `[Z_n, Z_{n−1}]`.
    #[serde(rename = "Z_values")]
    pub z_values: [f64; 2],
    /// Multiplier of `h` in the root field when `n − 1 = 0`.
    pub root_field_exponent: Option<f64>,
    pub terms: f64,
}

/// Vertices of `V_n` in breadth-first order.
struct Ball {
    parent: Vec<Option<usize>>,
    depth: Vec<u32>,
}

impl Ball {
    fn new(root_branching: u32, k: u32, radius: u32) -> Self {
        let mut parent = vec![None];
        let mut depth = vec![0];
        let mut frontier = vec![0usize];
        for d in 1..=radius {
            let mut next = Vec::new();
            for &p in &frontier {
                let children = if p == 0 { root_branching } else { k };
                for _ in 0..children {
                    parent.push(Some(p));
                    depth.push(d);
                    next.push(parent.len() - 1);
                }
            }
            frontier = next;
        }
        Self { parent, depth }
    }

    fn len(&self) -> usize {
        self.parent.len()
    }

    fn size_at(root_branching: u32, k: u32, radius: u32) -> u64 {
        let mut total = 1u64;
        let mut layer = 1u64;
        for d in 1..=radius {
            layer *= u64::from(if d == 1 { root_branching } else { k });
            total += layer;
        }
        total
    }
}

/// Compensated running sum.
#[derive(Clone, Copy, Default)]
struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(self) -> f64 {
        self.sum + self.comp
    }
}

struct Enumeration<'a> {
    ball: &'a Ball,
    kernel: &'a [f64],
    weights: &'a [f64],
    /// Boundary factor per spin, indexed `[vertex][spin]` only for the
    /// outer sphere; other vertices read 1.
    boundary: &'a [Vec<f64>],
    m: usize,
    /// Vertices whose spins key the output buckets.
    keyed: usize,
}

impl Enumeration<'_> {
    /// Unnormalised weights bucketed by the spins of the first `keyed`
    /// vertices, for a fixed root spin.
    fn run_for_root(&self, root_spin: usize) -> Vec<f64> {
        let bucket_count = self.m.pow(self.keyed.saturating_sub(1) as u32);
        let mut buckets = vec![Neumaier::default(); bucket_count];
        let mut spins = vec![0usize; self.ball.len()];
        spins[0] = root_spin;
        let w0 = self.weights[root_spin] * self.boundary[0][root_spin];
        self.descend(1, w0, &mut spins, &mut buckets);
        buckets.into_iter().map(Neumaier::value).collect()
    }

    fn descend(&self, v: usize, partial: f64, spins: &mut [usize], buckets: &mut [Neumaier]) {
        if v == self.ball.len() {
            let mut idx = 0;
            for &s in &spins[1..self.keyed] {
                idx = idx * self.m + s;
            }
            buckets[idx].add(partial);
            return;
        }
        let p = self.ball.parent[v].expect("only the root lacks a parent");
        let row = &self.kernel[spins[p] * self.m..(spins[p] + 1) * self.m];
        let boundary = &self.boundary[v];
        for s in 0..self.m {
            spins[v] = s;
            let w = partial * self.weights[s] * row[s] * boundary[s];
            self.descend(v + 1, w, spins, buckets);
        }
    }
}

/// Brute-force check that the marginal of `μ⁽ⁿ⁾` on `V_{n−1}` equals
/// `μ⁽ⁿ⁻¹⁾`, with boundary field `h = ln f − ln f(0)`.
pub fn marginal_compatibility<F: UnitFunction + ?Sized>(
    model: &ModelSpec,
    spin: &DiscretizedSpin,
    f: &F,
    n: u32,
) -> Result<GibbsCheckReport> {
    marginal_compatibility_with(model, spin, f, n, &ResidualOptions::default())
}

pub fn marginal_compatibility_with<F: UnitFunction + ?Sized>(
    model: &ModelSpec,
    spin: &DiscretizedSpin,
    f: &F,
    n: u32,
    opts: &ResidualOptions,
) -> Result<GibbsCheckReport> {
    if n == 0 {
        return Err(Error::InvalidParameter("compatibility needs n >= 1".into()));
    }
    let m = spin.len();
    if m == 0 {
        return Err(Error::InvalidParameter("empty spin discretisation".into()));
    }
    let vertices = Ball::size_at(model.root_branching, model.k, n);
    let terms = (m as f64).powf(vertices as f64);
    if terms > ENUMERATION_BUDGET {
        return Err(Error::BudgetExceeded {
            terms,
            limit: ENUMERATION_BUDGET,
        });
    }

    let field = boundary_field(f)?;
    let h: Vec<f64> = spin
        .nodes
        .iter()
        .map(|&t| field.eval(t))
        .collect::<Result<_>>()?;
    let kernel: Vec<f64> = spin
        .nodes
        .iter()
        .flat_map(|&t| spin.nodes.iter().map(move |&u| model.weight(t, u)))
        .collect();

    let exp_field = |scale: f64| -> Vec<f64> { h.iter().map(|h| (scale * h).exp()).collect() };
    let ones = vec![1.0; m];

    let outer = Ball::new(model.root_branching, model.k, n);
    let inner = Ball::new(model.root_branching, model.k, n - 1);
    let keyed = inner.len();

    let outer_boundary: Vec<Vec<f64>> = outer
        .depth
        .iter()
        .map(|&d| if d == n { exp_field(1.0) } else { ones.clone() })
        .collect();
    let root_field_exponent = (n == 1).then(|| f64::from(model.root_branching) / f64::from(model.k));
    let inner_boundary: Vec<Vec<f64>> = inner
        .depth
        .iter()
        .map(|&d| match (d == n - 1, root_field_exponent) {
            (true, Some(s)) => exp_field(s),
            (true, None) => exp_field(1.0),
            (false, _) => ones.clone(),
        })
        .collect();

    let run = |ball: &Ball, boundary: &[Vec<f64>]| -> Vec<f64> {
        let e = Enumeration {
            ball,
            kernel: &kernel,
            weights: &spin.weights,
            boundary,
            m,
            keyed,
        };
        let parts: Vec<Vec<f64>> = (0..m).into_par_iter().map(|s| e.run_for_root(s)).collect();
        parts.concat()
    };
    let marginal = run(&outer, &outer_boundary);
    let reference = run(&inner, &inner_boundary);

    let z_n: f64 = sum(&marginal);
    let z_prev: f64 = sum(&reference);
    if !(z_n > 0.0 && z_prev > 0.0 && z_n.is_finite() && z_prev.is_finite()) {
        return Err(Error::Internal(format!(
            "partition functions not positive: {z_n}, {z_prev}"
        )));
    }
    let mut tv = Neumaier::default();
    for (p, q) in marginal.iter().zip(&reference) {
        tv.add((p / z_n - q / z_prev).abs());
    }
    let marginal_discrepancy = 0.5 * tv.value();

    Ok(GibbsCheckReport {
        eq5_residual: eq5_residual(model, f, opts)?,
        marginal_discrepancy,
        n,
        m,
        k: model.k,
        root_branching: model.root_branching,
        jbeta: model.jbeta,
        z_values: [z_n, z_prev],
        root_field_exponent,
        terms,
    })
}

fn sum(xs: &[f64]) -> f64 {
    let mut acc = Neumaier::default();
    for &x in xs {
        acc.add(x);
    }
    acc.value()
}

/// The two distributions behind a compatibility check, normalised; used by
/// tests to inspect the probability vectors themselves.
#[doc(hidden)]
pub fn normalised_pair<F: UnitFunction + ?Sized>(
    model: &ModelSpec,
    spin: &DiscretizedSpin,
    f: &F,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let field = boundary_field(f)?;
    let m = spin.len();
    let mut marginal = vec![0.0; m];
    let mut reference = vec![0.0; m];
    let s = f64::from(model.root_branching) / f64::from(model.k);
    for i in 0..m {
        let mut inner = Neumaier::default();
        for j in 0..m {
            inner.add(spin.weights[j] * model.weight(spin.nodes[i], spin.nodes[j]) * field.eval(spin.nodes[j])?.exp());
        }
        marginal[i] = spin.weights[i] * inner.value().powi(model.root_branching as i32);
        reference[i] = spin.weights[i] * (s * field.eval(spin.nodes[i])?).exp();
    }
    let (zm, zr) = (sum(&marginal), sum(&reference));
    Ok((
        marginal.iter().map(|x| x / zm).collect(),
        reference.iter().map(|x| x / zr).collect(),
    ))
}
