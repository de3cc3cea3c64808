//! Positive real roots of the quartic `P₄`.
//!
//! Mirror-symmetric tableaux give a palindromic structure,
//! `P₄(ξ) = (ξ − 1)(ξ + 1)(a22 ξ² + (3a21 − a11) ξ + a22)`, which is solved
//! in closed form. Everything else goes through Sturm-sequence isolation on
//! `(0, 1 + Σ|μᵢ|/μ₀]`, bisection, and a Newton polish.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::reduction::{horner, CoefficientTableau, Quartic};

/// Default refinement tolerance on root locations.
pub const ROOT_TOL: f64 = 1e-13;

/// Relative size of the band around `D = 0` treated as a double root.
pub const DISCRIMINANT_BAND: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Root {
    pub xi: f64,
    pub mult: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RootMethod {
    FactoredSymmetric,
    General,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RootSet {
    pub roots: Vec<Root>,
    pub residual_bound: f64,
    pub method: RootMethod,
}

impl RootSet {
    /// Number of distinct positive roots.
    pub fn distinct(&self) -> usize {
        self.roots.len()
    }

    /// Positive roots counted with multiplicity.
    pub fn with_multiplicity(&self) -> u32 {
        self.roots.iter().map(|r| r.mult).sum()
    }

    pub fn values(&self) -> Vec<f64> {
        self.roots.iter().map(|r| r.xi).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiscriminantRegime {
    Negative,
    ZeroWithinEps,
    Positive,
}

/// Discriminant of the palindromic quadratic factor
/// `a22 ξ² + (3a21 − a11) ξ + a22`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscriminantReport {
    #[serde(rename = "D")]
    pub d: f64,
    /// `3a21 − a11 − 2a22`
    pub factor_neg: f64,
    /// `3a21 − a11 + 2a22`
    pub factor_pos: f64,
    pub regime: DiscriminantRegime,
    pub eps: f64,
}

/// Tolerance within which a tableau is treated as mirror-symmetric.
pub fn mirror_tolerance(tab: &CoefficientTableau) -> f64 {
    let scale = tab.entries().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    tab.error_bound.max(1e-12 * scale)
}

/// Default band half-width around `D = 0`: `1e-9 · 4a22²`.
pub fn default_discriminant_eps(tab: &CoefficientTableau) -> f64 {
    DISCRIMINANT_BAND * 4.0 * tab.a22 * tab.a22
}

pub fn classify_discriminant(tab: &CoefficientTableau, eps: f64) -> Result<DiscriminantReport> {
    if !tab.is_mirror_symmetric(mirror_tolerance(tab)) {
        return Err(Error::Unsupported(format!(
            "discriminant classification needs a mirror-symmetric tableau (defect {:e})",
            tab.mirror_defect()
        )));
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!("eps must be positive, got {eps}")));
    }
    let c = 3.0 * tab.a21 - tab.a11;
    let factor_neg = c - 2.0 * tab.a22;
    let factor_pos = c + 2.0 * tab.a22;
    let d = c * c - 4.0 * tab.a22 * tab.a22;
    let product = factor_neg * factor_pos;
    if (d - product).abs() > 1e-12 * (1.0f64).max(d.abs()).max(c * c) {
        return Err(Error::Internal(format!(
            "discriminant forms disagree: {d} vs {product}"
        )));
    }
    let regime = if d.abs() <= eps {
        DiscriminantRegime::ZeroWithinEps
    } else if d < 0.0 {
        DiscriminantRegime::Negative
    } else {
        DiscriminantRegime::Positive
    };
    Ok(DiscriminantReport {
        d,
        factor_neg,
        factor_pos,
        regime,
        eps,
    })
}

/// All roots of `q` in `(0, ∞)`, refined to `tol`.
pub fn positive_roots(q: &Quartic, tol: f64) -> Result<RootSet> {
    check_quartic(q, tol)?;
    if q.source.is_mirror_symmetric(mirror_tolerance(&q.source)) {
        factored_roots(q)
    } else {
        positive_roots_general(q, tol)
    }
}

fn check_quartic(q: &Quartic, tol: f64) -> Result<()> {
    if !(q.mu0 != 0.0 && q.coefficients().iter().all(|c| c.is_finite())) {
        return Err(Error::RootIsolation(format!(
            "degenerate quartic coefficients {:?}",
            q.coefficients()
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("root tolerance must be positive, got {tol}")));
    }
    Ok(())
}

fn factored_roots(q: &Quartic) -> Result<RootSet> {
    let tab = &q.source;
    let report = classify_discriminant(tab, default_discriminant_eps(tab))?;
    let a22 = tab.a22;
    let c = 3.0 * tab.a21 - tab.a11;
    let coeffs = q.coefficients();

    let mut roots = vec![Root { xi: 1.0, mult: 1 }];
    match report.regime {
        DiscriminantRegime::Negative => {}
        DiscriminantRegime::ZeroWithinEps => {
            // roots of the palindromic factor multiply to 1, so a double
            // root is ±1; the positive one lands on ξ = 1
            if c < 0.0 {
                roots[0].mult = 3;
            }
        }
        DiscriminantRegime::Positive => {
            let s = report.d.sqrt();
            let big = -0.5 * (c + c.signum() * s);
            for xi in [big / a22, a22 / big] {
                if xi > 0.0 {
                    roots.push(Root {
                        xi: newton_polish(&coeffs, xi),
                        mult: 1,
                    });
                }
            }
        }
    }
    if roots[0].mult == 1 {
        roots[0].xi = newton_polish(&coeffs, 1.0);
    }
    roots.sort_by(|x, y| x.xi.total_cmp(&y.xi));
    Ok(finish(q, roots, RootMethod::FactoredSymmetric))
}

/// Sturm isolation path, usable for any quartic with `μ₀ ≠ 0`.
pub fn positive_roots_general(q: &Quartic, tol: f64) -> Result<RootSet> {
    check_quartic(q, tol)?;
    let coeffs = q.coefficients();
    let chain = SturmChain::new(&coeffs);
    let upper = cauchy_upper_bound(&coeffs);

    let total = chain.count(0.0, upper);
    let mut roots = Vec::new();
    let mut stack = vec![(0.0, upper, total)];
    let mut budget = 10_000;
    while let Some((lo, hi, n)) = stack.pop() {
        budget -= 1;
        if budget == 0 {
            return Err(Error::RootIsolation(
                "isolation did not converge within budget".into(),
            ));
        }
        match n {
            0 => {}
            1 => roots.push(refine_isolated(&chain, &coeffs, lo, hi, tol)),
            _ if hi - lo <= tol * hi.max(1.0) => {
                // unresolvable cluster: report once with its count
                let xi = 0.5 * (lo + hi);
                roots.push(Root { xi, mult: n as u32 });
            }
            _ => {
                let mid = 0.5 * (lo + hi);
                let left = chain.count(lo, mid);
                stack.push((mid, hi, n.saturating_sub(left)));
                stack.push((lo, mid, left));
            }
        }
    }
    roots.sort_by(|x, y| x.xi.total_cmp(&y.xi));
    for root in &mut roots {
        if root.mult == 1 {
            root.mult = multiplicity(&coeffs, root.xi);
        }
    }
    Ok(finish(q, roots, RootMethod::General))
}

fn finish(q: &Quartic, roots: Vec<Root>, method: RootMethod) -> RootSet {
    let residual_bound = roots
        .iter()
        .map(|r| q.eval(r.xi).abs())
        .fold(0.0, f64::max);
    RootSet {
        roots,
        residual_bound,
        method,
    }
}

/// `1 + Σ|μᵢ|/|μ₀|`, an upper bound on every root modulus.
pub fn cauchy_upper_bound(coeffs: &[f64]) -> f64 {
    let lead = coeffs[0].abs();
    1.0 + coeffs[1..].iter().map(|c| c.abs()).sum::<f64>() / lead
}

fn refine_isolated(chain: &SturmChain, coeffs: &[f64], mut lo: f64, mut hi: f64, tol: f64) -> Root {
    let mut f_lo = horner(coeffs, lo);
    let f_hi = horner(coeffs, hi);
    if f_hi == 0.0 {
        return Root { xi: hi, mult: 1 };
    }
    let sign_change = f_lo.signum() != f_hi.signum();
    for _ in 0..200 {
        if hi - lo <= tol * hi.max(1.0) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if sign_change {
            let f_mid = horner(coeffs, mid);
            if f_mid == 0.0 {
                return Root { xi: mid, mult: 1 };
            }
            if f_mid.signum() == f_lo.signum() {
                lo = mid;
                f_lo = f_mid;
            } else {
                hi = mid;
            }
        } else if chain.count(lo, mid) == 1 {
            // even multiplicity: no sign change, follow the Sturm count
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let xi = 0.5 * (lo + hi);
    let polished = newton_polish(coeffs, xi);
    let xi = if polished > lo - tol && polished <= hi + tol {
        polished
    } else {
        xi
    };
    Root { xi, mult: 1 }
}

fn derivative(coeffs: &[f64]) -> Vec<f64> {
    let n = coeffs.len() - 1;
    coeffs[..n]
        .iter()
        .enumerate()
        .map(|(i, c)| c * (n - i) as f64)
        .collect()
}

fn newton_polish(coeffs: &[f64], mut x: f64) -> f64 {
    let d = derivative(coeffs);
    for _ in 0..4 {
        let fx = horner(coeffs, x);
        let dx = horner(&d, x);
        if dx == 0.0 || !dx.is_finite() {
            break;
        }
        let step = fx / dx;
        let next = x - step;
        // keep the polish only when it does not make things worse
        if horner(coeffs, next).abs() > fx.abs() {
            break;
        }
        x = next;
        if step.abs() <= f64::EPSILON * x.abs() {
            break;
        }
    }
    x
}

fn multiplicity(coeffs: &[f64], x: f64) -> u32 {
    let mut mult = 1;
    let mut d = derivative(coeffs);
    while d.len() > 1 {
        let scale: f64 = d
            .iter()
            .enumerate()
            .map(|(i, c)| c.abs() * x.abs().powi((d.len() - 1 - i) as i32))
            .sum();
        if horner(&d, x).abs() > 1e-7 * scale {
            break;
        }
        mult += 1;
        d = derivative(&d);
    }
    mult
}

/// Floating-point Sturm chain, highest degree first.
struct SturmChain {
    polys: Vec<Vec<f64>>,
}

impl SturmChain {
    fn new(coeffs: &[f64]) -> Self {
        let p0 = coeffs.to_vec();
        let p1 = derivative(coeffs);
        let mut polys = vec![p0, p1];
        loop {
            let n = polys.len();
            let rem = remainder(&polys[n - 2], &polys[n - 1]);
            let scale = polys[n - 2].iter().fold(0.0f64, |m, c| m.max(c.abs()));
            let rem = trim(rem, 1e-12 * scale.max(f64::MIN_POSITIVE));
            if rem.is_empty() {
                break;
            }
            let done = rem.len() == 1;
            polys.push(rem.into_iter().map(|c| -c).collect());
            if done {
                break;
            }
        }
        Self { polys }
    }

    fn variations(&self, x: f64) -> usize {
        let mut count = 0;
        let mut last: f64 = 0.0;
        for p in &self.polys {
            let v = horner(p, x);
            if v == 0.0 {
                continue;
            }
            if last != 0.0 && v.signum() != last.signum() {
                count += 1;
            }
            last = v;
        }
        count
    }

    /// Distinct roots in `(lo, hi]`.
    fn count(&self, lo: f64, hi: f64) -> usize {
        self.variations(lo).saturating_sub(self.variations(hi))
    }
}

fn remainder(num: &[f64], den: &[f64]) -> Vec<f64> {
    let mut r = num.to_vec();
    let dl = den.len();
    while r.len() >= dl {
        let factor = r[0] / den[0];
        for (i, d) in den.iter().enumerate() {
            r[i] -= factor * d;
        }
        r.remove(0);
    }
    r
}

fn trim(mut p: Vec<f64>, threshold: f64) -> Vec<f64> {
    while p.first().is_some_and(|c| c.abs() <= threshold) {
        p.remove(0);
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reduction::{build_quartic, coefficients_closed_form, Provenance};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn tableau(e: [f64; 8]) -> CoefficientTableau {
        CoefficientTableau::new(e, Provenance::Quadrature, 0.0).unwrap()
    }

    fn trig_quartic(a: f64, b: f64) -> Quartic {
        build_quartic(&coefficients_closed_form(a, b).unwrap())
    }

    #[test]
    fn unit_parameters_give_one_root() {
        let rs = positive_roots(&trig_quartic(1.0, 1.0), ROOT_TOL).unwrap();
        assert_eq!(rs.method, RootMethod::FactoredSymmetric);
        assert_eq!(rs.values(), vec![1.0]);
    }

    #[test]
    fn three_roots_above_threshold() {
        let rs = positive_roots(&trig_quartic(12.0, 1.0), ROOT_TOL).unwrap();
        let v = rs.values();
        assert_eq!(v.len(), 3);
        // mpmath roots of ξ² + (c/a22)ξ + 1 at (12, 1)
        assert!((v[0] - 0.566136716098966330).abs() < 1e-12);
        assert!((v[1] - 1.0).abs() < 1e-15);
        assert!((v[2] - 1.766357792320238864).abs() < 1e-12);
        assert!((v[0] * v[2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn quartic_minus_one() {
        // a22 = 1, 3a21 = b22, a12 = b21, a11 = 3b12, b11 = 1
        let t = tableau([3.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 3.0]);
        let q = build_quartic(&t);
        assert_eq!(q.coefficients(), [1.0, 0.0, 0.0, 0.0, -1.0]);
        assert_eq!(positive_roots(&q, ROOT_TOL).unwrap().values(), vec![1.0]);
        let g = positive_roots_general(&q, ROOT_TOL).unwrap();
        assert_eq!(g.distinct(), 1);
        assert!((g.roots[0].xi - 1.0).abs() < 1e-12);
    }

    #[test]
    fn general_path_agrees_with_factored() {
        for (a, b) in [(1.0, 1.0), (12.0, 1.0), (30.0, 2.0), (0.1, 5.0)] {
            let q = trig_quartic(a, b);
            let f = positive_roots(&q, ROOT_TOL).unwrap();
            let g = positive_roots_general(&q, ROOT_TOL).unwrap();
            assert_eq!(g.method, RootMethod::General);
            assert_eq!(f.distinct(), g.distinct(), "({a},{b})");
            for (x, y) in f.values().iter().zip(g.values()) {
                assert!((x - y).abs() < 1e-10, "({a},{b}): {x} vs {y}");
            }
        }
    }

    #[test]
    fn threshold_is_a_triple_root_at_one() {
        let a = 35.0 * (44.0 + 15.0 * std::f64::consts::PI) / 318.0;
        let rs = positive_roots(&trig_quartic(a, 1.0), ROOT_TOL).unwrap();
        assert_eq!(rs.roots, vec![Root { xi: 1.0, mult: 3 }]);
        assert_eq!(rs.with_multiplicity(), 3);
    }

    #[test]
    fn discriminant_regimes() {
        let r = classify_discriminant(&coefficients_closed_form(1.0, 1.0).unwrap(), 1e-9).unwrap();
        assert_eq!(r.regime, DiscriminantRegime::Negative);
        // mpmath: −3.88826758591885763
        assert!((r.d + 3.888267585918857).abs() < 1e-12);

        let a = 35.0 * (44.0 + 15.0 * std::f64::consts::PI) / 318.0;
        let t = coefficients_closed_form(a, 1.0).unwrap();
        let r = classify_discriminant(&t, default_discriminant_eps(&t)).unwrap();
        assert_eq!(r.regime, DiscriminantRegime::ZeroWithinEps);
        assert!(r.factor_pos.abs() < 1e-13);
        assert!(r.factor_neg < 0.0);

        let t = coefficients_closed_form(12.0, 1.0).unwrap();
        let r = classify_discriminant(&t, default_discriminant_eps(&t)).unwrap();
        assert_eq!(r.regime, DiscriminantRegime::Positive);
        assert!((3.0 * t.a21 - t.a11 + 3.331744100249035).abs() < 1e-12);
    }

    #[test]
    fn discriminant_needs_symmetric_tableau() {
        let t = tableau([1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]);
        assert!(matches!(
            classify_discriminant(&t, 1e-9),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn degenerate_quartic_rejected() {
        let mut q = trig_quartic(1.0, 1.0);
        q.mu0 = 0.0;
        assert!(positive_roots(&q, ROOT_TOL).is_err());
    }

    #[test]
    fn general_double_root() {
        // (ξ − 2)²(ξ² + 1) = ξ⁴ − 4ξ³ + 5ξ² − 4ξ + 4; μ₄ > 0 is fine here
        let t = tableau([1.0; 8]);
        let mut q = build_quartic(&t);
        q.mu0 = 1.0;
        q.mu1 = -4.0;
        q.mu2 = 5.0 / 3.0;
        q.mu3 = -4.0;
        q.mu4 = 4.0;
        let rs = positive_roots_general(&q, ROOT_TOL).unwrap();
        assert_eq!(rs.distinct(), 1);
        assert!((rs.roots[0].xi - 2.0).abs() < 1e-6);
        assert_eq!(rs.roots[0].mult, 2);
    }

    #[test]
    fn residuals_and_sign_structure_on_random_tableaux() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..2000 {
            let e: [f64; 8] = std::array::from_fn(|_| 10f64.powf(rng.gen_range(-2.0..2.0)));
            let q = build_quartic(&tableau(e));
            assert!(q.mu0 > 0.0 && q.mu4 < 0.0);
            let rs = positive_roots(&q, ROOT_TOL).unwrap();
            let n = rs.with_multiplicity();
            assert!((1..=3).contains(&n), "{e:?}: {rs:?}");
            // roots far from 1 make |P₄| round-off scale with ξ⁴, so the
            // residual is measured against the sum of term magnitudes there
            for r in &rs.roots {
                let terms: f64 = q.coefficients().iter().map(|c| c.abs() * r.xi.max(1.0).powi(4)).sum();
                let res = q.eval(r.xi).abs();
                assert!(res <= rs.residual_bound, "{e:?}: {rs:?}");
                assert!(res <= (1e-9 * q.scale()).max(1e-12 * terms), "{e:?}: {rs:?}");
            }
        }
    }
}
