//! Real functions on the unit interval.
//!
//! Everything that gets integrated, compared or sampled goes through
//! [`UnitFunction`], which pairs an evaluation rule with the interior points
//! where the rule stops being smooth. Quadrature splits panels there.

use std::sync::Arc;

/// A real function on `[0, 1]` together with its interior kinks.
pub trait UnitFunction: Send + Sync {
    fn eval(&self, t: f64) -> f64;

    /// Sorted points in `(0, 1)` where the function is not smooth.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }
}

impl<F> UnitFunction for F
where
    F: Fn(f64) -> f64 + Send + Sync,
{
    fn eval(&self, t: f64) -> f64 {
        self(t)
    }
}

/// Closure with declared breakpoints.
#[derive(Clone)]
pub struct Piecewise {
    rule: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    breaks: Vec<f64>,
}

impl Piecewise {
    pub fn new<F>(rule: F, breaks: impl Into<Vec<f64>>) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let mut breaks = breaks.into();
        normalize_breakpoints(&mut breaks);
        Self {
            rule: Arc::new(rule),
            breaks,
        }
    }
}

impl std::fmt::Debug for Piecewise {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Piecewise")
            .field("breaks", &self.breaks)
            .finish_non_exhaustive()
    }
}

impl UnitFunction for Piecewise {
    fn eval(&self, t: f64) -> f64 {
        (self.rule)(t)
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.breaks.clone()
    }
}

/// Sorts, dedups and drops anything not strictly inside `(0, 1)`.
pub(crate) fn normalize_breakpoints(breaks: &mut Vec<f64>) {
    breaks.retain(|b| *b > 0.0 && *b < 1.0);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
}

/// Union of several breakpoint lists.
pub(crate) fn merge_breakpoints<I>(lists: I) -> Vec<f64>
where
    I: IntoIterator<Item = Vec<f64>>,
{
    let mut all: Vec<f64> = lists.into_iter().flatten().collect();
    normalize_breakpoints(&mut all);
    all
}
