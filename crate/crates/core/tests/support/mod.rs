#![allow(dead_code)]

use std::time::{Duration, Instant};

use hammfix::Quartic;

/// Positive roots of `q` located by sign changes on a dense log-spaced
/// grid between lower and upper root bounds, each refined by bisection.
pub fn dense_scan_roots(q: &Quartic, samples: usize) -> Vec<f64> {
    let c = q.coefficients();
    let upper = 1.0 + c[1..].iter().map(|x| x.abs()).sum::<f64>() / c[0].abs();
    // roots of the reversed polynomial bound ξ from below
    let lower = 1.0 / (1.0 + c[..4].iter().map(|x| x.abs()).sum::<f64>() / c[4].abs());
    let (l0, l1) = (lower.ln(), upper.ln());
    let grid: Vec<f64> = (0..samples)
        .map(|i| (l0 + (l1 - l0) * i as f64 / (samples - 1) as f64).exp())
        .collect();
    let mut roots = Vec::new();
    let mut prev = q.eval(grid[0]);
    for w in grid.windows(2) {
        let next = q.eval(w[1]);
        if next == 0.0 {
            roots.push(w[1]);
        } else if prev != 0.0 && prev.signum() != next.signum() {
            roots.push(bisect(q, w[0], w[1]));
        }
        prev = next;
    }
    roots
}

fn bisect(q: &Quartic, mut lo: f64, mut hi: f64) -> f64 {
    let s_lo = q.eval(lo).signum();
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if q.eval(mid).signum() == s_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Prints one verdict line per acceptance check.
pub fn report(id: &str, what: &str, pass: bool, detail: &str, elapsed: Duration) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    println!("[{verdict}] criterion {id}: {what} ({detail}; {:.2} s)", elapsed.as_secs_f64());
}

pub fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed())
}
