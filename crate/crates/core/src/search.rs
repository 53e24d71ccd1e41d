//! Bisection on monotone boolean predicates over a real parameter.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchConfig {
    /// Stop once the bracket is narrower than `rel_tol · max(|hi|, 1)`.
    pub rel_tol: f64,
    /// Evenly spaced probes used to test monotonicity after bisection.
    pub probes: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            rel_tol: 1e-15,
            probes: 16,
        }
    }
}

/// Result of a search: the predicate is true at `true_side` and false at
/// `false_side`, which are adjacent within tolerance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracket {
    pub true_side: f64,
    pub false_side: f64,
    pub fallbacks: usize,
}

const MAX_RESCANS: usize = 4;

fn narrow(
    f: &mut impl FnMut(f64) -> Result<bool>,
    mut f_lo: f64,
    mut t_lo: f64,
    cfg: &SearchConfig,
) -> Result<(f64, f64)> {
    // invariant: f(f_lo) false, f(t_lo) true; either may be the larger endpoint
    for _ in 0..2000 {
        let width = (t_lo - f_lo).abs();
        let scale = t_lo.abs().max(f_lo.abs()).max(1.0);
        if width <= cfg.rel_tol * scale {
            break;
        }
        let mid = f_lo + (t_lo - f_lo) / 2.0;
        if mid == f_lo || mid == t_lo {
            break;
        }
        if f(mid)? {
            t_lo = mid;
        } else {
            f_lo = mid;
        }
    }
    Ok((t_lo, f_lo))
}

/// Smallest `t` in `(lo, hi]` with `f(t)` true, given `f(lo)` false and `f(hi)` true.
pub fn earliest_true(
    mut f: impl FnMut(f64) -> Result<bool>,
    lo: f64,
    hi: f64,
    cfg: &SearchConfig,
) -> Result<Bracket> {
    if !(lo <= hi) {
        return Err(Error::internal(format!("empty search bracket [{lo}, {hi}]")));
    }
    let mut fallbacks = 0;
    let (mut t, mut fs) = narrow(&mut f, lo, hi, cfg)?;
    for _ in 0..MAX_RESCANS {
        let mut prev = lo;
        let mut hit = None;
        for j in 1..=cfg.probes {
            let p = lo + (t - lo) * j as f64 / (cfg.probes + 1) as f64;
            if p <= prev || p >= fs.min(t) {
                continue;
            }
            if f(p)? {
                hit = Some((prev, p));
                break;
            }
            prev = p;
        }
        match hit {
            None => break,
            Some((false_at, true_at)) => {
                fallbacks += 1;
                (t, fs) = narrow(&mut f, false_at, true_at, cfg)?;
            }
        }
    }
    Ok(Bracket {
        true_side: t,
        false_side: fs,
        fallbacks,
    })
}

/// Largest `t` in `[lo, hi)` with `f(t)` true, given `f(lo)` true and `f(hi)` false.
pub fn latest_true(
    mut f: impl FnMut(f64) -> Result<bool>,
    lo: f64,
    hi: f64,
    cfg: &SearchConfig,
) -> Result<Bracket> {
    if !(lo <= hi) {
        return Err(Error::internal(format!("empty search bracket [{lo}, {hi}]")));
    }
    let mut fallbacks = 0;
    let (mut t, mut fs) = narrow(&mut f, hi, lo, cfg)?;
    for _ in 0..MAX_RESCANS {
        let mut next = hi;
        let mut hit = None;
        for j in 1..=cfg.probes {
            let p = hi - (hi - fs) * j as f64 / (cfg.probes + 1) as f64;
            if p >= next || p <= t.max(fs) {
                continue;
            }
            if f(p)? {
                hit = Some((p, next));
                break;
            }
            next = p;
        }
        match hit {
            None => break,
            Some((true_at, false_at)) => {
                fallbacks += 1;
                (t, fs) = narrow(&mut f, false_at, true_at, cfg)?;
            }
        }
    }
    Ok(Bracket {
        true_side: t,
        false_side: fs,
        fallbacks,
    })
}
