//! Laplace transforms of the semigroup as series:
//! `∫_0^∞ e^{-xt} P_t f(k) dt = Σ_{m>=0} Π_{i=0}^{m} f(k+i)/(f(k+i)+x)`,
//! the expectation of `Σ_m f(Z_{T_m}) ∫_{T_m}^{T_{m+1}} e^{-xt} dt` over the
//! jump times `T_m` of `Z` started at `k`.
//!
//! After term `m` the remainder is `t_m` times the same transform from
//! `k+m+1`, which lies in `[f(j)/(x-s), f(j)/(x-Δf(j))]` for `j = k+m+1` and
//! `s` the asymptotic slope (growth of `P_t f(j)` between `s` and `Δf(j)`).
//! The series diverges exactly when `x <= s`.

use serde::{Deserialize, Serialize};

use crate::quad::Bracket;
use crate::rule::AttachmentRule;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeriesStatus {
    Converged,
    Divergent,
    /// No finite remainder bound within the term budget.
    Undetermined,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesValue {
    pub value: Bracket,
    pub terms: usize,
    pub status: SeriesStatus,
}

impl SeriesValue {
    pub fn is_finite(&self) -> bool {
        self.status == SeriesStatus::Converged
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SeriesConfig {
    /// Stop once the remainder bracket is this small relative to the sum.
    pub rel_tol: f64,
    pub max_terms: usize,
}

impl Default for SeriesConfig {
    fn default() -> Self {
        SeriesConfig {
            rel_tol: 1e-12,
            max_terms: 10_000_000,
        }
    }
}

/// Remainder bracket `[lo, hi]` for the transform started at `j`.
pub(crate) fn remainder_factor(rule: &AttachmentRule, x: f64, j: u64) -> (f64, f64) {
    let s = rule.asymptotic_slope();
    let fj = rule.eval(j);
    let lo = if x > s { fj / (x - s) } else { f64::INFINITY };
    let d = rule.delta(j);
    let hi = if x > d { fj / (x - d) } else { f64::INFINITY };
    (lo, hi.max(lo))
}

/// `∫_0^∞ e^{-xt} P_t f(k) dt`.
pub fn laplace_pf(rule: &AttachmentRule, x: f64, k: u64, cfg: &SeriesConfig) -> SeriesValue {
    if !(x > rule.asymptotic_slope()) {
        return SeriesValue {
            value: Bracket::infinite(),
            terms: 0,
            status: SeriesStatus::Divergent,
        };
    }
    let mut sum = 0.0;
    let mut term = 1.0;
    let mut last = (f64::INFINITY, f64::INFINITY);
    for m in 0..cfg.max_terms {
        let g = rule.eval(k + m as u64);
        term *= g / (g + x);
        sum += term;
        let (lo, hi) = remainder_factor(rule, x, k + m as u64 + 1);
        last = (term * lo, term * hi);
        if last.1.is_finite() && last.1 - last.0 <= cfg.rel_tol * sum {
            let est = sum + 0.5 * (last.0 + last.1);
            return SeriesValue {
                value: Bracket::new(est, sum + last.0, sum + last.1),
                terms: m + 1,
                status: SeriesStatus::Converged,
            };
        }
    }
    if last.1.is_finite() {
        SeriesValue {
            value: Bracket::new(sum + 0.5 * (last.0 + last.1), sum + last.0, sum + last.1),
            terms: cfg.max_terms,
            status: SeriesStatus::Converged,
        }
    } else {
        SeriesValue {
            value: Bracket::new(f64::INFINITY, sum + last.0, f64::INFINITY),
            terms: cfg.max_terms,
            status: SeriesStatus::Undetermined,
        }
    }
}

/// `∫_0^∞ e^{-xt} P_t f(j) dt` for every `j <= top`, by the backward
/// recursion `L(j) = f(j)/(f(j)+x) (1 + L(j+1))` from the series at `top`.
pub fn laplace_pf_all(rule: &AttachmentRule, x: f64, top: u64, cfg: &SeriesConfig) -> Vec<Bracket> {
    let start = laplace_pf(rule, x, top, cfg);
    let mut out = vec![Bracket::infinite(); top as usize + 1];
    if start.status != SeriesStatus::Converged {
        return out;
    }
    out[top as usize] = start.value;
    for j in (0..top).rev() {
        let g = rule.eval(j);
        let r = g / (g + x);
        let next = out[j as usize + 1];
        out[j as usize] = Bracket {
            est: r * (1.0 + next.est),
            lo: r * (1.0 + next.lo),
            hi: r * (1.0 + next.hi),
        };
    }
    out
}
