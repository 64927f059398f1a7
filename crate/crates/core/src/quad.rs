//! Certified numerical values: an estimate with a lower and upper bound, and
//! the trapezoid rule with a step-doubling error estimate.

use serde::{Deserialize, Serialize};

use crate::rule::AttachmentRule;

/// A numerical value with a certified enclosure `lo <= est <= hi`.
/// Unbounded quantities carry `hi = +inf`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bracket {
    pub est: f64,
    pub lo: f64,
    pub hi: f64,
}

impl Bracket {
    pub fn exact(v: f64) -> Self {
        Bracket {
            est: v,
            lo: v,
            hi: v,
        }
    }

    pub fn new(est: f64, lo: f64, hi: f64) -> Self {
        let lo = lo.min(est);
        let hi = hi.max(est);
        Bracket { est, lo, hi }
    }

    pub fn infinite() -> Self {
        Bracket {
            est: f64::INFINITY,
            lo: f64::INFINITY,
            hi: f64::INFINITY,
        }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn is_finite(&self) -> bool {
        self.hi.is_finite()
    }

    /// Relative width, `inf` when unbounded.
    pub fn rel_width(&self) -> f64 {
        if !self.hi.is_finite() {
            f64::INFINITY
        } else if self.est == 0.0 {
            self.width()
        } else {
            self.width() / self.est.abs()
        }
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }

    /// Widens by a symmetric absolute error.
    pub fn pad(self, err: f64) -> Self {
        Bracket {
            est: self.est,
            lo: self.lo - err,
            hi: self.hi + err,
        }
    }

    pub fn scale(self, c: f64) -> Self {
        debug_assert!(c >= 0.0);
        Bracket {
            est: self.est * c,
            lo: self.lo * c,
            hi: self.hi * c,
        }
    }
}

impl std::ops::Add for Bracket {
    type Output = Bracket;

    fn add(self, o: Bracket) -> Bracket {
        Bracket {
            est: self.est + o.est,
            lo: self.lo + o.lo,
            hi: self.hi + o.hi,
        }
    }
}

/// Trapezoid rule on a uniform grid of `n + 1` samples with step `h`, with
/// one Richardson step against the doubled grid. Returns the corrected value
/// and `|T_h - T_2h| / 3`, the error estimate of the uncorrected rule.
pub fn trapezoid(n: usize, h: f64, g: impl Fn(usize) -> f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 0.0);
    }
    let vals: Vec<f64> = (0..=n).map(&g).collect();
    let fine = h * (vals[1..n].iter().sum::<f64>() + 0.5 * (vals[0] + vals[n]));
    let even = n - n % 2;
    if even < 2 {
        return (fine, 0.0);
    }
    let mut coarse = 0.0;
    for i in (0..even).step_by(2) {
        coarse += h * (vals[i] + vals[i + 2]);
    }
    if even < n {
        coarse += 0.5 * h * (vals[even] + vals[n]);
    }
    let corr = (fine - coarse) / 3.0;
    if even == n {
        (fine + corr, corr.abs())
    } else {
        (fine, corr.abs())
    }
}

/// Cumulative trapezoid, `out[i] = ∫_0^{t_i}`.
pub fn cumulative_trapezoid(vals: &[f64], h: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(vals.len());
    let mut acc = 0.0;
    out.push(0.0);
    for w in vals.windows(2) {
        acc += 0.5 * h * (w[0] + w[1]);
        out.push(acc);
    }
    out
}

/// Bounds on `∫_0^∞ e^{-x u} Σ_k law(k) P_u f(k) du` for a state law at the
/// end of a tabulated horizon.
///
/// Lower: `P_u f(k) >= f(k) e^{s u}` with `s` the asymptotic slope.
/// Upper: `P_u f(k) <= P_u f(m) <= f(m) e^{Δf(m) u}` for `m = max(k, K*)`,
/// where `K*` is the first state whose increment is below `x`.
pub fn semigroup_tail(rule: &AttachmentRule, law: &[f64], x: f64) -> (f64, f64) {
    let s = rule.asymptotic_slope();
    let lo = if x <= s {
        f64::INFINITY
    } else {
        law.iter()
            .enumerate()
            .map(|(k, p)| p * rule.eval(k as u64))
            .sum::<f64>()
            / (x - s)
    };
    let hi = match rule.first_index_with_delta_below(x) {
        None => f64::INFINITY,
        Some(kstar) => law
            .iter()
            .enumerate()
            .filter(|(_, p)| **p > 0.0)
            .map(|(k, p)| {
                let m = (k as u64).max(kstar);
                p * rule.eval(m) / (x - rule.delta(m))
            })
            .sum(),
    };
    (lo, hi.max(lo))
}

/// Tail `∫_T^∞ e^{-x t} g(t) dt` bracketed by `[lo, hi]` (already scaled by
/// `e^{-xT}`) with the estimate extrapolating `g` at its final log-slope.
pub fn extrapolated_tail(g_prev: f64, g_last: f64, h: f64, t_end: f64, x: f64, lo: f64, hi: f64) -> Bracket {
    if !lo.is_finite() {
        return Bracket::infinite();
    }
    let slope = if g_prev > 0.0 && g_last > 0.0 {
        (g_last / g_prev).ln() / h
    } else {
        0.0
    };
    let est = if slope < x {
        g_last * (-x * t_end).exp() / (x - slope)
    } else {
        hi
    };
    let est = est.clamp(lo, hi);
    Bracket { est, lo, hi }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trapezoid_integrates_exponential() {
        let h = 0.01;
        let (v, err) = trapezoid(1000, h, |i| (-(i as f64) * h).exp());
        let exact = 1.0 - (-10.0f64).exp();
        assert!((v - exact).abs() < 1e-9);
        assert!(err > 0.0 && err < 1e-5);
    }

    #[test]
    fn cumulative_matches_total() {
        let vals: Vec<f64> = (0..101).map(|i| (i as f64 * 0.1).sin()).collect();
        let cum = cumulative_trapezoid(&vals, 0.1);
        let (tot, _) = trapezoid(100, 0.1, |i| vals[i]);
        assert!((cum[100] - tot).abs() < 1e-2);
    }

    #[test]
    fn linear_tail_is_exact() {
        let r = AttachmentRule::linear(0.3, 0.5).unwrap();
        let law = [0.2, 0.5, 0.3];
        let (lo, hi) = semigroup_tail(&r, &law, 0.7);
        let mean: f64 = law.iter().enumerate().map(|(k, p)| p * r.eval(k as u64)).sum();
        assert!((lo - mean / 0.4).abs() < 1e-12);
        assert!((hi - lo).abs() < 1e-12);
        let (lo, hi) = semigroup_tail(&r, &law, 0.3);
        assert!(lo.is_infinite() && hi.is_infinite());
    }
}
