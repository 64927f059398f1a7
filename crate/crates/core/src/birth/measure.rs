//! Offspring measures of the idealized branching random walk:
//! `dM(t) = e^{-t} E f(Z_t) dt` (left), `dM^ℓ(t) = E f(Z_t) dt` (right of an
//! `ℓ`-particle) and `dM^τ` (right of a type-`τ` particle, the forced jump at
//! `τ` removed).
//!
//! Before `τ` the conditioned chain has marginal
//! `P(Z_t = k) P_{τ-t} f(k) / P_τ f(0)`, at `τ` it jumps from `k` with weight
//! `P(Z_τ = k) f(k) / E f(Z_τ)`, afterwards it is free. Both regimes give
//! `dM^τ/dt = Σ_k P(Z_s = k) f(k) P_u f(k+1) / E f(Z_τ)` with
//! `s = min(t, τ)`, `u = |τ - t|`.
//!
//! For `h(α, τ) = ∫ e^{-αt} dM^τ(t)` the part after `τ` is
//! `e^{-ατ} Σ_k P(Z_τ = k) f(k) L(k+1)` with `L` the Laplace series of the
//! semigroup. The part before `τ` is `Σ_k V_τ(k) f(k)` where `V` solves the
//! forward equation with mass injected at `k+1` at rate
//! `e^{-αt} P(Z_t = k) f(k)`, so every grid `τ` is served by one sweep.

use super::laplace::{laplace_pf, laplace_pf_all, SeriesConfig, SeriesStatus};
use super::semigroup::{ExpStep, SemigroupTable};
use crate::error::{Error, Result};
use crate::quad::{cumulative_trapezoid, extrapolated_tail, semigroup_tail, trapezoid, Bracket};
use crate::rule::AttachmentRule;

#[derive(Clone, Debug)]
pub struct MeasureTables {
    table: SemigroupTable,
    /// `E f(Z_t)` on the grid, the density of `M^ℓ`.
    ml_density: Vec<f64>,
    /// `E^1 f(Z_t)` on the grid, the density of `M^0`.
    m0_density: Vec<f64>,
    /// `M(t)` on the grid.
    m_vals: Vec<f64>,
    profiles: Vec<HProfile>,
}

/// `h(α, τ)` for every grid `τ`.
#[derive(Clone, Debug)]
pub struct HProfile {
    pub alpha: f64,
    pub values: Vec<Bracket>,
}

impl HProfile {
    pub fn at(&self, i: usize) -> Bracket {
        self.values[i]
    }
}

/// `τ` grid: zero plus `points - 1` log-spaced grid indices up to the horizon.
pub fn log_tau_grid(n: usize, points: usize) -> Vec<usize> {
    let mut out = vec![0usize];
    if n == 0 || points < 2 {
        return out;
    }
    let m = points - 1;
    for j in 0..m {
        let x = (n as f64).powf(j as f64 / (m - 1).max(1) as f64);
        let i = (x.round() as usize).clamp(1, n);
        if *out.last().unwrap() != i {
            out.push(i);
        }
    }
    if *out.last().unwrap() != n {
        out.push(n);
    }
    out
}

impl MeasureTables {
    /// Wraps a semigroup table and caches `h(α, ·)` for `alpha_list`.
    pub fn build(table: SemigroupTable, alpha_list: &[f64]) -> Result<Self> {
        let n = table.steps();
        let dt = table.dt();
        let ml_density: Vec<f64> = (0..=n).map(|i| table.value(i, 0)).collect();
        let m0_density: Vec<f64> = (0..=n).map(|i| table.value(i, 1)).collect();
        let left: Vec<f64> = ml_density
            .iter()
            .enumerate()
            .map(|(i, v)| (-(i as f64) * dt).exp() * v)
            .collect();
        let m_vals = cumulative_trapezoid(&left, dt);
        let mut me = MeasureTables {
            table,
            ml_density,
            m0_density,
            m_vals,
            profiles: Vec::new(),
        };
        for &a in alpha_list {
            let p = me.compute_profile(a)?;
            me.profiles.push(p);
        }
        Ok(me)
    }

    pub fn semigroup(&self) -> &SemigroupTable {
        &self.table
    }

    pub fn rule(&self) -> &AttachmentRule {
        self.table.rule()
    }

    pub fn dt(&self) -> f64 {
        self.table.dt()
    }

    pub fn steps(&self) -> usize {
        self.table.steps()
    }

    pub fn t_max(&self) -> f64 {
        self.table.t_max()
    }

    pub fn time(&self, i: usize) -> f64 {
        i as f64 * self.dt()
    }

    pub fn mean_f(&self) -> &[f64] {
        &self.ml_density
    }

    pub fn mean_f_from_one(&self) -> &[f64] {
        &self.m0_density
    }

    pub fn m_vals(&self) -> &[f64] {
        &self.m_vals
    }

    /// `M^ℓ(t) = E[Z_t]` on the grid.
    pub fn ml_cumulative(&self) -> Vec<f64> {
        cumulative_trapezoid(&self.ml_density, self.dt())
    }

    /// Density of `M^τ` on the grid for `τ = t_{tau_index}`.
    pub fn mtau_density(&self, tau_index: usize) -> Vec<f64> {
        let tab = &self.table;
        let n = tab.steps();
        let km = tab.k_max();
        let law = tab.law(0).expect("law from 0 is always tabulated");
        let f: Vec<f64> = (0..=km as u64).map(|k| tab.rule().eval(k)).collect();
        let norm = self.ml_density[tau_index];
        (0..=n)
            .map(|j| {
                let s = tau_index.min(j);
                let u = tau_index.abs_diff(j);
                let p = law.row(s);
                let pu = tab.row(u);
                let mut acc = 0.0;
                for k in 0..km {
                    acc += p[k] * f[k] * pu[k + 1];
                }
                acc / norm
            })
            .collect()
    }

    /// `M^τ(t)` on the grid.
    pub fn mtau_cumulative(&self, tau_index: usize) -> Vec<f64> {
        cumulative_trapezoid(&self.mtau_density(tau_index), self.dt())
    }

    /// `∫_0^∞ e^{-x t} g(t) dt` for a tabulated `g = E^{k0} f(Z_t)`, the tail
    /// past the horizon bracketed analytically.
    fn integral_with_tail(&self, g: &[f64], k0: usize, x: f64) -> Bracket {
        let n = self.steps();
        let dt = self.dt();
        let law_end = self.table.law(k0).expect("tabulated law").row(n);
        let (head, err) = trapezoid(n, dt, |i| (-x * i as f64 * dt).exp() * g[i]);
        let (lo, hi) = semigroup_tail(self.rule(), law_end, x);
        let scale = (-x * self.t_max()).exp();
        if !lo.is_finite() {
            return Bracket::infinite();
        }
        let tail = extrapolated_tail(g[n - 1], g[n], dt, self.t_max(), x, lo * scale, hi * scale);
        if !tail.is_finite() {
            return Bracket::new(f64::INFINITY, head + lo * scale, f64::INFINITY);
        }
        (Bracket::exact(head) + tail).pad(err)
    }

    /// `M(∞)`.
    pub fn m_total(&self) -> Bracket {
        self.integral_with_tail(&self.ml_density, 0, 1.0)
    }

    /// `∫_0^∞ e^{-αt} E f(Z_t) dt`, the quadrature route to `a(α)`.
    pub fn integral_a(&self, alpha: f64) -> Bracket {
        self.integral_with_tail(&self.ml_density, 0, alpha)
    }

    /// `∫_0^∞ e^{(α-1)t} E f(Z_t) dt = ∫ e^{αt} dM(t)`.
    pub fn integral_b(&self, alpha: f64) -> Bracket {
        self.integral_with_tail(&self.ml_density, 0, 1.0 - alpha)
    }

    /// `∫_0^∞ e^{-αt} E^1 f(Z_t) dt = h(α, 0)`.
    pub fn integral_c(&self, alpha: f64) -> Bracket {
        self.integral_with_tail(&self.m0_density, 1, alpha)
    }

    /// `h(α, ·)` on the grid, from the cache when `α` was requested at build.
    pub fn h_profile(&self, alpha: f64) -> Result<HProfile> {
        if let Some(p) = self.profiles.iter().find(|p| p.alpha == alpha) {
            return Ok(p.clone());
        }
        self.compute_profile(alpha)
    }

    /// `h(α, τ) E f(Z_τ)` on the grid.
    fn raw_profile(&self, alpha: f64) -> Result<Vec<Bracket>> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::ParameterOutOfRange {
                name: "alpha",
                value: alpha,
                bound: "0 < alpha < 1",
            });
        }
        let rule = self.rule();
        let tab = &self.table;
        let n = tab.steps();
        let dt = tab.dt();
        let km = tab.k_max();
        let law = tab.law(0).expect("law from 0 is always tabulated");
        let lap = laplace_pf_all(rule, alpha, km as u64 + 1, &SeriesConfig::default());
        if !lap[0].is_finite() {
            return Err(Error::Divergent(format!(
                "h(alpha={alpha}): the semigroup transform diverges"
            )));
        }
        let f: Vec<f64> = (0..=km as u64).map(|k| rule.eval(k)).collect();
        let disc: Vec<f64> = (0..=n).map(|i| (-alpha * i as f64 * dt).exp()).collect();

        // after τ
        let mut out: Vec<Bracket> = (0..=n)
            .map(|i| {
                let p = law.row(i);
                let mut b = Bracket::exact(0.0);
                for k in 0..=km {
                    let w = p[k] * f[k] * disc[i];
                    b.est += w * lap[k + 1].est;
                    b.lo += w * lap[k + 1].lo;
                    b.hi += w * lap[k + 1].hi;
                }
                b
            })
            .collect();

        // before τ
        let mut prev = vec![0.0; n + 1];
        let mut col = vec![0.0; n + 1];
        let mut src = vec![0.0; n + 1];
        let mut acc = vec![0.0; n + 1];
        let mut p_prev = law.column(0);
        for k in 1..=km {
            for i in 0..=n {
                src[i] = prev[i] + disc[i] * p_prev[i];
            }
            let rate = if k < km { f[k] } else { 0.0 };
            ExpStep::new(rate, dt).sweep(0.0, f[k - 1], &src, &mut col);
            for i in 0..=n {
                acc[i] += f[k] * col[i];
            }
            std::mem::swap(&mut prev, &mut col);
            p_prev = law.column(k);
        }
        for (b, a) in out.iter_mut().zip(&acc) {
            b.est += a;
            b.lo += a;
            b.hi += a;
        }
        Ok(out)
    }

    fn compute_profile(&self, alpha: f64) -> Result<HProfile> {
        let raw = self.raw_profile(alpha)?;
        let values = raw
            .iter()
            .zip(&self.ml_density)
            .map(|(b, norm)| b.scale(1.0 / norm))
            .collect();
        Ok(HProfile { alpha, values })
    }

    /// `∫_0^∞ e^{-αt} dM^ℓ(t)`, equal to `a(α)`; the series value.
    pub fn h_ell(&self, alpha: f64) -> Bracket {
        laplace_pf(self.rule(), alpha, 0, &SeriesConfig::default()).value
    }

    /// `B(α) = ∫_0^∞ h(α, τ) e^{ατ} dM(τ)` and the upper bound of its part
    /// past the horizon. Past the horizon `a(α) <= h(α, τ) <= h(α, T)`.
    pub fn integral_big_b(&self, alpha: f64) -> Result<(Bracket, f64)> {
        let a = laplace_pf(self.rule(), alpha, 0, &SeriesConfig::default());
        if a.status != SeriesStatus::Converged {
            return Ok((Bracket::infinite(), f64::INFINITY));
        }
        let raw = self.raw_profile(alpha)?;
        let n = self.steps();
        let dt = self.dt();
        let w = |i: usize| ((alpha - 1.0) * i as f64 * dt).exp();
        let (est, err) = trapezoid(n, dt, |i| w(i) * raw[i].est);
        let (lo, _) = trapezoid(n, dt, |i| w(i) * raw[i].lo);
        let (hi, _) = trapezoid(n, dt, |i| w(i) * raw[i].hi);
        let x = 1.0 - alpha;
        let law_end = self.table.law(0).expect("tabulated law").row(n);
        let (tlo, thi) = semigroup_tail(self.rule(), law_end, x);
        let scale = (-x * self.t_max()).exp();
        if !tlo.is_finite() {
            return Ok((Bracket::infinite(), f64::INFINITY));
        }
        let g = &self.ml_density;
        let tb = extrapolated_tail(g[n - 1], g[n], dt, self.t_max(), x, tlo * scale, thi * scale);
        if !tb.is_finite() {
            return Ok((Bracket::infinite(), f64::INFINITY));
        }
        let h_end = raw[n].scale(1.0 / g[n]);
        let tail = Bracket::new(h_end.est * tb.est, a.value.lo * tb.lo, h_end.hi * tb.hi);
        Ok((
            Bracket::new(est + tail.est, lo + tail.lo - err, hi + tail.hi + err),
            tail.hi,
        ))
    }
}
