//! Spectral criteria for the giant component.
//!
//! `A_α g(τ) = ∫ g(t) e^{αt} dM(t) + g(ℓ) h(α, τ)` has rank two: its image is
//! spanned by the constants and `h(α, ·)`. On that span it acts by
//! `[[b, B], [1, a]]` with `a = h(α, ℓ)`, `b = ∫ e^{αt} dM`,
//! `B = ∫ h(α, τ) e^{ατ} dM(τ)`, so `ρ(A_α)` is the larger eigenvalue
//! `((a+b) + √((a-b)² + 4B)) / 2`, increasing in each of `a`, `b`, `B`.
//! Since `a <= h <= c = h(α, 0)`, `a + b <= ρ <= ρ(a, b, bc)`.

use serde::{Deserialize, Serialize};

use crate::birth::{laplace_pf, MeasureTables, SemigroupTable, SeriesConfig, SeriesStatus, SeriesValue, TableConfig};
use crate::error::{Error, Result};
use crate::quad::Bracket;
use crate::rule::AttachmentRule;

/// Decisions closer than this to a threshold are left undetermined.
pub const DECISION_EPS: f64 = 1e-9;

/// `a(α) = Σ_k Π_{j<=k} f(j)/(f(j)+α)`.
pub fn series_a(rule: &AttachmentRule, alpha: f64, cfg: &SeriesConfig) -> SeriesValue {
    laplace_pf(rule, alpha, 0, cfg)
}

/// `b(α) = Σ_k Π_{j<=k} f(j)/(f(j)+1-α)`.
pub fn series_b(rule: &AttachmentRule, alpha: f64, cfg: &SeriesConfig) -> SeriesValue {
    laplace_pf(rule, 1.0 - alpha, 0, cfg)
}

/// `c(α) = Σ_k Π_{j<=k} f(j+1)/(f(j+1)+α)`.
pub fn series_c(rule: &AttachmentRule, alpha: f64, cfg: &SeriesConfig) -> SeriesValue {
    laplace_pf(rule, alpha, 1, cfg)
}

/// Larger eigenvalue of `[[b, B], [1, a]]`.
pub fn rank2_eigenvalue(a: f64, b: f64, big_b: f64) -> f64 {
    if !(a.is_finite() && b.is_finite() && big_b.is_finite()) {
        return f64::INFINITY;
    }
    0.5 * ((a + b) + ((a - b).powi(2) + 4.0 * big_b).sqrt())
}

/// `(a + b, ρ(a, b, bc))`; at `α = ½` the upper end is `a + √(ac)`.
pub fn sandwich(a: f64, b: f64, c: f64) -> (f64, f64) {
    (a + b, rank2_eigenvalue(a, b, b * c))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpectralStatus {
    ExactLinear,
    Numeric,
    Divergent,
}

impl std::fmt::Display for SpectralStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SpectralStatus::ExactLinear => "exact-linear",
            SpectralStatus::Numeric => "numeric",
            SpectralStatus::Divergent => "divergent",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport {
    pub alpha: f64,
    pub a: Bracket,
    pub b: Bracket,
    pub c: Bracket,
    pub big_b: Bracket,
    pub rho: Bracket,
    /// Upper bound on the part of `B` past the table horizon.
    pub tail_bound: f64,
    pub status: SpectralStatus,
}

impl SpectralReport {
    fn divergent(alpha: f64, a: Bracket, b: Bracket, c: Bracket) -> Self {
        SpectralReport {
            alpha,
            a,
            b,
            c,
            big_b: Bracket::infinite(),
            rho: Bracket::infinite(),
            tail_bound: f64::INFINITY,
            status: SpectralStatus::Divergent,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.status != SpectralStatus::Divergent && self.rho.is_finite()
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::ParameterOutOfRange {
            name: "alpha",
            value: alpha,
            bound: "0 < alpha < 1",
        })
    }
}

/// `ρ(A_α)` through the rank-two reduction, with `B` from the tables.
pub fn rho_rank2(tables: &MeasureTables, alpha: f64) -> Result<SpectralReport> {
    check_alpha(alpha)?;
    let rule = tables.rule();
    let cfg = SeriesConfig::default();
    let (a, b, c) = (series_a(rule, alpha, &cfg), series_b(rule, alpha, &cfg), series_c(rule, alpha, &cfg));
    if !(a.is_finite() && b.is_finite() && c.is_finite()) {
        return Ok(SpectralReport::divergent(alpha, a.value, b.value, c.value));
    }
    let (raw_b, tail_bound) = match tables.integral_big_b(alpha) {
        Ok(v) => v,
        Err(Error::Divergent(_)) => {
            return Ok(SpectralReport::divergent(alpha, a.value, b.value, c.value))
        }
        Err(e) => return Err(e),
    };
    if !raw_b.is_finite() {
        return Ok(SpectralReport::divergent(alpha, a.value, b.value, c.value));
    }
    let (a, b, c) = (a.value, b.value, c.value);
    // a <= h <= c pointwise
    let lo = raw_b.lo.max(a.lo * b.lo);
    let hi = raw_b.hi.min(c.hi * b.hi);
    let big_b = Bracket::new(raw_b.est.clamp(lo, hi), lo, hi);
    let rho = Bracket::new(
        rank2_eigenvalue(a.est, b.est, big_b.est),
        rank2_eigenvalue(a.lo, b.lo, big_b.lo),
        rank2_eigenvalue(a.hi, b.hi, big_b.hi),
    );
    Ok(SpectralReport {
        alpha,
        a,
        b,
        c,
        big_b,
        rho,
        tail_bound,
        status: SpectralStatus::Numeric,
    })
}

/// Closed form for `f(k) = γk + β`: `a = β/(α-γ)`, `b = β/(1-α-γ)`,
/// `h ≡ c = (β+γ)/(α-γ)`, `B = bc`.
pub fn rho_linear(gamma: f64, beta: f64, alpha: f64) -> Result<SpectralReport> {
    check_alpha(alpha)?;
    if alpha <= gamma || 1.0 - alpha <= gamma {
        let inf = Bracket::infinite();
        return Ok(SpectralReport::divergent(alpha, inf, inf, inf));
    }
    let a = beta / (alpha - gamma);
    let b = beta / (1.0 - alpha - gamma);
    let c = (beta + gamma) / (alpha - gamma);
    let big_b = b * c;
    Ok(SpectralReport {
        alpha,
        a: Bracket::exact(a),
        b: Bracket::exact(b),
        c: Bracket::exact(c),
        big_b: Bracket::exact(big_b),
        rho: Bracket::exact(rank2_eigenvalue(a, b, big_b)),
        tail_bound: 0.0,
        status: SpectralStatus::ExactLinear,
    })
}

/// `ρ(A_{1/2}) = (√(β²+βγ) + β) / (½ - γ)` for linear rules with `γ < ½`.
pub fn rho_half_linear(gamma: f64, beta: f64) -> f64 {
    ((beta * beta + beta * gamma).sqrt() + beta) / (0.5 - gamma)
}

/// Giant component for `f(k) = γk + β`: `γ >= ½` or `β > (½-γ)²/(1-γ)`.
pub fn linear_has_giant(gamma: f64, beta: f64) -> bool {
    gamma >= 0.5 || beta > (0.5 - gamma).powi(2) / (1.0 - gamma)
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchConfig {
    /// Offset of the initial α-interval from the divergence edges.
    pub delta: f64,
    /// Golden-section stopping width in α.
    pub search_tol: f64,
    /// Relative width of `ρ` that counts as certified at an endpoint.
    pub certify_width: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            delta: 1e-3,
            search_tol: 1e-4,
            certify_width: 0.05,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RhoMin {
    pub alpha_star: f64,
    pub report: SpectralReport,
    /// Certified α-interval the search ran on.
    pub interval: (f64, f64),
    pub evaluations: usize,
}

/// Golden-section minimisation of `log ρ(A_α)`, which is convex in `α`.
///
/// The search starts on `(s + δ, 1 - s - δ)` with `s` the asymptotic slope
/// (outside it `a` or `b` diverges) and moves each end inward until `ρ` is
/// finite and certified to `certify_width`.
pub fn rho_min(tables: &MeasureTables, cfg: &SearchConfig) -> Result<RhoMin> {
    let s = tables.rule().asymptotic_slope();
    let (mut lo, mut hi) = (s + cfg.delta, 1.0 - s - cfg.delta);
    if !(lo < hi) {
        return Err(Error::Empty("certified alpha-region"));
    }
    let mut evaluations = 0;
    let mut eval = |x: f64| -> Result<SpectralReport> {
        evaluations += 1;
        rho_rank2(tables, x)
    };
    let certified = |r: &SpectralReport| r.is_finite() && r.rho.rel_width() <= cfg.certify_width;
    let mid = 0.5 * (lo + hi);
    for _ in 0..40 {
        if certified(&eval(lo)?) {
            break;
        }
        lo += 0.5 * (mid - lo);
    }
    for _ in 0..40 {
        if certified(&eval(hi)?) {
            break;
        }
        hi -= 0.5 * (hi - mid);
    }
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let objective = |r: &SpectralReport| if r.is_finite() { r.rho.est.ln() } else { f64::INFINITY };
    let (mut x1, mut x2) = (hi - phi * (hi - lo), lo + phi * (hi - lo));
    let (mut a, mut b) = (lo, hi);
    let mut f1 = objective(&eval(x1)?);
    let mut f2 = objective(&eval(x2)?);
    while b - a > cfg.search_tol {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = objective(&eval(x1)?);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = objective(&eval(x2)?);
        }
    }
    let alpha_star = 0.5 * (a + b);
    let report = eval(alpha_star)?;
    if !report.is_finite() {
        return Err(Error::Divergent(format!(
            "rho is not finite anywhere on ({lo}, {hi})"
        )));
    }
    Ok(RhoMin {
        alpha_star,
        report,
        interval: (lo, hi),
        evaluations,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "lowercase")]
pub enum Giant {
    Yes,
    No,
    Undetermined { margin: f64 },
}

impl std::fmt::Display for Giant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Giant::Yes => f.write_str("yes"),
            Giant::No => f.write_str("no"),
            Giant::Undetermined { margin } => write!(f, "undetermined({margin:.3e})"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Evidence {
    ClosedFormLinear,
    SeriesBounds,
    Rank2Numeric,
    /// `a[f]` diverges: every α-interval is empty.
    Divergence,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CriterionVerdict {
    pub rule: AttachmentRule,
    pub giant: Giant,
    pub robust: bool,
    pub percolation_threshold: Option<f64>,
    pub alpha_star: Option<f64>,
    pub rho_min: Option<Bracket>,
    /// `a[f] = a(½)` and `c[f] = c(½)`.
    pub a_half: Bracket,
    pub c_half: Bracket,
    pub evidence: Evidence,
}

/// The explicit sufficient and necessary conditions: giant if `a[f] > ½`,
/// none if `a[f] + √(a[f] c[f]) < 1`; ties are undetermined with margin 0.
pub fn bounds_criterion(rule: &AttachmentRule) -> CriterionVerdict {
    let cfg = SeriesConfig::default();
    let a = series_a(rule, 0.5, &cfg);
    let c = series_c(rule, 0.5, &cfg);
    let base = CriterionVerdict {
        rule: rule.clone(),
        giant: Giant::Yes,
        robust: false,
        percolation_threshold: None,
        alpha_star: None,
        rho_min: None,
        a_half: a.value,
        c_half: c.value,
        evidence: Evidence::SeriesBounds,
    };
    match a.status {
        SeriesStatus::Divergent => {
            return CriterionVerdict {
                robust: true,
                evidence: Evidence::Divergence,
                ..base
            }
        }
        SeriesStatus::Undetermined => {
            return CriterionVerdict {
                giant: Giant::Undetermined { margin: f64::NAN },
                ..base
            }
        }
        SeriesStatus::Converged => {}
    }
    let (a, c) = (a.value, c.value);
    let giant = if a.lo > 0.5 + DECISION_EPS {
        Giant::Yes
    } else if a.hi + (a.hi * c.hi).sqrt() < 1.0 - DECISION_EPS {
        Giant::No
    } else {
        let m1 = (a.est - 0.5).abs();
        let m2 = (a.est + (a.est * c.est).sqrt() - 1.0).abs();
        Giant::Undetermined { margin: m1.min(m2) }
    };
    CriterionVerdict { giant, ..base }
}

/// Verdict from `min_α ρ(A_α)`: none if it is certified `< 1`, giant if
/// certified `> 1`.
pub fn numeric_verdict(tables: &MeasureTables, search: &SearchConfig) -> Result<CriterionVerdict> {
    let rule = tables.rule();
    let mut v = bounds_criterion(rule);
    v.evidence = Evidence::Rank2Numeric;
    if v.robust {
        v.evidence = Evidence::Divergence;
        return Ok(v);
    }
    let m = match rho_min(tables, search) {
        Ok(m) => m,
        Err(Error::Empty(_)) => {
            v.robust = true;
            v.giant = Giant::Yes;
            v.evidence = Evidence::Divergence;
            return Ok(v);
        }
        Err(e) => return Err(e),
    };
    let rho = m.report.rho;
    v.giant = if rho.hi < 1.0 - DECISION_EPS {
        Giant::No
    } else if rho.lo > 1.0 + DECISION_EPS {
        Giant::Yes
    } else {
        Giant::Undetermined {
            margin: (rho.est - 1.0).abs(),
        }
    };
    v.alpha_star = Some(m.alpha_star);
    v.rho_min = Some(rho);
    if v.giant == Giant::Yes {
        v.percolation_threshold = Some(1.0 / rho.est);
    }
    Ok(v)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct CriterionConfig {
    pub table: TableConfig,
    pub search: SearchConfig,
    /// Compute `min ρ` (and the percolation threshold) even when the series
    /// bounds already decide the giant question.
    pub always_numeric: bool,
}

impl Default for CriterionConfig {
    fn default() -> Self {
        CriterionConfig {
            table: TableConfig::default(),
            search: SearchConfig::default(),
            always_numeric: true,
        }
    }
}

fn linear_verdict(rule: &AttachmentRule, gamma: f64, beta: f64) -> CriterionVerdict {
    let mut v = bounds_criterion(rule);
    v.evidence = Evidence::ClosedFormLinear;
    v.giant = if linear_has_giant(gamma, beta) { Giant::Yes } else { Giant::No };
    v.robust = gamma >= 0.5;
    if !v.robust {
        let rho = rho_half_linear(gamma, beta);
        v.alpha_star = Some(0.5);
        v.rho_min = Some(Bracket::exact(rho));
        if v.giant == Giant::Yes {
            v.percolation_threshold = Some(1.0 / rho);
        }
    }
    v
}

/// Giant, robustness and percolation verdict for any rule: closed form for
/// linear rules, otherwise the series bounds and, when they do not decide or
/// a threshold is wanted, the numeric minimum of `ρ`.
pub fn giant_criterion(rule: &AttachmentRule, cfg: &CriterionConfig) -> Result<CriterionVerdict> {
    if let Some((gamma, beta)) = rule.as_linear() {
        return Ok(linear_verdict(rule, gamma, beta));
    }
    let bounds = bounds_criterion(rule);
    if bounds.robust {
        return Ok(bounds);
    }
    let decided = !matches!(bounds.giant, Giant::Undetermined { .. });
    if decided && !cfg.always_numeric {
        return Ok(bounds);
    }
    let tables = MeasureTables::build(SemigroupTable::build(rule, &cfg.table)?, &[])?;
    let mut v = numeric_verdict(&tables, &cfg.search)?;
    if decided {
        // the series bounds are exact statements; keep them as the verdict
        if v.giant != bounds.giant && !matches!(v.giant, Giant::Undetermined { .. }) {
            return Err(Error::Invariant(format!(
                "{rule}: series bounds say {} but min rho says {}",
                bounds.giant, v.giant
            )));
        }
        v.giant = bounds.giant;
        v.evidence = Evidence::SeriesBounds;
        if v.giant == Giant::Yes && v.percolation_threshold.is_none() {
            v.percolation_threshold = v.rho_min.map(|r| 1.0 / r.est);
        }
    }
    Ok(v)
}

/// Robust iff `a[f] = ∞`; `None` when the series is inconclusive.
pub fn robustness(rule: &AttachmentRule) -> Option<bool> {
    match series_a(rule, 0.5, &SeriesConfig::default()).status {
        SeriesStatus::Divergent => Some(true),
        SeriesStatus::Converged => Some(false),
        SeriesStatus::Undetermined => None,
    }
}

/// `1 / min_α ρ(A_α)` when the network has a giant component that is not
/// robust.
pub fn percolation_threshold(rule: &AttachmentRule, cfg: &CriterionConfig) -> Result<Option<f64>> {
    let cfg = CriterionConfig {
        always_numeric: true,
        ..cfg.clone()
    };
    Ok(giant_criterion(rule, &cfg)?.percolation_threshold)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_series_are_geometric() {
        let cfg = SeriesConfig::default();
        for beta in [0.1, 0.25, 1.0] {
            let r = AttachmentRule::constant(beta).unwrap();
            assert!((series_a(&r, 0.5, &cfg).value.est - 2.0 * beta).abs() < 1e-12);
            assert!((series_c(&r, 0.5, &cfg).value.est - 2.0 * beta).abs() < 1e-12);
            assert!((series_b(&r, 0.3, &cfg).value.est - beta / 0.7).abs() < 1e-12);
        }
    }

    #[test]
    fn linear_series_and_divergence() {
        let r = AttachmentRule::linear(0.3, 0.5).unwrap();
        let cfg = SeriesConfig::default();
        assert!((series_a(&r, 0.6, &cfg).value.est - 0.5 / 0.3).abs() < 1e-12);
        assert_eq!(series_a(&r, 0.3, &cfg).status, SeriesStatus::Divergent);
        assert_eq!(series_b(&r, 0.75, &cfg).status, SeriesStatus::Divergent);
    }

    #[test]
    fn bounds_examples() {
        let yes = bounds_criterion(&AttachmentRule::constant(1.0).unwrap());
        assert_eq!(yes.giant, Giant::Yes);
        assert!((yes.a_half.est - 2.0).abs() < 1e-12);
        let no = bounds_criterion(&AttachmentRule::constant(0.1).unwrap());
        assert_eq!(no.giant, Giant::No);
        assert!((no.a_half.est - 0.2).abs() < 1e-12 && (no.c_half.est - 0.2).abs() < 1e-12);
        let tie = bounds_criterion(&AttachmentRule::constant(0.25).unwrap());
        match tie.giant {
            Giant::Undetermined { margin } => assert!(margin < 1e-12),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn linear_rank2_closed_forms() {
        for (g, b) in [(0.0, 0.25), (0.1, 0.5), (0.3, 1.0), (0.2, 0.05)] {
            let r = rho_linear(g, b, 0.5).unwrap();
            assert!((r.rho.est - rho_half_linear(g, b)).abs() < 1e-12 * r.rho.est);
            for alpha in [0.35, 0.5, 0.62] {
                if alpha <= g || 1.0 - alpha <= g {
                    continue;
                }
                let x = rho_linear(g, b, alpha).unwrap().rho.est;
                let q = x * x * (1.0 - g - alpha) * (alpha - g) - x * b * (1.0 - 2.0 * g) - b * g;
                assert!(q.abs() < 1e-10 * x * x, "({g},{b},{alpha}): {q}");
            }
        }
        assert!((rho_half_linear(0.0, 0.25) - 1.0).abs() < 1e-15);
        assert_eq!(rho_linear(0.5, 0.3, 0.5).unwrap().status, SpectralStatus::Divergent);
    }

    #[test]
    fn linear_thresholds() {
        let cfg = CriterionConfig::default();
        let v = giant_criterion(&AttachmentRule::linear(0.25, 0.25).unwrap(), &cfg).unwrap();
        assert!((v.percolation_threshold.unwrap() - (2f64.sqrt() - 1.0)).abs() < 1e-12);
        let v = giant_criterion(&AttachmentRule::constant(1.0).unwrap(), &cfg).unwrap();
        assert!((v.percolation_threshold.unwrap() - 0.25).abs() < 1e-12);
        let v = giant_criterion(&AttachmentRule::linear(0.5, 0.3).unwrap(), &cfg).unwrap();
        assert!(v.robust && v.giant == Giant::Yes && v.percolation_threshold.is_none());
        assert_eq!(
            giant_criterion(&AttachmentRule::linear(0.5, 0.01).unwrap(), &cfg).unwrap().giant,
            Giant::Yes
        );
        assert_eq!(
            giant_criterion(&AttachmentRule::linear(0.0, 0.25).unwrap(), &cfg).unwrap().giant,
            Giant::No
        );
    }

    #[test]
    fn robustness_follows_asymptotic_slope() {
        assert_eq!(robustness(&AttachmentRule::linear(0.5, 0.3).unwrap()), Some(true));
        assert_eq!(robustness(&AttachmentRule::linear(0.49, 0.3).unwrap()), Some(false));
        assert_eq!(robustness(&AttachmentRule::sqrt(0.9, 0.3).unwrap()), Some(false));
        assert_eq!(
            robustness(&AttachmentRule::table(vec![0.5, 1.1], 0.5).unwrap()),
            Some(true)
        );
    }

    fn tables(rule: &AttachmentRule) -> MeasureTables {
        MeasureTables::build(SemigroupTable::build(rule, &TableConfig::default()).unwrap(), &[]).unwrap()
    }

    #[test]
    fn numeric_rank2_matches_linear() {
        let rule = AttachmentRule::linear(0.1, 0.25).unwrap();
        let t = tables(&rule);
        let r = rho_rank2(&t, 0.5).unwrap();
        let exact = rho_half_linear(0.1, 0.25);
        assert!(((r.rho.est - exact) / exact).abs() < 1e-6, "{:?} vs {exact}", r.rho);
        assert!(r.rho.pad(1e-12 * exact).contains(exact), "{r:?} {exact}");
        let m = rho_min(&t, &SearchConfig::default()).unwrap();
        assert!((m.alpha_star - 0.5).abs() < 1e-3, "{}", m.alpha_star);
    }

    #[test]
    fn sqrt_sandwich_and_convexity() {
        let rule = AttachmentRule::sqrt(0.5, 0.1).unwrap();
        let t = tables(&rule);
        let m = rho_min(&t, &SearchConfig::default()).unwrap();
        let (lo, hi) = m.interval;
        let xs: Vec<f64> = (0..=8).map(|i| lo + (hi - lo) * i as f64 / 8.0).collect();
        let logs: Vec<f64> = xs
            .iter()
            .map(|&x| {
                let r = rho_rank2(&t, x).unwrap();
                let (l, u) = sandwich(r.a.est, r.b.est, r.c.est);
                assert!(r.rho.hi >= l * (1.0 - 1e-9) && r.rho.lo <= u * (1.0 + 1e-9), "{x}: {r:?}");
                r.rho.est.ln()
            })
            .collect();
        for i in 1..8 {
            assert!(logs[i] <= 0.5 * (logs[i - 1] + logs[i + 1]) + 1e-6);
        }
        assert!(m.report.rho.est <= logs.iter().cloned().fold(f64::INFINITY, f64::min).exp() * (1.0 + 1e-7), "{:?} {logs:?} {xs:?}", m);
    }

    #[test]
    fn empty_region_is_robust() {
        let rule = AttachmentRule::table(vec![0.4, 0.95], 0.5).unwrap();
        let t = MeasureTables::build(
            SemigroupTable::build(&rule, &TableConfig { t_max: 5.0, ..Default::default() }).unwrap(),
            &[],
        )
        .unwrap();
        assert!(matches!(rho_min(&t, &SearchConfig::default()), Err(Error::Empty(_))));
        let v = numeric_verdict(&t, &SearchConfig::default()).unwrap();
        assert!(v.robust && v.giant == Giant::Yes);
    }
}
