//! Concave attachment rules.
//!
//! A rule `f` maps the current indegree of a vertex to the (unnormalised)
//! weight with which a new vertex connects to it. Valid rules satisfy
//! `0 < f(0) <= 1`, `0 <= Δf(k) <= γ < 1` and `Δf(k+1) <= Δf(k)`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parametric family of a rule, in its JSON form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum RuleKind {
    Linear { gamma: f64, beta: f64 },
    Sqrt { coef: f64, beta: f64 },
    Table { values: Vec<f64>, tail_slope: f64 },
}

/// One failed invariant of a tabulated rule, with the first offending index.
#[derive(Clone, Debug, PartialEq)]
pub enum RuleViolation {
    Empty,
    NonFinite { index: usize },
    NonPositive { index: usize, value: f64 },
    InitialAboveOne { value: f64 },
    Decreasing { index: usize, delta: f64 },
    Concavity { index: usize, delta: f64, previous: f64 },
    IncrementTooLarge { index: usize, delta: f64 },
}

impl fmt::Display for RuleViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RuleViolation::Empty => write!(f, "table is empty"),
            RuleViolation::NonFinite { index } => write!(f, "non-finite value at k={index}"),
            RuleViolation::NonPositive { index, value } => {
                write!(f, "f({index})={value} is not positive")
            }
            RuleViolation::InitialAboveOne { value } => write!(f, "f(0)={value} exceeds 1"),
            RuleViolation::Decreasing { index, delta } => {
                write!(f, "rule decreases at k={index} (Δf({index})={delta})")
            }
            RuleViolation::Concavity {
                index,
                delta,
                previous,
            } => write!(
                f,
                "concavity violated at k={index} (Δf({index})={delta} > Δf({})={previous})",
                index - 1
            ),
            RuleViolation::IncrementTooLarge { index, delta } => {
                write!(f, "increment Δf({index})={delta} is not below 1")
            }
        }
    }
}

/// A validated concave attachment rule. Immutable once built.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "RuleKind", try_from = "RuleKind")]
pub struct AttachmentRule {
    kind: RuleKind,
    gamma_bound: f64,
}

impl From<AttachmentRule> for RuleKind {
    fn from(rule: AttachmentRule) -> Self {
        rule.kind
    }
}

impl TryFrom<RuleKind> for AttachmentRule {
    type Error = Error;

    fn try_from(kind: RuleKind) -> Result<Self> {
        match kind {
            RuleKind::Linear { gamma, beta } => AttachmentRule::linear(gamma, beta),
            RuleKind::Sqrt { coef, beta } => AttachmentRule::sqrt(coef, beta),
            RuleKind::Table { values, tail_slope } => AttachmentRule::table(values, tail_slope),
        }
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::ParameterOutOfRange {
            name: "beta",
            value: beta,
            bound: "0 < beta <= 1",
        });
    }
    Ok(())
}

impl AttachmentRule {
    /// `f(k) = gamma * k + beta`.
    pub fn linear(gamma: f64, beta: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&gamma) {
            return Err(Error::ParameterOutOfRange {
                name: "gamma",
                value: gamma,
                bound: "0 <= gamma < 1",
            });
        }
        check_beta(beta)?;
        Ok(AttachmentRule {
            kind: RuleKind::Linear { gamma, beta },
            gamma_bound: gamma,
        })
    }

    /// `f(k) = coef * sqrt(k) + beta`.
    pub fn sqrt(coef: f64, beta: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&coef) {
            return Err(Error::ParameterOutOfRange {
                name: "coef",
                value: coef,
                bound: "0 <= coef < 1",
            });
        }
        check_beta(beta)?;
        Ok(AttachmentRule {
            kind: RuleKind::Sqrt { coef, beta },
            gamma_bound: coef,
        })
    }

    /// Tabulated rule, extended linearly with `tail_slope` past the last entry.
    pub fn table(values: Vec<f64>, tail_slope: f64) -> Result<Self> {
        let violations = validate_table(&values, tail_slope);
        if !violations.is_empty() {
            return Err(Error::InvalidRule(violations));
        }
        let gamma_bound = if values.len() > 1 {
            values[1] - values[0]
        } else {
            tail_slope
        };
        Ok(AttachmentRule {
            kind: RuleKind::Table { values, tail_slope },
            gamma_bound,
        })
    }

    /// Constant rule `f ≡ beta`.
    pub fn constant(beta: f64) -> Result<Self> {
        Self::linear(0.0, beta)
    }

    pub fn kind(&self) -> &RuleKind {
        &self.kind
    }

    /// Upper bound on every increment; equals `Δf(0)` by concavity.
    pub fn gamma_bound(&self) -> f64 {
        self.gamma_bound
    }

    /// `lim Δf(k)`, the smallest increment. Every rule satisfies
    /// `f(k) >= f(0) + s k` for this slope `s`.
    pub fn asymptotic_slope(&self) -> f64 {
        match self.kind {
            RuleKind::Linear { gamma, .. } => gamma,
            RuleKind::Sqrt { .. } => 0.0,
            RuleKind::Table { tail_slope, .. } => tail_slope,
        }
    }

    /// `Some((gamma, beta))` for the linear family.
    pub fn as_linear(&self) -> Option<(f64, f64)> {
        match self.kind {
            RuleKind::Linear { gamma, beta } => Some((gamma, beta)),
            _ => None,
        }
    }

    #[inline]
    pub fn eval(&self, k: u64) -> f64 {
        match &self.kind {
            RuleKind::Linear { gamma, beta } => gamma * k as f64 + beta,
            RuleKind::Sqrt { coef, beta } => coef * (k as f64).sqrt() + beta,
            RuleKind::Table { values, tail_slope } => {
                let last = values.len() - 1;
                if (k as usize) <= last {
                    values[k as usize]
                } else {
                    values[last] + tail_slope * (k - last as u64) as f64
                }
            }
        }
    }

    /// `Δf(k) = f(k+1) - f(k)`.
    #[inline]
    pub fn delta(&self, k: u64) -> f64 {
        match &self.kind {
            RuleKind::Linear { gamma, .. } => *gamma,
            RuleKind::Sqrt { coef, .. } => {
                let k = k as f64;
                coef / ((k + 1.0).sqrt() + k.sqrt())
            }
            RuleKind::Table { values, tail_slope } => {
                let k = k as usize;
                if k + 1 < values.len() {
                    values[k + 1] - values[k]
                } else {
                    *tail_slope
                }
            }
        }
    }

    /// Smallest `k` with `Δf(k) < x`, if any. By concavity every later
    /// increment is below `x` as well.
    pub fn first_index_with_delta_below(&self, x: f64) -> Option<u64> {
        match &self.kind {
            RuleKind::Linear { gamma, .. } => (*gamma < x).then_some(0),
            RuleKind::Sqrt { coef, .. } => {
                if x <= 0.0 {
                    return None;
                }
                if *coef < x {
                    return Some(0);
                }
                let guess = (coef / (2.0 * x)).powi(2);
                let mut k = (guess as u64).saturating_sub(2);
                while self.delta(k) >= x {
                    k += 1;
                }
                while k > 0 && self.delta(k - 1) < x {
                    k -= 1;
                }
                Some(k)
            }
            RuleKind::Table { values, tail_slope } => (0..values.len() as u64)
                .find(|&k| self.delta(k) < x)
                .or_else(|| (*tail_slope < x).then_some(values.len() as u64)),
        }
    }

    /// Asymptotic indegree weight
    /// `μ_k = 1/(1+f(k)) · Π_{l<k} f(l)/(1+f(l))`.
    pub fn mu(&self, k: u64) -> f64 {
        let prod: f64 = (0..k)
            .map(|l| {
                let f = self.eval(l);
                f / (1.0 + f)
            })
            .product();
        prod / (1.0 + self.eval(k))
    }

    /// `μ_0, …, μ_kmax`; the missing mass is the tail beyond `kmax`.
    pub fn mu_vector(&self, kmax: u64) -> Vec<f64> {
        let mut out = Vec::with_capacity(kmax as usize + 1);
        let mut prod = 1.0;
        for k in 0..=kmax {
            let f = self.eval(k);
            out.push(prod / (1.0 + f));
            prod *= f / (1.0 + f);
        }
        out
    }

    /// The rule `p·f`.
    pub fn scale(&self, p: f64) -> Result<Self> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::ParameterOutOfRange {
                name: "p",
                value: p,
                bound: "0 < p <= 1",
            });
        }
        if p == 1.0 {
            return Ok(self.clone());
        }
        match &self.kind {
            RuleKind::Linear { gamma, beta } => Self::linear(p * gamma, p * beta),
            RuleKind::Sqrt { coef, beta } => Self::sqrt(p * coef, p * beta),
            RuleKind::Table { values, tail_slope } => {
                Self::table(values.iter().map(|v| p * v).collect(), p * tail_slope)
            }
        }
    }
}

impl fmt::Display for AttachmentRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            RuleKind::Linear { gamma, beta } => write!(f, "linear(gamma={gamma}, beta={beta})"),
            RuleKind::Sqrt { coef, beta } => write!(f, "sqrt(coef={coef}, beta={beta})"),
            RuleKind::Table { values, tail_slope } => {
                write!(f, "table({} values, tail_slope={tail_slope})", values.len())
            }
        }
    }
}

/// Checks every invariant of a tabulated rule and returns all violations.
pub fn validate_table(values: &[f64], tail_slope: f64) -> Vec<RuleViolation> {
    let mut out = Vec::new();
    if values.is_empty() {
        out.push(RuleViolation::Empty);
        return out;
    }
    if let Some(index) = values.iter().position(|v| !v.is_finite()) {
        out.push(RuleViolation::NonFinite { index });
        return out;
    }
    if !tail_slope.is_finite() {
        out.push(RuleViolation::NonFinite {
            index: values.len(),
        });
        return out;
    }
    if values[0] > 1.0 {
        out.push(RuleViolation::InitialAboveOne { value: values[0] });
    }
    if let Some(index) = values.iter().position(|&v| v <= 0.0) {
        out.push(RuleViolation::NonPositive {
            index,
            value: values[index],
        });
    }
    // increments Δf(0..=len-1); the last one is the tail slope
    let deltas: Vec<f64> = values
        .windows(2)
        .map(|w| w[1] - w[0])
        .chain(std::iter::once(tail_slope))
        .collect();
    if let Some(index) = deltas.iter().position(|&d| d < 0.0) {
        out.push(RuleViolation::Decreasing {
            index,
            delta: deltas[index],
        });
    }
    if let Some(index) = deltas.iter().position(|&d| d >= 1.0) {
        out.push(RuleViolation::IncrementTooLarge {
            index,
            delta: deltas[index],
        });
    }
    if let Some(i) = deltas.windows(2).position(|w| w[1] > w[0] + 1e-15) {
        out.push(RuleViolation::Concavity {
            index: i + 1,
            delta: deltas[i + 1],
            previous: deltas[i],
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_examples() {
        let r = AttachmentRule::linear(0.5, 0.5).unwrap();
        assert_eq!(r.eval(0), 0.5);
        assert_eq!(r.eval(2), 1.5);
        assert_eq!(r.eval(3), 2.0);
        assert_eq!(r.gamma_bound(), 0.5);
        let c = AttachmentRule::linear(0.0, 0.25).unwrap();
        assert!((0..50).all(|k| c.eval(k) == 0.25));
        assert!(matches!(
            AttachmentRule::linear(1.0, 0.5),
            Err(Error::ParameterOutOfRange { name: "gamma", .. })
        ));
        assert!(AttachmentRule::linear(0.2, 0.0).is_err());
        assert!(AttachmentRule::linear(0.2, 1.5).is_err());
    }

    #[test]
    fn sqrt_examples() {
        let r = AttachmentRule::sqrt(0.5, 0.1).unwrap();
        assert!((r.eval(0) - 0.1).abs() < 1e-15);
        assert!((r.eval(4) - 1.1).abs() < 1e-15);
        assert_eq!(r.gamma_bound(), 0.5);
        let c = AttachmentRule::sqrt(0.0, 0.3).unwrap();
        assert!((0..20).all(|k| c.eval(k) == 0.3 && c.delta(k) == 0.0));
        assert!(matches!(
            AttachmentRule::sqrt(1.2, 0.1),
            Err(Error::ParameterOutOfRange { name: "coef", .. })
        ));
    }

    #[test]
    fn table_examples() {
        let r = AttachmentRule::table(vec![0.5, 0.9, 1.2], 0.3).unwrap();
        assert!((r.delta(0) - 0.4).abs() < 1e-12);
        assert!((r.delta(1) - 0.3).abs() < 1e-12);
        assert_eq!(r.delta(2), 0.3);
        assert_eq!(r.delta(7), 0.3);
        assert!((r.eval(5) - 2.1).abs() < 1e-12);
        assert!((r.gamma_bound() - 0.4).abs() < 1e-12);

        match AttachmentRule::table(vec![0.5, 1.0, 1.6], 0.6) {
            Err(Error::InvalidRule(v)) => {
                assert_eq!(v.len(), 1);
                match &v[0] {
                    RuleViolation::Concavity {
                        index,
                        delta,
                        previous,
                    } => {
                        assert_eq!(*index, 1);
                        assert!((delta - 0.6).abs() < 1e-12);
                        assert!((previous - 0.5).abs() < 1e-12);
                    }
                    other => panic!("unexpected {other:?}"),
                }
            }
            other => panic!("unexpected {other:?}"),
        }

        match AttachmentRule::table(vec![1.5], 0.1) {
            Err(Error::InvalidRule(v)) => {
                assert!(v.contains(&RuleViolation::InitialAboveOne { value: 1.5 }))
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn table_reports_every_violation() {
        let v = validate_table(&[1.2, 1.0, 3.0], 1.5);
        assert!(v.iter().any(|x| matches!(x, RuleViolation::InitialAboveOne { .. })));
        assert!(v.iter().any(|x| matches!(x, RuleViolation::Decreasing { index: 0, .. })));
        assert!(v.iter().any(|x| matches!(x, RuleViolation::IncrementTooLarge { index: 1, .. })));
        assert!(v.iter().any(|x| matches!(x, RuleViolation::Concavity { index: 1, .. })));
        assert_eq!(validate_table(&[], 0.1), vec![RuleViolation::Empty]);
    }

    #[test]
    fn mu_constant_one_is_geometric() {
        let r = AttachmentRule::constant(1.0).unwrap();
        assert_eq!(r.mu(3), 0.0625);
        let v = r.mu_vector(30);
        for (k, m) in v.iter().enumerate() {
            assert_eq!(*m, 0.5f64.powi(k as i32 + 1));
        }
        let partial: f64 = v[..=10].iter().sum();
        assert_eq!(partial, 1.0 - 0.5f64.powi(11));
    }

    #[test]
    fn mu_zero_is_empty_product() {
        for r in [
            AttachmentRule::linear(0.3, 0.7).unwrap(),
            AttachmentRule::sqrt(0.4, 0.2).unwrap(),
        ] {
            assert_eq!(r.mu(0), 1.0 / (1.0 + r.eval(0)));
        }
    }

    #[test]
    fn mu_power_law_slope() {
        // -log μ_k / log k -> 1 + 1/γ; finite-k corrections decay like 1/log k,
        // so compare the local slope between two large k instead.
        let r = AttachmentRule::linear(0.5, 1.0).unwrap();
        let v = r.mu_vector(1 << 20);
        let (k1, k2) = (1usize << 16, 1usize << 20);
        let slope = -(v[k2].ln() - v[k1].ln()) / ((k2 as f64).ln() - (k1 as f64).ln());
        assert!((slope - 3.0).abs() < 1e-3, "slope {slope}");
    }

    #[test]
    fn scale_examples() {
        let r = AttachmentRule::linear(0.4, 1.0).unwrap();
        let s = r.scale(0.5).unwrap();
        assert_eq!(s.as_linear(), Some((0.2, 0.5)));
        assert_eq!(r.scale(1.0).unwrap(), r);
        let q = AttachmentRule::constant(1.0).unwrap().scale(0.25).unwrap();
        assert_eq!(q.as_linear(), Some((0.0, 0.25)));
        assert!(r.scale(0.0).is_err());
        assert!(r.scale(1.5).is_err());
    }

    #[test]
    fn first_index_with_small_delta() {
        let s = AttachmentRule::sqrt(0.5, 0.1).unwrap();
        for x in [0.01, 0.1, 0.3, 0.49, 0.6] {
            let k = s.first_index_with_delta_below(x).unwrap();
            assert!(s.delta(k) < x);
            assert!(k == 0 || s.delta(k - 1) >= x);
        }
        let l = AttachmentRule::linear(0.3, 0.5).unwrap();
        assert_eq!(l.first_index_with_delta_below(0.3), None);
        assert_eq!(l.first_index_with_delta_below(0.31), Some(0));
        let t = AttachmentRule::table(vec![0.5, 1.0, 1.375], 0.25).unwrap();
        assert_eq!(t.first_index_with_delta_below(0.4), Some(1));
        assert_eq!(t.first_index_with_delta_below(0.3), Some(2));
        assert_eq!(t.first_index_with_delta_below(0.25), None);
    }

    #[test]
    fn json_forms() {
        let r: AttachmentRule =
            serde_json::from_str(r#"{"kind":"linear","gamma":0.3,"beta":0.5}"#).unwrap();
        assert_eq!(r.as_linear(), Some((0.3, 0.5)));
        let s: AttachmentRule =
            serde_json::from_str(r#"{"kind":"sqrt","coef":0.5,"beta":0.1}"#).unwrap();
        assert_eq!(s.gamma_bound(), 0.5);
        let t: AttachmentRule =
            serde_json::from_str(r#"{"kind":"table","values":[0.5,0.9,1.2],"tail_slope":0.3}"#)
                .unwrap();
        assert_eq!(
            serde_json::to_string(&t).unwrap(),
            r#"{"kind":"table","values":[0.5,0.9,1.2],"tail_slope":0.3}"#
        );
        assert!(serde_json::from_str::<AttachmentRule>(r#"{"kind":"linear","gamma":1.0,"beta":0.5}"#).is_err());
    }
}
