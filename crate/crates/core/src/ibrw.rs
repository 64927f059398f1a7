//! The idealized neighbourhood tree: a typed branching random walk on
//! `(-∞, 0]` rooted at `-Exp(1)`, with every particle right of 0 removed
//! together with its descendants.
//!
//! A particle at `x` has left children at `x - s` of type `s`, at the points
//! of a Poisson process with intensity `e^{-s} E f(Z_s) ds`, and right
//! children of type `ℓ` at `x + t` for the jump times `t` of `Z` (type `ℓ`)
//! or of `Z^[τ]` without its forced jump (type `τ`).

use rand::Rng;
use rand_distr::{Distribution, Exp1, Poisson};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::birth::{
    laplace_pf, sample_conditioned_path, sample_path, BirthSemigroup, SeriesConfig,
};
use crate::error::{Error, Result};
use crate::parallel::map_indexed;
use crate::quad::Bracket;
use crate::rule::AttachmentRule;
use crate::streams::{label, stream};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParticleType {
    Ell,
    /// Distance to the parent.
    Tau(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Particle {
    pub position: f64,
    pub ptype: ParticleType,
    pub generation: u32,
}

pub fn sample_root<R: Rng + ?Sized>(rng: &mut R) -> Particle {
    let e: f64 = Exp1.sample(rng);
    Particle {
        // an exact zero draw would sit on the killing boundary
        position: -e.max(f64::MIN_POSITIVE),
        ptype: ParticleType::Ell,
        generation: 0,
    }
}

/// `E f(Z_s)` from the tables, continued past their horizon by the upper
/// bound `E f(Z_T) e^{γ (s - T)}`.
fn mean_f_majorant(sg: &dyn BirthSemigroup, gamma: f64, s: f64) -> f64 {
    let h = sg.horizon();
    if s <= h {
        sg.mean_f(s)
    } else {
        sg.mean_f(h) * (gamma * (s - h)).exp()
    }
}

/// Left children by thinning the envelope `f(0) e^{-(1-γ)s} ds`.
pub fn offspring_left<R: Rng + ?Sized>(
    parent: &Particle,
    sg: &dyn BirthSemigroup,
    rng: &mut R,
    out: &mut Vec<Particle>,
) -> Result<()> {
    let rule = sg.rule();
    let f0 = rule.eval(0);
    let gamma = rule.gamma_bound();
    let rate = 1.0 - gamma;
    let count = Poisson::new(f0 / rate)
        .map_err(|e| Error::Invariant(format!("envelope mass: {e}")))?
        .sample(rng) as usize;
    for _ in 0..count {
        let e: f64 = Exp1.sample(rng);
        let s = e / rate;
        let acc = mean_f_majorant(sg, gamma, s) / (f0 * (gamma * s).exp());
        // the table is accurate to ~1e-10; anything larger is a real violation
        if !(acc <= 1.0 + 1e-7) {
            return Err(Error::Invariant(format!(
                "left-offspring acceptance {acc} > 1 at distance {s}"
            )));
        }
        if rng.gen::<f64>() < acc {
            out.push(Particle {
                position: parent.position - s,
                ptype: ParticleType::Tau(s),
                generation: parent.generation + 1,
            });
        }
    }
    Ok(())
}

/// Right children at the jumps inside the window `(0, -position]`; the
/// forced jump of a type-`τ` parent is not a child.
pub fn offspring_right<R: Rng + ?Sized>(
    parent: &Particle,
    sg: &dyn BirthSemigroup,
    cap: usize,
    rng: &mut R,
    out: &mut Vec<Particle>,
) -> Result<()> {
    let window = -parent.position;
    if !(window > 0.0) {
        return Ok(());
    }
    let path = match parent.ptype {
        ParticleType::Ell => sample_path(sg.rule(), 0, window, cap, rng)?,
        ParticleType::Tau(tau) => sample_conditioned_path(sg.rule(), tau, 0, window, sg, cap, rng)?,
    };
    out.extend(path.free_jumps().map(|t| Particle {
        position: parent.position + t,
        ptype: ParticleType::Ell,
        generation: parent.generation + 1,
    }));
    Ok(())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct IntConfig {
    pub survival_threshold: usize,
    pub max_particles: usize,
    pub max_generations: usize,
}

impl Default for IntConfig {
    fn default() -> Self {
        IntConfig {
            survival_threshold: 1000,
            max_particles: 100_000,
            max_generations: 10_000,
        }
    }
}

impl IntConfig {
    pub fn validate(&self) -> Result<()> {
        if self.survival_threshold == 0 || self.survival_threshold > self.max_particles {
            return Err(Error::ParameterOutOfRange {
                name: "survival_threshold",
                value: self.survival_threshold as f64,
                bound: "1 <= survival_threshold <= max_particles",
            });
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum IntStatus {
    Extinct { total_size: usize },
    Survived,
    /// A budget ran out first.
    Ambiguous,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntOutcome {
    pub status: IntStatus,
    pub particles_used: usize,
    pub generations_used: usize,
}

pub fn simulate_int<R: Rng + ?Sized>(
    sg: &dyn BirthSemigroup,
    cfg: &IntConfig,
    rng: &mut R,
) -> Result<IntOutcome> {
    simulate_int_observed(sg, cfg, rng, &mut |_, _| {})
}

/// Generation-by-generation exploration. The observer sees every parent
/// with its full (unkilled) family.
pub fn simulate_int_observed<R: Rng + ?Sized>(
    sg: &dyn BirthSemigroup,
    cfg: &IntConfig,
    rng: &mut R,
    observer: &mut dyn FnMut(&Particle, &[Particle]),
) -> Result<IntOutcome> {
    cfg.validate()?;
    let mut frontier = vec![sample_root(rng)];
    let mut next = Vec::new();
    let mut family = Vec::new();
    let mut total = 1usize;
    let mut generation = 0usize;
    let outcome = |status, total, generation| IntOutcome {
        status,
        particles_used: total,
        generations_used: generation,
    };
    loop {
        if frontier.is_empty() {
            return Ok(outcome(IntStatus::Extinct { total_size: total }, total, generation));
        }
        if frontier.len() >= cfg.survival_threshold {
            return Ok(outcome(IntStatus::Survived, total, generation));
        }
        if generation >= cfg.max_generations {
            return Ok(outcome(IntStatus::Ambiguous, total, generation));
        }
        for parent in &frontier {
            family.clear();
            offspring_left(parent, sg, rng, &mut family)?;
            match offspring_right(parent, sg, cfg.max_particles, rng, &mut family) {
                Ok(()) => {}
                Err(Error::JumpBudget { .. }) => {
                    return Ok(outcome(IntStatus::Ambiguous, total, generation));
                }
                Err(e) => return Err(e),
            }
            observer(parent, &family);
            if let Some(bad) = family.iter().find(|c| c.position > 0.0) {
                return Err(Error::Invariant(format!("particle enqueued at {}", bad.position)));
            }
            total += family.len();
            next.extend_from_slice(&family);
            if next.len() >= cfg.survival_threshold {
                return Ok(outcome(IntStatus::Survived, total, generation + 1));
            }
            if total > cfg.max_particles {
                return Ok(outcome(IntStatus::Ambiguous, total, generation + 1));
            }
        }
        std::mem::swap(&mut frontier, &mut next);
        next.clear();
        generation += 1;
    }
}

/// Replica `r` uses stream `(seed, "int", r)`.
pub fn run_replicas(
    sg: &dyn BirthSemigroup,
    cfg: &IntConfig,
    reps: usize,
    seed: u64,
    workers: usize,
) -> Result<Vec<IntOutcome>> {
    cfg.validate()?;
    map_indexed(workers, reps, |r| {
        let mut rng = stream(seed, &[label("int"), r as u64]);
        simulate_int(sg, cfg, &mut rng)
    })
    .into_iter()
    .collect()
}

/// Wilson score interval for `k` successes in `n` trials.
pub fn wilson_interval(k: usize, n: usize, level: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let z = Normal::new(0.0, 1.0)
        .expect("standard normal")
        .inverse_cdf(0.5 + 0.5 * level);
    let n = n as f64;
    let p = k as f64 / n;
    let z2 = z * z;
    let centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = z / (1.0 + z2 / n) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurvivalEstimate {
    pub reps: usize,
    pub seed: u64,
    pub survived: usize,
    pub extinct: usize,
    pub ambiguous: usize,
    /// `survived / (survived + extinct)`.
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub ambiguous_fraction: f64,
}

impl SurvivalEstimate {
    pub fn from_outcomes(outcomes: &[IntOutcome], seed: u64) -> Self {
        let reps = outcomes.len();
        let survived = outcomes.iter().filter(|o| o.status == IntStatus::Survived).count();
        let ambiguous = outcomes.iter().filter(|o| o.status == IntStatus::Ambiguous).count();
        let extinct = reps - survived - ambiguous;
        let decided = survived + extinct;
        let (ci_low, ci_high) = wilson_interval(survived, decided, 0.95);
        SurvivalEstimate {
            reps,
            seed,
            survived,
            extinct,
            ambiguous,
            p_hat: if decided > 0 { survived as f64 / decided as f64 } else { f64::NAN },
            ci_low,
            ci_high,
            ambiguous_fraction: ambiguous as f64 / reps.max(1) as f64,
        }
    }

    /// Standard error of `p_hat`.
    pub fn std_error(&self) -> f64 {
        let n = (self.survived + self.extinct).max(1) as f64;
        (self.p_hat * (1.0 - self.p_hat) / n).sqrt()
    }
}

fn check_reps(reps: usize) -> Result<()> {
    if reps == 0 {
        return Err(Error::ParameterOutOfRange {
            name: "reps",
            value: 0.0,
            bound: ">= 1",
        });
    }
    Ok(())
}

pub fn estimate_survival(
    sg: &dyn BirthSemigroup,
    cfg: &IntConfig,
    reps: usize,
    seed: u64,
    workers: usize,
) -> Result<SurvivalEstimate> {
    check_reps(reps)?;
    let outcomes = run_replicas(sg, cfg, reps, seed, workers)?;
    Ok(SurvivalEstimate::from_outcomes(&outcomes, seed))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SizeDistEstimate {
    pub reps: usize,
    pub seed: u64,
    /// `P(#T = k)` for `k = 1..=kmax`, index `k - 1`.
    pub probs: Vec<f64>,
    /// Extinct with more than `kmax` particles, survived, or ambiguous.
    pub overflow: f64,
    pub ambiguous_fraction: f64,
}

impl SizeDistEstimate {
    pub fn from_outcomes(outcomes: &[IntOutcome], seed: u64, kmax: usize) -> Self {
        let reps = outcomes.len();
        let mut counts = vec![0usize; kmax];
        let mut overflow = 0usize;
        let mut ambiguous = 0usize;
        for o in outcomes {
            match o.status {
                IntStatus::Extinct { total_size } if total_size <= kmax => counts[total_size - 1] += 1,
                IntStatus::Ambiguous => {
                    ambiguous += 1;
                    overflow += 1;
                }
                _ => overflow += 1,
            }
        }
        let n = reps.max(1) as f64;
        SizeDistEstimate {
            reps,
            seed,
            probs: counts.iter().map(|&c| c as f64 / n).collect(),
            overflow: overflow as f64 / n,
            ambiguous_fraction: ambiguous as f64 / n,
        }
    }
}

pub fn estimate_size_dist(
    sg: &dyn BirthSemigroup,
    cfg: &IntConfig,
    reps: usize,
    seed: u64,
    kmax: usize,
    workers: usize,
) -> Result<SizeDistEstimate> {
    check_reps(reps)?;
    if kmax < 1 {
        return Err(Error::ParameterOutOfRange {
            name: "kmax",
            value: 0.0,
            bound: ">= 1",
        });
    }
    let outcomes = run_replicas(sg, cfg, reps, seed, workers)?;
    Ok(SizeDistEstimate::from_outcomes(&outcomes, seed, kmax))
}

/// `M(∞) = ∫_0^∞ e^{-s} E f(Z_s) ds`, the mean number of left children.
pub fn left_mass(rule: &AttachmentRule) -> Bracket {
    laplace_pf(rule, 1.0, 0, &SeriesConfig::default()).value
}

/// `P(#T = 1)`: no left children (Poisson with mean `M(∞)`) and no jump of
/// `Z` from 0 before the root's window `-x_0 ~ Exp(1)` closes, so
/// `e^{-M(∞)} E e^{-f(0) X} = e^{-M(∞)} / (1 + f(0))`.
pub fn prob_isolated_root(rule: &AttachmentRule) -> Bracket {
    let m = left_mass(rule);
    let d = 1.0 / (1.0 + rule.eval(0));
    Bracket::new((-m.est).exp() * d, (-m.hi).exp() * d, (-m.lo).exp() * d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::birth::LinearSemigroup;
    use crate::streams::stream;

    fn linear(g: f64, b: f64) -> LinearSemigroup {
        LinearSemigroup::new(&AttachmentRule::linear(g, b).unwrap()).unwrap()
    }

    #[test]
    fn root_law() {
        let mut rng = stream(1, &[]);
        let n = 100_000;
        let xs: Vec<f64> = (0..n).map(|_| sample_root(&mut rng).position).collect();
        assert!(xs.iter().all(|&x| x < 0.0));
        let mean = -xs.iter().sum::<f64>() / n as f64;
        assert!((mean - 1.0).abs() < 0.01, "{mean}");
        let tail = xs.iter().filter(|&&x| x < -3.0).count() as f64 / n as f64;
        let p = (-3f64).exp();
        assert!((tail - p).abs() < 3.0 * (p * (1.0 - p) / n as f64).sqrt());
    }

    #[test]
    fn left_count_mean_is_left_mass() {
        for (g, b) in [(0.0, 0.4), (0.3, 0.5)] {
            let sg = linear(g, b);
            let mut rng = stream(2, &[]);
            let parent = Particle { position: -1.0, ptype: ParticleType::Ell, generation: 0 };
            let n = 100_000;
            let mut out = Vec::new();
            for _ in 0..n {
                offspring_left(&parent, &sg, &mut rng, &mut out).unwrap();
            }
            let mean = out.len() as f64 / n as f64;
            let exact = b / (1.0 - g);
            let sd = (exact / n as f64).sqrt();
            assert!((mean - exact).abs() < 3.0 * sd, "{mean} vs {exact}");
            assert!(out.iter().all(|c| matches!(c.ptype, ParticleType::Tau(s) if (c.position + s + 1.0).abs() < 1e-12)));
            // distances are Exp(1 - γ)
            let mean_s = out.iter().map(|c| -1.0 - c.position).sum::<f64>() / out.len() as f64;
            assert!((mean_s - 1.0 / (1.0 - g)).abs() < 0.03 / (1.0 - g), "{mean_s}");
        }
    }

    #[test]
    fn right_children() {
        let sg = linear(0.0, 1.0);
        let mut rng = stream(3, &[]);
        let mut out = Vec::new();
        let edge = Particle { position: -0.0, ptype: ParticleType::Ell, generation: 0 };
        offspring_right(&edge, &sg, 1000, &mut rng, &mut out).unwrap();
        assert!(out.is_empty());
        let p = Particle { position: -2.0, ptype: ParticleType::Ell, generation: 0 };
        let n = 40_000;
        let mut zero = 0;
        for _ in 0..n {
            out.clear();
            offspring_right(&p, &sg, 1000, &mut rng, &mut out).unwrap();
            zero += out.is_empty() as usize;
            assert!(out.iter().all(|c| c.position > -2.0 && c.position <= 0.0 && c.ptype == ParticleType::Ell));
        }
        let pz = (-2f64).exp();
        assert!((zero as f64 / n as f64 - pz).abs() < 4.0 * (pz * (1.0 - pz) / n as f64).sqrt());
    }

    #[test]
    fn families_are_well_formed() {
        let sg = linear(0.3, 0.5);
        let cfg = IntConfig { survival_threshold: 200, max_particles: 5000, ..Default::default() };
        let mut families = 0;
        for r in 0..300 {
            let mut rng = stream(4, &[r]);
            simulate_int_observed(&sg, &cfg, &mut rng, &mut |p, kids| {
                families += 1;
                for c in kids {
                    assert!(c.position <= 0.0);
                    assert_eq!(c.generation, p.generation + 1);
                    assert_eq!(c.ptype == ParticleType::Ell, c.position > p.position);
                }
            })
            .unwrap();
        }
        assert!(families > 1000);
    }

    #[test]
    fn outcomes() {
        let sg = linear(0.3, 0.5);
        let est = estimate_survival(&sg, &IntConfig::default(), 2000, 5, 1).unwrap();
        assert!(est.ci_low > 0.0 && est.ambiguous_fraction < 0.01, "{est:?}");
        let sub = linear(0.1, 0.05);
        let outs = run_replicas(&sub, &IntConfig::default(), 2000, 6, 1).unwrap();
        assert!(outs.iter().all(|o| matches!(o.status, IntStatus::Extinct { .. })));
        let d = SizeDistEstimate::from_outcomes(&outs, 6, 5);
        assert!((d.probs.iter().sum::<f64>() + d.overflow - 1.0).abs() < 1e-12);
        assert!(estimate_survival(&sub, &IntConfig::default(), 0, 1, 1).is_err());
        let bad = IntConfig { survival_threshold: 10, max_particles: 5, ..Default::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn isolated_root_constant_rule() {
        let rule = AttachmentRule::constant(0.3).unwrap();
        let p = prob_isolated_root(&rule);
        assert!((p.est - (-0.3f64).exp() / 1.3).abs() < 1e-12);
    }

    #[test]
    fn wilson_brackets_estimate() {
        let (lo, hi) = wilson_interval(30, 100, 0.95);
        assert!(lo < 0.3 && 0.3 < hi);
        assert_eq!(wilson_interval(0, 100, 0.95).0, 0.0);
        assert!(wilson_interval(0, 10_000, 0.95).1 < 5e-4);
    }
}
