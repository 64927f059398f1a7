//! Samplers for the pure birth process `Z` and the process `Z^[τ]`
//! conditioned to jump at time `τ`.

use rand::Rng;
use rand_distr::{Distribution, Exp1};

use super::semigroup::BirthSemigroup;
use crate::error::{Error, Result};
use crate::rule::AttachmentRule;

/// Default cap on the number of jumps in one path.
pub const DEFAULT_JUMP_CAP: usize = 1_000_000;

#[derive(Clone, Debug, PartialEq)]
pub struct JumpPath {
    pub start_state: u64,
    pub jump_times: Vec<f64>,
    /// Index into `jump_times` of the forced jump at `τ`, if it was emitted.
    pub forced: Option<usize>,
}

impl JumpPath {
    /// `Z_t`, right-continuous.
    pub fn state_at(&self, t: f64) -> u64 {
        self.start_state + self.jump_times.partition_point(|&s| s <= t) as u64
    }

    /// Jump times other than the forced one.
    pub fn free_jumps(&self) -> impl Iterator<Item = f64> + '_ {
        self.jump_times
            .iter()
            .enumerate()
            .filter(move |(i, _)| Some(*i) != self.forced)
            .map(|(_, &t)| t)
    }
}

#[inline]
fn exp1<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    Exp1.sample(rng)
}

/// Free path on `[0, horizon]`: from state `k` the holding time is `Exp(f(k))`.
pub fn sample_path<R: Rng + ?Sized>(
    rule: &AttachmentRule,
    start_state: u64,
    horizon: f64,
    cap: usize,
    rng: &mut R,
) -> Result<JumpPath> {
    let mut jumps = Vec::new();
    let mut k = start_state;
    let mut t = 0.0;
    if horizon > 0.0 {
        loop {
            t += exp1(rng) / rule.eval(k);
            if t > horizon {
                break;
            }
            if jumps.len() == cap {
                return Err(Error::JumpBudget { cap, horizon });
            }
            jumps.push(t);
            k += 1;
        }
    }
    Ok(JumpPath {
        start_state,
        jump_times: jumps,
        forced: None,
    })
}

/// Path of `Z^[τ]` on `[0, horizon]`.
///
/// Before `τ` the jump rate from `k` at time `u` is
/// `f(k) P_{τ-u} f(k+1) / P_{τ-u} f(k)`, which never exceeds `f(k+1)`;
/// proposals at rate `f(k+1)` are accepted with the ratio of the two. The
/// forced jump at `τ` is emitted and flagged when `τ <= horizon`; afterwards
/// the path is free. A `τ` beyond the horizon only shapes the rates.
pub fn sample_conditioned_path<R: Rng + ?Sized>(
    rule: &AttachmentRule,
    tau: f64,
    start_state: u64,
    horizon: f64,
    semigroup: &dyn BirthSemigroup,
    cap: usize,
    rng: &mut R,
) -> Result<JumpPath> {
    if tau < 0.0 {
        return Err(Error::ParameterOutOfRange {
            name: "tau",
            value: tau,
            bound: ">= 0",
        });
    }
    let mut jumps = Vec::new();
    let mut forced = None;
    let mut k = start_state;
    let mut t = 0.0;
    let stop = tau.min(horizon);
    loop {
        let envelope = rule.eval(k + 1);
        let proposal = t + exp1(rng) / envelope;
        if proposal >= stop {
            break;
        }
        t = proposal;
        let rate = rule.eval(k) * semigroup.ratio(k, tau - t)?;
        let acc = rate / envelope;
        debug_assert!(acc <= 1.0 + 1e-9, "thinning ratio {acc} exceeds 1");
        if rng.gen::<f64>() < acc {
            if jumps.len() == cap {
                return Err(Error::JumpBudget { cap, horizon });
            }
            jumps.push(t);
            k += 1;
        }
    }
    if tau <= horizon {
        forced = Some(jumps.len());
        jumps.push(tau);
        k += 1;
        t = tau;
        loop {
            t += exp1(rng) / rule.eval(k);
            if t > horizon {
                break;
            }
            if jumps.len() == cap {
                return Err(Error::JumpBudget { cap, horizon });
            }
            jumps.push(t);
            k += 1;
        }
    }
    Ok(JumpPath {
        start_state,
        jump_times: jumps,
        forced,
    })
}

/// A conditioned path from `k` and a free path from `k + 1`, built on the
/// same proposal clock so that every non-forced jump of the first is a jump
/// of the second.
#[derive(Clone, Debug)]
pub struct CoupledPair {
    pub conditioned: JumpPath,
    pub dominating: JumpPath,
}

pub fn sample_coupled_pair<R: Rng + ?Sized>(
    rule: &AttachmentRule,
    tau: f64,
    k: u64,
    horizon: f64,
    semigroup: &dyn BirthSemigroup,
    cap: usize,
    rng: &mut R,
) -> Result<CoupledPair> {
    let mut lower = k;
    let mut upper = k + 1;
    let mut lower_jumps = Vec::new();
    let mut upper_jumps = Vec::new();
    let mut forced = None;
    let mut t = 0.0;
    loop {
        let next = t + exp1(rng) / rule.eval(upper);
        if forced.is_none() && tau <= horizon && tau < next {
            forced = Some(lower_jumps.len());
            lower_jumps.push(tau);
            lower += 1;
        }
        if next > horizon {
            break;
        }
        if upper_jumps.len() == cap {
            return Err(Error::JumpBudget { cap, horizon });
        }
        let mut acc = rule.eval(lower) / rule.eval(upper);
        if next < tau {
            acc *= semigroup.ratio(lower, tau - next)?;
        }
        debug_assert!(acc <= 1.0 + 1e-9);
        if rng.gen::<f64>() < acc {
            lower_jumps.push(next);
            lower += 1;
        }
        upper_jumps.push(next);
        upper += 1;
        t = next;
    }
    Ok(CoupledPair {
        conditioned: JumpPath {
            start_state: k,
            jump_times: lower_jumps,
            forced,
        },
        dominating: JumpPath {
            start_state: k + 1,
            jump_times: upper_jumps,
            forced: None,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::birth::semigroup::{LinearSemigroup, SemigroupTable, TableConfig};
    use crate::streams::stream;

    #[test]
    fn constant_rate_is_poisson() {
        let rule = AttachmentRule::constant(1.0).unwrap();
        let mut rng = stream(1, &[]);
        let reps = 10_000;
        let total: usize = (0..reps)
            .map(|_| sample_path(&rule, 0, 2.0, DEFAULT_JUMP_CAP, &mut rng).unwrap().jump_times.len())
            .sum();
        let mean = total as f64 / reps as f64;
        assert!((mean - 2.0).abs() < 0.05, "{mean}");
    }

    #[test]
    fn zero_horizon_is_empty() {
        let rule = AttachmentRule::linear(0.4, 0.5).unwrap();
        let mut rng = stream(2, &[]);
        let p = sample_path(&rule, 3, 0.0, 10, &mut rng).unwrap();
        assert!(p.jump_times.is_empty());
        assert_eq!(p.state_at(1.0), 3);
    }

    #[test]
    fn linear_mean_growth() {
        let (g, b) = (0.3, 0.5);
        let rule = AttachmentRule::linear(g, b).unwrap();
        let mut rng = stream(3, &[]);
        let reps = 100_000;
        let mut sum = 0.0;
        let mut sq = 0.0;
        for _ in 0..reps {
            let p = sample_path(&rule, 0, 1.0, DEFAULT_JUMP_CAP, &mut rng).unwrap();
            let v = rule.eval(p.state_at(1.0));
            sum += v;
            sq += v * v;
        }
        let mean = sum / reps as f64;
        let sd = ((sq / reps as f64 - mean * mean) / reps as f64).sqrt();
        let exact = b * g.exp();
        assert!((mean - exact).abs() < 4.0 * sd, "{mean} vs {exact} (sd {sd})");
    }

    #[test]
    fn budget_is_enforced() {
        let rule = AttachmentRule::constant(1.0).unwrap();
        let mut rng = stream(4, &[]);
        assert!(matches!(
            sample_path(&rule, 0, 1000.0, 5, &mut rng),
            Err(Error::JumpBudget { cap: 5, .. })
        ));
    }

    #[test]
    fn tau_zero_forces_initial_jump() {
        let rule = AttachmentRule::sqrt(0.5, 0.2).unwrap();
        let sg = SemigroupTable::build(&rule, &TableConfig { t_max: 3.0, ..Default::default() }).unwrap();
        let mut rng = stream(5, &[]);
        let p = sample_conditioned_path(&rule, 0.0, 2, 3.0, &sg, 1000, &mut rng).unwrap();
        assert_eq!(p.forced, Some(0));
        assert_eq!(p.jump_times[0], 0.0);
        assert_eq!(p.state_at(0.0), 3);
    }

    #[test]
    fn linear_conditioned_rate_is_shifted_rate() {
        // For linear rules the pre-τ rate from k is exactly f(k+1).
        let rule = AttachmentRule::linear(0.4, 0.3).unwrap();
        let sg = LinearSemigroup::new(&rule).unwrap();
        let mut rng = stream(6, &[]);
        let tau = 5.0;
        let reps = 40_000;
        // time spent in state 0 before leaving, censored at tau
        let mut exposure = 0.0;
        let mut exits = 0usize;
        for _ in 0..reps {
            let p = sample_conditioned_path(&rule, tau, 0, tau, &sg, 10_000, &mut rng).unwrap();
            match p.jump_times.first() {
                Some(&t) if p.forced != Some(0) => {
                    exposure += t;
                    exits += 1;
                }
                _ => exposure += tau,
            }
        }
        let rate = exits as f64 / exposure;
        let sd = rate / (exits as f64).sqrt();
        assert!((rate - rule.eval(1)).abs() < 4.0 * sd, "{rate} vs {}", rule.eval(1));
    }

    #[test]
    fn coupled_pairs_are_ordered() {
        let rule = AttachmentRule::sqrt(0.6, 0.3).unwrap();
        let sg = SemigroupTable::build(&rule, &TableConfig { t_max: 6.0, ..Default::default() }).unwrap();
        let mut rng = stream(7, &[]);
        for rep in 0..2000 {
            let tau = 0.003 * rep as f64;
            let k = (rep % 4) as u64;
            let pair = sample_coupled_pair(&rule, tau, k, 5.0, &sg, 10_000, &mut rng).unwrap();
            let c = &pair.conditioned;
            let d = &pair.dominating;
            for t in c.free_jumps() {
                assert!(d.jump_times.contains(&t));
            }
            for &t in c.jump_times.iter().chain(&d.jump_times) {
                for s in [t, t - 1e-9] {
                    if s < 0.0 {
                        continue;
                    }
                    let lhs = c.state_at(s) + u64::from(s < tau);
                    assert!(lhs <= d.state_at(s), "rep {rep} at {s}");
                }
            }
        }
    }
}
