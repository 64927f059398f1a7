//! Tabulated semigroup `P_t f(k) = E^k[f(Z_t)]` and state laws of the pure
//! birth process, from the truncated Kolmogorov equations.
//!
//! Both systems are triangular, so they are solved one state at a time with
//! the exact exponential of the diagonal and a quintic interpolant of the
//! neighbouring state. States `0..k_max` are exact. The top state stands for
//! the rule continued linearly with slope `Δf(k_max)` (a concave majorant of
//! `f`), so its semigroup value is `f(k_max) e^{Δf(k_max) t}`; in the forward
//! equation it collects all mass above, which is the truncation error.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rule::AttachmentRule;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct TableConfig {
    /// Requested horizon. The built table may stop earlier when the state
    /// cap cannot hold the law to within `tol`.
    pub t_max: f64,
    /// Output grid step.
    pub dt: f64,
    /// Fixed truncation; `None` adds states until the law above the top
    /// state carries at most `tol`, up to `k_cap`.
    pub k_max: Option<usize>,
    pub k_cap: usize,
    /// Bound on the mass allowed in the truncated top state.
    pub tol: f64,
    /// Re-run the forward equation with half the step and compare.
    pub verify_step: bool,
}

impl Default for TableConfig {
    fn default() -> Self {
        TableConfig {
            t_max: 40.0,
            dt: 0.02,
            k_max: None,
            k_cap: 4096,
            tol: 1e-10,
            verify_step: true,
        }
    }
}

/// Law of `Z_t` started from `k0`, one row per grid time.
#[derive(Clone, Debug)]
pub struct StateLaw {
    pub k0: usize,
    width: usize,
    probs: Vec<f64>,
}

impl StateLaw {
    pub fn row(&self, i: usize) -> &[f64] {
        &self.probs[i * self.width..(i + 1) * self.width]
    }

    /// `P(Z_{t_i} = k)` for every grid time.
    pub fn column(&self, k: usize) -> Vec<f64> {
        self.probs.iter().skip(k).step_by(self.width).copied().collect()
    }

    /// Mass held by the truncated top state at grid time `i`.
    pub fn top_mass(&self, i: usize) -> f64 {
        self.row(i)[self.width - 1]
    }
}

#[derive(Clone, Debug)]
pub struct SemigroupTable {
    rule: AttachmentRule,
    dt: f64,
    n: usize,
    k_max: usize,
    values: Vec<f64>,
    laws: Vec<StateLaw>,
    truncation_bound: f64,
    integration_error: f64,
}

/// Sidecar metadata for the CSV dump of a table.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TableMeta {
    pub rule: AttachmentRule,
    pub dt: f64,
    pub steps: usize,
    pub k_max: usize,
    pub truncation_bound: f64,
    pub integration_error: f64,
}

/// Interpolation nodes per step of the exponential propagator.
const NODES: usize = 6;

/// `μ_r(z) = ∫_0^1 e^{-z(1-x)} x^r dx` for `r < NODES`.
fn exp_moments(z: f64) -> [f64; NODES] {
    let mut m = [0.0; NODES];
    if z < 2.0 {
        // Σ_n (-z)^n r! / (n+r+1)!
        for (r, slot) in m.iter_mut().enumerate() {
            let fact_r: f64 = (1..=r).map(|j| j as f64).product();
            let mut denom: f64 = (1..=r + 1).map(|j| j as f64).product();
            let mut pow = 1.0;
            let mut acc = 0.0;
            for n in 0..80 {
                let term = pow * fact_r / denom;
                acc += term;
                if term.abs() <= 1e-18 * acc.abs() {
                    break;
                }
                pow *= -z;
                denom *= (n + r + 2) as f64;
            }
            *slot = acc;
        }
    } else {
        m[0] = -(-z).exp_m1() / z;
        for r in 1..NODES {
            m[r] = (1.0 - r as f64 * m[r - 1]) / z;
        }
    }
    m
}

/// Monomial coefficients of the Lagrange basis on the given nodes.
fn lagrange_basis(nodes: [f64; NODES]) -> [[f64; NODES]; NODES] {
    let mut out = [[0.0; NODES]; NODES];
    for j in 0..NODES {
        let mut poly = [0.0; NODES];
        poly[0] = 1.0;
        let mut deg = 0;
        let mut scale = 1.0;
        for m in 0..NODES {
            if m == j {
                continue;
            }
            let mut next = [0.0; NODES];
            for d in 0..=deg {
                next[d + 1] += poly[d];
                next[d] -= nodes[m] * poly[d];
            }
            poly = next;
            deg += 1;
            scale *= nodes[j] - nodes[m];
        }
        for d in 0..NODES {
            out[j][d] = poly[d] / scale;
        }
    }
    out
}

/// Exact exponential propagator for `y' = -λ y + c g(t)` on a uniform grid,
/// with `g` interpolated by local quintics. Stable for every `λ h`.
pub(crate) struct ExpStep {
    decay: f64,
    /// `weights[s]` serves node offsets `-s..NODES-s` from the left end.
    weights: [[f64; NODES]; NODES - 1],
}

impl ExpStep {
    pub(crate) fn new(lambda: f64, h: f64) -> Self {
        let z = lambda * h;
        let mu = exp_moments(z);
        let mut weights = [[0.0; NODES]; NODES - 1];
        for (shift, w) in weights.iter_mut().enumerate() {
            let mut nodes = [0.0; NODES];
            for (j, x) in nodes.iter_mut().enumerate() {
                *x = j as f64 - shift as f64;
            }
            let basis = lagrange_basis(nodes);
            for j in 0..NODES {
                w[j] = h * (0..NODES).map(|d| basis[j][d] * mu[d]).sum::<f64>();
            }
        }
        ExpStep {
            decay: (-z).exp(),
            weights,
        }
    }

    /// `∫_{t_i}^{t_{i+1}} e^{-λ(t_{i+1}-s)} g(s) ds`.
    #[inline]
    fn source(&self, g: &[f64], i: usize) -> f64 {
        let n = g.len() - 1;
        let base = i.saturating_sub(NODES / 2 - 1).min(n + 1 - NODES);
        let w = &self.weights[i - base];
        w.iter().zip(&g[base..base + NODES]).map(|(a, b)| a * b).sum()
    }

    /// Solves over the whole grid given `g` on the grid and `y(0)`.
    pub(crate) fn sweep(&self, y0: f64, coef: f64, g: &[f64], out: &mut [f64]) {
        out[0] = y0;
        for i in 0..g.len() - 1 {
            out[i + 1] = self.decay * out[i] + coef * self.source(g, i);
        }
    }
}

/// Forward equation `p_k' = f(k-1) p_{k-1} - f(k) p_k` from `Z_0 = k0`,
/// solved one state at a time. Stops after the first state `K >= min_states - 1`
/// at which `P(Z_T > K)` is at most `tol`, or at `K = last`. Returns the
/// columns `p_k(t_i)` for `k <= K` and `P(Z_t > K)`, the latter integrated
/// from the flux out of `K` rather than by subtraction.
fn forward_columns(
    rule: &AttachmentRule,
    k0: usize,
    dt: f64,
    n: usize,
    tol: f64,
    min_states: usize,
    last: usize,
) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut cols: Vec<Vec<f64>> = Vec::new();
    let quad = ExpStep::new(0.0, dt);
    let mut tail = vec![0.0; n + 1];
    for k in 0..=last {
        let mut col = vec![0.0; n + 1];
        let lambda = rule.eval(k as u64);
        if k > k0 {
            let step = ExpStep::new(lambda, dt);
            step.sweep(0.0, rule.eval(k as u64 - 1), &cols[k - 1], &mut col);
            for v in col.iter_mut() {
                *v = v.max(0.0);
            }
        } else if k == k0 {
            for (i, v) in col.iter_mut().enumerate() {
                *v = (-lambda * i as f64 * dt).exp();
            }
        }
        if k >= k0 {
            quad.sweep(0.0, lambda, &col, &mut tail);
        }
        cols.push(col);
        if k + 1 >= min_states && k >= k0 && tail[n] <= tol {
            break;
        }
    }
    (cols, tail)
}

/// Backward equation `u_k' = f(k)(u_{k+1} - u_k)`, `u(0) = f`, from the top
/// state `u_K(t) = f(K) e^{Δf(K) t}` downwards. Returns columns.
fn backward_columns(rule: &AttachmentRule, k_max: usize, dt: f64, n: usize) -> Vec<Vec<f64>> {
    let mut cols = vec![Vec::new(); k_max + 1];
    let top = rule.eval(k_max as u64);
    let slope = rule.delta(k_max as u64);
    cols[k_max] = (0..=n).map(|i| top * (slope * i as f64 * dt).exp()).collect();
    for k in (0..k_max).rev() {
        let lambda = rule.eval(k as u64);
        let step = ExpStep::new(lambda, dt);
        let mut col = vec![0.0; n + 1];
        step.sweep(lambda, lambda, &cols[k + 1], &mut col);
        cols[k] = col;
    }
    cols
}

fn to_rows(cols: &[Vec<f64>], n: usize, width: usize) -> Vec<f64> {
    let mut rows = vec![0.0; (n + 1) * width];
    for (k, col) in cols.iter().enumerate().take(width) {
        for i in 0..=n {
            rows[i * width + k] = col[i];
        }
    }
    rows
}

impl SemigroupTable {
    pub fn build(rule: &AttachmentRule, cfg: &TableConfig) -> Result<Self> {
        if !(cfg.t_max > 0.0) || !(cfg.dt > 0.0) {
            return Err(Error::ParameterOutOfRange {
                name: "t_max/dt",
                value: cfg.t_max.min(cfg.dt),
                bound: "> 0",
            });
        }
        let n_req = (cfg.t_max / cfg.dt).round() as usize;
        if n_req < NODES {
            return Err(Error::ParameterOutOfRange {
                name: "t_max/dt",
                value: cfg.t_max / cfg.dt,
                bound: ">= 6 grid steps",
            });
        }
        let (min_states, cap) = match cfg.k_max {
            Some(k) => (k, k),
            None => (64, cfg.k_cap),
        };
        // states 0..k_max-1 are exact, k_max collects the rest
        // the law from 1 dominates the law from 0, so it fixes the truncation
        let from_one = forward_columns(rule, 1, cfg.dt, n_req, cfg.tol, min_states, cap - 1);
        let k_max = from_one.0.len();
        let from_zero = forward_columns(rule, 0, cfg.dt, n_req, cfg.tol, k_max, k_max - 1);
        let runs = [from_zero, from_one];
        let tail_at = |i: usize| runs.iter().map(|(_, t)| t[i]).fold(0.0, f64::max);
        let n = if tail_at(n_req) <= cfg.tol {
            n_req
        } else {
            let last_ok = (0..=n_req).take_while(|&i| tail_at(i) <= cfg.tol).last().unwrap_or(0);
            // keep at least one time unit of horizon
            if cfg.k_max.is_some() || (last_ok as f64) * cfg.dt < 1.0 || last_ok < NODES {
                let m = tail_at(n_req).clamp(1e-300, 0.5);
                let required = (k_max as f64 * cfg.tol.ln() / m.ln()).ceil() as usize;
                return Err(Error::TruncationInsufficient {
                    required: required.max(k_max + 1),
                    cap,
                });
            }
            last_ok
        };
        let width = k_max + 1;
        let laws: Vec<StateLaw> = runs
            .iter()
            .zip([0usize, 1])
            .map(|((cols, tail), k0)| {
                let mut cols: Vec<Vec<f64>> = cols.iter().map(|c| c[..=n].to_vec()).collect();
                cols.push(tail[..=n].to_vec());
                StateLaw {
                    k0,
                    width,
                    probs: to_rows(&cols, n, width),
                }
            })
            .collect();
        let truncation_bound = tail_at(n);

        let integration_error = if cfg.verify_step {
            // rerun the law from 0 on the half step and compare on the grid
            let (fine, _) = forward_columns(rule, 0, cfg.dt / 2.0, 2 * n, 0.0, k_max, k_max - 1);
            let coarse = &runs[0].0;
            let mut d: f64 = 0.0;
            for (k, col) in coarse.iter().enumerate().take(k_max) {
                for i in 0..=n {
                    d = d.max((col[i] - fine[k][2 * i]).abs());
                }
            }
            let tolerance = 1e-6;
            if d > tolerance {
                return Err(Error::IntegratorNotConverged {
                    discrepancy: d,
                    tolerance,
                });
            }
            d
        } else {
            0.0
        };
        let values = to_rows(&backward_columns(rule, k_max, cfg.dt, n), n, width);
        Ok(SemigroupTable {
            rule: rule.clone(),
            dt: cfg.dt,
            n,
            k_max,
            values,
            laws,
            truncation_bound,
            integration_error,
        })
    }

    pub fn rule(&self) -> &AttachmentRule {
        &self.rule
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Index of the last grid time.
    pub fn steps(&self) -> usize {
        self.n
    }

    pub fn t_max(&self) -> f64 {
        self.n as f64 * self.dt
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn truncation_bound(&self) -> f64 {
        self.truncation_bound
    }

    pub fn integration_error(&self) -> f64 {
        self.integration_error
    }

    /// `P_{t_i} f(k)` for `k <= k_max`.
    #[inline]
    pub fn value(&self, i: usize, k: usize) -> f64 {
        self.values[i * (self.k_max + 1) + k]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * (self.k_max + 1)..(i + 1) * (self.k_max + 1)]
    }

    pub fn law(&self, k0: usize) -> Option<&StateLaw> {
        self.laws.iter().find(|l| l.k0 == k0)
    }

    /// `P_t f(k)` at an arbitrary time in `[0, t_max]`, interpolated
    /// geometrically between grid times.
    pub fn pf(&self, k: usize, t: f64) -> Result<f64> {
        if k > self.k_max {
            return Err(Error::TableCoverage {
                what: format!("state {k} (k_max {})", self.k_max),
            });
        }
        if t < 0.0 || t > self.t_max() + 1e-12 {
            return Err(Error::TableCoverage {
                what: format!("time {t} (t_max {})", self.t_max()),
            });
        }
        let x = t / self.dt;
        let i = (x.floor() as usize).min(self.n.saturating_sub(1));
        let w = (x - i as f64).clamp(0.0, 1.0);
        if self.n == 0 {
            return Ok(self.value(0, k));
        }
        // geometric: exact for exponential growth
        let (a, b) = (self.value(i, k), self.value(i + 1, k));
        Ok(a.powf(1.0 - w) * b.powf(w))
    }

    /// Writes `k,t,value` rows plus a JSON sidecar at `path.json`.
    pub fn dump(&self, csv_path: &Path) -> Result<()> {
        let file = File::create(csv_path).map_err(|e| Error::io(csv_path, e))?;
        let mut w = BufWriter::new(file);
        let io = |e| Error::io(csv_path, e);
        writeln!(w, "k,t,value").map_err(io)?;
        for i in 0..=self.n {
            let t = i as f64 * self.dt;
            for k in 0..=self.k_max {
                writeln!(w, "{k},{t},{}", self.value(i, k)).map_err(io)?;
            }
        }
        w.flush().map_err(io)?;
        let meta = TableMeta {
            rule: self.rule.clone(),
            dt: self.dt,
            steps: self.n,
            k_max: self.k_max,
            truncation_bound: self.truncation_bound,
            integration_error: self.integration_error,
        };
        let side = sidecar(csv_path);
        let f = File::create(&side).map_err(|e| Error::io(&side, e))?;
        serde_json::to_writer_pretty(f, &meta).map_err(|e| Error::json(&side, e))
    }

    /// Reads a table written by [`SemigroupTable::dump`]. State laws are not
    /// persisted; they are recomputed from the stored configuration.
    pub fn load(csv_path: &Path) -> Result<(TableMeta, Vec<f64>)> {
        let side = sidecar(csv_path);
        let f = File::open(&side).map_err(|e| Error::io(&side, e))?;
        let meta: TableMeta = serde_json::from_reader(f).map_err(|e| Error::json(&side, e))?;
        let mut rdr = csv::Reader::from_path(csv_path).map_err(|e| Error::csv(csv_path, e))?;
        let header: Vec<String> = rdr
            .headers()
            .map_err(|e| Error::csv(csv_path, e))?
            .iter()
            .map(String::from)
            .collect();
        let expected = vec!["k".to_string(), "t".into(), "value".into()];
        if header != expected {
            return Err(Error::Schema {
                path: csv_path.into(),
                expected,
                found: header,
            });
        }
        let mut values = vec![f64::NAN; (meta.steps + 1) * (meta.k_max + 1)];
        for rec in rdr.records() {
            let rec = rec.map_err(|e| Error::csv(csv_path, e))?;
            let parse = |i: usize| -> Result<f64> {
                rec[i].parse::<f64>().map_err(|e| Error::Malformed {
                    path: csv_path.into(),
                    detail: e.to_string(),
                })
            };
            let k = parse(0)? as usize;
            let i = (parse(1)? / meta.dt).round() as usize;
            if k > meta.k_max || i > meta.steps {
                return Err(Error::Malformed {
                    path: csv_path.into(),
                    detail: format!("cell (k={k}, step={i}) outside grid"),
                });
            }
            values[i * (meta.k_max + 1) + k] = parse(2)?;
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(Error::Malformed {
                path: csv_path.into(),
                detail: "missing cells".into(),
            });
        }
        Ok((meta, values))
    }
}

pub(crate) fn sidecar(p: &Path) -> std::path::PathBuf {
    let mut s = p.as_os_str().to_owned();
    s.push(".json");
    s.into()
}

/// Access to `E[f(Z_t)]` and the ratios `P_s f(k+1) / P_s f(k)` needed by
/// the samplers, either tabulated or in closed form.
pub trait BirthSemigroup: Sync {
    fn rule(&self) -> &AttachmentRule;

    /// `E^0[f(Z_t)]`.
    fn mean_f(&self, t: f64) -> f64;

    /// `P_s f(k+1) / P_s f(k)`.
    fn ratio(&self, k: u64, s: f64) -> Result<f64>;

    /// Largest `t` at which `mean_f` is tabulated rather than continued.
    fn horizon(&self) -> f64 {
        f64::INFINITY
    }
}

impl BirthSemigroup for SemigroupTable {
    fn rule(&self) -> &AttachmentRule {
        &self.rule
    }

    /// Past the horizon the mean is continued at the asymptotic growth rate.
    fn mean_f(&self, t: f64) -> f64 {
        let tm = self.t_max();
        if t <= tm {
            self.pf(0, t).unwrap_or(f64::NAN)
        } else {
            self.value(self.n, 0) * (self.rule.asymptotic_slope() * (t - tm)).exp()
        }
    }

    /// The ratio is nonincreasing in `s`; past the horizon its value at the
    /// horizon is used. Above the exact states it is replaced by its upper
    /// bound `f(k+1)/f(k)`, which keeps thinning valid.
    fn ratio(&self, k: u64, s: f64) -> Result<f64> {
        if k + 1 >= self.k_max as u64 {
            return Ok(self.rule.eval(k + 1) / self.rule.eval(k));
        }
        let k = k as usize;
        let s = s.clamp(0.0, self.t_max());
        Ok(self.pf(k + 1, s)? / self.pf(k, s)?)
    }

    fn horizon(&self) -> f64 {
        self.t_max()
    }
}

/// Closed form for linear rules, tables otherwise.
pub fn semigroup_for(rule: &AttachmentRule, cfg: &TableConfig) -> Result<Box<dyn BirthSemigroup>> {
    match LinearSemigroup::new(rule) {
        Some(l) => Ok(Box::new(l)),
        None => Ok(Box::new(SemigroupTable::build(rule, cfg)?)),
    }
}

/// Closed-form semigroup of a linear rule: `P_t f(k) = f(k) e^{γ t}`.
#[derive(Clone, Debug)]
pub struct LinearSemigroup {
    rule: AttachmentRule,
    gamma: f64,
    beta: f64,
}

impl LinearSemigroup {
    pub fn new(rule: &AttachmentRule) -> Option<Self> {
        let (gamma, beta) = rule.as_linear()?;
        Some(LinearSemigroup {
            rule: rule.clone(),
            gamma,
            beta,
        })
    }
}

impl BirthSemigroup for LinearSemigroup {
    fn rule(&self) -> &AttachmentRule {
        &self.rule
    }

    fn mean_f(&self, t: f64) -> f64 {
        self.beta * (self.gamma * t).exp()
    }

    fn ratio(&self, k: u64, _s: f64) -> Result<f64> {
        Ok(self.rule.eval(k + 1) / self.rule.eval(k))
    }
}
