use serde::{Deserialize, Serialize};

use super::table::{fmt_f64, fmt_opt, parse_f64, CsvTable};
use super::Axis;
use crate::birth::{semigroup_for, SeriesConfig, TableConfig};
use crate::error::{Error, Result};
use crate::ibrw::{estimate_survival, IntConfig};
use crate::network::{components, generate, GenerateConfig, GenerationMode};
use crate::operator::{
    bounds_criterion, giant_criterion, series_a, series_c, CriterionConfig, CriterionVerdict, Giant,
};
use crate::parallel::map_indexed;
use crate::rule::AttachmentRule;
use crate::streams::{derive_seed, label};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    /// `f(k) = γk + β`.
    Linear,
    /// `f(k) = γ√k + β`.
    Sqrt,
}

impl Family {
    pub fn rule(self, gamma: f64, beta: f64) -> Result<AttachmentRule> {
        match self {
            Family::Linear => AttachmentRule::linear(gamma, beta),
            Family::Sqrt => AttachmentRule::sqrt(gamma, beta),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Criterion,
    Survival,
    Network,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct PhaseConfig {
    pub family: Family,
    pub gamma: Axis,
    pub beta: Axis,
    pub engine: Engine,
    /// Run the numeric `min ρ` search where the series bounds are silent.
    pub numeric: bool,
    pub table: TableConfig,
    pub reps: usize,
    pub int: IntConfig,
    pub n_vertices: usize,
    pub network_seeds: usize,
}

impl Default for PhaseConfig {
    fn default() -> Self {
        PhaseConfig {
            family: Family::Linear,
            gamma: Axis::Range { min: 0.0, max: 0.475, n: 20 },
            beta: Axis::Range { min: 0.025, max: 1.0, n: 20 },
            engine: Engine::Criterion,
            numeric: true,
            table: TableConfig::default(),
            reps: 1000,
            int: IntConfig::default(),
            n_vertices: 100_000,
            network_seeds: 3,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellStatus {
    Ok,
    Failed,
    /// The criterion and the simulation contradict each other.
    Disagreement,
}

impl CellStatus {
    fn as_str(self) -> &'static str {
        match self {
            CellStatus::Ok => "ok",
            CellStatus::Failed => "failed",
            CellStatus::Disagreement => "disagreement",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "ok" => Some(CellStatus::Ok),
            "failed" => Some(CellStatus::Failed),
            "disagreement" => Some(CellStatus::Disagreement),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    /// Index along the γ axis.
    pub i: usize,
    /// Index along the β axis.
    pub j: usize,
    pub gamma: f64,
    pub beta: f64,
    pub status: CellStatus,
    /// `yes`, `no` or `undetermined`.
    pub verdict: Option<String>,
    pub margin: Option<f64>,
    pub rho_min: Option<f64>,
    /// Survival probability or largest-component fraction.
    pub value: Option<f64>,
    pub err_low: Option<f64>,
    pub err_high: Option<f64>,
    pub ambiguous_fraction: Option<f64>,
    pub detail: String,
}

impl GridCell {
    fn blank(i: usize, j: usize, gamma: f64, beta: f64) -> Self {
        GridCell {
            i,
            j,
            gamma,
            beta,
            status: CellStatus::Ok,
            verdict: None,
            margin: None,
            rho_min: None,
            value: None,
            err_low: None,
            err_high: None,
            ambiguous_fraction: None,
            detail: String::new(),
        }
    }
}

/// A curve in the `(γ, β)` plane.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Overlay {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub family: Family,
    pub engine: Engine,
    pub gammas: Vec<f64>,
    pub betas: Vec<f64>,
    /// Row-major in `(i, j)`.
    pub cells: Vec<GridCell>,
    pub overlays: Vec<Overlay>,
}

const CELL_SCHEMA: &str = "phase-diagram/1";
const CELL_COLUMNS: [&str; 15] = [
    "family", "engine", "i", "j", "gamma", "beta", "status", "verdict", "margin", "rho_min", "value",
    "err_low", "err_high", "ambiguous_fraction", "detail",
];
const OVERLAY_SCHEMA: &str = "phase-overlay/1";
const OVERLAY_COLUMNS: [&str; 3] = ["overlay", "gamma", "beta"];

fn family_str(f: Family) -> &'static str {
    match f {
        Family::Linear => "linear",
        Family::Sqrt => "sqrt",
    }
}

fn engine_str(e: Engine) -> &'static str {
    match e {
        Engine::Criterion => "criterion",
        Engine::Survival => "survival",
        Engine::Network => "network",
    }
}

fn malformed(detail: impl Into<String>) -> Error {
    Error::Malformed {
        path: "<table>".into(),
        detail: detail.into(),
    }
}

impl GridResult {
    pub fn cell(&self, i: usize, j: usize) -> &GridCell {
        &self.cells[i * self.betas.len() + j]
    }

    pub fn failures(&self) -> impl Iterator<Item = &GridCell> {
        self.cells.iter().filter(|c| c.status != CellStatus::Ok)
    }

    pub fn cell_table(&self, manifest: &str) -> CsvTable {
        let mut t = CsvTable::new(CELL_SCHEMA, manifest, &CELL_COLUMNS);
        for c in &self.cells {
            t.push(vec![
                family_str(self.family).into(),
                engine_str(self.engine).into(),
                c.i.to_string(),
                c.j.to_string(),
                fmt_f64(c.gamma),
                fmt_f64(c.beta),
                c.status.as_str().into(),
                c.verdict.clone().unwrap_or_default(),
                fmt_opt(c.margin),
                fmt_opt(c.rho_min),
                fmt_opt(c.value),
                fmt_opt(c.err_low),
                fmt_opt(c.err_high),
                fmt_opt(c.ambiguous_fraction),
                c.detail.clone(),
            ]);
        }
        t
    }

    pub fn overlay_table(&self, manifest: &str) -> CsvTable {
        let mut t = CsvTable::new(OVERLAY_SCHEMA, manifest, &OVERLAY_COLUMNS);
        for o in &self.overlays {
            for &(g, b) in &o.points {
                t.push(vec![o.name.clone(), fmt_f64(g), fmt_f64(b)]);
            }
        }
        t
    }

    pub fn cell_schema() -> (&'static str, &'static [&'static str]) {
        (CELL_SCHEMA, &CELL_COLUMNS)
    }

    pub fn overlay_schema() -> (&'static str, &'static [&'static str]) {
        (OVERLAY_SCHEMA, &OVERLAY_COLUMNS)
    }

    /// Inverse of `cell_table` / `overlay_table`.
    pub fn from_tables(cells: &CsvTable, overlays: &CsvTable) -> Result<Self> {
        let first = cells.rows.first().ok_or_else(|| malformed("no cells"))?;
        let family = match first[0].as_str() {
            "linear" => Family::Linear,
            "sqrt" => Family::Sqrt,
            s => return Err(malformed(format!("family {s}"))),
        };
        let engine = match first[1].as_str() {
            "criterion" => Engine::Criterion,
            "survival" => Engine::Survival,
            "network" => Engine::Network,
            s => return Err(malformed(format!("engine {s}"))),
        };
        let num = |s: &str| parse_f64(s).ok_or_else(|| malformed(format!("number {s:?}")));
        let idx = |s: &str| s.parse::<usize>().map_err(|_| malformed(format!("index {s:?}")));
        let mut out = Vec::with_capacity(cells.rows.len());
        for r in &cells.rows {
            out.push(GridCell {
                i: idx(&r[2])?,
                j: idx(&r[3])?,
                gamma: num(&r[4])?,
                beta: num(&r[5])?,
                status: CellStatus::parse(&r[6]).ok_or_else(|| malformed(format!("status {}", r[6])))?,
                verdict: (!r[7].is_empty()).then(|| r[7].clone()),
                margin: parse_f64(&r[8]),
                rho_min: parse_f64(&r[9]),
                value: parse_f64(&r[10]),
                err_low: parse_f64(&r[11]),
                err_high: parse_f64(&r[12]),
                ambiguous_fraction: parse_f64(&r[13]),
                detail: r[14].clone(),
            });
        }
        let ni = out.iter().map(|c| c.i).max().unwrap_or(0) + 1;
        let nj = out.iter().map(|c| c.j).max().unwrap_or(0) + 1;
        if ni * nj != out.len() {
            return Err(malformed("grid has gaps"));
        }
        let gammas = (0..ni).map(|i| out[i * nj].gamma).collect();
        let betas = (0..nj).map(|j| out[j].beta).collect();
        let mut curves: Vec<Overlay> = Vec::new();
        for r in &overlays.rows {
            let p = (num(&r[1])?, num(&r[2])?);
            match curves.last_mut() {
                Some(o) if o.name == r[0] => o.points.push(p),
                _ => curves.push(Overlay {
                    name: r[0].clone(),
                    points: vec![p],
                }),
            }
        }
        Ok(GridResult {
            family,
            engine,
            gammas,
            betas,
            cells: out,
            overlays: curves,
        })
    }
}

/// `β = (½-γ)²/(1-γ)` (zero for `γ >= ½`) at each `γ`.
pub fn linear_boundary(gammas: &[f64]) -> Overlay {
    Overlay {
        name: "closed-form boundary".into(),
        points: gammas
            .iter()
            .map(|&g| (g, if g < 0.5 { (0.5 - g).powi(2) / (1.0 - g) } else { 0.0 }))
            .collect(),
    }
}

/// Root in `β ∈ (0, 1]` of an increasing function by bisection.
fn bisect_beta(mut g: impl FnMut(f64) -> f64, tol: f64) -> Option<f64> {
    let (mut lo, mut hi) = (1e-9, 1.0);
    if g(hi) < 0.0 || g(lo) > 0.0 {
        return None;
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// For the square-root family: the curves `a[f] = ½` and
/// `a[f] + √(a[f] c[f]) = 1`, found in `β` at each `γ`. Both quantities grow
/// with `β`; a `γ` without a root in `(0, 1]` contributes no point.
pub fn bound_curves(gammas: &[f64], tol: f64) -> (Overlay, Overlay) {
    let cfg = SeriesConfig::default();
    let a = |g: f64, b: f64| -> Option<(f64, f64)> {
        let r = AttachmentRule::sqrt(g, b).ok()?;
        let a = series_a(&r, 0.5, &cfg);
        let c = series_c(&r, 0.5, &cfg);
        (a.is_finite() && c.is_finite()).then_some((a.value.est, c.value.est))
    };
    let mut suff = Vec::new();
    let mut nec = Vec::new();
    for &g in gammas {
        if let Some(b) = bisect_beta(|b| a(g, b).map_or(1.0, |(a, _)| a - 0.5), tol) {
            suff.push((g, b));
        }
        if let Some(b) = bisect_beta(|b| a(g, b).map_or(1.0, |(a, c)| a + (a * c).sqrt() - 1.0), tol) {
            nec.push((g, b));
        }
    }
    (
        Overlay {
            name: "a[f]=1/2".into(),
            points: suff,
        },
        Overlay {
            name: "a[f]+sqrt(a[f]c[f])=1".into(),
            points: nec,
        },
    )
}

fn verdict_fields(cell: &mut GridCell, v: &CriterionVerdict) {
    let (s, m) = match v.giant {
        Giant::Yes => ("yes", None),
        Giant::No => ("no", None),
        Giant::Undetermined { margin } => ("undetermined", Some(margin)),
    };
    cell.verdict = Some(s.into());
    cell.margin = m;
    cell.rho_min = v.rho_min.map(|r| r.est);
}

/// Cheap verdict used to cross-check simulations: closed form or series
/// bounds only.
fn quick_verdict(rule: &AttachmentRule) -> CriterionVerdict {
    let cfg = CriterionConfig {
        always_numeric: false,
        ..Default::default()
    };
    if rule.as_linear().is_some() {
        giant_criterion(rule, &cfg).expect("closed form is infallible")
    } else {
        bounds_criterion(rule)
    }
}

fn run_cell(cfg: &PhaseConfig, seed: u64, i: usize, j: usize, gamma: f64, beta: f64) -> GridCell {
    let mut cell = GridCell::blank(i, j, gamma, beta);
    let idx = (i * 1_000_003 + j) as u64;
    let cell_seed = derive_seed(seed, &[label("phase-diagram"), idx]);
    let result = (|| -> Result<()> {
        let rule = cfg.family.rule(gamma, beta)?;
        match cfg.engine {
            Engine::Criterion => {
                let v = if cfg.numeric {
                    giant_criterion(
                        &rule,
                        &CriterionConfig {
                            table: cfg.table.clone(),
                            always_numeric: false,
                            ..Default::default()
                        },
                    )?
                } else {
                    quick_verdict(&rule)
                };
                verdict_fields(&mut cell, &v);
                cell.value = v.rho_min.map(|r| r.est);
            }
            Engine::Survival => {
                let v = quick_verdict(&rule);
                verdict_fields(&mut cell, &v);
                let sg = semigroup_for(&rule, &cfg.table)?;
                let est = estimate_survival(sg.as_ref(), &cfg.int, cfg.reps, cell_seed, 1)?;
                cell.value = Some(est.p_hat);
                cell.err_low = Some(est.ci_low);
                cell.err_high = Some(est.ci_high);
                cell.ambiguous_fraction = Some(est.ambiguous_fraction);
                if v.giant == Giant::No && est.ci_low > 0.0 {
                    cell.status = CellStatus::Disagreement;
                    cell.detail = format!("criterion says no giant but survival CI is [{}, {}]", est.ci_low, est.ci_high);
                }
            }
            Engine::Network => {
                let v = quick_verdict(&rule);
                verdict_fields(&mut cell, &v);
                let gen = GenerateConfig::new(cfg.n_vertices, GenerationMode::DegreeClass);
                let mut fr = Vec::with_capacity(cfg.network_seeds);
                for s in 0..cfg.network_seeds.max(1) {
                    let g = generate(&rule, derive_seed(cell_seed, &[s as u64]), &gen)?;
                    fr.push(components(&g).largest_fraction());
                }
                let mean = fr.iter().sum::<f64>() / fr.len() as f64;
                let sd = if fr.len() > 1 {
                    (fr.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (fr.len() - 1) as f64).sqrt()
                } else {
                    0.0
                };
                cell.value = Some(mean);
                cell.err_low = Some(mean - sd);
                cell.err_high = Some(mean + sd);
            }
        }
        Ok(())
    })();
    if let Err(e) = result {
        cell.status = CellStatus::Failed;
        cell.detail = e.to_string();
    }
    cell
}

/// One cell per `(γ, β)` pair; failed cells are kept with their error.
pub fn run_phase_diagram(cfg: &PhaseConfig, seed: u64, workers: usize) -> Result<GridResult> {
    let gammas = cfg.gamma.values();
    let betas = cfg.beta.values();
    if gammas.is_empty() || betas.is_empty() {
        return Err(Error::Empty("parameter grid"));
    }
    let nb = betas.len();
    let cells = map_indexed(workers, gammas.len() * nb, |idx| {
        let (i, j) = (idx / nb, idx % nb);
        run_cell(cfg, seed, i, j, gammas[i], betas[j])
    });
    let overlays = match cfg.family {
        Family::Linear => vec![linear_boundary(&gammas)],
        Family::Sqrt => {
            let (a, b) = bound_curves(&gammas, 1e-6);
            vec![a, b]
        }
    };
    Ok(GridResult {
        family: cfg.family,
        engine: cfg.engine,
        gammas,
        betas,
        cells,
        overlays,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(family: Family, engine: Engine) -> PhaseConfig {
        PhaseConfig {
            family,
            engine,
            gamma: Axis::Values(vec![0.0, 0.2, 0.4]),
            beta: Axis::Values(vec![0.05, 0.3, 0.9]),
            reps: 200,
            n_vertices: 2000,
            network_seeds: 2,
            ..Default::default()
        }
    }

    #[test]
    fn linear_criterion_grid() {
        let r = run_phase_diagram(&small(Family::Linear, Engine::Criterion), 1, 1).unwrap();
        assert_eq!(r.cells.len(), 9);
        for c in &r.cells {
            let above = c.beta > (0.5 - c.gamma).powi(2) / (1.0 - c.gamma);
            assert_eq!(c.verdict.as_deref(), Some(if above { "yes" } else { "no" }), "{c:?}");
        }
        let o = &r.overlays[0];
        assert_eq!(o.points[1], (0.2, 0.09 / 0.8));
    }

    #[test]
    fn tables_round_trip() {
        let r = run_phase_diagram(&small(Family::Linear, Engine::Survival), 2, 1).unwrap();
        assert_eq!(r.failures().count(), 0);
        let back = GridResult::from_tables(&r.cell_table("m"), &r.overlay_table("m")).unwrap();
        assert_eq!(back.cell_table("m"), r.cell_table("m"));
        assert_eq!(back.overlay_table("m"), r.overlay_table("m"));
    }

    #[test]
    fn empty_grid_and_failed_cells() {
        let mut cfg = small(Family::Linear, Engine::Criterion);
        cfg.beta = Axis::Values(vec![]);
        assert!(matches!(run_phase_diagram(&cfg, 1, 1), Err(Error::Empty(_))));
        cfg.beta = Axis::Values(vec![0.0, 0.5]);
        let r = run_phase_diagram(&cfg, 1, 1).unwrap();
        assert_eq!(r.failures().count(), 3);
        assert!(r.cell(0, 0).detail.contains("beta"));
    }

    #[test]
    fn sqrt_curves_are_ordered() {
        let (suff, nec) = bound_curves(&[0.0, 0.3, 0.6], 1e-6);
        assert!((suff.points[0].1 - 0.25).abs() < 1e-5);
        assert!((nec.points[0].1 - 0.25).abs() < 1e-5);
        for (s, n) in suff.points.iter().zip(&nec.points) {
            assert!(n.1 <= s.1 + 1e-6, "{s:?} {n:?}");
        }
    }
}
