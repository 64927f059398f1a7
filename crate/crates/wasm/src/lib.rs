//! Browser bindings. Every entry point takes plain numbers or a rule in its
//! JSON form and returns a JSON string.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use pa_giant::birth::{MeasureTables, SemigroupTable, TableConfig};
use pa_giant::harness::{run_phase_diagram, Axis, Engine, Family, PhaseConfig};
use pa_giant::ibrw::{estimate_survival, IntConfig};
use pa_giant::network::{compare_mu, components, generate, GenerateConfig, GenerationMode};
use pa_giant::operator::{giant_criterion, rho_linear, rho_rank2, CriterionConfig, Giant, SearchConfig};
use pa_giant::AttachmentRule;

fn err(e: impl std::fmt::Display) -> JsValue {
    JsValue::from_str(&e.to_string())
}

fn to_json<T: Serialize>(v: &T) -> Result<String, JsValue> {
    serde_json::to_string(v).map_err(err)
}

fn parse_rule(rule: &str) -> Result<AttachmentRule, JsValue> {
    serde_json::from_str(rule).map_err(err)
}

/// Lighter tables than the library default: the page recomputes on every
/// input change.
fn demo_tables() -> TableConfig {
    TableConfig {
        t_max: 30.0,
        dt: 0.05,
        verify_step: false,
        ..TableConfig::default()
    }
}

/// Giant-component verdicts over a `(γ, β)` grid. `family` is `"linear"` or
/// `"sqrt"`; `numeric` enables the `min ρ` search where the explicit bounds
/// are silent (slow for large grids).
#[wasm_bindgen]
pub fn phase_diagram(
    family: &str,
    gamma_max: f64,
    n_gamma: usize,
    beta_min: f64,
    n_beta: usize,
    numeric: bool,
) -> Result<String, JsValue> {
    let family = match family {
        "linear" => Family::Linear,
        "sqrt" => Family::Sqrt,
        f => return Err(err(format!("unknown family {f}"))),
    };
    let cfg = PhaseConfig {
        family,
        gamma: Axis::Range { min: 0.0, max: gamma_max, n: n_gamma },
        beta: Axis::Range { min: beta_min, max: 1.0, n: n_beta },
        engine: Engine::Criterion,
        numeric,
        table: demo_tables(),
        ..PhaseConfig::default()
    };
    to_json(&run_phase_diagram(&cfg, 0, 1).map_err(err)?)
}

#[derive(Serialize)]
struct RhoPoint {
    alpha: f64,
    rho: f64,
    rho_low: f64,
    rho_high: f64,
    lower_bound: f64,
    upper_bound: f64,
}

#[derive(Serialize)]
struct RhoCurve {
    rule: AttachmentRule,
    points: Vec<RhoPoint>,
    giant: String,
    robust: bool,
    percolation_threshold: Option<f64>,
    alpha_star: Option<f64>,
}

/// `ρ(A_α)` on `n` points of `(lo, hi)` with the explicit sandwich bounds,
/// and the resulting verdict.
#[wasm_bindgen]
pub fn rho_curve(rule: &str, lo: f64, hi: f64, n: usize) -> Result<String, JsValue> {
    let rule = parse_rule(rule)?;
    let alphas: Vec<f64> = (0..n.max(2)).map(|i| lo + (hi - lo) * i as f64 / (n.max(2) - 1) as f64).collect();
    let tables = match rule.as_linear() {
        Some(_) => None,
        None => Some(MeasureTables::build(SemigroupTable::build(&rule, &demo_tables()).map_err(err)?, &[]).map_err(err)?),
    };
    let mut points = Vec::new();
    for &alpha in &alphas {
        let r = match (rule.as_linear(), &tables) {
            (Some((g, b)), _) => rho_linear(g, b, alpha),
            (None, Some(t)) => rho_rank2(t, alpha),
            _ => unreachable!(),
        }
        .map_err(err)?;
        let (l, u) = pa_giant::operator::sandwich(r.a.est, r.b.est, r.c.est);
        points.push(RhoPoint {
            alpha,
            rho: r.rho.est,
            rho_low: r.rho.lo,
            rho_high: r.rho.hi,
            lower_bound: l,
            upper_bound: u,
        });
    }
    let v = giant_criterion(
        &rule,
        &CriterionConfig {
            table: demo_tables(),
            search: SearchConfig::default(),
            always_numeric: true,
        },
    )
    .map_err(err)?;
    to_json(&RhoCurve {
        rule,
        points,
        giant: match v.giant {
            Giant::Yes => "yes".into(),
            Giant::No => "no".into(),
            Giant::Undetermined { margin } => format!("undetermined (margin {margin:.2e})"),
        },
        robust: v.robust,
        percolation_threshold: v.percolation_threshold,
        alpha_star: v.alpha_star,
    })
}

#[derive(Serialize)]
struct NetworkStats {
    n_vertices: usize,
    n_edges: usize,
    largest_fraction: f64,
    second_fraction: f64,
    components: usize,
    indegree_tv: f64,
    p_hat: f64,
    ci_low: f64,
    ci_high: f64,
    ambiguous_fraction: f64,
}

/// One network of size `n` next to a tree survival estimate from `reps`
/// replicas.
#[wasm_bindgen]
pub fn network_stats(rule: &str, n: usize, reps: usize, seed: u64) -> Result<String, JsValue> {
    let rule = parse_rule(rule)?;
    let g = generate(&rule, seed, &GenerateConfig::new(n, GenerationMode::DegreeClass)).map_err(err)?;
    let st = components(&g);
    let sg = pa_giant::birth::semigroup_for(&rule, &demo_tables()).map_err(err)?;
    let est = estimate_survival(sg.as_ref(), &IntConfig::default(), reps.max(1), seed, 1).map_err(err)?;
    to_json(&NetworkStats {
        n_vertices: g.n_vertices(),
        n_edges: g.n_edges(),
        largest_fraction: st.largest_fraction(),
        second_fraction: st.second_fraction(),
        components: st.component_sizes.len(),
        indegree_tv: compare_mu(&g, &rule, 20),
        p_hat: est.p_hat,
        ci_low: est.ci_low,
        ci_high: est.ci_high,
        ambiguous_fraction: est.ambiguous_fraction,
    })
}
