use dwellflee::bounds::{flow_bounds_with, TimeConstraints};
use dwellflee::lyapunov::{
    build_lmi_system, min_dwell_bisection, mixed_rate_search, DwellParams, SearchOptions, Template, TemplateParams,
};
use dwellflee::model::{Jumps, ModeId, SwitchedSystemSpec};
use dwellflee::numlin::{matrix_exp, spectral_radius, RealMatrix};
use dwellflee::Execution;
use serde::Serialize;

use crate::commands::default_template;
use crate::document::{Check, SystemDocument};

pub const SUITE: &[(&str, &str)] = &[
    ("rotating_pair", include_str!("../systems/rotating_pair.toml")),
    ("spiral_resets", include_str!("../systems/spiral_resets.toml")),
    ("mixed", include_str!("../systems/mixed.toml")),
    ("scope", include_str!("../systems/scope.toml")),
    ("scope_v", include_str!("../systems/scope_v.toml")),
    ("scope_weighted", include_str!("../systems/scope_weighted.toml")),
    ("hull_impulses", include_str!("../systems/hull_impulses.toml")),
];

const DEFAULT_TOLERANCE: f64 = 0.01;

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub system: String,
    pub quantity: String,
    pub computed: Option<f64>,
    pub expected: Option<f64>,
    pub window: Option<(f64, f64)>,
    pub tolerance: Option<f64>,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl CheckResult {
    pub fn line(&self) -> String {
        let verdict = if self.pass { "PASS" } else { "FAIL" };
        let target = match (self.window, self.expected) {
            (Some((lo, hi)), _) => format!("in [{lo}, {hi}]"),
            (None, Some(e)) => format!("{e} ± {}", self.tolerance.unwrap_or(DEFAULT_TOLERANCE)),
            _ => String::new(),
        };
        let got = match (&self.error, self.computed) {
            (Some(e), _) => format!("error: {e}"),
            (None, Some(v)) => format!("{v:.4}"),
            (None, None) => "undefined".into(),
        };
        format!("{verdict} {}: {} = {got} (expected {target})", self.system, self.quantity)
    }
}

fn template_for(check: &Check, spec: &SwitchedSystemSpec) -> dwellflee::Result<Template> {
    match &check.template {
        Some(t) => t.parse(),
        None => Ok(default_template(spec)),
    }
}

fn evaluate(check: &Check, spec: &SwitchedSystemSpec) -> dwellflee::Result<Option<f64>> {
    let q = check.quantity.as_str();
    if let Some(rest) = q.strip_prefix("dwell.").or_else(|| q.strip_prefix("flee.")) {
        let tc = flow_bounds_with(spec, true, Execution::default())?;
        let m = ModeId::from(rest);
        return Ok(if q.starts_with("dwell.") { tc.dwell_for(&m) } else { tc.flee_for(&m) });
    }
    match q {
        "dwell" | "flee" => {
            let TimeConstraints::Uniform { dwell, flee } = flow_bounds_with(spec, false, Execution::default())? else {
                unreachable!("uniform bounds requested");
            };
            Ok(if q == "dwell" { dwell } else { flee })
        }
        "lmi-dwell" => {
            let (lo, hi) = check.range.unwrap_or((0.5, 50.0));
            let t = template_for(check, spec)?;
            let r = min_dwell_bisection(spec, t, lo, hi, 1e-3, 3, Execution::default(), &SearchOptions::default())?;
            Ok(Some(r.tau))
        }
        "lmi-constraints" => {
            let t = template_for(check, spec)?;
            let lmis = build_lmi_system(spec, t, &TemplateParams::Dwell(DwellParams::Uniform(1.0)))?;
            Ok(Some(lmis.constraints.len() as f64))
        }
        "spectral-radius" => {
            let period = check
                .period
                .ok_or_else(|| dwellflee::Error::InvalidArgument("spectral-radius needs `period`".into()))?;
            cycle_radius(spec, &check.cycle, period).map(Some)
        }
        "mixed-rate.slope" | "mixed-rate.offset" => {
            let found = mixed_rate_search(spec, &SearchOptions::default())?;
            Ok(found.map(|f| if q.ends_with("slope") { f.relation.slope } else { f.relation.offset }))
        }
        other => Err(dwellflee::Error::InvalidArgument(format!("unknown quantity `{other}`"))),
    }
}

/// Per-step growth `ρ(Π R e^{A t})^{1/k}` along the mode sequence `cycle`.
fn cycle_radius(spec: &SwitchedSystemSpec, cycle: &[String], period: f64) -> dwellflee::Result<f64> {
    let Jumps::Resets(resets) = &spec.jumps else {
        return Err(dwellflee::Error::InvalidArgument("spectral-radius needs resets".into()));
    };
    if cycle.len() < 2 {
        return Err(dwellflee::Error::InvalidArgument("cycle needs at least two modes".into()));
    }
    let n = spec.dim();
    let mut m = RealMatrix::identity(n, n);
    for w in cycle.windows(2) {
        let (p, q) = (ModeId::from(w[0].as_str()), ModeId::from(w[1].as_str()));
        let r = resets
            .get(&(p.clone(), q.clone()))
            .ok_or_else(|| dwellflee::Error::MissingReset(p.clone(), q.clone()))?;
        m = r * matrix_exp(&spec.subsystem(&p)?.a, period)? * m;
    }
    Ok(spectral_radius(&m)?.powf(1.0 / (cycle.len() - 1) as f64))
}

/// Evaluate every check in every document.
pub fn run(inputs: &[(String, String)], tolerance: Option<f64>) -> Vec<CheckResult> {
    let mut out = Vec::new();
    for (name, text) in inputs {
        let doc = match SystemDocument::parse(text) {
            Ok(d) => d,
            Err(e) => {
                out.push(failed(name, "document", e.to_string()));
                continue;
            }
        };
        let spec = match doc.to_spec() {
            Ok(s) => s,
            Err(e) => {
                out.push(failed(name, "document", e.to_string()));
                continue;
            }
        };
        for check in &doc.checks {
            let tol = if check.quantity == "lmi-constraints" {
                check.tolerance.unwrap_or(0.0)
            } else {
                tolerance.or(check.tolerance).unwrap_or(DEFAULT_TOLERANCE)
            };
            let (computed, error) = match evaluate(check, &spec) {
                Ok(v) => (v, None),
                Err(e) => (None, Some(e.to_string())),
            };
            let pass = match (computed, check.window, check.expected) {
                (Some(v), Some((lo, hi)), _) => lo <= v && v <= hi,
                (Some(v), None, Some(e)) => (v - e).abs() <= tol + 1e-12,
                _ => false,
            };
            out.push(CheckResult {
                system: name.clone(),
                quantity: check.quantity.clone(),
                computed,
                expected: check.expected,
                window: check.window,
                tolerance: check.window.is_none().then_some(tol),
                pass,
                error,
            });
        }
    }
    out
}

fn failed(system: &str, quantity: &str, error: String) -> CheckResult {
    CheckResult {
        system: system.to_string(),
        quantity: quantity.to_string(),
        computed: None,
        expected: None,
        window: None,
        tolerance: None,
        pass: false,
        error: Some(error),
    }
}
