use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use dwellflee::bounds::{edge_terms, flow_bounds_with, TimeConstraints};
use dwellflee::lyapunov::{
    build_lmi_system, feasibility_search, hespanha_morse_check, min_dwell_bisection, mixed_rate_search,
    mixed_rate_search_over, verify_certificate, ConstraintKind, DwellParams, LmiSystem, LyapunovCertificate,
    SearchOptions, Template, TemplateParams, Verification,
};
use dwellflee::model::{
    rescale_bases, topological_order, unstable_subgraph_acyclic, ImpulseSchedule, Jumps, ModeId, StabilityClass,
    SwitchedSystemSpec, DEFAULT_XI,
};
use dwellflee::numlin::{condition_number, vector_norm, RealVector};
use dwellflee::sim::{
    classify_signal, default_step, empirical_probe, generate_signal, random_schedule, simulate, write_csv,
    ProbeOptions, SignalGenerator, DEFAULT_GROWTH_THRESHOLD,
};
use dwellflee::Execution;
use serde_json::{json, Map, Value};

use crate::document::{edge_name, parse_norm_override, rows, DocumentError, SystemDocument};
use crate::report::{sig4, sig4_opt, AnalysisReport};

#[derive(Debug)]
pub enum CmdError {
    Input(DocumentError),
    Usage(String),
    Analysis(dwellflee::Error),
    Io(std::io::Error),
}

impl fmt::Display for CmdError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CmdError::Input(e) => write!(f, "{e}"),
            CmdError::Usage(m) => write!(f, "{m}"),
            CmdError::Analysis(e) => write!(f, "analysis failed: {e}"),
            CmdError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl From<DocumentError> for CmdError {
    fn from(e: DocumentError) -> Self {
        CmdError::Input(e)
    }
}

impl From<dwellflee::Error> for CmdError {
    fn from(e: dwellflee::Error) -> Self {
        CmdError::Analysis(e)
    }
}

impl From<std::io::Error> for CmdError {
    fn from(e: std::io::Error) -> Self {
        CmdError::Io(e)
    }
}

/// Analysis finished; `ok == false` is a negative verdict (exit status 1).
pub struct Outcome {
    pub report: AnalysisReport,
    pub ok: bool,
}

fn load(input: &Path, norm: Option<&str>) -> Result<SwitchedSystemSpec, CmdError> {
    let spec = SystemDocument::read(input)?.to_spec()?;
    match norm {
        Some(n) => Ok(spec.with_norm(parse_norm_override(n)?)?),
        None => Ok(spec),
    }
}

fn exec(sequential: bool) -> Execution {
    if sequential {
        Execution::Sequential
    } else {
        Execution::default()
    }
}

fn mode_map<T: Into<Value> + Copy>(m: &BTreeMap<ModeId, T>) -> Value {
    Value::Object(m.iter().map(|(k, v)| (k.to_string(), (*v).into())).collect())
}

fn constraints_json(tc: &TimeConstraints) -> Value {
    match tc {
        TimeConstraints::Uniform { dwell, flee } => json!({
            "kind": "uniform",
            "dwell": sig4_opt(*dwell),
            "flee": sig4_opt(*flee),
        }),
        TimeConstraints::ModeDependent { dwell, flee } => {
            let round = |m: &BTreeMap<ModeId, f64>| -> BTreeMap<ModeId, f64> {
                m.iter().map(|(k, v)| (k.clone(), sig4(*v))).collect()
            };
            json!({
                "kind": "mode_dependent",
                "dwell": mode_map(&round(dwell)),
                "flee": mode_map(&round(flee)),
            })
        }
    }
}

fn norm_name(spec: &SwitchedSystemSpec) -> Value {
    match spec.norm.weight() {
        None => json!("spectral"),
        Some(w) => json!({ "ellipsoidal": rows(w) }),
    }
}

fn parse_pair(s: &str, sep: char, what: &str) -> Result<(f64, f64), CmdError> {
    let (a, b) = s
        .split_once(sep)
        .ok_or_else(|| CmdError::Usage(format!("{what}: expected two numbers separated by `{sep}`")))?;
    let num = |x: &str| x.trim().parse::<f64>().map_err(|_| CmdError::Usage(format!("{what}: bad number `{x}`")));
    Ok((num(a)?, num(b)?))
}

pub fn parse_list(s: &str, what: &str) -> Result<Vec<f64>, CmdError> {
    s.split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|_| CmdError::Usage(format!("{what}: bad number `{x}`"))))
        .collect()
}

fn parse_mode_values(s: &str, what: &str) -> Result<BTreeMap<ModeId, f64>, CmdError> {
    s.split(',')
        .map(|kv| {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| CmdError::Usage(format!("{what}: expected mode=value, got `{kv}`")))?;
            let v = v.trim().parse::<f64>().map_err(|_| CmdError::Usage(format!("{what}: bad number `{v}`")))?;
            Ok((ModeId::from(k.trim()), v))
        })
        .collect()
}

pub struct BoundsArgs<'a> {
    pub input: &'a Path,
    pub mode_dependent: bool,
    pub norm: Option<&'a str>,
    pub rescale: Option<&'a str>,
    pub probe: Option<usize>,
    pub horizon: f64,
    pub seed: u64,
    pub sequential: bool,
}

pub fn bounds(args: &BoundsArgs) -> Result<Outcome, CmdError> {
    let mut spec = load(args.input, args.norm)?;
    let ex = exec(args.sequential);
    let mut outputs = Map::new();
    if let Some(r) = args.rescale {
        let (eps, xi) = match r.split_once(':') {
            Some(_) => parse_pair(r, ':', "--rescale")?,
            None => (parse_list(r, "--rescale")?[0], DEFAULT_XI),
        };
        let (scaled, info) = rescale_bases(&spec, &spec.jumps, eps, xi)?;
        outputs.insert(
            "rescaling".into(),
            json!({
                "epsilon": eps,
                "xi": xi,
                "theta": info.theta,
                "factors": mode_map(&info.factors),
                "rho_before": info.rho_before,
                "rho_after": info.rho_after,
            }),
        );
        spec = scaled;
    }
    let tc = flow_bounds_with(&spec, args.mode_dependent, ex)?;
    let modes: Vec<Value> = spec
        .subsystems
        .iter()
        .map(|s| {
            json!({
                "id": s.id.to_string(),
                "class": format!("{:?}", s.class).to_lowercase(),
                "c": sig4(s.c),
                "rate": sig4(s.rate),
                "basis_condition": sig4(condition_number(s.basis())),
            })
        })
        .collect();
    let terms: Vec<Value> = edge_terms(&spec, ex)?
        .iter()
        .map(|t| {
            let rate = spec.subsystem(&t.edge.0).map_or(f64::NAN, |s| s.rate);
            json!({ "edge": edge_name(&t.edge), "log_norm": sig4(t.log_norm), "time": sig4(t.time(rate)) })
        })
        .collect();
    outputs.insert("constraints".into(), constraints_json(&tc));
    outputs.insert("norm".into(), norm_name(&spec));
    outputs.insert("modes".into(), Value::Array(modes));
    outputs.insert("edges".into(), Value::Array(terms));
    let mut ok = true;
    if let Some(trials) = args.probe {
        let report = empirical_probe(
            &spec,
            &tc,
            &ProbeOptions {
                trials,
                horizon: args.horizon,
                seed: args.seed,
                exec: ex,
                ..ProbeOptions::default()
            },
        )?;
        ok = !report.any_growth;
        outputs.insert(
            "probe".into(),
            json!({
                "trials": report.trials,
                "max_ratio": sig4(report.max_ratio),
                "bound_constant": sig4(report.bound_constant),
                "growth_trials": report.growth.iter().filter(|g| **g).count(),
                "note": "empirical evidence only",
            }),
        );
    }
    let method = match (&spec.jumps, args.mode_dependent) {
        (Jumps::Resets(_), false) => "flow bound, resets, uniform",
        (Jumps::Resets(_), true) => "flow bound, resets, per mode",
        (Jumps::Impulses(_), false) => "flow bound, impulses, uniform",
        (Jumps::Impulses(_), true) => "flow bound, impulses, per mode",
    };
    Ok(Outcome {
        report: AnalysisReport::new("bounds", args.input, method, Value::Object(outputs)),
        ok,
    })
}

pub struct LyapunovArgs<'a> {
    pub input: &'a Path,
    pub template: Option<&'a str>,
    pub tau_range: Option<&'a str>,
    pub tau_map: Option<&'a str>,
    pub rate: Option<&'a str>,
    pub tolerance: Option<f64>,
    pub norm: Option<&'a str>,
    pub sequential: bool,
}

pub fn certificate_json(cert: &LyapunovCertificate) -> Value {
    let q: Map<String, Value> = cert.q.iter().map(|(k, m)| (k.to_string(), json!(rows(m)))).collect();
    let gamma: Map<String, Value> = cert.gamma.iter().map(|(e, g)| (edge_name(e), json!(g))).collect();
    json!({
        "q": q,
        "lambda": mode_map(&cert.lambda),
        "mu": mode_map(&cert.mu),
        "gamma": gamma,
    })
}

fn verification_json(v: &Verification) -> Value {
    let worst = v.slacks.iter().map(|s| s.max_eigenvalue).fold(f64::NEG_INFINITY, f64::max);
    json!({ "ok": v.ok, "worst_max_eigenvalue": worst, "slacks": v.slacks })
}

fn counts_json(lmis: &LmiSystem) -> Value {
    let kinds = [
        ConstraintKind::Decay,
        ConstraintKind::Jump,
        ConstraintKind::Rate,
        ConstraintKind::JumpRate,
        ConstraintKind::PositiveDefinite,
    ];
    let mut m = Map::new();
    for k in kinds {
        let n = lmis.count(k);
        if n > 0 {
            m.insert(format!("{k:?}"), json!(n));
        }
    }
    m.insert("total".into(), json!(lmis.constraints.len()));
    Value::Object(m)
}

pub fn default_template(spec: &SwitchedSystemSpec) -> Template {
    match (&spec.jumps, spec.all_stable()) {
        (Jumps::Impulses(_), _) => Template::ImpulseDwell,
        (Jumps::Resets(_), true) => Template::ResetDwell,
        (Jumps::Resets(_), false) => Template::MixedRate,
    }
}

pub fn lyapunov(args: &LyapunovArgs) -> Result<Outcome, CmdError> {
    let spec = load(args.input, args.norm)?;
    let template = match args.template {
        Some(t) => t.parse::<Template>()?,
        None => default_template(&spec),
    };
    let opts = SearchOptions::default();
    let mut out = Map::new();
    out.insert("template".into(), json!(template));
    let ok = match template {
        Template::HespanhaMorse => {
            let lmis = build_lmi_system(&spec, template, &TemplateParams::None)?;
            out.insert("constraint_counts".into(), counts_json(&lmis));
            match hespanha_morse_check(&spec, &opts)? {
                Some(cert) => {
                    let v = verify_certificate(&cert, &lmis, opts.verify_tol)?;
                    out.insert("feasible".into(), json!(true));
                    out.insert("certificate".into(), certificate_json(&cert));
                    out.insert("verification".into(), verification_json(&v));
                    true
                }
                None => {
                    out.insert("feasible".into(), json!(false));
                    out.insert("note".into(), json!("no certificate found; the test is inconclusive"));
                    false
                }
            }
        }
        Template::MixedRate => {
            let found = match args.rate {
                Some(r) => {
                    let v = parse_list(r, "--rate")?;
                    if v.len() != 3 {
                        return Err(CmdError::Usage("--rate takes lambda,mu,gamma".into()));
                    }
                    mixed_rate_search_over(&spec, &[(v[0], v[1], v[2])], &opts)?
                }
                None => mixed_rate_search(&spec, &opts)?,
            };
            match found {
                Some(f) => {
                    out.insert("feasible".into(), json!(true));
                    out.insert("lambda".into(), json!(f.lambda));
                    out.insert("mu".into(), json!(f.mu));
                    out.insert("gamma".into(), json!(f.gamma));
                    out.insert("triples_tried".into(), json!(f.tried));
                    out.insert(
                        "alternating_condition".into(),
                        json!({
                            "slope": f.relation.slope,
                            "offset": sig4(f.relation.offset),
                            "text": format!(
                                "tau > {} * eta + {}",
                                sig4(f.relation.slope),
                                sig4(f.relation.offset)
                            ),
                        }),
                    );
                    out.insert("certificate".into(), certificate_json(&f.certificate));
                    true
                }
                None => {
                    out.insert("feasible".into(), json!(false));
                    false
                }
            }
        }
        _ => {
            if let Some(map) = args.tau_map {
                let params = TemplateParams::Dwell(DwellParams::PerMode(parse_mode_values(map, "--tau-map")?));
                let lmis = build_lmi_system(&spec, template, &params)?;
                out.insert("constraint_counts".into(), counts_json(&lmis));
                let res = feasibility_search(&lmis, &opts)?;
                out.insert("feasible".into(), json!(res.feasible));
                out.insert("t_star".into(), json!(res.t_star));
                if let (Some(c), Some(v)) = (&res.certificate, &res.verification) {
                    out.insert("certificate".into(), certificate_json(c));
                    out.insert("verification".into(), verification_json(v));
                }
                res.feasible
            } else {
                let (lo, hi) = match args.tau_range {
                    Some(r) => parse_pair(r, ':', "--tau-range")?,
                    None => (0.01, 50.0),
                };
                let tol = args.tolerance.unwrap_or(1e-3);
                match min_dwell_bisection(&spec, template, lo, hi, tol, 3, exec(args.sequential), &opts) {
                    Ok(r) => {
                        let lmis = build_lmi_system(&spec, template, &TemplateParams::Dwell(DwellParams::Uniform(r.tau)))?;
                        let v = verify_certificate(&r.certificate, &lmis, opts.verify_tol)?;
                        out.insert("tau".into(), json!(sig4(r.tau)));
                        out.insert("tau_exact".into(), json!(r.tau));
                        out.insert("tau_infeasible".into(), json!(r.tau_infeasible));
                        out.insert("constraint_counts".into(), counts_json(&lmis));
                        out.insert("profile".into(), json!(r.profile));
                        out.insert("certificate".into(), certificate_json(&r.certificate));
                        out.insert("verification".into(), verification_json(&v));
                        v.ok
                    }
                    Err(dwellflee::Error::InfeasibleAtUpperBound(t)) => {
                        out.insert("feasible".into(), json!(false));
                        out.insert("error".into(), json!(format!("no certificate at the upper end {t}")));
                        out.insert("profile".into(), json!([[t, false]]));
                        false
                    }
                    Err(e) => return Err(e.into()),
                }
            }
        }
    };
    Ok(Outcome {
        report: AnalysisReport::new("lyapunov", args.input, &format!("LMI feasibility, {template}"), Value::Object(out)),
        ok,
    })
}

pub struct SimulateArgs<'a> {
    pub input: &'a Path,
    pub output: &'a Path,
    pub signal: &'a str,
    pub modes: Option<&'a str>,
    pub durations: Option<&'a str>,
    pub horizon: f64,
    pub x0: &'a str,
    pub step: Option<f64>,
    pub impulse: Option<usize>,
    pub dwell: Option<f64>,
    pub flee: Option<f64>,
    pub seed: u64,
    pub norm: Option<&'a str>,
}

pub fn simulate_cmd(args: &SimulateArgs) -> Result<Outcome, CmdError> {
    let spec = load(args.input, args.norm)?;
    let generator = match args.signal {
        "periodic" => {
            let modes = args
                .modes
                .ok_or_else(|| CmdError::Usage("periodic signals need --modes".into()))?
                .split(',')
                .map(|m| ModeId::from(m.trim()))
                .collect();
            let durations = parse_list(
                args.durations.ok_or_else(|| CmdError::Usage("periodic signals need --durations".into()))?,
                "--durations",
            )?;
            SignalGenerator::PeriodicCycle {
                modes,
                durations,
                horizon: args.horizon,
            }
        }
        "random" => {
            let tc = match (args.dwell, args.flee) {
                (None, None) => flow_bounds_with(&spec, false, Execution::default())?,
                (dwell, flee) => TimeConstraints::Uniform { dwell, flee },
            };
            SignalGenerator::random(&spec, tc, args.seed, args.horizon)
        }
        other => return Err(CmdError::Usage(format!("unknown signal kind `{other}`; use periodic or random"))),
    };
    let signal = generate_signal(&generator)?;
    let schedule = match (&spec.jumps, args.impulse) {
        (Jumps::Impulses(set), Some(k)) => {
            let m = set
                .matrices
                .get(k.wrapping_sub(1))
                .ok_or_else(|| CmdError::Usage(format!("--impulse {k}: the set has {} matrices", set.matrices.len())))?;
            Some(ImpulseSchedule::constant(&signal, m))
        }
        (Jumps::Resets(_), Some(_)) => return Err(CmdError::Usage("--impulse applies to impulsive systems".into())),
        _ => random_schedule(&spec, &signal, args.seed)?,
    };
    let x0 = RealVector::from_vec(parse_list(args.x0, "--x0")?);
    let step = args.step.unwrap_or_else(|| default_step(&signal));
    let traj = simulate(&spec, &signal, schedule.as_ref(), &x0, step)?;
    let file = std::fs::File::create(args.output)?;
    write_csv(&traj, &spec, std::io::BufWriter::new(file))?;

    let ratio = traj.max_norm_ratio(&spec);
    let growth = ratio.is_some_and(|r| r > DEFAULT_GROWTH_THRESHOLD);
    let class = classify_signal(&signal, &spec);
    let outputs = json!({
        "csv": args.output.display().to_string(),
        "switches": signal.switch_count(),
        "samples": traj.samples.len(),
        "initial_norm": vector_norm(&x0, &spec.norm),
        "final_norm": traj.norm_trace.last().map(|p| p.1),
        "max_norm_ratio": ratio,
        "growth": growth,
        "growth_threshold": DEFAULT_GROWTH_THRESHOLD,
        "signal_class": class,
    });
    Ok(Outcome {
        report: AnalysisReport::new("simulate", args.input, "closed-form piecewise flow", outputs),
        ok: true,
    })
}

pub fn graph_check(input: &Path) -> Result<Outcome, CmdError> {
    let spec = load(input, None)?;
    let names = |edges: Vec<(ModeId, ModeId)>| -> Vec<String> { edges.iter().map(edge_name).collect() };
    let stable = names(spec.stable_edges());
    let unstable = names(spec.unstable_edges());
    let (acyclic, cycle) = unstable_subgraph_acyclic(&spec);
    let mut out = Map::new();
    out.insert("stable_edges".into(), json!(stable));
    out.insert("unstable_edges".into(), json!(unstable));
    out.insert("acyclic".into(), json!(acyclic));
    if unstable.is_empty() {
        out.insert("verdict".into(), json!("unstable subgraph empty; hypothesis holds vacuously"));
    } else if acyclic {
        let gu = spec
            .graph
            .filter_edges(|(p, _)| spec.class_of(p).ok() == Some(StabilityClass::Unstable));
        let order: Vec<String> = topological_order(&gu)?.iter().map(|m| m.to_string()).collect();
        out.insert("verdict".into(), json!("unstable subgraph is acyclic"));
        out.insert("order".into(), json!(order));
    } else {
        let witness: Vec<String> = cycle.unwrap_or_default().iter().map(|m| m.to_string()).collect();
        out.insert("verdict".into(), json!("unstable subgraph has a cycle"));
        out.insert("cycle".into(), json!(witness.join(" -> ")));
    }
    Ok(Outcome {
        report: AnalysisReport::new("graph-check", input, "unstable subgraph acyclicity", Value::Object(out)),
        ok: acyclic,
    })
}

/// Inputs for `regress`: embedded documents unless a directory is given.
pub fn regress_inputs(dir: Option<&Path>) -> Result<Vec<(String, String)>, CmdError> {
    match dir {
        None => Ok(crate::regress::SUITE.iter().map(|(n, t)| (n.to_string(), t.to_string())).collect()),
        Some(d) => {
            let mut paths: Vec<PathBuf> = std::fs::read_dir(d)?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "toml"))
                .collect();
            paths.sort();
            paths
                .into_iter()
                .map(|p| {
                    let name = p.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned());
                    Ok((name, std::fs::read_to_string(&p)?))
                })
                .collect()
        }
    }
}
