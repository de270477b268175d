//! TOML system descriptions.
//!
//! ```toml
//! name = "example"
//!
//! [norm]                      # optional, spectral by default
//! kind = "ellipsoidal"
//! weight = [[2.0, 0.0], [0.0, 0.5]]
//!
//! [[mode]]
//! id = "1"
//! a = [[-0.1, 2.0], [-1.0, -0.1]]
//! basis = [[...]]             # optional diagonalizing basis (real part)
//! basis_imag = [[...]]        # optional imaginary part of `basis`
//! basis_scale = 1e-3          # optional factor on the basis
//! margin = 0.05               # optional decay margin for defective modes
//!
//! [graph]
//! complete = true             # or: edges = [["1", "2"], ["2", "1"]]
//!
//! [jumps]
//! kind = "resets"             # resets | finite | hull
//! resets = [{ from = "1", to = "2", matrix = [[0.0, 1.0], [-1.0, 0.0]] }]
//! matrices = [[[...]]]        # finite members or hull vertices
//! ```
//!
//! Optional `[[check]]` tables list expected values for `regress`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use dwellflee::model::{
    default_margin, validate, Edge, ImpulseKind, ImpulseSet, Jumps, ModeGraph, ModeId, SubsystemSpec,
    SwitchedSystemSpec,
};
use dwellflee::numlin::{eigendecompose, ComplexMatrix, NormSpec, RealMatrix};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

type Rows = Vec<Vec<f64>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemDocument {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub norm: Option<NormDoc>,
    #[serde(rename = "mode")]
    pub modes: Vec<ModeDoc>,
    pub graph: GraphDoc,
    pub jumps: JumpsDoc,
    #[serde(default, rename = "check", skip_serializing_if = "Vec::is_empty")]
    pub checks: Vec<Check>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, tag = "kind", rename_all = "lowercase")]
pub enum NormDoc {
    Spectral,
    Ellipsoidal { weight: Rows },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeDoc {
    pub id: String,
    pub a: Rows,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basis: Option<Rows>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basis_imag: Option<Rows>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basis_scale: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub margin: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphDoc {
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub complete: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub edges: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResetDoc {
    pub from: String,
    pub to: String,
    pub matrix: Rows,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JumpKind {
    Resets,
    Finite,
    Hull,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JumpsDoc {
    pub kind: JumpKind,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub resets: Vec<ResetDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub matrices: Vec<Rows>,
}

/// One expected value checked by `regress`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Check {
    /// `dwell`, `flee`, `dwell.<mode>`, `flee.<mode>`, `lmi-dwell`,
    /// `spectral-radius` or `mixed-rate`.
    pub quantity: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected: Option<f64>,
    /// Closed window instead of `expected ± tolerance`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<(f64, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub template: Option<String>,
    /// Search range for `lmi-dwell`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range: Option<(f64, f64)>,
    /// Cycle for `spectral-radius`: the product of `R e^{A t}` along it.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub cycle: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub period: Option<f64>,
}

#[derive(Debug)]
pub enum DocumentError {
    Io(String),
    Parse(String),
    Invalid(Vec<String>),
}

impl fmt::Display for DocumentError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DocumentError::Io(m) => write!(f, "cannot read input: {m}"),
            DocumentError::Parse(m) => write!(f, "cannot parse input: {m}"),
            DocumentError::Invalid(diags) => {
                writeln!(f, "input is not a valid system:")?;
                for d in diags {
                    writeln!(f, "  {d}")?;
                }
                Ok(())
            }
        }
    }
}

impl std::error::Error for DocumentError {}

fn invalid(msg: impl Into<String>) -> DocumentError {
    DocumentError::Invalid(vec![msg.into()])
}

pub fn matrix(rows: &Rows, what: &str) -> Result<RealMatrix, DocumentError> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if n == 0 || m == 0 || rows.iter().any(|r| r.len() != m) {
        return Err(invalid(format!("{what}: rows must be non-empty and of equal length")));
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(invalid(format!("{what}: entries must be finite")));
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Ok(RealMatrix::from_row_slice(n, m, &flat))
}

pub fn rows(m: &RealMatrix) -> Rows {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

impl SystemDocument {
    pub fn read(path: &Path) -> Result<Self, DocumentError> {
        let text = std::fs::read_to_string(path).map_err(|e| DocumentError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, DocumentError> {
        toml::from_str(text).map_err(|e| DocumentError::Parse(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("documents always serialize")
    }

    pub fn norm_spec(&self) -> Result<NormSpec, DocumentError> {
        match &self.norm {
            None | Some(NormDoc::Spectral) => Ok(NormSpec::Spectral),
            Some(NormDoc::Ellipsoidal { weight }) => {
                NormSpec::ellipsoidal(matrix(weight, "norm weight")?).map_err(|e| invalid(e.to_string()))
            }
        }
    }

    /// Build the system and run structural validation.
    pub fn to_spec(&self) -> Result<SwitchedSystemSpec, DocumentError> {
        let norm = self.norm_spec()?;
        let mut subsystems = Vec::new();
        for m in &self.modes {
            subsystems.push(m.to_subsystem().map_err(|e| invalid(format!("mode {}: {e}", m.id)))?);
        }
        let ids: Vec<ModeId> = self.modes.iter().map(|m| ModeId::from(m.id.as_str())).collect();
        let graph = if self.graph.complete {
            if !self.graph.edges.is_empty() {
                return Err(invalid("graph: give either `complete = true` or an edge list"));
            }
            ModeGraph::complete(ids)
        } else {
            ModeGraph::new(
                ids,
                self.graph.edges.iter().map(|(p, q)| (ModeId::from(p.as_str()), ModeId::from(q.as_str()))),
            )
        };
        let jumps = self.jumps.to_jumps()?;
        let spec = SwitchedSystemSpec::new(subsystems, graph, jumps, norm).map_err(|e| invalid(e.to_string()))?;
        let diags = validate(&spec);
        if !diags.is_empty() {
            return Err(DocumentError::Invalid(diags.iter().map(|d| d.to_string()).collect()));
        }
        Ok(spec)
    }

    /// Describe `spec` as a document. A basis is written out only when it
    /// differs from the computed one; a scalar multiple of the computed
    /// basis becomes `basis_scale`.
    pub fn from_spec(spec: &SwitchedSystemSpec, name: &str) -> Self {
        let modes = spec.subsystems.iter().map(ModeDoc::from_subsystem).collect();
        let complete = ModeGraph::complete(spec.graph.vertices().to_vec());
        let graph = if complete == spec.graph {
            GraphDoc {
                complete: true,
                edges: Vec::new(),
            }
        } else {
            GraphDoc {
                complete: false,
                edges: spec.graph.edges().map(|(p, q)| (p.to_string(), q.to_string())).collect(),
            }
        };
        let jumps = match &spec.jumps {
            Jumps::Resets(r) => JumpsDoc {
                kind: JumpKind::Resets,
                resets: r
                    .iter()
                    .map(|((p, q), m)| ResetDoc {
                        from: p.to_string(),
                        to: q.to_string(),
                        matrix: rows(m),
                    })
                    .collect(),
                matrices: Vec::new(),
            },
            Jumps::Impulses(set) => JumpsDoc {
                kind: match set.kind {
                    ImpulseKind::Finite => JumpKind::Finite,
                    ImpulseKind::ConvexHull => JumpKind::Hull,
                },
                resets: Vec::new(),
                matrices: set.matrices.iter().map(rows).collect(),
            },
        };
        let norm = spec.norm.weight().map(|w| NormDoc::Ellipsoidal { weight: rows(w) });
        SystemDocument {
            name: name.to_string(),
            description: None,
            norm,
            modes,
            graph,
            jumps,
            checks: Vec::new(),
        }
    }
}

impl ModeDoc {
    fn to_subsystem(&self) -> dwellflee::Result<SubsystemSpec> {
        let a = matrix(&self.a, "a").map_err(|e| dwellflee::Error::InvalidArgument(e.to_string()))?;
        let mut sub = match (&self.basis, &self.basis_imag) {
            (None, None) => match self.margin {
                Some(m) => SubsystemSpec::with_margin(self.id.as_str(), a, Some(m))?,
                None => SubsystemSpec::new(self.id.as_str(), a)?,
            },
            (Some(re), im) => {
                let re = matrix(re, "basis").map_err(|e| dwellflee::Error::InvalidArgument(e.to_string()))?;
                let im = match im {
                    Some(im) => matrix(im, "basis_imag").map_err(|e| dwellflee::Error::InvalidArgument(e.to_string()))?,
                    None => RealMatrix::zeros(re.nrows(), re.ncols()),
                };
                if im.shape() != re.shape() {
                    return Err(dwellflee::Error::DimensionMismatch("basis and basis_imag differ in shape".into()));
                }
                let basis = ComplexMatrix::from_fn(re.nrows(), re.ncols(), |i, j| Complex64::new(re[(i, j)], im[(i, j)]));
                SubsystemSpec::with_basis(self.id.as_str(), a, basis)?
            }
            (None, Some(_)) => {
                return Err(dwellflee::Error::InvalidArgument("basis_imag given without basis".into()));
            }
        };
        if let Some(s) = self.basis_scale {
            if !(s > 0.0 && s.is_finite()) {
                return Err(dwellflee::Error::InvalidArgument(format!("basis_scale must be positive, got {s}")));
            }
            sub.scale_basis(s);
        }
        Ok(sub)
    }

    fn from_subsystem(s: &SubsystemSpec) -> Self {
        let mut doc = ModeDoc {
            id: s.id.to_string(),
            a: rows(&s.a),
            basis: None,
            basis_imag: None,
            basis_scale: None,
            margin: None,
        };
        let computed = eigendecompose(&s.a).ok();
        match computed.as_ref().and_then(|c| basis_multiple(&c.basis, s.basis())) {
            Some(scale) if c_eq(computed.as_ref(), s, scale) => {
                if scale != 1.0 {
                    doc.basis_scale = Some(scale);
                }
                if s.margin != computed.as_ref().and_then(default_margin) {
                    doc.margin = s.margin;
                }
            }
            _ => {
                let b = s.basis();
                doc.basis = Some(rows(&b.map(|z| z.re)));
                if b.iter().any(|z| z.im != 0.0) {
                    doc.basis_imag = Some(rows(&b.map(|z| z.im)));
                }
            }
        }
        doc
    }
}

// The computed eigenstructure, scaled, reproduces the stored one exactly.
fn c_eq(computed: Option<&dwellflee::numlin::EigenStructure>, s: &SubsystemSpec, scale: f64) -> bool {
    computed.is_some_and(|c| c.scaled(scale) == s.eig)
}

/// `s` with `target == s · base` exactly, trying the entrywise ratio of
/// the largest entry and its neighbours.
fn basis_multiple(base: &ComplexMatrix, target: &ComplexMatrix) -> Option<f64> {
    if base.shape() != target.shape() {
        return None;
    }
    let (idx, _) = base.iter().enumerate().max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))?;
    let b = base.iter().nth(idx)?;
    let t = target.iter().nth(idx)?;
    let r = if b.re.abs() >= b.im.abs() { t.re / b.re } else { t.im / b.im };
    if !(r > 0.0 && r.is_finite()) {
        return None;
    }
    let up = f64::from_bits(r.to_bits() + 1);
    let down = f64::from_bits(r.to_bits() - 1);
    [r, up, down].into_iter().find(|s| {
        let scaled = base * Complex64::new(*s, 0.0);
        scaled == *target
    })
}

/// Parse `--norm spectral` or `--norm ellipsoidal:<path>`, the path naming
/// a TOML file with a `weight` matrix.
pub fn parse_norm_override(arg: &str) -> Result<NormSpec, DocumentError> {
    if arg == "spectral" {
        return Ok(NormSpec::Spectral);
    }
    let Some(path) = arg.strip_prefix("ellipsoidal:") else {
        return Err(invalid(format!("unknown norm `{arg}`; use spectral or ellipsoidal:<path>")));
    };
    #[derive(Deserialize)]
    #[serde(deny_unknown_fields)]
    struct WeightFile {
        weight: Rows,
    }
    let text = std::fs::read_to_string(path).map_err(|e| DocumentError::Io(format!("{path}: {e}")))?;
    let w: WeightFile = toml::from_str(&text).map_err(|e| DocumentError::Parse(e.to_string()))?;
    NormSpec::ellipsoidal(matrix(&w.weight, "norm weight")?).map_err(|e| invalid(e.to_string()))
}

pub fn edge_name(e: &Edge) -> String {
    format!("{}->{}", e.0, e.1)
}

impl JumpsDoc {
    fn to_jumps(&self) -> Result<Jumps, DocumentError> {
        match self.kind {
            JumpKind::Resets => {
                if !self.matrices.is_empty() {
                    return Err(invalid("jumps: `matrices` is for finite or hull impulse sets"));
                }
                let mut out = BTreeMap::new();
                for r in &self.resets {
                    let key = (ModeId::from(r.from.as_str()), ModeId::from(r.to.as_str()));
                    let m = matrix(&r.matrix, &format!("reset {}->{}", r.from, r.to))?;
                    if out.insert(key, m).is_some() {
                        return Err(invalid(format!("reset {}->{} given twice", r.from, r.to)));
                    }
                }
                Ok(Jumps::Resets(out))
            }
            JumpKind::Finite | JumpKind::Hull => {
                if !self.resets.is_empty() {
                    return Err(invalid("jumps: `resets` is only for kind = \"resets\""));
                }
                let ms = self
                    .matrices
                    .iter()
                    .enumerate()
                    .map(|(i, m)| matrix(m, &format!("impulse M{}", i + 1)))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(Jumps::Impulses(if self.kind == JumpKind::Finite {
                    ImpulseSet::finite(ms)
                } else {
                    ImpulseSet::hull(ms)
                }))
            }
        }
    }
}
