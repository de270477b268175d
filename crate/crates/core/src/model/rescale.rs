use std::collections::{BTreeMap, BTreeSet};

use super::{unstable_subgraph_acyclic, Jumps, ModeId, StabilityClass, SwitchedSystemSpec};
use crate::error::{Error, Result};
use crate::numlin::{operator_norm, to_complex};

/// Default shrink factor applied below `epsilon`.
pub const DEFAULT_XI: f64 = 0.5;

/// Outcome of [`rescale_bases`].
#[derive(Debug, Clone, PartialEq)]
pub struct Rescaling {
    /// `None` when the bases already met the bound.
    pub theta: Option<f64>,
    /// Factor applied to each mode's basis.
    pub factors: BTreeMap<ModeId, f64>,
    /// Vertex order used for the exponents.
    pub order: Vec<ModeId>,
    pub rho_before: f64,
    pub rho_after: f64,
}

/// `max c_p ‖P_q⁻¹ M P_p‖` over edges leaving unstable modes and the
/// matrices `set` allows on each edge. Zero when there are no such edges.
pub fn unstable_edge_rho(spec: &SwitchedSystemSpec, set: &Jumps) -> Result<f64> {
    let mut rho: f64 = 0.0;
    for edge in spec.unstable_edges() {
        let sp = spec.subsystem(&edge.0)?;
        let sq = spec.subsystem(&edge.1)?;
        let q_inv = sq.eig.basis_inverse()?;
        for m in set.candidates(&edge) {
            let k = &q_inv * to_complex(m) * sp.basis();
            rho = rho.max(sp.c * operator_norm(&k, &spec.norm));
        }
    }
    Ok(rho)
}

/// Rescale Jordan bases so every edge leaving an unstable mode satisfies
/// `c_p ‖P_q⁻¹ M P_p‖ < epsilon` for all `M` in `set`.
///
/// Vertices are ordered as: sources of the unstable subgraph (by id), the
/// remaining unstable modes in topological order, then stable modes by id.
/// With `k` sources, the `j`-th vertex (1-based) past the sources has its
/// basis multiplied by `θ^(j-k)`, `θ = ρ / (ε ξ)`.
pub fn rescale_bases(
    spec: &SwitchedSystemSpec,
    set: &Jumps,
    epsilon: f64,
    xi: f64,
) -> Result<(SwitchedSystemSpec, Rescaling)> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::InvalidArgument(format!("epsilon must be positive, got {epsilon}")));
    }
    if !(xi > 0.0 && xi < 1.0) {
        return Err(Error::InvalidArgument(format!("xi must lie in (0, 1), got {xi}")));
    }
    if let (false, cycle) = unstable_subgraph_acyclic(spec) {
        return Err(Error::HypothesisViolated(cycle.unwrap_or_default()));
    }
    let rho_before = unstable_edge_rho(spec, set)?;
    let order = scaling_order(spec);
    if rho_before < epsilon {
        let factors = order.iter().map(|m| (m.clone(), 1.0)).collect();
        return Ok((
            spec.clone(),
            Rescaling {
                theta: None,
                factors,
                order,
                rho_before,
                rho_after: rho_before,
            },
        ));
    }

    let theta = rho_before / (epsilon * xi);
    let sources = order
        .iter()
        .take_while(|m| is_unstable_source(spec, m))
        .count();
    let mut factors = BTreeMap::new();
    let mut out = spec.clone();
    for (idx, m) in order.iter().enumerate() {
        let j = idx + 1;
        let f = if j <= sources {
            1.0
        } else {
            theta.powi((j - sources) as i32)
        };
        out.subsystem_mut(m)?.scale_basis(f);
        factors.insert(m.clone(), f);
    }
    let rho_after = unstable_edge_rho(&out, set)?;
    assert!(
        rho_after < epsilon,
        "rescaled bound {rho_after} is not below epsilon {epsilon}"
    );
    Ok((
        out,
        Rescaling {
            theta: Some(theta),
            factors,
            order,
            rho_before,
            rho_after,
        },
    ))
}

fn is_unstable_source(spec: &SwitchedSystemSpec, m: &ModeId) -> bool {
    spec.class_of(m).ok() == Some(StabilityClass::Unstable)
        && !spec
            .unstable_edges()
            .iter()
            .any(|(_, q)| q == m)
}

fn scaling_order(spec: &SwitchedSystemSpec) -> Vec<ModeId> {
    let mut unstable: BTreeSet<ModeId> = BTreeSet::new();
    let mut stable: BTreeSet<ModeId> = BTreeSet::new();
    for s in &spec.subsystems {
        match s.class {
            StabilityClass::Unstable => unstable.insert(s.id.clone()),
            _ => stable.insert(s.id.clone()),
        };
    }
    let edges: Vec<_> = spec
        .unstable_edges()
        .into_iter()
        .filter(|(_, q)| unstable.contains(q))
        .collect();
    let mut indegree: BTreeMap<&ModeId, usize> = unstable.iter().map(|m| (m, 0)).collect();
    for (_, q) in &edges {
        *indegree.get_mut(q).unwrap() += 1;
    }
    let mut order: Vec<ModeId> = indegree
        .iter()
        .filter(|(_, d)| **d == 0)
        .map(|(m, _)| (*m).clone())
        .collect();
    let mut ready: BTreeSet<ModeId> = BTreeSet::new();
    let release = |m: &ModeId, indegree: &mut BTreeMap<&ModeId, usize>, ready: &mut BTreeSet<ModeId>| {
        for (p, q) in &edges {
            if p == m {
                let d = indegree.get_mut(q).unwrap();
                *d -= 1;
                if *d == 0 {
                    ready.insert(q.clone());
                }
            }
        }
    };
    for m in order.clone() {
        release(&m, &mut indegree, &mut ready);
    }
    while let Some(m) = ready.pop_first() {
        release(&m, &mut indegree, &mut ready);
        order.push(m);
    }
    order.extend(stable);
    order
}
