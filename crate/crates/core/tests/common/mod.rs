#![allow(dead_code)]

use std::collections::BTreeMap;

use dwellflee::model::{Edge, ImpulseSet, Jumps, ModeGraph, ModeId, SubsystemSpec, SwitchedSystemSpec};
use dwellflee::numlin::{real_matrix, to_complex, NormSpec, RealMatrix};

pub fn a_spiral() -> RealMatrix {
    real_matrix(&[&[-0.1, 2.0], &[-1.0, -0.1]])
}

pub fn a_spiral_t() -> RealMatrix {
    real_matrix(&[&[-0.1, -1.0], &[2.0, -0.1]])
}

pub fn rotation() -> RealMatrix {
    real_matrix(&[&[0.0, 1.0], &[-1.0, 0.0]])
}

fn resets(pairs: Vec<(&str, &str, RealMatrix)>) -> Jumps {
    Jumps::Resets(pairs.into_iter().map(|(p, q, m)| ((ModeId::from(p), ModeId::from(q)), m)).collect())
}

fn ids(names: &[&str]) -> Vec<ModeId> {
    names.iter().map(|s| ModeId::from(*s)).collect()
}

/// Two copies of a stable spiral with rotation resets.
pub fn rotating_pair() -> SwitchedSystemSpec {
    let subs = vec![
        SubsystemSpec::new("1", a_spiral()).unwrap(),
        SubsystemSpec::new("2", a_spiral()).unwrap(),
    ];
    SwitchedSystemSpec::new(
        subs,
        ModeGraph::complete(ids(&["1", "2"])),
        resets(vec![("1", "2", rotation()), ("2", "1", rotation())]),
        NormSpec::Spectral,
    )
    .unwrap()
}

/// Two stable spirals with non-orthogonal resets.
pub fn spiral_resets() -> SwitchedSystemSpec {
    let subs = vec![
        SubsystemSpec::new("2", a_spiral()).unwrap(),
        SubsystemSpec::new("3", a_spiral_t()).unwrap(),
    ];
    SwitchedSystemSpec::new(
        subs,
        ModeGraph::complete(ids(&["2", "3"])),
        resets(vec![
            ("2", "3", real_matrix(&[&[2.0, 3.0], &[1.0, 2.0]])),
            ("3", "2", real_matrix(&[&[1.0, -2.0], &[-2.0, 5.0]])),
        ]),
        NormSpec::Spectral,
    )
    .unwrap()
}

pub fn a4() -> RealMatrix {
    real_matrix(&[&[-5.0, -3.0, -4.0], &[4.0, 2.0, 4.0], &[0.0, 0.0, -1.0]])
}

pub fn a5() -> RealMatrix {
    real_matrix(&[&[0.0, 2.0, 1.0], &[-2.0, 1.0, 0.0], &[1.0, -2.0, 0.0]])
}

pub fn p4() -> RealMatrix {
    let s2 = 2f64.sqrt();
    let s21 = 21f64.sqrt();
    real_matrix(&[
        &[-1.0 / s2, 1.0 / s2, 2.0 / s21],
        &[1.0 / s2, 0.0, -4.0 / s21],
        &[0.0, -1.0 / s2, 1.0 / s21],
    ])
}

pub fn mixed_resets() -> Jumps {
    resets(vec![
        (
            "4",
            "5",
            real_matrix(&[&[3.0, 5.0, -2.0], &[-6.0, -4.0, 1.0], &[3.0, 1.0, 2.0]]),
        ),
        (
            "5",
            "4",
            real_matrix(&[&[-7.0, 3.0, 0.0], &[0.0, -7.0, -3.0], &[-5.0, 0.0, 4.0]]),
        ),
    ])
}

/// Stable/unstable pair with unit-column bases (no rescaling).
pub fn mixed_pair_unscaled() -> SwitchedSystemSpec {
    let subs = vec![
        SubsystemSpec::with_basis("4", a4(), to_complex(&p4())).unwrap(),
        SubsystemSpec::new("5", a5()).unwrap(),
    ];
    SwitchedSystemSpec::new(subs, ModeGraph::complete(ids(&["4", "5"])), mixed_resets(), NormSpec::Spectral).unwrap()
}

/// As [`mixed_pair_unscaled`] with the unstable basis scaled by 1e-3.
pub fn mixed_pair() -> SwitchedSystemSpec {
    let mut spec = mixed_pair_unscaled();
    spec.subsystem_mut(&ModeId::from("5")).unwrap().scale_basis(1e-3);
    let norm = spec.norm.clone();
    spec.subsystem_mut(&ModeId::from("5")).unwrap().refresh_decay(&norm).unwrap();
    spec
}

pub fn a6() -> RealMatrix {
    real_matrix(&[&[-2.0, 1.0, 0.0], &[1.0, -2.0, 0.0], &[0.0, 0.0, -3.0]])
}

pub fn a7() -> RealMatrix {
    real_matrix(&[&[-1.0, 1.0, 1.0], &[0.0, -2.0, 2.0], &[0.0, 0.0, -3.0]])
}

fn scope_resets() -> Jumps {
    resets(vec![
        (
            "6",
            "7",
            real_matrix(&[&[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0], &[1.0, 0.0, 0.0]]),
        ),
        (
            "7",
            "6",
            real_matrix(&[&[-1.0, 0.0, 1.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, -1.0]]),
        ),
    ])
}

pub fn scope() -> SwitchedSystemSpec {
    let s2 = 2f64.sqrt();
    let s21 = 21f64.sqrt();
    let p6 = real_matrix(&[&[0.0, -1.0 / s2, 1.0 / s2], &[0.0, 1.0 / s2, 1.0 / s2], &[1.0, 0.0, 0.0]]);
    let p7 = real_matrix(&[&[1.0 / s21, -1.0 / s2, 1.0], &[-4.0 / s21, 1.0 / s2, 0.0], &[2.0 / s21, 0.0, 0.0]]);
    let subs = vec![
        SubsystemSpec::with_basis("6", a6(), to_complex(&p6)).unwrap(),
        SubsystemSpec::with_basis("7", a7(), to_complex(&p7)).unwrap(),
    ];
    SwitchedSystemSpec::new(subs, ModeGraph::complete(ids(&["6", "7"])), scope_resets(), NormSpec::Spectral).unwrap()
}

pub fn scope_v(norm: NormSpec) -> SwitchedSystemSpec {
    let v6 = real_matrix(&[&[0.0, -1.0, 1.0], &[0.0, 1.0, 1.0], &[1.0, 0.0, 0.0]]);
    let v7 = real_matrix(&[&[1.0, -1.0, 1.0], &[-4.0, 1.0, 0.0], &[2.0, 0.0, 0.0]]);
    let subs = vec![
        SubsystemSpec::with_basis("6", a6(), to_complex(&v6)).unwrap(),
        SubsystemSpec::with_basis("7", a7(), to_complex(&v7)).unwrap(),
    ];
    SwitchedSystemSpec::new(subs, ModeGraph::complete(ids(&["6", "7"])), scope_resets(), norm).unwrap()
}

pub fn scope_weight() -> NormSpec {
    NormSpec::ellipsoidal(RealMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![2.0, 0.5, 1.0]))).unwrap()
}

pub fn impulse_vertices() -> Vec<RealMatrix> {
    vec![
        real_matrix(&[&[-2.0, 1.0, 0.0], &[0.0, 2.0, -1.0], &[3.0, 0.0, 0.0]]),
        real_matrix(&[&[-3.0, 2.0, -1.0], &[1.0, 4.0, 2.0], &[-2.0, -1.0, 1.0]]),
        real_matrix(&[&[1.0, 1.0, -1.0], &[2.0, 0.0, 2.0], &[1.0, 0.0, 3.0]]),
    ]
}

pub fn hull_modes() -> Vec<SubsystemSpec> {
    vec![
        SubsystemSpec::new("8", real_matrix(&[&[-5.0, 3.0, -3.0], &[0.0, -2.0, 2.0], &[0.0, 0.0, -1.0]])).unwrap(),
        SubsystemSpec::new("9", real_matrix(&[&[-2.0, 2.0, -1.0], &[4.0, 3.0, -4.0], &[7.0, 10.0, -10.0]])).unwrap(),
        SubsystemSpec::new("10", real_matrix(&[&[-1.0, -2.0, -3.0], &[1.0, 0.0, 1.0], &[0.0, -1.0, -3.0]])).unwrap(),
    ]
}

/// Three stable modes with impulses from a hull of three matrices.
pub fn hull_impulses() -> SwitchedSystemSpec {
    SwitchedSystemSpec::new(
        hull_modes(),
        ModeGraph::complete(ids(&["8", "9", "10"])),
        Jumps::Impulses(ImpulseSet::hull(impulse_vertices())),
        NormSpec::Spectral,
    )
    .unwrap()
}

pub fn edge(p: &str, q: &str) -> Edge {
    (ModeId::from(p), ModeId::from(q))
}

pub fn mode_map(pairs: &[(&str, f64)]) -> BTreeMap<ModeId, f64> {
    pairs.iter().map(|(k, v)| (ModeId::from(*k), *v)).collect()
}
