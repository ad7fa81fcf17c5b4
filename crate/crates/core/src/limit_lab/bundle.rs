//! Limit fields of the two-phase problem for large boundary data.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::energy::Weight;
use crate::expr::Expr;
use crate::geometry::{extract_submesh, BoundaryTag, Mesh2D, NodeMap, Region, RegionMap};
use crate::solver::{solve_limit_a_inner, solve_limit_b_pei, solve_limit_pec, DiscreteField, SolveSettings};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    QLessP,
    PLessQ,
}

impl Regime {
    pub fn of(p: f64, q: f64) -> Result<Self> {
        if p == q {
            return Err(Error::Unsupported(
                "p = q has no two-phase limit here; the equal-exponent case is treated elsewhere".into(),
            ));
        }
        Ok(if q < p { Regime::QLessP } else { Regime::PLessQ })
    }
}

/// Limit solutions for large boundary data.
#[derive(Clone, Debug, PartialEq)]
pub struct LimitBundle {
    pub regime: Regime,
    /// Insulated-interface solution on the B submesh (`QLessP`).
    pub v_b: Option<DiscreteField>,
    /// Cascade solution on the A submesh (`QLessP`).
    pub v_a: Option<DiscreteField>,
    /// Perfect-conductor solution on the whole mesh, always computed since
    /// it enters the a priori bounds in both regimes.
    pub w: DiscreteField,
    /// The limit on the whole mesh: `v_b` glued to `v_a`, or `w`.
    pub limit: DiscreteField,
    /// `∫_B β|∇·|^p` of the limit.
    pub b_energy: f64,
    pub b_nodes: Option<NodeMap>,
    pub a_nodes: Option<NodeMap>,
    pub converged: bool,
}

/// `∫_B β|∇v|^p` with `β` at centroids.
pub fn weighted_b_energy(mesh: &Mesh2D, regions: &RegionMap, beta: &Weight, p: f64, v: &[f64]) -> f64 {
    (0..mesh.n_triangles())
        .filter(|&t| regions.region(t) == Region::B)
        .map(|t| {
            let g = mesh.gradient(t, v);
            mesh.area(t) * beta.at(mesh.centroid(t)) * g[0].hypot(g[1]).powf(p)
        })
        .sum()
}

/// Limit fields for exponents `p` (B) and `q` (A): the insulated B problem
/// followed by the A problem with its trace when `q < p`, the perfect
/// conductor problem when `p < q`.
#[allow(clippy::too_many_arguments)]
pub fn compute_limit_bundle(
    mesh: &Mesh2D,
    regions: &RegionMap,
    beta: &Weight,
    alpha: &Weight,
    p: f64,
    q: f64,
    f: &Expr,
    settings: &SolveSettings,
) -> Result<LimitBundle> {
    let regime = Regime::of(p, q)?;
    let data = |x: crate::Point| f.eval_at(x);
    let pec = solve_limit_pec(mesh, regions, beta, p, data, settings)?;
    let mut converged = pec.converged;
    let w = pec.field;
    if regime == Regime::PLessQ {
        let b_energy = weighted_b_energy(mesh, regions, beta, p, &w.values);
        return Ok(LimitBundle {
            regime,
            v_b: None,
            v_a: None,
            limit: w.clone(),
            w,
            b_energy,
            b_nodes: None,
            a_nodes: None,
            converged,
        });
    }
    let (mesh_b, b_nodes) = extract_submesh(mesh, regions, Region::B)?;
    let (mesh_a, a_nodes) = extract_submesh(mesh, regions, Region::A)?;
    let vb = solve_limit_b_pei(&mesh_b, beta, p, data, settings)?;
    let trace: BTreeMap<usize, f64> = mesh_a
        .boundary_nodes(BoundaryTag::Interface)?
        .into_iter()
        .map(|i| {
            let parent = a_nodes.parent_of_child[i];
            let child = b_nodes.child_of_parent[parent].expect("interface node lies in B");
            (i, vb.field.values[child])
        })
        .collect();
    let va = solve_limit_a_inner(&mesh_a, alpha, q, &trace, settings)?;
    converged &= vb.converged && va.converged;
    let limit: Vec<f64> = (0..mesh.n_nodes())
        .map(|i| match (b_nodes.child_of_parent[i], a_nodes.child_of_parent[i]) {
            (Some(c), _) => vb.field.values[c],
            (None, Some(c)) => va.field.values[c],
            (None, None) => 0.0,
        })
        .collect();
    let b_energy = weighted_b_energy(mesh, regions, beta, p, &limit);
    Ok(LimitBundle {
        regime,
        v_b: Some(vb.field),
        v_a: Some(va.field),
        w,
        limit: DiscreteField { values: limit },
        b_energy,
        b_nodes: Some(b_nodes),
        a_nodes: Some(a_nodes),
        converged,
    })
}
