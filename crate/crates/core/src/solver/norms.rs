//! Discrete distances and boundary traces.

use serde::{Deserialize, Serialize};

use super::field::DiscreteField;
use crate::geometry::{BoundaryTag, Mesh2D, Region, RegionMap};
use crate::{Error, Point, Result};

/// Triangles over which a distance is taken.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionSubset {
    #[default]
    All,
    A,
    B,
}

impl RegionSubset {
    pub fn contains(self, region: Region) -> bool {
        match self {
            RegionSubset::All => true,
            RegionSubset::A => region == Region::A,
            RegionSubset::B => region == Region::B,
        }
    }
}

/// Discrete `W^{1,p}` distance split into value and gradient parts.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WpDistance {
    pub l_p_part: f64,
    pub grad_part: f64,
    pub total: f64,
}

impl WpDistance {
    fn from_sums(value_sum: f64, grad_sum: f64, p: f64) -> Self {
        let l_p_part = value_sum.powf(1.0 / p);
        let grad_part = grad_sum.powf(1.0 / p);
        Self {
            l_p_part,
            grad_part,
            total: l_p_part + grad_part,
        }
    }
}

fn check_p(p: f64) -> Result<()> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::Parameter(format!("norm exponent must be >= 1, got {p}")));
    }
    Ok(())
}

fn check_regions(mesh: &Mesh2D, regions: &RegionMap) -> Result<()> {
    if regions.element_region.len() != mesh.n_triangles() {
        return Err(Error::Shape(format!(
            "{} region labels for {} triangles",
            regions.element_region.len(),
            mesh.n_triangles()
        )));
    }
    Ok(())
}

/// `(Σ area·|mean(f₁−f₂)|^p)^{1/p} + (Σ area·|∇(f₁−f₂)|^p)^{1/p}` over the
/// selected triangles.
pub fn wp_distance(
    mesh: &Mesh2D,
    regions: &RegionMap,
    f1: &DiscreteField,
    f2: &DiscreteField,
    p: f64,
    subset: RegionSubset,
) -> Result<WpDistance> {
    check_p(p)?;
    check_regions(mesh, regions)?;
    f1.check_len(mesh)?;
    f2.check_len(mesh)?;
    let diff: Vec<f64> = f1.values.iter().zip(&f2.values).map(|(a, b)| a - b).collect();
    let (mut vs, mut gs) = (0.0, 0.0);
    for (t, tri) in mesh.triangles.iter().enumerate() {
        if !subset.contains(regions.region(t)) {
            continue;
        }
        let area = mesh.area(t);
        let mean = tri.iter().map(|&i| diff[i]).sum::<f64>() / 3.0;
        let g = mesh.gradient(t, &diff);
        vs += area * mean.abs().powf(p);
        gs += area * g[0].hypot(g[1]).powf(p);
    }
    Ok(WpDistance::from_sums(vs, gs, p))
}

/// Distance from a discrete field to an exact function with known gradient,
/// both sampled at triangle centroids.
pub fn wp_distance_to_exact(
    mesh: &Mesh2D,
    regions: &RegionMap,
    field: &DiscreteField,
    exact: impl Fn(Point) -> f64,
    exact_grad: impl Fn(Point) -> [f64; 2],
    p: f64,
    subset: RegionSubset,
) -> Result<WpDistance> {
    check_p(p)?;
    check_regions(mesh, regions)?;
    field.check_len(mesh)?;
    let (mut vs, mut gs) = (0.0, 0.0);
    for (t, tri) in mesh.triangles.iter().enumerate() {
        if !subset.contains(regions.region(t)) {
            continue;
        }
        let area = mesh.area(t);
        let c = mesh.centroid(t);
        let mean = tri.iter().map(|&i| field.values[i]).sum::<f64>() / 3.0;
        let g = mesh.gradient(t, &field.values);
        let ge = exact_grad(c);
        vs += area * (mean - exact(c)).abs().powf(p);
        gs += area * (g[0] - ge[0]).hypot(g[1] - ge[1]).powf(p);
    }
    Ok(WpDistance::from_sums(vs, gs, p))
}

/// Relative nodal `ℓ²` error `‖v − u‖/‖u‖` against an exact function.
pub fn relative_nodal_l2(mesh: &Mesh2D, field: &DiscreteField, exact: impl Fn(Point) -> f64) -> Result<f64> {
    field.check_len(mesh)?;
    let (mut num, mut den) = (0.0, 0.0);
    for (x, v) in mesh.nodes.iter().zip(&field.values) {
        let u = exact(*x);
        num += (v - u) * (v - u);
        den += u * u;
    }
    if den == 0.0 {
        return Ok(num.sqrt());
    }
    Ok((num / den).sqrt())
}

/// Nodal values along a tagged boundary, loop by loop.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub nodes: Vec<usize>,
    /// Arc length from the first node of the node's loop.
    pub arclength: Vec<f64>,
    /// Index of the loop each node belongs to.
    pub loop_index: Vec<usize>,
    pub values: Vec<f64>,
    /// Half the length of the boundary edges at each node.
    pub weights: Vec<f64>,
}

impl Trace {
    /// `(Σ w_i |v_i|^q)^{1/q}` with lumped arc-length weights.
    pub fn lq_norm(&self, q: f64) -> f64 {
        self.weights
            .iter()
            .zip(&self.values)
            .map(|(w, v)| w * v.abs().powf(q))
            .sum::<f64>()
            .powf(1.0 / q)
    }

    /// Lumped `L^q` distance to another trace on the same nodes.
    pub fn lq_distance(&self, other: &Trace, q: f64) -> Result<f64> {
        if self.nodes != other.nodes {
            return Err(Error::Shape("traces live on different boundary nodes".into()));
        }
        Ok(self
            .weights
            .iter()
            .zip(self.values.iter().zip(&other.values))
            .map(|(w, (a, b))| w * (a - b).abs().powf(q))
            .sum::<f64>()
            .powf(1.0 / q))
    }
}

pub fn trace_on(mesh: &Mesh2D, tag: BoundaryTag, field: &DiscreteField) -> Result<Trace> {
    field.check_len(mesh)?;
    let loops = mesh.boundary_loops(tag)?;
    let weights = mesh.boundary_weights(tag);
    let mut out = Trace {
        nodes: Vec::new(),
        arclength: Vec::new(),
        loop_index: Vec::new(),
        values: Vec::new(),
        weights: Vec::new(),
    };
    for (k, lp) in loops.iter().enumerate() {
        let mut s = 0.0;
        for (j, &i) in lp.iter().enumerate() {
            if j > 0 {
                let (a, b) = (mesh.nodes[lp[j - 1]], mesh.nodes[i]);
                s += (b[0] - a[0]).hypot(b[1] - a[1]);
            }
            out.nodes.push(i);
            out.arclength.push(s);
            out.loop_index.push(k);
            out.values.push(field.values[i]);
            out.weights.push(weights[&i]);
        }
    }
    Ok(out)
}
