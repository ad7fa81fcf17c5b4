//! Boundary conditions and the reduction of nodal values to free unknowns.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::geometry::{BoundaryTag, Mesh2D, Region, RegionMap};
use crate::{Error, Point, Result};

/// Treatment of the A phase and its boundary.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InnerMode {
    /// Full two-phase problem, interface nodes free.
    #[default]
    None,
    /// Insulated interface: the mesh carries no A triangles and the
    /// interface is left free (do-nothing condition).
    Natural,
    /// One unknown per A component, shared by all of its nodes.
    TiedConstant,
    /// Dirichlet values on every `inner` or `interface` node.
    Prescribed,
}

/// Relative size of the boundary mean of `f` above which zero-average data
/// is rejected.
pub const ZERO_MEAN_TOL: f64 = 1e-8;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct BoundaryCondition {
    /// Dirichlet values on `outer` nodes.
    pub outer: BTreeMap<usize, f64>,
    pub inner_mode: InnerMode,
    /// Dirichlet values on interface nodes, used with `Prescribed`.
    pub inner: BTreeMap<usize, f64>,
    /// Require `outer` to average to zero against arc length.
    pub zero_mean: bool,
}

impl BoundaryCondition {
    /// Samples `f` on every node of the `outer` boundary, if there is one.
    pub fn dirichlet(mesh: &Mesh2D, f: impl Fn(Point) -> f64, inner_mode: InnerMode) -> Result<Self> {
        let mut outer = BTreeMap::new();
        if mesh.has_tag(BoundaryTag::Outer) {
            for i in mesh.boundary_nodes(BoundaryTag::Outer)? {
                let value = f(mesh.nodes[i]);
                if !value.is_finite() {
                    return Err(Error::Domain(format!("boundary data is not finite at node {i}")));
                }
                outer.insert(i, value);
            }
        }
        Ok(Self {
            outer,
            inner_mode,
            inner: BTreeMap::new(),
            zero_mean: false,
        })
    }

    pub fn with_zero_mean(mut self, on: bool) -> Self {
        self.zero_mean = on;
        self
    }

    /// Prescribes interface values and switches to `Prescribed`.
    pub fn with_inner_values(mut self, values: BTreeMap<usize, f64>) -> Self {
        self.inner = values;
        self.inner_mode = InnerMode::Prescribed;
        self
    }
}

/// Arc-length mean of `values` over the nodes tagged `tag`, and the largest
/// magnitude among them.
pub fn boundary_mean(mesh: &Mesh2D, tag: BoundaryTag, values: &BTreeMap<usize, f64>) -> (f64, f64) {
    let weights = mesh.boundary_weights(tag);
    let mut nodes: Vec<_> = weights.iter().collect();
    nodes.sort_by_key(|(i, _)| **i);
    let (mut num, mut den, mut max) = (0.0, 0.0, 0.0f64);
    for (i, w) in nodes {
        let v = values.get(i).copied().unwrap_or(0.0);
        num += w * v;
        den += w;
        max = max.max(v.abs());
    }
    (if den > 0.0 { num / den } else { 0.0 }, max)
}

/// Rejects data whose boundary mean exceeds `ZERO_MEAN_TOL·‖f‖∞`.
pub fn check_zero_mean(mesh: &Mesh2D, values: &BTreeMap<usize, f64>) -> Result<()> {
    let (mean, max) = boundary_mean(mesh, BoundaryTag::Outer, values);
    if mean.abs() > ZERO_MEAN_TOL * max {
        return Err(Error::Parameter(format!(
            "boundary data must have zero mean on the outer boundary, mean is {mean:e} (max |f| = {max:e})"
        )));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Dof {
    Fixed(f64),
    Free(usize),
}

/// Map from nodes to free unknowns; tied nodes share one unknown.
#[derive(Clone, Debug)]
pub struct DofMap {
    pub node_dof: Vec<Dof>,
    pub n_free: usize,
    /// Representative position of each unknown, used for ordering.
    pub coords: Vec<Point>,
    /// Unknown of each A component under `TiedConstant`.
    pub component_dof: Vec<usize>,
}

impl DofMap {
    pub fn new(mesh: &Mesh2D, regions: &RegionMap, bc: &BoundaryCondition) -> Result<Self> {
        let n = mesh.n_nodes();
        let mut node_dof: Vec<Option<Dof>> = vec![None; n];
        let mut used = vec![false; n];
        for tri in &mesh.triangles {
            for &i in tri {
                used[i] = true;
            }
        }
        if mesh.has_tag(BoundaryTag::Outer) {
            for i in mesh.boundary_nodes(BoundaryTag::Outer)? {
                let v = bc
                    .outer
                    .get(&i)
                    .ok_or_else(|| Error::Config(format!("no boundary value for outer node {i}")))?;
                node_dof[i] = Some(Dof::Fixed(*v));
            }
        }
        for (&i, &v) in &bc.outer {
            if i >= n {
                return Err(Error::Shape(format!("boundary value for node {i} of {n}")));
            }
            node_dof[i] = Some(Dof::Fixed(v));
        }
        if bc.zero_mean {
            check_zero_mean(mesh, &bc.outer)?;
        }
        let mut coords = Vec::new();
        let mut component_dof = Vec::new();
        match bc.inner_mode {
            InnerMode::None => {}
            InnerMode::Natural => {
                if regions.count(Region::A) > 0 {
                    return Err(Error::Config(
                        "insulated interface needs a mesh without A triangles".into(),
                    ));
                }
            }
            InnerMode::Prescribed => {
                let mut any = false;
                for tag in [BoundaryTag::Inner, BoundaryTag::Interface] {
                    if !mesh.has_tag(tag) {
                        continue;
                    }
                    any = true;
                    for i in mesh.boundary_nodes(tag)? {
                        if matches!(node_dof[i], Some(Dof::Fixed(_))) {
                            continue;
                        }
                        let v = bc
                            .inner
                            .get(&i)
                            .ok_or_else(|| Error::Config(format!("no interface value for node {i}")))?;
                        node_dof[i] = Some(Dof::Fixed(*v));
                    }
                }
                if !any {
                    return Err(Error::Tag("mesh has no interface to prescribe".into()));
                }
            }
            InnerMode::TiedConstant => {
                let mut comp_of_node: Vec<Option<usize>> = vec![None; n];
                for (t, tri) in mesh.triangles.iter().enumerate() {
                    if let Some(c) = regions.component_of_a[t] {
                        for &i in tri {
                            match comp_of_node[i] {
                                Some(d) if d != c => {
                                    return Err(Error::Mesh(format!("A components {d} and {c} touch at node {i}")))
                                }
                                _ => comp_of_node[i] = Some(c),
                            }
                        }
                    }
                }
                let mut sums = vec![([0.0, 0.0], 0usize); regions.n_components];
                for i in 0..n {
                    if let Some(c) = comp_of_node[i] {
                        if matches!(node_dof[i], Some(Dof::Fixed(_))) {
                            return Err(Error::Mesh(format!(
                                "A component {c} reaches the outer boundary at node {i}"
                            )));
                        }
                        node_dof[i] = Some(Dof::Free(c));
                        let s = &mut sums[c];
                        s.0[0] += mesh.nodes[i][0];
                        s.0[1] += mesh.nodes[i][1];
                        s.1 += 1;
                    }
                }
                for (c, (sum, count)) in sums.iter().enumerate() {
                    coords.push([sum[0] / *count as f64, sum[1] / *count as f64]);
                    component_dof.push(c);
                }
            }
        }
        let mut next = coords.len();
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            out.push(match node_dof[i] {
                Some(d) => d,
                None if !used[i] => Dof::Fixed(0.0),
                None => {
                    coords.push(mesh.nodes[i]);
                    next += 1;
                    Dof::Free(next - 1)
                }
            });
        }
        Ok(Self {
            node_dof: out,
            n_free: next,
            coords,
            component_dof,
        })
    }

    /// Nodal values from free unknowns.
    pub fn expand(&self, x: &[f64]) -> Vec<f64> {
        self.node_dof
            .iter()
            .map(|d| match *d {
                Dof::Fixed(v) => v,
                Dof::Free(k) => x[k],
            })
            .collect()
    }

    /// Free unknowns from nodal values; tied unknowns take the mean of their
    /// nodes.
    pub fn restrict(&self, v: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; self.n_free];
        let mut count = vec![0usize; self.n_free];
        for (d, &vi) in self.node_dof.iter().zip(v) {
            if let Dof::Free(k) = *d {
                x[k] += vi;
                count[k] += 1;
            }
        }
        for (xk, c) in x.iter_mut().zip(count) {
            if c > 1 {
                *xk /= c as f64;
            }
        }
        x
    }

    /// Sums nodal contributions into free unknowns.
    pub fn reduce(&self, g: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_free];
        for (d, &gi) in self.node_dof.iter().zip(g) {
            if let Dof::Free(k) = *d {
                out[k] += gi;
            }
        }
        out
    }

    pub fn free(&self, node: usize) -> Option<usize> {
        match self.node_dof[node] {
            Dof::Free(k) => Some(k),
            Dof::Fixed(_) => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_domain, extract_submesh, DomainSpec};

    #[test]
    fn zero_mean_detection() {
        let (mesh, _) = build_domain(&DomainSpec::annulus(10.0, 3)).unwrap();
        let odd = BoundaryCondition::dirichlet(&mesh, |x| x[0], InnerMode::None).unwrap();
        assert!(check_zero_mean(&mesh, &odd.outer).is_ok());
        let shifted = BoundaryCondition::dirichlet(&mesh, |x| x[0] + 0.01, InnerMode::None).unwrap();
        assert!(check_zero_mean(&mesh, &shifted.outer).is_err());
        let (mean, max) = boundary_mean(&mesh, BoundaryTag::Outer, &shifted.outer);
        assert!((mean - 0.01).abs() < 1e-12 && (max - 10.01).abs() < 1e-9);
    }

    #[test]
    fn tied_components_share_one_unknown() {
        let (mesh, regions) = build_domain(&DomainSpec::annulus(10.0, 3)).unwrap();
        let bc = BoundaryCondition::dirichlet(&mesh, |x| x[0], InnerMode::TiedConstant).unwrap();
        let dofs = DofMap::new(&mesh, &regions, &bc).unwrap();
        let inner = mesh.boundary_nodes(BoundaryTag::Inner).unwrap();
        let k = dofs.free(inner[0]).unwrap();
        assert!(inner.iter().all(|&i| dofs.free(i) == Some(k)));
        assert_eq!(dofs.component_dof, vec![k]);
        let v = dofs.expand(&vec![2.5; dofs.n_free]);
        assert!(inner.iter().all(|&i| v[i] == 2.5));
        assert_eq!(dofs.restrict(&v), vec![2.5; dofs.n_free]);
    }

    #[test]
    fn natural_and_prescribed_need_the_right_mesh() {
        let (mesh, regions) = build_domain(&DomainSpec::annulus(10.0, 2)).unwrap();
        let bc = BoundaryCondition::dirichlet(&mesh, |x| x[0], InnerMode::Natural).unwrap();
        assert!(matches!(DofMap::new(&mesh, &regions, &bc), Err(Error::Config(_))));
        let (mesh_a, _) = extract_submesh(&mesh, &regions, Region::A).unwrap();
        let labels = RegionMap::from_labels(&mesh_a, vec![Region::A; mesh_a.n_triangles()]).unwrap();
        let bc = BoundaryCondition::dirichlet(&mesh_a, |x| x[0], InnerMode::Prescribed).unwrap();
        assert!(bc.outer.is_empty());
        assert!(matches!(DofMap::new(&mesh_a, &labels, &bc), Err(Error::Config(_))));
        let trace = mesh_a
            .boundary_nodes(BoundaryTag::Interface)
            .unwrap()
            .into_iter()
            .map(|i| (i, mesh_a.nodes[i][0]))
            .collect();
        let dofs = DofMap::new(&mesh_a, &labels, &bc.with_inner_values(trace)).unwrap();
        assert!(dofs.n_free > 0);
    }
}
