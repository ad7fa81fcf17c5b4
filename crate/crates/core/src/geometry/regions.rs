use serde::{Deserialize, Serialize};

use super::mesh::{edge_key, BoundaryEdge, BoundaryTag, Mesh2D, Region};
use crate::{Error, Result};

/// Element labels and the connected components of the A phase.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionMap {
    pub element_region: Vec<Region>,
    /// Component id for A triangles, `None` for B triangles.
    pub component_of_a: Vec<Option<usize>>,
    pub n_components: usize,
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Edge-connected components of the triangles with label `which`, numbered
/// in order of their lowest triangle index.
fn components(mesh: &Mesh2D, labels: &[Region], which: Region) -> (Vec<Option<usize>>, usize) {
    let mut uf = UnionFind::new(mesh.n_triangles());
    for ts in mesh.edge_triangles().values() {
        if let [a, b] = ts[..] {
            if labels[a] == which && labels[b] == which {
                uf.union(a, b);
            }
        }
    }
    let mut id_of_root = vec![usize::MAX; mesh.n_triangles()];
    let mut comp = vec![None; mesh.n_triangles()];
    let mut n = 0;
    for t in 0..mesh.n_triangles() {
        if labels[t] != which {
            continue;
        }
        let r = uf.find(t);
        if id_of_root[r] == usize::MAX {
            id_of_root[r] = n;
            n += 1;
        }
        comp[t] = Some(id_of_root[r]);
    }
    (comp, n)
}

impl RegionMap {
    pub fn from_labels(mesh: &Mesh2D, element_region: Vec<Region>) -> Result<Self> {
        if element_region.len() != mesh.n_triangles() {
            return Err(Error::Shape(format!(
                "{} region labels for {} triangles",
                element_region.len(),
                mesh.n_triangles()
            )));
        }
        let (component_of_a, n_components) = components(mesh, &element_region, Region::A);
        Ok(Self {
            element_region,
            component_of_a,
            n_components,
        })
    }

    pub fn region(&self, t: usize) -> Region {
        self.element_region[t]
    }

    pub fn count(&self, which: Region) -> usize {
        self.element_region.iter().filter(|&&r| r == which).count()
    }

    pub fn area(&self, mesh: &Mesh2D, which: Region) -> f64 {
        (0..mesh.n_triangles())
            .filter(|&t| self.element_region[t] == which)
            .map(|t| mesh.area(t))
            .sum()
    }

    /// B is edge-connected, every outer edge borders B, and the component
    /// ids partition A.
    pub fn validate(&self, mesh: &Mesh2D) -> Result<()> {
        if self.element_region.len() != mesh.n_triangles() {
            return Err(Error::Shape("region map does not match mesh".into()));
        }
        let (_, nb) = components(mesh, &self.element_region, Region::B);
        if nb != 1 {
            return Err(Error::Mesh(format!("region B has {nb} connected components")));
        }
        let edges = mesh.edge_triangles();
        for e in mesh.boundary_edges.iter().filter(|e| e.tag == BoundaryTag::Outer) {
            let ts = &edges[&edge_key(e.nodes[0], e.nodes[1])];
            if ts.iter().all(|&t| self.element_region[t] != Region::B) {
                return Err(Error::Mesh(format!("outer edge {:?} does not border B", e.nodes)));
            }
        }
        let (comp, n) = components(mesh, &self.element_region, Region::A);
        if n != self.n_components || comp != self.component_of_a {
            return Err(Error::Mesh("A component ids are inconsistent".into()));
        }
        Ok(())
    }
}

/// Correspondence between a submesh and its parent.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeMap {
    /// Parent index of each child node.
    pub parent_of_child: Vec<usize>,
    /// Child index of each parent node, if present in the submesh.
    pub child_of_parent: Vec<Option<usize>>,
    /// Parent index of each child triangle.
    pub parent_triangle: Vec<usize>,
}

impl NodeMap {
    pub fn restrict(&self, parent_values: &[f64]) -> Vec<f64> {
        self.parent_of_child.iter().map(|&p| parent_values[p]).collect()
    }
}

/// Submesh of the triangles labelled `which`. Edges on the A/B interface
/// become `Inner` on a B submesh and `Interface` on an A submesh.
pub fn extract_submesh(mesh: &Mesh2D, regions: &RegionMap, which: Region) -> Result<(Mesh2D, NodeMap)> {
    let selected: Vec<usize> = (0..mesh.n_triangles())
        .filter(|&t| regions.element_region[t] == which)
        .collect();
    if selected.is_empty() {
        return Err(Error::Mesh(format!("region {} is empty", which.as_str())));
    }
    let mut child_of_parent = vec![None; mesh.n_nodes()];
    let mut parent_of_child = Vec::new();
    let mut triangles = Vec::with_capacity(selected.len());
    for &t in &selected {
        let tri = mesh.triangles[t].map(|p| {
            *child_of_parent[p].get_or_insert_with(|| {
                parent_of_child.push(p);
                parent_of_child.len() - 1
            })
        });
        triangles.push(tri);
    }
    let outer: std::collections::HashSet<(usize, usize)> = mesh
        .boundary_edges
        .iter()
        .filter(|e| e.tag == BoundaryTag::Outer)
        .map(|e| edge_key(e.nodes[0], e.nodes[1]))
        .collect();
    let interface_tag = match which {
        Region::B => BoundaryTag::Inner,
        Region::A => BoundaryTag::Interface,
    };
    let mut boundary_edges = Vec::new();
    let edges = mesh.edge_triangles();
    for &t in &selected {
        let tri = mesh.triangles[t];
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            let key = edge_key(a, b);
            let inside = edges[&key]
                .iter()
                .filter(|&&s| regions.element_region[s] == which)
                .count();
            if inside == 1 {
                let tag = if outer.contains(&key) {
                    BoundaryTag::Outer
                } else {
                    interface_tag
                };
                boundary_edges.push(BoundaryEdge {
                    nodes: [child_of_parent[a].unwrap(), child_of_parent[b].unwrap()],
                    tag,
                });
            }
        }
    }
    Ok((
        Mesh2D {
            nodes: parent_of_child.iter().map(|&p| mesh.nodes[p]).collect(),
            triangles,
            boundary_edges,
        },
        NodeMap {
            parent_of_child,
            child_of_parent,
            parent_triangle: selected,
        },
    ))
}
