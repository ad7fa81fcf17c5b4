use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::{Error, Point, Result};

/// Material label of a triangle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Region {
    A,
    B,
}

impl Region {
    pub fn as_str(self) -> &'static str {
        match self {
            Region::A => "A",
            Region::B => "B",
        }
    }
}

/// Boundary tag.
///
/// `Outer` edges lie on the outer boundary, `Inner` edges on the A/B
/// interface seen from the full mesh or from the B submesh, and `Interface`
/// edges on the boundary of an A submesh.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryTag {
    Outer,
    Inner,
    Interface,
}

impl BoundaryTag {
    pub fn as_str(self) -> &'static str {
        match self {
            BoundaryTag::Outer => "outer",
            BoundaryTag::Inner => "inner",
            BoundaryTag::Interface => "interface",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "outer" => Ok(BoundaryTag::Outer),
            "inner" => Ok(BoundaryTag::Inner),
            "interface" => Ok(BoundaryTag::Interface),
            _ => Err(Error::Tag(s.to_string())),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundaryEdge {
    pub nodes: [usize; 2],
    pub tag: BoundaryTag,
}

/// Triangulation with counterclockwise triangles and tagged edges.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mesh2D {
    pub nodes: Vec<Point>,
    pub triangles: Vec<[usize; 3]>,
    pub boundary_edges: Vec<BoundaryEdge>,
}

/// Gradients of the three P1 basis functions on a triangle and its area.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ElementGeometry {
    pub grads: [[f64; 2]; 3],
    pub area: f64,
}

pub(crate) fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

impl Mesh2D {
    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn signed_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t].map(|i| self.nodes[i]);
        0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
    }

    pub fn area(&self, t: usize) -> f64 {
        self.signed_area(t).abs()
    }

    pub fn total_area(&self) -> f64 {
        (0..self.n_triangles()).map(|t| self.area(t)).sum()
    }

    pub fn centroid(&self, t: usize) -> Point {
        let [a, b, c] = self.triangles[t].map(|i| self.nodes[i]);
        [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0]
    }

    pub fn element_geometry(&self, t: usize) -> ElementGeometry {
        let [a, b, c] = self.triangles[t].map(|i| self.nodes[i]);
        let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
        let grads = [
            [(b[1] - c[1]) / det, (c[0] - b[0]) / det],
            [(c[1] - a[1]) / det, (a[0] - c[0]) / det],
            [(a[1] - b[1]) / det, (b[0] - a[0]) / det],
        ];
        ElementGeometry {
            grads,
            area: 0.5 * det.abs(),
        }
    }

    /// Constant gradient of the P1 interpolant of `values` on triangle `t`.
    pub fn gradient(&self, t: usize, values: &[f64]) -> [f64; 2] {
        let g = self.element_geometry(t);
        let tri = self.triangles[t];
        let mut out = [0.0; 2];
        for k in 0..3 {
            out[0] += values[tri[k]] * g.grads[k][0];
            out[1] += values[tri[k]] * g.grads[k][1];
        }
        out
    }

    /// Map from sorted edge to the (one or two) triangles containing it.
    pub fn edge_triangles(&self) -> HashMap<(usize, usize), Vec<usize>> {
        let mut map: HashMap<(usize, usize), Vec<usize>> = HashMap::with_capacity(3 * self.n_triangles());
        for (t, tri) in self.triangles.iter().enumerate() {
            for k in 0..3 {
                map.entry(edge_key(tri[k], tri[(k + 1) % 3])).or_default().push(t);
            }
        }
        map
    }

    pub fn max_edge_length(&self) -> f64 {
        let mut h: f64 = 0.0;
        for tri in &self.triangles {
            for k in 0..3 {
                let (a, b) = (self.nodes[tri[k]], self.nodes[tri[(k + 1) % 3]]);
                h = h.max(((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt());
            }
        }
        h
    }

    pub fn has_tag(&self, tag: BoundaryTag) -> bool {
        self.boundary_edges.iter().any(|e| e.tag == tag)
    }

    /// Checks positive areas, index ranges, edge-manifoldness and that the
    /// single-sided edges are exactly the `Outer` and `Interface` tagged
    /// ones, while `Inner` tagged edges are shared by two triangles.
    pub fn validate(&self) -> Result<()> {
        let n = self.n_nodes();
        if self.nodes.iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
            return Err(Error::Mesh("non-finite node coordinate".into()));
        }
        for (t, tri) in self.triangles.iter().enumerate() {
            if tri.iter().any(|&i| i >= n) {
                return Err(Error::Mesh(format!("triangle {t} has an out-of-range node")));
            }
            if !(self.signed_area(t) > 0.0) {
                return Err(Error::Mesh(format!(
                    "triangle {t} has non-positive signed area {}",
                    self.signed_area(t)
                )));
            }
        }
        let edges = self.edge_triangles();
        if let Some((e, ts)) = edges.iter().find(|(_, ts)| ts.len() > 2) {
            return Err(Error::Mesh(format!("edge {e:?} is shared by {} triangles", ts.len())));
        }
        let mut tagged: HashMap<(usize, usize), BoundaryTag> = HashMap::new();
        for be in &self.boundary_edges {
            let [a, b] = be.nodes;
            if a >= n || b >= n {
                return Err(Error::Mesh("boundary edge has an out-of-range node".into()));
            }
            let key = edge_key(a, b);
            if tagged.insert(key, be.tag).is_some() {
                return Err(Error::Mesh(format!("boundary edge {key:?} listed twice")));
            }
            let count = edges.get(&key).map_or(0, Vec::len);
            let expected = if be.tag == BoundaryTag::Inner { [1, 2] } else { [1, 1] };
            if !expected.contains(&count) {
                return Err(Error::Mesh(format!(
                    "{} edge {key:?} belongs to {count} triangles",
                    be.tag.as_str()
                )));
            }
        }
        for (e, ts) in &edges {
            if ts.len() == 1 && !tagged.contains_key(e) {
                return Err(Error::Mesh(format!("boundary edge {e:?} carries no tag")));
            }
        }
        Ok(())
    }

    /// Closed curves formed by the edges carrying `tag`, each listed once in
    /// traversal order without repeating the first node.
    pub fn boundary_loops(&self, tag: BoundaryTag) -> Result<Vec<Vec<usize>>> {
        let mut adj: HashMap<usize, Vec<usize>> = HashMap::new();
        for e in self.boundary_edges.iter().filter(|e| e.tag == tag) {
            adj.entry(e.nodes[0]).or_default().push(e.nodes[1]);
            adj.entry(e.nodes[1]).or_default().push(e.nodes[0]);
        }
        if adj.is_empty() {
            return Err(Error::Tag(format!("no boundary edges tagged `{}`", tag.as_str())));
        }
        if let Some((v, nb)) = adj.iter().find(|(_, nb)| nb.len() != 2) {
            return Err(Error::Mesh(format!(
                "`{}` boundary is not a union of closed curves at node {v} (degree {})",
                tag.as_str(),
                nb.len()
            )));
        }
        let mut starts: Vec<usize> = adj.keys().copied().collect();
        starts.sort_unstable();
        let mut seen: HashMap<usize, bool> = HashMap::new();
        let mut loops = Vec::new();
        for s in starts {
            if seen.contains_key(&s) {
                continue;
            }
            let mut lp = vec![s];
            seen.insert(s, true);
            let (mut prev, mut cur) = (s, adj[&s][0]);
            while cur != s {
                lp.push(cur);
                seen.insert(cur, true);
                let nb = &adj[&cur];
                let next = if nb[0] == prev { nb[1] } else { nb[0] };
                prev = cur;
                cur = next;
            }
            // orient counterclockwise
            if polygon_signed_area(&lp.iter().map(|&i| self.nodes[i]).collect::<Vec<_>>()) < 0.0 {
                lp[1..].reverse();
            }
            loops.push(lp);
        }
        Ok(loops)
    }

    /// All nodes on `tag` edges, loop after loop in traversal order.
    pub fn boundary_nodes(&self, tag: BoundaryTag) -> Result<Vec<usize>> {
        Ok(self.boundary_loops(tag)?.concat())
    }

    /// Lumped boundary measure: half the length of each incident `tag` edge.
    pub fn boundary_weights(&self, tag: BoundaryTag) -> HashMap<usize, f64> {
        let mut w: HashMap<usize, f64> = HashMap::new();
        for e in self.boundary_edges.iter().filter(|e| e.tag == tag) {
            let [a, b] = e.nodes.map(|i| self.nodes[i]);
            let len = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
            *w.entry(e.nodes[0]).or_default() += 0.5 * len;
            *w.entry(e.nodes[1]).or_default() += 0.5 * len;
        }
        w
    }
}

pub(crate) fn polygon_signed_area(pts: &[Point]) -> f64 {
    let n = pts.len();
    (0..n)
        .map(|i| {
            let (a, b) = (pts[i], pts[(i + 1) % n]);
            a[0] * b[1] - b[0] * a[1]
        })
        .sum::<f64>()
        * 0.5
}

/// Polyline length of a closed loop.
pub fn loop_length(mesh: &Mesh2D, lp: &[usize]) -> f64 {
    let n = lp.len();
    (0..n)
        .map(|i| {
            let (a, b) = (mesh.nodes[lp[i]], mesh.nodes[lp[(i + 1) % n]]);
            ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> Mesh2D {
        Mesh2D {
            nodes: vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
            triangles: vec![[0, 1, 2], [0, 2, 3]],
            boundary_edges: (0..4)
                .map(|i| BoundaryEdge {
                    nodes: [i, (i + 1) % 4],
                    tag: BoundaryTag::Outer,
                })
                .collect(),
        }
    }

    #[test]
    fn square_is_valid() {
        let m = square();
        m.validate().unwrap();
        assert_eq!(m.total_area(), 1.0);
        let lp = m.boundary_loops(BoundaryTag::Outer).unwrap();
        assert_eq!(lp.len(), 1);
        assert_eq!(loop_length(&m, &lp[0]), 4.0);
        let mut corners = lp[0].clone();
        corners.sort_unstable();
        assert_eq!(corners, vec![0, 1, 2, 3]);
        assert!(matches!(m.boundary_loops(BoundaryTag::Inner), Err(Error::Tag(_))));
    }

    #[test]
    fn p1_gradient_of_affine() {
        let m = square();
        let v: Vec<f64> = m.nodes.iter().map(|p| 2.0 * p[0] - 3.0 * p[1] + 1.0).collect();
        for t in 0..2 {
            let g = m.gradient(t, &v);
            assert!((g[0] - 2.0).abs() < 1e-14 && (g[1] + 3.0).abs() < 1e-14);
        }
        let geo = m.element_geometry(0);
        let sum: [f64; 2] = [0, 1].map(|d| geo.grads.iter().map(|g| g[d]).sum());
        assert!(sum[0].abs() < 1e-14 && sum[1].abs() < 1e-14);
    }

    #[test]
    fn detects_defects() {
        let mut m = square();
        m.triangles[0] = [0, 2, 1];
        assert!(m.validate().is_err());
        let mut m = square();
        m.boundary_edges.pop();
        assert!(m.validate().is_err());
        let mut m = square();
        m.boundary_edges.push(BoundaryEdge {
            nodes: [0, 2],
            tag: BoundaryTag::Outer,
        });
        assert!(m.validate().is_err());
    }

    #[test]
    fn boundary_weights_sum_to_perimeter() {
        let w = square().boundary_weights(BoundaryTag::Outer);
        assert_eq!(w.values().sum::<f64>(), 4.0);
    }
}
