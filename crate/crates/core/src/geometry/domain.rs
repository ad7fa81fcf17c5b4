use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::delaunay::triangulate;
use super::mesh::{edge_key, BoundaryEdge, BoundaryTag, Mesh2D, Region};
use super::regions::RegionMap;
use crate::{Error, Point, Result};

/// Circular inclusion forming one component of A.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Inclusion {
    pub center: Point,
    pub radius: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Shape {
    /// B is the annulus `1 < |x| < r_outer`, A the unit disk.
    Annulus { r_outer: f64 },
    /// B is the disk `|x| < radius` minus the inclusion.
    DiskWithInclusion { radius: f64, inclusion: Inclusion },
    /// B is the square `[-half_width, half_width]²` minus the inclusions.
    SquareWithInclusions {
        half_width: f64,
        inclusions: Vec<Inclusion>,
    },
}

/// Geometry plus resolution. The annulus takes `n_radial` (sectors are
/// `8·n_radial`, with `n_radial` rings in the unit disk and per octave of
/// radius outside it); the other shapes take a target edge length `h`.
/// Either may be derived from the other.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    #[serde(flatten)]
    pub shape: Shape,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_radial: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
}

impl DomainSpec {
    pub fn annulus(r_outer: f64, n_radial: usize) -> Self {
        Self {
            shape: Shape::Annulus { r_outer },
            n_radial: Some(n_radial),
            h: None,
        }
    }

    pub fn disk_with_inclusion(radius: f64, inclusion: Inclusion, h: f64) -> Self {
        Self {
            shape: Shape::DiskWithInclusion { radius, inclusion },
            n_radial: None,
            h: Some(h),
        }
    }

    pub fn square_with_inclusions(half_width: f64, inclusions: Vec<Inclusion>, h: f64) -> Self {
        Self {
            shape: Shape::SquareWithInclusions { half_width, inclusions },
            n_radial: None,
            h: Some(h),
        }
    }

    fn edge_length(&self, scale: f64) -> Result<f64> {
        match (self.h, self.n_radial) {
            (Some(h), _) if h > 0.0 && h.is_finite() => Ok(h),
            (None, Some(n)) if n >= 1 => Ok(scale / n as f64),
            _ => Err(Error::Parameter("resolution needs h > 0 or n_radial >= 1".into())),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64, what: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Parameter(format!("{what} must be positive, got {v}")))
            }
        };
        match &self.shape {
            Shape::Annulus { r_outer } => {
                if !(*r_outer > 1.0) || !r_outer.is_finite() {
                    return Err(Error::Parameter(format!(
                        "annulus outer radius must exceed 1, got {r_outer}"
                    )));
                }
                match (self.n_radial, self.h) {
                    (Some(n), _) if n >= 2 => Ok(()),
                    (None, Some(h)) if h > 0.0 && h.is_finite() => Ok(()),
                    _ => Err(Error::Parameter("annulus needs n_radial >= 2 or h > 0".into())),
                }
            }
            Shape::DiskWithInclusion { radius, inclusion } => {
                positive(*radius, "disk radius")?;
                positive(inclusion.radius, "inclusion radius")?;
                let h = self.edge_length(*radius)?;
                let gap = radius - norm(inclusion.center) - inclusion.radius;
                check_gap(gap, h, "inclusion and outer boundary")
            }
            Shape::SquareWithInclusions { half_width, inclusions } => {
                positive(*half_width, "half width")?;
                if inclusions.is_empty() {
                    return Err(Error::Parameter("at least one inclusion is required".into()));
                }
                let h = self.edge_length(*half_width)?;
                for (i, inc) in inclusions.iter().enumerate() {
                    positive(inc.radius, "inclusion radius")?;
                    let gap = half_width - inc.center[0].abs().max(inc.center[1].abs()) - inc.radius;
                    check_gap(gap, h, &format!("inclusion {i} and outer boundary"))?;
                    for (j, other) in inclusions.iter().enumerate().skip(i + 1) {
                        let d = norm([inc.center[0] - other.center[0], inc.center[1] - other.center[1]]);
                        check_gap(d - inc.radius - other.radius, h, &format!("inclusions {i} and {j}"))?;
                    }
                }
                Ok(())
            }
        }
    }
}

fn check_gap(gap: f64, h: f64, what: &str) -> Result<()> {
    if !(gap > 0.0) {
        return Err(Error::Parameter(format!("{what} overlap or touch (gap {gap})")));
    }
    if gap < 1.5 * h {
        return Err(Error::Parameter(format!(
            "gap {gap} between {what} is below 1.5 edge lengths ({h}); refine the resolution"
        )));
    }
    Ok(())
}

fn norm(p: Point) -> f64 {
    (p[0] * p[0] + p[1] * p[1]).sqrt()
}

/// Builds and validates the mesh and region map for `spec`.
pub fn build_domain(spec: &DomainSpec) -> Result<(Mesh2D, RegionMap)> {
    spec.validate()?;
    let (mesh, labels) = match &spec.shape {
        Shape::Annulus { r_outer } => {
            let n = spec
                .n_radial
                .unwrap_or_else(|| (PI / 4.0 / spec.h.unwrap()).ceil().max(2.0) as usize);
            polar_annulus(*r_outer, n)
        }
        Shape::DiskWithInclusion { radius, inclusion } => {
            let h = spec.edge_length(*radius)?;
            delaunay_domain(Outer::Circle(*radius), std::slice::from_ref(inclusion), h)?
        }
        Shape::SquareWithInclusions { half_width, inclusions } => {
            let h = spec.edge_length(*half_width)?;
            delaunay_domain(Outer::Square(*half_width), inclusions, h)?
        }
    };
    mesh.validate()?;
    let regions = RegionMap::from_labels(&mesh, labels)?;
    regions.validate(&mesh)?;
    Ok((mesh, regions))
}

struct Builder {
    nodes: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    labels: Vec<Region>,
}

impl Builder {
    fn push(&mut self, mut t: [usize; 3], region: Region) {
        let [a, b, c] = t.map(|i| self.nodes[i]);
        if (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]) < 0.0 {
            t.swap(1, 2);
        }
        self.triangles.push(t);
        self.labels.push(region);
    }

    fn ring(&mut self, rho: f64, count: usize) -> usize {
        let base = self.nodes.len();
        for k in 0..count {
            let th = 2.0 * PI * k as f64 / count as f64;
            self.nodes.push([rho * th.cos(), rho * th.sin()]);
        }
        base
    }

    /// Connects two rings whose node counts are equal or differ by a factor 2.
    fn connect(&mut self, inner: (usize, usize), outer: (usize, usize), region: Region) {
        let (bi, ni) = inner;
        let (bo, no) = outer;
        if ni == no {
            for k in 0..ni {
                let k1 = (k + 1) % ni;
                self.push([bi + k, bo + k, bo + k1], region);
                self.push([bi + k, bo + k1, bi + k1], region);
            }
        } else {
            debug_assert_eq!(no, 2 * ni);
            for k in 0..ni {
                let k1 = (k + 1) % ni;
                let (o0, o1, o2) = (bo + 2 * k, bo + 2 * k + 1, bo + (2 * k + 2) % no);
                self.push([bi + k, o0, o1], region);
                self.push([bi + k, o1, bi + k1], region);
                self.push([bi + k1, o1, o2], region);
            }
        }
    }
}

/// Structured polar mesh of the disk of radius `r_outer` with nodes exactly
/// on the circles of radius 1, 2 (when inside) and `r_outer`.
fn polar_annulus(r_outer: f64, n: usize) -> (Mesh2D, Vec<Region>) {
    let sectors = 8 * n;
    // halve the sector count at every dyadic radius 1/2, 1/4, … so that
    // doubling n nests the disk rings
    let mut max_halvings = 0;
    while sectors.is_multiple_of(1 << (max_halvings + 1)) && sectors >> (max_halvings + 1) >= 4 {
        max_halvings += 1;
    }
    let counts: Vec<usize> = (0..=n)
        .map(|j| {
            let rho = j as f64 / n as f64;
            let mut k = 0;
            while k < max_halvings && rho <= 0.5f64.powi(k + 1) {
                k += 1;
            }
            sectors >> k
        })
        .collect();
    let mut b = Builder {
        nodes: vec![[0.0, 0.0]],
        triangles: Vec::new(),
        labels: Vec::new(),
    };
    let mut prev = (b.ring(1.0 / n as f64, counts[1]), counts[1]);
    for k in 0..counts[1] {
        b.push([0, prev.0 + k, prev.0 + (k + 1) % counts[1]], Region::A);
    }
    for j in 2..=n {
        let rho = if j == n { 1.0 } else { j as f64 / n as f64 };
        let cur = (b.ring(rho, counts[j]), counts[j]);
        b.connect(prev, cur, Region::A);
        prev = cur;
    }
    let interface_ring = prev;

    let mut forced = vec![1.0];
    if r_outer > 2.0 {
        forced.push(2.0);
    }
    forced.push(r_outer);
    let mut radii = Vec::new();
    for w in forced.windows(2) {
        let ratio = w[1] / w[0];
        let m = n * ((4.0 * ratio.ln() / PI).round() as usize).max(1);
        for i in 1..=m {
            radii.push(if i == m {
                w[1]
            } else {
                w[0] * ratio.powf(i as f64 / m as f64)
            });
        }
    }
    for &rho in &radii {
        let cur = (b.ring(rho, sectors), sectors);
        b.connect(prev, cur, Region::B);
        prev = cur;
    }
    let mut boundary_edges = Vec::with_capacity(2 * sectors);
    for (ring, tag) in [(prev, BoundaryTag::Outer), (interface_ring, BoundaryTag::Inner)] {
        for k in 0..ring.1 {
            boundary_edges.push(BoundaryEdge {
                nodes: [ring.0 + k, ring.0 + (k + 1) % ring.1],
                tag,
            });
        }
    }
    (
        Mesh2D {
            nodes: b.nodes,
            triangles: b.triangles,
            boundary_edges,
        },
        b.labels,
    )
}

enum Outer {
    Circle(f64),
    Square(f64),
}

impl Outer {
    /// Distance from `p` to the outer boundary, negative outside.
    fn inside_distance(&self, p: Point) -> f64 {
        match *self {
            Outer::Circle(r) => r - norm(p),
            Outer::Square(s) => s - p[0].abs().max(p[1].abs()),
        }
    }

    fn boundary_points(&self, h: f64) -> Vec<Point> {
        match *self {
            Outer::Circle(r) => circle_points([0.0, 0.0], r, h),
            Outer::Square(s) => {
                let m = ((2.0 * s / h).ceil() as usize).max(1);
                let corners = [[-s, -s], [s, -s], [s, s], [-s, s]];
                let mut pts = Vec::with_capacity(4 * m);
                for c in 0..4 {
                    let (a, b) = (corners[c], corners[(c + 1) % 4]);
                    for i in 0..m {
                        let t = i as f64 / m as f64;
                        pts.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
                    }
                }
                pts
            }
        }
    }

    /// Layer of points one edge length outside the boundary.
    fn padding_points(&self, h: f64) -> Vec<Point> {
        match *self {
            Outer::Circle(r) => circle_points([0.0, 0.0], r + h, h),
            Outer::Square(s) => Outer::Square(s + h).boundary_points(h),
        }
    }

    fn extent(&self) -> f64 {
        match *self {
            Outer::Circle(r) => r,
            Outer::Square(s) => s,
        }
    }
}

fn circle_points(c: Point, r: f64, h: f64) -> Vec<Point> {
    let m = ((2.0 * PI * r / h).ceil() as usize).max(8);
    (0..m)
        .map(|k| {
            let th = 2.0 * PI * k as f64 / m as f64;
            [c[0] + r * th.cos(), c[1] + r * th.sin()]
        })
        .collect()
}

/// Delaunay mesh of an outer shape with circular inclusions: boundary
/// points at spacing `h`, interior points on a hexagonal lattice kept
/// `0.7h` away from every curve.
fn delaunay_domain(outer: Outer, inclusions: &[Inclusion], h: f64) -> Result<(Mesh2D, Vec<Region>)> {
    let mut points = outer.boundary_points(h);
    let n_outer = points.len();
    let mut circles = Vec::new();
    for inc in inclusions {
        let start = points.len();
        points.extend(circle_points(inc.center, inc.radius, h));
        circles.push(start..points.len());
    }
    let ext = outer.extent();
    let dy = h * 3f64.sqrt() / 2.0;
    let rows = (2.0 * ext / dy).ceil() as i64 + 2;
    let cols = (2.0 * ext / h).ceil() as i64 + 2;
    for j in -rows / 2 - 1..=rows / 2 + 1 {
        let shift = if j.rem_euclid(2) == 1 { 0.5 * h } else { 0.0 };
        for i in -cols / 2 - 1..=cols / 2 + 1 {
            let p = [i as f64 * h + shift, j as f64 * dy];
            if outer.inside_distance(p) <= 0.7 * h {
                continue;
            }
            let near_curve = inclusions.iter().any(|inc| {
                let d = norm([p[0] - inc.center[0], p[1] - inc.center[1]]);
                (d - inc.radius).abs() <= 0.7 * h
            });
            if !near_curve {
                points.push(p);
            }
        }
    }
    let n_domain = points.len();
    points.extend(outer.padding_points(h));
    let all = triangulate(&points)?;
    points.truncate(n_domain);
    let triangles: Vec<[usize; 3]> = all
        .into_iter()
        .filter(|t| {
            t.iter().all(|&i| i < n_domain) && {
                let c = [0, 1].map(|d| t.iter().map(|&i| points[i][d]).sum::<f64>() / 3.0);
                outer.inside_distance(c) > 0.0
            }
        })
        .collect();
    let mesh = Mesh2D {
        nodes: points,
        triangles,
        boundary_edges: Vec::new(),
    };
    let edges = mesh.edge_triangles();
    let mut boundary_edges: Vec<BoundaryEdge> = Vec::new();
    let curves =
        std::iter::once((BoundaryTag::Outer, 0..n_outer)).chain(circles.into_iter().map(|r| (BoundaryTag::Inner, r)));
    for (ci, (tag, range)) in curves.enumerate() {
        let m = range.len();
        for k in 0..m {
            let (a, b) = (range.start + k, range.start + (k + 1) % m);
            if !edges.contains_key(&edge_key(a, b)) {
                return Err(Error::Mesh(format!(
                    "boundary curve {ci} edge ({a}, {b}) missing from the triangulation; refine h"
                )));
            }
            boundary_edges.push(BoundaryEdge { nodes: [a, b], tag });
        }
    }
    let labels = (0..mesh.n_triangles())
        .map(|t| {
            let c = mesh.centroid(t);
            let inside = inclusions
                .iter()
                .any(|inc| norm([c[0] - inc.center[0], c[1] - inc.center[1]]) < inc.radius);
            if inside {
                Region::A
            } else {
                Region::B
            }
        })
        .collect();
    Ok((Mesh2D { boundary_edges, ..mesh }, labels))
}
