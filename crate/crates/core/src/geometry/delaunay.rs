//! Incremental Bowyer–Watson triangulation of a point set.
//!
//! Cavities are grown by breadth-first search from the triangle containing
//! the new point and then enlarged until star-shaped, which keeps the
//! structure valid when points are (nearly) cocircular.

use crate::{Error, Point, Result};

const NONE: usize = usize::MAX;

fn orient(a: Point, b: Point, c: Point) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1])
}

/// Positive when `d` lies strictly inside the circumcircle of ccw `a, b, c`.
fn incircle(a: Point, b: Point, c: Point, d: Point) -> f64 {
    let (adx, ady) = (a[0] - d[0], a[1] - d[1]);
    let (bdx, bdy) = (b[0] - d[0], b[1] - d[1]);
    let (cdx, cdy) = (c[0] - d[0], c[1] - d[1]);
    let ad = adx * adx + ady * ady;
    let bd = bdx * bdx + bdy * bdy;
    let cd = cdx * cdx + cdy * cdy;
    adx * (bdy * cd - bd * cdy) - ady * (bdx * cd - bd * cdx) + ad * (bdx * cdy - bdy * cdx)
}

struct Triangulation {
    pts: Vec<Point>,
    tri: Vec<[usize; 3]>,
    /// `nbr[t][k]` is the triangle across the edge opposite vertex `k`.
    nbr: Vec<[usize; 3]>,
    alive: Vec<bool>,
    last: usize,
    scale: f64,
}

impl Triangulation {
    #[cfg(test)]
    fn check(&self) {
        for t in 0..self.tri.len() {
            if !self.alive[t] {
                continue;
            }
            for k in 0..3 {
                let n = self.nbr[t][k];
                if n == NONE {
                    continue;
                }
                assert!(self.alive[n], "dead neighbour {n} of {t}");
                assert!(self.nbr[n].contains(&t), "asymmetric {t} {n}");
                let j = (0..3).find(|&j| self.nbr[n][j] == t).unwrap();
                let far = self.pts[self.tri[n][j]];
                assert!(
                    self.edge_orient(t, k, far) < 0.0,
                    "neighbours {t} {n} on the same side (last {})",
                    self.last
                );
            }
        }
        let area: f64 = (0..self.tri.len())
            .filter(|&t| self.alive[t])
            .map(|t| {
                let [a, b, c] = self.tri[t].map(|i| self.pts[i]);
                let s = orient(a, b, c);
                assert!(s > 0.0, "inverted triangle {t}");
                s
            })
            .sum();
        let n = self.pts.len();
        let total = orient(self.pts[n - 3], self.pts[n - 2], self.pts[n - 1]);
        assert!((area - total).abs() < 1e-9 * total, "coverage {area} vs {total}");
    }

    fn edge_orient(&self, t: usize, k: usize, p: Point) -> f64 {
        let v = self.tri[t];
        orient(self.pts[v[(k + 1) % 3]], self.pts[v[(k + 2) % 3]], p)
    }

    fn orient_tol(&self) -> f64 {
        1e-13 * self.scale * self.scale
    }

    fn locate(&self, p: Point) -> Option<usize> {
        let mut t = self.last;
        let limit = 4 * self.tri.len() + 16;
        for _ in 0..limit {
            let mut moved = false;
            for k in 0..3 {
                if self.edge_orient(t, k, p) < -self.orient_tol() && self.nbr[t][k] != NONE {
                    t = self.nbr[t][k];
                    moved = true;
                    break;
                }
            }
            if !moved {
                return Some(t);
            }
        }
        (0..self.tri.len()).find(|&t| self.alive[t] && (0..3).all(|k| self.edge_orient(t, k, p) >= -self.orient_tol()))
    }

    fn in_circle(&self, t: usize, p: Point) -> bool {
        let [a, b, c] = self.tri[t].map(|i| self.pts[i]);
        incircle(a, b, c, p) > 1e-14 * self.scale.powi(4)
    }

    fn insert(&mut self, pi: usize) -> Result<()> {
        let p = self.pts[pi];
        let start = self
            .locate(p)
            .ok_or_else(|| Error::Mesh(format!("point {p:?} outside the triangulation")))?;
        let mut in_cavity = std::collections::BTreeSet::from([start]);
        let mut stack = vec![start];
        while let Some(t) = stack.pop() {
            for &n in &self.nbr[t] {
                if n != NONE && !in_cavity.contains(&n) && self.in_circle(n, p) {
                    in_cavity.insert(n);
                    stack.push(n);
                }
            }
        }
        // enlarge until every boundary edge sees p on its left
        let boundary = loop {
            let mut boundary = Vec::new();
            let mut grow = None;
            for &t in &in_cavity {
                for k in 0..3 {
                    let n = self.nbr[t][k];
                    if n != NONE && in_cavity.contains(&n) {
                        continue;
                    }
                    if self.edge_orient(t, k, p) <= self.orient_tol() {
                        if n == NONE {
                            return Err(Error::Mesh(format!("cannot insert point {p:?}")));
                        }
                        grow = Some(n);
                        break;
                    }
                    let v = self.tri[t];
                    boundary.push((v[(k + 1) % 3], v[(k + 2) % 3], n, t));
                }
                if grow.is_some() {
                    break;
                }
            }
            if grow.is_none() {
                // a vertex visited twice by the cavity boundary is a pinch
                let mut starts = std::collections::HashMap::new();
                for &(a, _, n, _) in &boundary {
                    if let Some(&m) = starts.get(&a) {
                        grow = [n, m].into_iter().find(|&x| x != NONE);
                        break;
                    }
                    starts.insert(a, n);
                }
            }
            match grow {
                Some(n) => {
                    in_cavity.insert(n);
                }
                None => break boundary,
            }
        };
        for &t in &in_cavity {
            self.alive[t] = false;
        }
        let first = self.tri.len();
        let mut by_start = std::collections::HashMap::new();
        let mut by_end = std::collections::HashMap::new();
        for (i, &(a, b, outside, old)) in boundary.iter().enumerate() {
            let t = first + i;
            self.tri.push([a, b, pi]);
            self.nbr.push([NONE, NONE, outside]);
            self.alive.push(true);
            if outside != NONE {
                for k in 0..3 {
                    if self.nbr[outside][k] == old {
                        self.nbr[outside][k] = t;
                    }
                }
            }
            by_start.insert(a, t);
            by_end.insert(b, t);
        }
        for i in 0..boundary.len() {
            let t = first + i;
            let (a, b, _, _) = boundary[i];
            // opposite a is edge (b, p), shared with the triangle starting at b
            self.nbr[t][0] = by_start[&b];
            self.nbr[t][1] = by_end[&a];
        }
        self.last = first;
        Ok(())
    }
}

/// Delaunay triangulation of `points` with counterclockwise triangles.
///
/// The bounding triangle is finite, so hull edges whose circumcircle with a
/// bounding vertex swallows a nearby point can be missing. Callers surround
/// the region of interest with a padding layer and discard the triangles
/// outside it. Duplicate points are rejected.
pub fn triangulate(points: &[Point]) -> Result<Vec<[usize; 3]>> {
    if points.len() < 3 {
        return Err(Error::Mesh("need at least three points".into()));
    }
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in points {
        for d in 0..2 {
            lo[d] = lo[d].min(p[d]);
            hi[d] = hi[d].max(p[d]);
        }
    }
    let scale = (hi[0] - lo[0]).max(hi[1] - lo[1]);
    let mid = [(lo[0] + hi[0]) / 2.0, (lo[1] + hi[1]) / 2.0];
    let big = 100.0 * scale;
    let n = points.len();
    let mut pts = points.to_vec();
    pts.push([mid[0] - big, mid[1] - big]);
    pts.push([mid[0] + big, mid[1] - big]);
    pts.push([mid[0], mid[1] + big]);
    let mut tr = Triangulation {
        pts,
        tri: vec![[n, n + 1, n + 2]],
        nbr: vec![[NONE; 3]],
        alive: vec![true],
        last: 0,
        scale,
    };
    // serpentine sweep over a coarse grid keeps point location walks short
    let cells = ((n as f64).sqrt() / 2.0).ceil().max(1.0);
    let cell = |p: Point| {
        let i = (((p[0] - lo[0]) / scale * cells) as usize).min(cells as usize - 1);
        let j = (((p[1] - lo[1]) / scale * cells) as usize).min(cells as usize - 1);
        let key_x = if j.is_multiple_of(2) { p[0] } else { -p[0] };
        (j, i, key_x)
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        let (ja, _, xa) = cell(points[a]);
        let (jb, _, xb) = cell(points[b]);
        ja.cmp(&jb).then(xa.total_cmp(&xb))
    });
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::Mesh(format!("duplicate point {:?}", w[0])));
    }
    for &i in &order {
        tr.insert(i)?;
        #[cfg(test)]
        tr.check();
    }
    Ok((0..tr.tri.len())
        .filter(|&t| tr.alive[t] && tr.tri[t].iter().all(|&v| v < n))
        .map(|t| tr.tri[t])
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn is_delaunay(points: &[Point], tris: &[[usize; 3]]) -> bool {
        tris.iter().all(|t| {
            let [a, b, c] = t.map(|i| points[i]);
            points.iter().all(|&d| incircle(a, b, c, d) <= 1e-9)
        })
    }

    #[test]
    fn random_points_delaunay_and_area() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let h = 0.05;
        let mut pts: Vec<Point> = Vec::new();
        for i in 0..20 {
            let t = i as f64 * h;
            pts.extend([[t, 0.0], [1.0, t], [1.0 - t, 1.0], [0.0, 1.0 - t]]);
        }
        for i in 0..22 {
            let t = -h + i as f64 * h;
            pts.extend([[t, -h], [1.0 + h, t], [1.0 - t, 1.0 + h], [-h, 1.0 - t]]);
        }
        while pts.len() < 500 {
            let p = [rng.random::<f64>(), rng.random::<f64>()];
            if p.iter().all(|&c| c > 0.7 * h && c < 1.0 - 0.7 * h) {
                pts.push(p);
            }
        }
        let tris = triangulate(&pts).unwrap();
        assert!(is_delaunay(&pts, &tris));
        let mut area = 0.0;
        for t in &tris {
            let [a, b, c] = t.map(|i| pts[i]);
            let s = orient(a, b, c);
            assert!(s > 0.0);
            let m = [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0];
            if m.iter().all(|&x| (0.0..=1.0).contains(&x)) {
                area += 0.5 * s;
            }
        }
        assert!((area - 1.0).abs() < 1e-12, "area {area}");
    }

    #[test]
    fn cocircular_points() {
        let n = 64;
        let mut pts: Vec<Point> = (0..n)
            .map(|k| {
                let t = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                [t.cos(), t.sin()]
            })
            .collect();
        pts.push([0.0, 0.0]);
        let tris = triangulate(&pts).unwrap();
        assert_eq!(tris.len(), n);
        let area: f64 = tris.iter().map(|t| 0.5 * orient(pts[t[0]], pts[t[1]], pts[t[2]])).sum();
        let exact = 0.5 * n as f64 * (2.0 * std::f64::consts::PI / n as f64).sin();
        assert!((area - exact).abs() < 1e-12);
    }

    #[test]
    fn rejects_duplicates() {
        assert!(triangulate(&[[0.0, 0.0], [1.0, 0.0], [0.0, 0.0], [0.0, 1.0]]).is_err());
    }
}
