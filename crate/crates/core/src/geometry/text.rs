//! Plain-text mesh format.
//!
//! ```text
//! nodes N triangles T edges E
//! x1 x2                 (N lines)
//! i j k region          (T lines, region A or B)
//! i j tag               (E lines, tag outer, inner or interface)
//! ```
//!
//! Coordinates are written in shortest round-trip form, so reading back a
//! written mesh reproduces it bit for bit.

use std::fmt::Write as _;
use std::path::Path;

use super::mesh::{BoundaryEdge, BoundaryTag, Mesh2D, Region};
use super::regions::RegionMap;
use crate::{Error, Result};

pub fn mesh_to_string(mesh: &Mesh2D, regions: &RegionMap) -> String {
    let mut s = String::with_capacity(48 * (mesh.n_nodes() + mesh.n_triangles()));
    let _ = writeln!(
        s,
        "nodes {} triangles {} edges {}",
        mesh.n_nodes(),
        mesh.n_triangles(),
        mesh.boundary_edges.len()
    );
    for p in &mesh.nodes {
        let _ = writeln!(s, "{} {}", p[0], p[1]);
    }
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let _ = writeln!(s, "{} {} {} {}", tri[0], tri[1], tri[2], regions.region(t).as_str());
    }
    for e in &mesh.boundary_edges {
        let _ = writeln!(s, "{} {} {}", e.nodes[0], e.nodes[1], e.tag.as_str());
    }
    s
}

fn bad(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::Mesh(format!("line {line}: {msg}"))
}

fn num<T: std::str::FromStr>(tok: Option<&str>, line: usize) -> Result<T> {
    let tok = tok.ok_or_else(|| bad(line, "missing field"))?;
    tok.parse().map_err(|_| bad(line, format!("cannot parse `{tok}`")))
}

/// Parses and validates a mesh; A components are recomputed.
pub fn mesh_from_str(text: &str) -> Result<(Mesh2D, RegionMap)> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (ln, header) = lines.next().ok_or_else(|| Error::Mesh("empty mesh file".into()))?;
    let h: Vec<&str> = header.split_whitespace().collect();
    if h.len() != 6 || h[0] != "nodes" || h[2] != "triangles" || h[4] != "edges" {
        return Err(bad(ln, "expected header `nodes N triangles T edges E`"));
    }
    let n: usize = num(Some(h[1]), ln)?;
    let t: usize = num(Some(h[3]), ln)?;
    let e: usize = num(Some(h[5]), ln)?;
    let mut next = |what: &str| {
        lines
            .next()
            .ok_or_else(|| Error::Mesh(format!("file ends before all {what}")))
    };
    let mut nodes = Vec::with_capacity(n);
    for _ in 0..n {
        let (ln, l) = next("nodes")?;
        let mut it = l.split_whitespace();
        nodes.push([num(it.next(), ln)?, num(it.next(), ln)?]);
    }
    let mut triangles = Vec::with_capacity(t);
    let mut labels = Vec::with_capacity(t);
    for _ in 0..t {
        let (ln, l) = next("triangles")?;
        let mut it = l.split_whitespace();
        triangles.push([num(it.next(), ln)?, num(it.next(), ln)?, num(it.next(), ln)?]);
        labels.push(match it.next() {
            Some("A") => Region::A,
            Some("B") => Region::B,
            other => return Err(bad(ln, format!("bad region {other:?}"))),
        });
    }
    let mut boundary_edges = Vec::with_capacity(e);
    for _ in 0..e {
        let (ln, l) = next("edges")?;
        let mut it = l.split_whitespace();
        let nodes = [num(it.next(), ln)?, num(it.next(), ln)?];
        let tag = BoundaryTag::parse(it.next().ok_or_else(|| bad(ln, "missing tag"))?)?;
        boundary_edges.push(BoundaryEdge { nodes, tag });
    }
    if let Some((ln, _)) = lines.next() {
        return Err(bad(ln, "trailing content"));
    }
    let mesh = Mesh2D {
        nodes,
        triangles,
        boundary_edges,
    };
    mesh.validate()?;
    let regions = RegionMap::from_labels(&mesh, labels)?;
    regions.validate(&mesh)?;
    Ok((mesh, regions))
}

pub fn write_mesh(path: &Path, mesh: &Mesh2D, regions: &RegionMap) -> Result<()> {
    std::fs::write(path, mesh_to_string(mesh, regions)).map_err(|e| Error::io(path, e))
}

pub fn read_mesh(path: &Path) -> Result<(Mesh2D, RegionMap)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    mesh_from_str(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::domain::{build_domain, DomainSpec};

    #[test]
    fn round_trip_is_exact() {
        let (mesh, regions) = build_domain(&DomainSpec::annulus(10.0, 4)).unwrap();
        let text = mesh_to_string(&mesh, &regions);
        assert!(text.starts_with(&format!(
            "nodes {} triangles {} edges {}",
            mesh.n_nodes(),
            mesh.n_triangles(),
            mesh.boundary_edges.len()
        )));
        let (m2, r2) = mesh_from_str(&text).unwrap();
        assert_eq!(m2, mesh);
        assert_eq!(r2, regions);
    }

    #[test]
    fn rejects_malformed() {
        assert!(mesh_from_str("").is_err());
        assert!(mesh_from_str("nodes 1 triangles 0").is_err());
        let text = "nodes 3 triangles 1 edges 3\n0 0\n1 0\n0 1\n0 1 2 C\n0 1 outer\n1 2 outer\n2 0 outer\n";
        assert!(mesh_from_str(text).is_err());
        let text = "nodes 3 triangles 1 edges 3\n0 0\n1 0\n0 1\n0 1 2 B\n0 1 outer\n1 2 outer\n2 0 side\n";
        assert!(matches!(mesh_from_str(text), Err(Error::Tag(_))));
        let ok = "nodes 3 triangles 1 edges 3\n0 0\n1 0\n0 1\n0 1 2 B\n0 1 outer\n1 2 outer\n2 0 outer\n";
        assert!(mesh_from_str(ok).is_ok());
    }
}
