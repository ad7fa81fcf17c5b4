//! Triangulated two-phase domains: generators, region labels, submeshes
//! and the plain-text mesh format.

pub mod delaunay;
pub mod domain;
pub mod mesh;
pub mod regions;
pub mod text;

pub use domain::{build_domain, DomainSpec, Inclusion, Shape};
pub use mesh::{loop_length, BoundaryEdge, BoundaryTag, ElementGeometry, Mesh2D, Region};
pub use regions::{extract_submesh, NodeMap, RegionMap};
pub use text::{mesh_from_str, mesh_to_string, read_mesh, write_mesh};
