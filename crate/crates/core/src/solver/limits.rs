//! The limit problems: insulated B phase, the inner cascade problem and the
//! perfectly conducting A phase.

use std::collections::BTreeMap;

use super::bc::{BoundaryCondition, InnerMode};
use super::functional::Functional;
use super::newton::{minimize, SolveResult, SolveSettings};
use crate::energy::{EnergyDensity, Weight};
use crate::geometry::{Mesh2D, Region, RegionMap};
use crate::{Point, Result};

/// Labels every triangle with one region.
pub fn uniform_regions(mesh: &Mesh2D, region: Region) -> Result<RegionMap> {
    RegionMap::from_labels(mesh, vec![region; mesh.n_triangles()])
}

/// Minimizer of `∫_B β|∇v|^p` with `v = f` on the outer boundary and the
/// interface left free. `mesh_b` is the B submesh.
pub fn solve_limit_b_pei(
    mesh_b: &Mesh2D,
    beta: &Weight,
    p: f64,
    f: impl Fn(Point) -> f64,
    settings: &SolveSettings,
) -> Result<SolveResult> {
    let regions = uniform_regions(mesh_b, Region::B)?;
    let density = EnergyDensity::power_law(beta.clone(), p)?;
    let functional = Functional::new(mesh_b, &regions, &density, &density, 1.0, 0.0)?;
    let bc = BoundaryCondition::dirichlet(mesh_b, f, InnerMode::Natural)?;
    minimize(&functional, &bc, settings)
}

/// Minimizer of `∫_A α|∇v|^q` with the given values on the interface nodes
/// of the A submesh.
pub fn solve_limit_a_inner(
    mesh_a: &Mesh2D,
    alpha: &Weight,
    q: f64,
    interface_trace: &BTreeMap<usize, f64>,
    settings: &SolveSettings,
) -> Result<SolveResult> {
    let regions = uniform_regions(mesh_a, Region::A)?;
    let density = EnergyDensity::power_law(alpha.clone(), q)?;
    let functional = Functional::new(mesh_a, &regions, &density, &density, 1.0, 0.0)?;
    let bc = BoundaryCondition::dirichlet(mesh_a, |_| 0.0, InnerMode::Prescribed)?
        .with_inner_values(interface_trace.clone());
    minimize(&functional, &bc, settings)
}

/// Minimizer of `∫_B β|∇v|^p` over fields constant on each A component,
/// returned on the whole mesh.
pub fn solve_limit_pec(
    mesh: &Mesh2D,
    regions: &RegionMap,
    beta: &Weight,
    p: f64,
    f: impl Fn(Point) -> f64,
    settings: &SolveSettings,
) -> Result<SolveResult> {
    let density = EnergyDensity::power_law(beta.clone(), p)?;
    let functional = Functional::new(mesh, regions, &density, &density, 1.0, 0.0)?;
    let bc = BoundaryCondition::dirichlet(mesh, f, InnerMode::TiedConstant)?;
    minimize(&functional, &bc, settings)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_domain, extract_submesh, BoundaryTag, DomainSpec, Inclusion};

    #[test]
    fn constant_data_gives_constant_limits() {
        let (mesh, regions) = build_domain(&DomainSpec::annulus(10.0, 2)).unwrap();
        let s = SolveSettings::default();
        let (mesh_b, _) = extract_submesh(&mesh, &regions, Region::B).unwrap();
        let r = solve_limit_b_pei(&mesh_b, &Weight::Constant(1.0), 3.0, |_| 2.0, &s).unwrap();
        assert!(r.converged && r.energy.abs() < 1e-20);
        assert!(r.field.values.iter().all(|v| (v - 2.0).abs() < 1e-12));
        let (mesh_a, _) = extract_submesh(&mesh, &regions, Region::A).unwrap();
        let trace = mesh_a
            .boundary_nodes(BoundaryTag::Interface)
            .unwrap()
            .into_iter()
            .map(|i| (i, -1.5))
            .collect();
        let r = solve_limit_a_inner(&mesh_a, &Weight::Constant(1.0), 4.0, &trace, &s).unwrap();
        assert!(r.field.values.iter().all(|v| (v + 1.5).abs() < 1e-12));
        let r = solve_limit_pec(&mesh, &regions, &Weight::Constant(1.0), 2.0, |_| 0.0, &s).unwrap();
        assert!(r.field.values.iter().all(|v| v.abs() < 1e-14) && r.energy == 0.0);
    }

    #[test]
    fn linear_trace_has_linear_extension() {
        let (mesh, regions) = build_domain(&DomainSpec::annulus(10.0, 3)).unwrap();
        let (mesh_a, _) = extract_submesh(&mesh, &regions, Region::A).unwrap();
        let trace: BTreeMap<usize, f64> = mesh_a
            .boundary_nodes(BoundaryTag::Interface)
            .unwrap()
            .into_iter()
            .map(|i| (i, mesh_a.nodes[i][0]))
            .collect();
        let s = SolveSettings::default();
        let r = solve_limit_a_inner(&mesh_a, &Weight::Constant(1.0), 2.0, &trace, &s).unwrap();
        for (x, v) in mesh_a.nodes.iter().zip(&r.field.values) {
            assert!((v - x[0]).abs() < 1e-9);
        }
        // for q = 4 the minimizer beats the harmonic extension
        let r4 = solve_limit_a_inner(&mesh_a, &Weight::Constant(1.0), 4.0, &trace, &s).unwrap();
        assert!(r4.converged);
        let density = EnergyDensity::power_law(Weight::Constant(1.0), 4.0).unwrap();
        let labels = uniform_regions(&mesh_a, Region::A).unwrap();
        let f = Functional::new(&mesh_a, &labels, &density, &density, 1.0, 0.0).unwrap();
        assert!(r4.energy <= f.energy(&r.field.values).unwrap() * (1.0 + 1e-12));
    }

    #[test]
    fn symmetric_inclusions_get_opposite_constants() {
        let spec = DomainSpec::square_with_inclusions(
            2.0,
            vec![
                Inclusion {
                    center: [-0.9, 0.0],
                    radius: 0.5,
                },
                Inclusion {
                    center: [0.9, 0.0],
                    radius: 0.5,
                },
            ],
            0.12,
        );
        let (mesh, regions) = build_domain(&spec).unwrap();
        assert_eq!(regions.n_components, 2);
        let r = solve_limit_pec(
            &mesh,
            &regions,
            &Weight::Constant(1.0),
            2.0,
            |x| x[0],
            &SolveSettings::default(),
        )
        .unwrap();
        assert!(r.converged);
        let mut constants = vec![f64::NAN; 2];
        for (t, tri) in mesh.triangles.iter().enumerate() {
            if let Some(c) = regions.component_of_a[t] {
                constants[c] = r.field.values[tri[0]];
            }
        }
        let scale = constants[0].abs().max(constants[1].abs());
        assert!(scale > 0.1);
        assert!((constants[0] + constants[1]).abs() < 2e-2 * scale, "{constants:?}");
    }
}
