//! The discrete normalized energy `λ^{-p₀} Σ_T area·Q(c_T, λ|∇v|_T)` and its
//! first and second derivatives with respect to nodal values.

use rayon::prelude::*;

use super::field::DiscreteField;
use crate::energy::EnergyDensity;
use crate::geometry::{Mesh2D, Region, RegionMap};
use crate::{Error, Point, Result};

const CHUNK: usize = 2048;

#[derive(Clone, Debug)]
struct Element {
    nodes: [usize; 3],
    grads: [[f64; 2]; 3],
    /// `area·θ(c_T)·λ^{-p₀}`.
    coef: f64,
    centroid: Point,
    region: Region,
}

/// Energy functional on a fixed mesh, densities, `λ` and normalization.
#[derive(Clone, Debug)]
pub struct Functional<'a> {
    mesh: &'a Mesh2D,
    regions: &'a RegionMap,
    density_b: &'a EnergyDensity,
    density_a: &'a EnergyDensity,
    lambda: f64,
    normalize_p: f64,
    elements: Vec<Element>,
}

impl<'a> Functional<'a> {
    pub fn new(
        mesh: &'a Mesh2D,
        regions: &'a RegionMap,
        density_b: &'a EnergyDensity,
        density_a: &'a EnergyDensity,
        lambda: f64,
        normalize_p: f64,
    ) -> Result<Self> {
        if regions.element_region.len() != mesh.n_triangles() {
            return Err(Error::Shape(format!(
                "{} region labels for {} triangles",
                regions.element_region.len(),
                mesh.n_triangles()
            )));
        }
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::Parameter(format!("lambda must be positive, got {lambda}")));
        }
        if !normalize_p.is_finite() {
            return Err(Error::Parameter(format!("normalization exponent {normalize_p}")));
        }
        let scale = lambda.powf(-normalize_p);
        let elements = (0..mesh.n_triangles())
            .map(|t| {
                let g = mesh.element_geometry(t);
                let centroid = mesh.centroid(t);
                let region = regions.region(t);
                let density = match region {
                    Region::B => density_b,
                    Region::A => density_a,
                };
                if !density.support().contains(centroid) {
                    return Err(Error::Region(centroid[0], centroid[1]));
                }
                let weight = density.weight().at(centroid);
                if !weight.is_finite() {
                    return Err(Error::Domain(format!(
                        "weight is not finite at ({}, {})",
                        centroid[0], centroid[1]
                    )));
                }
                Ok(Element {
                    nodes: mesh.triangles[t],
                    grads: g.grads,
                    coef: g.area * weight * scale,
                    centroid,
                    region,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            mesh,
            regions,
            density_b,
            density_a,
            lambda,
            normalize_p,
            elements,
        })
    }

    pub fn mesh(&self) -> &'a Mesh2D {
        self.mesh
    }

    pub fn regions(&self) -> &'a RegionMap {
        self.regions
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn normalize_p(&self) -> f64 {
        self.normalize_p
    }

    pub fn density(&self, region: Region) -> &'a EnergyDensity {
        match region {
            Region::B => self.density_b,
            Region::A => self.density_a,
        }
    }

    /// Same mesh and densities at another `λ`.
    pub fn at_lambda(&self, lambda: f64) -> Result<Self> {
        Self::new(
            self.mesh,
            self.regions,
            self.density_b,
            self.density_a,
            lambda,
            self.normalize_p,
        )
    }

    fn element_gradient(e: &Element, v: &[f64]) -> [f64; 2] {
        let mut g = [0.0; 2];
        for k in 0..3 {
            g[0] += v[e.nodes[k]] * e.grads[k][0];
            g[1] += v[e.nodes[k]] * e.grads[k][1];
        }
        g
    }

    fn check(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.mesh.n_nodes() {
            return Err(Error::Shape(format!(
                "field has {} values for {} nodes",
                v.len(),
                self.mesh.n_nodes()
            )));
        }
        Ok(())
    }

    fn element_energy(&self, e: &Element, v: &[f64]) -> f64 {
        let g = Self::element_gradient(e, v);
        let s = g[0].hypot(g[1]);
        e.coef * self.density(e.region).base_q(e.centroid, self.lambda * s)
    }

    /// Per-element contributions to the energy.
    pub fn element_energies(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.check(v)?;
        Ok(self.element_energies_unchecked(v))
    }

    fn element_energies_unchecked(&self, v: &[f64]) -> Vec<f64> {
        self.elements
            .par_chunks(CHUNK)
            .flat_map_iter(|chunk| chunk.iter().map(|e| self.element_energy(e, v)))
            .collect()
    }

    pub fn energy(&self, v: &[f64]) -> Result<f64> {
        self.check(v)?;
        Ok(self.energy_unchecked(v))
    }

    pub(crate) fn energy_unchecked(&self, v: &[f64]) -> f64 {
        self.element_energies_unchecked(v).iter().sum()
    }

    /// Energy restricted to one region.
    pub fn energy_on(&self, v: &[f64], region: Region) -> Result<f64> {
        let parts = self.element_energies(v)?;
        Ok(self
            .elements
            .iter()
            .zip(parts)
            .filter(|(e, _)| e.region == region)
            .map(|(_, x)| x)
            .sum())
    }

    /// `|∇v|` per triangle.
    pub fn element_grad_mags(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.check(v)?;
        Ok(self
            .elements
            .iter()
            .map(|e| {
                let g = Self::element_gradient(e, v);
                g[0].hypot(g[1])
            })
            .collect())
    }

    /// Gradient with respect to nodal values, with `√(|∇v|²+ε²)` in the
    /// denominators.
    pub fn gradient(&self, v: &[f64], eps_reg: f64) -> Result<Vec<f64>> {
        self.check(v)?;
        Ok(self.gradient_unchecked(v, eps_reg))
    }

    pub(crate) fn gradient_unchecked(&self, v: &[f64], eps_reg: f64) -> Vec<f64> {
        let local: Vec<[f64; 3]> = self
            .elements
            .par_chunks(CHUNK)
            .flat_map_iter(|chunk| {
                chunk.iter().map(|e| {
                    let g = Self::element_gradient(e, v);
                    let s = g[0].hypot(g[1]);
                    let se = (s * s + eps_reg * eps_reg).sqrt();
                    let j = self.density(e.region).base_j(e.centroid, self.lambda * s);
                    let c = if se > 0.0 { e.coef * self.lambda * j / se } else { 0.0 };
                    let mut out = [0.0; 3];
                    for k in 0..3 {
                        out[k] = c * (g[0] * e.grads[k][0] + g[1] * e.grads[k][1]);
                    }
                    out
                })
            })
            .collect();
        let mut grad = vec![0.0; v.len()];
        for (e, l) in self.elements.iter().zip(&local) {
            for k in 0..3 {
                grad[e.nodes[k]] += l[k];
            }
        }
        grad
    }

    /// Element Hessians of the regularized energy, each a 3×3 block on the
    /// element's nodes. The two eigenvalues of the gradient-space Hessian
    /// (along and across `∇v`) are floored at `floor_rel` times the largest
    /// one found on the mesh.
    pub(crate) fn element_hessians(&self, v: &[f64], eps_reg: f64, floor_rel: f64) -> Vec<[[f64; 3]; 3]> {
        let lambda = self.lambda;
        let curv: Vec<([f64; 2], f64, f64)> = self
            .elements
            .par_chunks(CHUNK)
            .flat_map_iter(|chunk| {
                chunk.iter().map(|e| {
                    let g = Self::element_gradient(e, v);
                    let s = g[0].hypot(g[1]);
                    let se = (s * s + eps_reg * eps_reg).sqrt();
                    let d = self.density(e.region);
                    let radial = lambda * lambda * d.base_dj(e.centroid, lambda * se);
                    let tangential = if s > 0.0 {
                        lambda * d.base_j(e.centroid, lambda * s) / se
                    } else {
                        radial
                    };
                    let dir = if s > 0.0 { [g[0] / s, g[1] / s] } else { [1.0, 0.0] };
                    (dir, radial, tangential)
                })
            })
            .collect();
        let max = curv
            .iter()
            .flat_map(|c| [c.1, c.2])
            .filter(|x| x.is_finite())
            .fold(0.0, f64::max);
        let floor = floor_rel * max;
        self.elements
            .par_iter()
            .zip(curv.par_iter())
            .map(|(e, &(dir, radial, tangential))| {
                let r = e.coef * if radial.is_finite() { radial.max(floor) } else { floor };
                let t = e.coef
                    * if tangential.is_finite() {
                        tangential.max(floor)
                    } else {
                        floor
                    };
                // M = t·I + (r − t)·d dᵀ
                let m = [
                    [t + (r - t) * dir[0] * dir[0], (r - t) * dir[0] * dir[1]],
                    [(r - t) * dir[0] * dir[1], t + (r - t) * dir[1] * dir[1]],
                ];
                let mut h = [[0.0; 3]; 3];
                for a in 0..3 {
                    let ga = e.grads[a];
                    let mg = [m[0][0] * ga[0] + m[0][1] * ga[1], m[1][0] * ga[0] + m[1][1] * ga[1]];
                    for b in 0..3 {
                        h[a][b] = mg[0] * e.grads[b][0] + mg[1] * e.grads[b][1];
                    }
                }
                h
            })
            .collect()
    }

    pub(crate) fn element_nodes(&self) -> impl Iterator<Item = [usize; 3]> + '_ {
        self.elements.iter().map(|e| e.nodes)
    }
}

/// `G^λ(v)` on a mesh with region-wise densities.
pub fn assemble_energy(
    mesh: &Mesh2D,
    regions: &RegionMap,
    energy_b: &EnergyDensity,
    energy_a: &EnergyDensity,
    field: &DiscreteField,
    lambda: f64,
    normalize_p: f64,
) -> Result<f64> {
    Functional::new(mesh, regions, energy_b, energy_a, lambda, normalize_p)?.energy(&field.values)
}

/// Gradient of `G^λ` with respect to every nodal value.
pub fn assemble_gradient(
    mesh: &Mesh2D,
    regions: &RegionMap,
    energy_b: &EnergyDensity,
    energy_a: &EnergyDensity,
    field: &DiscreteField,
    lambda: f64,
    normalize_p: f64,
) -> Result<Vec<f64>> {
    Functional::new(mesh, regions, energy_b, energy_a, lambda, normalize_p)?
        .gradient(&field.values, super::SolveSettings::default().eps_reg)
}
