//! Damped Newton minimization over the free unknowns.

use serde::{Deserialize, Serialize};

use super::bc::{BoundaryCondition, Dof, DofMap};
use super::field::DiscreteField;
use super::functional::Functional;
use super::sparse::{Symbolic, SymmetricPattern};
use crate::energy::{EnergyDensity, Weight};
use crate::{Error, Result};

const NONE: usize = usize::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Armijo {
    pub c: f64,
    pub shrink: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolveSettings {
    /// Relative stationarity tolerance; the solve stops once the reduced
    /// gradient ∞-norm is at most `grad_tol·(‖g₀‖∞ + 1)`.
    pub grad_tol: f64,
    pub max_iter: usize,
    pub eps_reg: f64,
    pub armijo: Armijo,
    /// Relative floor on the curvatures of the element Hessians.
    pub hessian_floor: f64,
}

impl Default for SolveSettings {
    fn default() -> Self {
        Self {
            grad_tol: 1e-10,
            max_iter: 200,
            eps_reg: 1e-10,
            armijo: Armijo { c: 1e-4, shrink: 0.5 },
            hessian_floor: 1e-12,
        }
    }
}

impl SolveSettings {
    pub fn validate(&self) -> Result<()> {
        let ok = self.grad_tol > 0.0
            && self.max_iter > 0
            && self.eps_reg > 0.0
            && self.hessian_floor > 0.0
            && self.armijo.c > 0.0
            && self.armijo.c <= 0.5
            && self.armijo.shrink > 0.0
            && self.armijo.shrink < 1.0;
        if !ok {
            return Err(Error::Parameter(format!("invalid solver settings {self:?}")));
        }
        Ok(())
    }
}

/// What happened along the way.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveDiagnostics {
    /// Steps taken along the scaled negative gradient after a failed
    /// Newton factorization or line search.
    pub gradient_steps: usize,
    /// Newton steps accepted because they lowered the residual when the
    /// energy decrease was below rounding.
    pub residual_steps: usize,
    pub initial_residual: f64,
    pub initial_energy: f64,
    pub message: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub field: DiscreteField,
    pub energy: f64,
    pub element_grad_mag: Vec<f64>,
    pub iterations: usize,
    pub final_residual: f64,
    /// Absolute stationarity tolerance that was applied.
    pub tolerance: f64,
    pub converged: bool,
    pub diagnostics: SolveDiagnostics,
}

/// Sparsity of the reduced Hessian and the slots each element writes to.
struct System {
    pattern: SymmetricPattern,
    symbolic: Symbolic,
    /// Per element: slot and multiplicity for local pairs
    /// (0,0) (1,1) (2,2) (0,1) (0,2) (1,2).
    slots: Vec<[(usize, f64); 6]>,
    diag: Vec<usize>,
}

const PAIRS: [(usize, usize); 6] = [(0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2)];

impl System {
    fn new(f: &Functional, dofs: &DofMap) -> Self {
        let mut pairs = Vec::new();
        for nodes in f.element_nodes() {
            let d = nodes.map(|i| dofs.free(i));
            for &(a, b) in &PAIRS[3..] {
                if let (Some(x), Some(y)) = (d[a], d[b]) {
                    if x != y {
                        pairs.push((x, y));
                    }
                }
            }
        }
        let pattern = SymmetricPattern::new(dofs.n_free, &pairs, &dofs.coords);
        let symbolic = pattern.analyze();
        let slots = f
            .element_nodes()
            .map(|nodes| {
                let d = nodes.map(|i| dofs.free(i));
                PAIRS.map(|(a, b)| match (d[a], d[b]) {
                    (Some(x), Some(y)) => {
                        let mult = if a != b && x == y { 2.0 } else { 1.0 };
                        (pattern.position(x, y).unwrap(), mult)
                    }
                    _ => (NONE, 0.0),
                })
            })
            .collect();
        let diag = (0..dofs.n_free).map(|k| pattern.position(k, k).unwrap()).collect();
        Self {
            pattern,
            symbolic,
            slots,
            diag,
        }
    }

    fn assemble(&self, hessians: &[[[f64; 3]; 3]]) -> Vec<f64> {
        let mut values = vec![0.0; self.pattern.nnz()];
        for (slots, h) in self.slots.iter().zip(hessians) {
            for (&(pos, mult), &(a, b)) in slots.iter().zip(&PAIRS) {
                if pos != NONE {
                    values[pos] += mult * h[a][b];
                }
            }
        }
        values
    }

    /// Solves `H d = −g`; `None` if the factorization fails.
    fn newton_direction(&self, values: &[f64], g: &[f64]) -> Option<Vec<f64>> {
        let factor = self.pattern.factorize(&self.symbolic, values).ok()?;
        let rhs: Vec<f64> = g.iter().map(|x| -x).collect();
        let d = self.pattern.solve(&factor, &rhs);
        d.iter().all(|x| x.is_finite()).then_some(d)
    }

    fn scaled_gradient(&self, values: &[f64], g: &[f64]) -> Vec<f64> {
        g.iter()
            .zip(&self.diag)
            .map(|(gi, &p)| {
                let h = values[p];
                if h > 0.0 && h.is_finite() {
                    -gi / h
                } else {
                    -gi
                }
            })
            .collect()
    }
}

fn inf_norm(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimizer of the quadratic `∫|∇v|²` in the same affine set.
fn linear_warm_start(f: &Functional, dofs: &DofMap, system: &System) -> Vec<f64> {
    let quadratic = EnergyDensity::power_law(Weight::Constant(1.0), 2.0).expect("valid exponent");
    let lin = Functional::new(f.mesh(), f.regions(), &quadratic, &quadratic, 1.0, 0.0).expect("same mesh");
    let x0 = vec![0.0; dofs.n_free];
    let v0 = dofs.expand(&x0);
    let g = dofs.reduce(&lin.gradient_unchecked(&v0, 0.0));
    let values = system.assemble(&lin.element_hessians(&v0, 0.0, 0.0));
    system.newton_direction(&values, &g).unwrap_or(x0)
}

/// Minimizes the functional from the linear warm start.
pub fn minimize(f: &Functional, bc: &BoundaryCondition, settings: &SolveSettings) -> Result<SolveResult> {
    minimize_from(f, bc, settings, None)
}

/// Minimizes the functional; free values of `initial` (nodal) seed the
/// iteration when given.
pub fn minimize_from(
    f: &Functional,
    bc: &BoundaryCondition,
    settings: &SolveSettings,
    initial: Option<&[f64]>,
) -> Result<SolveResult> {
    settings.validate()?;
    let mesh = f.mesh();
    let dofs = DofMap::new(mesh, f.regions(), bc)?;
    let system = System::new(f, &dofs);
    let mut x = match initial {
        Some(v) => {
            DiscreteField::new(mesh, v.to_vec())?;
            dofs.restrict(v)
        }
        None => linear_warm_start(f, &dofs, &system),
    };
    let mut v = dofs.expand(&x);
    let mut energy = f.energy_unchecked(&v);
    let mut diag = SolveDiagnostics {
        initial_energy: energy,
        ..Default::default()
    };
    let mut g = dofs.reduce(&f.gradient_unchecked(&v, settings.eps_reg));
    let mut residual = inf_norm(&g);
    diag.initial_residual = residual;
    let tolerance = settings.grad_tol * (residual + 1.0);
    let mut iterations = 0;
    let mut converged = residual <= tolerance || dofs.n_free == 0;
    while !converged && iterations < settings.max_iter {
        iterations += 1;
        let values = system.assemble(&f.element_hessians(&v, settings.eps_reg, settings.hessian_floor));
        let newton = system.newton_direction(&values, &g).filter(|d| dot(d, &g) < 0.0);
        let mut accepted = false;
        if let Some(d) = &newton {
            if let Some(step) = line_search(f, &dofs, settings, &x, d, &g, energy) {
                (x, v, energy) = step;
                accepted = true;
            } else {
                // energy differences below rounding: accept the full step if it
                // lowers the residual
                let xt: Vec<f64> = x.iter().zip(d).map(|(a, b)| a + b).collect();
                let vt = dofs.expand(&xt);
                let gt = dofs.reduce(&f.gradient_unchecked(&vt, settings.eps_reg));
                let et = f.energy_unchecked(&vt);
                let slack = 1e-10 * energy.abs().max(f64::MIN_POSITIVE);
                if inf_norm(&gt) < residual && et <= energy + slack {
                    diag.residual_steps += 1;
                    (x, v, energy) = (xt, vt, et);
                    accepted = true;
                }
            }
        }
        if !accepted {
            let d = system.scaled_gradient(&values, &g);
            match line_search(f, &dofs, settings, &x, &d, &g, energy) {
                Some(step) => {
                    diag.gradient_steps += 1;
                    (x, v, energy) = step;
                }
                None => {
                    diag.message = Some(format!(
                        "line search stalled at residual {residual:e} (tolerance {tolerance:e})"
                    ));
                    break;
                }
            }
        }
        g = dofs.reduce(&f.gradient_unchecked(&v, settings.eps_reg));
        residual = inf_norm(&g);
        converged = residual <= tolerance;
    }
    if !converged && diag.message.is_none() {
        diag.message = Some(format!(
            "no convergence in {} iterations, residual {residual:e} (tolerance {tolerance:e})",
            settings.max_iter
        ));
    }
    let element_grad_mag = f.element_grad_mags(&v)?;
    Ok(SolveResult {
        field: DiscreteField { values: v },
        energy,
        element_grad_mag,
        iterations,
        final_residual: residual,
        tolerance,
        converged,
        diagnostics: diag,
    })
}

type Step = (Vec<f64>, Vec<f64>, f64);

/// Armijo backtracking with a rounding allowance on the energy comparison.
fn line_search(
    f: &Functional,
    dofs: &DofMap,
    settings: &SolveSettings,
    x: &[f64],
    d: &[f64],
    g: &[f64],
    energy: f64,
) -> Option<Step> {
    let slope = dot(g, d);
    if !(slope < 0.0) {
        return None;
    }
    let slack = 4.0 * f64::EPSILON * energy.abs();
    let mut alpha = 1.0;
    while alpha > 1e-12 {
        let xt: Vec<f64> = x.iter().zip(d).map(|(a, b)| a + alpha * b).collect();
        let vt = dofs.expand(&xt);
        let et = f.energy_unchecked(&vt);
        if et.is_finite() && et <= energy + settings.armijo.c * alpha * slope + slack {
            return Some((xt, vt, et));
        }
        alpha *= settings.armijo.shrink;
    }
    None
}

/// Reduced gradient of the functional at nodal values `v` under `bc`.
pub fn reduced_gradient(f: &Functional, bc: &BoundaryCondition, v: &[f64], eps_reg: f64) -> Result<Vec<f64>> {
    let dofs = DofMap::new(f.mesh(), f.regions(), bc)?;
    Ok(dofs.reduce(&f.gradient(v, eps_reg)?))
}

/// Fixed nodal values are honoured by `v`.
pub fn satisfies(bc: &BoundaryCondition, f: &Functional, v: &[f64]) -> Result<bool> {
    let dofs = DofMap::new(f.mesh(), f.regions(), bc)?;
    Ok(dofs.node_dof.iter().zip(v).all(|(d, &x)| match *d {
        Dof::Fixed(val) => val == x,
        Dof::Free(_) => true,
    }))
}
