//! Result files: a JSON summary, nodal CSV and per-triangle CSV. Reals are
//! written with 17 significant digits.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::field::DiscreteField;
use super::newton::SolveResult;
use crate::geometry::{Mesh2D, RegionMap};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveSummary {
    pub energy: f64,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
}

impl From<&SolveResult> for SolveSummary {
    fn from(r: &SolveResult) -> Self {
        Self {
            energy: r.energy,
            iterations: r.iterations,
            residual: r.final_residual,
            converged: r.converged,
        }
    }
}

/// `node,x1,x2,value`.
pub fn field_csv(mesh: &Mesh2D, field: &DiscreteField) -> Result<String> {
    field.check_len(mesh)?;
    let mut s = String::from("node,x1,x2,value\n");
    for (i, (x, v)) in mesh.nodes.iter().zip(&field.values).enumerate() {
        let _ = writeln!(s, "{i},{:.16e},{:.16e},{:.16e}", x[0], x[1], v);
    }
    Ok(s)
}

/// `triangle,c1,c2,grad_mag,region`.
pub fn element_csv(mesh: &Mesh2D, regions: &RegionMap, grad_mag: &[f64]) -> Result<String> {
    if grad_mag.len() != mesh.n_triangles() || regions.element_region.len() != mesh.n_triangles() {
        return Err(Error::Shape(format!(
            "{} gradient values and {} labels for {} triangles",
            grad_mag.len(),
            regions.element_region.len(),
            mesh.n_triangles()
        )));
    }
    let mut s = String::from("triangle,c1,c2,grad_mag,region\n");
    for (t, g) in grad_mag.iter().enumerate() {
        let c = mesh.centroid(t);
        let _ = writeln!(
            s,
            "{t},{:.16e},{:.16e},{:.16e},{}",
            c[0],
            c[1],
            g,
            regions.region(t).as_str()
        );
    }
    Ok(s)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    write_text(path, &(text + "\n"))
}

/// Writes `<stem>.json`, `<stem>_field.csv` and `<stem>_elements.csv` into
/// `dir` and returns their paths.
pub fn export_solve(
    dir: &Path,
    stem: &str,
    mesh: &Mesh2D,
    regions: &RegionMap,
    result: &SolveResult,
) -> Result<Vec<std::path::PathBuf>> {
    let json = dir.join(format!("{stem}.json"));
    let field = dir.join(format!("{stem}_field.csv"));
    let elements = dir.join(format!("{stem}_elements.csv"));
    write_json(&json, &SolveSummary::from(result))?;
    write_text(&field, &field_csv(mesh, &result.field)?)?;
    write_text(&elements, &element_csv(mesh, regions, &result.element_grad_mag)?)?;
    Ok(vec![json, field, elements])
}
