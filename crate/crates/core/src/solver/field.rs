use serde::{Deserialize, Serialize};

use crate::geometry::Mesh2D;
use crate::{Error, Point, Result};

/// Nodal values of a piecewise-linear potential.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscreteField {
    pub values: Vec<f64>,
}

impl DiscreteField {
    pub fn new(mesh: &Mesh2D, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.n_nodes() {
            return Err(Error::Shape(format!(
                "field has {} values for {} nodes",
                values.len(),
                mesh.n_nodes()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("non-finite field value at node {i}")));
        }
        Ok(Self { values })
    }

    /// Nodal interpolant of `f`.
    pub fn interpolate(mesh: &Mesh2D, f: impl Fn(Point) -> f64) -> Self {
        Self {
            values: mesh.nodes.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn zeros(mesh: &Mesh2D) -> Self {
        Self {
            values: vec![0.0; mesh.n_nodes()],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub(crate) fn check_len(&self, mesh: &Mesh2D) -> Result<()> {
        if self.values.len() != mesh.n_nodes() {
            return Err(Error::Shape(format!(
                "field has {} values for {} nodes",
                self.values.len(),
                mesh.n_nodes()
            )));
        }
        Ok(())
    }
}
