//! Primal-dual points `w = (x₁, …, x_p, y, λ)` and their flat representation.

use crate::error::{Error, Result};
use crate::numeric::Vector;
use crate::problem::ProblemSpec;

/// Offsets of each component inside a flat `w`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    block_dims: Vec<usize>,
    y_dim: usize,
    rows: usize,
}

impl Layout {
    pub fn new(spec: &ProblemSpec) -> Self {
        Layout {
            block_dims: spec.block_dims(),
            y_dim: spec.y_dim(),
            rows: spec.rows(),
        }
    }

    pub fn block_dims(&self) -> &[usize] {
        &self.block_dims
    }

    pub fn block_offset(&self, i: usize) -> usize {
        self.block_dims[..i].iter().sum()
    }

    /// Total length of all x blocks.
    pub fn x_len(&self) -> usize {
        self.block_dims.iter().sum()
    }

    pub fn y_offset(&self) -> usize {
        self.x_len()
    }

    pub fn y_dim(&self) -> usize {
        self.y_dim
    }

    pub fn lambda_offset(&self) -> usize {
        self.x_len() + self.y_dim
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn len(&self) -> usize {
        self.x_len() + self.y_dim + self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Length of the `u = (x, y)` part.
    pub fn primal_len(&self) -> usize {
        self.x_len() + self.y_dim
    }

    pub fn split(&self, w: &Vector) -> Result<Point> {
        if w.len() != self.len() {
            return Err(Error::dim("flat point", self.len(), w.len()));
        }
        let x = self
            .block_dims
            .iter()
            .scan(0, |off, &m| {
                let start = *off;
                *off += m;
                Some(w.rows(start, m).into_owned())
            })
            .collect();
        Ok(Point {
            x,
            y: w.rows(self.y_offset(), self.y_dim).into_owned(),
            lambda: w.rows(self.lambda_offset(), self.rows).into_owned(),
        })
    }
}

/// A structured primal-dual point.
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    pub x: Vec<Vector>,
    pub y: Vector,
    pub lambda: Vector,
}

impl Point {
    pub fn flatten(&self) -> Vector {
        let parts: Vec<f64> = self
            .x
            .iter()
            .flat_map(|xi| xi.iter().copied())
            .chain(self.y.iter().copied())
            .chain(self.lambda.iter().copied())
            .collect();
        Vector::from_vec(parts)
    }

    /// Flat `u = (x, y)` without the multiplier.
    pub fn flatten_primal(&self) -> Vector {
        let parts: Vec<f64> = self
            .x
            .iter()
            .flat_map(|xi| xi.iter().copied())
            .chain(self.y.iter().copied())
            .collect();
        Vector::from_vec(parts)
    }
}
