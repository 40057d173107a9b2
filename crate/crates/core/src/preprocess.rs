//! Column standardization fitted on training rows only.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

const STD_FLOOR: f64 = 1e-12;

/// Per-column mean/std pair. Constant columns store std = 1 so transforms
/// stay finite and map the column to zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

impl Scaler {
    /// Population mean and std per column. Requires at least two rows.
    pub fn fit(x: &Matrix) -> Result<Scaler> {
        if x.rows() < 2 {
            return Err(Error::InvalidInput(format!(
                "scaler fit needs >= 2 rows, got {}",
                x.rows()
            )));
        }
        let n = x.rows() as f64;
        let cols = x.cols();
        let mut means = vec![0.0; cols];
        for row in x.iter_rows() {
            for (m, v) in means.iter_mut().zip(row) {
                *m += v;
            }
        }
        for m in &mut means {
            *m /= n;
        }
        let mut vars = vec![0.0; cols];
        for row in x.iter_rows() {
            for ((s, v), m) in vars.iter_mut().zip(row).zip(&means) {
                let d = v - m;
                *s += d * d;
            }
        }
        let stds = vars
            .iter()
            .map(|&s| {
                let std = (s / n).sqrt();
                if std < STD_FLOOR {
                    1.0
                } else {
                    std
                }
            })
            .collect();
        Ok(Scaler { means, stds })
    }

    pub fn width(&self) -> usize {
        self.means.len()
    }

    pub fn transform(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.width() {
            return Err(Error::Shape {
                expected: self.width(),
                got: x.cols(),
            });
        }
        let mut out = x.clone();
        for i in 0..out.rows() {
            let row = out.row_mut(i);
            for (j, v) in row.iter_mut().enumerate() {
                *v = (*v - self.means[j]) / self.stds[j];
            }
        }
        Ok(out)
    }

    pub fn inverse_transform(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.width() {
            return Err(Error::Shape {
                expected: self.width(),
                got: x.cols(),
            });
        }
        let mut out = x.clone();
        for i in 0..out.rows() {
            let row = out.row_mut(i);
            for (j, v) in row.iter_mut().enumerate() {
                *v = *v * self.stds[j] + self.means[j];
            }
        }
        Ok(out)
    }
}
