use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{Dimension, ScalarField};
use crate::error::{invalid, Error, Result};

/// Smooth phase map R^N → R.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Phase {
    Zero,
    /// x ↦ k·x
    Linear { wavevector: Vec<f64> },
}

impl Phase {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Phase::Zero => 0.0,
            Phase::Linear { wavevector } => wavevector.iter().zip(x).map(|(k, v)| k * v).sum(),
        }
    }

    /// sup |∇phase|
    pub fn gradient_bound(&self) -> f64 {
        match self {
            Phase::Zero => 0.0,
            Phase::Linear { wavevector } => wavevector.iter().map(|k| k * k).sum::<f64>().sqrt(),
        }
    }
}

/// u(x) = modulus(x)·exp(i·phase(x)).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexField {
    modulus: ScalarField,
    phase: Phase,
}

impl ComplexField {
    pub fn new(modulus: ScalarField, phase: Phase) -> Result<Self> {
        if let Phase::Linear { wavevector } = &phase {
            if wavevector.len() != modulus.dim().n() {
                return Err(Error::DimensionMismatch {
                    expected: modulus.dim().n(),
                    got: wavevector.len(),
                });
            }
        }
        Ok(ComplexField { modulus, phase })
    }

    pub fn real(modulus: ScalarField) -> Self {
        ComplexField {
            modulus,
            phase: Phase::Zero,
        }
    }

    pub fn dim(&self) -> Dimension {
        self.modulus.dim()
    }

    pub fn modulus(&self) -> &ScalarField {
        &self.modulus
    }

    pub fn phase(&self) -> &Phase {
        &self.phase
    }

    pub fn eval(&self, x: &[f64]) -> Result<Complex64> {
        let m = self.modulus.eval(x)?;
        Ok(self.at(m, x))
    }

    pub(crate) fn at(&self, m: f64, x: &[f64]) -> Complex64 {
        match self.phase {
            Phase::Zero => Complex64::new(m, 0.0),
            _ => Complex64::from_polar(m, self.phase.eval(x)),
        }
    }

    /// Lipschitz bound of x ↦ u(x) as a map into C.
    pub fn lipschitz_bound(&self) -> f64 {
        let g = self.phase.gradient_bound();
        let l = self.modulus.lipschitz_bound();
        if g == 0.0 {
            l
        } else {
            l + self.modulus.sup_bound() * g
        }
    }
}

/// Magnetic vector potential A: R^N → R^N.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum VectorPotential {
    Zero,
    Constant { vector: Vec<f64> },
    /// A(x) = M·x with M antisymmetric (a uniform magnetic field).
    LinearB { matrix: Vec<Vec<f64>> },
}

impl VectorPotential {
    pub fn validate(&self, dim: Dimension) -> Result<()> {
        let n = dim.n();
        match self {
            VectorPotential::Zero => Ok(()),
            VectorPotential::Constant { vector } => {
                if vector.len() != n {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        got: vector.len(),
                    });
                }
                Ok(())
            }
            VectorPotential::LinearB { matrix } => {
                if matrix.len() != n || matrix.iter().any(|r| r.len() != n) {
                    return Err(invalid("matrix", format!("must be {n}x{n}")));
                }
                let antisymmetric = matrix
                    .iter()
                    .enumerate()
                    .all(|(i, row)| row.iter().enumerate().all(|(j, v)| *v == -matrix[j][i]));
                if !antisymmetric {
                    return Err(invalid("matrix", "must be antisymmetric"));
                }
                Ok(())
            }
        }
    }

    /// Uniform field of strength `b` in the (x₁, x₂) plane: A = (b/2)(−x₂, x₁, 0, …).
    pub fn uniform_field(dim: Dimension, b: f64) -> Self {
        let n = dim.n();
        let mut m = vec![vec![0.0; n]; n];
        if n >= 2 {
            m[0][1] = -b / 2.0;
            m[1][0] = b / 2.0;
        }
        VectorPotential::LinearB { matrix: m }
    }

    pub fn eval(&self, x: &[f64], out: &mut [f64]) {
        match self {
            VectorPotential::Zero => out.iter_mut().for_each(|o| *o = 0.0),
            VectorPotential::Constant { vector } => out.copy_from_slice(vector),
            VectorPotential::LinearB { matrix } => {
                for (o, row) in out.iter_mut().zip(matrix) {
                    *o = row.iter().zip(x).map(|(m, v)| m * v).sum();
                }
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            VectorPotential::Zero => true,
            VectorPotential::Constant { vector } => vector.iter().all(|v| *v == 0.0),
            VectorPotential::LinearB { matrix } => matrix.iter().flatten().all(|v| *v == 0.0),
        }
    }

    /// Returns (a0, a1) with |A(z)| ≤ a0 + a1·|z|.
    pub fn growth(&self) -> (f64, f64) {
        match self {
            VectorPotential::Zero => (0.0, 0.0),
            VectorPotential::Constant { vector } => {
                (vector.iter().map(|v| v * v).sum::<f64>().sqrt(), 0.0)
            }
            VectorPotential::LinearB { matrix } => {
                // Frobenius norm bounds the operator norm.
                (0.0, matrix.iter().flatten().map(|v| v * v).sum::<f64>().sqrt())
            }
        }
    }
}
