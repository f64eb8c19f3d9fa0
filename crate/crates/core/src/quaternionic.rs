//! Quaternionic triples on a frame, their Kähler forms and Sp(1) rotations
//! of the admissible basis.

use nalgebra::{DMatrix, Matrix3, Vector3};
use thiserror::Error;

use crate::frame_tensor::{EndoMatrix, Tensor, TensorError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuatError {
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error("vector is not a unit vector (|a| = {0})")]
    NotUnit(f64),
    #[error("dimension mismatch between J matrices")]
    DimensionMismatch,
}

/// Three almost complex structures with `J1 J2 = J3`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuaternionicTriple {
    j: [EndoMatrix; 3],
}

#[derive(Clone, Debug, PartialEq)]
pub struct TripleReport {
    /// `max |J_a^2 + id|` per `a`.
    pub square: [f64; 3],
    /// `max |J1 J2 - J3|`.
    pub product: f64,
    /// `max |J1 J2 + J2 J1|`.
    pub anticommute: f64,
    /// `max |J_a^T J_a - id|` per `a`.
    pub orthogonal: [f64; 3],
}

impl TripleReport {
    pub fn max_residual(&self) -> f64 {
        self.square
            .iter()
            .chain(self.orthogonal.iter())
            .chain([self.product, self.anticommute].iter())
            .fold(0.0, |m, x| m.max(*x))
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.max_residual() < tol
    }
}

/// Left multiplication by `i` and `j` on `H = span(1, i, j, k)`.
fn left_mult_block() -> (DMatrix<f64>, DMatrix<f64>) {
    let mut li = DMatrix::zeros(4, 4);
    let mut lj = DMatrix::zeros(4, 4);
    li[(1, 0)] = 1.0;
    li[(0, 1)] = -1.0;
    li[(3, 2)] = 1.0;
    li[(2, 3)] = -1.0;
    lj[(2, 0)] = 1.0;
    lj[(3, 1)] = -1.0;
    lj[(0, 2)] = -1.0;
    lj[(1, 3)] = 1.0;
    (li, lj)
}

fn block_diag(b: &DMatrix<f64>, n: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(4 * n, 4 * n);
    for q in 0..n {
        m.view_mut((4 * q, 4 * q), (4, 4)).copy_from(b);
    }
    m
}

impl QuaternionicTriple {
    /// Builds the triple with `J3 := J1 J2`. No axioms are checked.
    pub fn from_pair(j1: EndoMatrix, j2: EndoMatrix) -> Result<Self, QuatError> {
        if j1.dim() != j2.dim() {
            return Err(QuatError::DimensionMismatch);
        }
        let j3 = &j1 * &j2;
        Ok(QuaternionicTriple { j: [j1, j2, j3] })
    }

    pub fn from_three(j: [EndoMatrix; 3]) -> Result<Self, QuatError> {
        if j.iter().any(|m| m.dim() != j[0].dim()) {
            return Err(QuatError::DimensionMismatch);
        }
        Ok(QuaternionicTriple { j })
    }

    /// Quaternion left multiplication on `H^n`, one 4-block per factor.
    pub fn standard(n: usize) -> Self {
        let (li, lj) = left_mult_block();
        let j1 = EndoMatrix::new(block_diag(&li, n)).expect("square");
        let j2 = EndoMatrix::new(block_diag(&lj, n)).expect("square");
        QuaternionicTriple::from_pair(j1, j2).expect("same dims")
    }

    pub fn dim(&self) -> usize {
        self.j[0].dim()
    }

    /// `J_a` for `a` in `0..3`.
    pub fn get(&self, a: usize) -> &EndoMatrix {
        &self.j[a]
    }

    pub fn all(&self) -> &[EndoMatrix; 3] {
        &self.j
    }

    /// `a_1 J_1 + a_2 J_2 + a_3 J_3`.
    pub fn combination(&self, a: &[f64; 3]) -> EndoMatrix {
        let m = self.j[0].matrix() * a[0] + self.j[1].matrix() * a[1] + self.j[2].matrix() * a[2];
        EndoMatrix::new(m).expect("square")
    }

    /// `J'_a = sum_b R[b][a] J_b`.
    pub fn rotate(&self, r: &Matrix3<f64>) -> QuaternionicTriple {
        let j = [0, 1, 2].map(|a| self.combination(&[r[(0, a)], r[(1, a)], r[(2, a)]]));
        QuaternionicTriple { j }
    }
}

/// Axiom residuals of a triple.
pub fn verify_triple(q: &QuaternionicTriple) -> TripleReport {
    let [j1, j2, j3] = q.all();
    TripleReport {
        square: [j1.complex_residual(), j2.complex_residual(), j3.complex_residual()],
        product: (&(j1 * j2) - j3).max_abs(),
        anticommute: (&(j1 * j2) + &(j2 * j1)).max_abs(),
        orthogonal: [
            j1.orthogonality_residual(),
            j2.orthogonality_residual(),
            j3.orthogonality_residual(),
        ],
    }
}

/// `Phi(X, Y) = g(X, J Y)`, i.e. `Phi[i][j] = J[i][j]` on an orthonormal frame.
pub fn kaehler_form(j: &EndoMatrix) -> Result<Tensor, QuatError> {
    let r = j.orthogonality_residual();
    if r > 1e-10 {
        return Err(TensorError::NotOrthogonal(r).into());
    }
    Ok(Tensor::from_matrix(j.matrix())?)
}

/// A rotation taking `(0,1,0)` to the unit vector `a`: Rodrigues about
/// `e2 x a`, and `diag(1,-1,-1)` at the antipode.
pub fn rotation_to(a: &[f64; 3]) -> Result<Matrix3<f64>, QuatError> {
    let a = Vector3::from_column_slice(a);
    let norm = a.norm();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(QuatError::NotUnit(norm));
    }
    let e2 = Vector3::new(0.0, 1.0, 0.0);
    let v = e2.cross(&a);
    let s = v.norm();
    let c = e2.dot(&a);
    if s < 1e-14 {
        return Ok(if c > 0.0 {
            Matrix3::identity()
        } else {
            Matrix3::from_diagonal(&Vector3::new(1.0, -1.0, -1.0))
        });
    }
    Ok(axis_angle(&(v / s), s, c))
}

/// Rotation about the unit axis `k` by the angle with sine `s`, cosine `c`.
fn axis_angle(k: &Vector3<f64>, s: f64, c: f64) -> Matrix3<f64> {
    let kx = Matrix3::new(0.0, -k[2], k[1], k[2], 0.0, -k[0], -k[1], k[0], 0.0);
    Matrix3::identity() + kx * s + kx * kx * (1.0 - c)
}

/// Rotation by `angle` about the unit axis `a`.
pub fn rotation_about(a: &[f64; 3], angle: f64) -> Matrix3<f64> {
    axis_angle(&Vector3::from_column_slice(a), angle.sin(), angle.cos())
}

/// The admissible triple with `J'_2 = a . J`.
pub fn sp1_rotate(q: &QuaternionicTriple, a: &[f64; 3]) -> Result<QuaternionicTriple, QuatError> {
    Ok(q.rotate(&rotation_to(a)?))
}
