//! Metric Lie algebras as models of left-invariant geometry. Every tensor
//! field is invariant, so it is a single frame tensor evaluated at the
//! identity and covariant derivatives have no directional term.

use thiserror::Error;

use crate::frame_tensor::{Tensor, TensorError, MAX_RANK};

/// Absolute tolerance for the Jacobi identity of stored models.
pub const JACOBI_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LieError {
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error("brackets not antisymmetric at ({i},{j},{k}): residual {residual:.3e}")]
    NotAntisymmetric { i: usize, j: usize, k: usize, residual: f64 },
    #[error("Jacobi identity violated: residual {0:.3e}")]
    Jacobi(f64),
}

/// Structure constants `[e_i, e_j] = sum_k c[i][j][k] e_k` on an
/// orthonormal frame.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricLieAlgebra {
    c: Tensor,
}

/// `gamma[i][j][k] = g(nabla_{e_i} e_j, e_k)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Connection {
    pub gamma: Tensor,
}

impl MetricLieAlgebra {
    pub fn new(c: Tensor) -> Result<Self, LieError> {
        if c.rank() != 3 {
            return Err(TensorError::RankMismatch { expected: 3, got: c.rank() }.into());
        }
        let d = c.dim();
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    let r = (c.get(&[i, j, k]) + c.get(&[j, i, k])).abs();
                    if r > 0.0 {
                        return Err(LieError::NotAntisymmetric { i, j, k, residual: r });
                    }
                }
            }
        }
        let alg = MetricLieAlgebra { c };
        let r = alg.jacobi_check();
        if r > JACOBI_TOL {
            return Err(LieError::Jacobi(r));
        }
        Ok(alg)
    }

    /// Skips all validation; for probing invalid inputs.
    pub fn new_unchecked(c: Tensor) -> Self {
        MetricLieAlgebra { c }
    }

    pub fn abelian(dim: usize) -> Self {
        MetricLieAlgebra { c: Tensor::zeros(3, dim) }
    }

    pub fn dim(&self) -> usize {
        self.c.dim()
    }

    /// Quaternionic dimension: `dim = 4n`.
    pub fn n(&self) -> usize {
        self.dim() / 4
    }

    pub fn brackets(&self) -> &Tensor {
        &self.c
    }

    #[inline]
    pub fn c(&self, i: usize, j: usize, k: usize) -> f64 {
        self.c.get(&[i, j, k])
    }

    /// Frame components of `[x, y]`.
    pub fn bracket(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let d = self.dim();
        let mut out = vec![0.0; d];
        for i in 0..d {
            if x[i] == 0.0 {
                continue;
            }
            for j in 0..d {
                let w = x[i] * y[j];
                if w == 0.0 {
                    continue;
                }
                for (k, o) in out.iter_mut().enumerate() {
                    *o += w * self.c(i, j, k);
                }
            }
        }
        out
    }

    /// Max component of the cyclic sum `[[e_i,e_j],e_k] + [[e_j,e_k],e_i] + [[e_k,e_i],e_j]`.
    pub fn jacobi_check(&self) -> f64 {
        let d = self.dim();
        // t[i][j][k][l] = sum_m c[i][j][m] c[m][k][l]
        let t = Tensor::from_fn(4, d, |x| {
            (0..d).map(|m| self.c(x[0], x[1], m) * self.c(m, x[2], x[3])).sum()
        });
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    for l in 0..d {
                        let s = t.get(&[i, j, k, l]) + t.get(&[j, k, i, l]) + t.get(&[k, i, j, l]);
                        worst = worst.max(s.abs());
                    }
                }
            }
        }
        worst
    }
}

/// Koszul formula on an orthonormal left-invariant frame.
pub fn levi_civita(alg: &MetricLieAlgebra) -> Connection {
    let gamma = Tensor::from_fn(3, alg.dim(), |x| {
        let (i, j, k) = (x[0], x[1], x[2]);
        0.5 * (alg.c(i, j, k) - alg.c(j, k, i) + alg.c(k, i, j))
    });
    Connection { gamma }
}

impl Connection {
    /// `T[i][j][k] = gamma[i][j][k] - gamma[j][i][k] - c[i][j][k]`.
    pub fn torsion(&self, alg: &MetricLieAlgebra) -> Tensor {
        let g = &self.gamma;
        Tensor::from_fn(3, g.dim(), |x| {
            g.get(&[x[0], x[1], x[2]]) - g.get(&[x[1], x[0], x[2]]) - alg.c(x[0], x[1], x[2])
        })
    }

    /// `max |gamma[i][j][k] + gamma[i][k][j]|`; zero for metric connections.
    pub fn metric_residual(&self) -> f64 {
        (&self.gamma + &self.gamma.permuted(&[0, 2, 1])).max_abs()
    }

    /// `Gamma + s T`.
    pub fn shifted(&self, t: &Tensor, s: f64) -> Connection {
        Connection { gamma: &self.gamma + &t.scale(s) }
    }

    /// Endomorphism matrix of `nabla_{e_i}`: entry `[l][k] = gamma[i][k][l]`.
    pub fn endo(&self, i: usize) -> nalgebra::DMatrix<f64> {
        let d = self.gamma.dim();
        nalgebra::DMatrix::from_fn(d, d, |l, k| self.gamma.get(&[i, k, l]))
    }
}

/// Chevalley-Eilenberg differential of an invariant p-form:
/// `d w(X_0..X_p) = sum_{a<b} (-1)^{a+b} w([X_a,X_b], X_0, .., ^a, .., ^b, .., X_p)`.
pub fn ce_derivative(alg: &MetricLieAlgebra, w: &Tensor) -> Tensor {
    let p = w.rank();
    let d = alg.dim();
    let mut args = [0usize; MAX_RANK];
    Tensor::from_fn(p + 1, d, |x| {
        let mut acc = 0.0;
        for a in 0..=p {
            for b in a + 1..=p {
                let sign = if (a + b) % 2 == 0 { 1.0 } else { -1.0 };
                let mut pos = 1;
                for (s, &xs) in x.iter().enumerate() {
                    if s != a && s != b {
                        args[pos] = xs;
                        pos += 1;
                    }
                }
                for m in 0..d {
                    let cm = alg.c(x[a], x[b], m);
                    if cm != 0.0 {
                        args[0] = m;
                        acc += sign * cm * w.get(&args[..p]);
                    }
                }
            }
        }
        acc
    })
}

/// `(nabla S)[i][j_1..j_r] = -sum_s sum_m gamma[i][j_s][m] S[.. m in slot s ..]`.
pub fn covariant_derivative(conn: &Connection, s: &Tensor) -> Tensor {
    let r = s.rank();
    let d = s.dim();
    let g = &conn.gamma;
    let mut src = [0usize; MAX_RANK];
    Tensor::from_fn(r + 1, d, |x| {
        let i = x[0];
        let js = &x[1..];
        let mut acc = 0.0;
        for slot in 0..r {
            src[..r].copy_from_slice(js);
            for m in 0..d {
                let gm = g.get(&[i, js[slot], m]);
                if gm != 0.0 {
                    src[slot] = m;
                    acc -= gm * s.get(&src[..r]);
                }
            }
        }
        acc
    })
}

/// `delta S = -sum_i (nabla^g_{e_i} S)(e_i, ..)`.
pub fn codifferential(lc: &Connection, s: &Tensor) -> Tensor {
    let ns = covariant_derivative(lc, s);
    trace_first_two(&ns)
}

/// `-sum_i N[i][i][..]`.
fn trace_first_two(ns: &Tensor) -> Tensor {
    let d = ns.dim();
    let r = ns.rank() - 2;
    let mut idx = [0usize; MAX_RANK];
    Tensor::from_fn(r, d, |x| {
        let mut acc = 0.0;
        for i in 0..d {
            idx[0] = i;
            idx[1] = i;
            idx[2..2 + r].copy_from_slice(x);
            acc -= ns.get(&idx[..r + 2]);
        }
        acc
    })
}

/// Scalar value of a rank-0 tensor.
pub fn scalar(t: &Tensor) -> f64 {
    assert_eq!(t.rank(), 0);
    t.data()[0]
}

#[cfg(test)]
mod tests {
    use super::*;

    /// su(2) with `[e1,e2] = 2 e3` cyclic, padded to dim 4 by an abelian e0.
    fn su2_plus_r() -> MetricLieAlgebra {
        let mut c = Tensor::zeros(3, 4);
        for (i, j, k) in [(1, 2, 3), (2, 3, 1), (3, 1, 2)] {
            c.set(&[i, j, k], 2.0);
            c.set(&[j, i, k], -2.0);
        }
        MetricLieAlgebra::new(c).unwrap()
    }

    #[test]
    fn jacobi_su2() {
        assert_eq!(su2_plus_r().jacobi_check(), 0.0);
        assert_eq!(MetricLieAlgebra::abelian(8).jacobi_check(), 0.0);
    }

    #[test]
    fn jacobi_detects_perturbation() {
        let mut c = su2_plus_r().brackets().clone();
        c.add_at(&[1, 2, 1], 1e-3);
        c.add_at(&[2, 1, 1], -1e-3);
        let r = MetricLieAlgebra::new_unchecked(c.clone()).jacobi_check();
        assert!(r >= 1e-3, "{r}");
        assert!(matches!(MetricLieAlgebra::new(c), Err(LieError::Jacobi(_))));
    }

    #[test]
    fn levi_civita_su2_value() {
        let alg = su2_plus_r();
        let lc = levi_civita(&alg);
        assert_eq!(lc.gamma.get(&[1, 2, 3]), 1.0);
        assert_eq!(lc.torsion(&alg).max_abs(), 0.0);
        assert_eq!(lc.metric_residual(), 0.0);
    }

    #[test]
    fn ce_squares_to_zero() {
        let alg = su2_plus_r();
        let w = Tensor::from_vec(&[0.3, -1.0, 2.0, 0.5]).unwrap();
        let dw = ce_derivative(&alg, &w);
        assert!(ce_derivative(&alg, &dw).max_abs() < 1e-14);
        // d e^3 = -2 e^1 ^ e^2 in this convention
        let e3 = Tensor::from_vec(&[0.0, 0.0, 0.0, 1.0]).unwrap();
        assert_eq!(ce_derivative(&alg, &e3).get(&[1, 2]), -2.0);
    }

    #[test]
    fn codifferential_scalar_of_one_form() {
        let alg = su2_plus_r();
        let lc = levi_civita(&alg);
        let w = Tensor::from_vec(&[1.0, 1.0, 1.0, 1.0]).unwrap();
        // unimodular: delta of an invariant 1-form vanishes
        assert!(scalar(&codifferential(&lc, &w)).abs() < 1e-15);
    }
}
