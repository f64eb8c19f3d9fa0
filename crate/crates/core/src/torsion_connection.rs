//! Metric connections with totally skew torsion preserving a complex
//! structure (Bismut), a hypercomplex structure (HKT) or the quaternionic
//! bundle (QKT), all found as linear feasibility problems.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::frame_tensor::{
    three_form_basis, three_form_from_coeffs, type_operator, EndoMatrix, Tensor,
};
use crate::lie_model::{levi_civita, Connection, MetricLieAlgebra};
use crate::linsolve;
use crate::quaternionic::QuaternionicTriple;

/// A linear system counts as solved when `max |A x - b|` is below this.
pub const FEASIBILITY_TOL: f64 = 1e-9;
/// Largest pairwise torsion difference still accepted as "the same" torsion.
pub const HKT_TOL: f64 = 1e-9;
/// Relative rank cutoff for the torsion block of the kernel.
pub const TORSION_RANK_RTOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConnectionError {
    #[error("not an orthogonal complex structure (J^2+id: {square:.3e}, J^TJ-id: {orthogonal:.3e})")]
    NotComplexStructure { square: f64, orthogonal: f64 },
    #[error("no skew-torsion connection exists (least-squares residual {residual:.3e})")]
    Infeasible { residual: f64 },
    #[error("Bismut torsions of J1, J2, J3 differ (max discrepancy {discrepancy:.3e})")]
    NotHkt { discrepancy: f64 },
    #[error("torsion not unique: solution space of dimension {dimension}")]
    NonUniqueTorsion { dimension: usize },
    #[error("torsion 1-form depends on the complex structure (spread {spread:.3e})")]
    AlphaDependent { spread: f64 },
    #[error("connection does not preserve the quaternionic bundle (residual {residual:.3e})")]
    NotQuaternionic { residual: f64 },
}

/// `Gamma = Gamma^g + T/2` with the torsion and, for quaternionic
/// connections, the sp(1) connection 1-forms.
#[derive(Clone, Debug, PartialEq)]
pub struct TorsionConnection {
    pub connection: Connection,
    pub torsion: Tensor,
    pub omegas: Option<[Tensor; 3]>,
    /// Max residual of the defining linear system.
    pub residual: f64,
    /// Dimension of the torsion part of the solution space.
    pub torsion_nullity: usize,
}

impl TorsionConnection {
    fn from_torsion(lc: &Connection, t: Tensor, residual: f64, nullity: usize) -> Self {
        TorsionConnection {
            connection: lc.shifted(&t, 0.5),
            torsion: t,
            omegas: None,
            residual,
            torsion_nullity: nullity,
        }
    }
}

/// `nabla_{e_i} J = A_i J - J A_i` for each frame direction.
pub fn nabla_endo(conn: &Connection, j: &EndoMatrix) -> Vec<EndoMatrix> {
    let jm = j.matrix();
    (0..j.dim())
        .map(|i| {
            let a = conn.endo(i);
            EndoMatrix::new(&a * jm - jm * &a).expect("square")
        })
        .collect()
}

fn flatten(ms: &[EndoMatrix]) -> Vec<f64> {
    ms.iter().flat_map(|m| m.matrix().transpose().as_slice().to_vec()).collect()
}

fn half_basis_connection(dim: usize, b: usize, nb: usize) -> Connection {
    let mut e = vec![0.0; nb];
    e[b] = 0.5;
    Connection { gamma: three_form_from_coeffs(dim, &e) }
}

fn check_complex(j: &EndoMatrix) -> Result<(), ConnectionError> {
    let square = j.complex_residual();
    let orthogonal = j.orthogonality_residual();
    if square > 1e-10 || orthogonal > 1e-10 {
        return Err(ConnectionError::NotComplexStructure { square, orthogonal });
    }
    Ok(())
}

fn columns_to_matrix(cols: &[Vec<f64>]) -> DMatrix<f64> {
    let rows = cols[0].len();
    DMatrix::from_fn(rows, cols.len(), |r, c| cols[c][r])
}

/// The Bismut connection of `(g, J)`: the skew torsion `T` with
/// `(nabla^g + T/2) J = 0`. If the solution is not unique the minimum-norm
/// torsion is returned and `torsion_nullity > 0`.
pub fn bismut(alg: &MetricLieAlgebra, j: &EndoMatrix) -> Result<TorsionConnection, ConnectionError> {
    check_complex(j)?;
    let d = alg.dim();
    let lc = levi_civita(alg);
    let nb = three_form_basis(d).len();
    let cols: Vec<Vec<f64>> =
        (0..nb).map(|b| flatten(&nabla_endo(&half_basis_connection(d, b, nb), j))).collect();
    let a = columns_to_matrix(&cols);
    let rhs = DVector::from_vec(flatten(&nabla_endo(&lc, j))).scale(-1.0);
    let sol = linsolve::solve(&a, &rhs);
    if sol.residual > FEASIBILITY_TOL {
        return Err(ConnectionError::Infeasible { residual: sol.residual });
    }
    let t = three_form_from_coeffs(d, sol.x.as_slice());
    Ok(TorsionConnection::from_torsion(&lc, t, sol.residual, sol.nullity()))
}

/// HKT test: the three Bismut torsions must coincide.
pub fn hkt_detect(
    alg: &MetricLieAlgebra,
    q: &QuaternionicTriple,
) -> Result<TorsionConnection, ConnectionError> {
    let sols = q.all().iter().map(|j| bismut(alg, j)).collect::<Result<Vec<_>, _>>()?;
    let discrepancy = hkt_discrepancy(&sols);
    if discrepancy > HKT_TOL {
        return Err(ConnectionError::NotHkt { discrepancy });
    }
    let mut out = sols.into_iter().next().expect("three solves");
    out.residual = discrepancy.max(out.residual);
    out.omegas = Some([0, 1, 2].map(|_| Tensor::zeros(1, alg.dim())));
    Ok(out)
}

/// Max pairwise entry difference of Bismut torsions.
pub fn hkt_discrepancy(sols: &[TorsionConnection]) -> f64 {
    let mut worst: f64 = 0.0;
    for a in 0..sols.len() {
        for b in a + 1..sols.len() {
            worst = worst.max(sols[a].torsion.max_abs_diff(&sols[b].torsion));
        }
    }
    worst
}

/// The QKT connection: skew `T` of type (1,2)+(2,1) for each `J_a` and
/// 1-forms `w_a` with `nabla J_a = -w_b (x) J_c + w_c (x) J_b` for cyclic `(a,b,c)`.
pub fn qkt_find(
    alg: &MetricLieAlgebra,
    q: &QuaternionicTriple,
) -> Result<TorsionConnection, ConnectionError> {
    for j in q.all() {
        check_complex(j)?;
    }
    let d = alg.dim();
    let lc = levi_civita(alg);
    let nb = three_form_basis(d).len();
    let js = q.all();
    let block = d * d * d;
    let n_unknowns = nb + 3 * d;
    let mut a = DMatrix::zeros(6 * block, n_unknowns);
    let mut rhs = DVector::zeros(6 * block);
    let basis_conns: Vec<Connection> = (0..nb).map(|b| half_basis_connection(d, b, nb)).collect();
    for al in 0..3 {
        let (be, ga) = ((al + 1) % 3, (al + 2) % 3);
        let row0 = al * block;
        for (b, bc) in basis_conns.iter().enumerate() {
            let col = flatten(&nabla_endo(bc, &js[al]));
            a.view_mut((row0, b), (block, 1)).copy_from_slice(&col);
        }
        // + w_b J_c - w_c J_b, the w unknowns indexed as w_w(e_i)
        for w in 0..3 {
            let sign = if w == be {
                1.0
            } else if w == ga {
                -1.0
            } else {
                continue;
            };
            let other = if w == be { &js[ga] } else { &js[be] };
            for i in 0..d {
                let mut ms = vec![EndoMatrix::zeros(d); d];
                ms[i] = other.scale(sign);
                let col = flatten(&ms);
                a.view_mut((row0, nb + w * d + i), (block, 1)).copy_from_slice(&col);
            }
        }
        let r = flatten(&nabla_endo(&lc, &js[al]));
        for (k, v) in r.iter().enumerate() {
            rhs[row0 + k] = -v;
        }
        let trow = (3 + al) * block;
        for b in 0..nb {
            let mut e = vec![0.0; nb];
            e[b] = 1.0;
            let t = three_form_from_coeffs(d, &e);
            let col = (&t - &type_operator(&t, &js[al])).as_vec();
            a.view_mut((trow, b), (block, 1)).copy_from_slice(&col);
        }
    }
    let sol = linsolve::solve(&a, &rhs);
    if sol.residual > FEASIBILITY_TOL {
        return Err(ConnectionError::Infeasible { residual: sol.residual });
    }
    let kernel_t = sol.null_basis.rows(0, nb).into_owned();
    let nullity = linsolve::rank(&kernel_t, TORSION_RANK_RTOL);
    if nullity > 0 {
        return Err(ConnectionError::NonUniqueTorsion { dimension: nullity });
    }
    let t = three_form_from_coeffs(d, &sol.x.as_slice()[..nb]);
    let omegas = [0, 1, 2].map(|w| {
        Tensor::from_vec(&sol.x.as_slice()[nb + w * d..nb + (w + 1) * d]).expect("1-form")
    });
    let mut out = TorsionConnection::from_torsion(&lc, t, 0.0, nullity);
    out.residual = quaternionic_residual(&out.connection, q, &omegas);
    out.omegas = Some(omegas);
    Ok(out)
}

/// `max |nabla J_a + w_b (x) J_c - w_c (x) J_b|` over cyclic `(a,b,c)`.
pub fn quaternionic_residual(conn: &Connection, q: &QuaternionicTriple, w: &[Tensor; 3]) -> f64 {
    let js = q.all();
    let mut worst: f64 = 0.0;
    for al in 0..3 {
        let (be, ga) = ((al + 1) % 3, (al + 2) % 3);
        for (i, nj) in nabla_endo(conn, &js[al]).iter().enumerate() {
            let wb = w[be].get(&[i]);
            let wg = w[ga].get(&[i]);
            let m = nj.matrix() + js[ga].matrix() * wb - js[be].matrix() * wg;
            worst = worst.max(m.amax());
        }
    }
    worst
}

/// `w_c(X) = 1/(4n) sum_i g((nabla_X J_a) e_i, J_b e_i)` for cyclic `(a,b,c)`.
pub fn connection_one_forms(
    conn: &Connection,
    q: &QuaternionicTriple,
    tol: f64,
) -> Result<[Tensor; 3], ConnectionError> {
    let js = q.all();
    let d = q.dim();
    let mut w = [0, 1, 2].map(|_| Tensor::zeros(1, d));
    for al in 0..3 {
        let (be, ga) = ((al + 1) % 3, (al + 2) % 3);
        for (i, nj) in nabla_endo(conn, &js[al]).iter().enumerate() {
            let v = (js[be].matrix().transpose() * nj.matrix()).trace() / d as f64;
            w[ga].set(&[i], v);
        }
    }
    let residual = quaternionic_residual(conn, q, &w);
    if residual > tol {
        return Err(ConnectionError::NotQuaternionic { residual });
    }
    Ok(w)
}

/// `t_J(X) = 1/2 sum_i T(J X, e_i, J e_i)`.
pub fn torsion_one_form_for(t: &Tensor, j: &EndoMatrix) -> Tensor {
    let tj = t.apply_endo(&[Some(j), None, Some(j)]);
    let d = t.dim();
    Tensor::from_fn(1, d, |x| 0.5 * (0..d).map(|i| tj.get(&[x[0], i, i])).sum::<f64>())
}

/// The torsion 1-form, required to agree for `J1, J2, J3`.
pub fn torsion_one_form(
    t: &Tensor,
    q: &QuaternionicTriple,
    tol: f64,
) -> Result<Tensor, ConnectionError> {
    let ts: Vec<Tensor> = q.all().iter().map(|j| torsion_one_form_for(t, j)).collect();
    let spread = ts[0].max_abs_diff(&ts[1]).max(ts[0].max_abs_diff(&ts[2]));
    let scale = 1.0 + ts.iter().map(Tensor::max_abs).fold(0.0, f64::max);
    if spread > tol * scale {
        return Err(ConnectionError::AlphaDependent { spread });
    }
    Ok(ts.into_iter().next().expect("three forms"))
}

#[derive(Clone, Debug, PartialEq)]
pub struct TypeCheck {
    /// `max |T - S_{J_a}(T)|` per `a`.
    pub residuals: [f64; 3],
}

impl TypeCheck {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().cloned().fold(0.0, f64::max)
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.max_residual() < tol
    }
}

pub fn torsion_type_check(t: &Tensor, q: &QuaternionicTriple) -> TypeCheck {
    let r = [0, 1, 2].map(|a| (t - &type_operator(t, q.get(a))).max_abs());
    TypeCheck { residuals: r }
}
