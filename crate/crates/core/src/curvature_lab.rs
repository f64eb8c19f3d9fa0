//! Curvature of the QKT and Levi-Civita connections, Ricci forms, scalar
//! traces, `dT`, and the identities relating them.

use thiserror::Error;

use crate::frame_tensor::{two_form_anti_part, two_form_inner, EndoMatrix, Tensor};
use crate::lie_model::{
    ce_derivative, codifferential, covariant_derivative, levi_civita, scalar, Connection,
    MetricLieAlgebra,
};
use crate::quaternionic::{kaehler_form, QuaternionicTriple};
use crate::report::Check;
use crate::torsion_connection::{
    hkt_detect, qkt_find, torsion_one_form, ConnectionError, TorsionConnection,
};

/// Relative tolerance of the best-fit constant in the special homothety test.
pub const HOMOTHETY_RTOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CurvatureError {
    #[error(transparent)]
    Connection(#[from] ConnectionError),
    #[error("identity requires n > 1, got dimension {dim}")]
    DimensionTooSmall { dim: usize },
    #[error("curvature does not split: [R', J] residual {residual:.3e}")]
    SplitFails { residual: f64 },
    #[error(
        "instanton criteria disagree (rho type: {rho_type}, *-Ricci symmetric: {star_symmetric}, dt type: {dt_type})"
    )]
    InconsistentCriteria { rho_type: bool, star_symmetric: bool, dt_type: bool },
    #[error("model is not HKT")]
    NotHkt,
}

/// `R[i][j][k][l] = g(R(e_i,e_j)e_k, e_l)` with `R = [nabla,nabla] - nabla_[,]`.
pub fn curvature(alg: &MetricLieAlgebra, conn: &Connection) -> Tensor {
    let g = &conn.gamma;
    let d = alg.dim();
    Tensor::from_fn(4, d, |x| {
        let (i, j, k, l) = (x[0], x[1], x[2], x[3]);
        (0..d)
            .map(|m| {
                g.get(&[j, k, m]) * g.get(&[i, m, l]) - g.get(&[i, k, m]) * g.get(&[j, m, l])
                    - alg.c(i, j, m) * g.get(&[m, k, l])
            })
            .sum()
    })
}

/// `rho_a(X,Y) = 1/2 sum_i R(X,Y,e_i,J_a e_i)`.
pub fn ricci_form(r: &Tensor, j: &EndoMatrix) -> Tensor {
    let d = r.dim();
    Tensor::from_fn(2, d, |x| {
        let mut acc = 0.0;
        for i in 0..d {
            for m in 0..d {
                acc += r.get(&[x[0], x[1], i, m]) * j.get(m, i);
            }
        }
        0.5 * acc
    })
}

pub fn ricci_forms(r: &Tensor, q: &QuaternionicTriple) -> [Tensor; 3] {
    [0, 1, 2].map(|a| ricci_form(r, q.get(a)))
}

/// `Ric(X,Y) = sum_i R(e_i,X,Y,e_i)`.
pub fn ricci_tensor(r: &Tensor) -> Tensor {
    let d = r.dim();
    Tensor::from_fn(2, d, |x| (0..d).map(|i| r.get(&[i, x[0], x[1], i])).sum())
}

/// `-sum_i b(e_i, J e_i)`.
pub fn j_trace(b: &Tensor, j: &EndoMatrix) -> f64 {
    let d = b.dim();
    let mut acc = 0.0;
    for i in 0..d {
        for m in 0..d {
            acc += b.get(&[i, m]) * j.get(m, i);
        }
    }
    -acc
}

/// `out[x][y] = sum_i t[x][y][i][i]`.
fn trace_last_two(t: &Tensor) -> Tensor {
    let d = t.dim();
    Tensor::from_fn(2, d, |x| (0..d).map(|i| t.get(&[x[0], x[1], i, i])).sum())
}

/// `sum_{i,j} t[j][j][i][i]`.
fn double_trace(t: &Tensor) -> f64 {
    let d = t.dim();
    let mut acc = 0.0;
    for i in 0..d {
        for j in 0..d {
            acc += t.get(&[j, j, i, i]);
        }
    }
    acc
}

/// `q[x][y][z][u] = g(T(x,y), T(z,u))`.
fn torsion_square(t: &Tensor) -> Tensor {
    let d = t.dim();
    Tensor::from_fn(4, d, |x| {
        (0..d).map(|m| t.get(&[x[0], x[1], m]) * t.get(&[x[2], x[3], m])).sum()
    })
}

/// `sigma_{xyz} A(x,y,z,u)`.
fn cyclic_xyz(a: &Tensor) -> Tensor {
    &(a + &a.permuted(&[1, 2, 0, 3])) + &a.permuted(&[2, 0, 1, 3])
}

/// `sum_i dT(X, J Y, e_i, J e_i)`.
fn dt_j_trace(dt4: &Tensor, j: &EndoMatrix) -> Tensor {
    trace_last_two(&dt4.apply_endo(&[None, Some(j), None, Some(j)]))
}

/// `dT = sigma_{XYZ}{(nabla_X T)(Y,Z,U) + g(T(X,Y),T(Z,U))} - (nabla_U T)(X,Y,Z)
///       + sigma_{XYZ} g(T(X,Y),T(Z,U))`, the quadratic sum entering twice.
pub fn d_torsion_via_connection(torsion: &Tensor, nabla_torsion: &Tensor) -> Tensor {
    let tt = torsion_square(torsion);
    let first = cyclic_xyz(&(nabla_torsion + &tt));
    // out[x][y][z][u] = nT[u][x][y][z]
    let last = nabla_torsion.permuted(&[3, 0, 1, 2]);
    &(&first - &last) + &cyclic_xyz(&tt)
}

fn cyclic(a: usize) -> (usize, usize) {
    ((a + 1) % 3, (a + 2) % 3)
}

fn jname(a: usize) -> String {
    format!("J{}", a + 1)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scalars {
    /// `Scal_{a,b} = -sum rho_a(e_i, J_b e_i)`.
    pub table: [[f64; 3]; 3],
    /// Same with the Riemannian Ricci forms.
    pub table_g: [[f64; 3]; 3],
    pub scal: f64,
    pub scal_g: f64,
    /// `Scal_a = -sum Ric(e_i, J_a e_i)`.
    pub scal_alpha: [f64; 3],
    pub scal_q: f64,
    pub scal_gq: f64,
    pub t_norm_sq: f64,
    pub torsion_norm_sq: f64,
    pub delta_t: f64,
}

/// Everything derived from one model's QKT connection.
#[derive(Clone, Debug)]
pub struct Geometry {
    pub algebra: MetricLieAlgebra,
    pub triple: QuaternionicTriple,
    pub lc: Connection,
    pub qkt: TorsionConnection,
    /// Present iff the three Bismut connections coincide.
    pub hkt: Option<TorsionConnection>,
    pub r: Tensor,
    pub rg: Tensor,
    pub rho: [Tensor; 3],
    pub rho_g: [Tensor; 3],
    pub ric: Tensor,
    pub ric_g: Tensor,
    pub t: Tensor,
    pub dt: Tensor,
    pub nabla_t: Tensor,
    pub nabla_torsion: Tensor,
    /// Chevalley-Eilenberg `dT`.
    pub d_torsion: Tensor,
    pub delta_torsion: Tensor,
    pub scalars: Scalars,
}

impl Geometry {
    pub fn new(alg: &MetricLieAlgebra, q: &QuaternionicTriple) -> Result<Self, CurvatureError> {
        let qkt = qkt_find(alg, q)?;
        let hkt = hkt_detect(alg, q).ok();
        let lc = levi_civita(alg);
        let conn = &qkt.connection;
        let torsion = &qkt.torsion;
        let r = curvature(alg, conn);
        let rg = curvature(alg, &lc);
        let rho = ricci_forms(&r, q);
        let rho_g = ricci_forms(&rg, q);
        let ric = ricci_tensor(&r);
        let ric_g = ricci_tensor(&rg);
        let t = torsion_one_form(torsion, q, 1e-10)?;
        let dt = ce_derivative(alg, &t);
        let delta_t = scalar(&codifferential(&lc, &t));
        let scalars = Scalars {
            table: [0, 1, 2].map(|a| [0, 1, 2].map(|b| j_trace(&rho[a], q.get(b)))),
            table_g: [0, 1, 2].map(|a| [0, 1, 2].map(|b| j_trace(&rho_g[a], q.get(b)))),
            scal: (0..alg.dim()).map(|i| ric.get(&[i, i])).sum(),
            scal_g: (0..alg.dim()).map(|i| ric_g.get(&[i, i])).sum(),
            scal_alpha: [0, 1, 2].map(|a| j_trace(&ric, q.get(a))),
            scal_q: j_trace(&rho[0], q.get(0)),
            scal_gq: j_trace(&rho_g[0], q.get(0)),
            t_norm_sq: t.norm_sq(),
            torsion_norm_sq: torsion.norm_sq(),
            delta_t,
        };
        Ok(Geometry {
            nabla_t: covariant_derivative(conn, &t),
            nabla_torsion: covariant_derivative(conn, torsion),
            d_torsion: ce_derivative(alg, torsion),
            delta_torsion: codifferential(&lc, torsion),
            algebra: alg.clone(),
            triple: q.clone(),
            lc,
            qkt,
            hkt,
            r,
            rg,
            rho,
            rho_g,
            ric,
            ric_g,
            t,
            dt,
            scalars,
        })
    }

    pub fn n(&self) -> usize {
        self.algebra.n()
    }

    pub fn torsion(&self) -> &Tensor {
        &self.qkt.torsion
    }

    pub fn j(&self, a: usize) -> &EndoMatrix {
        self.triple.get(a)
    }

    pub fn is_hkt(&self) -> bool {
        self.hkt.is_some()
    }

    fn require_n_gt_1(&self) -> Result<(), CurvatureError> {
        if self.n() < 2 {
            return Err(CurvatureError::DimensionTooSmall { dim: self.algebra.dim() });
        }
        Ok(())
    }
}

/// Antisymmetries of `R`, `R^g`, pair symmetry and Bianchi for `R^g`.
pub fn curvature_symmetries(g: &Geometry, tol: f64) -> Vec<Check> {
    let mut out = Vec::new();
    for (name, r) in [("R", &g.r), ("Rg", &g.rg)] {
        out.push(Check::residual(
            format!("curvature.{name}.antisym_12"),
            format!("{name} antisymmetric in the first pair"),
            "R(X,Y,Z,V) = -R(Y,X,Z,V)",
            (r + &r.permuted(&[1, 0, 2, 3])).max_abs(),
            tol,
        ));
        out.push(Check::residual(
            format!("curvature.{name}.antisym_34"),
            format!("{name} antisymmetric in the last pair (metric connection)"),
            "R(X,Y,Z,V) = -R(X,Y,V,Z)",
            (r + &r.permuted(&[0, 1, 3, 2])).max_abs(),
            tol,
        ));
    }
    let rg = &g.rg;
    out.push(Check::residual(
        "curvature.Rg.pair_symmetry",
        "Levi-Civita curvature pair symmetry",
        "R^g(X,Y,Z,V) = R^g(Z,V,X,Y)",
        (rg - &rg.permuted(&[2, 3, 0, 1])).max_abs(),
        tol,
    ));
    out.push(Check::residual(
        "curvature.Rg.bianchi",
        "first Bianchi identity for R^g",
        "R^g(X,Y,Z,V) + R^g(Y,Z,X,V) + R^g(Z,X,Y,V) = 0",
        cyclic_xyz(rg).max_abs(),
        tol,
    ));
    out
}

/// `n [R(X,Y), J_a] - (rho_c(X,Y) J_b - rho_b(X,Y) J_c)` over all frame pairs.
pub fn ricci_commutator_residual(g: &Geometry, a: usize) -> f64 {
    let d = g.algebra.dim();
    let n = g.n() as f64;
    let (b, c) = cyclic(a);
    let mut worst: f64 = 0.0;
    for x in 0..d {
        for y in 0..d {
            let m = EndoMatrix::from_fn(d, |l, k| g.r.get(&[x, y, k, l]));
            let lhs = m.commutator(g.j(a)).scale(n);
            let rhs = &g.j(b).scale(g.rho[c].get(&[x, y])) - &g.j(c).scale(g.rho[b].get(&[x, y]));
            worst = worst.max(lhs.max_abs_diff(&rhs));
        }
    }
    worst
}

pub fn ricci_form_checks(g: &Geometry, tol: f64) -> Vec<Check> {
    (0..3)
        .map(|a| {
            Check::residual(
                format!("curvature.rho_commutator.{}", jname(a)),
                "Ricci forms govern the commutator of R with the structures",
                "n[R(X,Y),J_a] = rho_c(X,Y) J_b - rho_b(X,Y) J_c",
                ricci_commutator_residual(g, a),
                tol,
            )
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct CurvatureSplit {
    /// `R'` in the layout of `R`.
    pub r_prime: Tensor,
    /// `(1/2n) sum_a rho_a (x) J_a` in the layout of `R`.
    pub sp1: Tensor,
    pub residual: f64,
}

/// `R = R' + (1/2n) sum rho_a J_a` with `[R'(X,Y), J_a] = 0`.
pub fn curvature_split(
    r: &Tensor,
    rho: &[Tensor; 3],
    q: &QuaternionicTriple,
    tol: f64,
) -> Result<CurvatureSplit, CurvatureError> {
    let d = r.dim();
    let n = (d / 4) as f64;
    let sp1 = Tensor::from_fn(4, d, |x| {
        (0..3).map(|a| rho[a].get(&[x[0], x[1]]) * q.get(a).get(x[3], x[2])).sum::<f64>()
            / (2.0 * n)
    });
    let r_prime = r - &sp1;
    let mut residual: f64 = 0.0;
    for x in 0..d {
        for y in 0..d {
            let m = EndoMatrix::from_fn(d, |l, k| r_prime.get(&[x, y, k, l]));
            for j in q.all() {
                residual = residual.max(m.commutator(j).max_abs());
            }
        }
    }
    if residual > tol {
        return Err(CurvatureError::SplitFails { residual });
    }
    Ok(CurvatureSplit { r_prime, sp1, residual })
}

pub fn split_checks(g: &Geometry, tol: f64) -> Vec<Check> {
    let (residual, note) = match curvature_split(&g.r, &g.rho, &g.triple, tol) {
        Ok(s) => (s.residual, "curvature splits into R' and its sp(1) part"),
        Err(CurvatureError::SplitFails { residual }) => (residual, "curvature fails to split"),
        Err(_) => (f64::NAN, "curvature split not computable"),
    };
    vec![Check::residual(
        "curvature.split",
        note,
        "[R'(X,Y), J_a] = 0, R' = R - (1/2n) sum_a rho_a J_a",
        residual,
        tol,
    )]
}

pub fn d_torsion_checks(g: &Geometry, tol: f64) -> Vec<Check> {
    let via = d_torsion_via_connection(g.torsion(), &g.nabla_torsion);
    vec![Check::residual(
        "torsion.dT_two_formulas",
        "dT from the torsion connection agrees with the Chevalley-Eilenberg dT",
        "dT = sigma{(nabla_X T)(Y,Z,U) + g(T(X,Y),T(Z,U))} - (nabla_U T)(X,Y,Z) + sigma{g(T(X,Y),T(Z,U))}",
        via.max_abs_diff(&g.d_torsion),
        tol,
    )]
}

pub fn verify_torsion_trace_identities(g: &Geometry, tol: f64) -> Vec<Check> {
    let s = &g.scalars;
    let mut out = Vec::new();
    let rhs_new = -8.0 * s.delta_t + 8.0 * s.t_norm_sq - 4.0 / 3.0 * s.torsion_norm_sq;
    for a in 0..3 {
        let j = g.j(a);
        let lhs = trace_last_two(&g.nabla_torsion.apply_endo(&[None, Some(j), None, Some(j)]));
        out.push(Check::residual(
            format!("torsion.trace_nabla_T.{}", jname(a)),
            "trace of nabla T against J is twice nabla t",
            "sum_i (nabla_X T)(J Y, e_i, J e_i) = 2 (nabla_X t) Y",
            lhs.max_abs_diff(&g.nabla_t.scale(2.0)),
            tol,
        ));
        let tr = double_trace(&g.d_torsion.apply_endo(&[None, Some(j), None, Some(j)]));
        out.push(Check::equal(
            format!("torsion.trace_dT.{}", jname(a)),
            "double J-trace of dT",
            "sum_{i,j} dT(e_j,J e_j,e_i,J e_i) = -8 delta t + 8|t|^2 - 4/3 |T|^2",
            tr,
            rhs_new,
            tol,
        ));
        let (b, c) = cyclic(a);
        let mixed = double_trace(&g.d_torsion.apply_endo(&[None, Some(g.j(b)), None, Some(g.j(c))]));
        out.push(Check::residual(
            format!("torsion.trace_dT_mixed.{}{}", jname(b), jname(c)),
            "mixed double trace of dT vanishes",
            "sum_{i,j} dT(e_j,J_b e_j,e_i,J_c e_i) = 0",
            mixed,
            tol,
        ));
    }
    out
}

pub fn verify_ricci_form_traces(g: &Geometry, tol: f64) -> Result<Vec<Check>, CurvatureError> {
    g.require_n_gt_1()?;
    let s = &g.scalars;
    let mut out = Vec::new();
    for a in 0..2 {
        out.push(Check::equal(
            format!("scalar.scal_aa_equal.{}{}", jname(a), jname(a + 1)),
            "diagonal Ricci-form traces coincide",
            "Scal_{a,a} = Scal_{b,b}",
            s.table[a][a],
            s.table[a + 1][a + 1],
            tol,
        ));
    }
    for a in 0..3 {
        for b in 0..3 {
            if a != b {
                out.push(Check::residual(
                    format!("scalar.scal_ab_zero.{}{}", jname(a), jname(b)),
                    "off-diagonal Ricci-form traces vanish",
                    "Scal_{a,b} = 0",
                    s.table[a][b],
                    tol,
                ));
            }
        }
        let phi = kaehler_form(g.j(a)).expect("triple is orthogonal");
        out.push(Check::equal(
            format!("scalar.scal_alpha_dt.{}", jname(a)),
            "J-trace of Ric from dt",
            "Scal_a = 1/2 (dt, Phi_a)",
            s.scal_alpha[a],
            0.5 * two_form_inner(&g.dt, &phi).expect("2-forms"),
            tol,
        ));
    }
    Ok(out)
}

pub fn verify_ricci_form_decomposition(g: &Geometry, tol: f64) -> Result<Vec<Check>, CurvatureError> {
    g.require_n_gt_1()?;
    let n = g.n() as f64;
    let traces: Vec<Tensor> = (0..3).map(|a| dt_j_trace(&g.d_torsion, g.j(a))).collect();
    Ok((0..3)
        .map(|a| {
            let (b, c) = cyclic(a);
            let lhs = g.rho[a].apply_endo(&[None, Some(g.j(a))]).scale(n - 1.0);
            let k = n * (n - 1.0) / (n + 2.0);
            let mix = &(&traces[a].scale(n + 1.0) - &traces[b]) - &traces[c];
            let rhs = &(&g.ric.scale(-k) + &g.nabla_t.scale(k)) + &mix.scale(n / (4.0 * (n + 2.0)));
            Check::residual(
                format!("curvature.rho_decomposition.{}", jname(a)),
                "Ricci form in terms of Ric, nabla t and traces of dT",
                "(n-1) rho_a(X,J_a Y) = -n(n-1)/(n+2) Ric + n(n-1)/(n+2) (nabla_X t)Y + n/(4(n+2)) sum{(n+1)dT(X,J_aY,e_i,J_ae_i) - dT(X,J_bY,..) - dT(X,J_cY,..)}",
                lhs.max_abs_diff(&rhs),
                tol,
            )
        })
        .collect())
}

pub fn verify_scalar_relations(g: &Geometry, tol: f64) -> Result<Vec<Check>, CurvatureError> {
    g.require_n_gt_1()?;
    let s = &g.scalars;
    let n = g.n() as f64;
    let t3 = g.torsion();
    let nt = &g.nabla_torsion;
    let mut out = Vec::new();

    let tt = torsion_square(t3);
    let d = g.algebra.dim();
    let quad = Tensor::from_fn(4, d, |x| {
        let (xx, y, z, u) = (x[0], x[1], x[2], x[3]);
        -0.5 * tt.get(&[xx, y, z, u]) - 0.25 * tt.get(&[y, z, xx, u]) - 0.25 * tt.get(&[z, xx, y, u])
    });
    let rhs15 = &(&(&g.r - &nt.scale(0.5)) + &nt.permuted(&[1, 0, 2, 3]).scale(0.5)) + &quad;
    out.push(Check::residual(
        "curvature.Rg_from_R",
        "Levi-Civita curvature from the torsion connection",
        "R^g = R - 1/2 (nabla_X T)(Y,Z,U) + 1/2 (nabla_Y T)(X,Z,U) - 1/2 g(T(X,Y),T(Z,U)) - 1/4 g(T(Y,Z),T(X,U)) - 1/4 g(T(Z,X),T(Y,U))",
        g.rg.max_abs_diff(&rhs15),
        tol,
    ));

    let tvec: Vec<f64> = g.t.as_vec();
    for a in 0..3 {
        let j = g.j(a);
        let lhs = g.rho_g[a].apply_endo(&[None, Some(j)]);
        let base = g.rho[a].apply_endo(&[None, Some(j)]);
        let njj = g.nabla_t.apply_endo(&[Some(j), Some(j)]).permuted(&[1, 0]);
        let tj: Vec<f64> = (0..d).map(|k| (0..d).map(|m| j.get(m, k) * tvec[m]).sum()).collect();
        let tjy = t3.apply_endo(&[None, Some(j), None]);
        let tjj = t3.apply_endo(&[Some(j), Some(j), None]);
        let rhs = Tensor::from_fn(2, d, |x| {
            let (xx, y) = (x[0], x[1]);
            let term3: f64 = (0..d).map(|k| tjy.get(&[xx, y, k]) * tj[k]).sum();
            let mut term4 = 0.0;
            for i in 0..d {
                for m in 0..d {
                    term4 += t3.get(&[xx, i, m]) * tjj.get(&[y, i, m]);
                }
            }
            base.get(&[xx, y]) - 0.5 * g.nabla_t.get(&[xx, y]) - 0.5 * njj.get(&[xx, y])
                + 0.5 * term3
                + 0.25 * term4
        });
        out.push(Check::residual(
            format!("curvature.rho_g_from_rho.{}", jname(a)),
            "Riemannian Ricci form in terms of the QKT one",
            "rho^g_a(X,J_aY) = rho_a(X,J_aY) - 1/2(nabla_X t)Y - 1/2(nabla_{J_aY} t)J_aX + 1/2 t(J_a T(X,J_aY)) + 1/4 sum g(T(X,e_i),T(J_aY,J_ae_i))",
            lhs.max_abs_diff(&rhs),
            tol,
        ));
    }

    let stt = Tensor::from_fn(2, d, |x| {
        let mut acc = 0.0;
        for i in 0..d {
            for m in 0..d {
                acc += t3.get(&[x[0], i, m]) * t3.get(&[x[1], i, m]);
            }
        }
        acc
    });
    let ric_rhs = &(&g.ric + &g.delta_torsion.scale(0.5)) + &stt.scale(0.25);
    out.push(Check::residual(
        "scalar.ric_g_from_ric",
        "Riemannian Ricci tensor from the QKT one",
        "Ric^g(X,Y) = Ric(X,Y) + 1/2 delta T(X,Y) + 1/4 sum_{i=1}^{4n} g(T(X,e_i),T(Y,e_i))",
        g.ric_g.max_abs_diff(&ric_rhs),
        tol,
    ));
    out.push(Check::equal(
        "scalar.scal_g_from_scal",
        "Riemannian scalar curvature from the QKT one",
        "Scal^g = Scal + 1/4 |T|^2",
        s.scal_g,
        s.scal + 0.25 * s.torsion_norm_sq,
        tol,
    ));
    for a in 0..2 {
        out.push(Check::equal(
            format!("scalar.scal_g_alpha_equal.{}{}", jname(a), jname(a + 1)),
            "Riemannian Ricci-form traces coincide",
            "Scal^g_a = Scal^g_b",
            s.table_g[a][a],
            s.table_g[a + 1][a + 1],
            tol,
        ));
    }
    let common = -3.0 * s.delta_t + 2.0 * s.t_norm_sq;
    out.push(Check::equal(
        "scalar.scal_gq",
        "quaternionic *-scalar curvature",
        "Scal^g_Q = Scal_Q - delta t + |t|^2 - 1/12 |T|^2",
        s.scal_gq,
        s.scal_q - s.delta_t + s.t_norm_sq - s.torsion_norm_sq / 12.0,
        tol,
    ));
    out.push(Check::equal(
        "scalar.scal_g_from_scal_q",
        "Riemannian scalar curvature from Scal_Q",
        "Scal^g = (n+2)/n Scal_Q - 3 delta t + 2|t|^2 - 1/12 |T|^2",
        s.scal_g,
        (n + 2.0) / n * s.scal_q + common - s.torsion_norm_sq / 12.0,
        tol,
    ));
    out.push(Check::equal(
        "scalar.scal_from_scal_q",
        "QKT scalar curvature from Scal_Q",
        "Scal = (n+2)/n Scal_Q - 3 delta t + 2|t|^2 - 1/3 |T|^2",
        s.scal,
        (n + 2.0) / n * s.scal_q + common - s.torsion_norm_sq / 3.0,
        tol,
    ));
    for a in 0..3 {
        let (b, c) = cyclic(a);
        let phi = kaehler_form(g.j(c)).expect("triple is orthogonal");
        out.push(Check::equal(
            format!("scalar.scal_g_ab.{}{}", jname(a), jname(b)),
            "mixed Riemannian Ricci-form trace",
            "Scal^g_{a,b} = Scal_c",
            s.table_g[a][b],
            s.scal_alpha[c],
            tol,
        ));
        out.push(Check::equal(
            format!("scalar.scal_c_dt.{}", jname(c)),
            "mixed trace through dt",
            "Scal_c = 1/2 (dt, Phi_c)",
            s.scal_alpha[c],
            0.5 * two_form_inner(&g.dt, &phi).expect("2-forms"),
            tol,
        ));
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct InequalityTerms {
    /// `Scal^g - Scal^g_Q - (2/n) Scal_Q`.
    pub first: f64,
    /// `Scal^g - 2 Scal^g_Q - ((2-n)/n) Scal_Q`.
    pub second: f64,
    /// `-2 delta t + |t|^2`.
    pub first_rhs: f64,
    /// `-2 delta t + 2|t|^2`, the coefficient as printed in the source.
    pub first_rhs_printed: f64,
    /// `-delta t + 1/12 |T|^2`.
    pub second_rhs: f64,
    pub balanced: bool,
    pub quaternionic_kaehler: bool,
}

pub fn scalar_inequality_terms(g: &Geometry, tol: f64) -> Result<InequalityTerms, CurvatureError> {
    g.require_n_gt_1()?;
    let s = &g.scalars;
    let n = g.n() as f64;
    Ok(InequalityTerms {
        first: s.scal_g - s.scal_gq - 2.0 / n * s.scal_q,
        second: s.scal_g - 2.0 * s.scal_gq - (2.0 - n) / n * s.scal_q,
        first_rhs: -2.0 * s.delta_t + s.t_norm_sq,
        first_rhs_printed: -2.0 * s.delta_t + 2.0 * s.t_norm_sq,
        second_rhs: -s.delta_t + s.torsion_norm_sq / 12.0,
        balanced: g.t.max_abs() <= tol,
        quaternionic_kaehler: g.torsion().max_abs() <= tol,
    })
}

pub fn scalar_inequality_checks(g: &Geometry, tol: f64) -> Result<Vec<Check>, CurvatureError> {
    let it = scalar_inequality_terms(g, tol)?;
    let s = &g.scalars;
    let mut out = vec![
        Check::equal(
            "scalar.inequality.first",
            "first scalar combination",
            "Scal^g - Scal^g_Q - (2/n) Scal_Q = -2 delta t + |t|^2",
            it.first,
            it.first_rhs,
            tol,
        ),
        Check::equal(
            "scalar.inequality.first_printed_offset",
            "the doubled |t|^2 coefficient overshoots by exactly |t|^2",
            "(-2 delta t + 2|t|^2) - (Scal^g - Scal^g_Q - (2/n) Scal_Q) = |t|^2",
            it.first_rhs_printed - it.first,
            s.t_norm_sq,
            tol,
        ),
        Check::equal(
            "scalar.inequality.second",
            "second scalar combination",
            "Scal^g - 2 Scal^g_Q - ((2-n)/n) Scal_Q = -delta t + 1/12 |T|^2",
            it.second,
            it.second_rhs,
            tol,
        ),
    ];
    // equality cases are pointwise statements only when t is coclosed
    if s.delta_t.abs() <= tol {
        out.push(Check::agree(
            "scalar.inequality.first_equality_iff_balanced",
            "first combination vanishes exactly for balanced structures",
            "Scal^g - Scal^g_Q - (2/n) Scal_Q = 0 <=> t = 0",
            it.first.abs() <= tol,
            it.balanced,
        ));
        out.push(Check::agree(
            "scalar.inequality.second_equality_iff_qk",
            "second combination vanishes exactly for torsion-free structures",
            "Scal^g - 2 Scal^g_Q - ((2-n)/n) Scal_Q = 0 <=> T = 0",
            it.second.abs() <= tol,
            it.quaternionic_kaehler,
        ));
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Instanton {
    pub instanton: bool,
    pub checks: Vec<Check>,
}

/// `rho*_a(X,Y) = rho^g_a(X, J_a Y)`.
pub fn star_ricci(g: &Geometry, a: usize) -> Tensor {
    g.rho_g[a].apply_endo(&[None, Some(g.j(a))])
}

pub fn instanton_and_star_ricci(g: &Geometry, tol: f64) -> Result<Instanton, CurvatureError> {
    let n = g.n() as f64;
    let mut checks = Vec::new();
    let (mut rho_type, mut star_symmetric, mut dt_type) = (true, true, true);
    for a in 0..3 {
        let j = g.j(a);
        let rho20 = two_form_anti_part(&g.rho[a], j).max_abs();
        let dt20 = two_form_anti_part(&g.dt, j).max_abs();
        let rs = star_ricci(g, a);
        let asym = (&rs - &rs.permuted(&[1, 0])).max_abs();
        rho_type &= rho20 <= tol;
        dt_type &= dt20 <= tol;
        star_symmetric &= asym <= tol;

        let dtp = &g.dt - &g.dt.apply_endo(&[Some(j), Some(j)]);
        let l1 = &g.rho[a].apply_endo(&[None, Some(j)]) + &g.rho[a].apply_endo(&[Some(j), None]);
        let l2 = &g.rho_g[a].apply_endo(&[None, Some(j)]) + &g.rho_g[a].apply_endo(&[Some(j), None]);
        checks.push(Check::residual(
            format!("instanton.rho_vs_dt.{}", jname(a)),
            "(2,0)+(0,2) part of rho_a is governed by dt",
            "rho_a(X,J_aY) + rho_a(J_aX,Y) = -n/2 (dt(X,Y) - dt(J_aX,J_aY))",
            (&l1 + &dtp.scale(n / 2.0)).max_abs(),
            tol,
        ));
        checks.push(Check::residual(
            format!("instanton.rho_g_vs_dt.{}", jname(a)),
            "(2,0)+(0,2) part of rho^g_a is governed by dt",
            "rho^g_a(X,J_aY) + rho^g_a(J_aX,Y) = -(n+1)/2 (dt(X,Y) - dt(J_aX,J_aY))",
            (&l2 + &dtp.scale((n + 1.0) / 2.0)).max_abs(),
            tol,
        ));
        checks.push(Check::residual(
            format!("instanton.rho_g_vs_rho.{}", jname(a)),
            "difference of the two (2,0)+(0,2) parts",
            "rho^g_a(X,J_aY) + rho^g_a(J_aX,Y) = rho_a(X,J_aY) + rho_a(J_aX,Y) - 1/2 (dt(X,Y) - dt(J_aX,J_aY))",
            (&(&l2 - &l1) + &dtp.scale(0.5)).max_abs(),
            tol,
        ));
        if g.is_hkt() {
            checks.push(Check::residual(
                format!("instanton.star_ricci_symmetric.{}", jname(a)),
                "*-Ricci tensors of a HKT structure are symmetric",
                "rho*_a(X,Y) = rho*_a(Y,X)",
                asym,
                tol,
            ));
        }
    }
    if !(rho_type == star_symmetric && star_symmetric == dt_type) {
        return Err(CurvatureError::InconsistentCriteria { rho_type, star_symmetric, dt_type });
    }
    checks.push(Check::agree(
        "instanton.criteria_agree",
        "instanton type from rho_a type, *-Ricci symmetry and dt type",
        "rho_a in (1,1) <=> rho*_a symmetric <=> dt in (1,1)",
        rho_type,
        star_symmetric && dt_type,
    ));
    Ok(Instanton { instanton: rho_type, checks })
}

pub fn verify_ricci_form_rotation(g: &Geometry, tol: f64) -> Vec<Check> {
    (0..3)
        .map(|a| {
            let (b, c) = cyclic(a);
            let jb = g.j(b);
            let l = &g.rho[a].apply_endo(&[Some(jb), Some(jb)]) - &g.rho[a];
            let r = &g.rho[c].apply_endo(&[Some(jb), None]) + &g.rho[c].apply_endo(&[None, Some(jb)]);
            Check::residual(
                format!("curvature.rho_rotation.{}", jname(a)),
                "Ricci forms under rotation by J_b",
                "rho_a(J_bX,J_bY) - rho_a(X,Y) = rho_c(J_bX,Y) + rho_c(X,J_bY)",
                l.max_abs_diff(&r),
                tol,
            )
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct Homothety {
    /// `c^2` when the fit is exact, positive and the structure is of instanton type.
    pub c_squared: Option<f64>,
    /// Least-squares `k` in `rho_a(J_aX,Y) + rho_a(J_cX,J_bY) = k g(X,Y)`.
    pub best_fit: f64,
    pub residual: f64,
}

pub fn special_homothety_check(g: &Geometry, tol: f64) -> Result<Homothety, CurvatureError> {
    let instanton = instanton_and_star_ricci(g, tol)?.instanton;
    let d = g.algebra.dim();
    let lhs: Vec<Tensor> = (0..3)
        .map(|a| {
            let (b, c) = cyclic(a);
            &g.rho[a].apply_endo(&[Some(g.j(a)), None]) + &g.rho[a].apply_endo(&[Some(g.j(c)), Some(g.j(b))])
        })
        .collect();
    let best_fit = lhs.iter().map(|l| (0..d).map(|i| l.get(&[i, i])).sum::<f64>()).sum::<f64>() / (3 * d) as f64;
    let id = Tensor::from_fn(2, d, |x| if x[0] == x[1] { best_fit } else { 0.0 });
    let residual = lhs.iter().map(|l| l.max_abs_diff(&id)).fold(0.0, f64::max);
    let exact = residual <= HOMOTHETY_RTOL * best_fit.abs().max(1.0);
    let c_squared = (exact && instanton && best_fit > tol).then(|| 1.0 / best_fit);
    Ok(Homothety { c_squared, best_fit, residual })
}

pub fn homothety_checks(g: &Geometry, tol: f64) -> Vec<Check> {
    let formula = "rho_a(J_aX,Y) + rho_a(J_cX,J_bY) = (1/c^2) g(X,Y)";
    match special_homothety_check(g, tol) {
        Ok(h) => vec![Check::info(
            "homothety.best_fit",
            match h.c_squared {
                Some(c2) => format!("special homothety with c^2 = {c2:.6e} (lhs: constant, rhs: fit residual)"),
                None => "no special homothety (lhs: best-fit constant, rhs: fit residual)".to_string(),
            },
            formula,
            h.best_fit,
            h.residual,
        )],
        Err(e) => vec![Check::failed("homothety.best_fit", e.to_string(), formula)],
    }
}

/// `theta = -delta Phi o J`.
pub fn lee_form(g: &Geometry, a: usize) -> Tensor {
    let j = g.j(a);
    let phi = kaehler_form(j).expect("triple is orthogonal");
    let dphi = codifferential(&g.lc, &phi);
    dphi.apply_endo(&[Some(j)]).scale(-1.0)
}

pub fn hkt_suite(g: &Geometry, tol: f64) -> Result<Vec<Check>, CurvatureError> {
    if !g.is_hkt() {
        return Err(CurvatureError::NotHkt);
    }
    let s = &g.scalars;
    let mut out = Vec::new();
    let thetas: Vec<Tensor> = (0..3).map(|a| lee_form(g, a)).collect();
    for a in 0..3 {
        let j = g.j(a);
        out.push(Check::residual(
            format!("hkt.lee_form_is_t.{}", jname(a)),
            "Lee form equals the torsion 1-form",
            "theta_a = -delta Phi_a o J_a = t",
            thetas[a].max_abs_diff(&g.t),
            tol,
        ));
        let dtheta = ce_derivative(&g.algebra, &thetas[a]);
        out.push(Check::residual(
            format!("hkt.d_lee_form_type_11.{}", jname(a)),
            "d theta is of type (1,1)",
            "d theta(X,Y) = d theta(J_aX,J_aY)",
            two_form_anti_part(&dtheta, j).max_abs(),
            tol,
        ));
        out.push(Check::residual(
            format!("hkt.ricci_forms_vanish.{}", jname(a)),
            "all Ricci forms of a HKT connection vanish",
            "rho_a = 0",
            g.rho[a].max_abs(),
            tol,
        ));
        let nabla_theta = covariant_derivative(&g.qkt.connection, &thetas[a]);
        let rhs = &nabla_theta + &dt_j_trace(&g.d_torsion, j).scale(0.25);
        out.push(Check::residual(
            format!("hkt.ricci_from_lee_form.{}", jname(a)),
            "Ricci tensor through the Lee form and dT",
            "Ric(X,Y) = (nabla_X theta)Y + 1/4 sum_i dT(X,J_aY,e_i,J_ae_i)",
            g.ric.max_abs_diff(&rhs),
            tol,
        ));
    }
    if g.t.max_abs() <= tol {
        out.push(Check::residual(
            "hkt.balanced.ric_symmetric",
            "balanced HKT: Ric is symmetric",
            "Ric(X,Y) = Ric(Y,X)",
            (&g.ric - &g.ric.permuted(&[1, 0])).max_abs(),
            tol,
        ));
        for a in 0..3 {
            let j = g.j(a);
            out.push(Check::residual(
                format!("hkt.balanced.ric_j_invariant.{}", jname(a)),
                "balanced HKT: Ric is J-invariant",
                "Ric(J_aX,J_aY) = Ric(X,Y)",
                g.ric.max_abs_diff(&g.ric.apply_endo(&[Some(j), Some(j)])),
                tol,
            ));
        }
        out.push(Check::residual(
            "hkt.balanced.torsion_coclosed",
            "balanced HKT: torsion is coclosed",
            "delta T = 0",
            g.delta_torsion.max_abs(),
            tol,
        ));
    }
    out.push(Check::equal(
        "hkt.scal_g_minus_scal_gq",
        "HKT first scalar combination",
        "Scal^g - Scal^g_Q = -2 delta t + |t|^2",
        s.scal_g - s.scal_gq,
        -2.0 * s.delta_t + s.t_norm_sq,
        tol,
    ));
    out.push(Check::equal(
        "hkt.scal_g_minus_2scal_gq",
        "HKT second scalar combination",
        "Scal^g - 2 Scal^g_Q = -delta t + 1/12 |T|^2",
        s.scal_g - 2.0 * s.scal_gq,
        -s.delta_t + s.torsion_norm_sq / 12.0,
        tol,
    ));
    if s.delta_t.abs() <= tol {
        out.push(Check::at_least(
            "hkt.sign.scal_g_minus_2scal_gq",
            "pointwise sign with coclosed t",
            "Scal^g - 2 Scal^g_Q >= 0",
            s.scal_g - 2.0 * s.scal_gq,
            0.0,
            tol,
        ));
        out.push(Check::at_least(
            "hkt.sign.scal_g_minus_scal_gq",
            "pointwise sign with coclosed t",
            "Scal^g - Scal^g_Q >= 0",
            s.scal_g - s.scal_gq,
            0.0,
            tol,
        ));
    }
    Ok(out)
}
