//! The twistor space of a QKT model at a fiber point: the almost complex
//! structures `I_1`, `I_2`, the metric `h_c`, the tensor `F = nabla^h Omega_I`,
//! the Riemannian curvature `K`, and the Gray-Hervella classes.
//!
//! Tangent vectors at a point are split into a vertical part, coordinates
//! `(v0, v1)` of `v0 I0 + v1 K0` in `m = span{I0, K0}`, and a horizontal part
//! on the model's frame. `(I0, J0, K0)` is the adapted triple with `J0 = a.J`.

use std::f64::consts::TAU;
use std::ops::{Add, Sub};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, UnitSphere};
use thiserror::Error;

use crate::curvature_lab::{ricci_form, special_homothety_check, CurvatureError, Geometry, HOMOTHETY_RTOL};
use crate::frame_tensor::{dot, Tensor};
use crate::lie_model::covariant_derivative;
use crate::quaternionic::{rotation_about, rotation_to, QuatError, QuaternionicTriple};
use crate::report::Check;

/// Seeded points added to the six axis points of the fiber grid.
pub const GRID_RANDOM_POINTS: usize = 20;
/// `psi` must vanish below this at the homothety scale `c`.
pub const G1_PROBE_ZERO: f64 = 1e-8;
/// ... and exceed this at `2c`.
pub const G1_PROBE_NONZERO: f64 = 1e-3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TwistorError {
    #[error(transparent)]
    Quat(#[from] QuatError),
    #[error("fiber scale c must be positive, got {0}")]
    NonPositiveC(f64),
    #[error("twistor Ricci tensor requires a HKT model")]
    NotHkt,
    #[error(transparent)]
    Curvature(#[from] CurvatureError),
    #[error("equivalence `{name}` fails: {lhs} vs {rhs}")]
    InconsistentEquivalence { name: &'static str, lhs: bool, rhs: bool },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Structure {
    I1,
    I2,
}

impl Structure {
    pub const ALL: [Structure; 2] = [Structure::I1, Structure::I2];

    pub fn name(self) -> &'static str {
        match self {
            Structure::I1 => "I1",
            Structure::I2 => "I2",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GrayClass {
    Kaehler,
    Hermitian,
    G1,
    SemiKaehler,
    QuasiKaehler,
    NearlyKaehler,
    AlmostKaehler,
}

impl GrayClass {
    pub const ALL: [GrayClass; 7] = [
        GrayClass::Kaehler,
        GrayClass::Hermitian,
        GrayClass::G1,
        GrayClass::SemiKaehler,
        GrayClass::QuasiKaehler,
        GrayClass::NearlyKaehler,
        GrayClass::AlmostKaehler,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GrayClass::Kaehler => "kaehler",
            GrayClass::Hermitian => "hermitian",
            GrayClass::G1 => "g1",
            GrayClass::SemiKaehler => "semi_kaehler",
            GrayClass::QuasiKaehler => "quasi_kaehler",
            GrayClass::NearlyKaehler => "nearly_kaehler",
            GrayClass::AlmostKaehler => "almost_kaehler",
        }
    }

    fn formula(self) -> &'static str {
        match self {
            GrayClass::Kaehler => "F = 0",
            GrayClass::Hermitian => "F(X,Y,Z) - F(IX,IY,Z) = 0",
            GrayClass::G1 => "F(X,Y,Z) + F(Y,X,Z) - F(IX,IY,Z) - F(IY,IX,Z) = 0",
            GrayClass::SemiKaehler => "sum_a F(E_a,E_a,Z) = 0",
            GrayClass::QuasiKaehler => "F(X,Y,Z) + F(IX,IY,Z) = 0",
            GrayClass::NearlyKaehler => "F(X,Y,Z) + F(Y,X,Z) = 0",
            GrayClass::AlmostKaehler => "F(X,Y,Z) + F(Y,Z,X) + F(Z,X,Y) = 0",
        }
    }
}

/// Frobenius norms of the defining expression of each class.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClassResiduals(pub [f64; 7]);

impl ClassResiduals {
    pub fn get(&self, class: GrayClass) -> f64 {
        self.0[class as usize]
    }

    pub fn holds(&self, class: GrayClass, tol: f64) -> bool {
        self.get(class) <= tol
    }
}

/// A point of the fiber `S^2`, with its adapted triple. `gauge` is the extra
/// rotation about `a` applied after the canonical frame.
#[derive(Clone, Debug)]
pub struct TwistorPoint {
    pub a: [f64; 3],
    pub gauge: f64,
    pub adapted: QuaternionicTriple,
}

impl TwistorPoint {
    pub fn new(q: &QuaternionicTriple, a: [f64; 3]) -> Result<Self, TwistorError> {
        Self::with_gauge(q, a, 0.0)
    }

    pub fn with_gauge(q: &QuaternionicTriple, a: [f64; 3], angle: f64) -> Result<Self, TwistorError> {
        let r = rotation_about(&a, angle) * rotation_to(&a)?;
        Ok(TwistorPoint { a, gauge: angle, adapted: q.rotate(&r) })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TwistorVector {
    /// Coordinates in `(I0, K0)`.
    pub vertical: [f64; 2],
    pub horizontal: Vec<f64>,
}

impl TwistorVector {
    pub fn vertical(v: [f64; 2], dim: usize) -> Self {
        TwistorVector { vertical: v, horizontal: vec![0.0; dim] }
    }

    pub fn horizontal(h: Vec<f64>) -> Self {
        TwistorVector { vertical: [0.0; 2], horizontal: h }
    }
}

/// A dense tensor over the `h_c`-orthonormal basis of one tangent space.
#[derive(Clone, Debug, PartialEq)]
pub struct BasisTensor {
    rank: usize,
    n: usize,
    data: Vec<f64>,
}

impl BasisTensor {
    pub fn from_fn(rank: usize, n: usize, mut f: impl FnMut(&[usize]) -> f64) -> Self {
        let mut idx = vec![0usize; rank];
        let data = (0..n.pow(rank as u32))
            .map(|flat| {
                let mut r = flat;
                for slot in (0..rank).rev() {
                    idx[slot] = r % n;
                    r /= n;
                }
                f(&idx)
            })
            .collect();
        BasisTensor { rank, n, data }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[idx.iter().fold(0, |acc, &i| acc * self.n + i)]
    }

    /// `out[i_0..] = self[i_{perm[0]}, i_{perm[1]}, ..]`.
    pub fn permuted(&self, perm: &[usize]) -> BasisTensor {
        let mut src = vec![0usize; self.rank];
        BasisTensor::from_fn(self.rank, self.n, |idx| {
            for (s, &p) in perm.iter().enumerate() {
                src[s] = idx[p];
            }
            self.get(&src)
        })
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    fn zip(&self, other: &BasisTensor, f: impl Fn(f64, f64) -> f64) -> BasisTensor {
        assert_eq!((self.rank, self.n), (other.rank, other.n));
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect();
        BasisTensor { rank: self.rank, n: self.n, data }
    }
}

impl Add for &BasisTensor {
    type Output = BasisTensor;
    fn add(self, rhs: &BasisTensor) -> BasisTensor {
        self.zip(rhs, |a, b| a + b)
    }
}

impl Sub for &BasisTensor {
    type Output = BasisTensor;
    fn sub(self, rhs: &BasisTensor) -> BasisTensor {
        self.zip(rhs, |a, b| a - b)
    }
}

fn is_zero(v: &[f64]) -> bool {
    v.iter().all(|&x| x == 0.0)
}

fn mv(m: &DMatrix<f64>, x: &[f64]) -> Vec<f64> {
    (m * DVector::from_column_slice(x)).as_slice().to_vec()
}

/// `(A, B) = trace(A B^T)`.
fn ip(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.dot(b)
}

fn unit(d: usize, i: usize) -> Vec<f64> {
    let mut e = vec![0.0; d];
    e[i] = 1.0;
    e
}

/// Point-independent data: curvature endomorphisms `Omega(e_i, e_j)` and
/// their covariant derivatives.
pub struct TwistorModel<'g> {
    geometry: &'g Geometry,
    omega: Vec<DMatrix<f64>>,
    nabla_omega: Vec<DMatrix<f64>>,
}

impl<'g> TwistorModel<'g> {
    pub fn new(geometry: &'g Geometry) -> Self {
        let d = geometry.algebra.dim();
        let r = &geometry.r;
        let nr = covariant_derivative(&geometry.qkt.connection, r);
        let omega = (0..d * d)
            .map(|ij| DMatrix::from_fn(d, d, |l, k| r.get(&[ij / d, ij % d, k, l])))
            .collect();
        let nabla_omega = (0..d * d * d)
            .map(|zij| {
                let (z, i, j) = (zij / (d * d), (zij / d) % d, zij % d);
                DMatrix::from_fn(d, d, |l, k| nr.get(&[z, i, j, k, l]))
            })
            .collect();
        TwistorModel { geometry, omega, nabla_omega }
    }

    pub fn geometry(&self) -> &'g Geometry {
        self.geometry
    }

    fn d(&self) -> usize {
        self.geometry.algebra.dim()
    }

    /// Real dimension of the twistor space.
    pub fn dim(&self) -> usize {
        self.d() + 2
    }

    pub fn point(&self, a: [f64; 3]) -> Result<TwistorPoint, TwistorError> {
        TwistorPoint::new(&self.geometry.triple, a)
    }

    pub fn at(&self, point: TwistorPoint, c: f64) -> Result<Fiber<'_>, TwistorError> {
        if !(c > 0.0) {
            return Err(TwistorError::NonPositiveC(c));
        }
        let [i0, j0, k0] = point.adapted.all().clone().map(|m| m.into_matrix());
        Ok(Fiber { model: self, point, c, i0, j0, k0 })
    }

    /// `Omega(x, y)`, the endomorphism with `M[l][k] = R(x, y, e_k, e_l)`.
    fn omega(&self, x: &[f64], y: &[f64]) -> DMatrix<f64> {
        let d = self.d();
        let mut m = DMatrix::zeros(d, d);
        for (i, &xi) in x.iter().enumerate().filter(|(_, v)| **v != 0.0) {
            for (j, &yj) in y.iter().enumerate().filter(|(_, v)| **v != 0.0) {
                m += &self.omega[i * d + j] * (xi * yj);
            }
        }
        m
    }

    /// `(nabla_z Omega)(x, y)`.
    fn nabla_omega(&self, z: &[f64], x: &[f64], y: &[f64]) -> DMatrix<f64> {
        let d = self.d();
        let mut m = DMatrix::zeros(d, d);
        for (a, &za) in z.iter().enumerate().filter(|(_, v)| **v != 0.0) {
            for (i, &xi) in x.iter().enumerate().filter(|(_, v)| **v != 0.0) {
                for (j, &yj) in y.iter().enumerate().filter(|(_, v)| **v != 0.0) {
                    m += &self.nabla_omega[(a * d + i) * d + j] * (za * xi * yj);
                }
            }
        }
        m
    }

    /// `Theta(x, y)_k = T(x, y, e_k)`.
    fn theta(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        self.geometry.torsion().contract_first(x).contract_first(y).as_vec()
    }

    /// `(nabla_x T)(y, z, e_k)`.
    fn nabla_theta(&self, x: &[f64], y: &[f64], z: &[f64]) -> Vec<f64> {
        self.geometry.nabla_torsion.contract_first(x).contract_first(y).contract_first(z).as_vec()
    }
}

/// The twistor space at one point with fiber scale `c`.
pub struct Fiber<'m> {
    model: &'m TwistorModel<'m>,
    point: TwistorPoint,
    c: f64,
    i0: DMatrix<f64>,
    j0: DMatrix<f64>,
    k0: DMatrix<f64>,
}

enum Part<'a> {
    V(&'a DMatrix<f64>),
    H(&'a [f64]),
}

impl<'m> Fiber<'m> {
    pub fn point(&self) -> &TwistorPoint {
        &self.point
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    fn d(&self) -> usize {
        self.model.d()
    }

    fn four_n(&self) -> f64 {
        self.d() as f64
    }

    fn c2(&self) -> f64 {
        self.c * self.c
    }

    /// `v0 I0 + v1 K0`.
    pub fn vm(&self, v: &[f64; 2]) -> DMatrix<f64> {
        &self.i0 * v[0] + &self.k0 * v[1]
    }

    /// Orthogonal projection of an endomorphism onto `m`.
    fn proj_m(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        (&self.i0 * ip(m, &self.i0) + &self.k0 * ip(m, &self.k0)) / self.four_n()
    }

    /// `h_c = c^2 (A, B) + g`.
    pub fn h_c(&self, x: &TwistorVector, y: &TwistorVector) -> f64 {
        self.c2() * ip(&self.vm(&x.vertical), &self.vm(&y.vertical)) + dot(&x.horizontal, &y.horizontal)
    }

    /// `(I0/(c sqrt(4n)), K0/(c sqrt(4n)), e_0, .., e_{4n-1})`.
    pub fn basis(&self) -> Vec<TwistorVector> {
        let d = self.d();
        let s = 1.0 / (self.c * self.four_n().sqrt());
        let mut out = vec![TwistorVector::vertical([s, 0.0], d), TwistorVector::vertical([0.0, s], d)];
        out.extend((0..d).map(|k| TwistorVector::horizontal(unit(d, k))));
        out
    }

    /// `I_1 = (J0, J0)`, `I_2 = (-J0, J0)` on vertical and horizontal parts.
    pub fn i_action(&self, s: Structure, x: &TwistorVector) -> TwistorVector {
        let ja = &self.j0 * self.vm(&x.vertical);
        let mut co = [ip(&ja, &self.i0) / self.four_n(), ip(&ja, &self.k0) / self.four_n()];
        if s == Structure::I2 {
            co = co.map(|v| -v);
        }
        TwistorVector { vertical: co, horizontal: mv(&self.j0, &x.horizontal) }
    }

    /// `Im[p][q] = h_c(I E_q, E_p)`.
    pub fn i_matrix(&self, s: Structure) -> DMatrix<f64> {
        let b = self.basis();
        let ib: Vec<TwistorVector> = b.iter().map(|x| self.i_action(s, x)).collect();
        DMatrix::from_fn(b.len(), b.len(), |p, q| self.h_c(&ib[q], &b[p]))
    }

    fn f_vhh(&self, a: &DMatrix<f64>, x: &[f64], y: &[f64]) -> f64 {
        let m = self.model;
        let (j0x, j0y) = (mv(&self.j0, x), mv(&self.j0, y));
        self.c2() / 2.0 * (ip(a, &m.omega(&j0x, y)) + ip(a, &m.omega(x, &j0y)))
            + 2.0 * dot(y, &mv(&(a * &self.j0), x))
    }

    fn f_hvh(&self, s: Structure, x: &[f64], b: &DMatrix<f64>, y: &[f64]) -> f64 {
        let m = self.model;
        let oxy = m.omega(x, y);
        let first = match s {
            Structure::I1 => ip(&(&self.j0 * b), &oxy),
            Structure::I2 => ip(b, &(&self.j0 * &oxy)),
        };
        self.c2() / 2.0 * (first + ip(b, &m.omega(x, &mv(&self.j0, y))))
    }

    fn f_hhh(&self, x: &[f64], y: &[f64], z: &[f64]) -> f64 {
        let m = self.model;
        -0.5 * dot(&m.theta(x, &mv(&self.j0, y)), z) - 0.5 * dot(&m.theta(x, y), &mv(&self.j0, z))
    }

    /// `F(X, Y, Z) = h_c((nabla^h_X I) Y, Z)`.
    pub fn f_tensor(&self, s: Structure, x: &TwistorVector, y: &TwistorVector, z: &TwistorVector) -> f64 {
        let (xh, yh, zh) = (&x.horizontal, &y.horizontal, &z.horizontal);
        let mut acc = 0.0;
        if !is_zero(xh) && !is_zero(yh) && !is_zero(zh) {
            acc += self.f_hhh(xh, yh, zh);
        }
        if !is_zero(&x.vertical) && !is_zero(yh) && !is_zero(zh) {
            acc += self.f_vhh(&self.vm(&x.vertical), yh, zh);
        }
        if !is_zero(xh) && !is_zero(zh) && !is_zero(&y.vertical) {
            acc += self.f_hvh(s, xh, &self.vm(&y.vertical), zh);
        }
        if !is_zero(xh) && !is_zero(yh) && !is_zero(&z.vertical) {
            acc -= self.f_hvh(s, xh, &self.vm(&z.vertical), yh);
        }
        acc
    }

    pub fn f_basis(&self, s: Structure) -> BasisTensor {
        let b = self.basis();
        BasisTensor::from_fn(3, b.len(), |i| self.f_tensor(s, &b[i[0]], &b[i[1]], &b[i[2]]))
    }

    fn k_vvvv(&self, a: &DMatrix<f64>, b: &DMatrix<f64>, c: &DMatrix<f64>, d: &DMatrix<f64>) -> f64 {
        -self.c2() * ip(&(a * b - b * a), &(c * d - d * c))
    }

    fn k_vhvh(&self, a: &DMatrix<f64>, x: &[f64], b: &DMatrix<f64>, y: &[f64]) -> f64 {
        let m = self.model;
        let c2 = self.c2();
        let mixed: f64 = (0..self.d())
            .map(|i| {
                let e = unit(self.d(), i);
                ip(b, &m.omega(x, &e)) * ip(a, &m.omega(y, &e))
            })
            .sum();
        c2 / 2.0 * ip(&(a * b - b * a), &m.omega(x, y)) - c2 * c2 / 4.0 * mixed
    }

    fn k_hhhv(&self, x: &[f64], y: &[f64], z: &[f64], a: &DMatrix<f64>) -> f64 {
        let m = self.model;
        let c2 = self.c2();
        c2 / 2.0 * ip(a, &m.nabla_omega(z, x, y))
            + c2 / 4.0 * ip(a, &m.omega(&m.theta(y, z), x))
            + c2 / 4.0 * ip(a, &m.omega(&m.theta(z, x), y))
    }

    fn k_hhhh(&self, x: &[f64], y: &[f64], z: &[f64], w: &[f64]) -> f64 {
        let m = self.model;
        let c2 = self.c2();
        let om = |p: &[f64], q: &[f64]| self.proj_m(&m.omega(p, q));
        let th = |p: &[f64], q: &[f64]| m.theta(p, q);
        dot(&mv(&m.omega(x, y), z), w)
            - c2 / 4.0 * ip(&om(x, w), &om(y, z))
            + c2 / 4.0 * ip(&om(x, z), &om(y, w))
            + c2 / 2.0 * ip(&om(x, y), &om(z, w))
            - 0.25 * dot(&th(x, w), &th(y, z))
            + 0.25 * dot(&th(x, z), &th(y, w))
            - 0.5 * dot(&th(x, y), &th(z, w))
            - 0.5 * dot(&m.nabla_theta(x, y, z), w)
            + 0.5 * dot(&m.nabla_theta(y, x, z), w)
    }

    fn k_block(&self, p: &[Part; 4]) -> f64 {
        use Part::{H, V};
        match p {
            [V(a), V(b), V(c), V(d)] => self.k_vvvv(a, b, c, d),
            [V(a), H(x), V(b), H(y)] | [H(x), V(a), H(y), V(b)] => self.k_vhvh(a, x, b, y),
            [V(a), H(x), H(y), V(b)] | [H(x), V(a), V(b), H(y)] => -self.k_vhvh(a, x, b, y),
            [V(a), V(b), H(x), H(y)] | [H(x), H(y), V(a), V(b)] => {
                self.k_vhvh(a, x, b, y) - self.k_vhvh(b, x, a, y)
            }
            [H(x), H(y), H(z), V(a)] => self.k_hhhv(x, y, z, a),
            [H(x), H(y), V(a), H(z)] => -self.k_hhhv(x, y, z, a),
            [H(x), V(a), H(y), H(z)] => self.k_hhhv(y, z, x, a),
            [V(a), H(x), H(y), H(z)] => -self.k_hhhv(y, z, x, a),
            [H(x), H(y), H(z), H(w)] => self.k_hhhh(x, y, z, w),
            _ => 0.0,
        }
    }

    /// `K(X, Y, Z, W) = h_c(R^h(X, Y) Z, W)`.
    pub fn k_tensor(&self, x: &TwistorVector, y: &TwistorVector, z: &TwistorVector, w: &TwistorVector) -> f64 {
        let args = [x, y, z, w];
        let verts: Vec<Option<DMatrix<f64>>> =
            args.iter().map(|a| (!is_zero(&a.vertical)).then(|| self.vm(&a.vertical))).collect();
        let mut acc = 0.0;
        for pattern in 0..16u8 {
            let parts: Option<Vec<Part>> = (0..4)
                .map(|k| {
                    if pattern >> (3 - k) & 1 == 1 {
                        verts[k].as_ref().map(Part::V)
                    } else {
                        (!is_zero(&args[k].horizontal)).then(|| Part::H(&args[k].horizontal))
                    }
                })
                .collect();
            if let Some(parts) = parts {
                let parts: [Part; 4] = parts.try_into().unwrap_or_else(|_| unreachable!());
                acc += self.k_block(&parts);
            }
        }
        acc
    }

    pub fn k_basis(&self) -> BasisTensor {
        let b = self.basis();
        BasisTensor::from_fn(4, b.len(), |i| self.k_tensor(&b[i[0]], &b[i[1]], &b[i[2]], &b[i[3]]))
    }
}

/// `FII[x][y][z] = F(I E_x, I E_y, E_z)`.
fn f_ii(f: &BasisTensor, im: &DMatrix<f64>) -> BasisTensor {
    let n = f.n();
    BasisTensor::from_fn(3, n, |i| {
        let (x, y, z) = (i[0], i[1], i[2]);
        let mut acc = 0.0;
        for a in 0..n {
            let wa = im[(a, x)];
            if wa == 0.0 {
                continue;
            }
            for b in 0..n {
                acc += wa * im[(b, y)] * f.get(&[a, b, z]);
            }
        }
        acc
    })
}

/// `F(E_x, I E_y, I E_z)`.
fn f_yzi(f: &BasisTensor, im: &DMatrix<f64>) -> BasisTensor {
    let n = f.n();
    BasisTensor::from_fn(3, n, |i| {
        let (x, y, z) = (i[0], i[1], i[2]);
        let mut acc = 0.0;
        for b in 0..n {
            let wb = im[(b, y)];
            if wb == 0.0 {
                continue;
            }
            for c in 0..n {
                acc += wb * im[(c, z)] * f.get(&[x, b, c]);
            }
        }
        acc
    })
}

pub fn class_residuals(f: &BasisTensor, im: &DMatrix<f64>) -> ClassResiduals {
    let fii = f_ii(f, im);
    let f_sw = f.permuted(&[1, 0, 2]);
    let fii_sw = fii.permuted(&[1, 0, 2]);
    let n = f.n();
    let tr = (0..n).map(|z| (0..n).map(|a| f.get(&[a, a, z])).sum::<f64>().powi(2)).sum::<f64>().sqrt();
    let cyc = &(f + &f.permuted(&[1, 2, 0])) + &f.permuted(&[2, 0, 1]);
    let mut out = [0.0; 7];
    out[GrayClass::Kaehler as usize] = f.norm();
    out[GrayClass::Hermitian as usize] = (f - &fii).norm();
    out[GrayClass::G1 as usize] = (&(&(f + &f_sw) - &fii) - &fii_sw).norm();
    out[GrayClass::SemiKaehler as usize] = tr;
    out[GrayClass::QuasiKaehler as usize] = (f + &fii).norm();
    out[GrayClass::NearlyKaehler as usize] = (f + &f_sw).norm();
    out[GrayClass::AlmostKaehler as usize] = cyc.norm();
    ClassResiduals(out)
}

/// The six axis points followed by [`GRID_RANDOM_POINTS`] seeded uniform points.
pub fn sphere_grid(seed: u64) -> Vec<[f64; 3]> {
    let mut out = Vec::with_capacity(6 + GRID_RANDOM_POINTS);
    for k in 0..3 {
        for s in [1.0, -1.0] {
            let mut a = [0.0; 3];
            a[k] = s;
            out.push(a);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..GRID_RANDOM_POINTS {
        let p: [f64; 3] = UnitSphere.sample(&mut rng);
        let norm = p.iter().map(|x| x * x).sum::<f64>().sqrt();
        out.push(p.map(|x| x / norm));
    }
    out
}

/// `F` and `I` for both structures at one point.
struct PointAnalysis {
    a: [f64; 3],
    im: [DMatrix<f64>; 2],
    f: [BasisTensor; 2],
    residuals: [ClassResiduals; 2],
}

fn analyse_point(fiber: &Fiber) -> PointAnalysis {
    let im = Structure::ALL.map(|s| fiber.i_matrix(s));
    let f = Structure::ALL.map(|s| fiber.f_basis(s));
    let residuals = [0, 1].map(|k| class_residuals(&f[k], &im[k]));
    PointAnalysis { a: fiber.point().a, im, f, residuals }
}

fn analyse(model: &TwistorModel, c: f64, grid: &[[f64; 3]]) -> Result<Vec<PointAnalysis>, TwistorError> {
    grid.iter().map(|&a| Ok(analyse_point(&model.at(model.point(a)?, c)?))).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct PointClasses {
    pub a: [f64; 3],
    /// Indexed by [`Structure`].
    pub residuals: [ClassResiduals; 2],
}

#[derive(Clone, Debug, PartialEq)]
pub struct GrayHervella {
    pub c: f64,
    pub tol: f64,
    pub points: Vec<PointClasses>,
}

impl GrayHervella {
    pub fn max_residual(&self, s: Structure, class: GrayClass) -> f64 {
        self.points.iter().map(|p| p.residuals[s.index()].get(class)).fold(0.0, f64::max)
    }

    /// The class holds at every grid point.
    pub fn holds(&self, s: Structure, class: GrayClass) -> bool {
        self.max_residual(s, class) <= self.tol
    }

    /// One informational line per structure and class: max residual against the tolerance.
    pub fn checks(&self) -> Vec<Check> {
        let mut out = Vec::new();
        for s in Structure::ALL {
            for class in GrayClass::ALL {
                let verdict = if self.holds(s, class) { "holds" } else { "fails" };
                out.push(Check::info(
                    format!("twistor.class.{}.{}", s.name(), class.name()),
                    format!("{} {} on the fiber grid: {verdict} (lhs: max residual, rhs: tolerance)", s.name(), class.name()),
                    class.formula(),
                    self.max_residual(s, class),
                    self.tol,
                ));
            }
        }
        out
    }
}

fn to_gray_hervella(points: &[PointAnalysis], c: f64, tol: f64) -> GrayHervella {
    GrayHervella {
        c,
        tol,
        points: points.iter().map(|p| PointClasses { a: p.a, residuals: p.residuals }).collect(),
    }
}

pub fn gray_hervella(model: &TwistorModel, c: f64, grid: &[[f64; 3]], tol: f64) -> Result<GrayHervella, TwistorError> {
    Ok(to_gray_hervella(&analyse(model, c, grid)?, c, tol))
}

/// Residuals of the equations characterising `psi_2 = 0` at one point, with
/// the pointwise identities linking them to `psi_2(I0*, ., .)` and `psi_2(K0*, ., .)`.
struct Ric2 {
    residual: f64,
    psi_identity: f64,
}

fn ric2_at(model: &TwistorModel, p: &PointAnalysis, c: f64) -> Result<Ric2, TwistorError> {
    let g = model.geometry();
    let d = g.algebra.dim();
    let point = model.point(p.a)?;
    let fiber = model.at(point, c)?;
    let [i0, j0, k0] = fiber.point().adapted.all();
    let lhs = |a: usize| {
        let rho = ricci_form(&g.r, fiber.point().adapted.get(a));
        (&rho.apply_endo(&[Some(j0), None]) + &rho.apply_endo(&[None, Some(j0)])).scale(c * c)
    };
    // <K0 xi, eta> as a tensor in (xi, eta)
    let pair = |m: &crate::frame_tensor::EndoMatrix| Tensor::from_fn(2, d, |i| m.get(i[1], i[0]));
    let eq1 = &lhs(0) + &pair(k0);
    let eq3 = &lhs(2) - &pair(i0);
    let residual = eq1.max_abs().max(eq3.max_abs());
    let s = 1.0 / (c * (d as f64).sqrt());
    let psi = &p.f[Structure::I2.index()];
    let psi_at = |v: usize, x: usize, y: usize| {
        let fii = |a: usize, b: usize, z: usize| {
            let im = &p.im[Structure::I2.index()];
            (0..d + 2).map(|u| (0..d + 2).map(|w| im[(u, a)] * im[(w, b)] * psi.get(&[u, w, z])).sum::<f64>()).sum::<f64>()
        };
        let (a, b, z) = (v, 2 + x, 2 + y);
        (psi.get(&[a, b, z]) + psi.get(&[b, a, z]) - fii(a, b, z) - fii(b, a, z)) / s
    };
    let mut psi_identity: f64 = 0.0;
    for x in 0..d {
        for y in 0..d {
            psi_identity = psi_identity
                .max((psi_at(0, x, y) - 4.0 * eq1.get(&[x, y])).abs())
                .max((psi_at(1, x, y) - 4.0 * eq3.get(&[x, y])).abs());
        }
    }
    Ok(Ric2 { residual, psi_identity })
}

fn require(name: &'static str, lhs: bool, rhs: bool) -> Result<(), TwistorError> {
    if lhs != rhs {
        return Err(TwistorError::InconsistentEquivalence { name, lhs, rhs });
    }
    Ok(())
}

fn theorem_checks(model: &TwistorModel, c: f64, pts: &[PointAnalysis], tol: f64) -> Result<Vec<Check>, TwistorError> {
    let g = model.geometry();
    let d = g.algebra.dim();
    let gh = to_gray_hervella(pts, c, tol);
    let mut out = Vec::new();
    let (i1, i2) = (Structure::I1.index(), Structure::I2.index());

    // a) I2 is never integrable; H2(I0*, xi, eta) - H2(xi, I0*, eta) = 4 <I0 J0 xi, eta>.
    let min_h2 = pts.iter().map(|p| p.residuals[i2].get(GrayClass::Hermitian)).fold(f64::INFINITY, f64::min);
    out.push(Check::nonzero(
        "twistor.i2_not_integrable",
        "Nijenhuis part of F for I2 is nonzero at every grid point (lhs: smallest norm)",
        "F(X,Y,Z) - F(IX,IY,Z) != 0 for I2",
        min_h2,
        tol,
    ));
    let s = 1.0 / (c * (d as f64).sqrt());
    let mut witness_err: f64 = 0.0;
    let mut witness_max: f64 = 0.0;
    for p in pts {
        let f = &p.f[i2];
        let fii = f_ii(f, &p.im[i2]);
        let h = f - &fii;
        let fiber = model.at(model.point(p.a)?, c)?;
        let ij = &fiber.i0 * &fiber.j0;
        for x in 0..d {
            for y in 0..d {
                let w = (h.get(&[0, 2 + x, 2 + y]) - h.get(&[2 + x, 0, 2 + y])) / s;
                let expected = 4.0 * ij[(y, x)];
                witness_err = witness_err.max((w - expected).abs());
                witness_max = witness_max.max(expected.abs());
            }
        }
    }
    out.push(Check::residual(
        "twistor.i2_witness",
        "closed form of the I2 Nijenhuis witness on (I0*, xi, eta)",
        "H(I0*,xi,eta) - H(xi,I0*,eta) = 4 <I0 J0 xi, eta>",
        witness_err,
        tol,
    ));
    out.push(Check::nonzero(
        "twistor.i2_witness_nonzero",
        "the witness 4 <I0 J0 xi, eta> does not vanish",
        "max |4 <I0 J0 xi, eta>| > 0",
        witness_max,
        tol,
    ));

    // b) G1 <=> ric2 at every point <=> special homothety with 1/c^2 and instanton type.
    let g1 = gh.holds(Structure::I2, GrayClass::G1);
    let mut ric2_res: f64 = 0.0;
    let mut psi_identity: f64 = 0.0;
    for p in pts {
        let r = ric2_at(model, p, c)?;
        ric2_res = ric2_res.max(r.residual);
        psi_identity = psi_identity.max(r.psi_identity);
    }
    let ric2 = ric2_res <= tol;
    out.push(Check::residual(
        "twistor.psi_ric2_identity",
        "psi of I2 on (I0*, ., .) and (K0*, ., .) in terms of the adapted Ricci forms",
        "psi(I0*,xi,eta) = 4(c^2[rho'_1(J0xi,eta) + rho'_1(xi,J0eta)] + <K0xi,eta>), psi(K0*,xi,eta) = 4(c^2[rho'_3(J0xi,eta) + rho'_3(xi,J0eta)] - <I0xi,eta>)",
        psi_identity,
        tol,
    ));
    let homothety = special_homothety_check(g, tol)?;
    let c2 = c * c;
    let ric3 = homothety.c_squared.is_some_and(|h| (h - c2).abs() <= HOMOTHETY_RTOL * c2.max(1.0));
    require("G1 <=> ric2", g1, ric2)?;
    require("G1 <=> special homothety", g1, ric3)?;
    out.push(Check::agree(
        "twistor.g1_iff_ric2",
        "I2 is G1 on the grid iff the adapted Ricci form equations hold",
        "psi = 0 <=> c^2[rho'_1(J0X,Y) + rho'_1(X,J0Y)] = -<K0X,Y>, c^2[rho'_3(J0X,Y) + rho'_3(X,J0Y)] = <I0X,Y>",
        g1,
        ric2,
    ));
    out.push(Check::agree(
        "twistor.g1_iff_homothety",
        "I2 is G1 iff the model is of instanton type with special homothety 1/c^2",
        "psi = 0 <=> rho_a(J_aX,Y) + rho_a(J_cX,J_bY) = (1/c^2) g(X,Y) and dt in (1,1)",
        g1,
        ric3,
    ));
    if let Some(h) = homothety.c_squared {
        let hc = h.sqrt();
        let axes: Vec<[f64; 3]> = sphere_grid(0).into_iter().take(6).collect();
        let at = analyse(model, hc, &axes)?;
        let away = analyse(model, 2.0 * hc, &axes)?;
        let max_psi = at.iter().map(|p| p.residuals[i2].get(GrayClass::G1)).fold(0.0, f64::max);
        let min_psi = away.iter().map(|p| p.residuals[i2].get(GrayClass::G1)).fold(f64::INFINITY, f64::min);
        out.push(Check::residual(
            "twistor.g1_probe_at_homothety",
            "psi of I2 vanishes at the homothety scale",
            "|psi| at c^2 = homothety constant",
            max_psi,
            G1_PROBE_ZERO,
        ));
        out.push(Check::at_least(
            "twistor.g1_probe_away",
            "psi of I2 does not vanish at twice the homothety scale",
            "|psi| at 2c >= 1e-3",
            min_psi,
            G1_PROBE_NONZERO,
            0.0,
        ));
    }

    // c) semi-Kaehler <=> t = 0, through the traces of F.
    let t = g.t.as_vec();
    let t_zero = g.t.norm_sq().sqrt() <= tol;
    let mut twisted: f64 = 0.0;
    let mut plain: f64 = 0.0;
    for p in pts {
        let fiber = model.at(model.point(p.a)?, c)?;
        let tj: Vec<f64> = mv(&fiber.j0.transpose(), &t);
        for k in [i1, i2] {
            let (f, im) = (&p.f[k], &p.im[k]);
            for x in 0..d {
                let z = 2 + x;
                let tw: f64 = -(0..d + 2).map(|a| (0..d + 2).map(|b| f.get(&[a, b, z]) * im[(b, a)]).sum::<f64>()).sum::<f64>();
                let pl: f64 = (0..d + 2).map(|a| f.get(&[a, a, z])).sum();
                twisted = twisted.max((tw - t[x]).abs());
                plain = plain.max((pl - tj[x]).abs());
            }
        }
    }
    out.push(Check::residual(
        "twistor.trace_twisted_is_t",
        "I-twisted trace of F on horizontal vectors is the torsion 1-form",
        "-sum_a F(E_a, I E_a, xi) = t(xi)",
        twisted,
        tol,
    ));
    out.push(Check::residual(
        "twistor.trace_plain_is_t_j0",
        "trace of F on horizontal vectors is t o J0",
        "sum_a F(E_a, E_a, xi) = t(J0 xi)",
        plain,
        tol,
    ));
    for s in Structure::ALL {
        let semi = gh.holds(s, GrayClass::SemiKaehler);
        require("semi-Kaehler <=> t = 0", semi, t_zero)?;
        out.push(Check::agree(
            format!("twistor.semi_kaehler_iff_t_zero.{}", s.name()),
            format!("{} is semi-Kaehler iff t = 0", s.name()),
            "sum_a F(E_a,E_a,Z) = 0 <=> t = 0",
            semi,
            t_zero,
        ));
    }

    // d) the strong classes force T = 0.
    let torsion_zero = g.torsion().norm_sq().sqrt() <= tol;
    for (s, class) in [
        (Structure::I2, GrayClass::QuasiKaehler),
        (Structure::I2, GrayClass::AlmostKaehler),
        (Structure::I2, GrayClass::NearlyKaehler),
        (Structure::I1, GrayClass::Kaehler),
    ] {
        out.push(Check::implies(
            format!("twistor.{}_{}_implies_torsion_free", s.name(), class.name()),
            format!("{} {} forces T = 0", s.name(), class.name()),
            format!("{} => T = 0", class.formula()),
            gh.holds(s, class),
            torsion_zero,
        ));
    }
    Ok(out)
}

/// Checks the equivalences and closed forms of the twistor theorem over `grid`.
pub fn verify_twistor_theorem(model: &TwistorModel, c: f64, grid: &[[f64; 3]], tol: f64) -> Result<Vec<Check>, TwistorError> {
    theorem_checks(model, c, &analyse(model, c, grid)?, tol)
}

#[derive(Clone, Debug, PartialEq)]
pub struct TwistorRicci {
    pub ric: DMatrix<f64>,
    /// `rho*(X, Y) = rho_I(X, IY)`, indexed by [`Structure`].
    pub rho_star: [DMatrix<f64>; 2],
    pub im: [DMatrix<f64>; 2],
    pub k: BasisTensor,
}

/// Ricci and *-Ricci tensors of `(Z, h_c, I)` over a HKT model.
pub fn twistor_ricci(fiber: &Fiber) -> Result<TwistorRicci, TwistorError> {
    if !fiber.model.geometry().is_hkt() {
        return Err(TwistorError::NotHkt);
    }
    let k = fiber.k_basis();
    let n = k.n();
    let ric = DMatrix::from_fn(n, n, |x, y| (0..n).map(|a| k.get(&[a, x, y, a])).sum());
    let im = Structure::ALL.map(|s| fiber.i_matrix(s));
    let rho_star = im.clone().map(|im| {
        let rho_i = DMatrix::from_fn(n, n, |x, y| {
            0.5 * (0..n).map(|a| (0..n).map(|b| k.get(&[x, y, a, b]) * im[(b, a)]).sum::<f64>()).sum::<f64>()
        });
        rho_i * &im
    });
    Ok(TwistorRicci { ric, rho_star, im, k })
}

fn twistor_ricci_checks(model: &TwistorModel, c: f64, grid: &[[f64; 3]], tol: f64) -> Result<Vec<Check>, TwistorError> {
    let g = model.geometry();
    let d = g.algebra.dim();
    let n = g.n() as f64;
    let mut sym: f64 = 0.0;
    let mut vert: f64 = 0.0;
    let mut mixed: f64 = 0.0;
    let mut horiz: f64 = 0.0;
    let mut star_sym: f64 = 0.0;
    let mut star_inv: f64 = 0.0;
    let mut star_horiz: f64 = 0.0;
    for &a in grid {
        let fiber = model.at(model.point(a)?, c)?;
        let tr = twistor_ricci(&fiber)?;
        let k = &tr.k;
        sym = sym
            .max((&k.permuted(&[1, 0, 2, 3]) + k).max_abs())
            .max((&k.permuted(&[0, 1, 3, 2]) + k).max_abs())
            .max((&k.permuted(&[2, 3, 0, 1]) - k).max_abs())
            .max((&(k + &k.permuted(&[1, 2, 0, 3])) + &k.permuted(&[2, 0, 1, 3])).max_abs());
        let target = 1.0 / (n * c * c);
        for x in 0..2 {
            for y in 0..2 {
                vert = vert.max((tr.ric[(x, y)] - if x == y { target } else { 0.0 }).abs());
            }
            for y in 0..d {
                mixed = mixed.max(tr.ric[(x, 2 + y)].abs()).max(tr.ric[(2 + y, x)].abs());
            }
        }
        for x in 0..d {
            for y in 0..d {
                horiz = horiz.max((tr.ric[(2 + x, 2 + y)] - g.ric_g.get(&[x, y])).abs());
            }
        }
        let j0 = fiber.point().adapted.get(1);
        let rho_g = ricci_form(&g.rg, j0).apply_endo(&[None, Some(j0)]);
        for k in 0..2 {
            let (rs, im) = (&tr.rho_star[k], &tr.im[k]);
            star_sym = star_sym.max((rs - rs.transpose()).amax());
            star_inv = star_inv.max((im.transpose() * rs * im - rs).amax());
            for x in 0..d {
                for y in 0..d {
                    star_horiz = star_horiz.max((rs[(2 + x, 2 + y)] - rho_g.get(&[x, y])).abs());
                }
            }
        }
    }
    let res = |id: &str, desc: &str, formula: &str, v: f64| Check::residual(format!("twistor.ricci.{id}"), desc, formula, v, tol);
    Ok(vec![
        res(
            "curvature_symmetries",
            "antisymmetries, pair symmetry and first Bianchi identity of K",
            "K(X,Y,Z,W) = -K(Y,X,Z,W) = -K(X,Y,W,Z) = K(Z,W,X,Y), cyclic sum over X,Y,Z = 0",
            sym,
        ),
        res("vertical", "vertical block of the twistor Ricci tensor", "Ric(V, V') = 1/(n c^2) h_c(V, V')", vert),
        res("mixed", "vertical-horizontal block vanishes", "Ric(V, X) = 0", mixed),
        res("horizontal", "horizontal block is the Riemannian Ricci tensor of the model", "Ric(X, Y) = Ric^g(X, Y)", horiz),
        res("star_symmetric", "*-Ricci tensor is symmetric", "rho*(X,Y) = rho*(Y,X)", star_sym),
        res("star_invariant", "*-Ricci tensor is I-invariant", "rho*(IX,IY) = rho*(X,Y)", star_inv),
        res(
            "star_horizontal",
            "horizontal *-Ricci tensor from the Riemannian Ricci form of J0",
            "rho*(X,Y) = rho^g_{J0}(X, J0 Y)",
            star_horiz,
        ),
    ])
}

/// `I^2 = -1`, `h_c`-orthogonality of `I`, and the algebraic properties of `F`.
fn structure_checks(pts: &[PointAnalysis], tol: f64) -> Vec<Check> {
    let mut out = Vec::new();
    for s in Structure::ALL {
        let k = s.index();
        let (mut sq, mut orth, mut anti, mut irel): (f64, f64, f64, f64) = (0.0, 0.0, 0.0, 0.0);
        for p in pts {
            let im = &p.im[k];
            let id = DMatrix::<f64>::identity(im.nrows(), im.ncols());
            sq = sq.max((im * im + &id).amax());
            orth = orth.max((im.transpose() * im - &id).amax());
            let f = &p.f[k];
            anti = anti.max((f + &f.permuted(&[0, 2, 1])).max_abs());
            irel = irel.max((f + &f_yzi(f, im)).max_abs());
        }
        let name = s.name();
        out.push(Check::residual(format!("twistor.{name}.square"), format!("{name} is an almost complex structure"), "I^2 = -1", sq, tol));
        out.push(Check::residual(format!("twistor.{name}.orthogonal"), format!("h_c is {name}-Hermitian"), "h_c(IX, IY) = h_c(X, Y)", orth, tol));
        out.push(Check::residual(
            format!("twistor.{name}.f_antisymmetric"),
            "F is antisymmetric in its last two arguments",
            "F(X,Y,Z) = -F(X,Z,Y)",
            anti,
            tol,
        ));
        out.push(Check::residual(
            format!("twistor.{name}.f_anti_invariant"),
            "F is I-anti-invariant in its last two arguments",
            "F(X,IY,IZ) = -F(X,Y,Z)",
            irel,
            tol,
        ));
    }
    out
}

/// Relations of `Theta` and the `sp(1)` part of `Omega` at each grid point.
fn horizontal_checks(model: &TwistorModel, grid: &[[f64; 3]], tol: f64) -> Result<Vec<Check>, TwistorError> {
    let g = model.geometry();
    let d = g.algebra.dim();
    let t = g.torsion();
    let (mut skew, mut ty, mut sp1): (f64, f64, f64) = (0.0, 0.0, 0.0);
    skew = skew.max((&t.permuted(&[0, 2, 1]) + t).max_abs());
    for &a in grid {
        let point = model.point(a)?;
        let j0 = point.adapted.get(1);
        let rhs = &(&t.apply_endo(&[Some(j0), Some(j0), None]) + &t.apply_endo(&[Some(j0), None, Some(j0)]))
            + &t.apply_endo(&[None, Some(j0), Some(j0)]);
        ty = ty.max(t.max_abs_diff(&rhs));
        for al in 0..3 {
            let j = point.adapted.get(al);
            let rho = ricci_form(&g.r, j);
            for i in 0..d {
                for k in 0..d {
                    let comp = ip(&model.omega[i * d + k], j.matrix()) / d as f64;
                    sp1 = sp1.max((comp - rho.get(&[i, k]) / (2.0 * g.n() as f64)).abs());
                }
            }
        }
    }
    Ok(vec![
        Check::residual("twistor.theta_skew", "Theta is skew in its last slot pair", "<Theta(xi,eta),zeta> = -<Theta(xi,zeta),eta>", skew, tol),
        Check::residual(
            "twistor.theta_type",
            "torsion is of type (1,2)+(2,1) for every adapted J0",
            "<Theta(xi,eta),zeta> = <Theta(J0xi,J0eta),zeta> + <Theta(J0xi,eta),J0zeta> + <Theta(xi,J0eta),J0zeta>",
            ty,
            tol,
        ),
        Check::residual(
            "twistor.omega_sp1_part",
            "sp(1) components of the curvature are the adapted Ricci forms",
            "(Omega(xi,eta), J'_a)/(4n) = rho'_a(xi,eta)/(2n)",
            sp1,
            tol,
        ),
    ])
}

/// Classes recomputed in a rotated fiber frame and at the antipodes.
fn invariance_checks(model: &TwistorModel, c: f64, pts: &[PointAnalysis], seed: u64, tol: f64) -> Result<Vec<Check>, TwistorError> {
    let q = &model.geometry().triple;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut gauge: f64 = 0.0;
    let mut antipodal = true;
    for p in pts {
        let angle = rng.random_range(0.0..TAU);
        let rotated = analyse_point(&model.at(TwistorPoint::with_gauge(q, p.a, angle)?, c)?);
        for k in 0..2 {
            for (x, y) in p.residuals[k].0.iter().zip(&rotated.residuals[k].0) {
                gauge = gauge.max((x - y).abs() / x.abs().max(1.0));
            }
        }
        let anti = analyse_point(&model.at(model.point(p.a.map(|x| -x))?, c)?);
        for k in 0..2 {
            for class in GrayClass::ALL {
                antipodal &= p.residuals[k].holds(class, tol) == anti.residuals[k].holds(class, tol);
            }
        }
    }
    Ok(vec![
        Check::residual(
            "twistor.gauge_invariance",
            "class residuals do not depend on the frame of the fiber (relative difference)",
            "|F|, |H|, |psi|, .. unchanged under (I0,K0) -> rotation about J0",
            gauge,
            tol,
        ),
        Check::agree(
            "twistor.antipodal_verdicts",
            "class verdicts at a and -a coincide",
            "class(a) = class(-a)",
            antipodal,
            true,
        ),
    ])
}

fn einstein_checks(g: &Geometry) -> Vec<Check> {
    let s = &g.scalars;
    let constant = |scal: f64| if scal > 0.0 { 4.0 / scal } else { f64::NAN };
    vec![
        Check::info(
            "twistor.einstein_c2",
            "candidate c^2 for the Einstein twistor metric (lhs: Scal^g, rhs: c^2, null when Scal^g <= 0)",
            "c^2 = 4 / Scal^g",
            s.scal_g,
            constant(s.scal_g),
        ),
        Check::info(
            "twistor.star_einstein_c2",
            "candidate c^2 for the *-Einstein twistor metric (lhs: Scal^g_Q, rhs: c^2, null when Scal^g_Q <= 0)",
            "c^2 = 4 / Scal^g_Q",
            s.scal_gq,
            constant(s.scal_gq),
        ),
    ]
}

/// All twistor checks for one model at fiber scale `c`.
pub fn twistor_suite(g: &Geometry, c: f64, seed: u64, tol: f64) -> Result<Vec<Check>, TwistorError> {
    let model = TwistorModel::new(g);
    let grid = sphere_grid(seed);
    let pts = analyse(&model, c, &grid)?;
    let mut out = structure_checks(&pts, tol);
    let fiber = model.at(model.point(grid[0])?, c)?;
    let d = g.algebra.dim();
    let i0 = TwistorVector::vertical([1.0, 0.0], d);
    out.push(Check::equal("twistor.h_c_vertical", "length of I0* in h_c", "h_c(I0*, I0*) = 4n c^2", fiber.h_c(&i0, &i0), d as f64 * c * c, tol));
    out.extend(horizontal_checks(&model, &grid, tol)?);
    out.extend(theorem_checks(&model, c, &pts, tol)?);
    out.extend(to_gray_hervella(&pts, c, tol).checks());
    out.extend(invariance_checks(&model, c, &pts, seed, tol)?);
    out.extend(einstein_checks(g));
    if g.is_hkt() {
        out.extend(twistor_ricci_checks(&model, c, &grid[..6], tol)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{builtin, BuiltinModel};

    fn geometry(b: BuiltinModel) -> Geometry {
        let m = builtin(b);
        Geometry::new(&m.algebra, &m.triple).unwrap()
    }

    #[test]
    fn basis_is_orthonormal_and_i_squares_to_minus_one() {
        let g = geometry(BuiltinModel::Hopf8);
        let model = TwistorModel::new(&g);
        let fiber = model.at(model.point([0.6, 0.0, 0.8]).unwrap(), 0.7).unwrap();
        let b = fiber.basis();
        for (p, x) in b.iter().enumerate() {
            for (q, y) in b.iter().enumerate() {
                assert!((fiber.h_c(x, y) - if p == q { 1.0 } else { 0.0 }).abs() < 1e-14);
            }
        }
        for s in Structure::ALL {
            let im = fiber.i_matrix(s);
            assert!((&im * &im + DMatrix::identity(10, 10)).amax() < 1e-14);
        }
        let i0 = TwistorVector::vertical([1.0, 0.0], 8);
        assert!((fiber.h_c(&i0, &i0) - 8.0 * 0.49).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_points_and_scales() {
        let g = geometry(BuiltinModel::Flat8);
        let model = TwistorModel::new(&g);
        assert!(matches!(model.point([1.0, 1.0, 0.0]), Err(TwistorError::Quat(_))));
        let p = model.point([0.0, 1.0, 0.0]).unwrap();
        assert!(matches!(model.at(p, 0.0), Err(TwistorError::NonPositiveC(_))));
    }

    #[test]
    fn vertical_sectional_curvature() {
        let g = geometry(BuiltinModel::Flat8);
        let model = TwistorModel::new(&g);
        let c = 0.7;
        let fiber = model.at(model.point([0.0, 0.0, 1.0]).unwrap(), c).unwrap();
        let (a, b) = (TwistorVector::vertical([1.0, 0.0], 8), TwistorVector::vertical([0.0, 1.0], 8));
        assert!((fiber.k_tensor(&a, &b, &a, &b) + 32.0 * c * c).abs() < 1e-12);
    }

    #[test]
    fn flat_f_is_the_vertical_pairing() {
        let g = geometry(BuiltinModel::Flat8);
        let model = TwistorModel::new(&g);
        let fiber = model.at(model.point([0.0, 1.0, 0.0]).unwrap(), 1.3).unwrap();
        let a = TwistorVector::vertical([0.4, -0.9], 8);
        let am = fiber.vm(&a.vertical);
        let x: Vec<f64> = (0..8).map(|i| i as f64 - 3.5).collect();
        let y: Vec<f64> = (0..8).map(|i| (i * i) as f64 * 0.1).collect();
        let expected = 2.0 * dot(&mv(&(&am * &fiber.j0), &x), &y);
        for s in Structure::ALL {
            let got = fiber.f_tensor(s, &a, &TwistorVector::horizontal(x.clone()), &TwistorVector::horizontal(y.clone()));
            assert!((got - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn flat_classes() {
        let g = geometry(BuiltinModel::Flat8);
        let model = TwistorModel::new(&g);
        let gh = gray_hervella(&model, 1.0, &sphere_grid(42), 1e-9).unwrap();
        assert!(gh.holds(Structure::I1, GrayClass::Hermitian));
        assert!(gh.holds(Structure::I1, GrayClass::SemiKaehler));
        assert!(gh.holds(Structure::I2, GrayClass::SemiKaehler));
        assert!(!gh.holds(Structure::I2, GrayClass::Hermitian));
        assert!(!gh.holds(Structure::I2, GrayClass::G1));
        assert!(!gh.holds(Structure::I1, GrayClass::Kaehler));
    }

    #[test]
    fn grid_is_seeded() {
        let a = sphere_grid(42);
        assert_eq!(a.len(), 26);
        assert_eq!(a, sphere_grid(42));
        assert_ne!(a, sphere_grid(43));
        assert!(a.iter().all(|p| (p.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-15));
    }

    #[test]
    fn suites_pass_on_builtins() {
        for b in BuiltinModel::ALL {
            let g = geometry(b);
            let checks = twistor_suite(&g, 1.0, 42, 1e-9).unwrap();
            let failed: Vec<_> = checks.iter().filter(|c| !c.pass).map(|c| (&c.id, c.lhs, c.rhs)).collect();
            assert!(failed.is_empty(), "{b}: {failed:?}");
        }
    }

    #[test]
    fn twistor_ricci_needs_hkt() {
        let g = geometry(BuiltinModel::Solv8);
        let model = TwistorModel::new(&g);
        let fiber = model.at(model.point([1.0, 0.0, 0.0]).unwrap(), 1.0).unwrap();
        assert_eq!(twistor_ricci(&fiber).unwrap_err(), TwistorError::NotHkt);
    }
}
