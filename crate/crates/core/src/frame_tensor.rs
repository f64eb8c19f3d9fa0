//! Dense tensors over an orthonormal frame of dimension 4n, together with
//! endomorphism matrices and the form operations used everywhere else.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::linsolve;

/// Highest tensor rank handled by the index decoder.
pub const MAX_RANK: usize = 6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TensorError {
    #[error("frame dimension {0} is not a positive multiple of 4")]
    BadDimension(usize),
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("rank mismatch: expected {expected}, got {got}")]
    RankMismatch { expected: usize, got: usize },
    #[error("rank {0} exceeds the supported maximum")]
    RankTooLarge(usize),
    #[error("entry count {got} does not match dim^rank = {expected}")]
    DataLength { expected: usize, got: usize },
    #[error("endomorphism does not square to -id (residual {0:.3e})")]
    NotComplex(f64),
    #[error("endomorphism is not orthogonal (residual {0:.3e})")]
    NotOrthogonal(f64),
    #[error("tensor is not antisymmetric (residual {0:.3e})")]
    NotAntisymmetric(f64),
}

/// A real multi-index array `T[i_1]..[i_rank]`, indices in `0..dim`.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    rank: usize,
    dim: usize,
    data: Vec<f64>,
}

fn check_dim(dim: usize) -> Result<(), TensorError> {
    if dim == 0 || dim % 4 != 0 {
        Err(TensorError::BadDimension(dim))
    } else {
        Ok(())
    }
}

impl Tensor {
    /// Zero tensor. Panics if `dim` is not a positive multiple of 4.
    pub fn zeros(rank: usize, dim: usize) -> Self {
        check_dim(dim).expect("frame dimension");
        assert!(rank <= MAX_RANK, "rank {rank} too large");
        Tensor { rank, dim, data: vec![0.0; dim.pow(rank as u32)] }
    }

    pub fn from_data(rank: usize, dim: usize, data: Vec<f64>) -> Result<Self, TensorError> {
        check_dim(dim)?;
        if rank > MAX_RANK {
            return Err(TensorError::RankTooLarge(rank));
        }
        let expected = dim.pow(rank as u32);
        if data.len() != expected {
            return Err(TensorError::DataLength { expected, got: data.len() });
        }
        Ok(Tensor { rank, dim, data })
    }

    pub fn from_fn(rank: usize, dim: usize, mut f: impl FnMut(&[usize]) -> f64) -> Self {
        let mut t = Tensor::zeros(rank, dim);
        let mut idx = [0usize; MAX_RANK];
        for flat in 0..t.data.len() {
            t.decode(flat, &mut idx);
            t.data[flat] = f(&idx[..rank]);
        }
        t
    }

    pub fn from_vec(v: &[f64]) -> Result<Self, TensorError> {
        Tensor::from_data(1, v.len(), v.to_vec())
    }

    /// Rank-2 tensor with entries `m[(i, j)]`.
    pub fn from_matrix(m: &DMatrix<f64>) -> Result<Self, TensorError> {
        if m.nrows() != m.ncols() {
            return Err(TensorError::DimensionMismatch { left: m.nrows(), right: m.ncols() });
        }
        check_dim(m.nrows())?;
        Ok(Tensor::from_fn(2, m.nrows(), |i| m[(i[0], i[1])]))
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        assert_eq!(self.rank, 2, "to_matrix needs a rank-2 tensor");
        DMatrix::from_fn(self.dim, self.dim, |i, j| self.get(&[i, j]))
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.rank);
        idx.iter().fold(0, |acc, &i| acc * self.dim + i)
    }

    #[inline]
    fn decode(&self, mut flat: usize, idx: &mut [usize; MAX_RANK]) {
        for s in (0..self.rank).rev() {
            idx[s] = flat % self.dim;
            flat /= self.dim;
        }
    }

    #[inline]
    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[self.offset(idx)]
    }

    #[inline]
    pub fn set(&mut self, idx: &[usize], v: f64) {
        let o = self.offset(idx);
        self.data[o] = v;
    }

    #[inline]
    pub fn add_at(&mut self, idx: &[usize], v: f64) {
        let o = self.offset(idx);
        self.data[o] += v;
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Sum of squares over all ordered index tuples.
    pub fn norm_sq(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum()
    }

    pub fn scale(&self, s: f64) -> Tensor {
        Tensor { rank: self.rank, dim: self.dim, data: self.data.iter().map(|x| x * s).collect() }
    }

    pub fn max_abs_diff(&self, other: &Tensor) -> f64 {
        assert_eq!((self.rank, self.dim), (other.rank, other.dim));
        self.data.iter().zip(&other.data).fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// `out[i_0..] = self[i_{perm[0]}, i_{perm[1]}, ..]`.
    pub fn permuted(&self, perm: &[usize]) -> Tensor {
        assert_eq!(perm.len(), self.rank);
        let mut src = [0usize; MAX_RANK];
        Tensor::from_fn(self.rank, self.dim, |idx| {
            for (s, &p) in perm.iter().enumerate() {
                src[s] = idx[p];
            }
            self.get(&src[..self.rank])
        })
    }

    /// Applies an endomorphism to selected argument slots:
    /// `out(X_0, ..) = self(M_0 X_0, M_1 X_1, ..)`, `None` meaning identity.
    pub fn apply_endo(&self, slots: &[Option<&EndoMatrix>]) -> Tensor {
        assert_eq!(slots.len(), self.rank);
        let mut out = self.clone();
        for (s, m) in slots.iter().enumerate() {
            if let Some(m) = m {
                out = out.apply_endo_slot(s, m);
            }
        }
        out
    }

    fn apply_endo_slot(&self, slot: usize, m: &EndoMatrix) -> Tensor {
        assert_eq!(m.dim(), self.dim);
        let mut src = [0usize; MAX_RANK];
        Tensor::from_fn(self.rank, self.dim, |idx| {
            src[..self.rank].copy_from_slice(idx);
            let j = idx[slot];
            let mut acc = 0.0;
            for k in 0..self.dim {
                let w = m.get(k, j);
                if w != 0.0 {
                    src[slot] = k;
                    acc += w * self.get(&src[..self.rank]);
                }
            }
            acc
        })
    }

    /// Largest violation of antisymmetry under adjacent transpositions.
    pub fn antisymmetry_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for s in 0..self.rank.saturating_sub(1) {
            let mut perm: Vec<usize> = (0..self.rank).collect();
            perm.swap(s, s + 1);
            let p = self.permuted(&perm);
            worst = worst.max(
                self.data.iter().zip(&p.data).fold(0.0, |m, (a, b)| m.max((a + b).abs())),
            );
        }
        worst
    }

    /// Full contraction `self(x_0, x_1, ..)` against vectors.
    pub fn eval(&self, args: &[&[f64]]) -> f64 {
        assert_eq!(args.len(), self.rank);
        let mut idx = [0usize; MAX_RANK];
        let mut acc = 0.0;
        for flat in 0..self.data.len() {
            let v = self.data[flat];
            if v == 0.0 {
                continue;
            }
            self.decode(flat, &mut idx);
            let mut w = v;
            for (s, a) in args.iter().enumerate() {
                w *= a[idx[s]];
                if w == 0.0 {
                    break;
                }
            }
            acc += w;
        }
        acc
    }

    /// Contracts the first slot with a vector: `out(..) = self(x, ..)`.
    pub fn contract_first(&self, x: &[f64]) -> Tensor {
        assert!(self.rank >= 1);
        let block = self.data.len() / self.dim;
        let mut data = vec![0.0; block];
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            for (o, v) in data.iter_mut().zip(&self.data[i * block..(i + 1) * block]) {
                *o += xi * v;
            }
        }
        Tensor { rank: self.rank - 1, dim: self.dim, data }
    }

    pub fn as_vec(&self) -> Vec<f64> {
        self.data.clone()
    }
}

impl Add for &Tensor {
    type Output = Tensor;
    fn add(self, rhs: &Tensor) -> Tensor {
        assert_eq!((self.rank, self.dim), (rhs.rank, rhs.dim));
        let data = self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect();
        Tensor { rank: self.rank, dim: self.dim, data }
    }
}

impl Sub for &Tensor {
    type Output = Tensor;
    fn sub(self, rhs: &Tensor) -> Tensor {
        assert_eq!((self.rank, self.dim), (rhs.rank, rhs.dim));
        let data = self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect();
        Tensor { rank: self.rank, dim: self.dim, data }
    }
}

impl Neg for &Tensor {
    type Output = Tensor;
    fn neg(self) -> Tensor {
        self.scale(-1.0)
    }
}

/// A frame endomorphism acting on column vectors: `(M X)_l = sum_k M[l][k] X_k`.
#[derive(Clone, Debug, PartialEq)]
pub struct EndoMatrix(DMatrix<f64>);

impl EndoMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self, TensorError> {
        if m.nrows() != m.ncols() {
            return Err(TensorError::DimensionMismatch { left: m.nrows(), right: m.ncols() });
        }
        Ok(EndoMatrix(m))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self, TensorError> {
        let n = rows.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(TensorError::DimensionMismatch { left: n, right: bad.len() });
        }
        Ok(EndoMatrix(DMatrix::from_fn(n, n, |i, j| rows[i][j])))
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize, usize) -> f64) -> Self {
        EndoMatrix(DMatrix::from_fn(dim, dim, f))
    }

    pub fn identity(dim: usize) -> Self {
        EndoMatrix(DMatrix::identity(dim, dim))
    }

    pub fn zeros(dim: usize) -> Self {
        EndoMatrix(DMatrix::zeros(dim, dim))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim()).map(|i| (0..self.dim()).map(|j| self.0[(i, j)]).collect()).collect()
    }

    pub fn transpose(&self) -> EndoMatrix {
        EndoMatrix(self.0.transpose())
    }

    pub fn scale(&self, s: f64) -> EndoMatrix {
        EndoMatrix(&self.0 * s)
    }

    pub fn commutator(&self, other: &EndoMatrix) -> EndoMatrix {
        EndoMatrix(&self.0 * &other.0 - &other.0 * &self.0)
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let v = &self.0 * DVector::from_column_slice(x);
        v.as_slice().to_vec()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.amax()
    }

    pub fn max_abs_diff(&self, other: &EndoMatrix) -> f64 {
        (&self.0 - &other.0).amax()
    }

    /// `max |M^2 + id|`.
    pub fn complex_residual(&self) -> f64 {
        (&self.0 * &self.0 + DMatrix::identity(self.dim(), self.dim())).amax()
    }

    /// `max |M^T M - id|`.
    pub fn orthogonality_residual(&self) -> f64 {
        (self.0.transpose() * &self.0 - DMatrix::identity(self.dim(), self.dim())).amax()
    }
}

impl Add for &EndoMatrix {
    type Output = EndoMatrix;
    fn add(self, rhs: &EndoMatrix) -> EndoMatrix {
        EndoMatrix(&self.0 + &rhs.0)
    }
}

impl Sub for &EndoMatrix {
    type Output = EndoMatrix;
    fn sub(self, rhs: &EndoMatrix) -> EndoMatrix {
        EndoMatrix(&self.0 - &rhs.0)
    }
}

impl Mul for &EndoMatrix {
    type Output = EndoMatrix;
    fn mul(self, rhs: &EndoMatrix) -> EndoMatrix {
        EndoMatrix(&self.0 * &rhs.0)
    }
}

impl Neg for &EndoMatrix {
    type Output = EndoMatrix;
    fn neg(self) -> EndoMatrix {
        EndoMatrix(-&self.0)
    }
}

/// `(A, B) = trace(A B^T)`.
pub fn endo_inner(a: &EndoMatrix, b: &EndoMatrix) -> Result<f64, TensorError> {
    if a.dim() != b.dim() {
        return Err(TensorError::DimensionMismatch { left: a.dim(), right: b.dim() });
    }
    Ok(a.0.iter().zip(b.0.iter()).map(|(x, y)| x * y).sum())
}

/// `(a, b) = 1/2 sum_{i,j} a(e_i,e_j) b(e_i,e_j)` on 2-forms.
pub fn two_form_inner(a: &Tensor, b: &Tensor) -> Result<f64, TensorError> {
    for t in [a, b] {
        if t.rank() != 2 {
            return Err(TensorError::RankMismatch { expected: 2, got: t.rank() });
        }
    }
    if a.dim() != b.dim() {
        return Err(TensorError::DimensionMismatch { left: a.dim(), right: b.dim() });
    }
    Ok(0.5 * a.data.iter().zip(&b.data).map(|(x, y)| x * y).sum::<f64>())
}

/// `||T||^2`, the sum over all ordered index triples.
pub fn norm_sq_3form(t: &Tensor) -> f64 {
    debug_assert_eq!(t.rank(), 3);
    t.norm_sq()
}

/// `sum_{i,j} g(T(e_i,e_j), T(J_b e_i, J_c e_j))`.
pub fn torsion_pair_trace(t: &Tensor, jb: &EndoMatrix, jc: &EndoMatrix) -> f64 {
    let u = t.apply_endo(&[Some(jb), Some(jc), None]);
    t.data().iter().zip(u.data()).map(|(a, b)| a * b).sum()
}

/// Argument slots of a 3-form that receive `J`.
pub type SlotPattern = [bool; 3];

/// `T` with `J` applied to the slots flagged in `pattern`, e.g. `T(JX, JY, Z)`.
pub fn j_pullback_3form(
    t: &Tensor,
    j: &EndoMatrix,
    pattern: SlotPattern,
) -> Result<Tensor, TensorError> {
    if t.rank() != 3 {
        return Err(TensorError::RankMismatch { expected: 3, got: t.rank() });
    }
    if t.dim() != j.dim() {
        return Err(TensorError::DimensionMismatch { left: t.dim(), right: j.dim() });
    }
    let r = j.complex_residual();
    if r > 1e-10 {
        return Err(TensorError::NotComplex(r));
    }
    let slots: Vec<Option<&EndoMatrix>> = pattern.iter().map(|&p| p.then_some(j)).collect();
    Ok(t.apply_endo(&slots))
}

/// `S_J(T)(X,Y,Z) = T(JX,JY,Z) + T(JX,Y,JZ) + T(X,JY,JZ)`.
pub fn type_operator(t: &Tensor, j: &EndoMatrix) -> Tensor {
    let a = t.apply_endo(&[Some(j), Some(j), None]);
    let b = t.apply_endo(&[Some(j), None, Some(j)]);
    let c = t.apply_endo(&[None, Some(j), Some(j)]);
    &(&a + &b) + &c
}

/// Max over `J` of `|T - S_J(T)|`; zero exactly for forms of type (1,2)+(2,1).
pub fn type_residual(t: &Tensor, js: &[EndoMatrix]) -> Vec<f64> {
    js.iter().map(|j| (t - &type_operator(t, j)).max_abs()).collect()
}

/// Index triples `i < j < k` labelling the standard basis of 3-forms.
pub fn three_form_basis(dim: usize) -> Vec<[usize; 3]> {
    let mut out = Vec::new();
    for i in 0..dim {
        for j in i + 1..dim {
            for k in j + 1..dim {
                out.push([i, j, k]);
            }
        }
    }
    out
}

/// The antisymmetric 3-form with coefficient `x[b]` on basis element `b`.
pub fn three_form_from_coeffs(dim: usize, coeffs: &[f64]) -> Tensor {
    let basis = three_form_basis(dim);
    assert_eq!(basis.len(), coeffs.len());
    let mut t = Tensor::zeros(3, dim);
    for (&[i, j, k], &x) in basis.iter().zip(coeffs) {
        if x == 0.0 {
            continue;
        }
        for (a, b, c, s) in [
            (i, j, k, 1.0),
            (j, k, i, 1.0),
            (k, i, j, 1.0),
            (j, i, k, -1.0),
            (i, k, j, -1.0),
            (k, j, i, -1.0),
        ] {
            t.set(&[a, b, c], s * x);
        }
    }
    t
}

pub fn three_form_coeffs(t: &Tensor) -> Vec<f64> {
    three_form_basis(t.dim()).iter().map(|&[i, j, k]| t.get(&[i, j, k])).collect()
}

/// Orthogonal projector onto 3-forms of type (1,2)+(2,1) for every member
/// of a family of complex structures.
#[derive(Clone, Debug)]
pub struct TypeProjector {
    dim: usize,
    /// Orthonormal columns spanning the admissible coefficient subspace.
    range: DMatrix<f64>,
}

impl TypeProjector {
    pub fn new(js: &[EndoMatrix]) -> Self {
        let dim = js.first().map(EndoMatrix::dim).expect("at least one complex structure");
        let basis = three_form_basis(dim);
        let cols: Vec<Vec<f64>> = (0..basis.len())
            .map(|b| {
                let mut e = vec![0.0; basis.len()];
                e[b] = 1.0;
                let t = three_form_from_coeffs(dim, &e);
                js.iter().flat_map(|j| (&t - &type_operator(&t, j)).as_vec()).collect()
            })
            .collect();
        let rows = cols[0].len();
        let a = DMatrix::from_fn(rows, cols.len(), |r, c| cols[c][r]);
        let range = linsolve::null_space(&a);
        TypeProjector { dim, range }
    }

    /// Dimension of the admissible subspace.
    pub fn rank(&self) -> usize {
        self.range.ncols()
    }

    pub fn project(&self, t: &Tensor) -> Tensor {
        assert_eq!(t.dim(), self.dim);
        let x = DVector::from_vec(three_form_coeffs(t));
        let y = &self.range * (self.range.transpose() * x);
        three_form_from_coeffs(self.dim, y.as_slice())
    }
}

/// Orthogonal projection of an antisymmetric 3-form onto the forms of type
/// (1,2)+(2,1) with respect to each of `js`.
pub fn three_form_type_project(t: &Tensor, js: &[EndoMatrix]) -> Tensor {
    TypeProjector::new(js).project(t)
}

/// `1/2 (b(X,Y) - b(JX,JY))`, the (2,0)+(0,2) part of a 2-form.
pub fn two_form_anti_part(b: &Tensor, j: &EndoMatrix) -> Tensor {
    (b - &b.apply_endo(&[Some(j), Some(j)])).scale(0.5)
}

/// Standard unit vector.
pub fn unit(dim: usize, i: usize) -> Vec<f64> {
    let mut v = vec![0.0; dim];
    v[i] = 1.0;
    v
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn std_j4() -> EndoMatrix {
        // e0 -> e1, e1 -> -e0, e2 -> e3, e3 -> -e2
        let mut m = DMatrix::zeros(4, 4);
        m[(1, 0)] = 1.0;
        m[(0, 1)] = -1.0;
        m[(3, 2)] = 1.0;
        m[(2, 3)] = -1.0;
        EndoMatrix::new(m).unwrap()
    }

    #[test]
    fn endo_inner_identity() {
        let id = EndoMatrix::identity(8);
        assert_eq!(endo_inner(&id, &id).unwrap(), 8.0);
        assert!(endo_inner(&id, &EndoMatrix::identity(4)).is_err());
    }

    #[test]
    fn norm_of_elementary_three_form() {
        let t = three_form_from_coeffs(4, &[0.0, 0.0, 0.0, 1.0]);
        assert_eq!(t.get(&[1, 2, 3]), 1.0);
        assert_eq!(norm_sq_3form(&t), 6.0);
        assert_eq!(t.antisymmetry_residual(), 0.0);
    }

    #[test]
    fn pullback_matches_entrywise_application() {
        let j = std_j4();
        let t = three_form_from_coeffs(4, &[0.0, 0.0, 0.0, 1.0]);
        let p = j_pullback_3form(&t, &j, [true, true, false]).unwrap();
        // brute force: T(J e_a, J e_b, e_c)
        for a in 0..4 {
            for b in 0..4 {
                for c in 0..4 {
                    let ja = j.apply(&unit(4, a));
                    let jb = j.apply(&unit(4, b));
                    let ec = unit(4, c);
                    let want = t.eval(&[&ja, &jb, &ec]);
                    assert!((p.get(&[a, b, c]) - want).abs() < 1e-15);
                }
            }
        }
        let twice = j_pullback_3form(&p, &j, [true, true, false]).unwrap();
        assert!(twice.max_abs_diff(&t) < 1e-15);
        assert!(j_pullback_3form(&Tensor::zeros(3, 4), &j, [true, true, false])
            .unwrap()
            .max_abs()
            == 0.0);
    }

    #[test]
    fn pullback_rejects_non_complex() {
        let t = Tensor::zeros(3, 4);
        let err = j_pullback_3form(&t, &EndoMatrix::identity(4), [true, false, false]);
        assert!(matches!(err, Err(TensorError::NotComplex(_))));
    }

    #[test]
    fn two_form_inner_disjoint_supports() {
        let mut a = Tensor::zeros(2, 4);
        a.set(&[0, 1], 1.0);
        a.set(&[1, 0], -1.0);
        let mut b = Tensor::zeros(2, 4);
        b.set(&[2, 3], 1.0);
        b.set(&[3, 2], -1.0);
        assert_eq!(two_form_inner(&a, &b).unwrap(), 0.0);
        assert_eq!(two_form_inner(&a, &a).unwrap(), 1.0);
    }

    #[test]
    fn bad_dimension_rejected() {
        assert_eq!(Tensor::from_data(1, 3, vec![0.0; 3]), Err(TensorError::BadDimension(3)));
    }

    #[test]
    fn permuted_and_contract() {
        let t = Tensor::from_fn(3, 4, |i| (i[0] * 16 + i[1] * 4 + i[2]) as f64);
        let p = t.permuted(&[1, 2, 0]);
        assert_eq!(p.get(&[1, 2, 3]), t.get(&[2, 3, 1]));
        let c = t.contract_first(&unit(4, 2));
        assert_eq!(c.get(&[1, 3]), t.get(&[2, 1, 3]));
    }
}
