//! Dense complex matrices and a Hermitian eigensolver.
//!
//! The eigensolver reduces a Hermitian matrix to real symmetric tridiagonal
//! form with Householder reflectors, then diagonalises it with implicit QL
//! iterations. Reflectors and plane rotations are kept, so eigenvectors can
//! be applied to individual vectors in `O(n^2)` without ever forming the full
//! eigenvector matrix. Propagating a handful of states through a stationary
//! Hamiltonian therefore costs one tridiagonalisation.

use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::scalar::{cis, re, Cplx, Real};

/// Dense square complex matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix<T> {
    n: usize,
    data: Vec<Cplx<T>>,
}

impl<T: Real> CMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![Complex::zero(); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = Complex::one();
        }
        m
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> Cplx<T>) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for r in 0..n {
            for col in 0..n {
                data.push(f(r, col));
            }
        }
        Self { n, data }
    }

    /// Builds a matrix from row-major entries; `entries.len()` must be a square.
    pub fn from_rows(entries: Vec<Cplx<T>>) -> Result<Self> {
        let n = (entries.len() as f64).sqrt().round() as usize;
        if n * n != entries.len() {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                got: entries.len(),
            });
        }
        Ok(Self { n, data: entries })
    }

    pub fn from_diagonal(diag: &[Cplx<T>]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, d) in diag.iter().enumerate() {
            m.data[i * diag.len() + i] = *d;
        }
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn as_slice(&self) -> &[Cplx<T>] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [Cplx<T>] {
        &mut self.data
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[Cplx<T>] {
        &self.data[r * self.n..(r + 1) * self.n]
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.n, |r, col| self[(col, r)].conj())
    }

    pub fn scale(&self, s: Cplx<T>) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().map(|x| *x * s).collect(),
        }
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.n, rhs.n, "matmul dimension mismatch");
        let n = self.n;
        let mut out = Self::zeros(n);
        for r in 0..n {
            let out_row = &mut out.data[r * n..(r + 1) * n];
            for k in 0..n {
                let a = self.data[r * n + k];
                if a.is_zero() {
                    continue;
                }
                let rhs_row = &rhs.data[k * n..(k + 1) * n];
                for (o, b) in out_row.iter_mut().zip(rhs_row) {
                    *o += a * *b;
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[Cplx<T>]) -> Vec<Cplx<T>> {
        assert_eq!(self.n, v.len(), "matvec dimension mismatch");
        (0..self.n)
            .map(|r| {
                self.row(r)
                    .iter()
                    .zip(v)
                    .fold(Complex::zero(), |acc, (a, b)| acc + *a * *b)
            })
            .collect()
    }

    /// `A B - B A`
    pub fn commutator(&self, rhs: &Self) -> Self {
        &self.matmul(rhs) - &rhs.matmul(self)
    }

    /// Kronecker product `self ⊗ rhs`.
    pub fn kron(&self, rhs: &Self) -> Self {
        let (n, m) = (self.n, rhs.n);
        Self::from_fn(n * m, |r, col| self[(r / m, col / m)] * rhs[(r % m, col % m)])
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> T {
        self.data
            .iter()
            .map(|x| x.norm())
            .fold(T::zero(), |a, b| a.max(b))
    }

    /// `max |M - M†|`, zero for a Hermitian matrix.
    pub fn hermiticity_defect(&self) -> T {
        let mut worst = T::zero();
        for r in 0..self.n {
            for col in r..self.n {
                let d = (self[(r, col)] - self[(col, r)].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    /// `max |M M† - 1|`
    pub fn unitarity_defect(&self) -> T {
        let p = self.matmul(&self.adjoint());
        (&p - &Self::identity(self.n)).max_abs()
    }

    pub fn trace(&self) -> Cplx<T> {
        (0..self.n).map(|i| self[(i, i)]).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.re.is_finite() && x.im.is_finite())
    }
}

impl<T> Index<(usize, usize)> for CMatrix<T> {
    type Output = Cplx<T>;
    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &Cplx<T> {
        &self.data[r * self.n + c]
    }
}

impl<T> IndexMut<(usize, usize)> for CMatrix<T> {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Cplx<T> {
        &mut self.data[r * self.n + c]
    }
}

impl<T: Real> Add for &CMatrix<T> {
    type Output = CMatrix<T>;
    fn add(self, rhs: Self) -> CMatrix<T> {
        assert_eq!(self.n, rhs.n);
        CMatrix {
            n: self.n,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| *a + *b).collect(),
        }
    }
}

impl<T: Real> Sub for &CMatrix<T> {
    type Output = CMatrix<T>;
    fn sub(self, rhs: Self) -> CMatrix<T> {
        assert_eq!(self.n, rhs.n);
        CMatrix {
            n: self.n,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| *a - *b).collect(),
        }
    }
}

impl<T: Real> Mul for &CMatrix<T> {
    type Output = CMatrix<T>;
    fn mul(self, rhs: Self) -> CMatrix<T> {
        self.matmul(rhs)
    }
}

/// Euclidean norm of a complex vector.
pub fn vec_norm<T: Real>(v: &[Cplx<T>]) -> T {
    v.iter().map(|x| x.norm_sqr()).sum::<T>().sqrt()
}

/// `<a|b>`
pub fn inner<T: Real>(a: &[Cplx<T>], b: &[Cplx<T>]) -> Cplx<T> {
    a.iter().zip(b).map(|(x, y)| x.conj() * *y).sum()
}

#[derive(Clone, Debug)]
struct Reflector<T> {
    /// First row/column touched by the reflector.
    offset: usize,
    v: Vec<Cplx<T>>,
    tau: T,
}

/// Eigendecomposition `A = V diag(values) V†` of a Hermitian matrix.
///
/// `V = Q Φ Z` where `Q` is a product of Householder reflectors, `Φ` a
/// diagonal phase matrix making the tridiagonal form real, and `Z` the
/// product of QL plane rotations followed by an ascending sort.
#[derive(Clone, Debug)]
pub struct HermitianEigen<T> {
    n: usize,
    values: Vec<T>,
    reflectors: Vec<Reflector<T>>,
    phases: Vec<Cplx<T>>,
    /// `(i, c, s)` acting on components `i, i+1`, in application order.
    rotations: Vec<(usize, T, T)>,
    /// `order[k]` = unsorted index of the k-th smallest eigenvalue.
    order: Vec<usize>,
}

impl<T: Real> HermitianEigen<T> {
    /// Diagonalises a Hermitian matrix. Only the lower triangle is trusted.
    pub fn new(a: &CMatrix<T>) -> Result<Self> {
        if !a.is_finite() {
            return Err(Error::NonFinite("matrix entry"));
        }
        let n = a.dim();
        let mut w = a.clone();
        // Hermitian-symmetrise from the lower triangle.
        for r in 0..n {
            w[(r, r)] = re(w[(r, r)].re);
            for col in 0..r {
                w[(col, r)] = w[(r, col)].conj();
            }
        }

        let mut reflectors = Vec::with_capacity(n.saturating_sub(2));
        let mut p = vec![Complex::zero(); n];
        for k in 0..n.saturating_sub(2) {
            let off = k + 1;
            let m = n - off;
            let mut v: Vec<Cplx<T>> = (0..m).map(|i| w[(off + i, k)]).collect();
            let xnorm = vec_norm(&v);
            if xnorm == T::zero() {
                continue;
            }
            let x0 = v[0];
            let phase = if x0.norm() == T::zero() {
                Complex::one()
            } else {
                x0 / x0.norm()
            };
            let alpha = -phase * xnorm;
            v[0] -= alpha;
            let vnorm2: T = v.iter().map(|x| x.norm_sqr()).sum();
            if vnorm2 == T::zero() {
                continue;
            }
            let tau = T::lit(2.0) / vnorm2;

            // p = tau * A22 v
            for i in 0..m {
                let row = &w.data[(off + i) * n + off..(off + i) * n + n];
                let s: Cplx<T> = row.iter().zip(&v).map(|(a, b)| *a * *b).sum();
                p[i] = s * tau;
            }
            // K = tau/2 * v† p (real for Hermitian A22)
            let vp: Cplx<T> = v.iter().zip(&p[..m]).map(|(a, b)| a.conj() * *b).sum();
            let kk = vp.re * tau * T::lit(0.5);
            for i in 0..m {
                p[i] -= v[i] * kk;
            }
            // A22 -= v p† + p v†
            for i in 0..m {
                let vi = v[i];
                let pi = p[i];
                let row = &mut w.data[(off + i) * n + off..(off + i) * n + n];
                for ((a, vj), pj) in row.iter_mut().zip(&v).zip(&p[..m]) {
                    *a -= vi * pj.conj() + pi * vj.conj();
                }
            }
            w[(off, k)] = alpha;
            w[(k, off)] = alpha.conj();
            for i in 1..m {
                w[(off + i, k)] = Complex::zero();
                w[(k, off + i)] = Complex::zero();
            }
            reflectors.push(Reflector { offset: off, v, tau });
        }

        // Diagonal phases turning the Hermitian tridiagonal into a real one.
        let mut d: Vec<T> = (0..n).map(|i| w[(i, i)].re).collect();
        let mut e = vec![T::zero(); n];
        let mut phases = vec![Complex::one(); n];
        for i in 0..n.saturating_sub(1) {
            let b = w[(i + 1, i)];
            let mag = b.norm();
            e[i] = mag;
            phases[i + 1] = if mag == T::zero() {
                phases[i]
            } else {
                phases[i] * (b / mag)
            };
        }

        let rotations = tql(&mut d, &mut e)?;

        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| d[i].partial_cmp(&d[j]).unwrap_or(std::cmp::Ordering::Equal));
        let values = order.iter().map(|&i| d[i]).collect();

        Ok(Self {
            n,
            values,
            reflectors,
            phases,
            rotations,
            order,
        })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Eigenvalues in ascending order.
    #[inline]
    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// Coefficients `V† u` of `u` in the eigenbasis (sorted order).
    pub fn project(&self, u: &[Cplx<T>]) -> Vec<Cplx<T>> {
        assert_eq!(u.len(), self.n);
        let mut x = u.to_vec();
        // Q† u = H_last ... H_0 u
        for h in &self.reflectors {
            apply_reflector(h, &mut x);
        }
        for (xi, ph) in x.iter_mut().zip(&self.phases) {
            *xi *= ph.conj();
        }
        for &(i, c, s) in &self.rotations {
            let (a, b) = (x[i], x[i + 1]);
            x[i] = a * c - b * s;
            x[i + 1] = a * s + b * c;
        }
        self.order.iter().map(|&k| x[k]).collect()
    }

    /// `V c` for coefficients `c` in the eigenbasis (sorted order).
    pub fn reconstruct(&self, coeffs: &[Cplx<T>]) -> Vec<Cplx<T>> {
        assert_eq!(coeffs.len(), self.n);
        let mut x = vec![Complex::zero(); self.n];
        for (k, &src) in self.order.iter().enumerate() {
            x[src] = coeffs[k];
        }
        for &(i, c, s) in self.rotations.iter().rev() {
            let (a, b) = (x[i], x[i + 1]);
            x[i] = a * c + b * s;
            x[i + 1] = b * c - a * s;
        }
        for (xi, ph) in x.iter_mut().zip(&self.phases) {
            *xi *= *ph;
        }
        for h in self.reflectors.iter().rev() {
            apply_reflector(h, &mut x);
        }
        x
    }

    /// Row `j` of `V`, i.e. `<j|v_m>` for every eigenvector `m`.
    pub fn row(&self, j: usize) -> Vec<Cplx<T>> {
        let mut e = vec![Complex::zero(); self.n];
        e[j] = Complex::one();
        // (V^T e_j) = conj(V† e_j)
        self.project(&e).into_iter().map(|z| z.conj()).collect()
    }

    /// Full eigenvector matrix (columns are eigenvectors). `O(n^3)`.
    pub fn vectors(&self) -> CMatrix<T> {
        let n = self.n;
        let mut v = CMatrix::zeros(n);
        let mut unit = vec![Complex::zero(); n];
        for m in 0..n {
            unit.iter_mut().for_each(|z| *z = Complex::zero());
            unit[m] = Complex::one();
            let col = self.reconstruct(&unit);
            for (r, z) in col.into_iter().enumerate() {
                v[(r, m)] = z;
            }
        }
        v
    }

    /// `V diag(f(λ)) V†`
    pub fn map(&self, f: impl Fn(T) -> Cplx<T>) -> CMatrix<T> {
        let v = self.vectors();
        let fl: Vec<Cplx<T>> = self.values.iter().map(|&l| f(l)).collect();
        let n = self.n;
        let mut out = CMatrix::zeros(n);
        for r in 0..n {
            let vr = v.row(r);
            for col in 0..n {
                let vc = v.row(col);
                let mut s = Complex::zero();
                for m in 0..n {
                    s += vr[m] * fl[m] * vc[m].conj();
                }
                out[(r, col)] = s;
            }
        }
        out
    }

    /// `exp(-i H t)` as a dense matrix.
    pub fn propagator(&self, t: T) -> CMatrix<T> {
        self.map(|l| cis(-l * t))
    }
}

fn apply_reflector<T: Real>(h: &Reflector<T>, x: &mut [Cplx<T>]) {
    let tail = &mut x[h.offset..h.offset + h.v.len()];
    let s: Cplx<T> = h.v.iter().zip(tail.iter()).map(|(v, x)| v.conj() * *x).sum();
    let s = s * h.tau;
    for (xi, vi) in tail.iter_mut().zip(&h.v) {
        *xi -= *vi * s;
    }
}

/// Implicit QL with Wilkinson shifts on a real symmetric tridiagonal matrix
/// (diagonal `d`, sub-diagonal `e[i] = T[i+1][i]`). On return `d` holds the
/// unsorted eigenvalues; the returned rotations reproduce the eigenvectors.
fn tql<T: Real>(d: &mut [T], e: &mut [T]) -> Result<Vec<(usize, T, T)>> {
    let n = d.len();
    let mut rotations = Vec::new();
    if n == 0 {
        return Ok(rotations);
    }
    e[n - 1] = T::zero();
    let eps = T::epsilon();
    let two = T::lit(2.0);
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m < n - 1 {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= eps * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 100 {
                return Err(Error::EigenNoConvergence);
            }
            let mut g = (d[l + 1] - d[l]) / (two * e[l]);
            let mut r = g.hypot(T::one());
            g = d[m] - d[l] + e[l] / (g + r.abs().copysign(g));
            let (mut s, mut c, mut p) = (T::one(), T::one(), T::zero());
            let mut underflow = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == T::zero() {
                    d[i + 1] -= p;
                    e[m] = T::zero();
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + two * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                rotations.push((i, c, s));
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = T::zero();
        }
    }
    Ok(rotations)
}
