//! Tensor-product Hilbert space of ion internal levels and truncated
//! motional Fock modes, with the elementary operators acting on it.
//!
//! Ordering is fixed: all ions first, then all modes, row-major (the last
//! mode is the fastest-varying digit). Ion levels are indexed `g = 0`,
//! `e = 1`, `e' = 2`.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{inner, vec_norm, CMatrix};
use crate::scalar::{re, Cplx, Real};

/// Internal level of an ion.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Level {
    #[serde(rename = "g")]
    G,
    #[serde(rename = "e")]
    E,
    /// Auxiliary level used by the conditional-phase step.
    #[serde(rename = "e'")]
    EPrime,
}

impl Level {
    #[inline]
    pub fn index(self) -> usize {
        match self {
            Level::G => 0,
            Level::E => 1,
            Level::EPrime => 2,
        }
    }
}

/// Optical transition driven on one ion.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Transition {
    #[default]
    #[serde(rename = "g-e")]
    Ge,
    #[serde(rename = "g-e'")]
    GePrime,
}

impl Transition {
    #[inline]
    pub fn lower(self) -> Level {
        Level::G
    }

    #[inline]
    pub fn upper(self) -> Level {
        match self {
            Transition::Ge => Level::E,
            Transition::GePrime => Level::EPrime,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Transition::Ge => "g-e",
            Transition::GePrime => "g-e'",
        }
    }
}

/// Picture in which a state or Hamiltonian is expressed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Frame {
    /// Standard laser interaction picture (bare ion levels).
    #[default]
    Interaction,
    /// Rotated by `R` on the addressed ion: `|+> -> |e>`, `|-> -> |g>`.
    Dressed,
    /// Dressed frame further rotating with the lightshift splitting.
    DressedRotating,
}

impl Frame {
    pub fn name(self) -> &'static str {
        match self {
            Frame::Interaction => "interaction",
            Frame::Dressed => "dressed",
            Frame::DressedRotating => "dressed-rotating",
        }
    }
}

/// A tensor factor of the basis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Factor {
    Ion(usize),
    Mode(usize),
}

/// Layout of the tensor basis (ions ⊗ modes).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BasisDescriptor {
    ion_levels: Vec<usize>,
    mode_cutoffs: Vec<usize>,
    dims: Vec<usize>,
    strides: Vec<usize>,
    dim: usize,
}

impl BasisDescriptor {
    /// `ion_levels[j]` is 2 or 3; `mode_cutoffs[p]` is the highest Fock
    /// number kept for mode `p`.
    pub fn new(ion_levels: Vec<usize>, mode_cutoffs: Vec<usize>) -> Result<Self> {
        if let Some(&bad) = ion_levels.iter().find(|&&l| !(2..=3).contains(&l)) {
            return Err(Error::InvalidConfig(format!(
                "ions must have 2 or 3 levels, got {bad}"
            )));
        }
        let dims: Vec<usize> = ion_levels
            .iter()
            .copied()
            .chain(mode_cutoffs.iter().map(|n| n + 1))
            .collect();
        if dims.is_empty() {
            return Err(Error::InvalidConfig("basis has no factors".into()));
        }
        let mut strides = vec![1; dims.len()];
        for k in (0..dims.len() - 1).rev() {
            strides[k] = strides[k + 1] * dims[k + 1];
        }
        let dim = dims.iter().product();
        Ok(Self {
            ion_levels,
            mode_cutoffs,
            dims,
            strides,
            dim,
        })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn n_ions(&self) -> usize {
        self.ion_levels.len()
    }

    #[inline]
    pub fn n_modes(&self) -> usize {
        self.mode_cutoffs.len()
    }

    pub fn ion_levels(&self) -> &[usize] {
        &self.ion_levels
    }

    pub fn mode_cutoffs(&self) -> &[usize] {
        &self.mode_cutoffs
    }

    fn position(&self, f: Factor) -> Result<usize> {
        match f {
            Factor::Ion(j) if j < self.n_ions() => Ok(j),
            Factor::Ion(j) => Err(Error::IndexOutOfRange {
                what: "ion",
                index: j,
                len: self.n_ions(),
            }),
            Factor::Mode(p) if p < self.n_modes() => Ok(self.n_ions() + p),
            Factor::Mode(p) => Err(Error::IndexOutOfRange {
                what: "mode",
                index: p,
                len: self.n_modes(),
            }),
        }
    }

    pub fn factor_dim(&self, f: Factor) -> Result<usize> {
        Ok(self.dims[self.position(f)?])
    }

    /// Digit of factor `f` in basis index `i`.
    #[inline]
    pub fn digit(&self, i: usize, f: Factor) -> usize {
        let pos = match f {
            Factor::Ion(j) => j,
            Factor::Mode(p) => self.n_ions() + p,
        };
        (i / self.strides[pos]) % self.dims[pos]
    }

    pub fn digits(&self, i: usize) -> Vec<usize> {
        self.dims
            .iter()
            .zip(&self.strides)
            .map(|(d, s)| (i / s) % d)
            .collect()
    }

    /// Index of the product state `|levels> ⊗ |fock>`.
    pub fn index_of(&self, levels: &[Level], fock: &[usize]) -> Result<usize> {
        if levels.len() != self.n_ions() {
            return Err(Error::DimensionMismatch {
                expected: self.n_ions(),
                got: levels.len(),
            });
        }
        if fock.len() != self.n_modes() {
            return Err(Error::DimensionMismatch {
                expected: self.n_modes(),
                got: fock.len(),
            });
        }
        let mut idx = 0;
        for (j, l) in levels.iter().enumerate() {
            if l.index() >= self.ion_levels[j] {
                return Err(Error::MissingLevel {
                    ion: j,
                    levels: self.ion_levels[j],
                    transition: "state",
                    needed: l.index(),
                });
            }
            idx += l.index() * self.strides[j];
        }
        for (p, &n) in fock.iter().enumerate() {
            if n > self.mode_cutoffs[p] {
                return Err(Error::IndexOutOfRange {
                    what: "Fock level",
                    index: n,
                    len: self.mode_cutoffs[p] + 1,
                });
            }
            idx += n * self.strides[self.n_ions() + p];
        }
        Ok(idx)
    }

    /// Checks that `transition` exists on ion `j`.
    pub fn check_transition(&self, j: usize, transition: Transition) -> Result<()> {
        let levels = self.factor_dim(Factor::Ion(j))?;
        let needed = transition.upper().index();
        if needed >= levels {
            return Err(Error::MissingLevel {
                ion: j,
                levels,
                transition: transition.name(),
                needed,
            });
        }
        Ok(())
    }

    /// Groups of basis indices on which a local operator acts.
    ///
    /// `factors` lists the tensor factors the local operator lives on, and
    /// `allowed[k]` the values factor `k` may take (all values when empty).
    /// Each returned group holds the full-basis indices for one configuration
    /// of the remaining factors, ordered by the row-major local index.
    pub fn groups(&self, factors: &[Factor], allowed: &[Vec<usize>]) -> Result<Vec<Vec<usize>>> {
        let positions = factors
            .iter()
            .map(|&f| self.position(f))
            .collect::<Result<Vec<_>>>()?;
        let values: Vec<Vec<usize>> = positions
            .iter()
            .enumerate()
            .map(|(k, &pos)| match allowed.get(k) {
                Some(v) if !v.is_empty() => v.clone(),
                _ => (0..self.dims[pos]).collect(),
            })
            .collect();
        for (k, vals) in values.iter().enumerate() {
            if let Some(&bad) = vals.iter().find(|&&v| v >= self.dims[positions[k]]) {
                return Err(Error::IndexOutOfRange {
                    what: "factor value",
                    index: bad,
                    len: self.dims[positions[k]],
                });
            }
        }
        let local_dim: usize = values.iter().map(Vec::len).product();

        let mut by_rest: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        'outer: for i in 0..self.dim {
            let mut local = 0;
            let mut rest = i;
            for (k, &pos) in positions.iter().enumerate() {
                let d = (i / self.strides[pos]) % self.dims[pos];
                let Some(slot) = values[k].iter().position(|&v| v == d) else {
                    continue 'outer;
                };
                local = local * values[k].len() + slot;
                rest -= d * self.strides[pos];
            }
            by_rest
                .entry(rest)
                .or_insert_with(|| vec![usize::MAX; local_dim])[local] = i;
        }
        Ok(by_rest.into_values().collect())
    }

    /// Embeds an operator on `factors` (row-major over the listed factors)
    /// into the full basis, identity elsewhere.
    pub fn embed<T: Real>(&self, factors: &[Factor], local: &CMatrix<T>) -> Result<CMatrix<T>> {
        let groups = self.groups(factors, &[])?;
        let ld = groups.first().map_or(0, Vec::len);
        if ld != local.dim() {
            return Err(Error::DimensionMismatch {
                expected: ld,
                got: local.dim(),
            });
        }
        let mut out = CMatrix::zeros(self.dim);
        for g in &groups {
            for (a, &ia) in g.iter().enumerate() {
                for (b, &ib) in g.iter().enumerate() {
                    out[(ia, ib)] = local[(a, b)];
                }
            }
        }
        Ok(out)
    }
}

impl fmt::Display for BasisDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "ions{:?} x modes(n_max){:?} (dim {})",
            self.ion_levels, self.mode_cutoffs, self.dim
        )
    }
}

/// Complex amplitude vector over a [`BasisDescriptor`].
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector<T> {
    amplitudes: Vec<Cplx<T>>,
    basis: Arc<BasisDescriptor>,
    frame: Frame,
}

impl<T: Real> StateVector<T> {
    pub fn from_amplitudes(basis: Arc<BasisDescriptor>, amplitudes: Vec<Cplx<T>>) -> Result<Self> {
        if amplitudes.len() != basis.dim() {
            return Err(Error::DimensionMismatch {
                expected: basis.dim(),
                got: amplitudes.len(),
            });
        }
        Ok(Self {
            amplitudes,
            basis,
            frame: Frame::Interaction,
        })
    }

    pub fn basis_state(basis: Arc<BasisDescriptor>, index: usize) -> Result<Self> {
        if index >= basis.dim() {
            return Err(Error::IndexOutOfRange {
                what: "basis state",
                index,
                len: basis.dim(),
            });
        }
        let mut amps = vec![Complex::zero(); basis.dim()];
        amps[index] = Complex::one();
        Self::from_amplitudes(basis, amps)
    }

    /// `|levels> ⊗ |fock>`
    pub fn product(basis: Arc<BasisDescriptor>, levels: &[Level], fock: &[usize]) -> Result<Self> {
        let idx = basis.index_of(levels, fock)?;
        Self::basis_state(basis, idx)
    }

    pub fn with_frame(mut self, frame: Frame) -> Self {
        self.frame = frame;
        self
    }

    #[inline]
    pub fn frame(&self) -> Frame {
        self.frame
    }

    #[inline]
    pub fn basis(&self) -> &Arc<BasisDescriptor> {
        &self.basis
    }

    #[inline]
    pub fn amplitudes(&self) -> &[Cplx<T>] {
        &self.amplitudes
    }

    #[inline]
    pub fn amplitudes_mut(&mut self) -> &mut [Cplx<T>] {
        &mut self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Cplx<T>> {
        self.amplitudes
    }

    pub fn norm(&self) -> T {
        vec_norm(&self.amplitudes)
    }

    pub fn normalized(mut self) -> Result<Self> {
        let n = self.norm();
        if n == T::zero() || !n.is_finite() {
            return Err(Error::InvalidInput("cannot normalise zero state".into()));
        }
        self.amplitudes.iter_mut().for_each(|a| *a = *a / n);
        Ok(self)
    }

    /// `<self|other>`
    pub fn inner(&self, other: &Self) -> Cplx<T> {
        inner(&self.amplitudes, &other.amplitudes)
    }

    pub fn population(&self, index: usize) -> T {
        self.amplitudes[index].norm_sqr()
    }

    /// `|<target|self>|^2`
    pub fn overlap_sq(&self, target: &Self) -> T {
        target.inner(self).norm_sqr()
    }

    /// Norm of the component with mode `p` in its highest kept Fock level.
    pub fn top_fock_amplitude(&self, p: usize) -> T {
        let top = self.basis.mode_cutoffs()[p];
        self.amplitudes
            .iter()
            .enumerate()
            .filter(|(i, _)| self.basis.digit(*i, Factor::Mode(p)) == top)
            .map(|(_, a)| a.norm_sqr())
            .sum::<T>()
            .sqrt()
    }

    /// Largest top-Fock-level amplitude over all modes, with its mode.
    pub fn worst_truncation_leak(&self) -> (usize, T) {
        (0..self.basis.n_modes())
            .map(|p| (p, self.top_fock_amplitude(p)))
            .fold((0, T::zero()), |acc, x| if x.1 > acc.1 { x } else { acc })
    }

    /// Applies an operator on the listed factors (identity elsewhere).
    pub fn apply_local(&self, factors: &[Factor], local: &CMatrix<T>) -> Result<Self> {
        let groups = self.basis.groups(factors, &[])?;
        let mut out = self.clone();
        apply_groups(&groups, local, &self.amplitudes, &mut out.amplitudes)?;
        Ok(out)
    }
}

/// Applies `local` to each group of indices, reading from `src` and writing
/// to `dst`. Indices outside the groups are left untouched in `dst`.
pub(crate) fn apply_groups<T: Real>(
    groups: &[Vec<usize>],
    local: &CMatrix<T>,
    src: &[Cplx<T>],
    dst: &mut [Cplx<T>],
) -> Result<()> {
    let ld = local.dim();
    let mut buf = vec![Complex::zero(); ld];
    for g in groups {
        if g.len() != ld {
            return Err(Error::DimensionMismatch {
                expected: ld,
                got: g.len(),
            });
        }
        for (b, &i) in buf.iter_mut().zip(g) {
            *b = src[i];
        }
        let out = local.matvec(&buf);
        for (o, &i) in out.into_iter().zip(g) {
            dst[i] = o;
        }
    }
    Ok(())
}

/// Dense operator over a [`BasisDescriptor`].
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorMatrix<T> {
    entries: CMatrix<T>,
    basis: Arc<BasisDescriptor>,
}

impl<T: Real> OperatorMatrix<T> {
    pub fn new(basis: Arc<BasisDescriptor>, entries: CMatrix<T>) -> Result<Self> {
        if entries.dim() != basis.dim() {
            return Err(Error::DimensionMismatch {
                expected: basis.dim(),
                got: entries.dim(),
            });
        }
        Ok(Self { entries, basis })
    }

    pub fn zeros(basis: Arc<BasisDescriptor>) -> Self {
        let entries = CMatrix::zeros(basis.dim());
        Self { entries, basis }
    }

    pub fn identity(basis: Arc<BasisDescriptor>) -> Self {
        let entries = CMatrix::identity(basis.dim());
        Self { entries, basis }
    }

    /// Embeds a local operator on `factors`.
    pub fn from_local(basis: Arc<BasisDescriptor>, factors: &[Factor], local: &CMatrix<T>) -> Result<Self> {
        let entries = basis.embed(factors, local)?;
        Ok(Self { entries, basis })
    }

    #[inline]
    pub fn entries(&self) -> &CMatrix<T> {
        &self.entries
    }

    pub fn into_entries(self) -> CMatrix<T> {
        self.entries
    }

    #[inline]
    pub fn basis(&self) -> &Arc<BasisDescriptor> {
        &self.basis
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.entries.dim()
    }

    pub fn adjoint(&self) -> Self {
        Self {
            entries: self.entries.adjoint(),
            basis: self.basis.clone(),
        }
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        Self {
            entries: self.entries.matmul(&rhs.entries),
            basis: self.basis.clone(),
        }
    }

    pub fn add(&self, rhs: &Self) -> Self {
        Self {
            entries: &self.entries + &rhs.entries,
            basis: self.basis.clone(),
        }
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        Self {
            entries: &self.entries - &rhs.entries,
            basis: self.basis.clone(),
        }
    }

    pub fn scale(&self, s: Cplx<T>) -> Self {
        Self {
            entries: self.entries.scale(s),
            basis: self.basis.clone(),
        }
    }

    pub fn commutator(&self, rhs: &Self) -> Self {
        Self {
            entries: self.entries.commutator(&rhs.entries),
            basis: self.basis.clone(),
        }
    }

    #[inline]
    pub fn element(&self, row: usize, col: usize) -> Cplx<T> {
        self.entries[(row, col)]
    }

    pub fn hermiticity_defect(&self) -> T {
        self.entries.hermiticity_defect()
    }

    pub fn max_abs(&self) -> T {
        self.entries.max_abs()
    }

    pub fn apply(&self, state: &StateVector<T>) -> Result<StateVector<T>> {
        if state.amplitudes.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: state.amplitudes.len(),
            });
        }
        Ok(StateVector {
            amplitudes: self.entries.matvec(&state.amplitudes),
            basis: state.basis.clone(),
            frame: state.frame,
        })
    }
}

/// Which Pauli-type operator to build.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PauliOp {
    Plus,
    Minus,
    Z,
}

/// Annihilation operator on a Fock space truncated at `n_max`.
pub fn ladder_local<T: Real>(n_max: usize) -> CMatrix<T> {
    let mut a = CMatrix::zeros(n_max + 1);
    for n in 1..=n_max {
        a[(n - 1, n)] = re(T::from_usize_lossy(n).sqrt());
    }
    a
}

/// Pauli-type operator on one transition of an ion with `levels` levels.
pub fn pauli_local<T: Real>(levels: usize, which: PauliOp, transition: Transition) -> CMatrix<T> {
    let (lo, up) = (transition.lower().index(), transition.upper().index());
    let mut m = CMatrix::zeros(levels);
    match which {
        PauliOp::Plus => m[(up, lo)] = Complex::one(),
        PauliOp::Minus => m[(lo, up)] = Complex::one(),
        PauliOp::Z => {
            m[(up, up)] = Complex::one();
            m[(lo, lo)] = -Complex::<T>::one();
        }
    }
    m
}

/// `R = |upper><+| + |lower><-|` with `|±> = (|lower> ± |upper>)/√2`,
/// identity on any third level.
pub fn dressed_rotation_local<T: Real>(levels: usize, transition: Transition) -> CMatrix<T> {
    let (lo, up) = (transition.lower().index(), transition.upper().index());
    let h = T::FRAC_1_SQRT_2();
    let mut m = CMatrix::identity(levels);
    m[(up, lo)] = re(h);
    m[(up, up)] = re(h);
    m[(lo, lo)] = re(h);
    m[(lo, up)] = re(-h);
    m
}

/// Annihilation operator `a_p` on the full basis.
pub fn build_ladder<T: Real>(basis: &Arc<BasisDescriptor>, mode: usize) -> Result<OperatorMatrix<T>> {
    let n_max = basis.factor_dim(Factor::Mode(mode))? - 1;
    OperatorMatrix::from_local(basis.clone(), &[Factor::Mode(mode)], &ladder_local(n_max))
}

/// `σ+`, `σ-` or `σz` of one transition of ion `ion` on the full basis.
pub fn build_pauli<T: Real>(
    basis: &Arc<BasisDescriptor>,
    ion: usize,
    which: PauliOp,
    transition: Transition,
) -> Result<OperatorMatrix<T>> {
    basis.check_transition(ion, transition)?;
    let levels = basis.factor_dim(Factor::Ion(ion))?;
    OperatorMatrix::from_local(
        basis.clone(),
        &[Factor::Ion(ion)],
        &pauli_local(levels, which, transition),
    )
}

/// Dressed-basis rotation `R` on one ion (on its `g <-> e` pair).
pub fn dressed_rotation<T: Real>(basis: &Arc<BasisDescriptor>, ion: usize) -> Result<OperatorMatrix<T>> {
    dressed_rotation_on(basis, ion, Transition::Ge)
}

/// Dressed-basis rotation `R` on an arbitrary transition of one ion.
pub fn dressed_rotation_on<T: Real>(
    basis: &Arc<BasisDescriptor>,
    ion: usize,
    transition: Transition,
) -> Result<OperatorMatrix<T>> {
    basis.check_transition(ion, transition)?;
    let levels = basis.factor_dim(Factor::Ion(ion))?;
    OperatorMatrix::from_local(
        basis.clone(),
        &[Factor::Ion(ion)],
        &dressed_rotation_local(levels, transition),
    )
}

/// `R σ± R†` on a two-level ion, computed by explicit conjugation.
///
/// Equals `½(σz ± (σ+ - σ-))`; `σz` conjugates to `-(σ+ + σ-)`.
pub fn conjugate_pauli_by_r<T: Real>(which: PauliOp) -> CMatrix<T> {
    let r = dressed_rotation_local::<T>(2, Transition::Ge);
    let s = pauli_local::<T>(2, which, Transition::Ge);
    let out = r.matmul(&s).matmul(&r.adjoint());
    debug_assert!(
        which == PauliOp::Z
            || (&out - &pauli_conjugation_closed_form::<T>(which)).max_abs() < T::lit(1e-5)
    );
    out
}

/// Closed form `½(σz ± (σ+ - σ-))` for `R σ± R†` (two-level ion).
pub fn pauli_conjugation_closed_form<T: Real>(which: PauliOp) -> CMatrix<T> {
    let sz = pauli_local::<T>(2, PauliOp::Z, Transition::Ge);
    let sp = pauli_local::<T>(2, PauliOp::Plus, Transition::Ge);
    let sm = pauli_local::<T>(2, PauliOp::Minus, Transition::Ge);
    let diff = &sp - &sm;
    let half = re(T::lit(0.5));
    match which {
        PauliOp::Plus => (&sz + &diff).scale(half),
        PauliOp::Minus => (&sz - &diff).scale(half),
        PauliOp::Z => (&sp + &sm).scale(re(-T::one())),
    }
}
