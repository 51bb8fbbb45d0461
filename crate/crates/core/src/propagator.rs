//! Time evolution under [`Generator`]s, picture changes, and the closed-form
//! Jaynes-Cummings evolution used as a reference.

use std::sync::Arc;

use num_complex::Complex;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonians::{FullHamiltonian, Generator, Support};
use crate::linalg::{vec_norm, CMatrix, HermitianEigen};
use crate::scalar::{cis, re, Cplx, Real};
use crate::statespace::{
    apply_groups, dressed_rotation_local, BasisDescriptor, Factor, Frame, StateVector, Transition,
};

/// Default bound on the amplitude in the top Fock level of any mode.
pub const DEFAULT_LEAK_BOUND: f64 = 1e-6;
/// Default tolerance on `|‖ψ‖ − 1|`.
pub const DEFAULT_NORM_TOL: f64 = 1e-9;
/// Default tolerance of the step-halving comparison.
pub const DEFAULT_CONVERGENCE_TOL: f64 = 1e-8;
/// Steps per period of the fastest mode frequency.
pub const DEFAULT_STEPS_PER_PERIOD: f64 = 200.0;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// `exp(−i H(t + h/2) h)` per step; second order.
    #[default]
    MidpointExponential,
    /// Two exponentials of Gauss-point combinations per step; fourth order.
    CommutatorFree4,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropagationSettings {
    /// Step size; `None` picks `2π / (200 ν_max)` from the generator.
    pub step: Option<f64>,
    pub method: Method,
    pub norm_tol: f64,
    /// Repeat at half the step and require agreement to `convergence_tol`.
    pub convergence_check: bool,
    pub convergence_tol: f64,
    /// Abort when the top-Fock amplitude of any mode exceeds this; `None` disables.
    pub leak_bound: Option<f64>,
}

impl Default for PropagationSettings {
    fn default() -> Self {
        Self {
            step: None,
            method: Method::MidpointExponential,
            norm_tol: DEFAULT_NORM_TOL,
            convergence_check: false,
            convergence_tol: DEFAULT_CONVERGENCE_TOL,
            leak_bound: Some(DEFAULT_LEAK_BOUND),
        }
    }
}

impl PropagationSettings {
    pub fn with_step(mut self, h: f64) -> Self {
        self.step = Some(h);
        self
    }

    pub fn with_method(mut self, m: Method) -> Self {
        self.method = m;
        self
    }

    pub fn with_convergence_check(mut self, on: bool) -> Self {
        self.convergence_check = on;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(h) = self.step {
            if !(h > 0.0 && h.is_finite()) {
                return Err(Error::InvalidConfig(format!("step must be positive, got {h}")));
            }
        }
        if !(self.norm_tol > 0.0) {
            return Err(Error::InvalidConfig("norm tolerance must be positive".into()));
        }
        Ok(())
    }

    fn resolve_step<T: Real>(&self, max_freq: T) -> f64 {
        self.step.unwrap_or_else(|| {
            let nu = max_freq.to_f64_lossy();
            if nu > 0.0 {
                std::f64::consts::TAU / (DEFAULT_STEPS_PER_PERIOD * nu)
            } else {
                f64::INFINITY
            }
        })
    }
}

fn check_frame<T: Real>(state: &StateVector<T>, expected: Frame) -> Result<()> {
    if state.frame() != expected {
        return Err(Error::FrameMismatch {
            state: state.frame().name(),
            expected: expected.name(),
        });
    }
    Ok(())
}

fn check_basis<T: Real>(state: &StateVector<T>, basis: &Arc<BasisDescriptor>) -> Result<()> {
    if **state.basis() != **basis {
        return Err(Error::DimensionMismatch {
            expected: basis.dim(),
            got: state.basis().dim(),
        });
    }
    Ok(())
}

fn check_norm<T: Real>(amps: &[Cplx<T>], tol: f64, time: f64) -> Result<()> {
    let n = vec_norm(amps).to_f64_lossy();
    if !n.is_finite() {
        return Err(Error::NonFinite("state amplitude"));
    }
    if (n - 1.0).abs() > tol {
        return Err(Error::NormDrift { norm: n, tol, time });
    }
    Ok(())
}

fn check_leak<T: Real>(state: &StateVector<T>, bound: Option<f64>, time: f64) -> Result<()> {
    if let Some(bound) = bound {
        let (mode, amp) = state.worst_truncation_leak();
        let amp = amp.to_f64_lossy();
        if amp > bound {
            return Err(Error::TruncationLeak {
                mode,
                amplitude: amp,
                bound,
                time: Some(time),
            });
        }
    }
    Ok(())
}

fn step_propagator<T: Real, G: Generator<T> + ?Sized>(
    gen: &G,
    method: Method,
    t: T,
    h: T,
) -> Result<CMatrix<T>> {
    match method {
        Method::MidpointExponential => {
            let hm = gen.local(t + h / T::lit(2.0))?;
            Ok(HermitianEigen::new(&hm)?.propagator(h))
        }
        Method::CommutatorFree4 => {
            let s3 = T::lit(3.0).sqrt();
            let c1 = T::lit(0.5) - s3 / T::lit(6.0);
            let c2 = T::lit(0.5) + s3 / T::lit(6.0);
            let a1 = (T::lit(3.0) - T::lit(2.0) * s3) / T::lit(12.0);
            let a2 = (T::lit(3.0) + T::lit(2.0) * s3) / T::lit(12.0);
            let h1 = gen.local(t + c1 * h)?;
            let h2 = gen.local(t + c2 * h)?;
            let first = &h1.scale(re(a2)) + &h2.scale(re(a1));
            let second = &h1.scale(re(a1)) + &h2.scale(re(a2));
            let u1 = HermitianEigen::new(&first)?.propagator(h);
            let u2 = HermitianEigen::new(&second)?.propagator(h);
            Ok(u2.matmul(&u1))
        }
    }
}

fn evolve_once<T: Real, G: Generator<T> + ?Sized>(
    gen: &G,
    state: &StateVector<T>,
    t0: T,
    t1: T,
    h: f64,
    settings: &PropagationSettings,
) -> Result<StateVector<T>> {
    let groups = gen.support().groups();
    let mut cur = state.clone();
    let span = (t1 - t0).to_f64_lossy();
    if span == 0.0 {
        return Ok(cur);
    }
    if gen.time_independent() {
        let u = HermitianEigen::new(&gen.local(t0)?)?.propagator(t1 - t0);
        let src = cur.amplitudes().to_vec();
        apply_groups(groups, &u, &src, cur.amplitudes_mut())?;
        check_norm(cur.amplitudes(), settings.norm_tol, t1.to_f64_lossy())?;
        check_leak(&cur, settings.leak_bound, t1.to_f64_lossy())?;
        return Ok(cur);
    }
    let n = (span / h).ceil().max(1.0) as usize;
    let hs = (t1 - t0) / T::from_usize_lossy(n);
    for k in 0..n {
        let t = t0 + hs * T::from_usize_lossy(k);
        let u = step_propagator(gen, settings.method, t, hs)?;
        let src = cur.amplitudes().to_vec();
        apply_groups(groups, &u, &src, cur.amplitudes_mut())?;
        let tn = (t + hs).to_f64_lossy();
        check_norm(cur.amplitudes(), settings.norm_tol, tn)?;
        check_leak(&cur, settings.leak_bound, tn)?;
    }
    Ok(cur)
}

/// Propagates `state` from `t0` to `t1` under `gen`.
pub fn evolve<T: Real, G: Generator<T> + ?Sized>(
    gen: &G,
    state: &StateVector<T>,
    t0: T,
    t1: T,
    settings: &PropagationSettings,
) -> Result<StateVector<T>> {
    settings.validate()?;
    if !(t0.is_finite() && t1.is_finite()) {
        return Err(Error::NonFinite("time"));
    }
    if t1 < t0 {
        return Err(Error::InvalidInput(format!(
            "end time {t1} precedes start time {t0}"
        )));
    }
    check_frame(state, gen.frame())?;
    check_basis(state, gen.support().basis())?;
    check_norm(state.amplitudes(), settings.norm_tol, t0.to_f64_lossy())?;
    let h = settings.resolve_step(gen.max_frequency());
    let out = evolve_once(gen, state, t0, t1, h, settings)?;
    if settings.convergence_check && !gen.time_independent() {
        let fine = evolve_once(gen, state, t0, t1, h / 2.0, settings)?;
        let diff: Vec<Cplx<T>> = out
            .amplitudes()
            .iter()
            .zip(fine.amplitudes())
            .map(|(a, b)| a - b)
            .collect();
        let diff = vec_norm(&diff).to_f64_lossy();
        if diff > settings.convergence_tol {
            return Err(Error::NotConverged {
                diff,
                tol: settings.convergence_tol,
            });
        }
        return Ok(fine);
    }
    Ok(out)
}

/// States at each of the increasing `times` (the first is the start time).
pub fn evolve_sampled<T: Real, G: Generator<T> + ?Sized>(
    gen: &G,
    state: &StateVector<T>,
    times: &[T],
    settings: &PropagationSettings,
) -> Result<Vec<StateVector<T>>> {
    let mut out = Vec::with_capacity(times.len());
    let Some(&first) = times.first() else {
        return Ok(out);
    };
    let mut cur = state.clone();
    let mut t_prev = first;
    for &t in times {
        cur = evolve(gen, &cur, t_prev, t, settings)?;
        out.push(cur.clone());
        t_prev = t;
    }
    Ok(out)
}

/// Exact propagator of a Hamiltonian that is static in a rotating frame:
/// `U_I(t) = e^{i H₀ t} e^{−i H_rot t}` with diagonal `H₀`.
#[derive(Clone, Debug)]
pub struct StationaryPropagator<T> {
    support: Support,
    eigen: HermitianEigen<T>,
    free: Vec<T>,
    frame: Frame,
    /// Rows of the local block lying in the top Fock level of some mode.
    top_rows: Vec<usize>,
}

impl<T: Real> StationaryPropagator<T> {
    pub fn new(support: Support, h_rot: &CMatrix<T>, free: Vec<T>, frame: Frame) -> Result<Self> {
        if h_rot.dim() != support.local_dim() || free.len() != support.local_dim() {
            return Err(Error::DimensionMismatch {
                expected: support.local_dim(),
                got: h_rot.dim(),
            });
        }
        let basis = support.basis().clone();
        let top_rows = support.groups()[0]
            .iter()
            .enumerate()
            .filter(|(_, &i)| {
                (0..basis.n_modes())
                    .any(|p| basis.digit(i, Factor::Mode(p)) == basis.mode_cutoffs()[p])
            })
            .map(|(k, _)| k)
            .collect();
        Ok(Self {
            support,
            eigen: HermitianEigen::new(h_rot)?,
            free,
            frame,
            top_rows,
        })
    }

    /// Exact interaction-picture propagator of the full Hamiltonian.
    pub fn from_full(h: &FullHamiltonian<T>) -> Result<Self> {
        Self::new(
            h.support().clone(),
            &h.rotating_frame(),
            h.free_diagonal(),
            Frame::Interaction,
        )
    }

    /// Exact propagator of a time-independent generator.
    pub fn from_static<G: Generator<T> + ?Sized>(gen: &G) -> Result<Self> {
        if !gen.time_independent() {
            return Err(Error::Unsupported("generator depends on time".into()));
        }
        let n = gen.support().local_dim();
        Self::new(gen.support().clone(), &gen.local(T::zero())?, vec![T::zero(); n], gen.frame())
    }

    pub fn support(&self) -> &Support {
        &self.support
    }

    pub fn eigenvalues(&self) -> &[T] {
        self.eigen.values()
    }

    /// Expands `state` in the eigenbasis, once, for evaluation at many times.
    pub fn prepare(&self, state: &StateVector<T>) -> Result<PreparedState<'_, T>> {
        check_frame(state, self.frame)?;
        check_basis(state, self.support.basis())?;
        let coeffs = self
            .support
            .groups()
            .iter()
            .map(|g| {
                let v: Vec<Cplx<T>> = g.iter().map(|&i| state.amplitudes()[i]).collect();
                self.eigen.project(&v)
            })
            .collect();
        Ok(PreparedState {
            prop: self,
            start: state.clone(),
            coeffs,
        })
    }

    /// `U_I(t)|state>`.
    pub fn evolve(&self, state: &StateVector<T>, t: T) -> Result<StateVector<T>> {
        self.prepare(state)?.at(t)
    }
}

/// A state expanded in the eigenbasis of a [`StationaryPropagator`].
#[derive(Clone, Debug)]
pub struct PreparedState<'a, T> {
    prop: &'a StationaryPropagator<T>,
    start: StateVector<T>,
    coeffs: Vec<Vec<Cplx<T>>>,
}

impl<T: Real> PreparedState<'_, T> {
    pub fn at(&self, t: T) -> Result<StateVector<T>> {
        if !t.is_finite() {
            return Err(Error::NonFinite("time"));
        }
        let vals = self.prop.eigen.values();
        let mut out = self.start.clone();
        for (g, c) in self.prop.support.groups().iter().zip(&self.coeffs) {
            let rotated: Vec<Cplx<T>> = c
                .iter()
                .zip(vals)
                .map(|(x, &l)| *x * cis(-l * t))
                .collect();
            let v = self.prop.eigen.reconstruct(&rotated);
            for ((&i, x), &e) in g.iter().zip(v).zip(&self.prop.free) {
                out.amplitudes_mut()[i] = x * cis(e * t);
            }
        }
        Ok(out)
    }

    /// Eigenvalues carrying weight above `threshold` in the expansion.
    pub fn active_eigenvalues(&self, threshold: T) -> Vec<T> {
        let vals = self.prop.eigen.values();
        (0..vals.len())
            .filter(|&m| self.coeffs.iter().any(|c| c[m].norm_sqr() > threshold))
            .map(|m| vals[m])
            .collect()
    }

    /// Precomputes `t ↦ <target|U_I(t)|start>`, cheap to evaluate when
    /// `target` has few nonzero amplitudes.
    pub fn overlap_probe(&self, target: &StateVector<T>) -> Result<OverlapProbe<T>> {
        check_basis(target, self.prop.support.basis())?;
        let vals = self.prop.eigen.values().to_vec();
        let mut fixed = Complex::zero();
        let mut terms = Vec::new();
        for (i, f) in target.amplitudes().iter().enumerate() {
            if f.is_zero() {
                continue;
            }
            let hit = self
                .prop
                .support
                .groups()
                .iter()
                .enumerate()
                .find_map(|(g, idx)| idx.iter().position(|&x| x == i).map(|k| (g, k)));
            match hit {
                Some((g, k)) => {
                    let row = self.prop.eigen.row(k);
                    let w = row
                        .iter()
                        .zip(&self.coeffs[g])
                        .map(|(v, c)| f.conj() * v * c)
                        .collect();
                    terms.push((self.prop.free[k], w));
                }
                None => fixed += f.conj() * self.start.amplitudes()[i],
            }
        }
        Ok(OverlapProbe { vals, fixed, terms })
    }

    /// Upper bound, valid at every time, on the norm of the component in the
    /// top Fock level of any mode: `|ψ_j(t)| ≤ Σ_m |V_jm| |c_m|`.
    pub fn leak_bound(&self) -> T {
        let mut total = T::zero();
        for c in &self.coeffs {
            for &j in &self.prop.top_rows {
                let row = self.prop.eigen.row(j);
                let b: T = row.iter().zip(c).map(|(v, x)| v.norm() * x.norm()).sum();
                total += b * b;
            }
        }
        total.sqrt()
    }

    /// Like [`Self::leak_bound`] but as an error when above `bound`.
    pub fn check_leak(&self, bound: f64) -> Result<()> {
        let amp = self.leak_bound().to_f64_lossy();
        if amp > bound {
            let basis = self.prop.support.basis();
            let mode = self
                .prop
                .top_rows
                .first()
                .map(|&k| self.prop.support.groups()[0][k])
                .and_then(|i| {
                    (0..basis.n_modes())
                        .find(|&p| basis.digit(i, Factor::Mode(p)) == basis.mode_cutoffs()[p])
                })
                .unwrap_or(0);
            return Err(Error::TruncationLeak {
                mode,
                amplitude: amp,
                bound,
                time: None,
            });
        }
        Ok(())
    }
}

/// See [`PreparedState::overlap_probe`].
#[derive(Clone, Debug)]
pub struct OverlapProbe<T> {
    vals: Vec<T>,
    fixed: Cplx<T>,
    /// `(free energy, conj(f_i) V_km c_m)` per nonzero target entry.
    terms: Vec<(T, Vec<Cplx<T>>)>,
}

impl<T: Real> OverlapProbe<T> {
    pub fn at(&self, t: T) -> Cplx<T> {
        let phases: Vec<Cplx<T>> = self.vals.iter().map(|&l| cis(-l * t)).collect();
        let mut acc = self.fixed;
        for (e, w) in &self.terms {
            let s: Cplx<T> = w.iter().zip(&phases).map(|(a, b)| a * b).sum();
            acc += s * cis(*e * t);
        }
        acc
    }
}

/// Picture change on one ion's `{g, e}` pair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum FrameTransform {
    /// `R`: bare → dressed labels.
    Dressed { ion: usize },
    /// `exp(iΩ' t σz)`: dressed → rotating with the lightshift.
    Rotating { ion: usize, omega_prime: f64 },
    /// `V(t) = exp(iΩ' t σz) R`.
    Composite { ion: usize, omega_prime: f64 },
}

impl FrameTransform {
    fn ion(&self) -> usize {
        match *self {
            FrameTransform::Dressed { ion }
            | FrameTransform::Rotating { ion, .. }
            | FrameTransform::Composite { ion, .. } => ion,
        }
    }

    fn frames(&self) -> (Frame, Frame) {
        match self {
            FrameTransform::Dressed { .. } => (Frame::Interaction, Frame::Dressed),
            FrameTransform::Rotating { .. } => (Frame::Dressed, Frame::DressedRotating),
            FrameTransform::Composite { .. } => (Frame::Interaction, Frame::DressedRotating),
        }
    }

    /// The unitary on the ion's levels at time `t`.
    pub fn local_matrix<T: Real>(&self, levels: usize, t: T) -> CMatrix<T> {
        let rot = |w: f64| {
            let mut m = CMatrix::<T>::identity(levels);
            let ph = T::lit(w) * t;
            m[(1, 1)] = cis(ph);
            m[(0, 0)] = cis(-ph);
            m
        };
        let r = || dressed_rotation_local::<T>(levels, Transition::Ge);
        match *self {
            FrameTransform::Dressed { .. } => r(),
            FrameTransform::Rotating { omega_prime, .. } => rot(omega_prime),
            FrameTransform::Composite { omega_prime, .. } => rot(omega_prime).matmul(&r()),
        }
    }

    fn apply<T: Real>(&self, state: &StateVector<T>, t: T, inverse: bool) -> Result<StateVector<T>> {
        let ion = self.ion();
        let levels = state.basis().factor_dim(Factor::Ion(ion))?;
        let mut m = self.local_matrix(levels, t);
        if inverse {
            m = m.adjoint();
        }
        state.apply_local(&[Factor::Ion(ion)], &m)
    }
}

/// Applies `transform` at time `t`, moving the state into the target frame.
pub fn to_frame<T: Real>(state: &StateVector<T>, transform: &FrameTransform, t: T) -> Result<StateVector<T>> {
    let (from, to) = transform.frames();
    check_frame(state, from)?;
    Ok(transform.apply(state, t, false)?.with_frame(to))
}

/// Inverse of [`to_frame`].
pub fn from_frame<T: Real>(state: &StateVector<T>, transform: &FrameTransform, t: T) -> Result<StateVector<T>> {
    let (from, to) = transform.frames();
    check_frame(state, to)?;
    Ok(transform.apply(state, t, true)?.with_frame(from))
}

/// Dressed internal state `|±> = (|g> ± |e>)/√2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Dressed {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

/// One term `amplitude · |dressed>|fock>` of a closed-form state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OracleTerm<T> {
    pub dressed: Dressed,
    pub fock: usize,
    pub amplitude: Cplx<T>,
}

/// Closed-form resonant evolution (`Ω' = ν_q/2`) of the four dressed product
/// states `|±>|0>`, `|±>|1>` in the bare interaction picture.
pub fn analytic_jc_oracle<T: Real>(
    eta: T,
    nu_q: T,
    t: T,
    initial: Dressed,
    fock: usize,
) -> Result<Vec<OracleTerm<T>>> {
    let half = nu_q * t / T::lit(2.0);
    let theta = nu_q * eta * t / T::lit(2.0);
    let term = |dressed, fock, amplitude| OracleTerm {
        dressed,
        fock,
        amplitude,
    };
    use Dressed::{Minus, Plus};
    Ok(match (initial, fock) {
        (Minus, 0) => vec![term(Minus, 0, cis(half))],
        (Plus, 0) => vec![
            term(Plus, 0, cis(-half) * theta.cos()),
            term(Minus, 1, -cis(half) * theta.sin()),
        ],
        (Minus, 1) => vec![
            term(Minus, 1, cis(half) * theta.cos()),
            term(Plus, 0, cis(-half) * theta.sin()),
        ],
        (Plus, 1) => {
            let th2 = theta * T::SQRT_2();
            vec![
                term(Plus, 1, cis(-half) * th2.cos()),
                term(Minus, 2, -cis(half) * th2.sin()),
            ]
        }
        _ => {
            return Err(Error::InvalidInput(format!(
                "closed form covers |±>|0> and |±>|1> only, got Fock {fock}"
            )))
        }
    })
}

/// Amplitude vector of `|dressed>|n>` on a one-ion, one-mode basis.
pub fn dressed_state<T: Real>(
    basis: &Arc<BasisDescriptor>,
    dressed: Dressed,
    n: usize,
) -> Result<StateVector<T>> {
    if basis.n_ions() != 1 || basis.n_modes() != 1 {
        return Err(Error::InvalidInput("expected one ion and one mode".into()));
    }
    let mut amps = vec![Complex::zero(); basis.dim()];
    let h = T::FRAC_1_SQRT_2();
    let g = basis.index_of(&[crate::statespace::Level::G], &[n])?;
    let e = basis.index_of(&[crate::statespace::Level::E], &[n])?;
    amps[g] = re(h);
    amps[e] = re(match dressed {
        Dressed::Plus => h,
        Dressed::Minus => -h,
    });
    StateVector::from_amplitudes(basis.clone(), amps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonians::{
        effective_jc, DressedPictureHamiltonian, LambDickeHamiltonian, SystemConfig, WaveType, ZeroGenerator,
        DEFAULT_RESONANCE_TOL,
    };
    use crate::statespace::Level;
    use std::f64::consts::PI;

    fn resonant(eta: f64, n_max: usize) -> SystemConfig<f64> {
        SystemConfig::single_ion(eta, 1.0, 1.0)
            .with_dressed_rabi(0.5)
            .with_cutoffs(n_max)
    }

    fn oracle_state(basis: &Arc<BasisDescriptor>, terms: &[OracleTerm<f64>]) -> StateVector<f64> {
        let mut amps = vec![Complex::zero(); basis.dim()];
        for t in terms {
            let s = dressed_state::<f64>(basis, t.dressed, t.fock).unwrap();
            for (a, b) in amps.iter_mut().zip(s.amplitudes()) {
                *a += t.amplitude * b;
            }
        }
        StateVector::from_amplitudes(basis.clone(), amps).unwrap()
    }

    fn distance(a: &StateVector<f64>, b: &StateVector<f64>) -> f64 {
        let d: Vec<_> = a.amplitudes().iter().zip(b.amplitudes()).map(|(x, y)| x - y).collect();
        vec_norm(&d)
    }

    #[test]
    fn zero_generator_is_identity() {
        let c = resonant(0.1, 3);
        let b = c.basis().unwrap();
        let s = dressed_state::<f64>(&b, Dressed::Plus, 1).unwrap();
        let g = ZeroGenerator::new(b, Frame::Interaction);
        let out = evolve(&g, &s, 0.0, 7.5, &PropagationSettings::default()).unwrap();
        assert_eq!(out, s);
    }

    #[test]
    fn effective_jc_pi_pulse_flips_population() {
        let c = resonant(0.1, 6);
        let b = c.basis().unwrap();
        let jc = effective_jc(&c, 0, DEFAULT_RESONANCE_TOL).unwrap();
        let s = StateVector::product(b.clone(), &[Level::E], &[0])
            .unwrap()
            .with_frame(Frame::DressedRotating);
        let out = evolve(&jc, &s, 0.0, PI / 0.1, &PropagationSettings::default()).unwrap();
        let target = b.index_of(&[Level::G], &[1]).unwrap();
        assert!((out.population(target) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn frame_mismatch_is_rejected() {
        let c = resonant(0.1, 4);
        let jc = effective_jc(&c, 0, DEFAULT_RESONANCE_TOL).unwrap();
        let s = StateVector::product(c.basis().unwrap(), &[Level::E], &[0]).unwrap();
        assert!(matches!(
            evolve(&jc, &s, 0.0, 1.0, &PropagationSettings::default()),
            Err(Error::FrameMismatch { .. })
        ));
    }

    #[test]
    fn oracle_at_zero_time_is_identity() {
        for (d, n) in [(Dressed::Minus, 0), (Dressed::Plus, 0), (Dressed::Minus, 1), (Dressed::Plus, 1)] {
            let terms = analytic_jc_oracle(0.1, 1.0, 0.0, d, n).unwrap();
            let total: f64 = terms.iter().map(|t| t.amplitude.norm_sqr()).sum();
            assert!((total - 1.0).abs() < 1e-15);
            let own = terms.iter().find(|t| t.dressed == d && t.fock == n).unwrap();
            assert!((own.amplitude - re(1.0)).norm() < 1e-15);
        }
        assert!(analytic_jc_oracle(0.1, 1.0, 0.0, Dressed::Plus, 2).is_err());
    }

    #[test]
    fn oracle_matches_dressed_frame_construction() {
        // V(t)† exp(−i H_JC t) V(0) reproduces the closed form exactly
        let c = resonant(0.1, 6);
        let b = c.basis().unwrap();
        let jc = StationaryPropagator::from_static(&effective_jc(&c, 0, DEFAULT_RESONANCE_TOL).unwrap()).unwrap();
        let v = FrameTransform::Composite { ion: 0, omega_prime: 0.5 };
        for (d, n) in [(Dressed::Minus, 0), (Dressed::Plus, 0), (Dressed::Minus, 1), (Dressed::Plus, 1)] {
            for t in [0.0, 3.3, 17.0, 31.4] {
                let s0 = dressed_state::<f64>(&b, d, n).unwrap();
                let s = to_frame(&s0, &v, 0.0).unwrap();
                let s = jc.evolve(&s, t).unwrap();
                let s = from_frame(&s, &v, t).unwrap();
                let expect = oracle_state(&b, &analytic_jc_oracle(0.1, 1.0, t, d, n).unwrap());
                assert!(distance(&s, &expect) < 1e-12, "{d:?}{n} t={t}");
            }
        }
    }

    #[test]
    fn frame_round_trip() {
        let c = SystemConfig::<f64>::two_ion_trap(0.1, 1.0).with_cutoffs(3);
        let b = c.basis().unwrap();
        let amps: Vec<_> = (0..b.dim()).map(|i| Complex::new((i as f64).sin(), (i as f64).cos())).collect();
        let s = StateVector::from_amplitudes(b, amps).unwrap().normalized().unwrap();
        for tr in [
            FrameTransform::Composite { ion: 1, omega_prime: 0.47 },
            FrameTransform::Dressed { ion: 0 },
        ] {
            let there = to_frame(&s, &tr, 2.7).unwrap();
            let back = from_frame(&there, &tr, 2.7).unwrap();
            assert!(distance(&s, &back) < 1e-12);
            assert!(tr.local_matrix::<f64>(3, 2.7).unitarity_defect() < 1e-12);
        }
        let g = StateVector::product(resonant(0.1, 2).basis().unwrap(), &[Level::G], &[0]).unwrap();
        let vg = to_frame(&g, &FrameTransform::Composite { ion: 0, omega_prime: 0.5 }, 0.0).unwrap();
        let minus = dressed_state::<f64>(g.basis(), Dressed::Minus, 0).unwrap();
        let rg = to_frame(&g, &FrameTransform::Dressed { ion: 0 }, 0.0).unwrap();
        assert!(distance(&vg, &rg) < 1e-15);
        // R|−> = |g>, so R|g> = R(|+> + |−>)/√2 = (|e> + |g>)/√2
        let plus = dressed_state::<f64>(g.basis(), Dressed::Plus, 0).unwrap();
        assert!(distance(&vg.with_frame(Frame::Interaction), &plus) < 1e-15);
        assert!(minus.norm() > 0.0);
    }

    #[test]
    fn bare_evolution_matches_dressed_route() {
        // direct integration of the Lamb-Dicke Hamiltonian against
        // V(t)† U_JC(t) V(0) over one π-pulse
        let eta = 0.05;
        let c = resonant(eta, 8);
        let b = c.basis().unwrap();
        let ld = LambDickeHamiltonian::new(&c).unwrap();
        let tau = PI / eta;
        let s0 = dressed_state::<f64>(&b, Dressed::Plus, 0).unwrap();
        let settings = PropagationSettings::default()
            .with_method(Method::CommutatorFree4)
            .with_step(0.005);
        let direct = evolve(&ld, &s0, 0.0, tau, &settings).unwrap();
        let expect = oracle_state(&b, &analytic_jc_oracle(eta, 1.0, tau, Dressed::Plus, 0).unwrap());
        // the counter-rotating terms perturb the state at order η
        let pop_err = (0..b.dim())
            .map(|i| (direct.population(i) - expect.population(i)).abs())
            .fold(0.0, f64::max);
        assert!(pop_err < 1e-2, "{pop_err}");

        // the same comparison routed through the dressed picture is exact
        let dp = DressedPictureHamiltonian::new(&c).unwrap();
        let v = FrameTransform::Composite { ion: 0, omega_prime: 0.5 };
        let via = from_frame(&evolve(&dp, &to_frame(&s0, &v, 0.0).unwrap(), 0.0, tau, &settings).unwrap(), &v, tau).unwrap();
        assert!(distance(&via, &direct) < 1e-6, "{}", distance(&via, &direct));
    }

    #[test]
    fn stationary_matches_integrated_full_hamiltonian() {
        let c = SystemConfig::single_ion(0.1, 1.0, 1.0).with_dressed_rabi(0.5);
        let full = FullHamiltonian::new(&c).unwrap();
        let st = StationaryPropagator::from_full(&full).unwrap();
        let s0 = dressed_state::<f64>(&c.basis().unwrap(), Dressed::Plus, 0).unwrap();
        let settings = PropagationSettings::default().with_method(Method::CommutatorFree4);
        let t = 9.0;
        let a = evolve(&full, &s0, 0.0, t, &settings).unwrap();
        let b = st.evolve(&s0, t).unwrap();
        assert!(distance(&a, &b) < 1e-9, "{}", distance(&a, &b));
        let prepared = st.prepare(&s0).unwrap();
        assert!(prepared.leak_bound() < 1e-6);
        assert!(prepared.leak_bound() >= b.top_fock_amplitude(0));
    }

    #[test]
    fn integrator_orders() {
        let c = SystemConfig::single_ion(0.1, 1.0, 1.0).with_dressed_rabi(0.5);
        let full = FullHamiltonian::new(&c).unwrap();
        let s0 = dressed_state::<f64>(&c.basis().unwrap(), Dressed::Plus, 0).unwrap();
        let exact = StationaryPropagator::from_full(&full).unwrap().evolve(&s0, 3.0).unwrap();
        for (method, order) in [(Method::MidpointExponential, 2.0), (Method::CommutatorFree4, 4.0)] {
            let errs: Vec<f64> = [0.1, 0.05, 0.025]
                .iter()
                .map(|&h| {
                    let s = PropagationSettings::default().with_step(h).with_method(method);
                    distance(&evolve(&full, &s0, 0.0, 3.0, &s).unwrap(), &exact)
                })
                .collect();
            for w in errs.windows(2) {
                let slope = (w[0] / w[1]).log2();
                assert!((slope - order).abs() < 0.3, "{method:?} {errs:?}");
            }
        }
    }

    #[test]
    fn convergence_check_flags_coarse_steps() {
        let c = SystemConfig::single_ion(0.1, 1.0, 1.0).with_dressed_rabi(0.5);
        let full = FullHamiltonian::new(&c).unwrap();
        let s0 = dressed_state::<f64>(&c.basis().unwrap(), Dressed::Plus, 0).unwrap();
        let coarse = PropagationSettings::default().with_step(0.5).with_convergence_check(true);
        assert!(matches!(evolve(&full, &s0, 0.0, 2.0, &coarse), Err(Error::NotConverged { .. })));
        let fine = PropagationSettings::default()
            .with_method(Method::CommutatorFree4)
            .with_convergence_check(true);
        assert!(evolve(&full, &s0, 0.0, 2.0, &fine).is_ok());
    }

    #[test]
    fn leak_bound_aborts_run() {
        let c = SystemConfig::single_ion(0.1, 1.0, 1.0).with_dressed_rabi(0.5).with_cutoffs(2);
        let full = FullHamiltonian::new(&c);
        // a cutoff of 2 is rejected outright at this coupling
        assert!(full.is_err());
        let jc = effective_jc(&c, 0, DEFAULT_RESONANCE_TOL).unwrap();
        let s = StateVector::product(c.basis().unwrap(), &[Level::E], &[1])
            .unwrap()
            .with_frame(Frame::DressedRotating);
        assert!(matches!(
            evolve(&jc, &s, 0.0, 10.0, &PropagationSettings::default()),
            Err(Error::TruncationLeak { .. })
        ));
    }

    #[test]
    fn sampled_matches_single_runs() {
        let c = resonant(0.1, 6);
        let ld = LambDickeHamiltonian::new(&c).unwrap();
        let s0 = dressed_state::<f64>(&c.basis().unwrap(), Dressed::Minus, 0).unwrap();
        let set = PropagationSettings::default().with_step(0.01);
        let series = evolve_sampled(&ld, &s0, &[0.0, 1.0, 2.0], &set).unwrap();
        let direct = evolve(&ld, &s0, 0.0, 2.0, &set).unwrap();
        assert_eq!(series.len(), 3);
        assert!(distance(&series[2], &direct) < 1e-12);
    }

    #[test]
    fn overlap_probe_matches_full_evolution() {
        let c = SystemConfig::two_ion_trap(0.1, 1.0).with_dressed_rabi(0.3).with_cutoffs(5).with_wave(WaveType::StandingNode);
        let h = FullHamiltonian::new(&c).unwrap();
        let prop = StationaryPropagator::from_full(&h).unwrap();
        let b = c.basis().unwrap();
        let start = StateVector::product(b.clone(), &[Level::E, Level::EPrime], &[1, 0]).unwrap();
        let mut target = StateVector::product(b.clone(), &[Level::G, Level::EPrime], &[2, 1]).unwrap();
        target.amplitudes_mut()[b.index_of(&[Level::E, Level::EPrime], &[1, 0]).unwrap()] = re(0.5);
        let target = target.normalized().unwrap();
        let prepared = prop.prepare(&start).unwrap();
        let probe = prepared.overlap_probe(&target).unwrap();
        for t in [0.0, 1.7, 23.0] {
            let direct = target.inner(&prepared.at(t).unwrap());
            assert!((probe.at(t) - direct).norm() < 1e-12);
        }
    }
}
