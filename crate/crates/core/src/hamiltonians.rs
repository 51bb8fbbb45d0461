//! Hamiltonians of laser-driven trapped ions coupled to shared motional modes.
//!
//! Units: `ħ = 1`, frequencies relative to the lowest mode frequency `ν₁ = 1`.
//! The laser drives one transition of one addressed ion; every generator acts
//! on that transition's two levels tensored with all modes and as the identity
//! elsewhere (see [`Support`]).

use std::sync::Arc;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, HermitianEigen};
use crate::scalar::{cis, im, re, Cplx, Real};
use crate::statespace::{ladder_local, BasisDescriptor, Factor, Frame, OperatorMatrix, Transition};

/// Default Fock cutoff per mode.
pub const DEFAULT_FOCK_CUTOFF: usize = 12;

/// Default relative tolerance on the `Ω' = ν_q/2` resonance.
pub const DEFAULT_RESONANCE_TOL: f64 = 1e-9;

/// Extra Fock levels used when checking that a cutoff represents the
/// displacement operator faithfully.
const TRUNCATION_PROBE_EXTRA: usize = 10;
const TRUNCATION_DEFECT_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WaveType {
    #[default]
    Travelling,
    /// Ion sits at a node of a standing wave: `exp(iX)` becomes `sin(X)`.
    StandingNode,
}

impl WaveType {
    pub fn name(self) -> &'static str {
        match self {
            WaveType::Travelling => "travelling",
            WaveType::StandingNode => "standing_node",
        }
    }
}

/// Which approximation level a Hamiltonian represents.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HamiltonianKind {
    FullExact,
    LambDickeOrder1,
    DressedPicture,
    EffectiveJc,
    CzRedSideband,
}

impl HamiltonianKind {
    /// Picture the Hamiltonian is written in.
    pub fn frame(self) -> Frame {
        match self {
            HamiltonianKind::FullExact
            | HamiltonianKind::LambDickeOrder1
            | HamiltonianKind::CzRedSideband => Frame::Interaction,
            HamiltonianKind::DressedPicture | HamiltonianKind::EffectiveJc => Frame::DressedRotating,
        }
    }
}

/// Physical parameters of an ion chain driven by one laser.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig<T> {
    /// Internal levels per ion (2, or 3 with the auxiliary `e'`).
    pub ion_levels: Vec<usize>,
    /// Mode frequencies in units of `ν₁`, strictly increasing.
    pub mode_freqs: Vec<T>,
    /// `η[j][p]`, coupling of ion `j` to mode `p` (sign follows the mode vector).
    pub lamb_dicke: Vec<Vec<T>>,
    /// Bare Rabi frequency `Ω`.
    pub rabi: T,
    /// Laser detuning `δ = ω_laser − ω_atom`; the red sideband of mode `q` is `−ν_q`.
    pub detuning: T,
    /// Laser phase `φ`: the coupling is `Ω e^{−iφ} σ+ (…) + h.c.`.
    #[serde(default)]
    pub laser_phase: T,
    pub wave_type: WaveType,
    pub addressed_ion: usize,
    pub transition: Transition,
    /// Highest Fock number kept per mode.
    pub fock_cutoffs: Vec<usize>,
}

impl<T: Real> SystemConfig<T> {
    /// One two-level ion and one mode of frequency `nu`, carrier-resonant.
    pub fn single_ion(eta: T, nu: T, rabi: T) -> Self {
        Self {
            ion_levels: vec![2],
            mode_freqs: vec![nu],
            lamb_dicke: vec![vec![eta]],
            rabi,
            detuning: T::zero(),
            laser_phase: T::zero(),
            wave_type: WaveType::Travelling,
            addressed_ion: 0,
            transition: Transition::Ge,
            fock_cutoffs: vec![DEFAULT_FOCK_CUTOFF],
        }
    }

    /// Two ions sharing the centre-of-mass mode (`ν₁ = 1`) and the stretch
    /// mode (`ν₂ = √3`). `eta` is the centre-of-mass coupling of each ion;
    /// the stretch coupling is `±eta·3^{-1/4}` (sign `+` on ion 0).
    /// Ion 1 carries the auxiliary level.
    pub fn two_ion_trap(eta: T, rabi: T) -> Self {
        let nu2 = T::lit(3.0).sqrt();
        let stretch = eta / nu2.sqrt();
        Self {
            ion_levels: vec![2, 3],
            mode_freqs: vec![T::one(), nu2],
            lamb_dicke: vec![vec![eta, stretch], vec![eta, -stretch]],
            rabi,
            detuning: T::zero(),
            laser_phase: T::zero(),
            wave_type: WaveType::Travelling,
            addressed_ion: 0,
            transition: Transition::Ge,
            fock_cutoffs: vec![DEFAULT_FOCK_CUTOFF; 2],
        }
    }

    #[inline]
    pub fn n_ions(&self) -> usize {
        self.ion_levels.len()
    }

    #[inline]
    pub fn n_modes(&self) -> usize {
        self.mode_freqs.len()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.ion_levels.is_empty() {
            return bad("at least one ion is required".into());
        }
        if self.mode_freqs.is_empty() {
            return bad("at least one mode is required".into());
        }
        if self.lamb_dicke.len() != self.n_ions()
            || self.lamb_dicke.iter().any(|r| r.len() != self.n_modes())
        {
            return bad(format!(
                "Lamb-Dicke matrix must be {} x {}",
                self.n_ions(),
                self.n_modes()
            ));
        }
        if self.fock_cutoffs.len() != self.n_modes() {
            return bad(format!("need {} Fock cutoffs", self.n_modes()));
        }
        if self.fock_cutoffs.contains(&0) {
            return bad("Fock cutoff must be at least 1".into());
        }
        if self.mode_freqs.iter().any(|v| !v.is_finite() || *v <= T::zero()) {
            return bad("mode frequencies must be positive and finite".into());
        }
        for (p, w) in self.mode_freqs.windows(2).enumerate() {
            if w[1] <= w[0] {
                return Err(if w[1] == w[0] {
                    Error::DegenerateModes { p, q: p + 1 }
                } else {
                    Error::InvalidConfig("mode frequencies must be strictly increasing".into())
                });
            }
        }
        if self.lamb_dicke.iter().flatten().any(|e| !e.is_finite()) {
            return Err(Error::NonFinite("Lamb-Dicke parameter"));
        }
        if !self.rabi.is_finite() || self.rabi <= T::zero() {
            return bad("Rabi frequency must be positive and finite".into());
        }
        if !self.detuning.is_finite() {
            return Err(Error::NonFinite("detuning"));
        }
        if !self.laser_phase.is_finite() {
            return Err(Error::NonFinite("laser phase"));
        }
        if self.addressed_ion >= self.n_ions() {
            return Err(Error::IndexOutOfRange {
                what: "ion",
                index: self.addressed_ion,
                len: self.n_ions(),
            });
        }
        self.basis()?.check_transition(self.addressed_ion, self.transition)
    }

    pub fn basis(&self) -> Result<Arc<BasisDescriptor>> {
        Ok(Arc::new(BasisDescriptor::new(
            self.ion_levels.clone(),
            self.fock_cutoffs.clone(),
        )?))
    }

    /// `η_jp` of the addressed ion.
    pub fn eta(&self, p: usize) -> T {
        self.lamb_dicke[self.addressed_ion][p]
    }

    /// `exp(−½ Σ_p η_jp²)` for the addressed ion.
    pub fn debye_waller(&self) -> T {
        let s: T = self.lamb_dicke[self.addressed_ion].iter().map(|e| *e * *e).sum();
        (-T::lit(0.5) * s).exp()
    }

    /// Dressed Rabi frequency `Ω' = Ω·exp(−½ Σ_p η_jp²)`.
    pub fn dressed_rabi(&self) -> T {
        self.rabi * self.debye_waller()
    }

    /// Sets `Ω` so that the dressed Rabi frequency equals `omega_prime`.
    pub fn with_dressed_rabi(mut self, omega_prime: T) -> Self {
        self.rabi = omega_prime / self.debye_waller();
        self
    }

    pub fn with_detuning(mut self, delta: T) -> Self {
        self.detuning = delta;
        self
    }

    pub fn with_laser_phase(mut self, phi: T) -> Self {
        self.laser_phase = phi;
        self
    }

    pub fn with_wave(mut self, wave: WaveType) -> Self {
        self.wave_type = wave;
        self
    }

    pub fn with_cutoffs(mut self, n_max: usize) -> Self {
        self.fock_cutoffs = vec![n_max; self.n_modes()];
        self
    }

    /// Addresses ion `ion` on `transition`.
    pub fn addressing(mut self, ion: usize, transition: Transition) -> Self {
        self.addressed_ion = ion;
        self.transition = transition;
        self
    }

    /// Drops every ion except the addressed one. The laser acts as the
    /// identity on the others, so this changes no dynamics of the kept ion.
    pub fn addressed_only(&self) -> Self {
        let j = self.addressed_ion;
        Self {
            ion_levels: vec![self.ion_levels[j]],
            lamb_dicke: vec![self.lamb_dicke[j].clone()],
            addressed_ion: 0,
            ..self.clone()
        }
    }
}

/// Where a local generator acts in the full basis: each group lists the
/// full-basis indices of one copy of (two driven levels ⊗ all modes).
#[derive(Clone, Debug)]
pub struct Support {
    basis: Arc<BasisDescriptor>,
    groups: Vec<Vec<usize>>,
    local_dim: usize,
}

impl Support {
    /// Driven transition of `ion` tensored with every mode.
    pub fn drive(basis: Arc<BasisDescriptor>, ion: usize, transition: Transition) -> Result<Self> {
        basis.check_transition(ion, transition)?;
        let mut factors = vec![Factor::Ion(ion)];
        factors.extend((0..basis.n_modes()).map(Factor::Mode));
        let mut allowed = vec![vec![transition.lower().index(), transition.upper().index()]];
        allowed.extend((0..basis.n_modes()).map(|_| Vec::new()));
        let groups = basis.groups(&factors, &allowed)?;
        let local_dim = groups[0].len();
        Ok(Self {
            basis,
            groups,
            local_dim,
        })
    }

    /// The whole basis as one group.
    pub fn whole(basis: Arc<BasisDescriptor>) -> Self {
        let groups = vec![(0..basis.dim()).collect()];
        let local_dim = basis.dim();
        Self {
            basis,
            groups,
            local_dim,
        }
    }

    #[inline]
    pub fn basis(&self) -> &Arc<BasisDescriptor> {
        &self.basis
    }

    #[inline]
    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    #[inline]
    pub fn local_dim(&self) -> usize {
        self.local_dim
    }

    /// Full-basis operator equal to `local` on every group and zero elsewhere.
    pub fn embed<T: Real>(&self, local: &CMatrix<T>) -> Result<OperatorMatrix<T>> {
        if local.dim() != self.local_dim {
            return Err(Error::DimensionMismatch {
                expected: self.local_dim,
                got: local.dim(),
            });
        }
        let mut m = CMatrix::zeros(self.basis.dim());
        for g in &self.groups {
            for (a, &ia) in g.iter().enumerate() {
                for (b, &ib) in g.iter().enumerate() {
                    m[(ia, ib)] = local[(a, b)];
                }
            }
        }
        OperatorMatrix::new(self.basis.clone(), m)
    }
}

/// A Hamiltonian `H(t)` given block-locally on a [`Support`].
pub trait Generator<T: Real>: Send + Sync {
    fn support(&self) -> &Support;

    /// `H(t)` on one group of the support.
    fn local(&self, t: T) -> Result<CMatrix<T>>;

    fn frame(&self) -> Frame;

    /// Fastest explicit time dependence, used for default step sizes.
    fn max_frequency(&self) -> T;

    fn time_independent(&self) -> bool {
        false
    }

    /// `H(t)` on the full basis.
    fn matrix(&self, t: T) -> Result<OperatorMatrix<T>> {
        self.support().embed(&self.local(t)?)
    }
}

/// `H = 0`.
pub struct ZeroGenerator {
    support: Support,
    frame: Frame,
}

impl ZeroGenerator {
    pub fn new(basis: Arc<BasisDescriptor>, frame: Frame) -> Self {
        Self {
            support: Support::whole(basis),
            frame,
        }
    }
}

impl<T: Real> Generator<T> for ZeroGenerator {
    fn support(&self) -> &Support {
        &self.support
    }
    fn local(&self, _t: T) -> Result<CMatrix<T>> {
        Ok(CMatrix::zeros(self.support.local_dim))
    }
    fn frame(&self) -> Frame {
        self.frame
    }
    fn max_frequency(&self) -> T {
        T::zero()
    }
    fn time_independent(&self) -> bool {
        true
    }
}

/// Generator backed by a closure returning the local matrix.
pub struct ClosureGenerator<F> {
    support: Support,
    frame: Frame,
    max_frequency: f64,
    f: F,
}

impl<F> ClosureGenerator<F> {
    pub fn new(support: Support, frame: Frame, max_frequency: f64, f: F) -> Self {
        Self {
            support,
            frame,
            max_frequency,
            f,
        }
    }
}

impl<T: Real, F> Generator<T> for ClosureGenerator<F>
where
    F: Fn(T) -> CMatrix<T> + Send + Sync,
{
    fn support(&self) -> &Support {
        &self.support
    }
    fn local(&self, t: T) -> Result<CMatrix<T>> {
        if !t.is_finite() {
            return Err(Error::NonFinite("time"));
        }
        Ok((self.f)(t))
    }
    fn frame(&self) -> Frame {
        self.frame
    }
    fn max_frequency(&self) -> T {
        T::lit(self.max_frequency)
    }
}

/// Motional Hilbert space: all modes, row-major, last mode fastest.
#[derive(Clone, Debug)]
pub struct ModeSpace<T> {
    dims: Vec<usize>,
    dim: usize,
    /// `Σ_p ν_p n_p` of each mode-space basis state.
    energies: Vec<T>,
    /// Fock number of each mode for each mode-space basis state.
    fock: Vec<Vec<usize>>,
}

impl<T: Real> ModeSpace<T> {
    pub fn new(cutoffs: &[usize], freqs: &[T]) -> Self {
        let dims: Vec<usize> = cutoffs.iter().map(|n| n + 1).collect();
        let dim = dims.iter().product();
        let mut fock = Vec::with_capacity(dim);
        let mut energies = Vec::with_capacity(dim);
        for m in 0..dim {
            let mut rest = m;
            let mut digits = vec![0; dims.len()];
            for k in (0..dims.len()).rev() {
                digits[k] = rest % dims[k];
                rest /= dims[k];
            }
            energies.push(
                digits
                    .iter()
                    .zip(freqs)
                    .map(|(&n, &nu)| nu * T::from_usize_lossy(n))
                    .sum(),
            );
            fock.push(digits);
        }
        Self {
            dims,
            dim,
            energies,
            fock,
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn energies(&self) -> &[T] {
        &self.energies
    }

    pub fn fock(&self, m: usize) -> &[usize] {
        &self.fock[m]
    }

    /// Embeds a single-mode operator on mode `p`.
    pub fn on_mode(&self, p: usize, op: &CMatrix<T>) -> CMatrix<T> {
        let mut out = CMatrix::identity(1);
        for (k, &d) in self.dims.iter().enumerate() {
            out = out.kron(&if k == p { op.clone() } else { CMatrix::identity(d) });
        }
        out
    }

    /// Annihilation operator of mode `p`.
    pub fn ladder(&self, p: usize) -> CMatrix<T> {
        self.on_mode(p, &ladder_local(self.dims[p] - 1))
    }

    /// `D₀ = f(Σ_p η_p (a_p + a_p†))` with `f = exp(i·)` (travelling wave)
    /// or `sin` (standing wave at a node).
    pub fn coupling_factor(&self, etas: &[T], wave: WaveType) -> Result<CMatrix<T>> {
        let exp_sign = |sign: T| -> Result<CMatrix<T>> {
            let mut out = CMatrix::identity(1);
            for (p, &d) in self.dims.iter().enumerate() {
                out = out.kron(&displacement_local(d - 1, sign * etas[p])?);
            }
            Ok(out)
        };
        let plus = exp_sign(T::one())?;
        match wave {
            WaveType::Travelling => Ok(plus),
            WaveType::StandingNode => {
                let minus = exp_sign(-T::one())?;
                // sin X = (e^{iX} − e^{−iX}) / 2i
                Ok((&plus - &minus).scale(Complex::new(T::zero(), -T::lit(0.5))))
            }
        }
    }

    /// `D(t) = e^{iEt} D₀ e^{−iEt}` with `E` the mode energies.
    pub fn rotate(&self, d0: &CMatrix<T>, t: T) -> CMatrix<T> {
        let ph: Vec<Cplx<T>> = self.energies.iter().map(|&e| cis(e * t)).collect();
        CMatrix::from_fn(self.dim, |r, c| ph[r] * d0[(r, c)] * ph[c].conj())
    }
}

/// `exp(iη(a + a†))` on a Fock space truncated at `n_max`.
pub fn displacement_local<T: Real>(n_max: usize, eta: T) -> Result<CMatrix<T>> {
    let a = ladder_local::<T>(n_max);
    let x = &a + &a.adjoint();
    Ok(HermitianEigen::new(&x)?.map(|l| cis(eta * l)))
}

/// Largest deviation between `exp(iη(a+a†))` built at `n_max` and the same
/// operator built in a larger space, over columns `0..=n_max/2`.
pub fn truncation_defect<T: Real>(n_max: usize, eta: T) -> Result<T> {
    let small = displacement_local(n_max, eta)?;
    let big = displacement_local(n_max + TRUNCATION_PROBE_EXTRA, eta)?;
    let mut worst = T::zero();
    for r in 0..=n_max {
        for c in 0..=n_max / 2 {
            worst = worst.max((small[(r, c)] - big[(r, c)]).norm());
        }
    }
    Ok(worst)
}

fn check_truncation<T: Real>(config: &SystemConfig<T>) -> Result<()> {
    for (p, &n_max) in config.fock_cutoffs.iter().enumerate() {
        let eta = config.eta(p).abs();
        let defect = truncation_defect(n_max, eta)?;
        // single precision cannot resolve the nominal tolerance
        let tol = TRUNCATION_DEFECT_TOL.max(64.0 * T::epsilon().to_f64_lossy());
        if defect.to_f64_lossy() > tol {
            return Err(Error::TruncationTooSmall {
                mode: p,
                n_max,
                defect: defect.to_f64_lossy(),
            });
        }
    }
    Ok(())
}

fn max_mode_frequency<T: Real>(config: &SystemConfig<T>) -> T {
    config.mode_freqs.iter().copied().fold(T::zero(), T::max)
}

/// Places `block` as the `upper <- lower` coupling (scaled by `coef`) and its
/// adjoint into a two-level ⊗ modes matrix. Slot 0 is the lower level.
fn two_level_coupling<T: Real>(block: &CMatrix<T>, coef: Cplx<T>) -> CMatrix<T> {
    let m = block.dim();
    let mut h = CMatrix::zeros(2 * m);
    for r in 0..m {
        for c in 0..m {
            let v = coef * block[(r, c)];
            h[(m + r, c)] = v;
            h[(c, m + r)] = v.conj();
        }
    }
    h
}

/// Exact interaction-picture Hamiltonian
/// `Ω[e^{−iφ} σ+ D(t) e^{−iδt} + h.c.]`, `D(t) = f(Σ_p η_jp(a_p e^{−iν_p t} + h.c.))`.
#[derive(Clone, Debug)]
pub struct FullHamiltonian<T> {
    support: Support,
    modes: ModeSpace<T>,
    d0: CMatrix<T>,
    /// `Ω e^{−iφ}`
    coupling: Cplx<T>,
    detuning: T,
    max_freq: T,
    kind: HamiltonianKind,
}

impl<T: Real> FullHamiltonian<T> {
    pub fn new(config: &SystemConfig<T>) -> Result<Self> {
        config.validate()?;
        if config.wave_type == WaveType::Travelling {
            check_truncation(config)?;
        }
        let basis = config.basis()?;
        let support = Support::drive(basis, config.addressed_ion, config.transition)?;
        let modes = ModeSpace::new(&config.fock_cutoffs, &config.mode_freqs);
        let etas: Vec<T> = (0..config.n_modes()).map(|p| config.eta(p)).collect();
        let d0 = modes.coupling_factor(&etas, config.wave_type)?;
        Ok(Self {
            support,
            modes,
            d0,
            coupling: cis(-config.laser_phase) * config.rabi,
            detuning: config.detuning,
            max_freq: max_mode_frequency(config),
            kind: HamiltonianKind::FullExact,
        })
    }

    pub fn modes(&self) -> &ModeSpace<T> {
        &self.modes
    }

    /// `D₀` in the mode space.
    pub fn coupling_factor(&self) -> &CMatrix<T> {
        &self.d0
    }

    pub fn kind(&self) -> HamiltonianKind {
        self.kind
    }

    /// Diagonal of the free Hamiltonian `H₀ = Σ_p ν_p n_p − δ|upper><upper|`
    /// in local ordering. The interaction picture is taken with respect to it.
    pub fn free_diagonal(&self) -> Vec<T> {
        let e = self.modes.energies();
        e.iter()
            .copied()
            .chain(e.iter().map(|&x| x - self.detuning))
            .collect()
    }

    /// Time-independent `H₀ + Ω(σ+ D₀ + h.c.)`. Its propagator relates to the
    /// interaction-picture one by `U_I(t) = e^{iH₀t} e^{−i H_rot t}`.
    pub fn rotating_frame(&self) -> CMatrix<T> {
        let mut h = two_level_coupling(&self.d0, self.coupling);
        for (k, &d) in self.free_diagonal().iter().enumerate() {
            h[(k, k)] += re(d);
        }
        h
    }
}

impl<T: Real> Generator<T> for FullHamiltonian<T> {
    fn support(&self) -> &Support {
        &self.support
    }

    fn local(&self, t: T) -> Result<CMatrix<T>> {
        if !t.is_finite() {
            return Err(Error::NonFinite("time"));
        }
        let d = self.modes.rotate(&self.d0, t);
        Ok(two_level_coupling(&d, cis(-self.detuning * t) * self.coupling))
    }

    fn frame(&self) -> Frame {
        Frame::Interaction
    }

    fn max_frequency(&self) -> T {
        self.max_freq
    }
}

/// Exact Hamiltonian on the full basis at time `t`.
pub fn full_hamiltonian<T: Real>(config: &SystemConfig<T>, t: T) -> Result<OperatorMatrix<T>> {
    FullHamiltonian::new(config)?.matrix(t)
}

/// First-order Lamb-Dicke expansion
/// `Ω'[σ+ e^{−iδt}(1 + iΣ_p η_jp(a_p e^{−iν_p t} + h.c.)) + h.c.]`.
#[derive(Clone, Debug)]
pub struct LambDickeHamiltonian<T> {
    support: Support,
    modes: ModeSpace<T>,
    x0: CMatrix<T>,
    omega_prime: T,
    detuning: T,
    max_freq: T,
}

impl<T: Real> LambDickeHamiltonian<T> {
    pub fn new(config: &SystemConfig<T>) -> Result<Self> {
        config.validate()?;
        if config.wave_type != WaveType::Travelling {
            return Err(Error::Unsupported(
                "Lamb-Dicke expansion is implemented for travelling waves only".into(),
            ));
        }
        let support = Support::drive(config.basis()?, config.addressed_ion, config.transition)?;
        let modes = ModeSpace::new(&config.fock_cutoffs, &config.mode_freqs);
        let mut x0 = CMatrix::zeros(modes.dim());
        for p in 0..config.n_modes() {
            let a = modes.ladder(p);
            x0 = &x0 + &(&a + &a.adjoint()).scale(re(config.eta(p)));
        }
        Ok(Self {
            support,
            modes,
            x0,
            omega_prime: config.dressed_rabi(),
            detuning: config.detuning,
            max_freq: max_mode_frequency(config),
        })
    }
}

impl<T: Real> Generator<T> for LambDickeHamiltonian<T> {
    fn support(&self) -> &Support {
        &self.support
    }

    fn local(&self, t: T) -> Result<CMatrix<T>> {
        if !t.is_finite() {
            return Err(Error::NonFinite("time"));
        }
        let x = self.modes.rotate(&self.x0, t);
        let d = &CMatrix::identity(self.modes.dim()) + &x.scale(im(T::one()));
        Ok(two_level_coupling(&d, cis(-self.detuning * t) * self.omega_prime))
    }

    fn frame(&self) -> Frame {
        Frame::Interaction
    }

    fn max_frequency(&self) -> T {
        self.max_freq
    }
}

pub fn lamb_dicke_hamiltonian<T: Real>(config: &SystemConfig<T>, t: T) -> Result<OperatorMatrix<T>> {
    LambDickeHamiltonian::new(config)?.matrix(t)
}

/// Lamb-Dicke Hamiltonian in the dressed, lightshift-rotating frame
/// `iΩ' Σ_p η_jp [e^{i(2Ω'−ν_p)t} σ+ a_p + e^{i(2Ω'+ν_p)t} σ+ a_p† − h.c.]`.
///
/// Level labels: local `e` stands for `|+>` and `g` for `|->`.
#[derive(Clone, Debug)]
pub struct DressedPictureHamiltonian<T> {
    support: Support,
    lowering: Vec<CMatrix<T>>,
    etas: Vec<T>,
    freqs: Vec<T>,
    omega_prime: T,
}

impl<T: Real> DressedPictureHamiltonian<T> {
    pub fn new(config: &SystemConfig<T>) -> Result<Self> {
        config.validate()?;
        if config.detuning != T::zero() {
            return Err(Error::DetuningNotZero(config.detuning.to_f64_lossy()));
        }
        let support = Support::drive(config.basis()?, config.addressed_ion, config.transition)?;
        let modes = ModeSpace::new(&config.fock_cutoffs, &config.mode_freqs);
        Ok(Self {
            support,
            lowering: (0..config.n_modes()).map(|p| modes.ladder(p)).collect(),
            etas: (0..config.n_modes()).map(|p| config.eta(p)).collect(),
            freqs: config.mode_freqs.clone(),
            omega_prime: config.dressed_rabi(),
        })
    }

    /// Phase of the co-rotating `σ+ a_p` term at time `t`.
    pub fn rotating_phase(&self, p: usize, t: T) -> Cplx<T> {
        cis((T::lit(2.0) * self.omega_prime - self.freqs[p]) * t)
    }

    /// Phase of the counter-rotating `σ+ a_p†` term at time `t`.
    pub fn counter_rotating_phase(&self, p: usize, t: T) -> Cplx<T> {
        cis((T::lit(2.0) * self.omega_prime + self.freqs[p]) * t)
    }
}

impl<T: Real> Generator<T> for DressedPictureHamiltonian<T> {
    fn support(&self) -> &Support {
        &self.support
    }

    fn local(&self, t: T) -> Result<CMatrix<T>> {
        if !t.is_finite() {
            return Err(Error::NonFinite("time"));
        }
        let m = self.lowering[0].dim();
        let mut block = CMatrix::zeros(m);
        for (p, a) in self.lowering.iter().enumerate() {
            let co = self.rotating_phase(p, t);
            let counter = self.counter_rotating_phase(p, t);
            let term = &a.scale(co) + &a.adjoint().scale(counter);
            block = &block + &term.scale(re(self.etas[p]));
        }
        Ok(two_level_coupling(&block, im(self.omega_prime)))
    }

    fn frame(&self) -> Frame {
        Frame::DressedRotating
    }

    fn max_frequency(&self) -> T {
        T::lit(2.0) * self.omega_prime + self.freqs.iter().copied().fold(T::zero(), T::max)
    }
}

pub fn dressed_picture_hamiltonian<T: Real>(config: &SystemConfig<T>, t: T) -> Result<OperatorMatrix<T>> {
    DressedPictureHamiltonian::new(config)?.matrix(t)
}

/// Time-independent `i g (σ+ a_q − σ− a_q†)` (or the real-coefficient
/// variant `g(σ+ a_q + σ− a_q†)`).
#[derive(Clone, Debug)]
pub struct JcHamiltonian<T> {
    support: Support,
    local: CMatrix<T>,
    frame: Frame,
    coupling: T,
}

impl<T: Real> JcHamiltonian<T> {
    fn build(config: &SystemConfig<T>, q: usize, coef: Cplx<T>, frame: Frame) -> Result<Self> {
        let support = Support::drive(config.basis()?, config.addressed_ion, config.transition)?;
        let modes = ModeSpace::new(&config.fock_cutoffs, &config.mode_freqs);
        let local = two_level_coupling(&modes.ladder(q), coef);
        Ok(Self {
            support,
            local,
            frame,
            coupling: coef.norm(),
        })
    }

    /// Magnitude `g` of the `|upper,n> <-> |lower,n+1>` coupling per `√(n+1)`.
    pub fn coupling(&self) -> T {
        self.coupling
    }
}

impl<T: Real> Generator<T> for JcHamiltonian<T> {
    fn support(&self) -> &Support {
        &self.support
    }
    fn local(&self, _t: T) -> Result<CMatrix<T>> {
        Ok(self.local.clone())
    }
    fn frame(&self) -> Frame {
        self.frame
    }
    fn max_frequency(&self) -> T {
        T::zero()
    }
    fn time_independent(&self) -> bool {
        true
    }
}

fn check_mode<T: Real>(config: &SystemConfig<T>, q: usize) -> Result<()> {
    if q >= config.n_modes() {
        return Err(Error::IndexOutOfRange {
            what: "mode",
            index: q,
            len: config.n_modes(),
        });
    }
    Ok(())
}

/// Checks `Ω' = ν_q/2` to relative tolerance `tol`.
pub fn check_resonance<T: Real>(config: &SystemConfig<T>, q: usize, tol: f64) -> Result<()> {
    check_mode(config, q)?;
    let required = config.mode_freqs[q] / T::lit(2.0);
    let actual = config.dressed_rabi();
    if ((actual - required) / required).abs().to_f64_lossy() > tol {
        return Err(Error::ResonanceViolated {
            mode: q,
            actual: actual.to_f64_lossy(),
            required: required.to_f64_lossy(),
            required_rabi: (required / config.debye_waller()).to_f64_lossy(),
        });
    }
    Ok(())
}

/// Effective lightshift-resonant coupling `(iν_q η_jq / 2)(σ+ a_q − σ− a_q†)`
/// in the dressed rotating frame. Requires `Ω' = ν_q/2`.
pub fn effective_jc<T: Real>(config: &SystemConfig<T>, q: usize, tol: f64) -> Result<JcHamiltonian<T>> {
    config.validate()?;
    check_resonance(config, q, tol)?;
    let g = config.mode_freqs[q] * config.eta(q) / T::lit(2.0);
    JcHamiltonian::build(config, q, im(g), Frame::DressedRotating)
}

pub fn effective_jc_hamiltonian<T: Real>(config: &SystemConfig<T>, q: usize) -> Result<OperatorMatrix<T>> {
    effective_jc(config, q, DEFAULT_RESONANCE_TOL)?.matrix(T::zero())
}

fn check_red_sideband<T: Real>(config: &SystemConfig<T>, q: usize) -> Result<()> {
    check_mode(config, q)?;
    let required = -config.mode_freqs[q];
    let scale = config.mode_freqs[q];
    if ((config.detuning - required) / scale).abs().to_f64_lossy() > DEFAULT_RESONANCE_TOL {
        return Err(Error::NotRedSideband {
            required: required.to_f64_lossy(),
            actual: config.detuning.to_f64_lossy(),
        });
    }
    Ok(())
}

/// Exact Hamiltonian driven on the red sideband of mode `q` (`δ = −ν_q`).
pub fn cz_red_sideband<T: Real>(config: &SystemConfig<T>, q: usize) -> Result<FullHamiltonian<T>> {
    config.validate()?;
    check_red_sideband(config, q)?;
    let mut h = FullHamiltonian::new(config)?;
    h.kind = HamiltonianKind::CzRedSideband;
    Ok(h)
}

pub fn cz_red_sideband_hamiltonian<T: Real>(
    config: &SystemConfig<T>,
    q: usize,
    t: T,
) -> Result<OperatorMatrix<T>> {
    cz_red_sideband(config, q)?.matrix(t)
}

/// Resonant-sideband limit of [`cz_red_sideband`]: `iΩ'η_jq(σ+a_q − σ−a_q†)`
/// for a travelling wave, `Ω'η_jq(σ+a_q + σ−a_q†)` at a standing-wave node.
/// Only the detuning of the supplied config is ignored.
pub fn cz_red_sideband_rwa<T: Real>(config: &SystemConfig<T>, q: usize) -> Result<JcHamiltonian<T>> {
    check_mode(config, q)?;
    let g = config.dressed_rabi() * config.eta(q);
    let coef = match config.wave_type {
        WaveType::Travelling => im(g),
        WaveType::StandingNode => re(g),
    };
    JcHamiltonian::build(config, q, coef, Frame::Interaction)
}

/// Population leaked off-resonantly into mode `p` while driving mode `q`:
/// `(η_jq ν_q / (2|ν_p − ν_q|))²`.
pub fn leakage_estimate<T: Real>(config: &SystemConfig<T>, q: usize, p: usize) -> Result<T> {
    check_mode(config, q)?;
    check_mode(config, p)?;
    let gap = (config.mode_freqs[p] - config.mode_freqs[q]).abs();
    if gap == T::zero() {
        return Err(Error::DegenerateModes { p, q });
    }
    let r = config.eta(q) * config.mode_freqs[q] / (T::lit(2.0) * gap);
    Ok(r * r)
}
