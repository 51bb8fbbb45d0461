//! Pulse schedules for two-ion C-NOT gates and their execution.
//!
//! Between pulses states live in the bare interaction picture. Each pulse
//! measures time from its own start, so laser phases are referenced to the
//! beginning of the pulse.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonians::{
    effective_jc, cz_red_sideband_rwa, FullHamiltonian, Generator, SystemConfig, WaveType,
    DEFAULT_RESONANCE_TOL,
};
use crate::linalg::{CMatrix, HermitianEigen};
use crate::propagator::{evolve, FrameTransform, PropagationSettings, StationaryPropagator};
use crate::scalar::{cis, re, Cplx, Real};
use crate::statespace::{apply_groups, Factor, Frame, Level, StateVector, Transition};

/// Default Rabi frequency of simulated single-ion carrier rotations.
pub const DEFAULT_ONE_QUBIT_RABI: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Lightshift,
    CiracZoller,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Lightshift => "lightshift",
            Scheme::CiracZoller => "cirac_zoller",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PulseKind {
    /// Ion-mode exchange at the lightshift resonance `Ω' = ν_q/2`, carrier-resonant.
    TwoQubitLb,
    /// Red-sideband drive `δ = −ν_q`.
    TwoQubitCzSideband,
    /// Carrier rotation `R(θ, φ)`, optionally followed by level phases.
    OneQubitRotation,
}

/// One laser pulse.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pulse {
    pub kind: PulseKind,
    pub ion: usize,
    pub transition: Transition,
    /// Bus mode of two-qubit pulses.
    pub mode: usize,
    /// Interaction time. For rotations it is the carrier time at the
    /// schedule's one-qubit Rabi frequency.
    pub duration: f64,
    /// Dressed Rabi frequency `Ω'` of the drive.
    pub dressed_rabi: f64,
    /// Rotation angle `θ` of `R(θ, φ) = exp(−iθ/2 (e^{−iφ}σ+ + e^{iφ}σ−))`.
    pub theta: f64,
    /// Rotation axis `φ`.
    pub phase: f64,
    /// Phases `e^{iα_l}` applied to levels `g, e, e'` after the rotation.
    /// These are frame updates and are always applied exactly.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level_phases: Option<[f64; 3]>,
    /// Apply as an exact unitary even in realistic runs.
    pub idealized: bool,
    pub label: String,
}

impl Pulse {
    pub fn is_two_qubit(&self) -> bool {
        self.kind != PulseKind::OneQubitRotation
    }

    fn validate(&self) -> Result<()> {
        let finite = [self.duration, self.dressed_rabi, self.theta, self.phase]
            .iter()
            .all(|x| x.is_finite());
        if !finite {
            return Err(Error::NonFinite("pulse parameter"));
        }
        if self.is_two_qubit() && !(self.duration > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "pulse '{}' needs a positive duration",
                self.label
            )));
        }
        if self.duration < 0.0 {
            return Err(Error::InvalidConfig("negative pulse duration".into()));
        }
        Ok(())
    }
}

/// Ordered pulses realising a gate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseSchedule {
    pub scheme: Scheme,
    pub wave_type: WaveType,
    pub control: usize,
    pub target: usize,
    pub pulses: Vec<Pulse>,
}

impl PulseSchedule {
    pub fn len(&self) -> usize {
        self.pulses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pulses.is_empty()
    }

    pub fn two_qubit_count(&self) -> usize {
        self.pulses.iter().filter(|p| p.is_two_qubit()).count()
    }

    /// The schedule truncated to its first `n` pulses.
    pub fn prefix(&self, n: usize) -> Self {
        Self {
            pulses: self.pulses[..n.min(self.pulses.len())].to_vec(),
            ..self.clone()
        }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::InvalidInput(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let sched: Self = serde_json::from_str(s).map_err(|e| Error::InvalidInput(e.to_string()))?;
        for p in &sched.pulses {
            p.validate()?;
        }
        Ok(sched)
    }
}

/// Options of the schedule builders.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduleOptions {
    /// Simulate one-qubit rotations under the carrier Hamiltonian in realistic runs.
    pub simulate_one_qubit: bool,
    pub one_qubit_rabi: f64,
}

impl Default for ScheduleOptions {
    fn default() -> Self {
        Self {
            simulate_one_qubit: false,
            one_qubit_rabi: DEFAULT_ONE_QUBIT_RABI,
        }
    }
}

fn rotation(
    ion: usize,
    transition: Transition,
    theta: f64,
    phase: f64,
    level_phases: Option<[f64; 3]>,
    opts: &ScheduleOptions,
    label: &str,
) -> Pulse {
    // R(−θ, φ) = R(θ, φ + π); keep θ in [0, 4π)
    let (theta, phase) = if theta < 0.0 { (-theta, phase + PI) } else { (theta, phase) };
    let theta = theta.rem_euclid(4.0 * PI);
    let phase = phase.rem_euclid(2.0 * PI);
    Pulse {
        kind: PulseKind::OneQubitRotation,
        ion,
        transition,
        mode: 0,
        duration: theta / (2.0 * opts.one_qubit_rabi),
        dressed_rabi: opts.one_qubit_rabi,
        theta,
        phase,
        level_phases,
        idealized: !opts.simulate_one_qubit,
        label: label.into(),
    }
}

fn require_gate_config<T: Real>(config: &SystemConfig<T>, q: usize) -> Result<()> {
    if config.n_ions() < 2 {
        return Err(Error::InvalidConfig("gate schedules need two ions".into()));
    }
    if q >= config.n_modes() {
        return Err(Error::IndexOutOfRange {
            what: "mode",
            index: q,
            len: config.n_modes(),
        });
    }
    config.basis()?.check_transition(1, Transition::GePrime)
}

fn abs_eta<T: Real>(config: &SystemConfig<T>, ion: usize, q: usize) -> Result<f64> {
    let eta = config.lamb_dicke[ion][q].abs().to_f64_lossy();
    if eta == 0.0 {
        return Err(Error::InvalidConfig(format!(
            "ion {ion} does not couple to mode {q}"
        )));
    }
    Ok(eta)
}

/// Six-pulse lightshift C-NOT (control ion 1, target ion 0) over bus mode `q`.
pub fn lb_cnot_schedule<T: Real>(
    config: &SystemConfig<T>,
    q: usize,
    opts: &ScheduleOptions,
) -> Result<PulseSchedule> {
    require_gate_config(config, q)?;
    let nu = config.mode_freqs[q].to_f64_lossy();
    let (eta1, eta2) = (abs_eta(config, 0, q)?, abs_eta(config, 1, q)?);
    let tau1 = PI / (nu * eta1);
    let tau2 = 2.0 * PI / (nu * eta2);
    // phases picked up at the lightshift resonance: Ω'τ
    let phi1 = 0.5 * nu * tau1;
    let phi3 = 0.5 * nu * tau2;
    let swap = |ion, transition, duration, label: &str| Pulse {
        kind: PulseKind::TwoQubitLb,
        ion,
        transition,
        mode: q,
        duration,
        dressed_rabi: nu / 2.0,
        theta: 0.0,
        phase: 0.0,
        level_phases: None,
        idealized: false,
        label: label.into(),
    };
    let pulses = vec![
        swap(0, Transition::Ge, tau1, "map ion 0 (dressed basis) onto mode"),
        rotation(1, Transition::GePrime, PI / 2.0, PI / 2.0, None, opts, "g -> (g - e')/sqrt2 on ion 1"),
        swap(1, Transition::GePrime, tau2, "conditional 2pi on ion 1 auxiliary transition"),
        rotation(
            1,
            Transition::GePrime,
            PI / 2.0,
            3.0 * PI / 2.0,
            Some([-phi3, PI, -phi3]),
            opts,
            "undo auxiliary rotation and its phase",
        ),
        swap(0, Transition::Ge, tau1, "map mode back onto ion 0"),
        // exp(iφ₁σx) = R(−2φ₁, 0)
        rotation(0, Transition::Ge, -2.0 * phi1, 0.0, None, opts, "remove dressed phases on ion 0"),
    ];
    Ok(PulseSchedule {
        scheme: Scheme::Lightshift,
        wave_type: WaveType::Travelling,
        control: 1,
        target: 0,
        pulses,
    })
}

/// Five-pulse Cirac-Zoller C-NOT (control ion 0, target ion 1) over bus mode
/// `q`, driven at dressed Rabi frequency `omega_prime`.
pub fn cz_cnot_schedule<T: Real>(
    config: &SystemConfig<T>,
    q: usize,
    wave: WaveType,
    omega_prime: f64,
    opts: &ScheduleOptions,
) -> Result<PulseSchedule> {
    require_gate_config(config, q)?;
    if !(omega_prime > 0.0 && omega_prime.is_finite()) {
        return Err(Error::InvalidConfig("sideband Rabi frequency must be positive".into()));
    }
    let (eta1, eta2) = (abs_eta(config, 0, q)?, abs_eta(config, 1, q)?);
    // sideband coupling η_jq Ω': a π pulse lasts π / (2 η Ω')
    let tau_pi = PI / (2.0 * eta1 * omega_prime);
    let tau_2pi = PI / (eta2 * omega_prime);
    let sideband = |ion, transition, duration, label: &str| Pulse {
        kind: PulseKind::TwoQubitCzSideband,
        ion,
        transition,
        mode: q,
        duration,
        dressed_rabi: omega_prime,
        theta: 0.0,
        phase: 0.0,
        level_phases: None,
        idealized: false,
        label: label.into(),
    };
    let pulses = vec![
        rotation(1, Transition::Ge, PI / 2.0, PI / 2.0, None, opts, "pi/2 on target"),
        sideband(0, Transition::Ge, tau_pi, "pi on control red sideband"),
        sideband(1, Transition::GePrime, tau_2pi, "2pi on target auxiliary red sideband"),
        sideband(0, Transition::Ge, tau_pi, "pi on control red sideband"),
        rotation(1, Transition::Ge, PI / 2.0, 3.0 * PI / 2.0, None, opts, "pi/2 back on target"),
    ];
    Ok(PulseSchedule {
        scheme: Scheme::CiracZoller,
        wave_type: wave,
        control: 0,
        target: 1,
        pulses,
    })
}

/// How pulses are applied by [`run_schedule`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PulseModel {
    /// Every pulse as its exact target unitary; two-qubit pulses use the
    /// effective resonant coupling of the bus mode only.
    Idealized,
    /// Two-qubit pulses (and non-idealized rotations) under the exact
    /// Hamiltonian with all modes, propagated exactly.
    Full,
    /// As `Full`, but integrated step by step.
    Integrated(PropagationSettings),
}

/// `R(θ, φ)` on `(g, upper)` of an ion, identity on its other levels.
pub fn rotation_local<T: Real>(levels: usize, transition: Transition, theta: T, phase: T) -> CMatrix<T> {
    let (g, u) = (transition.lower().index(), transition.upper().index());
    let half = theta / T::lit(2.0);
    let (c, s) = (half.cos(), half.sin());
    let mi = Complex::new(T::zero(), -s);
    let mut m = CMatrix::identity(levels);
    m[(g, g)] = re(c);
    m[(u, u)] = re(c);
    m[(u, g)] = mi * cis(-phase);
    m[(g, u)] = mi * cis(phase);
    m
}

fn level_phase_local<T: Real>(levels: usize, phases: &[f64; 3]) -> CMatrix<T> {
    let diag: Vec<Cplx<T>> = phases[..levels].iter().map(|&a| cis(T::lit(a))).collect();
    CMatrix::from_diagonal(&diag)
}

fn pulse_config<T: Real>(base: &SystemConfig<T>, pulse: &Pulse, wave: WaveType) -> SystemConfig<T> {
    let nu = base.mode_freqs[pulse.mode];
    let (detuning, phase, wave) = match pulse.kind {
        PulseKind::TwoQubitLb => (T::zero(), T::zero(), WaveType::Travelling),
        PulseKind::TwoQubitCzSideband => (-nu, T::zero(), wave),
        PulseKind::OneQubitRotation => (T::zero(), T::lit(pulse.phase), WaveType::Travelling),
    };
    base.clone()
        .addressing(pulse.ion, pulse.transition)
        .with_dressed_rabi(T::lit(pulse.dressed_rabi))
        .with_detuning(detuning)
        .with_laser_phase(phase)
        .with_wave(wave)
}

/// `cfg` restricted to mode `q`, keeping the dressed Rabi frequency.
fn bus_only<T: Real>(cfg: &SystemConfig<T>, q: usize) -> SystemConfig<T> {
    let omega_prime = cfg.dressed_rabi();
    let mut c = cfg.clone();
    c.mode_freqs = vec![cfg.mode_freqs[q]];
    c.lamb_dicke = cfg.lamb_dicke.iter().map(|r| vec![r[q]]).collect();
    c.fock_cutoffs = vec![cfg.fock_cutoffs[q]];
    c.with_dressed_rabi(omega_prime)
}

/// Lifts an operator on (2 levels ⊗ mode `q`) to (2 levels ⊗ all modes),
/// identity on the other modes.
fn spread_over_modes<T: Real>(small: &CMatrix<T>, cutoffs: &[usize], q: usize) -> CMatrix<T> {
    let dims: Vec<usize> = cutoffs.iter().map(|n| n + 1).collect();
    let m: usize = dims.iter().product();
    let nq = dims[q];
    let stride_q: usize = dims[q + 1..].iter().product();
    let mut out = CMatrix::zeros(2 * m);
    // offsets of every spectator-mode configuration
    let rest: Vec<usize> = (0..m).filter(|i| (i / stride_q) % nq == 0).collect();
    for &r in &rest {
        for a in 0..2 * nq {
            let ia = (a / nq) * m + r + (a % nq) * stride_q;
            for b in 0..2 * nq {
                let ib = (b / nq) * m + r + (b % nq) * stride_q;
                out[(ia, ib)] = small[(a, b)];
            }
        }
    }
    out
}

/// Idealized two-qubit pulse on one group of the drive support. Both
/// effective couplings touch the bus mode only.
fn ideal_two_qubit_local<T: Real>(cfg: &SystemConfig<T>, pulse: &Pulse) -> Result<(crate::hamiltonians::Support, CMatrix<T>)> {
    let tau = T::lit(pulse.duration);
    let bus = bus_only(cfg, pulse.mode);
    let small = match pulse.kind {
        PulseKind::TwoQubitLb => {
            let jc = effective_jc(&bus, 0, DEFAULT_RESONANCE_TOL)?;
            let u = HermitianEigen::new(&jc.local(T::zero())?)?.propagator(tau);
            let m = jc.support().local_dim() / 2;
            let v = |t: T| {
                FrameTransform::Composite {
                    ion: 0,
                    omega_prime: pulse.dressed_rabi,
                }
                .local_matrix::<T>(2, t)
                .kron(&CMatrix::identity(m))
            };
            v(tau).adjoint().matmul(&u).matmul(&v(T::zero()))
        }
        PulseKind::TwoQubitCzSideband => {
            let rwa = cz_red_sideband_rwa(&bus, 0)?;
            HermitianEigen::new(&rwa.local(T::zero())?)?.propagator(tau)
        }
        PulseKind::OneQubitRotation => return Err(Error::Unsupported("not a two-qubit pulse".into())),
    };
    let support = crate::hamiltonians::Support::drive(cfg.basis()?, cfg.addressed_ion, cfg.transition)?;
    Ok((support, spread_over_modes(&small, &cfg.fock_cutoffs, pulse.mode)))
}

fn apply_support<T: Real>(
    support: &crate::hamiltonians::Support,
    u: &CMatrix<T>,
    state: &StateVector<T>,
) -> Result<StateVector<T>> {
    let mut out = state.clone();
    apply_groups(support.groups(), u, state.amplitudes(), out.amplitudes_mut())?;
    Ok(out)
}

fn simulate<T: Real>(
    cfg: &SystemConfig<T>,
    pulse: &Pulse,
    state: &StateVector<T>,
    model: &PulseModel,
) -> Result<StateVector<T>> {
    let h = FullHamiltonian::new(cfg)?;
    let tau = T::lit(pulse.duration);
    match model {
        PulseModel::Integrated(settings) => evolve(&h, state, T::zero(), tau, settings),
        _ => {
            let prop = StationaryPropagator::from_full(&h)?;
            let prepared = prop.prepare(state)?;
            prepared.check_leak(crate::propagator::DEFAULT_LEAK_BOUND)?;
            prepared.at(tau)
        }
    }
}

/// Applies one pulse.
pub fn apply_pulse<T: Real>(
    config: &SystemConfig<T>,
    pulse: &Pulse,
    wave: WaveType,
    state: &StateVector<T>,
    model: &PulseModel,
) -> Result<StateVector<T>> {
    pulse.validate()?;
    let cfg = pulse_config(config, pulse, wave);
    cfg.validate()?;
    let idealized = matches!(model, PulseModel::Idealized) || pulse.idealized;
    let levels = state.basis().factor_dim(Factor::Ion(pulse.ion))?;
    let out = match (pulse.kind, idealized) {
        (PulseKind::OneQubitRotation, true) => {
            let r = rotation_local(levels, pulse.transition, T::lit(pulse.theta), T::lit(pulse.phase));
            state.apply_local(&[Factor::Ion(pulse.ion)], &r)?
        }
        (PulseKind::OneQubitRotation, false) => simulate(&cfg, pulse, state, model)?,
        (_, _) if matches!(model, PulseModel::Idealized) => {
            let (support, u) = ideal_two_qubit_local(&cfg, pulse)?;
            apply_support(&support, &u, state)?
        }
        _ => simulate(&cfg, pulse, state, model)?,
    };
    match &pulse.level_phases {
        Some(ph) => out.apply_local(&[Factor::Ion(pulse.ion)], &level_phase_local(levels, ph)),
        None => Ok(out),
    }
}

/// Checks that every mode starts in its ground state.
pub fn check_modes_ground<T: Real>(state: &StateVector<T>) -> Result<()> {
    let b = state.basis();
    let excited: T = state
        .amplitudes()
        .iter()
        .enumerate()
        .filter(|(i, _)| (0..b.n_modes()).any(|p| b.digit(*i, Factor::Mode(p)) != 0))
        .map(|(_, a)| a.norm_sqr())
        .sum();
    if excited.to_f64_lossy() > 1e-12 {
        return Err(Error::InvalidInput(format!(
            "motional modes must start in |0>, excited population {:e}",
            excited.to_f64_lossy()
        )));
    }
    Ok(())
}

/// Runs a schedule on `input` (bare interaction picture, modes in `|0>`).
pub fn run_schedule<T: Real>(
    schedule: &PulseSchedule,
    config: &SystemConfig<T>,
    input: &StateVector<T>,
    model: &PulseModel,
) -> Result<StateVector<T>> {
    if input.frame() != Frame::Interaction {
        return Err(Error::FrameMismatch {
            state: input.frame().name(),
            expected: Frame::Interaction.name(),
        });
    }
    check_modes_ground(input)?;
    let mut s = input.clone();
    for p in &schedule.pulses {
        s = apply_pulse(config, p, schedule.wave_type, &s, model)?;
    }
    Ok(s)
}

/// Computational basis label of two ions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Qubits(pub Level, pub Level);

impl fmt::Display for Qubits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = |l: Level| match l {
            Level::G => "g",
            Level::E => "e",
            Level::EPrime => "e'",
        };
        write!(f, "{}{}", c(self.0), c(self.1))
    }
}

pub const COMPUTATIONAL: [Qubits; 4] = [
    Qubits(Level::G, Level::G),
    Qubits(Level::G, Level::E),
    Qubits(Level::E, Level::G),
    Qubits(Level::E, Level::E),
];

/// C-NOT image of a computational state.
pub fn cnot_image(input: Qubits, control: usize, target: usize) -> Qubits {
    let mut l = [input.0, input.1];
    if l[control] == Level::E {
        l[target] = if l[target] == Level::G { Level::E } else { Level::G };
    }
    Qubits(l[0], l[1])
}

fn product_state<T: Real>(config: &SystemConfig<T>, q: Qubits) -> Result<StateVector<T>> {
    let mut levels = vec![Level::G; config.n_ions()];
    levels[0] = q.0;
    levels[1] = q.1;
    StateVector::product(config.basis()?, &levels, &vec![0; config.n_modes()])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruthRow {
    pub input: String,
    pub expected: String,
    /// Most populated computational output with all modes in `|0>`.
    pub output: String,
    /// `|<expected, 0|ψ_out>|²`
    pub fidelity: f64,
    /// Population with every mode in `|0>`.
    pub modes_ground: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruthTable {
    pub scheme: Scheme,
    pub control: usize,
    pub target: usize,
    pub rows: Vec<TruthRow>,
    /// Rows for all pulses but the last, compared with the C-NOT followed by
    /// the inverse of the last (single-ion) pulse.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entangling_rows: Option<Vec<TruthRow>>,
}

impl TruthTable {
    pub fn min_fidelity(&self) -> f64 {
        self.rows.iter().map(|r| r.fidelity).fold(1.0, f64::min)
    }
}

fn truth_rows<T: Real>(
    schedule: &PulseSchedule,
    config: &SystemConfig<T>,
    model: &PulseModel,
    post: Option<&Pulse>,
) -> Result<Vec<TruthRow>> {
    let mut rows = Vec::with_capacity(4);
    for q in COMPUTATIONAL {
        let input = product_state(config, q)?;
        let out = run_schedule(schedule, config, &input, model)?;
        let exp_label = cnot_image(q, schedule.control, schedule.target);
        let mut expected = product_state(config, exp_label)?;
        if let Some(p) = post {
            // undo the omitted final pulse on the ideal image
            let levels = expected.basis().factor_dim(Factor::Ion(p.ion))?;
            let r = rotation_local::<T>(levels, p.transition, T::lit(-p.theta), T::lit(p.phase));
            expected = expected.apply_local(&[Factor::Ion(p.ion)], &r)?;
        }
        let fidelity = out.overlap_sq(&expected).to_f64_lossy();
        let mut best = (q, -1.0);
        let mut ground = 0.0;
        for c in COMPUTATIONAL {
            let p = out.overlap_sq(&product_state(config, c)?).to_f64_lossy();
            ground += p;
            if p > best.1 {
                best = (c, p);
            }
        }
        let modes_ground = if config.n_ions() == 2 && post.is_none() {
            ground
        } else {
            let b = out.basis();
            out.amplitudes()
                .iter()
                .enumerate()
                .filter(|(i, _)| (0..b.n_modes()).all(|p| b.digit(*i, Factor::Mode(p)) == 0))
                .map(|(_, a)| a.norm_sqr().to_f64_lossy())
                .sum()
        };
        rows.push(TruthRow {
            input: q.to_string(),
            expected: exp_label.to_string(),
            output: best.0.to_string(),
            fidelity,
            modes_ground,
        });
    }
    Ok(rows)
}

/// Runs the four computational inputs through `schedule`.
pub fn truth_table<T: Real>(
    schedule: &PulseSchedule,
    config: &SystemConfig<T>,
    model: &PulseModel,
    with_entangling: bool,
) -> Result<TruthTable> {
    let rows = truth_rows(schedule, config, model, None)?;
    let entangling_rows = match (with_entangling, schedule.pulses.last()) {
        (true, Some(last)) if last.kind == PulseKind::OneQubitRotation && last.level_phases.is_none() => {
            let pre = schedule.prefix(schedule.len() - 1);
            Some(truth_rows(&pre, config, model, Some(last))?)
        }
        (true, _) => {
            return Err(Error::Unsupported(
                "last pulse is not a single-ion rotation".into(),
            ))
        }
        _ => None,
    };
    Ok(TruthTable {
        scheme: schedule.scheme,
        control: schedule.control,
        target: schedule.target,
        rows,
        entangling_rows,
    })
}

/// Matrix `M[k][l] = <k, 0|U|l, 0>` on the computational subspace.
pub fn computational_matrix<T: Real>(
    schedule: &PulseSchedule,
    config: &SystemConfig<T>,
    model: &PulseModel,
) -> Result<[[Cplx<T>; 4]; 4]> {
    let mut m = [[Complex::zero(); 4]; 4];
    for (l, ql) in COMPUTATIONAL.iter().enumerate() {
        let out = run_schedule(schedule, config, &product_state(config, *ql)?, model)?;
        for (k, qk) in COMPUTATIONAL.iter().enumerate() {
            m[k][l] = product_state(config, *qk)?.inner(&out);
        }
    }
    Ok(m)
}

/// `min_α max |M − e^{iα} C|` with `C` the C-NOT of the given roles, with
/// `α` taken from the overlap `tr(C† M)`.
pub fn cnot_distance<T: Real>(m: &[[Cplx<T>; 4]; 4], control: usize, target: usize) -> T {
    let mut c = [[Complex::<T>::zero(); 4]; 4];
    for (l, ql) in COMPUTATIONAL.iter().enumerate() {
        let img = cnot_image(*ql, control, target);
        let k = COMPUTATIONAL.iter().position(|x| *x == img).unwrap_or(l);
        c[k][l] = Complex::new(T::one(), T::zero());
    }
    let tr: Cplx<T> = (0..4).flat_map(|k| (0..4).map(move |l| (k, l))).map(|(k, l)| c[k][l].conj() * m[k][l]).sum();
    let phase = if tr.norm() > T::zero() { tr / tr.norm() } else { Complex::new(T::one(), T::zero()) };
    let mut worst = T::zero();
    for k in 0..4 {
        for l in 0..4 {
            worst = worst.max((m[k][l] - phase * c[k][l]).norm());
        }
    }
    worst
}
