//! Average SWAP fidelity, Ω'-sweeps and threshold extraction.
//!
//! A fidelity point is `F = max_t (1/n) Σ_k |<ψ_f^k|U(t)|ψ_i^k>|²` with `t`
//! ranging over the first-cycle window `[0, 1.25 τ_ideal]` and `U` the
//! interaction-picture evolution under the full Hamiltonian.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonians::{leakage_estimate, FullHamiltonian, SystemConfig, WaveType};
use crate::propagator::{evolve_sampled, PropagationSettings, StationaryPropagator, DEFAULT_LEAK_BOUND};
use crate::scalar::{re, Real};
use crate::statespace::{Level, StateVector, Transition};

pub const DEFAULT_LEVEL: f64 = 0.99;
pub const DEFAULT_WINDOW_FACTOR: f64 = 1.25;
pub const DEFAULT_WINDOW_SAMPLES: usize = 400;
pub const DEFAULT_GRID_POINTS: usize = 200;
const BISECTION_STEPS: usize = 16;
const GOLDEN_STEPS: usize = 40;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FidelityScheme {
    CzTravelling,
    CzStanding,
    Lightshift,
}

impl FidelityScheme {
    pub const ALL: [FidelityScheme; 3] = [
        FidelityScheme::CzTravelling,
        FidelityScheme::CzStanding,
        FidelityScheme::Lightshift,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FidelityScheme::CzTravelling => "cz_travelling",
            FidelityScheme::CzStanding => "cz_standing",
            FidelityScheme::Lightshift => "lightshift",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown scheme '{s}'")))
    }

    pub fn wave(self) -> WaveType {
        match self {
            FidelityScheme::CzStanding => WaveType::StandingNode,
            _ => WaveType::Travelling,
        }
    }

    /// Default Ω'/ν₁ grid.
    pub fn default_grid(self) -> Grid {
        match self {
            FidelityScheme::CzTravelling => Grid::Log { lo: 1e-3, hi: 1e-1, n: DEFAULT_GRID_POINTS },
            FidelityScheme::CzStanding => Grid::Log { lo: 1e-2, hi: 3.0, n: DEFAULT_GRID_POINTS },
            FidelityScheme::Lightshift => Grid::Linear { lo: 0.48, hi: 0.52, n: DEFAULT_GRID_POINTS },
        }
    }
}

/// How `U(t)` is obtained.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Evaluation {
    /// Exact diagonalisation in the rotating frame, then golden-section
    /// refinement of the best window sample.
    #[default]
    Exact,
    /// Step-by-step integration sampled on the window grid, no refinement.
    Integrated(PropagationSettings),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FidelitySpec {
    pub scheme: FidelityScheme,
    /// Bus mode.
    pub mode: usize,
    pub window_factor: f64,
    pub window_samples: usize,
    pub evaluation: Evaluation,
    /// Abort a point when the top Fock level may carry more amplitude.
    pub leak_bound: f64,
}

impl FidelitySpec {
    pub fn new(scheme: FidelityScheme) -> Self {
        Self {
            scheme,
            mode: 0,
            window_factor: DEFAULT_WINDOW_FACTOR,
            window_samples: DEFAULT_WINDOW_SAMPLES,
            evaluation: Evaluation::Exact,
            leak_bound: DEFAULT_LEAK_BOUND,
        }
    }

    pub fn with_evaluation(mut self, e: Evaluation) -> Self {
        self.evaluation = e;
        self
    }

    /// `(ion level, bus Fock)` pairs of inputs and their ideal images. The
    /// levels are `±` dressed states for the lightshift scheme.
    pub fn state_set(&self) -> [(Sign, usize, Sign, usize); 2] {
        match self.scheme {
            FidelityScheme::Lightshift => [
                (Sign::Minus, 0, Sign::Minus, 0),
                (Sign::Minus, 1, Sign::Plus, 0),
            ],
            _ => [(Sign::G, 0, Sign::G, 0), (Sign::G, 1, Sign::E, 0)],
        }
    }

    /// Ideal transfer time at `omega_prime` (infinite when nothing moves).
    pub fn ideal_time<T: Real>(&self, config: &SystemConfig<T>, omega_prime: f64) -> f64 {
        let eta = config.eta(self.mode).abs().to_f64_lossy();
        let nu = config.mode_freqs[self.mode].to_f64_lossy();
        match self.scheme {
            FidelityScheme::Lightshift => PI / (nu * eta),
            _ => PI / (2.0 * eta * omega_prime),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.window_samples < 2 || !(self.window_factor > 0.0) {
            return Err(Error::EmptyWindow);
        }
        Ok(())
    }
}

/// Internal state of the addressed ion in a fidelity state set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    G,
    E,
    Plus,
    Minus,
}

fn set_state<T: Real>(config: &SystemConfig<T>, s: Sign, n: usize, mode: usize) -> Result<StateVector<T>> {
    let basis = config.basis()?;
    let mut fock = vec![0; config.n_modes()];
    fock[mode] = n;
    let idx = |l: Level| basis.index_of(&[l], &fock);
    let mut amps = vec![re(T::zero()); basis.dim()];
    let h = T::FRAC_1_SQRT_2();
    match s {
        Sign::G => amps[idx(Level::G)?] = re(T::one()),
        Sign::E => amps[idx(Level::E)?] = re(T::one()),
        Sign::Plus | Sign::Minus => {
            amps[idx(Level::G)?] = re(h);
            amps[idx(Level::E)?] = re(if s == Sign::Plus { h } else { -h });
        }
    }
    StateVector::from_amplitudes(basis, amps)
}

/// Config driven for `scheme`: addressed ion only, on `g ↔ e`.
pub fn scheme_config<T: Real>(
    base: &SystemConfig<T>,
    scheme: FidelityScheme,
    mode: usize,
    omega_prime: T,
) -> SystemConfig<T> {
    let detuning = match scheme {
        FidelityScheme::Lightshift => T::zero(),
        _ => -base.mode_freqs[mode],
    };
    base.clone()
        .addressing(base.addressed_ion, Transition::Ge)
        .addressed_only()
        .with_wave(scheme.wave())
        .with_detuning(detuning)
        .with_laser_phase(T::zero())
        .with_dressed_rabi(omega_prime)
}

/// One fidelity evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FidelityPoint {
    pub fidelity: f64,
    pub t_of_max: f64,
}

/// Average SWAP fidelity at dressed Rabi frequency `omega_prime`.
pub fn swap_fidelity<T: Real>(
    spec: &FidelitySpec,
    omega_prime: f64,
    config: &SystemConfig<T>,
) -> Result<FidelityPoint> {
    spec.validate()?;
    if !(omega_prime >= 0.0 && omega_prime.is_finite()) {
        return Err(Error::InvalidInput(format!("Ω' must be non-negative, got {omega_prime}")));
    }
    if spec.mode >= config.n_modes() {
        return Err(Error::IndexOutOfRange {
            what: "mode",
            index: spec.mode,
            len: config.n_modes(),
        });
    }
    // positive placeholder; with Ω' = 0 nothing moves and U = 1
    let cfg = scheme_config(config, spec.scheme, spec.mode, T::lit(omega_prime.max(1.0)));
    let pairs = spec.state_set();
    let mut inputs = Vec::new();
    let mut images = Vec::new();
    for (si, ni, sf, nf) in pairs {
        inputs.push(set_state(&cfg, si, ni, spec.mode)?);
        images.push(set_state(&cfg, sf, nf, spec.mode)?);
    }
    let avg = |states: &[StateVector<T>]| -> f64 {
        let s: f64 = states
            .iter()
            .zip(&images)
            .map(|(a, b)| a.overlap_sq(b).to_f64_lossy())
            .sum();
        s / states.len() as f64
    };
    if omega_prime == 0.0 {
        return Ok(FidelityPoint {
            fidelity: avg(&inputs),
            t_of_max: 0.0,
        });
    }
    let cfg = cfg.with_dressed_rabi(T::lit(omega_prime));
    let h = FullHamiltonian::new(&cfg)?;
    let t_end = spec.window_factor * spec.ideal_time(&cfg, omega_prime);
    let n = spec.window_samples;
    let times: Vec<f64> = (0..n).map(|k| t_end * k as f64 / (n - 1) as f64).collect();

    match spec.evaluation {
        Evaluation::Exact => {
            let prop = StationaryPropagator::from_full(&h)?;
            let prepared = inputs.iter().map(|s| prop.prepare(s)).collect::<Result<Vec<_>>>()?;
            for p in &prepared {
                p.check_leak(spec.leak_bound)?;
            }
            let probes = prepared
                .iter()
                .zip(&images)
                .map(|(p, f)| p.overlap_probe(f))
                .collect::<Result<Vec<_>>>()?;
            let f = |t: f64| -> Result<f64> {
                let s: f64 = probes.iter().map(|p| p.at(T::lit(t)).norm_sqr().to_f64_lossy()).sum();
                Ok(s / probes.len() as f64)
            };
            let mut best = (0.0, f64::NEG_INFINITY);
            for &t in &times {
                let v = f(t)?;
                if v > best.1 {
                    best = (t, v);
                }
            }
            let dt = t_end / (n - 1) as f64;
            let (t, v) = golden_max(&f, (best.0 - dt).max(0.0), (best.0 + dt).min(t_end))?;
            let (t, v) = if v > best.1 { (t, v) } else { best };
            Ok(FidelityPoint {
                fidelity: v.clamp(0.0, 1.0),
                t_of_max: t,
            })
        }
        Evaluation::Integrated(settings) => {
            let ts: Vec<T> = times.iter().map(|&t| T::lit(t)).collect();
            let series = inputs
                .iter()
                .map(|s| evolve_sampled(&h, s, &ts, &settings))
                .collect::<Result<Vec<_>>>()?;
            let mut best = (0.0, f64::NEG_INFINITY);
            for (k, &t) in times.iter().enumerate() {
                let states: Vec<_> = series.iter().map(|s| s[k].clone()).collect();
                let v = avg(&states);
                if v > best.1 {
                    best = (t, v);
                }
            }
            Ok(FidelityPoint {
                fidelity: best.1.clamp(0.0, 1.0),
                t_of_max: best.0,
            })
        }
    }
}

fn golden_max(f: &impl Fn(f64) -> Result<f64>, mut a: f64, mut b: f64) -> Result<(f64, f64)> {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    for _ in 0..GOLDEN_STEPS {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d)?;
        }
    }
    Ok(if fc > fd { (c, fc) } else { (d, fd) })
}

/// Ω'/ν₁ grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Grid {
    Linear { lo: f64, hi: f64, n: usize },
    Log { lo: f64, hi: f64, n: usize },
}

impl Grid {
    pub fn points(&self) -> Result<Vec<f64>> {
        let (lo, hi, n) = match *self {
            Grid::Linear { lo, hi, n } | Grid::Log { lo, hi, n } => (lo, hi, n),
        };
        if n == 0 {
            return Err(Error::InvalidInput("empty grid".into()));
        }
        if !(lo.is_finite() && hi.is_finite() && lo <= hi && lo >= 0.0) {
            return Err(Error::InvalidInput(format!("bad grid range [{lo}, {hi}]")));
        }
        if n == 1 {
            return Ok(vec![lo]);
        }
        let s = |k: usize| k as f64 / (n - 1) as f64;
        Ok(match self {
            Grid::Linear { .. } => (0..n).map(|k| lo + (hi - lo) * s(k)).collect(),
            Grid::Log { .. } => {
                if lo <= 0.0 {
                    return Err(Error::InvalidInput("log grid needs a positive lower end".into()));
                }
                (0..n).map(|k| lo * (hi / lo).powf(s(k))).collect()
            }
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub omega_over_nu: f64,
    pub fidelity: Option<f64>,
    pub t_of_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub scheme: FidelityScheme,
    pub eta: f64,
    pub level: f64,
    pub points: Vec<SweepPoint>,
    /// Largest Ω' with `F ≥ level`, refined by bisection (sideband schemes).
    pub threshold: Option<f64>,
    /// Grid argmax `(Ω', F)`.
    pub peak: Option<(f64, f64)>,
    /// Edges of the `F ≥ level` region around the peak (lightshift scheme).
    pub region: Option<(f64, f64)>,
}

impl SweepResult {
    pub fn failures(&self) -> usize {
        self.points.iter().filter(|p| p.error.is_some()).count()
    }

    pub fn width(&self) -> Option<f64> {
        self.region.map(|(a, b)| b - a)
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::InvalidInput(e.to_string()))
    }
}

/// Evaluates `swap_fidelity` on `grid` (ascending) and extracts the landmarks.
pub fn sweep<T: Real>(
    spec: &FidelitySpec,
    grid: &[f64],
    config: &SystemConfig<T>,
    level: f64,
    parallel: bool,
) -> Result<SweepResult> {
    if grid.is_empty() {
        return Err(Error::InvalidInput("empty grid".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput("grid must be strictly increasing".into()));
    }
    let eval = |&x: &f64| match swap_fidelity(spec, x, config) {
        Ok(p) => SweepPoint {
            omega_over_nu: x,
            fidelity: Some(p.fidelity),
            t_of_max: Some(p.t_of_max),
            error: None,
        },
        Err(e) => SweepPoint {
            omega_over_nu: x,
            fidelity: None,
            t_of_max: None,
            error: Some(e.to_string()),
        },
    };
    let points: Vec<SweepPoint> = if parallel {
        grid.par_iter().map(eval).collect()
    } else {
        grid.iter().map(eval).collect()
    };
    let f = |x: f64| swap_fidelity(spec, x, config).map(|p| p.fidelity);
    let lightshift = spec.scheme == FidelityScheme::Lightshift;
    let threshold = if lightshift { None } else { largest_above(&points, level, &f) };
    let peak = points
        .iter()
        .filter_map(|p| p.fidelity.map(|v| (p.omega_over_nu, v)))
        .fold(None, |acc: Option<(f64, f64)>, x| match acc {
            Some(a) if a.1 >= x.1 => Some(a),
            _ => Some(x),
        });
    let region = match peak {
        Some((x, v)) if lightshift && v >= level => region_around(&points, x, level, &f),
        _ => None,
    };
    Ok(SweepResult {
        scheme: spec.scheme,
        eta: config.eta(spec.mode).abs().to_f64_lossy(),
        level,
        points,
        threshold,
        peak,
        region,
    })
}

/// Bisects `f − level` on `[a, b]`, `f(a) ≥ level > f(b)` or the reverse.
fn bisect(f: &impl Fn(f64) -> Result<f64>, mut a: f64, mut b: f64, level: f64) -> Option<f64> {
    let above_a = f(a).ok()? >= level;
    for _ in 0..BISECTION_STEPS {
        let m = 0.5 * (a + b);
        if (f(m).ok()? >= level) == above_a {
            a = m;
        } else {
            b = m;
        }
    }
    Some(0.5 * (a + b))
}

fn largest_above(points: &[SweepPoint], level: f64, f: &impl Fn(f64) -> Result<f64>) -> Option<f64> {
    let ok: Vec<(f64, f64)> = points
        .iter()
        .filter_map(|p| p.fidelity.map(|v| (p.omega_over_nu, v)))
        .collect();
    let i = ok.iter().rposition(|&(_, v)| v >= level)?;
    let &(xb, _) = ok.get(i + 1)?;
    bisect(f, ok[i].0, xb, level)
}

fn region_around(
    points: &[SweepPoint],
    peak: f64,
    level: f64,
    f: &impl Fn(f64) -> Result<f64>,
) -> Option<(f64, f64)> {
    let ok: Vec<(f64, f64)> = points
        .iter()
        .filter_map(|p| p.fidelity.map(|v| (p.omega_over_nu, v)))
        .collect();
    let k = ok.iter().position(|&(x, _)| x == peak)?;
    let l = (0..k).rev().find(|&j| ok[j].1 < level)?;
    let r = (k + 1..ok.len()).find(|&j| ok[j].1 < level)?;
    Some((bisect(f, ok[l].0, ok[l + 1].0, level)?, bisect(f, ok[r - 1].0, ok[r].0, level)?))
}

/// C-NOT switching rate in units of ν₁: `η ν_q / 2` for the lightshift
/// scheme at resonance, `η Ω'_max` for the sideband schemes.
pub fn switching_rate(scheme: FidelityScheme, eta: f64, nu_q: f64, omega_max: f64) -> f64 {
    match scheme {
        FidelityScheme::Lightshift => eta.abs() * nu_q / 2.0,
        _ => eta.abs() * omega_max,
    }
}

/// Half-width of the lightshift `F ≥ level` region relative to `ν_q/2`.
pub fn intensity_stability_band(result: &SweepResult, nu_q: f64) -> Option<f64> {
    if result.scheme != FidelityScheme::Lightshift {
        return None;
    }
    result.width().map(|w| 0.5 * w / (0.5 * nu_q))
}

/// Off-resonant population in mode `p` predicted while swapping through `q`.
pub fn predicted_deficit<T: Real>(config: &SystemConfig<T>, q: usize, p: usize) -> Result<f64> {
    Ok(leakage_estimate(config, q, p)?.to_f64_lossy())
}
