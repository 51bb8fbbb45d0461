use std::f64::consts::PI;
use std::fmt;
use std::io;

use serde_json::{json, Value};

use iongate::gates::{cz_cnot_schedule, lb_cnot_schedule, truth_table, PulseModel, ScheduleOptions};
use iongate::metrics::{
    intensity_stability_band, scheme_config, sweep, switching_rate, Evaluation, FidelityScheme, FidelitySpec,
};
use iongate::modespectrum::ModeTable;
use iongate::propagator::{evolve_sampled, StationaryPropagator, DEFAULT_LEAK_BOUND};
use iongate::scalar::Cplx;
use iongate::{Config, Error, Full, Level, Method, PropagationSettings, State};

use crate::config::{ConfigError, Format, Model, OmegaPrime, RunConfig};
use crate::output::{cell, csv_body, csv_header, json_document, open, write_json};

/// Exit status 1 for usage errors, 2 for numerical failures.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Numerical(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Numerical(_) => 2,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) => write!(f, "usage error: {m}"),
            Failure::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Usage(e.0)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Usage(format!("output: {e}"))
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidConfig(_)
            | Error::InvalidInput(_)
            | Error::IndexOutOfRange { .. }
            | Error::MissingLevel { .. }
            | Error::Unsupported(_)
            | Error::DimensionMismatch { .. } => Failure::Usage(e.to_string()),
            _ => Failure::Numerical(e.to_string()),
        }
    }
}

type Outcome = Result<(), Failure>;

/// Ion state of a `simulate` label.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IonLabel {
    G,
    E,
    Plus,
    Minus,
}

impl IonLabel {
    fn name(self) -> &'static str {
        match self {
            IonLabel::G => "g",
            IonLabel::E => "e",
            IonLabel::Plus => "plus",
            IonLabel::Minus => "minus",
        }
    }
}

/// `g0`, `e1`, `+0`, `-1`: ion state then bus-mode Fock number.
pub fn parse_label(s: &str) -> Result<(IonLabel, usize), String> {
    let mut chars = s.chars();
    let ion = match chars.next() {
        Some('g') => IonLabel::G,
        Some('e') => IonLabel::E,
        Some('+') => IonLabel::Plus,
        Some('-') => IonLabel::Minus,
        _ => return Err(format!("label '{s}' must start with g, e, + or -")),
    };
    let n = chars
        .as_str()
        .parse()
        .map_err(|_| format!("label '{s}' needs a Fock number after the ion state"))?;
    Ok((ion, n))
}

fn label_state(config: &Config, ion: IonLabel, n: usize) -> Result<State, Failure> {
    let basis = config.basis()?;
    if n > config.fock_cutoffs[0] {
        return Err(Failure::Usage(format!("Fock number {n} above cutoff {}", config.fock_cutoffs[0])));
    }
    let mut fock = vec![0; config.n_modes()];
    fock[0] = n;
    let g = basis.index_of(&[Level::G], &fock)?;
    let e = basis.index_of(&[Level::E], &fock)?;
    let mut amps = vec![Cplx::new(0.0, 0.0); basis.dim()];
    let h = std::f64::consts::FRAC_1_SQRT_2;
    match ion {
        IonLabel::G => amps[g].re = 1.0,
        IonLabel::E => amps[e].re = 1.0,
        IonLabel::Plus | IonLabel::Minus => {
            amps[g].re = h;
            amps[e].re = if ion == IonLabel::Plus { h } else { -h };
        }
    }
    Ok(State::from_amplitudes(basis, amps)?)
}

fn omega_for(rc: &RunConfig, config: &Config) -> Result<f64, Failure> {
    match (rc.omega_prime, rc.scheme) {
        (OmegaPrime::Value(x), _) => Ok(x),
        (OmegaPrime::Resonant, FidelityScheme::Lightshift) => Ok(config.mode_freqs[0] / 2.0),
        (OmegaPrime::Resonant, s) => Err(Failure::Usage(format!(
            "omega_prime = resonant only applies to the lightshift scheme; give a value for {}",
            s.name()
        ))),
    }
}

fn settings(step: f64) -> PropagationSettings {
    PropagationSettings::default().with_method(Method::CommutatorFree4).with_step(step)
}

/// Bare and dressed populations of the addressed ion and the bus mode over time.
pub fn simulate(rc: &RunConfig) -> Outcome {
    let base = rc.system();
    let omega = omega_for(rc, &base)?;
    if omega <= 0.0 {
        return Err(Failure::Usage("simulate needs omega_prime > 0".into()));
    }
    let mut cfg = scheme_config(&base, rc.scheme, 0, omega);
    if let Some(w) = rc.wave_type {
        cfg = cfg.with_wave(w);
    }
    let (ion, n) = parse_label(&rc.initial).map_err(Failure::Usage)?;
    let psi0 = label_state(&cfg, ion, n)?;

    let eta = cfg.eta(0).abs();
    let nu = cfg.mode_freqs[0];
    let t_final = rc.t_final.unwrap_or(match rc.scheme {
        FidelityScheme::Lightshift => 2.0 * PI / (nu * eta),
        _ => PI / (eta * omega),
    });
    let times: Vec<f64> = (0..rc.samples).map(|k| t_final * k as f64 / (rc.samples - 1) as f64).collect();

    let h = Full::new(&cfg)?;
    let states: Vec<State> = match rc.step {
        None => {
            let prop = StationaryPropagator::from_full(&h)?;
            let p = prop.prepare(&psi0)?;
            p.check_leak(DEFAULT_LEAK_BOUND)?;
            times.iter().map(|&t| p.at(t)).collect::<Result<_, _>>()?
        }
        Some(step) => evolve_sampled(&h, &psi0, &times, &settings(step))?,
    };

    let top = cfg.fock_cutoffs[0].min(2);
    let mut labels = Vec::new();
    for picture in [[IonLabel::G, IonLabel::E], [IonLabel::Plus, IonLabel::Minus]] {
        for k in 0..=top {
            for l in picture {
                labels.push((l, k));
            }
        }
    }
    let targets: Vec<State> = labels
        .iter()
        .map(|&(l, k)| label_state(&cfg, l, k))
        .collect::<Result<_, _>>()?;
    let names: Vec<String> = labels.iter().map(|(l, k)| format!("P_{}{k}", l.name())).collect();
    let series: Vec<Vec<f64>> = states
        .iter()
        .map(|s| targets.iter().map(|t| s.overlap_sq(t)).collect())
        .collect();

    let mut w = open(rc)?;
    let extra = [
        ("omega_prime_resolved", omega.to_string()),
        ("detuning", cfg.detuning.to_string()),
        ("wave_resolved", cfg.wave_type.name().to_string()),
        ("t_final_resolved", t_final.to_string()),
    ];
    match rc.format {
        Format::Csv => {
            csv_header(&mut *w, "simulate", rc, &extra)?;
            let mut columns = vec!["t".to_string()];
            columns.extend(names);
            let rows: Vec<Vec<String>> = times
                .iter()
                .zip(&series)
                .map(|(t, p)| std::iter::once(t.to_string()).chain(p.iter().map(|x| x.to_string())).collect())
                .collect();
            csv_body(&mut *w, &columns, &rows)?;
        }
        Format::Json => {
            let mut pops = serde_json::Map::new();
            for (j, name) in names.iter().enumerate() {
                pops.insert(name.clone(), json!(series.iter().map(|p| p[j]).collect::<Vec<_>>()));
            }
            let summary: serde_json::Map<String, Value> =
                extra.iter().map(|(k, v)| (k.to_string(), json!(v))).collect();
            let doc = json_document("simulate", rc, Value::Object(summary), json!({"t": times, "populations": pops}));
            write_json(&mut *w, &doc)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Ω'-sweep of the average SWAP fidelity.
pub fn sweep_cmd(rc: &RunConfig) -> Outcome {
    let config = rc.system();
    let grid = rc.grid().points()?;
    let mut spec = FidelitySpec::new(rc.scheme);
    if let Some(step) = rc.step {
        spec = spec.with_evaluation(Evaluation::Integrated(settings(step)));
    }
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = rc.threads {
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| Failure::Usage(format!("thread pool: {e}")))?;
    let result = pool.install(|| sweep(&spec, &grid, &config, rc.level, true))?;

    let nu = config.mode_freqs[spec.mode];
    let eta = result.eta;
    let band = intensity_stability_band(&result, nu);
    let rate = match rc.scheme {
        FidelityScheme::Lightshift => Some(switching_rate(rc.scheme, eta, nu, 0.0)),
        _ => result.threshold.map(|x| switching_rate(rc.scheme, eta, nu, x)),
    };
    let summary = [
        ("points", grid.len().to_string()),
        ("failed_points", result.failures().to_string()),
        ("threshold", cell(result.threshold)),
        ("peak_omega", cell(result.peak.map(|p| p.0))),
        ("peak_fidelity", cell(result.peak.map(|p| p.1))),
        ("region_lo", cell(result.region.map(|r| r.0))),
        ("region_hi", cell(result.region.map(|r| r.1))),
        ("width", cell(result.width())),
        ("stability_band", cell(band)),
        ("switching_rate", cell(rate)),
    ];

    let mut w = open(rc)?;
    match rc.format {
        Format::Csv => {
            csv_header(&mut *w, "sweep", rc, &summary)?;
            let columns: Vec<String> = ["omega_over_nu", "fidelity", "t_of_max", "error"].map(String::from).to_vec();
            let rows: Vec<Vec<String>> = result
                .points
                .iter()
                .map(|p| {
                    vec![
                        p.omega_over_nu.to_string(),
                        cell(p.fidelity),
                        cell(p.t_of_max),
                        p.error.clone().unwrap_or_default(),
                    ]
                })
                .collect();
            csv_body(&mut *w, &columns, &rows)?;
        }
        Format::Json => {
            let s: serde_json::Map<String, Value> = summary
                .iter()
                .map(|(k, v)| {
                    let val = v.parse::<f64>().map_or(Value::Null, |x| json!(x));
                    (k.to_string(), val)
                })
                .collect();
            let doc = json_document("sweep", rc, Value::Object(s), serde_json::to_value(&result).unwrap_or(Value::Null));
            write_json(&mut *w, &doc)?;
        }
    }
    w.flush()?;
    if result.failures() > 0 {
        return Err(Failure::Numerical(format!("{} of {} sweep points failed", result.failures(), grid.len())));
    }
    Ok(())
}

/// C-NOT truth table, ion 0 as control for the sideband scheme and target
/// for the lightshift scheme.
pub fn truth_table_cmd(rc: &RunConfig) -> Outcome {
    if rc.n_ions != 2 {
        return Err(Failure::Usage("truth-table needs n_ions = 2".into()));
    }
    let config = rc.system();
    let opts = ScheduleOptions {
        simulate_one_qubit: rc.simulate_rotations,
        ..Default::default()
    };
    let schedule = match rc.scheme {
        FidelityScheme::Lightshift => lb_cnot_schedule(&config, 0, &opts)?,
        s => {
            let omega = omega_for(rc, &config)?;
            cz_cnot_schedule(&config, 0, rc.wave_type.unwrap_or(s.wave()), omega, &opts)?
        }
    };
    let model = match (rc.model, rc.step) {
        (Model::Idealized, _) => PulseModel::Idealized,
        (Model::Full, None) => PulseModel::Full,
        (Model::Full, Some(step)) => PulseModel::Integrated(settings(step)),
    };
    let table = truth_table(&schedule, &config, &model, false)?;
    let summary = [
        ("control", table.control.to_string()),
        ("target", table.target.to_string()),
        ("pulses", schedule.len().to_string()),
        ("min_fidelity", table.min_fidelity().to_string()),
    ];

    let mut w = open(rc)?;
    match rc.format {
        Format::Csv => {
            csv_header(&mut *w, "truth-table", rc, &summary)?;
            let columns: Vec<String> =
                ["input", "expected", "output", "fidelity", "modes_ground"].map(String::from).to_vec();
            let rows: Vec<Vec<String>> = table
                .rows
                .iter()
                .map(|r| {
                    vec![
                        r.input.clone(),
                        r.expected.clone(),
                        r.output.clone(),
                        r.fidelity.to_string(),
                        r.modes_ground.to_string(),
                    ]
                })
                .collect();
            csv_body(&mut *w, &columns, &rows)?;
        }
        Format::Json => {
            let s: serde_json::Map<String, Value> = summary.iter().map(|(k, v)| (k.to_string(), json!(v))).collect();
            let result = json!({
                "table": serde_json::to_value(&table).unwrap_or(Value::Null),
                "schedule": serde_json::to_value(&schedule).unwrap_or(Value::Null),
            });
            write_json(&mut *w, &json_document("truth-table", rc, Value::Object(s), result))?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Normal-mode table with coupling limits and rates.
pub fn modes(rc: &RunConfig) -> Outcome {
    let table = ModeTable::new(rc.budget)?;
    let mut w = open(rc)?;
    match rc.format {
        Format::Csv => {
            csv_header(&mut *w, "modes", rc, &[])?;
            let columns: Vec<String> =
                ["q", "freq_ratio", "min_spacing", "eta_max", "max_rate"].map(String::from).to_vec();
            let rows: Vec<Vec<String>> = table
                .rows
                .iter()
                .map(|r| {
                    vec![
                        r.q.to_string(),
                        r.freq_ratio.to_string(),
                        cell(r.min_spacing),
                        cell(r.eta_max),
                        cell(r.max_rate),
                    ]
                })
                .collect();
            csv_body(&mut *w, &columns, &rows)?;
        }
        Format::Json => {
            let doc = json_document(
                "modes",
                rc,
                json!({"budget": rc.budget}),
                serde_json::to_value(&table).unwrap_or(Value::Null),
            );
            write_json(&mut *w, &doc)?;
        }
    }
    w.flush()?;
    Ok(())
}
