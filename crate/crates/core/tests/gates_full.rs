use iongate::gates::{
    cnot_distance, computational_matrix, cz_cnot_schedule, lb_cnot_schedule, run_schedule, truth_table,
    PulseModel, ScheduleOptions,
};
use iongate::hamiltonians::SystemConfig;
use iongate::propagator::Method;
use iongate::statespace::StateVector;
use iongate::{Config, Level, PropagationSettings, WaveType};

fn trap() -> Config {
    SystemConfig::two_ion_trap(0.1, 1.0)
}

#[test]
fn full_lb_truth_table() {
    let c = trap();
    let s = lb_cnot_schedule(&c, 0, &ScheduleOptions::default()).unwrap();
    let t = truth_table(&s, &c, &PulseModel::Full, true).unwrap();
    for r in &t.rows {
        println!("{} -> {} (expected {}) F = {:.4}, modes in |0> {:.4}", r.input, r.output, r.expected, r.fidelity, r.modes_ground);
        assert!(r.fidelity >= 0.97, "{r:?}");
        assert_eq!(r.output, r.expected);
    }
    // the first five pulses alone are the entangling core
    for r in t.entangling_rows.unwrap() {
        assert!(r.fidelity >= 0.97, "{r:?}");
    }
}

#[test]
fn full_lb_with_simulated_rotations() {
    let c = trap();
    let opts = ScheduleOptions {
        simulate_one_qubit: true,
        ..Default::default()
    };
    let s = lb_cnot_schedule(&c, 0, &opts).unwrap();
    let t = truth_table(&s, &c, &PulseModel::Full, false).unwrap();
    assert!(t.min_fidelity() >= 0.97, "{t:?}");
}

#[test]
fn full_cz_standing_wave_is_nearly_ideal() {
    let c = trap();
    let s = cz_cnot_schedule(&c, 0, WaveType::StandingNode, 0.01, &ScheduleOptions::default()).unwrap();
    let m = computational_matrix(&s, &c, &PulseModel::Full).unwrap();
    assert!(cnot_distance(&m, 0, 1) < 0.01);
}

#[test]
fn integrated_matches_exact_on_reduced_trap() {
    // bus mode only, so step-by-step integration stays cheap
    let mut c = trap();
    c.mode_freqs.truncate(1);
    c.fock_cutoffs.truncate(1);
    for r in &mut c.lamb_dicke {
        r.truncate(1);
    }
    let s = lb_cnot_schedule(&c, 0, &ScheduleOptions::default()).unwrap();
    let input = StateVector::product(c.basis().unwrap(), &[Level::E, Level::E], &[0]).unwrap();
    let exact = run_schedule(&s, &c, &input, &PulseModel::Full).unwrap();
    let settings = PropagationSettings::default().with_method(Method::CommutatorFree4);
    let stepped = run_schedule(&s, &c, &input, &PulseModel::Integrated(settings)).unwrap();
    let d: f64 = exact
        .amplitudes()
        .iter()
        .zip(stepped.amplitudes())
        .map(|(a, b)| (a - b).norm_sqr())
        .sum();
    assert!(d.sqrt() < 1e-6, "{}", d.sqrt());
    assert!((stepped.norm() - 1.0).abs() < 1e-9);
}
