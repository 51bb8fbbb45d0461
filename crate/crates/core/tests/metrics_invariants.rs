use std::sync::OnceLock;

use iongate::hamiltonians::SystemConfig;
use iongate::metrics::{
    intensity_stability_band, sweep, swap_fidelity, FidelityScheme, FidelitySpec, Grid, SweepResult,
    DEFAULT_LEVEL,
};
use iongate::Config;

fn trap(eta: f64) -> Config {
    SystemConfig::two_ion_trap(eta, 1.0)
}

fn lb_grid_step() -> f64 {
    let Grid::Linear { lo, hi, n } = FidelityScheme::Lightshift.default_grid() else {
        unreachable!()
    };
    (hi - lo) / (n - 1) as f64
}

fn lb_sweep(eta: f64) -> SweepResult {
    let grid = FidelityScheme::Lightshift.default_grid().points().unwrap();
    let spec = FidelitySpec::new(FidelityScheme::Lightshift);
    sweep(&spec, &grid, &trap(eta), DEFAULT_LEVEL, true).unwrap()
}

fn lb_default() -> &'static SweepResult {
    static R: OnceLock<SweepResult> = OnceLock::new();
    R.get_or_init(|| {
        let r = lb_sweep(0.1);
        let (x, f) = r.peak.unwrap();
        let (a, b) = r.region.unwrap();
        println!("peak F = {f:.5} at {x:.5}; F >= 0.99 on [{a:.5}, {b:.5}]");
        r
    })
}

#[test]
fn sideband_fidelity_falls_across_default_range() {
    for scheme in [FidelityScheme::CzTravelling, FidelityScheme::CzStanding] {
        let g = scheme.default_grid().points().unwrap();
        let spec = FidelitySpec::new(scheme);
        let lo = swap_fidelity(&spec, g[0], &trap(0.1)).unwrap().fidelity;
        let hi = swap_fidelity(&spec, *g.last().unwrap(), &trap(0.1)).unwrap().fidelity;
        assert!(lo > hi, "{scheme:?}: {lo} vs {hi}");
    }
}

#[test]
fn lightshift_argmax_within_one_grid_step_of_resonance() {
    let (x, _) = lb_default().peak.unwrap();
    assert!((x - 0.5).abs() <= lb_grid_step(), "argmax {x}, step {}", lb_grid_step());
}

#[test]
fn lightshift_band_symmetric_about_resonance() {
    let (a, b) = lb_default().region.unwrap();
    let centre = (a + b) / 2.0;
    assert!((centre - 0.5).abs() <= lb_grid_step(), "region centre {centre}");
}

#[test]
fn lightshift_band_at_smaller_coupling() {
    let band = intensity_stability_band(lb_default(), 1.0).unwrap();
    let band05 = intensity_stability_band(&lb_sweep(0.05), 1.0).unwrap();
    println!("band ±{:.2}% at η = 0.1, ±{:.2}% at η = 0.05", 100.0 * band, 100.0 * band05);
    // narrower or comparable
    assert!(band05 <= 1.1 * band);
}
