//! Axial normal-mode frequencies of a linear ion string and the resulting
//! limits on lightshift gates through mode `q`.
//!
//! Frequencies are roughly independent of the number of ions, so a single
//! table of ratios `ν_q/ν₁` serves every string length.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `ν_q/ν₁` for `q = 1..=6`.
pub const MODE_FREQUENCIES: [f64; 6] = [1.0, 1.732_050_807_568_877_2, 2.41, 3.06, 3.68, 4.28];

/// Default off-resonant population budget `ε²`.
pub const DEFAULT_BUDGET: f64 = 0.01;

pub fn load_mode_frequencies() -> Vec<f64> {
    MODE_FREQUENCIES.to_vec()
}

fn check_q(q: usize) -> Result<()> {
    // the highest tabulated mode has no upper neighbour
    if q == 0 || q >= MODE_FREQUENCIES.len() {
        return Err(Error::IndexOutOfRange {
            what: "mode order",
            index: q,
            len: MODE_FREQUENCIES.len() - 1,
        });
    }
    Ok(())
}

/// `min_p |ν_p − ν_q| / ν_q` over the tabulated modes, `q` 1-based.
pub fn min_relative_spacing(q: usize) -> Result<f64> {
    check_q(q)?;
    let nu = MODE_FREQUENCIES[q - 1];
    Ok(MODE_FREQUENCIES
        .iter()
        .enumerate()
        .filter(|&(p, _)| p != q - 1)
        .map(|(_, &v)| (v - nu).abs() / nu)
        .fold(f64::INFINITY, f64::min))
}

/// Largest `η` keeping `ε² = (η ν_q / 2|ν_p − ν_q|)²` within `budget`.
pub fn eta_max(q: usize, budget: f64) -> Result<f64> {
    if !(budget >= 0.0 && budget.is_finite()) {
        return Err(Error::InvalidInput(format!("budget must be non-negative, got {budget}")));
    }
    Ok(2.0 * budget.sqrt() * min_relative_spacing(q)?)
}

/// Switching rate `η_max ν_q / 2ν₁` of a lightshift gate through mode `q`.
pub fn max_rate(q: usize, budget: f64) -> Result<f64> {
    Ok(eta_max(q, budget)? * MODE_FREQUENCIES[q - 1] / 2.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeRow {
    pub q: usize,
    pub freq_ratio: f64,
    pub min_spacing: Option<f64>,
    pub eta_max: Option<f64>,
    pub max_rate: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeTable {
    pub budget: f64,
    pub rows: Vec<ModeRow>,
}

impl ModeTable {
    pub fn new(budget: f64) -> Result<Self> {
        let rows = (1..=MODE_FREQUENCIES.len())
            .map(|q| {
                let derived = check_q(q).is_ok();
                Ok(ModeRow {
                    q,
                    freq_ratio: MODE_FREQUENCIES[q - 1],
                    min_spacing: derived.then(|| min_relative_spacing(q)).transpose()?,
                    eta_max: derived.then(|| eta_max(q, budget)).transpose()?,
                    max_rate: derived.then(|| max_rate(q, budget)).transpose()?,
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self { budget, rows })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frequencies() {
        assert_eq!(load_mode_frequencies()[0], 1.0);
        assert!((MODE_FREQUENCIES[1] - 3f64.sqrt()).abs() < 1e-15);
        assert_eq!(MODE_FREQUENCIES[3], 3.06);
        assert!(MODE_FREQUENCIES.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn spacing_and_eta() {
        assert!((min_relative_spacing(1).unwrap() - (3f64.sqrt() - 1.0)).abs() < 1e-15);
        assert!((eta_max(1, 0.01).unwrap() - 0.2 * (3f64.sqrt() - 1.0)).abs() < 1e-15);
        assert_eq!(eta_max(1, 0.0).unwrap(), 0.0);
        let s: Vec<f64> = (1..=5).map(|q| min_relative_spacing(q).unwrap()).collect();
        assert!(s.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn out_of_range() {
        assert!(eta_max(0, 0.01).is_err());
        assert!(eta_max(6, 0.01).is_err());
        assert!(max_rate(7, 0.01).is_err());
        assert!(eta_max(1, -1.0).is_err());
    }

    #[test]
    fn table_shape() {
        let t = ModeTable::new(DEFAULT_BUDGET).unwrap();
        assert_eq!(t.rows.len(), 6);
        assert!(t.rows[5].eta_max.is_none());
        let quarter = ModeTable::new(DEFAULT_BUDGET / 4.0).unwrap();
        let r = quarter.rows[0].eta_max.unwrap() / t.rows[0].eta_max.unwrap();
        assert!((r - 0.5).abs() < 1e-12);
    }
}
