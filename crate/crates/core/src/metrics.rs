//! Filtering figures of merit and the power-consumption ledger.

use crate::error::{Error, Result};
use crate::fmt::sig6;
use crate::rfchain::FrequencyGrid;

/// Amplitude response in dB over a frequency grid.
///
/// The maximum must be reached on a single contiguous run of samples (a
/// plateau is allowed) that touches neither end of the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeCurve {
    grid: FrequencyGrid,
    values_db: Vec<f64>,
    peak_start: usize,
    peak_end: usize,
}

impl AmplitudeCurve {
    pub fn new(grid: FrequencyGrid, values_db: Vec<f64>) -> Result<Self> {
        if values_db.len() != grid.len() {
            return Err(Error::invalid(format!(
                "{} amplitude values for {} grid samples",
                values_db.len(),
                grid.len()
            )));
        }
        if values_db.iter().any(|v| v.is_nan() || *v == f64::INFINITY) {
            return Err(Error::invalid("amplitude curve contains NaN or +inf"));
        }
        let peak = values_db.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let peak_start = values_db.iter().position(|&v| v == peak).expect("non-empty grid");
        let peak_end = values_db.iter().rposition(|&v| v == peak).expect("non-empty grid");
        if values_db[peak_start..=peak_end].iter().any(|&v| v != peak) {
            return Err(Error::invalid("amplitude curve has more than one global maximum"));
        }
        if peak_start == 0 || peak_end == values_db.len() - 1 {
            return Err(Error::invalid("amplitude curve peaks at the edge of its grid"));
        }
        Ok(AmplitudeCurve {
            grid,
            values_db,
            peak_start,
            peak_end,
        })
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values_db
    }

    pub fn peak_db(&self) -> f64 {
        self.values_db[self.peak_start]
    }

    /// Frequencies where the curve first falls to `peak - n_db` on each side
    /// of the peak, linearly interpolated between samples.
    pub fn crossings(&self, n_db: f64) -> Result<(f64, f64)> {
        if !(n_db > 0.0 && n_db.is_finite()) {
            return Err(Error::invalid(format!("bandwidth level must be > 0 dB, got {n_db}")));
        }
        let level = self.peak_db() - n_db;
        let f = self.grid.samples();
        let v = &self.values_db;
        let at = |inner: usize, outer: usize| {
            if v[outer] == level {
                return f[outer];
            }
            let t = (v[inner] - level) / (v[inner] - v[outer]);
            f[inner] + t * (f[outer] - f[inner])
        };

        let lo = (0..self.peak_start)
            .rev()
            .find(|&i| v[i] <= level)
            .map(|i| at(i + 1, i))
            .ok_or(Error::UnboundedBandwidth { n_db, side: "lower" })?;
        let hi = (self.peak_end + 1..v.len())
            .find(|&i| v[i] <= level)
            .map(|i| at(i - 1, i))
            .ok_or(Error::UnboundedBandwidth { n_db, side: "upper" })?;
        Ok((lo, hi))
    }
}

pub fn bandwidth_ndb(curve: &AmplitudeCurve, n_db: f64) -> Result<f64> {
    let (lo, hi) = curve.crossings(n_db)?;
    Ok(hi - lo)
}

/// K20dB = BW20dB / BW3dB; 1 for an ideal brick-wall response.
pub fn rectangle_coefficient(curve: &AmplitudeCurve) -> Result<f64> {
    Ok(bandwidth_ndb(curve, 20.0)? / bandwidth_ndb(curve, 3.0)?)
}

/// f0 / BW3dB with f0 the midpoint of the 3 dB crossings.
pub fn q_factor(curve: &AmplitudeCurve) -> Result<f64> {
    let (lo, hi) = curve.crossings(3.0)?;
    Ok(0.5 * (lo + hi) / (hi - lo))
}

/// One row of the metrics report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterMetrics {
    pub voltage_v: f64,
    pub angle_deg: f64,
    pub bw3db_hz: f64,
    pub bw20db_hz: f64,
    pub k20db: f64,
    pub q: f64,
}

impl FilterMetrics {
    pub const CSV_HEADER: &'static str = "voltage_v,angle_deg,bw3db_hz,bw20db_hz,k20db,q";

    pub fn evaluate(curve: &AmplitudeCurve, voltage_v: f64, angle_deg: f64) -> Result<Self> {
        let bw3db_hz = bandwidth_ndb(curve, 3.0)?;
        let bw20db_hz = bandwidth_ndb(curve, 20.0)?;
        Ok(FilterMetrics {
            voltage_v,
            angle_deg,
            bw3db_hz,
            bw20db_hz,
            k20db: bw20db_hz / bw3db_hz,
            q: q_factor(curve)?,
        })
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            sig6(self.voltage_v),
            sig6(self.angle_deg),
            sig6(self.bw3db_hz),
            sig6(self.bw20db_hz),
            sig6(self.k20db),
            sig6(self.q)
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerConfig {
    pub elements: usize,
    pub diodes_per_element: usize,
    pub diode_voltage_v: f64,
    /// Per diode: the three diodes of an element share 30 mA at 1.33 V.
    pub diode_current_a: f64,
    /// (supply V, current A) of each amplifier stage in one chain.
    pub amplifier_stages: Vec<(f64, f64)>,
    pub chains: usize,
}

impl PowerConfig {
    /// One subarray: eight elements sharing one filter/amplifier chain.
    pub fn subarray() -> Self {
        PowerConfig {
            elements: 8,
            diodes_per_element: 3,
            diode_voltage_v: 1.33,
            diode_current_a: 0.010,
            amplifier_stages: vec![(12.0, 0.035), (7.0, 0.015)],
            chains: 1,
        }
    }

    /// Passive surface of `elements` elements without any chain.
    pub fn lossy(elements: usize) -> Self {
        PowerConfig {
            elements,
            chains: 0,
            ..Self::subarray()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let values = [self.diode_voltage_v, self.diode_current_a]
            .into_iter()
            .chain(self.amplifier_stages.iter().flat_map(|&(v, i)| [v, i]));
        for v in values {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("power parameters must be >= 0, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerBreakdown {
    pub diodes_mw: f64,
    pub amplifiers_mw: f64,
    pub total_mw: f64,
}

pub fn power_consumption(cfg: &PowerConfig) -> Result<PowerBreakdown> {
    cfg.validate()?;
    let per_element_mw = cfg.diodes_per_element as f64 * cfg.diode_voltage_v * cfg.diode_current_a * 1e3;
    let per_chain_mw: f64 = cfg.amplifier_stages.iter().map(|(v, i)| v * i * 1e3).sum();
    let diodes_mw = cfg.elements as f64 * per_element_mw;
    let amplifiers_mw = cfg.chains as f64 * per_chain_mw;
    Ok(PowerBreakdown {
        diodes_mw,
        amplifiers_mw,
        total_mw: diodes_mw + amplifiers_mw,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Peak 0 dB at 3.0 GHz, 100 dB/GHz slopes, sampled every 10 MHz.
    fn triangle(scale: f64) -> AmplitudeCurve {
        let f: Vec<f64> = (0..=200).map(|i| 2.0e9 + i as f64 * 1e7).collect();
        let v = f.iter().map(|x| -100.0 * ((x - 3.0e9) / 1e9).abs()).collect();
        let f = f.iter().map(|x| 3.0e9 + (x - 3.0e9) * scale).collect();
        AmplitudeCurve::new(FrequencyGrid::new(f).unwrap(), v).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn triangle_values() {
        let c = triangle(1.0);
        assert!(rel(bandwidth_ndb(&c, 3.0).unwrap(), 0.06e9) < 1e-6);
        assert!(rel(bandwidth_ndb(&c, 20.0).unwrap(), 0.40e9) < 1e-6);
        assert!(rel(rectangle_coefficient(&c).unwrap(), 0.40 / 0.06) < 1e-6);
        assert!(rel(q_factor(&c).unwrap(), 50.0) < 1e-6);
    }

    #[test]
    fn stretching_halves_q() {
        let q1 = q_factor(&triangle(1.0)).unwrap();
        let q2 = q_factor(&triangle(2.0)).unwrap();
        assert!(rel(q2, q1 / 2.0) < 1e-6);
    }

    #[test]
    fn flat_curve_is_unbounded() {
        let grid = FrequencyGrid::new(vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let c = AmplitudeCurve::new(grid, vec![-5.0, 0.0, 0.0, -1.0]).unwrap();
        assert!(matches!(bandwidth_ndb(&c, 3.0), Err(Error::UnboundedBandwidth { .. })));
    }

    #[test]
    fn brick_wall_approaches_one() {
        let grid = FrequencyGrid::new(vec![1.0, 2.0, 2.0 + 1e-9, 3.0, 3.0 + 1e-9, 4.0]).unwrap();
        let c = AmplitudeCurve::new(grid, vec![-60.0, -60.0, 0.0, 0.0, -60.0, -60.0]).unwrap();
        assert!((rectangle_coefficient(&c).unwrap() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn curve_validation() {
        let g = || FrequencyGrid::new(vec![1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert!(AmplitudeCurve::new(g(), vec![0.0, -1.0, -2.0, -3.0, -4.0]).is_err());
        assert!(AmplitudeCurve::new(g(), vec![-9.0, 0.0, -5.0, 0.0, -9.0]).is_err());
        assert!(AmplitudeCurve::new(g(), vec![-9.0, 0.0]).is_err());
        assert!(AmplitudeCurve::new(g(), vec![-9.0, 0.0, 0.0, -3.0, -9.0]).is_ok());
    }

    #[test]
    fn power_ledger() {
        let sub = power_consumption(&PowerConfig::subarray()).unwrap();
        assert!((sub.diodes_mw - 319.2).abs() < 1e-9);
        assert!((sub.amplifiers_mw - 525.0).abs() < 1e-9);
        assert!((sub.total_mw - 844.2).abs() < 1e-9);
        assert!((power_consumption(&PowerConfig::lossy(80)).unwrap().total_mw - 3192.0).abs() < 1e-9);
        let none = PowerConfig { chains: 0, ..PowerConfig::lossy(0) };
        assert_eq!(power_consumption(&none).unwrap().total_mw, 0.0);
    }

    proptest! {
        #[test]
        fn power_linear(e in 0usize..200, c in 0usize..20) {
            let p = |e, c| power_consumption(&PowerConfig { elements: e, chains: c, ..PowerConfig::subarray() }).unwrap().total_mw;
            prop_assert!((p(2 * e, c) - p(e, c) - (p(e, 0) - p(0, 0))).abs() < 1e-6);
            prop_assert!((p(e, 2 * c) - p(e, c) - (p(0, c) - p(0, 0))).abs() < 1e-6);
        }

        #[test]
        fn offset_invariance(offset in -50.0f64..50.0) {
            let c = triangle(1.0);
            let shifted = AmplitudeCurve::new(c.grid().clone(), c.values().iter().map(|v| v + offset).collect()).unwrap();
            prop_assert!(rel(q_factor(&shifted).unwrap(), q_factor(&c).unwrap()) < 1e-9);
            prop_assert!(rel(rectangle_coefficient(&shifted).unwrap(), rectangle_coefficient(&c).unwrap()) < 1e-9);
        }
    }
}
