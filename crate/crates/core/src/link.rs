//! Surface-relayed link budget and SNR.
//!
//! Received power follows the double-hop far-field budget: free-space
//! spreading on each hop, the coherent array field toward the receiver, the
//! effective-area gain of one element cell on receive and on transmit, and a
//! single fixed constant for the horn antennas. For a fixed physical aperture
//! the wavelength terms cancel, so only the chain and the array pattern make
//! the budget frequency dependent.
//!
//! Noise has two parts. The transmitter's own impairments sit a fixed
//! `evm_floor_db` below the transmitted signal and go through the relay with
//! the same gain as the signal; the receiver adds a fixed noise power.

use std::f64::consts::PI;

use crate::array::{
    array_field, synthesize_code, ArrayConfig, ArrayGeometry, SPEED_OF_LIGHT, CALIBRATION_FREQ_HZ,
};
use crate::error::{Error, Result};
use crate::fmt::sig6;
use crate::rfchain::{amplitude_to_db, ChainConfig, FrequencyGrid};

pub const DEFAULT_TX_POWER_DBM: f64 = -10.0;
pub const DEFAULT_DISTANCE_M: f64 = 5.5;
pub const DEFAULT_RX_NOISE_DBM: f64 = -95.0;
pub const DEFAULT_EVM_FLOOR_DB: f64 = 27.5;

/// SNR of the Case 3 preset at 3.0 GHz that the antenna constant is fitted to.
pub const CASE3_REFERENCE_SNR_DB: f64 = 27.1;

/// Output of [`fit_antenna_constant`] on the Case 3 preset.
pub const DEFAULT_ANTENNA_CONSTANT_DB: f64 = 9.860_394_571_750;

#[derive(Debug, Clone, PartialEq)]
pub struct LinkScenario {
    pub freq_hz: f64,
    pub tx_power_dbm: f64,
    /// Transmitter to surface.
    pub d1_m: f64,
    /// Surface to receiver.
    pub d2_m: f64,
    /// Receiver noise power in the signal bandwidth.
    pub rx_noise_dbm: f64,
    /// Transmit-side SNR ceiling.
    pub evm_floor_db: f64,
    pub array: ArrayConfig,
    pub rx_angle_deg: f64,
    /// Angle the codes in `array` were synthesized for.
    pub target_deg: f64,
    pub antenna_constant_db: f64,
}

impl LinkScenario {
    /// Default geometry and link parameters, calibrated array, codes
    /// synthesized for `target_deg` at 3.0 GHz.
    pub fn steered(chain: ChainConfig, target_deg: f64, rx_angle_deg: f64, freq_hz: f64) -> Result<Self> {
        let geometry = ArrayGeometry::default();
        let codes = synthesize_code(&geometry, target_deg, CALIBRATION_FREQ_HZ)?;
        let s = LinkScenario {
            freq_hz,
            tx_power_dbm: DEFAULT_TX_POWER_DBM,
            d1_m: DEFAULT_DISTANCE_M,
            d2_m: DEFAULT_DISTANCE_M,
            rx_noise_dbm: DEFAULT_RX_NOISE_DBM,
            evm_floor_db: DEFAULT_EVM_FLOOR_DB,
            array: ArrayConfig::calibrated(geometry, codes, chain)?,
            rx_angle_deg,
            target_deg,
            antenna_constant_db: DEFAULT_ANTENNA_CONSTANT_DB,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.freq_hz > 0.0 && self.freq_hz.is_finite()) {
            return Err(Error::invalid(format!("carrier must be positive, got {} Hz", self.freq_hz)));
        }
        for (name, d) in [("d1", self.d1_m), ("d2", self.d2_m)] {
            if !(d > 0.0 && d.is_finite()) {
                return Err(Error::invalid(format!("{name} must be positive, got {d} m")));
            }
        }
        if !(self.evm_floor_db > 0.0) {
            return Err(Error::invalid(format!(
                "EVM floor must be > 0 dB, got {}",
                self.evm_floor_db
            )));
        }
        if !self.rx_noise_dbm.is_finite() || self.tx_power_dbm.is_nan() {
            return Err(Error::invalid("noise and transmit power must be finite"));
        }
        if !(self.rx_angle_deg.abs() <= 90.0) {
            return Err(Error::invalid(format!(
                "receive angle must lie in [-90°, 90°], got {}",
                self.rx_angle_deg
            )));
        }
        self.array.validate()
    }

    pub fn at_frequency(&self, freq_hz: f64) -> Self {
        LinkScenario {
            freq_hz,
            ..self.clone()
        }
    }
}

/// The five relay experiments: (coded angle, receive angle, amplifying, carrier).
pub const CASES: [(f64, f64, bool, f64); 5] = [
    (0.0, 30.0, false, 3.00e9),
    (30.0, 30.0, false, 3.00e9),
    (30.0, 30.0, true, 3.00e9),
    (30.0, 30.0, true, 2.65e9),
    (30.0, 30.0, true, 3.35e9),
];

/// Control voltage of the amplifying cases.
pub const CASE_AMPLIFYING_VOLTAGE: f64 = 7.0;
/// Voltage recorded for the non-amplifying cases; the chain is bypassed.
pub const CASE_LOSSY_VOLTAGE: f64 = 2.0;

pub fn case_scenario(case_id: u8) -> Result<LinkScenario> {
    let &(target, rx, amplifying, freq) = case_id
        .checked_sub(1)
        .and_then(|i| CASES.get(i as usize))
        .ok_or_else(|| Error::invalid(format!("case {case_id} is not in 1..=5")))?;
    let chain = if amplifying {
        ChainConfig::amplifying(CASE_AMPLIFYING_VOLTAGE)
    } else {
        ChainConfig {
            amp_voltage: CASE_LOSSY_VOLTAGE,
            ..ChainConfig::bypass()
        }
    };
    LinkScenario::steered(chain, target, rx, freq)
}

fn spreading_db(distance_m: f64, wavelength_m: f64) -> f64 {
    20.0 * (4.0 * PI * distance_m / wavelength_m).log10()
}

/// Effective-area gain of one element cell, applied once per hop.
fn element_aperture_db(spacing_m: f64, wavelength_m: f64) -> f64 {
    10.0 * (4.0 * PI * spacing_m * spacing_m / (wavelength_m * wavelength_m)).log10()
}

/// Transmit-antenna input to receive-antenna output gain in dB.
pub fn end_to_end_gain_db(s: &LinkScenario) -> Result<f64> {
    s.validate()?;
    let lambda = SPEED_OF_LIGHT / s.freq_hz;
    let field = array_field(&s.array, 0.0, s.rx_angle_deg, s.freq_hz)?;
    Ok(-spreading_db(s.d1_m, lambda) - spreading_db(s.d2_m, lambda)
        + amplitude_to_db(field.norm())
        + s.array.calibration_offset_db
        + 2.0 * element_aperture_db(s.array.geometry.spacing_m, lambda)
        + s.antenna_constant_db)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkReport {
    pub signal_dbm: f64,
    pub tx_noise_dbm: f64,
    pub rx_noise_dbm: f64,
    pub snr_db: f64,
}

impl LinkReport {
    pub fn to_text(&self) -> String {
        format!(
            "signal_dbm={}\ntx_noise_dbm={}\nrx_noise_dbm={}\nsnr_db={}\n",
            sig6(self.signal_dbm),
            sig6(self.tx_noise_dbm),
            sig6(self.rx_noise_dbm),
            sig6(self.snr_db)
        )
    }
}

fn power_sum_dbm(a: f64, b: f64) -> f64 {
    10.0 * (10f64.powf(a / 10.0) + 10f64.powf(b / 10.0)).log10()
}

pub fn link_report(s: &LinkScenario) -> Result<LinkReport> {
    let gain = end_to_end_gain_db(s)?;
    let signal_dbm = s.tx_power_dbm + gain;
    let tx_noise_dbm = s.tx_power_dbm - s.evm_floor_db + gain;
    Ok(LinkReport {
        signal_dbm,
        tx_noise_dbm,
        rx_noise_dbm: s.rx_noise_dbm,
        snr_db: signal_dbm - power_sum_dbm(tx_noise_dbm, s.rx_noise_dbm),
    })
}

pub fn snr_db(s: &LinkScenario) -> Result<f64> {
    Ok(link_report(s)?.snr_db)
}

/// SNR with the carrier swept over `grid` and the codes held fixed.
pub fn snr_spectrum(s: &LinkScenario, grid: &FrequencyGrid) -> Result<Vec<(f64, f64)>> {
    grid.samples()
        .iter()
        .map(|&f| Ok((f, snr_db(&s.at_frequency(f))?)))
        .collect()
}

pub const SPECTRUM_CSV_HEADER: &str = "freq_hz,snr_db";

pub fn spectrum_csv(points: &[(f64, f64)]) -> String {
    let mut out = format!("{SPECTRUM_CSV_HEADER}\n");
    for (f, snr) in points {
        out.push_str(&format!("{f:.0},{}\n", sig6(*snr)));
    }
    out
}

/// Antenna constant that makes `snr_db(s)` equal `target_snr_db`.
pub fn fit_antenna_constant(s: &LinkScenario, target_snr_db: f64) -> Result<f64> {
    if !(target_snr_db < s.evm_floor_db) {
        return Err(Error::invalid(format!(
            "target SNR {target_snr_db} dB is not below the EVM floor {} dB",
            s.evm_floor_db
        )));
    }
    // 1/SNR = 1/EVM + N_rx/S, solved for S - N_rx
    let inv = 10f64.powf(-target_snr_db / 10.0) - 10f64.powf(-s.evm_floor_db / 10.0);
    let needed_margin_db = -10.0 * inv.log10();
    let bare = LinkScenario {
        antenna_constant_db: 0.0,
        ..s.clone()
    };
    let gain = end_to_end_gain_db(&bare)?;
    Ok(needed_margin_db + s.rx_noise_dbm - s.tx_power_dbm - gain)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::PhaseCodeSequence;
    use proptest::prelude::*;

    fn case(n: u8) -> LinkScenario {
        case_scenario(n).unwrap()
    }

    #[test]
    fn antenna_constant_is_the_case3_fit() {
        let k = fit_antenna_constant(&case(3), CASE3_REFERENCE_SNR_DB).unwrap();
        assert!((k - DEFAULT_ANTENNA_CONSTANT_DB).abs() < 1e-9, "{k:.12}");
        assert!((snr_db(&case(3)).unwrap() - CASE3_REFERENCE_SNR_DB).abs() < 1e-9);
    }

    #[test]
    fn case_presets_follow_table() {
        let c3 = case(3);
        assert_eq!((c3.target_deg, c3.rx_angle_deg, c3.freq_hz), (30.0, 30.0, 3.0e9));
        assert!(c3.array.chain.enabled && c3.array.chain.amp_voltage == 7.0);
        assert!(!case(1).array.chain.enabled);
        assert_eq!(case(1).array.codes, PhaseCodeSequence::zeros(8));
        assert_eq!(case(4).freq_hz, 2.65e9);
        assert_eq!(case(5).freq_hz, 3.35e9);
        assert_eq!(case(4).array.codes, c3.array.codes);
        assert!(case_scenario(0).is_err() && case_scenario(6).is_err());
    }

    #[test]
    fn area_squared_gain() {
        let mut s = LinkScenario::steered(ChainConfig::identity(), 0.0, 0.0, 3e9).unwrap();
        let g1 = end_to_end_gain_db(&s).unwrap();
        s.array.geometry.rows *= 2;
        s.array.geometry.cols *= 2;
        s.array.codes = PhaseCodeSequence::zeros(16);
        let g2 = end_to_end_gain_db(&s).unwrap();
        assert!((g2 - g1 - 40.0 * 2f64.log10()).abs() < 1e-9);
    }

    #[test]
    fn inverse_square_on_second_hop() {
        let mut s = case(3);
        let g1 = end_to_end_gain_db(&s).unwrap();
        s.d2_m *= 2.0;
        let g2 = end_to_end_gain_db(&s).unwrap();
        assert!((g1 - g2 - 20.0 * 2f64.log10()).abs() < 1e-9);
    }

    #[test]
    fn aligned_beam_beats_broadside() {
        assert!(end_to_end_gain_db(&case(2)).unwrap() > end_to_end_gain_db(&case(1)).unwrap());
    }

    #[test]
    fn snr_limits() {
        let mut s = case(3);
        s.tx_power_dbm = 200.0;
        assert!((snr_db(&s).unwrap() - s.evm_floor_db).abs() < 1e-9);
        let mut off = case(3);
        off.tx_power_dbm = f64::NEG_INFINITY;
        assert_eq!(snr_db(&off).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn bypass_spectrum_is_flat() {
        let s = LinkScenario::steered(ChainConfig::bypass(), 0.0, 0.0, 3e9).unwrap();
        let grid = FrequencyGrid::linspace_step(2.3e9, 3.7e9, 0.05e9).unwrap();
        let points = snr_spectrum(&s, &grid).unwrap();
        assert!(points.iter().all(|(_, v)| (v - points[0].1).abs() < 1e-9));
    }

    #[test]
    fn case_ordering() {
        let snr: Vec<f64> = (1..=3).map(|n| snr_db(&case(n)).unwrap()).collect();
        assert!(snr[0] < snr[1] && snr[1] < snr[2], "{snr:?}");
        assert!(snr_db(&case(4)).unwrap() <= snr[2] - 10.0);
    }

    #[test]
    fn report_text_block() {
        let text = link_report(&case(3)).unwrap().to_text();
        let keys: Vec<&str> = text.lines().map(|l| l.split('=').next().unwrap()).collect();
        assert_eq!(keys, ["signal_dbm", "tx_noise_dbm", "rx_noise_dbm", "snr_db"]);
    }

    #[test]
    fn invalid_scenarios() {
        let mut s = case(3);
        s.d1_m = 0.0;
        assert!(end_to_end_gain_db(&s).is_err());
        let mut s = case(3);
        s.evm_floor_db = 0.0;
        assert!(snr_db(&s).is_err());
    }

    proptest! {
        #[test]
        fn snr_monotone_and_bounded(p1 in -80.0f64..40.0, dp in 0.0f64..30.0, n in 1u8..=5) {
            let mut a = case(n);
            a.tx_power_dbm = p1;
            let mut b = a.clone();
            b.tx_power_dbm = p1 + dp;
            let (sa, sb) = (snr_db(&a).unwrap(), snr_db(&b).unwrap());
            prop_assert!(sa <= sb + 1e-12);
            prop_assert!(sb < a.evm_floor_db);
        }

        #[test]
        fn hop_swap_invariant(d1 in 0.5f64..50.0, d2 in 0.5f64..50.0) {
            let mut a = case(3);
            a.d1_m = d1;
            a.d2_m = d2;
            let b = LinkScenario { d1_m: d2, d2_m: d1, ..a.clone() };
            prop_assert!((end_to_end_gain_db(&a).unwrap() - end_to_end_gain_db(&b).unwrap()).abs() < 1e-9);
        }
    }
}
