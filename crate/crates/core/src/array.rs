//! Array geometry, 2-bit beam-steering codes and far-field scattering.
//!
//! The surface is `rows` subarrays stacked along one axis, each a line of
//! `cols` elements along the steering axis. Steering happens only in the plane
//! containing the element lines, so every row carries the same code sequence
//! and rows add coherently.
//!
//! Signal flow of one subarray: each element receives the incident wave, the
//! combining network sums the element signals (normalized by `1/sqrt(M)`), the
//! shared chain filters and amplifies, the dividing network splits the result
//! back (again `1/sqrt(M)`), and each element re-radiates through its own
//! phase state.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fmt::sig6;
use crate::rfchain::{amplitude_to_db, phase_state_coefficient, ChainConfig, PhaseShifterModel};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Plate-relative gain the calibration offset is fitted to (7 V, broadside).
pub const AMPLIFYING_REFERENCE_GAIN_DB: f64 = 19.15;

/// Plate-relative gain the bypass loss is fitted to (lossy surface, broadside).
pub const LOSSY_REFERENCE_GAIN_DB: f64 = -6.7;

/// Frequency at which both reference gains are fitted.
pub const CALIBRATION_FREQ_HZ: f64 = 3.0e9;

/// Output of [`fit_calibration_offset`] for the default chain and phase
/// shifter.
pub const DEFAULT_CALIBRATION_OFFSET_DB: f64 = -5.85;

/// Half-width of the window searched around the target in [`gain_vs_plate`].
pub const PEAK_WINDOW_DEG: f64 = 10.0;
pub const PEAK_STEP_DEG: f64 = 0.1;

pub fn wavenumber(freq_hz: f64) -> f64 {
    2.0 * PI * freq_hz / SPEED_OF_LIGHT
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrayGeometry {
    /// Number of subarrays.
    pub rows: usize,
    /// Elements per subarray, along the steering axis.
    pub cols: usize,
    pub spacing_m: f64,
}

impl Default for ArrayGeometry {
    fn default() -> Self {
        ArrayGeometry {
            rows: 4,
            cols: 8,
            spacing_m: 0.045,
        }
    }
}

impl ArrayGeometry {
    pub fn new(rows: usize, cols: usize, spacing_m: f64) -> Result<Self> {
        let g = ArrayGeometry { rows, cols, spacing_m };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows == 0 || self.cols == 0 {
            return Err(Error::invalid(format!(
                "array needs at least one row and column, got {}x{}",
                self.rows, self.cols
            )));
        }
        if !(self.spacing_m > 0.0 && self.spacing_m.is_finite()) {
            return Err(Error::invalid(format!(
                "element spacing must be positive, got {} m",
                self.spacing_m
            )));
        }
        Ok(())
    }

    pub fn element_count(&self) -> usize {
        self.rows * self.cols
    }
}

/// Per-element 2-bit codes of one subarray row, 0..=3 ↔ 0°/90°/180°/270°.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PhaseCodeSequence(Vec<u8>);

impl PhaseCodeSequence {
    pub fn new(codes: Vec<u8>) -> Result<Self> {
        if let Some(bad) = codes.iter().find(|&&c| c > 3) {
            return Err(Error::invalid(format!("phase code {bad} is not in 0..=3")));
        }
        Ok(PhaseCodeSequence(codes))
    }

    pub fn zeros(len: usize) -> Self {
        PhaseCodeSequence(vec![0; len])
    }

    pub fn uniform(len: usize, code: u8) -> Result<Self> {
        Self::new(vec![code; len])
    }

    pub fn codes(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn reversed(&self) -> Self {
        PhaseCodeSequence(self.0.iter().rev().copied().collect())
    }

    /// Adds `offset` (mod 4) to every code.
    pub fn shifted(&self, offset: u8) -> Self {
        PhaseCodeSequence(self.0.iter().map(|c| (c + offset) % 4).collect())
    }

    /// Element-wise `-code mod 4`.
    pub fn negated(&self) -> Self {
        PhaseCodeSequence(self.0.iter().map(|c| (4 - c) % 4).collect())
    }
}

impl std::fmt::Display for PhaseCodeSequence {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for c in &self.0 {
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArrayConfig {
    pub geometry: ArrayGeometry,
    pub codes: PhaseCodeSequence,
    pub chain: ChainConfig,
    pub phase_shifter: PhaseShifterModel,
    /// Exponent `q` of the element power pattern `cos^q(theta)`.
    pub element_exponent: f64,
    pub calibration_offset_db: f64,
}

impl ArrayConfig {
    /// Uncalibrated configuration: default phase shifter, isotropic elements,
    /// zero offset.
    pub fn new(geometry: ArrayGeometry, codes: PhaseCodeSequence, chain: ChainConfig) -> Result<Self> {
        let cfg = ArrayConfig {
            geometry,
            codes,
            chain,
            phase_shifter: PhaseShifterModel::default(),
            element_exponent: 0.0,
            calibration_offset_db: 0.0,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Default phase shifter with the fitted calibration offset applied.
    pub fn calibrated(geometry: ArrayGeometry, codes: PhaseCodeSequence, chain: ChainConfig) -> Result<Self> {
        let mut cfg = Self::new(geometry, codes, chain)?;
        cfg.calibration_offset_db = DEFAULT_CALIBRATION_OFFSET_DB;
        Ok(cfg)
    }

    /// Identity chain, lossless drift-free phase shifter, zero offset: the
    /// array behaves like a plate when all codes are equal to zero.
    pub fn ideal(geometry: ArrayGeometry, codes: PhaseCodeSequence) -> Result<Self> {
        let mut cfg = Self::new(geometry, codes, ChainConfig::identity())?;
        cfg.phase_shifter = PhaseShifterModel::ideal();
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        if self.codes.len() != self.geometry.cols {
            return Err(Error::invalid(format!(
                "{} phase codes for {} columns",
                self.codes.len(),
                self.geometry.cols
            )));
        }
        if !(self.element_exponent >= 0.0 && self.element_exponent.is_finite()) {
            return Err(Error::invalid(format!(
                "element exponent must be >= 0, got {}",
                self.element_exponent
            )));
        }
        if !self.calibration_offset_db.is_finite() {
            return Err(Error::invalid("calibration offset must be finite"));
        }
        self.phase_shifter.validate()?;
        self.chain.validate()
    }
}

/// Nearest 2-bit code to an ideal phase in degrees. Exact midpoints go to the
/// smaller code.
pub fn quantize_phase(phase_deg: f64) -> u8 {
    let mut best = (f64::INFINITY, 0u8);
    for code in 0..4u8 {
        let d = circular_distance_deg(phase_deg, code as f64 * 90.0);
        if d < best.0 - 1e-9 {
            best = (d, code);
        }
    }
    best.1
}

pub fn circular_distance_deg(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(360.0);
    d.min(360.0 - d)
}

/// Ideal progressive phase of element `n` for steering toward `target_deg`.
pub fn ideal_phase_deg(geometry: &ArrayGeometry, target_deg: f64, freq_hz: f64, n: usize) -> f64 {
    (-wavenumber(freq_hz) * geometry.spacing_m * n as f64 * target_deg.to_radians().sin()).to_degrees()
}

pub fn synthesize_code(geometry: &ArrayGeometry, target_deg: f64, freq_hz: f64) -> Result<PhaseCodeSequence> {
    if !(target_deg.abs() < 90.0) {
        return Err(Error::invalid(format!(
            "steering target must satisfy |theta| < 90°, got {target_deg}"
        )));
    }
    geometry.validate()?;
    let codes = (0..geometry.cols)
        .map(|n| quantize_phase(ideal_phase_deg(geometry, target_deg, freq_hz, n)))
        .collect();
    PhaseCodeSequence::new(codes)
}

fn element_factor(theta_deg: f64, exponent: f64) -> f64 {
    if exponent == 0.0 {
        return 1.0;
    }
    theta_deg.to_radians().cos().max(0.0).powf(exponent / 2.0)
}

/// Per-frequency precomputation for repeated field evaluations.
struct FieldKernel {
    kd: f64,
    exponent: f64,
    chain: Complex64,
    states: Vec<Complex64>,
}

impl FieldKernel {
    fn new(config: &ArrayConfig, freq_hz: f64) -> Result<Self> {
        config.validate()?;
        let states = config
            .codes
            .codes()
            .iter()
            .map(|&c| phase_state_coefficient(&config.phase_shifter, c, freq_hz))
            .collect::<Result<Vec<_>>>()?;
        Ok(FieldKernel {
            kd: wavenumber(freq_hz) * config.geometry.spacing_m,
            exponent: config.element_exponent,
            chain: config.chain.coefficient(freq_hz)?,
            states,
        })
    }

    fn subarray(&self, theta_in_deg: f64, theta_out_deg: f64) -> Complex64 {
        let m = self.states.len() as f64;
        let norm = m.sqrt().recip();
        let sin_in = theta_in_deg.to_radians().sin();
        let sin_out = theta_out_deg.to_radians().sin();
        let rx: Complex64 = (0..self.states.len())
            .map(|n| Complex64::from_polar(1.0, self.kd * n as f64 * sin_in))
            .sum();
        let tx: Complex64 = self
            .states
            .iter()
            .enumerate()
            .map(|(n, s)| s * Complex64::from_polar(1.0, self.kd * n as f64 * sin_out))
            .sum();
        let ef = element_factor(theta_in_deg, self.exponent) * element_factor(theta_out_deg, self.exponent);
        self.chain * rx * tx * (ef * norm * norm)
    }
}

/// Complex far-field amplitude of one subarray.
pub fn subarray_field(config: &ArrayConfig, theta_in_deg: f64, theta_out_deg: f64, freq_hz: f64) -> Result<Complex64> {
    Ok(FieldKernel::new(config, freq_hz)?.subarray(theta_in_deg, theta_out_deg))
}

/// Field of the whole surface: rows add coherently in the steering plane.
pub fn array_field(config: &ArrayConfig, theta_in_deg: f64, theta_out_deg: f64, freq_hz: f64) -> Result<Complex64> {
    Ok(subarray_field(config, theta_in_deg, theta_out_deg, freq_hz)? * config.geometry.rows as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PatternReference {
    Absolute,
    PlateRelative,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScatterPattern {
    angles_deg: Vec<f64>,
    power_db: Vec<f64>,
    reference: PatternReference,
}

impl ScatterPattern {
    pub const CSV_HEADER: &'static str = "theta_deg,power_db";

    pub fn angles(&self) -> &[f64] {
        &self.angles_deg
    }

    pub fn values(&self) -> &[f64] {
        &self.power_db
    }

    pub fn reference(&self) -> PatternReference {
        self.reference
    }

    /// Angle and value of the maximum (first one on ties).
    pub fn peak(&self) -> (f64, f64) {
        let mut best = 0;
        for (i, v) in self.power_db.iter().enumerate() {
            if *v > self.power_db[best] {
                best = i;
            }
        }
        (self.angles_deg[best], self.power_db[best])
    }

    /// Pattern expressed relative to a plate peak level.
    pub fn relative_to(&self, plate_peak_db: f64) -> ScatterPattern {
        ScatterPattern {
            angles_deg: self.angles_deg.clone(),
            power_db: self.power_db.iter().map(|v| v - plate_peak_db).collect(),
            reference: PatternReference::PlateRelative,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for (a, v) in self.angles_deg.iter().zip(&self.power_db) {
            out.push_str(&format!("{},{}\n", sig6(*a), sig6(*v)));
        }
        out
    }
}

fn check_angles(angles: &[f64]) -> Result<()> {
    if angles.is_empty() {
        return Err(Error::invalid("angle grid is empty"));
    }
    if angles.iter().any(|a| !(a.abs() <= 90.0)) {
        return Err(Error::invalid("angles must lie in [-90°, 90°]"));
    }
    if angles.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("angle grid is not strictly increasing"));
    }
    Ok(())
}

/// `start, start + step, ..., stop` in degrees, computed by index to avoid
/// accumulated drift.
pub fn angle_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(stop >= start) {
        return Err(Error::invalid(format!("bad angle range {start}..{stop} step {step}")));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| start + i as f64 * step).collect())
}

pub fn scatter_pattern(config: &ArrayConfig, theta_in_deg: f64, angles_deg: &[f64], freq_hz: f64) -> Result<ScatterPattern> {
    check_angles(angles_deg)?;
    let kernel = FieldKernel::new(config, freq_hz)?;
    let rows = config.geometry.rows as f64;
    let power_db = angles_deg
        .iter()
        .map(|&a| amplitude_to_db((kernel.subarray(theta_in_deg, a) * rows).norm()))
        .collect();
    Ok(ScatterPattern {
        angles_deg: angles_deg.to_vec(),
        power_db,
        reference: PatternReference::Absolute,
    })
}

/// Field of an equal-aperture perfect reflector: unit elements at the same
/// positions with no added phase.
pub fn plate_field(geometry: &ArrayGeometry, theta_in_deg: f64, theta_out_deg: f64, freq_hz: f64) -> Complex64 {
    let kd = wavenumber(freq_hz) * geometry.spacing_m;
    let s = theta_in_deg.to_radians().sin() + theta_out_deg.to_radians().sin();
    let row: Complex64 = (0..geometry.cols)
        .map(|n| Complex64::from_polar(1.0, kd * n as f64 * s))
        .sum();
    row * geometry.rows as f64
}

pub fn plate_reference(geometry: &ArrayGeometry, theta_in_deg: f64, angles_deg: &[f64], freq_hz: f64) -> Result<ScatterPattern> {
    geometry.validate()?;
    check_angles(angles_deg)?;
    let power_db = angles_deg
        .iter()
        .map(|&a| amplitude_to_db(plate_field(geometry, theta_in_deg, a, freq_hz).norm()))
        .collect();
    Ok(ScatterPattern {
        angles_deg: angles_deg.to_vec(),
        power_db,
        reference: PatternReference::Absolute,
    })
}

/// Peak of the normal-incidence pattern within ±10° of `target_deg`, relative
/// to the broadside peak of the equal-size plate, plus the calibration offset.
pub fn gain_vs_plate(config: &ArrayConfig, target_deg: f64, freq_hz: f64) -> Result<f64> {
    let lo = (target_deg - PEAK_WINDOW_DEG).max(-90.0);
    let hi = (target_deg + PEAK_WINDOW_DEG).min(90.0);
    let window = angle_grid(lo, hi, PEAK_STEP_DEG)?;
    let (_, peak_db) = scatter_pattern(config, 0.0, &window, freq_hz)?.peak();
    let plate_db = amplitude_to_db(plate_field(&config.geometry, 0.0, 0.0, freq_hz).norm());
    Ok(peak_db - plate_db + config.calibration_offset_db)
}

/// Offset that makes `gain_vs_plate(config, target, f)` equal `desired_db`.
pub fn fit_calibration_offset(config: &ArrayConfig, target_deg: f64, freq_hz: f64, desired_db: f64) -> Result<f64> {
    let raw = ArrayConfig {
        calibration_offset_db: 0.0,
        ..config.clone()
    };
    Ok(desired_db - gain_vs_plate(&raw, target_deg, freq_hz)?)
}

/// Bypass loss that makes the lossy configuration reach `desired_db`.
pub fn fit_bypass_loss(config: &ArrayConfig, target_deg: f64, freq_hz: f64, desired_db: f64) -> Result<f64> {
    let mut lossless = config.clone();
    lossless.chain.enabled = false;
    lossless.chain.bypass_loss_db = 0.0;
    let loss = gain_vs_plate(&lossless, target_deg, freq_hz)? - desired_db;
    if loss < 0.0 {
        return Err(Error::invalid(format!(
            "reaching {desired_db} dB needs a negative bypass loss ({loss} dB)"
        )));
    }
    Ok(loss)
}
