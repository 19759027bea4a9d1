//! Behavioral models of the subarray RF chain.
//!
//! A subarray collects the signal from its elements through a power-combining
//! network, passes it through a bandpass filter and a pair of cascaded
//! amplifiers, and redistributes it to the elements, each of which applies its
//! own 2-bit phase state. Everything here is magnitude-level: the filter has
//! zero phase and the combiner/divider is an ideal network folded into one
//! fixed loss.

use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Default filter anchors, (Hz, dB relative to the passband peak).
pub const DEFAULT_FILTER_ANCHORS: [(f64, f64); 6] = [
    (2.5e9, -40.0),
    (2.6e9, -29.0),
    (2.8e9, 0.0),
    (3.2e9, 0.0),
    (3.4e9, -24.0),
    (3.5e9, -35.0),
];

/// Measured end points of the cascaded amplifier gain, (V, dB).
pub const DEFAULT_AMP_ANCHORS: [(f64, f64); 2] = [(1.0, -1.1), (7.0, 26.5)];

/// Combiner, divider and routing loss of the enabled chain.
pub const DEFAULT_FIXED_LOSS_DB: f64 = 1.0;

/// Loss of the through line that replaces the filter and amplifiers in the
/// lossy (passive) configuration. Fitted so that the broadside plate-relative
/// gain of the passive surface is -6.7 dB; see `array::fit_bypass_loss`.
pub const DEFAULT_BYPASS_LOSS_DB: f64 = 0.35;

/// Per-state insertion loss of the element phase shifter.
pub const DEFAULT_PHASE_SHIFTER_LOSS_DB: f64 = 0.5;

pub fn db_to_amplitude(db: f64) -> f64 {
    10f64.powf(db / 20.0)
}

pub fn amplitude_to_db(amplitude: f64) -> f64 {
    20.0 * amplitude.log10()
}

/// Strictly increasing, positive frequency samples in Hz.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyGrid(Vec<f64>);

impl FrequencyGrid {
    pub fn new(samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::invalid("frequency grid is empty"));
        }
        if let Some(bad) = samples.iter().find(|f| !(f.is_finite() && **f > 0.0)) {
            return Err(Error::invalid(format!(
                "frequency grid sample {bad} is not a positive finite frequency"
            )));
        }
        if samples.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("frequency grid is not strictly increasing"));
        }
        Ok(FrequencyGrid(samples))
    }

    pub fn single(freq_hz: f64) -> Result<Self> {
        Self::new(vec![freq_hz])
    }

    /// `start, start + step, ...` up to and including `stop` (with a half-step
    /// tolerance so that float accumulation does not drop the end point).
    pub fn linspace_step(start: f64, stop: f64, step: f64) -> Result<Self> {
        if !(step > 0.0) || !(stop >= start) {
            return Err(Error::invalid(format!(
                "bad frequency range {start}..{stop} step {step}"
            )));
        }
        let count = ((stop - start) / step + 0.5).floor() as usize + 1;
        Self::new((0..count).map(|i| start + i as f64 * step).collect())
    }

    pub fn samples(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Complex voltage transfer coefficient sampled on a frequency grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexResponse {
    grid: FrequencyGrid,
    values: Vec<Complex64>,
}

impl ComplexResponse {
    pub fn new(grid: FrequencyGrid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::invalid(format!(
                "response has {} values for {} grid samples",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::invalid("response contains a non-finite value"));
        }
        Ok(ComplexResponse { grid, values })
    }

    /// All-ones response: the identity of [`cascade`].
    pub fn identity(grid: FrequencyGrid) -> Self {
        Self::flat_db(grid, 0.0)
    }

    pub fn flat_db(grid: FrequencyGrid, gain_db: f64) -> Self {
        let v = Complex64::new(db_to_amplitude(gain_db), 0.0);
        let values = vec![v; grid.len()];
        ComplexResponse { grid, values }
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn magnitude_db(&self) -> Vec<f64> {
        self.values.iter().map(|v| amplitude_to_db(v.norm())).collect()
    }
}

/// Pointwise product of two responses on the same grid.
pub fn cascade(a: &ComplexResponse, b: &ComplexResponse) -> Result<ComplexResponse> {
    if a.grid != b.grid {
        return Err(Error::invalid("cannot cascade responses on different grids"));
    }
    let values = a.values.iter().zip(&b.values).map(|(x, y)| x * y).collect();
    ComplexResponse::new(a.grid.clone(), values)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Interpolation {
    /// dB value linear in frequency between anchors, held constant outside.
    LinearDb,
}

/// Parses a two-column anchor table with an exact header line.
fn parse_table(text: &str, header: &str) -> Result<Vec<(f64, f64)>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, first)) if first.trim() == header => {}
        Some((_, first)) => {
            return Err(Error::Parse {
                line: 1,
                key: header.to_string(),
                message: format!("expected header `{header}`, found `{}`", first.trim()),
            })
        }
        None => {
            return Err(Error::Parse {
                line: 1,
                key: header.to_string(),
                message: "empty table".into(),
            })
        }
    }
    let mut rows = Vec::new();
    for (idx, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let bad = |message: String| Error::Parse {
            line: idx + 1,
            key: header.to_string(),
            message,
        };
        let (x, y) = line
            .split_once(',')
            .ok_or_else(|| bad(format!("expected two comma-separated values, got `{line}`")))?;
        let x: f64 = x.trim().parse().map_err(|e| bad(format!("{e}: `{x}`")))?;
        let y: f64 = y.trim().parse().map_err(|e| bad(format!("{e}: `{y}`")))?;
        rows.push((x, y));
    }
    Ok(rows)
}

fn read_table(path: &Path, header: &str) -> Result<Vec<(f64, f64)>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_table(&text, header)
}

fn check_increasing(anchors: &[(f64, f64)], what: &str) -> Result<()> {
    if anchors.len() < 2 {
        return Err(Error::invalid(format!("{what} needs at least two anchors")));
    }
    if anchors.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return Err(Error::invalid(format!("{what} has a non-finite anchor")));
    }
    if anchors.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(Error::invalid(format!("{what} anchors are not strictly increasing")));
    }
    Ok(())
}

/// Piecewise-linear lookup. Exact anchor hits return the anchor value
/// unchanged; queries outside the span hold the end value.
fn interpolate(anchors: &[(f64, f64)], x: f64) -> f64 {
    if let Some(&(_, y)) = anchors.iter().find(|(ax, _)| *ax == x) {
        return y;
    }
    let first = anchors[0];
    let last = anchors[anchors.len() - 1];
    if x <= first.0 {
        return first.1;
    }
    if x >= last.0 {
        return last.1;
    }
    let i = anchors.partition_point(|(ax, _)| *ax < x);
    let (x0, y0) = anchors[i - 1];
    let (x1, y1) = anchors[i];
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}

/// Peak-normalized bandpass filter magnitude profile.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterProfile {
    anchors: Vec<(f64, f64)>,
    interpolation: Interpolation,
}

impl FilterProfile {
    pub const TABLE_HEADER: &'static str = "freq_hz,gain_db";

    pub fn new(anchors: Vec<(f64, f64)>) -> Result<Self> {
        check_increasing(&anchors, "filter profile")?;
        if anchors.iter().any(|(f, _)| *f <= 0.0) {
            return Err(Error::invalid("filter anchor frequencies must be positive"));
        }
        let peak = anchors.iter().map(|a| a.1).fold(f64::NEG_INFINITY, f64::max);
        if peak != 0.0 {
            return Err(Error::invalid(format!(
                "filter profile must be peak-normalized to 0 dB, peak is {peak} dB"
            )));
        }
        Ok(FilterProfile {
            anchors,
            interpolation: Interpolation::LinearDb,
        })
    }

    pub fn from_table_str(text: &str) -> Result<Self> {
        Self::new(parse_table(text, Self::TABLE_HEADER)?)
    }

    pub fn from_table_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::new(read_table(path.as_ref(), Self::TABLE_HEADER)?)
    }

    pub fn anchors(&self) -> &[(f64, f64)] {
        &self.anchors
    }

    pub fn interpolation(&self) -> Interpolation {
        self.interpolation
    }

    /// Frequency span covered by the anchors.
    pub fn span(&self) -> (f64, f64) {
        (self.anchors[0].0, self.anchors[self.anchors.len() - 1].0)
    }

    pub fn gain_db(&self, freq_hz: f64) -> f64 {
        match self.interpolation {
            Interpolation::LinearDb => interpolate(&self.anchors, freq_hz),
        }
    }
}

impl Default for FilterProfile {
    fn default() -> Self {
        FilterProfile::new(DEFAULT_FILTER_ANCHORS.to_vec()).expect("default filter anchors")
    }
}

pub fn filter_response(profile: &FilterProfile, grid: &FrequencyGrid) -> ComplexResponse {
    let values = grid
        .samples()
        .iter()
        .map(|&f| Complex64::new(db_to_amplitude(profile.gain_db(f)), 0.0))
        .collect();
    ComplexResponse {
        grid: grid.clone(),
        values,
    }
}

/// Control voltage to gain map of the amplifier stage.
#[derive(Debug, Clone, PartialEq)]
pub struct AmpModel {
    anchors: Vec<(f64, f64)>,
}

impl AmpModel {
    pub const TABLE_HEADER: &'static str = "volts,gain_db";

    pub fn new(anchors: Vec<(f64, f64)>) -> Result<Self> {
        check_increasing(&anchors, "amplifier model")?;
        if anchors.windows(2).any(|w| w[1].1 < w[0].1) {
            return Err(Error::invalid(
                "amplifier gain must be non-decreasing in control voltage",
            ));
        }
        Ok(AmpModel { anchors })
    }

    pub fn from_table_str(text: &str) -> Result<Self> {
        Self::new(parse_table(text, Self::TABLE_HEADER)?)
    }

    pub fn from_table_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::new(read_table(path.as_ref(), Self::TABLE_HEADER)?)
    }

    pub fn anchors(&self) -> &[(f64, f64)] {
        &self.anchors
    }

    pub fn voltage_range(&self) -> (f64, f64) {
        (self.anchors[0].0, self.anchors[self.anchors.len() - 1].0)
    }

    pub fn check_voltage(&self, volts: f64) -> Result<()> {
        let (min, max) = self.voltage_range();
        if !(volts >= min && volts <= max) {
            return Err(Error::OutOfRange {
                what: "amplifier control voltage (V)",
                value: volts,
                min,
                max,
            });
        }
        Ok(())
    }
}

impl Default for AmpModel {
    fn default() -> Self {
        AmpModel::new(DEFAULT_AMP_ANCHORS.to_vec()).expect("default amplifier anchors")
    }
}

/// Gain at a control voltage; no extrapolation outside the anchor span.
pub fn amp_gain_db(model: &AmpModel, volts: f64) -> Result<f64> {
    model.check_voltage(volts)?;
    Ok(interpolate(&model.anchors, volts))
}

/// Linear phase error of the 90° bit across a band: `+deg_at_lo` at `f_lo`
/// falling to `deg_at_hi` at `f_hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseDrift {
    pub f_lo: f64,
    pub f_hi: f64,
    pub deg_at_lo: f64,
    pub deg_at_hi: f64,
}

impl Default for PhaseDrift {
    fn default() -> Self {
        PhaseDrift {
            f_lo: 2.8e9,
            f_hi: 3.2e9,
            deg_at_lo: 5.0,
            deg_at_hi: -5.0,
        }
    }
}

impl PhaseDrift {
    pub fn at(&self, freq_hz: f64) -> f64 {
        self.deg_at_lo
            + (self.deg_at_hi - self.deg_at_lo) * (freq_hz - self.f_lo) / (self.f_hi - self.f_lo)
    }
}

/// 2-bit element phase shifter: a 0/90° shifter followed by a 0/180° switch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseShifterModel {
    pub insertion_loss_db: f64,
    pub drift_enabled: bool,
    pub drift: PhaseDrift,
}

impl PhaseShifterModel {
    pub const STEP_DEG: f64 = 90.0;

    /// Lossless, drift-free shifter.
    pub fn ideal() -> Self {
        PhaseShifterModel {
            insertion_loss_db: 0.0,
            drift_enabled: false,
            drift: PhaseDrift::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.insertion_loss_db >= 0.0 && self.insertion_loss_db.is_finite()) {
            return Err(Error::invalid(format!(
                "phase shifter insertion loss must be >= 0 dB, got {}",
                self.insertion_loss_db
            )));
        }
        Ok(())
    }
}

impl Default for PhaseShifterModel {
    fn default() -> Self {
        PhaseShifterModel {
            insertion_loss_db: DEFAULT_PHASE_SHIFTER_LOSS_DB,
            ..Self::ideal()
        }
    }
}

/// Complex coefficient of phase state `code` (0..=3 ↔ 0°/90°/180°/270°).
pub fn phase_state_coefficient(model: &PhaseShifterModel, code: u8, freq_hz: f64) -> Result<Complex64> {
    if code > 3 {
        return Err(Error::invalid(format!("phase code {code} is not in 0..=3")));
    }
    let mut deg = code as f64 * PhaseShifterModel::STEP_DEG;
    // only the 0/90° section drifts; the 180° switch is a current inversion
    if model.drift_enabled && code & 1 == 1 {
        deg += model.drift.at(freq_hz);
    }
    Ok(Complex64::from_polar(
        db_to_amplitude(-model.insertion_loss_db),
        deg * PI / 180.0,
    ))
}

/// Shared filter/amplifier chain of one subarray.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainConfig {
    pub filter: FilterProfile,
    pub amp: AmpModel,
    pub amp_voltage: f64,
    pub fixed_loss_db: f64,
    /// `false` replaces filter and amplifiers by a through line.
    pub enabled: bool,
    pub bypass_loss_db: f64,
}

impl ChainConfig {
    /// Default AF-RIS chain at the given control voltage.
    pub fn amplifying(amp_voltage: f64) -> Self {
        ChainConfig {
            filter: FilterProfile::default(),
            amp: AmpModel::default(),
            amp_voltage,
            fixed_loss_db: DEFAULT_FIXED_LOSS_DB,
            enabled: true,
            bypass_loss_db: DEFAULT_BYPASS_LOSS_DB,
        }
    }

    /// Lossy-RIS reference: through line with the default bypass loss.
    pub fn bypass() -> Self {
        ChainConfig {
            enabled: false,
            ..Self::amplifying(7.0)
        }
    }

    /// Lossless through line; its response is all ones.
    pub fn identity() -> Self {
        ChainConfig {
            bypass_loss_db: 0.0,
            ..Self::bypass()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.amp.check_voltage(self.amp_voltage)?;
        for (name, v) in [
            ("fixed chain loss", self.fixed_loss_db),
            ("bypass loss", self.bypass_loss_db),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{name} must be >= 0 dB, got {v}")));
            }
        }
        Ok(())
    }

    /// Chain gain in dB at one frequency.
    pub fn gain_db(&self, freq_hz: f64) -> Result<f64> {
        self.validate()?;
        if !self.enabled {
            return Ok(-self.bypass_loss_db);
        }
        let amp = amp_gain_db(&self.amp, self.amp_voltage)?;
        Ok(self.filter.gain_db(freq_hz) + amp - self.fixed_loss_db)
    }

    pub fn coefficient(&self, freq_hz: f64) -> Result<Complex64> {
        Ok(Complex64::new(db_to_amplitude(self.gain_db(freq_hz)?), 0.0))
    }
}

pub fn chain_response(cfg: &ChainConfig, grid: &FrequencyGrid) -> Result<ComplexResponse> {
    cfg.validate()?;
    if !cfg.enabled {
        return Ok(ComplexResponse::flat_db(grid.clone(), -cfg.bypass_loss_db));
    }
    let amp = amp_gain_db(&cfg.amp, cfg.amp_voltage)?;
    let amp_and_loss = ComplexResponse::flat_db(grid.clone(), amp - cfg.fixed_loss_db);
    cascade(&filter_response(&cfg.filter, grid), &amp_and_loss)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn at(f: f64) -> FrequencyGrid {
        FrequencyGrid::single(f).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn empty_grid_rejected() {
        assert!(matches!(FrequencyGrid::new(vec![]), Err(Error::InvalidArgument(_))));
        assert!(FrequencyGrid::new(vec![1.0, 1.0]).is_err());
        assert!(FrequencyGrid::new(vec![-1.0]).is_err());
    }

    #[test]
    fn default_filter_points() {
        let p = FilterProfile::default();
        let r = filter_response(&p, &FrequencyGrid::new(vec![2.6e9, 3.0e9]).unwrap());
        let db = r.magnitude_db();
        assert!(close(db[0], -29.0, 1e-9));
        assert!(close(db[1], 0.0, 1e-12));
        assert!(r.values().iter().all(|v| v.im == 0.0));
    }

    #[test]
    fn two_anchor_midpoint() {
        let p = FilterProfile::new(vec![(1e9, 0.0), (2e9, -10.0)]).unwrap();
        assert!(close(p.gain_db(1.5e9), -5.0, 1e-12));
    }

    #[test]
    fn filter_clamps_outside_span() {
        let p = FilterProfile::default();
        assert_eq!(p.gain_db(2.0e9), -40.0);
        assert_eq!(p.gain_db(4.0e9), -35.0);
    }

    #[test]
    fn filter_profile_validation() {
        assert!(FilterProfile::new(vec![(1e9, 0.0)]).is_err());
        assert!(FilterProfile::new(vec![(1e9, 0.0), (0.5e9, -3.0)]).is_err());
        assert!(FilterProfile::new(vec![(1e9, -1.0), (2e9, -3.0)]).is_err());
    }

    #[test]
    fn amp_endpoints_and_midpoint() {
        let m = AmpModel::default();
        assert_eq!(amp_gain_db(&m, 1.0).unwrap(), -1.1);
        assert_eq!(amp_gain_db(&m, 7.0).unwrap(), 26.5);
        // -1.1 + 27.6 * 3 / 6
        assert!(close(amp_gain_db(&m, 4.0).unwrap(), 12.7, 1e-12));
    }

    #[test]
    fn amp_out_of_range_is_error() {
        let m = AmpModel::default();
        assert!(matches!(amp_gain_db(&m, 0.99), Err(Error::OutOfRange { .. })));
        assert!(matches!(amp_gain_db(&m, 9.0), Err(Error::OutOfRange { max, .. }) if max == 7.0));
    }

    #[test]
    fn amp_must_be_monotone() {
        assert!(AmpModel::new(vec![(1.0, 3.0), (2.0, 1.0)]).is_err());
    }

    #[test]
    fn table_loading() {
        let amp = AmpModel::from_table_str("volts,gain_db\n1,-1.1\n4,15\n7,26.5\n").unwrap();
        assert_eq!(amp_gain_db(&amp, 4.0).unwrap(), 15.0);
        let filt = FilterProfile::from_table_str("freq_hz,gain_db\n1e9,-20\n2e9,0\n3e9,-20\n").unwrap();
        assert_eq!(filt.gain_db(2e9), 0.0);
        let err = AmpModel::from_table_str("freq_hz,gain_db\n1,2\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
        let err = AmpModel::from_table_str("volts,gain_db\n1,2\n3;4\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }));
    }

    #[test]
    fn phase_states() {
        let ideal = PhaseShifterModel::ideal();
        let c0 = phase_state_coefficient(&ideal, 0, 3e9).unwrap();
        assert!(close(c0.re, 1.0, 1e-15) && close(c0.im, 0.0, 1e-15));
        let c2 = phase_state_coefficient(&ideal, 2, 3e9).unwrap();
        assert!(close(c2.re, -1.0, 1e-15) && close(c2.im, 0.0, 1e-15));

        let lossy = PhaseShifterModel {
            insertion_loss_db: 0.5,
            ..ideal
        };
        let c1 = phase_state_coefficient(&lossy, 1, 3e9).unwrap();
        assert!(close(c1.norm(), 0.944_060_876, 1e-9));
        assert!(close(c1.arg().to_degrees(), 90.0, 1e-12));

        assert!(phase_state_coefficient(&ideal, 4, 3e9).is_err());
    }

    #[test]
    fn drift_hits_endpoints_and_vanishes_at_center() {
        let m = PhaseShifterModel {
            drift_enabled: true,
            ..PhaseShifterModel::ideal()
        };
        let deg = |code, f| phase_state_coefficient(&m, code, f).unwrap().arg().to_degrees();
        assert!(close(deg(1, 2.8e9), 95.0, 1e-9));
        assert!(close(deg(1, 3.2e9), 85.0, 1e-9));
        assert!(close(deg(1, 3.0e9), 90.0, 1e-9));
        assert!(close(deg(2, 2.8e9), 180.0, 1e-9));
    }

    #[test]
    fn cascade_identity_and_db_sum() {
        let grid = FrequencyGrid::new(vec![2.9e9, 3.0e9, 3.1e9]).unwrap();
        let a = filter_response(&FilterProfile::default(), &grid);
        assert_eq!(cascade(&a, &ComplexResponse::identity(grid.clone())).unwrap(), a);

        let m3 = ComplexResponse::flat_db(grid.clone(), -3.0);
        let m6 = cascade(&m3, &m3).unwrap();
        assert!(m6.magnitude_db().iter().all(|&v| close(v, -6.0, 1e-12)));

        let amp = ComplexResponse::flat_db(at(3e9), 26.5);
        let f = filter_response(&FilterProfile::default(), &at(3e9));
        assert!(close(cascade(&f, &amp).unwrap().magnitude_db()[0], 26.5, 1e-12));

        let other = ComplexResponse::identity(at(1e9));
        assert!(matches!(cascade(&a, &other), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn chain_examples() {
        let cfg = ChainConfig {
            fixed_loss_db: 0.0,
            ..ChainConfig::amplifying(7.0)
        };
        let r = chain_response(&cfg, &FrequencyGrid::new(vec![2.6e9, 3.0e9]).unwrap()).unwrap();
        let db = r.magnitude_db();
        assert!(close(db[0], -2.5, 1e-9));
        assert!(close(db[1], 26.5, 1e-12));

        let ident = chain_response(&ChainConfig::identity(), &FrequencyGrid::new(vec![1e9, 2e9]).unwrap())
            .unwrap();
        assert!(ident.values().iter().all(|v| *v == Complex64::new(1.0, 0.0)));

        let bad = ChainConfig::amplifying(9.0);
        assert!(matches!(chain_response(&bad, &at(3e9)), Err(Error::OutOfRange { .. })));
    }

    fn response_strategy() -> impl Strategy<Value = Vec<(f64, f64)>> {
        prop::collection::vec((0.01f64..10.0, -3.2f64..3.2), 4)
    }

    fn make(grid: &FrequencyGrid, v: &[(f64, f64)]) -> ComplexResponse {
        ComplexResponse::new(grid.clone(), v.iter().map(|&(m, p)| Complex64::from_polar(m, p)).collect())
            .unwrap()
    }

    proptest! {
        #[test]
        fn cascade_commutes_and_associates(a in response_strategy(), b in response_strategy(), c in response_strategy()) {
            let grid = FrequencyGrid::new(vec![1e9, 2e9, 3e9, 4e9]).unwrap();
            let (a, b, c) = (make(&grid, &a), make(&grid, &b), make(&grid, &c));
            let ab = cascade(&a, &b).unwrap();
            let ba = cascade(&b, &a).unwrap();
            prop_assert_eq!(&ab, &ba);
            let left = cascade(&ab, &c).unwrap();
            let right = cascade(&a, &cascade(&b, &c).unwrap()).unwrap();
            for (x, y) in left.values().iter().zip(right.values()) {
                prop_assert!((x - y).norm() <= 1e-12 * x.norm().max(1.0));
            }
        }

        #[test]
        fn amp_monotone(mut gains in prop::collection::vec(-10.0f64..40.0, 2..6), v1 in 0.0f64..1.0, v2 in 0.0f64..1.0) {
            gains.sort_by(f64::total_cmp);
            let anchors: Vec<_> = gains.iter().enumerate().map(|(i, g)| (1.0 + i as f64, *g)).collect();
            let m = AmpModel::new(anchors.clone()).unwrap();
            for (v, g) in &anchors {
                prop_assert_eq!(amp_gain_db(&m, *v).unwrap(), *g);
            }
            let (lo, hi) = m.voltage_range();
            let (a, b) = (lo + v1.min(v2) * (hi - lo), lo + v1.max(v2) * (hi - lo));
            prop_assert!(amp_gain_db(&m, a).unwrap() <= amp_gain_db(&m, b).unwrap());
        }

        #[test]
        fn filter_reproduces_anchors(idx in 0usize..6) {
            let p = FilterProfile::default();
            let (f, g) = DEFAULT_FILTER_ANCHORS[idx];
            prop_assert_eq!(p.gain_db(f), g);
        }

        #[test]
        fn adjacent_codes_are_quarter_turns(f in 2.0e9f64..4.0e9, loss in 0.0f64..3.0) {
            let m = PhaseShifterModel { insertion_loss_db: loss, ..PhaseShifterModel::ideal() };
            for k in 1..4u8 {
                let a = phase_state_coefficient(&m, k, f).unwrap();
                let b = phase_state_coefficient(&m, k - 1, f).unwrap();
                let diff = (a / b).arg().to_degrees();
                prop_assert!((diff - 90.0).abs() < 1e-9);
                prop_assert!((a.norm() - b.norm()).abs() < 1e-15);
            }
        }

        #[test]
        fn bypass_is_flat(loss in 0.0f64..20.0) {
            let cfg = ChainConfig { bypass_loss_db: loss, ..ChainConfig::bypass() };
            let grid = FrequencyGrid::linspace_step(2.0e9, 4.0e9, 0.1e9).unwrap();
            let db = chain_response(&cfg, &grid).unwrap().magnitude_db();
            prop_assert!(db.iter().all(|v| *v == db[0]));
        }
    }
}
