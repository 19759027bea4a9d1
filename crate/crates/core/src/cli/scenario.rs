//! Scenario files: sectioned `key = value` text.
//!
//! ```text
//! [array]
//! rows = 4
//! amp_voltage_v = 7
//! [link]
//! freq_hz = 3e9
//! [sweep]
//! kind = pattern
//! start = -90
//! stop = 90
//! step = 0.1
//! ```
//!
//! `#` starts a comment. Unknown sections and keys are errors. `[link]
//! freq_hz` is required; everything else has a default, and each default that
//! gets applied is reported back to the caller.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::array::{synthesize_code, ArrayConfig, ArrayGeometry, CALIBRATION_FREQ_HZ};
use crate::error::{Error, Result};
use crate::link::{
    LinkScenario, CASES, CASE_AMPLIFYING_VOLTAGE, CASE_LOSSY_VOLTAGE, DEFAULT_ANTENNA_CONSTANT_DB,
    DEFAULT_DISTANCE_M, DEFAULT_EVM_FLOOR_DB, DEFAULT_RX_NOISE_DBM, DEFAULT_TX_POWER_DBM,
};
use crate::rfchain::{AmpModel, ChainConfig};

pub const DEFAULT_NBITS: usize = 1_000_000;
pub const DEFAULT_SEED: u64 = 7;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepKind {
    Pattern,
    Spectrum,
    Voltage,
    Ber,
}

impl SweepKind {
    pub fn name(self) -> &'static str {
        match self {
            SweepKind::Pattern => "pattern",
            SweepKind::Spectrum => "spectrum",
            SweepKind::Voltage => "voltage",
            SweepKind::Ber => "ber",
        }
    }

    /// Default (start, stop, step): degrees, Hz, volts or dB.
    pub fn default_range(self) -> (f64, f64, f64) {
        match self {
            SweepKind::Pattern => (-90.0, 90.0, 0.1),
            SweepKind::Spectrum => (2.3e9, 3.7e9, 1e7),
            SweepKind::Voltage => (1.0, 7.0, 1.0),
            SweepKind::Ber => (0.0, 12.0, 1.0),
        }
    }
}

impl FromStr for SweepKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "pattern" => Ok(SweepKind::Pattern),
            "spectrum" => Ok(SweepKind::Spectrum),
            "voltage" => Ok(SweepKind::Voltage),
            "ber" => Ok(SweepKind::Ber),
            other => Err(format!("unknown sweep kind `{other}` (pattern | spectrum | voltage | ber)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sweep {
    pub kind: SweepKind,
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Sweep {
    pub fn with_defaults(kind: SweepKind) -> Self {
        let (start, stop, step) = kind.default_range();
        Sweep { kind, start, stop, step }
    }

    /// Sweep points computed by index.
    pub fn points(&self) -> Vec<f64> {
        let count = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        (0..count).map(|i| self.start + i as f64 * self.step).collect()
    }

    fn validate(&self) -> std::result::Result<(), String> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(format!("step must be positive, got {}", self.step));
        }
        if !(self.stop >= self.start && self.start.is_finite() && self.stop.is_finite()) {
            return Err(format!("empty range {}..{}", self.start, self.stop));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArraySection {
    pub rows: usize,
    pub cols: usize,
    pub spacing_m: f64,
    pub q: f64,
    pub amp_voltage_v: f64,
    pub chain_enabled: bool,
    pub target_deg: f64,
    /// Frequency at which the steering codes are synthesized.
    pub design_freq_hz: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkSection {
    pub freq_hz: f64,
    pub tx_power_dbm: f64,
    pub d1_m: f64,
    pub d2_m: f64,
    pub rx_noise_dbm: f64,
    pub evm_floor_db: f64,
    pub rx_angle_deg: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModemSection {
    pub nbits: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub array: ArraySection,
    pub link: LinkSection,
    pub modem: ModemSection,
    pub sweep: Option<Sweep>,
}

impl Default for Scenario {
    /// Case 3 of the relay experiments.
    fn default() -> Self {
        Scenario::from_case(3).expect("case 3 preset")
    }
}

impl Scenario {
    pub fn from_case(case_id: u8) -> Result<Self> {
        let &(target, rx, amplifying, freq) = case_id
            .checked_sub(1)
            .and_then(|i| CASES.get(i as usize))
            .ok_or_else(|| Error::invalid(format!("case {case_id} is not in 1..=5")))?;
        let geometry = ArrayGeometry::default();
        Ok(Scenario {
            array: ArraySection {
                rows: geometry.rows,
                cols: geometry.cols,
                spacing_m: geometry.spacing_m,
                q: 0.0,
                amp_voltage_v: if amplifying { CASE_AMPLIFYING_VOLTAGE } else { CASE_LOSSY_VOLTAGE },
                chain_enabled: amplifying,
                target_deg: target,
                design_freq_hz: CALIBRATION_FREQ_HZ,
            },
            link: LinkSection {
                freq_hz: freq,
                tx_power_dbm: DEFAULT_TX_POWER_DBM,
                d1_m: DEFAULT_DISTANCE_M,
                d2_m: DEFAULT_DISTANCE_M,
                rx_noise_dbm: DEFAULT_RX_NOISE_DBM,
                evm_floor_db: DEFAULT_EVM_FLOOR_DB,
                rx_angle_deg: rx,
            },
            modem: ModemSection {
                nbits: DEFAULT_NBITS,
                seed: DEFAULT_SEED,
            },
            sweep: None,
        })
    }

    /// Array configuration with codes synthesized for the target.
    pub fn array_config(&self) -> Result<ArrayConfig> {
        self.array_config_at(self.array.amp_voltage_v)
    }

    pub fn array_config_at(&self, amp_voltage_v: f64) -> Result<ArrayConfig> {
        let a = &self.array;
        let geometry = ArrayGeometry::new(a.rows, a.cols, a.spacing_m)?;
        let codes = synthesize_code(&geometry, a.target_deg, a.design_freq_hz)?;
        let chain = ChainConfig {
            enabled: a.chain_enabled,
            ..ChainConfig::amplifying(amp_voltage_v)
        };
        let mut cfg = ArrayConfig::calibrated(geometry, codes, chain)?;
        cfg.element_exponent = a.q;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn link_scenario(&self) -> Result<LinkScenario> {
        let l = &self.link;
        let s = LinkScenario {
            freq_hz: l.freq_hz,
            tx_power_dbm: l.tx_power_dbm,
            d1_m: l.d1_m,
            d2_m: l.d2_m,
            rx_noise_dbm: l.rx_noise_dbm,
            evm_floor_db: l.evm_floor_db,
            array: self.array_config()?,
            rx_angle_deg: l.rx_angle_deg,
            target_deg: self.array.target_deg,
            antenna_constant_db: DEFAULT_ANTENNA_CONSTANT_DB,
        };
        s.validate()?;
        Ok(s)
    }

    /// Fully resolved configuration in scenario-file syntax.
    pub fn to_text(&self) -> String {
        let a = &self.array;
        let l = &self.link;
        let mut out = String::new();
        let _ = writeln!(out, "[array]");
        let _ = writeln!(out, "rows = {}", a.rows);
        let _ = writeln!(out, "cols = {}", a.cols);
        let _ = writeln!(out, "spacing_m = {}", a.spacing_m);
        let _ = writeln!(out, "q = {}", a.q);
        let _ = writeln!(out, "amp_voltage_v = {}", a.amp_voltage_v);
        let _ = writeln!(out, "chain_enabled = {}", a.chain_enabled);
        let _ = writeln!(out, "target_deg = {}", a.target_deg);
        let _ = writeln!(out, "design_freq_hz = {}", a.design_freq_hz);
        let _ = writeln!(out, "[link]");
        let _ = writeln!(out, "freq_hz = {}", l.freq_hz);
        let _ = writeln!(out, "tx_power_dbm = {}", l.tx_power_dbm);
        let _ = writeln!(out, "d1_m = {}", l.d1_m);
        let _ = writeln!(out, "d2_m = {}", l.d2_m);
        let _ = writeln!(out, "rx_noise_dbm = {}", l.rx_noise_dbm);
        let _ = writeln!(out, "evm_floor_db = {}", l.evm_floor_db);
        let _ = writeln!(out, "rx_angle_deg = {}", l.rx_angle_deg);
        let _ = writeln!(out, "[modem]");
        let _ = writeln!(out, "nbits = {}", self.modem.nbits);
        let _ = writeln!(out, "seed = {}", self.modem.seed);
        if let Some(s) = &self.sweep {
            let _ = writeln!(out, "[sweep]");
            let _ = writeln!(out, "kind = {}", s.kind.name());
            let _ = writeln!(out, "start = {}", s.start);
            let _ = writeln!(out, "stop = {}", s.stop);
            let _ = writeln!(out, "step = {}", s.step);
        }
        out
    }
}

/// A parsed scenario plus the defaults that were filled in.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedScenario {
    pub scenario: Scenario,
    pub applied_defaults: Vec<String>,
}

const KEYS: &[(&str, &[&str])] = &[
    (
        "array",
        &["rows", "cols", "spacing_m", "q", "amp_voltage_v", "chain_enabled", "target_deg", "design_freq_hz"],
    ),
    (
        "link",
        &["freq_hz", "tx_power_dbm", "d1_m", "d2_m", "rx_noise_dbm", "evm_floor_db", "rx_angle_deg"],
    ),
    ("modem", &["nbits", "seed"]),
    ("sweep", &["kind", "start", "stop", "step"]),
];

struct Entry {
    line: usize,
    value: String,
}

struct Resolver {
    entries: BTreeMap<(String, String), Entry>,
    section_lines: BTreeMap<String, usize>,
    applied: Vec<String>,
}

impl Resolver {
    fn get<T>(&mut self, section: &str, key: &str, default: T) -> Result<T>
    where
        T: FromStr + std::fmt::Display,
        T::Err: std::fmt::Display,
    {
        match self.entries.get(&(section.to_string(), key.to_string())) {
            Some(e) => e.value.parse().map_err(|err| Error::Parse {
                line: e.line,
                key: key.to_string(),
                message: format!("cannot parse `{}`: {err}", e.value),
            }),
            None => {
                self.applied.push(format!("[{section}] {key} = {default}"));
                Ok(default)
            }
        }
    }

    fn require<T: FromStr>(&self, section: &str, key: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        match self.entries.get(&(section.to_string(), key.to_string())) {
            Some(e) => e.value.parse().map_err(|err| Error::Parse {
                line: e.line,
                key: key.to_string(),
                message: format!("cannot parse `{}`: {err}", e.value),
            }),
            None => Err(Error::Parse {
                line: self.section_lines.get(section).copied().unwrap_or(0),
                key: key.to_string(),
                message: format!("required key missing from [{section}]"),
            }),
        }
    }

    fn line_of(&self, section: &str, key: &str) -> usize {
        self.entries
            .get(&(section.to_string(), key.to_string()))
            .map(|e| e.line)
            .unwrap_or(0)
    }

    fn check(&self, ok: bool, section: &str, key: &str, message: impl Into<String>) -> Result<()> {
        if ok {
            return Ok(());
        }
        Err(Error::Parse {
            line: self.line_of(section, key),
            key: key.to_string(),
            message: message.into(),
        })
    }
}

pub fn parse_scenario_str(text: &str) -> Result<ParsedScenario> {
    let mut entries = BTreeMap::new();
    let mut section_lines = BTreeMap::new();
    let mut section: Option<String> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            let name = name.trim();
            if !KEYS.iter().any(|(s, _)| *s == name) {
                return Err(Error::Parse {
                    line: line_no,
                    key: format!("[{name}]"),
                    message: "unknown section".into(),
                });
            }
            section_lines.insert(name.to_string(), line_no);
            section = Some(name.to_string());
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
            line: line_no,
            key: line.to_string(),
            message: "expected `key = value`".into(),
        })?;
        let key = key.trim();
        let Some(sec) = &section else {
            return Err(Error::Parse {
                line: line_no,
                key: key.to_string(),
                message: "key outside of any section".into(),
            });
        };
        let known = KEYS.iter().find(|(s, _)| s == sec).map(|(_, k)| *k).unwrap_or(&[]);
        if !known.contains(&key) {
            return Err(Error::Parse {
                line: line_no,
                key: key.to_string(),
                message: format!("unknown key in [{sec}]"),
            });
        }
        let previous = entries.insert(
            (sec.clone(), key.to_string()),
            Entry {
                line: line_no,
                value: value.trim().to_string(),
            },
        );
        if previous.is_some() {
            return Err(Error::Parse {
                line: line_no,
                key: key.to_string(),
                message: format!("duplicate key in [{sec}]"),
            });
        }
    }

    let mut r = Resolver {
        entries,
        section_lines,
        applied: Vec::new(),
    };
    let d = Scenario::default();

    let freq_hz: f64 = r.require("link", "freq_hz")?;
    let array = ArraySection {
        rows: r.get("array", "rows", d.array.rows)?,
        cols: r.get("array", "cols", d.array.cols)?,
        spacing_m: r.get("array", "spacing_m", d.array.spacing_m)?,
        q: r.get("array", "q", d.array.q)?,
        amp_voltage_v: r.get("array", "amp_voltage_v", d.array.amp_voltage_v)?,
        chain_enabled: r.get("array", "chain_enabled", d.array.chain_enabled)?,
        target_deg: r.get("array", "target_deg", d.array.target_deg)?,
        design_freq_hz: r.get("array", "design_freq_hz", d.array.design_freq_hz)?,
    };
    let link = LinkSection {
        freq_hz,
        tx_power_dbm: r.get("link", "tx_power_dbm", d.link.tx_power_dbm)?,
        d1_m: r.get("link", "d1_m", d.link.d1_m)?,
        d2_m: r.get("link", "d2_m", d.link.d2_m)?,
        rx_noise_dbm: r.get("link", "rx_noise_dbm", d.link.rx_noise_dbm)?,
        evm_floor_db: r.get("link", "evm_floor_db", d.link.evm_floor_db)?,
        rx_angle_deg: r.get("link", "rx_angle_deg", d.link.rx_angle_deg)?,
    };
    let modem = ModemSection {
        nbits: r.get("modem", "nbits", d.modem.nbits)?,
        seed: r.get("modem", "seed", d.modem.seed)?,
    };
    let sweep = if r.section_lines.contains_key("sweep") {
        let kind: SweepKind = r.require("sweep", "kind")?;
        Some(Sweep {
            kind,
            start: r.require("sweep", "start")?,
            stop: r.require("sweep", "stop")?,
            step: r.require("sweep", "step")?,
        })
    } else {
        None
    };

    r.check(array.rows >= 1, "array", "rows", "must be >= 1")?;
    r.check(array.cols >= 1, "array", "cols", "must be >= 1")?;
    r.check(array.spacing_m > 0.0, "array", "spacing_m", "must be > 0")?;
    r.check(array.q >= 0.0, "array", "q", "must be >= 0")?;
    let (vmin, vmax) = AmpModel::default().voltage_range();
    r.check(
        array.amp_voltage_v >= vmin && array.amp_voltage_v <= vmax,
        "array",
        "amp_voltage_v",
        format!(
            "{} V is outside the amplifier model bounds [{vmin}, {vmax}] V",
            array.amp_voltage_v
        ),
    )?;
    r.check(array.target_deg.abs() < 90.0, "array", "target_deg", "must satisfy |target| < 90")?;
    r.check(array.design_freq_hz > 0.0, "array", "design_freq_hz", "must be > 0")?;
    r.check(link.freq_hz > 0.0, "link", "freq_hz", "must be > 0")?;
    r.check(link.d1_m > 0.0, "link", "d1_m", "must be > 0")?;
    r.check(link.d2_m > 0.0, "link", "d2_m", "must be > 0")?;
    r.check(link.evm_floor_db > 0.0, "link", "evm_floor_db", "must be > 0")?;
    r.check(link.rx_noise_dbm.is_finite(), "link", "rx_noise_dbm", "must be finite")?;
    r.check(link.rx_angle_deg.abs() <= 90.0, "link", "rx_angle_deg", "must lie in [-90, 90]")?;
    r.check(
        modem.nbits >= 2 && modem.nbits.is_multiple_of(2),
        "modem",
        "nbits",
        "must be even and >= 2",
    )?;
    if let Some(s) = &sweep {
        if let Err(message) = s.validate() {
            r.check(false, "sweep", "step", message)?;
        }
    }

    for note in &r.applied {
        log::info!("default applied: {note}");
    }
    Ok(ParsedScenario {
        scenario: Scenario {
            array,
            link,
            modem,
            sweep,
        },
        applied_defaults: r.applied,
    })
}

pub fn parse_scenario(path: impl AsRef<Path>) -> Result<ParsedScenario> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_scenario_str(&text)
}
