//! Executes a scenario and writes its outputs.
//!
//! Every output is rendered in memory first and then written through a
//! temporary file in the output directory that is renamed into place, so a
//! failing run leaves no half-written files behind.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use crate::array::{angle_grid, gain_vs_plate, plate_field, scatter_pattern};
use crate::cli::scenario::{Scenario, SweepKind};
use crate::error::{Error, Result};
use crate::fmt::sig6;
use crate::link::{link_report, snr_spectrum, spectrum_csv, LinkReport};
use crate::metrics::{power_consumption, AmplitudeCurve, FilterMetrics, PowerBreakdown, PowerConfig};
use crate::modem::{simulate, ModemReport};
use crate::rfchain::{amplitude_to_db, FrequencyGrid};

/// Frequency grid of the per-voltage amplitude curves behind `metrics.csv`.
pub const METRICS_GRID_HZ: (f64, f64, f64) = (2.3e9, 3.7e9, 1e7);

pub const VOLTAGE_CSV_HEADER: &str = "voltage_v,gain_db";
pub const BER_CSV_HEADER: &str = "snr_db,ber,evm_percent,snr_estimate_db";

/// Power ledger of the whole surface: one chain per row when amplifying.
pub fn surface_power(scenario: &Scenario) -> Result<PowerBreakdown> {
    let elements = scenario.array.rows * scenario.array.cols;
    let cfg = if scenario.array.chain_enabled {
        PowerConfig {
            elements,
            chains: scenario.array.rows,
            ..PowerConfig::subarray()
        }
    } else {
        PowerConfig::lossy(elements)
    };
    power_consumption(&cfg)
}

pub fn summary_text(scenario: &Scenario, link: &LinkReport, power: &PowerBreakdown, modem: Option<&ModemReport>) -> String {
    let mut out = String::from("# resolved configuration\n");
    out.push_str(&scenario.to_text());
    out.push_str("# link\n");
    out.push_str(&link.to_text());
    out.push_str("# power\n");
    let _ = writeln!(out, "diodes_mw={}", sig6(power.diodes_mw));
    let _ = writeln!(out, "amplifiers_mw={}", sig6(power.amplifiers_mw));
    let _ = writeln!(out, "total_mw={}", sig6(power.total_mw));
    if let Some(m) = modem {
        out.push_str("# modem\n");
        out.push_str(&m.to_text());
    }
    out
}

/// Gain versus control voltage at the carrier.
pub fn voltage_csv(scenario: &Scenario, voltages: &[f64]) -> Result<String> {
    let mut out = format!("{VOLTAGE_CSV_HEADER}\n");
    for &v in voltages {
        let cfg = scenario.array_config_at(v)?;
        let g = gain_vs_plate(&cfg, scenario.array.target_deg, scenario.link.freq_hz)?;
        let _ = writeln!(out, "{},{}", sig6(v), sig6(g));
    }
    Ok(out)
}

/// Plate-relative gain at the target angle across the metrics grid.
pub fn amplitude_curve(scenario: &Scenario, voltage_v: f64) -> Result<AmplitudeCurve> {
    let (start, stop, step) = METRICS_GRID_HZ;
    let grid = FrequencyGrid::linspace_step(start, stop, step)?;
    let cfg = scenario.array_config_at(voltage_v)?;
    let values = grid
        .samples()
        .iter()
        .map(|&f| gain_vs_plate(&cfg, scenario.array.target_deg, f))
        .collect::<Result<Vec<_>>>()?;
    AmplitudeCurve::new(grid, values)
}

pub fn metrics_csv(scenario: &Scenario, voltages: &[f64]) -> Result<String> {
    let mut out = format!("{}\n", FilterMetrics::CSV_HEADER);
    for &v in voltages {
        let m = FilterMetrics::evaluate(&amplitude_curve(scenario, v)?, v, scenario.array.target_deg)?;
        out.push_str(&m.csv_row());
        out.push('\n');
    }
    Ok(out)
}

/// Normal-incidence pattern relative to the plate's broadside peak, with the
/// calibration offset applied; its maximum is the gain versus plate.
pub fn pattern_csv(scenario: &Scenario, angles: &[f64]) -> Result<String> {
    let cfg = scenario.array_config()?;
    let f = scenario.link.freq_hz;
    let plate_db = amplitude_to_db(plate_field(&cfg.geometry, 0.0, 0.0, f).norm());
    let pattern = scatter_pattern(&cfg, 0.0, angles, f)?.relative_to(plate_db - cfg.calibration_offset_db);
    Ok(pattern.to_csv())
}

pub fn ber_csv(scenario: &Scenario, snrs_db: &[f64]) -> Result<String> {
    let mut out = format!("{BER_CSV_HEADER}\n");
    for &snr in snrs_db {
        let r = simulate(scenario.modem.nbits, snr, scenario.modem.seed)?;
        let _ = writeln!(
            out,
            "{},{},{},{}",
            sig6(snr),
            sig6(r.ber),
            sig6(r.evm_percent),
            sig6(r.snr_estimate_db)
        );
    }
    Ok(out)
}

/// Renders every output file as (file name, contents).
pub fn render(scenario: &Scenario) -> Result<Vec<(&'static str, String)>> {
    let link_scenario = scenario.link_scenario()?;
    let link = link_report(&link_scenario)?;
    let power = surface_power(scenario)?;
    let mut files = Vec::new();
    let mut modem = None;
    match scenario.sweep {
        None => {
            let report = simulate(scenario.modem.nbits, link.snr_db, scenario.modem.seed)?;
            files.push(("constellation.csv", report.constellation_csv()));
            modem = Some(report);
        }
        Some(sweep) => {
            let points = sweep.points();
            match sweep.kind {
                SweepKind::Pattern => {
                    let angles = angle_grid(sweep.start, sweep.stop, sweep.step)?;
                    files.push(("pattern.csv", pattern_csv(scenario, &angles)?));
                }
                SweepKind::Spectrum => {
                    let grid = FrequencyGrid::new(points)?;
                    files.push(("spectrum.csv", spectrum_csv(&snr_spectrum(&link_scenario, &grid)?)));
                }
                SweepKind::Voltage => {
                    if !scenario.array.chain_enabled {
                        return Err(Error::invalid("a voltage sweep needs chain_enabled = true"));
                    }
                    files.push(("voltage.csv", voltage_csv(scenario, &points)?));
                    files.push(("metrics.csv", metrics_csv(scenario, &points)?));
                }
                SweepKind::Ber => files.push(("ber.csv", ber_csv(scenario, &points)?)),
            }
        }
    }
    files.insert(0, ("summary.txt", summary_text(scenario, &link, &power, modem.as_ref())));
    Ok(files)
}

fn write_atomic(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    tmp.write_all(contents.as_bytes()).map_err(|e| Error::io(tmp.path(), e))?;
    tmp.persist(&path).map_err(|e| Error::io(&path, e.error))?;
    Ok(path)
}

/// Runs the scenario and writes its files into `out_dir`, returning their paths.
pub fn run(scenario: &Scenario, out_dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let out_dir = out_dir.as_ref();
    let files = render(scenario)?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    files
        .iter()
        .map(|(name, contents)| {
            log::info!("writing {}", out_dir.join(name).display());
            write_atomic(out_dir, name, contents)
        })
        .collect()
}
