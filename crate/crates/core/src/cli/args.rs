use std::path::PathBuf;

use clap::Parser;

use crate::cli::run::run;
use crate::cli::scenario::{parse_scenario, Scenario, Sweep, SweepKind};
use crate::error::{Error, Result};

/// Deterministic AF-RIS link and pattern simulator.
#[derive(Debug, Clone, Parser)]
#[command(name = "afris", version)]
pub struct Args {
    /// Scenario file (sectioned key = value).
    #[arg(long, value_name = "PATH", conflicts_with = "case")]
    pub scenario: Option<PathBuf>,

    /// Relay experiment preset.
    #[arg(long, value_name = "1..5", value_parser = clap::value_parser!(u8).range(1..=5))]
    pub case: Option<u8>,

    /// Sweep to run: pattern, spectrum, voltage or ber.
    #[arg(long, value_name = "KIND")]
    pub sweep: Option<SweepKind>,

    /// Sweep range `start..stop`, replacing the default for the kind.
    #[arg(value_name = "RANGE", requires = "sweep", allow_hyphen_values = true)]
    pub range: Option<String>,

    /// Sweep step.
    #[arg(long, requires = "sweep")]
    pub step: Option<f64>,

    /// Coded steering angle in degrees.
    #[arg(long, value_name = "DEG", allow_hyphen_values = true)]
    pub target: Option<f64>,

    #[arg(long)]
    pub seed: Option<u64>,

    #[arg(long)]
    pub nbits: Option<usize>,

    /// Output directory.
    #[arg(long, value_name = "DIR", default_value = "out")]
    pub out: PathBuf,
}

fn parse_range(text: &str) -> Result<(f64, f64)> {
    let bad = || Error::invalid(format!("range `{text}` is not of the form start..stop"));
    let (a, b) = text.split_once("..").ok_or_else(bad)?;
    let a: f64 = a.trim().parse().map_err(|_| bad())?;
    let b: f64 = b.trim().parse().map_err(|_| bad())?;
    Ok((a, b))
}

impl Args {
    /// Base scenario (file, preset or default) with flag overrides applied.
    pub fn resolve(&self) -> Result<Scenario> {
        let mut s = match (&self.scenario, self.case) {
            (Some(path), _) => parse_scenario(path)?.scenario,
            (None, Some(n)) => Scenario::from_case(n)?,
            (None, None) => Scenario::default(),
        };
        if let Some(t) = self.target {
            if !(t.abs() < 90.0) {
                return Err(Error::invalid(format!("target must satisfy |target| < 90°, got {t}")));
            }
            s.array.target_deg = t;
        }
        if let Some(seed) = self.seed {
            s.modem.seed = seed;
        }
        if let Some(n) = self.nbits {
            if n < 2 || !n.is_multiple_of(2) {
                return Err(Error::invalid(format!("nbits must be even and >= 2, got {n}")));
            }
            s.modem.nbits = n;
        }
        if let Some(kind) = self.sweep {
            let mut sweep = match s.sweep {
                Some(existing) if existing.kind == kind => existing,
                _ => Sweep::with_defaults(kind),
            };
            if let Some(r) = &self.range {
                (sweep.start, sweep.stop) = parse_range(r)?;
            }
            if let Some(step) = self.step {
                sweep.step = step;
            }
            if !(sweep.step > 0.0 && sweep.stop >= sweep.start) {
                return Err(Error::invalid(format!(
                    "empty sweep {}..{} step {}",
                    sweep.start, sweep.stop, sweep.step
                )));
            }
            s.sweep = Some(sweep);
        }
        Ok(s)
    }
}

/// Resolves the arguments, runs, and returns the written files.
pub fn execute(args: &Args) -> Result<Vec<PathBuf>> {
    let scenario = args.resolve()?;
    run(&scenario, &args.out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(v: &[&str]) -> Args {
        Args::try_parse_from(std::iter::once("afris").chain(v.iter().copied())).unwrap()
    }

    #[test]
    fn range_and_step_override_defaults() {
        let s = args(&["--sweep", "voltage", "2..6", "--step", "2"]).resolve().unwrap();
        assert_eq!(s.sweep.unwrap().points(), [2.0, 4.0, 6.0]);
        let s = args(&["--sweep", "pattern", "-60..60"]).resolve().unwrap();
        assert_eq!(s.sweep.unwrap().start, -60.0);
    }

    #[test]
    fn flag_conflicts_rejected() {
        let parse = |v: &[&str]| Args::try_parse_from(std::iter::once("afris").chain(v.iter().copied()));
        assert!(parse(&["--case", "3", "--scenario", "x"]).is_err());
        assert!(parse(&["--case", "6"]).is_err());
        assert!(parse(&["--sweep", "sideways"]).is_err());
        assert!(parse(&["1..7"]).is_err());
        assert!(args(&["--nbits", "3"]).resolve().is_err());
        assert!(args(&["--sweep", "ber", "5..1"]).resolve().is_err());
    }

    #[test]
    fn case_preset_with_overrides() {
        let s = args(&["--case", "1", "--seed", "11", "--nbits", "1000"]).resolve().unwrap();
        let mut expected = Scenario::from_case(1).unwrap();
        expected.modem.seed = 11;
        expected.modem.nbits = 1000;
        assert_eq!(s, expected);
    }
}
