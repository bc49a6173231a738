//! Scenario configuration: a flat TOML file, overridden key by key by the
//! command-line flags.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use clap::Args;
use serde::Deserialize;

use qbattery::{build_multimode, build_single_mode, BatteryChargerModel, BatteryInit, OptBudget, ReportOptions};

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    fn into_vec(self) -> Vec<T> {
        match self {
            OneOrMany::One(x) => vec![x],
            OneOrMany::Many(v) => v,
        }
    }
}

/// Keys accepted in the config file. Every key is optional.
#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub dim: Option<OneOrMany<usize>>,
    pub omega: Option<OneOrMany<f64>>,
    pub g: Option<f64>,
    pub delta: Option<f64>,
    pub init: Option<String>,
    pub theta: Option<f64>,
    pub phi: Option<f64>,
    pub cycles: Option<usize>,
    pub tgrid: Option<String>,
    pub betas: Option<Vec<f64>>,
    pub r0grid: Option<String>,
    pub alphagrid: Option<String>,
    pub gamma: Option<f64>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub gapless_threshold: Option<f64>,
    pub alpha_points: Option<usize>,
    pub gamma_points: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}

/// Flags shared by every subcommand; each one overrides the config key of
/// the same name.
#[derive(Debug, Default, Clone, Args)]
pub struct Flags {
    /// Config file (flat TOML keys)
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Battery mode dimension(s), comma separated for several modes
    #[arg(long, global = true, value_delimiter = ',')]
    pub dim: Option<Vec<usize>>,
    /// Battery mode frequency (or frequencies, comma separated)
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    pub omega: Option<Vec<String>>,
    /// Coupling strength
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub g: Option<String>,
    /// Detuning: each charger transition sits at omega - delta
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub delta: Option<String>,
    /// Battery preparation: ground | trunc2:r0 | trunc3:r0,r1 | thermal:beta
    #[arg(long, global = true)]
    pub init: Option<String>,
    /// Charger superposition angle (double-mode)
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub theta: Option<String>,
    /// Charger superposition phase (double-mode)
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub phi: Option<String>,
    /// Maximum number of charging cycles
    #[arg(long, global = true)]
    pub cycles: Option<usize>,
    /// Time grid lo:hi:n (inclusive; `pi` is understood, e.g. 0:2pi:401)
    #[arg(long, global = true)]
    pub tgrid: Option<String>,
    /// Inverse temperatures for beta-sweep, comma separated
    #[arg(long, global = true, value_delimiter = ',')]
    pub betas: Option<Vec<f64>>,
    /// r0 grid lo:hi:n for landscape
    #[arg(long, global = true)]
    pub r0grid: Option<String>,
    /// Measurement-angle grid lo:hi:n for landscape
    #[arg(long, global = true)]
    pub alphagrid: Option<String>,
    /// Measurement phase for landscape
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub gamma: Option<String>,
    /// Seed for the random starts of qudit basis searches
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output CSV path (stdout when absent)
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    /// Gap at or below which a state counts as gapless
    #[arg(long, global = true)]
    pub gapless_threshold: Option<f64>,
}

/// Fully resolved scenario.
#[derive(Debug, Clone)]
pub struct Settings {
    pub dims: Option<Vec<usize>>,
    pub omegas: Option<Vec<f64>>,
    pub g: f64,
    pub delta: f64,
    pub init: BatteryInit<f64>,
    pub theta: f64,
    pub phi: f64,
    pub cycles: usize,
    pub tgrid: Grid,
    pub betas: Vec<f64>,
    pub r0grid: Grid,
    pub alphagrid: Grid,
    pub gamma: f64,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub gapless_threshold: f64,
    pub alpha_points: usize,
    pub gamma_points: usize,
}

pub const DEFAULT_BETAS: [f64; 10] = [0.5, 1.0, 1.5, 1.65, 1.7, 2.0, 3.0, 5.0, 10.0, 50.0];

impl Settings {
    pub fn resolve(flags: &Flags) -> Result<Self> {
        let file = match &flags.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        let num = |flag: &Option<String>, key: Option<f64>, default: f64| -> Result<f64> {
            match flag {
                Some(s) => parse_number(s),
                None => Ok(key.unwrap_or(default)),
            }
        };
        let omegas = match &flags.omega {
            Some(v) => Some(v.iter().map(|s| parse_number(s)).collect::<Result<Vec<_>>>()?),
            None => file.omega.map(OneOrMany::into_vec),
        };
        let init = flags.init.clone().or(file.init).unwrap_or_else(|| "ground".into());
        let grid = |flag: &Option<String>, key: Option<String>, default: &str| -> Result<Grid> {
            Grid::parse(flag.as_deref().or(key.as_deref()).unwrap_or(default))
        };
        let s = Settings {
            dims: flags.dim.clone().or(file.dim.map(OneOrMany::into_vec)),
            omegas,
            g: num(&flags.g, file.g, 1.0)?,
            delta: num(&flags.delta, file.delta, 0.0)?,
            init: parse_init(&init)?,
            theta: num(&flags.theta, file.theta, PI / 2.0)?,
            phi: num(&flags.phi, file.phi, 0.0)?,
            cycles: flags.cycles.or(file.cycles).unwrap_or(100),
            tgrid: grid(&flags.tgrid, file.tgrid, "0:2pi:401")?,
            betas: flags.betas.clone().or(file.betas).unwrap_or_else(|| DEFAULT_BETAS.to_vec()),
            r0grid: grid(&flags.r0grid, file.r0grid, "0.5:1:51")?,
            alphagrid: grid(&flags.alphagrid, file.alphagrid, "0:pi:37")?,
            gamma: num(&flags.gamma, file.gamma, 0.0)?,
            seed: flags.seed.or(file.seed).unwrap_or(OptBudget::default().seed),
            out: flags.out.clone().or(file.out),
            gapless_threshold: flags
                .gapless_threshold
                .or(file.gapless_threshold)
                .unwrap_or(qbattery::DEFAULT_GAPLESS_THRESHOLD),
            alpha_points: file.alpha_points.unwrap_or(OptBudget::default().alpha_points),
            gamma_points: file.gamma_points.unwrap_or(OptBudget::default().gamma_points),
        };
        s.check()?;
        Ok(s)
    }

    fn check(&self) -> Result<()> {
        for (name, v) in [("g", self.g), ("delta", self.delta), ("theta", self.theta), ("phi", self.phi), ("gamma", self.gamma)] {
            ensure!(v.is_finite(), "{name} must be finite");
        }
        ensure!(self.g > 0.0, "g must be positive, got {}", self.g);
        ensure!(self.cycles >= 1, "cycles must be at least 1");
        ensure!(
            self.gapless_threshold.is_finite() && self.gapless_threshold >= 0.0,
            "gapless threshold must be a non-negative number"
        );
        ensure!(self.alpha_points >= 2 && self.gamma_points >= 1, "alpha_points >= 2 and gamma_points >= 1 required");
        ensure!(
            self.betas.iter().all(|b| b.is_finite() && *b > 0.0),
            "betas must be positive"
        );
        Ok(())
    }

    pub fn report_options(&self) -> ReportOptions {
        ReportOptions {
            budget: OptBudget {
                alpha_points: self.alpha_points,
                gamma_points: self.gamma_points,
                seed: self.seed,
                ..OptBudget::default()
            },
            gapless_threshold: self.gapless_threshold,
        }
    }

    /// Single-mode battery of dimension `dim` (default 11) at `omega`
    /// (default 1), charged by a qubit at `omega - delta`.
    pub fn single_model(&self) -> Result<BatteryChargerModel> {
        let d = match self.dims.as_deref() {
            None => 11,
            Some([d]) => *d,
            Some(v) => bail!("a single-mode run takes one dimension, got {v:?}"),
        };
        let omega = self.single_omega()?;
        Ok(build_single_mode(d, omega, omega - self.delta, self.g)?)
    }

    pub fn single_omega(&self) -> Result<f64> {
        match self.omegas.as_deref() {
            None => Ok(1.0),
            Some([w]) => Ok(*w),
            Some(v) => bail!("a single-mode run takes one frequency, got {v:?}"),
        }
    }

    /// Two battery modes (default dimensions 3,3 and frequencies 0.8,1.0)
    /// with a three-level charger whose transitions sit at `omega_i - delta`.
    pub fn double_model(&self) -> Result<BatteryChargerModel> {
        let dims = match self.dims.as_deref() {
            None => vec![3, 3],
            Some([d]) => vec![*d, *d],
            Some([a, b]) => vec![*a, *b],
            Some(v) => bail!("double-mode takes one or two dimensions, got {v:?}"),
        };
        let omegas = match self.omegas.as_deref() {
            None => vec![0.8, 1.0],
            Some([a, b]) => vec![*a, *b],
            Some(v) => bail!("double-mode needs two frequencies (e.g. --omega 0.8,1.0), got {v:?}"),
        };
        let levels = [0.0, omegas[0] - self.delta, omegas[1] - self.delta];
        Ok(build_multimode(&dims, &omegas, &levels, self.g)?)
    }
}

/// Number with optional `pi`: `1.5`, `pi`, `2pi`, `0.5*pi`, `pi/4`, `-pi/2`.
pub fn parse_number(s: &str) -> Result<f64> {
    let s = s.trim();
    let Some(at) = s.find("pi") else {
        return s.parse::<f64>().with_context(|| format!("not a number: {s:?}"));
    };
    let (pre, post) = (s[..at].trim_end_matches('*'), &s[at + 2..]);
    let factor = match pre {
        "" | "+" => 1.0,
        "-" => -1.0,
        p => p.parse::<f64>().with_context(|| format!("not a number: {s:?}"))?,
    };
    let divisor = match post {
        "" => 1.0,
        d => d
            .strip_prefix('/')
            .and_then(|d| d.parse::<f64>().ok())
            .with_context(|| format!("not a number: {s:?}"))?,
    };
    Ok(factor * PI / divisor)
}

/// Inclusive uniform grid `lo:hi:n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl Grid {
    pub fn parse(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let [lo, hi, n] = parts.as_slice() else {
            bail!("grid must be lo:hi:n, got {s:?}");
        };
        let g = Grid {
            lo: parse_number(lo)?,
            hi: parse_number(hi)?,
            n: n.trim().parse().with_context(|| format!("grid count in {s:?}"))?,
        };
        ensure!(g.n >= 1, "grid {s:?} needs at least one point");
        ensure!(g.lo.is_finite() && g.hi.is_finite() && g.hi >= g.lo, "grid {s:?} needs finite lo <= hi");
        Ok(g)
    }

    pub fn points(&self) -> Vec<f64> {
        if self.n == 1 {
            return vec![self.lo];
        }
        let step = (self.hi - self.lo) / (self.n - 1) as f64;
        (0..self.n)
            .map(|k| if k + 1 == self.n { self.hi } else { self.lo + step * k as f64 })
            .collect()
    }
}

pub fn parse_init(s: &str) -> Result<BatteryInit<f64>> {
    let (kind, arg) = s.split_once(':').unwrap_or((s, ""));
    let nums = || -> Result<Vec<f64>> { arg.split(',').map(parse_number).collect() };
    Ok(match kind.trim() {
        "ground" if arg.is_empty() => BatteryInit::Ground,
        "trunc2" => match nums()?.as_slice() {
            [r0] => BatteryInit::Truncated(vec![*r0, 1.0 - r0]),
            _ => bail!("trunc2 takes one population: trunc2:r0"),
        },
        "trunc3" => match nums()?.as_slice() {
            [r0, r1] => BatteryInit::Truncated(vec![*r0, *r1, 1.0 - r0 - r1]),
            _ => bail!("trunc3 takes two populations: trunc3:r0,r1"),
        },
        "thermal" => match nums()?.as_slice() {
            [beta] => BatteryInit::Thermal { beta: *beta },
            _ => bail!("thermal takes one inverse temperature: thermal:beta"),
        },
        _ => bail!("unknown battery init {s:?} (expected ground | trunc2:r0 | trunc3:r0,r1 | thermal:beta)"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_with_pi() {
        assert_eq!(parse_number("1.5").unwrap(), 1.5);
        assert_eq!(parse_number("pi").unwrap(), PI);
        assert_eq!(parse_number("2pi").unwrap(), 2.0 * PI);
        assert_eq!(parse_number("0.5*pi").unwrap(), 0.5 * PI);
        assert_eq!(parse_number("-pi/2").unwrap(), -PI / 2.0);
        assert!(parse_number("pie").is_err());
        assert!(parse_number("x").is_err());
    }

    #[test]
    fn grids_are_inclusive() {
        let g = Grid::parse("0:2pi:401").unwrap();
        let p = g.points();
        assert_eq!(p.len(), 401);
        assert_eq!(p[0], 0.0);
        assert_eq!(p[400], 2.0 * PI);
        assert_eq!(Grid::parse("3:3:1").unwrap().points(), vec![3.0]);
        assert!(Grid::parse("1:0:5").is_err());
        assert!(Grid::parse("0:1").is_err());
    }

    #[test]
    fn init_specs() {
        assert_eq!(parse_init("ground").unwrap(), BatteryInit::Ground);
        assert_eq!(parse_init("trunc2:0.9").unwrap(), BatteryInit::Truncated(vec![0.9, 1.0 - 0.9]));
        assert_eq!(parse_init("thermal:2").unwrap(), BatteryInit::Thermal { beta: 2.0 });
        match parse_init("trunc3:0.43,0.42").unwrap() {
            BatteryInit::Truncated(r) => assert!((r[2] - 0.15).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
        assert!(parse_init("trunc3:0.5").is_err());
        assert!(parse_init("hot").is_err());
    }

    #[test]
    fn flags_override_file() {
        let dir = std::env::temp_dir().join(format!("qbattery-cfg-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("c.toml");
        std::fs::write(&path, "g = 0.5\ndelta = 0.1\ndim = 7\ninit = \"thermal:2\"\n").unwrap();
        let flags = Flags {
            config: Some(path.clone()),
            delta: Some("0.05".into()),
            ..Flags::default()
        };
        let s = Settings::resolve(&flags).unwrap();
        assert_eq!(s.g, 0.5);
        assert_eq!(s.delta, 0.05);
        assert_eq!(s.dims, Some(vec![7]));
        assert_eq!(s.init, BatteryInit::Thermal { beta: 2.0 });
        std::fs::write(&path, "bogus = 1\n").unwrap();
        assert!(Settings::resolve(&flags).is_err());
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
