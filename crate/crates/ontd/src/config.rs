//! Effective run configuration: defaults, then a flat `key = value` file,
//! then command-line flags.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use ontd_core::admm::AdmmParams;
use ontd_core::DecomposeConfig;

use crate::error::{CliError, Result};
use crate::formats::{fmt_real, TensorFormat};

/// Environment variable naming a config file.
pub const CONFIG_ENV: &str = "ONTD_CONFIG";

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: AdmmParams,
    pub ranks: Vec<usize>,
    /// Identity modes, 1-based as on the command line.
    pub partial: Vec<usize>,
    pub seed: u64,
    /// Relative noise level for `synth`.
    pub noise: f64,
    /// Tensor dims for `synth`; empty means `4 * rank` per mode.
    pub dims: Vec<usize>,
    pub format: TensorFormat,
    pub parallel_modes: bool,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            params: AdmmParams::default(),
            ranks: Vec::new(),
            partial: Vec::new(),
            seed: 0,
            noise: 0.0,
            dims: Vec::new(),
            format: TensorFormat::Text,
            parallel_modes: false,
            out: PathBuf::from("ontd-out"),
        }
    }
}

pub fn parse_list(key: &str, s: &str) -> Result<Vec<usize>> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|p| p.trim().parse().map_err(|_| CliError::Usage(format!("{key}: bad entry {p:?} in {s:?}"))))
        .collect()
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value.trim().parse().map_err(|_| CliError::Usage(format!("{key}: cannot parse {value:?}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.trim() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        other => Err(CliError::Usage(format!("{key}: expected true or false, got {other:?}"))),
    }
}

impl RunConfig {
    /// Applies one setting. Keys match the long flag names with `-` or `_`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let p = &mut self.params;
        match key.replace('-', "_").as_str() {
            "theta" => p.theta = parse(key, value)?,
            "rho1" => p.rho1 = parse(key, value)?,
            "rho2" => p.rho2 = parse(key, value)?,
            "rho3" => p.rho3 = parse(key, value)?,
            "gamma" => p.gamma = parse(key, value)?,
            "eps" => p.eps = parse(key, value)?,
            "max_iter" => p.max_iter = parse(key, value)?,
            "ranks" => self.ranks = parse_list(key, value)?,
            "partial" => self.partial = parse_list(key, value)?,
            "dims" => self.dims = parse_list(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "noise" => self.noise = parse(key, value)?,
            "format" => self.format = value.trim().parse().map_err(CliError::Usage)?,
            "parallel_modes" => self.parallel_modes = parse_bool(key, value)?,
            "out" => self.out = PathBuf::from(value.trim()),
            _ => return Err(CliError::Usage(format!("unknown config key {key:?}"))),
        }
        Ok(())
    }

    /// Applies a config file. Blank lines and `#` comments are skipped.
    pub fn apply_text(&mut self, origin: &Path, text: &str) -> Result<()> {
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Usage(format!("{}:{}: expected key = value", origin.display(), n + 1))
            })?;
            self.set(key.trim(), value)?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        self.apply_text(path, &text)
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.ranks.contains(&0) {
            return Err(CliError::Usage(format!("ranks must be positive, got {:?}", self.ranks)));
        }
        if self.partial.contains(&0) {
            return Err(CliError::Usage("partial modes are numbered from 1".into()));
        }
        if !(self.noise >= 0.0) || !self.noise.is_finite() {
            return Err(CliError::Usage(format!("noise must be finite and >= 0, got {}", self.noise)));
        }
        if self.out.as_os_str().is_empty() {
            return Err(CliError::Usage("output directory must be non-empty".into()));
        }
        Ok(())
    }

    /// Pipeline configuration with 0-based identity modes.
    pub fn decompose_config(&self) -> DecomposeConfig {
        DecomposeConfig {
            params: self.params,
            seed: self.seed,
            identity_modes: self.partial.iter().map(|&n| n - 1).collect(),
            ..DecomposeConfig::new(self.ranks.clone())
        }
    }

    /// Every effective setting as `key = value` lines, in a fixed order.
    pub fn to_text(&self) -> String {
        let list = |v: &[usize]| v.iter().map(usize::to_string).collect::<Vec<_>>().join(",");
        let p = &self.params;
        let mut s = String::new();
        for (k, v) in [
            ("theta", fmt_real(p.theta)),
            ("rho1", fmt_real(p.rho1)),
            ("rho2", fmt_real(p.rho2)),
            ("rho3", fmt_real(p.rho3)),
            ("gamma", fmt_real(p.gamma)),
            ("eps", fmt_real(p.eps)),
            ("max_iter", p.max_iter.to_string()),
            ("ranks", list(&self.ranks)),
            ("partial", list(&self.partial)),
            ("dims", list(&self.dims)),
            ("seed", self.seed.to_string()),
            ("noise", fmt_real(self.noise)),
            ("format", self.format.name().to_string()),
            ("parallel_modes", self.parallel_modes.to_string()),
            ("out", self.out.display().to_string()),
        ] {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_then_override() {
        let mut c = RunConfig::default();
        c.apply_text(Path::new("f"), "# run\ntheta = 0.5\nranks = 3, 2,2\nmax-iter=7\n\nparallel_modes = true\n")
            .unwrap();
        assert_eq!(c.params.theta, 0.5);
        assert_eq!(c.ranks, [3, 2, 2]);
        assert_eq!(c.params.max_iter, 7);
        assert!(c.parallel_modes);
        c.set("theta", "0.25").unwrap();
        assert_eq!(c.params.theta, 0.25);
    }

    #[test]
    fn text_dump_round_trips() {
        let mut c = RunConfig::default();
        c.set("ranks", "4,1").unwrap();
        c.set("partial", "2").unwrap();
        c.set("format", "binary").unwrap();
        let mut back = RunConfig::default();
        back.apply_text(Path::new("dump"), &c.to_text()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn bad_settings_rejected() {
        let mut c = RunConfig::default();
        assert!(c.set("colour", "red").is_err());
        assert!(c.set("theta", "abc").is_err());
        assert!(c.apply_text(Path::new("f"), "theta 0.1").is_err());
        c.set("ranks", "0,2").unwrap();
        assert!(c.validate().is_err());
        let mut c = RunConfig::default();
        c.set("gamma", "1.7").unwrap();
        assert!(c.validate().is_err());
        let mut c = RunConfig::default();
        c.set("partial", "0").unwrap();
        assert!(c.validate().is_err());
    }

    #[test]
    fn partial_modes_shift_to_zero_based() {
        let mut c = RunConfig::default();
        c.set("ranks", "3,16,16").unwrap();
        c.set("partial", "2,3").unwrap();
        assert_eq!(c.decompose_config().identity_modes, [1, 2]);
    }
}
