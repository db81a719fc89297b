//! `ontd` subcommands. Settings are resolved as defaults, then the config
//! file (`--config` or `ONTD_CONFIG`), then flags.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use ontd_core::{gen_tensor, match_factors, reconstruct, similarity, DenseTensor, ModeFactor, SynthSpec};

use crate::config::{RunConfig, CONFIG_ENV};
use crate::error::{exit, CliError, Result};
use crate::formats::{fmt_real, read_tensor, write_tensor};
use crate::model_io::{read_model, write_model};
use crate::report::{decompose_report, residual_csv, timestamp_line, timing_text, warnings};

#[derive(Debug, Parser)]
#[command(name = "ontd", version, about = "Orthogonal nonnegative Tucker decomposition")]
pub struct Cli {
    /// Flat `key = value` config file; flags given on the command line win.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a random exactly decomposable tensor (`A.dtt`/`A.dttb`) and its
    /// ground truth (`truth/`).
    Synth(Flags),
    /// Decompose a tensor; writes `model/`, `report.txt`, residual CSVs and
    /// `timing.txt`.
    Decompose {
        input: PathBuf,
        #[command(flatten)]
        flags: Flags,
    },
    /// Rebuild the full tensor from a model directory.
    Reconstruct {
        model: PathBuf,
        #[command(flatten)]
        flags: Flags,
    },
    /// Compare a model with a ground-truth model.
    Evaluate {
        model: PathBuf,
        #[arg(long, value_name = "DIR")]
        truth: PathBuf,
        /// Reference tensor for the reconstruction error; defaults to the
        /// truth model's reconstruction.
        #[arg(long, value_name = "FILE")]
        tensor: Option<PathBuf>,
        #[command(flatten)]
        flags: Flags,
    },
    /// Print a tensor file header and summary statistics.
    Info { input: PathBuf },
}

#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// Multilinear ranks, e.g. `3,2,2`.
    #[arg(long, value_name = "J1,J2,...")]
    pub ranks: Option<String>,
    /// Modes (numbered from 1) whose factor is the identity; their rank is
    /// taken from the tensor.
    #[arg(long, value_name = "N1,N2,...")]
    pub partial: Option<String>,
    /// Tensor dims for `synth` (default: four times each rank).
    #[arg(long, value_name = "I1,I2,...")]
    pub dims: Option<String>,
    #[arg(long)]
    pub theta: Option<String>,
    #[arg(long)]
    pub rho1: Option<String>,
    #[arg(long)]
    pub rho2: Option<String>,
    #[arg(long)]
    pub rho3: Option<String>,
    #[arg(long)]
    pub gamma: Option<String>,
    #[arg(long)]
    pub eps: Option<String>,
    #[arg(long = "max-iter")]
    pub max_iter: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    /// Relative noise level for `synth`.
    #[arg(long)]
    pub noise: Option<String>,
    /// `text` or `binary` for written tensors.
    #[arg(long)]
    pub format: Option<String>,
    /// Solve the modes concurrently.
    #[arg(long = "parallel-modes")]
    pub parallel_modes: bool,
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

impl Flags {
    fn apply(&self, cfg: &mut RunConfig) -> Result<()> {
        let pairs = [
            ("ranks", &self.ranks),
            ("partial", &self.partial),
            ("dims", &self.dims),
            ("theta", &self.theta),
            ("rho1", &self.rho1),
            ("rho2", &self.rho2),
            ("rho3", &self.rho3),
            ("gamma", &self.gamma),
            ("eps", &self.eps),
            ("max_iter", &self.max_iter),
            ("seed", &self.seed),
            ("noise", &self.noise),
            ("format", &self.format),
        ];
        for (key, value) in pairs {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        if self.parallel_modes {
            cfg.parallel_modes = true;
        }
        if let Some(out) = &self.out {
            cfg.out = out.clone();
        }
        Ok(())
    }
}

fn resolve(config: Option<&Path>, flags: &Flags) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    let env = std::env::var_os(CONFIG_ENV).map(PathBuf::from);
    if let Some(path) = config.map(Path::to_path_buf).or(env) {
        cfg.apply_file(&path)?;
    }
    flags.apply(&mut cfg)?;
    cfg.validate()?;
    Ok(cfg)
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. Messages go to stdout, errors to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { exit::USAGE } else { exit::OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: &Cli) -> Result<i32> {
    let config = cli.config.as_deref();
    match &cli.command {
        Command::Synth(flags) => synth(&resolve(config, flags)?),
        Command::Decompose { input, flags } => decompose(input, &resolve(config, flags)?),
        Command::Reconstruct { model, flags } => reconstruct_cmd(model, &resolve(config, flags)?),
        Command::Evaluate { model, truth, tensor, flags } => {
            let cfg = resolve(config, flags)?;
            evaluate(model, truth, tensor.as_deref(), &cfg, flags.out.is_some())
        }
        Command::Info { input } => info(input),
    }
}

fn synth(cfg: &RunConfig) -> Result<i32> {
    if cfg.ranks.is_empty() {
        return Err(CliError::Usage("synth needs --ranks".into()));
    }
    let dims = if cfg.dims.is_empty() { cfg.ranks.iter().map(|j| 4 * j).collect() } else { cfg.dims.clone() };
    let spec = SynthSpec::new(dims, cfg.ranks.clone(), cfg.seed).with_noise(cfg.noise);
    let (a, truth) = gen_tensor(&spec)?;
    create_dir(&cfg.out)?;
    let tensor_path = cfg.out.join(format!("A.{}", cfg.format.extension()));
    write_tensor(&a, &tensor_path, cfg.format)?;
    write_model(&truth, &cfg.out.join("truth"), cfg.format)?;
    let mut text = String::from("command = synth\n");
    text.push_str(&cfg.to_text());
    text.push_str(&format!("tensor_dims = {}\n", join(a.dims())));
    write_text(&cfg.out.join("synth.txt"), &text)?;
    println!("wrote {}", tensor_path.display());
    Ok(exit::OK)
}

fn join(v: &[usize]) -> String {
    v.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
}

fn decompose(input: &Path, cfg: &RunConfig) -> Result<i32> {
    let started = Instant::now();
    let (a, _) = read_tensor(input)?;
    let read_time = started.elapsed();
    if cfg.ranks.is_empty() {
        return Err(CliError::Usage("decompose needs --ranks".into()));
    }
    if cfg.ranks.len() != a.order() {
        return Err(CliError::Usage(format!("{} ranks for a {}-way tensor", cfg.ranks.len(), a.order())));
    }
    if let Some(&n) = cfg.partial.iter().find(|&&n| n > a.order()) {
        return Err(CliError::Usage(format!("partial mode {n} exceeds the order {}", a.order())));
    }
    let mut dc = cfg.decompose_config();
    for &n in &dc.identity_modes {
        dc.ranks[n] = a.dims()[n];
    }
    let solve_start = Instant::now();
    let report = crate::decompose_modes(&a, &dc, cfg.parallel_modes)?;
    let solve_time = solve_start.elapsed();

    create_dir(&cfg.out)?;
    write_model(&report.model, &cfg.out.join("model"), cfg.format)?;
    let mut effective = cfg.clone();
    effective.ranks = dc.ranks.clone();
    let body = decompose_report(&input.display().to_string(), &effective, &report);
    write_text(&cfg.out.join("report.txt"), &format!("{}{body}", timestamp_line()))?;
    for (n, mode) in report.modes.iter().enumerate() {
        if let Some(solve) = mode.as_ref().and_then(|m| m.solve.as_ref()) {
            write_text(&cfg.out.join(format!("residuals_mode{}.csv", n + 1)), &residual_csv(solve))?;
        }
    }
    let timing = timing_text(&[("read", read_time), ("solve", solve_time), ("total", started.elapsed())]);
    write_text(&cfg.out.join("timing.txt"), &timing)?;

    println!("relative_error = {}", fmt_real(report.relative_error));
    for w in warnings(&report) {
        eprintln!("warning: {w}");
    }
    Ok(if report.converged() { exit::OK } else { exit::MAX_ITER })
}

fn reconstruct_cmd(model_dir: &Path, cfg: &RunConfig) -> Result<i32> {
    let model = read_model(model_dir)?;
    let t = reconstruct(&model)?;
    create_dir(&cfg.out)?;
    let path = cfg.out.join(format!("reconstruction.{}", cfg.format.extension()));
    write_tensor(&t, &path, cfg.format)?;
    println!("wrote {}", path.display());
    Ok(exit::OK)
}

fn evaluate(model_dir: &Path, truth_dir: &Path, tensor: Option<&Path>, cfg: &RunConfig, save: bool) -> Result<i32> {
    let model = read_model(model_dir)?;
    let truth = read_model(truth_dir)?;
    if model.dims() != truth.dims() {
        return Err(CliError::Usage(format!("model dims {:?} vs truth dims {:?}", model.dims(), truth.dims())));
    }
    let reference: DenseTensor = match tensor {
        Some(p) => read_tensor(p)?.0,
        None => reconstruct(&truth)?,
    };
    let mut text = format!(
        "command = evaluate\nmodel = {}\ntruth = {}\n",
        model_dir.display(),
        truth_dir.display()
    );
    let err = ontd_core::pipeline::relative_error(&reference, &reconstruct(&model)?)?;
    text.push_str(&format!("reconstruction_relative_error = {}\n", fmt_real(err)));
    for (n, (m, t)) in model.factors().iter().zip(truth.factors()).enumerate() {
        let key = format!("mode{}", n + 1);
        match (m, t) {
            (ModeFactor::Factor(u), ModeFactor::Factor(v)) if u.cols() == v.cols() => {
                let (_, match_err) = match_factors(v, u)?;
                let cols = |f: &ontd_core::FactorMatrix| (0..f.cols()).map(|j| f.matrix().column(j)).collect::<Vec<_>>();
                let sim = similarity(&cols(u), &cols(v))?;
                text.push_str(&format!("{key}.match_error = {}\n{key}.similarity = {}\n", fmt_real(match_err), fmt_real(sim)));
            }
            (ModeFactor::Identity(_), ModeFactor::Identity(_)) => text.push_str(&format!("{key}.factor = identity\n")),
            _ => text.push_str(&format!("{key}.factor = not comparable\n")),
        }
    }
    print!("{text}");
    if save {
        create_dir(&cfg.out)?;
        write_text(&cfg.out.join("evaluation.txt"), &text)?;
    }
    Ok(exit::OK)
}

fn info(input: &Path) -> Result<i32> {
    let (t, format) = read_tensor(input)?;
    let max = t.values().iter().copied().fold(f64::NEG_INFINITY, f64::max);
    println!("format: {}", format.name());
    println!("order: {}", t.order());
    println!("dims: {}", t.dims().iter().map(usize::to_string).collect::<Vec<_>>().join(" "));
    println!("entries: {}", t.len());
    println!("min: {}", fmt_real(t.min_value()));
    println!("max: {}", fmt_real(max));
    println!("frob_norm: {}", fmt_real(t.frob_norm()));
    Ok(exit::OK)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formats::TensorFormat;

    #[test]
    fn clap_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn usage_errors_exit_one() {
        assert_eq!(run(["ontd"]), exit::USAGE);
        assert_eq!(run(["ontd", "frobnicate"]), exit::USAGE);
        assert_eq!(run(["ontd", "synth", "--ranks", "0,2"]), exit::USAGE);
        assert_eq!(run(["ontd", "--help"]), exit::OK);
    }

    #[test]
    fn format_flag_parsed() {
        let mut cfg = RunConfig::default();
        Flags { format: Some("binary".into()), ..Flags::default() }.apply(&mut cfg).unwrap();
        assert_eq!(cfg.format, TensorFormat::Binary);
    }
}
