//! Command-line experiments: settings (JSON config plus flags), the six
//! subcommands, and CSV emission.
//!
//! Filter frequencies default to cycles per unit `t/T`; `--freq-units time`
//! switches to cycles per unit time.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Deserialize;

use crate::engine::{gecko_run, refine_and_smooth, GeckoConfig, RestoreSchedule, StepMode};
use crate::error::{GeckoError, Result};
use crate::pulse::{fidelity, gate_target, refine_pulse, GateTarget, HamiltonianSpec, ModelPreset, PulseParams};
use crate::pulse_file::{load_pulse, save_pulse, PulseFile, PulseMetadata};
use crate::quality::{
    gaussian_baseline, make_filter, mode_frequencies, offset_pulse, power_spectrum, FilterKind, FilterParams,
    FilterSpec, QualitySpec, RobustSpec,
};
use crate::restore::{random_pulse, restore, RestoreConfig};

#[derive(Parser, Debug)]
#[command(name = "gecko", version, about = "Kernel-space post-optimization of quantum control pulses")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Find an initial solution from a random pulse.
    Solve(CommandArgs),
    /// Improve a pulse along its fidelity level set.
    Gecko(CommandArgs),
    /// Per-mode sine-transform power of a pulse.
    Spectrum(CommandArgs),
    /// Fidelity against a constant offset on the robust channels.
    RobustSweep(CommandArgs),
    /// Refine, Gaussian-smooth and re-optimize a pulse.
    BaselineGauss(CommandArgs),
    /// Multi-seed spectral comparison of GECKO smoothing and Gaussian filters.
    Fig4Study(CommandArgs),
}

#[derive(Args, Debug, Clone)]
pub struct CommandArgs {
    /// JSON file with default settings; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Input pulse file.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Reference pulse file (spectrum: the "before" column).
    #[arg(long)]
    pub before: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Trace CSV for the gecko subcommand.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    #[command(flatten)]
    pub settings: Settings,
}

/// Every tunable, shared by config files and flags.
#[derive(Args, Deserialize, Debug, Clone, Default)]
#[serde(default, deny_unknown_fields)]
pub struct Settings {
    /// tfim1, tfim1_h2zero or tfim2.
    #[arg(long)]
    pub model: Option<String>,
    /// CZ or CNOT.
    #[arg(long)]
    pub target: Option<String>,
    /// Drift coupling strength.
    #[arg(long)]
    pub g: Option<f64>,
    /// Number of segments.
    #[arg(long = "segments", short = 'L')]
    #[serde(rename = "L")]
    pub segments: Option<usize>,
    #[arg(long)]
    pub dt: Option<f64>,
    /// Treat the segment duration as a parameter.
    #[arg(long)]
    pub optimize_dt: Option<bool>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Half-width of the uniform random initialization.
    #[arg(long)]
    pub amp_scale: Option<f64>,
    #[arg(long)]
    pub restore_iters: Option<usize>,

    /// filter, smooth, robust, path, drift or composite.
    #[arg(long)]
    pub quality: Option<String>,
    /// lowpass, highpass or bandstop.
    #[arg(long)]
    pub filter: Option<String>,
    #[arg(long)]
    pub cutoff: Option<f64>,
    #[arg(long)]
    pub center: Option<f64>,
    #[arg(long)]
    pub width: Option<f64>,
    #[arg(long)]
    pub steepness: Option<u32>,
    /// per_T (cycles per unit t/T) or time (cycles per unit time).
    #[arg(long)]
    pub freq_units: Option<String>,
    #[arg(long)]
    pub delta: Option<f64>,
    /// Grid points per robust channel (sweep: number of offsets).
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub robust_channels: Option<Vec<usize>>,
    /// Composite weights as name=value pairs, e.g. smooth=1,path=0.2.
    #[arg(long, value_delimiter = ',')]
    pub weights: Option<Vec<String>>,

    #[arg(long)]
    pub step: Option<f64>,
    #[arg(long)]
    pub iters: Option<usize>,
    #[arg(long)]
    pub q_aim: Option<f64>,
    #[arg(long)]
    pub restore_every: Option<usize>,
    /// project or direct.
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long)]
    pub refine_rounds: Option<usize>,

    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub subdivide: Option<usize>,
    #[arg(long)]
    pub pad: Option<usize>,
    #[arg(long)]
    pub seeds: Option<usize>,
}

macro_rules! merge_fields {
    ($a:ident, $b:ident; $($f:ident),*) => {
        Settings { $($f: $a.$f.or($b.$f)),* }
    };
}

impl Settings {
    /// Field-wise `self` over `fallback`.
    pub fn over(self, fallback: Settings) -> Settings {
        let (a, b) = (self, fallback);
        merge_fields!(a, b; model, target, g, segments, dt, optimize_dt, eps, seed, amp_scale, restore_iters,
            quality, filter, cutoff, center, width, steepness, freq_units, delta, grid, robust_channels, weights,
            step, iters, q_aim, restore_every, mode, refine_rounds, sigma, subdivide, pad, seeds)
    }

    pub fn from_json_file(path: &Path) -> Result<Settings> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }

    fn eps(&self) -> f64 {
        self.eps.unwrap_or(1e-7)
    }

    fn spec(&self) -> Result<HamiltonianSpec> {
        let preset: ModelPreset = self.model.as_deref().unwrap_or("tfim1_h2zero").parse()?;
        Ok(preset.build(self.g.unwrap_or(1.0)))
    }

    fn gate(&self) -> Result<GateTarget> {
        gate_target(self.target.as_deref().unwrap_or("CZ"))
    }

    pub fn restore_config(&self) -> RestoreConfig {
        let mut cfg = RestoreConfig { epsilon: self.eps(), seed: self.seed.unwrap_or(0), ..Default::default() };
        if let Some(n) = self.restore_iters {
            cfg.max_iters = n;
        }
        cfg
    }

    pub fn gecko_config(&self, quality: &QualitySpec) -> Result<GeckoConfig> {
        let mode = match self.mode.as_deref() {
            Some("project") => StepMode::ProjectGradient,
            Some("direct") => StepMode::DirectSolve,
            Some(other) => return Err(GeckoError::input(format!("unknown mode '{other}' (project or direct)"))),
            None if matches!(quality, QualitySpec::Smooth) => StepMode::DirectSolve,
            None => StepMode::ProjectGradient,
        };
        Ok(GeckoConfig {
            step_size: self.step.unwrap_or(0.05),
            max_iters: self.iters.unwrap_or(100),
            q_aim: self.q_aim.unwrap_or(0.0),
            epsilon: self.eps(),
            restore: self.restore_every.map_or(RestoreSchedule::OnViolation, RestoreSchedule::Every),
            mode,
            ..Default::default()
        })
    }

    /// Filter on `pulse`'s segment grid, in the configured frequency units.
    pub fn filter_spec(&self, pulse: &PulseParams) -> Result<FilterSpec> {
        let kind: FilterKind = self.filter.as_deref().unwrap_or("lowpass").parse()?;
        let defaults = FilterParams::default();
        let params = FilterParams {
            cutoff: self.cutoff.unwrap_or(defaults.cutoff),
            center: self.center.unwrap_or(defaults.center),
            width: self.width.unwrap_or(defaults.width),
            steepness: self.steepness.unwrap_or(defaults.steepness),
        };
        make_filter(kind, &params, pulse.n_segments(), self.axis_dt(pulse)?)
    }

    fn axis_dt(&self, pulse: &PulseParams) -> Result<f64> {
        match self.freq_units.as_deref().unwrap_or("per_T") {
            "per_T" => Ok(1.0 / pulse.n_segments() as f64),
            "time" => Ok(pulse.dt()),
            other => Err(GeckoError::input(format!("unknown frequency units '{other}' (per_T or time)"))),
        }
    }

    fn robust_spec(&self, spec: &HamiltonianSpec) -> Result<RobustSpec> {
        let channels = self.robust_channels.clone().unwrap_or_else(|| (0..spec.n_controls()).collect());
        RobustSpec::new(channels, self.delta.unwrap_or(0.05), self.grid.unwrap_or(5))
    }

    pub fn quality_spec(&self, spec: &HamiltonianSpec, pulse: &PulseParams) -> Result<QualitySpec> {
        let name = self.quality.as_deref().unwrap_or("smooth");
        self.named_quality(name, spec, pulse)
    }

    fn named_quality(&self, name: &str, spec: &HamiltonianSpec, pulse: &PulseParams) -> Result<QualitySpec> {
        Ok(match name {
            "filter" => QualitySpec::Filter(self.filter_spec(pulse)?),
            "smooth" => QualitySpec::Smooth,
            "robust" => QualitySpec::Robust(self.robust_spec(spec)?),
            "path" => QualitySpec::Path,
            "drift" => QualitySpec::Drift,
            "composite" => {
                let pairs = self
                    .weights
                    .as_ref()
                    .ok_or_else(|| GeckoError::input("composite quality needs --weights name=value,..."))?;
                let mut terms = Vec::new();
                for pair in pairs {
                    let (n, w) = pair
                        .split_once('=')
                        .ok_or_else(|| GeckoError::input(format!("weight '{pair}' is not name=value")))?;
                    let w: f64 = w.trim().parse().map_err(|_| GeckoError::input(format!("bad weight in '{pair}'")))?;
                    if n.trim() == "composite" {
                        return Err(GeckoError::input("composite terms cannot nest"));
                    }
                    terms.push((w, self.named_quality(n.trim(), spec, pulse)?));
                }
                QualitySpec::composite(terms)?
            }
            other => return Err(GeckoError::input(format!("unknown quality '{other}'"))),
        })
    }
}

/// Exit status for an error: 2 usage/input, 3 constraint or restore failure,
/// 4 numerical failure.
pub fn exit_code(err: &GeckoError) -> i32 {
    match err {
        GeckoError::RestoreFailed { .. } => 3,
        GeckoError::Numerical(_) | GeckoError::DegenerateStep | GeckoError::StepRejected { .. } | GeckoError::Budget(_) => 4,
        GeckoError::Input(_) | GeckoError::Format { .. } | GeckoError::Io(_) => 2,
    }
}

/// A command failure with its exit status.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl From<GeckoError> for CliError {
    fn from(e: GeckoError) -> Self {
        CliError { code: exit_code(&e), message: e.to_string() }
    }
}

fn constraint_error(f: f64, eps: f64) -> CliError {
    CliError {
        code: 3,
        message: format!("input pulse violates the fidelity constraint: F = {f:.12}, needs > {}", 1.0 - eps),
    }
}

pub fn run(cli: Cli) -> std::result::Result<(), CliError> {
    let (args, which) = match cli.command {
        Command::Solve(a) => (a, "solve"),
        Command::Gecko(a) => (a, "gecko"),
        Command::Spectrum(a) => (a, "spectrum"),
        Command::RobustSweep(a) => (a, "robust-sweep"),
        Command::BaselineGauss(a) => (a, "baseline-gauss"),
        Command::Fig4Study(a) => (a, "fig4-study"),
    };
    let settings = match &args.config {
        Some(path) => args.settings.clone().over(Settings::from_json_file(path)?),
        None => args.settings.clone(),
    };
    match which {
        "solve" => cmd_solve(&args, &settings),
        "gecko" => cmd_gecko(&args, &settings),
        "spectrum" => cmd_spectrum(&args, &settings),
        "robust-sweep" => cmd_robust_sweep(&args, &settings),
        "baseline-gauss" => cmd_baseline_gauss(&args, &settings),
        _ => cmd_fig4_study(&args, &settings),
    }
}

fn out_path(args: &CommandArgs, default: &str) -> PathBuf {
    args.out.clone().unwrap_or_else(|| PathBuf::from(default))
}

fn input_file(args: &CommandArgs) -> Result<PulseFile> {
    let path = args.input.as_ref().ok_or_else(|| GeckoError::input("--input pulse file is required"))?;
    load_pulse(path)
}

fn write_pulse(path: &Path, spec: &HamiltonianSpec, pulse: &PulseParams, target: &GateTarget, meta: PulseMetadata) -> Result<()> {
    save_pulse(path, &PulseFile::new(spec.clone(), pulse.clone(), target.clone(), meta)?)
}

/// Random start and fidelity ascent; the solver used by `solve`.
pub fn solve_pulse(settings: &Settings) -> Result<(HamiltonianSpec, GateTarget, PulseParams)> {
    let spec = settings.spec()?;
    let target = settings.gate()?;
    let l = settings.segments.unwrap_or(4);
    let dt = settings.dt.unwrap_or(1.0 / settings.g.unwrap_or(1.0));
    let start = random_pulse(&spec, l, dt, settings.amp_scale.unwrap_or(3.0), settings.seed.unwrap_or(0))?
        .with_optimize_dt(settings.optimize_dt.unwrap_or(false));
    let pulse = restore(&spec, &start, &target, &settings.restore_config())?;
    Ok((spec, target, pulse))
}

fn cmd_solve(args: &CommandArgs, s: &Settings) -> std::result::Result<(), CliError> {
    let (spec, target, pulse) = solve_pulse(s)?;
    let f = fidelity(&spec, &pulse, &target)?;
    let path = out_path(args, "pulse.json");
    write_pulse(&path, &spec, &pulse, &target, PulseMetadata::new(f, s.seed.or(Some(0))))?;
    println!("solved: F = {f:.12}, L = {}, T = {:.6} -> {}", pulse.n_segments(), pulse.duration(), path.display());
    Ok(())
}

fn cmd_gecko(args: &CommandArgs, s: &Settings) -> std::result::Result<(), CliError> {
    let file = input_file(args)?;
    let (spec, target) = (&file.spec, &file.target);
    let mut pulse = file.pulse.clone();
    if let Some(flag) = s.optimize_dt {
        pulse = pulse.with_optimize_dt(flag);
    }
    if let (Some(m), None) = (s.subdivide, s.refine_rounds) {
        pulse = refine_pulse(&pulse, m)?;
    }
    let eps = s.eps();
    let f0 = fidelity(spec, &pulse, target)?;
    if !(f0 > 1.0 - eps) {
        return Err(constraint_error(f0, eps));
    }
    let restorer = s.restore_config();
    let (trace, quality) = match s.refine_rounds {
        Some(rounds) => {
            let cfg = s.gecko_config(&QualitySpec::Smooth)?;
            (refine_and_smooth(spec, &pulse, target, rounds, &cfg, &restorer)?, QualitySpec::Smooth)
        }
        None => {
            let quality = s.quality_spec(spec, &pulse)?;
            let cfg = s.gecko_config(&quality)?;
            (gecko_run(spec, &pulse, target, &quality, &cfg, &restorer)?, quality)
        }
    };
    let f = fidelity(spec, &trace.pulse, target)?;
    let q = quality.value(spec, &trace.pulse, target)?;
    let meta = PulseMetadata::new(f, s.seed.or(file.metadata.seed)).with_quality(quality.name(), q);
    let path = out_path(args, "gecko.json");
    write_pulse(&path, spec, &trace.pulse, target, meta)?;
    let trace_path = args.trace.clone().unwrap_or_else(|| path.with_extension("trace.csv"));
    trace.write_csv(fs::File::create(&trace_path).map_err(GeckoError::from)?)?;
    println!(
        "gecko: {} iterations ({}), Q = {q:.6e}, F = {f:.12}, L = {}, T = {:.6}",
        trace.records.len(),
        trace.status,
        trace.pulse.n_segments(),
        trace.pulse.duration()
    );
    Ok(())
}

/// Rows of the spectrum CSV.
pub fn spectrum_rows(before: &PulseParams, after: &PulseParams, weights: Option<&FilterSpec>) -> Result<String> {
    if before.n_segments() != after.n_segments() || before.n_controls() != after.n_controls() {
        return Err(GeckoError::input("spectrum comparison needs pulses of the same shape"));
    }
    let l = after.n_segments();
    let (pb, pa) = (power_spectrum(before)?, power_spectrum(after)?);
    let f_time = mode_frequencies(l, after.dt());
    let f_norm = mode_frequencies(l, 1.0 / l as f64);
    let mut out = String::from("channel,mode_n,freq_per_time,freq_per_T,power_before,power_after,weight\n");
    for k in 0..after.n_controls() {
        for n in 0..l {
            let w = weights.map_or(1.0, |fs| fs.weights()[n]);
            out.push_str(&format!(
                "{k},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                n + 1,
                f_time[n],
                f_norm[n],
                pb[k][n],
                pa[k][n],
                w
            ));
        }
    }
    Ok(out)
}

fn cmd_spectrum(args: &CommandArgs, s: &Settings) -> std::result::Result<(), CliError> {
    let file = input_file(args)?;
    let before = match &args.before {
        Some(p) => load_pulse(p)?.pulse,
        None => file.pulse.clone(),
    };
    let weights = match s.filter.is_some() || s.quality.as_deref() == Some("filter") {
        true => Some(s.filter_spec(&file.pulse)?),
        false => None,
    };
    let csv = spectrum_rows(&before, &file.pulse, weights.as_ref())?;
    fs::write(out_path(args, "spectrum.csv"), csv).map_err(GeckoError::from)?;
    Ok(())
}

/// `(offset, F)` for equally spaced offsets in `[-delta_max, delta_max]`,
/// applied to every listed channel at once.
pub fn robust_sweep(
    spec: &HamiltonianSpec,
    pulse: &PulseParams,
    target: &GateTarget,
    channels: &[usize],
    delta_max: f64,
    points: usize,
) -> Result<Vec<(f64, f64)>> {
    if points < 3 {
        return Err(GeckoError::input("a sweep needs at least 3 points"));
    }
    (0..points)
        .map(|i| {
            let d = -delta_max + 2.0 * delta_max * i as f64 / (points - 1) as f64;
            let offsets = vec![d; channels.len()];
            Ok((d, fidelity(spec, &offset_pulse(pulse, channels, &offsets)?, target)?))
        })
        .collect()
}

fn cmd_robust_sweep(args: &CommandArgs, s: &Settings) -> std::result::Result<(), CliError> {
    let file = input_file(args)?;
    let channels = s.robust_channels.clone().unwrap_or_else(|| (0..file.spec.n_controls()).collect());
    let rows = robust_sweep(&file.spec, &file.pulse, &file.target, &channels, s.delta.unwrap_or(0.1), s.grid.unwrap_or(41))?;
    let mut out = String::from("delta_offset,fidelity\n");
    for (d, f) in rows {
        out.push_str(&format!("{d:.16e},{f:.16e}\n"));
    }
    fs::write(out_path(args, "sweep.csv"), out).map_err(GeckoError::from)?;
    Ok(())
}

/// Refine by `subdivide`, Gaussian-smooth, restore.
pub fn gaussian_pipeline(
    spec: &HamiltonianSpec,
    pulse: &PulseParams,
    target: &GateTarget,
    subdivide: usize,
    sigma: f64,
    pad: usize,
    restorer: &RestoreConfig,
) -> Result<PulseParams> {
    let refined = if subdivide > 1 { refine_pulse(pulse, subdivide)? } else { pulse.clone() };
    let smoothed = gaussian_baseline(&refined, sigma, pad)?;
    restore(spec, &smoothed, target, restorer)
}

fn cmd_baseline_gauss(args: &CommandArgs, s: &Settings) -> std::result::Result<(), CliError> {
    let file = input_file(args)?;
    let restorer = s.restore_config();
    let subdivide = s.subdivide.unwrap_or(64);
    let sigma = s.sigma.unwrap_or(8.0);
    let out = gaussian_pipeline(&file.spec, &file.pulse, &file.target, subdivide, sigma, s.pad.unwrap_or(2 * sigma as usize), &restorer)?;
    let f = fidelity(&file.spec, &out, &file.target)?;
    let meta = PulseMetadata::new(f, file.metadata.seed).with_quality("smooth", crate::quality::q_smooth(&out));
    write_pulse(&out_path(args, "gauss.json"), &file.spec, &out, &file.target, meta)?;
    println!("baseline: F = {f:.12}, L = {}", out.n_segments());
    Ok(())
}

/// Spectra of one seed, one entry per method, and its largest final infidelity.
pub struct StudyRun {
    pub seed: u64,
    pub spectra: Vec<(String, Vec<Vec<f64>>)>,
    pub worst_infidelity: f64,
}

pub const STUDY_SIGMAS: [f64; 3] = [2.0, 4.0, 8.0];

/// One seed of the spectral study: solve at `l0`, then GECKO refine-and-smooth
/// to `l0 · 2^rounds` segments, and Gaussian baselines at the same resolution.
pub fn study_seed(s: &Settings, seed: u64, l0: usize, rounds: usize) -> Result<StudyRun> {
    let local = Settings { seed: Some(seed), segments: Some(l0), ..s.clone() };
    let (spec, target, pulse) = solve_pulse(&local)?;
    let restorer = local.restore_config();
    let cfg = local.gecko_config(&QualitySpec::Smooth)?;
    let mut spectra = Vec::new();
    let mut worst: f64 = 0.0;
    let smooth = refine_and_smooth(&spec, &pulse, &target, rounds, &cfg, &restorer)?;
    worst = worst.max(1.0 - fidelity(&spec, &smooth.pulse, &target)?);
    spectra.push(("gecko".to_string(), power_spectrum(&smooth.pulse)?));
    for sigma in STUDY_SIGMAS {
        let p = gaussian_pipeline(&spec, &pulse, &target, 1 << rounds, sigma, 2 * sigma as usize, &restorer)?;
        worst = worst.max(1.0 - fidelity(&spec, &p, &target)?);
        spectra.push((format!("gauss_sigma{sigma}"), power_spectrum(&p)?));
    }
    Ok(StudyRun { seed, spectra, worst_infidelity: worst })
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Median and quartiles of the per-mode power across runs.
pub fn study_summary(runs: &[StudyRun], l: usize) -> String {
    let mut out = String::from("method,channel,mode_n,freq_per_T,median,q25,q75,n_runs\n");
    let Some(first) = runs.first() else { return out };
    let f_norm = mode_frequencies(l, 1.0 / l as f64);
    for (m, (method, channels)) in first.spectra.iter().enumerate() {
        for k in 0..channels.len() {
            for n in 0..l {
                let mut v: Vec<f64> = runs.iter().map(|r| r.spectra[m].1[k][n]).collect();
                v.sort_by(f64::total_cmp);
                out.push_str(&format!(
                    "{method},{k},{},{:.16e},{:.16e},{:.16e},{:.16e},{}\n",
                    n + 1,
                    f_norm[n],
                    quantile(&v, 0.5),
                    quantile(&v, 0.25),
                    quantile(&v, 0.75),
                    v.len()
                ));
            }
        }
    }
    out
}

fn cmd_fig4_study(args: &CommandArgs, s: &Settings) -> std::result::Result<(), CliError> {
    let base = Settings {
        model: s.model.clone().or(Some("tfim2".into())),
        target: s.target.clone().or(Some("CNOT".into())),
        eps: s.eps.or(Some(1e-4)),
        ..s.clone()
    };
    let l0 = base.segments.unwrap_or(10);
    let rounds = base.refine_rounds.unwrap_or(5);
    let first = base.seed.unwrap_or(0);
    let n = base.seeds.unwrap_or(10) as u64;
    let results: Vec<_> = (first..first + n).into_par_iter().map(|seed| (seed, study_seed(&base, seed, l0, rounds))).collect();
    let mut runs = Vec::new();
    for (seed, r) in results {
        match r {
            Ok(run) => runs.push(run),
            Err(e) => eprintln!("seed {seed} skipped: {e}"),
        }
    }
    let l = l0 << rounds;
    fs::write(out_path(args, "fig4_summary.csv"), study_summary(&runs, l)).map_err(GeckoError::from)?;
    let worst = runs.iter().map(|r| r.worst_infidelity).fold(0.0, f64::max);
    println!("fig4-study: {}/{n} seeds succeeded, L = {l}, worst final infidelity {worst:.2e}", runs.len());
    Ok(())
}
