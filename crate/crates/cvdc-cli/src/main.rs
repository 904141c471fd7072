//! `cvdc` — command-line front end for the continuous-variable dense-coding
//! toolkit: reproduce the benchmark numbers, run netlists, sweep parameters,
//! and cross-check everything with seeded Monte Carlo.
//!
//! Output is deterministic byte for byte for fixed inputs and seeds: JSON
//! reports carry full double precision, CSV tables are fixed at six
//! significant digits. Exit codes: 0 success, 1 domain or numeric error,
//! 2 usage error.

mod report;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use cvdc::analysis::{
    capacity_thresholds_with_noise, channel_capacities, closed_form_variances, optimal_gain,
    squeezing_db, sweep_nbar, sweep_r, variance_vs_gain, CapacityNoise, ExperimentParams,
};
use cvdc::circuit::{build_experiment_setup, parse_netlist, render_netlist, run_circuit, Detector};
use cvdc::detection::{bell_variances, claire_current, enl_correct, from_db, to_db};
use cvdc::montecarlo::{
    bpcm_roundtrip, sample_variance, spectrum_estimate, synthesize_photocurrent, ModulatedTone,
    SpectrumConfig,
};
use cvdc::pipeline::{detected_forms, detected_state, engine_noise_budget, setup_params};
use report::{
    BerReport, BudgetReport, CapacityReport, CorrectionReport, DetectorReading, EstimateReport,
    MonteCarloReport, Provenance, RunReport, SimulateReport, ThresholdReport,
};
use std::fs;
use std::io::Write as _;
use std::path::PathBuf;

/// Engine and closed forms must agree to this before a report is emitted.
const CROSS_CHECK_TOL: f64 = 1e-9;

#[derive(Parser)]
#[command(
    name = "cvdc",
    version,
    about = "Continuous-variable tripartite entanglement and dense-coding toolkit",
    after_help = "All noise powers are linear and relative to the shot noise limit \
(vacuum = 1, i.e. 0 dB); decibels are 10*log10 of that ratio. Capacities are in nats."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ParamArgs {
    /// Squeezing parameter of the EPR source
    #[arg(long, default_value_t = 0.674, allow_negative_numbers = true)]
    r: f64,
    /// Intensity efficiency of the sender/receiver arms
    #[arg(
        long = "xi1-sq",
        default_value_t = 0.987,
        allow_negative_numbers = true
    )]
    xi1_sq: f64,
    /// Intensity efficiency of the controller arm
    #[arg(
        long = "xi2-sq",
        default_value_t = 0.937,
        allow_negative_numbers = true
    )]
    xi2_sq: f64,
    /// Detector quantum efficiency
    #[arg(long = "eta-sq", default_value_t = 0.95, allow_negative_numbers = true)]
    eta_sq: f64,
    /// Feed-forward gain from the controller current to the sum current
    #[arg(long = "gain", default_value_t = std::f64::consts::FRAC_1_SQRT_2, allow_negative_numbers = true)]
    gain: f64,
    /// Amplitude modulation variance at the detection plane
    #[arg(long = "vxs", default_value_t = 0.0, allow_negative_numbers = true)]
    v_xs: f64,
    /// Phase modulation variance at the detection plane
    #[arg(long = "vys", default_value_t = 0.0, allow_negative_numbers = true)]
    v_ys: f64,
}

impl ParamArgs {
    fn to_params(&self) -> ExperimentParams {
        ExperimentParams {
            r: self.r,
            xi1_sq: self.xi1_sq,
            xi2_sq: self.xi2_sq,
            eta_sq: self.eta_sq,
            g: self.gain,
            v_xs: self.v_xs,
            v_ys: self.v_ys,
            sigma_sq: 0.0,
        }
    }
}

#[derive(Args, Clone)]
struct GridArgs {
    /// First grid point
    #[arg(long, allow_negative_numbers = true)]
    start: f64,
    /// Last grid point (inclusive)
    #[arg(long, allow_negative_numbers = true)]
    stop: f64,
    /// Grid spacing, must be positive
    #[arg(long, allow_negative_numbers = true)]
    step: f64,
}

impl GridArgs {
    fn build(&self) -> anyhow::Result<Vec<f64>> {
        if !self.step.is_finite() || self.step <= 0.0 {
            bail!("--step must be positive");
        }
        if self.stop < self.start {
            bail!("--stop must not be below --start");
        }
        let n = ((self.stop - self.start) / self.step + 1.0 + 1e-9).floor() as usize;
        Ok((0..n).map(|k| self.start + k as f64 * self.step).collect())
    }
}

#[derive(Subcommand)]
enum Command {
    /// Reproduce the benchmark operating point through both the closed forms
    /// and the circuit engine; fails if the two routes disagree beyond 1e-9
    Experiment {
        #[command(flatten)]
        params: ParamArgs,
        /// Mean photon number for the capacity block of the report
        #[arg(long, default_value_t = 11.0)]
        nbar: f64,
        /// Write output here instead of stdout
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// Run a netlist file and report its detector readings
    Simulate {
        /// Netlist path
        netlist: PathBuf,
        /// Write output here instead of stdout
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// Noise powers versus squeezing parameter, as CSV
    /// (r,v_sum,v_diff,v_sum_helped,v_sum_helped_opt,g_opt)
    SweepR {
        #[command(flatten)]
        params: ParamArgs,
        #[command(flatten)]
        grid: GridArgs,
        /// Write output here instead of stdout
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// Channel capacities versus mean photon number, as CSV
    /// (nbar,c_helped,c_unhelped,c_coherent,c_squeezed)
    Capacity {
        #[command(flatten)]
        params: ParamArgs,
        /// Single mean photon number (alternative to a grid)
        #[arg(long, conflicts_with_all = ["start", "stop", "step"], allow_negative_numbers = true)]
        nbar: Option<f64>,
        #[arg(long, requires_all = ["stop", "step"], allow_negative_numbers = true)]
        start: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        stop: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        step: Option<f64>,
        /// Write output here instead of stdout
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// Mean photon numbers where the dense-coding capacities overtake the
    /// coherent and squeezed baselines
    Thresholds {
        #[command(flatten)]
        params: ParamArgs,
        /// Pin the sum power instead of deriving it from the closed forms
        /// (the published crossings used the measured 0.76 / 0.48 / 0.47)
        #[arg(long = "v-sum")]
        v_sum: Option<f64>,
        /// Pin the difference power
        #[arg(long = "v-diff")]
        v_diff: Option<f64>,
        /// Pin the helped sum power
        #[arg(long = "v-sum-helped")]
        v_sum_helped: Option<f64>,
        /// Write output here instead of stdout
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// Remove an electronics noise floor from a measured SNL-relative level
    Correct {
        /// Measured trace level in dB relative to shot noise
        #[arg(long = "measured-db", allow_hyphen_values = true)]
        measured_db: f64,
        /// Electronics floor in dB relative to shot noise
        #[arg(long = "enl-db", allow_hyphen_values = true)]
        enl_db: f64,
        /// Write output here instead of stdout
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
    /// Seeded Monte Carlo cross-check of the three benchmark currents,
    /// including a pulse-code round trip over the helped and unhelped floors
    Montecarlo {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 1_000_000)]
        samples: usize,
        /// Bits per pulse-code round trip
        #[arg(long = "ber-bits", default_value_t = 10_000)]
        ber_bits: usize,
        /// Pulse amplitude for the round trip
        #[arg(
            long = "ber-depth",
            default_value_t = 0.9,
            allow_negative_numbers = true
        )]
        ber_depth: f64,
        /// Also synthesize the helped-current spectrum and write it as CSV
        /// (freq_hz,psd_db_rel_snl)
        #[arg(long = "psd-out", value_name = "PATH")]
        psd_out: Option<PathBuf>,
        /// Write output here instead of stdout
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
}

fn emit(text: &str, out: Option<&PathBuf>) -> anyhow::Result<()> {
    match out {
        Some(path) => {
            fs::write(path, text).with_context(|| format!("writing {}", path.display()))?
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
        }
    }
    Ok(())
}

fn json_report<T: serde::Serialize>(value: &T) -> anyhow::Result<String> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(text)
}

/// Six significant digits, plain decimal/scientific as Display chooses.
fn sig6(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let magnitude = x.abs().log10().floor() as i32;
    let scale = 10f64.powi(5 - magnitude);
    let rounded = (x * scale).round() / scale;
    format!("{rounded}")
}

fn netlist_hash(text: &str) -> String {
    use sha2::{Digest, Sha256};
    let digest = Sha256::digest(text.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn provenance(netlist_text: &str, seed: Option<u64>) -> Provenance {
    Provenance {
        tool: "cvdc".to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed,
        netlist_sha256: netlist_hash(netlist_text),
    }
}

fn cmd_experiment(params: &ParamArgs, nbar: f64, out: Option<&PathBuf>) -> anyhow::Result<()> {
    let p = params.to_params();
    let closed = closed_form_variances(&p)?;
    let engine = engine_noise_budget(&p)?;
    let max_deviation = closed.max_deviation(&engine);
    if max_deviation > CROSS_CHECK_TOL {
        bail!(
            "closed forms and circuit engine disagree by {max_deviation:e} (> {CROSS_CHECK_TOL:e})"
        );
    }
    let g_opt = optimal_gain(&p)?;
    let capacities = channel_capacities(&p.with_nbar(nbar)?)?;
    let netlist = render_netlist(&build_experiment_setup(&setup_params(&p))?);
    let report = RunReport {
        params: p,
        closed_form: BudgetReport::from(&closed),
        engine: BudgetReport::from(&engine),
        max_deviation,
        optimal_gain: g_opt,
        v_sum_helped_at_optimal_gain: variance_vs_gain(&p, g_opt)? + 0.5 * p.v_xs,
        squeezing_db: squeezing_db(p.r),
        capacities: CapacityReport::from(&capacities),
        provenance: provenance(&netlist, None),
    };
    emit(&json_report(&report)?, out)
}

fn cmd_simulate(netlist_path: &PathBuf, out: Option<&PathBuf>) -> anyhow::Result<()> {
    let text = fs::read_to_string(netlist_path)
        .with_context(|| format!("reading {}", netlist_path.display()))?;
    let spec = parse_netlist(&text)?;
    let state = run_circuit(&spec)?;
    let mut detectors = Vec::new();
    for d in &spec.detectors {
        match *d {
            Detector::Bell { i, j, eta } => {
                let (v_sum, v_diff) = bell_variances(&state, i - 1, j - 1, eta)?;
                detectors.push(DetectorReading::Bell {
                    modes: [i, j],
                    eta,
                    v_sum,
                    v_sum_db: to_db(v_sum),
                    v_diff,
                    v_diff_db: to_db(v_diff),
                });
            }
            Detector::XDet { i, eta } => {
                let current = claire_current(&state, i - 1, eta)?;
                let variance = current.variance_linear();
                detectors.push(DetectorReading::Amplitude {
                    mode: i,
                    eta,
                    variance,
                    variance_db: to_db(variance),
                });
            }
        }
    }
    let dim = 2 * state.n_modes();
    let covariance: Vec<Vec<f64>> = (0..dim)
        .map(|row| (0..dim).map(|col| state.cov()[(row, col)]).collect())
        .collect();
    let report = SimulateReport {
        n_modes: spec.n_modes,
        mean: state.mean().as_slice().to_vec(),
        covariance,
        symplectic_eigenvalues: state.symplectic_eigenvalues(),
        detectors,
        provenance: provenance(&text, None),
    };
    emit(&json_report(&report)?, out)
}

fn cmd_sweep_r(params: &ParamArgs, grid: &GridArgs, out: Option<&PathBuf>) -> anyhow::Result<()> {
    let rows = sweep_r(&params.to_params(), &grid.build()?)?;
    let mut csv = String::from("r,v_sum,v_diff,v_sum_helped,v_sum_helped_opt,g_opt\n");
    for row in rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            sig6(row.r),
            sig6(row.v_sum),
            sig6(row.v_diff),
            sig6(row.v_sum_helped),
            sig6(row.v_sum_helped_opt),
            sig6(row.g_opt),
        ));
    }
    emit(&csv, out)
}

fn cmd_capacity(
    params: &ParamArgs,
    nbar: Option<f64>,
    start: Option<f64>,
    stop: Option<f64>,
    step: Option<f64>,
    out: Option<&PathBuf>,
) -> anyhow::Result<()> {
    let grid = match (nbar, start, stop, step) {
        (Some(n), None, None, None) => vec![n],
        (None, Some(start), Some(stop), Some(step)) => GridArgs { start, stop, step }.build()?,
        _ => bail!("give either --nbar or a full --start/--stop/--step grid"),
    };
    let rows = sweep_nbar(&params.to_params(), &grid)?;
    let mut csv = String::from("nbar,c_helped,c_unhelped,c_coherent,c_squeezed\n");
    for row in rows {
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            sig6(row.nbar),
            sig6(row.helped),
            sig6(row.unhelped),
            sig6(row.coherent),
            sig6(row.squeezed),
        ));
    }
    emit(&csv, out)
}

fn cmd_thresholds(
    params: &ParamArgs,
    v_sum: Option<f64>,
    v_diff: Option<f64>,
    v_sum_helped: Option<f64>,
    out: Option<&PathBuf>,
) -> anyhow::Result<()> {
    let p = params.to_params();
    let mut noise = CapacityNoise::from_params(&p)?;
    if let Some(v) = v_sum {
        noise.v_sum = v;
    }
    if let Some(v) = v_diff {
        noise.v_diff = v;
    }
    if let Some(v) = v_sum_helped {
        noise.v_sum_helped = v;
    }
    let thresholds = capacity_thresholds_with_noise(&p, &noise)?;
    let report = ThresholdReport {
        params: p,
        noise,
        nbar_helped_vs_coherent: thresholds.coherent_helped,
        nbar_unhelped_vs_coherent: thresholds.coherent_unhelped,
        nbar_helped_vs_squeezed: thresholds.squeezed_helped,
    };
    emit(&json_report(&report)?, out)
}

fn cmd_correct(measured_db: f64, enl_db: f64, out: Option<&PathBuf>) -> anyhow::Result<()> {
    let corrected = enl_correct(from_db(measured_db), from_db(enl_db))?;
    let report = CorrectionReport {
        measured_db,
        enl_db,
        corrected_linear: corrected,
        corrected_db: to_db(corrected),
    };
    emit(&json_report(&report)?, out)
}

fn cmd_montecarlo(
    params: &ParamArgs,
    seed: u64,
    samples: usize,
    ber_bits: usize,
    ber_depth: f64,
    psd_out: Option<&PathBuf>,
    out: Option<&PathBuf>,
) -> anyhow::Result<()> {
    let p = params.to_params();
    let budget = closed_form_variances(&p)?;
    let state = detected_state(&p)?;
    let (sum, diff, helped) = detected_forms(&p);
    let mut estimates = Vec::new();
    for (label, form, analytic, offset) in [
        ("sum", &sum, budget.v_sum - 0.5 * p.v_xs, 0u64),
        ("diff", &diff, budget.v_diff - 0.5 * p.v_ys, 1),
        ("helped", &helped, budget.v_sum_helped - 0.5 * p.v_xs, 2),
    ] {
        let est = sample_variance(&state, form, samples, seed.wrapping_add(offset))?;
        estimates.push(EstimateReport {
            current: label.to_string(),
            analytic,
            sampled: est.variance,
            std_error: est.std_error,
            z_score: est.z_score(analytic),
        });
    }

    let mut bpcm = Vec::new();
    if ber_bits > 0 {
        let bits: Vec<bool> = (0..ber_bits).map(|k| (k * 5) % 3 != 0).collect();
        for (noise, offset) in [
            (budget.v_sum_helped - 0.5 * p.v_xs, 3u64),
            (budget.v_sum - 0.5 * p.v_xs, 4),
        ] {
            let run = bpcm_roundtrip(&bits, noise, ber_depth, seed.wrapping_add(offset))?;
            bpcm.push(BerReport {
                noise_variance: noise,
                depth: ber_depth,
                bits: ber_bits,
                errors: run.errors,
                ber: run.ber,
                wilson_low: run.wilson_low,
                wilson_high: run.wilson_high,
            });
        }
    }

    if let Some(path) = psd_out {
        let cfg = SpectrumConfig::benchmark();
        let tone = ModulatedTone::benchmark_carrier(0.4);
        let noise = budget.v_sum_helped - 0.5 * p.v_xs;
        let series = synthesize_photocurrent(noise, &tone, &cfg, 400_000, seed)?;
        let trace = spectrum_estimate(&series, &cfg)?;
        let mut csv = String::from("freq_hz,psd_db_rel_snl\n");
        for (f, db) in trace.freq_hz.iter().zip(&trace.psd_db_rel_snl) {
            csv.push_str(&format!("{},{}\n", sig6(*f), sig6(*db)));
        }
        emit(&csv, Some(path))?;
    }

    let netlist = render_netlist(&build_experiment_setup(&setup_params(&p))?);
    let report = MonteCarloReport {
        params: p,
        seed,
        samples,
        estimates,
        bpcm,
        provenance: provenance(&netlist, Some(seed)),
    };
    emit(&json_report(&report)?, out)
}

fn main() -> std::process::ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Experiment { params, nbar, out } => cmd_experiment(params, *nbar, out.as_ref()),
        Command::Simulate { netlist, out } => cmd_simulate(netlist, out.as_ref()),
        Command::SweepR { params, grid, out } => cmd_sweep_r(params, grid, out.as_ref()),
        Command::Capacity {
            params,
            nbar,
            start,
            stop,
            step,
            out,
        } => cmd_capacity(params, *nbar, *start, *stop, *step, out.as_ref()),
        Command::Thresholds {
            params,
            v_sum,
            v_diff,
            v_sum_helped,
            out,
        } => cmd_thresholds(params, *v_sum, *v_diff, *v_sum_helped, out.as_ref()),
        Command::Correct {
            measured_db,
            enl_db,
            out,
        } => cmd_correct(*measured_db, *enl_db, out.as_ref()),
        Command::Montecarlo {
            params,
            seed,
            samples,
            ber_bits,
            ber_depth,
            psd_out,
            out,
        } => cmd_montecarlo(
            params,
            *seed,
            *samples,
            *ber_bits,
            *ber_depth,
            psd_out.as_ref(),
            out.as_ref(),
        ),
    };
    match result {
        Ok(()) => std::process::ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            std::process::ExitCode::FAILURE
        }
    }
}
