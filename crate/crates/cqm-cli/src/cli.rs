//! Argument parsing and the three commands: `validate`, `histogram`,
//! `sweep`.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use cqm::control::{build_waveform, traversal_retardations};
use cqm::monte_carlo::{run_analyzer_sweep, run_histogram};

use crate::config::{canonical_text, config_digest, parse_config, resolve, ResolvedConfig};
use crate::fit::fit_cos_squared;
use crate::output::{histogram_csv, sidecar_text, sweep_csv, write_atomic, SweepMeta};
use crate::CliError;

const EXIT_CODE_HELP: &str = "\
Exit codes:
  0  success
  2  configuration error (parse failure, unknown or missing keys, out-of-range values)
  3  drive-schedule error (invalid pulse pair or infeasible storage length)
  4  i/o error (unreadable config, unwritable output)";

/// Simulate a cyclical quantum memory for polarization qubits.
#[derive(Debug, Parser)]
#[command(name = "cqm", version, after_help = EXIT_CODE_HELP)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Options shared by every command.
#[derive(Debug, Args)]
pub struct CommonOpts {
    /// Experiment config file (flat key = value text).
    #[arg(long)]
    pub config: PathBuf,
    /// Override the config's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Print the canonical resolved config to stdout.
    #[arg(long)]
    pub print_resolved: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a config: parse, ranges, drive schedule, digest.
    Validate {
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Run the experiment and write the arrival-time histogram.
    Histogram {
        #[command(flatten)]
        common: CommonOpts,
        /// Output table path; a `.meta` sidecar is written next to it.
        #[arg(long)]
        out: PathBuf,
        /// Worker thread count (results are identical at any setting).
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Run one histogram per analyzer angle and write the fringe table.
    Sweep {
        #[command(flatten)]
        common: CommonOpts,
        /// Output table path; a `.meta` sidecar is written next to it.
        #[arg(long)]
        out: PathBuf,
        /// Worker thread count (results are identical at any setting).
        #[arg(long)]
        threads: Option<usize>,
        /// First analyzer angle, degrees (inclusive).
        #[arg(long, default_value_t = 0.0)]
        start: f64,
        /// Last analyzer angle, degrees (exclusive; 180 closes the fringe).
        #[arg(long, default_value_t = 180.0)]
        end: f64,
        /// Angle step, degrees.
        #[arg(long, default_value_t = 10.0)]
        step: f64,
    },
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Validate { common } => cmd_validate(&common),
        Command::Histogram {
            common,
            out,
            threads,
        } => cmd_histogram(&common, &out, threads),
        Command::Sweep {
            common,
            out,
            threads,
            start,
            end,
            step,
        } => cmd_sweep(&common, &out, threads, start, end, step),
    }
}

fn load(common: &CommonOpts) -> Result<(ResolvedConfig, bool), CliError> {
    let text = std::fs::read_to_string(&common.config)
        .map_err(|e| CliError::Io(format!("reading {:?}: {e}", common.config)))?;
    let raw = parse_config(&text)?;
    let had_digest = raw.digest_claim().is_some();
    let resolved = resolve(&raw, common.seed)?;
    Ok((resolved, had_digest))
}

fn cmd_validate(common: &CommonOpts) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&common.config)
        .map_err(|e| CliError::Io(format!("reading {:?}: {e}", common.config)))?;
    let raw = match parse_config(&text) {
        Ok(raw) => {
            println!("ok: config parses");
            raw
        }
        Err(e) => {
            println!("FAIL: config parses: {e}");
            return Err(e);
        }
    };
    let had_digest = raw.digest_claim().is_some();
    let resolved = match resolve(&raw, common.seed) {
        Ok(r) => {
            println!("ok: field ranges valid");
            println!(
                "ok: drive schedule resolved ({})",
                if r.synthesized_delays {
                    "delays synthesized from cycles"
                } else {
                    "explicit delays"
                }
            );
            r
        }
        Err(e) => {
            match &e {
                CliError::Schedule(msg) => println!("FAIL: drive schedule: {msg}"),
                _ => println!("FAIL: field ranges valid: {e}"),
            }
            return Err(e);
        }
    };
    let cfg = &resolved.experiment;

    // The waveform exists (resolve built it); report the on-interval.
    let waveform = build_waveform(&cfg.drive)?;
    let on_start = cfg.drive.gd1_delay;
    let on_end = cfg.drive.gd2_delay + cfg.drive.pulse_width;
    if on_end - on_start > 1e-9 {
        println!(
            "ok: drive waveform valid (on for {:.3} ns, from {:.3} to {:.3} ns)",
            on_end - on_start,
            on_start,
            on_end
        );
    } else {
        println!("ok: drive waveform valid (drive stays off)");
    }

    // Do the delays actually realize the requested storage length?
    let deltas = traversal_retardations(&waveform, cfg.cycles, cfg.drive.round_trip)?;
    let mut mistimed = None;
    for (i, &delta) in deltas.iter().enumerate() {
        let k = i as u32 + 1;
        let target = if k < cfg.cycles { std::f64::consts::PI } else { 0.0 };
        if (delta - target).abs() > 1e-9 {
            mistimed = Some((k, delta, target));
            break;
        }
    }
    if let Some((k, delta, target)) = mistimed {
        let msg = format!(
            "traversal {k} sees {delta:.6} rad, needs {target:.6}: delays do \
             not realize {}-cycle storage",
            cfg.cycles
        );
        println!("FAIL: schedule realizes the requested storage: {msg}");
        return Err(CliError::Schedule(msg));
    }
    println!("ok: schedule realizes {}-cycle storage", cfg.cycles);

    // Causality in the trigger frame: the earliest drive edge must not
    // precede the trigger itself.
    let earliest_edge = cfg.fiber_delay + cfg.drive.gd1_delay.min(cfg.drive.gd2_delay);
    if earliest_edge < 0.0 {
        let msg = format!(
            "earliest drive edge at {earliest_edge:.3} ns precedes the \
             trigger; increase fiber_delay or the generator delays"
        );
        println!("FAIL: drive edges after the trigger: {msg}");
        return Err(CliError::Config(msg));
    }
    println!(
        "ok: drive edges after the trigger (earliest at {earliest_edge:.3} ns)"
    );

    if had_digest {
        println!("ok: config digest matches the resolved config");
    }
    println!(
        "valid: {} cycles, seed {}, digest {}",
        cfg.cycles,
        cfg.seed,
        &config_digest(cfg)[..12]
    );
    if common.print_resolved {
        print!("{}", canonical_text(cfg));
    }
    Ok(())
}

fn with_pool<T: Send>(
    threads: Option<usize>,
    f: impl FnOnce() -> T + Send,
) -> Result<T, CliError> {
    match threads {
        None => Ok(f()),
        Some(n) => Ok(rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Config(format!("--threads {n}: {e}")))?
            .install(f)),
    }
}

fn sidecar_path(out: &Path) -> PathBuf {
    out.with_extension("meta")
}

fn cmd_histogram(common: &CommonOpts, out: &Path, threads: Option<usize>) -> Result<(), CliError> {
    let (resolved, _) = load(common)?;
    let cfg = resolved.experiment;
    if common.print_resolved {
        print!("{}", canonical_text(&cfg));
    }

    let hist = with_pool(threads, || run_histogram(&cfg))??;
    // A zero-length acquisition is a valid dry run: header-only table.
    let csv = if cfg.duration == 0.0 {
        String::from("bin_start_ns,bin_end_ns,counts\n")
    } else {
        histogram_csv(&hist)
    };
    write_atomic(out, &csv)?;
    let meta = sidecar_path(out);
    write_atomic(&meta, &sidecar_text(&cfg, None))?;

    println!(
        "histogram: {} pairs emitted, {} signal counts, {} darks, {} bins",
        hist.pairs_emitted,
        hist.signal_counts,
        hist.dark_counts,
        hist.n_bins()
    );
    println!(
        "wrote {} and {} (config digest {})",
        out.display(),
        meta.display(),
        &config_digest(&cfg)[..12]
    );
    Ok(())
}

fn cmd_sweep(
    common: &CommonOpts,
    out: &Path,
    threads: Option<usize>,
    start: f64,
    end: f64,
    step: f64,
) -> Result<(), CliError> {
    if !start.is_finite() || !end.is_finite() || !step.is_finite() || step <= 0.0 || end <= start {
        return Err(CliError::Config(format!(
            "sweep range needs end > start and step > 0, got start {start}, \
             end {end}, step {step}"
        )));
    }
    let mut thetas = Vec::new();
    let mut k = 0u32;
    loop {
        let theta = start + f64::from(k) * step;
        if theta >= end - 1e-9 {
            break;
        }
        thetas.push(theta);
        k += 1;
        if k > 100_000 {
            return Err(CliError::Config(
                "sweep step produces more than 100000 angles".into(),
            ));
        }
    }
    if thetas.is_empty() {
        return Err(CliError::Config(
            "sweep range contains no angles".into(),
        ));
    }

    let (resolved, _) = load(common)?;
    let cfg = resolved.experiment;
    if common.print_resolved {
        print!("{}", canonical_text(&cfg));
    }

    let points = with_pool(threads, || run_analyzer_sweep(&cfg, &thetas))??;
    let fit_points: Vec<(f64, f64)> = points
        .iter()
        .map(|p| (p.analyzer_theta, p.counts as f64))
        .collect();
    let fit = fit_cos_squared(&fit_points);

    write_atomic(out, &sweep_csv(&points))?;
    let meta = sidecar_path(out);
    let sweep_meta = SweepMeta {
        start,
        end,
        step,
        fit: fit.as_ref(),
    };
    write_atomic(&meta, &sidecar_text(&cfg, Some(&sweep_meta)))?;

    println!(
        "sweep: {} angles from {start} by {step} deg, peak at cycle {}",
        points.len(),
        cfg.cycles
    );
    match &fit {
        Some(f) => println!(
            "fit: center {:.2} deg (sigma {:.2}), contrast {:.4} (sigma {:.4}), \
             offset {:.1}",
            f.center_deg, f.center_sigma_deg, f.contrast, f.contrast_sigma, f.offset
        ),
        None => println!("fit: skipped (not enough distinct angles or no fringe)"),
    }
    println!(
        "wrote {} and {} (config digest {})",
        out.display(),
        meta.display(),
        &config_digest(&cfg)[..12]
    );
    Ok(())
}
