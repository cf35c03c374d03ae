use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use mimo_amc::capture::{read_capture, write_capture};
use mimo_amc::channel::{draw_channel, noise_variance_from_snr, synthesize_frame};
use mimo_amc::classifier::{classify, Algorithm};
use mimo_amc::harness::{
    crossing_snr, figure_configs, run_sweep_with_threads, snr_grid, SweepConfig, SweepResult,
};
use mimo_amc::modem::{Constellation, Scheme};
use mimo_amc::report::{emit_results, OutputFormat};

#[derive(Debug, Parser)]
#[command(
    name = "mimo-amc",
    version,
    about = "Blind modulation classification for MIMO links"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Monte-Carlo SNR sweep
    Sweep {
        #[arg(long, default_value_t = -10.0, allow_negative_numbers = true)]
        snr_min: f64,
        #[arg(long, default_value_t = 15.0, allow_negative_numbers = true)]
        snr_max: f64,
        #[arg(long, default_value_t = 2.5)]
        snr_step: f64,
        /// Trials per (SNR, scheme)
        #[arg(long, default_value_t = 500)]
        trials: usize,
        /// Symbols per transmit antenna
        #[arg(long, default_value_t = 512)]
        symbols: usize,
        #[arg(long, default_value_t = 2)]
        mt: usize,
        #[arg(long, default_value_t = 4)]
        mr: usize,
        /// Candidate schemes, comma separated
        #[arg(long, default_value = "bpsk,qpsk,8psk,16qam")]
        mods: String,
        /// proposed, product, equal_weight, alrt_ub (comma separated)
        #[arg(long, default_value = "proposed")]
        algos: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory
        #[arg(long, default_value = "results")]
        out: PathBuf,
        #[arg(long, default_value = "csv")]
        format: String,
        /// Worker threads (default: all cores)
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Classify a recorded capture
    ClassifyFile {
        /// JSON sidecar with m_r, n, noise_variance and m_t
        #[arg(long)]
        meta: PathBuf,
        /// Interleaved little-endian f64 I/Q payload
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value = "bpsk,qpsk,8psk,16qam")]
        mods: String,
        #[arg(long, default_value = "proposed")]
        algo: String,
    },
    /// Re-run one of the four reference experiments
    Reproduce {
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=4))]
        figure: u8,
        #[arg(long, default_value_t = 500)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "results")]
        out: PathBuf,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Write a synthetic capture for classify-file
    Synth {
        #[arg(long)]
        scheme: String,
        #[arg(long, default_value_t = 15.0, allow_negative_numbers = true)]
        snr: f64,
        #[arg(long, default_value_t = 512)]
        symbols: usize,
        #[arg(long, default_value_t = 2)]
        mt: usize,
        #[arg(long, default_value_t = 4)]
        mr: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        meta: PathBuf,
        #[arg(long)]
        data: PathBuf,
    },
}

fn print_summary(label: &str, result: &SweepResult) {
    println!("# {label}");
    println!("{:>8} {:>14} {:>8}", "snr_db", "algorithm", "p_cc");
    for p in &result.points {
        println!(
            "{:>8.2} {:>14} {:>8.4}",
            p.snr_db,
            p.algorithm.name(),
            p.p_cc
        );
    }
    for r in &result.runtime {
        println!(
            "# {}: {:.3} s over {} trials",
            r.algorithm, r.total_seconds, r.trials
        );
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Sweep {
            snr_min,
            snr_max,
            snr_step,
            trials,
            symbols,
            mt,
            mr,
            mods,
            algos,
            seed,
            out,
            format,
            threads,
        } => {
            let format: OutputFormat = format.parse()?;
            let config = SweepConfig {
                snr_db_grid: snr_grid(snr_min, snr_max, snr_step),
                trials_per_point: trials,
                n_symbols: symbols,
                m_t: mt,
                m_r: mr,
                candidates: Scheme::parse_list(&mods)?,
                algorithms: Algorithm::parse_list(&algos)?,
                master_seed: seed,
            };
            config.validate()?;
            let result = run_sweep_with_threads(&config, threads)?;
            emit_results(&result, &out, format)
                .with_context(|| format!("writing results to {}", out.display()))?;
            print_summary("sweep", &result);
        }
        Command::ClassifyFile {
            meta,
            data,
            mods,
            algo,
        } => {
            let frame = read_capture(&meta, &data)?;
            let candidates: Vec<Constellation> = Scheme::parse_list(&mods)?
                .into_iter()
                .map(Constellation::new)
                .collect();
            let algorithm: Algorithm = algo.parse()?;
            let result = classify(&frame, &candidates, algorithm)?;
            println!("decided: {}", result.decided);
            println!("{:>6} {:>20}  beta", "scheme", "combined_log");
            for h in &result.ranked {
                let beta: Vec<String> = h.weights.iter().map(|b| format!("{b:.6}")).collect();
                println!(
                    "{:>6} {:>20.6}  [{}]",
                    h.hypothesis.name(),
                    h.combined_log,
                    beta.join(", ")
                );
            }
        }
        Command::Reproduce {
            figure,
            trials,
            seed,
            out,
            threads,
        } => {
            for (label, config) in figure_configs(figure, trials, seed)? {
                let result = run_sweep_with_threads(&config, threads)?;
                let dir = out.join(format!("fig{figure}")).join(&label);
                emit_results(&result, &dir, OutputFormat::Csv)
                    .with_context(|| format!("writing results to {}", dir.display()))?;
                print_summary(&label, &result);
                for &alg in &config.algorithms {
                    match crossing_snr(&result.curve(alg), 0.9) {
                        Some(x) => println!("# {alg}: P_cc reaches 0.90 at {x:.2} dB"),
                        None => println!("# {alg}: P_cc stays below 0.90 on this grid"),
                    }
                }
            }
        }
        Command::Synth {
            scheme,
            snr,
            symbols,
            mt,
            mr,
            seed,
            meta,
            data,
        } => {
            let constellation = Constellation::from_name(&scheme)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let channel = draw_channel(mt, mr, &mut rng)?;
            let frame = synthesize_frame(
                &constellation,
                &channel,
                noise_variance_from_snr(snr, mt),
                symbols,
                &mut rng,
            )?;
            write_capture(&frame, &meta, &data)?;
            println!("wrote {} and {}", meta.display(), data.display());
        }
    }
    Ok(())
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(2);
    }
}
