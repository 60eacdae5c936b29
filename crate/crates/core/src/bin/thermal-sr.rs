use std::fs::OpenOptions;
use std::io::{BufWriter, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use thermal_sr::checkpoint::Checkpoint;
use thermal_sr::config::RunConfig;
use thermal_sr::data::{synth_dataset, Dataset, DatasetManifest, Split, SynthOptions};
use thermal_sr::runner::{evaluate_checkpoint, infer_files, InferInput};
use thermal_sr::study::server::{results_from, serve, ServerState};
use thermal_sr::study::{default_roster, generate_assignments, read_ballot_log, replay, Study};
use thermal_sr::train::{Phase, Trainer};
use thermal_sr::{Error, Result};

/// Thermal image super-resolution: training, inference, evaluation and the preference study.
#[derive(Parser)]
#[command(name = "thermal-sr", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic visual-thermal dataset and its manifest.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 8)]
        n: usize,
        /// Samples placed in the test split (taken from the end).
        #[arg(long, default_value_t = 0)]
        test: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 240)]
        height: usize,
        #[arg(long, default_value_t = 320)]
        width: usize,
    },
    /// Train a generator (content phase, then the GAN phase if it has epochs).
    Train {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the configured seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Run only this phase.
        #[arg(long)]
        phase: Option<Phase>,
        /// Resume from, or initialize the GAN phase from, this checkpoint.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Super-resolve LR thermal frames.
    Infer {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// HR RGB frames for fusion models, one per thermal input.
        #[arg(long, num_args = 1..)]
        rgb: Vec<PathBuf>,
        #[arg(required = true)]
        thermal: Vec<PathBuf>,
    },
    /// PSNR/SSIM report on a manifest split.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, default_value = "test")]
        split: String,
        /// Report file; printed to stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Preference study.
    #[command(subcommand)]
    Study(StudyCommand),
}

#[derive(Subcommand)]
enum StudyCommand {
    /// Aggregate a ballot log into the normalized matrix and vote-flow document (JSON).
    Export {
        #[arg(long)]
        ballots: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the HTTP study service over the test split of a manifest.
    Serve(ServeArgs),
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "ballots.tsv")]
    ballots: PathBuf,
    /// Directory holding `reference/` and `models/<name>/` images.
    #[arg(long)]
    images: Option<PathBuf>,
    #[arg(long, default_value = "127.0.0.1:8080")]
    addr: SocketAddr,
}

/// Writes to stdout; a closed pipe downstream is not an error.
fn emit(text: &str) -> Result<()> {
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Error::Io {
            path: PathBuf::from("stdout"),
            source: e,
        }),
        _ => Ok(()),
    }
}

fn append(path: &Path) -> Result<BufWriter<std::fs::File>> {
    let f = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
    Ok(BufWriter::new(f))
}

fn run_phase(t: &mut Trainer, data: &Dataset, out: &Path) -> Result<()> {
    let mut log = append(&out.join(format!("loss_{}.tsv", t.phase)))?;
    let steps = t.fit(data, &mut log)?;
    if let Some(last) = steps.last() {
        log::info!("{} phase finished after {} steps: {last}", t.phase, t.step);
    }
    let path = out.join(format!("{}.ckpt", t.phase));
    Checkpoint::from_trainer(t).save(&path)?;
    println!("{}", path.display());
    Ok(())
}

fn train(
    config: Option<PathBuf>,
    manifest: &Path,
    out: &Path,
    seed: Option<u64>,
    phase: Option<Phase>,
    checkpoint: Option<PathBuf>,
) -> Result<()> {
    let mut cfg = match &config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = seed {
        cfg.train.seed = s;
    }
    let data = Dataset::load(&DatasetManifest::load(manifest)?, Split::Trainval)?;
    std::fs::create_dir_all(out).map_err(|e| Error::Io {
        path: out.to_path_buf(),
        source: e,
    })?;
    let mut t = match &checkpoint {
        Some(p) => {
            let mut t = Checkpoint::load(p)?.trainer()?;
            if config.is_some() || seed.is_some() {
                if cfg.model != t.config.model {
                    return Err(Error::Usage(
                        "--config describes a different model than the checkpoint".into(),
                    ));
                }
                t.config = cfg;
            }
            t
        }
        None if phase == Some(Phase::Gan) => {
            return Err(Error::Usage(
                "--phase gan needs a content-phase --checkpoint".into(),
            ))
        }
        None => Trainer::new(cfg)?,
    };
    if phase == Some(Phase::Gan) && t.phase == Phase::Content {
        t.enter_gan()?;
    }
    if phase == Some(Phase::Content) && t.phase == Phase::Gan {
        return Err(Error::Usage(
            "checkpoint is already in the GAN phase".into(),
        ));
    }
    run_phase(&mut t, &data, out)?;
    if phase.is_none() && t.phase == Phase::Content && t.config.gan.epochs > 0 {
        t.enter_gan()?;
        run_phase(&mut t, &data, out)?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth {
            out,
            n,
            test,
            seed,
            height,
            width,
        } => {
            let opts = SynthOptions {
                n_test: test,
                ..SynthOptions::sized(height, width)
            };
            synth_dataset(&out, n, seed, opts)?;
            println!("{}", out.join("manifest.tsv").display());
            Ok(())
        }
        Command::Train {
            config,
            manifest,
            out,
            seed,
            phase,
            checkpoint,
        } => train(config, &manifest, &out, seed, phase, checkpoint),
        Command::Infer {
            checkpoint,
            out,
            rgb,
            thermal,
        } => {
            if !rgb.is_empty() && rgb.len() != thermal.len() {
                return Err(Error::Usage(format!(
                    "{} RGB frames for {} thermal frames",
                    rgb.len(),
                    thermal.len()
                )));
            }
            let inputs: Vec<InferInput> = thermal
                .into_iter()
                .enumerate()
                .map(|(i, t)| InferInput {
                    thermal: t,
                    rgb: rgb.get(i).cloned(),
                })
                .collect();
            for p in infer_files(&checkpoint, &inputs, &out)? {
                println!("{}", p.display());
            }
            Ok(())
        }
        Command::Eval {
            checkpoint,
            manifest,
            split,
            out,
        } => {
            let split: Split = split
                .parse()
                .map_err(|e: Error| Error::Usage(e.to_string()))?;
            let report =
                evaluate_checkpoint(&checkpoint, &DatasetManifest::load(&manifest)?, split)?;
            match out {
                Some(p) => std::fs::write(&p, report.to_text())
                    .map_err(|e| Error::Io { path: p, source: e }),
                None => emit(&report.to_text()),
            }
        }
        Command::Study(StudyCommand::Export { ballots, out }) => {
            let roster = default_roster();
            let matrix =
                replay(roster.len(), &read_ballot_log(&ballots)?).map_err(|e| Error::Format {
                    path: ballots.clone(),
                    msg: e.to_string(),
                })?;
            let doc = serde_json::to_string_pretty(&results_from(&matrix, &roster)?)
                .expect("results serialize");
            match out {
                Some(p) => std::fs::write(&p, doc).map_err(|e| Error::Io { path: p, source: e }),
                None => emit(&format!("{doc}\n")),
            }
        }
        Command::Study(StudyCommand::Serve(args)) => {
            let manifest = DatasetManifest::load(&args.manifest)?;
            let images: Vec<String> = manifest.split(Split::Test).map(|e| e.id.clone()).collect();
            if images.is_empty() {
                return Err(Error::Config(
                    "the manifest has no test split to study".into(),
                ));
            }
            let roster = default_roster();
            let study = Study::new(
                roster.clone(),
                generate_assignments(&images, roster.len(), args.seed)?,
            )?
            .with_log(&args.ballots)?;
            let state = ServerState::new(study, args.images).shared();
            tokio::runtime::Runtime::new()
                .map_err(|e| Error::Io {
                    path: PathBuf::from("tokio runtime"),
                    source: e,
                })?
                .block_on(serve(args.addr, state))
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
