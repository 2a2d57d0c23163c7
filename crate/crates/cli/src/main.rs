//! `dlfit2`: learn propositional logic programs from Boolean state
//! transitions, generate training corpora, train and run the neural
//! learner, and evaluate predictions.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use dlfit2_cli::bnet::{emit_bnet, parse_bnet};
use dlfit2_cli::program_text::{emit_program, parse_program};
use dlfit2_cli::report::{holdout_mean, run_eval, EvalReport, HoldoutPipeline};
use dlfit2_cli::transitions_io::{
    read_transitions_csv, read_transitions_json, render_transitions_text, write_transitions_csv,
    write_transitions_json,
};
use dlfit2_core::dataset::{build_training_set, read_dataset, write_dataset, GenMode, GenOptions};
use dlfit2_core::model::{
    load_checkpoint, predict_program, save_checkpoint, train as train_model, ModelConfig,
    TrainConfig, DEFAULT_THRESHOLD,
};
use dlfit2_core::{
    decompose_predict, full_transitions, learn_program, LogicProgram,
    TransitionSet,
};

#[derive(Parser)]
#[command(name = "dlfit2", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Engine {
    Symbolic,
    Neural,
    Decompose,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Sampled,
    ExhaustiveComplete,
    ExhaustivePartial,
}

#[derive(Args)]
struct OutputArgs {
    /// Write here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// Enumerate the full transition table of a program (.lp or .bnet).
    Simulate {
        /// Program file; `.bnet` is parsed as a Boolean network.
        program: PathBuf,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Learn a program from a transitions file (.csv or .json).
    Learn {
        transitions: PathBuf,
        #[arg(long, value_enum, default_value_t = Engine::Symbolic)]
        engine: Engine,
        /// Checkpoint for the neural engines.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Decode threshold for the neural engines.
        #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
        threshold: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a training corpus.
    GenData {
        #[arg(long, value_enum)]
        mode: Mode,
        #[arg(long)]
        n: usize,
        /// Systems to sample (sampled mode).
        #[arg(long, default_value_t = 1000)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Search all tail orderings during canonicalization (sampled mode).
        #[arg(long)]
        strong_canonical: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the set-attention model on a generated corpus.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 100)]
        epochs: usize,
        #[arg(long, default_value_t = 8)]
        batch: usize,
        #[arg(long, default_value_t = 1e-4)]
        lr: f64,
        #[arg(long, default_value_t = 1e-4)]
        weight_decay: f64,
        #[arg(long, default_value_t = 0.0)]
        momentum: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Model width; the remaining architecture scales from the defaults.
        #[arg(long, default_value_t = 64)]
        dim: usize,
        #[arg(long, default_value_t = 0.05)]
        val_fraction: f64,
        /// Disable the partial-input augmentation pass.
        #[arg(long)]
        no_augment: bool,
        /// Stop once the running train loss drops below this.
        #[arg(long)]
        stop_at: Option<f64>,
    },
    /// Predict a program for a transitions file with a trained model.
    Predict {
        transitions: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
        threshold: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score a predicted program against the original.
    Eval {
        #[arg(long)]
        original: PathBuf,
        #[arg(long)]
        predicted: PathBuf,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Partial-transitions protocol: sample `given` sources, learn, score.
    Holdout {
        program: PathBuf,
        /// Source states revealed to the learner (1..=2^n).
        #[arg(long)]
        given: usize,
        #[arg(long, default_value_t = 50)]
        trials: usize,
        #[arg(long, value_enum, default_value_t = Engine::Symbolic)]
        engine: Engine,
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
        threshold: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Convert between .bnet and program text.
    Convert {
        input: PathBuf,
        /// Output dialect.
        #[arg(long, value_enum)]
        to: Dialect,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Dialect {
    Program,
    Bnet,
}

fn load_program(path: &Path) -> Result<LogicProgram> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    if path.extension().is_some_and(|e| e == "bnet") {
        Ok(parse_bnet(&text)?)
    } else {
        Ok(parse_program(&text)?)
    }
}

fn load_transitions(path: &Path) -> Result<TransitionSet> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    if path.extension().is_some_and(|e| e == "json") {
        read_transitions_json(&text)
    } else {
        read_transitions_csv(&text)
    }
}

fn emit(text: String, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text)
            .with_context(|| format!("writing {}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Simulate { program, output } => {
            let program = load_program(&program)?;
            let transitions = full_transitions(&program)?;
            let text = match output.format {
                Format::Text => render_transitions_text(&transitions),
                Format::Csv => write_transitions_csv(&transitions),
                Format::Json => write_transitions_json(&transitions)?,
            };
            emit(text, output.out.as_deref())
        }
        Command::Learn {
            transitions,
            engine,
            model,
            threshold,
            out,
        } => {
            let transitions = load_transitions(&transitions)?;
            let program = match engine {
                Engine::Symbolic => learn_program(&transitions)?,
                Engine::Neural => {
                    let params = load_model(model.as_deref())?;
                    predict_program(&params, &transitions, threshold)?
                }
                Engine::Decompose => {
                    let params = load_model(model.as_deref())?;
                    let predictor =
                        dlfit2_core::model::ModelPredictor::new(&params, threshold)?;
                    decompose_predict(&transitions, transitions.base(), &predictor)?
                }
            };
            emit(emit_program(&program), out.as_deref())
        }
        Command::GenData {
            mode,
            n,
            count,
            seed,
            strong_canonical,
            out,
        } => {
            let mode = match mode {
                Mode::Sampled => GenMode::Sampled,
                Mode::ExhaustiveComplete => GenMode::ExhaustiveComplete,
                Mode::ExhaustivePartial => GenMode::ExhaustivePartial,
            };
            let examples = build_training_set(&GenOptions {
                mode,
                n,
                count,
                seed,
                strong_canonical,
            })?;
            let seed = matches!(mode, GenMode::Sampled).then_some(seed);
            write_dataset(&out, &examples, n, mode, seed)?;
            eprintln!("wrote {} examples to {}", examples.len(), out.display());
            Ok(())
        }
        Command::Train {
            data,
            out,
            epochs,
            batch,
            lr,
            weight_decay,
            momentum,
            seed,
            dim,
            val_fraction,
            no_augment,
            stop_at,
        } => {
            let (examples, manifest) = read_dataset(&data)?;
            let n = match manifest {
                Some(manifest) => manifest.n,
                None => examples.first().map(|e| e.n).context("empty dataset")?,
            };
            let mut model = ModelConfig::desk_default(n);
            if dim != model.dim {
                model.dim = dim;
                model.ff_hidden = dim * 4;
                model.inducing = (dim / 4).max(1);
                model.enc_blocks = if dim >= 64 { 2 } else { 1 };
            }
            let config = TrainConfig {
                model,
                epochs,
                batch_size: batch,
                lr,
                weight_decay,
                momentum,
                seed,
                val_fraction,
                augment_partial: !no_augment,
                stop_at_train_loss: stop_at,
            };
            let report = train_model(&config, &examples)?;
            save_checkpoint(&report.params, &out, &report.history)?;
            let last = report.history.last().context("no epochs ran")?;
            eprintln!(
                "trained {} epochs; final train loss {:.5}; checkpoint at {}",
                report.history.len(),
                last.train_loss,
                out.display()
            );
            Ok(())
        }
        Command::Predict {
            transitions,
            model,
            threshold,
            out,
        } => {
            let transitions = load_transitions(&transitions)?;
            let params = load_checkpoint(&model)?;
            let program = if transitions.base().len() == params.n() {
                predict_program(&params, &transitions, threshold)?
            } else {
                let predictor = dlfit2_core::model::ModelPredictor::new(&params, threshold)?;
                decompose_predict(&transitions, transitions.base(), &predictor)?
            };
            emit(emit_program(&program), out.as_deref())
        }
        Command::Eval {
            original,
            predicted,
            output,
        } => {
            let name = original
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "system".into());
            let original = load_program(&original)?;
            let predicted = load_program(&predicted)?;
            let report = run_eval(name, &original, &predicted)?;
            let text = render_report(&report, output.format)?;
            emit(text, output.out.as_deref())
        }
        Command::Holdout {
            program,
            given,
            trials,
            engine,
            model,
            threshold,
            seed,
            output,
        } => {
            let program = load_program(&program)?;
            let params = match engine {
                Engine::Symbolic => None,
                Engine::Neural => Some(load_model(model.as_deref())?),
                Engine::Decompose => bail!("holdout supports symbolic and neural engines"),
            };
            let pipeline = match &params {
                None => HoldoutPipeline::Symbolic,
                Some(params) => HoldoutPipeline::Neural { params, threshold },
            };
            let mse = holdout_mean(&program, given, trials, seed, &pipeline)?;
            let n = program.base().len();
            let text = match output.format {
                Format::Text => {
                    format!("holdout {given}/{} over {trials} trials: mean mse {mse:.6}\n", 1u64 << n)
                }
                Format::Json => format!(
                    "{}\n",
                    serde_json::json!({
                        "given": given,
                        "total": 1u64 << n,
                        "trials": trials,
                        "mean_mse": mse,
                    })
                ),
                Format::Csv => format!("given,total,trials,mean_mse\n{given},{},{trials},{mse:.6}\n", 1u64 << n),
            };
            emit(text, output.out.as_deref())
        }
        Command::Convert { input, to, out } => {
            let program = load_program(&input)?;
            let text = match to {
                Dialect::Program => emit_program(&program),
                Dialect::Bnet => emit_bnet(&program),
            };
            emit(text, out.as_deref())
        }
    }
}

fn load_model(path: Option<&Path>) -> Result<dlfit2_core::model::ModelParams> {
    let path = path.context("--model is required for the neural engines")?;
    Ok(load_checkpoint(path)?)
}

fn render_report(report: &EvalReport, format: Format) -> Result<String> {
    Ok(match format {
        Format::Text => report.to_text(),
        Format::Json => format!("{}\n", serde_json::to_string_pretty(report)?),
        Format::Csv => format!("{}\n{}\n", EvalReport::csv_header(), report.to_csv_row()),
    })
}
