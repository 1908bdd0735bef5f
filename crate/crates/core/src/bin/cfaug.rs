use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cfaug::jobs::{self, AnalyzeConfig, Overrides, RunConfig};
use cfaug::Error;

/// Counterfactual augmentation in embedding space.
#[derive(Parser)]
#[command(name = "cfaug", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a bundle manifest and every file it references.
    Validate {
        /// Path to manifest.json.
        #[arg(long)]
        bundle: PathBuf,
        /// `text` or `json`.
        #[arg(long, default_value = "text")]
        format: String,
    },
    /// Run the experiment matrix and write accuracy tables.
    Run(JobArgs),
    /// Score generated counterfactuals against the manual ones.
    Analyze(JobArgs),
}

#[derive(Args)]
struct JobArgs {
    /// Job config (JSON); flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    bundle: Option<PathBuf>,
    /// Variant (run) or method (analyze); repeat or comma-separate.
    #[arg(long = "variant", value_delimiter = ',')]
    variants: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    k: Vec<usize>,
    /// Count (`50`), range (`0..10`) or list (`1,2,3`).
    #[arg(long)]
    seeds: Option<String>,
    /// `free` or `strong`, applied to every variant.
    #[arg(long)]
    regime: Option<String>,
    /// Output directory; defaults to the config's, then $CFAUG_OUT.
    #[arg(long)]
    out: Option<PathBuf>,
    /// csv, json or markdown; repeat or comma-separate.
    #[arg(long = "format", value_delimiter = ',')]
    formats: Vec<String>,
}

impl JobArgs {
    fn overrides(&self) -> Result<Overrides, Error> {
        Ok(Overrides {
            bundle: self.bundle.clone(),
            variants: self.variants.clone(),
            k: self.k.clone(),
            seeds: self.seeds.as_deref().map(jobs::parse_seeds).transpose()?,
            regime: self.regime.as_deref().map(jobs::parse_regime).transpose()?,
            out: self.out.clone(),
            formats: self.formats.iter().map(|f| jobs::parse_format(f)).collect::<Result<_, _>>()?,
            default_out: std::env::var_os(jobs::OUT_ENV).map(PathBuf::from),
        })
    }
}

fn fail(e: &Error) -> ExitCode {
    eprintln!("error[{}]: {e}", e.code());
    ExitCode::from(if e.is_validation() { 1 } else { 2 })
}

fn report(files: &[PathBuf]) {
    for f in files {
        println!("wrote {}", f.display());
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Validate { bundle, format } => {
            let r = jobs::validate_bundle(&bundle);
            if format == "json" {
                println!("{}", serde_json::to_string_pretty(&r).expect("report serializes"));
            } else {
                print!("{}", r.to_text());
            }
            return if r.ok { ExitCode::SUCCESS } else { ExitCode::from(1) };
        }
        Command::Run(args) => args.overrides().and_then(|o| {
            let cfg = match &args.config {
                Some(p) => RunConfig::from_path(p)?,
                None => RunConfig::default(),
            };
            let written = jobs::run_job(&cfg.resolve(&o)?)?;
            report(&written.files);
            Ok(())
        }),
        Command::Analyze(args) => args.overrides().and_then(|o| {
            let cfg = match &args.config {
                Some(p) => AnalyzeConfig::from_path(p)?,
                None => AnalyzeConfig::default(),
            };
            let written = jobs::analyze_job(&cfg.resolve(&o)?)?;
            report(&written.files);
            Ok(())
        }),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(&e),
    }
}
