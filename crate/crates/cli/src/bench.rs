use std::path::PathBuf;

use clap::Args;
use manipkit_core::sim::{self, BenchConfig, BenchError, PolicyKind, Suite};

use crate::error::{write_output, CliError, CliResult};
use crate::simulate::{PolicyArg, PolicyOptions};

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Suite directory: one subdirectory of scene JSONs per category
    #[arg(long)]
    pub suite: PathBuf,
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [PolicyArg::Onestep, PolicyArg::Random])]
    pub policies: Vec<PolicyArg>,
    /// Trials per scene
    #[arg(long, default_value_t = 1)]
    pub trials: usize,
    #[command(flatten)]
    pub options: PolicyOptions,
    /// Report JSON
    #[arg(long)]
    pub out: PathBuf,
}

pub fn run(args: &BenchArgs) -> CliResult<()> {
    let suite = Suite::load_dir(&args.suite).map_err(|e| match &e {
        BenchError::Scene { path, source } => CliError::input(format!(
            "invalid scene {}: at `{}`: {source}",
            path.display(),
            source.field_path().unwrap_or("")
        )),
        _ => CliError::input(e),
    })?;
    let mut policies: Vec<PolicyKind> = Vec::new();
    for p in &args.policies {
        let p = PolicyKind::from(*p);
        if !policies.contains(&p) {
            policies.push(p);
        }
    }
    let cfg = BenchConfig {
        policies,
        trials: args.trials,
        seed: args.options.seed,
        policy: args.options.config(),
    };
    let predictor = args.options.predictor.build();
    let report = sim::run_benchmark(&suite, predictor.as_ref(), &args.options.predictor.to_string(), &cfg)
        .map_err(CliError::input)?;
    for c in &report.empty_categories {
        eprintln!("category {c:?} has no scenes; excluded from AVG");
    }
    print!("{}", report.to_table());
    write_output(&args.out, &(report.to_json_pretty() + "\n"))
}
