use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use hornshacl::chase::{core_chase_trace, oblivious_chase};
use hornshacl::format::{
    parse_abox, parse_shapes, parse_targets, parse_tbox, print_interpretation, ParseError,
};
use hornshacl::kb::{ABox, TBox};
use hornshacl::model::{build_can, BuildOptions};
use hornshacl::pipeline::{
    prepare, run, Input, Mode, PipelineError, Prepared, RunConfig, DEFAULT_DEPTH, DEFAULT_MAX_NODES,
};
use hornshacl::rewrite::{pure, rewrite, RewriteOptions, RootTypes};
use hornshacl::selftest::{selftest, SelftestConfig};

#[derive(Parser)]
#[command(
    name = "hornshacl",
    version,
    about = "Stratified SHACL validation over Horn-SHIQ knowledge bases"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate targets against a knowledge base.
    Validate(ValidateArgs),
    /// Build the canonical model of a knowledge base.
    BuildModel(ModelArgs),
    /// Run the core chase (or the oblivious chase) and dump every round.
    Chase(ChaseArgs),
    /// Print the rewritten constraints in the shapes format.
    Rewrite(RewriteArgs),
    /// Cross-check all routes on random cases.
    Selftest(SelftestArgs),
}

#[derive(Args)]
struct KbArgs {
    #[arg(long)]
    tbox: Option<PathBuf>,
    #[arg(long)]
    abox: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum CliMode {
    Direct,
    Rewrite,
    PureAlchi,
    PureShaclb,
    Chase,
}

impl From<CliMode> for Mode {
    fn from(m: CliMode) -> Mode {
        match m {
            CliMode::Direct => Mode::Direct,
            CliMode::Rewrite => Mode::Rewrite,
            CliMode::PureAlchi => Mode::PureAlchi,
            CliMode::PureShaclb => Mode::PureShaclb,
            CliMode::Chase => Mode::Chase,
        }
    }
}

#[derive(Args)]
struct ValidateArgs {
    #[command(flatten)]
    kb: KbArgs,
    #[arg(long)]
    shapes: PathBuf,
    #[arg(long)]
    targets: PathBuf,
    #[arg(long, value_enum, default_value = "direct")]
    mode: CliMode,
    /// Word length limit of the direct route; round limit of the chase.
    #[arg(long, default_value_t = DEFAULT_DEPTH)]
    depth: usize,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

#[derive(Args)]
struct ModelArgs {
    #[command(flatten)]
    kb: KbArgs,
    #[arg(long, default_value_t = DEFAULT_DEPTH)]
    depth: usize,
    /// Dump the atoms instead of a summary.
    #[arg(long)]
    emit: bool,
}

#[derive(Args)]
struct ChaseArgs {
    #[command(flatten)]
    kb: KbArgs,
    #[arg(long, default_value_t = DEFAULT_DEPTH)]
    rounds: usize,
    /// Node bound of the core computation.
    #[arg(long, default_value_t = 64)]
    bound: usize,
    /// Run the oblivious chase to its fixpoint instead.
    #[arg(long)]
    oblivious: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum RewriteRoute {
    Rewrite,
    PureAlchi,
    PureShaclb,
}

#[derive(Args)]
struct RewriteArgs {
    #[arg(long)]
    tbox: Option<PathBuf>,
    #[arg(long)]
    shapes: PathBuf,
    /// Restrict root types to those of this ABox.
    #[arg(long)]
    abox: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "rewrite")]
    mode: RewriteRoute,
    /// Also print the derived quadruples as comments.
    #[arg(long)]
    quadruples: bool,
}

#[derive(Args)]
struct SelftestArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    cases: usize,
    /// Break the model builder on purpose; the harness must notice.
    #[arg(long)]
    inject_bug: bool,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

fn read(path: &Path) -> Result<String, PipelineError> {
    std::fs::read_to_string(path)
        .map_err(|e| PipelineError::Input(format!("{}: {e}", path.display())))
}

fn parse<T>(path: &Path, f: impl Fn(&str) -> Result<T, ParseError>) -> Result<T, PipelineError> {
    f(&read(path)?).map_err(|e| PipelineError::Input(format!("{}: {e}", path.display())))
}

fn load_kb(kb: &KbArgs) -> Result<(TBox, ABox), PipelineError> {
    let tbox = kb
        .tbox
        .as_deref()
        .map(|p| parse(p, parse_tbox))
        .transpose()?
        .unwrap_or_default();
    let abox = kb
        .abox
        .as_deref()
        .map(|p| parse(p, parse_abox))
        .transpose()?
        .unwrap_or_default();
    Ok((tbox, abox))
}

fn prepare_kb(kb: &KbArgs) -> Result<Prepared, PipelineError> {
    let (tbox, abox) = load_kb(kb)?;
    prepare(&Input {
        tbox,
        abox,
        constraints: Vec::new(),
        targets: BTreeSet::new(),
    })
}

const INCONSISTENT: &str = "INCONSISTENT knowledge base";

fn validate_cmd(args: &ValidateArgs) -> Result<i32, PipelineError> {
    let (tbox, abox) = load_kb(&args.kb)?;
    let input = Input {
        tbox,
        abox,
        constraints: parse(&args.shapes, parse_shapes)?,
        targets: parse(&args.targets, parse_targets)?,
    };
    let config = RunConfig {
        mode: args.mode.into(),
        depth: args.depth,
        ..RunConfig::default()
    };
    let report = run(&input, &config)?;
    match args.format {
        Format::Text => print!("{}", report.to_text()),
        Format::Json => println!("{}", report.to_json()),
    }
    Ok(report.exit_code())
}

fn build_model_cmd(args: &ModelArgs) -> Result<i32, PipelineError> {
    let prepared = prepare_kb(&args.kb)?;
    let Some(completed) = &prepared.completed else {
        println!("{INCONSISTENT}");
        return Ok(2);
    };
    let options = BuildOptions {
        depth: args.depth,
        max_nodes: DEFAULT_MAX_NODES,
        mutation: Default::default(),
    };
    let can = build_can(&prepared.sat, completed, options);
    if args.emit {
        print!(
            "{}",
            print_interpretation(&can, Some(prepared.sat.signature()))
        );
    } else {
        println!("nodes {}", can.len());
        println!("anonymous {}", can.anonymous_count());
        println!("atoms {}", can.atom_count());
        println!("complete {}", can.is_complete());
    }
    Ok(0)
}

fn chase_cmd(args: &ChaseArgs) -> Result<i32, PipelineError> {
    let prepared = prepare_kb(&args.kb)?;
    if prepared.completed.is_none() {
        println!("{INCONSISTENT}");
        return Ok(2);
    }
    let depth_limit = |e: hornshacl::chase::ChaseError| PipelineError::DepthLimit(e.to_string());
    if args.oblivious {
        let atoms = oblivious_chase(&prepared.sat, &prepared.abox, DEFAULT_MAX_NODES)
            .map_err(depth_limit)?;
        print!("{}", print_interpretation(&atoms.to_interpretation(), None));
        return Ok(0);
    }
    let trace = core_chase_trace(&prepared.sat, &prepared.abox, args.rounds, args.bound)
        .map_err(depth_limit)?;
    for (i, round) in trace.rounds.iter().enumerate() {
        println!("# round {i}: {} nodes", round.len());
        print!("{}", print_interpretation(&round.to_interpretation(), None));
    }
    if !trace.terminated {
        println!("# no fixpoint within {} rounds", args.rounds);
        return Ok(5);
    }
    Ok(0)
}

fn rewrite_cmd(args: &RewriteArgs) -> Result<i32, PipelineError> {
    let kb = KbArgs {
        tbox: args.tbox.clone(),
        abox: args.abox.clone(),
    };
    let (tbox, abox) = load_kb(&kb)?;
    let constraints = parse(&args.shapes, parse_shapes)?;
    let prepared = prepare(&Input {
        tbox,
        abox,
        constraints,
        targets: BTreeSet::new(),
    })?;
    if prepared.completed.is_none() {
        println!("{INCONSISTENT}");
        return Ok(2);
    }
    let roots = match args.abox {
        Some(_) => RootTypes::Only(prepared.root_types()),
        None => RootTypes::All,
    };
    let options = RewriteOptions {
        roots,
        keep_quadruples: args.quadruples,
    };
    let rewriting = rewrite(&prepared.sat, &prepared.normalized(), &options)?;
    if args.quadruples {
        let sig = prepared.sat.signature();
        for (level, quadruples) in rewriting.quadruples.iter().enumerate() {
            for q in quadruples {
                println!("# K{level} {}", q.show(sig));
            }
        }
    }
    match args.mode {
        RewriteRoute::Rewrite => print!("{rewriting}"),
        RewriteRoute::PureAlchi => {
            let program = pure::alchi(&prepared.sat, &rewriting).map_err(|reason| {
                PipelineError::Unsupported {
                    mode: Mode::PureAlchi,
                    reason,
                }
            })?;
            print!("{program}");
        }
        RewriteRoute::PureShaclb => print!("{}", pure::shaclb(&prepared.sat, &rewriting)),
    }
    Ok(0)
}

fn selftest_cmd(args: &SelftestArgs) -> i32 {
    let report = selftest(&SelftestConfig {
        seed: args.seed,
        cases: args.cases,
        inject_bug: args.inject_bug,
    });
    match args.format {
        Format::Text => print!("{report}"),
        Format::Json => println!(
            "{}",
            serde_json::to_string_pretty(&report).expect("reports serialize")
        ),
    }
    if report.is_success() {
        0
    } else {
        1
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Validate(args) => validate_cmd(args),
        Command::BuildModel(args) => build_model_cmd(args),
        Command::Chase(args) => chase_cmd(args),
        Command::Rewrite(args) => rewrite_cmd(args),
        Command::Selftest(args) => Ok(selftest_cmd(args)),
    };
    let code = result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        e.exit_code()
    });
    ExitCode::from(code as u8)
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn the_command_line_is_well_formed() {
        Cli::command().debug_assert();
    }
}
