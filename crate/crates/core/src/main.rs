use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use num_rational::Ratio;

use oracle_lab::adversary::parallel::ParConfig;
use oracle_lab::adversary::pp::{EncodeMode, PpConfig};
use oracle_lab::circuit::{Circuit, TruthTable};
use oracle_lab::harness::{
    run, verify_trace, CountConfig, DiagConfig, Experiment, LearnConfig, MinimizeConfig, MinimizeInputs, RunReport,
    Targets,
};
use oracle_lab::learner::LearnMode;

/// Exact circuit learning under simulated NP oracles, oracle-construction
/// simulators and a diagonalizer. Exits 0 only when every runtime
/// certification of the run passes.
#[derive(Parser)]
#[command(name = "oracle-lab", version)]
struct Cli {
    /// Root seed; overrides the seed of a configuration file.
    #[arg(long, global = true, env = "ORACLE_LAB_SEED")]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Output {
    /// Write the JSONL trace here.
    #[arg(long, alias = "json", value_name = "FILE")]
    trace: Option<PathBuf>,
    /// Write the CSV summary here instead of standard output.
    #[arg(long, value_name = "FILE")]
    csv: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Learn target functions exactly from membership probes.
    Learn {
        #[arg(long, default_value = "parallel")]
        mode: LearnMode,
        /// Input count; taken from the circuit when `--f` names a file.
        #[arg(long)]
        n: Option<usize>,
        /// Size bound; defaults to each target's least size.
        #[arg(long)]
        s: Option<usize>,
        /// A hex truth table or a circuit file.
        #[arg(long, conflicts_with_all = ["all", "random"])]
        f: Option<String>,
        /// Learn every function of `n` inputs.
        #[arg(long)]
        all: bool,
        /// Learn this many distinct random functions of size at most `--max-size`.
        #[arg(long, requires = "max_size")]
        random: Option<usize>,
        #[arg(long)]
        max_size: Option<usize>,
        /// Culling fraction of the adaptive learner.
        #[arg(long, default_value = "1/3", value_parser = parse_ratio)]
        theta: Ratio<u64>,
        /// Adaptive majority voters, odd.
        #[arg(long, default_value_t = 5)]
        samples: usize,
        #[command(flatten)]
        out: Output,
    },
    /// Find smallest equivalents of circuits using only their evaluations.
    Minimize {
        /// Circuit files to minimize.
        #[arg(long = "circuit", value_name = "FILE", conflicts_with = "all")]
        circuits: Vec<PathBuf>,
        /// Minimize every circuit of size at most `--s` over `--n` inputs.
        #[arg(long, requires_all = ["n", "s"])]
        all: bool,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        s: Option<usize>,
        #[arg(long, default_value = "parallel")]
        mode: LearnMode,
        #[arg(long, default_value_t = 5)]
        samples: usize,
        #[command(flatten)]
        out: Output,
    },
    /// Run the row-encoding construction against threshold machines.
    AdversaryPp {
        #[arg(long, value_name = "FILE")]
        config: PathBuf,
        /// Overrides the configured encoding mode.
        #[arg(long)]
        mode: Option<EncodeMode>,
        #[command(flatten)]
        out: Output,
    },
    /// Run the row-encoding construction against one-round query machines.
    AdversaryPar {
        #[arg(long, value_name = "FILE")]
        config: PathBuf,
        #[command(flatten)]
        out: Output,
    },
    /// Build a language every circuit of size at most `s` gets wrong early.
    Diagonalize {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        s: usize,
        #[command(flatten)]
        out: Output,
    },
    /// Repeated gap-counting decisions on planted sets.
    Count {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        threshold: u64,
        /// Planted set sizes.
        #[arg(long, required = true, num_args = 1..)]
        planted: Vec<u64>,
        #[arg(long, default_value_t = 500)]
        trials: usize,
        #[arg(long, default_value = "1/10", value_parser = parse_ratio)]
        delta: Ratio<u64>,
        #[command(flatten)]
        out: Output,
    },
    /// Run an experiment file `{"command": ..., "config": {...}}`.
    Run {
        #[arg(long, value_name = "FILE")]
        preset: PathBuf,
        #[command(flatten)]
        out: Output,
    },
    /// Re-check every certified claim in trace files.
    VerifyTrace {
        #[arg(required = true)]
        traces: Vec<PathBuf>,
    },
}

fn parse_ratio(s: &str) -> Result<Ratio<u64>, String> {
    oracle_lab::ratio::parse(s).ok_or_else(|| format!("expected a rational p/q, got {s:?}"))
}

fn read(path: &Path) -> anyhow::Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn read_circuit(path: &Path) -> anyhow::Result<Circuit> {
    read(path)?.parse().with_context(|| format!("parsing circuit {}", path.display()))
}

/// The experiment a subcommand describes, or `None` for `verify-trace`.
fn experiment(cli: &Cli) -> anyhow::Result<Option<(Experiment, &Output)>> {
    let seed = cli.seed.unwrap_or(0);
    let exp = match &cli.command {
        Command::Learn { mode, n, s, f, all, random, max_size, theta, samples, out } => {
            let (n, targets) = match (f, random) {
                (Some(f), _) if Path::new(f).is_file() => {
                    let c = read_circuit(Path::new(f))?;
                    (c.n(), Targets::Circuits { circuits: vec![c] })
                }
                (Some(hex), _) => {
                    let n = n.context("--n is needed with a hex truth table")?;
                    if TruthTable::from_hex(n, hex).is_none() {
                        bail!("{hex:?} is neither a circuit file nor a truth table on {n} inputs");
                    }
                    (n, Targets::Tables { tables: vec![hex.clone()] })
                }
                (None, Some(count)) => {
                    let n = n.context("--n is needed with --random")?;
                    (n, Targets::Random { count: *count, max_size: max_size.expect("required by clap") })
                }
                (None, None) if *all => (n.context("--n is needed with --all")?, Targets::All),
                (None, None) => bail!("give --f, --all or --random"),
            };
            let cfg = LearnConfig { n, mode: *mode, targets, s: *s, theta: *theta, samples: *samples, seed };
            (Experiment::Learn(cfg), out)
        }
        Command::Minimize { circuits, all, n, s, mode, samples, out } => {
            let (n, inputs) = if *all {
                (n.expect("required by clap"), MinimizeInputs::All { s: s.expect("required by clap") })
            } else {
                let cs = circuits.iter().map(|p| read_circuit(p)).collect::<anyhow::Result<Vec<_>>>()?;
                let Some(first) = cs.first() else { bail!("give --circuit files or --all") };
                (first.n(), MinimizeInputs::Circuits { circuits: cs })
            };
            (Experiment::Minimize(MinimizeConfig { n, inputs, mode: *mode, samples: *samples, seed }), out)
        }
        Command::AdversaryPp { config, mode, out } => {
            let mut cfg = PpConfig::from_json(&read(config)?)?;
            if let Some(m) = mode {
                cfg.mode = *m;
            }
            (Experiment::AdversaryPp(cfg), out)
        }
        Command::AdversaryPar { config, out } => (Experiment::AdversaryPar(ParConfig::from_json(&read(config)?)?), out),
        Command::Diagonalize { n, s, out } => (Experiment::Diagonalize(DiagConfig { n: *n, s: *s }), out),
        Command::Count { m, threshold, planted, trials, delta, out } => {
            let cfg = CountConfig {
                m: *m,
                threshold: *threshold,
                planted: planted.clone(),
                trials: *trials,
                delta: *delta,
                seed,
            };
            (Experiment::Count(cfg), out)
        }
        Command::Run { preset, out } => (Experiment::from_json(&read(preset)?)?, out),
        Command::VerifyTrace { .. } => return Ok(None),
    };
    let (mut exp, out) = exp;
    // a file's own seed stands unless one is given on the command line or in the environment
    let file_based = matches!(cli.command, Command::AdversaryPp { .. } | Command::AdversaryPar { .. } | Command::Run { .. });
    if let Some(s) = cli.seed.filter(|_| file_based) {
        exp.set_seed(s);
    }
    Ok(Some((exp, out)))
}

fn report(rep: &RunReport, out: &Output) -> anyhow::Result<()> {
    if let Some(p) = &out.trace {
        std::fs::write(p, &rep.trace).with_context(|| format!("writing {}", p.display()))?;
    }
    match &out.csv {
        Some(p) => std::fs::write(p, &rep.csv).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{}", rep.csv),
    }
    let v = &rep.verification;
    if let Some(e) = &rep.error {
        eprintln!("{}: stopped: {e}", rep.kind);
    }
    for f in &v.failures {
        eprintln!("{}: check failed: {f}", rep.kind);
    }
    eprintln!(
        "{}: {} records, {} checks, {}",
        rep.kind,
        v.records,
        v.checks,
        if rep.certified() { "certified" } else { "NOT certified" }
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = (|| -> anyhow::Result<bool> {
        if let Command::VerifyTrace { traces } = &cli.command {
            let mut ok = true;
            for p in traces {
                let v = verify_trace(&read(p)?);
                for f in &v.failures {
                    eprintln!("{}: {f}", p.display());
                }
                println!(
                    "{}: {} {} records, {} checks, {}",
                    p.display(),
                    v.kind,
                    v.records,
                    v.checks,
                    if v.passed() { "pass" } else { "FAIL" }
                );
                ok &= v.passed();
            }
            return Ok(ok);
        }
        let (exp, out) = experiment(&cli)?.expect("handled above");
        let rep = run(&exp)?;
        report(&rep, out)?;
        Ok(rep.certified())
    })();
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
