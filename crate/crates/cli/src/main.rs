use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use metatrap::grid::GridSpec;
use metatrap::hitting::survival_function;
use metatrap::hpg::{assess, exponentiality_report, measure_convdtv, HpgParameters};
use metatrap::io::{chain_to_json, read_chain, write_measure_csv, write_profile_csv, write_report_csv, write_samples_csv, write_survival_csv};
use metatrap::measures::{d_profile, empirical_measure, quasi_stationary, restricted_invariant, TrapPartition};
use metatrap::models::{
    build_birth_death, build_tiar_full, build_tiar_projection, build_tiar_projection_continuous, project_and_verify_lumping,
    BirthDeathSpec,
};
use metatrap::montecarlo::{sample_hitting_times, SamplerConfig};
use metatrap::{Error, FiniteChain, ProbabilityVector};
use serde_json::json;

#[derive(Parser)]
#[command(name = "metatrap", version, about = "Trap measures, hitting times and metastability certificates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ModelName {
    /// Log-barrier birth–death chain on {0..n}.
    Bd,
    /// Descent-position projection of top-in-at-random, discrete time.
    TiarProj,
    /// The same projection at unit rate in continuous time.
    TiarProjCt,
    /// Top-in-at-random on all n! orderings (n <= 8).
    TiarFull,
}

#[derive(Args)]
struct Source {
    /// Chain file (JSON).
    #[arg(long, conflicts_with = "model")]
    chain: Option<PathBuf>,
    /// Built-in model instead of a chain file.
    #[arg(long, value_enum, requires = "n")]
    model: Option<ModelName>,
    #[arg(long)]
    n: Option<usize>,
}

#[derive(Args)]
struct Trap {
    #[command(flatten)]
    source: Source,
    /// Trap states A, e.g. "0-24,30". Defaults to the model's trap.
    #[arg(long, conflicts_with = "target")]
    trap: Option<String>,
    /// Target states G (complement of the trap).
    #[arg(long)]
    target: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Build a model and write its chain file.
    Model {
        #[arg(value_enum)]
        name: ModelName,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Validate a chain; optionally emit its stationary measure or distance profile.
    Analyze {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        stationary: bool,
        /// Distance profile (t, d, d_bar) over --grid.
        #[arg(long)]
        profile: bool,
        #[arg(long, default_value = "1:1e4:8")]
        grid: String,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Measure f, d, r and assemble the certificate (exit 2 when it does not apply).
    Certify {
        #[command(flatten)]
        trap: Trap,
        #[arg(long = "R")]
        big_r: f64,
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Quasi-stationary distribution and T*.
    Qsd {
        #[command(flatten)]
        trap: Trap,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact survival curve against e^{-t/T*}.
    Survival {
        #[command(flatten)]
        trap: Trap,
        /// State index, "pi_A" or "qsd".
        #[arg(long, default_value = "pi_A")]
        start: String,
        #[arg(long, default_value = "0.001T*:20T*:64")]
        grid: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Normalized expected occupation before leaving the trap.
    Empirical {
        #[command(flatten)]
        trap: Trap,
        #[arg(long)]
        start: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample hitting times of the target.
    Simulate {
        #[command(flatten)]
        trap: Trap,
        #[arg(long, default_value = "pi_A")]
        start: String,
        #[arg(long, required = true)]
        seed: Option<u64>,
        #[arg(long = "N", default_value_t = 10_000)]
        trajectories: usize,
        /// Censoring time; defaults to 50 T*.
        #[arg(long)]
        max_time: Option<f64>,
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check that the full shuffle lumps onto the descent-position chain.
    LumpCheck {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Certificate plus measured convergence and exponentiality.
    Report {
        #[command(flatten)]
        trap: Trap,
        #[arg(long = "R")]
        big_r: f64,
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        #[arg(long, default_value = "2R:20T*:64")]
        grid: String,
        /// Constant C in the comparison against C (r + epsilon2).
        #[arg(long, default_value_t = 10.0)]
        constant: f64,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Per-start curves (start, t, survival, exp, weighted_deviation).
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

enum Failure {
    Input(String),
    NotApplicable(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::NotApplicable(cert) => Failure::NotApplicable(serde_json::to_string_pretty(&cert).unwrap_or_default()),
            other => Failure::Input(other.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Input(e.to_string())
    }
}

type Outcome = std::result::Result<(), Failure>;

fn sink(out: &Option<PathBuf>) -> io::Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

fn write_text(out: &Option<PathBuf>, text: &str) -> Outcome {
    let mut w = sink(out)?;
    w.write_all(text.as_bytes())?;
    w.flush()?;
    Ok(())
}

fn build_model(name: ModelName, n: usize) -> metatrap::Result<FiniteChain> {
    match name {
        ModelName::Bd => build_birth_death(n),
        ModelName::TiarProj => build_tiar_projection(n),
        ModelName::TiarProjCt => build_tiar_projection_continuous(n),
        ModelName::TiarFull => build_tiar_full(n),
    }
}

fn load(src: &Source) -> Result<FiniteChain, Failure> {
    match (&src.chain, src.model, src.n) {
        (Some(p), _, _) => Ok(read_chain(p)?),
        (None, Some(m), Some(n)) => Ok(build_model(m, n)?),
        _ => Err(Failure::Input("give either --chain FILE or --model NAME --n N".into())),
    }
}

/// "0-3,7" -> [0, 1, 2, 3, 7].
fn parse_states(s: &str) -> Result<Vec<usize>, Failure> {
    let bad = || Failure::Input(format!("cannot read state list {s:?}"));
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        match part.split_once('-') {
            Some((a, b)) => {
                let (a, b): (usize, usize) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
                out.extend(a..=b);
            }
            None => out.push(part.parse().map_err(|_| bad())?),
        }
    }
    Ok(out)
}

fn partition(trap: &Trap, chain: &FiniteChain) -> Result<TrapPartition, Failure> {
    let n = chain.state_count();
    if let Some(a) = &trap.trap {
        return Ok(TrapPartition::from_trap(n, &parse_states(a)?)?);
    }
    if let Some(g) = &trap.target {
        return Ok(TrapPartition::from_target(n, &parse_states(g)?)?);
    }
    match (trap.source.model, trap.source.n) {
        (Some(ModelName::Bd), Some(size)) => Ok(TrapPartition::from_trap(n, &BirthDeathSpec::new(size)?.trap())?),
        (Some(ModelName::TiarProj | ModelName::TiarProjCt), _) => Ok(TrapPartition::from_target(n, &[0])?),
        _ => Err(Failure::Input("give --trap or --target".into())),
    }
}

fn start_measure(spec: &str, chain: &FiniteChain, part: &TrapPartition) -> Result<ProbabilityVector, Failure> {
    match spec {
        "pi_A" => Ok(restricted_invariant(&chain.stationary_measure()?, part)?),
        "qsd" => Ok(quasi_stationary(chain, part)?.measure),
        s => {
            let x: usize = s.parse().map_err(|_| Failure::Input(format!("--start: expected a state index, pi_A or qsd, got {s:?}")))?;
            if x >= chain.state_count() || !part.in_a(x) {
                return Err(Failure::Input(format!("--start: state {x} is not in the trap")));
            }
            Ok(ProbabilityVector::point_mass(chain.state_count(), x))
        }
    }
}

fn grid(spec: &str) -> Result<GridSpec, Failure> {
    spec.parse().map_err(|e: Error| Failure::Input(format!("--grid: {e}")))
}

fn params(big_r: f64, alpha: f64) -> Result<HpgParameters, Failure> {
    Ok(HpgParameters::new(big_r, alpha)?)
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Model { name, n, out } => write_text(&out, &chain_to_json(&build_model(name, n)?)),
        Command::Analyze { source, stationary, profile, grid: g, format, out } => {
            let chain = load(&source)?;
            if stationary {
                let pi = chain.stationary_measure()?;
                return match format {
                    Format::Csv => Ok(write_measure_csv(sink(&out)?, chain.labels(), pi.as_slice())?),
                    Format::Json => write_text(&out, &format!("{}\n", serde_json::to_string(pi.as_slice()).unwrap())),
                };
            }
            if profile {
                let times = grid(&g)?.resolve(None, None)?;
                let rows = times.iter().map(|&t| d_profile(&chain, t).map(|(d, db)| (t, d, db))).collect::<Result<Vec<_>, _>>()?;
                return Ok(write_profile_csv(sink(&out)?, &rows)?);
            }
            let summary = json!({
                "states": chain.state_count(),
                "time": chain.time_kind(),
                "uniformization_rate": chain.uniformization_rate(),
                "transitions": chain.generator().nnz(),
                "valid": true,
            });
            write_text(&out, &format!("{}\n", serde_json::to_string_pretty(&summary).unwrap()))
        }
        Command::Certify { trap, big_r, alpha, out } => {
            let chain = load(&trap.source)?;
            let part = partition(&trap, &chain)?;
            let cert = assess(&chain, &part, &params(big_r, alpha)?)?;
            let text = serde_json::to_string_pretty(&cert).unwrap();
            write_text(&out, &format!("{text}\n"))?;
            if cert.applicable {
                Ok(())
            } else {
                Err(Failure::NotApplicable(text))
            }
        }
        Command::Qsd { trap, format, out } => {
            let chain = load(&trap.source)?;
            let part = partition(&trap, &chain)?;
            let q = quasi_stationary(&chain, &part)?;
            match format {
                Format::Csv => Ok(write_measure_csv(sink(&out)?, chain.labels(), q.measure.as_slice())?),
                Format::Json => {
                    let v = json!({
                        "measure": q.measure.as_slice(),
                        "T_star": q.mean_exit_time,
                        "decay_rate": q.decay_rate,
                        "eigenvalue": q.eigenvalue,
                        "residual": q.residual,
                    });
                    write_text(&out, &format!("{}\n", serde_json::to_string_pretty(&v).unwrap()))
                }
            }
        }
        Command::Survival { trap, start, grid: g, out } => {
            let chain = load(&trap.source)?;
            let part = partition(&trap, &chain)?;
            let t_star = quasi_stationary(&chain, &part)?.mean_exit_time;
            let times: Vec<f64> = std::iter::once(0.0).chain(grid(&g)?.resolve(None, Some(t_star))?).collect();
            let curve = survival_function(&chain, &start_measure(&start, &chain, &part)?, part.g(), &times)?;
            Ok(write_survival_csv(sink(&out)?, &curve, t_star)?)
        }
        Command::Empirical { trap, start, out } => {
            let chain = load(&trap.source)?;
            let part = partition(&trap, &chain)?;
            let em = empirical_measure(&chain, start, &part)?;
            Ok(write_measure_csv(sink(&out)?, chain.labels(), em.as_slice())?)
        }
        Command::Simulate { trap, start, seed, trajectories, max_time, threads, out } => {
            let seed = seed.ok_or_else(|| Failure::Input("--seed is required".into()))?;
            let chain = load(&trap.source)?;
            let part = partition(&trap, &chain)?;
            let max_time = match max_time {
                Some(t) => t,
                None => 50.0 * quasi_stationary(&chain, &part)?.mean_exit_time,
            };
            let mut cfg = SamplerConfig::new(seed, trajectories, max_time)?;
            if let Some(t) = threads {
                cfg = cfg.with_threads(t);
            }
            let emp = sample_hitting_times(&chain, &start_measure(&start, &chain, &part)?, part.g(), &cfg)?;
            Ok(write_samples_csv(sink(&out)?, &emp)?)
        }
        Command::LumpCheck { n, out } => {
            let rep = project_and_verify_lumping(&build_tiar_full(n)?, n)?;
            write_text(&out, &format!("{}\n", serde_json::to_string_pretty(&rep).unwrap()))
        }
        Command::Report { trap, big_r, alpha, grid: g, constant, out, csv } => {
            let chain = load(&trap.source)?;
            let part = partition(&trap, &chain)?;
            let cert = assess(&chain, &part, &params(big_r, alpha)?)?;
            let t_star = quasi_stationary(&chain, &part)?.mean_exit_time;
            let times = grid(&g)?.resolve(Some(big_r), Some(t_star))?;
            let part = part.with_basin(&cert.b_alpha, alpha)?;
            let exp = exponentiality_report(&chain, &part, &cert, &times, constant)?;
            let conv = if cert.applicable && !cert.b_alpha.is_empty() {
                Some(measure_convdtv(&chain, &part, &cert, &times)?)
            } else {
                None
            };
            if let Some(path) = &csv {
                write_report_csv(sink(&Some(path.clone()))?, &exp.curves)?;
            }
            let v = json!({ "certificate": cert, "exponentiality": exp, "convergence": conv });
            write_text(&out, &format!("{}\n", serde_json::to_string_pretty(&v).unwrap()))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::NotApplicable(json)) => {
            eprintln!("certificate not applicable (r + 2 f^alpha >= 1/4):\n{json}");
            ExitCode::from(2)
        }
    }
}
