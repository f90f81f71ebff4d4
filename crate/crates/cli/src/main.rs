use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use paulichan::channel::{affine_basis_from_mub, gen_pauli_constraints, qubit_constraints};
use paulichan::design::{fisher_matrix, optimal_configs_qubit, search_optimal_configs};
use paulichan::estimate::{estimate_affine, estimate_choi, estimate_directions, DirectionSettings, TomographyConfiguration};
use paulichan::harness::{
    robustness_sweep, run_case_study, simulate_record, strategy_configs, write_metrics_csv, write_robustness_csv,
    CaseStudyReport, CaseStudySpec, RobustnessSpec, Strategy,
};
use paulichan::io::{ChannelDoc, ConfigDoc, DesignDoc, EstimateDoc, RecordDoc};
use paulichan::qstate::{bloch_operator, operator_to_bloch, standard_mub, BlochVector};
use paulichan::rng::rng_from_seed;
use paulichan::solver::SolverSettings;

#[derive(Parser)]
#[command(name = "paulichan", version, about = "Pauli channel simulation, tomography and experiment design")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Seed of the random number generator (overrides a seed in the input file).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file; standard output when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// JSON input document.
    #[arg(long, global = true)]
    spec: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a measurement record from a channel and a set of configurations.
    Simulate,
    /// Estimate a channel from a measurement record.
    Estimate {
        #[arg(long, value_enum, default_value_t = Model::Pauli)]
        model: Model,
        /// Iteration cap of the solver.
        #[arg(long)]
        max_iters: Option<usize>,
    },
    /// Search the channel directions of a qubit Pauli channel.
    Directions,
    /// Optimal tomography configurations and their Fisher information.
    Design,
    /// Run a case study; writes CSV and a JSON sidecar.
    Casestudy,
    /// Sweep the misalignment between assumed and true channel directions.
    Robustness,
}

#[derive(Clone, Copy, ValueEnum)]
enum Model {
    /// Unrestricted CPTP map.
    Choi,
    /// Qubit Pauli channel in the standard directions.
    Pauli,
    /// Generalized Pauli channel in the standard bases.
    GenPauli,
}

#[derive(Deserialize)]
struct SimulateSpec {
    channel: ChannelDoc,
    #[serde(default)]
    configs: Vec<ConfigDoc>,
    strategy: Option<Strategy>,
    #[serde(default = "default_shots")]
    shots: u64,
}

#[derive(Deserialize)]
struct DirectionsSpec {
    channel: ChannelDoc,
    #[serde(default)]
    settings: DirectionSettings,
}

#[derive(Deserialize)]
struct DesignSpec {
    channel: ChannelDoc,
    #[serde(default = "default_shots")]
    shots: u64,
    /// Random restarts of the numerical search (d ≥ 3).
    #[serde(default)]
    restarts: usize,
}

fn default_shots() -> u64 {
    1000
}

#[derive(Debug)]
enum Failure {
    Lib(paulichan::Error),
    Input(String),
    Output(io::Error),
    /// Output was written but some rows have no converged trial.
    Incomplete(String),
}

impl From<paulichan::Error> for Failure {
    fn from(e: paulichan::Error) -> Self {
        Failure::Lib(e)
    }
}

type Res<T> = Result<T, Failure>;

fn read_spec<T: DeserializeOwned>(path: Option<&Path>) -> Res<T> {
    let path = path.ok_or_else(|| Failure::Input("--spec <json-file> is required".into()))?;
    let text = fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn open_out(out: Option<&Path>) -> Res<Box<dyn Write>> {
    match out {
        Some(p) => fs::File::create(p).map(|f| Box::new(io::BufWriter::new(f)) as Box<dyn Write>).map_err(Failure::Output),
        None => Ok(Box::new(io::stdout().lock())),
    }
}

fn emit_json<T: Serialize>(value: &T, out: Option<&Path>) -> Res<()> {
    let mut w = open_out(out)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Failure::Output(e.into()))?;
    writeln!(w).and_then(|_| w.flush()).map_err(Failure::Output)
}

fn simulate(cli: &Cli) -> Res<()> {
    let spec: SimulateSpec = read_spec(cli.spec.as_deref())?;
    let channel = spec.channel.build()?;
    let configs: Vec<TomographyConfiguration> = match (spec.strategy, spec.configs.is_empty()) {
        (Some(s), true) => strategy_configs(s, channel.mub(), channel.lambda(), spec.shots)?,
        (None, false) => spec.configs.iter().map(ConfigDoc::to_configuration).collect::<Result<_, _>>()?,
        _ => return Err(Failure::Input("give either `configs` or `strategy`".into())),
    };
    let mut rng = rng_from_seed(cli.seed.unwrap_or(0));
    let record = simulate_record(&configs, &channel.choi(), &mut rng)?;
    emit_json(&RecordDoc::new(&configs, &record), cli.out.as_deref())
}

fn estimate(cli: &Cli, model: Model, max_iters: Option<usize>) -> Res<()> {
    let doc: RecordDoc = read_spec(cli.spec.as_deref())?;
    let (configs, record) = doc.parse()?;
    let d = configs.first().map(|c| c.dim()).ok_or_else(|| Failure::Input("record has no configurations".into()))?;
    let mut s = SolverSettings::default();
    if let Some(n) = max_iters {
        s.max_iters = n;
    }
    let result = match model {
        Model::Choi => {
            let sol = estimate_choi(&configs, &record, &s)?;
            let lambda = affine_basis_from_mub(&standard_mub(d)?).implied_params(sol.choi.matrix());
            EstimateDoc::new(lambda, &sol.choi, sol.objective, sol.iterations)
        }
        Model::Pauli | Model::GenPauli => {
            if matches!(model, Model::Pauli) && d != 2 {
                return Err(Failure::Input(format!("the pauli model needs qubit data, got d = {d}")));
            }
            let basis = affine_basis_from_mub(&standard_mub(d)?);
            let ineq = if d == 2 { qubit_constraints() } else { gen_pauli_constraints(d) };
            let est = estimate_affine(&basis, &ineq, &configs, &record, &s)?;
            EstimateDoc::new(est.lambda.clone(), &basis.choi(&est.lambda), est.residual, est.iterations)
        }
    };
    emit_json(&result, cli.out.as_deref())
}

fn directions(cli: &Cli) -> Res<()> {
    let spec: DirectionsSpec = read_spec(cli.spec.as_deref())?;
    let channel = spec.channel.build()?;
    if channel.dim() != 2 {
        return Err(Failure::Input("direction estimation is implemented for qubit channels only".into()));
    }
    let oracle = |b: &BlochVector| {
        let rho = bloch_operator(1.0, b);
        operator_to_bloch(&channel.apply_matrix(&rho))
    };
    let mut rng = rng_from_seed(cli.seed.unwrap_or(0));
    let est = estimate_directions(&oracle, &spec.settings, &mut rng)?;
    emit_json(&est, cli.out.as_deref())
}

fn design(cli: &Cli) -> Res<()> {
    let spec: DesignSpec = read_spec(cli.spec.as_deref())?;
    let channel = spec.channel.build()?;
    let basis = affine_basis_from_mub(channel.mub());
    let configs = if channel.dim() == 2 {
        let lambda: [f64; 3] = channel.lambda().try_into().expect("qubit channel has three parameters");
        optimal_configs_qubit(channel.mub(), &lambda, spec.shots)?
    } else {
        let mut rng = rng_from_seed(cli.seed.unwrap_or(0));
        let search = search_optimal_configs(&channel, spec.restarts, &mut rng)?;
        if !search.aligned_attains_max {
            eprintln!(
                "note: the search found objective {} above the best aligned configuration",
                search.best().objective
            );
        }
        search.baselines.iter().map(|b| b.to_configuration(spec.shots)).collect::<Result<_, _>>()?
    };
    let fisher = fisher_matrix(&basis, channel.lambda(), &configs)?;
    emit_json(&DesignDoc::new(&configs, &fisher), cli.out.as_deref())
}

fn casestudy(cli: &Cli) -> Res<()> {
    let mut spec: CaseStudySpec = read_spec(cli.spec.as_deref())?;
    if let Some(seed) = cli.seed {
        spec.seed = seed;
    }
    let rows = run_case_study(&spec)?;
    let mut w = open_out(cli.out.as_deref())?;
    write_metrics_csv(&rows, &mut w).and_then(|_| w.flush()).map_err(Failure::Output)?;
    let failed: Vec<String> = rows.iter().filter(|r| !r.complete).map(|r| r.n_shots.to_string()).collect();
    let report = CaseStudyReport { seed: spec.seed, spec, rows };
    if let Some(p) = &cli.out {
        emit_json(&report, Some(&p.with_extension("json")))?;
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Incomplete(format!("no trial converged at n = {}", failed.join(", "))))
    }
}

fn robustness(cli: &Cli) -> Res<()> {
    let mut spec: RobustnessSpec = read_spec(cli.spec.as_deref())?;
    if let Some(seed) = cli.seed {
        spec.seed = seed;
    }
    let rows = robustness_sweep(&spec)?;
    let mut w = open_out(cli.out.as_deref())?;
    write_robustness_csv(&rows, &mut w).and_then(|_| w.flush()).map_err(Failure::Output)?;
    let failed: Vec<String> = rows.iter().filter(|r| r.trial_count == 0).map(|r| r.alpha.to_string()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Incomplete(format!("no trial converged at alpha = {}", failed.join(", "))))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate => simulate(&cli),
        Command::Estimate { model, max_iters } => estimate(&cli, *model, *max_iters),
        Command::Directions => directions(&cli),
        Command::Design => design(&cli),
        Command::Casestudy => casestudy(&cli),
        Command::Robustness => robustness(&cli),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Lib(e)) if e.is_convergence_failure() => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
        Err(Failure::Incomplete(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Output(e)) => {
            eprintln!("error: cannot write output: {e}");
            ExitCode::from(1)
        }
    }
}
