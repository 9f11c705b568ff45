//! The `culturality` command-line pipeline.
//!
//! Subcommands: `ingest` validates a survey and echoes its canonical form,
//! `simulate` synthesizes a population and writes factor trajectories,
//! `cluster` writes similarity-cluster assignments plus a silhouette score,
//! and `report` produces the cohort ranking and the HDI-colored cluster
//! map. All outputs are deterministic given `--seed`.
//!
//! Exit codes: 0 on success, 2 on input validation failure, 3 on
//! numerical/clustering failure. Set `CULTURALITY_LOG` to `error`, `info`,
//! or `debug` to control logging.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use log::info;
use thiserror::Error;

use crate::cluster::{auto_k, cluster_kmedoids, silhouette, ClusterError, Clustering};
use crate::config::{ConfigError, RunConfig};
use crate::map::{render_cluster_map, HdiConfig, MapError};
use crate::population::{synthesize_population, Population, SynthesisError};
use crate::report::{rank_cohorts, ranking_csv, ReportError};
use crate::schema::{AttributeSchema, SchemaError};
use crate::sim::{run, SimConfig, SimError, SimResult};
use crate::similarity::{similarity_matrix, SimilarityError, SimilarityMatrix, WeightVector};
use crate::survey::{SurveyError, SurveyTable};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, Error)]
enum PipelineError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Schema(#[from] SchemaError),
    #[error(transparent)]
    Survey(#[from] SurveyError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Synthesis(#[from] SynthesisError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Similarity(#[from] SimilarityError),
    #[error(transparent)]
    Cluster(#[from] ClusterError),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error("survey validation failed:\n{0}")]
    Diagnostics(String),
}

impl PipelineError {
    fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Io(_)
            | PipelineError::Schema(_)
            | PipelineError::Survey(_)
            | PipelineError::Config(_)
            | PipelineError::Map(_)
            | PipelineError::Synthesis(_)
            | PipelineError::Diagnostics(_) => EXIT_INPUT,
            PipelineError::Sim(SimError::InvalidShiftSchedule) => EXIT_INPUT,
            PipelineError::Sim(_)
            | PipelineError::Similarity(_)
            | PipelineError::Cluster(_)
            | PipelineError::Report(_) => EXIT_NUMERIC,
        }
    }
}

#[derive(Parser)]
#[command(
    name = "culturality",
    version,
    about = "Transculturality analytics: survey ingestion, agent simulation, similarity clustering, reports"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a survey file and echo its canonical CSV form
    Ingest(IngestArgs),
    /// Synthesize a population and write factor trajectories
    Simulate(SimulateArgs),
    /// Cluster a synthesized population by weighted similarity
    Cluster(ClusterArgs),
    /// Full pipeline: ranking table, trajectories, clusters, SVG map
    Report(ReportArgs),
}

#[derive(Args)]
struct DataArgs {
    /// Survey CSV (defaults to the bundled table)
    #[arg(long)]
    survey: Option<PathBuf>,
    /// Attribute schema TOML (defaults to the bundled schema)
    #[arg(long)]
    schema: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    /// Run config TOML (defaults to the bundled config)
    #[arg(long)]
    config: Option<PathBuf>,
    /// RNG seed (overrides the config)
    #[arg(long)]
    seed: Option<u64>,
    /// Simulation steps (overrides the config)
    #[arg(long)]
    steps: Option<usize>,
    /// Population size (overrides the config)
    #[arg(long)]
    population: Option<usize>,
    /// Output directory
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct KArgs {
    /// Cluster count
    #[arg(long, conflicts_with = "auto_k")]
    k: Option<usize>,
    /// Choose k in [2, 10] by silhouette
    #[arg(long)]
    auto_k: bool,
}

#[derive(Args)]
struct IngestArgs {
    #[command(flatten)]
    data: DataArgs,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args)]
struct ClusterArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    run: RunArgs,
    #[command(flatten)]
    kargs: KArgs,
}

#[derive(Args)]
struct ReportArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    run: RunArgs,
    #[command(flatten)]
    kargs: KArgs,
    /// HDI config TOML (defaults to the bundled values)
    #[arg(long)]
    hdi: Option<PathBuf>,
}

/// Parses arguments, runs the requested stage, and returns the process
/// exit code.
pub fn run_pipeline<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    init_logging();
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return if err.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    let result = match cli.command {
        Command::Ingest(args) => cmd_ingest(&args),
        Command::Simulate(args) => cmd_simulate(&args),
        Command::Cluster(args) => cmd_cluster(&args),
        Command::Report(args) => cmd_report(&args),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(err) => {
            eprintln!("error: {err}");
            err.exit_code()
        }
    }
}

fn init_logging() {
    let env = env_logger::Env::new().filter_or("CULTURALITY_LOG", "error");
    let _ = env_logger::Builder::from_env(env).try_init();
}

fn load_schema(args: &DataArgs) -> Result<AttributeSchema, PipelineError> {
    match &args.schema {
        Some(path) => Ok(AttributeSchema::from_toml(&fs::read_to_string(path)?)?),
        None => Ok(AttributeSchema::bundled()),
    }
}

fn load_table(args: &DataArgs, schema: &AttributeSchema) -> Result<SurveyTable, PipelineError> {
    let table = match &args.survey {
        Some(path) => SurveyTable::parse(&fs::read_to_string(path)?, schema)?,
        None => SurveyTable::parse(&SurveyTable::bundled().to_csv(), schema)?,
    };
    let diagnostics = table.validate();
    if !diagnostics.is_empty() {
        let listing: Vec<String> = diagnostics.iter().map(|d| format!("  {d}")).collect();
        return Err(PipelineError::Diagnostics(listing.join("\n")));
    }
    Ok(table)
}

fn load_sim_config(
    args: &RunArgs,
    schema: &AttributeSchema,
) -> Result<SimConfig, PipelineError> {
    let base = match &args.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::bundled(),
    };
    let mut config = base.sim_config(schema)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(steps) = args.steps {
        config.steps = steps;
    }
    if let Some(population) = args.population {
        config.population_size = population;
    }
    config.validate()?;
    Ok(config)
}

fn write_artifact(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, PipelineError> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, contents)?;
    info!("wrote {}", path.display());
    Ok(path)
}

fn cmd_ingest(args: &IngestArgs) -> Result<(), PipelineError> {
    let schema = load_schema(&args.data)?;
    let table = load_table(&args.data, &schema)?;
    info!("survey valid: {} cohorts, {} attributes", table.cohorts().len(), schema.len());
    print!("{}", table.to_csv());
    Ok(())
}

struct PreparedRun {
    table: SurveyTable,
    population: Population,
    config: SimConfig,
}

fn prepare(data: &DataArgs, run_args: &RunArgs) -> Result<PreparedRun, PipelineError> {
    let schema = load_schema(data)?;
    let table = load_table(data, &schema)?;
    let config = load_sim_config(run_args, &schema)?;
    let population = synthesize_population(&table, config.population_size, config.seed)?;
    info!(
        "synthesized {} agents over {} cohorts (seed {})",
        population.len(),
        table.cohorts().len(),
        config.seed
    );
    Ok(PreparedRun { table, population, config })
}

fn cmd_simulate(args: &SimulateArgs) -> Result<(), PipelineError> {
    let prepared = prepare(&args.data, &args.run)?;
    let result = run(&prepared.population, &prepared.config)?;
    let path = write_artifact(
        &args.run.out,
        "trajectories.csv",
        &result.to_csv(&prepared.population),
    )?;
    println!(
        "simulated {} agents for {} steps -> {}",
        prepared.population.len(),
        prepared.config.steps,
        path.display()
    );
    Ok(())
}

struct ClusterOutput {
    clustering: Clustering,
    matrix: SimilarityMatrix,
    silhouette: Option<f64>,
    k: usize,
}

fn cluster_population(
    population: &Population,
    kargs: &KArgs,
    seed: u64,
) -> Result<ClusterOutput, PipelineError> {
    let weights = WeightVector::new(population.schema().weights())?;
    let matrix = similarity_matrix(population, &weights)?;
    let (k, clustering, sil) = if kargs.auto_k {
        let (k, clustering, sil) = auto_k(&matrix, 2, 10, seed)?;
        (k, clustering, Some(sil))
    } else {
        let k = kargs.k.unwrap_or(4);
        let clustering = cluster_kmedoids(&matrix, k, seed)?;
        let sil = if k >= 2 { Some(silhouette(&matrix, &clustering)?) } else { None };
        (k, clustering, sil)
    };
    Ok(ClusterOutput { clustering, matrix, silhouette: sil, k })
}

fn assignments_csv(population: &Population, clustering: &Clustering) -> String {
    let mut out = String::from("agent_id,society,gender,cluster,is_medoid\n");
    for (i, agent) in population.agents().iter().enumerate() {
        let cluster = clustering.assignments[i];
        let is_medoid = clustering.medoids[cluster] == i;
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            agent.id,
            agent.society,
            agent.gender,
            cluster,
            if is_medoid { 1 } else { 0 }
        ));
    }
    out
}

fn cmd_cluster(args: &ClusterArgs) -> Result<(), PipelineError> {
    let prepared = prepare(&args.data, &args.run)?;
    let output = cluster_population(&prepared.population, &args.kargs, prepared.config.seed)?;
    write_artifact(
        &args.run.out,
        "assignments.csv",
        &assignments_csv(&prepared.population, &output.clustering),
    )?;
    write_artifact(&args.run.out, "similarity_matrix.csv", &output.matrix.to_csv())?;
    let sil_text = match output.silhouette {
        Some(s) => s.to_string(),
        None => "n/a (k < 2)".to_string(),
    };
    write_artifact(&args.run.out, "silhouette.txt", &format!("{sil_text}\n"))?;
    println!(
        "clustered {} agents into k={} (objective {}, silhouette {})",
        prepared.population.len(),
        output.k,
        output.clustering.objective,
        sil_text
    );
    Ok(())
}

fn cmd_report(args: &ReportArgs) -> Result<(), PipelineError> {
    let prepared = prepare(&args.data, &args.run)?;
    let ranking = rank_cohorts(&prepared.table)?;
    write_artifact(&args.run.out, "ranking.csv", &ranking_csv(&prepared.table, &ranking))?;

    let sim_result: SimResult = run(&prepared.population, &prepared.config)?;
    write_artifact(
        &args.run.out,
        "trajectories.csv",
        &sim_result.to_csv(&prepared.population),
    )?;

    let output = cluster_population(&prepared.population, &args.kargs, prepared.config.seed)?;
    write_artifact(
        &args.run.out,
        "assignments.csv",
        &assignments_csv(&prepared.population, &output.clustering),
    )?;

    let hdi = match &args.hdi {
        Some(path) => HdiConfig::from_toml(&fs::read_to_string(path)?)?,
        None => HdiConfig::bundled(),
    };
    let (_, svg) = render_cluster_map(
        &output.clustering,
        &sim_result.final_values,
        &prepared.population,
        &hdi,
    )?;
    let svg_path = write_artifact(&args.run.out, "cluster_map.svg", &svg)?;
    println!(
        "report complete: {} cohorts ranked, k={} clusters, map at {}",
        ranking.len(),
        output.k,
        svg_path.display()
    );
    Ok(())
}
