mod interactive;

use std::collections::BTreeSet;
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use leadforge_core::bundled_fixtures_dir;
use leadforge_core::kgraph::{
    entity_linking, find_related_paths, parse_pattern, GraphStore, NodeType, Relation,
};
use leadforge_core::molgraph::{
    canonical_form, descriptors, morgan_fingerprint, parse_smiles, tanimoto,
};
use leadforge_core::optimizer::{optimize, Objective, OptimizerConfig};
use leadforge_core::orchestrator::{
    run_pipeline, AutoApprove, DecisionProvider, PipelineConfig, PipelineRequest, Scripted,
};
use leadforge_core::pbpk::{derive_params, pk_metrics, simulate, DoseRegimen, Route, DEFAULT_BW};
use leadforge_core::pharmacologist::{
    penalties_for, AdmetFixture, AdmetSource, Category, PharmacologyConfig,
};
use leadforge_core::screening::{
    enrichment_analysis, enrichment_csv, parse_library, parse_pockets, ranked_csv, screen_library,
    Label, Pocket, Surrogate,
};
use leadforge_core::Execution;
use serde_json::json;

use interactive::Interactive;

#[derive(Parser)]
#[command(
    name = "leadforge",
    version,
    about = "Target-to-lead discovery loop on local fixtures"
)]
struct Cli {
    /// Run batch work on one thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Knowledge-graph ingest and path queries.
    #[command(subcommand)]
    Kg(KgCommand),
    /// Molecule descriptors, fingerprints and similarity.
    #[command(subcommand)]
    Mol(MolCommand),
    /// Rank a library against a pocket with the surrogate score.
    Screen(ScreenArgs),
    /// Fingerprint-GP guided mutation search from seed molecules.
    Optimize(OptimizeArgs),
    /// ADMET to PBPK parameters and concentration profiles.
    #[command(subcommand)]
    Pbpk(PbpkCommand),
    /// The full human-in-the-loop pipeline.
    #[command(subcommand)]
    Pipeline(PipelineCommand),
    /// HTTP API over pipeline runs.
    Serve(ServeArgs),
}

#[derive(Args)]
struct GraphFiles {
    /// Edge TSV: source_type, source_name, relation, target_type, target_name.
    #[arg(long)]
    edges: PathBuf,
    /// Alias TSV: alias, canonical name.
    #[arg(long)]
    synonyms: Option<PathBuf>,
    /// Gene to PDB id TSV.
    #[arg(long)]
    pdb_map: Option<PathBuf>,
}

impl GraphFiles {
    fn load(&self) -> Result<GraphStore> {
        Ok(GraphStore::ingest_files(
            &self.edges,
            self.synonyms.as_deref(),
            self.pdb_map.as_deref(),
        )?)
    }
}

#[derive(Subcommand)]
enum KgCommand {
    /// Load a graph and print its schema.
    Ingest(GraphFiles),
    /// Link a query and follow path patterns from it.
    Query {
        #[command(flatten)]
        graph: GraphFiles,
        /// Path pattern, e.g. `(Disease)-[DISEASE_PROTEIN]->(Gene_protein)`. Repeatable.
        #[arg(long = "pattern", required = true)]
        patterns: Vec<String>,
        /// Free-text entity to start from; otherwise the pattern's own start.
        #[arg(long)]
        query: Option<String>,
        /// Drop end nodes that have this relation to `--filter-type`.
        #[arg(long)]
        filter_relation: Option<String>,
        #[arg(long, default_value = "Drug")]
        filter_type: String,
    },
}

#[derive(Args)]
struct FpArgs {
    #[arg(long, default_value_t = 2)]
    radius: usize,
    #[arg(long, default_value_t = 2048)]
    bits: usize,
}

#[derive(Subcommand)]
enum MolCommand {
    /// Canonical SMILES and descriptors, one JSON object per molecule.
    Describe { smiles: Vec<String> },
    /// `canonical_smiles,hex_bits` rows.
    Fp {
        smiles: Vec<String>,
        #[command(flatten)]
        fp: FpArgs,
    },
    /// Tanimoto similarity of two molecules.
    Tanimoto {
        a: String,
        b: String,
        #[command(flatten)]
        fp: FpArgs,
    },
}

#[derive(Args)]
struct ScreenArgs {
    /// `smiles [active|inactive]` per line.
    #[arg(long)]
    library: PathBuf,
    /// `x y z polar_sites acceptor_sites seed`; the first pocket is used.
    #[arg(long)]
    pocket: PathBuf,
    /// Ranked CSV destination; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Enrichment CSV destination (needs labelled actives).
    #[arg(long)]
    enrichment: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_values_t = [0.01, 0.05, 0.1, 0.25, 0.5, 1.0])]
    fractions: Vec<f64>,
}

#[derive(Args)]
struct OptimizeArgs {
    /// Seed molecules, one per line.
    #[arg(long)]
    seeds: PathBuf,
    #[arg(long)]
    pocket: PathBuf,
    /// TOML with any of generations, mutants_per_parent, select_budget, survivors, kappa, seed.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Verdict categories whose penalties apply, comma separated.
    #[arg(long, value_delimiter = ',')]
    penalize: Vec<String>,
    /// Directory for generations.csv and result.json.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AdmetArgs {
    /// Molecule to look up.
    #[arg(long)]
    smiles: String,
    /// ADMET fixture (JSON lines); descriptor-based estimates when absent.
    #[arg(long)]
    admet: Option<PathBuf>,
    /// Body weight in kg.
    #[arg(long, default_value_t = DEFAULT_BW)]
    bw: f64,
}

#[derive(Subcommand)]
enum PbpkCommand {
    /// Print the derived PBPK parameters as JSON.
    Derive(AdmetArgs),
    /// Simulate a regimen; profile CSV on stdout (or `--out`), PK metrics on stderr.
    Simulate {
        #[command(flatten)]
        admet: AdmetArgs,
        /// Regimen TOML (route, dose_mg, infusion_h, times_h or every_h + count).
        #[arg(long, conflicts_with_all = ["route", "dose"])]
        regimen: Option<PathBuf>,
        #[arg(long, default_value = "oral")]
        route: String,
        #[arg(long, default_value_t = 200.0)]
        dose: f64,
        /// Infusion length in hours (iv_infusion only).
        #[arg(long, default_value_t = 1.0)]
        infusion_h: f64,
        #[arg(long, default_value_t = 24.0)]
        horizon: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum PipelineCommand {
    /// Run the loop on a fixture set.
    Run(RunArgs),
}

#[derive(Args)]
#[command(group(clap::ArgGroup::new("decisions").required(true).args(["interactive", "script", "auto_approve"])))]
struct RunArgs {
    /// Fixture directory, or the name of a bundled set (diabetes, pancreatic).
    #[arg(long)]
    fixture: String,
    /// Task text or a bare disease name.
    #[arg(long)]
    task: String,
    /// Answer the gates at the terminal.
    #[arg(long)]
    interactive: bool,
    /// Replay gate decisions from a script file.
    #[arg(long)]
    script: Option<PathBuf>,
    /// Approve every proposal, never steer.
    #[arg(long)]
    auto_approve: bool,
    /// Write run_result.json, trace.jsonl and optimizer logs here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    host: String,
    /// Directory whose subdirectories are the fixture sets.
    #[arg(long)]
    fixtures: Option<PathBuf>,
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write_or_print(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

/// Stdout writes fail loudly instead of panicking, so a closed pipe ends the
/// process quietly.
macro_rules! out {
    ($($arg:tt)*) => {
        writeln!(std::io::stdout().lock(), $($arg)*)?
    };
}

fn print_json(v: &serde_json::Value) -> Result<()> {
    out!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn load_pocket(path: &Path) -> Result<Pocket> {
    parse_pockets(&read(path)?)?
        .into_iter()
        .next()
        .ok_or_else(|| anyhow!("{}: no pocket", path.display()))
}

fn kg(cmd: KgCommand) -> Result<()> {
    match cmd {
        KgCommand::Ingest(files) => {
            let store = files.load()?;
            print_json(&json!({
                "nodes": store.node_count(),
                "edges": store.edge_count(),
                "schema": store.schema(),
            }))
        }
        KgCommand::Query {
            graph,
            patterns,
            query,
            filter_relation,
            filter_type,
        } => {
            let store = graph.load()?;
            let mut linked = None;
            let mut results = Vec::new();
            let mut ends = BTreeSet::new();
            for text in &patterns {
                let pattern = parse_pattern(text).with_context(|| format!("pattern '{text}'"))?;
                let starts = match &query {
                    Some(q) => {
                        let types: Vec<NodeType> = pattern.start.node_type.into_iter().collect();
                        let l = entity_linking(q, &store, &types);
                        let ids = l.ids();
                        linked = Some(l);
                        ids
                    }
                    None => pattern.resolve_starts(&store),
                };
                let found = find_related_paths(&store, &starts, &pattern.hops, pattern.hops.len())?;
                ends.extend(found.end_nodes());
                results.push(json!({
                    "pattern": text,
                    "starts": starts.len(),
                    "relaxed": found.relaxed,
                    "paths": found.paths.iter().map(|p| p.render(&store)).collect::<Vec<_>>(),
                }));
            }
            let name = |id| store.node(id).map(|n| n.name.clone()).unwrap_or_default();
            let ends: Vec<_> = ends.into_iter().collect();
            let mut out = json!({
                "linked": linked,
                "patterns": results,
                "ends": ends.iter().map(|&id| name(id)).collect::<Vec<_>>(),
            });
            if let Some(rel) = filter_relation {
                let relation =
                    Relation::parse(&rel).ok_or_else(|| anyhow!("unknown relation '{rel}'"))?;
                let counterpart = NodeType::parse(&filter_type)
                    .ok_or_else(|| anyhow!("unknown node type '{filter_type}'"))?;
                let kept = store.filter_nodes_without_relation(&ends, relation, counterpart);
                let removed: Vec<_> = ends
                    .iter()
                    .filter(|id| !kept.contains(id))
                    .map(|&id| name(id))
                    .collect();
                out["kept"] = json!(kept.iter().map(|&id| name(id)).collect::<Vec<_>>());
                out["removed"] = json!(removed);
            }
            print_json(&out)
        }
    }
}

fn mol(cmd: MolCommand) -> Result<()> {
    let parse = |s: &str| parse_smiles(s).with_context(|| format!("SMILES '{s}'"));
    match cmd {
        MolCommand::Describe { smiles } => {
            for s in smiles {
                let m = parse(&s)?;
                let line = json!({ "input": s, "canonical_smiles": canonical_form(&m), "descriptors": descriptors(&m) });
                out!("{line}");
            }
            Ok(())
        }
        MolCommand::Fp { smiles, fp } => {
            out!("canonical_smiles,hex_bits");
            for s in smiles {
                let m = parse(&s)?;
                out!(
                    "{},{}",
                    canonical_form(&m),
                    morgan_fingerprint(&m, fp.radius, fp.bits).to_hex()
                );
            }
            Ok(())
        }
        MolCommand::Tanimoto { a, b, fp } => {
            let fa = morgan_fingerprint(&parse(&a)?, fp.radius, fp.bits);
            let fb = morgan_fingerprint(&parse(&b)?, fp.radius, fp.bits);
            out!("{}", tanimoto(&fa, &fb)?);
            Ok(())
        }
    }
}

fn screen(args: ScreenArgs, exec: Execution) -> Result<()> {
    let entries = parse_library(&read(&args.library)?)?;
    let pocket = load_pocket(&args.pocket)?;
    let report = screen_library(&entries, &pocket, &Surrogate, exec)?;
    for s in &report.skipped {
        eprintln!("skipped: {s:?}");
    }
    write_or_print(args.out.as_deref(), &ranked_csv(&report.ranked))?;
    if let Some(path) = args.enrichment {
        let flags: Vec<bool> = report
            .ranked
            .iter()
            .map(|c| c.label == Some(Label::Active))
            .collect();
        let points = enrichment_analysis(&flags, &args.fractions)?;
        write_or_print(Some(&path), &enrichment_csv(&points))?;
    }
    Ok(())
}

fn run_optimize(args: OptimizeArgs, exec: Execution) -> Result<()> {
    let entries = parse_library(&read(&args.seeds)?)?;
    let seeds: Vec<&str> = entries.iter().map(|e| e.smiles.as_str()).collect();
    let pocket = load_pocket(&args.pocket)?;
    let mut config: OptimizerConfig = match &args.config {
        Some(p) => toml_config(&read(p)?)?,
        None => OptimizerConfig::default(),
    };
    if let Some(s) = args.seed {
        config.seed = s;
    }
    let cats = args
        .penalize
        .iter()
        .map(|c| Category::parse(c).ok_or_else(|| anyhow!("unknown category '{c}'")))
        .collect::<Result<BTreeSet<_>>>()?;
    let penalties = penalties_for(&cats, &PharmacologyConfig::default());
    let objective = Objective {
        oracle: &Surrogate,
        pocket: &pocket,
        penalties: &penalties,
    };
    let result = optimize(&seeds, &objective, &config, exec)?;
    if let Some(dir) = &args.out {
        result.write_logs(dir)?;
    }
    print_json(&json!({
        "best": result.best,
        "history": result.history,
        "stopped_early": result.stopped_early,
    }))
}

fn toml_config(text: &str) -> Result<OptimizerConfig> {
    // reuse the pipeline file's validation for the optimizer table
    Ok(PipelineConfig::parse(&format!("[optimizer]\n{text}"))?.optimizer)
}

fn admet_profile(args: &AdmetArgs) -> Result<(String, leadforge_core::pbpk::AdmetProfile)> {
    let source = match &args.admet {
        Some(p) => AdmetSource::Fixture(AdmetFixture::load(p)?),
        None => AdmetSource::Stub,
    };
    Ok(source.predict(&args.smiles)?)
}

fn pbpk(cmd: PbpkCommand) -> Result<()> {
    match cmd {
        PbpkCommand::Derive(a) => {
            let (canonical, admet) = admet_profile(&a)?;
            let params = derive_params(&admet, a.bw)?;
            print_json(&json!({ "canonical_smiles": canonical, "admet": admet, "params": params }))
        }
        PbpkCommand::Simulate {
            admet,
            regimen,
            route,
            dose,
            infusion_h,
            horizon,
            out,
        } => {
            let (_, profile) = admet_profile(&admet)?;
            let params = derive_params(&profile, admet.bw)?;
            let regimen = match regimen {
                Some(p) => DoseRegimen::parse(&read(&p)?)?,
                None => match Route::parse(&route) {
                    Some(Route::IvInfusion) => DoseRegimen::infusion(dose, infusion_h),
                    Some(r) => DoseRegimen::single(r, dose),
                    None => bail!("unknown route '{route}'"),
                },
            };
            let conc = simulate(&params, &regimen, horizon)?;
            write_or_print(out.as_deref(), &conc.to_csv())?;
            eprintln!("{}", serde_json::to_string(&pk_metrics(&conc)?)?);
            Ok(())
        }
    }
}

fn fixture_dir(name: &str) -> Result<PathBuf> {
    let direct = PathBuf::from(name);
    if direct.is_dir() {
        return Ok(direct);
    }
    let bundled = bundled_fixtures_dir().join(name);
    if bundled.is_dir() {
        return Ok(bundled);
    }
    bail!("no fixture directory or bundled set named '{name}'")
}

/// Exit status 0 on success, 2 when the run ends in a failure outcome.
fn pipeline(args: RunArgs, exec: Execution) -> Result<ExitCode> {
    let dir = fixture_dir(&args.fixture)?;
    let mut req = PipelineRequest::from_fixture(&args.task, &dir)?;
    req.exec = exec;
    req.out_dir = args.out.clone();
    let mut provider: Box<dyn DecisionProvider> = if let Some(s) = &args.script {
        Box::new(Scripted::load(s)?)
    } else if args.auto_approve {
        Box::new(AutoApprove)
    } else {
        Box::new(Interactive::new(std::io::stdin().lock(), std::io::stderr()))
    };
    let result = run_pipeline(&req, provider.as_mut());
    if let Some(dir) = &args.out {
        result.write(dir)?;
    }
    print_json(&json!({
        "outcome": result.outcome,
        "target": result.target.as_ref().map(|t| &t.chosen),
        "iterations": result.iterations,
        "candidates": result.candidates,
        "events": result.trace.len(),
    }))?;
    Ok(if result.outcome.is_success() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}

fn serve(args: ServeArgs, exec: Execution) -> Result<()> {
    let addr: SocketAddr = format!("{}:{}", args.host, args.port)
        .parse()
        .with_context(|| format!("bad address {}:{}", args.host, args.port))?;
    let fixtures = args.fixtures.unwrap_or_else(bundled_fixtures_dir);
    eprintln!(
        "listening on http://{addr} (fixtures in {})",
        fixtures.display()
    );
    leadforge_service::serve(addr, leadforge_service::AppState::new(fixtures, exec))?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let exec = if cli.sequential {
        Execution::Sequential
    } else {
        Execution::default()
    };
    let result = match cli.command {
        Command::Kg(c) => kg(c).map(|_| ExitCode::SUCCESS),
        Command::Mol(c) => mol(c).map(|_| ExitCode::SUCCESS),
        Command::Screen(a) => screen(a, exec).map(|_| ExitCode::SUCCESS),
        Command::Optimize(a) => run_optimize(a, exec).map(|_| ExitCode::SUCCESS),
        Command::Pbpk(c) => pbpk(c).map(|_| ExitCode::SUCCESS),
        Command::Pipeline(PipelineCommand::Run(a)) => pipeline(a, exec),
        Command::Serve(a) => serve(a, exec).map(|_| ExitCode::SUCCESS),
    };
    result.unwrap_or_else(|e| {
        let closed = e
            .downcast_ref::<std::io::Error>()
            .is_some_and(|io| io.kind() == std::io::ErrorKind::BrokenPipe);
        if closed {
            return ExitCode::SUCCESS;
        }
        eprintln!("error: {e:#}");
        ExitCode::FAILURE
    })
}
