use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use macc_cli::batch::write_atomic;
use macc_cli::config::{parse_degree, parse_list, parse_stages, Settings, Stage};
use macc_cli::metrics::{aggregate, read_table, write_table};
use macc_cli::{export_dataset, import_and_score, run_batch, ExperimentSpec};

#[derive(Parser)]
#[command(name = "macc", version, about = "Multi-access coded caching experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate topologies and write conflict-graph documents.
    Gen(Common),
    /// Color conflict graphs with DSatur and assemble delivery arrays.
    Color(Common),
    /// Greedy and exact converse bounds per instance.
    Bound(Common),
    /// Encode and decode a random delivery per instance.
    Simulate(Common),
    /// Run the stages named in the config (all stages by default).
    Run(Common),
    /// Write graph documents, DSatur labels and degree statistics.
    ExportDataset(Common),
    /// Validate, repair and score external colorings.
    ImportColorings(ImportArgs),
    /// Per-configuration means from a metrics table.
    Report(ReportArgs),
}

#[derive(Args, Clone, Default)]
struct Common {
    /// User counts, e.g. `10` or `4,6,8` or `4-20`.
    #[arg(long)]
    users: Option<String>,
    /// Number of cache nodes.
    #[arg(long)]
    caches: Option<usize>,
    /// Placement parameters, same list syntax as `--users`.
    #[arg(long)]
    t: Option<String>,
    /// Topologies per configuration.
    #[arg(long)]
    count: Option<usize>,
    /// Access-set size range `lo:hi`.
    #[arg(long)]
    degree: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Topology file to use instead of the generator.
    #[arg(long)]
    topology: Option<PathBuf>,
    /// Flat `key=value` file with the same keys as these flags.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated stages, for `run`.
    #[arg(long)]
    stages: Option<String>,
    /// Packet size in bits for simulation.
    #[arg(long)]
    bits: Option<usize>,
}

#[derive(Args)]
struct ImportArgs {
    /// Directory of coloring documents.
    #[arg(long)]
    colorings: PathBuf,
    /// Directory of graph documents with matching file names.
    #[arg(long)]
    graphs: PathBuf,
    /// Output directory for `scores.csv`.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    /// Metrics table written by a batch run.
    #[arg(long)]
    metrics: PathBuf,
}

impl Common {
    fn resolve(&self, stages: Option<&[Stage]>) -> Result<ExperimentSpec> {
        let base = match &self.config {
            Some(path) => Settings::load(path)?,
            None => Settings::default(),
        };
        let flags = Settings {
            users: self.users.as_deref().map(parse_list).transpose()?,
            caches: self.caches,
            t: self.t.as_deref().map(parse_list).transpose()?,
            count: self.count,
            degree: self.degree.as_deref().map(parse_degree).transpose()?,
            seed: self.seed,
            out: self.out.clone(),
            topology: self.topology.clone(),
            stages: self.stages.as_deref().map(parse_stages).transpose()?,
            bits: self.bits,
        };
        let mut settings = base.overlay(flags);
        if let Some(fixed) = stages {
            settings.stages = Some(fixed.to_vec());
        }
        settings.resolve(&Stage::ALL)
    }
}

fn run(common: &Common, stages: Option<&[Stage]>) -> Result<()> {
    let spec = common.resolve(stages)?;
    let output = run_batch(&spec)?;
    let mut failures = 0;
    for inst in &output.instances {
        let row = &inst.row;
        if let Some(err) = &row.error {
            failures += 1;
            eprintln!("{}: {err}", inst.key);
        }
        if spec.has(Stage::Color) {
            println!(
                "{} {} {} {} {} {} {}",
                row.users,
                row.cache_nodes,
                row.t,
                row.seed.unwrap_or_default(),
                row.vertices.unwrap_or(0),
                row.edges.unwrap_or(0),
                row.s_dsatur.map_or("-".into(), |s| s.to_string())
            );
        }
        if spec.has(Stage::Bound) {
            println!("# {}", inst.key);
            for line in &inst.bound_lines {
                println!("{line}");
            }
        }
        if let Some(line) = &inst.delivery_line {
            println!("{line}");
        }
    }
    eprintln!(
        "{} instances, {failures} with errors; output in {}",
        output.instances.len(),
        spec.out.display()
    );
    Ok(())
}

fn report(args: &ReportArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.metrics)
        .with_context(|| format!("reading {}", args.metrics.display()))?;
    let rows = read_table(&text)?;
    let recomputed = aggregate(&rows);
    let stored: BTreeMap<_, _> = rows
        .iter()
        .filter(|r| r.agg)
        .map(|r| ((r.users, r.cache_nodes, r.t), r))
        .collect();
    let fmt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.6}"));
    println!("K Lambda t n greedy/ic dsatur/ic external/dsatur");
    let mut mismatches = 0;
    for r in &recomputed {
        if let Some(s) = stored.get(&(r.users, r.cache_nodes, r.t)) {
            let same = s.n == r.n
                && s.ratio_greedy_ic == r.ratio_greedy_ic
                && s.ratio_dsatur_ic == r.ratio_dsatur_ic
                && s.ratio_external_dsatur == r.ratio_external_dsatur;
            if !same {
                mismatches += 1;
                eprintln!(
                    "aggregate row for K={} Lambda={} t={} does not match its instance rows",
                    r.users, r.cache_nodes, r.t
                );
            }
        }
        println!(
            "{} {} {} {} {} {} {}",
            r.users,
            r.cache_nodes,
            r.t,
            r.n,
            fmt(r.ratio_greedy_ic),
            fmt(r.ratio_dsatur_ic),
            fmt(r.ratio_external_dsatur)
        );
    }
    if mismatches > 0 {
        bail!("{mismatches} stored aggregate rows disagree with recomputed means");
    }
    Ok(())
}

fn import(args: &ImportArgs) -> Result<()> {
    let mut rows = import_and_score(&args.colorings, &args.graphs)?;
    let skipped = rows.iter().filter(|r| r.error.is_some()).count();
    let repaired = rows.iter().filter(|r| r.external_proper == Some(false)).count();
    let agg = aggregate(&rows.iter().filter(|r| r.error.is_none()).cloned().collect::<Vec<_>>());
    rows.extend(agg);
    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;
    let path = args.out.join("scores.csv");
    write_atomic(&path, write_table(&rows).as_bytes())?;
    for r in rows.iter().filter(|r| r.error.is_some()) {
        eprintln!("skipped: {}", r.error.as_deref().unwrap_or_default());
    }
    eprintln!(
        "{} scored, {repaired} repaired, {skipped} skipped; wrote {}",
        rows.iter().filter(|r| !r.agg).count() - skipped,
        path.display()
    );
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match &cli.command {
        Command::Gen(c) => run(c, Some(&[Stage::Graph])),
        Command::Color(c) => run(c, Some(&[Stage::Graph, Stage::Color])),
        Command::Bound(c) => run(c, Some(&[Stage::Bound])),
        Command::Simulate(c) => run(c, Some(&[Stage::Simulate])),
        Command::Run(c) => run(c, None),
        Command::ExportDataset(c) => {
            let spec = c.resolve(None)?;
            let summary = export_dataset(&spec)?;
            eprintln!(
                "{} graphs, degree mean {:.4}, variance {:.4}; written to {}",
                summary.graphs,
                summary.stats.degree_mean,
                summary.stats.degree_variance,
                spec.out.display()
            );
            Ok(())
        }
        Command::ImportColorings(args) => import(args),
        Command::Report(args) => report(args),
    }
}
