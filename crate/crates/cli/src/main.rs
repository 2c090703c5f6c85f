use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use light_spanner::audit::{exact_stretch, lightness};
use light_spanner::config::{Overrides, Profile, RunConfig};
use light_spanner::generate::{Kind, Spec};
use light_spanner::light::decompose_long_levels;
use light_spanner::report::{compare, compare_csv, run_build, Method};
use light_spanner::{MetricSpace, SpannerGraph};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "lightspan", version, about = "Light (1+eps)-spanners for doubling metrics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a generated point set as coordinate CSV.
    Generate(GenerateArgs),
    /// Build a light spanner and write its edges and stats.
    Build(BuildArgs),
    /// Check the stretch of an edge file against a point file.
    Verify(VerifyArgs),
    /// Tabulate light and baseline spanners over instances.
    Compare(CompareArgs),
    /// Write the decomposition used by `build` as JSON.
    DecomposeDump(DumpArgs),
}

#[derive(Args)]
struct Common {
    #[arg(long, default_value_t = 0.5)]
    eps: f64,
    #[arg(long, default_value = "desk")]
    profile: Profile,
    /// Constant override, `name=value` (c, c1, c2, b, b2, f, a, L).
    #[arg(long = "set", value_name = "CONST=VALUE")]
    set: Vec<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl Common {
    fn config(&self, input: Option<&Path>, output: Option<&Path>, stats: Option<&Path>) -> Result<RunConfig> {
        let mut overrides = Overrides::default();
        for s in &self.set {
            overrides.set(s)?;
        }
        let cfg = RunConfig {
            eps: self.eps,
            profile: self.profile,
            overrides,
            seed: self.seed,
            input: input.map(Path::to_path_buf),
            output: output.map(Path::to_path_buf),
            stats: stats.map(Path::to_path_buf),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    kind: Kind,
    /// Number of points (number of disks for `disks`).
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 2)]
    dim: usize,
    /// Number of clusters.
    #[arg(long, default_value_t = 4)]
    k: usize,
    /// Cube side (disk spacing for `disks`).
    #[arg(long, default_value_t = 1000.0)]
    side: f64,
    /// Cluster standard deviation (lattice jitter for `disks`).
    #[arg(long, default_value_t = 10.0)]
    spread: f64,
    #[arg(long, default_value_t = 20.0)]
    radius: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BuildArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long = "in")]
    input: PathBuf,
    /// Edge TSV output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Stats JSON output.
    #[arg(long)]
    stats: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Point file.
    #[arg(long = "in")]
    input: PathBuf,
    /// Edge TSV to check.
    #[arg(long)]
    spanner: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    eps: f64,
    /// Report JSON output (printed when absent).
    #[arg(long)]
    stats: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    common: Common,
    /// Point files; each becomes one row.
    #[arg(long = "in")]
    input: Vec<PathBuf>,
    /// Generate instances of this kind instead, one per size.
    #[arg(long)]
    kind: Option<Kind>,
    #[arg(long, value_delimiter = ',')]
    sizes: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "complete,greedy,light")]
    methods: Vec<Method>,
    /// Leave out the time columns (the table is then deterministic).
    #[arg(long)]
    no_timings: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DumpArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Serialize)]
struct VerifyReport {
    schema: u32,
    eps: f64,
    n: usize,
    edges: usize,
    pass: bool,
    max_stretch: f64,
    witness: Option<(usize, usize)>,
    lightness: f64,
    stretch: light_spanner::audit::StretchReport,
}

fn write_or_print(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load(path: &Path) -> Result<MetricSpace> {
    MetricSpace::load(path).with_context(|| format!("reading points from {}", path.display()))
}

fn generate(a: &GenerateArgs) -> Result<()> {
    let spec = Spec {
        kind: a.kind,
        n: a.n,
        dim: a.dim,
        k: a.k,
        side: a.side,
        spread: a.spread,
        radius: a.radius,
        seed: a.seed,
    };
    let space = spec.build()?;
    write_or_print(
        a.out.as_deref(),
        &space.to_csv().expect("generated spaces have coordinates"),
    )
}

fn build(a: &BuildArgs) -> Result<()> {
    let cfg = a.common.config(Some(&a.input), a.out.as_deref(), a.stats.as_deref())?;
    let space = load(&a.input)?;
    let (out, stats) = run_build(&space, &cfg)?;
    let scale = space.normalize()?.scale_factor();
    write_or_print(a.out.as_deref(), &out.graph.to_tsv(scale, false))?;
    let js = serde_json::to_string_pretty(&stats)?;
    match &a.stats {
        Some(p) => fs::write(p, js + "\n").with_context(|| format!("writing {}", p.display()))?,
        None => eprintln!(
            "n={} edges={} lightness={:.4} stretch={:.6}",
            stats.n, stats.edges, stats.lightness, stats.max_stretch
        ),
    }
    Ok(())
}

fn verify(a: &VerifyArgs) -> Result<bool> {
    if a.eps.is_nan() || a.eps <= 0.0 {
        bail!("eps must be positive, got {}", a.eps);
    }
    let space = load(&a.input)?;
    let text = fs::read_to_string(&a.spanner).with_context(|| format!("reading {}", a.spanner.display()))?;
    let g = SpannerGraph::from_tsv(&text, &space).with_context(|| format!("parsing {}", a.spanner.display()))?;
    let stretch = exact_stretch(&space, &g);
    let pass = stretch.max_stretch <= (1.0 + a.eps) * (1.0 + 1e-9);
    let report = VerifyReport {
        schema: 1,
        eps: a.eps,
        n: space.len(),
        edges: g.num_edges(),
        pass,
        max_stretch: stretch.max_stretch,
        witness: stretch.witness,
        lightness: lightness(&space, &g),
        stretch,
    };
    let js = serde_json::to_string_pretty(&report)? + "\n";
    write_or_print(a.stats.as_deref(), &js)?;
    if !pass {
        let (u, v) = report.witness.unwrap_or((0, 0));
        eprintln!(
            "FAIL: stretch {} > {} at pair ({u}, {v})",
            report.max_stretch,
            1.0 + a.eps
        );
    }
    Ok(pass)
}

fn compare_cmd(a: &CompareArgs) -> Result<()> {
    let cfg = a.common.config(None, a.out.as_deref(), None)?;
    let mut instances = Vec::new();
    for p in &a.input {
        instances.push((p.display().to_string(), load(p)?));
    }
    if let Some(kind) = a.kind {
        if a.sizes.is_empty() {
            bail!("--kind needs --sizes");
        }
        for &n in &a.sizes {
            let mut spec = Spec::new(kind, n);
            spec.seed = a.common.seed;
            instances.push((format!("{kind}-{n}"), spec.build()?));
        }
    }
    if instances.is_empty() {
        bail!("no instances: give --in files or --kind with --sizes");
    }
    let rows = compare(&instances, &a.methods, &cfg)?;
    write_or_print(a.out.as_deref(), &compare_csv(&rows, !a.no_timings))
}

fn dump(a: &DumpArgs) -> Result<()> {
    let cfg = a.common.config(Some(&a.input), a.out.as_deref(), None)?;
    let space = load(&a.input)?;
    let (d, _) = decompose_long_levels(&space, cfg.eps, cfg.profile, &cfg.overrides)?;
    let scale = space.normalize()?.scale_factor();
    write_or_print(
        a.out.as_deref(),
        &(serde_json::to_string_pretty(&d.dump(scale))? + "\n"),
    )
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Generate(a) => generate(a).map(|_| true),
        Command::Build(a) => build(a).map(|_| true),
        Command::Verify(a) => verify(a),
        Command::Compare(a) => compare_cmd(a).map(|_| true),
        Command::DecomposeDump(a) => dump(a).map(|_| true),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
