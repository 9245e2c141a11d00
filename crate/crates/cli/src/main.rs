mod commands;
mod config;
mod manifest;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::{Map, Value};

use crate::config::{merge, number_or_keyword, parse_list, ConfigError, Overrides};
use crate::manifest::{
    pretty_json, read_manifest, sha256_hex, timestamp, write_output, RunManifest, RunStatus,
    MANIFEST_FILE, REPORT_FILE, SUMMARY_FILE,
};

#[derive(Debug, Parser)]
#[command(
    name = "dehnfill",
    version,
    about = "Dehn-filled approximate Einstein metrics: curvature, deficits, linearization and Newton solves"
)]
struct Cli {
    /// JSON object of configuration values; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for report.csv, summary.json and manifest.json.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sectional, Ricci and scalar curvature of a warped profile on a radius grid.
    Curvature(ProfileArgs),
    /// Deficit norms of fillings of increasing size and their fitted decay.
    Scan(ScanArgs),
    /// Coefficients of the linearized operator and the cusp indicial roots.
    Linearize(ProfileArgs),
    /// Indicial roots of one block (or all) of the cusp model operator.
    Indicial(IndicialArgs),
    /// Decay of the black-hole/cusp operator difference on translated bumps.
    Compare(CompareArgs),
    /// Newton solve of the Einstein equation from a glued or exact profile.
    Solve(SolveArgs),
    /// Filling data of one or more cusps.
    Lattice(LatticeArgs),
    /// Re-run the command recorded in a manifest.
    Replay(ReplayArgs),
}

#[derive(Debug, Args)]
struct ProfileArgs {
    #[arg(long)]
    n: Option<usize>,
    /// blackhole, cusp or glued.
    #[arg(long)]
    profile: Option<String>,
    /// Black-hole mass.
    #[arg(long)]
    m: Option<f64>,
    /// Gluing radius of the glued profile.
    #[arg(long)]
    radius: Option<f64>,
    /// unit or proportional.
    #[arg(long)]
    transition: Option<String>,
    /// lo:hi:count or auto.
    #[arg(long)]
    grid: Option<String>,
}

#[derive(Debug, Args)]
struct ScanArgs {
    #[arg(long)]
    n: Option<usize>,
    /// Comma-separated filling sizes.
    #[arg(long)]
    sizes: Option<String>,
    /// Decay exponent or auto.
    #[arg(long)]
    delta: Option<String>,
    /// Comma-separated cutoff radii or auto.
    #[arg(long = "r-c")]
    r_c: Option<String>,
    /// Restrict the decay exponent to the L2 window.
    #[arg(long)]
    l2: bool,
    #[arg(long)]
    transition: Option<String>,
    #[arg(long)]
    grid_size: Option<usize>,
}

#[derive(Debug, Args)]
struct IndicialArgs {
    #[arg(long)]
    n: Option<usize>,
    /// 11, 22, 12, 1j, 2j, jj or jk.
    #[arg(long)]
    block: Option<String>,
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    m: Option<f64>,
    /// Comma-separated bump centers.
    #[arg(long)]
    centers: Option<String>,
    /// Grid points per bump.
    #[arg(long)]
    points: Option<usize>,
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, conflicts_with = "from_mass")]
    from_glued: Option<f64>,
    #[arg(long)]
    from_mass: Option<f64>,
    #[arg(long)]
    transition: Option<String>,
    /// Outer radius of an exact starting profile.
    #[arg(long)]
    outer_radius: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    damping: Option<f64>,
    /// Collocation intervals.
    #[arg(long)]
    nodes: Option<usize>,
    #[arg(long)]
    output_points: Option<usize>,
}

#[derive(Debug, Args)]
struct LatticeArgs {
    #[arg(long)]
    n: Option<usize>,
    /// Cusp as JSON {"basis": [row-major], "sigma": [ints]}; repeatable.
    #[arg(long)]
    cusp: Vec<String>,
    /// Filling class on the unit square lattice, comma-separated; repeatable.
    #[arg(long)]
    sigma: Vec<String>,
}

#[derive(Debug, Args)]
struct ReplayArgs {
    manifest: PathBuf,
}

fn list<T: std::str::FromStr>(s: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    parse_list(s).map_err(|e| ConfigError(format!("invalid list: {e}")).into())
}

fn profile_overrides(a: ProfileArgs) -> Overrides {
    let mut o = Overrides::default();
    o.set_opt("n", a.n)
        .set_opt("profile", a.profile)
        .set_opt("m", a.m)
        .set_opt("radius", a.radius)
        .set_opt("transition", a.transition)
        .set_opt("grid", a.grid);
    o
}

/// Command name and flag overrides.
fn overrides(command: Command) -> Result<(&'static str, Overrides)> {
    Ok(match command {
        Command::Curvature(a) => ("curvature", profile_overrides(a)),
        Command::Linearize(a) => ("linearize", profile_overrides(a)),
        Command::Scan(a) => {
            let mut o = Overrides::default();
            o.set_opt("n", a.n)
                .set_opt("sizes", a.sizes.as_deref().map(list::<f64>).transpose()?)
                .set_opt("delta", a.delta.as_deref().map(number_or_keyword))
                .set_opt("transition", a.transition)
                .set_opt("grid_size", a.grid_size);
            if let Some(rc) = a.r_c.as_deref() {
                let v = if rc.trim() == "auto" {
                    Value::from("auto")
                } else {
                    Value::from(list::<f64>(rc)?)
                };
                o.set("r_c", v);
            }
            if a.l2 {
                o.set("l2", true);
            }
            ("scan", o)
        }
        Command::Indicial(a) => {
            let mut o = Overrides::default();
            o.set_opt("n", a.n).set_opt("block", a.block);
            ("indicial", o)
        }
        Command::Compare(a) => {
            let mut o = Overrides::default();
            o.set_opt("n", a.n)
                .set_opt("m", a.m)
                .set_opt(
                    "centers",
                    a.centers.as_deref().map(list::<f64>).transpose()?,
                )
                .set_opt("points", a.points);
            ("compare", o)
        }
        Command::Solve(a) => {
            let mut o = Overrides::default();
            o.set_opt("n", a.n)
                .set_opt("from_glued", a.from_glued)
                .set_opt("from_mass", a.from_mass)
                .set_opt("transition", a.transition)
                .set_opt("outer_radius", a.outer_radius)
                .set_opt("residual_tol", a.tol)
                .set_opt("max_iters", a.max_iters)
                .set_opt("damping", a.damping)
                .set_opt("nodes", a.nodes)
                .set_opt("output_points", a.output_points);
            if a.from_glued.is_some() {
                o.set("from_mass", Value::Null);
            }
            if a.from_mass.is_some() {
                o.set("from_glued", Value::Null);
            }
            ("solve", o)
        }
        Command::Lattice(a) => {
            let mut o = Overrides::default();
            o.set_opt("n", a.n);
            let mut cusps = Vec::new();
            for c in &a.cusp {
                let v: Value = serde_json::from_str(c)
                    .map_err(|e| ConfigError(format!("--cusp `{c}`: {e}")))?;
                cusps.push(v);
            }
            for s in &a.sigma {
                let sigma = list::<i64>(s)?;
                cusps.push(serde_json::to_value(dehnfill::lattice::CuspSpec::unit(
                    sigma,
                ))?);
            }
            if !cusps.is_empty() {
                o.set("cusps", cusps);
            }
            ("lattice", o)
        }
        Command::Replay(_) => unreachable!("replay has no overrides"),
    })
}

/// 2 for invalid input, 3 for numerical non-convergence, 1 otherwise.
fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<dehnfill::Error>() {
            return if e.is_numerical() { 3 } else { 2 };
        }
        if cause.downcast_ref::<ConfigError>().is_some() {
            return 2;
        }
    }
    1
}

struct Invocation {
    command: String,
    config: Value,
    inputs: BTreeMap<String, String>,
    /// Output hashes a replay must reproduce.
    expected: Option<BTreeMap<String, String>>,
}

fn invocation(cli: Cli) -> Result<Invocation> {
    let mut inputs = BTreeMap::new();
    if let Command::Replay(r) = &cli.command {
        let bytes = std::fs::read(&r.manifest)
            .with_context(|| format!("reading {}", r.manifest.display()))?;
        let m = read_manifest(&r.manifest)?;
        inputs.insert("manifest".to_string(), sha256_hex(&bytes));
        inputs.insert(
            "config".to_string(),
            sha256_hex(&serde_json::to_vec(&m.config)?),
        );
        let expected = (m.status.ok && !m.outputs.is_empty()).then_some(m.outputs);
        return Ok(Invocation {
            command: m.command,
            config: m.config,
            inputs,
            expected,
        });
    }
    let base = match &cli.config {
        Some(path) => {
            let (map, bytes) = config::read_file(path)?;
            inputs.insert("config_file".to_string(), sha256_hex(&bytes));
            map
        }
        None => Map::new(),
    };
    let (command, o) = overrides(cli.command)?;
    let config = merge(base, o);
    inputs.insert(
        "config".to_string(),
        sha256_hex(&serde_json::to_vec(&config)?),
    );
    Ok(Invocation {
        command: command.to_string(),
        config,
        inputs,
        expected: None,
    })
}

fn execute(inv: Invocation, out_dir: Option<&Path>) -> Result<()> {
    let result = commands::run(&inv.command, inv.config.clone());
    let Some(dir) = out_dir else {
        let out = result?;
        print!("{}", out.report);
        eprint!("{}", pretty_json(&out.summary)?);
        return Ok(());
    };
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut outputs = BTreeMap::new();
    let (resolved, status) = match &result {
        Ok(out) => {
            write_output(dir, REPORT_FILE, &out.report, &mut outputs)?;
            write_output(dir, SUMMARY_FILE, &pretty_json(&out.summary)?, &mut outputs)?;
            (
                out.resolved.clone(),
                RunStatus {
                    ok: true,
                    error: None,
                    exit_code: 0,
                },
            )
        }
        Err(e) => (
            Value::Null,
            RunStatus {
                ok: false,
                error: Some(format!("{e:#}")),
                exit_code: exit_code(e).into(),
            },
        ),
    };
    let manifest = RunManifest {
        command: inv.command,
        config: inv.config,
        resolved,
        version: env!("CARGO_PKG_VERSION").to_string(),
        timestamp: timestamp(),
        inputs: inv.inputs,
        outputs: outputs.clone(),
        status,
    };
    let mut ignored = BTreeMap::new();
    write_output(dir, MANIFEST_FILE, &pretty_json(&manifest)?, &mut ignored)?;
    result?;
    if let Some(expected) = inv.expected {
        if expected != outputs {
            anyhow::bail!("replayed outputs differ from the manifest hashes");
        }
        eprintln!("outputs reproduce the manifest hashes");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let out_dir = cli.out_dir.clone();
    match invocation(cli).and_then(|inv| execute(inv, out_dir.as_deref())) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
