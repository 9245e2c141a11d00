//! Subcommand configurations and their table/summary outputs.

use std::fmt::Write as _;

use anyhow::Result;
use dehnfill::curvature::{ricci_and_deficit, CurvatureReport};
use dehnfill::gluing::decay_scan;
use dehnfill::lattice::{filling_data, CuspSpec};
use dehnfill::linearized::{
    assemble_l_blackhole, assemble_l_cusp, coefficient_table, compare_operators, indicial_roots,
    BlockLabel, CORE_MARGIN,
};
use dehnfill::norms::{linspace, logspace, CutoffSpec, DeltaSpec, WeightConfig};
use dehnfill::profiles::{
    closing_parameters, make_glued_profile_with, FillingMetric, Transition, WarpingProfile,
};
use dehnfill::solver::{newton_solve, NewtonConfig};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::config::{parse, ConfigError};

/// Tables and summary produced by one command.
#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub report: String,
    pub summary: Value,
    /// Values substituted for every `auto` setting.
    pub resolved: Value,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProfileChoice {
    Blackhole,
    Cusp,
    Glued,
}

fn auto() -> String {
    "auto".into()
}

fn one() -> f64 {
    1.0
}

fn default_radius() -> f64 {
    30.0
}

fn unit_transition() -> Transition {
    Transition::Unit
}

fn proportional_transition() -> Transition {
    Transition::Proportional
}

fn blackhole() -> ProfileChoice {
    ProfileChoice::Blackhole
}

/// `lo:hi:count`, evenly spaced in `r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl GridSpec {
    pub fn parse(s: &str) -> Result<Self, ConfigError> {
        let bad = || ConfigError(format!("grid `{s}` must have the form lo:hi:count"));
        let parts: Vec<&str> = s.split(':').collect();
        let [lo, hi, count] = parts.as_slice() else {
            return Err(bad());
        };
        let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
        let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
        let count: usize = count.trim().parse().map_err(|_| bad())?;
        if !(lo > 0.0 && hi > lo && hi.is_finite()) || count < 2 {
            return Err(ConfigError(format!(
                "grid `{s}` needs 0 < lo < hi and count >= 2"
            )));
        }
        Ok(Self { lo, hi, count })
    }

    fn resolve(s: &str, auto: GridSpec) -> Result<Self, ConfigError> {
        if s == "auto" {
            Ok(auto)
        } else {
            Self::parse(s)
        }
    }

    pub fn points(&self) -> Vec<f64> {
        linspace(self.lo, self.hi, self.count)
    }
}

/// Profile family shared by `curvature` and `linearize`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileConfig {
    pub n: usize,
    #[serde(default = "blackhole")]
    pub profile: ProfileChoice,
    /// Black-hole mass.
    #[serde(default = "one")]
    pub m: f64,
    /// Gluing radius `R` of the glued profile.
    #[serde(default = "default_radius")]
    pub radius: f64,
    #[serde(default = "unit_transition")]
    pub transition: Transition,
    #[serde(default = "auto")]
    pub grid: String,
}

impl ProfileConfig {
    /// Profile, closing period and resolved sample grid.
    fn build(&self, auto_count: usize) -> Result<(WarpingProfile, f64, GridSpec)> {
        let n = self.n;
        match self.profile {
            ProfileChoice::Blackhole => {
                let cp = closing_parameters(self.m, n)?;
                let auto = GridSpec {
                    lo: 1.1 * cp.r_plus,
                    hi: 10.0 * cp.r_plus,
                    count: auto_count,
                };
                let grid = GridSpec::resolve(&self.grid, auto)?;
                let profile = WarpingProfile::black_hole(
                    n,
                    self.m,
                    cp.r_plus,
                    grid.hi.max(cp.r_plus * (1.0 + CORE_MARGIN)),
                )?;
                Ok((profile, cp.beta, grid))
            }
            ProfileChoice::Cusp => {
                let auto = GridSpec {
                    lo: 1.0,
                    hi: 10.0,
                    count: auto_count,
                };
                let grid = GridSpec::resolve(&self.grid, auto)?;
                Ok((WarpingProfile::cusp(n, grid.lo, grid.hi)?, 1.0, grid))
            }
            ProfileChoice::Glued => {
                let cp = closing_parameters(1.0, n)?;
                let profile = make_glued_profile_with(self.radius, n, 4, self.transition)?;
                let auto = GridSpec {
                    lo: 1.1 * cp.r_plus,
                    hi: self.radius,
                    count: auto_count,
                };
                Ok((profile, cp.beta, GridSpec::resolve(&self.grid, auto)?))
            }
        }
    }

    fn resolved(&self, grid: &GridSpec) -> Value {
        let mut v = serde_json::to_value(self).expect("config serializes");
        v["grid"] = json!(grid);
        v
    }
}

pub fn curvature(cfg: &ProfileConfig) -> Result<Output> {
    let (profile, _, grid) = cfg.build(64)?;
    let mut report = String::from(CurvatureReport::CSV_HEADER);
    report.push('\n');
    let metric = FillingMetric::with_unit_torus(profile, 1.0)?;
    let mut max_deficit = 0.0f64;
    let mut scalar = (f64::INFINITY, f64::NEG_INFINITY);
    for r in grid.points() {
        let row = ricci_and_deficit(&metric, r)?;
        max_deficit = max_deficit.max(row.deficit_sup());
        scalar = (scalar.0.min(row.scalar), scalar.1.max(row.scalar));
        report.push_str(&row.csv_row());
        report.push('\n');
    }
    let summary = json!({
        "n": cfg.n,
        "profile": cfg.profile,
        "rows": grid.count,
        "max_deficit": max_deficit,
        "scalar_min": scalar.0,
        "scalar_max": scalar.1,
        "einstein_scalar": -((cfg.n * (cfg.n - 1)) as f64),
    });
    Ok(Output {
        report,
        summary,
        resolved: cfg.resolved(&grid),
    })
}

pub fn linearize(cfg: &ProfileConfig) -> Result<Output> {
    let (profile, beta, grid) = cfg.build(32)?;
    let sys = match cfg.profile {
        ProfileChoice::Cusp => assemble_l_cusp(cfg.n)?,
        _ => assemble_l_blackhole(&FillingMetric::with_unit_torus(profile, beta)?)?,
    };
    let (header, rows) = coefficient_table(&sys, &grid.points())?;
    let mut report = header.join(",");
    report.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|x| format!("{x:e}")).collect();
        report.push_str(&cells.join(","));
        report.push('\n');
    }
    let roots = BlockLabel::ALL
        .iter()
        .map(|&b| indicial_roots(b, cfg.n))
        .collect::<dehnfill::Result<Vec<_>>>()?;
    let summary =
        json!({ "n": cfg.n, "profile": cfg.profile, "rows": grid.count, "indicial_roots": roots });
    Ok(Output {
        report,
        summary,
        resolved: cfg.resolved(&grid),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IndicialConfig {
    pub n: usize,
    /// One block label, or every block when absent.
    #[serde(default)]
    pub block: Option<String>,
}

pub fn indicial(cfg: &IndicialConfig) -> Result<Output> {
    let blocks = match &cfg.block {
        Some(b) => vec![b.parse::<BlockLabel>()?],
        None => BlockLabel::ALL.to_vec(),
    };
    let roots = blocks
        .iter()
        .map(|&b| indicial_roots(b, cfg.n))
        .collect::<dehnfill::Result<Vec<_>>>()?;
    let mut report = String::from("block,root\n");
    for r in &roots {
        for s in &r.roots {
            writeln!(report, "{},{s:e}", r.block.name()).expect("write to string");
        }
    }
    let summary = json!({ "n": cfg.n, "blocks": roots });
    Ok(Output {
        report,
        summary,
        resolved: serde_json::to_value(cfg)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    pub n: usize,
    pub sizes: Vec<f64>,
    #[serde(default = "auto_delta")]
    pub delta: DeltaSpec,
    #[serde(default = "auto_cutoff")]
    pub r_c: CutoffSpec,
    #[serde(default)]
    pub l2: bool,
    #[serde(default = "proportional_transition")]
    pub transition: Transition,
    #[serde(default = "default_norm_grid")]
    pub grid_size: usize,
}

fn auto_delta() -> DeltaSpec {
    DeltaSpec::Auto
}

fn auto_cutoff() -> CutoffSpec {
    CutoffSpec::Auto
}

fn default_norm_grid() -> usize {
    512
}

pub fn scan(cfg: &ScanConfig) -> Result<Output> {
    let weights = WeightConfig {
        delta: cfg.delta,
        r_c: cfg.r_c.clone(),
        l2: cfg.l2,
    };
    let res = decay_scan(cfg.n, &cfg.sizes, &weights, cfg.transition, cfg.grid_size)?;
    let mut report = String::from("size,radius,norm\n");
    for p in &res.points {
        writeln!(report, "{:e},{:e},{:e}", p.size, p.radius, p.norm).expect("write to string");
    }
    let (a, b) = (cfg.sizes[0], cfg.sizes[cfg.sizes.len() - 1]);
    let summary = json!({
        "n": cfg.n,
        "slope": res.fit.slope,
        "intercept": res.fit.intercept,
        "residual": res.fit.residual,
        "expected_slope": res.expected_slope,
        "fit_line": [[a, res.fit.predict(a)], [b, res.fit.predict(b)]],
    });
    let mut resolved = serde_json::to_value(cfg)?;
    resolved["delta"] = json!(res.weights[0].delta);
    resolved["r_c"] = json!(res
        .points
        .iter()
        .zip(&res.weights)
        .map(|(p, w)| json!({ "size": p.size, "r_c": w.cusps.iter().map(|c| c.r_c).collect::<Vec<_>>() }))
        .collect::<Vec<_>>());
    Ok(Output {
        report,
        summary,
        resolved,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareConfig {
    pub n: usize,
    #[serde(default = "one")]
    pub m: f64,
    #[serde(default = "default_centers")]
    pub centers: Vec<f64>,
    #[serde(default = "default_bump_points")]
    pub points: usize,
}

fn default_centers() -> Vec<f64> {
    logspace(5.0, 500.0, 7)
}

fn default_bump_points() -> usize {
    201
}

pub fn compare(cfg: &CompareConfig) -> Result<Output> {
    let res = compare_operators(cfg.n, cfg.m, &cfg.centers, cfg.points)?;
    let mut report = String::from("center,sup_difference\n");
    for (c, d) in res.centers.iter().zip(&res.sup_difference) {
        writeln!(report, "{c:e},{d:e}").expect("write to string");
    }
    let summary = json!({
        "n": cfg.n,
        "slope": res.fit.slope,
        "intercept": res.fit.intercept,
        "residual": res.fit.residual,
        "expected_slope": res.expected_slope,
    });
    let mut resolved = serde_json::to_value(cfg)?;
    resolved["bump"] = json!("compact_bump");
    Ok(Output {
        report,
        summary,
        resolved,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveConfig {
    pub n: usize,
    /// Start from the glued profile of this radius.
    #[serde(default)]
    pub from_glued: Option<f64>,
    /// Start from the exact black hole of this mass.
    #[serde(default)]
    pub from_mass: Option<f64>,
    #[serde(default = "unit_transition")]
    pub transition: Transition,
    #[serde(default = "default_radius")]
    pub outer_radius: f64,
    #[serde(flatten)]
    pub newton: NewtonConfig,
}

pub fn solve(cfg: &SolveConfig) -> Result<Output> {
    let initial = match (cfg.from_glued, cfg.from_mass) {
        (Some(radius), None) => make_glued_profile_with(radius, cfg.n, 4, cfg.transition)?,
        (None, Some(m)) => WarpingProfile::black_hole_from_horizon(cfg.n, m, cfg.outer_radius)?,
        _ => {
            return Err(
                ConfigError("exactly one of from_glued and from_mass is required".into()).into(),
            )
        }
    };
    let res = newton_solve(&initial, cfg.n, &cfg.newton)?;
    let (lo, hi) = res.profile.domain();
    let mut report = String::from("r,V\n");
    for r in logspace(lo, hi, cfg.newton.output_points) {
        writeln!(report, "{r:e},{:e}", res.profile.eval(r.clamp(lo, hi), 0)?)
            .expect("write to string");
    }
    let summary = serde_json::to_value(&res)?;
    Ok(Output {
        report,
        summary,
        resolved: serde_json::to_value(cfg)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeConfig {
    /// Dimension, `rank + 1` of the cusp lattices when absent.
    #[serde(default)]
    pub n: Option<usize>,
    pub cusps: Vec<CuspSpec>,
}

pub fn lattice(cfg: &LatticeConfig) -> Result<Output> {
    let first = cfg
        .cusps
        .first()
        .ok_or_else(|| ConfigError("at least one cusp is required".into()))?;
    let n = cfg.n.unwrap_or(first.sigma.len() + 1);
    let cusps = cfg
        .cusps
        .iter()
        .map(CuspSpec::resolve)
        .collect::<dehnfill::Result<Vec<_>>>()?;
    let data = filling_data(&cusps, n)?;
    let mut report = String::from("cusp,length,radius\n");
    for (i, c) in data.cusps.iter().enumerate() {
        writeln!(report, "{i},{:e},{:e}", c.length, c.radius).expect("write to string");
    }
    let mut resolved = serde_json::to_value(cfg)?;
    resolved["n"] = json!(n);
    Ok(Output {
        report,
        summary: serde_json::to_value(&data)?,
        resolved,
    })
}

/// Runs `command` on a merged configuration object.
pub fn run(command: &str, config: Value) -> Result<Output> {
    match command {
        "curvature" => curvature(&parse(config)?),
        "scan" => scan(&parse(config)?),
        "linearize" => linearize(&parse(config)?),
        "indicial" => indicial(&parse(config)?),
        "compare" => compare(&parse(config)?),
        "solve" => solve(&parse(config)?),
        "lattice" => lattice(&parse(config)?),
        other => Err(ConfigError(format!("unknown command `{other}`")).into()),
    }
}
