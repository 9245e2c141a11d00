//! Approximate solutions on Dehn fillings: one glued black-hole/cusp metric
//! per filled cusp, their weighted Einstein deficit and its decay in `|σ|`.

use serde::Serialize;

use crate::curvature::deficit_pair;
use crate::error::{Error, Result};
use crate::fit::{fit_power_law, PowerLawFit};
use crate::lattice::{filling_data, scaled_unit_cusp, DehnFillingData};
use crate::norms::{
    divided_differences, holder_quotient_within, linspace, weight_multiplier, DefiningFunction,
    WeightConfig, WeightSpec, DEFAULT_ALPHA,
};
use crate::profiles::{
    closing_parameters, coordinate_change_to_cusp, make_glued_profile_with, CuspChart,
    FillingMetric, Transition,
};

/// Smallest grid accepted by the deficit norm.
pub const MIN_NORM_GRID: usize = 256;

/// Minimum number of sizes in a decay scan.
pub const MIN_SCAN_SIZES: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct ApproximateSolution {
    pub n: usize,
    pub filling: DehnFillingData,
    pub transition: Transition,
    pub metrics: Vec<FillingMetric>,
}

impl ApproximateSolution {
    /// `(r+, R)` of each filling region.
    pub fn regions(&self) -> Vec<(f64, f64)> {
        self.metrics.iter().map(|m| m.profile().domain()).collect()
    }

    pub fn size(&self) -> f64 {
        self.filling.size
    }
}

/// Glued metrics with the proportional transition `[R/2, 3R/4]`.
pub fn build_approximate_solution(
    filling: &DehnFillingData,
    n: usize,
) -> Result<ApproximateSolution> {
    build_approximate_solution_with(filling, n, Transition::Proportional)
}

pub fn build_approximate_solution_with(
    filling: &DehnFillingData,
    n: usize,
    transition: Transition,
) -> Result<ApproximateSolution> {
    if filling.n != n {
        return Err(Error::InvalidInput(format!(
            "filling data is for n = {}, not {n}",
            filling.n
        )));
    }
    let metrics = filling
        .cusps
        .iter()
        .map(|c| {
            let profile = make_glued_profile_with(c.radius, n, 4, transition)?;
            FillingMetric::new(profile, filling.beta_1, c.torus_gram())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ApproximateSolution {
        n,
        filling: filling.clone(),
        transition,
        metrics,
    })
}

/// Rescaled metric coefficients at `r` in the cusp region of cusp `index`.
pub fn boundary_chart(sol: &ApproximateSolution, index: usize, r: f64) -> Result<CuspChart> {
    let m = sol
        .metrics
        .get(index)
        .ok_or_else(|| Error::InvalidInput(format!("no cusp with index {index}")))?;
    coordinate_change_to_cusp(m.profile(), r)
}

/// Components of the weighted deficit norm on one filling region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DeficitNormParts {
    pub sup: f64,
    pub first: f64,
    pub second: f64,
    pub holder: f64,
}

impl DeficitNormParts {
    pub fn total(&self) -> f64 {
        self.sup + self.first + self.second + self.holder
    }
}

/// Radial window on which the deficit of `metric` is sampled.
fn norm_window(metric: &FillingMetric) -> (f64, f64) {
    let (lo, hi) = metric.profile().domain();
    match metric.profile().glued_parts() {
        Some((_, cutoff)) => {
            let pad = 0.1 * (cutoff.end - cutoff.start);
            ((cutoff.start - pad).max(lo), (cutoff.end + pad).min(hi))
        }
        None => (lo + 0.01 * (hi - lo), hi),
    }
}

/// Weighted deficit `(2/ρ)^δ φ_c^{-1} |ric + (n-1)g|` with `ρ = r/R`, measured
/// by its sup, its first and second derivatives in geodesic arclength and the
/// unit-scale Hölder quotient of the second derivative.
pub fn metric_deficit_norm(
    metric: &FillingMetric,
    w: &WeightSpec,
    cusp_index: usize,
    grid_size: usize,
) -> Result<DeficitNormParts> {
    if grid_size < MIN_NORM_GRID {
        return Err(Error::GridTooCoarse(format!(
            "deficit norm needs at least {MIN_NORM_GRID} points, got {grid_size}"
        )));
    }
    let (a, b) = norm_window(metric);
    let grid = linspace(a, b, grid_size);
    let mut arclength = Vec::with_capacity(grid_size);
    let mut fields = [Vec::with_capacity(grid_size), Vec::with_capacity(grid_size)];
    let mut prev_speed = 0.0;
    for (i, &r) in grid.iter().enumerate() {
        let v = metric.profile().eval(r, 0)?;
        if !(v > 0.0) {
            return Err(Error::NonPositiveProfile(r));
        }
        let speed = 1.0 / v.sqrt();
        let t = if i == 0 {
            0.0
        } else {
            arclength[i - 1] + 0.5 * (speed + prev_speed) * (r - grid[i - 1])
        };
        prev_speed = speed;
        arclength.push(t);
        let weight = weight_multiplier(w, cusp_index, DefiningFunction::FillingRatio, r)?;
        for (field, tau) in fields.iter_mut().zip(deficit_pair(metric, r)?) {
            field.push(weight * tau);
        }
    }
    let sup_abs = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut parts = DeficitNormParts {
        sup: 0.0,
        first: 0.0,
        second: 0.0,
        holder: 0.0,
    };
    // Seminorms are taken per frame component so that they see a smooth field.
    for field in &fields {
        if let Some(i) = field.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteField(i));
        }
        let d1 = divided_differences(&arclength, field, 1);
        let d2 = divided_differences(&arclength, field, 2);
        let holder = holder_quotient_within(&arclength[..d2.len()], &d2, DEFAULT_ALPHA, 1.0)?;
        parts.sup = parts.sup.max(sup_abs(field));
        parts.first = parts.first.max(sup_abs(&d1));
        parts.second = parts.second.max(sup_abs(&d2));
        parts.holder = parts.holder.max(holder);
    }
    Ok(parts)
}

/// Largest weighted deficit norm over the filled cusps.
pub fn deficit_norm(sol: &ApproximateSolution, w: &WeightSpec, grid_size: usize) -> Result<f64> {
    if w.cusps.len() != sol.metrics.len() {
        return Err(Error::InvalidWeight(format!(
            "weights given for {} cusps, solution has {}",
            w.cusps.len(),
            sol.metrics.len()
        )));
    }
    sol.metrics
        .iter()
        .enumerate()
        .try_fold(0.0f64, |acc, (i, m)| {
            Ok(acc.max(metric_deficit_norm(m, w, i, grid_size)?.total()))
        })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanPoint {
    pub size: f64,
    pub radius: f64,
    pub norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayScanResult {
    pub n: usize,
    pub points: Vec<ScanPoint>,
    pub fit: PowerLawFit,
    pub expected_slope: f64,
    /// Cutoff radius of each point, with "auto" resolved.
    pub weights: Vec<WeightSpec>,
}

/// Deficit norms of single-cusp fillings of sizes `sizes` and their fitted decay.
pub fn decay_scan(
    n: usize,
    sizes: &[f64],
    config: &WeightConfig,
    transition: Transition,
    grid_size: usize,
) -> Result<DecayScanResult> {
    if sizes.len() < MIN_SCAN_SIZES {
        return Err(Error::InvalidInput(format!(
            "need >= {MIN_SCAN_SIZES} sizes, got {}",
            sizes.len()
        )));
    }
    if sizes.windows(2).any(|p| !(p[1] > p[0])) {
        return Err(Error::InvalidInput(
            "sizes must be strictly increasing".into(),
        ));
    }
    let mut points = Vec::with_capacity(sizes.len());
    let mut weights = Vec::with_capacity(sizes.len());
    for &size in sizes {
        let filling = filling_data(&[scaled_unit_cusp(n, size)?], n)?;
        let sol = build_approximate_solution_with(&filling, n, transition)?;
        let w = WeightSpec::resolve(n, config, &sol.regions())?;
        let norm = deficit_norm(&sol, &w, grid_size)?;
        points.push(ScanPoint {
            size,
            radius: filling.cusps[0].radius,
            norm,
        });
        weights.push(w);
    }
    let xs: Vec<f64> = points.iter().map(|p| p.size).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.norm).collect();
    let fit = fit_power_law(&xs, &ys)?;
    Ok(DecayScanResult {
        n,
        points,
        fit,
        expected_slope: 1.0 - n as f64,
        weights,
    })
}

/// `r+` of the unit-mass black hole in dimension `n`.
pub fn unit_horizon(n: usize) -> Result<f64> {
    Ok(closing_parameters(1.0, n)?.r_plus)
}
