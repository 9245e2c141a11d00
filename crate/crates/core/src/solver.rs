//! Euler-equation machinery (integrating factor, oscillation bounds) and the
//! Newton iteration that perturbs an approximate profile to an exact Einstein
//! profile within the cohomogeneity-one ansatz.
//!
//! Newton unknowns: `u = V/r^2` as a function of `ξ = log(r/r+)` on Chebyshev
//! collocation nodes, plus the horizon radius `r+`. In `ξ` the Einstein
//! equations have constant coefficients:
//! `F1 = -u''/2 - (n+1)u'/2 - (n-1)(u-1)`, `F2 = -u' - (n-1)(u-1)`.
//! Closing conditions `u(0) = 0`, `r+ u'(0) = 4π/β` and the outer Robin
//! condition `F2 = 0` pin the conformal infinity and leave the mass free.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fd::{cumulative_integral, interpolate, Stencils};
use crate::fit::PowerLawFit;
use crate::norms::{logspace, GridFunction};
use crate::profiles::WarpingProfile;

/// Residual level at which a failed line search is attributed to roundoff and
/// the full step is accepted.
pub const ROUNDOFF_FLOOR: f64 = 1e-10;

/// Maximum number of step halvings in the line search.
pub const MAX_HALVINGS: usize = 30;

fn check_dimension(n: usize) -> Result<()> {
    if n < 3 {
        return Err(Error::InvalidDimension(n));
    }
    Ok(())
}

/// Anchor of an Euler reconstruction: `f(r0) = value` and optionally `f'(r0) = slope`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EulerAnchor {
    pub r0: f64,
    pub value: f64,
    pub slope: Option<f64>,
}

impl EulerAnchor {
    pub fn value(r0: f64, value: f64) -> Self {
        Self {
            r0,
            value,
            slope: None,
        }
    }

    pub fn with_slope(r0: f64, value: f64, slope: f64) -> Self {
        Self {
            r0,
            value,
            slope: Some(slope),
        }
    }
}

/// Solves `r^2 f'' + n r f' = rhs` by the integrating factor:
/// `f(r) = f0 + ∫_{r0}^{r} t^{-n} (∫_{r_lo}^{t} s^{n-2} rhs(s) ds + c) dt`,
/// with `c = 0` unless the anchor prescribes a slope. `r_lo` is the grid start.
pub fn euler_reconstruct(
    n: usize,
    rhs: &GridFunction,
    anchor: EulerAnchor,
) -> Result<GridFunction> {
    check_dimension(n)?;
    rhs.check_finite()?;
    let grid = &rhs.grid;
    if grid.is_empty() || !(anchor.r0 >= grid[0] && anchor.r0 <= grid[grid.len() - 1]) {
        return Err(Error::AnchorOutsideGrid(anchor.r0));
    }
    let nf = n as f64;
    let weighted: Vec<f64> = grid
        .iter()
        .zip(&rhs.values)
        .map(|(r, v)| r.powf(nf - 2.0) * v)
        .collect();
    let inner = cumulative_integral(grid, &weighted)?;
    let c = match anchor.slope {
        None => 0.0,
        Some(p) => anchor.r0.powf(nf) * p - interpolate(grid, &inner, anchor.r0)?,
    };
    let derivative: Vec<f64> = grid
        .iter()
        .zip(&inner)
        .map(|(r, i)| r.powf(-nf) * (i + c))
        .collect();
    let outer = cumulative_integral(grid, &derivative)?;
    let shift = anchor.value - interpolate(grid, &outer, anchor.r0)?;
    GridFunction::new(grid.clone(), outer.iter().map(|v| v + shift).collect())
}

/// Weighted form of the oscillation estimate: `measured <= C1 sup|rhs/φ|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeightedOscillation {
    /// `∫_{r1}^{r2} r^{-n} ∫_{r+}^{r} s^{n-2} φ(s) ds dr`.
    pub c1: f64,
    /// `sup |rhs/φ|`.
    pub weighted_sup: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OscillationBound {
    pub measured: f64,
    pub bound: f64,
    pub c0: f64,
    pub weighted: Option<WeightedOscillation>,
}

/// `|f(r1) - f(r2)|` for the reconstruction whose inner integral starts at the
/// grid start `r+`, against `(sup|rhs|/(n-1)) (log(r2/r1) + C0)` with
/// `C0 = -r+^{n-1} (r1^{1-n} - r2^{1-n})/(n-1)`, and optionally against
/// `C1 sup|rhs/φ|`.
pub fn oscillation_bound(
    n: usize,
    rhs: &GridFunction,
    phi: Option<&GridFunction>,
    r1: f64,
    r2: f64,
) -> Result<OscillationBound> {
    check_dimension(n)?;
    let grid = &rhs.grid;
    let r_plus = *grid
        .first()
        .ok_or_else(|| Error::InvalidInput("empty grid".into()))?;
    let r_hi = grid[grid.len() - 1];
    if !(r_plus <= r1 && r1 < r2 && r2 <= r_hi) {
        return Err(Error::InvalidInput(format!(
            "need {r_plus} <= r1 < r2 <= {r_hi}, got r1 = {r1}, r2 = {r2}"
        )));
    }
    let nf = n as f64;
    let f = euler_reconstruct(n, rhs, EulerAnchor::value(r1, 0.0))?;
    let measured = interpolate(grid, &f.values, r2)?.abs();
    let sup = rhs.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let c0 = -r_plus.powf(nf - 1.0) * (r1.powf(1.0 - nf) - r2.powf(1.0 - nf)) / (nf - 1.0);
    let bound = sup / (nf - 1.0) * ((r2 / r1).ln() + c0);
    let weighted = match phi {
        None => None,
        Some(phi) => {
            if phi.grid != *grid {
                return Err(Error::InvalidInput(
                    "weight must share the right-hand side grid".into(),
                ));
            }
            if let Some(&bad) = phi.values.iter().find(|v| !(**v > 0.0)) {
                return Err(Error::InvalidWeight(format!(
                    "weight must be positive, got {bad}"
                )));
            }
            let g = euler_reconstruct(n, phi, EulerAnchor::value(r1, 0.0))?;
            let c1 = interpolate(grid, &g.values, r2)?.abs();
            let weighted_sup = rhs
                .values
                .iter()
                .zip(&phi.values)
                .fold(0.0f64, |m, (v, w)| m.max((v / w).abs()));
            Some(WeightedOscillation {
                c1,
                weighted_sup,
                bound: c1 * weighted_sup,
            })
        }
    };
    Ok(OscillationBound {
        measured,
        bound,
        c0,
        weighted,
    })
}

/// `F1 = ric_11 + (n-1)` and `F2 = ric_jj + (n-1)` of a profile on `grid`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EinsteinResidual {
    pub f1: GridFunction,
    pub f2: GridFunction,
}

impl EinsteinResidual {
    pub fn sup(&self) -> f64 {
        self.f1
            .values
            .iter()
            .chain(&self.f2.values)
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// `F1 - F2 - (r/2) F2'`, which vanishes identically (second Bianchi
    /// identity in the cohomogeneity-one ansatz); `F2'` by finite differences.
    pub fn bianchi_defect(&self) -> Result<Vec<f64>> {
        let grid = &self.f2.grid;
        let d = Stencils::new(grid)?.derivative(&self.f2.values);
        Ok((0..grid.len())
            .map(|i| self.f1.values[i] - self.f2.values[i] - 0.5 * grid[i] * d[i])
            .collect())
    }
}

/// `F1 = -V''/2 - (n-2)V'/(2r) + (n-1)`, `F2 = -V'/r - (n-3)V/r^2 + (n-1)`.
pub fn einstein_residual(profile: &WarpingProfile, grid: &[f64]) -> Result<EinsteinResidual> {
    let nf = profile.dimension() as f64;
    let mut f1 = Vec::with_capacity(grid.len());
    let mut f2 = Vec::with_capacity(grid.len());
    for (i, &r) in grid.iter().enumerate() {
        let [v, v1, v2] = profile.eval_all(r)?;
        let interior = i > 0 && i + 1 < grid.len();
        if interior && !(v > 0.0) {
            return Err(Error::NonPositiveProfile(r));
        }
        f1.push(-0.5 * v2 - (nf - 2.0) * v1 / (2.0 * r) + (nf - 1.0));
        f2.push(-v1 / r - (nf - 3.0) * v / (r * r) + (nf - 1.0));
    }
    Ok(EinsteinResidual {
        f1: GridFunction::new(grid.to_vec(), f1)?,
        f2: GridFunction::new(grid.to_vec(), f2)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NewtonConfig {
    pub max_iters: usize,
    pub residual_tol: f64,
    /// Initial step scale of the damped iteration, in `(0, 1]`.
    pub damping: f64,
    /// Number of Chebyshev collocation intervals.
    pub nodes: usize,
    /// Radii in the sampled output profile.
    pub output_points: usize,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        Self {
            max_iters: 30,
            residual_tol: 1e-10,
            damping: 1.0,
            nodes: 40,
            output_points: 401,
        }
    }
}

impl NewtonConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters < 1 {
            return Err(Error::InvalidInput("max_iters must be >= 1".into()));
        }
        if !(self.residual_tol > 0.0) {
            return Err(Error::InvalidInput(format!(
                "residual_tol must be positive, got {}",
                self.residual_tol
            )));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::InvalidInput(format!(
                "damping must lie in (0, 1], got {}",
                self.damping
            )));
        }
        if self.nodes < 8 {
            return Err(Error::GridTooCoarse(format!(
                "need >= 8 collocation nodes, got {}",
                self.nodes
            )));
        }
        if self.output_points < crate::profiles::MIN_SAMPLES {
            return Err(Error::InvalidInput("too few output points".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EinsteinSolveResult {
    pub n: usize,
    #[serde(skip)]
    pub profile: WarpingProfile,
    /// Collocation radii and `V` there.
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    pub fitted_m: f64,
    pub r_plus: f64,
    pub beta: f64,
    pub iters: usize,
    /// Discrete residual (max norm) before each iteration and after the last.
    pub residuals: Vec<f64>,
    pub converged: bool,
    /// Largest `res_{k+1}/res_k^2` over the last three iterations above the
    /// roundoff floor.
    pub quadratic_ratio: Option<f64>,
}

/// Chebyshev-Gauss-Lobatto nodes on `[0, len]` and the matching first-derivative matrix.
fn chebyshev(intervals: usize, len: f64) -> (Vec<f64>, DMatrix<f64>) {
    let m = intervals;
    let x: Vec<f64> = (0..=m).map(|j| (PI * j as f64 / m as f64).cos()).collect();
    let c = |j: usize| {
        let base = if j == 0 || j == m { 2.0 } else { 1.0 };
        if j.is_multiple_of(2) {
            base
        } else {
            -base
        }
    };
    let mut d = DMatrix::zeros(m + 1, m + 1);
    for i in 0..=m {
        for j in 0..=m {
            if i != j {
                d[(i, j)] = c(i) / c(j) / (x[i] - x[j]);
            }
        }
        let row: f64 = (0..=m).filter(|&j| j != i).map(|j| d[(i, j)]).sum();
        d[(i, i)] = -row;
    }
    let xi = x.iter().map(|t| 0.5 * len * (1.0 - t)).collect();
    (xi, d * (-2.0 / len))
}

/// Barycentric evaluation of the collocation polynomial at `t`.
fn barycentric(nodes: &[f64], values: &[f64], t: f64) -> f64 {
    let m = nodes.len() - 1;
    let (mut num, mut den) = (0.0, 0.0);
    for j in 0..=m {
        let diff = t - nodes[j];
        if diff == 0.0 {
            return values[j];
        }
        let mut w = if j % 2 == 0 { 1.0 } else { -1.0 };
        if j == 0 || j == m {
            w *= 0.5;
        }
        num += w / diff * values[j];
        den += w / diff;
    }
    num / den
}

struct Collocation {
    n: f64,
    closing: f64,
    d1: DMatrix<f64>,
    d2: DMatrix<f64>,
}

impl Collocation {
    /// Residual for unknowns `[u_0..u_M, r+]`.
    fn residual(&self, x: &DVector<f64>) -> DVector<f64> {
        let m = self.d1.nrows() - 1;
        let u = x.rows(0, m + 1);
        let r_plus = x[m + 1];
        let du = &self.d1 * u;
        let ddu = &self.d2 * u;
        let n = self.n;
        let mut f = DVector::zeros(m + 2);
        f[0] = u[0];
        f[1] = r_plus * du[0] - self.closing;
        for i in 1..m {
            f[i + 1] = -0.5 * ddu[i] - 0.5 * (n + 1.0) * du[i] - (n - 1.0) * (u[i] - 1.0);
        }
        f[m + 1] = -du[m] - (n - 1.0) * (u[m] - 1.0);
        f
    }

    fn jacobian(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let m = self.d1.nrows() - 1;
        let n = self.n;
        let mut j = DMatrix::zeros(m + 2, m + 2);
        j[(0, 0)] = 1.0;
        for k in 0..=m {
            j[(1, k)] = x[m + 1] * self.d1[(0, k)];
        }
        j[(1, m + 1)] = (0..=m).map(|k| self.d1[(0, k)] * x[k]).sum();
        for i in 1..m {
            for k in 0..=m {
                j[(i + 1, k)] = -0.5 * self.d2[(i, k)] - 0.5 * (n + 1.0) * self.d1[(i, k)];
            }
            j[(i + 1, i)] -= n - 1.0;
        }
        for k in 0..=m {
            j[(m + 1, k)] = -self.d1[(m, k)];
        }
        j[(m + 1, m)] -= n - 1.0;
        j
    }
}

fn max_norm(v: &DVector<f64>) -> f64 {
    v.amax()
}

/// Damped Newton iteration from `initial`, whose inner end must be a smooth
/// core (`V(r+) = 0`, `V'(r+) > 0`); `β = 4π/V'(r+)` is held fixed and the
/// outer radius is kept at the same multiple of `r+`.
pub fn newton_solve(
    initial: &WarpingProfile,
    n: usize,
    cfg: &NewtonConfig,
) -> Result<EinsteinSolveResult> {
    cfg.validate()?;
    check_dimension(n)?;
    if initial.dimension() != n {
        return Err(Error::InvalidInput(format!(
            "initial profile has dimension {}, not {n}",
            initial.dimension()
        )));
    }
    let (lo, hi) = initial.domain();
    let [v0, v1, _] = initial.eval_all(lo)?;
    if v0.abs() > 1e-10 * lo * lo || !(v1 > 0.0) {
        return Err(Error::InvalidInput(format!(
            "initial profile must close smoothly at its inner end (V = {v0}, V' = {v1} at r = {lo})"
        )));
    }
    let beta = 4.0 * PI / v1;
    let len = (hi / lo).ln();
    let (xi, d1) = chebyshev(cfg.nodes, len);
    let d2 = &d1 * &d1;
    let m = cfg.nodes;
    let sys = Collocation {
        n: n as f64,
        closing: 4.0 * PI / beta,
        d1,
        d2,
    };

    let mut x = DVector::zeros(m + 2);
    for (k, &t) in xi.iter().enumerate() {
        let r = (lo * t.exp()).min(hi);
        x[k] = initial.eval(r, 0)? / (r * r);
    }
    x[m + 1] = lo;

    let mut f = sys.residual(&x);
    let mut res = max_norm(&f);
    let mut residuals = vec![res];
    let mut iters = 0;
    while res >= cfg.residual_tol {
        if iters == cfg.max_iters {
            return Err(Error::MaxItersExceeded {
                iters,
                residual: res,
            });
        }
        let jac = sys.jacobian(&x);
        let step = jac
            .lu()
            .solve(&(-&f))
            .ok_or_else(|| Error::InvalidInput("singular Newton Jacobian".into()))?;
        let mut lambda = cfg.damping;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let trial = &x + &step * lambda;
            let ft = sys.residual(&trial);
            let rt = max_norm(&ft);
            if rt.is_finite() && trial[m + 1] > 0.0 && rt < (1.0 - 1e-4 * lambda) * res {
                accepted = Some((trial, ft, rt));
                break;
            }
            lambda *= 0.5;
        }
        let (nx, nf, nr) = match accepted {
            Some(a) => a,
            None if res < ROUNDOFF_FLOOR => {
                let trial = &x + &step;
                let ft = sys.residual(&trial);
                let rt = max_norm(&ft);
                (trial, ft, rt)
            }
            None => {
                return Err(Error::LineSearchFailed {
                    halvings: MAX_HALVINGS,
                    residual: res,
                })
            }
        };
        x = nx;
        f = nf;
        res = nr;
        residuals.push(res);
        iters += 1;
    }

    let r_plus = x[m + 1];
    let u: Vec<f64> = (0..=m).map(|k| x[k]).collect();
    let radii: Vec<f64> = xi.iter().map(|t| r_plus * t.exp()).collect();
    let values: Vec<f64> = radii.iter().zip(&u).map(|(r, u)| r * r * u).collect();
    let nf = n as f64;
    let aspects: Vec<f64> = radii
        .iter()
        .zip(&values)
        .map(|(r, v)| (r * r - v) * r.powf(nf - 3.0) / 2.0)
        .collect();
    let fitted_m = aspects.iter().sum::<f64>() / aspects.len() as f64;
    let out_grid = logspace(r_plus, radii[m], cfg.output_points);
    let out_values = out_grid
        .iter()
        .map(|&r| {
            let t = (r / r_plus).ln().clamp(0.0, len);
            r * r * barycentric(&xi, &u, t)
        })
        .collect();
    let profile = WarpingProfile::sampled(n, out_grid, out_values)?;
    let quadratic_ratio = residuals
        .windows(2)
        .filter(|w| w[0] > ROUNDOFF_FLOOR)
        .map(|w| w[1] / (w[0] * w[0]))
        .collect::<Vec<_>>()
        .iter()
        .rev()
        .take(3)
        .copied()
        .reduce(f64::max);
    Ok(EinsteinSolveResult {
        n,
        profile,
        radii,
        values,
        fitted_m,
        r_plus,
        beta,
        iters,
        residuals,
        converged: true,
        quadratic_ratio,
    })
}

impl EinsteinSolveResult {
    /// Largest `|V - (r^2 - 2 m̂ r^{3-n})| / r^2` over the collocation radii.
    pub fn identification_error(&self) -> f64 {
        let e = 3 - self.n as i32;
        self.radii
            .iter()
            .zip(&self.values)
            .map(|(r, v)| (v - (r * r - 2.0 * self.fitted_m * r.powi(e))).abs() / (r * r))
            .fold(0.0, f64::max)
    }
}

/// Smallest filling size whose predicted deficit meets `ε/Λ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PerturbationBudget {
    pub threshold: f64,
    pub current_size: f64,
    pub current_deficit: f64,
    pub minimal_size: f64,
    pub slope: f64,
    pub feasible: bool,
}

/// Inverts the fitted decay law `deficit ≈ C |σ|^{slope}` against `ε/Λ`.
pub fn perturbation_budget(
    current_size: f64,
    fit: Option<&PowerLawFit>,
    lambda: f64,
    epsilon: f64,
) -> Result<PerturbationBudget> {
    let fit =
        fit.ok_or_else(|| Error::ScanMissing("run a deficit scan to fit the decay law".into()))?;
    if !(lambda > 0.0 && epsilon > 0.0 && current_size > 0.0) {
        return Err(Error::InvalidInput(format!(
            "Λ, ε and the size must be positive (Λ = {lambda}, ε = {epsilon}, |σ| = {current_size})"
        )));
    }
    if !(fit.slope < 0.0) {
        return Err(Error::InvalidInput(format!(
            "decay law has slope {} >= 0",
            fit.slope
        )));
    }
    let threshold = epsilon / lambda;
    let current_deficit = fit.predict(current_size);
    let feasible = current_deficit <= threshold;
    let minimal_size = if feasible {
        current_size
    } else {
        fit.invert(threshold)
    };
    Ok(PerturbationBudget {
        threshold,
        current_size,
        current_deficit,
        minimal_size,
        slope: fit.slope,
        feasible,
    })
}
