//! Weight functions and discrete weighted norms: the decay weight
//! `(2/ρ)^δ = e^{δ log(2/ρ)}`, the per-cusp weight `φ_c`, weighted sup norms
//! and difference-quotient seminorms.

use serde::{Deserialize, Serialize};

use crate::bump::smooth_step_integral;
use crate::error::{Error, Result};

/// Relative width of the window over which the corner of `φ_c` is smoothed.
pub const PHI_SMOOTHING_WIDTH: f64 = 0.05;

/// Default Hölder exponent.
pub const DEFAULT_ALPHA: f64 = 0.5;

/// Values of a function on an ascending radial grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if grid.len() != values.len() {
            return Err(Error::InvalidInput(format!(
                "grid has {} points but {} values were given",
                grid.len(),
                values.len()
            )));
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput(
                "grid must be strictly increasing".into(),
            ));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn<F: FnMut(f64) -> f64>(grid: Vec<f64>, mut f: F) -> Result<Self> {
        let values = grid.iter().map(|&r| f(r)).collect();
        Self::new(grid, values)
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn check_finite(&self) -> Result<()> {
        match self.values.iter().position(|v| !v.is_finite()) {
            Some(i) => Err(Error::NonFiniteField(i)),
            None => Ok(()),
        }
    }
}

/// `n` uniformly spaced points on `[a, b]`.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    let h = (b - a) / (n - 1) as f64;
    (0..n)
        .map(|i| if i + 1 == n { b } else { a + h * i as f64 })
        .collect()
}

/// `n` logarithmically spaced points on `[a, b]`, `0 < a < b`.
pub fn logspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    let (la, lb) = (a.ln(), b.ln());
    linspace(la, lb, n)
        .into_iter()
        .enumerate()
        .map(|(i, s)| {
            if i == 0 {
                a
            } else if i + 1 == n {
                b
            } else {
                s.exp()
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum AutoTag {
    Auto,
}

/// Decay exponent as configured: a number or `"auto"`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DeltaSpec {
    Value(f64),
    #[serde(with = "auto_tag")]
    Auto,
}

/// Cutoff radii as configured: one per cusp or `"auto"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CutoffSpec {
    Radii(Vec<f64>),
    #[serde(with = "auto_tag")]
    Auto,
}

mod auto_tag {
    use super::AutoTag;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(s: S) -> Result<S::Ok, S::Error> {
        AutoTag::Auto.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<(), D::Error> {
        AutoTag::deserialize(d).map(|_| ())
    }
}

/// JSON form `{"delta": number | "auto", "r_c": [numbers] | "auto"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightConfig {
    pub delta: DeltaSpec,
    pub r_c: CutoffSpec,
    /// Restrict `δ` to `((n-1)/2, n-1)`, where weighted spaces embed in `L^2`.
    #[serde(default)]
    pub l2: bool,
}

impl Default for WeightConfig {
    fn default() -> Self {
        Self {
            delta: DeltaSpec::Auto,
            r_c: CutoffSpec::Auto,
            l2: false,
        }
    }
}

/// Midpoint `3(n-1)/4` of the admissible decay window.
pub fn default_delta(n: usize) -> f64 {
    3.0 * (n as f64 - 1.0) / 4.0
}

/// Geometric mean `√(r+ R)`.
pub fn default_cutoff(r_plus: f64, radius: f64) -> f64 {
    (r_plus * radius).sqrt()
}

/// Filling-region geometry and cutoff of one cusp.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CuspWeight {
    pub r_plus: f64,
    pub radius: f64,
    pub r_c: f64,
}

/// Resolved weights: decay exponent and per-cusp cutoffs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightSpec {
    pub n: usize,
    pub delta: f64,
    pub cusps: Vec<CuspWeight>,
}

impl WeightSpec {
    pub fn new(n: usize, delta: f64, cusps: Vec<CuspWeight>) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidDimension(n));
        }
        if !(delta >= 0.0) || !delta.is_finite() {
            return Err(Error::InvalidWeight(format!(
                "δ must be finite and >= 0, got {delta}"
            )));
        }
        for c in &cusps {
            if !(c.r_plus > 0.0 && c.radius > c.r_plus) {
                return Err(Error::InvalidWeight(format!(
                    "filling region [{}, {}] is empty",
                    c.r_plus, c.radius
                )));
            }
            if !(c.r_c >= c.r_plus && c.r_c <= c.radius) {
                return Err(Error::InvalidWeight(format!(
                    "r_c = {} must lie in [{}, {}]",
                    c.r_c, c.r_plus, c.radius
                )));
            }
        }
        Ok(Self { n, delta, cusps })
    }

    /// Resolve a configuration against the filling regions `(r+, R)` of each cusp.
    pub fn resolve(n: usize, config: &WeightConfig, regions: &[(f64, f64)]) -> Result<Self> {
        let delta = match config.delta {
            DeltaSpec::Auto => default_delta(n),
            DeltaSpec::Value(d) => d,
        };
        let r_c: Vec<f64> = match &config.r_c {
            CutoffSpec::Auto => regions.iter().map(|&(a, b)| default_cutoff(a, b)).collect(),
            CutoffSpec::Radii(v) => {
                if v.len() != regions.len() {
                    return Err(Error::InvalidWeight(format!(
                        "{} cutoff radii given for {} cusps",
                        v.len(),
                        regions.len()
                    )));
                }
                v.clone()
            }
        };
        let cusps = regions
            .iter()
            .zip(r_c)
            .map(|(&(r_plus, radius), r_c)| CuspWeight {
                r_plus,
                radius,
                r_c,
            })
            .collect();
        let spec = Self::new(n, delta, cusps)?;
        if config.l2 {
            spec.require_l2()
        } else {
            Ok(spec)
        }
    }

    /// Reject `δ` outside the open window `((n-1)/2, n-1)`.
    pub fn require_l2(self) -> Result<Self> {
        let n1 = self.n as f64 - 1.0;
        if !(self.delta > 0.5 * n1 && self.delta < n1) {
            return Err(Error::InvalidWeight(format!(
                "δ = {} is outside the L² window ({}, {})",
                self.delta,
                0.5 * n1,
                n1
            )));
        }
        Ok(self)
    }

    pub fn cusp(&self, index: usize) -> Result<&CuspWeight> {
        self.cusps
            .get(index)
            .ok_or_else(|| Error::InvalidWeight(format!("no cusp with index {index}")))
    }
}

/// `(2/ρ)^δ` for a defining-function value `0 < ρ <= 2`.
pub fn decay_weight(w: &WeightSpec, rho: f64) -> Result<f64> {
    if !(rho > 0.0 && rho <= 2.0) {
        return Err(Error::InvalidRho(rho));
    }
    Ok((2.0 / rho).powf(w.delta))
}

/// `max(r, r_c)` with the corner smoothed over a window of relative width
/// `PHI_SMOOTHING_WIDTH`, clipped to stay inside `[lo, hi]`.
fn smoothed_max(r: f64, r_c: f64, lo: f64, hi: f64) -> f64 {
    let width = (PHI_SMOOTHING_WIDTH * r_c)
        .min(2.0 * (r_c - lo))
        .min(2.0 * (hi - r_c));
    if !(width > 0.0) {
        return r.max(r_c);
    }
    let start = r_c - 0.5 * width;
    r_c + width * smooth_step_integral((r - start) / width) + (r - start - width).max(0.0)
}

/// Per-cusp weight: `r_c/R` for `r <= r_c`, `r/R` for `r_c <= r <= R`, with the
/// corner at `r_c` smoothed.
pub fn phi_c(w: &WeightSpec, cusp_index: usize, r: f64) -> Result<f64> {
    let c = w.cusp(cusp_index)?;
    if !(r >= c.r_plus && r <= c.radius) {
        return Err(Error::OutOfDomain {
            r,
            lo: c.r_plus,
            hi: c.radius,
        });
    }
    Ok(smoothed_max(r, c.r_c, c.r_plus, c.radius) / c.radius)
}

/// Defining function used to evaluate the decay weight at radius `r`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DefiningFunction {
    /// `ρ = 2`: unit decay weight.
    Unit,
    /// `ρ = 1/r`, the defining function of the black-hole end.
    InverseRadius,
    /// `ρ = r/R`, the cusp coordinate of a filling region.
    FillingRatio,
}

impl DefiningFunction {
    pub fn rho(self, r: f64, radius: f64) -> f64 {
        match self {
            DefiningFunction::Unit => 2.0,
            DefiningFunction::InverseRadius => 1.0 / r,
            DefiningFunction::FillingRatio => r / radius,
        }
    }
}

/// Pointwise multiplier `(2/ρ)^δ φ_c^{-1}` on the filling region of a cusp.
pub fn weight_multiplier(
    w: &WeightSpec,
    cusp_index: usize,
    rho: DefiningFunction,
    r: f64,
) -> Result<f64> {
    let c = w.cusp(cusp_index)?;
    Ok(decay_weight(w, rho.rho(r, c.radius))? / phi_c(w, cusp_index, r)?)
}

/// `sup |(2/ρ)^δ φ_c^{-1} f|` over the grid.
pub fn weighted_sup_norm(
    field: &GridFunction,
    w: &WeightSpec,
    cusp_index: usize,
    rho: DefiningFunction,
) -> Result<f64> {
    field.check_finite()?;
    field
        .grid
        .iter()
        .zip(&field.values)
        .try_fold(0.0f64, |acc, (&r, &f)| {
            Ok(acc.max((weight_multiplier(w, cusp_index, rho, r)? * f).abs()))
        })
}

/// Order-`k` divided differences of `values` on `grid` (length `len - k`).
pub fn divided_differences(grid: &[f64], values: &[f64], order: usize) -> Vec<f64> {
    let mut d = values.to_vec();
    for k in 1..=order {
        d = (0..d.len() - 1)
            .map(|i| (d[i + 1] - d[i]) / (grid[i + k] - grid[i]))
            .collect();
    }
    // Rescale to derivative approximations: k! [x_i, ..., x_{i+k}] ≈ f^{(k)}.
    let fact: f64 = (1..=order).map(|i| i as f64).product();
    d.into_iter().map(|x| x * fact).collect()
}

/// `max_i |D^k f_{i+1} - D^k f_i| / |Δx_i|^α`, where `D^k f_i` is the order-`k`
/// divided-difference derivative anchored at `x_i`.
pub fn discrete_holder_seminorm(
    grid: &[f64],
    values: &[f64],
    alpha: f64,
    order: usize,
) -> Result<f64> {
    if grid.len() != values.len() {
        return Err(Error::InvalidInput(
            "grid and values differ in length".into(),
        ));
    }
    if grid.len() < 3.max(order + 2) {
        return Err(Error::GridTooCoarse(format!(
            "need at least {} points for an order-{order} seminorm, got {}",
            3.max(order + 2),
            grid.len()
        )));
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFiniteField(i));
    }
    let d = divided_differences(grid, values, order);
    Ok((0..d.len() - 1)
        .map(|i| (d[i + 1] - d[i]).abs() / (grid[i + 1] - grid[i]).abs().powf(alpha))
        .fold(0.0, f64::max))
}

/// `max |f_i - f_j| / |x_i - x_j|^α` over all pairs with `|x_i - x_j| <= scale`.
pub fn holder_quotient_within(grid: &[f64], values: &[f64], alpha: f64, scale: f64) -> Result<f64> {
    if grid.len() != values.len() {
        return Err(Error::InvalidInput(
            "grid and values differ in length".into(),
        ));
    }
    if grid.len() < 3 {
        return Err(Error::GridTooCoarse(format!(
            "need at least 3 points, got {}",
            grid.len()
        )));
    }
    let mut best = 0.0f64;
    for i in 0..grid.len() {
        for j in i + 1..grid.len() {
            let d = (grid[j] - grid[i]).abs();
            if d > scale {
                break;
            }
            best = best.max((values[j] - values[i]).abs() / d.powf(alpha));
        }
    }
    Ok(best)
}

/// Partial sums `∫_{r0}^{r_end} |(ρ/2)^δ|^2 r^{n-2} dr` with `ρ = 1/r`, the
/// squared L² mass of a field at the edge of the weighted space against the
/// volume growth of the black-hole end.
pub fn weighted_l2_partial_sums(n: usize, delta: f64, r0: f64, ends: &[f64]) -> Vec<f64> {
    let integrand = |r: f64| (2.0 * r).powf(-2.0 * delta) * r.powi(n as i32 - 2);
    let mut out = Vec::with_capacity(ends.len());
    let mut total = 0.0;
    let mut left = r0;
    for &end in ends {
        if end > left {
            total += crate::bump::gauss_legendre(
                |s: f64| integrand(s.exp()) * s.exp(),
                left.ln(),
                end.ln(),
                64,
            );
            left = end;
        }
        out.push(total);
    }
    out
}
