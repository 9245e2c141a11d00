//! Radial warping profiles `V(r)` and the cohomogeneity-one metrics
//! `V^{-1} dr^2 + V dθ^2 + r^2 g_T` they define.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::bump::smooth_step;
use crate::error::{Error, Result};
use crate::spline::CubicSpline;

/// Minimum number of samples in a sampled profile.
pub const MIN_SAMPLES: usize = 9;

fn check_dimension(n: usize) -> Result<()> {
    if n < 3 {
        Err(Error::InvalidDimension(n))
    } else {
        Ok(())
    }
}

/// Horizon radius and smooth-closing period of a black hole of mass `m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosingParameters {
    pub r_plus: f64,
    pub beta: f64,
}

/// `r+ = (2m)^{1/(n-1)}` and `β = 4π / ((n-1) r+)`, the period for which the
/// metric closes smoothly at the core torus.
pub fn closing_parameters(m: f64, n: usize) -> Result<ClosingParameters> {
    check_dimension(n)?;
    if !(m > 0.0) || !m.is_finite() {
        return Err(Error::InvalidMass(m));
    }
    let r_plus = (2.0 * m).powf(1.0 / (n as f64 - 1.0));
    let beta = 4.0 * PI / ((n as f64 - 1.0) * r_plus);
    Ok(ClosingParameters { r_plus, beta })
}

/// Where the glued profile switches from the black hole to the cusp.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transition {
    /// `χ` falls from 1 to 0 on `[R-2, R-1]`.
    Unit,
    /// `χ` falls from 1 to 0 on `[R/2, 3R/4]`, so its `r`-derivatives scale
    /// like `R^{-k}`.
    Proportional,
}

impl Transition {
    pub fn interval(self, radius: f64) -> (f64, f64) {
        match self {
            Transition::Unit => (radius - 2.0, radius - 1.0),
            Transition::Proportional => (0.5 * radius, 0.75 * radius),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Transition::Unit => "unit",
            Transition::Proportional => "proportional",
        }
    }
}

impl std::str::FromStr for Transition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unit" => Ok(Transition::Unit),
            "proportional" | "scaled" => Ok(Transition::Proportional),
            other => Err(Error::InvalidInput(format!("unknown transition `{other}`"))),
        }
    }
}

/// Cutoff `χ`: identically 1 below `start`, identically 0 above `end`,
/// a C^∞ monotone `exp(-1/t)` step in between.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffFunction {
    pub start: f64,
    pub end: f64,
    /// Requested smoothness order; the bump is C^∞ so any `k >= 4` is met.
    pub smoothness: u32,
}

impl CutoffFunction {
    pub fn new(start: f64, end: f64, smoothness: u32) -> Result<Self> {
        if !(end > start) || !start.is_finite() || !end.is_finite() {
            return Err(Error::InvalidInput(format!(
                "cutoff interval [{start}, {end}] is empty"
            )));
        }
        if smoothness < 4 {
            return Err(Error::InvalidInput(format!(
                "cutoff smoothness must be >= 4, got {smoothness}"
            )));
        }
        Ok(Self {
            start,
            end,
            smoothness,
        })
    }

    /// `[χ, χ', χ'']` at `r`.
    pub fn eval(&self, r: f64) -> [f64; 3] {
        let width = self.end - self.start;
        let [s, s1, s2] = smooth_step((r - self.start) / width);
        [1.0 - s, -s1 / width, -s2 / (width * width)]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProfileKind {
    /// `V = r^2`.
    Cusp,
    /// `V = r^2 - 2m r^{3-n}`.
    BlackHole { mass: f64 },
    /// `V = r^2 - 2χ(r) r^{3-n}` (black hole of unit mass cut off into a cusp).
    Glued { radius: f64, cutoff: CutoffFunction },
    /// Natural cubic spline through samples.
    Sampled(CubicSpline),
}

/// A warping profile together with its dimension and radial domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ProfileRepr", into = "ProfileRepr")]
pub struct WarpingProfile {
    dimension: usize,
    kind: ProfileKind,
    lo: f64,
    hi: f64,
}

fn black_hole_terms(n: usize, mass: f64, r: f64) -> [f64; 3] {
    let e = 3 - n as i32;
    let p = r.powi(e);
    let c = e as f64;
    [
        r * r - 2.0 * mass * p,
        2.0 * r - 2.0 * mass * c * r.powi(e - 1),
        2.0 - 2.0 * mass * c * (c - 1.0) * r.powi(e - 2),
    ]
}

impl WarpingProfile {
    fn with_domain(dimension: usize, kind: ProfileKind, lo: f64, hi: f64) -> Result<Self> {
        check_dimension(dimension)?;
        if !(lo > 0.0) || !(hi > lo) || !hi.is_finite() {
            return Err(Error::InvalidInput(format!("invalid domain [{lo}, {hi}]")));
        }
        Ok(Self {
            dimension,
            kind,
            lo,
            hi,
        })
    }

    pub fn cusp(n: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::with_domain(n, ProfileKind::Cusp, lo, hi)
    }

    pub fn black_hole(n: usize, mass: f64, lo: f64, hi: f64) -> Result<Self> {
        if !(mass > 0.0) || !mass.is_finite() {
            return Err(Error::InvalidMass(mass));
        }
        Self::with_domain(n, ProfileKind::BlackHole { mass }, lo, hi)
    }

    /// Black hole on `[r+, hi]`.
    pub fn black_hole_from_horizon(n: usize, mass: f64, hi: f64) -> Result<Self> {
        let cp = closing_parameters(mass, n)?;
        Self::black_hole(n, mass, cp.r_plus, hi)
    }

    pub fn sampled(n: usize, grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if grid.len() < MIN_SAMPLES {
            return Err(Error::InvalidInput(format!(
                "sampled profile needs >= {MIN_SAMPLES} points, got {}",
                grid.len()
            )));
        }
        let (lo, hi) = (grid[0], grid[grid.len() - 1]);
        let spline = CubicSpline::natural(grid, values)?;
        Self::with_domain(n, ProfileKind::Sampled(spline), lo, hi)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn kind(&self) -> &ProfileKind {
        &self.kind
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    pub fn contains(&self, r: f64) -> bool {
        r >= self.lo && r <= self.hi
    }

    /// `V`, `V'` or `V''` at `r`.
    pub fn eval(&self, r: f64, deriv_order: u8) -> Result<f64> {
        if deriv_order > 2 {
            return Err(Error::DerivOrderUnsupported(deriv_order));
        }
        Ok(self.eval_all(r)?[deriv_order as usize])
    }

    /// `[V, V', V'']` at `r`.
    pub fn eval_all(&self, r: f64) -> Result<[f64; 3]> {
        if !self.contains(r) {
            return Err(Error::OutOfDomain {
                r,
                lo: self.lo,
                hi: self.hi,
            });
        }
        Ok(self.eval_unchecked(r))
    }

    pub(crate) fn eval_unchecked(&self, r: f64) -> [f64; 3] {
        let n = self.dimension;
        match &self.kind {
            ProfileKind::Cusp => [r * r, 2.0 * r, 2.0],
            ProfileKind::BlackHole { mass } => black_hole_terms(n, *mass, r),
            ProfileKind::Glued { cutoff, .. } => {
                if r <= cutoff.start {
                    return black_hole_terms(n, 1.0, r);
                }
                if r >= cutoff.end {
                    return [r * r, 2.0 * r, 2.0];
                }
                let [chi, chi1, chi2] = cutoff.eval(r);
                let e = 3 - n as i32;
                let c = e as f64;
                let w = chi * r.powi(e);
                let w1 = chi1 * r.powi(e) + c * chi * r.powi(e - 1);
                let w2 = chi2 * r.powi(e)
                    + 2.0 * c * chi1 * r.powi(e - 1)
                    + c * (c - 1.0) * chi * r.powi(e - 2);
                [r * r - 2.0 * w, 2.0 * r - 2.0 * w1, 2.0 - 2.0 * w2]
            }
            ProfileKind::Sampled(spline) => spline.eval(r),
        }
    }

    /// `[τ_11, τ_jj]` of `ric + (n-1)g` for the closed-form variants, evaluated
    /// without cancellation: writing `V = r^2 - 2χ r^{3-n}`, the `χ` terms cancel
    /// identically and only `χ'` and `χ''` remain.
    pub fn closed_form_deficit(&self, r: f64) -> Result<Option<[f64; 2]>> {
        if !self.contains(r) {
            return Err(Error::OutOfDomain {
                r,
                lo: self.lo,
                hi: self.hi,
            });
        }
        Ok(match &self.kind {
            ProfileKind::Cusp | ProfileKind::BlackHole { .. } => Some([0.0, 0.0]),
            ProfileKind::Glued { cutoff, .. } => {
                if r <= cutoff.start || r >= cutoff.end {
                    return Ok(Some([0.0, 0.0]));
                }
                let [_, chi1, chi2] = cutoff.eval(r);
                let n = self.dimension as i32;
                let p = r.powi(3 - n);
                Some([chi2 * p + (4 - n) as f64 * chi1 * p / r, 2.0 * chi1 * p / r])
            }
            ProfileKind::Sampled(_) => None,
        })
    }

    /// For glued profiles, the radius `R` and cutoff.
    pub fn glued_parts(&self) -> Option<(f64, CutoffFunction)> {
        match &self.kind {
            ProfileKind::Glued { radius, cutoff } => Some((*radius, *cutoff)),
            _ => None,
        }
    }

    /// Sample this profile on `grid` into a spline-backed profile.
    pub fn resample(&self, grid: &[f64]) -> Result<Self> {
        let values = grid
            .iter()
            .map(|&r| self.eval(r, 0))
            .collect::<Result<Vec<_>>>()?;
        Self::sampled(self.dimension, grid.to_vec(), values)
    }
}

/// Glued profile on `[r+(1), R]` with the unit-width transition `[R-2, R-1]`.
pub fn make_glued_profile(radius: f64, n: usize, k_smooth: u32) -> Result<WarpingProfile> {
    make_glued_profile_with(radius, n, k_smooth, Transition::Unit)
}

pub fn make_glued_profile_with(
    radius: f64,
    n: usize,
    k_smooth: u32,
    transition: Transition,
) -> Result<WarpingProfile> {
    let cp = closing_parameters(1.0, n)?;
    let min = cp.r_plus + 3.0;
    if !(radius > min) {
        return Err(Error::RadiusTooSmall { radius, min });
    }
    let (start, end) = transition.interval(radius);
    let cutoff = CutoffFunction::new(start, end, k_smooth)?;
    WarpingProfile::with_domain(n, ProfileKind::Glued { radius, cutoff }, cp.r_plus, radius)
}

/// Metric coefficients of a glued filling in the cusp chart `ρ = r/R`,
/// torus coordinates rescaled by `R`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CuspChart {
    pub rho: f64,
    /// Coefficient of `dρ^2`: `R^2 / V(r)`.
    pub g_rho: f64,
    /// Coefficient of the rescaled θ-circle: `V(r) / R^2`.
    pub g_circle: f64,
    /// Coefficient of the rescaled flat `T^{n-2}`: `r^2 / R^2`.
    pub g_torus: f64,
}

impl CuspChart {
    /// The hyperbolic cusp `ρ^{-2} dρ^2 + ρ^2 g` at the same `ρ`.
    pub fn cusp_form(rho: f64) -> Self {
        Self {
            rho,
            g_rho: 1.0 / (rho * rho),
            g_circle: rho * rho,
            g_torus: rho * rho,
        }
    }

    pub fn max_deviation(&self, other: &CuspChart) -> f64 {
        let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(f64::MIN_POSITIVE);
        rel(self.g_rho, other.g_rho)
            .max(rel(self.g_circle, other.g_circle))
            .max(rel(self.g_torus, other.g_torus))
    }
}

pub fn coordinate_change_to_cusp(profile: &WarpingProfile, r: f64) -> Result<CuspChart> {
    let (radius, cutoff) = profile.glued_parts().ok_or_else(|| {
        Error::InvalidInput("coordinate change to the cusp needs a glued profile".into())
    })?;
    if !(r > cutoff.end) {
        return Err(Error::NotInCuspRegion {
            r,
            start: cutoff.end,
        });
    }
    let v = profile.eval(r, 0)?;
    let r2 = radius * radius;
    Ok(CuspChart {
        rho: r / radius,
        g_rho: r2 / v,
        g_circle: v / r2,
        g_torus: r * r / r2,
    })
}

/// `V^{-1} dr^2 + V dθ^2 + r^2 g_T` on `[r_lo, r_hi] × S^1_β × T^{n-2}`.
#[derive(Debug, Clone, PartialEq)]
pub struct FillingMetric {
    profile: WarpingProfile,
    beta: f64,
    torus_gram: DMatrix<f64>,
}

impl FillingMetric {
    pub fn new(profile: WarpingProfile, beta: f64, torus_gram: DMatrix<f64>) -> Result<Self> {
        let k = profile.dimension() - 2;
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::InvalidInput(format!(
                "period β must be positive, got {beta}"
            )));
        }
        if torus_gram.nrows() != k || torus_gram.ncols() != k {
            return Err(Error::InvalidInput(format!(
                "torus Gram matrix must be {k}x{k}, got {}x{}",
                torus_gram.nrows(),
                torus_gram.ncols()
            )));
        }
        let asym = (&torus_gram - torus_gram.transpose()).amax();
        if asym > 1e-12 * torus_gram.amax().max(1.0) || torus_gram.clone().cholesky().is_none() {
            return Err(Error::InvalidInput(
                "torus Gram matrix must be symmetric positive definite".into(),
            ));
        }
        Ok(Self {
            profile,
            beta,
            torus_gram,
        })
    }

    /// Flat unit torus factor.
    pub fn with_unit_torus(profile: WarpingProfile, beta: f64) -> Result<Self> {
        let k = profile.dimension().saturating_sub(2);
        Self::new(profile, beta, DMatrix::identity(k, k))
    }

    /// Black hole on `[r+, r_hi]` with the smooth-closing period.
    pub fn smooth_black_hole(n: usize, mass: f64, r_hi: f64) -> Result<Self> {
        let cp = closing_parameters(mass, n)?;
        Self::with_unit_torus(
            WarpingProfile::black_hole(n, mass, cp.r_plus, r_hi)?,
            cp.beta,
        )
    }

    pub fn dimension(&self) -> usize {
        self.profile.dimension()
    }

    pub fn profile(&self) -> &WarpingProfile {
        &self.profile
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn torus_gram(&self) -> &DMatrix<f64> {
        &self.torus_gram
    }

    /// Coordinate components in `(r, θ, φ_3, ..., φ_n)` at `r`.
    pub fn coordinate_metric(&self, r: f64) -> Result<DMatrix<f64>> {
        let v = self.profile.eval(r, 0)?;
        Ok(coordinate_metric_from(v, r, &self.torus_gram))
    }
}

pub(crate) fn coordinate_metric_from(v: f64, r: f64, gram: &DMatrix<f64>) -> DMatrix<f64> {
    let k = gram.nrows();
    let mut g = DMatrix::zeros(k + 2, k + 2);
    g[(0, 0)] = 1.0 / v;
    g[(1, 1)] = v;
    g.view_mut((2, 2), (k, k)).copy_from(&(gram * (r * r)));
    g
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "variant", content = "params", rename_all = "snake_case")]
enum ParamsRepr {
    Cusp {
        dimension: usize,
    },
    BlackHole {
        dimension: usize,
        mass: f64,
    },
    Glued {
        dimension: usize,
        radius: f64,
        cutoff: CutoffFunction,
    },
    Sampled {
        dimension: usize,
        grid: Vec<f64>,
        values: Vec<f64>,
    },
}

#[derive(Serialize, Deserialize)]
struct ProfileRepr {
    #[serde(flatten)]
    params: ParamsRepr,
    domain: [f64; 2],
}

impl From<WarpingProfile> for ProfileRepr {
    fn from(p: WarpingProfile) -> Self {
        let dimension = p.dimension;
        let params = match p.kind {
            ProfileKind::Cusp => ParamsRepr::Cusp { dimension },
            ProfileKind::BlackHole { mass } => ParamsRepr::BlackHole { dimension, mass },
            ProfileKind::Glued { radius, cutoff } => ParamsRepr::Glued {
                dimension,
                radius,
                cutoff,
            },
            ProfileKind::Sampled(s) => ParamsRepr::Sampled {
                dimension,
                grid: s.knots().to_vec(),
                values: s.values().to_vec(),
            },
        };
        ProfileRepr {
            params,
            domain: [p.lo, p.hi],
        }
    }
}

impl TryFrom<ProfileRepr> for WarpingProfile {
    type Error = Error;

    fn try_from(repr: ProfileRepr) -> Result<Self> {
        let [lo, hi] = repr.domain;
        match repr.params {
            ParamsRepr::Cusp { dimension } => WarpingProfile::cusp(dimension, lo, hi),
            ParamsRepr::BlackHole { dimension, mass } => {
                WarpingProfile::black_hole(dimension, mass, lo, hi)
            }
            ParamsRepr::Glued {
                dimension,
                radius,
                cutoff,
            } => {
                let cutoff = CutoffFunction::new(cutoff.start, cutoff.end, cutoff.smoothness)?;
                WarpingProfile::with_domain(
                    dimension,
                    ProfileKind::Glued { radius, cutoff },
                    lo,
                    hi,
                )
            }
            ParamsRepr::Sampled {
                dimension,
                grid,
                values,
            } => {
                let p = WarpingProfile::sampled(dimension, grid, values)?;
                if p.lo != lo || p.hi != hi {
                    return Err(Error::InvalidInput(
                        "sampled domain must match its grid".into(),
                    ));
                }
                Ok(p)
            }
        }
    }
}

/// Fourth-order central differences `[V', V'']` with step `h`.
pub fn central_differences(profile: &WarpingProfile, r: f64, h: f64) -> Result<[f64; 2]> {
    let f = |x: f64| profile.eval(x, 0);
    let (m2, m1, p1, p2) = (f(r - 2.0 * h)?, f(r - h)?, f(r + h)?, f(r + 2.0 * h)?);
    let c = f(r)?;
    Ok([
        (m2 - 8.0 * m1 + 8.0 * p1 - p2) / (12.0 * h),
        (-m2 + 16.0 * m1 - 30.0 * c + 16.0 * p1 - p2) / (12.0 * h * h),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_examples() {
        let cusp = WarpingProfile::cusp(4, 0.1, 10.0).unwrap();
        assert_eq!(cusp.eval(3.0, 0).unwrap(), 9.0);
        let bh = WarpingProfile::black_hole_from_horizon(4, 1.0, 10.0).unwrap();
        assert!((bh.eval(2.0, 0).unwrap() - 3.0).abs() < 1e-15);
        let r_plus = 2f64.powf(1.0 / 3.0);
        assert!(bh.eval(r_plus, 0).unwrap().abs() < 1e-15);
    }

    #[test]
    fn eval_errors() {
        let bh = WarpingProfile::black_hole_from_horizon(4, 1.0, 10.0).unwrap();
        assert!(matches!(bh.eval(11.0, 0), Err(Error::OutOfDomain { .. })));
        assert!(matches!(bh.eval(1.0, 0), Err(Error::OutOfDomain { .. })));
        assert_eq!(bh.eval(2.0, 3), Err(Error::DerivOrderUnsupported(3)));
        assert_eq!(
            WarpingProfile::cusp(2, 1.0, 2.0),
            Err(Error::InvalidDimension(2))
        );
    }

    #[test]
    fn closing_parameter_examples() {
        let cp = closing_parameters(1.0, 4).unwrap();
        assert!((cp.r_plus - 1.259_921_0).abs() < 1e-7);
        assert!((cp.beta - 3.324_650_0).abs() < 1e-5);
        let cp = closing_parameters(0.5, 3).unwrap();
        assert!((cp.r_plus - 1.0).abs() < 1e-15);
        assert!((cp.beta - 2.0 * PI).abs() < 1e-15);
        let cp = closing_parameters(1.0, 5).unwrap();
        let bh = WarpingProfile::black_hole_from_horizon(5, 1.0, 10.0).unwrap();
        let v1 = bh.eval(cp.r_plus, 1).unwrap();
        assert!((4.0 * PI / v1 - cp.beta).abs() < 1e-12);
        assert_eq!(closing_parameters(0.0, 4), Err(Error::InvalidMass(0.0)));
        assert_eq!(closing_parameters(-1.0, 4), Err(Error::InvalidMass(-1.0)));
    }

    #[test]
    fn n3_black_hole_is_shifted_cusp() {
        let bh = WarpingProfile::black_hole(3, 0.7, 1.5, 9.0).unwrap();
        let [v, v1, v2] = bh.eval_all(2.0).unwrap();
        assert_eq!([v, v1, v2], [4.0 - 1.4, 4.0, 2.0]);
    }

    #[test]
    fn glued_examples() {
        let g = make_glued_profile(100.0, 4, 4).unwrap();
        assert!((g.eval(50.0, 0).unwrap() - 2499.96).abs() < 1e-10);
        assert_eq!(g.eval(99.5, 0).unwrap(), 9900.25);
        assert!(matches!(
            make_glued_profile(4.0, 4, 4),
            Err(Error::RadiusTooSmall { .. })
        ));
    }

    #[test]
    fn glued_pieces_are_bitwise_exact() {
        for transition in [Transition::Unit, Transition::Proportional] {
            let g = make_glued_profile_with(40.0, 5, 6, transition).unwrap();
            let bh = WarpingProfile::black_hole_from_horizon(5, 1.0, 40.0).unwrap();
            let (a, b) = transition.interval(40.0);
            for i in 0..200 {
                let r = g.domain().0 + (g.domain().1 - g.domain().0) * i as f64 / 199.0;
                let v = g.eval_all(r).unwrap();
                if r < a {
                    assert_eq!(v, bh.eval_all(r).unwrap());
                } else if r > b {
                    assert_eq!(v, [r * r, 2.0 * r, 2.0]);
                }
            }
        }
    }

    #[test]
    fn glued_is_smooth_across_junctions() {
        // One-sided Taylor test: inside the transition the glued profile departs
        // from the adjacent closed-form piece by o(x^4) in V, V' and V''.
        let g = make_glued_profile(10.0, 5, 4).unwrap();
        let bh = WarpingProfile::black_hole_from_horizon(5, 1.0, 10.0).unwrap();
        let cusp = WarpingProfile::cusp(5, 1.0, 10.0).unwrap();
        for &x in &[0.02, 0.01, 0.005] {
            let inner = g.eval_all(8.0 + x).unwrap();
            let outer = g.eval_all(9.0 - x).unwrap();
            let a = bh.eval_all(8.0 + x).unwrap();
            let b = cusp.eval_all(9.0 - x).unwrap();
            for k in 0..3 {
                assert!(
                    (inner[k] - a[k]).abs() / x.powi(4) < 1e-6,
                    "r=8 order {k} x={x}"
                );
                assert!(
                    (outer[k] - b[k]).abs() / x.powi(4) < 1e-6,
                    "r=9 order {k} x={x}"
                );
            }
        }
        for &r0 in &[8.0, 9.0] {
            let left = g.eval_all(r0 - 1e-12).unwrap();
            let right = g.eval_all(r0 + 1e-12).unwrap();
            for k in 0..3 {
                assert!((left[k] - right[k]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn derivatives_agree_with_differences() {
        let profiles = vec![
            WarpingProfile::cusp(6, 0.5, 20.0).unwrap(),
            WarpingProfile::black_hole_from_horizon(4, 1.0, 50.0).unwrap(),
            WarpingProfile::black_hole_from_horizon(7, 2.0, 50.0).unwrap(),
            make_glued_profile(12.0, 4, 4).unwrap(),
            make_glued_profile_with(30.0, 5, 4, Transition::Proportional).unwrap(),
        ];
        for p in &profiles {
            let (lo, hi) = p.domain();
            for i in 1..40 {
                let r = lo + (hi - lo) * i as f64 / 40.0;
                let h = (1e-4 * r).max(1e-6);
                let [d1, d2] = central_differences(p, r, h).unwrap();
                let [_, a1, a2] = p.eval_all(r).unwrap();
                assert!((d1 - a1).abs() <= 1e-6 * a1.abs().max(1.0), "V' at {r}");
                assert!((d2 - a2).abs() <= 1e-6 * a2.abs().max(1.0), "V'' at {r}");
            }
        }
    }

    #[test]
    fn sampled_profile_tracks_source() {
        let bh = WarpingProfile::black_hole_from_horizon(4, 1.0, 20.0).unwrap();
        let grid: Vec<f64> = (0..400).map(|i| 1.5 + 18.0 * i as f64 / 399.0).collect();
        let s = bh.resample(&grid).unwrap();
        let [v, v1, v2] = s.eval_all(7.77).unwrap();
        let [w, w1, w2] = bh.eval_all(7.77).unwrap();
        assert!((v - w).abs() < 1e-8 && (v1 - w1).abs() < 1e-5 && (v2 - w2).abs() < 1e-3);
        assert!(WarpingProfile::sampled(4, grid[..5].to_vec(), vec![1.0; 5]).is_err());
    }

    #[test]
    fn cusp_chart_examples() {
        let g = make_glued_profile(100.0, 4, 4).unwrap();
        let chart = coordinate_change_to_cusp(&g, 99.5).unwrap();
        assert!((chart.rho - 0.995).abs() < 1e-15);
        assert!(chart.max_deviation(&CuspChart::cusp_form(chart.rho)) < 1e-14);
        let g = make_glued_profile(50.0, 5, 4).unwrap();
        let chart = coordinate_change_to_cusp(&g, 49.5).unwrap();
        assert!((chart.rho - 0.99).abs() < 1e-15);
        assert!(chart.max_deviation(&CuspChart::cusp_form(chart.rho)) < 1e-14);
        let g = make_glued_profile(100.0, 4, 4).unwrap();
        assert!(matches!(
            coordinate_change_to_cusp(&g, 97.0),
            Err(Error::NotInCuspRegion { .. })
        ));
    }

    #[test]
    fn smooth_closing_metric() {
        let m = FillingMetric::smooth_black_hole(4, 1.0, 10.0).unwrap();
        let v1 = m.profile().eval(m.profile().domain().0, 1).unwrap();
        assert!((m.beta() * v1 - 4.0 * PI).abs() < 1e-12);
        let g = m.coordinate_metric(2.0).unwrap();
        assert_eq!(g.nrows(), 4);
        assert!((g[(0, 0)] - 1.0 / 3.0).abs() < 1e-15 && (g[(2, 2)] - 4.0).abs() < 1e-15);
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(FillingMetric::new(m.profile().clone(), 1.0, bad).is_err());
    }
}
