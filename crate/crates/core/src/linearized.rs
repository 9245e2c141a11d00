//! The gauged linearized Einstein operator `L = Δ_L + 2(n-1)` on
//! `S^1 × T^{n-2}`-invariant symmetric 2-tensors, written as a coupled system of
//! radial ODEs in the orthonormal frame, its hyperbolic-cusp model, indicial
//! exponents, operator comparison and torus averaging.
//!
//! Every block has the principal part `A = -V ∂_r^2 - (V' + (n-2)V/r) ∂_r`;
//! the blocks differ only in their zeroth-order coupling.

use std::str::FromStr;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::bump::compact_bump;
use crate::error::{Error, Result};
use crate::fd::Stencils;
use crate::fit::{fit_power_law, PowerLawFit};
use crate::profiles::{FillingMetric, WarpingProfile};

/// Minimum number of grid points accepted by `apply_l`.
pub const MIN_APPLY_POINTS: usize = 8;

/// Minimum number of torus samples per radius for averaging.
pub const MIN_TORUS_SAMPLES: usize = 16;

/// Relative distance from the core kept by operator grids.
pub const CORE_MARGIN: f64 = 0.01;

/// Number of independent components of a symmetric `n × n` tensor.
pub fn pair_count(n: usize) -> usize {
    n * (n + 1) / 2
}

/// Position of the component `(a, b)` in the packed upper triangle.
pub fn pair_index(n: usize, a: usize, b: usize) -> usize {
    let (a, b) = if a <= b { (a, b) } else { (b, a) };
    a * n - a * (a.saturating_sub(1)) / 2 - if a > 0 { a } else { 0 } + b
}

/// Frame index pairs `(a, b)`, `a <= b`, in packed order.
pub fn pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|a| (a..n).map(move |b| (a, b))).collect()
}

/// Block labels of the invariant system, with `1 = e_1 = √V ∂_r`,
/// `2 = e_2 = ∂_θ/√V` and `j, k > 2` torus directions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum BlockLabel {
    #[serde(rename = "11")]
    B11,
    #[serde(rename = "22")]
    B22,
    #[serde(rename = "12")]
    B12,
    #[serde(rename = "1j")]
    B1j,
    #[serde(rename = "2j")]
    B2j,
    #[serde(rename = "jj")]
    Bjj,
    #[serde(rename = "jk")]
    Bjk,
}

impl BlockLabel {
    pub const ALL: [BlockLabel; 7] = [
        BlockLabel::B11,
        BlockLabel::B22,
        BlockLabel::B12,
        BlockLabel::B1j,
        BlockLabel::B2j,
        BlockLabel::Bjj,
        BlockLabel::Bjk,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BlockLabel::B11 => "11",
            BlockLabel::B22 => "22",
            BlockLabel::B12 => "12",
            BlockLabel::B1j => "1j",
            BlockLabel::B2j => "2j",
            BlockLabel::Bjj => "jj",
            BlockLabel::Bjk => "jk",
        }
    }

    /// Block of the frame pair `(a, b)` (0-based).
    pub fn of_pair(a: usize, b: usize) -> Self {
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        match (a, b) {
            (0, 0) => BlockLabel::B11,
            (1, 1) => BlockLabel::B22,
            (0, 1) => BlockLabel::B12,
            (0, _) => BlockLabel::B1j,
            (1, _) => BlockLabel::B2j,
            (a, b) if a == b => BlockLabel::Bjj,
            _ => BlockLabel::Bjk,
        }
    }

    /// Frame pairs making up this block in dimension `n`.
    pub fn pairs(self, n: usize) -> Vec<(usize, usize)> {
        pairs(n)
            .into_iter()
            .filter(|&(a, b)| Self::of_pair(a, b) == self)
            .collect()
    }
}

impl FromStr for BlockLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BlockLabel::ALL
            .iter()
            .copied()
            .find(|b| b.name() == s)
            .ok_or_else(|| Error::UnknownBlock(s.to_string()))
    }
}

/// Radial frame components `h_ab(r)` of a torus-invariant symmetric 2-tensor.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvariantDeformation {
    n: usize,
    grid: Vec<f64>,
    components: Vec<Vec<f64>>,
}

impl InvariantDeformation {
    pub fn new(n: usize, grid: Vec<f64>, components: Vec<Vec<f64>>) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidDimension(n));
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput(
                "grid must be strictly increasing".into(),
            ));
        }
        if components.len() != pair_count(n) {
            return Err(Error::InvalidInput(format!(
                "expected {} components, got {}",
                pair_count(n),
                components.len()
            )));
        }
        if components.iter().any(|c| c.len() != grid.len()) {
            return Err(Error::InvalidInput(
                "component arrays must share the grid".into(),
            ));
        }
        for c in &components {
            if let Some(i) = c.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFiniteField(i));
            }
        }
        Ok(Self {
            n,
            grid,
            components,
        })
    }

    pub fn from_fn<F: Fn(usize, usize, f64) -> f64>(
        n: usize,
        grid: Vec<f64>,
        f: F,
    ) -> Result<Self> {
        let components = pairs(n)
            .into_iter()
            .map(|(a, b)| grid.iter().map(|&r| f(a, b, r)).collect())
            .collect();
        Self::new(n, grid, components)
    }

    pub fn zeros(n: usize, grid: Vec<f64>) -> Result<Self> {
        Self::from_fn(n, grid, |_, _, _| 0.0)
    }

    /// The metric itself: `h_ab = δ_ab`.
    pub fn metric(n: usize, grid: Vec<f64>) -> Result<Self> {
        Self::from_fn(n, grid, |a, b, _| if a == b { 1.0 } else { 0.0 })
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn component(&self, a: usize, b: usize) -> &[f64] {
        &self.components[pair_index(self.n, a, b)]
    }

    pub fn component_mut(&mut self, a: usize, b: usize) -> &mut Vec<f64> {
        let i = pair_index(self.n, a, b);
        &mut self.components[i]
    }

    pub fn components(&self) -> &[Vec<f64>] {
        &self.components
    }

    /// Arrays of all components in `block`.
    pub fn block(&self, block: BlockLabel) -> Vec<&[f64]> {
        block
            .pairs(self.n)
            .into_iter()
            .map(|(a, b)| self.component(a, b))
            .collect()
    }

    /// The tensor at grid node `i`.
    pub fn at(&self, i: usize) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |a, b| self.component(a, b)[i])
    }

    /// Pointwise largest absolute component.
    pub fn pointwise_sup(&self) -> Vec<f64> {
        (0..self.grid.len())
            .map(|i| {
                self.components
                    .iter()
                    .fold(0.0f64, |m, c| m.max(c[i].abs()))
            })
            .collect()
    }

    pub fn sup_norm(&self) -> f64 {
        self.pointwise_sup().into_iter().fold(0.0, f64::max)
    }

    pub fn sub(&self, other: &InvariantDeformation) -> Result<InvariantDeformation> {
        if self.n != other.n || self.grid != other.grid {
            return Err(Error::InvalidInput(
                "deformations live on different grids".into(),
            ));
        }
        let components = self
            .components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect())
            .collect();
        Ok(Self {
            n: self.n,
            grid: self.grid.clone(),
            components,
        })
    }
}

/// Background on which the operator is assembled.
#[derive(Debug, Clone, PartialEq)]
pub enum Background {
    /// Warped product with profile `V`.
    Profile(WarpingProfile),
    /// Hyperbolic cusp `V = r^2` with the Euler-type model coefficients.
    Cusp,
}

/// The invariant system `(Lh)_p = a2 h_p'' + a1 h_p' + Σ_q Z_pq h_q`.
#[derive(Debug, Clone, PartialEq)]
pub struct ODESystemL {
    n: usize,
    background: Background,
}

/// Coefficients of the system at one radius.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCoefficients {
    pub r: f64,
    /// `-V`.
    pub a2: f64,
    /// `-(V' + (n-2) V / r)`.
    pub a1: f64,
    /// Zeroth-order coupling over packed components.
    pub zeroth: DMatrix<f64>,
}

impl PointCoefficients {
    pub fn coupling(&self, n: usize, p: (usize, usize), q: (usize, usize)) -> f64 {
        self.zeroth[(pair_index(n, p.0, p.1), pair_index(n, q.0, q.1))]
    }
}

/// Zeroth-order coupling on a warped product with `[V, V', V'']` at `r`.
fn profile_zeroth(n: usize, r: f64, [v, v1, v2]: [f64; 3]) -> DMatrix<f64> {
    let nf = n as f64;
    let k12 = -0.5 * v2;
    let k1j = -0.5 * v1 / r;
    let kij = -v / (r * r);
    let vr2 = v / (r * r);
    let p = v1 * v1 / (2.0 * v);
    let idx = |a: usize, b: usize| pair_index(n, a, b);
    let mut z = DMatrix::zeros(pair_count(n), pair_count(n));
    // (11): h11 (P + 2(n-2)V/r^2) - h22 (P + 2K12) - 2 Σ_k (V/r^2 + K1k) hkk
    z[(idx(0, 0), idx(0, 0))] = p + 2.0 * (nf - 2.0) * vr2;
    z[(idx(0, 0), idx(1, 1))] = -(p + 2.0 * k12);
    // (22): h22 P - h11 (P + 2K12) - 2 Σ_k K2k hkk
    z[(idx(1, 1), idx(1, 1))] = p;
    z[(idx(1, 1), idx(0, 0))] = -(p + 2.0 * k12);
    // (12)
    z[(idx(0, 1), idx(0, 1))] = 2.0 * p + (nf - 2.0) * vr2 + 2.0 * k12;
    for j in 2..n {
        z[(idx(0, 0), idx(j, j))] = -2.0 * (vr2 + k1j);
        z[(idx(1, 1), idx(j, j))] = -2.0 * k1j;
        // (jj): 2V/r^2 (hjj - h11) - 2 Σ_{k≠j} K_kj hkk
        z[(idx(j, j), idx(j, j))] = 2.0 * vr2;
        z[(idx(j, j), idx(0, 0))] = -2.0 * vr2 - 2.0 * k1j;
        z[(idx(j, j), idx(1, 1))] = -2.0 * k1j;
        for k in 2..n {
            if k != j {
                z[(idx(j, j), idx(k, k))] = -2.0 * kij;
            }
        }
        // (1j), (2j)
        z[(idx(0, j), idx(0, j))] = 0.5 * p + (nf + 1.0) * vr2 + 2.0 * k1j;
        z[(idx(1, j), idx(1, j))] = 0.5 * p + vr2 + 2.0 * k1j;
    }
    z
}

/// Zeroth-order coupling of the cusp model: `A + 2(n-1)` on `h_11`, `A + n` on
/// `h_1j`, `A + 2 tr h - 2 h_11` on the remaining diagonal, `A` on the rest,
/// where `j, k` range over all directions but the radial one.
fn cusp_zeroth(n: usize) -> DMatrix<f64> {
    let nf = n as f64;
    let idx = |a: usize, b: usize| pair_index(n, a, b);
    let mut z = DMatrix::zeros(pair_count(n), pair_count(n));
    z[(idx(0, 0), idx(0, 0))] = 2.0 * (nf - 1.0);
    for j in 1..n {
        z[(idx(0, j), idx(0, j))] = nf;
        for k in 1..n {
            z[(idx(j, j), idx(k, k))] = 2.0;
        }
    }
    z
}

pub fn assemble_l_blackhole(metric: &FillingMetric) -> Result<ODESystemL> {
    Ok(ODESystemL {
        n: metric.dimension(),
        background: Background::Profile(metric.profile().clone()),
    })
}

pub fn assemble_l_cusp(n: usize) -> Result<ODESystemL> {
    if n < 3 {
        return Err(Error::InvalidDimension(n));
    }
    Ok(ODESystemL {
        n,
        background: Background::Cusp,
    })
}

impl ODESystemL {
    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn background(&self) -> &Background {
        &self.background
    }

    pub fn coefficients(&self, r: f64) -> Result<PointCoefficients> {
        let n = self.n;
        let nf = n as f64;
        match &self.background {
            Background::Cusp => Ok(PointCoefficients {
                r,
                a2: -r * r,
                a1: -nf * r,
                zeroth: cusp_zeroth(n),
            }),
            Background::Profile(p) => {
                let values = p.eval_all(r)?;
                let [v, v1, _] = values;
                if !(v > 0.0) {
                    return Err(Error::SingularAtCore {
                        r_plus: p.domain().0,
                    });
                }
                Ok(PointCoefficients {
                    r,
                    a2: -v,
                    a1: -(v1 + (nf - 2.0) * v / r),
                    zeroth: profile_zeroth(n, r, values),
                })
            }
        }
    }

    /// Reject grids that reach the core torus, where `1/V` is singular.
    pub fn check_grid(&self, grid: &[f64]) -> Result<()> {
        if let Background::Profile(p) = &self.background {
            let (lo, _) = p.domain();
            let core = p.eval(lo, 0)? <= 1e-12 * lo * lo;
            let first = grid.first().copied().unwrap_or(lo);
            if core && first < lo * (1.0 + CORE_MARGIN) {
                return Err(Error::SingularAtCore { r_plus: lo });
            }
            for &r in grid {
                if !(p.eval(r, 0)? > 0.0) {
                    return Err(Error::SingularAtCore { r_plus: lo });
                }
            }
        }
        Ok(())
    }
}

/// Applies the system with five-point stencils (centered in the interior,
/// one-sided at the ends).
pub fn apply_l(sys: &ODESystemL, h: &InvariantDeformation) -> Result<InvariantDeformation> {
    if h.dimension() != sys.n {
        return Err(Error::InvalidInput(format!(
            "deformation has dimension {}, operator {}",
            h.dimension(),
            sys.n
        )));
    }
    let grid = h.grid();
    if grid.len() < MIN_APPLY_POINTS {
        return Err(Error::GridTooCoarse(format!(
            "need at least {MIN_APPLY_POINTS} points, got {}",
            grid.len()
        )));
    }
    sys.check_grid(grid)?;
    let stencils = Stencils::new(grid)?;
    let d1: Vec<Vec<f64>> = h
        .components()
        .iter()
        .map(|c| stencils.derivative(c))
        .collect();
    let d2: Vec<Vec<f64>> = h
        .components()
        .iter()
        .map(|c| stencils.second_derivative(c))
        .collect();
    let np = pair_count(sys.n);
    let mut out = vec![vec![0.0; grid.len()]; np];
    for (i, &r) in grid.iter().enumerate() {
        let c = sys.coefficients(r)?;
        for p in 0..np {
            let mut v = c.a2 * d2[p][i] + c.a1 * d1[p][i];
            for q in 0..np {
                let z = c.zeroth[(p, q)];
                if z != 0.0 {
                    v += z * h.components()[q][i];
                }
            }
            out[p][i] = v;
        }
    }
    InvariantDeformation::new(sys.n, grid.to_vec(), out)
}

/// Indicial exponents of one block of the cusp model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndicialRoots {
    pub block: BlockLabel,
    pub n: usize,
    /// Exponents `s` with `r^s` in the kernel of the block, sorted descending.
    pub roots: Vec<f64>,
}

/// Zeroth-order constant `c` of a scalar cusp block `A + c`.
fn cusp_block_constant(block: BlockLabel, n: usize) -> Option<f64> {
    let nf = n as f64;
    match block {
        BlockLabel::B11 => Some(2.0 * (nf - 1.0)),
        BlockLabel::B12 | BlockLabel::B1j => Some(nf),
        BlockLabel::B2j | BlockLabel::Bjk => Some(0.0),
        BlockLabel::B22 | BlockLabel::Bjj => None,
    }
}

/// Indicial exponents of the cusp model. With `A r^s = -(s^2 + (n-1)s) r^s`,
/// the scalar block `A + c` has `s^2 + (n-1)s - c = 0`; the coupled diagonal
/// sector `A + 2 J` (all-ones `J` over the non-radial directions) is solved as a
/// first-order system in `log r`.
pub fn indicial_roots(block: BlockLabel, n: usize) -> Result<IndicialRoots> {
    if n < 3 {
        return Err(Error::InvalidDimension(n));
    }
    let nf = n as f64;
    let mut roots = match cusp_block_constant(block, n) {
        Some(c) => {
            let b = nf - 1.0;
            let disc = (b * b + 4.0 * c).sqrt();
            vec![0.5 * (-b + disc), 0.5 * (-b - disc)]
        }
        None => {
            let d = n - 1;
            let mut m = DMatrix::zeros(2 * d, 2 * d);
            for i in 0..d {
                m[(i, d + i)] = 1.0;
                m[(d + i, d + i)] = -(nf - 1.0);
                for k in 0..d {
                    m[(d + i, k)] = 2.0;
                }
            }
            let eig = m.complex_eigenvalues();
            if eig.iter().any(|z| z.im.abs() > 1e-9 || !z.re.is_finite()) {
                return Err(Error::EigenSolveFailure("complex indicial exponent".into()));
            }
            eig.iter().map(|z| z.re).collect()
        }
    };
    roots.sort_by(|a, b| b.total_cmp(a));
    Ok(IndicialRoots { block, n, roots })
}

/// Pointwise `sup_p |(L_a h)_p - (L_b h)_p|`.
pub fn operator_difference(
    a: &ODESystemL,
    b: &ODESystemL,
    h: &InvariantDeformation,
) -> Result<Vec<f64>> {
    Ok(apply_l(a, h)?.sub(&apply_l(b, h)?)?.pointwise_sup())
}

/// Normalizing constant making the log-radius bump have unit C² norm.
fn bump_c2_norm() -> f64 {
    (0..=4000)
        .map(|i| -1.0 + 2.0 * i as f64 / 4000.0)
        .map(|x| {
            let [b, b1, b2] = compact_bump(x);
            b.abs().max(b1.abs()).max(b2.abs())
        })
        .fold(0.0, f64::max)
}

/// All components equal to a unit-C² bump in `log(r/center)` supported in
/// `[center/e, center·e]`, sampled at `points` log-spaced radii.
pub fn bump_deformation(n: usize, center: f64, points: usize) -> Result<InvariantDeformation> {
    let scale = bump_c2_norm();
    let grid: Vec<f64> = (0..points)
        .map(|i| center * (-1.0 + 2.0 * i as f64 / (points - 1) as f64).exp())
        .collect();
    InvariantDeformation::from_fn(n, grid, |_, _, r| {
        compact_bump((r / center).ln())[0] / scale
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OperatorComparison {
    pub n: usize,
    pub mass: f64,
    pub centers: Vec<f64>,
    pub sup_difference: Vec<f64>,
    pub fit: PowerLawFit,
    pub expected_slope: f64,
}

/// `sup |L_C h - L_BH h|` for bumps translated to each center, with its fitted
/// decay rate in the center radius.
pub fn compare_operators(
    n: usize,
    mass: f64,
    centers: &[f64],
    points: usize,
) -> Result<OperatorComparison> {
    let r_hi = centers.iter().copied().fold(0.0, f64::max) * std::f64::consts::E * 1.01;
    let metric = FillingMetric::smooth_black_hole(n, mass, r_hi)?;
    let bh = assemble_l_blackhole(&metric)?;
    let cusp = assemble_l_cusp(n)?;
    let sup_difference = centers
        .iter()
        .map(|&c| {
            let h = bump_deformation(n, c, points)?;
            Ok(operator_difference(&cusp, &bh, &h)?
                .into_iter()
                .fold(0.0, f64::max))
        })
        .collect::<Result<Vec<f64>>>()?;
    let fit = fit_power_law(centers, &sup_difference)?;
    Ok(OperatorComparison {
        n,
        mass,
        centers: centers.to_vec(),
        sup_difference,
        fit,
        expected_slope: 1.0 - n as f64,
    })
}

/// Componentwise mean over torus samples: `samples[i][k]` holds the packed
/// components at radius `grid[i]` and torus point `k`.
pub fn torus_average(
    n: usize,
    grid: Vec<f64>,
    samples: &[Vec<Vec<f64>>],
) -> Result<InvariantDeformation> {
    if samples.len() != grid.len() {
        return Err(Error::InvalidInput(
            "one sample set per radius is required".into(),
        ));
    }
    let np = pair_count(n);
    let mut components = vec![vec![0.0; grid.len()]; np];
    for (i, at_r) in samples.iter().enumerate() {
        if at_r.len() < MIN_TORUS_SAMPLES {
            return Err(Error::TooFewSamples {
                need: MIN_TORUS_SAMPLES,
                got: at_r.len(),
            });
        }
        for s in at_r {
            if s.len() != np {
                return Err(Error::InvalidInput(format!(
                    "sample has {} components, expected {np}",
                    s.len()
                )));
            }
        }
        for (p, comp) in components.iter_mut().enumerate() {
            comp[i] = at_r.iter().map(|s| s[p]).sum::<f64>() / at_r.len() as f64;
        }
    }
    InvariantDeformation::new(n, grid, components)
}

/// Coefficient table rows: `r, a2, a1` followed by the distinct couplings.
pub fn coefficient_table(
    sys: &ODESystemL,
    grid: &[f64],
) -> Result<(Vec<&'static str>, Vec<Vec<f64>>)> {
    sys.check_grid(grid)?;
    let n = sys.n;
    let header = vec![
        "r", "a2", "a1", "z11_11", "z11_22", "z11_jj", "z22_22", "z22_11", "z22_jj", "z12_12",
        "z1j_1j", "z2j_2j", "zjj_jj", "zjj_11", "zjj_22", "zjj_kk", "zjk_jk",
    ];
    let (j, k) = (2, if n > 3 { 3 } else { 2 });
    let rows = grid
        .iter()
        .map(|&r| {
            let c = sys.coefficients(r)?;
            let z = |p: (usize, usize), q: (usize, usize)| c.coupling(n, p, q);
            Ok(vec![
                r,
                c.a2,
                c.a1,
                z((0, 0), (0, 0)),
                z((0, 0), (1, 1)),
                z((0, 0), (j, j)),
                z((1, 1), (1, 1)),
                z((1, 1), (0, 0)),
                z((1, 1), (j, j)),
                z((0, 1), (0, 1)),
                z((0, j), (0, j)),
                z((1, j), (1, j)),
                z((j, j), (j, j)),
                z((j, j), (0, 0)),
                z((j, j), (1, 1)),
                if n > 3 { z((j, j), (k, k)) } else { f64::NAN },
                if n > 3 { z((j, k), (j, k)) } else { f64::NAN },
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((header, rows))
}
