//! Finite-difference stencils on nonuniform grids.

use crate::error::{Error, Result};

/// Weights `w[m][j]` such that `Σ_j w[m][j] f(x_j)` approximates `f^{(m)}(x0)`
/// for `m = 0..=max_order` (Fornberg's recursion).
pub fn fornberg_weights(x0: f64, xs: &[f64], max_order: usize) -> Vec<Vec<f64>> {
    let n = xs.len();
    let mut c = vec![vec![0.0; n]; max_order + 1];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    for i in 1..n {
        let mn = i.min(max_order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

/// Five-point first- and second-derivative stencils at every node of a grid:
/// centered in the interior, one-sided at the two nodes nearest each end.
#[derive(Debug, Clone, PartialEq)]
pub struct Stencils {
    start: Vec<usize>,
    first: Vec<[f64; 5]>,
    second: Vec<[f64; 5]>,
}

pub const STENCIL_WIDTH: usize = 5;

impl Stencils {
    pub fn new(grid: &[f64]) -> Result<Self> {
        let n = grid.len();
        if n < STENCIL_WIDTH {
            return Err(Error::GridTooCoarse(format!(
                "need at least {STENCIL_WIDTH} points, got {n}"
            )));
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput(
                "grid must be strictly increasing".into(),
            ));
        }
        let mut start = Vec::with_capacity(n);
        let mut first = Vec::with_capacity(n);
        let mut second = Vec::with_capacity(n);
        for i in 0..n {
            let s = i.saturating_sub(2).min(n - STENCIL_WIDTH);
            let w = fornberg_weights(grid[i], &grid[s..s + STENCIL_WIDTH], 2);
            start.push(s);
            first.push([w[1][0], w[1][1], w[1][2], w[1][3], w[1][4]]);
            second.push([w[2][0], w[2][1], w[2][2], w[2][3], w[2][4]]);
        }
        Ok(Self {
            start,
            first,
            second,
        })
    }

    pub fn len(&self) -> usize {
        self.start.len()
    }

    pub fn is_empty(&self) -> bool {
        self.start.is_empty()
    }

    fn apply(&self, weights: &[[f64; 5]], f: &[f64]) -> Vec<f64> {
        self.start
            .iter()
            .zip(weights)
            .map(|(&s, w)| {
                w.iter()
                    .zip(&f[s..s + STENCIL_WIDTH])
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    pub fn derivative(&self, f: &[f64]) -> Vec<f64> {
        self.apply(&self.first, f)
    }

    pub fn second_derivative(&self, f: &[f64]) -> Vec<f64> {
        self.apply(&self.second, f)
    }
}

/// Start of the four-node window used for cubic interpolation on `[x_i, x_{i+1}]`.
fn cubic_window(len: usize, i: usize) -> usize {
    i.saturating_sub(1).min(len - 4)
}

fn lagrange_cubic(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    (0..4)
        .map(|j| {
            let basis: f64 = (0..4)
                .filter(|&k| k != j)
                .map(|k| (x - xs[k]) / (xs[j] - xs[k]))
                .product();
            basis * ys[j]
        })
        .sum()
}

/// Fourth-order cumulative integral `∫_{x_0}^{x_i} f`: each interval integrates
/// the local cubic interpolant exactly with two-point Gauss-Legendre.
pub fn cumulative_integral(grid: &[f64], values: &[f64]) -> Result<Vec<f64>> {
    check_samples(grid, values)?;
    let g = 0.5 / 3f64.sqrt();
    let mut out = Vec::with_capacity(grid.len());
    out.push(0.0);
    for i in 0..grid.len() - 1 {
        let s = cubic_window(grid.len(), i);
        let (xs, ys) = (&grid[s..s + 4], &values[s..s + 4]);
        let (a, b) = (grid[i], grid[i + 1]);
        let mid = 0.5 * (a + b);
        let h = b - a;
        let piece =
            0.5 * h * (lagrange_cubic(xs, ys, mid - g * h) + lagrange_cubic(xs, ys, mid + g * h));
        out.push(out[i] + piece);
    }
    Ok(out)
}

/// Local cubic interpolation of grid data at `x` inside the grid.
pub fn interpolate(grid: &[f64], values: &[f64], x: f64) -> Result<f64> {
    check_samples(grid, values)?;
    let last = grid.len() - 1;
    if !(x >= grid[0] && x <= grid[last]) {
        return Err(Error::OutOfDomain {
            r: x,
            lo: grid[0],
            hi: grid[last],
        });
    }
    let i = grid
        .partition_point(|&g| g <= x)
        .saturating_sub(1)
        .min(last - 1);
    let s = cubic_window(grid.len(), i);
    Ok(lagrange_cubic(&grid[s..s + 4], &values[s..s + 4], x))
}

fn check_samples(grid: &[f64], values: &[f64]) -> Result<()> {
    if grid.len() != values.len() {
        return Err(Error::InvalidInput(
            "grid and values differ in length".into(),
        ));
    }
    if grid.len() < 4 {
        return Err(Error::GridTooCoarse(format!(
            "need at least 4 points, got {}",
            grid.len()
        )));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidInput(
            "grid must be strictly increasing".into(),
        ));
    }
    Ok(())
}
