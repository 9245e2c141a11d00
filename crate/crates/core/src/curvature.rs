//! Curvature of the warped products `V^{-1} dr^2 + V dθ^2 + r^2 g_T` in the
//! diagonalizing orthonormal frame `e_1 = √V ∂_r`, `e_2 = ∂_θ/√V`, `e_j`
//! tangent to the torus, together with a finite-difference oracle and the
//! action of the curvature operator on symmetric 2-tensors.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::profiles::FillingMetric;

/// The three distinct sectional curvatures of the diagonal curvature operator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SectionalCurvatures {
    /// Plane `(e_1, e_2)`: `-V''/2`.
    pub k12: f64,
    /// Planes `(e_1, e_j)` and `(e_2, e_j)`, `j > 2`: `-V'/(2r)`.
    pub k1perp: f64,
    /// Planes `(e_i, e_j)`, `i, j > 2`: `-V/r^2`.
    pub kperp: f64,
}

impl SectionalCurvatures {
    pub fn from_values(r: f64, [v, v1, v2]: [f64; 3]) -> Self {
        Self {
            k12: -0.5 * v2,
            k1perp: -0.5 * v1 / r,
            kperp: -v / (r * r),
        }
    }

    pub fn hyperbolic() -> Self {
        Self {
            k12: -1.0,
            k1perp: -1.0,
            kperp: -1.0,
        }
    }
}

pub fn sectional_curvatures(metric: &FillingMetric, r: f64) -> Result<SectionalCurvatures> {
    Ok(SectionalCurvatures::from_values(
        r,
        metric.profile().eval_all(r)?,
    ))
}

/// Pointwise curvature data of a diagonal curvature operator: the symmetric
/// matrix of sectional curvatures `K_{jl}` (zero diagonal).
#[derive(Debug, Clone, PartialEq)]
pub struct PointCurvature {
    k: DMatrix<f64>,
}

impl PointCurvature {
    pub fn from_matrix(k: DMatrix<f64>) -> Result<Self> {
        let n = k.nrows();
        if k.ncols() != n {
            return Err(Error::InvalidInput(
                "curvature matrix must be square".into(),
            ));
        }
        if n < 3 {
            return Err(Error::InvalidDimension(n));
        }
        let mut k = k;
        for j in 0..n {
            k[(j, j)] = 0.0;
        }
        if (&k - k.transpose()).amax() > 0.0 {
            return Err(Error::InvalidInput(
                "curvature matrix must be symmetric".into(),
            ));
        }
        Ok(Self { k })
    }

    pub fn from_sectional(n: usize, s: SectionalCurvatures) -> Self {
        let k = DMatrix::from_fn(n, n, |i, j| match (i.min(j), i.max(j)) {
            (a, b) if a == b => 0.0,
            (0, 1) => s.k12,
            (0 | 1, _) => s.k1perp,
            _ => s.kperp,
        });
        Self { k }
    }

    pub fn constant(n: usize, kappa: f64) -> Self {
        Self::from_sectional(
            n,
            SectionalCurvatures {
                k12: kappa,
                k1perp: kappa,
                kperp: kappa,
            },
        )
    }

    pub fn dimension(&self) -> usize {
        self.k.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.k
    }

    /// Ricci eigenvalues `ric_j = Σ_{l≠j} K_{jl}`.
    pub fn ricci(&self) -> Vec<f64> {
        self.k.row_iter().map(|row| row.sum()).collect()
    }

    pub fn k_max(&self) -> f64 {
        let n = self.dimension();
        (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| self.k[(i, j)])
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Curvature summary at one radius.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvatureReport {
    pub r: f64,
    #[serde(rename = "K12")]
    pub k12: f64,
    #[serde(rename = "K1perp")]
    pub k1perp: f64,
    #[serde(rename = "Kperp")]
    pub kperp: f64,
    pub ric_diag: Vec<f64>,
    pub scalar: f64,
    pub deficit_diag: Vec<f64>,
}

impl CurvatureReport {
    pub const CSV_HEADER: &'static str = "r,K12,K1perp,Kperp,ric11,ricperp,scalar,deficit_sup";

    pub fn from_values(n: usize, r: f64, values: [f64; 3]) -> Self {
        let s = SectionalCurvatures::from_values(r, values);
        let [v, v1, v2] = values;
        let nf = n as f64;
        let ric11 = -0.5 * v2 - (nf - 2.0) * v1 / (2.0 * r);
        let ricperp = -v1 / r - (nf - 3.0) * v / (r * r);
        let ric_diag: Vec<f64> = (0..n)
            .map(|j| if j < 2 { ric11 } else { ricperp })
            .collect();
        let scalar = 2.0 * ric11 + (nf - 2.0) * ricperp;
        let deficit_diag = ric_diag.iter().map(|x| x + (nf - 1.0)).collect();
        Self {
            r,
            k12: s.k12,
            k1perp: s.k1perp,
            kperp: s.kperp,
            ric_diag,
            scalar,
            deficit_diag,
        }
    }

    pub fn deficit_sup(&self) -> f64 {
        self.deficit_diag.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn csv_row(&self) -> String {
        let ricperp = self.ric_diag.get(2).copied().unwrap_or(f64::NAN);
        format!(
            "{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
            self.r,
            self.k12,
            self.k1perp,
            self.kperp,
            self.ric_diag[0],
            ricperp,
            self.scalar,
            self.deficit_sup()
        )
    }
}

pub fn ricci_and_deficit(metric: &FillingMetric, r: f64) -> Result<CurvatureReport> {
    let values = metric.profile().eval_all(r)?;
    Ok(CurvatureReport::from_values(metric.dimension(), r, values))
}

/// `[τ_11, τ_jj]`, the two distinct eigenvalues of `ric + (n-1)g`, using the
/// cancellation-free closed form when the profile has one.
pub fn deficit_pair(metric: &FillingMetric, r: f64) -> Result<[f64; 2]> {
    let profile = metric.profile();
    if let Some(d) = profile.closed_form_deficit(r)? {
        return Ok(d);
    }
    let rep = CurvatureReport::from_values(metric.dimension(), r, profile.eval_all(r)?);
    Ok([rep.deficit_diag[0], rep.deficit_diag[2]])
}

/// Full curvature tensor `R(e_a, e_b, e_c, e_d) = <R(e_a, e_b) e_c, e_d>` in an
/// orthonormal frame, sign fixed so that `R(e_a, e_b, e_b, e_a)` is sectional.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameCurvature {
    n: usize,
    riemann: Vec<f64>,
}

impl FrameCurvature {
    fn idx(&self, a: usize, b: usize, c: usize, d: usize) -> usize {
        ((a * self.n + b) * self.n + c) * self.n + d
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn component(&self, a: usize, b: usize, c: usize, d: usize) -> f64 {
        self.riemann[self.idx(a, b, c, d)]
    }

    pub fn sectional(&self, a: usize, b: usize) -> f64 {
        self.component(a, b, b, a)
    }

    pub fn ricci(&self) -> DMatrix<f64> {
        let n = self.n;
        DMatrix::from_fn(n, n, |b, c| {
            (0..n).map(|a| self.component(a, b, c, a)).sum()
        })
    }

    /// `ric + (n-1) g` in the frame.
    pub fn deficit(&self) -> DMatrix<f64> {
        self.ricci() + DMatrix::identity(self.n, self.n) * (self.n as f64 - 1.0)
    }

    /// Largest curvature component not accounted for by a diagonal curvature
    /// operator in this frame.
    pub fn off_diagonal_sup(&self) -> f64 {
        let n = self.n;
        let mut sup = 0.0f64;
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        let diag = (a == d && b == c) || (a == c && b == d);
                        if !diag {
                            sup = sup.max(self.component(a, b, c, d).abs());
                        }
                    }
                }
            }
        }
        sup
    }
}

/// Default finite-difference step at radius `r`.
pub fn default_fd_step(r: f64) -> f64 {
    (1e-4 * r).max(1e-6)
}

/// Relative step, in units of the distance to a closing core, near which `1/V`
/// varies on the scale of that distance.
pub const CORE_STEP_FRACTION: f64 = 1e-2;

/// Curvature from coordinate derivatives of the metric coefficients by
/// sixth-order central differences, with the default step shrunk near a
/// closing core.
pub fn fd_curvature_oracle(metric: &FillingMetric, r: f64) -> Result<FrameCurvature> {
    let (lo, _) = metric.profile().domain();
    let mut step = default_fd_step(r);
    if metric.profile().eval(lo, 0)?.abs() <= 1e-12 * lo * lo {
        step = step.min(CORE_STEP_FRACTION * (r - lo));
    }
    fd_curvature_oracle_with_step(metric, r, step)
}

pub fn fd_curvature_oracle_with_step(
    metric: &FillingMetric,
    r: f64,
    step: f64,
) -> Result<FrameCurvature> {
    let (lo, hi) = metric.profile().domain();
    let margin = (r - lo).min(hi - r);
    if !(3.0 * step <= margin) {
        return Err(Error::StepTooLarge { step, margin });
    }
    let g: Vec<DMatrix<f64>> = (-3..=3)
        .map(|k| metric.coordinate_metric(r + k as f64 * step))
        .collect::<Result<_>>()?;
    let d1 = [-1.0, 9.0, -45.0, 0.0, 45.0, -9.0, 1.0];
    let d2 = [2.0, -27.0, 270.0, -490.0, 270.0, -27.0, 2.0];
    let combine = |w: &[f64; 7], scale: f64| {
        g.iter()
            .zip(w)
            .fold(DMatrix::zeros(g[0].nrows(), g[0].ncols()), |acc, (m, c)| {
                acc + m * *c
            })
            / scale
    };
    let dg = combine(&d1, 60.0 * step);
    let ddg = combine(&d2, 180.0 * step * step);
    coordinate_curvature(&g[3], &dg, &ddg)
}

/// Curvature of a metric depending on the first coordinate only, given
/// `g`, `∂g` and `∂²g`, expressed in the Cholesky orthonormal frame.
pub fn coordinate_curvature(
    g: &DMatrix<f64>,
    dg: &DMatrix<f64>,
    ddg: &DMatrix<f64>,
) -> Result<FrameCurvature> {
    let n = g.nrows();
    let chol = g
        .clone()
        .cholesky()
        .ok_or_else(|| Error::InvalidInput("metric is not positive definite".into()))?;
    let ginv = chol.inverse();
    let dginv = -&ginv * dg * &ginv;

    // Γ^e_{bc} = ½ g^{ed}(∂_b g_dc + ∂_c g_db - ∂_d g_bc); only ∂_0 is nonzero.
    let christoffel =
        |gi: &DMatrix<f64>, d1: &DMatrix<f64>, d2: Option<(&DMatrix<f64>, &DMatrix<f64>)>| {
            let mut out = vec![0.0; n * n * n];
            for e in 0..n {
                for b in 0..n {
                    for c in 0..n {
                        let mut s = 0.0;
                        for d in 0..n {
                            let lower = |m: &DMatrix<f64>| {
                                let mut t = 0.0;
                                if b == 0 {
                                    t += m[(d, c)];
                                }
                                if c == 0 {
                                    t += m[(d, b)];
                                }
                                if d == 0 {
                                    t -= m[(b, c)];
                                }
                                t
                            };
                            s += gi[(e, d)] * lower(d1);
                            if let Some((gi_dot, m2)) = d2 {
                                s += gi_dot[(e, d)] * lower(m2);
                            }
                        }
                        out[(e * n + b) * n + c] = 0.5 * s;
                    }
                }
            }
            out
        };
    let gamma = christoffel(&ginv, dg, None);
    // ∂_0 Γ = ½ g^{-1} (∂∂g terms) + ½ ∂(g^{-1}) (∂g terms)
    let dgamma = christoffel(&ginv, ddg, Some((&dginv, dg)));
    let gm = |e: usize, b: usize, c: usize| gamma[(e * n + b) * n + c];
    let dgm = |e: usize, b: usize, c: usize| dgamma[(e * n + b) * n + c];

    // R^e_{c a b} = ∂_a Γ^e_{bc} - ∂_b Γ^e_{ac} + Γ^e_{af} Γ^f_{bc} - Γ^e_{bf} Γ^f_{ac}
    let mut up = vec![0.0; n * n * n * n];
    for e in 0..n {
        for c in 0..n {
            for a in 0..n {
                for b in 0..n {
                    let mut s = 0.0;
                    if a == 0 {
                        s += dgm(e, b, c);
                    }
                    if b == 0 {
                        s -= dgm(e, a, c);
                    }
                    for f in 0..n {
                        s += gm(e, a, f) * gm(f, b, c) - gm(e, b, f) * gm(f, a, c);
                    }
                    up[((e * n + c) * n + a) * n + b] = s;
                }
            }
        }
    }
    // <R(∂a,∂b)∂c, ∂d> = g_de R^e_{cab}
    let mut coord = vec![0.0; n * n * n * n];
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for d in 0..n {
                    coord[((a * n + b) * n + c) * n + d] = (0..n)
                        .map(|e| g[(d, e)] * up[((e * n + c) * n + a) * n + b])
                        .sum();
                }
            }
        }
    }
    // Orthonormal frame E = L^{-T}, so that E^T g E = I.
    let frame = chol
        .l()
        .try_inverse()
        .ok_or_else(|| Error::InvalidInput("singular metric".into()))?
        .transpose();
    let mut t = coord;
    for slot in 0..4 {
        let mut next = vec![0.0; t.len()];
        let stride = n.pow(3 - slot as u32);
        for (flat, out) in next.iter_mut().enumerate() {
            let new_idx = (flat / stride) % n;
            let base = flat - new_idx * stride;
            *out = (0..n)
                .map(|p| t[base + p * stride] * frame[(p, new_idx)])
                .sum();
        }
        t = next;
    }
    Ok(FrameCurvature { n, riemann: t })
}

/// `(Rh)(X, Y) = Σ_i h(R(X, e_i) Y, e_i)` for a diagonal curvature operator,
/// normalized so that `Rg = ric`: `(Rh)_{jj} = Σ_l K_{jl} h_{ll}` and
/// `(Rh)_{jk} = -K_{jk} h_{jk}`.
pub fn curvature_action(k: &PointCurvature, h: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = k.dimension();
    check_symmetric(h, n)?;
    let km = k.matrix();
    Ok(DMatrix::from_fn(n, n, |j, l| {
        if j == l {
            (0..n).map(|i| km[(j, i)] * h[(i, i)]).sum()
        } else {
            -km[(j, l)] * h[(j, l)]
        }
    }))
}

fn check_symmetric(h: &DMatrix<f64>, n: usize) -> Result<()> {
    if h.nrows() != n || h.ncols() != n {
        return Err(Error::InvalidInput(format!("tensor must be {n}x{n}")));
    }
    if h.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidInput("tensor has non-finite entries".into()));
    }
    let scale = h.amax().max(f64::MIN_POSITIVE);
    if (h - h.transpose()).amax() > 1e-14 * scale {
        return Err(Error::InvalidInput("tensor must be symmetric".into()));
    }
    Ok(())
}

/// Frobenius pairing `(a, b) = Σ a_{jk} b_{jk}`.
pub fn pairing(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.component_mul(b).sum()
}

/// Splitting of `(Rh, h)` with respect to `h = h_0 + (tr h / n) g`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadraticParts {
    /// `(R h_0, h_0)`.
    pub rh0_h0: f64,
    /// Cross term `(2 tr h / n) Σ_k (ric_k + n - 1) (h_0)_{kk}`.
    pub mu: f64,
    /// `(tr h / n)^2 · scalar`.
    pub trace_term: f64,
}

impl QuadraticParts {
    pub fn total(&self) -> f64 {
        self.rh0_h0 + self.mu + self.trace_term
    }
}

pub fn decompose_quadratic(k: &PointCurvature, h: &DMatrix<f64>) -> Result<QuadraticParts> {
    let n = k.dimension();
    check_symmetric(h, n)?;
    let nf = n as f64;
    let t = h.trace();
    let h0 = h - DMatrix::identity(n, n) * (t / nf);
    let rh0 = curvature_action(k, &h0)?;
    let ric = k.ricci();
    let cross: f64 = (0..n).map(|j| (ric[j] + nf - 1.0) * h0[(j, j)]).sum();
    let scalar: f64 = ric.iter().sum();
    Ok(QuadraticParts {
        rh0_h0: pairing(&rh0, &h0),
        mu: 2.0 * t / nf * cross,
        trace_term: (t / nf).powi(2) * scalar,
    })
}

/// Largest eigenvalue of the curvature action restricted to trace-free
/// symmetric tensors.
pub fn trace_free_top_eigenvalue(k: &PointCurvature) -> Result<f64> {
    let n = k.dimension();
    let km = k.matrix();
    // Orthonormal basis of the trace-free diagonal tensors (Helmert vectors).
    let q = DMatrix::from_fn(n, n - 1, |i, c| {
        let m = (c + 1) as f64;
        let norm = (m * (m + 1.0)).sqrt();
        if i <= c {
            1.0 / norm
        } else if i == c + 1 {
            -m / norm
        } else {
            0.0
        }
    });
    let block = q.transpose() * km * &q;
    let block = (&block + block.transpose()) * 0.5;
    let eig = SymmetricEigen::try_new(block, 1e-15, 10_000)
        .ok_or_else(|| Error::EigenSolveFailure("trace-free diagonal block".into()))?;
    let diag_top = eig
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let mut top = diag_top;
    for j in 0..n {
        for l in j + 1..n {
            top = top.max(-km[(j, l)]);
        }
    }
    if !top.is_finite() {
        return Err(Error::EigenSolveFailure("non-finite eigenvalue".into()));
    }
    Ok(top)
}

/// Right-hand side `(n-2) K_max - ric_min` of the trace-free eigenvalue bound.
pub fn trace_free_bound(k: &PointCurvature) -> f64 {
    let ric_min = k.ricci().into_iter().fold(f64::INFINITY, f64::min);
    (k.dimension() as f64 - 2.0) * k.k_max() - ric_min
}

/// Matrix of the curvature action on all symmetric tensors in the basis
/// `E_jj`, `(E_jk + E_kj)/√2`.
pub fn action_matrix(k: &PointCurvature) -> DMatrix<f64> {
    let n = k.dimension();
    let basis: Vec<(usize, usize)> = (0..n).flat_map(|j| (j..n).map(move |l| (j, l))).collect();
    let element = |(j, l): (usize, usize)| {
        let mut e = DMatrix::zeros(n, n);
        if j == l {
            e[(j, j)] = 1.0;
        } else {
            e[(j, l)] = std::f64::consts::FRAC_1_SQRT_2;
            e[(l, j)] = std::f64::consts::FRAC_1_SQRT_2;
        }
        e
    };
    let elems: Vec<DMatrix<f64>> = basis.iter().map(|&p| element(p)).collect();
    let images: Vec<DMatrix<f64>> = elems
        .iter()
        .map(|e| curvature_action(k, e).expect("basis tensors are symmetric"))
        .collect();
    DMatrix::from_fn(basis.len(), basis.len(), |a, b| {
        pairing(&elems[a], &images[b])
    })
}

/// Trace of a symmetric tensor as a vector of its diagonal.
pub fn diagonal(h: &DMatrix<f64>) -> DVector<f64> {
    h.diagonal()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::{make_glued_profile, Transition, WarpingProfile};

    fn bh(n: usize, m: f64, hi: f64) -> FillingMetric {
        FillingMetric::smooth_black_hole(n, m, hi).unwrap()
    }

    #[test]
    fn sectional_examples() {
        let cusp = FillingMetric::with_unit_torus(WarpingProfile::cusp(5, 0.5, 9.0).unwrap(), 1.0)
            .unwrap();
        assert_eq!(
            sectional_curvatures(&cusp, 2.3).unwrap(),
            SectionalCurvatures::hyperbolic()
        );
        let s = sectional_curvatures(&bh(4, 1.0, 10.0), 2.0).unwrap();
        assert!((s.k12 + 0.75).abs() < 1e-15);
        assert!((s.k1perp + 1.125).abs() < 1e-15);
        assert!((s.kperp + 0.75).abs() < 1e-15);
        assert!(sectional_curvatures(&bh(4, 1.0, 10.0), 11.0).is_err());
    }

    #[test]
    fn sectional_matches_printed_mass_form() {
        for n in 3..=8 {
            let m = 1.7;
            let r = 2.9;
            let s = sectional_curvatures(&bh(n, m, 10.0), r).unwrap();
            let a = m / r.powi(n as i32 - 1);
            let nf = n as f64;
            assert!((s.k12 - (-1.0 + (nf - 3.0) * (nf - 2.0) * a)).abs() < 1e-13);
            assert!((s.k1perp - (-1.0 - (nf - 3.0) * a)).abs() < 1e-13);
            assert!((s.kperp - (-1.0 + 2.0 * a)).abs() < 1e-13);
        }
    }

    #[test]
    fn ricci_examples() {
        let rep = ricci_and_deficit(&bh(5, 1.0, 10.0), 3.0).unwrap();
        assert!(rep.deficit_sup() < 1e-12);
        assert!((rep.scalar + 20.0).abs() < 1e-12);
        let cusp = FillingMetric::with_unit_torus(WarpingProfile::cusp(4, 0.5, 9.0).unwrap(), 1.0)
            .unwrap();
        assert_eq!(
            ricci_and_deficit(&cusp, 1.0).unwrap().ric_diag,
            vec![-3.0; 4]
        );
    }

    #[test]
    fn report_ricci_is_sum_of_sectional() {
        let m = bh(6, 2.0, 10.0);
        let rep = ricci_and_deficit(&m, 3.3).unwrap();
        let k = PointCurvature::from_sectional(6, sectional_curvatures(&m, 3.3).unwrap());
        for (a, b) in rep.ric_diag.iter().zip(k.ricci()) {
            assert!((a - b).abs() < 1e-14);
        }
        assert!((rep.scalar - rep.ric_diag.iter().sum::<f64>()).abs() < 1e-13);
        assert_eq!(rep.csv_row().split(',').count(), 8);
    }

    #[test]
    fn oracle_examples() {
        let fc = fd_curvature_oracle(&bh(4, 1.0, 10.0), 2.0).unwrap();
        assert!((fc.sectional(0, 1) + 0.75).abs() < 1e-7);
        let cusp = FillingMetric::with_unit_torus(WarpingProfile::cusp(6, 1.0, 9.0).unwrap(), 1.0)
            .unwrap();
        let fc = fd_curvature_oracle(&cusp, 5.0).unwrap();
        for a in 0..6 {
            for b in 0..6 {
                if a != b {
                    assert!((fc.sectional(a, b) + 1.0).abs() < 1e-7);
                }
            }
        }
        assert!(fc.off_diagonal_sup() < 1e-7);
        let glued =
            FillingMetric::with_unit_torus(make_glued_profile(20.0, 4, 4).unwrap(), 1.0).unwrap();
        let fc = fd_curvature_oracle(&glued, 18.5).unwrap();
        let rep = ricci_and_deficit(&glued, 18.5).unwrap();
        let d = fc.deficit();
        for j in 0..4 {
            assert!((d[(j, j)] - rep.deficit_diag[j]).abs() < 1e-6);
        }
        assert!(matches!(
            fd_curvature_oracle_with_step(&bh(4, 1.0, 10.0), 2.0, 0.5),
            Err(Error::StepTooLarge { .. })
        ));
    }

    #[test]
    fn oracle_handles_skew_torus() {
        let gram = DMatrix::from_row_slice(2, 2, &[2.0, 0.7, 0.7, 1.0]);
        let p = WarpingProfile::black_hole_from_horizon(4, 1.0, 10.0).unwrap();
        let m = FillingMetric::new(p, 1.0, gram).unwrap();
        let fc = fd_curvature_oracle(&m, 3.0).unwrap();
        let s = sectional_curvatures(&m, 3.0).unwrap();
        assert!((fc.sectional(0, 1) - s.k12).abs() < 1e-7);
        assert!((fc.sectional(0, 2) - s.k1perp).abs() < 1e-7);
        assert!((fc.sectional(1, 3) - s.k1perp).abs() < 1e-7);
        assert!((fc.sectional(2, 3) - s.kperp).abs() < 1e-7);
        assert!(fc.deficit().amax() < 1e-7);
    }

    #[test]
    fn unit_transition_deficit_scales_like_r_3_minus_n() {
        // Regression constants: sup |τ| · R^{n-3} over the unit-width transition.
        for &(n, radius) in &[(4usize, 100.0), (4, 400.0), (5, 100.0)] {
            let g = make_glued_profile(radius, n, 4).unwrap();
            let m = FillingMetric::with_unit_torus(g, 1.0).unwrap();
            let sup = (0..=400)
                .map(|i| radius - 2.0 + i as f64 / 400.0)
                .map(|r| ricci_and_deficit(&m, r).unwrap().deficit_sup())
                .fold(0.0, f64::max);
            let c = sup * radius.powi(n as i32 - 3);
            assert!(c > 1.0 && c < 20.0, "n={n} R={radius} C={c}");
        }
        let m =
            FillingMetric::with_unit_torus(make_glued_profile(100.0, 4, 4).unwrap(), 1.0).unwrap();
        let tau = ricci_and_deficit(&m, 98.5).unwrap().deficit_sup();
        assert!(tau <= 20.0 / 100.0);
    }

    #[test]
    fn proportional_transition_deficit_is_exactly_self_similar() {
        let n = 4;
        let sample = |radius: f64| {
            let g =
                crate::profiles::make_glued_profile_with(radius, n, 4, Transition::Proportional)
                    .unwrap();
            let m = FillingMetric::with_unit_torus(g, 1.0).unwrap();
            ricci_and_deficit(&m, 0.6 * radius).unwrap().deficit_sup()
        };
        let ratio = sample(100.0) / sample(200.0);
        assert!((ratio - 8.0).abs() < 1e-9);
    }

    #[test]
    fn closed_form_deficit_matches_generic() {
        for transition in [Transition::Unit, Transition::Proportional] {
            for n in 3..=7 {
                let g = crate::profiles::make_glued_profile_with(20.0, n, 4, transition).unwrap();
                let m = FillingMetric::with_unit_torus(g, 1.0).unwrap();
                let (a, b) = transition.interval(20.0);
                for i in 0..=50 {
                    let r = a + (b - a) * i as f64 / 50.0;
                    let rep = ricci_and_deficit(&m, r).unwrap();
                    let [t1, tj] = deficit_pair(&m, r).unwrap();
                    assert!((t1 - rep.deficit_diag[0]).abs() < 1e-12);
                    assert!((tj - rep.deficit_diag[n - 1]).abs() < 1e-12);
                }
            }
        }
        assert_eq!(deficit_pair(&bh(6, 2.0, 10.0), 3.0).unwrap(), [0.0, 0.0]);
    }

    #[test]
    fn action_examples() {
        let hyp = PointCurvature::constant(5, -1.0);
        let rg = curvature_action(&hyp, &DMatrix::identity(5, 5)).unwrap();
        assert!((rg - DMatrix::identity(5, 5) * -4.0).amax() < 1e-15);
        let s = sectional_curvatures(&bh(4, 1.0, 10.0), 2.0).unwrap();
        let k = PointCurvature::from_sectional(4, s);
        let mut h = DMatrix::zeros(4, 4);
        h[(0, 0)] = 1.0;
        let rh = curvature_action(&k, &h).unwrap();
        assert_eq!(rh[(0, 0)], 0.0);
        assert!((rh[(1, 1)] + 0.75).abs() < 1e-15);
        assert!((rh[(2, 2)] + 1.125).abs() < 1e-15 && (rh[(3, 3)] + 1.125).abs() < 1e-15);
        assert_eq!(
            curvature_action(&k, &DMatrix::zeros(4, 4)).unwrap(),
            DMatrix::zeros(4, 4)
        );
        let mut asym = DMatrix::zeros(4, 4);
        asym[(0, 1)] = 1.0;
        assert!(curvature_action(&k, &asym).is_err());
    }

    #[test]
    fn action_agrees_with_oracle_contraction() {
        let m = bh(5, 1.0, 10.0);
        let r = 2.2;
        let fc = fd_curvature_oracle(&m, r).unwrap();
        let k = PointCurvature::from_sectional(5, sectional_curvatures(&m, r).unwrap());
        let h = DMatrix::from_fn(5, 5, |i, j| {
            ((i + 1) * (j + 1)) as f64 + (i + j) as f64 * 0.3
        });
        let rh = curvature_action(&k, &h).unwrap();
        // With <R(X,Y)Y,X> sectional, the action with Rg = ric is -Σ R(X,e_i,Y,e_p) h(e_p,e_i).
        let oracle = DMatrix::from_fn(5, 5, |a, b| {
            let mut s = 0.0;
            for i in 0..5 {
                for p in 0..5 {
                    s -= fc.component(a, i, b, p) * h[(p, i)];
                }
            }
            s
        });
        assert!((rh - oracle).amax() < 1e-6);
    }

    #[test]
    fn decomposition_examples() {
        let k = PointCurvature::from_sectional(
            4,
            sectional_curvatures(&bh(4, 1.0, 20.0), 10.0).unwrap(),
        );
        let tf = DMatrix::from_row_slice(
            4,
            4,
            &[
                1.0, 0.2, 0.0, 0.1, 0.2, -2.0, 0.3, 0.0, 0.0, 0.3, 0.5, 0.4, 0.1, 0.0, 0.4, 0.5,
            ],
        );
        let p = decompose_quadratic(&k, &tf).unwrap();
        assert!(p.mu.abs() < 1e-15 && p.trace_term.abs() < 1e-15);
        let p = decompose_quadratic(&k, &DMatrix::identity(4, 4)).unwrap();
        assert!(p.rh0_h0.abs() < 1e-15);
        let scalar: f64 = k.ricci().iter().sum();
        assert!((p.total() - scalar).abs() < 1e-13);
        let h = DMatrix::from_row_slice(
            4,
            4,
            &[
                0.3, -1.2, 0.5, 0.8, -1.2, 2.2, 0.1, -0.4, 0.5, 0.1, -0.7, 1.1, 0.8, -0.4, 1.1, 0.9,
            ],
        );
        let p = decompose_quadratic(&k, &h).unwrap();
        let direct = pairing(&curvature_action(&k, &h).unwrap(), &h);
        assert!((p.total() - direct).abs() < 1e-12);
    }

    #[test]
    fn eigenvalue_examples() {
        let hyp = PointCurvature::constant(4, -1.0);
        let a = trace_free_top_eigenvalue(&hyp).unwrap();
        assert!((a - 1.0).abs() < 1e-12);
        assert!((trace_free_bound(&hyp) - 1.0).abs() < 1e-15);
        // n = 4 black holes saturate the bound: K12 = K_ij makes (1,1,-1,-1) an
        // eigenvector with eigenvalue K12 - 2 K1j = 2 K_max - ric_min.
        let k = PointCurvature::from_sectional(
            4,
            sectional_curvatures(&bh(4, 1.0, 10.0), 1.5).unwrap(),
        );
        let a = trace_free_top_eigenvalue(&k).unwrap();
        assert!((a - trace_free_bound(&k)).abs() < 1e-12);
        for n in 5..=8 {
            let k = PointCurvature::from_sectional(
                n,
                sectional_curvatures(&bh(n, 1.0, 10.0), 1.5).unwrap(),
            );
            assert!(trace_free_top_eigenvalue(&k).unwrap() < trace_free_bound(&k) - 1e-3);
        }
        let k3 = PointCurvature::from_sectional(
            3,
            sectional_curvatures(&bh(3, 1.0, 10.0), 2.5).unwrap(),
        );
        let a = trace_free_top_eigenvalue(&k3).unwrap();
        assert!((a - trace_free_bound(&k3)).abs() < 1e-12);
    }

    #[test]
    fn eigenvalue_matches_full_action_matrix() {
        let k = PointCurvature::from_sectional(
            5,
            sectional_curvatures(&bh(5, 2.0, 10.0), 1.9).unwrap(),
        );
        let full = action_matrix(&k);
        let dim = full.nrows();
        // Project out the identity direction before diagonalizing.
        let mut g = DVector::zeros(dim);
        let mut idx = 0;
        for j in 0..5 {
            for l in j..5 {
                if j == l {
                    g[idx] = 1.0 / 5f64.sqrt();
                }
                idx += 1;
            }
        }
        let p = DMatrix::identity(dim, dim) - &g * g.transpose();
        let restricted = &p * full * &p;
        let eig = SymmetricEigen::new(restricted);
        let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        vals.sort_by(f64::total_cmp);
        let top = trace_free_top_eigenvalue(&k).unwrap();
        assert!(
            (vals[dim - 1].max(0.0) - top.max(0.0)).abs() < 1e-12
                || (vals[dim - 1] - top).abs() < 1e-12
        );
    }
}
