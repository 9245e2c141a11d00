//! Flat cusp lattices, primitive geodesic classes and the quotient
//! `Γ_0 = Γ/<σ>` acting on `S^1 × R^{n-2}`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profiles::closing_parameters;

/// Lattice `Γ ⊂ R^k` given by the columns of a nonsingular basis matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct FlatLattice {
    basis: DMatrix<f64>,
}

impl FlatLattice {
    pub fn new(basis: DMatrix<f64>) -> Result<Self> {
        if basis.nrows() != basis.ncols() || basis.nrows() == 0 {
            return Err(Error::InvalidInput("lattice basis must be square".into()));
        }
        if basis.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput(
                "lattice basis has non-finite entries".into(),
            ));
        }
        let det = basis.determinant();
        if !(det.abs() > 1e-12) {
            return Err(Error::InvalidInput(format!(
                "lattice basis is singular (det {det})"
            )));
        }
        Ok(Self { basis })
    }

    pub fn identity(rank: usize) -> Self {
        Self {
            basis: DMatrix::identity(rank, rank),
        }
    }

    /// Basis from row-major entries of a square matrix whose columns are generators.
    pub fn from_row_major(entries: &[f64]) -> Result<Self> {
        let rank = (entries.len() as f64).sqrt().round() as usize;
        if rank * rank != entries.len() {
            return Err(Error::InvalidInput(format!(
                "lattice basis needs a square number of entries, got {}",
                entries.len()
            )));
        }
        Self::new(DMatrix::from_row_slice(rank, rank, entries))
    }

    pub fn rank(&self) -> usize {
        self.basis.nrows()
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn covolume(&self) -> f64 {
        self.basis.determinant().abs()
    }

    /// The lattice vector with integer coordinates `coeffs`.
    pub fn vector(&self, coeffs: &[i64]) -> DVector<f64> {
        let c = DVector::from_iterator(coeffs.len(), coeffs.iter().map(|&x| x as f64));
        &self.basis * c
    }
}

fn gcd(a: i128, b: i128) -> i128 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// `(g, p, q)` with `p a + q b = g = gcd(a, b) >= 0`.
fn extended_gcd(a: i128, b: i128) -> (i128, i128, i128) {
    let (mut old_r, mut r) = (a, b);
    let (mut old_s, mut s) = (1i128, 0i128);
    let (mut old_t, mut t) = (0i128, 1i128);
    while r != 0 {
        let q = old_r.div_euclid(r);
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
        (old_t, t) = (t, old_t - q * t);
    }
    if old_r < 0 {
        (-old_r, -old_s, -old_t)
    } else {
        (old_r, old_s, old_t)
    }
}

/// Primitive integer vector: a simple closed geodesic class of the torus.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<i64>", into = "Vec<i64>")]
pub struct GeodesicClass {
    coeffs: Vec<i64>,
}

impl GeodesicClass {
    pub fn new(coeffs: Vec<i64>) -> Result<Self> {
        let g = coeffs.iter().fold(0i128, |acc, &c| gcd(acc, c as i128));
        if g != 1 {
            return Err(Error::NotPrimitive(coeffs));
        }
        Ok(Self { coeffs })
    }

    pub fn coeffs(&self) -> &[i64] {
        &self.coeffs
    }

    pub fn rank(&self) -> usize {
        self.coeffs.len()
    }
}

impl TryFrom<Vec<i64>> for GeodesicClass {
    type Error = Error;

    fn try_from(v: Vec<i64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<GeodesicClass> for Vec<i64> {
    fn from(g: GeodesicClass) -> Self {
        g.coeffs
    }
}

fn check_rank(lat: &FlatLattice, g: &GeodesicClass) -> Result<()> {
    if lat.rank() != g.rank() {
        return Err(Error::InvalidInput(format!(
            "geodesic class has {} coefficients but the lattice has rank {}",
            g.rank(),
            lat.rank()
        )));
    }
    Ok(())
}

/// Length of the closed geodesic in class `g`.
pub fn geodesic_length(lat: &FlatLattice, g: &GeodesicClass) -> Result<f64> {
    check_rank(lat, g)?;
    Ok(lat.vector(g.coeffs()).norm())
}

/// Square integer matrix stored row-major.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IntMatrix {
    n: usize,
    data: Vec<i64>,
}

impl IntMatrix {
    pub fn identity(n: usize) -> Self {
        let mut data = vec![0; n * n];
        for i in 0..n {
            data[i * n + i] = 1;
        }
        Self { n, data }
    }

    pub fn from_row_major(n: usize, data: Vec<i64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::InvalidInput("integer matrix has wrong size".into()));
        }
        Ok(Self { n, data })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> i64 {
        self.data[i * self.n + j]
    }

    pub fn column(&self, j: usize) -> Vec<i64> {
        (0..self.n).map(|i| self.get(i, j)).collect()
    }

    pub fn to_f64(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j) as f64)
    }

    pub fn mul(&self, other: &IntMatrix) -> Result<IntMatrix> {
        let n = self.n;
        let mut data = vec![0i64; n * n];
        for i in 0..n {
            for j in 0..n {
                let s: i128 = (0..n)
                    .map(|k| self.get(i, k) as i128 * other.get(k, j) as i128)
                    .sum();
                data[i * n + j] = narrow(s)?;
            }
        }
        Ok(IntMatrix { n, data })
    }

    /// Exact determinant by fraction-free (Bareiss) elimination.
    pub fn determinant(&self) -> Result<i64> {
        let n = self.n;
        let mut a: Vec<i128> = self.data.iter().map(|&x| x as i128).collect();
        let mut sign = 1i128;
        let mut prev = 1i128;
        for k in 0..n {
            if a[k * n + k] == 0 {
                match (k + 1..n).find(|&i| a[i * n + k] != 0) {
                    Some(i) => {
                        for j in 0..n {
                            a.swap(k * n + j, i * n + j);
                        }
                        sign = -sign;
                    }
                    None => return Ok(0),
                }
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let v = a[i * n + j]
                        .checked_mul(a[k * n + k])
                        .and_then(|x| x.checked_sub(a[i * n + k].checked_mul(a[k * n + j])?))
                        .ok_or_else(overflow)?;
                    a[i * n + j] = v / prev;
                }
            }
            prev = a[k * n + k];
        }
        narrow(sign * a[n * n - 1])
    }
}

fn overflow() -> Error {
    Error::InvalidInput("integer overflow in lattice arithmetic".into())
}

fn narrow(x: i128) -> Result<i64> {
    i64::try_from(x).map_err(|_| overflow())
}

/// Unimodular integer matrix whose first column is `sigma`.
///
/// Built by extended-Euclid reductions of `sigma` to `e_1` against each later
/// coordinate in turn, so the completion is deterministic.
pub fn extend_to_basis(sigma: &GeodesicClass) -> Result<IntMatrix> {
    let n = sigma.rank();
    let mut x: Vec<i128> = sigma.coeffs().iter().map(|&c| c as i128).collect();
    let mut u: Vec<i128> = vec![0; n * n];
    for i in 0..n {
        u[i * n + i] = 1;
    }
    for j in 1..n {
        let (a, b) = (x[0], x[j]);
        if b == 0 {
            continue;
        }
        let (g, p, q) = extended_gcd(a, b);
        let (a1, b1) = (a / g, b / g);
        // M = [[p, q], [-b1, a1]] sends (a, b) to (g, 0); U <- U M^{-1}.
        x[0] = g;
        x[j] = 0;
        for i in 0..n {
            let (c0, cj) = (u[i * n], u[i * n + j]);
            u[i * n] = c0
                .checked_mul(a1)
                .and_then(|v| v.checked_add(cj.checked_mul(b1)?))
                .ok_or_else(overflow)?;
            u[i * n + j] = cj
                .checked_mul(p)
                .and_then(|v| v.checked_sub(c0.checked_mul(q)?))
                .ok_or_else(overflow)?;
        }
    }
    if x[0] == -1 {
        for i in 0..n {
            u[i * n] = -u[i * n];
        }
    } else if x[0] != 1 {
        return Err(Error::NotPrimitive(sigma.coeffs().to_vec()));
    }
    let data = u.into_iter().map(narrow).collect::<Result<Vec<_>>>()?;
    Ok(IntMatrix { n, data })
}

/// Column-style Hermite normal form of a nonsingular integer matrix: lower
/// triangular, positive diagonal, entries left of the diagonal in `[0, d_ii)`.
/// Two matrices share it iff their columns span the same lattice.
pub fn hermite_normal_form(m: &IntMatrix) -> Result<IntMatrix> {
    let n = m.n;
    let mut a: Vec<i128> = m.data.iter().map(|&x| x as i128).collect();
    let col_op = |a: &mut Vec<i128>, j: usize, k: usize, m2: [[i128; 2]; 2]| -> Result<()> {
        for i in 0..n {
            let (x, y) = (a[i * n + j], a[i * n + k]);
            a[i * n + j] = x
                .checked_mul(m2[0][0])
                .and_then(|v| v.checked_add(y.checked_mul(m2[1][0])?))
                .ok_or_else(overflow)?;
            a[i * n + k] = x
                .checked_mul(m2[0][1])
                .and_then(|v| v.checked_add(y.checked_mul(m2[1][1])?))
                .ok_or_else(overflow)?;
        }
        Ok(())
    };
    for i in 0..n {
        for k in i + 1..n {
            let (x, y) = (a[i * n + i], a[i * n + k]);
            if y == 0 {
                continue;
            }
            let (g, p, q) = extended_gcd(x, y);
            // [col_i, col_k] <- [col_i, col_k] [[p, -y/g], [q, x/g]]
            col_op(&mut a, i, k, [[p, -y / g], [q, x / g]])?;
        }
        if a[i * n + i] == 0 {
            return Err(Error::InvalidInput("matrix is singular".into()));
        }
        if a[i * n + i] < 0 {
            for r in 0..n {
                a[r * n + i] = -a[r * n + i];
            }
        }
        let d = a[i * n + i];
        for j in 0..i {
            let f = a[i * n + j].div_euclid(d);
            if f != 0 {
                for r in 0..n {
                    a[r * n + j] -= f * a[r * n + i];
                }
            }
        }
    }
    let data = a.into_iter().map(narrow).collect::<Result<Vec<_>>>()?;
    Ok(IntMatrix { n, data })
}

/// One generator of `Γ_0`: a screw motion of `S^1 × R^{k-1}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScrewGenerator {
    /// Rotation of the circle of length `L(σ)`, in radians, in `[0, 2π)`.
    pub rotation: f64,
    /// Translation in an orthonormal basis of `σ^⊥`.
    pub translation: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuotientData {
    pub sigma_length: f64,
    pub generators: Vec<ScrewGenerator>,
    /// Integer completion `{σ, γ_1, ..., γ_{k-1}}` used for the generators.
    #[serde(skip)]
    pub completion: IntMatrix,
}

impl QuotientData {
    /// Translation parts as columns of a `(k-1) × (k-1)` matrix.
    pub fn translation_matrix(&self) -> DMatrix<f64> {
        let m = self.generators.len();
        DMatrix::from_fn(m, m, |i, j| self.generators[j].translation[i])
    }

    /// Covolume of the lattice spanned by the translation parts.
    pub fn translation_covolume(&self) -> f64 {
        if self.generators.is_empty() {
            1.0
        } else {
            self.translation_matrix().determinant().abs()
        }
    }

    pub fn translation_gram(&self) -> DMatrix<f64> {
        let t = self.translation_matrix();
        t.transpose() * t
    }
}

pub fn quotient_generators(lat: &FlatLattice, sigma: &GeodesicClass) -> Result<QuotientData> {
    check_rank(lat, sigma)?;
    let completion = extend_to_basis(sigma)?;
    let k = lat.rank();
    let new_basis = lat.basis() * completion.to_f64();
    let v0 = new_basis.column(0).into_owned();
    let length = v0.norm();
    let axis = &v0 / length;
    // Orthonormal frame of σ^⊥ by Gram-Schmidt on the remaining generators.
    let mut frame: Vec<DVector<f64>> = Vec::with_capacity(k - 1);
    for j in 1..k {
        let mut w = new_basis.column(j).into_owned();
        for _ in 0..2 {
            w -= &axis * axis.dot(&w);
            for q in &frame {
                w -= q * q.dot(&w);
            }
        }
        frame.push(&w / w.norm());
    }
    let generators = (1..k)
        .map(|j| {
            let v = new_basis.column(j).into_owned();
            let along = axis.dot(&v);
            let rotation = (2.0 * PI * along / length).rem_euclid(2.0 * PI);
            let perp = &v - &axis * along;
            let translation = frame.iter().map(|q| q.dot(&perp)).collect();
            ScrewGenerator {
                rotation,
                translation,
            }
        })
        .collect();
    Ok(QuotientData {
        sigma_length: length,
        generators,
        completion,
    })
}

/// One filled cusp.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CuspFilling {
    #[serde(skip)]
    pub lattice: FlatLattice,
    pub sigma: GeodesicClass,
    pub length: f64,
    /// Filling radius `R = L(σ)/β_1`.
    pub radius: f64,
    pub quotient: QuotientData,
}

impl CuspFilling {
    /// Flat metric of the `T^{n-2}` factor normalized so that `r^2 g_T` is the
    /// boundary torus `R^{n-2}/Γ_0` at `r = R`.
    pub fn torus_gram(&self) -> DMatrix<f64> {
        self.quotient.translation_gram() / (self.radius * self.radius)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DehnFillingData {
    pub n: usize,
    pub beta_1: f64,
    pub cusps: Vec<CuspFilling>,
    /// `|σ| = min_i L(σ^i)`.
    pub size: f64,
    pub two_pi_ok: bool,
}

/// `β_1`, the smooth-closing period of the unit-mass black hole.
pub fn unit_mass_period(n: usize) -> Result<f64> {
    Ok(closing_parameters(1.0, n)?.beta)
}

pub fn filling_data(cusps: &[(FlatLattice, GeodesicClass)], n: usize) -> Result<DehnFillingData> {
    let beta_1 = unit_mass_period(n)?;
    if cusps.is_empty() {
        return Err(Error::InvalidInput("at least one cusp is required".into()));
    }
    let cusps = cusps
        .iter()
        .map(|(lat, sigma)| {
            if lat.rank() != n - 1 {
                return Err(Error::InvalidInput(format!(
                    "cusp lattice must have rank n-1 = {}, got {}",
                    n - 1,
                    lat.rank()
                )));
            }
            let length = geodesic_length(lat, sigma)?;
            let quotient = quotient_generators(lat, sigma)?;
            Ok(CuspFilling {
                lattice: lat.clone(),
                sigma: sigma.clone(),
                length,
                radius: length / beta_1,
                quotient,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let size = cusps.iter().map(|c| c.length).fold(f64::INFINITY, f64::min);
    Ok(DehnFillingData {
        n,
        beta_1,
        cusps,
        size,
        two_pi_ok: size > 2.0 * PI,
    })
}

/// JSON form of a cusp: `{"basis": [row-major floats], "sigma": [ints]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CuspSpec {
    pub basis: Vec<f64>,
    pub sigma: Vec<i64>,
}

impl CuspSpec {
    pub fn resolve(&self) -> Result<(FlatLattice, GeodesicClass)> {
        Ok((
            FlatLattice::from_row_major(&self.basis)?,
            GeodesicClass::new(self.sigma.clone())?,
        ))
    }

    /// Cusp with the unit square lattice of the given rank.
    pub fn unit(sigma: Vec<i64>) -> Self {
        let k = sigma.len();
        let basis = (0..k * k)
            .map(|i| if i / k == i % k { 1.0 } else { 0.0 })
            .collect();
        Self { basis, sigma }
    }
}

/// Single cusp with unit square lattice whose filling geodesic has length `length`,
/// for scans parameterized directly by `|σ|`.
pub fn scaled_unit_cusp(n: usize, length: f64) -> Result<(FlatLattice, GeodesicClass)> {
    if n < 3 {
        return Err(Error::InvalidDimension(n));
    }
    if !(length > 0.0) {
        return Err(Error::InvalidInput(format!(
            "geodesic length must be positive, got {length}"
        )));
    }
    let k = n - 1;
    let lat = FlatLattice::new(DMatrix::identity(k, k) * length)?;
    let mut coeffs = vec![0; k];
    coeffs[0] = 1;
    Ok((lat, GeodesicClass::new(coeffs)?))
}
