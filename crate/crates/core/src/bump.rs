//! Smooth transition functions built from `exp(-1/t)`.

/// `exp(-1/x)` for `x > 0`, zero otherwise, with its first two derivatives.
fn flat_exp(x: f64) -> [f64; 3] {
    if x <= 0.0 {
        return [0.0; 3];
    }
    let f = (-1.0 / x).exp();
    let x2 = x * x;
    [f, f / x2, f * (1.0 - 2.0 * x) / (x2 * x2)]
}

/// Smooth step `S` with `S = 0` for `x <= 0`, `S = 1` for `x >= 1`,
/// `S(x) + S(1 - x) = 1`. Returns `[S, S', S'']`.
pub fn smooth_step(x: f64) -> [f64; 3] {
    if x <= 0.0 {
        return [0.0, 0.0, 0.0];
    }
    if x >= 1.0 {
        return [1.0, 0.0, 0.0];
    }
    let [f, f1, f2] = flat_exp(x);
    let [g0, g1, g2] = flat_exp(1.0 - x);
    // g(x) = flat_exp(1 - x)
    let (g, gp, gpp) = (g0, -g1, g2);
    let d = f + g;
    let s = f / d;
    let num = f1 * g - f * gp;
    let d2 = d * d;
    let s1 = num / d2;
    let num_p = f2 * g - f * gpp;
    let d2_p = 2.0 * d * (f1 + gp);
    let s2 = (num_p * d2 - num * d2_p) / (d2 * d2);
    [s, s1, s2]
}

/// Integral of the smooth step over `[0, x]`, clamped to `[0, 1]`.
///
/// Uses the symmetry `S(x) + S(1-x) = 1` on the right half so only `[0, 1/2]`
/// needs quadrature.
pub fn smooth_step_integral(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 0.5;
    }
    if x > 0.5 {
        // int_0^x S = 1/2 - int_x^1 S = 1/2 - int_0^{1-x} (1 - S) = x - 1/2 + int_0^{1-x} S
        return x - 0.5 + smooth_step_integral(1.0 - x);
    }
    gauss_legendre(|t| smooth_step(t)[0], 0.0, x, 64)
}

/// Compactly supported bump `exp(1 - 1/(1 - x^2))` on `(-1, 1)` with peak 1 at
/// the origin. Returns `[b, b', b'']`.
pub fn compact_bump(x: f64) -> [f64; 3] {
    if x.abs() >= 1.0 {
        return [0.0; 3];
    }
    let u = 1.0 - x * x;
    let b = (1.0 - 1.0 / u).exp();
    let g1 = -2.0 * x / (u * u);
    let g2 = -2.0 / (u * u) - 8.0 * x * x / (u * u * u);
    [b, b * g1, b * (g2 + g1 * g1)]
}

/// Composite 8-point Gauss-Legendre quadrature with `panels` panels.
pub(crate) fn gauss_legendre<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    const NODES: [f64; 4] = [
        0.183_434_642_495_649_8,
        0.525_532_409_916_329,
        0.796_666_477_413_626_7,
        0.960_289_856_497_536_3,
    ];
    const WEIGHTS: [f64; 4] = [
        0.362_683_783_378_362,
        0.313_706_645_877_887_3,
        0.222_381_034_453_374_5,
        0.101_228_536_290_376_3,
    ];
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * h;
        let half = 0.5 * h;
        for (x, w) in NODES.iter().zip(WEIGHTS.iter()) {
            total += w * (f(mid + half * x) + f(mid - half * x));
        }
    }
    total * 0.5 * h
}
