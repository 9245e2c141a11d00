//! Acceptance suite: one verdict line per criterion.
//!
//! Run with `cargo test -p dehnfill --test acceptance -- --nocapture`.
//! Criteria 8 and 10 contain statements that do not hold for the equations as
//! implemented; they print FAIL together with the measured discrepancy, while
//! every attainable sub-check is asserted.

use std::f64::consts::PI;
use std::time::Instant;

use dehnfill::curvature::{
    curvature_action, decompose_quadratic, fd_curvature_oracle, pairing, ricci_and_deficit,
    sectional_curvatures, trace_free_bound, trace_free_top_eigenvalue, CurvatureReport,
    PointCurvature,
};
use dehnfill::gluing::decay_scan;
use dehnfill::lattice::{extend_to_basis, quotient_generators, FlatLattice, GeodesicClass};
use dehnfill::linearized::{
    apply_l, assemble_l_blackhole, assemble_l_cusp, compare_operators, indicial_roots, pairs,
    BlockLabel, InvariantDeformation,
};
use dehnfill::norms::{linspace, logspace, phi_c, GridFunction, WeightConfig, WeightSpec};
use dehnfill::profiles::{
    closing_parameters, make_glued_profile, make_glued_profile_with, FillingMetric, Transition,
    WarpingProfile,
};
use dehnfill::solver::{newton_solve, oscillation_bound, NewtonConfig};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Verdict {
    id: u32,
    pass: bool,
    detail: String,
}

fn verdict(id: u32, pass: bool, detail: String) -> Verdict {
    Verdict { id, pass, detail }
}

const DIMENSIONS: [usize; 5] = [4, 5, 6, 7, 8];
const MASSES: [f64; 3] = [0.5, 1.0, 2.0];

fn criterion_1() -> Verdict {
    let (mut closed, mut scalar, mut oracle) = (0.0f64, 0.0f64, 0.0f64);
    for n in DIMENSIONS {
        for m in MASSES {
            let metric = FillingMetric::smooth_black_hole(n, m, 110.0).unwrap();
            let rp = metric.profile().domain().0;
            let nf = n as f64;
            for r in logspace(1.01 * rp, 100.0, 512) {
                let rep = ricci_and_deficit(&metric, r).unwrap();
                closed = closed.max(rep.deficit_sup());
                scalar = scalar.max((rep.scalar + nf * (nf - 1.0)).abs());
                oracle = oracle.max(fd_curvature_oracle(&metric, r).unwrap().deficit().amax());
            }
        }
    }
    let pass = closed < 1e-10 && scalar < 1e-10 && oracle < 1e-6;
    verdict(
        1,
        pass,
        format!("closed-form deficit {closed:.2e} (<1e-10), scalar error {scalar:.2e} (<1e-10), FD oracle deficit {oracle:.2e} (<1e-6)"),
    )
}

fn criterion_2() -> Verdict {
    let (mut period, mut horizon) = (0.0f64, 0.0f64);
    for n in DIMENSIONS {
        for m in MASSES {
            let cp = closing_parameters(m, n).unwrap();
            let bh = WarpingProfile::black_hole_from_horizon(n, m, 10.0).unwrap();
            let v1 = bh.eval(cp.r_plus, 1).unwrap();
            period = period.max((cp.beta * v1 - 4.0 * PI).abs());
            horizon = horizon.max((cp.r_plus - (2.0 * m).powf(1.0 / (n as f64 - 1.0))).abs());
        }
    }
    verdict(
        2,
        period < 1e-12 && horizon < 1e-12,
        format!("|β V'(r+) - 4π| {period:.2e}, |r+ - (2m)^(1/(n-1))| {horizon:.2e} (<1e-12)"),
    )
}

fn criterion_3() -> Verdict {
    let start = Instant::now();
    let sizes = logspace(40.0, 400.0, 6);
    let mut slopes = Vec::new();
    let mut pass = true;
    for n in [3usize, 4, 5, 6] {
        let res = decay_scan(
            n,
            &sizes,
            &WeightConfig::default(),
            Transition::Proportional,
            512,
        )
        .unwrap();
        pass &= (res.fit.slope - res.expected_slope).abs() <= 0.1;
        slopes.push(format!("n={n}: {:.4}", res.fit.slope));
    }
    let secs = start.elapsed().as_secs_f64();
    pass &= secs < 60.0;
    verdict(
        3,
        pass,
        format!(
            "slopes {} (target -(n-1) ± 0.1), {secs:.1}s",
            slopes.join(", ")
        ),
    )
}

fn criterion_4() -> Verdict {
    let centers = logspace(5.0, 500.0, 7);
    let mut pass = true;
    let mut slopes = Vec::new();
    for n in [4usize, 5, 6] {
        let res = compare_operators(n, 1.0, &centers, 201).unwrap();
        pass &= (res.fit.slope - res.expected_slope).abs() <= 0.1;
        slopes.push(format!("n={n}: {:.4}", res.fit.slope));
    }
    verdict(
        4,
        pass,
        format!("slopes {} (target -(n-1) ± 0.1)", slopes.join(", ")),
    )
}

/// Interior sup of `L_C r^s` in one block on `[1, 2]` with `points` nodes.
fn annihilation_error(n: usize, block: BlockLabel, s: f64, points: usize) -> f64 {
    let Some(&(a, b)) = block.pairs(n).first() else {
        return 0.0;
    };
    let grid: Vec<f64> = (0..points)
        .map(|i| 1.0 + i as f64 / points as f64)
        .collect();
    let h = InvariantDeformation::from_fn(
        n,
        grid,
        |p, q, r| if (p, q) == (a, b) { r.powf(s) } else { 0.0 },
    )
    .unwrap();
    let out = apply_l(&assemble_l_cusp(n).unwrap(), &h)
        .unwrap()
        .pointwise_sup();
    out[2..points - 2].iter().fold(0.0, |m, &x| m.max(x))
}

/// Error level below which stencil roundoff (`~ eps/Δr^2`) dominates truncation.
const ROUNDOFF_LEVEL: f64 = 1e-8;

fn criterion_5() -> Verdict {
    let mut pass = true;
    let mut worst_order = f64::INFINITY;
    for n in 3..=8usize {
        let nf = n as f64;
        for block in [BlockLabel::B11, BlockLabel::B1j] {
            pass &= indicial_roots(block, n)
                .unwrap()
                .roots
                .iter()
                .all(|s| s.abs() > 1e-12);
        }
        pass &= indicial_roots(BlockLabel::Bjk, n).unwrap().roots == vec![0.0, 1.0 - nf];
        pass &= indicial_roots(BlockLabel::B1j, n).unwrap().roots == vec![1.0, -nf];
        for block in [BlockLabel::B11, BlockLabel::B1j, BlockLabel::Bjk] {
            for s in indicial_roots(block, n).unwrap().roots {
                let coarse = annihilation_error(n, block, s, 80);
                let fine = annihilation_error(n, block, s, 160);
                if coarse > ROUNDOFF_LEVEL {
                    let order = (coarse / fine).log2();
                    worst_order = worst_order.min(order);
                    pass &= order > 3.5;
                } else {
                    pass &= fine < ROUNDOFF_LEVEL;
                }
            }
        }
    }
    verdict(
        5,
        pass,
        format!("11/1j roots nonzero, jk = {{0, 1-n}}, 1j = {{1, -n}} for n = 3..8; observed order of r^s annihilation >= {worst_order:.2} (errors below 1e-8 treated as roundoff)"),
    )
}

fn criterion_6() -> Verdict {
    let mut pass = true;
    let mut lines = Vec::new();
    for n in [4usize, 5] {
        for radius in [15.0, 50.0, 100.0] {
            let start = Instant::now();
            let g = make_glued_profile(radius, n, 4).unwrap();
            let res = newton_solve(&g, n, &NewtonConfig::default()).unwrap();
            let secs = start.elapsed().as_secs_f64();
            let final_res = *res.residuals.last().unwrap();
            let rp = 2f64.powf(1.0 / (n as f64 - 1.0));
            let ok = res.converged
                && final_res < 1e-10
                && (res.fitted_m - 1.0).abs() <= 1e-6
                && (res.r_plus - rp).abs() <= 1e-6
                && res.quadratic_ratio.is_none_or(|q| q < 1.0)
                && secs < 60.0;
            pass &= ok;
            lines.push(format!(
                "n={n} R={radius}: {} iters, res {final_res:.1e}, m {:.9}, r+ err {:.1e}",
                res.iters,
                res.fitted_m,
                (res.r_plus - rp).abs()
            ));
        }
    }
    verdict(6, pass, lines.join("; "))
}

fn criterion_7() -> Verdict {
    let n = 4;
    let radius = 50.0;
    let rp = closing_parameters(1.0, n).unwrap().r_plus;
    let grid = logspace(rp, radius, 1500);
    let w = WeightSpec::resolve(n, &WeightConfig::default(), &[(rp, radius)]).unwrap();
    let phi = GridFunction::from_fn(grid.clone(), |r| phi_c(&w, 0, r).unwrap()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut worst_plain, mut worst_weighted) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let amps: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let freqs: Vec<f64> = (0..4).map(|_| rng.gen_range(0.1..3.0)).collect();
        let offset = rng.gen_range(-1.0..1.0);
        let rhs = GridFunction::from_fn(grid.clone(), |r| {
            offset
                + amps
                    .iter()
                    .zip(&freqs)
                    .map(|(a, f)| a * (f * r.ln() * 2.0 * PI).sin())
                    .sum::<f64>()
        })
        .unwrap();
        let i1 = rng.gen_range(0..1000);
        let i2 = rng.gen_range(i1 + 10..1500);
        let ob = oscillation_bound(n, &rhs, Some(&phi), grid[i1], grid[i2]).unwrap();
        worst_plain = worst_plain.max(ob.measured / ob.bound);
        worst_weighted = worst_weighted.max(ob.measured / ob.weighted.unwrap().bound);
    }
    let tol = 1.0 + 1e-8;
    verdict(
        7,
        worst_plain <= tol && worst_weighted <= tol,
        format!(
            "max measured/bound {worst_plain:.4}, max measured/(C1 |φ_c^-1 Lf|) {worst_weighted:.4} over 100 right-hand sides (r_c = {:.4})",
            w.cusps[0].r_c
        ),
    )
}

fn criterion_8() -> (Verdict, bool) {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut strict_gap_min = f64::INFINITY;
    let mut worst_excess = f64::NEG_INFINITY;
    let (mut strict_ge5, mut total_ge5, mut strict_4, mut total_4) = (0, 0, 0, 0);
    for _ in 0..100 {
        let n = DIMENSIONS[rng.gen_range(0..DIMENSIONS.len())];
        let m = rng.gen_range(0.1..5.0);
        let metric = FillingMetric::smooth_black_hole(n, m, 100.0).unwrap();
        let rp = metric.profile().domain().0;
        let r = rp * (1.0 + rng.gen_range(0.001f64..9.0));
        let k = PointCurvature::from_sectional(n, sectional_curvatures(&metric, r).unwrap());
        let a = trace_free_top_eigenvalue(&k).unwrap();
        let bound = trace_free_bound(&k);
        let gap = bound - a;
        worst_excess = worst_excess.max(-gap);
        let strict = gap > 1e-12 * bound.abs().max(1.0);
        if n == 4 {
            total_4 += 1;
            strict_4 += strict as usize;
        } else {
            total_ge5 += 1;
            strict_ge5 += strict as usize;
            strict_gap_min = strict_gap_min.min(gap);
        }
    }
    let attainable = worst_excess <= 1e-12 && strict_ge5 == total_ge5;
    let pass = attainable && strict_4 == total_4;
    let detail = format!(
        "a <= bound at all 100 points (max excess {worst_excess:.1e}); strict for n >= 5 at {strict_ge5}/{total_ge5} (min gap {strict_gap_min:.2e}); strict for n = 4 at {strict_4}/{total_4}: for n = 4 black holes K12 = K_jk so the bound is attained identically"
    );
    (verdict(8, pass, detail), attainable)
}

fn criterion_9() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (mut worst_det, mut worst_cov) = (0i64, 0.0f64);
    for _ in 0..200 {
        let k = rng.gen_range(2..=4usize);
        let basis = loop {
            let b: DMatrix<f64> = DMatrix::from_fn(k, k, |i, j| {
                let d = if i == j { 2.0f64 } else { 0.0 };
                d + rng.gen_range(-1.0..1.0)
            });
            if b.determinant().abs() > 0.1 {
                break b;
            }
        };
        let sigma = loop {
            let v: Vec<i64> = (0..k).map(|_| rng.gen_range(-9..=9)).collect();
            let g = v.iter().fold(0i64, |a, &b| gcd(a, b.abs()));
            if g > 0 {
                break v.iter().map(|x| x / g).collect::<Vec<_>>();
            }
        };
        let lat = FlatLattice::new(basis.clone()).unwrap();
        let sigma = GeodesicClass::new(sigma).unwrap();
        let det = extend_to_basis(&sigma).unwrap().determinant().unwrap();
        worst_det = worst_det.max((det.abs() - 1).abs());
        let q = quotient_generators(&lat, &sigma).unwrap();
        let covol = basis.determinant().abs();
        worst_cov =
            worst_cov.max((q.sigma_length * q.translation_covolume() - covol).abs() / covol);
    }
    verdict(
        9,
        worst_det == 0 && worst_cov < 1e-10,
        format!("max ||det| - 1| {worst_det}, max relative covolume error {worst_cov:.2e} over 200 lattices of rank 2-4"),
    )
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn profile_variants(n: usize) -> Vec<(String, WarpingProfile)> {
    let rp = closing_parameters(1.0, n).unwrap().r_plus;
    let bh = WarpingProfile::black_hole(n, 1.0, rp, 30.0).unwrap();
    let sampled = bh.resample(&logspace(rp, 30.0, 200)).unwrap();
    vec![
        ("cusp".into(), WarpingProfile::cusp(n, 1.0, 30.0).unwrap()),
        ("black hole".into(), bh),
        ("glued unit".into(), make_glued_profile(30.0, n, 4).unwrap()),
        (
            "glued proportional".into(),
            make_glued_profile_with(30.0, n, 4, Transition::Proportional).unwrap(),
        ),
        ("sampled".into(), sampled),
    ]
}

struct Identity10 {
    decomposition: f64,
    corrected_gauge: f64,
    literal_gauge: f64,
    substitution: f64,
}

fn identities_10() -> Identity10 {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut decomposition = 0.0f64;
    for _ in 0..200 {
        let n = rng.gen_range(3..=8usize);
        let mut km = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i + 1..n {
                let v: f64 = rng.gen_range(-2.0..1.0);
                km[(i, j)] = v;
                km[(j, i)] = v;
            }
        }
        let k = PointCurvature::from_matrix(km).unwrap();
        let a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let h = (&a + a.transpose()) * 0.5;
        let full = pairing(&curvature_action(&k, &h).unwrap(), &h);
        let parts = decompose_quadratic(&k, &h).unwrap();
        decomposition = decomposition.max((parts.total() - full).abs() / full.abs().max(1.0));
    }

    let (mut corrected_gauge, mut literal_gauge) = (0.0f64, 0.0f64);
    for n in 3..=6usize {
        let nf = n as f64;
        for (_, profile) in profile_variants(n) {
            let (lo, hi) = profile.domain();
            let metric = FillingMetric::with_unit_torus(profile, 1.0).unwrap();
            let sys = assemble_l_blackhole(&metric).unwrap();
            let grid = linspace(lo * 1.05, hi, 600);
            let lg = apply_l(
                &sys,
                &InvariantDeformation::metric(n, grid.clone()).unwrap(),
            )
            .unwrap();
            for (i, &r) in grid.iter().enumerate() {
                let rep = CurvatureReport::from_values(n, r, metric.profile().eval_all(r).unwrap());
                let scale = 1.0 + sys.coefficients(r).unwrap().zeroth.amax();
                for (a, b) in pairs(n) {
                    let (tau, g) = if a == b {
                        (rep.deficit_diag[a], 1.0)
                    } else {
                        (0.0, 0.0)
                    };
                    let value = lg.component(a, b)[i];
                    corrected_gauge = corrected_gauge
                        .max((value - 2.0 * (nf - 1.0) * g + 2.0 * tau).abs() / scale);
                    literal_gauge = literal_gauge.max((value - 2.0 * tau).abs());
                }
            }
        }
    }

    let mut substitution = 0.0f64;
    for n in 3..=8usize {
        let cusp_profile = WarpingProfile::cusp(n, 0.5, 100.0).unwrap();
        let via_profile =
            assemble_l_blackhole(&FillingMetric::with_unit_torus(cusp_profile, 1.0).unwrap())
                .unwrap();
        let cusp = assemble_l_cusp(n).unwrap();
        for r in logspace(0.6, 90.0, 25) {
            let a = via_profile.coefficients(r).unwrap();
            let b = cusp.coefficients(r).unwrap();
            let scale = r * r;
            substitution = substitution
                .max((a.a2 - b.a2).abs() / scale)
                .max((a.a1 - b.a1).abs() / scale)
                .max((a.zeroth - b.zeroth).amax());
        }
    }
    Identity10 {
        decomposition,
        corrected_gauge,
        literal_gauge,
        substitution,
    }
}

#[test]
fn acceptance() {
    let mut verdicts = vec![
        criterion_1(),
        criterion_2(),
        criterion_3(),
        criterion_4(),
        criterion_5(),
        criterion_6(),
        criterion_7(),
    ];
    let (v8, attainable_8) = criterion_8();
    verdicts.push(v8);
    verdicts.push(criterion_9());
    let ids = identities_10();
    let attainable_10 =
        ids.decomposition < 1e-12 && ids.corrected_gauge < 1e-9 && ids.substitution < 1e-14;
    verdicts.push(verdict(
        10,
        attainable_10 && ids.literal_gauge < 1e-9,
        format!(
            "decomposition {:.1e} (<1e-12); L(g) - 2(n-1)g + 2(ric+(n-1)g) {:.1e} relative to the coupling size on cusp, black hole, glued and sampled profiles; substitution {:.1e}; literal L(g) = 2(ric+(n-1)g) off by {:.3} (the scaling mode 2(n-1)g)",
            ids.decomposition, ids.corrected_gauge, ids.substitution, ids.literal_gauge
        ),
    ));

    for v in &verdicts {
        println!(
            "criterion {:>2}: {}  {}",
            v.id,
            if v.pass { "PASS" } else { "FAIL" },
            v.detail
        );
    }

    for v in &verdicts {
        match v.id {
            8 => assert!(
                attainable_8,
                "criterion 8 attainable part failed: {}",
                v.detail
            ),
            10 => assert!(
                attainable_10,
                "criterion 10 attainable part failed: {}",
                v.detail
            ),
            _ => assert!(v.pass, "criterion {} failed: {}", v.id, v.detail),
        }
    }
}
