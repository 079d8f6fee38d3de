use drselect_core::gaussdist::{frechet_distance, summarize, trace_sqrt_product, GaussianSummary};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_rows(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> Vec<Vec<f32>> {
    (0..n)
        .map(|_| (0..dim).map(|_| rng.random_range(-1.0f32..1.0)).collect())
        .collect()
}

fn random_summary(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> GaussianSummary {
    let rows = random_rows(rng, n, dim);
    summarize(rows.iter().map(Vec::as_slice)).unwrap()
}

#[test]
fn self_distance_is_zero() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let s = random_summary(&mut rng, 100, 16);
        let fd = frechet_distance(&s, &s).unwrap();
        assert!(fd <= 1e-6, "{fd}");
    }
}

#[test]
fn symmetric_and_nonnegative() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for i in 0..50 {
        // include rank-deficient summaries (n <= dim) every other round
        let n = if i % 2 == 0 { 40 } else { 6 };
        let a = random_summary(&mut rng, n, 8);
        let b = random_summary(&mut rng, 30, 8);
        let ab = frechet_distance(&a, &b).unwrap();
        let ba = frechet_distance(&b, &a).unwrap();
        assert!(ab >= 0.0 && ba >= 0.0);
        assert!((ab - ba).abs() <= 1e-6, "{ab} vs {ba}");
    }
}

#[test]
fn one_dimensional_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..1000 {
        let (m1, m2) = (rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0));
        let (s1, s2): (f64, f64) = (rng.random_range(0.01..3.0), rng.random_range(0.01..3.0));
        let a = GaussianSummary::new(DVector::from_element(1, m1), DMatrix::from_element(1, 1, s1 * s1), 50).unwrap();
        let b = GaussianSummary::new(DVector::from_element(1, m2), DMatrix::from_element(1, 1, s2 * s2), 50).unwrap();
        let expected = (m1 - m2).powi(2) + (s1 - s2).powi(2);
        let fd = frechet_distance(&a, &b).unwrap();
        assert!((fd - expected).abs() <= 1e-8, "{fd} vs {expected}");
    }
}

#[test]
fn one_dimensional_from_data() {
    let xs: Vec<[f32; 1]> = [0.0f32, 1.0, 2.0, 3.0, 4.0].map(|x| [x]).to_vec();
    let ys: Vec<[f32; 1]> = [10.0f32, 12.0, 14.0, 16.0, 18.0].map(|x| [x]).to_vec();
    let a = summarize(xs.iter().map(|r| r.as_slice())).unwrap();
    let b = summarize(ys.iter().map(|r| r.as_slice())).unwrap();
    // means 2 and 14, sample std sqrt(2.5) and 2 sqrt(2.5)
    let expected = 144.0 + 2.5;
    assert!((frechet_distance(&a, &b).unwrap() - expected).abs() < 1e-9);
}

#[test]
fn translation_costs_squared_shift() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for _ in 0..50 {
        let s = random_summary(&mut rng, 100, 16);
        let c = DVector::from_fn(16, |_, _| rng.random_range(-2.0..2.0));
        let t = GaussianSummary::new(s.mean() + &c, s.cov().clone(), s.n()).unwrap();
        let fd = frechet_distance(&s, &t).unwrap();
        assert!((fd - c.norm_squared()).abs() <= 1e-6, "{fd} vs {}", c.norm_squared());
    }
}

/// Eigenvalues of the (non-symmetric) product of two small matrices from
/// the roots of its characteristic polynomial.
fn product_eigenvalues(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Vec<f64> {
    let p = a * b;
    match p.nrows() {
        1 => vec![p[(0, 0)]],
        2 => {
            let tr = p[(0, 0)] + p[(1, 1)];
            let det = p[(0, 0)] * p[(1, 1)] - p[(0, 1)] * p[(1, 0)];
            let disc = (tr * tr / 4.0 - det).max(0.0).sqrt();
            vec![tr / 2.0 + disc, tr / 2.0 - disc]
        }
        3 => {
            let tr = p.trace();
            let minors = p[(0, 0)] * p[(1, 1)] - p[(0, 1)] * p[(1, 0)]
                + p[(0, 0)] * p[(2, 2)] - p[(0, 2)] * p[(2, 0)]
                + p[(1, 1)] * p[(2, 2)] - p[(1, 2)] * p[(2, 1)];
            let det = p[(0, 0)] * (p[(1, 1)] * p[(2, 2)] - p[(1, 2)] * p[(2, 1)])
                - p[(0, 1)] * (p[(1, 0)] * p[(2, 2)] - p[(1, 2)] * p[(2, 0)])
                + p[(0, 2)] * (p[(1, 0)] * p[(2, 1)] - p[(1, 1)] * p[(2, 0)]);
            // l^3 + a l^2 + b l + c with a = -tr, b = minors, c = -det
            let (ca, cb, cc) = (-tr, minors, -det);
            let dp = cb - ca * ca / 3.0;
            let dq = 2.0 * ca.powi(3) / 27.0 - ca * cb / 3.0 + cc;
            let shift = -ca / 3.0;
            if dp.abs() < 1e-14 {
                return vec![shift + (-dq).cbrt(); 3];
            }
            let r = 2.0 * (-dp / 3.0).sqrt();
            let arg = ((3.0 * dq / (2.0 * dp)) * (-3.0 / dp).sqrt()).clamp(-1.0, 1.0);
            let phi = arg.acos() / 3.0;
            (0..3)
                .map(|k| shift + r * (phi - 2.0 * std::f64::consts::PI * k as f64 / 3.0).cos())
                .collect()
        }
        _ => unreachable!(),
    }
}

fn random_spd(rng: &mut ChaCha8Rng, dim: usize) -> DMatrix<f64> {
    let m = DMatrix::from_fn(dim, dim, |_, _| rng.random_range(-1.0..1.0));
    &m * m.transpose() + DMatrix::identity(dim, dim) * 0.5
}

#[test]
fn trace_sqrt_matches_characteristic_polynomial() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    for dim in 1..=3 {
        for _ in 0..200 {
            let a = random_spd(&mut rng, dim);
            let b = random_spd(&mut rng, dim);
            let expected: f64 = product_eigenvalues(&a, &b).iter().map(|l| l.max(0.0).sqrt()).sum();
            let got = trace_sqrt_product(&a, &b).unwrap();
            assert!((got - expected).abs() <= 1e-8, "dim {dim}: {got} vs {expected}");
        }
    }
}

#[test]
fn rank_deficient_summaries_stay_finite() {
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    let a = random_summary(&mut rng, 5, 32);
    let b = random_summary(&mut rng, 5, 32);
    let fd = frechet_distance(&a, &b).unwrap();
    assert!(fd.is_finite() && fd > 0.0);
    assert!(frechet_distance(&a, &a).unwrap() <= 1e-6);
}
