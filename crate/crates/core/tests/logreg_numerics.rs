use dynpsn::logreg::{gradient, objective, train_binary};
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn instance(rng: &mut ChaCha8Rng) -> (Array2<f64>, Vec<bool>, Array1<f64>, f64, f64) {
    let n = rng.random_range(4..20);
    let d = rng.random_range(1..6);
    let x = Array2::from_shape_fn((n, d), |_| rng.random_range(-2.0..2.0));
    let mut y: Vec<bool> = (0..n).map(|_| rng.random_bool(0.5)).collect();
    y[0] = true;
    y[1] = false;
    let w = Array1::from_shape_fn(d, |_| rng.random_range(-1.5..1.5));
    let b = rng.random_range(-1.0..1.0);
    let l2 = 10f64.powf(rng.random_range(-3.0..1.0));
    (x, y, w, b, l2)
}

#[test]
fn gradient_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..20 {
        let (x, y, w, b, l2) = instance(&mut rng);
        let (gw, gb) = gradient(x.view(), &y, w.view(), b, l2);
        let h = 1e-6;
        let f = |w: &Array1<f64>, b: f64| objective(x.view(), &y, w.view(), b, l2);
        let mut numeric = Vec::new();
        for j in 0..w.len() {
            let mut up = w.clone();
            let mut dn = w.clone();
            up[j] += h;
            dn[j] -= h;
            numeric.push((f(&up, b) - f(&dn, b)) / (2.0 * h));
        }
        numeric.push((f(&w, b + h) - f(&w, b - h)) / (2.0 * h));
        let analytic: Vec<f64> = gw.iter().copied().chain([gb]).collect();
        let diff: f64 = analytic.iter().zip(&numeric).map(|(a, n)| (a - n).powi(2)).sum::<f64>().sqrt();
        let scale: f64 = analytic.iter().map(|a| a * a).sum::<f64>().sqrt().max(1e-8);
        assert!(diff / scale <= 1e-5, "case {case}: relative error {}", diff / scale);
    }
}

#[test]
fn objective_never_increases() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..20 {
        let (x, y, _, _, l2) = instance(&mut rng);
        let (_, trace) = train_binary(x.view(), &y, l2, "t").unwrap();
        assert!(trace.objective.len() >= 2);
        for w in trace.objective.windows(2) {
            assert!(w[1] <= w[0], "{} -> {}", w[0], w[1]);
        }
        assert!(trace.gradient_norm <= 1e-6);
    }
}

#[test]
fn doubling_l2_shrinks_weights() {
    let x: Array2<f64> = Array2::from_shape_vec((6, 1), vec![-2.0, -1.0, -0.5, 0.5, 1.0, 2.0]).unwrap();
    let y = [false, false, true, false, true, true];
    let mut prev = f64::INFINITY;
    let mut l2 = 1e-3;
    while l2 < 1e3 {
        let (m, _) = train_binary(x.view(), &y, l2, "t").unwrap();
        let norm: f64 = m.weights.dot(&m.weights);
        let norm = norm.sqrt();
        assert!(norm <= prev + 1e-12, "l2 {l2}: {norm} > {prev}");
        prev = norm;
        l2 *= 2.0;
    }
}

#[test]
fn single_precision_training() {
    let x = Array2::from_shape_vec((4, 1), vec![-2.0f32, -1.0, 1.0, 2.0]).unwrap();
    let (m, trace) = train_binary(x.view(), &[false, false, true, true], 0.1, "t").unwrap();
    assert!(m.weights[0] > 0.0);
    assert!(trace.objective.windows(2).all(|w| w[1] <= w[0]));
}
