use abm::ode::{integrate_adaptive, integrate_euler, Integrator, IntegratorConfig, OdeProblem};

const K: f64 = 120.0;

fn fishery(_t: f64, y: &[f64], h: &f64, dy: &mut [f64]) {
    dy[0] = y[0] * (1.0 - y[0] / K) - h;
}

/// Closed form of s' = s(1 - s/K) - h for constant h with 4h < K.
/// With roots s± of the right-hand side,
/// (s - s+)/(s - s-) = C exp(-(s+ - s-) t / K).
fn harvested_logistic(s0: f64, h: f64, t: f64) -> f64 {
    let disc = (1.0 - 4.0 * h / K).sqrt();
    let (hi, lo) = (K / 2.0 * (1.0 + disc), K / 2.0 * (1.0 - disc));
    let q = (s0 - hi) / (s0 - lo) * (-(hi - lo) * t / K).exp();
    (hi - lo * q) / (1.0 - q)
}

#[test]
fn closed_form_oracle_is_sane() {
    // h = 0 reduces to the plain logistic.
    let plain = K / (1.0 + (K / 10.0 - 1.0) * (-3.0f64).exp());
    assert!((harvested_logistic(10.0, 0.0, 3.0) - plain).abs() < 1e-10);
    assert_eq!(harvested_logistic(50.0, 20.0, 0.0), 50.0);
}

#[test]
fn piecewise_constant_harvest_matches_closed_form() {
    let harvests = [5.0, 20.0, 0.0, 10.0, 29.0, 12.5, 0.0, 3.0];
    let mut it = Integrator::new(fishery, 0.0, vec![40.0], 0.0, IntegratorConfig::adaptive(1e-10, 1e-10)).unwrap();
    let mut oracle = 40.0;
    for (k, h) in harvests.iter().enumerate() {
        *it.params_mut() = *h;
        it.step_to((k + 1) as f64).unwrap();
        oracle = harvested_logistic(oracle, *h, 1.0);
        assert_eq!(it.t(), (k + 1) as f64);
        assert!((it.y()[0] - oracle).abs() < 1e-5, "interval {k}: {} vs {oracle}", it.y()[0]);
    }
}

#[test]
fn successive_step_to_equals_single_shot() {
    let cfg = IntegratorConfig::adaptive(1e-12, 1e-12);
    let mut split = Integrator::new(fishery, 0.0, vec![15.0], 7.0, cfg).unwrap();
    for t in [0.7, 1.0, 2.0, 3.3, 5.0] {
        split.step_to(t).unwrap();
    }
    let mut once = Integrator::new(fishery, 0.0, vec![15.0], 7.0, cfg).unwrap();
    once.step_to(5.0).unwrap();
    assert!((split.y()[0] - once.y()[0]).abs() < 1e-9);
}

#[test]
fn eq2_is_one_euler_step() {
    let p = OdeProblem { rhs: fishery, t0: 0.0, t1: 1.0, y0: vec![60.0], params: 0.0 };
    assert_eq!(integrate_euler(&p, 1.0).unwrap().last().unwrap().1[0], 90.0);
}

#[test]
fn logistic_monotone_toward_capacity() {
    for s0 in [1.0, 30.0, 90.0, 119.0] {
        let p = OdeProblem { rhs: fishery, t0: 0.0, t1: 30.0, y0: vec![s0], params: 0.0 };
        let runs = [
            (integrate_euler(&p, 1.0).unwrap(), 1e-12),
            // Near K the adaptive solution may wobble within its tolerance.
            (integrate_adaptive(&p, IntegratorConfig::adaptive(1e-8, 1e-8)).unwrap(), 1e-8 * (1.0 + K)),
        ];
        for (tr, slack) in runs {
            for w in tr.y.windows(2) {
                assert!(w[1][0] >= w[0][0] - slack, "s0={s0}: {} -> {}", w[0][0], w[1][0]);
                assert!(w[1][0] <= K + slack);
            }
        }
    }
}

/// Adaptive stepping at tolerance 1e-6 needs fewer right-hand-side
/// evaluations than Euler at the step size that first matches its accuracy.
#[test]
fn adaptive_beats_euler_at_equal_accuracy() {
    let p = OdeProblem { rhs: fishery, t0: 0.0, t1: 10.0, y0: vec![10.0], params: 0.0 };
    let exact = harvested_logistic(10.0, 0.0, 10.0);
    let mut it = Integrator::from_problem(&p, IntegratorConfig::adaptive(1e-6, 1e-6)).unwrap();
    it.step_to(10.0).unwrap();
    let target = (it.y()[0] - exact).abs();
    let adaptive_evals = it.evaluations();

    let mut dt = 1.0;
    let euler_evals = loop {
        let mut e = Integrator::from_problem(&p, IntegratorConfig::euler(dt)).unwrap();
        e.step_to(10.0).unwrap();
        if (e.y()[0] - exact).abs() <= target || dt < 1e-7 {
            break e.evaluations();
        }
        dt /= 2.0;
    };
    assert!(adaptive_evals < euler_evals, "adaptive {adaptive_evals} vs euler {euler_evals}");
}
