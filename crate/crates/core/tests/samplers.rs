mod common;

use common::*;
use kronsample::io::{write_chains_csv, ChainRow};
use kronsample::metric::{metric_grad_logdet, sample_velocity, LocalMetric, MetricKind, TangentPair};
use kronsample::model::{normalize_component, PriorSpec};
use kronsample::samplers::*;
use kronsample::spd::geodesic_flow;
use kronsample::{Dataset, DenseMatrix, DenseVector, SeparableState, SpdMatrix, TangentVector};
use rand_chacha::ChaCha8Rng;

const KINDS: [MetricKind; 4] = [
    MetricKind::Regularized { alpha: 0.95 },
    MetricKind::Orthogonalized,
    MetricKind::Weighted { omega: 0.5 },
    MetricKind::Product,
];

fn iw_target(d1: usize, d2: usize, n: usize, kind: MetricKind, r: &mut ChaCha8Rng) -> TargetDensity {
    let data = random_dataset(d1, d2, n, r);
    let p1 = PriorSpec::default_inference(d1, 5.0).unwrap();
    let p2 = PriorSpec::default_inference(d2, 5.0).unwrap();
    TargetDensity::new(data, p1, p2, kind).unwrap()
}

fn start_for(kind: MetricKind, r: &mut ChaCha8Rng, d1: usize, d2: usize) -> SeparableState {
    let s = random_state(d1, d2, r);
    if kind.is_constrained() {
        normalize_component(&s).unwrap()
    } else {
        s
    }
}

fn state_dist(a: &SeparableState, b: &SeparableState) -> f64 {
    rel_err(a.sigma1.matrix(), b.sigma1.matrix()).max(rel_err(a.sigma2.matrix(), b.sigma2.matrix()))
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    xs[xs.len() / 2]
}

fn fd_check(target: &TargetDensity, state: &SeparableState) -> (f64, f64) {
    let (_, (g1, g2)) = target_eval(target, state).unwrap();
    let f1 = |m: &DenseMatrix| {
        let s = SeparableState::new(SpdMatrix::new(m.clone()).unwrap(), state.sigma2.clone());
        target_eval(target, &s).unwrap().0
    };
    let f2 = |m: &DenseMatrix| {
        let s = SeparableState::new(state.sigma1.clone(), SpdMatrix::new(m.clone()).unwrap());
        target_eval(target, &s).unwrap().0
    };
    (
        grad_err(&g1, &fd_sym_grad(f1, state.sigma1.matrix(), 1e-6)),
        grad_err(&g2, &fd_sym_grad(f2, state.sigma2.matrix(), 1e-6)),
    )
}

#[test]
fn target_gradient_matches_finite_differences() {
    let mut r = rng(60);
    let target = iw_target(2, 3, 40, MetricKind::Product, &mut r);
    for _ in 0..5 {
        let s = random_state(2, 3, &mut r);
        let (e1, e2) = fd_check(&target, &s);
        assert!(e1 < 1e-6 && e2 < 1e-6, "{e1} {e2}");
    }
    let orth = target.with_metric(MetricKind::Orthogonalized).unwrap();
    assert_eq!(orth.slice(), SliceDensity::Marginal);
    for _ in 0..5 {
        let s = random_state(2, 3, &mut r);
        let (e1, e2) = fd_check(&orth, &s);
        assert!(e1 < 1e-6 && e2 < 1e-6, "{e1} {e2}");
    }
}

#[test]
fn product_and_restricted_orthogonal_differ_by_sigma2_volume() {
    let mut r = rng(61);
    let prod = iw_target(2, 3, 20, MetricKind::Product, &mut r);
    let orth = prod
        .with_metric(MetricKind::Orthogonalized)
        .unwrap()
        .with_slice(SliceDensity::Restricted)
        .unwrap();
    for _ in 0..5 {
        let s = random_state(2, 3, &mut r);
        let diff = target_eval(&prod, &s).unwrap().0 - target_eval(&orth, &s).unwrap().0;
        let expect = 0.5 * 4.0 * s.sigma2.log_det();
        assert!((diff - expect).abs() < 1e-9, "{diff} {expect}");
    }
}

#[test]
fn empty_data_gradient_is_prior_plus_volume() {
    let mut r = rng(62);
    let p1 = PriorSpec::default_inference(2, 5.0).unwrap();
    let p2 = PriorSpec::siw_moment_matched(3, 5.0).unwrap();
    let s = random_state(2, 3, &mut r);
    for kind in KINDS {
        let target = TargetDensity::new(Dataset::empty(2, 3), p1.clone(), p2.clone(), kind).unwrap();
        let (_, (g1, g2)) = target_eval(&target, &s).unwrap();
        let (m1, m2) = metric_grad_logdet(kind, &s);
        let e1 = p1.logpdf_grad(&s.sigma1).unwrap().1 + m1 * HAUSDORFF_WEIGHT;
        let e2 = p2.logpdf_grad(&s.sigma2).unwrap().1 + m2 * HAUSDORFF_WEIGHT;
        assert!((g1 - e1).amax() < 1e-12 && (g2 - e2).amax() < 1e-12, "{kind:?}");
    }
}

#[test]
fn marginal_slice_needs_conjugate_priors() {
    let p = PriorSpec::siw_moment_matched(2, 5.0).unwrap();
    let t = TargetDensity::new(Dataset::empty(2, 2), p.clone(), p, MetricKind::Orthogonalized).unwrap();
    assert_eq!(t.slice(), SliceDensity::Restricted);
    assert!(t.with_slice(SliceDensity::Marginal).is_err());
}

/// `∫ exp(λu − ½(A eᵘ + B e⁻ᵘ)) du` by a wide midpoint rule.
fn orbit_quadrature(lambda: f64, a: f64, b: f64) -> (f64, f64, f64) {
    let f = |u: f64| lambda * u - 0.5 * (a * u.exp() + b * (-u).exp());
    let (lo, hi, n) = (-40.0, 40.0, 400_000);
    let h = (hi - lo) / n as f64;
    let peak = (0..n).map(|k| f(lo + (k as f64 + 0.5) * h)).fold(f64::NEG_INFINITY, f64::max);
    let (mut z, mut m1, mut m2) = (0.0, 0.0, 0.0);
    for k in 0..n {
        let u = lo + (k as f64 + 0.5) * h;
        let e = (f(u) - peak).exp();
        z += e;
        m1 += e * u.exp();
        m2 += e * (-u).exp();
    }
    (peak + (z * h).ln(), m1 / z, m2 / z)
}

#[test]
fn scale_orbit_matches_quadrature() {
    for (lambda, a, b) in [(0.0, 1.0, 1.0), (3.5, 0.2, 40.0), (-7.0, 12.0, 0.5), (40.0, 3.0, 1e3), (-0.3, 1e-3, 2e-2)] {
        let o = scale_orbit(lambda, a, b).unwrap();
        let (lv, m1, m2) = orbit_quadrature(lambda, a, b);
        assert!((o.log_value - lv).abs() < 1e-8, "{lambda} {a} {b}: {} {lv}", o.log_value);
        assert!((o.mean_exp / m1 - 1.0).abs() < 1e-8);
        assert!((o.mean_exp_neg / m2 - 1.0).abs() < 1e-8, "{lambda} {a} {b}: {} {m2}", o.mean_exp_neg);
    }
    // ∫ exp(u/2 − x cosh u) du = 2 K_{1/2}(x) = √(2π/x) e^{−x}
    let x: f64 = 3.0;
    let o = scale_orbit(0.5, x, x).unwrap();
    assert!((o.log_value - (0.5 * (2.0 * std::f64::consts::PI / x).ln() - x)).abs() < 1e-10);
    assert!(scale_orbit(1.0, 0.0, 1.0).is_err());
}

#[test]
fn marginal_density_is_constant_along_scale_orbits() {
    let mut r = rng(63);
    let target = iw_target(2, 3, 30, MetricKind::Orthogonalized, &mut r);
    let s = random_state(2, 3, &mut r);
    let base = target_eval(&target, &s).unwrap().0;
    for c in [0.1, 0.7, 3.0, 25.0] {
        let moved = SeparableState::new(s.sigma1.scaled(1.0 / c).unwrap(), s.sigma2.scaled(c).unwrap());
        let v = target_eval(&target, &moved).unwrap().0;
        assert!((v - base).abs() < 1e-8, "{c}: {v} {base}");
    }
}

#[test]
fn leapfrog_is_reversible() {
    let mut r = rng(64);
    for kind in KINDS {
        let target = iw_target(2, 3, 50, kind, &mut r);
        for _ in 0..3 {
            let s = start_for(kind, &mut r, 2, 3);
            let v = sample_velocity(kind, &s, &mut r).unwrap();
            let (s1, v1) = leapfrog(&target, 1.0, &s, &v, 0.05, 10).unwrap();
            let (s2, _) = leapfrog(&target, 1.0, &s1, &v1.scaled(-1.0), 0.05, 10).unwrap();
            assert!(state_dist(&s2, &s) < 1e-8, "{kind:?}: {}", state_dist(&s2, &s));
        }
    }
}

fn energy_error(target: &TargetDensity, s: &SeparableState, v: &TangentPair, eps: f64, steps: usize) -> f64 {
    let h0 = hamiltonian(target, 1.0, s, v).unwrap();
    let (s1, v1) = leapfrog(target, 1.0, s, v, eps, steps).unwrap();
    (hamiltonian(target, 1.0, &s1, &v1).unwrap() - h0).abs()
}

#[test]
fn energy_error_is_second_order() {
    let mut r = rng(65);
    for kind in KINDS {
        let target = iw_target(2, 3, 50, kind, &mut r);
        let mut ratios = Vec::new();
        for _ in 0..50 {
            let s = start_for(kind, &mut r, 2, 3);
            let v = sample_velocity(kind, &s, &mut r).unwrap();
            let coarse = energy_error(&target, &s, &v, 0.02, 10);
            let fine = energy_error(&target, &s, &v, 0.01, 20);
            ratios.push(coarse / fine);
        }
        let m = median(ratios);
        assert!((3.0..=5.0).contains(&m), "{kind:?}: {m}");
    }
}

#[test]
fn tiny_steps_conserve_energy() {
    let mut r = rng(66);
    for kind in KINDS {
        let target = iw_target(2, 3, 50, kind, &mut r);
        let s = start_for(kind, &mut r, 2, 3);
        let v = sample_velocity(kind, &s, &mut r).unwrap();
        assert!(energy_error(&target, &s, &v, 1e-5, 3) < 1e-8, "{kind:?}");
        let step = sglmc_step(&s, &target, 1e-5, LeapfrogPolicy::Fixed { steps: 3 }, &mut r).unwrap();
        assert!(step.accepted && step.accept_prob > 1.0 - 1e-8);
    }
}

#[test]
fn constrained_trajectories_stay_on_the_slice() {
    let mut r = rng(67);
    for kind in [MetricKind::Orthogonalized, MetricKind::Weighted { omega: 0.5 }] {
        let target = iw_target(2, 3, 50, kind, &mut r);
        let mut s = start_for(kind, &mut r, 2, 3);
        let mut v = sample_velocity(kind, &s, &mut r).unwrap();
        for _ in 0..20 {
            (s, v) = leapfrog(&target, 1.0, &s, &v, 0.05, 1).unwrap();
            assert!(s.sigma2.log_det().abs() < 1e-8);
            assert!(s.sigma2.solve(v.v2.matrix()).trace().abs() < 1e-9);
        }
    }
}

#[test]
fn step_rejects_bad_step_size() {
    let mut r = rng(68);
    let target = iw_target(2, 2, 10, MetricKind::Product, &mut r);
    let s = random_state(2, 2, &mut r);
    for eps in [0.0, -1.0, f64::NAN] {
        assert!(sglmc_step(&s, &target, eps, LeapfrogPolicy::default(), &mut r).is_err());
    }
}

#[test]
fn dual_averaging_settles_at_target() {
    let mut da = DualAveragingState::new(0.3);
    let mut tail = Vec::new();
    for m in 0..2000 {
        da.update(0.8, 0.8);
        if m >= 1900 {
            tail.push(da.log_eps_bar);
        }
    }
    let drift = tail.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - tail.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(drift < 1e-3, "{drift}");
}

#[test]
fn dual_averaging_feedback_sign() {
    for (accept, rising) in [(0.0, false), (1.0, true)] {
        let mut da = DualAveragingState::new(0.1);
        // the first update jumps toward the shrinkage point μ = log(10ε₀)
        let mut prev = da.update(accept, 0.8);
        for _ in 0..200 {
            let (next, eps) = dual_averaging_update(&da, accept, 0.8);
            assert!(if rising { eps > prev } else { eps < prev });
            prev = eps;
            da = next;
        }
    }
}

#[test]
fn dynamic_termination_examples() {
    let mut r = rng(69);
    let s = random_state(2, 3, &mut r);
    let v = random_velocity(&s, &mut r).scaled(0.3);
    for kind in KINDS {
        assert!(dynamic_termination(&s, &s, &v, kind));
    }

    // scalar factors: sign of v·(log σₜ − log σ₀)
    let start = SeparableState::new(SpdMatrix::from_diagonal(&[1.7]).unwrap(), SpdMatrix::identity(1));
    for (sigma, vel) in [(2.5, 0.3), (2.5, -0.3), (0.4, 0.3), (0.4, -0.3)] {
        let cur = SeparableState::new(SpdMatrix::from_diagonal(&[sigma]).unwrap(), SpdMatrix::identity(1));
        let v = TangentPair::new(TangentVector::new(DenseMatrix::from_element(1, 1, vel)).unwrap(), TangentVector::zeros(1));
        let expect = vel * (sigma.ln() - 1.7f64.ln()) >= 0.0;
        assert_eq!(dynamic_termination(&start, &cur, &v, MetricKind::Product), expect);
    }

    // along a single geodesic the velocity keeps pointing away from the start
    for kind in KINDS {
        for t in [0.1, 0.5, 1.0, 3.0, 10.0] {
            let (s1, w1) = geodesic_flow(&s.sigma1, &v.v1, t).unwrap();
            let (s2, w2) = geodesic_flow(&s.sigma2, &v.v2, t).unwrap();
            let cur = SeparableState::new(s1, s2);
            assert!(dynamic_termination(&s, &cur, &TangentPair::new(w1, w2), kind), "{kind:?} {t}");
        }
    }
}

fn random_velocity(s: &SeparableState, r: &mut ChaCha8Rng) -> TangentPair {
    LocalMetric::new(MetricKind::Product, s).unwrap().sample_velocity(r).unwrap()
}

#[test]
fn swap_examples() {
    let mut r = rng(70);
    for _ in 0..100 {
        assert!(swap_accept(3.0, 3.0, 0.5, 1.0, &mut r));
        assert!(swap_accept(1.0, 7.0, 0.8, 0.8, &mut r));
    }
    let (hi, hj, ci, cj) = (2.0, 3.0, 0.5, 1.0);
    let p = swap_log_ratio(hi, hj, ci, cj).exp().min(1.0);
    let trials = 100_000;
    let hits = (0..trials).filter(|_| swap_accept(hi, hj, ci, cj, &mut r)).count();
    let freq = hits as f64 / trials as f64;
    assert!((freq - p).abs() < 0.02 * p, "{freq} {p}");
    assert!(!accept_log_ratio(f64::NAN, &mut r));
}

fn gibbs_target(d1: usize, d2: usize, data: Dataset) -> TargetDensity {
    let p1 = PriorSpec::default_inference(d1, 5.0).unwrap();
    let p2 = PriorSpec::default_inference(d2, 5.0).unwrap();
    TargetDensity::new(data, p1, p2, MetricKind::Product).unwrap()
}

fn mean_of(draws: &[DenseMatrix]) -> DenseMatrix {
    draws.iter().fold(DenseMatrix::zeros(draws[0].nrows(), draws[0].ncols()), |a, b| a + b) / draws.len() as f64
}

#[test]
fn gibbs_conditional_mean() {
    let mut r = rng(71);
    let (d1, d2, n) = (2, 3, 20);
    let truth = random_state(d1, d2, &mut r);
    let ys: Vec<DenseVector> = (0..n)
        .map(|_| {
            let z = random_matrix(d2, d1, &mut r);
            let y = truth.sigma2.cholesky().l() * z * truth.sigma1.cholesky().l().transpose();
            DenseVector::from_column_slice(y.as_slice())
        })
        .collect();
    let target = gibbs_target(d1, d2, Dataset::from_observations(&ys, d1, d2).unwrap());
    let fixed = random_state(d1, d2, &mut r);
    let inv2 = fixed.sigma2.inverse();
    let mut scale = match &target.prior1 {
        PriorSpec::InverseWishart { scale, .. } => scale.matrix().clone(),
        _ => unreachable!(),
    };
    for y in &ys {
        let y = DenseMatrix::from_column_slice(d2, d1, y.as_slice());
        scale += y.transpose() * &inv2 * &y;
    }
    let nu = match &target.prior1 {
        PriorSpec::InverseWishart { nu, .. } => nu + (d2 * n) as f64,
        _ => unreachable!(),
    };
    let expect = scale / (nu - d1 as f64 - 1.0);
    let draws: Vec<_> = (0..100_000).map(|_| gibbs_step(&fixed, &target, &mut r).unwrap().sigma1.into_matrix()).collect();
    assert!(rel_err(&mean_of(&draws), &expect) < 0.05);
}

#[test]
fn gibbs_without_data_draws_from_prior() {
    let mut r = rng(72);
    let target = gibbs_target(2, 2, Dataset::empty(2, 2));
    let (nu, t) = match &target.prior1 {
        PriorSpec::InverseWishart { nu, scale } => (*nu, scale.matrix().clone()),
        _ => unreachable!(),
    };
    let fixed = random_state(2, 2, &mut r);
    let draws: Vec<_> = (0..100_000).map(|_| gibbs_step(&fixed, &target, &mut r).unwrap().sigma1.into_matrix()).collect();
    assert!(rel_err(&mean_of(&draws), &(t / (nu - 3.0))) < 0.05);
}

#[test]
fn gibbs_scalar_conditional_is_inverse_gamma() {
    let mut r = rng(73);
    let ys: Vec<DenseVector> = [0.3, -1.2, 2.2, 0.7, -0.1, 1.5].iter().map(|&y| DenseVector::from_element(1, y)).collect();
    let target = gibbs_target(1, 1, Dataset::from_observations(&ys, 1, 1).unwrap());
    let (nu, t) = match &target.prior1 {
        PriorSpec::InverseWishart { nu, scale } => (*nu, scale.matrix()[(0, 0)]),
        _ => unreachable!(),
    };
    let sigma2 = 1.6;
    let fixed = SeparableState::new(SpdMatrix::identity(1), SpdMatrix::from_diagonal(&[sigma2]).unwrap());
    // IG(shape (ν + n)/2, scale (t + Σy²/σ₂)/2)
    let shape = 0.5 * (nu + ys.len() as f64);
    let rate = 0.5 * (t + ys.iter().map(|y| y[0] * y[0]).sum::<f64>() / sigma2);
    let (mean, var) = (rate / (shape - 1.0), rate * rate / ((shape - 1.0).powi(2) * (shape - 2.0)));
    let draws = 100_000;
    let xs: Vec<f64> = (0..draws).map(|_| gibbs_step(&fixed, &target, &mut r).unwrap().sigma1.matrix()[(0, 0)]).collect();
    let m = xs.iter().sum::<f64>() / draws as f64;
    assert!((m - mean).abs() < 4.0 * (var / draws as f64).sqrt(), "{m} {mean}");
}

#[test]
fn gibbs_requires_conjugate_priors() {
    let mut r = rng(74);
    let p = PriorSpec::siw_moment_matched(2, 5.0).unwrap();
    let target = TargetDensity::new(random_dataset(2, 2, 5, &mut r), p.clone(), p, MetricKind::Product).unwrap();
    assert!(gibbs_step(&SeparableState::identity(2, 2), &target, &mut r).is_err());
    assert!(run_gibbs(&SamplerConfig::default(), &target, &Init::FlipFlop).is_err());
}

fn short_config(seed: u64) -> SamplerConfig {
    SamplerConfig { n_adapt: 30, n_burn: 10, n_samples: 40, seed, ..Default::default() }
}

fn csv_of(out: &ChainOutput) -> String {
    let rows: Vec<_> = out.samples.iter().enumerate().map(|(i, s)| ChainRow::from_sample(i, s).unwrap()).collect();
    write_chains_csv(&rows)
}

#[test]
fn chains_are_deterministic() {
    let mut r = rng(75);
    let target = iw_target(2, 3, 30, MetricKind::Orthogonalized, &mut r);
    let a = run_chain(&short_config(9), &target, &Init::FlipFlop).unwrap();
    let b = run_chain(&short_config(9), &target, &Init::FlipFlop).unwrap();
    assert_eq!(csv_of(&a), csv_of(&b));
    assert_eq!(a.samples.len(), 40);
    for s in &a.samples {
        assert!(s.state.sigma2.log_det().abs() < 1e-8);
    }
    let c = run_chain(&short_config(10), &target, &Init::FlipFlop).unwrap();
    assert_ne!(csv_of(&a), csv_of(&c));
    let g1 = run_gibbs(&short_config(9), &target, &Init::FlipFlop).unwrap();
    let g2 = run_gibbs(&short_config(9), &target, &Init::FlipFlop).unwrap();
    assert_eq!(csv_of(&g1), csv_of(&g2));
}

#[test]
fn zero_samples_is_empty() {
    let mut r = rng(76);
    let target = iw_target(2, 2, 10, MetricKind::Product, &mut r);
    let cfg = SamplerConfig { n_samples: 0, ..short_config(1) };
    assert!(run_chain(&cfg, &target, &Init::FlipFlop).unwrap().samples.is_empty());
    assert!(run_gibbs(&cfg, &target, &Init::FlipFlop).unwrap().samples.is_empty());
}

#[test]
fn unit_ladder_matches_untempered_chain() {
    let mut r = rng(77);
    let target = iw_target(2, 2, 20, MetricKind::Regularized { alpha: 0.95 }, &mut r);
    let plain = run_chain(&short_config(3), &target, &Init::FlipFlop).unwrap();
    let cfg = SamplerConfig { tempering: Tempering::On { n_chains: 3, c1: 1.0 }, ..short_config(3) };
    let tempered = run_chain(&cfg, &target, &Init::FlipFlop).unwrap();
    assert_eq!(csv_of(&plain), csv_of(&tempered));
    assert_eq!(tempered.swaps_proposed, 70 + 10);
}

#[test]
fn tempered_and_dynamic_runs_complete() {
    let mut r = rng(78);
    let target = iw_target(2, 2, 20, MetricKind::Weighted { omega: 0.5 }, &mut r);
    let cfg = SamplerConfig {
        tempering: Tempering::On { n_chains: 4, c1: 0.5 },
        leapfrog: LeapfrogPolicy::Dynamic { max_steps: 30 },
        ..short_config(4)
    };
    let out = run_chain(&cfg, &target, &Init::FlipFlop).unwrap();
    assert_eq!(out.samples.len(), 40);
    assert!(out.swaps_accepted > 0);
    assert!(out.samples.iter().all(|s| s.steps >= 1 && s.steps <= 30));
}

#[test]
fn config_validation() {
    for bad in [
        SamplerConfig { target_accept: 1.0, ..Default::default() },
        SamplerConfig { epsilon0: Some(0.0), ..Default::default() },
        SamplerConfig { leapfrog: LeapfrogPolicy::Fixed { steps: 0 }, ..Default::default() },
        SamplerConfig { tempering: Tempering::On { n_chains: 1, c1: 0.5 }, ..Default::default() },
    ] {
        assert!(bad.validate().is_err(), "{bad:?}");
    }
}
