mod common;

use apstat::aperiodicity::{certify_ap, marginal_displacement, scan_function, CertifyOptions, ProcessSpec};
use apstat::clt::{asymptotic_cov, MAProcessSpec};
use apstat::kernel::{KernelSpec, Profile, Section};
use apstat::levy::{JumpMeasure, LevyTriplet, QuadSpec};
use apstat::metrics::{
    bounded_lipschitz, gamma_from_grids, gamma_metric, prokhorov, wasserstein_1d, CharFnGrid, EmpiricalMeasure,
    GammaOptions,
};
use apstat::rearrange::{geometric_levels, DistFn, Part};
use apstat::simulate::{mean_var, ou_ensemble, path_rng, sample_increments, OuOptions, SimOptions};
use apstat::trig::TrigPolynomial;
use common::*;
use proptest::prelude::*;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn section_from(seed: u64) -> Section {
    random_section(&mut ChaCha8Rng::seed_from_u64(seed))
}

fn measure() -> impl Strategy<Value = EmpiricalMeasure> {
    proptest::collection::vec((-2.0..2.0f64, 0.1..1.0f64), 1..5).prop_map(|v| {
        let s: f64 = v.iter().map(|p| p.1).sum();
        EmpiricalMeasure::new(v.iter().map(|p| vec![p.0]).collect(), v.iter().map(|p| p.1 / s).collect()).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn distribution_functions_decrease(seed in 0u64..10_000) {
        let f = section_from(seed);
        let d = DistFn::of_section(&f, Part::Abs, None).unwrap();
        prop_assert!(d.values.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn distribution_of_sums(seed in 0u64..10_000) {
        let f = section_from(seed);
        let g = section_from(seed + 17);
        let h = Section::combination(&[1.0, 1.0], &[f.clone(), g.clone()]).unwrap();
        let (df, dg, dh) = (
            DistFn::of_section(&f, Part::Abs, None).unwrap(),
            DistFn::of_section(&g, Part::Abs, None).unwrap(),
            DistFn::of_section(&h, Part::Abs, None).unwrap(),
        );
        for a in geometric_levels(1e-3, 4.0, 40) {
            prop_assert!(dh.eval(a) <= df.eval(a / 2.0) + dg.eval(a / 2.0) + 1e-9, "α = {}", a);
        }
    }

    #[test]
    fn distribution_under_dilation(seed in 0u64..10_000, c in 0.2..5.0f64) {
        let f = section_from(seed);
        let Section::Profile { profile, amp, scale, shift } = f.clone() else { unreachable!() };
        let g = Section::Profile { profile, amp, scale: scale * c, shift };
        let df = DistFn::of_section(&f, Part::Abs, None).unwrap();
        let dg = DistFn::of_section(&g, Part::Abs, None).unwrap();
        for a in geometric_levels(1e-3, 2.0, 30) {
            prop_assert!((dg.eval(a) - df.eval(a) / c).abs() <= 1e-10 * (1.0 + df.eval(a)));
        }
    }

    #[test]
    fn metric_symmetry_and_identity(a in measure(), b in measure()) {
        let g = GammaOptions::default();
        prop_assert_eq!(bounded_lipschitz(&a, &a).unwrap(), 0.0);
        prop_assert!(prokhorov(&a, &a).unwrap() <= 1e-12);
        prop_assert_eq!(wasserstein_1d(&a, &a).unwrap(), 0.0);
        prop_assert_eq!(gamma_metric(&a, &a, &g).unwrap().value, 0.0);
        prop_assert!((bounded_lipschitz(&a, &b).unwrap() - bounded_lipschitz(&b, &a).unwrap()).abs() <= 1e-9);
        prop_assert!((prokhorov(&a, &b).unwrap() - prokhorov(&b, &a).unwrap()).abs() <= 1e-9);
        prop_assert!((wasserstein_1d(&a, &b).unwrap() - wasserstein_1d(&b, &a).unwrap()).abs() <= 1e-12);
        prop_assert!((gamma_metric(&a, &b, &g).unwrap().value - gamma_metric(&b, &a, &g).unwrap().value).abs() <= 1e-12);
    }

    #[test]
    fn tail_term_decreases_in_r(seed in 0u64..10_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_section(&mut rng);
        let t = LevyTriplet::new(0.0, 0.0, JumpMeasure::atoms(&random_atoms(&mut rng, 3, 8.0)).unwrap()).unwrap();
        let d = DistFn::of_section(&f, Part::Abs, None).unwrap();
        let vals: Vec<f64> = [1.1, 1.5, 2.0, 3.0, 5.0, 8.0, 20.0].iter().map(|&r| t.tail_term(&d, r).unwrap()).collect();
        prop_assert!(vals.windows(2).all(|w| w[1] <= w[0] + 1e-12), "{:?}", vals);
    }

    #[test]
    fn asymptotic_variance_is_nonnegative(lo in 0.0..0.5f64, len in 0.1..0.5f64, c0 in -1.0..1.0f64, a in -1.0..1.0f64, w in 0.1..4.0f64) {
        let h = Profile::Indicator { lo, hi: lo + len, height: 1.0 };
        let mut spec = MAProcessSpec::new(h, LevyTriplet::gaussian(1.0, 0.0), 1.0).unwrap();
        spec.u = Some(TrigPolynomial::constant(c0).with_term(a, w, 0.3));
        prop_assert!(asymptotic_cov(&spec, None).unwrap().v_inf2 >= -1e-12);
    }

    #[test]
    fn scans_vanish_at_zero(c0 in -2.0..0.0f64, a in -1.0..1.0f64, w in 0.2..3.0f64) {
        let mu = TrigPolynomial::constant(c0).with_term(a, w, 0.0);
        let p = scan_function(&mu, 0.1, 10.0, None).unwrap();
        prop_assert_eq!(p.d[0], 0.0);
    }
}

#[test]
fn marginal_displacement_vanishes_at_zero() {
    let p = ProcessSpec {
        kernel: KernelSpec::Ou { mu: TrigPolynomial::constant(-1.0).with_term(0.3, 1.0, 0.0) },
        triplet: LevyTriplet::new(0.5, 0.1, JumpMeasure::atoms(&[(1.0, 0.5)]).unwrap()).unwrap(),
    };
    let d = marginal_displacement(&p, 0.0, &[0.0, 0.5], &[0.0], 2.0, 8, &QuadSpec::default()).unwrap();
    assert_eq!(d, 0.0);
}

#[test]
fn metrics_shrink_with_the_measure() {
    // uniform laws on l points of [-1/l, 1/l] against the Dirac mass at 0
    let delta = EmpiricalMeasure::dirac(vec![0.0]);
    let mut prev = [f64::INFINITY; 4];
    for l in [2usize, 4, 8, 16, 32] {
        let h = 1.0 / l as f64;
        let pts: Vec<f64> = (0..l).map(|i| -h + (2 * i + 1) as f64 * h / l as f64).collect();
        let mu = EmpiricalMeasure::from_samples(&pts);
        let v = [
            gamma_metric(&mu, &delta, &GammaOptions::default()).unwrap().value,
            bounded_lipschitz(&mu, &delta).unwrap(),
            prokhorov(&mu, &delta).unwrap(),
            wasserstein_1d(&mu, &delta).unwrap(),
        ];
        for (a, b) in v.iter().zip(&prev) {
            assert!(a <= b, "{v:?} after {prev:?}");
        }
        prev = v;
    }
    assert!(prev.iter().all(|&x| x < 0.1), "{prev:?}");
}

#[test]
fn increment_streams_are_bit_identical() {
    let t = LevyTriplet::new(0.5, 0.2, JumpMeasure::atoms(&[(1.5, 2.0), (-0.3, 1.0)]).unwrap()).unwrap();
    let a = sample_increments(&t, 0.0, 0.01, 500, &SimOptions::default(), &mut path_rng(9, 3)).unwrap();
    let b = sample_increments(&t, 0.0, 0.01, 500, &SimOptions::default(), &mut path_rng(9, 3)).unwrap();
    assert_eq!(a, b);
    let mu = TrigPolynomial::constant(-1.0).with_term(0.5, 1.0, 0.0);
    let opts = OuOptions { t0: 0.0, dt: 0.01, steps: 100, burn_in: None, tail_tol: 1e-6, sim: SimOptions::default() };
    assert_eq!(ou_ensemble(&mu, &t, &opts, 4, 1).unwrap(), ou_ensemble(&mu, &t, &opts, 4, 1).unwrap());
}

#[test]
fn stationary_ou_law_for_other_coefficients() {
    let mu = TrigPolynomial::constant(-2.0);
    let t = LevyTriplet::gaussian(0.6, 0.0);
    let opts = OuOptions { t0: 0.0, dt: 0.01, steps: 0, burn_in: None, tail_tol: 1e-6, sim: SimOptions::default() };
    let x: Vec<f64> = ou_ensemble(&mu, &t, &opts, 10_000, 2).unwrap().iter().map(|p| p.values[0]).collect();
    let (m, v) = mean_var(&x);
    let target = 0.6 / 4.0;
    assert!(m.abs() < 3.0 * (target / 1e4f64).sqrt());
    assert!((v - target).abs() < 3.0 * target * (2.0 / 1e4f64).sqrt(), "{v}");
}

#[test]
fn refining_the_grid_is_stable() {
    let mu = TrigPolynomial::constant(-1.0).with_term(0.5, 1.0, 0.0);
    let t = LevyTriplet::new(0.5, 0.0, JumpMeasure::atoms(&[(1.0, 0.5), (-1.0, 0.5)]).unwrap()).unwrap();
    let stats = |dt: f64, seed| {
        let opts = OuOptions { t0: 0.0, dt, steps: 0, burn_in: None, tail_tol: 1e-6, sim: SimOptions::default() };
        let x: Vec<f64> = ou_ensemble(&mu, &t, &opts, 5_000, seed).unwrap().iter().map(|p| p.values[0]).collect();
        mean_var(&x)
    };
    let (m1, v1) = stats(0.02, 1);
    let (m2, v2) = stats(0.01, 2);
    let se_m = ((v1 + v2) / 5e3).sqrt();
    let se_v = (v1 + v2) * (2.0 / 5e3f64).sqrt();
    assert!((m1 - m2).abs() < 3.0 * se_m, "{m1} vs {m2}");
    assert!((v1 - v2).abs() < 3.0 * se_v, "{v1} vs {v2}");
}

#[test]
fn certificate_bounds_the_metric() {
    let mu = TrigPolynomial::constant(-1.0).with_term(0.5, 1.0, 0.0);
    let p = ProcessSpec { kernel: KernelSpec::Ou { mu: mu.clone() }, triplet: LevyTriplet::gaussian(1.0, 0.0) };
    let mut opts = CertifyOptions::new(vec![0.2], 2.0 * std::f64::consts::PI + 0.5);
    opts.tau_step = Some(0.05);
    let spec = QuadSpec::default();
    let r = certify_ap(&p, &opts, &spec).unwrap();
    let nodes = CharFnGrid::box_nodes(1, opts.gamma_boxes, opts.per_axis);
    for c in &r.levels[0].clusters {
        let phi = |x: f64| {
            let s = [p.kernel.section(x).unwrap()];
            CharFnGrid::tabulate(nodes.clone(), |z| p.triplet.eval_integral_exponent(&s, z, &spec).unwrap().value.exp())
        };
        let g = gamma_from_grids(&phi(0.0), &phi(c.tau), opts.gamma_boxes).unwrap();
        assert!(g.value + g.tail <= c.gamma_bound + 1e-9, "τ = {}: {} > {}", c.tau, g.value + g.tail, c.gamma_bound);
    }
}
