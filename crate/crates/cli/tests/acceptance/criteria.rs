use std::f64::consts::PI;

use crate::common::*;
use apstat::aperiodicity::{certify_ap, marginal_displacement, CertifyOptions, ProcessSpec};
use apstat::bounds::{exponent_diff_bound, kyfan_bound_ir, KyFanVariant, McSpec};
use apstat::clt::{ap_modulated_ma, clt_experiment, MAProcessSpec};
use apstat::kernel::{uniform_grid, KernelSpec, Profile, Section};
use apstat::levy::{JumpMeasure, LevyTriplet, QuadSpec};
use apstat::metrics::{
    bounded_lipschitz, gamma_metric, ky_fan, prokhorov, wasserstein_1d, EmpiricalMeasure, GammaOptions,
};
use apstat::quad::QuadOptions;
use apstat::rearrange::{layer_cake_norm, DistFn, Part};
use apstat::simulate::{
    mean_var, ou_ensemble, ou_from_increments, path_rng, recursion_residual, sample_increments, OuOptions, SimOptions,
};
use apstat::trig::TrigPolynomial;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub struct Outcome {
    pub pass: bool,
    pub detail: String,
}

pub fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

pub fn gamma_two_diracs() -> Outcome {
    let a = EmpiricalMeasure::dirac(vec![0.0]);
    let b = EmpiricalMeasure::dirac(vec![1.0]);
    let got = gamma_metric(&a, &b, &GammaOptions::default()).unwrap().value;
    // |e^{iz} - 1| = 2|sin(z/2)|, whose sup on [-k, k] is 2 sin(k/2) below π and 2 after
    let series: f64 = (1..=40)
        .map(|k| {
            let k = k as f64;
            let sup = if k / 2.0 < PI / 2.0 { 2.0 * (k / 2.0).sin() } else { 2.0 };
            sup * 0.5f64.powf(k)
        })
        .sum();
    let pass = (got - series).abs() < 1e-3 && (series - 1.39953).abs() < 1e-5;
    outcome(pass, format!("gamma = {got:.6}, series = {series:.6}"))
}

pub fn layer_cake() -> Outcome {
    let u = TrigPolynomial::constant(1.5).with_term(0.5, 1.0, 0.2);
    let profiles = [
        Profile::Indicator { lo: -0.5, hi: 1.2, height: 0.8 },
        Profile::Exponential { start: 0.3, rate: 1.7, height: 1.2 },
        Profile::Gaussian { center: 0.4, width: 0.7, height: 1.1 },
    ];
    let mut kernels = Vec::new();
    for g in &profiles {
        kernels.push(KernelSpec::Static { g: g.clone() });
        kernels.push(KernelSpec::Separable { u: u.clone(), g: g.clone() });
        kernels.push(KernelSpec::Translate { u: u.clone(), g: g.clone() });
        kernels.push(KernelSpec::Dilate { u: u.clone(), g: g.clone() });
        kernels.push(KernelSpec::MovingAverage { g: g.clone() });
    }
    kernels.push(KernelSpec::Ou { mu: TrigPolynomial::constant(-1.0).with_term(0.5, 2.0 * PI, 0.0) });
    kernels.push(KernelSpec::Ou {
        mu: TrigPolynomial::constant(-1.0).with_term(0.3, 1.0, 0.0).with_term(0.3, 2f64.sqrt(), 0.0),
    });
    let opts = QuadOptions::default().with_rel_tol(1e-12).with_abs_tol(1e-14);
    let mut worst = 0.0f64;
    let mut cases = 0;
    for k in &kernels {
        for t in [0.0, 0.7, 2.3] {
            let s = k.section(t).unwrap();
            let d = DistFn::of_section(&s, Part::Abs, None).unwrap();
            for p in [1.0, 2.0] {
                let a = layer_cake_norm(&d, p).unwrap();
                let b = s.lp_norm(p, &opts).unwrap();
                worst = worst.max((a - b).abs());
                cases += 1;
            }
        }
    }
    outcome(worst < 1e-6, format!("{cases} cases, max |difference| = {worst:.2e}"))
}

pub fn bound_domination() -> Outcome {
    let spec = QuadSpec::default();
    let eq = exponent_diff_bound(
        "eq",
        &[indicator(0.0, 1.0)],
        &[indicator(0.0, 2.0)],
        &LevyTriplet::gaussian(1.0, 0.0),
        &[1.0],
        2.0,
        &spec,
    )
    .unwrap();
    let equality = (eq.lhs - 0.5).abs() < 1e-10 && (eq.rhs - 0.5).abs() < 1e-10;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = f64::INFINITY;
    let mut count = 0;
    let mut skipped = 0;
    while count < 100 {
        let n = rng.random_range(1..=2);
        let f: Vec<Section> = (0..n).map(|_| random_section(&mut rng)).collect();
        let g: Vec<Section> = (0..n).map(|_| random_section(&mut rng)).collect();
        let z: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        let t = random_triplet(&mut rng);
        let r = rng.random_range(1.2..6.0);
        let rep = exponent_diff_bound(&format!("c{count}"), &f, &g, &t, &z, r, &spec).unwrap();
        if !rep.hypotheses_met {
            skipped += 1;
            continue;
        }
        count += 1;
        worst = worst.min(rep.margin / (1.0 + rep.rhs));
    }
    let pass = equality && worst >= -1e-8;
    outcome(
        pass,
        format!(
            "equality lhs = {:.12}, rhs = {:.12}; min margin/(1+rhs) = {worst:.3e} over 100 cases ({skipped} inadmissible redrawn)",
            eq.lhs, eq.rhs
        ),
    )
}

pub fn ky_fan_bound() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mc = |seed| McSpec { n_paths: 10_000, seed, ..McSpec::default() };
    let mut lines = Vec::new();
    let mut pass = true;
    let gauss = kyfan_bound_ir(
        "gaussian",
        &indicator(0.0, 1.0),
        &indicator(0.0, 1.001),
        &LevyTriplet::gaussian(1.0, 0.0),
        2.0,
        KyFanVariant::Truncated,
        &mc(0),
    )
    .unwrap();
    pass &= (gauss.rhs - 0.1913).abs() < 1e-4 && gauss.margin >= gauss.lhs_error;
    lines.push(format!("gaussian: ky-fan {:.4} vs bound {:.4}", gauss.lhs, gauss.rhs));
    let mut tightest = f64::INFINITY;
    let mut informative = 0;
    for case in 1..20 {
        let f = random_section(&mut rng);
        let g = perturb(&f, &mut rng, 0.02);
        let a = rng.random_range(0.0..1.0);
        let k = rng.random_range(0..3);
        let atoms = random_atoms(&mut rng, k, 3.0);
        let t = LevyTriplet::new(a, rng.random_range(-0.3..0.3), JumpMeasure::atoms(&atoms).unwrap()).unwrap();
        let variant = if case % 2 == 0 { KyFanVariant::FirstMoment } else { KyFanVariant::Truncated };
        let rep = kyfan_bound_ir(&format!("c{case}"), &f, &g, &t, 2.0, variant, &mc(case as u64)).unwrap();
        if !rep.hypotheses_met {
            pass = false;
            lines.push(format!("c{case}: hypotheses unmet"));
            continue;
        }
        if rep.rhs < 1.0 {
            informative += 1;
        }
        tightest = tightest.min(rep.margin - rep.lhs_error);
        pass &= rep.margin >= rep.lhs_error;
    }
    lines.push(format!(
        "min slack beyond the DKW width over 19 random cases = {tightest:.4} ({informative} with bound < 1)"
    ));
    outcome(pass, lines.join("; "))
}

pub fn ou_sanity() -> Outcome {
    let mu = TrigPolynomial::constant(-1.0);
    let t = LevyTriplet::gaussian(1.0, 0.0);
    let opts = OuOptions { t0: 0.0, dt: 0.01, steps: 0, burn_in: None, tail_tol: 1e-6, sim: SimOptions::default() };
    let paths = ou_ensemble(&mu, &t, &opts, 10_000, 42).unwrap();
    let x: Vec<f64> = paths.iter().map(|p| p.values[0]).collect();
    let (_, var) = mean_var(&x);
    let se = var * (2.0 / (x.len() - 1) as f64).sqrt();
    let var_ok = (var - 0.5).abs() <= 3.0 * se;

    // residual over [0, 1] on three nested grids driven by the same increments
    let mut totals = [0.0; 3];
    for p in 0..50u64 {
        let fine = sample_increments(&t, 0.0, 0.0025, 400, &SimOptions::default(), &mut path_rng(7, p)).unwrap();
        for (level, factor) in [4usize, 2, 1].into_iter().enumerate() {
            let s = fine.coarsen(factor).unwrap();
            let values = ou_from_increments(&mu, &s, 0.3);
            totals[level] += recursion_residual(&mu, &s, &values).unwrap();
        }
    }
    let r1 = totals[0] / totals[1];
    let r2 = totals[1] / totals[2];
    let order_ok = r1 >= 2.0 && r2 >= 2.0;
    outcome(
        var_ok && order_ok,
        format!("variance {var:.4} ± {se:.4} (target 0.5); residual ratios {r1:.2}, {r2:.2} (need ≥ 2)"),
    )
}

pub fn periodic_certificate() -> Outcome {
    let p = ProcessSpec {
        kernel: KernelSpec::Ou { mu: TrigPolynomial::constant(-1.0).with_term(0.5, 2.0 * PI, 0.0) },
        triplet: LevyTriplet::gaussian(1.0, 0.0),
    };
    let xs = uniform_grid(0.0, 1.0, 21);
    let d = marginal_displacement(&p, 1.0, &xs, &[0.0, 0.3], 3.0, 64, &QuadSpec::default()).unwrap();
    outcome(d < 1e-6, format!("D(1) = {d:.3e}"))
}

pub fn almost_periodic_certificate() -> Outcome {
    let p = ProcessSpec {
        kernel: KernelSpec::Ou {
            mu: TrigPolynomial::constant(-1.0).with_term(0.3, 1.0, 0.0).with_term(0.3, 2f64.sqrt(), 0.0),
        },
        triplet: LevyTriplet::gaussian(1.0, 0.0),
    };
    let spec = QuadSpec::default();
    let gap = |w: f64| {
        let r = certify_ap(&p, &CertifyOptions::new(vec![0.05], w), &spec).unwrap();
        (r.levels[0].found.len(), r.levels[0].max_gap)
    };
    let (n1, g1) = gap(200.0);
    let (n2, g2) = gap(400.0);
    match (g1, g2) {
        (Some(a), Some(b)) => {
            let change = (b - a).abs() / a;
            outcome(
                change < 0.1,
                format!(
                    "window 200: {n1} shifts, max gap {a:.3}; window 400: {n2} shifts, max gap {b:.3}; change {:.1}%",
                    100.0 * change
                ),
            )
        }
        _ => outcome(false, format!("found sets too small: {n1} and {n2} shifts")),
    }
}

pub fn clt() -> Outcome {
    let h = Profile::Indicator { lo: 0.0, hi: 1.0, height: 1.0 };
    let spec = MAProcessSpec::new(h, LevyTriplet::gaussian(1.0, 0.0), 1.0).unwrap();
    let plain = clt_experiment(&spec, &[200.0], 2000, 11).unwrap();
    let row = &plain.rows[0];
    let plain_ok = (plain.profile.v_inf2 - 1.0).abs() < 1e-6 && row.ks_stat < 0.05 && (0.9..=1.1).contains(&row.var_s);
    let modulated = ap_modulated_ma(&spec, TrigPolynomial::constant(0.0).with_term(1.0, 1.0, 0.0)).unwrap();
    let m = clt_experiment(&modulated, &[200.0], 2000, 12).unwrap();
    let target = 1.0 - 1f64.cos();
    let mrow = &m.rows[0];
    let mod_ok = (m.profile.v_inf2 - target).abs() < 1e-6 && (mrow.var_s - target).abs() <= 0.1 * target;
    outcome(
        plain_ok && mod_ok,
        format!(
            "KS {:.4}, Var(S) {:.4}; modulated Var(S) {:.4} vs {target:.4} (KS {:.4})",
            row.ks_stat, row.var_s, mrow.var_s, mrow.ks_stat
        ),
    )
}

fn random_measure<R: Rng>(rng: &mut R, n: usize) -> EmpiricalMeasure {
    let k = rng.random_range(1..=5);
    let points = (0..k).map(|_| (0..n).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
    let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.1..1.0)).collect();
    let s: f64 = raw.iter().sum();
    EmpiricalMeasure::new(points, raw.iter().map(|w| w / s).collect()).unwrap()
}

pub fn metric_axioms() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let gopts = GammaOptions::default();
    let mut worst: [f64; 5] = [f64::NEG_INFINITY; 5];
    let mut dominance = f64::NEG_INFINITY;
    for case in 0..50 {
        let n = if case % 2 == 0 { 1 } else { 2 };
        let ms: Vec<EmpiricalMeasure> = (0..3).map(|_| random_measure(&mut rng, n)).collect();
        let pairs = [(0, 2), (0, 1), (1, 2)];
        let mut tri = |slot: usize, d: &dyn Fn(&EmpiricalMeasure, &EmpiricalMeasure) -> f64| {
            let v: Vec<f64> = pairs.iter().map(|&(i, j)| d(&ms[i], &ms[j])).collect();
            worst[slot] = worst[slot].max(v[0] - v[1] - v[2]);
        };
        tri(0, &|a, b| gamma_metric(a, b, &gopts).unwrap().value);
        tri(1, &|a, b| bounded_lipschitz(a, b).unwrap());
        tri(2, &|a, b| prokhorov(a, b).unwrap());
        if n == 1 {
            tri(3, &|a, b| wasserstein_1d(a, b).unwrap());
        }
        // Ky-Fan on coupled samples X, Y, Z over a common index
        let draws: Vec<Vec<f64>> = (0..3).map(|_| (0..200).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let y: Vec<f64> = draws[0].iter().zip(&draws[1]).map(|(a, b)| a + 0.1 * b).collect();
        let z: Vec<f64> = y.iter().zip(&draws[2]).map(|(a, b)| a + 0.2 * b).collect();
        let kf = ky_fan(&draws[0], &z).unwrap() - ky_fan(&draws[0], &y).unwrap() - ky_fan(&y, &z).unwrap();
        worst[4] = worst[4].max(kf);

        let g = gamma_metric(&ms[0], &ms[1], &gopts).unwrap();
        let beta = bounded_lipschitz(&ms[0], &ms[1]).unwrap();
        dominance = dominance.max(g.value - (2.0 + 4.0 * (n as f64).sqrt()) * beta - g.tail);
    }
    let pass = worst.iter().all(|&w| w <= 1e-9) && dominance <= 1e-9;
    outcome(
        pass,
        format!(
            "max triangle excess gamma {:.1e}, BL {:.1e}, Prokhorov {:.1e}, W1 {:.1e}, Ky-Fan {:.1e}; max dominance excess {dominance:.3}",
            worst[0], worst[1], worst[2], worst[3], worst[4]
        ),
    )
}
