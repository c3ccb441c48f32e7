#![allow(dead_code)]

use apstat::kernel::{Profile, Section};
use apstat::levy::{JumpMeasure, LevyTriplet};
use rand::Rng;

pub fn indicator(lo: f64, hi: f64) -> Section {
    Section::from(Profile::Indicator { lo, hi, height: 1.0 })
}

pub fn random_profile<R: Rng>(rng: &mut R) -> Profile {
    match rng.random_range(0..3) {
        0 => {
            let lo = rng.random_range(-1.0..1.0);
            Profile::Indicator { lo, hi: lo + rng.random_range(0.2..2.0), height: rng.random_range(0.2..1.5) }
        }
        1 => Profile::Exponential {
            start: rng.random_range(-1.0..1.0),
            rate: rng.random_range(0.5..3.0),
            height: rng.random_range(0.2..1.5),
        },
        _ => Profile::Gaussian {
            center: rng.random_range(-1.0..1.0),
            width: rng.random_range(0.3..1.5),
            height: rng.random_range(0.2..1.5),
        },
    }
}

pub fn random_section<R: Rng>(rng: &mut R) -> Section {
    let amp = if rng.random_bool(0.3) { -1.0 } else { 1.0 } * rng.random_range(0.3..1.5);
    Section::Profile {
        profile: random_profile(rng),
        amp,
        scale: rng.random_range(0.5..2.0),
        shift: rng.random_range(-0.5..0.5),
    }
}

/// A small perturbation of `f`.
pub fn perturb<R: Rng>(f: &Section, rng: &mut R, size: f64) -> Section {
    match f {
        Section::Profile { profile, amp, scale, shift } => Section::Profile {
            profile: profile.clone(),
            amp: amp * (1.0 + rng.random_range(-size..size)),
            scale: *scale,
            shift: shift + rng.random_range(-size..size),
        },
        other => other.clone(),
    }
}

pub fn random_atoms<R: Rng>(rng: &mut R, n: usize, max_size: f64) -> Vec<(f64, f64)> {
    (0..n)
        .map(|_| {
            let x = rng.random_range(0.1..max_size) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            (x, rng.random_range(0.05..1.5))
        })
        .collect()
}

pub fn random_triplet<R: Rng>(rng: &mut R) -> LevyTriplet {
    let a = if rng.random_bool(0.8) { rng.random_range(0.0..1.5) } else { 0.0 };
    let gamma = rng.random_range(-1.0..1.0);
    let n = rng.random_range(0..4);
    let atoms = random_atoms(rng, n, 5.0);
    LevyTriplet::new(a, gamma, JumpMeasure::atoms(&atoms).unwrap()).unwrap()
}
