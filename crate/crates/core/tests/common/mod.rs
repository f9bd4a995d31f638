#![allow(dead_code)]

use attrvar::population::{ParameterBundle, ParameterSet, Population};
use rand::Rng;

/// `mu_rq` by direct summation with repeated multiplication, divisor `N - 1`.
pub fn naive_moment(y: &[f64], phi: &[u8], r: u32, q: u32) -> f64 {
    let n = y.len() as f64;
    let ybar = y.iter().sum::<f64>() / n;
    let p = phi.iter().map(|&v| f64::from(v)).sum::<f64>() / n;
    let mut total = 0.0;
    for (&yi, &pi) in y.iter().zip(phi) {
        let mut term = 1.0;
        for _ in 0..r {
            term *= yi - ybar;
        }
        for _ in 0..q {
            term *= f64::from(pi) - p;
        }
        total += term;
    }
    total / (n - 1.0)
}

/// `sum |term| / (N - 1)`, the natural scale for rounding error in `mu_rq`.
pub fn moment_scale(y: &[f64], phi: &[u8], r: u32, q: u32) -> f64 {
    let n = y.len() as f64;
    let ybar = y.iter().sum::<f64>() / n;
    let p = phi.iter().map(|&v| f64::from(v)).sum::<f64>() / n;
    y.iter()
        .zip(phi)
        .map(|(&yi, &pi)| (yi - ybar).abs().powi(r as i32) * (f64::from(pi) - p).abs().powi(q as i32))
        .sum::<f64>()
        / (n - 1.0)
}

/// `lambda_rq` from [`naive_moment`].
pub fn naive_lambda(y: &[f64], phi: &[u8], r: u32, q: u32) -> f64 {
    let mu20 = naive_moment(y, phi, 2, 0);
    let mu02 = naive_moment(y, phi, 0, 2);
    naive_moment(y, phi, r, q) / (mu20.powf(f64::from(r) / 2.0) * mu02.powf(f64::from(q) / 2.0))
}

/// A population of size `n` with log-uniform `y` in `[1e-3, 1e6]` and both
/// attribute classes present.
pub fn random_population<R: Rng>(rng: &mut R, n: usize) -> Population {
    let y: Vec<f64> = (0..n).map(|_| 10f64.powf(rng.random_range(-3.0..6.0))).collect();
    let mut phi: Vec<u8> = (0..n).map(|_| u8::from(rng.random_bool(0.4))).collect();
    phi[0] = 0;
    phi[1] = 1;
    Population::new(y, phi).unwrap()
}

/// A valid parameter set with moments satisfying the Cauchy-Schwarz bound
/// strictly; `k_pb` is consistent with `rho_pb C_y / C_p`.
pub fn random_params<R: Rng>(rng: &mut R) -> ParameterSet {
    let population_size = rng.random_range(50..5_000);
    let sample_size = rng.random_range(5..=population_size.min(500));
    let p: f64 = rng.random_range(0.05..0.95);
    let s_phi2 = p * (1.0 - p) * population_size as f64 / (population_size - 1) as f64;
    let s_y2: f64 = 10f64.powf(rng.random_range(-2.0..3.0));
    let y_mean: f64 = 10f64.powf(rng.random_range(-1.0..2.0));
    let lambda40: f64 = rng.random_range(1.2..12.0);
    let lambda04: f64 = rng.random_range(1.05..12.0);
    let corr: f64 = rng.random_range(-0.95..0.95);
    let lambda22 = 1.0 + corr * ((lambda40 - 1.0) * (lambda04 - 1.0)).sqrt();
    let rho_pb: f64 = rng.random_range(-0.95..0.95);
    let c_y = s_y2.sqrt() / y_mean;
    let c_p = s_phi2.sqrt() / p;
    ParameterSet::from_bundle(ParameterBundle {
        population_size,
        sample_size,
        s_y2,
        s_phi2,
        p,
        y_mean,
        c_y,
        c_p,
        rho_pb,
        beta2_phi: lambda04,
        k_pb: rho_pb * c_y / c_p,
        lambda40,
        lambda04,
        lambda22,
    })
    .unwrap()
}

pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}
