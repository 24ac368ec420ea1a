//! Monte Carlo verification of the flat-geometry null model against exact
//! targets and the exact Beta law of projection masses.

mod common;

use common::random_psd;
use driftlab::geometry::{eigendecompose, top_projector, SymMatrix};
use driftlab::nullmodel::{
    expected_loss_mc, projection_mass, quadratic_form_mean, rayleigh_split_check, SphereSampler,
};
use statrs::distribution::{Beta, ContinuousCDF};

#[test]
fn isotropy_of_second_moment() {
    // ‖mean(g gᵀ) - I/n‖_max over a million draws at n = 8
    let n = 8;
    let mut sampler = SphereSampler::<f64>::new(n, 41);
    let trials = 1_000_000usize;
    let mut second = vec![0.0f64; n * n];
    for _ in 0..trials {
        let g = sampler.sample_unit();
        for i in 0..n {
            for j in 0..n {
                second[i * n + j] += g[i] * g[j];
            }
        }
    }
    let mut max_dev = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { 1.0 / n as f64 } else { 0.0 };
            max_dev = max_dev.max((second[i * n + j] / trials as f64 - target).abs());
        }
    }
    assert!(max_dev <= 5e-3, "isotropy deviation {max_dev:e}");
}

#[test]
fn isotropy_error_shrinks_with_trials() {
    // 10^4 vs 10^6 draws: the max-entry error drops by roughly 10x
    let n = 8;
    let deviation = |trials: usize, seed: u64| -> f64 {
        let mut sampler = SphereSampler::<f64>::new(n, seed);
        let mut second = vec![0.0f64; n * n];
        for _ in 0..trials {
            let g = sampler.sample_unit();
            for i in 0..n {
                for j in 0..n {
                    second[i * n + j] += g[i] * g[j];
                }
            }
        }
        let mut max_dev = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let target = if i == j { 1.0 / n as f64 } else { 0.0 };
                max_dev = max_dev.max((second[i * n + j] / trials as f64 - target).abs());
            }
        }
        max_dev
    };
    let coarse = deviation(10_000, 42);
    let fine = deviation(1_000_000, 42);
    let ratio = coarse / fine;
    assert!(
        (4.0..=25.0).contains(&ratio),
        "error reduction {ratio} not ~10x (coarse {coarse:e}, fine {fine:e})"
    );
}

#[test]
fn trace_identity_on_twenty_seeded_matrices() {
    for seed in 0..20u64 {
        let n = 6 + (seed as usize % 5);
        let f = random_psd(n, 500 + seed);
        let mut sampler = SphereSampler::<f64>::new(n, 900 + seed);
        let report = quadratic_form_mean(&f, 20_000, &mut sampler).unwrap();
        assert!(
            report.within_sigmas(3.0),
            "seed {seed}: mean {} target {} stderr {}",
            report.estimate.mean,
            report.target,
            report.estimate.std_error
        );
    }
}

fn spiked_spectrum(n: usize) -> SymMatrix<f64> {
    // a few large eigenvalues over a small bulk, rotated by a seeded basis
    let mut eigenvalues = vec![0.01f64; n];
    eigenvalues[0] = 50.0;
    eigenvalues[1] = 20.0;
    eigenvalues[2] = 5.0;
    let basis = {
        use driftlab::mat::{orthonormalize_columns, Mat};
        use driftlab::rng::CounterRng;
        let rng = CounterRng::new(77);
        let mut s = rng.stream(0);
        let mut m = Mat::from_fn(n, n, |_, _| s.next_gaussian::<f64>());
        orthonormalize_columns(&mut m);
        m
    };
    SymMatrix::from_fn_sym(n, |i, j| {
        (0..n)
            .map(|k| eigenvalues[k] * basis[(i, k)] * basis[(j, k)])
            .sum()
    })
}

#[test]
fn expected_loss_on_spiked_spectrum_within_three_sigma() {
    let n = 200;
    let f = spiked_spectrum(n);
    let mut sampler = SphereSampler::<f64>::new(n, 11);
    let report = expected_loss_mc(&f, 0.1, 100_000, &mut sampler).unwrap();
    assert!(
        report.within_sigmas(3.0),
        "mean {} target {} stderr {}",
        report.estimate.mean,
        report.target,
        report.estimate.std_error
    );
}

#[test]
fn projection_mass_matches_beta_law() {
    // ‖Pg‖² ~ Beta(d/2, (n-d)/2); Kolmogorov-Smirnov at the 1% level
    let (n, d) = (400usize, 20usize);
    let f = SymMatrix::diag(
        &(0..n)
            .map(|i| if i < d { 2.0 } else { 0.5 })
            .collect::<Vec<f64>>(),
    );
    let spectrum = eigendecompose(&f);
    let p = top_projector(&spectrum, d).unwrap();
    let trials = 10_000usize;
    let mut sampler = SphereSampler::<f64>::new(n, 2024);
    let mass = projection_mass(&p, trials, &mut sampler).unwrap();

    let mean = mass.mean().unwrap();
    assert!(
        (mean.mean - d as f64 / n as f64).abs() <= 0.002,
        "sample mean {} vs 0.05",
        mean.mean
    );

    let beta = Beta::new(d as f64 / 2.0, (n - d) as f64 / 2.0).unwrap();
    let mut sorted = mass.samples().to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let m = sorted.len() as f64;
    let mut ks = 0.0f64;
    for (i, &x) in sorted.iter().enumerate() {
        let cdf = beta.cdf(x);
        ks = ks.max((cdf - (i + 1) as f64 / m).abs());
        ks = ks.max((cdf - i as f64 / m).abs());
    }
    let critical = 1.63 / m.sqrt();
    assert!(
        ks <= critical,
        "KS statistic {ks} above 1% critical {critical}"
    );

    // empirical tail no heavier than the exact Beta tail (with MC slack)
    let eps = 0.5f64;
    let center = d as f64 / n as f64;
    let exact_tail = beta.cdf(center * (1.0 - eps)) + (1.0 - beta.cdf(center * (1.0 + eps)));
    let freq = mass.tail_freq(eps);
    let slack = 3.0 * (exact_tail.max(1e-4) / m).sqrt();
    assert!(
        freq <= exact_tail + slack,
        "tail freq {freq} vs exact {exact_tail}"
    );
}

#[test]
fn tail_frequency_non_increasing_in_rank() {
    let n = 400;
    let eps = 0.5f64;
    let trials = 10_000usize;
    let spectrum = eigendecompose(&SymMatrix::<f64>::identity(n));
    let mut previous = f64::INFINITY;
    for d in [5usize, 10, 20, 40] {
        let p = top_projector(&spectrum, d).unwrap();
        let mut sampler = SphereSampler::<f64>::new(n, 3000);
        let mass = projection_mass(&p, trials, &mut sampler).unwrap();
        let freq = mass.tail_freq(eps);
        assert!(
            freq <= previous + 0.01,
            "tail_freq({eps}) at d={d} is {freq}, above previous {previous}"
        );
        previous = freq;
    }
}

#[test]
fn rayleigh_split_zero_violations_on_hundred_thousand_draws() {
    let f = SymMatrix::diag(&[9.0f64, 5.0, 1.0, 0.1]);
    let spectrum = eigendecompose(&f);
    let p = top_projector(&spectrum, 2).unwrap();
    let mut sampler = SphereSampler::<f64>::new(4, 404);
    let violations = rayleigh_split_check(&f, &p, 100_000, &mut sampler).unwrap();
    assert_eq!(violations, 0);
}
