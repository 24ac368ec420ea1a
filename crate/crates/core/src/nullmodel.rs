//! Monte Carlo verification of the flat-geometry null model: uniform
//! sphere sampling, the trace identity E[gᵀFg] = Tr(F)/n, projection-mass
//! concentration ‖Pg‖² around d/n, and the Rayleigh split bound.
//!
//! Draws are counter-based: one independently seeded stream per trial
//! index, so results do not depend on execution order.

use crate::error::{Error, Result};
use crate::geometry::{eigendecompose, require_spectral, Projector, SymMatrix};
use crate::mat::{dot, normalize, KahanSum};
use crate::rng::CounterRng;
use crate::scalar::{tol, Real};

/// Deterministic sampler of uniform unit vectors (normalized Gaussians).
#[derive(Debug, Clone)]
pub struct SphereSampler<S> {
    n: usize,
    rng: CounterRng,
    counter: u64,
    _marker: std::marker::PhantomData<S>,
}

impl<S: Real> SphereSampler<S> {
    pub fn new(n: usize, seed: u64) -> Self {
        assert!(n >= 1, "dimension must be positive");
        SphereSampler {
            n,
            rng: CounterRng::new(seed),
            counter: 0,
            _marker: std::marker::PhantomData,
        }
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn seed(&self) -> u64 {
        self.rng.seed()
    }

    pub fn counter(&self) -> u64 {
        self.counter
    }

    /// Draw at an explicit counter; identical (seed, counter) gives the
    /// identical vector.
    pub fn unit_at(&self, counter: u64) -> Vec<S> {
        let mut stream = self.rng.stream(counter);
        let mut g: Vec<S> = stream.gaussian_vec(self.n);
        normalize(&mut g);
        g
    }

    /// Draw at the current counter and advance it.
    pub fn sample_unit(&mut self) -> Vec<S> {
        let g = self.unit_at(self.counter);
        self.counter += 1;
        g
    }
}

/// Monte Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate<S> {
    pub mean: S,
    pub std_error: S,
    pub trials: usize,
}

impl<S: Real> McEstimate<S> {
    /// Mean and stderr = sample stddev / sqrt(trials); needs >= 2 samples.
    pub fn from_samples(samples: &[S]) -> Result<Self> {
        let trials = samples.len();
        if trials < 2 {
            return Err(Error::InsufficientData {
                needed: 2,
                got: trials,
                context: "Monte Carlo estimate",
            });
        }
        let m = S::from_count(trials);
        let mut sum = KahanSum::new();
        for &x in samples {
            sum.add(x);
        }
        let mean = sum.value() / m;
        let mut sq = KahanSum::new();
        for &x in samples {
            sq.add((x - mean) * (x - mean));
        }
        let variance = sq.value() / (m - S::one());
        Ok(McEstimate {
            mean,
            std_error: (variance / m).sqrt(),
            trials,
        })
    }

    /// |mean - target| <= k stderr (a degenerate stderr of zero requires
    /// exact agreement).
    pub fn within(&self, target: S, k_sigma: S) -> bool {
        (self.mean - target).abs() <= k_sigma * self.std_error
    }
}

/// Monte Carlo estimate next to its exact target.
#[derive(Debug, Clone, Copy)]
pub struct McReport<S> {
    pub estimate: McEstimate<S>,
    pub target: S,
}

impl<S: Real> McReport<S> {
    pub fn within_sigmas(&self, k: S) -> bool {
        self.estimate.within(self.target, k)
            || (self.estimate.std_error == S::zero() && self.estimate.mean == self.target)
    }
}

const QUAD_FORM_MIN_TRIALS: usize = 1_000;
const PROJECTION_MIN_TRIALS: usize = 10_000;

/// E[gᵀFg] over uniform unit vectors; exact target Tr(F)/n attached.
pub fn quadratic_form_mean<S: Real>(
    f: &SymMatrix<S>,
    trials: usize,
    sampler: &mut SphereSampler<S>,
) -> Result<McReport<S>> {
    if trials < QUAD_FORM_MIN_TRIALS {
        return Err(Error::InsufficientData {
            needed: QUAD_FORM_MIN_TRIALS,
            got: trials,
            context: "quadratic-form trials",
        });
    }
    if f.n() != sampler.dimension() {
        return Err(Error::DimensionMismatch {
            expected: sampler.dimension(),
            got: f.n(),
        });
    }
    let samples: Vec<S> = (0..trials)
        .map(|_| {
            let g = sampler.sample_unit();
            f.quadratic_form(&g)
        })
        .collect();
    Ok(McReport {
        estimate: McEstimate::from_samples(&samples)?,
        target: f.trace() / S::from_count(f.n()),
    })
}

/// Mean utility loss (1/2) eta² gᵀFg of random unit updates of size eta;
/// target eta² Tr(F) / (2n).
pub fn expected_loss_mc<S: Real>(
    f: &SymMatrix<S>,
    eta: S,
    trials: usize,
    sampler: &mut SphereSampler<S>,
) -> Result<McReport<S>> {
    if !(eta > S::zero()) {
        return Err(Error::Infeasible {
            constraint: "eta > 0".into(),
        });
    }
    let base = quadratic_form_mean(f, trials, sampler)?;
    let scale = S::of(0.5) * eta * eta;
    Ok(McReport {
        estimate: McEstimate {
            mean: scale * base.estimate.mean,
            std_error: scale * base.estimate.std_error,
            trials: base.estimate.trials,
        },
        target: scale * base.target,
    })
}

/// Empirical distribution of ‖Pg‖² with its concentration tail.
#[derive(Debug, Clone)]
pub struct ProjectionMass<S> {
    samples: Vec<S>,
    rank: usize,
    dimension: usize,
}

impl<S: Real> ProjectionMass<S> {
    pub fn samples(&self) -> &[S] {
        &self.samples
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn mean(&self) -> Result<McEstimate<S>> {
        McEstimate::from_samples(&self.samples)
    }

    /// Fraction of samples with |‖Pg‖² - d/n| > eps d/n.
    pub fn tail_freq(&self, eps: S) -> S {
        let center = S::from_count(self.rank) / S::from_count(self.dimension);
        let cutoff = eps * center;
        let count = self
            .samples
            .iter()
            .filter(|&&s| (s - center).abs() > cutoff)
            .count();
        S::from_count(count) / S::from_count(self.samples.len())
    }
}

/// Samples ‖Pg‖² over uniform unit vectors.
pub fn projection_mass<S: Real>(
    p: &Projector<S>,
    trials: usize,
    sampler: &mut SphereSampler<S>,
) -> Result<ProjectionMass<S>> {
    if trials < PROJECTION_MIN_TRIALS {
        return Err(Error::InsufficientData {
            needed: PROJECTION_MIN_TRIALS,
            got: trials,
            context: "projection-mass trials",
        });
    }
    if p.n() != sampler.dimension() {
        return Err(Error::DimensionMismatch {
            expected: sampler.dimension(),
            got: p.n(),
        });
    }
    let samples: Vec<S> = (0..trials)
        .map(|_| {
            let g = sampler.sample_unit();
            let pg = p.apply(&g);
            dot(&pg, &pg)
        })
        .collect();
    Ok(ProjectionMass {
        samples,
        rank: p.rank(),
        dimension: p.n(),
    })
}

/// Counts draws violating gᵀFg <= lambda_1 ‖Pg‖² + lambda_{d+1} (1 - ‖Pg‖²)
/// beyond the inequality slack; the contract is zero.
pub fn rayleigh_split_check<S: Real>(
    f: &SymMatrix<S>,
    p: &Projector<S>,
    trials: usize,
    sampler: &mut SphereSampler<S>,
) -> Result<usize> {
    require_spectral(f, p)?;
    if f.n() != sampler.dimension() {
        return Err(Error::DimensionMismatch {
            expected: sampler.dimension(),
            got: f.n(),
        });
    }
    let spectrum = eigendecompose(f);
    let d = p.rank();
    let lambda_1 = spectrum.eigenvalue(0);
    let lambda_next = if d < f.n() {
        spectrum.eigenvalue(d)
    } else {
        S::zero()
    };
    let slack = S::of(tol::INEQ_SLACK);
    let mut violations = 0;
    for _ in 0..trials {
        let g = sampler.sample_unit();
        let quad = f.quadratic_form(&g);
        let pg = p.apply(&g);
        let mass = dot(&pg, &pg);
        let bound = lambda_1 * mass + lambda_next * (S::one() - mass);
        if quad > bound + slack {
            violations += 1;
        }
    }
    Ok(violations)
}
