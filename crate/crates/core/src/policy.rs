//! Exact toy softmax policies over finite contexts and outcomes:
//! closed-form utility, KL degradation, and Fisher information, plus the
//! checks tying them together (utility drop equals expected KL at the
//! optimum, the Fisher is the KL Hessian there, and the quadratic local
//! form has a cubic remainder).
//!
//! Per-context softmax logits carry a row-shift gauge freedom: adding a
//! constant to a logit row leaves the policy unchanged, which contributes
//! exactly one zero Fisher eigenvalue per context.

use crate::error::{Error, Result};
use crate::flow::fit_power_law;
use crate::geometry::SymMatrix;
use crate::mat::{norm, normalize, Mat};
use crate::rng::CounterRng;
use crate::scalar::Real;

/// Reference distribution of one skill: context marginals p(x) and
/// conditional outcome rows D(y|x).
#[derive(Debug, Clone)]
pub struct SkillDistribution<S> {
    context_probs: Vec<S>,
    conditionals: Mat<S>,
}

const PROB_SUM_TOL: f64 = 1e-12;

impl<S: Real> SkillDistribution<S> {
    pub fn new(context_probs: Vec<S>, conditionals: Mat<S>) -> Result<Self> {
        if conditionals.rows() != context_probs.len() {
            return Err(Error::DimensionMismatch {
                expected: context_probs.len(),
                got: conditionals.rows(),
            });
        }
        let tol = S::of(PROB_SUM_TOL);
        let total: S = context_probs.iter().copied().sum();
        if (total - S::one()).abs() > tol {
            return Err(Error::InvalidDistribution {
                reason: format!("context probabilities sum to {}", total.to_f64_lossy()),
            });
        }
        if context_probs.iter().any(|&p| p < S::zero()) {
            return Err(Error::InvalidDistribution {
                reason: "negative context probability".into(),
            });
        }
        for x in 0..conditionals.rows() {
            let row = conditionals.row(x);
            if row.iter().any(|&p| p < S::zero()) {
                return Err(Error::InvalidDistribution {
                    reason: format!("negative conditional probability in context {x}"),
                });
            }
            let s: S = row.iter().copied().sum();
            if (s - S::one()).abs() > tol {
                return Err(Error::InvalidDistribution {
                    reason: format!("conditional row {x} sums to {}", s.to_f64_lossy()),
                });
            }
        }
        Ok(SkillDistribution {
            context_probs,
            conditionals,
        })
    }

    /// Random full-support skill; probabilities are bounded away from zero
    /// so log-optimal policies stay well-conditioned.
    pub fn seeded_random(n_contexts: usize, n_outcomes: usize, seed: u64) -> Self {
        let rng = CounterRng::new(seed);
        let mut s = rng.stream(0);
        let floor = S::of(0.15);
        let mut context_probs: Vec<S> = (0..n_contexts)
            .map(|_| floor + s.next_uniform::<S>())
            .collect();
        let total: S = context_probs.iter().copied().sum();
        for p in context_probs.iter_mut() {
            *p = *p / total;
        }
        let mut conditionals = Mat::zeros(n_contexts, n_outcomes);
        for x in 0..n_contexts {
            let mut row: Vec<S> = (0..n_outcomes)
                .map(|_| floor + s.next_uniform::<S>())
                .collect();
            let rs: S = row.iter().copied().sum();
            for p in row.iter_mut() {
                *p = *p / rs;
            }
            for (y, &p) in row.iter().enumerate() {
                conditionals[(x, y)] = p;
            }
        }
        SkillDistribution::new(context_probs, conditionals).expect("construction normalizes")
    }

    pub fn n_contexts(&self) -> usize {
        self.context_probs.len()
    }

    pub fn n_outcomes(&self) -> usize {
        self.conditionals.cols()
    }

    pub fn context_prob(&self, x: usize) -> S {
        self.context_probs[x]
    }

    pub fn conditional(&self, x: usize, y: usize) -> S {
        self.conditionals[(x, y)]
    }

    pub fn context_probs(&self) -> &[S] {
        &self.context_probs
    }

    pub fn conditionals(&self) -> &Mat<S> {
        &self.conditionals
    }
}

/// Softmax policy parametrized by a |X| x |Y| logit matrix.
#[derive(Debug, Clone)]
pub struct TabularPolicy<S> {
    logits: Mat<S>,
}

impl<S: Real> TabularPolicy<S> {
    pub fn new(logits: Mat<S>) -> Result<Self> {
        for i in 0..logits.rows() {
            for j in 0..logits.cols() {
                if !logits[(i, j)].is_finite() {
                    return Err(Error::NonFiniteEntry { row: i, col: j });
                }
            }
        }
        Ok(TabularPolicy { logits })
    }

    pub fn logits(&self) -> &Mat<S> {
        &self.logits
    }

    pub fn n_contexts(&self) -> usize {
        self.logits.rows()
    }

    pub fn n_outcomes(&self) -> usize {
        self.logits.cols()
    }

    /// log pi(y|x) for the whole row, via a max-shifted log-sum-exp.
    pub fn log_probs_row(&self, x: usize) -> Vec<S> {
        let row = self.logits.row(x);
        let m = row.iter().fold(S::neg_infinity(), |a, &b| a.max(b));
        let sum: S = row.iter().map(|&l| (l - m).exp()).sum();
        let lse = m + sum.ln();
        row.iter().map(|&l| l - lse).collect()
    }

    pub fn probs_row(&self, x: usize) -> Vec<S> {
        self.log_probs_row(x).iter().map(|&l| l.exp()).collect()
    }

    /// Policy with a displaced logit vector (row-major flattening).
    pub fn displaced(&self, delta: &[S]) -> Result<TabularPolicy<S>> {
        let map = FlattenedParams::for_policy(self);
        let mut logits = self.logits.clone();
        if delta.len() != map.len() {
            return Err(Error::DimensionMismatch {
                expected: map.len(),
                got: delta.len(),
            });
        }
        for x in 0..logits.rows() {
            for y in 0..logits.cols() {
                logits[(x, y)] = logits[(x, y)] + delta[map.index(x, y)];
            }
        }
        TabularPolicy::new(logits)
    }
}

/// Fixed row-major index map between the logit matrix and its vector view.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FlattenedParams {
    pub n_contexts: usize,
    pub n_outcomes: usize,
}

impl FlattenedParams {
    pub fn for_policy<S: Real>(policy: &TabularPolicy<S>) -> Self {
        FlattenedParams {
            n_contexts: policy.n_contexts(),
            n_outcomes: policy.n_outcomes(),
        }
    }

    pub fn len(&self) -> usize {
        self.n_contexts * self.n_outcomes
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize) -> usize {
        x * self.n_outcomes + y
    }

    pub fn flatten<S: Real>(&self, m: &Mat<S>) -> Vec<S> {
        m.data().to_vec()
    }

    pub fn unflatten<S: Real>(&self, v: &[S]) -> Mat<S> {
        assert_eq!(v.len(), self.len());
        Mat::from_fn(self.n_contexts, self.n_outcomes, |x, y| v[self.index(x, y)])
    }
}

/// The log-likelihood-optimal policy: logits are the log reference
/// probabilities, row-centered. Requires full support.
pub fn fit_optimal<S: Real>(skill: &SkillDistribution<S>) -> Result<TabularPolicy<S>> {
    let (nx, ny) = (skill.n_contexts(), skill.n_outcomes());
    let mut logits = Mat::zeros(nx, ny);
    for x in 0..nx {
        for y in 0..ny {
            let p = skill.conditional(x, y);
            if p <= S::zero() {
                return Err(Error::UnsupportedOutcome {
                    context: x,
                    outcome: y,
                });
            }
            logits[(x, y)] = p.ln();
        }
    }
    for x in 0..nx {
        let mean: S = logits.row(x).iter().copied().sum::<S>() / S::from_count(ny);
        for y in 0..ny {
            logits[(x, y)] = logits[(x, y)] - mean;
        }
    }
    TabularPolicy::new(logits)
}

/// Expected log-likelihood sum_x p(x) sum_y D(y|x) log pi(y|x).
/// A zero policy probability on a supported outcome yields -inf.
pub fn utility<S: Real>(policy: &TabularPolicy<S>, skill: &SkillDistribution<S>) -> Result<S> {
    if policy.n_contexts() != skill.n_contexts() || policy.n_outcomes() != skill.n_outcomes() {
        return Err(Error::DimensionMismatch {
            expected: skill.n_contexts() * skill.n_outcomes(),
            got: policy.n_contexts() * policy.n_outcomes(),
        });
    }
    let mut total = S::zero();
    for x in 0..skill.n_contexts() {
        let log_probs = policy.log_probs_row(x);
        let mut inner = S::zero();
        for (y, &log_p) in log_probs.iter().enumerate() {
            let d = skill.conditional(x, y);
            if d > S::zero() {
                inner = inner + d * log_p;
            }
        }
        total = total + skill.context_prob(x) * inner;
    }
    Ok(total)
}

/// Expected KL divergence E_x KL(pi_star(.|x) || pi(.|x)); equals the
/// utility drop when pi_star is optimal for the skill.
pub fn kl_degradation<S: Real>(
    policy_star: &TabularPolicy<S>,
    policy: &TabularPolicy<S>,
    skill: &SkillDistribution<S>,
) -> Result<S> {
    if policy_star.n_contexts() != policy.n_contexts()
        || policy_star.n_outcomes() != policy.n_outcomes()
    {
        return Err(Error::DimensionMismatch {
            expected: policy_star.n_contexts() * policy_star.n_outcomes(),
            got: policy.n_contexts() * policy.n_outcomes(),
        });
    }
    let mut total = S::zero();
    for x in 0..skill.n_contexts() {
        let log_star = policy_star.log_probs_row(x);
        let log_theta = policy.log_probs_row(x);
        let mut inner = S::zero();
        for y in 0..policy.n_outcomes() {
            let p = log_star[y].exp();
            if p > S::zero() {
                inner = inner + p * (log_star[y] - log_theta[y]);
            }
        }
        total = total + skill.context_prob(x) * inner;
    }
    Ok(total)
}

/// Fisher information over flattened logits: per-context block
/// p(x) (diag(pi_x) - pi_x pi_xᵀ) at that context's rows, zero elsewhere.
pub fn exact_fisher<S: Real>(
    policy: &TabularPolicy<S>,
    skill: &SkillDistribution<S>,
) -> Result<SymMatrix<S>> {
    if policy.n_contexts() != skill.n_contexts() || policy.n_outcomes() != skill.n_outcomes() {
        return Err(Error::DimensionMismatch {
            expected: skill.n_contexts() * skill.n_outcomes(),
            got: policy.n_contexts() * policy.n_outcomes(),
        });
    }
    let map = FlattenedParams::for_policy(policy);
    let ny = policy.n_outcomes();
    let probs: Vec<Vec<S>> = (0..policy.n_contexts())
        .map(|x| policy.probs_row(x))
        .collect();
    Ok(SymMatrix::from_fn_sym(map.len(), |i, j| {
        let (xi, yi) = (i / ny, i % ny);
        let (xj, yj) = (j / ny, j % ny);
        if xi != xj {
            return S::zero();
        }
        let pi = &probs[xi];
        let block = if yi == yj {
            pi[yi] * (S::one() - pi[yi])
        } else {
            -pi[yi] * pi[yj]
        };
        skill.context_prob(xi) * block
    }))
}

/// Remainder diagnostics of the local quadratic form along one direction.
#[derive(Debug, Clone, Copy)]
pub struct DirectionCheck<S> {
    /// vᵀ F v.
    pub quad_form: S,
    /// Fitted constant of R(s) ~ K s^p.
    pub fitted_k: S,
    /// Fitted exponent p (cubic remainder gives ~3).
    pub fitted_exponent: S,
    pub max_remainder: S,
    /// Both the utility drop and the quadratic form vanished (gauge
    /// directions); no fit possible.
    pub degenerate: bool,
}

/// For each direction v and scale s measures
/// R(s) = |KL(theta* || theta*+sv) - (1/2) s² vᵀFv| and fits R ~ K s^p.
pub fn quadratic_form_check<S: Real>(
    policy_star: &TabularPolicy<S>,
    skill: &SkillDistribution<S>,
    directions: &[Vec<S>],
    scales: &[S],
) -> Result<Vec<DirectionCheck<S>>> {
    let fisher = exact_fisher(policy_star, skill)?;
    let mut out = Vec::with_capacity(directions.len());
    for v in directions {
        let quad_form = fisher.quadratic_form(v);
        let mut series = Vec::with_capacity(scales.len());
        let mut max_remainder = S::zero();
        for &s in scales {
            let displaced = policy_star.displaced(&v.iter().map(|&c| c * s).collect::<Vec<_>>())?;
            let degradation = kl_degradation(policy_star, &displaced, skill)?;
            let remainder = (degradation - S::of(0.5) * s * s * quad_form).abs();
            max_remainder = max_remainder.max(remainder);
            series.push((s, remainder));
        }
        // gauge (row-shift) directions: both sides vanish identically
        let degenerate = max_remainder < S::of(1e-14) && quad_form.abs() < S::of(1e-14);
        if degenerate {
            out.push(DirectionCheck {
                quad_form,
                fitted_k: S::zero(),
                fitted_exponent: S::zero(),
                max_remainder,
                degenerate,
            });
            continue;
        }
        let window = (
            series
                .iter()
                .map(|&(s, _)| s)
                .fold(S::infinity(), |a, b| a.min(b)),
            series
                .iter()
                .map(|&(s, _)| s)
                .fold(S::neg_infinity(), |a, b| a.max(b)),
        );
        let fit = fit_power_law(&series, window)?;
        out.push(DirectionCheck {
            quad_form,
            fitted_k: fit.coefficient(),
            fitted_exponent: fit.exponent,
            max_remainder,
            degenerate,
        });
    }
    Ok(out)
}

/// Outcome of the relaxed local lower-bound check around a near-optimal
/// point.
#[derive(Debug, Clone, Copy)]
pub struct RelaxedLbReport<S> {
    /// Smallest C with
    /// du(theta_near + dtheta) >= (1/2) dthetaᵀ F(theta_near) dtheta - C ‖dtheta‖³
    /// over the sampled displacements.
    pub fitted_c: S,
    /// Violations beyond the fitted C (zero by construction).
    pub violations: usize,
    pub trials: usize,
}

/// Samples displacements of norm up to `radius` around `theta_near` (not
/// required to be optimal) and fits the smallest cubic constant C making
/// the Fisher quadratic a lower bound of the utility drop.
pub fn relaxed_lb_check<S: Real>(
    theta_near: &TabularPolicy<S>,
    skill: &SkillDistribution<S>,
    radius: S,
    trials: usize,
    seed: u64,
) -> Result<RelaxedLbReport<S>> {
    if !(radius > S::zero()) {
        return Err(Error::Infeasible {
            constraint: "radius > 0".into(),
        });
    }
    let fisher = exact_fisher(theta_near, skill)?;
    let u_near = utility(theta_near, skill)?;
    let map = FlattenedParams::for_policy(theta_near);
    let m = map.len();
    let rng = CounterRng::new(seed);

    let mut displacements = Vec::with_capacity(trials);
    for i in 0..trials {
        let mut s = rng.stream(i as u64);
        let mut dir: Vec<S> = s.gaussian_vec(m);
        normalize(&mut dir);
        // uniform in the ball: radius * U^(1/m)
        let u: S = s.next_uniform();
        let r = radius * u.powf(S::one() / S::from_count(m));
        displacements.push(dir.iter().map(|&x| x * r).collect::<Vec<S>>());
    }

    let mut fitted_c = S::zero();
    let mut deficits = Vec::with_capacity(trials);
    for delta in &displacements {
        let displaced = theta_near.displaced(delta)?;
        let drop = u_near - utility(&displaced, skill)?;
        let quad = S::of(0.5) * fisher.quadratic_form(delta);
        let nd = norm(delta);
        let deficit = quad - drop;
        deficits.push((deficit, nd));
        fitted_c = fitted_c.max(deficit / (nd * nd * nd));
    }
    let slack = S::of(1e-12);
    let violations = deficits
        .iter()
        .filter(|&&(deficit, nd)| deficit > fitted_c * nd * nd * nd + slack)
        .count();
    Ok(RelaxedLbReport {
        fitted_c: fitted_c.max(S::zero()),
        violations,
        trials,
    })
}

const FD_STEP: f64 = 1e-4;

/// Max entry deviation between the exact Fisher and the central
/// finite-difference Hessian of the utility drop at the optimum
/// (step 1e-4).
pub fn fisher_vs_kl_hessian<S: Real>(
    policy_star: &TabularPolicy<S>,
    skill: &SkillDistribution<S>,
) -> Result<S> {
    let fisher = exact_fisher(policy_star, skill)?;
    let map = FlattenedParams::for_policy(policy_star);
    let m = map.len();
    let h = S::of(FD_STEP);
    let u_star = utility(policy_star, skill)?;

    let drop = |delta: &[S]| -> Result<S> {
        let displaced = policy_star.displaced(delta)?;
        Ok(u_star - utility(&displaced, skill)?)
    };

    let mut max_dev = S::zero();
    let mut delta = vec![S::zero(); m];
    for i in 0..m {
        for j in i..m {
            let fd = if i == j {
                delta[i] = h;
                let plus = drop(&delta)?;
                delta[i] = -h;
                let minus = drop(&delta)?;
                delta[i] = S::zero();
                (plus + minus) / (h * h)
            } else {
                let mut eval = |si: S, sj: S| -> Result<S> {
                    delta[i] = si;
                    delta[j] = sj;
                    let v = drop(&delta)?;
                    delta[i] = S::zero();
                    delta[j] = S::zero();
                    Ok(v)
                };
                let pp = eval(h, h)?;
                let pm = eval(h, -h)?;
                let mp = eval(-h, h)?;
                let mm = eval(-h, -h)?;
                (pp - pm - mp + mm) / (S::of(4.0) * h * h)
            };
            max_dev = max_dev.max((fd - fisher.entry(i, j)).abs());
        }
    }
    Ok(max_dev)
}
