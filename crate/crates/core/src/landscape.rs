//! Synthetic alignment landscapes with instability parameters that are
//! exact by construction.
//!
//! An instance pairs a quadratic-plus-cubic alignment utility with a
//! fine-tuning objective whose gradient field is linear plus an optional
//! smooth third-order correction. The construction places the utility's
//! curvature on a seeded orthonormal basis and routes the objective's
//! curvature coupling through the leading basis vector, so the
//! instability parameters (d, lambda, gamma, epsilon) hold with known
//! margins and every certificate quantity has a closed form.

use crate::error::{Error, Result};
use crate::geometry::{
    eigendecompose, fisher_half_norm, require_spectral, top_projector, FisherHalf, Projector,
    SymMatrix,
};
use crate::mat::{axpy, dot, norm, normalize, orthonormalize_columns, scaled, sub, Mat};
use crate::rng::CounterRng;
use crate::scalar::{tol, Real};

/// Instability parameters: subspace dimension d, curvature floor lambda,
/// coupling magnitude gamma, and the shared orthogonality/tail budget
/// epsilon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AicParams<S> {
    pub d: usize,
    pub lambda: S,
    pub gamma: S,
    pub epsilon: S,
}

impl<S: Real> AicParams<S> {
    pub fn validate(&self) -> Result<()> {
        if self.d < 1 {
            return Err(Error::Infeasible {
                constraint: "d >= 1".into(),
            });
        }
        if !(self.lambda > S::zero()) {
            return Err(Error::Infeasible {
                constraint: "lambda > 0".into(),
            });
        }
        if self.gamma < S::zero() {
            return Err(Error::Infeasible {
                constraint: "gamma >= 0".into(),
            });
        }
        if self.epsilon < S::zero() {
            return Err(Error::Infeasible {
                constraint: "epsilon >= 0".into(),
            });
        }
        Ok(())
    }
}

/// Seeded homogeneous cubic form sum_m b_m (q_m . x)^3 with unit
/// directions q_m and sum |b_m| normalized at construction, giving the
/// bounds |value(x)| <= coef_sum ‖x‖³ and ‖gradient(x)‖ <= 3 coef_sum ‖x‖².
#[derive(Debug, Clone)]
pub struct CubicForm<S> {
    directions: Vec<Vec<S>>,
    coefficients: Vec<S>,
}

const CUBIC_TERMS: usize = 3;

impl<S: Real> CubicForm<S> {
    pub fn seeded(n: usize, rng: &CounterRng, stream: u64, coef_sum: S) -> Self {
        let mut s = rng.stream(stream);
        let mut directions = Vec::with_capacity(CUBIC_TERMS);
        let mut coefficients = Vec::with_capacity(CUBIC_TERMS);
        for _ in 0..CUBIC_TERMS {
            let mut q: Vec<S> = s.gaussian_vec(n);
            normalize(&mut q);
            directions.push(q);
            coefficients.push(s.next_gaussian());
        }
        let total: S = coefficients.iter().map(|c: &S| c.abs()).sum();
        if total > S::zero() {
            let scale = coef_sum / total;
            for c in coefficients.iter_mut() {
                *c = *c * scale;
            }
        }
        CubicForm {
            directions,
            coefficients,
        }
    }

    /// Rebuilds a form from serialized parts.
    pub fn from_parts(directions: Vec<Vec<S>>, coefficients: Vec<S>) -> Self {
        assert_eq!(directions.len(), coefficients.len());
        CubicForm {
            directions,
            coefficients,
        }
    }

    pub fn directions(&self) -> &[Vec<S>] {
        &self.directions
    }

    pub fn coefficients(&self) -> &[S] {
        &self.coefficients
    }

    pub fn value(&self, x: &[S]) -> S {
        self.directions
            .iter()
            .zip(&self.coefficients)
            .map(|(q, &b)| {
                let t = dot(q, x);
                b * t * t * t
            })
            .sum()
    }

    pub fn gradient(&self, x: &[S]) -> Vec<S> {
        let mut g = vec![S::zero(); x.len()];
        let three = S::of(3.0);
        for (q, &b) in self.directions.iter().zip(&self.coefficients) {
            let t = dot(q, x);
            axpy(&mut g, three * b * t * t, q);
        }
        g
    }
}

/// Alignment utility: loss(theta) = 1/2 (theta-theta*)ᵀ F (theta-theta*)
/// plus an optional bounded cubic term.
#[derive(Debug, Clone)]
pub struct QuadraticUtility<S> {
    pub theta_star: Vec<S>,
    fisher: SymMatrix<S>,
    cubic_coeff: S,
    cubic: Option<CubicForm<S>>,
}

impl<S: Real> QuadraticUtility<S> {
    pub fn new(
        theta_star: Vec<S>,
        fisher: SymMatrix<S>,
        cubic_coeff: S,
        cubic: Option<CubicForm<S>>,
    ) -> Result<Self> {
        if fisher.n() != theta_star.len() {
            return Err(Error::DimensionMismatch {
                expected: theta_star.len(),
                got: fisher.n(),
            });
        }
        Ok(QuadraticUtility {
            theta_star,
            fisher,
            cubic_coeff,
            cubic,
        })
    }

    pub fn n(&self) -> usize {
        self.theta_star.len()
    }

    pub fn fisher(&self) -> &SymMatrix<S> {
        &self.fisher
    }

    pub fn cubic_coeff(&self) -> S {
        self.cubic_coeff
    }

    pub fn cubic(&self) -> Option<&CubicForm<S>> {
        self.cubic.as_ref()
    }

    pub fn is_pure_quadratic(&self) -> bool {
        self.cubic.is_none() || self.cubic_coeff == S::zero()
    }
}

/// Utility loss at theta; exactly zero at theta*.
pub fn utility_loss<S: Real>(u: &QuadraticUtility<S>, theta: &[S]) -> S {
    let x = sub(theta, &u.theta_star);
    let mut loss = S::of(0.5) * u.fisher.quadratic_form(&x);
    if let Some(cubic) = &u.cubic {
        loss = loss + u.cubic_coeff * cubic.value(&x);
    }
    loss
}

/// Fine-tuning objective: gradient field g0 + H (theta - theta*) plus an
/// optional third-order correction with ‖correction‖ <= scale ‖theta-theta*‖²,
/// all derived from an explicit scalar potential.
#[derive(Debug, Clone)]
pub struct FineTuneObjective<S> {
    pub theta_star: Vec<S>,
    g0: Vec<S>,
    hessian: SymMatrix<S>,
    cubic_tensor_scale: S,
    cubic: Option<CubicForm<S>>,
    ball_radius: S,
}

impl<S: Real> FineTuneObjective<S> {
    pub fn new(
        theta_star: Vec<S>,
        g0: Vec<S>,
        hessian: SymMatrix<S>,
        cubic_tensor_scale: S,
        cubic: Option<CubicForm<S>>,
        ball_radius: S,
    ) -> Result<Self> {
        let n = theta_star.len();
        if g0.len() != n || hessian.n() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: g0.len().max(hessian.n()),
            });
        }
        Ok(FineTuneObjective {
            theta_star,
            g0,
            hessian,
            cubic_tensor_scale,
            cubic,
            ball_radius,
        })
    }

    pub fn n(&self) -> usize {
        self.theta_star.len()
    }

    pub fn g0(&self) -> &[S] {
        &self.g0
    }

    pub fn hessian(&self) -> &SymMatrix<S> {
        &self.hessian
    }

    pub fn cubic_tensor_scale(&self) -> S {
        self.cubic_tensor_scale
    }

    pub fn cubic(&self) -> Option<&CubicForm<S>> {
        self.cubic.as_ref()
    }

    pub fn ball_radius(&self) -> S {
        self.ball_radius
    }

    /// The gradient field without the working-ball check (the formula is
    /// smooth everywhere; the ball only marks where the model is trusted).
    pub fn gradient_raw(&self, theta: &[S]) -> Vec<S> {
        let x = sub(theta, &self.theta_star);
        let mut g = self.hessian.apply(&x);
        for (gi, &g0i) in g.iter_mut().zip(&self.g0) {
            *gi = *gi + g0i;
        }
        if let Some(cubic) = &self.cubic {
            let correction = cubic.gradient(&x);
            axpy(&mut g, self.cubic_tensor_scale, &correction);
        }
        g
    }

    /// Scalar potential whose gradient is `gradient_raw`.
    pub fn potential(&self, theta: &[S]) -> S {
        let x = sub(theta, &self.theta_star);
        let mut p = dot(&self.g0, &x) + S::of(0.5) * self.hessian.quadratic_form(&x);
        if let Some(cubic) = &self.cubic {
            p = p + self.cubic_tensor_scale * cubic.value(&x);
        }
        p
    }
}

/// Gradient of the fine-tuning objective; errors outside the working ball.
pub fn gradient<S: Real>(obj: &FineTuneObjective<S>, theta: &[S]) -> Result<Vec<S>> {
    if theta.len() != obj.n() {
        return Err(Error::DimensionMismatch {
            expected: obj.n(),
            got: theta.len(),
        });
    }
    let distance = norm(&sub(theta, &obj.theta_star));
    if distance > obj.ball_radius {
        return Err(Error::Extrapolation {
            norm: distance.to_f64_lossy(),
            radius: obj.ball_radius.to_f64_lossy(),
        });
    }
    Ok(obj.gradient_raw(theta))
}

/// Measured certificate of the three instability conditions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AicCertificate<S> {
    /// Sum of the Fisher eigenvalues beyond index d.
    pub tail_sum: S,
    /// d-th largest Fisher eigenvalue.
    pub lambda_d: S,
    /// ‖P g0‖.
    pub proj_grad_norm: S,
    /// ‖F^{1/2} P H g0‖.
    pub coupling: S,
    /// (low-rank sensitivity, initial orthogonality, curvature coupling).
    pub conditions_met: [bool; 3],
}

impl<S: Real> AicCertificate<S> {
    /// Flags computed from measured values with a small absolute slack:
    /// floating-point measurements of exact-zero constructions land within
    /// the slack of zero, so margin-free comparisons stay meaningful.
    pub fn evaluate(
        tail_sum: S,
        lambda_d: S,
        proj_grad_norm: S,
        coupling: S,
        params: &AicParams<S>,
    ) -> Self {
        let slack = S::of(tol::CERT_SLACK);
        AicCertificate {
            tail_sum,
            lambda_d,
            proj_grad_norm,
            coupling,
            conditions_met: [
                tail_sum <= params.epsilon + slack && lambda_d >= params.lambda - slack,
                proj_grad_norm <= params.epsilon + slack,
                coupling >= params.gamma - slack,
            ],
        }
    }

    pub fn all_met(&self) -> bool {
        self.conditions_met.iter().all(|&c| c)
    }
}

/// A constructed (utility, objective, certificate) triple together with
/// its recipe inputs, so it can be re-verified and serialized.
#[derive(Debug, Clone)]
pub struct AicInstance<S> {
    pub utility: QuadraticUtility<S>,
    pub objective: FineTuneObjective<S>,
    pub certificate: AicCertificate<S>,
    pub params: AicParams<S>,
    pub seed: u64,
}

impl<S: Real> AicInstance<S> {
    pub fn n(&self) -> usize {
        self.utility.n()
    }

    /// Eigendecomposes the utility Fisher once and returns the square root
    /// and the top-d sensitivity projector.
    pub fn sensitivity_geometry(&self) -> Result<(FisherHalf<S>, Projector<S>)> {
        let spectrum = eigendecompose(self.utility.fisher());
        let projector = top_projector(&spectrum, self.params.d)?;
        let half = FisherHalf::new(spectrum)?;
        Ok((half, projector))
    }
}

/// Optional third-order terms and working-ball radius for the builder.
#[derive(Debug, Clone, Copy)]
pub struct BuildOptions<S> {
    /// Coefficient of the utility's bounded cubic term.
    pub utility_cubic: S,
    /// Scale of the objective's third-order gradient correction.
    pub objective_cubic: S,
    pub ball_radius: S,
}

impl<S: Real> Default for BuildOptions<S> {
    fn default() -> Self {
        BuildOptions {
            utility_cubic: S::zero(),
            objective_cubic: S::zero(),
            ball_radius: S::one(),
        }
    }
}

// Margin keeping constructed tail sums and gradient projections strictly
// inside the epsilon budget.
const BUDGET_MARGIN: f64 = 1.0 - 1e-3;
// Geometric decay ratio of the tail spectrum.
const TAIL_RATIO: f64 = 0.5;

/// Builds an instance satisfying all three instability conditions by
/// construction. Recipe: seeded orthonormal basis u_1..u_n; Fisher with
/// eigenvalue lambda on u_1..u_d and a geometric tail summing to
/// epsilon (less a margin); g0 = w + eps' u_1 with w a unit vector in the
/// orthogonal complement; H = beta (u_1 wᵀ + w u_1ᵀ) with beta chosen so
/// the measured coupling equals gamma.
pub fn build_aic_instance<S: Real>(
    n: usize,
    params: &AicParams<S>,
    seed: u64,
) -> Result<AicInstance<S>> {
    build_aic_instance_with(n, params, seed, &BuildOptions::default())
}

pub fn build_aic_instance_with<S: Real>(
    n: usize,
    params: &AicParams<S>,
    seed: u64,
    options: &BuildOptions<S>,
) -> Result<AicInstance<S>> {
    params.validate()?;
    let d = params.d;
    if n < d + 2 {
        return Err(Error::Infeasible {
            constraint: format!("n >= d + 2 (n = {n}, d = {d})"),
        });
    }

    let rng = CounterRng::new(seed);

    // (a) seeded orthonormal basis
    let mut basis = {
        let mut s = rng.stream(0);
        Mat::from_fn(n, n, |_, _| s.next_gaussian())
    };
    orthonormalize_columns(&mut basis);

    // (b) eigenvalues: lambda on the leading d, geometric tail
    let tail_len = n - d;
    let eps_budget = params.epsilon * S::of(BUDGET_MARGIN);
    let ratio = S::of(TAIL_RATIO);
    let mut eigenvalues = vec![params.lambda; d];
    let tail_head = if params.epsilon > S::zero() {
        // first tail value a with a (1 - rho^m) / (1 - rho) = eps_budget
        let geom_sum = (S::one() - ratio.powi(tail_len as i32)) / (S::one() - ratio);
        eps_budget / geom_sum
    } else {
        S::zero()
    };
    if tail_head >= params.lambda {
        return Err(Error::Infeasible {
            constraint: format!(
                "tail eigenvalue {:.3e} would reach lambda = {:.3e}; shrink epsilon or grow n",
                tail_head.to_f64_lossy(),
                params.lambda.to_f64_lossy()
            ),
        });
    }
    let mut value = tail_head;
    for _ in 0..tail_len {
        eigenvalues.push(value);
        value = value * ratio;
    }
    let tail_sum: S = eigenvalues[d..].iter().copied().sum();

    let fisher = SymMatrix::from_fn_sym(n, |i, j| {
        (0..n)
            .map(|k| eigenvalues[k] * basis[(i, k)] * basis[(j, k)])
            .sum()
    });

    // (c) g0 = w + eps' u_1, with w a seeded unit vector in the complement
    let u1 = basis.col(0);
    let mut w = vec![S::zero(); n];
    {
        let mut s = rng.stream(1);
        for j in d..n {
            let c: S = s.next_gaussian();
            axpy(&mut w, c, &basis.col(j));
        }
        normalize(&mut w);
    }
    let eps_prime = params.epsilon * S::of(BUDGET_MARGIN);
    let mut g0 = w.clone();
    axpy(&mut g0, eps_prime, &u1);

    // (d) H = beta (u_1 wᵀ + w u_1ᵀ) tuned so the coupling equals gamma
    let w_component = dot(&w, &g0);
    let (hessian, coupling) = if params.gamma == S::zero() {
        (SymMatrix::zero(n), S::zero())
    } else {
        let beta = params.gamma / (params.lambda.sqrt() * w_component);
        let h = SymMatrix::from_fn_sym(n, |i, j| beta * (u1[i] * w[j] + w[i] * u1[j]));
        (h, beta * w_component * params.lambda.sqrt())
    };

    let theta_star = vec![S::zero(); n];
    let utility_cubic = if options.utility_cubic > S::zero() {
        Some(CubicForm::seeded(n, &rng, 2, S::one()))
    } else {
        None
    };
    let objective_cubic = if options.objective_cubic > S::zero() {
        Some(CubicForm::seeded(n, &rng, 3, S::of(1.0 / 3.0)))
    } else {
        None
    };

    let utility = QuadraticUtility::new(
        theta_star.clone(),
        fisher,
        options.utility_cubic,
        utility_cubic,
    )?;
    let objective = FineTuneObjective::new(
        theta_star,
        g0,
        hessian,
        options.objective_cubic,
        objective_cubic,
        options.ball_radius,
    )?;

    // certificate from the recipe's closed-form values
    let certificate =
        AicCertificate::evaluate(tail_sum, params.lambda, eps_prime, coupling, params);
    if !certificate.all_met() {
        return Err(Error::Infeasible {
            constraint: format!("constructed certificate failed: {certificate:?}"),
        });
    }

    Ok(AicInstance {
        utility,
        objective,
        certificate,
        params: *params,
        seed,
    })
}

/// First-order-regime instance: g0 lies inside the sensitivity subspace
/// with ‖F^{1/2} P g0‖ = c exactly, and the gradient field is constant
/// (H = 0), so the loss grows as (c²/2) t² from t = 0.
pub fn build_first_order_instance<S: Real>(
    n: usize,
    d: usize,
    lambda: S,
    c: S,
    seed: u64,
) -> Result<AicInstance<S>> {
    let params = AicParams {
        d,
        lambda,
        gamma: S::zero(),
        epsilon: S::zero(),
    };
    params.validate()?;
    if n < d + 2 {
        return Err(Error::Infeasible {
            constraint: format!("n >= d + 2 (n = {n}, d = {d})"),
        });
    }
    if !(c > S::zero()) {
        return Err(Error::Infeasible {
            constraint: "c > 0".into(),
        });
    }
    let rng = CounterRng::new(seed);
    let mut basis = {
        let mut s = rng.stream(0);
        Mat::from_fn(n, n, |_, _| s.next_gaussian())
    };
    orthonormalize_columns(&mut basis);
    let fisher = SymMatrix::from_fn_sym(n, |i, j| {
        (0..d).map(|k| lambda * basis[(i, k)] * basis[(j, k)]).sum()
    });
    let g0 = scaled(&basis.col(0), c / lambda.sqrt());
    let theta_star = vec![S::zero(); n];
    let utility = QuadraticUtility::new(theta_star.clone(), fisher, S::zero(), None)?;
    let objective = FineTuneObjective::new(
        theta_star,
        g0,
        SymMatrix::zero(n),
        S::zero(),
        None,
        S::one(),
    )?;
    let certificate =
        AicCertificate::evaluate(S::zero(), lambda, c / lambda.sqrt(), S::zero(), &params);
    Ok(AicInstance {
        utility,
        objective,
        certificate,
        params,
        seed,
    })
}

/// Re-measures the certificate from scratch: eigendecompose the utility
/// Fisher, form the top-d projector, and evaluate the three quantities.
/// Independent of how the instance was built.
pub fn verify_aic<S: Real>(
    u: &QuadraticUtility<S>,
    obj: &FineTuneObjective<S>,
    params: &AicParams<S>,
) -> Result<AicCertificate<S>> {
    if obj.n() != u.n() {
        return Err(Error::DimensionMismatch {
            expected: u.n(),
            got: obj.n(),
        });
    }
    let d = params.d;
    let spectrum = eigendecompose(u.fisher());
    if d < 1 || d > spectrum.n() {
        return Err(Error::OutOfRange {
            value: d,
            min: 1,
            max: spectrum.n(),
        });
    }
    let projector = top_projector(&spectrum, d)?;
    let tail_sum = spectrum.tail_sum(d);
    let lambda_d = spectrum.eigenvalue(d - 1);
    let proj_grad_norm = norm(&projector.apply(obj.g0()));
    let half = FisherHalf::new(spectrum)?;
    let h_g0 = obj.hessian().apply(obj.g0());
    let coupling = fisher_half_norm(&half, &projector, &h_g0)?;
    Ok(AicCertificate::evaluate(
        tail_sum,
        lambda_d,
        proj_grad_norm,
        coupling,
        params,
    ))
}

/// ‖F^{1/2} P H g0‖ for a spectral projector P of F.
pub fn coupling_gamma<S: Real>(
    f: &SymMatrix<S>,
    p: &Projector<S>,
    h: &SymMatrix<S>,
    g0: &[S],
) -> Result<S> {
    require_spectral(f, p)?;
    if h.n() != f.n() || g0.len() != f.n() {
        return Err(Error::DimensionMismatch {
            expected: f.n(),
            got: h.n().max(g0.len()),
        });
    }
    let half = FisherHalf::from_matrix(f)?;
    fisher_half_norm(&half, p, &h.apply(g0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(d: usize, lambda: f64, gamma: f64, epsilon: f64) -> AicParams<f64> {
        AicParams {
            d,
            lambda,
            gamma,
            epsilon,
        }
    }

    #[test]
    fn eps_zero_instance_has_clean_certificate() {
        let p = params(2, 4.0, 1.0, 0.0);
        let inst = build_aic_instance(16, &p, 1).unwrap();
        let cert = inst.certificate;
        assert_eq!(cert.tail_sum, 0.0);
        assert_eq!(cert.proj_grad_norm, 0.0);
        assert!((cert.coupling - 1.0).abs() <= 1e-10);
        assert!(cert.all_met());
    }

    #[test]
    fn gamma_zero_fails_condition_three_when_gamma_demanded() {
        let p0 = params(2, 4.0, 0.0, 0.0);
        let inst = build_aic_instance(12, &p0, 5).unwrap();
        assert_eq!(inst.certificate.coupling, 0.0);
        assert!(inst.certificate.all_met());
        // the same instance verified against gamma > 0 fails condition 3
        let demanding = params(2, 4.0, 0.5, 0.0);
        let cert = verify_aic(&inst.utility, &inst.objective, &demanding).unwrap();
        assert!(!cert.conditions_met[2]);
        assert!(cert.conditions_met[0] && cert.conditions_met[1]);
    }

    #[test]
    fn single_tail_eigenvalue_respects_budget() {
        let n = 8;
        let p = params(n - 1, 1.0, 0.0, 0.1);
        let inst = build_aic_instance(n + 1, &p, 3).unwrap();
        assert!(inst.certificate.tail_sum <= 0.1);
        assert!(inst.certificate.tail_sum > 0.09); // full budget less the margin
    }

    #[test]
    fn infeasible_dimension_is_named() {
        let p = params(4, 1.0, 0.0, 0.0);
        let err = build_aic_instance(5, &p, 0).unwrap_err();
        assert!(matches!(err, Error::Infeasible { .. }));
        assert!(err.to_string().contains("n >= d + 2"));
    }

    #[test]
    fn infeasible_tail_is_named() {
        // epsilon so large the tail head would exceed lambda
        let p = params(2, 1e-3, 0.0, 10.0);
        let err = build_aic_instance(6, &p, 0).unwrap_err();
        assert!(err.to_string().contains("tail eigenvalue"));
    }

    #[test]
    fn build_verify_round_trip_small() {
        let p = params(2, 4.0, 1.0, 0.05);
        let inst = build_aic_instance(16, &p, 7).unwrap();
        let cert = verify_aic(&inst.utility, &inst.objective, &p).unwrap();
        assert!(cert.all_met());
        assert!((cert.tail_sum - inst.certificate.tail_sum).abs() < 1e-9);
        assert!((cert.lambda_d - inst.certificate.lambda_d).abs() < 1e-9);
        assert!((cert.proj_grad_norm - inst.certificate.proj_grad_norm).abs() < 1e-9);
        assert!((cert.coupling - inst.certificate.coupling).abs() < 1e-9);
    }

    #[test]
    fn g0_inside_subspace_fails_orthogonality() {
        let p = params(2, 4.0, 0.0, 0.5);
        let inst = build_aic_instance(10, &p, 2).unwrap();
        // replace g0 by u_1 (fully inside the subspace, unit projection)
        let spectrum = eigendecompose(inst.utility.fisher());
        let u1 = spectrum.eigenvector(0);
        let obj = FineTuneObjective::new(
            inst.objective.theta_star.clone(),
            u1,
            SymMatrix::zero(10),
            0.0,
            None,
            1.0,
        )
        .unwrap();
        let cert = verify_aic(&inst.utility, &obj, &p).unwrap();
        assert!(!cert.conditions_met[1], "PG0 norm {}", cert.proj_grad_norm);
    }

    #[test]
    fn flat_spectrum_fails_low_rank_condition() {
        let n = 8;
        let utility =
            QuadraticUtility::new(vec![0.0; n], SymMatrix::identity(n), 0.0, None).unwrap();
        let objective = FineTuneObjective::new(
            vec![0.0; n],
            vec![0.0; n],
            SymMatrix::zero(n),
            0.0,
            None,
            1.0,
        )
        .unwrap();
        let p = params(2, 1.0, 0.0, 0.01);
        let cert = verify_aic(&utility, &objective, &p).unwrap();
        assert!(!cert.conditions_met[0]);
        assert!((cert.tail_sum - (n as f64 - 2.0)).abs() < 1e-9);
    }

    #[test]
    fn gradient_at_base_point_is_g0() {
        let p = params(2, 4.0, 1.0, 0.0);
        let inst = build_aic_instance(8, &p, 11).unwrap();
        let g = gradient(&inst.objective, &inst.objective.theta_star).unwrap();
        assert_eq!(g, inst.objective.g0().to_vec());
    }

    #[test]
    fn constant_field_when_hessian_and_cubic_vanish() {
        let n = 6;
        let obj = FineTuneObjective::new(
            vec![0.0; n],
            vec![1.0, -2.0, 0.5, 0.0, 3.0, -1.0],
            SymMatrix::zero(n),
            0.0,
            None,
            1.0,
        )
        .unwrap();
        let theta = vec![0.1, -0.05, 0.2, 0.0, -0.1, 0.3];
        assert_eq!(gradient(&obj, &theta).unwrap(), obj.g0().to_vec());
    }

    #[test]
    fn linear_field_matches_hessian_action() {
        let p = params(2, 4.0, 1.5, 0.0);
        let inst = build_aic_instance(8, &p, 13).unwrap();
        let mut theta = inst.objective.theta_star.clone();
        theta[0] += 1e-1;
        let g = gradient(&inst.objective, &theta).unwrap();
        let step = sub(&theta, &inst.objective.theta_star);
        let mut expect = inst.objective.hessian().apply(&step);
        for (e, &g0i) in expect.iter_mut().zip(inst.objective.g0()) {
            *e += g0i;
        }
        for (a, b) in g.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn gradient_outside_ball_is_flagged() {
        let p = params(2, 4.0, 1.0, 0.0);
        let inst = build_aic_instance(8, &p, 17).unwrap();
        let theta = vec![2.0; 8];
        assert!(matches!(
            gradient(&inst.objective, &theta),
            Err(Error::Extrapolation { .. })
        ));
    }

    #[test]
    fn utility_loss_zero_at_base_and_simple_diag() {
        let u =
            QuadraticUtility::<f64>::new(vec![0.0, 0.0], SymMatrix::diag(&[2.0, 0.0]), 0.0, None)
                .unwrap();
        assert_eq!(utility_loss(&u, &[0.0, 0.0]), 0.0);
        assert!((utility_loss(&u, &[1.0, 3.0]) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn coupling_closed_form_on_projected_eigenvector() {
        // g0 an eigenvector of H with eigenvalue mu, g0 in range(P),
        // F = lambda I on range(P): coupling = sqrt(lambda) |mu| ‖g0‖
        let lambda = 4.0f64;
        let mu = -1.5f64;
        let f = SymMatrix::diag(&[lambda, lambda, 0.5, 0.25]);
        let spectrum = eigendecompose(&f);
        let p = top_projector(&spectrum, 2).unwrap();
        let h = SymMatrix::diag(&[mu, 0.0, 0.0, 0.0]);
        let g0 = vec![2.0, 0.0, 0.0, 0.0];
        let c = coupling_gamma(&f, &p, &h, &g0).unwrap();
        assert!((c - lambda.sqrt() * mu.abs() * 2.0).abs() < 1e-12);

        // H = 0 gives 0
        let c0 = coupling_gamma(&f, &p, &SymMatrix::zero(4), &g0).unwrap();
        assert_eq!(c0, 0.0);
    }

    #[test]
    fn coupling_scales_as_sqrt_of_fisher_scale() {
        let p = params(2, 4.0, 1.0, 0.0);
        let inst = build_aic_instance(10, &p, 23).unwrap();
        let f = inst.utility.fisher();
        let spectrum = eigendecompose(f);
        let proj = top_projector(&spectrum, 2).unwrap();
        let h = inst.objective.hessian();
        let g0 = inst.objective.g0();
        let base = coupling_gamma(f, &proj, h, g0).unwrap();
        let c = 2.25f64;
        let scaled_f = f.scale(c);
        let spectrum_c = eigendecompose(&scaled_f);
        let proj_c = top_projector(&spectrum_c, 2).unwrap();
        let scaled = coupling_gamma(&scaled_f, &proj_c, h, g0).unwrap();
        assert!(
            (scaled - c.sqrt() * base).abs() <= 1e-12 * scaled.abs(),
            "{scaled} vs {}",
            c.sqrt() * base
        );
    }

    #[test]
    fn epsilon_monotonicity_of_conditions() {
        let p = params(2, 4.0, 1.0, 0.05);
        let inst = build_aic_instance(12, &p, 29).unwrap();
        let cert = verify_aic(&inst.utility, &inst.objective, &p).unwrap();
        for scale in [1.5, 2.0, 10.0] {
            let looser = AicParams {
                epsilon: p.epsilon * scale,
                ..p
            };
            let cert2 = verify_aic(&inst.utility, &inst.objective, &looser).unwrap();
            for k in 0..2 {
                assert!(
                    !cert.conditions_met[k] || cert2.conditions_met[k],
                    "condition {k} became false at epsilon scale {scale}"
                );
            }
        }
    }

    #[test]
    fn first_order_instance_projects_exactly() {
        let inst = build_first_order_instance::<f64>(12, 2, 4.0, 0.3, 31).unwrap();
        let (half, proj) = inst.sensitivity_geometry().unwrap();
        let c = fisher_half_norm(&half, &proj, inst.objective.g0()).unwrap();
        assert!((c - 0.3).abs() < 1e-10, "{c}");
    }
}
