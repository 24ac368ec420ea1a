//! Gradient-flow and gradient-descent trajectories with drift and loss
//! diagnostics: fixed-step RK4 / Euler integration of d(theta)/dt = -g(theta),
//! log-log power-law fits, the quadratic drift lower bound, and the
//! rotating-Fisher variant with per-state subspace-perturbation checks.

use crate::error::{Error, Result};
use crate::geometry::{
    davis_kahan_check, eigendecompose, fisher_half_norm, spectral_gap, top_projector, FisherHalf,
    Projector, SymMatrix, SymSpectrum,
};
use crate::landscape::{utility_loss, AicParams, FineTuneObjective, QuadraticUtility};
use crate::mat::{norm, sub};
use crate::scalar::{tol, Real};

/// Integration scheme: classical fixed-step RK4 for the continuous flow,
/// or the explicit Euler map theta_{k+1} = theta_k - h g(theta_k) (the
/// gradient-descent analogue).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Rk4Fixed,
    Euler,
}

#[derive(Debug, Clone, Copy)]
pub struct IntegratorConfig<S> {
    pub method: Method,
    /// Time increment h.
    pub step: S,
    /// Final time T (rounded to a whole number of steps).
    pub horizon: S,
    /// Record every k-th step (t = 0 and the final state always recorded).
    pub record_every: usize,
    /// Truncation radius around theta*.
    pub ball_radius: S,
}

impl<S: Real> IntegratorConfig<S> {
    pub fn validate(&self) -> Result<()> {
        if !(self.step > S::zero()) {
            return Err(Error::Infeasible {
                constraint: "step > 0".into(),
            });
        }
        if !(self.horizon > S::zero()) {
            return Err(Error::Infeasible {
                constraint: "horizon > 0".into(),
            });
        }
        if self.record_every < 1 {
            return Err(Error::Infeasible {
                constraint: "record_every >= 1".into(),
            });
        }
        Ok(())
    }
}

impl<S: Real> Default for IntegratorConfig<S> {
    /// h = 1e-4 T with T = 0.5; RK4 error is then far below the fit
    /// tolerances at desk scale.
    fn default() -> Self {
        IntegratorConfig {
            method: Method::Rk4Fixed,
            step: S::of(5e-5),
            horizon: S::of(0.5),
            record_every: 10,
            ball_radius: S::one(),
        }
    }
}

/// Recorded trajectory of the flow, starting at theta*.
#[derive(Debug, Clone)]
pub struct Trajectory<S> {
    times: Vec<S>,
    states: Vec<Vec<S>>,
    /// Time at which the trajectory left the working ball, if it did;
    /// recorded states are all inside the ball.
    exited_ball: Option<S>,
}

impl<S: Real> Trajectory<S> {
    pub fn times(&self) -> &[S] {
        &self.times
    }

    pub fn states(&self) -> &[Vec<S>] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn base(&self) -> &[S] {
        &self.states[0]
    }

    pub fn exited_ball(&self) -> Option<S> {
        self.exited_ball
    }

    /// Displacement theta(t_k) - theta* of the k-th recorded state.
    pub fn displacement(&self, k: usize) -> Vec<S> {
        sub(&self.states[k], self.base())
    }
}

fn rk4_step<S: Real>(obj: &FineTuneObjective<S>, state: &[S], h: S) -> Vec<S> {
    let half = S::of(0.5);
    let sixth = S::of(1.0 / 6.0);
    let two = S::of(2.0);
    let n = state.len();

    let eval = |point: &[S]| -> Vec<S> {
        let mut g = obj.gradient_raw(point);
        for x in g.iter_mut() {
            *x = -*x;
        }
        g
    };

    let k1 = eval(state);
    let mut p = vec![S::zero(); n];
    for i in 0..n {
        p[i] = state[i] + half * h * k1[i];
    }
    let k2 = eval(&p);
    for i in 0..n {
        p[i] = state[i] + half * h * k2[i];
    }
    let k3 = eval(&p);
    for i in 0..n {
        p[i] = state[i] + h * k3[i];
    }
    let k4 = eval(&p);
    let mut out = vec![S::zero(); n];
    for i in 0..n {
        out[i] = state[i] + h * sixth * (k1[i] + two * k2[i] + two * k3[i] + k4[i]);
    }
    out
}

fn euler_step<S: Real>(obj: &FineTuneObjective<S>, state: &[S], h: S) -> Vec<S> {
    let g = obj.gradient_raw(state);
    state.iter().zip(&g).map(|(&x, &gi)| x - h * gi).collect()
}

const RK4_FIRST_STEP_LIMIT: f64 = 1e-8;

/// Integrates d(theta)/dt = -g(theta) from theta* over the configured
/// horizon, truncating with a flag when the state leaves the working ball.
///
/// For RK4 the local error on the first step is estimated by step-halving
/// and must be below 1e-8.
pub fn integrate<S: Real>(
    obj: &FineTuneObjective<S>,
    config: &IntegratorConfig<S>,
) -> Result<Trajectory<S>> {
    config.validate()?;
    let h = config.step;
    let steps_f = (config.horizon / h).to_f64_lossy().round();
    let n_steps = steps_f.max(1.0) as usize;

    let theta_star = obj.theta_star.clone();

    if config.method == Method::Rk4Fixed {
        let full = rk4_step(obj, &theta_star, h);
        let half1 = rk4_step(obj, &theta_star, h * S::of(0.5));
        let half2 = rk4_step(obj, &half1, h * S::of(0.5));
        let estimate = norm(&sub(&full, &half2)) / S::of(15.0);
        if estimate >= S::of(RK4_FIRST_STEP_LIMIT) {
            return Err(Error::StepTooLarge {
                estimate: estimate.to_f64_lossy(),
                limit: RK4_FIRST_STEP_LIMIT,
            });
        }
    }

    let mut times = vec![S::zero()];
    let mut states = vec![theta_star.clone()];
    let mut exited_ball = None;
    let mut state = theta_star.clone();

    for k in 0..n_steps {
        let next = match config.method {
            Method::Rk4Fixed => rk4_step(obj, &state, h),
            Method::Euler => euler_step(obj, &state, h),
        };
        let t_next = h * S::from_count(k + 1);
        if next.iter().any(|x| !x.is_finite()) {
            return Err(Error::IntegrationFault {
                last_valid_time: (h * S::from_count(k)).to_f64_lossy(),
            });
        }
        if norm(&sub(&next, &theta_star)) > config.ball_radius {
            exited_ball = Some(t_next);
            break;
        }
        state = next;
        if (k + 1) % config.record_every == 0 || k + 1 == n_steps {
            times.push(t_next);
            states.push(state.clone());
        }
    }

    Ok(Trajectory {
        times,
        states,
        exited_ball,
    })
}

/// Second-order trajectory prediction -t g0 + (t²/2) H g0 (a displacement).
pub fn taylor_prediction<S: Real>(g0: &[S], h: &SymMatrix<S>, t: S) -> Vec<S> {
    let hg = h.apply(g0);
    let half_t2 = S::of(0.5) * t * t;
    g0.iter()
        .zip(&hg)
        .map(|(&g, &hgi)| -t * g + half_t2 * hgi)
        .collect()
}

/// (t, value) series.
pub type Series<S> = Vec<(S, S)>;

/// ‖F^{1/2} P (theta(t) - theta*)‖ at each recorded state.
pub fn drift_curve<S: Real>(
    traj: &Trajectory<S>,
    fisher: &FisherHalf<S>,
    proj: &Projector<S>,
) -> Result<Series<S>> {
    let mut out = Vec::with_capacity(traj.len());
    for k in 0..traj.len() {
        let delta = traj.displacement(k);
        let v = fisher_half_norm(fisher, proj, &delta)?;
        out.push((traj.times()[k], v));
    }
    Ok(out)
}

/// Utility loss at each recorded state.
pub fn loss_curve<S: Real>(traj: &Trajectory<S>, u: &QuadraticUtility<S>) -> Series<S> {
    (0..traj.len())
        .map(|k| (traj.times()[k], utility_loss(u, &traj.states()[k])))
        .collect()
}

/// Log-log least-squares power-law fit y ~ exp(log_coefficient) t^exponent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingFit<S> {
    pub exponent: S,
    pub log_coefficient: S,
    pub r_squared: S,
    pub window: (S, S),
}

impl<S: Real> ScalingFit<S> {
    pub fn coefficient(&self) -> S {
        self.log_coefficient.exp()
    }
}

const MIN_FIT_POINTS: usize = 8;

/// Fits a power law on the (strictly positive) points inside the window.
pub fn fit_power_law<S: Real>(series: &[(S, S)], window: (S, S)) -> Result<ScalingFit<S>> {
    let (t_min, t_max) = window;
    let points: Vec<(S, S)> = series
        .iter()
        .copied()
        .filter(|&(t, _)| t > S::zero() && t >= t_min && t <= t_max)
        .collect();
    if points.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientData {
            needed: MIN_FIT_POINTS,
            got: points.len(),
            context: "power-law fit window",
        });
    }
    if points.iter().any(|&(_, y)| !(y > S::zero())) {
        return Err(Error::NonPositiveSeries);
    }
    let m = S::from_count(points.len());
    let logs: Vec<(S, S)> = points.iter().map(|&(t, y)| (t.ln(), y.ln())).collect();
    let mean_x: S = logs.iter().map(|&(x, _)| x).sum::<S>() / m;
    let mean_y: S = logs.iter().map(|&(_, y)| y).sum::<S>() / m;
    let mut sxx = S::zero();
    let mut sxy = S::zero();
    for &(x, y) in &logs {
        sxx = sxx + (x - mean_x) * (x - mean_x);
        sxy = sxy + (x - mean_x) * (y - mean_y);
    }
    if sxx == S::zero() {
        return Err(Error::InsufficientData {
            needed: 2,
            got: 1,
            context: "distinct abscissae in fit window",
        });
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let mut ss_res = S::zero();
    let mut ss_tot = S::zero();
    for &(x, y) in &logs {
        let fitted = intercept + slope * x;
        ss_res = ss_res + (y - fitted) * (y - fitted);
        ss_tot = ss_tot + (y - mean_y) * (y - mean_y);
    }
    let r_squared = if ss_tot > S::zero() {
        (S::one() - ss_res / ss_tot).max(S::zero())
    } else {
        S::one()
    };
    Ok(ScalingFit {
        exponent: slope,
        log_coefficient: intercept,
        r_squared,
        window,
    })
}

/// Fit-window upper end: the first recorded time where the measured drift
/// deviates from its leading quadratic term (gamma/2) t² by more than 10%,
/// capped at `t_max_cap`. The remainder threshold makes the validity
/// horizon data-driven instead of fixed.
pub fn data_driven_window<S: Real>(drift: &[(S, S)], gamma: S, t_min: S, t_max_cap: S) -> (S, S) {
    if gamma <= S::zero() {
        return (t_min, t_max_cap);
    }
    let half_gamma = S::of(0.5) * gamma;
    let threshold = S::of(0.1);
    let mut upper = t_max_cap;
    for &(t, v) in drift {
        if t <= t_min {
            continue;
        }
        let quad = half_gamma * t * t;
        if (v - quad).abs() > threshold * quad {
            upper = t.min(t_max_cap);
            break;
        }
        if t >= t_max_cap {
            break;
        }
    }
    (t_min, upper)
}

/// Outcome of the quadratic-drift lower-bound check.
#[derive(Debug, Clone, Copy)]
pub struct DriftBoundReport<S> {
    pub holds: bool,
    /// Smallest C >= 0 with drift(t) >= (gamma/2) t² - eps' t - C t³ at
    /// every recorded time.
    pub fitted_c: S,
    /// Fisher-weighted orthogonality budget sqrt(lambda_max) * epsilon.
    pub eps_prime: S,
}

/// Finds the smallest cubic-remainder constant C making
/// drift(t) >= (gamma/2) t² - eps' t - C t³ hold at every recorded time,
/// with eps' = sqrt(lambda_max) epsilon.
pub fn check_drift_bound<S: Real>(
    traj: &Trajectory<S>,
    fisher: &FisherHalf<S>,
    proj: &Projector<S>,
    params: &AicParams<S>,
) -> Result<DriftBoundReport<S>> {
    let drift = drift_curve(traj, fisher, proj)?;
    let eps_prime = fisher.lambda_max().sqrt() * params.epsilon;
    let half_gamma = S::of(0.5) * params.gamma;
    let mut fitted_c = S::zero();
    for &(t, v) in &drift {
        if t <= S::zero() {
            continue;
        }
        let deficit = half_gamma * t * t - eps_prime * t - v;
        let needed = deficit / (t * t * t);
        fitted_c = fitted_c.max(needed);
    }
    // tight at t -> 0: with the fitted C the quadratic term must win on a
    // prefix whenever gamma > 0
    let tight = if params.gamma > S::zero() {
        drift.iter().any(|&(t, _)| {
            t > S::zero() && half_gamma * t * t - eps_prime * t - fitted_c * t * t * t > S::zero()
        })
    } else {
        true
    };
    Ok(DriftBoundReport {
        holds: fitted_c.is_finite() && tight,
        fitted_c,
        eps_prime,
    })
}

/// Fisher field whose eigenbasis rotates in a fixed coordinate plane at a
/// rate proportional to the parameter distance from theta*; the spectrum
/// is constant, so the field stays PSD, and the Lipschitz constant is
/// rate * |lambda_i - lambda_j| exactly.
#[derive(Debug, Clone)]
pub struct RotatingFisherField<S> {
    base: SymSpectrum<S>,
    rate: S,
    plane: (usize, usize),
    lipschitz: S,
}

impl<S: Real> RotatingFisherField<S> {
    /// `plane` holds eigenvector indices (i, j), i < j, of the base
    /// spectrum; the rotation mixes eigenvector i into eigenvector j.
    pub fn new(base: SymSpectrum<S>, rate: S, plane: (usize, usize)) -> Result<Self> {
        let n = base.n();
        let (i, j) = plane;
        if i >= j || j >= n {
            return Err(Error::OutOfRange {
                value: j.max(i),
                min: 0,
                max: n - 1,
            });
        }
        if rate < S::zero() {
            return Err(Error::Infeasible {
                constraint: "rotation rate >= 0".into(),
            });
        }
        let lipschitz = rate * (base.eigenvalue(i) - base.eigenvalue(j)).abs();
        Ok(RotatingFisherField {
            base,
            rate,
            plane,
            lipschitz,
        })
    }

    pub fn base(&self) -> &SymSpectrum<S> {
        &self.base
    }

    pub fn rate(&self) -> S {
        self.rate
    }

    pub fn lipschitz(&self) -> S {
        self.lipschitz
    }

    /// F at parameter distance delta from theta*.
    pub fn fisher_at(&self, delta_norm: S) -> SymMatrix<S> {
        let alpha = self.rate * delta_norm;
        let (c, s) = (alpha.cos(), alpha.sin());
        let (pi, pj) = self.plane;
        let n = self.base.n();
        let vi = self.base.eigenvector(pi);
        let vj = self.base.eigenvector(pj);
        // rotated eigenvectors in the (i, j) plane
        let ri: Vec<S> = vi.iter().zip(&vj).map(|(&a, &b)| c * a + s * b).collect();
        let rj: Vec<S> = vi.iter().zip(&vj).map(|(&a, &b)| -s * a + c * b).collect();
        SymMatrix::from_fn_sym(n, |r, q| {
            let mut acc = S::zero();
            for k in 0..n {
                let (vk_r, vk_q) = if k == pi {
                    (ri[r], ri[q])
                } else if k == pj {
                    (rj[r], rj[q])
                } else {
                    (self.base.vectors()[(r, k)], self.base.vectors()[(q, k)])
                };
                acc = acc + self.base.eigenvalue(k) * vk_r * vk_q;
            }
            acc
        })
    }
}

/// Outcome of the rotating-subspace drift check.
#[derive(Debug, Clone, Copy)]
pub struct RotatingDriftReport<S> {
    pub holds: bool,
    /// Smallest rotation penalty rho >= 0 making
    /// (gamma/2 - rho) t² - eps' t - C t³ a valid lower bound of the
    /// instantaneous-projector drift, with C from the static check.
    pub rho: S,
    /// Cubic constant inherited from the static drift bound.
    pub static_c: S,
    /// All recorded states satisfied dist <= 2 L_F ‖dtheta‖ / gap.
    pub davis_kahan_all_hold: bool,
    /// States skipped for a vanishing instantaneous spectral gap.
    pub skipped_states: usize,
}

/// Evaluates the drift against the instantaneous top-d projector of the
/// rotating field, fits the rotation penalty rho, and checks the
/// Davis-Kahan projector bound at every recorded state.
pub fn rotating_drift_check<S: Real>(
    traj: &Trajectory<S>,
    field: &RotatingFisherField<S>,
    params: &AicParams<S>,
) -> Result<RotatingDriftReport<S>> {
    let d = params.d;
    let base_spectrum = field.base().clone();
    let gap = spectral_gap(&base_spectrum, d)?;
    if gap <= S::of(tol::DEGENERATE_GAP) {
        return Err(Error::ZeroGap { d });
    }
    let f0 = base_spectrum.reconstruct();
    let p0 = top_projector(&base_spectrum, d)?;
    let half0 = FisherHalf::new(base_spectrum)?;

    // static bound first: its C is the rotation-free cubic remainder
    let static_report = check_drift_bound(traj, &half0, &p0, params)?;
    let static_c = static_report.fitted_c;

    let eps_prime = half0.lambda_max().sqrt() * params.epsilon;
    let half_gamma = S::of(0.5) * params.gamma;
    let two = S::of(2.0);
    let slack = S::of(tol::INEQ_SLACK);

    let mut rho = S::zero();
    let mut dk_all = true;
    let mut skipped = 0usize;

    for k in 0..traj.len() {
        let t = traj.times()[k];
        let delta = traj.displacement(k);
        let delta_norm = norm(&delta);
        let f_t = field.fisher_at(delta_norm);
        let spectrum_t = eigendecompose(&f_t);
        let gap_t = spectral_gap(&spectrum_t, d)?;
        if gap_t <= S::of(tol::DEGENERATE_GAP) {
            skipped += 1;
            continue;
        }
        let p_t = top_projector(&spectrum_t, d)?;

        // Davis-Kahan: measured projector rotation vs the Lipschitz bound
        if k > 0 {
            let dk = davis_kahan_check(&f0, &f_t, d)?;
            let lipschitz_bound = two * field.lipschitz() * delta_norm / gap;
            if !(dk.dist <= lipschitz_bound + slack) || !dk.holds {
                dk_all = false;
            }
        }

        if t > S::zero() {
            let drift_rot = fisher_half_norm(&half0, &p_t, &delta)?;
            let deficit = half_gamma * t * t - eps_prime * t - static_c * t * t * t - drift_rot;
            rho = rho.max(deficit / (t * t));
        }
    }

    let holds = if params.gamma > S::zero() {
        rho < params.gamma
    } else {
        rho <= slack
    };
    Ok(RotatingDriftReport {
        holds,
        rho,
        static_c,
        davis_kahan_all_hold: dk_all,
        skipped_states: skipped,
    })
}
