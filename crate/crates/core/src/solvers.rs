//! Tensor completion by truncated nuclear norm minimization.
//!
//! [`solve`] runs the outer truncation loop: starting from `X = M_Ω`, each pass
//! takes the t-SVD of the current estimate, keeps its leading `r` singular
//! tubes as a [`TruncationPair`], and minimizes
//!
//! ```text
//! ‖X‖_* − tr(A * X * Bᵀ)   subject to   X_Ω = M_Ω
//! ```
//!
//! with either ADMM ([`admm_inner`]) or accelerated proximal gradient
//! ([`apgl_inner`], which relaxes the constraint into `λ/2 ‖X_Ω − M_Ω‖²_F`).
//! The loop ends once successive estimates differ by at most `epsilon` in
//! Frobenius norm or after `outer_max` passes.

use std::time::Instant;

use crate::completion::{project_observed, restrict_observed, ObservationMask};
use crate::error::{Error, Result};
use crate::fourier::first_fourier_slice;
use crate::tensor::Tensor3;
use crate::tsvd::{
    conj_transpose, extract_truncation_pair, svt, t_product, t_svd, tensor_nuclear_norm,
    TruncationPair,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    Admm,
    Apgl,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Admm => "admm",
            Method::Apgl => "apgl",
        })
    }
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "admm" => Ok(Method::Admm),
            "apgl" => Ok(Method::Apgl),
            other => Err(Error::Argument(format!("unknown method {other:?}"))),
        }
    }
}

/// How `‖X_{k+1} − X_k‖_F` is compared against a tolerance.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopRule {
    /// `‖ΔX‖_F ≤ tol`.
    Absolute,
    /// `‖ΔX‖_F ≤ tol · ‖X_k‖_F` (absolute when `X_k = 0`).
    Relative,
}

impl StopRule {
    fn met(self, diff: f64, previous_norm: f64, tol: f64) -> bool {
        match self {
            StopRule::Absolute => diff <= tol,
            StopRule::Relative if previous_norm > 0.0 => diff <= tol * previous_norm,
            StopRule::Relative => diff <= tol,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    /// Number of leading singular values left unpenalized; 0 gives plain
    /// tensor nuclear norm minimization.
    pub r: usize,
    /// Outer tolerance.
    pub epsilon: f64,
    /// Maximum outer passes.
    pub outer_max: usize,
    /// ADMM penalty.
    pub mu: f64,
    /// APGL data-fit weight.
    pub lambda: f64,
    /// Inner tolerance.
    pub xi: f64,
    /// Maximum inner iterations per outer pass.
    pub inner_max: usize,
    pub method: Method,
    pub stop_rule: StopRule,
    /// Optional upper bound on the APGL thresholding level. Off by default, in
    /// which case the threshold equals the momentum scalar `t_k`.
    pub apgl_threshold_cap: Option<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            r: 1,
            epsilon: 1e-3,
            outer_max: 50,
            mu: 5e-4,
            lambda: 1e-2,
            xi: 1e-4,
            inner_max: 200,
            method: Method::Admm,
            stop_rule: StopRule::Absolute,
            apgl_threshold_cap: None,
        }
    }
}

impl SolverConfig {
    pub fn with_method(mut self, method: Method) -> Self {
        self.method = method;
        self
    }

    pub fn with_r(mut self, r: usize) -> Self {
        self.r = r;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("epsilon", self.epsilon),
            ("mu", self.mu),
            ("lambda", self.lambda),
            ("xi", self.xi),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Argument(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        if self.outer_max == 0 || self.inner_max == 0 {
            return Err(Error::Argument(
                "iteration limits must be at least 1".into(),
            ));
        }
        if let Some(cap) = self.apgl_threshold_cap {
            if cap.is_nan() || cap < 0.0 {
                return Err(Error::Argument(format!(
                    "threshold cap must be non-negative, got {cap}"
                )));
            }
        }
        Ok(())
    }
}

/// Outcome of one inner solve.
#[derive(Clone, Debug)]
pub struct InnerSolution {
    /// Feasible estimate (`x_Ω = m_Ω`).
    pub x: Tensor3,
    pub iterations: usize,
    /// `‖X_{k+1} − X_k‖_F` per iteration.
    pub residuals: Vec<f64>,
    pub converged: bool,
}

#[derive(Clone, Debug)]
pub struct SolveReport {
    pub recovered: Tensor3,
    pub outer_iterations: usize,
    pub total_inner_iterations: usize,
    /// Inner iteration count of every outer pass.
    pub inner_iterations: Vec<usize>,
    /// `‖X_{ℓ+1} − X_ℓ‖_F` per outer pass.
    pub residuals: Vec<f64>,
    pub converged: bool,
    /// Seconds.
    pub wall_time: f64,
}

/// Iterates shared by the inner solvers.
struct SolverState {
    x: Tensor3,
    w: Tensor3,
    y: Tensor3,
    t: f64,
    k: usize,
    residual_history: Vec<f64>,
}

impl SolverState {
    fn new(x0: &Tensor3) -> Self {
        Self {
            x: x0.clone(),
            w: x0.clone(),
            y: x0.clone(),
            t: 1.0,
            k: 0,
            residual_history: Vec::new(),
        }
    }

    /// Records a new X iterate and reports whether the inner tolerance is met.
    fn advance(&mut self, x_next: Tensor3, cfg: &SolverConfig) -> Result<bool> {
        let diff = x_next.distance(&self.x)?;
        let done = cfg.stop_rule.met(diff, self.x.frobenius(), cfg.xi);
        self.residual_history.push(diff);
        self.x = x_next;
        self.k += 1;
        Ok(done)
    }
}

fn check_problem(m: &Tensor3, omega: &ObservationMask, r: usize) -> Result<()> {
    omega.check_dims(m)?;
    if omega.count_observed() == 0 {
        return Err(Error::Argument("no observed entries".into()));
    }
    let (n1, n2, _) = m.dims();
    if r > n1.min(n2) {
        return Err(Error::Argument(format!(
            "truncation rank {r} exceeds min({n1}, {n2})"
        )));
    }
    Ok(())
}

fn check_pair(pair: &TruncationPair, dims: (usize, usize, usize)) -> Result<()> {
    let (n1, n2, n3) = dims;
    let (ra, an1, an3) = pair.a.dims();
    let (rb, bn2, bn3) = pair.b.dims();
    if ra != pair.r || rb != pair.r || an1 != n1 || bn2 != n2 || an3 != n3 || bn3 != n3 {
        return Err(Error::Shape(format!(
            "pair a {:?}, b {:?} incompatible with {dims:?}",
            pair.a.dims(),
            pair.b.dims()
        )));
    }
    Ok(())
}

/// `aᵀ * b`, or zeros when there is no truncation.
fn trace_gradient(pair: Option<&TruncationPair>, dims: (usize, usize, usize)) -> Result<Tensor3> {
    match pair {
        Some(p) => {
            check_pair(p, dims)?;
            p.gradient()
        }
        None => Tensor3::zeros(dims),
    }
}

/// `tr(a * x * bᵀ)` from the frontal-slice sums of `a`, `x` and `b` alone.
pub fn trace_term(pair: &TruncationPair, x: &Tensor3) -> Result<f64> {
    check_pair(pair, x.dims())?;
    let a = first_fourier_slice(&pair.a);
    let b = first_fourier_slice(&pair.b);
    let xs = first_fourier_slice(x);
    Ok((a * xs * b.transpose()).trace())
}

/// `tr(a * x * bᵀ)` by forming the t-products explicitly.
pub fn trace_term_reference(pair: &TruncationPair, x: &Tensor3) -> Result<f64> {
    check_pair(pair, x.dims())?;
    t_product(&t_product(&pair.a, x)?, &conj_transpose(&pair.b))?.trace()
}

/// Inner objective for diagnostics: `‖x‖_* − tr(a * x * bᵀ)`, plus
/// `λ/2 ‖x_Ω − m_Ω‖²_F` when the configured method is APGL.
pub fn objective_value(
    x: &Tensor3,
    m: &Tensor3,
    omega: &ObservationMask,
    pair: Option<&TruncationPair>,
    cfg: &SolverConfig,
) -> Result<f64> {
    omega.check_dims(x)?;
    x.check_same_dims(m)?;
    let trace = match pair {
        Some(p) => trace_term(p, x)?,
        None => 0.0,
    };
    let mut value = tensor_nuclear_norm(x)? - trace;
    if cfg.method == Method::Apgl {
        let misfit = restrict_observed(&(x - m), omega)?.frobenius();
        value += 0.5 * cfg.lambda * misfit * misfit;
    }
    Ok(value)
}

/// APGL momentum update `t_{k+1} = (1 + √(1 + 4 t_k²)) / 2`.
pub fn next_momentum(t: f64) -> f64 {
    0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt())
}

/// ADMM on `min ‖X‖_* − tr(A * W * Bᵀ)  s.t.  X = W, W_Ω = M_Ω`, started from
/// `X = W = Y = x0`. Returns the last W iterate, which satisfies the
/// observation constraint exactly.
pub fn admm_inner(
    m: &Tensor3,
    omega: &ObservationMask,
    pair: Option<&TruncationPair>,
    cfg: &SolverConfig,
    x0: &Tensor3,
) -> Result<InnerSolution> {
    check_problem(m, omega, pair.map_or(0, |p| p.r))?;
    x0.check_same_dims(m)?;
    let gradient = trace_gradient(pair, m.dims())?;
    let inv_mu = 1.0 / cfg.mu;
    let mut state = SolverState::new(x0);
    let mut converged = false;
    while state.k < cfg.inner_max {
        let x_next = svt(&(&state.w - &(&state.y * inv_mu)), inv_mu)?;
        let w_next = &x_next + &(&(&gradient + &state.y) * inv_mu);
        let w_next = project_observed(&w_next, m, omega)?;
        state.y = &state.y + &(&(&x_next - &w_next) * cfg.mu);
        state.w = w_next;
        if state.advance(x_next, cfg)? {
            converged = true;
            break;
        }
    }
    Ok(InnerSolution {
        x: state.w,
        iterations: state.k,
        residuals: state.residual_history,
        converged,
    })
}

/// Accelerated proximal gradient on
/// `‖X‖_* − tr(A * X * Bᵀ) + λ/2 ‖X_Ω − M_Ω‖²_F`, started from `X = Y = x0`,
/// `t = 1`. The step `t_k` is also the thresholding level. Observed entries of
/// the result are reset to `m`.
pub fn apgl_inner(
    m: &Tensor3,
    omega: &ObservationMask,
    pair: Option<&TruncationPair>,
    cfg: &SolverConfig,
    x0: &Tensor3,
) -> Result<InnerSolution> {
    check_problem(m, omega, pair.map_or(0, |p| p.r))?;
    x0.check_same_dims(m)?;
    let gradient = trace_gradient(pair, m.dims())?;
    let mut state = SolverState::new(x0);
    let mut converged = false;
    while state.k < cfg.inner_max {
        let t = state.t;
        let tau = cfg.apgl_threshold_cap.map_or(t, |cap| t.min(cap));
        let misfit = restrict_observed(&(&state.y - m), omega)?;
        let step = &gradient - &(&misfit * cfg.lambda);
        let x_next = svt(&(&state.y + &(&step * t)), tau)?;
        let t_next = next_momentum(t);
        state.y = &x_next + &(&(&x_next - &state.x) * ((t - 1.0) / t_next));
        state.t = t_next;
        if state.advance(x_next, cfg)? {
            converged = true;
            break;
        }
    }
    Ok(InnerSolution {
        x: project_observed(&state.x, m, omega)?,
        iterations: state.k,
        residuals: state.residual_history,
        converged,
    })
}

/// Completes `m` from its entries on `omega`.
pub fn solve(m: &Tensor3, omega: &ObservationMask, cfg: &SolverConfig) -> Result<SolveReport> {
    cfg.validate()?;
    check_problem(m, omega, cfg.r)?;
    let start = Instant::now();
    let mut x = restrict_observed(m, omega)?;
    let mut residuals = Vec::new();
    let mut inner_iterations = Vec::new();
    let mut converged = false;

    for outer in 1..=cfg.outer_max {
        let wrap = |source: Error| Error::Solver {
            outer,
            source: Box::new(source),
        };
        let pair = if cfg.r > 0 {
            let factors = t_svd(&x).map_err(wrap)?;
            Some(extract_truncation_pair(&factors, cfg.r).map_err(wrap)?)
        } else {
            None
        };
        let inner = match cfg.method {
            Method::Admm => admm_inner(m, omega, pair.as_ref(), cfg, &x),
            Method::Apgl => apgl_inner(m, omega, pair.as_ref(), cfg, &x),
        }
        .map_err(wrap)?;
        let diff = inner.x.distance(&x)?;
        let done = cfg.stop_rule.met(diff, x.frobenius(), cfg.epsilon);
        residuals.push(diff);
        inner_iterations.push(inner.iterations);
        x = inner.x;
        if done {
            converged = true;
            break;
        }
    }

    Ok(SolveReport {
        recovered: project_observed(&x, m, omega)?,
        outer_iterations: residuals.len(),
        total_inner_iterations: inner_iterations.iter().sum(),
        inner_iterations,
        residuals,
        converged,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::completion::{
        random_mask, relative_error, scale_to_peak, synth_low_tubal_rank, PIXEL_PEAK,
    };
    use crate::tsvd::t_svd;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(dims: (usize, usize, usize), seed: u64) -> Tensor3 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Tensor3::from_fn(dims, |_, _, _| rng.random_range(-1.0..1.0)).unwrap()
    }

    fn is_feasible(x: &Tensor3, m: &Tensor3, omega: &ObservationMask) -> bool {
        x.as_slice()
            .iter()
            .zip(m.as_slice())
            .zip(omega.flags())
            .all(|((a, b), &o)| !o || a.to_bits() == b.to_bits())
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::default().validate().is_ok());
        let bad = SolverConfig {
            mu: 0.0,
            ..Default::default()
        };
        assert!(matches!(bad.validate(), Err(Error::Argument(_))));
        let bad = SolverConfig {
            inner_max: 0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = SolverConfig {
            xi: f64::NAN,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        assert_eq!("APGL".parse::<Method>().unwrap(), Method::Apgl);
        assert!("lbfgs".parse::<Method>().is_err());
    }

    #[test]
    fn momentum_sequence() {
        let t2 = next_momentum(1.0);
        assert!((t2 - (1.0 + 5f64.sqrt()) / 2.0).abs() < 1e-15);
        let t3 = next_momentum(t2);
        assert!((t3 - 0.5 * (1.0 + (1.0 + 4.0 * t2 * t2).sqrt())).abs() < 1e-15);
        assert!((t3 - 2.19353).abs() < 1e-5);
    }

    #[test]
    fn fully_observed_is_returned_unchanged() {
        let m = random((5, 4, 3), 1);
        let omega = ObservationMask::all_observed(m.dims()).unwrap();
        for method in [Method::Admm, Method::Apgl] {
            let cfg = SolverConfig {
                r: 2,
                method,
                ..Default::default()
            };
            let report = solve(&m, &omega, &cfg).unwrap();
            assert_eq!(report.recovered, m);
            assert_eq!(report.outer_iterations, 1);
            assert!(report.converged);
        }
    }

    #[test]
    fn zero_data_is_a_fixed_point_without_truncation() {
        let m = Tensor3::zeros((6, 5, 3)).unwrap();
        let omega = random_mask(m.dims(), 0.5, 2).unwrap();
        for method in [Method::Admm, Method::Apgl] {
            let cfg = SolverConfig {
                r: 0,
                method,
                ..Default::default()
            };
            let report = solve(&m, &omega, &cfg).unwrap();
            assert!(report.recovered.as_slice().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn rejects_bad_problems() {
        let m = random((4, 4, 2), 3);
        let none = ObservationMask::new(m.dims(), vec![false; 32]).unwrap();
        assert!(matches!(
            solve(&m, &none, &SolverConfig::default()),
            Err(Error::Argument(_))
        ));
        let omega = random_mask(m.dims(), 0.5, 1).unwrap();
        let cfg = SolverConfig {
            r: 5,
            ..Default::default()
        };
        assert!(matches!(solve(&m, &omega, &cfg), Err(Error::Argument(_))));
        let other = random_mask((4, 4, 3), 0.5, 1).unwrap();
        assert!(matches!(
            solve(&m, &other, &SolverConfig::default()),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn trace_term_paths_agree() {
        let x = random((5, 4, 3), 4);
        let f = t_svd(&x).unwrap();
        let pair = extract_truncation_pair(&f, 2).unwrap();
        let fast = trace_term(&pair, &x).unwrap();
        let slow = trace_term_reference(&pair, &x).unwrap();
        assert!((fast - slow).abs() <= 1e-8 * slow.abs());
        assert_eq!(
            trace_term(&pair, &Tensor3::zeros((5, 4, 3)).unwrap()).unwrap(),
            0.0
        );
        assert!(trace_term(&pair, &random((4, 4, 3), 5)).is_err());

        let mat = random((4, 4, 1), 6);
        let pair = extract_truncation_pair(&t_svd(&mat).unwrap(), 4).unwrap();
        let nuc = tensor_nuclear_norm(&mat).unwrap();
        assert!((trace_term(&pair, &mat).unwrap() - nuc).abs() <= 1e-10);
    }

    #[test]
    fn objective_cases() {
        let m = random((4, 3, 2), 7);
        let full = ObservationMask::all_observed(m.dims()).unwrap();
        for method in [Method::Admm, Method::Apgl] {
            let cfg = SolverConfig {
                r: 0,
                method,
                ..Default::default()
            };
            let v = objective_value(&m, &m, &full, None, &cfg).unwrap();
            assert_eq!(v, tensor_nuclear_norm(&m).unwrap());
            let z = Tensor3::zeros(m.dims()).unwrap();
            assert_eq!(objective_value(&z, &z, &full, None, &cfg).unwrap(), 0.0);
        }
    }

    #[test]
    fn admm_large_mu_barely_moves_first_iterate() {
        let m = random((5, 5, 2), 8);
        let omega = random_mask(m.dims(), 0.3, 3).unwrap();
        let x0 = restrict_observed(&m, &omega).unwrap();
        let cfg = SolverConfig {
            mu: 1e8,
            inner_max: 1,
            ..Default::default()
        };
        let zero_y = Tensor3::zeros(m.dims()).unwrap();
        // X₁ = SVT_{1/μ}(W₀ − Y₀/μ) with Y₀ = 0 stays within 1/μ per slice of W₀
        let x1 = svt(&(&x0 - &(&zero_y * (1.0 / cfg.mu))), 1.0 / cfg.mu).unwrap();
        assert!(x1.distance(&x0).unwrap() < 1e-6);
        let out = admm_inner(&m, &omega, None, &cfg, &x0).unwrap();
        assert_eq!(out.iterations, 1);
        assert!(is_feasible(&out.x, &m, &omega));
    }

    #[test]
    fn inner_solvers_stay_feasible() {
        let m = synth_low_tubal_rank(12, 10, 3, 2, 9).unwrap();
        let omega = random_mask(m.dims(), 0.5, 4).unwrap();
        let x0 = restrict_observed(&m, &omega).unwrap();
        let pair = extract_truncation_pair(&t_svd(&x0).unwrap(), 2).unwrap();
        let cfg = SolverConfig {
            inner_max: 20,
            ..Default::default()
        };
        for out in [
            admm_inner(&m, &omega, Some(&pair), &cfg, &x0).unwrap(),
            apgl_inner(&m, &omega, Some(&pair), &cfg, &x0).unwrap(),
        ] {
            assert!(is_feasible(&out.x, &m, &omega));
            assert_eq!(out.residuals.len(), out.iterations);
        }
    }

    #[test]
    fn threshold_cap_changes_apgl_only_when_set() {
        let m = synth_low_tubal_rank(8, 8, 3, 2, 10).unwrap();
        let omega = random_mask(m.dims(), 0.5, 5).unwrap();
        let base = SolverConfig {
            r: 2,
            method: Method::Apgl,
            outer_max: 2,
            inner_max: 30,
            ..Default::default()
        };
        let capped = SolverConfig {
            apgl_threshold_cap: Some(0.5),
            ..base.clone()
        };
        let a = solve(&m, &omega, &base).unwrap();
        let b = solve(&m, &omega, &capped).unwrap();
        assert_ne!(a.recovered, b.recovered);
        assert!(is_feasible(&b.recovered, &m, &omega));
    }

    fn pixel_scaled(n: usize, n3: usize, rank: usize, seed: u64) -> Tensor3 {
        scale_to_peak(
            &synth_low_tubal_rank(n, n, n3, rank, seed).unwrap(),
            PIXEL_PEAK,
        )
        .unwrap()
    }

    #[test]
    fn admm_inner_residual_shrinks() {
        let truth = pixel_scaled(20, 3, 3, 11);
        let omega = random_mask(truth.dims(), 0.5, 6).unwrap();
        let cfg = SolverConfig {
            r: 3,
            ..Default::default()
        };
        let x0 = restrict_observed(&truth, &omega).unwrap();
        let pair = extract_truncation_pair(&t_svd(&x0).unwrap(), 3).unwrap();
        let out = admm_inner(&truth, &omega, Some(&pair), &cfg, &x0).unwrap();
        let first = out.residuals[0];
        let last = *out.residuals.last().unwrap();
        assert!(last < 1e-5 * first, "{first} -> {last}");
        assert_eq!(out.converged, last <= cfg.xi);
        assert_eq!(out.converged, out.iterations < cfg.inner_max);
    }

    #[test]
    fn recovers_small_low_rank_tensor() {
        let truth = pixel_scaled(30, 5, 3, 2);
        let omega = random_mask(truth.dims(), 0.5, 9).unwrap();
        let report = solve(
            &truth,
            &omega,
            &SolverConfig {
                r: 3,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(is_feasible(&report.recovered, &truth, &omega));
        assert!(relative_error(&report.recovered, &truth).unwrap() < 1e-3);
        assert_eq!(report.inner_iterations.len(), report.outer_iterations);

        let truth = pixel_scaled(20, 3, 2, 11);
        let omega = random_mask(truth.dims(), 0.5, 6).unwrap();
        let cfg = SolverConfig {
            r: 2,
            method: Method::Apgl,
            ..Default::default()
        };
        let report = solve(&truth, &omega, &cfg).unwrap();
        assert!(relative_error(&report.recovered, &truth).unwrap() < 1e-3);
    }
}
