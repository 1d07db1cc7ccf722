//! Explicit ODE integration for hybrid models.
//!
//! Two methods: fixed-step forward Euler, and the Dormand–Prince 5(4)
//! embedded Runge–Kutta pair with adaptive step size. An [`Integrator`]
//! keeps its state between calls so a model can advance continuous dynamics
//! one model-time unit per step with [`Integrator::step_to`], changing
//! parameters in between.
//!
//! Dormand–Prince tableau (FSAL, the 7th stage is the next step's first):
//!
//! ```text
//! 0    |
//! 1/5  | 1/5
//! 3/10 | 3/40        9/40
//! 4/5  | 44/45      -56/15      32/9
//! 8/9  | 19372/6561 -25360/2187 64448/6561 -212/729
//! 1    | 9017/3168  -355/33     46732/5247  49/176  -5103/18656
//! 1    | 35/384      0          500/1113    125/192 -2187/6784    11/84
//! -----+--------------------------------------------------------------------
//! y5   | 35/384      0          500/1113    125/192 -2187/6784    11/84    0
//! y4   | 5179/57600  0          7571/16695  393/640 -92097/339200 187/2100 1/40
//! ```
//!
//! Step control: the error of a step is the RMS over components of
//! `(y5 - y4)_i / (abs_tol + rel_tol * max(|y_i|, |y_new_i|))`; a step is
//! accepted when it is `<= 1`. The next step is scaled by
//! `0.9 * err^(-1/5)` clamped to `[0.2, 5.0]` (never growing right after a
//! rejection).

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OdeError {
    #[error("step budget of {max_steps} exhausted at t = {t}")]
    StepBudgetExceeded { t: f64, max_steps: u64 },
    #[error("non-finite state at t = {t}")]
    NumericalBlowup { t: f64 },
    #[error("invalid integrator configuration: {0}")]
    InvalidConfig(&'static str),
}

/// Right-hand side `dy = f(t, y; params)`.
pub type Rhs<P> = fn(t: f64, y: &[f64], params: &P, dy: &mut [f64]);

#[derive(Clone, Debug)]
pub struct OdeProblem<P> {
    pub rhs: Rhs<P>,
    pub t0: f64,
    pub t1: f64,
    pub y0: Vec<f64>,
    pub params: P,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Method {
    Euler { dt: f64 },
    DormandPrince,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegratorConfig {
    pub method: Method,
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Maximum accepted plus rejected steps per `step_to` call.
    pub max_steps: u64,
}

impl IntegratorConfig {
    pub fn euler(dt: f64) -> Self {
        IntegratorConfig {
            method: Method::Euler { dt },
            ..Self::adaptive(1e-8, 1e-8)
        }
    }

    pub fn adaptive(abs_tol: f64, rel_tol: f64) -> Self {
        IntegratorConfig {
            method: Method::DormandPrince,
            abs_tol,
            rel_tol,
            max_steps: 1_000_000,
        }
    }

    fn validate(&self) -> Result<(), OdeError> {
        match self.method {
            Method::Euler { dt } if !(dt > 0.0 && dt.is_finite()) => {
                Err(OdeError::InvalidConfig("euler dt must be positive"))
            }
            Method::DormandPrince if !(self.abs_tol > 0.0 && self.rel_tol > 0.0) => {
                Err(OdeError::InvalidConfig("tolerances must be positive"))
            }
            _ => Ok(()),
        }
    }
}

/// Sampled solution: times, states and derivatives at every accepted step.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub y: Vec<Vec<f64>>,
    pub dy: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn last(&self) -> Option<(f64, &[f64])> {
        Some((*self.t.last()?, self.y.last()?))
    }

    /// Cubic Hermite interpolation between the bracketing samples.
    pub fn interpolate(&self, t: f64) -> Option<Vec<f64>> {
        let first = *self.t.first()?;
        let last = *self.t.last()?;
        if t < first || t > last {
            return None;
        }
        let i = self.t.partition_point(|&s| s <= t).saturating_sub(1);
        if i + 1 >= self.t.len() {
            return Some(self.y[i].clone());
        }
        let (t0, t1) = (self.t[i], self.t[i + 1]);
        let h = t1 - t0;
        let s = (t - t0) / h;
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        Some(
            (0..self.y[i].len())
                .map(|k| {
                    h00 * self.y[i][k]
                        + h10 * h * self.dy[i][k]
                        + h01 * self.y[i + 1][k]
                        + h11 * h * self.dy[i + 1][k]
                })
                .collect(),
        )
    }

    fn push(&mut self, t: f64, y: &[f64], dy: &[f64]) {
        self.t.push(t);
        self.y.push(y.to_vec());
        self.dy.push(dy.to_vec());
    }
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// 5th-order minus 4th-order weights.
const E: [f64; 7] = [
    35.0 / 384.0 - 5179.0 / 57600.0,
    0.0,
    500.0 / 1113.0 - 7571.0 / 16695.0,
    125.0 / 192.0 - 393.0 / 640.0,
    -2187.0 / 6784.0 + 92097.0 / 339200.0,
    11.0 / 84.0 - 187.0 / 2100.0,
    -1.0 / 40.0,
];

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 5.0;

/// Stateful integrator positioned at some time `t`.
#[derive(Clone, Debug)]
pub struct Integrator<P> {
    rhs: Rhs<P>,
    params: P,
    config: IntegratorConfig,
    t: f64,
    y: Vec<f64>,
    /// `f(t, y)` when known (FSAL reuse); cleared when parameters change.
    dy: Option<Vec<f64>>,
    /// Suggested next adaptive step.
    h: Option<f64>,
    evaluations: u64,
    accepted: u64,
    rejected: u64,
}

impl<P> Integrator<P> {
    pub fn new(rhs: Rhs<P>, t0: f64, y0: Vec<f64>, params: P, config: IntegratorConfig) -> Result<Self, OdeError> {
        config.validate()?;
        Ok(Integrator {
            rhs,
            params,
            config,
            t: t0,
            y: y0,
            dy: None,
            h: None,
            evaluations: 0,
            accepted: 0,
            rejected: 0,
        })
    }

    pub fn from_problem(problem: &OdeProblem<P>, config: IntegratorConfig) -> Result<Self, OdeError>
    where
        P: Clone,
    {
        Self::new(problem.rhs, problem.t0, problem.y0.clone(), problem.params.clone(), config)
    }

    /// Seeds the adaptive controller with a step size (e.g. carried over
    /// from a previous interval).
    pub fn with_step_hint(mut self, h: Option<f64>) -> Self {
        self.h = h.filter(|h| *h > 0.0 && h.is_finite());
        self
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn params(&self) -> &P {
        &self.params
    }

    /// Parameters may change between `step_to` calls (piecewise constant).
    pub fn params_mut(&mut self) -> &mut P {
        self.dy = None;
        &mut self.params
    }

    /// Overwrites the state (e.g. after clamping).
    pub fn set_y(&mut self, y: Vec<f64>) {
        self.dy = None;
        self.y = y;
    }

    pub fn step_hint(&self) -> Option<f64> {
        self.h
    }

    /// Number of right-hand-side evaluations so far.
    pub fn evaluations(&self) -> u64 {
        self.evaluations
    }

    pub fn accepted_steps(&self) -> u64 {
        self.accepted
    }

    pub fn rejected_steps(&self) -> u64 {
        self.rejected
    }

    fn eval(&mut self, t: f64, y: &[f64], out: &mut [f64]) {
        (self.rhs)(t, y, &self.params, out);
        self.evaluations += 1;
    }

    fn current_derivative(&mut self) -> Vec<f64> {
        if let Some(d) = &self.dy {
            return d.clone();
        }
        let mut d = vec![0.0; self.y.len()];
        let (t, y) = (self.t, self.y.clone());
        self.eval(t, &y, &mut d);
        self.dy = Some(d.clone());
        d
    }

    fn scale(&self, a: f64, b: f64) -> f64 {
        self.config.abs_tol + self.config.rel_tol * a.abs().max(b.abs())
    }

    fn rms(v: impl Iterator<Item = f64>, n: usize) -> f64 {
        (v.map(|x| x * x).sum::<f64>() / n.max(1) as f64).sqrt()
    }

    /// Hairer–Wanner starting step heuristic.
    fn initial_step(&mut self, f0: &[f64], span: f64) -> f64 {
        let n = self.y.len();
        let sc: Vec<f64> = self.y.iter().map(|y| self.scale(*y, *y)).collect();
        let d0 = Self::rms(self.y.iter().zip(&sc).map(|(y, s)| y / s), n);
        let d1 = Self::rms(f0.iter().zip(&sc).map(|(f, s)| f / s), n);
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        let h0 = h0.min(span);
        let y1: Vec<f64> = self.y.iter().zip(f0).map(|(y, f)| y + h0 * f).collect();
        let mut f1 = vec![0.0; n];
        let t = self.t;
        self.eval(t + h0, &y1, &mut f1);
        let d2 = Self::rms(f1.iter().zip(f0).zip(&sc).map(|((a, b), s)| (a - b) / s), n) / h0;
        let h1 = if d1.max(d2) <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / d1.max(d2)).powf(1.0 / 5.0)
        };
        (100.0 * h0).min(h1).min(span)
    }

    /// Advances exactly to `t_target`; the last step is shortened to land on it.
    pub fn step_to(&mut self, t_target: f64) -> Result<(), OdeError> {
        self.step_to_recording(t_target, None)
    }

    fn step_to_recording(&mut self, t_target: f64, mut record: Option<&mut Trajectory>) -> Result<(), OdeError> {
        assert!(t_target >= self.t, "cannot integrate backwards ({} -> {t_target})", self.t);
        if t_target == self.t {
            return Ok(());
        }
        match self.config.method {
            Method::Euler { dt } => self.euler_to(t_target, dt, record),
            Method::DormandPrince => {
                let n = self.y.len();
                let mut k = [
                    vec![0.0; n],
                    vec![0.0; n],
                    vec![0.0; n],
                    vec![0.0; n],
                    vec![0.0; n],
                    vec![0.0; n],
                    vec![0.0; n],
                ];
                let mut stage = vec![0.0; n];
                let mut y_new = vec![0.0; n];
                let mut budget = 0u64;
                let mut last_rejected = false;
                k[0] = self.current_derivative();
                let mut h = match self.h {
                    Some(h) => h,
                    None => {
                        let f0 = k[0].clone();
                        self.initial_step(&f0, t_target - self.t)
                    }
                };
                while self.t < t_target {
                    if budget >= self.config.max_steps {
                        return Err(OdeError::StepBudgetExceeded {
                            t: self.t,
                            max_steps: self.config.max_steps,
                        });
                    }
                    budget += 1;
                    let remaining = t_target - self.t;
                    // Land exactly on the target, absorbing slivers.
                    let landing = h >= remaining || remaining - h <= 1e-12 * t_target.abs().max(1.0);
                    let h_step = if landing { remaining } else { h };

                    for s in 1..7 {
                        for i in 0..n {
                            let mut acc = 0.0;
                            for (j, kj) in k.iter().enumerate().take(s) {
                                acc += A[s][j] * kj[i];
                            }
                            stage[i] = self.y[i] + h_step * acc;
                        }
                        let ts = self.t + C[s] * h_step;
                        let (rhs, params) = (self.rhs, &self.params);
                        rhs(ts, &stage, params, &mut k[s]);
                        self.evaluations += 1;
                    }
                    // Stage 7 was evaluated at y5 (FSAL), so `stage` now holds y_new.
                    y_new.copy_from_slice(&stage);

                    let err = Self::rms(
                        (0..n).map(|i| {
                            let e: f64 = (0..7).map(|j| E[j] * k[j][i]).sum::<f64>() * h_step;
                            e / self.scale(self.y[i], y_new[i])
                        }),
                        n,
                    );
                    if !err.is_finite() || y_new.iter().any(|v| !v.is_finite()) {
                        if h_step <= f64::EPSILON * self.t.abs().max(1.0) {
                            return Err(OdeError::NumericalBlowup { t: self.t });
                        }
                        h = h_step * MIN_FACTOR;
                        self.rejected += 1;
                        last_rejected = true;
                        continue;
                    }
                    let mut factor = if err == 0.0 {
                        MAX_FACTOR
                    } else {
                        (SAFETY * err.powf(-1.0 / 5.0)).clamp(MIN_FACTOR, MAX_FACTOR)
                    };
                    if err <= 1.0 {
                        self.t = if landing { t_target } else { self.t + h_step };
                        self.y.copy_from_slice(&y_new);
                        k[0] = k[6].clone();
                        self.accepted += 1;
                        if let Some(tr) = record.as_deref_mut() {
                            tr.push(self.t, &self.y, &k[0]);
                        }
                        if last_rejected {
                            factor = factor.min(1.0);
                        }
                        last_rejected = false;
                        // A landing step shorter than proposed says nothing about the
                        // controller's preferred size, so keep it.
                        h = if landing && h_step < h { h } else { h_step * factor };
                    } else {
                        self.rejected += 1;
                        last_rejected = true;
                        h = h_step * factor.min(1.0);
                    }
                }
                self.dy = Some(k[0].clone());
                self.h = Some(h);
                Ok(())
            }
        }
    }

    fn euler_to(&mut self, t_target: f64, dt: f64, mut record: Option<&mut Trajectory>) -> Result<(), OdeError> {
        let n = self.y.len();
        let t_start = self.t;
        let span = t_target - t_start;
        let exact = (span / dt).round();
        let (full, partial) = if (exact * dt - span).abs() <= 1e-12 * span.abs().max(1.0) {
            (exact as u64, false)
        } else {
            ((span / dt).floor() as u64, true)
        };
        let mut d = vec![0.0; n];
        let total = full + partial as u64;
        if total > self.config.max_steps {
            return Err(OdeError::StepBudgetExceeded { t: self.t, max_steps: self.config.max_steps });
        }
        for k in 1..=total {
            let t_next = if k <= full && !(k == full && !partial) {
                t_start + k as f64 * dt
            } else {
                t_target
            };
            let h = t_next - self.t;
            let y = self.y.clone();
            let t = self.t;
            match self.dy.take() {
                Some(prev) => d.copy_from_slice(&prev),
                None => self.eval(t, &y, &mut d),
            }
            for i in 0..n {
                self.y[i] += h * d[i];
            }
            if self.y.iter().any(|v| !v.is_finite()) {
                return Err(OdeError::NumericalBlowup { t: t_next });
            }
            self.t = t_next;
            self.accepted += 1;
            if let Some(tr) = record.as_deref_mut() {
                let mut d_new = vec![0.0; n];
                let y = self.y.clone();
                self.eval(t_next, &y, &mut d_new);
                tr.push(t_next, &self.y, &d_new);
                self.dy = Some(d_new);
            }
        }
        Ok(())
    }

    /// Integrates to `t_target`, returning the initial point and every
    /// accepted step.
    pub fn trajectory_to(&mut self, t_target: f64) -> Result<Trajectory, OdeError> {
        let mut tr = Trajectory::default();
        let d0 = self.current_derivative();
        tr.push(self.t, &self.y.clone(), &d0);
        self.step_to_recording(t_target, Some(&mut tr))?;
        Ok(tr)
    }
}

/// Forward Euler over the problem's interval: `y_{k+1} = y_k + dt f(t_k, y_k)`,
/// with a shortened final step when `dt` does not divide the interval.
pub fn integrate_euler<P: Clone>(problem: &OdeProblem<P>, dt: f64) -> Result<Trajectory, OdeError> {
    assert!(problem.t1 >= problem.t0, "t1 must not precede t0");
    let mut it = Integrator::from_problem(problem, IntegratorConfig::euler(dt))?;
    it.config.max_steps = u64::MAX;
    it.trajectory_to(problem.t1)
}

/// Adaptive Dormand–Prince integration over the problem's interval.
pub fn integrate_adaptive<P: Clone>(problem: &OdeProblem<P>, config: IntegratorConfig) -> Result<Trajectory, OdeError> {
    assert!(problem.t1 >= problem.t0, "t1 must not precede t0");
    let mut it = Integrator::from_problem(problem, config)?;
    it.trajectory_to(problem.t1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn logistic(_t: f64, y: &[f64], p: &(f64, f64), dy: &mut [f64]) {
        let (k, h) = *p;
        dy[0] = y[0] * (1.0 - y[0] / k) - h;
    }

    fn exp_growth(_t: f64, y: &[f64], rate: &f64, dy: &mut [f64]) {
        dy[0] = rate * y[0];
    }

    fn zero(_t: f64, _y: &[f64], _p: &(), dy: &mut [f64]) {
        dy.iter_mut().for_each(|d| *d = 0.0);
    }

    fn logistic_closed_form(s0: f64, k: f64, t: f64) -> f64 {
        k / (1.0 + (k / s0 - 1.0) * (-t).exp())
    }

    #[test]
    fn euler_constant_and_single_steps() {
        let p = OdeProblem { rhs: zero, t0: 0.0, t1: 3.0, y0: vec![4.0, -1.0], params: () };
        let tr = integrate_euler(&p, 0.5).unwrap();
        assert!(tr.y.iter().all(|y| y == &vec![4.0, -1.0]));
        assert_eq!(tr.t.len(), 7);

        let p = OdeProblem { rhs: logistic, t0: 0.0, t1: 1.0, y0: vec![60.0], params: (120.0, 0.0) };
        assert_eq!(integrate_euler(&p, 1.0).unwrap().last().unwrap().1, &[90.0]);

        let p = OdeProblem { rhs: exp_growth, t0: 0.0, t1: 1.0, y0: vec![1.0], params: 1.0 };
        assert_eq!(integrate_euler(&p, 1.0).unwrap().last().unwrap().1, &[2.0]);
    }

    #[test]
    fn euler_partial_final_step_lands_on_t1() {
        let p = OdeProblem { rhs: exp_growth, t0: 0.0, t1: 1.0, y0: vec![1.0], params: 1.0 };
        let tr = integrate_euler(&p, 0.3).unwrap();
        assert_eq!(*tr.t.last().unwrap(), 1.0);
        assert_eq!(tr.t.len(), 5);
        let expect = 1.3f64.powi(3) * 1.1;
        assert!((tr.last().unwrap().1[0] - expect).abs() < 1e-12);
    }

    #[test]
    fn euler_is_first_order() {
        let err = |dt: f64| {
            let p = OdeProblem { rhs: exp_growth, t0: 0.0, t1: 1.0, y0: vec![1.0], params: 1.0 };
            (integrate_euler(&p, dt).unwrap().last().unwrap().1[0] - std::f64::consts::E).abs()
        };
        for dt in [0.1, 0.05, 0.01] {
            let ratio = err(dt) / err(dt / 2.0);
            assert!((1.8..=2.2).contains(&ratio), "dt={dt} ratio={ratio}");
        }
    }

    #[test]
    fn adaptive_matches_logistic_closed_form() {
        let p = OdeProblem { rhs: logistic, t0: 0.0, t1: 10.0, y0: vec![10.0], params: (120.0, 0.0) };
        let tr = integrate_adaptive(&p, IntegratorConfig::adaptive(1e-8, 1e-8)).unwrap();
        let (t, y) = tr.last().unwrap();
        assert_eq!(t, 10.0);
        assert!((y[0] - logistic_closed_form(10.0, 120.0, 10.0)).abs() < 1e-6);
        for (t, y) in tr.t.iter().zip(&tr.y) {
            assert!(y[0] <= 120.0 + 1e-8, "overshoot at t={t}");
        }
    }

    #[test]
    fn adaptive_exponential_decay() {
        let p = OdeProblem { rhs: exp_growth, t0: 0.0, t1: 1.0, y0: vec![1.0], params: -1.0 };
        let tr = integrate_adaptive(&p, IntegratorConfig::adaptive(1e-9, 1e-9)).unwrap();
        assert!((tr.last().unwrap().1[0] - (-1f64).exp()).abs() < 1e-6);
    }

    #[test]
    fn tightening_tolerance_reduces_error() {
        let exact = logistic_closed_form(10.0, 120.0, 10.0);
        let mut prev = f64::INFINITY;
        for tol in [1e-4, 1e-5, 1e-6, 1e-7, 1e-8] {
            let p = OdeProblem { rhs: logistic, t0: 0.0, t1: 10.0, y0: vec![10.0], params: (120.0, 0.0) };
            let tr = integrate_adaptive(&p, IntegratorConfig::adaptive(tol, tol)).unwrap();
            let err = (tr.last().unwrap().1[0] - exact).abs();
            assert!(err < prev, "tol={tol}: {err} !< {prev}");
            prev = err;
        }
    }

    #[test]
    fn step_to_current_time_is_noop_and_splits_compose() {
        let mut it = Integrator::new(logistic, 0.0, vec![10.0], (120.0, 0.0), IntegratorConfig::adaptive(1e-12, 1e-12)).unwrap();
        it.step_to(0.0).unwrap();
        assert_eq!(it.evaluations(), 0);
        it.step_to(2.5).unwrap();
        it.step_to(6.0).unwrap();
        let mut once = Integrator::new(logistic, 0.0, vec![10.0], (120.0, 0.0), IntegratorConfig::adaptive(1e-12, 1e-12)).unwrap();
        once.step_to(6.0).unwrap();
        assert_eq!(it.t(), 6.0);
        assert!((it.y()[0] - once.y()[0]).abs() < 1e-9);
    }

    #[test]
    fn budget_and_blowup_errors() {
        let mut cfg = IntegratorConfig::adaptive(1e-10, 1e-10);
        cfg.max_steps = 3;
        let mut it = Integrator::new(logistic, 0.0, vec![10.0], (120.0, 0.0), cfg).unwrap();
        assert!(matches!(it.step_to(100.0), Err(OdeError::StepBudgetExceeded { .. })));

        fn blow(_t: f64, y: &[f64], _p: &(), dy: &mut [f64]) {
            dy[0] = y[0] * y[0];
        }
        let p = OdeProblem { rhs: blow, t0: 0.0, t1: 2.0, y0: vec![1e100], params: () };
        assert!(matches!(integrate_euler(&p, 0.5), Err(OdeError::NumericalBlowup { .. })));
        assert!(Integrator::new(blow, 0.0, vec![1.0], (), IntegratorConfig::euler(0.0)).is_err());
    }

    #[test]
    fn hermite_interpolation_is_accurate_between_steps() {
        let p = OdeProblem { rhs: exp_growth, t0: 0.0, t1: 2.0, y0: vec![1.0], params: 1.0 };
        let tr = integrate_adaptive(&p, IntegratorConfig::adaptive(1e-10, 1e-10)).unwrap();
        for t in [0.05, 0.33, 1.21, 1.99] {
            let y = tr.interpolate(t).unwrap()[0];
            assert!((y - t.exp()).abs() < 1e-5, "t={t}");
        }
        assert!(tr.interpolate(2.5).is_none());
    }
}
