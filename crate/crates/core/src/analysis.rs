//! Permanence bounds, the uniform-stability certificate and the scalar comparison
//! inequality.
//!
//! Under a contact rate confined to `[lambda_L, lambda_U]` every positive solution is
//! eventually boxed in `[m_i, M_i]` ([`PermanenceBounds`]). The certificate compares the
//! smallest loss coefficient `Gamma1 = min a_i` with the largest gain coefficient
//! `Gamma2 = max b_i`; when `Gamma2 < Gamma1` the Lyapunov distance
//! `V = sum |x_i - y_i|` between two solutions decays at least like `e_{-Psi}` with
//! `Psi = (Gamma1 - Gamma2) / (1 + Gamma1 mu_sup)`.

use crate::error::{Error, Result};
use crate::model::{ContactRateMode, SicaParams, State};
use crate::scalar::Scalar;
use crate::timescale::{TimeFunction, TimeScale};

/// `(M1, M2, M3, M4)`.
pub fn upper_bounds(p: &SicaParams, lambda_l: f64, lambda_u: f64) -> [f64; 4] {
    let m1 = p.lambda / (p.beta * lambda_l + p.nu);
    let m2 = p.beta * (lambda_u * m1 + (p.gamma + p.omega) * p.lambda / p.nu) / p.infected_outflow();
    let m3 = p.phi * m2 / p.chronic_outflow();
    let m4 = p.rho * m2 / p.aids_outflow();
    [m1, m2, m3, m4]
}

/// `(m1, m2, m3, m4)`.
pub fn lower_bounds(p: &SicaParams, lambda_l: f64, lambda_u: f64) -> [f64; 4] {
    let m1 = p.lambda / (p.beta * lambda_u + p.nu);
    let m2 = p.beta * lambda_l * m1 / p.infected_outflow();
    let m3 = p.phi * m2 / p.chronic_outflow();
    let m4 = p.rho * m2 / p.aids_outflow();
    [m1, m2, m3, m4]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PermanenceBounds {
    /// `M1..M4`.
    pub upper: [f64; 4],
    /// `m1..m4`.
    pub lower: [f64; 4],
    /// `M = max M_i`.
    pub big_m: f64,
    /// `m = min m_i`.
    pub small_m: f64,
    pub lambda_l: f64,
    pub lambda_u: f64,
}

impl PermanenceBounds {
    pub fn compute(p: &SicaParams, lambda_l: f64, lambda_u: f64) -> Result<Self> {
        if !(lambda_l <= lambda_u) || lambda_l < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "need 0 <= lambda_L <= lambda_U, got [{lambda_l}, {lambda_u}]"
            )));
        }
        let upper = upper_bounds(p, lambda_l, lambda_u);
        let lower = lower_bounds(p, lambda_l, lambda_u);
        Ok(PermanenceBounds {
            upper,
            lower,
            big_m: upper.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            small_m: lower.iter().cloned().fold(f64::INFINITY, f64::min),
            lambda_l,
            lambda_u,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityCertificate {
    /// Loss coefficients acting on the forward values.
    pub a: [f64; 4],
    /// Gain coefficients acting on the current values.
    pub b: [f64; 4],
    pub gamma1: f64,
    pub gamma2: f64,
    pub mu_sup: f64,
    pub h2_holds: bool,
    /// Decay rate, present only when `h2_holds`.
    pub psi: Option<f64>,
    /// `1 - mu_sup * Psi > 0`, i.e. `-Psi` is positively regressive on the horizon.
    pub neg_psi_regressive: bool,
    pub params: SicaParams,
    pub bounds: PermanenceBounds,
}

impl StabilityCertificate {
    /// Indices (0-based) of the gain coefficients with `b_i >= Gamma1`.
    pub fn breaking_coefficients(&self) -> Vec<usize> {
        (0..4).filter(|&i| self.b[i] >= self.gamma1).collect()
    }

    /// Index of the largest gain coefficient (the one defining `Gamma2`).
    pub fn dominant_gain(&self) -> usize {
        (0..4).fold(0, |best, i| if self.b[i] > self.b[best] { i } else { best })
    }
}

/// Builds the certificate from the parameters, permanence bounds and the supremum
/// graininess of the horizon.
pub fn certificate(p: &SicaParams, bounds: &PermanenceBounds, mu_sup: f64) -> Result<StabilityCertificate> {
    if !(bounds.small_m > 0.0) {
        return Err(Error::DegenerateBounds { m: bounds.small_m });
    }
    if !(mu_sup >= 0.0 && mu_sup.is_finite()) {
        return Err(Error::InvalidArgument(format!("mu_sup must be finite and >= 0, got {mu_sup}")));
    }
    let coupling = p.beta * p.beta * bounds.big_m / (2.0 * bounds.small_m);
    let a = [
        p.beta * bounds.lambda_l + p.nu,
        p.infected_outflow(),
        p.chronic_outflow(),
        p.aids_outflow(),
    ];
    let b = [
        p.beta * bounds.lambda_u + coupling,
        p.rho + p.phi,
        p.omega + coupling * p.eta_c,
        p.gamma + coupling * p.eta_a,
    ];
    let gamma1 = a.iter().cloned().fold(f64::INFINITY, f64::min);
    let gamma2 = b.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let h2_holds = gamma2 < gamma1;
    let psi = h2_holds.then(|| (gamma1 - gamma2) / (1.0 + gamma1 * mu_sup));
    let neg_psi_regressive = psi.is_some_and(|psi| 1.0 - mu_sup * psi > 0.0);
    Ok(StabilityCertificate {
        a,
        b,
        gamma1,
        gamma2,
        mu_sup,
        h2_holds,
        psi,
        neg_psi_regressive,
        params: *p,
        bounds: *bounds,
    })
}

/// `V(Z, Zhat) = sum_i |x_i - xhat_i|`.
pub fn lyapunov_v<S: Scalar>(z: &State<S>, zhat: &State<S>) -> S {
    (z.x1 - zhat.x1).abs() + (z.x2 - zhat.x2).abs() + (z.x3 - zhat.x3).abs() + (z.x4 - zhat.x4).abs()
}

#[derive(Debug, Clone, PartialEq)]
pub struct H1Report {
    pub holds: bool,
    pub lambda_l: f64,
    pub lambda_u: f64,
    /// Smallest and largest sampled value on `[0, horizon]` (exogenous mode only).
    pub sampled: Option<(f64, f64)>,
    pub warning: Option<String>,
}

/// Checks the bounded-positive contact rate hypothesis.
///
/// Exogenous signals are judged by their analytic envelope. The coupled contact rate
/// only has the a-priori envelope `[0, beta eta_A]`, which never certifies a positive
/// lower bound.
pub fn check_h1(mode: &ContactRateMode, p: &SicaParams, horizon: f64) -> H1Report {
    match mode {
        ContactRateMode::Exogenous { signal, .. } => {
            let (lo, hi) = signal.analytic_bounds();
            let samples = 10_000;
            let sampled = (horizon > 0.0).then(|| {
                (0..=samples)
                    .map(|k| signal.eval(horizon * k as f64 / samples as f64))
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)))
            });
            let holds = lo > 0.0;
            H1Report {
                holds,
                lambda_l: lo,
                lambda_u: hi,
                sampled,
                warning: (!holds).then(|| format!("contact-rate envelope [{lo}, {hi}] is not bounded away from 0")),
            }
        }
        ContactRateMode::Coupled => H1Report {
            holds: false,
            lambda_l: 0.0,
            lambda_u: p.contact_rate_ceiling(),
            sampled: None,
            warning: Some(
                "coupled contact rate vanishes at the disease-free state; a positive lower bound is not certified"
                    .into(),
            ),
        },
    }
}

/// A scalar quantity sampled on consecutive points of a time scale.
///
/// `mus[k]` is the graininess at `times[k]`; whenever it is positive the next sample
/// must be `times[k] + mus[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub times: Vec<f64>,
    pub mus: Vec<f64>,
    pub values: Vec<f64>,
}

impl Series {
    /// Samples `f` on `ts.grid(dense_step)`.
    pub fn on_grid(ts: &TimeScale, dense_step: f64, f: &dyn TimeFunction) -> Series {
        let grid = ts.grid(dense_step);
        Series {
            times: grid.iter().map(|g| g.t).collect(),
            mus: grid.iter().map(|g| g.mu).collect(),
            values: grid.iter().map(|g| f.at(g.t)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// `y^Delta <= b - a y^sigma` implies `y <= bound`.
    Upper,
    /// `y^Delta >= b - a y^sigma` implies `y >= bound`.
    Lower,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub direction: Direction,
    /// Sample points at which the bound was asserted (the hypothesis held on every
    /// earlier step).
    pub asserted: usize,
    /// First time at which the sampled differential inequality failed.
    pub hypothesis_broken_at: Option<f64>,
    /// Largest signed violation among asserted points (`y - bound` for upper,
    /// `bound - y` for lower); non-positive means the bound held.
    pub max_violation: f64,
    pub max_violation_at: f64,
    pub bound: Vec<f64>,
}

impl ComparisonReport {
    pub fn holds(&self, tol: f64) -> bool {
        self.max_violation <= tol
    }
}

/// Relative slack on the sampled differential inequality.
const HYPOTHESIS_RTOL: f64 = 1e-9;

/// Checks the comparison bound `y(t) <= (b/a) [1 + (a y(t0)/b - 1) e_{(-)a}(t, t0)]`
/// (or `>=`) along a sampled trajectory, wherever the differential inequality has held
/// so far.
pub fn verify_comparison(y: &Series, a: f64, b: f64, direction: Direction) -> Result<ComparisonReport> {
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::InvalidArgument(format!("need a > 0 and b > 0, got a = {a}, b = {b}")));
    }
    let n = y.len();
    if n == 0 || y.mus.len() != n || y.values.len() != n {
        return Err(Error::InvalidArgument("series must be non-empty with matching lengths".into()));
    }
    for k in 0..n {
        let factor = 1.0 - y.mus[k] * a;
        if !(factor > 0.0) {
            return Err(Error::NotRegressive {
                t: y.times[k],
                mu: y.mus[k],
                value: factor,
            });
        }
    }
    let y0 = y.values[0];
    let shape = a * y0 / b - 1.0;
    let mut e_ominus = 1.0;
    let mut bound = Vec::with_capacity(n);
    bound.push((b / a) * (1.0 + shape * e_ominus));

    let signed = |yv: f64, bv: f64| match direction {
        Direction::Upper => yv - bv,
        Direction::Lower => bv - yv,
    };
    let mut report = ComparisonReport {
        direction,
        asserted: 1,
        hypothesis_broken_at: None,
        max_violation: signed(y0, bound[0]),
        max_violation_at: y.times[0],
        bound: Vec::new(),
    };

    for k in 0..n - 1 {
        let dt = y.times[k + 1] - y.times[k];
        let mu = y.mus[k];
        if !(dt > 0.0) {
            return Err(Error::InvalidArgument(format!("times must increase at index {k}")));
        }
        let scattered = mu > 0.0;
        if scattered && (dt - mu).abs() > 1e-9 * mu.max(1.0) {
            return Err(Error::InvalidArgument(format!(
                "sample after right-scattered t = {} must be sigma(t) = {}",
                y.times[k],
                y.times[k] + mu
            )));
        }
        let (yk, yn) = (y.values[k], y.values[k + 1]);
        let y_sigma = if scattered { yn } else { yk };
        let derivative = (yn - yk) / dt;
        let rhs = b - a * y_sigma;
        let slack = HYPOTHESIS_RTOL * (b.abs() + (a * y_sigma).abs() + derivative.abs());
        let ok = match direction {
            Direction::Upper => derivative <= rhs + slack,
            Direction::Lower => derivative >= rhs - slack,
        };
        e_ominus *= if scattered { 1.0 / (1.0 + mu * a) } else { (-a * dt).exp() };
        bound.push((b / a) * (1.0 + shape * e_ominus));
        if report.hypothesis_broken_at.is_none() {
            if ok && yn > 0.0 {
                report.asserted += 1;
                let v = signed(yn, bound[k + 1]);
                if v > report.max_violation {
                    report.max_violation = v;
                    report.max_violation_at = y.times[k + 1];
                }
            } else {
                report.hypothesis_broken_at = Some(y.times[k]);
            }
        }
    }
    report.bound = bound;
    Ok(report)
}
