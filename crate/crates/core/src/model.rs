//! SICA model: parameters, compartment state, force of infection and the one-step
//! dynamics on dense and right-scattered parts of a time scale.
//!
//! On a right-scattered point with graininess `mu` each equation is affine in its own
//! forward value, e.g. `x1^sigma (1 + mu (beta lambda + nu)) = x1 + mu Lambda`, so the
//! step is solved in closed form. Gains use the state at `t`, losses the state at
//! `sigma(t)`; positive inputs therefore give positive outputs for every `mu > 0`.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::signal::AlmostPeriodicSignal;

/// Rates of the SICA model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SicaParams {
    /// Recruitment of susceptibles.
    pub lambda: f64,
    /// HIV transmission rate.
    pub beta: f64,
    /// Natural death rate.
    pub nu: f64,
    /// Default treatment rate of `I`.
    pub rho: f64,
    /// HIV treatment rate of `I`.
    pub phi: f64,
    /// AIDS treatment rate.
    pub gamma: f64,
    /// Default treatment rate of `C`.
    pub omega: f64,
    /// AIDS induced death rate.
    pub d: f64,
    /// Modification parameter, in `[0, 1]`.
    pub eta_c: f64,
    /// Partial restoration parameter, at least 1.
    pub eta_a: f64,
    /// Drop the factor `beta` from the contact rate, giving the conventional force of
    /// infection `beta (I + eta_C C + eta_A A) / N` in the infection term. Off by
    /// default: the term is then `beta * lambda * S` with `lambda` itself carrying `beta`.
    pub single_beta: bool,
}

impl SicaParams {
    /// The Morocco parametrisation with `eta_C = 0.5`, `eta_A = 1.5`.
    pub fn morocco() -> Self {
        SicaParams {
            lambda: 2190.0,
            beta: 2.7e-7,
            nu: 0.39,
            rho: 0.2,
            phi: 0.1,
            gamma: 0.33,
            omega: 0.09,
            d: 1.0,
            eta_c: 0.5,
            eta_a: 1.5,
            single_beta: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let rates = [
            ("Lambda", self.lambda),
            ("beta", self.beta),
            ("nu", self.nu),
            ("rho", self.rho),
            ("phi", self.phi),
            ("gamma", self.gamma),
            ("omega", self.omega),
            ("d", self.d),
        ];
        for (name, v) in rates {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParams(format!("{name} must be a positive rate, got {v}")));
            }
        }
        if !(0.0..=1.0).contains(&self.eta_c) {
            return Err(Error::InvalidParams(format!("eta_C must lie in [0, 1], got {}", self.eta_c)));
        }
        if !(self.eta_a >= 1.0 && self.eta_a.is_finite()) {
            return Err(Error::InvalidParams(format!("eta_A must be at least 1, got {}", self.eta_a)));
        }
        Ok(())
    }

    /// Loss coefficient of `I`: `rho + phi + nu`.
    pub fn infected_outflow(&self) -> f64 {
        self.rho + self.phi + self.nu
    }

    /// Loss coefficient of `C`: `omega + nu`.
    pub fn chronic_outflow(&self) -> f64 {
        self.omega + self.nu
    }

    /// Loss coefficient of `A`: `gamma + nu + d`.
    pub fn aids_outflow(&self) -> f64 {
        self.gamma + self.nu + self.d
    }

    /// Upper end of the a-priori contact-rate envelope; `lambda <= beta * eta_A` always.
    pub fn contact_rate_ceiling(&self) -> f64 {
        if self.single_beta {
            self.eta_a
        } else {
            self.beta * self.eta_a
        }
    }
}

/// Compartments `(S, I, C, A)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct State<S = f64> {
    pub x1: S,
    pub x2: S,
    pub x3: S,
    pub x4: S,
}

impl<S: Scalar> State<S> {
    pub fn new(x1: S, x2: S, x3: S, x4: S) -> Self {
        State { x1, x2, x3, x4 }
    }

    /// Builds a state of any scalar type from `f64` components.
    pub fn lift(x1: f64, x2: f64, x3: f64, x4: f64) -> Self {
        State::new(S::from_f64(x1), S::from_f64(x2), S::from_f64(x3), S::from_f64(x4))
    }

    pub fn from_array(x: [S; 4]) -> Self {
        State::new(x[0], x[1], x[2], x[3])
    }

    pub fn to_array(self) -> [S; 4] {
        [self.x1, self.x2, self.x3, self.x4]
    }

    pub fn to_f64(self) -> State<f64> {
        State::new(self.x1.to_f64(), self.x2.to_f64(), self.x3.to_f64(), self.x4.to_f64())
    }

    pub fn convert<T: Scalar>(self) -> State<T> {
        let s = self.to_f64();
        State::lift(s.x1, s.x2, s.x3, s.x4)
    }

    /// Total population `N`.
    pub fn total(&self) -> S {
        self.x1 + self.x2 + self.x3 + self.x4
    }

    pub fn map(self, f: impl Fn(S) -> S) -> Self {
        State::new(f(self.x1), f(self.x2), f(self.x3), f(self.x4))
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|x| x.is_finite())
    }

    pub fn is_nonnegative(&self) -> bool {
        self.to_array().iter().all(|&x| x >= S::zero())
    }

    pub fn is_positive(&self) -> bool {
        self.to_array().iter().all(|&x| x > S::zero())
    }
}

impl State<f64> {
    pub fn from_f64(x1: f64, x2: f64, x3: f64, x4: f64) -> Self {
        State::new(x1, x2, x3, x4)
    }

    /// Initial data of the Morocco example: one unit of population split as
    /// `(1 - 11/N0, 2/N0, 0, 9/N0)` with `N0 = 325235`.
    pub fn morocco_initial() -> Self {
        let n0 = 325235.0;
        State::new(1.0 - 11.0 / n0, 2.0 / n0, 0.0, 9.0 / n0)
    }
}

/// Where the contact rate comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum ContactRateMode {
    /// `lambda` is computed from the current state.
    Coupled,
    /// `lambda(t)` is an external almost periodic signal confined to
    /// `[lambda_l, lambda_u]`.
    Exogenous {
        signal: AlmostPeriodicSignal,
        lambda_l: f64,
        lambda_u: f64,
    },
}

impl ContactRateMode {
    /// Exogenous mode with bounds taken from the signal's analytic envelope.
    pub fn exogenous(signal: AlmostPeriodicSignal) -> Result<Self> {
        let (lo, hi) = signal.analytic_bounds();
        ContactRateMode::exogenous_with_bounds(signal, lo, hi)
    }

    pub fn exogenous_with_bounds(signal: AlmostPeriodicSignal, lambda_l: f64, lambda_u: f64) -> Result<Self> {
        if !(lambda_l > 0.0 && lambda_l <= lambda_u && lambda_u.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "exogenous contact rate needs 0 < lambda_L <= lambda_U, got [{lambda_l}, {lambda_u}]"
            )));
        }
        Ok(ContactRateMode::Exogenous {
            signal,
            lambda_l,
            lambda_u,
        })
    }

    /// Exogenous constant rate `c` with `lambda_L = lambda_U = c`.
    pub fn constant(c: f64) -> Result<Self> {
        ContactRateMode::exogenous(AlmostPeriodicSignal::constant(c))
    }

    /// Contact rate at time `t` for state `s`.
    pub fn rate_at<S: Scalar>(&self, t: f64, s: &State<S>, p: &SicaParams) -> Result<S> {
        match self {
            ContactRateMode::Coupled => contact_rate(s, p),
            ContactRateMode::Exogenous {
                signal,
                lambda_l,
                lambda_u,
            } => {
                let v = signal.eval(t);
                if !(v >= *lambda_l && v <= *lambda_u) {
                    return Err(Error::H1Violation {
                        t,
                        lambda: v,
                        lo: *lambda_l,
                        hi: *lambda_u,
                    });
                }
                Ok(S::from_f64(v))
            }
        }
    }
}

/// Effective contact rate `lambda = (beta / N) (x2 + eta_C x3 + eta_A x4)`.
pub fn contact_rate<S: Scalar>(s: &State<S>, p: &SicaParams) -> Result<S> {
    let n = s.total();
    if !(n > S::zero()) {
        return Err(Error::EmptyPopulation { n: n.to_f64() });
    }
    let weighted = s.x2 + S::from_f64(p.eta_c) * s.x3 + S::from_f64(p.eta_a) * s.x4;
    let scale = if p.single_beta { 1.0 } else { p.beta };
    Ok(S::from_f64(scale) / n * weighted)
}

/// Right-hand side of the dense (`sigma(t) = t`) system.
pub fn rhs_dense<S: Scalar>(s: &State<S>, lam: S, p: &SicaParams) -> [S; 4] {
    let c = S::from_f64;
    let infection = c(p.beta) * lam * s.x1;
    [
        c(p.lambda) - infection - c(p.nu) * s.x1,
        infection - c(p.infected_outflow()) * s.x2 + c(p.gamma) * s.x4 + c(p.omega) * s.x3,
        c(p.phi) * s.x2 - c(p.chronic_outflow()) * s.x3,
        c(p.rho) * s.x2 - c(p.aids_outflow()) * s.x4,
    ]
}

/// Exact update over one right-scattered step of graininess `mu`.
pub fn scattered_step<S: Scalar>(s: &State<S>, lam: S, mu: f64, p: &SicaParams) -> State<S> {
    let c = S::from_f64;
    let one = c(1.0);
    let m = c(mu);
    let infection_rate = c(p.beta) * lam;
    State {
        x1: (s.x1 + m * c(p.lambda)) / (one + m * (infection_rate + c(p.nu))),
        x2: (s.x2 + m * (infection_rate * s.x1 + c(p.gamma) * s.x4 + c(p.omega) * s.x3))
            / (one + m * c(p.infected_outflow())),
        x3: (s.x3 + m * c(p.phi) * s.x2) / (one + m * c(p.chronic_outflow())),
        x4: (s.x4 + m * c(p.rho) * s.x2) / (one + m * c(p.aids_outflow())),
    }
}

/// `(Lambda / nu, 0, 0, 0)`.
pub fn disease_free_equilibrium<S: Scalar>(p: &SicaParams) -> State<S> {
    State::lift(p.lambda / p.nu, 0.0, 0.0, 0.0)
}
