//! Trajectories of the SICA system over a time scale, and the empirical checks run on
//! them.
//!
//! [`simulate`] walks the quadrature grid of the scale. A right-scattered point is
//! crossed with the exact implicit step [`scattered_step`]. Dense pieces are
//! integrated with classic RK4 at `dense_step`, and the substep is halved whenever a
//! stage would leave the nonnegative orthant.

use std::io::{self, Write};

use crate::analysis::{lyapunov_v, PermanenceBounds, Series, StabilityCertificate};
use crate::error::{Error, Result};
use crate::model::{rhs_dense, scattered_step, ContactRateMode, SicaParams, State};
use crate::scalar::Scalar;
use crate::timescale::TimeScale;

/// Halvings allowed within one dense grid step before giving up.
const MAX_HALVINGS: u32 = 40;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// RK4 substep on dense intervals.
    pub dense_step: f64,
    /// Final time; must lie within the scale's range.
    pub horizon: f64,
    /// Keep every n-th dense grid point. Scattered points are always kept.
    pub record_every: usize,
}

impl SolverConfig {
    pub fn new(dense_step: f64, horizon: f64, record_every: usize) -> Result<Self> {
        let cfg = SolverConfig {
            dense_step,
            horizon,
            record_every,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dense_step > 0.0 && self.dense_step.is_finite()) {
            return Err(Error::InvalidArgument(format!("dense_step must be positive, got {}", self.dense_step)));
        }
        if !self.horizon.is_finite() {
            return Err(Error::InvalidArgument(format!("horizon must be finite, got {}", self.horizon)));
        }
        if self.record_every == 0 {
            return Err(Error::InvalidArgument("record_every must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory<S = f64> {
    pub times: Vec<f64>,
    pub states: Vec<State<S>>,
    /// Contact rate at each recorded point.
    pub lambdas: Vec<S>,
    /// Graininess of the scale at each recorded point.
    pub mus: Vec<f64>,
    pub mode: ContactRateMode,
    pub params: SicaParams,
}

impl<S: Scalar> Trajectory<S> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_state(&self) -> &State<S> {
        self.states.last().expect("trajectories are never empty")
    }

    /// Compartment `i` (0-based) as a sampled series.
    pub fn series(&self, i: usize) -> Series {
        Series {
            times: self.times.clone(),
            mus: self.mus.clone(),
            values: self.states.iter().map(|s| s.to_array()[i].to_f64()).collect(),
        }
    }

    /// CSV with header `t,x1,x2,x3,x4,N,lambda,mu`, 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "t,x1,x2,x3,x4,N,lambda,mu")?;
        for k in 0..self.len() {
            let s = &self.states[k];
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                self.times[k].sci(),
                s.x1.sci(),
                s.x2.sci(),
                s.x3.sci(),
                s.x4.sci(),
                s.total().sci(),
                self.lambdas[k].sci(),
                self.mus[k].sci()
            )?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV output is ASCII")
    }
}

fn axpy<S: Scalar>(s: &State<S>, h: S, k: &[S; 4]) -> State<S> {
    State::new(s.x1 + h * k[0], s.x2 + h * k[1], s.x3 + h * k[2], s.x4 + h * k[3])
}

fn rk4_step<S: Scalar>(
    s: &State<S>,
    t: f64,
    h: f64,
    mode: &ContactRateMode,
    p: &SicaParams,
) -> Result<State<S>> {
    let hs = S::from_f64(h);
    let half = S::from_f64(0.5 * h);
    let f = |t: f64, z: &State<S>| -> Result<[S; 4]> { Ok(rhs_dense(z, mode.rate_at(t, z, p)?, p)) };
    let k1 = f(t, s)?;
    let k2 = f(t + 0.5 * h, &axpy(s, half, &k1))?;
    let k3 = f(t + 0.5 * h, &axpy(s, half, &k2))?;
    let k4 = f(t + h, &axpy(s, hs, &k3))?;
    let sixth = S::from_f64(h / 6.0);
    let two = S::from_f64(2.0);
    let comb = |i: usize| k1[i] + two * k2[i] + two * k3[i] + k4[i];
    Ok(State::new(
        s.x1 + sixth * comb(0),
        s.x2 + sixth * comb(1),
        s.x3 + sixth * comb(2),
        s.x4 + sixth * comb(3),
    ))
}

/// Advances across one dense grid step `[t, t + h]`.
fn dense_advance<S: Scalar>(
    s: &State<S>,
    t: f64,
    h: f64,
    mode: &ContactRateMode,
    p: &SicaParams,
) -> Result<State<S>> {
    let mut state = *s;
    let mut done = 0.0;
    let mut sub = h;
    let mut halvings = 0;
    while done < h {
        let step = sub.min(h - done);
        let trial = rk4_step(&state, t + done, step, mode, p);
        match trial {
            Ok(next) if next.is_finite() && next.is_nonnegative() => {
                state = next;
                done += step;
                if h - done <= 1e-14 * h {
                    break;
                }
            }
            Ok(next) if !next.is_finite() => {
                return Err(Error::NonfiniteState {
                    t: t + done,
                    detail: format!("RK4 stage produced {:?}", next.to_f64()),
                });
            }
            Err(e @ Error::H1Violation { .. }) => return Err(e),
            _ => {
                halvings += 1;
                if halvings > MAX_HALVINGS {
                    return Err(Error::NonfiniteState {
                        t: t + done,
                        detail: format!("no nonnegative step after {MAX_HALVINGS} halvings"),
                    });
                }
                sub = step / 2.0;
            }
        }
    }
    Ok(state)
}

/// Runs the system from `init` at `ts.min()` up to `cfg.horizon`.
pub fn simulate<S: Scalar>(
    ts: &TimeScale,
    p: &SicaParams,
    mode: &ContactRateMode,
    init: State<S>,
    cfg: &SolverConfig,
) -> Result<Trajectory<S>> {
    p.validate()?;
    cfg.validate()?;
    let span_tol = 1e-12 * cfg.horizon.abs().max(1.0);
    if cfg.horizon < ts.min() - span_tol || cfg.horizon > ts.max() + span_tol {
        return Err(Error::InvalidArgument(format!(
            "horizon {} outside the time scale range [{}, {}]",
            cfg.horizon,
            ts.min(),
            ts.max()
        )));
    }
    if !init.is_finite() || !init.is_nonnegative() || !(init.total() > S::zero()) {
        return Err(Error::InvalidArgument(format!(
            "initial state must be finite, nonnegative, with N > 0; got {:?}",
            init.to_f64()
        )));
    }

    let grid = ts.truncate(cfg.horizon)?.grid(cfg.dense_step);
    let true_mu = |k: usize| {
        if k + 1 < grid.len() {
            grid[k].mu
        } else {
            ts.graininess(grid[k].t).unwrap_or(0.0)
        }
    };

    let mut traj = Trajectory {
        times: Vec::new(),
        states: Vec::new(),
        lambdas: Vec::new(),
        mus: Vec::new(),
        mode: mode.clone(),
        params: *p,
    };
    let mut state = init;
    let mut lam = mode.rate_at(grid[0].t, &state, p)?;
    let record = |traj: &mut Trajectory<S>, k: usize, state: &State<S>, lam: S| {
        traj.times.push(grid[k].t);
        traj.states.push(*state);
        traj.lambdas.push(lam);
        traj.mus.push(true_mu(k));
    };
    record(&mut traj, 0, &state, lam);

    for k in 0..grid.len() - 1 {
        let (g, next) = (grid[k], grid[k + 1]);
        state = if g.mu > 0.0 {
            scattered_step(&state, lam, g.mu, p)
        } else {
            dense_advance(&state, g.t, next.t - g.t, mode, p)?
        };
        if !state.is_finite() {
            return Err(Error::NonfiniteState {
                t: next.t,
                detail: format!("state {:?}", state.to_f64()),
            });
        }
        lam = match mode.rate_at(next.t, &state, p) {
            Ok(l) => l,
            Err(Error::EmptyPopulation { n }) => {
                return Err(Error::NonfiniteState {
                    t: next.t,
                    detail: format!("population collapsed to {n}"),
                })
            }
            Err(e) => return Err(e),
        };
        let last = k + 2 == grid.len();
        let keep = (k + 1) % cfg.record_every == 0 || g.mu > 0.0 || next.mu > 0.0 || last;
        if keep {
            record(&mut traj, k + 1, &state, lam);
        }
    }
    Ok(traj)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairReport {
    /// `V(t) <= V(t0) e_{(-)Psi}(t, t0) (1 + tol)` at every shared point.
    pub holds: bool,
    pub tol: f64,
    pub psi: f64,
    pub times: Vec<f64>,
    pub v: Vec<f64>,
    /// `V(t0) e_{(-)Psi}(t, t0)`.
    pub envelope: Vec<f64>,
    /// Largest `V / envelope` (0 when `V` vanishes identically).
    pub worst_ratio: f64,
    pub worst_at: f64,
    /// `max(0, worst_ratio - 1)`.
    pub max_violation: f64,
    /// Least-squares slope of `ln V` against `t` over the second half of the run.
    pub fitted_slope: Option<f64>,
    /// The slope expressed as a time-scale rate `r` with `V ~ e_{(-)r}` at the mean
    /// graininess of the window; equals `-slope` on dense scales.
    pub fitted_rate: Option<f64>,
}

impl PairReport {
    /// Passes when the envelope holds and the fitted rate is at least `Psi`
    /// (trivially when `V` is identically zero).
    pub fn verdict(&self) -> bool {
        self.holds && self.fitted_rate.map_or(self.v.iter().all(|&v| v == 0.0), |r| r >= self.psi)
    }
}

pub const PAIR_TOL: f64 = 1e-2;

/// Compares two trajectories against the certified exponential contraction.
pub fn pair_convergence<S: Scalar>(
    a: &Trajectory<S>,
    b: &Trajectory<S>,
    cert: &StabilityCertificate,
) -> Result<PairReport> {
    let psi = match (cert.h2_holds, cert.psi) {
        (true, Some(psi)) => psi,
        _ => {
            let worst = cert.dominant_gain();
            return Err(Error::CertificateNotHeld(format!(
                "Gamma2 = {} (b{}) >= Gamma1 = {}",
                cert.gamma2,
                worst + 1,
                cert.gamma1
            )));
        }
    };
    if a.times != b.times || a.mus != b.mus {
        return Err(Error::MismatchedTrajectories("time grids differ".into()));
    }
    if a.params != b.params {
        return Err(Error::MismatchedTrajectories("parameters differ".into()));
    }
    if a.mode != b.mode {
        return Err(Error::MismatchedTrajectories("contact-rate modes differ".into()));
    }
    if a.is_empty() {
        return Err(Error::MismatchedTrajectories("trajectories are empty".into()));
    }

    let n = a.len();
    let v: Vec<f64> = (0..n).map(|k| lyapunov_v(&a.states[k], &b.states[k]).to_f64()).collect();
    let mut envelope = Vec::with_capacity(n);
    let mut e = 1.0;
    envelope.push(v[0]);
    for k in 0..n - 1 {
        let dt = a.times[k + 1] - a.times[k];
        let mu = a.mus[k];
        e *= if mu > 0.0 && (dt - mu).abs() <= 1e-9 * mu.max(1.0) {
            1.0 / (1.0 + mu * psi)
        } else {
            (-psi * dt).exp()
        };
        envelope.push(v[0] * e);
    }

    let (mut worst_ratio, mut worst_at) = (0.0, a.times[0]);
    let mut holds = true;
    for k in 0..n {
        let ratio = if envelope[k] > 0.0 {
            v[k] / envelope[k]
        } else if v[k] == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        if ratio > worst_ratio {
            worst_ratio = ratio;
            worst_at = a.times[k];
        }
        if ratio > 1.0 + PAIR_TOL {
            holds = false;
        }
    }

    let t0 = a.times[0];
    let t_mid = t0 + 0.5 * (a.times[n - 1] - t0);
    let window: Vec<usize> = (0..n).filter(|&k| a.times[k] >= t_mid && v[k] > 0.0).collect();
    let fitted_slope = (window.len() >= 2).then(|| {
        let m = window.len() as f64;
        let mean_t = window.iter().map(|&k| a.times[k]).sum::<f64>() / m;
        let mean_y = window.iter().map(|&k| v[k].ln()).sum::<f64>() / m;
        let (mut sxy, mut sxx) = (0.0, 0.0);
        for &k in &window {
            let dx = a.times[k] - mean_t;
            sxy += dx * (v[k].ln() - mean_y);
            sxx += dx * dx;
        }
        sxy / sxx
    });
    let fitted_rate = fitted_slope.map(|slope| {
        let steps = &window[..window.len() - 1];
        let mu_bar = steps.iter().map(|&k| a.mus[k]).sum::<f64>() / steps.len() as f64;
        if mu_bar > 0.0 {
            ((-slope * mu_bar).exp() - 1.0) / mu_bar
        } else {
            -slope
        }
    });

    Ok(PairReport {
        holds,
        tol: PAIR_TOL,
        psi,
        times: a.times.clone(),
        v,
        envelope,
        worst_ratio,
        worst_at,
        max_violation: (worst_ratio - 1.0).max(0.0),
        fitted_slope,
        fitted_rate,
    })
}

pub const PERMANENCE_TOL: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct PermanenceReport {
    /// Start of the post-transient window.
    pub window_start: f64,
    pub min: [f64; 4],
    pub max: [f64; 4],
    pub lower_ok: [bool; 4],
    pub upper_ok: [bool; 4],
    /// `m_i == 0`, so the lower check says nothing.
    pub lower_vacuous: [bool; 4],
    /// Earliest recorded time after which the compartment never leaves its box.
    pub entry_time: [Option<f64>; 4],
}

impl PermanenceReport {
    pub fn inside(&self, i: usize) -> bool {
        self.lower_ok[i] && self.upper_ok[i]
    }

    pub fn all_inside(&self) -> bool {
        (0..4).all(|i| self.inside(i))
    }
}

/// Scans the final `1 - transient_fraction` of the run against the permanence boxes
/// `[m_i (1 - tol), M_i (1 + tol)]`.
pub fn permanence_check<S: Scalar>(
    traj: &Trajectory<S>,
    bounds: &PermanenceBounds,
    transient_fraction: f64,
) -> PermanenceReport {
    assert!(!traj.is_empty(), "permanence_check needs a nonempty trajectory");
    let frac = transient_fraction.clamp(0.0, 1.0);
    let t0 = traj.times[0];
    let t_end = traj.times[traj.len() - 1];
    let window_start = t0 + frac * (t_end - t0);
    let lo: [S; 4] = std::array::from_fn(|i| S::from_f64(bounds.lower[i] * (1.0 - PERMANENCE_TOL)));
    let hi: [S; 4] = std::array::from_fn(|i| S::from_f64(bounds.upper[i] * (1.0 + PERMANENCE_TOL)));
    let in_box = |i: usize, x: S| x >= lo[i] && x <= hi[i];

    let mut report = PermanenceReport {
        window_start,
        min: [f64::INFINITY; 4],
        max: [f64::NEG_INFINITY; 4],
        lower_ok: [true; 4],
        upper_ok: [true; 4],
        lower_vacuous: std::array::from_fn(|i| bounds.lower[i] == 0.0),
        entry_time: [None; 4],
    };
    for i in 0..4 {
        let mut min: Option<S> = None;
        let mut max: Option<S> = None;
        for (k, s) in traj.states.iter().enumerate() {
            if traj.times[k] < window_start {
                continue;
            }
            let x = s.to_array()[i];
            min = Some(min.map_or(x, |m| m.min(x)));
            max = Some(max.map_or(x, |m| m.max(x)));
            report.lower_ok[i] &= x >= lo[i];
            report.upper_ok[i] &= x <= hi[i];
        }
        // A window holding no recorded point leaves the last point as the sample.
        let last = traj.final_state().to_array()[i];
        let (min, max) = (min.unwrap_or(last), max.unwrap_or(last));
        report.min[i] = min.to_f64();
        report.max[i] = max.to_f64();
        report.lower_ok[i] &= min >= lo[i];
        report.upper_ok[i] &= max <= hi[i];

        let mut entry = None;
        for k in (0..traj.len()).rev() {
            if in_box(i, traj.states[k].to_array()[i]) {
                entry = Some(traj.times[k]);
            } else {
                break;
            }
        }
        report.entry_time[i] = entry;
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::certificate;
    use crate::model::disease_free_equilibrium;
    use crate::scalar::Wide;
    use approx::assert_relative_eq;

    fn morocco_z(horizon: i64) -> (TimeScale, SolverConfig) {
        (
            TimeScale::integers(0, horizon).unwrap(),
            SolverConfig::new(1.0, horizon as f64, 1).unwrap(),
        )
    }

    fn scaled_initial() -> State {
        let n0 = 325235.0;
        State::morocco_initial().map(|x| x * n0)
    }

    #[test]
    fn first_step_on_integers() {
        let p = SicaParams::morocco();
        let (ts, cfg) = morocco_z(1);
        let traj = simulate(&ts, &p, &ContactRateMode::Coupled, State::morocco_initial(), &cfg).unwrap();
        assert_eq!(traj.len(), 2);
        assert_relative_eq!(traj.states[1].x1, 1576.259, max_relative = 1e-6);
        assert_eq!(traj.mus, vec![1.0, 0.0]);
    }

    #[test]
    fn horizon_zero_echoes_initial_state() {
        let p = SicaParams::morocco();
        let ts = TimeScale::integers(0, 10).unwrap();
        let cfg = SolverConfig::new(1.0, 0.0, 1).unwrap();
        let init = State::morocco_initial();
        let traj = simulate(&ts, &p, &ContactRateMode::Coupled, init, &cfg).unwrap();
        assert_eq!(traj.times, vec![0.0]);
        assert_eq!(traj.states, vec![init]);
        assert_eq!(traj.mus, vec![1.0]);
        assert_eq!(traj.to_csv_string().lines().count(), 2);
    }

    #[test]
    fn disease_free_state_is_a_fixed_point() {
        let p = SicaParams::morocco();
        let dfe = disease_free_equilibrium::<f64>(&p);
        let ts: TimeScale = "Z[0,20];[20.5,23];{25}".parse().unwrap();
        let cfg = SolverConfig::new(0.1, 25.0, 1).unwrap();
        let traj = simulate(&ts, &p, &ContactRateMode::Coupled, dfe, &cfg).unwrap();
        for s in &traj.states {
            assert_relative_eq!(s.x1, dfe.x1, max_relative = 1e-12);
            assert_eq!((s.x2, s.x3, s.x4), (0.0, 0.0, 0.0));
        }
    }

    #[test]
    fn long_coupled_run_stays_positive_in_wide() {
        let p = SicaParams::morocco();
        let (ts, cfg) = morocco_z(2555);
        let init = State::morocco_initial().convert::<Wide>();
        let traj = simulate(&ts, &p, &ContactRateMode::Coupled, init, &cfg).unwrap();
        assert_eq!(traj.len(), 2556);
        assert!(traj.states[1..].iter().all(|s| s.is_positive() && s.is_finite()));
        assert!(traj.final_state().x2.ln() < f64::MIN_POSITIVE.ln());
        // The same run in f64 underflows its infective compartments.
        let plain = simulate(&ts, &p, &ContactRateMode::Coupled, State::morocco_initial(), &cfg).unwrap();
        assert!(plain.final_state().x2 < f64::MIN_POSITIVE);
    }

    #[test]
    fn record_every_keeps_scattered_points() {
        let p = SicaParams::morocco();
        let ts: TimeScale = "[0,1];{2};[3,4]".parse().unwrap();
        let cfg = SolverConfig::new(0.01, 4.0, 25).unwrap();
        let mode = ContactRateMode::constant(0.5).unwrap();
        let traj = simulate(&ts, &p, &mode, scaled_initial(), &cfg).unwrap();
        for t in [0.0, 1.0, 2.0, 3.0, 4.0] {
            assert!(traj.times.contains(&t), "missing {t}");
        }
        assert!(traj.times.windows(2).all(|w| w[0] < w[1]));
        assert!(traj.len() < 20);
        let full = simulate(&ts, &p, &mode, scaled_initial(), &SolverConfig { record_every: 1, ..cfg }).unwrap();
        assert_eq!(full.final_state(), traj.final_state());
    }

    #[test]
    fn exogenous_signal_leaving_bounds_is_reported() {
        use crate::signal::AlmostPeriodicSignal;
        let p = SicaParams::morocco();
        let sig = AlmostPeriodicSignal::constant(0.5).with_term(0.2, 1.0, 0.0);
        let mode = ContactRateMode::exogenous_with_bounds(sig, 0.4, 0.6).unwrap();
        let ts = TimeScale::interval(0.0, 3.0).unwrap();
        let cfg = SolverConfig::new(0.01, 3.0, 1).unwrap();
        let err = simulate(&ts, &p, &mode, scaled_initial(), &cfg).unwrap_err();
        assert_eq!(err.code(), "H1_VIOLATION");
    }

    #[test]
    fn invalid_inputs() {
        let p = SicaParams::morocco();
        let ts = TimeScale::integers(0, 5).unwrap();
        let mode = ContactRateMode::Coupled;
        let bad = SolverConfig {
            dense_step: 1.0,
            horizon: 6.0,
            record_every: 1,
        };
        assert!(simulate(&ts, &p, &mode, scaled_initial(), &bad).is_err());
        assert!(SolverConfig::new(0.0, 1.0, 1).is_err());
        assert!(SolverConfig::new(1.0, 1.0, 0).is_err());
        let cfg = SolverConfig::new(1.0, 5.0, 1).unwrap();
        let zero = State::from_f64(0.0, 0.0, 0.0, 0.0);
        assert!(simulate(&ts, &p, &mode, zero, &cfg).is_err());
    }

    fn h2_setup() -> (SicaParams, ContactRateMode, PermanenceBounds) {
        use crate::signal::AlmostPeriodicSignal;
        let mut p = SicaParams::morocco();
        p.beta = 1e-6;
        p.nu = 0.5;
        p.rho = 0.1;
        p.phi = 0.1;
        p.omega = 0.1;
        p.gamma = 0.1;
        let sig = AlmostPeriodicSignal::constant(0.5).with_term(0.05, 1.0, 0.0);
        let mode = ContactRateMode::exogenous(sig).unwrap();
        let (l, u) = match &mode {
            ContactRateMode::Exogenous { lambda_l, lambda_u, .. } => (*lambda_l, *lambda_u),
            ContactRateMode::Coupled => unreachable!(),
        };
        (p, mode.clone(), PermanenceBounds::compute(&p, l, u).unwrap())
    }

    #[test]
    fn pair_on_identical_trajectories() {
        let (p, mode, bounds) = h2_setup();
        let ts = TimeScale::lattice(0.0, 5.0, 0.05).unwrap();
        let cfg = SolverConfig::new(1.0, 5.0, 1).unwrap();
        let traj = simulate(&ts, &p, &mode, State::from_f64(4000.0, 10.0, 5.0, 2.0), &cfg).unwrap();
        let cert = certificate(&p, &bounds, ts.mu_sup(5.0)).unwrap();
        let r = pair_convergence(&traj, &traj, &cert).unwrap();
        assert!(r.holds && r.verdict());
        assert!(r.v.iter().all(|&v| v == 0.0));
        assert_eq!(r.fitted_rate, None);
    }

    #[test]
    fn pair_contracts_on_lattice() {
        let (p, mode, bounds) = h2_setup();
        let ts = TimeScale::lattice(0.0, 25.0, 0.05).unwrap();
        let cfg = SolverConfig::new(1.0, 25.0, 1).unwrap();
        let z0 = State::from_f64(4000.0, 10.0, 5.0, 2.0);
        let a = simulate(&ts, &p, &mode, z0, &cfg).unwrap();
        let b = simulate(&ts, &p, &mode, z0.map(|x| x * 1.01), &cfg).unwrap();
        let cert = certificate(&p, &bounds, ts.mu_sup(25.0)).unwrap();
        assert!(cert.h2_holds);
        let r = pair_convergence(&a, &b, &cert).unwrap();
        assert!(r.holds, "worst ratio {}", r.worst_ratio);
        assert!(r.fitted_rate.unwrap() >= r.psi, "{:?} vs {}", r.fitted_rate, r.psi);
    }

    #[test]
    fn pair_errors() {
        let (p, mode, bounds) = h2_setup();
        let ts = TimeScale::integers(0, 5).unwrap();
        let cfg = SolverConfig::new(1.0, 5.0, 1).unwrap();
        let z0 = State::from_f64(4000.0, 10.0, 5.0, 2.0);
        let a = simulate(&ts, &p, &mode, z0, &cfg).unwrap();
        let short = simulate(&ts, &p, &mode, z0, &SolverConfig { horizon: 4.0, ..cfg }).unwrap();
        let cert = certificate(&p, &bounds, 1.0).unwrap();
        assert_eq!(pair_convergence(&a, &short, &cert).unwrap_err().code(), "MISMATCHED_TRAJECTORIES");
        let morocco = SicaParams::morocco();
        let mb = PermanenceBounds::compute(&morocco, 2.49e-6, 0.811).unwrap();
        let failing = certificate(&morocco, &mb, 1.0).unwrap();
        let err = pair_convergence(&a, &a, &failing).unwrap_err();
        assert_eq!(err.code(), "CERTIFICATE_NOT_HELD");
        assert!(err.to_string().contains("b4"), "{err}");
    }

    #[test]
    fn permanence_on_dfe_flags_infectives() {
        let p = SicaParams::morocco();
        let (ts, cfg) = morocco_z(50);
        let dfe = disease_free_equilibrium::<f64>(&p);
        let traj = simulate(&ts, &p, &ContactRateMode::Coupled, dfe, &cfg).unwrap();
        let bounds = PermanenceBounds::compute(&p, 0.5, 0.5).unwrap();
        let r = permanence_check(&traj, &bounds, 0.5);
        assert!(!r.lower_ok[1]);
        assert!(r.upper_ok.iter().all(|&ok| ok));
        assert_eq!(r.entry_time[1], None);

        let degenerate = PermanenceBounds::compute(&p, 0.0, 0.5).unwrap();
        let r = permanence_check(&traj, &degenerate, 0.5);
        assert_eq!(r.lower_vacuous, [false, true, true, true]);
        assert!(r.lower_ok[1] && r.lower_ok[2] && r.lower_ok[3]);
    }

    #[test]
    fn permanence_constant_rate_on_integers() {
        let p = SicaParams::morocco();
        let (ts, cfg) = morocco_z(3000);
        let mode = ContactRateMode::constant(0.5).unwrap();
        let traj = simulate(&ts, &p, &mode, scaled_initial(), &cfg).unwrap();
        let bounds = PermanenceBounds::compute(&p, 0.5, 0.5).unwrap();
        let r = permanence_check(&traj, &bounds, 0.5);
        assert!(r.all_inside(), "{r:?}");
        assert!(r.entry_time.iter().all(|e| e.is_some_and(|t| t <= 1500.0)));
    }
}
