//! Acceptance criteria, one PASS/FAIL line each. Runs without the libtest harness so
//! the verdict lines are always printed.

use std::panic::{self, AssertUnwindSafe};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tempora::timescale::{circle_plus, ominus, ts_exp};
use tempora::{
    certificate, lower_bounds, pair_convergence, permanence_check, simulate, upper_bounds,
    verify_comparison, AlmostPeriodicSignal, ContactRateMode, Direction, PermanenceBounds,
    QuadratureConfig, Series, SicaParams, SolverConfig, State, TimeFunction, TimeScale, Wide,
};
use tempora_cli::audit::{self, Verdict};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

fn within(limit: Duration, started: Instant) -> Result<Duration, String> {
    let took = started.elapsed();
    if took > limit {
        Err(format!("took {took:?}, limit {limit:?}"))
    } else {
        Ok(took)
    }
}

// 1. Exponential identities.
fn exponential_identities() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let q = QuadratureConfig::trapezoid(1e-3);
    let scales: [(TimeScale, bool); 3] = [
        (TimeScale::integers(0, 50).unwrap(), false),
        (TimeScale::interval(0.0, 5.0).unwrap(), true),
        ("[0,1];{2};[3,4]".parse().unwrap(), true),
    ];
    let mut worst: f64 = 0.0;
    let mut checks = 0;
    for (ts, quadrature) in &scales {
        let tol = if *quadrature { 1e-6 } else { 1e-10 };
        let grid = ts.grid(0.05);
        for _ in 0..100 {
            let coef = |rng: &mut ChaCha8Rng| {
                (
                    rng.gen_range(-0.45..0.45),
                    rng.gen_range(-0.4..0.4),
                    rng.gen_range(0.1..4.0),
                    rng.gen_range(0.0..6.3),
                )
            };
            let (c1, a1, w1, f1) = coef(&mut rng);
            let (c2, a2, w2, f2) = coef(&mut rng);
            let p = move |t: f64| c1 + a1 * (w1 * t + f1).sin();
            let qf = move |t: f64| c2 + a2 * (w2 * t + f2).sin();
            let mu = |t: f64| ts.graininess(t).unwrap();
            let pq = |t: f64| circle_plus(p(t), qf(t), mu(t));
            ensure!(
                grid.iter().all(|g| 1.0 + g.mu * p(g.t) > 0.0 && 1.0 + g.mu * qf(g.t) > 0.0),
                "drew a non positively regressive p"
            );
            let mut pick = || grid[rng.gen_range(0..grid.len())].t;
            let (r, s, t) = (pick(), pick(), pick());
            let e = |f: &dyn TimeFunction, a: f64, b: f64| ts_exp(f, a, b, ts, &q).map_err(|e| e.to_string());
            let pairs = [
                (e(&p, t, s)? * e(&p, s, r)?, e(&p, t, r)?),
                (e(&p, t, s)?, 1.0 / e(&p, s, t)?),
                (e(&p, t, r)? * e(&qf, t, r)?, e(&pq, t, r)?),
                (e(&|x: f64| ominus(p(x), mu(x)).unwrap(), t, r)?, 1.0 / e(&p, t, r)?),
            ];
            for (lhs, rhs) in pairs {
                let err = rel(lhs, rhs);
                worst = worst.max(err / tol);
                checks += 1;
                ensure!(err <= tol, "identity off by {err:e} (tol {tol:e}) on {ts} at (r,s,t)=({r},{s},{t})");
            }
        }
    }
    let took = within(Duration::from_secs(10), started)?;
    Ok(format!("{checks} identities, worst error {worst:.2e} x tol, {took:.2?}"))
}

// 2. Comparison lemma against the exact recursion.
fn comparison_lemma() -> Outcome {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let ts = TimeScale::integers(0, 200).unwrap();
    let grid = ts.grid(1.0);
    let mut worst = f64::NEG_INFINITY;
    let mut perturbed_ok = 0;
    for case in 0..50 {
        let a = rng.gen_range(0.01..0.99);
        let b = rng.gen_range(0.1..10.0);
        let y0 = rng.gen_range(0.01..30.0);
        let mut values = vec![y0];
        for g in &grid[..grid.len() - 1] {
            let y = *values.last().unwrap();
            values.push((y + g.mu * b) / (1.0 + g.mu * a));
        }
        let series = Series {
            times: grid.iter().map(|g| g.t).collect(),
            mus: grid.iter().map(|g| g.mu).collect(),
            values,
        };
        for dir in [Direction::Upper, Direction::Lower] {
            let r = verify_comparison(&series, a, b, dir).map_err(|e| e.to_string())?;
            ensure!(r.hypothesis_broken_at.is_none() && r.asserted == series.len(), "case {case}: exact recursion not fully asserted");
            ensure!(r.max_violation <= 1e-10, "case {case} {dir:?}: violation {:e}", r.max_violation);
            worst = worst.max(r.max_violation);
        }

        // Push one sample above the recursion: the inequality fails on the step into it.
        let k = rng.gen_range(5..195);
        let mut bumped = series.clone();
        bumped.values[k] *= 1.0 + rng.gen_range(0.05..0.5);
        let r = verify_comparison(&bumped, a, b, Direction::Upper).map_err(|e| e.to_string())?;
        ensure!(r.hypothesis_broken_at == Some(bumped.times[k - 1]), "case {case}: break not detected at t = {}", k - 1);
        ensure!(r.asserted == k, "case {case}: asserted {} points, expected {k}", r.asserted);
        ensure!(bumped.values[k] > r.bound[k], "case {case}: bumped point does not exceed the bound");
        ensure!(r.max_violation <= 1e-10, "case {case}: asserted points violate the bound");
        perturbed_ok += 1;
    }
    let took = within(Duration::from_secs(5), started)?;
    Ok(format!("50 exact cases, worst violation {worst:.2e}; {perturbed_ok} perturbed cases withheld; {took:.2?}"))
}

// 3. Head constants of the worked example.
fn head_constants() -> Outcome {
    let a = audit::run().map_err(|e| e.to_string())?;
    let get = |name: &str| a.entry(name).ok_or_else(|| format!("audit lacks {name}"));
    let g1 = get("Gamma1")?;
    ensure!(format!("{:.2}", g1.computed) == "0.39" && g1.verdict == Verdict::Pass, "Gamma1 = {}", g1.computed);
    ensure!(audit::TINY_LAMBDA_L <= 1e-9, "M1 must use lambda_L <= 1e-9");
    let m1 = get("M1")?;
    ensure!(rel(m1.computed, 5615.384615) <= 1e-6 && m1.verdict == Verdict::Pass, "M1 = {}", m1.computed);
    let p = SicaParams::morocco();
    let chains = [
        ("M3", p.phi * 0.002773104793 / (p.omega + p.nu), 0.0005777301652),
        ("M4", p.rho * 0.002773104793 / (p.gamma + p.nu + p.d), 0.0003224540457),
        ("m3", p.phi * 5.478704120e-9 / (p.omega + p.nu), 1.141396692e-9),
        ("m4", p.rho * 5.478704120e-9 / (p.gamma + p.nu + p.d), 6.370586186e-10),
    ];
    for (name, hand, printed) in chains {
        let e = get(name)?;
        ensure!(rel(hand, printed) <= 1e-6, "{name}: hand value {hand} vs printed {printed}");
        ensure!(rel(e.computed, hand) <= 1e-12 && e.verdict == Verdict::Pass, "{name}: audit {} vs hand {hand}", e.computed);
    }
    for name in ["Gamma2", "Psi", "M2", "m1"] {
        let e = get(name)?;
        ensure!(e.verdict == Verdict::Flag, "{name} should be flagged");
        let delta = e.delta.ok_or(format!("{name} has no delta"))?;
        ensure!(delta == e.computed - e.published.unwrap(), "{name}: delta is not computed - published");
    }
    let psi_delta = (0.39 - 0.37) / (1.0 + 0.39) - 0.01391941151;
    let psi = get("Psi")?;
    ensure!(rel(psi.delta.unwrap(), psi_delta) <= 1e-12, "Psi delta {} vs {psi_delta}", psi.delta.unwrap());
    let g2 = get("Gamma2")?;
    ensure!((g2.computed - 0.81).abs() < 0.01, "recomputed Gamma2 = {}", g2.computed);
    let text = audit::render(&a).to_string();
    for key in ["Gamma2_delta=", "Psi_delta=", "M2_delta=", "m1_delta="] {
        ensure!(text.contains(key), "report lacks {key}");
    }
    Ok(format!(
        "Gamma1, M1, M3, M4, m3, m4 PASS; flags Gamma2 {:+.4e}, Psi {:+.4e}, M2 {:+.4e}, m1 {:+.4e}",
        g2.delta.unwrap(),
        psi.delta.unwrap(),
        get("M2")?.delta.unwrap(),
        get("m1")?.delta.unwrap()
    ))
}

// 4. First step against the implicit per-equation solve.
fn first_step() -> Outcome {
    let p = SicaParams::morocco();
    let x = State::morocco_initial().to_array();
    let n: f64 = x.iter().sum();
    let lam = p.beta / n * (x[1] + p.eta_c * x[2] + p.eta_a * x[3]);
    // Each equation reads y_i - x_i = gain_i(x) - loss_i * y_i; solved by damped
    // fixed-point iteration on the residual.
    let gains = [
        p.lambda,
        p.beta * lam * x[0] + p.gamma * x[3] + p.omega * x[2],
        p.phi * x[1],
        p.rho * x[1],
    ];
    let losses = [p.beta * lam + p.nu, p.rho + p.phi + p.nu, p.omega + p.nu, p.gamma + p.nu + p.d];
    let mut oracle = x;
    for i in 0..4 {
        let mut y = x[i];
        for _ in 0..400 {
            y += 0.5 * (x[i] + gains[i] - losses[i] * y - y) / (1.0 + losses[i]);
        }
        oracle[i] = y;
    }
    let ts = TimeScale::integers(0, 1).unwrap();
    let traj = simulate(&ts, &p, &ContactRateMode::Coupled, State::morocco_initial(), &SolverConfig::new(1.0, 1.0, 1).unwrap())
        .map_err(|e| e.to_string())?;
    let got = traj.states[1].to_array();
    for i in 0..4 {
        ensure!(rel(got[i], oracle[i]) <= 1e-9, "x{}(1) = {} vs oracle {}", i + 1, got[i], oracle[i]);
    }
    // The quoted values carry five or six significant digits; x4 is quoted truncated
    // (1.06257e-5 against 1.062580e-5), so they are compared at 1e-5 relative.
    let printed = [1576.259, 9.0422e-6, 4.1550e-7, 1.06257e-5];
    for i in 0..4 {
        ensure!(rel(got[i], printed[i]) <= 1e-5, "x{}(1) = {} vs quoted {}", i + 1, got[i], printed[i]);
    }
    Ok(format!("x(1) = ({:.7}, {:.6e}, {:.6e}, {:.7e})", got[0], got[1], got[2], got[3]))
}

// 5. Permanence boxes under a constant contact rate.
fn permanence() -> Outcome {
    let started = Instant::now();
    let p = SicaParams::morocco();
    let lam = 0.5;
    let ts = TimeScale::integers(0, 5000).unwrap();
    let traj = simulate(&ts, &p, &ContactRateMode::constant(lam).unwrap(), State::morocco_initial(), &SolverConfig::new(1.0, 5000.0, 1).unwrap())
        .map_err(|e| e.to_string())?;
    let bounds = PermanenceBounds::compute(&p, lam, lam).map_err(|e| e.to_string())?;
    ensure!(bounds.upper == upper_bounds(&p, lam, lam) && bounds.lower == lower_bounds(&p, lam, lam), "bounds mismatch");
    let r = permanence_check(&traj, &bounds, 0.5);
    for i in 0..4 {
        ensure!(
            r.min[i] >= bounds.lower[i] * (1.0 - 1e-3) && r.max[i] <= bounds.upper[i] * (1.0 + 1e-3),
            "x{}: [{}, {}] not in [{}, {}]",
            i + 1,
            r.min[i],
            r.max[i],
            bounds.lower[i],
            bounds.upper[i]
        );
    }
    ensure!(r.all_inside(), "permanence_check disagrees: {r:?}");
    let took = within(Duration::from_secs(10), started)?;
    Ok(format!("all four boxes hold after t = {}; {took:.2?}", r.window_start))
}

// 6. Lyapunov contraction for a certified parameter set.
fn lyapunov_contraction() -> Outcome {
    let started = Instant::now();
    let h = 0.05;
    let steps = 500;
    let horizon = h * steps as f64;
    let ts = TimeScale::lattice(0.0, horizon, h).unwrap();
    ensure!(ts.grid(1.0).len() == steps + 1, "lattice has {} points", ts.grid(1.0).len());
    let signal = AlmostPeriodicSignal::constant(0.5).with_term(0.05, 1.0, 0.0);
    let mode = ContactRateMode::exogenous(signal).map_err(|e| e.to_string())?;
    let (ll, lu) = (0.45, 0.55);
    let mu_sup = ts.mu_sup(horizon);
    let rates = [0.01, 0.055, 0.1];
    let mut found = None;
    'search: for nu in [0.5, 1.0, 1.5, 2.0] {
        for rho in rates {
            for phi in rates {
                for omega in rates {
                    for gamma in rates {
                        for beta in [1e-6, 1e-7] {
                            let p = SicaParams { nu, rho, phi, omega, gamma, beta, ..SicaParams::morocco() };
                            let bounds = PermanenceBounds::compute(&p, ll, lu).map_err(|e| e.to_string())?;
                            let cert = certificate(&p, &bounds, mu_sup).map_err(|e| e.to_string())?;
                            if cert.h2_holds && cert.neg_psi_regressive {
                                found = Some((p, cert));
                                break 'search;
                            }
                        }
                    }
                }
            }
        }
    }
    let (p, cert) = found.ok_or("no certified parameter set in the grid")?;
    let z0 = State::from_f64(4000.0, 10.0, 5.0, 2.0);
    let cfg = SolverConfig::new(1.0, horizon, 1).unwrap();
    let a = simulate(&ts, &p, &mode, z0, &cfg).map_err(|e| e.to_string())?;
    let b = simulate(&ts, &p, &mode, z0.map(|x| x * 1.01), &cfg).map_err(|e| e.to_string())?;
    let r = pair_convergence(&a, &b, &cert).map_err(|e| e.to_string())?;
    let psi = cert.psi.unwrap();

    // Envelope recomputed here: e_{(-)Psi} on a lattice is prod 1/(1 + h Psi).
    for k in 0..r.v.len() {
        let env = r.v[0] * (1.0 + mu_sup * psi).powi(-(k as i32));
        ensure!(r.v[k] <= env * 1.01, "V({}) = {:e} exceeds {:e}", a.times[k], r.v[k], env * 1.01);
    }
    ensure!(r.holds, "pair_convergence reports a violation of {:e}", r.max_violation);
    let rate = r.fitted_rate.ok_or("no fitted rate")?;
    ensure!(rate >= psi, "fitted rate {rate} < Psi {psi}");
    let took = within(Duration::from_secs(10), started)?;
    Ok(format!(
        "nu={} rho={} phi={} omega={} gamma={} beta={:e}: Psi={psi:.4}, fitted {rate:.4}, worst V/env {:.4}; {took:.2?}",
        p.nu, p.rho, p.phi, p.omega, p.gamma, p.beta, r.worst_ratio
    ))
}

// 7. Seven-year run: positivity and byte-identical output.
fn positivity_and_determinism() -> Outcome {
    let started = Instant::now();
    let first = audit::example_trajectory().map_err(|e| e.to_string())?;
    let second = audit::example_trajectory().map_err(|e| e.to_string())?;
    let (csv1, csv2) = (first.to_csv_string(), second.to_csv_string());
    let took = within(Duration::from_secs(2), started)?;
    ensure!(first.len() == 2556, "{} rows", first.len());
    ensure!(first.states[0].is_nonnegative(), "initial state negative");
    for (t, s) in first.times.iter().zip(&first.states).skip(1) {
        ensure!(s.is_finite() && s.is_positive(), "state at t = {t} not finite and positive: {s:?}");
    }
    ensure!(csv1 == csv2, "CSV output differs between runs");
    let smallest = first.states[1..].iter().map(|s| s.x4).fold(Wide::from_parts(0.5, i64::MAX / 2), |m, x| if x < m { x } else { m });
    Ok(format!("2555 steps positive (smallest x4 {smallest}); CSV identical ({} bytes); {took:.2?}", csv1.len()))
}

// 8. Lattices of shrinking step approach the interval run. The asserted error is the
// max-norm of the state difference at t = 10; the componentwise relative error is
// printed alongside but not asserted, since the tiny infected compartments are still
// pre-asymptotic at h = 1 and h = 0.1.
fn graininess_limit() -> Outcome {
    let p = SicaParams::morocco();
    let init = State::morocco_initial();
    let mode = ContactRateMode::Coupled;
    let reference = simulate(&TimeScale::interval(0.0, 10.0).unwrap(), &p, &mode, init, &SolverConfig::new(1e-3, 10.0, 1000).unwrap())
        .map_err(|e| e.to_string())?;
    let target = reference.final_state().to_array();
    let mut errors = Vec::new();
    let mut relative = Vec::new();
    for h in [1.0, 0.1, 0.01] {
        let ts = TimeScale::lattice(0.0, 10.0, h).unwrap();
        let traj = simulate(&ts, &p, &mode, init, &SolverConfig::new(1.0, 10.0, 1).unwrap()).map_err(|e| e.to_string())?;
        ensure!((traj.times.last().unwrap() - 10.0).abs() < 1e-9, "lattice h = {h} ends at {}", traj.times.last().unwrap());
        let got = traj.final_state().to_array();
        errors.push((0..4).map(|i| (got[i] - target[i]).abs()).fold(0.0, f64::max));
        relative.push((0..4).map(|i| rel(got[i], target[i])).fold(0.0, f64::max));
    }
    let order = |e: &[f64]| -> Vec<f64> { e.windows(2).map(|w| (w[0] / w[1]).log10()).collect() };
    let (orders, rel_orders) = (order(&errors), order(&relative));
    ensure!(errors.windows(2).all(|w| w[1] < w[0]), "errors not decreasing: {errors:?}");
    ensure!(orders.iter().all(|&o| o >= 1.0), "empirical orders {orders:?} below 1 (errors {errors:?})");
    Ok(format!(
        "max-norm errors {:.3e}, {:.3e}, {:.3e}, orders {:.3}, {:.3}; relative errors {:.3e}, {:.3e}, {:.3e}, orders {:.2}, {:.2} (not asserted)",
        errors[0], errors[1], errors[2], orders[0], orders[1], relative[0], relative[1], relative[2], rel_orders[0], rel_orders[1]
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("1 exponential identities", exponential_identities),
        ("2 comparison lemma oracle", comparison_lemma),
        ("3 example head constants", head_constants),
        ("4 one-step ground truth", first_step),
        ("5 permanence boxes", permanence),
        ("6 Lyapunov contraction", lyapunov_contraction),
        ("7 positivity and determinism", positivity_and_determinism),
        ("8 graininess to zero", graininess_limit),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (name, check) in criteria {
        let result = match panic::catch_unwind(AssertUnwindSafe(check)) {
            Ok(r) => r,
            Err(payload) => Err(payload
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| payload.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into())),
        };
        match result {
            Ok(detail) => println!("criterion {name}: PASS ({detail})"),
            Err(why) => {
                failed += 1;
                println!("criterion {name}: FAIL ({why})");
            }
        }
    }
    println!("acceptance: {} of 8 criteria passed", 8 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
