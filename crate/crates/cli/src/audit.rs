//! Audit of the Morocco worked example: recomputes every derivable constant and sets
//! it beside the published value.
//!
//! The published head constants do not share one pair `(lambda_L, lambda_U)`, so the
//! unstated bounds are inferred by inverting individual formulas. Formula chains that
//! only depend on a published value (`M3, M4` from `M2`, `m3, m4` from `m2`) are checked
//! to `1e-6` relative. Head constants are compared at the precision they were printed
//! with and flagged when they disagree. Nothing is corrected.

use tempora::{
    certificate, lower_bounds, simulate, upper_bounds, ContactRateMode, PermanenceBounds, Scalar,
    SicaParams, SolverConfig, State, TimeScale, Trajectory, Wide,
};

use crate::report::{num, Report};

pub const N0: f64 = 325235.0;
pub const HORIZON_DAYS: i64 = 2555;
/// Stand-in for a negligible `lambda_L` when checking `M1` and `Gamma1`.
pub const TINY_LAMBDA_L: f64 = 1e-9;
pub const CHAIN_RTOL: f64 = 1e-6;

/// Published constants, kept as printed so their precision is known.
pub mod published {
    pub const M1: &str = "5615.384615";
    pub const M2: &str = "0.002773104793";
    pub const M3: &str = "0.0005777301652";
    pub const M4: &str = "0.0003224540457";
    pub const SMALL_M1: &str = "5615.381462";
    pub const SMALL_M2: &str = "5.478704120e-9";
    pub const SMALL_M3: &str = "1.141396692e-9";
    pub const SMALL_M4: &str = "6.370586186e-10";
    pub const GAMMA1: &str = "0.39";
    pub const GAMMA2: &str = "0.37";
    pub const PSI: &str = "0.01391941151";
}

fn value(printed: &str) -> f64 {
    printed.parse().expect("published constants are valid numbers")
}

/// Half a unit in the last printed digit of `printed`.
pub fn half_unit(printed: &str) -> f64 {
    let (mantissa, exp) = match printed.find(['e', 'E']) {
        Some(i) => (&printed[..i], printed[i + 1..].parse::<i32>().unwrap_or(0)),
        None => (printed, 0),
    };
    let decimals = mantissa.find('.').map_or(0, |dot| mantissa.len() - dot - 1) as i32;
    0.5 * 10f64.powi(exp - decimals)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Flag,
    /// A bound reconstructed from a published constant; nothing to compare.
    Inferred,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "PASS",
            Verdict::Flag => "FLAG",
            Verdict::Inferred => "INFERRED",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub name: &'static str,
    pub computed: f64,
    pub published: Option<f64>,
    /// `computed - published`.
    pub delta: Option<f64>,
    pub rel: Option<f64>,
    /// Tolerance the verdict was judged against, as `|delta| <= tol`.
    pub tol: Option<f64>,
    pub verdict: Verdict,
    pub how: String,
}

fn compare(name: &'static str, computed: f64, printed: &str, tol: f64, how: String) -> Entry {
    let published = value(printed);
    let delta = computed - published;
    Entry {
        name,
        computed,
        published: Some(published),
        delta: Some(delta),
        rel: Some(delta / published),
        tol: Some(tol),
        verdict: if delta.abs() <= tol { Verdict::Pass } else { Verdict::Flag },
        how,
    }
}

fn relative(name: &'static str, computed: f64, printed: &str, how: String) -> Entry {
    compare(name, computed, printed, CHAIN_RTOL * value(printed).abs(), how)
}

fn printed_precision(name: &'static str, computed: f64, printed: &str, how: String) -> Entry {
    compare(name, computed, printed, half_unit(printed), how)
}

fn inferred(name: &'static str, computed: f64, how: String) -> Entry {
    Entry {
        name,
        computed,
        published: None,
        delta: None,
        rel: None,
        tol: None,
        verdict: Verdict::Inferred,
        how,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationSummary {
    pub steps: usize,
    pub all_finite: bool,
    /// Every compartment `> 0` at every `t > t0`.
    pub positive_after_start: bool,
    /// Smallest value of each compartment over `t > t0`, in scientific notation.
    pub min_after_start: [String; 4],
    pub max: [f64; 4],
    pub max_total: f64,
    /// `x1 <= max(x1(0), Lambda / nu)` throughout.
    pub x1_bounded: bool,
}

#[derive(Debug, Clone)]
pub struct Audit {
    pub entries: Vec<Entry>,
    pub simulation: SimulationSummary,
    pub trajectory: Trajectory<Wide>,
}

impl Audit {
    pub fn entry(&self, name: &str) -> Option<&Entry> {
        self.entries.iter().find(|e| e.name == name)
    }
}

pub fn example_params() -> SicaParams {
    SicaParams::morocco()
}

/// Runs the example on `Z[0, 2555]` in coupled mode from the published initial state.
pub fn example_trajectory() -> tempora::Result<Trajectory<Wide>> {
    let p = example_params();
    let ts = TimeScale::integers(0, HORIZON_DAYS)?;
    let cfg = SolverConfig::new(1.0, HORIZON_DAYS as f64, 1)?;
    simulate(&ts, &p, &ContactRateMode::Coupled, State::morocco_initial().convert::<Wide>(), &cfg)
}

fn summarize(traj: &Trajectory<Wide>, p: &SicaParams) -> SimulationSummary {
    let later = &traj.states[1..];
    let all_finite = traj.states.iter().all(|s| s.is_finite());
    let positive_after_start = later.iter().all(|s| s.is_positive());
    let min_after_start = std::array::from_fn(|i| {
        later
            .iter()
            .map(|s| s.to_array()[i])
            .fold(None, |m: Option<Wide>, x| Some(m.map_or(x, |m| m.min(x))))
            .map_or_else(|| "absent".to_string(), |w| w.sci())
    });
    let max = std::array::from_fn(|i| {
        traj.states.iter().map(|s| s.to_array()[i].to_f64()).fold(f64::NEG_INFINITY, f64::max)
    });
    let max_total = traj.states.iter().map(|s| s.total().to_f64()).fold(f64::NEG_INFINITY, f64::max);
    let x1_cap = traj.states[0].x1.to_f64().max(p.lambda / p.nu);
    SimulationSummary {
        steps: traj.len() - 1,
        all_finite,
        positive_after_start,
        min_after_start,
        max,
        max_total,
        x1_bounded: traj.states.iter().all(|s| s.x1.to_f64() <= x1_cap * (1.0 + 1e-12)),
    }
}

pub fn run() -> tempora::Result<Audit> {
    use published as pb;
    let p = example_params();
    let mu = 1.0;
    let (a2, a3, a4) = (p.infected_outflow(), p.chronic_outflow(), p.aids_outflow());
    let mut entries = Vec::new();

    // Head constants with a negligible lambda_L.
    let tiny = PermanenceBounds::compute(&p, TINY_LAMBDA_L, 1.0)?;
    let tiny_cert = certificate(&p, &tiny, mu)?;
    let gamma1 = tiny_cert.gamma1;
    entries.push(Entry {
        verdict: if format!("{gamma1:.2}") == pb::GAMMA1 { Verdict::Pass } else { Verdict::Flag },
        ..printed_precision("Gamma1", gamma1, pb::GAMMA1, format!("min a_i with lambda_L = {TINY_LAMBDA_L:e}; exact at printed precision"))
    });
    entries.push(relative(
        "M1",
        tiny.upper[0],
        pb::M1,
        format!("Lambda/(beta lambda_L + nu) with lambda_L = {TINY_LAMBDA_L:e}"),
    ));

    // Bounds inferred from individual published constants.
    let m1_published = value(pb::SMALL_M1);
    let big_m1_published = value(pb::M1);
    let big_m2_published = value(pb::M2);
    let m2_published = value(pb::SMALL_M2);
    let lu_from_m1 = (p.lambda / m1_published - p.nu) / p.beta;
    let lu_from_m2 = (big_m2_published * a2 / p.beta - (p.gamma + p.omega) * p.lambda / p.nu) / big_m1_published;
    let ll_from_m2 = m2_published * a2 / (p.beta * m1_published);
    entries.push(inferred("lambda_U_from_m1", lu_from_m1, "(Lambda/m1 - nu)/beta".into()));
    entries.push(inferred(
        "lambda_U_from_M2",
        lu_from_m2,
        "(M2 a2/beta - (gamma+omega) Lambda/nu)/M1".into(),
    ));
    entries.push(inferred("lambda_L_from_m2", ll_from_m2, "m2 a2/(beta m1)".into()));

    // Cross-checks: each head constant recomputed with the bound inferred from the other.
    let m2_cross = upper_bounds(&p, TINY_LAMBDA_L, lu_from_m1)[1];
    entries.push(printed_precision(
        "M2",
        m2_cross,
        pb::M2,
        "beta(lambda_U M1 + (gamma+omega) Lambda/nu)/a2 with lambda_U inferred from m1".into(),
    ));
    let m1_cross = lower_bounds(&p, ll_from_m2, lu_from_m2)[0];
    entries.push(printed_precision(
        "m1",
        m1_cross,
        pb::SMALL_M1,
        "Lambda/(beta lambda_U + nu) with lambda_U inferred from M2".into(),
    ));

    // Formula chains from the published M2 and m2.
    entries.push(relative("M3", p.phi * big_m2_published / a3, pb::M3, "phi M2/(omega+nu) from published M2".into()));
    entries.push(relative("M4", p.rho * big_m2_published / a4, pb::M4, "rho M2/(gamma+nu+d) from published M2".into()));
    entries.push(relative("m3", p.phi * m2_published / a3, pb::SMALL_M3, "phi m2/(omega+nu) from published m2".into()));
    entries.push(relative("m4", p.rho * m2_published / a4, pb::SMALL_M4, "rho m2/(gamma+nu+d) from published m2".into()));

    // Certificate from the inferred band.
    let band = PermanenceBounds::compute(&p, ll_from_m2, lu_from_m1)?;
    let cert = certificate(&p, &band, mu)?;
    let dominant = cert.dominant_gain();
    entries.push(printed_precision(
        "Gamma2",
        cert.gamma2,
        pb::GAMMA2,
        format!(
            "max b_i with M = max M_i, m = min m_i over lambda in [lambda_L_from_m2, lambda_U_from_m1]; b{} dominates",
            dominant + 1
        ),
    ));
    let psi_from_published = (value(pb::GAMMA1) - value(pb::GAMMA2)) / (1.0 + value(pb::GAMMA1) * mu);
    entries.push(printed_precision(
        "Psi",
        psi_from_published,
        pb::PSI,
        "(Gamma1 - Gamma2)/(1 + Gamma1 mu) from the published Gamma1, Gamma2 with mu = 1".into(),
    ));
    match cert.psi {
        Some(psi) => entries.push(printed_precision("Psi_recomputed", psi, pb::PSI, "from recomputed Gamma1, Gamma2".into())),
        None => entries.push(Entry {
            name: "Psi_recomputed",
            computed: f64::NAN,
            published: Some(value(pb::PSI)),
            delta: None,
            rel: None,
            tol: None,
            verdict: Verdict::Flag,
            how: format!(
                "undefined: recomputed Gamma2 = {} >= Gamma1 = {}",
                num(cert.gamma2),
                num(cert.gamma1)
            ),
        }),
    }

    let trajectory = example_trajectory()?;
    let simulation = summarize(&trajectory, &p);
    Ok(Audit {
        entries,
        simulation,
        trajectory,
    })
}

pub fn render(audit: &Audit) -> Report {
    let mut r = Report::new();
    r.section("example")
        .kv("N0", num(N0))
        .kv("timescale", format!("Z[0,{HORIZON_DAYS}]"))
        .kv("mode", "coupled")
        .kv("mu", 1);
    r.section("constants");
    for e in &audit.entries {
        let opt = |x: Option<f64>| x.map_or_else(|| "absent".to_string(), num);
        r.line(format!(
            "constant={} computed={} published={} delta={} rel={} tol={} verdict={}",
            e.name,
            if e.computed.is_nan() { "absent".to_string() } else { num(e.computed) },
            opt(e.published),
            opt(e.delta),
            opt(e.rel),
            opt(e.tol),
            e.verdict.as_str()
        ));
        r.line(format!("  how: {}", e.how));
    }
    r.section("paper_delta");
    for e in audit.entries.iter().filter(|e| e.verdict == Verdict::Flag) {
        match e.delta {
            Some(d) => r.kv(&format!("{}_delta", e.name), num(d)),
            None => r.kv(&format!("{}_delta", e.name), "undefined"),
        };
    }
    let s = &audit.simulation;
    r.section("simulation")
        .kv("steps", s.steps)
        .kv("all_finite", s.all_finite)
        .kv("positive_after_start", s.positive_after_start)
        .kv("x1_bounded", s.x1_bounded)
        .kv("max_N", num(s.max_total));
    for i in 0..4 {
        r.kv(&format!("min_x{}", i + 1), &s.min_after_start[i]);
        r.kv(&format!("max_x{}", i + 1), num(s.max[i]));
    }
    let pass = audit.entries.iter().filter(|e| e.verdict == Verdict::Pass).count();
    let flag = audit.entries.iter().filter(|e| e.verdict == Verdict::Flag).count();
    r.section("summary").kv("pass", pass).kv("flag", flag);
    r
}
