//! The four commands. Each returns the text for stdout plus an exit code, and writes
//! its files under the output directory.

use std::fs;
use std::path::{Path, PathBuf};

use tempora::{
    certificate, check_h1, pair_convergence, simulate, PermanenceBounds, Scalar,
    StabilityCertificate, Trajectory, Wide,
};

use crate::audit;
use crate::config::{ConfigError, ModeConfig, RunConfig};
use crate::report::{num, opt_num, verdict, Report};
use crate::svg::line_chart;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_CERTIFICATE: i32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Model(#[from] tempora::Error),
    #[error("IO_ERROR: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Model(tempora::Error::DegenerateBounds { .. }) => EXIT_CERTIFICATE,
            _ => EXIT_INPUT,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| io_err(&path, e))?;
    Ok(path)
}

/// `--out` wins over `[output] dir`, which wins over the working directory.
pub fn output_dir(cfg: &RunConfig, out: Option<&Path>) -> PathBuf {
    match (out, &cfg.output_dir) {
        (Some(o), _) => o.to_path_buf(),
        (None, Some(d)) => PathBuf::from(d),
        (None, None) => PathBuf::from("."),
    }
}

/// `[lambda_L, lambda_U]` used by the analysis and where it came from.
fn analysis_band(cfg: &RunConfig) -> Result<(f64, f64, &'static str), CliError> {
    if let Some((lo, hi)) = cfg.lambda_bounds {
        return Ok((lo, hi, "override"));
    }
    match &cfg.mode {
        ModeConfig::Exogenous { signal } => {
            let (lo, hi) = signal.analytic_bounds();
            Ok((lo, hi, "signal_envelope"))
        }
        ModeConfig::Coupled => Err(CliError::Config(ConfigError {
            line: 1,
            column: 1,
            message: "coupled mode needs lambda_L and lambda_U in [mode] for the analysis".into(),
        })),
    }
}

struct Analysis {
    report: Report,
    cert: StabilityCertificate,
}

fn analyse(cfg: &RunConfig) -> Result<Analysis, CliError> {
    let (lo, hi, source) = analysis_band(cfg)?;
    let mode = cfg.contact_mode()?;
    let p = &cfg.params;
    let horizon = cfg.solver.horizon;
    let h1 = check_h1(&mode, p, horizon);
    let bounds = PermanenceBounds::compute(p, lo, hi)?;
    let mu_sup = cfg.timescale.mu_sup(horizon);
    let cert = certificate(p, &bounds, mu_sup)?;

    let mut r = Report::new();
    r.section("input")
        .kv("timescale", &cfg.timescale_literal)
        .kv("horizon", num(horizon))
        .kv("translation_invariant", cfg.timescale.is_translation_invariant())
        .kv("mode", if matches!(cfg.mode, ModeConfig::Coupled) { "coupled" } else { "exogenous" })
        .kv("single_beta", p.single_beta);
    r.section("h1")
        .kv("H1_holds", h1.holds)
        .kv("envelope_lambda_L", num(h1.lambda_l))
        .kv("envelope_lambda_U", num(h1.lambda_u));
    if let Some((smin, smax)) = h1.sampled {
        r.kv("sampled_min", num(smin)).kv("sampled_max", num(smax));
    }
    if let Some(w) = &h1.warning {
        r.kv("warning", w);
    }
    r.kv("lambda_L", num(lo)).kv("lambda_U", num(hi)).kv("band_source", source);
    r.section("bounds");
    for i in 0..4 {
        r.kv(&format!("M{}", i + 1), num(bounds.upper[i]));
    }
    for i in 0..4 {
        r.kv(&format!("m{}", i + 1), num(bounds.lower[i]));
    }
    r.kv("M", num(bounds.big_m)).kv("m", num(bounds.small_m));
    r.section("certificate");
    for i in 0..4 {
        r.kv(&format!("a{}", i + 1), num(cert.a[i]));
    }
    for i in 0..4 {
        r.kv(&format!("b{}", i + 1), num(cert.b[i]));
    }
    r.kv("Gamma1", num(cert.gamma1))
        .kv("Gamma2", num(cert.gamma2))
        .kv("mu_sup", num(cert.mu_sup))
        .kv("H2_holds", cert.h2_holds)
        .kv("Psi", opt_num(cert.psi))
        .kv("neg_Psi_positively_regressive", cert.neg_psi_regressive);
    let breaking: Vec<String> = cert.breaking_coefficients().iter().map(|i| format!("b{}", i + 1)).collect();
    if !breaking.is_empty() {
        r.kv("breaking", breaking.join(","));
    }
    Ok(Analysis { report: r, cert })
}

fn certificate_failure(cert: &StabilityCertificate) -> String {
    let i = cert.dominant_gain();
    format!(
        "CERTIFICATE_NOT_HELD: b{} = {} >= Gamma1 = {} (Gamma2 < Gamma1 fails)",
        i + 1,
        num(cert.b[i]),
        num(cert.gamma1)
    )
}

pub fn analyze(cfg: &RunConfig, out: Option<&Path>) -> Result<Outcome, CliError> {
    let Analysis { mut report, cert } = analyse(cfg)?;
    let certified = cert.h2_holds && cert.neg_psi_regressive;
    report.section("verdict").kv("H2", verdict(certified));
    let dir = output_dir(cfg, out);
    let path = write_file(&dir, &cfg.report_name, &report.to_string())?;
    let mut stdout = report.to_string();
    if !certified {
        stdout.push_str(&certificate_failure(&cert));
        stdout.push('\n');
    }
    stdout.push_str(&format!("report written to {}\n", path.display()));
    Ok(Outcome {
        code: if certified { EXIT_OK } else { EXIT_CERTIFICATE },
        stdout,
    })
}

pub fn run_trajectory(cfg: &RunConfig) -> Result<Trajectory<Wide>, CliError> {
    let mode = cfg.contact_mode()?;
    Ok(simulate(&cfg.timescale, &cfg.params, &mode, cfg.initial.convert::<Wide>(), &cfg.solver)?)
}

pub const COMPARTMENTS: [&str; 4] = ["x1", "x2", "x3", "x4"];

pub fn simulate_cmd(cfg: &RunConfig, out: Option<&Path>, svg: bool) -> Result<Outcome, CliError> {
    let traj = run_trajectory(cfg)?;
    let dir = output_dir(cfg, out);
    let csv = write_file(&dir, &cfg.csv_name, &traj.to_csv_string())?;
    let mut stdout = format!("rows={}\ncsv={}\n", traj.len(), csv.display());
    if svg {
        for (i, name) in COMPARTMENTS.iter().enumerate() {
            let ys: Vec<f64> = traj.states.iter().map(|s| s.to_array()[i].to_f64()).collect();
            let chart = line_chart(&format!("{name}(t)"), "t", name, &traj.times, &ys);
            let path = write_file(&dir, &format!("{name}.svg"), &chart)?;
            stdout.push_str(&format!("svg={}\n", path.display()));
        }
    }
    Ok(Outcome { code: EXIT_OK, stdout })
}

pub fn stability_demo(cfg: &RunConfig, perturb: f64, out: Option<&Path>) -> Result<Outcome, CliError> {
    if !(perturb >= 0.0 && perturb.is_finite()) {
        return Err(CliError::Config(ConfigError {
            line: 0,
            column: 0,
            message: format!("--perturb must be finite and >= 0, got {perturb}"),
        }));
    }
    let Analysis { mut report, cert } = analyse(cfg)?;
    let dir = output_dir(cfg, out);
    if !cert.h2_holds {
        report.section("verdict").kv("pair", "NOT_RUN");
        write_file(&dir, &cfg.report_name, &report.to_string())?;
        return Ok(Outcome {
            code: EXIT_CERTIFICATE,
            stdout: format!("{report}{}\n", certificate_failure(&cert)),
        });
    }
    let a = run_trajectory(cfg)?;
    let shifted = RunConfig {
        initial: cfg.initial.map(|x| x * (1.0 + perturb)),
        ..cfg.clone()
    };
    let b = run_trajectory(&shifted)?;
    let pair = pair_convergence(&a, &b, &cert)?;

    let mut csv = String::from("t,V,envelope,ratio\n");
    for k in 0..pair.times.len() {
        let ratio = if pair.envelope[k] > 0.0 { pair.v[k] / pair.envelope[k] } else { 0.0 };
        csv.push_str(&format!(
            "{},{},{},{}\n",
            pair.times[k].sci(),
            pair.v[k].sci(),
            pair.envelope[k].sci(),
            ratio.sci()
        ));
    }
    let v_path = write_file(&dir, "lyapunov_v.csv", &csv)?;
    let pass = pair.verdict();
    report
        .section("pair")
        .kv("perturbation", num(perturb))
        .kv("points", pair.times.len())
        .kv("V0", num(pair.v[0]))
        .kv("envelope_holds", pair.holds)
        .kv("tol", num(pair.tol))
        .kv("worst_ratio", num(pair.worst_ratio))
        .kv("worst_at", num(pair.worst_at))
        .kv("max_violation", num(pair.max_violation))
        .kv("fitted_slope", opt_num(pair.fitted_slope))
        .kv("fitted_rate", opt_num(pair.fitted_rate))
        .kv("Psi", num(pair.psi))
        .kv("v_csv", v_path.display());
    report.section("verdict").kv("pair", verdict(pass));
    write_file(&dir, &cfg.report_name, &report.to_string())?;
    Ok(Outcome {
        code: if pass { EXIT_OK } else { EXIT_CERTIFICATE },
        stdout: report.to_string(),
    })
}

pub fn reproduce_example(out: Option<&Path>) -> Result<Outcome, CliError> {
    let audit = audit::run()?;
    let report = audit::render(&audit);
    let mut stdout = report.to_string();
    if let Some(dir) = out {
        let path = write_file(dir, "audit.txt", &stdout)?;
        let csv = write_file(dir, "example_trajectory.csv", &audit.trajectory.to_csv_string())?;
        stdout.push_str(&format!("audit written to {}\ncsv written to {}\n", path.display(), csv.display()));
    }
    Ok(Outcome { code: EXIT_OK, stdout })
}

pub fn dump_config(cfg: &RunConfig) -> Outcome {
    Outcome {
        code: EXIT_OK,
        stdout: cfg.dump(),
    }
}
