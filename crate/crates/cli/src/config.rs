//! Run configuration: flat INI-style sections of `key = value` lines.
//!
//! ```text
//! [params]
//! Lambda = 2190
//! beta = 2.7e-7
//! ...
//! [timescale]
//! literal = Z[0,2555]
//! [mode]
//! kind = exogenous
//! signal = 0.5 + 0.05*sin(1*t + 0)
//! [solver]
//! dense_step = 0.01
//! horizon = 2555
//! [initial]
//! x1 = 1 - 11/325235
//! ...
//! ```
//!
//! Numeric values accept arithmetic (`+ - * / ( )`, `pi`). `#` starts a comment.
//! Unknown sections and keys are rejected, and every error carries a 1-based line
//! and column.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use tempora::{AlmostPeriodicSignal, ContactRateMode, SicaParams, SolverConfig, State, TimeScale};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CONFIG_PARSE: line {}, column {}: {}", self.line, self.column, self.message)
    }
}

impl std::error::Error for ConfigError {}

fn err<T>(line: usize, column: usize, message: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError {
        line,
        column,
        message: message.into(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModeConfig {
    Coupled,
    Exogenous {
        signal: AlmostPeriodicSignal,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: SicaParams,
    /// The literal as written; re-emitted verbatim by [`RunConfig::dump`].
    pub timescale_literal: String,
    pub timescale: TimeScale,
    pub mode: ModeConfig,
    /// Explicit `[lambda_L, lambda_U]` for the analysis, overriding the signal envelope.
    pub lambda_bounds: Option<(f64, f64)>,
    pub solver: SolverConfig,
    pub initial: State,
    pub output_dir: Option<String>,
    pub csv_name: String,
    pub report_name: String,
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<RunConfig, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
            line: 0,
            column: 0,
            message: format!("cannot read {}: {e}", path.display()),
        })?;
        text.parse()
    }

    /// Contact-rate mode used for simulation. Explicit bounds widen or narrow the
    /// admissible band of an exogenous signal.
    pub fn contact_mode(&self) -> Result<ContactRateMode, tempora::Error> {
        match (&self.mode, self.lambda_bounds) {
            (ModeConfig::Coupled, _) => Ok(ContactRateMode::Coupled),
            (ModeConfig::Exogenous { signal }, None) => ContactRateMode::exogenous(signal.clone()),
            (ModeConfig::Exogenous { signal }, Some((lo, hi))) => {
                ContactRateMode::exogenous_with_bounds(signal.clone(), lo, hi)
            }
        }
    }

    /// Canonical text form; parses back to an identical configuration.
    pub fn dump(&self) -> String {
        let p = &self.params;
        let mut out = String::new();
        let mut line = |s: String| {
            out.push_str(&s);
            out.push('\n');
        };
        line("[params]".into());
        for (k, v) in [
            ("Lambda", p.lambda),
            ("beta", p.beta),
            ("nu", p.nu),
            ("rho", p.rho),
            ("phi", p.phi),
            ("gamma", p.gamma),
            ("omega", p.omega),
            ("d", p.d),
            ("eta_C", p.eta_c),
            ("eta_A", p.eta_a),
        ] {
            line(format!("{k} = {v:?}"));
        }
        line(format!("single_beta = {}", p.single_beta));
        line(String::new());
        line("[timescale]".into());
        line(format!("literal = {}", self.timescale_literal));
        line(String::new());
        line("[mode]".into());
        match &self.mode {
            ModeConfig::Coupled => line("kind = coupled".into()),
            ModeConfig::Exogenous { signal } => {
                line("kind = exogenous".into());
                let plain = AlmostPeriodicSignal {
                    clamp: None,
                    ..signal.clone()
                };
                line(format!("signal = {plain}"));
                if let Some((lo, hi)) = signal.clamp {
                    line(format!("signal_clamp = {lo:?}, {hi:?}"));
                }
            }
        }
        if let Some((lo, hi)) = self.lambda_bounds {
            line(format!("lambda_L = {lo:?}"));
            line(format!("lambda_U = {hi:?}"));
        }
        line(String::new());
        line("[solver]".into());
        line(format!("dense_step = {:?}", self.solver.dense_step));
        line(format!("horizon = {:?}", self.solver.horizon));
        line(format!("record_every = {}", self.solver.record_every));
        line(String::new());
        line("[initial]".into());
        let s = &self.initial;
        for (k, v) in [("x1", s.x1), ("x2", s.x2), ("x3", s.x3), ("x4", s.x4)] {
            line(format!("{k} = {v:?}"));
        }
        line(String::new());
        line("[output]".into());
        if let Some(dir) = &self.output_dir {
            line(format!("dir = {dir}"));
        }
        line(format!("csv = {}", self.csv_name));
        line(format!("report = {}", self.report_name));
        out
    }
}

struct Entry {
    value: String,
    line: usize,
    column: usize,
}

struct Section {
    line: usize,
    name: String,
    entries: BTreeMap<String, Entry>,
}

impl Section {
    fn take(&mut self, key: &str) -> Option<Entry> {
        self.entries.remove(key)
    }

    fn require(&mut self, key: &str) -> Result<Entry, ConfigError> {
        match self.take(key) {
            Some(e) => Ok(e),
            None => err(self.line, 1, format!("missing key `{key}` in [{}]", self.name)),
        }
    }

    fn number(&mut self, key: &str) -> Result<f64, ConfigError> {
        let e = self.require(key)?;
        eval_number(&e.value, e.line, e.column)
    }

    fn finish(self) -> Result<(), ConfigError> {
        match self.entries.iter().min_by_key(|(_, e)| e.line) {
            Some((key, e)) => err(e.line, 1, format!("unknown key `{key}` in [{}]", self.name)),
            None => Ok(()),
        }
    }
}

const SECTIONS: [&str; 6] = ["params", "timescale", "mode", "solver", "initial", "output"];

fn split_sections(text: &str) -> Result<BTreeMap<String, Section>, ConfigError> {
    let mut sections: BTreeMap<String, Section> = BTreeMap::new();
    let mut current: Option<String> = None;
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let content = raw.split('#').next().unwrap_or("");
        let trimmed = content.trim();
        if trimmed.is_empty() {
            continue;
        }
        let indent = content.len() - content.trim_start().len();
        if let Some(rest) = trimmed.strip_prefix('[') {
            let Some(name) = rest.strip_suffix(']') else {
                return err(lineno, indent + 1, "section header must end with `]`");
            };
            let name = name.trim().to_string();
            if !SECTIONS.contains(&name.as_str()) {
                return err(lineno, indent + 2, format!("unknown section [{name}]"));
            }
            if sections.contains_key(&name) {
                return err(lineno, indent + 2, format!("duplicate section [{name}]"));
            }
            sections.insert(
                name.clone(),
                Section {
                    line: lineno,
                    name: name.clone(),
                    entries: BTreeMap::new(),
                },
            );
            current = Some(name);
            continue;
        }
        let Some(section) = current.as_ref().and_then(|n| sections.get_mut(n)) else {
            return err(lineno, indent + 1, "key outside of any section");
        };
        let Some(eq) = content.find('=') else {
            return err(lineno, indent + 1, "expected `key = value`");
        };
        let key = content[..eq].trim();
        if key.is_empty() {
            return err(lineno, indent + 1, "empty key");
        }
        let after = &content[eq + 1..];
        let value_start = eq + 1 + (after.len() - after.trim_start().len());
        let value = after.trim().to_string();
        if value.is_empty() {
            return err(lineno, eq + 2, format!("empty value for `{key}`"));
        }
        if section.entries.contains_key(key) {
            return err(lineno, indent + 1, format!("duplicate key `{key}`"));
        }
        section.entries.insert(
            key.to_string(),
            Entry {
                value,
                line: lineno,
                column: value_start + 1,
            },
        );
    }
    Ok(sections)
}

fn parse_bool(e: &Entry) -> Result<bool, ConfigError> {
    match e.value.as_str() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        other => err(e.line, e.column, format!("expected true or false, got `{other}`")),
    }
}

fn parse_pair(e: &Entry) -> Result<(f64, f64), ConfigError> {
    let Some(comma) = e.value.find(',') else {
        return err(e.line, e.column, "expected `lo, hi`");
    };
    let lo = eval_number(&e.value[..comma], e.line, e.column)?;
    let hi = eval_number(&e.value[comma + 1..], e.line, e.column + comma + 1)?;
    if !(lo <= hi) {
        return err(e.line, e.column, format!("need lo <= hi, got {lo}, {hi}"));
    }
    Ok((lo, hi))
}

impl std::str::FromStr for RunConfig {
    type Err = ConfigError;

    fn from_str(text: &str) -> Result<RunConfig, ConfigError> {
        let mut sections = split_sections(text)?;
        let mut section = |name: &str| match sections.remove(name) {
            Some(s) => Ok(s),
            None => err(1, 1, format!("missing section [{name}]")),
        };

        let mut ps = section("params")?;
        let mut params = SicaParams {
            lambda: ps.number("Lambda")?,
            beta: ps.number("beta")?,
            nu: ps.number("nu")?,
            rho: ps.number("rho")?,
            phi: ps.number("phi")?,
            gamma: ps.number("gamma")?,
            omega: ps.number("omega")?,
            d: ps.number("d")?,
            eta_c: ps.number("eta_C")?,
            eta_a: ps.number("eta_A")?,
            single_beta: false,
        };
        if let Some(e) = ps.take("single_beta") {
            params.single_beta = parse_bool(&e)?;
        }
        if let Err(e) = params.validate() {
            return err(ps.line, 1, e.to_string());
        }
        ps.finish()?;

        let mut tss = section("timescale")?;
        let lit = tss.require("literal")?;
        let timescale: TimeScale = lit.value.parse().map_err(|e| match e {
            tempora::Error::TimeScaleSyntax { column, message } => ConfigError {
                line: lit.line,
                column: lit.column + column - 1,
                message: format!("TIMESCALE_SYNTAX: {message}"),
            },
            other => ConfigError {
                line: lit.line,
                column: lit.column,
                message: other.to_string(),
            },
        })?;
        tss.finish()?;

        let mut ms = section("mode")?;
        let kind = ms.require("kind")?;
        let mode = match kind.value.as_str() {
            "coupled" => ModeConfig::Coupled,
            "exogenous" => {
                let sig = ms.require("signal")?;
                let mut signal = parse_signal(&sig.value, sig.line, sig.column)?;
                if let Some(e) = ms.take("signal_clamp") {
                    let (lo, hi) = parse_pair(&e)?;
                    signal = signal.with_clamp(lo, hi);
                }
                ModeConfig::Exogenous { signal }
            }
            other => return err(kind.line, kind.column, format!("kind must be coupled or exogenous, got `{other}`")),
        };
        let lambda_bounds = match (ms.take("lambda_L"), ms.take("lambda_U")) {
            (None, None) => None,
            (Some(lo), Some(hi)) => {
                let l = eval_number(&lo.value, lo.line, lo.column)?;
                let u = eval_number(&hi.value, hi.line, hi.column)?;
                if !(l >= 0.0 && l <= u) {
                    return err(lo.line, lo.column, format!("need 0 <= lambda_L <= lambda_U, got {l}, {u}"));
                }
                Some((l, u))
            }
            (Some(e), None) | (None, Some(e)) => {
                return err(e.line, 1, "lambda_L and lambda_U must be given together")
            }
        };
        ms.finish()?;

        let mut ss = section("solver")?;
        let dense_step = ss.number("dense_step")?;
        let horizon_entry = ss.require("horizon")?;
        let horizon = eval_number(&horizon_entry.value, horizon_entry.line, horizon_entry.column)?;
        let record_every = match ss.take("record_every") {
            None => 1,
            Some(e) => match e.value.parse::<usize>() {
                Ok(n) if n >= 1 => n,
                _ => return err(e.line, e.column, "record_every must be a positive integer"),
            },
        };
        let solver = SolverConfig::new(dense_step, horizon, record_every).map_err(|e| ConfigError {
            line: ss.line,
            column: 1,
            message: e.to_string(),
        })?;
        let tol = 1e-12 * horizon.abs().max(1.0);
        if horizon < timescale.min() - tol || horizon > timescale.max() + tol {
            return err(
                horizon_entry.line,
                horizon_entry.column,
                format!("horizon {horizon} outside the time scale [{}, {}]", timescale.min(), timescale.max()),
            );
        }
        ss.finish()?;

        let mut is = section("initial")?;
        let initial = State::from_f64(is.number("x1")?, is.number("x2")?, is.number("x3")?, is.number("x4")?);
        if !initial.is_finite() || !initial.is_nonnegative() || !(initial.total() > 0.0) {
            return err(is.line, 1, "initial state must be nonnegative with positive total");
        }
        is.finish()?;

        let (mut output_dir, mut csv_name, mut report_name) = (None, "trajectory.csv".to_string(), "report.txt".to_string());
        if let Ok(mut os) = section("output") {
            output_dir = os.take("dir").map(|e| e.value);
            if let Some(e) = os.take("csv") {
                csv_name = e.value;
            }
            if let Some(e) = os.take("report") {
                report_name = e.value;
            }
            os.finish()?;
        }

        Ok(RunConfig {
            params,
            timescale_literal: lit.value,
            timescale,
            mode,
            lambda_bounds,
            solver,
            initial,
            output_dir,
            csv_name,
            report_name,
        })
    }
}

struct Cursor<'a> {
    src: &'a [u8],
    pos: usize,
    line: usize,
    column: usize,
}

impl<'a> Cursor<'a> {
    fn new(src: &'a str, line: usize, column: usize) -> Self {
        Cursor {
            src: src.as_bytes(),
            pos: 0,
            line,
            column,
        }
    }

    fn fail<T>(&self, message: impl Into<String>) -> Result<T, ConfigError> {
        err(self.line, self.column + self.pos, message)
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<(), ConfigError> {
        if self.eat(c) {
            Ok(())
        } else {
            self.fail(format!("expected `{}`", c as char))
        }
    }

    fn word(&mut self, w: &str) -> bool {
        self.skip_ws();
        if self.src[self.pos..].starts_with(w.as_bytes()) {
            let after = self.src.get(self.pos + w.len()).copied();
            if !after.is_some_and(|c| c.is_ascii_alphanumeric() || c == b'_') {
                self.pos += w.len();
                return true;
            }
        }
        false
    }

    fn literal(&mut self) -> Result<f64, ConfigError> {
        self.skip_ws();
        let start = self.pos;
        let s = self.src;
        let mut i = self.pos;
        while i < s.len() && (s[i].is_ascii_digit() || s[i] == b'.') {
            i += 1;
        }
        if i < s.len() && (s[i] == b'e' || s[i] == b'E') {
            let mut j = i + 1;
            if j < s.len() && (s[j] == b'+' || s[j] == b'-') {
                j += 1;
            }
            if j < s.len() && s[j].is_ascii_digit() {
                while j < s.len() && s[j].is_ascii_digit() {
                    j += 1;
                }
                i = j;
            }
        }
        let text = std::str::from_utf8(&s[start..i]).unwrap_or("");
        match text.parse::<f64>() {
            Ok(v) => {
                self.pos = i;
                Ok(v)
            }
            Err(_) => self.fail("expected a number"),
        }
    }

    fn at_end(&mut self) -> bool {
        self.peek().is_none()
    }

    // expr := term (('+' | '-') term)*
    fn expr(&mut self) -> Result<f64, ConfigError> {
        let mut v = self.term()?;
        loop {
            if self.eat(b'+') {
                v += self.term()?;
            } else if self.eat(b'-') {
                v -= self.term()?;
            } else {
                return Ok(v);
            }
        }
    }

    // term := unary (('*' | '/') unary)*
    fn term(&mut self) -> Result<f64, ConfigError> {
        let mut v = self.unary()?;
        loop {
            if self.eat(b'*') {
                v *= self.unary()?;
            } else if self.eat(b'/') {
                v /= self.unary()?;
            } else {
                return Ok(v);
            }
        }
    }

    fn unary(&mut self) -> Result<f64, ConfigError> {
        if self.eat(b'-') {
            return Ok(-self.unary()?);
        }
        if self.eat(b'+') {
            return self.unary();
        }
        if self.eat(b'(') {
            let v = self.expr()?;
            self.expect(b')')?;
            return Ok(v);
        }
        if self.word("pi") {
            return Ok(std::f64::consts::PI);
        }
        self.literal()
    }

    fn signed_literal(&mut self) -> Result<f64, ConfigError> {
        if self.eat(b'-') {
            return Ok(-self.literal()?);
        }
        self.eat(b'+');
        self.literal()
    }

    // sin '(' [w '*'] t [('+' | '-') phase] ')'
    fn sine(&mut self) -> Result<(f64, f64), ConfigError> {
        self.expect(b'(')?;
        let w = if self.word("t") {
            1.0
        } else {
            let w = self.signed_literal()?;
            self.expect(b'*')?;
            if !self.word("t") {
                return self.fail("expected `t`");
            }
            w
        };
        let phase = if self.eat(b'+') {
            self.signed_literal()?
        } else if self.eat(b'-') {
            -self.signed_literal()?
        } else {
            0.0
        };
        self.expect(b')')?;
        Ok((w, phase))
    }
}

/// Evaluates an arithmetic value; `line`/`column` locate it in the file.
pub fn eval_number(src: &str, line: usize, column: usize) -> Result<f64, ConfigError> {
    let mut c = Cursor::new(src, line, column);
    let v = c.expr()?;
    if !c.at_end() {
        return c.fail("unexpected trailing input");
    }
    if !v.is_finite() {
        return err(line, column, format!("value `{}` is not finite", src.trim()));
    }
    Ok(v)
}

/// Parses `c + a*sin(w*t + p) + ...`; constants may appear anywhere and are summed.
pub fn parse_signal(src: &str, line: usize, column: usize) -> Result<AlmostPeriodicSignal, ConfigError> {
    let mut c = Cursor::new(src, line, column);
    let mut sig = AlmostPeriodicSignal::constant(0.0);
    let mut first = true;
    loop {
        let sign = if first {
            if c.eat(b'-') {
                -1.0
            } else {
                1.0
            }
        } else if c.eat(b'+') {
            1.0
        } else if c.eat(b'-') {
            -1.0
        } else if c.at_end() {
            break;
        } else {
            return c.fail("expected `+` or `-`");
        };
        first = false;
        if c.word("sin") {
            let (w, p) = c.sine()?;
            sig = sig.with_term(sign, w, p);
            continue;
        }
        let coef = sign * c.signed_literal()?;
        if c.eat(b'*') {
            if !c.word("sin") {
                return c.fail("expected `sin`");
            }
            let (w, p) = c.sine()?;
            sig = sig.with_term(coef, w, p);
        } else {
            sig.c0 += coef;
        }
    }
    if first {
        return c.fail("empty signal");
    }
    Ok(sig)
}
