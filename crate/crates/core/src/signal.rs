//! Bounded almost periodic contact-rate signals.
//!
//! A signal is a (optionally clamped) finite trigonometric sum
//! `c0 + sum_k a_k sin(w_k t + phi_k)`. Almost periodicity can only be witnessed on a
//! finite horizon, so [`AlmostPeriodicSignal::epsilon_translation_numbers`] scans a
//! sampled window for translation numbers and [`inclusion_length`] reports the largest
//! gap between them as an empirical inclusion length.

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SineTerm {
    pub amplitude: f64,
    pub frequency: f64,
    pub phase: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlmostPeriodicSignal {
    pub c0: f64,
    pub terms: Vec<SineTerm>,
    pub clamp: Option<(f64, f64)>,
}

impl AlmostPeriodicSignal {
    pub fn constant(c0: f64) -> Self {
        AlmostPeriodicSignal {
            c0,
            terms: Vec::new(),
            clamp: None,
        }
    }

    pub fn with_term(mut self, amplitude: f64, frequency: f64, phase: f64) -> Self {
        self.terms.push(SineTerm {
            amplitude,
            frequency,
            phase,
        });
        self
    }

    pub fn with_clamp(mut self, lo: f64, hi: f64) -> Self {
        self.clamp = Some((lo, hi));
        self
    }

    pub fn eval(&self, t: f64) -> f64 {
        let raw = self
            .terms
            .iter()
            .fold(self.c0, |acc, k| acc + k.amplitude * (k.frequency * t + k.phase).sin());
        match self.clamp {
            Some((lo, hi)) => raw.clamp(lo, hi),
            None => raw,
        }
    }

    /// Envelope `[c0 - sum |a_k|, c0 + sum |a_k|]` intersected with the clamp.
    ///
    /// The sums are accumulated in the same order as [`eval`](Self::eval), so the
    /// envelope contains every evaluated value exactly, not just up to rounding.
    pub fn analytic_bounds(&self) -> (f64, f64) {
        let (mut lo, mut hi) = self.terms.iter().fold((self.c0, self.c0), |(lo, hi), k| {
            (lo - k.amplitude.abs(), hi + k.amplitude.abs())
        });
        if let Some((clo, chi)) = self.clamp {
            lo = lo.clamp(clo, chi);
            hi = hi.clamp(clo, chi);
        }
        (lo, hi)
    }

    /// Sampled `epsilon`-translation numbers.
    ///
    /// Candidates are `tau = k * sample_step` in `(0, search_window]`; a candidate is
    /// kept when `|x(t + tau) - x(t)| < eps` at every sample `t = j * sample_step` in
    /// `[0, horizon]`. An empty result usually means the window is too short.
    pub fn epsilon_translation_numbers(
        &self,
        eps: f64,
        horizon: f64,
        search_window: f64,
        sample_step: f64,
    ) -> Vec<f64> {
        assert!(eps > 0.0 && horizon > 0.0 && search_window > 0.0 && sample_step > 0.0);
        let samples = (horizon / sample_step + 1e-9).floor() as usize;
        let candidates = (search_window / sample_step + 1e-9).floor() as usize;
        let base: Vec<f64> = (0..=samples).map(|j| self.eval(j as f64 * sample_step)).collect();
        (1..=candidates)
            .map(|k| k as f64 * sample_step)
            .filter(|&tau| {
                base.iter()
                    .enumerate()
                    .all(|(j, &x)| (self.eval(j as f64 * sample_step + tau) - x).abs() < eps)
            })
            .collect()
    }
}

/// Largest gap between consecutive translation numbers, counting the gap from 0 to
/// the first one. `None` for an empty list.
pub fn inclusion_length(taus: &[f64]) -> Option<f64> {
    let first = *taus.first()?;
    Some(taus.windows(2).map(|w| w[1] - w[0]).fold(first, f64::max))
}

impl fmt::Display for AlmostPeriodicSignal {
    /// `c0 + a*sin(w*t + p) + ...` with round-trippable numbers.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.c0)?;
        for k in &self.terms {
            write!(f, " + {:?}*sin({:?}*t + {:?})", k.amplitude, k.frequency, k.phase)?;
        }
        Ok(())
    }
}
