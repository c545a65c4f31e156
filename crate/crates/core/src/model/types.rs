use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{ModelError, SpeedSchedule};

/// One CSI snapshot: complex gains indexed `[pair, subcarrier]`.
#[derive(Clone, Debug, PartialEq)]
pub struct CsiFrame {
    /// Seconds since the start of the capture.
    pub timestamp: f64,
    pub gains: Array2<Complex64>,
}

impl CsiFrame {
    pub fn pairs(&self) -> usize {
        self.gains.nrows()
    }

    pub fn subcarriers(&self) -> usize {
        self.gains.ncols()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TraceMeta {
    pub action_label: String,
    pub person_label: String,
    pub room_label: String,
    /// Samples per second the capture was nominally taken at.
    pub nominal_rate: f64,
    /// Seconds.
    pub duration: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CsiTrace {
    pub frames: Vec<CsiFrame>,
    pub meta: TraceMeta,
}

impl CsiTrace {
    pub fn pairs(&self) -> usize {
        self.frames.first().map_or(0, CsiFrame::pairs)
    }

    pub fn subcarriers(&self) -> usize {
        self.frames.first().map_or(0, CsiFrame::subcarriers)
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Checks the trace invariants: shared non-empty shape, finite
    /// non-negative strictly increasing timestamps, positive rate, and a
    /// duration covering the timestamp span.
    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |m: String| Err(ModelError::InvalidTrace(m));
        if !(self.meta.nominal_rate.is_finite() && self.meta.nominal_rate > 0.0) {
            return bad(format!("nominal rate {}", self.meta.nominal_rate));
        }
        let (p, s) = (self.pairs(), self.subcarriers());
        if !self.frames.is_empty() && (p == 0 || s == 0) {
            return bad("frames must have at least one pair and subcarrier".into());
        }
        let mut prev = f64::NEG_INFINITY;
        for (i, f) in self.frames.iter().enumerate() {
            if f.pairs() != p || f.subcarriers() != s {
                return bad(format!("frame {i} has shape {:?}, expected ({p}, {s})", f.gains.dim()));
            }
            if !(f.timestamp.is_finite() && f.timestamp >= 0.0) {
                return bad(format!("frame {i} timestamp {}", f.timestamp));
            }
            if f.timestamp <= prev {
                return bad(format!("timestamps not strictly increasing at frame {i}"));
            }
            prev = f.timestamp;
        }
        if let (Some(first), Some(last)) = (self.frames.first(), self.frames.last()) {
            if self.meta.duration < last.timestamp - first.timestamp {
                return bad(format!("duration {} shorter than timestamp span", self.meta.duration));
            }
        }
        Ok(())
    }
}

/// Slow sinusoidal fluctuation of a path gain: the gain is scaled by
/// `1 + depth·sin(2π freq_hz t + phase)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sway {
    pub depth: f64,
    pub freq_hz: f64,
    #[serde(default)]
    pub phase: f64,
}

pub(crate) fn sway_factor(sways: &[Sway], t: f64) -> f64 {
    1.0 + sways
        .iter()
        .map(|s| s.depth * (2.0 * std::f64::consts::PI * s.freq_hz * t + s.phase).sin())
        .sum::<f64>()
}

/// Path reflected by an immobile object (or the line of sight).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StaticPath {
    /// Seconds.
    pub delay: f64,
    pub gain: Complex64,
    /// Environmental fluctuation of the reflector (fans, curtains, ...).
    /// Empty for a truly static path.
    #[serde(default)]
    pub sway: Vec<Sway>,
}

/// All static paths of an environment; index 0 is the line of sight.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StaticPathSet {
    pub paths: Vec<StaticPath>,
}

impl StaticPathSet {
    pub fn line_of_sight(&self) -> &StaticPath {
        &self.paths[0]
    }

    /// `H_s(f)` at time `t`.
    pub fn response(&self, freq: f64, t: f64) -> Complex64 {
        self.paths
            .iter()
            .map(|p| {
                p.gain
                    * sway_factor(&p.sway, t)
                    * Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * freq * p.delay)
            })
            .sum()
    }

    /// Total static power `Σ|g|²`.
    pub fn power(&self) -> f64 {
        self.paths.iter().map(|p| p.gain.norm_sqr()).sum()
    }

    pub(crate) fn validate(&self) -> Result<(), String> {
        let Some(los) = self.paths.first() else {
            return Err("static path set is empty".into());
        };
        for p in &self.paths {
            if !(p.delay.is_finite() && p.delay >= 0.0) || !p.gain.re.is_finite() || !p.gain.im.is_finite() {
                return Err(format!("bad static path {p:?}"));
            }
            if p.delay < los.delay {
                return Err("line-of-sight path must have the minimal delay".into());
            }
            validate_sway(&p.sway)?;
        }
        Ok(())
    }
}

fn validate_sway(sway: &[Sway]) -> Result<(), String> {
    for s in sway {
        if !(s.depth.is_finite() && s.freq_hz.is_finite() && s.phase.is_finite()) || s.depth < 0.0 {
            return Err(format!("bad sway {s:?}"));
        }
    }
    Ok(())
}

/// Path reflected by a moving body.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DynamicPath {
    /// Path length at `t = 0`, meters.
    pub initial_distance: f64,
    pub attenuation: f64,
    /// Radians.
    pub initial_phase: f64,
    pub schedule: SpeedSchedule,
    /// Slow variation of the attenuation (gait, limb swing).
    #[serde(default)]
    pub sway: Vec<Sway>,
}

impl DynamicPath {
    pub fn distance_at(&self, t: f64) -> f64 {
        self.initial_distance + self.schedule.displacement(t)
    }

    pub fn attenuation_at(&self, t: f64) -> f64 {
        (self.attenuation * sway_factor(&self.sway, t)).max(0.0)
    }

    pub(crate) fn validate(&self) -> Result<(), String> {
        if !(self.initial_distance.is_finite() && self.initial_distance > 0.0) {
            return Err(format!("initial distance {}", self.initial_distance));
        }
        if !(self.attenuation.is_finite() && self.attenuation >= 0.0) {
            return Err(format!("attenuation {}", self.attenuation));
        }
        if !self.initial_phase.is_finite() {
            return Err("initial phase not finite".into());
        }
        validate_sway(&self.sway)?;
        self.schedule.validate()
    }
}
