use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpeedSegment {
    /// Seconds.
    pub duration: f64,
    /// Rate of change of the path length, m/s. Negative shortens the path.
    pub speed: f64,
}

/// Piecewise-constant speed over time.
///
/// A cyclic schedule repeats its segments forever; otherwise the final
/// segment's speed holds after the schedule runs out. `offset` shifts the
/// schedule so that `t = 0` lands `offset` seconds into it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpeedSchedule {
    pub segments: Vec<SpeedSegment>,
    #[serde(default)]
    pub cyclic: bool,
    #[serde(default)]
    pub offset: f64,
}

impl SpeedSchedule {
    pub fn constant(speed: f64) -> Self {
        SpeedSchedule {
            segments: vec![SpeedSegment { duration: 1.0, speed }],
            cyclic: true,
            offset: 0.0,
        }
    }

    pub fn cyclic(segments: Vec<SpeedSegment>) -> Self {
        SpeedSchedule { segments, cyclic: true, offset: 0.0 }
    }

    pub fn with_offset(mut self, offset: f64) -> Self {
        self.offset = offset;
        self
    }

    /// Multiplies every segment speed by `factor`.
    pub fn scaled(mut self, factor: f64) -> Self {
        for s in &mut self.segments {
            s.speed *= factor;
        }
        self
    }

    pub fn period(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    pub fn max_abs_speed(&self) -> f64 {
        self.segments.iter().map(|s| s.speed.abs()).fold(0.0, f64::max)
    }

    pub(crate) fn validate(&self) -> Result<(), String> {
        if self.segments.is_empty() {
            return Err("speed schedule has no segments".into());
        }
        for s in &self.segments {
            if !(s.duration.is_finite() && s.duration > 0.0) || !s.speed.is_finite() {
                return Err(format!("bad speed segment {s:?}"));
            }
        }
        if !self.offset.is_finite() || self.offset < 0.0 {
            return Err(format!("bad schedule offset {}", self.offset));
        }
        Ok(())
    }

    pub fn speed_at(&self, t: f64) -> f64 {
        let (seg, _) = self.locate(t + self.offset);
        self.segments[seg].speed
    }

    /// Path-length change accumulated over `[0, t]`.
    pub fn displacement(&self, t: f64) -> f64 {
        self.integral(t + self.offset) - self.integral(self.offset)
    }

    fn locate(&self, u: f64) -> (usize, f64) {
        let period = self.period();
        let mut u = if self.cyclic { u.rem_euclid(period) } else { u };
        for (i, s) in self.segments.iter().enumerate() {
            if u < s.duration {
                return (i, u);
            }
            u -= s.duration;
        }
        let last = self.segments.len() - 1;
        (last, self.segments[last].duration + u)
    }

    /// ∫₀ᵘ v(s) ds on the unshifted schedule.
    fn integral(&self, u: f64) -> f64 {
        let period = self.period();
        let per_cycle: f64 = self.segments.iter().map(|s| s.duration * s.speed).sum();
        let (cycles, rem) = if self.cyclic {
            let c = (u / period).floor();
            (c, u - c * period)
        } else {
            (0.0, u)
        };
        let mut acc = cycles * per_cycle;
        let mut rem = rem;
        let last = self.segments.len() - 1;
        for (i, s) in self.segments.iter().enumerate() {
            if rem <= s.duration || (i == last && !self.cyclic) {
                acc += rem * s.speed;
                return acc;
            }
            acc += s.duration * s.speed;
            rem -= s.duration;
        }
        acc
    }
}
