//! Built-in motion catalog for synthetic actions.
//!
//! Speeds are rates of path-length change. The defaults keep every action's
//! Doppler content (`v/λ` at 5.32 GHz) below ~5.5 Hz so that the stripes
//! survive downsampling to a 72-pixel-wide, 5-second image.

use super::{ModelError, SpeedSchedule, SpeedSegment};

const CATALOG: &[(&str, &[(f64, f64)])] = &[
    ("still", &[(1.0, 0.0)]),
    ("slow-wave", &[(0.6, 0.12), (0.6, -0.12)]),
    ("fast-punch", &[(0.25, 0.30), (0.25, -0.30), (0.30, 0.0)]),
    ("walk-like", &[(1.0, 0.16)]),
    ("run-like", &[(0.4, 0.27), (0.1, 0.22)]),
    ("pick-up", &[(1.2, 0.09), (0.5, 0.0), (1.2, -0.09), (1.6, 0.0)]),
    ("golf-swing", &[(0.9, 0.05), (0.3, -0.26), (0.8, 0.0)]),
    ("jump", &[(0.35, 0.20), (0.35, -0.20), (0.5, 0.0)]),
];

/// Names accepted by [`action_speed_profile`], in catalog order.
pub fn action_names() -> impl Iterator<Item = &'static str> {
    CATALOG.iter().map(|(name, _)| *name)
}

pub fn action_speed_profile(name: &str) -> Result<SpeedSchedule, ModelError> {
    let (_, segs) = CATALOG
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| ModelError::UnknownAction(name.to_string()))?;
    Ok(SpeedSchedule::cyclic(
        segs.iter()
            .map(|&(duration, speed)| SpeedSegment { duration, speed })
            .collect(),
    ))
}
