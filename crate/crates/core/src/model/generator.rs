use std::f64::consts::PI;

use ndarray::Array2;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::types::sway_factor;
use super::{CsiFrame, CsiTrace, DynamicPath, ModelError, StaticPathSet, TraceMeta};

/// Everything needed to synthesize one trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticChannelConfig {
    /// Carrier wavelength, meters. Sets the Doppler scale `v/λ`.
    pub wavelength: f64,
    /// Tx/Rx carrier frequency offset, Hz.
    pub carrier_freq_offset: f64,
    /// Frequency of subcarrier 0, Hz; subcarrier `i` sits at `f0 + i·spacing`.
    pub first_subcarrier_freq: f64,
    pub subcarrier_spacing: f64,
    pub static_paths: StaticPathSet,
    pub dynamic: Vec<DynamicPath>,
    /// Std of the circular complex Gaussian noise added to every gain.
    pub noise_std: f64,
    pub sample_rate: f64,
    pub pairs: usize,
    pub subcarriers: usize,
    /// Relative size of the per-pair complex perturbation of path gains.
    pub pair_perturbation: f64,
    pub rng_seed: u64,
}

impl SyntheticChannelConfig {
    /// 2×2 antennas, 30 subcarriers at 312.5 kHz spacing on a 5.32 GHz
    /// carrier, 1000 samples/s, no noise.
    pub fn new(static_paths: StaticPathSet) -> Self {
        SyntheticChannelConfig {
            wavelength: 0.0566,
            carrier_freq_offset: 0.0,
            first_subcarrier_freq: 5.32e9,
            subcarrier_spacing: 312.5e3,
            static_paths,
            dynamic: Vec::new(),
            noise_std: 0.0,
            sample_rate: 1000.0,
            pairs: 4,
            subcarriers: 30,
            pair_perturbation: 0.2,
            rng_seed: 0,
        }
    }

    pub fn subcarrier_freq(&self, i: usize) -> f64 {
        self.first_subcarrier_freq + i as f64 * self.subcarrier_spacing
    }

    /// Highest Doppler frequency any dynamic path can produce, Hz.
    pub fn max_doppler(&self) -> f64 {
        self.dynamic
            .iter()
            .map(|d| d.schedule.max_abs_speed() / self.wavelength)
            .fold(0.0, f64::max)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |m: String| Err(ModelError::InvalidConfig(m));
        let finite = [
            self.wavelength,
            self.carrier_freq_offset,
            self.first_subcarrier_freq,
            self.subcarrier_spacing,
            self.noise_std,
            self.sample_rate,
            self.pair_perturbation,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return bad("non-finite value".into());
        }
        if self.wavelength <= 0.0 {
            return bad(format!("wavelength {}", self.wavelength));
        }
        if self.sample_rate <= 0.0 {
            return bad(format!("sample rate {}", self.sample_rate));
        }
        if self.noise_std < 0.0 || self.pair_perturbation < 0.0 {
            return bad("noise std and pair perturbation must be non-negative".into());
        }
        if self.pairs == 0 || self.subcarriers == 0 {
            return bad("need at least one pair and one subcarrier".into());
        }
        self.static_paths.validate().or_else(bad)?;
        for d in &self.dynamic {
            d.validate().or_else(bad)?;
        }
        if self.sample_rate <= 2.0 * self.max_doppler() {
            return bad(format!(
                "sample rate {} aliases Doppler up to {:.2} Hz",
                self.sample_rate,
                self.max_doppler()
            ));
        }
        Ok(())
    }
}

fn perturbation(rng: &mut ChaCha8Rng, scale: f64) -> Complex64 {
    let re: f64 = rng.random_range(-1.0..=1.0);
    let im: f64 = rng.random_range(-1.0..=1.0);
    Complex64::new(1.0 + scale * re, scale * im)
}

/// Synthesizes `floor(duration × sample_rate)` frames at uniform timestamps.
///
/// Deterministic in `cfg` (including `rng_seed`). The per-pair gain
/// perturbations are drawn first, then the noise frame by frame.
pub fn generate_trace(cfg: &SyntheticChannelConfig, duration: f64) -> Result<CsiTrace, ModelError> {
    if !(duration.is_finite() && duration > 0.0) {
        return Err(ModelError::InvalidDuration(duration));
    }
    cfg.validate()?;
    let n_frames = (duration * cfg.sample_rate * (1.0 + 1e-12)).floor() as usize;
    if n_frames == 0 {
        return Err(ModelError::InvalidDuration(duration));
    }
    let (np, ns) = (cfg.pairs, cfg.subcarriers);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);

    let static_gain: Vec<Vec<Complex64>> = (0..np)
        .map(|_| {
            cfg.static_paths
                .paths
                .iter()
                .map(|_| perturbation(&mut rng, cfg.pair_perturbation))
                .collect()
        })
        .collect();
    let dynamic_gain: Vec<Vec<Complex64>> = (0..np)
        .map(|_| {
            cfg.dynamic
                .iter()
                .map(|_| perturbation(&mut rng, cfg.pair_perturbation))
                .collect()
        })
        .collect();

    // Static paths without sway fold into one constant base; swaying ones
    // keep their own per-(pair, subcarrier) phasor table.
    let mut base = Array2::<Complex64>::zeros((np, ns));
    let mut swaying: Vec<(usize, Array2<Complex64>)> = Vec::new();
    for (s, path) in cfg.static_paths.paths.iter().enumerate() {
        let table = Array2::from_shape_fn((np, ns), |(p, i)| {
            static_gain[p][s]
                * path.gain
                * Complex64::from_polar(1.0, -2.0 * PI * cfg.subcarrier_freq(i) * path.delay)
        });
        if path.sway.is_empty() {
            base += &table;
        } else {
            swaying.push((s, table));
        }
    }

    let noise_scale = cfg.noise_std / 2f64.sqrt();
    let mut frames = Vec::with_capacity(n_frames);
    let mut dyn_term = vec![Complex64::new(0.0, 0.0); np];
    for n in 0..n_frames {
        let t = n as f64 / cfg.sample_rate;
        for (p, term) in dyn_term.iter_mut().enumerate() {
            *term = cfg
                .dynamic
                .iter()
                .enumerate()
                .map(|(k, path)| {
                    let phase = 2.0 * PI * path.distance_at(t) / cfg.wavelength + path.initial_phase;
                    dynamic_gain[p][k] * Complex64::from_polar(path.attenuation_at(t), -phase)
                })
                .sum();
        }
        let cfo = Complex64::from_polar(1.0, -2.0 * PI * cfg.carrier_freq_offset * t);
        let mut gains = base.clone();
        for (s, table) in &swaying {
            let m = sway_factor(&cfg.static_paths.paths[*s].sway, t);
            gains.scaled_add(Complex64::new(m, 0.0), table);
        }
        for ((p, _), g) in gains.indexed_iter_mut() {
            *g = (*g + dyn_term[p]) * cfo;
            if noise_scale > 0.0 {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                *g += Complex64::new(re * noise_scale, im * noise_scale);
            }
        }
        frames.push(CsiFrame { timestamp: t, gains });
    }

    Ok(CsiTrace {
        frames,
        meta: TraceMeta {
            nominal_rate: cfg.sample_rate,
            duration,
            ..TraceMeta::default()
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{SpeedSchedule, StaticPath};
    use csisense_oracle::dominant_frequency;

    pub(crate) fn two_path_static() -> StaticPathSet {
        StaticPathSet {
            paths: vec![
                StaticPath { delay: 10e-9, gain: Complex64::new(8.0, 1.0), sway: vec![] },
                StaticPath { delay: 45e-9, gain: Complex64::new(-2.0, 3.0), sway: vec![] },
            ],
        }
    }

    fn mover(speed: f64) -> DynamicPath {
        DynamicPath {
            initial_distance: 3.0,
            attenuation: 1.0,
            initial_phase: 0.4,
            schedule: SpeedSchedule::constant(speed),
            sway: vec![],
        }
    }

    fn power_series(trace: &CsiTrace, pair: usize, sc: usize) -> Vec<f64> {
        trace.frames.iter().map(|f| f.gains[[pair, sc]].norm_sqr()).collect()
    }

    #[test]
    fn static_only_channel_is_constant_and_equals_hs() {
        let mut cfg = SyntheticChannelConfig::new(two_path_static());
        cfg.pair_perturbation = 0.0;
        let trace = generate_trace(&cfg, 0.5).unwrap();
        assert_eq!(trace.len(), 500);
        for f in &trace.frames {
            for i in 0..cfg.subcarriers {
                let hs = cfg.static_paths.response(cfg.subcarrier_freq(i), f.timestamp);
                for p in 0..cfg.pairs {
                    assert!((f.gains[[p, i]] - hs).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn static_only_amplitude_has_zero_variance_even_with_perturbation() {
        let cfg = SyntheticChannelConfig::new(two_path_static());
        let trace = generate_trace(&cfg, 0.3).unwrap();
        let first = &trace.frames[0].gains;
        for f in &trace.frames {
            for (a, b) in f.gains.iter().zip(first.iter()) {
                assert_eq!(a.norm(), b.norm());
            }
        }
    }

    #[test]
    fn single_mover_power_peaks_at_doppler() {
        let mut cfg = SyntheticChannelConfig::new(two_path_static());
        cfg.dynamic.push(mover(0.5));
        let trace = generate_trace(&cfg, 4.0).unwrap();
        let expected = 0.5 / 0.0566;
        let bin = 1.0 / 4.0;
        for sc in [0, 7, 29] {
            let f = dominant_frequency(&power_series(&trace, 0, sc), cfg.sample_rate);
            assert!((f - expected).abs() <= bin, "sc {sc}: {f} vs {expected}");
        }
    }

    #[test]
    fn two_movers_show_both_dopplers_and_their_difference() {
        let mut cfg = SyntheticChannelConfig::new(two_path_static());
        cfg.dynamic.push(mover(0.5));
        let mut fast = mover(1.5);
        fast.attenuation = 2.0;
        cfg.dynamic.push(fast);
        let trace = generate_trace(&cfg, 4.0).unwrap();
        let p = csisense_oracle::power_spectrum(&power_series(&trace, 1, 3));
        let n = trace.len() as f64;
        let bin_of = |f: f64| (f * n / cfg.sample_rate).round() as usize;
        let median = {
            let mut v = p[1..].to_vec();
            v.sort_by(|a, b| a.partial_cmp(b).unwrap());
            v[v.len() / 2]
        };
        for f in [0.5 / 0.0566, 1.5 / 0.0566, 1.0 / 0.0566] {
            let k = bin_of(f);
            let local = p[k - 1].max(p[k]).max(p[k + 1]);
            assert!(local > 1e3 * median, "no peak near {f} Hz");
        }
    }

    #[test]
    fn deterministic_for_same_seed() {
        let mut cfg = SyntheticChannelConfig::new(two_path_static());
        cfg.dynamic.push(mover(0.3));
        cfg.noise_std = 0.1;
        cfg.rng_seed = 99;
        let a = generate_trace(&cfg, 0.4).unwrap();
        let b = generate_trace(&cfg, 0.4).unwrap();
        assert_eq!(a, b);
        cfg.rng_seed = 100;
        let c = generate_trace(&cfg, 0.4).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn rejects_bad_duration_and_config() {
        let mut cfg = SyntheticChannelConfig::new(two_path_static());
        assert!(matches!(generate_trace(&cfg, 0.0), Err(ModelError::InvalidDuration(_))));
        assert!(matches!(generate_trace(&cfg, f64::NAN), Err(ModelError::InvalidDuration(_))));
        cfg.wavelength = f64::INFINITY;
        assert!(matches!(generate_trace(&cfg, 1.0), Err(ModelError::InvalidConfig(_))));
        cfg.wavelength = 0.0566;
        cfg.dynamic.push(mover(40.0));
        assert!(matches!(generate_trace(&cfg, 1.0), Err(ModelError::InvalidConfig(_))));
    }

    #[test]
    fn carrier_offset_only_rotates_phase() {
        let mut cfg = SyntheticChannelConfig::new(two_path_static());
        cfg.dynamic.push(mover(0.2));
        let plain = generate_trace(&cfg, 0.2).unwrap();
        cfg.carrier_freq_offset = 1234.5;
        let rotated = generate_trace(&cfg, 0.2).unwrap();
        for (a, b) in plain.frames.iter().zip(&rotated.frames) {
            for (x, y) in a.gains.iter().zip(b.gains.iter()) {
                assert!((x.norm() - y.norm()).abs() < 1e-9);
            }
        }
    }
}
