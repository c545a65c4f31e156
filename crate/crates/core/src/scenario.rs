//! Declarative synthetic datasets: rooms, locations, subjects and actions.
//!
//! A [`Scenario`] expands into one [`TraceSpec`] per
//! (room, location, subject, action, repetition). Each one carries a fully
//! resolved [`SyntheticChannelConfig`], so a trace depends only on its
//! `TraceSpec` and the whole dataset only on the scenario.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::model::{
    action_speed_profile, generate_trace, CsiTrace, DynamicPath, ModelError, StaticPath, StaticPathSet, Sway,
    SyntheticChannelConfig,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Room {
    pub name: String,
    pub static_paths: StaticPathSet,
}

/// Where in a room the subject stands. Its reflectors are added to the
/// room's static paths.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Location {
    pub name: String,
    #[serde(default)]
    pub reflectors: Vec<StaticPath>,
    /// Initial length of the body-reflected path, meters.
    pub distance: f64,
}

/// How a person moves: speed multiplier, body reflectivity and gait.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Subject {
    pub name: String,
    pub speed_scale: f64,
    pub attenuation: f64,
    #[serde(default)]
    pub gait: Vec<Sway>,
}

/// Relative jitter applied independently to every trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Variation {
    pub speed: f64,
    pub attenuation: f64,
    /// Relative jitter of every sway frequency.
    pub sway_freq: f64,
}

impl Default for Variation {
    fn default() -> Self {
        Variation { speed: 0.1, attenuation: 0.2, sway_freq: 0.05 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub seed: u64,
    /// Seconds per trace.
    pub duration: f64,
    pub sample_rate: f64,
    pub noise_std: f64,
    pub repetitions: usize,
    pub actions: Vec<String>,
    pub rooms: Vec<Room>,
    /// Empty means a single location `a`.
    #[serde(default)]
    pub locations: Vec<Location>,
    /// Empty means a single default subject.
    #[serde(default)]
    pub subjects: Vec<Subject>,
    #[serde(default)]
    pub variation: Variation,
}

/// The six actions used by the preset scenarios.
pub const ACTIONS: [&str; 6] = ["fast-punch", "golf-swing", "jump", "pick-up", "slow-wave", "walk-like"];

/// Two-tone sway of the generated rooms, Hz. Every room fluctuates inside
/// the band the actions occupy, each with its own rhythm.
const ROOM_SWAY_HZ: [(f64, f64); 8] =
    [(1.8, 4.4), (2.6, 5.6), (3.2, 1.4), (4.9, 2.2), (3.8, 6.2), (1.1, 3.5), (5.2, 2.9), (2.0, 4.0)];

impl Room {
    /// A room with a strong line of sight, three reflectors and one
    /// reflector swaying at a room-specific rate.
    pub fn generated(index: usize, seed: u64) -> Room {
        let mut rng = stream_rng(seed, 0x726f6f6d, index as u64);
        let mut polar = |lo: f64, hi: f64| Complex64::from_polar(rng.random_range(lo..hi), rng.random_range(0.0..2.0 * PI));
        let los = polar(8.0, 9.0);
        let gains = [polar(0.6, 1.4), polar(0.6, 1.4), polar(1.6, 2.0)];
        let mut paths = vec![StaticPath { delay: 8e-9 + 4e-9 * (index % 3) as f64, gain: los, sway: vec![] }];
        let mut delay = 25e-9;
        for (i, g) in gains.into_iter().enumerate() {
            delay += rng.random_range(10e-9..40e-9);
            let sway = if i == 2 {
                let (f1, f2) = ROOM_SWAY_HZ[index % ROOM_SWAY_HZ.len()];
                vec![Sway { depth: 0.45, freq_hz: f1, phase: 0.0 }, Sway { depth: 0.45, freq_hz: f2, phase: 0.0 }]
            } else {
                vec![]
            };
            paths.push(StaticPath { delay, gain: g, sway });
        }
        Room { name: room_name(index), static_paths: StaticPathSet { paths } }
    }
}

fn room_name(index: usize) -> String {
    if index < 26 {
        ((b'A' + index as u8) as char).to_string()
    } else {
        format!("R{index}")
    }
}

fn location_name(index: usize) -> String {
    if index < 26 {
        ((b'a' + index as u8) as char).to_string()
    } else {
        format!("l{index}")
    }
}

impl Location {
    /// A location whose nearby reflector has its own delay and sway rhythm.
    pub fn generated(index: usize, seed: u64) -> Location {
        let mut rng = stream_rng(seed, 0x6c6f63, index as u64);
        let gain = Complex64::from_polar(rng.random_range(1.2..1.6), rng.random_range(0.0..2.0 * PI));
        Location {
            name: location_name(index),
            reflectors: vec![StaticPath {
                delay: 60e-9 + 35e-9 * index as f64,
                gain,
                sway: vec![Sway { depth: 0.4, freq_hz: 2.0 + 3.0 * index as f64, phase: 0.0 }],
            }],
            distance: 2.0 + 1.5 * index as f64,
        }
    }
}

impl Default for Subject {
    fn default() -> Self {
        Subject { name: "s1".into(), speed_scale: 1.0, attenuation: 0.25, gait: vec![] }
    }
}

impl Subject {
    /// Walkers with distinct pace and build: speeds spread geometrically
    /// over 0.6–2.4×, reflectivity over 0.15–0.35 and a gait rhythm of
    /// 0.8–2.6 Hz.
    pub fn generated(index: usize, count: usize) -> Subject {
        let u = if count > 1 { index as f64 / (count - 1) as f64 } else { 0.5 };
        // interleave so that neighbours in speed differ in build
        let v = ((index * 7) % count.max(1)) as f64 / count.max(2).saturating_sub(1) as f64;
        Subject {
            name: format!("s{}", index + 1),
            speed_scale: 0.6 * 4f64.powf(u),
            attenuation: 0.15 + 0.2 * v,
            gait: vec![Sway { depth: 0.5, freq_hz: 0.8 + 1.8 * v, phase: 0.0 }],
        }
    }
}

/// Fully resolved recipe for one trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceSpec {
    pub id: String,
    pub action: String,
    pub person: String,
    pub room: String,
    pub location: String,
    pub repetition: usize,
    pub duration: f64,
    pub channel: SyntheticChannelConfig,
}

impl TraceSpec {
    pub fn generate(&self) -> Result<CsiTrace, ModelError> {
        let mut t = generate_trace(&self.channel, self.duration)?;
        t.meta.action_label = self.action.clone();
        t.meta.person_label = self.person.clone();
        t.meta.room_label = self.room.clone();
        Ok(t)
    }
}

fn stream_rng(seed: u64, domain: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ domain.rotate_left(32));
    rng.set_stream(index);
    rng
}

impl Scenario {
    /// `rooms` generated rooms × the six preset actions × `repetitions`,
    /// one location, one subject.
    pub fn cross_room(rooms: usize, repetitions: usize, seed: u64) -> Scenario {
        Scenario {
            seed,
            duration: 5.0,
            sample_rate: 1000.0,
            noise_std: 0.02,
            repetitions,
            actions: ACTIONS.iter().map(|s| s.to_string()).collect(),
            rooms: (0..rooms).map(|i| Room::generated(i, seed)).collect(),
            locations: Vec::new(),
            subjects: Vec::new(),
            variation: Variation::default(),
        }
    }

    /// One room, `locations` generated locations, the six preset actions.
    pub fn multi_location(locations: usize, repetitions: usize, seed: u64) -> Scenario {
        Scenario {
            locations: (0..locations).map(|i| Location::generated(i, seed)).collect(),
            ..Scenario::cross_room(1, repetitions, seed)
        }
    }

    /// One room, `subjects` walkers doing `walk-like`. A person's pace
    /// varies less between their own walks than the default jitter allows.
    pub fn identification(subjects: usize, repetitions: usize, seed: u64) -> Scenario {
        Scenario {
            actions: vec!["walk-like".into()],
            subjects: (0..subjects).map(|i| Subject::generated(i, subjects)).collect(),
            variation: Variation { speed: 0.05, ..Variation::default() },
            ..Scenario::cross_room(1, repetitions, seed)
        }
    }

    fn resolved_locations(&self) -> Vec<Location> {
        if self.locations.is_empty() {
            vec![Location { name: "a".into(), reflectors: Vec::new(), distance: 3.0 }]
        } else {
            self.locations.clone()
        }
    }

    fn resolved_subjects(&self) -> Vec<Subject> {
        if self.subjects.is_empty() {
            vec![Subject::default()]
        } else {
            self.subjects.clone()
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |m: &str| Err(ModelError::InvalidConfig(m.to_string()));
        if !(self.duration.is_finite() && self.duration > 0.0) {
            return Err(ModelError::InvalidDuration(self.duration));
        }
        if self.rooms.is_empty() {
            return bad("scenario has no rooms");
        }
        if self.actions.is_empty() {
            return bad("scenario has no actions");
        }
        for a in &self.actions {
            action_speed_profile(a)?;
        }
        let v = &self.variation;
        if [v.speed, v.attenuation, v.sway_freq].iter().any(|x| !(x.is_finite() && (0.0..1.0).contains(x))) {
            return bad("variation fractions must lie in [0, 1)");
        }
        let mut names: Vec<String> = self.rooms.iter().map(|r| format!("room {}", r.name)).collect();
        names.extend(self.resolved_locations().iter().map(|l| format!("location {}", l.name)));
        names.extend(self.resolved_subjects().iter().map(|s| format!("subject {}", s.name)));
        let total = names.len();
        names.sort();
        names.dedup();
        if names.len() != total {
            return bad("duplicate room, location or subject name");
        }
        Ok(())
    }

    /// Every trace of the dataset in room, location, subject, action,
    /// repetition order. Channel configs are validated here.
    pub fn traces(&self) -> Result<Vec<TraceSpec>, ModelError> {
        self.validate()?;
        let locations = self.resolved_locations();
        let subjects = self.resolved_subjects();
        let mut out = Vec::new();
        for room in &self.rooms {
            for loc in &locations {
                for subj in &subjects {
                    for action in &self.actions {
                        for rep in 0..self.repetitions {
                            let index = out.len() as u64;
                            let mut rng = stream_rng(self.seed, 0x7472616365, index);
                            let channel = self.channel(room, loc, subj, action, &mut rng)?;
                            channel.validate()?;
                            out.push(TraceSpec {
                                id: format!("{}-{}-{}-{}-{:03}", room.name, loc.name, subj.name, action, rep),
                                action: action.clone(),
                                person: subj.name.clone(),
                                room: room.name.clone(),
                                location: loc.name.clone(),
                                repetition: rep,
                                duration: self.duration,
                                channel,
                            });
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    fn channel(
        &self,
        room: &Room,
        loc: &Location,
        subj: &Subject,
        action: &str,
        rng: &mut ChaCha8Rng,
    ) -> Result<SyntheticChannelConfig, ModelError> {
        let v = &self.variation;
        let mut jitter = |x: f64, rel: f64| if rel > 0.0 { x * rng.random_range(1.0 - rel..1.0 + rel) } else { x };
        let mut paths = room.static_paths.paths.clone();
        paths.extend(loc.reflectors.iter().cloned());
        for p in &mut paths {
            for s in &mut p.sway {
                s.freq_hz = jitter(s.freq_hz, v.sway_freq);
            }
        }
        let speed = jitter(subj.speed_scale, v.speed);
        let attenuation = jitter(subj.attenuation, v.attenuation);
        let schedule = action_speed_profile(action)?.scaled(speed);
        let mut gait = subj.gait.clone();
        for s in &mut gait {
            s.freq_hz = jitter(s.freq_hz, v.sway_freq);
        }
        let offset = rng.random_range(0.0..schedule.period());
        for p in &mut paths {
            for s in &mut p.sway {
                s.phase = rng.random_range(0.0..2.0 * PI);
            }
        }
        for s in &mut gait {
            s.phase = rng.random_range(0.0..2.0 * PI);
        }
        let dynamic = DynamicPath {
            initial_distance: loc.distance + rng.random_range(0.0..0.5),
            attenuation,
            initial_phase: rng.random_range(0.0..2.0 * PI),
            schedule: schedule.with_offset(offset),
            sway: gait,
        };
        Ok(SyntheticChannelConfig {
            static_paths: StaticPathSet { paths },
            dynamic: vec![dynamic],
            noise_std: self.noise_std,
            sample_rate: self.sample_rate,
            rng_seed: rng.random(),
            ..SyntheticChannelConfig::new(room.static_paths.clone())
        })
    }
}
