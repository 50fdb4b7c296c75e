//! Frame-level simulation of the distributed selection procedure.
//!
//! Within each frame: the source's RTS lets relays estimate the source hop
//! and decode the payload (forming the decoding subset), the destination's
//! CTS lets every relay estimate its RD channel, predict its value one frame
//! ahead and buffer the prediction, while subset members fetch the value
//! buffered during the *previous* frame and start a timer inversely
//! proportional to it. The earliest timer wins the contention unless the
//! runner-up expires inside the guard interval, which is a collision.

use std::io::Write;

use crate::cooperative::decode_threshold;
use crate::error::{Error, Result};
use crate::predictor::TrainedPredictor;

/// Illustrative intra-frame timeline (microseconds).
const RTS_DECODE_AT_US: f64 = 100.0;
const CTS_AT_US: f64 = 200.0;
const PREDICT_AT_US: f64 = 250.0;
const CONTENTION_START_US: f64 = 300.0;

/// Floor applied to buffered magnitudes so a clamped-to-zero prediction
/// yields an astronomically long timer instead of an infinite one.
const MAGNITUDE_FLOOR: f64 = 1e-12;

/// Timer and guard configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContentionParams {
    /// Proportionality constant: a relay with buffered magnitude m waits
    /// `base_time_us / m`.
    pub base_time_us: f64,
    /// Minimum expiry separation for the winner's announcement to be heard
    /// before the runner-up transmits.
    pub guard_us: f64,
}

impl Default for ContentionParams {
    fn default() -> Self {
        // With timers of order base/|h| and Rayleigh-distributed magnitudes,
        // the collision probability scales like ~3 * guard / base; the
        // default ratio keeps it a few 1e-4.
        Self { base_time_us: 100.0, guard_us: 0.01 }
    }
}

impl ContentionParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.base_time_us > 0.0) || !self.base_time_us.is_finite() {
            return Err(Error::invalid_argument("base_time_us must be positive"));
        }
        if !(self.guard_us >= 0.0) || !self.guard_us.is_finite() {
            return Err(Error::invalid_argument("guard_us must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContentionOutcome {
    Winner(usize),
    /// Two timers expired within the guard interval; the announcement was
    /// not received cleanly and the frame is lost.
    Collision,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    RtsDecode,
    CtsReceive,
    BufferFetch,
    PredictAndBuffer,
    TimerStart,
    TimerExpiry,
}

impl EventKind {
    pub fn label(self) -> &'static str {
        match self {
            EventKind::RtsDecode => "rts_decode",
            EventKind::CtsReceive => "cts_receive",
            EventKind::BufferFetch => "buffer_fetch",
            EventKind::PredictAndBuffer => "predict_and_buffer",
            EventKind::TimerStart => "timer_start",
            EventKind::TimerExpiry => "timer_expiry",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelayEvent {
    pub relay: usize,
    pub kind: EventKind,
    pub at_us: f64,
}

/// Everything that happened in one simulated frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSchedule {
    pub frame: usize,
    /// First frame has no buffered prediction and falls back to the previous
    /// frame's estimate (outdated CSI).
    pub used_fallback: bool,
    pub decoding_subset: Vec<usize>,
    /// Per-relay magnitude the timers ran on this frame (written at t-1).
    pub buffered: Vec<f64>,
    pub events: Vec<RelayEvent>,
    /// `None` when the decoding subset was empty (no contention happened).
    pub outcome: Option<ContentionOutcome>,
}

/// Resolve one contention period.
///
/// `buffered` holds each relay's buffered channel magnitude; only subset
/// members start timers. The relay with the largest magnitude (shortest
/// timer) wins iff the runner-up expires at least `guard_us` later.
pub fn run_frame(
    buffered: &[f64],
    ds: &[usize],
    params: &ContentionParams,
) -> Result<ContentionOutcome> {
    params.validate()?;
    if ds.is_empty() {
        return Err(Error::invalid_argument("empty decoding subset: no contention"));
    }
    if let Some(&bad) = ds.iter().find(|&&k| !(buffered[k] > 0.0)) {
        return Err(Error::invalid_argument(format!(
            "buffered magnitude {} must be positive for subset members",
            buffered[bad]
        )));
    }
    let mut first: Option<(usize, f64)> = None;
    let mut second: Option<(usize, f64)> = None;
    for &k in ds {
        let timer = params.base_time_us / buffered[k];
        if first.map_or(true, |(_, t)| timer < t) {
            second = first;
            first = Some((k, timer));
        } else if second.map_or(true, |(_, t)| timer < t) {
            second = Some((k, timer));
        }
    }
    let (winner, t1) = first.expect("subset is non-empty");
    Ok(match second {
        None => ContentionOutcome::Winner(winner),
        Some((_, t2)) => {
            let separation = t2 - t1;
            if separation >= params.guard_us && separation > 0.0 {
                ContentionOutcome::Winner(winner)
            } else {
                ContentionOutcome::Collision
            }
        }
    })
}

/// Scenario-level inputs for the pipeline walk.
#[derive(Debug, Clone, Copy)]
pub struct PipelineConfig {
    pub contention: ContentionParams,
    pub target_rate: f64,
    /// Average source-hop SNR used to form the decoding subset.
    pub sr_mean_snr: f64,
}

/// Walk the estimate/predict/buffer pipeline over `frames` consecutive
/// frames (one frame per trace sample).
///
/// Frame t's contention runs on predictions written during frame t-1; the
/// first frame falls back to the previous sample's magnitude (outdated CSI).
pub fn run_pipeline(
    sr_mags: &[Vec<f64>],
    rd_mags: &[Vec<f64>],
    predictor: &TrainedPredictor<f64>,
    frames: usize,
    config: &PipelineConfig,
) -> Result<Vec<FrameSchedule>> {
    config.contention.validate()?;
    let relays = rd_mags.len();
    if relays == 0 || sr_mags.len() != relays {
        return Err(Error::invalid_argument(
            "need matching non-empty SR and RD trace sets",
        ));
    }
    if frames == 0 {
        return Err(Error::invalid_argument("frames must be >= 1"));
    }
    let window = predictor.window;
    let first_sample = window + 1; // frame 0 sits here; its fallback looks back one sample
    let needed = first_sample + frames;
    if sr_mags.iter().chain(rd_mags.iter()).any(|m| m.len() < needed) {
        return Err(Error::invalid_argument(format!(
            "traces must cover at least {needed} samples for {frames} frames"
        )));
    }

    // Predictions made at the end of each frame (for the next one). The
    // prediction made during frame f uses the window ending at its sample.
    let starts: Vec<usize> =
        (0..frames).map(|f| first_sample + f - (window - 1)).collect();
    let mut predictions = Vec::with_capacity(relays);
    for mags in rd_mags {
        let mut local = predictor.clone();
        predictions.push(local.predict_starts(mags, &starts)?);
    }

    let thr = decode_threshold(config.target_rate);
    let mut schedules = Vec::with_capacity(frames);
    for f in 0..frames {
        let t = first_sample + f;
        let used_fallback = f == 0;
        let buffered: Vec<f64> = (0..relays)
            .map(|r| {
                let value = if used_fallback {
                    rd_mags[r][t - 1] // most recent estimate, one frame old
                } else {
                    predictions[r][f - 1]
                };
                value.max(MAGNITUDE_FLOOR)
            })
            .collect();
        let ds: Vec<usize> = (0..relays)
            .filter(|&r| {
                let m = sr_mags[r][t];
                m * m * config.sr_mean_snr >= thr
            })
            .collect();

        let mut events = Vec::new();
        for r in 0..relays {
            if ds.contains(&r) {
                events.push(RelayEvent { relay: r, kind: EventKind::RtsDecode, at_us: RTS_DECODE_AT_US });
            }
            events.push(RelayEvent { relay: r, kind: EventKind::CtsReceive, at_us: CTS_AT_US });
            events.push(RelayEvent { relay: r, kind: EventKind::PredictAndBuffer, at_us: PREDICT_AT_US });
        }
        let outcome = if ds.is_empty() {
            None
        } else {
            for &r in &ds {
                events.push(RelayEvent { relay: r, kind: EventKind::BufferFetch, at_us: CTS_AT_US });
                events.push(RelayEvent { relay: r, kind: EventKind::TimerStart, at_us: CONTENTION_START_US });
                events.push(RelayEvent {
                    relay: r,
                    kind: EventKind::TimerExpiry,
                    at_us: CONTENTION_START_US + config.contention.base_time_us / buffered[r],
                });
            }
            Some(run_frame(&buffered, &ds, &config.contention)?)
        };
        schedules.push(FrameSchedule {
            frame: f,
            used_fallback,
            decoding_subset: ds,
            buffered,
            events,
            outcome,
        });
    }
    Ok(schedules)
}

/// One line per event: `frame,relay,event,at_us`.
pub fn write_event_log<W: Write>(schedules: &[FrameSchedule], mut out: W) -> std::io::Result<()> {
    writeln!(out, "frame,relay,event,at_us")?;
    for schedule in schedules {
        for ev in &schedule.events {
            writeln!(out, "{},{},{},{}", schedule.frame, ev.relay, ev.kind.label(), ev.at_us)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::predictor::{build_predictor, PredictorConfig, TrainedPredictor};
    use crate::recurrent::LayerKind;

    fn params(base: f64, guard: f64) -> ContentionParams {
        ContentionParams { base_time_us: base, guard_us: guard }
    }

    #[test]
    fn strongest_relay_wins_with_clear_separation() {
        // timers: 1000, 200, 500 us; separation 300 >= 1
        let outcome =
            run_frame(&[0.1, 0.5, 0.2], &[0, 1, 2], &params(100.0, 1.0)).unwrap();
        assert_eq!(outcome, ContentionOutcome::Winner(1));
    }

    #[test]
    fn identical_magnitudes_collide() {
        let outcome = run_frame(&[0.4, 0.4], &[0, 1], &params(100.0, 1.0)).unwrap();
        assert_eq!(outcome, ContentionOutcome::Collision);
    }

    #[test]
    fn singleton_subset_wins_unconditionally() {
        let outcome = run_frame(&[0.01, 0.9], &[0], &params(100.0, 5.0)).unwrap();
        assert_eq!(outcome, ContentionOutcome::Winner(0));
    }

    #[test]
    fn empty_subset_is_an_error() {
        assert!(run_frame(&[0.5], &[], &params(100.0, 1.0)).is_err());
    }

    #[test]
    fn nonpositive_buffered_value_violates_contract() {
        assert!(run_frame(&[0.0, 0.5], &[0, 1], &params(100.0, 1.0)).is_err());
    }

    #[test]
    fn zero_guard_collides_only_on_exact_ties() {
        let p = params(100.0, 0.0);
        assert_eq!(run_frame(&[0.4, 0.4], &[0, 1], &p).unwrap(), ContentionOutcome::Collision);
        assert_eq!(
            run_frame(&[0.4, 0.400001], &[0, 1], &p).unwrap(),
            ContentionOutcome::Winner(1)
        );
    }

    #[test]
    fn collisions_decrease_with_smaller_guard() {
        use rand::Rng;
        use rand_chacha::rand_core::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        let ds: Vec<usize> = (0..8).collect();
        let mut counts = Vec::new();
        for guard in [5.0, 0.5, 0.05] {
            let p = params(100.0, guard);
            let mut collisions = 0;
            for _ in 0..20_000 {
                let mags: Vec<f64> = (0..8)
                    .map(|_| {
                        let u: f64 = rng.random();
                        (-u.ln()).sqrt() // Rayleigh-ish
                    })
                    .collect();
                if run_frame(&mags, &ds, &p).unwrap() == ContentionOutcome::Collision {
                    collisions += 1;
                }
            }
            counts.push(collisions);
        }
        assert!(counts[0] > counts[1] && counts[1] >= counts[2], "{counts:?}");
    }

    fn toy_predictor() -> TrainedPredictor<f64> {
        let config = PredictorConfig {
            hidden_layers: vec![(LayerKind::Gru, 4)],
            horizon_steps: 1,
            window: 8,
            ..PredictorConfig::default()
        };
        TrainedPredictor {
            net: build_predictor(&config, 42).unwrap(),
            window: 8,
            horizon: 1,
            scale: 1.0,
        }
    }

    fn ramp_traces(relays: usize, len: usize) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let sr = vec![vec![1.0; len]; relays];
        let rd = (0..relays)
            .map(|r| (0..len).map(|t| 0.2 + 0.13 * r as f64 + 0.001 * t as f64).collect())
            .collect();
        (sr, rd)
    }

    #[test]
    fn first_frame_falls_back_to_outdated_csi() {
        let (sr, rd) = ramp_traces(3, 32);
        let predictor = toy_predictor();
        let config = PipelineConfig {
            contention: ContentionParams::default(),
            target_rate: 1.0,
            sr_mean_snr: 10.0,
        };
        let schedules = run_pipeline(&sr, &rd, &predictor, 1, &config).unwrap();
        assert_eq!(schedules.len(), 1);
        assert!(schedules[0].used_fallback);
        let t = predictor.window + 1;
        for (r, buffered) in schedules[0].buffered.iter().enumerate() {
            assert_eq!(*buffered, rd[r][t - 1]);
        }
        // winner is the argmax of the outdated magnitudes (relay 2 ramps highest)
        assert_eq!(schedules[0].outcome, Some(ContentionOutcome::Winner(2)));
    }

    #[test]
    fn later_frames_use_predictions_written_one_frame_earlier() {
        let (sr, rd) = ramp_traces(2, 64);
        let predictor = toy_predictor();
        let config = PipelineConfig {
            contention: ContentionParams::default(),
            target_rate: 1.0,
            sr_mean_snr: 10.0,
        };
        let schedules = run_pipeline(&sr, &rd, &predictor, 4, &config).unwrap();
        for (f, schedule) in schedules.iter().enumerate().skip(1) {
            assert!(!schedule.used_fallback);
            // recompute the prediction made during frame f-1 independently
            let made_at = predictor.window + 1 + (f - 1);
            for r in 0..2 {
                let mut clone = predictor.clone();
                let window = &rd[r][made_at - (predictor.window - 1)..=made_at];
                let expect = clone.predict(window).unwrap().max(MAGNITUDE_FLOOR);
                assert_eq!(schedule.buffered[r], expect, "frame {f} relay {r}");
            }
        }
    }

    #[test]
    fn non_subset_relays_never_start_timers() {
        let (mut sr, rd) = ramp_traces(3, 48);
        sr[1] = vec![0.01; 48]; // relay 1 never decodes
        let predictor = toy_predictor();
        let config = PipelineConfig {
            contention: ContentionParams::default(),
            target_rate: 1.0,
            sr_mean_snr: 10.0,
        };
        let schedules = run_pipeline(&sr, &rd, &predictor, 5, &config).unwrap();
        for schedule in &schedules {
            assert!(!schedule.decoding_subset.contains(&1));
            assert!(schedule
                .events
                .iter()
                .all(|e| e.relay != 1 || !matches!(e.kind, EventKind::TimerStart | EventKind::TimerExpiry)));
        }
    }

    #[test]
    fn event_log_format() {
        let (sr, rd) = ramp_traces(2, 32);
        let predictor = toy_predictor();
        let config = PipelineConfig {
            contention: ContentionParams::default(),
            target_rate: 1.0,
            sr_mean_snr: 10.0,
        };
        let schedules = run_pipeline(&sr, &rd, &predictor, 2, &config).unwrap();
        let mut buf = Vec::new();
        write_event_log(&schedules, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("frame,relay,event,at_us\n"));
        assert!(text.contains("0,0,cts_receive,200"));
        assert!(text.contains("timer_expiry"));
    }

    #[test]
    fn pipeline_needs_enough_trace() {
        let (sr, rd) = ramp_traces(2, 10);
        let predictor = toy_predictor();
        let config = PipelineConfig {
            contention: ContentionParams::default(),
            target_rate: 1.0,
            sr_mean_snr: 10.0,
        };
        assert!(run_pipeline(&sr, &rd, &predictor, 5, &config).is_err());
    }
}
