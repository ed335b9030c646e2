use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::models::{simulate_trial, ParticipantModel, SimContext};
use super::{Result, SimError};
use crate::log::{
    EntryRecord, FrameRecord, ImuSample, Meta, OrientRecord, Record, Sensor, SessionLog, TargetEvent, TimestampNs,
};
use crate::protocol::{
    plan_trial, verify_entry, Code, DeviceGeometry, DigitWindow, OrientationMode, SessionConfig, TrialSpec,
};
use crate::rng::{split_seed, stream, Domain};

const G: f64 = 9.81;

/// Sensor rates and timing of a simulated capture client.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StreamTiming {
    /// Camera frame period; 62.5 ms is 16 fps.
    pub frame_interval_ns: u64,
    pub imu_interval_ns: u64,
    pub orient_interval_ns: u64,
    /// Until-tap digits stay up for a uniform draw from this range.
    pub tap_latency_ms: (f64, f64),
}

impl Default for StreamTiming {
    fn default() -> Self {
        StreamTiming {
            frame_interval_ns: 62_500_000,
            imu_interval_ns: 20_000_000,
            orient_interval_ns: 50_000_000,
            tap_latency_ms: (350.0, 900.0),
        }
    }
}

impl StreamTiming {
    pub fn validate(&self) -> Result<()> {
        if self.frame_interval_ns == 0 || self.imu_interval_ns == 0 || self.orient_interval_ns == 0 {
            return Err(SimError::InvalidArgument("stream intervals must be positive".into()));
        }
        let (lo, hi) = self.tap_latency_ms;
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return Err(SimError::InvalidArgument("tap latency range must be positive and ordered".into()));
        }
        Ok(())
    }
}

/// Gravity-opposing accelerometer reading while held in `mode`.
pub fn accel_for(mode: OrientationMode) -> [f64; 3] {
    match mode {
        OrientationMode::Portrait => [0.0, -G, 0.6],
        OrientationMode::ReversePortrait => [0.0, G, 0.6],
        OrientationMode::Landscape => [-G, 0.0, 0.6],
        OrientationMode::ReverseLandscape => [G, 0.0, 0.6],
    }
}

/// Everything a client uploads for one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecording {
    /// Orientation, target, frame and IMU records sorted by timestamp.
    pub events: Vec<Record>,
    pub entry: EntryRecord,
}

/// Produces the sensor streams a capture client would log, one trial at a time.
///
/// Each trial holds the required orientation for the gate window plus two
/// samples, shows its digits on schedule, then enters the code after the
/// keypad time. Camera frames and IMU samples run continuously across trials
/// from a random phase, so every stream stays monotone for the whole session.
#[derive(Debug, Clone)]
pub struct SessionRecorder {
    timing: StreamTiming,
    setup_ns: u64,
    entry_ns: u64,
    gate_samples: u64,
    rng: ChaCha8Rng,
    now: u64,
    next_frame: u64,
    next_frame_idx: u64,
    next_imu: u64,
}

impl SessionRecorder {
    pub fn new(session: &SessionConfig, timing: StreamTiming, seed: u64) -> Result<Self> {
        timing.validate()?;
        let mut rng = stream(seed, Domain::Behaviour, u64::MAX);
        let next_frame = rng.gen_range(0..timing.frame_interval_ns);
        let next_imu = rng.gen_range(0..timing.imu_interval_ns);
        Ok(SessionRecorder {
            timing,
            setup_ns: TimestampNs::from_ms(session.time_model.t_setup_ms).0,
            entry_ns: TimestampNs::from_ms(session.time_model.t_entry_ms).0,
            gate_samples: session.gate_window as u64 + 2,
            rng,
            now: 0,
            next_frame,
            next_frame_idx: 0,
            next_imu,
        })
    }

    /// Client clock at which the next trial starts.
    pub fn now(&self) -> TimestampNs {
        TimestampNs(self.now)
    }

    pub fn record_trial(&mut self, spec: &TrialSpec, entered: Code) -> TrialRecording {
        let t0 = self.now;
        let mut timed: Vec<(u64, u8, Record)> = Vec::new();

        for k in 0..self.gate_samples {
            let ts = t0 + k * self.timing.orient_interval_ns;
            timed.push((ts, 0, Record::Orient(OrientRecord { ts: TimestampNs(ts), mode: spec.required_orientation.into() })));
        }

        let start = t0 + self.setup_ns.max(self.gate_samples * self.timing.orient_interval_ns);
        let mut cursor = start;
        let mut taps = Vec::new();
        let (lat_lo, lat_hi) = self.timing.tap_latency_ms;
        for (i, window) in spec.schedule.iter().enumerate() {
            let (appear, disappear) = match *window {
                DigitWindow::Timed { appear_offset_ms, disappear_offset_ms } => (
                    start + TimestampNs::from_ms(appear_offset_ms).0,
                    start + TimestampNs::from_ms(disappear_offset_ms).0,
                ),
                DigitWindow::UntilTap { delay_ms } => {
                    let appear = cursor + TimestampNs::from_ms(delay_ms).0;
                    let tap = appear + TimestampNs::from_ms(self.rng.gen_range(lat_lo..=lat_hi)).0;
                    taps.push(TimestampNs(tap));
                    (appear, tap)
                }
            };
            let p = spec.digit_placements[i];
            timed.push((
                appear,
                1,
                Record::Target(TargetEvent {
                    trial: spec.trial_id,
                    idx: i as u32,
                    digit: spec.code.digits()[i],
                    u: p.u,
                    v: p.v,
                    opacity: spec.stimulus.opacity,
                    ts_appear: TimestampNs(appear),
                    ts_disappear: TimestampNs(disappear),
                }),
            ));
            cursor = disappear;
        }
        let entry_ts = cursor + self.entry_ns;

        while self.next_frame <= entry_ts {
            let ts = self.next_frame;
            timed.push((ts, 2, Record::Frame(FrameRecord { ts: TimestampNs(ts), idx: self.next_frame_idx, media: None })));
            self.next_frame_idx += 1;
            self.next_frame += self.timing.frame_interval_ns;
        }
        let [gx, gy, gz] = accel_for(spec.required_orientation);
        while self.next_imu <= entry_ts {
            let ts = TimestampNs(self.next_imu);
            let mut jitter = || self.rng.gen_range(-0.05..0.05);
            let accel = ImuSample { ts, sensor: Sensor::Accel, x: gx + jitter(), y: gy + jitter(), z: gz + jitter() };
            let gyro = ImuSample { ts, sensor: Sensor::Gyro, x: jitter(), y: jitter(), z: jitter() };
            timed.push((ts.0, 3, Record::Imu(accel)));
            timed.push((ts.0, 4, Record::Imu(gyro)));
            self.next_imu += self.timing.imu_interval_ns;
        }
        timed.sort_by_key(|(ts, order, _)| (*ts, *order));

        self.now = entry_ts + 1;
        let accepted = verify_entry(&spec.code, &entered).accepted;
        TrialRecording {
            events: timed.into_iter().map(|(_, _, r)| r).collect(),
            entry: EntryRecord {
                trial: spec.trial_id,
                entered,
                ts: TimestampNs(entry_ts),
                accepted,
                taps: (!taps.is_empty()).then_some(taps),
            },
        }
    }
}

/// Parameters for a whole synthetic session recording.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub session: SessionConfig,
    pub geometry: DeviceGeometry,
    pub model: ParticipantModel,
    pub trials: u64,
    pub seed: u64,
    pub session_id: String,
    pub created_utc: String,
    pub timing: StreamTiming,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            session: SessionConfig::default(),
            geometry: DeviceGeometry::default(),
            model: ParticipantModel::Foveator(Default::default()),
            trials: 12,
            seed: 0,
            session_id: "synthetic".into(),
            created_utc: "1970-01-01T00:00:00Z".into(),
            timing: StreamTiming::default(),
        }
    }
}

/// Record a whole session with a simulated participant, as the service would store it.
pub fn synthesize_session(cfg: &SynthConfig) -> Result<SessionLog> {
    cfg.model.validate()?;
    let config = serde_json::to_value(&cfg.session).map_err(|e| SimError::InvalidArgument(e.to_string()))?;
    let mut log = SessionLog::new(Meta::new(&cfg.session_id, &cfg.created_utc, cfg.geometry, config));
    let ctx = SimContext { geometry: cfg.geometry, alphabet_size: cfg.session.alphabet_size };
    let mut recorder = SessionRecorder::new(&cfg.session, cfg.timing, cfg.seed)?;

    for trial in 0..cfg.trials {
        let block = cfg.session.block_for_trial(trial);
        let spec = plan_trial(&cfg.session, &block, &cfg.geometry, trial, split_seed(cfg.seed, Domain::TrialPlan, trial))?;
        let mut rng = stream(cfg.seed, Domain::Behaviour, trial);
        let outcome = simulate_trial(&cfg.model, &spec, &ctx, &mut rng)?;
        let rec = recorder.record_trial(&spec, outcome.entered);
        log.records.push(Record::Trial(Box::new(spec)));
        log.records.extend(rec.events);
        log.records.push(Record::Entry(rec.entry));
    }
    Ok(log)
}
