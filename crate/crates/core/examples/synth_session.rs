//! Print a synthetic session log: `synth_session [seed] [trials]`.

use gazecode_core::sim::{synthesize_session, StreamTiming, SynthConfig};

fn main() {
    let mut args = std::env::args().skip(1);
    let seed = args.next().map_or(0, |s| s.parse().expect("seed must be an integer"));
    let trials = args.next().map_or(6, |s| s.parse().expect("trials must be an integer"));
    let cfg = SynthConfig {
        seed,
        trials,
        session_id: format!("synthetic-{seed}"),
        timing: StreamTiming { imu_interval_ns: 100_000_000, ..StreamTiming::default() },
        ..SynthConfig::default()
    };
    let log = synthesize_session(&cfg).expect("valid synthetic config");
    print!("{}", log.serialize().expect("log serializes"));
}
