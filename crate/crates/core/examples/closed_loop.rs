//! Fly the simulated drone from rendered gestures: the full loop of face
//! initialisation, tracking, skin and hand detection, commands and motion.
//!
//! ```text
//! cargo run --release --example closed_loop -- right 1.1 /tmp/up.jsonl
//! ```

use std::fs::File;
use std::io::BufWriter;

use gesture_pilot::pipeline::write_jsonl;
use gesture_pilot::scenario::Scenario;
use gesture_pilot::scene::ArmPose;
use gesture_pilot::{Models, Pipeline, PipelineConfig};

fn main() -> gesture_pilot::Result<()> {
    let mut args = std::env::args().skip(1);
    let pose = match args.next().as_deref() {
        Some("left") => ArmPose::Left,
        Some("right") | None => ArmPose::Right,
        Some("high") => ArmPose::FrontHigh,
        Some("low") => ArmPose::FrontLow,
        Some("rest") => ArmPose::Rest,
        Some(other) => return Err(gesture_pilot::Error::Input(format!("unknown pose {other}"))),
    };
    let angle: f64 =
        args.next().map_or(Ok(1.1), |a| a.parse()).map_err(|e| gesture_pilot::Error::Input(format!("angle: {e}")))?;

    let mut scenario = Scenario::holding(pose, angle, 150);
    scenario.scene.noise_seed = Some(7);
    let mut config = PipelineConfig::default();
    scenario.configure(&mut config);
    let mut pipeline = Pipeline::new(config, Models::bundled())?;
    let reports = scenario.run(&mut pipeline)?;

    for r in reports.iter().filter(|r| r.command.is_some()) {
        let c = r.command.unwrap();
        let p = r.drone.position;
        println!(
            "t={:5} ms {:?} {:?} -> drone at ({:.2}, {:.2}, {:.2})",
            r.timestamp_ms, c.kind, c.vector, p[0], p[1], p[2]
        );
    }
    let last = reports.last().unwrap().drone.position;
    println!("start {:?}, end ({:.2}, {:.2}, {:.2})", scenario.drone_start, last[0], last[1], last[2]);

    if let Some(path) = args.next() {
        write_jsonl(&reports, &mut BufWriter::new(File::create(&path)?))?;
        println!("reports written to {path}");
    }
    Ok(())
}
