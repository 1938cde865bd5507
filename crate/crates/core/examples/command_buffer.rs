//! Turn a noisy stream of per-frame hand detections into rate-limited
//! commands.
//!
//! ```text
//! cargo run --example command_buffer
//! ```

use gesture_pilot::command::{generate_command, CommandKind, CommandParams, RateLimiter, StateBuffers};
use gesture_pilot::hand::{HandDetection, HandKind};
use gesture_pilot::PixelCoord;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() {
    let params = CommandParams::default();
    let mut buffers = StateBuffers::new(params.buffer_len);
    let mut limiter = RateLimiter::new(params.min_interval_ms);
    let mut rng = ChaCha8Rng::seed_from_u64(1);

    // pointing left for 3 s, then a hand above the body centre for 3 s
    for i in 0..150u32 {
        let detection = if rng.gen_bool(0.2) {
            HandDetection::none()
        } else if i < 75 {
            let v = PixelCoord::new(-110 + rng.gen_range(-6..=6), -15 + rng.gen_range(-6..=6));
            HandDetection { kind: HandKind::StretchedOut, vector: v, ..HandDetection::none() }
        } else {
            let v = PixelCoord::new(rng.gen_range(-4..=4), -40 + rng.gen_range(-4..=4));
            HandDetection { kind: HandKind::FrontOfBody, vector: v, ..HandDetection::none() }
        };
        buffers.push(&detection);
        let cmd = generate_command(&buffers, &params);
        let t = i * 40;
        if cmd.kind != CommandKind::None && limiter.admit(t) {
            println!("t={t:5} ms  {:?} {:?}", cmd.kind, cmd.vector);
        }
    }
}
