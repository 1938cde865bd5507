//! One PASS/FAIL line per acceptance criterion. Run with
//! `cargo test -p gesture-pilot --test acceptance`; exits non-zero when any
//! criterion fails.

mod common;

use std::time::{Duration, Instant};

use common::{front_oracle, naive_dft, random_mask, ridge_loss, square_frame, stretched_oracle};
use gesture_pilot::command::{generate_command, rate_limit, CommandKind, CommandParams, PilotCommand, StateBuffers};
use gesture_pilot::dsst::{gaussian_response, Complex64, FeatureMap, FilterModel, Tracker, TrackerParams};
use gesture_pilot::haar::{bundled_cascade, detect_faces, user_box_from_face, IntegralImage};
use gesture_pilot::hand::{anchors, detect_front_hand, detect_hands, detect_stretched_hand, HandKind};
use gesture_pilot::pipeline::write_jsonl;
use gesture_pilot::scenario::Scenario;
use gesture_pilot::scene::{render, render_at, ArmPose, SceneSpec};
use gesture_pilot::sim::DroneState;
use gesture_pilot::skin::{detect_skin, erase_body_regions, SkinModel};
use gesture_pilot::{BoundingBox, FrameReport, GrayImage, Models, Pipeline, PipelineConfig, PixelCoord};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn run_scenario(scenario: &Scenario) -> Vec<FrameReport> {
    let mut config = PipelineConfig::default();
    scenario.configure(&mut config);
    let mut pipeline = Pipeline::new(config, Models::bundled()).unwrap();
    scenario.run(&mut pipeline).unwrap()
}

fn hand_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut mismatches = 0;
    let mut detections = [0usize; 2];
    for _ in 0..1000 {
        let (user, mask) = random_mask(&mut rng);
        let params = gesture_pilot::hand::HandParams::default();
        let a = anchors(&user, params.shoulder_ratio);
        let out = detect_stretched_hand(&user, &mask, &a, &params);
        let front = detect_front_hand(&user, &mask, &a, &params);
        detections[0] += usize::from(out.kind != HandKind::None);
        detections[1] += usize::from(front.kind != HandKind::None);
        if out != stretched_oracle(&user, &mask, &a, &params).0 || front != front_oracle(&user, &mask, &a, &params) {
            mismatches += 1;
        }
    }
    let elapsed = start.elapsed();
    check(
        mismatches == 0 && elapsed < Duration::from_secs(30),
        format!(
            "{mismatches}/1000 mismatches, {} stretched and {} front detections, {:.1} s",
            detections[0],
            detections[1],
            elapsed.as_secs_f64()
        ),
    )
}

fn random_map(rng: &mut ChaCha8Rng, w: usize, h: usize, d: usize) -> FeatureMap {
    FeatureMap::new(w, h, (0..d).map(|_| (0..w * h).map(|_| rng.gen_range(-0.5..0.5)).collect()).collect())
}

fn filter_optimality() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut worst = f64::NEG_INFINITY;
    let lambda = 0.01;
    for _ in 0..100 {
        let (w, h, d) = (rng.gen_range(2..7), rng.gen_range(2..7), rng.gen_range(1..4));
        let f = random_map(&mut rng, w, h, d);
        let g = gaussian_response(w, h, 1.0);
        let model = FilterModel::train(&f, &g, lambda, 0.025).unwrap();
        let spatial: Vec<Vec<f64>> =
            model.filter().iter().map(|hl| naive_dft(hl, w, h, true).iter().map(|c| c.re).collect()).collect();
        let best = ridge_loss(&spatial, &f, &g, lambda);
        for _ in 0..100 {
            let scale = 10f64.powf(rng.gen_range(-5.0..0.0));
            let perturbed: Vec<Vec<f64>> =
                spatial.iter().map(|c| c.iter().map(|v| v + scale * rng.gen_range(-1.0..1.0)).collect()).collect();
            let other = ridge_loss(&perturbed, &f, &g, lambda);
            worst = worst.max((best - other) / other);
        }
    }
    let elapsed = start.elapsed();
    check(
        worst <= 1e-9 && elapsed < Duration::from_secs(10),
        format!("worst relative excess {worst:.2e}, {:.2} s", elapsed.as_secs_f64()),
    )
}

fn filter_update() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let f1 = random_map(&mut rng, 7, 5, 2);
    let f2 = random_map(&mut rng, 7, 5, 2);
    let g = gaussian_response(7, 5, 1.0);
    let frozen = FilterModel::train(&f1, &g, 0.01, 0.0).unwrap();
    let frozen_ok = frozen.updated(&f2).unwrap() == frozen;
    let replaced = FilterModel::train(&f1, &g, 0.01, 1.0).unwrap().updated(&f2).unwrap();
    let replaced_ok = replaced == FilterModel::train(&f2, &g, 0.01, 1.0).unwrap();

    // blend from spectra computed independently of the library
    let eta = 0.025;
    let blended = FilterModel::train(&f1, &g, 0.01, eta).unwrap().updated(&f2).unwrap();
    let real = |v: &[f64]| v.iter().map(|&x| Complex64::new(x, 0.0)).collect::<Vec<_>>();
    let g_hat = naive_dft(&real(&g), 7, 5, false);
    let spectra = |f: &FeatureMap| -> Vec<Vec<Complex64>> {
        f.channels.iter().map(|c| naive_dft(&real(c), 7, 5, false)).collect()
    };
    let (s1, s2) = (spectra(&f1), spectra(&f2));
    let mut worst = 0.0f64;
    for k in 0..35 {
        let b1: f64 = s1.iter().map(|c| c[k].norm_sqr()).sum();
        let b2: f64 = s2.iter().map(|c| c[k].norm_sqr()).sum();
        let b = (1.0 - eta) * b1 + eta * b2;
        worst = worst.max((blended.denominator()[k] - b).abs() / b.abs().max(1.0));
        for l in 0..2 {
            let a = (g_hat[k].conj() * s1[l][k]) * (1.0 - eta) + (g_hat[k].conj() * s2[l][k]) * eta;
            worst = worst.max((blended.numerators()[l][k] - a).norm() / a.norm().max(1.0));
        }
    }
    check(
        frozen_ok && replaced_ok && worst <= 1e-9,
        format!("eta=0 exact {frozen_ok}, eta=1 exact {replaced_ok}, blend error {worst:.1e}"),
    )
}

fn tracker_sequences() -> Outcome {
    let params = TrackerParams::default();
    let (x0, y0) = (60.0, 80.0);
    let first = square_frame(240, 200, x0, y0, 40.0, 0);
    let mut tracker = Tracker::new(&first, BoundingBox::from_center(x0, y0, 40.0, 40.0), params).unwrap();
    let mut worst = 0.0f64;
    for t in 1..=30u32 {
        let (cx, cy) = (x0 + 2.0 * f64::from(t), y0 + f64::from(t));
        tracker.track(&square_frame(240, 200, cx, cy, 40.0, t * 40)).unwrap();
        let (tx, ty) = tracker.center();
        worst = worst.max((tx - cx).hypot(ty - cy));
    }

    let first = square_frame(240, 240, 120.0, 120.0, 40.0, 0);
    let mut tracker = Tracker::new(&first, BoundingBox::from_center(120.0, 120.0, 40.0, 40.0), params).unwrap();
    for t in 1..=20 {
        let s = 40.0 * 1.01f64.powi(t);
        tracker.track(&square_frame(240, 240, 120.0, 120.0, s, t as u32 * 40)).unwrap();
    }
    let target = 1.01f64.powi(20);
    let rel = (tracker.scale_factor() - target).abs() / target;
    check(
        worst <= 2.0 && rel <= 0.05,
        format!("max centre error {worst:.2} px, scale {:.4} vs {target:.4}", tracker.scale_factor()),
    )
}

fn integral_image() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let brute = |img: &GrayImage, x: u32, y: u32, w: u32, h: u32| -> u64 {
        (y..y + h).flat_map(|yy| (x..x + w).map(move |xx| (xx, yy))).map(|(xx, yy)| u64::from(img.get(xx, yy))).sum()
    };
    let mut checked = 0usize;
    let mut bad = 0usize;
    for (w, h) in [(1, 1), (5, 3), (16, 16)] {
        let img = GrayImage::new(w, h, (0..w * h).map(|_| rng.gen()).collect()).unwrap();
        let ii = IntegralImage::new(&img);
        for y in 0..h {
            for x in 0..w {
                for rh in 1..=h - y {
                    for rw in 1..=w - x {
                        checked += 1;
                        bad += usize::from(ii.rect_sum(x, y, rw, rh) != brute(&img, x, y, rw, rh));
                    }
                }
            }
        }
    }
    let img = GrayImage::new(8, 8, (0..64).map(|_| rng.gen()).collect()).unwrap();
    let ii = IntegralImage::new(&img);
    for _ in 0..100 {
        let (x, y) = (rng.gen_range(0..8), rng.gen_range(0..8));
        let (w, h) = (rng.gen_range(1..=8 - x), rng.gen_range(1..=8 - y));
        checked += 1;
        bad += usize::from(ii.rect_sum(x, y, w, h) != brute(&img, x, y, w, h));
    }
    check(bad == 0, format!("{bad} wrong of {checked} rectangle sums"))
}

fn buffers(out: &[(PixelCoord, usize)], front: &[(PixelCoord, usize)]) -> StateBuffers {
    let mut b = StateBuffers::new(60);
    let expand = |v: &[(PixelCoord, usize)]| -> Vec<PixelCoord> {
        v.iter().flat_map(|&(p, n)| std::iter::repeat_n(p, n)).collect()
    };
    let (outs, fronts) = (expand(out), expand(front));
    for i in 0..60 {
        b.push_raw(outs.get(i).copied().unwrap_or_default(), fronts.get(i).copied().unwrap_or_default());
    }
    b
}

fn command_generator() -> Outcome {
    let p = PixelCoord::new;
    let params = CommandParams::default();
    let cases = [
        (buffers(&[(p(100, -10), 31)], &[]), PilotCommand { kind: CommandKind::Planar, vector: [100.0, -10.0, 0.0] }),
        (buffers(&[(p(8, -90), 40)], &[]), PilotCommand { kind: CommandKind::Planar, vector: [0.0, -90.0, 0.0] }),
        (buffers(&[], &[(p(3, -25), 31)]), PilotCommand { kind: CommandKind::Depth, vector: [0.0, 0.0, -1.0] }),
        (
            buffers(&[(p(50, 5), 30)], &[(p(0, 12), 31)]),
            PilotCommand { kind: CommandKind::Depth, vector: [0.0, 0.0, 1.0] },
        ),
    ];
    let traced = cases.iter().filter(|(b, want)| generate_command(b, &params) == *want).count();

    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut snaps_ok = 0;
    for _ in 0..1000 {
        let n = rng.gen_range(31..=60);
        let entries: Vec<PixelCoord> = (0..n)
            .map(|_| loop {
                let v = p(rng.gen_range(-200..=200), rng.gen_range(-200..=200));
                if !v.is_zero() {
                    break v;
                }
            })
            .collect();
        let mut b = StateBuffers::new(60);
        for &e in &entries {
            b.push_raw(e, PixelCoord::ZERO);
        }
        let mx = entries.iter().map(|e| f64::from(e.x)).sum::<f64>() / n as f64;
        let my = entries.iter().map(|e| f64::from(e.y)).sum::<f64>() / n as f64;
        let snapped = generate_command(&b, &params).vector[0] == 0.0;
        snaps_ok += usize::from(snapped == (my.abs() > (0.5 * mx).abs()));
    }
    check(traced == 4 && snaps_ok == 1000, format!("{traced}/4 traced scenarios, {snaps_ok}/1000 snap decisions"))
}

fn rate_limiting() -> Outcome {
    let emitted = rate_limit((0..250).map(|i| i * 40), 600);
    check(emitted.len() <= 17, format!("{} emissions from 10 s at 25 Hz", emitted.len()))
}

/// The unquantized region is where the snap rule stays off, |y| <= |0.5 x|,
/// so within atan(0.5) of horizontal.
fn angle_sweep() -> Outcome {
    let mut good = 0;
    let mut errors = Vec::new();
    for i in 0..13 {
        let angle = (-24.0 + 4.0 * f64::from(i)).to_radians();
        let pose = if i % 2 == 0 { ArmPose::Right } else { ArmPose::Left };
        let mut scenario = Scenario::holding(pose, angle, 45);
        scenario.scene.noise_seed = Some(100 + u64::from(i as u32));
        let (_, truth) =
            render(&scenario.spec_at(0), &DroneState::facing(scenario.drone_start, scenario.scene.user_position))
                .unwrap();
        let reports = run_scenario(&scenario);
        let Some(cmd) = reports.iter().find_map(|r| r.command) else {
            errors.push(f64::NAN);
            continue;
        };
        let g = truth.gesture_vector_px;
        let want = f64::from(g.y).atan2(f64::from(g.x));
        let got = cmd.vector[1].atan2(cmd.vector[0]);
        let mut err = (got - want).to_degrees().abs();
        if err > 180.0 {
            err = 360.0 - err;
        }
        good += usize::from(cmd.kind == CommandKind::Planar && err <= 10.0);
        errors.push(err);
    }
    let shown: Vec<String> = errors.iter().map(|e| format!("{e:.1}")).collect();
    check(good >= 12, format!("{good}/13 within 10 deg, errors [{}]", shown.join(", ")))
}

fn front_suite() -> Outcome {
    let cascade = bundled_cascade();
    let skin = SkinModel::bundled();
    let config = PipelineConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(85);
    let mut correct = [0usize; 2];
    for i in 0..200 {
        let high = i < 100;
        let spec = SceneSpec {
            arm_which: if high { ArmPose::FrontHigh } else { ArmPose::FrontLow },
            hand_offset: [rng.gen_range(-0.3..0.3), rng.gen_range(-0.1..0.1)],
            noise_seed: Some(i),
            ..SceneSpec::default()
        };
        let position = [rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5), rng.gen_range(0.7..1.1)];
        let drone = DroneState::facing(position, spec.user_position);
        let (frame, _) = render_at(&spec, &drone, 0).unwrap();
        let Some(face) = detect_faces(&cascade, &frame, &config.detect).into_iter().max_by_key(BoundingBox::area)
        else {
            continue;
        };
        let user = user_box_from_face(&face, frame.width(), frame.height(), &config.body_ratio);
        let mask = erase_body_regions(
            &detect_skin(&skin, &frame, &user, &config.skin),
            &user,
            config.skin.keep_from,
            config.skin.keep_until,
        );
        let d = detect_hands(&user, &mask, &anchors(&user, config.hand.shoulder_ratio), &config.hand);
        let right = d.kind == HandKind::FrontOfBody && (d.vector.y < 0) == high && d.vector.y != 0;
        correct[usize::from(!high)] += usize::from(right);
    }
    let rate = (correct[0] + correct[1]) as f64 / 200.0;
    check(rate >= 0.85, format!("{:.1}% correct ({}/100 above, {}/100 below)", 100.0 * rate, correct[0], correct[1]))
}

fn closed_loop() -> Outcome {
    let mut up = Scenario::holding(ArmPose::Right, 1.1, 120);
    up.scene.noise_seed = Some(3);
    let reports = run_scenario(&up);
    let emitted: Vec<&FrameReport> = reports.iter().filter(|r| r.command.is_some()).collect();
    let rising = emitted.len() >= 2 && emitted.windows(2).all(|w| w[1].drone.position[2] > w[0].drone.position[2]);
    let all_up = emitted.iter().all(|r| r.command.unwrap().vector[1] < 0.0);

    let mut rest = Scenario::holding(ArmPose::Rest, 0.0, 120);
    rest.scene.noise_seed = Some(8);
    let still = run_scenario(&rest).iter().all(|r| r.drone.position == rest.drone_start);
    let climb = reports.last().unwrap().drone.position[2] - up.drone_start[2];
    check(
        rising && all_up && still,
        format!("{} up commands, climbed {climb:.2} m, resting drone still {still}", emitted.len()),
    )
}

fn replay_determinism() -> Outcome {
    let mut scenario = Scenario::holding(ArmPose::Left, 0.3, 60);
    scenario.scene.noise_seed = Some(17);
    let bytes = || {
        let mut out = Vec::new();
        write_jsonl(&run_scenario(&scenario), &mut out).unwrap();
        out
    };
    let (a, b) = (bytes(), bytes());
    check(a == b, format!("{} and {} bytes, identical {}", a.len(), b.len(), a == b))
}

fn throughput() -> Outcome {
    let mut scenario = Scenario::holding(ArmPose::Right, 0.4, 150);
    scenario.scene.noise_seed = Some(5);
    let drone = DroneState::facing(scenario.drone_start, scenario.scene.user_position);
    let frames: Vec<_> =
        (0..scenario.frames).map(|i| render_at(&scenario.spec_at(i), &drone, i as u32 * 40).unwrap().0).collect();
    let mut config = PipelineConfig::default();
    scenario.configure(&mut config);
    let mut pipeline = Pipeline::new(config, Models::bundled()).unwrap();
    let start = Instant::now();
    for f in &frames {
        pipeline.process(f).unwrap();
    }
    let fps = frames.len() as f64 / start.elapsed().as_secs_f64();
    let size = (frames[0].width(), frames[0].height());
    check(fps >= 15.0 && size == (640, 480), format!("{fps:.1} fps at {}x{}", size.0, size.1))
}

fn main() {
    let criteria: [Criterion; 12] = [
        ("hand detectors match brute-force oracle", hand_oracle),
        ("closed-form filter minimizes ridge loss", filter_optimality),
        ("filter running-average update", filter_update),
        ("tracker on synthetic sequences", tracker_sequences),
        ("integral image sums", integral_image),
        ("command generator", command_generator),
        ("rate limit", rate_limiting),
        ("angle sweep", angle_sweep),
        ("front-of-body suite", front_suite),
        ("closed loop", closed_loop),
        ("replay determinism", replay_determinism),
        ("throughput at 640x480", throughput),
    ];
    let mut failed = Vec::new();
    for (name, run) in criteria {
        match run() {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                println!("FAIL {name}: {detail}");
                failed.push(name);
            }
        }
    }
    if !failed.is_empty() {
        eprintln!("failed: {failed:?}");
        std::process::exit(1);
    }
}
