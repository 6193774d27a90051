use halotouch::depthio::{build_background, read_stream, subtract_background, write_stream, DepthFrame, DepthioError, StreamHeader};
use halotouch::geometry::CameraPose;
use halotouch::halocore::{count_line_pixels, reveal, ExtractConfig, DEFAULT_THRESHOLD, LABEL_HALO};
use halotouch::mpisim::{sample_halo, FingerPose, Renderer};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

mod common;

fn frames_strategy() -> impl Strategy<Value = (StreamHeader, Vec<DepthFrame>)> {
    (1usize..24, 1usize..24, 0usize..12, any::<bool>(), 1u16..4000, 0u16..90).prop_flat_map(|(w, h, n, ir, fps, tilt)| {
        let plane = prop::collection::vec(any::<u16>(), w * h);
        prop::collection::vec((plane.clone(), plane, any::<u32>()), n).prop_map(move |planes| {
            let pose = CameraPose { z_distance: 0.25 + tilt as f64 / 8.0, yaw: tilt as f64, pitch: -(tilt as f64) / 2.0 };
            let mut header = StreamHeader::new(w, h, fps as f32 / 4.0, pose);
            header.channels.ir = ir;
            let mut t = 0u64;
            let frames = planes
                .into_iter()
                .enumerate()
                .map(|(i, (d, r, dt))| {
                    t += 1 + dt as u64;
                    let f = DepthFrame::new(w, h, i as u64, t, d).unwrap();
                    if ir {
                        f.with_ir(r).unwrap()
                    } else {
                        f
                    }
                })
                .collect();
            (header, frames)
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn stream_round_trip_is_bytewise((header, frames) in frames_strategy()) {
        let mut bytes = Vec::new();
        write_stream(&frames, &header, &mut bytes).unwrap();
        let (back_header, back) = read_stream(bytes.as_slice()).unwrap();
        prop_assert_eq!(back_header, header);
        prop_assert_eq!(&back, &frames);
        let mut again = Vec::new();
        write_stream(&back, &back_header, &mut again).unwrap();
        prop_assert_eq!(again, bytes);
    }
}

#[test]
fn ninety_simulator_frames_round_trip() {
    let scene = common::scene("paper");
    let script = halotouch::mpisim::scripts::grid16(0);
    let s = common::render(&scene, &script, 3);
    let frames: Vec<DepthFrame> = s.frames.into_iter().take(90).collect();
    assert_eq!(frames.len(), 90);
    let header = StreamHeader::new(256, 256, 30.0, scene.camera_pose);
    let mut bytes = Vec::new();
    write_stream(&frames, &header, &mut bytes).unwrap();
    let (_, back) = read_stream(bytes.as_slice()).unwrap();
    assert_eq!(back.len(), 90);
    for (a, b) in frames.iter().zip(&back) {
        assert_eq!(a.depth, b.depth);
    }
    // cutting the file inside frame 40 names that frame
    let cut = StreamHeader::header_len() + 40 * header.frame_len() + 100;
    match read_stream(&bytes[..cut]) {
        Err(DepthioError::Truncated { frame_index }) => assert_eq!(frame_index, 40),
        other => panic!("expected truncation, got {other:?}"),
    }
}

#[test]
fn noisy_background_mean_is_within_a_millimeter() {
    // sigma 2 mm over 60 frames leaves a standard error of 0.26 mm per pixel
    let (w, h) = (32, 32);
    let noise = Normal::new(500.0f64, 2.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let frames: Vec<DepthFrame> = (0..60)
        .map(|i| {
            let d = (0..w * h).map(|_| noise.sample(&mut rng).round() as u16).collect();
            DepthFrame::new(w, h, i, i * 33_333, d).unwrap()
        })
        .collect();
    let bg = build_background(&frames).unwrap();
    for y in 0..h {
        for x in 0..w {
            let m = bg.mean_at(x, y).unwrap();
            assert!((m - 500.0).abs() <= 1.0, "pixel ({x}, {y}) mean {m}");
        }
    }
}

fn strength(r: &Renderer, f: &FingerPose, seeds: u64) -> f64 {
    let cfg = ExtractConfig::default();
    (0..seeds).map(|s| sample_halo(r, f, s, s, &cfg).unwrap().raw_strength).sum::<f64>() / seeds as f64
}

#[test]
fn halo_orders_touch_over_hover_and_fades_far_away() {
    let r = Renderer::new(common::scene("paper")).unwrap();
    let touch = FingerPose::touching(0.0, 0.0, 45.0, 270.0);
    let hover10 = FingerPose::hovering(0.0, 0.0, 10.0, 45.0, 270.0);
    let hover100 = FingerPose::hovering(0.0, 0.0, 100.0, 45.0, 270.0);
    let cfg = ExtractConfig::default();
    for seed in 0..5 {
        let t = sample_halo(&r, &touch, seed, seed, &cfg).unwrap().raw_strength;
        let h = sample_halo(&r, &hover10, seed, seed, &cfg).unwrap().raw_strength;
        assert!(t > h, "seed {seed}: touch {t} vs hover {h}");
    }
    let far = strength(&r, &hover100, 5);
    let near = strength(&r, &touch, 5);
    assert!(far < 0.05 * near, "hover 100 mm keeps {far} of {near}");
}

#[test]
fn steeper_finger_gives_stronger_halo() {
    let r = Renderer::new(common::scene("paper")).unwrap();
    let cfg = ExtractConfig::default();
    for seed in 0..5 {
        let a = sample_halo(&r, &FingerPose::touching(20.0, 10.0, 45.0, 270.0), seed, seed, &cfg).unwrap();
        let b = sample_halo(&r, &FingerPose::touching(20.0, 10.0, 20.0, 270.0), seed, seed, &cfg).unwrap();
        assert!(a.raw_strength > b.raw_strength, "seed {seed}: {} vs {}", a.raw_strength, b.raw_strength);
    }
}

#[test]
fn contact_reveals_many_more_halo_pixels() {
    let r = Renderer::new(common::scene("paper")).unwrap();
    let bg = r.ideal_background();
    let count = |f: &FingerPose, seed| {
        let out = r.render(Some(f), seed, 0, seed).unwrap();
        reveal(&subtract_background(&out.frame, &bg).unwrap(), DEFAULT_THRESHOLD).count(LABEL_HALO)
    };
    for seed in 0..3 {
        let touch = count(&FingerPose::touching(0.0, 0.0, 45.0, 270.0), seed);
        let far = count(&FingerPose::hovering(0.0, 0.0, 100.0, 45.0, 270.0), seed);
        assert!(touch >= 50 && touch > 10 * far.max(1), "seed {seed}: {touch} vs {far}");
    }
}

#[test]
fn line_count_falls_as_the_finger_rises() {
    let r = Renderer::new(common::scene("paper")).unwrap();
    let bg = r.ideal_background();
    let mut prev = f64::INFINITY;
    for hover in [10.0, 11.0, 12.0, 13.0, 14.0, 15.0] {
        let f = FingerPose::hovering(0.0, 0.0, hover, 45.0, 270.0);
        let n = 10;
        let mut total = 0.0;
        for seed in 0..n {
            let out = r.render(Some(&f), seed, 0, seed).unwrap();
            let map = reveal(&subtract_background(&out.frame, &bg).unwrap(), DEFAULT_THRESHOLD);
            total += count_line_pixels(&map, out.landmarks.as_ref().unwrap()).unwrap() as f64;
        }
        let mean = total / n as f64;
        assert!(mean <= prev, "{hover} mm: {mean} after {prev}");
        prev = mean;
    }
}
