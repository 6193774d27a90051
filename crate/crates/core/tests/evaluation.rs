use halotouch::evalkit::{
    hover_mae, match_events, pressure_mae, spatial_accuracy, typing_metrics, EventPoint, KeyInput, Keystroke, TypingTrial,
};
use halotouch::mpisim::scripts::{grid16_targets, HOVER_TARGETS, PRESSURE_TARGETS};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn keys(text: &str, start_ms: f64, step_ms: f64) -> Vec<Keystroke> {
    // '<' stands for backspace in these fixtures
    text.chars()
        .enumerate()
        .map(|(i, c)| Keystroke {
            timestamp_ms: start_ms + i as f64 * step_ms,
            key: if c == '<' { KeyInput::Backspace } else { KeyInput::Char(c) },
        })
        .collect()
}

#[test]
fn gaussian_scatter_gives_rayleigh_mean_error() {
    let sigma = 2.0;
    let noise = Normal::new(0.0, sigma).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let targets = grid16_targets();
    let pairs: Vec<([f64; 2], [f64; 2])> = (0..4000)
        .map(|i| {
            let t = targets[i % 16];
            ([t[0] + 3.0 + noise.sample(&mut rng), t[1] - 1.0 + noise.sample(&mut rng)], t)
        })
        .collect();
    let r = spatial_accuracy(&pairs).unwrap();
    let rayleigh = sigma * (std::f64::consts::PI / 2.0).sqrt();
    assert!((r.mean_euclidean_error - rayleigh).abs() <= 0.1 * rayleigh, "{} vs {rayleigh}", r.mean_euclidean_error);
    assert!((r.global_offset[0] - 3.0).abs() < 0.15 && (r.global_offset[1] + 1.0).abs() < 0.15);
    assert_eq!(r.ellipses.len(), 16);
    // per-target 95% ellipses of an isotropic cloud: both axes near sigma * sqrt(5.991)
    for e in &r.ellipses {
        let want = sigma * 5.991f64.sqrt();
        assert!(e.axes.iter().all(|a| (a - want).abs() < 0.25 * want), "{:?}", e.axes);
    }
}

#[test]
fn hand_counted_error_rates() {
    let trials = vec![
        TypingTrial::from_keystrokes("hello world", keys("helx<o world", 0.0, 500.0)),
        TypingTrial::from_keystrokes("good day", keys("good dya", 1000.0, 400.0)),
    ];
    assert_eq!(trials[0].input, "helo world");
    let r = typing_metrics(&trials).unwrap();
    let rows = &r.sentences;
    assert_eq!((rows[0].uncorrected_errors, rows[0].corrected_errors, rows[0].total_chars), (1, 1, 11));
    assert_eq!((rows[1].uncorrected_errors, rows[1].corrected_errors, rows[1].total_chars), (2, 0, 8));
    assert_eq!(r.uer, 3.0 / 19.0);
    assert_eq!(r.cer, 1.0 / 19.0);
    // word-aligned accuracy: helo/hello 1 of 5, dya/day 2 of 3
    assert!((rows[0].accuracy - 0.9).abs() < 1e-15);
    assert!((rows[1].accuracy - 5.0 / 7.0).abs() < 1e-15);
    // 10 chars over 5.5 s; 8 chars over 2.8 s
    assert!((rows[0].wpm - 2.0 / (5.5 / 60.0)).abs() < 1e-9);
    assert!((rows[1].wpm - 1.6 / (2.8 / 60.0)).abs() < 1e-9);
}

#[test]
fn thirty_wpm_at_ninety_percent_is_twenty_seven() {
    // 25 characters in 10 s is 30 WPM; two wrong letters in 20 is 0.9
    let mut ks = keys("abxd abcd abc abc abx abc", 0.0, 10_000.0 / 24.0);
    ks.last_mut().unwrap().timestamp_ms = 10_000.0;
    let r = typing_metrics(&[TypingTrial::from_keystrokes("abcd abcd abc abc abc abc", ks)]).unwrap();
    assert_eq!(r.wpm, 30.0);
    assert_eq!(r.accuracy, 0.9);
    assert_eq!(r.awpm, 27.0);
}

fn random_trial(rng: &mut ChaCha8Rng) -> TypingTrial {
    let words = rng.gen_range(1..8);
    let reference: Vec<String> =
        (0..words).map(|_| (0..rng.gen_range(1..8)).map(|_| rng.gen_range(b'a'..=b'z') as char).collect()).collect();
    let reference = reference.join(" ");
    let mut t = rng.gen_range(0.0..5000.0);
    let mut ks = Vec::new();
    for c in reference.chars() {
        if rng.gen_bool(0.1) {
            ks.push(Keystroke { timestamp_ms: t, key: KeyInput::Char('q') });
            t += rng.gen_range(50.0..600.0);
            if rng.gen_bool(0.5) {
                ks.push(Keystroke { timestamp_ms: t, key: KeyInput::Backspace });
                t += rng.gen_range(50.0..600.0);
            }
        }
        if !rng.gen_bool(0.05) {
            ks.push(Keystroke { timestamp_ms: t, key: KeyInput::Char(c) });
            t += rng.gen_range(50.0..600.0);
        }
    }
    while ks.len() < 2 {
        ks.push(Keystroke { timestamp_ms: t, key: KeyInput::Char('z') });
        t += 100.0;
    }
    TypingTrial::from_keystrokes(reference, ks)
}

#[test]
fn awpm_is_wpm_times_accuracy_on_random_logs() {
    let mut rng = ChaCha8Rng::seed_from_u64(1000);
    for _ in 0..1000 {
        let trials: Vec<TypingTrial> = (0..rng.gen_range(1..5)).map(|_| random_trial(&mut rng)).collect();
        let r = typing_metrics(&trials).unwrap();
        assert_eq!(r.awpm, r.wpm * r.accuracy);
        for (row, t) in r.sentences.iter().zip(&trials) {
            assert_eq!(row.awpm, row.wpm * row.accuracy);
            let span = t.keystrokes.last().unwrap().timestamp_ms - t.keystrokes[0].timestamp_ms;
            let wpm = t.input.chars().count() as f64 / 5.0 / (span / 60_000.0);
            assert!((row.wpm - wpm).abs() <= 1e-9 * wpm);
            assert!((0.0..=1.0).contains(&row.accuracy));
        }
        assert!(r.uer >= 0.0 && r.cer >= 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn constant_bias_leaves_zero_mean_residual(
        scatter in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 2..60),
        bx in -20.0f64..20.0, by in -20.0f64..20.0,
    ) {
        let targets = grid16_targets();
        let pairs: Vec<_> = scatter
            .iter()
            .enumerate()
            .map(|(i, (ex, ey))| {
                let t = targets[i % 16];
                ([t[0] + ex + bx, t[1] + ey + by], t)
            })
            .collect();
        let r = spatial_accuracy(&pairs).unwrap();
        let n = pairs.len() as f64;
        let ox = pairs.iter().map(|(d, t)| d[0] - t[0]).sum::<f64>() / n;
        let oy = pairs.iter().map(|(d, t)| d[1] - t[1]).sum::<f64>() / n;
        prop_assert!((r.global_offset[0] - ox).abs() < 1e-9 && (r.global_offset[1] - oy).abs() < 1e-9);
        prop_assert!(r.mean_residual[0].abs() < 1e-12 && r.mean_residual[1].abs() < 1e-12);
        prop_assert!(r.points_used + r.outliers_removed == pairs.len());
    }

    #[test]
    fn pure_shift_is_removed_exactly(n in 2usize..64, shift in -40i32..40) {
        // targets and integer shifts are exact in binary, so the residual is exactly zero
        let targets = grid16_targets();
        let pairs: Vec<_> = (0..n).map(|i| {
            let t = targets[i % 16];
            ([t[0] + shift as f64, t[1]], t)
        }).collect();
        let r = spatial_accuracy(&pairs).unwrap();
        prop_assert_eq!(r.global_offset, [shift as f64, 0.0]);
        prop_assert_eq!(r.mean_residual, [0.0, 0.0]);
        prop_assert_eq!(r.mean_euclidean_error, 0.0);
    }

    #[test]
    fn mae_of_a_constant_bias_is_the_bias(
        idx in prop::collection::vec(0usize..5, 1..200), hb in -5.0f64..5.0, pb in -0.5f64..0.5,
    ) {
        let hover_truth: Vec<f64> = idx.iter().map(|&i| HOVER_TARGETS[i]).collect();
        let hover_pred: Vec<f64> = hover_truth.iter().map(|t| t + hb).collect();
        let r = hover_mae(&hover_pred, &hover_truth).unwrap();
        prop_assert!((r.mae - hb.abs()).abs() < 1e-9);
        prop_assert!(r.per_target.iter().all(|t| (t.mae - hb.abs()).abs() < 1e-9));
        prop_assert_eq!(r.per_target.iter().map(|t| t.samples).sum::<usize>(), idx.len());

        let p_truth: Vec<f64> = idx.iter().map(|&i| PRESSURE_TARGETS[i]).collect();
        let p_pred: Vec<f64> = p_truth.iter().map(|t| t + pb).collect();
        let r = pressure_mae(&p_pred, &p_truth).unwrap();
        prop_assert!((r.mae - 100.0 * pb.abs()).abs() < 1e-7);
    }

    #[test]
    fn matching_is_symmetric_in_counts(
        det in prop::collection::vec(0.0f64..10_000.0, 0..30),
        truth in prop::collection::vec(0.0f64..10_000.0, 0..30),
        window in 1.0f64..500.0,
    ) {
        let pts = |v: &[f64]| v.iter().map(|&t| EventPoint { time_ms: t, x: 0.0, y: 0.0 }).collect::<Vec<_>>();
        let r = match_events(&pts(&det), &pts(&truth), window);
        prop_assert_eq!(r.true_positives + r.false_positives, det.len());
        prop_assert_eq!(r.true_positives + r.false_negatives, truth.len());
        for (d, t) in &r.pairs {
            prop_assert!((det[*d] - truth[*t]).abs() <= window);
        }
        prop_assert!((0.0..=1.0).contains(&r.f1));
    }
}
