use proptest::prelude::*;

use qoe_forge::criteria::{auc, krcc, pearson, srcc};
use qoe_forge::distortion::{synthesize_stalls, AccelerationRate, StallTiming};
use qoe_forge::restructure::{detect_stalls, restructure, EntryFlag};
use qoe_forge::subjective::{compute_mos, screen_raters, zscore_normalize, RatingsMatrix};
use qoe_forge::timeline::sidecar::{parse_sidecar, render_sidecar};
use qoe_forge::timeline::{FrameTimeline, Rational, Resolution, Timebase};

fn framerate() -> impl Strategy<Value = Rational> {
    prop_oneof![
        Just(Rational::from_integer(20)),
        Just(Rational::from_integer(24)),
        Just(Rational::from_integer(25)),
        Just(Rational::from_integer(30)),
        Just(Rational::new(30000, 1001)),
    ]
}

fn timebase() -> impl Strategy<Value = Timebase> {
    prop_oneof![
        Just(Timebase::MILLIS),
        Just(Timebase::new(1, 90000).unwrap()),
    ]
}

fn ar() -> impl Strategy<Value = AccelerationRate> {
    prop::sample::select(AccelerationRate::levels().to_vec())
}

/// Up to three stalls with onsets on a 0.1 s grid inside a 10 s video.
fn stalls() -> impl Strategy<Value = Vec<StallTiming>> {
    prop::collection::btree_set(5i64..95, 1..=3).prop_flat_map(|onsets| {
        let n = onsets.len();
        prop::collection::vec(1i64..40, n).prop_map(move |durations| {
            onsets
                .iter()
                .zip(durations)
                .map(|(&o, d)| StallTiming {
                    onset: Rational::new(o, 10),
                    duration: Rational::new(d, 10),
                })
                .collect()
        })
    })
}

fn source(fps: Rational, tb: Timebase) -> FrameTimeline {
    let n = (fps * Rational::from_integer(10)).to_integer() as usize;
    FrameTimeline::uniform(n, fps, tb, Resolution::HD_1080).unwrap()
}

fn ratings() -> impl Strategy<Value = RatingsMatrix> {
    (3usize..8, 4usize..12).prop_flat_map(|(subjects, videos)| {
        prop::collection::vec(prop::collection::vec(1u8..=5, videos), subjects).prop_map(
            move |rows| {
                RatingsMatrix::from_rows(
                    (0..subjects).map(|s| format!("s{s}")).collect(),
                    (0..videos).map(|v| format!("v{v:02}")).collect(),
                    rows.into_iter()
                        .map(|r| r.into_iter().map(|x| Some(x as f64)).collect())
                        .collect(),
                )
                .unwrap()
            },
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn uniform_timelines_are_valid(n in 2usize..2000, fps in framerate(), tb in timebase()) {
        let t = FrameTimeline::uniform(n, fps, tb, Resolution::HD_720).unwrap();
        prop_assert!(t.validate().is_empty());
        prop_assert!(detect_stalls(&t).stalls.is_empty());
    }

    #[test]
    fn without_catch_up_output_is_source_plus_delay(
        fps in framerate(), tb in timebase(), stalls in stalls()
    ) {
        let src = source(fps, tb);
        let (out, plan) = synthesize_stalls(&src, &stalls, AccelerationRate::NONE).unwrap();
        for i in 0..src.frame_count() {
            prop_assert_eq!(out.pts()[i] - src.pts()[i], plan.cumulative_delays_ticks[i]);
        }
    }

    #[test]
    fn synthesized_pts_increase(
        fps in framerate(), tb in timebase(), stalls in stalls(), ar in ar()
    ) {
        let src = source(fps, tb);
        let (out, _) = synthesize_stalls(&src, &stalls, ar).unwrap();
        prop_assert!(out.pts().windows(2).all(|w| w[1] > w[0]));
        prop_assert_eq!(out.frame_count(), src.frame_count());
    }

    #[test]
    fn sidecar_round_trip(fps in framerate(), tb in timebase(), stalls in stalls(), ar in ar()) {
        let (out, _) = synthesize_stalls(&source(fps, tb), &stalls, ar).unwrap();
        let back = parse_sidecar(&render_sidecar(&out)).unwrap();
        prop_assert_eq!(back.pts(), out.pts());
        prop_assert_eq!(restructure(&back), restructure(&out));
    }

    #[test]
    fn schedule_keeps_frames_and_fills_gaps(fps in framerate(), stalls in stalls()) {
        let (out, _) = synthesize_stalls(&source(fps, Timebase::MILLIS), &stalls, AccelerationRate::NONE)
            .unwrap();
        let schedule = restructure(&out);
        let nominal = out.nominal_duration();
        let pts: Vec<i64> = schedule.render_pts().collect();
        prop_assert!(pts.windows(2).all(|w| w[1] > w[0] && w[1] - w[0] < 2 * nominal));
        let sources: Vec<usize> = schedule.source_indices().collect();
        prop_assert!(sources.windows(2).all(|w| w[1] == w[0] || w[1] == w[0] + 1));
        let originals: Vec<i64> = schedule
            .entries
            .iter()
            .filter(|e| e.flag != EntryFlag::StallRepeat)
            .map(|e| e.render_pts)
            .collect();
        prop_assert_eq!(originals.as_slice(), out.pts());
    }

    #[test]
    fn correlations_follow_joint_permutation(
        pairs in prop::collection::vec((-100.0f64..100.0, -100.0f64..100.0), 3..60),
        seed in any::<u64>(),
    ) {
        let (x, y): (Vec<f64>, Vec<f64>) = pairs.iter().copied().unzip();
        let mut order: Vec<usize> = (0..x.len()).collect();
        let mut state = seed | 1;
        for i in (1..order.len()).rev() {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            order.swap(i, (state % (i as u64 + 1)) as usize);
        }
        let px: Vec<f64> = order.iter().map(|&i| x[i]).collect();
        let py: Vec<f64> = order.iter().map(|&i| y[i]).collect();
        for (f, name) in [(pearson as fn(&[f64], &[f64]) -> f64, "pearson"), (srcc, "srcc"), (krcc, "krcc")] {
            let (a, b) = (f(&x, &y), f(&px, &py));
            prop_assert!((a - b).abs() < 1e-9 || (a.is_nan() && b.is_nan()), "{} {} {}", name, a, b);
        }
    }

    #[test]
    fn auc_is_antisymmetric(
        pos in prop::collection::vec(-5i32..5, 1..40),
        neg in prop::collection::vec(-5i32..5, 1..40),
    ) {
        let pos: Vec<f64> = pos.into_iter().map(f64::from).collect();
        let neg: Vec<f64> = neg.into_iter().map(f64::from).collect();
        let forward = auc(&pos, &neg).unwrap();
        let backward = auc(&neg, &pos).unwrap();
        prop_assert!((forward + backward - 1.0).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&forward));
    }

    #[test]
    fn zscores_are_standardized(m in ratings()) {
        let z = zscore_normalize(&m);
        for row in &z.z {
            let v: Vec<f64> = row.iter().flatten().copied().collect();
            let n = v.len() as f64;
            let mean = v.iter().sum::<f64>() / n;
            let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
            prop_assert!(mean.abs() < 1e-9);
            prop_assert!((var - 1.0).abs() < 1e-9);
        }
        prop_assert_eq!(z.z.len() + z.degenerate.len(), m.subjects().len());
    }

    #[test]
    fn mos_ignores_per_subject_affine_scaling(
        m in ratings(),
        gains in prop::collection::vec(0.1f64..=1.0, 8),
    ) {
        let rows: Vec<Vec<Option<f64>>> = (0..m.subjects().len())
            .map(|s| m.row(s).iter().map(|v| v.map(|x| 1.0 + gains[s] * (x - 1.0))).collect())
            .collect();
        let scaled = RatingsMatrix::from_rows(m.subjects().to_vec(), m.videos().to_vec(), rows).unwrap();
        let (a, b) = (compute_mos(&m), compute_mos(&scaled));
        prop_assert_eq!(a.rows.len(), b.rows.len());
        for (ra, rb) in a.rows.iter().zip(&b.rows) {
            prop_assert!((ra.mos - rb.mos).abs() < 1e-9);
        }
    }

    #[test]
    fn screening_everyone_keeps_everyone(m in ratings()) {
        let mut kept = screen_raters(&m, m.subjects().len()).unwrap();
        kept.sort();
        prop_assert_eq!(kept, m.subjects().to_vec());
    }
}
