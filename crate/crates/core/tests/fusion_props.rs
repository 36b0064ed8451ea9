use proptest::prelude::*;
use rgbd_gmm::engine::WorkerPool;
use rgbd_gmm::{ForegroundMask, FusionState, PixelLabel};

fn reference(initial: u8, limit: i32, seq: &[(u8, u8)]) -> Vec<(u8, i32)> {
    let (mut out, mut cpt) = (initial, 0i32);
    seq.iter()
        .map(|&(r, d)| {
            if r == d {
                (out, cpt) = (d, 0);
            } else if cpt == limit {
                (out, cpt) = (r, 0);
            } else if cpt == -limit {
                (out, cpt) = (d, 0);
            } else if out == r {
                cpt += 1;
            } else {
                cpt -= 1;
            }
            (out, cpt)
        })
        .collect()
}

proptest! {
    #[test]
    fn frame_fusion_matches_reference_per_pixel(
        w in 1usize..9,
        h in 1usize..9,
        limit in 1i8..6,
        fg in any::<bool>(),
        workers in 1usize..4,
        seed in proptest::collection::vec(any::<u64>(), 1..30),
    ) {
        let n = w * h;
        let frames: Vec<(Vec<u8>, Vec<u8>)> = seed
            .iter()
            .map(|s| {
                let r = (0..n).map(|i| ((s >> (i % 64)) & 1) as u8).collect();
                let d = (0..n).map(|i| ((s.rotate_left(17) >> (i % 64)) & 1) as u8).collect();
                (r, d)
            })
            .collect();
        let initial = if fg { PixelLabel::Foreground } else { PixelLabel::Background };
        let pool = WorkerPool::new(workers).unwrap();
        let mut state = FusionState::reset(w, h, initial, limit).unwrap();
        let mut outs = Vec::new();
        for (r, d) in &frames {
            let r = ForegroundMask::from_bits(w, h, r.clone()).unwrap();
            let d = ForegroundMask::from_bits(w, h, d.clone()).unwrap();
            outs.push((state.fuse_step_with(&r, &d, &pool).unwrap(), state.counters().to_vec()));
        }
        for i in 0..n {
            let seq: Vec<(u8, u8)> = frames.iter().map(|(r, d)| (r[i], d[i])).collect();
            for (t, (out, cpt)) in reference(initial.bit(), limit as i32, &seq).into_iter().enumerate() {
                prop_assert_eq!(outs[t].0.bits()[i], out);
                prop_assert_eq!(outs[t].1[i] as i32, cpt);
            }
        }
    }

    #[test]
    fn counter_stays_within_limit(limit in 1i8..6, seq in proptest::collection::vec((0u8..2, 0u8..2), 1..60)) {
        let mut state = FusionState::reset(1, 1, PixelLabel::Background, limit).unwrap();
        for (r, d) in seq {
            let px = |v| ForegroundMask::from_bits(1, 1, vec![v]).unwrap();
            state.fuse_step(&px(r), &px(d)).unwrap();
            prop_assert!(state.counters()[0].abs() <= limit);
        }
    }
}
