mod common;

use std::collections::HashMap;

use mpm_core::metrics::{association_accuracy, evaluate_tracking, DetectionMatchConfig};
use mpm_core::tracker::{TrackId, TrackRegistry, Trajectory};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{lane_instance, random_instance, trajectory};

fn relabel(reg: &TrackRegistry, seed: u64) -> TrackRegistry {
    let mut ids: Vec<u32> = reg.trajectories().map(|t| t.id.0).collect();
    let mut shuffled = ids.iter().map(|i| i + 1000).collect::<Vec<_>>();
    shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let map: HashMap<u32, u32> = ids.drain(..).zip(shuffled).collect();
    TrackRegistry::from_trajectories(reg.trajectories().map(|t| Trajectory {
        id: TrackId(map[&t.id.0]),
        parent: t.parent.map(|p| TrackId(map[&p.0])),
        ..t.clone()
    }))
    .unwrap()
}

fn without(reg: &TrackRegistry, gone: TrackId) -> TrackRegistry {
    TrackRegistry::from_trajectories(reg.trajectories().filter(|t| t.id != gone).map(|t| Trajectory {
        parent: t.parent.filter(|p| *p != gone),
        ..t.clone()
    }))
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn scores_are_bounded_and_label_free(seed in any::<u64>()) {
        let (truth, pred) = random_instance(seed);
        let m = DetectionMatchConfig::default();
        let s = evaluate_tracking(&truth, &pred, &m);
        for v in [s.association_accuracy, s.target_effectiveness, s.effectiveness.macro_average] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
        let r = evaluate_tracking(&truth, &relabel(&pred, seed), &m);
        prop_assert_eq!(r.association, s.association);
        prop_assert_eq!(r.effectiveness.total, s.effectiveness.total);
        let perfect = evaluate_tracking(&truth, &truth, &m);
        prop_assert_eq!(perfect.association_accuracy, 1.0);
        prop_assert_eq!(perfect.target_effectiveness, 1.0);
    }

    #[test]
    fn deleting_a_track_never_adds_links_when_targets_are_apart(seed in any::<u64>()) {
        let (truth, pred) = lane_instance(seed);
        let m = DetectionMatchConfig::default();
        let full = association_accuracy(&truth, &pred, &m);
        for t in pred.trajectories() {
            let fewer = association_accuracy(&truth, &without(&pred, t.id), &m);
            prop_assert!(fewer.numerator <= full.numerator);
            prop_assert_eq!(fewer.denominator, full.denominator);
        }
    }
}

#[test]
fn deleting_a_track_can_free_a_better_link() {
    // A one-frame track sits closer to the target than the long track, so it
    // wins frame 0 and splits the target. Without it the long track covers both
    // frames and the link counts.
    let truth = TrackRegistry::from_trajectories([trajectory(1, None, &[(0, 0.0, 0.0), (1, 0.0, 0.0)])]).unwrap();
    let pred = TrackRegistry::from_trajectories([
        trajectory(1, None, &[(0, 1.0, 0.0)]),
        trajectory(2, None, &[(0, 3.0, 0.0), (1, 0.0, 0.0)]),
    ])
    .unwrap();
    let m = DetectionMatchConfig::default();
    assert_eq!(association_accuracy(&truth, &pred, &m).numerator, 0);
    assert_eq!(association_accuracy(&truth, &without(&pred, TrackId(1)), &m).numerator, 1);
}
