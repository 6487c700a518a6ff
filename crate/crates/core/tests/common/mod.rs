#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap};

use mpm_core::metrics::Fraction;
use mpm_core::simulator::{simulate, OracleProvider, SimConfig};
use mpm_core::tracker::{TrackId, TrackPoint, TrackRegistry, TrackStatus, Trajectory};
use mpm_core::{Annotation, EncoderConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Encoder used by every clean scenario: sigma 6 with a cutoff of 2 sigma,
/// so the simulator's default separation of 26 px keeps supports disjoint.
pub fn encoder(width: usize, height: usize) -> EncoderConfig {
    let mut enc = EncoderConfig::new(width, height);
    enc.cutoff_radius = 12.0;
    enc
}

pub fn scenario(seed: u64, division_prob: f64) -> SimConfig {
    SimConfig {
        n_initial_cells: 1 + (seed % 30) as usize,
        division_prob,
        seed,
        ..Default::default()
    }
}

pub fn clean_oracle(sim: &SimConfig) -> (Vec<Annotation>, OracleProvider) {
    let anns = simulate(sim).expect("feasible scenario");
    let oracle = OracleProvider::new(&anns, encoder(sim.width, sim.height)).unwrap();
    (anns, oracle)
}

pub fn trajectory(id: u32, parent: Option<u32>, pts: &[(u32, f64, f64)]) -> Trajectory {
    Trajectory {
        id: TrackId(id),
        birth_frame: pts[0].0,
        points: pts.iter().map(|&(f, x, y)| TrackPoint::detected(f, x, y)).collect(),
        parent: parent.map(TrackId),
        status: TrackStatus::Closed,
    }
}

/// A random ground truth (at most 5 targets over at most 10 frames, with
/// occasional divisions) and a corrupted copy with identity switches,
/// fragmentations, missed points, clutter tracks and partial lineage.
pub fn random_instance(seed: u64) -> (TrackRegistry, TrackRegistry) {
    instance(seed, false)
}

/// Like [`random_instance`], but every target keeps to its own lane 100 px
/// from the others, so a point can only ever match points of its own target.
pub fn lane_instance(seed: u64) -> (TrackRegistry, TrackRegistry) {
    instance(seed, true)
}

fn instance(seed: u64, lanes: bool) -> (TrackRegistry, TrackRegistry) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_frames: u32 = rng.random_range(1..=10);
    let n_targets: u32 = rng.random_range(1..=5);

    let mut spans: BTreeMap<u32, (u32, u32, Option<u32>)> = BTreeMap::new();
    for id in 1..=n_targets {
        let mut parent = None;
        let mut birth = rng.random_range(0..n_frames.div_ceil(2));
        if id > 1 && rng.random_bool(0.5) {
            let m = rng.random_range(1..id);
            let (mb, me, _) = spans[&m];
            let kids = spans.values().filter(|s| s.2 == Some(m)).count();
            if me > mb && kids < 2 {
                // Cut the mother short if needed so the daughter starts right after.
                let cut = rng.random_range(mb..me);
                let keep = if kids == 1 { me } else { cut };
                spans.get_mut(&m).unwrap().1 = keep;
                birth = keep + 1;
                parent = Some(m);
            }
        }
        if birth >= n_frames {
            birth = n_frames - 1;
            parent = None;
        }
        let end = if rng.random_bool(0.5) {
            n_frames - 1
        } else {
            rng.random_range(birth..n_frames)
        };
        spans.insert(id, (birth, end, parent));
    }

    let mut truth_pts: BTreeMap<u32, Vec<(u32, f64, f64)>> = BTreeMap::new();
    for (&id, &(b, e, _)) in &spans {
        let (mut x, mut y): (f64, f64) = (rng.random_range(0.0..80.0), rng.random_range(0.0..80.0));
        for f in b..=e {
            if lanes {
                let lane = 100.0 * f64::from(id);
                truth_pts.entry(id).or_default().push((f, lane + (x - 40.0).clamp(-2.0, 2.0), 0.0));
            } else {
                truth_pts.entry(id).or_default().push((f, x, y));
            }
            x += rng.random_range(-6.0..6.0);
            y += rng.random_range(-6.0..6.0);
        }
    }
    let truth = TrackRegistry::from_trajectories(
        spans
            .iter()
            .map(|(&id, &(_, _, p))| trajectory(id, p, &truth_pts[&id])),
    )
    .unwrap();

    // (frame, target) -> (pred id, x, y)
    let mut owner: BTreeMap<(u32, u32), (u32, f64, f64)> = BTreeMap::new();
    for (&id, pts) in &truth_pts {
        for &(f, x, y) in pts {
            let jitter = |r: &mut ChaCha8Rng| r.random_range(-4.0..4.0);
            owner.insert((f, id), (100 + id, x + jitter(&mut rng), y + jitter(&mut rng)));
        }
    }
    for _ in 0..rng.random_range(0..3) {
        // Identity switch between two targets from a random frame on.
        let a = rng.random_range(1..=n_targets);
        let b = rng.random_range(1..=n_targets);
        let from = rng.random_range(0..n_frames);
        for f in from..n_frames {
            if let (Some(&pa), Some(&pb)) = (owner.get(&(f, a)), owner.get(&(f, b))) {
                owner.get_mut(&(f, a)).unwrap().0 = pb.0;
                owner.get_mut(&(f, b)).unwrap().0 = pa.0;
            }
        }
    }
    let mut next = 200;
    for _ in 0..rng.random_range(0..2) {
        let t = rng.random_range(1..=n_targets);
        let from = rng.random_range(0..n_frames);
        let old = owner.get(&(from, t)).map(|o| o.0);
        if let Some(old) = old {
            for v in owner.values_mut().filter(|v| v.0 == old) {
                v.0 = next;
            }
            for ((f, _), v) in owner.iter_mut() {
                if *f < from && v.0 == next {
                    v.0 = old;
                }
            }
            next += 1;
        }
    }
    let keys: Vec<_> = owner.keys().copied().collect();
    for k in keys {
        if rng.random_bool(0.15) {
            owner.remove(&k);
        }
    }

    let mut pred_pts: BTreeMap<u32, Vec<(u32, f64, f64)>> = BTreeMap::new();
    for (&(f, _), &(id, x, y)) in &owner {
        pred_pts.entry(id).or_default().push((f, x, y));
    }
    for _ in 0..rng.random_range(0..3) {
        let f = rng.random_range(0..n_frames);
        let far = if lanes { -1000.0 } else { 0.0 };
        pred_pts.insert(next, vec![(f, far + rng.random_range(0.0..80.0), rng.random_range(0.0..80.0))]);
        next += 1;
    }
    for pts in pred_pts.values_mut() {
        pts.sort_by_key(|p| p.0);
    }

    let mut parents: HashMap<u32, u32> = HashMap::new();
    for t in truth.trajectories() {
        let Some(m) = t.parent else { continue };
        let birth = t.birth_frame;
        let (Some(kd), Some(km)) = (owner.get(&(birth, t.id.0)), owner.get(&(birth - 1, m.0))) else {
            continue;
        };
        if kd.0 != km.0 && rng.random_bool(0.7) {
            parents.insert(kd.0, km.0);
        }
    }
    // Drop links that would make a track its own ancestor.
    let ids: Vec<u32> = parents.keys().copied().collect();
    for id in ids {
        let mut seen = vec![id];
        let mut cur = id;
        while let Some(&p) = parents.get(&cur) {
            if seen.contains(&p) {
                parents.remove(&id);
                break;
            }
            seen.push(p);
            cur = p;
        }
    }
    let pred = TrackRegistry::from_trajectories(
        pred_pts
            .iter()
            .map(|(&id, pts)| trajectory(id, parents.get(&id).copied(), pts)),
    )
    .unwrap();
    (truth, pred)
}

/// Literal scores: every partial matching of every frame is enumerated.
pub struct BruteScores {
    pub association: Fraction,
    pub effectiveness: Fraction,
    pub per_target: Vec<Fraction>,
}

fn best_matching(truth: &[(f64, f64)], pred: &[(f64, f64)], radius: f64) -> Vec<Option<usize>> {
    fn go(
        i: usize,
        truth: &[(f64, f64)],
        pred: &[(f64, f64)],
        radius: f64,
        used: &mut Vec<bool>,
        cur: &mut Vec<Option<usize>>,
        best: &mut (usize, f64, Vec<Option<usize>>),
    ) {
        if i == truth.len() {
            let n = cur.iter().filter(|c| c.is_some()).count();
            let cost: f64 = cur
                .iter()
                .enumerate()
                .filter_map(|(t, c)| c.map(|p| dist(truth[t], pred[p])))
                .sum();
            if n > best.0 || (n == best.0 && cost < best.1) {
                *best = (n, cost, cur.clone());
            }
            return;
        }
        cur.push(None);
        go(i + 1, truth, pred, radius, used, cur, best);
        cur.pop();
        for p in 0..pred.len() {
            if !used[p] && dist(truth[i], pred[p]) <= radius {
                used[p] = true;
                cur.push(Some(p));
                go(i + 1, truth, pred, radius, used, cur, best);
                cur.pop();
                used[p] = false;
            }
        }
    }
    let mut best = (0, f64::INFINITY, vec![None; truth.len()]);
    go(0, truth, pred, radius, &mut vec![false; pred.len()], &mut Vec::new(), &mut best);
    best.2
}

fn dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
}

pub fn brute_scores(truth: &TrackRegistry, pred: &TrackRegistry, radius: f64) -> BruteScores {
    type Points = Vec<(TrackId, (f64, f64))>;
    let mut frames: BTreeMap<u32, (Points, Points)> = BTreeMap::new();
    for t in truth.trajectories() {
        for p in &t.points {
            frames.entry(p.frame).or_default().0.push((t.id, (p.x, p.y)));
        }
    }
    for t in pred.trajectories() {
        for p in &t.points {
            frames.entry(p.frame).or_default().1.push((t.id, (p.x, p.y)));
        }
    }
    let mut track_of: HashMap<(TrackId, u32), TrackId> = HashMap::new();
    for (&f, (tr, pr)) in &frames {
        let tp: Vec<_> = tr.iter().map(|x| x.1).collect();
        let pp: Vec<_> = pr.iter().map(|x| x.1).collect();
        for (i, m) in best_matching(&tp, &pp, radius).into_iter().enumerate() {
            if let Some(j) = m {
                track_of.insert((tr[i].0, f), pr[j].0);
            }
        }
    }

    let (mut tp, mut total) = (0, 0);
    let mut per_target = Vec::new();
    let (mut covered, mut frames_total) = (0, 0);
    for t in truth.trajectories() {
        for f in t.points.iter().map(|p| p.frame) {
            if t.point_at(f + 1).is_none() {
                continue;
            }
            total += 1;
            match (track_of.get(&(t.id, f)), track_of.get(&(t.id, f + 1))) {
                (Some(a), Some(b)) if a == b => tp += 1,
                _ => {}
            }
        }
        if let Some(m) = t.parent.and_then(|m| truth.get(m)) {
            let birth = t.points[0].frame;
            if m.points.last().unwrap().frame + 1 == birth {
                total += 1;
                let km = track_of.get(&(m.id, birth - 1));
                let kd = track_of.get(&(t.id, birth));
                if let (Some(km), Some(kd)) = (km, kd) {
                    let d = pred.get(*kd).unwrap();
                    if d.parent == Some(*km) && d.birth_frame == birth {
                        tp += 1;
                    }
                }
            }
        }

        let mut best = 0;
        for cand in pred.trajectories() {
            let n = t
                .points
                .iter()
                .filter(|p| track_of.get(&(t.id, p.frame)) == Some(&cand.id))
                .count() as u64;
            best = best.max(n);
        }
        per_target.push(Fraction::new(best, t.points.len() as u64));
        covered += best;
        frames_total += t.points.len() as u64;
    }
    BruteScores {
        association: Fraction::new(tp, total),
        effectiveness: Fraction::new(covered, frames_total),
        per_target,
    }
}
