//! Detection and tracking scores.
//!
//! Ground truth and predictions are both [`TrackRegistry`] values; ground
//! truth usually comes from [`TrackRegistry::from_annotations`]. In every
//! frame, targets are matched one-to-one to predicted points within
//! `match_radius`, and the tracking scores are computed on top of that
//! per-frame assignment:
//!
//! * association accuracy: ground-truth frame-to-frame links (including
//!   mother to daughter) whose endpoints land on the same predicted track,
//!   or on a predicted mother/daughter pair for divisions;
//! * target effectiveness: the share of a target's frames covered by the
//!   single predicted track that covers it most.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::{fmt, ops};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tracker::{TrackId, TrackRegistry};

pub mod assignment;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AssignmentRule {
    /// Maximum matching with minimum total distance.
    #[default]
    Optimal,
    /// Closest pairs first.
    Greedy,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectionMatchConfig {
    pub match_radius: f64,
    pub rule: AssignmentRule,
}

impl Default for DetectionMatchConfig {
    fn default() -> Self {
        DetectionMatchConfig {
            match_radius: 10.0,
            rule: AssignmentRule::Optimal,
        }
    }
}

impl DetectionMatchConfig {
    pub fn with_radius(match_radius: f64) -> Self {
        DetectionMatchConfig {
            match_radius,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.match_radius > 0.0 && self.match_radius.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "match_radius must be positive, got {}",
                self.match_radius
            )));
        }
        Ok(())
    }
}

/// An exact ratio. `0/0` reads as 1.0: nothing to get right, nothing wrong.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Fraction {
    pub numerator: u64,
    pub denominator: u64,
}

impl Fraction {
    pub fn new(numerator: u64, denominator: u64) -> Self {
        Fraction {
            numerator,
            denominator,
        }
    }

    pub fn value(&self) -> f64 {
        if self.denominator == 0 {
            1.0
        } else {
            self.numerator as f64 / self.denominator as f64
        }
    }
}

/// Micro-average accumulation.
impl ops::Add for Fraction {
    type Output = Fraction;

    fn add(self, other: Fraction) -> Fraction {
        Fraction::new(
            self.numerator + other.numerator,
            self.denominator + other.denominator,
        )
    }
}

impl fmt::Display for Fraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.numerator, self.denominator)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DetectionCounts {
    pub true_positives: u64,
    pub false_positives: u64,
    pub false_negatives: u64,
}

impl DetectionCounts {
    /// 1.0 when nothing was predicted.
    pub fn precision(&self) -> f64 {
        Fraction::new(self.true_positives, self.true_positives + self.false_positives).value()
    }

    /// 1.0 when there is nothing to find.
    pub fn recall(&self) -> f64 {
        Fraction::new(self.true_positives, self.true_positives + self.false_negatives).value()
    }

    pub fn f1(&self) -> f64 {
        let (p, r) = (self.precision(), self.recall());
        if p == 0.0 || r == 0.0 {
            0.0
        } else {
            2.0 * p * r / (p + r)
        }
    }
}

impl ops::Add for DetectionCounts {
    type Output = DetectionCounts;

    fn add(self, o: DetectionCounts) -> DetectionCounts {
        DetectionCounts {
            true_positives: self.true_positives + o.true_positives,
            false_positives: self.false_positives + o.false_positives,
            false_negatives: self.false_negatives + o.false_negatives,
        }
    }
}

fn distance(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).hypot(a.1 - b.1)
}

/// One-to-one matching of `truth` to `pred` within the match radius.
/// Returns `(truth index, pred index)` pairs sorted by truth index.
pub fn match_points(truth: &[(f64, f64)], pred: &[(f64, f64)], cfg: &DetectionMatchConfig) -> Vec<(usize, usize)> {
    let r = cfg.match_radius;
    let cost = |i: usize, j: usize| {
        let d = distance(truth[i], pred[j]);
        (d <= r).then_some(d)
    };
    let mut pairs = match cfg.rule {
        AssignmentRule::Optimal => assignment::solve(truth.len(), pred.len(), cost),
        AssignmentRule::Greedy => {
            let mut cands: Vec<(f64, usize, usize)> = (0..truth.len())
                .flat_map(|i| (0..pred.len()).filter_map(move |j| cost(i, j).map(|d| (d, i, j))))
                .collect();
            cands.sort_by(|a, b| a.0.total_cmp(&b.0).then((a.1, a.2).cmp(&(b.1, b.2))));
            let mut used_t = vec![false; truth.len()];
            let mut used_p = vec![false; pred.len()];
            let mut out = vec![];
            for (_, i, j) in cands {
                if !used_t[i] && !used_p[j] {
                    used_t[i] = true;
                    used_p[j] = true;
                    out.push((i, j));
                }
            }
            out
        }
    };
    pairs.sort();
    pairs
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionScore {
    pub counts: DetectionCounts,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl From<DetectionCounts> for DetectionScore {
    fn from(counts: DetectionCounts) -> Self {
        DetectionScore {
            counts,
            precision: counts.precision(),
            recall: counts.recall(),
            f1: counts.f1(),
        }
    }
}

pub fn match_detections(truth: &[(f64, f64)], pred: &[(f64, f64)], cfg: &DetectionMatchConfig) -> DetectionScore {
    let tp = match_points(truth, pred, cfg).len() as u64;
    DetectionCounts {
        true_positives: tp,
        false_positives: pred.len() as u64 - tp,
        false_negatives: truth.len() as u64 - tp,
    }
    .into()
}

type FramePoints = BTreeMap<u32, Vec<(TrackId, (f64, f64))>>;

fn points_by_frame(reg: &TrackRegistry, detected_only: bool) -> FramePoints {
    let mut out: FramePoints = BTreeMap::new();
    for t in reg.trajectories() {
        for p in &t.points {
            if detected_only && p.interpolated {
                continue;
            }
            out.entry(p.frame).or_default().push((t.id, (p.x, p.y)));
        }
    }
    out
}

/// Detection scores summed over all frames. Interpolated predicted points
/// are not detections and are ignored.
pub fn evaluate_detection(truth: &TrackRegistry, pred: &TrackRegistry, cfg: &DetectionMatchConfig) -> DetectionScore {
    let t = points_by_frame(truth, false);
    let p = points_by_frame(pred, true);
    let frames: BTreeSet<u32> = t.keys().chain(p.keys()).copied().collect();
    let empty = Vec::new();
    let mut total = DetectionCounts::default();
    for f in frames {
        let tp: Vec<_> = t.get(&f).unwrap_or(&empty).iter().map(|x| x.1).collect();
        let pp: Vec<_> = p.get(&f).unwrap_or(&empty).iter().map(|x| x.1).collect();
        total = total + match_detections(&tp, &pp, cfg).counts;
    }
    total.into()
}

/// Predicted track assigned to each `(target, frame)`.
pub fn frame_assignment(
    truth: &TrackRegistry,
    pred: &TrackRegistry,
    cfg: &DetectionMatchConfig,
) -> HashMap<(TrackId, u32), TrackId> {
    let t = points_by_frame(truth, false);
    let p = points_by_frame(pred, false);
    let mut out = HashMap::new();
    for (f, targets) in &t {
        let Some(tracks) = p.get(f) else { continue };
        let tp: Vec<_> = targets.iter().map(|x| x.1).collect();
        let pp: Vec<_> = tracks.iter().map(|x| x.1).collect();
        for (i, j) in match_points(&tp, &pp, cfg) {
            out.insert((targets[i].0, *f), tracks[j].0);
        }
    }
    out
}

fn association_from(truth: &TrackRegistry, pred: &TrackRegistry, a: &HashMap<(TrackId, u32), TrackId>) -> Fraction {
    let mut total = Fraction::default();
    for target in truth.trajectories() {
        for w in target.points.windows(2) {
            if w[1].frame != w[0].frame + 1 {
                continue;
            }
            total.denominator += 1;
            let from = a.get(&(target.id, w[0].frame));
            let to = a.get(&(target.id, w[1].frame));
            if from.is_some() && from == to {
                total.numerator += 1;
            }
        }
        let Some(mother) = target.parent.and_then(|m| truth.get(m)) else { continue };
        let (Some(m_last), Some(d_first)) = (mother.last(), target.points.first()) else {
            continue;
        };
        if d_first.frame != m_last.frame + 1 {
            continue;
        }
        total.denominator += 1;
        let km = a.get(&(mother.id, m_last.frame));
        let kd = a.get(&(target.id, d_first.frame));
        if let (Some(&km), Some(&kd)) = (km, kd) {
            let linked = pred
                .get(kd)
                .is_some_and(|t| t.parent == Some(km) && t.birth_frame == d_first.frame);
            if linked {
                total.numerator += 1;
            }
        }
    }
    total
}

/// True-positive associations over ground-truth associations. An identity
/// switch between two targets breaks both of their links, costing two.
pub fn association_accuracy(truth: &TrackRegistry, pred: &TrackRegistry, cfg: &DetectionMatchConfig) -> Fraction {
    association_from(truth, pred, &frame_assignment(truth, pred, cfg))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetEffectiveness {
    /// Summed over all targets (micro average).
    pub total: Fraction,
    /// Mean of the per-target ratios.
    pub macro_average: f64,
    /// `(target, covered frames / target frames)`.
    pub per_target: Vec<(TrackId, Fraction)>,
}

fn effectiveness_from(truth: &TrackRegistry, a: &HashMap<(TrackId, u32), TrackId>) -> TargetEffectiveness {
    let mut per_target = Vec::new();
    let mut total = Fraction::default();
    for target in truth.trajectories() {
        let mut counts: BTreeMap<TrackId, u64> = BTreeMap::new();
        for p in &target.points {
            if let Some(&k) = a.get(&(target.id, p.frame)) {
                *counts.entry(k).or_default() += 1;
            }
        }
        let best = counts.values().copied().max().unwrap_or(0);
        let frac = Fraction::new(best, target.points.len() as u64);
        total = total + frac;
        per_target.push((target.id, frac));
    }
    let macro_average = if per_target.is_empty() {
        1.0
    } else {
        per_target.iter().map(|(_, f)| f.value()).sum::<f64>() / per_target.len() as f64
    };
    TargetEffectiveness {
        total,
        macro_average,
        per_target,
    }
}

/// Each target is given the predicted track covering most of its frames;
/// effectiveness is the covered share of the target's frames.
pub fn target_effectiveness(
    truth: &TrackRegistry,
    pred: &TrackRegistry,
    cfg: &DetectionMatchConfig,
) -> TargetEffectiveness {
    effectiveness_from(truth, &frame_assignment(truth, pred, cfg))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackingScore {
    pub association_accuracy: f64,
    pub target_effectiveness: f64,
    pub association: Fraction,
    pub effectiveness: TargetEffectiveness,
}

pub fn evaluate_tracking(truth: &TrackRegistry, pred: &TrackRegistry, cfg: &DetectionMatchConfig) -> TrackingScore {
    let a = frame_assignment(truth, pred, cfg);
    let association = association_from(truth, pred, &a);
    let effectiveness = effectiveness_from(truth, &a);
    TrackingScore {
        association_accuracy: association.value(),
        target_effectiveness: effectiveness.total.value(),
        association,
        effectiveness,
    }
}
