use std::collections::BTreeSet;
use std::fs;

use mpm_core::io::{self, FileProvider};
use mpm_core::metrics::{evaluate_detection, evaluate_tracking, AssignmentRule, Fraction};
use mpm_core::simulator::{degrade, simulate, OracleProvider};
use mpm_core::tracker::track_sequence;
use mpm_core::{MpmProvider, TrackRegistry};
use rayon::prelude::*;
use serde_json::json;

use crate::args::{EncodeArgs, EvalArgs, RenderArgs, SimulateArgs, TrackArgs};
use crate::error::{CliError, Context, Result};
use crate::render::render;
use crate::settings::{parent_dir, Settings};

pub fn encode(mut s: Settings, a: &EncodeArgs) -> Result<()> {
    s.apply_grid(&a.grid);
    s.apply_encoder(&a.encoder);
    if let Some(g) = a.gap {
        s.encode.gap = g;
        s.encode.max_gap = None;
    }
    if a.max_gap.is_some() {
        s.encode.max_gap = a.max_gap;
    }
    let gaps: Vec<u32> = match s.encode.max_gap {
        Some(m) => (1..=m).collect(),
        None => vec![s.encode.gap],
    };
    if gaps.is_empty() || gaps.contains(&0) {
        return Err(CliError::Usage("gaps must be at least 1".into()));
    }

    let anns = io::read_annotations_file(&a.annotations).at(&a.annotations)?;
    let oracle = OracleProvider::new(&anns, s.encoder_config()).at(&a.annotations)?;
    fs::create_dir_all(&a.out).at(&a.out)?;
    s.echo(&a.out, "encode")?;

    let pairs: Vec<(u32, u32)> = match oracle.frame_range() {
        Some((first, last)) => gaps
            .iter()
            .flat_map(|&g| (first.saturating_add(g)..=last).map(move |later| (later - g, later)))
            .collect(),
        None => Vec::new(),
    };
    pairs.par_iter().try_for_each(|&(earlier, later)| {
        let field = oracle.field(earlier, later)?;
        let path = a.out.join(io::mpm_file_name(earlier, later));
        io::write_mpm_file(&path, &field).at(&path)
    })?;
    println!("wrote {} fields to {}", pairs.len(), a.out.display());
    Ok(())
}

fn run_tracker<P: MpmProvider>(provider: P, range: Option<(u32, u32)>, a: &TrackArgs, s: &Settings) -> Result<TrackRegistry> {
    let (first, last) = match (range, a.first, a.last) {
        (_, Some(f), Some(l)) => (f, l),
        (Some((f, l)), first, last) => (first.unwrap_or(f), last.unwrap_or(l)),
        (None, _, _) => return Ok(TrackRegistry::new()),
    };
    Ok(track_sequence(provider, first, last, &s.tracker)?)
}

pub fn track(mut s: Settings, a: &TrackArgs) -> Result<()> {
    s.apply_grid(&a.grid);
    s.apply_encoder(&a.encoder);
    s.apply_tracker(&a.tracker);
    s.apply_noise(&a.noise);
    s.tracker.validate()?;

    let registry = if let Some(path) = &a.oracle {
        let anns = io::read_annotations_file(path).at(path)?;
        let oracle = OracleProvider::new(&anns, s.encoder_config()).at(path)?;
        let range = oracle.frame_range();
        let provider = degrade(oracle, s.noise.clone())?;
        run_tracker(&provider, range, a, &s)?
    } else {
        let dir = a.fields.as_ref().expect("clap requires a provider");
        if a.noise.any() {
            return Err(CliError::Usage("noise flags apply to --oracle only".into()));
        }
        let provider = FileProvider::open(dir).at(dir)?;
        let range = provider.frame_range();
        run_tracker(&provider, range, a, &s).map_err(|e| match e {
            CliError::Core(source) => CliError::At {
                path: dir.clone(),
                source,
            },
            other => other,
        })?
    };
    registry.check_invariants()?;

    let dir = parent_dir(&a.out);
    fs::create_dir_all(dir).at(dir)?;
    io::write_tracks_file(&a.out, &registry).at(&a.out)?;
    s.echo(dir, "track")?;
    let d = registry.diagnostics;
    println!(
        "{} tracks, {} divisions, {} recoveries, {} excess division claims",
        registry.len(),
        registry.divisions().len(),
        d.recoveries,
        d.excess_division_claims
    );
    Ok(())
}

fn frames(reg: &TrackRegistry) -> BTreeSet<u32> {
    reg.trajectories()
        .flat_map(|t| t.points.iter().map(|p| p.frame))
        .collect()
}

fn rational(f: Fraction) -> serde_json::Value {
    json!({ "numerator": f.numerator, "denominator": f.denominator, "value": f.value() })
}

pub fn eval(mut s: Settings, a: &EvalArgs) -> Result<()> {
    if let Some(r) = a.radius {
        s.eval.match_radius = r;
    }
    if a.greedy {
        s.eval.rule = AssignmentRule::Greedy;
    }
    s.eval.validate()?;
    let anns = io::read_annotations_file(&a.truth).at(&a.truth)?;
    let truth = TrackRegistry::from_annotations(&anns).at(&a.truth)?;
    let pred = io::read_tracks_file(&a.pred).at(&a.pred)?;

    let (tf, pf) = (frames(&truth), frames(&pred));
    if !tf.is_empty() && !pf.is_empty() && tf.is_disjoint(&pf) {
        eprintln!("warning: truth and prediction share no frames; scores are zero");
    }

    let det = evaluate_detection(&truth, &pred, &s.eval);
    let trk = evaluate_tracking(&truth, &pred, &s.eval);
    let c = det.counts;
    let precision = Fraction::new(c.true_positives, c.true_positives + c.false_positives);
    let recall = Fraction::new(c.true_positives, c.true_positives + c.false_negatives);
    let f1 = Fraction::new(
        2 * c.true_positives,
        2 * c.true_positives + c.false_positives + c.false_negatives,
    );

    println!("detection        tp {}  fp {}  fn {}", c.true_positives, c.false_positives, c.false_negatives);
    println!("precision        {:.6}  ({precision})", det.precision);
    println!("recall           {:.6}  ({recall})", det.recall);
    println!("f1               {:.6}  ({f1})", det.f1);
    println!("association      {:.6}  ({})", trk.association_accuracy, trk.association);
    println!(
        "effectiveness    {:.6}  ({})  per-target mean {:.6}",
        trk.target_effectiveness, trk.effectiveness.total, trk.effectiveness.macro_average
    );

    if let Some(path) = &a.json {
        let per_target: Vec<_> = trk
            .effectiveness
            .per_target
            .iter()
            .map(|(id, f)| json!({ "target": id.0, "numerator": f.numerator, "denominator": f.denominator }))
            .collect();
        let report = json!({
            "match_radius": s.eval.match_radius,
            "rule": s.eval.rule,
            "detection": {
                "true_positives": c.true_positives,
                "false_positives": c.false_positives,
                "false_negatives": c.false_negatives,
                "precision": json!({ "numerator": precision.numerator, "denominator": precision.denominator, "value": det.precision }),
                "recall": json!({ "numerator": recall.numerator, "denominator": recall.denominator, "value": det.recall }),
                "f1": json!({ "numerator": f1.numerator, "denominator": f1.denominator, "value": det.f1 }),
            },
            "association_accuracy": rational(trk.association),
            "target_effectiveness": {
                "total": rational(trk.effectiveness.total),
                "macro_average": trk.effectiveness.macro_average,
                "per_target": per_target,
            },
        });
        let dir = parent_dir(path);
        fs::create_dir_all(dir).at(dir)?;
        let text = serde_json::to_string_pretty(&report).expect("plain JSON values");
        fs::write(path, text + "\n").at(path)?;
        s.echo(dir, "eval")?;
    }
    Ok(())
}

pub fn simulate_cmd(mut s: Settings, a: &SimulateArgs) -> Result<()> {
    let sim = &mut s.sim;
    if let Some(w) = a.grid.width {
        sim.width = w;
    }
    if let Some(h) = a.grid.height {
        sim.height = h;
    }
    let set = |slot: &mut f64, v: Option<f64>| {
        if let Some(v) = v {
            *slot = v;
        }
    };
    if let Some(n) = a.cells {
        sim.n_initial_cells = n;
    }
    if let Some(n) = a.frames {
        sim.n_frames = n;
    }
    set(&mut sim.step_sigma, a.step_sigma);
    set(&mut sim.max_step, a.max_step);
    set(&mut sim.division_prob, a.division_prob);
    set(&mut sim.min_separation, a.min_separation);
    set(&mut sim.boundary_margin, a.margin);
    if let Some(seed) = a.seed {
        sim.seed = seed;
    }

    let anns = simulate(&s.sim)?;
    let dir = parent_dir(&a.out);
    fs::create_dir_all(dir).at(dir)?;
    io::write_annotations_file(&a.out, &anns).at(&a.out)?;
    s.echo(dir, "simulate")?;
    println!("wrote {} annotations to {}", anns.len(), a.out.display());
    Ok(())
}

pub fn render_cmd(mut s: Settings, a: &RenderArgs) -> Result<()> {
    s.apply_grid(&a.grid);
    if let Some(scale) = a.scale {
        s.render.scale = scale;
    }
    if s.grid.width == 0 || s.grid.height == 0 || s.render.scale == 0 {
        return Err(CliError::Usage("image dimensions and scale must be positive".into()));
    }
    let tracks = io::read_tracks_file(&a.tracks).at(&a.tracks)?;
    let image = render(&tracks, s.grid.width, s.grid.height, s.render.scale);
    let dir = parent_dir(&a.out);
    fs::create_dir_all(dir).at(dir)?;
    image
        .save_with_format(&a.out, image::ImageFormat::Png)
        .map_err(|source| CliError::Image {
            path: a.out.clone(),
            source,
        })?;
    s.echo(dir, "render")?;
    Ok(())
}
