//! Track plots.

use image::{Rgb, RgbImage};
use imageproc::drawing::{draw_filled_circle_mut, draw_hollow_rect_mut, draw_line_segment_mut};
use imageproc::rect::Rect;
use mpm_core::tracker::TrackPoint;
use mpm_core::TrackRegistry;

const BACKGROUND: Rgb<u8> = Rgb([255, 255, 255]);
const LINEAGE: Rgb<u8> = Rgb([150, 150, 150]);

/// Stable colour for a track id.
pub fn track_colour(id: u32) -> Rgb<u8> {
    let mut z = u64::from(id).wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^= z >> 31;
    let hue = (z % 360) as f64;
    hsv(hue, 0.8, 0.8)
}

fn hsv(h: f64, s: f64, v: f64) -> Rgb<u8> {
    let c = v * s;
    let x = c * (1.0 - ((h / 60.0) % 2.0 - 1.0).abs());
    let (r, g, b) = match (h / 60.0) as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = v - c;
    let byte = |u: f64| ((u + m) * 255.0).round() as u8;
    Rgb([byte(r), byte(g), byte(b)])
}

fn dashed(img: &mut RgbImage, a: (f32, f32), b: (f32, f32), colour: Rgb<u8>) {
    let len = (b.0 - a.0).hypot(b.1 - a.1);
    let pieces = ((len / 3.0).ceil() as usize).max(1);
    for k in (0..pieces).step_by(2) {
        let t0 = k as f32 / pieces as f32;
        let t1 = ((k + 1) as f32 / pieces as f32).min(1.0);
        let at = |t: f32| (a.0 + t * (b.0 - a.0), a.1 + t * (b.1 - a.1));
        draw_line_segment_mut(img, at(t0), at(t1), colour);
    }
}

/// Draws one polyline per track on a `width x height` grid scaled by
/// `scale`. Segments touching interpolated points are dashed and the points
/// themselves boxed; lineage links are grey; tracks that never move are dots.
pub fn render(tracks: &TrackRegistry, width: usize, height: usize, scale: u32) -> RgbImage {
    let mut img = RgbImage::from_pixel(width as u32 * scale, height as u32 * scale, BACKGROUND);
    let s = scale as f32;
    let at = |p: &TrackPoint| ((p.x as f32 + 0.5) * s, (p.y as f32 + 0.5) * s);

    for t in tracks.trajectories() {
        let (Some(mother), Some(first)) = (t.parent.and_then(|m| tracks.get(m)), t.points.first()) else {
            continue;
        };
        if let Some(end) = mother.last() {
            draw_line_segment_mut(&mut img, at(end), at(first), LINEAGE);
        }
    }
    for t in tracks.trajectories() {
        let colour = track_colour(t.id.0);
        let still = t.points.windows(2).all(|w| (w[0].x, w[0].y) == (w[1].x, w[1].y));
        if still {
            if let Some(p) = t.points.first() {
                let (x, y) = at(p);
                draw_filled_circle_mut(&mut img, (x as i32, y as i32), (s as i32).max(2), colour);
            }
            continue;
        }
        for w in t.points.windows(2) {
            if w[0].interpolated || w[1].interpolated {
                dashed(&mut img, at(&w[0]), at(&w[1]), colour);
            } else {
                draw_line_segment_mut(&mut img, at(&w[0]), at(&w[1]), colour);
            }
        }
        let half = (s as i32).max(2);
        for p in t.points.iter().filter(|p| p.interpolated) {
            let (x, y) = at(p);
            let r = Rect::at(x as i32 - half, y as i32 - half).of_size(2 * half as u32 + 1, 2 * half as u32 + 1);
            draw_hollow_rect_mut(&mut img, r, colour);
        }
    }
    img
}

#[cfg(test)]
mod tests {
    use super::*;
    use mpm_core::tracker::{TrackId, TrackStatus, Trajectory};

    fn registry(points: &[(u32, f64, f64)]) -> TrackRegistry {
        TrackRegistry::from_trajectories([Trajectory {
            id: TrackId(4),
            birth_frame: points[0].0,
            points: points.iter().map(|&(f, x, y)| TrackPoint::detected(f, x, y)).collect(),
            parent: None,
            status: TrackStatus::Closed,
        }])
        .unwrap()
    }

    #[test]
    fn empty_is_blank() {
        let img = render(&TrackRegistry::new(), 10, 7, 3);
        assert_eq!(img.dimensions(), (30, 21));
        assert!(img.pixels().all(|p| *p == BACKGROUND));
    }

    #[test]
    fn stationary_track_is_a_dot() {
        let img = render(&registry(&[(0, 20.0, 20.0), (1, 20.0, 20.0), (2, 20.0, 20.0)]), 40, 40, 1);
        let marked: Vec<(u32, u32)> = img
            .enumerate_pixels()
            .filter(|(_, _, p)| **p != BACKGROUND)
            .map(|(x, y, _)| (x, y))
            .collect();
        assert!(!marked.is_empty() && marked.len() < 30);
        assert!(marked.iter().all(|&(x, y)| x.abs_diff(20) <= 2 && y.abs_diff(20) <= 2));
    }

    #[test]
    fn colours_are_stable() {
        assert_eq!(track_colour(7), track_colour(7));
        assert_ne!(track_colour(7), track_colour(8));
    }
}
