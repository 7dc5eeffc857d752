//! Input generators for the experiment runners.

use std::f64::consts::PI;

use crate::codec::BinaryImage;

/// Two sine channels with frequencies in ratio 2:3 and a π/6 phase shift;
/// the pattern repeats every 360 time-steps.
pub fn lissajous(t: f64) -> (f64, f64) {
    let s1 = (4.0 * PI * t / 360.0).sin();
    let s2 = (6.0 * PI * t / 360.0 + PI / 6.0).sin();
    (s1, s2)
}

/// One step of the logistic population equation `s' = βs(1-s)`;
/// for 3.57 <= β <= 4 the iterates fluctuate chaotically in (0, 1).
pub fn population_step(s: f64, beta: f64) -> f64 {
    beta * s * (1.0 - s)
}

/// The sentence corpus for the persistence experiment: three English
/// sentences, 130 characters in total.
pub const SENTENCES: [&str; 3] = [
    "the quick brown fox jumps over the lazy dog.",
    "pack my box with five dozen liquor jugs now.",
    "how vexingly quick daft zebras jump today.",
];

/// The seven rotating shapes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShapeKind {
    Square,
    Hexagon,
    Pentagon,
    Triangle,
    Star5,
    Star6,
    Circle3d,
}

pub const ALL_SHAPES: [ShapeKind; 7] = [
    ShapeKind::Square,
    ShapeKind::Hexagon,
    ShapeKind::Pentagon,
    ShapeKind::Triangle,
    ShapeKind::Star5,
    ShapeKind::Star6,
    ShapeKind::Circle3d,
];

impl ShapeKind {
    pub fn name(&self) -> &'static str {
        match self {
            ShapeKind::Square => "square",
            ShapeKind::Hexagon => "hexagon",
            ShapeKind::Pentagon => "pentagon",
            ShapeKind::Triangle => "triangle",
            ShapeKind::Star5 => "star5",
            ShapeKind::Star6 => "star6",
            ShapeKind::Circle3d => "circle3d",
        }
    }
}

/// Rotating-shape raster parameters: square frames, 1-pixel outlines,
/// 36 frames per revolution at 10 degree steps.
#[derive(Debug, Clone, Copy)]
pub struct ShapeSpec {
    pub kind: ShapeKind,
    pub frame: usize,
    pub rotation_step_deg: f64,
}

impl ShapeSpec {
    pub fn new(kind: ShapeKind, frame: usize) -> Self {
        Self {
            kind,
            frame,
            rotation_step_deg: 10.0,
        }
    }

    pub fn frames_per_revolution(&self) -> usize {
        (360.0 / self.rotation_step_deg).round() as usize
    }
}

/// Degree trig, exact on the axes so rotational symmetries rasterize
/// pixel-identically.
fn cos_deg(angle: f64) -> f64 {
    let a = angle.rem_euclid(360.0);
    match a {
        0.0 => 1.0,
        90.0 | 270.0 => 0.0,
        180.0 => -1.0,
        _ => a.to_radians().cos(),
    }
}

fn sin_deg(angle: f64) -> f64 {
    cos_deg(angle - 90.0)
}

/// Vertex on a circle of radius `r` around the frame centre, at integer
/// degrees normalized to [0, 360) so that equal angles produce identical
/// coordinates.
fn vertex(center: f64, r: f64, angle_deg: f64) -> (f64, f64) {
    let a = angle_deg.rem_euclid(360.0);
    (center + r * cos_deg(a), center - r * sin_deg(a))
}

fn draw_segment(img: &mut BinaryImage, p0: (f64, f64), p1: (f64, f64)) {
    // canonical endpoint order so a segment rasterizes the same pixels
    // regardless of traversal direction
    let (a, b) = if (p1.0, p1.1) < (p0.0, p0.1) {
        (p1, p0)
    } else {
        (p0, p1)
    };
    let steps = ((b.0 - a.0).abs().max((b.1 - a.1).abs()).ceil() as usize * 2).max(1);
    for i in 0..=steps {
        let t = i as f64 / steps as f64;
        let x = a.0 + t * (b.0 - a.0);
        let y = a.1 + t * (b.1 - a.1);
        let (col, row) = (x.round() as isize, y.round() as isize);
        if row >= 0 && col >= 0 && (row as usize) < img.rows() && (col as usize) < img.cols() {
            img.set(row as usize, col as usize, true);
        }
    }
}

fn draw_closed_polygon(img: &mut BinaryImage, pts: &[(f64, f64)]) {
    for i in 0..pts.len() {
        draw_segment(img, pts[i], pts[(i + 1) % pts.len()]);
    }
}

/// Rasterizes one frame of a shape rotated by `angle_deg` about the frame
/// centre. The 3D circle renders as the ellipse of a circle rotated about
/// a horizontal in-plane axis: edge-on it degenerates to a line.
pub fn shape_frame(spec: &ShapeSpec, angle_deg: f64) -> BinaryImage {
    let mut img = BinaryImage::new(spec.frame, spec.frame).expect("frame size is positive");
    let center = (spec.frame as f64 - 1.0) / 2.0;
    let r = spec.frame as f64 * 0.42;
    let ngon = |img: &mut BinaryImage, n: usize, base: f64| {
        let pts: Vec<(f64, f64)> = (0..n)
            .map(|i| vertex(center, r, base + angle_deg + (360.0 / n as f64) * i as f64))
            .collect();
        draw_closed_polygon(img, &pts);
    };
    match spec.kind {
        ShapeKind::Square => ngon(&mut img, 4, 45.0),
        ShapeKind::Hexagon => ngon(&mut img, 6, 0.0),
        ShapeKind::Pentagon => ngon(&mut img, 5, 90.0),
        ShapeKind::Triangle => ngon(&mut img, 3, 90.0),
        ShapeKind::Star5 => {
            // pentagram: connect every second vertex of the pentagon
            let pts: Vec<(f64, f64)> = (0..5)
                .map(|i| vertex(center, r, 90.0 + angle_deg + 72.0 * i as f64))
                .collect();
            for i in 0..5 {
                draw_segment(&mut img, pts[i], pts[(i + 2) % 5]);
            }
        }
        ShapeKind::Star6 => {
            // hexagram: two equilateral triangles 60 degrees apart
            ngon(&mut img, 3, 90.0);
            ngon(&mut img, 3, 30.0);
        }
        ShapeKind::Circle3d => {
            let b = r * cos_deg(angle_deg).abs();
            let steps = (2.0 * PI * r).ceil() as usize * 2;
            for i in 0..steps {
                let t = 2.0 * PI * i as f64 / steps as f64;
                let x = center + r * t.cos();
                let y = center - b * t.sin();
                let (col, row) = (x.round() as isize, y.round() as isize);
                if row >= 0
                    && col >= 0
                    && (row as usize) < img.rows()
                    && (col as usize) < img.cols()
                {
                    img.set(row as usize, col as usize, true);
                }
            }
        }
    }
    img
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::ingest_frame;

    #[test]
    fn lissajous_matches_the_closed_form() {
        let (s1, s2) = lissajous(0.0);
        assert!(s1.abs() < 1e-12);
        assert!((s2 - 0.5).abs() < 1e-12, "sin(pi/6) = 0.5");

        // the pattern repeats every 360 steps
        let (a1, a2) = lissajous(360.0);
        assert!(a1.abs() < 1e-9 && (a2 - 0.5).abs() < 1e-9);

        // quarter period of the slow channel: sin(pi/2) = 1
        let (q1, _) = lissajous(45.0);
        assert!((q1 - 1.0).abs() < 1e-12);
        // half period: back through zero
        let (h1, h2) = lissajous(90.0);
        assert!(h1.abs() < 1e-12, "sin(pi) = 0");
        assert!((h2 - (1.5 * PI + PI / 6.0).sin()).abs() < 1e-12);
    }

    #[test]
    fn population_equation_evaluates() {
        assert!((population_step(0.5, 3.89) - 0.9725).abs() < 1e-12);
        assert_eq!(population_step(0.0, 3.89), 0.0);
        // chaotic orbit stays in (0, 1)
        let mut s = 0.5;
        for _ in 0..10_000 {
            s = population_step(s, 3.89);
            assert!(s > 0.0 && s < 1.0);
        }
    }

    #[test]
    fn sentence_corpus_is_130_characters() {
        let total: usize = SENTENCES.iter().map(|s| s.len()).sum();
        assert_eq!(total, 130);
        for s in SENTENCES {
            assert!((42..=45).contains(&s.len()), "`{s}` is {} chars", s.len());
        }
    }

    fn frame_bits(kind: ShapeKind, angle: f64) -> crate::bitvec::SparseBitVector {
        ingest_frame(&shape_frame(&ShapeSpec::new(kind, 48), angle))
    }

    #[test]
    fn rotational_symmetries_are_pixel_exact() {
        assert_eq!(frame_bits(ShapeKind::Square, 0.0), frame_bits(ShapeKind::Square, 90.0));
        assert_eq!(frame_bits(ShapeKind::Triangle, 0.0), frame_bits(ShapeKind::Triangle, 120.0));
        assert_eq!(frame_bits(ShapeKind::Hexagon, 10.0), frame_bits(ShapeKind::Hexagon, 70.0));
        assert_eq!(frame_bits(ShapeKind::Star5, 0.0), frame_bits(ShapeKind::Star5, 72.0));
        assert_eq!(frame_bits(ShapeKind::Star6, 0.0), frame_bits(ShapeKind::Star6, 60.0));
        assert_eq!(frame_bits(ShapeKind::Pentagon, 20.0), frame_bits(ShapeKind::Pentagon, 92.0));
        // star6 really is the overlay of the triangle with its 60-degree twin
        let tri = frame_bits(ShapeKind::Triangle, 0.0);
        let star = frame_bits(ShapeKind::Star6, 0.0);
        assert_eq!(tri.intersect(&star).unwrap(), tri);
    }

    #[test]
    fn edge_on_circle_is_a_horizontal_line() {
        let img = shape_frame(&ShapeSpec::new(ShapeKind::Circle3d, 48), 90.0);
        let rows: std::collections::BTreeSet<usize> = (0..48)
            .flat_map(|r| (0..48).filter(move |&c| (r, c) == (r, c)).map(move |c| (r, c)))
            .filter(|&(r, c)| img.get(r, c))
            .map(|(r, _)| r)
            .collect();
        assert_eq!(rows.len(), 1, "edge-on circle spans a single pixel row");
        // face-on it is a full circle spanning many rows
        let face = shape_frame(&ShapeSpec::new(ShapeKind::Circle3d, 48), 0.0);
        let face_rows: std::collections::BTreeSet<usize> = (0..48)
            .flat_map(|r| (0..48).map(move |c| (r, c)))
            .filter(|&(r, c)| face.get(r, c))
            .map(|(r, _)| r)
            .collect();
        assert!(face_rows.len() > 30);
    }

    #[test]
    fn outlines_stay_sparse() {
        for kind in ALL_SHAPES {
            for step in 0..36 {
                let img = shape_frame(&ShapeSpec::new(kind, 48), step as f64 * 10.0);
                let filled = img.popcount() as f64 / (48.0 * 48.0);
                assert!(filled < 0.15, "{kind:?} frame {step} is {filled:.2} full");
                assert!(img.popcount() > 20, "{kind:?} frame {step} nearly empty");
            }
        }
    }
}
