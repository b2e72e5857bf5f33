//! Procedural digit glyphs: stroke tables per class style and a small
//! rasterizer. Each class owns several handwriting-like style variants.
//! Some styles blend toward a glyph of a confusable class (8 toward 3,
//! 3 toward 8, 9 toward 4, ...) with a per-sample blend weight, which gives
//! the corpus a realistic confusion structure: most samples are clear
//! members of their class, a controllable minority sits near the boundary.

/// Canvas side in pixels.
pub const SIDE: usize = 28;

/// Glyph-space unit square maps to this pixel box.
const BOX_ORIGIN: f64 = 4.0;
const BOX_SIZE: f64 = 20.0;

#[derive(Clone, Copy)]
pub enum Stroke {
    Line {
        a: (f64, f64),
        b: (f64, f64),
    },
    /// Ellipse arc; angles in degrees, 0 = +x, 90 = +y (down the canvas).
    Arc {
        c: (f64, f64),
        r: (f64, f64),
        start: f64,
        end: f64,
    },
}

/// Intensity multiplier applied to the left part of the canvas
/// (`x / 27 < x_frac`), used by the deliberately open-left styles.
#[derive(Clone, Copy)]
pub struct Fade {
    pub x_frac: f64,
    pub factor: f64,
}

#[derive(Clone, Copy)]
pub struct Style {
    pub strokes: &'static [Stroke],
    pub base_rotation_deg: f64,
    pub fade: Option<Fade>,
    /// Per-stroke intensity factors: `(stroke index, factor)`.
    pub dim: &'static [(usize, f64)],
    /// Render with the alignment stream of another `(digit, style index)`,
    /// so this style's templates differ from that style's only by geometry.
    pub alignment_key: Option<(u8, usize)>,
    /// Relative sampling weight within the class.
    pub weight: f64,
    /// Explicit template-variant count (None = derived from the weight).
    pub variants: Option<usize>,
}

use Stroke::{Arc, Line};

const fn plain(strokes: &'static [Stroke], weight: f64) -> Style {
    Style {
        strokes,
        base_rotation_deg: 0.0,
        fade: None,
        dim: &[],
        alignment_key: None,
        weight,
        variants: None,
    }
}

const fn slanted(strokes: &'static [Stroke], rot: f64, weight: f64) -> Style {
    Style {
        strokes,
        base_rotation_deg: rot,
        fade: None,
        dim: &[],
        alignment_key: None,
        weight,
        variants: None,
    }
}

const fn faded(strokes: &'static [Stroke], x_frac: f64, factor: f64, weight: f64) -> Style {
    Style {
        strokes,
        base_rotation_deg: 0.0,
        fade: Some(Fade { x_frac, factor }),
        dim: &[],
        alignment_key: None,
        weight,
        variants: None,
    }
}

const fn pocket(strokes: &'static [Stroke], weight: f64, variants: usize) -> Style {
    Style {
        strokes,
        base_rotation_deg: 0.0,
        fade: None,
        dim: &[],
        alignment_key: None,
        weight,
        variants: Some(variants),
    }
}

const fn dimmed(
    strokes: &'static [Stroke],
    dim: &'static [(usize, f64)],
    alignment_key: (u8, usize),
    weight: f64,
) -> Style {
    Style {
        strokes,
        base_rotation_deg: 0.0,
        fade: None,
        dim,
        alignment_key: Some(alignment_key),
        weight,
        variants: None,
    }
}

const ZERO_ROUND: &[Stroke] = &[Arc {
    c: (0.5, 0.5),
    r: (0.26, 0.36),
    start: 0.0,
    end: 360.0,
}];
const ZERO_NARROW: &[Stroke] = &[Arc {
    c: (0.5, 0.5),
    r: (0.18, 0.36),
    start: 0.0,
    end: 360.0,
}];

const ONE_PLAIN: &[Stroke] = &[Line {
    a: (0.5, 0.10),
    b: (0.5, 0.90),
}];
const ONE_SERIF: &[Stroke] = &[
    Line {
        a: (0.52, 0.10),
        b: (0.48, 0.90),
    },
    Line {
        a: (0.52, 0.10),
        b: (0.36, 0.28),
    },
    Line {
        a: (0.34, 0.90),
        b: (0.62, 0.90),
    },
];

const TWO_ROUND: &[Stroke] = &[
    Arc {
        c: (0.50, 0.32),
        r: (0.24, 0.20),
        start: 180.0,
        end: 375.0,
    },
    Line {
        a: (0.73, 0.40),
        b: (0.26, 0.84),
    },
    Line {
        a: (0.26, 0.84),
        b: (0.78, 0.84),
    },
];
const TWO_NARROW: &[Stroke] = &[
    Arc {
        c: (0.48, 0.30),
        r: (0.20, 0.18),
        start: 180.0,
        end: 370.0,
    },
    Line {
        a: (0.66, 0.40),
        b: (0.30, 0.84),
    },
    Line {
        a: (0.30, 0.84),
        b: (0.72, 0.84),
    },
];

const THREE_STD: &[Stroke] = &[
    Arc {
        c: (0.50, 0.31),
        r: (0.20, 0.17),
        start: 225.0,
        end: 495.0,
    },
    Arc {
        c: (0.50, 0.66),
        r: (0.24, 0.20),
        start: 225.0,
        end: 495.0,
    },
];
const THREE_ROUND: &[Stroke] = &[
    Arc {
        c: (0.48, 0.31),
        r: (0.21, 0.175),
        start: 230.0,
        end: 500.0,
    },
    Arc {
        c: (0.48, 0.66),
        r: (0.25, 0.205),
        start: 230.0,
        end: 500.0,
    },
];
const THREE_WIDE: &[Stroke] = &[
    Arc {
        c: (0.50, 0.30),
        r: (0.21, 0.16),
        start: 225.0,
        end: 495.0,
    },
    Arc {
        c: (0.50, 0.67),
        r: (0.26, 0.21),
        start: 225.0,
        end: 495.0,
    },
];

const FOUR_CLOSED: &[Stroke] = &[
    Line {
        a: (0.66, 0.12),
        b: (0.66, 0.88),
    },
    Line {
        a: (0.66, 0.12),
        b: (0.30, 0.56),
    },
    Line {
        a: (0.30, 0.56),
        b: (0.84, 0.56),
    },
];
const FOUR_OPEN: &[Stroke] = &[
    Line {
        a: (0.62, 0.18),
        b: (0.62, 0.88),
    },
    Line {
        a: (0.62, 0.18),
        b: (0.34, 0.60),
    },
    Line {
        a: (0.28, 0.60),
        b: (0.82, 0.60),
    },
];

const FIVE_STD: &[Stroke] = &[
    Line {
        a: (0.70, 0.14),
        b: (0.32, 0.14),
    },
    Line {
        a: (0.32, 0.14),
        b: (0.30, 0.45),
    },
    Arc {
        c: (0.49, 0.64),
        r: (0.23, 0.20),
        start: 200.0,
        end: 470.0,
    },
];
const FIVE_ROUND: &[Stroke] = &[
    Line {
        a: (0.72, 0.15),
        b: (0.34, 0.15),
    },
    Line {
        a: (0.34, 0.15),
        b: (0.32, 0.42),
    },
    Arc {
        c: (0.50, 0.63),
        r: (0.25, 0.22),
        start: 200.0,
        end: 470.0,
    },
];

const SIX_STD: &[Stroke] = &[
    Line {
        a: (0.62, 0.10),
        b: (0.42, 0.32),
    },
    Line {
        a: (0.42, 0.32),
        b: (0.32, 0.58),
    },
    Arc {
        c: (0.48, 0.70),
        r: (0.20, 0.18),
        start: 0.0,
        end: 360.0,
    },
];
const SIX_BIG: &[Stroke] = &[
    Line {
        a: (0.66, 0.08),
        b: (0.44, 0.34),
    },
    Line {
        a: (0.44, 0.34),
        b: (0.33, 0.60),
    },
    Arc {
        c: (0.49, 0.70),
        r: (0.23, 0.19),
        start: 0.0,
        end: 360.0,
    },
];

const SEVEN_PLAIN: &[Stroke] = &[
    Line {
        a: (0.24, 0.15),
        b: (0.78, 0.15),
    },
    Line {
        a: (0.78, 0.15),
        b: (0.42, 0.88),
    },
];
const SEVEN_CROSSED: &[Stroke] = &[
    Line {
        a: (0.24, 0.15),
        b: (0.78, 0.15),
    },
    Line {
        a: (0.78, 0.15),
        b: (0.42, 0.88),
    },
    Line {
        a: (0.34, 0.50),
        b: (0.64, 0.50),
    },
];
const SEVEN_STEEP: &[Stroke] = &[
    Line {
        a: (0.26, 0.14),
        b: (0.80, 0.14),
    },
    Line {
        a: (0.80, 0.14),
        b: (0.52, 0.88),
    },
];

const EIGHT_BALANCED: &[Stroke] = &[
    Arc {
        c: (0.50, 0.30),
        r: (0.185, 0.165),
        start: 0.0,
        end: 360.0,
    },
    Arc {
        c: (0.50, 0.68),
        r: (0.225, 0.195),
        start: 0.0,
        end: 360.0,
    },
];
const EIGHT_SMALL_TOP: &[Stroke] = &[
    Arc {
        c: (0.50, 0.28),
        r: (0.15, 0.14),
        start: 0.0,
        end: 360.0,
    },
    Arc {
        c: (0.50, 0.66),
        r: (0.25, 0.21),
        start: 0.0,
        end: 360.0,
    },
];

const NINE_STD: &[Stroke] = &[
    Arc {
        c: (0.50, 0.32),
        r: (0.20, 0.18),
        start: 0.0,
        end: 360.0,
    },
    Line {
        a: (0.70, 0.36),
        b: (0.60, 0.88),
    },
];
const NINE_STRAIGHT: &[Stroke] = &[
    Arc {
        c: (0.50, 0.30),
        r: (0.19, 0.17),
        start: 0.0,
        end: 360.0,
    },
    Line {
        a: (0.68, 0.32),
        b: (0.68, 0.88),
    },
];
/// Angular loop: reads partway toward a 4.
const NINE_ANGULAR: &[Stroke] = &[
    Line {
        a: (0.50, 0.14),
        b: (0.32, 0.32),
    },
    Line {
        a: (0.32, 0.32),
        b: (0.50, 0.50),
    },
    Line {
        a: (0.50, 0.50),
        b: (0.68, 0.32),
    },
    Line {
        a: (0.68, 0.32),
        b: (0.50, 0.14),
    },
    Line {
        a: (0.68, 0.32),
        b: (0.62, 0.88),
    },
];


/// Rare bridge styles: extreme shapes sitting between their class and a
/// confusable neighbor, so wide neighborhoods swallow them.
const ZERO_SLIM: &[Stroke] = &[Arc {
    c: (0.5, 0.5),
    r: (0.12, 0.36),
    start: 0.0,
    end: 360.0,
}];
/// The plain 7 with a faint base bar: a flat 2 living inside the 7 cloud.
const TWO_SEVENISH: &[Stroke] = &[
    Line {
        a: (0.24, 0.15),
        b: (0.78, 0.15),
    },
    Line {
        a: (0.78, 0.15),
        b: (0.42, 0.88),
    },
    Line {
        a: (0.42, 0.88),
        b: (0.74, 0.86),
    },
];
/// The angular 9 with a faint crossbar: a 4 living inside the 9 cloud.
const FOUR_NINEISH: &[Stroke] = &[
    Line {
        a: (0.50, 0.14),
        b: (0.32, 0.32),
    },
    Line {
        a: (0.32, 0.32),
        b: (0.50, 0.50),
    },
    Line {
        a: (0.50, 0.50),
        b: (0.68, 0.32),
    },
    Line {
        a: (0.68, 0.32),
        b: (0.50, 0.14),
    },
    Line {
        a: (0.68, 0.32),
        b: (0.62, 0.88),
    },
    Line {
        a: (0.26, 0.60),
        b: (0.70, 0.60),
    },
];
/// The standard 5 with a faintly closed bowl: a 6 living inside the 5 cloud.
const SIX_FIVEISH: &[Stroke] = &[
    Line {
        a: (0.70, 0.14),
        b: (0.32, 0.14),
    },
    Line {
        a: (0.32, 0.14),
        b: (0.30, 0.45),
    },
    Arc {
        c: (0.49, 0.64),
        r: (0.23, 0.20),
        start: 200.0,
        end: 470.0,
    },
    Arc {
        c: (0.49, 0.64),
        r: (0.23, 0.20),
        start: 110.0,
        end: 200.0,
    },
];
/// The plain 1 with a faint top bar: a 7 living inside the 1 cloud.
const SEVEN_ONEISH: &[Stroke] = &[
    Line {
        a: (0.5, 0.10),
        b: (0.5, 0.90),
    },
    Line {
        a: (0.30, 0.16),
        b: (0.50, 0.11),
    },
];


/// The standard 3 with faint closure stubs over its left gaps: an eight
/// that lives right against the dense 3 cloud.
const EIGHT_CLOSED3: &[Stroke] = &[
    Arc {
        c: (0.50, 0.31),
        r: (0.20, 0.17),
        start: 225.0,
        end: 495.0,
    },
    Arc {
        c: (0.50, 0.66),
        r: (0.24, 0.20),
        start: 225.0,
        end: 495.0,
    },
    Arc {
        c: (0.50, 0.31),
        r: (0.20, 0.17),
        start: 135.0,
        end: 225.0,
    },
    Arc {
        c: (0.50, 0.66),
        r: (0.24, 0.20),
        start: 135.0,
        end: 225.0,
    },
];

/// The round 3 with faint closure stubs: a sparse 8 pocket inside the
/// dense 3 cloud.
const EIGHT_ROUND3: &[Stroke] = &[
    Arc {
        c: (0.48, 0.31),
        r: (0.21, 0.175),
        start: 230.0,
        end: 500.0,
    },
    Arc {
        c: (0.48, 0.66),
        r: (0.25, 0.205),
        start: 230.0,
        end: 500.0,
    },
    Arc {
        c: (0.48, 0.31),
        r: (0.21, 0.175),
        start: 140.0,
        end: 230.0,
    },
    Arc {
        c: (0.48, 0.66),
        r: (0.25, 0.205),
        start: 140.0,
        end: 230.0,
    },
];

/// The standard 5 with a faint left drop: a 3 living inside the 5 cloud.
const THREE_FIVEISH: &[Stroke] = &[
    Line {
        a: (0.70, 0.14),
        b: (0.32, 0.14),
    },
    Line {
        a: (0.32, 0.14),
        b: (0.30, 0.45),
    },
    Arc {
        c: (0.49, 0.64),
        r: (0.23, 0.20),
        start: 200.0,
        end: 470.0,
    },
];

/// Style table for one digit class.
pub fn styles_for(digit: u8) -> &'static [Style] {
    const ZERO: &[Style] = &[
        plain(ZERO_ROUND, 1.0),
        plain(ZERO_NARROW, 0.8),
        slanted(ZERO_ROUND, 12.0, 0.7),
        plain(ZERO_SLIM, 0.08),
    ];
    const ONE: &[Style] = &[plain(ONE_PLAIN, 1.0), plain(ONE_SERIF, 0.9)];
    const TWO: &[Style] = &[
        plain(TWO_ROUND, 1.0),
        plain(TWO_NARROW, 0.8),
        slanted(TWO_ROUND, -7.0, 0.7),
        dimmed(TWO_SEVENISH, &[(2, 0.68)], (7, 0), 0.08),
    ];
    const THREE: &[Style] = &[
        plain(THREE_ROUND, 1.3),
        plain(THREE_WIDE, 0.9),
        pocket(THREE_STD, 0.24, 3),
        dimmed(THREE_FIVEISH, &[(1, 0.60)], (5, 0), 0.08),
    ];
    const FOUR: &[Style] = &[
        plain(FOUR_CLOSED, 1.0),
        plain(FOUR_OPEN, 0.9),
        slanted(FOUR_CLOSED, 8.0, 0.7),
        dimmed(FOUR_NINEISH, &[(5, 0.68)], (9, 3), 0.08),
    ];
    const FIVE: &[Style] = &[
        plain(FIVE_STD, 1.0),
        plain(FIVE_ROUND, 0.9),
        slanted(FIVE_STD, -6.0, 0.7),
        
    ];
    const SIX: &[Style] = &[
        plain(SIX_STD, 1.0),
        plain(SIX_BIG, 0.9),
        slanted(SIX_STD, 8.0, 0.7),
        dimmed(SIX_FIVEISH, &[(3, 0.68)], (5, 0), 0.08),
    ];
    const SEVEN: &[Style] = &[
        plain(SEVEN_PLAIN, 1.0),
        plain(SEVEN_CROSSED, 0.8),
        plain(SEVEN_STEEP, 0.8),
        dimmed(SEVEN_ONEISH, &[(1, 0.68)], (1, 0), 0.08),
    ];
    const EIGHT: &[Style] = &[
        plain(EIGHT_BALANCED, 0.9),
        plain(EIGHT_SMALL_TOP, 0.9),
        faded(EIGHT_BALANCED, 0.45, 0.44, 0.45),
        dimmed(EIGHT_CLOSED3, &[(2, 0.48), (3, 0.48)], (3, 2), 1.5),
        dimmed(EIGHT_ROUND3, &[(2, 0.50), (3, 0.50)], (3, 0), 0.10),
    ];
    const NINE: &[Style] = &[
        plain(NINE_STD, 1.0),
        plain(NINE_STRAIGHT, 0.9),
        slanted(NINE_STD, -8.0, 0.8),
        plain(NINE_ANGULAR, 0.6),
        faded(NINE_STD, 0.40, 0.46, 0.4),
    ];
    match digit {
        0 => ZERO,
        1 => ONE,
        2 => TWO,
        3 => THREE,
        4 => FOUR,
        5 => FIVE,
        6 => SIX,
        7 => SEVEN,
        8 => EIGHT,
        9 => NINE,
        other => panic!("digit out of range: {other}"),
    }
}

/// Control points of a smooth per-digit displacement field (3x3 grid over
/// the canvas, bilinear interpolation between them).
pub const WARP_GRID: usize = 3;

/// Per-sample geometric jitter.
#[derive(Clone, Copy)]
pub struct Jitter {
    pub rotation_deg: f64,
    pub scale: f64,
    pub dx: f64,
    pub dy: f64,
    pub stroke_width: f64,
    pub brightness: f64,
    /// Elastic displacement control grid, in pixels.
    pub warp: [(f64, f64); WARP_GRID * WARP_GRID],
    /// Stream for per-stroke shape variation (loop radii, stroke endpoints),
    /// giving every rendering its own point on the style's shape manifold.
    pub shape_seed: u64,
    /// Relative amplitude of the shape variation.
    pub shape_amp: f64,
    /// Multiplier on the style's fade factor (depth of the faint side).
    pub fade_mult: f64,
}

/// Per-digit perturbation of one stroke's control geometry.
fn perturb_stroke(stroke: &Stroke, shape_seed: u64, index: u64, amp: f64) -> Stroke {
    use rand::Rng;
    let mut rng = crate::seeding::rng_for_stream(shape_seed, index);
    match *stroke {
        Line { a, b } => Line {
            a: (
                a.0 + rng.gen_range(-0.028..0.028) * amp,
                a.1 + rng.gen_range(-0.028..0.028) * amp,
            ),
            b: (
                b.0 + rng.gen_range(-0.028..0.028) * amp,
                b.1 + rng.gen_range(-0.028..0.028) * amp,
            ),
        },
        Arc { c, r, start, end } => Arc {
            c: (
                c.0 + rng.gen_range(-0.022..0.022) * amp,
                c.1 + rng.gen_range(-0.022..0.022) * amp,
            ),
            r: (
                r.0 * (1.0 + rng.gen_range(-0.10..0.10) * amp),
                r.1 * (1.0 + rng.gen_range(-0.10..0.10) * amp),
            ),
            start,
            end,
        },
    }
}

fn warp_displacement(warp: &[(f64, f64); WARP_GRID * WARP_GRID], p: (f64, f64)) -> (f64, f64) {
    let cell = (SIDE - 1) as f64 / (WARP_GRID - 1) as f64;
    let gx = (p.0 / cell).clamp(0.0, (WARP_GRID - 1) as f64 - 1e-9);
    let gy = (p.1 / cell).clamp(0.0, (WARP_GRID - 1) as f64 - 1e-9);
    let (x0, y0) = (gx.floor() as usize, gy.floor() as usize);
    let (fx, fy) = (gx - x0 as f64, gy - y0 as f64);
    let at = |x: usize, y: usize| warp[y * WARP_GRID + x];
    let (d00, d10) = (at(x0, y0), at(x0 + 1, y0));
    let (d01, d11) = (at(x0, y0 + 1), at(x0 + 1, y0 + 1));
    let dx = (d00.0 * (1.0 - fx) + d10.0 * fx) * (1.0 - fy)
        + (d01.0 * (1.0 - fx) + d11.0 * fx) * fy;
    let dy = (d00.1 * (1.0 - fx) + d10.1 * fx) * (1.0 - fy)
        + (d01.1 * (1.0 - fx) + d11.1 * fx) * fy;
    (dx, dy)
}

fn transform(p: (f64, f64), jitter: &Jitter, base_rot: f64) -> (f64, f64) {
    // rotate about the glyph center, scale, map to pixel space, then bend by
    // the elastic field
    let (cx, cy) = (0.5, 0.5);
    let theta = (base_rot + jitter.rotation_deg).to_radians();
    let (sin, cos) = theta.sin_cos();
    let (x, y) = (p.0 - cx, p.1 - cy);
    let xr = x * cos - y * sin;
    let yr = x * sin + y * cos;
    let gx = cx + xr * jitter.scale;
    let gy = cy + yr * jitter.scale;
    let px = BOX_ORIGIN + gx * BOX_SIZE + jitter.dx;
    let py = BOX_ORIGIN + gy * BOX_SIZE + jitter.dy;
    let (wx, wy) = warp_displacement(&jitter.warp, (px, py));
    (px + wx, py + wy)
}

fn polyline(stroke: &Stroke, jitter: &Jitter, base_rot: f64, out: &mut Vec<(f64, f64)>) {
    out.clear();
    match *stroke {
        Line { a, b } => {
            out.push(transform(a, jitter, base_rot));
            out.push(transform(b, jitter, base_rot));
        }
        Arc { c, r, start, end } => {
            let sweep = (end - start).abs();
            let steps = ((sweep / 9.0).ceil() as usize).max(3);
            for s in 0..=steps {
                let theta = (start + (end - start) * s as f64 / steps as f64).to_radians();
                let p = (c.0 + r.0 * theta.cos(), c.1 + r.1 * theta.sin());
                out.push(transform(p, jitter, base_rot));
            }
        }
    }
}

fn dist_point_segment(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (vx, vy) = (b.0 - a.0, b.1 - a.1);
    let (wx, wy) = (p.0 - a.0, p.1 - a.1);
    let len2 = vx * vx + vy * vy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        ((wx * vx + wy * vy) / len2).clamp(0.0, 1.0)
    };
    let (dx, dy) = (wx - t * vx, wy - t * vy);
    (dx * dx + dy * dy).sqrt()
}

/// Raw stroke intensity field (peak 255 per stroke scaled by its dim
/// factor), before fade and brightness.
fn render_strokes(
    strokes: &[Stroke],
    dim: &[(usize, f64)],
    jitter: &Jitter,
    base_rot: f64,
) -> [f64; SIDE * SIDE] {
    let mut img = [0.0; SIDE * SIDE];
    let reach = 3.0 * jitter.stroke_width + 1.0;
    let mut points: Vec<(f64, f64)> = Vec::with_capacity(48);
    for (si, stroke) in strokes.iter().enumerate() {
        let factor = dim
            .iter()
            .find(|(i, _)| *i == si)
            .map_or(1.0, |&(_, f)| f);
        let stroke = perturb_stroke(stroke, jitter.shape_seed, si as u64, jitter.shape_amp);
        polyline(&stroke, jitter, base_rot, &mut points);
        for seg in points.windows(2) {
            let (a, b) = (seg[0], seg[1]);
            let x0 = ((a.0.min(b.0) - reach).floor().max(0.0)) as usize;
            let x1 = ((a.0.max(b.0) + reach).ceil().min((SIDE - 1) as f64)) as usize;
            let y0 = ((a.1.min(b.1) - reach).floor().max(0.0)) as usize;
            let y1 = ((a.1.max(b.1) + reach).ceil().min((SIDE - 1) as f64)) as usize;
            for py in y0..=y1 {
                for px in x0..=x1 {
                    let d = dist_point_segment((px as f64, py as f64), a, b);
                    let u = d / jitter.stroke_width;
                    let v = 255.0 * factor * (-1.2 * u * u).exp();
                    let cell = &mut img[py * SIDE + px];
                    if v > *cell {
                        *cell = v;
                    }
                }
            }
        }
    }
    img
}

/// Renders one glyph into a 28x28 grayscale buffer (no pixel noise applied).
pub fn render(style: &Style, jitter: &Jitter) -> [f64; SIDE * SIDE] {
    let mut img = render_strokes(style.strokes, style.dim, jitter, style.base_rotation_deg);
    for (i, v) in img.iter_mut().enumerate() {
        let mut value = *v * jitter.brightness;
        if let Some(fade) = style.fade {
            let x_frac = (i % SIDE) as f64 / (SIDE - 1) as f64;
            if x_frac < fade.x_frac {
                value *= (fade.factor * jitter.fade_mult).min(1.0);
            }
        }
        *v = value;
    }
    img
}

#[cfg(test)]
mod tests {
    use super::*;

    fn neutral_jitter() -> Jitter {
        Jitter {
            rotation_deg: 0.0,
            scale: 1.0,
            dx: 0.0,
            dy: 0.0,
            stroke_width: 1.1,
            brightness: 1.0,
            warp: [(0.0, 0.0); WARP_GRID * WARP_GRID],
            shape_seed: 0,
            shape_amp: 0.0,
            fade_mult: 1.0,
        }
    }

    #[test]
    fn every_style_renders_a_nonempty_glyph() {
        for digit in 0..10u8 {
            for (si, style) in styles_for(digit).iter().enumerate() {
                let img = render(style, &neutral_jitter());
                let on = img.iter().filter(|&&v| v >= 100.0).count();
                assert!(
                    on > 12 && on < 400,
                    "digit {digit} style {si}: {on} pixels above threshold"
                );
            }
        }
    }

    #[test]
    fn faded_styles_lose_left_mass() {
        let faded_style = styles_for(8)
            .iter()
            .find(|s| s.fade.is_some())
            .copied()
            .unwrap();
        let balanced = render(&styles_for(8)[0], &neutral_jitter());
        let faded_img = render(&faded_style, &neutral_jitter());
        let left_on = |img: &[f64; SIDE * SIDE]| {
            img.iter()
                .enumerate()
                .filter(|&(i, &v)| (i % SIDE) < SIDE / 2 && v >= 100.0)
                .count()
        };
        assert!(left_on(&faded_img) < left_on(&balanced));
    }
}
