//! Data simulation: sampling from a known Bernoulli mixture, and a
//! mixture-of-glyphs digit corpus for offline demos and tests.
//!
//! The corpus generator builds a library of product-Bernoulli components
//! whose probability maps are rendered digit glyphs (several handwriting
//! styles per class, some deliberately sitting close to a confusable
//! class), then samples binary pixels from the mixture and dresses them in
//! grayscale. Digits therefore follow exactly the model family the mixture
//! code fits, with known sub-label structure, while classifiers face
//! genuinely overlapping sample clouds.

pub mod glyphs;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::{BinaryImageSet, ImageSet, LabelSet};
use crate::mixture::BernoulliMixture;
use crate::seeding::{rng_for_stream, rng_from_seed};

/// Draws `n` binary vectors from the mixture.
pub fn sample_mixture(model: &BernoulliMixture, n: usize, seed: u64) -> BinaryImageSet {
    let mut rng = rng_from_seed(seed);
    let d = model.d();
    let mut rows = Vec::with_capacity(n * d);
    for _ in 0..n {
        // pick a component by its mixing weight
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let mut k = model.k() - 1;
        for (i, &w) in model.pi().iter().enumerate() {
            acc += w;
            if u < acc {
                k = i;
                break;
            }
        }
        for &p in model.component(k) {
            rows.push(u8::from(rng.gen::<f64>() < p));
        }
    }
    BinaryImageSet::from_rows(n, d, rows).expect("sampled rows are 0/1")
}

/// One ground-truth component of the corpus mixture.
pub struct CorpusComponent {
    pub label: u8,
    pub weight: f64,
    /// Per-pixel Bernoulli parameters, 28x28.
    pub p: Vec<f64>,
}

/// Grayscale dressing and residual binary noise.
#[derive(Debug, Clone, Copy)]
pub struct NoiseParams {
    /// Intensity range of ON pixels.
    pub bright: (f64, f64),
    /// Intensity range of OFF pixels.
    pub dark: (f64, f64),
    /// Probability that an OFF pixel flips bright (salt).
    pub salt: f64,
    /// Probability that an ON pixel flips dark (pepper).
    pub pepper: f64,
}

impl Default for NoiseParams {
    fn default() -> Self {
        Self {
            bright: (110.0, 250.0),
            dark: (0.0, 90.0),
            salt: 0.002,
            pepper: 0.003,
        }
    }
}

/// Corpus generation parameters.
#[derive(Debug, Clone, Copy)]
pub struct CorpusConfig {
    pub n: usize,
    pub seed: u64,
    pub noise: NoiseParams,
}

impl CorpusConfig {
    pub fn new(n: usize, seed: u64) -> Self {
        Self {
            n,
            seed,
            noise: NoiseParams::default(),
        }
    }
}

const P_BACKGROUND: f64 = 0.008;
const P_CORE: f64 = 0.96;

/// Maps rendered intensity to an ON probability: crisp core, soft edges.
fn intensity_to_probability(gray: f64) -> f64 {
    let t = ((gray - 55.0) / 110.0).clamp(0.0, 1.0);
    let s = t * t * (3.0 - 2.0 * t); // smoothstep over the edge band
    P_BACKGROUND + (P_CORE - P_BACKGROUND) * s
}

/// Renders the ground-truth component library: a few alignment variants per
/// glyph style, faded styles at increasing depths. Deterministic.
pub fn component_library() -> Vec<CorpusComponent> {
    let mut components = Vec::new();
    for digit in 0..10u8 {
        let styles = glyphs::styles_for(digit);
        for (si, style) in styles.iter().enumerate() {
            let variants = style.variants.unwrap_or(if style.weight >= 1.0 {
                3
            } else if style.weight >= 0.5 {
                2
            } else {
                1
            });
            for v in 0..variants {
                let (kd, ks) = style.alignment_key.unwrap_or((digit, si));
                let mut rng = rng_for_stream(
                    0x51DE,
                    ((kd as u64) << 16) | ((ks as u64) << 8) | v as u64,
                );
                let mut warp = [(0.0, 0.0); glyphs::WARP_GRID * glyphs::WARP_GRID];
                for cell in warp.iter_mut() {
                    *cell = (rng.gen_range(-0.9..0.9), rng.gen_range(-0.9..0.9));
                }
                let jitter = glyphs::Jitter {
                    rotation_deg: rng.gen_range(-3.5..3.5),
                    scale: rng.gen_range(0.93..1.07),
                    dx: rng.gen_range(-1.1..1.1),
                    dy: rng.gen_range(-1.1..1.1),
                    stroke_width: rng.gen_range(1.05..1.3),
                    brightness: 1.0,
                    warp,
                    shape_seed: rng.gen(),
                    shape_amp: 0.55,
                    fade_mult: if style.fade.is_some() {
                        0.80 + 0.25 * v as f64
                    } else {
                        1.0
                    },
                };
                let img = glyphs::render(style, &jitter);
                let p: Vec<f64> = img.iter().map(|&g| intensity_to_probability(g)).collect();
                components.push(CorpusComponent {
                    label: digit,
                    weight: style.weight / variants as f64,
                    p,
                });
            }
        }
    }
    components
}

/// The corpus mixture as a [`BernoulliMixture`] plus per-component labels
/// (ground truth for tests).
pub fn corpus_mixture() -> (BernoulliMixture, Vec<u8>) {
    let library = component_library();
    let total: f64 = library.iter().map(|c| c.weight).sum();
    let pi: Vec<f64> = library.iter().map(|c| c.weight / total).collect();
    let mut p = Vec::with_capacity(library.len() * glyphs::SIDE * glyphs::SIDE);
    for c in &library {
        p.extend_from_slice(&c.p);
    }
    let labels: Vec<u8> = library.iter().map(|c| c.label).collect();
    (
        BernoulliMixture::new(pi, p, glyphs::SIDE * glyphs::SIDE)
            .expect("library parameters are clamped"),
        labels,
    )
}

fn sample_digit(
    component: &CorpusComponent,
    noise: &NoiseParams,
    rng: &mut ChaCha8Rng,
    pixels: &mut Vec<u8>,
) {
    for &p in &component.p {
        let mut on = rng.gen::<f64>() < p;
        // residual threshold-crossing noise
        let flip: f64 = rng.gen();
        if on && flip < noise.pepper {
            on = false;
        } else if !on && flip < noise.salt {
            on = true;
        }
        let value = if on {
            rng.gen_range(noise.bright.0..noise.bright.1)
        } else {
            rng.gen_range(noise.dark.0..noise.dark.1)
        };
        pixels.push(value.clamp(0.0, 255.0) as u8);
    }
}

/// Generates a labeled digit corpus. Digit `i` depends only on
/// `(config.seed, i)`, so prefixes of a longer corpus equal shorter ones.
pub fn digit_corpus(config: &CorpusConfig) -> (ImageSet, LabelSet) {
    let side = glyphs::SIDE;
    let library = component_library();
    let total_weight: f64 = library.iter().map(|c| c.weight).sum();
    let mut pixels = Vec::with_capacity(config.n * side * side);
    let mut labels = Vec::with_capacity(config.n);
    for i in 0..config.n {
        let mut rng = rng_for_stream(config.seed, i as u64);
        let mut pick = rng.gen_range(0.0..total_weight);
        let mut component = &library[library.len() - 1];
        for c in &library {
            if pick < c.weight {
                component = c;
                break;
            }
            pick -= c.weight;
        }
        sample_digit(component, &config.noise, &mut rng, &mut pixels);
        labels.push(component.label);
    }
    (
        ImageSet::new(config.n, side, side, pixels).expect("geometry is fixed"),
        LabelSet::new(labels).expect("labels in range"),
    )
}

/// The 20-digit committed fixture: label sequence chosen so the head-of-file
/// prefix supports a full smoke-scale pipeline (majority label 8 in the
/// first 12 records, spare records beyond for the all-real case arm).
pub const FIXTURE_LABELS: [u8; 20] = [
    8, 8, 3, 8, 1, 7, 8, 5, 0, 9, 2, 6, 8, 3, 4, 1, 0, 9, 5, 2,
];

/// Deterministic tiny fixture used by offline tests.
pub fn fixture_corpus() -> (ImageSet, LabelSet) {
    let side = glyphs::SIDE;
    let library = component_library();
    let noise = NoiseParams::default();
    let mut pixels = Vec::with_capacity(20 * side * side);
    for (i, &digit) in FIXTURE_LABELS.iter().enumerate() {
        let mut rng = rng_for_stream(0xF1C7_0000, i as u64);
        let candidates: Vec<&CorpusComponent> =
            library.iter().filter(|c| c.label == digit).collect();
        let component = candidates[rng.gen_range(0..candidates.len())];
        sample_digit(component, &noise, &mut rng, &mut pixels);
    }
    (
        ImageSet::new(20, side, side, pixels).expect("geometry is fixed"),
        LabelSet::new(FIXTURE_LABELS.to_vec()).expect("labels in range"),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mixture_sampling_is_seeded_and_matches_dimensions() {
        let model = BernoulliMixture::new(
            vec![0.5, 0.5],
            vec![0.9, 0.9, 0.1, 0.1, 0.1, 0.9],
            3,
        )
        .unwrap();
        let a = sample_mixture(&model, 40, 3);
        let b = sample_mixture(&model, 40, 3);
        assert_eq!(a, b);
        assert_eq!(a.n(), 40);
        assert_eq!(a.d(), 3);
    }

    #[test]
    fn mixture_sampling_tracks_parameters() {
        let model = BernoulliMixture::new(vec![1.0], vec![0.9, 0.1], 2).unwrap();
        let x = sample_mixture(&model, 2000, 7);
        let on0: usize = (0..x.n()).filter(|&i| x.row(i)[0] == 1).count();
        let on1: usize = (0..x.n()).filter(|&i| x.row(i)[1] == 1).count();
        assert!((on0 as f64 / 2000.0 - 0.9).abs() < 0.03);
        assert!((on1 as f64 / 2000.0 - 0.1).abs() < 0.03);
    }

    #[test]
    fn library_is_valid_and_covers_all_classes() {
        let library = component_library();
        assert!(library.len() > 40, "library has {} components", library.len());
        for digit in 0..10u8 {
            assert!(library.iter().any(|c| c.label == digit));
        }
        for c in &library {
            assert!(c.p.iter().all(|&p| (0.0..=1.0).contains(&p)));
            let on_core = c.p.iter().filter(|&&p| p > 0.9).count();
            assert!(on_core > 12, "component for {} too sparse", c.label);
        }
        let (model, labels) = corpus_mixture();
        assert_eq!(model.k(), library.len());
        assert_eq!(labels.len(), library.len());
    }

    #[test]
    fn corpus_is_deterministic_and_prefix_stable() {
        let a = digit_corpus(&CorpusConfig::new(30, 5));
        let b = digit_corpus(&CorpusConfig::new(30, 5));
        assert_eq!(a, b);
        let long = digit_corpus(&CorpusConfig::new(60, 5));
        assert_eq!(a.0.pixels(), &long.0.pixels()[..30 * 28 * 28]);
        assert_eq!(a.1.values(), &long.1.values()[..30]);
    }

    #[test]
    fn corpus_labels_cover_all_classes() {
        let (_, labels) = digit_corpus(&CorpusConfig::new(500, 1));
        let mut counts = [0usize; 10];
        for &l in labels.values() {
            counts[l as usize] += 1;
        }
        assert!(counts.iter().all(|&c| c > 15), "counts {counts:?}");
    }

    #[test]
    fn fixture_matches_declared_labels() {
        let (images, labels) = fixture_corpus();
        assert_eq!(images.n(), 20);
        assert_eq!(labels.values(), &FIXTURE_LABELS);
        // digits carry actual strokes
        for i in 0..20 {
            let on = images.row(i).iter().filter(|&&p| p >= 100).count();
            assert!(on > 15, "fixture digit {i} too sparse: {on}");
        }
    }
}
