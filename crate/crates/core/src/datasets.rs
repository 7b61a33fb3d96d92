//! Synthetic cross-manifold datasets.
//!
//! Every generator samples uniformly on its manifolds with a seeded
//! ChaCha8 stream, so a seed fully determines the output. Labels follow the
//! order in which the manifolds are listed.

use std::f64::consts::PI;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{MfpcError, Result};
use crate::types::Dataset;

pub const SYNTHETIC_NAMES: [&str; 4] = ["haws", "lpe", "sine2", "spiral"];

/// Generates the named synthetic dataset.
pub fn generate(name: &str, seed: u64) -> Result<Dataset> {
    match name {
        "haws" => Ok(gen_haws(seed)),
        "lpe" => Ok(gen_lpe(seed)),
        "sine2" => Ok(gen_sine2(seed)),
        "spiral" => Ok(gen_spiral(seed)),
        _ => Err(MfpcError::UnknownDataset {
            name: name.to_owned(),
            valid: SYNTHETIC_NAMES.iter().map(|s| s.to_string()).collect(),
        }),
    }
}

fn unit_sphere_point(rng: &mut ChaCha8Rng) -> [f64; 3] {
    loop {
        let v: [f64; 3] = [
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
        ];
        let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if norm > 1e-12 {
            return [v[0] / norm, v[1] / norm, v[2] / norm];
        }
    }
}

fn assemble(groups: Vec<Vec<Vec<f64>>>) -> Dataset {
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (label, group) in groups.into_iter().enumerate() {
        labels.extend(std::iter::repeat_n(label, group.len()));
        rows.extend(group);
    }
    Dataset::from_rows(&rows, Some(labels)).expect("generated samples are finite")
}

/// A vertical segment `(0, 0, t)`, `t` in `[-2, 2]` (123 samples), crossing two
/// unit spheres centered at `(0, 0, -1)` and `(0, 0, 1)` (100 samples each).
pub fn gen_haws(seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let line = (0..123)
        .map(|_| vec![0.0, 0.0, rng.random_range(-2.0..=2.0)])
        .collect();
    let mut sphere = |cz: f64| -> Vec<Vec<f64>> {
        (0..100)
            .map(|_| {
                let p = unit_sphere_point(&mut rng);
                vec![p[0], p[1], p[2] + cz]
            })
            .collect()
    };
    let lower = sphere(-1.0);
    let upper = sphere(1.0);
    assemble(vec![line, lower, upper])
}

pub const LPE_ELLIPSOID_AXES: [f64; 3] = [1.5, 1.0, 0.6];

/// A vertical segment `(0, 0, t)`, `t` in `[-2, 2]`, the square patch
/// `|x|, |y| <= 1.5` of the plane `z = -1`, and the surface of an
/// axis-aligned ellipsoid centered at `(0, 0, 1)`; 100 samples each.
pub fn gen_lpe(seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let line = (0..100)
        .map(|_| vec![0.0, 0.0, rng.random_range(-2.0..=2.0)])
        .collect();
    let plane = (0..100)
        .map(|_| vec![rng.random_range(-1.5..=1.5), rng.random_range(-1.5..=1.5), -1.0])
        .collect();
    let [a, b, c] = LPE_ELLIPSOID_AXES;
    // Rejection on the area element makes the surface density uniform.
    let max_stretch = (b * c).max(a * c).max(a * b);
    let mut ellipsoid = Vec::with_capacity(100);
    while ellipsoid.len() < 100 {
        let u = unit_sphere_point(&mut rng);
        let stretch = ((b * c * u[0]).powi(2) + (a * c * u[1]).powi(2) + (a * b * u[2]).powi(2)).sqrt();
        if rng.random::<f64>() * max_stretch <= stretch {
            ellipsoid.push(vec![a * u[0], b * u[1], c * u[2] + 1.0]);
        }
    }
    assemble(vec![line, plane, ellipsoid])
}

/// `y = sin x` and `y = -sin x` for `x` in `[0, 2 pi]`, 61 samples each.
pub fn gen_sine2(seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut curve = |sign: f64| -> Vec<Vec<f64>> {
        (0..61)
            .map(|_| {
                let x: f64 = rng.random_range(0.0..=2.0 * PI);
                vec![x, sign * x.sin()]
            })
            .collect()
    };
    let up = curve(1.0);
    let down = curve(-1.0);
    assemble(vec![up, down])
}

/// Two interleaved helices `(cos t, sin t, t / pi)` and
/// `(-cos t, -sin t, t / pi)`, `t` in `[0, 4 pi]` (41 samples each), around
/// their axis `(0, 0, s)`, `s` in `[0, 4]` (40 samples).
pub fn gen_spiral(seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut helix = |sign: f64| -> Vec<Vec<f64>> {
        (0..41)
            .map(|_| {
                let t: f64 = rng.random_range(0.0..=4.0 * PI);
                vec![sign * t.cos(), sign * t.sin(), t / PI]
            })
            .collect()
    };
    let first = helix(1.0);
    let second = helix(-1.0);
    let axis = (0..40)
        .map(|_| vec![0.0, 0.0, rng.random_range(0.0..=4.0)])
        .collect();
    assemble(vec![first, second, axis])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn class_rows(data: &Dataset, class: usize) -> Vec<Vec<f64>> {
        let labels = data.labels().unwrap();
        (0..data.n_samples())
            .filter(|&j| labels[j] == class)
            .map(|j| data.sample(j).iter().copied().collect())
            .collect()
    }

    #[test]
    fn shapes_match_the_reference_table() {
        let cases = [("haws", 323, 3, 3), ("lpe", 300, 3, 3), ("sine2", 122, 2, 2), ("spiral", 122, 3, 3)];
        for (name, m, n, k) in cases {
            let d = generate(name, 0).unwrap();
            assert_eq!((d.n_samples(), d.n_features(), d.n_classes()), (m, n, k), "{name}");
        }
        assert!(matches!(generate("foo", 0), Err(MfpcError::UnknownDataset { .. })));
    }

    #[test]
    fn haws_manifolds() {
        let d = gen_haws(0);
        for r in class_rows(&d, 0) {
            assert!(r[0].abs() < 1e-9 && r[1].abs() < 1e-9);
        }
        for (class, cz) in [(1, -1.0), (2, 1.0)] {
            for r in class_rows(&d, class) {
                let radius = (r[0] * r[0] + r[1] * r[1] + (r[2] - cz) * (r[2] - cz)).sqrt();
                assert!((radius - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn lpe_manifolds() {
        let d = gen_lpe(0);
        let [a, b, c] = LPE_ELLIPSOID_AXES;
        for r in class_rows(&d, 1) {
            assert!((r[2] + 1.0).abs() < 1e-9);
        }
        for r in class_rows(&d, 2) {
            let q = (r[0] / a).powi(2) + (r[1] / b).powi(2) + ((r[2] - 1.0) / c).powi(2);
            assert!((q - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn sine_curves() {
        let d = gen_sine2(0);
        for (class, sign) in [(0, 1.0), (1, -1.0)] {
            for r in class_rows(&d, class) {
                assert!((r[1] - sign * r[0].sin()).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn spiral_classes_do_not_touch() {
        let d = gen_spiral(0);
        let labels = d.labels().unwrap();
        let x = d.features();
        let mut closest = f64::INFINITY;
        for i in 0..d.n_samples() {
            for j in i + 1..d.n_samples() {
                if labels[i] != labels[j] {
                    closest = closest.min((x.column(i) - x.column(j)).norm());
                }
            }
        }
        assert!(closest > 0.0);
    }

    #[test]
    fn generators_are_deterministic() {
        for name in SYNTHETIC_NAMES {
            assert_eq!(generate(name, 5).unwrap(), generate(name, 5).unwrap());
            assert_ne!(generate(name, 5).unwrap(), generate(name, 6).unwrap());
        }
    }
}
