//! Deterministic synthetic ensembles for demos and tests: transient-shaped
//! curves (sharp rise, slow decay) with a few smooth random modes, plus a
//! helper that plants unambiguous gross outliers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::curves::FunctionalSample;

/// Generate `n` smooth transient curves on `m` grid points over 0..300
/// seconds. Curves share a peaked base shape and vary by a few smooth,
/// seeded random modes (amplitude, peak shift, tail tilt), so a two- or
/// three-component reduction captures almost all variance.
pub fn transient_ensemble(n: usize, m: usize, seed: u64) -> FunctionalSample {
    assert!(n >= 1 && m >= 2, "need n >= 1 curves and m >= 2 points");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let grid: Vec<f64> = (0..m).map(|i| 300.0 * i as f64 / (m - 1) as f64).collect();
    let t_peak = 40.0;
    let base: Vec<f64> = grid
        .iter()
        .map(|t| 550.0 + 650.0 * (t / t_peak) * (1.0 - t / t_peak).exp())
        .collect();
    // smooth derivative of the base shape, for a peak-shift mode
    let dbase: Vec<f64> = grid
        .iter()
        .map(|t| 650.0 / t_peak * (1.0 - t / t_peak).exp() * (1.0 - t / t_peak))
        .collect();
    let values = (0..n)
        .map(|_| {
            let amp: f64 = StandardNormal.sample(&mut rng);
            let shift: f64 = StandardNormal.sample(&mut rng);
            let tilt: f64 = StandardNormal.sample(&mut rng);
            let wobble: f64 = StandardNormal.sample(&mut rng);
            grid.iter()
                .enumerate()
                .map(|(k, t)| {
                    base[k] * (1.0 + 0.06 * amp)
                        - 6.0 * shift * dbase[k]
                        + 12.0 * tilt * (t / 300.0)
                        + 4.0 * wobble * (std::f64::consts::PI * t / 300.0).sin()
                })
                .collect()
        })
        .collect();
    FunctionalSample::new(grid, values, None).expect("generated sample is valid")
}

/// Replace the last `count` curves by gross outliers displaced from the
/// pointwise mean by at least `scale` times the pointwise spread, and
/// return the new sample together with the planted indices. Signs
/// alternate and gains grow per plant, so the plants stay far from the
/// bulk and from each other (a tight clump of outliers would prop up its
/// own density estimate).
pub fn plant_gross_outliers(
    sample: &FunctionalSample,
    count: usize,
    scale: f64,
) -> (FunctionalSample, Vec<usize>) {
    assert!(count < sample.n(), "cannot replace every curve");
    let mean = sample.mean_curve();
    let std = sample.pointwise_std();
    let floor = 0.1 * std.iter().fold(0.0f64, |a, b| a.max(*b));
    let n = sample.n();
    let mut values: Vec<Vec<f64>> = sample.values().to_vec();
    let mut planted = Vec::with_capacity(count);
    for k in 0..count {
        let idx = n - count + k;
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let gain = scale * (1.0 + 0.7 * k as f64);
        values[idx] = mean
            .iter()
            .zip(&std)
            .map(|(mu, s)| mu + sign * gain * (s + floor))
            .collect();
        planted.push(idx);
    }
    let rebuilt = FunctionalSample::new(
        sample.grid().to_vec(),
        values,
        Some(sample.labels().to_vec()),
    )
    .expect("planted sample stays valid");
    (rebuilt, planted)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generator_is_deterministic() {
        let a = transient_ensemble(20, 50, 7);
        let b = transient_ensemble(20, 50, 7);
        assert_eq!(a, b);
        let c = transient_ensemble(20, 50, 8);
        assert_ne!(a, c);
    }

    #[test]
    fn planted_outliers_are_far() {
        let base = transient_ensemble(30, 40, 1);
        let (s, planted) = plant_gross_outliers(&base, 3, 10.0);
        assert_eq!(planted, vec![27, 28, 29]);
        let std = base.pointwise_std();
        let mean = base.mean_curve();
        let t = std
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        for &i in &planted {
            let dev = (s.curve(i)[t] - mean[t]).abs();
            assert!(dev > 5.0 * std[t], "planted curve {i} too close");
        }
    }
}
