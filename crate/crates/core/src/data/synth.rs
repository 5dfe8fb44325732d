use rand::seq::index;
use rand::Rng as _;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use super::HsiDataset;
use crate::error::{Error, Result};
use crate::rng::{self, Stream};

/// Parameters of the synthetic cube generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub height: usize,
    pub width: usize,
    pub bands: usize,
    pub classes: usize,
    pub noise_sigma: f64,
    /// Distance of each class mean from the common offset.
    pub separation: f64,
    /// Fraction of pixels whose label is forced to 0.
    pub unlabeled_frac: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            height: 64,
            width: 64,
            bands: 8,
            classes: 4,
            noise_sigma: 0.5,
            separation: 3.0,
            unlabeled_frac: 0.0,
            seed: 1,
        }
    }
}

/// Voronoi label map over random sites; each pixel's spectrum is its class
/// mean plus i.i.d. Gaussian noise.
///
/// Class means sit at `offset + separation * u_c` for unit directions `u_c`
/// that are orthonormal whenever `classes <= bands`.
pub fn make_synthetic(cfg: &SynthConfig) -> Result<HsiDataset> {
    let (h, w, b, c) = (cfg.height, cfg.width, cfg.bands, cfg.classes);
    if c < 2 {
        return Err(Error::Config(format!("need at least 2 classes, got {c}")));
    }
    if h == 0 || w == 0 || b == 0 || h * w < c {
        return Err(Error::Config(format!("{h}x{w} image cannot hold {c} classes")));
    }
    if c > u16::MAX as usize {
        return Err(Error::Config("too many classes".into()));
    }
    if !(cfg.noise_sigma >= 0.0 && cfg.noise_sigma.is_finite()) {
        return Err(Error::Config("noise_sigma must be finite and non-negative".into()));
    }
    if !(0.0..1.0).contains(&cfg.unlabeled_frac) {
        return Err(Error::Config("unlabeled_frac must be in [0, 1)".into()));
    }
    let mut rng = rng::stream(cfg.seed, Stream::Synth, 0);
    let pixels = h * w;

    let sites: Vec<(f64, f64)> = index::sample(&mut rng, pixels, c)
        .into_iter()
        .map(|p| ((p / w) as f64, (p % w) as f64))
        .collect();
    let mut labels: Vec<u16> = (0..pixels)
        .map(|p| {
            let (y, x) = ((p / w) as f64, (p % w) as f64);
            let mut best = (f64::INFINITY, 0);
            for (i, &(sy, sx)) in sites.iter().enumerate() {
                let d = (y - sy).powi(2) + (x - sx).powi(2);
                if d < best.0 {
                    best = (d, i);
                }
            }
            best.1 as u16 + 1
        })
        .collect();

    let offset: Vec<f64> = (0..b).map(|_| rng.random_range(0.0..1.0)).collect();
    let mut dirs: Vec<Vec<f64>> = Vec::with_capacity(c);
    while dirs.len() < c {
        let mut v: Vec<f64> = (0..b).map(|_| StandardNormal.sample(&mut rng)).collect();
        if dirs.len() < b {
            for d in &dirs {
                let proj: f64 = v.iter().zip(d).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(d).for_each(|(a, b)| *a -= proj * b);
            }
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > 1e-6 {
            dirs.push(v.into_iter().map(|a| a / norm).collect());
        }
    }
    let means: Vec<Vec<f64>> = dirs
        .iter()
        .map(|d| offset.iter().zip(d).map(|(o, u)| o + cfg.separation * u).collect())
        .collect();

    let noise = Normal::new(0.0, cfg.noise_sigma).expect("validated sigma");
    let mut cube = Vec::with_capacity(pixels * b);
    for &l in &labels {
        for &m in &means[l as usize - 1] {
            let v = if cfg.noise_sigma > 0.0 {
                m + noise.sample(&mut rng)
            } else {
                m
            };
            cube.push(v as f32);
        }
    }

    let n_unlabeled = (cfg.unlabeled_frac * pixels as f64).round() as usize;
    for p in index::sample(&mut rng, pixels, n_unlabeled) {
        labels[p] = 0;
    }
    HsiDataset::new(h, w, b, c, cube, labels)
}

/// Class means used by the generator, recovered from a noise-free cube.
#[cfg(test)]
pub(crate) fn class_means(ds: &HsiDataset) -> Vec<Vec<f64>> {
    let mut sums = vec![vec![0.0; ds.bands()]; ds.classes()];
    let mut counts = vec![0usize; ds.classes()];
    for p in ds.labeled_pixels() {
        let c = ds.labels()[p] as usize - 1;
        counts[c] += 1;
        sums[c].iter_mut().zip(ds.spectrum(p)).for_each(|(s, &v)| *s += v as f64);
    }
    sums.into_iter()
        .zip(counts)
        .map(|(s, n)| s.into_iter().map(|v| v / n as f64).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noise_free_pixels_equal_their_class_mean() {
        let cfg = SynthConfig {
            noise_sigma: 0.0,
            height: 16,
            width: 16,
            ..SynthConfig::default()
        };
        let ds = make_synthetic(&cfg).unwrap();
        let mut first: Vec<Option<Vec<f32>>> = vec![None; cfg.classes];
        for p in 0..ds.n_pixels() {
            let c = ds.labels()[p] as usize - 1;
            let s = ds.spectrum(p).to_vec();
            match &first[c] {
                None => first[c] = Some(s),
                Some(f) => assert_eq!(f, &s),
            }
        }
        assert!(first.iter().all(Option::is_some));
    }

    #[test]
    fn rejects_single_class() {
        let cfg = SynthConfig {
            classes: 1,
            ..SynthConfig::default()
        };
        assert!(make_synthetic(&cfg).is_err());
    }

    #[test]
    fn unlabeled_fraction_and_determinism() {
        let cfg = SynthConfig {
            unlabeled_frac: 0.1,
            ..SynthConfig::default()
        };
        let a = make_synthetic(&cfg).unwrap();
        let zeros = a.labels().iter().filter(|&&l| l == 0).count();
        assert_eq!(zeros, 410);
        assert_eq!(a, make_synthetic(&cfg).unwrap());
    }

    #[test]
    fn means_are_separated() {
        let cfg = SynthConfig {
            noise_sigma: 0.0,
            ..SynthConfig::default()
        };
        let m = class_means(&make_synthetic(&cfg).unwrap());
        for i in 0..m.len() {
            for j in 0..i {
                let d: f64 = m[i].iter().zip(&m[j]).map(|(a, b)| (a - b).powi(2)).sum();
                assert!((d.sqrt() - 3.0 * 2f64.sqrt()).abs() < 1e-5);
            }
        }
    }
}
