use nalgebra::{DMatrix, SymmetricEigen};

use crate::data::{FeatureCube, HsiDataset};
use crate::error::{Error, Result};

/// Principal axes of a set of spectra.
///
/// Components are unit vectors sorted by decreasing eigenvalue of the sample
/// covariance (normalized by `n - 1`). Each component's largest-magnitude
/// coordinate is positive.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaBasis {
    mean: Vec<f64>,
    /// `k` rows of length `bands`.
    components: Vec<Vec<f64>>,
    eigenvalues: Vec<f64>,
}

/// Fits PCA on every pixel of the cube.
pub fn fit_pca(ds: &HsiDataset, k: usize) -> Result<PcaBasis> {
    let data: Vec<f64> = ds.cube().iter().map(|&v| v as f64).collect();
    fit_pca_rows(&data, ds.n_pixels(), ds.bands(), k)
}

/// Fits PCA on `n` row-major observations of dimension `dim`.
pub fn fit_pca_rows(data: &[f64], n: usize, dim: usize, k: usize) -> Result<PcaBasis> {
    if k == 0 || k > dim {
        return Err(Error::Config(format!("cannot keep {k} of {dim} components")));
    }
    if n < 2 {
        return Err(Error::Config("PCA needs at least two observations".into()));
    }
    if data.len() != n * dim {
        return Err(Error::Config("PCA data size mismatch".into()));
    }
    let mut mean = vec![0.0; dim];
    for row in data.chunks_exact(dim) {
        mean.iter_mut().zip(row).for_each(|(m, v)| *m += v);
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut cov = DMatrix::<f64>::zeros(dim, dim);
    let mut centered = vec![0.0; dim];
    for row in data.chunks_exact(dim) {
        centered.iter_mut().zip(row.iter().zip(&mean)).for_each(|(c, (v, m))| *c = v - m);
        for i in 0..dim {
            for j in 0..=i {
                cov[(i, j)] += centered[i] * centered[j];
            }
        }
    }
    for i in 0..dim {
        for j in 0..=i {
            let v = cov[(i, j)] / (n as f64 - 1.0);
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }
    if cov.trace() <= 0.0 {
        return Err(Error::Config("data has zero variance".into()));
    }
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let mut components = Vec::with_capacity(k);
    let mut eigenvalues = Vec::with_capacity(k);
    for &i in order.iter().take(k) {
        let mut v: Vec<f64> = eig.eigenvectors.column(i).iter().copied().collect();
        let lead = v
            .iter()
            .enumerate()
            .fold(0, |best, (j, x)| if x.abs() > v[best].abs() { j } else { best });
        if v[lead] < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        components.push(v);
        eigenvalues.push(eig.eigenvalues[i].max(0.0));
    }
    Ok(PcaBasis {
        mean,
        components,
        eigenvalues,
    })
}

impl PcaBasis {
    pub fn k(&self) -> usize {
        self.components.len()
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn components(&self) -> &[Vec<f64>] {
        &self.components
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Coordinates of `x` on the first `k` components.
    pub fn project_k(&self, x: &[f64], k: usize, out: &mut [f64]) {
        for (o, comp) in out.iter_mut().zip(&self.components[..k]) {
            *o = comp.iter().zip(x.iter().zip(&self.mean)).map(|(c, (v, m))| c * (v - m)).sum();
        }
    }

    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.k()];
        self.project_k(x, self.k(), &mut out);
        out
    }

    pub fn reconstruct(&self, coords: &[f64]) -> Vec<f64> {
        let mut x = self.mean.clone();
        for (c, comp) in coords.iter().zip(&self.components) {
            x.iter_mut().zip(comp).for_each(|(xi, v)| *xi += c * v);
        }
        x
    }

    /// Projects every pixel onto the first `k` components.
    pub fn project_dataset(&self, ds: &HsiDataset, k: usize) -> Result<FeatureCube> {
        if k == 0 || k > self.k() || ds.bands() != self.dim() {
            return Err(Error::Config(format!(
                "cannot project {} bands onto {k} of {} components",
                ds.bands(),
                self.k()
            )));
        }
        let mut data = vec![0.0; ds.n_pixels() * k];
        let mut x = vec![0.0; ds.bands()];
        for p in 0..ds.n_pixels() {
            x.iter_mut().zip(ds.spectrum(p)).for_each(|(a, &b)| *a = b as f64);
            self.project_k(&x, k, &mut data[p * k..(p + 1) * k]);
        }
        FeatureCube::new(ds.height(), ds.width(), k, data)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn axis_aligned_first_component() {
        // Large spread on axis 0, small on axis 1.
        let data = [3.0, 0.0, -3.0, 0.0, 0.0, 0.1, 0.0, -0.1];
        let pca = fit_pca_rows(&data, 4, 2, 1).unwrap();
        let c = &pca.components()[0];
        assert!((c[0] - 1.0).abs() < 1e-12 && c[1].abs() < 1e-12);
    }

    #[test]
    fn full_basis_reconstructs() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let data: Vec<f64> = (0..50 * 8).map(|_| rng.random_range(-2.0..2.0)).collect();
        let pca = fit_pca_rows(&data, 50, 8, 8).unwrap();
        for row in data.chunks_exact(8) {
            let back = pca.reconstruct(&pca.project(row));
            for (a, b) in back.iter().zip(row) {
                assert!((a - b).abs() < 1e-8);
            }
        }
        for (i, a) in pca.components().iter().enumerate() {
            for (j, b) in pca.components().iter().enumerate() {
                let d: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
                assert!((d - if i == j { 1.0 } else { 0.0 }).abs() < 1e-8);
            }
        }
        assert!(pca.eigenvalues().windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn errors() {
        assert!(fit_pca_rows(&[1.0, 2.0, 1.0, 2.0], 2, 2, 1).is_err());
        assert!(fit_pca_rows(&[1.0, 2.0, 3.0, 4.0], 2, 2, 3).is_err());
    }
}
