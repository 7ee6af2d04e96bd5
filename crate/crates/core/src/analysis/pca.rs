use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::Matrix;
use crate::seed;

/// Power-iteration stopping threshold on the change of the unit vector.
pub const POWER_TOL: f64 = 1e-10;
pub const MAX_POWER_ITERATIONS: usize = 20_000;

/// Top-k principal components of a pool.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// `k` orthonormal rows of length `D`.
    pub components: Vec<Vec<f64>>,
    pub eigenvalues: Vec<f64>,
    pub explained_ratio: Vec<f64>,
    pub total_variance: f64,
}

/// Centered data with covariance-vector products `C·v = Xcᵀ(Xc·v)/(n−1)`.
struct Centered {
    x: Matrix<f64>,
    denom: f64,
}

impl Centered {
    fn apply(&self, v: &[f64]) -> Vec<f64> {
        let d = self.x.cols();
        let mut out = vec![0.0; d];
        for r in 0..self.x.rows() {
            let row = self.x.row(r);
            let s: f64 = row.iter().zip(v).map(|(a, b)| a * b).sum();
            if s != 0.0 {
                for (o, a) in out.iter_mut().zip(row) {
                    *o += s * a;
                }
            }
        }
        out.iter_mut().for_each(|o| *o /= self.denom);
        out
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn orthogonalize(v: &mut [f64], basis: &[Vec<f64>]) {
    for u in basis {
        let p = dot(v, u);
        v.iter_mut().zip(u).for_each(|(x, y)| *x -= p * y);
    }
}

/// Flips `v` so its largest-magnitude entry (first on ties) is positive.
pub fn canonical_sign(v: &mut [f64]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v[best] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

impl PcaModel {
    /// Covariance with `1/(n−1)`, eigenvectors by deflated power iteration.
    pub fn fit(pool: &Matrix<f32>, k: usize) -> Result<Self> {
        let (n, d) = pool.shape();
        if n < 2 {
            return Err(Error::EmptyInput(format!("pca needs at least 2 vectors, got {n}")));
        }
        if k == 0 || k > d {
            return Err(Error::Config(format!("pca k = {k} must be in 1..={d}")));
        }
        let mut mean = vec![0.0f64; d];
        for r in 0..n {
            mean.iter_mut().zip(pool.row(r)).for_each(|(m, v)| *m += *v as f64);
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);
        let mut x = pool.cast::<f64>();
        for r in 0..n {
            x.row_mut(r).iter_mut().zip(&mean).for_each(|(v, m)| *v -= m);
        }
        let total_variance = (0..n)
            .map(|r| x.row(r).iter().map(|v| v * v).sum::<f64>())
            .sum::<f64>()
            / (n - 1) as f64;
        if total_variance.is_nan() || total_variance <= 0.0 {
            return Err(Error::Degenerate("all vectors identical; covariance is zero".into()));
        }
        let op = Centered {
            x,
            denom: (n - 1) as f64,
        };

        let mut rng = seed::rng(seed::stage_seed(0, "pca/start"));
        let mut components: Vec<Vec<f64>> = Vec::with_capacity(k);
        let mut eigenvalues = Vec::with_capacity(k);
        let floor = total_variance * 1e-13;
        for _ in 0..k {
            let mut v: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
            orthogonalize(&mut v, &components);
            let nv = norm(&v);
            v.iter_mut().for_each(|x| *x /= nv);
            for _ in 0..MAX_POWER_ITERATIONS {
                let mut w = op.apply(&v);
                orthogonalize(&mut w, &components);
                let nw = norm(&w);
                if nw <= floor {
                    // Remaining spectrum is numerically zero; any unit vector
                    // orthogonal to the found components is an eigenvector.
                    break;
                }
                w.iter_mut().for_each(|x| *x /= nw);
                let change = v.iter().zip(&w).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                v = w;
                if change < POWER_TOL {
                    break;
                }
            }
            orthogonalize(&mut v, &components);
            let nv = norm(&v);
            v.iter_mut().for_each(|x| *x /= nv);
            canonical_sign(&mut v);
            eigenvalues.push(dot(&v, &op.apply(&v)).max(0.0));
            components.push(v);
        }
        let explained_ratio = eigenvalues.iter().map(|l| (l / total_variance).clamp(0.0, 1.0)).collect();
        Ok(PcaModel {
            mean,
            components,
            eigenvalues,
            explained_ratio,
            total_variance,
        })
    }

    pub fn dims(&self) -> usize {
        self.mean.len()
    }

    pub fn k(&self) -> usize {
        self.components.len()
    }

    fn check(&self, cols: usize) -> Result<()> {
        if cols != self.dims() {
            return Err(Error::Shape {
                op: "pca",
                left: (1, cols),
                right: (1, self.dims()),
            });
        }
        Ok(())
    }

    /// `components · (v − mean)`.
    pub fn project_vec(&self, v: &[f32]) -> Result<Vec<f64>> {
        self.check(v.len())?;
        let centered: Vec<f64> = v.iter().zip(&self.mean).map(|(x, m)| *x as f64 - m).collect();
        Ok(self.components.iter().map(|c| dot(c, &centered)).collect())
    }

    pub fn project(&self, m: &Matrix<f32>) -> Result<Matrix<f64>> {
        self.check(m.cols())?;
        let mut data = Vec::with_capacity(m.rows() * self.k());
        for r in 0..m.rows() {
            data.extend(self.project_vec(m.row(r))?);
        }
        Matrix::from_vec(m.rows(), self.k(), data)
    }

    /// `mean + Σ pᵢ·componentᵢ`.
    pub fn reconstruct(&self, p: &[f64]) -> Result<Vec<f64>> {
        if p.len() != self.k() {
            return Err(Error::Shape {
                op: "pca reconstruct",
                left: (1, p.len()),
                right: (1, self.k()),
            });
        }
        let mut out = self.mean.clone();
        for (c, w) in self.components.iter().zip(p) {
            out.iter_mut().zip(c).for_each(|(o, x)| *o += w * x);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{prop_assert, proptest, ProptestConfig};

    fn random(rows: usize, cols: usize, seed: u64) -> Matrix<f32> {
        let mut rng = crate::seed::rng(seed);
        // Distinct per-column scales keep the spectrum well separated.
        Matrix::from_vec(
            rows,
            cols,
            (0..rows * cols)
                .map(|i| rng.gen_range(-1.0f32..1.0) * (1.0 + (i % cols) as f32))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn points_on_diagonal_line() {
        let pts = Matrix::from_rows(&[vec![0.0f32, 0.0], vec![1.0, 1.0], vec![2.0, 2.0], vec![-3.0, -3.0]]).unwrap();
        let p = PcaModel::fit(&pts, 2).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((p.components[0][0] - h).abs() < 1e-6 && (p.components[0][1] - h).abs() < 1e-6);
        assert!(p.explained_ratio[1] < 1e-9);
        assert!((p.explained_ratio[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn projection_variance_equals_eigenvalue() {
        let x = random(50, 6, 1);
        let p = PcaModel::fit(&x, 6).unwrap();
        let proj = p.project(&x).unwrap();
        for j in 0..6 {
            let var = (0..50).map(|r| proj.get(r, j).powi(2)).sum::<f64>() / 49.0;
            assert!((var - p.eigenvalues[j]).abs() < 1e-5, "{j}: {var} vs {}", p.eigenvalues[j]);
        }
    }

    #[test]
    fn components_orthonormal_and_ratios_ordered() {
        let p = PcaModel::fit(&random(40, 8, 2), 8).unwrap();
        for i in 0..8 {
            for j in 0..8 {
                let d = dot(&p.components[i], &p.components[j]);
                assert!((d - if i == j { 1.0 } else { 0.0 }).abs() < 1e-5);
            }
        }
        assert!(p.explained_ratio.windows(2).all(|w| w[0] >= w[1] - 1e-12));
        assert!((p.explained_ratio.iter().sum::<f64>() - 1.0).abs() < 1e-4);
    }

    #[test]
    fn full_rank_round_trip_and_mean_to_origin() {
        let x = random(30, 5, 3);
        let p = PcaModel::fit(&x, 5).unwrap();
        let mean: Vec<f32> = p.mean.iter().map(|v| *v as f32).collect();
        assert!(p.project_vec(&mean).unwrap().iter().all(|v| v.abs() < 1e-5));
        for r in 0..30 {
            let back = p.reconstruct(&p.project_vec(x.row(r)).unwrap()).unwrap();
            for (a, b) in back.iter().zip(x.row(r)) {
                assert!((a - *b as f64).abs() < 1e-4);
            }
        }
    }

    #[test]
    fn rank_deficient_pool_still_yields_a_basis() {
        // 3 points in 4-d span a 2-d affine subspace.
        let x = Matrix::from_rows(&[vec![1.0f32, 0.0, 0.0, 0.0], vec![0.0, 1.0, 0.0, 0.0], vec![0.0, 0.0, 0.0, 0.0]]).unwrap();
        let p = PcaModel::fit(&x, 4).unwrap();
        assert!(p.eigenvalues[2].abs() < 1e-9 && p.eigenvalues[3].abs() < 1e-9);
        for i in 0..4 {
            assert!((norm(&p.components[i]) - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn errors() {
        assert!(matches!(PcaModel::fit(&Matrix::filled(5, 3, 2.0), 1), Err(Error::Degenerate(_))));
        assert!(matches!(PcaModel::fit(&random(5, 3, 4), 4), Err(Error::Config(_))));
        assert!(PcaModel::fit(&random(1, 3, 4), 1).is_err());
        let p = PcaModel::fit(&random(5, 3, 4), 2).unwrap();
        assert!(matches!(p.project_vec(&[1.0, 2.0]), Err(Error::Shape { .. })));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn invariant_to_permutation_and_shift(seed in 0u64..1000, shift in -50.0f32..50.0) {
            let x = random(25, 4, seed);
            let base = PcaModel::fit(&x, 2).unwrap();
            let mut rows: Vec<usize> = (0..25).collect();
            rows.reverse();
            let moved = x.select_rows(&rows).map(|v| v + shift);
            let other = PcaModel::fit(&moved, 2).unwrap();
            for (a, b) in base.components.iter().zip(&other.components) {
                for (x, y) in a.iter().zip(b) {
                    prop_assert!((x - y).abs() < 1e-5);
                }
            }
        }
    }
}
