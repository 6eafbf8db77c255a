use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 100;
const OFF_DIAGONAL_TOLERANCE: f64 = 1e-10;
const SIGN_THRESHOLD: f64 = 1e-9;

/// Principal axes of a point set.
#[derive(Clone, Debug, PartialEq)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// Orthonormal axes by descending variance.
    pub components: Vec<Vec<f64>>,
    /// Eigenvalues of the sample covariance matching `components`.
    pub explained_variance: Vec<f64>,
    /// Sum of all eigenvalues, including those of dropped components.
    pub total_variance: f64,
}

impl PcaModel {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn k(&self) -> usize {
        self.components.len()
    }

    /// Coordinates of `x` along each component.
    pub fn project(&self, x: &[f32]) -> Vec<f64> {
        self.components
            .iter()
            .map(|c| {
                c.iter()
                    .zip(x)
                    .zip(&self.mean)
                    .map(|((c, &x), m)| c * (f64::from(x) - m))
                    .sum()
            })
            .collect()
    }

    /// Maps component coordinates back to the input space.
    pub fn reconstruct(&self, coords: &[f64]) -> Vec<f64> {
        let mut out = self.mean.clone();
        for (c, &w) in self.components.iter().zip(coords) {
            for (o, ci) in out.iter_mut().zip(c) {
                *o += w * ci;
            }
        }
        out
    }
}

/// Fits `k` principal components by eigendecomposition of the sample
/// covariance (divisor `n - 1`).
///
/// Each component's first entry with magnitude above `1e-9` is made
/// positive. Identical points give an orthonormal basis with zero variances.
pub fn pca_fit<P: AsRef<[f32]>>(points: &[P], k: usize) -> Result<PcaModel> {
    if points.len() < 2 {
        return Err(Error::Undefined(format!(
            "PCA needs at least 2 points, got {}",
            points.len()
        )));
    }
    let dim = points[0].as_ref().len();
    if k == 0 || k > dim {
        return Err(Error::Config(format!("k must be in 1..={dim}, got {k}")));
    }
    if let Some(p) = points.iter().find(|p| p.as_ref().len() != dim) {
        return Err(Error::Dimension {
            expected: dim,
            found: p.as_ref().len(),
        });
    }

    let n = points.len() as f64;
    let mut mean = vec![0.0f64; dim];
    for p in points {
        for (m, &x) in mean.iter_mut().zip(p.as_ref()) {
            *m += f64::from(x);
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);

    let mut cov = vec![0.0f64; dim * dim];
    let mut centered = vec![0.0f64; dim];
    for p in points {
        for ((c, &x), m) in centered.iter_mut().zip(p.as_ref()).zip(&mean) {
            *c = f64::from(x) - m;
        }
        for i in 0..dim {
            let ci = centered[i];
            if ci == 0.0 {
                continue;
            }
            let row = &mut cov[i * dim..(i + 1) * dim];
            for (r, &cj) in row[i..].iter_mut().zip(&centered[i..]) {
                *r += ci * cj;
            }
        }
    }
    for i in 0..dim {
        for j in i..dim {
            let v = cov[i * dim + j] / (n - 1.0);
            cov[i * dim + j] = v;
            cov[j * dim + i] = v;
        }
    }

    let (values, vectors) = jacobi_eigen(cov, dim);
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));

    let total_variance = values.iter().map(|v| v.max(0.0)).sum();
    let mut components = Vec::with_capacity(k);
    let mut explained_variance = Vec::with_capacity(k);
    for &col in order.iter().take(k) {
        let mut c: Vec<f64> = (0..dim).map(|row| vectors[row * dim + col]).collect();
        if c.iter()
            .find(|x| x.abs() > SIGN_THRESHOLD)
            .is_some_and(|x| *x < 0.0)
        {
            c.iter_mut().for_each(|x| *x = -*x);
        }
        components.push(c);
        explained_variance.push(values[col].max(0.0));
    }

    Ok(PcaModel {
        mean,
        components,
        explained_variance,
        total_variance,
    })
}

/// Cyclic Jacobi eigendecomposition of a symmetric row-major `n x n` matrix.
/// Returns eigenvalues and a row-major matrix whose columns are the
/// eigenvectors.
pub(crate) fn jacobi_eigen(mut a: Vec<f64>, n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut v = vec![0.0f64; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let scale = a.iter().map(|x| x * x).sum::<f64>().sqrt().max(1.0);
    let tolerance = OFF_DIAGONAL_TOLERANCE * scale;

    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * n + j] * a[i * n + j])
            .sum::<f64>()
            .sqrt();
        if off < tolerance {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;

                for r in 0..n {
                    if r == p || r == q {
                        continue;
                    }
                    let arp = a[r * n + p];
                    let arq = a[r * n + q];
                    let new_rp = c * arp - s * arq;
                    let new_rq = s * arp + c * arq;
                    a[r * n + p] = new_rp;
                    a[p * n + r] = new_rp;
                    a[r * n + q] = new_rq;
                    a[q * n + r] = new_rq;
                }
                a[p * n + p] = app - t * apq;
                a[q * n + q] = aqq + t * apq;
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;

                for r in 0..n {
                    let vrp = v[r * n + p];
                    let vrq = v[r * n + q];
                    v[r * n + p] = c * vrp - s * vrq;
                    v[r * n + q] = s * vrp + c * vrq;
                }
            }
        }
    }
    let values = (0..n).map(|i| a[i * n + i]).collect();
    (values, v)
}
