#![allow(dead_code)]
#![allow(clippy::needless_range_loop)]

use std::collections::HashMap;

use embedrift::{Corpus, EmbeddingTable, RefineConfig, TokenDocument};
use rand::seq::SliceRandom;
use rand::Rng;

pub struct OracleStep {
    pub token: String,
    pub vector: Vec<f32>,
}

/// Straightforward reference: every window reads and writes a HashMap of
/// current vectors, falling back to the (normalized) origin, then zero.
pub fn oracle_refine(
    docs: &[Vec<String>],
    origin: &HashMap<String, Vec<f32>>,
    dim: usize,
    s: usize,
    alpha: f32,
    epochs: u32,
) -> (HashMap<String, Vec<f32>>, Vec<OracleStep>) {
    let unit = |v: &[f32]| -> Vec<f32> {
        let n = v
            .iter()
            .map(|&x| f64::from(x) * f64::from(x))
            .sum::<f64>()
            .sqrt();
        if n <= 1e-12 {
            vec![0.0; dim]
        } else {
            v.iter().map(|&x| (f64::from(x) / n) as f32).collect()
        }
    };
    let start: HashMap<String, Vec<f32>> =
        origin.iter().map(|(k, v)| (k.clone(), unit(v))).collect();
    let mut current: HashMap<String, Vec<f32>> = HashMap::new();
    let mut steps = Vec::new();
    let half = s / 2;
    for _ in 0..epochs {
        for doc in docs {
            for t in 0..doc.len() {
                let get = |cur: &HashMap<String, Vec<f32>>, w: &str| {
                    cur.get(w)
                        .or_else(|| start.get(w))
                        .cloned()
                        .unwrap_or_else(|| vec![0.0; dim])
                };
                let mut sum = vec![0.0f32; dim];
                for j in t.saturating_sub(half)..(t + half + 1).min(doc.len()) {
                    if j != t {
                        for (a, b) in sum.iter_mut().zip(get(&current, &doc[j])) {
                            *a += b;
                        }
                    }
                }
                let mut v = get(&current, &doc[t]);
                for (a, b) in v.iter_mut().zip(&sum) {
                    *a += alpha * b;
                }
                let v = unit(&v);
                current.insert(doc[t].clone(), v.clone());
                steps.push(OracleStep {
                    token: doc[t].clone(),
                    vector: v,
                });
            }
        }
    }
    (current, steps)
}

/// Classical Jacobi: rotate away the largest off-diagonal entry until the
/// matrix is diagonal. Returns (eigenvalue, unit eigenvector) pairs sorted by
/// descending eigenvalue with each vector's first significant entry positive.
pub fn oracle_eigen(mut a: Vec<Vec<f64>>) -> Vec<(f64, Vec<f64>)> {
    let n = a.len();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect())
        .collect();
    for _ in 0..100 * n * n {
        let (mut p, mut q, mut big) = (0, 0, 0.0);
        for i in 0..n {
            for j in i + 1..n {
                if a[i][j].abs() > big {
                    (p, q, big) = (i, j, a[i][j].abs());
                }
            }
        }
        if big < 1e-15 {
            break;
        }
        let phi = 0.5 * (2.0 * a[p][q]).atan2(a[q][q] - a[p][p]);
        let (s, c) = phi.sin_cos();
        for k in 0..n {
            let (akp, akq) = (a[k][p], a[k][q]);
            a[k][p] = c * akp - s * akq;
            a[k][q] = s * akp + c * akq;
        }
        for k in 0..n {
            let (apk, aqk) = (a[p][k], a[q][k]);
            a[p][k] = c * apk - s * aqk;
            a[q][k] = s * apk + c * aqk;
        }
        for row in v.iter_mut() {
            let (vp, vq) = (row[p], row[q]);
            row[p] = c * vp - s * vq;
            row[q] = s * vp + c * vq;
        }
    }
    let mut pairs: Vec<(f64, Vec<f64>)> = (0..n)
        .map(|j| {
            let mut col: Vec<f64> = v.iter().map(|row| row[j]).collect();
            if col
                .iter()
                .find(|x| x.abs() > 1e-9)
                .is_some_and(|x| *x < 0.0)
            {
                col.iter_mut().for_each(|x| *x = -*x);
            }
            (a[j][j], col)
        })
        .collect();
    pairs.sort_by(|x, y| y.0.total_cmp(&x.0));
    pairs
}

/// Sample covariance with divisor n - 1.
pub fn covariance(points: &[Vec<f32>]) -> Vec<Vec<f64>> {
    let n = points.len() as f64;
    let d = points[0].len();
    let mean: Vec<f64> = (0..d)
        .map(|j| points.iter().map(|p| f64::from(p[j])).sum::<f64>() / n)
        .collect();
    (0..d)
        .map(|i| {
            (0..d)
                .map(|j| {
                    points
                        .iter()
                        .map(|p| (f64::from(p[i]) - mean[i]) * (f64::from(p[j]) - mean[j]))
                        .sum::<f64>()
                        / (n - 1.0)
                })
                .collect()
        })
        .collect()
}

pub struct Instance {
    pub docs: Vec<Vec<String>>,
    pub origin: HashMap<String, Vec<f32>>,
    pub dim: usize,
    pub config: RefineConfig,
}

impl Instance {
    pub fn corpus(&self) -> Corpus {
        Corpus::new(
            self.docs
                .iter()
                .enumerate()
                .map(|(i, d)| TokenDocument::new(format!("d{i}"), d.clone()))
                .collect(),
        )
    }

    pub fn table(&self) -> EmbeddingTable {
        let mut t = EmbeddingTable::new(self.dim).unwrap();
        for (w, v) in &self.origin {
            t.insert(w.as_str(), v).unwrap();
        }
        t
    }
}

/// vocab <= 20, dim <= 8, <= 5 documents of <= 50 tokens. About a quarter
/// of the vocabulary has no pre-trained vector and some vectors are zero.
pub fn random_instance<R: Rng>(rng: &mut R) -> Instance {
    let dim = rng.gen_range(1..=8);
    let vocab: Vec<String> = (0..rng.gen_range(1..=20))
        .map(|i| format!("w{i}"))
        .collect();
    let mut origin = HashMap::new();
    for w in &vocab {
        match rng.gen_range(0..8) {
            0 | 1 => {}
            2 => {
                origin.insert(w.clone(), vec![0.0; dim]);
            }
            _ => {
                origin.insert(
                    w.clone(),
                    (0..dim).map(|_| rng.gen_range(-2.0f32..2.0)).collect(),
                );
            }
        }
    }
    let docs = (0..rng.gen_range(1..=5))
        .map(|_| {
            (0..rng.gen_range(1..=50))
                .map(|_| vocab.choose(rng).unwrap().clone())
                .collect()
        })
        .collect();
    let config = RefineConfig {
        window_size: *[3, 5].choose(rng).unwrap(),
        learning_rate: *[0.01, 0.1, 0.5].choose(rng).unwrap(),
        epochs: rng.gen_range(1..=2),
        ..RefineConfig::default()
    };
    Instance {
        docs,
        origin,
        dim,
        config,
    }
}

/// Single-topic synthetic corpus with Zipfian token frequencies over
/// `t0..t{vocab}`; `t0` is the most frequent.
pub fn homogeneous_corpus<R: Rng>(
    rng: &mut R,
    vocab: usize,
    docs: usize,
    len: usize,
) -> Vec<Vec<String>> {
    let weights: Vec<f64> = (1..=vocab).map(|r| 1.0 / r as f64).collect();
    let zipf = rand::distributions::WeightedIndex::new(&weights).unwrap();
    (0..docs)
        .map(|_| {
            (0..len)
                .map(|_| format!("t{}", rng.sample(&zipf)))
                .collect()
        })
        .collect()
}

pub fn random_unit_table<R: Rng>(rng: &mut R, words: &[String], dim: usize) -> EmbeddingTable {
    let mut t = EmbeddingTable::new(dim).unwrap();
    for w in words {
        let v: Vec<f32> = (0..dim).map(|_| rng.gen_range(-1.0f32..1.0)).collect();
        t.insert(w.as_str(), &v).unwrap();
    }
    t
}

pub fn max_abs_diff(a: &[f32], b: &[f32]) -> f32 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f32::max)
}
