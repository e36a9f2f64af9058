//! Training tasks, synthetic data generation, IDX ingestion, and data partitioning.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::linalg::{randn, rng_from_seed};

/// A training task together with its data. Losses are sums over samples, so
/// device-level gradients add up to the centralized gradient exactly.
#[derive(Debug, Clone)]
pub enum TaskData {
    /// l(theta, b) = 1/2 ||theta - b||^2
    Quadratic { points: DMatrix<f64> },
    /// l(theta, (x, y)) = 1/2 (x^T theta - y)^2 + lambda/2 ||theta||^2
    Ridge { x: DMatrix<f64>, y: DVector<f64>, lambda: f64 },
    /// Multinomial logistic regression with an explicit l2 regularizer;
    /// theta is laid out class-major: theta[c * d + j].
    Logistic { x: DMatrix<f64>, labels: Vec<usize>, n_classes: usize, lambda: f64 },
}

impl TaskData {
    pub fn n_samples(&self) -> usize {
        match self {
            TaskData::Quadratic { points } => points.nrows(),
            TaskData::Ridge { x, .. } => x.nrows(),
            TaskData::Logistic { x, .. } => x.nrows(),
        }
    }

    /// Length of the (unpadded) parameter vector.
    pub fn theta_len(&self) -> usize {
        match self {
            TaskData::Quadratic { points } => points.ncols(),
            TaskData::Ridge { x, .. } => x.ncols(),
            TaskData::Logistic { x, n_classes, .. } => x.ncols() * n_classes,
        }
    }

    pub fn labels(&self) -> Option<&[usize]> {
        match self {
            TaskData::Logistic { labels, .. } => Some(labels),
            _ => None,
        }
    }

    pub fn n_classes(&self) -> usize {
        match self {
            TaskData::Logistic { n_classes, .. } => *n_classes,
            _ => 0,
        }
    }

    /// Sum of per-sample gradients at `theta`.
    pub fn grad_sum(&self, theta: &DVector<f64>) -> DVector<f64> {
        match self {
            TaskData::Quadratic { points } => {
                let m = points.nrows() as f64;
                let mut g = theta * m;
                for r in 0..points.nrows() {
                    for j in 0..points.ncols() {
                        g[j] -= points[(r, j)];
                    }
                }
                g
            }
            TaskData::Ridge { x, y, lambda } => {
                let resid = x * theta - y;
                let mut g = x.transpose() * resid;
                g += theta * (*lambda * x.nrows() as f64);
                g
            }
            TaskData::Logistic { x, labels, n_classes, lambda } => {
                let d = x.ncols();
                let mut g = theta * (*lambda * x.nrows() as f64);
                for r in 0..x.nrows() {
                    let p = softmax_row(theta, x, r, *n_classes);
                    for c in 0..*n_classes {
                        let coeff = p[c] - if labels[r] == c { 1.0 } else { 0.0 };
                        for j in 0..d {
                            g[c * d + j] += coeff * x[(r, j)];
                        }
                    }
                }
                g
            }
        }
    }

    /// Sum of per-sample losses at `theta`.
    pub fn loss_sum(&self, theta: &DVector<f64>) -> f64 {
        match self {
            TaskData::Quadratic { points } => {
                let mut total = 0.0;
                for r in 0..points.nrows() {
                    for j in 0..points.ncols() {
                        let diff = theta[j] - points[(r, j)];
                        total += 0.5 * diff * diff;
                    }
                }
                total
            }
            TaskData::Ridge { x, y, lambda } => {
                let resid = x * theta - y;
                0.5 * resid.norm_squared()
                    + 0.5 * lambda * x.nrows() as f64 * theta.norm_squared()
            }
            TaskData::Logistic { x, labels, n_classes, lambda } => {
                let mut total = 0.5 * lambda * x.nrows() as f64 * theta.norm_squared();
                for r in 0..x.nrows() {
                    let p = softmax_row(theta, x, r, *n_classes);
                    total -= p[labels[r]].max(1e-300).ln();
                }
                total
            }
        }
    }

    /// Classification accuracy; `None` for regression tasks.
    pub fn accuracy(&self, theta: &DVector<f64>) -> Option<f64> {
        match self {
            TaskData::Logistic { x, labels, n_classes, .. } => {
                let mut hits = 0usize;
                for r in 0..x.nrows() {
                    let p = softmax_row(theta, x, r, *n_classes);
                    let arg = p
                        .iter()
                        .enumerate()
                        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                        .map(|(i, _)| i)
                        .unwrap_or(0);
                    if arg == labels[r] {
                        hits += 1;
                    }
                }
                Some(hits as f64 / x.nrows().max(1) as f64)
            }
            _ => None,
        }
    }

    /// Mean squared prediction error; `None` for tasks without targets.
    pub fn mean_squared_error(&self, theta: &DVector<f64>) -> Option<f64> {
        match self {
            TaskData::Ridge { x, y, .. } => {
                let resid = x * theta - y;
                Some(resid.norm_squared() / x.nrows().max(1) as f64)
            }
            _ => None,
        }
    }

    /// Row subset of the task, preserving hyperparameters.
    pub fn subset(&self, idx: &[usize]) -> TaskData {
        match self {
            TaskData::Quadratic { points } => TaskData::Quadratic {
                points: select_rows(points, idx),
            },
            TaskData::Ridge { x, y, lambda } => TaskData::Ridge {
                x: select_rows(x, idx),
                y: DVector::from_iterator(idx.len(), idx.iter().map(|&r| y[r])),
                lambda: *lambda,
            },
            TaskData::Logistic { x, labels, n_classes, lambda } => TaskData::Logistic {
                x: select_rows(x, idx),
                labels: idx.iter().map(|&r| labels[r]).collect(),
                n_classes: *n_classes,
                lambda: *lambda,
            },
        }
    }
}

fn select_rows(m: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(idx.len(), m.ncols(), |i, j| m[(idx[i], j)])
}

fn softmax_row(theta: &DVector<f64>, x: &DMatrix<f64>, row: usize, n_classes: usize) -> Vec<f64> {
    let d = x.ncols();
    let mut scores = vec![0.0f64; n_classes];
    for (c, s) in scores.iter_mut().enumerate() {
        for j in 0..d {
            *s += theta[c * d + j] * x[(row, j)];
        }
    }
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for s in scores.iter_mut() {
        *s = (*s - max).exp();
        total += *s;
    }
    for s in scores.iter_mut() {
        *s /= total;
    }
    scores
}

/// Strong-convexity and smoothness constants plus the optimum of a task.
#[derive(Debug, Clone)]
pub struct TaskConstants {
    pub mu: f64,
    pub lipschitz: f64,
    pub theta_star: DVector<f64>,
    pub loss_star: f64,
}

/// Exact constants for the ridge task from the Gram spectrum.
pub fn ridge_constants(data: &TaskData) -> Result<TaskConstants> {
    let TaskData::Ridge { x, y, lambda } = data else {
        return Err(Error::Parameter("ridge_constants requires a ridge task".into()));
    };
    let m = x.nrows() as f64;
    let mut gram = x.transpose() * x;
    for i in 0..gram.nrows() {
        gram[(i, i)] += lambda * m;
    }
    let eig = gram.clone().symmetric_eigen();
    let mu = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    let lipschitz = eig.eigenvalues.iter().cloned().fold(0.0f64, f64::max);
    let rhs = x.transpose() * y;
    let theta_star = gram
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Numeric("singular ridge system".into()))?;
    let loss_star = data.loss_sum(&theta_star);
    Ok(TaskConstants { mu, lipschitz, theta_star, loss_star })
}

/// Constants for the logistic task: mu from the explicit regularizer, L from
/// the softmax Hessian bound `1/2 lambda_max(X^T X) + lambda m`. The optimum
/// is approximated by gradient descent at 1/L until the gradient is tiny.
pub fn logistic_constants(data: &TaskData, max_iters: usize) -> Result<TaskConstants> {
    let TaskData::Logistic { x, lambda, .. } = data else {
        return Err(Error::Parameter("logistic_constants requires a logistic task".into()));
    };
    let m = x.nrows() as f64;
    let gram = x.transpose() * x;
    let eig = gram.symmetric_eigen();
    let lmax = eig.eigenvalues.iter().cloned().fold(0.0f64, f64::max);
    let mu = lambda * m;
    let lipschitz = 0.5 * lmax + lambda * m;
    let mut theta = DVector::zeros(data.theta_len());
    for _ in 0..max_iters {
        let g = data.grad_sum(&theta);
        if g.norm() < 1e-10 * m.max(1.0) {
            break;
        }
        theta -= g / lipschitz;
    }
    let loss_star = data.loss_sum(&theta);
    Ok(TaskConstants { mu, lipschitz, theta_star: theta, loss_star })
}

/// Generates a ridge instance with Gaussian features and a planted parameter.
pub fn synthetic_ridge(
    n_samples: usize,
    n_features: usize,
    noise_std: f64,
    lambda: f64,
    seed: u64,
) -> TaskData {
    let mut rng = rng_from_seed(seed);
    let x = DMatrix::from_fn(n_samples, n_features, |_, _| randn(&mut rng));
    let theta_true = DVector::from_fn(n_features, |_, _| randn(&mut rng));
    let y = DVector::from_fn(n_samples, |r, _| {
        let mut v = 0.0;
        for j in 0..n_features {
            v += x[(r, j)] * theta_true[j];
        }
        v + noise_std * randn(&mut rng)
    });
    TaskData::Ridge { x, y, lambda }
}

/// Splits samples into near-even shards after a seeded shuffle.
pub fn partition_iid(data: &TaskData, n_devices: usize, seed: u64) -> Vec<TaskData> {
    let m = data.n_samples();
    let mut idx: Vec<usize> = (0..m).collect();
    idx.shuffle(&mut rng_from_seed(seed));
    let mut shards = Vec::with_capacity(n_devices);
    for k in 0..n_devices {
        let lo = k * m / n_devices;
        let hi = (k + 1) * m / n_devices;
        shards.push(data.subset(&idx[lo..hi]));
    }
    shards
}

/// Heterogeneous class-limited partition: each device picks `q` classes at
/// random and then draws its quota without repetition from those classes.
pub fn partition_dataset(
    data: &TaskData,
    n_devices: usize,
    q: usize,
    seed: u64,
) -> Result<Vec<TaskData>> {
    let labels = data
        .labels()
        .ok_or_else(|| Error::Config("class partition requires a labeled task".into()))?;
    let n_classes = data.n_classes();
    if q == 0 || q > n_classes {
        return Err(Error::Config(format!(
            "Q = {q} outside 1..={n_classes} available classes"
        )));
    }
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); n_classes];
    for (r, &lab) in labels.iter().enumerate() {
        by_class[lab].push(r);
    }
    let quota = data.n_samples() / n_devices;
    let mut rng = rng_from_seed(seed);
    let mut shards = Vec::with_capacity(n_devices);
    for _ in 0..n_devices {
        let mut classes: Vec<usize> = (0..n_classes).collect();
        classes.shuffle(&mut rng);
        classes.truncate(q);
        let mut pool: Vec<usize> = classes.iter().flat_map(|&c| by_class[c].iter().copied()).collect();
        pool.shuffle(&mut rng);
        pool.truncate(quota.min(pool.len()).max(1));
        shards.push(data.subset(&pool));
    }
    Ok(shards)
}

/// Reads a pair of IDX files (images magic 0x00000803, labels magic 0x00000801)
/// into a flattened feature matrix scaled to [0, 1] and a label list.
pub fn load_mnist_idx(
    images: &std::path::Path,
    labels: &std::path::Path,
    limit: Option<usize>,
) -> Result<(DMatrix<f64>, Vec<usize>)> {
    let img_bytes = std::fs::read(images)?;
    let lab_bytes = std::fs::read(labels)?;
    let img_magic = read_u32_be(&img_bytes, 0)?;
    if img_magic != 0x0000_0803 {
        return Err(Error::Data(format!("bad image magic {img_magic:#010x}")));
    }
    let lab_magic = read_u32_be(&lab_bytes, 0)?;
    if lab_magic != 0x0000_0801 {
        return Err(Error::Data(format!("bad label magic {lab_magic:#010x}")));
    }
    let n_img = read_u32_be(&img_bytes, 4)? as usize;
    let rows = read_u32_be(&img_bytes, 8)? as usize;
    let cols = read_u32_be(&img_bytes, 12)? as usize;
    let n_lab = read_u32_be(&lab_bytes, 4)? as usize;
    if n_img != n_lab {
        return Err(Error::Data(format!("{n_img} images vs {n_lab} labels")));
    }
    let take = limit.map(|l| l.min(n_img)).unwrap_or(n_img);
    let d = rows * cols;
    if img_bytes.len() < 16 + take * d || lab_bytes.len() < 8 + take {
        return Err(Error::Data("IDX payload truncated".into()));
    }
    let x = DMatrix::from_fn(take, d, |r, j| img_bytes[16 + r * d + j] as f64 / 255.0);
    let labs = (0..take).map(|r| lab_bytes[8 + r] as usize).collect();
    Ok((x, labs))
}

fn read_u32_be(bytes: &[u8], offset: usize) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|s| u32::from_be_bytes([s[0], s[1], s[2], s[3]]))
        .ok_or_else(|| Error::Data("IDX header truncated".into()))
}

/// Builds a logistic task over MNIST-style data.
pub fn logistic_task(x: DMatrix<f64>, labels: Vec<usize>, lambda: f64) -> TaskData {
    let n_classes = labels.iter().copied().max().map(|m| m + 1).unwrap_or(1).max(2);
    TaskData::Logistic { x, labels, n_classes, lambda }
}

#[allow(unused_imports)]
mod test_rng {
    pub use rand::RngCore;
}
