use crate::{Error, Matrix, Result, Rng};

#[derive(Debug, Clone, PartialEq)]
pub struct TsneConfig {
    /// `None` picks `min(30, (n − 1) / 3)`.
    pub perplexity: Option<f64>,
    pub iters: usize,
    pub exaggeration: f64,
    pub exaggeration_iters: usize,
    pub step_size: f64,
    pub initial_momentum: f64,
    pub final_momentum: f64,
    pub momentum_switch_iter: usize,
    pub seed: u64,
}

impl Default for TsneConfig {
    fn default() -> Self {
        Self {
            perplexity: None,
            iters: 1000,
            exaggeration: 12.0,
            exaggeration_iters: 250,
            step_size: 200.0,
            initial_momentum: 0.5,
            final_momentum: 0.8,
            momentum_switch_iter: 250,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Projection2D {
    /// `n × 2`
    pub coords: Matrix,
    pub ids: Vec<String>,
    pub labels: Option<Vec<u8>>,
    /// KL(P‖Q) after each iteration, against the unexaggerated P.
    pub kl_trace: Vec<f64>,
    pub perplexity: f64,
}

const ENTROPY_TOL: f64 = 1e-5;
const MAX_BISECTIONS: usize = 50;
const MIN_GAIN: f64 = 0.01;
const P_FLOOR: f64 = 1e-300;

pub fn pairwise_sq_dists(x: &Matrix) -> Matrix {
    let n = x.rows();
    let mut d = Matrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let v: f64 = x.row(i).iter().zip(x.row(j)).map(|(a, b)| (a - b) * (a - b)).sum();
            d.set(i, j, v);
            d.set(j, i, v);
        }
    }
    d
}

/// Row `i` of the Gaussian conditional `P(j | i)` with precision `beta`, and
/// its natural-log entropy. Distances are shifted by the row minimum so the
/// exponentials cannot all underflow.
fn row_distribution(d: &[f64], i: usize, beta: f64, out: &mut [f64]) -> f64 {
    let dmin = d
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != i)
        .map(|(_, v)| *v)
        .fold(f64::INFINITY, f64::min);
    let mut sum = 0.0;
    let mut weighted = 0.0;
    for (j, (o, dj)) in out.iter_mut().zip(d).enumerate() {
        if j == i {
            *o = 0.0;
            continue;
        }
        let shifted = dj - dmin;
        let e = (-beta * shifted).exp();
        *o = e;
        sum += e;
        weighted += e * shifted;
    }
    out.iter_mut().for_each(|v| *v /= sum);
    sum.ln() + beta * weighted / sum
}

/// Conditional affinities with each row's precision bisected until its
/// entropy is within `1e-5` nats of `ln(perplexity)`. Returns the matrix and
/// the perplexity each row achieved.
pub fn conditional_p(dist: &Matrix, perplexity: f64) -> Result<(Matrix, Vec<f64>)> {
    let n = dist.rows();
    let target = perplexity.ln();
    let mut p = Matrix::zeros(n, n);
    let mut achieved = Vec::with_capacity(n);
    for i in 0..n {
        let d = dist.row(i);
        let mean: f64 = d.iter().sum::<f64>() / (n - 1).max(1) as f64;
        let mut beta = if mean > 0.0 { 1.0 / mean } else { 1.0 };
        let (mut lo, mut hi) = (0.0, f64::INFINITY);
        let mut row = vec![0.0; n];
        let mut h = row_distribution(d, i, beta, &mut row);
        for _ in 0..MAX_BISECTIONS {
            let diff = h - target;
            if diff.abs() < ENTROPY_TOL {
                break;
            }
            if diff > 0.0 {
                lo = beta;
                beta = if hi.is_finite() { 0.5 * (beta + hi) } else { beta * 2.0 };
            } else {
                hi = beta;
                beta = 0.5 * (beta + lo);
            }
            h = row_distribution(d, i, beta, &mut row);
        }
        achieved.push(h.exp());
        p.row_mut(i).copy_from_slice(&row);
    }
    Ok((p, achieved))
}

/// `(P(j|i) + P(i|j)) / 2n`
pub fn joint_p(cond: &Matrix) -> Matrix {
    let n = cond.rows();
    let mut p = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            p.set(i, j, (cond.get(i, j) + cond.get(j, i)) / (2.0 * n as f64));
        }
    }
    p
}

fn default_perplexity(n: usize) -> f64 {
    30.0f64.min((n - 1) as f64 / 3.0)
}

/// Exact t-SNE into two dimensions.
pub fn tsne(points: &Matrix, cfg: &TsneConfig) -> Result<Projection2D> {
    let n = points.rows();
    if n < 5 {
        return Err(Error::InsufficientInput(format!("t-SNE needs at least 5 points, got {n}")));
    }
    if cfg.iters == 0 {
        return Err(Error::Config("t-SNE needs at least one iteration".into()));
    }
    if points.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::Value("t-SNE input contains non-finite values".into()));
    }
    let perplexity = cfg.perplexity.unwrap_or_else(|| default_perplexity(n));
    let max_perp = (n - 1) as f64 / 3.0;
    if !(1.0..=max_perp).contains(&perplexity) {
        return Err(Error::Config(format!(
            "perplexity {perplexity} outside [1, {max_perp:.3}] for {n} points"
        )));
    }

    let (cond, _) = conditional_p(&pairwise_sq_dists(points), perplexity)?;
    let p = joint_p(&cond);
    let p = p.as_slice();

    let mut rng = Rng::new(cfg.seed);
    let mut y: Vec<f64> = (0..2 * n).map(|_| 1e-4 * rng.normal()).collect();
    let mut update = vec![0.0; 2 * n];
    let mut gains = vec![1.0; 2 * n];
    let mut num = vec![0.0; n * n];
    let mut grad = vec![0.0; 2 * n];
    let mut kl_trace = Vec::with_capacity(cfg.iters);

    for it in 0..cfg.iters {
        let exag = if it < cfg.exaggeration_iters { cfg.exaggeration } else { 1.0 };
        let momentum = if it < cfg.momentum_switch_iter {
            cfg.initial_momentum
        } else {
            cfg.final_momentum
        };

        let z = student_t(&y, n, &mut num);
        grad.fill(0.0);
        for i in 0..n {
            let (mut gx, mut gy) = (0.0, 0.0);
            for j in 0..n {
                if i == j {
                    continue;
                }
                let w = num[i * n + j];
                let m = (exag * p[i * n + j] - w / z) * w;
                gx += m * (y[2 * i] - y[2 * j]);
                gy += m * (y[2 * i + 1] - y[2 * j + 1]);
            }
            grad[2 * i] = 4.0 * gx;
            grad[2 * i + 1] = 4.0 * gy;
        }
        for k in 0..2 * n {
            let g: f64 = if (grad[k] > 0.0) != (update[k] > 0.0) {
                gains[k] + 0.2
            } else {
                gains[k] * 0.8
            };
            gains[k] = g.max(MIN_GAIN);
            update[k] = momentum * update[k] - cfg.step_size * gains[k] * grad[k];
            y[k] += update[k];
        }
        let (mx, my) = (0..n).fold((0.0, 0.0), |(a, b), i| (a + y[2 * i], b + y[2 * i + 1]));
        for i in 0..n {
            y[2 * i] -= mx / n as f64;
            y[2 * i + 1] -= my / n as f64;
        }

        let z = student_t(&y, n, &mut num);
        let mut kl = 0.0;
        for i in 0..n {
            for j in 0..n {
                let pij = p[i * n + j];
                if i != j && pij > 0.0 {
                    let q = (num[i * n + j] / z).max(P_FLOOR);
                    kl += pij * (pij / q).ln();
                }
            }
        }
        kl_trace.push(kl.max(0.0));
    }

    Ok(Projection2D {
        coords: Matrix::from_vec(n, 2, y)?,
        ids: (0..n).map(|i| i.to_string()).collect(),
        labels: None,
        kl_trace,
        perplexity,
    })
}

/// Fills `num[i·n + j] = 1 / (1 + ‖yᵢ − yⱼ‖²)` and returns its off-diagonal sum.
fn student_t(y: &[f64], n: usize, num: &mut [f64]) -> f64 {
    let mut z = 0.0;
    for i in 0..n {
        num[i * n + i] = 0.0;
        for j in i + 1..n {
            let dx = y[2 * i] - y[2 * j];
            let dy = y[2 * i + 1] - y[2 * j + 1];
            let w = 1.0 / (1.0 + dx * dx + dy * dy);
            num[i * n + j] = w;
            num[j * n + i] = w;
            z += 2.0 * w;
        }
    }
    z
}
