use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::hyper::GlmParams;
use crate::error::Result;
use crate::math;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GlmFamily {
    Binomial,
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GlmSolver {
    Irlsm,
    Lbfgs,
}

/// Linear model on standardized inputs. Zero-variance columns keep a zero
/// coefficient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Glm {
    pub family: GlmFamily,
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    pub iterations: usize,
    /// Euclidean norm of the mean-loss gradient at the returned point.
    pub gradient_norm: f64,
}

impl Glm {
    fn linear(&self, z: &[f64]) -> f64 {
        self.intercept + z.iter().zip(&self.coefficients).map(|(a, b)| a * b).sum::<f64>()
    }

    pub fn predict_proba(&self, z: &[f64]) -> f64 {
        match self.family {
            GlmFamily::Binomial => math::sigmoid(self.linear(z)),
            GlmFamily::Gaussian => self.linear(z).clamp(0.0, 1.0),
        }
    }

    pub fn importance(&self) -> Vec<f64> {
        self.coefficients.iter().map(|c| c.abs()).collect()
    }
}

/// Design matrix over the active columns, with a trailing 1 when an
/// intercept is fitted.
struct Design {
    rows: Vec<Vec<f64>>,
    active: Vec<usize>,
    intercept: bool,
}

impl Design {
    fn new(x: &[Vec<f64>], fit_intercept: bool) -> Self {
        let d = x[0].len();
        let active: Vec<usize> = (0..d).filter(|&j| x.iter().any(|r| r[j] != 0.0)).collect();
        let rows = x
            .iter()
            .map(|r| {
                let mut row: Vec<f64> = active.iter().map(|&j| r[j]).collect();
                if fit_intercept {
                    row.push(1.0);
                }
                row
            })
            .collect();
        Design {
            rows,
            active,
            intercept: fit_intercept,
        }
    }

    fn width(&self) -> usize {
        self.active.len() + usize::from(self.intercept)
    }

    fn into_model(self, family: GlmFamily, beta: &[f64], d: usize, iterations: usize, gradient_norm: f64) -> Glm {
        let mut coefficients = vec![0.0; d];
        for (k, &j) in self.active.iter().enumerate() {
            coefficients[j] = beta[k];
        }
        Glm {
            family,
            coefficients,
            intercept: if self.intercept { beta[self.active.len()] } else { 0.0 },
            iterations,
            gradient_norm,
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(v: &[f64]) -> f64 {
    math::sqrt(dot(v, v))
}

/// Mean logistic loss and its gradient.
fn logistic(design: &Design, y: &[f64], beta: &[f64]) -> (f64, Vec<f64>) {
    let n = y.len() as f64;
    let mut loss = 0.0;
    let mut grad = vec![0.0; beta.len()];
    for (row, &t) in design.rows.iter().zip(y) {
        let eta = dot(row, beta);
        loss += math::logistic_loss(eta, t);
        let r = math::sigmoid(eta) - t;
        for (g, v) in grad.iter_mut().zip(row) {
            *g += r * v;
        }
    }
    for g in grad.iter_mut() {
        *g /= n;
    }
    (loss / n, grad)
}

fn irls(design: &Design, y: &[f64], p: &GlmParams) -> (Vec<f64>, usize, f64) {
    let w = design.width();
    let n = y.len() as f64;
    let mut beta = vec![0.0; w];
    let (mut loss, mut grad) = logistic(design, y, &beta);
    let mut iterations = 0;
    while iterations < p.max_iter && norm(&grad) >= p.tol {
        iterations += 1;
        let mut hessian = vec![vec![0.0; w]; w];
        for row in &design.rows {
            let q = math::sigmoid(dot(row, &beta));
            let weight = q * (1.0 - q) / n;
            for a in 0..w {
                for b in 0..=a {
                    hessian[a][b] += weight * row[a] * row[b];
                }
            }
        }
        for a in 0..w {
            for b in 0..a {
                hessian[b][a] = hessian[a][b];
            }
        }
        let neg: Vec<f64> = grad.iter().map(|g| -g).collect();
        let step = math::solve_linear(hessian, neg.clone()).unwrap_or(neg);
        let mut t = 1.0;
        let mut moved = false;
        while t > 1e-12 {
            let cand: Vec<f64> = beta.iter().zip(&step).map(|(b, s)| b + t * s).collect();
            let (l, g) = logistic(design, y, &cand);
            if l <= loss {
                beta = cand;
                loss = l;
                grad = g;
                moved = true;
                break;
            }
            t *= 0.5;
        }
        if !moved {
            break;
        }
    }
    let gn = norm(&grad);
    (beta, iterations, gn)
}

fn lbfgs(design: &Design, y: &[f64], p: &GlmParams) -> (Vec<f64>, usize, f64) {
    const MEMORY: usize = 10;
    let w = design.width();
    let mut beta = vec![0.0; w];
    let (mut loss, mut grad) = logistic(design, y, &beta);
    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut iterations = 0;
    while iterations < p.max_iter && norm(&grad) >= p.tol {
        iterations += 1;
        // two-loop recursion
        let mut q = grad.clone();
        let mut alphas = Vec::with_capacity(history.len());
        for (s, yv, rho) in history.iter().rev() {
            let a = rho * dot(s, &q);
            for (qi, yi) in q.iter_mut().zip(yv) {
                *qi -= a * yi;
            }
            alphas.push(a);
        }
        if let Some((s, yv, _)) = history.back() {
            let gamma = dot(s, yv) / dot(yv, yv);
            for qi in q.iter_mut() {
                *qi *= gamma;
            }
        }
        for ((s, yv, rho), a) in history.iter().zip(alphas.iter().rev()) {
            let b = rho * dot(yv, &q);
            for (qi, si) in q.iter_mut().zip(s) {
                *qi += (a - b) * si;
            }
        }
        let mut direction: Vec<f64> = q.iter().map(|v| -v).collect();
        if dot(&direction, &grad) >= 0.0 {
            direction = grad.iter().map(|g| -g).collect();
            history.clear();
        }
        let slope = dot(&direction, &grad);
        let mut t = 1.0;
        let mut accepted = None;
        while t > 1e-14 {
            let cand: Vec<f64> = beta.iter().zip(&direction).map(|(b, d)| b + t * d).collect();
            let (l, g) = logistic(design, y, &cand);
            if l <= loss + 1e-4 * t * slope {
                accepted = Some((cand, l, g));
                break;
            }
            t *= 0.5;
        }
        let Some((cand, l, g)) = accepted else { break };
        let s: Vec<f64> = cand.iter().zip(&beta).map(|(a, b)| a - b).collect();
        let yv: Vec<f64> = g.iter().zip(&grad).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &yv);
        if sy > 1e-20 {
            if history.len() == MEMORY {
                history.pop_front();
            }
            history.push_back((s, yv, 1.0 / sy));
        }
        beta = cand;
        loss = l;
        grad = g;
    }
    let gn = norm(&grad);
    (beta, iterations, gn)
}

fn least_squares(design: &Design, y: &[f64]) -> (Vec<f64>, f64) {
    let w = design.width();
    let n = y.len() as f64;
    let mut gram = vec![vec![0.0; w]; w];
    let mut rhs = vec![0.0; w];
    for (row, &t) in design.rows.iter().zip(y) {
        for a in 0..w {
            rhs[a] += row[a] * t / n;
            for b in 0..w {
                gram[a][b] += row[a] * row[b] / n;
            }
        }
    }
    let beta = math::solve_linear(gram.clone(), rhs.clone()).unwrap_or_else(|| vec![0.0; w]);
    let grad: Vec<f64> = (0..w).map(|a| dot(&gram[a], &beta) - rhs[a]).collect();
    let gn = norm(&grad);
    (beta, gn)
}

pub(crate) fn fit(x: &[Vec<f64>], y: &[u8], p: &GlmParams) -> Result<Glm> {
    let d = x[0].len();
    let design = Design::new(x, p.fit_intercept);
    let yf: Vec<f64> = y.iter().map(|&v| f64::from(v)).collect();
    Ok(match p.family {
        GlmFamily::Binomial => {
            let (beta, iterations, gn) = match p.solver {
                GlmSolver::Irlsm => irls(&design, &yf, p),
                GlmSolver::Lbfgs => lbfgs(&design, &yf, p),
            };
            design.into_model(GlmFamily::Binomial, &beta, d, iterations, gn)
        }
        GlmFamily::Gaussian => {
            let (beta, gn) = least_squares(&design, &yf);
            design.into_model(GlmFamily::Gaussian, &beta, d, 1, gn)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::super::hyper::GlmParams;
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params(solver: GlmSolver) -> GlmParams {
        GlmParams {
            family: GlmFamily::Binomial,
            fit_intercept: true,
            solver,
            max_iter: 500,
            tol: 1e-6,
        }
    }

    fn toy() -> (Vec<Vec<f64>>, Vec<u8>) {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mut x = Vec::new();
        let mut y = Vec::new();
        for _ in 0..60 {
            let a: f64 = rng.gen_range(-1.5..1.5);
            let b: f64 = rng.gen_range(-1.5..1.5);
            y.push(u8::from(rng.gen::<f64>() < math::sigmoid(1.2 * a - 0.7 * b + 0.2)));
            x.push(vec![a, b]);
        }
        let st = super::super::Standardization::fit(&x, 2);
        (x.iter().map(|r| st.apply(r)).collect(), y)
    }

    fn loss_at(x: &[Vec<f64>], y: &[u8], w: [f64; 3]) -> f64 {
        x.iter()
            .zip(y)
            .map(|(r, &t)| {
                let eta = w[0] * r[0] + w[1] * r[1] + w[2];
                let p = 1.0 / (1.0 + (-eta).exp());
                if t == 1 {
                    -p.ln()
                } else {
                    -(1.0 - p).ln()
                }
            })
            .sum()
    }

    /// Coarse-to-fine exhaustive grid over `(w1, w2, b)`.
    fn grid_minimizer(x: &[Vec<f64>], y: &[u8]) -> [f64; 3] {
        let mut center = [0.0; 3];
        let mut half = 4.0;
        let mut step = 0.1;
        while step >= 1e-4 {
            let steps = libm::round(half / step) as i64;
            let mut best = (f64::INFINITY, center);
            for i in -steps..=steps {
                for j in -steps..=steps {
                    for k in -steps..=steps {
                        let w = [
                            center[0] + i as f64 * step,
                            center[1] + j as f64 * step,
                            center[2] + k as f64 * step,
                        ];
                        let l = loss_at(x, y, w);
                        if l < best.0 {
                            best = (l, w);
                        }
                    }
                }
            }
            center = best.1;
            half = step * 2.0;
            step /= 10.0;
        }
        center
    }

    #[test]
    fn matches_grid_oracle() {
        let (x, y) = toy();
        let oracle = grid_minimizer(&x, &y);
        for solver in [GlmSolver::Irlsm, GlmSolver::Lbfgs] {
            let m = fit(&x, &y, &params(solver)).unwrap();
            assert!(m.gradient_norm < 1e-6, "{solver:?}");
            assert!((m.coefficients[0] - oracle[0]).abs() < 1e-3, "{solver:?} {m:?} {oracle:?}");
            assert!((m.coefficients[1] - oracle[1]).abs() < 1e-3);
            assert!((m.intercept - oracle[2]).abs() < 1e-3);
        }
    }

    #[test]
    fn zero_variance_column_has_zero_importance() {
        let (mut x, y) = toy();
        for r in x.iter_mut() {
            r.push(0.0);
        }
        let m = fit(&x, &y, &params(GlmSolver::Irlsm)).unwrap();
        assert_eq!(m.importance()[2], 0.0);
    }

    #[test]
    fn gaussian_family_solves_least_squares() {
        let x = vec![vec![-1.0], vec![0.0], vec![1.0], vec![2.0]];
        let y = [0, 0, 1, 1];
        let p = GlmParams {
            family: GlmFamily::Gaussian,
            ..params(GlmSolver::Irlsm)
        };
        let m = fit(&x, &y, &p).unwrap();
        assert!((m.coefficients[0] - 0.4).abs() < 1e-12);
        assert!((m.intercept - 0.3).abs() < 1e-12);
    }
}
