//! Dense BFGS with Armijo backtracking.

use ndarray::{Array1, Array2};

#[derive(Clone, Copy, Debug)]
pub struct BfgsOptions {
    pub max_iters: usize,
    pub grad_tol: f64,
    /// Sufficient-decrease constant of the line search.
    pub armijo: f64,
    pub max_backtracks: usize,
    /// Stop as soon as the objective falls to this value.
    pub stop_below: Option<f64>,
}

impl Default for BfgsOptions {
    fn default() -> Self {
        BfgsOptions { max_iters: 2000, grad_tol: 1e-8, armijo: 1e-4, max_backtracks: 60, stop_below: None }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    GradientTolerance,
    TargetReached,
    MaxIterations,
    /// No step along the search direction decreased the objective.
    LineSearchFailed,
}

#[derive(Clone, Debug)]
pub struct BfgsResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub termination: Termination,
    /// Objective after every accepted step, starting with the initial point.
    pub history: Vec<f64>,
}

fn norm(v: &Array1<f64>) -> f64 {
    v.dot(v).sqrt()
}

/// Minimizes `f`, which returns the value and gradient at a point.
pub fn minimize<F>(mut f: F, x0: &[f64], options: BfgsOptions) -> BfgsResult
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let n = x0.len();
    let mut x = Array1::from(x0.to_vec());
    let (mut fx, g) = f(x.as_slice().unwrap());
    let mut g = Array1::from(g);
    let mut h = Array2::<f64>::eye(n);
    let mut history = vec![fx];
    let mut iterations = 0;
    let termination = loop {
        if options.stop_below.is_some_and(|s| fx <= s) {
            break Termination::TargetReached;
        }
        if norm(&g) <= options.grad_tol {
            break Termination::GradientTolerance;
        }
        if iterations >= options.max_iters {
            break Termination::MaxIterations;
        }
        let mut p = -h.dot(&g);
        let mut slope = g.dot(&p);
        if !(slope < 0.0) {
            h = Array2::eye(n);
            p = -g.clone();
            slope = -g.dot(&g);
        }
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..options.max_backtracks {
            let trial = &x + &(&p * step);
            let (ft, gt) = f(trial.as_slice().unwrap());
            if ft.is_finite() && ft <= fx + options.armijo * step * slope {
                accepted = Some((trial, ft, Array1::from(gt)));
                break;
            }
            step *= 0.5;
        }
        let Some((x_new, f_new, g_new)) = accepted else {
            if h.iter().zip(Array2::<f64>::eye(n).iter()).all(|(a, b)| a == b) {
                break Termination::LineSearchFailed;
            }
            h = Array2::eye(n);
            continue;
        };
        let s = &x_new - &x;
        let y = &g_new - &g;
        let sy = s.dot(&y);
        if sy > 1e-12 * norm(&s) * norm(&y) && sy > 0.0 {
            let rho = 1.0 / sy;
            let hy = h.dot(&y);
            let yhy = y.dot(&hy);
            // H ← H − ρ(s yᵀH + H y sᵀ) + (ρ² yᵀHy + ρ) s sᵀ
            for i in 0..n {
                for j in 0..n {
                    h[[i, j]] += -rho * (s[i] * hy[j] + hy[i] * s[j]) + (rho * rho * yhy + rho) * s[i] * s[j];
                }
            }
        }
        x = x_new;
        fx = f_new;
        g = g_new;
        history.push(fx);
        iterations += 1;
    };
    BfgsResult { x: x.to_vec(), value: fx, grad_norm: norm(&g), iterations, termination, history }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rosenbrock() {
        let r = minimize(
            |x| {
                let (a, b) = (x[0], x[1]);
                let v = (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2);
                (v, vec![-2.0 * (1.0 - a) - 400.0 * a * (b - a * a), 200.0 * (b - a * a)])
            },
            &[-1.2, 1.0],
            BfgsOptions::default(),
        );
        assert_eq!(r.termination, Termination::GradientTolerance);
        assert!((r.x[0] - 1.0).abs() < 1e-6 && (r.x[1] - 1.0).abs() < 1e-6);
        assert!(r.history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn quadratic_converges_fast_and_honours_target() {
        let quad = |x: &[f64]| {
            let v: f64 = x.iter().enumerate().map(|(i, xi)| (i + 1) as f64 * xi * xi).sum();
            (v, x.iter().enumerate().map(|(i, xi)| 2.0 * (i + 1) as f64 * xi).collect())
        };
        let r = minimize(quad, &[1.0; 5], BfgsOptions::default());
        assert!(r.iterations < 30 && r.value < 1e-14);
        let r = minimize(quad, &[1.0; 5], BfgsOptions { stop_below: Some(0.5), ..Default::default() });
        assert_eq!(r.termination, Termination::TargetReached);
        assert!(r.value <= 0.5);
    }
}
