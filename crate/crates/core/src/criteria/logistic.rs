//! Five-parameter logistic mapping from predictor scores to the MOS scale:
//!
//! ```text
//! f(p) = xi1 * (1/2 - 1 / (1 + exp(xi2 * (p - xi3)))) + xi4 * p + xi5
//! ```
//!
//! Fitted on standardized data by Levenberg-Marquardt over `xi2, xi3`, with
//! `xi1, xi4, xi5` solved by linear least squares at every trial point. The
//! first run starts at `xi3` = median prediction and `xi2 = 4 / range`. Runs
//! that do not converge are restarted with `xi2` of alternating sign and
//! growing magnitude. The least-squares line (`xi1 = 0`) is kept as a
//! candidate too, and the lowest cost wins, so the mapping never fits worse
//! than the best affine map.

use nalgebra::{SMatrix, SVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

type Vec5 = SVector<f64, 5>;

pub const MIN_SAMPLES: usize = 6;
pub const MAX_ITERATIONS: usize = 500;
pub const GRADIENT_TOLERANCE: f64 = 1e-8;
const RESTARTS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticParams {
    pub xi1: f64,
    pub xi2: f64,
    pub xi3: f64,
    pub xi4: f64,
    pub xi5: f64,
}

impl LogisticParams {
    pub fn apply(&self, p: f64) -> f64 {
        self.xi1 * (0.5 - sigmoid_tail(self.xi2 * (p - self.xi3))) + self.xi4 * p + self.xi5
    }

    pub fn map(&self, pred: &[f64]) -> Vec<f64> {
        pred.iter().map(|&p| self.apply(p)).collect()
    }

    pub fn is_finite(&self) -> bool {
        [self.xi1, self.xi2, self.xi3, self.xi4, self.xi5]
            .iter()
            .all(|v| v.is_finite())
    }

    fn from_vec(v: &Vec5) -> Self {
        LogisticParams {
            xi1: v[0],
            xi2: v[1],
            xi3: v[2],
            xi4: v[3],
            xi5: v[4],
        }
    }
}

/// `1 / (1 + exp(x))` without overflow.
fn sigmoid_tail(x: f64) -> f64 {
    if x >= 0.0 {
        let e = (-x).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + x.exp())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    /// Iterations of the winning run.
    pub iterations: usize,
    pub converged: bool,
    /// Infinity norm of the cost gradient in `xi2, xi3`, standardized units.
    /// NaN when the affine candidate wins.
    pub gradient_norm: f64,
    /// Root mean squared residual in MOS units.
    pub rmse: f64,
    pub runs: usize,
    pub start: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticFit {
    pub params: LogisticParams,
    pub diagnostics: FitDiagnostics,
}

struct Problem<'a> {
    x: &'a [f64],
    y: &'a [f64],
}

struct Run {
    params: Vec5,
    cost: f64,
    iterations: usize,
    gradient_norm: f64,
    converged: bool,
}

type Mat3 = SMatrix<f64, 3, 3>;
type Vec3 = SVector<f64, 3>;

/// Cost decrease, relative to the cost, below which a run counts as settled.
const COST_TOLERANCE: f64 = 1e-12;

impl Problem<'_> {
    fn cost(&self, a: &Vec5) -> f64 {
        self.x
            .iter()
            .zip(self.y)
            .map(|(&x, &y)| {
                let r = model(a, x) - y;
                r * r
            })
            .sum::<f64>()
            * 0.5
    }

    /// Least-squares `xi1, xi4, xi5` for fixed `xi2, xi3`, with the cost.
    fn project(&self, steep: f64, center: f64) -> Option<(Vec5, f64)> {
        let mut ata = Mat3::zeros();
        let mut aty = Vec3::zeros();
        for (&x, &y) in self.x.iter().zip(self.y) {
            let row = Vec3::new(0.5 - sigmoid_tail(steep * (x - center)), x, 1.0);
            ata += row * row.transpose();
            aty += row * y;
        }
        let lin = solve_ridged(ata, aty)?;
        let a = Vec5::new(lin[0], steep, center, lin[1], lin[2]);
        let c = self.cost(&a);
        c.is_finite().then_some((a, c))
    }

    /// Gradient and Kaufman-reduced Gauss-Newton matrix in `(xi2, xi3)`,
    /// assuming the linear terms are already at their least-squares values.
    fn reduced_equations(&self, a: &Vec5) -> Option<(SMatrix<f64, 2, 2>, SVector<f64, 2>)> {
        let mut btb = Mat3::zeros();
        let mut btd = SMatrix::<f64, 3, 2>::zeros();
        let mut dtd = SMatrix::<f64, 2, 2>::zeros();
        let mut g = SVector::<f64, 2>::zeros();
        for (&x, &y) in self.x.iter().zip(self.y) {
            let s = sigmoid_tail(a[1] * (x - a[2]));
            let ds = s * (1.0 - s);
            let b = Vec3::new(0.5 - s, x, 1.0);
            let d = SVector::<f64, 2>::new(a[0] * ds * (x - a[2]), -a[0] * ds * a[1]);
            let r = model(a, x) - y;
            btb += b * b.transpose();
            btd += b * d.transpose();
            dtd += d * d.transpose();
            g += d * r;
        }
        let chol = ridged(btb).cholesky()?;
        let reduced = dtd - btd.transpose() * chol.solve(&btd);
        Some((reduced, g))
    }

    /// Levenberg-Marquardt over the two nonlinear parameters, with the
    /// linear ones projected out at every trial point.
    fn levenberg_marquardt(&self, start: Vec5) -> Run {
        let Some((mut a, mut cost)) = self.project(start[1], start[2]) else {
            return Run {
                params: start,
                cost: f64::INFINITY,
                iterations: 0,
                gradient_norm: f64::INFINITY,
                converged: false,
            };
        };
        let mut lambda = 1e-3;
        let mut iterations = 0;
        let mut gradient_norm = f64::INFINITY;
        let mut converged = false;
        while iterations < MAX_ITERATIONS {
            iterations += 1;
            let Some((jtj, g)) = self.reduced_equations(&a) else {
                break;
            };
            gradient_norm = g.amax();
            if gradient_norm < GRADIENT_TOLERANCE {
                converged = true;
                break;
            }
            let floor = jtj.diagonal().amax().max(1e-12) * 1e-12;
            let mut accepted = None;
            while lambda < 1e16 {
                let mut damped = jtj;
                for k in 0..2 {
                    damped[(k, k)] += lambda * jtj[(k, k)].max(floor);
                }
                if let Some(step) = damped.cholesky().map(|c| c.solve(&(-g))) {
                    if let Some((candidate, c)) = self.project(a[1] + step[0], a[2] + step[1]) {
                        if c < cost {
                            accepted = Some((candidate, c));
                            lambda = (lambda / 10.0).max(1e-12);
                            break;
                        }
                    }
                }
                lambda *= 10.0;
            }
            let Some((candidate, c)) = accepted else {
                break;
            };
            let relative = (cost - c) / cost.max(f64::MIN_POSITIVE);
            a = candidate;
            cost = c;
            if relative < COST_TOLERANCE {
                converged = true;
                break;
            }
        }
        Run {
            params: a,
            cost,
            iterations,
            gradient_norm,
            converged,
        }
    }
}

fn ridged(mut m: Mat3) -> Mat3 {
    let ridge = m.trace().max(f64::MIN_POSITIVE) * 1e-13;
    for k in 0..3 {
        m[(k, k)] += ridge;
    }
    m
}

fn solve_ridged(m: Mat3, rhs: Vec3) -> Option<Vec3> {
    ridged(m).cholesky().map(|c| c.solve(&rhs))
}

fn model(a: &Vec5, x: f64) -> f64 {
    a[0] * (0.5 - sigmoid_tail(a[1] * (x - a[2]))) + a[3] * x + a[4]
}

fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n;
    (m, var.sqrt())
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(|a, b| a.total_cmp(b));
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        (s[n / 2 - 1] + s[n / 2]) / 2.0
    }
}

fn range(v: &[f64]) -> f64 {
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    hi - lo
}

pub(crate) fn check_inputs(pred: &[f64], mos: &[f64]) -> Result<()> {
    if pred.len() != mos.len() {
        return Err(Error::invalid(format!(
            "{} predictions for {} MOS values",
            pred.len(),
            mos.len()
        )));
    }
    if pred.len() < MIN_SAMPLES {
        return Err(Error::invalid(format!(
            "need at least {MIN_SAMPLES} samples, got {}",
            pred.len()
        )));
    }
    if pred.iter().chain(mos).any(|v| !v.is_finite()) {
        return Err(Error::invalid("non-finite prediction or MOS value"));
    }
    Ok(())
}

pub fn fit_logistic(pred: &[f64], mos: &[f64]) -> Result<LogisticFit> {
    check_inputs(pred, mos)?;
    let (mp, sp) = mean_sd(pred);
    let (my, sy) = mean_sd(mos);
    if sp == 0.0 || range(pred) == 0.0 {
        return Err(Error::DegenerateFit("predictions are constant".into()));
    }
    if sy == 0.0 {
        return Err(Error::DegenerateFit("MOS values are constant".into()));
    }
    let x: Vec<f64> = pred.iter().map(|p| (p - mp) / sp).collect();
    let y: Vec<f64> = mos.iter().map(|m| (m - my) / sy).collect();
    let problem = Problem { x: &x, y: &y };

    // least-squares line on standardized data: slope = correlation, intercept 0
    let slope = x.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>() / x.len() as f64;
    let center = median(&x);
    let steepness = 4.0 / range(&x);
    let documented = Vec5::new(range(&y), steepness, center, slope, 0.0);
    let affine = Vec5::new(0.0, steepness, center, slope, 0.0);

    let mut runs = 0;
    let mut best: Option<(Run, String)> = None;
    let mut consider = |run: Run, label: String| {
        runs += 1;
        let converged = run.converged;
        if best.as_ref().is_none_or(|(b, _)| run.cost < b.cost) {
            best = Some((run, label));
        }
        converged
    };
    let mut converged = consider(problem.levenberg_marquardt(documented), "documented".into());
    for restart in 1..=RESTARTS {
        if converged {
            break;
        }
        let sign = if restart % 2 == 1 { -1.0 } else { 1.0 };
        let mut jittered = documented;
        jittered[1] = sign * steepness * (1.0 + 0.5 * restart as f64);
        converged = consider(
            problem.levenberg_marquardt(jittered),
            format!("documented/restart{restart}"),
        );
    }
    consider(
        Run {
            params: affine,
            cost: problem.cost(&affine),
            iterations: 0,
            gradient_norm: f64::NAN,
            converged: true,
        },
        "affine".into(),
    );
    let (run, start) = best.expect("at least one run");

    let a = run.params;
    let standardized = LogisticParams::from_vec(&a);
    let params = LogisticParams {
        xi1: sy * standardized.xi1,
        xi2: standardized.xi2 / sp,
        xi3: mp + sp * standardized.xi3,
        xi4: sy * standardized.xi4 / sp,
        xi5: sy * (standardized.xi5 - standardized.xi4 * mp / sp) + my,
    };
    if !params.is_finite() {
        return Err(Error::DegenerateFit(
            "fitted parameters are not finite".into(),
        ));
    }
    let rmse = (2.0 * run.cost / x.len() as f64).sqrt() * sy;
    Ok(LogisticFit {
        params,
        diagnostics: FitDiagnostics {
            iterations: run.iterations,
            converged: run.converged,
            gradient_norm: run.gradient_norm,
            rmse,
            runs,
            start,
        },
    })
}
