//! Platt scaling (M4): per-demographic logistic maps fitted by weighted
//! binary cross-entropy.
//!
//! For demographic `d` with genuine scores `P` and impostor scores `N`, the
//! fit maximizes
//!
//! ```text
//! J(a, b) = w+ sum_{s in P} ln sig(a s + b)
//!         + w- sum_{s in N} ln(1 - sig(a s + b))
//!         - lambda (a^2 + b^2)
//! ```
//!
//! with `sig(t) = 1 / (1 + exp(-t))` and class-balancing weights
//! `w+ = 1/|P|`, `w- = 1/|N|`. The objective is strictly concave, so damped
//! Newton ascent from (0, 0) converges deterministically.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{PairType, ScoreTable};

use super::{FitConfig, FitDiagnostics, ModelPayload, PlattConfig, PlattModel};

/// Fitted logistic parameters: `s' = sig(alpha * s + beta)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlattParams {
    pub alpha: f64,
    pub beta: f64,
}

/// Convergence record of one per-demographic fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlattFit {
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Numerically stable logistic, clamped into the open interval (0, 1).
///
/// The clamp keeps outputs strictly inside the interval where the exact
/// value would round to 0.0 or 1.0 in f64.
pub(super) fn sigmoid(t: f64) -> f64 {
    let p = if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    };
    p.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}

/// `ln(1 + exp(x))` without overflow.
fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else if x < -30.0 {
        x.exp()
    } else {
        x.exp().ln_1p()
    }
}

struct Objective<'a> {
    pos: &'a [f64],
    neg: &'a [f64],
    w_pos: f64,
    w_neg: f64,
    lambda: f64,
}

impl Objective<'_> {
    fn value(&self, a: f64, b: f64) -> f64 {
        // ln sig(t) = -softplus(-t); ln(1 - sig(t)) = -softplus(t)
        let mut j = 0.0;
        for &s in self.pos {
            j -= self.w_pos * softplus(-(a * s + b));
        }
        for &s in self.neg {
            j -= self.w_neg * softplus(a * s + b);
        }
        j - self.lambda * (a * a + b * b)
    }

    fn grad(&self, a: f64, b: f64) -> [f64; 2] {
        let mut ga = 0.0;
        let mut gb = 0.0;
        for &s in self.pos {
            let r = self.w_pos * (1.0 - raw_sigmoid(a * s + b));
            ga += r * s;
            gb += r;
        }
        for &s in self.neg {
            let r = self.w_neg * raw_sigmoid(a * s + b);
            ga -= r * s;
            gb -= r;
        }
        [ga - 2.0 * self.lambda * a, gb - 2.0 * self.lambda * b]
    }

    /// Negated Hessian (positive definite).
    fn neg_hessian(&self, a: f64, b: f64) -> [[f64; 2]; 2] {
        let mut haa = 2.0 * self.lambda;
        let mut hab = 0.0;
        let mut hbb = 2.0 * self.lambda;
        let mut add = |w: f64, s: f64| {
            let p = raw_sigmoid(a * s + b);
            let c = w * p * (1.0 - p);
            haa += c * s * s;
            hab += c * s;
            hbb += c;
        };
        for &s in self.pos {
            add(self.w_pos, s);
        }
        for &s in self.neg {
            add(self.w_neg, s);
        }
        [[haa, hab], [hab, hbb]]
    }
}

fn raw_sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// Damped Newton ascent on the concave objective, starting at (0, 0).
pub(super) fn fit_platt_one(
    pos: &[f64],
    neg: &[f64],
    config: &PlattConfig,
) -> (PlattParams, PlattFit) {
    let objective = Objective {
        pos,
        neg,
        w_pos: 1.0 / pos.len() as f64,
        w_neg: 1.0 / neg.len() as f64,
        lambda: config.lambda,
    };
    let mut a = 0.0;
    let mut b = 0.0;
    let mut j = objective.value(a, b);
    let mut converged = false;
    let mut iterations = 0;

    for iter in 1..=config.max_iterations {
        iterations = iter;
        let g = objective.grad(a, b);
        if g[0].abs().max(g[1].abs()) <= config.grad_tol {
            converged = true;
            break;
        }
        let m = objective.neg_hessian(a, b);
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        // det > 0 holds by Cauchy-Schwarz plus the lambda ridge; the guard
        // falls back to a scaled gradient step
        let (mut da, mut db) = if det > 0.0 {
            (
                (m[1][1] * g[0] - m[0][1] * g[1]) / det,
                (m[0][0] * g[1] - m[1][0] * g[0]) / det,
            )
        } else {
            (g[0] / m[0][0].max(1e-12), g[1] / m[1][1].max(1e-12))
        };
        // backtracking: accept the first step that does not decrease J
        let mut improved = false;
        for _ in 0..60 {
            let (na, nb) = (a + da, b + db);
            let nj = objective.value(na, nb);
            if nj >= j {
                a = na;
                b = nb;
                j = nj;
                improved = true;
                break;
            }
            da *= 0.5;
            db *= 0.5;
        }
        if !improved {
            // no representable ascent step remains; treat as converged when
            // the gradient is already small at working precision
            converged = g[0].abs().max(g[1].abs()) <= 1e-6;
            break;
        }
    }

    (
        PlattParams { alpha: a, beta: b },
        PlattFit {
            objective: j,
            iterations,
            converged,
        },
    )
}

/// Fit one logistic per manifest demographic (M4) from same-demographic
/// genuine and impostor cohort scores.
///
/// Non-convergence is recorded per demographic in the model diagnostics
/// rather than failing the fit; the caller decides.
pub(super) fn fit_platt(
    table: &ScoreTable,
    config: &FitConfig,
) -> Result<(ModelPayload, FitDiagnostics)> {
    let mut diagnostics = FitDiagnostics::default();
    let mut genuine: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let mut impostor: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for record in table.records() {
        let Some(probe_demo) = record.probe_demo.as_ref() else {
            diagnostics.excluded_unlabeled += 1;
            continue;
        };
        if probe_demo.value != record.gallery_demo.value {
            diagnostics.excluded_cross_demo += 1;
            continue;
        }
        let side = match record.pair_type {
            PairType::Genuine => &mut genuine,
            PairType::Impostor => &mut impostor,
        };
        side.entry(record.gallery_demo.value.clone())
            .or_default()
            .push(record.score);
        diagnostics.used_records += 1;
    }

    let mut params_by_demo = BTreeMap::new();
    let mut fit_by_demo = BTreeMap::new();
    for label in &table.manifest().labels {
        let pos = genuine
            .get(label)
            .filter(|s| !s.is_empty())
            .ok_or_else(|| Error::MissingDemographic {
                label: label.clone(),
            })?;
        let neg = impostor
            .get(label)
            .filter(|s| !s.is_empty())
            .ok_or_else(|| Error::MissingDemographic {
                label: label.clone(),
            })?;
        let (params, fit) = fit_platt_one(pos, neg, &config.platt);
        params_by_demo.insert(label.clone(), params);
        fit_by_demo.insert(label.clone(), fit);
    }
    diagnostics.groups = params_by_demo.len();
    Ok((
        ModelPayload::Platt(PlattModel {
            params_by_demo,
            fit_by_demo,
        }),
        diagnostics,
    ))
}
