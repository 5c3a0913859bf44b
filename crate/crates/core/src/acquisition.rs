//! UCB, the aggregated UCB-MI acquisition, the `beta_t` schedule and a
//! derivative-free maximizer over a box.

use std::f64::consts::PI;

use rand::Rng;
use thiserror::Error;

use crate::data::Domain;
use crate::gp::GpModel;

const INV_PHI: f64 = 0.618_033_988_749_894_8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AcqError {
    #[error("invalid beta schedule: {0}")]
    InvalidSchedule(String),
    #[error("iteration index must be >= 1")]
    ZeroIteration,
    #[error("acquisition value {value} is not finite at {point:?}")]
    NonFinite { point: Vec<f64>, value: f64 },
    #[error("maximizer needs at least one candidate")]
    NoCandidates,
}

/// Constants of the regret-bound exploration schedule. `radius` is the side
/// of the search cube, 1 in normalized space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaParams {
    pub delta: f64,
    pub a: f64,
    pub b: f64,
    pub radius: f64,
}

impl Default for BetaParams {
    fn default() -> Self {
        Self {
            delta: 0.1,
            a: 1.0,
            b: 1.0,
            radius: 1.0,
        }
    }
}

/// `beta_t = 2 log(t^2 2 pi^2 / (3 delta)) + 2 d log(t^2 d b r sqrt(log(4 d a / delta)))`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaSchedule {
    params: BetaParams,
    dims: usize,
}

impl BetaSchedule {
    pub fn new(params: BetaParams, dims: usize) -> Result<Self, AcqError> {
        let BetaParams { delta, a, b, radius } = params;
        if !(delta > 0.0 && delta < 1.0) {
            return Err(AcqError::InvalidSchedule(format!("delta {delta} not in (0, 1)")));
        }
        if !(a > 0.0 && b > 0.0 && radius > 0.0) || dims == 0 {
            return Err(AcqError::InvalidSchedule(
                "a, b, radius and dims must be positive".into(),
            ));
        }
        let d = dims as f64;
        if (4.0 * d * a / delta).ln() <= 0.0 {
            return Err(AcqError::InvalidSchedule(format!(
                "log(4 d a / delta) = {} must be positive",
                (4.0 * d * a / delta).ln()
            )));
        }
        let s = Self { params, dims };
        let first = s.eval(1.0);
        if !(first.is_finite() && first > 0.0) {
            return Err(AcqError::InvalidSchedule(format!("beta_1 = {first} is not positive")));
        }
        Ok(s)
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn beta(&self, t: usize) -> Result<f64, AcqError> {
        if t == 0 {
            return Err(AcqError::ZeroIteration);
        }
        Ok(self.eval(t as f64))
    }

    fn eval(&self, t: f64) -> f64 {
        let BetaParams { delta, a, b, radius } = self.params;
        let d = self.dims as f64;
        let t2 = t * t;
        2.0 * (t2 * 2.0 * PI * PI / (3.0 * delta)).ln()
            + 2.0 * d * (t2 * d * b * radius * (4.0 * d * a / delta).ln().sqrt()).ln()
    }
}

/// `mu(x) + sqrt(beta) sigma(x)`.
pub fn ucb(model: &GpModel, beta: f64, x: &[f64]) -> f64 {
    let (mu, var) = model.posterior(x);
    mu + beta.sqrt() * var.sqrt()
}

/// Mean of `values` plus `beta_alpha` times their sample standard deviation
/// (divisor `Q - 1`). A single value is returned unchanged.
pub fn aggregate(values: &[f64], beta_alpha: f64) -> f64 {
    match values {
        [] => f64::NAN,
        [only] => *only,
        [first, rest @ ..] => {
            // shifted by the first value so identical inputs aggregate exactly
            let q = values.len() as f64;
            let mean_shift = rest.iter().map(|v| v - first).sum::<f64>() / q;
            let ss: f64 = values
                .iter()
                .map(|v| {
                    let dev = (v - first) - mean_shift;
                    dev * dev
                })
                .sum();
            let std = (ss / (q - 1.0)).sqrt();
            (first + mean_shift) + beta_alpha * std
        }
    }
}

/// UCB-MI over `Q` models fitted on different completions of the data.
pub fn ucb_mi(models: &[GpModel], beta: f64, beta_alpha: f64, x: &[f64]) -> f64 {
    if let [only] = models {
        return ucb(only, beta, x);
    }
    let alphas: Vec<f64> = models.iter().map(|m| ucb(m, beta, x)).collect();
    aggregate(&alphas, beta_alpha)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaximizerConfig {
    /// Uniform random candidates per call.
    pub candidates: usize,
    /// Best candidates refined locally.
    pub starts: usize,
    /// Coordinate line searches per start.
    pub iterations: usize,
    /// Golden-section reductions per line search.
    pub golden_steps: usize,
}

impl Default for MaximizerConfig {
    fn default() -> Self {
        Self {
            candidates: 2000,
            starts: 10,
            iterations: 50,
            golden_steps: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Maximum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
}

/// Random multistart followed by coordinate-wise golden-section refinement.
///
/// Candidates are `cfg.candidates` uniform draws from `domain` followed by
/// `extra` (typically the observed complete points). The number of random
/// draws does not depend on `acq`. Ties go to the lowest candidate index.
pub fn maximize<F, R>(
    acq: F,
    domain: &Domain,
    extra: &[Vec<f64>],
    cfg: &MaximizerConfig,
    rng: &mut R,
) -> Result<Maximum, AcqError>
where
    F: Fn(&[f64]) -> f64,
    R: Rng + ?Sized,
{
    let d = domain.dims();
    let mut candidates: Vec<Vec<f64>> = (0..cfg.candidates)
        .map(|_| {
            (0..d)
                .map(|i| domain.lower()[i] + rng.random::<f64>() * domain.range(i))
                .collect()
        })
        .collect();
    candidates.extend(extra.iter().filter(|p| domain.contains(p)).cloned());
    if candidates.is_empty() {
        return Err(AcqError::NoCandidates);
    }

    let mut evaluations = 0usize;
    let mut eval = |x: &[f64]| -> Result<f64, AcqError> {
        evaluations += 1;
        let v = acq(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(AcqError::NonFinite {
                point: x.to_vec(),
                value: v,
            })
        }
    };

    let mut scored = Vec::with_capacity(candidates.len());
    for (i, c) in candidates.iter().enumerate() {
        scored.push((eval(c)?, i));
    }
    let mut order: Vec<usize> = (0..scored.len()).collect();
    order.sort_by(|&a, &b| {
        scored[b]
            .0
            .total_cmp(&scored[a].0)
            .then(scored[a].1.cmp(&scored[b].1))
    });

    let mut best_x = candidates[order[0]].clone();
    let mut best_val = scored[order[0]].0;
    for &start in order.iter().take(cfg.starts.max(1)) {
        let (x, v) = refine(&mut eval, candidates[start].clone(), scored[start].0, domain, cfg)?;
        if v > best_val {
            best_val = v;
            best_x = x;
        }
    }
    Ok(Maximum {
        x: best_x,
        value: best_val,
        evaluations,
    })
}

fn refine<E>(
    eval: &mut E,
    mut x: Vec<f64>,
    mut fx: f64,
    domain: &Domain,
    cfg: &MaximizerConfig,
) -> Result<(Vec<f64>, f64), AcqError>
where
    E: FnMut(&[f64]) -> Result<f64, AcqError>,
{
    let d = domain.dims();
    let mut width: Vec<f64> = (0..d).map(|i| 0.25 * domain.range(i)).collect();
    let mut probe = x.clone();
    for it in 0..cfg.iterations {
        let i = it % d;
        let lo = (x[i] - width[i]).max(domain.lower()[i]);
        let hi = (x[i] + width[i]).min(domain.upper()[i]);
        probe.copy_from_slice(&x);
        let mut try_at = |t: f64, probe: &mut Vec<f64>, best: &mut (f64, f64)| -> Result<f64, AcqError> {
            probe[i] = t;
            let v = eval(probe)?;
            if v > best.1 {
                *best = (t, v);
            }
            Ok(v)
        };
        let mut best = (x[i], fx);
        try_at(lo, &mut probe, &mut best)?;
        try_at(hi, &mut probe, &mut best)?;
        let (mut a, mut b) = (lo, hi);
        let mut c = b - INV_PHI * (b - a);
        let mut e = a + INV_PHI * (b - a);
        let mut fc = try_at(c, &mut probe, &mut best)?;
        let mut fe = try_at(e, &mut probe, &mut best)?;
        for _ in 1..cfg.golden_steps {
            if fc >= fe {
                b = e;
                e = c;
                fe = fc;
                c = b - INV_PHI * (b - a);
                fc = try_at(c, &mut probe, &mut best)?;
            } else {
                a = c;
                c = e;
                fc = fe;
                e = a + INV_PHI * (b - a);
                fe = try_at(e, &mut probe, &mut best)?;
            }
        }
        if best.1 > fx {
            x[i] = best.0;
            fx = best.1;
        }
        if i == d - 1 {
            for w in width.iter_mut() {
                *w = (*w * 0.5).max(1e-9);
            }
        }
    }
    Ok((x, fx))
}
