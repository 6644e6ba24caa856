//! Birth/death rate models.
//!
//! A [`ModelSpec`] carries a pair of parameterized rate functions
//! `lambda_z(theta)` and `mu_z(theta)` of the (real-valued) population size
//! `z`. Rates accept real `z`, not just integers, because the diffusion
//! method differentiates them. Any raw rate value that comes out negative is
//! clamped to 0; state 0 never has a downward transition for the built-in
//! models.

use crate::error::{Error, Result};
use std::fmt;
use std::sync::Arc;

/// Rate function: `(z, theta) -> rate`.
pub type RateFn = Arc<dyn Fn(f64, &[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
enum StateBound {
    None,
    /// Hard bound read from a parameter position (rounded at evaluation).
    FromParam(usize),
}

/// When rates factor as `lambda_z = f(z) * theta[bi]` and
/// `mu_z = g(z) * theta[di]`, the continuous-data MLE has a closed form.
#[derive(Clone)]
pub(crate) struct LinearFactorization {
    pub birth_shape: RateFn,
    pub death_shape: RateFn,
    /// Index of the birth-rate parameter, if the birth rate carries one.
    pub birth_idx: Option<usize>,
    pub death_idx: Option<usize>,
}

/// A parameterized birth-and-death model.
#[derive(Clone)]
pub struct ModelSpec {
    label: String,
    birth: RateFn,
    death: RateFn,
    param_count: usize,
    bound: StateBound,
    pub(crate) factorization: Option<LinearFactorization>,
}

impl fmt::Debug for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ModelSpec")
            .field("label", &self.label)
            .field("param_count", &self.param_count)
            .finish()
    }
}

/// The thirteen built-in model labels, in the order they are documented.
pub const BUILTIN_LABELS: [&str; 13] = [
    "linear",
    "linear-migration",
    "pure-birth",
    "pure-death",
    "Poisson",
    "Verhulst",
    "Ricker",
    "Hassell",
    "MS-S",
    "Moran",
    "M/M/1",
    "M/M/inf",
    "loss-system",
];

fn clamp(v: f64) -> f64 {
    if v.is_nan() {
        v
    } else if v < 0.0 {
        0.0
    } else {
        v
    }
}

impl ModelSpec {
    /// Builds one of the thirteen built-in models by label.
    pub fn builtin(label: &str) -> Result<ModelSpec> {
        let spec = match label {
            "linear" => ModelSpec {
                label: label.into(),
                birth: Arc::new(|z, p| p[0] * z),
                death: Arc::new(|z, p| p[1] * z),
                param_count: 2,
                bound: StateBound::None,
                factorization: Some(LinearFactorization {
                    birth_shape: Arc::new(|z, _| z),
                    death_shape: Arc::new(|z, _| z),
                    birth_idx: Some(0),
                    death_idx: Some(1),
                }),
            },
            "linear-migration" => ModelSpec {
                label: label.into(),
                birth: Arc::new(|z, p| p[0] * z + p[2]),
                death: Arc::new(|z, p| p[1] * z),
                param_count: 3,
                bound: StateBound::None,
                factorization: None,
            },
            "pure-birth" => ModelSpec {
                label: label.into(),
                birth: Arc::new(|z, p| p[0] * z),
                death: Arc::new(|_, _| 0.0),
                param_count: 1,
                bound: StateBound::None,
                factorization: Some(LinearFactorization {
                    birth_shape: Arc::new(|z, _| z),
                    death_shape: Arc::new(|_, _| 0.0),
                    birth_idx: Some(0),
                    death_idx: None,
                }),
            },
            "pure-death" => ModelSpec {
                label: label.into(),
                birth: Arc::new(|_, _| 0.0),
                death: Arc::new(|z, p| p[0] * z),
                param_count: 1,
                bound: StateBound::None,
                factorization: Some(LinearFactorization {
                    birth_shape: Arc::new(|_, _| 0.0),
                    death_shape: Arc::new(|z, _| z),
                    birth_idx: None,
                    death_idx: Some(0),
                }),
            },
            "Poisson" => ModelSpec {
                label: label.into(),
                birth: Arc::new(|_, p| p[0]),
                death: Arc::new(|_, _| 0.0),
                param_count: 1,
                bound: StateBound::None,
                factorization: Some(LinearFactorization {
                    birth_shape: Arc::new(|_, _| 1.0),
                    death_shape: Arc::new(|_, _| 0.0),
                    birth_idx: Some(0),
                    death_idx: None,
                }),
            },
            "Verhulst" => ModelSpec {
                label: label.into(),
                birth: Arc::new(|z, p| p[0] * (1.0 - p[2] * z) * z),
                death: Arc::new(|z, p| p[1] * (1.0 + p[3] * z) * z),
                param_count: 4,
                bound: StateBound::None,
                factorization: None,
            },
            "Ricker" => ModelSpec {
                label: label.into(),
                birth: Arc::new(|z, p| p[0] * z * (-(p[2] * z).powf(p[3])).exp()),
                death: Arc::new(|z, p| p[1] * z),
                param_count: 4,
                bound: StateBound::None,
                factorization: None,
            },
            "Hassell" => ModelSpec {
                label: label.into(),
                birth: Arc::new(|z, p| p[0] * z / (1.0 + p[2] * z).powf(p[3])),
                death: Arc::new(|z, p| p[1] * z),
                param_count: 4,
                bound: StateBound::None,
                factorization: None,
            },
            "MS-S" => ModelSpec {
                label: label.into(),
                birth: Arc::new(|z, p| p[0] * z / (1.0 + (p[2] * z).powf(p[3]))),
                death: Arc::new(|z, p| p[1] * z),
                param_count: 4,
                bound: StateBound::None,
                factorization: None,
            },
            "Moran" => ModelSpec {
                label: label.into(),
                // theta = (alpha, beta, u, v, N); N rounded at evaluation
                birth: Arc::new(|z, p| {
                    let n = p[4].round();
                    (n - z) / n * ((p[0] * z * (1.0 - p[2]) + p[1] * (n - z) * p[3]) / n)
                }),
                death: Arc::new(|z, p| {
                    let n = p[4].round();
                    z / n * ((p[1] * (n - z) * (1.0 - p[3]) + p[0] * z * p[2]) / n)
                }),
                param_count: 5,
                bound: StateBound::FromParam(4),
                factorization: None,
            },
            "M/M/1" => ModelSpec {
                label: label.into(),
                birth: Arc::new(|_, p| p[0]),
                death: Arc::new(|z, p| if z > 0.0 { p[1] } else { 0.0 }),
                param_count: 2,
                bound: StateBound::None,
                factorization: Some(LinearFactorization {
                    birth_shape: Arc::new(|_, _| 1.0),
                    death_shape: Arc::new(|z, _| if z > 0.0 { 1.0 } else { 0.0 }),
                    birth_idx: Some(0),
                    death_idx: Some(1),
                }),
            },
            "M/M/inf" => ModelSpec {
                label: label.into(),
                birth: Arc::new(|_, p| p[0]),
                death: Arc::new(|z, p| p[1] * z),
                param_count: 2,
                bound: StateBound::None,
                factorization: Some(LinearFactorization {
                    birth_shape: Arc::new(|_, _| 1.0),
                    death_shape: Arc::new(|z, _| z),
                    birth_idx: Some(0),
                    death_idx: Some(1),
                }),
            },
            "loss-system" => ModelSpec {
                label: label.into(),
                // theta = (gamma, nu, c); c rounded at evaluation
                birth: Arc::new(|z, p| if z < p[2].round() { p[0] } else { 0.0 }),
                death: Arc::new(|z, p| p[1] * z),
                param_count: 3,
                bound: StateBound::None,
                factorization: None,
            },
            other => {
                return Err(Error::UnknownModel {
                    given: other.into(),
                    valid: BUILTIN_LABELS.join(", "),
                })
            }
        };
        Ok(spec)
    }

    /// Wraps user-supplied rate functions with the same clamping contract as
    /// the built-in models.
    pub fn custom<B, D>(birth: B, death: D, param_count: usize) -> ModelSpec
    where
        B: Fn(f64, &[f64]) -> f64 + Send + Sync + 'static,
        D: Fn(f64, &[f64]) -> f64 + Send + Sync + 'static,
    {
        ModelSpec {
            label: "custom".into(),
            birth: Arc::new(birth),
            death: Arc::new(death),
            param_count,
            bound: StateBound::None,
            factorization: None,
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn param_count(&self) -> usize {
        self.param_count
    }

    /// Validates a parameter vector's length.
    pub fn check_params(&self, params: &[f64]) -> Result<()> {
        if params.len() != self.param_count {
            return Err(Error::InvalidParams(format!(
                "model \"{}\" expects {} parameters, got {}",
                self.label,
                self.param_count,
                params.len()
            )));
        }
        Ok(())
    }

    /// Population birth rate, clamped at 0.
    pub fn birth_rate(&self, z: f64, params: &[f64]) -> f64 {
        clamp((self.birth)(z, params))
    }

    /// Population death rate, clamped at 0.
    pub fn death_rate(&self, z: f64, params: &[f64]) -> f64 {
        clamp((self.death)(z, params))
    }

    /// Hard upper bound of the state space, when the model has one.
    pub fn state_bound(&self, params: &[f64]) -> Option<u64> {
        match self.bound {
            StateBound::None => None,
            StateBound::FromParam(i) => Some(params[i].round().max(0.0) as u64),
        }
    }

    /// Carrying capacity: the closest integer to the smallest `z > 0` where
    /// birth and death rates balance. Absent when no positive crossing
    /// exists (e.g. the linear model).
    pub fn carrying_capacity(&self, params: &[f64]) -> Option<u64> {
        let upper = self.state_bound(params).unwrap_or(1_000_000);
        self.carrying_capacity_with_upper(params, upper)
    }

    /// Same as [`Self::carrying_capacity`] with an explicit search ceiling.
    pub fn carrying_capacity_with_upper(&self, params: &[f64], upper: u64) -> Option<u64> {
        let f = |z: f64| self.birth_rate(z, params) - self.death_rate(z, params);
        let upper = upper.max(2);
        let mut prev_z = 1.0f64;
        let mut prev_f = f(prev_z);
        if prev_f == 0.0 {
            return Some(1);
        }
        for zi in 2..=upper {
            let z = zi as f64;
            let fz = f(z);
            if fz == 0.0 {
                // exact balance at an integer state
                return Some(zi);
            }
            if prev_f.signum() != fz.signum() && prev_f.is_finite() && fz.is_finite() {
                // bisection to 1e-6 inside (prev_z, z)
                let (mut lo, mut hi) = (prev_z, z);
                let mut flo = prev_f;
                while hi - lo > 1e-6 {
                    let mid = 0.5 * (lo + hi);
                    let fm = f(mid);
                    if fm == 0.0 {
                        lo = mid;
                        hi = mid;
                        break;
                    }
                    if flo.signum() != fm.signum() {
                        hi = mid;
                    } else {
                        lo = mid;
                        flo = fm;
                    }
                }
                return Some((0.5 * (lo + hi)).round().max(1.0) as u64);
            }
            prev_z = z;
            prev_f = fz;
        }
        None
    }
}
