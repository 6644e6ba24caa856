//! Sample-path generation.
//!
//! Continuous simulation records every jump; discrete simulation records the
//! state at pre-specified observation times by one of four algorithms:
//! the exact embedded-jump method, Euler ("ea") and midpoint ("ma")
//! tau-leaping, and the piecewise-linear Galton-Watson approximation
//! ("gwa"). Paths are generated on independent substreams indexed by path
//! number, so output is identical whether paths run serially or in parallel.

use crate::error::{Error, Result};
use crate::models::ModelSpec;
use crate::rng::{binomial_variate, exp_variate, neg_binomial_failures, poisson_variate, RngStream};
use rand::Rng;
use rayon::prelude::*;
use std::sync::Arc;

const SURVIVAL_MAX_ATTEMPTS: u64 = 100_000;

/// Discrete simulation algorithm labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimMethod {
    Exact,
    Ea,
    Ma,
    Gwa,
}

impl std::str::FromStr for SimMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(SimMethod::Exact),
            "ea" => Ok(SimMethod::Ea),
            "ma" => Ok(SimMethod::Ma),
            "gwa" => Ok(SimMethod::Gwa),
            other => Err(Error::InvalidInput(format!(
                "unknown simulation method \"{other}\"; expected one of exact, ea, ma, gwa"
            ))),
        }
    }
}

/// Initial state: a fixed count or a sampler invoked once per path.
#[derive(Clone)]
pub enum InitialState {
    Fixed(u64),
    Sampler(Arc<dyn Fn(&mut dyn rand::RngCore) -> u64 + Send + Sync>),
}

impl From<u64> for InitialState {
    fn from(z0: u64) -> Self {
        InitialState::Fixed(z0)
    }
}

impl InitialState {
    fn draw<R: Rng>(&self, rng: &mut R) -> u64 {
        match self {
            InitialState::Fixed(z) => *z,
            InitialState::Sampler(f) => f(rng),
        }
    }
}

/// Event-time path: `jump_times[0] = 0` with `states[0] = z0`, and one entry
/// per transition thereafter.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousPath {
    pub jump_times: Vec<f64>,
    pub states: Vec<u64>,
}

impl ContinuousPath {
    /// State at time `t` (last jump at or before `t`).
    pub fn state_at(&self, t: f64) -> u64 {
        let mut s = self.states[0];
        for (tm, st) in self.jump_times.iter().zip(&self.states) {
            if *tm <= t {
                s = *st;
            } else {
                break;
            }
        }
        s
    }
}

/// Observation-time path.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretePath {
    pub obs_times: Vec<f64>,
    pub states: Vec<u64>,
}

fn validate_times(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::InvalidInput("at least one observation time is required".into()));
    }
    for w in times.windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::InvalidInput(format!(
                "observation times must be strictly increasing ({} then {})",
                w[0], w[1]
            )));
        }
    }
    Ok(())
}

fn one_continuous<R: Rng>(
    model: &ModelSpec,
    params: &[f64],
    z0: u64,
    t_max: f64,
    rng: &mut R,
) -> ContinuousPath {
    let mut t = 0.0;
    let mut z = z0;
    let mut jump_times = vec![0.0];
    let mut states = vec![z0];
    loop {
        let lam = model.birth_rate(z as f64, params);
        let mu = model.death_rate(z as f64, params);
        let total = lam + mu;
        let dt = exp_variate(rng, total);
        if !(t + dt <= t_max) {
            break;
        }
        t += dt;
        let u: f64 = rng.gen();
        if u < lam / total {
            z += 1;
        } else {
            z = z.saturating_sub(1);
        }
        jump_times.push(t);
        states.push(z);
    }
    ContinuousPath { jump_times, states }
}

/// Simulates `k` continuous paths over `[0, t_max]`. With `survival` set,
/// each path is resampled (acceptance-rejection) until the state at `t_max`
/// is positive.
pub fn simulate_continuous(
    model: &ModelSpec,
    params: &[f64],
    z0: impl Into<InitialState>,
    t_max: f64,
    k: usize,
    survival: bool,
    seed: u64,
) -> Result<Vec<ContinuousPath>> {
    model.check_params(params)?;
    if !(t_max > 0.0) {
        return Err(Error::InvalidInput("t_max must be positive".into()));
    }
    if k == 0 {
        return Err(Error::InvalidInput("k must be at least 1".into()));
    }
    let z0 = z0.into();
    (0..k as u64)
        .into_par_iter()
        .map(|path_idx| {
            let mut rng = RngStream::new(seed, path_idx).rng();
            for _attempt in 0..SURVIVAL_MAX_ATTEMPTS {
                let start = z0.draw(&mut rng);
                let path = one_continuous(model, params, start, t_max, &mut rng);
                if !survival || *path.states.last().unwrap() > 0 {
                    return Ok(path);
                }
            }
            Err(Error::SurvivalAttemptsExceeded { attempts: SURVIVAL_MAX_ATTEMPTS })
        })
        .collect()
}

fn exact_discrete<R: Rng>(
    model: &ModelSpec,
    params: &[f64],
    z0: u64,
    times: &[f64],
    rng: &mut R,
) -> Vec<u64> {
    // Variate order (holding time, then direction) matches the continuous
    // algorithm, so equal seeds give matching trajectories.
    let mut z = z0;
    let mut out = Vec::with_capacity(times.len());
    out.push(z0);
    let rate = |z: u64| {
        let lam = model.birth_rate(z as f64, params);
        let mu = model.death_rate(z as f64, params);
        (lam, mu)
    };
    let (mut lam, mut mu) = rate(z);
    let mut s = times[0] + exp_variate(rng, lam + mu);
    for &tj in &times[1..] {
        while s <= tj {
            let u: f64 = rng.gen();
            if u < lam / (lam + mu) {
                z += 1;
            } else {
                z = z.saturating_sub(1);
            }
            let (l, m) = rate(z);
            lam = l;
            mu = m;
            s += exp_variate(rng, lam + mu);
        }
        out.push(z);
    }
    out
}

/// One Galton-Watson composition step: the population after time `tau` when
/// every individual independently founds a linear family with per-individual
/// rates `lam` and `mu`. Extinct families vanish; each surviving family
/// contributes a geometric number of descendants.
pub fn gw_step<R: Rng>(z: u64, lam: f64, mu: f64, tau: f64, rng: &mut R) -> u64 {
    if z == 0 {
        return 0;
    }
    let (b1, b2) = gw_betas(lam, mu, tau);
    let families = binomial_variate(rng, z, 1.0 - b1);
    if families == 0 {
        return 0;
    }
    families + neg_binomial_failures(rng, families, 1.0 - b2)
}

/// Extinction probability `beta_1(tau)` of a single-individual family and the
/// geometric parameter `beta_2(tau)` of surviving-family sizes for a linear
/// process with per-individual rates `lam`, `mu`.
pub fn gw_betas(lam: f64, mu: f64, tau: f64) -> (f64, f64) {
    if lam == mu {
        let b = lam * tau / (1.0 + lam * tau);
        return (b, b);
    }
    let d = lam - mu;
    // overflow-safe form: divide through by exp(d*tau) when d > 0
    let b1 = if d > 0.0 {
        let e = (-d * tau).exp();
        mu * (1.0 - e) / (lam - mu * e)
    } else {
        let e = (d * tau).exp();
        mu * (e - 1.0) / (lam * e - mu)
    };
    let b2 = if mu == 0.0 {
        1.0 - (-lam * tau).exp()
    } else {
        lam * b1 / mu
    };
    (b1.clamp(0.0, 1.0), b2.clamp(0.0, 1.0))
}

fn approx_discrete<R: Rng>(
    model: &ModelSpec,
    params: &[f64],
    z0: u64,
    times: &[f64],
    method: SimMethod,
    tau: f64,
    rng: &mut R,
) -> Vec<u64> {
    let mut z = z0;
    let mut out = Vec::with_capacity(times.len());
    out.push(z0);
    for w in times.windows(2) {
        let gap = w[1] - w[0];
        let mut done = 0.0;
        // the last subinterval shrinks to land exactly on the observation time
        while done < gap - 1e-12 * gap.max(1.0) {
            let h = tau.min(gap - done);
            z = match method {
                SimMethod::Ea => {
                    let lam = model.birth_rate(z as f64, params);
                    let mu = model.death_rate(z as f64, params);
                    let births = poisson_variate(rng, lam * h);
                    let deaths = poisson_variate(rng, mu * h);
                    (z + births).saturating_sub(deaths)
                }
                SimMethod::Ma => {
                    let lam = model.birth_rate(z as f64, params);
                    let mu = model.death_rate(z as f64, params);
                    let mid = z as f64 + 0.5 * h * (lam - mu);
                    let lam_m = model.birth_rate(mid, params);
                    let mu_m = model.death_rate(mid, params);
                    let births = poisson_variate(rng, lam_m * h);
                    let deaths = poisson_variate(rng, mu_m * h);
                    (z + births).saturating_sub(deaths)
                }
                SimMethod::Gwa => {
                    if z == 0 {
                        // per-individual rates are undefined at 0; fall back
                        // to an Euler step so migration can restart the
                        // population
                        let lam = model.birth_rate(0.0, params);
                        if lam > 0.0 {
                            poisson_variate(rng, lam * h)
                        } else {
                            0
                        }
                    } else {
                        let lam = model.birth_rate(z as f64, params) / z as f64;
                        let mu = model.death_rate(z as f64, params) / z as f64;
                        gw_step(z, lam, mu, h, rng)
                    }
                }
                SimMethod::Exact => unreachable!(),
            };
            done += h;
        }
        out.push(z);
    }
    out
}

/// Simulates `k` discrete paths observed at `times`.
#[allow(clippy::too_many_arguments)]
pub fn simulate_discrete(
    model: &ModelSpec,
    params: &[f64],
    z0: impl Into<InitialState>,
    times: &[f64],
    method: SimMethod,
    tau: f64,
    k: usize,
    survival: bool,
    seed: u64,
) -> Result<Vec<DiscretePath>> {
    model.check_params(params)?;
    validate_times(times)?;
    if k == 0 {
        return Err(Error::InvalidInput("k must be at least 1".into()));
    }
    if method != SimMethod::Exact && !(tau > 0.0) {
        return Err(Error::InvalidInput("tau must be positive for approximate methods".into()));
    }
    let z0 = z0.into();
    (0..k as u64)
        .into_par_iter()
        .map(|path_idx| {
            let mut rng = RngStream::new(seed, path_idx).rng();
            for _attempt in 0..SURVIVAL_MAX_ATTEMPTS {
                let start = z0.draw(&mut rng);
                let states = match method {
                    SimMethod::Exact => exact_discrete(model, params, start, times, &mut rng),
                    _ => approx_discrete(model, params, start, times, method, tau, &mut rng),
                };
                if !survival || *states.last().unwrap() > 0 {
                    return Ok(DiscretePath { obs_times: times.to_vec(), states });
                }
            }
            Err(Error::SurvivalAttemptsExceeded { attempts: SURVIVAL_MAX_ATTEMPTS })
        })
        .collect()
}

/// Final state of one exact path over elapsed time `t` (no path storage);
/// used by the Monte-Carlo probability method and ABC.
pub(crate) fn exact_final_state<R: Rng>(
    model: &ModelSpec,
    params: &[f64],
    z0: u64,
    t: f64,
    rng: &mut R,
) -> u64 {
    let mut z = z0;
    let mut s = 0.0;
    loop {
        let lam = model.birth_rate(z as f64, params);
        let mu = model.death_rate(z as f64, params);
        let total = lam + mu;
        let dt = exp_variate(rng, total);
        if !(s + dt <= t) {
            return z;
        }
        s += dt;
        let u: f64 = rng.gen();
        if u < lam / total {
            z += 1;
        } else {
            z = z.saturating_sub(1);
        }
    }
}

/// Single transition by an approximate method; used by ABC's conditional
/// dataset simulation.
pub(crate) fn approx_final_state<R: Rng>(
    model: &ModelSpec,
    params: &[f64],
    z0: u64,
    t: f64,
    method: SimMethod,
    tau: f64,
    rng: &mut R,
) -> u64 {
    match method {
        SimMethod::Exact => exact_final_state(model, params, z0, t, rng),
        _ => {
            let times = [0.0, t];
            let states = approx_discrete(model, params, z0, &times, method, tau, rng);
            states[1]
        }
    }
}
