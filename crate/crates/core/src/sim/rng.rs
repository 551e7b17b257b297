use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

use crate::config::{AccrualModel, EventTimeModel, TrialConfig};
use crate::domain::{Dose, Scenario};
use crate::error::{Error, Result};

/// SplitMix64 finalizer.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// FNV-1a hash of a label.
pub fn label_hash(s: &str) -> u64 {
    s.bytes().fold(0xCBF2_9CE4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01B3)
    })
}

/// Mixes a base seed with stream identifiers.
pub fn derive_seed(seed: u64, parts: &[u64]) -> u64 {
    parts.iter().fold(splitmix64(seed), |h, &p| splitmix64(h ^ p))
}

/// Independent sub-streams of one seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stream {
    Arrivals = 0,
    Outcomes = 1,
    Randomization = 2,
}

pub fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

/// Outcome of one patient: event indicators and event times since arrival.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PatientOutcome {
    pub tox_event: bool,
    pub tox_time: Option<f64>,
    pub eff_event: bool,
    pub eff_time: Option<f64>,
}

/// Independent toxicity and efficacy draws at `dose`. Exactly four uniforms
/// are consumed per patient.
pub fn simulate_patient<R: Rng>(scenario: &Scenario, dose: Dose, cfg: &TrialConfig, rng: &mut R) -> PatientOutcome {
    let u: [f64; 4] = std::array::from_fn(|_| rng.random::<f64>());
    let tox_event = u[0] < scenario.tox(dose);
    let eff_event = u[1] < scenario.eff(dose);
    PatientOutcome {
        tox_event,
        tox_time: tox_event.then(|| event_time(cfg.event_time, cfg.tox_window, u[2])),
        eff_event,
        eff_time: eff_event.then(|| event_time(cfg.event_time, cfg.eff_window, u[3])),
    }
}

/// Event time in `(0, window]` from a uniform `u` in `[0, 1)`.
fn event_time(model: EventTimeModel, window: f64, u: f64) -> f64 {
    let v = 1.0 - u;
    match model {
        EventTimeModel::Uniform => window * v,
        EventTimeModel::Weibull { shape } => {
            // inverse CDF of a Weibull(shape, scale = window) truncated to the window
            let f_w = 1.0 - (-1.0f64).exp();
            let t = window * (-(1.0 - v * f_w).ln()).powf(1.0 / shape);
            t.clamp(f64::MIN_POSITIVE, window)
        }
    }
}

/// Patient arrival process.
pub struct Accrual {
    rng: ChaCha8Rng,
    rate: f64,
    model: AccrualModel,
    exp: Exp<f64>,
}

impl Accrual {
    pub fn new(rng: ChaCha8Rng, rate: f64, model: AccrualModel) -> Result<Self> {
        let exp = Exp::new(rate).map_err(|e| Error::InvalidParameter(format!("accrual rate {rate}: {e}")))?;
        Ok(Self { rng, rate, model, exp })
    }

    /// Next arrival after `t`.
    pub fn next_after(&mut self, t: f64) -> f64 {
        match self.model {
            AccrualModel::Poisson => t + self.exp.sample(&mut self.rng),
            AccrualModel::Deterministic => t + 1.0 / self.rate,
        }
    }
}
