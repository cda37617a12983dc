//! Back and forth between Boolean maps and recurrent network oracles.
//!
//! A network oracle answers one-step questions: given the component to
//! update and the current configuration, it returns the next configuration.
//! Any Boolean map is trivially such an oracle, which gives an exact
//! chaotic (or not) recurrent network; conversely, querying an oracle on
//! every (component, configuration) pair recovers the map it realizes, so
//! a trained network can be certified by extraction.

use serde::Serialize;

use crate::codec::{gray_decode, gray_encode, strategy_encode, unscale_value, Scheme};
use crate::dynamics::{BoolConfig, BooleanMap, Strategy};
use crate::error::{Error, Result};
use crate::graph::{certify_chaos, ChaosCertificate};
use crate::metric::config_distance;
use crate::train::{clamp_natural, SavedModel};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

/// One step of an asynchronous recurrent network: the next configuration
/// when component `component` fires on input `x`.
pub trait NetworkOracle {
    fn n(&self) -> usize;
    fn query(&self, component: usize, x: BoolConfig) -> Result<BoolConfig>;
}

/// The oracle a Boolean map defines; exact by construction.
#[derive(Clone, Debug)]
pub struct ExactOracle {
    map: BooleanMap,
}

impl ExactOracle {
    pub fn new(map: BooleanMap) -> Self {
        Self { map }
    }

    pub fn map(&self) -> &BooleanMap {
        &self.map
    }
}

impl NetworkOracle for ExactOracle {
    fn n(&self) -> usize {
        self.map.n()
    }
    fn query(&self, component: usize, x: BoolConfig) -> Result<BoolConfig> {
        self.map.step(component, x)
    }
}

/// A trained model acting as a network oracle. The question (component s,
/// configuration x) is posed as the sample it was trained on: start x,
/// strategy (s, s), one iteration. The model must predict the full
/// configuration, so a single-column network for a non-configuration output
/// is rejected.
#[derive(Clone, Debug)]
pub struct MlpOracle {
    saved: SavedModel,
}

impl MlpOracle {
    pub fn new(saved: SavedModel) -> Result<Self> {
        let covers_config = match saved.scheme {
            Scheme::One => saved.output_index.is_none(),
            Scheme::Two => saved.output_index.is_none(),
            Scheme::TwoSplit => matches!(saved.output_index, None | Some(0)),
        };
        if !covers_config {
            return Err(Error::UnsuitableOracle(format!(
                "single-output model for column {:?} does not predict the configuration",
                saved.output_index
            )));
        }
        let expected_inputs = saved.scheme.input_width(saved.n);
        if saved.model.dims().inputs != expected_inputs {
            return Err(Error::UnsuitableOracle(format!(
                "model takes {} inputs but scheme {} on {} components needs {}",
                saved.model.dims().inputs,
                saved.scheme,
                saved.n,
                expected_inputs
            )));
        }
        if saved.k < 2 {
            return Err(Error::UnsuitableOracle(
                "model was trained without length-2 strategies".into(),
            ));
        }
        Ok(Self { saved })
    }

    pub fn saved(&self) -> &SavedModel {
        &self.saved
    }
}

impl NetworkOracle for MlpOracle {
    fn n(&self) -> usize {
        self.saved.n
    }

    fn query(&self, component: usize, x: BoolConfig) -> Result<BoolConfig> {
        let n = self.saved.n;
        if x.n() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: x.n(),
            });
        }
        if component == 0 || component > n {
            return Err(Error::ComponentOutOfRange { component, n });
        }
        let strategy = Strategy::new(vec![component as u8, component as u8], n)?;
        let code = strategy_encode(&strategy, n)?;
        let raw: Vec<u64> = match self.saved.scheme {
            Scheme::One => {
                let mut row: Vec<u64> = x.bits().iter().map(|&b| b as u64).collect();
                row.push(code);
                row.push(1);
                row
            }
            Scheme::Two | Scheme::TwoSplit => {
                vec![gray_encode(x.value() as u64, n)?, code, 1]
            }
        };
        let scaled = self.saved.model.forward(&self.saved.scale_inputs(&raw))?;
        let output: Vec<f64> = scaled
            .iter()
            .zip(&self.saved.output_ranges)
            .map(|(&y, &range)| unscale_value(y, range))
            .collect();
        match self.saved.scheme {
            Scheme::One => {
                let mut y = BoolConfig::zero(n)?;
                for (i, &v) in output.iter().take(n).enumerate() {
                    y = y.with_bit(i + 1, v >= 0.5)?;
                }
                Ok(y)
            }
            Scheme::Two | Scheme::TwoSplit => {
                let (min, max) = self.saved.output_ranges[0];
                // The recorded range never exceeds the Gray codes seen in
                // training, so the clamped value always decodes.
                let gray = clamp_natural(output[0], min, max.min((1 << n) - 1));
                let value = gray_decode(gray, n)?;
                Ok(BoolConfig::new(n, value as u16)?)
            }
        }
    }
}

/// Recovers the map an oracle realizes by asking about every component at
/// every configuration: exactly n * 2^n queries.
pub fn extract_map(oracle: &dyn NetworkOracle) -> Result<BooleanMap> {
    let n = oracle.n();
    let size = 1usize << n;
    let mut table = vec![0u16; size];
    for v in 0..size as u16 {
        let x = BoolConfig::new(n, v)?;
        let mut fx = x;
        for j in 1..=n {
            let answer = oracle.query(j, x)?;
            fx = fx.with_bit(j, answer.bit(j)?)?;
        }
        table[v as usize] = fx.value();
    }
    BooleanMap::new(n, table)
}

/// An orbit produced by running the oracle as a recurrent network: the full
/// response to each strategy term is adopted as the next state.
#[derive(Clone, Debug)]
pub struct RecurrentRun {
    pub start: BoolConfig,
    pub strategy: Strategy,
    pub orbit: Vec<BoolConfig>,
}

pub fn recurrent_run(
    oracle: &dyn NetworkOracle,
    start: BoolConfig,
    strategy: &Strategy,
) -> Result<RecurrentRun> {
    if strategy.is_empty() {
        return Err(Error::EmptyStrategy);
    }
    let mut orbit = Vec::with_capacity(strategy.len());
    let mut x = start;
    for &s in strategy.terms() {
        x = oracle.query(s as usize, x)?;
        orbit.push(x);
    }
    Ok(RecurrentRun {
        start,
        strategy: strategy.clone(),
        orbit,
    })
}

/// Extracts the oracle's map and certifies it.
pub fn certify_network(oracle: &dyn NetworkOracle) -> Result<(BooleanMap, ChaosCertificate)> {
    let map = extract_map(oracle)?;
    let certificate = certify_chaos(&map);
    Ok((map, certificate))
}

#[derive(Clone, Debug, Serialize)]
pub struct Mismatch {
    pub trial: usize,
    pub step: usize,
    pub start: String,
    pub strategy: String,
    pub expected: String,
    pub got: String,
    pub hamming: u32,
}

/// Outcome of comparing an oracle against a reference map on random orbits.
#[derive(Clone, Debug, Serialize)]
pub struct EquivalenceReport {
    pub trials: usize,
    pub horizon: usize,
    pub mismatches: usize,
    pub first_mismatch: Option<Mismatch>,
}

/// Runs `trials` random starts with random strategies of length `horizon`
/// through both the oracle and the reference map and counts trials whose
/// orbits differ anywhere.
pub fn equivalence_check(
    oracle: &dyn NetworkOracle,
    reference: &BooleanMap,
    trials: usize,
    horizon: usize,
    seed: u64,
) -> Result<EquivalenceReport> {
    if oracle.n() != reference.n() {
        return Err(Error::DimensionMismatch {
            expected: reference.n(),
            got: oracle.n(),
        });
    }
    if horizon == 0 {
        return Err(Error::InvalidParameter(
            "comparison horizon must be at least 1".into(),
        ));
    }
    let n = reference.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mismatches = 0;
    let mut first_mismatch = None;
    for trial in 0..trials {
        let start = BoolConfig::new(n, rng.gen_range(0..reference.config_count() as u32) as u16)?;
        let terms: Vec<u8> = (0..horizon).map(|_| rng.gen_range(1..=n as u8)).collect();
        let strategy = Strategy::new(terms, n)?;
        let expected = reference.iterate(start, &strategy, horizon)?;
        let run = recurrent_run(oracle, start, &strategy)?;
        if let Some(step) = expected.iter().zip(&run.orbit).position(|(a, b)| a != b) {
            mismatches += 1;
            if first_mismatch.is_none() {
                first_mismatch = Some(Mismatch {
                    trial,
                    step,
                    start: start.to_string(),
                    strategy: strategy.to_string(),
                    expected: expected[step].to_string(),
                    got: run.orbit[step].to_string(),
                    hamming: config_distance(expected[step], run.orbit[step])?,
                });
            }
        }
    }
    Ok(EquivalenceReport {
        trials,
        horizon,
        mismatches,
        first_mismatch,
    })
}
