//! The distance on iteration points and what it reveals.
//!
//! Two points (S, x) and (T, y) are compared by d = d_e + d_s: the Hamming
//! distance between the configurations plus a strategy term
//! d_s = 9/(2n) * sum over t of |S^t - T^t| / 10^(t+1), which lies in
//! [0, (n-1)/(2n)]. The integer part of d therefore counts differing
//! components and the fractional part measures how soon the strategies
//! disagree. Strategies here are finite, so d_s is truncated at a horizon;
//! the missing tail can contribute at most (n-1)/(2n) * 10^(-horizon), which
//! every result reports alongside the truncated value.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dynamics::{BoolConfig, BooleanMap, Strategy, SystemPoint};
use crate::error::{Error, Result};

/// Hamming distance between configurations of equal width.
pub fn config_distance(x: BoolConfig, y: BoolConfig) -> Result<u32> {
    if x.n() != y.n() {
        return Err(Error::DimensionMismatch {
            expected: x.n(),
            got: y.n(),
        });
    }
    Ok((x.value() ^ y.value()).count_ones())
}

/// A truncated strategy distance together with the truncation guarantee.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct StrategyDistance {
    pub value: f64,
    pub horizon: usize,
    pub tail_bound: f64,
}

fn tail_bound(n: usize, horizon: usize) -> f64 {
    (n as f64 - 1.0) / (2.0 * n as f64) * 10f64.powi(-(horizon as i32))
}

/// Strategy part of the distance, truncated to the first `horizon` terms.
/// Where either strategy has ended, the terms are treated as equal.
pub fn strategy_distance(
    a: &Strategy,
    b: &Strategy,
    n: usize,
    horizon: usize,
) -> Result<StrategyDistance> {
    if n == 0 {
        return Err(Error::UnsupportedWidth { n });
    }
    let mut sum = 0.0;
    let mut weight = 0.1;
    for t in 0..horizon {
        if let (Some(a_t), Some(b_t)) = (a.term(t), b.term(t)) {
            sum += (a_t as f64 - b_t as f64).abs() * weight;
        }
        weight /= 10.0;
    }
    Ok(StrategyDistance {
        value: 9.0 / (2.0 * n as f64) * sum,
        horizon,
        tail_bound: tail_bound(n, horizon),
    })
}

/// The full distance between two iteration points.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct DistanceValue {
    pub config_part: u32,
    pub strategy_part: f64,
    pub total: f64,
    pub horizon: usize,
    pub tail_bound: f64,
}

/// Distance between points, with the strategy part truncated at `horizon`.
pub fn point_distance(p: &SystemPoint, q: &SystemPoint, horizon: usize) -> Result<DistanceValue> {
    let config_part = config_distance(p.config, q.config)?;
    let ds = strategy_distance(&p.strategy, &q.strategy, p.config.n(), horizon)?;
    Ok(DistanceValue {
        config_part,
        strategy_part: ds.value,
        total: config_part as f64 + ds.value,
        horizon,
        tail_bound: ds.tail_bound,
    })
}

/// Largest Hamming distance the orbits of x and y reach within `horizon`
/// steps when both are driven by the same strategy. The start (step 0) is
/// excluded, so collapsing pairs report 0 even though they begin apart.
pub fn pair_separation(
    map: &BooleanMap,
    x: BoolConfig,
    y: BoolConfig,
    strategy: &Strategy,
    horizon: usize,
) -> Result<u32> {
    if horizon > strategy.len() {
        return Err(Error::StrategyTooShort {
            requested: horizon,
            available: strategy.len(),
        });
    }
    let xs = map.iterate(x, strategy, horizon)?;
    let ys = map.iterate(y, strategy, horizon)?;
    let mut best = 0;
    for (xt, yt) in xs.iter().zip(&ys) {
        best = best.max(config_distance(*xt, *yt)?);
    }
    Ok(best)
}

/// Smallest separation over `trials` random pairs of distinct configurations
/// driven by shared random strategies of length `horizon`. Returns None when
/// trials is 0. A value of 0 exhibits a pair whose orbits merge, ruling out
/// expansivity along the sampled strategies; positive values merely fail to
/// find such a pair.
pub fn expansivity_probe(
    map: &BooleanMap,
    trials: usize,
    horizon: usize,
    seed: u64,
) -> Result<Option<u32>> {
    if trials == 0 {
        return Ok(None);
    }
    check_horizon(horizon)?;
    let n = map.n();
    let size = map.config_count() as u32;
    if size < 2 {
        return Ok(None);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_sep = u32::MAX;
    for _ in 0..trials {
        let xv = rng.gen_range(0..size) as u16;
        let yv = loop {
            let y = rng.gen_range(0..size) as u16;
            if y != xv {
                break y;
            }
        };
        let strategy = random_strategy(&mut rng, n, horizon);
        let sep = pair_separation(
            map,
            BoolConfig::new(n, xv)?,
            BoolConfig::new(n, yv)?,
            &strategy,
            horizon,
        )?;
        min_sep = min_sep.min(sep);
    }
    Ok(Some(min_sep))
}

/// Like [`expansivity_probe`] but over every unordered pair of distinct
/// configurations, one random strategy per pair. Exhaustive in pairs, not in
/// strategies.
pub fn expansivity_probe_exhaustive(
    map: &BooleanMap,
    horizon: usize,
    seed: u64,
) -> Result<Option<u32>> {
    check_horizon(horizon)?;
    let n = map.n();
    let size = map.config_count() as u16;
    if size < 2 {
        return Ok(None);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_sep = u32::MAX;
    for xv in 0..size {
        for yv in xv + 1..size {
            let strategy = random_strategy(&mut rng, n, horizon);
            let sep = pair_separation(
                map,
                BoolConfig::new(n, xv)?,
                BoolConfig::new(n, yv)?,
                &strategy,
                horizon,
            )?;
            min_sep = min_sep.min(sep);
        }
    }
    Ok(Some(min_sep))
}

fn check_horizon(horizon: usize) -> Result<()> {
    if horizon == 0 {
        return Err(Error::InvalidParameter(
            "separation horizon must be at least 1".into(),
        ));
    }
    Ok(())
}

fn random_strategy(rng: &mut ChaCha8Rng, n: usize, len: usize) -> Strategy {
    let terms: Vec<u8> = (0..len).map(|_| rng.gen_range(1..=n as u8)).collect();
    Strategy::new(terms, n).unwrap()
}

/// A lower bound on the size of an epsilon-separated set of iteration
/// points, found greedily. `stages[i]` is the bound for horizon i+1; the
/// greedy set only grows as the horizon does, so the stages are
/// nondecreasing and `ln(stage)/horizon` lower-bounds the entropy rate.
#[derive(Clone, Debug, Serialize)]
pub struct SeparatedSetReport {
    pub t: usize,
    pub epsilon: f64,
    pub sample_size: usize,
    pub separated_count: usize,
    pub stages: Vec<usize>,
}

impl SeparatedSetReport {
    /// ln(separated count) / t, a lower bound on the topological entropy.
    pub fn entropy_rate(&self) -> f64 {
        (self.separated_count as f64).ln() / self.t as f64
    }
}

/// Greedy epsilon-separated subset of an explicit sample of points. Every
/// point must carry a strategy of at least `t` terms; the distance between
/// two points at horizon h is the maximum point distance along their first h
/// iterates.
pub fn separated_set_lower_bound(
    map: &BooleanMap,
    t: usize,
    epsilon: f64,
    points: &[SystemPoint],
) -> Result<SeparatedSetReport> {
    if t == 0 {
        return Err(Error::InvalidParameter(
            "separation horizon must be at least 1".into(),
        ));
    }
    if epsilon <= 0.0 || !epsilon.is_finite() {
        return Err(Error::InvalidParameter(
            "epsilon must be positive and finite".into(),
        ));
    }
    if points.is_empty() {
        return Err(Error::InvalidParameter("empty sample".into()));
    }
    // Orbit prefixes: orbits[p][i] is the i-th image of point p, 0 <= i < t.
    let mut orbits: Vec<Vec<SystemPoint>> = Vec::with_capacity(points.len());
    for p in points {
        if p.strategy.len() < t {
            return Err(Error::StrategyTooShort {
                requested: t,
                available: p.strategy.len(),
            });
        }
        let mut orbit = Vec::with_capacity(t);
        orbit.push(p.clone());
        for _ in 1..t {
            let next = map.system_step(orbit.last().unwrap())?;
            orbit.push(next);
        }
        orbits.push(orbit);
    }

    let pair_distance = |a: usize, b: usize, stage: usize| -> f64 {
        let mut best = 0.0f64;
        for (p, q) in orbits[a].iter().zip(&orbits[b]).take(stage) {
            let horizon = p.strategy.len().max(q.strategy.len());
            let d = point_distance(p, q, horizon).unwrap();
            best = best.max(d.total);
        }
        best
    };

    let mut chosen = vec![false; points.len()];
    let mut selected: Vec<usize> = Vec::new();
    let mut stages = Vec::with_capacity(t);
    // One pass per horizon: the pairwise distance only grows with the
    // stage, so earlier selections stay valid and the set only expands.
    for stage in 1..=t {
        for (idx, taken) in chosen.iter_mut().enumerate() {
            if *taken {
                continue;
            }
            if selected
                .iter()
                .all(|&j| pair_distance(idx, j, stage) >= epsilon)
            {
                *taken = true;
                selected.push(idx);
            }
        }
        stages.push(selected.len());
    }
    Ok(SeparatedSetReport {
        t,
        epsilon,
        sample_size: points.len(),
        separated_count: *stages.last().unwrap(),
        stages,
    })
}

/// [`separated_set_lower_bound`] over a seeded random sample: uniform
/// configurations paired with uniform strategies of length `t`.
pub fn separated_set_estimate(
    map: &BooleanMap,
    t: usize,
    epsilon: f64,
    sample_size: usize,
    seed: u64,
) -> Result<SeparatedSetReport> {
    if sample_size == 0 {
        return Err(Error::InvalidParameter("empty sample".into()));
    }
    if t == 0 {
        return Err(Error::InvalidParameter(
            "separation horizon must be at least 1".into(),
        ));
    }
    let n = map.n();
    let size = map.config_count() as u32;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<SystemPoint> = (0..sample_size)
        .map(|_| {
            let value = rng.gen_range(0..size) as u16;
            SystemPoint::new(
                random_strategy(&mut rng, n, t),
                BoolConfig::new(n, value).unwrap(),
            )
        })
        .collect();
    separated_set_lower_bound(map, t, epsilon, &points)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(s: &str) -> BoolConfig {
        BoolConfig::parse(s).unwrap()
    }

    fn strat(terms: &[u8], n: usize) -> Strategy {
        Strategy::new(terms.to_vec(), n).unwrap()
    }

    #[test]
    fn config_distance_examples() {
        assert_eq!(config_distance(cfg("0011"), cfg("1111")).unwrap(), 2);
        assert_eq!(config_distance(cfg("0101"), cfg("0101")).unwrap(), 0);
        assert_eq!(config_distance(cfg("0000"), cfg("1111")).unwrap(), 4);
        assert!(config_distance(cfg("000"), cfg("0000")).is_err());
    }

    #[test]
    fn strategy_distance_examples() {
        let d = strategy_distance(&strat(&[1], 4), &strat(&[2], 4), 4, 1).unwrap();
        assert!((d.value - 0.1125).abs() < 1e-12);
        assert!((d.tail_bound - 0.0375).abs() < 1e-12);

        let d = strategy_distance(&strat(&[1], 4), &strat(&[4], 4), 4, 1).unwrap();
        assert!((d.value - 0.3375).abs() < 1e-12);

        let d = strategy_distance(&strat(&[1, 2], 4), &strat(&[2, 1], 4), 4, 2).unwrap();
        assert!((d.value - 9.0 / 8.0 * 0.11).abs() < 1e-12);
        assert!((d.tail_bound - 0.00375).abs() < 1e-12);

        // Equal prefixes: a truncated value of zero, covered by the bound.
        let a = strat(&[1, 2, 3], 4);
        let b = strat(&[1, 2, 4], 4);
        let d2 = strategy_distance(&a, &b, 4, 2).unwrap();
        assert_eq!(d2.value, 0.0);
        let d3 = strategy_distance(&a, &b, 3, 4).unwrap();
        assert!(d3.value > 0.0 && d3.value <= d2.tail_bound);
    }

    #[test]
    fn strategy_part_stays_below_half() {
        // Worst case: maximal term gap at every position.
        for n in 2..=16 {
            let len = 30;
            let a = Strategy::new(vec![1u8; len], n).unwrap();
            let b = Strategy::new(vec![n as u8; len], n).unwrap();
            let d = strategy_distance(&a, &b, n, len).unwrap();
            let cap = (n as f64 - 1.0) / (2.0 * n as f64);
            assert!(d.value <= cap + 1e-12, "n={n}: {} > {cap}", d.value);
            assert!(d.value < 0.5);
        }
    }

    #[test]
    fn point_distance_splits_into_parts() {
        let p = SystemPoint::new(strat(&[1, 2], 4), cfg("0011"));
        let q = SystemPoint::new(strat(&[2, 2], 4), cfg("1111"));
        let d = point_distance(&p, &q, 2).unwrap();
        assert_eq!(d.config_part, 2);
        assert!((d.strategy_part - 0.1125).abs() < 1e-12);
        assert!((d.total - 2.1125).abs() < 1e-12);
        // The integer part recovers the Hamming distance exactly.
        assert_eq!(d.total.floor() as u32, d.config_part);
    }

    #[test]
    fn metric_axioms_on_seeded_triples() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..1000 {
            let n = rng.gen_range(2..=8usize);
            let len = rng.gen_range(1..=6usize);
            let horizon = len;
            let mut point = || {
                let value = rng.gen_range(0..1u32 << n) as u16;
                let terms: Vec<u8> = (0..len).map(|_| rng.gen_range(1..=n as u8)).collect();
                SystemPoint::new(
                    Strategy::new(terms, n).unwrap(),
                    BoolConfig::new(n, value).unwrap(),
                )
            };
            let (p, q, r) = (point(), point(), point());
            let dpq = point_distance(&p, &q, horizon).unwrap();
            let dqp = point_distance(&q, &p, horizon).unwrap();
            let dpr = point_distance(&p, &r, horizon).unwrap();
            let dqr = point_distance(&q, &r, horizon).unwrap();
            let dpp = point_distance(&p, &p, horizon).unwrap();

            assert_eq!(dpp.total, 0.0);
            assert!(dpq.total >= 0.0);
            assert_eq!(dpq.total, dqp.total);
            assert!(dpr.total <= dpq.total + dqr.total + 1e-12);
            if dpq.total == 0.0 {
                assert_eq!(p.config, q.config);
                assert_eq!(p.strategy.terms()[..horizon], q.strategy.terms()[..horizon]);
            }
            assert_eq!(dpq.total.floor() as u32, dpq.config_part);
            assert!(dpq.strategy_part < 0.5);
        }
    }

    #[test]
    fn pair_separation_examples() {
        let f0 = BooleanMap::builtin("f0(4)").unwrap();
        let s = strat(&[1, 2, 3, 4], 4);
        // Negation preserves Hamming distance at every step.
        let sep = pair_separation(&f0, cfg("0000"), cfg("0001"), &s, 4).unwrap();
        assert_eq!(sep, 1);

        // Both orbits fall into the same fixed configuration: separation 0
        // despite distinct starts.
        let f = BooleanMap::builtin("example_f").unwrap();
        let s = strat(&[1, 1, 1, 1], 4);
        let sep = pair_separation(&f, cfg("0100"), cfg("1100"), &s, 4).unwrap();
        assert_eq!(sep, 0);

        assert!(pair_separation(&f0, cfg("0000"), cfg("0001"), &strat(&[1], 4), 2).is_err());
    }

    #[test]
    fn expansivity_probe_examples() {
        let f0 = BooleanMap::builtin("f0(4)").unwrap();
        let sep = expansivity_probe(&f0, 200, 4, 1).unwrap().unwrap();
        assert!(sep >= 1);
        assert_eq!(expansivity_probe(&f0, 0, 4, 1).unwrap(), None);
        assert!(expansivity_probe(&f0, 10, 0, 1).is_err());

        let exhaustive = expansivity_probe_exhaustive(&f0, 4, 1).unwrap().unwrap();
        assert!(exhaustive >= 1);

        // Merging orbits exist for the non-chaotic example.
        let f = BooleanMap::builtin("example_f").unwrap();
        let sep = expansivity_probe_exhaustive(&f, 6, 3).unwrap().unwrap();
        assert_eq!(sep, 0);
    }

    #[test]
    fn probe_is_deterministic() {
        let g = BooleanMap::builtin("example_g").unwrap();
        let a = expansivity_probe(&g, 100, 5, 7).unwrap();
        let b = expansivity_probe(&g, 100, 5, 7).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn separated_set_all_configs_at_horizon_one() {
        let g = BooleanMap::builtin("example_g").unwrap();
        let s = strat(&[1], 4);
        let points: Vec<SystemPoint> = (0..16u16)
            .map(|v| SystemPoint::new(s.clone(), BoolConfig::new(4, v).unwrap()))
            .collect();
        // With one shared strategy, distinct configurations are at least
        // Hamming distance 1 apart, so epsilon = 0.5 keeps all 16.
        let report = separated_set_lower_bound(&g, 1, 0.5, &points).unwrap();
        assert_eq!(report.separated_count, 16);

        // Epsilon above the metric's diameter keeps exactly one point.
        let report = separated_set_lower_bound(&g, 1, 5.0, &points).unwrap();
        assert_eq!(report.separated_count, 1);
    }

    #[test]
    fn separated_set_stages_are_monotone() {
        let g = BooleanMap::builtin("example_g").unwrap();
        let report = separated_set_estimate(&g, 6, 1.0, 150, 11).unwrap();
        assert_eq!(report.stages.len(), 6);
        for w in report.stages.windows(2) {
            assert!(w[0] <= w[1]);
        }
        assert_eq!(report.separated_count, *report.stages.last().unwrap());
        assert!(report.separated_count >= 1);
        assert!(report.entropy_rate() >= 0.0);

        let again = separated_set_estimate(&g, 6, 1.0, 150, 11).unwrap();
        assert_eq!(report.stages, again.stages);
    }

    #[test]
    fn separated_set_rejects_bad_input() {
        let g = BooleanMap::builtin("example_g").unwrap();
        assert!(separated_set_estimate(&g, 0, 1.0, 10, 1).is_err());
        assert!(separated_set_estimate(&g, 2, 0.0, 10, 1).is_err());
        assert!(separated_set_estimate(&g, 2, 1.0, 0, 1).is_err());
        let short = vec![SystemPoint::new(strat(&[1], 4), cfg("0000"))];
        assert!(separated_set_lower_bound(&g, 2, 1.0, &short).is_err());
    }
}
