//! The full measurement matrix: maps x schemes x widths x budgets.
//!
//! Each cell trains `repetitions` fresh networks on freshly split data and
//! reports mean and standard deviation of the test success rates, one row
//! per output column plus a joint-configuration row. Every random choice is
//! derived from the master seed by hashing the cell coordinates, so a rerun
//! of the same config file reproduces every byte of the outputs.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::codec::{enumerate_dataset, gray_decode, unscale_value, Dataset, Scheme};
use crate::dynamics::BooleanMap;
use crate::error::{Error, Result};
use crate::graph::{certify_chaos, ChaosCertificate};
use crate::mlp::MlpDims;
use crate::train::{
    batch_for_indices, clamp_natural, config_output_indices, evaluate_success, lbfgs_train,
    output_kinds, EpochRecord, OutputKind, SavedModel, SuccessReport, TrainConfig, TrainedModel,
};

/// A 64-bit seed derived by hashing the master seed with a role path, e.g.
/// ["example_g", "2", "25", "500", "3", "split"]. Unrelated roles get
/// statistically unrelated seeds.
pub fn derive_seed(master: u64, parts: &[&str]) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(master.to_le_bytes());
    for part in parts {
        hasher.update([0u8]);
        hasher.update(part.as_bytes());
    }
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().unwrap())
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    /// Builtin names or map file paths.
    pub maps: Vec<String>,
    pub n: usize,
    pub k: usize,
    pub schemes: Vec<Scheme>,
    pub hidden: Vec<usize>,
    pub epochs: Vec<usize>,
    pub repetitions: usize,
    pub master_seed: u64,
    pub out_dir: PathBuf,
    /// Also write expected-vs-predicted series for the first repetition of
    /// each cell.
    pub series: bool,
}

impl ExperimentConfig {
    /// Parses the key = value format; `#` starts a comment. Required keys:
    /// maps, n, k, schemes, hidden, epochs. Optional: reps (10), seed (1),
    /// out_dir (experiment_out), series (false).
    pub fn parse_text(text: &str) -> Result<Self> {
        let mut values: BTreeMap<String, String> = BTreeMap::new();
        for (idx, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::InvalidExperimentConfig(format!("line {}: expected key = value", idx + 1))
            })?;
            if values
                .insert(key.trim().to_string(), value.trim().to_string())
                .is_some()
            {
                return Err(Error::InvalidExperimentConfig(format!(
                    "duplicate key `{}`",
                    key.trim()
                )));
            }
        }
        let known = [
            "maps", "n", "k", "schemes", "hidden", "epochs", "reps", "seed", "out_dir", "series",
        ];
        for key in values.keys() {
            if !known.contains(&key.as_str()) {
                return Err(Error::InvalidExperimentConfig(format!(
                    "unknown key `{key}`"
                )));
            }
        }
        let required = |key: &str| -> Result<&String> {
            values
                .get(key)
                .ok_or_else(|| Error::InvalidExperimentConfig(format!("missing key `{key}`")))
        };
        let parse_list = |raw: &str| -> Vec<String> {
            raw.split(',')
                .map(|s| s.trim().to_string())
                .filter(|s| !s.is_empty())
                .collect()
        };
        let parse_usize = |key: &str, raw: &str| -> Result<usize> {
            raw.parse().map_err(|_| {
                Error::InvalidExperimentConfig(format!("key `{key}`: bad number `{raw}`"))
            })
        };

        let maps = parse_list(required("maps")?);
        if maps.is_empty() {
            return Err(Error::InvalidExperimentConfig("no maps given".into()));
        }
        let n = parse_usize("n", required("n")?)?;
        let k = parse_usize("k", required("k")?)?;
        let schemes = parse_list(required("schemes")?)
            .iter()
            .map(|s| Scheme::parse(s))
            .collect::<Result<Vec<_>>>()?;
        let hidden = parse_list(required("hidden")?)
            .iter()
            .map(|s| parse_usize("hidden", s))
            .collect::<Result<Vec<_>>>()?;
        let epochs = parse_list(required("epochs")?)
            .iter()
            .map(|s| parse_usize("epochs", s))
            .collect::<Result<Vec<_>>>()?;
        if schemes.is_empty() || hidden.is_empty() || epochs.is_empty() {
            return Err(Error::InvalidExperimentConfig(
                "schemes, hidden and epochs must be nonempty".into(),
            ));
        }
        let repetitions = match values.get("reps") {
            Some(raw) => parse_usize("reps", raw)?,
            None => 10,
        };
        if repetitions == 0 {
            return Err(Error::InvalidExperimentConfig(
                "reps must be positive".into(),
            ));
        }
        let master_seed = match values.get("seed") {
            Some(raw) => raw.parse().map_err(|_| {
                Error::InvalidExperimentConfig(format!("key `seed`: bad number `{raw}`"))
            })?,
            None => 1,
        };
        let out_dir = PathBuf::from(
            values
                .get("out_dir")
                .cloned()
                .unwrap_or_else(|| "experiment_out".to_string()),
        );
        let series = match values.get("series").map(String::as_str) {
            None | Some("false") => false,
            Some("true") => true,
            Some(other) => {
                return Err(Error::InvalidExperimentConfig(format!(
                    "key `series`: expected true or false, got `{other}`"
                )))
            }
        };
        Ok(Self {
            maps,
            n,
            k,
            schemes,
            hidden,
            epochs,
            repetitions,
            master_seed,
            out_dir,
            series,
        })
    }

    pub fn parse_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse_text(&std::fs::read_to_string(path)?)
    }
}

/// Everything produced by one repetition of one cell.
#[derive(Clone, Debug)]
pub struct RepetitionOutcome {
    /// One model for joint schemes, one per output column for the split
    /// scheme.
    pub models: Vec<SavedModel>,
    pub histories: Vec<Vec<EpochRecord>>,
    pub report: SuccessReport,
    pub test_indices: Vec<usize>,
}

/// Splits the dataset, trains the networks of one repetition and evaluates
/// them on the held-out test part.
pub fn run_repetition(
    dataset: &Dataset,
    hidden: usize,
    epochs: usize,
    split_seed: u64,
    init_seeds: &[u64],
) -> Result<RepetitionOutcome> {
    let split = dataset.split(split_seed)?;
    let train = batch_for_indices(dataset, &split.train);
    let val = batch_for_indices(dataset, &split.validation);
    let test = batch_for_indices(dataset, &split.test);
    let kinds = output_kinds(dataset.scheme, dataset.n, &dataset.output_ranges);
    let config_cols = config_output_indices(dataset.scheme, dataset.n);
    let p = dataset.scheme.input_width(dataset.n);
    let q = dataset.scheme.output_width(dataset.n);

    let expected_models = if dataset.scheme == Scheme::TwoSplit {
        q
    } else {
        1
    };
    if init_seeds.len() != expected_models {
        return Err(Error::InvalidParameter(format!(
            "{} init seeds for {expected_models} networks",
            init_seeds.len()
        )));
    }

    let mut models = Vec::new();
    let mut histories = Vec::new();
    let report;
    match dataset.scheme {
        Scheme::One | Scheme::Two => {
            let dims = MlpDims::new(p, hidden, q)?;
            let cfg = TrainConfig::new(hidden, epochs, init_seeds[0])?;
            let trained = lbfgs_train(
                dims,
                &train.inputs,
                &train.targets,
                &val.inputs,
                &val.targets,
                &cfg,
            )?;
            check_finite(&trained)?;
            report = evaluate_success(
                &trained.model,
                &test.inputs,
                &test.raw_targets,
                &dataset.output_ranges,
                &kinds,
                &config_cols,
            )?;
            histories.push(trained.history);
            models.push(SavedModel {
                model: trained.model,
                scheme: dataset.scheme,
                n: dataset.n,
                k: dataset.k,
                output_index: None,
                input_ranges: dataset.input_ranges.clone(),
                output_ranges: dataset.output_ranges.clone(),
                seed: init_seeds[0],
            });
        }
        Scheme::TwoSplit => {
            // One network per target column, sharing the split.
            let mut per_output = Vec::with_capacity(q);
            for c in 0..q {
                let dims = MlpDims::new(p, hidden, 1)?;
                let cfg = TrainConfig::new(hidden, epochs, init_seeds[c])?;
                let pick = |rows: &[Vec<f64>]| -> Vec<Vec<f64>> {
                    rows.iter().map(|r| vec![r[c]]).collect()
                };
                let trained = lbfgs_train(
                    dims,
                    &train.inputs,
                    &pick(&train.targets),
                    &val.inputs,
                    &pick(&val.targets),
                    &cfg,
                )?;
                check_finite(&trained)?;
                let col_targets: Vec<Vec<u64>> =
                    test.raw_targets.iter().map(|r| vec![r[c]]).collect();
                let col_report = evaluate_success(
                    &trained.model,
                    &test.inputs,
                    &col_targets,
                    &dataset.output_ranges[c..=c],
                    &kinds[c..=c],
                    &[0],
                )?;
                per_output.push(col_report.per_output[0]);
                histories.push(trained.history);
                models.push(SavedModel {
                    model: trained.model,
                    scheme: dataset.scheme,
                    n: dataset.n,
                    k: dataset.k,
                    output_index: Some(c),
                    input_ranges: dataset.input_ranges.clone(),
                    output_ranges: vec![dataset.output_ranges[c]],
                    seed: init_seeds[c],
                });
            }
            // The configuration lives in column 0 alone under this scheme.
            report = SuccessReport {
                joint_config: per_output[config_cols[0]],
                per_output,
                sample_count: split.test.len(),
            };
        }
    }
    Ok(RepetitionOutcome {
        models,
        histories,
        report,
        test_indices: split.test,
    })
}

fn check_finite(trained: &TrainedModel) -> Result<()> {
    if trained.model.params().iter().any(|p| !p.is_finite()) {
        return Err(Error::InvalidParameter(
            "training diverged to non-finite parameters".into(),
        ));
    }
    Ok(())
}

/// One aggregated line of the results table.
#[derive(Clone, Debug, PartialEq)]
pub struct ResultRow {
    pub map: String,
    pub chaotic: bool,
    pub scheme: Scheme,
    pub hidden: usize,
    pub epochs: usize,
    /// "config" for the joint-configuration rate, otherwise "out_<i>".
    pub output: String,
    pub mean_success: f64,
    pub std_dev: f64,
    pub repetitions: usize,
}

fn mean_and_std(values: &[f64]) -> (f64, f64) {
    let count = values.len() as f64;
    let mean = values.iter().sum::<f64>() / count;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / count;
    (mean, var.sqrt())
}

/// Runs the whole matrix and writes results.csv, certificates.json and any
/// requested series files under the output directory.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    std::fs::create_dir_all(&cfg.out_dir)?;
    let mut maps = Vec::new();
    let mut certificates: BTreeMap<String, ChaosCertificate> = BTreeMap::new();
    for spec in &cfg.maps {
        let map = BooleanMap::resolve(spec)?;
        if map.n() != cfg.n {
            return Err(Error::InvalidExperimentConfig(format!(
                "map `{spec}` has {} components, config says {}",
                map.n(),
                cfg.n
            )));
        }
        let cert = certify_chaos(&map);
        certificates.insert(spec.clone(), cert);
        maps.push((spec.clone(), map));
    }
    std::fs::write(
        cfg.out_dir.join("certificates.json"),
        serde_json::to_string_pretty(&certificates).map_err(std::io::Error::other)? + "\n",
    )?;

    struct Job {
        map: String,
        scheme: Scheme,
        hidden: usize,
        epochs: usize,
        rep: usize,
        dataset_id: usize,
        split_seed: u64,
        init_seeds: Vec<u64>,
    }

    // Datasets are shared across cells of the same map and scheme.
    let mut datasets: Vec<Dataset> = Vec::new();
    let mut jobs: Vec<Job> = Vec::new();
    for (name, map) in &maps {
        for &scheme in &cfg.schemes {
            let dataset_id = datasets.len();
            datasets.push(enumerate_dataset(map, cfg.k, scheme)?);
            let q = scheme.output_width(cfg.n);
            let nets = if scheme == Scheme::TwoSplit { q } else { 1 };
            for &hidden in &cfg.hidden {
                for &epochs in &cfg.epochs {
                    for rep in 0..cfg.repetitions {
                        let coords = [
                            name.as_str(),
                            &scheme.to_string(),
                            &hidden.to_string(),
                            &epochs.to_string(),
                            &rep.to_string(),
                        ];
                        let path = |role: String| -> u64 {
                            let mut parts: Vec<&str> = coords.to_vec();
                            parts.push(&role);
                            derive_seed(cfg.master_seed, &parts)
                        };
                        jobs.push(Job {
                            map: name.clone(),
                            scheme,
                            hidden,
                            epochs,
                            rep,
                            dataset_id,
                            split_seed: path("split".to_string()),
                            init_seeds: (0..nets).map(|c| path(format!("init:{c}"))).collect(),
                        });
                    }
                }
            }
        }
    }

    // Repetitions are independent; run them in parallel and reassemble in
    // job order so the output does not depend on scheduling.
    let outcomes: Vec<Result<RepetitionOutcome>> = jobs
        .par_iter()
        .map(|job| {
            run_repetition(
                &datasets[job.dataset_id],
                job.hidden,
                job.epochs,
                job.split_seed,
                &job.init_seeds,
            )
        })
        .collect();

    // Group by cell, in job order.
    let mut rows = Vec::new();
    let mut idx = 0;
    while idx < jobs.len() {
        let cell_key = |j: &Job| (j.map.clone(), j.scheme, j.hidden, j.epochs);
        let key = cell_key(&jobs[idx]);
        let mut cell_reports: Vec<&SuccessReport> = Vec::new();
        let mut failed = 0usize;
        let mut first_outcome: Option<&RepetitionOutcome> = None;
        while idx < jobs.len() && cell_key(&jobs[idx]) == key {
            match &outcomes[idx] {
                Ok(outcome) => {
                    cell_reports.push(&outcome.report);
                    if first_outcome.is_none() {
                        first_outcome = Some(outcome);
                    }
                }
                Err(e) => {
                    failed += 1;
                    eprintln!(
                        "warning: {} scheme {} hidden {} epochs {} rep {}: {e}",
                        jobs[idx].map,
                        jobs[idx].scheme,
                        jobs[idx].hidden,
                        jobs[idx].epochs,
                        jobs[idx].rep
                    );
                }
            }
            idx += 1;
        }
        let (map, scheme, hidden, epochs) = key;
        if cell_reports.is_empty() {
            return Err(Error::InvalidParameter(format!(
                "every repetition of {map} scheme {scheme} hidden {hidden} epochs {epochs} failed"
            )));
        }
        if failed > 0 {
            eprintln!(
                "warning: {map} scheme {scheme} hidden {hidden} epochs {epochs}: {failed} repetition(s) excluded"
            );
        }
        let chaotic = certificates[&map].chaotic;
        let reps = cell_reports.len();
        let q = cell_reports[0].per_output.len();
        let joint: Vec<f64> = cell_reports.iter().map(|r| r.joint_config).collect();
        let (mean, std) = mean_and_std(&joint);
        rows.push(ResultRow {
            map: map.clone(),
            chaotic,
            scheme,
            hidden,
            epochs,
            output: "config".to_string(),
            mean_success: mean,
            std_dev: std,
            repetitions: reps,
        });
        for c in 0..q {
            let rates: Vec<f64> = cell_reports.iter().map(|r| r.per_output[c]).collect();
            let (mean, std) = mean_and_std(&rates);
            rows.push(ResultRow {
                map: map.clone(),
                chaotic,
                scheme,
                hidden,
                epochs,
                output: format!("out_{}", c + 1),
                mean_success: mean,
                std_dev: std,
                repetitions: reps,
            });
        }
        if cfg.series {
            let outcome = first_outcome.unwrap();
            let dataset = jobs[..idx]
                .iter()
                .rev()
                .find(|j| cell_key(j) == (map.clone(), scheme, hidden, epochs))
                .map(|j| &datasets[j.dataset_id])
                .unwrap();
            let stem = format!(
                "series_{}_s{}_h{}_e{}",
                map.replace(['/', '\\'], "_"),
                scheme,
                hidden,
                epochs
            );
            let series = prediction_series(dataset, &outcome.test_indices, &outcome.models)?;
            write_series_csv(&series, cfg.out_dir.join(format!("{stem}.csv")))?;
            write_series_svg(&series, cfg.out_dir.join(format!("{stem}.svg")))?;
        }
    }

    write_results_csv(&rows, cfg.out_dir.join("results.csv"))?;
    Ok(rows)
}

pub fn write_results_csv(rows: &[ResultRow], path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "map",
        "chaotic",
        "scheme",
        "hidden",
        "epochs",
        "output",
        "mean_success",
        "std_dev",
        "repetitions",
    ])?;
    for r in rows {
        w.write_record([
            r.map.clone(),
            r.chaotic.to_string(),
            r.scheme.to_string(),
            r.hidden.to_string(),
            r.epochs.to_string(),
            r.output.clone(),
            format!("{:?}", r.mean_success),
            format!("{:?}", r.std_dev),
            r.repetitions.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Expected and predicted configuration values over the test samples, in
/// test order.
pub fn prediction_series(
    dataset: &Dataset,
    test_indices: &[usize],
    models: &[SavedModel],
) -> Result<Vec<(usize, u64, u64)>> {
    let model = models
        .iter()
        .find(|m| matches!(m.output_index, None | Some(0)))
        .ok_or_else(|| Error::UnsuitableOracle("no configuration model".into()))?;
    let n = dataset.n;
    let kinds = output_kinds(dataset.scheme, n, &dataset.output_ranges);
    let mut series = Vec::with_capacity(test_indices.len());
    for (pos, &i) in test_indices.iter().enumerate() {
        let sample = &dataset.samples[i];
        let outputs: Vec<f64> = model
            .model
            .forward(&model.scale_inputs(&sample.inputs))?
            .iter()
            .zip(&model.output_ranges)
            .map(|(&y, &range)| unscale_value(y, range))
            .collect();
        let (expected, predicted) = match dataset.scheme {
            Scheme::One => {
                let mut expected = 0u64;
                let mut predicted = 0u64;
                for (&bit, &y) in sample.outputs.iter().zip(&outputs).take(n) {
                    expected = expected << 1 | bit;
                    predicted = predicted << 1 | (y >= 0.5) as u64;
                }
                (expected, predicted)
            }
            Scheme::Two | Scheme::TwoSplit => {
                let (min, max) = match kinds[0] {
                    OutputKind::Natural { min, max } => (min, max),
                    OutputKind::Bit => unreachable!("config column is a code here"),
                };
                let gray = clamp_natural(outputs[0], min, max.min((1 << n) - 1));
                (gray_decode(sample.outputs[0], n)?, gray_decode(gray, n)?)
            }
        };
        series.push((pos, expected, predicted));
    }
    Ok(series)
}

pub fn write_series_csv(series: &[(usize, u64, u64)], path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["index", "expected", "predicted"])?;
    for (i, e, p) in series {
        w.write_record([i.to_string(), e.to_string(), p.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// A small self-contained scatter of expected (line) vs predicted (dots).
pub fn write_series_svg(series: &[(usize, u64, u64)], path: impl AsRef<Path>) -> Result<()> {
    let width = 900.0;
    let height = 300.0;
    let margin = 30.0;
    let max_x = series.iter().map(|s| s.0).max().unwrap_or(1).max(1) as f64;
    let max_y = series
        .iter()
        .map(|s| s.1.max(s.2))
        .max()
        .unwrap_or(1)
        .max(1) as f64;
    let sx = |i: usize| margin + (width - 2.0 * margin) * i as f64 / max_x;
    let sy = |v: u64| height - margin - (height - 2.0 * margin) * v as f64 / max_y;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" viewBox=\"0 0 {width} {height}\">"
    );
    let _ = writeln!(
        svg,
        "<rect width=\"{width}\" height=\"{height}\" fill=\"white\" stroke=\"none\"/>"
    );
    let mut line = String::new();
    for (i, e, _) in series {
        let _ = write!(line, "{:.2},{:.2} ", sx(*i), sy(*e));
    }
    let _ = writeln!(
        svg,
        "<polyline points=\"{}\" fill=\"none\" stroke=\"#3366cc\" stroke-width=\"1\"/>",
        line.trim_end()
    );
    for (i, _, p) in series {
        let _ = writeln!(
            svg,
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"1.5\" fill=\"#dd6611\"/>",
            sx(*i),
            sy(*p)
        );
    }
    let _ = writeln!(svg, "</svg>");
    std::fs::write(path, svg)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_derivation_separates_roles() {
        let a = derive_seed(1, &["example_g", "2", "25", "500", "0", "split"]);
        let b = derive_seed(1, &["example_g", "2", "25", "500", "0", "init:0"]);
        let c = derive_seed(2, &["example_g", "2", "25", "500", "0", "split"]);
        let again = derive_seed(1, &["example_g", "2", "25", "500", "0", "split"]);
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert_eq!(a, again);
        // Concatenation cannot collide across the separator.
        assert_ne!(derive_seed(1, &["ab", "c"]), derive_seed(1, &["a", "bc"]));
    }

    #[test]
    fn config_parsing() {
        let cfg = ExperimentConfig::parse_text(
            "# comment\nmaps = example_f, example_g\nn = 4\nk = 3\nschemes = 1, 2\nhidden = 25\nepochs = 500\n",
        )
        .unwrap();
        assert_eq!(cfg.maps, vec!["example_f", "example_g"]);
        assert_eq!(cfg.schemes, vec![Scheme::One, Scheme::Two]);
        assert_eq!(cfg.repetitions, 10);
        assert_eq!(cfg.master_seed, 1);
        assert!(!cfg.series);
        assert_eq!(cfg.out_dir, PathBuf::from("experiment_out"));

        let cfg = ExperimentConfig::parse_text(
            "maps=example_g\nn=4\nk=3\nschemes=2-split\nhidden=40\nepochs=5000\nreps=3\nseed=9\nout_dir=x\nseries=true\n",
        )
        .unwrap();
        assert_eq!(cfg.schemes, vec![Scheme::TwoSplit]);
        assert_eq!(cfg.repetitions, 3);
        assert!(cfg.series);

        for bad in [
            "n = 4",
            "maps=example_g\nn=4\nk=3\nschemes=7\nhidden=5\nepochs=5",
            "maps=example_g\nn=4\nk=3\nschemes=2\nhidden=5\nepochs=5\nbogus=1",
            "maps=example_g\nn=4\nk=3\nschemes=2\nhidden=5\nepochs=5\nseries=maybe",
            "not a config",
        ] {
            assert!(ExperimentConfig::parse_text(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn mean_and_std_are_population_statistics() {
        let (mean, std) = mean_and_std(&[2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0]);
        assert!((mean - 5.0).abs() < 1e-12);
        assert!((std - 2.0).abs() < 1e-12);
        let (mean, std) = mean_and_std(&[0.25]);
        assert_eq!(mean, 0.25);
        assert_eq!(std, 0.0);
    }
}
