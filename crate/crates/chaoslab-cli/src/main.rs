//! Command-line front end: certify maps, build datasets, steer orbits,
//! probe the dynamics, train perceptrons and run whole experiment matrices.

use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use chaoslab::codec::{enumerate_dataset, Dataset, Scheme};
use chaoslab::dynamics::{BoolConfig, BooleanMap};
use chaoslab::experiment::{
    derive_seed, prediction_series, run_experiment, run_repetition, write_series_csv,
    write_series_svg, ExperimentConfig, RepetitionOutcome,
};
use chaoslab::graph::{certify_chaos, mixing_probe, ChaosEvidence, IterationGraph};
use chaoslab::metric::{expansivity_probe, expansivity_probe_exhaustive, separated_set_estimate};
use chaoslab::train::write_history_csv;

#[derive(Parser)]
#[command(
    name = "chaoslab",
    version,
    about = "Chaotic Boolean iterations: certify, encode, train, measure"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Shared way of naming a map: a builtin like `f0(4)`, `f1(3)`, `example_f`,
/// `example_g`, or a path to a two-line map file.
#[derive(Args)]
struct MapArg {
    /// Builtin name or map file path
    #[arg(long)]
    map: String,
}

impl MapArg {
    fn resolve(&self) -> anyhow::Result<BooleanMap> {
        BooleanMap::resolve(&self.map).with_context(|| format!("loading map `{}`", self.map))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Decide whether the asynchronous iterations of a map are chaotic
    Certify {
        #[command(flatten)]
        map: MapArg,
        /// Print the full certificate as JSON instead of a summary
        #[arg(long)]
        json: bool,
    },
    /// Enumerate every input/output pair of a map and write them as CSV
    Dataset {
        #[command(flatten)]
        map: MapArg,
        /// Component count; must match the map (defaults to the map's own)
        #[arg(long)]
        n: Option<usize>,
        /// Longest strategy length
        #[arg(long, default_value_t = 3)]
        k: usize,
        /// Coding scheme: 1, 2 or 2-split
        #[arg(long, default_value = "2")]
        scheme: String,
        /// Output CSV path
        #[arg(long)]
        out: PathBuf,
    },
    /// Shortest update sequence steering one configuration onto another
    Steer {
        #[command(flatten)]
        map: MapArg,
        /// Start configuration, e.g. 0011
        #[arg(long)]
        from: String,
        /// Goal configuration, e.g. 1110
        #[arg(long)]
        to: String,
    },
    /// Finite-scale probes of the dynamics
    #[command(subcommand)]
    Probe(Probe),
    /// Train perceptrons on a dataset CSV and report success rates
    Train {
        /// Dataset CSV produced by `chaoslab dataset`
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, default_value_t = 25)]
        hidden: usize,
        #[arg(long, default_value_t = 500)]
        epochs: usize,
        /// Independent trainings with fresh splits and initializations
        #[arg(long, default_value_t = 10)]
        reps: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Train one single-output network per column (scheme 2 data only)
        #[arg(long)]
        split_outputs: bool,
        /// Directory for trained models and per-epoch history CSVs
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Also write expected-vs-predicted series of the first repetition
        /// (needs --out-dir)
        #[arg(long)]
        series: bool,
    },
    /// Run a whole measurement matrix from a key=value config file
    Experiment {
        /// Config file; keys: maps, n, k, schemes, hidden, epochs,
        /// reps, seed, out_dir, series
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Subcommand)]
enum Probe {
    /// Growth of a greedy epsilon-separated set of orbits, t = 1..=horizon
    Separated {
        #[command(flatten)]
        map: MapArg,
        /// Largest number of iterates to separate over
        #[arg(long, default_value_t = 6)]
        horizon: usize,
        /// Separation threshold in metric units
        #[arg(long, default_value_t = 1.0)]
        epsilon: f64,
        /// Sampled (configuration, strategy) points per stage
        #[arg(long, default_value_t = 256)]
        sample: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Smallest orbit separation over pairs of distinct configurations
    Expansivity {
        #[command(flatten)]
        map: MapArg,
        /// Random pairs to try (ignored with --exhaustive)
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        /// Iterates to follow per pair
        #[arg(long, default_value_t = 6)]
        horizon: usize,
        /// Try every unordered pair of configurations once
        #[arg(long)]
        exhaustive: bool,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Which walk lengths connect two configurations in the iteration graph
    Mixing {
        #[command(flatten)]
        map: MapArg,
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
        #[arg(long, default_value_t = 10)]
        max_len: usize,
    },
}

fn main() -> anyhow::Result<()> {
    // Die quietly when stdout closes early (`chaoslab certify | head`)
    // instead of panicking on the broken pipe.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    match Cli::parse().command {
        Command::Certify { map, json } => certify(&map, json),
        Command::Dataset {
            map,
            n,
            k,
            scheme,
            out,
        } => dataset(&map, n, k, &scheme, &out),
        Command::Steer { map, from, to } => steer(&map, &from, &to),
        Command::Probe(probe) => run_probe(probe),
        Command::Train {
            dataset,
            hidden,
            epochs,
            reps,
            seed,
            split_outputs,
            out_dir,
            series,
        } => train(
            &dataset,
            hidden,
            epochs,
            reps,
            seed,
            split_outputs,
            out_dir.as_deref(),
            series,
        ),
        Command::Experiment { config } => experiment(&config),
    }
}

fn certify(map: &MapArg, json: bool) -> anyhow::Result<()> {
    let map = map.resolve()?;
    let cert = certify_chaos(&map);
    if json {
        println!("{}", serde_json::to_string_pretty(&cert)?);
        return Ok(());
    }
    println!("components: {}", cert.n);
    println!("chaotic: {}", cert.chaotic);
    println!("strongly connected components: {}", cert.scc_count);
    match &cert.evidence {
        ChaosEvidence::StronglyConnected => {
            println!("evidence: every configuration reaches every other");
        }
        ChaosEvidence::NotStronglyConnected {
            witness_from,
            witness_to,
            component_sizes,
        } => {
            println!("evidence: no path from {witness_from} to {witness_to}");
            println!("component sizes: {component_sizes:?}");
        }
    }
    if cert.fixed_points.is_empty() {
        println!("fixed points: none");
    } else {
        println!("fixed points: {}", cert.fixed_points.join(" "));
    }
    Ok(())
}

fn parse_scheme(text: &str) -> anyhow::Result<Scheme> {
    Scheme::parse(text).map_err(|e| anyhow::anyhow!("{e} (expected 1, 2 or 2-split)"))
}

fn dataset(
    map: &MapArg,
    n: Option<usize>,
    k: usize,
    scheme: &str,
    out: &std::path::Path,
) -> anyhow::Result<()> {
    let map = map.resolve()?;
    if let Some(n) = n {
        if n != map.n() {
            bail!("--n {n} does not match the map's {} components", map.n());
        }
    }
    let scheme = parse_scheme(scheme)?;
    let ds = enumerate_dataset(&map, k, scheme)?;
    ds.write_csv(out)?;
    println!(
        "wrote {} samples ({} inputs, {} outputs) to {}",
        ds.samples.len(),
        scheme.input_width(ds.n),
        scheme.output_width(ds.n),
        out.display()
    );
    Ok(())
}

fn steer(map: &MapArg, from: &str, to: &str) -> anyhow::Result<()> {
    let map = map.resolve()?;
    let x = BoolConfig::parse(from)?;
    let y = BoolConfig::parse(to)?;
    let graph = IterationGraph::build(&map);
    match graph.steer(x, y)? {
        None => println!("unreachable: no update sequence leads from {from} to {to}"),
        Some(s) if s.is_empty() => println!("already there: {from} = {to}"),
        Some(s) => println!("update components: {s} ({} steps)", s.len()),
    }
    Ok(())
}

fn run_probe(probe: Probe) -> anyhow::Result<()> {
    match probe {
        Probe::Separated {
            map,
            horizon,
            epsilon,
            sample,
            seed,
        } => {
            let map = map.resolve()?;
            let report = separated_set_estimate(&map, horizon, epsilon, sample, seed)?;
            println!("t,epsilon,sample,separated,entropy_rate");
            for (i, &count) in report.stages.iter().enumerate() {
                let t = i + 1;
                let rate = (count as f64).ln() / t as f64;
                println!("{t},{epsilon},{sample},{count},{rate:.6}");
            }
        }
        Probe::Expansivity {
            map,
            trials,
            horizon,
            exhaustive,
            seed,
        } => {
            let map = map.resolve()?;
            let separation = if exhaustive {
                expansivity_probe_exhaustive(&map, horizon, seed)?
            } else {
                expansivity_probe(&map, trials, horizon, seed)?
            };
            match separation {
                None => println!("nothing probed (no pairs available)"),
                Some(0) => println!(
                    "minimum separation 0: found a pair of distinct starts whose \
                     orbits merge within {horizon} iterates (not expansive along \
                     the sampled strategies)"
                ),
                Some(s) => println!(
                    "minimum separation {s} over {} within {horizon} iterates",
                    if exhaustive {
                        "all configuration pairs".to_string()
                    } else {
                        format!("{trials} random pairs")
                    }
                ),
            }
        }
        Probe::Mixing {
            map,
            from,
            to,
            max_len,
        } => {
            let map = map.resolve()?;
            let graph = IterationGraph::build(&map);
            let report = mixing_probe(
                &graph,
                BoolConfig::parse(&from)?,
                BoolConfig::parse(&to)?,
                max_len,
            )?;
            println!(
                "walk lengths reaching {to} from {from}: {:?}",
                report.achievable
            );
            match report.all_from {
                Some(l) => println!("every length from {l} to {max_len} works"),
                None => println!("no tail of consecutive achievable lengths up to {max_len}"),
            }
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn train(
    dataset: &std::path::Path,
    hidden: usize,
    epochs: usize,
    reps: usize,
    seed: u64,
    split_outputs: bool,
    out_dir: Option<&std::path::Path>,
    series: bool,
) -> anyhow::Result<()> {
    if reps == 0 {
        bail!("--reps must be at least 1");
    }
    if series && out_dir.is_none() {
        bail!("--series needs --out-dir");
    }
    let mut ds = Dataset::read_csv(dataset)
        .with_context(|| format!("reading dataset {}", dataset.display()))?;
    if split_outputs {
        if ds.scheme != Scheme::Two {
            bail!(
                "--split-outputs applies to scheme-2 data, this file is scheme {}",
                ds.scheme
            );
        }
        ds.scheme = Scheme::TwoSplit;
    }
    let q = ds.scheme.output_width(ds.n);
    let nets = if ds.scheme == Scheme::TwoSplit { q } else { 1 };
    println!(
        "{} samples, scheme {}, {} components, k = {}; training {} network(s) x {} repetitions",
        ds.samples.len(),
        ds.scheme,
        ds.n,
        ds.k,
        nets,
        reps
    );

    let mut outcomes: Vec<RepetitionOutcome> = Vec::with_capacity(reps);
    for rep in 0..reps {
        let rep_s = rep.to_string();
        let path = |role: &str| derive_seed(seed, &["train", &rep_s, role]);
        let init_seeds: Vec<u64> = (0..nets).map(|c| path(&format!("init:{c}"))).collect();
        let outcome = run_repetition(&ds, hidden, epochs, path("split"), &init_seeds)?;
        outcomes.push(outcome);
    }

    for c in 0..q {
        let rates: Vec<f64> = outcomes.iter().map(|o| o.report.per_output[c]).collect();
        let (mean, std) = mean_std(&rates);
        println!("out_{}: {:6.2}% +- {:.2}", c + 1, 100.0 * mean, 100.0 * std);
    }
    let joints: Vec<f64> = outcomes.iter().map(|o| o.report.joint_config).collect();
    let (mean, std) = mean_std(&joints);
    println!("config: {:6.2}% +- {:.2}", 100.0 * mean, 100.0 * std);

    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
        for (rep, outcome) in outcomes.iter().enumerate() {
            for (model, history) in outcome.models.iter().zip(&outcome.histories) {
                let tag = match model.output_index {
                    Some(c) => format!("rep{rep}-out{}", c + 1),
                    None => format!("rep{rep}"),
                };
                model.save(dir.join(format!("{tag}.mlp")))?;
                write_history_csv(history, dir.join(format!("{tag}.history.csv")))?;
            }
        }
        if series {
            let first = &outcomes[0];
            let points = prediction_series(&ds, &first.test_indices, &first.models)?;
            write_series_csv(&points, dir.join("series.csv"))?;
            write_series_svg(&points, dir.join("series.svg"))?;
        }
        println!("models and histories written to {}", dir.display());
    }
    Ok(())
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let count = values.len() as f64;
    let mean = values.iter().sum::<f64>() / count;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / count;
    (mean, var.sqrt())
}

fn experiment(config: &std::path::Path) -> anyhow::Result<()> {
    let cfg = ExperimentConfig::parse_file(config)
        .with_context(|| format!("reading config {}", config.display()))?;
    let rows = run_experiment(&cfg)?;
    println!(
        "{:10} {:8} {:7} {:>6} {:>6} {:>8} {:>8} {:>8}",
        "map", "chaotic", "scheme", "hidden", "epochs", "output", "mean%", "std"
    );
    for r in &rows {
        println!(
            "{:10} {:8} {:7} {:>6} {:>6} {:>8} {:8.2} {:8.2}",
            r.map,
            r.chaotic,
            r.scheme.to_string(),
            r.hidden,
            r.epochs,
            r.output,
            100.0 * r.mean_success,
            100.0 * r.std_dev
        );
    }
    println!("results written under {}", cfg.out_dir.display());
    Ok(())
}
