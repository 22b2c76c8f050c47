use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, SweepParameter, VariantKind};
use super::ensemble::{final_mean, final_rise, mean_std_min, smooth, EnsembleSummary};
use super::io::{unix_timestamp, write_atomic, write_json};
use super::svg::{line_plot, Series};
use crate::ansatz::AnsatzSpec;
use crate::datasets::Dataset;
use crate::error::{Error, Result};
use crate::model::{batch_encoding_angles, class_probabilities, Program};
use crate::training::{init_params, train_partial, TrainConfig, TrainTrace, TraceSummary, SCHEMA_VERSION};

/// Execution knobs that must not change any artifact.
#[derive(Clone, Copy, Debug, Default)]
pub struct RunOptions {
    /// Worker threads; `None` uses the ambient rayon pool.
    pub jobs: Option<usize>,
}

impl RunOptions {
    fn install<T: Send>(&self, f: impl FnOnce() -> T + Send) -> Result<T> {
        match self.jobs {
            None => Ok(f()),
            Some(0) => Err(Error::field("jobs", "must be at least 1")),
            Some(n) => {
                let pool = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build()
                    .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
                Ok(pool.install(f))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub seed: u64,
    pub iteration: Option<usize>,
    pub error: String,
}

#[derive(Clone, Debug)]
pub struct SeedRun {
    pub seed: u64,
    pub config: TrainConfig,
    pub trace: TrainTrace,
    pub failure: Option<Failure>,
}

/// Headline numbers of an ensemble. "Final" values average the records in
/// the last `final_window` iterations of each seed before combining seeds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStats {
    pub seeds: Vec<u64>,
    pub final_window: usize,
    pub final_out_of_sample_mean: f64,
    pub final_out_of_sample_std: f64,
    pub final_out_of_sample_min: f64,
    pub final_in_sample_mean: f64,
    pub final_in_sample_min: f64,
    pub final_in_sample_full_mean: f64,
    pub last_out_of_sample_mean: f64,
    pub initial_in_sample_mean: f64,
    /// Per seed: smoothed final test error relative to its smoothed minimum, minus 1.
    pub seed_out_of_sample_rise: Vec<f64>,
    /// The same, for the smoothed mean curve.
    pub mean_curve_out_of_sample_rise: f64,
    pub mean_curve_min_iteration: usize,
}

#[derive(Clone, Debug)]
pub struct EnsembleRun {
    pub runs: Vec<SeedRun>,
    pub summary: EnsembleSummary,
    pub stats: EnsembleStats,
}

impl EnsembleRun {
    pub fn ok_runs(&self) -> impl Iterator<Item = &SeedRun> {
        self.runs.iter().filter(|r| r.failure.is_none())
    }

    pub fn failures(&self) -> Vec<Failure> {
        self.runs.iter().filter_map(|r| r.failure.clone()).collect()
    }
}

fn train_one(spec: &AnsatzSpec, train: &Dataset, test: &Dataset, cfg: &TrainConfig) -> Result<SeedRun> {
    let init = init_params(spec, cfg.seed);
    let (trace, err) = train_partial(spec, &init, train, test, cfg)?;
    let failure = err.map(|e| Failure {
        seed: cfg.seed,
        iteration: match e {
            Error::NonFinite { iteration, .. } => Some(iteration),
            _ => None,
        },
        error: e.to_string(),
    });
    Ok(SeedRun {
        seed: cfg.seed,
        config: cfg.clone(),
        trace,
        failure,
    })
}

/// Trains every config in parallel; results come back in input order.
fn train_all(spec: &AnsatzSpec, train: &Dataset, test: &Dataset, cfgs: &[TrainConfig]) -> Result<Vec<SeedRun>> {
    cfgs.par_iter().map(|c| train_one(spec, train, test, c)).collect()
}

fn assemble(runs: Vec<SeedRun>, window: usize) -> Result<EnsembleRun> {
    let ok: Vec<&TrainTrace> = runs.iter().filter(|r| r.failure.is_none()).map(|r| &r.trace).collect();
    if ok.is_empty() {
        let f = runs.iter().find_map(|r| r.failure.clone());
        return Err(Error::Data(format!(
            "every seed failed; first failure: {}",
            f.map(|f| f.error).unwrap_or_default()
        )));
    }
    let summary = EnsembleSummary::from_traces(&ok)?;
    let it = &summary.iterations;
    let per_seed = |f: fn(&TrainTrace) -> Vec<f64>| -> Vec<f64> {
        ok.iter().map(|t| final_mean(it, &f(t), window)).collect()
    };
    let out = per_seed(|t| t.out_of_sample());
    let ins = per_seed(|t| t.in_sample());
    let ins_full = per_seed(|t| t.in_sample_full());
    let (out_mean, out_std, out_min) = mean_std_min(&out);
    let (in_mean, _, in_min) = mean_std_min(&ins);
    let last: Vec<f64> = ok.iter().map(|t| t.last().map_or(f64::NAN, |r| r.out_of_sample)).collect();
    let first: Vec<f64> = ok.iter().map(|t| t.records[0].in_sample).collect();
    let seed_rise = ok
        .iter()
        .map(|t| final_rise(&smooth(it, &t.out_of_sample(), window)))
        .collect();
    let mean_smoothed = smooth(it, &summary.mean_out_of_sample, window);
    let argmin = mean_smoothed
        .iter()
        .enumerate()
        .fold(0, |best, (k, v)| if *v < mean_smoothed[best] { k } else { best });
    let stats = EnsembleStats {
        seeds: runs.iter().filter(|r| r.failure.is_none()).map(|r| r.seed).collect(),
        final_window: window,
        final_out_of_sample_mean: out_mean,
        final_out_of_sample_std: out_std,
        final_out_of_sample_min: out_min,
        final_in_sample_mean: in_mean,
        final_in_sample_min: in_min,
        final_in_sample_full_mean: mean_std_min(&ins_full).0,
        last_out_of_sample_mean: mean_std_min(&last).0,
        initial_in_sample_mean: mean_std_min(&first).0,
        seed_out_of_sample_rise: seed_rise,
        mean_curve_out_of_sample_rise: final_rise(&mean_smoothed),
        mean_curve_min_iteration: it[argmin],
    };
    Ok(EnsembleRun { runs, summary, stats })
}

/// Trains one ensemble (one run per seed) without writing anything.
pub fn run_ensemble(
    spec: &AnsatzSpec,
    train: &Dataset,
    test: &Dataset,
    base: &TrainConfig,
    seeds: &[u64],
    final_window: usize,
) -> Result<EnsembleRun> {
    let cfgs: Vec<TrainConfig> = seeds.iter().map(|&seed| TrainConfig { seed, ..base.clone() }).collect();
    assemble(train_all(spec, train, test, &cfgs)?, final_window)
}

/// Per-seed traces (partial ones included) and the failure list, then the
/// ensemble statistics over the seeds that finished.
fn write_and_assemble(dir: &Path, runs: Vec<SeedRun>, window: usize) -> Result<EnsembleRun> {
    for r in &runs {
        write_atomic(&dir.join("traces").join(format!("seed_{}.csv", r.seed)), r.trace.to_csv().as_bytes())?;
    }
    let failures: Vec<Failure> = runs.iter().filter_map(|r| r.failure.clone()).collect();
    write_json(&dir.join("failures.json"), &failures)?;
    let ens = assemble(runs, window)?;
    write_atomic(&dir.join("ensemble.csv"), ens.summary.to_csv().as_bytes())?;
    Ok(ens)
}

/// Files common to every command: resolved config, seeds, data, metadata.
fn write_preamble(cfg: &ExperimentConfig, out: &Path, train: &Dataset, test: &Dataset, command: &str) -> Result<()> {
    write_atomic(&out.join("config.toml"), cfg.resolved().to_toml().as_bytes())?;
    let seeds: String = cfg.ensemble_seeds.iter().map(|s| format!("{s}\n")).collect();
    write_atomic(&out.join("seeds.txt"), seeds.as_bytes())?;
    train.write_csv(&out.join("train.csv"))?;
    test.write_csv(&out.join("test.csv"))?;
    write_json(
        &out.join("metadata.json"),
        &serde_json::json!({
            "command": command,
            "crate_version": env!("CARGO_PKG_VERSION"),
            "unix_time": unix_timestamp(),
        }),
    )
}

fn prepare(cfg: &ExperimentConfig) -> Result<(AnsatzSpec, Dataset, Dataset)> {
    cfg.validate()?;
    let (train, test) = cfg.dataset.generate()?;
    Ok((cfg.spec(), train, test))
}

fn output_dir(cfg: &ExperimentConfig, out: Option<&Path>) -> PathBuf {
    out.map_or_else(|| cfg.output.dir.clone(), Path::to_path_buf)
}

#[derive(Clone, Debug, Serialize)]
struct RunSummary<'a> {
    schema_version: u32,
    name: &'a str,
    seeds: &'a [u64],
    stats: &'a EnsembleStats,
    per_seed: Vec<TraceSummary>,
    failures: Vec<Failure>,
}

pub struct ExperimentOutcome {
    pub dir: PathBuf,
    pub ensemble: EnsembleRun,
}

/// Trains the ensemble described by `cfg` and writes every artifact under
/// `out` (or `cfg.output.dir`).
pub fn run_experiment(cfg: &ExperimentConfig, out: Option<&Path>, opts: RunOptions) -> Result<ExperimentOutcome> {
    let (spec, train, test) = prepare(cfg)?;
    let dir = output_dir(cfg, out);
    write_preamble(cfg, &dir, &train, &test, "run")?;
    let cfgs: Vec<TrainConfig> = cfg.ensemble_seeds.iter().map(|&s| cfg.train_for_seed(s)).collect();
    let runs = opts.install(|| train_all(&spec, &train, &test, &cfgs))??;
    let ens = write_and_assemble(&dir, runs, cfg.output.final_window)?;

    let summary = RunSummary {
        schema_version: SCHEMA_VERSION,
        name: &cfg.name,
        seeds: &cfg.ensemble_seeds,
        stats: &ens.stats,
        per_seed: ens.runs.iter().map(|r| r.trace.summary(&r.config)).collect(),
        failures: ens.failures(),
    };
    write_json(&dir.join("summary.json"), &summary)?;
    write_atomic(
        &dir.join("model_grid.csv"),
        model_grid_csv(&spec, &ens, cfg.output.grid_points)?.as_bytes(),
    )?;
    if cfg.output.svg {
        let it = &ens.summary.iterations;
        let pts = |v: &[f64]| it.iter().zip(v).map(|(i, y)| (*i as f64, *y)).collect();
        let svg = line_plot(
            &format!("{}: out-of-sample error", cfg.name),
            "iteration",
            &[
                Series { label: "mean", points: pts(&ens.summary.mean_out_of_sample) },
                Series { label: "min", points: pts(&ens.summary.min_out_of_sample) },
                Series { label: "mean in-sample", points: pts(&ens.summary.mean_in_sample) },
            ],
        );
        write_atomic(&dir.join("errors.svg"), svg.as_bytes())?;
    }
    Ok(ExperimentOutcome { dir, ensemble: ens })
}

/// Final-model outputs on a dense grid, one block per seed.
fn model_grid_csv(spec: &AnsatzSpec, ens: &EnsembleRun, points: usize) -> Result<String> {
    let axis: Vec<f64> = (0..points).map(|k| -1.0 + 2.0 * k as f64 / (points - 1) as f64).collect();
    let xs: Vec<Vec<f64>> = match spec.n_features() {
        1 => axis.iter().map(|&x| vec![x]).collect(),
        2 => axis.iter().flat_map(|&a| axis.iter().map(move |&b| vec![a, b])).collect(),
        n => return Err(Error::UnsupportedAnalysis(format!("model grid for {n} input features"))),
    };
    let angles = batch_encoding_angles(spec, &xs)?;
    let program = Program::new(spec, None)?;
    let classify = spec.n_features() == 2;
    let mut out = String::from(if classify { "seed,x0,x1,f,p0\n" } else { "seed,x,f\n" });
    for r in ens.ok_runs() {
        let f = program.evaluate_many(&r.trace.final_params.values, angles.iter().map(|a| a.as_slice()));
        for (x, f) in xs.iter().zip(f) {
            if classify {
                let _ = writeln!(out, "{},{},{},{},{}", r.seed, x[0], x[1], f, class_probabilities(f)[0]);
            } else {
                let _ = writeln!(out, "{},{},{}", r.seed, x[0], f);
            }
        }
    }
    Ok(out)
}

pub const SWEEP_CSV_HEADER: &str = "rate,final_in_sample_mean,final_in_sample_min,final_in_sample_fullmask_mean,\
final_out_sample_mean,final_out_sample_std,final_out_sample_min,seeds_ok";

#[derive(Clone, Debug, Serialize)]
pub struct SweepPoint {
    pub rate: f64,
    pub layer_rate: f64,
    pub gate_rate: f64,
    pub stats: EnsembleStats,
}

pub struct SweepOutcome {
    pub dir: PathBuf,
    pub parameter: SweepParameter,
    pub points: Vec<SweepPoint>,
}

/// For every value of the swept rate, trains the ensemble and records final
/// errors. The other rate stays at its `[train]` value.
pub fn run_sweep(cfg: &ExperimentConfig, out: Option<&Path>, opts: RunOptions) -> Result<SweepOutcome> {
    let sweep = cfg
        .sweep
        .clone()
        .ok_or_else(|| Error::field("sweep", "missing [sweep] section"))?;
    let (spec, train, test) = prepare(cfg)?;
    let dir = output_dir(cfg, out);
    write_preamble(cfg, &dir, &train, &test, "sweep")?;

    let rates: Vec<(f64, f64)> = sweep
        .values
        .iter()
        .map(|&v| match sweep.parameter {
            SweepParameter::LayerRate => (v, cfg.train.gate_dropout_rate),
            SweepParameter::GateRate => (cfg.train.layer_dropout_rate, v),
        })
        .collect();
    let cfgs: Vec<TrainConfig> = rates
        .iter()
        .flat_map(|&(l, g)| {
            cfg.ensemble_seeds
                .iter()
                .map(move |&s| cfg.train_for_seed(s).with_dropout(l, g))
        })
        .collect();
    let mut runs = opts.install(|| train_all(&spec, &train, &test, &cfgs))??.into_iter();

    let mut points = Vec::new();
    let mut csv = String::from(SWEEP_CSV_HEADER);
    csv.push('\n');
    let name = match sweep.parameter {
        SweepParameter::LayerRate => "layer_rate",
        SweepParameter::GateRate => "gate_rate",
    };
    for (&v, &(l, g)) in sweep.values.iter().zip(&rates) {
        let chunk: Vec<SeedRun> = runs.by_ref().take(cfg.ensemble_seeds.len()).collect();
        let sub = dir.join("points").join(format!("{name}_{v}"));
        let ens = write_and_assemble(&sub, chunk, cfg.output.final_window)?;
        let s = &ens.stats;
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{}",
            v,
            s.final_in_sample_mean,
            s.final_in_sample_min,
            s.final_in_sample_full_mean,
            s.final_out_of_sample_mean,
            s.final_out_of_sample_std,
            s.final_out_of_sample_min,
            s.seeds.len()
        );
        points.push(SweepPoint {
            rate: v,
            layer_rate: l,
            gate_rate: g,
            stats: ens.stats,
        });
    }
    write_atomic(&dir.join("sweep.csv"), csv.as_bytes())?;
    write_json(
        &dir.join("summary.json"),
        &serde_json::json!({
            "schema_version": SCHEMA_VERSION,
            "name": cfg.name,
            "parameter": sweep.parameter,
            "points": points,
        }),
    )?;
    if cfg.output.svg {
        let series = |f: fn(&EnsembleStats) -> f64| points.iter().map(|p| (p.rate, f(&p.stats))).collect();
        let svg = line_plot(
            &format!("{}: final errors vs {name}", cfg.name),
            name,
            &[
                Series { label: "out-of-sample mean", points: series(|s| s.final_out_of_sample_mean) },
                Series { label: "out-of-sample min", points: series(|s| s.final_out_of_sample_min) },
                Series { label: "in-sample mean", points: series(|s| s.final_in_sample_mean) },
            ],
        );
        write_atomic(&dir.join("sweep.svg"), svg.as_bytes())?;
    }
    Ok(SweepOutcome {
        dir,
        parameter: sweep.parameter,
        points,
    })
}

pub const COMPARISON_CSV_HEADER: &str = "variant,kind,iterations,layer_rate,gate_rate,lambda,\
final_in_sample_mean,final_in_sample_fullmask_mean,final_out_sample_mean,final_out_sample_std,\
final_out_sample_min,param_distance_to_reference,param_distance_raw_to_reference";

#[derive(Clone, Debug, Serialize)]
pub struct VariantResult {
    pub name: String,
    pub kind: VariantKind,
    pub iterations: usize,
    pub layer_rate: f64,
    pub gate_rate: f64,
    /// Selected penalty weight (L1/L2 only).
    pub lambda: Option<f64>,
    pub stats: EnsembleStats,
    /// Every penalty weight tried, with its ensemble statistics.
    pub trials: Vec<(f64, EnsembleStats)>,
    /// Mean circular distance of the final parameters to the reference
    /// (first `none`) variant's, over matched seeds.
    pub param_distance: Option<f64>,
    /// The same without wrapping differences into `(-pi, pi]`.
    pub param_distance_raw: Option<f64>,
    #[serde(skip)]
    pub final_params: Vec<(u64, Vec<f64>)>,
}

pub struct ComparisonOutcome {
    pub dir: PathBuf,
    pub variants: Vec<VariantResult>,
}

impl ComparisonOutcome {
    pub fn variant(&self, name: &str) -> Option<&VariantResult> {
        self.variants.iter().find(|v| v.name == name)
    }
}

/// Difference of two angles wrapped into `(-pi, pi]`.
fn wrap_angle(d: f64) -> f64 {
    let tau = std::f64::consts::TAU;
    let w = d.rem_euclid(tau);
    if w > std::f64::consts::PI {
        w - tau
    } else {
        w
    }
}

fn param_distance(a: &[(u64, Vec<f64>)], b: &[(u64, Vec<f64>)], wrap: bool) -> Option<f64> {
    let mut total = 0.0;
    let mut count = 0usize;
    for (seed, pa) in a {
        if let Some((_, pb)) = b.iter().find(|(s, _)| s == seed) {
            for (x, y) in pa.iter().zip(pb) {
                let d = x - y;
                total += if wrap { wrap_angle(d).abs() } else { d.abs() };
                count += 1;
            }
        }
    }
    (count > 0).then(|| total / count as f64)
}

/// Trains every variant (every penalty weight for L1/L2) on the same data
/// and seeds, keeps the best weight by mean final out-of-sample error, and
/// writes the comparison table plus a parameter dump.
pub fn run_comparison(cfg: &ExperimentConfig, out: Option<&Path>, opts: RunOptions) -> Result<ComparisonOutcome> {
    let compare = cfg
        .compare
        .clone()
        .ok_or_else(|| Error::field("compare", "missing [compare] section"))?;
    let (spec, train, test) = prepare(cfg)?;
    let dir = output_dir(cfg, out);
    write_preamble(cfg, &dir, &train, &test, "compare")?;

    // (variant index, lambda) per ensemble, flattened into one job list
    let mut groups = Vec::new();
    let mut cfgs = Vec::new();
    for (vi, v) in compare.variants.iter().enumerate() {
        for (lambda, base) in v.train_configs(&cfg.train) {
            groups.push((vi, lambda));
            cfgs.extend(cfg.ensemble_seeds.iter().map(|&s| TrainConfig { seed: s, ..base.clone() }));
        }
    }
    let mut runs = opts.install(|| train_all(&spec, &train, &test, &cfgs))??.into_iter();

    let mut variants: Vec<VariantResult> = Vec::new();
    let mut grid_csv = String::from("variant,lambda,final_in_sample_mean,final_out_sample_mean,final_out_sample_std,selected\n");
    let mut group_iter = groups.into_iter().peekable();
    for (vi, v) in compare.variants.iter().enumerate() {
        let mut trials: Vec<(Option<f64>, EnsembleRun)> = Vec::new();
        while let Some(&(gvi, lambda)) = group_iter.peek() {
            if gvi != vi {
                break;
            }
            group_iter.next();
            let chunk: Vec<SeedRun> = runs.by_ref().take(cfg.ensemble_seeds.len()).collect();
            let sub = match lambda {
                Some(l) => dir.join("variants").join(&v.name).join(format!("lambda_{l}")),
                None => dir.join("variants").join(&v.name),
            };
            let ens = write_and_assemble(&sub, chunk, cfg.output.final_window)?;
            trials.push((lambda, ens));
        }
        let best = trials
            .iter()
            .enumerate()
            .fold(0, |b, (k, t)| {
                if t.1.stats.final_out_of_sample_mean < trials[b].1.stats.final_out_of_sample_mean {
                    k
                } else {
                    b
                }
            });
        for (k, (lambda, ens)) in trials.iter().enumerate() {
            if let Some(l) = lambda {
                let _ = writeln!(
                    grid_csv,
                    "{},{},{},{},{},{}",
                    v.name,
                    l,
                    ens.stats.final_in_sample_mean,
                    ens.stats.final_out_of_sample_mean,
                    ens.stats.final_out_of_sample_std,
                    k == best
                );
            }
        }
        let (lambda, ens) = &trials[best];
        variants.push(VariantResult {
            name: v.name.clone(),
            kind: v.kind,
            iterations: v.iterations,
            layer_rate: if v.kind == VariantKind::Dropout { v.layer_rate } else { 0.0 },
            gate_rate: if v.kind == VariantKind::Dropout { v.gate_rate } else { 0.0 },
            lambda: *lambda,
            stats: ens.stats.clone(),
            trials: trials
                .iter()
                .filter_map(|(l, e)| l.map(|l| (l, e.stats.clone())))
                .collect(),
            param_distance: None,
            param_distance_raw: None,
            final_params: ens
                .ok_runs()
                .map(|r| (r.seed, r.trace.final_params.values.clone()))
                .collect(),
        });
    }

    let reference = variants.iter().position(|v| v.kind == VariantKind::None);
    if let Some(r) = reference {
        let ref_params = variants[r].final_params.clone();
        for (k, v) in variants.iter_mut().enumerate() {
            if k != r {
                v.param_distance = param_distance(&v.final_params, &ref_params, true);
                v.param_distance_raw = param_distance(&v.final_params, &ref_params, false);
            }
        }
    }

    let opt = |x: Option<f64>| x.map_or(String::new(), |v| v.to_string());
    let mut csv = String::from(COMPARISON_CSV_HEADER);
    csv.push('\n');
    let mut params_csv = String::from("variant,seed,index,layer,qubit,column,value\n");
    for v in &variants {
        let s = &v.stats;
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            v.name,
            serde_json::to_value(v.kind).ok().and_then(|j| j.as_str().map(String::from)).unwrap_or_default(),
            v.iterations,
            v.layer_rate,
            v.gate_rate,
            opt(v.lambda),
            s.final_in_sample_mean,
            s.final_in_sample_full_mean,
            s.final_out_of_sample_mean,
            s.final_out_of_sample_std,
            s.final_out_of_sample_min,
            opt(v.param_distance),
            opt(v.param_distance_raw),
        );
        for (seed, p) in &v.final_params {
            for (i, value) in p.iter().enumerate() {
                let (layer, qubit, column) = spec.param_position(i);
                let _ = writeln!(params_csv, "{},{seed},{i},{layer},{qubit},{column},{value}", v.name);
            }
        }
    }
    write_atomic(&dir.join("comparison.csv"), csv.as_bytes())?;
    write_atomic(&dir.join("lambda_grid.csv"), grid_csv.as_bytes())?;
    write_atomic(&dir.join("params.csv"), params_csv.as_bytes())?;
    write_json(
        &dir.join("summary.json"),
        &serde_json::json!({
            "schema_version": SCHEMA_VERSION,
            "name": cfg.name,
            "seeds": cfg.ensemble_seeds,
            "variants": variants,
        }),
    )?;
    Ok(ComparisonOutcome { dir, variants })
}
