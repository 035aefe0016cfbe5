use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use kronsample::config::{RunConfig, SamplerChoice};
use kronsample::diagnostics::{acf, ess, two_sample_ks, SUMMARY_COLUMNS};
use kronsample::io::{
    column, parse_chains_csv, parse_dataset_csv, write_acf_csv, write_chains_csv, write_dataset_csv,
    write_factors_csv, AcfTable, ChainRow,
};
use kronsample::model::generate_experiment;
use kronsample::pvl::scatter;
use kronsample::samplers::{chain_rng, run_chain, run_gibbs, Init, TargetDensity};
use kronsample::{Dataset, DenseMatrix, DenseVector, SeparableState};
use serde::Serialize;

use crate::error::CliError;

/// RNG stream for simulated data, disjoint from the chain and swap streams.
const DATA_STREAM: u64 = u64::MAX - 1;

pub fn load_config(path: Option<&Path>, seed: Option<u64>, out: Option<PathBuf>) -> Result<RunConfig, CliError> {
    let mut cfg = match path {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
            RunConfig::from_toml_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
        }
        None => RunConfig::default(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(o) = out {
        cfg.output = o;
    }
    Ok(cfg)
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn create_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("plain data serializes");
    s.push('\n');
    s
}

fn rows_of(m: &DenseMatrix) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().cloned().collect()).collect()
}

#[derive(Serialize)]
struct Truth {
    seed: u64,
    d1: usize,
    d2: usize,
    n: usize,
    gamma: f64,
    sigma1: Vec<Vec<f64>>,
    sigma2: Vec<Vec<f64>>,
}

fn simulate(cfg: &RunConfig) -> Result<(SeparableState, Vec<DenseVector>), CliError> {
    let mut rng = chain_rng(cfg.seed, DATA_STREAM);
    Ok(generate_experiment(cfg.d1, cfg.d2, cfg.n, cfg.gamma, &mut rng)?)
}

pub fn generate(cfg: &RunConfig) -> Result<(), CliError> {
    let (truth, ys) = simulate(cfg)?;
    create_dir(&cfg.output)?;
    write(&cfg.output.join("data.csv"), &write_dataset_csv(&ys))?;
    let t = Truth {
        seed: cfg.seed,
        d1: cfg.d1,
        d2: cfg.d2,
        n: cfg.n,
        gamma: cfg.gamma,
        sigma1: rows_of(truth.sigma1.matrix()),
        sigma2: rows_of(truth.sigma2.matrix()),
    };
    write(&cfg.output.join("truth.json"), &to_json(&t))
}

fn load_data(cfg: &RunConfig) -> Result<Dataset, CliError> {
    let ys = match &cfg.input {
        Some(path) => {
            let text = read(path)?;
            parse_dataset_csv(&text, cfg.d1, cfg.d2).map_err(|source| CliError::Data { path: path.clone(), source })?
        }
        None => {
            if cfg.n == 0 {
                return Ok(Dataset::empty(cfg.d1, cfg.d2));
            }
            simulate(cfg)?.1
        }
    };
    let data_err = |source| CliError::Data { path: cfg.input.clone().unwrap_or_default(), source };
    let s = scatter(&ys).map_err(data_err)?;
    Dataset::from_scatter_with_tol(s, cfg.d1, cfg.d2, cfg.pvl_tol).map_err(data_err)
}

#[derive(Serialize)]
struct StatSummary {
    mean: f64,
    sd: f64,
    ess: Option<f64>,
    ess_per_iter: Option<f64>,
}

fn stat_summary(x: &[f64]) -> StatSummary {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let sd = if x.len() > 1 { (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt() } else { 0.0 };
    let e = ess(x).ok();
    StatSummary { mean, sd, ess: e, ess_per_iter: e.map(|e| e / n) }
}

fn stat_table(rows: &[ChainRow]) -> BTreeMap<String, StatSummary> {
    if rows.is_empty() {
        return BTreeMap::new();
    }
    SUMMARY_COLUMNS
        .iter()
        .map(|name| (name.to_string(), stat_summary(&column(rows, name).expect("known column"))))
        .collect()
}

fn acf_table(rows: &[ChainRow], max_lag: usize) -> AcfTable {
    let names = SUMMARY_COLUMNS.iter().map(|s| s.to_string()).collect();
    if rows.len() < 2 {
        return AcfTable { names, values: Vec::new() };
    }
    let lag = max_lag.min(rows.len() - 1);
    let per_stat: Vec<Vec<f64>> =
        SUMMARY_COLUMNS.iter().map(|name| acf(&column(rows, name).expect("known column"), lag).expect("lag < n")).collect();
    let values = (0..=lag).map(|k| per_stat.iter().map(|a| a[k]).collect()).collect();
    AcfTable { names, values }
}

#[derive(Serialize)]
struct FitSummary {
    sampler: SamplerChoice,
    metric: &'static str,
    slice_density: Option<kronsample::samplers::SliceDensity>,
    seed: u64,
    d1: usize,
    d2: usize,
    n: usize,
    n_samples: usize,
    acceptance_rate: f64,
    epsilon: f64,
    failures: usize,
    swaps_proposed: usize,
    swaps_accepted: usize,
    wall_time_s: f64,
    stats: BTreeMap<String, StatSummary>,
}

pub fn fit(cfg: &RunConfig) -> Result<(), CliError> {
    let data = load_data(cfg)?;
    let n = data.n();
    let (p1, p2) = cfg.priors()?;
    let mut target = TargetDensity::new(data, p1, p2, cfg.metric)?;
    if let Some(slice) = cfg.slice_density {
        target = target.with_slice(slice)?;
    }
    let sampler = cfg.sampler_config();
    let start = Instant::now();
    let out = match cfg.sampler {
        SamplerChoice::Gibbs => run_gibbs(&sampler, &target, &Init::FlipFlop)?,
        SamplerChoice::Sglmc => run_chain(&sampler, &target, &Init::FlipFlop)?,
    };
    let wall_time_s = start.elapsed().as_secs_f64();

    let rows = out
        .samples
        .iter()
        .enumerate()
        .map(|(i, s)| ChainRow::from_sample(i, s))
        .collect::<kronsample::Result<Vec<_>>>()?;
    create_dir(&cfg.output)?;
    write(&cfg.output.join("chains.csv"), &write_chains_csv(&rows))?;
    write(&cfg.output.join("acf.csv"), &write_acf_csv(&acf_table(&rows, cfg.acf_max_lag)))?;
    if cfg.dump_factors {
        let states: Vec<_> = out.samples.iter().enumerate().map(|(i, s)| (i, &s.state)).collect();
        write(&cfg.output.join("factors.csv"), &write_factors_csv(&states)?)?;
    }
    let summary = FitSummary {
        sampler: cfg.sampler,
        metric: cfg.metric.label(),
        slice_density: (cfg.sampler == SamplerChoice::Sglmc && cfg.metric.is_constrained()).then(|| target.slice()),
        seed: cfg.seed,
        d1: cfg.d1,
        d2: cfg.d2,
        n,
        n_samples: rows.len(),
        acceptance_rate: out.acceptance_rate(),
        epsilon: out.epsilon,
        failures: out.failures,
        swaps_proposed: out.swaps_proposed,
        swaps_accepted: out.swaps_accepted,
        wall_time_s,
        stats: stat_table(&rows),
    };
    write(&cfg.output.join("summary.json"), &to_json(&summary))
}

fn load_chains(path: &Path) -> Result<Vec<ChainRow>, CliError> {
    let text = read(path)?;
    parse_chains_csv(&text).map_err(|source| CliError::Data { path: path.to_path_buf(), source })
}

#[derive(Serialize)]
struct CompareReport {
    reference: String,
    threshold: Option<f64>,
    checked: Vec<String>,
    /// KS statistic of each chain against the reference, per statistic.
    ks: BTreeMap<String, BTreeMap<String, f64>>,
    /// ESS per iteration, one row per chain.
    ess_per_iter: BTreeMap<String, BTreeMap<String, Option<f64>>>,
    passed: bool,
}

pub fn compare(paths: &[PathBuf], threshold: Option<f64>, stats: &[String], out: Option<&Path>) -> Result<(), CliError> {
    for s in stats {
        if !SUMMARY_COLUMNS.contains(&s.as_str()) {
            return Err(CliError::Config(format!("unknown statistic {s:?}; expected one of {SUMMARY_COLUMNS:?}")));
        }
    }
    if let Some(t) = threshold {
        if !(t > 0.0 && t <= 1.0) {
            return Err(CliError::Config(format!("threshold {t} must lie in (0, 1]")));
        }
    }
    let checked: Vec<String> =
        if stats.is_empty() { SUMMARY_COLUMNS.iter().map(|s| s.to_string()).collect() } else { stats.to_vec() };
    let chains = paths.iter().map(|p| load_chains(p)).collect::<Result<Vec<_>, _>>()?;
    for (p, rows) in paths.iter().zip(&chains) {
        if rows.is_empty() {
            return Err(CliError::Data { path: p.clone(), source: kronsample::Error::EmptyData });
        }
    }
    let label = |p: &PathBuf| p.display().to_string();
    let mut ks = BTreeMap::new();
    let mut passed = true;
    for (p, rows) in paths.iter().zip(&chains).skip(1) {
        let mut per = BTreeMap::new();
        for name in SUMMARY_COLUMNS {
            let d = two_sample_ks(&column(&chains[0], name).expect("known"), &column(rows, name).expect("known"))?;
            if let Some(t) = threshold {
                if checked.iter().any(|c| c == name) && d >= t {
                    passed = false;
                }
            }
            per.insert(name.to_string(), d);
        }
        ks.insert(label(p), per);
    }
    let ess_per_iter = paths
        .iter()
        .zip(&chains)
        .map(|(p, rows)| (label(p), stat_table(rows).into_iter().map(|(k, v)| (k, v.ess_per_iter)).collect()))
        .collect();
    let report = CompareReport { reference: label(&paths[0]), threshold, checked, ks, ess_per_iter, passed };
    let json = to_json(&report);
    match out {
        Some(dir) => {
            create_dir(dir)?;
            write(&dir.join("compare.json"), &json)?;
        }
        None => print!("{json}"),
    }
    if passed {
        Ok(())
    } else {
        Err(CliError::Threshold(format!("KS statistic reached threshold {}", threshold.unwrap_or_default())))
    }
}

#[derive(Serialize)]
struct Diagnostics {
    n_samples: usize,
    acceptance_rate: f64,
    max_lag: usize,
    stats: BTreeMap<String, StatSummary>,
}

pub fn diagnose(path: &Path, max_lag: usize, out: Option<&Path>) -> Result<(), CliError> {
    let rows = load_chains(path)?;
    let dir = match out {
        Some(d) => d.to_path_buf(),
        None => path.parent().map(Path::to_path_buf).unwrap_or_default(),
    };
    let table = acf_table(&rows, max_lag);
    let accepted = rows.iter().filter(|r| r.accepted).count();
    let diag = Diagnostics {
        n_samples: rows.len(),
        acceptance_rate: if rows.is_empty() { 0.0 } else { accepted as f64 / rows.len() as f64 },
        max_lag: table.values.len().saturating_sub(1),
        stats: stat_table(&rows),
    };
    if !dir.as_os_str().is_empty() {
        create_dir(&dir)?;
    }
    write(&dir.join("acf.csv"), &write_acf_csv(&table))?;
    write(&dir.join("diagnostics.json"), &to_json(&diag))
}
