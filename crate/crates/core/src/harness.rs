//! Experiment runner: synthetic inputs, repeated seeded trials, error
//! metrics, epsilon sweeps and decode benchmarks, with CSV/JSON output.
//!
//! Every randomized step draws from a stream keyed by `(seed, trial, role,
//! user)`, so a run is a pure function of its configuration no matter how
//! many worker threads execute it.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::Rng;
use serde::Serialize;

use crate::baselines::{RrParams, SsCounts, SsParams};
use crate::error::{Error, Result};
use crate::hpg::{HpgCountVector, HpgParams};
use crate::pg::{CountVector, EstimateVector, PgParams};
use crate::pirappor::PiRapporParams;
use crate::pubcoin::{user_shared_seed, PubCoinHpg, PubCoinPg};
use crate::seeding;

/// Which mechanism an experiment exercises.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MechanismKind {
    Pg,
    Hpg,
    PiRappor,
    Rr,
    Ss,
    PgPub,
    HpgPub,
}

impl MechanismKind {
    pub fn name(&self) -> &'static str {
        match self {
            MechanismKind::Pg => "pg",
            MechanismKind::Hpg => "hpg",
            MechanismKind::PiRappor => "pirappor",
            MechanismKind::Rr => "rr",
            MechanismKind::Ss => "ss",
            MechanismKind::PgPub => "pg-pub",
            MechanismKind::HpgPub => "hpg-pub",
        }
    }

    /// The public-coin counterpart, if any.
    pub fn public_coin(self) -> Result<Self> {
        match self {
            MechanismKind::Pg | MechanismKind::PgPub => Ok(MechanismKind::PgPub),
            MechanismKind::Hpg | MechanismKind::HpgPub => Ok(MechanismKind::HpgPub),
            other => Err(Error::InvalidConfig(format!(
                "{} has no public-coin variant",
                other.name()
            ))),
        }
    }
}

impl fmt::Display for MechanismKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MechanismKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pg" => Ok(MechanismKind::Pg),
            "hpg" => Ok(MechanismKind::Hpg),
            "pirappor" => Ok(MechanismKind::PiRappor),
            "rr" => Ok(MechanismKind::Rr),
            "ss" => Ok(MechanismKind::Ss),
            "pg-pub" => Ok(MechanismKind::PgPub),
            "hpg-pub" => Ok(MechanismKind::HpgPub),
            other => Err(Error::InvalidConfig(format!("unknown mechanism {other}"))),
        }
    }
}

/// Synthetic input distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Distribution {
    /// Every user holds item 0.
    Spike,
    /// `P(i)` proportional to `(i+1)^(-s)`.
    Zipf(f64),
}

impl fmt::Display for Distribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Distribution::Spike => f.write_str("spike"),
            Distribution::Zipf(s) => write!(f, "zipf:{s}"),
        }
    }
}

impl FromStr for Distribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "spike" {
            return Ok(Distribution::Spike);
        }
        if let Some(exp) = s.strip_prefix("zipf:").or_else(|| {
            s.strip_prefix("zipf(")
                .and_then(|rest| rest.strip_suffix(')'))
        }) {
            let exp: f64 = exp
                .parse()
                .map_err(|_| Error::InvalidConfig(format!("bad zipf exponent in {s}")))?;
            return Ok(Distribution::Zipf(exp));
        }
        Err(Error::InvalidConfig(format!("unknown distribution {s}")))
    }
}

/// Output format for report files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::InvalidConfig(format!("unknown format {other}"))),
        }
    }
}

/// Full description of an experiment.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub mechanism: MechanismKind,
    pub epsilon: f64,
    pub num_values: u64,
    pub num_users: u64,
    pub trials: u32,
    pub distribution: Distribution,
    pub seed: u64,
    /// Seed for the shared randomness of public-coin runs; defaults to `seed`.
    pub public_seed: Option<u64>,
    pub q: Option<u64>,
    pub t: Option<u32>,
    pub h: Option<u64>,
    /// Field size for the hybrid decoder in `bench_decode`.
    pub hpg_q: Option<u64>,
    /// Worker threads for trial parallelism; 0 uses the rayon default.
    pub threads: usize,
    pub format: OutputFormat,
}

impl ExperimentConfig {
    pub fn new(mechanism: MechanismKind, epsilon: f64, num_values: u64, num_users: u64) -> Self {
        ExperimentConfig {
            mechanism,
            epsilon,
            num_values,
            num_users,
            trials: 1,
            distribution: Distribution::Spike,
            seed: 0,
            public_seed: None,
            q: None,
            t: None,
            h: None,
            hpg_q: None,
            threads: 0,
            format: OutputFormat::Csv,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidConfig("epsilon must be positive".into()));
        }
        if self.num_values < 2 {
            return Err(Error::InvalidConfig("k must be at least 2".into()));
        }
        if self.num_users == 0 {
            return Err(Error::InvalidConfig("n must be at least 1".into()));
        }
        if self.trials == 0 {
            return Err(Error::InvalidConfig("trials must be at least 1".into()));
        }
        if let Distribution::Zipf(s) = self.distribution {
            if !(s >= 0.0) {
                return Err(Error::InvalidConfig(
                    "zipf exponent must be nonnegative".into(),
                ));
            }
        }
        Ok(())
    }

    fn public_seed(&self) -> u64 {
        self.public_seed.unwrap_or(self.seed)
    }
}

/// Error and timing metrics of one trial.
#[derive(Debug, Clone, Serialize)]
pub struct TrialResult {
    pub trial: u32,
    pub mse: f64,
    pub linf: f64,
    pub encode_ns: u64,
    pub decode_ns: u64,
}

/// One row of the empirical CDF table.
#[derive(Debug, Clone, Serialize)]
pub struct CdfRow {
    pub percentile: f64,
    pub mse: f64,
}

/// One row of an epsilon sweep.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub epsilon: f64,
    pub mean_mse: f64,
}

/// One row of a decode benchmark.
#[derive(Debug, Clone, Serialize)]
pub struct BenchRow {
    pub decoder: String,
    pub median_ns: u64,
}

/// Draws `n` synthetic inputs over `[0, k)` from the configured distribution.
pub fn generate_inputs<R: Rng + ?Sized>(config: &ExperimentConfig, rng: &mut R) -> Vec<u64> {
    match config.distribution {
        Distribution::Spike => vec![0; config.num_users as usize],
        Distribution::Zipf(exponent) => {
            let table = ZipfTable::new(config.num_values, exponent);
            (0..config.num_users).map(|_| table.sample(rng)).collect()
        }
    }
}

/// Cumulative table for power-law sampling by binary search.
pub struct ZipfTable {
    cdf: Vec<f64>,
}

impl ZipfTable {
    pub fn new(num_values: u64, exponent: f64) -> Self {
        let mut cdf = Vec::with_capacity(num_values as usize);
        let mut acc = 0.0;
        for i in 0..num_values {
            acc += ((i + 1) as f64).powf(-exponent);
            cdf.push(acc);
        }
        let total = acc;
        for c in cdf.iter_mut() {
            *c /= total;
        }
        ZipfTable { cdf }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let u: f64 = rng.random();
        self.cdf.partition_point(|&c| c < u) as u64
    }
}

/// A mechanism with derived parameters, ready to run trials.
enum Instance {
    Pg(PgParams),
    Hpg(HpgParams),
    PiRappor(PiRapporParams),
    Rr(RrParams),
    Ss(SsParams),
    PgPub(PubCoinPg),
    HpgPub(PubCoinHpg),
}

impl Instance {
    fn build(config: &ExperimentConfig) -> Result<Self> {
        let eps = config.epsilon;
        let k = config.num_values;
        match config.mechanism {
            MechanismKind::Pg => {
                let params = match (config.q, config.t) {
                    (Some(q), Some(t)) => PgParams::with_geometry(eps, k, q, t)?,
                    (Some(q), None) => {
                        PgParams::with_geometry(eps, k, q, crate::pg::smallest_dim(q, k)?)?
                    }
                    _ => PgParams::derive(eps, k)?,
                };
                Ok(Instance::Pg(params))
            }
            MechanismKind::Hpg => {
                let q = config.q.unwrap_or(5);
                let params = match (config.t, config.h) {
                    (Some(t), Some(h)) => HpgParams::with_shape(eps, k, q, t, h)?,
                    _ => HpgParams::derive(eps, k, q)?,
                };
                Ok(Instance::Hpg(params))
            }
            MechanismKind::PiRappor => {
                let params = match (config.q, config.t) {
                    (Some(q), Some(t)) => PiRapporParams::with_shape(eps, k, q, t)?,
                    _ => PiRapporParams::derive(eps, k)?,
                };
                Ok(Instance::PiRappor(params))
            }
            MechanismKind::Rr => Ok(Instance::Rr(RrParams::new(eps, k)?)),
            MechanismKind::Ss => Ok(Instance::Ss(SsParams::new(eps, k)?)),
            MechanismKind::PgPub => {
                let params = match (config.q, config.t) {
                    (Some(q), Some(t)) => PubCoinPg::with_geometry(eps, k, q, t)?,
                    _ => PubCoinPg::derive(eps, k)?,
                };
                Ok(Instance::PgPub(params))
            }
            MechanismKind::HpgPub => {
                let q = config.q.unwrap_or(5);
                let params = match (config.t, config.h) {
                    (Some(t), Some(h)) => {
                        PubCoinHpg::new(HpgParams::with_shape(eps, k, q, t, h)?)?
                    }
                    _ => PubCoinHpg::derive(eps, k, q)?,
                };
                Ok(Instance::HpgPub(params))
            }
        }
    }

    /// Encodes, accumulates and decodes one trial's worth of users.
    fn run_trial(&self, config: &ExperimentConfig, trial: u32) -> Result<TrialResult> {
        let mut input_rng = seeding::stream(&[config.seed, trial as u64, 0, 0]);
        let inputs = generate_inputs(config, &mut input_rng);
        // Fresh shared coins every trial so trials stay independent.
        let trial_public_seed = seeding::mix(&[config.public_seed(), trial as u64]);
        let user_rng = |user: u64| seeding::stream(&[config.seed, trial as u64, 1, user + 1]);

        let encode_start = Instant::now();
        let decoded: DecodeInput = match self {
            Instance::Pg(params) => {
                let mut y = CountVector::new(params.geometry().num_points());
                for (user, &v) in inputs.iter().enumerate() {
                    let mut rng = user_rng(user as u64);
                    y.add(params.encode(v, &mut rng)?)?;
                }
                DecodeInput::Flat(y)
            }
            Instance::PgPub(params) => {
                let mut y = CountVector::new(params.inner().geometry().num_points());
                for (user, &v) in inputs.iter().enumerate() {
                    let mut rng = user_rng(user as u64);
                    let w = params.sample_shared(user_shared_seed(trial_public_seed, user as u64));
                    let element = params.encode_value(v, &w, &mut rng)?;
                    y.add(params.decode_message(&w, element))?;
                }
                DecodeInput::Flat(y)
            }
            Instance::Hpg(params) => {
                let mut y = HpgCountVector::new(params.num_blocks(), params.block_points());
                for (user, &v) in inputs.iter().enumerate() {
                    let mut rng = user_rng(user as u64);
                    y.add(params.encode(v, &mut rng)?)?;
                }
                DecodeInput::Blocks(y)
            }
            Instance::HpgPub(params) => {
                let mut y = HpgCountVector::new(
                    params.inner().num_blocks(),
                    params.inner().block_points(),
                );
                for (user, &v) in inputs.iter().enumerate() {
                    let mut rng = user_rng(user as u64);
                    let w = params.sample_shared(user_shared_seed(trial_public_seed, user as u64));
                    let (block, element) = params.encode_value(v, &w, &mut rng)?;
                    y.add(params.decode_message(&w, block, element))?;
                }
                DecodeInput::Blocks(y)
            }
            Instance::PiRappor(params) => {
                let mut y = CountVector::new(params.message_universe());
                for (user, &v) in inputs.iter().enumerate() {
                    let mut rng = user_rng(user as u64);
                    let m = params.encode(v, &mut rng)?;
                    y.add(params.message_index(&m))?;
                }
                DecodeInput::Flat(y)
            }
            Instance::Rr(params) => {
                let mut y = CountVector::new(params.num_values());
                for (user, &v) in inputs.iter().enumerate() {
                    let mut rng = user_rng(user as u64);
                    y.add(params.encode(v, &mut rng)?)?;
                }
                DecodeInput::Flat(y)
            }
            Instance::Ss(params) => {
                let mut y = SsCounts::new(params.num_values());
                for (user, &v) in inputs.iter().enumerate() {
                    let mut rng = user_rng(user as u64);
                    y.add(&params.encode(v, &mut rng)?)?;
                }
                DecodeInput::Inclusion(y)
            }
        };
        let encode_ns = encode_start.elapsed().as_nanos() as u64;

        let decode_start = Instant::now();
        let estimates = match (self, &decoded) {
            (Instance::Pg(params), DecodeInput::Flat(y)) => params.decode_dp(y)?,
            (Instance::PgPub(params), DecodeInput::Flat(y)) => params.decode(y)?,
            (Instance::Hpg(params), DecodeInput::Blocks(y)) => params.decode(y)?,
            (Instance::HpgPub(params), DecodeInput::Blocks(y)) => params.decode(y)?,
            (Instance::PiRappor(params), DecodeInput::Flat(y)) => params.decode_dp(y)?,
            (Instance::Rr(params), DecodeInput::Flat(y)) => params.decode(y)?,
            (Instance::Ss(params), DecodeInput::Inclusion(y)) => params.decode(y)?,
            _ => unreachable!("decode input matches the mechanism that built it"),
        };
        let decode_ns = decode_start.elapsed().as_nanos() as u64;

        let (mse, linf) = error_metrics(&inputs, &estimates, config.num_values);
        Ok(TrialResult {
            trial,
            mse,
            linf,
            encode_ns,
            decode_ns,
        })
    }
}

enum DecodeInput {
    Flat(CountVector),
    Blocks(HpgCountVector),
    Inclusion(SsCounts),
}

/// `(1/k) ||x - x~||_2^2` and `||x - x~||_inf` against the true histogram.
fn error_metrics(inputs: &[u64], estimates: &EstimateVector, num_values: u64) -> (f64, f64) {
    let mut truth = vec![0.0f64; num_values as usize];
    for &v in inputs {
        truth[v as usize] += 1.0;
    }
    let mut sq = 0.0;
    let mut linf: f64 = 0.0;
    for (est, t) in estimates.values.iter().zip(&truth) {
        let d = est - t;
        sq += d * d;
        linf = linf.max(d.abs());
    }
    (sq / num_values as f64, linf)
}

/// Runs all trials, in parallel when a worker pool is configured; the result
/// list is ordered by trial index and independent of thread count.
pub fn run_trials(config: &ExperimentConfig) -> Result<Vec<TrialResult>> {
    config.validate()?;
    let instance = Instance::build(config)?;
    let trial_ids: Vec<u32> = (0..config.trials).collect();
    let run_all = || -> Result<Vec<TrialResult>> {
        use rayon::prelude::*;
        trial_ids
            .par_iter()
            .map(|&trial| instance.run_trial(config, trial))
            .collect()
    };
    if config.threads == 0 {
        run_all()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.threads)
            .build()
            .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
        pool.install(run_all)
    }
}

/// Empirical CDF of the per-trial MSE: row `p%` holds the smallest value `y`
/// such that at least `p%` of trials had `mse <= y`.
pub fn emit_cdf(results: &[TrialResult]) -> Vec<CdfRow> {
    let mut sorted: Vec<f64> = results.iter().map(|r| r.mse).collect();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("mse is finite"));
    let n = sorted.len();
    sorted
        .into_iter()
        .enumerate()
        .map(|(i, mse)| CdfRow {
            percentile: 100.0 * (i + 1) as f64 / n as f64,
            mse,
        })
        .collect()
}

/// Mean MSE per privacy budget, re-deriving parameters for each entry.
pub fn sweep_epsilon(config: &ExperimentConfig, epsilons: &[f64]) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::with_capacity(epsilons.len());
    for &epsilon in epsilons {
        let point = ExperimentConfig {
            epsilon,
            ..config.clone()
        };
        let results = run_trials(&point)?;
        let mean_mse = results.iter().map(|r| r.mse).sum::<f64>() / results.len() as f64;
        rows.push(SweepRow { epsilon, mean_mse });
    }
    Ok(rows)
}

/// Times the four decoders on a fixed synthetic count vector; each entry is
/// the median of five runs on a monotonic clock.
pub fn bench_decode(config: &ExperimentConfig) -> Result<Vec<BenchRow>> {
    config.validate()?;
    let eps = config.epsilon;
    let k = config.num_values;
    let mut rng = seeding::stream(&[config.seed, 0, 2, 0]);

    let pg = match (config.q, config.t) {
        (Some(q), Some(t)) => PgParams::with_geometry(eps, k, q, t)?,
        (Some(q), None) => PgParams::with_geometry(eps, k, q, crate::pg::smallest_dim(q, k)?)?,
        _ => PgParams::derive(eps, k)?,
    };
    let pg_counts = CountVector::from_messages(
        pg.geometry().num_points(),
        (0..config.num_users).map(|_| rng.random_range(0..pg.geometry().num_points())),
    )?;

    let hpg_q = config.hpg_q.unwrap_or(5);
    let hpg = match (config.t, config.h) {
        (_, Some(h)) if config.hpg_q.is_some() && config.t.is_some() => {
            HpgParams::with_shape(eps, k, hpg_q, config.t.unwrap(), h)?
        }
        _ => HpgParams::derive(eps, k, hpg_q)?,
    };
    let mut hpg_counts = HpgCountVector::new(hpg.num_blocks(), hpg.block_points());
    for _ in 0..config.num_users {
        hpg_counts.add(crate::hpg::HpgMessage {
            block: rng.random_range(0..hpg.num_blocks()),
            point: rng.random_range(0..hpg.block_points()),
        })?;
    }

    let pirappor = PiRapporParams::derive(eps, k)?;
    let pr_counts = CountVector::from_messages(
        pirappor.message_universe(),
        (0..config.num_users).map(|_| rng.random_range(0..pirappor.message_universe())),
    )?;

    let rows = vec![
        BenchRow {
            decoder: "pg-dp".into(),
            median_ns: median_time(|| {
                pg.decode_dp(&pg_counts).expect("benchmark decode");
            }),
        },
        BenchRow {
            decoder: "pg-naive".into(),
            median_ns: median_time(|| {
                pg.decode_naive(&pg_counts).expect("benchmark decode");
            }),
        },
        BenchRow {
            decoder: "hpg".into(),
            median_ns: median_time(|| {
                hpg.decode(&hpg_counts).expect("benchmark decode");
            }),
        },
        BenchRow {
            decoder: "pirappor-dp".into(),
            median_ns: median_time(|| {
                pirappor.decode_dp(&pr_counts).expect("benchmark decode");
            }),
        },
    ];
    Ok(rows)
}

/// Median wall-clock duration of five runs, in nanoseconds.
fn median_time<F: FnMut()>(mut body: F) -> u64 {
    let mut samples: Vec<u64> = (0..5)
        .map(|_| {
            let start = Instant::now();
            body();
            start.elapsed().as_nanos() as u64
        })
        .collect();
    samples.sort_unstable();
    samples[2]
}

/// CSV with the exact header `trial,mse,linf,encode_ns,decode_ns`.
pub fn results_to_csv(results: &[TrialResult]) -> String {
    let mut out = String::from("trial,mse,linf,encode_ns,decode_ns\n");
    for r in results {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.trial, r.mse, r.linf, r.encode_ns, r.decode_ns
        ));
    }
    out
}

/// CSV with the exact header `epsilon,mean_mse`.
pub fn sweep_to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("epsilon,mean_mse\n");
    for r in rows {
        out.push_str(&format!("{},{}\n", r.epsilon, r.mean_mse));
    }
    out
}

/// CSV with the exact header `decoder,median_ns`.
pub fn bench_to_csv(rows: &[BenchRow]) -> String {
    let mut out = String::from("decoder,median_ns\n");
    for r in rows {
        out.push_str(&format!("{},{}\n", r.decoder, r.median_ns));
    }
    out
}

/// JSON mirror of the CSV rows: an array of objects.
pub fn to_json<T: Serialize>(rows: &[T]) -> String {
    serde_json::to_string_pretty(rows).expect("rows serialize")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fano_config() -> ExperimentConfig {
        let mut c = ExperimentConfig::new(MechanismKind::Pg, 2f64.ln(), 7, 200);
        c.q = Some(2);
        c.t = Some(3);
        c.trials = 20;
        c.seed = 42;
        c
    }

    #[test]
    fn spike_inputs_are_all_zero() {
        let config = ExperimentConfig::new(MechanismKind::Pg, 1.0, 10, 5);
        let mut rng = seeding::stream(&[1]);
        assert_eq!(generate_inputs(&config, &mut rng), vec![0, 0, 0, 0, 0]);
    }

    #[test]
    fn zipf_zero_is_uniform() {
        let mut config = ExperimentConfig::new(MechanismKind::Pg, 1.0, 4, 100_000);
        config.distribution = Distribution::Zipf(0.0);
        let mut rng = seeding::stream(&[2]);
        let inputs = generate_inputs(&config, &mut rng);
        let mut counts = [0u64; 4];
        for v in inputs {
            counts[v as usize] += 1;
        }
        let sigma = (0.25f64 * 0.75 / 100_000.0).sqrt();
        for &c in &counts {
            let freq = c as f64 / 100_000.0;
            assert!((freq - 0.25).abs() < 5.0 * sigma, "freq {freq}");
        }
    }

    #[test]
    fn zipf_ratio_matches_power_law() {
        let mut config = ExperimentConfig::new(MechanismKind::Pg, 1.0, 100, 200_000);
        config.distribution = Distribution::Zipf(3.0);
        let mut rng = seeding::stream(&[3]);
        let inputs = generate_inputs(&config, &mut rng);
        let mut counts = vec![0u64; 100];
        for v in inputs {
            counts[v as usize] += 1;
        }
        // P(0)/P(1) = 2^3; compare via the frequency ratio with a generous
        // band from the delta method (5 sigma on each frequency).
        let f0 = counts[0] as f64 / 200_000.0;
        let f1 = counts[1] as f64 / 200_000.0;
        let ratio = f0 / f1;
        let sigma0 = (f0 * (1.0 - f0) / 200_000.0).sqrt() / f1;
        let sigma1 = f0 * (f1 * (1.0 - f1) / 200_000.0).sqrt() / (f1 * f1);
        let sigma = (sigma0 * sigma0 + sigma1 * sigma1).sqrt();
        assert!((ratio - 8.0).abs() < 5.0 * sigma, "ratio {ratio}");
    }

    #[test]
    fn distribution_and_mechanism_parsing() {
        assert_eq!("spike".parse::<Distribution>().unwrap(), Distribution::Spike);
        assert_eq!(
            "zipf:3.0".parse::<Distribution>().unwrap(),
            Distribution::Zipf(3.0)
        );
        assert_eq!(
            "zipf(0.1)".parse::<Distribution>().unwrap(),
            Distribution::Zipf(0.1)
        );
        assert!("flat".parse::<Distribution>().is_err());
        assert_eq!(
            "pirappor".parse::<MechanismKind>().unwrap(),
            MechanismKind::PiRappor
        );
        assert_eq!(
            "hpg-pub".parse::<MechanismKind>().unwrap(),
            MechanismKind::HpgPub
        );
        assert!("pgx".parse::<MechanismKind>().is_err());
        assert_eq!(
            MechanismKind::Pg.public_coin().unwrap(),
            MechanismKind::PgPub
        );
        assert!(MechanismKind::Rr.public_coin().is_err());
    }

    #[test]
    fn run_trials_is_deterministic_and_thread_invariant() {
        let config = fano_config();
        let a = run_trials(&config).unwrap();
        let b = run_trials(&config).unwrap();
        assert_eq!(a.len(), 20);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.mse, y.mse);
            assert_eq!(x.linf, y.linf);
        }
        let mut threaded = config.clone();
        threaded.threads = 4;
        let c = run_trials(&threaded).unwrap();
        let mut single = config.clone();
        single.threads = 1;
        let d = run_trials(&single).unwrap();
        for ((x, y), z) in a.iter().zip(&c).zip(&d) {
            assert_eq!(x.mse, y.mse);
            assert_eq!(x.mse, z.mse);
        }
    }

    #[test]
    fn every_mechanism_runs_end_to_end() {
        for mech in [
            MechanismKind::Pg,
            MechanismKind::Hpg,
            MechanismKind::PiRappor,
            MechanismKind::Rr,
            MechanismKind::Ss,
            MechanismKind::PgPub,
            MechanismKind::HpgPub,
        ] {
            let mut config = ExperimentConfig::new(mech, 5f64.ln(), 8, 400);
            config.trials = 3;
            config.seed = 9;
            config.distribution = Distribution::Zipf(1.0);
            if matches!(mech, MechanismKind::Hpg | MechanismKind::HpgPub) {
                config.q = Some(2);
                config.t = Some(3);
                config.h = Some(2);
            }
            let results = run_trials(&config).unwrap();
            assert_eq!(results.len(), 3, "{mech}");
            for r in &results {
                assert!(r.mse.is_finite());
                assert!(r.linf >= 0.0);
            }
        }
    }

    #[test]
    fn spike_mse_stays_under_variance_bound() {
        let mut config = fano_config();
        config.trials = 100;
        config.num_users = 500;
        let results = run_trials(&config).unwrap();
        let mean_mse = results.iter().map(|r| r.mse).sum::<f64>() / results.len() as f64;
        let params = PgParams::with_geometry(2f64.ln(), 7, 2, 3).unwrap();
        assert!(mean_mse <= params.variance_bound(500) * 1.15);
    }

    #[test]
    fn cdf_rows_are_sorted_and_cover_percentiles() {
        let single = vec![TrialResult {
            trial: 0,
            mse: 2.5,
            linf: 1.0,
            encode_ns: 1,
            decode_ns: 1,
        }];
        let cdf = emit_cdf(&single);
        assert_eq!(cdf.len(), 1);
        assert_eq!(cdf[0].percentile, 100.0);
        assert_eq!(cdf[0].mse, 2.5);

        let config = fano_config();
        let results = run_trials(&config).unwrap();
        let cdf = emit_cdf(&results);
        assert_eq!(cdf.len(), results.len());
        for pair in cdf.windows(2) {
            assert!(pair[0].percentile < pair[1].percentile);
            assert!(pair[0].mse <= pair[1].mse);
        }

        let flat = vec![
            TrialResult {
                trial: 0,
                mse: 1.0,
                linf: 0.0,
                encode_ns: 0,
                decode_ns: 0
            };
            300
        ];
        let cdf = emit_cdf(&flat);
        assert!(cdf.iter().all(|row| row.mse == 1.0));
    }

    #[test]
    fn sweep_decreases_with_epsilon_and_handles_empty() {
        let mut config = ExperimentConfig::new(MechanismKind::Pg, 1.0, 40, 2_000);
        config.trials = 10;
        config.seed = 7;
        let rows = sweep_epsilon(&config, &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(rows.len(), 3);
        assert!(rows[0].mean_mse > rows[1].mean_mse);
        assert!(rows[1].mean_mse > rows[2].mean_mse);

        assert!(sweep_epsilon(&config, &[]).unwrap().is_empty());
    }

    #[test]
    fn rr_to_pg_error_ratio_grows_with_k() {
        let ratio_at = |k: u64| {
            let mut pg = ExperimentConfig::new(MechanismKind::Pg, 5f64.ln(), k, 2_000);
            pg.trials = 30;
            pg.seed = 11;
            let mut rr = pg.clone();
            rr.mechanism = MechanismKind::Rr;
            let pg_mse = run_trials(&pg)
                .unwrap()
                .iter()
                .map(|r| r.mse)
                .sum::<f64>()
                / 30.0;
            let rr_mse = run_trials(&rr)
                .unwrap()
                .iter()
                .map(|r| r.mse)
                .sum::<f64>()
                / 30.0;
            rr_mse / pg_mse
        };
        assert!(ratio_at(121) > ratio_at(12));
    }

    #[test]
    fn bench_reports_all_decoders() {
        let mut config = ExperimentConfig::new(MechanismKind::Pg, 5f64.ln(), 40, 500);
        config.seed = 3;
        config.hpg_q = Some(2);
        let rows = bench_decode(&config).unwrap();
        let names: Vec<&str> = rows.iter().map(|r| r.decoder.as_str()).collect();
        assert_eq!(names, ["pg-dp", "pg-naive", "hpg", "pirappor-dp"]);
        assert!(rows.iter().all(|r| r.median_ns > 0));
    }

    #[test]
    fn decode_time_is_data_oblivious() {
        let params = PgParams::with_geometry(3.0, 12_000, 23, 4).unwrap();
        let k = params.geometry().num_points();
        let mut rng = seeding::stream(&[77]);
        let a = CountVector::from_messages(k, (0..20_000).map(|_| rng.random_range(0..k)))
            .unwrap();
        let spike = CountVector::from_messages(k, std::iter::repeat_n(0u64, 20_000)).unwrap();
        let ta = median_time(|| {
            params.decode_dp(&a).unwrap();
        });
        let tb = median_time(|| {
            params.decode_dp(&spike).unwrap();
        });
        let ratio = ta.max(tb) as f64 / ta.min(tb) as f64;
        assert!(ratio < 1.2, "decode times diverge: {ta} vs {tb}");
    }

    #[test]
    fn csv_headers_are_exact() {
        assert!(results_to_csv(&[]).starts_with("trial,mse,linf,encode_ns,decode_ns\n"));
        assert!(sweep_to_csv(&[]).starts_with("epsilon,mean_mse\n"));
        assert!(bench_to_csv(&[]).starts_with("decoder,median_ns\n"));

        let rows = vec![TrialResult {
            trial: 1,
            mse: 0.5,
            linf: 2.0,
            encode_ns: 10,
            decode_ns: 20,
        }];
        let csv = results_to_csv(&rows);
        assert!(csv.contains("1,0.5,2,10,20"));
        let json = to_json(&rows);
        assert!(json.contains("\"trial\": 1"));
        assert!(json.contains("\"mse\": 0.5"));
    }

    #[test]
    fn config_validation_rejects_bad_fields() {
        let mut config = ExperimentConfig::new(MechanismKind::Pg, 0.0, 7, 10);
        assert!(config.validate().is_err());
        config.epsilon = 1.0;
        config.trials = 0;
        assert!(config.validate().is_err());
        config.trials = 1;
        config.distribution = Distribution::Zipf(-1.0);
        assert!(config.validate().is_err());
        config.distribution = Distribution::Spike;
        assert!(config.validate().is_ok());
    }
}
