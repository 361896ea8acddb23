//! Multi-run comparison reports.
//!
//! Takes per-seed metrics series grouped by algorithm, all from one
//! environment, and tabulates what the learning curves show: median and
//! interquartile return at each cadence point, the offline (step-0)
//! score, env-steps until the success rate first clears a threshold, and
//! the early-fine-tuning dip. Output is a fixed-width text table plus a
//! per-curve CSV; no plotting, any plotter can consume the CSV.

use super::experiment::ALGO_NAMES;
use super::metrics::MetricsSeries;
use super::HarnessError;
use crate::envs::EnvConfig;

/// One run's metrics plus the identity the file system carried for it.
#[derive(Debug, Clone)]
pub struct RunSeries {
    pub algo: String,
    pub env: String,
    pub series: MetricsSeries,
}

/// Recovers (algo, env, seed) from a metrics file name of the form
/// `{algo}-{env}-s{seed}.csv`. Algorithm names may themselves contain
/// dashes, so matching tries the known names longest-first.
pub fn parse_run_filename(name: &str) -> Option<(String, String, u64)> {
    let stem = name.strip_suffix(".csv")?;
    for &algo in ALGO_NAMES {
        let Some(rest) = stem.strip_prefix(algo).and_then(|r| r.strip_prefix('-')) else {
            continue;
        };
        let (env, seed_part) = rest.rsplit_once("-s")?;
        let seed: u64 = seed_part.parse().ok()?;
        if EnvConfig::from_name(env).is_err() {
            return None;
        }
        return Some((algo.to_string(), env.to_string(), seed));
    }
    None
}

/// Linear-interpolation quantile of an ascending-sorted slice.
fn quantile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let h = (n - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn median(values: &mut Vec<f64>) -> f64 {
    values.sort_by(f64::total_cmp);
    quantile(values, 0.5)
}

/// One cadence point of an algorithm's aggregate curve.
#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub env_steps: u64,
    pub ret_median: f64,
    pub ret_q1: f64,
    pub ret_q3: f64,
    pub success_median: f64,
}

#[derive(Debug, Clone)]
pub struct AlgoSummary {
    pub algo: String,
    pub seeds: usize,
    /// Median step-0 (offline-only) evaluation return.
    pub step0_median: f64,
    pub final_median: f64,
    pub final_success_median: f64,
    /// Lower-median over seeds of the first env-step count whose success
    /// rate clears the threshold; `None` when the median seed never does.
    pub steps_to_threshold: Option<u64>,
    /// Median over seeds of (worst early-fine-tuning score / step-0
    /// score), on returns shifted by the episode length so the worst
    /// sparse outcome scores 0. Below 1 means performance dipped after
    /// going online. `None` when undefined (no online records, or a
    /// step-0 score at the scale floor).
    pub dip: Option<f64>,
    pub curve: Vec<CurvePoint>,
}

#[derive(Debug, Clone)]
pub struct ComparisonReport {
    pub env: String,
    pub threshold: f64,
    pub summaries: Vec<AlgoSummary>,
}

/// Fraction of the online span counted as "early" for the dip statistic.
const EARLY_FRACTION: f64 = 0.2;

fn summarize(
    algo: &str,
    seeds: &[&MetricsSeries],
    threshold: f64,
    score_shift: f64,
) -> Result<AlgoSummary, HarnessError> {
    for s in seeds {
        if s.records.is_empty() {
            return Err(HarnessError::Compare(format!(
                "a series for {algo} has no records to aggregate"
            )));
        }
    }

    let mut step0: Vec<f64> = seeds.iter().map(|s| s.records[0].eval_return_mean).collect();
    let mut finals: Vec<f64> =
        seeds.iter().map(|s| s.records.last().unwrap().eval_return_mean).collect();
    let mut final_succ: Vec<f64> =
        seeds.iter().map(|s| s.records.last().unwrap().success_rate).collect();

    // First env-step count whose success rate clears the threshold, per
    // seed; never-reaching seeds sort last so the lower median is taken
    // over actual crossings only when most seeds cross.
    let mut crossings: Vec<Option<u64>> = seeds
        .iter()
        .map(|s| {
            s.records.iter().find(|r| r.success_rate >= threshold).map(|r| r.env_steps)
        })
        .collect();
    crossings.sort_by_key(|c| (c.is_none(), c.unwrap_or(u64::MAX)));
    let steps_to_threshold = crossings[(crossings.len() - 1) / 2];

    let mut dips: Vec<f64> = Vec::new();
    for s in seeds {
        let first = &s.records[0];
        if first.env_steps != 0 {
            continue;
        }
        let step0_score = first.eval_return_mean + score_shift;
        let last_steps = s.records.last().unwrap().env_steps;
        let early_cut = (last_steps as f64 * EARLY_FRACTION).ceil() as u64;
        let early_worst = s
            .records
            .iter()
            .filter(|r| r.env_steps > 0 && r.env_steps <= early_cut)
            .map(|r| (r.eval_return_mean + score_shift).max(0.0))
            .fold(f64::INFINITY, f64::min);
        if early_worst.is_finite() && step0_score > 1e-9 {
            dips.push(early_worst / step0_score);
        }
    }
    let dip = (!dips.is_empty()).then(|| median(&mut dips));

    // Aggregate curve over the cadence points every seed shares.
    let mut shared: Vec<u64> = seeds[0].records.iter().map(|r| r.env_steps).collect();
    for s in &seeds[1..] {
        let have: Vec<u64> = s.records.iter().map(|r| r.env_steps).collect();
        shared.retain(|step| have.contains(step));
    }
    let mut curve = Vec::with_capacity(shared.len());
    for step in shared {
        let mut rets: Vec<f64> = Vec::with_capacity(seeds.len());
        let mut succ: Vec<f64> = Vec::with_capacity(seeds.len());
        for s in seeds {
            let r = s.records.iter().find(|r| r.env_steps == step).unwrap();
            rets.push(r.eval_return_mean);
            succ.push(r.success_rate);
        }
        rets.sort_by(f64::total_cmp);
        succ.sort_by(f64::total_cmp);
        curve.push(CurvePoint {
            env_steps: step,
            ret_median: quantile(&rets, 0.5),
            ret_q1: quantile(&rets, 0.25),
            ret_q3: quantile(&rets, 0.75),
            success_median: quantile(&succ, 0.5),
        });
    }

    Ok(AlgoSummary {
        algo: algo.to_string(),
        seeds: seeds.len(),
        step0_median: median(&mut step0),
        final_median: median(&mut finals),
        final_success_median: median(&mut final_succ),
        steps_to_threshold,
        dip,
        curve,
    })
}

/// Aggregates runs into per-algorithm summaries. All runs must come from
/// the same environment; algorithms keep their first-appearance order.
pub fn compare(runs: &[RunSeries], threshold: f64) -> Result<ComparisonReport, HarnessError> {
    if runs.is_empty() {
        return Err(HarnessError::Compare("no metric series to compare".into()));
    }
    let env = runs[0].env.clone();
    for r in runs {
        if r.env != env {
            return Err(HarnessError::Compare(format!(
                "mismatched environments: {env:?} vs {:?}",
                r.env
            )));
        }
    }
    // The dip statistic scores returns shifted by the episode length, so
    // the all-failures sparse return maps to zero.
    let score_shift = EnvConfig::from_name(&env)?.build(0)?.max_episode_len() as f64;

    let mut order: Vec<&str> = Vec::new();
    for r in runs {
        if !order.contains(&r.algo.as_str()) {
            order.push(&r.algo);
        }
    }
    let mut summaries = Vec::with_capacity(order.len());
    for algo in order {
        let seeds: Vec<&MetricsSeries> =
            runs.iter().filter(|r| r.algo == algo).map(|r| &r.series).collect();
        summaries.push(summarize(algo, &seeds, threshold, score_shift)?);
    }
    Ok(ComparisonReport { env, threshold, summaries })
}

impl ComparisonReport {
    /// Fixed-width text table, one row per algorithm.
    pub fn to_table(&self) -> String {
        let mut out = format!(
            "environment: {}    success threshold: {}\n{:<16} {:>5} {:>11} {:>11} {:>11} {:>13} {:>7}\n",
            self.env, self.threshold, "algo", "seeds", "step0_ret", "final_ret", "final_succ",
            "steps_to_thr", "dip",
        );
        for s in &self.summaries {
            let steps = match s.steps_to_threshold {
                Some(v) => v.to_string(),
                None => "never".to_string(),
            };
            let dip = match s.dip {
                Some(v) => format!("{v:.3}"),
                None => "-".to_string(),
            };
            out.push_str(&format!(
                "{:<16} {:>5} {:>11.3} {:>11.3} {:>11.3} {:>13} {:>7}\n",
                s.algo, s.seeds, s.step0_median, s.final_median, s.final_success_median, steps, dip,
            ));
        }
        out
    }

    /// Per-curve CSV: every algorithm's aggregate learning curve, long
    /// form, ready for any plotting tool.
    pub fn curves_csv(&self) -> String {
        let mut out =
            String::from("algo,env_steps,return_median,return_q1,return_q3,success_median\n");
        for s in &self.summaries {
            for p in &s.curve {
                out.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    s.algo, p.env_steps, p.ret_median, p.ret_q1, p.ret_q3, p.success_median,
                ));
            }
        }
        out
    }
}
