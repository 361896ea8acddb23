//! Per-evaluation metrics records and their CSV form.
//!
//! The CSV schema is fixed: one header row, one record per line, columns
//! in a stable order. Floats are written in Rust's shortest round-trip
//! form, so `parse(emit(x)) = x` holds exactly and repeated runs diff
//! byte for byte. Optional columns (losses before any training, behavior
//! log-likelihoods when untracked) are empty strings. Wall-clock timing
//! is deliberately kept out of the file; it goes to the console instead.

use std::fs;
use std::path::Path;

use super::HarnessError;

pub const CSV_HEADER: &str = "epoch,env_steps,grad_steps,eval_return_mean,eval_return_min,eval_return_max,success_rate,critic_loss,actor_loss,policy_entropy,behavior_loglik_full,behavior_loglik_recent";

/// One evaluation point of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRecord {
    pub epoch: u64,
    pub env_steps: u64,
    pub grad_steps: u64,
    pub eval_return_mean: f64,
    pub eval_return_min: f64,
    pub eval_return_max: f64,
    /// Fraction of evaluation episodes that reached task success.
    pub success_rate: f64,
    /// Mean losses over the window since the previous record; absent when
    /// no gradient step ran in the window.
    pub critic_loss: Option<f64>,
    pub actor_loss: Option<f64>,
    pub policy_entropy: f64,
    pub behavior_loglik_full: Option<f64>,
    pub behavior_loglik_recent: Option<f64>,
}

fn opt_to_field(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x}"),
        None => String::new(),
    }
}

fn field_to_opt(s: &str, line: usize, col: &str) -> Result<Option<f64>, HarnessError> {
    if s.is_empty() {
        return Ok(None);
    }
    s.parse::<f64>().map(Some).map_err(|_| HarnessError::MetricsParse {
        line,
        msg: format!("column {col}: {s:?} is not a float"),
    })
}

impl MetricsRecord {
    pub fn to_csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            self.epoch,
            self.env_steps,
            self.grad_steps,
            self.eval_return_mean,
            self.eval_return_min,
            self.eval_return_max,
            self.success_rate,
            opt_to_field(self.critic_loss),
            opt_to_field(self.actor_loss),
            self.policy_entropy,
            opt_to_field(self.behavior_loglik_full),
            opt_to_field(self.behavior_loglik_recent),
        )
    }

    pub fn from_csv_line(line_text: &str, line: usize) -> Result<Self, HarnessError> {
        let parts: Vec<&str> = line_text.split(',').collect();
        if parts.len() != 12 {
            return Err(HarnessError::MetricsParse {
                line,
                msg: format!("expected 12 columns, got {}", parts.len()),
            });
        }
        let int = |s: &str, col: &str| -> Result<u64, HarnessError> {
            s.parse().map_err(|_| HarnessError::MetricsParse {
                line,
                msg: format!("column {col}: {s:?} is not an integer"),
            })
        };
        let float = |s: &str, col: &str| -> Result<f64, HarnessError> {
            s.parse().map_err(|_| HarnessError::MetricsParse {
                line,
                msg: format!("column {col}: {s:?} is not a float"),
            })
        };
        Ok(MetricsRecord {
            epoch: int(parts[0], "epoch")?,
            env_steps: int(parts[1], "env_steps")?,
            grad_steps: int(parts[2], "grad_steps")?,
            eval_return_mean: float(parts[3], "eval_return_mean")?,
            eval_return_min: float(parts[4], "eval_return_min")?,
            eval_return_max: float(parts[5], "eval_return_max")?,
            success_rate: float(parts[6], "success_rate")?,
            critic_loss: field_to_opt(parts[7], line, "critic_loss")?,
            actor_loss: field_to_opt(parts[8], line, "actor_loss")?,
            policy_entropy: float(parts[9], "policy_entropy")?,
            behavior_loglik_full: field_to_opt(parts[10], line, "behavior_loglik_full")?,
            behavior_loglik_recent: field_to_opt(parts[11], line, "behavior_loglik_recent")?,
        })
    }
}

/// A full run's records plus its failure marker, if the run aborted.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricsSeries {
    pub records: Vec<MetricsRecord>,
    pub failure: Option<String>,
}

impl MetricsSeries {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.records {
            out.push_str(&r.to_csv_line());
            out.push('\n');
        }
        if let Some(msg) = &self.failure {
            out.push_str(&format!("# failed: {msg}\n"));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self, HarnessError> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h == CSV_HEADER => {}
            Some((_, h)) => {
                return Err(HarnessError::MetricsParse {
                    line: 1,
                    msg: format!("unexpected header {h:?}"),
                })
            }
            None => return Err(HarnessError::MetricsParse { line: 1, msg: "empty file".into() }),
        }
        let mut series = MetricsSeries::default();
        for (i, line_text) in lines {
            if line_text.is_empty() {
                continue;
            }
            if let Some(rest) = line_text.strip_prefix("# failed: ") {
                series.failure = Some(rest.to_string());
                continue;
            }
            series.records.push(MetricsRecord::from_csv_line(line_text, i + 1)?);
        }
        // Records must advance monotonically in environment steps.
        for w in series.records.windows(2) {
            if w[1].env_steps < w[0].env_steps {
                return Err(HarnessError::MetricsParse {
                    line: 0,
                    msg: format!(
                        "env_steps regressed from {} to {}",
                        w[0].env_steps, w[1].env_steps
                    ),
                });
            }
        }
        Ok(series)
    }

    pub fn save(&self, path: &Path) -> Result<(), HarnessError> {
        fs::write(path, self.to_csv())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        MetricsSeries::from_csv(&fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(epoch: u64) -> MetricsRecord {
        MetricsRecord {
            epoch,
            env_steps: epoch * 500,
            grad_steps: epoch * 500 + 1000,
            eval_return_mean: -12.25 + epoch as f64 * 0.1,
            eval_return_min: -50.0,
            eval_return_max: -3.0000000001,
            success_rate: 0.7,
            critic_loss: Some(0.031415926535897934),
            actor_loss: Some(1.5e-7),
            policy_entropy: -2.5,
            behavior_loglik_full: None,
            behavior_loglik_recent: None,
        }
    }

    #[test]
    fn csv_round_trip_is_identity() {
        let mut series = MetricsSeries::default();
        series.records.push(record(0));
        series.records.push(record(1));
        series.records[1].behavior_loglik_full = Some(-1.23456789012345e-3);
        series.records[1].behavior_loglik_recent = Some(4.0);
        let text = series.to_csv();
        let back = MetricsSeries::from_csv(&text).unwrap();
        assert_eq!(back, series);
        assert_eq!(back.to_csv(), text, "re-emission must be byte-identical");
    }

    #[test]
    fn failure_marker_round_trips() {
        let mut series = MetricsSeries::default();
        series.records.push(record(0));
        series.failure = Some("environment fault at step 17".into());
        let back = MetricsSeries::from_csv(&series.to_csv()).unwrap();
        assert_eq!(back.failure.as_deref(), Some("environment fault at step 17"));
        assert_eq!(back.records.len(), 1);
    }

    #[test]
    fn bad_rows_name_line_and_column() {
        let text = format!("{CSV_HEADER}\n1,2,3,oops,0,0,0,,,0,,\n");
        let err = MetricsSeries::from_csv(&text).unwrap_err();
        let msg = format!("{err}");
        assert!(msg.contains("line 2"), "got: {msg}");
        assert!(msg.contains("eval_return_mean"), "got: {msg}");

        let err = MetricsSeries::from_csv("nope\n").unwrap_err();
        assert!(format!("{err}").contains("header"));
    }

    #[test]
    fn regressing_env_steps_are_rejected() {
        let mut a = record(0);
        a.env_steps = 100;
        let mut b = record(1);
        b.env_steps = 50;
        let series = MetricsSeries { records: vec![a, b], failure: None };
        assert!(MetricsSeries::from_csv(&series.to_csv()).is_err());
    }

    #[test]
    fn empty_optional_columns_stay_empty() {
        let mut r = record(0);
        r.critic_loss = None;
        r.actor_loss = None;
        let line = r.to_csv_line();
        assert!(line.contains(",,"), "missing losses must be empty fields: {line}");
        let back = MetricsRecord::from_csv_line(&line, 2).unwrap();
        assert_eq!(back, r);
    }
}
