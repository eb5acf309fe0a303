use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::experiment::{CurvePoint, RunRecord};

/// Spread of one curve across seeds at a checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointStats {
    pub n: usize,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub min: f64,
    pub max: f64,
}

/// `median(R_to) / median(R_from)` for checkpoints with `to = 8 from`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthRatio {
    pub from: usize,
    pub to: usize,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveSummary {
    pub checkpoints: Vec<CheckpointStats>,
    pub sublinearity: Vec<GrowthRatio>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub config_hash: String,
    pub seeds: Vec<u64>,
    pub regret: CurveSummary,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state_regret: Option<CurveSummary>,
    /// Seeds on which each deterministic or high-probability check passed.
    pub pass_counts: BTreeMap<String, usize>,
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct StatRow {
    pub checkpoint: usize,
    pub stat: String,
    pub value: f64,
}

/// Linearly interpolated quantile of sorted data (the "type 7" rule).
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty data");
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn summarize_curves(curves: &[&[CurvePoint]]) -> Result<CurveSummary, CliError> {
    let grid: Vec<usize> = curves[0].iter().map(|p| p.n).collect();
    if curves
        .iter()
        .any(|c| c.iter().map(|p| p.n).ne(grid.iter().copied()))
    {
        return Err(CliError::Config("records disagree on checkpoints".into()));
    }
    let checkpoints: Vec<CheckpointStats> = grid
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let mut v: Vec<f64> = curves.iter().map(|c| c[i].value).collect();
            v.sort_by(f64::total_cmp);
            CheckpointStats {
                n,
                median: quantile(&v, 0.5),
                q1: quantile(&v, 0.25),
                q3: quantile(&v, 0.75),
                min: v[0],
                max: v[v.len() - 1],
            }
        })
        .collect();
    let sublinearity = checkpoints
        .iter()
        .flat_map(|a| {
            checkpoints
                .iter()
                .filter(move |b| b.n == 8 * a.n)
                .map(move |b| GrowthRatio {
                    from: a.n,
                    to: b.n,
                    ratio: b.median / a.median,
                })
        })
        .collect();
    Ok(CurveSummary {
        checkpoints,
        sublinearity,
    })
}

/// Per-checkpoint quantiles across seeds plus pass counts of the diagnostics.
pub fn summarize(records: &[RunRecord]) -> Result<Summary, CliError> {
    let first = records
        .first()
        .ok_or_else(|| CliError::Config("nothing to summarize".into()))?;
    if records.iter().any(|r| r.config_hash != first.config_hash) {
        return Err(CliError::Config(
            "records come from different configs".into(),
        ));
    }
    let regret = summarize_curves(
        &records
            .iter()
            .map(|r| r.regret_curve.as_slice())
            .collect::<Vec<_>>(),
    )?;
    let state_curves: Option<Vec<&[CurvePoint]>> = records
        .iter()
        .map(|r| r.state_regret_curve.as_deref())
        .collect();
    let state_regret = state_curves.map(|c| summarize_curves(&c)).transpose()?;

    let mut pass_counts = BTreeMap::new();
    let mut count = |name: &str, flag: &dyn Fn(&RunRecord) -> Option<bool>| {
        let flags: Vec<bool> = records.iter().filter_map(flag).collect();
        if !flags.is_empty() {
            pass_counts.insert(name.to_string(), flags.iter().filter(|&&f| f).count());
        }
    };
    count("regret_identity", &|r| Some(r.regret.identity_holds()));
    count("logdet", &|r| r.diagnostics.logdet_all_pass);
    count("arma", &|r| r.diagnostics.arma.as_ref().map(|a| a.pass));
    count("pe", &|r| r.diagnostics.pe.as_ref().map(|p| p.pass));
    count("whiteness", &|r| {
        r.diagnostics.whiteness.as_ref().map(|w| w.pass)
    });
    count("fir_in_class", &|r| {
        r.diagnostics
            .alternative_regret
            .as_ref()
            .map(|a| a.in_class)
    });

    Ok(Summary {
        config_hash: first.config_hash.clone(),
        seeds: records.iter().map(|r| r.seed).collect(),
        regret,
        state_regret,
        pass_counts,
    })
}

impl Summary {
    /// Rows `(checkpoint_N, stat, value)`; growth ratios sit on the later checkpoint.
    pub fn rows(&self) -> Vec<StatRow> {
        let mut rows = Vec::new();
        let mut push = |prefix: &str, curve: &CurveSummary| {
            for c in &curve.checkpoints {
                for (name, value) in [
                    ("median", c.median),
                    ("q1", c.q1),
                    ("q3", c.q3),
                    ("min", c.min),
                    ("max", c.max),
                ] {
                    rows.push(StatRow {
                        checkpoint: c.n,
                        stat: format!("{prefix}_{name}"),
                        value,
                    });
                }
            }
            for g in &curve.sublinearity {
                rows.push(StatRow {
                    checkpoint: g.to,
                    stat: format!("{prefix}_ratio_vs_{}", g.from),
                    value: g.ratio,
                });
            }
        };
        push("regret", &self.regret);
        if let Some(s) = &self.state_regret {
            push("state_regret", s);
        }
        rows
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("checkpoint_N,stat,value\n");
        for row in self.rows() {
            writeln!(out, "{},{},{}", row.checkpoint, row.stat, row.value).expect("string write");
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantile_matches_sorted_list_oracle() {
        let data: Vec<f64> = (0..101).map(|i| ((i * 37) % 101) as f64 * 0.5).collect();
        let mut sorted = data.clone();
        sorted.sort_by(f64::total_cmp);
        // With 101 points, type-7 quartiles land exactly on ranks 25, 50, 75.
        assert_eq!(quantile(&sorted, 0.25), sorted[25]);
        assert_eq!(quantile(&sorted, 0.5), sorted[50]);
        assert_eq!(quantile(&sorted, 0.75), sorted[75]);
        assert_eq!(quantile(&[1.0, 2.0], 0.5), 1.5);
        assert_eq!(quantile(&[7.0], 0.25), 7.0);
    }
}
