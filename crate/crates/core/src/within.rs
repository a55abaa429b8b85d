//! Sample restrictions and the player-level within transformation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::design::DesignPanel;
use crate::error::{Error, Result};
use crate::linalg::RowMatrix;

/// Which structural outcome a regression explains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    /// Hours until the player's next match.
    Engagement,
    /// The player's own behaviour in the current match.
    Propagation,
}

impl Outcome {
    pub fn label(self) -> &'static str {
        match self {
            Outcome::Engagement => "time_to_next_match",
            Outcome::Propagation => "uses_toxic_language",
        }
    }

    pub fn units(self) -> &'static str {
        match self {
            Outcome::Engagement => "hours",
            Outcome::Propagation => "probability",
        }
    }

    pub fn parse(raw: &str) -> Result<Self> {
        match raw.to_ascii_lowercase().as_str() {
            "engagement" | "time_to_next_match" => Ok(Outcome::Engagement),
            "propagation" | "uses_toxic_language" => Ok(Outcome::Propagation),
            _ => Err(Error::Config(format!("unknown outcome `{raw}`"))),
        }
    }
}

/// Row accounting for the restrictions; `rows_in = rows_out + Σ drops`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AttritionReport {
    pub rows_in: usize,
    pub rows_dropped_no_instrument: usize,
    pub rows_dropped_missing_outcome: usize,
    pub rows_dropped_single_match: usize,
    pub rows_out: usize,
}

impl AttritionReport {
    pub fn reconciles(&self) -> bool {
        self.rows_in
            == self.rows_out
                + self.rows_dropped_no_instrument
                + self.rows_dropped_missing_outcome
                + self.rows_dropped_single_match
    }
}

/// Aligned regression columns, rows grouped contiguously by player.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionSample {
    pub outcome: Outcome,
    pub y: Vec<f64>,
    pub x: RowMatrix,
    pub w: RowMatrix,
    pub z: RowMatrix,
    pub groups: Vec<u32>,
    pub x_names: Vec<String>,
    pub w_names: Vec<String>,
    pub z_names: Vec<String>,
    /// Player intercepts swept out by [`demean_by_player`]; zero before.
    pub absorbed: usize,
}

impl RegressionSample {
    pub fn n_obs(&self) -> usize {
        self.y.len()
    }

    pub fn n_groups(&self) -> usize {
        group_bounds(&self.groups).len().saturating_sub(1)
    }
}

/// Start offsets of each contiguous run in `groups`, plus the end.
pub fn group_bounds(groups: &[u32]) -> Vec<usize> {
    let mut bounds = Vec::new();
    for i in 0..groups.len() {
        if i == 0 || groups[i] != groups[i - 1] {
            bounds.push(i);
        }
    }
    bounds.push(groups.len());
    bounds
}

/// Applies, in order: the instrument-availability restriction, the
/// missing-outcome restriction (engagement only) and the two-match
/// restriction. The first two are row-local and computed on the full panel,
/// so a second pass over them after the two-match drop cannot change the
/// sample; one pass is the fixed point.
pub fn apply_sample_restrictions(
    design: &DesignPanel,
    outcome: Outcome,
) -> Result<(RegressionSample, AttritionReport)> {
    let (Some(z), Some(peers)) = (&design.z, &design.contributing_peers) else {
        return Err(Error::Usage("instruments must be attached before restricting".into()));
    };
    let n = design.n_rows();
    let mut report = AttritionReport { rows_in: n, ..Default::default() };

    let mut keep: Vec<usize> = Vec::with_capacity(n);
    for i in 0..n {
        if peers[i] == 0 {
            report.rows_dropped_no_instrument += 1;
        } else if outcome == Outcome::Engagement && design.y_time[i].is_none() {
            report.rows_dropped_missing_outcome += 1;
        } else {
            keep.push(i);
        }
    }

    let mut kept = Vec::with_capacity(keep.len());
    let mut start = 0;
    while start < keep.len() {
        let player = design.players[keep[start]];
        let mut end = start;
        while end < keep.len() && design.players[keep[end]] == player {
            end += 1;
        }
        if end - start >= 2 {
            kept.extend_from_slice(&keep[start..end]);
        } else {
            report.rows_dropped_single_match += end - start;
        }
        start = end;
    }
    report.rows_out = kept.len();
    if kept.is_empty() {
        return Err(Error::EmptySample(format!(
            "no {} rows survive the sample restrictions ({} in)",
            outcome.label(),
            n
        )));
    }

    let y = kept
        .iter()
        .map(|&i| match outcome {
            Outcome::Engagement => design.y_time[i].expect("filtered above"),
            Outcome::Propagation => design.y_behavior[i],
        })
        .collect();
    let sample = RegressionSample {
        outcome,
        y,
        x: design.x.select_rows(&kept),
        w: design.w.select_rows(&kept),
        z: z.select_rows(&kept),
        groups: kept.iter().map(|&i| design.players[i]).collect(),
        x_names: design.x_names.clone(),
        w_names: design.w_names.clone(),
        z_names: design.z_names.clone(),
        absorbed: 0,
    };
    Ok((sample, report))
}

fn split_by_bounds<'a>(mut data: &'a mut [f64], bounds: &[usize], width: usize) -> Vec<&'a mut [f64]> {
    let mut out = Vec::with_capacity(bounds.len().saturating_sub(1));
    for w in bounds.windows(2) {
        let (head, tail) = data.split_at_mut((w[1] - w[0]) * width);
        out.push(head);
        data = tail;
    }
    out
}

/// Subtracts per-group column means from a row-major block in place.
pub fn demean_rows(data: &mut [f64], width: usize, bounds: &[usize]) {
    if width == 0 {
        return;
    }
    split_by_bounds(data, bounds, width)
        .into_par_iter()
        .for_each(|chunk| demean_chunk(chunk, width));
}

fn demean_chunk(chunk: &mut [f64], width: usize) {
    let rows = chunk.len() / width;
    if rows == 0 {
        return;
    }
    for c in 0..width {
        let mean = (0..rows).map(|r| chunk[r * width + c]).sum::<f64>() / rows as f64;
        for r in 0..rows {
            chunk[r * width + c] -= mean;
        }
    }
}

/// Sweeps out player intercepts by demeaning the outcome, regressors and
/// instruments within each player.
pub fn demean_by_player(sample: &mut RegressionSample) {
    let bounds = group_bounds(&sample.groups);
    demean_rows(&mut sample.y, 1, &bounds);
    let kx = sample.x.ncols();
    demean_rows(sample.x.as_mut_slice(), kx, &bounds);
    let kw = sample.w.ncols();
    demean_rows(sample.w.as_mut_slice(), kw, &bounds);
    let kz = sample.z.ncols();
    demean_rows(sample.z.as_mut_slice(), kz, &bounds);
    sample.absorbed = bounds.len() - 1;
}
