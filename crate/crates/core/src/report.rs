//! Regression tables, marginal effects and priority rankings.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::estimator::{EstimationResult, Estimator};
use crate::within::Outcome;

/// Exogenous covariate names; everything else is an exposure regressor.
const EXOGENOUS: [&str; 2] = ["win", "player_in_party"];
const INTERACTION_SUFFIX: &str = "_x_win";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TableFormat {
    #[default]
    Text,
    Json,
    Csv,
}

impl TableFormat {
    pub fn parse(raw: &str) -> Result<Self> {
        match raw.to_ascii_lowercase().as_str() {
            "text" | "txt" => Ok(TableFormat::Text),
            "json" => Ok(TableFormat::Json),
            "csv" => Ok(TableFormat::Csv),
            _ => Err(Error::Config(format!("unknown table format `{raw}`"))),
        }
    }
}

pub fn stars(p: f64) -> &'static str {
    if p < 0.01 {
        "***"
    } else if p < 0.05 {
        "**"
    } else if p < 0.1 {
        "*"
    } else {
        ""
    }
}

/// Five significant digits, at most four decimals.
pub fn format_coef(v: f64) -> String {
    if !v.is_finite() {
        return v.to_string();
    }
    let decimals = if v == 0.0 {
        4
    } else {
        (4 - v.abs().log10().floor() as i64).clamp(0, 4) as usize
    };
    let s = format!("{v:.decimals$}");
    // "-0.0000" reads as a sign error in a table.
    if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
        s[1..].to_string()
    } else {
        s
    }
}

/// One decimal with thousands separators.
pub fn format_stat(v: f64) -> String {
    if !v.is_finite() {
        return v.to_string();
    }
    let s = format!("{:.1}", v.abs());
    let (int, frac) = s.split_once('.').expect("one decimal");
    let mut grouped = String::new();
    for (i, c) in int.chars().enumerate() {
        if i > 0 && (int.len() - i) % 3 == 0 {
            grouped.push(',');
        }
        grouped.push(c);
    }
    format!("{}{grouped}.{frac}", if v < 0.0 { "-" } else { "" })
}

/// Human-readable regressor label.
pub fn display_label(name: &str) -> String {
    let (base, interaction) = match name.strip_suffix(INTERACTION_SUFFIX) {
        Some(b) => (b, true),
        None => (name, false),
    };
    let mut label: String = base
        .split('_')
        .enumerate()
        .map(|(i, w)| {
            if i == 0 {
                let mut c = w.chars();
                c.next().map(|f| f.to_uppercase().chain(c).collect()).unwrap_or_default()
            } else {
                w.to_string()
            }
        })
        .collect::<Vec<String>>()
        .join(" ");
    if interaction {
        label.push_str(" × Win");
    }
    label
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableCell {
    pub term: String,
    pub estimate: f64,
    pub std_error: f64,
    pub p_value: f64,
    pub stars: String,
    /// Printed estimate with stars, e.g. `60.683***`.
    pub display: String,
    /// Printed standard error, e.g. `(9.4202)`.
    pub display_se: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FirstStageSummary {
    pub endogenous: String,
    pub f_stat: f64,
    pub capped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableColumn {
    pub label: String,
    pub estimator: Estimator,
    pub outcome: Option<String>,
    pub units: Option<String>,
    pub cells: Vec<TableCell>,
    pub model_f: Option<f64>,
    pub n_obs: usize,
    pub n_players: usize,
    pub first_stage: Vec<FirstStageSummary>,
}

fn table_column(label: &str, r: &EstimationResult) -> TableColumn {
    let cells = r
        .names
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let st = stars(r.p_values[i]);
            TableCell {
                term: name.clone(),
                estimate: r.beta[i],
                std_error: r.se[i],
                p_value: r.p_values[i],
                stars: st.to_string(),
                display: format!("{}{st}", format_coef(r.beta[i])),
                display_se: format!("({})", format_coef(r.se[i])),
            }
        })
        .collect();
    TableColumn {
        label: label.to_string(),
        estimator: r.estimator,
        outcome: r.outcome.clone(),
        units: r.units.clone(),
        cells,
        model_f: r.model_f,
        n_obs: r.n_obs,
        n_players: r.n_players,
        first_stage: r
            .first_stage
            .iter()
            .map(|f| FirstStageSummary { endogenous: f.endogenous.clone(), f_stat: f.f_stat, capped: f.f_capped })
            .collect(),
    }
}

/// Renders one table with a column per result and a row per regressor.
pub fn render_regression_table(columns: &[(&str, &EstimationResult)], format: TableFormat) -> String {
    let cols: Vec<TableColumn> = columns.iter().map(|(l, r)| table_column(l, r)).collect();
    match format {
        TableFormat::Json => {
            serde_json::to_string_pretty(&serde_json::json!({ "columns": cols })).expect("serializable")
        }
        TableFormat::Csv => {
            let mut s = String::from("column,term,estimate,std_error,p_value,stars,display,display_se\n");
            for c in &cols {
                for cell in &c.cells {
                    s.push_str(&format!(
                        "{},{},{},{},{},{},{},{}\n",
                        c.label, cell.term, cell.estimate, cell.std_error, cell.p_value, cell.stars, cell.display, cell.display_se
                    ));
                }
            }
            s
        }
        TableFormat::Text => render_text(&cols),
    }
}

fn render_text(cols: &[TableColumn]) -> String {
    let mut terms: Vec<&str> = Vec::new();
    for c in cols {
        for cell in &c.cells {
            if !terms.contains(&cell.term.as_str()) {
                terms.push(&cell.term);
            }
        }
    }
    let mut lines: Vec<(String, Vec<String>)> = Vec::new();
    lines.push((String::new(), cols.iter().map(|c| c.label.clone()).collect()));
    lines.push(("-".into(), Vec::new()));
    for term in &terms {
        let mut est = Vec::new();
        let mut se = Vec::new();
        for c in cols {
            match c.cells.iter().find(|x| x.term == *term) {
                Some(cell) => {
                    est.push(cell.display.clone());
                    se.push(cell.display_se.clone());
                }
                None => {
                    est.push(String::new());
                    se.push(String::new());
                }
            }
        }
        lines.push((display_label(term), est));
        lines.push((String::new(), se));
    }
    lines.push(("-".into(), Vec::new()));
    lines.push((
        "F Statistic".into(),
        cols.iter().map(|c| c.model_f.map(format_stat).unwrap_or_default()).collect(),
    ));
    lines.push(("Observations".into(), cols.iter().map(|c| c.n_obs.to_string()).collect()));
    lines.push(("Players".into(), cols.iter().map(|c| c.n_players.to_string()).collect()));
    lines.push(("-".into(), Vec::new()));

    let label_w = lines.iter().map(|(l, _)| l.chars().count()).max().unwrap_or(0).max(12);
    let col_w = lines
        .iter()
        .flat_map(|(_, v)| v.iter().map(|s| s.chars().count()))
        .max()
        .unwrap_or(0)
        .max(12);
    let total = label_w + cols.len() * (col_w + 2);
    let mut out = String::new();
    for (label, values) in &lines {
        if label == "-" && values.is_empty() {
            out.push_str(&"-".repeat(total));
            out.push('\n');
            continue;
        }
        out.push_str(&format!("{label:<label_w$}"));
        for v in values {
            out.push_str(&format!("  {v:>col_w$}"));
        }
        out.push('\n');
    }
    out.push_str("Note: *p<0.1; **p<0.05; ***p<0.01\n");
    out
}

/// First-stage F statistics, one row per (column, endogenous regressor).
pub fn render_first_stage_table(columns: &[(&str, &EstimationResult)]) -> String {
    let mut s = String::from("column,endogenous,f_stat,df_num,df_denom,capped\n");
    for (label, r) in columns {
        for f in &r.first_stage {
            s.push_str(&format!(
                "{label},{},{},{},{},{}\n",
                f.endogenous, f.f_stat, f.df_num, f.df_denom, f.f_capped
            ));
        }
    }
    s
}

/// Effect of one more toxic co-player in a context, after a loss and after
/// a win.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalEffect {
    pub context: String,
    pub outcome: String,
    pub units: String,
    pub loss_effect: f64,
    pub loss_se: f64,
    pub loss_ci95: [f64; 2],
    pub win_effect: f64,
    pub win_se: f64,
    pub win_ci95: [f64; 2],
}

fn t_critical(df: usize) -> f64 {
    StudentsT::new(0.0, 1.0, df.max(1) as f64)
        .expect("valid t distribution")
        .inverse_cdf(0.975)
}

/// Loss effect = base coefficient; win effect = base + interaction, with a
/// delta-method standard error from the coefficient covariance.
pub fn marginal_effects(result: &EstimationResult) -> Result<Vec<MarginalEffect>> {
    let contexts: Vec<&str> = match result.estimator {
        Estimator::Tsls if !result.first_stage.is_empty() => result
            .first_stage
            .iter()
            .map(|f| f.endogenous.as_str())
            .filter(|n| !n.ends_with(INTERACTION_SUFFIX))
            .collect(),
        _ => result
            .names
            .iter()
            .map(String::as_str)
            .filter(|n| !n.ends_with(INTERACTION_SUFFIX) && !EXOGENOUS.contains(n))
            .collect(),
    };
    if contexts.is_empty() {
        return Err(Error::Usage("no exposure regressors in the result".into()));
    }
    let crit = t_critical(result.df_resid);
    let outcome = result.outcome.clone().unwrap_or_else(|| "outcome".into());
    let units = result.units.clone().unwrap_or_default();
    contexts
        .into_iter()
        .map(|c| {
            let b = result.index_of(c).expect("context drawn from names");
            let inter = format!("{c}{INTERACTION_SUFFIX}");
            let i = result
                .index_of(&inter)
                .ok_or_else(|| Error::Usage(format!("missing interaction column `{inter}`")))?;
            let v = &result.vcov;
            let loss = result.beta[b];
            let win = result.beta[b] + result.beta[i];
            let loss_se = v[b][b].max(0.0).sqrt();
            let win_se = (v[b][b] + v[i][i] + 2.0 * v[b][i]).max(0.0).sqrt();
            Ok(MarginalEffect {
                context: c.to_string(),
                outcome: outcome.clone(),
                units: units.clone(),
                loss_effect: loss,
                loss_se,
                loss_ci95: [loss - crit * loss_se, loss + crit * loss_se],
                win_effect: win,
                win_se,
                win_ci95: [win - crit * win_se, win + crit * win_se],
            })
        })
        .collect()
}

pub fn effects_to_csv(effects: &[MarginalEffect]) -> String {
    let mut s = String::from("context,result,outcome,units,estimate,std_error,ci95_low,ci95_high\n");
    for e in effects {
        for (res, est, se, ci) in [
            ("loss", e.loss_effect, e.loss_se, e.loss_ci95),
            ("win", e.win_effect, e.win_se, e.win_ci95),
        ] {
            s.push_str(&format!(
                "{},{res},{},{},{est},{se},{},{}\n",
                e.context, e.outcome, e.units, ci[0], ci[1]
            ));
        }
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedCell {
    pub rank: usize,
    pub context: String,
    /// `loss` or `win`.
    pub result: String,
    pub estimate: f64,
    pub ci95: [f64; 2],
    pub units: String,
}

impl RankedCell {
    pub fn label(&self) -> String {
        format!("{}, {}", self.context, self.result)
    }
}

/// Orders every (context, result) cell of `objective` by descending harm.
/// Ties go to the narrower interval first and otherwise keep input order.
pub fn priority_ranking(effects: &[MarginalEffect], objective: Outcome) -> Result<Vec<RankedCell>> {
    let chosen: Vec<&MarginalEffect> = effects.iter().filter(|e| e.outcome == objective.label()).collect();
    if chosen.is_empty() {
        return Err(Error::Usage(format!("no effects for objective `{}`", objective.label())));
    }
    let mut cells = Vec::with_capacity(2 * chosen.len());
    for (n, e) in chosen.iter().enumerate() {
        if chosen[..n].iter().any(|o| o.context == e.context) {
            return Err(Error::Usage(format!("context `{}` appears more than once", e.context)));
        }
        for (res, est, ci) in [("loss", e.loss_effect, e.loss_ci95), ("win", e.win_effect, e.win_ci95)] {
            if !est.is_finite() {
                return Err(Error::Usage(format!("incomplete coverage: `{}, {res}` has no estimate", e.context)));
            }
            cells.push(RankedCell {
                rank: 0,
                context: e.context.clone(),
                result: res.to_string(),
                estimate: est,
                ci95: ci,
                units: e.units.clone(),
            });
        }
    }
    cells.sort_by(|a, b| {
        b.estimate
            .total_cmp(&a.estimate)
            .then_with(|| (a.ci95[1] - a.ci95[0]).total_cmp(&(b.ci95[1] - b.ci95[0])))
    });
    for (i, c) in cells.iter_mut().enumerate() {
        c.rank = i + 1;
    }
    Ok(cells)
}

pub fn ranking_to_text(ranking: &[RankedCell]) -> String {
    let mut s = String::new();
    for c in ranking {
        s.push_str(&format!(
            "{:>2}. {:<28} {:>12} [{}, {}] {}\n",
            c.rank,
            c.label(),
            format_coef(c.estimate),
            format_coef(c.ci95[0]),
            format_coef(c.ci95[1]),
            c.units
        ));
    }
    s
}
