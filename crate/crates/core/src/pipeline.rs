//! End-to-end estimation: exposure design, instruments, restrictions,
//! player demeaning, then 2SLS with an OLS baseline.

use serde::{Deserialize, Serialize};

use crate::design::{build_exposure_design, DesignOptions};
use crate::error::Result;
use crate::estimator::{ols, tsls, EstimationResult, FitOptions, VcovMode, WEAK_INSTRUMENT_F};
use crate::history::{build_instruments, HistoryIndex};
use crate::linalg::RowMatrix;
use crate::panel::MatchPanel;
use crate::report::{marginal_effects, MarginalEffect};
use crate::within::{apply_sample_restrictions, demean_by_player, AttritionReport, Outcome, RegressionSample};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateOptions {
    pub design: DesignOptions,
    pub vcov: VcovMode,
    pub weak_f_threshold: f64,
    /// Also fit the naive OLS baseline.
    pub ols_baseline: bool,
}

impl EstimateOptions {
    pub fn new(design: DesignOptions) -> Self {
        Self { design, vcov: VcovMode::Hc1, weak_f_threshold: WEAK_INSTRUMENT_F, ols_baseline: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeFit {
    pub outcome: Outcome,
    pub attrition: AttritionReport,
    pub tsls: EstimationResult,
    pub ols: Option<EstimationResult>,
    /// Present when the design has win interactions.
    pub marginal_effects: Option<Vec<MarginalEffect>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub options: EstimateOptions,
    pub panel_rows: usize,
    pub panel_players: usize,
    pub panel_matches: usize,
    pub draws_excluded: usize,
    pub fits: Vec<OutcomeFit>,
}

impl EstimateReport {
    pub fn fit(&self, outcome: Outcome) -> Option<&OutcomeFit> {
        self.fits.iter().find(|f| f.outcome == outcome)
    }
}

/// `[X W]` side by side.
pub fn concat_columns(a: &RowMatrix, b: &RowMatrix) -> RowMatrix {
    let mut out = RowMatrix::with_capacity(a.ncols() + b.ncols(), a.nrows());
    let mut buf = Vec::with_capacity(a.ncols() + b.ncols());
    for i in 0..a.nrows() {
        buf.clear();
        buf.extend_from_slice(a.row(i));
        buf.extend_from_slice(b.row(i));
        out.push_row(&buf);
    }
    out
}

/// Fits 2SLS (and optionally OLS) on an already demeaned sample.
pub fn fit_sample(
    sample: &RegressionSample,
    vcov: VcovMode,
    weak_f_threshold: f64,
    ols_baseline: bool,
) -> Result<(EstimationResult, Option<EstimationResult>)> {
    let opts = FitOptions {
        vcov,
        groups: Some(&sample.groups),
        absorbed: sample.absorbed,
        weak_f_threshold,
    };
    let (label, units) = (sample.outcome.label(), sample.outcome.units());
    let iv = tsls(
        &sample.y,
        &sample.x,
        &sample.w,
        &sample.z,
        &sample.x_names,
        &sample.w_names,
        &sample.z_names,
        &opts,
    )?
    .with_outcome(label, units);
    let baseline = if ols_baseline {
        let xw = concat_columns(&sample.x, &sample.w);
        let names: Vec<String> = sample.x_names.iter().chain(&sample.w_names).cloned().collect();
        Some(ols(&sample.y, &xw, &names, &opts)?.with_outcome(label, units))
    } else {
        None
    };
    Ok((iv, baseline))
}

pub fn estimate(panel: &MatchPanel, options: &EstimateOptions, outcomes: &[Outcome]) -> Result<EstimateReport> {
    let mut design = build_exposure_design(panel, &options.design)?;
    let values = options.design.behavior.values(panel)?;
    let index = HistoryIndex::with_values(panel, &values);
    let instruments = build_instruments(panel, &index, &options.design)?;
    drop(index);
    design.attach_instruments(&instruments)?;
    drop(instruments);

    let mut fits = Vec::with_capacity(outcomes.len());
    for &outcome in outcomes {
        let (mut sample, attrition) = apply_sample_restrictions(&design, outcome)?;
        demean_by_player(&mut sample);
        let (iv, baseline) = fit_sample(&sample, options.vcov, options.weak_f_threshold, options.ols_baseline)?;
        let effects = if options.design.interactions { Some(marginal_effects(&iv)?) } else { None };
        fits.push(OutcomeFit { outcome, attrition, tsls: iv, ols: baseline, marginal_effects: effects });
    }
    Ok(EstimateReport {
        options: options.clone(),
        panel_rows: panel.n_rows(),
        panel_players: panel.n_players(),
        panel_matches: panel.n_matches(),
        draws_excluded: design.draws_excluded,
        fits,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::Scheme;
    use crate::simulator::{simulate, SimConfig};

    #[test]
    fn runs_end_to_end_on_a_small_panel() {
        let cfg = SimConfig { n_players: 400, seed: 5, ..SimConfig::default() };
        let (panel, _) = simulate(&cfg).unwrap();
        let opts = EstimateOptions::new(DesignOptions::new(Scheme::OppTeam));
        let rep = estimate(&panel, &opts, &[Outcome::Engagement, Outcome::Propagation]).unwrap();
        assert_eq!(rep.fits.len(), 2);
        for f in &rep.fits {
            assert!(f.attrition.reconciles());
            assert_eq!(f.tsls.first_stage.len(), 4);
            assert!(f.ols.is_some());
            assert_eq!(f.marginal_effects.as_ref().unwrap().len(), 2);
        }
        let json = serde_json::to_string(&rep).unwrap();
        let back: EstimateReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back.fits[0].tsls.beta, rep.fits[0].tsls.beta);
    }
}
