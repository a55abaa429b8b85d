//! OLS and two-stage least squares on (demeaned) panels.
//!
//! Both estimators make one streaming pass to accumulate the cross products
//! of `[y, X, W, Z]` and one more for residual-based quantities. All dense
//! algebra happens on the small k × k blocks.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::linalg::{cluster_gram, gram, inverse_gram, symmetrize, RowMatrix, BLOCK_ROWS};

/// Default weak-instrument threshold for the first-stage F.
pub const WEAK_INSTRUMENT_F: f64 = 10.0;

/// First-stage F values are capped here when the excluded instruments fit
/// the endogenous column exactly.
pub const F_CAP: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VcovMode {
    Classical,
    #[default]
    Hc1,
    ClusterByPlayer,
}

impl VcovMode {
    pub fn parse(raw: &str) -> Result<Self> {
        match raw.replace('-', "_").to_ascii_lowercase().as_str() {
            "classical" => Ok(VcovMode::Classical),
            "hc1" => Ok(VcovMode::Hc1),
            "cluster_player" | "cluster_by_player" | "cluster" => Ok(VcovMode::ClusterByPlayer),
            _ => Err(Error::Config(format!("unknown vcov mode `{raw}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    Ols,
    Tsls,
}

#[derive(Debug, Clone, Copy)]
pub struct FitOptions<'a> {
    pub vcov: VcovMode,
    /// Player id per row, contiguous; required for clustering.
    pub groups: Option<&'a [u32]>,
    /// Fixed effects already swept out of the data.
    pub absorbed: usize,
    pub weak_f_threshold: f64,
}

impl Default for FitOptions<'_> {
    fn default() -> Self {
        Self { vcov: VcovMode::Hc1, groups: None, absorbed: 0, weak_f_threshold: WEAK_INSTRUMENT_F }
    }
}

/// Joint test that the excluded instruments do not enter a first stage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FStat {
    pub f: f64,
    /// Set when the unrestricted fit is exact and `f` was capped at [`F_CAP`].
    pub capped: bool,
    pub df_num: usize,
    pub df_denom: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FirstStage {
    pub endogenous: String,
    /// Coefficient names, excluded instruments first.
    pub names: Vec<String>,
    pub gamma: Vec<f64>,
    pub f_stat: f64,
    pub f_capped: bool,
    pub df_num: usize,
    pub df_denom: usize,
    pub rss_restricted: f64,
    pub rss_unrestricted: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationResult {
    pub estimator: Estimator,
    #[serde(default)]
    pub outcome: Option<String>,
    #[serde(default)]
    pub units: Option<String>,
    pub names: Vec<String>,
    pub beta: Vec<f64>,
    pub se: Vec<f64>,
    pub t_stats: Vec<f64>,
    pub p_values: Vec<f64>,
    pub vcov: Vec<Vec<f64>>,
    pub vcov_mode: VcovMode,
    pub n_obs: usize,
    pub n_players: usize,
    pub absorbed: usize,
    pub df_resid: usize,
    pub rss: f64,
    /// Wald F that every coefficient is zero, under the reported covariance.
    pub model_f: Option<f64>,
    pub first_stage: Vec<FirstStage>,
    pub warnings: Vec<String>,
}

impl EstimationResult {
    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn coef(&self, name: &str) -> Option<f64> {
        self.index_of(name).map(|i| self.beta[i])
    }

    pub fn se_of(&self, name: &str) -> Option<f64> {
        self.index_of(name).map(|i| self.se[i])
    }

    pub fn vcov_matrix(&self) -> DMatrix<f64> {
        let k = self.vcov.len();
        DMatrix::from_fn(k, k, |a, b| self.vcov[a][b])
    }

    /// A result carrying only published point estimates and standard
    /// errors (covariances between coefficients unknown, taken as zero).
    pub fn from_estimates(names: &[&str], beta: &[f64], se: &[f64], df_resid: usize) -> Result<Self> {
        let k = names.len();
        if beta.len() != k || se.len() != k {
            return Err(Error::Usage("from_estimates: one estimate and one error per name".into()));
        }
        if se.iter().any(|s| s.is_nan() || *s < 0.0) {
            return Err(Error::Usage("from_estimates: standard errors must be non-negative".into()));
        }
        let vcov = DMatrix::from_fn(k, k, |a, b| if a == b { se[a] * se[a] } else { 0.0 });
        let opts = FitOptions { vcov: VcovMode::Classical, ..Default::default() };
        let names = names.iter().map(|n| n.to_string()).collect();
        Ok(finish(Estimator::Tsls, names, beta.to_vec(), vcov, 0, df_resid, 0.0, &opts, Vec::new(), Vec::new()))
    }

    pub fn with_outcome(mut self, outcome: &str, units: &str) -> Self {
        self.outcome = Some(outcome.to_owned());
        self.units = Some(units.to_owned());
        self
    }
}

fn sub_block(g: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |a, b| g[(rows[a], cols[b])])
}

fn count_groups(groups: &[u32]) -> usize {
    (0..groups.len()).filter(|&i| i == 0 || groups[i] != groups[i - 1]).count()
}

/// Vector-valued deterministic blocked sum.
fn blocked_sums<F>(n: usize, m: usize, f: F) -> Vec<f64>
where
    F: Fn(usize, &mut [f64]) + Sync,
{
    use rayon::prelude::*;
    let parts: Vec<Vec<f64>> = (0..n.div_ceil(BLOCK_ROWS))
        .into_par_iter()
        .map(|b| {
            let mut acc = vec![0.0; m];
            for i in b * BLOCK_ROWS..((b + 1) * BLOCK_ROWS).min(n) {
                f(i, &mut acc);
            }
            acc
        })
        .collect();
    let mut parts = parts;
    if parts.is_empty() {
        return vec![0.0; m];
    }
    while parts.len() > 1 {
        let mut next = Vec::with_capacity(parts.len().div_ceil(2));
        let mut it = parts.into_iter();
        while let Some(mut a) = it.next() {
            if let Some(b) = it.next() {
                a.iter_mut().zip(&b).for_each(|(x, y)| *x += y);
            }
            next.push(a);
        }
        parts = next;
    }
    parts.pop().unwrap()
}

/// Sandwich pieces shared by OLS and 2SLS. `q_fill` writes the row of the
/// projection space and `h` maps it onto the fitted regressors (identity for
/// OLS).
#[allow(clippy::too_many_arguments)]
fn covariance<F>(
    mode: VcovMode,
    a_inv: &DMatrix<f64>,
    h: Option<&DMatrix<f64>>,
    q_dim: usize,
    q_fill: F,
    resid: &[f64],
    rss: f64,
    df: usize,
    k: usize,
    groups: Option<&[u32]>,
) -> Result<DMatrix<f64>>
where
    F: Fn(usize, &mut [f64]) + Sync,
{
    let n = resid.len();
    let project = |meat: DMatrix<f64>| -> DMatrix<f64> {
        let m = match h {
            Some(h) => h.transpose() * meat * h,
            None => meat,
        };
        a_inv * m * a_inv
    };
    let mut v = match mode {
        VcovMode::Classical => a_inv * (rss / df as f64),
        VcovMode::Hc1 => {
            let meat = gram(n, q_dim, |i, v| {
                q_fill(i, v);
                let e = resid[i];
                v.iter_mut().for_each(|x| *x *= e);
            });
            project(meat) * (n as f64 / df as f64)
        }
        VcovMode::ClusterByPlayer => {
            let groups = groups.ok_or_else(|| {
                Error::Usage("cluster-by-player covariance needs player ids".into())
            })?;
            if groups.len() != n {
                return Err(Error::Usage("one player id per row required".into()));
            }
            let g = count_groups(groups);
            if g < 2 {
                return Err(Error::DegreesOfFreedom { n: g, p: 1 });
            }
            if n <= k {
                return Err(Error::DegreesOfFreedom { n, p: k });
            }
            let meat = cluster_gram(groups, q_dim, |i, v| {
                q_fill(i, v);
                let e = resid[i];
                v.iter_mut().for_each(|x| *x *= e);
            })?;
            let scale = (g as f64 / (g - 1) as f64) * ((n - 1) as f64 / (n - k) as f64);
            project(meat) * scale
        }
    };
    symmetrize(&mut v);
    Ok(v)
}

fn inference(beta: &[f64], vcov: &DMatrix<f64>, df: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let se: Vec<f64> = (0..beta.len()).map(|i| vcov[(i, i)].max(0.0).sqrt()).collect();
    let dist = StudentsT::new(0.0, 1.0, df.max(1) as f64).expect("valid t distribution");
    let mut t = Vec::with_capacity(beta.len());
    let mut p = Vec::with_capacity(beta.len());
    for (b, s) in beta.iter().zip(&se) {
        let (ti, pi) = if *s > 0.0 {
            let ti = b / s;
            (ti, (2.0 * (1.0 - dist.cdf(ti.abs()))).clamp(0.0, 1.0))
        } else if *b == 0.0 {
            (0.0, 1.0)
        } else {
            (f64::MAX.copysign(*b), 0.0)
        };
        t.push(ti);
        p.push(pi);
    }
    (se, t, p)
}

fn wald_f(beta: &[f64], vcov: &DMatrix<f64>) -> Option<f64> {
    let k = beta.len();
    if k == 0 {
        return None;
    }
    let inv = vcov.clone().try_inverse()?;
    let b = DVector::from_column_slice(beta);
    let f = (b.transpose() * inv * &b)[(0, 0)] / k as f64;
    f.is_finite().then_some(f)
}

fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|a| (0..m.ncols()).map(|b| m[(a, b)]).collect()).collect()
}

fn residual_df(n: usize, p: usize, absorbed: usize) -> Result<usize> {
    if n <= p + absorbed {
        return Err(Error::DegreesOfFreedom { n, p: p + absorbed });
    }
    Ok(n - p - absorbed)
}

/// Least squares of `y` on the columns of `x` (no implicit intercept).
pub fn ols(y: &[f64], x: &RowMatrix, names: &[String], opts: &FitOptions) -> Result<EstimationResult> {
    let n = y.len();
    let k = x.ncols();
    if x.nrows() != n || names.len() != k {
        return Err(Error::Usage("ols: inconsistent dimensions".into()));
    }
    let df = residual_df(n, k, opts.absorbed)?;
    let g = gram(n, k + 1, |i, v| {
        v[0] = y[i];
        v[1..].copy_from_slice(x.row(i));
    });
    let idx: Vec<usize> = (1..=k).collect();
    let xtx = sub_block(&g, &idx, &idx);
    let xty = sub_block(&g, &idx, &[0]);
    let inv = inverse_gram(&xtx, names)?;
    let beta: Vec<f64> = (&inv * xty).iter().copied().collect();

    let resid: Vec<f64> = (0..n)
        .map(|i| y[i] - x.row(i).iter().zip(&beta).map(|(a, b)| a * b).sum::<f64>())
        .collect();
    let rss = blocked_sums(n, 1, |i, acc| acc[0] += resid[i] * resid[i])[0];
    let vcov = covariance(
        opts.vcov,
        &inv,
        None,
        k,
        |i, v| v.copy_from_slice(x.row(i)),
        &resid,
        rss,
        df,
        k,
        opts.groups,
    )?;
    Ok(finish(Estimator::Ols, names.to_vec(), beta, vcov, n, df, rss, opts, Vec::new(), Vec::new()))
}

#[allow(clippy::too_many_arguments)]
fn finish(
    estimator: Estimator,
    names: Vec<String>,
    beta: Vec<f64>,
    vcov: DMatrix<f64>,
    n: usize,
    df: usize,
    rss: f64,
    opts: &FitOptions,
    first_stage: Vec<FirstStage>,
    warnings: Vec<String>,
) -> EstimationResult {
    let (se, t_stats, p_values) = inference(&beta, &vcov, df);
    EstimationResult {
        estimator,
        outcome: None,
        units: None,
        model_f: wald_f(&beta, &vcov),
        names,
        beta,
        se,
        t_stats,
        p_values,
        vcov: to_rows(&vcov),
        vcov_mode: opts.vcov,
        n_obs: n,
        n_players: opts.groups.map_or(opts.absorbed, count_groups),
        absorbed: opts.absorbed,
        df_resid: df,
        rss,
        first_stage,
        warnings,
    }
}

/// Classical OLS, HC1 or cluster-by-player covariance of OLS coefficients
/// given residuals and the regressor matrix.
pub fn robust_vcov(
    residuals: &[f64],
    regressors: &RowMatrix,
    mode: VcovMode,
    groups: Option<&[u32]>,
    absorbed: usize,
) -> Result<DMatrix<f64>> {
    let n = residuals.len();
    let k = regressors.ncols();
    if regressors.nrows() != n {
        return Err(Error::Usage("robust_vcov: one residual per row required".into()));
    }
    let df = residual_df(n, k, absorbed)?;
    let xtx = gram(n, k, |i, v| v.copy_from_slice(regressors.row(i)));
    let names: Vec<String> = (0..k).map(|j| format!("x{j}")).collect();
    let inv = inverse_gram(&xtx, &names).map_err(|e| match e {
        Error::RankDeficient(_) => Error::Singular("bread matrix X'X".into()),
        other => other,
    })?;
    let rss = blocked_sums(n, 1, |i, acc| acc[0] += residuals[i] * residuals[i])[0];
    covariance(mode, &inv, None, k, |i, v| v.copy_from_slice(regressors.row(i)), residuals, rss, df, k, groups)
}

/// F statistic from restricted and unrestricted residual sums of squares.
///
/// `q` excluded instruments, `p` unrestricted parameters; the denominator
/// degrees of freedom also subtract `absorbed` fixed effects.
pub fn first_stage_f(
    rss_restricted: f64,
    rss_unrestricted: f64,
    q: usize,
    n: usize,
    p: usize,
    absorbed: usize,
) -> Result<FStat> {
    if q == 0 {
        return Err(Error::Usage("first-stage F needs at least one excluded instrument".into()));
    }
    let df_denom = residual_df(n, p, absorbed)?;
    let exact = rss_unrestricted <= 1e-13 * rss_restricted.max(f64::MIN_POSITIVE);
    let f = if exact {
        F_CAP
    } else {
        ((rss_restricted - rss_unrestricted) / q as f64) / (rss_unrestricted / df_denom as f64)
    };
    Ok(FStat { f: f.min(F_CAP), capped: exact || f >= F_CAP, df_num: q, df_denom })
}

/// Just- or over-identified 2SLS of `y` on `[X_endog, W_exog]` with
/// instruments `[Z, W_exog]`.
///
/// Covariances use residuals formed with the original endogenous columns.
#[allow(clippy::too_many_arguments)]
pub fn tsls(
    y: &[f64],
    x_endog: &RowMatrix,
    w_exog: &RowMatrix,
    z: &RowMatrix,
    x_names: &[String],
    w_names: &[String],
    z_names: &[String],
    opts: &FitOptions,
) -> Result<EstimationResult> {
    let n = y.len();
    let (kx, kw, kz) = (x_endog.ncols(), w_exog.ncols(), z.ncols());
    if x_endog.nrows() != n || w_exog.nrows() != n || z.nrows() != n {
        return Err(Error::Usage("tsls: inconsistent row counts".into()));
    }
    if x_names.len() != kx || w_names.len() != kw || z_names.len() != kz {
        return Err(Error::Usage("tsls: one name per column required".into()));
    }
    if kx == 0 {
        return Err(Error::Usage("tsls: at least one endogenous column required".into()));
    }
    if kz < kx {
        return Err(Error::Usage(format!(
            "tsls: under-identified ({kz} instruments for {kx} endogenous columns)"
        )));
    }
    let k = kx + kw;
    let df = residual_df(n, k, opts.absorbed)?;

    // layout: [y | x | w | z]
    let dim = 1 + kx + kw + kz;
    let g = gram(n, dim, |i, v| {
        v[0] = y[i];
        v[1..1 + kx].copy_from_slice(x_endog.row(i));
        v[1 + kx..1 + kx + kw].copy_from_slice(w_exog.row(i));
        v[1 + kx + kw..].copy_from_slice(z.row(i));
    });
    let x_idx: Vec<usize> = (1..1 + kx).collect();
    let w_idx: Vec<usize> = (1 + kx..1 + kx + kw).collect();
    let z_idx: Vec<usize> = (1 + kx + kw..dim).collect();
    let q_idx: Vec<usize> = z_idx.iter().chain(&w_idx).copied().collect();
    let r_idx: Vec<usize> = x_idx.iter().chain(&w_idx).copied().collect();
    let q_names: Vec<String> = z_names.iter().chain(w_names).cloned().collect();
    let r_names: Vec<String> = x_names.iter().chain(w_names).cloned().collect();

    let qq_inv = inverse_gram(&sub_block(&g, &q_idx, &q_idx), &q_names)?;
    let qr = sub_block(&g, &q_idx, &r_idx);
    let qy = sub_block(&g, &q_idx, &[0]);
    let h = &qq_inv * &qr;
    let a = qr.transpose() * &h;
    let a_inv = inverse_gram(&a, &r_names)?;
    let beta: Vec<f64> = (&a_inv * (h.transpose() * qy)).iter().copied().collect();

    // First stages: unrestricted on [Z W] (coefficients are columns of h),
    // restricted on W alone.
    let gamma_r = if kw > 0 {
        let ww_inv = inverse_gram(&sub_block(&g, &w_idx, &w_idx), w_names)?;
        Some(&ww_inv * sub_block(&g, &w_idx, &x_idx))
    } else {
        None
    };

    let q_row = |i: usize, v: &mut [f64]| {
        v[..kz].copy_from_slice(z.row(i));
        v[kz..].copy_from_slice(w_exog.row(i));
    };
    let resid: Vec<f64> = (0..n)
        .map(|i| {
            let fit: f64 = x_endog
                .row(i)
                .iter()
                .chain(w_exog.row(i))
                .zip(&beta)
                .map(|(a, b)| a * b)
                .sum();
            y[i] - fit
        })
        .collect();

    // [rss, rss_u(x_0..), rss_r(x_0..)]
    let sums = blocked_sums(n, 1 + 2 * kx, |i, acc| {
        acc[0] += resid[i] * resid[i];
        let zr = z.row(i);
        let wr = w_exog.row(i);
        for e in 0..kx {
            let xe = x_endog.get(i, e);
            let mut fit_u = 0.0;
            for (j, v) in zr.iter().chain(wr).enumerate() {
                fit_u += v * h[(j, e)];
            }
            let fit_r = match &gamma_r {
                Some(gr) => wr.iter().enumerate().map(|(j, v)| v * gr[(j, e)]).sum(),
                None => 0.0,
            };
            acc[1 + e] += (xe - fit_u) * (xe - fit_u);
            acc[1 + kx + e] += (xe - fit_r) * (xe - fit_r);
        }
    });
    let rss = sums[0];

    let mut first_stage = Vec::with_capacity(kx);
    let mut warnings = Vec::new();
    for e in 0..kx {
        let (rss_u, rss_r) = (sums[1 + e], sums[1 + kx + e]);
        let f = first_stage_f(rss_r, rss_u, kz, n, kz + kw, opts.absorbed)?;
        if f.f < opts.weak_f_threshold {
            warnings.push(format!(
                "weak instruments for `{}`: first-stage F = {:.3} < {}",
                x_names[e], f.f, opts.weak_f_threshold
            ));
        }
        first_stage.push(FirstStage {
            endogenous: x_names[e].clone(),
            names: q_names.clone(),
            gamma: (0..kz + kw).map(|j| h[(j, e)]).collect(),
            f_stat: f.f,
            f_capped: f.capped,
            df_num: f.df_num,
            df_denom: f.df_denom,
            rss_restricted: rss_r,
            rss_unrestricted: rss_u,
        });
    }

    let vcov = covariance(opts.vcov, &a_inv, Some(&h), kz + kw, q_row, &resid, rss, df, k, opts.groups)?;
    Ok(finish(Estimator::Tsls, r_names, beta, vcov, n, df, rss, opts, first_stage, warnings))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn exact_line() {
        let x = RowMatrix::from_columns(&[vec![1.0, 2.0, 3.0, 4.0]]);
        let y = vec![2.0, 4.0, 6.0, 8.0];
        let r = ols(&y, &x, &names(&["x"]), &FitOptions::default()).unwrap();
        assert!((r.beta[0] - 2.0).abs() < 1e-14);
        assert!(r.rss < 1e-20);
        assert!(r.vcov[0][0].abs() < 1e-20);
    }

    #[test]
    fn collinear_regressors_rejected() {
        let c = vec![1.0, 2.0, 3.0, 5.0];
        let x = RowMatrix::from_columns(&[c.clone(), c.clone()]);
        let y: Vec<f64> = c.iter().map(|v| 2.0 * v).collect();
        let err = ols(&y, &x, &names(&["x1", "x2"]), &FitOptions::default()).unwrap_err();
        assert!(matches!(err, Error::RankDeficient(_)));
    }

    #[test]
    fn six_point_normal_equations() {
        // Hand-solved: X = [1, t], t = 1..6, y = (1, 3, 2, 5, 4, 6)
        // Sxx = 17.5, Sxy = 15.5 -> slope 31/35, intercept 3.5 - 3.5*31/35 = 0.4
        let t = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let x = RowMatrix::from_columns(&[vec![1.0; 6], t.to_vec()]);
        let y = vec![1.0, 3.0, 2.0, 5.0, 4.0, 6.0];
        let r = ols(&y, &x, &names(&["const", "t"]), &FitOptions { vcov: VcovMode::Classical, ..Default::default() }).unwrap();
        assert!((r.beta[1] - 31.0 / 35.0).abs() < 1e-12);
        assert!((r.beta[0] - 0.4).abs() < 1e-12);
    }

    #[test]
    fn just_identified_closed_form() {
        let y = vec![3.0, -3.0];
        let x = RowMatrix::from_columns(&[vec![2.0, -2.0]]);
        let z = RowMatrix::from_columns(&[vec![1.0, -1.0]]);
        let w = RowMatrix::zeros(2, 0);
        let r = tsls(&y, &x, &w, &z, &names(&["x"]), &[], &names(&["z"]), &FitOptions::default()).unwrap();
        assert_eq!(r.beta[0], 1.5);
    }

    #[test]
    fn zero_residuals_give_zero_covariance() {
        let x = RowMatrix::from_columns(&[vec![1.0, 2.0, 3.0]]);
        for mode in [VcovMode::Classical, VcovMode::Hc1, VcovMode::ClusterByPlayer] {
            let v = robust_vcov(&[0.0; 3], &x, mode, Some(&[0, 1, 2]), 0).unwrap();
            assert_eq!(v[(0, 0)], 0.0);
        }
    }

    #[test]
    fn perfect_first_stage_is_capped() {
        let xs = vec![1.0, -2.0, 0.5, 3.0, -1.0, 2.5];
        let x = RowMatrix::from_columns(std::slice::from_ref(&xs));
        let y: Vec<f64> = xs.iter().enumerate().map(|(i, v)| 2.0 * v + (i as f64).sin()).collect();
        let w = RowMatrix::zeros(6, 0);
        let r = tsls(&y, &x, &w, &x, &names(&["x"]), &[], &names(&["z"]), &FitOptions::default()).unwrap();
        assert!(r.first_stage[0].f_capped);
        assert_eq!(r.first_stage[0].f_stat, F_CAP);
    }

    #[test]
    fn f_needs_degrees_of_freedom() {
        assert!(matches!(first_stage_f(2.0, 1.0, 1, 3, 3, 0), Err(Error::DegreesOfFreedom { .. })));
        let f = first_stage_f(10.0, 4.0, 2, 13, 3, 0).unwrap();
        assert!((f.f - 7.5).abs() < 1e-12);
    }
}
