//! Exposure design: outcomes, endogenous exposure counts, their win
//! interactions and the exogenous covariates, one row per player-match.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::RowMatrix;
use crate::panel::{derive_time_to_next_match, MatchPanel, MatchResult, PanelRow};

pub const MAX_CONTEXTS: usize = 2;
pub const MAX_ENDOG: usize = 2 * MAX_CONTEXTS;

/// How co-players are partitioned into exposure contexts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Opponents vs teammates.
    OppTeam,
    /// Teammates outside the player's party vs teammates in it. Opponents
    /// are not counted.
    PartySplit,
    /// Every co-player in one context.
    Pooled,
}

impl Scheme {
    pub fn contexts(self) -> &'static [&'static str] {
        match self {
            Scheme::OppTeam => &["opponents", "teammates"],
            Scheme::PartySplit => &["different_party", "same_party"],
            Scheme::Pooled => &["others"],
        }
    }

    pub fn n_contexts(self) -> usize {
        self.contexts().len()
    }

    /// Context of co-player `k` as seen from `j`, or `None` when not counted.
    #[inline]
    pub fn classify(self, j: &PanelRow, k: &PanelRow) -> Option<usize> {
        match self {
            Scheme::Pooled => Some(0),
            Scheme::OppTeam => Some(if j.team == k.team { 1 } else { 0 }),
            Scheme::PartySplit => {
                if j.team != k.team {
                    None
                } else if j.party.is_some() && j.party == k.party {
                    Some(1)
                } else {
                    Some(0)
                }
            }
        }
    }

    pub fn parse(raw: &str) -> Result<Self> {
        match raw.replace('-', "_").to_ascii_lowercase().as_str() {
            "opp_team" => Ok(Scheme::OppTeam),
            "party_split" => Ok(Scheme::PartySplit),
            "pooled" => Ok(Scheme::Pooled),
            _ => Err(Error::Config(format!("unknown scheme `{raw}`"))),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::OppTeam => "opp_team",
            Scheme::PartySplit => "party_split",
            Scheme::Pooled => "pooled",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DrawPolicy {
    #[default]
    Exclude,
    AsLoss,
}

impl DrawPolicy {
    pub fn parse(raw: &str) -> Result<Self> {
        match raw.replace('-', "_").to_ascii_lowercase().as_str() {
            "exclude" => Ok(DrawPolicy::Exclude),
            "as_loss" => Ok(DrawPolicy::AsLoss),
            _ => Err(Error::Config(format!("unknown draw policy `{raw}`"))),
        }
    }

    /// `None` for rows the policy drops, otherwise the Win indicator.
    #[inline]
    pub fn win_indicator(self, result: MatchResult) -> Option<f64> {
        match (result, self) {
            (MatchResult::Win, _) => Some(1.0),
            (MatchResult::Loss, _) => Some(0.0),
            (MatchResult::Draw, DrawPolicy::AsLoss) => Some(0.0),
            (MatchResult::Draw, DrawPolicy::Exclude) => None,
        }
    }
}

/// Which per-row behaviour value feeds exposures, instruments and the
/// propagation outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Behavior {
    /// The `used_toxic` flag.
    #[default]
    Binary,
    /// The continuous `intensity` column.
    Intensity,
}

impl Behavior {
    pub fn parse(raw: &str) -> Result<Self> {
        match raw.to_ascii_lowercase().as_str() {
            "binary" => Ok(Behavior::Binary),
            "intensity" => Ok(Behavior::Intensity),
            _ => Err(Error::Config(format!("unknown behaviour `{raw}`"))),
        }
    }

    pub fn values(self, panel: &MatchPanel) -> Result<Vec<f64>> {
        match self {
            Behavior::Binary => Ok(panel
                .rows()
                .iter()
                .map(|r| if r.used_toxic { 1.0 } else { 0.0 })
                .collect()),
            Behavior::Intensity => panel
                .intensity()
                .map(<[f64]>::to_vec)
                .ok_or_else(|| Error::Config("panel has no intensity column".into())),
        }
    }
}

fn fnv1a(parts: &[&[u8]]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for part in parts {
        for b in part.iter().chain(std::iter::once(&0xffu8)) {
            h ^= u64::from(*b);
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    }
    h
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn unit_hash(seed: u64, parts: &[&[u8]]) -> f64 {
    (splitmix(seed ^ fnv1a(parts)) >> 11) as f64 / (1u64 << 53) as f64
}

/// Deterministic model of which toxic statements reach which listeners.
///
/// A speaker's statements in a match are unavailable with probability
/// `missingness`; independently, each listener hears an opponent with
/// probability `audibility_opponents` and a teammate with probability
/// `audibility_teammates`. Draws are keyed on the string identifiers, so the
/// mask is independent of row order and of how the panel was loaded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExposureMask {
    pub seed: u64,
    pub missingness: f64,
    pub audibility_opponents: f64,
    pub audibility_teammates: f64,
}

impl ExposureMask {
    pub fn missingness(rate: f64, seed: u64) -> Self {
        Self { seed, missingness: rate, audibility_opponents: 1.0, audibility_teammates: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [
            ("missingness", self.missingness),
            ("audibility_opponents", self.audibility_opponents),
            ("audibility_teammates", self.audibility_teammates),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Config(format!("{name} must lie in [0, 1], got {p}")));
            }
        }
        Ok(())
    }

    pub fn statement_available(&self, match_id: &str, speaker: &str) -> bool {
        self.missingness == 0.0
            || unit_hash(self.seed, &[b"avail", match_id.as_bytes(), speaker.as_bytes()])
                >= self.missingness
    }

    pub fn audible(&self, match_id: &str, speaker: &str, listener: &str, same_team: bool) -> bool {
        let p = if same_team { self.audibility_teammates } else { self.audibility_opponents };
        p >= 1.0
            || unit_hash(
                self.seed,
                &[b"aud", match_id.as_bytes(), speaker.as_bytes(), listener.as_bytes()],
            ) < p
    }

    pub fn observed(&self, match_id: &str, speaker: &str, listener: &str, same_team: bool) -> bool {
        self.statement_available(match_id, speaker) && self.audible(match_id, speaker, listener, same_team)
    }

    fn observed_rows(&self, panel: &MatchPanel, speaker: &PanelRow, listener: &PanelRow) -> bool {
        self.observed(
            &panel.match_meta(speaker.match_idx).id,
            panel.player_id(speaker.player_idx),
            panel.player_id(listener.player_idx),
            speaker.team == listener.team,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignOptions {
    pub scheme: Scheme,
    pub draw_policy: DrawPolicy,
    /// Append `context × Win` columns to the endogenous block.
    pub interactions: bool,
    pub behavior: Behavior,
    pub mask: Option<ExposureMask>,
}

impl DesignOptions {
    pub fn new(scheme: Scheme) -> Self {
        Self {
            scheme,
            draw_policy: DrawPolicy::Exclude,
            interactions: true,
            behavior: Behavior::Binary,
            mask: None,
        }
    }

    pub fn x_names(&self) -> Vec<String> {
        let ctx = self.scheme.contexts();
        let mut names: Vec<String> = ctx.iter().map(|c| c.to_string()).collect();
        if self.interactions {
            names.extend(ctx.iter().map(|c| format!("{c}_x_win")));
        }
        names
    }

    pub fn w_names(&self) -> Vec<String> {
        let mut names = vec!["win".to_string()];
        if self.scheme == Scheme::PartySplit {
            names.push("player_in_party".into());
        }
        names
    }

    pub fn z_names(&self) -> Vec<String> {
        self.x_names().iter().map(|n| format!("z_{n}")).collect()
    }

    pub fn n_endog(&self) -> usize {
        self.scheme.n_contexts() * if self.interactions { 2 } else { 1 }
    }

    pub(crate) fn check(&self, panel: &MatchPanel) -> Result<()> {
        if self.scheme == Scheme::PartySplit && !panel.has_party_column() {
            return Err(Error::Schema("party_split scheme requires a party_id column".into()));
        }
        if self.behavior == Behavior::Intensity && panel.intensity().is_none() {
            return Err(Error::Schema("intensity behaviour requires an intensity column".into()));
        }
        if let Some(mask) = &self.mask {
            mask.validate()?;
        }
        Ok(())
    }
}

/// Expands per-context base values into the endogenous layout
/// `[contexts..., contexts × win...]`.
#[inline]
pub(crate) fn expand_with_interactions(base: &[f64], win: f64, interactions: bool, out: &mut [f64]) {
    let c = base.len();
    out[..c].copy_from_slice(base);
    if interactions {
        for i in 0..c {
            out[c + i] = base[i] * win;
        }
    }
}

/// Regression-ready rows, aligned across outcome, regressors and instruments.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignPanel {
    pub options: DesignOptions,
    pub x_names: Vec<String>,
    pub w_names: Vec<String>,
    pub z_names: Vec<String>,
    /// Source row in the [`MatchPanel`].
    pub panel_rows: Vec<u32>,
    pub players: Vec<u32>,
    /// Hours to the player's next match; `None` on the last observed match.
    pub y_time: Vec<Option<f64>>,
    /// The player's own behaviour in the match.
    pub y_behavior: Vec<f64>,
    pub x: RowMatrix,
    /// First column is Win.
    pub w: RowMatrix,
    pub z: Option<RowMatrix>,
    pub contributing_peers: Option<Vec<u32>>,
    pub draws_excluded: usize,
}

impl DesignPanel {
    pub fn n_rows(&self) -> usize {
        self.panel_rows.len()
    }

    pub fn win(&self, i: usize) -> f64 {
        self.w.get(i, 0)
    }

    /// Copies the instrument rows (indexed by panel row) onto design rows.
    pub fn attach_instruments(&mut self, instruments: &crate::history::Instruments) -> Result<()> {
        if instruments.scheme != self.options.scheme
            || instruments.interactions != self.options.interactions
        {
            return Err(Error::Usage("instrument layout does not match the design".into()));
        }
        let k = self.x.ncols();
        let mut z = RowMatrix::with_capacity(k, self.n_rows());
        let mut peers = Vec::with_capacity(self.n_rows());
        for &r in &self.panel_rows {
            let row = &instruments.rows[r as usize];
            z.push_row(&row.z[..k]);
            peers.push(row.total_peers());
        }
        self.z = Some(z);
        self.contributing_peers = Some(peers);
        Ok(())
    }
}

/// Builds exposure counts per context, their win interactions and the
/// exogenous covariates for every non-excluded row of the panel.
pub fn build_exposure_design(panel: &MatchPanel, options: &DesignOptions) -> Result<DesignPanel> {
    options.check(panel)?;
    let values = options.behavior.values(panel)?;
    let y_time_all = derive_time_to_next_match(panel)?;
    let n_ctx = options.scheme.n_contexts();
    let x_names = options.x_names();
    let w_names = options.w_names();
    let k = x_names.len();

    let mut out = DesignPanel {
        options: options.clone(),
        z_names: options.z_names(),
        x_names,
        w_names: w_names.clone(),
        panel_rows: Vec::with_capacity(panel.n_rows()),
        players: Vec::with_capacity(panel.n_rows()),
        y_time: Vec::with_capacity(panel.n_rows()),
        y_behavior: Vec::with_capacity(panel.n_rows()),
        x: RowMatrix::with_capacity(k, panel.n_rows()),
        w: RowMatrix::with_capacity(w_names.len(), panel.n_rows()),
        z: None,
        contributing_peers: None,
        draws_excluded: 0,
    };

    let mut base = [0.0; MAX_CONTEXTS];
    let mut xrow = [0.0; MAX_ENDOG];
    let mut wrow = [0.0; 2];
    for (idx, row) in panel.rows().iter().enumerate() {
        let Some(win) = options.draw_policy.win_indicator(row.result) else {
            out.draws_excluded += 1;
            continue;
        };
        base.iter_mut().for_each(|b| *b = 0.0);
        for &other in panel.match_rows(row.match_idx) {
            let other = other as usize;
            if other == idx || values[other] == 0.0 {
                continue;
            }
            let peer = panel.row(other);
            let Some(ctx) = options.scheme.classify(row, peer) else { continue };
            if let Some(mask) = &options.mask {
                if !mask.observed_rows(panel, peer, row) {
                    continue;
                }
            }
            base[ctx] += values[other];
        }
        expand_with_interactions(&base[..n_ctx], win, options.interactions, &mut xrow);
        wrow[0] = win;
        if options.scheme == Scheme::PartySplit {
            wrow[1] = if row.party.is_some() { 1.0 } else { 0.0 };
        }
        out.panel_rows.push(idx as u32);
        out.players.push(row.player_idx);
        out.y_time.push(y_time_all[idx]);
        out.y_behavior.push(values[idx]);
        out.x.push_row(&xrow[..k]);
        out.w.push_row(&wrow[..w_names.len()]);
    }
    Ok(out)
}

/// Empirical probability of being exposed to at least one toxic co-player
/// in one context, conditional on the player's result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExposureCell {
    pub context: String,
    pub outcome: String,
    pub rows: usize,
    pub exposed: usize,
    pub probability: f64,
    pub std_error: f64,
    /// Probability below [`REFERENCE_EXPOSURE_BOUND`].
    pub below_reference_bound: bool,
}

/// Exposure probability above which a cell is flagged as unusually high.
pub const REFERENCE_EXPOSURE_BOUND: f64 = 0.001;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExposureTable {
    pub scheme: Scheme,
    pub rows: usize,
    pub toxic_rate: f64,
    pub cells: Vec<ExposureCell>,
    pub warnings: Vec<String>,
}

impl ExposureTable {
    pub fn cell(&self, context: &str, outcome: &str) -> Option<&ExposureCell> {
        self.cells.iter().find(|c| c.context == context && c.outcome == outcome)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("scheme,context,outcome,rows,exposed,probability,std_error,below_reference_bound\n");
        for c in &self.cells {
            s.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                self.scheme.as_str(),
                c.context,
                c.outcome,
                c.rows,
                c.exposed,
                c.probability,
                c.std_error,
                c.below_reference_bound
            ));
        }
        s
    }

    pub fn to_text(&self) -> String {
        let mut s = format!(
            "Probability of exposure to toxic language ({} rows, toxic rate {:.4})\n",
            self.rows, self.toxic_rate
        );
        s.push_str(&format!(
            "{:<18}{:<8}{:>10}{:>10}{:>14}{:>12}\n",
            "context", "result", "rows", "exposed", "probability", "se"
        ));
        for c in &self.cells {
            s.push_str(&format!(
                "{:<18}{:<8}{:>10}{:>10}{:>14.6}{:>12.6}\n",
                c.context, c.outcome, c.rows, c.exposed, c.probability, c.std_error
            ));
        }
        for w in &self.warnings {
            s.push_str(&format!("warning: {w}\n"));
        }
        s
    }
}

/// Tabulates P(exposed to ≥ 1 toxic co-player) by context × {loss, win}.
pub fn describe_exposure(
    panel: &MatchPanel,
    scheme: Scheme,
    mask: Option<&ExposureMask>,
    draw_policy: DrawPolicy,
) -> Result<ExposureTable> {
    let mut opts = DesignOptions::new(scheme);
    opts.mask = mask.copied();
    opts.draw_policy = draw_policy;
    opts.check(panel)?;

    let n_ctx = scheme.n_contexts();
    let mut rows = [0usize; 2];
    let mut exposed = vec![[0usize; 2]; n_ctx];
    let mut toxic = 0usize;
    let mut counted = 0usize;
    for (idx, row) in panel.rows().iter().enumerate() {
        let Some(win) = draw_policy.win_indicator(row.result) else { continue };
        let w = win as usize;
        rows[w] += 1;
        counted += 1;
        toxic += usize::from(row.used_toxic);
        let mut hit = [false; MAX_CONTEXTS];
        for &other in panel.match_rows(row.match_idx) {
            let other = other as usize;
            if other == idx {
                continue;
            }
            let peer = panel.row(other);
            if !peer.used_toxic {
                continue;
            }
            let Some(ctx) = scheme.classify(row, peer) else { continue };
            if hit[ctx] {
                continue;
            }
            if mask.is_some_and(|m| !m.observed_rows(panel, peer, row)) {
                continue;
            }
            hit[ctx] = true;
        }
        for c in 0..n_ctx {
            exposed[c][w] += usize::from(hit[c]);
        }
    }

    let mut cells = Vec::with_capacity(2 * n_ctx);
    let mut warnings = Vec::new();
    let mut above = Vec::new();
    for (c, name) in scheme.contexts().iter().enumerate() {
        for (w, outcome) in [(0usize, "loss"), (1usize, "win")] {
            let n = rows[w];
            let p = if n > 0 { exposed[c][w] as f64 / n as f64 } else { 0.0 };
            let se = if n > 0 { (p * (1.0 - p) / n as f64).sqrt() } else { 0.0 };
            let below = p < REFERENCE_EXPOSURE_BOUND;
            if !below {
                above.push(format!("{name}/{outcome} {p:.5}"));
            }
            cells.push(ExposureCell {
                context: name.to_string(),
                outcome: outcome.into(),
                rows: n,
                exposed: exposed[c][w],
                probability: p,
                std_error: se,
                below_reference_bound: below,
            });
        }
    }
    if !above.is_empty() {
        warnings.push(format!(
            "exposure probability exceeds the {REFERENCE_EXPOSURE_BOUND} field reference in {} of {} cells ({})",
            above.len(),
            cells.len(),
            above.join(", ")
        ));
    }
    Ok(ExposureTable {
        scheme,
        rows: counted,
        toxic_rate: if counted > 0 { toxic as f64 / counted as f64 } else { 0.0 },
        cells,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::panel::PlayerMatchRow;

    fn row(m: &str, p: &str, team: u8, party: Option<&str>, toxic: bool, result: MatchResult) -> PlayerMatchRow {
        PlayerMatchRow {
            match_id: m.into(),
            player_id: p.into(),
            team_id: team,
            party_id: party.map(Into::into),
            match_start: 0,
            match_end: 600,
            used_toxic: toxic,
            result,
            intensity: None,
        }
    }

    /// 3v3: j on team 0 with one toxic teammate; two toxic opponents.
    fn three_v_three(j_result: MatchResult) -> MatchPanel {
        let other = match j_result {
            MatchResult::Win => MatchResult::Loss,
            MatchResult::Loss => MatchResult::Win,
            MatchResult::Draw => MatchResult::Draw,
        };
        MatchPanel::from_rows(
            vec![
                row("m", "j", 0, Some("p1"), false, j_result),
                row("m", "t1", 0, Some("p1"), true, j_result),
                row("m", "t2", 0, None, false, j_result),
                row("m", "o1", 1, None, true, other),
                row("m", "o2", 1, None, true, other),
                row("m", "o3", 1, None, false, other),
            ],
            true,
        )
        .unwrap()
    }

    fn design_row(panel: &MatchPanel, d: &DesignPanel, player: &str) -> usize {
        let p = panel.player_index(player).unwrap();
        d.players.iter().position(|&q| q == p).unwrap()
    }

    #[test]
    fn counts_on_loss() {
        let panel = three_v_three(MatchResult::Loss);
        let d = build_exposure_design(&panel, &DesignOptions::new(Scheme::OppTeam)).unwrap();
        let i = design_row(&panel, &d, "j");
        assert_eq!(d.x.row(i), &[2.0, 1.0, 0.0, 0.0]);
        assert_eq!(d.w.row(i), &[0.0]);
    }

    #[test]
    fn interactions_on_win() {
        let panel = three_v_three(MatchResult::Win);
        let d = build_exposure_design(&panel, &DesignOptions::new(Scheme::OppTeam)).unwrap();
        let i = design_row(&panel, &d, "j");
        assert_eq!(d.x.row(i), &[2.0, 1.0, 2.0, 1.0]);
        assert_eq!(d.w.row(i), &[1.0]);
    }

    #[test]
    fn party_split_contexts() {
        let panel = three_v_three(MatchResult::Loss);
        let d = build_exposure_design(&panel, &DesignOptions::new(Scheme::PartySplit)).unwrap();
        let i = design_row(&panel, &d, "j");
        // t1 is in j's party; opponents ignored.
        assert_eq!(d.x.row(i), &[0.0, 1.0, 0.0, 0.0]);
        assert_eq!(d.w.row(i), &[0.0, 1.0]);
        let i = design_row(&panel, &d, "t2");
        assert_eq!(d.x.row(i), &[1.0, 0.0, 0.0, 0.0]);
        assert_eq!(d.w.row(i), &[0.0, 0.0]);
    }

    #[test]
    fn party_split_needs_party_column() {
        let mut rows = vec![row("m", "a", 0, None, false, MatchResult::Win), row("m", "b", 1, None, false, MatchResult::Loss)];
        rows.iter_mut().for_each(|r| r.party_id = None);
        let panel = MatchPanel::from_rows(rows, false).unwrap();
        let err = build_exposure_design(&panel, &DesignOptions::new(Scheme::PartySplit)).unwrap_err();
        assert!(matches!(err, Error::Schema(_)));
    }

    #[test]
    fn draws_excluded_or_coded_as_loss() {
        let panel = three_v_three(MatchResult::Draw);
        let d = build_exposure_design(&panel, &DesignOptions::new(Scheme::OppTeam)).unwrap();
        assert_eq!(d.n_rows(), 0);
        assert_eq!(d.draws_excluded, 6);
        let mut opts = DesignOptions::new(Scheme::OppTeam);
        opts.draw_policy = DrawPolicy::AsLoss;
        let d = build_exposure_design(&panel, &opts).unwrap();
        assert_eq!(d.n_rows(), 6);
        assert!((0..6).all(|i| d.win(i) == 0.0));
    }

    #[test]
    fn full_missingness_masks_everything() {
        let panel = three_v_three(MatchResult::Win);
        let mut opts = DesignOptions::new(Scheme::OppTeam);
        opts.mask = Some(ExposureMask::missingness(1.0, 3));
        let d = build_exposure_design(&panel, &opts).unwrap();
        assert!(d.x.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn describe_zero_toxicity() {
        let mut rows = vec![
            row("m", "a", 0, None, false, MatchResult::Win),
            row("m", "b", 1, None, false, MatchResult::Loss),
        ];
        rows.iter_mut().for_each(|r| r.used_toxic = false);
        let panel = MatchPanel::from_rows(rows, true).unwrap();
        let t = describe_exposure(&panel, Scheme::OppTeam, None, DrawPolicy::Exclude).unwrap();
        assert!(t.cells.iter().all(|c| c.probability == 0.0 && c.below_reference_bound));
        assert!(t.warnings.is_empty());
    }

    #[test]
    fn describe_counts_contexts() {
        let panel = three_v_three(MatchResult::Loss);
        let t = describe_exposure(&panel, Scheme::OppTeam, None, DrawPolicy::Exclude).unwrap();
        // team 0 (loss): every member sees toxic opponents; j and t2 see toxic t1.
        assert_eq!(t.cell("opponents", "loss").unwrap().exposed, 3);
        assert_eq!(t.cell("teammates", "loss").unwrap().exposed, 2);
        // team 1 (win): o1 and o2 see each other, o3 sees both; t1 is an opponent to all.
        assert_eq!(t.cell("teammates", "win").unwrap().exposed, 3);
        assert_eq!(t.cell("opponents", "win").unwrap().exposed, 3);
        assert!(!t.warnings.is_empty());
    }

    #[test]
    fn mask_hash_is_stable() {
        let m = ExposureMask { seed: 11, missingness: 0.5, audibility_opponents: 0.5, audibility_teammates: 1.0 };
        let a = m.observed("m1", "k", "j", false);
        assert_eq!(a, m.observed("m1", "k", "j", false));
        assert!(m.audible("m1", "k", "j", true));
    }
}
