//! Per-player match histories and the leave-one-out instruments built on them.
//!
//! For a row (match `i`, player `j`) and a co-player `k`, the leave-one-out
//! rate is the mean of `k`'s behaviour over `k`'s matches strictly prior to
//! `i` that `j` did not take part in. The instrument for a context sums
//! these rates over the co-players in that context.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::design::{expand_with_interactions, Behavior, DesignOptions, Scheme, MAX_CONTEXTS, MAX_ENDOG};
use crate::error::{Error, Result};
use crate::panel::{MatchPanel, MatchResult};

/// Chronological per-player sequences with cumulative behaviour sums.
#[derive(Debug, Clone, PartialEq)]
pub struct HistoryIndex {
    offsets: Vec<usize>,
    match_idx: Vec<u32>,
    values: Vec<f64>,
    /// Per player, `len + 1` running sums starting at zero.
    cumulative: Vec<f64>,
}

impl HistoryIndex {
    /// Index over the `used_toxic` flags.
    pub fn build(panel: &MatchPanel) -> Self {
        let values = Behavior::Binary.values(panel).expect("binary values always exist");
        Self::with_values(panel, &values)
    }

    /// Index over arbitrary per-row behaviour values (panel row order).
    pub fn with_values(panel: &MatchPanel, values: &[f64]) -> Self {
        assert_eq!(values.len(), panel.n_rows(), "one value per panel row");
        let n_players = panel.n_players();
        let mut offsets = Vec::with_capacity(n_players + 1);
        offsets.push(0);
        let mut cumulative = Vec::with_capacity(panel.n_rows() + n_players);
        for p in 0..n_players as u32 {
            let range = panel.player_rows(p);
            let mut acc = 0.0;
            cumulative.push(acc);
            for v in &values[range.clone()] {
                acc += v;
                cumulative.push(acc);
            }
            offsets.push(range.end);
        }
        Self {
            offsets,
            match_idx: panel.rows().iter().map(|r| r.match_idx).collect(),
            values: values.to_vec(),
            cumulative,
        }
    }

    pub fn n_players(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Chronological match indices of one player.
    pub fn matches_of(&self, player: u32) -> &[u32] {
        let p = player as usize;
        &self.match_idx[self.offsets[p]..self.offsets[p + 1]]
    }

    pub fn values_of(&self, player: u32) -> &[f64] {
        let p = player as usize;
        &self.values[self.offsets[p]..self.offsets[p + 1]]
    }

    pub fn contains(&self, player: u32, match_idx: u32) -> bool {
        self.matches_of(player).binary_search(&match_idx).is_ok()
    }

    /// Number of the player's matches strictly prior to `match_idx`.
    pub fn prior_count(&self, player: u32, match_idx: u32) -> usize {
        self.matches_of(player).partition_point(|&m| m < match_idx)
    }

    #[inline]
    fn sum_first(&self, player: u32, count: usize) -> f64 {
        self.cumulative[self.offsets[player as usize] + player as usize + count]
    }

    /// Mean behaviour of `k` over its matches before `match_idx` that `j`
    /// did not play; `None` when that set is empty.
    pub fn leave_one_out_rate(&self, k: u32, j: u32, match_idx: u32) -> Result<Option<f64>> {
        if k == j {
            return Err(Error::Usage("leave-one-out rate needs two distinct players".into()));
        }
        let k_prior = self.prior_count(k, match_idx);
        let j_prior = self.prior_count(j, match_idx);
        let k_seq = &self.matches_of(k)[..k_prior];
        let k_vals = &self.values_of(k)[..k_prior];
        let j_seq = &self.matches_of(j)[..j_prior];

        let (mut shared_n, mut shared_sum) = (0usize, 0.0);
        if k_prior <= j_prior {
            for (m, v) in k_seq.iter().zip(k_vals) {
                if j_seq.binary_search(m).is_ok() {
                    shared_n += 1;
                    shared_sum += v;
                }
            }
        } else {
            for m in j_seq {
                if let Ok(pos) = k_seq.binary_search(m) {
                    shared_n += 1;
                    shared_sum += k_vals[pos];
                }
            }
        }
        let n = k_prior - shared_n;
        Ok((n > 0).then(|| (self.sum_first(k, k_prior) - shared_sum) / n as f64))
    }
}

/// Instrument values for one panel row, laid out like the endogenous block.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct InstrumentRow {
    pub z: [f64; MAX_ENDOG],
    /// Co-players per context whose leave-one-out set was non-empty.
    pub contributing_peers: [u32; MAX_CONTEXTS],
}

impl InstrumentRow {
    pub fn total_peers(&self) -> u32 {
        self.contributing_peers.iter().sum()
    }
}

/// Instruments for every panel row (indexed by panel row).
#[derive(Debug, Clone, PartialEq)]
pub struct Instruments {
    pub scheme: Scheme,
    pub interactions: bool,
    pub z_names: Vec<String>,
    pub rows: Vec<InstrumentRow>,
}

impl Instruments {
    pub fn n_z(&self) -> usize {
        self.z_names.len()
    }

    /// Delimiter-separated dump: one line per (match_id, player_id).
    pub fn to_csv(&self, panel: &MatchPanel) -> String {
        let n_ctx = self.scheme.n_contexts();
        let mut s = String::from("match_id,player_id");
        for name in &self.z_names {
            s.push(',');
            s.push_str(name);
        }
        for c in self.scheme.contexts() {
            s.push_str(&format!(",peers_{c}"));
        }
        s.push('\n');
        for (i, row) in self.rows.iter().enumerate() {
            let r = panel.row(i);
            s.push_str(&panel.match_meta(r.match_idx).id);
            s.push(',');
            s.push_str(panel.player_id(r.player_idx));
            for v in &row.z[..self.n_z()] {
                s.push_str(&format!(",{v}"));
            }
            for c in &row.contributing_peers[..n_ctx] {
                s.push_str(&format!(",{c}"));
            }
            s.push('\n');
        }
        s
    }
}

/// Leave-one-out instruments for every row of the panel.
///
/// Each player's history is swept once in chronological order while a map of
/// matches shared with each co-player is maintained, so the cost is linear in
/// rows × match size.
pub fn build_instruments(panel: &MatchPanel, index: &HistoryIndex, options: &DesignOptions) -> Result<Instruments> {
    options.check(panel)?;
    if index.n_players() != panel.n_players() || index.values.len() != panel.n_rows() {
        return Err(Error::Usage("history index was built from a different panel".into()));
    }
    let scheme = options.scheme;
    let n_ctx = scheme.n_contexts();
    let interactions = options.interactions;

    let per_player: Vec<Vec<InstrumentRow>> = (0..panel.n_players() as u32)
        .into_par_iter()
        .map(|j| {
            let range = panel.player_rows(j);
            let mut out = Vec::with_capacity(range.len());
            let mut shared: HashMap<u32, (u32, f64)> = HashMap::new();
            for r in range {
                let row = panel.row(r);
                let members = panel.match_rows(row.match_idx);
                let mut base = [0.0; MAX_CONTEXTS];
                let mut inst = InstrumentRow::default();
                for &kr in members {
                    let kr = kr as usize;
                    if kr == r {
                        continue;
                    }
                    let peer = panel.row(kr);
                    let Some(ctx) = scheme.classify(row, peer) else { continue };
                    let prior = peer.seq as usize;
                    let (shared_n, shared_sum) = shared.get(&peer.player_idx).copied().unwrap_or((0, 0.0));
                    let n = prior - shared_n as usize;
                    if n > 0 {
                        base[ctx] += (index.sum_first(peer.player_idx, prior) - shared_sum) / n as f64;
                        inst.contributing_peers[ctx] += 1;
                    }
                }
                let win = if row.result == MatchResult::Win { 1.0 } else { 0.0 };
                expand_with_interactions(&base[..n_ctx], win, interactions, &mut inst.z);
                out.push(inst);

                for &kr in members {
                    let kr = kr as usize;
                    if kr == r {
                        continue;
                    }
                    let e = shared.entry(panel.row(kr).player_idx).or_insert((0, 0.0));
                    e.0 += 1;
                    e.1 += index.values[kr];
                }
            }
            out
        })
        .collect();

    Ok(Instruments {
        scheme,
        interactions,
        z_names: options.z_names(),
        rows: per_player.into_iter().flatten().collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::panel::{MatchResult, PlayerMatchRow};

    fn pair_match(id: &str, t: i64, a: (&str, bool), b: (&str, bool)) -> Vec<PlayerMatchRow> {
        [(a, 0u8, MatchResult::Win), (b, 1u8, MatchResult::Loss)]
            .into_iter()
            .map(|((p, tox), team, res)| PlayerMatchRow {
                match_id: id.into(),
                player_id: p.into(),
                team_id: team,
                party_id: None,
                match_start: t,
                match_end: t + 10,
                used_toxic: tox,
                result: res,
                intensity: None,
            })
            .collect()
    }

    #[test]
    fn rate_excludes_shared_matches() {
        // k: m1 toxic (j absent), m2 clean (j present), m3 clean (j absent); query at m4.
        let mut rows = Vec::new();
        rows.extend(pair_match("m1", 0, ("k", true), ("x", false)));
        rows.extend(pair_match("m2", 100, ("k", false), ("j", true)));
        rows.extend(pair_match("m3", 200, ("k", false), ("y", false)));
        rows.extend(pair_match("m4", 300, ("k", false), ("j", false)));
        let panel = MatchPanel::from_rows(rows, false).unwrap();
        let index = HistoryIndex::build(&panel);
        let k = panel.player_index("k").unwrap();
        let j = panel.player_index("j").unwrap();
        let m4 = panel.match_index("m4").unwrap();
        assert_eq!(index.leave_one_out_rate(k, j, m4).unwrap(), Some(0.5));
        let m1 = panel.match_index("m1").unwrap();
        assert_eq!(index.leave_one_out_rate(k, j, m1).unwrap(), None);
        let m2 = panel.match_index("m2").unwrap();
        assert_eq!(index.leave_one_out_rate(k, j, m2).unwrap(), Some(1.0));
        assert!(index.leave_one_out_rate(k, k, m4).is_err());

        let inst = build_instruments(&panel, &index, &DesignOptions::new(Scheme::OppTeam)).unwrap();
        let r = panel.player_rows(j).end - 1;
        assert_eq!(inst.rows[r].z[0], 0.5);
        assert_eq!(inst.rows[r].contributing_peers, [1, 0]);
    }

    #[test]
    fn single_player_sequence() {
        let mut rows = Vec::new();
        rows.extend(pair_match("a", 0, ("p", true), ("q1", false)));
        rows.extend(pair_match("b", 50, ("p", false), ("q2", false)));
        rows.extend(pair_match("c", 99, ("p", true), ("q3", false)));
        let panel = MatchPanel::from_rows(rows, false).unwrap();
        let index = HistoryIndex::build(&panel);
        let p = panel.player_index("p").unwrap();
        assert_eq!(index.matches_of(p).len(), 3);
        assert!(index.matches_of(p).iter().all(|&m| index.contains(p, m)));
        assert_eq!(index.n_players(), 4);
    }

    #[test]
    fn empty_panel_empty_index() {
        let panel = MatchPanel::empty();
        let index = HistoryIndex::build(&panel);
        assert_eq!(index.n_players(), 0);
        let inst = build_instruments(&panel, &index, &DesignOptions::new(Scheme::OppTeam)).unwrap();
        assert!(inst.rows.is_empty());
    }

    #[test]
    fn first_match_has_no_instrument() {
        let panel = MatchPanel::from_rows(pair_match("m", 0, ("a", true), ("b", true)), false).unwrap();
        let index = HistoryIndex::build(&panel);
        let inst = build_instruments(&panel, &index, &DesignOptions::new(Scheme::OppTeam)).unwrap();
        for row in &inst.rows {
            assert_eq!(row.z, [0.0; MAX_ENDOG]);
            assert_eq!(row.total_peers(), 0);
        }
    }
}
