//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use std::collections::{HashMap, HashSet};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use peerfx_core::design::Scheme;
use peerfx_core::history::{build_instruments, HistoryIndex, Instruments};
use peerfx_core::panel::{MatchPanel, MatchResult, PlayerMatchRow};
use peerfx_core::simulator::{simulate, SimConfig, SimMode};
use peerfx_core::design::DesignOptions;

/// A small simulated panel with randomized shape.
pub fn random_small_panel(seed: u64, max_rows: usize) -> MatchPanel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabcdef);
    loop {
        let team_size = rng.random_range(1..=3usize);
        let n_players = rng.random_range(2 * team_size + 2..=2 * team_size + 14);
        let per_match = 2 * team_size;
        let n_matches = rng.random_range(3..=(max_rows / per_match).max(3));
        let cfg = SimConfig {
            seed: rng.random(),
            n_players,
            n_matches: Some(n_matches),
            team_size,
            party_prob: if team_size > 1 { rng.random_range(0.0..0.8) } else { 0.0 },
            toxicity_base_rate: rng.random_range(0.1..0.6),
            draw_prob: rng.random_range(0.0..0.2),
            mean_gap_hours: 4.0,
            ..SimConfig::for_mode(SimMode::EngagementConfounded)
        };
        if let Ok((panel, _)) = simulate(&cfg) {
            if panel.n_rows() <= max_rows {
                return panel;
            }
        }
    }
}

pub type InstrumentKey = (String, String);

/// Literal evaluation of the leave-one-out double sum from raw records.
///
/// Co-players are visited by (team, player id), the order the library uses,
/// so sums of the same rates agree bit for bit.
pub fn brute_force_instruments(
    records: &[PlayerMatchRow],
    scheme: Scheme,
    interactions: bool,
) -> HashMap<InstrumentKey, (Vec<f64>, Vec<u32>)> {
    let present: HashSet<(&str, &str)> =
        records.iter().map(|r| (r.match_id.as_str(), r.player_id.as_str())).collect();
    let key = |r: &PlayerMatchRow| (r.match_start, r.match_id.clone());
    let n_ctx = scheme.n_contexts();
    let mut out = HashMap::new();
    for focal in records {
        let mut peers: Vec<&PlayerMatchRow> = records
            .iter()
            .filter(|r| r.match_id == focal.match_id && r.player_id != focal.player_id)
            .collect();
        peers.sort_by(|a, b| (a.team_id, &a.player_id).cmp(&(b.team_id, &b.player_id)));
        let mut z = vec![0.0; n_ctx];
        let mut counts = vec![0u32; n_ctx];
        for k in peers {
            let ctx = match scheme {
                Scheme::Pooled => 0,
                Scheme::OppTeam => usize::from(k.team_id == focal.team_id),
                Scheme::PartySplit => {
                    if k.team_id != focal.team_id {
                        continue;
                    }
                    usize::from(focal.party_id.is_some() && focal.party_id == k.party_id)
                }
            };
            let (mut n, mut toxic) = (0u32, 0u32);
            for m in records.iter().filter(|r| r.player_id == k.player_id) {
                let prior = key(m) < key(focal);
                let shared = present.contains(&(m.match_id.as_str(), focal.player_id.as_str()));
                if prior && !shared {
                    n += 1;
                    toxic += u32::from(m.used_toxic);
                }
            }
            if n > 0 {
                z[ctx] += f64::from(toxic) / f64::from(n);
                counts[ctx] += 1;
            }
        }
        if interactions {
            let win = if focal.result == MatchResult::Win { 1.0 } else { 0.0 };
            let base = z.clone();
            z.extend(base.iter().map(|v| v * win));
        }
        out.insert((focal.match_id.clone(), focal.player_id.clone()), (z, counts));
    }
    out
}

pub fn library_instruments(panel: &MatchPanel, options: &DesignOptions) -> Instruments {
    let index = HistoryIndex::build(panel);
    build_instruments(panel, &index, options).expect("instruments")
}

/// Row of `panel` for a (match id, player id) pair.
pub fn find_row(panel: &MatchPanel, match_id: &str, player_id: &str) -> Option<usize> {
    let p = panel.player_index(player_id)?;
    let m = panel.match_index(match_id)?;
    panel.player_rows(p).find(|&r| panel.row(r).match_idx == m)
}

/// Dense least squares by SVD; independent of the library's Gram path.
pub fn lstsq(x: &DMatrix<f64>, y: &DVector<f64>) -> DVector<f64> {
    x.clone().svd(true, true).solve(y, 1e-12).expect("svd solve")
}

pub fn rss(x: &DMatrix<f64>, y: &DVector<f64>) -> f64 {
    if x.ncols() == 0 {
        return y.norm_squared();
    }
    (y - x * lstsq(x, y)).norm_squared()
}

/// Textbook 2SLS: project the regressors on the instruments, then regress.
pub fn dense_tsls(y: &DVector<f64>, r: &DMatrix<f64>, q: &DMatrix<f64>) -> DVector<f64> {
    let mut fitted = DMatrix::zeros(r.nrows(), r.ncols());
    for c in 0..r.ncols() {
        let col = r.column(c).into_owned();
        fitted.set_column(c, &(q * lstsq(q, &col)));
    }
    lstsq(&fitted, y)
}

pub fn hstack(blocks: &[&DMatrix<f64>]) -> DMatrix<f64> {
    let n = blocks[0].nrows();
    let k: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = DMatrix::zeros(n, k);
    let mut c = 0;
    for b in blocks {
        for j in 0..b.ncols() {
            out.set_column(c, &b.column(j));
            c += 1;
        }
    }
    out
}

/// One dummy column per distinct group.
pub fn dummies(groups: &[u32]) -> DMatrix<f64> {
    let mut ids: Vec<u32> = groups.to_vec();
    ids.sort_unstable();
    ids.dedup();
    DMatrix::from_fn(groups.len(), ids.len(), |i, g| if groups[i] == ids[g] { 1.0 } else { 0.0 })
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-12)
}

pub fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
