//! Structural simulator with known ground truth.
//!
//! Every mode shares one matchmaking loop. Player propensities come from
//! substream 0 of the seeded ChaCha generator and match `m` draws from
//! substream `m + 1`, so a configuration (including its seed) always yields
//! the same panel.

mod config;
mod equilibrium;
mod schedule;

pub use config::{EffectCells, SimConfig, SimMode};
pub use equilibrium::{equilibrium_solve, inf_norm, ols_plim_reflection, spectral_radius};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::design::{ExposureMask, Scheme};
use crate::error::{Error, Result};
use crate::panel::{MatchPanel, MatchResult, PanelBuilder, PlayerMatchRow};
use schedule::{Matchmaker, ScheduledMatch};

/// Simulated timestamps start here (seconds since the UTC epoch).
pub const EPOCH_START: i64 = 1_700_000_000;

/// Realized ground truth of one simulation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimTruth {
    pub config: SimConfig,
    pub beta_true: EffectCells,
    /// Indexed like the panel's players (identifiers sort numerically).
    pub alpha_x: Vec<f64>,
    pub alpha_y: Vec<f64>,
    /// Per match, in generation order.
    pub shocks: Vec<f64>,
    /// Naive OLS limit in the two-player design.
    pub ols_plim: Option<f64>,
    /// Latent cut-off above which behaviour is flagged toxic.
    pub toxicity_threshold: f64,
    pub realized_toxic_rate: f64,
    pub mask: Option<ExposureMask>,
    /// Largest `|t − (a + M·t + e)|` over all generated matches.
    pub max_equilibrium_residual: f64,
    pub n_rows: usize,
    pub n_matches: usize,
}

impl SimTruth {
    /// Compact JSON for the truth sidecar: everything except the per-player
    /// and per-match vectors.
    pub fn sidecar(&self) -> serde_json::Value {
        serde_json::json!({
            "config": self.config,
            "beta_true": self.beta_true,
            "ols_plim": self.ols_plim,
            "toxicity_threshold": self.toxicity_threshold,
            "realized_toxic_rate": self.realized_toxic_rate,
            "mask": self.mask,
            "max_equilibrium_residual": self.max_equilibrium_residual,
            "n_rows": self.n_rows,
            "n_matches": self.n_matches,
        })
    }

    /// Coefficients the interaction design should recover, by regressor
    /// name: base = effect after a loss, `_x_win` = win minus loss.
    pub fn implied_coefficients(&self, scheme: Scheme, interactions: bool) -> Result<Vec<(String, f64)>> {
        let b = &self.beta_true;
        let cells: Vec<(&str, [f64; 2])> = match scheme {
            Scheme::OppTeam => {
                if b.diff_party != b.same_party {
                    return Err(Error::Config(
                        "teammate effects differ by party; use the party_split scheme".into(),
                    ));
                }
                vec![("opponents", b.opponents), ("teammates", b.diff_party)]
            }
            Scheme::PartySplit => vec![("different_party", b.diff_party), ("same_party", b.same_party)],
            Scheme::Pooled => {
                if b.opponents != b.diff_party || b.diff_party != b.same_party {
                    return Err(Error::Config("pooled scheme needs one effect for every context".into()));
                }
                vec![("others", b.opponents)]
            }
        };
        let mut out: Vec<(String, f64)> = cells.iter().map(|(n, c)| (n.to_string(), c[0])).collect();
        if interactions {
            out.extend(cells.iter().map(|(n, c)| (format!("{n}_x_win"), c[1] - c[0])));
        } else if cells.iter().any(|(_, c)| c[0] != c[1]) {
            return Err(Error::Config("win and loss effects differ; interactions are required".into()));
        }
        Ok(out)
    }
}

#[derive(Clone, Copy)]
struct SimRow {
    player: u32,
    team: u8,
    party: Option<u16>,
    result: MatchResult,
    latent: f64,
}

fn width(n: usize) -> usize {
    n.max(1).to_string().len()
}

fn match_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn normal<R: Rng>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Simulates a panel in the configured mode.
pub fn simulate(cfg: &SimConfig) -> Result<(MatchPanel, SimTruth)> {
    cfg.validate()?;
    let n_players = cfg.n_players;
    let n_matches = cfg.n_matches();
    let ts = cfg.team_size;
    let engagement = cfg.mode == SimMode::EngagementConfounded;
    let mask = cfg.mask();
    let player_ids: Vec<String> = {
        let w = width(n_players.saturating_sub(1));
        (0..n_players).map(|p| format!("p{p:0w$}")).collect()
    };
    let match_w = width(n_matches.saturating_sub(1));

    let mut prng = match_rng(cfg.seed, 0);
    let alpha_x: Vec<f64> = (0..n_players).map(|_| cfg.sigma_alpha_x * normal(&mut prng)).collect();
    let alpha_y: Vec<f64> = (0..n_players)
        .map(|_| cfg.alpha_y_mean + cfg.sigma_alpha_y * normal(&mut prng))
        .collect();
    let initial: Vec<i64> = (0..n_players)
        .map(|_| (prng.random::<f64>() * cfg.mean_gap_hours * 3600.0).round() as i64)
        .collect();
    let gap = (cfg.mean_gap_hours > 0.0)
        .then(|| Exp::new(1.0 / cfg.mean_gap_hours).expect("positive rate"));

    // Engagement toxicity is a probit with a fixed cut-off; reflection modes
    // threshold the equilibrium at the empirical quantile afterwards.
    let latent_sd = (cfg.sigma_alpha_x.powi(2)
        + (cfg.shock_toxicity_loading * cfg.sigma_match_shock).powi(2)
        + 1.0)
        .sqrt();
    let probit_cut = latent_sd
        * Normal::standard().inverse_cdf(1.0 - cfg.toxicity_base_rate);

    let mut mm = Matchmaker::new(&initial, ts, cfg.max_matches_per_player);
    let mut rows: Vec<SimRow> = Vec::with_capacity(n_matches * 2 * ts);
    let mut times: Vec<(i64, i64)> = Vec::with_capacity(n_matches);
    let mut shocks = Vec::with_capacity(n_matches);
    let mut max_resid: f64 = 0.0;
    let mut match_id = String::new();

    for m in 0..n_matches {
        let mut rng = match_rng(cfg.seed, m as u64 + 1);
        let sched: ScheduledMatch = mm.next_match(
            &mut rng,
            cfg.match_duration_secs,
            cfg.party_prob,
            cfg.max_party_size,
            cfg.draw_prob,
        )?;
        let size = sched.slots.len();
        let shock = cfg.sigma_match_shock * normal(&mut rng);
        shocks.push(shock);
        match_id.clear();
        match_id.push_str(&format!("m{m:0match_w$}"));

        // Who hears whom: heard[j * size + k] means j is exposed to k.
        let heard: Vec<bool> = match &mask {
            None => (0..size * size).map(|i| i / size != i % size).collect(),
            Some(mask) => (0..size * size)
                .map(|i| {
                    let (j, k) = (i / size, i % size);
                    j != k
                        && mask.observed(
                            &match_id,
                            &player_ids[sched.slots[k].player as usize],
                            &player_ids[sched.slots[j].player as usize],
                            sched.slots[j].team == sched.slots[k].team,
                        )
                })
                .collect(),
        };
        let effect = |j: usize, k: usize| {
            let (a, b) = (&sched.slots[j], &sched.slots[k]);
            cfg.beta.get(a.team == b.team, a.party.is_some() && a.party == b.party, a.result)
        };
        let loss_shift = |j: usize| {
            if sched.slots[j].result == MatchResult::Loss {
                cfg.win_toxicity_shift
            } else {
                0.0
            }
        };

        let mut latent = vec![0.0; size];
        if engagement {
            for (j, slot) in sched.slots.iter().enumerate() {
                latent[j] = alpha_x[slot.player as usize]
                    + cfg.shock_toxicity_loading * shock
                    + loss_shift(j)
                    + normal(&mut rng);
            }
            for (j, slot) in sched.slots.iter().enumerate() {
                let mut y = alpha_y[slot.player as usize] + shock + cfg.sigma_eps * normal(&mut rng);
                if slot.result == MatchResult::Win {
                    y += cfg.win_effect;
                }
                for k in 0..size {
                    if heard[j * size + k] && latent[k] > probit_cut {
                        y += effect(j, k);
                    }
                }
                let wait = (y.max(0.0) * 3600.0).round() as i64;
                mm.release(slot.player, sched.end + wait);
            }
        } else {
            let a: Vec<f64> = (0..size)
                .map(|j| {
                    alpha_x[sched.slots[j].player as usize]
                        + cfg.shock_toxicity_loading * shock
                        + loss_shift(j)
                })
                .collect();
            let e: Vec<f64> = (0..size).map(|_| cfg.sigma_eps * normal(&mut rng)).collect();
            let system = DMatrix::from_fn(size, size, |j, k| {
                if heard[j * size + k] {
                    effect(j, k)
                } else {
                    0.0
                }
            });
            if inf_norm(&system) >= 1.0 {
                let r = spectral_radius(&system);
                if r >= 1.0 {
                    return Err(Error::Config(format!(
                        "spectral radius condition violated: the within-match system of match {match_id} has spectral radius {r:.4} >= 1"
                    )));
                }
            }
            latent = equilibrium_solve(&a, &e, 1.0, &system)?;
            for j in 0..size {
                let implied: f64 = a[j] + e[j] + (0..size).map(|k| system[(j, k)] * latent[k]).sum::<f64>();
                max_resid = max_resid.max((latent[j] - implied).abs());
            }
            for slot in &sched.slots {
                let wait = match &gap {
                    Some(g) => (rng.sample(g) * 3600.0).round() as i64,
                    None => 0,
                };
                mm.release(slot.player, sched.end + wait);
            }
        }

        times.push((sched.start, sched.end));
        for (slot, l) in sched.slots.iter().zip(&latent) {
            rows.push(SimRow {
                player: slot.player,
                team: slot.team,
                party: slot.party,
                result: slot.result,
                latent: *l,
            });
        }
    }

    let threshold = if engagement || rows.is_empty() {
        probit_cut
    } else {
        let mut sorted: Vec<f64> = rows.iter().map(|r| r.latent).collect();
        let idx = (((1.0 - cfg.toxicity_base_rate) * sorted.len() as f64) as usize).min(sorted.len() - 1);
        let (_, v, _) = sorted.select_nth_unstable_by(idx, f64::total_cmp);
        *v
    };

    let mut builder = PanelBuilder::new(cfg.party_prob > 0.0);
    let mut toxic_rows = 0usize;
    let per_match = 2 * ts;
    for (m, chunk) in rows.chunks(per_match).enumerate() {
        let id = format!("m{m:0match_w$}");
        let (start, end) = times[m];
        for r in chunk {
            let toxic = r.latent > threshold;
            toxic_rows += usize::from(toxic);
            builder.push(PlayerMatchRow {
                match_id: id.clone(),
                player_id: player_ids[r.player as usize].clone(),
                team_id: r.team,
                party_id: r.party.map(|p| format!("{id}-{p}")),
                match_start: EPOCH_START + start,
                match_end: EPOCH_START + end,
                used_toxic: toxic,
                result: r.result,
                intensity: cfg.export_intensity.then_some(r.latent),
            })?;
        }
    }
    let n_rows = rows.len();
    drop(rows);
    let panel = builder.finish()?;

    let ols_plim = if cfg.mode == SimMode::TwoPlayerReflection {
        Some(ols_plim_reflection(cfg.beta.opponents[0], cfg.sigma_alpha_x.powi(2), cfg.sigma_eps.powi(2))?)
    } else {
        None
    };
    let truth = SimTruth {
        config: cfg.clone(),
        beta_true: cfg.beta,
        alpha_x,
        alpha_y,
        shocks,
        ols_plim,
        toxicity_threshold: threshold,
        realized_toxic_rate: if n_rows == 0 { 0.0 } else { toxic_rows as f64 / n_rows as f64 },
        mask,
        max_equilibrium_residual: max_resid,
        n_rows,
        n_matches,
    };
    Ok((panel, truth))
}

/// Engagement-mode simulation; errors if `cfg.mode` is another mode.
pub fn simulate_engagement_panel(cfg: &SimConfig) -> Result<(MatchPanel, SimTruth)> {
    if cfg.mode != SimMode::EngagementConfounded {
        return Err(Error::Config("simulate_engagement_panel needs mode = engagement_confounded".into()));
    }
    simulate(cfg)
}

/// Reflection-mode simulation (many-player or two-player design).
pub fn simulate_propagation_panel(cfg: &SimConfig) -> Result<(MatchPanel, SimTruth)> {
    if cfg.mode == SimMode::EngagementConfounded {
        return Err(Error::Config("simulate_propagation_panel needs a reflection mode".into()));
    }
    simulate(cfg)
}
