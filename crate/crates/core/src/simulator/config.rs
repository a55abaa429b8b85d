use serde::{Deserialize, Serialize};

use crate::design::ExposureMask;
use crate::error::{Error, Result};
use crate::panel::MatchResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimMode {
    /// Time to next match responds to exposure; a match shock confounds it.
    #[default]
    EngagementConfounded,
    /// Behaviour is jointly determined within each match.
    PropagationReflection,
    /// One-versus-one matches with a single symmetric reflection coefficient.
    TwoPlayerReflection,
}

impl SimMode {
    pub fn parse(raw: &str) -> Result<Self> {
        match raw.replace('-', "_").to_ascii_lowercase().as_str() {
            "engagement" | "engagement_confounded" => Ok(SimMode::EngagementConfounded),
            "propagation" | "propagation_reflection" => Ok(SimMode::PropagationReflection),
            "two_player" | "two_player_reflection" => Ok(SimMode::TwoPlayerReflection),
            _ => Err(Error::Config(format!("unknown simulator mode `{raw}`"))),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SimMode::EngagementConfounded => "engagement_confounded",
            SimMode::PropagationReflection => "propagation_reflection",
            SimMode::TwoPlayerReflection => "two_player_reflection",
        }
    }
}

/// Effect of one exposure, by source context and the exposed player's
/// result; each pair is `[loss, win]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EffectCells {
    pub opponents: [f64; 2],
    /// Teammates outside the player's party (all teammates of a solo player).
    pub diff_party: [f64; 2],
    pub same_party: [f64; 2],
}

impl EffectCells {
    pub fn uniform(beta: f64) -> Self {
        Self { opponents: [beta; 2], diff_party: [beta; 2], same_party: [beta; 2] }
    }

    pub fn get(&self, same_team: bool, same_party: bool, result: MatchResult) -> f64 {
        let cell = match (same_team, same_party) {
            (false, _) => &self.opponents,
            (true, false) => &self.diff_party,
            (true, true) => &self.same_party,
        };
        if result == MatchResult::Win {
            cell[1]
        } else {
            cell[0]
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.opponents
            .iter()
            .chain(&self.diff_party)
            .chain(&self.same_party)
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    fn all_finite(&self) -> bool {
        self.opponents.iter().chain(&self.diff_party).chain(&self.same_party).all(|v| v.is_finite())
    }
}

/// Generator parameters. Scales are standard deviations; times are hours
/// unless suffixed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub mode: SimMode,
    pub seed: u64,
    pub n_players: usize,
    /// Defaults to `n_players × matches_per_player / (2 × team_size)`.
    pub n_matches: Option<usize>,
    pub team_size: usize,
    pub matches_per_player: f64,
    pub max_matches_per_player: usize,
    pub party_prob: f64,
    pub max_party_size: usize,
    pub beta: EffectCells,
    /// Spread of persistent toxicity propensities.
    pub sigma_alpha_x: f64,
    /// Spread of persistent time-to-return levels.
    pub sigma_alpha_y: f64,
    pub alpha_y_mean: f64,
    /// Idiosyncratic noise of the structural outcome equation.
    pub sigma_eps: f64,
    pub sigma_match_shock: f64,
    /// How strongly the match shock moves toxicity (shock always moves
    /// time to next match one for one).
    pub shock_toxicity_loading: f64,
    pub toxicity_base_rate: f64,
    pub missingness: f64,
    pub audibility_opponents: f64,
    pub audibility_teammates: f64,
    pub draw_prob: f64,
    /// Direct effect of winning on hours to next match.
    pub win_effect: f64,
    /// Latent toxicity shift for players on the losing team; zero keeps
    /// results independent of behaviour.
    pub win_toxicity_shift: f64,
    pub mean_gap_hours: f64,
    pub match_duration_secs: i64,
    /// Write the latent behaviour as an `intensity` column.
    pub export_intensity: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self::for_mode(SimMode::EngagementConfounded)
    }
}

impl SimConfig {
    /// Mode-appropriate defaults.
    pub fn for_mode(mode: SimMode) -> Self {
        let base = Self {
            mode,
            seed: 0,
            n_players: 2000,
            n_matches: None,
            team_size: 4,
            matches_per_player: 12.44,
            max_matches_per_player: 500,
            party_prob: 0.3,
            max_party_size: 3,
            beta: EffectCells::uniform(20.0),
            sigma_alpha_x: 1.0,
            sigma_alpha_y: 10.0,
            alpha_y_mean: 48.0,
            sigma_eps: 6.0,
            sigma_match_shock: 2.0,
            shock_toxicity_loading: 0.25,
            toxicity_base_rate: 0.15,
            missingness: 0.0,
            audibility_opponents: 1.0,
            audibility_teammates: 1.0,
            draw_prob: 0.01,
            win_effect: -2.0,
            win_toxicity_shift: 0.0,
            mean_gap_hours: 24.0,
            match_duration_secs: 1800,
            export_intensity: false,
        };
        match mode {
            SimMode::EngagementConfounded => base,
            SimMode::PropagationReflection => Self {
                beta: EffectCells::uniform(0.1),
                sigma_eps: 1.0,
                sigma_match_shock: 0.0,
                export_intensity: true,
                ..base
            },
            SimMode::TwoPlayerReflection => Self {
                team_size: 1,
                party_prob: 0.0,
                beta: EffectCells::uniform(0.5),
                sigma_eps: 1.0,
                sigma_match_shock: 0.0,
                draw_prob: 0.0,
                export_intensity: true,
                ..base
            },
        }
    }

    pub fn n_matches(&self) -> usize {
        self.n_matches.unwrap_or_else(|| {
            let per_match = 2 * self.team_size.max(1);
            ((self.n_players as f64 * self.matches_per_player) / per_match as f64).round() as usize
        })
    }

    /// The exposure mask implied by the missingness and audibility settings,
    /// or `None` when every statement reaches every co-player.
    pub fn mask(&self) -> Option<ExposureMask> {
        let mask = ExposureMask {
            seed: self.seed ^ 0x6d61_736b,
            missingness: self.missingness,
            audibility_opponents: self.audibility_opponents,
            audibility_teammates: self.audibility_teammates,
        };
        (mask.missingness > 0.0 || mask.audibility_opponents < 1.0 || mask.audibility_teammates < 1.0)
            .then_some(mask)
    }

    pub fn validate(&self) -> Result<()> {
        let cfg = |msg: String| Err(Error::Config(msg));
        if self.team_size == 0 {
            return cfg("team_size must be at least 1".into());
        }
        if self.mode == SimMode::TwoPlayerReflection && self.team_size != 1 {
            return cfg("two_player_reflection requires team_size = 1".into());
        }
        if self.n_players < 2 * self.team_size {
            return cfg(format!(
                "n_players = {} cannot fill a match of {} players",
                self.n_players,
                2 * self.team_size
            ));
        }
        let needed = self.n_matches() as u128 * 2 * self.team_size as u128;
        let feasible = self.n_players as u128 * self.max_matches_per_player as u128;
        if needed > feasible {
            return cfg(format!(
                "infeasible schedule: {} matches need {needed} participations but {} players × {} matches allow {feasible}",
                self.n_matches(),
                self.n_players,
                self.max_matches_per_player
            ));
        }
        for (name, v) in [
            ("sigma_alpha_x", self.sigma_alpha_x),
            ("sigma_alpha_y", self.sigma_alpha_y),
            ("sigma_eps", self.sigma_eps),
            ("sigma_match_shock", self.sigma_match_shock),
            ("mean_gap_hours", self.mean_gap_hours),
            ("matches_per_player", self.matches_per_player),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return cfg(format!("{name} must be a finite non-negative number, got {v}"));
            }
        }
        for (name, p) in [
            ("party_prob", self.party_prob),
            ("toxicity_base_rate", self.toxicity_base_rate),
            ("draw_prob", self.draw_prob),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return cfg(format!("{name} must lie in [0, 1], got {p}"));
            }
        }
        if !(self.toxicity_base_rate > 0.0 && self.toxicity_base_rate < 1.0) {
            return cfg("toxicity_base_rate must lie strictly between 0 and 1".into());
        }
        if self.match_duration_secs <= 0 {
            return cfg("match_duration_secs must be positive".into());
        }
        if self.party_prob > 0.0 && self.max_party_size < 2 {
            return cfg("max_party_size must be at least 2 when parties are formed".into());
        }
        if !self.beta.all_finite()
            || !self.alpha_y_mean.is_finite()
            || !self.win_effect.is_finite()
            || !self.shock_toxicity_loading.is_finite()
            || !self.win_toxicity_shift.is_finite()
        {
            return cfg("effect parameters must be finite".into());
        }
        if let Some(mask) = self.mask() {
            mask.validate()?;
        }
        if self.mode != SimMode::EngagementConfounded && self.beta.max_abs() >= 1.0 {
            return cfg(format!(
                "spectral radius condition violated: |beta| = {} must be below 1 for the within-match system to have a unique stable solution",
                self.beta.max_abs()
            ));
        }
        Ok(())
    }
}
