//! Event-driven matchmaking: the players who have been ready longest are
//! drawn into the next match, split at random into two teams with parties
//! kept together.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::panel::MatchResult;

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Slot {
    pub player: u32,
    pub team: u8,
    /// Party number local to the match.
    pub party: Option<u16>,
    pub result: MatchResult,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct ScheduledMatch {
    /// Offset in seconds from the simulation epoch.
    pub start: i64,
    pub end: i64,
    /// Team 0 first.
    pub slots: Vec<Slot>,
}

pub(crate) struct Matchmaker {
    ready: BinaryHeap<Reverse<(i64, u32)>>,
    played: Vec<usize>,
    cap: usize,
    team_size: usize,
}

impl Matchmaker {
    pub fn new(initial_ready: &[i64], team_size: usize, cap: usize) -> Self {
        let ready = initial_ready
            .iter()
            .enumerate()
            .map(|(p, &t)| Reverse((t, p as u32)))
            .collect();
        Self { ready, played: vec![0; initial_ready.len()], cap, team_size }
    }

    /// Forms the next match; members must be handed back with
    /// [`Matchmaker::release`] once their next ready time is known.
    #[allow(clippy::too_many_arguments)]
    pub fn next_match<R: Rng>(
        &mut self,
        rng: &mut R,
        duration_secs: i64,
        party_prob: f64,
        max_party_size: usize,
        draw_prob: f64,
    ) -> Result<ScheduledMatch> {
        let size = 2 * self.team_size;
        if self.ready.len() < size {
            return Err(Error::Config(format!(
                "infeasible schedule: only {} players remain below the per-player match cap",
                self.ready.len()
            )));
        }
        let mut members = Vec::with_capacity(size);
        let mut start = 0;
        for _ in 0..size {
            let Reverse((t, p)) = self.ready.pop().expect("checked above");
            start = start.max(t);
            members.push(p);
        }
        members.shuffle(rng);
        let jitter = rng.random_range(0.75..1.25);
        let end = start + ((duration_secs as f64 * jitter).round() as i64).max(1);

        let results = if rng.random_bool(draw_prob) {
            [MatchResult::Draw, MatchResult::Draw]
        } else if rng.random_bool(0.5) {
            [MatchResult::Win, MatchResult::Loss]
        } else {
            [MatchResult::Loss, MatchResult::Win]
        };

        let mut slots = Vec::with_capacity(size);
        let mut next_party: u16 = 0;
        for team in 0..2u8 {
            let block = &members[team as usize * self.team_size..(team as usize + 1) * self.team_size];
            let mut i = 0;
            while i < block.len() {
                let remaining = block.len() - i;
                let mut len = 1;
                let mut party = None;
                if remaining >= 2 && party_prob > 0.0 && rng.random_bool(party_prob) {
                    len = rng.random_range(2..=max_party_size.max(2)).min(remaining);
                    party = Some(next_party);
                    next_party += 1;
                }
                for &player in &block[i..i + len] {
                    slots.push(Slot { player, team, party, result: results[team as usize] });
                }
                i += len;
            }
        }
        for s in &slots {
            self.played[s.player as usize] += 1;
        }
        Ok(ScheduledMatch { start, end, slots })
    }

    pub fn release(&mut self, player: u32, ready_at: i64) {
        if self.played[player as usize] < self.cap {
            self.ready.push(Reverse((ready_at, player)));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn teams_are_balanced_and_parties_stay_together() {
        let mut mm = Matchmaker::new(&[0, 5, 3, 9, 1, 2, 8, 7, 4, 6], 4, 100);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = mm.next_match(&mut rng, 1800, 0.8, 3, 0.0).unwrap();
        assert_eq!(m.slots.len(), 8);
        assert_eq!(m.start, 7);
        assert_eq!(m.slots.iter().filter(|s| s.team == 0).count(), 4);
        for a in &m.slots {
            for b in &m.slots {
                if a.party.is_some() && a.party == b.party {
                    assert_eq!(a.team, b.team);
                }
            }
            assert_ne!(a.result, MatchResult::Draw);
        }
        assert_ne!(m.slots[0].result, m.slots[7].result);
    }

    #[test]
    fn cap_exhausts_pool() {
        let mut mm = Matchmaker::new(&[0, 0], 1, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let m = mm.next_match(&mut rng, 60, 0.0, 2, 0.0).unwrap();
        for s in &m.slots {
            mm.release(s.player, m.end);
        }
        assert!(matches!(mm.next_match(&mut rng, 60, 0.0, 2, 0.0), Err(Error::Config(_))));
    }
}
