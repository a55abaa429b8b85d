//! Match telemetry ingestion.
//!
//! Raw rows are interned into a compact, validated [`MatchPanel`] whose row
//! order is canonical: by player id, then chronologically by match. Two
//! panels built from the same row set are identical regardless of the
//! input order.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MAX_DIAGNOSTICS: usize = 50;
const SECONDS_PER_HOUR: f64 = 3600.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchResult {
    Win,
    Loss,
    Draw,
}

impl MatchResult {
    pub fn as_str(self) -> &'static str {
        match self {
            MatchResult::Win => "win",
            MatchResult::Loss => "loss",
            MatchResult::Draw => "draw",
        }
    }

    fn parse(raw: &str) -> Option<Self> {
        match raw.trim().to_ascii_lowercase().as_str() {
            "win" => Some(MatchResult::Win),
            "loss" => Some(MatchResult::Loss),
            "draw" => Some(MatchResult::Draw),
            _ => None,
        }
    }
}

/// One player's participation in one match, as it appears on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct PlayerMatchRow {
    pub match_id: String,
    pub player_id: String,
    pub team_id: u8,
    /// `None` for solo players.
    pub party_id: Option<String>,
    /// Seconds since the UTC epoch.
    pub match_start: i64,
    pub match_end: i64,
    pub used_toxic: bool,
    pub result: MatchResult,
    /// Continuous behaviour value, present only in continuous exports.
    pub intensity: Option<f64>,
}

/// Compact interned row. Indices refer to the owning [`MatchPanel`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PanelRow {
    /// Chronological match index: `a < b` iff match `a` is prior to `b`.
    pub match_idx: u32,
    pub player_idx: u32,
    pub team: u8,
    pub party: Option<u32>,
    pub used_toxic: bool,
    pub result: MatchResult,
    /// Position of this row within the player's own history.
    pub seq: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchMeta {
    pub id: String,
    pub start: i64,
    pub end: i64,
}

/// Column names and delimiter of the telemetry file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ColumnSchema {
    pub match_id: String,
    pub player_id: String,
    pub team_id: String,
    pub party_id: String,
    pub match_start: String,
    pub match_end: String,
    pub used_toxic: String,
    pub result: String,
    pub intensity: String,
    pub delimiter: u8,
}

impl Default for ColumnSchema {
    fn default() -> Self {
        Self {
            match_id: "match_id".into(),
            player_id: "player_id".into(),
            team_id: "team_id".into(),
            party_id: "party_id".into(),
            match_start: "match_start".into(),
            match_end: "match_end".into(),
            used_toxic: "used_toxic".into(),
            result: "result".into(),
            intensity: "intensity".into(),
            delimiter: b',',
        }
    }
}

/// A validated, immutable panel of player-match rows.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchPanel {
    rows: Vec<PanelRow>,
    players: Vec<String>,
    player_offsets: Vec<usize>,
    matches: Vec<MatchMeta>,
    match_offsets: Vec<usize>,
    match_members: Vec<u32>,
    parties: Vec<String>,
    intensity: Option<Vec<f64>>,
    has_party_column: bool,
}

impl MatchPanel {
    pub fn from_rows(rows: Vec<PlayerMatchRow>, has_party_column: bool) -> Result<Self> {
        let mut builder = PanelBuilder::new(has_party_column);
        for row in rows {
            builder.push(row)?;
        }
        builder.finish()
    }

    pub fn empty() -> Self {
        PanelBuilder::new(true).finish().expect("empty panel is valid")
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_players(&self) -> usize {
        self.players.len()
    }

    pub fn n_matches(&self) -> usize {
        self.matches.len()
    }

    pub fn rows(&self) -> &[PanelRow] {
        &self.rows
    }

    pub fn row(&self, idx: usize) -> &PanelRow {
        &self.rows[idx]
    }

    pub fn player_id(&self, player: u32) -> &str {
        &self.players[player as usize]
    }

    pub fn player_ids(&self) -> &[String] {
        &self.players
    }

    pub fn player_index(&self, id: &str) -> Option<u32> {
        self.players
            .binary_search_by(|p| p.as_str().cmp(id))
            .ok()
            .map(|i| i as u32)
    }

    /// Row range of one player, in chronological order.
    pub fn player_rows(&self, player: u32) -> Range<usize> {
        let p = player as usize;
        self.player_offsets[p]..self.player_offsets[p + 1]
    }

    pub fn match_meta(&self, match_idx: u32) -> &MatchMeta {
        &self.matches[match_idx as usize]
    }

    pub fn matches(&self) -> &[MatchMeta] {
        &self.matches
    }

    pub fn match_index(&self, id: &str) -> Option<u32> {
        self.matches.iter().position(|m| m.id == id).map(|i| i as u32)
    }

    /// Row indices of a match's participants, ordered by team then player.
    pub fn match_rows(&self, match_idx: u32) -> &[u32] {
        let m = match_idx as usize;
        &self.match_members[self.match_offsets[m]..self.match_offsets[m + 1]]
    }

    pub fn party_id(&self, party: u32) -> &str {
        &self.parties[party as usize]
    }

    pub fn has_party_column(&self) -> bool {
        self.has_party_column
    }

    /// Per-row continuous behaviour values, when the source carried them.
    pub fn intensity(&self) -> Option<&[f64]> {
        self.intensity.as_deref()
    }

    /// The panel's rows as owned records, in canonical order.
    pub fn to_records(&self) -> Vec<PlayerMatchRow> {
        (0..self.rows.len()).map(|i| self.record(i)).collect()
    }

    pub fn record(&self, idx: usize) -> PlayerMatchRow {
        let r = &self.rows[idx];
        let m = &self.matches[r.match_idx as usize];
        PlayerMatchRow {
            match_id: m.id.clone(),
            player_id: self.players[r.player_idx as usize].clone(),
            team_id: r.team,
            party_id: r.party.map(|p| self.parties[p as usize].clone()),
            match_start: m.start,
            match_end: m.end,
            used_toxic: r.used_toxic,
            result: r.result,
            intensity: self.intensity.as_ref().map(|v| v[idx]),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct RawRow {
    match_key: u32,
    player_key: u32,
    team: u8,
    party_key: Option<u32>,
    start: i64,
    end: i64,
    used_toxic: bool,
    result: MatchResult,
    intensity: f64,
}

/// Streaming interner; rows are validated and canonicalised in [`finish`].
///
/// [`finish`]: PanelBuilder::finish
#[derive(Debug)]
pub struct PanelBuilder {
    has_party_column: bool,
    match_keys: HashMap<String, u32>,
    match_names: Vec<String>,
    player_keys: HashMap<String, u32>,
    player_names: Vec<String>,
    party_keys: HashMap<String, u32>,
    party_names: Vec<String>,
    raw: Vec<RawRow>,
    with_intensity: usize,
    diagnostics: Vec<String>,
    n_problems: usize,
}

fn intern(keys: &mut HashMap<String, u32>, names: &mut Vec<String>, value: &str) -> u32 {
    if let Some(&k) = keys.get(value) {
        return k;
    }
    let k = names.len() as u32;
    keys.insert(value.to_owned(), k);
    names.push(value.to_owned());
    k
}

impl PanelBuilder {
    pub fn new(has_party_column: bool) -> Self {
        Self {
            has_party_column,
            match_keys: HashMap::new(),
            match_names: Vec::new(),
            player_keys: HashMap::new(),
            player_names: Vec::new(),
            party_keys: HashMap::new(),
            party_names: Vec::new(),
            raw: Vec::new(),
            with_intensity: 0,
            diagnostics: Vec::new(),
            n_problems: 0,
        }
    }

    fn problem(&mut self, msg: String) {
        self.n_problems += 1;
        if self.diagnostics.len() < MAX_DIAGNOSTICS {
            self.diagnostics.push(msg);
        }
    }

    /// Adds one row. Per-row invariant violations are recorded and reported
    /// together by [`PanelBuilder::finish`].
    pub fn push(&mut self, row: PlayerMatchRow) -> Result<()> {
        self.push_parts(
            &row.match_id,
            &row.player_id,
            row.team_id,
            row.party_id.as_deref(),
            row.match_start,
            row.match_end,
            row.used_toxic,
            row.result,
            row.intensity,
        );
        Ok(())
    }

    #[allow(clippy::too_many_arguments)]
    fn push_parts(
        &mut self,
        match_id: &str,
        player_id: &str,
        team: u8,
        party: Option<&str>,
        start: i64,
        end: i64,
        used_toxic: bool,
        result: MatchResult,
        intensity: Option<f64>,
    ) {
        let line = self.raw.len() + 1;
        if end < start {
            self.problem(format!(
                "row {line} (match {match_id}, player {player_id}): match_end {end} precedes match_start {start}"
            ));
        }
        if team > 1 {
            self.problem(format!(
                "row {line} (match {match_id}, player {player_id}): team_id must be 0 or 1, got {team}"
            ));
        }
        if intensity.is_some() {
            self.with_intensity += 1;
        }
        let match_key = intern(&mut self.match_keys, &mut self.match_names, match_id);
        let player_key = intern(&mut self.player_keys, &mut self.player_names, player_id);
        let party_key = party.map(|p| intern(&mut self.party_keys, &mut self.party_names, p));
        self.raw.push(RawRow {
            match_key,
            player_key,
            team,
            party_key,
            start,
            end,
            used_toxic,
            result,
            intensity: intensity.unwrap_or(f64::NAN),
        });
    }

    pub fn finish(mut self) -> Result<MatchPanel> {
        if self.with_intensity != 0 && self.with_intensity != self.raw.len() {
            let n = self.raw.len() - self.with_intensity;
            self.problem(format!("intensity column is missing on {n} row(s)"));
        }

        // Canonical player and party numbering: sorted by identifier.
        let player_rank = rank_by_name(&self.player_names);
        let party_rank = rank_by_name(&self.party_names);
        let mut players = self.player_names.clone();
        players.sort_unstable();
        let mut parties = self.party_names.clone();
        parties.sort_unstable();

        // Group rows by match.
        let n_match_keys = self.match_names.len();
        let mut by_match: Vec<Vec<u32>> = vec![Vec::new(); n_match_keys];
        for (i, r) in self.raw.iter().enumerate() {
            by_match[r.match_key as usize].push(i as u32);
        }
        let mut match_time = vec![(0i64, 0i64); n_match_keys];
        for (key, members) in by_match.iter().enumerate() {
            let first = &self.raw[members[0] as usize];
            match_time[key] = (first.start, first.end);
        }
        let mut order: Vec<u32> = (0..n_match_keys as u32).collect();
        order.sort_unstable_by(|&a, &b| {
            match_time[a as usize]
                .0
                .cmp(&match_time[b as usize].0)
                .then_with(|| self.match_names[a as usize].cmp(&self.match_names[b as usize]))
        });
        let mut chrono = vec![0u32; n_match_keys];
        for (pos, &key) in order.iter().enumerate() {
            chrono[key as usize] = pos as u32;
        }

        for key in 0..n_match_keys {
            let problems = self.validate_match(key, &by_match[key]);
            for p in problems {
                self.problem(p);
            }
        }
        if self.n_problems > 0 {
            let mut diags = std::mem::take(&mut self.diagnostics);
            if self.n_problems > diags.len() {
                diags.push(format!("... and {} more", self.n_problems - diags.len()));
            }
            return Err(Error::Validation(diags));
        }

        let matches: Vec<MatchMeta> = order
            .iter()
            .map(|&key| MatchMeta {
                id: self.match_names[key as usize].clone(),
                start: match_time[key as usize].0,
                end: match_time[key as usize].1,
            })
            .collect();

        let has_intensity = self.with_intensity > 0;
        let mut rows: Vec<(PanelRow, f64)> = self
            .raw
            .iter()
            .map(|r| {
                (
                    PanelRow {
                        match_idx: chrono[r.match_key as usize],
                        player_idx: player_rank[r.player_key as usize],
                        team: r.team,
                        party: r.party_key.map(|p| party_rank[p as usize]),
                        used_toxic: r.used_toxic,
                        result: r.result,
                        seq: 0,
                    },
                    r.intensity,
                )
            })
            .collect();
        drop(std::mem::take(&mut self.raw));
        rows.sort_unstable_by_key(|(r, _)| (r.player_idx, r.match_idx));

        let mut player_offsets = vec![0usize; players.len() + 1];
        for (r, _) in &rows {
            player_offsets[r.player_idx as usize + 1] += 1;
        }
        for p in 0..players.len() {
            player_offsets[p + 1] += player_offsets[p];
        }
        for p in 0..players.len() {
            for (seq, i) in (player_offsets[p]..player_offsets[p + 1]).enumerate() {
                rows[i].0.seq = seq as u32;
            }
        }

        let mut match_offsets = vec![0usize; matches.len() + 1];
        for (r, _) in &rows {
            match_offsets[r.match_idx as usize + 1] += 1;
        }
        for m in 0..matches.len() {
            match_offsets[m + 1] += match_offsets[m];
        }
        let mut fill = match_offsets.clone();
        let mut match_members = vec![0u32; rows.len()];
        for (i, (r, _)) in rows.iter().enumerate() {
            let slot = &mut fill[r.match_idx as usize];
            match_members[*slot] = i as u32;
            *slot += 1;
        }
        for m in 0..matches.len() {
            match_members[match_offsets[m]..match_offsets[m + 1]]
                .sort_unstable_by_key(|&i| (rows[i as usize].0.team, rows[i as usize].0.player_idx));
        }

        let intensity = has_intensity.then(|| rows.iter().map(|(_, v)| *v).collect());
        let rows = rows.into_iter().map(|(r, _)| r).collect();

        Ok(MatchPanel {
            rows,
            players,
            player_offsets,
            matches,
            match_offsets,
            match_members,
            parties,
            intensity,
            has_party_column: self.has_party_column,
        })
    }

    fn validate_match(&self, key: usize, members: &[u32]) -> Vec<String> {
        let id = &self.match_names[key];
        let mut problems = Vec::new();
        let first = &self.raw[members[0] as usize];

        if members
            .iter()
            .any(|&i| self.raw[i as usize].start != first.start || self.raw[i as usize].end != first.end)
        {
            problems.push(format!("match {id}: rows disagree on match_start/match_end"));
        }

        let mut seen: Vec<u32> = members.iter().map(|&i| self.raw[i as usize].player_key).collect();
        seen.sort_unstable();
        if seen.windows(2).any(|w| w[0] == w[1]) {
            problems.push(format!("match {id}: duplicate (match_id, player_id) pair"));
        }

        let mut team_size = [0usize; 2];
        let mut team_result: [Option<MatchResult>; 2] = [None, None];
        let mut mixed_result = false;
        for &i in members {
            let r = &self.raw[i as usize];
            let t = (r.team as usize).min(1);
            team_size[t] += 1;
            match team_result[t] {
                None => team_result[t] = Some(r.result),
                Some(prev) if prev != r.result => mixed_result = true,
                _ => {}
            }
        }
        if team_size[0] == 0 || team_size[1] == 0 {
            problems.push(format!("match {id}: expected two teams, found one"));
        } else if team_size[0] != team_size[1] {
            problems.push(format!(
                "match {id}: unequal team sizes {} vs {}",
                team_size[0], team_size[1]
            ));
        }
        if mixed_result {
            problems.push(format!("match {id}: teammates disagree on result"));
        } else if let [Some(a), Some(b)] = team_result {
            let ok = matches!(
                (a, b),
                (MatchResult::Win, MatchResult::Loss)
                    | (MatchResult::Loss, MatchResult::Win)
                    | (MatchResult::Draw, MatchResult::Draw)
            );
            if !ok {
                problems.push(format!(
                    "match {id}: inconsistent results {} vs {}",
                    a.as_str(),
                    b.as_str()
                ));
            }
        }

        let mut party_team: HashMap<u32, u8> = HashMap::new();
        for &i in members {
            let r = &self.raw[i as usize];
            if let Some(p) = r.party_key {
                if *party_team.entry(p).or_insert(r.team) != r.team {
                    problems.push(format!(
                        "match {id}: party {} split across teams",
                        self.party_names[p as usize]
                    ));
                    break;
                }
            }
        }
        problems
    }
}

fn rank_by_name(names: &[String]) -> Vec<u32> {
    let mut order: Vec<u32> = (0..names.len() as u32).collect();
    order.sort_unstable_by(|&a, &b| names[a as usize].cmp(&names[b as usize]));
    let mut rank = vec![0u32; names.len()];
    for (pos, &key) in order.iter().enumerate() {
        rank[key as usize] = pos as u32;
    }
    rank
}

fn parse_bool(raw: &str) -> Option<bool> {
    match raw.trim() {
        "1" => Some(true),
        "0" => Some(false),
        s if s.eq_ignore_ascii_case("true") => Some(true),
        s if s.eq_ignore_ascii_case("false") => Some(false),
        _ => None,
    }
}

/// Reads delimiter-separated telemetry with a header row into a validated panel.
pub fn load_match_rows<R: Read>(source: R, schema: &ColumnSchema) -> Result<MatchPanel> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(schema.delimiter)
        .has_headers(true)
        .from_reader(source);
    let headers = reader.headers()?.clone();
    let find = |name: &str| headers.iter().position(|h| h.trim() == name);
    let required = |name: &str| find(name).ok_or_else(|| Error::MissingColumn(name.to_owned()));

    let c_match = required(&schema.match_id)?;
    let c_player = required(&schema.player_id)?;
    let c_team = required(&schema.team_id)?;
    let c_start = required(&schema.match_start)?;
    let c_end = required(&schema.match_end)?;
    let c_toxic = required(&schema.used_toxic)?;
    let c_result = required(&schema.result)?;
    let c_party = find(&schema.party_id);
    let c_intensity = find(&schema.intensity);

    let mut builder = PanelBuilder::new(c_party.is_some());
    let mut record = csv::StringRecord::new();
    let mut line = 1usize;
    while reader.read_record(&mut record)? {
        line += 1;
        let field = |c: usize| record.get(c).unwrap_or("");
        let team = field(c_team).trim().parse::<u8>();
        let start = field(c_start).trim().parse::<i64>();
        let end = field(c_end).trim().parse::<i64>();
        let toxic = parse_bool(field(c_toxic));
        let result = MatchResult::parse(field(c_result));
        let intensity = c_intensity.map(|c| field(c).trim().parse::<f64>());
        let (Ok(team), Ok(start), Ok(end), Some(toxic), Some(result)) =
            (team, start, end, toxic, result)
        else {
            builder.problem(format!("line {line}: unparseable field(s) in {:?}", record));
            continue;
        };
        let intensity = match intensity {
            None => None,
            Some(Ok(v)) if v.is_finite() => Some(v),
            Some(_) => {
                builder.problem(format!("line {line}: invalid intensity"));
                continue;
            }
        };
        let match_id = field(c_match).trim();
        let player_id = field(c_player).trim();
        if match_id.is_empty() || player_id.is_empty() {
            builder.problem(format!("line {line}: empty match_id or player_id"));
            continue;
        }
        let party = c_party.map(|c| field(c).trim()).filter(|p| !p.is_empty());
        builder.push_parts(match_id, player_id, team, party, start, end, toxic, result, intensity);
    }
    builder.finish()
}

/// Writes the panel in canonical row order using the given schema.
pub fn write_match_rows<W: Write>(panel: &MatchPanel, sink: W, schema: &ColumnSchema) -> Result<()> {
    let mut writer = csv::WriterBuilder::new()
        .delimiter(schema.delimiter)
        .from_writer(sink);
    let mut header = vec![
        schema.match_id.as_str(),
        schema.player_id.as_str(),
        schema.team_id.as_str(),
    ];
    if panel.has_party_column {
        header.push(&schema.party_id);
    }
    header.extend([
        schema.match_start.as_str(),
        schema.match_end.as_str(),
        schema.used_toxic.as_str(),
        schema.result.as_str(),
    ]);
    if panel.intensity.is_some() {
        header.push(&schema.intensity);
    }
    writer.write_record(&header)?;

    let mut fields: Vec<String> = Vec::with_capacity(header.len());
    for (i, r) in panel.rows.iter().enumerate() {
        let m = &panel.matches[r.match_idx as usize];
        fields.clear();
        fields.push(m.id.clone());
        fields.push(panel.players[r.player_idx as usize].clone());
        fields.push(r.team.to_string());
        if panel.has_party_column {
            fields.push(r.party.map(|p| panel.parties[p as usize].clone()).unwrap_or_default());
        }
        fields.push(m.start.to_string());
        fields.push(m.end.to_string());
        fields.push(if r.used_toxic { "1" } else { "0" }.to_owned());
        fields.push(r.result.as_str().to_owned());
        if let Some(v) = &panel.intensity {
            fields.push(v[i].to_string());
        }
        writer.write_record(&fields)?;
    }
    writer.flush()?;
    Ok(())
}

/// Hours from the end of each match to the same player's next match start.
///
/// `None` on each player's last observed row.
pub fn derive_time_to_next_match(panel: &MatchPanel) -> Result<Vec<Option<f64>>> {
    let mut out = vec![None; panel.n_rows()];
    for p in 0..panel.n_players() as u32 {
        let range = panel.player_rows(p);
        for i in range.start..range.end.saturating_sub(1) {
            let cur = panel.match_meta(panel.rows[i].match_idx);
            let next = panel.match_meta(panel.rows[i + 1].match_idx);
            let gap = next.start - cur.end;
            if gap < 0 {
                return Err(Error::Data(format!(
                    "player {} starts match {} before match {} ends",
                    panel.player_id(p),
                    next.id,
                    cur.id
                )));
            }
            out[i] = Some(gap as f64 / SECONDS_PER_HOUR);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = "match_id,player_id,team_id,party_id,match_start,match_end,used_toxic,result\n";

    fn load(body: &str) -> Result<MatchPanel> {
        let text = format!("{HEADER}{body}");
        load_match_rows(text.as_bytes(), &ColumnSchema::default())
    }

    #[test]
    fn minimal_two_v_two() {
        let panel = load(
            "m1,a,0,,0,600,0,win\nm1,b,0,,0,600,1,win\nm1,c,1,,0,600,0,loss\nm1,d,1,,0,600,0,loss\n",
        )
        .unwrap();
        assert_eq!(panel.n_rows(), 4);
        assert_eq!(panel.n_matches(), 1);
        assert_eq!(panel.n_players(), 4);
        assert!(panel.has_party_column());
        assert_eq!(panel.match_rows(0).len(), 4);
    }

    #[test]
    fn unequal_teams_rejected_with_match_id() {
        let err = load(
            "bad,a,0,,0,600,0,win\nbad,b,0,,0,600,0,win\nbad,c,0,,0,600,0,win\nbad,d,1,,0,600,0,loss\n",
        )
        .unwrap_err();
        match err {
            Error::Validation(msgs) => assert!(msgs.iter().any(|m| m.contains("bad") && m.contains("unequal"))),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_column_named() {
        let text = "match_id,player_id,team_id,match_start,match_end,result\nm,a,0,0,1,win\n";
        let err = load_match_rows(text.as_bytes(), &ColumnSchema::default()).unwrap_err();
        assert!(matches!(err, Error::MissingColumn(c) if c == "used_toxic"));
    }

    #[test]
    fn duplicate_pair_rejected() {
        let err = load("m,a,0,,0,6,0,win\nm,a,0,,0,6,0,win\nm,c,1,,0,6,0,loss\nm,d,1,,0,6,0,loss\n")
            .unwrap_err();
        assert!(matches!(err, Error::Validation(m) if m.iter().any(|s| s.contains("duplicate"))));
    }

    #[test]
    fn results_and_parties_validated() {
        let err = load("m,a,0,,0,6,0,win\nm,b,1,,0,6,0,win\n").unwrap_err();
        assert!(matches!(err, Error::Validation(m) if m.iter().any(|s| s.contains("inconsistent results"))));
        let err = load("m,a,0,p,0,6,0,win\nm,b,1,p,0,6,0,loss\n").unwrap_err();
        assert!(matches!(err, Error::Validation(m) if m.iter().any(|s| s.contains("split across teams"))));
        let err = load("m,a,0,,5,4,0,win\nm,b,1,,5,4,0,loss\n").unwrap_err();
        assert!(matches!(err, Error::Validation(m) if m.iter().any(|s| s.contains("precedes"))));
        assert!(load("m,a,0,,0,6,0,draw\nm,b,1,,0,6,0,draw\n").is_ok());
    }

    #[test]
    fn time_to_next_match_in_hours() {
        // ends 10:00, next starts 12:30; then a gap of exactly one day.
        let h = 3600;
        let body = format!(
            "m1,a,0,,{},{},0,win\nm1,b,1,,{},{},0,loss\n\
             m2,a,0,,{},{},0,win\nm2,c,1,,{},{},0,loss\n\
             m3,a,0,,{},{},0,win\nm3,d,1,,{},{},0,loss\n",
            9 * h, 10 * h, 9 * h, 10 * h,
            12 * h + h / 2, 13 * h, 12 * h + h / 2, 13 * h,
            37 * h, 38 * h, 37 * h, 38 * h,
        );
        let panel = load(&body).unwrap();
        let y = derive_time_to_next_match(&panel).unwrap();
        let a = panel.player_index("a").unwrap();
        let r = panel.player_rows(a);
        assert_eq!(y[r.start], Some(2.5));
        assert_eq!(y[r.start + 1], Some(24.0));
        assert_eq!(y[r.start + 2], None);
        // exactly one missing per player
        assert_eq!(y.iter().filter(|v| v.is_none()).count(), panel.n_players());
    }

    #[test]
    fn overlapping_matches_are_a_data_error() {
        let body = "m1,a,0,,0,100,0,win\nm1,b,1,,0,100,0,loss\nm2,a,0,,50,150,0,win\nm2,c,1,,50,150,0,loss\n";
        let panel = load(body).unwrap();
        let err = derive_time_to_next_match(&panel).unwrap_err();
        assert!(matches!(err, Error::Data(m) if m.contains("player a")));
    }

    #[test]
    fn canonical_order_independent_of_input_order() {
        let a = "m2,x,0,,10,20,1,loss\nm2,y,1,,10,20,0,win\nm1,y,0,,0,5,0,draw\nm1,x,1,,0,5,1,draw\n";
        let b = "m1,x,1,,0,5,1,draw\nm2,y,1,,10,20,0,win\nm1,y,0,,0,5,0,draw\nm2,x,0,,10,20,1,loss\n";
        assert_eq!(load(a).unwrap(), load(b).unwrap());
    }

    #[test]
    fn write_then_load_round_trips() {
        let panel = load("m1,a,0,p1,0,6,1,win\nm1,b,0,p1,0,6,0,win\nm1,c,1,,0,6,0,loss\nm1,d,1,,0,6,0,loss\n")
            .unwrap();
        let mut buf = Vec::new();
        write_match_rows(&panel, &mut buf, &ColumnSchema::default()).unwrap();
        let back = load_match_rows(buf.as_slice(), &ColumnSchema::default()).unwrap();
        assert_eq!(back, panel);
        let mut again = Vec::new();
        write_match_rows(&back, &mut again, &ColumnSchema::default()).unwrap();
        assert_eq!(buf, again);
    }
}
