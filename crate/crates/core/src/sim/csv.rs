//! Trajectory export, one row per sample:
//! `time,x,y,z,vx,vy,vz,event`. Floats use Rust's shortest round-trip
//! formatting, so parsing a row recovers the exact `f64` values. Multiple
//! events on one sample are joined with `;`.

use crate::error::CampaignError;

use super::EpisodeResult;

pub const CSV_HEADER: &str = "time,x,y,z,vx,vy,vz,event";

#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub time: f64,
    pub position: [f64; 3],
    pub velocity: [f64; 3],
    pub events: Vec<String>,
}

pub fn trajectory_csv(result: &EpisodeResult) -> String {
    let mut out = String::with_capacity(result.trajectory.len() * 96);
    out.push_str(CSV_HEADER);
    out.push('\n');
    let mut events = result.events.iter().peekable();
    for s in &result.trajectory {
        let mut tokens = Vec::new();
        while let Some(e) = events.next_if(|e| e.step == s.step) {
            tokens.push(e.kind.token());
        }
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            s.time,
            s.position.x,
            s.position.y,
            s.position.z,
            s.velocity.x,
            s.velocity.y,
            s.velocity.z,
            tokens.join(";")
        ));
    }
    out
}

pub fn parse_trajectory_csv(text: &str) -> Result<Vec<CsvRow>, CampaignError> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == CSV_HEADER => {}
        other => {
            return Err(CampaignError::Csv(format!(
                "expected header `{CSV_HEADER}`, got {other:?}"
            )))
        }
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, line)| {
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 8 {
                return Err(CampaignError::Csv(format!(
                    "row {} has {} fields, expected 8",
                    i + 1,
                    fields.len()
                )));
            }
            let num = |k: usize| {
                fields[k]
                    .parse::<f64>()
                    .map_err(|e| CampaignError::Csv(format!("row {} field {}: {e}", i + 1, k + 1)))
            };
            Ok(CsvRow {
                time: num(0)?,
                position: [num(1)?, num(2)?, num(3)?],
                velocity: [num(4)?, num(5)?, num(6)?],
                events: fields[7]
                    .split(';')
                    .filter(|t| !t.is_empty())
                    .map(str::to_string)
                    .collect(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::SimConfig;
    use crate::sim::run_episode;
    use crate::situation::{Situation, SituationId};

    #[test]
    fn round_trips_exact_values() {
        let s = Situation::from_id(SituationId::new(1).unwrap());
        let result = run_episode(&s, &SimConfig::default(), &[], 0).unwrap();
        let text = trajectory_csv(&result);
        let rows = parse_trajectory_csv(&text).unwrap();
        assert_eq!(rows.len(), result.trajectory.len());
        for (row, state) in rows.iter().zip(&result.trajectory) {
            assert_eq!(row.time, state.time);
            assert_eq!(
                row.position,
                [state.position.x, state.position.y, state.position.z]
            );
            assert_eq!(
                row.velocity,
                [state.velocity.x, state.velocity.y, state.velocity.z]
            );
        }
        let tokens: usize = rows.iter().map(|r| r.events.len()).sum();
        assert_eq!(tokens, result.events.len());
    }

    #[test]
    fn rejects_bad_input() {
        assert!(parse_trajectory_csv("t,x\n").is_err());
        assert!(parse_trajectory_csv(&format!("{CSV_HEADER}\n1,2,3\n")).is_err());
        assert!(parse_trajectory_csv(&format!("{CSV_HEADER}\n1,2,3,4,5,6,x,\n")).is_err());
    }
}
