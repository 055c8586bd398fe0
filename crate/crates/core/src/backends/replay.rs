use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use super::{PolicyBackend, RolloutGroup, RolloutLogRecord};
use crate::error::{DatasetError, RolloutError};
use crate::layout::Canvas;

/// Serves responses recorded in a rollout log, in candidate-index order.
#[derive(Debug, Clone, Default)]
pub struct ReplayBackend {
    groups: BTreeMap<String, Vec<String>>,
}

impl ReplayBackend {
    pub fn load(path: &Path) -> Result<Self, RolloutError> {
        let text = fs::read_to_string(path).map_err(|source| DatasetError::Io { path: path.to_path_buf(), source })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, RolloutError> {
        let mut indexed: BTreeMap<String, Vec<(usize, String)>> = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let rec: RolloutLogRecord = serde_json::from_str(line).map_err(|e| DatasetError::Malformed {
                format: "rollout log",
                message: format!("line {}: {e}", lineno + 1),
            })?;
            indexed.entry(rec.canvas_id).or_default().push((rec.candidate_index, rec.raw));
        }
        let groups = indexed
            .into_iter()
            .map(|(id, mut v)| {
                v.sort_by_key(|(i, _)| *i);
                (id, v.into_iter().map(|(_, raw)| raw).collect())
            })
            .collect();
        Ok(Self { groups })
    }
}

impl PolicyBackend for ReplayBackend {
    fn rollout(&self, canvas: &Canvas, _template: &str, group_size: usize) -> Result<RolloutGroup, RolloutError> {
        let recorded = self.groups.get(&canvas.id).ok_or_else(|| RolloutError::ReplayMissing(canvas.id.clone()))?;
        if recorded.len() < group_size {
            return Err(RolloutError::ReplayShort {
                canvas_id: canvas.id.clone(),
                available: recorded.len(),
                requested: group_size,
            });
        }
        Ok(RolloutGroup::from_raw(canvas.id.clone(), recorded[..group_size].iter().cloned()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backends::RandomBackend;
    use crate::layout::ElementCategory;

    #[test]
    fn replays_recorded_group() {
        let canvas = Canvas::new("k", 100.0, 100.0, vec![], vec![ElementCategory::Text]).unwrap();
        let original = RandomBackend::new(1).rollout(&canvas, "", 3).unwrap();
        let mut log: Vec<String> = RolloutLogRecord::for_group(&original, None)
            .iter()
            .map(|r| serde_json::to_string(r).unwrap())
            .collect();
        log.reverse();
        let replay = ReplayBackend::parse(&log.join("\n")).unwrap();
        let again = replay.rollout(&canvas, "", 3).unwrap();
        assert_eq!(again.candidates, original.candidates);
        assert!(matches!(replay.rollout(&canvas, "", 4), Err(RolloutError::ReplayShort { .. })));
        let other = Canvas { id: "zz".into(), ..canvas };
        assert!(matches!(replay.rollout(&other, "", 1), Err(RolloutError::ReplayMissing(_))));
    }
}
