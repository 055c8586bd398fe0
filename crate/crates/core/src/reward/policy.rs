use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::layout::ElementCategory;

/// A party in a collision: an element category or a saliency region.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CollisionParty {
    Text,
    Logo,
    Underlay,
    Embellishment,
    Salient,
}

impl From<ElementCategory> for CollisionParty {
    fn from(c: ElementCategory) -> Self {
        match c {
            ElementCategory::Text => Self::Text,
            ElementCategory::Logo => Self::Logo,
            ElementCategory::Underlay => Self::Underlay,
            ElementCategory::Embellishment => Self::Embellishment,
        }
    }
}

const PARTIES: [CollisionParty; 5] = [
    CollisionParty::Text,
    CollisionParty::Logo,
    CollisionParty::Underlay,
    CollisionParty::Embellishment,
    CollisionParty::Salient,
];

/// Unordered pair, stored with the smaller party first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "[CollisionParty; 2]", into = "[CollisionParty; 2]")]
pub struct PartyPair(CollisionParty, CollisionParty);

impl PartyPair {
    pub fn new(a: CollisionParty, b: CollisionParty) -> Self {
        if a <= b {
            Self(a, b)
        } else {
            Self(b, a)
        }
    }
}

impl From<[CollisionParty; 2]> for PartyPair {
    fn from([a, b]: [CollisionParty; 2]) -> Self {
        Self::new(a, b)
    }
}

impl From<PartyPair> for [CollisionParty; 2] {
    fn from(p: PartyPair) -> Self {
        [p.0, p.1]
    }
}

/// Which overlaps count as collisions for the inverse collision rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompatibilityPolicy {
    pub penalized: BTreeSet<PartyPair>,
    pub exempt: BTreeSet<PartyPair>,
    /// Treat area outside the canvas as colliding with the exterior.
    pub boundary_obstacles: bool,
}

impl Default for CompatibilityPolicy {
    /// Every pair collides except underlay/text, including element/saliency
    /// pairs for all categories.
    fn default() -> Self {
        let exempt: BTreeSet<PartyPair> = [PartyPair::new(CollisionParty::Underlay, CollisionParty::Text)].into();
        let mut penalized = BTreeSet::new();
        for (i, &a) in PARTIES.iter().enumerate() {
            for &b in &PARTIES[i..] {
                let pair = PartyPair::new(a, b);
                if !(a == CollisionParty::Salient && b == CollisionParty::Salient) && !exempt.contains(&pair) {
                    penalized.insert(pair);
                }
            }
        }
        Self { penalized, exempt, boundary_obstacles: true }
    }
}

impl CompatibilityPolicy {
    pub fn penalizes(&self, a: CollisionParty, b: CollisionParty) -> bool {
        let pair = PartyPair::new(a, b);
        self.penalized.contains(&pair) && !self.exempt.contains(&pair)
    }

    pub fn validate(&self) -> Result<(), String> {
        match self.penalized.intersection(&self.exempt).next() {
            Some(p) => Err(format!("pair {:?} is both penalized and exempt", <[CollisionParty; 2]>::from(*p))),
            None => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_policy_shape() {
        let p = CompatibilityPolicy::default();
        p.validate().unwrap();
        assert!(!p.penalizes(CollisionParty::Text, CollisionParty::Underlay));
        assert!(!p.penalizes(CollisionParty::Underlay, CollisionParty::Text));
        assert!(p.penalizes(CollisionParty::Text, CollisionParty::Text));
        assert!(p.penalizes(CollisionParty::Underlay, CollisionParty::Salient));
        assert!(p.penalizes(CollisionParty::Logo, CollisionParty::Underlay));
        // 15 unordered pairs over five parties minus salient/salient and the exemption.
        assert_eq!(p.penalized.len(), 13);
    }

    #[test]
    fn pair_in_both_sets_is_invalid() {
        let mut p = CompatibilityPolicy::default();
        p.penalized.insert(PartyPair::new(CollisionParty::Text, CollisionParty::Underlay));
        assert!(p.validate().is_err());
    }

    #[test]
    fn pairs_serialize_as_arrays() {
        let pair = PartyPair::new(CollisionParty::Underlay, CollisionParty::Text);
        assert_eq!(serde_json::to_string(&pair).unwrap(), r#"["text","underlay"]"#);
        let back: PartyPair = serde_json::from_str(r#"["underlay","text"]"#).unwrap();
        assert_eq!(back, pair);
    }
}
