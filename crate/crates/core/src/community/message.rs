use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::envcore::{pow_u128, GameSpec};
use crate::error::{Error, Result};

/// A token sequence over a game's vocabulary. The empty sequence is the null
/// message. Canonical form is the tokens joined by single spaces.
///
/// Ordering is shortest first, then lexicographic by token; every tie rule
/// over messages in this crate relies on it.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Message {
    tokens: Vec<String>,
}

impl Message {
    pub fn null() -> Self {
        Self::default()
    }

    pub fn new<S: Into<String>>(tokens: impl IntoIterator<Item = S>) -> Self {
        Self {
            tokens: tokens.into_iter().map(Into::into).collect(),
        }
    }

    /// Parses the canonical form; any whitespace separates tokens.
    pub fn parse(text: &str) -> Self {
        Self::new(text.split_whitespace())
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn is_null(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn canonical(&self) -> String {
        self.tokens.join(" ")
    }

    pub fn validate(&self, game: &GameSpec) -> Result<()> {
        if self.len() > game.max_msg_len() {
            return Err(Error::InvalidMessage(format!(
                "{:?} has {} tokens, limit is {}",
                self.canonical(),
                self.len(),
                game.max_msg_len()
            )));
        }
        if let Some(t) = self.tokens.iter().find(|t| !game.vocab().contains(t)) {
            return Err(Error::InvalidMessage(format!("token {t:?} not in vocabulary")));
        }
        Ok(())
    }
}

impl Ord for Message {
    fn cmp(&self, other: &Self) -> Ordering {
        self.len()
            .cmp(&other.len())
            .then_with(|| self.tokens.cmp(&other.tokens))
    }
}

impl PartialOrd for Message {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Message {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_null() {
            f.write_str("<null>")
        } else {
            f.write_str(&self.canonical())
        }
    }
}

impl Serialize for Message {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.canonical())
    }
}

impl<'de> Deserialize<'de> for Message {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        Ok(Message::parse(&text))
    }
}

/// All messages of length `0..=L` (or `1..=L` without the null message), sorted.
pub fn enumerate_messages(game: &GameSpec, include_null: bool) -> Result<Vec<Message>> {
    let v = game.vocab().len() as u128;
    let total: u128 = (0..=game.max_msg_len()).map(|l| pow_u128(v, l)).sum();
    if total > 2 * game.enumeration_cap() as u128 + 1 {
        return Err(Error::EnumerationCap {
            what: "message space",
            required: total,
            bound: game.enumeration_cap(),
        });
    }
    let mut out = Vec::with_capacity(total as usize);
    if include_null {
        out.push(Message::null());
    }
    let mut layer: Vec<Vec<String>> = vec![Vec::new()];
    for _ in 0..game.max_msg_len() {
        layer = layer
            .iter()
            .flat_map(|prefix| {
                game.vocab().iter().map(move |tok| {
                    let mut next = prefix.clone();
                    next.push(tok.clone());
                    next
                })
            })
            .collect();
        out.extend(layer.iter().cloned().map(|tokens| Message { tokens }));
    }
    out.sort();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordering_is_shortest_then_lexicographic() {
        let mut ms = vec![
            Message::parse("b"),
            Message::parse("a b"),
            Message::null(),
            Message::parse("a"),
            Message::parse("a a"),
        ];
        ms.sort();
        let canon: Vec<String> = ms.iter().map(Message::canonical).collect();
        assert_eq!(canon, ["", "a", "b", "a a", "a b"]);
    }

    #[test]
    fn enumeration_sizes() {
        let g = GameSpec::lewis(vec!["x", "y"], 0, vec!["a", "b", "c"], 2).unwrap();
        assert_eq!(enumerate_messages(&g, true).unwrap().len(), 1 + 3 + 9);
        let speaker = enumerate_messages(&g, false).unwrap();
        assert_eq!(speaker.len(), 12);
        assert_eq!(speaker[0], Message::parse("a"));
        assert!(speaker.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn validation() {
        let g = GameSpec::lewis(vec!["x", "y"], 0, vec!["a", "b"], 1).unwrap();
        assert!(Message::parse("a").validate(&g).is_ok());
        assert!(Message::null().validate(&g).is_ok());
        assert!(Message::parse("a b").validate(&g).is_err());
        assert!(Message::parse("z").validate(&g).is_err());
    }

    #[test]
    fn serializes_as_canonical_string() {
        let m = Message::parse("a  b");
        assert_eq!(serde_json::to_string(&m).unwrap(), "\"a b\"");
        let back: Message = serde_json::from_str("\"a b\"").unwrap();
        assert_eq!(back, m);
        let null: Message = serde_json::from_str("\"\"").unwrap();
        assert!(null.is_null());
    }
}
