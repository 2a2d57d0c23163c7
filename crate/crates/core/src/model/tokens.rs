//! Tokenization of per-variable transition sets.
//!
//! Each observed pair `(state, bit)` becomes the single integer
//! `2 * state + bit`, so a labeled set over `n` variables uses ids in
//! `[0, 2^(n+1))`. The encoding is bijective per element; distinct states
//! guarantee distinct ids.

use crate::error::{Error, Result};
use crate::logic::{LabeledTransitions, State};

/// Token ids in presentation order. Order carries no meaning for the model;
/// it is preserved so that set-invariance can be observed from outside.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenSet {
    ids: Vec<u32>,
}

impl TokenSet {
    pub fn new(ids: Vec<u32>) -> Result<Self> {
        if ids.is_empty() {
            return Err(Error::EmptyInput("token set"));
        }
        let mut sorted = ids.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::CorruptRecord {
                kind: "token set",
                detail: "duplicate token id".into(),
            });
        }
        Ok(Self { ids })
    }

    pub fn ids(&self) -> &[u32] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Canonical ascending copy, used for deduplication and serialization.
    pub fn sorted_ids(&self) -> Vec<u32> {
        let mut ids = self.ids.clone();
        ids.sort_unstable();
        ids
    }
}

/// Encode a labeled transition set; errors on empty input.
pub fn tokenize(labeled: &LabeledTransitions) -> Result<TokenSet> {
    TokenSet::new(
        labeled
            .items()
            .map(|(state, label)| (state.bits() << 1 | label as u64) as u32)
            .collect(),
    )
}

/// Decode token ids back to the labeled set they encode.
pub fn detokenize(ids: &[u32], width: usize) -> LabeledTransitions {
    LabeledTransitions::new(
        width,
        ids.iter()
            .map(|&id| (State::new((id >> 1) as u64), id & 1 == 1)),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn token_formula() {
        let single = LabeledTransitions::new(3, [(State::new(0b010), true)]);
        assert_eq!(tokenize(&single).unwrap().ids(), &[5]);

        let zero = LabeledTransitions::new(3, [(State::new(0), false)]);
        assert_eq!(tokenize(&zero).unwrap().ids(), &[0]);
    }

    #[test]
    fn complete_set_tokens_are_distinct_and_bounded() {
        let labeled = LabeledTransitions::new(
            3,
            (0..8u64).map(|bits| (State::new(bits), bits % 3 == 0)),
        );
        let tokens = tokenize(&labeled).unwrap();
        assert_eq!(tokens.len(), 8);
        assert!(tokens.ids().iter().all(|&id| id < 16));
        let mut sorted = tokens.sorted_ids();
        sorted.dedup();
        assert_eq!(sorted.len(), 8);
    }

    #[test]
    fn empty_input_is_an_error() {
        let empty = LabeledTransitions::new(3, []);
        assert!(matches!(tokenize(&empty), Err(Error::EmptyInput(_))));
    }

    #[test]
    fn detokenize_inverts_tokenize() {
        let labeled = LabeledTransitions::new(
            4,
            (0..16u64).map(|bits| (State::new(bits), bits & 1 == 1)),
        );
        let tokens = tokenize(&labeled).unwrap();
        assert_eq!(detokenize(tokens.ids(), 4), labeled);
    }
}
