use std::collections::HashMap;

use crate::statement::{ARG, VAL};

pub const UNK: &str = "<unk>";
pub const BOS: &str = "<s>";
pub const EOS: &str = "</s>";
pub const UNK_ID: usize = 0;
pub const BOS_ID: usize = 1;
pub const EOS_ID: usize = 2;

/// Tokens present in every vocabulary, in id order.
pub const RESERVED: [&str; 5] = [UNK, BOS, EOS, ARG, VAL];

/// Bidirectional token/id map. Unseen tokens look up as `<unk>`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    token_to_id: HashMap<String, usize>,
    id_to_token: Vec<String>,
}

impl Default for Vocabulary {
    fn default() -> Self {
        Self::from_tokens(std::iter::empty::<&str>())
    }
}

impl Vocabulary {
    /// Reserved tokens first, then the given tokens in order, skipping repeats.
    pub fn from_tokens<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut v = Self {
            token_to_id: HashMap::new(),
            id_to_token: Vec::new(),
        };
        for t in RESERVED {
            v.insert(t);
        }
        for t in tokens {
            v.insert(t.as_ref());
        }
        v
    }

    /// Build from a token list that must already start with the reserved block.
    pub fn from_id_order(tokens: Vec<String>) -> Option<Self> {
        if tokens.len() < RESERVED.len() || tokens.iter().zip(RESERVED).any(|(a, b)| a != b) {
            return None;
        }
        let token_to_id: HashMap<String, usize> =
            tokens.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        if token_to_id.len() != tokens.len() {
            return None;
        }
        Some(Self {
            token_to_id,
            id_to_token: tokens,
        })
    }

    fn insert(&mut self, token: &str) {
        if !self.token_to_id.contains_key(token) {
            self.token_to_id.insert(token.to_string(), self.id_to_token.len());
            self.id_to_token.push(token.to_string());
        }
    }

    pub fn len(&self) -> usize {
        self.id_to_token.len()
    }

    pub fn is_empty(&self) -> bool {
        self.id_to_token.is_empty()
    }

    pub fn contains(&self, token: &str) -> bool {
        self.token_to_id.contains_key(token)
    }

    pub fn id(&self, token: &str) -> usize {
        self.token_to_id.get(token).copied().unwrap_or(UNK_ID)
    }

    pub fn token(&self, id: usize) -> &str {
        &self.id_to_token[id]
    }

    pub fn tokens(&self) -> &[String] {
        &self.id_to_token
    }

    pub fn encode<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<usize> {
        tokens.iter().map(|t| self.id(t.as_ref())).collect()
    }

    pub fn decode(&self, ids: &[usize]) -> Vec<String> {
        ids.iter().map(|&i| self.id_to_token[i].clone()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reserved_ids_and_unknown_lookup() {
        let v = Vocabulary::from_tokens(["x", "y", "x"]);
        assert_eq!(v.len(), 7);
        assert_eq!(v.id(UNK), UNK_ID);
        assert_eq!(v.id(BOS), BOS_ID);
        assert_eq!(v.id(EOS), EOS_ID);
        assert_eq!(v.id("nope"), UNK_ID);
        assert_eq!(v.token(v.id("y")), "y");
        assert_eq!(Vocabulary::from_id_order(v.tokens().to_vec()), Some(v));
        assert_eq!(Vocabulary::from_id_order(vec!["a".into()]), None);
    }
}
