use serde::{Deserialize, Serialize};

use crate::textprep::{TokenizedDoc, Vocab, PAD_ID};

/// Pre-padded `rows × maxlen` matrix of vocabulary ids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SequenceBatch {
    ids: Vec<usize>,
    rows: usize,
    maxlen: usize,
}

impl SequenceBatch {
    /// Panics unless `ids.len() == rows * maxlen`.
    pub fn from_ids(ids: Vec<usize>, maxlen: usize) -> Self {
        assert!(maxlen >= 1, "maxlen must be at least 1");
        assert_eq!(ids.len() % maxlen, 0, "ids must fill whole rows");
        let rows = ids.len() / maxlen;
        SequenceBatch { ids, rows, maxlen }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.rows == 0
    }

    pub fn maxlen(&self) -> usize {
        self.maxlen
    }

    pub fn ids(&self) -> &[usize] {
        &self.ids
    }

    pub fn row(&self, r: usize) -> &[usize] {
        &self.ids[r * self.maxlen..(r + 1) * self.maxlen]
    }

    /// Position of the first non-padding id in row `r` (`maxlen` if the row is all padding).
    pub fn first_token(&self, r: usize) -> usize {
        self.row(r)
            .iter()
            .position(|&id| id != PAD_ID)
            .unwrap_or(self.maxlen)
    }

    pub fn select(&self, indices: &[usize]) -> SequenceBatch {
        let mut ids = Vec::with_capacity(indices.len() * self.maxlen);
        for &i in indices {
            ids.extend_from_slice(self.row(i));
        }
        SequenceBatch {
            ids,
            rows: indices.len(),
            maxlen: self.maxlen,
        }
    }

    pub fn max_id(&self) -> Option<usize> {
        self.ids.iter().copied().max()
    }
}

/// Maps tokens to ids (OOV → 1), keeps the last `maxlen` tokens and pre-pads with 0.
pub fn encode_sequences(vocab: &Vocab, docs: &[TokenizedDoc], maxlen: usize) -> SequenceBatch {
    assert!(maxlen >= 1, "maxlen must be at least 1");
    let mut ids = vec![PAD_ID; docs.len() * maxlen];
    for (row, doc) in ids.chunks_exact_mut(maxlen).zip(docs) {
        let tail = &doc.tokens[doc.tokens.len().saturating_sub(maxlen)..];
        let offset = maxlen - tail.len();
        for (slot, tok) in row[offset..].iter_mut().zip(tail) {
            *slot = vocab.id(tok);
        }
    }
    SequenceBatch::from_ids(ids, maxlen)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::textprep::{build_vocab, OOV_ID};
    use proptest::prelude::*;

    fn doc(t: &[&str]) -> TokenizedDoc {
        TokenizedDoc::new(t.iter().copied())
    }

    #[test]
    fn pre_pads() {
        let v = Vocab::from_parts(
            vec!["x".into(), "a".into(), "b".into()],
            vec![1, 1, 1],
            None,
        );
        let b = encode_sequences(&v, &[doc(&["a", "b"])], 5);
        assert_eq!(b.row(0), &[0, 0, 0, 3, 4]);
        assert_eq!(b.first_token(0), 3);
    }

    #[test]
    fn keeps_tail() {
        let words = ["a", "b", "c", "d", "e", "f", "g"];
        let v = build_vocab(&[doc(&words)], None);
        let b = encode_sequences(&v, &[doc(&words)], 5);
        let expected: Vec<usize> = words[2..].iter().map(|w| v.id(w)).collect();
        assert_eq!(b.row(0), expected.as_slice());
    }

    #[test]
    fn unknown_is_oov() {
        let v = build_vocab(&[doc(&["a"])], None);
        let b = encode_sequences(&v, &[doc(&["a", "zzz"])], 3);
        assert_eq!(b.row(0), &[0, v.id("a"), OOV_ID]);
    }

    #[test]
    fn empty_doc_is_all_padding() {
        let v = build_vocab(&[], None);
        let b = encode_sequences(&v, &[doc(&[])], 4);
        assert_eq!(b.row(0), &[0, 0, 0, 0]);
        assert_eq!(b.first_token(0), 4);
    }

    proptest! {
        #[test]
        fn ids_valid_and_padding_is_prefix(
            docs in proptest::collection::vec(proptest::collection::vec("[a-e]{1,2}", 0..12), 1..6),
            maxlen in 1usize..9,
        ) {
            let docs: Vec<TokenizedDoc> = docs.into_iter().map(TokenizedDoc::new).collect();
            let vocab = build_vocab(&docs[..docs.len() / 2 + 1], Some(4));
            let b = encode_sequences(&vocab, &docs, maxlen);
            prop_assert!(b.ids().iter().all(|&id| id < vocab.size_with_reserved()));
            for r in 0..b.rows() {
                let start = b.first_token(r);
                prop_assert!(b.row(r)[start..].iter().all(|&id| id != PAD_ID));
                prop_assert_eq!(maxlen - start, docs[r].len().min(maxlen));
            }
        }
    }
}
