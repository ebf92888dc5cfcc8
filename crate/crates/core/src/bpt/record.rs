use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::TokenSequence;
use crate::error::{Error, Result};

/// JSON-lines form of a [`TokenSequence`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenRecord {
    pub id: String,
    pub vocab: u32,
    pub tokens: Vec<u32>,
    pub patch_spans: Vec<[usize; 2]>,
    pub face_spans: Vec<[usize; 2]>,
}

impl TokenRecord {
    pub fn new(id: impl Into<String>, seq: &TokenSequence) -> Self {
        TokenRecord {
            id: id.into(),
            vocab: seq.vocab_size,
            tokens: seq.tokens.clone(),
            patch_spans: seq.patch_spans.clone(),
            face_spans: seq.face_spans.clone(),
        }
    }

    /// Validates the span and vocabulary invariants.
    pub fn into_sequence(self) -> Result<TokenSequence> {
        let seq = TokenSequence {
            tokens: self.tokens,
            patch_spans: self.patch_spans,
            face_spans: self.face_spans,
            vocab_size: self.vocab,
        };
        if let Some(t) = seq.tokens.iter().find(|&&t| t >= seq.vocab_size) {
            return Err(Error::Consistency(format!(
                "record {}: token {t} >= vocab {}",
                self.id, seq.vocab_size
            )));
        }
        for spans in [&seq.patch_spans, &seq.face_spans] {
            if !tiles(spans, seq.tokens.len()) {
                return Err(Error::Consistency(format!(
                    "record {}: spans do not tile the token list",
                    self.id
                )));
            }
        }
        Ok(seq)
    }
}

fn tiles(spans: &[[usize; 2]], len: usize) -> bool {
    let mut at = 0;
    for s in spans {
        if s[0] != at || s[1] < s[0] {
            return false;
        }
        at = s[1];
    }
    at == len
}

pub fn read_token_records(path: impl AsRef<Path>) -> Result<Vec<TokenRecord>> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: i + 1,
            msg: e.to_string(),
        })?);
    }
    Ok(out)
}

pub fn write_token_records(path: impl AsRef<Path>, records: &[TokenRecord]) -> Result<()> {
    let path = path.as_ref();
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    for r in records {
        let line = serde_json::to_string(r)?;
        writeln!(file, "{line}").map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_shape_and_validation() {
        let seq = TokenSequence {
            tokens: vec![0, 1, 5, 1, 6, 2, 7],
            patch_spans: vec![[0, 7]],
            face_spans: vec![[0, 7]],
            vocab_size: 10,
        };
        let rec = TokenRecord::new("m0", &seq);
        let text = serde_json::to_string(&rec).unwrap();
        assert_eq!(
            text,
            r#"{"id":"m0","vocab":10,"tokens":[0,1,5,1,6,2,7],"patch_spans":[[0,7]],"face_spans":[[0,7]]}"#
        );
        let back: TokenRecord = serde_json::from_str(&text).unwrap();
        assert_eq!(back.clone().into_sequence().unwrap(), seq);

        let mut bad = back.clone();
        bad.face_spans = vec![[0, 3]];
        assert!(bad.into_sequence().is_err());
        let mut bad = back;
        bad.tokens[1] = 10;
        assert!(bad.into_sequence().is_err());
    }

    #[test]
    fn file_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.jsonl");
        let recs = vec![
            TokenRecord::new("a", &TokenSequence::default()),
            TokenRecord::new("b", &TokenSequence { tokens: vec![3], patch_spans: vec![[0, 1]], face_spans: vec![[0, 1]], vocab_size: 4 }),
        ];
        write_token_records(&p, &recs).unwrap();
        assert_eq!(read_token_records(&p).unwrap(), recs);
    }
}
