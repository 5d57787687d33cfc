use std::collections::HashMap;
use std::io::BufRead;

use crate::error::{Error, Result};

/// Pretrained word vectors: `token v1 … vd` per line.
#[derive(Clone, Debug, PartialEq)]
pub struct WordVectorTable {
    dim: usize,
    entries: HashMap<String, Vec<f64>>,
}

impl WordVectorTable {
    pub fn new(dim: usize, entries: HashMap<String, Vec<f64>>) -> Result<Self> {
        if let Some((tok, v)) = entries.iter().find(|(_, v)| v.len() != dim) {
            return Err(Error::Shape(format!(
                "vector for `{tok}` has {} values, expected {dim}",
                v.len()
            )));
        }
        Ok(WordVectorTable { dim, entries })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.entries.get(token).map(Vec::as_slice)
    }
}

/// Reads a word-vector text file. The dimension comes from the first line.
pub fn read_word_vectors(reader: impl BufRead, source: &str) -> Result<WordVectorTable> {
    let mut dim = None;
    let mut entries = HashMap::new();
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::parse(source, lineno, e.to_string()))?;
        let mut fields = line.split_whitespace();
        let Some(token) = fields.next() else { continue };
        let values = fields
            .map(|f| f.parse::<f64>().map_err(|_| Error::parse(source, lineno, format!("bad float `{f}`"))))
            .collect::<Result<Vec<_>>>()?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::parse(source, lineno, "non-finite value"));
        }
        let d = *dim.get_or_insert(values.len());
        if d == 0 || values.len() != d {
            return Err(Error::parse(
                source,
                lineno,
                format!("expected {d} values, found {}", values.len()),
            ));
        }
        if entries.insert(token.to_string(), values).is_some() {
            return Err(Error::parse(source, lineno, format!("duplicate token `{token}`")));
        }
    }
    let dim = dim.ok_or_else(|| Error::parse(source, 0, "empty word-vector file"))?;
    WordVectorTable::new(dim, entries)
}

#[derive(Clone, Debug, PartialEq)]
pub struct AveragedVector {
    pub vector: Vec<f64>,
    /// Number of tokens found in the table.
    pub matched: usize,
}

impl AveragedVector {
    /// Set when no token of the document was in the table.
    pub fn all_oov(&self) -> bool {
        self.matched == 0
    }
}

/// Mean of the vectors of in-table tokens; unknown tokens are skipped.
pub fn average_word_vectors(table: &WordVectorTable, doc: &[String]) -> AveragedVector {
    let mut sum = vec![0.0; table.dim];
    let mut matched = 0;
    for tok in doc {
        if let Some(v) = table.get(tok) {
            for (s, x) in sum.iter_mut().zip(v) {
                *s += x;
            }
            matched += 1;
        }
    }
    if matched > 0 {
        for s in &mut sum {
            *s /= matched as f64;
        }
    }
    AveragedVector { vector: sum, matched }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> WordVectorTable {
        read_word_vectors("lung 1 2\nclear -1 -2\nheart 0.5 0\n".as_bytes(), "mem").unwrap()
    }

    fn doc(s: &str) -> Vec<String> {
        s.split(' ').map(String::from).collect()
    }

    #[test]
    fn single_known_token() {
        let a = average_word_vectors(&table(), &doc("lung"));
        assert_eq!(a.vector, vec![1.0, 2.0]);
        assert!(!a.all_oov());
    }

    #[test]
    fn opposite_vectors_cancel() {
        let a = average_word_vectors(&table(), &doc("lung clear"));
        assert_eq!(a.vector, vec![0.0, 0.0]);
    }

    #[test]
    fn unknown_tokens_give_zero_and_flag() {
        let a = average_word_vectors(&table(), &doc("foo bar"));
        assert_eq!(a.vector, vec![0.0, 0.0]);
        assert!(a.all_oov());
        let b = average_word_vectors(&table(), &doc("foo heart lung"));
        assert_eq!(b.vector, vec![0.75, 1.0]);
        assert_eq!(b.matched, 2);
    }

    #[test]
    fn arity_error_names_line() {
        let err = read_word_vectors("a 1 2\nb 1\n".as_bytes(), "wv.txt").unwrap_err();
        assert!(err.to_string().starts_with("wv.txt:2:"), "{err}");
    }
}
