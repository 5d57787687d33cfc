//! Core data containers shared by every stage.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::Matrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Modality {
    Text,
    Image,
}

impl Modality {
    pub fn as_str(self) -> &'static str {
        match self {
            Modality::Text => "text",
            Modality::Image => "image",
        }
    }
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Modality {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "text" => Ok(Modality::Text),
            "image" => Ok(Modality::Image),
            other => Err(Error::Param(format!("unknown modality `{other}`"))),
        }
    }
}

/// Ordered `(id, vector)` rows from one modality.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingSet {
    ids: Vec<String>,
    vectors: Matrix,
    modality: Modality,
    index: HashMap<String, usize>,
}

impl EmbeddingSet {
    pub fn new(ids: Vec<String>, vectors: Matrix, modality: Modality) -> Result<Self> {
        if ids.len() != vectors.rows() {
            return Err(Error::Shape(format!(
                "{} ids for {} vectors",
                ids.len(),
                vectors.rows()
            )));
        }
        if !vectors.is_finite() {
            return Err(Error::Param("embedding vectors contain non-finite values".into()));
        }
        let mut index = HashMap::with_capacity(ids.len());
        for (i, id) in ids.iter().enumerate() {
            if id.is_empty() || id.chars().any(char::is_whitespace) {
                return Err(Error::Param(format!("invalid id {id:?}")));
            }
            if index.insert(id.clone(), i).is_some() {
                return Err(Error::Param(format!("duplicate id `{id}`")));
            }
        }
        Ok(EmbeddingSet {
            ids,
            vectors,
            modality,
            index,
        })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.vectors.cols()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    /// `n × d`, one row per id.
    pub fn vectors(&self) -> &Matrix {
        &self.vectors
    }

    pub fn modality(&self) -> Modality {
        self.modality
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn vector(&self, id: &str) -> Option<&[f64]> {
        self.position(id).map(|i| self.vectors.row(i))
    }

    /// Replaces the vectors, keeping ids and modality.
    pub fn with_vectors(&self, vectors: Matrix) -> Result<Self> {
        Self::new(self.ids.clone(), vectors, self.modality)
    }

    /// Rows for `ids`, in that order.
    pub fn subset(&self, ids: &[String]) -> Result<Self> {
        let rows = ids
            .iter()
            .map(|id| {
                self.position(id)
                    .ok_or_else(|| Error::Param(format!("unknown id `{id}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(ids.to_vec(), self.vectors.select_rows(&rows), self.modality)
    }
}

/// Supervision: matched `(text_id, image_id)` pairs.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PairSet {
    pairs: Vec<(String, String)>,
}

impl PairSet {
    pub fn new(pairs: Vec<(String, String)>) -> Self {
        PairSet { pairs }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.pairs.iter().map(|(t, i)| (t.as_str(), i.as_str()))
    }

    pub fn as_slice(&self) -> &[(String, String)] {
        &self.pairs
    }

    pub fn text_ids(&self) -> Vec<String> {
        self.pairs.iter().map(|(t, _)| t.clone()).collect()
    }

    pub fn image_ids(&self) -> Vec<String> {
        self.pairs.iter().map(|(_, i)| i.clone()).collect()
    }

    /// Text id → all paired image ids.
    pub fn text_to_images(&self) -> HashMap<&str, HashSet<&str>> {
        let mut m: HashMap<&str, HashSet<&str>> = HashMap::new();
        for (t, i) in self.iter() {
            m.entry(t).or_default().insert(i);
        }
        m
    }

    /// Image id → all paired text ids.
    pub fn image_to_texts(&self) -> HashMap<&str, HashSet<&str>> {
        let mut m: HashMap<&str, HashSet<&str>> = HashMap::new();
        for (t, i) in self.iter() {
            m.entry(i).or_default().insert(t);
        }
        m
    }

    /// Column matrices `(X, Y)` (`d_X × n`, `d_Y × n`) for the pairs.
    pub fn columns(&self, text: &EmbeddingSet, image: &EmbeddingSet) -> Result<(Matrix, Matrix)> {
        let lookup = |set: &EmbeddingSet, id: &str| {
            set.position(id)
                .ok_or_else(|| Error::Param(format!("pair references unknown {} id `{id}`", set.modality())))
        };
        let ti = self.iter().map(|(t, _)| lookup(text, t)).collect::<Result<Vec<_>>>()?;
        let ii = self.iter().map(|(_, i)| lookup(image, i)).collect::<Result<Vec<_>>>()?;
        Ok((
            text.vectors().select_rows(&ti).transpose(),
            image.vectors().select_rows(&ii).transpose(),
        ))
    }
}

impl FromIterator<(String, String)> for PairSet {
    fn from_iter<I: IntoIterator<Item = (String, String)>>(iter: I) -> Self {
        PairSet::new(iter.into_iter().collect())
    }
}

/// id → set of diagnosis-style code strings, used for graded relevance.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LabelSet {
    labels: BTreeMap<String, BTreeSet<String>>,
}

impl LabelSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, id: impl Into<String>, codes: impl IntoIterator<Item = String>) {
        self.labels.entry(id.into()).or_default().extend(codes);
    }

    pub fn get(&self, id: &str) -> Option<&BTreeSet<String>> {
        self.labels.get(id)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &BTreeSet<String>)> {
        self.labels.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn embedding_set_rejects_duplicates() {
        let v = Matrix::zeros(2, 3);
        let err = EmbeddingSet::new(vec!["a".into(), "a".into()], v, Modality::Text);
        assert!(err.is_err());
    }

    #[test]
    fn pair_columns_follow_pair_order() {
        let text = EmbeddingSet::new(
            vec!["t0".into(), "t1".into()],
            Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap(),
            Modality::Text,
        )
        .unwrap();
        let image = EmbeddingSet::new(
            vec!["i0".into(), "i1".into()],
            Matrix::from_rows(&[vec![5.0], vec![6.0]]).unwrap(),
            Modality::Image,
        )
        .unwrap();
        let pairs = PairSet::new(vec![("t1".into(), "i0".into()), ("t0".into(), "i1".into())]);
        let (x, y) = pairs.columns(&text, &image).unwrap();
        assert_eq!(x.as_slice(), &[3.0, 1.0, 4.0, 2.0]);
        assert_eq!(y.as_slice(), &[5.0, 6.0]);
        let bad = PairSet::new(vec![("t9".into(), "i0".into())]);
        assert!(bad.columns(&text, &image).is_err());
    }
}
