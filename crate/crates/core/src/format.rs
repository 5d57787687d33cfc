//! Text file formats.
//!
//! * EMB-v1 embeddings: `emb <n> <d>` then `<id> <v1> … <vd>` per row.
//! * MDL-v1 models: `proj <d_X> <d_Y> <method> <seed>` then `d_X` rows of `d_Y`
//!   values, optionally followed by a `disc <d_in> <hidden> 1` block holding the
//!   discriminator (`d_in` rows of `w1`, then `b1`, `w2` and `b2` lines).
//! * Pair CSV `text_id,image_id` and label CSV `id,codes` (codes `;`-separated).
//!
//! Floats are written with 17 significant digits so every value round-trips
//! exactly.

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::adversarial::Discriminator;
use crate::align::{AlignConfig, Method, ProjectionModel};
use crate::data::{EmbeddingSet, LabelSet, Modality, PairSet};
use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Shortest form that still carries 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn join_floats(values: &[f64]) -> String {
    values.iter().map(|v| fmt_f64(*v)).collect::<Vec<_>>().join(" ")
}

/// Writes `contents` to a temporary sibling and renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    f.write_all(contents).map_err(|e| Error::io(&tmp, e))?;
    f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

fn open(path: &Path) -> Result<BufReader<fs::File>> {
    fs::File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path, e))
}

fn parse_floats(fields: &[&str], source: &str, line: usize) -> Result<Vec<f64>> {
    fields
        .iter()
        .map(|f| match f.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(Error::parse(source, line, format!("bad value `{f}`"))),
        })
        .collect()
}

fn parse_count(field: Option<&str>, what: &str, source: &str, line: usize) -> Result<usize> {
    field
        .and_then(|f| f.parse().ok())
        .ok_or_else(|| Error::parse(source, line, format!("missing or invalid {what}")))
}

// ---- EMB-v1 --------------------------------------------------------------

pub fn emb_to_string(set: &EmbeddingSet) -> String {
    let mut out = format!("emb {} {}\n", set.len(), set.dim());
    for (i, id) in set.ids().iter().enumerate() {
        out.push_str(id);
        for v in set.vectors().row(i) {
            out.push(' ');
            out.push_str(&fmt_f64(*v));
        }
        out.push('\n');
    }
    out
}

pub fn parse_emb(reader: impl BufRead, source: &str, modality: Modality) -> Result<EmbeddingSet> {
    let mut lines = reader.lines();
    let header = lines
        .next()
        .transpose()
        .map_err(|e| Error::parse(source, 1, e.to_string()))?
        .ok_or_else(|| Error::parse(source, 1, "empty file"))?;
    let mut h = header.split_whitespace();
    if h.next() != Some("emb") {
        return Err(Error::parse(source, 1, "header must start with `emb`"));
    }
    let n = parse_count(h.next(), "row count", source, 1)?;
    let d = parse_count(h.next(), "dimension", source, 1)?;
    if h.next().is_some() {
        return Err(Error::parse(source, 1, "trailing fields in header"));
    }
    let mut ids = Vec::with_capacity(n);
    let mut seen = std::collections::HashSet::with_capacity(n);
    let mut data = Vec::with_capacity(n * d);
    for (i, line) in lines.enumerate() {
        let lineno = i + 2;
        let line = line.map_err(|e| Error::parse(source, lineno, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        if ids.len() == n {
            return Err(Error::parse(source, lineno, format!("more than the declared {n} rows")));
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != d + 1 {
            return Err(Error::parse(
                source,
                lineno,
                format!("expected id and {d} values, found {} values", fields.len() - 1),
            ));
        }
        if !seen.insert(fields[0].to_string()) {
            return Err(Error::parse(source, lineno, format!("duplicate id `{}`", fields[0])));
        }
        ids.push(fields[0].to_string());
        data.extend(parse_floats(&fields[1..], source, lineno)?);
    }
    if ids.len() != n {
        return Err(Error::parse(
            source,
            ids.len() + 2,
            format!("declared {n} rows, found {}", ids.len()),
        ));
    }
    EmbeddingSet::new(ids, Matrix::from_vec(n, d, data)?, modality)
}

pub fn write_embeddings(set: &EmbeddingSet, path: &Path) -> Result<()> {
    write_atomic(path, emb_to_string(set).as_bytes())
}

pub fn read_embeddings(path: &Path, modality: Modality) -> Result<EmbeddingSet> {
    parse_emb(open(path)?, &path.display().to_string(), modality)
}

// ---- MDL-v1 --------------------------------------------------------------

pub fn model_to_string(model: &ProjectionModel) -> String {
    let w = &model.w;
    let mut out = format!("proj {} {} {} {}\n", w.rows(), w.cols(), model.method, model.seed);
    for i in 0..w.rows() {
        out.push_str(&join_floats(w.row(i)));
        out.push('\n');
    }
    if let Some(d) = &model.discriminator {
        out.push_str(&format!("disc {} {} 1\n", d.input_dim(), d.hidden_dim()));
        for i in 0..d.w1.rows() {
            out.push_str(&join_floats(d.w1.row(i)));
            out.push('\n');
        }
        for v in [&d.b1, &d.w2] {
            out.push_str(&join_floats(v));
            out.push('\n');
        }
        out.push_str(&fmt_f64(d.b2));
        out.push('\n');
    }
    out
}

/// Non-blank lines with their 1-based line numbers.
struct Cursor<'a> {
    lines: Vec<(usize, &'a str)>,
    pos: usize,
    source: &'a str,
}

impl<'a> Cursor<'a> {
    fn new(text: &'a str, source: &'a str) -> Self {
        let lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l))
            .filter(|(_, l)| !l.trim().is_empty())
            .collect();
        Cursor { lines, pos: 0, source }
    }

    fn peek(&self) -> Option<(usize, &'a str)> {
        self.lines.get(self.pos).copied()
    }

    fn advance(&mut self) {
        self.pos += 1;
    }

    fn next(&mut self, what: &str) -> Result<(usize, &'a str)> {
        let line = self
            .peek()
            .ok_or_else(|| Error::parse(self.source, 0, format!("unexpected end of file, expected {what}")))?;
        self.advance();
        Ok(line)
    }

    fn row(&mut self, len: usize, what: &str) -> Result<Vec<f64>> {
        let (ln, line) = self.next(what)?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != len {
            return Err(Error::parse(self.source, ln, format!("expected {len} values, found {}", fields.len())));
        }
        parse_floats(&fields, self.source, ln)
    }
}

pub fn parse_model(mut reader: impl Read, source: &str) -> Result<ProjectionModel> {
    let mut text = String::new();
    reader
        .read_to_string(&mut text)
        .map_err(|e| Error::parse(source, 0, e.to_string()))?;
    let mut cur = Cursor::new(&text, source);

    let (ln, header) = cur.next("header")?;
    let h: Vec<&str> = header.split_whitespace().collect();
    if h.len() != 5 || h[0] != "proj" {
        return Err(Error::parse(source, ln, "header must be `proj <d_X> <d_Y> <method> <seed>`"));
    }
    let d_x = parse_count(Some(h[1]), "d_X", source, ln)?;
    let d_y = parse_count(Some(h[2]), "d_Y", source, ln)?;
    let method: Method = h[3].parse().map_err(|_| Error::parse(source, ln, format!("unknown method `{}`", h[3])))?;
    let seed: u64 = h[4].parse().map_err(|_| Error::parse(source, ln, "invalid seed"))?;

    let mut w = Vec::with_capacity(d_x * d_y);
    for _ in 0..d_x {
        w.extend(cur.row(d_y, "projection row")?);
    }
    let mut model = ProjectionModel::new(Matrix::from_vec(d_x, d_y, w)?, method, seed, AlignConfig::default());

    if let Some((ln, disc)) = cur.peek() {
        cur.advance();
        let h: Vec<&str> = disc.split_whitespace().collect();
        if h.len() != 4 || h[0] != "disc" || h[3] != "1" {
            return Err(Error::parse(source, ln, "expected `disc <d_in> <hidden> 1`"));
        }
        let d_in = parse_count(Some(h[1]), "discriminator input size", source, ln)?;
        let hidden = parse_count(Some(h[2]), "hidden size", source, ln)?;
        let mut flat = Vec::with_capacity(d_in * hidden + 2 * hidden + 1);
        for _ in 0..d_in {
            flat.extend(cur.row(hidden, "discriminator weights")?);
        }
        flat.extend(cur.row(hidden, "discriminator hidden bias")?);
        flat.extend(cur.row(hidden, "discriminator output weights")?);
        flat.extend(cur.row(1, "discriminator output bias")?);
        model.discriminator = Discriminator::from_flat(d_in, hidden, &flat);
        if let Some((ln, _)) = cur.peek() {
            return Err(Error::parse(source, ln, "trailing content after discriminator block"));
        }
    }
    Ok(model)
}

pub fn write_model(model: &ProjectionModel, path: &Path) -> Result<()> {
    write_atomic(path, model_to_string(model).as_bytes())
}

pub fn read_model(path: &Path) -> Result<ProjectionModel> {
    parse_model(open(path)?, &path.display().to_string())
}

// ---- CSV -----------------------------------------------------------------

fn csv_error(source: &str, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    Error::parse(source, line, e.to_string())
}

fn read_two_column_csv(reader: impl Read, source: &str, header: [&str; 2]) -> Result<Vec<(usize, String, String)>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let found = rdr.headers().map_err(|e| csv_error(source, e))?.clone();
    if found.len() != 2 || found.get(0) != Some(header[0]) || found.get(1) != Some(header[1]) {
        return Err(Error::parse(source, 1, format!("header must be `{},{}`", header[0], header[1])));
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(source, e))?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != 2 {
            return Err(Error::parse(source, line, "expected 2 fields"));
        }
        out.push((line, rec[0].trim().to_string(), rec[1].trim().to_string()));
    }
    Ok(out)
}

fn write_two_column_csv<'a>(header: [&str; 2], rows: impl Iterator<Item = (&'a str, String)>) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let ser = |e: csv::Error| Error::Param(e.to_string());
    w.write_record(header).map_err(ser)?;
    for (a, b) in rows {
        w.write_record([a, b.as_str()]).map_err(ser)?;
    }
    w.into_inner().map_err(|e| Error::Param(e.to_string()))
}

pub fn parse_pairs(reader: impl Read, source: &str) -> Result<PairSet> {
    let rows = read_two_column_csv(reader, source, ["text_id", "image_id"])?;
    let mut seen = std::collections::HashSet::new();
    let mut pairs = Vec::with_capacity(rows.len());
    for (line, t, i) in rows {
        if t.is_empty() || i.is_empty() {
            return Err(Error::parse(source, line, "empty id"));
        }
        if !seen.insert((t.clone(), i.clone())) {
            return Err(Error::parse(source, line, format!("duplicate pair ({t}, {i})")));
        }
        pairs.push((t, i));
    }
    Ok(PairSet::new(pairs))
}

pub fn pairs_to_bytes(pairs: &PairSet) -> Result<Vec<u8>> {
    write_two_column_csv(["text_id", "image_id"], pairs.iter().map(|(t, i)| (t, i.to_string())))
}

pub fn read_pairs(path: &Path) -> Result<PairSet> {
    parse_pairs(open(path)?, &path.display().to_string())
}

pub fn write_pairs(pairs: &PairSet, path: &Path) -> Result<()> {
    write_atomic(path, &pairs_to_bytes(pairs)?)
}

pub fn parse_labels(reader: impl Read, source: &str) -> Result<LabelSet> {
    let mut labels = LabelSet::new();
    for (line, id, codes) in read_two_column_csv(reader, source, ["id", "codes"])? {
        if id.is_empty() {
            return Err(Error::parse(source, line, "empty id"));
        }
        if labels.get(&id).is_some() {
            return Err(Error::parse(source, line, format!("duplicate id `{id}`")));
        }
        let codes: Vec<String> = codes
            .split(';')
            .map(str::trim)
            .filter(|c| !c.is_empty())
            .map(String::from)
            .collect();
        if codes.is_empty() {
            return Err(Error::parse(source, line, format!("`{id}` has no codes")));
        }
        labels.insert(id, codes);
    }
    Ok(labels)
}

pub fn labels_to_bytes(labels: &LabelSet) -> Result<Vec<u8>> {
    write_two_column_csv(
        ["id", "codes"],
        labels
            .iter()
            .map(|(id, codes)| (id.as_str(), codes.iter().cloned().collect::<Vec<_>>().join(";"))),
    )
}

pub fn read_labels(path: &Path) -> Result<LabelSet> {
    parse_labels(open(path)?, &path.display().to_string())
}

pub fn write_labels(labels: &LabelSet, path: &Path) -> Result<()> {
    write_atomic(path, &labels_to_bytes(labels)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngState;
    use proptest::prelude::*;

    fn random_set(seed: u64, n: usize, d: usize) -> EmbeddingSet {
        let v = RngState::new(seed).normal_matrix(n, d);
        EmbeddingSet::new((0..n).map(|i| format!("id{i}")).collect(), v, Modality::Image).unwrap()
    }

    #[test]
    fn fmt_has_17_significant_digits() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_f64(-2.0), "-2.0000000000000000e0");
    }

    #[test]
    fn empty_emb_file() {
        let s = parse_emb("emb 0 64\n".as_bytes(), "mem", Modality::Text).unwrap();
        assert!(s.is_empty());
        assert_eq!(s.dim(), 64);
    }

    #[test]
    fn emb_round_trip_100x64() {
        let set = random_set(1, 100, 64);
        let text = emb_to_string(&set);
        let back = parse_emb(text.as_bytes(), "mem", Modality::Image).unwrap();
        assert_eq!(back.ids(), set.ids());
        assert!((back.vectors() - set.vectors()).max_abs() < 1e-12);
        assert_eq!(emb_to_string(&back), text);
    }

    #[test]
    fn emb_errors_cite_lines() {
        let short = "emb 2 3\na 1 2 3\nb 1 2\n";
        let err = parse_emb(short.as_bytes(), "f.emb", Modality::Text).unwrap_err();
        assert!(err.to_string().starts_with("f.emb:3:"), "{err}");
        let dup = "emb 2 1\na 1\na 2\n";
        let err = parse_emb(dup.as_bytes(), "f.emb", Modality::Text).unwrap_err();
        assert!(err.to_string().contains(":3:") && err.to_string().contains("duplicate"));
        let bad = "embedding 2 1\n";
        assert!(parse_emb(bad.as_bytes(), "f.emb", Modality::Text)
            .unwrap_err()
            .to_string()
            .starts_with("f.emb:1:"));
        let missing = "emb 3 1\na 1\n";
        assert!(parse_emb(missing.as_bytes(), "f.emb", Modality::Text).is_err());
    }

    #[test]
    fn model_round_trip_with_discriminator() {
        let mut rng = RngState::new(2);
        let mut m = ProjectionModel::new(rng.normal_matrix(5, 3), Method::AdvProc, 42, AlignConfig::default());
        m.discriminator = Some(Discriminator::init(3, 4, &mut rng));
        let text = model_to_string(&m);
        assert!(text.starts_with("proj 5 3 adv-proc 42\n"));
        assert!(text.contains("\ndisc 3 4 1\n"));
        let back = parse_model(text.as_bytes(), "mem").unwrap();
        assert_eq!(back.w, m.w);
        assert_eq!(back.discriminator, m.discriminator);
        assert_eq!(model_to_string(&back), text);
    }

    #[test]
    fn model_errors() {
        assert!(parse_model("proj 2 2 nope 1\n1 2\n3 4\n".as_bytes(), "m").is_err());
        assert!(parse_model("proj 2 2 adv 1\n1 2\n".as_bytes(), "m").is_err());
        assert!(parse_model("proj 1 1 adv 1\n1\nextra\n".as_bytes(), "m").is_err());
    }

    #[test]
    fn pairs_and_labels_round_trip() {
        let pairs = PairSet::new(vec![("t1".into(), "i9".into()), ("t2".into(), "i3".into())]);
        let bytes = pairs_to_bytes(&pairs).unwrap();
        assert_eq!(String::from_utf8(bytes.clone()).unwrap(), "text_id,image_id\nt1,i9\nt2,i3\n");
        assert_eq!(parse_pairs(bytes.as_slice(), "p").unwrap(), pairs);

        let src = "id,codes\na,428.0;518.81\nb,428.0\n";
        let labels = parse_labels(src.as_bytes(), "l").unwrap();
        assert_eq!(labels.get("a").unwrap().len(), 2);
        let bytes = labels_to_bytes(&labels).unwrap();
        assert_eq!(String::from_utf8(bytes.clone()).unwrap(), src);
        assert_eq!(parse_labels(bytes.as_slice(), "l").unwrap(), labels);
    }

    #[test]
    fn csv_header_is_checked() {
        assert!(parse_pairs("a,b\nx,y\n".as_bytes(), "p").is_err());
        assert!(parse_labels("id,codes\nx,\n".as_bytes(), "l").is_err());
    }

    proptest! {
        #[test]
        fn any_float_round_trips_exactly(bits in any::<u64>()) {
            let x = f64::from_bits(bits);
            prop_assume!(x.is_finite());
            prop_assert_eq!(fmt_f64(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
    }
}
