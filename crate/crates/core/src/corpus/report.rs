use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Report sections recognized by the parser. Anything else is body text.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Section {
    Other,
    Indication,
    History,
    Comparison,
    Findings,
    Impression,
}

impl Section {
    pub const ALL: [Section; 6] = [
        Section::Other,
        Section::Indication,
        Section::History,
        Section::Comparison,
        Section::Findings,
        Section::Impression,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Section::Other => "other",
            Section::Indication => "indication",
            Section::History => "history",
            Section::Comparison => "comparison",
            Section::Findings => "findings",
            Section::Impression => "impression",
        }
    }

    fn from_header(name: &str) -> Option<Section> {
        let name = name.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase();
        Some(match name.as_str() {
            "impression" | "impressions" => Section::Impression,
            "findings" | "finding" => Section::Findings,
            "indication" | "indications" => Section::Indication,
            "comparison" | "comparisons" => Section::Comparison,
            "history" | "clinical history" => Section::History,
            "other" => Section::Other,
            _ => return None,
        })
    }
}

impl fmt::Display for Section {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Section {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Section::ALL
            .into_iter()
            .find(|sec| sec.as_str() == s)
            .ok_or_else(|| Error::Param(format!("unknown report section `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Report {
    pub id: String,
    pub raw_text: String,
    pub sections: BTreeMap<Section, String>,
}

impl Report {
    pub fn section(&self, section: Section) -> Option<&str> {
        self.sections.get(&section).map(String::as_str)
    }

    /// Canonical text form: one `NAME: body` block per section.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (sec, body) in &self.sections {
            out.push_str(&sec.as_str().to_uppercase());
            out.push_str(": ");
            out.push_str(body);
            out.push('\n');
        }
        out
    }
}

/// Splits a line into `(section, rest)` when it opens with a known header:
/// optional leading whitespace, letters and spaces, optional whitespace, `:`.
fn header(line: &str) -> Option<(Section, &str)> {
    let trimmed = line.trim_start();
    let colon = trimmed.find(':')?;
    let name = &trimmed[..colon];
    if name.trim().is_empty() || !name.chars().all(|c| c.is_alphabetic() || c == ' ' || c == '\t') {
        return None;
    }
    if !name.starts_with(char::is_alphabetic) {
        return None;
    }
    Section::from_header(name).map(|s| (s, &trimmed[colon + 1..]))
}

/// Splits report text into sections on header lines such as `FINDINGS:` or
/// `Impression :`. Text before the first header, or a report without any
/// header, lands in [`Section::Other`]. Repeated headers are concatenated.
pub fn parse_report(id: &str, raw: &str) -> Report {
    let mut bodies: BTreeMap<Section, Vec<String>> = BTreeMap::new();
    let mut current = Section::Other;
    for line in raw.lines() {
        match header(line) {
            Some((sec, rest)) => {
                current = sec;
                bodies.entry(sec).or_default().push(rest.to_string());
            }
            None => bodies.entry(current).or_default().push(line.to_string()),
        }
    }
    let sections = bodies
        .into_iter()
        .filter_map(|(sec, lines)| {
            let body = lines.join("\n").trim().to_string();
            (!body.is_empty()).then_some((sec, body))
        })
        .collect();
    Report {
        id: id.to_string(),
        raw_text: raw.to_string(),
        sections,
    }
}

/// Reads a report corpus: either a directory with one file per report (id =
/// file stem) or a single file with `==== <id>` separator lines.
pub fn read_corpus(path: &Path) -> Result<Vec<Report>> {
    if path.is_dir() {
        let mut entries: Vec<_> = fs::read_dir(path)
            .map_err(|e| Error::io(path, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file())
            .collect();
        entries.sort();
        entries
            .iter()
            .map(|p| {
                let raw = fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
                let id = p
                    .file_stem()
                    .and_then(|s| s.to_str())
                    .ok_or_else(|| Error::Param(format!("bad report file name {}", p.display())))?;
                Ok(parse_report(id, &raw))
            })
            .collect()
    } else {
        let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        parse_concatenated(&raw, &path.display().to_string())
    }
}

fn parse_concatenated(raw: &str, source: &str) -> Result<Vec<Report>> {
    let mut reports = Vec::new();
    let mut current: Option<(String, Vec<&str>)> = None;
    let mut seen = std::collections::HashSet::new();
    for (lineno, line) in raw.lines().enumerate() {
        if let Some(rest) = line.strip_prefix("====") {
            let id = rest.trim();
            if id.is_empty() || id.contains(char::is_whitespace) {
                return Err(Error::parse(source, lineno + 1, "separator needs a single id"));
            }
            if !seen.insert(id.to_string()) {
                return Err(Error::parse(source, lineno + 1, format!("duplicate report id `{id}`")));
            }
            if let Some((id, lines)) = current.take() {
                reports.push(parse_report(&id, &lines.join("\n")));
            }
            current = Some((id.to_string(), Vec::new()));
        } else {
            match current.as_mut() {
                Some((_, lines)) => lines.push(line),
                None if line.trim().is_empty() => {}
                None => return Err(Error::parse(source, lineno + 1, "text before first `==== <id>` line")),
            }
        }
    }
    if let Some((id, lines)) = current {
        reports.push(parse_report(&id, &lines.join("\n")));
    }
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_headers() {
        let r = parse_report("r", "FINDINGS: clear lungs.\nIMPRESSION: no acute disease.");
        assert_eq!(r.section(Section::Findings), Some("clear lungs."));
        assert_eq!(r.section(Section::Impression), Some("no acute disease."));
        assert_eq!(r.sections.len(), 2);
    }

    #[test]
    fn no_headers_goes_to_other() {
        let r = parse_report("r", "Lungs are clear.\nNo effusion.");
        assert_eq!(r.sections.len(), 1);
        assert_eq!(r.section(Section::Other), Some("Lungs are clear.\nNo effusion."));
    }

    #[test]
    fn mixed_case_with_space_before_colon() {
        let r = parse_report("r", "Impression : stable cardiomegaly");
        assert_eq!(r.section(Section::Impression), Some("stable cardiomegaly"));
    }

    #[test]
    fn preamble_and_multiline_bodies() {
        let raw = "EXAMINATION: CHEST PA AND LAT\nINDICATION: cough\n\nFINDINGS:\n  Heart size normal.\n  Lungs clear.\nIMPRESSION:\nNormal.\n";
        let r = parse_report("r", raw);
        assert_eq!(r.section(Section::Other), Some("EXAMINATION: CHEST PA AND LAT"));
        assert_eq!(r.section(Section::Indication), Some("cough"));
        assert_eq!(r.section(Section::Findings), Some("Heart size normal.\n  Lungs clear."));
        assert_eq!(r.section(Section::Impression), Some("Normal."));
    }

    #[test]
    fn time_stamps_are_not_headers() {
        let r = parse_report("r", "FINDINGS: seen at 10:30 today");
        assert_eq!(r.section(Section::Findings), Some("seen at 10:30 today"));
    }

    #[test]
    fn reparsing_canonical_text_is_idempotent() {
        let raw = "pre text\nHistory: smoker\nFINDINGS: a\nb\nIMPRESSION: c\nfindings: d";
        let r = parse_report("r", raw);
        let again = parse_report("r", &r.to_text());
        assert_eq!(r.sections, again.sections);
    }

    #[test]
    fn concatenated_corpus() {
        let raw = "==== a\nFINDINGS: x\n==== b\nIMPRESSION: y\n";
        let reports = parse_concatenated(raw, "mem").unwrap();
        assert_eq!(reports.len(), 2);
        assert_eq!(reports[1].id, "b");
        assert_eq!(reports[1].section(Section::Impression), Some("y"));
        assert!(parse_concatenated("stray\n==== a\n", "mem").is_err());
        assert!(parse_concatenated("==== a\n==== a\n", "mem").is_err());
    }
}
