use std::path::{Path as FsPath, PathBuf};

use thiserror::Error;
use toml::de::{DeTable, DeValue};
use toml::Spanned;

use super::schema::ScenarioDescription;
use super::validate::{validate_scenario, Diagnostic, Location, Severity, ValidationReport};

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: invalid scenario\n{report}")]
    Invalid { path: PathBuf, report: ValidationReport },
}

enum Segment {
    Key(String),
    Index(usize),
}

fn render(segments: &[Segment]) -> String {
    let mut out = String::new();
    for s in segments {
        match s {
            Segment::Key(k) => {
                if !out.is_empty() {
                    out.push('.');
                }
                out.push_str(k);
            }
            Segment::Index(i) => out.push_str(&format!("[{i}]")),
        }
    }
    out
}

/// Splits `a.b[2].c` back into segments.
fn segments_of(path: &str) -> Vec<Segment> {
    let mut out = Vec::new();
    for part in path.split('.') {
        let mut rest = part;
        if let Some(i) = rest.find('[') {
            if i > 0 {
                out.push(Segment::Key(rest[..i].to_string()));
            }
            rest = &rest[i..];
            while let Some(end) = rest.find(']') {
                if let Ok(n) = rest[1..end].parse() {
                    out.push(Segment::Index(n));
                }
                rest = &rest[end + 1..];
            }
        } else if !rest.is_empty() {
            out.push(Segment::Key(rest.to_string()));
        }
    }
    out
}

fn ignored_segments(path: &serde_ignored::Path<'_>, out: &mut Vec<Segment>) {
    use serde_ignored::Path as P;
    match path {
        P::Root => {}
        P::Seq { parent, index } => {
            ignored_segments(parent, out);
            out.push(Segment::Index(*index));
        }
        P::Map { parent, key } => {
            ignored_segments(parent, out);
            out.push(Segment::Key(key.clone()));
        }
        P::Some { parent } | P::NewtypeStruct { parent } | P::NewtypeVariant { parent } => {
            ignored_segments(parent, out)
        }
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].bytes().filter(|&b| b == b'\n').count() + 1
}

/// Line of the deepest node along `segments` that exists in the document.
fn line_for(text: &str, root: &DeTable<'_>, segments: &[Segment]) -> Option<usize> {
    let mut span = None;
    let mut node: Option<&Spanned<DeValue<'_>>> = None;
    for (depth, seg) in segments.iter().enumerate() {
        let next = match (depth, seg) {
            (0, Segment::Key(k)) => root.iter().find(|(key, _)| key.get_ref() == k).map(|(key, v)| {
                span = Some(key.span());
                v
            }),
            (_, Segment::Key(k)) => node.and_then(|n| n.get_ref().as_table()).and_then(|t| {
                t.iter().find(|(key, _)| key.get_ref() == k).map(|(key, v)| {
                    span = Some(key.span());
                    v
                })
            }),
            (_, Segment::Index(i)) => {
                node.and_then(|n| n.get_ref().as_array()).and_then(|a| a.get(*i).inspect(|v| span = Some(v.span())))
            }
        };
        match next {
            Some(v) => node = Some(v),
            None => break,
        }
    }
    span.map(|s| line_of(text, s.start))
}

fn diag(code: &'static str, path: String, line: Option<usize>, message: String) -> Diagnostic {
    Diagnostic { severity: Severity::Error, location: Location { path, line }, code, message }
}

/// Parses and validates a scenario. On success the returned report holds
/// warnings only.
pub fn parse_scenario_with_report(text: &str) -> (Option<ScenarioDescription>, ValidationReport) {
    let mut report = ValidationReport::default();
    let doc = match DeTable::parse(text) {
        Ok(d) => d,
        Err(e) => {
            let line = e.span().map(|s| line_of(text, s.start));
            report.diagnostics.push(diag("SyntaxError", String::new(), line, e.message().to_string()));
            return (None, report);
        }
    };
    let root = doc.get_ref();

    let de = match toml::Deserializer::parse(text) {
        Ok(d) => d,
        Err(e) => {
            let line = e.span().map(|s| line_of(text, s.start));
            report.diagnostics.push(diag("SyntaxError", String::new(), line, e.message().to_string()));
            return (None, report);
        }
    };
    let mut unknown = Vec::new();
    let parsed: Result<ScenarioDescription, _> = serde_ignored::deserialize(de, |p| {
        let mut segs = Vec::new();
        ignored_segments(&p, &mut segs);
        unknown.push(segs);
    });
    for segs in &unknown {
        let path = render(segs);
        let field = match segs.last() {
            Some(Segment::Key(k)) => k.clone(),
            _ => path.clone(),
        };
        report.diagnostics.push(diag(
            "UnknownField",
            path,
            line_for(text, root, segs),
            format!("unknown field `{field}`"),
        ));
    }
    let scenario = match parsed {
        Ok(s) => s,
        Err(e) => {
            let line = e.span().map(|s| line_of(text, s.start));
            report.diagnostics.push(diag("SchemaError", String::new(), line, e.message().trim().to_string()));
            return (None, report);
        }
    };
    for mut d in validate_scenario(&scenario) {
        d.location.line = line_for(text, root, &segments_of(&d.location.path));
        report.diagnostics.push(d);
    }
    if report.has_errors() {
        (None, report)
    } else {
        (Some(scenario), report)
    }
}

pub fn parse_scenario(text: &str) -> Result<ScenarioDescription, ValidationReport> {
    match parse_scenario_with_report(text) {
        (Some(s), _) => Ok(s),
        (None, report) => Err(report),
    }
}

pub fn load_scenario(path: &FsPath) -> Result<ScenarioDescription, LoadError> {
    let text = std::fs::read_to_string(path).map_err(|source| LoadError::Io { path: path.to_path_buf(), source })?;
    parse_scenario(&text).map_err(|report| LoadError::Invalid { path: path.to_path_buf(), report })
}

pub fn serialize_scenario(s: &ScenarioDescription) -> String {
    toml::to_string(s).expect("scenario serializes to TOML")
}
