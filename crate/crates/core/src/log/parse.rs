use serde::Deserialize;
use thiserror::Error;

use super::record::{Meta, Record, SessionLog, UnknownRecord};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {kind}")]
pub struct ParseError {
    /// 1-based line number.
    pub line: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("first record must be meta")]
    MissingMeta,
    #[error("duplicate meta record")]
    DuplicateMeta,
    #[error("unsupported schema version '{0}'")]
    UnsupportedSchema(String),
    #[error("invalid UTF-8")]
    InvalidUtf8,
    #[error("malformed record: {0}")]
    Malformed(String),
}

#[derive(Deserialize)]
struct Tag<'a> {
    #[serde(borrow)]
    t: std::borrow::Cow<'a, str>,
}

enum Line {
    Meta(Meta),
    Record(Record),
}

fn parse_line(line: &str) -> Result<Line, ParseErrorKind> {
    fn typed<'a, T: Deserialize<'a>>(line: &'a str) -> Result<T, ParseErrorKind> {
        serde_json::from_str(line).map_err(|e| ParseErrorKind::Malformed(e.to_string()))
    }
    let tag: Tag = typed(line)?;
    Ok(match tag.t.as_ref() {
        "meta" => Line::Meta(typed(line)?),
        "trial" => Line::Record(Record::Trial(Box::new(typed(line)?))),
        "target" => Line::Record(Record::Target(typed(line)?)),
        "imu" => Line::Record(Record::Imu(typed(line)?)),
        "frame" => Line::Record(Record::Frame(typed(line)?)),
        "entry" => Line::Record(Record::Entry(typed(line)?)),
        "orient" => Line::Record(Record::Orient(typed(line)?)),
        "void" => Line::Record(Record::Void(typed(line)?)),
        other => Line::Record(Record::Unknown(UnknownRecord { kind: other.to_string(), raw: line.to_string() })),
    })
}

impl Record {
    /// Parse one record line. Meta lines are rejected; they only head a file.
    pub fn from_line(line: &str) -> Result<Record, ParseErrorKind> {
        match parse_line(line)? {
            Line::Record(r) => Ok(r),
            Line::Meta(_) => Err(ParseErrorKind::Malformed("meta record outside the file header".into())),
        }
    }
}

/// Parse a complete session log. Blank lines are ignored.
pub fn parse_session(bytes: &[u8]) -> Result<SessionLog, ParseError> {
    let text = std::str::from_utf8(bytes).map_err(|e| {
        let line = bytes[..e.valid_up_to()].iter().filter(|&&b| b == b'\n').count() + 1;
        ParseError { line, kind: ParseErrorKind::InvalidUtf8 }
    })?;

    let mut meta = None;
    let mut records = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let err = |kind| ParseError { line: line_no, kind };
        match parse_line(line).map_err(err)? {
            Line::Meta(m) => {
                if meta.is_some() {
                    return Err(err(ParseErrorKind::DuplicateMeta));
                }
                if m.schema_version != super::SCHEMA_VERSION {
                    return Err(err(ParseErrorKind::UnsupportedSchema(m.schema_version)));
                }
                meta = Some(m);
            }
            Line::Record(_) if meta.is_none() => return Err(err(ParseErrorKind::MissingMeta)),
            Line::Record(r) => records.push(r),
        }
    }
    let meta = meta.ok_or(ParseError { line: 1, kind: ParseErrorKind::MissingMeta })?;
    Ok(SessionLog { meta, records })
}

#[cfg(test)]
mod tests {
    use super::*;

    const META: &str = r#"{"t":"meta","session_id":"s1","created_utc":"2026-01-01T00:00:00Z","schema_version":"gazecode-log/1","geometry":{"w_px":1080,"h_px":1920,"dpi":432.0,"cam_x_in":1.25,"cam_y_in":-0.2},"config":{}}"#;

    #[test]
    fn single_lines() {
        let r = Record::from_line(r#"{"t":"frame","ts":5,"idx":1}"#).unwrap();
        assert_eq!(r.kind(), "frame");
        assert!(Record::from_line(META).is_err());
        assert!(Record::from_line(r#"{"ts":5}"#).is_err());
    }

    #[test]
    fn missing_meta() {
        let text = r#"{"t":"frame","ts":0,"idx":0}"#;
        let e = parse_session(text.as_bytes()).unwrap_err();
        assert_eq!(e, ParseError { line: 1, kind: ParseErrorKind::MissingMeta });
        assert_eq!(parse_session(b"").unwrap_err().kind, ParseErrorKind::MissingMeta);
    }

    #[test]
    fn duplicate_meta() {
        let text = format!("{META}\n{META}\n");
        let e = parse_session(text.as_bytes()).unwrap_err();
        assert_eq!(e, ParseError { line: 2, kind: ParseErrorKind::DuplicateMeta });
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let text = format!("{META}\n{{\"t\":\"frame\",\"ts\":0,\"idx\":0}}\n{{\"t\":\"imu\",\"ts\":\"soon\"}}\n");
        let e = parse_session(text.as_bytes()).unwrap_err();
        assert_eq!(e.line, 3);
        assert!(matches!(e.kind, ParseErrorKind::Malformed(_)));
        let e = parse_session(format!("{META}\nnot json\n").as_bytes()).unwrap_err();
        assert_eq!(e.line, 2);
    }

    #[test]
    fn unknown_records_are_preserved_verbatim() {
        let odd = r#"{"t":"heart_rate","ts":5,"bpm":71.5,"zeta":[1,2]}"#;
        let text = format!("{META}\n{odd}\n");
        let log = parse_session(text.as_bytes()).unwrap();
        let unknown: Vec<_> = log.unknown().collect();
        assert_eq!(unknown.len(), 1);
        assert_eq!(unknown[0].kind, "heart_rate");
        assert!(log.serialize().unwrap().contains(odd));
    }

    #[test]
    fn wrong_schema_is_rejected() {
        let text = META.replace("gazecode-log/1", "gazecode-log/9");
        let e = parse_session(text.as_bytes()).unwrap_err();
        assert!(matches!(e.kind, ParseErrorKind::UnsupportedSchema(_)));
    }

    #[test]
    fn invalid_utf8_line() {
        let mut bytes = format!("{META}\n").into_bytes();
        bytes.extend_from_slice(b"{\"t\":\"x\xff\"}\n");
        assert_eq!(parse_session(&bytes).unwrap_err(), ParseError { line: 2, kind: ParseErrorKind::InvalidUtf8 });
    }
}
