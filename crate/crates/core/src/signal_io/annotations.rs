//! Scored-event XML (`ScoredEvent` elements with `Name` or `EventConcept`,
//! `Start` and `Duration` children, times in seconds).

use std::fmt::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AnnotationError {
    #[error("malformed XML: {0}")]
    MalformedXml(String),
    #[error("scored event {index}: missing {field}")]
    MissingField { index: usize, field: &'static str },
    #[error("scored event {index}: invalid {field} {value:?}")]
    InvalidValue { index: usize, field: &'static str, value: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventAnnotation {
    pub name: String,
    /// Seconds from recording start.
    pub start: f64,
    /// Seconds.
    pub duration: f64,
}

pub const DEFAULT_EVENT_PATTERNS: [&str; 2] = ["apnea", "hypopnea"];

fn child_text<'a>(node: roxmltree::Node<'a, '_>, name: &str) -> Option<&'a str> {
    node.children().find(|c| c.has_tag_name(name)).map(|c| c.text().unwrap_or("").trim())
}

/// Every scored event is validated; only those whose name contains one of
/// `patterns` (case-insensitive) are returned, ordered by start.
pub fn parse_annotations(xml: &str, patterns: &[&str]) -> Result<Vec<EventAnnotation>, AnnotationError> {
    if xml.trim().is_empty() {
        return Ok(Vec::new());
    }
    let doc = roxmltree::Document::parse(xml).map_err(|e| AnnotationError::MalformedXml(e.to_string()))?;
    let patterns: Vec<String> = patterns.iter().map(|p| p.to_lowercase()).collect();
    let mut out = Vec::new();
    for (index, ev) in doc.descendants().filter(|n| n.has_tag_name("ScoredEvent")).enumerate() {
        let name = child_text(ev, "Name")
            .or_else(|| child_text(ev, "EventConcept"))
            .ok_or(AnnotationError::MissingField { index, field: "Name/EventConcept" })?;
        let number = |field: &'static str| -> Result<f64, AnnotationError> {
            let text = child_text(ev, field).ok_or(AnnotationError::MissingField { index, field })?;
            text.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| AnnotationError::InvalidValue { index, field, value: text.into() })
        };
        let start = number("Start")?;
        let duration = number("Duration")?;
        if start < 0.0 {
            return Err(AnnotationError::InvalidValue { index, field: "Start", value: start.to_string() });
        }
        if duration <= 0.0 {
            return Err(AnnotationError::InvalidValue { index, field: "Duration", value: duration.to_string() });
        }
        let lower = name.to_lowercase();
        if patterns.iter().any(|p| lower.contains(p.as_str())) {
            out.push(EventAnnotation { name: name.to_string(), start, duration });
        }
    }
    out.sort_by(|a, b| a.start.total_cmp(&b.start));
    Ok(out)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Writes events in the layout [`parse_annotations`] reads.
pub fn write_annotations(events: &[EventAnnotation]) -> String {
    let mut s = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<PSGAnnotation>\n<ScoredEvents>\n");
    for e in events {
        writeln!(
            s,
            "<ScoredEvent><EventConcept>{}</EventConcept><Start>{}</Start><Duration>{}</Duration></ScoredEvent>",
            escape(&e.name),
            e.start,
            e.duration
        )
        .expect("writing to a String");
    }
    s.push_str("</ScoredEvents>\n</PSGAnnotation>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    const DOC: &str = r#"<?xml version="1.0"?>
<PSGAnnotation><ScoredEvents>
  <ScoredEvent><Name>Arousal</Name><Start>200</Start><Duration>10</Duration></ScoredEvent>
  <ScoredEvent><Name>Obstructive apnea</Name><Start>120</Start><Duration>30</Duration></ScoredEvent>
</ScoredEvents></PSGAnnotation>"#;

    #[test]
    fn filters_by_pattern() {
        let ev = parse_annotations(DOC, &DEFAULT_EVENT_PATTERNS).unwrap();
        assert_eq!(ev, vec![EventAnnotation { name: "Obstructive apnea".into(), start: 120.0, duration: 30.0 }]);
    }

    #[test]
    fn empty_body() {
        assert!(parse_annotations("<PSGAnnotation/>", &DEFAULT_EVENT_PATTERNS).unwrap().is_empty());
        assert!(parse_annotations("", &DEFAULT_EVENT_PATTERNS).unwrap().is_empty());
    }

    #[test]
    fn missing_duration() {
        let doc = "<a><ScoredEvent><Name>Hypopnea</Name><Start>5</Start></ScoredEvent></a>";
        assert!(matches!(
            parse_annotations(doc, &DEFAULT_EVENT_PATTERNS),
            Err(AnnotationError::MissingField { index: 0, field: "Duration" })
        ));
    }

    #[test]
    fn event_concept_and_case_insensitivity() {
        let doc = "<a><ScoredEvent><EventConcept>Central APNEA|Central Apnea</EventConcept>\
                   <Start>3.5</Start><Duration>29.5</Duration></ScoredEvent></a>";
        let ev = parse_annotations(doc, &["apnea"]).unwrap();
        assert_eq!(ev[0].start, 3.5);
        assert_eq!(ev[0].duration, 29.5);
    }

    #[test]
    fn malformed() {
        assert!(matches!(parse_annotations("<a><b></a>", &["x"]), Err(AnnotationError::MalformedXml(_))));
        let doc = "<a><ScoredEvent><Name>apnea</Name><Start>x</Start><Duration>1</Duration></ScoredEvent></a>";
        assert!(matches!(parse_annotations(doc, &["x"]), Err(AnnotationError::InvalidValue { .. })));
    }

    #[test]
    fn write_then_parse() {
        let events = vec![
            EventAnnotation { name: "Hypopnea".into(), start: 10.25, duration: 28.0 },
            EventAnnotation { name: "Obstructive Apnea & more".into(), start: 70.0, duration: 31.5 },
        ];
        assert_eq!(parse_annotations(&write_annotations(&events), &DEFAULT_EVENT_PATTERNS).unwrap(), events);
    }
}
