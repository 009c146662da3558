use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

/// Dotted selector into a JSON record. A `[]` suffix on a segment fans out
/// over array elements, e.g. `authorships[].countries[]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FieldPath {
    raw: String,
    segments: Vec<Segment>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Segment {
    Key(String),
    Each,
}

impl FieldPath {
    pub fn resolve<'a>(&self, root: &'a Value) -> Vec<&'a Value> {
        let mut current = vec![root];
        for seg in &self.segments {
            let mut next = Vec::with_capacity(current.len());
            for v in current {
                match seg {
                    Segment::Key(k) => {
                        if let Some(child) = v.get(k.as_str()) {
                            if !child.is_null() {
                                next.push(child);
                            }
                        }
                    }
                    Segment::Each => {
                        if let Value::Array(items) = v {
                            next.extend(items.iter().filter(|x| !x.is_null()));
                        }
                    }
                }
            }
            current = next;
        }
        current
    }

    /// First match, if any.
    pub fn first<'a>(&self, root: &'a Value) -> Option<&'a Value> {
        self.resolve(root).into_iter().next()
    }

    pub fn as_str(&self) -> &str {
        &self.raw
    }
}

impl FromStr for FieldPath {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut segments = Vec::new();
        for part in s.split('.') {
            let (key, fan) = match part.strip_suffix("[]") {
                Some(k) => (k, true),
                None => (part, false),
            };
            if key.is_empty() || key.contains(['[', ']']) {
                return Err(Error::Config(format!("bad field path `{s}`")));
            }
            segments.push(Segment::Key(key.to_string()));
            if fan {
                segments.push(Segment::Each);
            }
        }
        Ok(FieldPath { raw: s.to_string(), segments })
    }
}

impl fmt::Display for FieldPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.raw)
    }
}

impl Serialize for FieldPath {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.raw)
    }
}

impl<'de> Deserialize<'de> for FieldPath {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn nested_fan_out() {
        let v = json!({
            "authorships": [
                {"countries": ["US", "IL"]},
                {"countries": []},
                {"countries": ["US"]},
                {"other": 1}
            ],
            "primary_topic": {"subfield": {"id": "https://openalex.org/subfields/3104"}}
        });
        let p: FieldPath = "authorships[].countries[]".parse().unwrap();
        let got: Vec<_> = p.resolve(&v).into_iter().filter_map(Value::as_str).collect();
        assert_eq!(got, ["US", "IL", "US"]);

        let q: FieldPath = "primary_topic.subfield.id".parse().unwrap();
        assert_eq!(q.first(&v).and_then(Value::as_str), Some("https://openalex.org/subfields/3104"));

        let missing: FieldPath = "primary_topic.field.id".parse().unwrap();
        assert!(missing.first(&v).is_none());
    }

    #[test]
    fn rejects_malformed_paths() {
        assert!("a..b".parse::<FieldPath>().is_err());
        assert!("a[0]".parse::<FieldPath>().is_err());
    }
}
