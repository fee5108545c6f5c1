//! Human-readable path documents.
//!
//! ```toml
//! schema_version = 1
//!
//! [start]            # pose of the first segment only
//! x = 0.0
//! y = 0.0
//! heading = 0.0      # radians
//!
//! [[segment]]
//! kind = "line"
//! length = 30.0
//!
//! [[segment]]
//! kind = "arc"
//! length = 18.85
//! radius = 12.0      # signed, positive = left turn
//! ```

use serde::{Deserialize, Serialize};

use super::{PathBuilder, PathError, PathModel, Pose2, SegmentKind};

pub const PATH_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum PathFileError {
    #[error("path document: {0}")]
    Parse(String),
    #[error("path document: unsupported schema_version {0} (expected {PATH_SCHEMA_VERSION})")]
    Version(u32),
    #[error("path document: segment {index}: {reason}")]
    Segment { index: usize, reason: String },
    #[error("path document: {0}")]
    Invalid(#[from] PathError),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PathDoc {
    schema_version: u32,
    #[serde(default)]
    start: StartDoc,
    segment: Vec<SegmentDoc>,
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StartDoc {
    #[serde(default)]
    x: f64,
    #[serde(default)]
    y: f64,
    #[serde(default)]
    heading: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SegmentDoc {
    kind: String,
    length: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    radius: Option<f64>,
}

pub fn parse_path_document(text: &str) -> Result<PathModel<f64>, PathFileError> {
    let de = toml::Deserializer::new(text);
    let doc: PathDoc = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        PathFileError::Parse(format!("at `{path}`: {}", e.into_inner()))
    })?;
    if doc.schema_version != PATH_SCHEMA_VERSION {
        return Err(PathFileError::Version(doc.schema_version));
    }
    let mut b = PathBuilder::new(Pose2::new(doc.start.x, doc.start.y, doc.start.heading));
    for (index, seg) in doc.segment.iter().enumerate() {
        b = match (seg.kind.as_str(), seg.radius) {
            ("line", None) => b.line(seg.length),
            ("line", Some(_)) => {
                return Err(PathFileError::Segment {
                    index,
                    reason: "a line takes no radius".into(),
                })
            }
            ("arc", Some(r)) if r != 0.0 && r.is_finite() => b.arc(r, seg.length),
            ("arc", _) => {
                return Err(PathFileError::Segment {
                    index,
                    reason: "an arc needs a finite nonzero signed radius".into(),
                })
            }
            (other, _) => {
                return Err(PathFileError::Segment {
                    index,
                    reason: format!("unknown kind `{other}` (expected `line` or `arc`)"),
                })
            }
        };
    }
    Ok(b.build()?)
}

pub fn path_to_document(path: &PathModel<f64>) -> String {
    let start = path.start_pose();
    let doc = PathDoc {
        schema_version: PATH_SCHEMA_VERSION,
        start: StartDoc {
            x: start.x,
            y: start.y,
            heading: start.heading,
        },
        segment: path
            .segments()
            .iter()
            .map(|s| SegmentDoc {
                kind: match s.kind {
                    SegmentKind::Line => "line".into(),
                    SegmentKind::Arc => "arc".into(),
                },
                length: s.length,
                radius: s.radius(),
            })
            .collect(),
    };
    toml::to_string(&doc).expect("path document serializes")
}
