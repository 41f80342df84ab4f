//! JSON-lines dataset files.
//!
//! Line 1 is a header `{"classes": [...], "coord_space": "pixel"|"unit"}`.
//! Every following non-blank line is one sample:
//! `{"id": str, "label": str|null, "signer": str|null, "frames": [[x0,y0,...,x53,y53], ...]}`
//! with missing joints written as a pair of nulls.

use std::collections::HashSet;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{CoordSpace, Dataset, PoseFrame, SignSample, FRAME_DIM, NUM_JOINTS};
use crate::error::{Error, Result};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    classes: Vec<String>,
    coord_space: CoordSpace,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Record {
    id: String,
    label: Option<String>,
    signer: Option<String>,
    frames: Vec<Vec<Option<f64>>>,
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_dataset(&text, &path.display().to_string())
}

/// Parses dataset text; `origin` names the source in error messages.
pub fn parse_dataset(text: &str, origin: &str) -> Result<Dataset> {
    let err = |line: usize, message: String| Error::Parse {
        path: origin.to_string(),
        line,
        message,
    };
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, first) = lines
        .next()
        .ok_or_else(|| err(1, "empty file, expected a header line".into()))?;
    let header: Header =
        serde_json::from_str(first).map_err(|e| err(1, format!("bad header: {e}")))?;
    let mut seen_classes = HashSet::new();
    for c in &header.classes {
        if !seen_classes.insert(c.as_str()) {
            return Err(err(1, format!("duplicate class name {c:?}")));
        }
    }

    let mut samples = Vec::new();
    let mut ids = HashSet::new();
    for (line, raw) in lines {
        if raw.trim().is_empty() {
            continue;
        }
        let rec: Record = serde_json::from_str(raw).map_err(|e| err(line, e.to_string()))?;
        if !ids.insert(rec.id.clone()) {
            return Err(err(line, format!("duplicate sample id {:?}", rec.id)));
        }
        let label = match &rec.label {
            None => None,
            Some(name) => Some(
                header
                    .classes
                    .iter()
                    .position(|c| c == name)
                    .ok_or_else(|| err(line, format!("unknown class {name:?}")))?,
            ),
        };
        if rec.frames.is_empty() {
            return Err(err(line, format!("sample {:?} has no frames", rec.id)));
        }
        let mut frames = Vec::with_capacity(rec.frames.len());
        for (fi, values) in rec.frames.iter().enumerate() {
            if values.len() != FRAME_DIM {
                return Err(err(
                    line,
                    format!(
                        "sample {:?} frame {fi}: {} joints ({} values), expected {NUM_JOINTS}",
                        rec.id,
                        values.len() as f64 / 2.0,
                        values.len()
                    ),
                ));
            }
            let mut coords = [0.0; FRAME_DIM];
            for (j, pair) in values.chunks(2).enumerate() {
                match (pair[0], pair[1]) {
                    (Some(x), Some(y)) => {
                        coords[2 * j] = x;
                        coords[2 * j + 1] = y;
                    }
                    (None, None) => {
                        coords[2 * j] = f64::NAN;
                        coords[2 * j + 1] = f64::NAN;
                    }
                    _ => {
                        return Err(err(
                            line,
                            format!("sample {:?} frame {fi}: joint {j} half missing", rec.id),
                        ))
                    }
                }
            }
            let frame = PoseFrame::new(&coords)
                .map_err(|e| err(line, format!("sample {:?} frame {fi}: {e}", rec.id)))?;
            frames.push(frame);
        }
        samples.push(SignSample {
            id: rec.id,
            frames,
            label,
            signer: rec.signer,
        });
    }
    Ok(Dataset {
        classes: header.classes,
        coord_space: header.coord_space,
        samples,
    })
}

/// Serializes a dataset in the JSON-lines format.
pub fn write_dataset(dataset: &Dataset, out: &mut impl Write) -> Result<()> {
    let header = Header {
        classes: dataset.classes.clone(),
        coord_space: dataset.coord_space,
    };
    serde_json::to_writer(&mut *out, &header)?;
    writeln!(out).map_err(|e| Error::io("<writer>", e))?;
    for s in &dataset.samples {
        let rec = Record {
            id: s.id.clone(),
            label: s.label.map(|l| dataset.classes[l].clone()),
            signer: s.signer.clone(),
            frames: s
                .frames
                .iter()
                .map(|f| {
                    f.coords()
                        .iter()
                        .map(|&v| if v.is_nan() { None } else { Some(v) })
                        .collect()
                })
                .collect(),
        };
        serde_json::to_writer(&mut *out, &rec)?;
        writeln!(out).map_err(|e| Error::io("<writer>", e))?;
    }
    Ok(())
}

pub fn save_dataset(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut buf = Vec::new();
    write_dataset(dataset, &mut buf)?;
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn header() -> &'static str {
        r#"{"classes": ["hello", "thanks"], "coord_space": "unit"}"#
    }

    fn frame_json(n_joints: usize) -> String {
        let vals = vec!["0.0"; 2 * n_joints].join(",");
        format!("[{vals}]")
    }

    #[test]
    fn single_zero_frame() {
        let text = format!(
            "{}\n{{\"id\": \"a\", \"label\": \"thanks\", \"signer\": null, \"frames\": [{}]}}\n",
            header(),
            frame_json(54)
        );
        let ds = parse_dataset(&text, "mem").unwrap();
        assert_eq!(ds.samples.len(), 1);
        assert_eq!(ds.samples[0].frames.len(), 1);
        assert_eq!(ds.samples[0].label, Some(1));
        assert_eq!(ds.samples[0].frames[0], PoseFrame::zeros());
    }

    #[test]
    fn short_frame_names_line_and_joint_count() {
        let text = format!(
            "{}\n{{\"id\": \"a\", \"label\": null, \"signer\": null, \"frames\": [{}]}}\n",
            header(),
            frame_json(53)
        );
        let e = parse_dataset(&text, "mem").unwrap_err().to_string();
        assert!(e.contains("mem:2"), "{e}");
        assert!(e.contains("53 joints"), "{e}");
    }

    #[test]
    fn null_pairs_become_missing_joints() {
        let mut vals = vec!["1.5".to_string(); FRAME_DIM];
        vals[10] = "null".into();
        vals[11] = "null".into();
        let text = format!(
            "{}\n{{\"id\": \"a\", \"label\": null, \"signer\": \"s1\", \"frames\": [[{}]]}}\n",
            header(),
            vals.join(",")
        );
        let ds = parse_dataset(&text, "mem").unwrap();
        assert!(ds.samples[0].frames[0].is_missing(5));
        assert_eq!(ds.samples[0].signer.as_deref(), Some("s1"));

        vals[11] = "2.0".into();
        let text = format!(
            "{}\n{{\"id\": \"a\", \"label\": null, \"signer\": null, \"frames\": [[{}]]}}\n",
            header(),
            vals.join(",")
        );
        assert!(parse_dataset(&text, "mem").is_err());
    }

    #[test]
    fn duplicate_ids_and_unknown_classes_rejected() {
        let rec = format!(
            "{{\"id\": \"a\", \"label\": null, \"signer\": null, \"frames\": [{}]}}",
            frame_json(54)
        );
        let text = format!("{}\n{rec}\n{rec}\n", header());
        let e = parse_dataset(&text, "mem").unwrap_err().to_string();
        assert!(e.contains("mem:3") && e.contains("duplicate"), "{e}");

        let text = format!(
            "{}\n{{\"id\": \"a\", \"label\": \"nope\", \"signer\": null, \"frames\": [{}]}}\n",
            header(),
            frame_json(54)
        );
        assert!(parse_dataset(&text, "mem").is_err());
    }

    #[test]
    fn unknown_fields_rejected() {
        let text = format!(
            "{}\n{{\"id\": \"a\", \"lable\": null, \"signer\": null, \"frames\": [{}]}}\n",
            header(),
            frame_json(54)
        );
        assert!(parse_dataset(&text, "mem").is_err());
    }
}
