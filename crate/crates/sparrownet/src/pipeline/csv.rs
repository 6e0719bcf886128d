//! Dataset CSV format: one row per frame.
//!
//! Columns: `sample_id:int, t:int, label:{0,1}, magnitude:float`, then one
//! float column per pixel (`p0..p{HW-1}`, row-major). Header row required;
//! UTF-8, LF line endings. Frames of one sample are contiguous with `t`
//! strictly increasing from 0, and every sample carries the same label and
//! magnitude on each of its rows.

use std::fs;
use std::path::Path;

use super::{PipelineError, SequenceSample};
use crate::tensor::Tensor;

/// Writes `samples` in the dataset schema. Floats use the shortest
/// round-trip representation, so a save/load cycle is exact.
pub fn save_csv(samples: &[SequenceSample], path: &Path) -> Result<(), PipelineError> {
    let io_err = |source| PipelineError::Io {
        path: path.display().to_string(),
        source,
    };
    if samples.is_empty() {
        return Err(PipelineError::Schema("refusing to write an empty dataset".into()));
    }
    let pixels = samples[0].frames[0].len();
    let mut out = String::new();
    out.push_str("sample_id,t,label,magnitude");
    for p in 0..pixels {
        out.push_str(&format!(",p{p}"));
    }
    out.push('\n');
    for (id, sample) in samples.iter().enumerate() {
        for (t, frame) in sample.frames.iter().enumerate() {
            out.push_str(&format!(
                "{id},{t},{},{}",
                sample.label, sample.anomaly_magnitude
            ));
            for &v in frame.data() {
                out.push(',');
                out.push_str(&format!("{v}"));
            }
            out.push('\n');
        }
    }
    fs::write(path, out).map_err(io_err)
}

/// Loads a dataset, inferring square frames from the pixel-column count.
/// Datasets with non-square frames need [`load_csv_shaped`].
pub fn load_csv(path: &Path) -> Result<Vec<SequenceSample>, PipelineError> {
    let pixels = peek_pixel_count(path)?;
    let side = (pixels as f64).sqrt().round() as usize;
    if side * side != pixels {
        return Err(PipelineError::Schema(format!(
            "{pixels} pixel columns are not a square frame; use load_csv_shaped with explicit dimensions"
        )));
    }
    load_csv_shaped(path, side, side)
}

/// Loads a dataset with explicit frame dimensions.
pub fn load_csv_shaped(
    path: &Path,
    height: usize,
    width: usize,
) -> Result<Vec<SequenceSample>, PipelineError> {
    let io_err = |source| PipelineError::Io {
        path: path.display().to_string(),
        source,
    };
    let text = fs::read_to_string(path).map_err(io_err)?;
    let mut lines = text.lines().enumerate();

    let (_, header) = lines
        .next()
        .ok_or_else(|| PipelineError::Schema("empty file".into()))?;
    let pixels = parse_header(header)?;
    if height * width != pixels {
        return Err(PipelineError::Schema(format!(
            "header declares {pixels} pixels, expected {height}x{width}"
        )));
    }

    struct Builder {
        id: u64,
        label: u8,
        magnitude: f64,
        frames: Vec<Tensor>,
    }
    let mut samples: Vec<SequenceSample> = Vec::new();
    let mut seen_ids = std::collections::HashSet::new();
    let mut seen_t: Option<usize> = None;
    let mut current: Option<Builder> = None;
    let finish = |b: Builder, seen_t: &mut Option<usize>| -> Result<SequenceSample, PipelineError> {
        match *seen_t {
            Some(t) if t != b.frames.len() => {
                return Err(PipelineError::Schema(format!(
                    "sample {} has {} frames, expected {t}",
                    b.id,
                    b.frames.len()
                )))
            }
            None => *seen_t = Some(b.frames.len()),
            _ => {}
        }
        if b.label == 0 && b.magnitude != 0.0 {
            return Err(PipelineError::Schema(format!(
                "sample {} is labeled normal but has magnitude {}",
                b.id, b.magnitude
            )));
        }
        Ok(SequenceSample {
            frames: b.frames,
            label: b.label,
            anomaly_magnitude: b.magnitude,
        })
    };

    for (index, line) in lines {
        let line_no = index + 1;
        if line.is_empty() {
            continue;
        }
        let parse = |message: String| PipelineError::Parse {
            line: line_no,
            message,
        };
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 + pixels {
            return Err(parse(format!(
                "expected {} fields, got {}",
                4 + pixels,
                fields.len()
            )));
        }
        let id: u64 = fields[0]
            .parse()
            .map_err(|e| parse(format!("bad sample_id `{}`: {e}", fields[0])))?;
        let t: usize = fields[1]
            .parse()
            .map_err(|e| parse(format!("bad t `{}`: {e}", fields[1])))?;
        let label: u8 = match fields[2] {
            "0" => 0,
            "1" => 1,
            other => return Err(parse(format!("label must be 0 or 1, got `{other}`"))),
        };
        let magnitude: f64 = fields[3]
            .parse()
            .map_err(|e| parse(format!("bad magnitude `{}`: {e}", fields[3])))?;
        let mut data = Vec::with_capacity(pixels);
        for field in &fields[4..] {
            let v: f64 = field
                .parse()
                .map_err(|e| parse(format!("bad pixel value `{field}`: {e}")))?;
            if !v.is_finite() {
                return Err(parse(format!("pixel value `{field}` is not finite")));
            }
            data.push(v);
        }
        let frame = Tensor::new(vec![height, width, 1], data).expect("length checked");

        match current.as_mut() {
            Some(b) if b.id == id => {
                if t != b.frames.len() {
                    return Err(parse(format!(
                        "t must increase by 1 within a sample, got {t} after {}",
                        b.frames.len() - 1
                    )));
                }
                if b.label != label || b.magnitude != magnitude {
                    return Err(parse(format!(
                        "label/magnitude changed mid-sample for sample_id {id}"
                    )));
                }
                b.frames.push(frame);
            }
            _ => {
                if let Some(done) = current.take() {
                    samples.push(finish(done, &mut seen_t)?);
                }
                if !seen_ids.insert(id) {
                    return Err(parse(format!(
                        "sample_id {id} reappears; frames of one sample must be contiguous"
                    )));
                }
                if t != 0 {
                    return Err(parse(format!("sample {id} must start at t=0, got {t}")));
                }
                current = Some(Builder {
                    id,
                    label,
                    magnitude,
                    frames: vec![frame],
                });
            }
        }
    }
    if let Some(done) = current.take() {
        samples.push(finish(done, &mut seen_t)?);
    }
    if samples.is_empty() {
        return Err(PipelineError::Schema("file holds a header but no rows".into()));
    }
    Ok(samples)
}

fn peek_pixel_count(path: &Path) -> Result<usize, PipelineError> {
    let io_err = |source| PipelineError::Io {
        path: path.display().to_string(),
        source,
    };
    let text = fs::read_to_string(path).map_err(io_err)?;
    let header = text
        .lines()
        .next()
        .ok_or_else(|| PipelineError::Schema("empty file".into()))?;
    parse_header(header)
}

fn parse_header(header: &str) -> Result<usize, PipelineError> {
    let fields: Vec<&str> = header.split(',').collect();
    if fields.len() < 5 || fields[..4] != ["sample_id", "t", "label", "magnitude"] {
        return Err(PipelineError::Schema(format!(
            "header must start with sample_id,t,label,magnitude and at least one pixel column, got `{header}`"
        )));
    }
    for (i, field) in fields[4..].iter().enumerate() {
        if *field != format!("p{i}") {
            return Err(PipelineError::Schema(format!(
                "pixel column {i} must be named p{i}, got `{field}`"
            )));
        }
    }
    Ok(fields.len() - 4)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::{generate_synthetic, GeneratorConfig};

    fn tmp(name: &str) -> std::path::PathBuf {
        let dir = std::env::temp_dir().join("sparrownet-csv-tests");
        std::fs::create_dir_all(&dir).unwrap();
        dir.join(name)
    }

    #[test]
    fn round_trip_is_exact() {
        let cfg = GeneratorConfig {
            n_samples: 6,
            t: 4,
            height: 5,
            width: 5,
            ..GeneratorConfig::default()
        };
        let samples = generate_synthetic(&cfg).unwrap();
        let path = tmp("round_trip.csv");
        save_csv(&samples, &path).unwrap();
        let back = load_csv(&path).unwrap();
        assert_eq!(samples, back);
    }

    #[test]
    fn shaped_loader_handles_non_square() {
        let cfg = GeneratorConfig {
            n_samples: 3,
            t: 3,
            height: 2,
            width: 6,
            ..GeneratorConfig::default()
        };
        let samples = generate_synthetic(&cfg).unwrap();
        let path = tmp("non_square.csv");
        save_csv(&samples, &path).unwrap();
        // 12 pixels: square inference cannot know it is 2x6.
        assert!(load_csv(&path).is_err());
        let back = load_csv_shaped(&path, 2, 6).unwrap();
        assert_eq!(samples, back);
        assert!(load_csv_shaped(&path, 3, 4).unwrap() != samples);
    }

    #[test]
    fn empty_file_is_a_schema_error() {
        let path = tmp("empty.csv");
        std::fs::write(&path, "").unwrap();
        assert!(matches!(load_csv(&path), Err(PipelineError::Schema(_))));
        std::fs::write(&path, "sample_id,t,label,magnitude,p0\n").unwrap();
        assert!(matches!(load_csv(&path), Err(PipelineError::Schema(_))));
    }

    #[test]
    fn wrong_field_count_names_the_line() {
        let path = tmp("bad_fields.csv");
        std::fs::write(
            &path,
            "sample_id,t,label,magnitude,p0\n0,0,0,0,1.5\n0,1,0,0\n",
        )
        .unwrap();
        match load_csv(&path) {
            Err(PipelineError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn non_monotone_t_is_rejected() {
        let path = tmp("bad_t.csv");
        std::fs::write(
            &path,
            "sample_id,t,label,magnitude,p0\n0,0,0,0,1.0\n0,2,0,0,1.0\n",
        )
        .unwrap();
        assert!(matches!(load_csv(&path), Err(PipelineError::Parse { line: 3, .. })));
    }

    #[test]
    fn inconsistent_frame_count_is_schema_error() {
        let path = tmp("ragged.csv");
        std::fs::write(
            &path,
            "sample_id,t,label,magnitude,p0\n0,0,0,0,1.0\n0,1,0,0,1.0\n1,0,0,0,2.0\n",
        )
        .unwrap();
        assert!(matches!(load_csv(&path), Err(PipelineError::Schema(_))));
    }

    #[test]
    fn normal_sample_with_magnitude_is_schema_error() {
        let path = tmp("bad_magnitude.csv");
        std::fs::write(
            &path,
            "sample_id,t,label,magnitude,p0\n0,0,0,2.5,1.0\n",
        )
        .unwrap();
        assert!(matches!(load_csv(&path), Err(PipelineError::Schema(_))));
    }
}
