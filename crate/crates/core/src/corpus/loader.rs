//! File formats: CoNLL-style MNER blocks, JSON-lines MRE, label vocabularies.

use super::{repair_bio, CorpusError, Sample, Span, Task};
use serde::Deserialize;
use std::fs;
use std::io::Write;
use std::path::Path;

/// Loaded MNER samples plus the number of BIO repairs applied.
#[derive(Debug, Clone)]
pub struct MnerCorpus {
    pub samples: Vec<Sample>,
    pub bio_repairs: usize,
}

fn io_err(path: &Path, source: std::io::Error) -> CorpusError {
    CorpusError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> CorpusError {
    CorpusError::Parse {
        path: path.display().to_string(),
        line,
        msg: msg.into(),
    }
}

/// Loads a CoNLL-style MNER file: blocks separated by blank lines, each with
/// an optional `IMGID:<id>` header and one `token<TAB>tag` line per token.
/// Illegal BIO transitions are repaired (`I-t` → `B-t`) and counted.
pub fn load_mner(path: impl AsRef<Path>) -> Result<MnerCorpus, CorpusError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut samples = Vec::new();
    let mut bio_repairs = 0usize;

    let mut tokens: Vec<String> = Vec::new();
    let mut tags: Vec<String> = Vec::new();
    let mut image_ref: Option<String> = None;

    let mut flush = |tokens: &mut Vec<String>,
                     tags: &mut Vec<String>,
                     image_ref: &mut Option<String>,
                     repairs: &mut usize,
                     samples: &mut Vec<Sample>| {
        if tokens.is_empty() {
            *image_ref = None;
            return;
        }
        let (fixed, n) = repair_bio(tags);
        *repairs += n;
        let mut sample = Sample::ner(
            format!("{}#{}", path.display(), samples.len()),
            std::mem::take(tokens),
            fixed,
        );
        sample.image_ref = image_ref.take();
        tags.clear();
        samples.push(sample);
    };

    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        if line.trim().is_empty() {
            flush(&mut tokens, &mut tags, &mut image_ref, &mut bio_repairs, &mut samples);
            continue;
        }
        // An IMGID header is only recognized at the start of a block; anywhere
        // else it falls through to token parsing and fails the column check.
        if tokens.is_empty() && line.starts_with("IMGID:") {
            image_ref = Some(line["IMGID:".len()..].trim().to_string());
            continue;
        }
        let mut cols = line.split('\t');
        let (token, tag) = match (cols.next(), cols.next(), cols.next()) {
            (Some(token), Some(tag), None) if !token.is_empty() && !tag.is_empty() => {
                (token, tag)
            }
            _ => {
                return Err(parse_err(
                    path,
                    lineno,
                    format!(
                        "expected `token<TAB>tag`, got {} column(s)",
                        line.split('\t').count()
                    ),
                ))
            }
        };
        tokens.push(token.to_string());
        tags.push(tag.trim().to_string());
    }
    flush(&mut tokens, &mut tags, &mut image_ref, &mut bio_repairs, &mut samples);

    for sample in &samples {
        sample.validate()?;
    }
    if bio_repairs > 0 {
        log::warn!("{}: repaired {} illegal BIO tag(s)", path.display(), bio_repairs);
    }
    Ok(MnerCorpus { samples, bio_repairs })
}

/// Writes samples back in the same CoNLL-style format `load_mner` reads.
pub fn write_mner(path: impl AsRef<Path>, samples: &[Sample]) -> Result<(), CorpusError> {
    let path = path.as_ref();
    let mut out = Vec::new();
    for sample in samples {
        if let Some(img) = &sample.image_ref {
            writeln!(out, "IMGID:{img}").unwrap();
        }
        let tags = sample.ner_tags.as_ref().expect("NER sample");
        for (token, tag) in sample.tokens.iter().zip(tags) {
            writeln!(out, "{token}\t{tag}").unwrap();
        }
        writeln!(out).unwrap();
    }
    fs::write(path, out).map_err(|e| io_err(path, e))
}

#[derive(Deserialize)]
struct MreEntity {
    pos: [usize; 2],
    #[serde(default, rename = "type")]
    label: Option<String>,
}

#[derive(Deserialize)]
struct MreLine {
    tokens: Vec<String>,
    relation: String,
    head: MreEntity,
    tail: MreEntity,
    #[serde(default)]
    img_id: Option<String>,
}

/// Loads a JSON-lines MRE file: one object per line with `tokens`,
/// `relation`, `head`/`tail` position pairs, and an optional `img_id`.
pub fn load_mre(path: impl AsRef<Path>) -> Result<Vec<Sample>, CorpusError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut samples = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parsed: MreLine = serde_json::from_str(line)
            .map_err(|e| parse_err(path, i + 1, e.to_string()))?;
        let head = Span::new(
            parsed.head.pos[0],
            parsed.head.pos[1],
            parsed.head.label.unwrap_or_default(),
        );
        let tail = Span::new(
            parsed.tail.pos[0],
            parsed.tail.pos[1],
            parsed.tail.label.unwrap_or_default(),
        );
        let mut sample = Sample::re(
            format!("{}#{}", path.display(), samples.len()),
            parsed.tokens,
            parsed.relation,
            head,
            tail,
        );
        sample.image_ref = parsed.img_id;
        sample
            .validate()
            .map_err(|e| parse_err(path, i + 1, e.to_string()))?;
        samples.push(sample);
    }
    Ok(samples)
}

/// Writes samples back in the JSON-lines format `load_mre` reads.
pub fn write_mre(path: impl AsRef<Path>, samples: &[Sample]) -> Result<(), CorpusError> {
    let path = path.as_ref();
    let mut out = Vec::new();
    for sample in samples {
        assert_eq!(sample.task, Task::Re, "write_mre expects RE samples");
        let head = sample.head_span.as_ref().expect("RE sample");
        let tail = sample.tail_span.as_ref().expect("RE sample");
        let mut obj = serde_json::json!({
            "tokens": sample.tokens,
            "relation": sample.relation,
            "head": { "pos": [head.start, head.end] },
            "tail": { "pos": [tail.start, tail.end] },
        });
        if !head.label.is_empty() {
            obj["head"]["type"] = serde_json::json!(head.label);
        }
        if !tail.label.is_empty() {
            obj["tail"]["type"] = serde_json::json!(tail.label);
        }
        if let Some(img) = &sample.image_ref {
            obj["img_id"] = serde_json::json!(img);
        }
        writeln!(out, "{obj}").unwrap();
    }
    fs::write(path, out).map_err(|e| io_err(path, e))
}

/// Loads a plain-text label vocabulary, one label per line; blank lines and
/// `#` comments are skipped.
pub fn load_labels(path: impl AsRef<Path>) -> Result<Vec<String>, CorpusError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(String::from)
        .collect())
}
