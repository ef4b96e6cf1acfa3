//! BIO tag validation, repair, and span conversion.

use super::Span;

enum Tag<'a> {
    Outside,
    Begin(&'a str),
    Inside(&'a str),
}

fn parse_tag(tag: &str) -> Result<Tag<'_>, String> {
    if tag == "O" {
        return Ok(Tag::Outside);
    }
    if let Some(t) = tag.strip_prefix("B-") {
        if t.is_empty() {
            return Err(format!("tag {tag:?} has empty type"));
        }
        return Ok(Tag::Begin(t));
    }
    if let Some(t) = tag.strip_prefix("I-") {
        if t.is_empty() {
            return Err(format!("tag {tag:?} has empty type"));
        }
        return Ok(Tag::Inside(t));
    }
    Err(format!("tag {tag:?} is not O, B-<type>, or I-<type>"))
}

/// Checks that every tag is well-formed and no `I-t` follows `O`, start of
/// sequence, or a tag of a different type.
pub fn validate_bio<S: AsRef<str>>(tags: &[S]) -> Result<(), String> {
    let mut prev: Option<&str> = None;
    for (i, tag) in tags.iter().enumerate() {
        match parse_tag(tag.as_ref()).map_err(|e| format!("position {i}: {e}"))? {
            Tag::Outside => prev = None,
            Tag::Begin(t) => prev = Some(t),
            Tag::Inside(t) => match prev {
                Some(p) if p == t => {}
                _ => {
                    return Err(format!(
                        "position {i}: I-{t} does not continue a {t} span"
                    ))
                }
            },
        }
    }
    Ok(())
}

/// Repairs illegal `I-t` tags (after O, start, or a different type) by
/// converting them to `B-t`. Returns the repaired tags and the repair count.
///
/// Malformed tag strings are not repairable and surface as errors upstream;
/// this only fixes sequence violations.
pub fn repair_bio<S: AsRef<str>>(tags: &[S]) -> (Vec<String>, usize) {
    let mut out = Vec::with_capacity(tags.len());
    let mut repairs = 0;
    let mut prev: Option<String> = None;
    for tag in tags {
        let tag = tag.as_ref();
        match parse_tag(tag) {
            Ok(Tag::Outside) => {
                out.push("O".to_string());
                prev = None;
            }
            Ok(Tag::Begin(t)) => {
                out.push(tag.to_string());
                prev = Some(t.to_string());
            }
            Ok(Tag::Inside(t)) => {
                let continues = prev.as_deref() == Some(t);
                if continues {
                    out.push(tag.to_string());
                } else {
                    out.push(format!("B-{t}"));
                    repairs += 1;
                }
                prev = Some(t.to_string());
            }
            // Leave unparseable tags untouched; validate_bio reports them.
            Err(_) => out.push(tag.to_string()),
        }
    }
    (out, repairs)
}

/// Decodes valid BIO tags into maximal spans, ordered by start index.
pub fn bio_decode<S: AsRef<str>>(tags: &[S]) -> Vec<Span> {
    let mut spans = Vec::new();
    let mut open: Option<(usize, String)> = None;
    for (i, tag) in tags.iter().enumerate() {
        match parse_tag(tag.as_ref()) {
            Ok(Tag::Begin(t)) => {
                if let Some((start, label)) = open.take() {
                    spans.push(Span::new(start, i, label));
                }
                open = Some((i, t.to_string()));
            }
            Ok(Tag::Inside(t)) => match &open {
                Some((_, label)) if label == t => {}
                // Post-repair this cannot happen; treat defensively as a begin.
                _ => {
                    if let Some((start, label)) = open.take() {
                        spans.push(Span::new(start, i, label));
                    }
                    open = Some((i, t.to_string()));
                }
            },
            _ => {
                if let Some((start, label)) = open.take() {
                    spans.push(Span::new(start, i, label));
                }
            }
        }
    }
    if let Some((start, label)) = open {
        spans.push(Span::new(start, tags.len(), label));
    }
    spans
}

/// Encodes non-overlapping spans into a BIO tag sequence of length `len`.
/// Spans are sorted internally; overlapping spans are a caller bug and the
/// later span wins.
pub fn bio_encode(spans: &[Span], len: usize) -> Vec<String> {
    let mut tags = vec!["O".to_string(); len];
    let mut sorted: Vec<&Span> = spans.iter().collect();
    sorted.sort();
    for span in sorted {
        if span.is_empty() || span.end > len {
            continue;
        }
        tags[span.start] = format!("B-{}", span.label);
        for tag in tags.iter_mut().take(span.end).skip(span.start + 1) {
            *tag = format!("I-{}", span.label);
        }
    }
    tags
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::{prop_assert_eq, proptest};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    /// Brute-force reference decoder: for every (start, end) pair, check
    /// whether the window is exactly one B followed by matching Is, bounded
    /// by non-continuation on both sides.
    fn reference_decode(tags: &[String]) -> Vec<Span> {
        let n = tags.len();
        let mut spans = Vec::new();
        for start in 0..n {
            let label = match tags[start].strip_prefix("B-") {
                Some(t) => t,
                None => continue,
            };
            let mut end = start + 1;
            while end < n && tags[end] == format!("I-{label}") {
                end += 1;
            }
            spans.push(Span::new(start, end, label));
        }
        spans.sort();
        spans
    }

    fn random_tags(rng: &mut ChaCha8Rng, len: usize, valid: bool) -> Vec<String> {
        let types = ["PER", "LOC", "ORG", "MISC"];
        let mut raw: Vec<String> = (0..len)
            .map(|_| match rng.gen_range(0..3) {
                0 => "O".to_string(),
                1 => format!("B-{}", types.choose(rng).unwrap()),
                _ => format!("I-{}", types.choose(rng).unwrap()),
            })
            .collect();
        if valid {
            raw = repair_bio(&raw).0;
        }
        raw
    }

    #[test]
    fn decode_basic() {
        assert_eq!(
            bio_decode(&["B-PER", "I-PER", "O"]),
            vec![Span::new(0, 2, "PER")]
        );
        assert_eq!(bio_decode(&["O", "O"]), Vec::<Span>::new());
    }

    #[test]
    fn decode_adjacent_spans() {
        assert_eq!(
            bio_decode(&["B-PER", "B-PER", "I-PER"]),
            vec![Span::new(0, 1, "PER"), Span::new(1, 3, "PER")]
        );
    }

    #[test]
    fn repair_illegal_inside() {
        let (tags, n) = repair_bio(&["O", "I-PER"]);
        assert_eq!(tags, vec!["O", "B-PER"]);
        assert_eq!(n, 1);
        validate_bio(&tags).unwrap();
    }

    #[test]
    fn repair_type_switch() {
        let (tags, n) = repair_bio(&["B-PER", "I-LOC", "I-LOC"]);
        assert_eq!(tags, vec!["B-PER", "B-LOC", "I-LOC"]);
        assert_eq!(n, 1);
        validate_bio(&tags).unwrap();
    }

    #[test]
    fn repair_is_idempotent_and_validates() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..500 {
            let len = rng.gen_range(0..20);
            let raw = random_tags(&mut rng, len, false);
            let (fixed, _) = repair_bio(&raw);
            validate_bio(&fixed).unwrap();
            let (again, n) = repair_bio(&fixed);
            assert_eq!(again, fixed);
            assert_eq!(n, 0);
        }
    }

    #[test]
    fn decode_matches_reference_on_1000_random_sequences() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..1000 {
            let len = rng.gen_range(0..24);
            let tags = random_tags(&mut rng, len, true);
            assert_eq!(bio_decode(&tags), reference_decode(&tags), "tags {tags:?}");
        }
    }

    #[test]
    fn reject_malformed_tag_strings() {
        assert!(validate_bio(&["B-"]).is_err());
        assert!(validate_bio(&["X-PER"]).is_err());
        assert!(validate_bio(&["b-PER"]).is_err());
    }

    proptest! {
        /// decode ∘ encode is the identity on sorted non-overlapping spans.
        #[test]
        fn encode_decode_roundtrip(seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let len = rng.gen_range(1..30usize);
            let types = ["PER", "LOC", "ORG"];
            let mut spans = Vec::new();
            let mut pos = 0usize;
            while pos < len {
                if rng.gen_bool(0.4) {
                    let width = rng.gen_range(1..=3.min(len - pos));
                    spans.push(Span::new(pos, pos + width, *types.choose(&mut rng).unwrap()));
                    pos += width;
                }
                pos += 1;
            }
            let tags = bio_encode(&spans, len);
            validate_bio(&tags).unwrap();
            prop_assert_eq!(bio_decode(&tags), spans);
        }
    }
}
