//! The six fixed prompt templates and prompt rendering.

use super::KnowledgeError;
use crate::corpus::Sample;
use serde::{Deserialize, Serialize};

/// The prompting perspectives used to elicit knowledge and augmentations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptKind {
    Noun,
    Sentence,
    Multimodality,
    Style,
    EntityFactcheck,
    Image,
}

impl PromptKind {
    pub const ALL: [PromptKind; 6] = [
        PromptKind::Noun,
        PromptKind::Sentence,
        PromptKind::Multimodality,
        PromptKind::Style,
        PromptKind::EntityFactcheck,
        PromptKind::Image,
    ];

    /// Default template wording. `{text}` receives the sample text and
    /// `{caption}` the image caption.
    pub fn default_template(self) -> &'static str {
        match self {
            PromptKind::Noun => {
                "Help me explain the meaning of special words for understanding. {text}"
            }
            PromptKind::Sentence => {
                "Explain the sentence to me with necessary background. {text}"
            }
            PromptKind::Multimodality => {
                "What is the relation between the text and the attached image? {text} {caption}"
            }
            PromptKind::Style => {
                "Transform the sentence in Twitter style without changing the meaning. {text}"
            }
            PromptKind::EntityFactcheck => {
                "Whether the sentence is possible in fact, answer yes or no. {text}"
            }
            PromptKind::Image => "What is a possible image with the text in a tweet? {text}",
        }
    }
}

impl std::fmt::Display for PromptKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            PromptKind::Noun => "noun",
            PromptKind::Sentence => "sentence",
            PromptKind::Multimodality => "multimodality",
            PromptKind::Style => "style",
            PromptKind::EntityFactcheck => "entity_factcheck",
            PromptKind::Image => "image",
        };
        write!(f, "{name}")
    }
}

/// Template texts per kind. Defaults are fixed wordings; weaker backends may
/// need adjusted phrasings, so every template can be overridden.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct TemplateSet {
    pub noun: Option<String>,
    pub sentence: Option<String>,
    pub multimodality: Option<String>,
    pub style: Option<String>,
    pub entity_factcheck: Option<String>,
    pub image: Option<String>,
}

impl TemplateSet {
    pub fn text(&self, kind: PromptKind) -> &str {
        let custom = match kind {
            PromptKind::Noun => &self.noun,
            PromptKind::Sentence => &self.sentence,
            PromptKind::Multimodality => &self.multimodality,
            PromptKind::Style => &self.style,
            PromptKind::EntityFactcheck => &self.entity_factcheck,
            PromptKind::Image => &self.image,
        };
        custom.as_deref().unwrap_or_else(|| kind.default_template())
    }

    /// Overridden templates must keep the slots the renderer fills.
    pub fn validate(&self) -> Result<(), KnowledgeError> {
        for kind in PromptKind::ALL {
            let text = self.text(kind);
            if !text.contains("{text}") {
                return Err(KnowledgeError::Template {
                    kind,
                    msg: "missing {text} slot".into(),
                });
            }
            if kind == PromptKind::Multimodality && !text.contains("{caption}") {
                return Err(KnowledgeError::Template {
                    kind,
                    msg: "missing {caption} slot".into(),
                });
            }
        }
        Ok(())
    }

    /// Renders the prompt for `kind`: the template wording with the sample
    /// text (tokens joined by single spaces) and, for the multimodality
    /// prompt, the caption.
    pub fn render(&self, kind: PromptKind, sample: &Sample) -> Result<String, KnowledgeError> {
        if sample.tokens.is_empty() {
            return Err(KnowledgeError::EmptyPrompt);
        }
        let text = sample.text();
        let template = self.text(kind);
        let mut rendered = template.replace("{text}", &text);
        if kind == PromptKind::Multimodality {
            let caption = sample
                .caption
                .as_deref()
                .filter(|c| !c.is_empty())
                .ok_or(KnowledgeError::MissingCaption {
                    sample_id: sample.id.clone(),
                })?;
            rendered = rendered.replace("{caption}", caption);
        }
        Ok(rendered)
    }
}

/// Renders `kind` for `sample` with the default templates.
pub fn render_prompt(kind: PromptKind, sample: &Sample) -> Result<String, KnowledgeError> {
    TemplateSet::default().render(kind, sample)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ner(tokens: &[&str]) -> Sample {
        let toks: Vec<String> = tokens.iter().map(|t| t.to_string()).collect();
        let tags = vec!["O".to_string(); toks.len()];
        Sample::ner("t", toks, tags)
    }

    #[test]
    fn noun_prompt_verbatim() {
        let s = ner(&["Messi", "scores"]);
        assert_eq!(
            render_prompt(PromptKind::Noun, &s).unwrap(),
            "Help me explain the meaning of special words for understanding. Messi scores"
        );
    }

    #[test]
    fn sentence_prompt_verbatim() {
        let s = ner(&["ok"]);
        assert_eq!(
            render_prompt(PromptKind::Sentence, &s).unwrap(),
            "Explain the sentence to me with necessary background. ok"
        );
    }

    #[test]
    fn multimodality_needs_caption() {
        let s = ner(&["a", "b"]);
        assert!(matches!(
            render_prompt(PromptKind::Multimodality, &s),
            Err(KnowledgeError::MissingCaption { .. })
        ));
        let mut s = s;
        s.caption = Some("a boy holding a wand".into());
        assert_eq!(
            render_prompt(PromptKind::Multimodality, &s).unwrap(),
            "What is the relation between the text and the attached image? a b a boy holding a wand"
        );
    }

    #[test]
    fn every_prompt_starts_with_its_fixed_wording() {
        let mut s = ner(&["hello", "world"]);
        s.caption = Some("cap".into());
        for kind in PromptKind::ALL {
            let rendered = TemplateSet::default().render(kind, &s).unwrap();
            let wording = kind.default_template().split("{text}").next().unwrap();
            assert!(
                rendered.starts_with(wording),
                "{kind}: {rendered:?} does not start with {wording:?}"
            );
        }
    }

    #[test]
    fn override_must_keep_slots() {
        let set = TemplateSet {
            multimodality: Some("Explain the picture. {text}".into()),
            ..Default::default()
        };
        assert!(set.validate().is_err());
        let set = TemplateSet {
            noun: Some("Define the odd words. {text}".into()),
            ..Default::default()
        };
        set.validate().unwrap();
        let s = ner(&["x"]);
        assert_eq!(
            set.render(PromptKind::Noun, &s).unwrap(),
            "Define the odd words. x"
        );
    }
}
