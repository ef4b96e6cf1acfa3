//! LLM backends: a scripted mock for offline runs and an HTTP gateway for
//! chat-completion endpoints. All requests are sent with temperature 0.

use super::KnowledgeError;
use regex::Regex;
use serde::{Deserialize, Serialize};
use std::path::Path;
use std::time::Duration;

/// A text-completion provider. Implementations must be deterministic for
/// temperature 0 and a fixed backend; the scripted mock is exactly
/// deterministic, remote backends are best-effort.
pub trait LlmBackend: Send + Sync {
    /// Stable identifier (provider + model) used for cache keys.
    fn identifier(&self) -> &str;

    /// Context window in tokens.
    fn max_context(&self) -> usize;

    /// One completion for one prompt.
    fn complete(&self, prompt: &str) -> Result<String, KnowledgeError>;
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ScriptRule {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    exact: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    regex: Option<String>,
    response: String,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
struct ScriptFile {
    #[serde(default)]
    identifier: Option<String>,
    #[serde(default)]
    max_context: Option<usize>,
    #[serde(default)]
    rules: Vec<ScriptRule>,
    #[serde(default)]
    default: Option<String>,
}

enum Matcher {
    Exact(String),
    Pattern(Regex),
}

/// Scripted backend: an ordered list of exact-or-regex prompt patterns with
/// canned responses. Regex rules may reference capture groups (`$1`, ...) in
/// their response. First matching rule wins.
pub struct MockBackend {
    identifier: String,
    max_context: usize,
    rules: Vec<(Matcher, String)>,
    default: Option<String>,
}

impl MockBackend {
    pub fn new(identifier: impl Into<String>) -> Self {
        Self {
            identifier: identifier.into(),
            max_context: 8192,
            rules: Vec::new(),
            default: None,
        }
    }

    pub fn with_max_context(mut self, max_context: usize) -> Self {
        self.max_context = max_context;
        self
    }

    pub fn with_default(mut self, response: impl Into<String>) -> Self {
        self.default = Some(response.into());
        self
    }

    pub fn exact(mut self, prompt: impl Into<String>, response: impl Into<String>) -> Self {
        self.rules
            .push((Matcher::Exact(prompt.into()), response.into()));
        self
    }

    pub fn pattern(
        mut self,
        pattern: &str,
        response: impl Into<String>,
    ) -> Result<Self, KnowledgeError> {
        let re = Regex::new(pattern).map_err(|e| KnowledgeError::Script {
            msg: format!("bad pattern {pattern:?}: {e}"),
        })?;
        self.rules.push((Matcher::Pattern(re), response.into()));
        Ok(self)
    }

    /// Loads a script from its JSON file form.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, KnowledgeError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| KnowledgeError::Script {
            msg: format!("cannot read {}: {e}", path.display()),
        })?;
        let file: ScriptFile =
            serde_json::from_str(&text).map_err(|e| KnowledgeError::Script {
                msg: format!("{}: {e}", path.display()),
            })?;
        let mut backend = Self::new(
            file.identifier
                .unwrap_or_else(|| format!("mock:{}", path.display())),
        );
        if let Some(mc) = file.max_context {
            backend.max_context = mc;
        }
        backend.default = file.default;
        for (i, rule) in file.rules.into_iter().enumerate() {
            backend = match (rule.exact, rule.regex) {
                (Some(exact), None) => backend.exact(exact, rule.response),
                (None, Some(regex)) => backend.pattern(&regex, rule.response)?,
                _ => {
                    return Err(KnowledgeError::Script {
                        msg: format!("rule {i}: need exactly one of `exact` or `regex`"),
                    })
                }
            };
        }
        Ok(backend)
    }

    /// Writes the script rules of an in-memory mock to a JSON file.
    pub fn rules_to_file(
        path: impl AsRef<Path>,
        identifier: &str,
        exact_rules: &[(String, String)],
        default: Option<&str>,
    ) -> Result<(), KnowledgeError> {
        let file = ScriptFile {
            identifier: Some(identifier.to_string()),
            max_context: None,
            rules: exact_rules
                .iter()
                .map(|(exact, response)| ScriptRule {
                    exact: Some(exact.clone()),
                    regex: None,
                    response: response.clone(),
                })
                .collect(),
            default: default.map(String::from),
        };
        let json = serde_json::to_string_pretty(&file).expect("script serializes");
        std::fs::write(path.as_ref(), json).map_err(|e| KnowledgeError::Script {
            msg: format!("cannot write {}: {e}", path.as_ref().display()),
        })
    }
}

impl LlmBackend for MockBackend {
    fn identifier(&self) -> &str {
        &self.identifier
    }

    fn max_context(&self) -> usize {
        self.max_context
    }

    fn complete(&self, prompt: &str) -> Result<String, KnowledgeError> {
        for (matcher, response) in &self.rules {
            match matcher {
                Matcher::Exact(p) if p == prompt => return Ok(response.clone()),
                Matcher::Pattern(re) => {
                    if let Some(caps) = re.captures(prompt) {
                        let mut out = String::new();
                        caps.expand(response, &mut out);
                        return Ok(out);
                    }
                }
                _ => {}
            }
        }
        match &self.default {
            Some(response) => Ok(response.clone()),
            None => Err(KnowledgeError::Script {
                msg: format!(
                    "no scripted response for prompt starting {:?}",
                    prompt.chars().take(60).collect::<String>()
                ),
            }),
        }
    }
}

/// Connection settings for an OpenAI-style chat-completions endpoint. The
/// API key is read from the named environment variable, never from config.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HttpConfig {
    pub endpoint: String,
    pub model: String,
    #[serde(default = "default_api_key_env")]
    pub api_key_env: String,
    #[serde(default = "default_timeout_secs")]
    pub timeout_secs: u64,
    #[serde(default = "default_http_context")]
    pub max_context: usize,
}

fn default_api_key_env() -> String {
    "LLM_API_KEY".to_string()
}

fn default_timeout_secs() -> u64 {
    30
}

fn default_http_context() -> usize {
    8192
}

pub struct HttpBackend {
    identifier: String,
    config: HttpConfig,
    api_key: Option<String>,
    agent: ureq::Agent,
}

impl HttpBackend {
    pub fn new(config: HttpConfig) -> Self {
        let api_key = std::env::var(&config.api_key_env).ok();
        let agent = ureq::AgentBuilder::new()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build();
        Self {
            identifier: format!("http:{}:{}", config.endpoint, config.model),
            config,
            api_key,
            agent,
        }
    }
}

impl LlmBackend for HttpBackend {
    fn identifier(&self) -> &str {
        &self.identifier
    }

    fn max_context(&self) -> usize {
        self.config.max_context
    }

    fn complete(&self, prompt: &str) -> Result<String, KnowledgeError> {
        let body = serde_json::json!({
            "model": self.config.model,
            "temperature": 0,
            "messages": [{ "role": "user", "content": prompt }],
        });
        let mut request = self
            .agent
            .post(&self.config.endpoint)
            .set("content-type", "application/json");
        if let Some(key) = &self.api_key {
            request = request.set("authorization", &format!("Bearer {key}"));
        }
        let response = match request.send_string(&body.to_string()) {
            Ok(r) => r,
            Err(ureq::Error::Status(429, _)) => return Err(KnowledgeError::RateLimited),
            Err(e) => {
                return Err(KnowledgeError::Transport {
                    msg: e.to_string(),
                    retries: 0,
                })
            }
        };
        let json: serde_json::Value =
            response
                .into_json()
                .map_err(|e| KnowledgeError::Transport {
                    msg: format!("bad response body: {e}"),
                    retries: 0,
                })?;
        json["choices"][0]["message"]["content"]
            .as_str()
            .map(String::from)
            .ok_or_else(|| KnowledgeError::Transport {
                msg: "response has no choices[0].message.content".into(),
                retries: 0,
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_rule_wins() {
        let mock = MockBackend::new("mock:test")
            .exact("ping", "pong")
            .with_default("fallback");
        assert_eq!(mock.complete("ping").unwrap(), "pong");
        assert_eq!(mock.complete("other").unwrap(), "fallback");
    }

    #[test]
    fn regex_rule_expands_captures() {
        let mock = MockBackend::new("mock:test")
            .pattern(r"explain (\w+)", "$1 is a footballer [PER]")
            .unwrap();
        assert_eq!(
            mock.complete("explain Messi").unwrap(),
            "Messi is a footballer [PER]"
        );
    }

    #[test]
    fn no_match_without_default_is_error() {
        let mock = MockBackend::new("mock:test");
        assert!(mock.complete("anything").is_err());
    }

    #[test]
    fn script_file_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("script.json");
        MockBackend::rules_to_file(
            &path,
            "mock:demo",
            &[("q1".into(), "a1".into())],
            Some("dflt"),
        )
        .unwrap();
        let mock = MockBackend::from_file(&path).unwrap();
        assert_eq!(mock.identifier(), "mock:demo");
        assert_eq!(mock.complete("q1").unwrap(), "a1");
        assert_eq!(mock.complete("??").unwrap(), "dflt");
    }

    #[test]
    fn script_rule_needs_one_matcher() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.json");
        std::fs::write(&path, r#"{"rules":[{"response":"x"}]}"#).unwrap();
        assert!(MockBackend::from_file(&path).is_err());
    }
}
