//! Coordination signals: normalized message, description and image text,
//! plus canonical URLs.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;
use url::Url;

use crate::corpus::Post;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KeyKind {
    Message,
    Description,
    ImageText,
    Url,
}

impl KeyKind {
    pub const ALL: [KeyKind; 4] = [
        KeyKind::Message,
        KeyKind::Description,
        KeyKind::ImageText,
        KeyKind::Url,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            KeyKind::Message => "message",
            KeyKind::Description => "description",
            KeyKind::ImageText => "image_text",
            KeyKind::Url => "url",
        }
    }
}

impl fmt::Display for KeyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for KeyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        KeyKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::config(format!("unknown key kind {s:?}")))
    }
}

/// A normalized piece of shared content. The kind is part of the identity,
/// so identical message and description text yield two different keys.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ContentKey {
    pub kind: KeyKind,
    pub value: String,
}

impl ContentKey {
    pub fn new(kind: KeyKind, value: impl Into<String>) -> ContentKey {
        ContentKey {
            kind,
            value: value.into(),
        }
    }
}

impl fmt::Display for ContentKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.kind, self.value)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NormalizationConfig {
    /// Minimum length, in characters, of a normalized text key.
    pub min_text_length: usize,
    /// Query parameter names to strip; an entry ending in `*` is a prefix.
    pub tracking_params: Vec<String>,
    pub strip_fragment: bool,
}

impl Default for NormalizationConfig {
    fn default() -> Self {
        NormalizationConfig {
            min_text_length: 15,
            tracking_params: vec!["utm_*".into(), "fbclid".into(), "gclid".into()],
            strip_fragment: true,
        }
    }
}

impl NormalizationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_text_length < 1 {
            return Err(Error::config("min_text_length must be at least 1"));
        }
        if self.tracking_params.iter().any(|p| p.is_empty() || p == "*") {
            return Err(Error::config("tracking_params entries must name a parameter"));
        }
        Ok(())
    }

    fn is_tracking_param(&self, name: &str) -> bool {
        let name = name.to_ascii_lowercase();
        self.tracking_params.iter().any(|pattern| {
            let pattern = pattern.to_ascii_lowercase();
            match pattern.strip_suffix('*') {
                Some(prefix) => name.starts_with(prefix),
                None => name == pattern,
            }
        })
    }
}

fn is_invisible(c: char) -> bool {
    matches!(c,
        '\u{00AD}'
        | '\u{034F}'
        | '\u{061C}'
        | '\u{180E}'
        | '\u{200B}'..='\u{200F}'
        | '\u{202A}'..='\u{202E}'
        | '\u{2060}'..='\u{2064}'
        | '\u{2066}'..='\u{206F}'
        | '\u{FE00}'..='\u{FE0F}'
        | '\u{FEFF}')
}

/// Compatibility-normalizes, case-folds, drops control and zero-width
/// characters and collapses whitespace. Punctuation is kept. Returns `None`
/// when fewer than `min_text_length` characters remain.
pub fn normalize_text(raw: &str, min_text_length: usize) -> Option<String> {
    let composed: String = raw.nfkc().collect();
    let folded: String = caseless::default_case_fold_str(&composed).nfkc().collect();
    let mut out = String::with_capacity(folded.len());
    let mut pending_space = false;
    for c in folded.chars() {
        if c.is_whitespace() {
            pending_space = true;
        } else if c.is_control() || is_invisible(c) {
            continue;
        } else {
            if pending_space && !out.is_empty() {
                out.push(' ');
            }
            pending_space = false;
            out.push(c);
        }
    }
    (out.chars().count() >= min_text_length.max(1)).then_some(out)
}

/// Canonical form of an absolute URL, or `None` when the input is not one.
///
/// Scheme and host are lowercased, default ports dropped, tracking query
/// parameters removed (survivors keep their order), the fragment dropped when
/// configured and trailing slashes removed from non-root paths.
pub fn canonicalize_url(raw: &str, config: &NormalizationConfig) -> Option<String> {
    let raw = raw.trim();
    if raw.is_empty() {
        return None;
    }
    let mut url = Url::parse(raw).ok()?;
    if url.cannot_be_a_base() || url.host_str().is_none_or(str::is_empty) {
        return None;
    }

    if let Some(query) = url.query().map(str::to_owned) {
        let kept: Vec<&str> = query
            .split('&')
            .filter(|pair| !pair.is_empty())
            .filter(|pair| {
                let name = pair.split('=').next().unwrap_or("");
                !config.is_tracking_param(name)
            })
            .collect();
        if kept.is_empty() {
            url.set_query(None);
        } else {
            url.set_query(Some(&kept.join("&")));
        }
    }
    if config.strip_fragment {
        url.set_fragment(None);
    }
    let path = url.path();
    if path.len() > 1 && path.ends_with('/') {
        let trimmed = path.trim_end_matches('/');
        let trimmed = if trimmed.is_empty() { "/" } else { trimmed }.to_owned();
        url.set_path(&trimmed);
    }
    Some(url.into())
}

/// All coordination signals carried by a post, as a set.
pub fn extract_keys(post: &Post, config: &NormalizationConfig) -> BTreeSet<ContentKey> {
    let mut keys = BTreeSet::new();
    let texts = [
        (KeyKind::Message, post.message.as_deref()),
        (KeyKind::Description, post.description.as_deref()),
        (KeyKind::ImageText, post.image_text.as_deref()),
    ];
    for (kind, text) in texts {
        if let Some(value) = text.and_then(|t| normalize_text(t, config.min_text_length)) {
            keys.insert(ContentKey::new(kind, value));
        }
    }
    for link in &post.links {
        if let Some(value) = canonicalize_url(link, config) {
            keys.insert(ContentKey::new(KeyKind::Url, value));
        }
    }
    keys
}
