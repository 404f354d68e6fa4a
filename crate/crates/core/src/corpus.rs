//! Post ingestion: parsing JSONL/CSV exports into [`Post`] records,
//! de-duplication by post id and keyword filtering.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::io::{BufRead, BufReader, Read, Write};
use std::str::FromStr;

use chrono::{DateTime, NaiveDateTime};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MediaType {
    Status,
    Link,
    Photo,
    Video,
    Other,
}

impl MediaType {
    pub fn as_str(self) -> &'static str {
        match self {
            MediaType::Status => "status",
            MediaType::Link => "link",
            MediaType::Photo => "photo",
            MediaType::Video => "video",
            MediaType::Other => "other",
        }
    }

    /// Accepts the canonical names plus the post-type labels found in
    /// CrowdTangle exports ("Native Video", "YouTube", "Album", ...).
    pub fn from_label(label: &str) -> Option<MediaType> {
        let lower = label.trim().to_lowercase();
        let media = match lower.as_str() {
            "status" => MediaType::Status,
            "link" => MediaType::Link,
            "photo" | "album" | "image" => MediaType::Photo,
            "video" | "native video" | "live video" | "live video complete"
            | "live video scheduled" | "youtube" | "vine" | "igtv" | "reel" => MediaType::Video,
            "other" | "" => MediaType::Other,
            _ => return None,
        };
        Some(media)
    }
}

impl fmt::Display for MediaType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One post published in a group.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Post {
    pub post_id: String,
    pub group_id: String,
    pub group_name: String,
    /// Seconds since the Unix epoch, UTC.
    pub timestamp: i64,
    pub message: Option<String>,
    /// Text attached to a shared link or image thumbnail, shown under the link.
    pub description: Option<String>,
    /// Text extracted from an attached image by an upstream OCR step.
    pub image_text: Option<String>,
    pub links: Vec<String>,
    pub media_type: MediaType,
    pub engagement: Option<u64>,
}

impl Post {
    /// Convenience constructor for a post with no text, links or engagement.
    pub fn new(
        post_id: impl Into<String>,
        group_id: impl Into<String>,
        timestamp: i64,
    ) -> Post {
        let group_id = group_id.into();
        Post {
            post_id: post_id.into(),
            group_name: group_id.clone(),
            group_id,
            timestamp,
            message: None,
            description: None,
            image_text: None,
            links: Vec::new(),
            media_type: MediaType::Status,
            engagement: None,
        }
    }

    pub fn field(&self, field: PostField) -> Option<&str> {
        match field {
            PostField::Message => self.message.as_deref(),
            PostField::Description => self.description.as_deref(),
            PostField::ImageText => self.image_text.as_deref(),
            PostField::GroupName => Some(self.group_name.as_str()),
        }
    }
}

/// Counters for one ingestion run.
///
/// `records_read == parse_failures + duplicates_removed + unique_posts` always holds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub records_read: u64,
    pub parse_failures: u64,
    pub duplicates_removed: u64,
    pub unique_posts: u64,
    pub groups: u64,
}

impl CorpusStats {
    pub fn from_posts(posts: &[Post]) -> CorpusStats {
        CorpusStats {
            records_read: posts.len() as u64,
            parse_failures: 0,
            duplicates_removed: 0,
            unique_posts: posts.len() as u64,
            groups: count_groups(posts),
        }
    }

    /// Moves `removed` posts from the unique count into the duplicate count
    /// and refreshes the group count from the surviving posts.
    pub fn record_dedup(&mut self, removed: u64, survivors: &[Post]) {
        self.duplicates_removed += removed;
        self.unique_posts = survivors.len() as u64;
        self.groups = count_groups(survivors);
    }

    pub fn is_consistent(&self) -> bool {
        self.records_read == self.parse_failures + self.duplicates_removed + self.unique_posts
    }
}

fn count_groups(posts: &[Post]) -> u64 {
    posts
        .iter()
        .map(|p| p.group_id.as_str())
        .collect::<HashSet<_>>()
        .len() as u64
}

/// A record that could not be turned into a [`Post`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseError {
    pub line: u64,
    pub reason: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.reason)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputFormat {
    Jsonl,
    Csv,
}

impl FromStr for InputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "jsonl" | "ndjson" => Ok(InputFormat::Jsonl),
            "csv" => Ok(InputFormat::Csv),
            other => Err(Error::config(format!("unknown input format {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct ParsedCorpus {
    pub posts: Vec<Post>,
    pub errors: Vec<ParseError>,
    pub stats: CorpusStats,
}

/// CrowdTangle export headers and the canonical field each one maps to.
/// Canonical headers are always accepted as-is.
pub const CROWDTANGLE_COLUMNS: &[(&str, &str)] = &[
    ("URL", "post_id"),
    ("Facebook Id", "group_id"),
    ("Group Name", "group_name"),
    ("Page Name", "group_name"),
    ("Post Created", "timestamp"),
    ("Message", "message"),
    ("Description", "description"),
    ("Image Text", "image_text"),
    ("Link", "links"),
    ("Type", "media_type"),
    ("Total Interactions", "engagement"),
];

const CANONICAL_FIELDS: &[&str] = &[
    "post_id",
    "group_id",
    "group_name",
    "timestamp",
    "message",
    "description",
    "image_text",
    "links",
    "media_type",
    "engagement",
];

/// Parses a JSONL or CSV stream. Malformed records are collected, never fatal;
/// only an unreadable stream aborts the parse.
pub fn parse_posts<R: Read>(source: R, format: InputFormat) -> Result<ParsedCorpus> {
    let mut out = match format {
        InputFormat::Jsonl => parse_jsonl(source)?,
        InputFormat::Csv => parse_csv(source)?,
    };
    out.stats = CorpusStats {
        records_read: (out.posts.len() + out.errors.len()) as u64,
        parse_failures: out.errors.len() as u64,
        duplicates_removed: 0,
        unique_posts: out.posts.len() as u64,
        groups: count_groups(&out.posts),
    };
    Ok(out)
}

fn parse_jsonl<R: Read>(source: R) -> Result<ParsedCorpus> {
    let mut reader = BufReader::new(source);
    let mut out = ParsedCorpus::default();
    let mut buf = Vec::new();
    let mut line_no = 0u64;
    loop {
        buf.clear();
        if reader.read_until(b'\n', &mut buf)? == 0 {
            break;
        }
        line_no += 1;
        let record = match std::str::from_utf8(&buf) {
            Ok(s) => s.trim(),
            Err(_) => {
                out.errors.push(ParseError {
                    line: line_no,
                    reason: "invalid UTF-8".into(),
                });
                continue;
            }
        };
        if record.is_empty() {
            continue;
        }
        let parsed = serde_json::from_str::<Value>(record)
            .map_err(|e| format!("invalid JSON: {e}"))
            .and_then(|value| match value {
                Value::Object(map) => post_from_json(&map),
                _ => Err("record is not a JSON object".to_string()),
            });
        match parsed {
            Ok(post) => out.posts.push(post),
            Err(reason) => out.errors.push(ParseError {
                line: line_no,
                reason,
            }),
        }
    }
    Ok(out)
}

fn parse_csv<R: Read>(source: R) -> Result<ParsedCorpus> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(source);
    let headers: Vec<Option<&'static str>> = match reader.headers() {
        Ok(h) => h.iter().map(canonical_column).collect(),
        Err(e) if e.is_io_error() => return Err(e.into()),
        Err(e) => return Err(Error::format("CSV header", e)),
    };
    let mut out = ParsedCorpus::default();
    for result in reader.records() {
        let record = match result {
            Ok(r) => r,
            Err(e) if e.is_io_error() => return Err(e.into()),
            Err(e) => {
                let line = e.position().map(|p| p.line()).unwrap_or(0);
                out.errors.push(ParseError {
                    line,
                    reason: format!("invalid CSV record: {e}"),
                });
                continue;
            }
        };
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let mut fields: HashMap<&str, &str> = HashMap::new();
        for (name, cell) in headers.iter().zip(record.iter()) {
            if let Some(name) = name {
                fields.entry(name).or_insert(cell);
            }
        }
        match post_from_csv(&fields) {
            Ok(post) => out.posts.push(post),
            Err(reason) => out.errors.push(ParseError { line, reason }),
        }
    }
    Ok(out)
}

fn canonical_column(header: &str) -> Option<&'static str> {
    let header = header.trim().trim_start_matches('\u{feff}');
    CANONICAL_FIELDS
        .iter()
        .find(|f| **f == header)
        .copied()
        .or_else(|| {
            CROWDTANGLE_COLUMNS
                .iter()
                .find(|(ct, _)| ct.eq_ignore_ascii_case(header))
                .map(|(_, canonical)| *canonical)
        })
}

fn post_from_json(map: &Map<String, Value>) -> std::result::Result<Post, String> {
    let string = |name: &str| -> std::result::Result<Option<String>, String> {
        match map.get(name) {
            None | Some(Value::Null) => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.clone())),
            Some(_) => Err(format!("{name} must be a string")),
        }
    };
    let required = |name: &str| -> std::result::Result<String, String> {
        match string(name)? {
            Some(s) if !s.is_empty() => Ok(s),
            _ => Err(format!("missing {name}")),
        }
    };

    let post_id = required("post_id")?;
    let group_id = required("group_id")?;
    let group_name = string("group_name")?.unwrap_or_else(|| group_id.clone());
    let timestamp = match map.get("timestamp") {
        None | Some(Value::Null) => return Err("missing timestamp".into()),
        Some(Value::Number(n)) => n
            .as_i64()
            .ok_or_else(|| "timestamp must be an integer".to_string())?,
        Some(Value::String(s)) => parse_timestamp(s)?,
        Some(_) => return Err("timestamp must be an integer".into()),
    };
    if timestamp < 0 {
        return Err("timestamp must be non-negative".into());
    }
    let links = match map.get("links") {
        None | Some(Value::Null) => Vec::new(),
        Some(Value::Array(items)) => items
            .iter()
            .map(|v| match v {
                Value::String(s) if !s.is_empty() => Ok(s.clone()),
                Value::String(_) => Err("links entries must be non-empty".to_string()),
                _ => Err("links entries must be strings".to_string()),
            })
            .collect::<std::result::Result<_, _>>()?,
        Some(_) => return Err("links must be an array".into()),
    };
    let media_type = match string("media_type")? {
        None => MediaType::Other,
        Some(label) => MediaType::from_label(&label)
            .ok_or_else(|| format!("unknown media_type {label:?}"))?,
    };
    let engagement = match map.get("engagement") {
        None | Some(Value::Null) => None,
        Some(Value::Number(n)) => Some(
            n.as_u64()
                .ok_or_else(|| "engagement must be a non-negative integer".to_string())?,
        ),
        Some(_) => return Err("engagement must be a non-negative integer".into()),
    };

    Ok(Post {
        post_id,
        group_id,
        group_name,
        timestamp,
        message: string("message")?,
        description: string("description")?,
        image_text: string("image_text")?,
        links,
        media_type,
        engagement,
    })
}

fn post_from_csv(fields: &HashMap<&str, &str>) -> std::result::Result<Post, String> {
    let cell = |name: &str| -> Option<String> {
        fields
            .get(name)
            .filter(|v| !v.is_empty())
            .map(|v| v.to_string())
    };
    let post_id = cell("post_id").ok_or("missing post_id")?;
    let group_id = cell("group_id").ok_or("missing group_id")?;
    let group_name = cell("group_name").unwrap_or_else(|| group_id.clone());
    let timestamp = parse_timestamp(&cell("timestamp").ok_or("missing timestamp")?)?;
    if timestamp < 0 {
        return Err("timestamp must be non-negative".into());
    }
    let links = cell("links")
        .map(|s| {
            s.split('|')
                .map(str::trim)
                .filter(|l| !l.is_empty())
                .map(String::from)
                .collect()
        })
        .unwrap_or_default();
    let media_type = match cell("media_type") {
        None => MediaType::Other,
        Some(label) => MediaType::from_label(&label)
            .ok_or_else(|| format!("unknown media_type {label:?}"))?,
    };
    let engagement = match cell("engagement") {
        None => None,
        Some(raw) => Some(
            raw.replace(',', "")
                .trim()
                .parse::<u64>()
                .map_err(|_| format!("engagement {raw:?} is not a non-negative integer"))?,
        ),
    };

    Ok(Post {
        post_id,
        group_id,
        group_name,
        timestamp,
        message: cell("message"),
        description: cell("description"),
        image_text: cell("image_text"),
        links,
        media_type,
        engagement,
    })
}

/// Integer epoch seconds, RFC 3339, `YYYY-MM-DD HH:MM:SS ±HHMM`, or a naive
/// `YYYY-MM-DD HH:MM:SS` read as UTC.
fn parse_timestamp(raw: &str) -> std::result::Result<i64, String> {
    let raw = raw.trim();
    if let Ok(secs) = raw.parse::<i64>() {
        return Ok(secs);
    }
    if let Ok(dt) = DateTime::parse_from_rfc3339(raw) {
        return Ok(dt.timestamp());
    }
    if let Ok(dt) = DateTime::parse_from_str(raw, "%Y-%m-%d %H:%M:%S %z") {
        return Ok(dt.timestamp());
    }
    let naive = raw.strip_suffix(" UTC").unwrap_or(raw);
    NaiveDateTime::parse_from_str(naive, "%Y-%m-%d %H:%M:%S")
        .map(|dt| dt.and_utc().timestamp())
        .map_err(|_| format!("unparseable timestamp {raw:?}"))
}

/// Serializes posts in the canonical JSONL schema, one object per line.
pub fn write_posts_jsonl<W: Write>(posts: &[Post], mut sink: W) -> Result<()> {
    for post in posts {
        serde_json::to_writer(&mut sink, post)?;
        sink.write_all(b"\n")?;
    }
    Ok(())
}

/// Keeps one post per `post_id`: the earliest timestamp wins, ties go to the
/// first occurrence. Survivors keep their relative order.
pub fn deduplicate(posts: Vec<Post>) -> (Vec<Post>, u64) {
    let mut best: HashMap<&str, usize> = HashMap::with_capacity(posts.len());
    for (i, post) in posts.iter().enumerate() {
        best.entry(post.post_id.as_str())
            .and_modify(|kept| {
                if post.timestamp < posts[*kept].timestamp {
                    *kept = i;
                }
            })
            .or_insert(i);
    }
    let keep: HashSet<usize> = best.into_values().collect();
    let before = posts.len();
    let survivors: Vec<Post> = posts
        .into_iter()
        .enumerate()
        .filter(|(i, _)| keep.contains(i))
        .map(|(_, p)| p)
        .collect();
    let removed = (before - survivors.len()) as u64;
    (survivors, removed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PostField {
    Message,
    Description,
    ImageText,
    GroupName,
}

impl FromStr for PostField {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "message" => Ok(PostField::Message),
            "description" => Ok(PostField::Description),
            "image_text" => Ok(PostField::ImageText),
            "group_name" => Ok(PostField::GroupName),
            other => Err(Error::config(format!("unknown post field {other:?}"))),
        }
    }
}

impl PostField {
    pub const TEXT_FIELDS: [PostField; 3] =
        [PostField::Message, PostField::Description, PostField::ImageText];
}

/// Case-folds and strips diacritics so that "Vacinação" matches "vacina".
pub fn fold_for_matching(text: &str) -> String {
    let stripped: String = text.nfkd().filter(|c| !is_combining_mark(*c)).collect();
    caseless::default_case_fold_str(&stripped)
}

/// Retains posts where any keyword occurs in any of the selected fields,
/// after case folding and diacritic stripping on both sides.
pub fn filter_by_keywords(
    posts: Vec<Post>,
    keywords: &[String],
    fields: &BTreeSet<PostField>,
) -> Result<Vec<Post>> {
    let needles: Vec<String> = keywords
        .iter()
        .map(|k| fold_for_matching(k))
        .filter(|k| !k.trim().is_empty())
        .collect();
    if needles.is_empty() {
        return Err(Error::config("keyword list is empty"));
    }
    if fields.is_empty() {
        return Err(Error::config("no fields selected for keyword filtering"));
    }
    Ok(posts
        .into_iter()
        .filter(|post| {
            fields.iter().filter_map(|f| post.field(*f)).any(|text| {
                let folded = fold_for_matching(text);
                needles.iter().any(|n| folded.contains(n.as_str()))
            })
        })
        .collect())
}
