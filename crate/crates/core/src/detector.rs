//! Coordination chains: runs of shares of one content key where each share
//! follows the previous one within the detection window.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::corpus::Post;
use crate::error::{Error, Result};
use crate::keys::{extract_keys, ContentKey, KeyKind, NormalizationConfig};

/// One post carrying one content key.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Share {
    pub key: ContentKey,
    pub post_id: String,
    pub group_id: String,
    pub timestamp: i64,
}

impl Share {
    fn order_key(&self) -> (i64, &str) {
        (self.timestamp, self.post_id.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectionConfig {
    /// Maximum gap between a share and the previous member of its chain.
    pub window_seconds: u64,
    pub min_chain_shares: usize,
    pub min_distinct_groups: usize,
}

impl Default for DetectionConfig {
    fn default() -> Self {
        DetectionConfig {
            window_seconds: 30,
            min_chain_shares: 2,
            min_distinct_groups: 2,
        }
    }
}

impl DetectionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window_seconds < 1 {
            return Err(Error::config("window_seconds must be at least 1"));
        }
        if self.min_chain_shares < 2 {
            return Err(Error::config("min_chain_shares must be at least 2"));
        }
        if self.min_distinct_groups < 1 {
            return Err(Error::config("min_distinct_groups must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoordinationChain {
    pub key: ContentKey,
    /// Sorted by `(timestamp, post_id)`.
    pub shares: Vec<Share>,
    pub span_seconds: i64,
    pub groups: BTreeSet<String>,
}

impl CoordinationChain {
    fn from_shares(shares: Vec<Share>) -> CoordinationChain {
        let key = shares[0].key.clone();
        let span_seconds = shares[shares.len() - 1].timestamp - shares[0].timestamp;
        let groups = shares.iter().map(|s| s.group_id.clone()).collect();
        CoordinationChain {
            key,
            shares,
            span_seconds,
            groups,
        }
    }

    pub fn first_timestamp(&self) -> i64 {
        self.shares[0].timestamp
    }
}

/// Time-sorted shares per content key.
pub type ShareIndex = BTreeMap<ContentKey, Vec<Share>>;

/// Groups every `(post, key)` pair by key. Keys with a single share are kept.
pub fn build_share_index(posts: &[Post], config: &NormalizationConfig) -> ShareIndex {
    let mut index = ShareIndex::new();
    for post in posts {
        for key in extract_keys(post, config) {
            index.entry(key.clone()).or_default().push(Share {
                key,
                post_id: post.post_id.clone(),
                group_id: post.group_id.clone(),
                timestamp: post.timestamp,
            });
        }
    }
    for shares in index.values_mut() {
        shares.sort_by(|a, b| a.order_key().cmp(&b.order_key()));
    }
    index
}

/// Greedy left-to-right chaining over the shares of a single key.
///
/// A share joins the open chain iff it is at most `window_seconds` after the
/// previous chain member; otherwise it seeds a new chain. Chains with too few
/// shares or groups are dropped.
pub fn detect_chains(shares: &[Share], config: &DetectionConfig) -> Result<Vec<CoordinationChain>> {
    if let Some(first) = shares.first() {
        if let Some(stray) = shares.iter().find(|s| s.key != first.key) {
            return Err(Error::Contract(format!(
                "shares mix content keys ({} and {})",
                first.key, stray.key
            )));
        }
    }
    if let Some(pos) = shares
        .windows(2)
        .position(|w| w[0].order_key() > w[1].order_key())
    {
        return Err(Error::Contract(format!(
            "shares are not sorted by (timestamp, post_id) at position {}",
            pos + 1
        )));
    }

    let window = i64::try_from(config.window_seconds).unwrap_or(i64::MAX);
    let mut chains = Vec::new();
    let mut start = 0;
    for end in 1..=shares.len() {
        let breaks = end == shares.len() || shares[end].timestamp - shares[end - 1].timestamp > window;
        if breaks {
            let run = &shares[start..end];
            if run.len() >= config.min_chain_shares {
                let chain = CoordinationChain::from_shares(run.to_vec());
                if chain.groups.len() >= config.min_distinct_groups {
                    chains.push(chain);
                }
            }
            start = end;
        }
    }
    Ok(chains)
}

/// Runs [`detect_chains`] over every key. The result is ordered by key, then
/// by first timestamp, regardless of how the work was scheduled.
pub fn detect_all(index: &ShareIndex, config: &DetectionConfig) -> Result<Vec<CoordinationChain>> {
    config.validate()?;
    let candidates: Vec<&Vec<Share>> = index.values().filter(|s| s.len() >= 2).collect();

    #[cfg(feature = "parallel")]
    let per_key: Vec<Result<Vec<CoordinationChain>>> = {
        use rayon::prelude::*;
        candidates
            .par_iter()
            .map(|shares| detect_chains(shares, config))
            .collect()
    };
    #[cfg(not(feature = "parallel"))]
    let per_key: Vec<Result<Vec<CoordinationChain>>> = candidates
        .iter()
        .map(|shares| detect_chains(shares, config))
        .collect();

    let mut chains = Vec::new();
    for found in per_key {
        chains.extend(found?);
    }
    Ok(chains)
}

/// q-quantile (linear interpolation) of the first-to-second share gap over
/// all keys of the selected kinds that were shared at least twice.
pub fn estimate_threshold_quantile(
    index: &ShareIndex,
    q: f64,
    kinds: &BTreeSet<KeyKind>,
) -> Result<f64> {
    if !(q > 0.0 && q <= 1.0) {
        return Err(Error::config(format!("quantile must be in (0, 1], got {q}")));
    }
    let mut gaps: Vec<f64> = index
        .iter()
        .filter(|(key, shares)| kinds.contains(&key.kind) && shares.len() >= 2)
        .map(|(_, shares)| (shares[1].timestamp - shares[0].timestamp) as f64)
        .collect();
    if gaps.is_empty() {
        return Err(Error::Estimation(
            "no key of the selected kinds was shared twice; use the fixed window instead".into(),
        ));
    }
    gaps.sort_by(f64::total_cmp);
    Ok(interpolated_quantile(&gaps, q))
}

/// Linear-interpolation quantile of sorted, non-empty values.
pub fn interpolated_quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lower = pos.floor() as usize;
    let frac = pos - lower as f64;
    match sorted.get(lower + 1) {
        Some(upper) if frac > 0.0 => sorted[lower] + frac * (upper - sorted[lower]),
        _ => sorted[lower],
    }
}

/// Chain record in `chains.jsonl`. `group_ids` and `timestamps` run parallel
/// to `post_ids`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct ChainRecord {
    kind: KeyKind,
    key: String,
    post_ids: Vec<String>,
    group_ids: Vec<String>,
    timestamps: Vec<i64>,
    span_seconds: i64,
}

pub fn write_chains_jsonl<W: Write>(chains: &[CoordinationChain], mut sink: W) -> Result<()> {
    for chain in chains {
        let record = ChainRecord {
            kind: chain.key.kind,
            key: chain.key.value.clone(),
            post_ids: chain.shares.iter().map(|s| s.post_id.clone()).collect(),
            group_ids: chain.shares.iter().map(|s| s.group_id.clone()).collect(),
            timestamps: chain.shares.iter().map(|s| s.timestamp).collect(),
            span_seconds: chain.span_seconds,
        };
        serde_json::to_writer(&mut sink, &record)?;
        sink.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_chains_jsonl<R: BufRead>(source: R) -> Result<Vec<CoordinationChain>> {
    let mut chains = Vec::new();
    for (n, line) in source.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: ChainRecord = serde_json::from_str(&line)
            .map_err(|e| Error::format("chain record", format!("line {}: {e}", n + 1)))?;
        let len = record.post_ids.len();
        if len == 0 || record.group_ids.len() != len || record.timestamps.len() != len {
            return Err(Error::format(
                "chain record",
                format!("line {}: post_ids, group_ids and timestamps differ in length", n + 1),
            ));
        }
        let key = ContentKey::new(record.kind, record.key);
        let shares = record
            .post_ids
            .into_iter()
            .zip(record.group_ids)
            .zip(record.timestamps)
            .map(|((post_id, group_id), timestamp)| Share {
                key: key.clone(),
                post_id,
                group_id,
                timestamp,
            })
            .collect();
        let chain = CoordinationChain::from_shares(shares);
        if chain.span_seconds != record.span_seconds {
            return Err(Error::format(
                "chain record",
                format!("line {}: span_seconds does not match timestamps", n + 1),
            ));
        }
        chains.push(chain);
    }
    Ok(chains)
}
