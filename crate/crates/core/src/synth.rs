//! Synthetic corpora with planted campaigns, and post-level scoring of
//! detector output against the planted labels.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{MediaType, Post};
use crate::detector::CoordinationChain;
use crate::error::{Error, Result};
use crate::keys::{extract_keys, ContentKey, NormalizationConfig};

/// Synthetic timestamps start at 2020-01-01T00:00:00Z.
pub const BASE_TIMESTAMP: i64 = 1_577_836_800;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OrganicConfig {
    pub n_posts: usize,
    /// Chance that an organic post repeats the content of an earlier one.
    pub key_reuse_probability: f64,
    /// Repeats of one organic content land at least this far apart
    /// (0 = no constraint).
    pub min_reuse_gap_seconds: u64,
}

impl Default for OrganicConfig {
    fn default() -> Self {
        OrganicConfig {
            n_posts: 1000,
            key_reuse_probability: 0.05,
            min_reuse_gap_seconds: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignConfig {
    pub n_groups: usize,
    pub n_keys: usize,
    pub shares_per_key: usize,
    pub burst_interval_seconds: u64,
    pub jitter_seconds: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub horizon_seconds: u64,
    pub n_groups: usize,
    pub organic: OrganicConfig,
    pub campaigns: Vec<CampaignConfig>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            seed: 7,
            horizon_seconds: 30 * 24 * 3600,
            n_groups: 200,
            organic: OrganicConfig::default(),
            campaigns: vec![CampaignConfig {
                n_groups: 12,
                n_keys: 12,
                shares_per_key: 12,
                burst_interval_seconds: 5,
                jitter_seconds: 3,
            }],
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let p = self.organic.key_reuse_probability;
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::config(format!("key_reuse_probability {p} is outside [0, 1]")));
        }
        let has_posts = self.organic.n_posts > 0
            || self.campaigns.iter().any(|c| c.n_keys > 0 && c.shares_per_key > 0);
        if has_posts && self.n_groups == 0 {
            return Err(Error::config("n_groups must be positive when posts are generated"));
        }
        if has_posts && self.horizon_seconds == 0 {
            return Err(Error::config("horizon_seconds must be positive when posts are generated"));
        }
        // campaigns draw disjoint group sets
        let needed: usize = self.campaigns.iter().map(|c| c.n_groups).sum();
        if needed > self.n_groups {
            return Err(Error::config(format!(
                "campaigns need {needed} distinct groups but the scenario has {}",
                self.n_groups
            )));
        }
        for (i, c) in self.campaigns.iter().enumerate() {
            if c.n_groups == 0 && c.n_keys > 0 && c.shares_per_key > 0 {
                return Err(Error::config(format!("campaign {i} has shares but no groups")));
            }
        }
        Ok(())
    }
}

/// Label of one generated post.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Label {
    Organic,
    Campaign(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CampaignTruth {
    pub campaign_id: usize,
    pub groups: BTreeSet<String>,
    /// Keys as extracted under the default normalization.
    pub keys: BTreeSet<ContentKey>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GroundTruth {
    pub labels: BTreeMap<String, Label>,
    pub campaigns: Vec<CampaignTruth>,
}

impl GroundTruth {
    pub fn campaign_posts(&self) -> BTreeSet<&str> {
        self.labels
            .iter()
            .filter(|(_, l)| matches!(l, Label::Campaign(_)))
            .map(|(id, _)| id.as_str())
            .collect()
    }
}

pub fn group_id(index: usize) -> String {
    format!("grp{index:05}")
}

fn group_name(index: usize) -> String {
    format!("Grupo {index:05}")
}

#[derive(Debug, Clone)]
struct Content {
    message: Option<String>,
    description: Option<String>,
    image_text: Option<String>,
    links: Vec<String>,
    media_type: MediaType,
}

fn organic_content(index: usize, rng: &mut ChaCha8Rng) -> Content {
    let mut content = Content {
        message: None,
        description: None,
        image_text: None,
        links: Vec::new(),
        media_type: MediaType::Status,
    };
    match rng.gen_range(0..4) {
        0 => content.message = Some(format!("bom dia a todos, recado numero {index} do grupo")),
        1 => {
            content.media_type = MediaType::Link;
            content.links = vec![format!("https://noticias.example.org/artigo/{index}?utm_source=fb")];
            content.description = Some(format!("Manchete local {index}: cidade inaugura nova praca"));
        }
        2 => {
            content.media_type = MediaType::Photo;
            content.image_text = Some(format!("FELIZ ANIVERSARIO {index} - FOTO DA FAMILIA"));
        }
        _ => {
            content.media_type = MediaType::Video;
            content.message = Some(format!("Video do passeio de domingo, parte {index}"));
        }
    }
    content
}

fn campaign_content(campaign: usize, key: usize, share: usize) -> Content {
    let mut content = Content {
        message: None,
        description: None,
        image_text: None,
        links: Vec::new(),
        media_type: MediaType::Status,
    };
    match key % 4 {
        0 => {
            content.media_type = MediaType::Video;
            content.message = Some(format!(
                "URGENTE campanha {campaign} narrativa {key}: a vacina altera o DNA humano, compartilhe!"
            ));
        }
        1 => {
            content.media_type = MediaType::Link;
            // the tracking parameter varies per share and must canonicalize away
            content.links = vec![format!(
                "https://Jornal-{campaign}.example.com/materia/{key}/?utm_source=share{share}&fbclid=x{share}"
            )];
        }
        2 => {
            content.media_type = MediaType::Photo;
            content.image_text = Some(format!(
                "NAO TOME A VACINA - campanha {campaign} meme {key}"
            ));
        }
        _ => {
            content.media_type = MediaType::Link;
            content.description = Some(format!(
                "Uma catastrofica analise sobre as vacinas, campanha {campaign} texto {key}"
            ));
        }
    }
    content
}

fn make_post(post_id: String, group: usize, timestamp: i64, content: &Content) -> Post {
    Post {
        post_id,
        group_id: group_id(group),
        group_name: group_name(group),
        timestamp,
        message: content.message.clone(),
        description: content.description.clone(),
        image_text: content.image_text.clone(),
        links: content.links.clone(),
        media_type: content.media_type,
        engagement: None,
    }
}

/// Generates a labeled corpus. Output is a pure function of `config`
/// (including its seed); posts are ordered by `(timestamp, post_id)`.
pub fn generate_corpus(config: &ScenarioConfig) -> Result<(Vec<Post>, GroundTruth)> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let horizon = config.horizon_seconds as i64;
    let mut posts: Vec<(Post, Label)> = Vec::new();

    // organic traffic
    let mut contents: Vec<(Content, Vec<i64>)> = Vec::new();
    for i in 0..config.organic.n_posts {
        let group = rng.gen_range(0..config.n_groups);
        let mut time = rng.gen_range(0..horizon);
        let mut reused = None;
        if !contents.is_empty() && rng.gen_bool(config.organic.key_reuse_probability) {
            let pick = rng.gen_range(0..contents.len());
            let gap = config.organic.min_reuse_gap_seconds as i64;
            let clear = |t: i64, uses: &[i64]| uses.iter().all(|u| (t - u).abs() >= gap);
            for _ in 0..64 {
                if clear(time, &contents[pick].1) {
                    reused = Some(pick);
                    break;
                }
                time = rng.gen_range(0..horizon);
            }
        }
        let slot = match reused {
            Some(pick) => pick,
            None => {
                contents.push((organic_content(contents.len(), &mut rng), Vec::new()));
                contents.len() - 1
            }
        };
        contents[slot].1.push(time);
        let post = make_post(format!("o{i:08}"), group, BASE_TIMESTAMP + time, &contents[slot].0);
        posts.push((post, Label::Organic));
    }

    // planted campaigns
    let normalization = NormalizationConfig::default();
    let mut free_groups: Vec<usize> = (0..config.n_groups).collect();
    let mut campaigns = Vec::new();
    for (c, campaign) in config.campaigns.iter().enumerate() {
        let members: Vec<usize> = free_groups
            .choose_multiple(&mut rng, campaign.n_groups)
            .copied()
            .collect();
        free_groups.retain(|g| !members.contains(g));
        let mut truth = CampaignTruth {
            campaign_id: c,
            groups: BTreeSet::new(),
            keys: BTreeSet::new(),
        };
        let interval = campaign.burst_interval_seconds as i64;
        let jitter = campaign.jitter_seconds as i64;
        let longest = (campaign.shares_per_key.saturating_sub(1) as i64) * (interval + jitter);
        for k in 0..campaign.n_keys {
            if campaign.shares_per_key == 0 {
                break;
            }
            let mut time = rng.gen_range(0..(horizon - longest).max(1));
            let offset = rng.gen_range(0..members.len());
            for s in 0..campaign.shares_per_key {
                if s > 0 {
                    let wobble = if jitter > 0 { rng.gen_range(-jitter..=jitter) } else { 0 };
                    time += (interval + wobble).max(0);
                }
                let group = members[(offset + s) % members.len()];
                let content = campaign_content(c, k, s);
                let post = make_post(
                    format!("c{c:03}k{k:05}s{s:05}"),
                    group,
                    BASE_TIMESTAMP + time,
                    &content,
                );
                truth.groups.insert(post.group_id.clone());
                truth.keys.extend(extract_keys(&post, &normalization));
                posts.push((post, Label::Campaign(c)));
            }
        }
        campaigns.push(truth);
    }

    posts.sort_by(|(a, _), (b, _)| (a.timestamp, &a.post_id).cmp(&(b.timestamp, &b.post_id)));
    let labels = posts.iter().map(|(p, l)| (p.post_id.clone(), *l)).collect();
    Ok((
        posts.into_iter().map(|(p, _)| p).collect(),
        GroundTruth { labels, campaigns },
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub true_positives: u64,
    pub false_positives: u64,
    pub false_negatives: u64,
}

/// Post-level precision/recall: a post is predicted coordinated iff it sits
/// in some chain. With no predictions precision is 1; with no campaign posts
/// recall is 1.
pub fn evaluate_detection(chains: &[CoordinationChain], truth: &GroundTruth) -> DetectionScore {
    let predicted: BTreeSet<&str> = chains
        .iter()
        .flat_map(|c| c.shares.iter().map(|s| s.post_id.as_str()))
        .collect();
    let actual = truth.campaign_posts();
    let tp = predicted.intersection(&actual).count() as u64;
    let fp = predicted.len() as u64 - tp;
    let fn_ = actual.len() as u64 - tp;
    let ratio = |num: u64, den: u64| if den == 0 { 1.0 } else { num as f64 / den as f64 };
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    DetectionScore {
        precision,
        recall,
        f1,
        true_positives: tp,
        false_positives: fp,
        false_negatives: fn_,
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
enum TruthRecord {
    Post {
        post_id: String,
        campaign: Option<usize>,
    },
    Campaign(CampaignTruth),
}

/// `ground_truth.jsonl`: one `post` record per post, then one `campaign`
/// record per campaign.
pub fn write_ground_truth_jsonl<W: Write>(truth: &GroundTruth, mut sink: W) -> Result<()> {
    for (post_id, label) in &truth.labels {
        let record = TruthRecord::Post {
            post_id: post_id.clone(),
            campaign: match label {
                Label::Organic => None,
                Label::Campaign(c) => Some(*c),
            },
        };
        serde_json::to_writer(&mut sink, &record)?;
        sink.write_all(b"\n")?;
    }
    for campaign in &truth.campaigns {
        serde_json::to_writer(&mut sink, &TruthRecord::Campaign(campaign.clone()))?;
        sink.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_ground_truth_jsonl<R: BufRead>(source: R) -> Result<GroundTruth> {
    let mut truth = GroundTruth::default();
    for line in source.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<TruthRecord>(&line)? {
            TruthRecord::Post { post_id, campaign } => {
                truth
                    .labels
                    .insert(post_id, campaign.map_or(Label::Organic, Label::Campaign));
            }
            TruthRecord::Campaign(c) => truth.campaigns.push(c),
        }
    }
    Ok(truth)
}
