//! Post ingestion, per-user grouping, outlier removal and ground-truth
//! influence (mean views per retained post).

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};

pub const DEFAULT_MIN_POSTS: usize = 10;
pub const DEFAULT_Z_THRESHOLD: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PostRecord {
    pub user_id: String,
    pub post_id: String,
    pub likes: u64,
    pub comments: u64,
    pub views: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub published_at: Option<i64>,
}

impl PostRecord {
    pub fn new(user_id: &str, post_id: &str, likes: u64, comments: u64, views: u64) -> Self {
        PostRecord {
            user_id: user_id.to_string(),
            post_id: post_id.to_string(),
            likes,
            comments,
            views,
            published_at: None,
        }
    }

    pub fn engagement(&self) -> u64 {
        self.likes + self.comments
    }

    fn metric(&self, metric: Metric) -> f64 {
        match metric {
            Metric::Views => self.views as f64,
            Metric::Likes => self.likes as f64,
            Metric::Comments => self.comments as f64,
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Metric {
    Views,
    Likes,
    Comments,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserAggregate {
    pub user_id: String,
    pub followers: u64,
    pub posts: Vec<PostRecord>,
    /// Post count before outlier removal.
    pub post_count_total: usize,
    pub influence: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Ingested,
    Synthetic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub users: Vec<UserAggregate>,
    pub provenance: Provenance,
    pub seed: Option<u64>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.users.len()
    }

    pub fn is_empty(&self) -> bool {
        self.users.is_empty()
    }

    pub fn influences(&self) -> Vec<f64> {
        self.users.iter().map(|u| u.influence).collect()
    }

    pub fn followers(&self) -> Vec<f64> {
        self.users.iter().map(|u| u.followers as f64).collect()
    }

    pub fn all_posts(&self) -> impl Iterator<Item = &PostRecord> {
        self.users.iter().flat_map(|u| u.posts.iter())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PostFormat {
    Jsonl,
    Csv,
}

impl FromStr for PostFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "jsonl" | "json" => Ok(PostFormat::Jsonl),
            "csv" => Ok(PostFormat::Csv),
            other => Err(Error::InvalidConfig(format!("unknown post format {other:?}"))),
        }
    }
}

const POST_KEYS: [&str; 6] = ["user_id", "post_id", "likes", "comments", "views", "published_at"];

/// Reads post records in input order. Blank lines are skipped.
pub fn parse_posts<R: Read>(reader: R, format: PostFormat) -> Result<Vec<PostRecord>> {
    let numbered = match format {
        PostFormat::Jsonl => parse_jsonl(reader)?,
        PostFormat::Csv => parse_csv(reader)?,
    };
    let mut seen: HashMap<(String, String), usize> = HashMap::with_capacity(numbered.len());
    let mut posts = Vec::with_capacity(numbered.len());
    for (line, post) in numbered {
        let key = (post.user_id.clone(), post.post_id.clone());
        if let Some(&first_line) = seen.get(&key) {
            return Err(Error::DuplicatePost {
                user_id: key.0,
                post_id: key.1,
                first_line,
                second_line: line,
            });
        }
        seen.insert(key, line);
        posts.push(post);
    }
    Ok(posts)
}

fn malformed(line: usize, reason: impl Into<String>) -> Error {
    Error::MalformedLine {
        line,
        reason: reason.into(),
    }
}

fn parse_jsonl<R: Read>(reader: R) -> Result<Vec<(usize, PostRecord)>> {
    let mut out = Vec::new();
    for (idx, line) in BufReader::new(reader).lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let value: Value =
            serde_json::from_str(&line).map_err(|e| malformed(line_no, format!("invalid JSON: {e}")))?;
        let Value::Object(obj) = value else {
            return Err(malformed(line_no, "expected a JSON object"));
        };
        if let Some(extra) = obj.keys().find(|k| !POST_KEYS.contains(&k.as_str())) {
            return Err(malformed(line_no, format!("unexpected key {extra:?}")));
        }
        let string_field = |key: &str| -> Result<String> {
            match obj.get(key) {
                Some(Value::String(s)) => Ok(s.clone()),
                Some(_) => Err(malformed(line_no, format!("{key} must be a string"))),
                None => Err(malformed(line_no, format!("missing field {key}"))),
            }
        };
        let count_field = |key: &str| -> Result<u64> {
            match obj.get(key) {
                Some(Value::Number(n)) => json_count(n, key, line_no),
                Some(_) => Err(malformed(line_no, format!("{key} must be an integer count"))),
                None => Err(malformed(line_no, format!("missing field {key}"))),
            }
        };
        let published_at = match obj.get("published_at") {
            None | Some(Value::Null) => None,
            Some(Value::Number(n)) => Some(
                n.as_i64()
                    .ok_or_else(|| malformed(line_no, "published_at must be integer Unix seconds"))?,
            ),
            Some(_) => return Err(malformed(line_no, "published_at must be integer Unix seconds")),
        };
        out.push((
            line_no,
            PostRecord {
                user_id: string_field("user_id")?,
                post_id: string_field("post_id")?,
                likes: count_field("likes")?,
                comments: count_field("comments")?,
                views: count_field("views")?,
                published_at,
            },
        ));
    }
    Ok(out)
}

fn json_count(n: &serde_json::Number, key: &str, line: usize) -> Result<u64> {
    if let Some(v) = n.as_u64() {
        return Ok(v);
    }
    if n.as_i64().is_some_and(|v| v < 0) || n.as_f64().is_some_and(|v| v < 0.0) {
        return Err(malformed(line, format!("negative count for {key}: {n}")));
    }
    Err(malformed(line, format!("non-integer count for {key}: {n}")))
}

fn text_count(raw: &str, key: &str, line: usize) -> Result<u64> {
    let raw = raw.trim();
    if raw.is_empty() {
        return Err(malformed(line, format!("missing field {key}")));
    }
    if let Ok(v) = raw.parse::<u64>() {
        return Ok(v);
    }
    if raw.parse::<i64>().is_ok_and(|v| v < 0) || raw.parse::<f64>().is_ok_and(|v| v < 0.0) {
        return Err(malformed(line, format!("negative count for {key}: {raw}")));
    }
    Err(malformed(line, format!("non-integer count for {key}: {raw}")))
}

fn parse_csv<R: Read>(reader: R) -> Result<Vec<(usize, PostRecord)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let column = |name: &str| headers.iter().position(|h| h.trim() == name);
    if let Some(extra) = headers.iter().find(|h| !POST_KEYS.contains(&h.trim())) {
        return Err(malformed(1, format!("unexpected column {extra:?}")));
    }
    let mut idx = [0usize; 5];
    for (slot, name) in idx.iter_mut().zip(&POST_KEYS[..5]) {
        *slot = column(name).ok_or_else(|| malformed(1, format!("missing column {name}")))?;
    }
    let published_col = column("published_at");

    let mut out = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.iter().all(|f| f.trim().is_empty()) {
            continue;
        }
        let field = |col: usize| record.get(col).unwrap_or("");
        let text = |col: usize, key: &str| -> Result<String> {
            let v = field(col).trim();
            if v.is_empty() {
                Err(malformed(line, format!("missing field {key}")))
            } else {
                Ok(v.to_string())
            }
        };
        let published_at = match published_col.map(field).map(str::trim) {
            None | Some("") => None,
            Some(raw) => Some(
                raw.parse::<i64>()
                    .map_err(|_| malformed(line, "published_at must be integer Unix seconds"))?,
            ),
        };
        out.push((
            line,
            PostRecord {
                user_id: text(idx[0], "user_id")?,
                post_id: text(idx[1], "post_id")?,
                likes: text_count(field(idx[2]), "likes", line)?,
                comments: text_count(field(idx[3]), "comments", line)?,
                views: text_count(field(idx[4]), "views", line)?,
                published_at,
            },
        ));
    }
    Ok(out)
}

/// Reads the `user_id,followers` table.
pub fn parse_followers<R: Read>(reader: R) -> Result<HashMap<String, u64>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr.headers()?.clone();
    let user_col = headers
        .iter()
        .position(|h| h.trim() == "user_id")
        .ok_or_else(|| malformed(1, "missing column user_id"))?;
    let followers_col = headers
        .iter()
        .position(|h| h.trim() == "followers")
        .ok_or_else(|| malformed(1, "missing column followers"))?;
    let mut out = HashMap::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let user = record.get(user_col).unwrap_or("").trim();
        if user.is_empty() {
            return Err(malformed(line, "missing field user_id"));
        }
        let followers = text_count(record.get(followers_col).unwrap_or(""), "followers", line)?;
        if out.insert(user.to_string(), followers).is_some() {
            return Err(malformed(line, format!("duplicate user {user:?}")));
        }
    }
    Ok(out)
}

/// Groups posts by user, keeping users with at least `min_posts` posts and a
/// followers entry. Users appear in order of their first post; `influence`
/// holds the mean over all posts until [`remove_outlier_posts`] runs.
pub fn group_and_filter(
    posts: &[PostRecord],
    followers_by_user: &HashMap<String, u64>,
    min_posts: usize,
) -> Vec<UserAggregate> {
    let min_posts = min_posts.max(1);
    let mut order: Vec<&str> = Vec::new();
    let mut groups: HashMap<&str, Vec<PostRecord>> = HashMap::new();
    for post in posts {
        groups
            .entry(post.user_id.as_str())
            .or_insert_with(|| {
                order.push(post.user_id.as_str());
                Vec::new()
            })
            .push(post.clone());
    }
    order
        .into_iter()
        .filter_map(|user| {
            let followers = *followers_by_user.get(user)?;
            let posts = groups.remove(user)?;
            if posts.len() < min_posts {
                return None;
            }
            let influence = compute_influence(&posts).ok()?;
            Some(UserAggregate {
                user_id: user.to_string(),
                followers,
                post_count_total: posts.len(),
                posts,
                influence,
            })
        })
        .collect()
}

fn mean_and_sample_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

/// Drops extreme posts per metric (views, likes, comments).
///
/// For each metric the statistics come from the full post list: the largest
/// post is dropped if its z-score exceeds `z_threshold`, the smallest if its
/// z-score is below `-z_threshold`. Ties for the extreme pick the earliest
/// post. A zero standard deviation means z = 0.
pub fn remove_outlier_posts(user: &UserAggregate, z_threshold: f64) -> Result<UserAggregate> {
    let posts = &user.posts;
    let mut drop = vec![false; posts.len()];
    if posts.len() >= 2 {
        for metric in [Metric::Views, Metric::Likes, Metric::Comments] {
            let values: Vec<f64> = posts.iter().map(|p| p.metric(metric)).collect();
            let (mean, std) = mean_and_sample_std(&values);
            if std == 0.0 {
                continue;
            }
            let (mut hi, mut lo) = (0, 0);
            for (i, &v) in values.iter().enumerate() {
                if v > values[hi] {
                    hi = i;
                }
                if v < values[lo] {
                    lo = i;
                }
            }
            if (values[hi] - mean) / std > z_threshold {
                drop[hi] = true;
            }
            if (values[lo] - mean) / std < -z_threshold {
                drop[lo] = true;
            }
        }
    }
    let kept: Vec<PostRecord> = posts
        .iter()
        .zip(&drop)
        .filter(|(_, &d)| !d)
        .map(|(p, _)| p.clone())
        .collect();
    if kept.len() < 2 {
        return Err(Error::DegenerateUser {
            user_id: user.user_id.clone(),
            remaining: kept.len(),
        });
    }
    Ok(UserAggregate {
        user_id: user.user_id.clone(),
        followers: user.followers,
        influence: compute_influence(&kept)?,
        posts: kept,
        post_count_total: user.post_count_total,
    })
}

/// Mean views per post.
pub fn compute_influence(posts: &[PostRecord]) -> Result<f64> {
    if posts.is_empty() {
        return Err(Error::EmptyPosts);
    }
    let total: u128 = posts.iter().map(|p| u128::from(p.views)).sum();
    Ok(total as f64 / posts.len() as f64)
}

/// Full ingestion: group, filter, drop outlier posts, compute influence.
pub fn build_dataset(
    posts: &[PostRecord],
    followers_by_user: &HashMap<String, u64>,
    min_posts: usize,
    z_threshold: f64,
    provenance: Provenance,
    seed: Option<u64>,
) -> Result<Dataset> {
    let users = group_and_filter(posts, followers_by_user, min_posts)
        .iter()
        .map(|u| remove_outlier_posts(u, z_threshold))
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset {
        users,
        provenance,
        seed,
    })
}

pub fn write_posts_jsonl<'a, W: Write>(
    mut writer: W,
    posts: impl IntoIterator<Item = &'a PostRecord>,
) -> Result<()> {
    for post in posts {
        serde_json::to_writer(&mut writer, post)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()?;
    Ok(())
}

pub fn write_followers_csv<'a, W: Write>(
    writer: W,
    users: impl IntoIterator<Item = (&'a str, u64)>,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["user_id", "followers"])?;
    for (user, followers) in users {
        w.write_record([user, &followers.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Per-user summary written by ingestion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub user_id: String,
    pub followers: u64,
    pub post_count_total: usize,
    pub retained_posts: usize,
    pub influence: f64,
}

pub fn write_aggregates_csv<W: Write>(writer: W, dataset: &Dataset) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for u in &dataset.users {
        w.serialize(AggregateRow {
            user_id: u.user_id.clone(),
            followers: u.followers,
            post_count_total: u.post_count_total,
            retained_posts: u.posts.len(),
            influence: u.influence,
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_aggregates_csv<R: Read>(reader: R) -> Result<Vec<AggregateRow>> {
    let mut rdr = csv::Reader::from_reader(reader);
    rdr.deserialize().map(|r| r.map_err(Error::from)).collect()
}

/// Rebuilds a dataset from ingestion outputs (retained posts + aggregates),
/// keeping the aggregate row order.
pub fn dataset_from_aggregates(
    aggregates: &[AggregateRow],
    retained_posts: &[PostRecord],
    provenance: Provenance,
    seed: Option<u64>,
) -> Result<Dataset> {
    let mut by_user: HashMap<&str, Vec<PostRecord>> = HashMap::new();
    for p in retained_posts {
        by_user.entry(p.user_id.as_str()).or_default().push(p.clone());
    }
    let users = aggregates
        .iter()
        .map(|row| {
            let posts = by_user.remove(row.user_id.as_str()).unwrap_or_default();
            if posts.len() != row.retained_posts {
                return Err(Error::InvalidConfig(format!(
                    "user {} lists {} retained posts but {} were supplied",
                    row.user_id,
                    row.retained_posts,
                    posts.len()
                )));
            }
            Ok(UserAggregate {
                user_id: row.user_id.clone(),
                followers: row.followers,
                influence: compute_influence(&posts)?,
                posts,
                post_count_total: row.post_count_total,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset {
        users,
        provenance,
        seed,
    })
}
