//! Seeded synthetic posting histories with known influence.
//!
//! Each user gets a latent view scale `V ~ LogNormal(mu, sigma)` (normal draw
//! clipped at ±3). Followers are `V` times a log-uniform multiplier; every
//! post draws views around `V` with mean-one log-normal noise, likes from a
//! per-user engagement rate and comments from a per-user comment/like ratio. A chosen fraction of posts is
//! then rewritten as sponsored (views above followers) or as carrying bought
//! engagement (likes above views).

use std::collections::BTreeMap;
use std::io::Write;

use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dataset::{compute_influence, Dataset, PostRecord, Provenance, UserAggregate};
use crate::error::{Error, Result};
use crate::evaluation::pagerank::EngagementEdge;
use crate::rng;

/// Target mean of per-user average views.
pub const TARGET_MEAN_VIEWS: f64 = 748.0;
pub const DEFAULT_LOG_SIGMA: f64 = 1.2;
/// Cap on comment edges emitted by a single commenter.
pub const MAX_COMMENTS_PER_USER: usize = 100;
const NOISE_CLIP: f64 = 3.0;
const ENGAGEMENT_NOISE_SIGMA: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_users: usize,
    /// Inclusive range of posts per user.
    pub posts_per_user: (usize, usize),
    pub log_views_mu: f64,
    pub log_views_sigma: f64,
    /// Followers / view-scale, drawn log-uniformly.
    pub follower_multiplier_range: (f64, f64),
    /// Likes per view, drawn log-uniformly per user.
    pub engagement_rate_range: (f64, f64),
    /// Comments per like, drawn uniformly per user.
    pub comment_to_like_ratio_range: (f64, f64),
    pub anomaly_sponsored_frac: f64,
    pub anomaly_bought_frac: f64,
    /// Log-scale spread of per-post views around the user's scale.
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        // exp(mu + sigma²/2) = 748
        let mu = TARGET_MEAN_VIEWS.ln() - DEFAULT_LOG_SIGMA * DEFAULT_LOG_SIGMA / 2.0;
        SynthConfig {
            n_users: 5000,
            posts_per_user: (10, 40),
            log_views_mu: mu,
            log_views_sigma: DEFAULT_LOG_SIGMA,
            follower_multiplier_range: (3.0, 60.0),
            engagement_rate_range: (0.04, 0.12),
            comment_to_like_ratio_range: (0.02, 0.10),
            anomaly_sponsored_frac: 0.005,
            anomaly_bought_frac: 0.02,
            noise_sigma: 0.3,
            seed: 42,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.n_users < 10 {
            return bad(format!("n_users must be at least 10, got {}", self.n_users));
        }
        let (lo, hi) = self.posts_per_user;
        if lo == 0 || lo > hi {
            return bad(format!("posts_per_user range {lo}..={hi} is empty"));
        }
        for (name, frac) in [
            ("anomaly_sponsored_frac", self.anomaly_sponsored_frac),
            ("anomaly_bought_frac", self.anomaly_bought_frac),
        ] {
            if !(0.0..=1.0).contains(&frac) {
                return bad(format!("{name} must be in [0, 1], got {frac}"));
            }
        }
        let (mlo, mhi) = self.follower_multiplier_range;
        if !(mlo > 1.0 && mlo <= mhi && mhi.is_finite()) {
            return bad(format!("follower_multiplier_range ({mlo}, {mhi}) must lie above 1"));
        }
        let (elo, ehi) = self.engagement_rate_range;
        if !(elo > 0.0 && elo <= ehi && ehi < 1.0) {
            return bad(format!("engagement_rate_range ({elo}, {ehi}) must lie in (0, 1)"));
        }
        let (clo, chi) = self.comment_to_like_ratio_range;
        if !(clo >= 0.0 && clo <= chi && chi.is_finite()) {
            return bad(format!("comment_to_like_ratio_range ({clo}, {chi}) is invalid"));
        }
        if !(self.log_views_sigma >= 0.0 && self.noise_sigma >= 0.0 && self.log_views_mu.is_finite()) {
            return bad("log-normal parameters must be finite with non-negative sigma".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthOutput {
    /// Every generated post is kept; `influence` is the ground truth.
    pub dataset: Dataset,
    /// `(user_id, mean views)` in user order.
    pub ground_truth: Vec<(String, f64)>,
}

impl SynthOutput {
    pub fn ground_truth_map(&self) -> BTreeMap<String, f64> {
        self.ground_truth.iter().cloned().collect()
    }
}

fn clipped_normal<R: Rng>(rng: &mut R) -> f64 {
    let z: f64 = StandardNormal.sample(rng);
    z.clamp(-NOISE_CLIP, NOISE_CLIP)
}

fn log_uniform<R: Rng>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo.ln()..hi.ln()).exp()
    }
}

fn uniform<R: Rng>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..hi)
    }
}

pub fn user_id(i: usize) -> String {
    format!("u{i:06}")
}

struct UserProfile {
    rate: f64,
    comment_ratio: f64,
}

fn engagement<R: Rng>(rng: &mut R, views: u64, profile: &UserProfile) -> (u64, u64) {
    let noise = (ENGAGEMENT_NOISE_SIGMA * clipped_normal(rng)).exp();
    let likes = (views as f64 * profile.rate * noise).floor() as u64;
    let comments = (likes as f64 * profile.comment_ratio).floor() as u64;
    if views > 0 && likes + comments >= views {
        let likes = likes.min(views - 1);
        (likes, comments.min(views - 1 - likes))
    } else {
        (likes, comments)
    }
}

fn generate_user(config: &SynthConfig, i: usize) -> (UserAggregate, UserProfile) {
    let mut rng = rng::stream(config.seed, rng::STREAM_SYNTH_USER, i as u64);
    let z = clipped_normal(&mut rng);
    let scale = (config.log_views_mu + config.log_views_sigma * z).exp();
    let multiplier = log_uniform(&mut rng, config.follower_multiplier_range);
    let followers = ((scale * multiplier).round() as u64).max(2);
    let profile = UserProfile {
        rate: log_uniform(&mut rng, config.engagement_rate_range),
        comment_ratio: uniform(&mut rng, config.comment_to_like_ratio_range),
    };
    let (lo, hi) = config.posts_per_user;
    let n_posts = rng.random_range(lo..=hi);
    let id = user_id(i);
    let sigma = config.noise_sigma;
    let posts = (0..n_posts)
        .map(|j| {
            let noise = (sigma * clipped_normal(&mut rng) - sigma * sigma / 2.0).exp();
            let views = ((scale * noise).round() as u64).clamp(1, followers - 1);
            let (likes, comments) = engagement(&mut rng, views, &profile);
            PostRecord {
                user_id: id.clone(),
                post_id: format!("p{j:03}"),
                likes,
                comments,
                views,
                published_at: None,
            }
        })
        .collect::<Vec<_>>();
    let user = UserAggregate {
        user_id: id,
        followers,
        post_count_total: posts.len(),
        influence: 0.0,
        posts,
    };
    (user, profile)
}

/// Generates the dataset. Users are produced independently from per-user
/// streams; anomalous posts are then picked from a separate stream over the
/// global post index.
pub fn generate(config: &SynthConfig) -> Result<SynthOutput> {
    config.validate()?;
    let (mut users, profiles): (Vec<UserAggregate>, Vec<UserProfile>) =
        (0..config.n_users).map(|i| generate_user(config, i)).unzip();

    let locations: Vec<(usize, usize)> = users
        .iter()
        .enumerate()
        .flat_map(|(u, user)| (0..user.posts.len()).map(move |p| (u, p)))
        .collect();
    let total = locations.len();
    let mut rng = rng::stream(config.seed, rng::STREAM_SYNTH_ANOMALY, 0);

    let sponsored = pick(&mut rng, total, config.anomaly_sponsored_frac);
    for &g in &sponsored {
        let (u, p) = locations[g];
        let followers = users[u].followers;
        let boost = rng.random_range(1.05..1.5);
        let views = ((followers as f64 * boost).ceil() as u64).max(followers + 1);
        let (likes, comments) = engagement(&mut rng, views, &profiles[u]);
        let post = &mut users[u].posts[p];
        post.views = views;
        post.likes = likes;
        post.comments = comments;
    }
    let bought = pick(&mut rng, total, config.anomaly_bought_frac);
    for &g in &bought {
        let (u, p) = locations[g];
        let post = &mut users[u].posts[p];
        let extra = (post.views as f64 * rng.random_range(0.2..2.0)).ceil() as u64;
        post.likes = post.views + extra + 1;
    }

    let mut ground_truth = Vec::with_capacity(users.len());
    for user in &mut users {
        user.influence = compute_influence(&user.posts)?;
        ground_truth.push((user.user_id.clone(), user.influence));
    }
    Ok(SynthOutput {
        dataset: Dataset {
            users,
            provenance: Provenance::Synthetic,
            seed: Some(config.seed),
        },
        ground_truth,
    })
}

fn pick<R: Rng>(rng: &mut R, total: usize, frac: f64) -> Vec<usize> {
    let count = ((frac * total as f64).ceil() as usize).min(total);
    let mut chosen = index::sample(rng, total, count).into_vec();
    chosen.sort_unstable();
    chosen
}

/// Commentator graph: user `i` emits `⌈mean comments per post⌉` comments
/// (capped at [`MAX_COMMENTS_PER_USER`]), each on an author other than
/// itself drawn with probability proportional to the author's followers.
/// Repeated (commenter, author) pairs merge into one weighted edge.
pub fn commentator_graph(dataset: &Dataset, seed: u64) -> Vec<EngagementEdge> {
    let users = &dataset.users;
    if users.len() < 2 {
        return Vec::new();
    }
    let mut cumulative = Vec::with_capacity(users.len());
    let mut acc = 0.0;
    for u in users {
        acc += u.followers as f64;
        cumulative.push(acc);
    }
    let mut edges = Vec::new();
    for (i, commenter) in users.iter().enumerate() {
        let n = commenter.posts.len().max(1) as f64;
        let mean_comments = commenter.posts.iter().map(|p| p.comments as f64).sum::<f64>() / n;
        let emitted = (mean_comments.ceil() as usize).min(MAX_COMMENTS_PER_USER);
        let mut rng = rng::stream(seed, rng::STREAM_GRAPH, i as u64);
        let mut weights: BTreeMap<usize, u64> = BTreeMap::new();
        for _ in 0..emitted {
            // Exclude the commenter by sampling from the remaining mass.
            let own = users[i].followers as f64;
            let mut target = rng.random::<f64>() * (acc - own);
            let before = if i == 0 { 0.0 } else { cumulative[i - 1] };
            if target >= before {
                target += own;
            }
            let author = cumulative
                .partition_point(|&c| c <= target)
                .min(users.len() - 1);
            if author != i {
                *weights.entry(author).or_default() += 1;
            }
        }
        edges.extend(weights.into_iter().map(|(author, w)| EngagementEdge {
            source: commenter.user_id.clone(),
            target: users[author].user_id.clone(),
            weight: w,
        }));
    }
    edges
}

pub fn write_ground_truth_csv<W: Write>(writer: W, ground_truth: &[(String, f64)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["user_id", "influence"])?;
    for (user, inf) in ground_truth {
        w.write_record([user.as_str(), &inf.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
