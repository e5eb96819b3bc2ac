//! Per-user statistics, the `x / ln x` scale transform, and standardization.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, UserAggregate};
use crate::error::{Error, Result};
use crate::linalg::Matrix;

pub const N_FEATURES: usize = 8;

pub const FEATURE_NAMES: [&str; N_FEATURES] = [
    "likes_avg",
    "comments_avg",
    "followers",
    "geo_mean",
    "followers_per_post",
    "comments_per_likes",
    "focus_diff",
    "focus_ratio",
];

pub const LIKES_AVG: usize = 0;
pub const COMMENTS_AVG: usize = 1;
pub const FOLLOWERS: usize = 2;
pub const GEO_MEAN: usize = 3;
pub const FOLLOWERS_PER_POST: usize = 4;
pub const COMMENTS_PER_LIKES: usize = 5;
pub const FOCUS_DIFF: usize = 6;
pub const FOCUS_RATIO: usize = 7;

/// Columns rescaled by [`log_scale`] when scale transformation is enabled.
pub const SCALED_FEATURES: [usize; 2] = [LIKES_AVG, FOLLOWERS];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub likes_avg: f64,
    pub comments_avg: f64,
    pub followers: f64,
    pub geo_mean_likes_followers: f64,
    pub followers_per_post: f64,
    pub comments_per_likes: f64,
    /// Max minus min per-post engagement.
    pub focus_diff: f64,
    /// Max over min per-post engagement.
    pub focus_ratio: f64,
}

impl FeatureVector {
    pub fn to_array(&self) -> [f64; N_FEATURES] {
        [
            self.likes_avg,
            self.comments_avg,
            self.followers,
            self.geo_mean_likes_followers,
            self.followers_per_post,
            self.comments_per_likes,
            self.focus_diff,
            self.focus_ratio,
        ]
    }

    pub fn from_array(a: [f64; N_FEATURES]) -> Self {
        FeatureVector {
            likes_avg: a[0],
            comments_avg: a[1],
            followers: a[2],
            geo_mean_likes_followers: a[3],
            followers_per_post: a[4],
            comments_per_likes: a[5],
            focus_diff: a[6],
            focus_ratio: a[7],
        }
    }

    /// Applies [`log_scale`] to likes_avg and followers.
    pub fn scaled(&self) -> Result<Self> {
        Ok(FeatureVector {
            likes_avg: log_scale(self.likes_avg)?,
            followers: log_scale(self.followers)?,
            ..*self
        })
    }
}

/// `x / max(1, ln x)`: identity on `[0, e]`, `x / ln x` beyond.
pub fn log_scale(x: f64) -> Result<f64> {
    if x < 0.0 || x.is_nan() {
        return Err(Error::NegativeInput(x));
    }
    Ok(x / x.ln().max(1.0))
}

/// Inverse of [`log_scale`] on its range `[0, ∞)`.
pub fn inverse_log_scale(y: f64) -> Result<f64> {
    if y < 0.0 || y.is_nan() {
        return Err(Error::NegativeInput(y));
    }
    if y <= std::f64::consts::E || y.is_infinite() {
        return Ok(y);
    }
    // x / ln x = y has a unique root above e; Newton from x = y ln y converges
    // monotonically because the function is convex there.
    let mut x = y * y.ln();
    for _ in 0..100 {
        let ln = x.ln();
        let f = x / ln - y;
        let df = (ln - 1.0) / (ln * ln);
        let next = x - f / df;
        if (next - x).abs() <= 1e-15 * x {
            return Ok(next);
        }
        x = next;
    }
    Ok(x)
}

/// Computes the eight per-user statistics from retained posts.
///
/// Engagement of a post is likes + comments. `followers_per_post` divides by
/// the pre-removal post count. With `transform_scales`, likes_avg and
/// followers are rescaled after every ratio and the geometric mean have been
/// taken from raw values.
pub fn extract_features(user: &UserAggregate, transform_scales: bool) -> Result<FeatureVector> {
    let posts = &user.posts;
    if posts.is_empty() {
        return Err(Error::EmptyPosts);
    }
    let n = posts.len() as f64;
    let likes_total: u128 = posts.iter().map(|p| u128::from(p.likes)).sum();
    let comments_total: u128 = posts.iter().map(|p| u128::from(p.comments)).sum();
    let likes_avg = likes_total as f64 / n;
    let comments_avg = comments_total as f64 / n;
    let followers = user.followers as f64;

    let (min_eng, max_eng) = posts
        .iter()
        .map(|p| p.engagement())
        .fold((u64::MAX, 0u64), |(lo, hi), e| (lo.min(e), hi.max(e)));
    let (min_eng, max_eng) = (min_eng as f64, max_eng as f64);

    let raw = FeatureVector {
        likes_avg,
        comments_avg,
        followers,
        geo_mean_likes_followers: (likes_avg * followers).sqrt(),
        followers_per_post: followers / user.post_count_total.max(1) as f64,
        comments_per_likes: if likes_avg == 0.0 {
            0.0
        } else {
            comments_avg / likes_avg
        },
        focus_diff: max_eng - min_eng,
        focus_ratio: if min_eng == 0.0 {
            max_eng + 1.0
        } else {
            max_eng / min_eng
        },
    };
    if transform_scales {
        raw.scaled()
    } else {
        Ok(raw)
    }
}

/// One row per user, in dataset order.
pub fn feature_matrix(dataset: &Dataset, transform_scales: bool) -> Result<Matrix> {
    let rows = dataset
        .users
        .iter()
        .map(|u| extract_features(u, transform_scales).map(|f| f.to_array()))
        .collect::<Result<Vec<_>>>()?;
    if rows.is_empty() {
        return Ok(Matrix::zeros(0, N_FEATURES));
    }
    Matrix::from_rows(&rows)
}

/// Applies [`log_scale`] to the scaled columns of a raw feature matrix.
pub fn transform_matrix(raw: &Matrix) -> Result<Matrix> {
    if raw.ncols() != N_FEATURES {
        return Err(Error::DimensionMismatch {
            expected: N_FEATURES,
            found: raw.ncols(),
        });
    }
    let mut out = raw.clone();
    for r in 0..out.nrows() {
        let row = out.row_mut(r);
        for &c in &SCALED_FEATURES {
            row[c] = log_scale(row[c])?;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

const DEGENERATE_STD: f64 = 1e-12;

impl Standardizer {
    pub fn identity(d: usize) -> Self {
        Standardizer {
            mean: vec![0.0; d],
            std: vec![1.0; d],
        }
    }

    /// Column means and sample standard deviations. Columns with std below
    /// 1e-12 get std 1.
    pub fn fit(x: &Matrix) -> Result<Self> {
        let n = x.nrows();
        if n < 2 {
            return Err(Error::TooFewRows { rows: n, required: 2 });
        }
        let d = x.ncols();
        let mut mean = vec![0.0; d];
        for row in x.rows() {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n as f64);
        let mut ss = vec![0.0; d];
        for row in x.rows() {
            for ((s, v), m) in ss.iter_mut().zip(row).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let std = ss
            .into_iter()
            .map(|s| {
                let sd = (s / (n as f64 - 1.0)).sqrt();
                if sd < DEGENERATE_STD {
                    1.0
                } else {
                    sd
                }
            })
            .collect();
        Ok(Standardizer { mean, std })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn apply(&self, x: &Matrix) -> Result<Matrix> {
        if x.ncols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: x.ncols(),
            });
        }
        let mut out = x.clone();
        for r in 0..out.nrows() {
            for ((v, m), s) in out.row_mut(r).iter_mut().zip(&self.mean).zip(&self.std) {
                *v = (*v - m) / s;
            }
        }
        Ok(out)
    }
}

pub fn fit_standardizer(x: &Matrix) -> Result<Standardizer> {
    Standardizer::fit(x)
}

pub fn apply_standardizer(params: &Standardizer, x: &Matrix) -> Result<Matrix> {
    params.apply(x)
}

/// Feature table as exported to and read back from CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    pub user_ids: Vec<String>,
    pub features: Matrix,
    pub influence: Vec<f64>,
}

impl FeatureTable {
    pub fn from_dataset(dataset: &Dataset, transform_scales: bool) -> Result<Self> {
        Ok(FeatureTable {
            user_ids: dataset.users.iter().map(|u| u.user_id.clone()).collect(),
            features: feature_matrix(dataset, transform_scales)?,
            influence: dataset.influences(),
        })
    }

    pub fn len(&self) -> usize {
        self.user_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.user_ids.is_empty()
    }
}

const CSV_HEADER: [&str; N_FEATURES + 2] = [
    "user_id",
    "likes_avg",
    "comments_avg",
    "followers",
    "geo_mean",
    "followers_per_post",
    "comments_per_likes",
    "focus_diff",
    "focus_ratio",
    "influence",
];

pub fn write_feature_csv<W: Write>(writer: W, table: &FeatureTable) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(CSV_HEADER)?;
    for (i, user) in table.user_ids.iter().enumerate() {
        let mut record = Vec::with_capacity(CSV_HEADER.len());
        record.push(user.clone());
        record.extend(table.features.row(i).iter().map(|v| v.to_string()));
        record.push(table.influence[i].to_string());
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_feature_csv<R: Read>(reader: R) -> Result<FeatureTable> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.iter().map(str::trim).ne(CSV_HEADER.iter().copied()) {
        return Err(Error::MalformedLine {
            line: 1,
            reason: format!("expected header {}", CSV_HEADER.join(",")),
        });
    }
    let mut user_ids = Vec::new();
    let mut data = Vec::new();
    let mut influence = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let number = |i: usize| -> Result<f64> {
            let raw = record.get(i).unwrap_or("").trim();
            raw.parse::<f64>().map_err(|_| Error::MalformedLine {
                line,
                reason: format!("column {} is not a number: {raw:?}", CSV_HEADER[i]),
            })
        };
        user_ids.push(record.get(0).unwrap_or("").trim().to_string());
        for i in 1..=N_FEATURES {
            data.push(number(i)?);
        }
        influence.push(number(N_FEATURES + 1)?);
    }
    Ok(FeatureTable {
        features: Matrix::from_vec(user_ids.len(), N_FEATURES, data)?,
        user_ids,
        influence,
    })
}
