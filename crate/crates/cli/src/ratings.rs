//! `UserID::MovieID::Rating::Timestamp` ratings files.
//!
//! Ids are remapped to contiguous indices in ascending id order. When a
//! (user, item) pair appears more than once, the later line wins and the
//! earlier one is counted in [`RatingsDataset::duplicates`].

use std::collections::{BTreeMap, HashMap};
use std::io::BufRead;
use std::path::{Path, PathBuf};

use dysplit::{ObservationSet, RngSeed};
use rand::seq::SliceRandom;

use crate::error::{CliError, Result};

/// Ratings outside this closed range are rejected.
pub const RATING_SCALE: (f64, f64) = (1.0, 5.0);

/// Random stream reserved for the train/test split.
const SPLIT_STREAM: u64 = 6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rating {
    pub user: usize,
    pub item: usize,
    pub value: f64,
    pub timestamp: i64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatingsDataset {
    /// Original user id of each row.
    pub users: Vec<u64>,
    /// Original item id of each column.
    pub items: Vec<u64>,
    /// One entry per distinct (user, item), sorted by position.
    pub entries: Vec<Rating>,
    pub duplicates: usize,
    /// Non-blank lines read.
    pub lines: usize,
}

#[derive(Debug, Clone)]
pub struct RatingsSplit {
    pub train: ObservationSet,
    pub test: ObservationSet,
}

struct RawRecord {
    user: u64,
    item: u64,
    value: f64,
    timestamp: i64,
}

fn parse_line(line: &str) -> std::result::Result<RawRecord, String> {
    let fields: Vec<&str> = line.split("::").collect();
    if fields.len() != 4 {
        return Err(format!("expected 4 `::`-separated fields, found {}", fields.len()));
    }
    let id = |s: &str, what: &str| s.trim().parse::<u64>().map_err(|_| format!("invalid {what} `{s}`"));
    let user = id(fields[0], "user id")?;
    let item = id(fields[1], "item id")?;
    let value: f64 = fields[2].trim().parse().map_err(|_| format!("invalid rating `{}`", fields[2]))?;
    if !(RATING_SCALE.0..=RATING_SCALE.1).contains(&value) {
        return Err(format!("rating {value} outside [{}, {}]", RATING_SCALE.0, RATING_SCALE.1));
    }
    let timestamp = fields[3].trim().parse().map_err(|_| format!("invalid timestamp `{}`", fields[3]))?;
    Ok(RawRecord { user, item, value, timestamp })
}

impl RatingsDataset {
    /// Parses ratings from `input`; `path` is only used in error messages.
    pub fn parse<R: BufRead>(input: R, path: &Path) -> Result<Self> {
        let mut raw = Vec::new();
        for (k, line) in input.lines().enumerate() {
            let line = line.map_err(|e| CliError::io(path, e))?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let rec = parse_line(line).map_err(|message| CliError::Ratings {
                path: path.to_path_buf(),
                line: k + 1,
                message,
            })?;
            raw.push(rec);
        }
        if raw.is_empty() {
            return Err(CliError::Ratings { path: path.to_path_buf(), line: 0, message: "no ratings found".into() });
        }

        let dense = |ids: BTreeMap<u64, usize>| -> (Vec<u64>, BTreeMap<u64, usize>) {
            let keys: Vec<u64> = ids.keys().copied().collect();
            let map = keys.iter().enumerate().map(|(i, &id)| (id, i)).collect();
            (keys, map)
        };
        let (users, user_idx) = dense(raw.iter().map(|r| (r.user, 0)).collect());
        let (items, item_idx) = dense(raw.iter().map(|r| (r.item, 0)).collect());

        let mut latest: HashMap<(usize, usize), Rating> = HashMap::with_capacity(raw.len());
        let mut duplicates = 0;
        for r in &raw {
            let rating = Rating { user: user_idx[&r.user], item: item_idx[&r.item], value: r.value, timestamp: r.timestamp };
            if latest.insert((rating.user, rating.item), rating).is_some() {
                duplicates += 1;
            }
        }
        let mut entries: Vec<Rating> = latest.into_values().collect();
        entries.sort_by_key(|r| (r.user, r.item));
        if duplicates > 0 {
            log::warn!("{}: {duplicates} duplicate (user, item) ratings, keeping the last", path.display());
        }
        Ok(Self { users, items, entries, duplicates, lines: raw.len() })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(std::io::BufReader::new(file), path)
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.users.len(), self.items.len())
    }

    /// Uniformly random disjoint split with `round(test_fraction · count)`
    /// test entries (at most `count − 1`). Both parts are sorted by position.
    pub fn split(&self, test_fraction: f64, seed: RngSeed) -> Result<RatingsSplit> {
        if !(0.0..1.0).contains(&test_fraction) {
            return Err(CliError::config(format!("test_fraction {test_fraction} outside [0, 1)")));
        }
        let count = self.entries.len();
        let n_test = ((test_fraction * count as f64).round() as usize).min(count - 1);
        let mut order: Vec<usize> = (0..count).collect();
        order.shuffle(&mut seed.rng(SPLIT_STREAM));
        let mut is_test = vec![false; count];
        for &k in &order[..n_test] {
            is_test[k] = true;
        }
        let build = |want: bool| -> Result<ObservationSet> {
            let (idx, vals): (Vec<_>, Vec<_>) = self
                .entries
                .iter()
                .zip(&is_test)
                .filter(|(_, &t)| t == want)
                .map(|(r, _)| ((r.user, r.item), r.value))
                .unzip();
            Ok(ObservationSet::new(self.shape(), idx, vals)?)
        };
        Ok(RatingsSplit { train: build(false)?, test: build(true)? })
    }
}

/// Reads `path` and splits it into train and test observations.
pub fn ingest_ratings(path: impl Into<PathBuf>, split_seed: RngSeed, test_fraction: f64) -> Result<RatingsSplit> {
    let path = path.into();
    let data = RatingsDataset::read(&path)?;
    let split = data.split(test_fraction, split_seed)?;
    log::info!(
        "{}: {} users, {} items, {} ratings ({} duplicates), train {} / test {}",
        path.display(),
        data.users.len(),
        data.items.len(),
        data.entries.len(),
        data.duplicates,
        split.train.len(),
        split.test.len()
    );
    Ok(split)
}
