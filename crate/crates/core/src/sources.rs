//! Where rewards come from: synthetic distributions, replayed reward logs, or
//! a remote scoring service.
//!
//! Reward log format: UTF-8, one JSON object per line,
//! `{"prompt_id": "<id>", "rewards": [<number>, ...]}`. Blank lines are
//! skipped.
//!
//! Remote protocol: `POST {endpoint}/score` with body
//! `{"prompt_id": "<id>", "n": <count>}`; the response body must be
//! `{"rewards": [<number>, ...]}` with exactly `n` entries.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Condvar, Mutex};
use std::time::Duration;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::distributions::SyntheticDistribution;
use crate::error::{Error, Result};
use crate::rng::StreamKey;
use crate::types::RewardMatrix;

/// How a replayed pool is turned into a row.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResampleMode {
    /// `W` entries drawn without replacement, independently per run.
    #[default]
    WithoutReplacement,
    /// The first `W` entries in log order, identical for every run.
    Ordered,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticPrompt {
    #[serde(default)]
    pub id: Option<String>,
    pub distribution: SyntheticDistribution,
}

/// Serializable description of the prompt universe and its reward source.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RewardSourceSpec {
    Synthetic {
        prompts: Vec<SyntheticPrompt>,
    },
    Replay {
        path: PathBuf,
        #[serde(default)]
        mode: ResampleMode,
    },
    Remote {
        endpoint: String,
        prompt_ids: Vec<String>,
        #[serde(default = "default_timeout_ms")]
        timeout_ms: u64,
        #[serde(default = "default_max_in_flight")]
        max_in_flight: usize,
    },
}

fn default_timeout_ms() -> u64 {
    30_000
}

fn default_max_in_flight() -> usize {
    4
}

/// Per-batch reward source for `K` prompts.
#[derive(Clone, Debug)]
pub enum RewardSource {
    Synthetic(Vec<SyntheticDistribution>),
    Replay {
        prompts: Vec<(String, Arc<Vec<f64>>)>,
        mode: ResampleMode,
    },
    Remote {
        client: Arc<RemoteClient>,
        prompt_ids: Vec<String>,
    },
}

impl RewardSource {
    pub fn prompts(&self) -> usize {
        match self {
            RewardSource::Synthetic(d) => d.len(),
            RewardSource::Replay { prompts, .. } => prompts.len(),
            RewardSource::Remote { prompt_ids, .. } => prompt_ids.len(),
        }
    }
}

/// Materializes one run's reward matrix of width `width`.
///
/// Synthetic rows are iid draws; replay rows are resampled from each pool;
/// remote rows are fetched over the wire. Row `i` uses the stream
/// `key.child(i)`.
pub fn materialize_matrix(source: &RewardSource, width: usize, key: StreamKey) -> Result<RewardMatrix> {
    let rows = match source {
        RewardSource::Synthetic(dists) => dists
            .iter()
            .enumerate()
            .map(|(i, d)| d.draw(width, &mut key.child(i as u64).stream()))
            .collect(),
        RewardSource::Replay { prompts, mode } => prompts
            .iter()
            .enumerate()
            .map(|(i, (id, pool))| replay_row(id, pool, width, *mode, key.child(i as u64)))
            .collect::<Result<Vec<_>>>()?,
        RewardSource::Remote { client, prompt_ids } => prompt_ids
            .iter()
            .map(|id| client.score(id, width))
            .collect::<Result<Vec<_>>>()?,
    };
    RewardMatrix::new(rows)
}

fn replay_row(id: &str, pool: &[f64], width: usize, mode: ResampleMode, key: StreamKey) -> Result<Vec<f64>> {
    if pool.len() < width {
        return Err(Error::PoolExhausted {
            prompt: id.to_string(),
            available: pool.len(),
            required: width,
        });
    }
    match mode {
        ResampleMode::Ordered => Ok(pool[..width].to_vec()),
        ResampleMode::WithoutReplacement => {
            Ok(sample_indices(pool.len(), width, key)
                .into_iter()
                .map(|j| pool[j])
                .collect())
        }
    }
}

/// First `count` positions of a Fisher–Yates shuffle of `0..len`.
pub fn sample_indices(len: usize, count: usize, key: StreamKey) -> Vec<usize> {
    debug_assert!(count <= len);
    let mut rng = key.stream();
    let mut idx: Vec<usize> = (0..len).collect();
    for i in 0..count {
        let j = i + rng.below(len - i);
        idx.swap(i, j);
    }
    idx.truncate(count);
    idx
}

#[derive(Deserialize)]
struct LogRecord {
    prompt_id: String,
    rewards: Vec<f64>,
}

/// Reads a reward log into `prompt_id → pool`, in file order.
pub fn load_reward_log(path: impl AsRef<Path>) -> Result<IndexMap<String, Vec<f64>>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(format!("opening {}", path.display()), e))?;
    parse_reward_log(BufReader::new(file), path)
}

pub fn parse_reward_log(reader: impl BufRead, path: &Path) -> Result<IndexMap<String, Vec<f64>>> {
    let mut pools = IndexMap::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: LogRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: line_no,
            message: e.to_string(),
        })?;
        if pools.contains_key(&record.prompt_id) {
            return Err(Error::DuplicatePrompt(record.prompt_id));
        }
        pools.insert(record.prompt_id, record.rewards);
    }
    Ok(pools)
}

/// All prompts of an experiment with their reward backing.
#[derive(Clone, Debug)]
pub struct PromptUniverse {
    ids: Vec<String>,
    backing: Backing,
}

#[derive(Clone, Debug)]
enum Backing {
    Synthetic(Vec<SyntheticDistribution>),
    Replay(Vec<Arc<Vec<f64>>>, ResampleMode),
    Remote(Arc<RemoteClient>),
}

impl PromptUniverse {
    /// Resolves a spec; relative replay paths are taken from `base_dir`.
    pub fn load(spec: &RewardSourceSpec, base_dir: &Path) -> Result<Self> {
        match spec {
            RewardSourceSpec::Synthetic { prompts } => {
                let mut ids = Vec::with_capacity(prompts.len());
                let mut dists = Vec::with_capacity(prompts.len());
                for (i, p) in prompts.iter().enumerate() {
                    p.distribution.validate()?;
                    let id = p.id.clone().unwrap_or_else(|| format!("p{i}"));
                    if ids.contains(&id) {
                        return Err(Error::DuplicatePrompt(id));
                    }
                    ids.push(id);
                    dists.push(p.distribution.clone());
                }
                Ok(PromptUniverse {
                    ids,
                    backing: Backing::Synthetic(dists),
                })
            }
            RewardSourceSpec::Replay { path, mode } => {
                let path = if path.is_relative() {
                    base_dir.join(path)
                } else {
                    path.clone()
                };
                let pools = load_reward_log(path)?;
                let (ids, pools): (Vec<_>, Vec<_>) =
                    pools.into_iter().map(|(id, p)| (id, Arc::new(p))).unzip();
                Ok(PromptUniverse {
                    ids,
                    backing: Backing::Replay(pools, *mode),
                })
            }
            RewardSourceSpec::Remote {
                endpoint,
                prompt_ids,
                timeout_ms,
                max_in_flight,
            } => Ok(PromptUniverse {
                ids: prompt_ids.clone(),
                backing: Backing::Remote(Arc::new(RemoteClient::new(
                    endpoint,
                    Duration::from_millis(*timeout_ms),
                    *max_in_flight,
                ))),
            }),
        }
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn index_of(&self, id: &str) -> Result<usize> {
        self.ids
            .iter()
            .position(|x| x == id)
            .ok_or_else(|| Error::UnknownPrompt(id.to_string()))
    }

    /// Checks that every replay pool can fill a row of `width`.
    pub fn check_width(&self, width: usize) -> Result<()> {
        if let Backing::Replay(pools, _) = &self.backing {
            for (id, pool) in self.ids.iter().zip(pools) {
                if pool.len() < width {
                    return Err(Error::PoolExhausted {
                        prompt: id.clone(),
                        available: pool.len(),
                        required: width,
                    });
                }
            }
        }
        Ok(())
    }

    /// Source for the prompts at `indices`, in that order.
    pub fn source_for(&self, indices: &[usize]) -> RewardSource {
        match &self.backing {
            Backing::Synthetic(d) => {
                RewardSource::Synthetic(indices.iter().map(|&i| d[i].clone()).collect())
            }
            Backing::Replay(pools, mode) => RewardSource::Replay {
                prompts: indices
                    .iter()
                    .map(|&i| (self.ids[i].clone(), Arc::clone(&pools[i])))
                    .collect(),
                mode: *mode,
            },
            Backing::Remote(client) => RewardSource::Remote {
                client: Arc::clone(client),
                prompt_ids: indices.iter().map(|&i| self.ids[i].clone()).collect(),
            },
        }
    }
}

/// Blocking client for the remote scoring service. At most `max_in_flight`
/// requests are outstanding at once across all threads sharing the client.
#[derive(Debug)]
pub struct RemoteClient {
    endpoint: String,
    agent: ureq::Agent,
    max_in_flight: usize,
    in_flight: Mutex<usize>,
    slot_freed: Condvar,
}

#[derive(Serialize)]
struct ScoreRequest<'a> {
    prompt_id: &'a str,
    n: usize,
}

#[derive(Deserialize)]
struct ScoreResponse {
    rewards: Vec<f64>,
}

impl RemoteClient {
    pub fn new(endpoint: &str, timeout: Duration, max_in_flight: usize) -> Self {
        RemoteClient {
            endpoint: endpoint.trim_end_matches('/').to_string(),
            agent: ureq::AgentBuilder::new().timeout(timeout).build(),
            max_in_flight: max_in_flight.max(1),
            in_flight: Mutex::new(0),
            slot_freed: Condvar::new(),
        }
    }

    /// Fetches `n` rewards for one prompt.
    pub fn score(&self, prompt_id: &str, n: usize) -> Result<Vec<f64>> {
        let _slot = self.acquire();
        let url = format!("{}/score", self.endpoint);
        let response = self
            .agent
            .post(&url)
            .send_json(ScoreRequest { prompt_id, n })
            .map_err(|e| match e {
                ureq::Error::Status(code, _) => Error::Transport(format!("{url}: HTTP {code}")),
                other => Error::Transport(format!("{url}: {other}")),
            })?;
        let body: ScoreResponse = response
            .into_json()
            .map_err(|e| Error::Transport(format!("{url}: malformed response: {e}")))?;
        if body.rewards.len() != n {
            return Err(Error::Transport(format!(
                "{url}: expected {n} rewards for `{prompt_id}`, got {}",
                body.rewards.len()
            )));
        }
        Ok(body.rewards)
    }

    fn acquire(&self) -> SlotGuard<'_> {
        let mut count = self.in_flight.lock().expect("in-flight lock");
        while *count >= self.max_in_flight {
            count = self.slot_freed.wait(count).expect("in-flight lock");
        }
        *count += 1;
        SlotGuard { client: self }
    }
}

struct SlotGuard<'a> {
    client: &'a RemoteClient,
}

impl Drop for SlotGuard<'_> {
    fn drop(&mut self) {
        let mut count = self.client.in_flight.lock().expect("in-flight lock");
        *count -= 1;
        self.client.slot_freed.notify_one();
    }
}
