//! Campaign orchestration: start from an empty coverage grid, then
//! repeatedly pick a situation, mark it, fly it under the monitors (and
//! any injected faults), and record the episode until the stopping
//! condition holds.
//!
//! Episode `i` draws its situation and its simulator seed from
//! [`episode_seed`]`(seed, i)`, so any episode can be replayed on its own
//! and a shorter campaign is always a prefix of a longer one.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::Path;
use std::rc::Rc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::{digest, ControlConfig, MonitorConfig, SimConfig, WorldConfig};
use crate::error::{CampaignError, ConfigError};
use crate::fault::FaultSpec;
use crate::monitor::{violation_id, Requirement, SafetyMonitor, ViolationLog, ViolationRecord};
use crate::rng::{episode_seed, SplitMix64};
use crate::scene::build_scene;
use crate::sim::{simulate, trajectory_csv, EpisodeResult, FaultLayer, Outcome};
use crate::situation::{
    sample_situation, CoverageGrid, CoverageSummary, Situation, SituationId, SITUATION_COUNT,
};

/// Random campaigns stopping on full coverage give up after this many
/// episodes. Reaching it with the default sampler has probability below
/// 1e-130.
pub const FULL_COVERAGE_GUARD: u64 = 10_000;

/// Preset shipped with the tool, selectable as `--config paper-defaults`.
pub const PAPER_DEFAULTS: &str = include_str!("../../../configs/paper-defaults.toml");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    #[default]
    Random,
    Exhaustive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stopping {
    FullCoverage,
    MaxEpisodes(u64),
    MaxViolations(u64),
}

impl Default for Stopping {
    fn default() -> Self {
        Stopping::MaxEpisodes(100)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CampaignConfig {
    pub seed: Option<u64>,
    pub mode: Mode,
    pub stopping: Stopping,
    pub record_trajectories: bool,
    pub faults: Vec<FaultSpec>,
    pub world: WorldConfig,
    pub control: ControlConfig,
    pub monitor: MonitorConfig,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        Self {
            seed: None,
            mode: Mode::Random,
            stopping: Stopping::default(),
            record_trajectories: true,
            faults: Vec::new(),
            world: WorldConfig::default(),
            control: ControlConfig::default(),
            monitor: MonitorConfig::default(),
        }
    }
}

impl CampaignConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.sim().validate()?;
        Ok(cfg)
    }

    /// The built-in preset, or a TOML file at `name`.
    pub fn load(name: &str) -> Result<Self, CampaignError> {
        if name == "paper-defaults" {
            return Ok(Self::from_toml(PAPER_DEFAULTS)?);
        }
        let text = fs::read_to_string(name).map_err(|e| CampaignError::io(name, e))?;
        Ok(Self::from_toml(&text)?)
    }

    pub fn sim(&self) -> SimConfig {
        SimConfig {
            world: self.world.clone(),
            control: self.control.clone(),
            monitor: self.monitor.clone(),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.sim().validate()?;
        if self.mode == Mode::Random && self.seed.is_none() {
            return Err(ConfigError::InvalidValue {
                field: "seed",
                reason: "random mode needs a seed".into(),
            });
        }
        match self.stopping {
            Stopping::MaxEpisodes(0) => Err(ConfigError::InvalidValue {
                field: "stopping.max_episodes",
                reason: "must be at least 1".into(),
            }),
            Stopping::MaxViolations(0) => Err(ConfigError::InvalidValue {
                field: "stopping.max_violations",
                reason: "must be at least 1".into(),
            }),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogMeta {
    pub seed: Option<u64>,
    pub config_digest: String,
    pub timestamp: String,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpisodeRecord {
    pub index: u64,
    pub seed: u64,
    pub situation_id: SituationId,
    pub axes: Situation,
    pub outcome: Outcome,
    pub violations: Vec<ViolationRecord>,
    /// Path of the trajectory CSV relative to the log, if one was written.
    pub trajectory_csv: Option<String>,
    pub trajectory_sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignLog {
    pub meta: LogMeta,
    pub coverage: CoverageSummary,
    pub config: CampaignConfig,
    pub episodes: Vec<EpisodeRecord>,
}

impl CampaignLog {
    pub fn violation_count(&self) -> usize {
        self.episodes.iter().map(|e| e.violations.len()).sum()
    }

    pub fn violations(&self) -> impl Iterator<Item = &ViolationRecord> {
        self.episodes.iter().flat_map(|e| e.violations.iter())
    }
}

pub fn trajectory_sha256(csv: &str) -> String {
    hex::encode(Sha256::digest(csv.as_bytes()))
}

pub fn trajectory_file_name(index: u64) -> String {
    format!("trajectories/episode-{index:04}.csv")
}

#[derive(Debug, Clone)]
struct CachedEpisode {
    result: Rc<EpisodeResult>,
    violations: Vec<ViolationRecord>,
    sha256: String,
}

/// Memoizes episodes by situation. Only consulted when sensor noise is
/// off, since the episode seed is then irrelevant to the outcome; the cache
/// keys itself on the simulation config and faults and clears on change.
#[derive(Debug, Default)]
pub struct EpisodeCache {
    key: Option<String>,
    entries: HashMap<SituationId, CachedEpisode>,
}

impl EpisodeCache {
    pub fn new() -> Self {
        Self::default()
    }

    fn rekey(&mut self, key: String) {
        if self.key.as_ref() != Some(&key) {
            self.entries.clear();
            self.key = Some(key);
        }
    }
}

/// Flies one episode under the safety monitors. Violation ids are
/// episode-local here; the campaign renumbers them.
pub fn fly_episode(
    s: &Situation,
    cfg: &SimConfig,
    faults: &[FaultSpec],
    seed: u64,
) -> Result<(EpisodeResult, Vec<ViolationRecord>), ConfigError> {
    cfg.validate()?;
    let (scene, plan) = build_scene(s, &cfg.world)?;
    let mut monitor = SafetyMonitor::new(s.id(), &scene, cfg);
    let result = simulate(
        s.id(),
        &scene,
        &plan,
        cfg,
        FaultLayer::Enabled(faults),
        seed,
        &mut monitor,
    );
    Ok((result, monitor.into_records()))
}

fn fly_cached(
    s: &Situation,
    cfg: &SimConfig,
    faults: &[FaultSpec],
    seed: u64,
    cache: &mut EpisodeCache,
) -> Result<CachedEpisode, ConfigError> {
    let cacheable = cfg.control.sensor_noise_std == 0.0;
    if cacheable {
        if let Some(hit) = cache.entries.get(&s.id()) {
            return Ok(hit.clone());
        }
    }
    let (result, violations) = fly_episode(s, cfg, faults, seed)?;
    let sha256 = trajectory_sha256(&trajectory_csv(&result));
    let ep = CachedEpisode {
        result: Rc::new(result),
        violations,
        sha256,
    };
    if cacheable {
        cache.entries.insert(s.id(), ep.clone());
    }
    Ok(ep)
}

/// Called once per episode, in order, with the record and the full result.
pub type EpisodeSink<'a> =
    dyn FnMut(&EpisodeRecord, &EpisodeResult) -> Result<(), CampaignError> + 'a;

pub fn run_campaign(cfg: &CampaignConfig) -> Result<CampaignLog, CampaignError> {
    run_campaign_with(cfg, &mut EpisodeCache::new(), &mut |_, _| Ok(()))
}

pub fn run_campaign_with(
    cfg: &CampaignConfig,
    cache: &mut EpisodeCache,
    sink: &mut EpisodeSink<'_>,
) -> Result<CampaignLog, CampaignError> {
    cfg.validate()?;
    let sim = cfg.sim();
    cache.rekey(digest(&(&sim, &cfg.faults)));
    let seed = cfg.seed.unwrap_or(0);

    let mut grid = CoverageGrid::new();
    let mut log = ViolationLog::new();
    let mut counters: BTreeMap<(SituationId, Requirement), u32> = BTreeMap::new();
    let mut episodes = Vec::new();

    for index in 0u64.. {
        let done = match (cfg.mode, cfg.stopping) {
            (Mode::Exhaustive, _) if index as usize >= SITUATION_COUNT => true,
            (Mode::Random, Stopping::FullCoverage) if index >= FULL_COVERAGE_GUARD => {
                log::warn!("full coverage not reached after {FULL_COVERAGE_GUARD} episodes");
                true
            }
            (_, Stopping::FullCoverage) => grid.is_complete(),
            (_, Stopping::MaxEpisodes(n)) => index >= n,
            (_, Stopping::MaxViolations(n)) => log.len() as u64 >= n,
        };
        if done {
            break;
        }

        let ep_seed = episode_seed(seed, index);
        let situation = match cfg.mode {
            Mode::Exhaustive => {
                Situation::from_id(SituationId::new(index as u8 + 1).expect("1..=32"))
            }
            Mode::Random => sample_situation(&mut SplitMix64::new(ep_seed)),
        };
        grid.mark_covered(&situation);
        let ep = fly_cached(&situation, &sim, &cfg.faults, ep_seed, cache)?;

        let mut violations = Vec::with_capacity(ep.violations.len());
        for mut v in ep.violations {
            let n = counters.entry((v.situation_id, v.requirement)).or_insert(0);
            *n += 1;
            v.id = violation_id(v.situation_id, v.requirement, *n);
            log.issue_warning(v.clone())?;
            violations.push(v);
        }
        let record = EpisodeRecord {
            index,
            seed: ep_seed,
            situation_id: situation.id(),
            axes: situation,
            outcome: ep.result.outcome,
            violations,
            trajectory_csv: cfg.record_trajectories.then(|| trajectory_file_name(index)),
            trajectory_sha256: ep.sha256,
        };
        sink(&record, &ep.result)?;
        episodes.push(record);
    }

    Ok(CampaignLog {
        meta: LogMeta {
            seed: cfg.seed,
            config_digest: digest(cfg),
            timestamp: chrono::Utc::now().to_rfc3339(),
            version: env!("CARGO_PKG_VERSION").to_string(),
        },
        coverage: grid.report(episodes.len() as u64),
        config: cfg.clone(),
        episodes,
    })
}

/// Coverage summary rebuilt from the episode list alone.
pub fn recompute_coverage(episodes: &[EpisodeRecord]) -> CoverageSummary {
    let mut grid = CoverageGrid::new();
    for e in episodes {
        grid.mark_covered(&e.axes);
    }
    grid.report(episodes.len() as u64)
}

/// Internal consistency checks applied on every write and read.
pub fn validate_log(log: &CampaignLog) -> Result<(), CampaignError> {
    let schema = |msg: String| Err(CampaignError::Schema(msg));
    if log.meta.config_digest != digest(&log.config) {
        return schema("config_digest does not match the embedded config".into());
    }
    if log.coverage != recompute_coverage(&log.episodes) {
        return schema("coverage block disagrees with the episode list".into());
    }
    let mut ids = BTreeSet::new();
    for (i, e) in log.episodes.iter().enumerate() {
        if e.index != i as u64 {
            return schema(format!("episode {i} carries index {}", e.index));
        }
        if e.axes.id() != e.situation_id {
            return schema(format!(
                "episode {i}: axes do not match situation {}",
                e.situation_id
            ));
        }
        for v in &e.violations {
            if v.situation_id != e.situation_id {
                return schema(format!(
                    "violation {} filed under episode {i} of another situation",
                    v.id
                ));
            }
            if !ids.insert(v.id.as_str()) {
                return schema(format!("duplicate violation id {}", v.id));
            }
        }
    }
    Ok(())
}

pub fn log_to_string(log: &CampaignLog) -> Result<String, CampaignError> {
    validate_log(log)?;
    let mut text = serde_json::to_string_pretty(log)?;
    text.push('\n');
    Ok(text)
}

pub fn write_log(log: &CampaignLog, path: &Path) -> Result<(), CampaignError> {
    let text = log_to_string(log)?;
    fs::write(path, text).map_err(|e| CampaignError::io(path, e))
}

pub fn parse_log(text: &str) -> Result<CampaignLog, CampaignError> {
    let log: CampaignLog = serde_json::from_str(text)?;
    validate_log(&log)?;
    Ok(log)
}

pub fn read_log(path: &Path) -> Result<CampaignLog, CampaignError> {
    let text = fs::read_to_string(path).map_err(|e| CampaignError::io(path, e))?;
    parse_log(&text)
}

#[derive(Debug, Clone)]
pub struct Replay {
    pub result: EpisodeResult,
    pub csv: String,
    pub hash_matches: bool,
    pub violations_match: bool,
    /// Byte comparison against the stored CSV, when one exists on disk.
    pub file_matches: Option<bool>,
}

impl Replay {
    pub fn identical(&self) -> bool {
        self.hash_matches && self.violations_match && self.file_matches != Some(false)
    }
}

/// Re-flies episode `k` from the logged config and seed. `log_dir` locates
/// the stored trajectory CSV, if any.
pub fn replay_episode(
    log: &CampaignLog,
    k: usize,
    log_dir: Option<&Path>,
) -> Result<Replay, CampaignError> {
    let rec = log.episodes.get(k).ok_or(CampaignError::NoSuchEpisode {
        index: k,
        len: log.episodes.len(),
    })?;
    let (result, fresh) = fly_episode(&rec.axes, &log.config.sim(), &log.config.faults, rec.seed)?;
    let csv = trajectory_csv(&result);
    let violations_match = fresh.len() == rec.violations.len()
        && fresh.iter().zip(&rec.violations).all(|(a, b)| {
            a.requirement == b.requirement
                && a.time == b.time
                && a.position == b.position
                && a.object == b.object
        });
    let file_matches = match (log_dir, &rec.trajectory_csv) {
        (Some(dir), Some(rel)) => {
            let path = dir.join(rel);
            match fs::read_to_string(&path) {
                Ok(stored) => Some(stored == csv),
                Err(e) if e.kind() == std::io::ErrorKind::NotFound => None,
                Err(e) => return Err(CampaignError::io(path, e)),
            }
        }
        _ => None,
    };
    Ok(Replay {
        hash_matches: trajectory_sha256(&csv) == rec.trajectory_sha256,
        violations_match,
        file_matches,
        result,
        csv,
    })
}

/// Copy of `log` with the timestamp blanked, for determinism comparisons.
pub fn without_timestamp(log: &CampaignLog) -> CampaignLog {
    let mut log = log.clone();
    log.meta.timestamp.clear();
    log
}
