//! Experiment settings, from flags or a flat `key=value` config file.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use macc_core::macc::TopologyFile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stage {
    /// Topology file and conflict-graph document per instance.
    Graph,
    Color,
    Bound,
    Simulate,
}

impl Stage {
    pub const ALL: [Stage; 4] = [Stage::Graph, Stage::Color, Stage::Bound, Stage::Simulate];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Graph => "graph",
            Stage::Color => "color",
            Stage::Bound => "bound",
            Stage::Simulate => "simulate",
        }
    }
}

impl FromStr for Stage {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        Stage::ALL
            .into_iter()
            .find(|st| st.as_str() == s)
            .ok_or_else(|| anyhow!("unknown stage {s:?} (expected graph, color, bound or simulate)"))
    }
}

/// Fully resolved batch description.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExperimentSpec {
    pub users: Vec<usize>,
    pub cache_nodes: usize,
    pub t: Vec<usize>,
    pub count: usize,
    pub degree: (usize, usize),
    pub seed: u64,
    pub out: PathBuf,
    pub stages: Vec<Stage>,
    pub packet_bits: usize,
    /// Explicit topology used instead of the generator.
    pub topology: Option<TopologyFile>,
}

impl ExperimentSpec {
    pub fn has(&self, stage: Stage) -> bool {
        self.stages.contains(&stage)
    }

    /// `(K, t, seed)` for every instance, in output order.
    pub fn instances(&self) -> Vec<(usize, usize, u64)> {
        let mut out = Vec::new();
        for &k in &self.users {
            for &t in &self.t {
                for i in 0..self.count {
                    out.push((k, t, self.seed + i as u64));
                }
            }
        }
        out
    }

    /// Settings in config-file form; parsing the result gives back `self`.
    pub fn to_config(&self) -> String {
        let mut s = String::new();
        let mut line = |k: &str, v: String| {
            s.push_str(k);
            s.push('=');
            s.push_str(&v);
            s.push('\n');
        };
        line("users", join(&self.users));
        line("caches", self.cache_nodes.to_string());
        line("t", join(&self.t));
        line("count", self.count.to_string());
        line("degree", format!("{}:{}", self.degree.0, self.degree.1));
        line("seed", self.seed.to_string());
        line("out", self.out.display().to_string());
        line(
            "stages",
            self.stages.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(","),
        );
        line("bits", self.packet_bits.to_string());
        s
    }
}

fn join(v: &[usize]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

/// Unresolved settings; every field optional so that flags can be layered
/// over a config file.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Settings {
    pub users: Option<Vec<usize>>,
    pub caches: Option<usize>,
    pub t: Option<Vec<usize>>,
    pub count: Option<usize>,
    pub degree: Option<(usize, usize)>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub topology: Option<PathBuf>,
    pub stages: Option<Vec<Stage>>,
    pub bits: Option<usize>,
}

/// Comma-separated integers and inclusive `lo-hi` ranges, e.g. `4,6,10-12`.
pub fn parse_list(text: &str) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        match part.split_once('-') {
            Some((lo, hi)) => {
                let lo: usize = lo.trim().parse().with_context(|| format!("bad range {part:?}"))?;
                let hi: usize = hi.trim().parse().with_context(|| format!("bad range {part:?}"))?;
                if lo > hi {
                    bail!("empty range {part:?}");
                }
                out.extend(lo..=hi);
            }
            None => out.push(part.parse().with_context(|| format!("bad integer {part:?}"))?),
        }
    }
    if out.is_empty() {
        bail!("empty list {text:?}");
    }
    Ok(out)
}

/// `lo:hi`.
pub fn parse_degree(text: &str) -> Result<(usize, usize)> {
    let (lo, hi) = text
        .split_once(':')
        .ok_or_else(|| anyhow!("degree range must look like lo:hi, got {text:?}"))?;
    Ok((
        lo.trim().parse().with_context(|| format!("bad degree bound {lo:?}"))?,
        hi.trim().parse().with_context(|| format!("bad degree bound {hi:?}"))?,
    ))
}

pub fn parse_stages(text: &str) -> Result<Vec<Stage>> {
    let mut stages = text
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(Stage::from_str)
        .collect::<Result<Vec<_>>>()?;
    stages.sort();
    stages.dedup();
    Ok(stages)
}

impl Settings {
    pub fn parse(text: &str) -> Result<Self> {
        let mut s = Settings::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {}: expected key=value", n + 1))?;
            let value = value.trim();
            let ctx = || format!("line {}: key {}", n + 1, key.trim());
            match key.trim() {
                "users" => s.users = Some(parse_list(value).with_context(ctx)?),
                "caches" => s.caches = Some(value.parse().with_context(ctx)?),
                "t" => s.t = Some(parse_list(value).with_context(ctx)?),
                "count" => s.count = Some(value.parse().with_context(ctx)?),
                "degree" => s.degree = Some(parse_degree(value).with_context(ctx)?),
                "seed" => s.seed = Some(value.parse().with_context(ctx)?),
                "out" => s.out = Some(PathBuf::from(value)),
                "topology" => s.topology = Some(PathBuf::from(value)),
                "stages" => s.stages = Some(parse_stages(value).with_context(ctx)?),
                "bits" => s.bits = Some(value.parse().with_context(ctx)?),
                other => bail!("line {}: unknown key {other:?}", n + 1),
            }
        }
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in config {}", path.display()))
    }

    /// Fields set in `over` replace those in `self`.
    pub fn overlay(self, over: Settings) -> Settings {
        Settings {
            users: over.users.or(self.users),
            caches: over.caches.or(self.caches),
            t: over.t.or(self.t),
            count: over.count.or(self.count),
            degree: over.degree.or(self.degree),
            seed: over.seed.or(self.seed),
            out: over.out.or(self.out),
            topology: over.topology.or(self.topology),
            stages: over.stages.or(self.stages),
            bits: over.bits.or(self.bits),
        }
    }

    /// Fill defaults and check ranges. A topology file fixes `K` and
    /// `Lambda`, supplies `t` when none is given, and yields one instance
    /// per `t`.
    pub fn resolve(self, default_stages: &[Stage]) -> Result<ExperimentSpec> {
        let topology = match &self.topology {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading topology {}", path.display()))?;
                Some(
                    text.parse::<TopologyFile>()
                        .with_context(|| format!("in topology {}", path.display()))?,
                )
            }
            None => None,
        };
        let (users, cache_nodes, t, count, seed) = match &topology {
            Some(file) => {
                let k = file.topology.users();
                if let Some(u) = &self.users {
                    if u != &[k] {
                        bail!("users {:?} disagree with the topology file (K = {k})", u);
                    }
                }
                let lambda = file.topology.cache_nodes();
                if self.caches.is_some_and(|c| c != lambda) {
                    bail!("caches disagree with the topology file (Lambda = {lambda})");
                }
                let t = self.t.clone().unwrap_or_else(|| vec![file.t]);
                (vec![k], lambda, t, 1, self.seed.unwrap_or(file.seed))
            }
            None => (
                self.users.clone().ok_or_else(|| anyhow!("--users is required"))?,
                self.caches.ok_or_else(|| anyhow!("--caches is required"))?,
                self.t.clone().ok_or_else(|| anyhow!("--t is required"))?,
                self.count.unwrap_or(1),
                self.seed.unwrap_or(0),
            ),
        };
        if cache_nodes == 0 || users.contains(&0) {
            bail!("K and Lambda must be positive");
        }
        if let Some(&bad) = t.iter().find(|&&t| t == 0 || t > cache_nodes) {
            bail!("t = {bad} outside [1, Lambda = {cache_nodes}]");
        }
        let degree = self.degree.unwrap_or((1, cache_nodes));
        if degree.0 == 0 || degree.0 > degree.1 || degree.1 > cache_nodes {
            bail!(
                "degree range {}:{} must satisfy 1 <= lo <= hi <= Lambda = {cache_nodes}",
                degree.0,
                degree.1
            );
        }
        let packet_bits = self.bits.unwrap_or(macc_core::delivery::DEFAULT_PACKET_BITS);
        if packet_bits == 0 {
            bail!("packet size must be positive");
        }
        Ok(ExperimentSpec {
            users,
            cache_nodes,
            t,
            count,
            degree,
            seed,
            out: self.out.unwrap_or_else(|| PathBuf::from("out")),
            stages: self.stages.unwrap_or_else(|| default_stages.to_vec()),
            packet_bits,
            topology,
        })
    }
}

impl fmt::Display for ExperimentSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_config())
    }
}
