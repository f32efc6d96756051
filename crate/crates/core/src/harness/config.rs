//! `key = value` configuration files for sweeps and generators.
//!
//! Blank lines and lines starting with `#` are ignored. Lists are
//! comma-separated; a numeric grid may also be written `start:stop:step`.

use std::collections::BTreeMap;
use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::generators::{GeneratorKind, GeneratorSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Algo1,
    Algo2,
    WaterfillBaseline,
    FollowPrediction,
}

impl Algorithm {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "algo1" => Ok(Self::Algo1),
            "algo2" => Ok(Self::Algo2),
            "waterfill_baseline" | "waterfill" => Ok(Self::WaterfillBaseline),
            "follow_prediction" | "follow" => Ok(Self::FollowPrediction),
            _ => Err(Error::invalid(format!("unknown algorithm `{s}`"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Algo1 => "algo1",
            Self::Algo2 => "algo2",
            Self::WaterfillBaseline => "waterfill_baseline",
            Self::FollowPrediction => "follow_prediction",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CiMethod {
    /// `1.96 * sd / sqrt(n)`.
    Normal,
    /// Two-sided 95% Student-t quantile with `n - 1` degrees of freedom.
    Student,
}

#[derive(Debug, Clone, PartialEq)]
pub enum InstanceSource {
    Generator(GeneratorSpec),
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub algorithm: Algorithm,
    pub etas: Vec<f64>,
    pub error_rates: Vec<f64>,
    pub repetitions: usize,
    pub source: InstanceSource,
    /// Draw a fresh instance for every repetition (generator sources only);
    /// otherwise one instance serves the whole sweep.
    pub regenerate: bool,
    pub seed: u64,
    /// Node limit for the integral optimum that seeds the predictions; a node
    /// count rather than a time budget keeps sweeps reproducible.
    pub integral_nodes: usize,
    pub literal_alternatives: bool,
    /// Declared `R_max` for Algorithm 2; `None` uses the realized value.
    pub r_max: Option<f64>,
    pub ci: CiMethod,
}

impl SweepConfig {
    pub fn new(algorithm: Algorithm, source: InstanceSource) -> Self {
        Self {
            algorithm,
            etas: (0..=10).map(|k| k as f64 / 10.0).collect(),
            error_rates: vec![0.0, 0.25, 0.5, 0.75, 1.0],
            repetitions: 20,
            source,
            regenerate: true,
            seed: 0,
            integral_nodes: 2000,
            literal_alternatives: false,
            r_max: None,
            ci: CiMethod::Normal,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.etas.is_empty() || self.error_rates.is_empty() {
            return Err(Error::invalid("eta and error-rate grids must be nonempty"));
        }
        if self.repetitions == 0 {
            return Err(Error::invalid("repetitions must be at least 1"));
        }
        if let Some(e) = self.etas.iter().find(|e| !(0.0..=1.0).contains(*e)) {
            return Err(Error::invalid(format!("eta {e} outside [0, 1]")));
        }
        if let Some(e) = self.error_rates.iter().find(|e| !(0.0..=1.0).contains(*e)) {
            return Err(Error::invalid(format!("error rate {e} outside [0, 1]")));
        }
        Ok(())
    }

    /// Parses a sweep config. Required: `algorithm` and either `preset`,
    /// `instance` (a file path) or `kind` with generator keys.
    pub fn parse(text: &str) -> Result<Self> {
        let mut kv = parse_pairs(text)?;
        let algorithm = Algorithm::parse(&take_required(&mut kv, "algorithm")?)?;
        let seed = take_parsed(&mut kv, "seed")?.unwrap_or(0);
        let source = if let Some(path) = kv.remove("instance") {
            InstanceSource::File(PathBuf::from(path))
        } else {
            InstanceSource::Generator(generator_from_map(&mut kv, seed)?)
        };
        let mut cfg = Self::new(algorithm, source);
        cfg.seed = seed;
        if let Some(v) = kv.remove("etas") {
            cfg.etas = parse_grid(&v)?;
        }
        if let Some(v) = kv.remove("error_rates") {
            cfg.error_rates = parse_grid(&v)?;
        }
        if let Some(v) = take_parsed(&mut kv, "repetitions")? {
            cfg.repetitions = v;
        }
        if let Some(v) = take_parsed(&mut kv, "regenerate")? {
            cfg.regenerate = v;
        }
        if let Some(v) = take_parsed(&mut kv, "integral_nodes")? {
            cfg.integral_nodes = v;
        }
        if let Some(v) = take_parsed(&mut kv, "literal_alternatives")? {
            cfg.literal_alternatives = v;
        }
        cfg.r_max = take_parsed(&mut kv, "r_max")?;
        if let Some(v) = kv.remove("ci") {
            cfg.ci = match v.as_str() {
                "normal" => CiMethod::Normal,
                "student" | "t" => CiMethod::Student,
                _ => return Err(Error::invalid(format!("unknown ci method `{v}`"))),
            };
        }
        reject_leftovers(kv)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Parses a generator config: `preset = instance2` or `kind = ...` plus
/// overrides (`buyers`, `items`, `d_bound`, `budget_min`, `budget_max`,
/// `price_min`, `price_max`, `bidders_per_item`, `mu`, `sigma`,
/// `budget_fraction`, `global_budget`, `seed`).
pub fn parse_generator_spec(text: &str) -> Result<GeneratorSpec> {
    let mut kv = parse_pairs(text)?;
    let seed = take_parsed(&mut kv, "seed")?.unwrap_or(0);
    let spec = generator_from_map(&mut kv, seed)?;
    reject_leftovers(kv)?;
    Ok(spec)
}

/// Applies `key=value` overrides (as from the command line) to a spec.
pub fn apply_generator_overrides(spec: GeneratorSpec, pairs: &[(String, String)]) -> Result<GeneratorSpec> {
    let mut kv: BTreeMap<String, String> = pairs.iter().cloned().collect();
    let spec = apply_overrides(spec, &mut kv)?;
    reject_leftovers(kv)?;
    Ok(spec)
}

fn generator_from_map(kv: &mut BTreeMap<String, String>, seed: u64) -> Result<GeneratorSpec> {
    let base = if let Some(p) = kv.remove("preset") {
        GeneratorSpec::preset(&p, seed)?
    } else if let Some(k) = kv.remove("kind") {
        match GeneratorKind::parse(&k)? {
            GeneratorKind::Manual1 => GeneratorSpec::instance1(),
            GeneratorKind::RandomBounded => GeneratorSpec::instance2(seed),
            GeneratorKind::LognormalAuction => GeneratorSpec::lognormal(seed),
        }
    } else {
        return Err(Error::invalid("config needs `preset`, `kind` or `instance`"));
    };
    apply_overrides(base, kv)
}

fn apply_overrides(mut s: GeneratorSpec, kv: &mut BTreeMap<String, String>) -> Result<GeneratorSpec> {
    if let Some(v) = take_parsed(kv, "seed")? {
        s.seed = v;
    }
    if let Some(v) = take_parsed(kv, "buyers")? {
        s.buyers = v;
    }
    if let Some(v) = take_parsed(kv, "items")? {
        s.items = v;
    }
    if let Some(v) = take_parsed(kv, "d_bound")? {
        s.d_bound = v;
    }
    if let Some(v) = take_parsed(kv, "budget_min")? {
        s.budget_range.0 = v;
    }
    if let Some(v) = take_parsed(kv, "budget_max")? {
        s.budget_range.1 = v;
    }
    if let Some(v) = take_parsed(kv, "price_min")? {
        s.price_range.0 = v;
    }
    if let Some(v) = take_parsed(kv, "price_max")? {
        s.price_range.1 = v;
    }
    if let Some(v) = take_parsed(kv, "bidders_per_item")? {
        s.bidders_per_item = v;
    }
    if let Some(v) = take_parsed(kv, "mu")? {
        s.lognormal_mu = v;
    }
    if let Some(v) = take_parsed(kv, "sigma")? {
        s.lognormal_sigma = v;
    }
    if let Some(v) = take_parsed(kv, "budget_fraction")? {
        s.budget_fraction = v;
    }
    if let Some(v) = take_parsed(kv, "global_budget")? {
        s.global_budget = v;
    }
    Ok(s)
}

/// Splits `key = value` lines; duplicate keys are an error.
pub fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::parse(n + 1, format!("expected `key = value`, got `{line}`")))?;
        let k = k.trim().to_string();
        if out.insert(k.clone(), v.trim().to_string()).is_some() {
            return Err(Error::parse(n + 1, format!("duplicate key `{k}`")));
        }
    }
    Ok(out)
}

/// `a,b,c` or `start:stop:step` (inclusive of `stop` up to rounding).
pub fn parse_grid(v: &str) -> Result<Vec<f64>> {
    let bad = |s: &str| Error::invalid(format!("bad number `{s}` in grid `{v}`"));
    let parts: Vec<&str> = v.split(':').map(str::trim).collect();
    if parts.len() == 3 {
        let nums: Vec<f64> = parts
            .iter()
            .map(|p| p.parse::<f64>().map_err(|_| bad(p)))
            .collect::<Result<_>>()?;
        let (start, stop, step) = (nums[0], nums[1], nums[2]);
        if !(step > 0.0) || stop < start {
            return Err(Error::invalid(format!("bad grid range `{v}`")));
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize;
        return Ok((0..=count)
            .map(|k| {
                let x = start + k as f64 * step;
                (x * 1e12).round() / 1e12
            })
            .collect());
    }
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|_| bad(s)))
        .collect()
}

fn take_required(kv: &mut BTreeMap<String, String>, key: &str) -> Result<String> {
    kv.remove(key)
        .ok_or_else(|| Error::invalid(format!("missing required key `{key}`")))
}

fn take_parsed<T: std::str::FromStr>(kv: &mut BTreeMap<String, String>, key: &str) -> Result<Option<T>> {
    match kv.remove(key) {
        None => Ok(None),
        Some(v) => v
            .parse()
            .map(Some)
            .map_err(|_| Error::invalid(format!("cannot parse `{key} = {v}`"))),
    }
}

fn reject_leftovers(kv: BTreeMap<String, String>) -> Result<()> {
    match kv.keys().next() {
        Some(k) => Err(Error::invalid(format!("unknown key `{k}`"))),
        None => Ok(()),
    }
}
