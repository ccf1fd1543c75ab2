//! Experiment configuration: preset, then config file, then flags, each
//! layer overriding the previous one field by field.

use std::path::{Path, PathBuf};

use billiard_walk::presets::{barycentric_point, from_coroot, preset, Start};
use billiard_walk::ray::{jitter_direction, unit_direction};
use billiard_walk::{Arrangement, Error, Result};
use clap::Args;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

/// Seed used when none is given. Environment variables are never read.
pub const DEFAULT_SEED: u64 = 1;

/// Preset used when neither a preset nor a type is given.
pub const REFERENCE_PRESET: &str = "a2-irrational";

/// Options shared by every experiment command. The same names are accepted
/// as keys of a JSON config file.
#[derive(Args, Clone, Debug, Default, Deserialize, Serialize)]
#[serde(default)]
pub struct Common {
    /// Named reference configuration (a1-p0.3, a1-p0.5, a1-p0.7,
    /// a2-rational, a2-irrational, g2).
    #[arg(long)]
    pub preset: Option<String>,
    /// JSON file with any of these options; flags take precedence.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Root system type such as A2, B3, G2, F4.
    #[arg(long = "type")]
    #[serde(rename = "type")]
    pub type_name: Option<String>,
    /// Reflection probability, in (0, 1).
    #[arg(long)]
    pub p: Option<f64>,
    /// Direction in ambient coordinates, comma separated; entries may be
    /// decimals or expressions such as -sqrt(2) or 1/3.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub b: Option<Vec<String>>,
    /// Direction in coroot coordinates (same syntax as --b).
    #[arg(
        long,
        value_delimiter = ',',
        allow_hyphen_values = true,
        conflicts_with = "b"
    )]
    pub b_coroot: Option<Vec<String>>,
    /// Start point in ambient coordinates (default: centroid of the
    /// fundamental alcove).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub l0: Option<Vec<String>>,
    /// Start point as weights on the vertices of the fundamental alcove.
    #[arg(long, value_delimiter = ',', conflicts_with = "l0")]
    pub l0_bary: Option<Vec<f64>>,
    /// Master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Perturb the direction by about 1e-9 with this seed, to escape ties.
    #[arg(long)]
    pub jitter: Option<u64>,
    /// Worker threads for ensembles (results do not depend on it).
    #[arg(long)]
    #[serde(skip)]
    pub threads: Option<usize>,
    /// Output path (default: standard output).
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    /// Also run the matching verification criteria at reduced budget and
    /// exit nonzero if any fails.
    #[arg(long)]
    #[serde(skip)]
    pub verify: bool,
}

/// Keys of `T` as written in config files.
pub fn keys<T: Default + Serialize>() -> Vec<String> {
    match serde_json::to_value(T::default()) {
        Ok(Value::Object(m)) => m.keys().cloned().collect(),
        _ => Vec::new(),
    }
}

/// Reads a config file as a flat JSON object, rejecting keys outside
/// `allowed`.
pub fn read_config(path: &Path, allowed: &[String]) -> Result<Map<String, Value>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let map: Map<String, Value> = serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    if let Some(k) = map.keys().find(|k| !allowed.contains(k)) {
        return Err(Error::Config(format!(
            "{}: unknown key {k:?}",
            path.display()
        )));
    }
    Ok(map)
}

/// The options in `flags` that are set, laid over those in `file`.
pub fn overlay<T: Serialize + DeserializeOwned>(flags: &T, file: &Map<String, Value>) -> Result<T> {
    let mut merged = file.clone();
    if let Ok(Value::Object(set)) = serde_json::to_value(flags) {
        for (k, v) in set {
            if !v.is_null() {
                merged.insert(k, v);
            }
        }
    }
    serde_json::from_value(Value::Object(merged)).map_err(|e| Error::Config(format!("config: {e}")))
}

/// Parses a real number written as a decimal or a small expression built
/// from numbers, `sqrt(…)`, parentheses, unary signs, `*` and `/`.
pub fn parse_real(text: &str) -> Result<f64> {
    let mut p = ExprParser {
        s: text.as_bytes(),
        pos: 0,
    };
    let v = p.product()?;
    p.skip_ws();
    if p.pos != p.s.len() || !v.is_finite() {
        return Err(Error::Config(format!("cannot parse number {text:?}")));
    }
    Ok(v)
}

struct ExprParser<'a> {
    s: &'a [u8],
    pos: usize,
}

impl ExprParser<'_> {
    fn skip_ws(&mut self) {
        while self.s.get(self.pos).is_some_and(u8::is_ascii_whitespace) {
            self.pos += 1;
        }
    }

    fn eat(&mut self, c: u8) -> bool {
        self.skip_ws();
        if self.s.get(self.pos) == Some(&c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn error(&self) -> Error {
        Error::Config(format!(
            "cannot parse number {:?}",
            String::from_utf8_lossy(self.s)
        ))
    }

    fn product(&mut self) -> Result<f64> {
        let mut v = self.factor()?;
        loop {
            if self.eat(b'*') {
                v *= self.factor()?;
            } else if self.eat(b'/') {
                v /= self.factor()?;
            } else {
                return Ok(v);
            }
        }
    }

    fn factor(&mut self) -> Result<f64> {
        if self.eat(b'-') {
            return Ok(-self.factor()?);
        }
        if self.eat(b'+') {
            return self.factor();
        }
        if self.eat(b'(') {
            let v = self.product()?;
            return if self.eat(b')') {
                Ok(v)
            } else {
                Err(self.error())
            };
        }
        self.skip_ws();
        if self.s[self.pos..].starts_with(b"sqrt") {
            self.pos += 4;
            if !self.eat(b'(') {
                return Err(self.error());
            }
            let v = self.product()?;
            if !self.eat(b')') || v < 0.0 {
                return Err(self.error());
            }
            return Ok(v.sqrt());
        }
        let start = self.pos;
        while self
            .s
            .get(self.pos)
            .is_some_and(|c| c.is_ascii_digit() || matches!(c, b'.' | b'e' | b'E'))
        {
            // exponent sign
            if matches!(self.s[self.pos], b'e' | b'E')
                && matches!(self.s.get(self.pos + 1), Some(b'-' | b'+'))
            {
                self.pos += 1;
            }
            self.pos += 1;
        }
        std::str::from_utf8(&self.s[start..self.pos])
            .ok()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| self.error())
    }
}

fn parse_list(items: &[String]) -> Result<Vec<f64>> {
    items.iter().map(|s| parse_real(s)).collect()
}

/// A fully resolved experiment.
pub struct Experiment {
    pub preset: Option<String>,
    pub arr: Arrangement,
    pub type_name: String,
    pub p: f64,
    /// Direction as written, and the basis it was written in.
    pub b_text: Vec<String>,
    pub b_basis: &'static str,
    /// Unit ambient direction actually used.
    pub b: Vec<f64>,
    pub l0: Vec<f64>,
    pub seed: u64,
    pub jitter: Option<u64>,
}

impl Experiment {
    /// Everything needed to rebuild the walk, as config-file keys. The start
    /// point is written out in full so the echo does not depend on presets.
    pub fn echo(&self) -> Map<String, Value> {
        let mut m = Map::new();
        m.insert("type".into(), json!(self.type_name));
        m.insert("p".into(), json!(self.p));
        let key = if self.b_basis == "coroot" {
            "b_coroot"
        } else {
            "b"
        };
        m.insert(key.into(), json!(self.b_text));
        let l0: Vec<String> = self.l0.iter().map(|x| format!("{x:?}")).collect();
        m.insert("l0".into(), json!(l0));
        m.insert("seed".into(), json!(self.seed));
        if let Some(j) = self.jitter {
            m.insert("jitter".into(), json!(j));
        }
        m
    }
}

/// Resolves preset, config file and flags into an experiment.
pub fn resolve(flags: &Common, file: &Map<String, Value>) -> Result<Experiment> {
    let user = overlay(flags, file)?;
    let preset_name = match (&user.preset, &user.type_name) {
        (Some(name), _) => Some(name.clone()),
        (None, None) => Some(REFERENCE_PRESET.to_string()),
        (None, Some(_)) => None,
    };
    let mut c = user;
    if let Some(name) = &preset_name {
        let pr = preset(name)?;
        c.preset = Some(name.clone());
        c.type_name.get_or_insert_with(|| pr.type_name.to_string());
        c.p.get_or_insert(pr.p);
        // an explicit ambient direction or start point replaces the preset's
        if c.b.is_none() && c.b_coroot.is_none() {
            c.b_coroot = Some(pr.b_text.split(',').map(str::to_string).collect());
        }
        if c.l0.is_none() && c.l0_bary.is_none() {
            if let Start::Barycentric(w) = pr.start {
                c.l0_bary = Some(w);
            }
        }
    }

    let type_name = c
        .type_name
        .clone()
        .expect("type is set by the preset or the user");
    let arr = Arrangement::parse(&type_name)?;
    let p = c.p.ok_or_else(|| Error::Config("missing --p".into()))?;
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Config(format!("p must lie in (0, 1), got {p}")));
    }
    let (b_text, b_basis, raw) = match (&c.b, &c.b_coroot) {
        (Some(t), _) => (t.clone(), "ambient", parse_list(t)?),
        (None, Some(t)) => (t.clone(), "coroot", parse_list(t)?),
        (None, None) => return Err(Error::Config("missing --b".into())),
    };
    if raw.len() != arr.rank() {
        return Err(Error::Config(format!(
            "direction has {} entries, {type_name} needs {}",
            raw.len(),
            arr.rank()
        )));
    }
    let raw = if b_basis == "coroot" {
        from_coroot(&arr, &raw)?
    } else {
        raw
    };
    let b = match c.jitter {
        Some(s) => jitter_direction(&raw, s)?,
        None => {
            unit_direction(&raw).map_err(|_| Error::Config("direction must be nonzero".into()))?
        }
    };
    let l0 = match (&c.l0, &c.l0_bary) {
        (Some(t), _) => {
            let x = parse_list(t)?;
            if x.len() != arr.rank() {
                return Err(Error::Config(format!(
                    "start point needs {} entries",
                    arr.rank()
                )));
            }
            x
        }
        (None, Some(w)) => barycentric_point(&arr, w)?,
        (None, None) => arr.frame.centroid.as_slice().to_vec(),
    };
    Ok(Experiment {
        preset: c.preset.clone(),
        arr,
        type_name,
        p,
        b_text,
        b_basis,
        b,
        l0,
        seed: c.seed.unwrap_or(DEFAULT_SEED),
        jitter: c.jitter,
    })
}
