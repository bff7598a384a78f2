//! Run configuration: defaults, a key=value file, then command-line
//! overrides. Every output carries the resolved configuration.

use std::fmt;
use std::path::Path;

use geogrid_core::cover::{CoverMode, CoveringParams};
use geogrid_core::sphere::DEFAULT_MAX_STEP;
use geogrid_core::wkt::AntimeridianPolicy;
use geogrid_graph::iri::{IriScheme, KWG_ONT, KWG_RES};
use serde::Serialize;

pub const CONFIG_SCHEMA_VERSION: u32 = 1;
pub const CONFIG_ENV: &str = "GEOGRID_CONFIG";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub schema: u32,
    pub level: u8,
    #[serde(serialize_with = "policy_name")]
    pub antimeridian: AntimeridianPolicy,
    pub resource_base: String,
    pub ontology_base: String,
    /// Maximum edge length, in degrees, when densifying input features.
    pub densify: f64,
    pub cover_min_level: u8,
    pub cover_max_level: u8,
    pub cover_max_cells: usize,
    pub seed: u64,
}

fn policy_name<S: serde::Serializer>(p: &AntimeridianPolicy, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(policy_str(*p))
}

pub fn policy_str(p: AntimeridianPolicy) -> &'static str {
    match p {
        AntimeridianPolicy::Split => "split",
        AntimeridianPolicy::Reject => "reject",
        AntimeridianPolicy::PointAbstract => "point",
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        let cover = CoveringParams::default();
        Self {
            schema: CONFIG_SCHEMA_VERSION,
            level: 13,
            antimeridian: AntimeridianPolicy::Split,
            resource_base: KWG_RES.to_string(),
            ontology_base: KWG_ONT.to_string(),
            densify: DEFAULT_MAX_STEP,
            cover_min_level: cover.min_level,
            cover_max_level: cover.max_level,
            cover_max_cells: cover.max_cells,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "config line {l}: {}", self.message),
            None => write!(f, "config: {}", self.message),
        }
    }
}

fn bad(line: Option<usize>, message: impl Into<String>) -> ConfigError {
    ConfigError {
        line,
        message: message.into(),
    }
}

impl RunConfig {
    /// Sets one key; the keys are the field names, with `cover.` accepted as
    /// a prefix spelling of the `cover_` fields.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        fn num<T: std::str::FromStr>(v: &str) -> Result<T, String> {
            v.parse().map_err(|_| format!("cannot read {v:?} as a number"))
        }
        let key = key.replace("cover.", "cover_");
        match key.as_str() {
            "level" => self.level = num(value)?,
            "antimeridian" => self.antimeridian = value.parse()?,
            "resource_base" | "base" => self.resource_base = value.to_string(),
            "ontology_base" | "ontology" => self.ontology_base = value.to_string(),
            "densify" => self.densify = num(value)?,
            "cover_min_level" => self.cover_min_level = num(value)?,
            "cover_max_level" => self.cover_max_level = num(value)?,
            "cover_max_cells" => self.cover_max_cells = num(value)?,
            "seed" => self.seed = num(value)?,
            "schema" => {
                let v: u32 = num(value)?;
                if v != CONFIG_SCHEMA_VERSION {
                    return Err(format!("schema {v} is not supported (this build reads {CONFIG_SCHEMA_VERSION})"));
                }
            }
            other => return Err(format!("unknown key {other:?}")),
        }
        Ok(())
    }

    /// `key = value` lines; `#` starts a comment line.
    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| bad(Some(i + 1), "expected key = value"))?;
            self.set(k.trim(), v.trim()).map_err(|m| bad(Some(i + 1), m))?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| bad(None, format!("{}: {e}", path.display())))?;
        let mut c = Self::default();
        c.apply_text(&text)?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.level > 30 {
            return Err(bad(None, format!("level {} > 30", self.level)));
        }
        if !(self.densify > 0.0 && self.densify.is_finite()) {
            return Err(bad(None, format!("densify {} must be positive", self.densify)));
        }
        self.covering_params(CoverMode::Ordinary)
            .validate()
            .map_err(|e| bad(None, e.to_string()))?;
        self.scheme()?;
        Ok(())
    }

    pub fn scheme(&self) -> Result<IriScheme, ConfigError> {
        IriScheme::new(&self.resource_base, &self.ontology_base).map_err(|e| bad(None, e.to_string()))
    }

    pub fn covering_params(&self, mode: CoverMode) -> CoveringParams {
        CoveringParams {
            min_level: self.cover_min_level,
            max_level: self.cover_max_level,
            max_cells: self.cover_max_cells,
            mode,
        }
    }

    /// One-line `key=value` rendering used as the comment header of text
    /// outputs.
    pub fn echo(&self) -> String {
        format!(
            "schema={} level={} antimeridian={} resource_base={} ontology_base={} densify={} cover.min_level={} cover.max_level={} cover.max_cells={} seed={}",
            self.schema,
            self.level,
            policy_str(self.antimeridian),
            self.resource_base,
            self.ontology_base,
            self.densify,
            self.cover_min_level,
            self.cover_max_level,
            self.cover_max_cells,
            self.seed
        )
    }

    /// Same content as [`RunConfig::echo`], one key per line, readable by
    /// [`RunConfig::apply_text`].
    pub fn to_text(&self) -> String {
        self.echo()
            .split(' ')
            .map(|kv| kv.replacen('=', " = ", 1) + "\n")
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip() {
        let mut c = RunConfig::default();
        c.apply_text("# comment\nlevel = 9\ncover.max_cells=20\nantimeridian = reject\nseed=7\n").unwrap();
        assert_eq!((c.level, c.cover_max_cells, c.seed), (9, 20, 7));
        assert_eq!(c.antimeridian, AntimeridianPolicy::Reject);
        let mut d = RunConfig::default();
        d.apply_text(&c.to_text()).unwrap();
        assert_eq!(c, d);
    }

    #[test]
    fn errors_name_the_line() {
        let mut c = RunConfig::default();
        let e = c.apply_text("level = 3\nnope = 1\n").unwrap_err();
        assert_eq!(e.line, Some(2));
        assert!(c.apply_text("schema = 99").is_err());
        c.level = 31;
        assert!(c.validate().is_err());
    }
}
