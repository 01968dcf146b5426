// SPDX-License-Identifier: Apache-2.0

//! Configuration: every parameter group with its defaults, loaded from a
//! flat `group.key = value` text file.
//!
//! Values are JSON literals (`0.5`, `true`, `[5, 10, 30]`, `null`); anything
//! that does not parse as JSON is taken as a bare string. `#` starts a
//! comment line. Unknown keys are rejected with their line number.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::codec::read_text;
use crate::eef_evolution::EefParams;
use crate::error::{GuiderError, Result};
use crate::grasp_feasibility::GraspParams;
use crate::nav_belief::NavParams;
use crate::object_cascade::CascadeParams;
use crate::perception_fusion::FusionParams;
use crate::replay::scenario::ScenarioParams;
use crate::scene_geometry::SceneParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReplayParams {
    /// Minimum duration a correct prediction must persist to count as confident, s.
    pub hold: f64,
    /// Run plane removal and clustering on the depth frame to produce
    /// segmentation prompts.
    pub scene_prompts: bool,
}

impl Default for ReplayParams {
    fn default() -> Self {
        ReplayParams {
            hold: 0.5,
            scene_prompts: true,
        }
    }
}

impl ReplayParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.hold >= 0.0 && self.hold.is_finite()) {
            return Err(GuiderError::Config(format!("replay.hold must be >= 0, got {}", self.hold)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub nav: NavParams,
    pub scene: SceneParams,
    pub fusion: FusionParams,
    pub grasp: GraspParams,
    pub cascade: CascadeParams,
    pub eef: EefParams,
    pub replay: ReplayParams,
    pub scenario: ScenarioParams,
}

impl Config {
    pub fn validate(&self) -> Result<()> {
        self.nav.validate()?;
        self.scene.validate()?;
        self.fusion.validate()?;
        self.grasp.validate()?;
        self.cascade.validate()?;
        self.eef.validate()?;
        self.replay.validate()?;
        self.scenario.validate()
    }

    /// Parse flat text on top of the defaults and validate.
    pub fn from_flat_str(text: &str, origin: &Path) -> Result<Config> {
        let mut cfg = Config::default();
        cfg.apply_flat(text, origin)?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Config> {
        let text = read_text(path).map_err(|e| match e {
            GuiderError::Io { path, source } if source.kind() == std::io::ErrorKind::NotFound => {
                GuiderError::Config(format!("config file {} does not exist", path.display()))
            }
            other => other,
        })?;
        Config::from_flat_str(&text, path)
    }

    /// Apply `key = value` lines to this configuration.
    pub fn apply_flat(&mut self, text: &str, origin: &Path) -> Result<()> {
        let mut tree = serde_json::to_value(&*self).expect("config serializes");
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| GuiderError::parse(origin, i + 1, format!("expected key = value, found {line:?}")))?;
            set_dotted(&mut tree, key.trim(), value.trim()).map_err(|msg| GuiderError::parse(origin, i + 1, msg))?;
        }
        let cfg: Config = serde_json::from_value(tree).map_err(|e| GuiderError::Config(e.to_string()))?;
        cfg.validate()?;
        *self = cfg;
        Ok(())
    }

    /// Apply one `key=value` override.
    pub fn set(&mut self, assignment: &str) -> Result<()> {
        self.apply_flat(assignment, Path::new("<override>"))
    }

    /// Every leaf as `group.key = value`, sorted by key.
    pub fn to_flat_string(&self) -> String {
        let tree = serde_json::to_value(self).expect("config serializes");
        let mut lines = Vec::new();
        flatten("", &tree, &mut lines);
        lines.sort();
        let mut out = String::new();
        for (k, v) in lines {
            out.push_str(&k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        }
        out
    }
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    match v {
        Value::Object(map) => {
            for (k, child) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, child, out);
            }
        }
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

fn set_dotted(tree: &mut Value, key: &str, raw: &str) -> std::result::Result<(), String> {
    if key.is_empty() {
        return Err("empty key".into());
    }
    let parts: Vec<&str> = key.split('.').collect();
    let mut node = tree;
    for (depth, part) in parts.iter().enumerate() {
        let map: &mut Map<String, Value> = node
            .as_object_mut()
            .ok_or_else(|| format!("{} is not a parameter group", parts[..depth].join(".")))?;
        node = map.get_mut(*part).ok_or_else(|| format!("unknown key {key:?}"))?;
    }
    if node.is_object() {
        return Err(format!("{key} is a group; set its fields individually"));
    }
    *node = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p() -> &'static Path {
        Path::new("test.cfg")
    }

    #[test]
    fn overrides_and_comments() {
        let cfg = Config::from_flat_str(
            "# tuning\nnav.motion_radius = 1.5\n\nnav.horizons = [5, 10]\nnav.horizon_weights=[0.5,0.5]\ncascade.feasibility_ablation = true\nscene.cluster.min_samples = 4\n",
            p(),
        )
        .unwrap();
        assert_eq!(cfg.nav.motion_radius, 1.5);
        assert_eq!(cfg.nav.horizons, vec![5.0, 10.0]);
        assert!(cfg.cascade.feasibility_ablation);
        assert_eq!(cfg.scene.cluster.min_samples, Some(4));
    }

    #[test]
    fn errors_carry_line_numbers() {
        match Config::from_flat_str("nav.motion_radius = 1\nnav.nope = 3\n", p()) {
            Err(GuiderError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(Config::from_flat_str("just words", p()), Err(GuiderError::Parse { line: 1, .. })));
        assert!(matches!(Config::from_flat_str("nav = 1", p()), Err(GuiderError::Parse { .. })));
        assert!(matches!(Config::from_flat_str("eef.p_max = 2", p()), Err(GuiderError::Config(_))));
        assert!(matches!(Config::from_flat_str("nav.motion_radius = fast", p()), Err(GuiderError::Config(_))));
    }

    #[test]
    fn defaults_roundtrip() {
        let d = Config::default();
        let text = d.to_flat_string();
        assert!(text.contains("eef.p_max = 0.99\n"));
        assert_eq!(Config::from_flat_str(&text, p()).unwrap(), d);
    }

    proptest! {
        #[test]
        fn config_roundtrip(radius in 0.1f64..5.0, gamma in 0.01f64..1.0, k in 1usize..6, hold in 0.0f64..3.0) {
            let mut c = Config::default();
            c.nav.motion_radius = radius;
            c.nav.gamma_decay = gamma;
            c.eef.k = k;
            c.replay.hold = hold;
            let once = Config::from_flat_str(&c.to_flat_string(), p()).unwrap();
            prop_assert_eq!(&once, &c);
            let twice = Config::from_flat_str(&once.to_flat_string(), p()).unwrap();
            prop_assert_eq!(twice, c);
        }
    }
}
