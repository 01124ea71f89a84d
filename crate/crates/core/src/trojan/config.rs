// SPDX-License-Identifier: Apache-2.0

//! Trojan configuration files and configuration matrices.
//!
//! A configuration is line-oriented `key = value` text:
//!
//! ```text
//! name = ht0
//! trigger = counter n=4 v=15 mode=any
//! payload = leak n=8 code=serial c=2
//! ssf.trigger = TR,tau=0.05
//! ssf.payload_in = RLT,threshold=0
//! ssf.payload_out = T
//! ssf.payload_ft = D
//! seed = 42
//! target = aes
//! ```
//!
//! A matrix is TOML with value lists:
//!
//! ```toml
//! seed = 7
//! targets = ["aes", "fsm"]
//! triggers = ["comb n=4 v=0x5", "counter n=2 v=3"]
//! payloads = ["modify n=2 v=0x3", "fault n=2"]
//! [[ssf]]
//! trigger = "T"
//! payload_ft = "RLR"
//! ```

use super::spec::{PayloadSpec, TriggerSpec};
use crate::select::{PortRole, SsfAssignment, SsfKind};
use std::fmt::Write as _;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("configuration matrix is empty after filtering")]
    EmptyMatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrojanConfig {
    pub name: String,
    pub trigger: TriggerSpec,
    pub payload: PayloadSpec,
    pub ssf: SsfAssignment,
    pub seed: u64,
    pub target: Option<String>,
}

impl TrojanConfig {
    /// Checks the selection functions against the interface: triggers and
    /// mandatory payload ports may not be left unconnected.
    pub fn validate(&self) -> Result<(), String> {
        if self.ssf.trigger.is_disconnected() {
            return Err("trigger inputs cannot use D".into());
        }
        let required: &[PortRole] = match self.payload {
            PayloadSpec::Leak { .. } => &[PortRole::PayloadIn, PortRole::PayloadOut],
            PayloadSpec::Modify { .. } | PayloadSpec::Fault { .. } => {
                &[PortRole::PayloadFeedthrough]
            }
            PayloadSpec::ShiftBurn { .. } => &[],
        };
        for r in required {
            if self.ssf.get(*r).is_disconnected() {
                return Err(format!(
                    "{} payload requires a connected {} port",
                    self.payload.kind_name(),
                    r.key()
                ));
            }
        }
        Ok(())
    }
}

fn syntax(line: usize, message: impl Into<String>) -> ConfigError {
    ConfigError::Syntax {
        line,
        message: message.into(),
    }
}

pub fn parse_trojan_config(text: &str) -> Result<TrojanConfig, ConfigError> {
    let mut name = None;
    let mut trigger = None;
    let mut payload = None;
    let mut ssf = SsfAssignment::default();
    let mut seed = 0;
    let mut target = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let (key, value) = body
            .split_once('=')
            .map(|(k, v)| (k.trim(), v.trim()))
            .ok_or_else(|| syntax(line, format!("expected key = value, found '{body}'")))?;
        match key {
            "name" => name = Some(value.to_string()),
            "trigger" => trigger = Some(value.parse::<TriggerSpec>().map_err(|e| syntax(line, e.to_string()))?),
            "payload" => payload = Some(value.parse::<PayloadSpec>().map_err(|e| syntax(line, e.to_string()))?),
            "seed" => {
                seed = super::spec::parse_u64(value).map_err(|e| syntax(line, e))?;
            }
            "target" => target = Some(value.to_string()),
            _ => {
                let role = key
                    .strip_prefix("ssf.")
                    .and_then(PortRole::from_key)
                    .ok_or_else(|| syntax(line, format!("unknown key '{key}'")))?;
                let kind: SsfKind = value.parse().map_err(|e: String| syntax(line, e))?;
                ssf.set(role, kind);
            }
        }
    }
    let cfg = TrojanConfig {
        name: name.unwrap_or_else(|| "ht".to_string()),
        trigger: trigger.ok_or_else(|| ConfigError::Invalid("missing trigger".into()))?,
        payload: payload.ok_or_else(|| ConfigError::Invalid("missing payload".into()))?,
        ssf,
        seed,
        target,
    };
    cfg.validate().map_err(ConfigError::Invalid)?;
    Ok(cfg)
}

pub fn write_trojan_config(c: &TrojanConfig) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "name = {}", c.name);
    let _ = writeln!(out, "trigger = {}", c.trigger);
    let _ = writeln!(out, "payload = {}", c.payload);
    for role in PortRole::ALL {
        let _ = writeln!(out, "ssf.{} = {}", role.key(), c.ssf.get(role));
    }
    let _ = writeln!(out, "seed = {}", c.seed);
    if let Some(t) = &c.target {
        let _ = writeln!(out, "target = {t}");
    }
    out
}

/// Per-variant seed: the global seed mixed with the variant index through
/// two rounds of SplitMix64, `mix(global ^ mix(index))`.
pub fn variant_seed(global: u64, index: u64) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    mix(global ^ mix(index))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixOptions {
    pub seed: u64,
    /// Target names; an empty list means a single unnamed target.
    pub targets: Vec<String>,
    pub triggers: Vec<TriggerSpec>,
    pub payloads: Vec<PayloadSpec>,
    pub ssf: Vec<SsfAssignment>,
}

#[derive(serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMatrix {
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    targets: Vec<String>,
    triggers: Vec<String>,
    payloads: Vec<String>,
    #[serde(default)]
    ssf: Vec<RawSsf>,
}

#[derive(serde::Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSsf {
    trigger: Option<String>,
    payload_in: Option<String>,
    payload_out: Option<String>,
    payload_ft: Option<String>,
}

pub fn parse_matrix(text: &str) -> Result<MatrixOptions, ConfigError> {
    let raw: RawMatrix = toml::from_str(text).map_err(|e| ConfigError::Invalid(e.to_string()))?;
    let invalid = |e: String| ConfigError::Invalid(e);
    let triggers = raw
        .triggers
        .iter()
        .map(|t| t.parse::<TriggerSpec>().map_err(|e| invalid(e.to_string())))
        .collect::<Result<_, _>>()?;
    let payloads = raw
        .payloads
        .iter()
        .map(|t| t.parse::<PayloadSpec>().map_err(|e| invalid(e.to_string())))
        .collect::<Result<_, _>>()?;
    let mut ssf = Vec::new();
    for s in &raw.ssf {
        let mut a = SsfAssignment::default();
        for (role, v) in [
            (PortRole::Trigger, &s.trigger),
            (PortRole::PayloadIn, &s.payload_in),
            (PortRole::PayloadOut, &s.payload_out),
            (PortRole::PayloadFeedthrough, &s.payload_ft),
        ] {
            if let Some(v) = v {
                a.set(role, v.parse().map_err(invalid)?);
            }
        }
        ssf.push(a);
    }
    if ssf.is_empty() {
        ssf.push(SsfAssignment::default());
    }
    Ok(MatrixOptions {
        seed: raw.seed,
        targets: raw.targets,
        triggers,
        payloads,
        ssf,
    })
}

/// Cartesian product targets x triggers x payloads x selection choices,
/// minus invalid combinations. Variant `i` is named `ht<i>` and seeded with
/// [`variant_seed`].
pub fn generate_config_matrix(opts: &MatrixOptions) -> Result<Vec<TrojanConfig>, ConfigError> {
    let targets: Vec<Option<String>> = if opts.targets.is_empty() {
        vec![None]
    } else {
        opts.targets.iter().cloned().map(Some).collect()
    };
    let mut out = Vec::new();
    for target in &targets {
        for trigger in &opts.triggers {
            for payload in &opts.payloads {
                for ssf in &opts.ssf {
                    let index = out.len() as u64;
                    let cfg = TrojanConfig {
                        name: format!("ht{index}"),
                        trigger: trigger.clone(),
                        payload: payload.clone(),
                        ssf: *ssf,
                        seed: variant_seed(opts.seed, index),
                        target: target.clone(),
                    };
                    if cfg.validate().is_ok() {
                        out.push(cfg);
                    }
                }
            }
        }
    }
    if out.is_empty() {
        return Err(ConfigError::EmptyMatrix);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_round_trip() {
        let text = "name = ht3\ntrigger = counter n=4 v=15 mode=any\npayload = leak n=8 code=serial c=2\n\
                    ssf.trigger = TR\nssf.payload_in = RLT,threshold=-0.5\nssf.payload_out = T\n\
                    ssf.payload_ft = D\nseed = 42\ntarget = aes\n";
        let c = parse_trojan_config(text).unwrap();
        assert_eq!(write_trojan_config(&c), text);
    }

    #[test]
    fn invalid_configs() {
        let base = "trigger = comb n=2 v=1\npayload = modify n=1 v=1\n";
        assert!(parse_trojan_config(&format!("{base}ssf.payload_ft = D\n")).is_err());
        assert!(parse_trojan_config(&format!("{base}ssf.trigger = D\n")).is_err());
        assert!(parse_trojan_config(&format!("{base}bogus = 1\n")).is_err());
        assert!(parse_trojan_config("trigger = comb n=2 v=1\npayload = shiftburn n=2\nssf.payload_out = D\n").is_ok());
    }

    #[test]
    fn matrix_product_and_filter() {
        let text = r#"
            seed = 1
            targets = ["a", "b", "c", "d"]
            triggers = ["comb n=4 v=0x5", "counter n=2 v=3", "fsm n=2 v=1,2 m=3,3"]
            payloads = ["leak n=4 code=serial c=1", "shiftburn n=4", "modify n=2 v=0x3", "fault n=2"]
            [[ssf]]
            trigger = "T"
            payload_out = "T"
            [[ssf]]
            trigger = "TR"
            payload_in = "RLR"
            payload_out = "TC"
            payload_ft = "RHS"
        "#;
        let m = parse_matrix(text).unwrap();
        let cfgs = generate_config_matrix(&m).unwrap();
        assert_eq!(cfgs.len(), 96);
        assert_eq!(cfgs[5].name, "ht5");
        assert_eq!(cfgs[5].seed, variant_seed(1, 5));

        let one = "triggers = [\"comb n=1 v=1\"]\npayloads = [\"fault n=1\"]\n";
        assert_eq!(generate_config_matrix(&parse_matrix(one).unwrap()).unwrap().len(), 1);

        let bad = "triggers = [\"comb n=1 v=1\"]\npayloads = [\"modify n=1 v=1\"]\n[[ssf]]\npayload_ft = \"D\"\n";
        assert_eq!(
            generate_config_matrix(&parse_matrix(bad).unwrap()),
            Err(ConfigError::EmptyMatrix)
        );
    }
}
