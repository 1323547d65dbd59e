//! Run files: either one experiment config, or a batch
//!
//! ```toml
//! repeats = 5
//!
//! [[experiment]]
//! # ExperimentConfig fields
//! ```
//!
//! where each entry is run `repeats` times with seeds `rng_seed`,
//! `rng_seed + 1`, and so on.

use bidlab_core::analysis::treatment_label;
use bidlab_core::{validate_config, ExperimentConfig, ValidConfig};
use std::collections::BTreeSet;

#[derive(Debug)]
pub struct Planned {
    pub id: String,
    pub config: ValidConfig,
}

fn sanitize(s: &str) -> String {
    s.chars().map(|c| if c.is_ascii_alphanumeric() || "-_.".contains(c) { c } else { '_' }).collect()
}

pub fn experiment_id(c: &ExperimentConfig) -> String {
    sanitize(&format!("{}-s{}", treatment_label(c), c.rng_seed))
}

fn parse_entries(text: &str) -> Result<(Vec<ExperimentConfig>, u32), String> {
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| e.to_string())?;
    if !table.contains_key("experiment") {
        return ExperimentConfig::from_toml(text).map(|c| (vec![c], 1)).map_err(|e| e.to_string());
    }
    let mut repeats = 1;
    let mut entries = Vec::new();
    for (key, value) in table {
        match key.as_str() {
            "repeats" => {
                repeats = value
                    .as_integer()
                    .filter(|&r| r >= 1 && r <= u32::MAX as i64)
                    .ok_or("repeats must be a positive integer")? as u32;
            }
            "experiment" => {
                let list = value.as_array().ok_or("experiment must be an array of tables ([[experiment]])")?;
                for (k, v) in list.iter().enumerate() {
                    let c: ExperimentConfig = v.clone().try_into().map_err(|e| format!("experiment {k}: {e}"))?;
                    entries.push(c);
                }
            }
            other => return Err(format!("unknown top-level key {other:?} in batch file")),
        }
    }
    if entries.is_empty() {
        return Err("batch file lists no experiments".into());
    }
    Ok((entries, repeats))
}

/// Expands and validates a run file. `seed` replaces every entry's base
/// seed. All problems are collected before anything runs.
pub fn plan(text: &str, seed: Option<u64>) -> Result<Vec<Planned>, Vec<String>> {
    let (entries, repeats) = parse_entries(text).map_err(|e| vec![e])?;
    let mut out = Vec::new();
    let mut errors = Vec::new();
    let mut ids = BTreeSet::new();
    for (k, base) in entries.iter().enumerate() {
        let start = seed.unwrap_or(base.rng_seed);
        for r in 0..repeats as u64 {
            let mut c = base.clone();
            c.rng_seed = start.wrapping_add(r);
            let id = experiment_id(&c);
            if !ids.insert(id.clone()) {
                errors.push(format!(
                    "experiment {k}: duplicate experiment id {id}; give entries distinct names or seeds"
                ));
                continue;
            }
            match validate_config(&c) {
                Ok(v) => out.push(Planned { id, config: v }),
                Err(e) => errors.push(format!("experiment {k} ({id}): {e}")),
            }
        }
    }
    if errors.is_empty() {
        Ok(out)
    } else {
        Err(errors)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const ONE: &str = r#"
num_bidders = 3
num_rounds = 4
agent_specs = [{ kind = "truthful" }, { kind = "truthful" }, { kind = "truthful" }]
rng_seed = 7
[mechanism]
family = "SPSB"
[environment]
kind = "IPV"
"#;

    #[test]
    fn single_config() {
        let p = plan(ONE, None).unwrap();
        assert_eq!(p.len(), 1);
        assert_eq!(p[0].id, "SPSB-IPV-n3-s7");
        assert_eq!(plan(ONE, Some(9)).unwrap()[0].config.config.rng_seed, 9);
    }

    #[test]
    fn batch_repeats_seeds() {
        let body =
            ONE.replace("[mechanism]", "[experiment.mechanism]").replace("[environment]", "[experiment.environment]");
        let text = format!("repeats = 3\n[[experiment]]\n{body}");
        let p = plan(&text, None).unwrap();
        let seeds: Vec<u64> = p.iter().map(|x| x.config.config.rng_seed).collect();
        assert_eq!(seeds, vec![7, 8, 9]);
    }

    #[test]
    fn problems_are_collected() {
        assert!(plan(&format!("bogus = 1\n{ONE}"), None).is_err());
        let bad = ONE.replace("num_bidders = 3", "num_bidders = 1");
        let errs = plan(&bad, None).unwrap_err();
        assert_eq!(errs.len(), 1);
        let text = "repeats = 0\n[[experiment]]\n";
        assert!(plan(text, None).is_err());
    }
}
