use std::path::Path;

use fermiphase::diagnostics::RunConfig;
use toml::{Table, Value};

/// Reads the config file (or starts empty), applies `key=value`
/// overrides in order and deserializes, rejecting unknown keys.
pub fn resolve(path: Option<&Path>, overrides: &[(String, String)]) -> Result<RunConfig, String> {
    let mut root = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| format!("cannot read config {}: {e}", p.display()))?;
            text.parse::<Table>()
                .map_err(|e| format!("config {}: {e}", p.display()))?
        }
        None => Table::new(),
    };
    for (key, raw) in overrides {
        set(&mut root, key, raw)?;
    }
    let config: RunConfig = Value::Table(root)
        .try_into()
        .map_err(|e: toml::de::Error| format!("config: {}", e.message()))?;
    config.validate().map_err(|e| e.to_string())?;
    Ok(config)
}

pub fn parse_override(arg: &str) -> Result<(String, String), String> {
    let (k, v) = arg
        .split_once('=')
        .ok_or_else(|| format!("expected key=value, got {arg:?}"))?;
    let k = k.trim();
    if k.is_empty() || k.split('.').any(str::is_empty) {
        return Err(format!("bad key in {arg:?}"));
    }
    Ok((k.to_string(), v.trim().to_string()))
}

/// A TOML literal when it parses as one, a bare string otherwise.
fn literal(raw: &str) -> Value {
    match format!("v = {raw}").parse::<Table>() {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => Value::String(raw.to_string()),
    }
}

fn set(root: &mut Table, key: &str, raw: &str) -> Result<(), String> {
    let mut value = literal(raw);
    // `trap=harmonic` names the kind of a tagged section
    if matches!(key, "trap" | "interaction") {
        if let Value::String(kind) = value {
            let mut t = Table::new();
            t.insert("kind".into(), Value::String(kind));
            value = Value::Table(t);
        }
    }
    let parts: Vec<&str> = key.split('.').collect();
    let (last, path) = parts.split_last().expect("non-empty key");
    let mut table = root;
    for part in path {
        let entry = table
            .entry(part.to_string())
            .or_insert_with(|| Value::Table(Table::new()));
        table = match entry {
            Value::Table(t) => t,
            _ => return Err(format!("{key}: {part} is not a section")),
        };
    }
    table.insert(last.to_string(), value);
    Ok(())
}

pub fn to_toml(config: &RunConfig) -> String {
    toml::to_string_pretty(config).unwrap_or_else(|e| format!("# cannot render config: {e}\n"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ov(pairs: &[&str]) -> Vec<(String, String)> {
        pairs.iter().map(|p| parse_override(p).unwrap()).collect()
    }

    #[test]
    fn overrides_apply_in_order() {
        let c = resolve(
            None,
            &ov(&[
                "run.n_list=[4, 8]",
                "run.seed=7",
                "run.seed=9",
                "grid.half_width_x=6",
            ]),
        )
        .unwrap();
        assert_eq!(c.run.n_list, vec![4, 8]);
        assert_eq!(c.run.seed, 9);
        assert_eq!(c.grid.half_width_x, 6.0);
    }

    #[test]
    fn tagged_sections() {
        let c = resolve(
            None,
            &ov(&[
                "interaction=gaussian",
                "interaction.strength=1",
                "interaction.width=0.5",
            ]),
        )
        .unwrap();
        assert!(!c.interaction.is_none());
        let c = resolve(None, &ov(&["norms.modulus.q=inf"])).unwrap();
        assert!(c.norms.modulus.q.is_infinite());
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(resolve(None, &ov(&["run.bogus=1"])).is_err());
        assert!(resolve(None, &ov(&["bogus.x=1"])).is_err());
        assert!(parse_override("run.d").is_err());
        assert!(parse_override("run..d=1").is_err());
    }

    #[test]
    fn dry_run_text_round_trips() {
        let c = resolve(None, &ov(&["run.d=1", "trap=harmonic"])).unwrap();
        let text = to_toml(&c);
        let back: RunConfig = toml::from_str(&text).unwrap();
        assert_eq!(back, c);
    }
}
