//! Resource-cap resolution: flag > environment > config file > default.
//!
//! The config file is plain `key = value` lines and may set resource caps
//! only; mathematical parameters always travel as flags so a query is
//! reproducible from its command line alone.

use std::path::Path;

use natop_core::ResourceLimits;

pub const ENV_MAX_UNKNOWNS: &str = "NATOP_MAX_UNKNOWNS";

#[derive(Debug, Default, Clone, Copy)]
pub struct CapFlags {
    pub max_unknowns: Option<usize>,
    pub max_nonzeros: Option<usize>,
}

fn parse_config(text: &str, path: &Path) -> Result<CapFlags, String> {
    let mut out = CapFlags::default();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(format!(
                "{}:{}: expected key = value",
                path.display(),
                lineno + 1
            ));
        };
        let value: usize = value.trim().parse().map_err(|_| {
            format!(
                "{}:{}: value {:?} is not a nonnegative integer",
                path.display(),
                lineno + 1,
                value.trim()
            )
        })?;
        match key.trim() {
            "max_unknowns" => out.max_unknowns = Some(value),
            "max_nonzeros" => out.max_nonzeros = Some(value),
            other => {
                return Err(format!(
                    "{}:{}: unknown key {:?} (the config may set resource caps only: \
                     max_unknowns, max_nonzeros)",
                    path.display(),
                    lineno + 1,
                    other
                ))
            }
        }
    }
    Ok(out)
}

pub fn resolve(flags: CapFlags, config: Option<&Path>) -> Result<ResourceLimits, String> {
    let mut limits = ResourceLimits::default();
    if let Some(path) = config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {}", path.display(), e))?;
        let from_file = parse_config(&text, path)?;
        if let Some(v) = from_file.max_unknowns {
            limits.max_unknowns = v;
        }
        if let Some(v) = from_file.max_nonzeros {
            limits.max_nonzeros = v;
        }
    }
    if let Ok(raw) = std::env::var(ENV_MAX_UNKNOWNS) {
        limits.max_unknowns = raw.parse().map_err(|_| {
            format!("{ENV_MAX_UNKNOWNS}={raw:?} is not a nonnegative integer")
        })?;
    }
    if let Some(v) = flags.max_unknowns {
        limits.max_unknowns = v;
    }
    if let Some(v) = flags.max_nonzeros {
        limits.max_nonzeros = v;
    }
    Ok(limits)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fake_path() -> &'static Path {
        Path::new("caps.conf")
    }

    #[test]
    fn config_lines_parse_with_comments_and_blanks() {
        let caps = parse_config(
            "# caps\n\nmax_unknowns = 12\nmax_nonzeros=34\n",
            fake_path(),
        )
        .unwrap();
        assert_eq!(caps.max_unknowns, Some(12));
        assert_eq!(caps.max_nonzeros, Some(34));
    }

    #[test]
    fn non_cap_keys_are_rejected() {
        let e = parse_config("m = 3\n", fake_path()).unwrap_err();
        assert!(e.contains("unknown key"));
        assert!(e.contains("caps.conf:1"));
        let e = parse_config("max_unknowns twelve\n", fake_path()).unwrap_err();
        assert!(e.contains("key = value"));
        let e = parse_config("max_unknowns = -2\n", fake_path()).unwrap_err();
        assert!(e.contains("nonnegative"));
    }

    #[test]
    fn flags_win_over_defaults() {
        let limits = resolve(
            CapFlags { max_unknowns: Some(7), max_nonzeros: None },
            None,
        )
        .unwrap();
        assert_eq!(limits.max_unknowns, 7);
        assert_eq!(limits.max_nonzeros, ResourceLimits::default().max_nonzeros);
    }
}
