//! `key=value` configuration files and flag overrides.

use crate::errors::{CliError, CliResult};
use salientcut_core::SegConfig;
use std::path::Path;

/// Load a UTF-8 `key=value` file over the defaults. Unknown keys and
/// malformed values are reported with their line number.
pub fn load_config(path: &Path) -> CliResult<SegConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path.display(), e))?;
    let mut cfg = SegConfig::default();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::Usage(format!(
                "{}:{}: expected key=value, got `{line}`",
                path.display(),
                lineno + 1
            )));
        };
        cfg.set(key.trim(), value).map_err(|e| {
            CliError::Usage(format!("{}:{}: {e}", path.display(), lineno + 1))
        })?;
    }
    cfg.validate()
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    Ok(cfg)
}

/// Apply `KEY=VALUE` overrides (from `--set`) on top of a config.
pub fn apply_overrides(cfg: &mut SegConfig, overrides: &[String]) -> CliResult<()> {
    for item in overrides {
        let Some((key, value)) = item.split_once('=') else {
            return Err(CliError::Usage(format!(
                "--set expects KEY=VALUE, got `{item}`"
            )));
        };
        cfg.set(key.trim(), value)
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_tmp(content: &str) -> std::path::PathBuf {
        let path = std::env::temp_dir().join(format!(
            "salientcut-cfg-{}-{}.conf",
            std::process::id(),
            content.len()
        ));
        let mut f = std::fs::File::create(&path).unwrap();
        f.write_all(content.as_bytes()).unwrap();
        path
    }

    #[test]
    fn empty_file_gives_defaults() {
        let path = write_tmp("");
        let cfg = load_config(&path).unwrap();
        assert_eq!(cfg.sigma1, 0.03);
        assert_eq!(cfg.sigma2, 0.035);
        assert_eq!(cfg.m, 3);
        std::fs::remove_file(path).ok();
    }

    #[test]
    fn parse_error_carries_line_number() {
        let path = write_tmp("lambda=10\nneighborhood=6\n");
        let err = load_config(&path).unwrap_err();
        assert!(err.message().contains(":2:"), "{err}");
        assert!(err.message().contains("{4, 8}"), "{err}");
        std::fs::remove_file(path).ok();
    }

    #[test]
    fn overrides_win_over_file_values() {
        let path = write_tmp("lambda=10\n");
        let mut cfg = load_config(&path).unwrap();
        assert_eq!(cfg.lambda, 10.0);
        apply_overrides(&mut cfg, &["lambda=5".to_string()]).unwrap();
        assert_eq!(cfg.lambda, 5.0);
        std::fs::remove_file(path).ok();
    }
}
