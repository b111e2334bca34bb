//! Merges a `key = value` file into the argument list. File entries are
//! inserted right after the subcommand so later command-line flags win.

use std::ffi::OsString;
use std::path::Path;

use crate::error::{config, CliResult};

/// Parses the file into `(key, value)` pairs. `#` starts a comment.
pub fn parse_config(text: &str) -> CliResult<Vec<(String, String)>> {
    text.lines()
        .enumerate()
        .map(|(i, line)| (i + 1, line.split('#').next().unwrap_or("").trim()))
        .filter(|(_, line)| !line.is_empty())
        .map(|(n, line)| {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| config(format!("line {n}: expected key = value")))?;
            let key = k.trim().replace('_', "-");
            if key.is_empty() {
                return Err(config(format!("line {n}: empty key")));
            }
            Ok((key, v.trim().trim_matches('"').to_owned()))
        })
        .collect()
}

fn config_path(args: &[OsString]) -> Option<OsString> {
    args.iter().enumerate().find_map(|(i, a)| {
        let s = a.to_str()?;
        if s == "--config" {
            args.get(i + 1).cloned()
        } else {
            s.strip_prefix("--config=").map(OsString::from)
        }
    })
}

/// Expands `--config FILE` into flags. An `experiment` key must name the
/// subcommand given on the command line.
pub fn expand_args(args: Vec<OsString>) -> CliResult<Vec<OsString>> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let text = std::fs::read_to_string(Path::new(&path))
        .map_err(|e| config(format!("cannot read {}: {e}", Path::new(&path).display())))?;
    let entries = parse_config(&text)?;
    let sub = args
        .get(1)
        .and_then(|s| s.to_str())
        .unwrap_or("")
        .to_owned();
    let mut flags = Vec::new();
    for (key, value) in entries {
        match key.as_str() {
            "experiment" if value == sub => {}
            "experiment" => {
                return Err(config(format!(
                    "config names experiment {value:?} but the command is {sub:?}"
                )))
            }
            "config" => return Err(config("config files cannot include other config files")),
            _ => {
                flags.push(OsString::from(format!("--{key}")));
                flags.push(OsString::from(value));
            }
        }
    }
    let mut out = args;
    let at = out.len().min(2);
    out.splice(at..at, flags);
    Ok(out)
}
