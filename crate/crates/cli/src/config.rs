//! `key = value` config files, spliced into the argument list so flags
//! given on the command line win.

use std::ffi::OsString;
use std::path::Path;

use crate::error::CliError;

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(CliError::Config(format!("line {}: expected `key = value`, got `{line}`", i + 1)));
        };
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() || k.starts_with('-') {
            return Err(CliError::Config(format!("line {}: bad key `{k}`", i + 1)));
        }
        if k == "config" {
            return Err(CliError::Config(format!("line {}: config files cannot include others", i + 1)));
        }
        out.push((k.replace('_', "-"), v.to_string()));
    }
    Ok(out)
}

fn to_flags(entries: &[(String, String)]) -> Vec<OsString> {
    let mut flags = Vec::new();
    for (k, v) in entries {
        match v.as_str() {
            "true" => flags.push(format!("--{k}").into()),
            "false" => {}
            _ => {
                flags.push(format!("--{k}").into());
                flags.push(v.into());
            }
        }
    }
    flags
}

fn config_path(args: &[OsString]) -> Option<OsString> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return it.next().cloned();
        }
        if let Some(p) = s.strip_prefix("--config=") {
            return Some(p.into());
        }
    }
    None
}

/// Inserts config-file flags right after the subcommand path, ahead of
/// every command-line flag.
pub fn splice(args: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let text = std::fs::read_to_string(Path::new(&path))
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", Path::new(&path).display())))?;
    let flags = to_flags(&parse(&text)?);
    let mut at = 1;
    if let Some(first) = args.get(1).map(|a| a.to_string_lossy().into_owned()) {
        if !first.starts_with('-') {
            at = 2;
            if first == "verify" && args.get(2).is_some_and(|a| !a.to_string_lossy().starts_with('-')) {
                at = 3;
            }
        }
    }
    let mut out = args[..at.min(args.len())].to_vec();
    out.extend(flags);
    out.extend_from_slice(&args[at.min(args.len())..]);
    Ok(out)
}
