//! `key = value` run files, spliced into the argument list ahead of the
//! command-line flags so that flags win.

use std::ffi::OsString;
use std::path::Path;

use clap::Command;

#[derive(Debug)]
pub enum ConfigFileError {
    Io(String),
    Syntax(String),
    UnknownKey(String),
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config_text(text: &str) -> Result<Vec<(String, String)>, ConfigFileError> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(ConfigFileError::Syntax(format!("line {}: expected `key = value`, got `{line}`", n + 1)));
        };
        let key = k.trim().replace('_', "-");
        if key.is_empty() {
            return Err(ConfigFileError::Syntax(format!("line {}: empty key", n + 1)));
        }
        out.push((key, v.trim().to_string()));
    }
    Ok(out)
}

/// Removes `--config PATH` and splices its pairs in right after the
/// subcommand name.
pub fn expand_config(args: Vec<OsString>, root: &Command) -> Result<Vec<OsString>, ConfigFileError> {
    let mut path = None;
    let mut rest = Vec::with_capacity(args.len());
    let mut it = args.into_iter();
    while let Some(a) = it.next() {
        match a.to_str() {
            Some("--config") => path = it.next(),
            Some(s) if s.starts_with("--config=") => path = Some(OsString::from(&s["--config=".len()..])),
            _ => rest.push(a),
        }
    }
    let Some(path) = path else { return Ok(rest) };
    let text = std::fs::read_to_string(Path::new(&path))
        .map_err(|e| ConfigFileError::Io(format!("cannot read config `{}`: {e}", Path::new(&path).display())))?;
    let pairs = parse_config_text(&text)?;

    let Some(pos) = rest.iter().position(|a| a.to_str().is_some_and(|s| root.find_subcommand(s).is_some())) else {
        return Ok(rest);
    };
    let sub = root.find_subcommand(rest[pos].to_str().unwrap()).unwrap();
    let mut spliced = Vec::with_capacity(2 * pairs.len());
    for (key, value) in pairs {
        let known = sub.get_arguments().any(|a| a.get_long() == Some(key.as_str()));
        if !known || key == "help" {
            return Err(ConfigFileError::UnknownKey(format!(
                "unknown key `{key}` for `{}`",
                sub.get_name()
            )));
        }
        spliced.push(OsString::from(format!("--{key}")));
        spliced.push(OsString::from(value));
    }
    rest.splice(pos + 1..pos + 1, spliced);
    Ok(rest)
}
