//! `--config FILE`: `key=value` lines spliced in as flags right after the
//! subcommand, so that flags on the real command line, which come later,
//! override them.

use std::ffi::OsString;

pub fn parse_lines(text: &str) -> Result<Vec<OsString>, String> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| format!("config line {}: expected key=value", n + 1))?;
        let key = k.trim().replace('_', "-");
        let v = v.trim();
        match v {
            "true" => out.push(format!("--{key}").into()),
            "false" => {}
            _ => {
                out.push(format!("--{key}").into());
                out.push(v.into());
            }
        }
    }
    Ok(out)
}

/// Removes `--config FILE` from `argv` and inserts the file's flags after
/// the subcommand name.
pub fn expand(argv: Vec<OsString>) -> Result<Vec<OsString>, String> {
    let mut rest = Vec::with_capacity(argv.len());
    let mut path = None;
    let mut it = argv.into_iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy().into_owned();
        if s == "--config" {
            path = Some(it.next().ok_or("--config needs a file")?);
        } else if let Some(p) = s.strip_prefix("--config=") {
            path = Some(p.into());
        } else {
            rest.push(a);
        }
    }
    let Some(path) = path else { return Ok(rest) };
    let text = std::fs::read_to_string(&path)
        .map_err(|e| format!("cannot read config file {}: {e}", path.to_string_lossy()))?;
    let extra = parse_lines(&text)?;
    // first argument that is not a flag or a flag value names the subcommand
    let mut at = None;
    let mut i = 1;
    while i < rest.len() {
        let s = rest[i].to_string_lossy();
        if s == "--workers" {
            i += 2;
            continue;
        }
        if !s.starts_with('-') {
            at = Some(i + 1);
            break;
        }
        i += 1;
    }
    let at = at.ok_or("--config needs a subcommand")?;
    rest.splice(at..at, extra);
    Ok(rest)
}
