//! `key = value` config files. Keys name long flags of the chosen
//! subcommand (`out`, `scenes`, ...) or, for `solve`, `ablate` and `augment`,
//! solver or augmentation parameters. File values are spliced in right after
//! the subcommand so flags given on the command line override them.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::Path;

use clap::CommandFactory;
use lightrig_core::augment::AugmentConfig;
use lightrig_core::SolverConfig;

use crate::args::Cli;
use crate::CliError;

/// One `key = value` line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    pub line: usize,
    pub key: String,
    pub value: String,
}

/// Parses config text. Blank lines and lines starting with `#` are skipped;
/// keys may not repeat.
pub fn parse_config(text: &str) -> Result<Vec<Entry>, String> {
    let mut entries: Vec<Entry> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let Some((key, value)) = trimmed.split_once('=') else {
            return Err(format!("line {line}: expected key = value"));
        };
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() {
            return Err(format!("line {line}: empty key"));
        }
        if let Some(prev) = entries.iter().find(|e| e.key == key) {
            return Err(format!("line {line}: duplicate key {key:?} (first set on line {})", prev.line));
        }
        entries.push(Entry {
            line,
            key: key.to_string(),
            value: value.to_string(),
        });
    }
    Ok(entries)
}

/// Which parameter family `--set` feeds for a subcommand.
fn parameter_family(subcommand: &str) -> Option<&'static str> {
    match subcommand {
        "solve" | "ablate" => Some("solver"),
        "augment" => Some("augment"),
        _ => None,
    }
}

fn check_parameter(family: &str, key: &str, value: &str) -> Result<(), String> {
    let kv: BTreeMap<String, String> = [(key.to_string(), value.to_string())].into_iter().collect();
    let result = match family {
        "solver" => SolverConfig::default().apply_overrides(&kv),
        _ => AugmentConfig::default().apply_overrides(&kv),
    };
    result.map_err(|e| e.to_string())
}

/// Position of the subcommand in `args` (index 0 is the program name),
/// skipping global options and their values.
fn subcommand_index(args: &[OsString]) -> Option<usize> {
    let mut i = 1;
    while i < args.len() {
        let a = args[i].to_string_lossy();
        if a == "--threads" || a == "--config" {
            i += 2;
        } else if a.starts_with("--threads=") || a.starts_with("--config=") || a.starts_with('-') {
            i += 1;
        } else {
            return Some(i);
        }
    }
    None
}

fn config_path(args: &[OsString]) -> Result<Option<OsString>, CliError> {
    let mut found = None;
    let mut i = 1;
    while i < args.len() {
        let a = args[i].to_string_lossy();
        if a == "--config" {
            let v = args
                .get(i + 1)
                .ok_or_else(|| CliError::usage("--config needs a file argument"))?;
            found = Some(v.clone());
            i += 2;
        } else if let Some(v) = a.strip_prefix("--config=") {
            found = Some(OsString::from(v));
            i += 1;
        } else {
            i += 1;
        }
    }
    Ok(found)
}

/// Splices the `--config` file into `args` as flags placed after the
/// subcommand (or before it, for the global `threads`).
pub fn expand_args(args: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let Some(path) = config_path(&args)? else {
        return Ok(args);
    };
    let path = Path::new(&path);
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
    let entries = parse_config(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
    let Some(sub_at) = subcommand_index(&args) else {
        return Ok(args);
    };
    let sub = args[sub_at].to_string_lossy().to_string();
    let command = Cli::command();
    let Some(sub_cmd) = command.find_subcommand(&sub) else {
        // Let clap report the unknown subcommand.
        return Ok(args);
    };
    let flags: Vec<String> = sub_cmd
        .get_arguments()
        .filter_map(|a| a.get_long().map(str::to_string))
        .filter(|l| l != "set")
        .collect();

    let mut global = Vec::new();
    let mut local = Vec::new();
    for e in &entries {
        let flag = e.key.replace('_', "-");
        if flag == "config" {
            return Err(CliError::usage(format!("{}: line {}: config files cannot nest", path.display(), e.line)));
        }
        if flag == "threads" {
            global.push(OsString::from(format!("--threads={}", e.value)));
        } else if flags.contains(&flag) {
            local.push(OsString::from(format!("--{flag}={}", e.value)));
        } else if let Some(family) = parameter_family(&sub) {
            check_parameter(family, &e.key, &e.value)
                .map_err(|m| CliError::usage(format!("{}: line {}: {m}", path.display(), e.line)))?;
            local.push(OsString::from(format!("--set={}={}", e.key, e.value)));
        } else {
            return Err(CliError::usage(format!(
                "{}: line {}: unknown key {:?} for `{sub}`",
                path.display(),
                e.line,
                e.key
            )));
        }
    }
    let mut out: Vec<OsString> = Vec::with_capacity(args.len() + global.len() + local.len());
    out.push(args[0].clone());
    out.extend(global);
    out.extend(args[1..=sub_at].iter().cloned());
    out.extend(local);
    out.extend(args[sub_at + 1..].iter().cloned());
    Ok(out)
}

/// Folds `KEY=VALUE` strings into a map; later entries win.
pub fn parse_sets(sets: &[String]) -> Result<BTreeMap<String, String>, CliError> {
    let mut map = BTreeMap::new();
    for s in sets {
        let (k, v) = s
            .split_once('=')
            .ok_or_else(|| CliError::usage(format!("--set expects KEY=VALUE, got {s:?}")))?;
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(map)
}
