//! `key=value` config files. Keys are long flag names without the dashes;
//! their values are spliced into the argument list right after the
//! subcommand, so anything given on the command line overrides them.

use std::fs;

use anyhow::{bail, Context, Result};
use clap::CommandFactory;

use crate::Cli;

/// Removes `--config FILE` from `args` and returns its entries.
fn take_config_path(args: &mut Vec<String>) -> Result<Option<String>> {
    let mut path = None;
    let mut i = 0;
    while i < args.len() {
        if args[i] == "--config" {
            if i + 1 >= args.len() {
                bail!("--config needs a file name");
            }
            path = Some(args.remove(i + 1));
            args.remove(i);
        } else if let Some(p) = args[i].strip_prefix("--config=") {
            path = Some(p.to_string());
            args.remove(i);
        } else {
            i += 1;
        }
    }
    Ok(path)
}

pub fn parse_entries(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .with_context(|| format!("config line {}: expected key=value", n + 1))?;
        out.push((k.trim().trim_start_matches("--").to_string(), v.trim().to_string()));
    }
    Ok(out)
}

/// Expands `--config FILE` into explicit flags for the chosen subcommand.
pub fn expand_args(mut args: Vec<String>) -> Result<Vec<String>> {
    let Some(path) = take_config_path(&mut args)? else {
        return Ok(args);
    };
    let text = fs::read_to_string(&path).with_context(|| format!("cannot read config {path}"))?;
    let entries = parse_entries(&text)?;

    let cmd = Cli::command();
    let Some((pos, sub)) = args
        .iter()
        .enumerate()
        .skip(1)
        .find_map(|(i, a)| cmd.find_subcommand(a).map(|s| (i, s)))
    else {
        return Ok(args);
    };
    let known_anywhere = |key: &str| {
        cmd.get_subcommands()
            .flat_map(|s| s.get_arguments())
            .any(|a| a.get_long() == Some(key))
    };

    let mut injected = Vec::new();
    for (key, value) in entries {
        let Some(arg) = sub.get_arguments().find(|a| a.get_long() == Some(key.as_str())) else {
            if !known_anywhere(&key) {
                bail!("config {path}: unknown key {key:?}");
            }
            continue;
        };
        if arg.get_action().takes_values() {
            injected.push(format!("--{key}"));
            injected.push(value);
        } else {
            match value.to_lowercase().as_str() {
                "true" | "yes" | "1" | "on" => injected.push(format!("--{key}")),
                "false" | "no" | "0" | "off" => {}
                other => bail!("config {path}: {key} expects true or false, found {other:?}"),
            }
        }
    }
    args.splice(pos + 1..pos + 1, injected);
    Ok(args)
}
