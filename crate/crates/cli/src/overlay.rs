//! `--config` files: flat `key=value` lines merged into the command line.
//!
//! File entries are spliced in front of the arguments given on the command
//! line, and every option keeps its last occurrence, so flags override the
//! file and the file overrides built-in defaults.

use std::ffi::OsString;
use std::fs;

use clap::{Arg, Command};

use crate::CliError;

const CONFIG_FLAG: &str = "--config";

/// Long flags of the top-level command that take a value.
fn valued_globals(cmd: &Command) -> Vec<String> {
    cmd.get_arguments()
        .filter(|a| a.get_action().takes_values())
        .filter_map(|a| a.get_long().map(|l| format!("--{l}")))
        .collect()
}

fn key_of(arg: &Arg) -> Option<String> {
    arg.get_long().map(|l| l.replace('-', "_"))
}

fn parse_file(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut kv = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("config line {}: expected key=value", i + 1)))?;
        kv.push((k.trim().replace('-', "_"), v.trim().to_string()));
    }
    Ok(kv)
}

/// Appends `--flag value` (or a bare `--flag` for switches set to true).
fn push_arg(out: &mut Vec<OsString>, arg: &Arg, value: &str) -> Result<(), CliError> {
    let long = format!("--{}", arg.get_long().unwrap_or_default());
    if arg.get_action().takes_values() {
        out.push(long.into());
        out.push(value.into());
        return Ok(());
    }
    match value {
        "true" => out.push(long.into()),
        "false" => {}
        other => return Err(CliError::Usage(format!("{long} expects true or false, got {other:?}"))),
    }
    Ok(())
}

/// Rewrites `args` with the entries of the `--config` file, if one is given.
/// Keys that belong to another subcommand are skipped; keys no subcommand
/// knows are an error.
pub fn expand(cmd: &Command, args: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let globals = valued_globals(cmd);
    let mut config = None;
    let mut sub_at = None;
    let mut i = 1;
    while i < args.len() {
        let a = args[i].to_string_lossy();
        if let Some(path) = a.strip_prefix("--config=") {
            config = Some(path.to_string());
        } else if a == CONFIG_FLAG {
            config = args.get(i + 1).map(|p| p.to_string_lossy().into_owned());
            i += 1;
        } else if globals.iter().any(|g| *g == a) {
            i += 1;
        } else if !a.starts_with('-') {
            sub_at = Some(i);
            break;
        }
        i += 1;
    }
    let (Some(path), Some(sub_at)) = (config, sub_at) else {
        return Ok(args);
    };
    let text = fs::read_to_string(&path).map_err(|e| CliError::Usage(format!("cannot read config {path}: {e}")))?;
    let name = args[sub_at].to_string_lossy();
    let Some(sub) = cmd.find_subcommand(name.as_ref()) else {
        return Ok(args);
    };

    let mut before = Vec::new();
    let mut after = Vec::new();
    for (key, value) in parse_file(&text)? {
        if let Some(arg) = sub.get_arguments().find(|a| key_of(a).as_deref() == Some(key.as_str())) {
            push_arg(&mut after, arg, &value)?;
        } else if let Some(arg) = cmd.get_arguments().find(|a| key_of(a).as_deref() == Some(key.as_str())) {
            if key != "config" {
                push_arg(&mut before, arg, &value)?;
            }
        } else if !cmd.get_subcommands().any(|s| s.get_arguments().any(|a| key_of(a).as_deref() == Some(key.as_str()))) {
            return Err(CliError::Usage(format!("config {path}: unknown key {key:?}")));
        }
    }
    let mut out = Vec::with_capacity(args.len() + before.len() + after.len());
    out.push(args[0].clone());
    out.extend(before);
    out.extend(args[1..=sub_at].iter().cloned());
    out.extend(after);
    out.extend(args[sub_at + 1..].iter().cloned());
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::ArgAction;

    fn cmd() -> Command {
        Command::new("t")
            .arg(Arg::new("threads").long("threads"))
            .arg(Arg::new("config").long("config"))
            .subcommand(
                Command::new("go")
                    .arg(Arg::new("k_avg").long("k-avg"))
                    .arg(Arg::new("fast").long("fast").action(ArgAction::SetTrue)),
            )
            .subcommand(Command::new("other").arg(Arg::new("epochs").long("epochs")))
    }

    fn strings(v: &[OsString]) -> Vec<String> {
        v.iter().map(|s| s.to_string_lossy().into_owned()).collect()
    }

    #[test]
    fn file_entries_precede_flags() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.txt");
        fs::write(&path, "# comment\nk-avg = 3\nfast=true\nthreads=2\nepochs=4\n").unwrap();
        let args: Vec<OsString> =
            ["t", "--config", path.to_str().unwrap(), "go", "--k-avg", "5"].iter().map(Into::into).collect();
        let out = strings(&expand(&cmd(), args).unwrap());
        let p = path.to_str().unwrap();
        assert_eq!(out, ["t", "--threads", "2", "--config", p, "go", "--k-avg", "3", "--fast", "--k-avg", "5"]);
    }

    #[test]
    fn unknown_keys_and_bad_lines_are_usage_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.txt");
        for body in ["bogus=1\n", "no equals sign\n", "fast=maybe\n"] {
            fs::write(&path, body).unwrap();
            let args: Vec<OsString> = ["t", "--config", path.to_str().unwrap(), "go"].iter().map(Into::into).collect();
            assert!(matches!(expand(&cmd(), args), Err(CliError::Usage(_))), "{body}");
        }
    }

    #[test]
    fn without_config_args_pass_through() {
        let args: Vec<OsString> = ["t", "--threads", "1", "go"].iter().map(Into::into).collect();
        assert_eq!(expand(&cmd(), args.clone()).unwrap(), args);
    }
}
