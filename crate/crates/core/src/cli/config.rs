//! `key = value` run files. Keys are long flag names; `_` and `-` are
//! interchangeable and repeated keys accumulate for list-valued flags.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use super::CliError;

const KEYS: &[&str] = &[
    "expr",
    "module",
    "network",
    "output",
    "in",
    "log-system",
    "const-e",
    "relax-domain",
    "value",
    "init",
    "perturb-init",
    "t-end",
    "rel-tol",
    "abs-tol",
    "max-step",
    "samples",
    "oracle",
    "out",
    "meta",
    "csv",
    "gnuplot",
    "grid",
    "threshold",
    "format",
    "quick",
    "selector",
];

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunFile {
    entries: BTreeMap<String, Vec<String>>,
}

impl RunFile {
    pub fn load(path: &Path) -> Result<RunFile, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
        RunFile::parse(&text).map_err(|m| CliError::usage(format!("{}: {m}", path.display())))
    }

    pub fn parse(text: &str) -> Result<RunFile, String> {
        let mut entries: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| format!("line {}: expected `key = value`", i + 1))?;
            let key = k.trim().replace('_', "-");
            if !KEYS.contains(&key.as_str()) {
                return Err(format!("line {}: unknown key `{}`", i + 1, k.trim()));
            }
            entries.entry(key).or_default().push(v.trim().to_string());
        }
        Ok(RunFile { entries })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).and_then(|v| v.last()).map(String::as_str)
    }

    pub fn all(&self, key: &str) -> Vec<String> {
        self.entries.get(key).cloned().unwrap_or_default()
    }

    pub fn parsed<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        self.get(key)
            .map(|v| v.parse::<T>().map_err(|_| CliError::usage(format!("config key `{key}` has bad value `{v}`"))))
            .transpose()
    }

    pub fn flag(&self, key: &str) -> Result<bool, CliError> {
        match self.get(key) {
            None => Ok(false),
            Some("true" | "yes" | "1") => Ok(true),
            Some("false" | "no" | "0") => Ok(false),
            Some(v) => Err(CliError::usage(format!("config key `{key}` expects true or false, got `{v}`"))),
        }
    }
}

/// Fills a value the command line left unset.
pub fn fill<T: FromStr>(slot: &mut Option<T>, file: &RunFile, key: &str) -> Result<(), CliError> {
    if slot.is_none() {
        *slot = file.parsed(key)?;
    }
    Ok(())
}

/// List flags from the file apply only when none were given on the command
/// line.
pub fn fill_list(slot: &mut Vec<String>, file: &RunFile, key: &str) {
    if slot.is_empty() {
        *slot = file.all(key);
    }
}

pub fn fill_flag(slot: &mut bool, file: &RunFile, key: &str) -> Result<(), CliError> {
    *slot = *slot || file.flag(key)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_accumulates() {
        let f = RunFile::parse("# run\nt_end = 80\nin = a:real\nin = b:pos\noracle = true\n").unwrap();
        assert_eq!(f.get("t-end"), Some("80"));
        assert_eq!(f.all("in"), vec!["a:real", "b:pos"]);
        assert!(f.flag("oracle").unwrap());
        assert!(!f.flag("quick").unwrap());
    }

    #[test]
    fn command_line_wins() {
        let f = RunFile::parse("t-end = 80\nin = a:real\n").unwrap();
        let mut t = Some(10.0);
        fill(&mut t, &f, "t-end").unwrap();
        assert_eq!(t, Some(10.0));
        let mut none: Option<f64> = None;
        fill(&mut none, &f, "t-end").unwrap();
        assert_eq!(none, Some(80.0));
        let mut decls = vec!["a:nonneg".to_string()];
        fill_list(&mut decls, &f, "in");
        assert_eq!(decls, vec!["a:nonneg"]);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_lines() {
        assert!(RunFile::parse("tend = 3").is_err());
        assert!(RunFile::parse("t-end").is_err());
        assert!(RunFile::parse("t-end = x").unwrap().parsed::<f64>("t-end").is_err());
    }
}
