//! Flat `key = value` files split into `[section]` blocks. Keys before the
//! first header belong to `[common]`. `#` and `;` start comments.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

use crate::error::{CliError, CliResult};

pub const COMMON: &str = "common";

/// Keys accepted in `[common]` by every subcommand.
pub const GLOBAL_KEYS: &[&str] = &["seed", "draws", "reps", "workers", "alpha", "tail", "out", "format"];

/// Lower-case with `-` folded to `_`, so `cos-sq` and `cos_sq` agree.
pub fn normalize(key: &str) -> String {
    key.trim().to_ascii_lowercase().replace('-', "_")
}

#[derive(Clone, Debug, Default)]
pub struct ConfigFile {
    origin: String,
    sections: BTreeMap<String, BTreeMap<String, String>>,
}

impl ConfigFile {
    pub fn empty() -> Self {
        Self {
            origin: "<none>".into(),
            sections: BTreeMap::new(),
        }
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("config: cannot read '{}': {e}", path.display())))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn parse(text: &str, origin: &str) -> CliResult<Self> {
        let mut sections: BTreeMap<String, BTreeMap<String, String>> = BTreeMap::new();
        let mut section = COMMON.to_string();
        for (i, raw) in text.lines().enumerate() {
            let at = |msg: &str| CliError::Validation(format!("config {origin}:{}: {msg}", i + 1));
            let line = raw.split(['#', ';']).next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest.strip_suffix(']').ok_or_else(|| at("unterminated section header"))?;
                let name = normalize(name);
                if name.is_empty() {
                    return Err(at("empty section name"));
                }
                section = name;
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| at("expected 'key = value'"))?;
            let key = normalize(k);
            if key.is_empty() {
                return Err(at("empty key"));
            }
            let entries = sections.entry(section.clone()).or_default();
            if entries.insert(key.clone(), v.trim().to_string()).is_some() {
                return Err(at(&format!("duplicate key '{key}' in [{section}]")));
            }
        }
        Ok(Self {
            origin: origin.to_string(),
            sections,
        })
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.sections.get(section)?.get(key).map(String::as_str)
    }

    fn keys(&self, section: &str) -> impl Iterator<Item = &String> {
        self.sections.get(section).into_iter().flat_map(|m| m.keys())
    }
}

/// Resolves each field as flag, then `[section]`, then `[common]`, and
/// records which keys were consulted so leftovers can be reported.
pub struct Resolver<'a> {
    file: &'a ConfigFile,
    section: String,
    known: RefCell<BTreeSet<String>>,
}

impl<'a> Resolver<'a> {
    pub fn new(file: &'a ConfigFile, section: &str) -> Self {
        Self {
            file,
            section: normalize(section),
            known: RefCell::new(BTreeSet::new()),
        }
    }

    pub fn get<T>(&self, flag: Option<T>, key: &str) -> CliResult<Option<T>>
    where
        T: FromStr,
        T::Err: Display,
    {
        self.known.borrow_mut().insert(key.to_string());
        if flag.is_some() {
            return Ok(flag);
        }
        for sec in [self.section.as_str(), COMMON] {
            if let Some(v) = self.file.get(sec, key) {
                return v.parse::<T>().map(Some).map_err(|e| {
                    CliError::Validation(format!("{key}: invalid value '{v}' in [{sec}] of {}: {e}", self.file.origin))
                });
            }
        }
        Ok(None)
    }

    pub fn or<T>(&self, flag: Option<T>, key: &str, default: T) -> CliResult<T>
    where
        T: FromStr,
        T::Err: Display,
    {
        Ok(self.get(flag, key)?.unwrap_or(default))
    }

    pub fn required<T>(&self, flag: Option<T>, key: &str) -> CliResult<T>
    where
        T: FromStr,
        T::Err: Display,
    {
        self.get(flag, key)?.ok_or_else(|| {
            CliError::Validation(format!(
                "{key}: missing; pass --{} or set it under [{}]",
                key.replace('_', "-"),
                self.section
            ))
        })
    }

    /// Reject keys in this command's section, or in `[common]`, that no
    /// field consumed.
    pub fn finish(&self) -> CliResult<()> {
        let known = self.known.borrow();
        for key in self.file.keys(&self.section) {
            if !known.contains(key) {
                return Err(CliError::Validation(format!(
                    "{key}: unknown key in [{}] of {}",
                    self.section, self.file.origin
                )));
            }
        }
        for key in self.file.keys(COMMON) {
            if !known.contains(key) && !GLOBAL_KEYS.contains(&key.as_str()) {
                return Err(CliError::Validation(format!("{key}: unknown key in [common] of {}", self.file.origin)));
            }
        }
        Ok(())
    }
}

/// Parse a real number, also accepting a ratio such as `1/3`.
pub fn parse_real(s: &str) -> Result<f64, String> {
    let s = s.trim();
    let v = match s.split_once('/') {
        Some((a, b)) => {
            let a: f64 = a.trim().parse().map_err(|_| format!("'{s}' is not a number"))?;
            let b: f64 = b.trim().parse().map_err(|_| format!("'{s}' is not a number"))?;
            a / b
        }
        None => s.parse().map_err(|_| format!("'{s}' is not a number"))?,
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("'{s}' is not finite"))
    }
}

fn split_list(s: &str) -> impl Iterator<Item = &str> {
    s.split([',', ' ', '\t']).filter(|t| !t.is_empty())
}

/// Comma or space separated reals.
#[derive(Clone, Debug, PartialEq)]
pub struct Reals(pub Vec<f64>);

impl FromStr for Reals {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let v = split_list(s).map(parse_real).collect::<Result<Vec<_>, _>>()?;
        if v.is_empty() {
            return Err("empty list".into());
        }
        Ok(Reals(v))
    }
}

/// Comma or space separated non-negative integers.
#[derive(Clone, Debug, PartialEq)]
pub struct Counts(pub Vec<u64>);

impl FromStr for Counts {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let v = split_list(s)
            .map(|t| t.parse::<u64>().map_err(|_| format!("'{t}' is not a non-negative integer")))
            .collect::<Result<Vec<_>, _>>()?;
        if v.is_empty() {
            return Err("empty list".into());
        }
        Ok(Counts(v))
    }
}

/// A real that also accepts ratios.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Real(pub f64);

impl FromStr for Real {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        parse_real(s).map(Real)
    }
}

/// `true/false`, `yes/no`, `on/off`, `1/0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Switch(pub bool);

impl FromStr for Switch {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "true" | "yes" | "on" | "1" => Ok(Switch(true)),
            "false" | "no" | "off" | "0" => Ok(Switch(false)),
            other => Err(format!("'{other}' is not a boolean")),
        }
    }
}
