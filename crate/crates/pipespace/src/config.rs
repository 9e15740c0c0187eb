//! Flat INI run configuration. Keys outside any section (or in `[run]`)
//! configure analysis commands; `[synth]` and `[contrast NAME]` sections
//! configure the generator. Command-line flags always win over file keys.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use ini::Ini;

use crate::error::{Error, Result};

/// Key-value pairs of one INI section.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct KeyValues {
    values: BTreeMap<String, String>,
}

impl KeyValues {
    pub fn get_str(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        self.get_str(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|e| Error::Config(format!("key {key} = {v:?}: {e}")))
            })
            .transpose()
    }

    pub fn set(&mut self, key: &str, value: &str) {
        self.values.insert(key.to_string(), value.to_string());
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.values.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.values.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    /// Fails on keys outside `allowed`.
    pub fn check_keys(&self, allowed: &[&str], section: &str) -> Result<()> {
        match self.keys().find(|k| !allowed.contains(k)) {
            Some(k) => Err(Error::Config(format!("unknown key {k:?} in {section}"))),
            None => Ok(()),
        }
    }
}

/// Parsed configuration file, sections in file order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConfigFile {
    pub run: KeyValues,
    pub sections: Vec<(String, KeyValues)>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let ini = Ini::load_from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let mut out = ConfigFile::default();
        for (name, props) in ini.iter() {
            let mut kv = KeyValues::default();
            for (k, v) in props.iter() {
                kv.set(k, v);
            }
            match name {
                None | Some("run") => {
                    for (k, v) in kv.iter() {
                        out.run.set(k, v);
                    }
                }
                Some(name) => {
                    if out.sections.iter().any(|(n, _)| n == name) {
                        return Err(Error::Config(format!("duplicate section [{name}]")));
                    }
                    out.sections.push((name.to_string(), kv));
                }
            }
        }
        Ok(out)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text).map_err(|e| e.context(path.display().to_string()))
    }

    pub fn section(&self, name: &str) -> Option<&KeyValues> {
        self.sections.iter().find(|(n, _)| n == name).map(|(_, kv)| kv)
    }
}

/// Splits `a,b,c` (or whitespace-separated) lists.
pub fn parse_list<T: FromStr>(s: &str, what: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    s.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<T>().map_err(|e| Error::Config(format!("{what}: {t:?}: {e}"))))
        .collect()
}
