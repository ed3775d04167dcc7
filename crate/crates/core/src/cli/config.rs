//! `key = value` configuration files with `[section]` headers.
//!
//! Blank lines and lines starting with `#` or `;` are ignored. Unknown
//! sections or keys and repeated keys are errors, reported with the line
//! they occur on.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::data::SrfBank;
use crate::error::{Error, Result};
use crate::eval::CvGrid;
use crate::pipeline::{GraphParams, SolverConfig, Variant};
use crate::solvers::AdmmSchedule;

const SCHEDULE_KEYS: &[&str] = &["mu0", "rho", "mu_max", "eps", "max_iter"];

const SECTIONS: &[(&str, &[&str])] = &[
    ("data", &["xh", "xm", "labels", "xu", "landmarks", "normalize"]),
    (
        "model",
        &[
            "variant", "alpha", "beta", "gamma", "d", "s_scale", "cap", "zeta", "max_outer", "seed",
            "knn_k", "knn_sigma",
        ],
    ),
    ("theta_admm", SCHEDULE_KEYS),
    ("w_admm", SCHEDULE_KEYS),
    ("output", &["model", "trace", "dir", "scores"]),
    (
        "simulate",
        &[
            "classes", "n_per_class", "n_unlabeled_per_class", "d_h", "bands", "band_widths", "sep", "noise",
        ],
    ),
    ("grid", &["alphas", "betas", "dims", "folds"]),
];

#[derive(Debug, Clone)]
struct Entry {
    value: String,
    line: usize,
}

/// A parsed but not yet interpreted config file.
#[derive(Debug, Clone)]
pub struct ConfigFile {
    path: PathBuf,
    entries: BTreeMap<(String, String), Entry>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut entries = BTreeMap::new();
        let mut section: Option<(&str, &[&str])> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let lineno = idx + 1;
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| Error::parse(path, lineno, "unterminated section header"))?
                    .trim();
                section = Some(
                    *SECTIONS
                        .iter()
                        .find(|(s, _)| *s == name)
                        .ok_or_else(|| Error::parse(path, lineno, format!("unknown section [{name}]")))?,
                );
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(path, lineno, "expected 'key = value'"))?;
            let (key, value) = (key.trim(), value.trim());
            let (name, keys) =
                section.ok_or_else(|| Error::parse(path, lineno, "key outside of any section"))?;
            if !keys.contains(&key) {
                return Err(Error::parse(path, lineno, format!("unknown key '{key}' in [{name}]")));
            }
            let entry = Entry { value: value.to_string(), line: lineno };
            if entries.insert((name.to_string(), key.to_string()), entry).is_some() {
                return Err(Error::parse(path, lineno, format!("duplicate key '{key}' in [{name}]")));
            }
        }
        Ok(Self { path: path.to_path_buf(), entries })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    fn entry(&self, section: &str, key: &str) -> Option<&Entry> {
        self.entries.get(&(section.to_string(), key.to_string()))
    }

    pub fn has_section(&self, section: &str) -> bool {
        self.entries.keys().any(|(s, _)| s == section)
    }

    /// Parses one value, naming the key and line on failure.
    pub fn get<V: FromStr>(&self, section: &str, key: &str) -> Result<Option<V>> {
        match self.entry(section, key) {
            None => Ok(None),
            Some(e) => e.value.parse().map(Some).map_err(|_| {
                Error::parse(&self.path, e.line, format!("invalid value '{}' for {key}", e.value))
            }),
        }
    }

    pub fn require<V: FromStr>(&self, section: &str, key: &str) -> Result<V> {
        self.get(section, key)?.ok_or_else(|| {
            Error::InvalidArgument(format!("{}: missing [{section}] {key}", self.path.display()))
        })
    }

    /// Comma-separated list.
    pub fn list<V: FromStr>(&self, section: &str, key: &str) -> Result<Option<Vec<V>>> {
        let Some(e) = self.entry(section, key) else {
            return Ok(None);
        };
        e.value
            .split(',')
            .map(|v| {
                v.trim().parse().map_err(|_| {
                    Error::parse(&self.path, e.line, format!("invalid list item '{}' for {key}", v.trim()))
                })
            })
            .collect::<Result<Vec<V>>>()
            .map(Some)
    }

    /// Paths resolve against the directory holding the config file.
    pub fn path_value(&self, section: &str, key: &str) -> Result<Option<PathBuf>> {
        Ok(self.get::<String>(section, key)?.map(|p| {
            let p = PathBuf::from(p);
            if p.is_absolute() {
                p
            } else {
                self.path.parent().unwrap_or(Path::new("")).join(p)
            }
        }))
    }

    fn line_of(&self, section: &str, key: &str) -> usize {
        self.entry(section, key).map_or(0, |e| e.line)
    }

    fn schedule(&self, section: &str, default: AdmmSchedule<f64>) -> Result<AdmmSchedule<f64>> {
        let s = AdmmSchedule {
            mu0: self.get(section, "mu0")?.unwrap_or(default.mu0),
            rho: self.get(section, "rho")?.unwrap_or(default.rho),
            mu_max: self.get(section, "mu_max")?.unwrap_or(default.mu_max),
            eps: self.get(section, "eps")?.unwrap_or(default.eps),
            max_iter: self.get(section, "max_iter")?.unwrap_or(default.max_iter),
        };
        s.validate()
            .map_err(|e| Error::parse(&self.path, self.line_of(section, "mu0"), format!("[{section}] {e}")))?;
        Ok(s)
    }

    /// `[model]`, `[theta_admm]` and `[w_admm]` over the library defaults.
    pub fn solver(&self) -> Result<SolverConfig<f64>> {
        let d = SolverConfig::<f64>::default();
        Ok(SolverConfig {
            alpha: self.get("model", "alpha")?.unwrap_or(d.alpha),
            beta: self.get("model", "beta")?.unwrap_or(d.beta),
            gamma: self.get("model", "gamma")?.or(d.gamma),
            d: self.get("model", "d")?.unwrap_or(d.d),
            s_scale: self.get("model", "s_scale")?.unwrap_or(d.s_scale),
            cap: self.get("model", "cap")?.or(d.cap),
            zeta: self.get("model", "zeta")?.unwrap_or(d.zeta),
            max_outer: self.get("model", "max_outer")?.unwrap_or(d.max_outer),
            theta_schedule: self.schedule("theta_admm", d.theta_schedule)?,
            w_schedule: self.schedule("w_admm", d.w_schedule)?,
            seed: self.get("model", "seed")?.unwrap_or(d.seed),
        })
    }

    pub fn variant(&self) -> Result<Variant> {
        Ok(self.get("model", "variant")?.unwrap_or(Variant::Lema))
    }

    pub fn graph(&self) -> Result<GraphParams<f64>> {
        let d = GraphParams::<f64>::default();
        Ok(GraphParams {
            k: self.get("model", "knn_k")?.unwrap_or(d.k),
            sigma: self.get("model", "knn_sigma")?.unwrap_or(d.sigma),
        })
    }

    pub fn grid(&self) -> Result<CvGrid<f64>> {
        let d = CvGrid::<f64>::default();
        let g = CvGrid {
            alphas: self.list("grid", "alphas")?.unwrap_or(d.alphas),
            betas: self.list("grid", "betas")?.unwrap_or(d.betas),
            dims: self.list("grid", "dims")?.unwrap_or(d.dims),
            folds: self.get("grid", "folds")?.unwrap_or(d.folds),
        };
        g.validate()
            .map_err(|e| Error::parse(&self.path, self.line_of("grid", "folds"), e.to_string()))?;
        Ok(g)
    }

    pub fn simulation(&self) -> Result<SimulationConfig> {
        let d_h: usize = self.get("simulate", "d_h")?.unwrap_or(30);
        let srf = match self.list::<usize>("simulate", "band_widths")? {
            Some(widths) => {
                let mut bands = Vec::with_capacity(widths.len());
                let mut lo = 1;
                for w in widths {
                    if w == 0 {
                        return Err(Error::parse(&self.path, self.line_of("simulate", "band_widths"), "zero band width"));
                    }
                    bands.push((lo, lo + w - 1));
                    lo += w;
                }
                SrfBank { bands, weights: None }
            }
            None => SrfBank::uniform(d_h, self.get("simulate", "bands")?.unwrap_or(5))?,
        };
        srf.validate(d_h)
            .map_err(|e| Error::parse(&self.path, self.line_of("simulate", "band_widths"), e.to_string()))?;
        Ok(SimulationConfig {
            classes: self.get("simulate", "classes")?.unwrap_or(3),
            n_per_class: self.get("simulate", "n_per_class")?.unwrap_or(50),
            n_unlabeled_per_class: self.get("simulate", "n_unlabeled_per_class")?.unwrap_or(50),
            d_h,
            srf,
            sep: self.get("simulate", "sep")?.unwrap_or(4.0),
            noise: self.get("simulate", "noise")?.unwrap_or(0.05),
        })
    }
}

#[derive(Debug, Clone)]
pub struct SimulationConfig {
    pub classes: usize,
    pub n_per_class: usize,
    pub n_unlabeled_per_class: usize,
    pub d_h: usize,
    pub srf: SrfBank,
    pub sep: f64,
    pub noise: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ConfigFile> {
        ConfigFile::parse(text, Path::new("/cfg/run.ini"))
    }

    #[test]
    fn values_and_defaults() {
        let c = parse("# run\n[model]\nalpha = 0.5\nvariant = cospace\n[w_admm]\nmax_iter=10\n[data]\nxh = a.csv\n")
            .unwrap();
        let s = c.solver().unwrap();
        assert_eq!(s.alpha, 0.5);
        assert_eq!(s.beta, SolverConfig::<f64>::default().beta);
        assert_eq!(s.w_schedule.max_iter, 10);
        assert_eq!(c.variant().unwrap(), Variant::CoSpace);
        assert_eq!(c.path_value("data", "xh").unwrap().unwrap(), PathBuf::from("/cfg/a.csv"));
    }

    #[test]
    fn errors_carry_line_numbers() {
        let msg = |t: &str| parse(t).and_then(|c| c.solver().map(|_| ())).unwrap_err().to_string();
        assert!(msg("[model]\n\nalpha = x\n").contains(":3:"));
        assert!(msg("[nope]\n").contains(":1: unknown section"));
        assert!(msg("[model]\nalpah = 1\n").contains("unknown key"));
        assert!(msg("[model]\nd = 1\nd = 2\n").contains(":3: duplicate"));
        assert!(msg("alpha = 1\n").contains("outside"));
    }

    #[test]
    fn lists_and_widths() {
        let c = parse("[grid]\nalphas = 0.1, 1\ndims = 5\nfolds = 3\n[simulate]\nd_h = 6\nband_widths = 1,2,3\n").unwrap();
        let g = c.grid().unwrap();
        assert_eq!(g.alphas, vec![0.1, 1.0]);
        assert_eq!(g.dims, vec![5]);
        assert_eq!(c.simulation().unwrap().srf.bands, vec![(1, 1), (2, 3), (4, 6)]);
        assert!(parse("[simulate]\nd_h = 5\nband_widths = 1,2,3\n").unwrap().simulation().is_err());
    }
}
