//! Registry, configuration and batch runner behind the `levelcheck` binary.
//!
//! A run is a list of named checks, each with a parameter grid; every point
//! of every grid becomes one independent task producing one or more
//! [`CheckReport`]s, and the reports are collected in configuration order.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use levelcheck::appendix::{appendix_reports, index_check, literal_inert_family_check, Case};
use levelcheck::divisor::{
    distribution_check, duality_pairing_check, f_m_annihilation_check, n_m_grid_check, n_m_unit_check,
    trace_invariance_check,
};
use levelcheck::enumeration::{exact_order_bijection_check, oracle_g1, remark_pattern_equivalence};
use levelcheck::gsp6::{gsp6_stabilizer_check, Method};
use levelcheck::order::OrderOptions;
use levelcheck::report::CheckReport;
use levelcheck::ring::default_minpoly;
use levelcheck::unitary::{hermitian_decomposition_check, of_point_structure_check, serre_tensor_check, split_iso_check};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Every registered check with a one-line description.
pub const REGISTRY: [(&str, &str); 15] = [
    ("appendix-split", "closed immersion, both transversals and degree equality over the pair ring"),
    ("appendix-inert", "closed immersion, both transversals and degree equality over an inert ring"),
    ("index-p10", "index of V' in V_{p^n,p^m} by order counting"),
    ("remark-pattern", "recursive definition of V_{p^n,p^m} against its resolved pattern"),
    ("exact-order", "points of exact order p^m against U_1(p^m)-cosets"),
    ("divisor-distribution", "distribution relation for D_c in both argument orders"),
    ("trace-invariance", "D_c fixed by multiplication by units"),
    ("duality-pairing", "degree pairing against the constant vectors"),
    ("fm-annihilation", "F_m on exterior powers and its scalar on the fixed line"),
    ("nm-unit", "p-adic valuation of N_m and the primitive-root criterion"),
    ("split-iso", "GU(2,2) over the pair ring against GL_4 x GL_1"),
    ("hermit-decompose", "hermitian form y J against its skew decomposition"),
    ("of-points", "V_1-cosets against p^r O_F-points, with the tensor upgrade"),
    ("gsp6-stabilizer", "stabilizer of the one-dimensional torus in GSp_6"),
    ("oracle-g1", "GL_2 pipeline against brute force"),
];

/// Registered names containing `filter`.
pub fn list_checks(filter: Option<&str>) -> Vec<(&'static str, &'static str)> {
    REGISTRY.iter().copied().filter(|(name, _)| filter.map_or(true, |f| name.contains(f))).collect()
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, CliError>;

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

/// One configured check: a registered name and a grid of values per key.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckSpec {
    pub name: String,
    pub grid: BTreeMap<String, Vec<String>>,
}

/// A whole run.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunConfig {
    pub checks: Vec<CheckSpec>,
    pub seed: u64,
    pub cap: u64,
    pub samples: usize,
    pub output: Option<PathBuf>,
    /// Minimal polynomials `(s, t)` by field label; only the built-in
    /// defaults are accepted.
    pub field_defaults: BTreeMap<i64, (i64, i64)>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            checks: Vec::new(),
            seed: 1,
            cap: OrderOptions::default().cap,
            samples: 10_000,
            output: None,
            field_defaults: BTreeMap::new(),
        }
    }
}

/// Comma-separated values, trimmed.
pub fn split_list(v: &str) -> Vec<String> {
    v.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect()
}

fn parse<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim().parse().map_err(|_| config_err(format!("cannot parse {key} = {v}")))
}

impl RunConfig {
    /// Parse the INI form: a `[run]` section with `seed`, `cap`, `samples`
    /// and `output`, a `[fields]` section of `d = s, t` lines, and one
    /// section per check named `[check]` or `[check:label]` whose keys are
    /// comma-separated grids.
    pub fn from_ini(text: &str) -> Result<RunConfig> {
        let ini = ini::Ini::load_from_str(text).map_err(|e| config_err(e.to_string()))?;
        let mut cfg = RunConfig::default();
        for (section, props) in ini.iter() {
            let Some(section) = section else {
                if props.iter().next().is_some() {
                    return Err(config_err("keys outside a section"));
                }
                continue;
            };
            match section {
                "run" => {
                    for (k, v) in props.iter() {
                        match k {
                            "seed" => cfg.seed = parse(k, v)?,
                            "cap" => cfg.cap = parse(k, v)?,
                            "samples" => cfg.samples = parse(k, v)?,
                            "output" => cfg.output = Some(PathBuf::from(v.trim())),
                            _ => return Err(config_err(format!("unknown key {k} in [run]"))),
                        }
                    }
                }
                "fields" => {
                    for (k, v) in props.iter() {
                        let d: i64 = parse("field label", k)?;
                        let st = split_list(v);
                        if st.len() != 2 {
                            return Err(config_err(format!("field {d} needs s, t")));
                        }
                        cfg.field_defaults.insert(d, (parse("s", &st[0])?, parse("t", &st[1])?));
                    }
                }
                _ => {
                    let name = section.split(':').next().unwrap_or(section).trim().to_string();
                    let grid = props.iter().map(|(k, v)| (k.to_string(), split_list(v))).collect();
                    cfg.checks.push(CheckSpec { name, grid });
                }
            }
        }
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<RunConfig> {
        Self::from_ini(&std::fs::read_to_string(path)?)
    }

    /// Every named check is registered, every grid is nonempty, and field
    /// defaults agree with the built-in minimal polynomials.
    pub fn validate(&self) -> Result<()> {
        if self.checks.is_empty() {
            return Err(config_err("no checks configured"));
        }
        for c in &self.checks {
            if !REGISTRY.iter().any(|(n, _)| *n == c.name) {
                return Err(config_err(format!("unknown check {}", c.name)));
            }
            if let Some((k, _)) = c.grid.iter().find(|(_, v)| v.is_empty()) {
                return Err(config_err(format!("empty grid for {k} in {}", c.name)));
            }
        }
        for (&d, &st) in &self.field_defaults {
            if default_minpoly(d) != Some(st) {
                return Err(config_err(format!("field {d}: only the built-in minimal polynomial {:?} is supported", default_minpoly(d))));
            }
        }
        Ok(())
    }

    /// One task per grid point, in configuration order.
    pub fn tasks(&self) -> Vec<Task> {
        let mut out = Vec::new();
        for c in &self.checks {
            let mut points = vec![BTreeMap::new()];
            for (k, values) in &c.grid {
                points = points
                    .into_iter()
                    .flat_map(|pt: BTreeMap<String, String>| {
                        values.iter().map(move |v| {
                            let mut next = pt.clone();
                            next.insert(k.clone(), v.clone());
                            next
                        })
                    })
                    .collect();
            }
            out.extend(points.into_iter().map(|params| Task { name: c.name.clone(), params }));
        }
        out
    }
}

/// One grid point of one check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Task {
    pub name: String,
    pub params: BTreeMap<String, String>,
}

struct Params<'a> {
    map: &'a BTreeMap<String, String>,
}

impl Params<'_> {
    fn get<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T> {
        self.map.get(key).map_or(Ok(default), |v| parse(key, v))
    }

    fn opt<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.map.get(key).map(|v| parse(key, v)).transpose()
    }

    fn case(&self, default: Case) -> Result<Case> {
        self.map.get("case").map_or(Ok(default), |v| v.parse().map_err(|_| config_err(format!("unknown case {v}"))))
    }
}

/// Run one task.
pub fn run_task(task: &Task, cfg: &RunConfig) -> Result<Vec<CheckReport>> {
    let p = Params { map: &task.params };
    let seed = p.get("seed", cfg.seed)?;
    let samples = p.get("samples", cfg.samples)?;
    let opts = OrderOptions { cap: p.get("cap", cfg.cap)?, seed, ..OrderOptions::default() };
    let field: Option<i64> = p.opt("field_d")?;
    let reports = match task.name.as_str() {
        "appendix-split" => appendix_reports(Case::Split, p.get("p", 2)?, p.get("m", 1)?, field, &opts),
        "appendix-inert" => {
            let (prime, m) = (p.get("p", 2)?, p.get("m", 1)?);
            let mut out = appendix_reports(Case::Inert, prime, m, field, &opts);
            if p.get("family", "coset".to_string())? == "literal" {
                out.push(literal_inert_family_check(prime, m, field, &opts));
            }
            out
        }
        "index-p10" => {
            let m = p.get("m", 1)?;
            vec![index_check(p.case(Case::Split)?, p.get("p", 2)?, m, p.get("n", 3 * m + 3)?, field, &opts)]
        }
        "remark-pattern" => {
            let weaken = match p.opt::<String>("weaken")? {
                Some(w) => {
                    let ij: Vec<usize> = w.split('/').map(|x| parse("weaken", x)).collect::<Result<_>>()?;
                    match ij[..] {
                        [i, j] if i >= 1 && j >= 1 => Some((i - 1, j - 1)),
                        _ => return Err(config_err("weaken takes a 1-based entry i/j")),
                    }
                }
                None => None,
            };
            let split = p.case(Case::Split)? == Case::Split;
            vec![remark_pattern_equivalence(p.get("p", 2)?, p.get("m", 1)?, p.get("n", 4)?, samples, split, field, weaken, &opts)]
        }
        "exact-order" => vec![exact_order_bijection_check(p.get("g", 2)?, p.get("p", 2)?, p.get("m", 1)?, &opts)],
        "divisor-distribution" => vec![distribution_check(p.get("c1", 2)?, p.get("c2", 3)?, p.get("g", 1)?)],
        "trace-invariance" => vec![trace_invariance_check(p.get("c", 5)?, p.get("g", 1)?)],
        "duality-pairing" => vec![duality_pairing_check(p.get("c", 2)?, p.get("g", 2)?, seed)],
        "fm-annihilation" => vec![f_m_annihilation_check(p.get("g", 2)?, p.get("m", 3)?)],
        "nm-unit" => vec![
            n_m_unit_check(p.get("p", 7)?, p.get("g", 2)?, p.get("m", 3)?),
            n_m_grid_check(p.get("pmax", 23)?, p.get("gmax", 3)?),
        ],
        "split-iso" => vec![split_iso_check(p.get("p", 5)?, p.get("k", 3)?, samples, seed)],
        "hermit-decompose" => vec![hermitian_decomposition_check(p.get("p", 3)?, p.get("r", 1)?, field.unwrap_or(-1), samples, seed)],
        "of-points" => {
            let case = p.case(Case::Inert)?;
            let (prime, r) = (p.get("p", 2)?, p.get("r", 1)?);
            let mut out = vec![of_point_structure_check(case, prime, r, field, samples, seed)];
            if case == Case::Inert {
                let d = field.unwrap_or(if prime == 2 { -3 } else { -1 });
                out.push(serre_tensor_check(prime, r, d, samples.min(1000), seed));
            }
            out
        }
        "gsp6-stabilizer" => {
            let method = match p.opt::<String>("method")?.as_deref() {
                None => None,
                Some("full") => Some(Method::Full),
                Some("join") => Some(Method::Join),
                Some(other) => return Err(config_err(format!("unknown method {other}"))),
            };
            vec![gsp6_stabilizer_check(p.get("p", 5)?, method, seed)]
        }
        "oracle-g1" => vec![oracle_g1(p.get("p", 2)?, p.get("k", 2)?, &opts)],
        other => return Err(config_err(format!("unknown check {other}"))),
    };
    Ok(reports)
}

/// Process status for a set of reports: 2 if any aborted, else 1 if any
/// failed, else 0.
pub fn status(reports: &[CheckReport]) -> i32 {
    if reports.iter().any(CheckReport::aborted) {
        2
    } else if reports.iter().any(|r| !r.pass) {
        1
    } else {
        0
    }
}

/// All reports of a run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Bundle {
    pub artifact_version: String,
    pub seed: u64,
    pub status: i32,
    pub reports: Vec<CheckReport>,
}

/// Validate, run every task concurrently, and collect in order.
pub fn run(cfg: &RunConfig) -> Result<Bundle> {
    cfg.validate()?;
    let tasks = cfg.tasks();
    let results: Vec<Vec<CheckReport>> = tasks.par_iter().map(|t| run_task(t, cfg)).collect::<Result<_>>()?;
    let reports: Vec<CheckReport> = results.into_iter().flatten().collect();
    Ok(Bundle { artifact_version: env!("CARGO_PKG_VERSION").to_string(), seed: cfg.seed, status: status(&reports), reports })
}

/// Write the bundle as pretty JSON to `path`, or standard output.
pub fn write_bundle(bundle: &Bundle, path: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(bundle).map_err(|e| config_err(e.to_string()))?;
    match path {
        Some(p) => std::fs::write(p, text + "\n")?,
        None => println!("{text}"),
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_expansion_is_a_product() {
        let cfg = RunConfig::from_ini("[divisor-distribution]\nc1 = 2, 3\nc2 = 4,5\ng = 1\n").unwrap();
        let tasks = cfg.tasks();
        assert_eq!(tasks.len(), 4);
        assert_eq!(tasks[0].params["c1"], "2");
        assert_eq!(tasks[3].params["c2"], "5");
    }

    #[test]
    fn validation_errors() {
        assert!(RunConfig::default().validate().is_err());
        assert!(RunConfig::from_ini("[nope]\np = 2\n").unwrap().validate().is_err());
        assert!(RunConfig::from_ini("[nm-unit]\np =\n").unwrap().validate().is_err());
        assert!(RunConfig::from_ini("[fields]\n-3 = 0, 5\n[nm-unit]\n").unwrap().validate().is_err());
        assert!(RunConfig::from_ini("[fields]\n-3 = 1, -1\n[nm-unit]\n").unwrap().validate().is_ok());
        assert!(RunConfig::from_ini("[run]\nbogus = 1\n").is_err());
    }

    #[test]
    fn labelled_sections_share_a_check() {
        let cfg = RunConfig::from_ini("[nm-unit:a]\np = 7\n[nm-unit:b]\np = 5\nm = 2\n").unwrap();
        assert_eq!(cfg.checks.len(), 2);
        assert!(cfg.checks.iter().all(|c| c.name == "nm-unit"));
    }

    #[test]
    fn status_codes() {
        let cfg = RunConfig::from_ini("[nm-unit]\np = 7\ng = 2\nm = 3\n").unwrap();
        assert_eq!(run(&cfg).unwrap().status, 0);
        let cfg = RunConfig::from_ini("[nm-unit]\np = 5\ng = 2\nm = 2\n").unwrap();
        assert_eq!(run(&cfg).unwrap().status, 1);
        let cfg = RunConfig::from_ini("[run]\ncap = 10\n[exact-order]\ng = 2\np = 2\nm = 1\n").unwrap();
        assert_eq!(run(&cfg).unwrap().status, 2);
    }
}
