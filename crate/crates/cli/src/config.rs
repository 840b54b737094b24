//! Experiment configuration files.
//!
//! Grammar, one item per line:
//!
//! ```text
//! # comment (also allowed after a value)
//! key = value
//! [section]
//! ```
//!
//! Keys before the first header belong to the top-level section. Values are
//! numbers, booleans, bare or double-quoted strings, comma-separated lists,
//! intervals `[lo, hi]` and matrices whose rows are separated by `;`
//! (`1, 0; 0, 1`).
//!
//! Sections and keys:
//!
//! | section           | keys |
//! |-------------------|------|
//! | top level         | `mode`, `seed`, `out` |
//! | `[params]`        | `d`, `s`, `beta`, `n` |
//! | `[field]`         | `omega`, `radius`, `potential`, `c`, `coeffs`, `table_lo`, `table_hi`, `shape`, `values` |
//! | `[minimize]`      | `restarts`, `max_iterations`, `gradient_tol`, `zeta_tol`, `lattice` |
//! | `[sample]`        | `steps`, `burn_in`, `thinning`, `proposal_scale`, `chains`, `adapt`, `gzip` |
//! | `[zeta]`          | `lattice`, `tol`, `shift` |
//! | `[csd]`           | `n_list`, `lattice`, `restarts`, `max_iterations`, `gradient_tol` |
//! | `[limit-measure]` | `csd`, `grid_lo`, `grid_hi`, `grid_points` |
//! | `[correlate]`     | `archive`, `window`, `bin_width`, `bins` |
//! | `[crystal-check]` | `restarts`, `max_iterations`, `gradient_tol` |
//!
//! `omega` is an interval applied to every axis (`[0, 1]`), one interval per
//! axis as matrix rows (`0, 1; 0, 2`), `R` for the whole space, or `ball` with
//! `radius`. `potential` is one of `zero`, `quadratic` (`c·|x|²`),
//! `polynomial` (`coeffs`, row `k` holding the coefficients of `x_k^0, x_k^1, ...`,
//! a single row is used for every axis) and `tabulated`. `lattice` is a preset
//! (`Z1`, `Z2`, `Z3`, `hexagonal`) or a row-major generator matrix.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use serde_json::{json, Value};

use riesz_core::lattice::{epstein_zeta, BravaisLattice};
use riesz_core::optimize::MinimizeOptions;
use riesz_core::sampler::ChainSpec;
use riesz_core::{Domain, Field, FieldSpec, RieszParams, TabulatedField};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Minimize,
    Sample,
    Zeta,
    Csd,
    LimitMeasure,
    Correlate,
    CrystalCheck,
}

impl Mode {
    pub const ALL: [Mode; 7] = [
        Mode::Minimize,
        Mode::Sample,
        Mode::Zeta,
        Mode::Csd,
        Mode::LimitMeasure,
        Mode::Correlate,
        Mode::CrystalCheck,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Mode::Minimize => "minimize",
            Mode::Sample => "sample",
            Mode::Zeta => "zeta",
            Mode::Csd => "csd",
            Mode::LimitMeasure => "limit-measure",
            Mode::Correlate => "correlate",
            Mode::CrystalCheck => "crystal-check",
        }
    }

    pub fn from_name(name: &str) -> Option<Mode> {
        Mode::ALL.into_iter().find(|m| m.name() == name)
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One problem found while reading a configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

/// Every problem found in a configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfigErrors(pub Vec<ConfigError>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

#[derive(Clone, Debug)]
pub enum Settings {
    Minimize {
        params: RieszParams,
        field: Option<FieldSpec>,
        lattice: Option<BravaisLattice>,
        restarts: usize,
        options: MinimizeOptions,
    },
    Sample {
        spec: ChainSpec,
        chains: usize,
        gzip: bool,
    },
    Zeta {
        lattice: BravaisLattice,
        s: f64,
        tol: f64,
        shift: Option<Vec<f64>>,
    },
    Csd {
        s: f64,
        d: usize,
        n_list: Vec<usize>,
        lattice: Option<BravaisLattice>,
        restarts: usize,
        options: MinimizeOptions,
    },
    LimitMeasure {
        field: FieldSpec,
        s: f64,
        d: usize,
        csd: f64,
        grid_lo: Option<Vec<f64>>,
        grid_hi: Option<Vec<f64>>,
        grid_points: usize,
    },
    Correlate {
        archives: Vec<PathBuf>,
        s: Option<f64>,
        window: f64,
        bin_width: f64,
        bins: usize,
    },
    CrystalCheck {
        params: RieszParams,
        field: FieldSpec,
        restarts: usize,
        options: MinimizeOptions,
    },
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub settings: Settings,
    pub seed: u64,
    pub out: Option<PathBuf>,
    /// The text the configuration was parsed from.
    pub source: String,
}

const DEFAULT_RESTARTS: usize = 8;

fn allowed_keys(section: &str) -> Option<&'static [&'static str]> {
    Some(match section {
        "" => &["mode", "seed", "out"],
        "params" => &["d", "s", "beta", "n"],
        "field" => &[
            "omega", "radius", "potential", "c", "coeffs", "table_lo", "table_hi", "shape", "values",
        ],
        "minimize" => &["restarts", "max_iterations", "gradient_tol", "zeta_tol", "lattice"],
        "sample" => &["steps", "burn_in", "thinning", "proposal_scale", "chains", "adapt", "gzip"],
        "zeta" => &["lattice", "tol", "shift"],
        "csd" => &["n_list", "lattice", "restarts", "max_iterations", "gradient_tol"],
        "limit-measure" => &["csd", "grid_lo", "grid_hi", "grid_points"],
        "correlate" => &["archive", "window", "bin_width", "bins"],
        "crystal-check" => &["restarts", "max_iterations", "gradient_tol"],
        _ => return None,
    })
}

#[derive(Clone, Debug)]
struct Entry {
    value: String,
    line: usize,
    used: bool,
}

struct Reader {
    entries: BTreeMap<(String, String), Entry>,
    sections: BTreeMap<String, usize>,
    errors: Vec<ConfigError>,
}

fn strip_comment(line: &str) -> &str {
    let mut quoted = false;
    for (i, c) in line.char_indices() {
        match c {
            '"' => quoted = !quoted,
            '#' if !quoted => return &line[..i],
            _ => {}
        }
    }
    line
}

impl Reader {
    fn scan(text: &str) -> Reader {
        let mut r = Reader {
            entries: BTreeMap::new(),
            sections: BTreeMap::new(),
            errors: Vec::new(),
        };
        let mut section = String::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = strip_comment(raw).trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                if line.contains('=') {
                    r.error(line_no, format!("malformed line `{line}`"));
                    continue;
                }
                let Some(name) = rest.strip_suffix(']') else {
                    r.error(line_no, format!("unterminated section header `{line}`"));
                    continue;
                };
                section = name.trim().to_string();
                if allowed_keys(&section).is_none() {
                    r.error(line_no, format!("unknown section [{section}]"));
                } else if let Some(first) = r.sections.get(&section) {
                    r.error(line_no, format!("duplicate section [{section}] (first at line {first})"));
                } else {
                    r.sections.insert(section.clone(), line_no);
                }
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                r.error(line_no, format!("expected `key = value`, found `{line}`"));
                continue;
            };
            let key = key.trim().to_string();
            let value = value.trim();
            let value = value
                .strip_prefix('"')
                .and_then(|v| v.strip_suffix('"'))
                .unwrap_or(value)
                .to_string();
            let Some(allowed) = allowed_keys(&section) else {
                continue;
            };
            if !allowed.contains(&key.as_str()) {
                let place = if section.is_empty() {
                    "at top level".to_string()
                } else {
                    format!("in [{section}]")
                };
                r.error(line_no, format!("unknown key `{key}` {place}"));
                continue;
            }
            let slot = (section.clone(), key.clone());
            if let Some(prev) = r.entries.get(&slot) {
                let prev_line = prev.line;
                r.error(line_no, format!("duplicate key `{key}` (first set at line {prev_line})"));
                continue;
            }
            r.entries.insert(
                slot,
                Entry {
                    value,
                    line: line_no,
                    used: false,
                },
            );
        }
        r
    }

    fn error(&mut self, line: usize, message: String) {
        self.errors.push(ConfigError {
            line: Some(line),
            message,
        });
    }

    fn missing(&mut self, section: &str, key: &str) {
        let place = if section.is_empty() {
            String::new()
        } else {
            format!(" in [{section}]")
        };
        self.errors.push(ConfigError {
            line: None,
            message: format!("missing key `{key}`{place}"),
        });
    }

    // `d` without marking it used
    fn peek_dim(&self) -> Option<usize> {
        let e = self.entries.get(&("params".to_string(), "d".to_string()))?;
        parse_int(&e.value).filter(|d| *d > 0)
    }

    fn has(&self, section: &str, key: &str) -> bool {
        self.entries.contains_key(&(section.to_string(), key.to_string()))
    }

    fn line_of(&self, section: &str, key: &str) -> Option<usize> {
        self.entries.get(&(section.to_string(), key.to_string())).map(|e| e.line)
    }

    fn raw(&mut self, section: &str, key: &str) -> Option<(String, usize)> {
        let e = self.entries.get_mut(&(section.to_string(), key.to_string()))?;
        e.used = true;
        Some((e.value.clone(), e.line))
    }

    fn typed<T>(&mut self, section: &str, key: &str, what: &str, parse: impl Fn(&str) -> Option<T>) -> Option<T> {
        let (v, line) = self.raw(section, key)?;
        match parse(&v) {
            Some(x) => Some(x),
            None => {
                self.error(line, format!("`{key}` must be {what}, got `{v}`"));
                None
            }
        }
    }

    fn f64(&mut self, section: &str, key: &str) -> Option<f64> {
        self.typed(section, key, "a number", parse_f64)
    }

    fn positive(&mut self, section: &str, key: &str) -> Option<f64> {
        self.typed(section, key, "a positive number", |v| parse_f64(v).filter(|x| *x > 0.0))
    }

    fn count(&mut self, section: &str, key: &str) -> Option<usize> {
        self.typed(section, key, "a positive integer", |v| parse_int(v).filter(|n| *n > 0))
    }

    fn u64(&mut self, section: &str, key: &str) -> Option<u64> {
        self.typed(section, key, "a non-negative integer", |v| v.parse().ok())
    }

    fn bool(&mut self, section: &str, key: &str) -> Option<bool> {
        self.typed(section, key, "true or false", |v| match v {
            "true" => Some(true),
            "false" => Some(false),
            _ => None,
        })
    }

    fn list(&mut self, section: &str, key: &str) -> Option<Vec<f64>> {
        self.typed(section, key, "a comma-separated list of numbers", parse_list)
    }

    fn matrix(&mut self, section: &str, key: &str) -> Option<Vec<Vec<f64>>> {
        self.typed(section, key, "a matrix with `;`-separated rows", parse_matrix)
    }

    fn require<T>(&mut self, section: &str, key: &str, get: impl Fn(&mut Self, &str, &str) -> Option<T>) -> Option<T> {
        if !self.has(section, key) {
            self.missing(section, key);
            return None;
        }
        get(self, section, key)
    }
}

fn parse_f64(v: &str) -> Option<f64> {
    v.trim().parse::<f64>().ok().filter(|x| x.is_finite())
}

fn parse_int(v: &str) -> Option<usize> {
    let v = v.trim();
    if let Ok(n) = v.parse::<usize>() {
        return Some(n);
    }
    // accept integral floats such as 1e6
    let x = parse_f64(v)?;
    (x >= 0.0 && x.fract() == 0.0 && x < 2f64.powi(53)).then_some(x as usize)
}

fn parse_list(v: &str) -> Option<Vec<f64>> {
    let v = v.trim();
    let v = v.strip_prefix('[').and_then(|x| x.strip_suffix(']')).unwrap_or(v);
    if v.trim().is_empty() {
        return None;
    }
    v.split(',').map(parse_f64).collect()
}

fn parse_matrix(v: &str) -> Option<Vec<Vec<f64>>> {
    let rows: Option<Vec<Vec<f64>>> = v.split(';').map(parse_list).collect();
    let rows = rows?;
    let w = rows.first()?.len();
    rows.iter().all(|r| r.len() == w).then_some(rows)
}

fn parse_lattice(v: &str) -> std::result::Result<BravaisLattice, String> {
    if let Ok(l) = BravaisLattice::preset(v.trim()) {
        return Ok(l);
    }
    let rows = parse_matrix(v).ok_or_else(|| format!("`{v}` is neither a lattice preset nor a matrix"))?;
    let d = rows.len();
    if rows[0].len() != d {
        return Err(format!("lattice matrix must be square, got {d}x{}", rows[0].len()));
    }
    BravaisLattice::new(d, rows.concat()).map_err(|e| e.to_string())
}

impl Reader {
    fn lattice(&mut self, section: &str) -> Option<BravaisLattice> {
        let (v, line) = self.raw(section, "lattice")?;
        match parse_lattice(&v) {
            Ok(l) => Some(l),
            Err(e) => {
                self.error(line, e);
                None
            }
        }
    }

    /// `s`, `d` with the hypersingular check reported at the line of `s`.
    fn exponent(&mut self, s: Option<f64>, d: Option<usize>) -> bool {
        match (s, d) {
            (Some(s), Some(d)) if s <= d as f64 => {
                let line = self.line_of("params", "s");
                self.errors.push(ConfigError {
                    line,
                    message: format!("hypersingular requires s>d (s={s}, d={d})"),
                });
                false
            }
            (Some(_), Some(_)) => true,
            _ => false,
        }
    }

    fn params(&mut self, need_beta: bool) -> Option<RieszParams> {
        let d = self.require("params", "d", Self::count);
        let s = self.require("params", "s", Self::f64);
        let beta = if need_beta {
            self.require("params", "beta", Self::f64)
        } else {
            Some(self.f64("params", "beta").unwrap_or(1.0))
        };
        if let Some(b) = beta {
            if b < 0.0 {
                let line = self.line_of("params", "beta");
                self.errors.push(ConfigError {
                    line,
                    message: format!("beta must be >= 0, got {b}"),
                });
            }
        }
        let n = self.require("params", "n", Self::count);
        let ok = self.exponent(s, d);
        match (ok, d, s, beta, n) {
            (true, Some(d), Some(s), Some(beta), Some(n)) if beta >= 0.0 => Some(RieszParams { d, s, beta, n }),
            _ => None,
        }
    }

    fn domain(&mut self, d: usize) -> Option<Domain> {
        if !self.has("field", "omega") {
            self.missing("field", "omega");
            return None;
        }
        let (v, line) = self.raw("field", "omega")?;
        let t = v.trim();
        match t {
            "R" | "whole" => return Some(Domain::Whole { dim: d }),
            "ball" => {
                let r = self.require("field", "radius", Self::positive)?;
                return Some(Domain::region(vec![-r; d], vec![r; d], move |x: &[f64]| {
                    x.iter().map(|v| v * v).sum::<f64>() <= r * r
                }));
            }
            _ => {}
        }
        let rows = match parse_matrix(t) {
            Some(rows) if rows[0].len() == 2 => rows,
            _ => {
                self.error(line, format!("`omega` must be `[lo, hi]`, rows `lo, hi; ...`, `R` or `ball`, got `{v}`"));
                return None;
            }
        };
        let rows = if rows.len() == 1 { vec![rows[0].clone(); d] } else { rows };
        if rows.len() != d {
            self.error(line, format!("`omega` has {} rows, expected d={d}", rows.len()));
            return None;
        }
        if rows.iter().any(|r| !(r[0] < r[1])) {
            self.error(line, "`omega` intervals need lo < hi".into());
            return None;
        }
        Some(Domain::Box {
            lo: rows.iter().map(|r| r[0]).collect(),
            hi: rows.iter().map(|r| r[1]).collect(),
        })
    }

    fn field(&mut self, d: usize) -> Option<FieldSpec> {
        let domain = self.domain(d);
        let kind = self.raw("field", "potential").map(|(v, l)| (v.trim().to_string(), l));
        let field = match kind.as_ref().map(|(k, l)| (k.as_str(), *l)) {
            None | Some(("zero", _)) => Some(Field::Zero),
            Some(("quadratic", _)) => Some(Field::Quadratic {
                c: self.f64("field", "c").unwrap_or(1.0),
            }),
            Some(("polynomial", _)) => self.require("field", "coeffs", Self::matrix).and_then(|rows| {
                let rows = if rows.len() == 1 { vec![rows[0].clone(); d] } else { rows };
                if rows.len() != d {
                    let line = self.line_of("field", "coeffs").unwrap_or(0);
                    self.error(line, format!("`coeffs` has {} rows, expected d={d}", rows.len()));
                    return None;
                }
                Some(Field::AxisPolynomial { coeffs: rows })
            }),
            Some(("tabulated", _)) => {
                let lo = self.require("field", "table_lo", Self::list);
                let hi = self.require("field", "table_hi", Self::list);
                let shape = self.require("field", "shape", Self::list);
                let values = self.require("field", "values", Self::list);
                match (lo, hi, shape, values) {
                    (Some(lo), Some(hi), Some(shape), Some(values)) => Some(Field::Tabulated(TabulatedField {
                        lo,
                        hi,
                        shape: shape.iter().map(|v| *v as usize).collect(),
                        values,
                    })),
                    _ => None,
                }
            }
            Some((other, line)) => {
                self.error(line, format!("unknown potential `{other}`"));
                None
            }
        };
        let (domain, field) = (domain?, field?);
        match FieldSpec::new(domain, field) {
            Ok(f) => Some(f),
            Err(e) => {
                let line = self.line_of("field", "potential").or(self.line_of("field", "omega"));
                self.errors.push(ConfigError {
                    line,
                    message: e.to_string(),
                });
                None
            }
        }
    }

    fn options(&mut self, section: &str) -> MinimizeOptions {
        let mut o = MinimizeOptions::default();
        if let Some(v) = self.count(section, "max_iterations") {
            o.max_iterations = v;
        }
        if let Some(v) = self.positive(section, "gradient_tol") {
            o.gradient_tol = v;
        }
        if let Some(v) = self.positive(section, "zeta_tol") {
            o.zeta_tol = v;
        }
        o
    }

    fn restarts(&mut self, section: &str) -> usize {
        self.count(section, "restarts").unwrap_or(DEFAULT_RESTARTS)
    }
}

fn mode_section(mode: Mode) -> &'static str {
    mode.name()
}

/// Parses a configuration whose `mode` key selects the experiment.
pub fn parse_config(text: &str) -> std::result::Result<ExperimentConfig, ConfigErrors> {
    parse_config_for(text, None)
}

/// Parses a configuration; `mode` given here takes the place of the `mode`
/// key, which must agree with it when both are present.
pub fn parse_config_for(text: &str, mode: Option<Mode>) -> std::result::Result<ExperimentConfig, ConfigErrors> {
    let mut r = Reader::scan(text);
    let declared = r.raw("", "mode").and_then(|(v, line)| match Mode::from_name(v.trim()) {
        Some(m) => Some((m, line)),
        None => {
            r.error(line, format!("unknown mode `{v}`"));
            None
        }
    });
    let mode = match (mode, declared) {
        (Some(m), Some((c, line))) if m != c => {
            r.error(line, format!("config declares mode `{c}` but `{m}` was requested"));
            m
        }
        (Some(m), _) => m,
        (None, Some((c, _))) => c,
        (None, None) => {
            if !r.has("", "mode") {
                r.missing("", "mode");
            }
            return Err(ConfigErrors(r.errors));
        }
    };
    let seed = r.u64("", "seed").unwrap_or(0);
    let out = r.raw("", "out").map(|(v, _)| PathBuf::from(v));
    let settings = settings_for(&mut r, mode);

    for (section, line) in r.sections.clone() {
        let used_here = section == "params" || section == "field" || section == mode_section(mode);
        if !used_here {
            r.error(line, format!("section [{section}] does not apply to mode `{mode}`"));
        }
    }
    let unused: Vec<(String, String, usize)> = r
        .entries
        .iter()
        .filter(|_| settings.is_some())
        .filter(|(_, e)| !e.used)
        .filter(|((sec, _), _)| sec == "params" || sec == "field")
        .map(|((sec, key), e)| (sec.clone(), key.clone(), e.line))
        .collect();
    for (sec, key, line) in unused {
        r.error(line, format!("key `{key}` in [{sec}] is not used by mode `{mode}`"));
    }
    match settings {
        Some(settings) if r.errors.is_empty() => Ok(ExperimentConfig {
            mode,
            settings,
            seed,
            out,
            source: text.to_string(),
        }),
        _ => {
            if r.errors.is_empty() {
                r.errors.push(ConfigError {
                    line: None,
                    message: "invalid configuration".into(),
                });
            }
            r.errors.sort_by_key(|e| e.line.unwrap_or(usize::MAX));
            Err(ConfigErrors(r.errors))
        }
    }
}

fn default_proposal_scale(field: &FieldSpec, n: usize) -> f64 {
    let d = field.dim();
    let side = match field.domain.bounds() {
        Some((lo, hi)) => lo.iter().zip(hi).map(|(a, b)| b - a).product::<f64>().powf(1.0 / d as f64),
        None => 1.0,
    };
    0.5 * side * (n as f64).powf(-1.0 / d as f64)
}

fn settings_for(r: &mut Reader, mode: Mode) -> Option<Settings> {
    let sec = mode_section(mode);
    match mode {
        Mode::Minimize => {
            let restarts = r.restarts(sec);
            let options = r.options(sec);
            let lattice = r.lattice(sec);
            let lattice_given = r.has(sec, "lattice");
            let params = r.params(false);
            let field = if lattice_given { None } else { r.peek_dim().and_then(|d| r.field(d)) };
            let params = params?;
            if lattice_given {
                let l = lattice?;
                if l.dim() != params.d {
                    let line = r.line_of(sec, "lattice").unwrap_or(0);
                    r.error(line, format!("lattice has dimension {}, expected d={}", l.dim(), params.d));
                    return None;
                }
                if let Some(line) = r.sections.get("field").copied() {
                    r.error(line, "periodic minimization takes no [field]".into());
                }
                return Some(Settings::Minimize {
                    params,
                    field: None,
                    lattice: Some(l),
                    restarts,
                    options,
                });
            }
            Some(Settings::Minimize {
                params,
                field: Some(field?),
                lattice: None,
                restarts,
                options,
            })
        }
        Mode::Sample => {
            let steps = r.require(sec, "steps", Reader::u64);
            let burn_in = r.require(sec, "burn_in", Reader::u64);
            if let (Some(st), Some(b)) = (steps, burn_in) {
                if st <= b {
                    let line = r.line_of(sec, "steps").unwrap_or(0);
                    r.error(line, format!("steps ({st}) must exceed burn_in ({b})"));
                }
            }
            let thinning = r.count(sec, "thinning");
            let scale = r.positive(sec, "proposal_scale");
            let chains = r.count(sec, "chains").unwrap_or(1);
            let adapt = r.bool(sec, "adapt").unwrap_or(true);
            let gzip = r.bool(sec, "gzip").unwrap_or(true);
            let params = r.params(true);
            let field = r.peek_dim().and_then(|d| r.field(d));
            let (params, field) = (params?, field?);
            let (steps, burn_in) = (steps?, burn_in?);
            if steps <= burn_in {
                return None;
            }
            let proposal_scale = scale.unwrap_or_else(|| default_proposal_scale(&field, params.n));
            Some(Settings::Sample {
                spec: ChainSpec {
                    params,
                    field,
                    steps,
                    burn_in,
                    thinning: thinning.map(|t| t as u64).unwrap_or(10 * params.n as u64),
                    proposal_scale,
                    seed: 0,
                    adapt,
                },
                chains,
                gzip,
            })
        }
        Mode::Zeta => {
            let s = r.require("params", "s", Reader::f64);
            let d_given = r.count("params", "d");
            let tol = r.positive(sec, "tol").unwrap_or(1e-10);
            let shift = r.list(sec, "shift");
            if !r.has(sec, "lattice") {
                r.missing(sec, "lattice");
            }
            let lattice = r.lattice(sec)?;
            let d = lattice.dim();
            if let Some(dg) = d_given {
                if dg != d {
                    let line = r.line_of("params", "d").unwrap_or(0);
                    r.error(line, format!("d={dg} does not match the lattice dimension {d}"));
                }
            }
            if !r.exponent(s, Some(d)) {
                return None;
            }
            if let Some(x) = &shift {
                if x.len() != d {
                    let line = r.line_of(sec, "shift").unwrap_or(0);
                    r.error(line, format!("`shift` has {} entries, expected {d}", x.len()));
                }
            }
            Some(Settings::Zeta {
                lattice,
                s: s?,
                tol,
                shift,
            })
        }
        Mode::Csd => {
            let s = r.require("params", "s", Reader::f64);
            let d = r.require("params", "d", Reader::count);
            let n_list = r.require(sec, "n_list", Reader::list).and_then(|v| {
                let ok = v.iter().all(|x| *x >= 1.0 && x.fract() == 0.0);
                if !ok {
                    let line = r.line_of(sec, "n_list").unwrap_or(0);
                    r.error(line, "`n_list` must hold positive integers".into());
                    return None;
                }
                Some(v.iter().map(|x| *x as usize).collect::<Vec<_>>())
            });
            let lattice = if r.has(sec, "lattice") { Some(r.lattice(sec)?) } else { None };
            let restarts = r.restarts(sec);
            let options = r.options(sec);
            if !r.exponent(s, d) {
                return None;
            }
            if let (Some(l), Some(d)) = (&lattice, d) {
                if l.dim() != d {
                    let line = r.line_of(sec, "lattice").unwrap_or(0);
                    r.error(line, format!("lattice has dimension {}, expected d={d}", l.dim()));
                }
            }
            Some(Settings::Csd {
                s: s?,
                d: d?,
                n_list: n_list?,
                lattice,
                restarts,
                options,
            })
        }
        Mode::LimitMeasure => {
            let s = r.require("params", "s", Reader::f64);
            let d = r.require("params", "d", Reader::count);
            let csd = r.positive(sec, "csd");
            let grid_lo = r.list(sec, "grid_lo");
            let grid_hi = r.list(sec, "grid_hi");
            let grid_points = r.count(sec, "grid_points").unwrap_or(1000);
            if !r.exponent(s, d) {
                return None;
            }
            let (s, d) = (s?, d?);
            let field = r.field(d)?;
            let csd = match csd {
                Some(c) => c,
                None if d == 1 => epstein_zeta(&BravaisLattice::cubic(1, 1.0).ok()?, s, 1e-12).ok()?.value,
                None => {
                    r.missing(sec, "csd");
                    return None;
                }
            };
            for (key, g) in [("grid_lo", &grid_lo), ("grid_hi", &grid_hi)] {
                if let Some(g) = g {
                    if g.len() != d {
                        let line = r.line_of(sec, key).unwrap_or(0);
                        r.error(line, format!("`{key}` has {} entries, expected {d}", g.len()));
                    }
                }
            }
            Some(Settings::LimitMeasure {
                field,
                s,
                d,
                csd,
                grid_lo,
                grid_hi,
                grid_points,
            })
        }
        Mode::Correlate => {
            let archives = r.require(sec, "archive", |r, s, k| r.raw(s, k)).map(|(v, _)| {
                v.split(',')
                    .map(|p| PathBuf::from(p.trim()))
                    .filter(|p| !p.as_os_str().is_empty())
                    .collect::<Vec<_>>()
            });
            let window = r.require(sec, "window", Reader::positive);
            let bin_width = r.require(sec, "bin_width", Reader::positive);
            let bins = r.require(sec, "bins", Reader::count);
            let s = r.f64("params", "s");
            let d = r.count("params", "d");
            if s.is_some() && d.is_some() && !r.exponent(s, d) {
                return None;
            }
            Some(Settings::Correlate {
                archives: archives?,
                s,
                window: window?,
                bin_width: bin_width?,
                bins: bins?,
            })
        }
        Mode::CrystalCheck => {
            let restarts = r.restarts(sec);
            let options = r.options(sec);
            let params = r.params(false);
            let field = r.field(1);
            let params = params?;
            if params.d != 1 {
                let line = r.line_of("params", "d");
                r.errors.push(ConfigError {
                    line,
                    message: "crystal-check needs d = 1".into(),
                });
                return None;
            }
            if params.n < 3 {
                let line = r.line_of("params", "n");
                r.errors.push(ConfigError {
                    line,
                    message: "crystal-check needs n >= 3".into(),
                });
                return None;
            }
            Some(Settings::CrystalCheck {
                params,
                field: field?,
                restarts,
                options,
            })
        }
    }
}

fn domain_json(domain: &Domain) -> Value {
    match domain {
        Domain::Box { lo, hi } => json!({"kind": "box", "lo": lo, "hi": hi}),
        Domain::Whole { dim } => json!({"kind": "whole", "dim": dim}),
        Domain::Region { lo, hi, .. } => json!({"kind": "region", "lo": lo, "hi": hi}),
    }
}

fn field_json(f: &FieldSpec) -> Value {
    json!({"domain": domain_json(&f.domain), "potential": f.field})
}

impl ExperimentConfig {
    /// Resolved settings with defaults filled in.
    pub fn echo(&self) -> Value {
        let settings = match &self.settings {
            Settings::Minimize {
                params,
                field,
                lattice,
                restarts,
                options,
            } => json!({
                "params": params,
                "field": field.as_ref().map(field_json),
                "lattice": lattice.as_ref().map(|l| l.generator().to_vec()),
                "restarts": restarts,
                "options": options,
            }),
            Settings::Sample { spec, chains, gzip } => json!({
                "chain": spec.echo(),
                "chains": chains,
                "gzip": gzip,
            }),
            Settings::Zeta { lattice, s, tol, shift } => json!({
                "lattice": lattice.generator(),
                "d": lattice.dim(),
                "s": s,
                "tol": tol,
                "shift": shift,
            }),
            Settings::Csd {
                s,
                d,
                n_list,
                lattice,
                restarts,
                options,
            } => json!({
                "s": s,
                "d": d,
                "n_list": n_list,
                "lattice": lattice.as_ref().map(|l| l.generator().to_vec()),
                "restarts": restarts,
                "options": options,
            }),
            Settings::LimitMeasure {
                field,
                s,
                d,
                csd,
                grid_lo,
                grid_hi,
                grid_points,
            } => json!({
                "field": field_json(field),
                "s": s,
                "d": d,
                "csd": csd,
                "grid_lo": grid_lo,
                "grid_hi": grid_hi,
                "grid_points": grid_points,
            }),
            Settings::Correlate {
                archives,
                s,
                window,
                bin_width,
                bins,
            } => json!({
                "archives": archives,
                "s": s,
                "window": window,
                "bin_width": bin_width,
                "bins": bins,
            }),
            Settings::CrystalCheck {
                params,
                field,
                restarts,
                options,
            } => json!({
                "params": params,
                "field": field_json(field),
                "restarts": restarts,
                "options": options,
            }),
        };
        json!({"mode": self.mode.name(), "seed": self.seed, "settings": settings})
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "mode = minimize\n[params]\nd = 1\ns = 2\nn = 3\n[field]\nomega = [0,1]\n";

    fn messages(e: &ConfigErrors) -> Vec<String> {
        e.0.iter().map(|x| x.to_string()).collect()
    }

    #[test]
    fn minimal_minimize_gets_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.mode, Mode::Minimize);
        assert_eq!(c.seed, 0);
        match c.settings {
            Settings::Minimize {
                params,
                field,
                restarts,
                lattice,
                ..
            } => {
                assert_eq!(restarts, 8);
                assert_eq!((params.d, params.s, params.n), (1, 2.0, 3));
                assert!(lattice.is_none());
                let f = field.unwrap();
                assert_eq!(f.domain.bounds().unwrap(), (&[0.0][..], &[1.0][..]));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rejects_soft_exponent() {
        let e = parse_config("mode = minimize\n[params]\nd = 2\ns = 1\nn = 3\n[field]\nomega = [0,1]\n").unwrap_err();
        assert!(messages(&e).iter().any(|m| m.contains("hypersingular requires s>d")), "{e}");
        assert_eq!(e.0[0].line, Some(4));
    }

    #[test]
    fn duplicate_key_names_key_and_line() {
        let e = parse_config("mode = minimize\n[params]\nd = 1\ns = 2\nn = 3\nn = 4\n[field]\nomega = [0,1]\n").unwrap_err();
        let text = e.to_string();
        assert!(text.contains("line 6"), "{text}");
        assert!(text.contains("first set at line 5"), "{text}");
        assert!(text.contains("duplicate key `n`"), "{text}");
    }

    #[test]
    fn reports_every_error() {
        let text = "mode = minimize\nbogus = 1\n[params]\nd = 1\ns = x\n[field]\nomega = [0,1]\npotential = cubic\n";
        let e = parse_config(text).unwrap_err();
        let m = messages(&e);
        assert!(m.iter().any(|x| x.contains("unknown key `bogus`")), "{m:?}");
        assert!(m.iter().any(|x| x.contains("`s` must be a number")), "{m:?}");
        assert!(m.iter().any(|x| x.contains("missing key `n`")), "{m:?}");
        assert!(m.iter().any(|x| x.contains("unknown potential")), "{m:?}");
    }

    #[test]
    fn malformed_matrix() {
        let text = "mode = zeta\n[params]\ns = 2\n[zeta]\nlattice = 1, 0; 0\n";
        let e = parse_config(text).unwrap_err();
        assert_eq!(e.0[0].line, Some(5), "{e}");
        let ok = parse_config("mode = zeta\n[params]\ns = 3\n[zeta]\nlattice = 1, 0; 0, 2\n").unwrap();
        match ok.settings {
            Settings::Zeta { lattice, .. } => assert_eq!(lattice.generator(), &[1.0, 0.0, 0.0, 2.0]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn sample_steps_must_exceed_burn_in() {
        let text = "mode = sample\n[params]\nd = 1\ns = 2\nbeta = 1\nn = 2\n[field]\nomega = [0,1]\n[sample]\nsteps = 100\nburn_in = 100\n";
        let e = parse_config(text).unwrap_err();
        assert!(e.to_string().contains("must exceed burn_in"), "{e}");
    }

    #[test]
    fn mode_mismatch_and_foreign_sections() {
        let e = parse_config_for(MINIMAL, Some(Mode::Sample)).unwrap_err();
        assert!(e.to_string().contains("declares mode `minimize`"), "{e}");
        let e = parse_config(&format!("{MINIMAL}[zeta]\ntol = 1e-8\n")).unwrap_err();
        assert!(e.to_string().contains("[zeta] does not apply"), "{e}");
    }

    #[test]
    fn domains_and_fields() {
        let text = "mode = minimize\n[params]\nd = 2\ns = 3\nn = 5\n[field]\nomega = 0, 1; -1, 2\npotential = polynomial\ncoeffs = 0, 0, 1\n";
        let c = parse_config(text).unwrap();
        let Settings::Minimize { field: Some(f), .. } = c.settings else { panic!() };
        assert_eq!(f.domain.bounds().unwrap().0, &[0.0, -1.0]);
        assert_eq!(f.field, Field::AxisPolynomial { coeffs: vec![vec![0.0, 0.0, 1.0]; 2] });
        let ball = "mode = minimize\n[params]\nd = 2\ns = 3\nn = 5\n[field]\nomega = ball\nradius = 2\n";
        let Settings::Minimize { field: Some(f), .. } = parse_config(ball).unwrap().settings else { panic!() };
        assert!(f.domain.contains(&[1.9, 0.0]) && !f.domain.contains(&[1.5, 1.5]));
        let open = "mode = minimize\n[params]\nd = 1\ns = 2\nn = 5\n[field]\nomega = R\n";
        assert!(parse_config(open).is_err());
    }

    #[test]
    fn comments_and_quotes() {
        let text = "mode = \"minimize\" # trailing\nseed = 12\nout = \"a # b\"\n[params]\nd = 1\ns = 2\nn = 3\n[field]\nomega = [0,1]\n";
        let c = parse_config(text).unwrap();
        assert_eq!(c.seed, 12);
        assert_eq!(c.out.unwrap(), PathBuf::from("a # b"));
    }

    #[test]
    fn limit_measure_defaults_csd_in_one_dimension() {
        let text = "mode = limit-measure\n[params]\nd = 1\ns = 2\n[field]\nomega = R\npotential = quadratic\n";
        let Settings::LimitMeasure { csd, grid_points, .. } = parse_config(text).unwrap().settings else { panic!() };
        assert!((csd - std::f64::consts::PI.powi(2) / 3.0).abs() < 1e-10);
        assert_eq!(grid_points, 1000);
    }
}
