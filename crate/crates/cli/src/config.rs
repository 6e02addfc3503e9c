//! Experiment configuration files.
//!
//! The format is line based: `key = value`, `[section]` headers that prefix
//! the following keys, `#` comments. Keys may be dotted (`level.1.e_slope`).
//! Reals accept decimal or `p/q` notation, complex numbers are written
//! `re, im`, lists are comma separated.
//!
//! ```text
//! name = example
//! mode = sweep, ep
//!
//! [family]
//! N = 2
//! level.1.e_intercept = 1
//! level.1.e_slope = -1/2
//! level.1.gamma_half_intercept = -0.495   # gamma_half_slope defaults to 0
//! level.2.e_intercept = 0
//! level.2.e_slope = 1
//! level.2.gamma_half_intercept = -0.493
//! omega_scale = 0.01
//! omega_scalar = 1/10, 1                  # ω = 0.01·(1/10 + i)
//! ```
//!
//! Individual couplings go in `omega_matrix.i.j = re, im` (1-based, i < j);
//! they override `omega_scalar`, or must all be present without it.
//!
//! Other keys:
//!
//! - top level: `name`, `description`, `mode` (any of `sweep`, `ep`,
//!   `xsec-scan`, `xsec-contour`, `diagnose`), `energy_grid` (`auto` or
//!   `min, max, steps`), `energy_steps` (for `auto`), `compare_no_coupling`
//! - `[sweep]` and `[contour]`: `a_min`, `a_max`, `steps`, `refine_near_ep`,
//!   `refine_gap_threshold`, `max_refine_depth`, `max_levels`,
//!   `suspect_rigidity` (contours never refine and default to 200 steps)
//! - `[xsec]`: `params`, `[diagnose]`: `params`
//! - `[ep]`: `search` (`parameter`, `parameter_and_scale`,
//!   `complex_coupling`), `a_min`, `a_max`, `s_min`, `s_max`, `a`, `re_min`,
//!   `re_max`, `im_min`, `im_max`, `method` (`auto`, `closed_form`,
//!   `generic`), `grid`, `merge_radius`, `cluster_radius`, `max_seeds`, `ray`
//! - `[output]`: `dir`
//!
//! Every requested mode needs its section. Unknown or repeated keys are
//! errors, so typos do not silently fall back to defaults.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};

use nhep_core::{
    Affine, Complex64, CouplingMatrix, EnergyGrid, HamiltonianFamily, LevelSpec, SearchBox, SweepConfig,
};
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl ConfigError {
    fn at(line: usize, message: impl Into<String>) -> Self {
        Self {
            line: Some(line),
            message: message.into(),
        }
    }

    fn general(message: impl Into<String>) -> Self {
        Self {
            line: None,
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Sweep,
    Ep,
    XsecScan,
    XsecContour,
    Diagnose,
}

impl Mode {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "sweep" => Mode::Sweep,
            "ep" => Mode::Ep,
            "xsec-scan" => Mode::XsecScan,
            "xsec-contour" => Mode::XsecContour,
            "diagnose" => Mode::Diagnose,
            _ => return None,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Mode::Sweep => "sweep",
            Mode::Ep => "ep",
            Mode::XsecScan => "xsec-scan",
            Mode::XsecContour => "xsec-contour",
            Mode::Diagnose => "diagnose",
        }
    }

    /// Section that must be present when the mode is requested.
    fn section(&self) -> &'static str {
        match self {
            Mode::Sweep => "sweep",
            Mode::Ep => "ep",
            Mode::XsecScan => "xsec",
            Mode::XsecContour => "contour",
            Mode::Diagnose => "diagnose",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EpMethod {
    /// Closed form for two levels, discriminant search otherwise.
    Auto,
    ClosedForm,
    Generic,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpSettings {
    pub search: SearchBox,
    pub method: EpMethod,
    pub grid: (usize, usize),
    pub merge_radius: f64,
    pub cluster_radius: f64,
    pub max_seeds: usize,
    pub ray: (f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub name: String,
    pub description: String,
    pub modes: Vec<Mode>,
    pub family: HamiltonianFamily,
    pub sweep: SweepConfig,
    /// Parameter grid of cross-section contours.
    pub contour: SweepConfig,
    pub energy_grid: EnergyGrid,
    pub scan_params: Vec<f64>,
    pub diagnose_params: Vec<f64>,
    pub ep: Option<EpSettings>,
    pub compare_no_coupling: bool,
    pub output_dir: Option<PathBuf>,
    /// SHA-256 of the configuration text, hex encoded.
    pub hash: String,
}

struct Entry {
    value: String,
    line: usize,
}

struct Raw {
    entries: BTreeMap<String, Entry>,
    sections: BTreeSet<String>,
    used: RefCell<BTreeSet<String>>,
}

fn valid_key(k: &str) -> bool {
    !k.is_empty()
        && k.split('.').all(|part| {
            !part.is_empty() && part.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
        })
}

fn parse_raw(text: &str) -> Result<Raw, ConfigError> {
    let mut entries = BTreeMap::new();
    let mut sections = BTreeSet::new();
    let mut section = String::new();
    for (idx, full) in text.lines().enumerate() {
        let line = idx + 1;
        let content = full.split('#').next().unwrap().trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| ConfigError::at(line, "section header must end with ']'"))?
                .trim();
            if !valid_key(name) {
                return Err(ConfigError::at(line, format!("invalid section name '{name}'")));
            }
            section = name.to_string();
            sections.insert(section.clone());
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| ConfigError::at(line, "expected 'key = value'"))?;
        let (key, value) = (key.trim(), value.trim());
        if !valid_key(key) {
            return Err(ConfigError::at(line, format!("invalid key '{key}'")));
        }
        if value.is_empty() {
            return Err(ConfigError::at(line, format!("key '{key}' has no value")));
        }
        let full_key = if section.is_empty() {
            key.to_string()
        } else {
            format!("{section}.{key}")
        };
        if let Some((head, _)) = full_key.split_once('.') {
            sections.insert(head.to_string());
        }
        if let Some(prev) = entries.get(&full_key) {
            let prev: &Entry = prev;
            return Err(ConfigError::at(
                line,
                format!("'{full_key}' already set on line {}", prev.line),
            ));
        }
        entries.insert(
            full_key,
            Entry {
                value: value.to_string(),
                line,
            },
        );
    }
    Ok(Raw {
        entries,
        sections,
        used: RefCell::new(BTreeSet::new()),
    })
}

/// Decimal or `p/q`.
pub fn parse_real(s: &str) -> Result<f64, String> {
    let s = s.trim();
    let v = match s.split_once('/') {
        Some((p, q)) => {
            let p: f64 = p.trim().parse().map_err(|_| format!("'{s}' is not a number"))?;
            let q: f64 = q.trim().parse().map_err(|_| format!("'{s}' is not a number"))?;
            if q == 0.0 {
                return Err(format!("'{s}' divides by zero"));
            }
            p / q
        }
        None => s.parse().map_err(|_| format!("'{s}' is not a number"))?,
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("'{s}' is not finite"))
    }
}

impl Raw {
    fn has_section(&self, name: &str) -> bool {
        self.sections.contains(name)
    }

    fn get(&self, key: &str) -> Option<(&str, usize)> {
        let e = self.entries.get(key)?;
        self.used.borrow_mut().insert(key.to_string());
        Some((e.value.as_str(), e.line))
    }

    fn require(&self, key: &str) -> Result<(&str, usize), ConfigError> {
        self.get(key)
            .ok_or_else(|| ConfigError::general(format!("missing required key '{key}'")))
    }

    fn reals(&self, key: &str) -> Result<Option<(Vec<f64>, usize)>, ConfigError> {
        let Some((v, line)) = self.get(key) else {
            return Ok(None);
        };
        let vals = v
            .split(',')
            .map(parse_real)
            .collect::<Result<Vec<_>, _>>()
            .map_err(|m| ConfigError::at(line, format!("{key}: {m}")))?;
        Ok(Some((vals, line)))
    }

    fn real(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        match self.reals(key)? {
            None => Ok(None),
            Some((v, _)) if v.len() == 1 => Ok(Some(v[0])),
            Some((_, line)) => Err(ConfigError::at(line, format!("{key}: expected one number"))),
        }
    }

    fn real_or(&self, key: &str, default: f64) -> Result<f64, ConfigError> {
        Ok(self.real(key)?.unwrap_or(default))
    }

    fn pair(&self, key: &str) -> Result<Option<(f64, f64)>, ConfigError> {
        match self.reals(key)? {
            None => Ok(None),
            Some((v, _)) if v.len() == 2 => Ok(Some((v[0], v[1]))),
            Some((_, line)) => Err(ConfigError::at(line, format!("{key}: expected two numbers"))),
        }
    }

    fn count(&self, key: &str) -> Result<Option<usize>, ConfigError> {
        let Some((v, line)) = self.get(key) else {
            return Ok(None);
        };
        v.parse()
            .map(Some)
            .map_err(|_| ConfigError::at(line, format!("{key}: '{v}' is not a non-negative integer")))
    }

    fn flag(&self, key: &str) -> Result<Option<bool>, ConfigError> {
        let Some((v, line)) = self.get(key) else {
            return Ok(None);
        };
        match v {
            "true" => Ok(Some(true)),
            "false" => Ok(Some(false)),
            _ => Err(ConfigError::at(line, format!("{key}: expected true or false, got '{v}'"))),
        }
    }

    fn complex(&self, key: &str) -> Result<Option<Complex64>, ConfigError> {
        match self.reals(key)? {
            None => Ok(None),
            Some((v, _)) if v.len() == 1 => Ok(Some(Complex64::new(v[0], 0.0))),
            Some((v, _)) if v.len() == 2 => Ok(Some(Complex64::new(v[0], v[1]))),
            Some((_, line)) => Err(ConfigError::at(line, format!("{key}: expected 're, im'"))),
        }
    }

    fn unused(&self) -> Option<(&String, usize)> {
        let used = self.used.borrow();
        self.entries
            .iter()
            .find(|(k, _)| !used.contains(*k))
            .map(|(k, e)| (k, e.line))
    }
}

fn range(raw: &Raw, lo: &str, hi: &str, default: (f64, f64)) -> Result<(f64, f64), ConfigError> {
    Ok((raw.real_or(lo, default.0)?, raw.real_or(hi, default.1)?))
}

fn parse_family(raw: &Raw) -> Result<HamiltonianFamily, ConfigError> {
    if !raw.has_section("family") {
        return Err(ConfigError::general("missing [family] section"));
    }
    let (_, line) = raw.require("family.N")?;
    let n = raw.count("family.N")?.unwrap();
    if !(2..=64).contains(&n) {
        return Err(ConfigError::at(line, format!("family.N must be between 2 and 64, got {n}")));
    }
    let levels = (1..=n)
        .map(|i| {
            let key = |k: &str| format!("family.level.{i}.{k}");
            let need = |k: &str| -> Result<f64, ConfigError> {
                raw.real(&key(k))?
                    .ok_or_else(|| ConfigError::general(format!("missing required key '{}'", key(k))))
            };
            Ok(LevelSpec::new(
                Affine::new(need("e_intercept")?, need("e_slope")?),
                Affine::new(need("gamma_half_intercept")?, raw.real_or(&key("gamma_half_slope"), 0.0)?),
            ))
        })
        .collect::<Result<Vec<_>, ConfigError>>()?;
    let scalar = raw.complex("family.omega_scalar")?;
    let mut coupling = CouplingMatrix::uniform(n, scalar.unwrap_or_default());
    for i in 1..=n {
        for j in i + 1..=n {
            let key = format!("family.omega_matrix.{i}.{j}");
            match raw.complex(&key)? {
                Some(w) => coupling.set(i - 1, j - 1, w).expect("valid pair"),
                None if scalar.is_none() => {
                    return Err(ConfigError::general(format!(
                        "missing '{key}' (give family.omega_scalar or every omega_matrix entry)"
                    )))
                }
                None => {}
            }
        }
    }
    let scale = raw.real_or("family.omega_scale", 1.0)?;
    let coupling = coupling.scaled(Complex64::new(scale, 0.0));
    HamiltonianFamily::new(levels, coupling).map_err(|e| ConfigError::general(format!("family: {e}")))
}

fn parse_sweep(raw: &Raw, prefix: &str, default_steps: usize) -> Result<SweepConfig, ConfigError> {
    let d = SweepConfig::default();
    let key = |k: &str| format!("{prefix}.{k}");
    let cfg = SweepConfig {
        a_min: raw.real_or(&key("a_min"), d.a_min)?,
        a_max: raw.real_or(&key("a_max"), d.a_max)?,
        steps: raw.count(&key("steps"))?.unwrap_or(default_steps),
        refine_near_ep: raw.flag(&key("refine_near_ep"))?.unwrap_or(d.refine_near_ep),
        refine_gap_threshold: raw.real_or(&key("refine_gap_threshold"), d.refine_gap_threshold)?,
        max_refine_depth: raw.count(&key("max_refine_depth"))?.unwrap_or(d.max_refine_depth),
        max_levels: raw.count(&key("max_levels"))?.unwrap_or(d.max_levels),
        suspect_rigidity: raw.real_or(&key("suspect_rigidity"), d.suspect_rigidity)?,
        ambiguity_ratio: d.ambiguity_ratio,
    };
    cfg.validate()
        .map_err(|e| ConfigError::general(format!("[{prefix}]: {e}")))?;
    Ok(cfg)
}

fn parse_energy_grid(raw: &Raw) -> Result<EnergyGrid, ConfigError> {
    let steps = raw.count("energy_steps")?.unwrap_or(2001);
    let Some((v, line)) = raw.get("energy_grid") else {
        return Ok(EnergyGrid::Auto { steps });
    };
    if v == "auto" {
        return Ok(EnergyGrid::Auto { steps });
    }
    let parts: Vec<&str> = v.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(ConfigError::at(line, "energy_grid: expected 'auto' or 'min, max, steps'"));
    }
    let min = parse_real(parts[0]).map_err(|m| ConfigError::at(line, m))?;
    let max = parse_real(parts[1]).map_err(|m| ConfigError::at(line, m))?;
    let steps: usize = parts[2]
        .parse()
        .map_err(|_| ConfigError::at(line, "energy_grid: steps must be an integer"))?;
    if !(min < max) || steps < 2 {
        return Err(ConfigError::at(line, "energy_grid: need min < max and at least 2 steps"));
    }
    Ok(EnergyGrid::Range { min, max, steps })
}

fn parse_ep(raw: &Raw, dim: usize) -> Result<EpSettings, ConfigError> {
    let (kind, line) = raw.require("ep.search")?;
    let search = match kind {
        "parameter" => SearchBox::Parameter {
            a: range(raw, "ep.a_min", "ep.a_max", (0.0, 1.0))?,
        },
        "parameter_and_scale" => SearchBox::ParameterAndScale {
            a: range(raw, "ep.a_min", "ep.a_max", (0.0, 1.0))?,
            s: range(raw, "ep.s_min", "ep.s_max", (0.0, 2.0))?,
        },
        "complex_coupling" => SearchBox::ComplexCoupling {
            a: raw.real_or("ep.a", 0.0)?,
            re: range(raw, "ep.re_min", "ep.re_max", (-2.0, 2.0))?,
            im: range(raw, "ep.im_min", "ep.im_max", (-2.0, 2.0))?,
        },
        other => {
            return Err(ConfigError::at(
                line,
                format!("ep.search: unknown search '{other}' (parameter, parameter_and_scale, complex_coupling)"),
            ))
        }
    };
    let method = match raw.get("ep.method") {
        None | Some(("auto", _)) => EpMethod::Auto,
        Some(("closed_form", line)) => {
            if dim != 2 {
                return Err(ConfigError::at(line, "ep.method: closed_form needs a two-level family"));
            }
            EpMethod::ClosedForm
        }
        Some(("generic", _)) => EpMethod::Generic,
        Some((other, line)) => {
            return Err(ConfigError::at(line, format!("ep.method: unknown method '{other}'")))
        }
    };
    let grid = match raw.reals("ep.grid")? {
        None => (101, 101),
        Some((v, line)) => {
            let ok = |x: f64| x >= 3.0 && x.fract() == 0.0;
            match v.as_slice() {
                [p] if ok(*p) => (*p as usize, 101),
                [p, q] if ok(*p) && ok(*q) => (*p as usize, *q as usize),
                _ => return Err(ConfigError::at(line, "ep.grid: expected one or two integers ≥ 3")),
            }
        }
    };
    Ok(EpSettings {
        search,
        method,
        grid,
        merge_radius: raw.real_or("ep.merge_radius", 1e-4)?,
        cluster_radius: raw.real_or("ep.cluster_radius", 1.0)?,
        max_seeds: raw.count("ep.max_seeds")?.unwrap_or(64),
        ray: raw.pair("ep.ray")?.unwrap_or((1.0, 0.0)),
    })
}

impl ExperimentConfig {
    pub fn from_text(text: &str) -> Result<Self, ConfigError> {
        let raw = parse_raw(text)?;
        let name = raw
            .get("name")
            .map(|(v, _)| v.to_string())
            .unwrap_or_else(|| "experiment".into());
        let description = raw.get("description").map(|(v, _)| v.to_string()).unwrap_or_default();
        let (mode_text, mode_line) = raw.require("mode")?;
        let mut modes = Vec::new();
        for m in mode_text.split(',').map(str::trim) {
            let mode = Mode::parse(m).ok_or_else(|| {
                ConfigError::at(
                    mode_line,
                    format!("unknown mode '{m}' (sweep, ep, xsec-scan, xsec-contour, diagnose)"),
                )
            })?;
            if !modes.contains(&mode) {
                modes.push(mode);
            }
        }
        for m in &modes {
            if !raw.has_section(m.section()) {
                return Err(ConfigError::general(format!(
                    "mode {} needs a [{}] section",
                    m.name(),
                    m.section()
                )));
            }
        }
        let family = parse_family(&raw)?;
        let sweep = parse_sweep(&raw, "sweep", SweepConfig::default().steps)?;
        let contour = parse_sweep(&raw, "contour", 200)?;
        let energy_grid = parse_energy_grid(&raw)?;
        let list = |key: &str| -> Result<Vec<f64>, ConfigError> { Ok(raw.reals(key)?.map(|v| v.0).unwrap_or_default()) };
        let scan_params = list("xsec.params")?;
        if modes.contains(&Mode::XsecScan) && scan_params.is_empty() {
            return Err(ConfigError::general("mode xsec-scan needs xsec.params"));
        }
        let diagnose_params = list("diagnose.params")?;
        if modes.contains(&Mode::Diagnose) && diagnose_params.is_empty() {
            return Err(ConfigError::general("mode diagnose needs diagnose.params"));
        }
        let ep = if raw.has_section("ep") {
            Some(parse_ep(&raw, family.dim())?)
        } else {
            None
        };
        let compare_no_coupling = raw.flag("compare_no_coupling")?.unwrap_or(false);
        let output_dir = raw.get("output.dir").map(|(v, _)| PathBuf::from(v));
        if let Some((key, line)) = raw.unused() {
            return Err(ConfigError::at(line, format!("unknown key '{key}'")));
        }
        let hash = Sha256::digest(text.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect();
        Ok(Self {
            name,
            description,
            modes,
            family,
            sweep,
            contour,
            energy_grid,
            scan_params,
            diagnose_params,
            ep,
            compare_no_coupling,
            output_dir,
            hash,
        })
    }

    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::general(format!("cannot read {}: {e}", path.display())))?;
        Self::from_text(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "
mode = sweep
[family]
N = 2
level.1.e_intercept = 1
level.1.e_slope = -1/2
level.1.gamma_half_intercept = -0.495
level.2.e_intercept = 0
level.2.e_slope = 1
level.2.gamma_half_intercept = -0.493
omega_scalar = 0.001, 0.01
[sweep]
steps = 11
";

    #[test]
    fn rationals_and_decimals() {
        assert_eq!(parse_real("-1/3").unwrap(), -1.0 / 3.0);
        assert_eq!(parse_real(" 2.5e-1 ").unwrap(), 0.25);
        assert!(parse_real("1/0").is_err());
        assert!(parse_real("abc").is_err());
        assert!(parse_real("inf").is_err());
    }

    #[test]
    fn minimal_config() {
        let cfg = ExperimentConfig::from_text(MINIMAL).unwrap();
        assert_eq!(cfg.modes, vec![Mode::Sweep]);
        assert_eq!(cfg.sweep.steps, 11);
        assert_eq!(cfg.family.levels()[0].energy, Affine::new(1.0, -0.5));
        assert_eq!(cfg.family.coupling().get(0, 1), Complex64::new(0.001, 0.01));
        assert_eq!(cfg.hash.len(), 64);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let bad = MINIMAL.replace("steps = 11", "stpes = 11");
        let err = ExperimentConfig::from_text(&bad).unwrap_err();
        assert_eq!(err.line, Some(13));
        assert!(err.message.contains("sweep.stpes"));

        let dup = format!("{MINIMAL}steps = 12\n");
        assert_eq!(ExperimentConfig::from_text(&dup).unwrap_err().line, Some(14));

        let bad_num = MINIMAL.replace("-0.495", "-0.4x5");
        assert_eq!(ExperimentConfig::from_text(&bad_num).unwrap_err().line, Some(7));
    }

    #[test]
    fn missing_sections() {
        let no_family = "mode = sweep\n[sweep]\nsteps = 3\n";
        let err = ExperimentConfig::from_text(no_family).unwrap_err();
        assert!(err.message.contains("[family]"), "{err}");
        let no_ep = MINIMAL.replace("mode = sweep", "mode = sweep, ep");
        assert!(ExperimentConfig::from_text(&no_ep).unwrap_err().message.contains("[ep]"));
    }

    #[test]
    fn pair_overrides_and_scale() {
        let text = MINIMAL.replace("omega_scalar = 0.001, 0.01", "omega_scale = 2\nomega_matrix.1.2 = 0, 1");
        let cfg = ExperimentConfig::from_text(&text).unwrap();
        assert_eq!(cfg.family.coupling().get(0, 1), Complex64::new(0.0, 2.0));
    }
}
