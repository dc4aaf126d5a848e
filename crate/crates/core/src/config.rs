//! TOML engine configuration.
//!
//! Four optional sections: `[geometry]`, `[film]`, `[simulation]` and
//! `[forearm_torque]`. Dimensional keys carry their unit as a suffix, e.g.
//! `q_mm = 50` or `q_m = 0.05`; exactly one spelling per quantity is accepted.
//! Missing keys fall back to the built-in prototype and synthetic film.
//! Unknown keys are errors.
//!
//! The emitted form always uses SI suffixes, and its SHA-256 is the config hash
//! reported by the command-line tool.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use thiserror::Error;
use toml::{Table, Value};

use crate::dynamics::{DynamicsError, ElasticWork, ForearmTorqueCurve, Model, SimulationSettings};
use crate::geometry::RobotGeometry;
use crate::material::FilmParams;

/// Environment variable naming the config file when none is given explicitly.
pub const CONFIG_ENV: &str = "DEA_PKM_CONFIG";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("malformed TOML: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("unknown key `{key}` in [{section}]")]
    UnknownKey { section: String, key: String },
    #[error("unknown section [{0}]")]
    UnknownSection(String),
    #[error("`{key}` given with more than one unit in [{section}]")]
    DuplicateUnit { section: String, key: String },
    #[error("bad value for `{key}` in [{section}]: {msg}")]
    BadValue { section: String, key: String, msg: String },
    #[error(transparent)]
    Invalid(#[from] DynamicsError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EngineConfig {
    pub geometry: RobotGeometry,
    pub film: FilmParams,
    pub settings: SimulationSettings,
    pub torque: ForearmTorqueCurve,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self::from_model(&Model::synthetic_default())
    }
}

const DEG: f64 = std::f64::consts::PI / 180.0;

struct Section<'a> {
    name: &'static str,
    table: Option<&'a Table>,
    used: BTreeSet<String>,
}

impl<'a> Section<'a> {
    fn new(root: &'a Table, name: &'static str) -> Result<Self, ConfigError> {
        let table = match root.get(name) {
            None => None,
            Some(Value::Table(t)) => Some(t),
            Some(_) => return Err(ConfigError::UnknownSection(name.into())),
        };
        Ok(Self { name, table, used: BTreeSet::new() })
    }

    fn bad(&self, key: &str, msg: impl Into<String>) -> ConfigError {
        ConfigError::BadValue { section: self.name.into(), key: key.into(), msg: msg.into() }
    }

    /// Looks up `base` under each `(suffix, factor)` spelling.
    fn lookup(&mut self, base: &str, units: &[(&str, f64)]) -> Result<Option<(String, &'a Value, f64)>, ConfigError> {
        let Some(t) = self.table else { return Ok(None) };
        let mut found = None;
        for (suffix, factor) in units {
            let key = if suffix.is_empty() { base.to_string() } else { format!("{base}_{suffix}") };
            if let Some(v) = t.get(&key) {
                if found.is_some() {
                    return Err(ConfigError::DuplicateUnit { section: self.name.into(), key: base.into() });
                }
                self.used.insert(key.clone());
                found = Some((key, v, *factor));
            }
        }
        Ok(found)
    }

    fn number(&self, key: &str, v: &Value) -> Result<f64, ConfigError> {
        match v {
            Value::Float(f) => Ok(*f),
            Value::Integer(i) => Ok(*i as f64),
            _ => Err(self.bad(key, "expected a number")),
        }
    }

    fn scalar(&mut self, base: &str, units: &[(&str, f64)], default: f64) -> Result<f64, ConfigError> {
        match self.lookup(base, units)? {
            None => Ok(default),
            Some((key, v, factor)) => Ok(self.number(&key, v)? * factor),
        }
    }

    fn array(&mut self, base: &str, units: &[(&str, f64)]) -> Result<Option<Vec<f64>>, ConfigError> {
        match self.lookup(base, units)? {
            None => Ok(None),
            Some((key, Value::Array(a), factor)) => {
                a.iter().map(|v| self.number(&key, v).map(|x| x * factor)).collect::<Result<_, _>>().map(Some)
            }
            Some((key, _, _)) => Err(self.bad(&key, "expected an array")),
        }
    }

    fn fixed<const N: usize>(&mut self, base: &str, units: &[(&str, f64)], default: [f64; N]) -> Result<[f64; N], ConfigError> {
        match self.array(base, units)? {
            None => Ok(default),
            Some(v) => v.try_into().map_err(|v: Vec<f64>| self.bad(base, format!("expected {N} entries, got {}", v.len()))),
        }
    }

    fn finish(self) -> Result<(), ConfigError> {
        if let Some(t) = self.table {
            if let Some(k) = t.keys().find(|k| !self.used.contains(*k)) {
                return Err(ConfigError::UnknownKey { section: self.name.into(), key: k.clone() });
            }
        }
        Ok(())
    }
}

const LEN: &[(&str, f64)] = &[("m", 1.0), ("mm", 1e-3)];
const ANG: &[(&str, f64)] = &[("rad", 1.0), ("deg", DEG)];
const MASS: &[(&str, f64)] = &[("kg", 1.0), ("g", 1e-3)];
const PA: &[(&str, f64)] = &[("pa", 1.0), ("kpa", 1e3)];
const SEC: &[(&str, f64)] = &[("s", 1.0)];
const ACC: &[(&str, f64)] = &[("mps2", 1.0)];
const PERM: &[(&str, f64)] = &[("fpm", 1.0), ("rel", crate::EPSILON_0)];
const TORQUE: &[(&str, f64)] = &[("nm", 1.0), ("nmm", 1e-3)];
const NONE: &[(&str, f64)] = &[("", 1.0)];

impl EngineConfig {
    pub fn from_model(model: &Model) -> Self {
        Self { geometry: model.geom, film: model.film, settings: model.settings, torque: model.torque.clone() }
    }

    pub fn to_model(&self) -> Result<Model, DynamicsError> {
        Model::new(self.geometry, self.film, self.torque.clone(), self.settings)
    }

    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let root: Table = text.parse()?;
        for k in root.keys() {
            if !["geometry", "film", "simulation", "forearm_torque"].contains(&k.as_str()) {
                return Err(ConfigError::UnknownSection(k.clone()));
            }
        }
        let d = Self::default();

        let mut s = Section::new(&root, "geometry")?;
        let g0 = d.geometry;
        let geometry = RobotGeometry {
            a: s.scalar("a", LEN, g0.a)?,
            b: s.scalar("b", LEN, g0.b)?,
            c: s.scalar("c", LEN, g0.c)?,
            d: s.scalar("d", LEN, g0.d)?,
            q: s.scalar("q", LEN, g0.q)?,
            n0: s.scalar("n0", LEN, g0.n0)?,
            l_dea: s.scalar("l_dea", LEN, g0.l_dea)?,
            l_ch: s.scalar("l_ch", LEN, g0.l_ch)?,
            l_cv: s.scalar("l_cv", LEN, g0.l_cv)?,
            l_end: s.scalar("l_end", LEN, g0.l_end)?,
            omega: s.scalar("omega", ANG, g0.omega)?,
            alpha: s.scalar("alpha", ANG, g0.alpha)?,
            theta_pre: s.scalar("theta_pre", ANG, g0.theta_pre)?,
            theta_dea_neutral: s.scalar("theta_dea_neutral", ANG, g0.theta_dea_neutral)?,
            m_ee: s.scalar("m_ee", MASS, g0.m_ee)?,
            m_bc: s.scalar("m_bc", MASS, g0.m_bc)?,
            g: s.scalar("gravity", ACC, g0.g)?,
        };
        s.finish()?;

        let mut s = Section::new(&root, "film")?;
        let f0 = d.film;
        let film = FilmParams {
            l1: s.scalar("l1", LEN, f0.l1)?,
            l2: s.scalar("l2", LEN, f0.l2)?,
            l3: s.scalar("l3", LEN, f0.l3)?,
            eps: s.scalar("eps", PERM, f0.eps)?,
            gent_j: s.scalar("gent_j", NONE, f0.gent_j)?,
            mu: s.fixed("mu", PA, f0.mu)?,
            tau: s.fixed("tau", SEC, f0.tau)?,
        };
        s.finish()?;

        let mut s = Section::new(&root, "simulation")?;
        let s0 = d.settings;
        let substeps = match s.lookup("substeps", NONE)? {
            None => s0.substeps,
            Some((_, Value::Integer(n), _)) if *n >= 1 => Some(*n as usize),
            Some((key, _, _)) => return Err(s.bad(&key, "expected a positive integer")),
        };
        let elastic_work = match s.lookup("elastic_work", NONE)? {
            None => s0.elastic_work,
            Some((key, Value::String(v), _)) => match v.as_str() {
                "nominal" => ElasticWork::Nominal,
                "as_printed" => ElasticWork::AsPrinted,
                _ => return Err(s.bad(&key, "expected \"nominal\" or \"as_printed\"")),
            },
            Some((key, _, _)) => return Err(s.bad(&key, "expected a string")),
        };
        let mut jacobian = s0.jacobian;
        jacobian.min_step = s.scalar("jacobian_min_step", LEN, jacobian.min_step)?;
        jacobian.rel_step = s.scalar("jacobian_rel_step", NONE, jacobian.rel_step)?;
        jacobian.hessian_step = s.scalar("hessian_step", LEN, jacobian.hessian_step)?;
        s.finish()?;
        let settings = SimulationSettings { substeps, elastic_work, jacobian };

        let mut s = Section::new(&root, "forearm_torque")?;
        let angles = s.array("angles", ANG)?;
        let torques = s.array("torques", TORQUE)?;
        s.finish()?;
        let torque = match (angles, torques) {
            (None, None) => d.torque,
            (Some(a), Some(t)) => ForearmTorqueCurve::new(a, t)?,
            _ => {
                return Err(ConfigError::BadValue {
                    section: "forearm_torque".into(),
                    key: "angles".into(),
                    msg: "angles and torques must be given together".into(),
                })
            }
        };

        let cfg = Self { geometry, film, settings, torque };
        cfg.to_model()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io { path: path.into(), source: e })?;
        Self::from_toml_str(&text)
    }

    /// Explicit path, else `$DEA_PKM_CONFIG`, else the built-in defaults.
    pub fn resolve(explicit: Option<&Path>) -> Result<(Self, Option<PathBuf>), ConfigError> {
        let path = explicit.map(Path::to_path_buf).or_else(|| std::env::var_os(CONFIG_ENV).map(PathBuf::from));
        match path {
            Some(p) => Ok((Self::load(&p)?, Some(p))),
            None => Ok((Self::default(), None)),
        }
    }

    /// Canonical SI form.
    pub fn to_toml_string(&self) -> String {
        let arr = |v: &[f64]| Value::Array(v.iter().map(|x| Value::Float(*x)).collect());
        let g = &self.geometry;
        let mut geo = Table::new();
        for (k, v) in [
            ("a_m", g.a),
            ("b_m", g.b),
            ("c_m", g.c),
            ("d_m", g.d),
            ("q_m", g.q),
            ("n0_m", g.n0),
            ("l_dea_m", g.l_dea),
            ("l_ch_m", g.l_ch),
            ("l_cv_m", g.l_cv),
            ("l_end_m", g.l_end),
            ("omega_rad", g.omega),
            ("alpha_rad", g.alpha),
            ("theta_pre_rad", g.theta_pre),
            ("theta_dea_neutral_rad", g.theta_dea_neutral),
            ("m_ee_kg", g.m_ee),
            ("m_bc_kg", g.m_bc),
            ("gravity_mps2", g.g),
        ] {
            geo.insert(k.into(), Value::Float(v));
        }
        let f = &self.film;
        let mut film = Table::new();
        for (k, v) in [("l1_m", f.l1), ("l2_m", f.l2), ("l3_m", f.l3), ("eps_fpm", f.eps), ("gent_j", f.gent_j)] {
            film.insert(k.into(), Value::Float(v));
        }
        film.insert("mu_pa".into(), arr(&f.mu));
        film.insert("tau_s".into(), arr(&f.tau));
        let st = &self.settings;
        let mut sim = Table::new();
        if let Some(n) = st.substeps {
            sim.insert("substeps".into(), Value::Integer(n as i64));
        }
        let ew = match st.elastic_work {
            ElasticWork::Nominal => "nominal",
            ElasticWork::AsPrinted => "as_printed",
        };
        sim.insert("elastic_work".into(), Value::String(ew.into()));
        sim.insert("jacobian_min_step_m".into(), Value::Float(st.jacobian.min_step));
        sim.insert("jacobian_rel_step".into(), Value::Float(st.jacobian.rel_step));
        sim.insert("hessian_step_m".into(), Value::Float(st.jacobian.hessian_step));
        let mut root = Table::new();
        root.insert("geometry".into(), Value::Table(geo));
        root.insert("film".into(), Value::Table(film));
        root.insert("simulation".into(), Value::Table(sim));
        if !self.torque.angles().is_empty() {
            let mut tq = Table::new();
            tq.insert("angles_rad".into(), arr(self.torque.angles()));
            tq.insert("torques_nm".into(), arr(self.torque.torques()));
            root.insert("forearm_torque".into(), Value::Table(tq));
        }
        toml::to_string(&root).expect("plain table serialises")
    }

    /// Hex SHA-256 of [`to_toml_string`](Self::to_toml_string).
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_toml_string().as_bytes()))
    }
}
