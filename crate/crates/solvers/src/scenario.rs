//! Flat `key = value` scenario files and the simulations they describe.
//!
//! Blank lines and text after `#` are ignored. Keys may appear once.
//! Validation collects every offending key before failing.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use netgrid::io::read_gmsh_file;
use netgrid::{Execution, GridConfig, PersistentId};
use thiserror::Error;

use crate::fv::straight_chain;
use crate::network::{Adaptivity, VesselBoundary, VesselCell, VesselParams, VesselProblem, VesselSimulation};
use crate::roots::{GrowthIndicator, RootCell, RootSimulation};
use crate::{Result, SolverError};

#[derive(Debug, Error, PartialEq)]
pub enum ScenarioError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("{}", describe(.unknown, .missing, .invalid))]
    Keys { unknown: Vec<String>, missing: Vec<String>, invalid: Vec<String> },
}

fn describe(unknown: &[String], missing: &[String], invalid: &[String]) -> String {
    let mut parts = Vec::new();
    for (what, keys) in [("unknown keys", unknown), ("missing keys", missing), ("invalid values", invalid)] {
        if !keys.is_empty() {
            parts.push(format!("{what}: {}", keys.join(", ")));
        }
    }
    parts.join("; ")
}

#[derive(Debug, Clone, Default)]
pub struct Scenario {
    entries: BTreeMap<String, String>,
    /// Directory relative paths are resolved against.
    pub base_dir: PathBuf,
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self, ScenarioError> {
        let mut entries = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let syntax = |msg: String| ScenarioError::Syntax { line: n + 1, msg };
            let (key, value) =
                line.split_once('=').ok_or_else(|| syntax(format!("expected `key = value`, got `{line}`")))?;
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() || key.contains(char::is_whitespace) {
                return Err(syntax(format!("bad key `{key}`")));
            }
            if entries.insert(key.to_string(), value.to_string()).is_some() {
                return Err(syntax(format!("duplicate key `{key}`")));
            }
        }
        Ok(Scenario { entries, base_dir: PathBuf::new() })
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(netgrid::io::IoError::from)?;
        let mut s = Scenario::parse(&text)?;
        s.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(s)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    /// Overrides or adds a value, as a command-line flag would.
    pub fn set(&mut self, key: &str, value: impl fmt::Display) {
        self.entries.insert(key.to_string(), value.to_string());
    }

    fn reader(&self) -> Reader<'_> {
        Reader { scenario: self, seen: Vec::new(), missing: Vec::new(), invalid: Vec::new() }
    }
}

/// Typed access that records problems instead of stopping at the first.
struct Reader<'a> {
    scenario: &'a Scenario,
    seen: Vec<&'static str>,
    missing: Vec<String>,
    invalid: Vec<String>,
}

impl<'a> Reader<'a> {
    fn raw(&mut self, key: &'static str) -> Option<&'a str> {
        self.seen.push(key);
        self.scenario.get(key)
    }

    fn parse<T: FromStr>(&mut self, key: &'static str, default: Option<T>) -> Option<T> {
        match self.raw(key) {
            Some(v) => match v.parse() {
                Ok(x) => Some(x),
                Err(_) => {
                    self.invalid.push(format!("{key} (`{v}`)"));
                    None
                }
            },
            None if default.is_none() => {
                self.missing.push(key.to_string());
                None
            }
            None => default,
        }
    }

    fn value<T: FromStr + Copy>(&mut self, key: &'static str, default: T) -> T {
        self.parse(key, Some(default)).unwrap_or(default)
    }

    fn check(&mut self, key: &'static str, ok: bool, why: &str) {
        if !ok && self.scenario.get(key).is_some() {
            self.invalid.push(format!("{key} ({why})"));
        }
    }

    fn list(&mut self, key: &'static str) -> Vec<i32> {
        let Some(v) = self.raw(key) else { return Vec::new() };
        let parsed: std::result::Result<Vec<i32>, _> =
            v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(str::parse).collect();
        parsed.unwrap_or_else(|_| {
            self.invalid.push(format!("{key} (`{v}`)"));
            Vec::new()
        })
    }

    fn finish(self) -> Result<(), ScenarioError> {
        let unknown: Vec<String> =
            self.scenario.entries.keys().filter(|k| !self.seen.contains(&k.as_str())).cloned().collect();
        if unknown.is_empty() && self.missing.is_empty() && self.invalid.is_empty() {
            Ok(())
        } else {
            Err(ScenarioError::Keys { unknown, missing: self.missing, invalid: self.invalid })
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MeshSource {
    /// Straight chain along the first axis of `R^3`; its first vertex is
    /// tagged 1 and its last one 2.
    Chain {
        elements: usize,
        length: f64,
    },
    Gmsh(PathBuf),
}

/// Vessel flow and transport run.
///
/// Defaults: `mesh = chain` with 64 elements over `1e-3`, `radius = 4e-6`,
/// parameters from [`VesselParams::default`], zero tissue values and
/// initial concentration, no boundary tags, `inlet_concentration = 1`,
/// adaptivity on with `eps_r = 0.3`, `eps_c = 0.05`, `max_level = 2`,
/// `dt = 1e-3`, `steps = 10`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowScenario {
    pub mesh: MeshSource,
    pub params: VesselParams,
    pub radius: f64,
    pub tissue_pressure: f64,
    pub tissue_concentration: f64,
    pub initial_concentration: f64,
    /// Cells whose center has first coordinate in `[lo, hi]` start at
    /// `value`.
    pub pulse: Option<(f64, f64, f64)>,
    pub inflow_tags: Vec<i32>,
    pub outflow_tags: Vec<i32>,
    pub concentration_tags: Vec<i32>,
    pub inflow_velocity: f64,
    pub outflow_pressure: f64,
    pub inlet_concentration: f64,
    pub adaptivity: Option<Adaptivity>,
    pub dt: f64,
    pub steps: usize,
}

impl FlowScenario {
    pub fn from_scenario(s: &Scenario) -> Result<Self, ScenarioError> {
        let mut r = s.reader();
        let mesh = match r.raw("mesh").unwrap_or("chain") {
            "chain" => MeshSource::Chain {
                elements: r.value("chain_elements", 64usize),
                length: r.value("chain_length", 1e-3),
            },
            path => MeshSource::Gmsh(s.base_dir.join(path)),
        };
        let d = VesselParams::default();
        let params = VesselParams {
            mu: r.value("mu", d.mu),
            gamma: r.value("gamma", d.gamma),
            l_p: r.value("l_p", d.l_p),
            l_c: r.value("l_c", d.l_c),
            sigma: r.value("sigma", d.sigma),
            d_e: r.value("d_e", d.d_e),
        };
        r.check("mu", params.mu > 0.0, "must be positive");
        r.check("gamma", params.gamma >= 2.0, "must be at least 2");
        r.check("sigma", (0.0..=1.0).contains(&params.sigma), "must lie in [0, 1]");
        for (k, v) in [("l_p", params.l_p), ("l_c", params.l_c), ("d_e", params.d_e)] {
            r.check(k, v >= 0.0, "must be nonnegative");
        }
        let radius = r.value("radius", 4e-6);
        r.check("radius", radius > 0.0, "must be positive");
        let lo = r.value("pulse_min", f64::NAN);
        let hi = r.value("pulse_max", f64::NAN);
        let value = r.value("pulse_value", 1.0);
        let pulse = (lo.is_finite() && hi.is_finite()).then_some((lo, hi, value));
        let adaptive = r.value("adaptive", true);
        let adaptivity = Adaptivity {
            eps_r: r.value("eps_r", 0.3),
            eps_c: r.value("eps_c", 0.05),
            max_level: r.value("max_level", 2usize),
        };
        r.check(
            "eps_r",
            (0.0..=1.0).contains(&adaptivity.eps_r) && adaptivity.eps_r > adaptivity.eps_c,
            "need 0 <= eps_c < eps_r <= 1",
        );
        let dt = r.value("dt", 1e-3);
        r.check("dt", dt > 0.0, "must be positive");
        let scenario = FlowScenario {
            mesh,
            params,
            radius,
            tissue_pressure: r.value("tissue_pressure", 0.0),
            tissue_concentration: r.value("tissue_concentration", 0.0),
            initial_concentration: r.value("initial_concentration", 0.0),
            pulse,
            inflow_tags: r.list("inflow_tags"),
            outflow_tags: r.list("outflow_tags"),
            concentration_tags: r.list("concentration_tags"),
            inflow_velocity: r.value("inflow_velocity", 0.0),
            outflow_pressure: r.value("outflow_pressure", 0.0),
            inlet_concentration: r.value("inlet_concentration", 1.0),
            adaptivity: adaptive.then_some(adaptivity),
            dt,
            steps: r.value("steps", 10usize),
        };
        if let Some(t) = scenario.concentration_tags.iter().find(|t| !scenario.inflow_tags.contains(t)) {
            r.invalid.push(format!("concentration_tags (tag {t} is not an inflow tag)"));
        }
        r.finish()?;
        Ok(scenario)
    }

    pub fn build(&self, exec: Execution) -> Result<VesselSimulation> {
        let (grid, tags): (_, HashMap<PersistentId, i32>) = match &self.mesh {
            MeshSource::Chain { elements, length } => {
                if *elements == 0 {
                    return Err(SolverError::InvalidParameter("chain_elements must be positive".into()));
                }
                let g = straight_chain(*elements, &[length / *elements as f64, 0.0, 0.0])?;
                let first = g.id(g.factory_vertex(0).expect("chain vertex"))?;
                let last = g.id(g.factory_vertex(*elements).expect("chain vertex"))?;
                (g, HashMap::from([(first, 1), (last, 2)]))
            }
            MeshSource::Gmsh(path) => {
                let m = read_gmsh_file(path, GridConfig::new(1, 3)?)?;
                (m.grid, m.vertex_tags)
            }
        };
        let mut boundary = VesselBoundary::default();
        for (&id, tag) in &tags {
            if self.outflow_tags.contains(tag) {
                boundary.outflow.insert(id, self.outflow_pressure);
            }
            if self.inflow_tags.contains(tag) {
                boundary.inflow.insert(id, self.inflow_velocity);
                if self.concentration_tags.contains(tag) {
                    boundary.concentration.insert(id, self.inlet_concentration);
                }
            }
        }
        let view = grid.leaf_view();
        let cell = VesselCell {
            radius: self.radius,
            tissue_pressure: self.tissue_pressure,
            tissue_concentration: self.tissue_concentration,
        };
        let mut c0 = Vec::with_capacity(view.size(0));
        for g in view.element_geometries(exec) {
            let x = g.center()[0];
            c0.push(match self.pulse {
                Some((lo, hi, v)) if (lo..=hi).contains(&x) => v,
                _ => self.initial_concentration,
            });
        }
        let problem = VesselProblem { params: self.params, cells: vec![cell; view.size(0)], boundary };
        drop(view);
        VesselSimulation::new(grid, problem, c0, exec)
    }
}

/// Root growth run.
///
/// Defaults: 8 segments of `0.01`, `k_x = 1e-16`, `k_r = 1e-13`,
/// `radius = 5e-4`, `p_soil = -2.9429e-2`, `p_collar = -1.2e6`, `seed = 0`,
/// `branch_probability = 0.05`, `elongation_probability = 0.5`,
/// `gravity_weight = 0.5`, `growth_length = segment_length`, `steps = 10`.
#[derive(Debug, Clone, PartialEq)]
pub struct RootScenario {
    pub segments: usize,
    pub segment_length: f64,
    pub cell: RootCell,
    pub p_soil: f64,
    pub p_collar: f64,
    pub indicator: GrowthIndicator,
    pub steps: usize,
}

impl RootScenario {
    pub fn from_scenario(s: &Scenario) -> Result<Self, ScenarioError> {
        let mut r = s.reader();
        let segments = r.value("segments", 8usize);
        r.check("segments", segments > 0, "must be positive");
        let segment_length = r.value("segment_length", 0.01);
        r.check("segment_length", segment_length > 0.0, "must be positive");
        let cell = RootCell { k_x: r.value("k_x", 1e-16), k_r: r.value("k_r", 1e-13), radius: r.value("radius", 5e-4) };
        r.check("k_x", cell.k_x > 0.0, "must be positive");
        r.check("k_r", cell.k_r >= 0.0, "must be nonnegative");
        r.check("radius", cell.radius > 0.0, "must be positive");
        let indicator = GrowthIndicator {
            seed: r.value("seed", 0u64),
            branch_probability: r.value("branch_probability", 0.05),
            elongation_probability: r.value("elongation_probability", 0.5),
            gravity_weight: r.value("gravity_weight", 0.5),
            segment_length: r.value("growth_length", segment_length),
        };
        for (k, p) in [
            ("branch_probability", indicator.branch_probability),
            ("elongation_probability", indicator.elongation_probability),
        ] {
            r.check(k, (0.0..=1.0).contains(&p), "must lie in [0, 1]");
        }
        r.check("gravity_weight", indicator.gravity_weight >= 0.0, "must be nonnegative");
        r.check("growth_length", indicator.segment_length > 0.0, "must be positive");
        let scenario = RootScenario {
            segments,
            segment_length,
            cell,
            p_soil: r.value("p_soil", -2.9429e-2),
            p_collar: r.value("p_collar", -1.2e6),
            indicator,
            steps: r.value("steps", 10usize),
        };
        r.finish()?;
        Ok(scenario)
    }

    pub fn build(&self, exec: Execution) -> Result<RootSimulation> {
        RootSimulation::vertical(self.segments, self.segment_length, self.cell, self.p_soil, self.p_collar, exec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comments_and_blanks() {
        let s = Scenario::parse("# head\n\nmu = 2.5  # inline\n gamma=4\n").unwrap();
        assert_eq!(s.get("mu"), Some("2.5"));
        assert_eq!(s.get("gamma"), Some("4"));
    }

    #[test]
    fn syntax_errors_carry_lines() {
        assert_eq!(
            Scenario::parse("mu = 1\nnonsense\n").unwrap_err(),
            ScenarioError::Syntax { line: 2, msg: "expected `key = value`, got `nonsense`".into() }
        );
        assert!(matches!(Scenario::parse("a = 1\na = 2").unwrap_err(), ScenarioError::Syntax { line: 2, .. }));
    }

    #[test]
    fn every_offending_key_is_listed() {
        let s = Scenario::parse("mu = -1\nradius = big\ncolour = red\nconcentration_tags = 3").unwrap();
        let err = FlowScenario::from_scenario(&s).unwrap_err().to_string();
        for k in ["colour", "mu (must be positive)", "radius (`big`)", "concentration_tags"] {
            assert!(err.contains(k), "{err}");
        }
    }

    #[test]
    fn root_defaults() {
        let r = RootScenario::from_scenario(&Scenario::default()).unwrap();
        assert_eq!(r.segments, 8);
        assert_eq!(r.p_soil, -2.9429e-2);
        assert_eq!(r.p_collar, -1.2e6);
    }
}
