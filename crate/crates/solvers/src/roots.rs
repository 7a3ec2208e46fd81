//! Root water uptake and random root growth.
//!
//! Axial flow follows Darcy's law with per-element conductance `K_x`; water
//! enters through the root surface at rate `K_r A_r (p_S - p)` with
//! `A_r = 2πrℓ`. The collar end carries a fixed pressure, all tips are
//! closed. Gravity only biases growth directions, never the flow.

use std::collections::HashMap;
use std::f64::consts::PI;

use netgrid::par::{self, Execution};
use netgrid::{Coords, Entity, GeometryType, GridContainer, PersistentId};
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::fv::{junction_coefficients, Connectivity};
use crate::linalg::{self, Row};
use crate::{Result, SolverError};

/// Per-element root properties.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootCell {
    /// Axial conductance.
    pub k_x: f64,
    /// Radial conductivity.
    pub k_r: f64,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RootProblem {
    /// Soil pressure.
    pub p_soil: f64,
    /// Pressure imposed at the collar.
    pub p_collar: f64,
    /// Id of the collar vertex.
    pub collar: PersistentId,
    /// One entry per leaf element.
    pub cells: Vec<RootCell>,
}

impl RootProblem {
    pub fn validate(&self, conn: &Connectivity) -> Result<()> {
        if self.cells.len() != conn.len() {
            return Err(SolverError::InvalidParameter(format!(
                "{} root cells for {} leaf elements",
                self.cells.len(),
                conn.len()
            )));
        }
        if let Some(i) = self.cells.iter().position(|c| !(c.k_x > 0.0 && c.k_r >= 0.0 && c.radius > 0.0)) {
            return Err(SolverError::InvalidParameter(format!("element {i} needs k_x > 0, k_r >= 0 and r > 0")));
        }
        let collar_ends =
            conn.facets.iter().flatten().filter(|e| e.is_boundary() && e.vertex_id == self.collar).count();
        if collar_ends != 1 {
            return Err(SolverError::InvalidParameter(format!(
                "the collar vertex must be the free end of exactly one element, found {collar_ends}"
            )));
        }
        Ok(())
    }

    /// Root surface `2πrℓ` of element `i`.
    pub fn surface(&self, conn: &Connectivity, i: usize) -> f64 {
        2.0 * PI * self.cells[i].radius * conn.lengths[i]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RootFlow {
    pub pressure: Vec<f64>,
    /// `[i][k]` lists `(j, Q_ij)` across end `k`, positive leaving `i`.
    pub pair_flux: Vec<[Vec<(usize, f64)>; 2]>,
    /// Radial inflow per element.
    pub uptake: Vec<f64>,
    /// Flow leaving the root at the collar.
    pub collar_flux: f64,
}

impl RootFlow {
    pub fn total_uptake(&self) -> f64 {
        self.uptake.iter().sum()
    }
}

pub fn solve_root_pressure(problem: &RootProblem, conn: &Connectivity, exec: Execution) -> Result<RootFlow> {
    problem.validate(conn)?;
    let tau: Vec<f64> = problem.cells.iter().zip(&conn.lengths).map(|(c, l)| 2.0 * c.k_x / l).collect();
    let coeff = junction_coefficients(conn, &tau);
    let is_collar =
        |i: usize, k: usize| conn.facets[i][k].is_boundary() && conn.facets[i][k].vertex_id == problem.collar;
    let rows = linalg::assemble(exec, conn.len(), |i| {
        let mut row = Row::default();
        let radial = problem.cells[i].k_r * problem.surface(conn, i);
        let mut diag = radial;
        row.rhs = radial * problem.p_soil;
        for k in 0..2 {
            if is_collar(i, k) {
                diag += tau[i];
                row.rhs += tau[i] * problem.p_collar;
            }
            for &(j, c) in &coeff[i][k] {
                diag += c;
                row.add(j, -c);
            }
        }
        row.add(i, diag);
        row
    });
    let p = linalg::solve(&rows)?;
    let pair_flux = coeff
        .iter()
        .enumerate()
        .map(|(i, ends)| ends.clone().map(|e| e.into_iter().map(|(j, c)| (j, c * (p[i] - p[j]))).collect()))
        .collect();
    let uptake =
        (0..conn.len()).map(|i| problem.cells[i].k_r * problem.surface(conn, i) * (problem.p_soil - p[i])).collect();
    let mut collar_flux = 0.0;
    for i in 0..conn.len() {
        for k in 0..2 {
            if is_collar(i, k) {
                collar_flux += tau[i] * (p[i] - problem.p_collar);
            }
        }
    }
    Ok(RootFlow { pressure: p, pair_flux, uptake, collar_flux })
}

/// What the indicator wants to happen at one element.
#[derive(Debug, Clone, PartialEq)]
pub enum GrowthDecision {
    None,
    /// New segment from `attach` in a fresh, downward-biased direction.
    Branch {
        attach: Entity,
        position: Coords,
    },
    /// New segment continuing the element past its tip `attach`.
    Elongate {
        attach: Entity,
        position: Coords,
    },
}

impl GrowthDecision {
    pub fn new_segment(&self) -> Option<(Entity, &Coords)> {
        match self {
            GrowthDecision::None => None,
            GrowthDecision::Branch { attach, position } | GrowthDecision::Elongate { attach, position } => {
                Some((*attach, position))
            }
        }
    }
}

/// Seeded random growth law. Each element draws from its own stream keyed
/// by (seed, element id, step), so decisions do not depend on visiting
/// order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthIndicator {
    pub seed: u64,
    pub branch_probability: f64,
    pub elongation_probability: f64,
    /// Weight of the downward unit vector added to random directions.
    pub gravity_weight: f64,
    pub segment_length: f64,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

impl GrowthIndicator {
    pub fn validate(&self) -> Result<()> {
        let p_ok = |p: f64| (0.0..=1.0).contains(&p);
        if !p_ok(self.branch_probability) || !p_ok(self.elongation_probability) {
            return Err(SolverError::InvalidParameter("growth probabilities must lie in [0, 1]".into()));
        }
        if !(self.segment_length > 0.0) || !(self.gravity_weight >= 0.0) {
            return Err(SolverError::InvalidParameter(
                "segment length must be positive, gravity weight nonnegative".into(),
            ));
        }
        Ok(())
    }

    pub fn stream(&self, element: PersistentId, step: u64) -> Xoshiro256PlusPlus {
        let key = splitmix64(splitmix64(splitmix64(self.seed) ^ element.raw()) ^ step);
        Xoshiro256PlusPlus::seed_from_u64(key)
    }

    /// Direction of a new branch in `w` dimensions; the last axis points up.
    pub fn branch_direction(&self, rng: &mut impl Rng, w: usize) -> Coords {
        let mut dir: Coords = loop {
            let v: Coords = (0..w).map(|_| rng.random_range(-1.0..=1.0)).collect();
            let n2: f64 = v.iter().map(|x| x * x).sum();
            if n2 > 1e-12 && n2 <= 1.0 {
                break v.iter().map(|x| x / n2.sqrt()).collect();
            }
        };
        dir[w - 1] -= self.gravity_weight;
        let n = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n < 1e-12 {
            // Random draw cancelled the bias exactly; fall back to straight down.
            dir.iter_mut().for_each(|x| *x = 0.0);
            dir[w - 1] = -1.0;
            return dir;
        }
        dir.iter().map(|x| x / n).collect()
    }

    /// Decision for leaf element `i`. The collar never sprouts.
    pub fn evaluate(
        &self,
        grid: &GridContainer,
        conn: &Connectivity,
        i: usize,
        step: u64,
        collar: PersistentId,
    ) -> Result<GrowthDecision> {
        if self.branch_probability <= 0.0 && self.elongation_probability <= 0.0 {
            return Ok(GrowthDecision::None);
        }
        let mut rng = self.stream(conn.ids[i], step);
        let ends = &conn.facets[i];
        let coords = |k: usize| grid.vertex_coords(ends[k].vertex);
        let tip = (0..2).find(|&k| ends[k].is_boundary() && ends[k].vertex_id != collar);
        let elongate: bool = rng.random_bool(self.elongation_probability);
        if let (Some(k), true) = (tip, elongate) {
            let (a, b) = (coords(1 - k)?, coords(k)?);
            let scale = self.segment_length / conn.lengths[i];
            let position = b.iter().zip(a).map(|(b, a)| b + scale * (b - a)).collect();
            return Ok(GrowthDecision::Elongate { attach: ends[k].vertex, position });
        }
        if !rng.random_bool(self.branch_probability) {
            return Ok(GrowthDecision::None);
        }
        let eligible: Vec<usize> = (0..2).filter(|&k| ends[k].vertex_id != collar).collect();
        let k = eligible[rng.random_range(0..eligible.len())];
        let dir = self.branch_direction(&mut rng, grid.world_dim());
        let base = coords(k)?;
        let position = base.iter().zip(&dir).map(|(x, d)| x + self.segment_length * d).collect();
        Ok(GrowthDecision::Branch { attach: ends[k].vertex, position })
    }

    /// Decisions for every leaf element.
    pub fn calculate(
        &self,
        grid: &GridContainer,
        conn: &Connectivity,
        step: u64,
        collar: PersistentId,
        exec: Execution,
    ) -> Result<Vec<GrowthDecision>> {
        par::map_range(exec, conn.len(), |i| self.evaluate(grid, conn, i, step, collar)).into_iter().collect()
    }
}

/// Per-element variables carried through growth.
#[derive(Debug, Clone, PartialEq)]
pub struct RootState {
    pub cells: Vec<RootCell>,
    pub pressure: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GrowthOutcome {
    /// New leaf elements, with the element each one grew from.
    pub inserted: Vec<(Entity, PersistentId)>,
    pub skipped: usize,
}

/// One growth step with no inspection hook.
pub fn grow_grid(
    grid: &mut GridContainer,
    indicator: &GrowthIndicator,
    state: &mut RootState,
    step: u64,
    collar: PersistentId,
    exec: Execution,
) -> Result<GrowthOutcome> {
    grow_grid_with(grid, indicator, state, step, collar, exec, |_, _, _| {})
}

/// One growth step. `inspect` runs after the data transfer and before the
/// new-element markers are cleared.
#[allow(clippy::too_many_arguments)]
pub fn grow_grid_with(
    grid: &mut GridContainer,
    indicator: &GrowthIndicator,
    state: &mut RootState,
    step: u64,
    collar: PersistentId,
    exec: Execution,
    inspect: impl FnOnce(&GridContainer, &RootState, &GrowthOutcome),
) -> Result<GrowthOutcome> {
    indicator.validate()?;
    let (conn, decisions, attach) = {
        let view = grid.leaf_view();
        let conn = Connectivity::new(&view, exec)?;
        if state.cells.len() != conn.len() || state.pressure.len() != conn.len() {
            return Err(SolverError::InvalidParameter("root state does not match the grid".into()));
        }
        // (1) indicator pass
        let decisions = indicator.calculate(grid, &conn, step, collar, exec)?;
        let attach = decisions
            .iter()
            .map(|d| d.new_segment().map(|(v, _)| view.index(v)).transpose())
            .collect::<netgrid::Result<Vec<_>>>()?;
        (conn, decisions, attach)
    };
    // (2) insert the new segments, new vertex first
    let mut spawned_by = Vec::new();
    for (i, (d, a)) in decisions.iter().zip(&attach).enumerate() {
        if let (Some((_, position)), Some(a)) = (d.new_segment(), a) {
            let k = grid.grow_insert_vertex(position)?;
            grid.grow_insert_element(GeometryType::line(), &[k, *a])?;
            spawned_by.push(conn.ids[i]);
        }
    }
    // (3) store variables by id
    let old: Vec<(RootCell, f64)> = state.cells.iter().copied().zip(state.pressure.iter().copied()).collect();
    let stored: HashMap<PersistentId, (RootCell, f64)> = conn.ids.iter().copied().zip(old).collect();
    // (4) grow
    grid.grow()?;
    let report = grid.last_grow_report().clone();
    let parent_of: HashMap<Entity, PersistentId> = report.inserted.iter().map(|&(q, e)| (e, spawned_by[q])).collect();
    let outcome = GrowthOutcome {
        inserted: report.inserted.iter().map(|&(q, e)| (e, spawned_by[q])).collect(),
        skipped: report.skipped.len(),
    };
    // (5) resize and inherit from the preceding element
    let restored = {
        let view = grid.leaf_view();
        view.restore(0, &stored, |e| stored[&parent_of[&e]])?
    };
    state.cells = restored.iter().map(|r| r.0).collect();
    state.pressure = restored.iter().map(|r| r.1).collect();
    inspect(grid, state, &outcome);
    // (6) clear the new-element markers
    grid.post_grow()?;
    Ok(outcome)
}

/// Root grid with its problem data and latest pressure solution.
pub struct RootSimulation {
    pub grid: GridContainer,
    pub problem: RootProblem,
    pub step: u64,
    pub exec: Execution,
    flow: RootFlow,
}

impl RootSimulation {
    pub fn new(grid: GridContainer, problem: RootProblem, exec: Execution) -> Result<Self> {
        let conn = Connectivity::new(&grid.leaf_view(), exec)?;
        let flow = solve_root_pressure(&problem, &conn, exec)?;
        Ok(RootSimulation { grid, problem, step: 0, exec, flow })
    }

    /// A straight vertical root of `n` segments hanging down from the
    /// collar at the origin of `R^3`.
    pub fn vertical(
        n: usize,
        segment_length: f64,
        cell: RootCell,
        p_soil: f64,
        p_collar: f64,
        exec: Execution,
    ) -> Result<Self> {
        let grid = crate::fv::straight_chain(n, &[0.0, 0.0, -segment_length])?;
        let collar = grid.id(grid.factory_vertex(0).expect("chain has vertices"))?;
        let problem = RootProblem { p_soil, p_collar, collar, cells: vec![cell; n] };
        Self::new(grid, problem, exec)
    }

    pub fn flow(&self) -> &RootFlow {
        &self.flow
    }

    /// Runs one growth step and re-solves the pressure on the new grid.
    pub fn grow(&mut self, indicator: &GrowthIndicator) -> Result<GrowthOutcome> {
        let mut state = RootState { cells: self.problem.cells.clone(), pressure: self.flow.pressure.clone() };
        let outcome = grow_grid(&mut self.grid, indicator, &mut state, self.step, self.problem.collar, self.exec)?;
        self.problem.cells = state.cells;
        self.step += 1;
        let conn = Connectivity::new(&self.grid.leaf_view(), self.exec)?;
        self.flow = solve_root_pressure(&self.problem, &conn, self.exec)?;
        Ok(outcome)
    }
}
