//! Vessel networks: stationary pressure with wall leakage, implicit upwind
//! solute transport with wall exchange, and gradient-driven adaptivity.
//!
//! Unknowns are cell averages on the leaf elements. Every element carries a
//! transmissibility `t = πR⁴/(2μ(2+γ))` per unit length; over half an
//! element this becomes `τ = 2t/ℓ`, and elements meeting at a vertex are
//! coupled by `τ_i τ_j / Σ τ_k` with the sum over all incident elements.

use std::collections::HashMap;
use std::f64::consts::PI;

use netgrid::{Execution, GridContainer, GridView, PersistentId};

use crate::fv::{junction_coefficients, Connectivity};
use crate::linalg::{self, Row};
use crate::{Result, SolverError};

/// `πR⁴/(2μ(2+γ))`.
pub fn element_transmissibility(radius: f64, mu: f64, gamma: f64) -> Result<f64> {
    if !(radius > 0.0) || !(mu > 0.0) {
        return Err(SolverError::InvalidParameter(format!(
            "transmissibility needs R > 0 and mu > 0 (R = {radius}, mu = {mu})"
        )));
    }
    if !(gamma >= 0.0) {
        return Err(SolverError::InvalidParameter(format!("gamma must be nonnegative, got {gamma}")));
    }
    Ok(PI * radius.powi(4) / (2.0 * mu * (2.0 + gamma)))
}

/// Material constants shared by all vessels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VesselParams {
    /// Viscosity.
    pub mu: f64,
    /// Velocity-profile exponent.
    pub gamma: f64,
    /// Wall filtration coefficient.
    pub l_p: f64,
    /// Wall diffusion coefficient.
    pub l_c: f64,
    /// Reflection coefficient.
    pub sigma: f64,
    /// Axial diffusivity.
    pub d_e: f64,
}

impl Default for VesselParams {
    fn default() -> Self {
        VesselParams { mu: 3.0, gamma: 2.0, l_p: 0.0, l_c: 0.0, sigma: 0.0, d_e: 0.0 }
    }
}

impl VesselParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(SolverError::InvalidParameter(what.to_string()));
        if !(self.mu > 0.0) {
            return bad("mu must be positive");
        }
        if !(self.gamma >= 2.0) {
            return bad("gamma must be at least 2");
        }
        if !(0.0..=1.0).contains(&self.sigma) {
            return bad("sigma must lie in [0, 1]");
        }
        if !(self.l_p >= 0.0 && self.l_c >= 0.0 && self.d_e >= 0.0) {
            return bad("l_p, l_c and d_e must be nonnegative");
        }
        Ok(())
    }
}

/// Per-element spatial parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VesselCell {
    pub radius: f64,
    /// Tissue pressure outside the wall.
    pub tissue_pressure: f64,
    /// Tissue concentration outside the wall.
    pub tissue_concentration: f64,
}

impl VesselCell {
    pub fn uniform(radius: f64) -> Self {
        VesselCell { radius, tissue_pressure: 0.0, tissue_concentration: 0.0 }
    }

    pub fn area(&self) -> f64 {
        PI * self.radius * self.radius
    }
}

/// Boundary data keyed by vertex id. Ends without an entry are closed.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct VesselBoundary {
    /// Dirichlet pressure.
    pub outflow: HashMap<PersistentId, f64>,
    /// Inflow velocity into the network.
    pub inflow: HashMap<PersistentId, f64>,
    /// Inflow concentration, a subset of the inflow ends.
    pub concentration: HashMap<PersistentId, f64>,
}

impl VesselBoundary {
    pub fn validate(&self) -> Result<()> {
        if let Some(id) = self.concentration.keys().find(|id| !self.inflow.contains_key(id)) {
            return Err(SolverError::InvalidParameter(format!(
                "concentration given on vertex {id} which is not an inflow end"
            )));
        }
        if let Some(id) = self.outflow.keys().find(|id| self.inflow.contains_key(id)) {
            return Err(SolverError::InvalidParameter(format!("vertex {id} is both inflow and outflow")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VesselProblem {
    pub params: VesselParams,
    /// One entry per leaf element.
    pub cells: Vec<VesselCell>,
    pub boundary: VesselBoundary,
}

impl VesselProblem {
    pub fn validate(&self, conn: &Connectivity) -> Result<()> {
        self.params.validate()?;
        self.boundary.validate()?;
        if self.cells.len() != conn.len() {
            return Err(SolverError::InvalidParameter(format!(
                "{} cells for {} leaf elements",
                self.cells.len(),
                conn.len()
            )));
        }
        if let Some(i) = self.cells.iter().position(|c| !(c.radius > 0.0)) {
            return Err(SolverError::InvalidParameter(format!("radius of element {i} must be positive")));
        }
        Ok(())
    }

    pub fn transmissibilities(&self) -> Result<Vec<f64>> {
        self.cells.iter().map(|c| element_transmissibility(c.radius, self.params.mu, self.params.gamma)).collect()
    }

    fn leakage(&self, conn: &Connectivity, i: usize) -> f64 {
        2.0 * PI * self.cells[i].radius * self.params.l_p * conn.lengths[i]
    }
}

/// Pressure solution with the fluxes derived from it. Fluxes are volume
/// rates, positive when leaving element `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Flow {
    pub pressure: Vec<f64>,
    /// `[i][k]` lists `(j, Q_ij)` across end `k` of element `i`.
    pub pair_flux: Vec<[Vec<(usize, f64)>; 2]>,
    /// Outward flux through boundary ends (zero at interior ends).
    pub boundary_flux: [Vec<f64>; 2],
    /// Outward flux through the vessel wall.
    pub leakage: Vec<f64>,
}

impl Flow {
    /// Net outflow of element `i`; zero for a converged solve.
    pub fn cell_balance(&self, i: usize) -> f64 {
        let pairs: f64 = self.pair_flux[i].iter().flatten().map(|&(_, q)| q).sum();
        pairs + self.boundary_flux[0][i] + self.boundary_flux[1][i] + self.leakage[i]
    }
}

/// Solves the stationary pressure equation on the leaf view. The unknown
/// is the excess over the tissue pressure, so a network in equilibrium with
/// its tissue comes out exactly at rest.
pub fn solve_pressure(problem: &VesselProblem, conn: &Connectivity, exec: Execution) -> Result<Flow> {
    problem.validate(conn)?;
    let t = problem.transmissibilities()?;
    let tau: Vec<f64> = t.iter().zip(&conn.lengths).map(|(t, l)| 2.0 * t / l).collect();
    let coeff = junction_coefficients(conn, &tau);
    let bc = &problem.boundary;
    let tissue = |i: usize| problem.cells[i].tissue_pressure;
    let rows = linalg::assemble(exec, conn.len(), |i| {
        let mut row = Row::default();
        let mut diag = 0.0;
        for (k, end) in conn.facets[i].iter().enumerate() {
            if end.is_boundary() {
                if let Some(&p_d) = bc.outflow.get(&end.vertex_id) {
                    diag += tau[i];
                    row.rhs += tau[i] * (p_d - tissue(i));
                } else if let Some(&v_n) = bc.inflow.get(&end.vertex_id) {
                    row.rhs += v_n * problem.cells[i].area();
                }
            }
            for &(j, c) in &coeff[i][k] {
                diag += c;
                row.add(j, -c);
                row.rhs += c * (tissue(j) - tissue(i));
            }
        }
        diag += problem.leakage(conn, i);
        row.add(i, diag);
        row
    });
    let excess = linalg::solve(&rows)?;
    let pressure = excess.iter().enumerate().map(|(i, q)| tissue(i) + q).collect();
    Ok(fluxes(problem, conn, &tau, &coeff, pressure))
}

fn fluxes(
    problem: &VesselProblem,
    conn: &Connectivity,
    tau: &[f64],
    coeff: &[[Vec<(usize, f64)>; 2]],
    pressure: Vec<f64>,
) -> Flow {
    let n = conn.len();
    let p = &pressure;
    let pair_flux = coeff
        .iter()
        .enumerate()
        .map(|(i, ends)| ends.clone().map(|e| e.into_iter().map(|(j, c)| (j, c * (p[i] - p[j]))).collect()))
        .collect();
    let mut boundary_flux = [vec![0.0; n], vec![0.0; n]];
    for i in 0..n {
        for (k, end) in conn.facets[i].iter().enumerate() {
            if !end.is_boundary() {
                continue;
            }
            boundary_flux[k][i] = if let Some(&p_d) = problem.boundary.outflow.get(&end.vertex_id) {
                tau[i] * (p[i] - p_d)
            } else if let Some(&v_n) = problem.boundary.inflow.get(&end.vertex_id) {
                -v_n * problem.cells[i].area()
            } else {
                0.0
            };
        }
    }
    let leakage = (0..n).map(|i| problem.leakage(conn, i) * (p[i] - problem.cells[i].tissue_pressure)).collect();
    Flow { pressure, pair_flux, boundary_flux, leakage }
}

/// Total solute amount `Σ A_i ℓ_i c_i`.
pub fn total_mass(problem: &VesselProblem, conn: &Connectivity, c: &[f64]) -> f64 {
    problem.cells.iter().zip(&conn.lengths).zip(c).map(|((cell, l), c)| cell.area() * l * c).sum()
}

/// Rows of one implicit Euler step for the solute. Advection is fully
/// upwinded; the wall term acts as a sink for concentrations above the
/// tissue value and for outward filtration.
pub fn transport_system(
    problem: &VesselProblem,
    conn: &Connectivity,
    flow: &Flow,
    c_old: &[f64],
    dt: f64,
    exec: Execution,
) -> Result<Vec<Row>> {
    problem.validate(conn)?;
    if !(dt > 0.0) {
        return Err(SolverError::InvalidParameter(format!("time step must be positive, got {dt}")));
    }
    if c_old.len() != conn.len() || flow.pressure.len() != conn.len() {
        return Err(SolverError::InvalidParameter("state does not match the grid".into()));
    }
    let prm = &problem.params;
    let delta: Vec<f64> =
        problem.cells.iter().zip(&conn.lengths).map(|(cell, l)| 2.0 * prm.d_e * cell.area() / l).collect();
    let diffusion = junction_coefficients(conn, &delta);
    let bc = &problem.boundary;
    Ok(linalg::assemble(exec, conn.len(), |i| {
        let cell = &problem.cells[i];
        let storage = cell.area() * conn.lengths[i] / dt;
        let mut row = Row { entries: Vec::new(), rhs: storage * c_old[i] };
        let mut diag = storage;
        for k in 0..2 {
            for &(j, q) in &flow.pair_flux[i][k] {
                if q > 0.0 {
                    diag += q;
                } else {
                    row.add(j, q);
                }
            }
            for &(j, d) in &diffusion[i][k] {
                diag += d;
                row.add(j, -d);
            }
            let end = &conn.facets[i][k];
            if end.is_boundary() {
                let q = flow.boundary_flux[k][i];
                let c_in = bc.concentration.get(&end.vertex_id).copied();
                if q > 0.0 {
                    diag += q;
                } else {
                    row.rhs -= q * c_in.unwrap_or(0.0);
                }
                if let Some(c_d) = c_in {
                    diag += delta[i];
                    row.rhs += delta[i] * c_d;
                }
            }
        }
        let wall = 2.0 * PI * cell.radius * conn.lengths[i];
        let filtration = prm.l_p * (flow.pressure[i] - cell.tissue_pressure) * (1.0 - prm.sigma);
        diag += wall * (prm.l_c + filtration);
        row.rhs += wall * prm.l_c * cell.tissue_concentration;
        row.add(i, diag);
        row
    }))
}

/// Advances the concentration by one implicit Euler step.
pub fn transport_step(
    problem: &VesselProblem,
    conn: &Connectivity,
    flow: &Flow,
    c_old: &[f64],
    dt: f64,
    exec: Execution,
) -> Result<Vec<f64>> {
    linalg::solve(&transport_system(problem, conn, flow, c_old, dt, exec)?)
}

/// Largest concentration jump to any neighbor, per element.
pub fn max_jumps(conn: &Connectivity, c: &[f64]) -> Vec<f64> {
    conn.facets
        .iter()
        .enumerate()
        .map(|(i, ends)| ends.iter().flat_map(|e| &e.neighbors).map(|&j| (c[i] - c[j]).abs()).fold(0.0, f64::max))
        .collect()
}

/// Marks 1 where the normalized jump reaches `eps_r`, -1 below `eps_c`,
/// else 0. A uniform jump field marks everything for coarsening.
pub fn refinement_indicator(conn: &Connectivity, c: &[f64], eps_r: f64, eps_c: f64) -> Result<Vec<i32>> {
    if !(0.0 <= eps_c && eps_c < eps_r && eps_r <= 1.0) {
        return Err(SolverError::InvalidParameter(format!(
            "indicator thresholds need 0 <= eps_c < eps_r <= 1 (eps_r = {eps_r}, eps_c = {eps_c})"
        )));
    }
    let jumps = max_jumps(conn, c);
    let lo = jumps.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = jumps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(jumps
        .iter()
        .map(|&m| {
            let ratio = if hi > lo { (m - lo) / (hi - lo) } else { 0.0 };
            if ratio >= eps_r {
                1
            } else if ratio < eps_c {
                -1
            } else {
                0
            }
        })
        .collect())
}

/// Indicator settings of the adaptive loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Adaptivity {
    pub eps_r: f64,
    pub eps_c: f64,
    /// No element is refined beyond this level.
    pub max_level: usize,
}

impl Default for Adaptivity {
    fn default() -> Self {
        Adaptivity { eps_r: 0.3, eps_c: 0.05, max_level: 2 }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AdaptSummary {
    pub refined: usize,
    pub coarsened: usize,
}

/// Grid, problem and concentration evolving together under adaptation.
pub struct VesselSimulation {
    pub grid: GridContainer,
    pub problem: VesselProblem,
    pub concentration: Vec<f64>,
    pub time: f64,
    pub exec: Execution,
    conn: Connectivity,
    flow: Flow,
}

#[derive(Clone, Copy)]
struct CellState {
    cell: VesselCell,
    c: f64,
    length: f64,
}

impl VesselSimulation {
    pub fn new(grid: GridContainer, problem: VesselProblem, concentration: Vec<f64>, exec: Execution) -> Result<Self> {
        let conn = Connectivity::new(&grid.leaf_view(), exec)?;
        if concentration.len() != conn.len() {
            return Err(SolverError::InvalidParameter("one concentration per leaf element expected".into()));
        }
        let flow = solve_pressure(&problem, &conn, exec)?;
        Ok(VesselSimulation { grid, problem, concentration, time: 0.0, exec, conn, flow })
    }

    pub fn connectivity(&self) -> &Connectivity {
        &self.conn
    }

    pub fn flow(&self) -> &Flow {
        &self.flow
    }

    pub fn view(&self) -> GridView<'_> {
        self.grid.leaf_view()
    }

    pub fn mass(&self) -> f64 {
        total_mass(&self.problem, &self.conn, &self.concentration)
    }

    pub fn step(&mut self, dt: f64) -> Result<()> {
        self.concentration = transport_step(&self.problem, &self.conn, &self.flow, &self.concentration, dt, self.exec)?;
        self.time += dt;
        Ok(())
    }

    /// Marks by the indicator, adapts, moves data by id and re-solves the
    /// pressure. New children inherit their father's values; a coarsened
    /// father receives the mass-weighted mean of its children.
    pub fn adapt(&mut self, settings: Adaptivity) -> Result<AdaptSummary> {
        let marks = refinement_indicator(&self.conn, &self.concentration, settings.eps_r, settings.eps_c)?;
        let mut summary = AdaptSummary::default();
        for (&e, &m) in self.conn.elements.iter().zip(&marks) {
            let m = if m > 0 && self.grid.level(e) >= settings.max_level { 0 } else { m };
            self.grid.mark(m, e);
        }
        let old: Vec<CellState> = (0..self.conn.len())
            .map(|i| CellState { cell: self.problem.cells[i], c: self.concentration[i], length: self.conn.lengths[i] })
            .collect();
        let stored = self.view().store(0, &old)?;
        self.grid.pre_adapt()?;
        let coarse = self.coarsened_fathers(&old)?;
        self.grid.adapt()?;
        summary.refined =
            self.conn.elements.iter().filter(|&&e| self.grid.contains(e) && !self.grid.is_leaf(e)).count();
        summary.coarsened = coarse.len();
        let view = self.grid.leaf_view();
        let mut missing = None;
        let restored = view.restore(0, &stored, |e| {
            let lookup = |x| -> Option<CellState> {
                let id = self.grid.id(x).ok()?;
                coarse.get(&id).or_else(|| stored.get(&self.grid.id(self.grid.father(x).ok()??).ok()?)).copied()
            };
            lookup(e).unwrap_or_else(|| {
                missing = Some(e);
                CellState { cell: VesselCell::uniform(1.0), c: 0.0, length: 0.0 }
            })
        })?;
        if let Some(e) = missing {
            return Err(SolverError::InvalidParameter(format!("no data could be transferred to element {e:?}")));
        }
        drop(view);
        self.grid.post_adapt()?;
        self.problem.cells = restored.iter().map(|s| s.cell).collect();
        self.concentration = restored.iter().map(|s| s.c).collect();
        self.conn = Connectivity::new(&self.grid.leaf_view(), self.exec)?;
        self.flow = solve_pressure(&self.problem, &self.conn, self.exec)?;
        Ok(summary)
    }

    fn coarsened_fathers(&self, old: &[CellState]) -> Result<HashMap<PersistentId, CellState>> {
        let mut groups: HashMap<PersistentId, (f64, f64, f64, VesselCell)> = HashMap::new();
        for (i, &e) in self.conn.elements.iter().enumerate() {
            if !self.grid.might_vanish(e)? {
                continue;
            }
            let father = self.grid.father(e)?.expect("vanishing elements have fathers");
            let s = &old[i];
            let vol = s.cell.area() * s.length;
            let g = groups.entry(self.grid.id(father)?).or_insert((0.0, 0.0, 0.0, s.cell));
            g.0 += vol * s.c;
            g.1 += vol;
            g.2 += s.length;
            g.3.radius = s.cell.radius;
        }
        let mut out = HashMap::new();
        for (id, (amount, vol, length, mut cell)) in groups {
            // Volume-weighted radius keeps the father's volume equal to the
            // children's, so the mean below conserves mass.
            cell.radius = (vol / (PI * length)).sqrt();
            out.insert(id, CellState { cell, c: amount / vol, length });
        }
        Ok(out)
    }
}
