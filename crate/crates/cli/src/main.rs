//! `netgrid`: inspect and refine meshes, run the vessel and root demos.
//!
//! Failures print one line `error[<category>]: <message>` to stderr and exit
//! with status 1. Categories: `io`, `parse`, `unsupported`, `grid`,
//! `scenario`, `solver`, `usage`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use netgrid::io::{read_gmsh_file, write_vtk_file, GmshMesh, IoError};
use netgrid::{
    wavelet, wavelet_square, AffineGeometry, Execution, GeometryType, GlobalFunctionParametrization, GridConfig,
    GridContainer, GridError, GridFactory,
};
use netgrid_solvers::scenario::{FlowScenario, RootScenario, Scenario};
use netgrid_solvers::SolverError;

#[derive(Parser)]
#[command(name = "netgrid", version, about = "Hierarchical simplicial network grids")]
struct Cli {
    /// Run assembly and geometry loops on one thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print dimensions, entity counts, junctions and boundary facets of an MSH file.
    Info {
        mesh: PathBuf,
        /// Grid dimension; by default the highest element dimension in the file.
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long, default_value_t = 3)]
        world_dim: usize,
    },
    /// Refine a mesh uniformly and write the leaf grid as VTK.
    Refine {
        /// MSH file; defaults to the square [-1, 1]^2 when a parametrization is given.
        mesh: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        steps: usize,
        #[arg(long, value_enum)]
        parametrization: Option<Builtin>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Vessel flow with adaptive transport.
    Flow {
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Root water uptake with stochastic growth.
    Roots {
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Builtin {
    /// Damped radial wave over the first two coordinates.
    Wavelet,
}

struct Failure {
    category: &'static str,
    message: String,
}

impl Failure {
    fn new(category: &'static str, message: impl Into<String>) -> Self {
        Failure { category, message: message.into() }
    }
}

impl From<IoError> for Failure {
    fn from(e: IoError) -> Self {
        let category = match &e {
            IoError::Io(_) => "io",
            IoError::Parse { .. } => "parse",
            IoError::Unsupported(_) => "unsupported",
            IoError::Grid(_) | IoError::DataLength { .. } => "grid",
        };
        Failure::new(category, e.to_string())
    }
}

impl From<GridError> for Failure {
    fn from(e: GridError) -> Self {
        Failure::new("grid", e.to_string())
    }
}

impl From<SolverError> for Failure {
    fn from(e: SolverError) -> Self {
        match e {
            SolverError::Io(e) => e.into(),
            SolverError::Grid(e) => e.into(),
            SolverError::Scenario(e) => Failure::new("scenario", e.to_string()),
            e => Failure::new("solver", e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::new("io", e.to_string())
    }
}

type Outcome<T = ()> = Result<T, Failure>;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let exec = if cli.sequential { Execution::Sequential } else { Execution::default() };
    let result = match cli.command {
        Command::Info { mesh, dim, world_dim } => info(&mesh, dim, world_dim).map(|r| print!("{r}")),
        Command::Refine { mesh, steps, parametrization, out } => refine(mesh.as_deref(), steps, parametrization, &out),
        Command::Flow { scenario, out, steps } => flow(&scenario, &out, steps, exec),
        Command::Roots { scenario, out, steps, seed } => roots(&scenario, &out, steps, seed, exec),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error[{}]: {}", f.category, f.message.replace('\n', " "));
            ExitCode::FAILURE
        }
    }
}

/// Highest element dimension among the line and triangle types of an MSH file.
fn detect_dim(path: &Path) -> Outcome<usize> {
    let text = fs::read_to_string(path)?;
    if text.trim().is_empty() {
        return Err(Failure::new("parse", "line 1: empty file"));
    }
    let mut in_elements = false;
    let mut dim = 0;
    for line in text.lines().map(str::trim) {
        match line {
            "$Elements" => in_elements = true,
            "$EndElements" => in_elements = false,
            _ if in_elements => match line.split_whitespace().nth(1) {
                Some("1" | "8") => dim = dim.max(1),
                Some("2" | "9") => dim = dim.max(2),
                _ => {}
            },
            _ => {}
        }
    }
    if dim == 0 {
        // Let the reader report what is wrong with the file.
        read_gmsh_file(path, GridConfig::new(1, 3)?)?;
        return Err(Failure::new("unsupported", "no line or triangle elements"));
    }
    Ok(dim)
}

fn read_mesh(path: &Path, dim: Option<usize>, world_dim: usize) -> Outcome<GmshMesh> {
    let dim = match dim {
        Some(d) => d,
        None => detect_dim(path)?,
    };
    Ok(read_gmsh_file(path, GridConfig::new(dim, world_dim)?)?)
}

fn info(path: &Path, dim: Option<usize>, world_dim: usize) -> Outcome<String> {
    let mesh = read_mesh(path, dim, world_dim)?;
    let g = &mesh.grid;
    let v = g.leaf_view();
    let d = g.dim();
    let mut report = String::new();
    writeln!(report, "dim {d}").unwrap();
    writeln!(report, "world_dim {}", g.world_dim()).unwrap();
    for codim in 0..=d {
        writeln!(report, "codim {codim}: {}", v.size(codim)).unwrap();
    }
    let mut census: BTreeMap<usize, usize> = BTreeMap::new();
    for &f in v.entities(1)? {
        let n = if d == 2 { g.incident_triangles(f)?.len() } else { g.incident_elements(f)?.len() };
        *census.entry(n).or_default() += 1;
    }
    let junctions: usize = census.range(3..).map(|(_, c)| c).sum();
    writeln!(report, "boundary facets: {}", census.get(&1).copied().unwrap_or(0)).unwrap();
    writeln!(report, "junction facets: {junctions}").unwrap();
    for (m, c) in census.range(3..) {
        writeln!(report, "  multiplicity {m}: {c}").unwrap();
    }
    Ok(report)
}

/// Rebuilds a macro grid with every element parametrized by `builtin`
/// composed with its affine map.
fn parametrize(g: &GridContainer, builtin: Builtin) -> Outcome<GridContainer> {
    if g.world_dim() < 3 || g.dim() != 2 {
        return Err(Failure::new("usage", "the wavelet parametrization needs a surface grid in at least 3 dimensions"));
    }
    let v = g.leaf_view();
    let mut f = GridFactory::new(g.config());
    for &x in v.vertices() {
        let p = match builtin {
            Builtin::Wavelet => wavelet(g.vertex_coords(x)?),
        };
        f.insert_vertex(&p)?;
    }
    for &e in v.elements() {
        let corners = g.corners(e)?;
        let idx: Vec<usize> = corners.iter().map(|&c| v.index(c)).collect::<Result<_, _>>()?;
        let flat = AffineGeometry::new(corners.iter().map(|&c| {
            let mut x = g.vertex_coords(c).unwrap().clone();
            x[2] = 0.0;
            x
        }))?;
        let p = GlobalFunctionParametrization::new(flat, |x: &[f64]| wavelet(x));
        f.insert_parametrized_element(GeometryType::triangle(), &idx, Arc::new(p))?;
    }
    Ok(f.create_grid()?)
}

fn refine(mesh: Option<&Path>, steps: usize, builtin: Option<Builtin>, out: &Path) -> Outcome {
    let mut g = match (mesh, builtin) {
        (None, Some(Builtin::Wavelet)) => wavelet_square(1.0)?,
        (None, None) => return Err(Failure::new("usage", "give a mesh file or a parametrization")),
        (Some(path), b) => {
            let m = read_mesh(path, None, 3)?;
            match b {
                Some(b) => parametrize(&m.grid, b)?,
                None => m.grid,
            }
        }
    };
    for _ in 0..steps {
        let leaves = g.leaf_view().elements().to_vec();
        for e in leaves {
            g.mark(1, e);
        }
        g.pre_adapt()?;
        g.adapt()?;
        g.post_adapt()?;
    }
    write_vtk_file(&g.leaf_view(), &[], &[], out)?;
    println!("{} elements written to {}", g.leaf_view().size(0), out.display());
    Ok(())
}

fn load(path: &Path) -> Outcome<Scenario> {
    Ok(Scenario::read(path)?)
}

fn step_file(out: &Path, step: usize) -> PathBuf {
    out.join(format!("step_{step:04}.vtk"))
}

fn flow(path: &Path, out: &Path, steps: Option<usize>, exec: Execution) -> Outcome {
    let mut s = load(path)?;
    if let Some(n) = steps {
        s.set("steps", n);
    }
    let scenario = FlowScenario::from_scenario(&s).map_err(SolverError::from)?;
    let mut sim = scenario.build(exec)?;
    fs::create_dir_all(out)?;
    let mut summary = String::from("step time leaves mass refined coarsened\n");
    let write = |sim: &netgrid_solvers::network::VesselSimulation, step: usize| -> Outcome {
        let radius: Vec<f64> = sim.problem.cells.iter().map(|c| c.radius).collect();
        let cells = [
            ("concentration", &sim.concentration[..]),
            ("pressure", &sim.flow().pressure[..]),
            ("radius", &radius[..]),
        ];
        Ok(write_vtk_file(&sim.view(), &[], &cells, step_file(out, step))?)
    };
    write(&sim, 0)?;
    writeln!(summary, "0 {:.6e} {} {:e} 0 0", sim.time, sim.concentration.len(), sim.mass()).unwrap();
    for step in 1..=scenario.steps {
        let (refined, coarsened) = match scenario.adaptivity {
            Some(a) => {
                let s = sim.adapt(a)?;
                (s.refined, s.coarsened)
            }
            None => (0, 0),
        };
        sim.step(scenario.dt)?;
        write(&sim, step)?;
        writeln!(summary, "{step} {:.6e} {} {:e} {refined} {coarsened}", sim.time, sim.concentration.len(), sim.mass())
            .unwrap();
    }
    fs::write(out.join("summary.txt"), &summary)?;
    print!("{summary}");
    Ok(())
}

fn roots(path: &Path, out: &Path, steps: Option<usize>, seed: Option<u64>, exec: Execution) -> Outcome {
    let mut s = load(path)?;
    if let Some(n) = steps {
        s.set("steps", n);
    }
    if let Some(seed) = seed {
        s.set("seed", seed);
    }
    let scenario = RootScenario::from_scenario(&s).map_err(SolverError::from)?;
    let mut sim = scenario.build(exec)?;
    fs::create_dir_all(out)?;
    let mut summary = String::from("step elements inserted collar_flux uptake\n");
    let write = |sim: &netgrid_solvers::roots::RootSimulation, step: usize| -> Outcome {
        let f = sim.flow();
        let cells = [("pressure", &f.pressure[..]), ("uptake", &f.uptake[..])];
        Ok(write_vtk_file(&sim.grid.leaf_view(), &[], &cells, step_file(out, step))?)
    };
    let record = |summary: &mut String, sim: &netgrid_solvers::roots::RootSimulation, step: usize, inserted: usize| {
        let f = sim.flow();
        writeln!(summary, "{step} {} {inserted} {:e} {:e}", f.pressure.len(), f.collar_flux, f.total_uptake()).unwrap();
    };
    write(&sim, 0)?;
    record(&mut summary, &sim, 0, 0);
    for step in 1..=scenario.steps {
        let grown = sim.grow(&scenario.indicator)?;
        write(&sim, step)?;
        record(&mut summary, &sim, step, grown.inserted.len());
    }
    fs::write(out.join("summary.txt"), &summary)?;
    print!("{summary}");
    Ok(())
}
