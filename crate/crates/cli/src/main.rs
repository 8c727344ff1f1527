use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use bpfem::analysis::{
    bounds_audit, cross_section, error_energy, error_l2, fill_rates, norm_s, ConvergenceRow, Line,
    SECTION_SAMPLES,
};
use bpfem::assembly::{CipVariant, PenaltyLength, StabConfig};
use bpfem::fe_space::{DofMap, ElementSpec};
use bpfem::io::{format_table, write_section_csv, write_table_csv, write_vtk};
use bpfem::mesh::{Mesh, MeshFamily};
use bpfem::problems::{example, BenchmarkCase, DEFAULT_EPSILON};
use bpfem::projection::{clip, complement};
use bpfem::solver::{FixedPointConfig, LinearSolverKind};
use bpfem::Discretization64;

const DEFAULT_LEVELS: [usize; 6] = [5, 9, 17, 33, 65, 129];

#[derive(Parser)]
#[command(
    name = "bpfem",
    version,
    about = "Bound-preserving finite element experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Error table with convergence rates for the smooth benchmark.
    Convergence(RunArgs),
    /// Layer benchmarks: fields, cross-sections and iteration counts.
    Layers(RunArgs),
    /// Mesh statistics.
    MeshInfo(MeshArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    /// Clipped method solved by the fixed-point iteration.
    Bpm,
    /// Linear stabilised method only.
    Cip,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Solver {
    Direct,
    Iterative,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Variant {
    Normal,
    Upwind,
    None,
}

#[derive(Clone, Copy, ValueEnum)]
enum Length {
    Facet,
    Cell,
}

#[derive(Args, Clone)]
struct RunArgs {
    #[arg(long, default_value_t = 1)]
    example: u8,
    /// p1, p2, p3, q1 or q2.
    #[arg(long, default_value = "p1")]
    element: String,
    /// tri-alt, tri-uniform, tri-perturbed or quad [default: tri-alt for
    /// simplices, quad for tensor elements].
    #[arg(long)]
    mesh: Option<String>,
    /// Comma-separated grid points per side.
    #[arg(long, value_delimiter = ',')]
    levels: Option<Vec<usize>>,
    /// Penalty variant [default: per example].
    #[arg(long, value_enum)]
    variant: Option<Variant>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long = "gamma-beta")]
    gamma_beta: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Length squared in the penalty: facet length or mean adjacent cell
    /// diameter.
    #[arg(long = "penalty-length", value_enum, default_value_t = Length::Cell)]
    penalty_length: Length,
    /// Fixed-point damping [default: per example].
    #[arg(long)]
    omega: Option<f64>,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long = "max-iter", default_value_t = 3000)]
    max_iter: usize,
    #[arg(long, value_enum, default_value_t = Method::Bpm)]
    method: Method,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Print aligned text tables.
    #[arg(long)]
    pretty: bool,
    #[arg(long, value_enum, default_value_t = Solver::Direct)]
    solver: Solver,
    /// Diffusion scale.
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    epsilon: f64,
    /// Samples per cross-section.
    #[arg(long, default_value_t = SECTION_SAMPLES)]
    samples: usize,
}

#[derive(Args)]
struct MeshArgs {
    #[arg(long, default_value = "tri-alt")]
    mesh: String,
    #[arg(long, value_delimiter = ',', default_value = "5")]
    levels: Vec<usize>,
}

/// Resolved run parameters.
struct Setup {
    case: BenchmarkCase,
    element: ElementSpec,
    mesh: MeshFamily,
    levels: Vec<usize>,
    stab: StabConfig,
    fixed_point: FixedPointConfig,
    tag: String,
}

impl RunArgs {
    fn setup(&self, name: &str) -> Result<Setup> {
        let case = example(self.example, self.epsilon)?;
        let element: ElementSpec = self.element.parse()?;
        let mesh: MeshFamily = match &self.mesh {
            Some(m) => m.parse()?,
            None if element.cell_kind() == bpfem::mesh::CellKind::Quadrilateral => MeshFamily::Quad,
            None => MeshFamily::TriAlt,
        };
        element.check_mesh(mesh)?;
        let levels = self
            .levels
            .clone()
            .unwrap_or_else(|| DEFAULT_LEVELS.to_vec());
        if levels.is_empty() {
            bail!("--levels must not be empty");
        }
        let mut stab = case.stab_for(element.cell_kind());
        if let Some(v) = self.variant {
            stab.variant = match v {
                Variant::Normal => CipVariant::Normal,
                Variant::Upwind => CipVariant::Upwind,
                Variant::None => CipVariant::None,
            };
        }
        if let Some(g) = self.gamma {
            stab.gamma = g;
        }
        if let Some(g) = self.gamma_beta {
            stab.gamma_beta = g;
        }
        if let Some(a) = self.alpha {
            stab.alpha = a;
        }
        stab.length = match self.penalty_length {
            Length::Facet => PenaltyLength::Facet,
            Length::Cell => PenaltyLength::CellMean,
        };
        stab.validate()?;
        let fixed_point = FixedPointConfig {
            omega: self.omega.unwrap_or_else(|| case.omega_for(&stab)),
            tol: self.tol,
            max_iter: self.max_iter,
            linear_solver: match self.solver {
                Solver::Direct => LinearSolverKind::Direct,
                Solver::Iterative => LinearSolverKind::Iterative,
            },
        };
        fixed_point.validate()?;
        let method = match self.method {
            Method::Bpm => "bpm",
            Method::Cip => "cip",
        };
        let tag = format!(
            "{name}_ex{}_{element}_{}_{method}",
            self.example,
            mesh.tag()
        );
        Ok(Setup {
            case,
            element,
            mesh,
            levels,
            stab,
            fixed_point,
            tag,
        })
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| {
        format!("cannot create {}", path.display())
    })?))
}

fn discretize(setup: &Setup, n: usize) -> Result<Discretization64> {
    let mesh = Arc::new(Mesh::structured(setup.mesh, n)?);
    let dofs = DofMap::new(mesh, setup.element)?;
    Ok(Discretization64::new(
        &setup.case.problem,
        dofs,
        setup.stab,
    )?)
}

/// Clipped and complementary parts for the selected method, with the
/// iteration count (`None` = no convergence).
struct Outcome {
    u_plus: Vec<f64>,
    u_minus: Vec<f64>,
    iterations: Option<usize>,
    increments: usize,
}

fn run_method(disc: &Discretization64, setup: &Setup, method: Method) -> Result<Outcome> {
    match method {
        Method::Bpm => {
            let sol = disc.solve_bound_preserving(&setup.fixed_point)?;
            Ok(Outcome {
                iterations: sol.report.converged.then_some(sol.report.iterations),
                increments: sol.report.increments.len(),
                u_plus: sol.u_plus,
                u_minus: sol.u_minus,
            })
        }
        Method::Cip => {
            let u = disc.solve_linear(setup.fixed_point.linear_solver)?;
            let bx = disc.admissible_box()?;
            let plus = clip(&u, bx);
            let minus = complement(&u, &plus);
            Ok(Outcome {
                u_plus: plus,
                u_minus: minus,
                iterations: Some(0),
                increments: 0,
            })
        }
    }
}

fn run_metadata(
    args: &RunArgs,
    setup: &Setup,
    levels: Vec<serde_json::Value>,
) -> serde_json::Value {
    json!({
        "example": args.example,
        "element": setup.element.to_string(),
        "mesh": setup.mesh.tag(),
        "levels": setup.levels,
        "epsilon": args.epsilon,
        "stabilisation": setup.stab,
        "fixed_point": setup.fixed_point,
        "method": match args.method { Method::Bpm => "bpm", Method::Cip => "cip" },
        "per_level": levels,
    })
}

fn cmd_convergence(args: &RunArgs) -> Result<()> {
    let setup = args.setup("table")?;
    let Some(exact) = setup.case.exact.clone() else {
        bail!("convergence tables need an exact solution (example 1)");
    };
    fs::create_dir_all(&args.out)?;
    let mut rows = Vec::new();
    let mut meta = Vec::new();
    for &n in &setup.levels {
        let t0 = Instant::now();
        let disc = discretize(&setup, n)?;
        let t_assembly = t0.elapsed().as_secs_f64();
        let t1 = Instant::now();
        let out = run_method(&disc, &setup, args.method)?;
        let t_solve = t1.elapsed().as_secs_f64();
        rows.push(ConvergenceRow {
            n,
            iterations: out.iterations,
            err_l2: error_l2(&disc.dofs, &out.u_plus, &exact)?,
            eoc_l2: None,
            err_energy: error_energy(&disc.dofs, &disc.problem, &disc.cip, &out.u_plus, &exact)?,
            eoc_energy: None,
            norm_s_minus: norm_s(&disc.sigma, &out.u_minus),
            eoc_s: None,
        });
        meta.push(json!({
            "n": n,
            "dofs": disc.dofs.num_dofs(),
            "unknowns": disc.num_unknowns(),
            "iterations": out.increments,
            "converged": out.iterations.is_some(),
            "assembly_seconds": t_assembly,
            "solve_seconds": t_solve,
        }));
    }
    fill_rates(&mut rows);
    let table = args.out.join(format!("{}.csv", setup.tag));
    let mut w = create(&table)?;
    write_table_csv(&rows, &mut w)?;
    w.flush()?;
    if args.pretty {
        print!("{}", format_table(&rows));
    } else {
        write_table_csv(&rows, std::io::stdout().lock())?;
    }
    let run = args
        .out
        .join(format!("{}.json", setup.tag.replacen("table", "run", 1)));
    let mut w = create(&run)?;
    serde_json::to_writer_pretty(&mut w, &run_metadata(args, &setup, meta))?;
    w.flush()?;
    Ok(())
}

fn cmd_layers(args: &RunArgs) -> Result<()> {
    let setup = args.setup("layers")?;
    if setup.case.id == 1 {
        bail!("the layers command is for examples 2 and 3");
    }
    fs::create_dir_all(&args.out)?;
    let lines: Vec<Line> = if setup.case.id == 3 {
        vec![Line::Diagonal, Line::Vertical(0.9)]
    } else {
        vec![Line::Diagonal]
    };
    let mut meta = Vec::new();
    let mut itr_rows = Vec::new();
    for &n in &setup.levels {
        let t0 = Instant::now();
        let disc = discretize(&setup, n)?;
        let out = run_method(&disc, &setup, Method::Bpm)?;
        let u_cip = disc.solve_linear(setup.fixed_point.linear_solver)?;
        let elapsed = t0.elapsed().as_secs_f64();
        let label = out
            .iterations
            .map_or_else(|| "NC".to_string(), |i| i.to_string());
        itr_rows.push((n, label));
        let stem = format!(
            "ex{}_{}_{}_N{n}",
            args.example,
            setup.element,
            setup.mesh.tag()
        );
        let field = args.out.join(format!("field_{stem}.vtk"));
        let mut w = create(&field)?;
        write_vtk(
            &disc.dofs,
            &[
                ("u_plus", out.u_plus.as_slice()),
                ("u_minus", out.u_minus.as_slice()),
                ("u_cip", u_cip.as_slice()),
            ],
            &stem,
            &mut w,
        )?;
        w.flush()?;
        for line in &lines {
            for (name, values) in [
                ("u_plus", &out.u_plus),
                ("u_minus", &out.u_minus),
                ("u_cip", &u_cip),
            ] {
                let section = cross_section(&disc.dofs, values, *line, args.samples)?;
                let path = args
                    .out
                    .join(format!("section_{stem}_{}_{name}.csv", line.tag()));
                let mut w = create(&path)?;
                write_section_csv(&section, &mut w)?;
                w.flush()?;
            }
        }
        let audit = bounds_audit(&disc.dofs, &out.u_plus, 10_000, 0)?;
        let cip_audit = bounds_audit(&disc.dofs, &u_cip, 10_000, 0)?;
        meta.push(json!({
            "n": n,
            "dofs": disc.dofs.num_dofs(),
            "unknowns": disc.num_unknowns(),
            "iterations": out.increments,
            "converged": out.iterations.is_some(),
            "bounds_u_plus": audit,
            "bounds_u_cip": cip_audit,
            "seconds": elapsed,
        }));
    }
    let table = args.out.join(format!(
        "table_iterations_{}.csv",
        setup.tag.trim_start_matches("layers_")
    ));
    let mut w = create(&table)?;
    writeln!(w, "N,Itr")?;
    for (n, l) in &itr_rows {
        writeln!(w, "{n},{l}")?;
    }
    w.flush()?;
    if args.pretty {
        println!("{:>5} {:>5}", "N", "Itr");
        for (n, l) in &itr_rows {
            println!("{n:>5} {l:>5}");
        }
    } else {
        println!("N,Itr");
        for (n, l) in &itr_rows {
            println!("{n},{l}");
        }
    }
    let run = args.out.join(format!("run_{}.json", setup.tag));
    let mut w = create(&run)?;
    serde_json::to_writer_pretty(&mut w, &run_metadata(args, &setup, meta))?;
    w.flush()?;
    Ok(())
}

fn cmd_mesh_info(args: &MeshArgs) -> Result<()> {
    let family: MeshFamily = args.mesh.parse()?;
    for &n in &args.levels {
        let mesh = Mesh::structured(family, n)?;
        let (amin, amax) = mesh.angle_range_degrees();
        println!("mesh: {family} N={n}");
        println!("  vertices: {}", mesh.vertices.len());
        println!("  cells: {}", mesh.cells.len());
        println!(
            "  facets: {} ({} interior)",
            mesh.facets.len(),
            mesh.num_interior_facets()
        );
        println!("  min angle: {amin:.2} deg");
        println!("  max angle: {amax:.2} deg");
        println!("  delaunay violations: {}", mesh.delaunay_violations());
        println!("  quasi-uniformity: {:.4}", mesh.quasi_uniformity());
    }
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match &cli.command {
        Command::Convergence(a) => cmd_convergence(a),
        Command::Layers(a) => cmd_layers(a),
        Command::MeshInfo(a) => cmd_mesh_info(a),
    }
}
