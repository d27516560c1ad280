//! `duni`: batch front end for discrete uniformization.
//!
//! Machine-readable output (JSON or CSV) goes to standard output or `--out`
//! files; human commentary goes to standard error. Exit codes: 0 success,
//! 1 I/O or parse problem, 2 solver or math error, 3 failed verification.

mod presets;
mod verify;

use clap::{Parser, Subcommand, ValueEnum};
use duni_core::io;
use duni_core::surfaces::{genus2_recovery_study, torus_convergence_study, StudyReport};
use duni_core::trigeom::Geometry;
use duni_core::uniformize::{
    uniformize_euclidean, uniformize_hyperbolic, SolveError, SolveMode, SolveOptions,
};
use presets::{parse_resolutions, parse_surface, SurfacePreset};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "duni", version, about = "Discrete uniformization of closed triangle meshes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum GeometryArg {
    Euclidean,
    Hyperbolic,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Newton,
    Flow,
}

#[derive(Subcommand)]
enum Command {
    /// Solve K(u) = 0 for a mesh read from TML or OFF.
    Uniformize {
        /// Input mesh (.tml, or .off with chordal lengths).
        #[arg(long = "in")]
        input: PathBuf,
        /// Output JSON report.
        #[arg(long)]
        out: PathBuf,
        /// Output TML with the uniformized (scaled) lengths; defaults to the
        /// report path with extension .tml.
        #[arg(long)]
        out_mesh: Option<PathBuf>,
        /// Metric geometry; inferred from the genus when omitted
        /// (1 -> euclidean, >= 2 -> hyperbolic).
        #[arg(long)]
        geometry: Option<GeometryArg>,
        #[arg(long, value_enum, default_value_t = ModeArg::Newton)]
        mode: ModeArg,
        /// Curvature tolerance |K|_inf.
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        max_iter: Option<usize>,
    },
    /// Run the self-contained verification suites (deterministic per seed).
    Verify {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Test-build hook: inject a known fault and expect the suites to
        /// catch it (e.g. `jacobian-sign`).
        #[arg(long)]
        fault: Option<String>,
    },
    /// Convergence or recovery study over a preset surface; emits CSV.
    Study {
        /// Surface preset: `torus:amp=0.05[,beta=0.01]` or `genus2[:amp=0.05]`.
        #[arg(long)]
        surface: String,
        /// Comma-separated resolutions: lattice sizes for the torus,
        /// subdivision levels (`k0`, `k0+1`, ... allowed) for genus2.
        #[arg(long)]
        res: String,
        /// Write the CSV here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = ModeArg::Newton)]
        mode: ModeArg,
        #[arg(long)]
        tol: Option<f64>,
        /// Torus studies pass when the fitted slope reaches this value.
        #[arg(long, default_value_t = 0.9)]
        slope_threshold: f64,
    },
    /// Generate a preset surface mesh as TML.
    MeshGen {
        #[arg(long)]
        surface: String,
        /// A single resolution (lattice size or subdivision level).
        #[arg(long)]
        res: String,
        /// Output path; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact isoperimetric constant of a mesh's edge graph (V <= 22).
    Isoperimetric {
        #[arg(long = "in")]
        input: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Uniformize { input, out, out_mesh, geometry, mode, tol, max_iter } => {
            cmd_uniformize(&input, &out, out_mesh.as_deref(), geometry, mode, tol, max_iter)
        }
        Command::Verify { seed, fault } => cmd_verify(seed, fault.as_deref()),
        Command::Study { surface, res, out, mode, tol, slope_threshold } => {
            cmd_study(&surface, &res, out.as_deref(), mode, tol, slope_threshold)
        }
        Command::MeshGen { surface, res, out } => cmd_mesh_gen(&surface, &res, out.as_deref()),
        Command::Isoperimetric { input } => cmd_isoperimetric(&input),
    };
    ExitCode::from(code)
}

fn solve_error_code(err: &SolveError) -> &'static str {
    match err {
        SolveError::WrongGenus { .. } => "WrongGenus",
        SolveError::GeometryMismatch { .. } => "GeometryMismatch",
        SolveError::SolverDiverged(_) => "SolverDiverged",
        SolveError::RegularityLost(_) => "RegularityLost",
        SolveError::Mesh(_) => "MeshError",
        SolveError::BadOptions(_) => "BadOptions",
    }
}

fn read_mesh(
    path: &Path,
    geometry: Option<GeometryArg>,
) -> Result<duni_core::MeshMetric, (u8, String)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| (1u8, format!("cannot read {}: {e}", path.display())))?;
    let is_off = path
        .extension()
        .is_some_and(|ext| ext.eq_ignore_ascii_case("off"))
        || text.trim_start().starts_with("OFF");
    // Parse with a provisional tag, then re-tag once the genus is known.
    let provisional = if is_off {
        io::parse_off(&text, Geometry::Euclidean)
    } else {
        io::parse_tml(&text, Geometry::Euclidean)
    };
    let mesh = provisional.map_err(|e| match e {
        io::IoError::Parse { .. } | io::IoError::Io(_) => (1u8, e.to_string()),
        io::IoError::Mesh(m) => (2u8, format!("MeshError: {m}")),
    })?;
    let tag = match geometry {
        Some(GeometryArg::Euclidean) => Geometry::Euclidean,
        Some(GeometryArg::Hyperbolic) => Geometry::Hyperbolic,
        None => {
            if mesh.triangulation().genus() >= 2 {
                Geometry::Hyperbolic
            } else {
                Geometry::Euclidean
            }
        }
    };
    if tag == mesh.geometry() {
        return Ok(mesh);
    }
    duni_core::MeshMetric::new(mesh.triangulation().clone(), mesh.lengths().to_vec(), tag)
        .map_err(|e| (2u8, format!("MeshError: {e}")))
}

fn solve_options(mode: ModeArg, tol: Option<f64>, max_iter: Option<usize>) -> SolveOptions {
    let mut opts = SolveOptions::default();
    if let Some(t) = tol {
        opts.tol_curvature = t;
    }
    if let Some(m) = max_iter {
        opts.max_iterations = m;
    }
    opts.mode = match mode {
        ModeArg::Newton => SolveMode::Newton,
        ModeArg::Flow => SolveMode::Flow,
    };
    opts
}

#[allow(clippy::too_many_arguments)]
fn cmd_uniformize(
    input: &Path,
    out: &Path,
    out_mesh: Option<&Path>,
    geometry: Option<GeometryArg>,
    mode: ModeArg,
    tol: Option<f64>,
    max_iter: Option<usize>,
) -> u8 {
    let mesh = match read_mesh(input, geometry) {
        Ok(m) => m,
        Err((code, msg)) => {
            eprintln!("error: {msg}");
            return code;
        }
    };
    let opts = solve_options(mode, tol, max_iter);
    let result = match mesh.geometry() {
        Geometry::Hyperbolic => uniformize_hyperbolic(&mesh, &opts),
        _ => uniformize_euclidean(&mesh, &opts),
    };
    let report = match result {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {}: {e}", solve_error_code(&e));
            return 2;
        }
    };
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    if let Err(e) = std::fs::write(out, json) {
        eprintln!("error: cannot write {}: {e}", out.display());
        return 1;
    }
    let scaled = match duni_core::conformal::scale_lengths(&mesh, &report.u) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: MeshError: {e}");
            return 2;
        }
    };
    let mesh_path = out_mesh
        .map(Path::to_path_buf)
        .unwrap_or_else(|| out.with_extension("tml"));
    if mesh_path == input {
        eprintln!(
            "error: scaled-mesh output {} would overwrite the input; pass --out-mesh",
            mesh_path.display()
        );
        return 1;
    }
    if let Err(e) = std::fs::write(&mesh_path, io::write_tml(&scaled)) {
        eprintln!("error: cannot write {}: {e}", mesh_path.display());
        return 1;
    }
    eprintln!(
        "converged in {} iterations, |K| = {:.3e}, report {}, scaled mesh {}",
        report.iterations,
        report.residual_history.last().unwrap(),
        out.display(),
        mesh_path.display()
    );
    0
}

fn cmd_verify(seed: u64, fault: Option<&str>) -> u8 {
    let fault = match fault {
        None => None,
        Some(name) => {
            if !cfg!(debug_assertions) {
                eprintln!("error: --fault is a test-build hook, not available in release builds");
                return 1;
            }
            match verify::Fault::parse(name) {
                Some(f) => Some(f),
                None => {
                    eprintln!("error: unknown fault '{name}'");
                    return 1;
                }
            }
        }
    };
    let results = verify::run_all(seed, fault);
    let mut all_pass = true;
    for line in &results {
        println!("{}", serde_json::to_string(line).expect("suite line serializes"));
        all_pass &= line.status == "pass";
    }
    if all_pass {
        eprintln!("all {} suites passed (seed {seed})", results.len());
        0
    } else {
        eprintln!("verification FAILED (seed {seed})");
        3
    }
}

fn write_csv(report: &StudyReport, out: Option<&Path>) -> Result<(), String> {
    let mut csv = String::from("resolution,h,error,residual,runtime_ms\n");
    for r in &report.rows {
        csv.push_str(&format!(
            "{},{:.16e},{:.16e},{:.16e},{:.16e}\n",
            r.resolution, r.h, r.error, r.residual, r.runtime_ms
        ));
    }
    match out {
        Some(path) => std::fs::write(path, csv).map_err(|e| e.to_string()),
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}

fn cmd_study(
    surface: &str,
    res: &str,
    out: Option<&Path>,
    mode: ModeArg,
    tol: Option<f64>,
    slope_threshold: f64,
) -> u8 {
    let preset = match parse_surface(surface) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    let resolutions = match parse_resolutions(res) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    let opts = solve_options(mode, tol, None);
    match preset {
        SurfacePreset::Torus(torus) => {
            let report =
                match torus_convergence_study(&torus, &resolutions, &Default::default(), &opts) {
                    Ok(r) => r,
                    Err(e) => {
                        eprintln!("error: {e}");
                        return 2;
                    }
                };
            if let Err(e) = write_csv(&report, out) {
                eprintln!("error: {e}");
                return 1;
            }
            match report.slope {
                Some(slope) => {
                    eprintln!("slope = {slope:.4} (threshold {slope_threshold})");
                    if slope >= slope_threshold {
                        0
                    } else {
                        eprintln!("convergence slope below threshold");
                        2
                    }
                }
                None => {
                    eprintln!("slope not applicable: errors at solver precision");
                    0
                }
            }
        }
        SurfacePreset::Genus2 { amplitude } => {
            let report = match genus2_recovery_study(&resolutions, amplitude, &opts) {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("error: {e}");
                    return 2;
                }
            };
            if let Err(e) = write_csv(&report, out) {
                eprintln!("error: {e}");
                return 1;
            }
            let max_err = report.rows.iter().map(|r| r.error).fold(0.0f64, f64::max);
            eprintln!("max recovery error = {max_err:.3e}");
            if max_err <= 1e-8 {
                0
            } else {
                eprintln!("recovery error above 1e-8");
                2
            }
        }
    }
}

fn cmd_mesh_gen(surface: &str, res: &str, out: Option<&Path>) -> u8 {
    let preset = match parse_surface(surface) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    let resolutions = match parse_resolutions(res) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    if resolutions.len() != 1 {
        eprintln!("error: mesh-gen takes exactly one resolution, got {res}");
        return 1;
    }
    let mesh = match preset.generate_mesh(resolutions[0]) {
        Ok(m) => m,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let text = io::write_tml(&mesh);
    match out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, text) {
                eprintln!("error: cannot write {}: {e}", path.display());
                return 1;
            }
        }
        None => print!("{text}"),
    }
    0
}

fn cmd_isoperimetric(input: &Path) -> u8 {
    let mesh = match read_mesh(input, None) {
        Ok(m) => m,
        Err((code, msg)) => {
            eprintln!("error: {msg}");
            return code;
        }
    };
    let graph = duni_core::conformal::edge_graph(&mesh);
    match duni_core::graph::brute_force_isoperimetric_constant(&graph, &mesh.lengths().to_vec()) {
        Ok(result) => {
            let line = serde_json::json!({
                "constant": result.constant,
                "extremal_subset": result.extremal,
            });
            println!("{line}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}
