use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use mlswe::harness::config::MeshSource;
use mlswe::harness::{
    basin_mesh, convergence_study, fitted_order, run, setup, statistics_from_dir, weighted_l2, CourantInfo, RunConfig,
    RunOptions,
};
use mlswe::mesh::{build_planar_hex_mesh, build_spherical_mesh, load_mesh, save_mesh, save_mesh_text, weight_relation_residual, Mesh};

#[derive(Parser)]
#[command(name = "mlswe", version, about = "Multilayer rotating shallow water on TRiSK meshes")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate or validate a mesh.
    Mesh(MeshArgs),
    /// Integrate a configuration.
    Run(RunArgs),
    /// Time-step convergence study against an RK4 reference.
    Converge(ConvergeArgs),
    /// Mean flow and SSH variability of a snapshot directory.
    Stats(StatsArgs),
    /// Spectral radius of the rest-state operator and the reference time step.
    Courant(CourantArgs),
}

#[derive(Args)]
struct MeshArgs {
    /// Planar periodic hex mesh: NX NY DC.
    #[arg(long, num_args = 3, value_names = ["NX", "NY", "DC"])]
    planar: Option<Vec<f64>>,
    /// Planar mesh enclosing a basin of --radius with spacing DC.
    #[arg(long, value_name = "DC")]
    basin: Option<f64>,
    #[arg(long, default_value_t = 1_250_000.0)]
    radius: f64,
    /// Spherical mesh by icosahedral refinement level.
    #[arg(long, value_name = "LEVEL")]
    sphere: Option<usize>,
    #[arg(long, default_value_t = 20)]
    lloyd: usize,
    #[arg(long, default_value_t = 6_371_220.0)]
    sphere_radius: f64,
    /// Load and validate an existing mesh file.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Write the mesh here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the text container instead of the binary one.
    #[arg(long)]
    text: bool,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Fixed summation order; reductions are always sequential in this build.
    #[arg(long)]
    deterministic: bool,
    /// Continue from the last snapshot in --out.
    #[arg(long)]
    resume: bool,
}

#[derive(Args)]
struct ConvergeArgs {
    #[arg(long)]
    config: PathBuf,
    /// Comma separated step sizes in seconds; a trailing `c` means multiples of dt_C.
    #[arg(long, value_delimiter = ',')]
    dt_list: Vec<String>,
    /// Reference RK4 step, same syntax.
    #[arg(long, default_value = "0.25c")]
    ref_dt: String,
    /// Horizon overriding the configuration, same syntax.
    #[arg(long)]
    horizon: Option<String>,
    /// Write the table as CSV.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct StatsArgs {
    #[arg(long)]
    snapshots: PathBuf,
    /// Configuration of the run; defaults to config.toml in the snapshot directory.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct CourantArgs {
    /// Mesh file; the configuration's scenario is placed on it.
    #[arg(long)]
    mesh: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Report the Courant number of this step size.
    #[arg(long)]
    dt: Option<f64>,
}

fn main() -> ExitCode {
    // quiet exit when the reader of stdout goes away
    std::panic::set_hook(Box::new(|info| {
        let msg = info.to_string();
        if !msg.contains("Broken pipe") {
            eprintln!("{msg}");
        }
    }));
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let res = match cli.cmd {
        Cmd::Mesh(a) => cmd_mesh(a),
        Cmd::Run(a) => cmd_run(a),
        Cmd::Converge(a) => cmd_converge(a),
        Cmd::Stats(a) => cmd_stats(a),
        Cmd::Courant(a) => cmd_courant(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            match e.downcast_ref::<mlswe::Error>() {
                Some(mlswe::Error::Unstable { .. }) | Some(mlswe::Error::OutCrop { .. }) | Some(mlswe::Error::NonFinite { .. }) => {
                    ExitCode::from(2)
                }
                _ => ExitCode::FAILURE,
            }
        }
    }
}

fn describe(mesh: &Mesh) {
    println!("geometry   {}", mesh.geometry.name());
    println!("cells      {}", mesh.n_cells);
    println!("edges      {}", mesh.n_edges);
    println!("vertices   {}", mesh.n_vertices);
    let de = mesh.d_e.iter().sum::<f64>() / mesh.n_edges as f64;
    println!("mean d_e   {de:.6e}");
    println!("area       {:.6e}", mesh.a_i.iter().sum::<f64>());
    println!("weight res {:.3e}", weight_relation_residual(mesh));
}

fn cmd_mesh(a: MeshArgs) -> anyhow::Result<()> {
    let sources = [a.planar.is_some(), a.basin.is_some(), a.sphere.is_some(), a.input.is_some()];
    if sources.iter().filter(|s| **s).count() != 1 {
        bail!("give exactly one of --planar, --basin, --sphere, --input");
    }
    let mesh = if let Some(p) = &a.planar {
        if p.iter().take(2).any(|v| v.fract() != 0.0 || *v < 0.0) {
            bail!("NX and NY must be non-negative integers");
        }
        build_planar_hex_mesh(p[0] as usize, p[1] as usize, p[2])?
    } else if let Some(dc) = a.basin {
        basin_mesh(dc, a.radius)?
    } else if let Some(level) = a.sphere {
        build_spherical_mesh(level, a.lloyd, a.sphere_radius)?
    } else {
        let p = a.input.as_ref().unwrap();
        load_mesh(p).with_context(|| format!("loading {}", p.display()))?
    };
    describe(&mesh);
    if let Some(out) = &a.out {
        if a.text {
            save_mesh_text(&mesh, out)?;
        } else {
            save_mesh(&mesh, out)?;
        }
        println!("wrote      {}", out.display());
    }
    Ok(())
}

fn load_config(path: &Path) -> anyhow::Result<RunConfig> {
    RunConfig::load(path).with_context(|| format!("reading {}", path.display()))
}

fn cmd_run(a: RunArgs) -> anyhow::Result<()> {
    let mut cfg = load_config(&a.config)?;
    if a.deterministic {
        cfg.deterministic = true;
    }
    if a.resume && a.out.is_none() {
        bail!("--resume needs --out");
    }
    let opts = RunOptions {
        out: a.out.clone(),
        resume: a.resume,
        courant: None,
    };
    let out = run(&cfg, &opts)?;
    let first = &out.records[0];
    let last = out.records.last().unwrap();
    println!("dt_C       {:.6e} s", out.courant.dt_c);
    println!("dt         {:.6e} s (C = {:.3})", out.dt, out.courant.courant(out.dt));
    println!("steps      {}", out.steps);
    println!("energy     {:.9e} -> {:.9e}", first.energy, last.energy);
    println!("mass drift {:.3e}", (last.mass - first.mass) / first.mass);
    println!("max |u|    {:.6e}", last.max_speed);
    println!("wall       {:.3} s", last.wall_seconds);
    Ok(())
}

fn parse_dt(s: &str, dt_c: f64) -> anyhow::Result<f64> {
    let s = s.trim();
    let v = match s.strip_suffix('c') {
        Some(m) => m.parse::<f64>()? * dt_c,
        None => s.parse::<f64>()?,
    };
    if !(v > 0.0) {
        bail!("step size {s} must be positive");
    }
    Ok(v)
}

fn cmd_converge(a: ConvergeArgs) -> anyhow::Result<()> {
    let mut cfg = load_config(&a.config)?;
    let (model, s0) = setup(&cfg)?;
    let dt_c = CourantInfo::of(&model).dt_c;
    if let Some(h) = &a.horizon {
        cfg.time.horizon = parse_dt(h, dt_c)?;
    }
    let dts = a.dt_list.iter().map(|s| parse_dt(s, dt_c)).collect::<anyhow::Result<Vec<_>>>()?;
    if dts.is_empty() {
        bail!("--dt-list is empty");
    }
    let ref_dt = parse_dt(&a.ref_dt, dt_c)?;
    let (ci, rows) = convergence_study(&cfg, &model, &s0, &dts, ref_dt)?;
    let mut table = String::from("dt,courant,error,steps,wall_seconds\n");
    for r in &rows {
        let e = r.error.map_or("nan".to_string(), |e| format!("{e:e}"));
        table.push_str(&format!("{:e},{:.6},{e},{},{:.3}\n", r.dt, r.courant, r.steps, r.wall_seconds));
    }
    print!("{table}");
    println!("# dt_C = {:.6e} s", ci.dt_c);
    if let Some(p) = fitted_order(&rows) {
        println!("# fitted order {p:.3}");
    }
    if let Some(out) = &a.out {
        fs::write(out, table)?;
    }
    Ok(())
}

fn cmd_stats(a: StatsArgs) -> anyhow::Result<()> {
    let cfg_path = a.config.clone().unwrap_or_else(|| a.snapshots.join("config.toml"));
    let cfg = load_config(&cfg_path)?;
    let (model, _) = setup(&cfg)?;
    let st = statistics_from_dir(&model, &a.snapshots)?;
    let mut f = fs::File::create(a.snapshots.join("mean_flow.csv"))?;
    writeln!(f, "layer,edge,mean_u")?;
    let ne = model.mesh.n_edges;
    for (i, u) in st.mean_u.iter().enumerate() {
        writeln!(f, "{},{},{u:e}", i / ne, i % ne)?;
    }
    let mut f = fs::File::create(a.snapshots.join("ssh_stats.csv"))?;
    writeln!(f, "cell,mean_ssh,ssh_rms")?;
    for (i, (m, r)) in st.mean_ssh.iter().zip(&st.ssh_rms).enumerate() {
        writeln!(f, "{i},{m:e},{r:e}")?;
    }
    println!("samples        {}", st.samples);
    println!("|mean u|_L2h   {:.6e}", weighted_l2(&model, &st.mean_u));
    println!("max SSH RMS    {:.6e}", st.ssh_rms.iter().fold(0.0f64, |m, v| m.max(*v)));
    Ok(())
}

fn cmd_courant(a: CourantArgs) -> anyhow::Result<()> {
    let mut cfg = match &a.config {
        Some(p) => load_config(p)?,
        None => RunConfig::default(),
    };
    if let Some(m) = &a.mesh {
        cfg.mesh = MeshSource::File { path: m.clone() };
    } else if a.config.is_none() {
        bail!("give --mesh or --config");
    }
    let (model, _) = setup(&cfg)?;
    let ci = CourantInfo::of(&model);
    println!("|A0|       {:.6e} 1/s", ci.radius);
    println!("dt_C       {:.6e} s", ci.dt_c);
    println!("dt_RK4     {:.6e} s", 8f64.sqrt() * ci.dt_c);
    if let Some(dt) = a.dt {
        println!("C(dt)      {:.6}", ci.courant(dt));
    }
    Ok(())
}
