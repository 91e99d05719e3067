use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use dimerlab::harness::{self, fmt_value, parse_number, Scale, Status, Table};
use dimerlab::kinematics::{collision_map, revival_time, transmission_scan_range};
use dimerlab::momentum_ed::{
    build_two_body_hamiltonian, evolve, momentum_distribution, momentum_eigenstate, Boundary, TwoBodyParams,
};
use dimerlab::Error;

const EXIT_FAILURE: u8 = 1;
const EXIT_VALIDATION: u8 = 2;
const EXIT_BUDGET: u8 = 3;
const EXIT_NUMERICAL: u8 = 4;

#[derive(Parser)]
#[command(name = "dimerlab", version, about = "Defect dynamics in dimerized Bose-Hubbard clusters")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Numeric flag accepting expressions such as `13*pi/16`.
fn number(s: &str) -> Result<f64, String> {
    parse_number(s).map_err(|e| e.to_string())
}

#[derive(Subcommand)]
enum Command {
    /// Transmission through a hopping-rate step, as CSV `k,T,R`.
    Scatter {
        /// Hopping ratio J_B / J_A.
        #[arg(long, value_parser = number)]
        alpha: f64,
        #[arg(long, default_value_t = 512)]
        points: usize,
        #[arg(long, value_parser = number)]
        kmin: Option<f64>,
        #[arg(long, value_parser = number)]
        kmax: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Outgoing momenta and revival time of a monomer-trimer collision.
    Collide {
        #[arg(long, value_parser = number, allow_hyphen_values = true)]
        ka: f64,
        #[arg(long, value_parser = number, allow_hyphen_values = true)]
        kt: f64,
        #[arg(long = "Ja", value_parser = number, default_value = "2")]
        j_a: f64,
        #[arg(long = "Jt", value_parser = number, default_value = "3")]
        j_t: f64,
        #[arg(long = "L", default_value_t = 64)]
        l: usize,
    },
    /// Exact two-defect dynamics in momentum space, as CSV `t,species,k,occupation`.
    TwoBody {
        #[arg(long = "L", default_value_t = 64)]
        l: usize,
        #[arg(long = "Ja", value_parser = number, default_value = "2")]
        j_a: f64,
        #[arg(long = "Jt", value_parser = number, default_value = "3")]
        j_t: f64,
        /// Contact interaction; defaults to 40 max(Ja, Jt).
        #[arg(long = "U", value_parser = number)]
        u: Option<f64>,
        /// 1 for a ring, 0 for an open chain.
        #[arg(long, default_value_t = 1)]
        gamma: u8,
        #[arg(long, value_parser = number, allow_hyphen_values = true)]
        ka: f64,
        #[arg(long, value_parser = number, allow_hyphen_values = true)]
        kt: f64,
        /// Defaults to the revival time.
        #[arg(long, value_parser = number)]
        tmax: Option<f64>,
        #[arg(long, default_value_t = 65)]
        samples: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a configuration file and write its CSV, summary, config and plot script.
    Evolve {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the output directory of the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Reproduce one figure, or all of them.
    Reproduce {
        /// fig2 .. fig10, or `all`.
        figure: String,
        #[arg(long, value_enum, default_value_t = ScaleArg::Desk)]
        scale: ScaleArg,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Write the figure configs instead of running them.
        #[arg(long)]
        emit_configs: bool,
    },
    /// Check configuration files without running them.
    Validate {
        #[arg(long = "config", required = true, num_args = 1..)]
        configs: Vec<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ScaleArg {
    Desk,
    Extended,
}

impl From<ScaleArg> for Scale {
    fn from(s: ScaleArg) -> Self {
        match s {
            ScaleArg::Desk => Scale::Desk,
            ScaleArg::Extended => Scale::Extended,
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::AtTime { source, .. } => exit_code(source),
        Error::Validation(_)
        | Error::Domain(_)
        | Error::OffGrid { .. }
        | Error::InvalidState(_)
        | Error::Cutoff { .. }
        | Error::ThetaIndex { .. }
        | Error::SpaceMismatch
        | Error::DegenerateCollision
        | Error::NoCollision => EXIT_VALIDATION,
        Error::Budget { .. } => EXIT_BUDGET,
        Error::Numerical(_) | Error::SectorViolation => EXIT_NUMERICAL,
        Error::Io(_) => EXIT_FAILURE,
    }
}

fn emit(table: &Table, out: Option<&Path>) -> dimerlab::Result<()> {
    let text = table.to_csv()?;
    match out {
        Some(p) => harness::write_atomic(p, text.as_bytes()),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn scatter(alpha: f64, points: usize, kmin: Option<f64>, kmax: Option<f64>, out: Option<&Path>) -> dimerlab::Result<u8> {
    let step = std::f64::consts::PI / (points + 1) as f64;
    let rows = transmission_scan_range(alpha, points, kmin.unwrap_or(step), kmax.unwrap_or(std::f64::consts::PI - step))?;
    let mut t = Table::new(&["k", "T", "R"]);
    for r in rows {
        t.push(vec![fmt_value(r.k), fmt_value(r.transmission), fmt_value(r.reflection)]);
    }
    emit(&t, out)?;
    Ok(0)
}

fn collide(ka: f64, kt: f64, j_a: f64, j_t: f64, l: usize) -> dimerlab::Result<u8> {
    let (a, b) = collision_map(ka, kt, j_a, j_t)?;
    let tc = revival_time(l, ka, kt, j_a, j_t)?;
    let mut t = Table::new(&["ka_out", "kt_out", "t_c"]);
    t.push(vec![fmt_value(a), fmt_value(b), fmt_value(tc)]);
    emit(&t, None)?;
    Ok(0)
}

#[allow(clippy::too_many_arguments)]
fn two_body(
    l: usize,
    j_a: f64,
    j_t: f64,
    u: Option<f64>,
    gamma: u8,
    ka: f64,
    kt: f64,
    tmax: Option<f64>,
    samples: usize,
    out: Option<&Path>,
) -> dimerlab::Result<u8> {
    if samples < 2 {
        return Err(Error::Domain("need at least 2 samples".into()));
    }
    let params = TwoBodyParams {
        l,
        j_a,
        j_t,
        u: u.unwrap_or_else(|| TwoBodyParams::default_interaction(j_a, j_t)),
        boundary: Boundary::from_gamma(gamma)?,
    };
    let t_max = match tmax {
        Some(t) => t,
        None => revival_time(l, ka, kt, j_a, j_t)?,
    };
    let times: Vec<f64> = (0..samples).map(|i| t_max * i as f64 / (samples - 1) as f64).collect();
    let h = build_two_body_hamiltonian(&params)?;
    let psi0 = momentum_eigenstate(ka, kt, l)?;
    let states = evolve(&psi0, &h, &times)?;
    let mut t = Table::new(&["t", "species", "k", "occupation"]);
    for (time, s) in times.iter().zip(&states) {
        let d = momentum_distribution(s);
        for (species, occ) in [("monomer", &d.monomer), ("trimer", &d.trimer)] {
            for (k, n) in d.k.iter().zip(occ.iter()) {
                t.push(vec![fmt_value(*time), species.into(), fmt_value(*k), fmt_value(*n)]);
            }
        }
    }
    emit(&t, out)?;
    Ok(0)
}

fn read_config(path: &Path) -> dimerlab::Result<harness::RunConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    harness::parse_config(&text)
}

fn status_code(s: Status) -> u8 {
    match s {
        Status::Completed => 0,
        Status::BudgetExhausted { at } => {
            eprintln!("truncation budget exhausted at t = {at}");
            EXIT_BUDGET
        }
    }
}

fn evolve_config(path: &Path, out: Option<&Path>) -> dimerlab::Result<u8> {
    let cfg = read_config(path)?;
    let result = harness::execute(&cfg)?;
    let a = harness::write_run(&cfg, &result, out)?;
    println!("{}", a.csv.display());
    println!("{}", a.summary.display());
    Ok(status_code(result.status))
}

fn reproduce(figure: &str, scale: Scale, out: &Path, emit_configs: bool) -> dimerlab::Result<u8> {
    if emit_configs {
        for (name, text) in harness::config_files(scale)? {
            let p = out.join(name);
            harness::write_atomic(&p, text.as_bytes())?;
            println!("{}", p.display());
        }
        return Ok(0);
    }
    let ids: Vec<&str> = if figure == "all" { harness::FIGURES.to_vec() } else { vec![figure] };
    let mut code = 0;
    for id in ids {
        let b = harness::reproduce(id, scale, out)?;
        println!("{}", b.summary_path.display());
        for (k, v) in b.metrics.entries() {
            println!("  {k} = {v}");
        }
        code = code.max(status_code(b.status()));
    }
    Ok(code)
}

fn validate(configs: &[PathBuf]) -> u8 {
    let mut code = 0;
    for p in configs {
        match read_config(p) {
            Ok(_) => println!("{}: ok", p.display()),
            Err(e) => {
                eprintln!("{}: {e}", p.display());
                code = code.max(exit_code(&e));
            }
        }
    }
    code
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Scatter { alpha, points, kmin, kmax, out } => scatter(alpha, points, kmin, kmax, out.as_deref()),
        Command::Collide { ka, kt, j_a, j_t, l } => collide(ka, kt, j_a, j_t, l),
        Command::TwoBody { l, j_a, j_t, u, gamma, ka, kt, tmax, samples, out } => {
            two_body(l, j_a, j_t, u, gamma, ka, kt, tmax, samples, out.as_deref())
        }
        Command::Evolve { config, out } => evolve_config(&config, out.as_deref()),
        Command::Reproduce { figure, scale, out, emit_configs } => reproduce(&figure, scale.into(), &out, emit_configs),
        Command::Validate { configs } => Ok(validate(&configs)),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
