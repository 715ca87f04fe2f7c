use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use mqpsh::catalog::{self, Params};
use mqpsh::fields::complex_point;
use mqpsh::hessian::complex_hessian;
use mqpsh::io::{read_field, read_mask, write_field, write_mask};
use mqpsh::qpsh::{
    canonical_pool, classical_qpsh_oracle_with, default_slices, smooth_qpsh_index_sampled, viscosity_falsifier,
    BallOptions, ClassicalOptions, QpshVerdict, Status, SMOOTH_TOL,
};
use mqpsh::scenario::{self, ProbeConfig};
use mqpsh::setgeom::{distance_transform, GridSet};
use mqpsh::supconv::{moreau_envelope_fast, sup_convolve_bruteforce, Kernel};
use mqpsh::Error;

#[derive(Parser)]
#[command(name = "mqpsh", version, about = "Sup-convolutions and q-plurisubharmonicity checks on grids")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file or a bundled scenario by name.
    Run {
        scenario: String,
        /// Directory for the declared outputs and the summary.
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Quadratic sup-convolution of a field.
    Supconv {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        theta: f64,
        #[arg(long)]
        output: PathBuf,
        /// Also write the proper interior as a mask.
        #[arg(long)]
        mask_output: Option<PathBuf>,
        /// Use the brute-force engine.
        #[arg(long)]
        brute: bool,
    },
    /// Complex Hessian of a catalog function at a point.
    Hessian {
        #[arg(long)]
        function: String,
        /// Comma-separated point `x_1,..,x_n,y_1,..,y_n`.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        at: Vec<f64>,
    },
    /// q-psh verdict of a sampled field.
    QpshCheck {
        #[arg(long)]
        q: usize,
        #[arg(long, value_enum, default_value = "all")]
        mode: Mode,
        #[arg(long)]
        input: PathBuf,
        /// TOML overrides of the probe family.
        #[arg(long)]
        probes: Option<PathBuf>,
    },
    /// Euclidean distance to the members of a mask.
    Distxform {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// List the built-in functions.
    Catalog,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Smooth,
    Classical,
    Viscosity,
    All,
}

fn set_threads() -> Result<(), Error> {
    let Ok(v) = std::env::var("MQPSH_THREADS") else { return Ok(()) };
    let n: usize = v
        .trim()
        .parse()
        .map_err(|_| Error::Config { key: "MQPSH_THREADS".into(), message: format!("not a count: `{v}`") })?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config { key: "MQPSH_THREADS".into(), message: e.to_string() })?;
    }
    Ok(())
}

fn print_verdict(label: &str, v: &QpshVerdict) {
    println!("{label}: {}", v.status);
    if let Some(note) = &v.note {
        println!("  note: {note}");
    }
    if let Some(w) = &v.witness {
        println!("[witness.{label}]");
        println!("{w}");
    }
}

fn qpsh_check(q: usize, mode: Mode, input: &Path, probes: Option<&PathBuf>) -> Result<u8, Error> {
    let u = read_field(input)?;
    let n = u.grid().dim_complex();
    let fam = match probes {
        Some(p) => ProbeConfig::parse(&fs::read_to_string(p)?)?.family(n)?,
        None => ProbeConfig::default().family(n)?,
    };
    let mut failed = false;
    if matches!(mode, Mode::Smooth | Mode::All) {
        match smooth_qpsh_index_sampled(&u, SMOOTH_TOL) {
            Ok(r) => {
                let pass = r.q_star <= q || q >= n;
                println!("smooth: {} (max negative eigenvalues {})", if pass { Status::Pass } else { Status::Fail }, r.q_star);
                failed |= !pass;
            }
            Err(e @ Error::NonSmooth { .. }) if mode == Mode::All => println!("smooth: N/A ({e})"),
            Err(e) => return Err(e),
        }
    }
    if matches!(mode, Mode::Classical | Mode::All) {
        let balls = BallOptions::for_dim(n);
        let slices = default_slices(u.grid(), q, &balls);
        let v = classical_qpsh_oracle_with(&u, q, &slices, &canonical_pool(n), &ClassicalOptions::new(balls.balls_per_slice))?;
        print_verdict("classical", &v);
        failed |= !v.passed();
    }
    if matches!(mode, Mode::Viscosity | Mode::All) {
        let v = viscosity_falsifier(&u, q, &fam);
        print_verdict("viscosity", &v);
        failed |= !v.passed();
    }
    Ok(if failed { 2 } else { 0 })
}

fn execute(cmd: Command) -> Result<u8, Error> {
    set_threads()?;
    match cmd {
        Command::Run { scenario: spec, out_dir } => {
            let (s, base) = scenario::load(&spec)?;
            let outcome = scenario::run(&s, &base, &out_dir)?;
            let summary = outcome.summary();
            print!("{summary}");
            fs::create_dir_all(&out_dir)?;
            fs::write(out_dir.join(format!("{}.summary.txt", s.name)), &summary)?;
            Ok(outcome.exit_code() as u8)
        }
        Command::Supconv { input, theta, output, mask_output, brute } => {
            let u = read_field(&input)?;
            let env = if brute {
                sup_convolve_bruteforce(&u, &Kernel::quadratic(theta)?, u.grid())?
            } else {
                moreau_envelope_fast(&u, theta)?
            };
            write_field(&output, &env.values)?;
            if let Some(m) = mask_output {
                write_mask(&m, &GridSet::new(u.grid().clone(), env.proper_interior_mask.clone())?)?;
            }
            println!("proper interior nodes: {}", env.proper_count());
            Ok(0)
        }
        Command::Hessian { function, at } => {
            if at.is_empty() || !at.len().is_multiple_of(2) {
                return Err(Error::Config { key: "at".into(), message: "need 2n coordinates".into() });
            }
            let f = catalog::build(&function, &Params::dim(at.len() / 2))?;
            let h = complex_hessian(|x| f(x), &complex_point(&at), None)?;
            let mut out = std::io::stdout().lock();
            for k in 0..h.n() {
                let row: Vec<String> = (0..h.n()).map(|l| format!("({:.9}, {:.9})", h.get(k, l).re, h.get(k, l).im)).collect();
                writeln!(out, "[{}]", row.join(", "))?;
            }
            writeln!(out, "inertia: {}", h.inertia(h.default_tol()))?;
            Ok(0)
        }
        Command::QpshCheck { q, mode, input, probes } => qpsh_check(q, mode, &input, probes.as_ref()),
        Command::Distxform { input, output } => {
            let set = read_mask(&input)?;
            write_field(&output, &distance_transform(&set)?)?;
            Ok(0)
        }
        Command::Catalog => {
            print!("{}", catalog::catalog_list());
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
