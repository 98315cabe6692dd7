//! Command-line front end.
//!
//! Exit codes: 0 success (or `equivalent-single-qubit` for `lu`), 2 for I/O,
//! malformed input or a rejected counterexample, 3 for unsupported dims,
//! 10 `not-equivalent`, 11 `consistent-but-unproven`.

use std::ffi::OsString;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::bloch::bloch_from_state;
use crate::counterexamples::{build_ce_unchecked, ce_positive, em1_states, em5_states, scan_ce, scan_maximum, write_scan_csv, CeParams};
use crate::entanglement::entanglement_report;
use crate::error::Error;
use crate::luequiv::{lu_verdict_with, LuOptions, Verdict, DEFAULT_RESTARTS};
use crate::moments::moment;
use crate::sampling::{estimate_moment, moment_from_design, EstimatorConfig, MomentEstimate};
use crate::states::{purity, DensityMatrix};
use crate::subset::Subset;
use crate::CMatrix;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_DIMS: i32 = 3;
pub const EXIT_NOT_EQUIVALENT: i32 = 10;
pub const EXIT_UNPROVEN: i32 = 11;

/// On-disk state: dims plus real and imaginary parts, row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateFile {
    pub dims: Vec<usize>,
    pub rho_re: Vec<Vec<f64>>,
    pub rho_im: Vec<Vec<f64>>,
}

impl StateFile {
    pub fn from_state(rho: &DensityMatrix) -> Self {
        let m = rho.matrix();
        let rows = |f: fn(&Complex64) -> f64| {
            (0..m.nrows())
                .map(|i| (0..m.ncols()).map(|j| f(&m[(i, j)])).collect())
                .collect()
        };
        StateFile {
            dims: rho.dims().to_vec(),
            rho_re: rows(|z| z.re),
            rho_im: rows(|z| z.im),
        }
    }

    pub fn to_state(&self, validate: bool) -> crate::Result<DensityMatrix> {
        let d = self.rho_re.len();
        let well_formed = self.rho_im.len() == d
            && self.rho_re.iter().chain(&self.rho_im).all(|row| row.len() == d);
        if !well_formed {
            return Err(Error::DimensionMismatch("rho_re and rho_im must be square and equal in size".into()));
        }
        let m = CMatrix::from_fn(d, d, |i, j| Complex64::new(self.rho_re[i][j], self.rho_im[i][j]));
        if validate {
            DensityMatrix::new(self.dims.clone(), m)
        } else {
            DensityMatrix::new_unchecked(self.dims.clone(), m)
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "bloch-moments", version, about = "Second-order moments, LU certificates and moment-preserving counterexamples")]
pub struct Cli {
    /// Seed for every random stream.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Machine-readable JSON output.
    #[arg(long, global = true)]
    pub json: bool,
    /// Comparison tolerance.
    #[arg(long, global = true, default_value_t = 1e-10)]
    pub tol: f64,
    /// Skip state validation on load.
    #[arg(long, global = true)]
    pub no_validate: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a state file.
    Gen {
        #[command(subcommand)]
        what: GenKind,
    },
    /// Exact or estimated marginal moments of a state.
    Moments(MomentsArgs),
    /// Compare two states for local-unitary equivalence.
    Lu(LuArgs),
    /// Two-qubit entanglement report.
    Entanglement {
        #[arg(long)]
        state: PathBuf,
    },
    /// Sweep the counterexample family over the unit sphere.
    Scan {
        #[arg(long, default_value_t = 0.05)]
        grid: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write catalog example states.
    Examples {
        which: ExampleKind,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

#[derive(Debug, Subcommand)]
pub enum GenKind {
    /// Rotated-correlation counterexample with parameters (a, b, c).
    Counterexample {
        #[arg(long, allow_hyphen_values = true)]
        a: f64,
        #[arg(long, allow_hyphen_values = true)]
        b: f64,
        #[arg(long, allow_hyphen_values = true)]
        c: f64,
        #[arg(long)]
        out: PathBuf,
        /// Write the state even outside the positivity region.
        #[arg(long)]
        force: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Exact,
    Mc,
    Design,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExampleKind {
    Em1,
    Em5,
}

#[derive(Debug, Args)]
pub struct MomentsArgs {
    #[arg(long)]
    state: PathBuf,
    #[arg(long, value_enum, default_value_t = Mode::Exact)]
    mode: Mode,
    /// Subset such as `1,2`; repeatable. Defaults to every subset.
    #[arg(long)]
    subset: Vec<Subset>,
    #[arg(long, default_value_t = 100_000)]
    settings: usize,
    #[arg(long, default_value_t = 0)]
    shots: usize,
    /// Moment order for mc mode.
    #[arg(long, default_value_t = 2)]
    order: u32,
}

#[derive(Debug, Args)]
pub struct LuArgs {
    #[arg(long)]
    a_state: PathBuf,
    #[arg(long)]
    b_state: PathBuf,
    #[arg(long, default_value_t = DEFAULT_RESTARTS)]
    restarts: usize,
}

/// Failure with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Failure { code: EXIT_INPUT, message: message.into() }
    }

    fn dims(message: impl Into<String>) -> Self {
        Failure { code: EXIT_DIMS, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::NotQubits(_) | Error::DimensionMismatch(_) => Failure::dims(e.to_string()),
            _ => Failure::input(e.to_string()),
        }
    }
}

type CmdResult = std::result::Result<i32, Failure>;

pub fn load_state(path: &Path, validate: bool) -> std::result::Result<DensityMatrix, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    let file: StateFile = serde_json::from_str(&text).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    file.to_state(validate)
        .map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

pub fn save_state(path: &Path, rho: &DensityMatrix) -> std::result::Result<(), Failure> {
    let text = serde_json::to_string_pretty(&StateFile::from_state(rho)).expect("plain data serializes");
    fs::write(path, text + "\n").map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            if code == 0 {
                let _ = write!(out, "{text}");
            } else {
                let _ = write!(err, "{text}");
            }
            return code;
        }
    };
    match dispatch(&cli, out, err) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn dispatch(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    match &cli.command {
        Command::Gen { what: GenKind::Counterexample { a, b, c, out: path, force } } => {
            cmd_gen(cli, (*a, *b, *c), path, *force, out, err)
        }
        Command::Moments(args) => cmd_moments(cli, args, out),
        Command::Lu(args) => cmd_lu(cli, args, out),
        Command::Entanglement { state } => cmd_entanglement(cli, state, out),
        Command::Scan { grid, out: path } => cmd_scan(cli, *grid, path, out),
        Command::Examples { which, out_dir } => cmd_examples(cli, *which, out_dir, out),
    }
}

fn emit(out: &mut dyn Write, text: &str) -> std::result::Result<(), Failure> {
    out.write_all(text.as_bytes())
        .map_err(|e| Failure::input(format!("stdout: {e}")))
}

fn cmd_gen(cli: &Cli, (a, b, c): (f64, f64, f64), path: &Path, force: bool, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    let norm_sq = a * a + b * b + c * c;
    let params = if (norm_sq - 1.0).abs() > 1e-6 {
        let p = CeParams::normalized(a, b, c)?;
        let _ = writeln!(err, "warning: a^2+b^2+c^2 = {norm_sq}; renormalized to ({}, {}, {})", p.a, p.b, p.c);
        p
    } else {
        // Within tolerance: snap exactly onto the sphere.
        CeParams::normalized(a, b, c)?
    };
    let positive = ce_positive(&params)?;
    if !positive && !force {
        return Err(Failure::input(format!(
            "({}, {}, {}) lies outside the positivity region; pass --force to write it anyway",
            params.a, params.b, params.c
        )));
    }
    let rho = build_ce_unchecked(&params);
    save_state(path, &rho)?;
    let text = if cli.json {
        format!(
            "{}\n",
            json!({"out": path.display().to_string(), "a": params.a, "b": params.b, "c": params.c, "positive": positive})
        )
    } else {
        format!(
            "out={}\na={}\nb={}\nc={}\npositive={positive}\n",
            path.display(),
            params.a,
            params.b,
            params.c
        )
    };
    emit(out, &text)?;
    Ok(EXIT_OK)
}

fn requested_subsets(rho: &DensityMatrix, args: &MomentsArgs) -> std::result::Result<Vec<Subset>, Failure> {
    if args.subset.is_empty() {
        return Ok(Subset::all_nonempty(rho.n_particles()));
    }
    args.subset
        .iter()
        .map(|s| {
            Subset::new(s.labels().iter().copied(), rho.n_particles())
                .map_err(|e| Failure::input(e.to_string()))
        })
        .collect()
}

fn cmd_moments(cli: &Cli, args: &MomentsArgs, out: &mut dyn Write) -> CmdResult {
    let rho = load_state(&args.state, !cli.no_validate)?;
    let subsets = requested_subsets(&rho, args)?;
    if args.mode != Mode::Exact && !rho.is_qubits() {
        return Err(Failure::dims(format!("{:?} mode needs qubit dims, got {:?}", args.mode, rho.dims())));
    }
    let mode = match args.mode {
        Mode::Exact => "exact",
        Mode::Mc => "mc",
        Mode::Design => "design",
    };

    let mut rows: Vec<(Subset, f64, Option<MomentEstimate>)> = Vec::new();
    match args.mode {
        Mode::Exact => {
            let bt = bloch_from_state(&rho);
            for s in subsets {
                let r = moment(&bt, &s)?;
                rows.push((s, r, None));
            }
        }
        Mode::Mc => {
            for s in subsets {
                let cfg = EstimatorConfig::new(s.clone(), args.settings)
                    .with_shots(args.shots)
                    .with_order(args.order)
                    .with_seed(cli.seed);
                let e = estimate_moment(&rho, &cfg)?;
                rows.push((s, e.value, Some(e)));
            }
        }
        Mode::Design => {
            let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
            for s in subsets {
                let e = moment_from_design(&rho, &s, args.shots, &mut rng)?;
                rows.push((s, e.value, Some(e)));
            }
        }
    }

    let text = if cli.json {
        let entries: Vec<_> = rows
            .iter()
            .map(|(s, v, e)| match e {
                None => json!({"subset": s.labels(), "value": v}),
                Some(e) => json!({
                    "subset": s.labels(),
                    "value": v,
                    "stderr": e.stderr,
                    "settings": e.settings_used,
                    "shots": e.shots_used,
                }),
            })
            .collect();
        format!("{}\n", json!({"mode": mode, "seed": cli.seed, "moments": entries}))
    } else {
        let mut t = format!("mode={mode}\n");
        if args.mode != Mode::Exact {
            t += &format!("seed={}\nshots={}\n", cli.seed, args.shots);
        }
        for (s, v, e) in &rows {
            t += &format!("moment{s}={v}\n");
            if let Some(e) = e {
                t += &format!("stderr{s}={}\nsettings{s}={}\n", e.stderr, e.settings_used);
            }
        }
        t
    };
    emit(out, &text)?;
    Ok(EXIT_OK)
}

fn cmd_lu(cli: &Cli, args: &LuArgs, out: &mut dyn Write) -> CmdResult {
    let a = load_state(&args.a_state, !cli.no_validate)?;
    let b = load_state(&args.b_state, !cli.no_validate)?;
    if a.dims() != b.dims() {
        return Err(Failure::dims(format!("dims {:?} vs {:?}", a.dims(), b.dims())));
    }
    let opts = LuOptions { tol: cli.tol, restarts: args.restarts, seed: cli.seed };
    let v = lu_verdict_with(&a, &b, &opts)?;
    let text = if cli.json {
        format!(
            "{}\n",
            json!({
                "moments_equal": v.moments_equal,
                "invariants_equal": v.invariants_equal,
                "product_residual": v.product_residual,
                "lower_bound": v.lower_bound,
                "verdict": v.verdict.as_str(),
            })
        )
    } else {
        format!(
            "moments_equal={}\ninvariants_equal={}\nproduct_residual={}\nlower_bound={}\nverdict={}\n",
            v.moments_equal, v.invariants_equal, v.product_residual, v.lower_bound, v.verdict
        )
    };
    emit(out, &text)?;
    Ok(match v.verdict {
        Verdict::EquivalentSingleQubit => EXIT_OK,
        Verdict::NotEquivalent => EXIT_NOT_EQUIVALENT,
        Verdict::ConsistentButUnproven => EXIT_UNPROVEN,
    })
}

fn cmd_entanglement(cli: &Cli, path: &Path, out: &mut dyn Write) -> CmdResult {
    let rho = load_state(path, !cli.no_validate)?;
    if rho.dims() != [2, 2] {
        return Err(Failure::dims(format!("entanglement report needs dims [2, 2], got {:?}", rho.dims())));
    }
    let r = entanglement_report(&rho)?;
    let text = if cli.json {
        format!(
            "{}\n",
            json!({"concurrence": r.concurrence, "eof": r.eof, "negativity": r.negativity, "ppt": r.ppt})
        )
    } else {
        format!(
            "concurrence={}\neof={}\nnegativity={}\nppt={}\n",
            r.concurrence, r.eof, r.negativity, r.ppt
        )
    };
    emit(out, &text)?;
    Ok(EXIT_OK)
}

fn cmd_scan(cli: &Cli, grid: f64, path: &Path, out: &mut dyn Write) -> CmdResult {
    let records = scan_ce(grid)?;
    let file = fs::File::create(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    let mut w = BufWriter::new(file);
    write_scan_csv(&records, &mut w)
        .and_then(|_| w.flush())
        .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    let best = scan_maximum(&records);
    let positive = records.iter().filter(|r| r.positive).count();
    let text = match (cli.json, best) {
        (true, Some(m)) => format!(
            "{}\n",
            json!({"points": records.len(), "positive": positive, "max_eof": m.eof, "a": m.params.a, "b": m.params.b, "c": m.params.c})
        ),
        (true, None) => format!("{}\n", json!({"points": records.len(), "positive": positive})),
        (false, Some(m)) => format!(
            "points={}\npositive={positive}\nmax_eof={}\nmax_a={}\nmax_b={}\nmax_c={}\n",
            records.len(),
            m.eof,
            m.params.a,
            m.params.b,
            m.params.c
        ),
        (false, None) => format!("points={}\npositive={positive}\n", records.len()),
    };
    emit(out, &text)?;
    Ok(EXIT_OK)
}

fn cmd_examples(cli: &Cli, which: ExampleKind, dir: &Path, out: &mut dyn Write) -> CmdResult {
    fs::create_dir_all(dir).map_err(|e| Failure::input(format!("{}: {e}", dir.display())))?;
    let (name, (a, b)) = match which {
        ExampleKind::Em1 => ("em1", em1_states()),
        ExampleKind::Em5 => ("em5", em5_states()),
    };
    let pa = dir.join(format!("{name}_a.json"));
    let pb = dir.join(format!("{name}_b.json"));
    save_state(&pa, &a)?;
    save_state(&pb, &b)?;

    let full = Subset::full(a.n_particles())?;
    let global = |rho: &DensityMatrix| moment(&bloch_from_state(rho), &full);
    let (ga, gb) = (global(&a)?, global(&b)?);
    let (pa_, pb_) = (purity(&a), purity(&b));
    let text = if cli.json {
        format!(
            "{}\n",
            json!({
                "files": [pa.display().to_string(), pb.display().to_string()],
                "global_moment": [ga, gb],
                "purity": [pa_, pb_],
            })
        )
    } else {
        format!(
            "file_a={}\nfile_b={}\nglobal_moment_a={ga}\nglobal_moment_b={gb}\npurity_a={pa_}\npurity_b={pb_}\n",
            pa.display(),
            pb.display()
        )
    };
    emit(out, &text)?;
    Ok(EXIT_OK)
}
