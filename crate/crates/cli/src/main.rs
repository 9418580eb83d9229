#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use cpforce::asymptote::format_table;
use cpforce::{
    coeff_set, eval_eps_imag, fit_oscillators, fit_semi_quantum, potential_curve, static_eps, CoeffRow, CpError,
    Database, FitOptions, Init, Molecule, PermittivityModel, QuadratureSettings, SinxDenominator, SpectrumTable,
    StaticEps, Weighting,
};

/// Surfaces tabulated by `coeffs` when no surface is given.
const TABLE_SURFACES: [&str; 4] = ["perfect-conductor", "Au", "Si3N4", "SiNx"];

#[derive(Parser, Debug)]
#[command(name = "cpforce", version, about = "Thermal Casimir-Polder potentials of molecules near planar surfaces")]
struct Cli {
    /// Database root containing materials/ and molecules/ (overrides $CP_DATA_DIR)
    #[arg(long, global = true, value_name = "DIR")]
    data_dir: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Asymptotic power-law coefficients C3, C3 (zero width), C3 (LRT), C4, C3T and phonon C3
    Coeffs(CoeffsArgs),
    /// Potential curve U(z) as CSV
    Potential(PotentialArgs),
    /// Permittivity on the imaginary frequency axis, ε(iξ)
    Eps(EpsArgs),
    /// Molecular polarisability on the imaginary frequency axis
    Alpha(AlphaArgs),
    /// Fit a permittivity model to a spectrum CSV
    Fit(FitArgs),
    /// Check that every database entry parses and is valid
    Doctor,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Scale {
    Log,
    Linear,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum TableFormat {
    Table,
    Json,
    Csv,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum FitModel {
    Oscillators,
    SemiQuantum,
}

#[derive(clap::Args, Debug)]
struct Temperatures {
    /// Environment temperature in K
    #[arg(long = "T", default_value_t = 300.0)]
    t: f64,
    /// Internal temperature of the molecule in K
    #[arg(long = "Tm", default_value_t = 300.0)]
    t_m: f64,
}

#[derive(clap::Args, Debug)]
struct CoeffsArgs {
    /// Every bundled molecule against the four tabulated surfaces
    #[arg(long, conflicts_with_all = ["molecule", "surface"])]
    all: bool,
    /// Molecule id (default: all molecules)
    #[arg(long)]
    molecule: Option<String>,
    /// Surface id (default: perfect-conductor, Au, Si3N4, SiNx)
    #[arg(long)]
    surface: Option<String>,
    #[command(flatten)]
    temps: Temperatures,
    #[arg(long, value_enum, default_value_t = TableFormat::Table)]
    format: TableFormat,
    /// Output file (default: stdout)
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(clap::Args, Debug)]
struct PotentialArgs {
    #[arg(long)]
    molecule: String,
    #[arg(long)]
    surface: String,
    #[command(flatten)]
    temps: Temperatures,
    /// Smallest distance in m
    #[arg(long, default_value_t = 1e-9)]
    z_min: f64,
    /// Largest distance in m
    #[arg(long, default_value_t = 1e-4)]
    z_max: f64,
    #[arg(long, default_value_t = 200)]
    points: usize,
    #[arg(long, value_enum, default_value_t = Scale::Log)]
    scale: Scale,
    /// Include phonon transitions (default: electronic transitions only)
    #[arg(long)]
    with_phonons: bool,
    /// Relative tolerance of every quadrature
    #[arg(long, default_value_t = 1e-8)]
    rel_tol: f64,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(clap::Args, Debug)]
struct AxisGrid {
    /// Explicit imaginary frequencies in rad/s (repeatable or comma separated)
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    xi: Vec<f64>,
    #[arg(long, default_value_t = 1e12)]
    xi_min: f64,
    #[arg(long, default_value_t = 1e18)]
    xi_max: f64,
    #[arg(long, default_value_t = 61)]
    points: usize,
    #[arg(long, value_enum, default_value_t = Scale::Log)]
    scale: Scale,
}

#[derive(clap::Args, Debug)]
struct EpsArgs {
    #[arg(long)]
    material: String,
    /// Denominator convention of the tabulated-Im ε model (printed | lorentzian)
    #[arg(long)]
    sinx_denominator: Option<String>,
    #[command(flatten)]
    grid: AxisGrid,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(clap::Args, Debug)]
struct AlphaArgs {
    #[arg(long)]
    molecule: String,
    /// Internal temperature of the molecule in K
    #[arg(long = "Tm", default_value_t = 300.0)]
    t_m: f64,
    /// Print ½[α(iξ) + α(−iξ)] instead of α(iξ)
    #[arg(long)]
    symmetrised: bool,
    /// Include phonon transitions (default: electronic transitions only)
    #[arg(long)]
    with_phonons: bool,
    #[command(flatten)]
    grid: AxisGrid,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(clap::Args, Debug)]
struct FitArgs {
    /// CSV with header omega_rad_s,re_eps,im_eps
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = FitModel::Oscillators)]
    model: FitModel,
    /// Number of oscillators
    #[arg(long, required_if_eq("model", "oscillators"))]
    n: Option<usize>,
    /// Initial model as material JSON (default: automatic)
    #[arg(long)]
    init: Option<PathBuf>,
    /// Residual weighting: none | relative
    #[arg(long, default_value = "none")]
    weight: String,
    /// Levenberg-Marquardt iteration budget
    #[arg(long, default_value_t = FitOptions::default().max_iterations)]
    max_iterations: usize,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

/// An error with the exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }
}

impl From<CpError> for Failure {
    fn from(e: CpError) -> Self {
        let code = match e {
            CpError::UnknownId(_)
            | CpError::InvalidParameters(_)
            | CpError::Domain(_)
            | CpError::InsufficientData(_)
            | CpError::Io(_)
            | CpError::Parse(_)
            | CpError::PerfectConductorHasNoEps
            | CpError::RealPartUnavailable => 2,
            CpError::NonConvergence(_) => 4,
            _ => 3,
        };
        Self { code, message: e.to_string() }
    }
}

type Outcome = std::result::Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("cpforce: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: Cli) -> Outcome {
    let db = match &cli.data_dir {
        Some(dir) => Database::open(dir)?,
        None => Database::open_default()?,
    };
    match cli.command {
        Command::Coeffs(a) => coeffs(&db, a),
        Command::Potential(a) => potential(&db, a),
        Command::Eps(a) => eps(&db, a),
        Command::Alpha(a) => alpha(&db, a),
        Command::Fit(a) => fit(a),
        Command::Doctor => doctor(&db),
    }
}

fn emit(output: Option<&Path>, text: &str) -> Outcome {
    match output {
        Some(path) => std::fs::write(path, text).map_err(|e| Failure::usage(format!("{}: {e}", path.display()))),
        None => {
            use std::io::Write;
            std::io::stdout().write_all(text.as_bytes()).map_err(|e| Failure::usage(e.to_string()))
        }
    }
}

fn check_temps(t: &Temperatures) -> Outcome {
    if !(t.t.is_finite() && t.t >= 0.0 && t.t_m.is_finite() && t.t_m >= 0.0) {
        return Err(Failure::usage("temperatures must be finite and non-negative"));
    }
    Ok(())
}

fn grid(min: f64, max: f64, points: usize, scale: Scale, what: &str) -> std::result::Result<Vec<f64>, Failure> {
    if points < 2 {
        return Err(Failure::usage("--points must be at least 2"));
    }
    if !(min.is_finite() && max.is_finite() && min < max) {
        return Err(Failure::usage(format!("{what}: the minimum must be strictly below the maximum")));
    }
    let last = (points - 1) as f64;
    let v = match scale {
        Scale::Log => {
            if !(min > 0.0) {
                return Err(Failure::usage(format!("{what}: a log grid needs a positive minimum")));
            }
            (0..points).map(|i| min * (max / min).powf(i as f64 / last)).collect::<Vec<_>>()
        }
        Scale::Linear => (0..points).map(|i| min + (max - min) * i as f64 / last).collect(),
    };
    let mut v = v;
    v[points - 1] = max;
    Ok(v)
}

fn coeffs(db: &Database, a: CoeffsArgs) -> Outcome {
    check_temps(&a.temps)?;
    let molecules = match &a.molecule {
        Some(m) => vec![m.clone()],
        None => db.molecule_ids()?,
    };
    let surfaces: Vec<String> = match &a.surface {
        Some(s) => vec![s.clone()],
        None => TABLE_SURFACES.iter().map(|s| s.to_string()).collect(),
    };
    let mut rows = Vec::new();
    for m in &molecules {
        let mol = db.molecule(m)?;
        for s in &surfaces {
            let surf = db.material(s)?;
            let coeffs = coeff_set(&mol, &surf, a.temps.t, a.temps.t_m)?;
            rows.push(CoeffRow { molecule: m.clone(), surface: s.clone(), coeffs });
        }
    }
    let text = match a.format {
        TableFormat::Table => format_table(&rows),
        TableFormat::Json => serde_json::to_string_pretty(&rows).expect("rows serialise") + "\n",
        TableFormat::Csv => {
            let mut out =
                String::from("molecule,surface,C3_Jm3,C3_zero_width_Jm3,C3_lrt_Jm3,C4_Jm4,C3T_Jm3,C3_phonon_Jm3\n");
            for r in &rows {
                let c = &r.coeffs;
                let _ = writeln!(
                    out,
                    "{},{},{:.14e},{:.14e},{:.14e},{:.14e},{:.14e},{:.14e}",
                    r.molecule, r.surface, c.c3, c.c3_zero_width, c.c3_lrt, c.c4, c.c3t, c.c3_phonon
                );
            }
            out
        }
    };
    emit(a.output.as_deref(), &text)
}

fn select(mol: Molecule, with_phonons: bool) -> Molecule {
    if with_phonons {
        mol
    } else {
        mol.electronic_only()
    }
}

fn potential(db: &Database, a: PotentialArgs) -> Outcome {
    check_temps(&a.temps)?;
    let zs = grid(a.z_min, a.z_max, a.points, a.scale, "z")?;
    if !(a.z_min > 0.0) {
        return Err(Failure::usage("distances must be positive"));
    }
    if !(a.rel_tol > 0.0 && a.rel_tol < 1.0) {
        return Err(Failure::usage("--rel-tol must lie in (0, 1)"));
    }
    let mol = select(db.molecule(&a.molecule)?, a.with_phonons);
    let surf = db.material(&a.surface)?;
    let q = QuadratureSettings { rel_tol: a.rel_tol, ..QuadratureSettings::default() };
    let curve = potential_curve(&mol, &surf, a.temps.t, a.temps.t_m, &zs, &q)?;
    let mut out = String::from("z_m,U_total_J,U_nonres_J,U_res_J\n");
    for (z, r) in zs.iter().zip(&curve) {
        let _ = writeln!(out, "{:.14e},{:.14e},{:.14e},{:.14e}", z, r.total, r.nonresonant, r.resonant);
    }
    emit(a.output.as_deref(), &out)
}

fn axis(g: &AxisGrid) -> std::result::Result<Vec<f64>, Failure> {
    if g.xi.is_empty() {
        return grid(g.xi_min, g.xi_max, g.points, g.scale, "xi");
    }
    if g.xi.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
        return Err(Failure::usage("imaginary frequencies must be finite and non-negative"));
    }
    Ok(g.xi.clone())
}

fn format_value(v: f64) -> String {
    format!("{v:.14e}")
}

fn eps(db: &Database, a: EpsArgs) -> Outcome {
    let xs = axis(&a.grid)?;
    let mut model = db.material(&a.material)?;
    if let Some(d) = &a.sinx_denominator {
        let d: SinxDenominator = d.parse().map_err(|e: CpError| Failure::usage(e.to_string()))?;
        match &mut model {
            PermittivityModel::TabulatedIm(m) => m.denominator = d,
            _ => return Err(Failure::usage("--sinx-denominator applies only to tabulated-im materials")),
        }
    }
    let mut out = String::from("xi_rad_s,value\n");
    for &xi in &xs {
        let value = if model.is_perfect_conductor() {
            "inf".to_string()
        } else if xi == 0.0 {
            match static_eps(&model)? {
                StaticEps::Finite(e) => format_value(e),
                StaticEps::Infinite => "inf".to_string(),
            }
        } else {
            format_value(eval_eps_imag(&model, xi)?)
        };
        let _ = writeln!(out, "{},{}", format_value(xi), value);
    }
    emit(a.output.as_deref(), &out)
}

fn alpha(db: &Database, a: AlphaArgs) -> Outcome {
    if !(a.t_m.is_finite() && a.t_m >= 0.0) {
        return Err(Failure::usage("temperatures must be finite and non-negative"));
    }
    let xs = axis(&a.grid)?;
    let mol = select(db.molecule(&a.molecule)?, a.with_phonons);
    let pol = mol.polarisability(a.t_m);
    let mut out = String::from("xi_rad_s,value\n");
    for &xi in &xs {
        let v = if a.symmetrised { pol.symmetrised(xi) } else { pol.imag_axis(xi) };
        let _ = writeln!(out, "{},{}", format_value(xi), format_value(v));
    }
    emit(a.output.as_deref(), &out)
}

fn fit(a: FitArgs) -> Outcome {
    let weighting: Weighting = a.weight.parse().map_err(|e: CpError| Failure::usage(e.to_string()))?;
    let data = SpectrumTable::from_path(&a.input)?;
    let init = match &a.init {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
            let m: PermittivityModel =
                serde_json::from_str(&text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
            Some(m)
        }
        None => None,
    };
    let opts = FitOptions { weighting, max_iterations: a.max_iterations };
    let report = match a.model {
        FitModel::Oscillators => {
            let n = a.n.ok_or_else(|| Failure::usage("--n is required for oscillator fits"))?;
            let init = match init {
                None => Init::Auto,
                Some(PermittivityModel::Oscillators(s)) => Init::Given(s),
                Some(_) => return Err(Failure::usage("--init must hold an oscillators model")),
            };
            fit_oscillators(&data, n, init, &opts)?
        }
        FitModel::SemiQuantum => {
            let init = match init {
                None => Init::Auto,
                Some(PermittivityModel::SemiQuantum(m)) => Init::Given(m),
                Some(_) => return Err(Failure::usage("--init must hold a semi-quantum model")),
            };
            fit_semi_quantum(&data, init, &opts)?
        }
    };
    emit(a.output.as_deref(), &(report.to_json() + "\n"))?;
    if report.converged {
        Ok(())
    } else {
        Err(Failure { code: 4, message: format!("fit did not converge after {} iterations", report.iterations) })
    }
}

fn doctor(db: &Database) -> Outcome {
    let mut out = String::new();
    let mut bad = 0;
    let _ = writeln!(out, "database: {}", db.root().display());
    for id in db.material_ids()? {
        match db.material(&id).and_then(|m| static_eps(&m).map(|e| (m, e))) {
            Ok((m, e)) => {
                let _ = writeln!(out, "ok   material {id:<20} {:<18} eps(0) = {e}", m.kind());
            }
            Err(e) => {
                bad += 1;
                let _ = writeln!(out, "FAIL material {id:<20} {e}");
            }
        }
    }
    for id in db.molecule_ids()? {
        match db.molecule(&id) {
            Ok(m) => {
                let a0 = m.electronic_only().polarisability(0.0).static_value();
                let _ = writeln!(
                    out,
                    "ok   molecule {id:<20} {} electronic, {} phonon, alpha(0) = {a0:.4e} C2m2/J",
                    m.electronic.len(),
                    m.phonon.len()
                );
            }
            Err(e) => {
                bad += 1;
                let _ = writeln!(out, "FAIL molecule {id:<20} {e}");
            }
        }
    }
    emit(None, &out)?;
    if bad > 0 {
        return Err(Failure::usage(format!("{bad} database entries failed")));
    }
    Ok(())
}
