use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use geoknot::complex::{assemble, check_acyclic, dump_matrices, AcyclicTolerances};
use geoknot::invariant::{compute_invariant, invariant_multi_sample, InvariantOptions, InvariantResult, DEFAULT_SPREAD_TOLERANCE};
use geoknot::lift::{deficit_angles, sample_general_position, validate_lift, SamplingConfig, DEFAULT_LIFT_TOLERANCE};
use geoknot::moves::{apply_move, random_move_sequence, MoveLog, MoveOutcome, State};
use geoknot::pseudotriangulation::validate_knot_conditions;
use geoknot::{build_bdaa_local, build_fixture, local_ratio_check, parse_tkf, write_tkf, FixtureKind, LiftedComplex, Realization, Representation};

#[derive(Parser, Debug)]
#[command(name = "geoknot", version, about = "Euclidean knot invariant from pseudotriangulations")]
struct Cli {
    /// Tolerance override for the command's main check.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// RNG seed for sampling realizations and moves.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Number of realization samples or random configurations.
    #[arg(long, global = true)]
    samples: Option<usize>,
    /// Rotation angle; overrides the angle of a scalar representation.
    #[arg(long, global = true)]
    phi: Option<f64>,
    /// Output file.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// More detail in reports.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check structure, knot conditions and the lift.
    Validate { file: PathBuf },
    /// Evaluate I(K) on several realizations with the factor breakdown.
    Invariant { file: PathBuf },
    /// Report residuals, symmetry and ranks of the complex.
    CheckComplex {
        file: PathBuf,
        /// Print the matrices A3, A2, A1.
        #[arg(long)]
        dump_matrices: bool,
    },
    /// Replay a move log or apply random moves, re-verifying I(K) after each move.
    ApplyMoves {
        file: PathBuf,
        /// Move log (JSON) to replay instead of drawing random moves.
        #[arg(long)]
        log: Option<PathBuf>,
        /// Number of random bulk moves.
        #[arg(long, default_value_t = 20)]
        bulk: usize,
        /// Number of random knot moves attempted.
        #[arg(long, default_value_t = 2)]
        knot: usize,
        /// Where to write the log of the moves drawn.
        #[arg(long)]
        log_out: Option<PathBuf>,
    },
    /// Check the torsion ratio of the knot 1→2 move against its closed form.
    LocalRatio,
    /// Write a fixture in TKF format.
    BuildFixture {
        /// `unknot-join` or `unknot-loop`.
        kind: String,
        /// Cycle lengths: `n m` for the join, `n` for the loop fixture.
        sizes: Vec<usize>,
        /// Also store a sampled realization (seeded by --seed).
        #[arg(long)]
        with_realization: bool,
    },
}

/// Settings shared by the commands.
#[derive(Clone, Debug)]
struct RunConfig {
    tol: Option<f64>,
    seed: u64,
    samples: Option<usize>,
    phi: Option<f64>,
    out: Option<PathBuf>,
    verbose: bool,
}

impl RunConfig {
    fn from_cli(cli: &Cli) -> Result<Self> {
        if let Some(t) = cli.tol {
            if !(t > 0.0) {
                bail!("--tol must be positive (got {t})");
            }
        }
        if cli.samples == Some(0) {
            bail!("--samples must be at least 1");
        }
        Ok(Self { tol: cli.tol, seed: cli.seed, samples: cli.samples, phi: cli.phi, out: cli.out.clone(), verbose: cli.verbose })
    }
}

/// Decimal with 15 significant digits.
fn num(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let mag = x.abs().log10().floor() as i32;
    if (-5..15).contains(&mag) {
        format!("{:.*}", (14 - mag).max(0) as usize, x)
    } else {
        format!("{x:.14e}")
    }
}

fn sci(x: f64) -> String {
    format!("{x:.3e}")
}

fn load(path: &Path, cfg: &RunConfig) -> Result<(LiftedComplex<f64>, Option<Realization<f64>>)> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let (mut lc, real) = parse_tkf::<f64>(&text).with_context(|| format!("parsing {}", path.display()))?;
    if let Some(phi) = cfg.phi {
        if !lc.rep.is_scalar_form() {
            bail!("--phi only applies to scalar representations");
        }
        lc.rep = Representation::scalar(phi)?;
    }
    Ok((lc, real))
}

fn realization(lc: &LiftedComplex<f64>, stored: Option<Realization<f64>>, cfg: &RunConfig) -> Result<Realization<f64>> {
    match stored {
        Some(r) => Ok(r),
        None => Ok(sample_general_position(lc, cfg.seed, &SamplingConfig::default())?),
    }
}

fn pass(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

fn write_out(cfg: &RunConfig, text: &str) -> Result<()> {
    match &cfg.out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn print_breakdown(r: &InvariantResult<f64>) {
    println!("  I               = {}", num(r.value));
    println!("  tau             = {}", num(r.torsion.value));
    println!("  tau (raw)       = {}", num(r.torsion.raw));
    println!("  prod' l^2       = {}", num(r.length_product));
    println!("  prod 6V         = {}", num(r.volume_product));
    println!("  power factor    = {}", num(r.power_factor));
    println!("  N0 knot         = {}", r.n_knot_vertices);
}

fn cmd_validate(file: &Path, cfg: &RunConfig) -> Result<bool> {
    let (lc, stored) = load(file, cfg)?;
    let pt = &lc.pt;
    let [n0, n1, n2, n3] = pt.counts();
    println!("counts: N0={n0} N1={n1} N2={n2} N3={n3}");
    println!("euler characteristic: {}", pt.euler_characteristic());
    println!("knot: {} edges, {} vertices", lc.km.edges().len(), lc.km.n_knot_vertices());
    let report = validate_knot_conditions(pt, &lc.km, &lc.lift);
    let mut ok = true;
    for (name, c) in [
        ("(a) knot on edges", &report.on_edges),
        ("(b) at most two knot corners", &report.two_knot_corners),
        ("(c) loops wind once", &report.loops_wind_once),
    ] {
        println!("condition {name}: {}", pass(c.passed));
        for f in &c.failures {
            println!("  {f}");
        }
        ok &= c.passed;
    }
    if !ok && stored.is_none() {
        println!("lift: skipped (no stored realization and the knot conditions fail)");
        println!("result: FAIL");
        return Ok(false);
    }
    let real = realization(&lc, stored, cfg)?;
    let tol = cfg.tol.unwrap_or(DEFAULT_LIFT_TOLERANCE);
    match validate_lift(&lc, &real, tol) {
        Ok(r) => println!(
            "lift: PASS (face discrepancy {}, edge discrepancy {})",
            sci(r.max_face_discrepancy),
            sci(r.max_edge_discrepancy)
        ),
        Err(e) => {
            println!("lift: FAIL ({e})");
            ok = false;
        }
    }
    match deficit_angles(&lc, &real) {
        Ok(d) => {
            let worst = d.worst().map(|w| w.1).unwrap_or(0.0);
            let good = worst < 1e-9;
            println!("deficits: {} (max deviation {}, handedness {})", pass(good), sci(worst), d.handedness);
            ok &= good;
        }
        Err(e) => {
            println!("deficits: FAIL ({e})");
            ok = false;
        }
    }
    println!("result: {}", pass(ok));
    Ok(ok)
}

fn cmd_invariant(file: &Path, cfg: &RunConfig) -> Result<bool> {
    let (lc, stored) = load(file, cfg)?;
    let samples = cfg.samples.unwrap_or(10);
    let tol = cfg.tol.unwrap_or(DEFAULT_SPREAD_TOLERANCE);
    let opts = InvariantOptions::default();
    println!("phi: {}", num(lc.rep.phi()));
    if samples == 1 {
        let real = realization(&lc, stored, cfg)?;
        let r = compute_invariant(&lc, &real, &opts)?;
        println!("sample seed={}", r.seed.map(|s| s.to_string()).unwrap_or_else(|| "stored".into()));
        print_breakdown(&r);
        println!("I: {}", num(r.value));
        return Ok(true);
    }
    match invariant_multi_sample(&lc, samples, cfg.seed, &SamplingConfig::default(), &opts, tol) {
        Ok(m) => {
            for r in &m.samples {
                println!("sample seed={}", r.seed.unwrap_or_default());
                if cfg.verbose {
                    print_breakdown(r);
                } else {
                    println!("  I = {}", num(r.value));
                }
            }
            if !cfg.verbose {
                if let Some(r) = m.samples.first() {
                    println!("breakdown (first sample):");
                    print_breakdown(r);
                }
            }
            println!("I: {}", num(m.mean));
            println!("max relative deviation: {} (tol {})", sci(m.max_relative_deviation), sci(tol));
            println!("result: PASS");
            Ok(true)
        }
        Err(geoknot::Error::InvariantUnstable { max_relative_deviation, tolerance }) => {
            println!("max relative deviation: {} (tol {})", sci(max_relative_deviation), sci(tolerance));
            println!("result: FAIL");
            Ok(false)
        }
        Err(e) => Err(e.into()),
    }
}

fn cmd_check_complex(file: &Path, dump: bool, cfg: &RunConfig) -> Result<bool> {
    let (lc, stored) = load(file, cfg)?;
    let real = realization(&lc, stored, cfg)?;
    let m = assemble(&lc, &real)?;
    let tol = AcyclicTolerances { residual: cfg.tol.unwrap_or(AcyclicTolerances::default().residual), ..Default::default() };
    println!("dimensions: n_a={} n_x={} N1={}", m.n_a(), m.n_x(), m.n_edges());
    let ok = match check_acyclic(&m, &tol) {
        Ok(r) => {
            println!("residual A1*A2: {}", sci(r.residual_a1a2));
            println!("residual A2*A3: {}", sci(r.residual_a2a3));
            println!("asymmetry A1: {}", sci(r.asymmetry));
            println!("ranks: {:?} expected {:?}", r.ranks, r.expected_ranks);
            for (name, (kept, dropped)) in ["A3", "A2", "A1"].iter().zip(r.gaps) {
                println!("gap {name}: last kept {} first dropped {}", sci(kept), sci(dropped));
            }
            true
        }
        Err(e) => {
            println!("failure: {e}");
            false
        }
    };
    println!("result: {}", pass(ok));
    if dump {
        write_out(cfg, &dump_matrices(&m))?;
    }
    Ok(ok)
}

fn cmd_apply_moves(file: &Path, log: Option<&Path>, bulk: usize, knot: usize, log_out: Option<&Path>, cfg: &RunConfig) -> Result<bool> {
    let (lc, stored) = load(file, cfg)?;
    let real = realization(&lc, stored, cfg)?;
    let tol = cfg.tol.unwrap_or(1e-6);
    let opts = InvariantOptions::default();
    let start = State { complex: lc, realization: real };
    let log = match log {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str::<MoveLog>(&text).with_context(|| format!("parsing move log {}", p.display()))?
        }
        None => random_move_sequence(&start, bulk, knot, cfg.seed).1,
    };
    if let Some(p) = log_out {
        fs::write(p, serde_json::to_string_pretty(&log)? + "\n").with_context(|| format!("writing {}", p.display()))?;
    }
    let i0 = compute_invariant(&start.complex, &start.realization, &opts)?.value;
    println!("initial: counts {:?} I {}", start.complex.pt.counts(), num(i0));
    let mut cur = start;
    let mut prev = i0;
    let mut ok = true;
    let mut n_applied = 0;
    for (k, entry) in log.entries.iter().enumerate() {
        let Some(d) = &entry.descriptor else { continue };
        if let MoveOutcome::Skipped { reason } = &entry.outcome {
            if cfg.verbose {
                println!("move {k}: {} skipped ({reason})", d.name());
            }
            continue;
        }
        cur = apply_move(&cur, d).with_context(|| format!("applying move {k} ({})", d.name()))?;
        n_applied += 1;
        let i = compute_invariant(&cur.complex, &cur.realization, &opts)?.value;
        let change = ((i - prev) / prev).abs();
        let good = change < tol;
        ok &= good;
        println!("move {k}: {:<8} counts {:?} I {} change {} {}", d.name(), cur.complex.pt.counts(), num(i), sci(change), pass(good));
        prev = i;
    }
    println!("applied: {n_applied}");
    println!("final I: {} (total relative change {})", num(prev), sci(((prev - i0) / i0).abs()));
    if let Some(p) = &cfg.out {
        fs::write(p, write_tkf(&cur.complex, Some(&cur.realization))).with_context(|| format!("writing {}", p.display()))?;
    }
    println!("result: {}", pass(ok));
    Ok(ok)
}

fn cmd_local_ratio(cfg: &RunConfig) -> Result<bool> {
    let phi = cfg.phi.unwrap_or(std::f64::consts::FRAC_PI_2);
    let tol = cfg.tol.unwrap_or(1e-8);
    let n = cfg.samples.unwrap_or(1);
    let mut worst: f64 = 0.0;
    for k in 0..n as u64 {
        let seed = cfg.seed.wrapping_add(k);
        let local = build_bdaa_local(phi, seed)?;
        let r = local_ratio_check(&local)?;
        if cfg.verbose || n == 1 {
            println!("seed {seed}: tau1 {} tau2 {}", num(r.tau_before), num(r.tau_after));
            println!("  ratio       {}", num(r.ratio));
            println!("  closed form {}", num(r.closed_form));
            println!("  relative error {}", sci(r.relative_error));
        }
        worst = worst.max(r.relative_error);
    }
    let ok = worst < tol;
    println!("configurations: {n}, phi {}", num(phi));
    println!("max relative error: {} (tol {})", sci(worst), sci(tol));
    println!("result: {}", pass(ok));
    Ok(ok)
}

fn cmd_build_fixture(kind: &str, sizes: &[usize], with_real: bool, cfg: &RunConfig) -> Result<bool> {
    let kind = match (kind, sizes) {
        ("unknot-join", [n, m]) => FixtureKind::UnknotJoin { n: *n, m: *m },
        ("unknot-loop", [n]) => FixtureKind::UnknotLoop { n: *n },
        ("unknot-join", _) => bail!("unknot-join takes two sizes `n m`"),
        ("unknot-loop", _) => bail!("unknot-loop takes one size `n`"),
        (other, _) => bail!("unknown fixture `{other}` (expected unknot-join or unknot-loop)"),
    };
    let phi = cfg.phi.unwrap_or(std::f64::consts::PI);
    let lc = build_fixture(kind, phi)?;
    let real = if with_real { Some(sample_general_position(&lc, cfg.seed, &SamplingConfig::default())?) } else { None };
    write_out(cfg, &write_tkf(&lc, real.as_ref()))?;
    Ok(true)
}

fn run(cli: Cli) -> Result<bool> {
    let cfg = RunConfig::from_cli(&cli)?;
    match &cli.command {
        Command::Validate { file } => cmd_validate(file, &cfg),
        Command::Invariant { file } => cmd_invariant(file, &cfg),
        Command::CheckComplex { file, dump_matrices } => cmd_check_complex(file, *dump_matrices, &cfg),
        Command::ApplyMoves { file, log, bulk, knot, log_out } => {
            cmd_apply_moves(file, log.as_deref(), *bulk, *knot, log_out.as_deref(), &cfg)
        }
        Command::LocalRatio => cmd_local_ratio(&cfg),
        Command::BuildFixture { kind, sizes, with_realization } => cmd_build_fixture(kind, sizes, *with_realization, &cfg),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
