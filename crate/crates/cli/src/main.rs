use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use sil_core::duality::{
    check_growth_conditions, legendre_round_trip, reversibility_transport, sample_points,
    verify_duality_identities, Direction, NewtonOptions, SampleBox,
};
use sil_core::iteration::{index_sequence, linearized_path, SequenceOptions};
use sil_core::loops::{
    euler_lagrange_residual, hessian_inertia, search_orbit, FindOptions, HessianOptions, Loop,
    LoopDoc, Subspace,
};
use sil_core::maslov::{iterated_indices, CrossingOptions, Realisation};
use sil_core::schema::{
    parse, BuiltModel, HessianDoc, IndexDoc, MaslovDoc, ModelSpec, OrbitDoc, RunConfig,
};
use sil_core::verify::{self, Suite, VerifyOptions};
use sil_core::{Error, Result, SCHEMA};

#[derive(Parser)]
#[command(name = "sil", version, about = "Periodic orbits, Maslov-type indices and Legendre duality on flat tori")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(clap::Args)]
struct Common {
    /// Run configuration (JSON); flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file, written atomically. Standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long)]
    seed: Option<u64>,
    /// Integration steps per period of the linearised flow.
    #[arg(long)]
    steps: Option<usize>,
    /// Fourier modes per period.
    #[arg(long)]
    nf: Option<usize>,
    #[arg(long)]
    kmax: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Check the Legendre transform of a model on a sample box.
    Transform {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Search for a periodic orbit in a winding class.
    FindOrbit {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Morse index and Maslov-type index of one orbit.
    Index {
        #[arg(long)]
        model: PathBuf,
        /// Orbit file written by `find-orbit`, or a bare loop document.
        #[arg(long)]
        orbit: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Index sequence of the iterates of an orbit.
    Iterate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        orbit: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Run a built-in verification suite.
    Verify {
        /// duality, indices, iteration, symmetric, sobolev, orbits or all.
        #[arg(default_value = "all")]
        suite: String,
        #[command(flatten)]
        common: Common,
    },
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::Input(format!("cannot read {}: {e}", path.display())))
}

fn load_model(path: &Path) -> Result<BuiltModel> {
    ModelSpec::from_json(&read(path)?)
        .and_then(|s| s.build())
        .map_err(|e| match e {
            Error::Input(m) => Error::Input(format!("{}: {m}", path.display())),
            other => other,
        })
}

/// Config file merged with the command-line overrides.
fn load_config(c: &Common) -> Result<RunConfig> {
    let mut cfg = match &c.config {
        Some(p) => RunConfig::from_json(&read(p)?)
            .map_err(|e| Error::Input(format!("{}: {e}", p.display())))?,
        None => RunConfig::default(),
    };
    if let Some(x) = c.seed {
        cfg.seed = Some(x);
    }
    if let Some(x) = c.steps {
        cfg.steps = Some(x);
    }
    if let Some(x) = c.nf {
        cfg.nf = Some(x);
    }
    if let Some(x) = c.kmax {
        cfg.kmax = Some(x);
    }
    if let Some(x) = c.tol {
        if !(x > 0.0) || !x.is_finite() {
            return Err(Error::Input("--tol must be positive and finite".into()));
        }
        cfg.tol = Some(x);
    }
    if cfg.steps == Some(0) || cfg.nf == Some(0) || cfg.kmax == Some(0) {
        return Err(Error::Input("steps, nf and kmax must be positive".into()));
    }
    Ok(cfg)
}

fn load_orbit(path: &Path) -> Result<Loop> {
    let v: Value = parse(&read(path)?)?;
    let doc = v.get("orbit").cloned().unwrap_or(v);
    let doc: LoopDoc = serde_json::from_value(doc)
        .map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
    Loop::from_doc(&doc)
}

/// Writes through a temporary file in the target directory, then renames.
fn emit(out: Option<&Path>, body: &[u8]) -> Result<()> {
    match out {
        None => {
            std::io::stdout().write_all(body)?;
            Ok(())
        }
        Some(path) => {
            let dir = match path.parent() {
                Some(d) if !d.as_os_str().is_empty() => d,
                _ => Path::new("."),
            };
            let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
            tmp.write_all(body)?;
            tmp.as_file().sync_all()?;
            tmp.persist(path).map_err(|e| Error::Io(e.error))?;
            Ok(())
        }
    }
}

fn emit_json<T: serde::Serialize + ?Sized>(out: Option<&Path>, v: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    emit(out, s.as_bytes())
}

fn realisation_label(r: Realisation) -> String {
    match r {
        Realisation::Regular => "regular".into(),
        Realisation::Perturbed { eps } => format!("perturbed eps={eps:e}"),
    }
}

fn transform(model: &Path, c: &Common) -> Result<i32> {
    let cfg = load_config(c)?;
    let built = load_model(model)?;
    let l = built.lagrangian.as_ref();
    let h = built.hamiltonian();
    let tol = cfg.tol.unwrap_or(1e-7);
    let count = cfg.samples.unwrap_or(1000);
    let seed = cfg.seed.unwrap_or(0);
    let cap = cfg.cap.unwrap_or(3.0);
    let mut sample_box = SampleBox::unit_cell(l.n(), cap, count, seed);
    sample_box.t_max = l.time_period().unwrap_or(1.0);
    let pts = sample_points(&sample_box);

    let identities = verify_duality_identities(l, h.as_ref(), &pts, tol)?;
    let newton = NewtonOptions::default();
    let directions = match cfg.direction {
        Some(d) => vec![d],
        None => vec![Direction::LToH, Direction::HToL],
    };
    let round_trips = directions
        .into_iter()
        .map(|d| legendre_round_trip(l, h.as_ref(), &pts, d, 1e-8, &newton))
        .collect::<Result<Vec<_>>>()?;
    let growth = check_growth_conditions(l, h.as_ref(), &pts, None)?;
    let reversibility = if l.reversible() {
        Some(reversibility_transport(l, h.as_ref(), &pts, tol)?)
    } else {
        None
    };
    let passed = identities.holds
        && round_trips.iter().all(|r| r.holds)
        && growth.convexity_holds
        && growth.growth_holds
        && growth.band_holds
        && reversibility.as_ref().map_or(true, |r| r.consistent);
    let doc = json!({
        "schema": SCHEMA,
        "model": l.name(),
        "sample_box": sample_box,
        "identities": identities,
        "round_trips": round_trips,
        "growth": growth,
        "reversibility": reversibility,
        "passed": passed,
    });
    emit_json(c.out.as_deref(), &doc)?;
    Ok(if passed { 0 } else { 4 })
}

fn find_orbit(model: &Path, c: &Common) -> Result<i32> {
    let cfg = load_config(c)?;
    let built = load_model(model)?;
    let l = built.lagrangian.as_ref();
    let defaults = FindOptions::default();
    let opts = FindOptions {
        n_modes: cfg.nf.unwrap_or(defaults.n_modes),
        oversample: cfg.oversample.unwrap_or(defaults.oversample),
        tol: cfg.tol.unwrap_or(defaults.tol),
        descent: cfg.descent.unwrap_or(defaults.descent),
        subspace: cfg.subspace.unwrap_or(Subspace::Full),
        ..defaults
    };
    let init = cfg.initial_loop(l.n(), opts.n_modes)?;
    let rep = search_orbit(l, &init, &opts)?;
    if let Some(why) = &rep.failure {
        eprintln!("sil: orbit search did not converge: {why}");
    }
    match c.format.unwrap_or(Format::Json) {
        Format::Json => {
            let doc = OrbitDoc {
                schema: SCHEMA.into(),
                model: l.name(),
                converged: rep.converged,
                residual: rep.residual,
                action: rep.action,
                tol: opts.tol,
                n_samples: rep.n_samples,
                descent_steps: rep.descent_steps,
                newton_steps: rep.newton_steps,
                orbit: rep.orbit.to_doc(),
            };
            emit_json(c.out.as_deref(), &doc)?;
        }
        Format::Csv => {
            let mut buf = Vec::new();
            rep.orbit.write_csv(&mut buf, rep.n_samples)?;
            emit(c.out.as_deref(), &buf)?;
        }
    }
    Ok(if rep.converged { 0 } else { 3 })
}

fn index(model: &Path, orbit: &Path, c: &Common) -> Result<i32> {
    let cfg = load_config(c)?;
    let built = load_model(model)?;
    let m = built.lagrangian.clone();
    let gamma = load_orbit(orbit)?;
    if gamma.n() != m.n() {
        return Err(Error::Input(format!(
            "orbit has n = {} but the model has n = {}",
            gamma.n(),
            m.n()
        )));
    }
    let n_modes = cfg.nf.unwrap_or(64);
    let hopts = HessianOptions {
        n_modes: Some(n_modes),
        oversample: cfg.oversample.unwrap_or(HessianOptions::default().oversample),
        tol_eig: cfg.tol_eig.unwrap_or(HessianOptions::default().tol_eig),
        ..Default::default()
    };
    let hess = hessian_inertia(m.as_ref(), &gamma, &hopts)?;
    let path = linearized_path(m.clone(), &gamma, cfg.steps)?;
    let (pairs, how) = iterated_indices(&path, 1, &CrossingOptions::default())?;
    let mut pair = pairs[0];
    pair.index += cfg.inject_route_offset.unwrap_or(0);
    let n_t = hopts.oversample * n_modes.max(gamma.n_modes()).max(8);
    let gate_stable = hess.gate.as_ref().map(|g| g.stable);
    let agree = pair.index == hess.morse_index as i64 && pair.nullity == hess.nullity;
    let nonconstant = gamma.winding().iter().any(|&w| w != 0)
        || (1..=gamma.n_modes())
            .any(|k| gamma.cos_coeffs()[k].amax() > 0.0 || gamma.sin_coeffs()[k].amax() > 0.0);
    let doc = IndexDoc {
        schema: SCHEMA.into(),
        model: m.name(),
        n: m.n(),
        tau: gamma.tau(),
        winding: gamma.winding().to_vec(),
        residual: euler_lagrange_residual(m.as_ref(), &gamma, n_t)?,
        hessian: HessianDoc {
            morse_index: hess.morse_index,
            nullity: hess.nullity,
            n_modes: hess.n_modes,
            gate_n_modes: hess.gate.as_ref().map(|g| g.n_modes),
            gate_stable,
            tol: hess.tol,
            ambiguous: hess.ambiguous,
            route: format!("{:?}", hess.route).to_lowercase(),
        },
        maslov: MaslovDoc {
            index: pair.index,
            nullity: pair.nullity,
            steps: path.times().len() - 1,
            realisation: realisation_label(how),
        },
        agree,
        shift_mode: nonconstant && m.time_period().is_none(),
    };
    emit_json(c.out.as_deref(), &doc)?;
    if !agree {
        eprintln!(
            "sil: routes disagree: Hessian ({}, {}) against Maslov ({}, {})",
            hess.morse_index, hess.nullity, pair.index, pair.nullity
        );
    }
    let trusted = !hess.ambiguous && gate_stable != Some(false);
    if !trusted {
        eprintln!("sil: Hessian counts are not resolved (ambiguous eigenvalue or unstable gate)");
    }
    Ok(if agree && trusted { 0 } else { 4 })
}

fn iterate(model: &Path, orbit: &Path, c: &Common) -> Result<i32> {
    let cfg = load_config(c)?;
    let built = load_model(model)?;
    let gamma = load_orbit(orbit)?;
    let k_set = match (&cfg.k_set, cfg.kmax) {
        (Some(ks), _) => ks.clone(),
        (None, Some(k)) => (1..=k).collect(),
        (None, None) => vec![1, 2, 4, 8],
    };
    let opts = SequenceOptions {
        k_set,
        n_modes: cfg.nf.unwrap_or(64),
        tol_eig: cfg.tol_eig.unwrap_or(HessianOptions::default().tol_eig),
        steps: cfg.steps,
        ..Default::default()
    };
    let seq = index_sequence(built.lagrangian.clone(), &gamma, &opts)?;
    match c.format.unwrap_or(Format::Json) {
        Format::Json => emit_json(c.out.as_deref(), &seq)?,
        Format::Csv => {
            let mut buf = Vec::new();
            seq.write_csv(&mut buf)?;
            emit(c.out.as_deref(), &buf)?;
        }
    }
    let routes = seq.route_failures();
    if !routes.is_empty() {
        eprintln!("sil: routes disagree at k = {routes:?}");
    }
    let bad: Vec<usize> = seq
        .rows
        .iter()
        .filter(|r| r.verdict_lower == Some(false) || r.verdict_upper == Some(false))
        .map(|r| r.k)
        .collect();
    if !bad.is_empty() {
        eprintln!("sil: iteration inequality fails at k = {bad:?}");
    }
    Ok(if routes.is_empty() && bad.is_empty() { 0 } else { 4 })
}

fn run_verify(suite: &str, c: &Common) -> Result<i32> {
    let cfg = load_config(c)?;
    let suite: Suite = suite.parse()?;
    let mut opts = VerifyOptions::default();
    if let Some(s) = cfg.seed {
        opts.seed = s;
    }
    if let Some(n) = cfg.nf {
        opts.n_modes = n;
    }
    if let Some(k) = cfg.kmax {
        opts.m_max = k;
    }
    if let Some(ks) = cfg.k_set {
        opts.k_set = ks;
    }
    opts.steps = cfg.steps;
    let report = verify::run(suite, &opts)?;
    for line in &report.checks {
        eprintln!("{}", line.summary());
    }
    if c.out.is_some() || c.format == Some(Format::Json) {
        emit_json(c.out.as_deref(), &report)?;
    }
    Ok(if report.passed { 0 } else { 4 })
}

fn run(cli: Cli) -> Result<i32> {
    match &cli.command {
        Command::Transform { model, common } => transform(model, common),
        Command::FindOrbit { model, common } => find_orbit(model, common),
        Command::Index {
            model,
            orbit,
            common,
        } => index(model, orbit, common),
        Command::Iterate {
            model,
            orbit,
            common,
        } => iterate(model, orbit, common),
        Command::Verify { suite, common } => run_verify(suite, common),
    }
}

fn init_threads() -> Result<()> {
    let Ok(v) = std::env::var("SIL_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Input(format!("SIL_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Numerical(format!("thread pool: {e}")))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match init_threads().and_then(|_| run(cli)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("sil: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
