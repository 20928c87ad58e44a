use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use trotterforge::bounds::{
    coeff_oracle_lower_bound, commuting_ham_lower_bound, diag_synthesis_lower_bound, discrete_diag_lower_bound,
    BoundReport, CoeffQuery, DiagQuery, DiscreteQuery, GateSet, HamQuery,
};
use trotterforge::chem::{build_uniform_electron_gas, chem_step_count, norm_scaling_report, ElectronicSystem, EtaRule, NormScalingRow};
use trotterforge::circuit::{circuit_to_unitary, exact_evolution, pauli_matrix, phase_minimized_distance, spectral_distance, CMatrix, C64};
use trotterforge::compilers::{
    compile_avgcost_step, compile_lowrank_step, compile_sequential_step, make_product_formula, CompileConfig, CompiledStep, Mode,
};
use trotterforge::costmodel::{gate_count_report, CostMethod};
use trotterforge::decomp::{bisection_decompose, lowrank_decompose, RectKind, RectangleRecord, Subdivision};
use trotterforge::hamlib::{build_power_law, HamiltonianSpec, PauliKind, PauliPair, SignRule};
use trotterforge::lowrank::rank_profile;
use trotterforge::trotter::{commutator_norm_sum, step_count, SimulationRequest, StageExponentials, TrotterErrorReport};
use trotterforge::Error;

use crate::args::*;

#[derive(Debug)]
pub enum CliError {
    Core(Error),
    Io(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Core(Error::Validation(msg.into()))
}

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Build(a) => build(a),
        Command::Decompose(a) => decompose(a),
        Command::RankProfile(a) => rank_profile_cmd(a),
        Command::Compile(a) => compile(a),
        Command::Verify(a) => verify(a),
        Command::ErrorSweep(a) => error_sweep(a),
        Command::CostReport(a) => cost_report(a),
        Command::Bound(a) => bound(a),
        Command::Chem(a) => chem(a),
    }
}

/// Writes through a temporary file in the target directory, then renames.
fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(io)?;
    tmp.write_all(contents.as_bytes()).map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

fn emit(output: &OutputArgs, contents: &str) -> Result<()> {
    match &output.out {
        Some(path) => write_atomic(path, contents),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

fn with_newline(mut s: String) -> String {
    if !s.ends_with('\n') {
        s.push('\n');
    }
    s
}

fn parse_pair(label: &str) -> Result<PauliPair> {
    let chars: Vec<String> = label.trim().chars().map(String::from).collect();
    if chars.len() != 2 {
        return Err(invalid(format!("Pauli pair {label:?} must have two letters")));
    }
    Ok((chars[0].parse::<PauliKind>()?, chars[1].parse::<PauliKind>()?))
}

fn load_spec(a: &SpecArgs) -> Result<HamiltonianSpec<f64>> {
    if let Some(path) = &a.spec {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        return Ok(HamiltonianSpec::from_json(&text)?);
    }
    let n = a.n.ok_or_else(|| invalid("either --spec or --n is required"))?;
    let sign = match a.sign {
        SignArg::Positive => SignRule::AllPositive,
        SignArg::Alternating => SignRule::Alternating,
        SignArg::Random => SignRule::SeededRandom(a.seed),
    };
    let mut spec: Option<HamiltonianSpec<f64>> = None;
    for label in a.pairs.split(',') {
        let pair = parse_pair(label)?;
        let part = build_power_law::<f64>(n, a.d, a.alpha, pair, sign)?;
        spec = Some(match spec {
            None => part,
            Some(s) => s.with_two_local(pair, part.pair(pair).expect("generated pair").clone())?,
        });
    }
    let mut spec = spec.ok_or_else(|| invalid("no Pauli pairs given"))?;
    if let Some(h) = a.field_x {
        spec = spec.with_on_site(PauliKind::X, vec![h; n])?;
    }
    Ok(spec)
}

fn build(a: BuildArgs) -> Result<()> {
    let spec = load_spec(&a.spec)?;
    emit(&a.output, &with_newline(spec.to_json()))
}

fn decompose(a: DecomposeArgs) -> Result<()> {
    let records: Vec<RectangleRecord> = match a.variant {
        VariantArg::Bisection => bisection_decompose(a.n)?.listing(),
        VariantArg::Lowrank => lowrank_decompose(a.n, a.cutoff)?.listing(),
        VariantArg::Avgcost => {
            let mut out = Vec::new();
            for p in bisection_decompose(a.n)?.pairs {
                let h = p.left.len();
                let sub = Subdivision::new(h, a.m.min(h))?;
                for cell in sub.cell_rects(p.left, p.right) {
                    out.push(RectangleRecord {
                        layer: p.layer,
                        block: p.block,
                        left: [cell.rows.lo, cell.rows.hi],
                        right: [cell.cols.lo, cell.cols.hi],
                        kind: RectKind::Near,
                    });
                }
            }
            out
        }
    };
    emit(&a.output, &with_newline(serde_json::to_string_pretty(&records).expect("listing serializes")))
}

fn rank_profile_cmd(a: RankProfileArgs) -> Result<()> {
    let spec = load_spec(&a.spec)?;
    let decomp = lowrank_decompose(spec.n(), a.cutoff)?;
    let profile = rank_profile(&spec, &decomp, a.tol)?;
    emit(&a.output, &profile.to_csv())
}

fn compile_step(a: &CompileArgs, mode: Mode) -> Result<(HamiltonianSpec<f64>, CompiledStep)> {
    let spec = load_spec(&a.spec)?;
    let cfg = CompileConfig::new(a.t, a.p as u32, mode)?.with_epsilon(a.eps)?;
    let step = match a.method {
        MethodArg::Sequential => compile_sequential_step(&spec, &cfg)?,
        MethodArg::Lowrank => compile_lowrank_step(&spec, a.tol, a.cutoff, &cfg)?,
        MethodArg::Avgcost => compile_avgcost_step(&spec, a.m, &cfg)?,
    };
    Ok((spec, step))
}

fn compile(a: CompileArgs) -> Result<()> {
    let mode = match a.mode {
        ModeArg::Verify => Mode::Verify,
        ModeArg::CountOnly => Mode::CountOnly,
    };
    let (_, step) = compile_step(&a, mode)?;
    let sidecar = with_newline(step.sidecar_json());
    let sidecar_path = a.sidecar.clone().or_else(|| {
        a.output.out.as_ref().map(|p| {
            let mut s = p.clone().into_os_string();
            s.push(".json");
            PathBuf::from(s)
        })
    });
    match &step.circuit {
        Some(c) => emit(&a.output, &c.to_text())?,
        None if sidecar_path.is_none() => print!("{sidecar}"),
        None => {}
    }
    if let Some(path) = sidecar_path {
        write_atomic(&path, &sidecar)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct VerifyReport {
    method: String,
    n: usize,
    t: f64,
    p: usize,
    gates: u64,
    distance: f64,
    phase_minimized_distance: f64,
}

fn verify(a: CompileArgs) -> Result<()> {
    let (spec, step) = compile_step(&a, Mode::Verify)?;
    let circuit = step.circuit.as_ref().expect("verify mode builds a circuit");
    let u = circuit_to_unitary(circuit)?;
    let exact = exact_evolution(&spec, step.time_slice)?;
    let report = VerifyReport {
        method: step.method.to_string(),
        n: spec.n(),
        t: step.time_slice,
        p: a.p,
        gates: step.gate_count,
        distance: spectral_distance(&u, &exact)?,
        phase_minimized_distance: phase_minimized_distance(&u, &exact)?,
    };
    emit(&a.output, &with_newline(serde_json::to_string(&report).expect("report serializes")))?;
    if let Some(limit) = a.max_distance {
        if report.distance > limit {
            return Err(invalid(format!("distance {:e} exceeds {limit:e}", report.distance)));
        }
    }
    Ok(())
}

/// One commuting stage per Pauli pair and per on-site kind.
fn pauli_stages(spec: &HamiltonianSpec<f64>) -> Result<Vec<CMatrix>> {
    let n = spec.n();
    if n > 10 {
        return Err(CliError::Core(Error::Capacity(format!("{n} sites exceed the error-sweep limit of 10"))));
    }
    let dim = 1usize << n;
    let mut stages = Vec::new();
    for (&(s1, s2), m) in spec.two_local() {
        let mut h = CMatrix::zeros(dim, dim);
        for (j, k, v) in m.entries() {
            h += pauli_matrix(n, &[(j - 1, s1), (k - 1, s2)]) * C64::new(v, 0.0);
        }
        stages.push(h);
    }
    for (&s, values) in spec.on_site() {
        let mut h = CMatrix::zeros(dim, dim);
        for (j, v) in values.iter().enumerate() {
            h += pauli_matrix(n, &[(j, s)]) * C64::new(*v, 0.0);
        }
        stages.push(h);
    }
    Ok(stages)
}

fn error_sweep(a: ErrorSweepArgs) -> Result<()> {
    let spec = load_spec(&a.spec)?;
    let stages = pauli_stages(&spec)?;
    let exps = StageExponentials::new(&stages)?;
    let mut out = format!("{}\n", TrotterErrorReport::CSV_HEADER);
    for &p in &a.orders {
        let formula = make_product_formula(p as u32)?;
        // Brute-force nested commutators are available up to third order.
        let alpha = if p <= 3 { commutator_norm_sum(&stages, p as u32)? } else { f64::NAN };
        for &t in &a.times {
            let req = SimulationRequest::new(t, a.eps, p as u32)?;
            let empirical = spectral_distance(&exps.product_formula(&formula, t), &exps.exact(t))?;
            let row = TrotterErrorReport {
                method: "sequential".into(),
                p: p as u32,
                t,
                alpha_comm: alpha,
                bound: alpha * t.powi(p as i32 + 1),
                empirical: Some(empirical),
                r: if alpha.is_nan() { 0 } else { step_count(&req, alpha) },
            };
            out.push_str(&row.csv_row());
            out.push('\n');
        }
    }
    emit(&a.output, &out)
}

fn cost_report(a: CostReportArgs) -> Result<()> {
    let method: CostMethod = a.method.parse()?;
    let report = gate_count_report(method, a.alpha, a.d, a.t, a.eps, &a.sweep)?;
    emit(&a.output, &report.to_csv())
}

fn required<T>(value: Option<T>, flag: &str) -> Result<T> {
    value.ok_or_else(|| invalid(format!("--{flag} is required for this bound")))
}

fn bound(a: BoundArgs) -> Result<()> {
    let gates = match (a.arbitrary_c, a.k) {
        (Some(c), _) => GateSet::Arbitrary { c },
        (None, Some(k)) => GateSet::Finite(k as u64),
        (None, None) => return Err(invalid("give --k or --arbitrary-c")),
    };
    let b = required(a.b, "b")? as u64;
    let report: BoundReport = match a.kind {
        BoundKind::Diag => diag_synthesis_lower_bound(&DiagQuery {
            mu: required(a.mu, "mu")? as u32,
            theta_max: required(a.theta_max, "theta-max")?,
            delta: required(a.delta, "delta")?,
            b,
            gates,
        })?,
        BoundKind::Ham => commuting_ham_lower_bound(&HamQuery {
            n: required(a.n, "n")? as u64,
            t: required(a.t, "t")?,
            epsilon: required(a.delta, "eps")?,
            b,
            gates,
            c_red: a.c_red,
        })?,
        BoundKind::Discrete => discrete_diag_lower_bound(&DiscreteQuery {
            mu: required(a.mu, "mu")? as u32,
            m: required(a.m, "m")? as u32,
            delta: required(a.delta, "delta")?,
            b,
            gates,
            c: a.c,
        })?,
        BoundKind::Coeff => coeff_oracle_lower_bound(&CoeffQuery {
            n: required(a.n, "n")? as u64,
            m: required(a.m, "m")? as u32,
            epsilon: required(a.delta, "eps")?,
            b,
            gates,
            c: a.c,
            c_poly: a.c_poly,
        })?,
    };
    let text = match a.format {
        FormatArg::Json => with_newline(report.to_json()),
        FormatArg::Table => {
            let mut s = format!("{:<16} {}\n{:<16} {}\n", "bound", report.bound, "vacuous", report.vacuous);
            for (k, v) in &report.constants {
                s.push_str(&format!("{k:<16} {v}\n"));
            }
            s
        }
    };
    emit(&a.output, &text)
}

#[derive(Serialize)]
struct ChemReport {
    grid: usize,
    n: usize,
    eta: usize,
    omega: f64,
    tau_induced1: f64,
    nu_restricted: f64,
    external_norm: f64,
    p: usize,
    t: f64,
    eps: f64,
    constant: f64,
    r: u64,
}

fn chem(a: ChemArgs) -> Result<()> {
    if let Some(grids) = &a.sweep {
        let eta = a.eta.map_or(EtaRule::HalfFilling, EtaRule::Fixed);
        let omega = a.omega;
        let rows = norm_scaling_report(grids, eta, |n| omega.unwrap_or(n as f64))?;
        let mut out = format!("{}\n", NormScalingRow::CSV_HEADER);
        for r in rows {
            out.push_str(&r.csv_row());
            out.push('\n');
        }
        return emit(&a.output, &out);
    }
    let system = match &a.system {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            ElectronicSystem::from_json(&text)?
        }
        None => {
            let n = a.grid.pow(3);
            let sys = build_uniform_electron_gas(a.grid, a.omega.unwrap_or(n as f64))?;
            match a.eta {
                Some(e) => sys.with_eta(e)?,
                None => sys,
            }
        }
    };
    let norms = system.norms()?;
    let report = ChemReport {
        grid: system.grid,
        n: system.n(),
        eta: system.eta,
        omega: system.omega,
        tau_induced1: norms.tau_induced1,
        nu_restricted: norms.nu_restricted,
        external_norm: system.external_norm(),
        p: a.p,
        t: a.t,
        eps: a.eps,
        constant: a.constant,
        r: chem_step_count(&system, a.t, a.eps, a.p as u32, a.constant)?,
    };
    emit(&a.output, &with_newline(serde_json::to_string(&report).expect("report serializes")))
}
