use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use serde::Serialize;

use evqc_core::adversary::{min_queries, verify_adversary, AdversaryReport};
use evqc_core::engine::{
    cn_decide_thermal, dj_decide_lifted, dj_decide_pseudopure, expectation, Decision, Resolution,
    Verdict,
};
use evqc_core::funcspace::{enumerate_all, enumerate_class, sample_balanced, sample_cn};
use evqc_core::measure::{search_max_c_ratio_with, SearchConfig};
use evqc_core::spinops::{single_spin, total_spin, w_projector, Axis};
use evqc_core::states::{pseudopure, pulsed_thermal, pure_w, thermal_state};
use evqc_core::timedomain::{
    format_real, hamiltonian, peaks, signal, spectrum, write_spectrum_csv, write_trace_csv,
    PEAK_THRESHOLD,
};
use evqc_core::{BoolFunc, DensityMatrix, Error, FunctionClass, Operator, SpinSystem};

use crate::args::{
    AdversaryArgs, ClassArg, ClassifyArgs, Command, MeasureArg, Protocol, SearchArgs, SignalArgs,
    StateArg, SurveyArgs, SurveyClass,
};
use crate::report::{emit, read_text, record, write_atomic};

/// Largest register the exhaustive survey accepts.
pub const SURVEY_MAX_BITS: usize = 3;

/// Tolerance for the `4 I^2 / N^2` column of the survey.
const LAW_TOL: f64 = 1e-10;

pub enum Outcome {
    /// Decided verdict or passing check.
    Done,
    /// Inconclusive verdict, infeasible search or failed check.
    Undecided,
}

pub fn run(command: Command) -> Result<Outcome> {
    match command {
        Command::Classify(a) => classify(&a),
        Command::Survey(a) => survey(&a),
        Command::SearchC(a) => search_c(&a),
        Command::Adversary(a) => adversary(&a),
        Command::Signal(a) => run_signal(&a),
    }
}

fn load_function(path: &Path) -> Result<BoolFunc> {
    read_text(path)?
        .parse()
        .with_context(|| format!("parsing function file {}", path.display()))
}

fn load_system(path: Option<&Path>, spins: usize) -> Result<SpinSystem> {
    let Some(path) = path else {
        return Ok(SpinSystem::demo(spins)?);
    };
    let sys = SpinSystem::from_json(&read_text(path)?)
        .with_context(|| format!("parsing spin system {}", path.display()))?;
    ensure!(
        sys.n() == spins,
        "{} describes {} spins, but {spins} are needed",
        path.display(),
        sys.n()
    );
    Ok(sys)
}

fn check_alpha(alpha: f64) -> Result<()> {
    ensure!(alpha > 0.0 && alpha <= 1.0, "--alpha {alpha} must lie in (0, 1]");
    Ok(())
}

fn measurement(arg: MeasureArg, n: usize) -> Result<Operator> {
    Ok(match arg {
        MeasureArg::W => w_projector(n)?,
        MeasureArg::Fx => total_spin(n, Axis::X)?,
        MeasureArg::Fy => total_spin(n, Axis::Y)?,
        MeasureArg::Ixj(i) => single_spin(n, i, Axis::X)?,
    })
}

/// `sys` is only consulted for the thermal states.
fn state(
    arg: StateArg,
    n: usize,
    alpha: f64,
    sys: impl FnOnce() -> Result<SpinSystem>,
) -> Result<DensityMatrix> {
    Ok(match arg {
        StateArg::PureW => pure_w(n)?,
        StateArg::Pseudopure => {
            check_alpha(alpha)?;
            pseudopure(n, alpha)?
        }
        StateArg::Thermal => thermal_state(&sys()?)?,
        StateArg::Pulsed => pulsed_thermal(&sys()?)?,
    })
}

#[derive(Serialize)]
struct ClassifyResult {
    function: String,
    function_class: FunctionClass,
    #[serde(flatten)]
    verdict: Verdict,
}

fn classify(args: &ClassifyArgs) -> Result<Outcome> {
    let eps = Resolution::new(args.eps)?;
    let f = match (&args.func, args.class) {
        (Some(path), _) => load_function(path)?,
        (None, Some(class)) => {
            let n = args.n.context("--class needs --n")?;
            match class {
                ClassArg::Constant if args.seed % 2 == 0 => BoolFunc::zeros(n)?,
                ClassArg::Constant => BoolFunc::ones(n)?,
                ClassArg::Balanced => sample_balanced(n, args.seed)?,
                ClassArg::Cn => sample_cn(n, args.seed)?,
            }
        }
        (None, None) => bail!("one of --fn or --class is required"),
    };
    let sys = args.sys.as_deref();
    let verdict = match args.protocol {
        Protocol::Pseudopure => {
            check_alpha(args.alpha)?;
            dj_decide_pseudopure(&f, args.alpha, eps)?
        }
        Protocol::CnThermal => cn_decide_thermal(&f, &load_system(sys, f.n())?, eps)?,
        Protocol::Lifted => dj_decide_lifted(&f, &load_system(sys, f.n() + 1)?, eps)?,
    };
    let decided = verdict.decided;
    let result = ClassifyResult {
        function: f.to_hex(),
        function_class: f.classify(),
        verdict,
    };
    emit(&record("classify", args, &result)?, args.out.as_deref())?;
    Ok(match decided {
        Decision::Inconclusive => Outcome::Undecided,
        _ => Outcome::Done,
    })
}

#[derive(Serialize)]
struct SurveySummary {
    rows: usize,
    law_matches: usize,
    max_abs_expectation: f64,
}

fn survey(args: &SurveyArgs) -> Result<Outcome> {
    let n = args.n;
    if n > SURVEY_MAX_BITS {
        return Err(Error::Infeasible {
            what: "exhaustive survey",
            n,
            limit: SURVEY_MAX_BITS,
        }
        .into());
    }
    let m = measurement(args.measure, n)?;
    let rho = state(args.state, n, args.alpha, || load_system(args.sys.as_deref(), n))?;
    let funcs: Vec<BoolFunc> = match args.class {
        SurveyClass::All => enumerate_all(n)?.collect(),
        SurveyClass::Constant => enumerate_class(n, FunctionClass::Constant)?.collect(),
        SurveyClass::Balanced => enumerate_class(n, FunctionClass::BalancedW)?.collect(),
        SurveyClass::Cn => enumerate_class(n, FunctionClass::ClassCN)?.collect(),
    };
    let nf = (1usize << n) as f64;
    let mut csv = String::from("function,imbalance,expectation,class,imbalance_law,law_match\n");
    let mut summary = SurveySummary {
        rows: 0,
        law_matches: 0,
        max_abs_expectation: 0.0,
    };
    for f in &funcs {
        let e = expectation(&m, &rho, f)?;
        let i = f.imbalance();
        let law = 4.0 * (i * i) as f64 / (nf * nf);
        let matches = (e - law).abs() <= LAW_TOL;
        csv.push_str(&format!(
            "{},{i},{},{},{},{matches}\n",
            f.to_hex(),
            format_real(e),
            f.classify(),
            format_real(law)
        ));
        summary.rows += 1;
        summary.law_matches += matches as usize;
        summary.max_abs_expectation = summary.max_abs_expectation.max(e.abs());
    }
    match &args.out {
        Some(path) => {
            write_atomic(path, csv.as_bytes())?;
            println!("{}", record("survey", args, &summary)?);
        }
        None => print!("{csv}"),
    }
    Ok(Outcome::Done)
}

fn search_c(args: &SearchArgs) -> Result<Outcome> {
    ensure!(args.restarts >= 1, "--restarts must be positive");
    let cfg = SearchConfig {
        restarts: args.restarts,
        ..SearchConfig::default()
    };
    let (report, outcome) = match search_max_c_ratio_with(args.n, args.budget, args.seed, &cfg) {
        Ok(r) => (r, Outcome::Done),
        Err(Error::SearchInfeasible(r)) => (*r, Outcome::Undecided),
        Err(e) => return Err(e.into()),
    };
    emit(&record("search-c", args, &report)?, args.out.as_deref())?;
    Ok(outcome)
}

#[derive(Serialize)]
struct AdversaryResult {
    min_queries: usize,
    passed: bool,
    #[serde(flatten)]
    report: AdversaryReport,
}

fn adversary(args: &AdversaryArgs) -> Result<Outcome> {
    let min_queries = min_queries(args.n)?;
    let report = verify_adversary(args.n, args.trials, args.seed)?;
    let passed = report.passed();
    let result = AdversaryResult {
        min_queries,
        passed,
        report,
    };
    emit(&record("adversary", args, &result)?, args.out.as_deref())?;
    Ok(if passed { Outcome::Done } else { Outcome::Undecided })
}

#[derive(Serialize)]
struct SignalResult {
    samples: usize,
    first_sample: f64,
    /// Positive-frequency peaks as `(omega, magnitude)`.
    peaks: Vec<(f64, f64)>,
    trace_path: String,
    spectrum_path: String,
}

fn run_signal(args: &SignalArgs) -> Result<Outcome> {
    ensure!(args.count >= 2, "--count must be at least 2");
    ensure!(args.dt.is_finite() && args.dt > 0.0, "--dt must be positive");
    let sys = SpinSystem::from_json(&read_text(&args.sys)?)
        .with_context(|| format!("parsing spin system {}", args.sys.display()))?;
    let n = sys.n();
    let mut rho = state(args.state, n, args.alpha, || Ok(sys.clone()))?;
    if let Some(path) = &args.func {
        let f = load_function(path)?;
        ensure!(f.n() == n, "function has {} bits but the system has {n} spins", f.n());
        rho = rho.apply_oracle(&f)?;
    }
    let m = measurement(args.measure, n)?;
    let trace = signal(&rho, &hamiltonian(&sys)?, &m, args.dt, args.count)?;
    let spec = spectrum(&trace)?;

    let trace_path = args.out.join("trace.csv");
    let spectrum_path = args.out.join("spectrum.csv");
    let mut buf = Vec::new();
    write_trace_csv(&trace, &mut buf)?;
    write_atomic(&trace_path, &buf)?;
    buf.clear();
    write_spectrum_csv(&spec, &mut buf)?;
    write_atomic(&spectrum_path, &buf)?;
    if let Some(path) = &args.dump_op {
        write_atomic(path, m.to_dump().as_bytes())?;
    }

    let result = SignalResult {
        samples: trace.len(),
        first_sample: trace.samples[0],
        peaks: peaks(&spec, PEAK_THRESHOLD)
            .into_iter()
            .filter(|p| p.0 > 0.0)
            .collect(),
        trace_path: trace_path.display().to_string(),
        spectrum_path: spectrum_path.display().to_string(),
    };
    println!("{}", record("signal", args, &result)?);
    Ok(Outcome::Done)
}
