use crate::context_file::{ContextFile, LoadedContext};
use crate::MethodArg;
use ctxvals_core::cvsolve::{build_f, solve_exact, solve_fixed, solve_pinv, ContextualValues};
use ctxvals_core::fitting::geometric_grid;
use ctxvals_core::gexpr::parse;
use ctxvals_core::matcore::CMatrix;
use ctxvals_core::measurement::{conditioned_average, Observable, State};
use ctxvals_core::scenario::{self, Scenario};
use ctxvals_core::weaklimit::{extrapolate, generalized_weak_value, CvMethod};
use std::error::Error;
use std::io::Write;
use std::path::Path;
use std::process::ExitCode;

type CmdResult = Result<ExitCode, Box<dyn Error>>;

const OK: ExitCode = ExitCode::SUCCESS;
const FAILED: ExitCode = ExitCode::FAILURE;

fn usage_exit() -> ExitCode {
    ExitCode::from(2)
}

fn load(file: &Path, obs_override: Option<&[f64]>) -> Result<LoadedContext, Box<dyn Error>> {
    let text = std::fs::read_to_string(file)
        .map_err(|e| format!("cannot read {}: {e}", file.display()))?;
    let parsed = ContextFile::parse(&text)
        .map_err(|e| format!("{}: {e}", file.display()))?;
    parsed
        .instantiate(obs_override)
        .map_err(|e| format!("{}: {e}", file.display()).into())
}

pub fn validate(file: &Path) -> CmdResult {
    let loaded = match load(file, None) {
        Ok(l) => l,
        Err(e) => {
            println!("INVALID {}", file.display());
            println!("  {e}");
            return Ok(FAILED);
        }
    };
    let ctx = &loaded.context;
    println!("VALID {}", file.display());
    println!(
        "  dimension {}, {} outcomes ({})",
        ctx.dim(),
        ctx.outcome_count(),
        ctx.labels().join(", ")
    );
    let validity = ctx.validity();
    println!("  coupling range [{}, {}]", validity.lo, validity.hi);

    let mut worst = 0.0f64;
    for g in validity.sample(16) {
        let povm = ctx.povm_at(g)?;
        let mut sum = CMatrix::zeros(ctx.dim());
        for e in &povm {
            sum = &sum + e;
        }
        worst = worst.max((&sum - &CMatrix::identity(ctx.dim())).fro_norm());
    }
    println!("  POVM completeness defect <= {worst:.3e} over 16 sampled couplings");
    println!("  observable: Hermitian, spectrum {:?}", loaded.observable.eigenvalues());
    match &loaded.state {
        Some(_) => println!("  state: valid density matrix"),
        None => println!("  state: none"),
    }
    match &loaded.post {
        Some(_) => println!("  post-selection: valid probability operator"),
        None => println!("  post-selection: none"),
    }
    Ok(OK)
}

fn parse_pins(pins: &[String]) -> Result<Vec<(usize, ctxvals_core::GExpr64)>, String> {
    pins.iter()
        .map(|p| {
            let (idx, expr) = p
                .split_once('=')
                .ok_or_else(|| format!("pin `{p}` is not IDX=EXPR"))?;
            let idx: usize = idx
                .trim()
                .parse()
                .map_err(|_| format!("pin index `{idx}` is not a positive integer"))?;
            if idx == 0 {
                return Err(format!("pin `{p}`: outcome indices are 1-based"));
            }
            let expr = parse::<f64>(expr).map_err(|e| format!("pin `{p}`: {e}"))?;
            Ok((idx - 1, expr))
        })
        .collect()
}

fn cv_method(method: MethodArg, pins: &[String]) -> Result<CvMethod<f64>, String> {
    let parsed = parse_pins(pins)?;
    match method {
        MethodArg::Fixed => {
            if parsed.is_empty() {
                return Err("--method fixed needs at least one --pin IDX=EXPR".into());
            }
            Ok(CvMethod::Fixed(parsed))
        }
        _ if !parsed.is_empty() => Ok(CvMethod::Fixed(parsed)),
        MethodArg::Pinv => Ok(CvMethod::Pseudoinverse),
        MethodArg::Exact => Ok(CvMethod::Exact),
    }
}

fn solve_with(
    loaded: &LoadedContext,
    method: &CvMethod<f64>,
    g: f64,
) -> ctxvals_core::Result<ContextualValues<f64>> {
    let cal = build_f(&loaded.observable, &loaded.context, g)?;
    match method {
        CvMethod::Pseudoinverse => Ok(solve_pinv(&cal)),
        CvMethod::Exact => solve_exact(&cal),
        CvMethod::Fixed(pins) => {
            let values = pins
                .iter()
                .map(|(idx, expr)| Ok((*idx, expr.eval(g)?)))
                .collect::<ctxvals_core::Result<Vec<_>>>()?;
            solve_fixed(&cal, &values)
        }
    }
}

pub fn solve(
    file: &Path,
    g: f64,
    method: MethodArg,
    pins: &[String],
    obs: Option<&[f64]>,
) -> CmdResult {
    let method = match cv_method(method, pins) {
        Ok(m) => m,
        Err(e) => {
            eprintln!("usage error: {e}");
            return Ok(usage_exit());
        }
    };
    let loaded = load(file, obs)?;
    let cv = solve_with(&loaded, &method, g)?;
    println!("g: {g}");
    println!("method: {}", cv.method);
    for (j, (alpha, label)) in cv.alphas.iter().zip(loaded.context.labels()).enumerate() {
        println!("alpha[{}] {} = {}", j + 1, label, alpha);
    }
    println!("residual: {:e}", cv.residual);
    println!("norm_sq: {}", cv.norm_sq());
    Ok(OK)
}

#[allow(clippy::too_many_arguments)]
pub fn sweep(
    file: &Path,
    gmin: f64,
    gmax: f64,
    points: usize,
    method: MethodArg,
    pins: &[String],
    obs: Option<&[f64]>,
    out: Option<&Path>,
) -> CmdResult {
    if !(gmin > 0.0 && gmax > gmin && points >= 2) {
        eprintln!("usage error: need 0 < gmin < gmax and points >= 2");
        return Ok(usage_exit());
    }
    let method = match cv_method(method, pins) {
        Ok(m) => m,
        Err(e) => {
            eprintln!("usage error: {e}");
            return Ok(usage_exit());
        }
    };
    let loaded = load(file, obs)?;
    let state = loaded
        .state
        .as_ref()
        .ok_or("sweep needs a STATE section in the context file")?;
    let post = loaded
        .post
        .as_ref()
        .ok_or("sweep needs a POST section in the context file")?;
    let weak_value = generalized_weak_value(&loaded.observable, state, post)?;

    let mut sink: Box<dyn Write> = match out {
        Some(path) => Box::new(std::io::BufWriter::new(std::fs::File::create(path)?)),
        None => Box::new(std::io::stdout().lock()),
    };
    let outcomes = loaded.context.outcome_count();
    let alpha_cols: Vec<String> = (1..=outcomes).map(|j| format!("alpha_{j}")).collect();
    let prob_cols: Vec<String> = (1..=outcomes).map(|j| format!("condprob_{j}")).collect();
    writeln!(
        sink,
        "g,{},cond_avg,{},post_prob,weak_value",
        alpha_cols.join(","),
        prob_cols.join(",")
    )?;

    let grid = geometric_grid(gmin, gmax, points);
    let mut kept_g = Vec::new();
    let mut kept_value = Vec::new();
    for &g in &grid {
        let record = solve_with(&loaded, &method, g).and_then(|cv| {
            conditioned_average(&loaded.context, g, &cv, state, post)
                .map(|res| (cv, res))
        });
        match record {
            Ok((cv, res)) => {
                let alphas: Vec<String> = cv.alphas.iter().map(|a| a.to_string()).collect();
                let probs: Vec<String> = res.cond_probs.iter().map(|p| p.to_string()).collect();
                writeln!(
                    sink,
                    "{},{},{},{},{},{}",
                    g,
                    alphas.join(","),
                    res.value,
                    probs.join(","),
                    res.post_prob,
                    weak_value.value
                )?;
                kept_g.push(g);
                kept_value.push(res.value);
            }
            Err(e) => {
                writeln!(sink, "# g={g} error: {e}")?;
            }
        }
    }

    let fit_degree = 3;
    if kept_g.len() >= fit_degree + 3 {
        let (c0, _, converged, pole) = extrapolate(&kept_g, &kept_value, fit_degree);
        let pole_text = pole.map_or("none".to_string(), |p| format!("1/g^{p}"));
        writeln!(
            sink,
            "# summary: extrapolated={} weak_value={} discrepancy={:e} converged={} pole={} points={}",
            c0,
            weak_value.value,
            (c0 - weak_value.value).abs(),
            converged,
            pole_text,
            kept_g.len()
        )?;
    } else {
        writeln!(
            sink,
            "# summary: only {} usable points, no extrapolation",
            kept_g.len()
        )?;
    }
    sink.flush()?;
    Ok(if kept_g.is_empty() { FAILED } else { OK })
}

pub fn audit(file: &Path, obs: Option<&[f64]>) -> CmdResult {
    let loaded = load(file, obs)?;
    let (state, state_label) = match &loaded.state {
        Some(s) => (s.clone(), "from file"),
        None => (
            State::maximally_mixed(loaded.context.dim()),
            "maximally mixed (default)",
        ),
    };
    let report = ctxvals_core::weaklimit::audit(&loaded.context, &loaded.observable, &state)?;
    println!("audit: {}", file.display());
    println!("state: {state_label}");
    let tags = ["(i)", "(ii)", "(iii)", "(iv)", "(v)"];
    for (tag, (name, verdict)) in tags.iter().zip(report.verdicts()) {
        let status = if verdict.passed { "PASS" } else { "FAIL" };
        let flag = verdict
            .flag
            .as_ref()
            .map(|f| format!(" [{f}]"))
            .unwrap_or_default();
        println!(
            "{tag:>6} {name:<28} {status}  metric={:.3e}  {}{flag}",
            verdict.metric, verdict.note
        );
    }
    if let Some(order) = &report.order {
        println!(
            "minimal order n = {}, solvability residual = {:.6e}",
            order.n, order.residual_at_order_n
        );
    } else {
        println!("minimal order n undefined (g-independent context)");
    }
    println!("overall: {}", if report.overall { "PASS" } else { "FAIL" });
    Ok(if report.overall { OK } else { FAILED })
}

pub fn scenario(name: &str, obs: Option<&[f64]>, out: Option<&Path>) -> CmdResult {
    let built: Scenario<f64> = match name {
        "ce1" => {
            let (a, b) = match obs {
                None => (1.0, -1.0),
                Some([a, b]) => (*a, *b),
                Some(other) => {
                    eprintln!(
                        "usage error: ce1 measures a 2x2 diagonal observable, got {} entries",
                        other.len()
                    );
                    return Ok(usage_exit());
                }
            };
            scenario::ce1(a, b)
        }
        "ce2" => {
            let mut s = scenario::ce2::<f64>();
            if let Some(diag) = obs {
                if diag.len() != 3 {
                    eprintln!("usage error: ce2 is a qutrit scenario, --obs needs 3 entries");
                    return Ok(usage_exit());
                }
                s.observable = Observable::diagonal(diag);
            }
            s
        }
        "projective" => match obs {
            None => scenario::projective(),
            Some(diag) => {
                let observable = Observable::diagonal(diag);
                let context = scenario::projective_context(&observable)?;
                let dim = observable.dim();
                Scenario {
                    name: "projective".into(),
                    context,
                    observable,
                    state: State::maximally_mixed(dim),
                    post: ctxvals_core::measurement::PostSelection::identity(dim),
                }
            }
        },
        other => {
            eprintln!("usage error: unknown scenario `{other}`; available: ce1, ce2, projective");
            return Ok(usage_exit());
        }
    };
    let text = ContextFile::from_scenario(&built).render();
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(OK)
}
