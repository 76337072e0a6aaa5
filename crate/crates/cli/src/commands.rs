use std::f64::consts::SQRT_2;
use std::io::Write;
use std::path::Path;

use ginvariant::colombeau::{classify_with, ClassifyOptions, CompactBox, EpsilonGrid, Net, Scalar, DEFAULT_SAMPLES};
use ginvariant::corpus::{random_lorentz, random_rotation, rng};
use ginvariant::decompose::{decompose_net_matrix, full_lorentz_decompose, orthogonal_decompose, MatrixKind};
use ginvariant::groups::{Flow, GroupElement};
use ginvariant::numbertheory::{corollary_pair, dirichlet, liouville_constant, named_value, AlgebraicNumber};
use ginvariant::verify::{
    check_invariance_with, lorentz_invariance_pipeline, one_param_theorem_harness, open_question_explorer,
    rotation_invariance_pipeline, translation_constancy, two_period_constancy, Verdict, VerifyOptions,
    DEFAULT_LINE_SAMPLES,
};
use nalgebra::DMatrix;
use serde::Serialize;
use serde_json::{json, Value};
use twofloat::TwoFloat;

use crate::config::{
    self, AlphaArgs, DecomposeArgs, Globals, GridArgs, InvarianceArgs, MatrixArgs, NetArgs, OneParamArgs, Overlay,
    PeriodArgs, TranslationArgs,
};
use crate::Command;

const DEFAULT_ORDER: u32 = 4;

struct Outcome {
    line: String,
    positive: bool,
    report: Value,
}

type Handler<T> = fn(T, &Globals) -> Result<Outcome, String>;

fn with<T>(flags: T, globals: &Globals, handler: Handler<T>) -> Result<(Outcome, Globals), String>
where
    T: Overlay + Default + for<'de> serde::Deserialize<'de>,
{
    let (args, globals) = config::resolve(flags, globals)?;
    Ok((handler(args, &globals)?, globals))
}

/// Dispatches one subcommand; `Ok(true)` for a positive verdict or a plain
/// computation.
pub fn run(command: Command, globals: &Globals) -> Result<bool, String> {
    let (name, (outcome, globals)) = match command {
        Command::Classify(a) => ("classify", with(a, globals, classify)?),
        Command::Invariance(a) => ("invariance", with(a, globals, invariance)?),
        Command::OneParam(a) => ("one-param", with(a, globals, one_param)?),
        Command::Rotation(a) => ("rotation", with(a, globals, |a, g| matrix_pipeline(a, g, MatrixKind::Rotation))?),
        Command::Lorentz(a) => ("lorentz", with(a, globals, |a, g| matrix_pipeline(a, g, MatrixKind::Lorentz))?),
        Command::DecomposeSo(a) => ("decompose-so", with(a, globals, |a, g| decompose(a, g, MatrixKind::Rotation))?),
        Command::DecomposeLorentz(a) => {
            ("decompose-lorentz", with(a, globals, |a, g| decompose(a, g, MatrixKind::Lorentz))?)
        }
        Command::Dirichlet(a) => ("dirichlet", with(a, globals, dirichlet_cmd)?),
        Command::Liouville(a) => ("liouville", with(a, globals, liouville)?),
        Command::CorollaryPair(a) => ("corollary-pair", with(a, globals, corollary)?),
        Command::TwoPeriod(a) => ("two-period", with(a, globals, two_period)?),
        Command::Translation(a) => ("translation", with(a, globals, translation)?),
        Command::ExploreOpenQuestion(a) => ("explore-open-question", with(a, globals, explore)?),
    };
    let mut report = outcome.report;
    if let Value::Object(map) = &mut report {
        map.insert("command".into(), Value::String(name.into()));
    }
    let text = serde_json::to_string_pretty(&report).map_err(|e| e.to_string())? + "\n";
    match &globals.out {
        Some(path) => {
            std::fs::write(path, text).map_err(|e| format!("{}: {e}", path.display()))?;
            emit(&format!("{}\n", outcome.line))?;
        }
        None => emit(&format!("{}\n{text}", outcome.line))?,
    }
    Ok(outcome.positive)
}

fn emit(text: &str) -> Result<(), String> {
    match std::io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.to_string()),
        _ => Ok(()),
    }
}

fn to_value<T: Serialize>(v: &T) -> Result<Value, String> {
    serde_json::to_value(v).map_err(|e| e.to_string())
}

fn verdict_outcome<T: Serialize>(command: &str, verdict: Verdict, report: &T) -> Result<Outcome, String> {
    Ok(Outcome { line: format!("{command}: {}", verdict.label()), positive: verdict.is_positive(), report: to_value(report)? })
}

fn computed(line: String, verdict: &str, order: Option<i64>, evidence: Value) -> Outcome {
    Outcome { line, positive: true, report: json!({"verdict": verdict, "order": order, "evidence": [evidence]}) }
}

fn grid(g: &GridArgs) -> Result<EpsilonGrid, String> {
    EpsilonGrid::dyadic(g.kmin.unwrap_or(4), g.kmax.unwrap_or(40)).map_err(|e| e.to_string())
}

fn compact(g: &GridArgs, d: usize) -> Result<CompactBox, String> {
    let samples = g.samples.unwrap_or(match d {
        0..=2 => DEFAULT_SAMPLES,
        3 => 13,
        _ => 7,
    });
    CompactBox::cube(d, g.lo.unwrap_or(-1.0), g.hi.unwrap_or(1.0), samples).map_err(|e| e.to_string())
}

fn options(g: &GridArgs, globals: &Globals) -> VerifyOptions {
    let base = ClassifyOptions::default();
    VerifyOptions {
        classify: ClassifyOptions {
            max_order: g.max_order.unwrap_or(base.max_order),
            p_max: g.p_max.unwrap_or(base.p_max),
            ..base
        },
        strict: globals.strict.unwrap_or(false),
        line_samples: g.line_samples.unwrap_or(DEFAULT_LINE_SAMPLES),
    }
}

fn net(a: &NetArgs) -> Result<Net, String> {
    let text = a.f.as_deref().ok_or("missing --f")?;
    let dim = match a.dim {
        Some(d) => d,
        None => ginvariant::expr::Expr::parse(text, usize::MAX).map_err(|e| e.to_string())?.max_spatial_index().max(1),
    };
    Net::parse(text, dim).map_err(|e| e.to_string())
}

fn reals(text: &str) -> Result<Vec<f64>, String> {
    text.split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|_| format!("not a number: {s:?}")))
        .collect()
}

/// Number with two significant digits.
fn approx(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    if v.abs() < 1e-3 {
        return format!("{v:.1e}");
    }
    let decimals = (1 - v.abs().log10().floor() as i32).max(0) as usize;
    format!("{v:.decimals$}")
}

fn classify(a: NetArgs, globals: &Globals) -> Result<Outcome, String> {
    let f = net(&a)?;
    let opts = options(&a.grid, globals);
    let p = a.grid.p.unwrap_or(DEFAULT_ORDER);
    let report = classify_with(&f, &compact(&a.grid, f.dim())?, &grid(&a.grid)?, &opts.classify_for_cli(p))
        .map_err(|e| e.to_string())?;
    let verdict = if report.is_negligible_at(p) {
        "NEGLIGIBLE"
    } else if report.moderate {
        "MODERATE"
    } else {
        "NOT_MODERATE"
    };
    let line = format!(
        "classify: {} (negligible order {}, exponent {})",
        verdict.to_lowercase().replace('_', " "),
        report.negligible_order,
        approx(report.fitted_exponent)
    );
    Ok(computed(line, verdict, Some(i64::from(report.negligible_order)), to_value(&report)?))
}

trait ClassifyFor {
    fn classify_for_cli(&self, p: u32) -> ClassifyOptions;
}

impl ClassifyFor for VerifyOptions {
    fn classify_for_cli(&self, p: u32) -> ClassifyOptions {
        ClassifyOptions { p_max: self.classify.p_max.max(p), ..self.classify.clone() }
    }
}

fn json_arg(text: &str) -> Result<Value, String> {
    let body = if Path::new(text).is_file() { config::read(Path::new(text))? } else { text.to_string() };
    serde_json::from_str(&body).map_err(|e| format!("invalid JSON: {e}"))
}

fn planar_spec(text: &str) -> Result<(usize, usize, Scalar), String> {
    let mut parts = text.splitn(3, ',');
    let mut axis = || -> Result<usize, String> {
        let s = parts.next().ok_or("expected \"i,j,theta\"")?;
        s.trim().parse().map_err(|_| format!("bad axis {s:?}"))
    };
    let (i, j) = (axis()?, axis()?);
    let theta = parts.next().ok_or("expected \"i,j,theta\"")?;
    Ok((i, j, Scalar::parse(theta.trim()).map_err(|e| e.to_string())?))
}

fn invariance(a: InvarianceArgs, globals: &Globals) -> Result<Outcome, String> {
    let f = net(&a.net)?;
    let d = f.dim();
    let err = |e: ginvariant::groups::GroupError| e.to_string();
    let given = [&a.element, &a.rotation, &a.boost, &a.shift].iter().filter(|o| o.is_some()).count();
    if given != 1 {
        return Err("give exactly one of --element, --rotation, --boost, --shift".into());
    }
    let g = if let Some(e) = &a.element {
        GroupElement::from_json(&json_arg(e)?, Some(d)).map_err(err)?
    } else if let Some(r) = &a.rotation {
        let (i, j, t) = planar_spec(r)?;
        GroupElement::rotation(d, i, j, t).map_err(err)?
    } else if let Some(b) = &a.boost {
        let (i, j, t) = planar_spec(b)?;
        GroupElement::boost(d, i, j, t).map_err(err)?
    } else {
        GroupElement::translation(reals(a.shift.as_deref().unwrap_or_default())?.into_iter().map(Scalar::Real).collect())
    };
    let grid_args = &a.net.grid;
    let p = grid_args.p.unwrap_or(DEFAULT_ORDER);
    let report = check_invariance_with(
        &f,
        &[("g".into(), g)],
        &compact(grid_args, d)?,
        &grid(grid_args)?,
        p,
        &options(grid_args, globals),
    )
    .map_err(|e| e.to_string())?;
    verdict_outcome("invariance", report.verdict, &report)
}

fn one_param(a: OneParamArgs, globals: &Globals) -> Result<Outcome, String> {
    let f = net(&a.net)?;
    let d = f.dim();
    let flow = match a.flow.as_deref().unwrap_or("rotation") {
        kind @ ("rotation" | "boost") => {
            let (i, j) = (a.i.unwrap_or(1), a.j.unwrap_or(2));
            if kind == "rotation" {
                Flow::Rotation { dim: d, i, j }
            } else {
                Flow::Boost { dim: d, i, j }
            }
        }
        "translation" => Flow::Translation {
            direction: match &a.direction {
                Some(t) => reals(t)?,
                None => (0..d).map(|k| if k == 0 { 1.0 } else { 0.0 }).collect(),
            },
        },
        other => return Err(format!("unknown flow {other:?}")),
    };
    let gens = a
        .gen
        .unwrap_or_default()
        .iter()
        .map(|t| Scalar::parse(t).map_err(|e| e.to_string()))
        .collect::<Result<Vec<_>, _>>()?;
    let g = &a.net.grid;
    let report = one_param_theorem_harness(
        &f,
        &flow,
        &a.thetas.unwrap_or_default(),
        &gens,
        &compact(g, d)?,
        &grid(g)?,
        g.p.unwrap_or(DEFAULT_ORDER),
        &options(g, globals),
    )
    .map_err(|e| e.to_string())?;
    verdict_outcome("one-param", report.verdict, &report)
}

fn read_matrix(path: &Path) -> Result<Vec<Vec<Scalar>>, String> {
    let v: Value = serde_json::from_str(&config::read(path)?).map_err(|e| format!("{}: {e}", path.display()))?;
    let rows = v.as_array().ok_or("matrix must be an array of rows")?;
    rows.iter()
        .map(|row| {
            row.as_array()
                .ok_or_else(|| "matrix rows must be arrays".to_string())?
                .iter()
                .map(|e| Scalar::from_json(e).map_err(|e| e.to_string()))
                .collect()
        })
        .collect()
}

fn real_scalars(m: &DMatrix<f64>) -> Vec<Vec<Scalar>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| Scalar::Real(m[(i, j)])).collect()).collect()
}

fn as_reals(m: &[Vec<Scalar>]) -> Option<DMatrix<f64>> {
    let n = m.len();
    let cols = m.first().map_or(0, Vec::len);
    if m.iter().any(|r| r.len() != cols) {
        return None;
    }
    let mut out = DMatrix::zeros(n, cols);
    for (i, row) in m.iter().enumerate() {
        for (j, s) in row.iter().enumerate() {
            match s {
                Scalar::Real(v) => out[(i, j)] = *v,
                _ => return None,
            }
        }
    }
    Some(out)
}

fn matrix_pipeline(a: MatrixArgs, globals: &Globals, kind: MatrixKind) -> Result<Outcome, String> {
    let f = net(&a.net)?;
    let d = f.dim();
    let m = match &a.matrix {
        Some(path) => read_matrix(path)?,
        None => {
            let mut r = rng(globals.seed.unwrap_or(0));
            match kind {
                MatrixKind::Rotation => real_scalars(&random_rotation(&mut r, d)),
                MatrixKind::Lorentz => {
                    if d < 2 {
                        return Err("Lorentz matrices need dimension at least 2".into());
                    }
                    real_scalars(&random_lorentz(&mut r, d - 1, 0.0, 3.0).0)
                }
            }
        }
    };
    let g = &a.net.grid;
    let (k, eg, p, opts) = (compact(g, d)?, grid(g)?, g.p.unwrap_or(DEFAULT_ORDER), options(g, globals));
    let report = match kind {
        MatrixKind::Rotation => rotation_invariance_pipeline(&f, &m, &k, &eg, p, &opts),
        MatrixKind::Lorentz => lorentz_invariance_pipeline(&f, &m, &k, &eg, p, &opts),
    }
    .map_err(|e| e.to_string())?;
    let mut out = verdict_outcome(if kind == MatrixKind::Rotation { "rotation" } else { "lorentz" }, report.verdict, &report)?;
    if let Value::Object(map) = &mut out.report {
        map.insert("matrix".into(), to_value(&m)?);
    }
    Ok(out)
}

fn decompose(a: DecomposeArgs, _globals: &Globals, kind: MatrixKind) -> Result<Outcome, String> {
    let m = read_matrix(a.matrix.as_deref().ok_or("missing --matrix")?)?;
    let name = if kind == MatrixKind::Rotation { "decompose-so" } else { "decompose-lorentz" };
    let evidence = match (as_reals(&m), kind) {
        (Some(real), MatrixKind::Rotation) => {
            let (schedule, reflected) = orthogonal_decompose(&real).map_err(|e| e.to_string())?;
            json!({"schedule": schedule, "reflected": reflected})
        }
        (Some(real), MatrixKind::Lorentz) => full_lorentz_decompose(&real).map_err(|e| e.to_string())?.to_json(),
        (None, kind) => decompose_net_matrix(&m, &grid(&a.grid)?, kind).map_err(|e| e.to_string())?.to_json(),
    };
    Ok(computed(format!("{name}: decomposed"), "DECOMPOSED", None, evidence))
}

fn alpha_value(a: &AlphaArgs) -> Result<(String, TwoFloat), String> {
    let text = a.alpha.as_deref().ok_or("missing --alpha")?;
    match named_value(text) {
        Ok(v) => Ok((text.to_string(), v)),
        Err(_) => {
            let v: f64 = text.parse().map_err(|_| format!("unknown constant {text:?}"))?;
            Ok((text.to_string(), TwoFloat::from(v)))
        }
    }
}

fn algebraic(a: &AlphaArgs) -> Result<AlgebraicNumber, String> {
    let text = a.alpha.as_deref().ok_or("missing --alpha")?;
    match &a.poly {
        Some(poly) => {
            let coeffs = poly
                .split(',')
                .map(|s| s.trim().parse::<i64>().map_err(|_| format!("bad coefficient {s:?}")))
                .collect::<Result<Vec<_>, _>>()?;
            let (name, approx) = alpha_value(a)?;
            AlgebraicNumber::new(&name, approx.hi(), coeffs).map_err(|e| e.to_string())
        }
        None => AlgebraicNumber::named(text)
            .ok_or_else(|| format!("{text:?} is not in the algebraic catalog; pass --poly for a custom number")),
    }
}

fn dirichlet_cmd(a: AlphaArgs, _globals: &Globals) -> Result<Outcome, String> {
    let (name, alpha) = alpha_value(&a)?;
    let n = a.n.ok_or("missing --N")?;
    let pair = dirichlet(alpha, n).map_err(|e| e.to_string())?;
    let line = format!("(k,l)=({},{}) defect≈{}", pair.k, pair.l, approx(pair.defect));
    let evidence = json!({"alpha": name, "N": n, "k": pair.k, "l": pair.l, "defect": pair.defect});
    Ok(computed(line, "FOUND", None, evidence))
}

fn liouville(a: AlphaArgs, _globals: &Globals) -> Result<Outcome, String> {
    let alg = algebraic(&a)?;
    let data = liouville_constant(&alg).map_err(|e| e.to_string())?;
    let line = format!("liouville: {} c≈{} M={}", alg.name(), approx(data.c), data.m);
    let mut evidence = to_value(&data)?;
    evidence["alpha"] = json!(alg.name());
    evidence["poly"] = json!(alg.poly());
    Ok(computed(line, "COMPUTED", None, evidence))
}

fn corollary(a: AlphaArgs, _globals: &Globals) -> Result<Outcome, String> {
    let alg = algebraic(&a)?;
    let r = a.r.ok_or("missing --R")?;
    let pair = corollary_pair(&alg, r).map_err(|e| e.to_string())?;
    let line = format!(
        "corollary-pair: (k,l)=({},{}) defect≈{} in [{}, {}]",
        pair.k,
        pair.l,
        approx(pair.defect),
        approx(pair.lower),
        approx(pair.upper)
    );
    let positive = pair.bounds_hold;
    let verdict = if positive { "BOUNDS_HOLD" } else { "BOUNDS_FAIL" };
    let mut out = computed(line, verdict, None, to_value(&pair)?);
    out.positive = positive;
    Ok(out)
}

fn two_period(a: PeriodArgs, globals: &Globals) -> Result<Outcome, String> {
    let f = net(&a.net)?;
    let alg = algebraic(&a.alpha)?;
    let g = &a.net.grid;
    let r = a.alpha.r.unwrap_or(alg.value_f64().ceil() + 4.0);
    let report = two_period_constancy(&f, &alg, r, g.p.unwrap_or(DEFAULT_ORDER), &grid(g)?, &options(g, globals))
        .map_err(|e| e.to_string())?;
    verdict_outcome("two-period", report.verdict, &report)
}

fn translation(a: TranslationArgs, globals: &Globals) -> Result<Outcome, String> {
    let f = net(&a.net)?;
    let d = f.dim();
    let shifts = match &a.shifts {
        Some(list) => list.iter().map(|s| reals(s)).collect::<Result<Vec<_>, _>>()?,
        None => (0..d)
            .flat_map(|axis| {
                [0.5, -SQRT_2].map(|h| (0..d).map(|k| if k == axis { h } else { 0.0 }).collect::<Vec<f64>>())
            })
            .collect(),
    };
    let g = &a.net.grid;
    let report = translation_constancy(
        &f,
        &compact(g, d)?,
        &grid(g)?,
        g.p.unwrap_or(DEFAULT_ORDER),
        &shifts,
        &options(g, globals),
    )
    .map_err(|e| e.to_string())?;
    verdict_outcome("translation", report.verdict, &report)
}

fn explore(a: PeriodArgs, globals: &Globals) -> Result<Outcome, String> {
    let f = net(&a.net)?;
    let (name, alpha) = alpha_value(&a.alpha)?;
    let g = &a.net.grid;
    let r = a.alpha.r.unwrap_or(alpha.hi().ceil() + 4.0);
    let report = open_question_explorer(&name, alpha, &f, r, g.p.unwrap_or(DEFAULT_ORDER), &grid(g)?, &options(g, globals))
        .map_err(|e| e.to_string())?;
    let mut out = verdict_outcome("explore-open-question", report.verdict, &report)?;
    out.line = format!("explore-open-question: NON-THEOREM, status {:?}, effective M {}", report.status, report.effective_m);
    Ok(out)
}
