//! Acceptance criteria 1–8. Runs without the libtest harness so that one
//! pass/fail line per criterion is always printed.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use ginvariant::colombeau::{CompactBox, EpsilonGrid, Net, Scalar, TabulatedScalar};
use ginvariant::corpus::{random_expr, random_lorentz, random_planar_product, random_point, random_rotation, rng};
use ginvariant::decompose::{givens_decompose, lorentz_decompose, planar_matrix, schedule_pairs};
use ginvariant::expr::MultiIndex;
use ginvariant::groups::{Flow, GroupElement, PlanarKind};
use ginvariant::numbertheory::{corollary_pair, dirichlet, liouville_constant, named_value, AlgebraicNumber};
use ginvariant::verify::{
    chain_bound, chain_tolerance, check_invariance, check_periodicity, lorentz_invariance_pipeline,
    one_param_theorem_harness, rotation_invariance_pipeline, translation_constancy, two_period_constancy, Verdict,
    VerifyOptions,
};
use nalgebra::DMatrix;
use rand::RngExt;
use twofloat::TwoFloat;

const SEED: u64 = 20_240_601;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(limit: Duration, start: Instant) -> Result<(), String> {
    let spent = start.elapsed();
    ensure(spent <= limit, || format!("took {:.2} s, limit {} s", spent.as_secs_f64(), limit.as_secs()))
}

fn scalars(m: &DMatrix<f64>) -> Vec<Vec<Scalar>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| Scalar::Real(m[(i, j)])).collect()).collect()
}

fn givens_reconstruction() -> Outcome {
    let start = Instant::now();
    let mut r = rng(SEED);
    let mut worst = 0.0f64;
    for n in 0..1000 {
        let d = 2 + n % 5;
        let m = if n % 2 == 0 { random_rotation(&mut r, d) } else { random_planar_product(&mut r, d) };
        let s = givens_decompose(&m).map_err(|e| format!("d={d}: {e}"))?;
        ensure(s.angles().len() == d * (d - 1) / 2, || format!("d={d}: {} factors", s.angles().len()))?;
        ensure(s.pairs() == schedule_pairs(d), || format!("d={d}: schedule differs"))?;
        let err = (s.to_matrix(None).map_err(|e| e.to_string())? - &m).norm();
        worst = worst.max(err);
        ensure(err <= 1e-10, || format!("d={d}: reconstruction error {err:e}"))?;
    }
    within(Duration::from_secs(10), start)?;
    Ok(format!("1000 matrices, max error {worst:.1e}, {:.2} s", start.elapsed().as_secs_f64()))
}

fn lorentz_factorization() -> Outcome {
    let start = Instant::now();
    let mut r = rng(SEED + 1);
    let (mut worst_recon, mut worst_form) = (0.0f64, 0.0f64);
    for n in 0..500 {
        let d = 2 + n % 2;
        let (l, _) = random_lorentz(&mut r, d, 0.0, 3.0);
        let f = lorentz_decompose(&l).map_err(|e| format!("d={d}: {e}"))?;
        let rebuilt = f.to_matrix(None).map_err(|e| e.to_string())?;
        let recon = (&rebuilt - &l).norm();
        worst_recon = worst_recon.max(recon);
        ensure(recon <= 1e-9, || format!("d={d}: reconstruction {recon:e}"))?;
        let theta = f.theta.value_at(None).map_err(|e| e.to_string())?;
        let expected = l[(0, 0)].acosh();
        ensure((theta - expected).abs() <= 1e-10, || format!("θ={theta}, arccosh(Λ00)={expected}"))?;
        for side in [&f.r1, &f.r2] {
            let g = GroupElement::new(d + 1, side.factors(1)).map_err(|e| e.to_string())?;
            let mut t = vec![0.0; d + 1];
            t[0] = 1.0;
            let image = g.apply_point(&t, None).map_err(|e| e.to_string())?;
            let drift = image.iter().zip(&t).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            ensure(drift <= 1e-10, || format!("spatial factor moves the time axis by {drift:e}"))?;
        }
        let samples = if d == 2 { 10 } else { 6 };
        let q = |x: &[f64]| x[0] * x[0] - x[1..].iter().map(|v| v * v).sum::<f64>();
        for x in CompactBox::cube(d + 1, -1.0, 1.0, samples).unwrap().lattice() {
            let y = &rebuilt * nalgebra::DVector::from_column_slice(&x);
            let dev = (q(y.as_slice()) - q(&x)).abs();
            worst_form = worst_form.max(dev);
            ensure(dev <= 1e-9, || format!("form deviation {dev:e}"))?;
        }
    }
    within(Duration::from_secs(10), start)?;
    Ok(format!(
        "500 matrices, max reconstruction {worst_recon:.1e}, max form deviation {worst_form:.1e}, {:.2} s",
        start.elapsed().as_secs_f64()
    ))
}

fn diophantine_suite() -> Outcome {
    let start = Instant::now();
    let mut r = rng(SEED + 2);
    let names = ["sqrt2", "sqrt3", "phi", "cbrt2", "pi", "e"];
    for _ in 0..200 {
        let name = names[r.random_range(0..names.len())];
        let alpha = named_value(name).map_err(|e| e.to_string())?;
        let n = r.random_range(1..=10_000u64);
        let p = dirichlet(alpha, n).map_err(|e| e.to_string())?;
        let defect = (TwoFloat::from(p.k) - TwoFloat::from(p.l) * alpha).abs();
        ensure(p.l > 0 && p.l <= n, || format!("{name}, N={n}: l={}", p.l))?;
        ensure(defect.hi() <= 1.0 / n as f64, || format!("{name}, N={n}: defect {}", defect.hi()))?;
    }
    for a in AlgebraicNumber::catalog() {
        let data = liouville_constant(&a).map_err(|e| e.to_string())?;
        let deg = a.degree() as i32;
        for l in 1..=10_000u64 {
            let lt = TwoFloat::from(l);
            let k = (lt * a.value()).round();
            let gap = (a.value() - k / lt).abs().hi();
            let bound = data.c / (l as f64).powi(deg);
            ensure(gap >= bound, || format!("{}: l={l} gap {gap:e} < {bound:e}", a.name()))?;
        }
        for rr in [3.0, 10.0, 1e2, 1e3, 1e4] {
            let c = corollary_pair(&a, rr).map_err(|e| e.to_string())?;
            ensure(c.lower <= c.defect && c.defect <= c.upper && c.l as f64 <= rr, || format!("{}: R={rr} defect {}", a.name(), c.defect))?;
        }
    }
    for (name, m) in [("sqrt2", 4), ("phi", 4), ("cbrt2", 7)] {
        let got = liouville_constant(&AlgebraicNumber::named(name).unwrap()).unwrap().m;
        ensure(got == m, || format!("{name}: M={got}, expected {m}"))?;
    }
    within(Duration::from_secs(30), start)?;
    Ok(format!("200 Dirichlet pairs, 6×10⁴ Liouville checks, 30 corollary pairs, {:.2} s", start.elapsed().as_secs_f64()))
}

fn chain_lemma() -> Outcome {
    let constant = |_: f64| 4.5;
    let wavy = |x: f64| (2.0 * PI * x).sin() + 0.001 * x;
    let eps = 0.25f64;
    let negligible = move |x: f64| 7.0 + (eps.ln() / eps).exp() * x.sin();
    let corpus: [(&str, &(dyn Fn(f64) -> f64 + Sync)); 3] =
        [("constant", &constant), ("sin(2πx)+0.001x", &wavy), ("constant+negligible", &negligible)];
    let pairs: Vec<(u64, u64)> = (0..=6).flat_map(|k| (0..=6).map(move |l| (k, l))).filter(|&p| p != (0, 0)).collect();
    let mut tested = 0usize;
    for (h1, h2) in [(1.0, 2f64.sqrt()), (1.0, (1.0 + 5f64.sqrt()) / 2.0), (0.7, 0.3)] {
        for (name, f) in corpus {
            let tol = chain_tolerance(f, 0.0, 20.0, h1, h2, &pairs, 201).map_err(|e| e.to_string())?;
            let report = chain_bound(f, 0.0, 20.0, h1, h2, tol, &pairs, 201).map_err(|e| e.to_string())?;
            for e in &report.evidence {
                tested += e.tested_points;
                ensure(e.holds, || {
                    format!("{name}, h=({h1},{h2}), pair ({},{}): {} > {}", e.k, e.l, e.measured, e.certified)
                })?;
            }
        }
    }
    Ok(format!("{tested} (pair, x) cases, zero violations"))
}

fn tabulated(grid: &EpsilonGrid, f: impl Fn(f64) -> f64) -> Scalar {
    Scalar::Table(TabulatedScalar::new(grid.values().iter().map(|&e| (e, f(e))).collect()))
}

fn positive_controls() -> Outcome {
    let start = Instant::now();
    let grid = EpsilonGrid::default();
    let opts = VerifyOptions::default();
    let p = 6;
    let sq = |d| CompactBox::cube(d, -1.0, 1.0, 9).unwrap();
    let err = |e: ginvariant::verify::VerifyError| e.to_string();
    let mut done = Vec::new();

    // radial net, generalized rotation angles
    let radial = Net::parse("exp(-(x1^2+x2^2))", 2).unwrap();
    let gen = [Scalar::parse("sin(1/eps)").unwrap(), Scalar::parse("2+cos(1/eps)").unwrap()];
    let r = one_param_theorem_harness(&radial, &Flow::Rotation { dim: 2, i: 1, j: 2 }, &[], &gen, &sq(2), &grid, p, &opts)
        .map_err(err)?;
    ensure(r.verdict == Verdict::Holds, || format!("radial one-parameter: {:?}", r.verdict))?;
    let radial3 = Net::parse("exp(-(x1^2+x2^2+x3^2))", 3).unwrap();
    let angles = [0.3, -1.1, 2.0];
    let m: Vec<Vec<Scalar>> = (0..3)
        .map(|i| {
            (0..3)
                .map(|j| {
                    tabulated(&grid, |e| {
                        let s = (1.0 / e).sin();
                        let rot = planar_matrix(3, PlanarKind::Rotation, 1, 2, angles[0] + s)
                            * planar_matrix(3, PlanarKind::Rotation, 1, 3, angles[1] * s)
                            * planar_matrix(3, PlanarKind::Rotation, 2, 3, angles[2]);
                        rot[(i, j)]
                    })
                })
                .collect()
        })
        .collect();
    let r = rotation_invariance_pipeline(&radial3, &m, &sq(3), &grid, p, &opts).map_err(err)?;
    ensure(r.verdict == Verdict::Invariant, || format!("radial rotation pipeline: {:?}", r.verdict))?;
    done.push("radial");

    // form function, generalized boosts
    let form = Net::parse("x1^2-x2^2", 2).unwrap();
    let gen = [Scalar::parse("1+eps").unwrap(), Scalar::parse("sin(1/eps)").unwrap()];
    let r = one_param_theorem_harness(&form, &Flow::Boost { dim: 2, i: 1, j: 2 }, &[], &gen, &sq(2), &grid, p, &opts)
        .map_err(err)?;
    ensure(r.verdict == Verdict::Holds, || format!("boost one-parameter: {:?}", r.verdict))?;
    let form3 = Net::parse("exp(-(x1^2-x2^2-x3^2)^2)", 3).unwrap();
    let lam: Vec<Vec<Scalar>> = (0..3)
        .map(|i| {
            (0..3)
                .map(|j| {
                    tabulated(&grid, |e| {
                        let t = 1.0 + 0.5 * (1.0 / e).sin();
                        let l = planar_matrix(3, PlanarKind::Rotation, 2, 3, 0.8)
                            * planar_matrix(3, PlanarKind::Boost, 1, 2, t)
                            * planar_matrix(3, PlanarKind::Rotation, 2, 3, -0.4 + e);
                        l[(i, j)]
                    })
                })
                .collect()
        })
        .collect();
    let r = lorentz_invariance_pipeline(&form3, &lam, &sq(3), &grid, p, &opts).map_err(err)?;
    ensure(r.verdict == Verdict::Invariant, || format!("Lorentz pipeline: {:?}", r.verdict))?;
    done.push("form");

    // constant plus negligible, two periods
    let cpn = Net::parse("7 + exp(ln(eps)/eps)*sin(x1)", 1).unwrap();
    let sqrt2 = AlgebraicNumber::named("sqrt2").unwrap();
    let r = two_period_constancy(&cpn, &sqrt2, 6.0, p, &grid, &opts).map_err(err)?;
    ensure(r.verdict == Verdict::Constant, || format!("two-period: {:?}", r.verdict))?;
    let mut rows = 0;
    for ev in &r.evidence {
        let eps0 = ev.eps0.ok_or("no ε₀ detected")?;
        for row in &ev.rows {
            rows += 1;
            ensure(row.eps <= eps0 && row.measured <= row.bound, || {
                format!("order {}, ε={}: {} > {}", ev.order, row.eps, row.measured, row.bound)
            })?;
        }
    }
    done.push("two-period");

    // translations
    let hs = vec![vec![0.5], vec![-1.0], vec![2f64.sqrt()], vec![3.0]];
    let t = Net::parse("sin(1/eps) + exp(ln(eps)/eps)*cos(x1)", 1).unwrap();
    let r = translation_constancy(&t, &sq(1), &grid, p, &hs, &opts).map_err(err)?;
    ensure(r.verdict == Verdict::Constant, || format!("translation: {:?}", r.verdict))?;
    done.push("translation");

    within(Duration::from_secs(60), start)?;
    Ok(format!(
        "{} families positive at p={p}, {rows} certified rows, {:.2} s",
        done.len(),
        start.elapsed().as_secs_f64()
    ))
}

fn negative_controls() -> Outcome {
    let grid = EpsilonGrid::default();
    let opts = VerifyOptions::default();
    let err = |e: ginvariant::verify::VerifyError| e.to_string();
    let sq = |d| CompactBox::cube(d, -1.0, 1.0, 9).unwrap();
    let mut r = rng(SEED + 3);
    let x1 = Net::parse("x1", 3).unwrap();
    for _ in 0..5 {
        let m = random_rotation(&mut r, 3);
        let rep = rotation_invariance_pipeline(&x1, &scalars(&m), &sq(3), &grid, 1, &opts).map_err(err)?;
        ensure(rep.verdict == Verdict::NotInvariant, || format!("x1 rotation pipeline: {:?}", rep.verdict))?;
    }
    let g = GroupElement::rotation(3, 1, 2, PI / 3.0).unwrap();
    let rep = check_invariance(&x1, &g, &sq(3), &grid, 1).map_err(err)?;
    ensure(rep.verdict == Verdict::NotInvariant, || "x1 under R_{1,2,π/3}".into())?;
    let (l, _) = random_lorentz(&mut r, 2, 0.5, 3.0);
    let rep = lorentz_invariance_pipeline(&x1, &scalars(&l), &sq(3), &grid, 1, &opts).map_err(err)?;
    ensure(rep.verdict == Verdict::NotInvariant, || format!("time coordinate under boost: {:?}", rep.verdict))?;

    let sine = Net::parse("sin(2*3.141592653589793*x1)", 1).unwrap();
    let k = CompactBox::new(vec![(-3.0, 3.0)], 121).unwrap();
    let rep = check_periodicity(&sine, 2f64.sqrt(), &k, &grid, 1, &opts).map_err(err)?;
    ensure(rep.verdict == Verdict::NotPeriodic, || "sin(2πx) with period √2".into())?;
    let sqrt2 = AlgebraicNumber::named("sqrt2").unwrap();
    let rep = two_period_constancy(&sine, &sqrt2, 6.0, 6, &grid, &opts).map_err(err)?;
    ensure(rep.verdict == Verdict::NotApplicable, || format!("two-period sine: {:?}", rep.verdict))?;

    let prod = Net::parse("x1*x2", 2).unwrap();
    let rep = one_param_theorem_harness(&prod, &Flow::Rotation { dim: 2, i: 1, j: 2 }, &[PI / 4.0], &[], &sq(2), &grid, 1, &opts)
        .map_err(err)?;
    ensure(rep.verdict == Verdict::HypothesisFailed, || format!("x1·x2 rotation flow: {:?}", rep.verdict))?;

    let x = Net::parse("x1", 1).unwrap();
    let rep = translation_constancy(&x, &sq(1), &grid, 1, &[vec![0.5]], &opts).map_err(err)?;
    ensure(rep.verdict == Verdict::HypothesisFailed, || "x1 under translations".into())?;
    Ok("11 negative controls flagged, no false positives".into())
}

fn gradient_oracle() -> Outcome {
    let mut r = rng(SEED + 4);
    let d = 3;
    let mut worst = 0.0f64;
    for n in 0..100 {
        let e = random_expr(&mut r, d, 5);
        let x = random_point(&mut r, d, -2.0, 2.0);
        let eps = r.random_range(1e-3..=1.0);
        for axis in 0..d {
            let sym = e.derivative(&MultiIndex::unit(d, axis)).eval(eps, &x).map_err(|err| err.to_string())?;
            let h = 1e-6;
            let shifted = |t: f64| {
                let mut y = x.clone();
                y[axis] += t;
                e.eval(eps, &y).unwrap()
            };
            let fd = (shifted(h) - shifted(-h)) / (2.0 * h);
            let gap = (sym - fd).abs() / (1.0 + sym.abs());
            worst = worst.max(gap);
            ensure(gap <= 1e-4, || format!("expression {n} `{e}` axis {}: symbolic {sym}, finite difference {fd}", axis + 1))?;
        }
    }
    Ok(format!("100 expressions × 3 axes, max gap {worst:.1e} (relative to 1+|∂f|)"))
}

fn report_bundle() -> String {
    let grid = EpsilonGrid::dyadic(4, 20).unwrap();
    let opts = VerifyOptions::default();
    let mut r = rng(SEED + 5);
    let sq = |d| CompactBox::cube(d, -1.0, 1.0, 7).unwrap();
    let m = random_rotation(&mut r, 3);
    let f = Net::parse("exp(-(x1^2+x2^2+x3^2)) + exp(ln(eps)/eps)*x2", 3).unwrap();
    let rot = rotation_invariance_pipeline(&f, &scalars(&m), &sq(3), &grid, 4, &opts).unwrap();
    let (l, _) = random_lorentz(&mut r, 2, 0.0, 3.0);
    let g = Net::parse("exp(-(x1^2-x2^2-x3^2)^2)", 3).unwrap();
    let lor = lorentz_invariance_pipeline(&g, &scalars(&l), &sq(3), &grid, 4, &opts).unwrap();
    let c = Net::parse("7 + exp(ln(eps)/eps)*sin(x1)", 1).unwrap();
    let two = two_period_constancy(&c, &AlgebraicNumber::named("phi").unwrap(), 6.0, 3, &grid, &opts).unwrap();
    serde_json::to_string(&serde_json::json!({"rotation": rot, "lorentz": lor, "two_period": two})).unwrap()
}

fn determinism() -> Outcome {
    let first = report_bundle();
    let second = report_bundle();
    ensure(first == second, || "repeated runs differ".into())?;
    let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().map_err(|e| e.to_string())?;
    let third = single.install(report_bundle);
    ensure(first == third, || "single-threaded run differs".into())?;
    Ok(format!("{} bytes identical across 3 runs (incl. 1 thread)", first.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("Givens reconstruction", givens_reconstruction),
        ("Lorentz factorization", lorentz_factorization),
        ("Diophantine suite", diophantine_suite),
        ("chain lemma", chain_lemma),
        ("theorem harnesses, positive controls", positive_controls),
        ("negative controls", negative_controls),
        ("gradient oracle", gradient_oracle),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (n, (name, run)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("criterion {} ({name}): PASS: {detail}", n + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {} ({name}): FAIL: {detail}", n + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
