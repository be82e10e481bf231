//! End-to-end acceptance checks. Each check prints one `pass`/`fail` line.

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::time::{Duration, Instant};

use mcforge::coordforms::Coframe;
use mcforge::detsys::{DeterminingSystem, JetSymbol};
use mcforge::exterior::{McGenerator, TwoForm};
use mcforge::jetalg::{check_duality, jacobi_check, solution_basis, JetVectorField};
use mcforge::kernel::ScalarExpr;
use mcforge::multiindex::MultiIndex;
use mcforge::structure::{diffeo_structure_equation, power_series_structure, StructureEquationSet};
use num_bigint::BigInt;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<(), String>;
type Criterion = (&'static str, fn() -> Check);

fn example(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/examples")
        .join(name)
}

fn cli(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("mcforge").chain(args.iter().copied());
    let code = mcforge_cli::run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn cli_ok(args: &[&str]) -> Result<String, String> {
    match cli(args) {
        (0, out, _) => Ok(out),
        (code, out, err) => Err(format!("`{}` exited {code}: {out}{err}", args.join(" "))),
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Check {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn load(name: &str) -> DeterminingSystem {
    DeterminingSystem::parse(&std::fs::read_to_string(example(name)).unwrap()).unwrap()
}

fn int(n: i64) -> ScalarExpr {
    ScalarExpr::int(n)
}

fn ones(n: usize) -> Vec<BigRational> {
    vec![BigRational::from_integer(BigInt::from(1)); n]
}

fn binomial(n: u32, k: u32) -> i64 {
    (0..k).fold(1i64, |acc, i| acc * (n - i) as i64 / (i + 1) as i64)
}

fn mu(n: u32) -> McGenerator {
    McGenerator::new(0, MultiIndex::from_counts(&[n]))
}

fn gen(component: usize, indices: &[usize]) -> McGenerator {
    McGenerator::new(component, MultiIndex::from_indices(indices))
}

fn lines(s: &str) -> Vec<&str> {
    s.lines().filter(|l| !l.starts_with('#')).collect()
}

fn section<'a>(s: &'a str, start: &str, end_prefix: &str) -> Vec<&'a str> {
    s.lines()
        .skip_while(|l| !l.starts_with(start))
        .skip(1)
        .take_while(|l| !l.starts_with(end_prefix))
        .collect()
}

/// D(R): binomial form and the antisymmetrized rewriting.
fn diffeo_line() -> Check {
    let started = Instant::now();
    let out = cli_ok(&["diffeo", "--dim", "1", "--order", "5"])?;
    let set = StructureEquationSet::diffeo(1, 5);
    ensure(out == set.text(), || "CLI output differs from the library".into())?;
    for n in 0..=5u32 {
        let mut binom = TwoForm::zero();
        for i in 0..=n {
            binom.add_wedge(int(binomial(n, i)), &mu(i + 1), &mu(n - i));
        }
        let mut anti = TwoForm::zero();
        for i in 0..=n.div_ceil(2) {
            let c = BigRational::new(
                BigInt::from(-((n as i64 - 2 * i as i64 + 1) * binomial(n + 1, i))),
                BigInt::from(n + 1),
            );
            anti.add_wedge(ScalarExpr::from_rational(&c), &mu(i), &mu(n + 1 - i));
        }
        let got = set.equation(&mu(n)).ok_or("missing equation")?;
        ensure(*got == binom, || format!("d mu_{n} differs from the binomial sum"))?;
        ensure(*got == anti, || {
            format!("d mu_{n} differs from the antisymmetrized sum")
        })?;
        // term-for-term: every pair i < n+1-i with nonzero weight appears once
        let expected_terms = (0..=n.div_ceil(2)).filter(|&i| 2 * i != n + 1).count();
        ensure(got.terms().len() == expected_terms, || {
            format!("d mu_{n} has {} terms, expected {expected_terms}", got.terms().len())
        })?;
    }
    let elapsed = started.elapsed();
    ensure(elapsed < Duration::from_secs(1), || format!("took {elapsed:?}"))
}

fn cartan_lift() -> Check {
    let path = example("cartan_essential.dsys");
    let out = cli_ok(&["lift", path.to_str().unwrap(), "--order", "2"])?;
    let lifted: BTreeSet<&str> = section(&out, "# lifted determining equations", "#")
        .into_iter()
        .collect();
    let expected: BTreeSet<&str> = ["mu^x = 0", "mu^y_Z = 0", "mu^z_Y = 0", "mu^z_Z = X*mu^y_Y"]
        .into_iter()
        .collect();
    ensure(lifted == expected, || format!("lifted equations {lifted:?}"))?;
    let solved = lines(&out);
    for want in ["mu^z_{XZ} = mu^y_Y + X*mu^y_{XY}", "mu^y_{YY} = 0"] {
        ensure(solved.contains(&want), || format!("missing `{want}`"))?;
    }
    ensure(out.contains("assuming X nonzero"), || "X != 0 not recorded".into())
}

fn cartan_structure() -> Check {
    let started = Instant::now();
    let path = example("cartan_essential.dsys");
    let out = cli_ok(&["structure", path.to_str().unwrap(), "--order", "1"])?;
    let expected = [
        "d mu^y = mu^y_Y ^ mu^y",
        "d mu^z = X*mu^y_Y ^ mu^z",
        "d mu^y_X = mu^y_Y ^ mu^y_X + mu^y_{XY} ^ mu^y",
        "d mu^y_Y = 0",
        "d mu^z_X = X*mu^y_Y ^ mu^z_X + (mu^y_Y + X*mu^y_{XY}) ^ mu^z",
    ];
    ensure(lines(&out) == expected, || format!("got\n{out}"))?;

    // the same equations built structurally
    let sys = load("cartan_essential.dsys");
    let set = StructureEquationSet::from_system(&sys, 1, None).map_err(|e| e.to_string())?;
    let x = ScalarExpr::var(set.table().lookup("X").unwrap());
    let (y, z) = (1, 2);
    let mut dz = TwoForm::zero();
    dz.add_wedge(x.clone(), &gen(y, &[y]), &gen(z, &[]));
    let mut dzx = TwoForm::zero();
    dzx.add_wedge(x.clone(), &gen(y, &[y]), &gen(z, &[0]));
    dzx.add_wedge(int(1), &gen(y, &[y]), &gen(z, &[]));
    dzx.add_wedge(x, &gen(y, &[0, y]), &gen(z, &[]));
    ensure(set.equation(&gen(z, &[])) == Some(&dz), || "d mu^z differs".into())?;
    ensure(set.equation(&gen(z, &[0])) == Some(&dzx), || "d mu^z_X differs".into())?;
    let elapsed = started.elapsed();
    ensure(elapsed < Duration::from_secs(5), || format!("took {elapsed:?}"))
}

fn translation_example() -> Check {
    let path = example("intransitive_translation.dsys");
    let out = cli_ok(&["lift", path.to_str().unwrap()])?;
    let lifted: BTreeSet<&str> = section(&out, "# lifted determining equations", "#")
        .into_iter()
        .collect();
    let expected: BTreeSet<&str> = ["mu^x = 0", "mu^y = X*mu^y_X", "mu^y_Y = 0"].into_iter().collect();
    ensure(lifted == expected, || format!("lifted equations {lifted:?}"))?;

    let out = cli_ok(&["structure", path.to_str().unwrap()])?;
    ensure(lines(&out) == ["d mu^y = 0"], || format!("got\n{out}"))?;

    let sys = load("intransitive_translation.dsys");
    let basis = solution_basis(&sys, &ones(2), 2, None).map_err(|e| e.to_string())?;
    ensure(basis.jets.len() == 1, || format!("dimension {}", basis.jets.len()))?;
    let table = basis.bracket_table(&sys).map_err(|e| e.to_string())?;
    ensure(table.is_abelian(), || "bracket table is not zero".into())
}

fn random_jet(rng: &mut ChaCha8Rng, dim: usize, n: u32) -> JetVectorField {
    let mut v = JetVectorField::zero(dim, n);
    for j in JetSymbol::up_to_order(dim, n) {
        let c = BigRational::new(rng.gen_range(-9..=9).into(), rng.gen_range(1..=4).into());
        v.set(&j, c);
    }
    v
}

fn monomial_jets(dim: usize, n: u32) -> Vec<JetVectorField> {
    JetSymbol::up_to_order(dim, n)
        .into_iter()
        .map(|j| JetVectorField::monomial(dim, j.component(), j.index().clone(), n))
        .collect()
}

fn duality() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for dim in 1..=2 {
        for order in 0..=4 {
            let set = StructureEquationSet::diffeo(dim, order);
            let mut jets = monomial_jets(dim, order + 1);
            // pad with random jets so every case has at least 200 pairings
            let generators = set.basis().len();
            while generators * jets.len() * jets.len() < 200 || jets.len() < 12 {
                jets.push(random_jet(&mut rng, dim, order + 1));
            }
            let report = check_duality(&set, &jets, &ones(dim)).map_err(|e| e.to_string())?;
            ensure(report.passed(), || {
                format!("diffeo m={dim} order {order}: {:?}", report.violations[0])
            })?;
            ensure(report.pairings >= 200, || format!("only {} pairings", report.pairings))?;
        }
    }
    let sys = load("cartan_essential.dsys");
    for order in 0..=2 {
        let set = StructureEquationSet::from_system(&sys, order, None).map_err(|e| e.to_string())?;
        let basis = solution_basis(&sys, &ones(3), order + 1, None).map_err(|e| e.to_string())?;
        let report = check_duality(&set, &basis.jets, &ones(3)).map_err(|e| e.to_string())?;
        ensure(report.passed() && report.pairings > 0, || {
            format!("essential invariant order {order}")
        })?;
    }
    let sys = load("intransitive_translation.dsys");
    for order in 0..=1 {
        let set = StructureEquationSet::from_system(&sys, order, None).map_err(|e| e.to_string())?;
        let basis = solution_basis(&sys, &ones(2), order + 1, None).map_err(|e| e.to_string())?;
        let report = check_duality(&set, &basis.jets, &ones(2)).map_err(|e| e.to_string())?;
        ensure(report.passed() && report.pairings > 0, || {
            format!("translation order {order}")
        })?;
    }
    Ok(())
}

fn bundled_systems() -> Vec<(String, DeterminingSystem)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/examples");
    let mut names: Vec<String> = std::fs::read_dir(dir)
        .unwrap()
        .filter_map(|e| e.ok()?.file_name().into_string().ok())
        .filter(|n| n.ends_with(".dsys"))
        .collect();
    names.sort();
    names.into_iter().map(|n| (n.clone(), load(&n))).collect()
}

fn self_consistency() -> Check {
    let systems = bundled_systems();
    ensure(systems.len() >= 2, || "no bundled systems found".into())?;
    for (name, sys) in &systems {
        for order in 0..=2 {
            let set = StructureEquationSet::from_system(sys, order, None).map_err(|e| e.to_string())?;
            let report = set.check_d_squared().map_err(|e| e.to_string())?;
            ensure(report.is_clean(), || {
                format!("{name} order {order}:\n{}", report.text(&set))
            })?;
        }
    }
    for dim in 1..=2 {
        // order 1 has nothing left after two brackets
        for n in 2..=4 {
            let report = jacobi_check(&monomial_jets(dim, n)).map_err(|e| e.to_string())?;
            ensure(report.passed() && report.triples > 0, || {
                format!("jacobi m={dim} order {n}")
            })?;
        }
    }
    Ok(())
}

fn power_series() -> Check {
    for dim in 1..=2 {
        for order in 0..=4 {
            let series = power_series_structure(dim, order);
            for g in McGenerator::up_to_order(dim, order) {
                let direct = diffeo_structure_equation(&g, dim);
                ensure(series.get(&g) == Some(&direct), || format!("m={dim} {g}"))?;
            }
        }
    }
    Ok(())
}

fn coframe() -> Check {
    let path = example("cartan_example2.coframe");
    let out = cli_ok(&["verify-coframe", path.to_str().unwrap()])?;
    ensure(out.contains("dw1 = 0: verified"), || out.clone())?;
    ensure(out.contains("dw2 = (1/x)*w1 ^ w2: verified"), || out.clone())?;

    let mutated = std::fs::read_to_string(&path)
        .unwrap()
        .replace("(1/x)*w1^w2", "(2/x)*w1^w2");
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("mutated.coframe");
    std::fs::write(&bad, &mutated).unwrap();
    let (code, out, _) = cli(&["verify-coframe", bad.to_str().unwrap()]);
    ensure(code == 1, || format!("mutated claim exited {code}"))?;
    ensure(out.contains("FAILS"), || out.clone())?;
    let frame = Coframe::parse(&mutated).map_err(|e| e.to_string())?;
    let report = frame.verify().map_err(|e| e.to_string())?;
    ensure(report.results.iter().any(|r| !r.residue.is_zero()), || {
        "no residue reported".into()
    })
}

/// Written straight to stdout so the lines show up without `--nocapture`.
fn report(line: &str) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{line}");
}

#[test]
fn acceptance() {
    let checks: [Criterion; 8] = [
        (
            "diffeomorphisms of the line, binomial and antisymmetrized forms",
            diffeo_line,
        ),
        ("essential-invariant example: lifted relations", cartan_lift),
        ("essential-invariant example: structure equations", cartan_structure),
        ("intransitive translation example", translation_example),
        ("duality between structure equations and brackets", duality),
        (
            "d^2 = 0 on bundled systems and Jacobi on monomial jets",
            self_consistency,
        ),
        ("power-series derivation matches the closed form", power_series),
        ("explicit coframe verification", coframe),
    ];
    let mut failed = 0;
    for (i, (name, check)) in checks.iter().enumerate() {
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        match result {
            Ok(()) => report(&format!("criterion {}: pass: {name}", i + 1)),
            Err(e) => {
                failed += 1;
                report(&format!("criterion {}: FAIL: {name}: {e}", i + 1));
            }
        }
    }
    assert_eq!(failed, 0, "{failed} acceptance criteria failed");
}
