use std::path::PathBuf;

fn example(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/examples")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = mcforge_cli::run(
        std::iter::once("mcforge").chain(args.iter().copied()),
        &mut out,
        &mut err,
    );
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

#[test]
fn output_is_deterministic() {
    let path = example("cartan_essential.dsys");
    for cmd in ["structure", "lift", "prolong", "check-d2"] {
        for format in ["text", "json"] {
            let first = run(&[cmd, &path, "--format", format]);
            let second = run(&[cmd, &path, "--format", format]);
            assert_eq!(first, second, "{cmd} {format}");
            assert_eq!(first.0, 0, "{cmd} {format}: {}", first.2);
        }
    }
}

#[test]
fn json_output_parses() {
    let path = example("euclidean_plane.dsys");
    for cmd in ["structure", "lift", "prolong", "bracket", "check-duality", "check-d2"] {
        let (code, out, err) = run(&[cmd, &path, "--format", "json"]);
        assert_eq!(code, 0, "{cmd}: {err}");
        serde_json::from_str::<serde_json::Value>(&out).unwrap_or_else(|e| panic!("{cmd}: {e}\n{out}"));
    }
}

#[test]
fn structure_json_has_equations() {
    let (_, out, _) = run(&[
        "structure",
        &example("intransitive_translation.dsys"),
        "--format",
        "json",
    ]);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["basis"], serde_json::json!(["mu^y"]));
    assert_eq!(v["assumptions"], serde_json::json!(["X"]));
}

#[test]
fn bracket_finds_finite_order() {
    let (code, out, _) = run(&["bracket", &example("projective_line.dsys"), "--point", "x=0"]);
    assert_eq!(code, 0);
    assert!(out.starts_with("# solution jets to order 3, dimension 3\n"), "{out}");
    assert!(out.contains("[v2, v3] = v3"), "{out}");
}

#[test]
fn infinite_type_bracket_is_an_input_error() {
    let (code, _, err) = run(&["bracket", &example("cartan_essential.dsys"), "--order", "2"]);
    assert_eq!(code, 2);
    assert!(err.starts_with("error: "), "{err}");
}

#[test]
fn degenerate_point_is_rejected() {
    let (code, _, err) = run(&["check-duality", &example("cartan_essential.dsys"), "--point", "x=0"]);
    assert_eq!(code, 2, "{err}");
}

#[test]
fn bad_point_syntax() {
    for point in ["x", "w=1", "x=abc"] {
        let (code, _, err) = run(&["check-duality", &example("euclidean_plane.dsys"), "--point", point]);
        assert_eq!(code, 2, "{point}");
        assert!(err.starts_with("error: "), "{err}");
    }
}

#[test]
fn parse_errors_carry_positions() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.dsys");
    std::fs::write(&path, "coords: x, y\nfields: xi, eta\neq: xi_x = eta_w\n").unwrap();
    let (code, _, err) = run(&["structure", path.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(err.contains("bad.dsys") && err.contains("3:"), "{err}");
}

#[test]
fn mutated_coframe_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.coframe");
    std::fs::write(&path, "coords: x, y\nform w1 = dx\nform w2 = dy\ndw2 = w1^w2\n").unwrap();
    let (code, out, _) = run(&["verify-coframe", path.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(out.contains("FAILS"), "{out}");
    assert!(out.contains("residue"), "{out}");
}

#[test]
fn diffeo_plane_latex() {
    let (code, out, _) = run(&["diffeo", "--dim", "2", "--order", "0", "--format", "latex"]);
    assert_eq!(code, 0);
    assert!(out.starts_with("\\begin{aligned}\n"), "{out}");
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(run(&["structure"]).0, 2);
    assert_eq!(run(&["frobnicate"]).0, 2);
    assert_eq!(run(&["diffeo", "--dim", "0", "--order", "1"]).0, 2);
    assert_eq!(
        run(&["prolong", &example("euclidean_plane.dsys"), "--format", "latex"]).0,
        2
    );
    assert_eq!(run(&["--help"]).0, 0);
}
