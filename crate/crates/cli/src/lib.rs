//! Command-line front end. [`run`] takes the full argument vector and
//! writes to the given sinks, so it can be driven from tests.
//!
//! Exit status: 0 on success, 1 when a verification finds a nonzero
//! residue or violation, 2 on input errors.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Parser, Subcommand, ValueEnum};
use mcforge::coordforms::Coframe;
use mcforge::detsys::DeterminingSystem;
use mcforge::jetalg::{check_duality, check_duality_symbolic, solution_basis, JetError};
use mcforge::structure::StructureEquationSet;
use num_rational::BigRational;
use serde_json::{json, Value};

#[derive(Parser, Debug)]
#[command(
    name = "mcforge",
    version,
    about = "Maurer-Cartan structure equations of Lie pseudo-groups"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Latex,
    Json,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Structure equations of the pseudo-group defined by a determining system
    Structure {
        input: PathBuf,
        #[arg(long, default_value_t = 1)]
        order: u32,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        /// Highest prolongation order tried while solving
        #[arg(long)]
        cap: Option<u32>,
    },
    /// Lifted determining equations and their solved form
    Lift {
        input: PathBuf,
        /// Order of the solved relations [default: order of the system]
        #[arg(long)]
        order: Option<u32>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        #[arg(long)]
        cap: Option<u32>,
    },
    /// Determining system with all total derivatives up to an order
    Prolong {
        input: PathBuf,
        /// [default: one above the order of the system]
        #[arg(long)]
        order: Option<u32>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Bracket table of the solution algebra of a finite-type system
    Bracket {
        input: PathBuf,
        /// Jet order [default: smallest order at which the basis is finite]
        #[arg(long)]
        order: Option<u32>,
        /// Base point, e.g. `x=1,y=0`; unlisted coordinates are 1
        #[arg(long)]
        point: Option<String>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        #[arg(long)]
        cap: Option<u32>,
    },
    /// Check structure equations against brackets of solution jets
    CheckDuality {
        input: PathBuf,
        #[arg(long, default_value_t = 1)]
        order: u32,
        #[arg(long)]
        point: Option<String>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        #[arg(long)]
        cap: Option<u32>,
    },
    /// Check that d(d g) vanishes for every structure equation
    CheckD2 {
        input: PathBuf,
        #[arg(long, default_value_t = 1)]
        order: u32,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        #[arg(long)]
        cap: Option<u32>,
    },
    /// Structure equations of the full diffeomorphism pseudo-group
    Diffeo {
        #[arg(long)]
        dim: usize,
        #[arg(long)]
        order: u32,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Verify claimed structure equations of an explicit coframe
    VerifyCoframe {
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
}

/// Failure of a command: input problems (exit 2) or a failed verification
/// whose report has already been written (exit 1).
enum Failure {
    Input(String),
    Verification,
}

impl<E: Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Input(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Input(format!("cannot read {}: {e}", path.display())))
}

fn load_system(path: &Path) -> Result<DeterminingSystem, Failure> {
    let text = read(path)?;
    DeterminingSystem::parse(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn unsupported(format: Format, command: &str) -> Failure {
    let name = format
        .to_possible_value()
        .map(|v| v.get_name().to_string())
        .unwrap_or_default();
    Failure::Input(format!("`{command}` has no {name} output"))
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("values serialize");
    s.push('\n');
    s
}

/// Parses `x=1,y=-1/2`. Coordinates not mentioned default to 1.
fn parse_point(spec: Option<&str>, names: &[String]) -> Result<Vec<BigRational>, Failure> {
    let one = BigRational::from_integer(1.into());
    let mut values: BTreeMap<usize, BigRational> = BTreeMap::new();
    for part in spec.unwrap_or("").split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| Failure::Input(format!("point entry `{part}` is not of the form name=value")))?;
        let i = names
            .iter()
            .position(|n| n == k.trim())
            .ok_or_else(|| Failure::Input(format!("`{}` is not a coordinate", k.trim())))?;
        let v = BigRational::from_str(v.trim())
            .map_err(|_| Failure::Input(format!("`{}` is not a rational number", v.trim())))?;
        values.insert(i, v);
    }
    Ok((0..names.len())
        .map(|i| values.get(&i).cloned().unwrap_or_else(|| one.clone()))
        .collect())
}

fn emit_structure(set: &StructureEquationSet, format: Format, out: &mut dyn Write) -> Outcome {
    let s = match format {
        Format::Text => set.text(),
        Format::Latex => set.latex(),
        Format::Json => pretty(&set.to_json()),
    };
    out.write_all(s.as_bytes())?;
    Ok(())
}

fn lift(input: &Path, order: Option<u32>, format: Format, cap: Option<u32>, out: &mut dyn Write) -> Outcome {
    let sys = load_system(input)?;
    let order = order.unwrap_or(sys.order());
    let names = sys.gen_names();
    let table = sys.table();
    let raw = sys.lifted_equations()?;
    let solved = sys.solve_to_order(order, cap)?;
    let rel = solved.lift(&sys)?;
    let assumptions: Vec<String> = rel.assumptions().iter().map(|a| a.display(table).to_string()).collect();
    let s = match format {
        Format::Text => {
            let mut s = String::from("# lifted determining equations\n");
            for (l, r) in &raw {
                s.push_str(&format!("{} = {}\n", l.text(&names, table), r.text(&names, table)));
            }
            s.push_str(&format!("# solved relations to order {order}"));
            if !assumptions.is_empty() {
                s.push_str(&format!(", assuming {} nonzero", assumptions.join(", ")));
            }
            s.push('\n');
            let mut current = None;
            for (g, rhs) in rel.solved() {
                if current != Some(g.order()) {
                    current = Some(g.order());
                    s.push_str(&format!("# order {}\n", g.order()));
                }
                s.push_str(&format!("{} = {}\n", names.text(g), rhs.text(&names, table)));
            }
            let basis: Vec<String> = rel.parametric().iter().map(|g| names.text(g)).collect();
            s.push_str(&format!("# parametric: {}\n", basis.join(", ")));
            s
        }
        Format::Latex => {
            let mut s = String::new();
            if !assumptions.is_empty() {
                let a: Vec<String> = rel.assumptions().iter().map(|a| a.latex(table)).collect();
                s.push_str(&format!("% assumed nonzero: {}\n", a.join(", ")));
            }
            s.push_str("\\begin{aligned}\n");
            for (g, rhs) in rel.solved() {
                s.push_str(&format!("{} &= {} \\\\\n", names.latex(g), rhs.latex(&names, table)));
            }
            s.push_str("\\end{aligned}\n");
            s
        }
        Format::Json => {
            let lifted: Vec<Value> = raw
                .iter()
                .map(|(l, r)| json!({"lhs": l.text(&names, table), "rhs": r.text(&names, table)}))
                .collect();
            let solved: Vec<Value> = rel
                .solved()
                .iter()
                .map(|(g, rhs)| {
                    let terms: Vec<Value> = rhs
                        .terms()
                        .iter()
                        .map(|(h, c)| json!({"gen": names.text(h), "coeff": c.display(table).to_string()}))
                        .collect();
                    json!({"lhs": names.text(g), "rhs": terms})
                })
                .collect();
            pretty(&json!({
                "order": order,
                "lifted": lifted,
                "solved": solved,
                "parametric": rel.parametric().iter().map(|g| names.text(g)).collect::<Vec<_>>(),
                "assumptions": assumptions,
            }))
        }
    };
    out.write_all(s.as_bytes())?;
    Ok(())
}

fn prolong(input: &Path, order: Option<u32>, format: Format, out: &mut dyn Write) -> Outcome {
    let sys = load_system(input)?;
    let order = order.unwrap_or(sys.order() + 1);
    let p = sys.prolong(order);
    let lines: Vec<String> = p.equations().iter().map(|e| p.equation_text(e)).collect();
    let s = match format {
        Format::Text => {
            let mut s = format!("# {} equations up to order {order}\n", lines.len());
            for l in &lines {
                s.push_str(l);
                s.push('\n');
            }
            s
        }
        Format::Json => pretty(&json!({"order": order, "equations": lines})),
        Format::Latex => return Err(unsupported(format, "prolong")),
    };
    out.write_all(s.as_bytes())?;
    Ok(())
}

fn bracket(
    input: &Path,
    order: Option<u32>,
    point: Option<&str>,
    format: Format,
    cap: Option<u32>,
    out: &mut dyn Write,
) -> Outcome {
    let sys = load_system(input)?;
    let z0 = parse_point(point, &sys.coord_names())?;
    let start = order.unwrap_or(sys.order().max(1));
    let last = if order.is_some() { start } else { start + 4 };
    let mut n = start;
    let table = loop {
        let basis = solution_basis(&sys, &z0, n, cap)?;
        match basis.bracket_table(&sys) {
            Err(JetError::NotFiniteType(_)) if n < last => n += 1,
            other => break other?,
        }
    };
    let s = match format {
        Format::Text => format!(
            "# solution jets to order {n}, dimension {}\n{}",
            table.legend.len(),
            table.text()
        ),
        Format::Json => pretty(&table.to_json()),
        Format::Latex => return Err(unsupported(format, "bracket")),
    };
    out.write_all(s.as_bytes())?;
    Ok(())
}

fn duality(
    input: &Path,
    order: u32,
    point: Option<&str>,
    format: Format,
    cap: Option<u32>,
    out: &mut dyn Write,
) -> Outcome {
    let sys = load_system(input)?;
    let z0 = parse_point(point, &sys.coord_names())?;
    let eqs = StructureEquationSet::from_system(&sys, order, cap)?;
    let basis = solution_basis(&sys, &z0, order + 1, cap)?;
    let numeric = check_duality(&eqs, &basis.jets, &z0)?;
    let symbolic = check_duality_symbolic(&eqs)?;
    let passed = numeric.passed() && symbolic.passed();
    let point_text: Vec<String> = sys
        .coord_names()
        .iter()
        .zip(&z0)
        .map(|(n, v)| format!("{n}={v}"))
        .collect();
    let s = match format {
        Format::Text => {
            let mut s = format!(
                "# (d g)(v, w) = -<g, [v, w]> for {} equations and {} solution jets\n",
                eqs.basis().len(),
                basis.jets.len()
            );
            s.push_str(&format!("at {}: {}", point_text.join(", "), numeric.text(eqs.names())));
            s.push_str(&format!(
                "with free targets: {}",
                symbolic.text_with(eqs.names(), |v| v.display(eqs.table()).to_string())
            ));
            s
        }
        Format::Json => pretty(&json!({
            "point": point_text,
            "pairings": numeric.pairings,
            "violations": numeric.violations.len(),
            "symbolic_pairings": symbolic.pairings,
            "symbolic_violations": symbolic.violations.len(),
        })),
        Format::Latex => return Err(unsupported(format, "check-duality")),
    };
    out.write_all(s.as_bytes())?;
    if passed {
        Ok(())
    } else {
        Err(Failure::Verification)
    }
}

fn check_d2(input: &Path, order: u32, format: Format, cap: Option<u32>, out: &mut dyn Write) -> Outcome {
    let sys = load_system(input)?;
    let eqs = StructureEquationSet::from_system(&sys, order, cap)?;
    let report = eqs.check_d_squared()?;
    let s = match format {
        Format::Text => report.text(&eqs),
        Format::Json => {
            let residues: Vec<Value> = report
                .residues
                .iter()
                .map(|(g, r)| {
                    let r = if r.is_zero() {
                        "0".to_string()
                    } else {
                        r.text(eqs.names(), eqs.table())
                    };
                    json!({"lhs": eqs.names().text(g), "residue": r})
                })
                .collect();
            pretty(&json!({"order": order, "residues": residues, "clean": report.is_clean()}))
        }
        Format::Latex => return Err(unsupported(format, "check-d2")),
    };
    out.write_all(s.as_bytes())?;
    if report.is_clean() {
        Ok(())
    } else {
        Err(Failure::Verification)
    }
}

fn verify_coframe(input: &Path, format: Format, out: &mut dyn Write) -> Outcome {
    let text = read(input)?;
    let frame = Coframe::parse(&text).map_err(|e| Failure::Input(format!("{}: {e}", input.display())))?;
    let report = frame.verify()?;
    let s = match format {
        Format::Text => report.text(&frame),
        Format::Json => {
            let claims: Vec<Value> = report
                .results
                .iter()
                .map(|r| {
                    json!({
                        "form": frame.names()[r.form],
                        "claimed": frame.frame_text(&r.claimed),
                        "computed": r.expressed.as_ref().map(|w| frame.frame_text(w)),
                        "residue": if r.residue.is_zero() { "0".to_string() } else { r.residue.text(frame.table()) },
                    })
                })
                .collect();
            pretty(&json!({"claims": claims, "verified": report.verified()}))
        }
        Format::Latex => return Err(unsupported(format, "verify-coframe")),
    };
    out.write_all(s.as_bytes())?;
    if report.verified() {
        Ok(())
    } else {
        Err(Failure::Verification)
    }
}

fn dispatch(cmd: Command, out: &mut dyn Write) -> Outcome {
    match cmd {
        Command::Structure {
            input,
            order,
            format,
            cap,
        } => {
            let sys = load_system(&input)?;
            let set = StructureEquationSet::from_system(&sys, order, cap)?;
            emit_structure(&set, format, out)
        }
        Command::Lift {
            input,
            order,
            format,
            cap,
        } => lift(&input, order, format, cap, out),
        Command::Prolong { input, order, format } => prolong(&input, order, format, out),
        Command::Bracket {
            input,
            order,
            point,
            format,
            cap,
        } => bracket(&input, order, point.as_deref(), format, cap, out),
        Command::CheckDuality {
            input,
            order,
            point,
            format,
            cap,
        } => duality(&input, order, point.as_deref(), format, cap, out),
        Command::CheckD2 {
            input,
            order,
            format,
            cap,
        } => check_d2(&input, order, format, cap, out),
        Command::Diffeo { dim, order, format } => {
            if dim == 0 {
                return Err(Failure::Input("--dim must be at least 1".into()));
            }
            emit_structure(&StructureEquationSet::diffeo(dim, order), format, out)
        }
        Command::VerifyCoframe { input, format } => verify_coframe(&input, format, out),
    }
}

fn color_enabled() -> bool {
    std::env::var("MCFORGE_COLOR").is_ok_and(|v| v == "1")
}

/// Runs one command; `args[0]` is the program name.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let text = e.render().to_string();
            if code == 0 {
                let _ = out.write_all(text.as_bytes());
            } else {
                let _ = err.write_all(text.as_bytes());
            }
            return code;
        }
    };
    match dispatch(cli.command, out) {
        Ok(()) => 0,
        Err(Failure::Verification) => 1,
        Err(Failure::Input(msg)) => {
            let label = if color_enabled() {
                "\x1b[31merror:\x1b[0m"
            } else {
                "error:"
            };
            let _ = writeln!(err, "{label} {msg}");
            2
        }
    }
}
