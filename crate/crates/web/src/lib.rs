//! Browser bindings. Each exported function takes plain strings and
//! returns the rendered output or an error message; the page in `www/`
//! calls them directly.

use mcforge::detsys::DeterminingSystem;
use mcforge::jetalg::{solution_basis, JetError};
use mcforge::structure::StructureEquationSet;
use num_rational::BigRational;
use wasm_bindgen::prelude::*;

const EXAMPLES: &[(&str, &str)] = &[
    (
        "cartan_essential",
        include_str!("../../core/examples/cartan_essential.dsys"),
    ),
    (
        "intransitive_translation",
        include_str!("../../core/examples/intransitive_translation.dsys"),
    ),
    (
        "euclidean_plane",
        include_str!("../../core/examples/euclidean_plane.dsys"),
    ),
    (
        "projective_line",
        include_str!("../../core/examples/projective_line.dsys"),
    ),
];

fn render(set: &StructureEquationSet, format: &str) -> Result<String, String> {
    match format {
        "text" => Ok(set.text()),
        "latex" => Ok(set.latex()),
        "json" => serde_json::to_string_pretty(&set.to_json()).map_err(|e| e.to_string()),
        other => Err(format!("unknown format `{other}`")),
    }
}

fn parse(source: &str) -> Result<DeterminingSystem, String> {
    DeterminingSystem::parse(source).map_err(|e| e.to_string())
}

/// Structure equations of the system written in `source`.
pub fn structure_text(source: &str, order: u32, format: &str) -> Result<String, String> {
    let sys = parse(source)?;
    let set = StructureEquationSet::from_system(&sys, order, None).map_err(|e| e.to_string())?;
    render(&set, format)
}

pub fn diffeo_text(dim: usize, order: u32, format: &str) -> Result<String, String> {
    if dim == 0 || dim > 4 || order > 6 {
        return Err("dimension must be 1..=4 and order at most 6".into());
    }
    render(&StructureEquationSet::diffeo(dim, order), format)
}

/// Bracket table at a comma-separated point such as `0, 1/2`; missing
/// coordinates are 1. The jet order grows until the basis is finite.
pub fn bracket_text(source: &str, point: &str) -> Result<String, String> {
    let sys = parse(source)?;
    let mut z0 = Vec::new();
    for (i, part) in point.split(',').map(str::trim).enumerate() {
        if i >= sys.dim() {
            return Err(format!("the system has only {} coordinates", sys.dim()));
        }
        if !part.is_empty() {
            z0.push(
                part.parse::<BigRational>()
                    .map_err(|_| format!("`{part}` is not a rational number"))?,
            );
        }
    }
    z0.resize(sys.dim(), BigRational::from_integer(1.into()));
    let start = sys.order().max(1);
    for n in start..=start + 4 {
        let basis = solution_basis(&sys, &z0, n, None).map_err(|e| e.to_string())?;
        match basis.bracket_table(&sys) {
            Ok(table) => return Ok(format!("# dimension {}\n{}", table.legend.len(), table.text())),
            Err(JetError::NotFiniteType(_)) => continue,
            Err(e) => return Err(e.to_string()),
        }
    }
    Err("the solution space is not finite-dimensional at any order tried".into())
}

pub fn example_text(name: &str) -> Option<&'static str> {
    EXAMPLES.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

#[wasm_bindgen]
pub fn structure(source: &str, order: u32, format: &str) -> Result<String, JsValue> {
    structure_text(source, order, format).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn diffeo(dim: usize, order: u32, format: &str) -> Result<String, JsValue> {
    diffeo_text(dim, order, format).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn brackets(source: &str, point: &str) -> Result<String, JsValue> {
    bracket_text(source, point).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn example(name: &str) -> String {
    example_text(name).unwrap_or_default().to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples_compute() {
        for (name, src) in EXAMPLES {
            let out = structure_text(src, 1, "text").unwrap();
            assert!(out.starts_with("# structure equations"), "{name}");
        }
    }

    #[test]
    fn translation_is_abelian() {
        let out = structure_text(example_text("intransitive_translation").unwrap(), 1, "text").unwrap();
        assert!(out.ends_with("d mu^y = 0\n"), "{out}");
        let out = bracket_text(example_text("intransitive_translation").unwrap(), "").unwrap();
        assert!(out.contains("abelian"), "{out}");
    }

    #[test]
    fn bracket_point_parsing() {
        let src = example_text("projective_line").unwrap();
        assert!(bracket_text(src, "0").unwrap().contains("[v1, v2] = v1"));
        assert!(bracket_text(src, "1/2, 3").is_err());
        assert!(bracket_text(src, "zero").is_err());
    }

    #[test]
    fn infinite_type_is_reported() {
        assert!(bracket_text(example_text("cartan_essential").unwrap(), "").is_err());
    }

    #[test]
    fn diffeo_bounds() {
        assert!(diffeo_text(1, 2, "latex").unwrap().contains("\\wedge"));
        assert!(diffeo_text(0, 1, "text").is_err());
        assert!(diffeo_text(1, 1, "pdf").is_err());
    }

    #[test]
    fn parse_errors_are_strings() {
        let e = structure_text("coords: x\nfields: xi\neq: xi_q = 0\n", 1, "text").unwrap_err();
        assert!(e.contains("3:"), "{e}");
    }
}
