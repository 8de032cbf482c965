//! Text persistence for models and point vectors.
//!
//! Model files:
//!
//! ```text
//! dirichlet-model v1 n=<N> base=<o>
//! P <idx> <m-weight> [<lattice coords>...]
//! J <i> <j> <value-per-ordered-pair>
//! M <x_0> ... <x_K>          # optional mesh nodes (node i = point i)
//! A <a_0> ... <a_{K-1}>      # interval conductances
//! D <d_0> ... <d_{K-1}>      # interval mass densities (default 1)
//! L <i> <j> <length>         # metric length override
//! ```
//!
//! Vector files hold `<point-index> <value>` lines. `#` starts a comment.
//! Numbers are written with 17 significant digits so that saving and
//! loading is the identity.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::error::{LabError, Result};
use crate::form::{DirichletFormModel, JumpKernel, LocalPart, ReferenceMeasure, StateSpace};

pub const MODEL_HEADER: &str = "dirichlet-model v1";

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// Serializes `model` in the text format.
pub fn model_to_string(model: &DirichletFormModel) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{MODEL_HEADER} n={} base={}", model.len(), model.base());
    for x in 0..model.len() {
        let _ = write!(out, "P {x} {}", num(model.measure().weight(x)));
        for c in model.space().label(x) {
            let _ = write!(out, " {c}");
        }
        out.push('\n');
    }
    for e in model.jump().edges() {
        let _ = writeln!(out, "J {} {} {}", e.i, e.j, num(e.value));
    }
    if let Some(lp) = model.local() {
        let join = |v: &[f64]| v.iter().map(|x| num(*x)).collect::<Vec<_>>().join(" ");
        let _ = writeln!(out, "M {}", join(lp.nodes()));
        let _ = writeln!(out, "A {}", join(lp.conductances()));
        let _ = writeln!(out, "D {}", join(lp.densities()));
    }
    for &(i, j, l) in model.length_overrides() {
        let _ = writeln!(out, "L {i} {j} {}", num(l));
    }
    out
}

pub fn save_model(model: &DirichletFormModel, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, model_to_string(model))?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<DirichletFormModel> {
    parse_model(&std::fs::read_to_string(path)?)
}

fn perr(line: usize, message: impl Into<String>) -> LabError {
    LabError::Parse {
        line,
        message: message.into(),
    }
}

fn field<T: FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| perr(line, format!("missing {what}")))?;
    tok.parse().map_err(|_| perr(line, format!("invalid {what} '{tok}'")))
}

fn finite(tok: Option<&str>, line: usize, what: &str) -> Result<f64> {
    let v: f64 = field(tok, line, what)?;
    if !v.is_finite() {
        return Err(perr(line, format!("non-finite {what}")));
    }
    Ok(v)
}

fn numbers<'a>(toks: impl Iterator<Item = &'a str>, line: usize, what: &str) -> Result<Vec<f64>> {
    toks.map(|t| finite(Some(t), line, what)).collect()
}

/// Significant lines as `(1-based line number, content)`.
fn lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(k, l)| {
        let l = l.split('#').next().unwrap_or("").trim();
        (!l.is_empty()).then_some((k + 1, l))
    })
}

fn header_value(tok: Option<&str>, key: &str, line: usize) -> Result<usize> {
    let tok = tok.ok_or_else(|| perr(line, format!("header lacks {key}=")))?;
    let v = tok.strip_prefix(key).and_then(|t| t.strip_prefix('='));
    let v = v.ok_or_else(|| perr(line, format!("expected {key}=<value>, got '{tok}'")))?;
    v.parse().map_err(|_| perr(line, format!("invalid {key} '{v}'")))
}

pub fn parse_model(text: &str) -> Result<DirichletFormModel> {
    let mut it = lines(text);
    let (hl, header) = it.next().ok_or_else(|| perr(1, "empty model file"))?;
    let rest = header
        .strip_prefix(MODEL_HEADER)
        .ok_or_else(|| perr(hl, format!("expected header '{MODEL_HEADER} n=<N> base=<o>'")))?;
    let mut ht = rest.split_whitespace();
    let n = header_value(ht.next(), "n", hl)?;
    let base = header_value(ht.next(), "base", hl)?;
    if let Some(t) = ht.next() {
        return Err(perr(hl, format!("unexpected header token '{t}'")));
    }
    if n == 0 {
        return Err(perr(hl, "n must be positive"));
    }
    let mut weights: Vec<Option<f64>> = vec![None; n];
    let mut labels: Vec<Vec<i64>> = vec![Vec::new(); n];
    let mut edges = Vec::new();
    let mut overrides = Vec::new();
    let (mut mesh, mut cond, mut dens) = (None, None, None);
    for (ln, l) in it {
        let mut t = l.split_whitespace();
        let tag = t.next().unwrap_or_default();
        match tag {
            "P" => {
                let x: usize = field(t.next(), ln, "point index")?;
                if x >= n {
                    return Err(perr(ln, format!("point index {x} out of range 0..{n}")));
                }
                if weights[x].is_some() {
                    return Err(perr(ln, format!("point {x} declared twice")));
                }
                weights[x] = Some(finite(t.next(), ln, "measure weight")?);
                labels[x] = t.map(|c| field(Some(c), ln, "coordinate")).collect::<Result<_>>()?;
            }
            "J" | "L" => {
                let i: usize = field(t.next(), ln, "point index")?;
                let j: usize = field(t.next(), ln, "point index")?;
                let v = finite(t.next(), ln, if tag == "J" { "kernel value" } else { "length" })?;
                if t.next().is_some() {
                    return Err(perr(ln, "trailing tokens"));
                }
                if i >= n || j >= n {
                    return Err(perr(ln, format!("pair ({i},{j}) out of range 0..{n}")));
                }
                if i == j {
                    return Err(perr(ln, format!("diagonal pair ({i},{i})")));
                }
                if tag == "J" {
                    if v < 0.0 {
                        return Err(perr(ln, format!("negative kernel value at ({i},{j})")));
                    }
                    edges.push((i, j, v));
                } else {
                    overrides.push((i, j, v));
                }
            }
            "M" | "A" | "D" => {
                let slot = match tag {
                    "M" => &mut mesh,
                    "A" => &mut cond,
                    _ => &mut dens,
                };
                if slot.is_some() {
                    return Err(perr(ln, format!("duplicate {tag} line")));
                }
                *slot = Some(numbers(t, ln, "mesh value")?);
            }
            other => return Err(perr(ln, format!("unknown record '{other}'"))),
        }
    }
    let weights = weights
        .into_iter()
        .enumerate()
        .map(|(x, w)| w.ok_or_else(|| LabError::InvalidModel(format!("point {x} has no P line"))))
        .collect::<Result<Vec<_>>>()?;
    let local = match (mesh, cond) {
        (Some(m), Some(a)) => Some(LocalPart::new(m, a, dens)?),
        (None, None) if dens.is_none() => None,
        _ => return Err(LabError::InvalidModel("mesh needs both M and A lines".into())),
    };
    let model = DirichletFormModel::new(
        StateSpace::with_labels(labels, base)?,
        ReferenceMeasure::new(weights)?,
        JumpKernel::from_edges(edges)?,
        local,
    )?;
    model.with_length_overrides(overrides)
}

/// Serializes a full vector as `<index> <value>` lines.
pub fn vector_to_string(f: &[f64]) -> String {
    let mut out = String::new();
    for (x, v) in f.iter().enumerate() {
        let _ = writeln!(out, "{x} {}", num(*v));
    }
    out
}

pub fn save_vector(f: &[f64], path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, vector_to_string(f))?;
    Ok(())
}

/// `(index, value)` entries in file order; duplicates are an error.
pub fn parse_entries(text: &str) -> Result<Vec<(usize, f64)>> {
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    for (ln, l) in lines(text) {
        let mut t = l.split_whitespace();
        let x: usize = field(t.next(), ln, "point index")?;
        let v = finite(t.next(), ln, "value")?;
        if t.next().is_some() {
            return Err(perr(ln, "trailing tokens"));
        }
        if !seen.insert(x) {
            return Err(perr(ln, format!("index {x} given twice")));
        }
        out.push((x, v));
    }
    Ok(out)
}

/// A vector on `n` points; every index must appear.
pub fn parse_vector(text: &str, n: usize) -> Result<Vec<f64>> {
    let mut f = vec![None; n];
    for (x, v) in parse_entries(text)? {
        if x >= n {
            return Err(LabError::pre(format!("vector index {x} out of range 0..{n}")));
        }
        f[x] = Some(v);
    }
    f.into_iter()
        .enumerate()
        .map(|(x, v)| v.ok_or_else(|| LabError::pre(format!("vector has no value for point {x}"))))
        .collect()
}

pub fn load_vector(path: impl AsRef<Path>, n: usize) -> Result<Vec<f64>> {
    parse_vector(&std::fs::read_to_string(path)?, n)
}

pub fn load_entries(path: impl AsRef<Path>) -> Result<Vec<(usize, f64)>> {
    parse_entries(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str =
        "# comment\ndirichlet-model v1 n=3 base=1\nP 0 1.0 -1\nP 1 2.0 0\nP 2 1.0 1 # tail\nJ 0 1 0.5\nJ 2 1 0.25\n";

    #[test]
    fn parse_small() {
        let m = parse_model(SMALL).unwrap();
        assert_eq!(m.len(), 3);
        assert_eq!(m.base(), 1);
        assert_eq!(m.space().label(0), &[-1]);
        assert_eq!(m.jump().value(1, 2), 0.25);
        assert_eq!(parse_model(&model_to_string(&m)).unwrap(), m);
    }

    #[test]
    fn error_messages() {
        let bad = SMALL.replace("P 1 2.0 0", "P 1 -2.0 0");
        assert_eq!(
            parse_model(&bad).unwrap_err().to_string(),
            "nonpositive measure at point 1"
        );
        let asym = format!("{SMALL}J 1 0 0.75\n");
        assert_eq!(
            parse_model(&asym).unwrap_err().to_string(),
            "asymmetric kernel at (0,1)"
        );
        let garbage = SMALL.replace("J 0 1 0.5", "J 0 x 0.5");
        assert_eq!(
            parse_model(&garbage).unwrap_err().to_string(),
            "line 6: invalid point index 'x'"
        );
        assert!(parse_model("P 0 1\n").is_err());
    }

    #[test]
    fn mesh_and_overrides_roundtrip() {
        let text = "dirichlet-model v1 n=3 base=0\nP 0 1\nP 1 1\nP 2 1\nM 0 0.5 1.5\nA 2 1\nD 1 0.5\nL 0 2 0.125\n";
        let m = parse_model(text).unwrap();
        assert!(m.local().is_some());
        assert_eq!(m.length_overrides(), &[(0, 2, 0.125)]);
        assert_eq!(parse_model(&model_to_string(&m)).unwrap(), m);
    }

    #[test]
    fn vectors() {
        let f = vec![0.1, -3.0e-300, 7.0];
        assert_eq!(parse_vector(&vector_to_string(&f), 3).unwrap(), f);
        assert!(parse_vector("0 1\n", 2).is_err());
        assert!(parse_entries("0 1\n0 2\n").is_err());
    }
}
