//! Free-format MPS export and import.
//!
//! Exported files declare `OBJSENSE MAX`, wrap binaries in `INTORG`/`INTEND`
//! markers with `BV` bounds, and store the objective constant as the negated
//! right-hand side of the objective row. Rows and columns appear in model
//! declaration order, so the same model always produces the same bytes.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::MilpError;
use crate::model::{MilpModel, Sense, VarId, VarKind};

const OBJ_ROW: &str = "OBJ";

fn check_name(name: &str) -> Result<(), MilpError> {
    if name.is_empty() || name.chars().any(char::is_whitespace) || name == OBJ_ROW {
        return Err(MilpError::MpsParse {
            line: 0,
            message: format!("name `{name}` cannot be written to free MPS"),
        });
    }
    Ok(())
}

/// Renders `model` as free MPS text.
pub fn to_mps_string(model: &MilpModel) -> Result<String, MilpError> {
    let n = model.num_vars();
    let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (i, c) in model.constraints().iter().enumerate() {
        check_name(&c.name)?;
        let mut merged: Vec<(usize, f64)> = c.coeffs.iter().map(|&(v, a)| (v.0, a)).collect();
        merged.sort_by_key(|e| e.0);
        let mut k = 0;
        while k < merged.len() {
            let j = merged[k].0;
            let mut a = 0.0;
            while k < merged.len() && merged[k].0 == j {
                a += merged[k].1;
                k += 1;
            }
            if a != 0.0 {
                cols[j].push((i, a));
            }
        }
    }

    let mut out = String::new();
    let name = if model.name.is_empty() { "MODEL" } else { model.name.as_str() };
    let _ = writeln!(out, "NAME {}", name.replace(char::is_whitespace, "_"));
    out.push_str("OBJSENSE\n    MAX\nROWS\n");
    let _ = writeln!(out, " N  {OBJ_ROW}");
    for c in model.constraints() {
        let s = match c.sense {
            Sense::Le => 'L',
            Sense::Ge => 'G',
            Sense::Eq => 'E',
        };
        let _ = writeln!(out, " {s}  {}", c.name);
    }
    out.push_str("COLUMNS\n");
    let mut in_int = false;
    let mut marker = 0usize;
    for (j, v) in model.variables().iter().enumerate() {
        check_name(&v.name)?;
        let is_int = v.kind == VarKind::Binary;
        if is_int != in_int {
            let tag = if is_int { "INTORG" } else { "INTEND" };
            let _ = writeln!(out, "    M{marker} 'MARKER' '{tag}'");
            marker += 1;
            in_int = is_int;
        }
        let c = model.objective()[j];
        if c != 0.0 || cols[j].is_empty() {
            let _ = writeln!(out, "    {} {OBJ_ROW} {}", v.name, fmt_num(c));
        }
        for &(i, a) in &cols[j] {
            let _ = writeln!(out, "    {} {} {}", v.name, model.constraints()[i].name, fmt_num(a));
        }
    }
    if in_int {
        let _ = writeln!(out, "    M{marker} 'MARKER' 'INTEND'");
    }
    out.push_str("RHS\n");
    if model.objective_constant() != 0.0 {
        let _ = writeln!(out, "    RHS {OBJ_ROW} {}", fmt_num(-model.objective_constant()));
    }
    for c in model.constraints() {
        if c.rhs != 0.0 {
            let _ = writeln!(out, "    RHS {} {}", c.name, fmt_num(c.rhs));
        }
    }
    out.push_str("BOUNDS\n");
    for v in model.variables() {
        let (lo, hi) = (v.lower, v.upper);
        if v.kind == VarKind::Binary && lo == 0.0 && hi == 1.0 {
            let _ = writeln!(out, " BV BND {}", v.name);
        } else if lo == hi {
            let _ = writeln!(out, " FX BND {} {}", v.name, fmt_num(lo));
        } else if lo == f64::NEG_INFINITY && hi == f64::INFINITY {
            let _ = writeln!(out, " FR BND {}", v.name);
        } else {
            if lo == f64::NEG_INFINITY {
                let _ = writeln!(out, " MI BND {}", v.name);
            } else if lo != 0.0 || v.kind == VarKind::Binary {
                let _ = writeln!(out, " LO BND {} {}", v.name, fmt_num(lo));
            }
            if hi != f64::INFINITY {
                let _ = writeln!(out, " UP BND {} {}", v.name, fmt_num(hi));
            } else if v.kind == VarKind::Binary {
                let _ = writeln!(out, " PL BND {}", v.name);
            }
        }
    }
    out.push_str("ENDATA\n");
    Ok(out)
}

fn fmt_num(x: f64) -> String {
    // Shortest representation that parses back to the same f64.
    let s = format!("{x:?}");
    s.strip_suffix(".0").map(str::to_owned).unwrap_or(s)
}

pub fn write_mps(model: &MilpModel, path: &Path) -> Result<(), MilpError> {
    let text = to_mps_string(model)?;
    std::fs::write(path, text).map_err(|e| MilpError::io(path, e))
}

pub fn read_mps(path: &Path) -> Result<MilpModel, MilpError> {
    let text = std::fs::read_to_string(path).map_err(|e| MilpError::io(path, e))?;
    parse_mps(&text)
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    None,
    ObjSense,
    Rows,
    Columns,
    Rhs,
    Bounds,
}

struct ColumnData {
    name: String,
    integer: bool,
    obj: f64,
    entries: Vec<(usize, f64)>,
    lower: Option<f64>,
    upper: Option<f64>,
}

/// Parses free MPS text. Minimization models are negated into the
/// maximization form used by [`MilpModel`].
pub fn parse_mps(text: &str) -> Result<MilpModel, MilpError> {
    let err = |line: usize, message: String| MilpError::MpsParse { line, message };
    let num = |line: usize, s: &str| -> Result<f64, MilpError> {
        s.parse::<f64>()
            .map_err(|_| MilpError::MpsParse { line, message: format!("bad number `{s}`") })
    };

    let mut name = String::new();
    let mut maximize = false;
    let mut section = Section::None;
    let mut obj_row: Option<String> = None;
    let mut rows: Vec<(String, Sense)> = Vec::new();
    let mut row_index: HashMap<String, usize> = HashMap::new();
    let mut rhs: Vec<f64> = Vec::new();
    let mut obj_rhs = 0.0;
    let mut cols: Vec<ColumnData> = Vec::new();
    let mut col_index: HashMap<String, usize> = HashMap::new();
    let mut integer = false;
    let mut ended = false;

    for (ln0, raw) in text.lines().enumerate() {
        let ln = ln0 + 1;
        let line = raw.trim_end();
        if line.trim().is_empty() || line.starts_with('*') {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if !raw.starts_with(' ') && !raw.starts_with('\t') {
            match toks[0] {
                "NAME" => {
                    name = toks.get(1).map(|s| s.to_string()).unwrap_or_default();
                    section = Section::None;
                }
                "OBJSENSE" => {
                    if let Some(s) = toks.get(1) {
                        maximize = parse_sense(ln, s)?;
                        section = Section::None;
                    } else {
                        section = Section::ObjSense;
                    }
                }
                "ROWS" => section = Section::Rows,
                "COLUMNS" => section = Section::Columns,
                "RHS" => section = Section::Rhs,
                "BOUNDS" => section = Section::Bounds,
                "RANGES" => return Err(err(ln, "RANGES section is not supported".into())),
                "ENDATA" => {
                    ended = true;
                    break;
                }
                other => return Err(err(ln, format!("unknown section `{other}`"))),
            }
            continue;
        }
        match section {
            Section::None => return Err(err(ln, "data line outside any section".into())),
            Section::ObjSense => {
                maximize = parse_sense(ln, toks[0])?;
            }
            Section::Rows => {
                if toks.len() != 2 {
                    return Err(err(ln, "ROWS entry needs a type and a name".into()));
                }
                let sense = match toks[0] {
                    "N" => {
                        if obj_row.is_none() {
                            obj_row = Some(toks[1].to_string());
                        }
                        continue;
                    }
                    "L" => Sense::Le,
                    "G" => Sense::Ge,
                    "E" => Sense::Eq,
                    t => return Err(err(ln, format!("unknown row type `{t}`"))),
                };
                if row_index.insert(toks[1].to_string(), rows.len()).is_some() {
                    return Err(err(ln, format!("duplicate row `{}`", toks[1])));
                }
                rows.push((toks[1].to_string(), sense));
                rhs.push(0.0);
            }
            Section::Columns => {
                if toks.len() >= 3 && toks[1] == "'MARKER'" {
                    match toks[2] {
                        "'INTORG'" => integer = true,
                        "'INTEND'" => integer = false,
                        t => return Err(err(ln, format!("unknown marker `{t}`"))),
                    }
                    continue;
                }
                if toks.len() != 3 && toks.len() != 5 {
                    return Err(err(ln, "COLUMNS entry needs 3 or 5 fields".into()));
                }
                let j = match col_index.get(toks[0]) {
                    Some(&j) => j,
                    None => {
                        col_index.insert(toks[0].to_string(), cols.len());
                        cols.push(ColumnData {
                            name: toks[0].to_string(),
                            integer,
                            obj: 0.0,
                            entries: Vec::new(),
                            lower: None,
                            upper: None,
                        });
                        cols.len() - 1
                    }
                };
                for pair in toks[1..].chunks(2) {
                    let v = num(ln, pair[1])?;
                    if obj_row.as_deref() == Some(pair[0]) {
                        cols[j].obj += v;
                    } else {
                        let &i = row_index
                            .get(pair[0])
                            .ok_or_else(|| err(ln, format!("unknown row `{}`", pair[0])))?;
                        cols[j].entries.push((i, v));
                    }
                }
            }
            Section::Rhs => {
                if toks.len() != 3 && toks.len() != 5 {
                    return Err(err(ln, "RHS entry needs 3 or 5 fields".into()));
                }
                for pair in toks[1..].chunks(2) {
                    let v = num(ln, pair[1])?;
                    if obj_row.as_deref() == Some(pair[0]) {
                        obj_rhs = v;
                    } else {
                        let &i = row_index
                            .get(pair[0])
                            .ok_or_else(|| err(ln, format!("unknown row `{}`", pair[0])))?;
                        rhs[i] = v;
                    }
                }
            }
            Section::Bounds => {
                if toks.len() < 3 {
                    return Err(err(ln, "BOUNDS entry needs at least 3 fields".into()));
                }
                let &j = col_index
                    .get(toks[2])
                    .ok_or_else(|| err(ln, format!("unknown column `{}`", toks[2])))?;
                let value = || -> Result<f64, MilpError> {
                    let s = toks.get(3).ok_or_else(|| err(ln, "bound value missing".into()))?;
                    num(ln, s)
                };
                let c = &mut cols[j];
                match toks[0] {
                    "UP" | "UI" => {
                        let v = value()?;
                        c.upper = Some(v);
                        if v < 0.0 && c.lower.is_none() {
                            c.lower = Some(f64::NEG_INFINITY);
                        }
                    }
                    "LO" | "LI" => c.lower = Some(value()?),
                    "FX" => {
                        let v = value()?;
                        c.lower = Some(v);
                        c.upper = Some(v);
                    }
                    "FR" => {
                        c.lower = Some(f64::NEG_INFINITY);
                        c.upper = Some(f64::INFINITY);
                    }
                    "MI" => c.lower = Some(f64::NEG_INFINITY),
                    "PL" => c.upper = Some(f64::INFINITY),
                    "BV" => {
                        c.integer = true;
                        c.lower = Some(0.0);
                        c.upper = Some(1.0);
                    }
                    t => return Err(err(ln, format!("unknown bound type `{t}`"))),
                }
            }
        }
    }
    if !ended {
        return Err(err(text.lines().count(), "missing ENDATA".into()));
    }

    let sign = if maximize { 1.0 } else { -1.0 };
    let mut model = MilpModel::new(name);
    let mut row_coeffs: Vec<Vec<(VarId, f64)>> = vec![Vec::new(); rows.len()];
    for c in &cols {
        let lower = c.lower.unwrap_or(0.0);
        let kind = if c.integer { VarKind::Binary } else { VarKind::Continuous };
        let upper = c.upper.unwrap_or(if c.integer { 1.0 } else { f64::INFINITY });
        if c.integer && (lower < 0.0 || upper > 1.0) {
            return Err(err(0, format!("general integer column `{}` is not supported", c.name)));
        }
        let id = model.add_var(c.name.clone(), lower, upper, kind)?;
        model.set_objective_coeff(id, sign * c.obj);
        for &(i, a) in &c.entries {
            row_coeffs[i].push((id, a));
        }
    }
    model.set_objective_constant(-sign * obj_rhs);
    for (((rname, sense), coeffs), r) in rows.into_iter().zip(row_coeffs).zip(rhs) {
        model.add_row(rname, coeffs, sense, r)?;
    }
    Ok(model)
}

fn parse_sense(line: usize, s: &str) -> Result<bool, MilpError> {
    match s {
        "MAX" | "MAXIMIZE" => Ok(true),
        "MIN" | "MINIMIZE" => Ok(false),
        _ => Err(MilpError::MpsParse { line, message: format!("unknown objective sense `{s}`") }),
    }
}
