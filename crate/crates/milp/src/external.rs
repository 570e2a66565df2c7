//! Bridge to an external MILP solver driven through MPS files.
//!
//! The command is invoked as `<cmd...> <model.mps> <solution.sol>`. The
//! solution file holds `status <word>`, `objective <value>`, then one
//! `<name> <value>` line per variable. Every returned point is checked
//! against the model before it is accepted.

use std::collections::HashMap;
use std::path::Path;
use std::process::Command;

use crate::bnb::MilpStatus;
use crate::error::MilpError;
use crate::model::MilpModel;
use crate::mps::write_mps;

/// Tolerance for revalidating an external solution.
pub const REVALIDATION_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct SolutionFile {
    pub status: String,
    pub objective: Option<f64>,
    pub values: Vec<(String, f64)>,
}

pub fn parse_solution(text: &str) -> Result<SolutionFile, MilpError> {
    let err = |line: usize, message: String| MilpError::SolutionParse { line, message };
    let mut status = None;
    let mut objective = None;
    let mut values = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let ln = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut it = line.split_whitespace();
        let key = it.next().unwrap_or_default();
        let val = it.next().ok_or_else(|| err(ln, "expected two fields".into()))?;
        if it.next().is_some() {
            return Err(err(ln, "expected two fields".into()));
        }
        match key {
            "status" if status.is_none() => {
                match val {
                    "optimal" | "feasible" | "infeasible" | "limit" => {}
                    other => return Err(err(ln, format!("unknown status `{other}`"))),
                }
                status = Some(val.to_string());
            }
            "objective" if objective.is_none() && status.is_some() => {
                objective = Some(
                    val.parse()
                        .map_err(|_| err(ln, format!("bad objective `{val}`")))?,
                );
            }
            _ => {
                if status.is_none() {
                    return Err(err(ln, "first line must be `status <word>`".into()));
                }
                let v: f64 = val
                    .parse()
                    .map_err(|_| err(ln, format!("bad value `{val}` for `{key}`")))?;
                values.push((key.to_string(), v));
            }
        }
    }
    Ok(SolutionFile {
        status: status.ok_or_else(|| err(0, "missing status line".into()))?,
        objective,
        values,
    })
}

#[derive(Clone, Debug)]
pub struct ExternalSolution {
    pub status: MilpStatus,
    pub values: Vec<f64>,
    /// Objective recomputed from `values`.
    pub objective: f64,
    pub reported_objective: Option<f64>,
    pub max_violation: f64,
}

/// Maps a parsed solution file onto `model` and revalidates it.
pub fn accept_solution(model: &MilpModel, sol: &SolutionFile) -> Result<ExternalSolution, MilpError> {
    let status = match sol.status.as_str() {
        "optimal" => MilpStatus::Optimal,
        "feasible" => MilpStatus::Feasible,
        "infeasible" => MilpStatus::Infeasible,
        _ => MilpStatus::Limit,
    };
    if matches!(status, MilpStatus::Infeasible | MilpStatus::Limit) && sol.values.is_empty() {
        return Ok(ExternalSolution {
            status,
            values: Vec::new(),
            objective: f64::NAN,
            reported_objective: sol.objective,
            max_violation: f64::NAN,
        });
    }
    let mut values = vec![f64::NAN; model.num_vars()];
    let index: HashMap<&str, usize> = model
        .variables()
        .iter()
        .enumerate()
        .map(|(j, v)| (v.name.as_str(), j))
        .collect();
    for (name, v) in &sol.values {
        let &j = index
            .get(name.as_str())
            .ok_or_else(|| MilpError::Revalidation(format!("unknown variable `{name}`")))?;
        values[j] = *v;
    }
    if let Some(j) = values.iter().position(|v| v.is_nan()) {
        return Err(MilpError::Revalidation(format!(
            "no value for `{}`",
            model.variables()[j].name
        )));
    }
    let viol = model.max_violation(&values)?;
    if viol.max() > REVALIDATION_TOL {
        let what = match (viol.row_id, viol.bound_var) {
            (Some(r), _) if viol.row >= viol.bound => model.constraints()[r.0].name.clone(),
            (_, Some(v)) => model.variables()[v.0].name.clone(),
            _ => "integrality".into(),
        };
        return Err(MilpError::Revalidation(format!(
            "violation {:.3e} at `{what}`",
            viol.max()
        )));
    }
    let objective = model.evaluate_objective(&values);
    if let Some(rep) = sol.objective {
        if (rep - objective).abs() > REVALIDATION_TOL * objective.abs().max(1.0) {
            return Err(MilpError::Revalidation(format!(
                "reported objective {rep} differs from recomputed {objective}"
            )));
        }
    }
    Ok(ExternalSolution {
        status,
        values,
        objective,
        reported_objective: sol.objective,
        max_violation: viol.max(),
    })
}

/// Writes `model` into `workdir`, runs `command` on it and revalidates the result.
pub fn solve_external(
    model: &MilpModel,
    command: &str,
    workdir: &Path,
) -> Result<ExternalSolution, MilpError> {
    let ext_err = |message: String| MilpError::External {
        command: command.to_string(),
        message,
    };
    let mut parts = command.split_whitespace();
    let program = parts.next().ok_or_else(|| ext_err("empty command".into()))?;
    std::fs::create_dir_all(workdir).map_err(|e| MilpError::io(workdir, e))?;
    let mps = workdir.join("model.mps");
    let sol_path = workdir.join("model.sol");
    write_mps(model, &mps)?;
    let _ = std::fs::remove_file(&sol_path);
    let output = Command::new(program)
        .args(parts)
        .arg(&mps)
        .arg(&sol_path)
        .output()
        .map_err(|e| ext_err(e.to_string()))?;
    if !output.status.success() {
        let stderr = String::from_utf8_lossy(&output.stderr);
        return Err(ext_err(format!(
            "exit status {}: {}",
            output.status,
            stderr.lines().last().unwrap_or_default()
        )));
    }
    let text = std::fs::read_to_string(&sol_path).map_err(|e| MilpError::io(&sol_path, e))?;
    accept_solution(model, &parse_solution(&text)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Sense;

    fn model() -> MilpModel {
        let mut m = MilpModel::new("e");
        let x = m.add_continuous("x", 0.0, 2.0).unwrap();
        let b = m.add_binary("b").unwrap();
        m.set_objective_coeff(x, 1.0);
        m.add_row("r", vec![(x, 1.0), (b, -2.0)], Sense::Le, 0.0).unwrap();
        m
    }

    #[test]
    fn parses_grammar() {
        let s = parse_solution("status optimal\nobjective 2\nx 2\nb 1\n").unwrap();
        assert_eq!(s.status, "optimal");
        assert_eq!(s.objective, Some(2.0));
        assert_eq!(s.values.len(), 2);
        assert!(parse_solution("x 1\n").is_err());
        assert!(parse_solution("status great\n").is_err());
    }

    #[test]
    fn accepts_and_rejects() {
        let m = model();
        let ok = parse_solution("status optimal\nobjective 2\nx 2\nb 1\n").unwrap();
        let a = accept_solution(&m, &ok).unwrap();
        assert_eq!(a.values, vec![2.0, 1.0]);
        let bad = parse_solution("status optimal\nobjective 2\nx 2\nb 0\n").unwrap();
        assert!(matches!(accept_solution(&m, &bad), Err(MilpError::Revalidation(_))));
        let missing = parse_solution("status optimal\nx 2\n").unwrap();
        assert!(accept_solution(&m, &missing).is_err());
        let wrong_obj = parse_solution("status optimal\nobjective 3\nx 2\nb 1\n").unwrap();
        assert!(accept_solution(&m, &wrong_obj).is_err());
        let inf = parse_solution("status infeasible\n").unwrap();
        assert_eq!(accept_solution(&m, &inf).unwrap().status, MilpStatus::Infeasible);
    }
}
