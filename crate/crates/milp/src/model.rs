//! Solver-agnostic representation of a mixed-integer linear program.
//!
//! The objective is always maximized. Constraint rows are stored sparsely and
//! reference variables by [`VarId`]; every variable carries a unique name so
//! that the model can be written to and read back from MPS files.

use std::collections::HashMap;
use std::fmt;

use crate::error::MilpError;

/// Index of a variable inside a [`MilpModel`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub usize);

/// Index of a constraint row inside a [`MilpModel`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RowId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VarKind {
    Continuous,
    Binary,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

impl fmt::Display for Sense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sense::Le => "<=",
            Sense::Eq => "=",
            Sense::Ge => ">=",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Variable {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub kind: VarKind,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub name: String,
    pub coeffs: Vec<(VarId, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl Constraint {
    pub fn new(name: impl Into<String>, coeffs: Vec<(VarId, f64)>, sense: Sense, rhs: f64) -> Self {
        Self {
            name: name.into(),
            coeffs,
            sense,
            rhs,
        }
    }

    /// Row activity `a·x` at the given point.
    pub fn activity(&self, values: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(v, a)| a * values[v.0]).sum()
    }

    /// Amount by which the row is violated at `values` (zero when satisfied).
    pub fn violation(&self, values: &[f64]) -> f64 {
        let act = self.activity(values);
        match self.sense {
            Sense::Le => (act - self.rhs).max(0.0),
            Sense::Ge => (self.rhs - act).max(0.0),
            Sense::Eq => (act - self.rhs).abs(),
        }
    }
}

/// Counts reported by [`MilpModel::statistics`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ModelStatistics {
    pub continuous_vars: usize,
    pub binary_vars: usize,
    pub equality_rows: usize,
    pub inequality_rows: usize,
    pub nonzeros: usize,
}

impl fmt::Display for ModelStatistics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "continuous={} binary={} equality_rows={} inequality_rows={} nonzeros={}",
            self.continuous_vars,
            self.binary_vars,
            self.equality_rows,
            self.inequality_rows,
            self.nonzeros
        )
    }
}

/// A maximization MILP.
#[derive(Clone, Debug, Default)]
pub struct MilpModel {
    pub name: String,
    variables: Vec<Variable>,
    constraints: Vec<Constraint>,
    objective: Vec<f64>,
    objective_constant: f64,
    index: HashMap<String, VarId>,
}

impl MilpModel {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            ..Default::default()
        }
    }

    /// Declares a variable. Names must be unique; binaries are clamped to `[0, 1]`.
    pub fn add_var(
        &mut self,
        name: impl Into<String>,
        lower: f64,
        upper: f64,
        kind: VarKind,
    ) -> Result<VarId, MilpError> {
        let name = name.into();
        if self.index.contains_key(&name) {
            return Err(MilpError::DuplicateName(name));
        }
        if lower.is_nan() || upper.is_nan() {
            return Err(MilpError::InvalidBound { name, lower, upper });
        }
        let (lower, upper) = match kind {
            VarKind::Binary => (lower.max(0.0), upper.min(1.0)),
            VarKind::Continuous => (lower, upper),
        };
        let id = VarId(self.variables.len());
        self.index.insert(name.clone(), id);
        self.variables.push(Variable {
            name,
            lower,
            upper,
            kind,
        });
        self.objective.push(0.0);
        Ok(id)
    }

    pub fn add_continuous(
        &mut self,
        name: impl Into<String>,
        lower: f64,
        upper: f64,
    ) -> Result<VarId, MilpError> {
        self.add_var(name, lower, upper, VarKind::Continuous)
    }

    pub fn add_binary(&mut self, name: impl Into<String>) -> Result<VarId, MilpError> {
        self.add_var(name, 0.0, 1.0, VarKind::Binary)
    }

    /// Appends a row after checking that every coefficient references a declared variable.
    pub fn add_constraint(&mut self, constraint: Constraint) -> Result<RowId, MilpError> {
        for &(v, a) in &constraint.coeffs {
            if v.0 >= self.variables.len() {
                return Err(MilpError::UnknownVariable {
                    row: constraint.name.clone(),
                    index: v.0,
                });
            }
            if !a.is_finite() {
                return Err(MilpError::NonFiniteCoefficient(constraint.name.clone()));
            }
        }
        if constraint.rhs.is_nan() {
            return Err(MilpError::NonFiniteCoefficient(constraint.name.clone()));
        }
        let id = RowId(self.constraints.len());
        self.constraints.push(constraint);
        Ok(id)
    }

    pub fn add_row(
        &mut self,
        name: impl Into<String>,
        coeffs: Vec<(VarId, f64)>,
        sense: Sense,
        rhs: f64,
    ) -> Result<RowId, MilpError> {
        self.add_constraint(Constraint::new(name, coeffs, sense, rhs))
    }

    pub fn set_objective_coeff(&mut self, var: VarId, coeff: f64) {
        self.objective[var.0] = coeff;
    }

    pub fn add_objective_coeff(&mut self, var: VarId, coeff: f64) {
        self.objective[var.0] += coeff;
    }

    pub fn set_objective_constant(&mut self, constant: f64) {
        self.objective_constant = constant;
    }

    pub fn add_objective_constant(&mut self, constant: f64) {
        self.objective_constant += constant;
    }

    pub fn set_bounds(&mut self, var: VarId, lower: f64, upper: f64) {
        let v = &mut self.variables[var.0];
        v.lower = lower;
        v.upper = upper;
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn variable(&self, var: VarId) -> &Variable {
        &self.variables[var.0]
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn objective_constant(&self) -> f64 {
        self.objective_constant
    }

    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn num_rows(&self) -> usize {
        self.constraints.len()
    }

    pub fn var_by_name(&self, name: &str) -> Option<VarId> {
        self.index.get(name).copied()
    }

    pub fn binaries(&self) -> impl Iterator<Item = VarId> + '_ {
        self.variables
            .iter()
            .enumerate()
            .filter(|(_, v)| v.kind == VarKind::Binary)
            .map(|(i, _)| VarId(i))
    }

    pub fn statistics(&self) -> ModelStatistics {
        let mut s = ModelStatistics::default();
        for v in &self.variables {
            match v.kind {
                VarKind::Continuous => s.continuous_vars += 1,
                VarKind::Binary => s.binary_vars += 1,
            }
        }
        for c in &self.constraints {
            match c.sense {
                Sense::Eq => s.equality_rows += 1,
                Sense::Le | Sense::Ge => s.inequality_rows += 1,
            }
            s.nonzeros += c.coeffs.len();
        }
        s
    }

    /// Objective value `c·x + constant`.
    pub fn evaluate_objective(&self, values: &[f64]) -> f64 {
        self.objective
            .iter()
            .zip(values)
            .map(|(c, x)| c * x)
            .sum::<f64>()
            + self.objective_constant
    }

    /// Largest bound, row or integrality violation of `values`.
    pub fn max_violation(&self, values: &[f64]) -> Result<Violation, MilpError> {
        if values.len() != self.variables.len() {
            return Err(MilpError::DimensionMismatch {
                expected: self.variables.len(),
                found: values.len(),
            });
        }
        let mut worst = Violation::default();
        for (i, (v, &x)) in self.variables.iter().zip(values).enumerate() {
            let b = (v.lower - x).max(x - v.upper).max(0.0);
            if b > worst.bound {
                worst.bound = b;
                worst.bound_var = Some(VarId(i));
            }
            if v.kind == VarKind::Binary {
                let f = (x - x.round()).abs();
                if f > worst.integrality {
                    worst.integrality = f;
                }
            }
        }
        for (i, c) in self.constraints.iter().enumerate() {
            let r = c.violation(values);
            if r > worst.row {
                worst.row = r;
                worst.row_id = Some(RowId(i));
            }
        }
        Ok(worst)
    }

    /// Human-readable dump of every row with structured names.
    pub fn debug_dump(&self) -> String {
        use std::fmt::Write;
        let mut out = String::new();
        let _ = writeln!(out, "model {}", self.name);
        let _ = write!(out, "maximize");
        for (i, c) in self.objective.iter().enumerate() {
            if *c != 0.0 {
                let _ = write!(out, " {:+} {}", c, self.variables[i].name);
            }
        }
        if self.objective_constant != 0.0 {
            let _ = write!(out, " {:+}", self.objective_constant);
        }
        let _ = writeln!(out);
        let _ = writeln!(out, "subject to");
        for c in &self.constraints {
            let _ = write!(out, "  {}:", c.name);
            for &(v, a) in &c.coeffs {
                let _ = write!(out, " {:+} {}", a, self.variables[v.0].name);
            }
            let _ = writeln!(out, " {} {}", c.sense, c.rhs);
        }
        let _ = writeln!(out, "bounds");
        for v in &self.variables {
            let kind = match v.kind {
                VarKind::Continuous => "",
                VarKind::Binary => " binary",
            };
            let _ = writeln!(out, "  {} <= {} <= {}{}", v.lower, v.name, v.upper, kind);
        }
        out
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Violation {
    pub bound: f64,
    pub bound_var: Option<VarId>,
    pub row: f64,
    pub row_id: Option<RowId>,
    pub integrality: f64,
}

impl Violation {
    pub fn max(&self) -> f64 {
        self.bound.max(self.row).max(self.integrality)
    }
}
