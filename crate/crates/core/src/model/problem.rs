use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "=")]
    Eq,
}

impl fmt::Display for Sense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        })
    }
}

/// A row `sum(coefficients) <sense> rhs`. Coefficients are sorted by column
/// id and never zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearConstraint {
    pub name: String,
    /// Constraint family label, e.g. `C9-b`.
    pub tag: String,
    pub coefficients: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl LinearConstraint {
    pub fn new(
        name: impl Into<String>,
        tag: impl Into<String>,
        terms: impl IntoIterator<Item = (usize, f64)>,
        sense: Sense,
        rhs: f64,
    ) -> Self {
        let mut coefficients: Vec<(usize, f64)> = terms.into_iter().filter(|t| t.1 != 0.0).collect();
        coefficients.sort_by_key(|t| t.0);
        Self {
            name: name.into(),
            tag: tag.into(),
            coefficients,
            sense,
            rhs,
        }
    }

    /// Largest absolute coefficient, at least 1.
    pub fn scale(&self) -> f64 {
        self.coefficients.iter().fold(1.0, |m, &(_, a)| m.max(a.abs()))
    }

    pub fn activity(&self, x: &[f64]) -> f64 {
        self.coefficients.iter().map(|&(j, a)| a * x[j]).sum()
    }

    /// Amount by which `x` violates the row (zero when satisfied).
    pub fn violation(&self, x: &[f64]) -> f64 {
        let act = self.activity(x);
        match self.sense {
            Sense::Le => (act - self.rhs).max(0.0),
            Sense::Ge => (self.rhs - act).max(0.0),
            Sense::Eq => (act - self.rhs).abs(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub binary: bool,
}

impl Column {
    pub fn binary(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            lower: 0.0,
            upper: 1.0,
            binary: true,
        }
    }

    pub fn continuous(name: impl Into<String>, lower: f64, upper: f64) -> Self {
        Self {
            name: name.into(),
            lower,
            upper,
            binary: false,
        }
    }
}

/// A maximization MILP over bounded columns, some of them binary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MilpProblem {
    pub name: String,
    pub columns: Vec<Column>,
    pub constraints: Vec<LinearConstraint>,
    /// Sparse objective, sorted by column id.
    pub objective: Vec<(usize, f64)>,
    /// Inequalities implied by `constraints` plus integrality. They never cut
    /// off an integer-feasible point and only tighten the continuous
    /// relaxation.
    #[serde(default)]
    pub cuts: Vec<LinearConstraint>,
}

impl MilpProblem {
    pub fn num_columns(&self) -> usize {
        self.columns.len()
    }

    pub fn binary_columns(&self) -> Vec<usize> {
        (0..self.columns.len())
            .filter(|&j| self.columns[j].binary)
            .collect()
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().map(|&(j, c)| c * x[j]).sum()
    }

    pub fn dense_objective(&self) -> Vec<f64> {
        let mut c = vec![0.0; self.columns.len()];
        for &(j, v) in &self.objective {
            c[j] += v;
        }
        c
    }

    /// Constraints followed by cuts.
    pub fn all_rows(&self) -> impl Iterator<Item = &LinearConstraint> {
        self.constraints.iter().chain(&self.cuts)
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }
}
