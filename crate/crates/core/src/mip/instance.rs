use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::InstanceError;

/// Sense of a constraint row before normalization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

/// A mixed integer program `min c'x  s.t.  Ax <= b, lb <= x <= ub`, with an
/// integrality mark per variable.
///
/// Every row is stored in `<=` form. The matrix is kept as row-major
/// triplets sorted by `(row, col)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MipInstance {
    name: String,
    n: usize,
    m: usize,
    c: Vec<f64>,
    triplets: Vec<(usize, usize, f64)>,
    row_start: Vec<usize>,
    b: Vec<f64>,
    integrality: Vec<bool>,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl MipInstance {
    /// Builds and validates an instance from raw parts. Triplets may come in
    /// any order; they are sorted row-major.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: impl Into<String>,
        n: usize,
        m: usize,
        c: Vec<f64>,
        mut triplets: Vec<(usize, usize, f64)>,
        b: Vec<f64>,
        integrality: Vec<bool>,
        lower: Vec<f64>,
        upper: Vec<f64>,
    ) -> Result<Self, InstanceError> {
        for (what, len, want) in [
            ("c", c.len(), n),
            ("b", b.len(), m),
            ("integrality", integrality.len(), n),
            ("lb", lower.len(), n),
            ("ub", upper.len(), n),
        ] {
            if len != want {
                return Err(InstanceError::Length { field: what, expected: want, found: len });
            }
        }
        triplets.sort_by_key(|t| (t.0, t.1));
        for (k, &(row, col, val)) in triplets.iter().enumerate() {
            if row >= m || col >= n {
                return Err(InstanceError::IndexOutOfRange { row, col });
            }
            if !val.is_finite() {
                return Err(InstanceError::NonFinite { what: "A" });
            }
            if k > 0 && triplets[k - 1].0 == row && triplets[k - 1].1 == col {
                return Err(InstanceError::DuplicateEntry { row, col });
            }
        }
        if c.iter().chain(b.iter()).any(|v| !v.is_finite()) {
            return Err(InstanceError::NonFinite { what: "c/b" });
        }
        for j in 0..n {
            if lower[j].is_nan() || upper[j].is_nan() || lower[j] > upper[j] {
                return Err(InstanceError::BadBounds { var: j, lower: lower[j], upper: upper[j] });
            }
            if integrality[j] && !(lower[j].is_finite() && upper[j].is_finite()) {
                return Err(InstanceError::UnboundedDiscrete { var: j });
            }
        }
        let mut row_start = vec![0usize; m + 1];
        for &(row, _, _) in &triplets {
            row_start[row + 1] += 1;
        }
        for i in 0..m {
            row_start[i + 1] += row_start[i];
        }
        Ok(Self {
            name: name.into(),
            n,
            m,
            c,
            triplets,
            row_start,
            b,
            integrality,
            lower,
            upper,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn num_vars(&self) -> usize {
        self.n
    }
    pub fn num_cons(&self) -> usize {
        self.m
    }
    pub fn objective_coeffs(&self) -> &[f64] {
        &self.c
    }
    pub fn rhs(&self) -> &[f64] {
        &self.b
    }
    pub fn integrality(&self) -> &[bool] {
        &self.integrality
    }
    pub fn lower(&self) -> &[f64] {
        &self.lower
    }
    pub fn upper(&self) -> &[f64] {
        &self.upper
    }
    pub fn triplets(&self) -> &[(usize, usize, f64)] {
        &self.triplets
    }
    pub fn nnz(&self) -> usize {
        self.triplets.len()
    }

    /// `(col, val)` entries of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.triplets[self.row_start[i]..self.row_start[i + 1]]
            .iter()
            .map(|&(_, col, val)| (col, val))
    }

    pub fn row_len(&self, i: usize) -> usize {
        self.row_start[i + 1] - self.row_start[i]
    }

    /// Indices of discrete variables in increasing order.
    pub fn discrete_indices(&self) -> Vec<usize> {
        (0..self.n).filter(|&j| self.integrality[j]).collect()
    }

    /// Number of discrete variables (`r`).
    pub fn num_discrete(&self) -> usize {
        self.integrality.iter().filter(|&&d| d).count()
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Same instance with the bounds of variable `j` replaced.
    pub(crate) fn set_bounds(&mut self, j: usize, lower: f64, upper: f64) {
        self.lower[j] = lower;
        self.upper[j] = upper;
    }

    /// Row activities `Ax`.
    pub fn activities(&self, x: &[f64]) -> Vec<f64> {
        let mut act = vec![0.0; self.m];
        for &(row, col, val) in &self.triplets {
            act[row] += val * x[col];
        }
        act
    }

    /// `c'x`.
    pub fn objective(&self, x: &Assignment) -> Result<f64, InstanceError> {
        self.check_len(x)?;
        Ok(self.c.iter().zip(&x.0).map(|(c, v)| c * v).sum())
    }

    fn check_len(&self, x: &Assignment) -> Result<(), InstanceError> {
        if x.len() != self.n {
            return Err(InstanceError::Dimension { expected: self.n, found: x.len() });
        }
        Ok(())
    }

    /// True iff `x` satisfies every row, every bound and every integrality
    /// mark within `tol`.
    pub fn check_feasible(&self, x: &Assignment, tol: f64) -> Result<bool, InstanceError> {
        self.check_len(x)?;
        let x = &x.0;
        for j in 0..self.n {
            let v = x[j];
            if !v.is_finite() || v < self.lower[j] - tol || v > self.upper[j] + tol {
                return Ok(false);
            }
            if self.integrality[j] && (v - v.round()).abs() > tol {
                return Ok(false);
            }
        }
        let act = self.activities(x);
        Ok(act.iter().zip(&self.b).all(|(a, b)| *a <= b + tol))
    }

    /// Sub-MIP with every variable in `pa` fixed by bound tightening.
    pub fn fix_variables(&self, pa: &PartialAssignment) -> Result<MipInstance, InstanceError> {
        pa.validate(self)?;
        let mut sub = self.clone();
        for (&j, &v) in pa.indices.iter().zip(&pa.values) {
            let v = v as f64;
            sub.set_bounds(j, v, v);
        }
        Ok(sub)
    }
}

/// Incremental construction with `>=` and `=` rows normalized to `<=`.
#[derive(Debug, Default)]
pub struct InstanceBuilder {
    name: String,
    c: Vec<f64>,
    integrality: Vec<bool>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    triplets: Vec<(usize, usize, f64)>,
    b: Vec<f64>,
}

impl InstanceBuilder {
    pub fn new(name: impl Into<String>) -> Self {
        Self { name: name.into(), ..Default::default() }
    }

    pub fn add_var(&mut self, cost: f64, lower: f64, upper: f64, integer: bool) -> usize {
        self.c.push(cost);
        self.lower.push(lower);
        self.upper.push(upper);
        self.integrality.push(integer);
        self.c.len() - 1
    }

    pub fn add_binary(&mut self, cost: f64) -> usize {
        self.add_var(cost, 0.0, 1.0, true)
    }

    /// Adds a row; `Ge` rows are negated and `Eq` rows become a `<=` pair.
    pub fn add_row(&mut self, coeffs: &[(usize, f64)], sense: Sense, rhs: f64) {
        let mut push = |sign: f64| {
            let row = self.b.len();
            for &(col, val) in coeffs {
                self.triplets.push((row, col, sign * val));
            }
            self.b.push(sign * rhs);
        };
        match sense {
            Sense::Le => push(1.0),
            Sense::Ge => push(-1.0),
            Sense::Eq => {
                push(1.0);
                push(-1.0);
            }
        }
    }

    pub fn build(self) -> Result<MipInstance, InstanceError> {
        let n = self.c.len();
        let m = self.b.len();
        MipInstance::new(
            self.name,
            n,
            m,
            self.c,
            self.triplets,
            self.b,
            self.integrality,
            self.lower,
            self.upper,
        )
    }
}

/// Full vector of variable values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Assignment(pub Vec<f64>);

impl Assignment {
    pub fn len(&self) -> usize {
        self.0.len()
    }
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for Assignment {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

/// A subset of discrete variables together with the integer value each is
/// fixed to. `coverage` is `|indices| / r`.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialAssignment {
    indices: Vec<usize>,
    values: Vec<i64>,
    coverage: f64,
}

impl PartialAssignment {
    /// Sorts the pairs by index; `num_discrete` is `r` of the target instance.
    pub fn new(mut pairs: Vec<(usize, i64)>, num_discrete: usize) -> Self {
        pairs.sort_by_key(|p| p.0);
        pairs.dedup_by_key(|p| p.0);
        let coverage = if num_discrete == 0 { 0.0 } else { pairs.len() as f64 / num_discrete as f64 };
        let (indices, values) = pairs.into_iter().unzip();
        Self { indices, values, coverage }
    }

    pub fn empty() -> Self {
        Self { indices: Vec::new(), values: Vec::new(), coverage: 0.0 }
    }

    /// Fix `subset` to the (rounded) values of `x`.
    pub fn from_assignment(subset: &[usize], x: &[f64], num_discrete: usize) -> Self {
        Self::new(subset.iter().map(|&j| (j, x[j].round() as i64)).collect(), num_discrete)
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }
    pub fn values(&self) -> &[i64] {
        &self.values
    }
    pub fn coverage(&self) -> f64 {
        self.coverage
    }
    pub fn len(&self) -> usize {
        self.indices.len()
    }
    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn validate(&self, inst: &MipInstance) -> Result<(), InstanceError> {
        let r = inst.num_discrete();
        let expect = if r == 0 { 0.0 } else { self.indices.len() as f64 / r as f64 };
        if (expect - self.coverage).abs() > 1e-12 {
            return Err(InstanceError::CoverageMismatch { stated: self.coverage, actual: expect });
        }
        for (&j, &v) in self.indices.iter().zip(&self.values) {
            if j >= inst.num_vars() || !inst.integrality()[j] {
                return Err(InstanceError::NotDiscrete { var: j });
            }
            let v = v as f64;
            if v < inst.lower()[j] || v > inst.upper()[j] {
                return Err(InstanceError::ValueOutOfBounds { var: j, value: v });
            }
        }
        Ok(())
    }

    pub fn index_set(&self) -> BTreeSet<usize> {
        self.indices.iter().copied().collect()
    }
}
