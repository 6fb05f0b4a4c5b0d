//! Brute-force reference solvers for small problems in the dense form
//! `min c x  s.t.  A x <= b,  lower <= x <= upper`.
//!
//! Independent of the solver under test: plain loops, no shared code.

const TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct Dense {
    pub c: Vec<f64>,
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LpOutcome {
    Optimal(f64),
    Infeasible,
    Unbounded,
}

impl Dense {
    pub fn num_vars(&self) -> usize {
        self.c.len()
    }

    fn feasible(&self, x: &[f64], tol: f64) -> bool {
        let bounds = x.iter().zip(self.lower.iter().zip(&self.upper)).all(|(v, (l, u))| *v >= l - tol && *v <= u + tol);
        bounds && self.a.iter().zip(&self.b).all(|(row, b)| dot(row, x) <= b + tol * (1.0 + b.abs()))
    }

    /// Every constraint, bounds included, as `g x <= h`.
    fn halfspaces(&self) -> Vec<(Vec<f64>, f64)> {
        let n = self.num_vars();
        let mut hs: Vec<(Vec<f64>, f64)> = self.a.iter().cloned().zip(self.b.iter().copied()).collect();
        for j in 0..n {
            if self.lower[j].is_finite() {
                hs.push((unit(n, j, -1.0), -self.lower[j]));
            }
            if self.upper[j].is_finite() {
                hs.push((unit(n, j, 1.0), self.upper[j]));
            }
        }
        hs
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn unit(n: usize, j: usize, v: f64) -> Vec<f64> {
    let mut e = vec![0.0; n];
    e[j] = v;
    e
}

/// Solves the square system, or `None` if it is singular.
fn solve_square(mut m: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Option<Vec<f64>> {
    let n = rhs.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &k| m[i][col].abs().total_cmp(&m[k][col].abs()))?;
        if m[piv][col].abs() < 1e-10 {
            return None;
        }
        m.swap(col, piv);
        rhs.swap(col, piv);
        for r in 0..n {
            if r != col {
                let f = m[r][col] / m[col][col];
                if f != 0.0 {
                    for k in col..n {
                        m[r][k] -= f * m[col][k];
                    }
                    rhs[r] -= f * rhs[col];
                }
            }
        }
    }
    Some((0..n).map(|i| rhs[i] / m[i][i]).collect())
}

/// Calls `f` on each `k`-subset of `0..n` in lexicographic order.
fn for_each_subset(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        let Some(i) = (0..k).rev().find(|&i| idx[i] != i + n - k) else {
            return;
        };
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Minimum of `c x` over the vertices of `{x : g x <= h}`, or `None` if
/// there are none.
fn best_vertex(c: &[f64], hs: &[(Vec<f64>, f64)], feasible: impl Fn(&[f64]) -> bool) -> Option<f64> {
    let n = c.len();
    let mut best: Option<f64> = None;
    for_each_subset(hs.len(), n, |rows| {
        let m = rows.iter().map(|&r| hs[r].0.clone()).collect();
        let rhs = rows.iter().map(|&r| hs[r].1).collect();
        if let Some(x) = solve_square(m, rhs) {
            if feasible(&x) {
                let v = dot(c, &x);
                best = Some(best.map_or(v, |b: f64| b.min(v)));
            }
        }
    });
    best
}

/// LP optimum by enumerating vertices. Every variable needs a finite lower
/// bound, which makes the feasible set pointed: it is empty iff it has no
/// vertex, and `c x` is unbounded below iff some recession direction `d`
/// with `sum d = 1` has `c d < 0`.
pub fn lp_by_vertices(p: &Dense) -> LpOutcome {
    let n = p.num_vars();
    assert!(p.lower.iter().all(|l| l.is_finite()), "vertex enumeration needs finite lower bounds");
    if n == 0 {
        return if p.feasible(&[], TOL) { LpOutcome::Optimal(0.0) } else { LpOutcome::Infeasible };
    }
    let Some(best) = best_vertex(&p.c, &p.halfspaces(), |x| p.feasible(x, 1e-7)) else {
        return LpOutcome::Infeasible;
    };
    // recession cone: A d <= 0, d >= 0, d_j <= 0 on finite uppers, sum d = 1
    let mut cone: Vec<(Vec<f64>, f64)> = p.a.iter().map(|r| (r.clone(), 0.0)).collect();
    for j in 0..n {
        cone.push((unit(n, j, -1.0), 0.0));
        if p.upper[j].is_finite() {
            cone.push((unit(n, j, 1.0), 0.0));
        }
    }
    let ones = vec![1.0; n];
    let cone_feasible = |d: &[f64]| {
        (dot(&ones, d) - 1.0).abs() < 1e-9 && cone.iter().all(|(g, h)| dot(g, d) <= h + 1e-9)
    };
    // the normalization row is an equality, so it is always active
    let mut ray: Option<f64> = None;
    for_each_subset(cone.len(), n - 1, |rows| {
        let mut m = vec![ones.clone()];
        let mut rhs = vec![1.0];
        for &r in rows {
            m.push(cone[r].0.clone());
            rhs.push(cone[r].1);
        }
        if let Some(d) = solve_square(m, rhs) {
            if cone_feasible(&d) {
                let v = dot(&p.c, &d);
                ray = Some(ray.map_or(v, |b: f64| b.min(v)));
            }
        }
    });
    match ray {
        Some(v) if v < -1e-9 => LpOutcome::Unbounded,
        _ => LpOutcome::Optimal(best),
    }
}

/// MIP optimum over all integer points of the discrete variables' boxes; the
/// continuous variables, if any, are handled by [`lp_by_vertices`] on each
/// point. `None` if infeasible.
pub fn mip_by_enumeration(p: &Dense, integer: &[bool]) -> Option<f64> {
    let n = p.num_vars();
    let discrete: Vec<usize> = (0..n).filter(|&j| integer[j]).collect();
    let ranges: Vec<(i64, i64)> = discrete
        .iter()
        .map(|&j| {
            let (l, u) = (p.lower[j].ceil(), p.upper[j].floor());
            assert!(l.is_finite() && u.is_finite() && u - l <= 16.0, "enumeration needs small finite boxes");
            (l as i64, u as i64)
        })
        .collect();
    let mut point: Vec<i64> = ranges.iter().map(|r| r.0).collect();
    if ranges.iter().any(|(l, u)| l > u) {
        return None;
    }
    let mut best: Option<f64> = None;
    loop {
        let mut q = p.clone();
        for (k, &j) in discrete.iter().enumerate() {
            q.lower[j] = point[k] as f64;
            q.upper[j] = point[k] as f64;
        }
        let value = if discrete.len() == n {
            let x: Vec<f64> = q.lower.clone();
            q.feasible(&x, TOL).then(|| dot(&q.c, &x))
        } else {
            match lp_by_vertices(&q) {
                LpOutcome::Optimal(v) => Some(v),
                LpOutcome::Infeasible => None,
                LpOutcome::Unbounded => panic!("unbounded relaxation in enumeration"),
            }
        };
        if let Some(v) = value {
            best = Some(best.map_or(v, |b: f64| b.min(v)));
        }
        // odometer step
        let mut k = 0;
        loop {
            if k == point.len() {
                return best;
            }
            if point[k] < ranges[k].1 {
                point[k] += 1;
                break;
            }
            point[k] = ranges[k].0;
            k += 1;
        }
    }
}
