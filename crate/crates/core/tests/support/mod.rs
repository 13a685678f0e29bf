//! Test-only oracles. Nothing here calls into the simplex solver.
#![allow(dead_code)]

use arrm_core::lp::{LinearProgram, Sense};
use rand::Rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Oracle {
    Optimal(f64),
    Infeasible,
    Unbounded,
}

/// A hyperplane `a·x = b` together with the inequality it came from.
#[derive(Clone)]
struct Half {
    a: Vec<f64>,
    b: f64,
    sense: Sense,
}

impl Half {
    fn satisfied(&self, x: &[f64], tol: f64) -> bool {
        let act: f64 = self.a.iter().zip(x).map(|(a, v)| a * v).sum();
        let slack = tol * self.b.abs().max(1.0);
        match self.sense {
            Sense::Le => act <= self.b + slack,
            Sense::Ge => act >= self.b - slack,
            Sense::Eq => (act - self.b).abs() <= slack,
        }
    }
}

fn halfspaces(lp: &LinearProgram) -> Vec<Half> {
    let n = lp.num_vars;
    let mut out: Vec<Half> = (0..lp.num_constraints())
        .map(|i| Half {
            a: lp.dense_row(i),
            b: lp.constraints[i].rhs,
            sense: lp.constraints[i].sense,
        })
        .collect();
    for (j, &(l, u)) in lp.bounds.iter().enumerate() {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        if l.is_finite() {
            out.push(Half { a: e.clone(), b: l, sense: Sense::Ge });
        }
        if u.is_finite() {
            out.push(Half { a: e, b: u, sense: Sense::Le });
        }
    }
    out
}

/// Gaussian elimination with partial pivoting; `None` when (near-)singular.
pub fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-10 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            if f == 0.0 {
                continue;
            }
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

fn for_each_subset(n: usize, k: usize, f: &mut dyn FnMut(&[usize])) {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
        if cur.len() == k {
            f(cur);
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, f);
            cur.pop();
        }
    }
    rec(0, n, k, &mut Vec::with_capacity(k), f);
}

/// Best objective over all basic feasible points of `halves` in which every
/// member of `forced` is tight. Returns `None` when there is no feasible vertex.
fn best_vertex(n: usize, halves: &[Half], forced: &[Half], cost: &[f64], tol: f64) -> Option<(f64, Vec<f64>)> {
    let free = n - forced.len();
    let mut best: Option<(f64, Vec<f64>)> = None;
    for_each_subset(halves.len(), free, &mut |set| {
        let mut a: Vec<Vec<f64>> = forced.iter().map(|h| h.a.clone()).collect();
        let mut b: Vec<f64> = forced.iter().map(|h| h.b).collect();
        for &i in set {
            a.push(halves[i].a.clone());
            b.push(halves[i].b);
        }
        let Some(x) = solve_dense(a, b) else { return };
        if !halves.iter().chain(forced).all(|h| h.satisfied(&x, tol)) {
            return;
        }
        let obj: f64 = cost.iter().zip(&x).map(|(c, v)| c * v).sum();
        if best.as_ref().is_none_or(|(o, _)| obj < *o) {
            best = Some((obj, x));
        }
    });
    best
}

/// Classifies `lp` by exhaustive enumeration of basic solutions. Every
/// variable must have a finite lower bound so the feasible set is pointed.
pub fn vertex_enumeration(lp: &LinearProgram) -> Oracle {
    assert!(lp.bounds.iter().all(|b| b.0.is_finite()), "oracle needs pointed polyhedra");
    let n = lp.num_vars;
    let halves = halfspaces(lp);
    let Some((best, _)) = best_vertex(n, &halves, &[], &lp.objective, 1e-9) else {
        return Oracle::Infeasible;
    };

    // Recession cone, normalized by Σ d = 1 (all directions satisfy d ≥ 0 here).
    let cone: Vec<Half> = halves
        .iter()
        .map(|h| Half { a: h.a.clone(), b: 0.0, sense: h.sense })
        .collect();
    let norm = Half { a: vec![1.0; n], b: 1.0, sense: Sense::Eq };
    if let Some((slope, _)) = best_vertex(n, &cone, &[norm], &lp.objective, 1e-9) {
        if slope < -1e-9 {
            return Oracle::Unbounded;
        }
    }
    Oracle::Optimal(best)
}

/// Small random program with integer data: nonnegative variables, some with
/// finite upper bounds, mostly `≤` rows with occasional `≥` and `=` rows.
pub fn random_small_lp<R: Rng>(rng: &mut R, num_vars: usize, num_rows: usize) -> LinearProgram {
    let mut lp = LinearProgram::with_objective(
        (0..num_vars).map(|_| rng.random_range(-5..=5) as f64).collect(),
    );
    for j in 0..num_vars {
        if rng.random_bool(0.3) {
            lp.set_bounds(j, 0.0, rng.random_range(1..=6) as f64);
        }
    }
    for _ in 0..num_rows {
        let coeffs: Vec<f64> = (0..num_vars)
            .map(|_| if rng.random_bool(0.3) { 0.0 } else { rng.random_range(-5..=5) as f64 })
            .collect();
        let sense = match rng.random_range(0..10) {
            0..=6 => Sense::Le,
            7..=8 => Sense::Ge,
            _ => Sense::Eq,
        };
        let rhs = rng.random_range(-4..=12) as f64;
        lp.add_dense_constraint(&coeffs, sense, rhs);
    }
    lp
}
