//! Exact phase-one simplex for `A x = b, x >= 0`.

use num_traits::{Signed, Zero};

use super::Rational;

/// A nonnegative solution of `A x = b`, or `None` if the system is infeasible.
///
/// Runs phase one with one artificial variable per row and Bland's rule, so
/// it terminates on degenerate systems. The returned point is a basic
/// solution: at most `rows` entries are nonzero.
pub fn feasible_point(a: &[Vec<Rational>], b: &[Rational]) -> Option<Vec<Rational>> {
    let rows = a.len();
    assert_eq!(rows, b.len());
    let vars = a.first().map_or(0, Vec::len);
    let cols = vars + rows;

    // tableau rows: [A | I | b], with each row scaled so b >= 0
    let mut t: Vec<Vec<Rational>> = (0..rows)
        .map(|r| {
            let flip = b[r].is_negative();
            let mut row = Vec::with_capacity(cols + 1);
            for x in &a[r] {
                row.push(if flip { -x.clone() } else { x.clone() });
            }
            for j in 0..rows {
                row.push(if j == r {
                    Rational::from_integer(1.into())
                } else {
                    Rational::zero()
                });
            }
            row.push(b[r].abs());
            row
        })
        .collect();
    let mut basis: Vec<usize> = (vars..cols).collect();

    // reduced costs of the phase-one objective (sum of artificials)
    let mut cost: Vec<Rational> = (0..=cols)
        .map(|j| {
            if (vars..cols).contains(&j) {
                Rational::zero()
            } else {
                -t.iter().map(|row| row[j].clone()).sum::<Rational>()
            }
        })
        .collect();

    while let Some(enter) = (0..cols).find(|&j| cost[j].is_negative()) {
        let mut leave: Option<(usize, Rational)> = None;
        for r in 0..rows {
            if !t[r][enter].is_positive() {
                continue;
            }
            let ratio = &t[r][cols] / &t[r][enter];
            let better = match &leave {
                None => true,
                Some((lr, best)) => ratio < *best || (ratio == *best && basis[r] < basis[*lr]),
            };
            if better {
                leave = Some((r, ratio));
            }
        }
        // phase one is bounded below by zero
        let (pr, _) = leave.expect("phase one objective is bounded");

        let pivot = t[pr][enter].clone();
        for x in t[pr].iter_mut() {
            *x /= &pivot;
        }
        let pivot_row = t[pr].clone();
        for (r, row) in t.iter_mut().enumerate() {
            if r == pr || row[enter].is_zero() {
                continue;
            }
            let factor = row[enter].clone();
            for (x, p) in row.iter_mut().zip(&pivot_row) {
                if !p.is_zero() {
                    *x -= &factor * p;
                }
            }
        }
        let factor = cost[enter].clone();
        for (x, p) in cost.iter_mut().zip(&pivot_row) {
            if !p.is_zero() {
                *x -= &factor * p;
            }
        }
        basis[pr] = enter;
    }

    // objective value is -cost[cols]
    if !cost[cols].is_zero() {
        return None;
    }
    let mut x = vec![Rational::zero(); vars];
    for (r, &var) in basis.iter().enumerate() {
        if var < vars {
            x[var] = t[r][cols].clone();
        }
    }
    Some(x)
}
