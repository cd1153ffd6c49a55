//! Dense two-phase primal simplex for small standard-form problems:
//! minimise `c·x` subject to `A·x = b`, `x ≥ 0`, with `b ≥ 0`.
//!
//! Sized for the 64-atom coupling problem of
//! [`super::coupling_oracle`]: a handful of equality constraints, a few
//! dozen variables, data of order one.  Bland's rule keeps the pivot
//! sequence deterministic and terminating even on the (heavily
//! degenerate, rank-deficient) coupling constraints; redundant rows are
//! tolerated by letting their artificial variables stay basic at zero.

/// Failure modes of the solver.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum SimplexError {
    /// Phase 1 could not reduce the artificial objective to zero.
    Infeasible,
    /// The objective is unbounded below (impossible for bounded data,
    /// kept for completeness).
    Unbounded,
}

const PIVOT_TOL: f64 = 1e-9;
const FEASIBILITY_TOL: f64 = 1e-7;

/// Solves `min c·x : A·x = b, x ≥ 0` and returns `(x, c·x)`.
///
/// Requires `b[i] ≥ 0` (the coupling constraints are probabilities, so
/// callers satisfy this for free).
pub(crate) fn minimize(
    a: &[Vec<f64>],
    b: &[f64],
    c: &[f64],
) -> Result<(Vec<f64>, f64), SimplexError> {
    let rows = a.len();
    let cols = c.len();
    assert_eq!(b.len(), rows, "b must have one entry per row");
    assert!(a.iter().all(|row| row.len() == cols), "ragged matrix");
    assert!(b.iter().all(|&v| v >= 0.0), "b must be non-negative");

    // Tableau layout: original variables, artificial variables, rhs.
    let width = cols + rows + 1;
    let mut tableau: Vec<Vec<f64>> = Vec::with_capacity(rows);
    for i in 0..rows {
        let mut row = vec![0.0; width];
        row[..cols].copy_from_slice(&a[i]);
        row[cols + i] = 1.0;
        row[width - 1] = b[i];
        tableau.push(row);
    }
    let mut basis: Vec<usize> = (cols..cols + rows).collect();

    // Phase 1: minimise the sum of artificials.
    let mut phase1 = vec![0.0; width];
    for row in &tableau {
        for (slot, value) in phase1.iter_mut().zip(row) {
            *slot -= value;
        }
    }
    phase1[cols..cols + rows].fill(0.0);
    run_to_optimum(&mut tableau, &mut phase1, &mut basis, cols + rows)?;
    if -phase1[width - 1] > FEASIBILITY_TOL {
        return Err(SimplexError::Infeasible);
    }

    // Drive leftover zero-valued artificials out of the basis so that
    // phase 2 cannot revive them; a row with no usable original column
    // is a redundant constraint and is blanked out.
    for i in 0..rows {
        if basis[i] >= cols {
            if let Some(j) = (0..cols).find(|&j| tableau[i][j].abs() > PIVOT_TOL) {
                pivot(&mut tableau, &mut basis, i, j);
            } else {
                for value in tableau[i].iter_mut() {
                    *value = 0.0;
                }
            }
        }
    }

    // Phase 2: original objective, artificials locked out of the basis.
    let mut objective = vec![0.0; width];
    objective[..cols].copy_from_slice(c);
    for (i, &var) in basis.iter().enumerate() {
        if objective[var] != 0.0 {
            let factor = objective[var];
            let row = tableau[i].clone();
            for (slot, value) in objective.iter_mut().zip(&row) {
                *slot -= factor * value;
            }
        }
    }
    run_to_optimum(&mut tableau, &mut objective, &mut basis, cols)?;

    let mut x = vec![0.0; cols];
    for (i, &var) in basis.iter().enumerate() {
        if var < cols {
            x[var] = tableau[i][width - 1];
        }
    }
    let value = c.iter().zip(&x).map(|(ci, xi)| ci * xi).sum();
    Ok((x, value))
}

/// Pivots until no column below `limit` has a negative reduced cost.
/// Entering and leaving choices follow Bland's rule.
fn run_to_optimum(
    tableau: &mut [Vec<f64>],
    objective: &mut [f64],
    basis: &mut [usize],
    limit: usize,
) -> Result<(), SimplexError> {
    let width = objective.len();
    loop {
        let Some(entering) = (0..limit).find(|&j| objective[j] < -PIVOT_TOL) else {
            return Ok(());
        };
        let mut leaving: Option<usize> = None;
        let mut best_ratio = f64::INFINITY;
        for (i, row) in tableau.iter().enumerate() {
            if row[entering] > PIVOT_TOL {
                let ratio = row[width - 1] / row[entering];
                let better = ratio < best_ratio - PIVOT_TOL
                    || ((ratio - best_ratio).abs() <= PIVOT_TOL
                        && leaving.is_some_and(|l| basis[i] < basis[l]));
                if leaving.is_none() || better {
                    leaving = Some(i);
                    best_ratio = ratio;
                }
            }
        }
        let Some(pivot_row) = leaving else {
            return Err(SimplexError::Unbounded);
        };

        pivot(tableau, basis, pivot_row, entering);
        let factor = objective[entering];
        if factor != 0.0 {
            let row = tableau[pivot_row].clone();
            for (slot, value) in objective.iter_mut().zip(&row) {
                *slot -= factor * value;
            }
        }
    }
}

/// Makes `column` basic in `row` by Gaussian elimination.
fn pivot(tableau: &mut [Vec<f64>], basis: &mut [usize], row: usize, column: usize) {
    let pivot = tableau[row][column];
    for value in tableau[row].iter_mut() {
        *value /= pivot;
    }
    for i in 0..tableau.len() {
        if i != row {
            let factor = tableau[i][column];
            if factor != 0.0 {
                let (pivot_slice, target) = if i < row {
                    let (head, tail) = tableau.split_at_mut(row);
                    (&tail[0], &mut head[i])
                } else {
                    let (head, tail) = tableau.split_at_mut(i);
                    (&head[row], &mut tail[0])
                };
                for (slot, value) in target.iter_mut().zip(pivot_slice.iter()) {
                    *slot -= factor * value;
                }
            }
        }
    }
    basis[row] = column;
}
