//! Generic bimatrix Nash equilibrium search by support enumeration.
//!
//! Exhaustive over equal-size support pairs, which finds all equilibria of
//! nondegenerate games and the isolated equilibria of degenerate ones. Sized
//! for the small normal forms that appear in this crate and its tests.

/// A mixed equilibrium of a bimatrix game.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedEquilibrium {
    pub row: Vec<f64>,
    pub col: Vec<f64>,
    /// Expected payoffs (row player, column player).
    pub value: (f64, f64),
}

/// Enumerate equilibria of the game with row payoffs `a[i][j]` and column
/// payoffs `b[i][j]`.
///
/// Panics if the matrices are empty, ragged, or larger than 12 x 12.
pub fn support_enumeration(a: &[Vec<f64>], b: &[Vec<f64>], tol: f64) -> Vec<MixedEquilibrium> {
    let m = a.len();
    assert!(
        m > 0 && m == b.len(),
        "matrices must be non-empty and same shape"
    );
    let n = a[0].len();
    assert!(n > 0, "matrices must be non-empty");
    assert!(m <= 12 && n <= 12, "support enumeration limited to 12 x 12");
    for row in a.iter().chain(b.iter()) {
        assert_eq!(row.len(), n, "ragged payoff matrix");
    }

    let mut found: Vec<MixedEquilibrium> = Vec::new();
    for k in 1..=m.min(n) {
        for rows in subsets(m, k) {
            for cols in subsets(n, k) {
                if let Some(eq) = try_supports(a, b, &rows, &cols, tol) {
                    if !found
                        .iter()
                        .any(|e| close(&e.row, &eq.row, 1e-7) && close(&e.col, &eq.col, 1e-7))
                    {
                        found.push(eq);
                    }
                }
            }
        }
    }
    found
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() < tol)
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

/// Solve for a candidate with the given supports: the column mix must make
/// every supported row equally good, and vice versa. Then check feasibility
/// and optimality.
fn try_supports(
    a: &[Vec<f64>],
    b: &[Vec<f64>],
    rows: &[usize],
    cols: &[usize],
    tol: f64,
) -> Option<MixedEquilibrium> {
    let k = rows.len();
    let m = a.len();
    let n = a[0].len();

    // Unknowns: col probabilities on `cols` plus the row player's value.
    let col_mix = solve_indifference(|eq_row, var| a[rows[eq_row]][cols[var]], k)?;
    let row_mix = solve_indifference(|eq_col, var| b[rows[var]][cols[eq_col]], k)?;

    if col_mix.0.iter().any(|&p| p < -tol) || row_mix.0.iter().any(|&p| p < -tol) {
        return None;
    }

    let mut x = vec![0.0; m];
    for (idx, &r) in rows.iter().enumerate() {
        x[r] = row_mix.0[idx].max(0.0);
    }
    let mut y = vec![0.0; n];
    for (idx, &c) in cols.iter().enumerate() {
        y[c] = col_mix.0[idx].max(0.0);
    }

    // Optimality outside the supports.
    let va = col_mix.1;
    let vb = row_mix.1;
    for i in 0..m {
        let u: f64 = (0..n).map(|j| a[i][j] * y[j]).sum();
        if u > va + tol {
            return None;
        }
    }
    for j in 0..n {
        let u: f64 = (0..m).map(|i| b[i][j] * x[i]).sum();
        if u > vb + tol {
            return None;
        }
    }

    Some(MixedEquilibrium {
        row: x,
        col: y,
        value: (va, vb),
    })
}

/// Solve `sum_v p_v * payoff(e, v) = value` for all `e`, `sum p = 1`.
/// Returns the probabilities and the common value.
fn solve_indifference(payoff: impl Fn(usize, usize) -> f64, k: usize) -> Option<(Vec<f64>, f64)> {
    // k + 1 unknowns: probabilities and the value.
    let dim = k + 1;
    let mut mat = vec![vec![0.0; dim]; dim];
    let mut rhs = vec![0.0; dim];
    for e in 0..k {
        for v in 0..k {
            mat[e][v] = payoff(e, v);
        }
        mat[e][k] = -1.0;
    }
    for v in 0..k {
        mat[k][v] = 1.0;
    }
    rhs[k] = 1.0;
    let sol = gaussian(mat, rhs)?;
    let (probs, value) = sol.split_at(k);
    Some((probs.to_vec(), value[0]))
}

fn gaussian(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| {
            a[i][col]
                .abs()
                .partial_cmp(&a[j][col].abs())
                .expect("finite entries")
        })?;
        if a[pivot][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in 0..n {
            if row == col {
                continue;
            }
            let factor = a[row][col] / a[col][col];
            for x in col..n {
                a[row][x] -= factor * a[col][x];
            }
            b[row] -= factor * b[col];
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}
