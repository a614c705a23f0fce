//! Brute-force LP oracle shared by integration tests.

/// Solves `M x = r` by Gaussian elimination with partial pivoting. Returns
/// `None` when a pivot falls below `1e-11` relative to the largest entry.
fn solve_dense(mut m: Vec<Vec<f64>>, mut r: Vec<f64>) -> Option<Vec<f64>> {
    let n = r.len();
    let scale = m.iter().flatten().fold(0.0f64, |a, x| a.max(x.abs())).max(1e-300);
    for col in 0..n {
        let p = (col..n).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[p][col].abs() < 1e-11 * scale {
            return None;
        }
        m.swap(col, p);
        r.swap(col, p);
        let pivot = m[col].clone();
        for i in col + 1..n {
            let f = m[i][col] / pivot[col];
            if f != 0.0 {
                for (x, p) in m[i][col..].iter_mut().zip(&pivot[col..]) {
                    *x -= f * p;
                }
                r[i] -= f * r[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| m[i][k] * x[k]).sum();
        x[i] = (r[i] - s) / m[i][i];
    }
    Some(x)
}

fn next_combination(idx: &mut [usize], total: usize) -> bool {
    let k = idx.len();
    for i in (0..k).rev() {
        if idx[i] < total - k + i {
            idx[i] += 1;
            for j in i + 1..k {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Minimum of `cᵀx` over `{A x ≤ b, x ≥ 0}` by enumerating every basic
/// solution. `a` is row-major `m × n`. Returns `None` if no feasible vertex
/// exists. Only valid when the minimum is attained (bounded objective).
pub fn vertex_min(m: usize, n: usize, a: &[f64], b: &[f64], c: &[f64]) -> Option<(f64, Vec<f64>)> {
    // Constraint rows: A x ≤ b, then -x ≤ 0.
    let row = |k: usize| -> (Vec<f64>, f64) {
        if k < m {
            (a[k * n..(k + 1) * n].to_vec(), b[k])
        } else {
            let mut e = vec![0.0; n];
            e[k - m] = -1.0;
            (e, 0.0)
        }
    };
    let total = m + n;
    let mut idx: Vec<usize> = (0..n).collect();
    let mut best: Option<(f64, Vec<f64>)> = None;
    loop {
        let (rows, rhs): (Vec<_>, Vec<_>) = idx.iter().map(|&k| row(k)).unzip();
        if let Some(x) = solve_dense(rows, rhs) {
            let feasible = (0..total).all(|k| {
                let (r, bk) = row(k);
                let lhs: f64 = r.iter().zip(&x).map(|(p, q)| p * q).sum();
                lhs <= bk + 1e-9 * (1.0 + bk.abs())
            });
            if feasible {
                let obj: f64 = c.iter().zip(&x).map(|(p, q)| p * q).sum();
                if best.as_ref().is_none_or(|(v, _)| obj < *v) {
                    best = Some((obj, x));
                }
            }
        }
        if !next_combination(&mut idx, total) {
            return best;
        }
    }
}

/// `min ‖x‖₁ s.t. ‖G x + h‖∞ ≤ λ` with `x = u - v`, written out directly.
pub fn l1_dantzig_oracle(g: &[f64], rows: usize, cols: usize, h: &[f64], lambda: f64) -> Option<(f64, Vec<f64>)> {
    let n = 2 * cols;
    let mut a = vec![0.0; 2 * rows * n];
    let mut b = vec![0.0; 2 * rows];
    for k in 0..rows {
        for j in 0..cols {
            let v = g[k * cols + j];
            a[k * n + j] = v;
            a[k * n + cols + j] = -v;
            a[(rows + k) * n + j] = -v;
            a[(rows + k) * n + cols + j] = v;
        }
        b[k] = lambda - h[k];
        b[rows + k] = lambda + h[k];
    }
    let (obj, uv) = vertex_min(2 * rows, n, &a, &b, &vec![1.0; n])?;
    Some((obj, (0..cols).map(|j| uv[j] - uv[cols + j]).collect()))
}
