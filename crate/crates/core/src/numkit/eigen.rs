use super::{LinalgError, Matrix};

const MAX_SWEEPS: usize = 100;
const OFF_DIAGONAL_TOL: f64 = 1e-10;
const SYMMETRY_TOL: f64 = 1e-9;
const MAX_QL_ITERATIONS: usize = 60;

/// Eigen-decomposition of a symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymEigen {
    /// Sorted descending.
    pub values: Vec<f64>,
    /// Column `i` is the unit eigenvector for `values[i]`.
    pub vectors: Matrix,
    /// Jacobi sweeps or QL iterations spent.
    pub iterations: usize,
}

/// Symmetric eigensolver: Householder reduction to tridiagonal form followed
/// by implicit-shift QL iterations.
///
/// Eigenvalues come back sorted descending; each eigenvector is
/// sign-normalised so that its largest-magnitude entry is positive.
/// [`sym_eigen_jacobi`] computes the same decomposition by cyclic Jacobi
/// rotations and is several times slower on large inputs.
pub fn sym_eigen(c: &Matrix) -> Result<SymEigen, LinalgError> {
    let (n, _) = check_symmetric(c)?;
    if n == 0 {
        return Ok(finish(Vec::new(), &[], 0, 0));
    }
    // `v` starts as the symmetrised input and ends as the eigenvector matrix
    // (eigenvectors in columns).
    let mut v = c.data().to_vec();
    for i in 0..n {
        for j in (i + 1)..n {
            let m = 0.5 * (v[i * n + j] + v[j * n + i]);
            v[i * n + j] = m;
            v[j * n + i] = m;
        }
    }
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tridiagonalize(&mut v, &mut d, &mut e, n);
    // QL works on rows of the transpose so each rotation is contiguous.
    let mut vt = Matrix::new(n, n, v).expect("finite").transpose().into_data();
    let iterations = tridiagonal_ql(&mut vt, &mut d, &mut e, n)?;
    Ok(finish(d, &vt, n, iterations))
}

/// Householder reduction of the symmetric matrix in `v` (row-major, n×n).
/// On return `d` holds the diagonal, `e[1..]` the sub-diagonal and `v` the
/// accumulated orthogonal transform.
fn tridiagonalize(v: &mut [f64], d: &mut [f64], e: &mut [f64], n: usize) {
    let idx = |r: usize, c: usize| r * n + c;
    d.copy_from_slice(&v[idx(n - 1, 0)..idx(n - 1, 0) + n]);

    for i in (1..n).rev() {
        let scale: f64 = d[..i].iter().map(|x| x.abs()).sum();
        let mut h = 0.0;
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[idx(i - 1, j)];
                v[idx(i, j)] = 0.0;
                v[idx(j, i)] = 0.0;
            }
        } else {
            for x in &mut d[..i] {
                *x /= scale;
                h += *x * *x;
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            e[..i].fill(0.0);

            for j in 0..i {
                f = d[j];
                v[idx(j, i)] = f;
                g = e[j] + v[idx(j, j)] * f;
                for k in (j + 1)..i {
                    let vkj = v[idx(k, j)];
                    g += vkj * d[k];
                    e[k] += vkj * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[idx(k, j)] -= f * e[k] + g * d[k];
                }
                d[j] = v[idx(i - 1, j)];
                v[idx(i, j)] = 0.0;
            }
        }
        d[i] = h;
    }

    // Accumulate the transformations.
    for i in 0..n - 1 {
        v[idx(n - 1, i)] = v[idx(i, i)];
        v[idx(i, i)] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[idx(k, i + 1)] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[idx(k, i + 1)] * v[idx(k, j)];
                }
                for k in 0..=i {
                    v[idx(k, j)] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[idx(k, i + 1)] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[idx(n - 1, j)];
        v[idx(n - 1, j)] = 0.0;
    }
    v[idx(n - 1, n - 1)] = 1.0;
    e[0] = 0.0;
}

/// Implicit QL on the tridiagonal (d, e); rotations are applied to the rows
/// of `vt`. Returns the number of QL iterations.
fn tridiagonal_ql(vt: &mut [f64], d: &mut [f64], e: &mut [f64], n: usize) -> Result<usize, LinalgError> {
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    let mut shift_total = 0.0;
    let mut tst1: f64 = 0.0;
    let mut total_iterations = 0;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 && e[m].abs() > f64::EPSILON * tst1 {
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                total_iterations += 1;
                if iter > MAX_QL_ITERATIONS {
                    return Err(LinalgError::NotConverged {
                        sweeps: iter,
                        residual: e[l].abs(),
                    });
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for x in &mut d[l + 2..n] {
                    *x -= h;
                }
                shift_total += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);

                    let (head, tail) = vt.split_at_mut((i + 1) * n);
                    let row_i = &mut head[i * n..];
                    let row_next = &mut tail[..n];
                    for (a, b) in row_i.iter_mut().zip(row_next.iter_mut()) {
                        let hb = *b;
                        *b = s * *a + c * hb;
                        *a = c * *a - s * hb;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= f64::EPSILON * tst1 {
                    break;
                }
            }
        }
        d[l] += shift_total;
        e[l] = 0.0;
    }
    Ok(total_iterations)
}

fn check_symmetric(c: &Matrix) -> Result<(usize, f64), LinalgError> {
    let (rows, cols) = c.shape();
    if rows != cols {
        return Err(LinalgError::NotSquare(rows, cols));
    }
    let n = rows;
    let scale = c.frobenius_norm();
    let mut max_asymmetry: f64 = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            max_asymmetry = max_asymmetry.max((c.get(i, j) - c.get(j, i)).abs());
        }
    }
    if max_asymmetry > SYMMETRY_TOL * scale.max(1.0) {
        return Err(LinalgError::NotSymmetric { max_asymmetry });
    }
    Ok((n, scale))
}

/// Sorts eigenpairs descending and applies the sign convention.
/// `vt` holds one eigenvector per row, aligned with `values`.
fn finish(values: Vec<f64>, vt: &[f64], n: usize, iterations: usize) -> SymEigen {
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[j].total_cmp(&values[i]).then(i.cmp(&j)));
    let mut vectors = Matrix::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        let v = &vt[src * n..(src + 1) * n];
        let pivot = v
            .iter()
            .copied()
            .fold(0.0f64, |best, x| if x.abs() > best.abs() { x } else { best });
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        for (r, x) in v.iter().enumerate() {
            vectors.set(r, col, sign * x);
        }
    }
    SymEigen {
        values: order.iter().map(|&i| values[i]).collect(),
        vectors,
        iterations,
    }
}

/// Cyclic Jacobi eigensolver for symmetric matrices.
///
/// Converges when the off-diagonal Frobenius norm drops below
/// `1e-10 · ‖C‖_F`; gives up after 100 sweeps. Eigenvectors are
/// sign-normalised so that their largest-magnitude entry is positive.
pub fn sym_eigen_jacobi(c: &Matrix) -> Result<SymEigen, LinalgError> {
    let (n, scale) = check_symmetric(c)?;

    // Work on the symmetrised copy; `vt` holds eigenvectors as rows so each
    // rotation touches two contiguous rows.
    let mut a = c.data().to_vec();
    for i in 0..n {
        for j in (i + 1)..n {
            let m = 0.5 * (a[i * n + j] + a[j * n + i]);
            a[i * n + j] = m;
            a[j * n + i] = m;
        }
    }
    let mut vt = Matrix::identity(n).into_data();
    let tol = OFF_DIAGONAL_TOL * scale;

    let mut sweeps = 0;
    loop {
        let off = off_diagonal_norm(&a, n);
        if off <= tol || n < 2 {
            break;
        }
        if sweeps == MAX_SWEEPS {
            return Err(LinalgError::NotConverged {
                sweeps,
                residual: off,
            });
        }
        sweeps += 1;
        // Entries this small relative to the diagonal no longer move the
        // eigenvalues at working precision.
        for p in 0..n - 1 {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                if sweeps > 4 && apq.abs() < 1e-18 * (app.abs() + aqq.abs()) {
                    a[p * n + q] = 0.0;
                    a[q * n + p] = 0.0;
                    continue;
                }
                rotate(&mut a, &mut vt, n, p, q, app, aqq, apq);
            }
        }
    }

    let diag: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
    Ok(finish(diag, &vt, n, sweeps))
}

#[allow(clippy::too_many_arguments)]
#[inline]
fn rotate(a: &mut [f64], vt: &mut [f64], n: usize, p: usize, q: usize, app: f64, aqq: f64, apq: f64) {
    let theta = (aqq - app) / (2.0 * apq);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    let (head, tail) = a.split_at_mut(q * n);
    let row_p = &mut head[p * n..(p + 1) * n];
    let row_q = &mut tail[..n];
    for (x, y) in row_p.iter_mut().zip(row_q.iter_mut()) {
        let (ap, aq) = (*x, *y);
        *x = c * ap - s * aq;
        *y = s * ap + c * aq;
    }
    row_p[p] = app - t * apq;
    row_q[q] = aqq + t * apq;
    row_p[q] = 0.0;
    row_q[p] = 0.0;
    // Mirror the updated rows into columns p and q.
    for r in 0..n {
        if r == p || r == q {
            continue;
        }
        a[r * n + p] = a[p * n + r];
        a[r * n + q] = a[q * n + r];
    }

    let (head, tail) = vt.split_at_mut(q * n);
    let vp = &mut head[p * n..(p + 1) * n];
    let vq = &mut tail[..n];
    for (x, y) in vp.iter_mut().zip(vq.iter_mut()) {
        let (a0, b0) = (*x, *y);
        *x = c * a0 - s * b0;
        *y = s * a0 + c * b0;
    }
}

fn off_diagonal_norm(a: &[f64], n: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            s += 2.0 * a[i * n + j] * a[i * n + j];
        }
    }
    s.sqrt()
}
