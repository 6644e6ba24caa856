//! Dense linear algebra for truncated generators: matrix exponential by
//! scaling-and-squaring with Pade approximants, tridiagonal solves, and the
//! augmented-exponential integral used by the EM E-step.

use crate::error::{Error, Result};
use crate::models::ModelSpec;
use ndarray::{Array1, Array2};

/// Hard cap on the truncation window; beyond this a dense exponential is not
/// sensible and the caller gets an explicit error instead of an OOM.
pub const MAX_STATES: usize = 20_000;

/// Contiguous state window `[z_min, z_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TruncationWindow {
    pub z_min: u64,
    pub z_max: u64,
}

impl TruncationWindow {
    pub fn new(z_min: u64, z_max: u64) -> Result<Self> {
        if z_max <= z_min {
            return Err(Error::InvalidInput(format!(
                "truncation window requires z_max > z_min, got [{z_min}, {z_max}]"
            )));
        }
        Ok(Self { z_min, z_max })
    }

    /// Default window around the states appearing in a query:
    /// `z_min = max(0, min - 100)`, `z_max = max + 100`, capped at the
    /// model's hard state bound when it has one.
    pub fn default_for<I: IntoIterator<Item = u64>>(states: I, bound: Option<u64>) -> Self {
        let mut lo = u64::MAX;
        let mut hi = 0u64;
        for s in states {
            lo = lo.min(s);
            hi = hi.max(s);
        }
        if lo == u64::MAX {
            lo = 0;
        }
        let z_min = lo.saturating_sub(100);
        let mut z_max = hi + 100;
        if let Some(b) = bound {
            z_max = z_max.min(b);
        }
        if z_max <= z_min {
            z_max = z_min + 1;
        }
        Self { z_min, z_max }
    }

    pub fn len(&self) -> usize {
        (self.z_max - self.z_min + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, z: u64) -> bool {
        z >= self.z_min && z <= self.z_max
    }

    /// Index of state `z` within the window.
    pub fn index_of(&self, z: u64) -> Result<usize> {
        if !self.contains(z) {
            return Err(Error::InvalidInput(format!(
                "state {z} lies outside the truncation window [{}, {}]",
                self.z_min, self.z_max
            )));
        }
        Ok((z - self.z_min) as usize)
    }

    pub fn states(&self) -> impl Iterator<Item = u64> {
        self.z_min..=self.z_max
    }
}

/// Tridiagonal generator over a truncation window. Outward rates at the
/// window edges are zeroed so every row sums to 0 and `exp(Qt)` stays
/// stochastic.
#[derive(Debug, Clone)]
pub struct GeneratorMatrix {
    pub window: TruncationWindow,
    pub q: Array2<f64>,
    /// Birth rates per window state, with the boundary clamp applied.
    pub lambda: Vec<f64>,
    /// Death rates per window state, with the boundary clamp applied.
    pub mu: Vec<f64>,
}

/// Builds the truncated generator for a model.
pub fn build_generator(
    model: &ModelSpec,
    params: &[f64],
    window: TruncationWindow,
) -> Result<GeneratorMatrix> {
    model.check_params(params)?;
    let n = window.len();
    if n > MAX_STATES {
        return Err(Error::DimensionTooLarge { n, max: MAX_STATES });
    }
    let mut lambda = Vec::with_capacity(n);
    let mut mu = Vec::with_capacity(n);
    for z in window.states() {
        let l = model.birth_rate(z as f64, params);
        let m = model.death_rate(z as f64, params);
        if !l.is_finite() {
            return Err(Error::NonFiniteRate { state: z, value: l });
        }
        if !m.is_finite() {
            return Err(Error::NonFiniteRate { state: z, value: m });
        }
        lambda.push(l);
        mu.push(m);
    }
    // reflecting-style truncation: no flow out of the window
    lambda[n - 1] = 0.0;
    mu[0] = 0.0;

    let mut q = Array2::zeros((n, n));
    for i in 0..n {
        if i + 1 < n {
            q[[i, i + 1]] = lambda[i];
        }
        if i > 0 {
            q[[i, i - 1]] = mu[i];
        }
        q[[i, i]] = -(lambda[i] + mu[i]);
    }
    Ok(GeneratorMatrix { window, q, lambda, mu })
}

fn norm_1(a: &Array2<f64>) -> f64 {
    let mut best = 0.0f64;
    for j in 0..a.ncols() {
        let s: f64 = a.column(j).iter().map(|v| v.abs()).sum();
        best = best.max(s);
    }
    best
}

/// LU decomposition with partial pivoting; solves `A X = B` in place of a copy.
pub(crate) fn lu_solve(a: &Array2<f64>, b: &Array2<f64>) -> Result<Array2<f64>> {
    let n = a.nrows();
    assert_eq!(a.ncols(), n);
    assert_eq!(b.nrows(), n);
    let mut lu = a.clone();
    let mut x = b.clone();
    let mut piv: Vec<usize> = (0..n).collect();
    for k in 0..n {
        let mut p = k;
        let mut max = lu[[k, k]].abs();
        for i in (k + 1)..n {
            let v = lu[[i, k]].abs();
            if v > max {
                max = v;
                p = i;
            }
        }
        if max < 1e-300 {
            return Err(Error::SingularMatrix(format!("zero pivot at column {k}")));
        }
        if p != k {
            piv.swap(p, k);
            for j in 0..n {
                let tmp = lu[[k, j]];
                lu[[k, j]] = lu[[p, j]];
                lu[[p, j]] = tmp;
            }
            for j in 0..x.ncols() {
                let tmp = x[[k, j]];
                x[[k, j]] = x[[p, j]];
                x[[p, j]] = tmp;
            }
        }
        let pivot = lu[[k, k]];
        for i in (k + 1)..n {
            let f = lu[[i, k]] / pivot;
            lu[[i, k]] = f;
            if f != 0.0 {
                for j in (k + 1)..n {
                    lu[[i, j]] -= f * lu[[k, j]];
                }
            }
        }
    }
    // forward substitution (unit lower)
    for k in 0..n {
        for i in (k + 1)..n {
            let f = lu[[i, k]];
            if f != 0.0 {
                for j in 0..x.ncols() {
                    let v = x[[k, j]] * f;
                    x[[i, j]] -= v;
                }
            }
        }
    }
    // back substitution
    for k in (0..n).rev() {
        let d = lu[[k, k]];
        for j in 0..x.ncols() {
            x[[k, j]] /= d;
        }
        for i in 0..k {
            let f = lu[[i, k]];
            if f != 0.0 {
                for j in 0..x.ncols() {
                    let v = x[[k, j]] * f;
                    x[[i, j]] -= v;
                }
            }
        }
    }
    Ok(x)
}

/// Thomas algorithm for a tridiagonal system given by `sub`, `diag`, `sup`.
pub(crate) fn tridiag_solve(
    sub: &[f64],
    diag: &[f64],
    sup: &[f64],
    rhs: &[f64],
) -> Result<Vec<f64>> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut x = vec![0.0; n];
    let mut denom = diag[0];
    if denom.abs() < 1e-300 {
        return Err(Error::SingularMatrix("tridiagonal pivot underflow".into()));
    }
    c[0] = sup[0] / denom;
    d[0] = rhs[0] / denom;
    for i in 1..n {
        denom = diag[i] - sub[i] * c[i - 1];
        if denom.abs() < 1e-300 {
            return Err(Error::SingularMatrix("tridiagonal pivot underflow".into()));
        }
        if i < n - 1 {
            c[i] = sup[i] / denom;
        }
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / denom;
    }
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    Ok(x)
}

const THETA_3: f64 = 1.495585217958292e-2;
const THETA_5: f64 = 2.539398330063230e-1;
const THETA_7: f64 = 9.504178996162932e-1;
const THETA_9: f64 = 2.097847961257068e0;
const THETA_13: f64 = 5.371920351148152e0;

const B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const B7: [f64; 8] = [
    17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0,
];
const B9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const B13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

fn eye(n: usize) -> Array2<f64> {
    Array2::eye(n)
}

/// Evaluates the degree-m Pade approximant `r_m(A)` given the needed even
/// powers of A, then returns the solve `(V-U)^{-1}(V+U)`.
fn pade_solve(a: &Array2<f64>, even_powers: &[&Array2<f64>], b: &[f64]) -> Result<Array2<f64>> {
    let n = a.nrows();
    let mut u_inner = Array2::<f64>::zeros((n, n));
    let mut v = Array2::<f64>::zeros((n, n));
    // even_powers = [I, A2, A4, ...]
    for (k, pw) in even_powers.iter().enumerate() {
        let cu = b[2 * k + 1];
        let cv = b[2 * k];
        u_inner.scaled_add(cu, pw);
        v.scaled_add(cv, pw);
    }
    let u = a.dot(&u_inner);
    let lhs = &v - &u;
    let rhs = &v + &u;
    lu_solve(&lhs, &rhs)
}

fn pade13(a: &Array2<f64>, a2: &Array2<f64>, a4: &Array2<f64>, a6: &Array2<f64>) -> Result<Array2<f64>> {
    let n = a.nrows();
    let b = &B13;
    let id = eye(n);
    // U = A (A6 (b13 A6 + b11 A4 + b9 A2) + b7 A6 + b5 A4 + b3 A2 + b1 I)
    let mut w1 = Array2::<f64>::zeros((n, n));
    w1.scaled_add(b[13], a6);
    w1.scaled_add(b[11], a4);
    w1.scaled_add(b[9], a2);
    let mut w2 = a6.dot(&w1);
    w2.scaled_add(b[7], a6);
    w2.scaled_add(b[5], a4);
    w2.scaled_add(b[3], a2);
    w2.scaled_add(b[1], &id);
    let u = a.dot(&w2);
    // V = A6 (b12 A6 + b10 A4 + b8 A2) + b6 A6 + b4 A4 + b2 A2 + b0 I
    let mut w3 = Array2::<f64>::zeros((n, n));
    w3.scaled_add(b[12], a6);
    w3.scaled_add(b[10], a4);
    w3.scaled_add(b[8], a2);
    let mut v = a6.dot(&w3);
    v.scaled_add(b[6], a6);
    v.scaled_add(b[4], a4);
    v.scaled_add(b[2], a2);
    v.scaled_add(b[0], &id);
    let lhs = &v - &u;
    let rhs = &v + &u;
    lu_solve(&lhs, &rhs)
}

/// Matrix exponential by scaling-and-squaring with Pade approximants of
/// degree 3/5/7/9/13 selected from the 1-norm.
pub fn expm(m: &Array2<f64>) -> Result<Array2<f64>> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::InvalidInput("expm requires a square matrix".into()));
    }
    if n > MAX_STATES {
        return Err(Error::DimensionTooLarge { n, max: MAX_STATES });
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("expm requires finite entries".into()));
    }
    let norm = norm_1(m);
    let id = eye(n);
    if norm <= THETA_13 {
        let a2 = m.dot(m);
        if norm <= THETA_3 {
            return pade_solve(m, &[&id, &a2], &B3);
        }
        let a4 = a2.dot(&a2);
        if norm <= THETA_5 {
            return pade_solve(m, &[&id, &a2, &a4], &B5);
        }
        let a6 = a2.dot(&a4);
        if norm <= THETA_7 {
            return pade_solve(m, &[&id, &a2, &a4, &a6], &B7);
        }
        if norm <= THETA_9 {
            let a8 = a4.dot(&a4);
            return pade_solve(m, &[&id, &a2, &a4, &a6, &a8], &B9);
        }
        return pade13(m, &a2, &a4, &a6);
    }
    let s = ((norm / THETA_13).log2().ceil() as i32).max(0);
    let scaled = m.mapv(|v| v / 2f64.powi(s));
    let a2 = scaled.dot(&scaled);
    let a4 = a2.dot(&a2);
    let a6 = a2.dot(&a4);
    let mut f = pade13(&scaled, &a2, &a4, &a6)?;
    for _ in 0..s {
        f = f.dot(&f);
    }
    Ok(f)
}

/// `m^k` by binary exponentiation.
pub(crate) fn mat_power(m: &Array2<f64>, k: u64) -> Array2<f64> {
    let n = m.nrows();
    let mut result = eye(n);
    let mut base = m.clone();
    let mut e = k;
    while e > 0 {
        if e & 1 == 1 {
            result = result.dot(&base);
        }
        e >>= 1;
        if e > 0 {
            base = base.dot(&base);
        }
    }
    result
}

/// Computes both `G(t) = int_0^t exp(Qs) E_ab exp(Q(t-s)) ds` (where `E_ab`
/// has a single 1 at row `a`, column `b`) and `exp(Qt)`, sharing the
/// squaring chain. `G` doubles via `G(2h) = F G + G F`, `F(2h) = F^2`.
pub(crate) fn van_loan_pair(
    q: &Array2<f64>,
    a: usize,
    b: usize,
    t: f64,
) -> Result<(Array2<f64>, Array2<f64>)> {
    let n = q.nrows();
    if a >= n || b >= n {
        return Err(Error::InvalidInput(format!(
            "van Loan indices ({a}, {b}) outside a {n}-state window"
        )));
    }
    if !(t > 0.0) {
        return Ok((Array2::zeros((n, n)), eye(n)));
    }
    let scaled_norm = norm_1(q) * t;
    let levels = if scaled_norm <= 0.5 {
        0
    } else {
        (scaled_norm / 0.5).log2().ceil() as u32
    };
    let h = t / 2f64.powi(levels as i32);

    // Taylor base step: G0 = sum_r h^{r+1}/(r+1)! sum_{p+q=r} (Q^p e_a)(e_b^T Q^q)
    const R: usize = 16;
    let mut u_vecs: Vec<Array1<f64>> = Vec::with_capacity(R + 1);
    let mut w_vecs: Vec<Array1<f64>> = Vec::with_capacity(R + 1);
    let mut u0 = Array1::<f64>::zeros(n);
    u0[a] = 1.0;
    let mut w0 = Array1::<f64>::zeros(n);
    w0[b] = 1.0;
    u_vecs.push(u0);
    w_vecs.push(w0);
    let qt = q.t();
    for p in 0..R {
        u_vecs.push(q.dot(&u_vecs[p]));
        w_vecs.push(qt.dot(&w_vecs[p]));
    }
    let mut coeff = vec![0.0f64; 2 * R + 1];
    let mut c = h; // h^{r+1}/(r+1)! at r = 0
    for (r, slot) in coeff.iter_mut().enumerate() {
        *slot = c;
        c *= h / (r + 2) as f64;
    }
    let mut g = Array2::<f64>::zeros((n, n));
    for (p, up) in u_vecs.iter().enumerate() {
        // y = sum_q coeff[p+q] w_q
        let mut y = Array1::<f64>::zeros(n);
        for (qi, wq) in w_vecs.iter().enumerate() {
            y.scaled_add(coeff[p + qi], wq);
        }
        // rank-one accumulate: g += up y^T
        for i in 0..n {
            let ui = up[i];
            if ui != 0.0 {
                for j in 0..n {
                    g[[i, j]] += ui * y[j];
                }
            }
        }
    }

    let mut f = expm(&q.mapv(|v| v * h))?;
    for _ in 0..levels {
        let fg = f.dot(&g);
        let gf = g.dot(&f);
        g = &fg + &gf;
        f = f.dot(&f);
    }
    Ok((g, f))
}

/// The upper-right block of `exp(Ct)` for the augmented matrix
/// `C = [[Q, E_ab], [0, Q]]`, i.e. the integral
/// `int_0^t exp(Qs) E_ab exp(Q(t-s)) ds`.
pub fn van_loan_integral(q: &Array2<f64>, a: usize, b: usize, t: f64) -> Result<Array2<f64>> {
    van_loan_pair(q, a, b, t).map(|(g, _)| g)
}

/// Jacobi eigendecomposition for small symmetric matrices. Returns
/// `(eigenvalues, eigenvectors)` with eigenvectors in columns.
pub(crate) fn sym_eigen(a: &Array2<f64>) -> (Vec<f64>, Array2<f64>) {
    let n = a.nrows();
    let mut m = a.clone();
    let mut v = eye(n);
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += m[[i, j]] * m[[i, j]];
            }
        }
        if off < 1e-28 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if m[[p, q]].abs() < 1e-300 {
                    continue;
                }
                let theta = (m[[q, q]] - m[[p, p]]) / (2.0 * m[[p, q]]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[[k, p]];
                    let mkq = m[[k, q]];
                    m[[k, p]] = c * mkp - s * mkq;
                    m[[k, q]] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[[p, k]];
                    let mqk = m[[q, k]];
                    m[[p, k]] = c * mpk - s * mqk;
                    m[[q, k]] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[[k, p]];
                    let vkq = v[[k, q]];
                    v[[k, p]] = c * vkp - s * vkq;
                    v[[k, q]] = s * vkp + c * vkq;
                }
            }
        }
    }
    let vals = (0..n).map(|i| m[[i, i]]).collect();
    (vals, v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::ModelSpec;

    fn pure_death() -> (ModelSpec, Vec<f64>) {
        (ModelSpec::builtin("pure-death").unwrap(), vec![1.0])
    }

    #[test]
    fn pure_death_generator() {
        let (m, p) = pure_death();
        let g = build_generator(&m, &p, TruncationWindow::new(0, 1).unwrap()).unwrap();
        assert_eq!(g.q[[0, 0]], 0.0);
        assert_eq!(g.q[[0, 1]], 0.0);
        assert_eq!(g.q[[1, 0]], 1.0);
        assert_eq!(g.q[[1, 1]], -1.0);
    }

    #[test]
    fn linear_generator_rows_sum_to_zero() {
        let m = ModelSpec::builtin("linear").unwrap();
        let g = build_generator(&m, &[0.5, 0.45], TruncationWindow::new(0, 3).unwrap()).unwrap();
        for i in 0..4 {
            let s: f64 = g.q.row(i).sum();
            assert!(s.abs() < 1e-14, "row {i} sums to {s}");
        }
    }

    #[test]
    fn mm1_boundary_row() {
        let m = ModelSpec::builtin("M/M/1").unwrap();
        let g = build_generator(&m, &[0.7, 0.9], TruncationWindow::new(0, 5).unwrap()).unwrap();
        assert_eq!(g.q[[0, 1]], 0.7);
        assert_eq!(g.q[[0, 0]], -0.7);
    }

    #[test]
    fn non_finite_rate_names_state() {
        let m = ModelSpec::custom(|z, _| if z == 3.0 { f64::NAN } else { 1.0 }, |_, _| 0.0, 0);
        let err = build_generator(&m, &[], TruncationWindow::new(0, 5).unwrap()).unwrap_err();
        assert!(err.to_string().contains("state 3"), "{err}");
    }

    #[test]
    fn expm_zero_is_identity() {
        let z = Array2::<f64>::zeros((4, 4));
        let e = expm(&z).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((e[[i, j]] - expect).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn expm_pure_death_row() {
        let (m, p) = pure_death();
        let g = build_generator(&m, &p, TruncationWindow::new(0, 1).unwrap()).unwrap();
        let e = expm(&g.q).unwrap();
        let e1 = (-1.0f64).exp();
        assert!((e[[1, 0]] - (1.0 - e1)).abs() < 1e-12);
        assert!((e[[1, 1]] - e1).abs() < 1e-12);
    }

    #[test]
    fn expm_rows_stochastic() {
        let m = ModelSpec::builtin("Verhulst").unwrap();
        let p = [0.8, 0.4, 0.025, 0.0];
        let g = build_generator(&m, &p, TruncationWindow::new(0, 60).unwrap()).unwrap();
        let e = expm(&g.q.mapv(|v| v * 1.3)).unwrap();
        for i in 0..g.window.len() {
            let s: f64 = e.row(i).sum();
            assert!((s - 1.0).abs() < 1e-10, "row {i} sum {s}");
            for v in e.row(i) {
                assert!(*v >= -1e-12 && *v <= 1.0 + 1e-12);
            }
        }
    }

    #[test]
    fn expm_semigroup() {
        let m = ModelSpec::builtin("linear").unwrap();
        let g = build_generator(&m, &[0.6, 0.5], TruncationWindow::new(0, 12).unwrap()).unwrap();
        let (t1, t2) = (0.7, 1.9);
        let a = expm(&g.q.mapv(|v| v * t1)).unwrap();
        let b = expm(&g.q.mapv(|v| v * t2)).unwrap();
        let ab = a.dot(&b);
        let c = expm(&g.q.mapv(|v| v * (t1 + t2))).unwrap();
        let max = ab
            .iter()
            .zip(c.iter())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0f64, f64::max);
        assert!(max < 1e-8, "semigroup deviation {max}");
    }

    #[test]
    fn expm_matches_eigendecomposition_on_symmetric() {
        // independent oracle: exp(A) = V exp(D) V^T via Jacobi
        let a = ndarray::array![
            [0.9, 0.2, -0.1, 0.0],
            [0.2, -0.5, 0.3, 0.1],
            [-0.1, 0.3, 0.4, -0.2],
            [0.0, 0.1, -0.2, 1.1]
        ];
        let (vals, vecs) = sym_eigen(&a);
        let n = 4;
        let mut d = Array2::<f64>::zeros((n, n));
        for i in 0..n {
            d[[i, i]] = vals[i].exp();
        }
        let oracle = vecs.dot(&d).dot(&vecs.t());
        let e = expm(&a).unwrap();
        let max = oracle
            .iter()
            .zip(e.iter())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0f64, f64::max);
        assert!(max < 1e-10, "eig oracle deviation {max}");
    }

    #[test]
    fn default_window_follows_convention() {
        let w = TruncationWindow::default_for([15u64, 39], None);
        assert_eq!(w.z_min, 0);
        assert_eq!(w.z_max, 139);
        let w2 = TruncationWindow::default_for([150u64, 260], None);
        assert_eq!(w2.z_min, 50);
        assert_eq!(w2.z_max, 360);
    }

    #[test]
    fn dimension_guard() {
        let m = ModelSpec::builtin("linear").unwrap();
        let err = build_generator(
            &m,
            &[0.5, 0.4],
            TruncationWindow::new(0, 30_000).unwrap(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::DimensionTooLarge { .. }));
    }

    #[test]
    fn van_loan_small_t_limit() {
        // G(t)/t -> E_ab as t -> 0
        let m = ModelSpec::builtin("linear").unwrap();
        let g = build_generator(&m, &[0.6, 0.5], TruncationWindow::new(0, 8).unwrap()).unwrap();
        let t = 1e-6;
        let gv = van_loan_integral(&g.q, 3, 4, t).unwrap();
        for i in 0..9 {
            for j in 0..9 {
                let expect = if (i, j) == (3, 4) { 1.0 } else { 0.0 };
                let got = gv[[i, j]] / t;
                assert!(
                    (got - expect).abs() < 1e-4,
                    "entry ({i},{j}) = {got}, expect {expect}"
                );
            }
        }
    }

    #[test]
    fn van_loan_matches_quadrature() {
        // 3-state toy, trapezoid oracle with 1e4 nodes
        let (m, p) = pure_death();
        let g = build_generator(&m, &p, TruncationWindow::new(0, 2).unwrap()).unwrap();
        let t = 0.9;
        let (a, b) = (2usize, 1usize);
        let gv = van_loan_integral(&g.q, a, b, t).unwrap();

        let nodes = 10_000;
        let h = t / nodes as f64;
        let step = expm(&g.q.mapv(|v| v * h)).unwrap();
        // precompute exp(Q s_k) forward
        let mut pows = Vec::with_capacity(nodes + 1);
        pows.push(Array2::<f64>::eye(3));
        for k in 0..nodes {
            let next = pows[k].dot(&step);
            pows.push(next);
        }
        let mut oracle = Array2::<f64>::zeros((3, 3));
        for k in 0..=nodes {
            let w = if k == 0 || k == nodes { 0.5 * h } else { h };
            let left = &pows[k];
            let right = &pows[nodes - k];
            // exp(Qs) E_ab exp(Q(t-s)) = col_a(left) * row_b(right)
            for i in 0..3 {
                for j in 0..3 {
                    oracle[[i, j]] += w * left[[i, a]] * right[[b, j]];
                }
            }
        }
        let max = oracle
            .iter()
            .zip(gv.iter())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0f64, f64::max);
        assert!(max < 1e-6, "quadrature deviation {max}");
    }

    #[test]
    fn tridiag_solver_matches_dense() {
        let sub = [0.0, 1.2, 0.4, 2.0];
        let diag = [3.0, 4.0, 3.5, 5.0];
        let sup = [1.0, 0.3, 0.9, 0.0];
        let rhs = [1.0, -2.0, 0.5, 3.0];
        let x = tridiag_solve(&sub, &diag, &sup, &rhs).unwrap();
        let mut a = Array2::<f64>::zeros((4, 4));
        for i in 0..4 {
            a[[i, i]] = diag[i];
            if i > 0 {
                a[[i, i - 1]] = sub[i];
            }
            if i < 3 {
                a[[i, i + 1]] = sup[i];
            }
        }
        let b = Array2::from_shape_vec((4, 1), rhs.to_vec()).unwrap();
        let dense = lu_solve(&a, &b).unwrap();
        for i in 0..4 {
            assert!((x[i] - dense[[i, 0]]).abs() < 1e-12);
        }
    }
}
