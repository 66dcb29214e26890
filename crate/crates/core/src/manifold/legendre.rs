use std::f64::consts::PI;

/// Gauss–Legendre nodes and weights on `[-1, 1]`, exact for polynomials of
/// degree `2n - 1`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() <= 1e-16 * x.abs().max(1.0) {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Index of `(l, m)`, `0 <= m <= l`, in the triangular table.
#[inline]
pub(crate) fn tri_index(l: usize, m: usize) -> usize {
    l * (l + 1) / 2 + m
}

/// Fills `out[tri_index(l, m)]` with the associated Legendre functions
/// normalized so that `∫_{-1}^{1} P̄_l^m(x)² dx = 1 / (2π)`, for `l <= l_max`.
///
/// `x = cos θ`, `s = sin θ >= 0`. No Condon–Shortley phase.
pub(crate) fn normalized_legendre(l_max: usize, x: f64, s: f64, out: &mut [f64]) {
    debug_assert!(out.len() >= tri_index(l_max, l_max) + 1);
    let mut pmm = (1.0 / (4.0 * PI)).sqrt();
    for m in 0..=l_max {
        if m > 0 {
            let mf = m as f64;
            pmm *= ((2.0 * mf + 1.0) / (2.0 * mf)).sqrt() * s;
        }
        out[tri_index(m, m)] = pmm;
        if m == l_max {
            break;
        }
        let mf = m as f64;
        let mut p_prev = pmm;
        let mut p_cur = (2.0 * mf + 3.0).sqrt() * x * pmm;
        out[tri_index(m + 1, m)] = p_cur;
        for l in (m + 2)..=l_max {
            let lf = l as f64;
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
            let l1 = lf - 1.0;
            let b = ((l1 * l1 - mf * mf) / (4.0 * l1 * l1 - 1.0)).sqrt();
            let p_next = a * (x * p_cur - b * p_prev);
            out[tri_index(l, m)] = p_next;
            p_prev = p_cur;
            p_cur = p_next;
        }
    }
}
