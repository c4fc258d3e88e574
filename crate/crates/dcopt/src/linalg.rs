//! Small dense-vector helpers shared across the solver modules.
//!
//! Everything operates on `&[f64]` slices; matrices are row-major `Vec<f64>`
//! owned by the instance structs that need them.

/// Euclidean inner product. Panics on length mismatch in debug builds.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Euclidean norm.
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Euclidean distance between two points.
pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// `out += s * a`.
pub fn axpy(out: &mut [f64], s: f64, a: &[f64]) {
    debug_assert_eq!(out.len(), a.len());
    for (o, x) in out.iter_mut().zip(a) {
        *o += s * x;
    }
}

/// `a - b` as a new vector.
pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Dense row-major matrix-vector product: `m` is `rows x cols`.
pub fn matvec(m: &[f64], rows: usize, cols: usize, x: &[f64]) -> Vec<f64> {
    debug_assert_eq!(m.len(), rows * cols);
    debug_assert_eq!(x.len(), cols);
    let mut out = vec![0.0; rows];
    for r in 0..rows {
        out[r] = dot(&m[r * cols..(r + 1) * cols], x);
    }
    out
}

/// Dense row-major transposed product `m^T y`, where `m` is `rows x cols`
/// and `y` has length `rows`.
pub fn matvec_transpose(m: &[f64], rows: usize, cols: usize, y: &[f64]) -> Vec<f64> {
    debug_assert_eq!(m.len(), rows * cols);
    debug_assert_eq!(y.len(), rows);
    let mut out = vec![0.0; cols];
    for r in 0..rows {
        axpy(&mut out, y[r], &m[r * cols..(r + 1) * cols]);
    }
    out
}

/// Quadratic form `x^T m x` for a square row-major matrix.
pub fn quad_form(m: &[f64], n: usize, x: &[f64]) -> f64 {
    dot(&matvec(m, n, n, x), x)
}

/// Positive part.
pub fn pos(v: f64) -> f64 {
    if v > 0.0 {
        v
    } else {
        0.0
    }
}

/// Componentwise clamp of `x` into `[lo, hi]`.
pub fn clamp_vec(x: &[f64], lo: &[f64], hi: &[f64]) -> Vec<f64> {
    debug_assert_eq!(x.len(), lo.len());
    debug_assert_eq!(x.len(), hi.len());
    x.iter()
        .zip(lo.iter().zip(hi))
        .map(|(v, (l, h))| v.clamp(*l, *h))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dot_and_norms() {
        assert_eq!(dot(&[1.0, 2.0], &[3.0, -1.0]), 1.0);
        assert_eq!(norm(&[3.0, 4.0]), 5.0);
        assert_eq!(dist(&[1.0, 1.0], &[4.0, 5.0]), 5.0);
    }

    #[test]
    fn matvec_row_major() {
        // [[1, 2], [3, 4]] * [1, 1] = [3, 7]
        let m = vec![1.0, 2.0, 3.0, 4.0];
        assert_eq!(matvec(&m, 2, 2, &[1.0, 1.0]), vec![3.0, 7.0]);
        assert_eq!(quad_form(&m, 2, &[1.0, 1.0]), 10.0);
        // [[1, 3], [2, 4]] * [1, 1] = [4, 6]
        assert_eq!(matvec_transpose(&m, 2, 2, &[1.0, 1.0]), vec![4.0, 6.0]);
    }

    #[test]
    fn clamp_componentwise() {
        let out = clamp_vec(&[-2.0, 0.5, 9.0], &[-1.0, -1.0, -1.0], &[1.0, 1.0, 1.0]);
        assert_eq!(out, vec![-1.0, 0.5, 1.0]);
    }
}
