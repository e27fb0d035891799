//! Dense matrix exponential by scaling and squaring with Padé approximants,
//! plus its Fréchet derivative.
//!
//! Degree selection follows Higham (2005): the lowest Padé degree in
//! {3, 5, 7, 9} whose backward-error threshold covers `‖A‖₁` is used
//! directly, otherwise degree 13 after scaling by `2^-s`.
//!
//! The Fréchet derivative `L(A, E) = ∫₀¹ e^{(1-σ)A} E e^{σA} dσ` is carried
//! alongside the same recurrences (Al-Mohy & Higham, 2009), which costs
//! roughly three exponentials instead of the eight a block-triangular
//! `expm([[A, E], [0, A]])` would.

use nalgebra::{convert, ComplexField, DMatrix};

const THETA: [(usize, f64); 4] = [
    (3, 1.495585217958292e-2),
    (5, 2.539_398_330_063_23e-1),
    (7, 9.504178996162932e-1),
    (9, 2.097847961257068e0),
];
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

fn coefficients(m: usize) -> &'static [f64] {
    match m {
        3 => &B3,
        5 => &B5,
        7 => &B7,
        9 => &B9,
        _ => &B13,
    }
}

/// Maximum absolute column sum.
pub fn norm1<T: ComplexField<RealField = f64>>(a: &DMatrix<T>) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|x| x.clone().modulus()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn scaled_identity<T: ComplexField<RealField = f64>>(n: usize, b: f64) -> DMatrix<T> {
    DMatrix::from_diagonal_element(n, n, convert(b))
}

fn scale<T: ComplexField<RealField = f64>>(a: &DMatrix<T>, b: f64) -> DMatrix<T> {
    a * convert::<f64, T>(b)
}

/// Degree and number of squarings for a matrix of the given 1-norm.
fn select_degree(norm: f64) -> (usize, u32) {
    for &(m, theta) in &THETA {
        if norm <= theta {
            return (m, 0);
        }
    }
    let s = if norm > THETA_13 {
        (norm / THETA_13).log2().ceil().max(0.0) as u32
    } else {
        0
    };
    (13, s)
}

/// Even powers `A², A⁴, …` up to the degree's need.
fn even_powers<T: ComplexField<RealField = f64>>(a: &DMatrix<T>, m: usize) -> Vec<DMatrix<T>> {
    let a2 = a * a;
    let mut pows = vec![a2];
    let top = if m == 13 { 3 } else { (m - 1) / 2 };
    while pows.len() < top {
        let next = pows.last().unwrap() * &pows[0];
        pows.push(next);
    }
    pows
}

/// `(U, V)` of the degree-`m` Padé approximant `(V - U)⁻¹ (V + U)`.
fn pade_uv<T: ComplexField<RealField = f64>>(
    a: &DMatrix<T>,
    pows: &[DMatrix<T>],
    m: usize,
) -> (DMatrix<T>, DMatrix<T>) {
    let n = a.nrows();
    let b = coefficients(m);
    if m == 13 {
        let (a2, a4, a6) = (&pows[0], &pows[1], &pows[2]);
        let w1 = scale(a6, b[13]) + scale(a4, b[11]) + scale(a2, b[9]);
        let w2 = scale(a6, b[7]) + scale(a4, b[5]) + scale(a2, b[3]) + scaled_identity(n, b[1]);
        let z1 = scale(a6, b[12]) + scale(a4, b[10]) + scale(a2, b[8]);
        let z2 = scale(a6, b[6]) + scale(a4, b[4]) + scale(a2, b[2]) + scaled_identity(n, b[0]);
        let u = a * (a6 * w1 + w2);
        let v = a6 * z1 + z2;
        (u, v)
    } else {
        let mut odd = scaled_identity::<T>(n, b[1]);
        let mut even = scaled_identity::<T>(n, b[0]);
        for (k, p) in pows.iter().enumerate() {
            odd += scale(p, b[2 * k + 3]);
            even += scale(p, b[2 * k + 2]);
        }
        (a * odd, even)
    }
}

/// `e^A`, or `None` when the Padé denominator is singular (non-finite input).
pub fn expm<T: ComplexField<RealField = f64>>(a: &DMatrix<T>) -> Option<DMatrix<T>> {
    assert!(a.is_square(), "expm needs a square matrix");
    let n = a.nrows();
    if n == 0 {
        return Some(a.clone());
    }
    if !a.iter().all(|x| x.clone().is_finite()) {
        return None;
    }
    let norm = norm1(a);
    let (m, s) = select_degree(norm);
    let a_s = if s > 0 {
        scale(a, 0.5f64.powi(s as i32))
    } else {
        a.clone()
    };
    let pows = even_powers(&a_s, m);
    let (u, v) = pade_uv(&a_s, &pows, m);
    let mut r = (&v - &u).lu().solve(&(v + u))?;
    for _ in 0..s {
        r = &r * &r;
    }
    Some(r)
}

/// `(e^A, L(A, E))` where `L` is the Fréchet derivative of the exponential
/// at `A` in direction `E`.
pub fn expm_frechet(a: &DMatrix<f64>, e: &DMatrix<f64>) -> Option<(DMatrix<f64>, DMatrix<f64>)> {
    assert!(
        a.is_square() && a.shape() == e.shape(),
        "expm_frechet shape mismatch"
    );
    let n = a.nrows();
    if n == 0 {
        return Some((a.clone(), e.clone()));
    }
    if !a.iter().chain(e.iter()).all(|x| x.is_finite()) {
        return None;
    }
    let norm = norm1(a);
    let (m, s) = select_degree(norm);
    let sc = 0.5f64.powi(s as i32);
    let (a, e) = if s > 0 {
        (a * sc, e * sc)
    } else {
        (a.clone(), e.clone())
    };
    let b = coefficients(m);
    let pows = even_powers(&a, m);

    // d(A^{2k}) along E
    let mut dpows: Vec<DMatrix<f64>> = Vec::with_capacity(pows.len());
    dpows.push(&a * &e + &e * &a);
    for k in 1..pows.len() {
        // A^{2k+2} = A^{2k} · A²
        let d = &dpows[k - 1] * &pows[0] + &pows[k - 1] * &dpows[0];
        dpows.push(d);
    }

    let (u, v, lu, lv) = if m == 13 {
        let (a2, a4, a6) = (&pows[0], &pows[1], &pows[2]);
        let (m2, m4, m6) = (&dpows[0], &dpows[1], &dpows[2]);
        let w1 = a6 * b[13] + a4 * b[11] + a2 * b[9];
        let w2 = a6 * b[7] + a4 * b[5] + a2 * b[3] + DMatrix::identity(n, n) * b[1];
        let z1 = a6 * b[12] + a4 * b[10] + a2 * b[8];
        let z2 = a6 * b[6] + a4 * b[4] + a2 * b[2] + DMatrix::identity(n, n) * b[0];
        let lw1 = m6 * b[13] + m4 * b[11] + m2 * b[9];
        let lw2 = m6 * b[7] + m4 * b[5] + m2 * b[3];
        let lz1 = m6 * b[12] + m4 * b[10] + m2 * b[8];
        let lz2 = m6 * b[6] + m4 * b[4] + m2 * b[2];
        let w = a6 * &w1 + w2;
        let lw = a6 * lw1 + m6 * &w1 + lw2;
        let u = &a * &w;
        let lu = &a * lw + &e * &w;
        let v = a6 * &z1 + z2;
        let lv = a6 * lz1 + m6 * &z1 + lz2;
        (u, v, lu, lv)
    } else {
        let mut odd = DMatrix::identity(n, n) * b[1];
        let mut even = DMatrix::identity(n, n) * b[0];
        let mut dodd = DMatrix::zeros(n, n);
        let mut deven = DMatrix::zeros(n, n);
        for k in 0..pows.len() {
            odd += &pows[k] * b[2 * k + 3];
            even += &pows[k] * b[2 * k + 2];
            dodd += &dpows[k] * b[2 * k + 3];
            deven += &dpows[k] * b[2 * k + 2];
        }
        let u = &a * &odd;
        let lu = &a * dodd + &e * &odd;
        (u, even, lu, deven)
    };

    let lu_q = (&v - &u).lu();
    let mut r = lu_q.solve(&(&v + &u))?;
    let mut l = lu_q.solve(&((&lu + &lv) + (&lu - &lv) * &r))?;
    for _ in 0..s {
        l = &r * &l + &l * &r;
        r = &r * &r;
    }
    Some((r, l))
}

/// Eigenvalues of a Hermitian matrix in ascending order.
pub fn hermitian_eigenvalues(a: &DMatrix<num_complex::Complex64>) -> Vec<f64> {
    let mut ev: Vec<f64> = a.clone().symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|x, y| x.total_cmp(y));
    ev
}

/// Trace norm `‖A‖₁` of a Hermitian matrix.
pub fn hermitian_trace_norm(a: &DMatrix<num_complex::Complex64>) -> f64 {
    hermitian_eigenvalues(a).iter().map(|x| x.abs()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64 as C64;

    fn max_abs_diff<T: ComplexField<RealField = f64>>(a: &DMatrix<T>, b: &DMatrix<T>) -> f64 {
        (a - b)
            .iter()
            .map(|x| x.clone().modulus())
            .fold(0.0, f64::max)
    }

    #[test]
    fn exp_of_zero_is_identity() {
        let z = DMatrix::<f64>::zeros(5, 5);
        assert_eq!(expm(&z).unwrap(), DMatrix::identity(5, 5));
    }

    #[test]
    fn exp_of_diagonal_matches_scalar_exp_at_every_degree() {
        for scale in [1e-3, 0.1, 0.5, 1.5, 4.0, 40.0, 200.0] {
            let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
                -scale,
                0.3 * scale,
                -2.0 * scale,
            ]));
            let e = expm(&d).unwrap();
            for i in 0..3 {
                let want = d[(i, i)].exp();
                assert!(((e[(i, i)] - want) / want).abs() < 1e-13, "scale {scale}");
            }
        }
    }

    #[test]
    fn exp_of_nilpotent_is_truncated_series() {
        let mut a = DMatrix::<f64>::zeros(3, 3);
        a[(0, 1)] = 2.0;
        a[(1, 2)] = 3.0;
        let e = expm(&a).unwrap();
        let want = DMatrix::identity(3, 3) + &a + (&a * &a) * 0.5;
        assert!(max_abs_diff(&e, &want) < 1e-14);
    }

    #[test]
    fn exp_of_rotation_generator() {
        // exp(t[[0,-1],[1,0]]) = rotation by t
        for t in [0.2, 3.0, 25.0] {
            let a = DMatrix::from_row_slice(2, 2, &[0.0, -t, t, 0.0]);
            let e = expm(&a).unwrap();
            let want = DMatrix::from_row_slice(2, 2, &[t.cos(), -t.sin(), t.sin(), t.cos()]);
            assert!(max_abs_diff(&e, &want) < 1e-12, "t = {t}");
        }
    }

    #[test]
    fn exp_of_anti_hermitian_is_unitary() {
        let h = DMatrix::from_fn(4, 4, |i, j| {
            let x = ((i * 7 + j * 3) % 5) as f64 * 0.3 + (i + j) as f64 * 0.1;
            C64::new(
                x,
                if i == j {
                    0.0
                } else {
                    0.2 * (i as f64 - j as f64)
                },
            )
        });
        let h = (&h + h.adjoint()) * C64::new(0.5, 0.0);
        let u = expm(&(h * C64::new(0.0, -2.0))).unwrap();
        let id = DMatrix::<C64>::identity(4, 4);
        assert!(max_abs_diff(&(u.adjoint() * &u), &id) < 1e-12);
    }

    #[test]
    fn non_finite_input_is_rejected() {
        let mut a = DMatrix::<f64>::zeros(2, 2);
        a[(0, 0)] = f64::NAN;
        assert!(expm(&a).is_none());
    }

    #[test]
    fn frechet_matches_central_difference() {
        let a = DMatrix::from_fn(5, 5, |i, j| ((i * 5 + j) as f64 * 0.37).sin() * 1.3);
        let e = DMatrix::from_fn(5, 5, |i, j| ((i + 2 * j) as f64 * 0.71).cos());
        for scale in [0.01, 0.3, 1.0, 3.0, 20.0] {
            let a = &a * scale;
            let (ea, l) = expm_frechet(&a, &e).unwrap();
            assert!(max_abs_diff(&ea, &expm(&a).unwrap()) < 1e-12 * ea.norm().max(1.0));
            let h = 1e-6;
            let fd = (expm(&(&a + &e * h)).unwrap() - expm(&(&a - &e * h)).unwrap()) / (2.0 * h);
            let err = max_abs_diff(&l, &fd) / l.norm().max(1.0);
            assert!(err < 1e-6, "scale {scale}: relative error {err}");
        }
    }

    #[test]
    fn frechet_matches_block_triangular_exponential() {
        let a = DMatrix::from_fn(4, 4, |i, j| {
            ((i * 3 + j) as f64 * 0.9).sin() - 0.5 * (i == j) as u8 as f64
        });
        let e = DMatrix::from_fn(4, 4, |i, j| ((i * j) as f64 * 0.4).cos());
        let mut big = DMatrix::zeros(8, 8);
        big.view_mut((0, 0), (4, 4)).copy_from(&a);
        big.view_mut((4, 4), (4, 4)).copy_from(&a);
        big.view_mut((0, 4), (4, 4)).copy_from(&e);
        let eb = expm(&big).unwrap();
        let (_, l) = expm_frechet(&a, &e).unwrap();
        assert!(max_abs_diff(&l, &eb.view((0, 4), (4, 4)).into_owned()) < 1e-12);
    }

    #[test]
    fn trace_norm_of_pauli_z_is_two() {
        let z = DMatrix::from_row_slice(
            2,
            2,
            &[
                C64::new(1.0, 0.0),
                C64::new(0.0, 0.0),
                C64::new(0.0, 0.0),
                C64::new(-1.0, 0.0),
            ],
        );
        assert!((hermitian_trace_norm(&z) - 2.0).abs() < 1e-15);
    }
}
