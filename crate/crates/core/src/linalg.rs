//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};

/// Matrix exponential by scaling and squaring with a degree-13 Padé
/// approximant (Higham 2005).
pub fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    const B: [f64; 14] = [
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
    const THETA_13: f64 = 5.371920351148152;

    let n = a.nrows();
    let norm = one_norm(a);
    let s = if norm > THETA_13 {
        (norm / THETA_13).log2().ceil() as i32
    } else {
        0
    };
    let a = a * 2f64.powi(-s);

    let ident = DMatrix::<f64>::identity(n, n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;

    let u_inner = &a6 * (&a6 * B[13] + &a4 * B[11] + &a2 * B[9])
        + &a6 * B[7]
        + &a4 * B[5]
        + &a2 * B[3]
        + &ident * B[1];
    let u = &a * u_inner;
    let v = &a6 * (&a6 * B[12] + &a4 * B[10] + &a2 * B[8])
        + &a6 * B[6]
        + &a4 * B[4]
        + &a2 * B[2]
        + &ident * B[0];

    let p = &v + &u;
    let q = &v - &u;
    let mut r = q
        .lu()
        .solve(&p)
        .expect("Padé denominator is nonsingular for scaled input");
    for _ in 0..s {
        r = &r * &r;
    }
    r
}

/// Maximum absolute column sum.
pub fn one_norm(a: &DMatrix<f64>) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Largest absolute entry.
pub fn max_abs(a: &DMatrix<f64>) -> f64 {
    a.iter().map(|v| v.abs()).fold(0.0, f64::max)
}

/// `‖AᵀA − I‖∞` entrywise.
pub fn orthogonality_defect(a: &DMatrix<f64>) -> f64 {
    let n = a.ncols();
    max_abs(&(a.transpose() * a - DMatrix::<f64>::identity(n, n)))
}

/// Solution of `A x = b` with a 1-norm condition estimate of `A`.
#[derive(Debug, Clone)]
pub struct ConditionedSolve {
    pub x: DVector<f64>,
    pub condition: f64,
}

/// Solves `A x = b` with partial pivoting and estimates `κ₁(A)` using
/// Hager's method, without forming `A⁻¹`. A singular factorization yields an
/// infinite condition and no solution.
pub fn solve_with_condition(a: &DMatrix<f64>, b: &DVector<f64>) -> Option<ConditionedSolve> {
    let n = a.nrows();
    let lu = a.clone().lu();
    let x = lu.solve(b)?;
    let lu_t = a.transpose().lu();

    // Hager / Higham estimate of ‖A⁻¹‖₁.
    let mut probe = DVector::from_element(n, 1.0 / n as f64);
    let mut estimate = 0.0;
    for _ in 0..5 {
        let y = lu.solve(&probe)?;
        estimate = y.iter().map(|v| v.abs()).sum::<f64>();
        let signs = y.map(|v| if v >= 0.0 { 1.0 } else { -1.0 });
        let z = lu_t.solve(&signs)?;
        let (jmax, zmax) = z.iter().enumerate().map(|(j, v)| (j, v.abs())).fold(
            (0, f64::NEG_INFINITY),
            |acc, e| if e.1 > acc.1 { e } else { acc },
        );
        if zmax <= z.dot(&probe) {
            break;
        }
        probe = DVector::zeros(n);
        probe[jmax] = 1.0;
    }
    Some(ConditionedSolve {
        x,
        condition: one_norm(a) * estimate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expm_of_rotation_generator() {
        let theta = 0.7;
        let a = DMatrix::from_row_slice(2, 2, &[0.0, theta, -theta, 0.0]);
        let e = expm(&a);
        let expected =
            DMatrix::from_row_slice(2, 2, &[theta.cos(), theta.sin(), -theta.sin(), theta.cos()]);
        assert!(max_abs(&(e - expected)) < 1e-14);
    }

    #[test]
    fn expm_large_norm_uses_squaring() {
        let theta = 40.0;
        let a = DMatrix::from_row_slice(2, 2, &[0.0, theta, -theta, 0.0]);
        let e = expm(&a);
        assert!(orthogonality_defect(&e) < 1e-12);
        assert!((e[(0, 0)] - theta.cos()).abs() < 1e-11);
    }

    #[test]
    fn expm_diagonal() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -2.0, 0.5]));
        let e = expm(&a);
        for (i, v) in [1.0f64, -2.0, 0.5].iter().enumerate() {
            assert!((e[(i, i)] - v.exp()).abs() < 1e-13 * v.exp().max(1.0));
        }
    }

    #[test]
    fn condition_of_identity_and_diagonal() {
        let b = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        let s = solve_with_condition(&DMatrix::identity(3, 3), &b).unwrap();
        assert_eq!(s.x, b);
        assert!((s.condition - 1.0).abs() < 1e-15);

        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1e-3, 10.0]));
        let s = solve_with_condition(&d, &b).unwrap();
        assert!((s.condition - 1e4).abs() < 1e-8);
    }

    #[test]
    fn singular_matrix_has_no_solution() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        let b = DVector::from_vec(vec![1.0, 1.0]);
        assert!(solve_with_condition(&a, &b).is_none_or(|s| s.condition > 1e12));
    }
}
