//! Matrix exponential and exact zero-order-hold discretization.

use super::Matrix;
use crate::error::{Error, Result};

/// Diagonal Padé degree used after scaling.
const PADE_DEGREE: usize = 8;

/// Scaled norm at or below which the Padé approximant is applied directly.
const SCALING_THRESHOLD: f64 = 0.5;

/// Computes `exp(A t)` by scaling and squaring around a diagonal Padé
/// approximant.
///
/// After scaling, `‖A t / 2^s‖₁ ≤ 0.5`, where the degree-8 approximant is
/// accurate far below double precision; the squaring phase then dominates
/// the rounding error.
pub fn mat_exp(a: &Matrix, t: f64) -> Result<Matrix> {
    if !a.is_square() {
        return Err(Error::Dimension(format!(
            "matrix exponential needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    if !t.is_finite() {
        return Err(Error::Domain(format!("time argument {t} is not finite")));
    }
    if !a.is_finite() {
        return Err(Error::Domain("matrix entries must be finite".into()));
    }

    let n = a.rows();
    let at = a.scale(t);
    let norm = at.norm_1();
    if norm == 0.0 {
        return Ok(Matrix::identity(n));
    }

    let squarings = if norm > SCALING_THRESHOLD {
        (norm / SCALING_THRESHOLD).log2().ceil() as i32
    } else {
        0
    };
    let x = at.scale(2f64.powi(-squarings));

    // c_k = (2q - k)! q! / ((2q)! k! (q - k)!), built by the ratio recurrence.
    let q = PADE_DEGREE;
    let mut c = 1.0;
    let mut num = Matrix::identity(n);
    let mut den = Matrix::identity(n);
    let mut power = Matrix::identity(n);
    for k in 1..=q {
        c *= (q - k + 1) as f64 / (k * (2 * q - k + 1)) as f64;
        power = &power * &x;
        let term = power.scale(c);
        num = &num + &term;
        den = if k % 2 == 0 { &den + &term } else { &den - &term };
    }

    let mut e = den.solve(&num)?;
    for _ in 0..squarings {
        e = &e * &e;
    }
    Ok(e)
}

/// Exact zero-order-hold discretization of `ẋ = Ac x + Bc u`.
///
/// The augmented matrix `[[Ac, Bc], [0, 0]]·Ts` is exponentiated and the
/// top blocks read off, so a singular `Ac` needs no special handling.
pub fn zoh_discretize(ac: &Matrix, bc: &Matrix, ts: f64) -> Result<(Matrix, Matrix)> {
    if !(ts > 0.0) || !ts.is_finite() {
        return Err(Error::Domain(format!(
            "sampling period must be positive and finite, got {ts}"
        )));
    }
    if !ac.is_square() {
        return Err(Error::Dimension(format!(
            "Ac must be square, got {}x{}",
            ac.rows(),
            ac.cols()
        )));
    }
    if bc.rows() != ac.rows() {
        return Err(Error::Dimension(format!(
            "Bc has {} rows but Ac is {}x{}",
            bc.rows(),
            ac.rows(),
            ac.cols()
        )));
    }
    let n = ac.rows();
    let m = bc.cols();
    let mut aug = Matrix::zeros(n + m, n + m);
    aug.set_block(0, 0, ac);
    aug.set_block(0, n, bc);
    let e = mat_exp(&aug, ts)?;
    Ok((e.block(0, 0, n, n), e.block(0, n, n, m)))
}
