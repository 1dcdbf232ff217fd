//! Central finite differences, used as an independent oracle for the
//! analytic Fisher-information derivatives.

use std::ops::{Div, Sub};

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Values a finite-difference oracle can differentiate.
pub trait DiffValue<T: Real>: Copy + Sub<Output = Self> + Div<T, Output = Self> {
    fn is_finite_value(&self) -> bool;
}

impl<T: Real> DiffValue<T> for T {
    fn is_finite_value(&self) -> bool {
        self.is_finite()
    }
}

impl<T: Real> DiffValue<T> for Complex<T> {
    fn is_finite_value(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

/// Per-parameter step `max(1e-7, 1e-7 |x|)`.
pub fn default_steps<T: Real>(x: &[T]) -> Vec<T> {
    let base = T::lit(1e-7);
    x.iter().map(|v| base.max(base * v.abs())).collect()
}

/// Central-difference Jacobian of `f` at `x`.
///
/// Returns `jac[i][k] = (f_i(x + h_k e_k) - f_i(x - h_k e_k)) / (2 h_k)`.
pub fn central_diff<T, V, F>(f: F, x: &[T], steps: &[T]) -> Result<Vec<Vec<V>>>
where
    T: Real,
    V: DiffValue<T>,
    F: Fn(&[T]) -> Result<Vec<V>>,
{
    if steps.len() != x.len() {
        return Err(Error::InvalidArgument(format!(
            "{} steps for {} parameters",
            steps.len(),
            x.len()
        )));
    }
    let mut columns = Vec::with_capacity(x.len());
    let mut probe = x.to_vec();
    for (k, &h) in steps.iter().enumerate() {
        if !(h > T::zero()) {
            return Err(Error::InvalidArgument(format!("step {k} is not positive")));
        }
        probe[k] = x[k] + h;
        let plus = f(&probe)?;
        probe[k] = x[k] - h;
        let minus = f(&probe)?;
        probe[k] = x[k];
        if plus.len() != minus.len() {
            return Err(Error::InvalidArgument("output length changed between evaluations".into()));
        }
        if plus.iter().chain(&minus).any(|v| !v.is_finite_value()) {
            return Err(Error::NonFinite(format!("function value while perturbing parameter {k}")));
        }
        let two_h = h + h;
        columns.push(
            plus.iter()
                .zip(&minus)
                .map(|(&p, &m)| (p - m) / two_h)
                .collect::<Vec<V>>(),
        );
    }
    let outputs = columns.first().map_or(0, Vec::len);
    Ok((0..outputs)
        .map(|i| columns.iter().map(|col| col[i]).collect())
        .collect())
}
