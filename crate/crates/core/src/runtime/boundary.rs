//! Boundary conditions fixing the coefficients of the closed form.

use num_traits::Zero;

use crate::error::AnalysisError;
use crate::mp::{MpComplex, MpFloat, Precision};
use crate::program::RandomWalkProgram;
use crate::reduction::RdwMap;
use crate::runtime::closed_form::{ClosedForm, ComplexTerm, Particular, RealTerm};
use crate::runtime::roots::RootSet;
use crate::termination::drift;

/// `1/p'` with direct termination, `-x/mu` without.
pub fn particular_solution(rw: &RandomWalkProgram) -> Particular {
    if rw.direct_prob().is_zero() {
        Particular::Linear(-drift(rw).recip())
    } else {
        Particular::Constant(rw.direct_prob().recip())
    }
}

/// Solves `A a = b` by Gaussian elimination with partial pivoting.
fn gauss(
    mut a: Vec<Vec<MpComplex>>,
    mut b: Vec<MpComplex>,
    prec: Precision,
) -> Result<Vec<MpComplex>, AnalysisError> {
    let n = b.len();
    let mut scale = MpFloat::zero(prec);
    for row in &a {
        for v in row {
            scale = scale.max(&v.abs());
        }
    }
    let threshold = &MpFloat::pow10(-(prec.digits() as i64), prec) * &scale;
    for col in 0..n {
        let (pivot_row, pivot_norm) = (col..n)
            .map(|r| (r, a[r][col].norm_sqr()))
            .fold(None::<(usize, MpFloat)>, |best, (r, v)| match best {
                Some((_, ref bv)) if bv >= &v => best,
                _ => Some((r, v)),
            })
            .expect("non-empty pivot range");
        let pivot_abs = pivot_norm.sqrt();
        if pivot_abs <= threshold {
            return Err(AnalysisError::SingularSystem {
                pivot: pivot_abs.to_f64(),
            });
        }
        a.swap(col, pivot_row);
        b.swap(col, pivot_row);
        let inv = a[col][col].recip();
        for r in col + 1..n {
            let factor = &a[r][col] * &inv;
            if factor.is_zero() {
                continue;
            }
            let (top, rest) = a.split_at_mut(r);
            for (v, p) in rest[0][col..].iter_mut().zip(&top[col][col..]) {
                *v = &*v - &(&factor * p);
            }
            let sub = &factor * &b[col];
            b[r] = &b[r] - &sub;
        }
    }
    let mut x = vec![MpComplex::zero(prec); n];
    for r in (0..n).rev() {
        let mut acc = b[r].clone();
        for c in r + 1..n {
            acc = &acc - &(&a[r][c] * &x[c]);
        }
        x[r] = &acc / &a[r][r];
    }
    Ok(x)
}

/// `lambda^x * x^u` with `0^0 = 1`.
fn basis(lambda: &MpComplex, x: i64, u: u32, prec: Precision) -> MpComplex {
    let p = lambda.powi(x);
    if u == 0 {
        p
    } else {
        p.scale(&MpFloat::from_i64(x, prec).powi(u as i64))
    }
}

/// Determines `a_{j,u}` from `rt(x) = 0` for `x = -k+1..0` and assembles
/// the closed form in both complex and real representation.
pub fn solve_boundary(
    particular: &Particular,
    filtered: &RootSet,
    k: usize,
    rdw: RdwMap,
) -> Result<ClosedForm, AnalysisError> {
    let prec = filtered.precision;
    if filtered.total_multiplicity() != k {
        return Err(AnalysisError::Internal(format!(
            "{} retained roots for {k} boundary equations",
            filtered.total_multiplicity()
        )));
    }
    if filtered.roots.iter().any(|r| r.value.is_zero()) {
        return Err(AnalysisError::Internal("zero root in the unit disc".into()));
    }
    let unknowns: Vec<(usize, u32)> = filtered
        .roots
        .iter()
        .enumerate()
        .flat_map(|(j, r)| (0..r.multiplicity as u32).map(move |u| (j, u)))
        .collect();
    let xs: Vec<i64> = (-(k as i64) + 1..=0).collect();
    let matrix: Vec<Vec<MpComplex>> = xs
        .iter()
        .map(|&x| {
            unknowns
                .iter()
                .map(|&(j, u)| basis(&filtered.roots[j].value, x, u, prec))
                .collect()
        })
        .collect();
    let rhs: Vec<MpComplex> = xs
        .iter()
        .map(|&x| MpComplex::from_real(-particular.at(x as i128, prec)))
        .collect();
    let coeffs = gauss(matrix.clone(), rhs.clone(), prec)?;

    let tol = prec.residual_tolerance();
    let one = MpFloat::one(prec);
    for (row, b) in matrix.iter().zip(&rhs) {
        let mut acc = MpComplex::zero(prec);
        for (m, c) in row.iter().zip(&coeffs) {
            acc = &acc + &(m * c);
        }
        let res = (&acc - b).abs();
        if res >= &tol * &b.abs().max(&one) {
            return Err(AnalysisError::Precision(format!(
                "boundary equation residual {}",
                res.to_sci_string(3)
            )));
        }
    }

    let complex_terms: Vec<ComplexTerm> = unknowns
        .iter()
        .zip(&coeffs)
        .map(|(&(j, u), c)| ComplexTerm {
            root: filtered.roots[j].value.clone(),
            power: u,
            coeff: c.clone(),
        })
        .collect();

    let two = MpFloat::from_i64(2, prec);
    let mut real_terms = Vec::new();
    for (idx, &(j, u)) in unknowns.iter().enumerate() {
        let root = &filtered.roots[j];
        let a = &coeffs[idx];
        if root.is_real() {
            real_terms.push(RealTerm::RealRoot {
                lambda: root.value.re.clone(),
                power: u,
                coeff: a.re.clone(),
            });
        } else if !root.value.im.is_negative() {
            // Average with the conjugate partner's coefficient, which the
            // exact solution would make equal to conj(a).
            let partner = unknowns.iter().position(|&(jj, uu)| {
                uu == u && filtered.roots[jj].value == root.value.conj()
            });
            let a = match partner {
                Some(p) => {
                    let c = coeffs[p].conj();
                    MpComplex::new(&(&a.re + &c.re) / &two, &(&a.im + &c.im) / &two)
                }
                None => {
                    return Err(AnalysisError::Internal(
                        "complex root retained without its conjugate".into(),
                    ))
                }
            };
            real_terms.push(RealTerm::ConjugatePair {
                modulus: root.value.abs(),
                angle: root.value.arg(),
                power: u,
                b: &two * &a.re,
                b_prime: -(&two * &a.im),
            });
        }
    }

    Ok(ClosedForm {
        particular: particular.clone(),
        complex_terms,
        real_terms,
        rdw,
        precision: prec,
    })
}
