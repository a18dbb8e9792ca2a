//! Roots of the characteristic polynomial, with multiplicities.
//!
//! `lambda = 1` (a root exactly when there is no direct termination) and
//! `lambda = 0` are split off by exact division. The rest is solved by the
//! Aberth-Ehrlich simultaneous iteration, first in `f64` and then at working
//! precision. Approximations closer than the cluster tolerance are merged
//! into one multiple root, whose centre is polished by Newton's method on
//! the derivative of order `multiplicity - 1`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::AnalysisError;
use crate::mp::{MpComplex, MpFloat, Precision};
use crate::runtime::charpoly::{CharPoly, MpPoly};

#[derive(Debug, Clone)]
pub struct Root {
    pub value: MpComplex,
    pub multiplicity: usize,
    pub on_unit_circle: bool,
    pub is_exact_one: bool,
}

impl Root {
    pub fn modulus(&self) -> MpFloat {
        self.value.abs()
    }

    /// Whether the root is real (imaginary part exactly zero after
    /// symmetrisation).
    pub fn is_real(&self) -> bool {
        self.value.im.is_zero()
    }
}

#[derive(Debug, Clone)]
pub struct RootSet {
    /// Sorted by modulus; a conjugate pair is adjacent, upper half first.
    pub roots: Vec<Root>,
    pub precision: Precision,
}

impl RootSet {
    pub fn total_multiplicity(&self) -> usize {
        self.roots.iter().map(|r| r.multiplicity).sum()
    }

    pub fn cluster_tolerance(&self) -> MpFloat {
        self.precision.cluster_tolerance()
    }
}

/// Compact summary used in reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootSummary {
    pub re: f64,
    pub im: f64,
    pub modulus: f64,
    pub multiplicity: usize,
}

impl From<&Root> for RootSummary {
    fn from(r: &Root) -> Self {
        RootSummary {
            re: r.value.re.to_f64(),
            im: r.value.im.to_f64(),
            modulus: r.modulus().to_f64(),
            multiplicity: r.multiplicity,
        }
    }
}

const F64_MAX_ITER: usize = 2000;
const MP_MAX_ITER: usize = 800;
const NEWTON_MAX_ITER: usize = 200;

/// Initial points spread on a circle of the roots' geometric-mean radius.
fn initial_guesses(coeffs: &[f64]) -> Vec<Complex64> {
    let n = coeffs.len() - 1;
    let r = (coeffs[0].abs() / coeffs[n].abs()).powf(1.0 / n as f64).max(1e-3);
    (0..n)
        .map(|j| {
            let t = std::f64::consts::TAU * j as f64 / n as f64 + 0.4;
            Complex64::from_polar(r, t)
        })
        .collect()
}

fn horner_f64(coeffs: &[f64], z: Complex64) -> (Complex64, Complex64) {
    let n = coeffs.len() - 1;
    let mut p = Complex64::new(coeffs[n], 0.0);
    let mut d = Complex64::new(0.0, 0.0);
    for &c in coeffs[..n].iter().rev() {
        d = d * z + p;
        p = p * z + c;
    }
    (p, d)
}

fn aberth_f64(coeffs: &[f64]) -> Vec<Complex64> {
    let mut z = initial_guesses(coeffs);
    let n = z.len();
    for _ in 0..F64_MAX_ITER {
        let mut max_step: f64 = 0.0;
        let mut next = z.clone();
        for j in 0..n {
            let (p, d) = horner_f64(coeffs, z[j]);
            if p.norm() == 0.0 {
                continue;
            }
            let ratio = p / d;
            let repulsion: Complex64 = (0..n)
                .filter(|&i| i != j)
                .map(|i| (z[j] - z[i]).inv())
                .sum();
            let step = ratio / (Complex64::new(1.0, 0.0) - ratio * repulsion);
            if step.is_finite() {
                next[j] = z[j] - step;
                max_step = max_step.max(step.norm() / z[j].norm().max(1.0));
            }
        }
        z = next;
        if max_step < 1e-15 {
            break;
        }
    }
    z
}

fn aberth_mp(poly: &MpPoly, start: Vec<MpComplex>, prec: Precision) -> Vec<MpComplex> {
    let n = start.len();
    let mut z = start;
    let one = MpFloat::one(prec);
    let stop = MpFloat::pow10(-((prec.digits() + 5) as i64), prec);
    let mut best = None::<MpFloat>;
    let mut stalled = 0;
    for _ in 0..MP_MAX_ITER {
        let mut next = z.clone();
        let mut max_step = MpFloat::zero(prec);
        for j in 0..n {
            let (p, d) = poly.eval_d(&z[j]);
            if p.is_zero() || d.is_zero() {
                continue;
            }
            let ratio = &p / &d;
            let mut repulsion = MpComplex::zero(prec);
            for i in 0..n {
                if i != j {
                    let diff = &z[j] - &z[i];
                    if !diff.is_zero() {
                        repulsion = &repulsion + &diff.recip();
                    }
                }
            }
            let mut denom = &ratio * &repulsion;
            denom = MpComplex::new(&one - &denom.re, -&denom.im);
            if denom.is_zero() {
                continue;
            }
            let step = &ratio / &denom;
            let rel = &step.abs() / &z[j].abs().max(&one);
            max_step = max_step.max(&rel);
            next[j] = &z[j] - &step;
        }
        z = next;
        if max_step < stop {
            break;
        }
        match &best {
            Some(b) if &max_step >= b => {
                stalled += 1;
                if stalled >= 8 {
                    break;
                }
            }
            _ => {
                best = Some(max_step);
                stalled = 0;
            }
        }
    }
    z
}

/// Newton's method on `g`, stopping once steps fall below working epsilon.
fn newton(g: &MpPoly, mut z: MpComplex, prec: Precision) -> MpComplex {
    let eps = prec.epsilon();
    let one = MpFloat::one(prec);
    for _ in 0..NEWTON_MAX_ITER {
        let (p, d) = g.eval_d(&z);
        if p.is_zero() || d.is_zero() {
            break;
        }
        let step = &p / &d;
        z = &z - &step;
        if step.abs() <= &eps * &z.abs().max(&one) {
            break;
        }
    }
    z
}

/// Groups approximations closer than `tol` (relative to `max(1, |z|)`),
/// transitively. Groups are listed by first member.
fn clusters(z: &[MpComplex], tol: &MpFloat, one: &MpFloat) -> Vec<Vec<usize>> {
    let n = z.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while parent[r] != r {
            r = parent[r];
        }
        parent[i] = r;
        r
    }
    for i in 0..n {
        for j in i + 1..n {
            let scale = z[i].abs().max(one);
            if (&z[i] - &z[j]).abs() < tol * &scale {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[b.max(a)] = a.min(b);
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut index = vec![usize::MAX; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        if index[r] == usize::MAX {
            index[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[index[r]].push(i);
    }
    groups
}

fn nth_derivative(p: &CharPoly, n: usize) -> CharPoly {
    (0..n).fold(p.clone(), |acc, _| acc.derivative())
}

/// Scaled residual `|chi(z)| / max(1, sum |c_i| |z|^i)`.
pub fn scaled_residual(poly: &MpPoly, z: &MpComplex) -> MpFloat {
    let one = z.re.one_like();
    let scale = poly.magnitude(z).max(&one);
    &poly.eval(z).abs() / &scale
}

/// All roots of `poly` with multiplicities, sorted by modulus.
pub fn find_roots(poly: &CharPoly, prec: Precision) -> Result<RootSet, AnalysisError> {
    let one = MpFloat::one(prec);
    let cluster_tol = prec.cluster_tolerance();
    let mut roots: Vec<Root> = Vec::new();

    let (mut rest, zeros) = poly.strip_zero_roots();
    if zeros > 0 {
        roots.push(Root {
            value: MpComplex::zero(prec),
            multiplicity: zeros,
            on_unit_circle: false,
            is_exact_one: false,
        });
    }
    let mut ones = 0;
    while let Some(q) = rest.deflate_one() {
        rest = q;
        ones += 1;
    }
    if ones > 0 {
        roots.push(Root {
            value: MpComplex::one(prec),
            multiplicity: ones,
            on_unit_circle: true,
            is_exact_one: true,
        });
    }

    if rest.degree() > 0 {
        let approx = aberth_f64(&rest.to_f64());
        let mp = rest.to_mp(prec);
        let start = approx
            .iter()
            .map(|c| MpComplex::from_f64(c.re, c.im, prec))
            .collect();
        let z = aberth_mp(&mp, start, prec);
        let mut found = Vec::new();
        for group in clusters(&z, &cluster_tol, &one) {
            let v = group.len();
            let mut centre = MpComplex::zero(prec);
            for &i in &group {
                centre = &centre + &z[i];
            }
            let inv = MpFloat::from_i64(v as i64, prec).recip();
            centre = centre.scale(&inv);
            let g = if v == 1 { mp.clone() } else { nth_derivative(&rest, v - 1).to_mp(prec) };
            found.push((newton(&g, centre, prec), v));
        }
        symmetrise(&mut found, &mp, prec)?;
        let tol = prec.residual_tolerance();
        for (z, v) in found {
            let res = scaled_residual(&mp, &z);
            if res >= tol {
                return Err(AnalysisError::Precision(format!(
                    "root {} has residual {}",
                    z.to_f64(),
                    res.to_sci_string(3)
                )));
            }
            let on_circle = (&z.abs() - &one).abs() < cluster_tol;
            roots.push(Root {
                value: z,
                multiplicity: v,
                on_unit_circle: on_circle,
                is_exact_one: false,
            });
        }
    }

    sort_roots(&mut roots);
    let set = RootSet {
        roots,
        precision: prec,
    };
    if set.total_multiplicity() != poly.degree() {
        return Err(AnalysisError::Internal(format!(
            "found {} roots of a degree-{} polynomial",
            set.total_multiplicity(),
            poly.degree()
        )));
    }
    Ok(set)
}

/// Makes near-real roots real and pairs the others with exact conjugates,
/// as the coefficients are real.
fn symmetrise(
    found: &mut [(MpComplex, usize)],
    poly: &MpPoly,
    prec: Precision,
) -> Result<(), AnalysisError> {
    let tol = prec.cluster_tolerance();
    let one = MpFloat::one(prec);
    let mut upper = Vec::new();
    let mut lower = Vec::new();
    for (i, (z, _)) in found.iter_mut().enumerate() {
        if z.im.abs() < &tol * &z.abs().max(&one) {
            let real = MpComplex::from_real(z.re.clone());
            *z = newton(poly, real, prec);
            z.im = z.re.zero_like();
        } else if z.im.is_negative() {
            lower.push(i);
        } else {
            upper.push(i);
        }
    }
    if upper.len() != lower.len() {
        return Err(AnalysisError::Internal(
            "non-real roots do not come in conjugate pairs".into(),
        ));
    }
    let mut taken = vec![false; lower.len()];
    for &u in &upper {
        let target = found[u].0.conj();
        let mut best: Option<(usize, MpFloat)> = None;
        for (slot, &l) in lower.iter().enumerate() {
            if taken[slot] || found[l].1 != found[u].1 {
                continue;
            }
            let d = (&found[l].0 - &target).abs();
            if best.as_ref().is_none_or(|(_, b)| &d < b) {
                best = Some((slot, d));
            }
        }
        match best {
            Some((slot, d)) if d < &tol * &target.abs().max(&one) => {
                taken[slot] = true;
                found[lower[slot]].0 = target;
            }
            _ => {
                return Err(AnalysisError::Precision(
                    "could not match a complex root with its conjugate".into(),
                ))
            }
        }
    }
    Ok(())
}

fn sort_roots(roots: &mut [Root]) {
    roots.sort_by(|a, b| {
        a.modulus()
            .partial_cmp(&b.modulus())
            .unwrap()
            .then_with(|| b.value.im.partial_cmp(&a.value.im).unwrap())
            .then_with(|| b.value.re.partial_cmp(&a.value.re).unwrap())
    });
}

/// Keeps the `k` roots of smallest modulus (counted with multiplicity),
/// which are exactly those in the closed unit disc.
pub fn filter_unit_disc(rs: &RootSet, k: usize) -> Result<RootSet, AnalysisError> {
    let tol = rs.cluster_tolerance();
    let one = MpFloat::one(rs.precision);
    let mut kept = Vec::new();
    let mut count = 0;
    let mut iter = rs.roots.iter();
    for r in iter.by_ref() {
        if count == k {
            break;
        }
        count += r.multiplicity;
        kept.push(r.clone());
    }
    if count != k {
        return Err(AnalysisError::Internal(format!(
            "cannot retain exactly {k} roots: a multiple root straddles the cut"
        )));
    }
    let excluded = rs.roots.get(kept.len());
    if let (Some(last), Some(next)) = (kept.last(), excluded) {
        let gap = &next.modulus() - &last.modulus();
        if gap < &tol + &tol {
            return Err(AnalysisError::Precision(format!(
                "root moduli {} and {} are too close to separate",
                last.modulus().to_sci_string(6),
                next.modulus().to_sci_string(6)
            )));
        }
    }
    if let Some(last) = kept.last() {
        if last.modulus() > &one + &tol {
            return Err(AnalysisError::Internal(format!(
                "only {} roots lie in the unit disc, expected {k}",
                kept.iter()
                    .filter(|r| r.modulus() <= &one + &tol)
                    .map(|r| r.multiplicity)
                    .sum::<usize>()
            )));
        }
    }
    if let Some(next) = excluded {
        let m = next.modulus();
        if next.is_exact_one || m <= &one - &tol {
            return Err(AnalysisError::Internal(format!(
                "more than {k} roots lie in the unit disc"
            )));
        }
        if m <= &one + &tol {
            return Err(AnalysisError::Precision(format!(
                "excluded root of modulus {} is indistinguishable from the unit circle",
                m.to_sci_string(6)
            )));
        }
    }
    Ok(RootSet {
        roots: kept,
        precision: rs.precision,
    })
}
