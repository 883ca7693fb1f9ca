//! Time-dependent operators as finite sums of phase-modulated constants,
//! `S(t) = sum_k e^{i nu_k t} S_k`.

use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::operator::{hermitian_eigen, HilbertSpace, Operator, I, ZERO};
use crate::random::Rng;
use crate::sparse::smart_mul;

/// Terms whose largest entry falls below this fraction of the largest term
/// are dropped after every algebraic operation.
const PRUNE_REL: f64 = 1e-13;
/// Frequencies closer than this (relative to the largest one) are merged.
const FREQ_REL: f64 = 1e-9;
const HERMITIAN_SAMPLES: usize = 8;
const HERMITIAN_CHECK_TOL: f64 = 1e-10;

/// One `e^{i freq t} op` contribution.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseTerm {
    pub freq: f64,
    pub op: Operator,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScheduledOperator {
    space: HilbertSpace,
    terms: Vec<PhaseTerm>,
    hermitian: bool,
}

impl ScheduledOperator {
    pub fn zero(space: &HilbertSpace) -> Self {
        Self { space: space.clone(), terms: Vec::new(), hermitian: false }
    }

    pub fn constant(op: Operator) -> Self {
        let space = op.space().clone();
        Self::from_terms_unchecked(space, vec![PhaseTerm { freq: 0.0, op }])
    }

    /// Collects terms, merging equal frequencies and pruning negligible ones.
    pub fn from_terms(space: &HilbertSpace, terms: Vec<PhaseTerm>) -> Result<Self> {
        for t in &terms {
            if t.op.space() != space {
                return Err(Error::SpaceMismatch {
                    left: space.dims().to_vec(),
                    right: t.op.space().dims().to_vec(),
                });
            }
            if !t.freq.is_finite() {
                return Err(Error::Config(format!("non-finite frequency {}", t.freq)));
            }
        }
        Ok(Self::from_terms_unchecked(space.clone(), terms))
    }

    /// As [`ScheduledOperator::from_terms`], additionally requiring the sum
    /// to be Hermitian; checked at eight seeded random times.
    pub fn hermitian(space: &HilbertSpace, terms: Vec<PhaseTerm>) -> Result<Self> {
        Self::from_terms(space, terms)?.require_hermitian()
    }

    pub fn require_hermitian(mut self) -> Result<Self> {
        let worst = self.hermiticity_error_sampled();
        if worst > HERMITIAN_CHECK_TOL * self.scale().max(1.0) {
            return Err(Error::NotHermitian(worst));
        }
        self.hermitian = true;
        Ok(self)
    }

    fn from_terms_unchecked(space: HilbertSpace, terms: Vec<PhaseTerm>) -> Self {
        Self { space, terms: merge_terms(terms), hermitian: false }
    }

    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn terms(&self) -> &[PhaseTerm] {
        &self.terms
    }

    pub fn is_hermitian_required(&self) -> bool {
        self.hermitian
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// No time dependence at all.
    pub fn is_static(&self) -> bool {
        self.terms.iter().all(|t| t.freq == 0.0)
    }

    /// The operator itself when there is no time dependence.
    pub fn as_static(&self) -> Option<Operator> {
        match self.terms.as_slice() {
            [] => Some(Operator::zeros(&self.space)),
            [t] if t.freq == 0.0 => Some(t.op.clone()),
            _ => None,
        }
    }

    /// The base operator when the schedule is a single term, i.e. a constant
    /// operator times a global phase.
    pub fn single_phase(&self) -> Option<&Operator> {
        match self.terms.as_slice() {
            [t] => Some(&t.op),
            _ => None,
        }
    }

    /// Largest entry over all terms.
    pub fn scale(&self) -> f64 {
        self.terms.iter().fold(0.0, |m, t| m.max(t.op.max_abs()))
    }

    pub fn max_frequency(&self) -> f64 {
        self.terms.iter().fold(0.0, |m, t| m.max(t.freq.abs()))
    }

    pub fn eval(&self, t: f64) -> Operator {
        let d = self.space.dim();
        let mut m = DMatrix::<Complex64>::zeros(d, d);
        for term in &self.terms {
            let phase = (I * term.freq * t).exp();
            m += term.op.matrix() * phase;
        }
        Operator::from_parts(self.space.clone(), m)
    }

    /// Analytic time derivative: `e^{i nu t} -> i nu e^{i nu t}`.
    pub fn derivative(&self) -> Self {
        let terms = self
            .terms
            .iter()
            .filter(|t| t.freq != 0.0)
            .map(|t| PhaseTerm { freq: t.freq, op: t.op.scale(I * t.freq) })
            .collect();
        let mut out = Self::from_terms_unchecked(self.space.clone(), terms);
        out.hermitian = self.hermitian;
        out
    }

    pub fn adjoint(&self) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|t| PhaseTerm { freq: -t.freq, op: t.op.adjoint() })
            .collect();
        let mut out = Self::from_terms_unchecked(self.space.clone(), terms);
        out.hermitian = self.hermitian;
        out
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_space(other)?;
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                let m = smart_mul(a.op.matrix(), b.op.matrix());
                terms.push(PhaseTerm {
                    freq: a.freq + b.freq,
                    op: Operator::from_parts(self.space.clone(), m),
                });
            }
        }
        Ok(Self::from_terms_unchecked(self.space.clone(), terms))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_space(other)?;
        let terms = self.terms.iter().chain(other.terms.iter()).cloned().collect();
        Ok(Self::from_terms_unchecked(self.space.clone(), terms))
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|t| PhaseTerm { freq: t.freq, op: t.op.scale(factor) })
            .collect();
        Self::from_terms_unchecked(self.space.clone(), terms)
    }

    /// `e^{i h t} S(t) e^{-i h t}` for a static Hermitian `h`.
    pub fn rotate(&self, h: &Operator) -> Result<Self> {
        let mut terms = Vec::new();
        for term in &self.terms {
            for comp in heisenberg_components(h, &term.op)? {
                terms.push(PhaseTerm { freq: term.freq + comp.freq, op: comp.op });
            }
        }
        let mut out = Self::from_terms_unchecked(self.space.clone(), terms);
        out.hermitian = self.hermitian;
        Ok(out)
    }

    /// Largest `max |S(t) - S(t)^dag|` over the seeded sample times.
    pub fn hermiticity_error_sampled(&self) -> f64 {
        let mut rng = Rng::seeded(0x5eed_0f7e57);
        let horizon = 100.0 / self.max_frequency().max(1.0);
        (0..HERMITIAN_SAMPLES)
            .map(|_| self.eval(rng.uniform(-horizon, horizon)).hermiticity_error())
            .fold(0.0, f64::max)
    }

    fn check_space(&self, other: &Self) -> Result<()> {
        if self.space != other.space {
            return Err(Error::SpaceMismatch {
                left: self.space.dims().to_vec(),
                right: other.space.dims().to_vec(),
            });
        }
        Ok(())
    }
}

impl fmt::Display for ScheduledOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ScheduledOperator on {} with {} term(s):", self.space, self.terms.len())?;
        for t in &self.terms {
            write!(f, " [nu={}, |max|={:e}]", t.freq, t.op.max_abs())?;
        }
        Ok(())
    }
}

fn freq_tol(freqs: impl Iterator<Item = f64>) -> f64 {
    FREQ_REL * freqs.fold(1.0_f64, |m, f| m.max(f.abs()))
}

fn merge_terms(mut terms: Vec<PhaseTerm>) -> Vec<PhaseTerm> {
    if terms.is_empty() {
        return terms;
    }
    let tol = freq_tol(terms.iter().map(|t| t.freq));
    terms.sort_by(|a, b| a.freq.total_cmp(&b.freq));
    let mut merged: Vec<(Vec<f64>, PhaseTerm)> = Vec::new();
    for t in terms {
        match merged.last_mut() {
            Some((fs, last)) if (t.freq - last.freq).abs() <= tol => {
                fs.push(t.freq);
                last.op = &last.op + &t.op;
            }
            _ => merged.push((vec![t.freq], t)),
        }
    }
    let scale = merged.iter().fold(0.0_f64, |m, (_, t)| m.max(t.op.max_abs()));
    merged
        .into_iter()
        .filter(|(_, t)| t.op.max_abs() > PRUNE_REL * scale)
        .map(|(fs, mut t)| {
            // Representative frequency: exact zero stays exact.
            t.freq = if fs.iter().any(|&f| f.abs() <= tol) {
                0.0
            } else {
                fs.iter().sum::<f64>() / fs.len() as f64
            };
            t
        })
        .collect()
}

/// Decomposes `e^{i h t} x e^{-i h t} = sum_nu e^{i nu t} X_nu` using the
/// eigenbasis of `h`; `nu` ranges over its Bohr frequencies.
pub fn heisenberg_components(h: &Operator, x: &Operator) -> Result<Vec<PhaseTerm>> {
    h.check_same_space(x)?;
    let herm = h.hermiticity_error();
    if herm > 1e-10 * h.max_abs().max(1.0) {
        return Err(Error::NotHermitian(herm));
    }
    let space = x.space().clone();
    let n = h.dim();
    let (vals, vecs) = hermitian_eigen(h);
    let diagonal = vecs == DMatrix::identity(n, n);
    let xe = if diagonal {
        x.matrix().clone()
    } else {
        smart_mul(&smart_mul(&vecs.adjoint(), x.matrix()), &vecs)
    };
    let cutoff = xe.iter().fold(0.0_f64, |m, v| m.max(v.norm())) * 1e-15;

    let mut entries: Vec<(f64, usize, usize, Complex64)> = Vec::new();
    for b in 0..n {
        for a in 0..n {
            let v = xe[(a, b)];
            if v != ZERO && v.norm() > cutoff {
                entries.push((vals[a] - vals[b], a, b, v));
            }
        }
    }
    if entries.is_empty() {
        return Ok(Vec::new());
    }
    let tol = freq_tol(vals.iter().cloned()) * 2.0;
    entries.sort_by(|p, q| p.0.total_cmp(&q.0));

    let mut out = Vec::new();
    let mut start = 0;
    while start < entries.len() {
        let mut end = start + 1;
        while end < entries.len() && entries[end].0 - entries[end - 1].0 <= tol {
            end += 1;
        }
        let group = &entries[start..end];
        let freq = group.iter().map(|e| e.0).sum::<f64>() / group.len() as f64;
        let freq = if freq.abs() <= tol { 0.0 } else { freq };
        let mut m = DMatrix::<Complex64>::zeros(n, n);
        for &(_, a, b, v) in group {
            m[(a, b)] = v;
        }
        if !diagonal {
            m = smart_mul(&smart_mul(&vecs, &m), &vecs.adjoint());
        }
        out.push(PhaseTerm { freq, op: Operator::from_parts(space.clone(), m) });
        start = end;
    }
    Ok(merge_terms(out))
}
