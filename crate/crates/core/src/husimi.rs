//! Husimi Q function `Q(alpha) = <alpha|rho|alpha>/pi` of a single bosonic
//! mode on a rectangular grid.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::operator::{coherent_amplitudes, DensityMatrix};

/// Largest population allowed in the top two Fock levels before the state is
/// considered to have run into the truncation.
pub const LEAK_LIMIT: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct HusimiGrid {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
    pub points: usize,
    /// Row-major with the imaginary part as the outer index.
    values: Vec<f64>,
}

impl Default for HusimiGrid {
    fn default() -> Self {
        Self::square(-6.0, 6.0, 121).expect("default grid is valid")
    }
}

impl HusimiGrid {
    pub fn new(re: (f64, f64), im: (f64, f64), points: usize) -> Result<Self> {
        if points < 2 {
            return Err(Error::Config(format!("husimi grid needs at least 2 points per axis, got {points}")));
        }
        for (lo, hi) in [re, im] {
            if !(lo < hi && lo.is_finite() && hi.is_finite()) {
                return Err(Error::Config(format!("invalid husimi range [{lo}, {hi}]")));
            }
        }
        Ok(Self {
            re_min: re.0,
            re_max: re.1,
            im_min: im.0,
            im_max: im.1,
            points,
            values: vec![0.0; points * points],
        })
    }

    pub fn square(min: f64, max: f64, points: usize) -> Result<Self> {
        Self::new((min, max), (min, max), points)
    }

    fn coord(lo: f64, hi: f64, points: usize, k: usize) -> f64 {
        lo + (hi - lo) * k as f64 / (points - 1) as f64
    }

    pub fn re_axis(&self) -> Vec<f64> {
        (0..self.points).map(|k| Self::coord(self.re_min, self.re_max, self.points, k)).collect()
    }

    pub fn im_axis(&self) -> Vec<f64> {
        (0..self.points).map(|k| Self::coord(self.im_min, self.im_max, self.points, k)).collect()
    }

    pub fn cell_area(&self) -> f64 {
        let d = (self.points - 1) as f64;
        (self.re_max - self.re_min) / d * (self.im_max - self.im_min) / d
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, i_im: usize, i_re: usize) -> f64 {
        self.values[i_im * self.points + i_re]
    }

    /// `(re, im, q)` triples, imaginary part outer, both ascending.
    pub fn iter(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        let re = self.re_axis();
        let im = self.im_axis();
        let n = self.points;
        self.values.iter().enumerate().map(move |(k, &q)| (re[k % n], im[k / n], q))
    }

    /// Riemann sum of Q times the cell area.
    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.cell_area()
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Grid point with the largest Q, as `(re, im, q)`.
    pub fn argmax(&self) -> (f64, f64, f64) {
        self.iter().fold((0.0, 0.0, f64::NEG_INFINITY), |best, p| if p.2 > best.2 { p } else { best })
    }

    pub fn max_abs_diff(&self, other: &HusimiGrid) -> Result<f64> {
        if self.points != other.points
            || (self.re_min, self.re_max, self.im_min, self.im_max)
                != (other.re_min, other.re_max, other.im_min, other.im_max)
        {
            return Err(Error::Config("husimi grids differ in layout".into()));
        }
        Ok(self.values.iter().zip(&other.values).fold(0.0, |m, (a, b)| m.max((a - b).abs())))
    }
}

/// Evaluates Q at arbitrary points for one cavity state.
#[derive(Debug, Clone)]
pub struct HusimiEvaluator {
    rho: DMatrix<Complex64>,
    n_fock: usize,
}

impl HusimiEvaluator {
    pub fn new(rho_ext: &DensityMatrix) -> Result<Self> {
        let dims = rho_ext.space().dims();
        if dims.len() != 1 {
            return Err(Error::InvalidDims(dims.to_vec()));
        }
        let n = dims[0];
        let pops = rho_ext.populations();
        let leak: f64 = pops.iter().rev().take(2.min(n)).sum();
        if leak > LEAK_LIMIT {
            return Err(Error::InvalidState(format!(
                "top two Fock levels hold {leak:.3e} > {LEAK_LIMIT:e}; Q would be cut by the truncation"
            )));
        }
        Ok(Self { rho: rho_ext.matrix().clone(), n_fock: n })
    }

    /// `<alpha|rho|alpha>/pi` with the exact coherent amplitudes on the
    /// truncated space.
    pub fn q(&self, alpha: Complex64) -> f64 {
        let amp = coherent_amplitudes(alpha, self.n_fock);
        let mut acc = Complex64::new(0.0, 0.0);
        for n in 0..self.n_fock {
            let mut row = Complex64::new(0.0, 0.0);
            for m in 0..self.n_fock {
                row += self.rho[(m, n)] * amp[n] * amp[m].conj();
            }
            acc += row;
        }
        acc.re / std::f64::consts::PI
    }

    /// Radius maximizing Q along the positive real axis, searched on
    /// `[0, r_max]`.
    pub fn peak_radius(&self, r_max: f64) -> f64 {
        let steps = ((r_max / 0.01).ceil() as usize).max(1);
        let h = r_max / steps as f64;
        let at = |r: f64| self.q(Complex64::new(r, 0.0));
        let best = (0..=steps).map(|k| k as f64 * h).fold((0.0, f64::NEG_INFINITY), |b, r| {
            let v = at(r);
            if v > b.1 {
                (r, v)
            } else {
                b
            }
        });
        // golden-section refinement on the bracketing cells
        let (mut a, mut b) = ((best.0 - h).max(0.0), (best.0 + h).min(r_max));
        let phi = 0.5 * (5f64.sqrt() - 1.0);
        let mut x1 = b - phi * (b - a);
        let mut x2 = a + phi * (b - a);
        let (mut f1, mut f2) = (at(x1), at(x2));
        for _ in 0..60 {
            if f1 < f2 {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + phi * (b - a);
                f2 = at(x2);
            } else {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - phi * (b - a);
                f1 = at(x1);
            }
        }
        0.5 * (a + b)
    }

    /// `(max - min)/mean` of Q over `samples` equally spaced angles at radius
    /// `r`.
    pub fn angular_variation(&self, r: f64, samples: usize) -> f64 {
        let vals: Vec<f64> = (0..samples)
            .map(|k| {
                let th = 2.0 * std::f64::consts::PI * k as f64 / samples as f64;
                self.q(Complex64::from_polar(r, th))
            })
            .collect();
        let max = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        (max - min) / mean
    }
}

/// Q of `rho_ext` on every point of `grid`.
pub fn husimi_q(rho_ext: &DensityMatrix, grid: &HusimiGrid) -> Result<HusimiGrid> {
    let eval = HusimiEvaluator::new(rho_ext)?;
    let re = grid.re_axis();
    let im = grid.im_axis();
    let values: Vec<f64> = im
        .par_iter()
        .flat_map_iter(|&y| re.iter().map(move |&x| (x, y)).collect::<Vec<_>>())
        .map(|(x, y)| eval.q(Complex64::new(x, y)))
        .collect();
    Ok(HusimiGrid { values, ..grid.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{coherent_state, thermal_state, number, HilbertSpace, Operator};
    use std::f64::consts::PI;

    #[test]
    fn vacuum_is_a_gaussian() {
        let vac = DensityMatrix::basis(&HilbertSpace::fock(20).unwrap(), 0).unwrap();
        let grid = husimi_q(&vac, &HusimiGrid::default()).unwrap();
        assert!((grid.value(60, 60) - 1.0 / PI).abs() < 1e-12);
        for (x, y, q) in grid.iter().step_by(97) {
            assert!((q - (-(x * x + y * y)).exp() / PI).abs() < 1e-14);
        }
        assert!((grid.mass() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn coherent_state_overlap() {
        let beta = Complex64::new(1.2, -0.7);
        let rho = coherent_state(beta, 40).unwrap();
        let grid = husimi_q(&rho, &HusimiGrid::square(-4.0, 4.0, 33).unwrap()).unwrap();
        for (x, y, q) in grid.iter() {
            let d = Complex64::new(x, y) - beta;
            let oracle = (-d.norm_sqr()).exp() / PI;
            assert!((q - oracle).abs() < 1e-10, "{x} {y}: {q} vs {oracle}");
        }
        assert!(grid.min_value() >= -1e-12);
        let (x, y, _) = grid.argmax();
        assert!((x - 1.0).abs() <= 0.25 && (y + 0.75).abs() <= 0.25);
    }

    #[test]
    fn row_order_is_imaginary_outer() {
        let g = HusimiGrid::square(-1.0, 1.0, 3).unwrap();
        let coords: Vec<(f64, f64)> = g.iter().map(|(x, y, _)| (x, y)).collect();
        assert_eq!(coords[0], (-1.0, -1.0));
        assert_eq!(coords[1], (0.0, -1.0));
        assert_eq!(coords[3], (-1.0, 0.0));
        assert_eq!(g.cell_area(), 1.0);
    }

    #[test]
    fn thermal_state_is_round() {
        let n = 40;
        let h = number(n).unwrap();
        let rho = thermal_state(&h, 1.0 / (3.0f64).ln()).unwrap(); // mean occupation 0.5
        let eval = HusimiEvaluator::new(&rho).unwrap();
        assert!(eval.angular_variation(1.0, 64) < 1e-12);
        // Q of a thermal state is exp(-|a|^2/(nbar+1))/(pi (nbar+1))
        let q = eval.q(Complex64::new(0.8, 0.3));
        let oracle = (-(0.73) / 1.5f64).exp() / (PI * 1.5);
        assert!((q - oracle).abs() < 1e-10);
        assert!(eval.peak_radius(3.0) < 1e-6);
    }

    #[test]
    fn ring_peak_of_a_fock_state() {
        // Q of |k> is r^{2k} e^{-r^2}/(pi k!), maximal at r = sqrt(k).
        let space = HilbertSpace::fock(30).unwrap();
        let rho = DensityMatrix::basis(&space, 9).unwrap();
        let eval = HusimiEvaluator::new(&rho).unwrap();
        assert!((eval.peak_radius(6.0) - 3.0).abs() < 1e-6);
        assert!(eval.angular_variation(3.0, 90) < 1e-12);
    }

    #[test]
    fn rejects_leaky_and_composite_states() {
        let space = HilbertSpace::fock(5).unwrap();
        let top = DensityMatrix::basis(&space, 4).unwrap();
        assert!(HusimiEvaluator::new(&top).is_err());
        let q2 = DensityMatrix::new(Operator::identity(&HilbertSpace::new(vec![2, 2]).unwrap()).scale(Complex64::new(0.25, 0.0))).unwrap();
        assert!(matches!(HusimiEvaluator::new(&q2), Err(Error::InvalidDims(_))));
        assert!(HusimiGrid::square(1.0, -1.0, 10).is_err());
        assert!(HusimiGrid::square(-1.0, 1.0, 1).is_err());
    }
}
