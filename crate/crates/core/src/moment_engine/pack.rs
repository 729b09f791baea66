//! Packed symmetric tensors and the homogeneous polynomials they define.
//!
//! An order-`r` pack stores one number per multi-index `(a, b, c)` with
//! `a + b + c = r`: the fully symmetrized expectation of a product holding
//! `a` copies of operator 1, `b` of operator 2 and `c` of operator 3. The
//! pack evaluates along a unit vector as
//! `sum r!/(a! b! c!) M_abc n1^a n2^b n3^c`.
//!
//! Multi-indices are ordered by descending `a`, then descending `b`:
//! `(r,0,0), (r-1,1,0), (r-1,0,1), (r-2,2,0), ...`.

use serde::{Deserialize, Serialize};

use crate::linalg::{binomial, multinomial3};

pub fn pack_len(order: u32) -> usize {
    let r = order as usize;
    (r + 1) * (r + 2) / 2
}

pub fn multi_indices(order: u32) -> Vec<[u32; 3]> {
    let mut out = Vec::with_capacity(pack_len(order));
    for a in (0..=order).rev() {
        for b in (0..=order - a).rev() {
            out.push([a, b, order - a - b]);
        }
    }
    out
}

pub fn index_of(order: u32, idx: [u32; 3]) -> usize {
    debug_assert_eq!(idx[0] + idx[1] + idx[2], order);
    let s = (order - idx[0]) as usize;
    s * (s + 1) / 2 + (s - idx[1] as usize)
}

fn monomial(idx: [u32; 3], n: &[f64; 3]) -> f64 {
    n[0].powi(idx[0] as i32) * n[1].powi(idx[1] as i32) * n[2].powi(idx[2] as i32)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetricPack {
    pub order: u32,
    pub values: Vec<f64>,
}

impl SymmetricPack {
    pub fn zeros(order: u32) -> Self {
        Self { order, values: vec![0.0; pack_len(order)] }
    }

    pub fn get(&self, a: u32, b: u32, c: u32) -> f64 {
        self.values[index_of(self.order, [a, b, c])]
    }

    pub fn set(&mut self, a: u32, b: u32, c: u32, value: f64) {
        let i = index_of(self.order, [a, b, c]);
        self.values[i] = value;
    }

    pub fn entries(&self) -> impl Iterator<Item = ([u32; 3], f64)> + '_ {
        multi_indices(self.order).into_iter().zip(self.values.iter().copied())
    }

    /// Sum of all distinct orderings, e.g. `<D1 D3 + D3 D1>` for `(1,0,1)`:
    /// the pack entry times its multinomial count.
    pub fn hermitian_sum(&self, a: u32, b: u32, c: u32) -> f64 {
        multinomial3(a, b, c) * self.get(a, b, c)
    }

    pub fn evaluate(&self, n: &[f64; 3]) -> f64 {
        self.entries().map(|(idx, v)| multinomial3(idx[0], idx[1], idx[2]) * v * monomial(idx, n)).sum()
    }

    pub fn to_poly(&self) -> HomPoly {
        let coeffs = self
            .entries()
            .map(|(idx, v)| multinomial3(idx[0], idx[1], idx[2]) * v)
            .collect();
        HomPoly { degree: self.order, coeffs }
    }

    pub fn from_poly(poly: &HomPoly) -> Self {
        let values = multi_indices(poly.degree)
            .into_iter()
            .zip(&poly.coeffs)
            .map(|(idx, c)| c / multinomial3(idx[0], idx[1], idx[2]))
            .collect();
        Self { order: poly.degree, values }
    }

    pub fn max_abs_diff(&self, other: &SymmetricPack) -> f64 {
        assert_eq!(self.order, other.order);
        self.values.iter().zip(&other.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

/// Homogeneous polynomial in `(n1, n2, n3)`, coefficients in pack order.
#[derive(Debug, Clone, PartialEq)]
pub struct HomPoly {
    pub degree: u32,
    pub coeffs: Vec<f64>,
}

impl HomPoly {
    pub fn constant(c: f64) -> Self {
        Self { degree: 0, coeffs: vec![c] }
    }

    pub fn zeros(degree: u32) -> Self {
        Self { degree, coeffs: vec![0.0; pack_len(degree)] }
    }

    pub fn linear(v: [f64; 3]) -> Self {
        Self { degree: 1, coeffs: v.to_vec() }
    }

    pub fn mul(&self, other: &HomPoly) -> HomPoly {
        let degree = self.degree + other.degree;
        let mut out = HomPoly::zeros(degree);
        for (ia, ca) in multi_indices(self.degree).into_iter().zip(&self.coeffs) {
            if *ca == 0.0 {
                continue;
            }
            for (ib, cb) in multi_indices(other.degree).into_iter().zip(&other.coeffs) {
                let idx = [ia[0] + ib[0], ia[1] + ib[1], ia[2] + ib[2]];
                out.coeffs[index_of(degree, idx)] += ca * cb;
            }
        }
        out
    }

    pub fn pow(&self, k: u32) -> HomPoly {
        (0..k).fold(HomPoly::constant(1.0), |acc, _| acc.mul(self))
    }

    pub fn scale(&self, s: f64) -> HomPoly {
        HomPoly { degree: self.degree, coeffs: self.coeffs.iter().map(|c| c * s).collect() }
    }

    pub fn add_assign(&mut self, other: &HomPoly) {
        assert_eq!(self.degree, other.degree);
        self.coeffs.iter_mut().zip(&other.coeffs).for_each(|(a, b)| *a += b);
    }

    pub fn evaluate(&self, n: &[f64; 3]) -> f64 {
        multi_indices(self.degree).into_iter().zip(&self.coeffs).map(|(idx, c)| c * monomial(idx, n)).sum()
    }
}

/// Central packs from raw packs `raw[r-1]`, `r = 1..=r_max`, through
/// `<(S_n - mu.n)^r> = sum_k C(r,k) <S_n^k> (-mu.n)^(r-k)`.
///
/// `weight` is the zeroth moment (1 for a normalized manifold); the mean is
/// `mu = raw_1 / weight`.
pub fn raw_to_central(raw: &[SymmetricPack], weight: f64) -> Vec<SymmetricPack> {
    let Some(first) = raw.first() else { return vec![] };
    let mean = [first.values[0] / weight, first.values[1] / weight, first.values[2] / weight];
    shift_packs(raw, weight, mean, -1.0)
}

/// Inverse of [`raw_to_central`]: raw packs from the mean vector and the
/// central packs `central[r-1]` (whose first entry is the zero pack).
pub fn central_to_raw(central: &[SymmetricPack], weight: f64, mean: [f64; 3]) -> Vec<SymmetricPack> {
    let mut shifted = central.to_vec();
    if let Some(first) = shifted.first_mut() {
        first.values = vec![0.0; 3];
    }
    let mut raw = shift_packs(&shifted, weight, mean, 1.0);
    if let Some(first) = raw.first_mut() {
        first.values = mean.iter().map(|m| m * weight).collect();
    }
    raw
}

fn shift_packs(packs: &[SymmetricPack], weight: f64, mean: [f64; 3], sign: f64) -> Vec<SymmetricPack> {
    let shift = HomPoly::linear([sign * mean[0], sign * mean[1], sign * mean[2]]);
    let polys: Vec<HomPoly> = packs.iter().map(SymmetricPack::to_poly).collect();
    (1..=packs.len() as u32)
        .map(|r| {
            let mut acc = shift.pow(r).scale(weight);
            for k in 1..=r {
                let term = polys[(k - 1) as usize].mul(&shift.pow(r - k)).scale(binomial(r, k));
                acc.add_assign(&term);
            }
            SymmetricPack::from_poly(&acc)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn layout() {
        assert_eq!(multi_indices(2), vec![[2, 0, 0], [1, 1, 0], [1, 0, 1], [0, 2, 0], [0, 1, 1], [0, 0, 2]]);
        for r in 0..8 {
            let idx = multi_indices(r);
            assert_eq!(idx.len(), pack_len(r));
            for (i, m) in idx.iter().enumerate() {
                assert_eq!(index_of(r, *m), i);
            }
        }
        assert_eq!(pack_len(3), 10);
    }

    #[test]
    fn second_order_evaluation() {
        // <S_n^2> = sum_j n_j^2 <S_j^2> + n1 n2 <S1S2 + S2S1> + ...
        let mut p = SymmetricPack::zeros(2);
        p.set(2, 0, 0, 2.0);
        p.set(1, 1, 0, 0.3);
        p.set(0, 0, 2, 4.0);
        let n = [0.6, 0.0, 0.8];
        assert!((p.evaluate(&n) - (2.0 * 0.36 + 4.0 * 0.64)).abs() < 1e-15);
        let n = [0.6, 0.8, 0.0];
        assert!((p.evaluate(&n) - (2.0 * 0.36 + 2.0 * 0.3 * 0.48)).abs() < 1e-15);
        assert!((p.hermitian_sum(1, 1, 0) - 0.6).abs() < 1e-15);
    }

    fn arb_packs() -> impl Strategy<Value = (Vec<SymmetricPack>, [f64; 3])> {
        (prop::collection::vec(-3.0f64..3.0, 3 + 6 + 10 + 15), prop::array::uniform3(-2.0f64..2.0)).prop_map(
            |(flat, mean)| {
                let mut packs = vec![];
                let mut at = 0;
                for r in 1..=4u32 {
                    let len = pack_len(r);
                    packs.push(SymmetricPack { order: r, values: flat[at..at + len].to_vec() });
                    at += len;
                }
                packs[0].values = vec![0.0; 3];
                (packs, mean)
            },
        )
    }

    proptest! {
        #[test]
        fn central_raw_round_trip((central, mean) in arb_packs(), weight in 0.2f64..1.0) {
            let raw = central_to_raw(&central, weight, mean);
            let back = raw_to_central(&raw, weight);
            for (a, b) in central.iter().zip(&back) {
                prop_assert!(a.max_abs_diff(b) < 1e-9);
            }
        }

        #[test]
        fn shift_matches_pointwise_binomial((central, mean) in arb_packs(), theta in 0.0f64..std::f64::consts::PI, phi in 0.0f64..std::f64::consts::TAU) {
            let n = [theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos()];
            let raw = central_to_raw(&central, 1.0, mean);
            let m = mean[0] * n[0] + mean[1] * n[1] + mean[2] * n[2];
            for r in 1..=4u32 {
                let direct: f64 = (0..=r)
                    .map(|k| {
                        let ck = if k == 0 { 1.0 } else { central[(k - 1) as usize].evaluate(&n) };
                        binomial(r, k) * ck * m.powi((r - k) as i32)
                    })
                    .sum();
                prop_assert!((raw[(r - 1) as usize].evaluate(&n) - direct).abs() < 1e-9);
            }
        }
    }
}
