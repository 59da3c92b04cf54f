//! Exact Dolbeault cohomology dimensions for the catalog.
//!
//! On a weighted projective space `P(a_0, ..., a_n)` the sections of `O(d)`
//! are the weighted-homogeneous monomials of degree `d`, so `h^0` is a
//! lattice-point count. Intermediate cohomology vanishes and the top degree
//! follows from duality, `h^n(O(d)) = h^0(O(-d - Σa))`. Torus quotients take
//! their dimensions from the kernel of the discretized Laplacian.

use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::catalog::{gcd, validate_weights, CatalogSpec};
use crate::error::{Error, Result};
use crate::spectral::assemble_kodaira_laplacian;

/// Largest degree for which the enumeration oracle is practical.
pub const ENUMERATION_LIMIT: i64 = 10_000;

/// Grid size used when torus dimensions are read off the spectral lab.
pub const TORUS_KERNEL_RESOLUTION: usize = 32;

/// `#{m ∈ N^{n+1} : Σ a_i m_i = d}`.
pub fn weighted_proj_h0(weights: &[u64], d: i64) -> Result<u64> {
    validate_weights(weights)?;
    if d < 0 {
        return Ok(0);
    }
    coin_change_h0(weights, d as u64)
}

/// Enumeration oracle for `weighted_proj_h0`. Recurses over all weights but
/// the last, whose multiplicity is then fixed by divisibility.
pub fn enumerate_h0(weights: &[u64], d: u64) -> Result<u64> {
    fn go(weights: &[u64], rest: u64) -> Result<u64> {
        match weights {
            [] => Ok(u64::from(rest == 0)),
            [last] => Ok(u64::from(rest % last == 0)),
            [first, tail @ ..] => {
                let mut total: u64 = 0;
                let mut used = 0;
                while used <= rest {
                    total = total
                        .checked_add(go(tail, rest - used)?)
                        .ok_or_else(|| Error::Overflow("section count exceeds u64".into()))?;
                    used += first;
                }
                Ok(total)
            }
        }
    }
    go(weights, d)
}

/// Coin-problem recurrence over the weights, `O(d · (n+1))`.
pub fn coin_change_h0(weights: &[u64], d: u64) -> Result<u64> {
    let len = usize::try_from(d)
        .ok()
        .and_then(|d| d.checked_add(1))
        .ok_or_else(|| Error::Overflow(format!("degree {d} too large for the recurrence")))?;
    let mut ways = vec![0u64; len];
    ways[0] = 1;
    for &a in weights {
        let a = a as usize;
        for j in a..len {
            ways[j] = ways[j]
                .checked_add(ways[j - a])
                .ok_or_else(|| Error::Overflow("section count exceeds u64".into()))?;
        }
    }
    Ok(ways[len - 1])
}

/// Closed forms where available: `binom(d+n, n)` for `P^n` and the
/// two-weight count for `P(a, b)`.
pub fn closed_form_h0(weights: &[u64], d: i64) -> Option<u64> {
    if d < 0 {
        return Some(0);
    }
    let d = d as u64;
    if weights.iter().all(|&a| a == 1) {
        let n = weights.len() as u64 - 1;
        return binomial(d + n, n);
    }
    if let [a, b] = weights {
        if gcd(*a, *b) != 1 {
            return None;
        }
        let (a, b) = (*a as i128, *b as i128);
        let d = d as i128;
        let b_inv = mod_inverse(b, a);
        let a_inv = mod_inverse(a, b);
        let r1 = (b_inv * d).rem_euclid(a);
        let r2 = (a_inv * d).rem_euclid(b);
        let count = (d - b * r1 - a * r2) / (a * b) + 1;
        return u64::try_from(count).ok();
    }
    None
}

fn mod_inverse(x: i128, m: i128) -> i128 {
    if m == 1 {
        return 0;
    }
    let (mut r0, mut r1) = (m, x.rem_euclid(m));
    let (mut t0, mut t1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (t0, t1) = (t1, t0 - q * t1);
    }
    t0.rem_euclid(m)
}

/// Exact binomial coefficient, `None` on overflow.
pub fn binomial(n: u64, k: u64) -> Option<u64> {
    let k = k.min(n.saturating_sub(k));
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.checked_mul((n - i) as u128)? / (i as u128 + 1);
    }
    u64::try_from(acc).ok()
}

/// `h^q(P(a), O(d))`.
pub fn weighted_proj_hq(weights: &[u64], d: i64, q: usize) -> Result<u64> {
    let n = weights.len() - 1;
    if q > n {
        return Err(Error::DegreeOutOfRange { q, n });
    }
    if q == 0 {
        weighted_proj_h0(weights, d)
    } else if q < n {
        Ok(0)
    } else {
        let sum: i64 = weights.iter().map(|&a| a as i64).sum();
        let dual = d
            .checked_neg()
            .and_then(|x| x.checked_sub(sum))
            .ok_or_else(|| Error::Overflow("dual degree overflows".into()))?;
        weighted_proj_h0(weights, dual)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CohomologyTable {
    pub catalog_id: String,
    pub dimension: usize,
    pub p_values: Vec<u64>,
    pub entries: BTreeMap<(u64, usize), u64>,
}

impl CohomologyTable {
    pub fn get(&self, p: u64, q: usize) -> Result<u64> {
        self.entries
            .get(&(p, q))
            .copied()
            .ok_or_else(|| Error::Missing(format!("no cohomology entry for p = {p}, q = {q}")))
    }

    /// `h^0, ..., h^n` at one power.
    pub fn row(&self, p: u64) -> Result<Vec<u64>> {
        (0..=self.dimension).map(|q| self.get(p, q)).collect()
    }

    /// Morse sum `Σ_{j≤q} (-1)^{q-j} h^j`.
    pub fn morse_sum(&self, p: u64, q: usize) -> Result<i128> {
        let mut total: i128 = 0;
        for j in 0..=q {
            let h = self.get(p, j)? as i128;
            total += if (q - j) % 2 == 0 { h } else { -h };
        }
        Ok(total)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["p", "q", "h"])?;
        for ((p, q), h) in &self.entries {
            w.write_record([p.to_string(), q.to_string(), h.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Fills `h^q(M, L^p ⊗ E)` for every `p` in `p_values` and `q = 0..=n`.
/// The trivial auxiliary bundle of rank `r` multiplies every entry by `r`.
pub fn cohomology_table(spec: &CatalogSpec, p_values: &[u64]) -> Result<CohomologyTable> {
    let n = spec.dimension();
    let rank = spec.rank() as u64;
    let rows: Vec<Result<Vec<u64>>> = p_values
        .par_iter()
        .map(|&p| {
            let row = match spec {
                CatalogSpec::Wps { weights, degree, .. } => {
                    let d = (*degree as i64)
                        .checked_mul(p as i64)
                        .ok_or_else(|| Error::Overflow("degree d·p overflows".into()))?;
                    (0..=n).map(|q| weighted_proj_hq(weights, d, q)).collect::<Result<Vec<_>>>()?
                }
                CatalogSpec::Torus { ripple, .. } if *ripple != 0.0 => {
                    return Err(Error::UnsupportedModel(
                        "exact cohomology of the ripple torus is not tabulated".into(),
                    ))
                }
                CatalogSpec::Torus { .. } => (0..=n)
                    .map(|q| {
                        assemble_kodaira_laplacian(spec, p, q, TORUS_KERNEL_RESOLUTION)
                            .map(|op| op.spectral_table().zero_dim)
                    })
                    .collect::<Result<Vec<_>>>()?,
                CatalogSpec::LocalModel { .. } => {
                    return Err(Error::UnsupportedModel("local models are not compact".into()))
                }
            };
            row.into_iter()
                .map(|h| h.checked_mul(rank).ok_or_else(|| Error::Overflow("rank scaling overflows".into())))
                .collect()
        })
        .collect();
    let mut entries = BTreeMap::new();
    for (&p, row) in p_values.iter().zip(rows) {
        for (q, h) in row?.into_iter().enumerate() {
            entries.insert((p, q), h);
        }
    }
    Ok(CohomologyTable { catalog_id: spec.id().to_string(), dimension: n, p_values: p_values.to_vec(), entries })
}

/// Relative error of `p^{-n} h^0(O(p))` against `1/(n! Π a)`, computed from
/// exact integers.
pub fn density_error(weights: &[u64], p: u64) -> Result<f64> {
    let n = weights.len() as i32 - 1;
    let h = weighted_proj_h0(weights, p as i64)? as f64;
    let fact: f64 = (1..=n).map(f64::from).product();
    let limit = 1.0 / (fact * weights.iter().map(|&a| a as f64).product::<f64>());
    Ok((h / (p as f64).powi(n) - limit).abs() / limit)
}

/// Checks that the Euler characteristic `χ(O(p))` restricted to each residue
/// class modulo `lcm(a)` is a polynomial of degree `n`, i.e. its `(n+1)`-th
/// finite difference vanishes. Uses `p = p0, ..., p0 + (n+2)·lcm`.
pub fn euler_quasi_polynomial_check(weights: &[u64], p0: i64) -> Result<bool> {
    let n = weights.len() - 1;
    let period = weights.iter().fold(1u64, |l, &a| l / gcd(l, a) * a) as i64;
    for r in 0..period {
        let values = (0..=n as i64 + 1)
            .map(|k| euler_characteristic(weights, p0 + r + k * period))
            .collect::<Result<Vec<i128>>>()?;
        let mut diff = values;
        for _ in 0..=n {
            diff = diff.windows(2).map(|w| w[1] - w[0]).collect();
        }
        if diff.iter().any(|&x| x != 0) {
            return Ok(false);
        }
    }
    Ok(true)
}

pub fn euler_characteristic(weights: &[u64], d: i64) -> Result<i128> {
    let n = weights.len() - 1;
    let mut chi = 0i128;
    for q in 0..=n {
        let h = weighted_proj_hq(weights, d, q)? as i128;
        chi += if q % 2 == 0 { h } else { -h };
    }
    Ok(chi)
}
