//! Acceptance criteria 1-9. Prints one pass/fail line per criterion and exits
//! non-zero if any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use orbimorse::catalog::{build_catalog_orbifold, CatalogSpec};
use orbimorse::cohomology::{closed_form_h0, cohomology_table, weighted_proj_h0};
use orbimorse::curvature::morse_integral;
use orbimorse::kernels::{
    form_factor, gaussian_coefficient, gaussian_cross_coefficient, limit_u_infinity, mode_factor,
    mode_factor_direct, model_heat_kernel, trace_q_exp_omega, u_integrand, ModelPointData, SERIES_TOL,
    ZERO_MODE_TOL,
};
use orbimorse::linalg::{c, elementary_symmetric, exterior_power_trace, real_diag, C64};
use orbimorse::moishezon::{bigness_vs_rank, build_and_check, Verdict};
use orbimorse::quadrature::gauss_legendre_on;
use orbimorse::spectral::{assemble_kodaira_laplacian, morse_sum_vs_trace};
use orbimorse::verify::{
    exact_residual, singular_diagonal_factor, verify_kernel_asymptotics_regular, verify_kernel_asymptotics_singular,
};
use orbimorse::Result;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Result<Outcome> {
    Ok(Outcome { pass, detail: detail.into() })
}

/// Exact trace chain on the flat torus quotient.
fn criterion_1() -> Result<Outcome> {
    let mut worst_lower: f64 = 0.0;
    let mut worst_top: f64 = 0.0;
    for spec in [CatalogSpec::torus(vec![1], 2), CatalogSpec::torus(vec![1, 2], 2)] {
        let n = spec.dimension();
        for p in [4u64, 8, 16] {
            let tables = (0..=n)
                .map(|q| assemble_kodaira_laplacian(&spec, p, q, 64).map(|op| op.spectral_table()))
                .collect::<Result<Vec<_>>>()?;
            let h: Vec<u64> = tables.iter().map(|t| t.zero_dim).collect();
            for u in [0.5, 1.0, 5.0] {
                let r = morse_sum_vs_trace(&tables, u, &h)?;
                worst_lower = worst_lower.min(r[..n].iter().cloned().fold(0.0, f64::min));
                worst_top = worst_top.max(r[n].abs());
            }
        }
    }
    outcome(
        worst_lower >= -1e-9 && worst_top <= 1e-9,
        format!("min r_q = {worst_lower:.2e}, max |r_n| = {worst_top:.2e}"),
    )
}

/// `|ρ_p| ≤ 2/p` at `q = n`, in exact rational arithmetic.
fn criterion_2() -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    let mut pass = true;
    let p_values: Vec<u64> = (1..=4096).collect();
    for weights in [vec![1u64, 1], vec![1, 2]] {
        let table = cohomology_table(&CatalogSpec::wps(weights.clone()), &p_values)?;
        for &p in &p_values {
            let (num, den) = exact_residual(&weights, 1, 1, p, table.morse_sum(p, 1)?)?;
            pass &= num.abs() * p as i128 <= 2 * den;
            worst = worst.max(num.abs() as f64 * p as f64 / den as f64);
        }
    }
    outcome(pass, format!("max p·|ρ_p| = {worst:.3} over p ≤ 4096"))
}

/// Orbifold Chern number of `P(a,b)`.
fn criterion_3() -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    for (a, b) in [(1u64, 1u64), (1, 2), (2, 3)] {
        let (orb, bundle) = build_catalog_orbifold(&CatalogSpec::wps(vec![a, b]))?;
        let value = morse_integral(&orb, &bundle, &[0], 256, 1e-8)?.value;
        worst = worst.max((value - 1.0 / (a * b) as f64).abs());
    }
    outcome(worst <= 1e-3, format!("max |∫ - 1/(ab)| = {worst:.2e}"))
}

fn dyadic(from: u64, to: u64) -> Vec<u64> {
    std::iter::successors(Some(from), |p| Some(p * 2)).take_while(|&p| p <= to).collect()
}

/// Regular-point rate on `C/Z_2`.
fn criterion_4() -> Result<Outcome> {
    let spec = CatalogSpec::local_model(vec![1.0], 2);
    let p_values = dyadic(64, 4096);
    let mut slopes = Vec::new();
    for q in [0, 1] {
        let r = verify_kernel_asymptotics_regular(&spec, &[c(1.0, 0.0)], 1.0, &p_values, q, 0.5)?;
        slopes.push(r.fit.slope);
    }
    let worst = slopes.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    outcome(worst <= -0.4, format!("slopes {slopes:.1?}"))
}

/// Singular diagonal factor on `C/Z_k`.
fn criterion_5() -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    let mut ratios = Vec::new();
    for k in [2u32, 3] {
        let ratio = singular_diagonal_factor(&CatalogSpec::local_model(vec![1.0], k), &[c(0.0, 0.0)], 1.0, 1024, 0)?;
        worst = worst.max((ratio - k as f64).abs());
        ratios.push(ratio);
    }
    outcome(worst <= 0.05, format!("ratios {ratios:.6?}"))
}

/// Near-singular correction at `√p|Z| = 1`.
fn criterion_6() -> Result<Outcome> {
    let mut min_shrink = f64::INFINITY;
    for k in [2u32, 3] {
        let spec = CatalogSpec::local_model(vec![1.0], k);
        for p in [256u64, 1024] {
            let z = [c(1.0 / (p as f64).sqrt(), 0.0)];
            for q in [0, 1] {
                for r in verify_kernel_asymptotics_singular(&spec, &z, 1.0, &[p], q)? {
                    min_shrink = min_shrink.min(r.shrink_factor);
                }
            }
        }
    }
    outcome(min_shrink >= 10.0, format!("min shrink factor {min_shrink:.3e}"))
}

/// `u -> ∞` limit of the integrand.
fn criterion_7() -> Result<Outcome> {
    let mut worst: f64 = 0.0;
    for a in [[1.0, 2.0], [-1.0, 2.0]] {
        for q in [0, 1] {
            worst = worst.max((u_integrand(&a, 50.0, q)? - limit_u_infinity(&a, q)?).abs());
        }
    }
    outcome(worst <= 1e-6, format!("max deviation {worst:.2e}"))
}

fn brute_force_h0(weights: &[u64], d: u64) -> u64 {
    match weights {
        [] => u64::from(d == 0),
        [a] => u64::from(d % a == 0),
        [a, rest @ ..] => (0..=d / a).map(|m| brute_force_h0(rest, d - a * m)).sum(),
    }
}

/// Property suites.
fn criterion_8() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    // elementary symmetric identities
    let mut sym_err: f64 = 0.0;
    for _ in 0..1000 {
        let n = rng.random_range(1..=6);
        let a: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        let u = rng.random_range(0.01..5.0);
        let x: Vec<f64> = a.iter().map(|aj| (-u * aj).exp()).collect();
        let e = elementary_symmetric(&x);
        let diag = real_diag(&x);
        let mut alternating = 0.0;
        for q in 0..=n {
            let scale = 1.0 + e[q].abs();
            let minors = exterior_power_trace(&diag, q);
            let trace = trace_q_exp_omega(&a, u, q)?;
            let form_trace = form_factor(&a, u, q)?.trace();
            sym_err = sym_err
                .max((minors - c(e[q], 0.0)).norm() / scale)
                .max((trace - e[q]).abs() / scale)
                .max((form_trace - c(e[q], 0.0)).norm() / scale);
            alternating += if q % 2 == 0 { e[q] } else { -e[q] };
        }
        let product: f64 = x.iter().map(|xj| 1.0 - xj).product();
        sym_err = sym_err.max((alternating - product).abs() / (1.0 + product.abs()));
    }
    // series branch against direct evaluation across the switch window
    let mut series_err: f64 = 0.0;
    for u in [0.5, 1.0, 10.0, 200.0, 900.0] {
        for k in 0..200 {
            let a = ZERO_MODE_TOL * (SERIES_TOL / ZERO_MODE_TOL * 1.2).powf(k as f64 / 199.0) * 1.0001;
            for a in [a, -a] {
                let direct = mode_factor_direct(a, u);
                let g = 0.5 * a / (0.5 * u * a).tanh();
                let h = 0.5 * a / (0.5 * u * a).sinh();
                series_err = series_err
                    .max((mode_factor(a, u) - direct).abs() / direct.abs())
                    .max((gaussian_coefficient(a, u) - g).abs() / g.abs())
                    .max((gaussian_cross_coefficient(a, u) - h).abs() / h.abs());
            }
        }
    }
    // Mehler semigroup by quadrature
    let (s, t) = (0.4, 0.7);
    let mut semigroup_err: f64 = 0.0;
    for a in [0.5, 1.0, 2.0] {
        let ks = ModelPointData::new(vec![a], 1, s)?;
        let kt = ModelPointData::new(vec![a], 1, t)?;
        let kst = ModelPointData::new(vec![a], 1, s + t)?;
        let (x, y) = (c(0.3, -0.2), c(-0.1, 0.5));
        let (nodes, weights) = gauss_legendre_on(120, -7.0, 7.0);
        let mut total = c(0.0, 0.0);
        for (xi, wi) in nodes.iter().zip(&weights) {
            for (yj, wj) in nodes.iter().zip(&weights) {
                let z = c(*xi, *yj);
                let k1 = model_heat_kernel(&ks, None, 1, &[x], &[z], 0)?[(0, 0)];
                let k2 = model_heat_kernel(&kt, None, 1, &[z], &[y], 0)?[(0, 0)];
                total += k1 * k2 * wi * wj;
            }
        }
        let direct: C64 = model_heat_kernel(&kst, None, 1, &[x], &[y], 0)?[(0, 0)];
        semigroup_err = semigroup_err.max((total - direct).norm() / direct.norm());
    }
    // lattice counts
    let mut lattice_ok = true;
    for weights in [vec![1u64, 1], vec![1, 2], vec![2, 3], vec![3, 5], vec![1, 1, 1], vec![1, 2, 5]] {
        for p in 0..=500u64 {
            let brute = brute_force_h0(&weights, p);
            lattice_ok &= weighted_proj_h0(&weights, p as i64)? == brute;
            if let Some(h) = closed_form_h0(&weights, p as i64) {
                lattice_ok &= h == brute;
            }
        }
    }
    outcome(
        sym_err <= 1e-12 && series_err <= 1e-10 && semigroup_err <= 1e-4 && lattice_ok,
        format!(
            "symmetric {sym_err:.1e}, series {series_err:.1e}, semigroup {semigroup_err:.1e}, lattice {}",
            if lattice_ok { "exact" } else { "MISMATCH" }
        ),
    )
}

/// Moishezon verdicts and bigness against Kodaira rank.
fn criterion_9() -> Result<Outcome> {
    let p12 = build_and_check(&CatalogSpec::wps(vec![1, 2]), 64, 1e-8, 1e-6, 7)?;
    let flat = build_and_check(&CatalogSpec::torus(vec![0], 1), 16, 1e-8, 1e-6, 7)?;
    let verdicts_ok = p12.verdict == Verdict::MoishezonByI && flat.verdict == Verdict::Inconclusive;
    let entries: Vec<(CatalogSpec, u64, u64)> = vec![
        (CatalogSpec::wps(vec![1, 1]), 2000, 3),
        (CatalogSpec::wps(vec![1, 2]), 2000, 4),
        (CatalogSpec::wps(vec![2, 3]), 2000, 6),
        (CatalogSpec::wps(vec![1, 1, 1]), 2000, 3),
        (CatalogSpec::wps(vec![1, 2, 3]), 2000, 6),
        (CatalogSpec::Wps { weights: vec![1, 1], degree: 0, rank: 1 }, 2000, 3),
        (CatalogSpec::Wps { weights: vec![1, 1], degree: -1, rank: 1 }, 2000, 3),
        (CatalogSpec::torus(vec![1], 1), 400, 3),
        (CatalogSpec::torus(vec![1], 2), 400, 3),
        (CatalogSpec::torus(vec![0], 1), 400, 3),
        (CatalogSpec::torus(vec![1, 1], 2), 400, 3),
        (CatalogSpec::torus(vec![1, 0], 1), 400, 3),
    ];
    let mut disagreements = Vec::new();
    for (spec, p_tail, p_rank) in &entries {
        let a = bigness_vs_rank(spec, *p_tail, *p_rank, 7)?;
        if !a.agree {
            disagreements.push(format!("{spec:?}"));
        }
    }
    outcome(
        verdicts_ok && disagreements.is_empty(),
        format!(
            "P(1,2) {:?}, flat torus {:?}, bigness/rank agree on {}/{} entries",
            p12.verdict,
            flat.verdict,
            entries.len() - disagreements.len(),
            entries.len()
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Result<Outcome>); 9] = [
        ("exact trace chain on the torus quotient", criterion_1),
        ("strong Morse equality at q = n", criterion_2),
        ("orbifold Chern number of P(a,b)", criterion_3),
        ("regular-point kernel rate on C/Z_2", criterion_4),
        ("singular diagonal factor on C/Z_k", criterion_5),
        ("near-singular correction", criterion_6),
        ("u -> infinity limit", criterion_7),
        ("property suites", criterion_8),
        ("Moishezon verdicts and bigness", criterion_9),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (pass, detail) = match check() {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        failures += usize::from(!pass);
        println!(
            "criterion {}: {} - {name} ({detail}) [{:.2}s]",
            i + 1,
            if pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    }
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
