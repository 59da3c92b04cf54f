use orbimorse::cohomology::{
    closed_form_h0, coin_change_h0, density_error, enumerate_h0, euler_quasi_polynomial_check,
    weighted_proj_h0,
};

/// Independent oracle: nested loops over every multiplicity vector.
fn brute(weights: &[u64], d: u64) -> u64 {
    fn go(w: &[u64], rest: u64) -> u64 {
        match w {
            [] => u64::from(rest == 0),
            [a, tail @ ..] => (0..=rest / a).map(|m| go(tail, rest - m * a)).sum(),
        }
    }
    go(weights, d)
}

#[test]
fn closed_forms_equal_brute_force_up_to_500() {
    for w in [vec![1u64, 1], vec![1, 2], vec![2, 3], vec![3, 5], vec![1, 1, 1], vec![1, 2, 5]] {
        for p in 0..=500u64 {
            let expected = brute(&w, p);
            if let Some(closed) = closed_form_h0(&w, p as i64) {
                assert_eq!(closed, expected, "{w:?} p={p}");
            }
            assert_eq!(enumerate_h0(&w, p).unwrap(), expected, "{w:?} p={p}");
            assert_eq!(weighted_proj_h0(&w, p as i64).unwrap(), expected, "{w:?} p={p}");
        }
    }
}

#[test]
fn recurrence_matches_enumeration() {
    for w in [vec![1u64, 2, 3], vec![2, 3, 7], vec![1, 4, 9]] {
        for p in (0..=600u64).step_by(7) {
            assert_eq!(coin_change_h0(&w, p).unwrap(), enumerate_h0(&w, p).unwrap());
            assert_eq!(coin_change_h0(&w, p).unwrap(), brute(&w, p));
        }
    }
}

#[test]
fn asymptotic_density() {
    for w in [vec![1u64, 1], vec![1, 2], vec![2, 3], vec![1, 1, 1], vec![1, 2, 3]] {
        let n = (w.len() - 1) as f64;
        for p in [1_000u64, 10_000] {
            let err = density_error(&w, p).unwrap();
            assert!(err <= (1.0 + 1e-9) * n * (w.iter().sum::<u64>() as f64) / p as f64, "{w:?} p={p} err={err}");
        }
    }
}

#[test]
fn euler_characteristic_is_quasi_polynomial() {
    for w in [vec![1u64, 1], vec![1, 2], vec![2, 3], vec![1, 2, 3], vec![1, 1, 1]] {
        assert!(euler_quasi_polynomial_check(&w, 0).unwrap(), "{w:?}");
        assert!(euler_quasi_polynomial_check(&w, -20).unwrap(), "{w:?}");
    }
}
