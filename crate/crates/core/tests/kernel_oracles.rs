use orbimorse::catalog::CatalogSpec;
use orbimorse::linalg::c;
use orbimorse::spectral::spectral_diagonal_kernel;
use orbimorse::verify::torus_image_sum_diagonal;

#[test]
fn image_sum_matches_spectral_kernel_on_torus_quotient() {
    let spec = CatalogSpec::torus(vec![1], 2);
    for (p, u) in [(2u64, 1.0), (3, 0.5), (4, 1.0)] {
        for z in [c(0.13, 0.37), c(0.5, 0.21), c(0.0, 0.0), c(0.71, 0.9)] {
            let spectral = spectral_diagonal_kernel(&spec, p, u, &[z], 64).unwrap();
            let images = torus_image_sum_diagonal(&spec, u, p, &[z], 0).unwrap();
            let rel = (spectral - images).abs() / images.abs();
            assert!(rel < 1e-4, "p={p} u={u} z={z}: spectral {spectral} images {images}");
        }
    }
}

#[test]
fn image_sum_matches_spectral_kernel_on_product_torus() {
    for k in [1u32, 2] {
        let spec = CatalogSpec::torus(vec![1, 2], k);
        let z = [c(0.2, 0.3), c(0.45, 0.1)];
        let spectral = spectral_diagonal_kernel(&spec, 2, 1.0, &z, 64).unwrap();
        let images = torus_image_sum_diagonal(&spec, 1.0, 2, &z, 0).unwrap();
        assert!((spectral - images).abs() / images < 1e-4, "k={k}: {spectral} vs {images}");
    }
}

#[test]
fn integrated_kernel_is_the_heat_trace() {
    // the quotient heat trace is half the integral of the diagonal over the
    // unit cell
    use orbimorse::spectral::{assemble_kodaira_laplacian, heat_trace};
    let spec = CatalogSpec::torus(vec![1], 2);
    let (p, u) = (3u64, 0.7);
    // the diagonal is smooth and periodic, so the trapezoid rule converges
    // geometrically
    let m = 32;
    let h = 1.0 / m as f64;
    let mut total = 0.0;
    for i in 0..m {
        for j in 0..m {
            let z = c(i as f64 * h, j as f64 * h);
            total += h * h * torus_image_sum_diagonal(&spec, u, p, &[z], 0).unwrap();
        }
    }
    let table = assemble_kodaira_laplacian(&spec, p, 0, 64).unwrap().spectral_table();
    let trace = heat_trace(&table, u).unwrap();
    assert!((0.5 * total - trace).abs() < 1e-8 * trace, "{} vs {trace}", 0.5 * total);
}
