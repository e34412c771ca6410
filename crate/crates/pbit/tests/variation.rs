use pbit::device::{energy_barrier, GeometrySpec, PbitParams};
use pbit::seed::rng_for;
use pbit::variation::{build_population, perturb_geometry, VariationSpec};
use statrs::distribution::{ChiSquared, ContinuousCDF};

#[test]
fn direct_draws_are_uniform_by_chi_square() {
    let pop = build_population(20_000, PbitParams::default(), &VariationSpec::direct(2.0, 41)).unwrap();
    let bins = 20;
    let mut counts = vec![0f64; bins];
    for d in &pop.devices {
        counts[((d.eb / 2.0 * bins as f64) as usize).min(bins - 1)] += 1.0;
    }
    let expected = pop.len() as f64 / bins as f64;
    let chi2: f64 = counts.iter().map(|c| (c - expected).powi(2) / expected).sum();
    let p = 1.0 - ChiSquared::new((bins - 1) as f64).unwrap().cdf(chi2);
    assert!(p > 0.01, "chi2={chi2} p={p}");
    assert!(pop.max_eb() <= 2.0);
}

fn relative_std(spec: &VariationSpec, n: usize) -> f64 {
    let mut rng = rng_for(spec.seed, &[]);
    let draws: Vec<f64> = (0..n).map(|_| perturb_geometry(spec, &mut rng).unwrap()).collect();
    let mean = draws.iter().sum::<f64>() / n as f64;
    let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    var.sqrt() / mean
}

#[test]
fn anisotropy_spread_propagates_linearly() {
    let spec = VariationSpec::geometry(GeometrySpec::default(), 0.05, 0.0, 3);
    let rel = relative_std(&spec, 100_000);
    assert!((rel / 0.05 - 1.0).abs() < 0.02, "{rel}");
}

#[test]
fn diameter_spread_propagates_with_twice_the_weight() {
    let spec = VariationSpec::geometry(GeometrySpec::default(), 0.0, 0.02, 4);
    let rel = relative_std(&spec, 100_000);
    assert!((rel / 0.04 - 1.0).abs() < 0.03, "{rel}");
}

#[test]
fn widening_the_diameter_by_root_two_doubles_the_barrier() {
    let g = GeometrySpec::default();
    assert!((energy_barrier(&g) - 1.0).abs() < 1e-12);
    let wide = GeometrySpec { d: g.d * 2f64.sqrt(), ..g };
    assert!((energy_barrier(&wide) - 2.0).abs() < 1e-12);
}
