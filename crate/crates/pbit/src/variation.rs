//! Process-variation populations.
//!
//! Two ways to perturb a device's energy barrier:
//!
//! * [`VariationMode::DirectBarrier`]: each device gets a barrier drawn
//!   uniformly from `[0, eb_max]`. This is the mode the DBN experiments use.
//! * [`VariationMode::Geometry`]: the anisotropy field and free-layer
//!   diameter get Gaussian fractional perturbations and the barrier is
//!   recomputed from the geometry. `H_K` enters the barrier linearly and `d`
//!   quadratically, so a fractional spread `σ_d` shows up as roughly `2σ_d`.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::device::{energy_barrier, GeometrySpec, PbitParams};
use crate::seed::{derive_seed, rng_from_seed};
use crate::{Error, Result};

/// Gaussian draws are rejected below this fraction of the nominal value.
pub const TRUNCATION_FLOOR: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VariationMode {
    DirectBarrier,
    Geometry,
}

impl VariationMode {
    fn name(self) -> &'static str {
        match self {
            VariationMode::DirectBarrier => "DirectBarrier",
            VariationMode::Geometry => "Geometry",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VariationSpec {
    pub mode: VariationMode,
    /// Upper end of the uniform barrier draw, kT.
    pub eb_max: f64,
    /// Fractional standard deviation of `H_K`.
    pub sigma_hk: f64,
    /// Fractional standard deviation of the diameter.
    pub sigma_d: f64,
    pub nominal_geometry: GeometrySpec,
    pub seed: u64,
}

impl VariationSpec {
    pub fn direct(eb_max: f64, seed: u64) -> Self {
        Self {
            mode: VariationMode::DirectBarrier,
            eb_max,
            sigma_hk: 0.0,
            sigma_d: 0.0,
            nominal_geometry: GeometrySpec::default(),
            seed,
        }
    }

    pub fn geometry(nominal: GeometrySpec, sigma_hk: f64, sigma_d: f64, seed: u64) -> Self {
        Self {
            mode: VariationMode::Geometry,
            eb_max: 0.0,
            sigma_hk,
            sigma_d,
            nominal_geometry: nominal,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eb_max.is_finite() && self.eb_max >= 0.0) {
            return Err(Error::InvalidParams(format!("eb_max must be >= 0, got {}", self.eb_max)));
        }
        for (name, s) in [("sigma_hk", self.sigma_hk), ("sigma_d", self.sigma_d)] {
            if !(s.is_finite() && s >= 0.0) {
                return Err(Error::InvalidParams(format!("{name} must be >= 0, got {s}")));
            }
        }
        if self.mode == VariationMode::Geometry {
            self.nominal_geometry.validate()?;
        }
        Ok(())
    }

    fn require(&self, mode: VariationMode) -> Result<()> {
        if self.mode == mode {
            Ok(())
        } else {
            Err(Error::WrongMode {
                expected: mode.name(),
                actual: self.mode.name(),
            })
        }
    }
}

/// Uniform barrier in `[0, eb_max]`.
pub fn draw_barrier<R: Rng + ?Sized>(spec: &VariationSpec, rng: &mut R) -> Result<f64> {
    spec.require(VariationMode::DirectBarrier)?;
    if spec.eb_max == 0.0 {
        return Ok(0.0);
    }
    Ok(rng.random_range(0.0..=spec.eb_max))
}

/// Barrier of a geometry with perturbed `H_K` and diameter.
pub fn perturb_geometry<R: Rng + ?Sized>(spec: &VariationSpec, rng: &mut R) -> Result<f64> {
    spec.require(VariationMode::Geometry)?;
    let nominal = spec.nominal_geometry;
    let geom = GeometrySpec {
        h_k: nominal.h_k * truncated_factor(spec.sigma_hk, rng),
        d: nominal.d * truncated_factor(spec.sigma_d, rng),
        ..nominal
    };
    Ok(energy_barrier(&geom))
}

fn truncated_factor<R: Rng + ?Sized>(sigma: f64, rng: &mut R) -> f64 {
    if sigma == 0.0 {
        return 1.0;
    }
    loop {
        let z: f64 = StandardNormal.sample(rng);
        let f = 1.0 + sigma * z;
        if f >= TRUNCATION_FLOOR {
            return f;
        }
    }
}

/// A concrete set of devices drawn from a [`VariationSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct DevicePopulation {
    pub devices: Vec<PbitParams>,
    pub spec: VariationSpec,
}

impl DevicePopulation {
    /// `n` identical copies of `template`.
    pub fn uniform(n: usize, template: PbitParams) -> Self {
        Self {
            devices: vec![template; n],
            spec: VariationSpec::direct(template.eb, 0),
        }
    }

    pub fn len(&self) -> usize {
        self.devices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.devices.is_empty()
    }

    pub fn max_eb(&self) -> f64 {
        self.devices.iter().map(|d| d.eb).fold(0.0, f64::max)
    }
}

/// Seed of device `index` in a population built from `spec`.
pub fn device_seed(spec: &VariationSpec, index: usize) -> u64 {
    derive_seed(spec.seed, &[index as u64])
}

/// Builds `n` devices from `template`, replacing each barrier with an
/// independent draw. Device `i` uses its own counter-derived stream, so
/// device `i` is the same regardless of `n` or build order.
pub fn build_population(n: usize, template: PbitParams, spec: &VariationSpec) -> Result<DevicePopulation> {
    if n == 0 {
        return Err(Error::InvalidParams("population size must be > 0".into()));
    }
    spec.validate()?;
    template.validate()?;
    let devices = (0..n)
        .map(|i| {
            let mut rng = rng_from_seed(device_seed(spec, i));
            let eb = match spec.mode {
                VariationMode::DirectBarrier => draw_barrier(spec, &mut rng),
                VariationMode::Geometry => perturb_geometry(spec, &mut rng),
            }?;
            Ok(template.with_eb(eb))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DevicePopulation { devices, spec: *spec })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from_seed;
    use approx::assert_relative_eq;
    use std::collections::HashSet;

    #[test]
    fn zero_range_always_draws_zero() {
        let spec = VariationSpec::direct(0.0, 3);
        let mut rng = rng_from_seed(1);
        assert!((0..1000).all(|_| draw_barrier(&spec, &mut rng).unwrap() == 0.0));
    }

    #[test]
    fn uniform_draws_stay_in_range_with_the_right_mean() {
        let spec = VariationSpec::direct(2.0, 3);
        let mut rng = rng_from_seed(5);
        let draws: Vec<f64> = (0..100_000).map(|_| draw_barrier(&spec, &mut rng).unwrap()).collect();
        assert!(draws.iter().all(|&x| (0.0..=2.0).contains(&x)));
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        assert!((mean - 1.0).abs() < 0.01, "{mean}");
    }

    #[test]
    fn modes_are_enforced() {
        let direct = VariationSpec::direct(1.0, 0);
        let geom = VariationSpec::geometry(GeometrySpec::default(), 0.1, 0.1, 0);
        let mut rng = rng_from_seed(0);
        assert!(matches!(perturb_geometry(&direct, &mut rng), Err(Error::WrongMode { .. })));
        assert!(matches!(draw_barrier(&geom, &mut rng), Err(Error::WrongMode { .. })));
    }

    #[test]
    fn zero_sigma_geometry_is_nominal() {
        let nominal = GeometrySpec::with_barrier(1.3, 8e5, 25.0, 1.2, 300.0);
        let spec = VariationSpec::geometry(nominal, 0.0, 0.0, 9);
        let mut rng = rng_from_seed(0);
        assert_eq!(perturb_geometry(&spec, &mut rng).unwrap(), energy_barrier(&nominal));
    }

    #[test]
    fn barrier_sensitivities_match_finite_differences() {
        let g = GeometrySpec::default();
        let eb = energy_barrier(&g);
        let h = 1e-6;
        let d_hk = (energy_barrier(&GeometrySpec { h_k: g.h_k * (1.0 + h), ..g })
            - energy_barrier(&GeometrySpec { h_k: g.h_k * (1.0 - h), ..g }))
            / (2.0 * h * g.h_k);
        assert_relative_eq!(d_hk, eb / g.h_k, max_relative = 1e-6);
        let d_d = (energy_barrier(&GeometrySpec { d: g.d * (1.0 + h), ..g })
            - energy_barrier(&GeometrySpec { d: g.d * (1.0 - h), ..g }))
            / (2.0 * h * g.d);
        assert_relative_eq!(d_d, 2.0 * eb / g.d, max_relative = 1e-6);
    }

    #[test]
    fn single_device_zero_variation_is_the_template() {
        let template = PbitParams::default();
        let pop = build_population(1, template, &VariationSpec::direct(0.0, 1)).unwrap();
        assert_eq!(pop.devices, vec![template]);
    }

    #[test]
    fn populations_are_reproducible_and_prefix_stable() {
        let spec = VariationSpec::direct(2.0, 77);
        let t = PbitParams::default();
        let a = build_population(210, t, &spec).unwrap();
        assert_eq!(a, build_population(210, t, &spec).unwrap());
        let b = build_population(50, t, &spec).unwrap();
        assert_eq!(&a.devices[..50], &b.devices[..]);
        let seeds: HashSet<u64> = (0..210).map(|i| device_seed(&spec, i)).collect();
        assert_eq!(seeds.len(), 210);
        assert!(a.devices.iter().all(|d| d.eb >= 0.0 && d.eb <= 2.0));
    }

    #[test]
    fn empty_population_is_rejected() {
        assert!(build_population(0, PbitParams::default(), &VariationSpec::direct(1.0, 0)).is_err());
    }
}
