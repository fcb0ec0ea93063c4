//! Perfect-gas constitutive relations: `p = rho theta`, `e = c_v theta`,
//! `s = c_v log theta - log rho`, with `c_v = 1 / (gamma - 1)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GasLaw {
    gamma: f64,
    c_v: f64,
}

impl GasLaw {
    pub fn new(gamma: f64) -> Result<Self> {
        if !(gamma > 1.0) || !gamma.is_finite() {
            return Err(Error::config(format!("gamma must exceed 1, got {gamma}")));
        }
        Ok(GasLaw {
            gamma,
            c_v: 1.0 / (gamma - 1.0),
        })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn c_v(&self) -> f64 {
        self.c_v
    }
}

impl Default for GasLaw {
    fn default() -> Self {
        GasLaw::new(1.4).expect("1.4 is a valid adiabatic exponent")
    }
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::domain(format!("{name} must be positive, got {v}")))
    }
}

pub fn pressure(rho: f64, theta: f64) -> Result<f64> {
    Ok(positive("density", rho)? * positive("temperature", theta)?)
}

pub fn specific_entropy(rho: f64, theta: f64, law: &GasLaw) -> Result<f64> {
    let rho = positive("density", rho)?;
    let theta = positive("temperature", theta)?;
    Ok(law.c_v * theta.ln() - rho.ln())
}

/// Inverts `S = rho s(rho, theta)` for the temperature.
pub fn temperature_from_rho_s(rho: f64, total_entropy: f64, law: &GasLaw) -> Result<f64> {
    let rho = positive("density", rho)?;
    Ok(((total_entropy / rho + rho.ln()) / law.c_v).exp())
}

/// `E = rho |u|^2 / 2 + c_v rho theta`.
pub fn total_energy(rho: f64, u: [f64; 2], theta: f64, law: &GasLaw) -> Result<f64> {
    let rho = positive("density", rho)?;
    let theta = positive("temperature", theta)?;
    Ok(0.5 * rho * (u[0] * u[0] + u[1] * u[1]) + law.c_v * rho * theta)
}

/// Ballistic energy density `rho |u|^2 / 2 + rho e - Theta rho s` for a reference
/// temperature `big_theta`.
pub fn ballistic_energy(
    rho: f64,
    u: [f64; 2],
    theta: f64,
    big_theta: f64,
    law: &GasLaw,
) -> Result<f64> {
    let big_theta = positive("reference temperature", big_theta)?;
    let s = specific_entropy(rho, theta, law)?;
    Ok(total_energy(rho, u, theta, law)? - big_theta * rho * s)
}

/// Inputs of the Rayleigh number `Ra = |g| beta L^2 (theta_H - theta_L) / (kappa nu)` with
/// `beta = 1 / theta_M` and `nu = mu / rho_M`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RayleighInputs {
    pub g: f64,
    pub theta_mean: f64,
    pub theta_low: f64,
    pub theta_high: f64,
    pub length: f64,
    pub mu: f64,
    pub kappa: f64,
    pub rho_mean: f64,
}

impl RayleighInputs {
    /// Inputs for the `[-2, 2] x [-1, 1]` box (`L = 2`), `theta_M` the wall mean.
    pub fn for_walls(g: f64, theta_low: f64, theta_high: f64, mu: f64, kappa: f64) -> Self {
        RayleighInputs {
            g,
            theta_mean: 0.5 * (theta_low + theta_high),
            theta_low,
            theta_high,
            length: 2.0,
            mu,
            kappa,
            rho_mean: 1.2,
        }
    }
}

pub fn rayleigh_number(inp: &RayleighInputs) -> Result<f64> {
    let kappa = positive("kappa", inp.kappa)?;
    let mu = positive("mu", inp.mu)?;
    let rho_mean = positive("mean density", inp.rho_mean)?;
    let theta_mean = positive("mean temperature", inp.theta_mean)?;
    let length = positive("length", inp.length)?;
    let beta = 1.0 / theta_mean;
    let nu = mu / rho_mean;
    Ok(inp.g.abs() * beta * length * length * (inp.theta_high - inp.theta_low) / (kappa * nu))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn air() -> GasLaw {
        GasLaw::new(1.4).unwrap()
    }

    #[test]
    fn gas_law() {
        let law = air();
        assert_relative_eq!(law.c_v(), 2.5, max_relative = 1e-15);
        assert_relative_eq!(law.c_v() * (law.gamma() - 1.0), 1.0, max_relative = 1e-15);
        assert!(GasLaw::new(1.0).is_err());
        assert!(GasLaw::new(0.9).is_err());
    }

    #[test]
    fn pressure_values() {
        assert_eq!(pressure(1.0, 1.0).unwrap(), 1.0);
        assert_relative_eq!(pressure(1.2, 8.0).unwrap(), 9.6, max_relative = 1e-15);
        assert_eq!(pressure(2.0, 0.5).unwrap(), 1.0);
        assert!(matches!(pressure(0.0, 1.0), Err(Error::Domain(_))));
        assert!(pressure(1.0, -1.0).is_err());
    }

    #[test]
    fn entropy_values() {
        let law = air();
        assert_eq!(specific_entropy(1.0, 1.0, &law).unwrap(), 0.0);
        assert_relative_eq!(
            specific_entropy((-1.0f64).exp(), 1.0, &law).unwrap(),
            1.0,
            max_relative = 1e-15
        );
        let s = specific_entropy(1.2, 8.0, &law).unwrap();
        assert_relative_eq!(s, 2.5 * 8f64.ln() - 1.2f64.ln(), max_relative = 1e-15);
        assert!((s - 5.0163).abs() < 1e-3);
    }

    #[test]
    fn temperature_inverse() {
        let law = air();
        assert_relative_eq!(temperature_from_rho_s(1.0, 0.0, &law).unwrap(), 1.0);
        let s = specific_entropy(1.2, 8.0, &law).unwrap();
        assert_relative_eq!(
            temperature_from_rho_s(1.2, 1.2 * s, &law).unwrap(),
            8.0,
            max_relative = 1e-14
        );
        let s = specific_entropy(2.0, 3.0, &law).unwrap();
        assert_relative_eq!(
            temperature_from_rho_s(2.0, 2.0 * s, &law).unwrap(),
            3.0,
            max_relative = 1e-14
        );
        assert!(temperature_from_rho_s(0.0, 1.0, &law).is_err());
    }

    #[test]
    fn energies() {
        let law = air();
        assert_relative_eq!(total_energy(1.0, [0.0, 0.0], 1.0, &law).unwrap(), 2.5);
        assert_relative_eq!(total_energy(2.0, [1.0, 0.0], 1.0, &law).unwrap(), 6.0);
        assert!(total_energy(1.0, [0.0, 0.0], 1e-12, &law).unwrap() < 1e-11);
        assert_relative_eq!(ballistic_energy(1.0, [0.0; 2], 1.0, 1.0, &law).unwrap(), 2.5);
        assert_relative_eq!(ballistic_energy(1.0, [0.0; 2], 1.0, 2.0, &law).unwrap(), 2.5);
        let e = (-1.0f64).exp();
        let be = ballistic_energy(e, [0.0; 2], 1.0, 1.0, &law).unwrap();
        assert_relative_eq!(be, 1.5 * e, max_relative = 1e-14);
        assert!((be - 0.5518).abs() < 1e-4);
    }

    #[test]
    fn rayleigh_experiment_two() {
        let ra = rayleigh_number(&RayleighInputs::for_walls(-10.0, 1.0, 15.0, 0.1, 0.01)).unwrap();
        assert_relative_eq!(ra, 84_000.0, max_relative = 1e-12);
        let bad = RayleighInputs {
            kappa: 0.0,
            ..RayleighInputs::for_walls(-10.0, 1.0, 15.0, 0.1, 0.01)
        };
        assert!(rayleigh_number(&bad).is_err());
    }

    proptest! {
        #[test]
        fn entropy_round_trip(rho in 0.1f64..100.0, theta in 0.1f64..100.0) {
            let law = air();
            let s = specific_entropy(rho, theta, &law).unwrap();
            let back = temperature_from_rho_s(rho, rho * s, &law).unwrap();
            prop_assert!((back - theta).abs() <= 1e-12 * theta);
        }

        #[test]
        fn gibbs_relation(rho in 0.2f64..20.0, theta in 0.2f64..20.0) {
            // theta ds = de + p d(1/rho), checked by central differences
            let law = air();
            let d = 1e-6;
            let s = |r: f64, t: f64| specific_entropy(r, t, &law).unwrap();
            let e = |_r: f64, t: f64| law.c_v() * t;
            let p = rho * theta;
            let ds_dt = (s(rho, theta + d) - s(rho, theta - d)) / (2.0 * d);
            let de_dt = (e(rho, theta + d) - e(rho, theta - d)) / (2.0 * d);
            prop_assert!((theta * ds_dt - de_dt).abs() <= 1e-6 * de_dt.abs().max(1.0));
            let ds_dr = (s(rho + d, theta) - s(rho - d, theta)) / (2.0 * d);
            let de_dr = (e(rho + d, theta) - e(rho - d, theta)) / (2.0 * d);
            let rhs = de_dr - p / (rho * rho);
            prop_assert!((theta * ds_dr - rhs).abs() <= 1e-6 * rhs.abs().max(1.0));
        }

        #[test]
        fn rayleigh_is_linear_in_gravity(c in 0.1f64..50.0) {
            let base = RayleighInputs::for_walls(-10.0, 1.0, 15.0, 0.1, 0.01);
            let scaled = RayleighInputs { g: c * base.g, ..base };
            let r0 = rayleigh_number(&base).unwrap();
            let r1 = rayleigh_number(&scaled).unwrap();
            prop_assert!((r1 - c * r0).abs() <= 1e-12 * r1);
        }
    }
}
