//! Named example states used throughout the tests and the CLI.

use super::spec::StateSpec;
use super::{build, PolarizationState};
use crate::error::{Error, Result};

pub const MENAGERIE_NAMES: &[&str] = &[
    "h2",
    "hv",
    "unpolarized2",
    "h2v2_mixture",
    "h3",
    "nn2",
    "unpolarized3",
    "identity4",
    "second_order_unpolarized3",
    "noon3_mixture",
    "noon3",
    "peanut3",
    "stokes_x3",
    "tilted3",
    "unpolarized4",
    "coherent4_tilted",
];

/// `(name, spec)` for every named state.
pub fn menagerie() -> Vec<(&'static str, StateSpec)> {
    MENAGERIE_NAMES.iter().map(|&name| (name, spec_for(name).expect("listed name"))).collect()
}

pub fn named_state(name: &str) -> Result<PolarizationState> {
    build(&spec_for(name).ok_or_else(|| Error::InvalidSpec(format!("unknown named state `{name}`")))?)
}

fn spec_for(name: &str) -> Option<StateSpec> {
    let inv_sqrt6 = 1.0 / 6f64.sqrt();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    Some(match name {
        // |2,0>
        "h2" => StateSpec::Fock { h: 2, v: 0 },
        // |1,1>
        "hv" => StateSpec::Nn { n: 1 },
        "unpolarized2" => StateSpec::Unpolarized { n: 2 },
        // (|2,0><2,0| + |0,2><0,2|) / 2
        "h2v2_mixture" => StateSpec::basis_mixture(2, &[(2, 0.5), (0, 0.5)]),
        "h3" => StateSpec::Fock { h: 3, v: 0 },
        // |2,2>
        "nn2" => StateSpec::Nn { n: 2 },
        "unpolarized3" => StateSpec::Unpolarized { n: 3 },
        "identity4" => StateSpec::Unpolarized { n: 3 },
        // 1/3 |3,0> + 1/2 |1,2> + 1/6 |0,3>
        "second_order_unpolarized3" => StateSpec::basis_mixture(3, &[(3, 1.0 / 3.0), (1, 0.5), (0, 1.0 / 6.0)]),
        // (|3,0><3,0| + |0,3><0,3|) / 2
        "noon3_mixture" => StateSpec::basis_mixture(3, &[(3, 0.5), (0, 0.5)]),
        // (|3,0> + |0,3>) / sqrt 2
        "noon3" => StateSpec::Pure { n: 3, amplitudes: vec![[h, 0.0], [0.0, 0.0], [0.0, 0.0], [h, 0.0]] },
        // 7/18 |3,0> + 1/3 |1,2> + 5/18 |0,3>
        "peanut3" => StateSpec::basis_mixture(3, &[(3, 7.0 / 18.0), (1, 1.0 / 3.0), (0, 5.0 / 18.0)]),
        // 19/36 |3,0> + 15/36 |1,2> + 1/18 |0,3>
        "stokes_x3" => StateSpec::basis_mixture(3, &[(3, 19.0 / 36.0), (1, 15.0 / 36.0), (0, 1.0 / 18.0)]),
        // (1/2 + 6^-1/2) |3,0> + (1/2 - 6^-1/2) |0,3>
        "tilted3" => StateSpec::basis_mixture(3, &[(3, 0.5 + inv_sqrt6), (0, 0.5 - inv_sqrt6)]),
        "unpolarized4" => StateSpec::Unpolarized { n: 4 },
        "coherent4_tilted" => StateSpec::Su2Coherent { n: 4, theta: 0.9, phi: 2.2 },
        _ => return None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_named_state_builds() {
        for (name, _) in menagerie() {
            let s = named_state(name).unwrap();
            assert!((s.total_weight() - 1.0).abs() < 1e-12, "{name}");
        }
        assert!(named_state("nope").is_err());
    }
}
