//! Energy functions. The chain only ever needs `q(S_n) / q(S_o)` with
//! `q = exp(-E)`, so the normalizing constant is never formed.

use serde::{Deserialize, Serialize};

use crate::lattice::Lattice;
use crate::state::{contacts_with_others, Polymer, SystemState};

pub trait Energy {
    fn energy(&self, lattice: &Lattice, state: &SystemState) -> f64;

    /// `ln q(S_n) - ln q(S_o)` where `S_o` and `S_n` are `rest` plus `old` and
    /// `new` respectively. `rest` has one vacant slot.
    fn ln_q_ratio(&self, lattice: &Lattice, rest: &SystemState, old: &Polymer, new: &Polymer) -> f64 {
        let with = |c: &Polymer| {
            let mut s = rest.clone();
            s.insert_polymer(c.clone()).expect("polymer fits the vacant slot");
            self.energy(lattice, &s)
        };
        with(old) - with(new)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum EnergyModel {
    /// `E = 0`.
    #[default]
    Uniform,
    /// `E = -epsilon * (number of nearest-neighbor vertex pairs held by
    /// distinct polymers)`.
    Contact { epsilon: f64 },
}

impl Energy for EnergyModel {
    fn energy(&self, lattice: &Lattice, state: &SystemState) -> f64 {
        match self {
            EnergyModel::Uniform => 0.0,
            EnergyModel::Contact { epsilon } => -epsilon * state.contact_count(lattice) as f64,
        }
    }

    fn ln_q_ratio(&self, lattice: &Lattice, rest: &SystemState, old: &Polymer, new: &Polymer) -> f64 {
        match self {
            EnergyModel::Uniform => 0.0,
            EnergyModel::Contact { epsilon } => {
                let occ = rest.occupancy();
                let c_old = contacts_with_others(lattice, occ, old, None);
                let c_new = contacts_with_others(lattice, occ, new, None);
                epsilon * (c_new as f64 - c_old as f64)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::boxed_initial_state;

    struct Shifted(EnergyModel);

    impl Energy for Shifted {
        fn energy(&self, lattice: &Lattice, state: &SystemState) -> f64 {
            self.0.energy(lattice, state) + 17.0
        }
    }

    #[test]
    fn contact_ratio_matches_full_energies() {
        let lat = Lattice::with_shape(2, 5).unwrap();
        let mut state = boxed_initial_state(&lat, 3, 4).unwrap();
        let old = state.remove_polymer(1).unwrap();
        let new = Polymer::new(
            [[3, 0], [3, 1], [3, 2], [3, 3]]
                .iter()
                .map(|c| lat.to_index(c).unwrap())
                .collect(),
        );
        let model = EnergyModel::Contact { epsilon: 0.7 };
        let fast = model.ln_q_ratio(&lat, &state, &old, &new);
        let slow = Shifted(model).ln_q_ratio(&lat, &state, &old, &new);
        assert!((fast - slow).abs() < 1e-12, "{fast} vs {slow}");
        assert_eq!(EnergyModel::Uniform.ln_q_ratio(&lat, &state, &old, &new), 0.0);
    }

    #[test]
    fn json_forms() {
        let m: EnergyModel = serde_json::from_str("\"uniform\"").unwrap();
        assert_eq!(m, EnergyModel::Uniform);
        let m: EnergyModel = serde_json::from_str(r#"{"contact":{"epsilon":0.5}}"#).unwrap();
        assert_eq!(m, EnergyModel::Contact { epsilon: 0.5 });
        assert!(serde_json::from_str::<EnergyModel>(r#"{"contact":{"eps":0.5}}"#).is_err());
    }
}
