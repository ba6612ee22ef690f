//! Two-threshold relay: a ±1 memory operator that switches up when its input
//! reaches `beta`, down when it reaches `alpha`, and otherwise keeps its state.

use std::fmt;

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Lower and upper switching levels, `alpha < beta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    alpha: f64,
    beta: f64,
}

impl Thresholds {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha.is_finite() && beta.is_finite()) || alpha >= beta {
            return Err(Error::InvalidThresholds { alpha, beta });
        }
        Ok(Thresholds { alpha, beta })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Midpoint of the band `]alpha, beta[`.
    pub fn mid(&self) -> f64 {
        0.5 * (self.alpha + self.beta)
    }

    pub fn width(&self) -> f64 {
        self.beta - self.alpha
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RelayState {
    Minus,
    Plus,
}

impl RelayState {
    pub fn value(self) -> f64 {
        match self {
            RelayState::Minus => -1.0,
            RelayState::Plus => 1.0,
        }
    }

    pub fn as_i8(self) -> i8 {
        match self {
            RelayState::Minus => -1,
            RelayState::Plus => 1,
        }
    }

    /// Accepts exactly `-1.0` or `1.0`.
    pub fn from_value(v: f64) -> Result<Self> {
        if v == 1.0 {
            Ok(RelayState::Plus)
        } else if v == -1.0 {
            Ok(RelayState::Minus)
        } else {
            Err(Error::InvalidRelayValue(v))
        }
    }
}

impl fmt::Display for RelayState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_i8())
    }
}

/// Initial relay state. Outside the band the value is forced by `u0`; inside
/// it the prescribed branch `hint` is used.
pub fn relay_init(u0: f64, hint: RelayState, th: Thresholds) -> RelayState {
    if u0 <= th.alpha {
        RelayState::Minus
    } else if u0 >= th.beta {
        RelayState::Plus
    } else {
        hint
    }
}

/// One relay update. Threshold comparisons are closed: landing exactly on
/// `alpha` gives `Minus`, exactly on `beta` gives `Plus`.
pub fn relay_step(prev: RelayState, u_new: f64, th: Thresholds) -> RelayState {
    if u_new >= th.beta {
        RelayState::Plus
    } else if u_new <= th.alpha {
        RelayState::Minus
    } else {
        prev
    }
}

/// Left fold of [`relay_step`] along a sampled trajectory.
pub fn relay_trace(u_samples: &[f64], h0: RelayState, th: Thresholds) -> Vec<RelayState> {
    u_samples
        .iter()
        .scan(h0, |state, &u| {
            *state = relay_step(*state, u, th);
            Some(*state)
        })
        .collect()
}

/// Relay states over the points of a spatial grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HysteresisField {
    states: Vec<RelayState>,
}

impl HysteresisField {
    pub fn new(states: Vec<RelayState>) -> Self {
        HysteresisField { states }
    }

    pub fn uniform(len: usize, state: RelayState) -> Self {
        HysteresisField {
            states: vec![state; len],
        }
    }

    /// Pointwise [`relay_init`] with a per-point hint.
    pub fn init(u0: &[f64], hints: &[RelayState], th: Thresholds) -> Result<Self> {
        if u0.len() != hints.len() {
            return Err(Error::ShapeMismatch {
                expected: u0.len(),
                got: hints.len(),
            });
        }
        Ok(HysteresisField {
            states: u0
                .iter()
                .zip(hints)
                .map(|(&u, &hint)| relay_init(u, hint, th))
                .collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[RelayState] {
        &self.states
    }

    pub fn get(&self, i: usize) -> RelayState {
        self.states[i]
    }

    pub fn values(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.value()).collect()
    }
}

/// Pointwise [`relay_step`]; no spatial coupling.
pub fn field_update(
    prev: &HysteresisField,
    u_new: &[f64],
    th: Thresholds,
) -> Result<HysteresisField> {
    if prev.len() != u_new.len() {
        return Err(Error::ShapeMismatch {
            expected: prev.len(),
            got: u_new.len(),
        });
    }
    let states = prev
        .states
        .par_iter()
        .zip(u_new.par_iter())
        .map(|(&h, &u)| relay_step(h, u, th))
        .collect();
    Ok(HysteresisField { states })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use RelayState::{Minus, Plus};

    fn unit() -> Thresholds {
        Thresholds::new(0.0, 1.0).unwrap()
    }

    #[test]
    fn thresholds_reject_inverted_or_equal() {
        assert!(Thresholds::new(1.0, 0.0).is_err());
        assert!(Thresholds::new(0.5, 0.5).is_err());
        assert!(Thresholds::new(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn init_forces_state_outside_band() {
        assert_eq!(relay_init(-1.0, Plus, unit()), Minus);
        assert_eq!(relay_init(1.0, Minus, unit()), Plus);
        assert_eq!(relay_init(0.5, Minus, unit()), Minus);
        assert_eq!(relay_init(0.5, Plus, unit()), Plus);
    }

    #[test]
    fn step_examples() {
        assert_eq!(relay_step(Minus, 1.0, unit()), Plus);
        assert_eq!(relay_step(Plus, 0.5, unit()), Plus);
        assert_eq!(relay_step(Minus, 0.5, unit()), Minus);
        assert_eq!(relay_step(Plus, 0.0, unit()), Minus);
        // saturated value even when it repeats the previous state
        assert_eq!(relay_step(Minus, 0.0, unit()), Minus);
    }

    #[test]
    fn trace_examples() {
        let out = relay_trace(&[0.5, 1.0, 0.5, 0.0, 0.5], Minus, unit());
        assert_eq!(out, vec![Minus, Plus, Plus, Minus, Minus]);
        assert_eq!(relay_trace(&[0.3; 6], Plus, unit()), vec![Plus; 6]);
        assert_eq!(relay_trace(&[2.0], Minus, unit()), vec![Plus]);
    }

    #[test]
    fn field_update_examples() {
        let th = unit();
        let all_minus = HysteresisField::uniform(5, Minus);
        let up = field_update(&all_minus, &[1.0; 5], th).unwrap();
        assert_eq!(up, HysteresisField::uniform(5, Plus));

        let mixed = HysteresisField::new(vec![Minus, Plus, Plus, Minus]);
        assert_eq!(
            field_update(&mixed, &[0.2, 0.4, 0.6, 0.8], th).unwrap(),
            mixed
        );

        let all_plus = HysteresisField::uniform(4, Plus);
        let after = field_update(&all_plus, &[0.5, -0.1, 0.5, 0.9], th).unwrap();
        let flips = after
            .states()
            .iter()
            .zip(all_plus.states())
            .filter(|(a, b)| a != b)
            .count();
        assert_eq!(flips, 1);
        assert_eq!(after.get(1), Minus);

        assert!(field_update(&all_plus, &[0.5; 3], th).is_err());
    }

    #[test]
    fn relay_value_roundtrip() {
        assert_eq!(RelayState::from_value(1.0).unwrap(), Plus);
        assert_eq!(RelayState::from_value(-1.0).unwrap(), Minus);
        assert!(RelayState::from_value(0.0).is_err());
    }

    fn state() -> impl Strategy<Value = RelayState> {
        prop_oneof![Just(Minus), Just(Plus)]
    }

    proptest! {
        #[test]
        fn trace_depends_only_on_order(
            samples in prop::collection::vec(-1.0f64..2.0, 1..40),
            repeats in prop::collection::vec(1usize..4, 40),
            h0 in state(),
        ) {
            // Stretching the sequence (repeating samples) is an order-preserving
            // reparametrization; the output must be the stretched original output.
            let th = unit();
            let base = relay_trace(&samples, h0, th);
            let mut stretched = Vec::new();
            let mut expected = Vec::new();
            for (i, &s) in samples.iter().enumerate() {
                for _ in 0..repeats[i] {
                    stretched.push(s);
                    expected.push(base[i]);
                }
            }
            prop_assert_eq!(relay_trace(&stretched, h0, th), expected);
        }

        #[test]
        fn jumps_need_threshold_attainment(
            samples in prop::collection::vec(-1.0f64..2.0, 1..60),
            h0 in state(),
        ) {
            let th = unit();
            let out = relay_trace(&samples, h0, th);
            let mut prev = h0;
            for (k, &s) in out.iter().enumerate() {
                if prev == Plus && s == Minus {
                    prop_assert!(samples[k] <= th.alpha());
                }
                if prev == Minus && s == Plus {
                    prop_assert!(samples[k] >= th.beta());
                }
                prev = s;
            }
        }

        #[test]
        fn saturation_is_sticky(
            head in prop::collection::vec(-1.0f64..2.0, 0..20),
            tail in prop::collection::vec(1.0f64..3.0, 1..20),
            h0 in state(),
        ) {
            let th = unit();
            let mut samples = head.clone();
            samples.extend(&tail);
            let out = relay_trace(&samples, h0, th);
            prop_assert!(out[head.len()..].iter().all(|&s| s == Plus));
        }

        #[test]
        fn field_update_commutes_with_permutation(
            pairs in prop::collection::vec((state(), -1.0f64..2.0), 1..30),
            seed in any::<u64>(),
        ) {
            let th = unit();
            let n = pairs.len();
            let mut perm: Vec<usize> = (0..n).collect();
            // deterministic shuffle from the seed
            let mut x = seed | 1;
            for i in (1..n).rev() {
                x ^= x << 13;
                x ^= x >> 7;
                x ^= x << 17;
                perm.swap(i, (x % (i as u64 + 1)) as usize);
            }
            let h = HysteresisField::new(pairs.iter().map(|p| p.0).collect());
            let u: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            let hp = HysteresisField::new(perm.iter().map(|&i| h.get(i)).collect());
            let up: Vec<f64> = perm.iter().map(|&i| u[i]).collect();
            let direct = field_update(&h, &u, th).unwrap();
            let permuted = field_update(&hp, &up, th).unwrap();
            for (j, &i) in perm.iter().enumerate() {
                prop_assert_eq!(permuted.get(j), direct.get(i));
            }
        }
    }
}
