//! Emission states of the down-conversion source with frequency structure
//! dropped, and the derived post-trigger state.

use crate::error::Result;
use crate::events::trigger_select;
use crate::fock::{Mode, StatePolynomial};
use crate::optics::innsbruck_circuit;

/// `γ(a_V†b_H† − a_H†b_V†)`, one pair at first order.
pub fn single_pair_emission() -> StatePolynomial {
    let op = StatePolynomial::creation;
    op(Mode::A_V)
        .multiply(&op(Mode::B_H))
        .sub(&op(Mode::A_H).multiply(&op(Mode::B_V)))
        .raise_order(1)
}

/// `γ²(a_V†b_H† − a_H†b_V†)²`, the second-order two-pair term.
pub fn two_pair_emission() -> StatePolynomial {
    single_pair_emission().pow(2)
}

/// Two-pair emission, trigger selection, then the full circuit.
pub fn post_trigger_state() -> Result<StatePolynomial> {
    let selected = trigger_select(&two_pair_emission())?;
    Ok(innsbruck_circuit().apply(&selected))
}
