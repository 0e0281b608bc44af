//! Which parameter groups travel in each direction in round `t`.
//!
//! With partial updates on, the server sends the whole model when
//! `t mod P == 1` and clients upload the whole model when `t mod P == 0`;
//! every other transfer carries only the semantic encoder and decoder. The
//! two conditions are offset by one round, so channel groups aggregated at
//! the end of round `kP` reach the clients at the start of round `kP + 1`.
//!
//! `P == 1` has no round with `t mod P == 1`; it is treated as full
//! transfer every round in both directions.

use crate::params::GroupSet;

pub fn broadcast_groups(round: u32, interval: u32, partial_update: bool) -> GroupSet {
    debug_assert!(round >= 1);
    if !partial_update || interval <= 1 || round % interval == 1 {
        GroupSet::ALL
    } else {
        GroupSet::SEMANTIC
    }
}

pub fn upload_groups(round: u32, interval: u32, partial_update: bool) -> GroupSet {
    debug_assert!(round >= 1);
    if !partial_update || interval <= 1 || round % interval == 0 {
        GroupSet::ALL
    } else {
        GroupSet::SEMANTIC
    }
}
