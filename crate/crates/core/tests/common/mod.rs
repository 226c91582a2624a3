#![allow(dead_code)]

use std::f64::consts::PI;

use semiwave::wave::{DiscreteSetup, Interval, StateSlice};

pub const NX: usize = 63;
pub const HORIZON: f64 = 2.5;

pub fn omega() -> Interval {
    Interval::new(0.2, 0.8).unwrap()
}

pub fn setup(nx: usize) -> DiscreteSetup {
    DiscreteSetup::new(nx, HORIZON, omega(), 0.9).unwrap()
}

pub fn reference() -> DiscreteSetup {
    setup(NX)
}

pub fn sine(s: &DiscreteSetup, amp: f64) -> StateSlice {
    StateSlice::from_fns(s, |x| amp * (PI * x).sin(), |_| 0.0)
}

pub fn rest(s: &DiscreteSetup) -> StateSlice {
    StateSlice::zeros(s.nx())
}

pub fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    let den: f64 = b.iter().map(|y| y * y).sum();
    (num / den.max(f64::MIN_POSITIVE)).sqrt()
}
