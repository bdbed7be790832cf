//! Mean-reverting fundamental price, advanced lazily at agent wake times.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FundamentalState {
    /// Current fundamental value, cents.
    pub value: f64,
    /// Simulated time of the last update, ns.
    pub time: u64,
}

/// One Euler step of the mean-reverting process:
/// `x' = x + kappa (r_bar - x) dt + fund_vol sqrt(dt) noise`.
///
/// The reversion factor `kappa * dt` is clamped to 1 so a long lazy gap cannot
/// overshoot the mean, and the result is floored at one cent.
pub fn step_fundamental(
    state: FundamentalState,
    dt: f64,
    noise: f64,
    kappa: f64,
    r_bar: f64,
    fund_vol: f64,
) -> FundamentalState {
    debug_assert!(dt >= 0.0);
    let revert = (kappa * dt).min(1.0);
    let value = state.value + revert * (r_bar - state.value) + fund_vol * dt.sqrt() * noise;
    FundamentalState {
        value: value.max(1.0),
        time: state.time + dt as u64,
    }
}
