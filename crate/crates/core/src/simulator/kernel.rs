//! Single-threaded discrete-event loop driving the agent populations.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::simulator::{
    extract_series, FundamentalState, Order, OrderBook, OrderKind, SeriesSample, Side, SimConfig,
    step_fundamental,
};
use crate::Result;

#[derive(Debug, Clone, Copy)]
enum Event {
    ValueWake { class: usize, agent: u32 },
    NoiseArrive,
    MmWake { mm: u32 },
}

struct Scheduled {
    time: u64,
    seq: u64,
    event: Event,
}

// Min-heap on (time, seq): ties broken by scheduling order for determinism.
impl PartialEq for Scheduled {
    fn eq(&self, other: &Self) -> bool {
        (self.time, self.seq) == (other.time, other.seq)
    }
}
impl Eq for Scheduled {}
impl PartialOrd for Scheduled {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Scheduled {
    fn cmp(&self, other: &Self) -> Ordering {
        (other.time, other.seq).cmp(&(self.time, self.seq))
    }
}

struct Kernel {
    config: SimConfig,
    rng: ChaCha8Rng,
    book: OrderBook,
    queue: BinaryHeap<Scheduled>,
    seq: u64,
    fundamental: FundamentalState,
    last_mid: f64,
    mid_history: Vec<(u64, f64)>,
    mm_quotes: Vec<Vec<u64>>,
    next_agent_id: u32,
}

impl Kernel {
    fn schedule(&mut self, time: u64, event: Event) {
        if time < self.config.session_close {
            let seq = self.seq;
            self.seq += 1;
            self.queue.push(Scheduled { time, seq, event });
        }
    }

    fn exp_interval(&mut self, rate: f64) -> Option<u64> {
        if rate <= 0.0 {
            return None;
        }
        let u: f64 = self.rng.gen();
        let dt = -(1.0 - u).ln() / rate;
        if dt.is_finite() {
            Some(dt as u64)
        } else {
            None
        }
    }

    fn draw_size(&mut self, min: u32, max: u32) -> Option<u32> {
        if max == 0 {
            return None;
        }
        Some(self.rng.gen_range(min.max(1)..=max.max(min)))
    }

    /// Current mid, carrying forward the last quote when a side is empty.
    fn effective_mid(&self) -> f64 {
        self.book.mid().unwrap_or(self.last_mid)
    }

    fn record_mid(&mut self, time: u64) {
        if let Some(m) = self.book.mid() {
            if m != self.last_mid {
                self.last_mid = m;
                self.mid_history.push((time, m));
            }
        }
    }

    fn submit_limit(&mut self, time: u64, agent_id: u32, side: Side, price: i64, size: u32) -> u64 {
        let id = self.book.next_order_id();
        self.book.submit_order(Order {
            id,
            side,
            kind: OrderKind::Limit,
            price: Some(price.max(1)),
            size,
            timestamp: time,
            agent_id,
        });
        id
    }

    fn on_value_wake(&mut self, time: u64, class: usize, agent: u32, agent_id: u32) {
        let cfg = self.config.value[class];
        // Lazily advance the fundamental to the wake time.
        let dt = (time - self.fundamental.time) as f64;
        let eps: f64 = self.rng.sample(StandardNormal);
        self.fundamental = step_fundamental(
            self.fundamental,
            dt,
            eps,
            self.config.kappa,
            self.config.r_bar,
            self.config.fund_vol,
        );
        let obs_noise: f64 = self.rng.sample(StandardNormal);
        let obs = self.fundamental.value + self.config.obs_noise_frac * self.config.r_bar * obs_noise;
        let mid = self.effective_mid();

        if let Some(size) = self.draw_size(cfg.min_size, cfg.max_size) {
            if obs > mid {
                let price = match self.book.best_ask() {
                    Some(ask) => ask - 1,
                    None => mid.round() as i64 + 1,
                };
                self.submit_limit(time, agent_id, Side::Bid, price, size);
            } else {
                let price = match self.book.best_bid() {
                    Some(bid) => bid + 1,
                    None => mid.round() as i64 - 1,
                };
                self.submit_limit(time, agent_id, Side::Ask, price, size);
            }
        }

        if let Some(gap) = self.exp_interval(cfg.lambda_a) {
            self.schedule(time.saturating_add(gap), Event::ValueWake { class, agent });
        }
    }

    fn on_noise_arrive(&mut self, time: u64) {
        let side = if self.rng.gen::<bool>() {
            Side::Bid
        } else {
            Side::Ask
        };
        let Some(size) = self.draw_size(self.config.min_size_noise, self.config.max_size_noise)
        else {
            return;
        };
        let id = self.book.next_order_id();
        self.book.submit_order(Order {
            id,
            side,
            kind: OrderKind::Market,
            price: None,
            size,
            timestamp: time,
            agent_id: u32::MAX,
        });
    }

    fn on_mm_wake(&mut self, time: u64, mm: u32) {
        let stale = std::mem::take(&mut self.mm_quotes[mm as usize]);
        for id in stale {
            self.book.cancel(id);
        }
        let mid = self.effective_mid().round() as i64;
        let hs = self.config.mm_half_spread.max(1);
        let agent_id = self.next_agent_id + mm;
        let size = self.config.mm_size;
        if size > 0 {
            let bid = self.submit_limit(time, agent_id, Side::Bid, mid - hs, size);
            let ask = self.submit_limit(time, agent_id, Side::Ask, (mid + hs).max(mid - hs + 2), size);
            self.mm_quotes[mm as usize] = vec![bid, ask];
        }
        self.schedule(
            time.saturating_add(self.config.mm_rate.max(1)),
            Event::MmWake { mm },
        );
    }
}

/// Run one replication. Deterministic in `(config, seed)`.
pub fn run_simulation(config: &SimConfig) -> Result<SeriesSample> {
    config.validate()?;
    let open = config.session_open;
    let close = config.session_close;

    let mut kernel = Kernel {
        config: config.clone(),
        rng: ChaCha8Rng::seed_from_u64(config.seed),
        book: OrderBook::new(),
        queue: BinaryHeap::new(),
        seq: 0,
        fundamental: FundamentalState {
            value: config.r_bar,
            time: open,
        },
        last_mid: config.r_bar,
        mid_history: Vec::new(),
        mm_quotes: vec![Vec::new(); config.num_mm as usize],
        next_agent_id: 0,
    };

    // Seed the book with one quote pair around r_bar so the opening mid is
    // defined.
    let r0 = config.r_bar.round() as i64;
    let hs = config.mm_half_spread.max(1);
    let seed_size = config.mm_size.max(100);
    kernel.submit_limit(open, 0, Side::Bid, r0 - hs, seed_size);
    kernel.submit_limit(open, 0, Side::Ask, (r0 + hs).max(r0 - hs + 2), seed_size);
    kernel.record_mid(open);

    // Agent id layout: 0 seeder, then value agents, then market makers; noise
    // agents share a sentinel id.
    let mut agent_id = 1u32;
    let mut value_ids = [0u32; 3];
    for (class, v) in config.value.iter().enumerate() {
        value_ids[class] = agent_id;
        for agent in 0..v.num {
            if let Some(gap) = kernel.exp_interval(v.lambda_a) {
                kernel.schedule(open.saturating_add(gap), Event::ValueWake { class, agent });
            }
        }
        agent_id += v.num;
    }
    for _ in 0..config.num_noise {
        let t = kernel.rng.gen_range(open..close);
        kernel.schedule(t, Event::NoiseArrive);
    }
    kernel.next_agent_id = agent_id;
    for mm in 0..config.num_mm {
        kernel.schedule(open.saturating_add(config.mm_rate.max(1)), Event::MmWake { mm });
    }

    while let Some(Scheduled { time, event, .. }) = kernel.queue.pop() {
        match event {
            Event::ValueWake { class, agent } => {
                let id = value_ids[class] + agent;
                kernel.on_value_wake(time, class, agent, id);
            }
            Event::NoiseArrive => kernel.on_noise_arrive(time),
            Event::MmWake { mm } => kernel.on_mm_wake(time, mm),
        }
        kernel.record_mid(time);
    }

    Ok(extract_series(
        &kernel.book.trade_log,
        &kernel.mid_history,
        config,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn desk_config() -> SimConfig {
        let mut c = SimConfig::default();
        c.session_open = 0;
        c.session_close = 600 * 1_000_000_000;
        c.series_start = 60 * 1_000_000_000;
        c.series_end = 540 * 1_000_000_000;
        c.sampling_interval = 10 * 1_000_000_000;
        c.num_noise = 200;
        c.value[0].num = 5;
        c.value[0].lambda_a = 1e-10;
        c.mm_rate = 30 * 1_000_000_000;
        c.seed = 7;
        c
    }

    #[test]
    fn empty_market_yields_all_zeros() {
        let mut c = desk_config();
        for v in &mut c.value {
            v.num = 0;
        }
        c.num_noise = 0;
        c.num_mm = 0;
        let s = run_simulation(&c).unwrap();
        assert!(s.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn full_day_window_gives_720_entries() {
        let mut c = SimConfig::default();
        c.num_noise = 50; // keep the test fast; length is window arithmetic only
        c.value[0].num = 2;
        c.seed = 7;
        let s = run_simulation(&c).unwrap();
        assert_eq!(s.len(), 720);
        assert_eq!(s.returns.len(), 360);
    }

    #[test]
    fn identical_seeds_identical_output() {
        let c = desk_config();
        let a = run_simulation(&c).unwrap();
        let b = run_simulation(&c).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn different_seeds_differ() {
        let mut c = desk_config();
        let a = run_simulation(&c).unwrap();
        c.seed = 8;
        let b = run_simulation(&c).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn volumes_are_non_negative_and_finite() {
        let s = run_simulation(&desk_config()).unwrap();
        assert!(s.volumes.iter().all(|&v| v >= 0.0 && v.is_finite()));
        assert!(s.returns.iter().all(|&r| r.is_finite()));
        assert!(s.volumes.iter().sum::<f64>() > 0.0);
    }

    #[test]
    fn frozen_fundamental_with_zero_vol_and_kappa() {
        let mut c = desk_config();
        c.kappa = 0.0;
        c.fund_vol = 0.0;
        // Trades still happen (noise agents) but the run must succeed and be
        // deterministic.
        let a = run_simulation(&c).unwrap();
        let b = run_simulation(&c).unwrap();
        assert_eq!(a, b);
    }
}
