//! Price-time priority limit order book.

use std::collections::{BTreeMap, HashMap, VecDeque};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Bid,
    Ask,
}

impl Side {
    pub fn opposite(self) -> Side {
        match self {
            Side::Bid => Side::Ask,
            Side::Ask => Side::Bid,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrderKind {
    Limit,
    Market,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Order {
    pub id: u64,
    pub side: Side,
    pub kind: OrderKind,
    /// Limit price in cents; `None` for market orders.
    pub price: Option<i64>,
    pub size: u32,
    pub timestamp: u64,
    pub agent_id: u32,
}

/// One execution. `size` is filled on both sides by construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Trade {
    pub time: u64,
    pub price: i64,
    pub size: u32,
    pub maker_id: u64,
    pub taker_id: u64,
}

#[derive(Debug, Clone, Copy)]
struct Resting {
    id: u64,
    size: u32,
    agent_id: u32,
}

/// FIFO queues per price level on each side, plus an id index for cancels.
#[derive(Debug, Default)]
pub struct OrderBook {
    bids: BTreeMap<i64, VecDeque<Resting>>,
    asks: BTreeMap<i64, VecDeque<Resting>>,
    index: HashMap<u64, (Side, i64)>,
    pub trade_log: Vec<Trade>,
    next_id: u64,
}

impl OrderBook {
    pub fn new() -> Self {
        Self::default()
    }

    /// Next strictly increasing order id.
    pub fn next_order_id(&mut self) -> u64 {
        let id = self.next_id;
        self.next_id += 1;
        id
    }

    pub fn best_bid(&self) -> Option<i64> {
        self.bids.keys().next_back().copied()
    }

    pub fn best_ask(&self) -> Option<i64> {
        self.asks.keys().next().copied()
    }

    pub fn mid(&self) -> Option<f64> {
        match (self.best_bid(), self.best_ask()) {
            (Some(b), Some(a)) => Some((b + a) as f64 / 2.0),
            _ => None,
        }
    }

    pub fn level_size(&self, side: Side, price: i64) -> u32 {
        let levels = match side {
            Side::Bid => &self.bids,
            Side::Ask => &self.asks,
        };
        levels
            .get(&price)
            .map(|q| q.iter().map(|o| o.size).sum())
            .unwrap_or(0)
    }

    pub fn cancel(&mut self, id: u64) -> bool {
        let Some((side, price)) = self.index.remove(&id) else {
            return false;
        };
        let levels = match side {
            Side::Bid => &mut self.bids,
            Side::Ask => &mut self.asks,
        };
        if let Some(queue) = levels.get_mut(&price) {
            if let Some(pos) = queue.iter().position(|o| o.id == id) {
                queue.remove(pos);
                if queue.is_empty() {
                    levels.remove(&price);
                }
                return true;
            }
        }
        false
    }

    /// Submit an order, matching any crossing quantity. Market orders match
    /// best-first until filled or the opposite side empties; the residual is
    /// discarded. Limit residuals rest at their price.
    pub fn submit_order(&mut self, order: Order) -> Vec<Trade> {
        debug_assert!(order.size > 0);
        debug_assert!(order.kind == OrderKind::Market || order.price.is_some());
        let mut trades = Vec::new();
        let mut remaining = order.size;

        while remaining > 0 {
            let opposite = match order.side {
                Side::Bid => self.asks.keys().next().copied(),
                Side::Ask => self.bids.keys().next_back().copied(),
            };
            let Some(level_price) = opposite else { break };
            let crosses = match (order.kind, order.price) {
                (OrderKind::Market, _) => true,
                (OrderKind::Limit, Some(p)) => match order.side {
                    Side::Bid => p >= level_price,
                    Side::Ask => p <= level_price,
                },
                (OrderKind::Limit, None) => unreachable!(),
            };
            if !crosses {
                break;
            }
            let levels = match order.side {
                Side::Bid => &mut self.asks,
                Side::Ask => &mut self.bids,
            };
            let queue = levels.get_mut(&level_price).expect("level exists");
            while remaining > 0 {
                let Some(front) = queue.front_mut() else { break };
                let fill = remaining.min(front.size);
                trades.push(Trade {
                    time: order.timestamp,
                    price: level_price,
                    size: fill,
                    maker_id: front.id,
                    taker_id: order.id,
                });
                remaining -= fill;
                front.size -= fill;
                if front.size == 0 {
                    self.index.remove(&front.id);
                    queue.pop_front();
                }
            }
            if levels.get(&level_price).is_some_and(|q| q.is_empty()) {
                levels.remove(&level_price);
            }
        }

        if remaining > 0 && order.kind == OrderKind::Limit {
            let price = order.price.expect("limit order has a price");
            let levels = match order.side {
                Side::Bid => &mut self.bids,
                Side::Ask => &mut self.asks,
            };
            levels.entry(price).or_default().push_back(Resting {
                id: order.id,
                size: remaining,
                agent_id: order.agent_id,
            });
            self.index.insert(order.id, (order.side, price));
        }

        self.trade_log.extend_from_slice(&trades);
        trades
    }

    /// Book is uncrossed at rest.
    pub fn is_uncrossed(&self) -> bool {
        match (self.best_bid(), self.best_ask()) {
            (Some(b), Some(a)) => b < a,
            _ => true,
        }
    }

    /// Resting (side, price, size, id) tuples in priority order, for replay
    /// verification.
    pub fn resting_orders(&self) -> Vec<(Side, i64, u32, u64)> {
        let mut out = Vec::new();
        for (&p, q) in self.bids.iter().rev() {
            out.extend(q.iter().map(|o| (Side::Bid, p, o.size, o.id)));
        }
        for (&p, q) in self.asks.iter() {
            out.extend(q.iter().map(|o| (Side::Ask, p, o.size, o.id)));
        }
        out
    }

    pub fn total_resting(&self, side: Side) -> u64 {
        let levels = match side {
            Side::Bid => &self.bids,
            Side::Ask => &self.asks,
        };
        levels
            .values()
            .flat_map(|q| q.iter())
            .map(|o| o.size as u64)
            .sum()
    }

    pub fn orders_of_agent(&self, agent_id: u32) -> Vec<u64> {
        let mut ids = Vec::new();
        for levels in [&self.bids, &self.asks] {
            for q in levels.values() {
                ids.extend(q.iter().filter(|o| o.agent_id == agent_id).map(|o| o.id));
            }
        }
        ids
    }
}
