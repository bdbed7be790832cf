//! Acceptance suite: one test per criterion, oracle-checked where exact and
//! directional where statistical. Heavy experiment state is shared between
//! criteria through a `OnceLock`.

use std::path::PathBuf;
use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use lobcalib::eligibility::EvalContext;
use lobcalib::gp::{GpModel, KernelFamily, KernelSpec};
use lobcalib::harness::{
    generate_real_data, nonidentifiability_report, run_comparison, ExperimentSpec, Report,
};
use lobcalib::ksdist::{critical_value, ks_distance, one_dim_ks, FeatureExtractor};
use lobcalib::optimize::{
    expected_improvement, probability_of_improvement, RegionUpdate, TrustRegion,
    TrustRegionParams,
};
use lobcalib::simulator::{
    run_simulation, Order, OrderBook, OrderKind, SeriesSample, Side, SimConfig,
};
use lobcalib::specfile::load_spec;

fn spec_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../specs")
        .join(name)
}

// ---------------------------------------------------------------------------
// 1. K-S oracle equivalence
// ---------------------------------------------------------------------------

/// Brute-force one-dimensional two-sample K-S: walk every pooled point and
/// evaluate both empirical CDFs by direct counting.
fn brute_force_ks(xs: &[f64], ys: &[f64]) -> f64 {
    let mut pooled: Vec<f64> = xs.iter().chain(ys).copied().collect();
    pooled.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pooled.dedup();
    let mut sup: f64 = 0.0;
    for &t in &pooled {
        let fx = xs.iter().filter(|&&v| v <= t).count() as f64 / xs.len() as f64;
        let fy = ys.iter().filter(|&&v| v <= t).count() as f64 / ys.len() as f64;
        sup = sup.max((fx - fy).abs());
    }
    sup
}

#[test]
fn criterion_01_ks_oracle_equivalence() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    // Half-integer support forces heavy ties across both samples.
    let draw = |rng: &mut ChaCha8Rng| rng.gen_range(0..=8) as f64 / 2.0;
    for _ in 0..500 {
        let k = rng.gen_range(1..=3usize);
        let n_x = rng.gen_range(1..=11usize);
        let n_y = rng.gen_range(1..=(12 - n_x));

        let mut per_dim_oracle = Vec::with_capacity(k);
        let mut dims_x: Vec<Vec<f64>> = Vec::new();
        let mut dims_y: Vec<Vec<f64>> = Vec::new();
        for _ in 0..k {
            let xs: Vec<f64> = (0..n_x).map(|_| draw(&mut rng)).collect();
            let ys: Vec<f64> = (0..n_y).map(|_| draw(&mut rng)).collect();
            let oracle = brute_force_ks(&xs, &ys);
            assert_eq!(one_dim_ks(&xs, &ys).unwrap(), oracle, "exact per-dim match");
            per_dim_oracle.push(oracle);
            dims_x.push(xs);
            dims_y.push(ys);
        }

        // Full ks_distance on the same data whenever K is a valid series
        // length (even, split into returns/volumes halves).
        if k % 2 == 0 {
            let wrap = |dims: &[Vec<f64>], count: usize| -> Vec<SeriesSample> {
                (0..count)
                    .map(|i| {
                        let row: Vec<f64> = dims.iter().map(|d| d[i]).collect();
                        SeriesSample::from_values(&row).unwrap()
                    })
                    .collect()
            };
            let real = wrap(&dims_x, n_x);
            let sim = wrap(&dims_y, n_y);
            let res = ks_distance(&real, &sim, FeatureExtractor::Identity, 0.05).unwrap();
            assert_eq!(res.per_dim, per_dim_oracle);
            let max = per_dim_oracle.iter().cloned().fold(0.0f64, f64::max);
            assert_eq!(res.statistic, max);
        }
    }
}

// ---------------------------------------------------------------------------
// 2. Critical-value formula
// ---------------------------------------------------------------------------

#[test]
fn criterion_02_critical_value_formula() {
    for &n in &[1usize, 10, 100, 1000] {
        for &m in &[1usize, 5, 50, 500] {
            for &alpha in &[0.01, 0.05, 0.1] {
                for &k in &[1usize, 4, 360, 720] {
                    let got = critical_value(n, m, alpha, k).unwrap();
                    // independent arrangement of the same closed form
                    let expect = ((2.0 * k as f64 / alpha).ln() * (n + m) as f64
                        / (2.0 * n as f64 * m as f64))
                        .sqrt();
                    let rel = ((got - expect) / expect).abs();
                    assert!(rel <= 1e-12, "N={n} n={m} alpha={alpha} K={k}: rel {rel}");
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// 3. Bonferroni type-I error bound
// ---------------------------------------------------------------------------

#[test]
fn criterion_03_bonferroni_type_one_bound() {
    let trials = 2000;
    let (n, k) = (100usize, 10usize);
    let q = critical_value(n, n, 0.05, k).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut rejections = 0;
    for _ in 0..trials {
        let mut max_stat: f64 = 0.0;
        for _ in 0..k {
            let xs: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
            let ys: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
            max_stat = max_stat.max(one_dim_ks(&xs, &ys).unwrap());
        }
        if max_stat >= q {
            rejections += 1;
        }
    }
    let rate = rejections as f64 / trials as f64;
    let bound = 0.05 + 3.0 * (0.05f64 * 0.95 / trials as f64).sqrt();
    assert!(
        rate <= bound,
        "type-I rate {rate} exceeds bound {bound:.4} ({rejections}/{trials})"
    );
}

// ---------------------------------------------------------------------------
// 4. Eligibility coverage on the 2-parameter desk setup
// ---------------------------------------------------------------------------

#[test]
fn criterion_04_eligibility_coverage() {
    let spec = load_spec(&spec_path("desk2.spec")).unwrap();
    let truth = spec.truth().unwrap();
    let reps = 200;
    let mut covered = 0;
    for rep in 0..reps {
        let mut s = spec.clone();
        s.master_seed = 10_000 + rep;
        s.base.seed = s.master_seed;
        let real = generate_real_data(&s).unwrap();
        let ctx = EvalContext {
            space: &s.space,
            base: &s.base,
            real: &real,
            n_sim: s.n_sim,
            alpha: s.alpha,
            extractor: s.extractor,
        };
        let block: Vec<u64> = (0..s.n_sim as u64)
            .map(|i| lobcalib::seeds::derive(s.master_seed, lobcalib::seeds::STREAM_SIM, i))
            .collect();
        let record = ctx.evaluate_theta(&truth, &block).unwrap();
        if record.ks.eligible {
            covered += 1;
        }
    }
    let rate = covered as f64 / reps as f64;
    assert!(
        rate >= 0.91,
        "truth eligible in {covered}/{reps} = {rate:.3}, below 0.91"
    );
}

// ---------------------------------------------------------------------------
// 5. GP posterior oracle
// ---------------------------------------------------------------------------

/// Dense-solve oracle replicating the model's output standardization.
fn dense_posterior(spec: &KernelSpec, xs: &[Vec<f64>], ys: &[f64], x: &[f64]) -> (f64, f64) {
    let n = xs.len();
    let ym = ys.iter().sum::<f64>() / n as f64;
    let yc = DVector::from_iterator(n, ys.iter().map(|&y| y - ym));
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            k[(i, j)] = spec.eval(&xs[i], &xs[j]) + if i == j { spec.noise_variance } else { 0.0 };
        }
    }
    let kinv = k.try_inverse().unwrap();
    let kx = DVector::from_iterator(n, xs.iter().map(|t| spec.eval(t, x)));
    let mean = ym + (kx.transpose() * &kinv * &yc)[(0, 0)];
    let var = spec.eval(x, x) + spec.noise_variance - (kx.transpose() * &kinv * &kx)[(0, 0)];
    (mean, var.max(0.0))
}

#[test]
fn criterion_05_gp_posterior_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(505);

    // (a) dense-solve agreement on random small models
    for _ in 0..50 {
        let dim = rng.gen_range(1..=3usize);
        let n = rng.gen_range(2..=5usize);
        let spec = KernelSpec {
            family: if rng.gen() { KernelFamily::Rbf } else { KernelFamily::Matern52 },
            lengthscales: (0..dim).map(|_| rng.gen_range(0.1..1.0)).collect(),
            signal_variance: rng.gen_range(0.2..3.0),
            noise_variance: rng.gen_range(0.01..0.5),
        };
        let xs: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..dim).map(|_| rng.gen::<f64>()).collect())
            .collect();
        let ys: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let model = GpModel::with_hyperparams(spec.clone(), &xs, &ys).unwrap();
        let probe: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>()).collect();
        let (m, v) = model.posterior(&probe);
        let (om, ov) = dense_posterior(&spec, &xs, &ys, &probe);
        assert!((m - om).abs() < 1e-8, "mean {m} vs oracle {om}");
        assert!((v - ov).abs() < 1e-8, "var {v} vs oracle {ov}");
    }

    // (b) noise-free interpolation
    let xs = vec![vec![0.05], vec![0.3], vec![0.55], vec![0.8], vec![0.95]];
    let ys = vec![1.0, -0.4, 0.7, 2.1, -1.3];
    let mut interp = KernelSpec::isotropic(KernelFamily::Rbf, 1, 0.2);
    interp.noise_variance = 0.0;
    let model = GpModel::with_hyperparams(interp, &xs, &ys).unwrap();
    for (x, &y) in xs.iter().zip(&ys) {
        let (m, v) = model.posterior(x);
        assert!((m - y).abs() < 1e-6, "interpolation mean {m} vs {y}");
        assert!(v.abs() < 1e-6, "interpolation variance {v}");
    }

    // (c) 1.96-sigma predictive coverage over 5000 held-out points
    let true_spec = KernelSpec {
        family: KernelFamily::Matern52,
        lengthscales: vec![0.25],
        signal_variance: 1.0,
        noise_variance: 0.05,
    };
    let n_train = 15;
    let n_test = 50;
    let mut inside = 0usize;
    let mut total = 0usize;
    for _ in 0..100 {
        let mut points: Vec<Vec<f64>> = (0..n_train + n_test)
            .map(|_| vec![rng.gen::<f64>()])
            .collect();
        let prior = GpModel::with_hyperparams(true_spec.clone(), &[], &[]).unwrap();
        let joint = prior.posterior_sample(&points, &mut rng).unwrap();
        let test_x = points.split_off(n_train);
        let train_y = &joint[..n_train];
        let test_y = &joint[n_train..];
        let model = GpModel::with_hyperparams(true_spec.clone(), &points, train_y).unwrap();
        for (x, &y) in test_x.iter().zip(test_y) {
            let (m, v) = model.posterior(x);
            if (y - m).abs() <= 1.96 * v.sqrt() {
                inside += 1;
            }
            total += 1;
        }
    }
    assert_eq!(total, 5000);
    let coverage = inside as f64 / total as f64;
    assert!(
        (coverage - 0.95).abs() <= 0.02,
        "1.96-sigma coverage {coverage:.4} outside 95% +/- 2%"
    );
}

// ---------------------------------------------------------------------------
// 6. Acquisition closed forms
// ---------------------------------------------------------------------------

fn simpson<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, steps: usize) -> f64 {
    let h = (hi - lo) / steps as f64;
    let mut acc = f(lo) + f(hi);
    for i in 1..steps {
        acc += f(lo + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    acc * h / 3.0
}

#[test]
fn criterion_06_acquisition_closed_forms() {
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    for _ in 0..1000 {
        let mean = rng.gen_range(-2.0..2.0);
        let sigma = rng.gen_range(0.05..3.0);
        let best = rng.gen_range(-2.0..2.0);
        let density = |y: f64| {
            let z = (y - mean) / sigma;
            (-0.5 * z * z).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt())
        };
        let lo = mean - 12.0 * sigma;
        let (ei_num, pi_num) = if best <= lo {
            (0.0, 0.0)
        } else {
            (
                simpson(|y| (best - y) * density(y), lo, best, 4000),
                simpson(density, lo, best, 4000),
            )
        };
        let ei = expected_improvement(mean, sigma, best);
        let pi = probability_of_improvement(mean, sigma, best);
        assert!((ei - ei_num).abs() < 1e-6, "EI {ei} vs numeric {ei_num}");
        assert!((pi - pi_num).abs() < 1e-6, "PI {pi} vs numeric {pi_num}");
    }

    let special = expected_improvement(0.3, 1.0, 0.3);
    let exact = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
    assert!((special - exact).abs() < 1e-9, "EI special value {special}");
}

// ---------------------------------------------------------------------------
// 7. TuRBO trust-region mechanics
// ---------------------------------------------------------------------------

#[test]
fn criterion_07_turbo_mechanics() {
    let d = 3;
    let params = TrustRegionParams::defaults_for_dim(d);
    assert_eq!(params.tau_succ, 1);
    assert_eq!(params.tau_fail, d);
    assert_eq!(params.l_min, 2f64.powi(-7));
    assert_eq!(params.l_max, 1.6);
    assert_eq!(params.l_init, 0.8);

    // Scripted trajectory: success doubles immediately (tau_succ = 1) and
    // clips at L_max; d failures halve; counters reset on every threshold.
    let mut tr = TrustRegion::new(params);
    let script: Vec<(bool, f64, RegionUpdate)> = vec![
        (false, 0.8, RegionUpdate::None),
        (false, 0.8, RegionUpdate::None),
        (true, 1.6, RegionUpdate::Expanded), // failure count wiped
        (true, 1.6, RegionUpdate::Expanded), // clipped at L_max
        (false, 1.6, RegionUpdate::None),
        (false, 1.6, RegionUpdate::None),
        (false, 0.8, RegionUpdate::Shrunk),
        (false, 0.8, RegionUpdate::None),
        (false, 0.8, RegionUpdate::None),
        (false, 0.4, RegionUpdate::Shrunk),
    ];
    for (step, (improved, expect_l, expect_update)) in script.into_iter().enumerate() {
        let update = tr.record(improved);
        assert_eq!(update, expect_update, "step {step}");
        assert!((tr.length - expect_l).abs() < 1e-15, "step {step}: L {}", tr.length);
        if update != RegionUpdate::None {
            assert_eq!((tr.successes, tr.failures), (0, 0), "step {step} counters");
        }
    }

    // Pure failure run from L_init: restart fires when a halving drops L
    // below L_min, i.e. after 7 halvings (0.8 / 2^7 = 0.00625 < 2^-7).
    let mut tr = TrustRegion::new(params);
    let mut halvings = 0;
    let restart_at = loop {
        match tr.record(false) {
            RegionUpdate::Shrunk => halvings += 1,
            RegionUpdate::Restart => break halvings + 1,
            RegionUpdate::None => {}
            RegionUpdate::Expanded => unreachable!("no successes scripted"),
        }
    };
    assert_eq!(restart_at, 7);
    assert!(tr.length < params.l_min);
}

// ---------------------------------------------------------------------------
// 8 + 9. Desk-scale 6-parameter comparison (shared expensive run)
// ---------------------------------------------------------------------------

fn desk6_report() -> &'static (ExperimentSpec, Report) {
    static REPORT: OnceLock<(ExperimentSpec, Report)> = OnceLock::new();
    REPORT.get_or_init(|| {
        let spec = load_spec(&spec_path("desk6.spec")).unwrap();
        let real = generate_real_data(&spec).unwrap();
        let report = run_comparison(&spec, &real).unwrap();
        (spec, report)
    })
}

#[test]
fn criterion_08_strategy_ordering() {
    let (_, report) = desk6_report();
    assert!(report.failures.is_empty(), "cells failed: {:?}", report.failures);

    let rate = |name: &str| {
        report
            .success_rates()
            .into_iter()
            .find(|r| r.strategy == name)
            .map(|r| r.rate())
            .unwrap()
    };
    let (r_random, r_bo, r_turbo) = (rate("random"), rate("bo"), rate("turbo"));
    let final_best = |name: &str| report.mean_final_best(name).unwrap();
    let (f_random, f_bo, f_turbo) = (
        final_best("random"),
        final_best("bo"),
        final_best("turbo"),
    );
    println!(
        "success rates: random {r_random:.2} bo {r_bo:.2} turbo {r_turbo:.2}; \
         mean final best: random {f_random:.4} bo {f_bo:.4} turbo {f_turbo:.4}"
    );
    assert!(r_turbo >= r_bo, "turbo rate {r_turbo} < bo rate {r_bo}");
    assert!(r_bo >= r_random, "bo rate {r_bo} < random rate {r_random}");
    assert!(
        f_turbo <= f_bo && f_turbo <= f_random,
        "turbo mean final best {f_turbo} not lowest (bo {f_bo}, random {f_random})"
    );
}

#[test]
fn criterion_09_nonidentifiability_signature() {
    let (spec, report) = desk6_report();
    let es = report.eligibility_set();
    assert!(
        es.records.len() >= 10,
        "eligible set has only {} points",
        es.records.len()
    );
    let (a, b) = spec.nonident_pair.clone().unwrap();
    let ni = nonidentifiability_report(&es, (&a, &b)).unwrap();
    let corr = ni.log_log_corr.unwrap();
    println!(
        "eligible points: {}, log({a})/log({b}) correlation: {corr:.3}",
        es.records.len()
    );
    assert!(corr < -0.5, "log-log correlation {corr} not below -0.5");
}

// ---------------------------------------------------------------------------
// 10. Simulator invariants
// ---------------------------------------------------------------------------

/// Independent replay oracle: a naive order book with explicit price-sorted
/// levels and FIFO queues, matched step by step.
#[derive(Default)]
struct NaiveBook {
    bids: Vec<(i64, Vec<(u64, u32)>)>, // descending price
    asks: Vec<(i64, Vec<(u64, u32)>)>, // ascending price
}

impl NaiveBook {
    fn submit(&mut self, order: &Order) -> Vec<(i64, u32, u64)> {
        let mut trades = Vec::new();
        let mut remaining = order.size;
        loop {
            if remaining == 0 {
                break;
            }
            let opposite = match order.side {
                Side::Bid => self.asks.first_mut(),
                Side::Ask => self.bids.first_mut(),
            };
            let Some((level_price, queue)) = opposite else { break };
            let level_price = *level_price;
            let crosses = match (order.kind, order.price) {
                (OrderKind::Market, _) => true,
                (OrderKind::Limit, Some(p)) => match order.side {
                    Side::Bid => p >= level_price,
                    Side::Ask => p <= level_price,
                },
                _ => unreachable!(),
            };
            if !crosses {
                break;
            }
            while remaining > 0 {
                let Some(front) = queue.first_mut() else { break };
                let fill = remaining.min(front.1);
                trades.push((level_price, fill, front.0));
                remaining -= fill;
                front.1 -= fill;
                if front.1 == 0 {
                    queue.remove(0);
                }
            }
            if queue.is_empty() {
                match order.side {
                    Side::Bid => self.asks.remove(0),
                    Side::Ask => self.bids.remove(0),
                };
            }
        }
        if remaining > 0 && order.kind == OrderKind::Limit {
            let price = order.price.unwrap();
            let (levels, better): (&mut Vec<(i64, Vec<(u64, u32)>)>, fn(i64, i64) -> bool) =
                match order.side {
                    Side::Bid => (&mut self.bids, |a, b| a > b),
                    Side::Ask => (&mut self.asks, |a, b| a < b),
                };
            let pos = levels
                .iter()
                .position(|&(p, _)| !better(p, price))
                .unwrap_or(levels.len());
            if pos < levels.len() && levels[pos].0 == price {
                levels[pos].1.push((order.id, remaining));
            } else {
                levels.insert(pos, (price, vec![(order.id, remaining)]));
            }
        }
        trades
    }

    fn cancel(&mut self, id: u64) {
        for levels in [&mut self.bids, &mut self.asks] {
            for (_, queue) in levels.iter_mut() {
                queue.retain(|&(qid, _)| qid != id);
            }
            levels.retain(|(_, q)| !q.is_empty());
        }
    }
}

#[test]
fn criterion_10_simulator_invariants() {
    let mut rng = ChaCha8Rng::seed_from_u64(1010);
    for seq in 0..10_000u64 {
        let mut book = OrderBook::new();
        let mut oracle = NaiveBook::default();
        let mut live_ids: Vec<u64> = Vec::new();
        let n_ops = rng.gen_range(5..=25);
        for t in 0..n_ops {
            if !live_ids.is_empty() && rng.gen_bool(0.15) {
                let id = live_ids.swap_remove(rng.gen_range(0..live_ids.len()));
                book.cancel(id);
                oracle.cancel(id);
                continue;
            }
            let kind = if rng.gen_bool(0.3) {
                OrderKind::Market
            } else {
                OrderKind::Limit
            };
            let order = Order {
                id: book.next_order_id(),
                side: if rng.gen() { Side::Bid } else { Side::Ask },
                kind,
                price: match kind {
                    OrderKind::Market => None,
                    OrderKind::Limit => Some(rng.gen_range(95..=105)),
                },
                size: rng.gen_range(1..=20),
                timestamp: t,
                agent_id: 0,
            };
            let trades = book.submit_order(order);
            let expected = oracle.submit(&order);

            // Price-time priority by replay: fills agree in order, price,
            // size and counterparty with the independent oracle.
            assert_eq!(trades.len(), expected.len(), "seq {seq} t {t}");
            let mut filled: u32 = 0;
            for (tr, (price, size, maker)) in trades.iter().zip(&expected) {
                assert_eq!(tr.price, *price, "seq {seq} t {t}");
                assert_eq!(tr.size, *size, "seq {seq} t {t}");
                assert_eq!(tr.maker_id, *maker, "seq {seq} t {t}");
                assert_eq!(tr.taker_id, order.id, "seq {seq} t {t}");
                filled += tr.size;
            }
            // Fill conservation: taker fills sum to at most the order size,
            // and each trade fills maker and taker equally by construction.
            assert!(filled <= order.size, "seq {seq} t {t}");
            assert!(book.is_uncrossed(), "seq {seq} t {t}: crossed book");

            if kind == OrderKind::Limit && filled < order.size {
                live_ids.push(order.id);
            }
        }
    }

    // Bit-exact determinism of the full simulation.
    let mut config = SimConfig::default();
    config.session_close = config.session_open + 10 * 60 * 1_000_000_000;
    config.series_start = config.session_open;
    config.series_end = config.session_close;
    config.sampling_interval = 60 * 1_000_000_000;
    config.num_noise = 200;
    config.seed = 7;
    let a = run_simulation(&config).unwrap();
    let b = run_simulation(&config).unwrap();
    assert_eq!(a.returns, b.returns);
    assert_eq!(a.volumes, b.volumes);
    let mut config2 = config.clone();
    config2.seed = 8;
    let c = run_simulation(&config2).unwrap();
    assert!(a.returns != c.returns || a.volumes != c.volumes);
}
