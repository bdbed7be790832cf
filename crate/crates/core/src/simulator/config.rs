use crate::{Error, Result};

/// One class of value agents.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValueClass {
    pub num: u32,
    /// Poisson arrival rate, events per nanosecond of simulated time.
    pub lambda_a: f64,
    pub min_size: u32,
    pub max_size: u32,
}

/// Full simulator configuration. Times are simulated nanoseconds since
/// midnight; prices are integer cents.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub value: [ValueClass; 3],
    pub num_noise: u32,
    pub min_size_noise: u32,
    pub max_size_noise: u32,
    pub num_mm: u32,
    /// Constant inter-arrival interval of each market maker, ns.
    pub mm_rate: u64,
    /// Half-spread of market-maker quotes, ticks (cents).
    pub mm_half_spread: i64,
    pub mm_size: u32,
    /// Fundamental mean, cents.
    pub r_bar: f64,
    /// Mean-reversion rate, per ns.
    pub kappa: f64,
    /// Fundamental volatility, per sqrt(ns).
    pub fund_vol: f64,
    /// Value-agent observation noise std as a fraction of `r_bar`.
    pub obs_noise_frac: f64,
    pub session_open: u64,
    pub session_close: u64,
    pub series_start: u64,
    pub series_end: u64,
    pub sampling_interval: u64,
    pub seed: u64,
}

pub const NS_PER_SEC: u64 = 1_000_000_000;
pub const NS_PER_MIN: u64 = 60 * NS_PER_SEC;

impl Default for SimConfig {
    /// Full-day configuration: 9:30-16:00 session, series window
    /// 10:00-16:00 sampled by the minute.
    fn default() -> Self {
        let value = ValueClass {
            num: 100,
            lambda_a: 1e-12,
            min_size: 20,
            max_size: 50,
        };
        SimConfig {
            value: [
                value,
                ValueClass {
                    num: 0,
                    lambda_a: 1e-12,
                    min_size: 100,
                    max_size: 150,
                },
                ValueClass {
                    num: 0,
                    lambda_a: 1e-12,
                    min_size: 200,
                    max_size: 250,
                },
            ],
            num_noise: 5000,
            min_size_noise: 20,
            max_size_noise: 50,
            num_mm: 1,
            mm_rate: 60 * NS_PER_SEC,
            mm_half_spread: 5,
            mm_size: 100,
            r_bar: 1e5,
            kappa: 1.67e-12,
            fund_vol: 1e-4,
            obs_noise_frac: 1e-3,
            session_open: 9 * 60 * NS_PER_MIN + 30 * NS_PER_MIN,
            session_close: 16 * 60 * NS_PER_MIN,
            series_start: 10 * 60 * NS_PER_MIN,
            series_end: 16 * 60 * NS_PER_MIN,
            sampling_interval: NS_PER_MIN,
            seed: 0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        for (k, v) in self.value.iter().enumerate() {
            if v.min_size > v.max_size {
                return Err(Error::Config(format!(
                    "value class {}: min_size {} > max_size {}",
                    k + 1,
                    v.min_size,
                    v.max_size
                )));
            }
            if !(v.lambda_a >= 0.0) {
                return Err(Error::Config(format!(
                    "value class {}: lambda_a must be non-negative",
                    k + 1
                )));
            }
        }
        if self.min_size_noise > self.max_size_noise {
            return Err(Error::Config("noise min_size > max_size".into()));
        }
        if !(self.r_bar > 0.0) {
            return Err(Error::Config("r_bar must be positive".into()));
        }
        if !(self.kappa >= 0.0) || !(self.fund_vol >= 0.0) {
            return Err(Error::Config("kappa and fund_vol must be non-negative".into()));
        }
        if self.series_start >= self.series_end {
            return Err(Error::Config("series_start must precede series_end".into()));
        }
        if self.series_start < self.session_open || self.series_end > self.session_close {
            return Err(Error::Config(
                "series window must lie within the trading session".into(),
            ));
        }
        if self.sampling_interval == 0 {
            return Err(Error::Config("sampling_interval must be positive".into()));
        }
        if self.num_mm > 0 && self.mm_rate == 0 {
            return Err(Error::Config("mm_rate must be positive".into()));
        }
        Ok(())
    }

    /// Number of sampling buckets B in the series window.
    pub fn num_buckets(&self) -> usize {
        ((self.series_end - self.series_start) / self.sampling_interval) as usize
    }

    /// Output series length O = 2B.
    pub fn series_len(&self) -> usize {
        2 * self.num_buckets()
    }

    /// Set one calibratable parameter by its canonical symbol name.
    pub fn apply_param(&mut self, name: &str, value: f64) -> Result<()> {
        let as_count = |v: f64| v.round().max(0.0) as u32;
        match name {
            "num_value_1" => self.value[0].num = as_count(value),
            "num_value_2" => self.value[1].num = as_count(value),
            "num_value_3" => self.value[2].num = as_count(value),
            "lambda_a_1" => self.value[0].lambda_a = value,
            "lambda_a_2" => self.value[1].lambda_a = value,
            "lambda_a_3" => self.value[2].lambda_a = value,
            "min_size_value_1" => self.value[0].min_size = as_count(value),
            "min_size_value_2" => self.value[1].min_size = as_count(value),
            "min_size_value_3" => self.value[2].min_size = as_count(value),
            "max_size_value_1" => self.value[0].max_size = as_count(value),
            "max_size_value_2" => self.value[1].max_size = as_count(value),
            "max_size_value_3" => self.value[2].max_size = as_count(value),
            "num_noise" => self.num_noise = as_count(value),
            "min_size_noise" => self.min_size_noise = as_count(value),
            "max_size_noise" => self.max_size_noise = as_count(value),
            "r_bar" => self.r_bar = value,
            "kappa" => self.kappa = value,
            "fund_vol" => self.fund_vol = value,
            _ => {
                return Err(Error::Config(format!(
                    "unknown calibration parameter: {name}"
                )))
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_valid() {
        SimConfig::default().validate().unwrap();
    }

    #[test]
    fn default_window_is_six_hours_of_minutes() {
        let c = SimConfig::default();
        assert_eq!(c.num_buckets(), 360);
        assert_eq!(c.series_len(), 720);
    }

    #[test]
    fn bad_series_window_rejected() {
        let mut c = SimConfig::default();
        c.series_end = c.series_start;
        assert!(c.validate().is_err());
    }

    #[test]
    fn size_bound_order_enforced() {
        let mut c = SimConfig::default();
        c.value[0].min_size = 60;
        assert!(c.validate().is_err());
    }

    #[test]
    fn apply_param_round_trips_table_names() {
        let mut c = SimConfig::default();
        c.apply_param("num_noise", 1234.0).unwrap();
        assert_eq!(c.num_noise, 1234);
        c.apply_param("lambda_a_2", 3e-13).unwrap();
        assert_eq!(c.value[1].lambda_a, 3e-13);
        assert!(c.apply_param("bogus", 1.0).is_err());
    }
}
