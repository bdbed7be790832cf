//! Flat key=value experiment files.
//!
//! One file drives every command. Keys use the canonical simulator parameter
//! symbols verbatim; `#` starts a comment. Clock times accept `HH:MM[:SS]` or
//! raw nanoseconds; durations accept raw nanoseconds or `s`/`m`/`h` suffixes.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use crate::harness::ExperimentSpec;
use crate::ksdist::FeatureExtractor;
use crate::params::{default_def, ParamDef, ParamSpace, Scale};
use crate::simulator::SimConfig;
use crate::{Error, Result};

const SIM_PARAM_KEYS: &[&str] = &[
    "num_value_1",
    "num_value_2",
    "num_value_3",
    "lambda_a_1",
    "lambda_a_2",
    "lambda_a_3",
    "min_size_value_1",
    "min_size_value_2",
    "min_size_value_3",
    "max_size_value_1",
    "max_size_value_2",
    "max_size_value_3",
    "num_noise",
    "min_size_noise",
    "max_size_noise",
    "r_bar",
    "kappa",
    "fund_vol",
];

fn parse_clock(value: &str) -> Option<u64> {
    let parts: Vec<&str> = value.split(':').collect();
    if parts.len() < 2 || parts.len() > 3 {
        return None;
    }
    let h: u64 = parts[0].parse().ok()?;
    let m: u64 = parts[1].parse().ok()?;
    let s: u64 = if parts.len() == 3 {
        parts[2].parse().ok()?
    } else {
        0
    };
    Some(((h * 60 + m) * 60 + s) * 1_000_000_000)
}

fn parse_time(value: &str) -> Option<u64> {
    if value.contains(':') {
        parse_clock(value)
    } else {
        value.parse().ok()
    }
}

fn parse_duration(value: &str) -> Option<u64> {
    if let Some(v) = value.strip_suffix('h') {
        return v.trim().parse::<u64>().ok().map(|x| x * 3_600_000_000_000);
    }
    if let Some(v) = value.strip_suffix('m') {
        return v.trim().parse::<u64>().ok().map(|x| x * 60_000_000_000);
    }
    if let Some(v) = value.strip_suffix('s') {
        return v.trim().parse::<u64>().ok().map(|x| x * 1_000_000_000);
    }
    value.parse().ok()
}

struct RawSpec {
    entries: BTreeMap<String, (String, usize)>,
    file: String,
}

impl RawSpec {
    fn err(&self, line: usize, msg: String) -> Error {
        Error::Parse {
            file: self.file.clone(),
            line,
            msg,
        }
    }

    fn take(&mut self, key: &str) -> Option<(String, usize)> {
        self.entries.remove(key)
    }

    fn parse_with<T>(
        &mut self,
        key: &str,
        default: T,
        parse: impl Fn(&str) -> Option<T>,
    ) -> Result<T> {
        match self.take(key) {
            None => Ok(default),
            Some((v, line)) => {
                parse(&v).ok_or_else(|| self.err(line, format!("invalid value for key {key}: {v}")))
            }
        }
    }
}

fn read_raw(path: &Path) -> Result<RawSpec> {
    let file = path.display().to_string();
    let reader = BufReader::new(File::open(path)?);
    let mut entries = BTreeMap::new();
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(Error::Parse {
                file,
                line: lineno,
                msg: format!("expected key = value, got: {content}"),
            });
        };
        entries.insert(
            key.trim().to_string(),
            (value.trim().to_string(), lineno),
        );
    }
    Ok(RawSpec { entries, file })
}

/// Load a full experiment spec from a flat key=value file.
pub fn load_spec(path: &Path) -> Result<ExperimentSpec> {
    let mut raw = read_raw(path)?;
    let mut base = SimConfig::default();

    for &key in SIM_PARAM_KEYS {
        if let Some((v, line)) = raw.take(key) {
            let value: f64 = v
                .parse()
                .map_err(|_| raw.err(line, format!("invalid value for key {key}: {v}")))?;
            base.apply_param(key, value)
                .map_err(|e| raw.err(line, e.to_string()))?;
        }
    }

    base.num_mm = raw.parse_with("num_mm", base.num_mm, |v| v.parse().ok())?;
    base.mm_rate = raw.parse_with("mm_rate", base.mm_rate, parse_duration)?;
    base.mm_half_spread = raw.parse_with("mm_half_spread", base.mm_half_spread, |v| v.parse().ok())?;
    base.mm_size = raw.parse_with("mm_size", base.mm_size, |v| v.parse().ok())?;
    base.obs_noise_frac = raw.parse_with("obs_noise_frac", base.obs_noise_frac, |v| v.parse().ok())?;
    base.session_open = raw.parse_with("session_open", base.session_open, parse_time)?;
    base.session_close = raw.parse_with("session_close", base.session_close, parse_time)?;
    base.series_start = raw.parse_with("series_start", base.series_start, parse_time)?;
    base.series_end = raw.parse_with("series_end", base.series_end, parse_time)?;
    base.sampling_interval =
        raw.parse_with("sampling_interval", base.sampling_interval, parse_duration)?;

    let master_seed: u64 = raw.parse_with("seed", 0, |v| v.parse().ok())?;
    base.seed = master_seed;
    let n_real = raw.parse_with("N_real", 100, |v| v.parse().ok())?;
    let n_sim = raw.parse_with("n_sim", 50, |v| v.parse().ok())?;
    let alpha = raw.parse_with("alpha", 0.05, |v| v.parse().ok())?;
    let n_total = raw.parse_with("n_total", 100, |v| v.parse().ok())?;

    let free: Vec<String> = raw.parse_with("free_params", vec!["num_noise".into(), "lambda_a_1".into()], |v| {
        Some(v.split(',').map(|s| s.trim().to_string()).collect())
    })?;

    let mut defs: Vec<ParamDef> = Vec::new();
    for name in &free {
        let mut def = default_def(name).ok_or_else(|| {
            Error::Config(format!("free_params names unknown parameter: {name}"))
        })?;
        def.lower = raw.parse_with(&format!("min_{name}"), def.lower, |v| v.parse().ok())?;
        def.upper = raw.parse_with(&format!("max_{name}"), def.upper, |v| v.parse().ok())?;
        if let Some((v, line)) = raw.take(&format!("scale_{name}")) {
            def.scale = match v.as_str() {
                "linear" => Scale::Linear,
                "log" => Scale::Log,
                _ => return Err(raw.err(line, format!("invalid scale for {name}: {v}"))),
            };
        }
        defs.push(def);
    }
    let space = ParamSpace::new(defs)?;

    let n_init = raw.parse_with("n_init", 2 * space.dim().max(1), |v| v.parse().ok())?;
    let strategies: Vec<String> = raw.parse_with(
        "strategies",
        vec!["random".into(), "bo".into(), "turbo".into()],
        |v| Some(v.split(',').map(|s| s.trim().to_string()).collect()),
    )?;
    let num_seeds: u64 = raw.parse_with("num_seeds", 10, |v| v.parse().ok())?;
    let extractor = match raw.take("extractor") {
        None => FeatureExtractor::Identity,
        Some((v, line)) => {
            FeatureExtractor::parse(&v).map_err(|e| raw.err(line, e.to_string()))?
        }
    };
    let nonident_pair = match raw.take("nonident_pair") {
        None => None,
        Some((v, line)) => {
            let parts: Vec<&str> = v.split(',').map(|s| s.trim()).collect();
            if parts.len() != 2 {
                return Err(raw.err(line, format!("nonident_pair needs two names, got: {v}")));
            }
            Some((parts[0].to_string(), parts[1].to_string()))
        }
    };

    if let Some((key, (_, line))) = raw.entries.iter().next() {
        return Err(Error::Parse {
            file: raw.file.clone(),
            line: *line,
            msg: format!("unknown key: {key}"),
        });
    }

    let spec = ExperimentSpec {
        base,
        space,
        n_real,
        n_sim,
        alpha,
        strategies,
        n_init,
        n_total,
        seeds: (0..num_seeds).collect(),
        extractor,
        master_seed,
        nonident_pair,
    };
    spec.validate()?;
    Ok(spec)
}

/// Load a grid file: CSV whose header names the free parameters, one theta
/// per row.
pub fn load_grid(path: &Path, space: &ParamSpace) -> Result<Vec<Vec<f64>>> {
    let file = path.display().to_string();
    let reader = BufReader::new(File::open(path)?);
    let mut lines = reader.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse {
            file: file.clone(),
            line: 1,
            msg: "empty grid file".into(),
        })??;
    let cols: Vec<String> = header.split(',').map(|s| s.trim().to_string()).collect();
    let mut order = Vec::new();
    for name in space.names() {
        let idx = cols.iter().position(|c| c == name).ok_or_else(|| Error::Parse {
            file: file.clone(),
            line: 1,
            msg: format!("grid file is missing column {name}"),
        })?;
        order.push(idx);
    }

    let mut grid = Vec::new();
    for (idx, line) in lines.enumerate() {
        let lineno = idx + 2;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(|s| s.trim()).collect();
        let mut theta = Vec::with_capacity(space.dim());
        for &col in &order {
            let raw = fields.get(col).ok_or_else(|| Error::Parse {
                file: file.clone(),
                line: lineno,
                msg: "row has too few columns".into(),
            })?;
            let v: f64 = raw.parse().map_err(|_| Error::Parse {
                file: file.clone(),
                line: lineno,
                msg: format!("invalid number: {raw}"),
            })?;
            theta.push(v);
        }
        if !space.contains(&theta) {
            return Err(Error::Parse {
                file: file.clone(),
                line: lineno,
                msg: format!("theta out of bounds: {theta:?}"),
            });
        }
        grid.push(theta);
    }
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_file(dir: &Path, name: &str, content: &str) -> std::path::PathBuf {
        let path = dir.join(name);
        let mut f = File::create(&path).unwrap();
        f.write_all(content.as_bytes()).unwrap();
        path
    }

    const MINIMAL: &str = "\
# two-parameter toy
num_noise = 500            # truth
lambda_a_1 = 1e-12
session_open = 09:30
session_close = 10:30
series_start = 09:40
series_end = 10:10
sampling_interval = 10s
free_params = num_noise, lambda_a_1
min_num_noise = 250
max_num_noise = 750
N_real = 20
n_sim = 10
num_seeds = 2
seed = 5
";

    #[test]
    fn minimal_spec_parses() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(dir.path(), "spec.txt", MINIMAL);
        let spec = load_spec(&path).unwrap();
        assert_eq!(spec.base.num_noise, 500);
        assert_eq!(spec.base.session_open, 9 * 3600 * 1_000_000_000 + 1800 * 1_000_000_000);
        assert_eq!(spec.base.sampling_interval, 10_000_000_000);
        assert_eq!(spec.space.dim(), 2);
        assert_eq!(spec.space.defs()[0].lower, 250.0);
        assert_eq!(spec.seeds, vec![0, 1]);
        assert_eq!(spec.n_init, 4);
        assert_eq!(spec.master_seed, 5);
    }

    #[test]
    fn unknown_key_names_the_key() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(dir.path(), "spec.txt", "num_noize = 5\n");
        let err = load_spec(&path).unwrap_err();
        assert!(err.to_string().contains("num_noize"), "{err}");
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(dir.path(), "spec.txt", "num_noise 500\n");
        let err = load_spec(&path).unwrap_err();
        assert!(err.to_string().contains("line 1"), "{err}");
    }

    #[test]
    fn grid_round_trip_and_bounds_check() {
        let dir = tempfile::tempdir().unwrap();
        let spec_path = write_file(dir.path(), "spec.txt", MINIMAL);
        let spec = load_spec(&spec_path).unwrap();
        let grid_path = write_file(
            dir.path(),
            "grid.csv",
            "num_noise,lambda_a_1\n300,1e-12\n700,5e-13\n",
        );
        let grid = load_grid(&grid_path, &spec.space).unwrap();
        assert_eq!(grid, vec![vec![300.0, 1e-12], vec![700.0, 5e-13]]);

        let bad = write_file(dir.path(), "bad.csv", "num_noise,lambda_a_1\n9000,1e-12\n");
        let err = load_grid(&bad, &spec.space).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn spec_echo_reparses_identically() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(dir.path(), "spec.txt", MINIMAL);
        let spec = load_spec(&path).unwrap();
        let echo = crate::harness::spec_echo(&spec);
        let echo_path = write_file(dir.path(), "echo.txt", &echo);
        let spec2 = load_spec(&echo_path).unwrap();
        assert_eq!(spec2.base, spec.base);
        assert_eq!(spec2.n_real, spec.n_real);
        assert_eq!(spec2.space.names(), spec.space.names());
    }
}
