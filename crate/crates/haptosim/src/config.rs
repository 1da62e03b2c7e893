//! Line-oriented run configuration: `[section]` headers over `key = value`
//! lines, `#` comments, unknown keys rejected with line numbers.
//!
//! Functions are given as tags with named parameters, e.g.
//! `d = plateau:center=0.5,halfwidth=0.2` or `g = linear:c=1`. Tabulated
//! fallbacks use pipe-separated samples: `tab:x=0|0.5|1,y=0|0.25|1`.

use crate::func::{MonotoneTable, RateFn, Reaction, SpaceProfile};
use crate::grid::Grid1D;
use crate::problem::ProblemSpec;
use crate::solver::StepControls;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemBlock {
    pub interval: (f64, f64),
    pub d: SpaceProfile,
    pub f: Reaction,
    pub rho: RateFn,
    pub g: RateFn,
    pub u0: SpaceProfile,
    pub w0: SpaceProfile,
    pub delta: f64,
    pub n_samples: usize,
    pub u_scan: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscretizationBlock {
    pub n: usize,
    pub cfl: f64,
    /// `None` means the grid-scaled default `h / 4`.
    pub dt_max: Option<f64>,
    pub tol_lb: f64,
    pub tol_ub: f64,
    pub theta_w: bool,
    pub ceil_u: f64,
    pub ceil_w: f64,
    pub ceil_inv_g: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleBlock {
    pub eps_list: Vec<f64>,
    pub a_param: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum OutputTimes {
    /// `k` uniformly spaced times on `[0, T]`, endpoints included.
    Count(usize),
    Explicit(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentBlock {
    pub t_final: f64,
    pub output_times: OutputTimes,
    pub d_floor: f64,
    pub margin: f64,
    pub battery_size: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputBlock {
    pub directory: String,
    pub plots: bool,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub problem: ProblemBlock,
    pub discretization: DiscretizationBlock,
    pub schedule: ScheduleBlock,
    pub experiment: ExperimentBlock,
    pub output: OutputBlock,
}

impl RunConfig {
    pub fn build_problem(&self) -> ProblemSpec {
        let p = &self.problem;
        ProblemSpec {
            a: p.interval.0,
            b: p.interval.1,
            d: p.d.clone(),
            f: p.f.clone(),
            rho: p.rho.clone(),
            g: p.g.clone(),
            u0: p.u0.clone(),
            w0: p.w0.clone(),
            delta: p.delta,
        }
    }

    pub fn build_grid(&self) -> Result<Grid1D> {
        Grid1D::new(
            self.problem.interval.0,
            self.problem.interval.1,
            self.discretization.n,
        )
    }

    pub fn step_controls(&self, grid: &Grid1D) -> StepControls {
        let d = &self.discretization;
        StepControls {
            cfl: d.cfl,
            dt_max: d.dt_max.unwrap_or(grid.h / 4.0),
            tol_lb: d.tol_lb,
            tol_ub: d.tol_ub,
            theta_w: d.theta_w,
            ceil_u_inf: d.ceil_u,
            ceil_w_w12: d.ceil_w,
            ceil_inv_g: d.ceil_inv_g,
        }
    }

    pub fn output_times(&self) -> Vec<f64> {
        let t = self.experiment.t_final;
        match &self.experiment.output_times {
            OutputTimes::Count(k) => (0..*k)
                .map(|i| t * i as f64 / (*k as f64 - 1.0))
                .collect(),
            OutputTimes::Explicit(v) => v.clone(),
        }
    }
}

struct Line<'a> {
    number: usize,
    section: String,
    key: String,
    value: &'a str,
    used: bool,
}

fn parse_err(path: &str, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.into(),
        line,
        msg: msg.into(),
    }
}

fn invalid(path: &str, line: usize, key: &str, msg: impl Into<String>) -> Error {
    Error::InvalidValue {
        path: path.into(),
        line,
        key: key.into(),
        msg: msg.into(),
    }
}

struct Block<'a> {
    path: String,
    lines: Vec<Line<'a>>,
}

impl<'a> Block<'a> {
    fn take(&mut self, section: &str, key: &str) -> Option<(usize, &'a str)> {
        self.lines
            .iter_mut()
            .find(|l| l.section == section && l.key == key && !l.used)
            .map(|l| {
                l.used = true;
                (l.number, l.value)
            })
    }

    fn f64(&mut self, section: &str, key: &str, default: Option<f64>) -> Result<f64> {
        match self.take(section, key) {
            Some((ln, v)) => v
                .parse::<f64>()
                .map_err(|_| invalid(&self.path, ln, key, format!("expected a number, got `{v}`"))),
            None => default.ok_or_else(|| {
                parse_err(&self.path, 0, format!("missing required key `{key}` in [{section}]"))
            }),
        }
    }

    fn usize(&mut self, section: &str, key: &str, default: Option<usize>) -> Result<usize> {
        match self.take(section, key) {
            Some((ln, v)) => v.parse::<usize>().map_err(|_| {
                invalid(&self.path, ln, key, format!("expected a nonnegative integer, got `{v}`"))
            }),
            None => default.ok_or_else(|| {
                parse_err(&self.path, 0, format!("missing required key `{key}` in [{section}]"))
            }),
        }
    }

    fn bool(&mut self, section: &str, key: &str, default: bool) -> Result<bool> {
        match self.take(section, key) {
            Some((ln, v)) => match v {
                "true" | "on" | "1" => Ok(true),
                "false" | "off" | "0" => Ok(false),
                _ => Err(invalid(&self.path, ln, key, format!("expected true/false, got `{v}`"))),
            },
            None => Ok(default),
        }
    }

    fn string(&mut self, section: &str, key: &str, default: &str) -> String {
        self.take(section, key)
            .map(|(_, v)| v.to_string())
            .unwrap_or_else(|| default.to_string())
    }
}

fn parse_tag(value: &str) -> (String, Vec<(String, String)>) {
    match value.split_once(':') {
        None => (value.trim().to_string(), vec![]),
        Some((name, rest)) => {
            let params = rest
                .split(',')
                .filter(|s| !s.trim().is_empty())
                .map(|kv| match kv.split_once('=') {
                    Some((k, v)) => (k.trim().to_string(), v.trim().to_string()),
                    None => (kv.trim().to_string(), String::new()),
                })
                .collect();
            (name.trim().to_string(), params)
        }
    }
}

struct TagReader<'a> {
    path: &'a str,
    line: usize,
    key: &'a str,
    params: Vec<(String, String)>,
}

impl TagReader<'_> {
    fn f64(&mut self, name: &str) -> Result<f64> {
        let pos = self
            .params
            .iter()
            .position(|(k, _)| k == name)
            .ok_or_else(|| {
                invalid(self.path, self.line, self.key, format!("missing parameter `{name}`"))
            })?;
        let (_, v) = self.params.remove(pos);
        v.parse::<f64>()
            .map_err(|_| invalid(self.path, self.line, self.key, format!("parameter `{name}`: not a number: `{v}`")))
    }

    fn u32(&mut self, name: &str) -> Result<u32> {
        Ok(self.f64(name)? as u32)
    }

    fn samples(&mut self, name: &str) -> Result<Vec<f64>> {
        let pos = self
            .params
            .iter()
            .position(|(k, _)| k == name)
            .ok_or_else(|| {
                invalid(self.path, self.line, self.key, format!("missing parameter `{name}`"))
            })?;
        let (_, v) = self.params.remove(pos);
        v.split('|')
            .map(|s| {
                s.trim().parse::<f64>().map_err(|_| {
                    invalid(self.path, self.line, self.key, format!("bad sample `{s}` in `{name}`"))
                })
            })
            .collect()
    }

    fn finish(self) -> Result<()> {
        if let Some((k, _)) = self.params.first() {
            return Err(invalid(
                self.path,
                self.line,
                self.key,
                format!("unknown parameter `{k}`"),
            ));
        }
        Ok(())
    }
}

fn parse_space_profile(
    path: &str,
    line: usize,
    key: &str,
    value: &str,
    interval: (f64, f64),
) -> Result<SpaceProfile> {
    let (name, params) = parse_tag(value);
    let mut r = TagReader {
        path,
        line,
        key,
        params,
    };
    let (a, len) = (interval.0, interval.1 - interval.0);
    let profile = match name.as_str() {
        "const" => SpaceProfile::Constant(r.f64("c")?),
        "cosine" => SpaceProfile::Cosine {
            offset: r.f64("offset")?,
            amp: r.f64("amp")?,
            k: r.u32("k")?,
            a,
            len,
        },
        "plateau" => SpaceProfile::PlateauSq {
            center: r.f64("center")?,
            halfwidth: r.f64("halfwidth")?,
        },
        "sinsq" => SpaceProfile::SinSq {
            k: r.u32("k")?,
            a,
            len,
        },
        "tab" => {
            let xs = r.samples("x")?;
            let ys = r.samples("y")?;
            SpaceProfile::Tabulated(MonotoneTable::new(xs, ys).map_err(|e| {
                invalid(path, line, key, format!("bad table: {e}"))
            })?)
        }
        other => {
            return Err(invalid(
                path,
                line,
                key,
                format!("unknown profile tag `{other}` (const, cosine, plateau, sinsq, tab)"),
            ))
        }
    };
    r.finish()?;
    Ok(profile)
}

fn parse_rate(path: &str, line: usize, key: &str, value: &str) -> Result<RateFn> {
    let (name, params) = parse_tag(value);
    let mut r = TagReader {
        path,
        line,
        key,
        params,
    };
    let rate = match name.as_str() {
        "const" => RateFn::Const(r.f64("c")?),
        "linear" => RateFn::Linear { slope: r.f64("c")? },
        "logistic" => RateFn::Logistic { rate: r.f64("c")? },
        "power" => RateFn::Power {
            coeff: r.f64("c")?,
            exponent: r.f64("p")?,
        },
        "tab" => {
            let xs = r.samples("x")?;
            let ys = r.samples("y")?;
            RateFn::Tabulated(MonotoneTable::new(xs, ys).map_err(|e| {
                invalid(path, line, key, format!("bad table: {e}"))
            })?)
        }
        other => {
            return Err(invalid(
                path,
                line,
                key,
                format!("unknown rate tag `{other}` (const, linear, logistic, power, tab)"),
            ))
        }
    };
    r.finish()?;
    Ok(rate)
}

fn parse_reaction(path: &str, line: usize, key: &str, value: &str) -> Result<Reaction> {
    let (name, params) = parse_tag(value);
    let mut r = TagReader {
        path,
        line,
        key,
        params,
    };
    let reaction = match name.as_str() {
        "zero" => Reaction::Zero,
        "const" => Reaction::Const(r.f64("c")?),
        "logistic" => Reaction::LogisticU { r: r.f64("r")? },
        "tissue" => Reaction::TissueLogistic,
        other => {
            return Err(invalid(
                path,
                line,
                key,
                format!("unknown reaction tag `{other}` (zero, const, logistic, tissue)"),
            ))
        }
    };
    r.finish()?;
    Ok(reaction)
}

const KNOWN_KEYS: &[(&str, &[&str])] = &[
    (
        "problem",
        &[
            "interval", "d", "f", "rho", "g", "u0", "w0", "delta", "n_samples", "u_scan",
        ],
    ),
    (
        "discretization",
        &[
            "n", "cfl", "dt_max", "tol_lb", "tol_ub", "theta_w", "ceil_u", "ceil_w", "ceil_inv_g",
        ],
    ),
    ("schedule", &["eps_list", "eps_base", "eps_ratio", "eps_count", "A"]),
    (
        "experiment",
        &["T", "output_times", "d_floor", "margin", "battery_size"],
    ),
    ("output", &["directory", "plots", "seed"]),
];

/// Parse configuration text. `path` is used in error messages only.
pub fn parse_config(text: &str, path: &str) -> Result<RunConfig> {
    let mut lines = Vec::new();
    let mut section = String::new();
    for (idx, raw) in text.lines().enumerate() {
        let number = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            section = name.trim().to_string();
            if !KNOWN_KEYS.iter().any(|(s, _)| *s == section) {
                return Err(parse_err(path, number, format!("unknown section `[{section}]`")));
            }
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            parse_err(path, number, format!("expected `key = value`, got `{line}`"))
        })?;
        let key = key.trim().to_string();
        if section.is_empty() {
            return Err(parse_err(path, number, "key before any [section] header"));
        }
        let known = KNOWN_KEYS
            .iter()
            .find(|(s, _)| *s == section)
            .map(|(_, keys)| keys.contains(&key.as_str()))
            .unwrap_or(false);
        if !known {
            return Err(Error::UnknownKey {
                path: path.into(),
                line: number,
                key: format!("{section}.{key}"),
            });
        }
        if lines
            .iter()
            .any(|l: &Line| l.section == section && l.key == key)
        {
            return Err(parse_err(path, number, format!("duplicate key `{key}` in [{section}]")));
        }
        lines.push(Line {
            number,
            section: section.clone(),
            key,
            value: value.trim(),
            used: false,
        });
    }
    let mut block = Block {
        path: path.to_string(),
        lines,
    };

    // [problem]
    let (iv_line, iv_raw) = block
        .take("problem", "interval")
        .ok_or_else(|| parse_err(path, 0, "missing required key `interval` in [problem]"))?;
    let iv: Vec<f64> = iv_raw
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| invalid(path, iv_line, "interval", format!("expected `a,b`, got `{iv_raw}`")))?;
    if iv.len() != 2 || iv[0] >= iv[1] {
        return Err(invalid(path, iv_line, "interval", "expected `a,b` with a < b"));
    }
    let interval = (iv[0], iv[1]);

    let profile_key = |block: &mut Block, key: &'static str, default: &str| -> Result<SpaceProfile> {
        let (line, v) = block
            .take("problem", key)
            .map(|(l, v)| (l, v.to_string()))
            .unwrap_or((0, default.to_string()));
        parse_space_profile(path, line, key, &v, interval)
    };
    let d = profile_key(&mut block, "d", "const:c=1")?;
    let u0 = profile_key(&mut block, "u0", "const:c=1")?;
    let w0 = profile_key(&mut block, "w0", "const:c=0.5")?;
    let (f_line, f_raw) = block
        .take("problem", "f")
        .map(|(l, v)| (l, v.to_string()))
        .unwrap_or((0, "zero".to_string()));
    let f = parse_reaction(path, f_line, "f", &f_raw)?;
    let (rho_line, rho_raw) = block
        .take("problem", "rho")
        .map(|(l, v)| (l, v.to_string()))
        .unwrap_or((0, "const:c=0".to_string()));
    let rho = parse_rate(path, rho_line, "rho", &rho_raw)?;
    let (g_line, g_raw) = block
        .take("problem", "g")
        .map(|(l, v)| (l, v.to_string()))
        .unwrap_or((0, "linear:c=1".to_string()));
    let g = parse_rate(path, g_line, "g", &g_raw)?;
    let delta = block.f64("problem", "delta", None)?;
    if delta <= 0.0 {
        return Err(invalid(path, 0, "delta", "delta must be positive"));
    }
    let n_samples = block.usize("problem", "n_samples", Some(2048))?;
    let u_scan = match block.take("problem", "u_scan") {
        Some((ln, v)) => Some(v.parse::<f64>().map_err(|_| {
            invalid(path, ln, "u_scan", format!("expected a number, got `{v}`"))
        })?),
        None => None,
    };

    // [discretization]
    let n = block.usize("discretization", "n", Some(200))?;
    let cfl = block.f64("discretization", "cfl", Some(0.45))?;
    if !(cfl > 0.0 && cfl <= 1.0) {
        return Err(invalid(path, 0, "cfl", "cfl must lie in (0, 1]"));
    }
    let dt_max = match block.take("discretization", "dt_max") {
        Some((ln, v)) => Some(v.parse::<f64>().map_err(|_| {
            invalid(path, ln, "dt_max", format!("expected a number, got `{v}`"))
        })?),
        None => None,
    };
    let tol_lb = block.f64("discretization", "tol_lb", Some(1e-8))?;
    let tol_ub = block.f64("discretization", "tol_ub", Some(1e-8))?;
    let theta_w = block.bool("discretization", "theta_w", true)?;
    let ceil_u = block.f64("discretization", "ceil_u", Some(1e9))?;
    let ceil_w = block.f64("discretization", "ceil_w", Some(1e9))?;
    let ceil_inv_g = block.f64("discretization", "ceil_inv_g", Some(1e12))?;

    // [schedule]
    let eps_list: Vec<f64> = if let Some((ln, v)) = block.take("schedule", "eps_list") {
        v.split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| invalid(path, ln, "eps_list", format!("bad number in `{v}`")))?
    } else {
        let base = block.f64("schedule", "eps_base", Some(1e-2))?;
        let ratio = block.f64("schedule", "eps_ratio", Some(0.1))?;
        let count = block.usize("schedule", "eps_count", Some(3))?;
        if !(ratio > 0.0 && ratio < 1.0) {
            return Err(invalid(path, 0, "eps_ratio", "ratio must lie in (0, 1)"));
        }
        (0..count).map(|k| base * ratio.powi(k as i32)).collect()
    };
    if eps_list.windows(2).any(|p| p[1] >= p[0]) {
        return Err(invalid(path, 0, "eps_list", "eps values must be strictly decreasing"));
    }
    if eps_list.iter().any(|&e| e <= 0.0) {
        return Err(invalid(path, 0, "eps_list", "eps values must be positive"));
    }
    let a_param = block.f64("schedule", "A", Some(crate::reg::default_a()))?;

    // [experiment]
    let t_final = block.f64("experiment", "T", Some(1.0))?;
    if t_final <= 0.0 {
        return Err(invalid(path, 0, "T", "T must be positive"));
    }
    let output_times = match block.take("experiment", "output_times") {
        None => OutputTimes::Count(51),
        Some((ln, v)) => {
            if v.contains(',') || v.contains('.') {
                let times: Vec<f64> = v
                    .split(',')
                    .map(|s| s.trim().parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| invalid(path, ln, "output_times", format!("bad number in `{v}`")))?;
                OutputTimes::Explicit(times)
            } else {
                let k = v.parse::<usize>().map_err(|_| {
                    invalid(path, ln, "output_times", format!("expected count or list, got `{v}`"))
                })?;
                if k < 2 {
                    return Err(invalid(path, ln, "output_times", "count must be >= 2"));
                }
                OutputTimes::Count(k)
            }
        }
    };
    let d_floor = block.f64("experiment", "d_floor", Some(0.01))?;
    let margin = block.f64("experiment", "margin", Some(0.1))?;
    let battery_size = block.usize("experiment", "battery_size", Some(6))?;

    // [output]
    let directory = block.string("output", "directory", "out");
    let plots = block.bool("output", "plots", false)?;
    let seed = block.usize("output", "seed", Some(0))? as u64;

    Ok(RunConfig {
        problem: ProblemBlock {
            interval,
            d,
            f,
            rho,
            g,
            u0,
            w0,
            delta,
            n_samples,
            u_scan,
        },
        discretization: DiscretizationBlock {
            n,
            cfl,
            dt_max,
            tol_lb,
            tol_ub,
            theta_w,
            ceil_u,
            ceil_w,
            ceil_inv_g,
        },
        schedule: ScheduleBlock { eps_list, a_param },
        experiment: ExperimentBlock {
            t_final,
            output_times,
            d_floor,
            margin,
            battery_size,
        },
        output: OutputBlock {
            directory,
            plots,
            seed,
        },
    })
}

fn render_space_profile(p: &SpaceProfile) -> String {
    match p {
        SpaceProfile::Constant(c) => format!("const:c={c}"),
        SpaceProfile::Cosine {
            offset, amp, k, ..
        } => format!("cosine:offset={offset},amp={amp},k={k}"),
        SpaceProfile::PlateauSq { center, halfwidth } => {
            format!("plateau:center={center},halfwidth={halfwidth}")
        }
        SpaceProfile::SinSq { k, .. } => format!("sinsq:k={k}"),
        SpaceProfile::Tabulated(t) => render_table(t),
    }
}

fn render_table(t: &MonotoneTable) -> String {
    let (xs, ys) = t.nodes();
    let join = |v: &[f64]| {
        v.iter()
            .map(|x| format!("{x}"))
            .collect::<Vec<_>>()
            .join("|")
    };
    format!("tab:x={},y={}", join(xs), join(ys))
}

fn render_rate(r: &RateFn) -> String {
    match r {
        RateFn::Const(c) => format!("const:c={c}"),
        RateFn::Linear { slope } => format!("linear:c={slope}"),
        RateFn::Logistic { rate } => format!("logistic:c={rate}"),
        RateFn::Power { coeff, exponent } => format!("power:c={coeff},p={exponent}"),
        RateFn::Tabulated(t) => render_table(t),
    }
}

fn render_reaction(f: &Reaction) -> String {
    match f {
        Reaction::Zero => "zero".into(),
        Reaction::Const(c) => format!("const:c={c}"),
        Reaction::LogisticU { r } => format!("logistic:r={r}"),
        Reaction::TissueLogistic => "tissue".into(),
    }
}

/// Render a configuration as canonical text; `parse_config` of the result
/// reproduces the configuration exactly.
pub fn render_config(cfg: &RunConfig) -> String {
    let mut s = String::new();
    let p = &cfg.problem;
    s.push_str("[problem]\n");
    s.push_str(&format!("interval = {},{}\n", p.interval.0, p.interval.1));
    s.push_str(&format!("d = {}\n", render_space_profile(&p.d)));
    s.push_str(&format!("f = {}\n", render_reaction(&p.f)));
    s.push_str(&format!("rho = {}\n", render_rate(&p.rho)));
    s.push_str(&format!("g = {}\n", render_rate(&p.g)));
    s.push_str(&format!("u0 = {}\n", render_space_profile(&p.u0)));
    s.push_str(&format!("w0 = {}\n", render_space_profile(&p.w0)));
    s.push_str(&format!("delta = {}\n", p.delta));
    s.push_str(&format!("n_samples = {}\n", p.n_samples));
    if let Some(u) = p.u_scan {
        s.push_str(&format!("u_scan = {u}\n"));
    }
    let d = &cfg.discretization;
    s.push_str("\n[discretization]\n");
    s.push_str(&format!("n = {}\n", d.n));
    s.push_str(&format!("cfl = {}\n", d.cfl));
    if let Some(dt) = d.dt_max {
        s.push_str(&format!("dt_max = {dt}\n"));
    }
    s.push_str(&format!("tol_lb = {}\n", d.tol_lb));
    s.push_str(&format!("tol_ub = {}\n", d.tol_ub));
    s.push_str(&format!("theta_w = {}\n", d.theta_w));
    s.push_str(&format!("ceil_u = {}\n", d.ceil_u));
    s.push_str(&format!("ceil_w = {}\n", d.ceil_w));
    s.push_str(&format!("ceil_inv_g = {}\n", d.ceil_inv_g));
    let sc = &cfg.schedule;
    s.push_str("\n[schedule]\n");
    s.push_str(&format!(
        "eps_list = {}\n",
        sc.eps_list
            .iter()
            .map(|e| format!("{e}"))
            .collect::<Vec<_>>()
            .join(",")
    ));
    s.push_str(&format!("A = {}\n", sc.a_param));
    let e = &cfg.experiment;
    s.push_str("\n[experiment]\n");
    s.push_str(&format!("T = {}\n", e.t_final));
    match &e.output_times {
        OutputTimes::Count(k) => s.push_str(&format!("output_times = {k}\n")),
        OutputTimes::Explicit(v) => s.push_str(&format!(
            "output_times = {}\n",
            v.iter().map(|t| format!("{t}")).collect::<Vec<_>>().join(",")
        )),
    }
    s.push_str(&format!("d_floor = {}\n", e.d_floor));
    s.push_str(&format!("margin = {}\n", e.margin));
    s.push_str(&format!("battery_size = {}\n", e.battery_size));
    let o = &cfg.output;
    s.push_str("\n[output]\n");
    s.push_str(&format!("directory = {}\n", o.directory));
    s.push_str(&format!("plots = {}\n", o.plots));
    s.push_str(&format!("seed = {}\n", o.seed));
    s
}

/// The canonical plateau test configuration.
pub fn plateau_example() -> &'static str {
    "\
# Strongly degenerate plateau test problem on (0, 1).
[problem]
interval = 0,1
d = plateau:center=0.5,halfwidth=0.2
f = zero
rho = const:c=0
g = linear:c=1
u0 = cosine:offset=1,amp=0.5,k=2
w0 = cosine:offset=0.5,amp=0.3,k=1
delta = 0.2

[discretization]
n = 200

[schedule]
eps_list = 1e-2,1e-3,1e-4

[experiment]
T = 1

[output]
directory = out
"
}
