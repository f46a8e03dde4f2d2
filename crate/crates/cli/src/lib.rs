//! Batch front-end: every experiment is described by a flat key=value
//! configuration (from flags, from a config file, or both), validated as a
//! whole, executed, and written out as CSV or JSON with the full
//! configuration echoed into the header. Identical configuration plus seed
//! reproduces byte-identical data lines; wall-clock metadata lives only in
//! `#` comment lines.

use pvlab::distribution::{
    coarse_grid_audit, extremal_joint_moments, joint_moment_audit, loglog_slope,
    max_short_sum_audit, scan_family, short_sum_moment_audit, standard_v_grid, tail_moment_audit,
    AuditReport, SampleMode,
};
use pvlab::families::{build_extremal_family, extremal_function, FamilyContext, FamilySpec, OddPoly};
use pvlab::finite_field::is_prime;
use pvlab::gmax::{g_asymptotic, g_bruteforce, g_exact};
use pvlab::partial_sums::prefix_profile;
use pvlab::random_model::{sample_m_x, trace_lower_bound_probe, TraceSampler};
use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, PartialEq)]
pub enum CliError {
    /// bad usage, unparsable input, failed validation -> exit 2
    Config(Vec<String>),
    /// an experiment refused to produce numbers -> exit 3
    Numeric { audit: String, message: String },
    Io(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(diags) => write!(f, "configuration error: {}", diags.join("; ")),
            CliError::Numeric { audit, message } => write!(f, "numeric failure in {audit}: {message}"),
            CliError::Io(msg) => write!(f, "io error: {msg}"),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric { .. } => 3,
            CliError::Io(_) => 4,
        }
    }

    /// Machine-readable single-line error record (written to stderr).
    pub fn record(&self) -> String {
        match self {
            CliError::Config(diags) => format!(
                "{{\"error\":\"config\",\"diagnostics\":[{}]}}",
                diags.iter().map(|d| json_string(d)).collect::<Vec<_>>().join(",")
            ),
            CliError::Numeric { audit, message } => format!(
                "{{\"error\":\"numeric\",\"audit\":{},\"message\":{}}}",
                json_string(audit),
                json_string(message)
            ),
            CliError::Io(msg) => format!("{{\"error\":\"io\",\"message\":{}}}", json_string(msg)),
        }
    }
}

fn json_string(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c if (c as u32) < 0x20 => out.push_str(&format!("\\u{:04x}", c as u32)),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Scan,
    Gmax,
    RandomModel,
    Constants,
    Extremal,
    Audit,
}

impl Command {
    fn parse(s: &str) -> Option<Command> {
        Some(match s {
            "scan" => Command::Scan,
            "gmax" => Command::Gmax,
            "random-model" => Command::RandomModel,
            "constants" => Command::Constants,
            "extremal" => Command::Extremal,
            "audit" => Command::Audit,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Command::Scan => "scan",
            Command::Gmax => "gmax",
            Command::RandomModel => "random-model",
            Command::Constants => "constants",
            Command::Extremal => "extremal",
            Command::Audit => "audit",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

/// Flat experiment description. Every field appears as a `key=value` pair in
/// the config format and as a `--key value` flag on the command line; the
/// echo of the resolved configuration round-trips losslessly.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub command: Command,
    pub format: Format,
    pub seed: u64,
    pub workers: Option<usize>,
    pub output: Option<PathBuf>,
    pub values: BTreeMap<String, String>,
}

impl ExperimentConfig {
    pub fn new(command: Command) -> Self {
        ExperimentConfig {
            command,
            format: Format::Csv,
            seed: 0,
            workers: None,
            output: None,
            values: BTreeMap::new(),
        }
    }

    pub fn set(mut self, key: &str, value: &str) -> Self {
        self.values.insert(key.to_string(), value.to_string());
        self
    }

    /// Canonical key=value rendering (the config-file format).
    pub fn to_key_values(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("command={}\n", self.command.name()));
        out.push_str(&format!(
            "format={}\n",
            match self.format {
                Format::Csv => "csv",
                Format::Json => "json",
            }
        ));
        out.push_str(&format!("seed={}\n", self.seed));
        if let Some(w) = self.workers {
            out.push_str(&format!("workers={w}\n"));
        }
        if let Some(o) = &self.output {
            out.push_str(&format!("output={}\n", o.display()));
        }
        for (k, v) in &self.values {
            out.push_str(&format!("{k}={v}\n"));
        }
        out
    }

    /// Parses the config-file format; unknown structural lines are errors.
    pub fn from_key_values(text: &str) -> Result<Self, CliError> {
        let mut command = None;
        let mut config_values = BTreeMap::new();
        let mut format = Format::Csv;
        let mut seed = 0u64;
        let mut workers = None;
        let mut output = None;
        let mut diags = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                diags.push(format!("line {}: expected key=value, got {raw:?}", lineno + 1));
                continue;
            };
            let k = k.trim();
            let v = v.trim();
            match k {
                "command" => match Command::parse(v) {
                    Some(c) => command = Some(c),
                    None => diags.push(format!("unknown command {v:?}")),
                },
                "format" => match v {
                    "csv" => format = Format::Csv,
                    "json" => format = Format::Json,
                    _ => diags.push(format!("unknown format {v:?} (expected csv or json)")),
                },
                "seed" => match v.parse() {
                    Ok(s) => seed = s,
                    Err(_) => diags.push(format!("seed must be a 64-bit integer, got {v:?}")),
                },
                "workers" => match v.parse() {
                    Ok(w) => workers = Some(w),
                    Err(_) => diags.push(format!("workers must be a positive integer, got {v:?}")),
                },
                "output" => output = Some(PathBuf::from(v)),
                _ => {
                    if KNOWN_KEYS.contains(&k) {
                        config_values.insert(k.to_string(), v.to_string());
                    } else {
                        diags.push(format!("unknown key {k:?}"));
                    }
                }
            }
        }
        let Some(command) = command else {
            diags.push("missing command=...".into());
            return Err(CliError::Config(diags));
        };
        if !diags.is_empty() {
            return Err(CliError::Config(diags));
        }
        Ok(ExperimentConfig {
            command,
            format,
            seed,
            workers,
            output,
            values: config_values,
        })
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(|s| s.as_str())
    }

    fn get_u64(&self, key: &str, default: u64) -> Result<u64, String> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| format!("{key} must be an integer, got {v:?}")),
        }
    }

    fn get_f64(&self, key: &str, default: f64) -> Result<f64, String> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| format!("{key} must be a number, got {v:?}")),
        }
    }

    fn get_bool(&self, key: &str) -> bool {
        matches!(self.get(key), Some("true") | Some("1") | Some("yes"))
    }

    fn get_list_f64(&self, key: &str) -> Result<Option<Vec<f64>>, String> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v
                .split(',')
                .map(|x| x.trim().parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map(Some)
                .map_err(|_| format!("{key} must be a comma-separated list of numbers")),
        }
    }

    fn get_list_u64(&self, key: &str) -> Result<Option<Vec<u64>>, String> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v
                .split(',')
                .map(|x| x.trim().parse::<u64>())
                .collect::<Result<Vec<_>, _>>()
                .map(Some)
                .map_err(|_| format!("{key} must be a comma-separated list of integers")),
        }
    }

    /// Family described by the config, when the command needs one.
    pub fn family_spec(&self) -> Result<FamilySpec, String> {
        let family = self.get("family").ok_or("missing --family")?;
        match family {
            "birch" => {
                let p = self.get_u64("p", 0)?;
                let coeffs = match self.get("g") {
                    None => vec![0i64, 1], // t^3
                    Some(v) => v
                        .split([',', ' '])
                        .filter(|s| !s.is_empty())
                        .map(|x| x.parse::<i64>())
                        .collect::<Result<Vec<_>, _>>()
                        .map_err(|_| "g must be a list of integers (odd coefficients)")?,
                };
                let g = OddPoly::new(coeffs).map_err(|e| e.to_string())?;
                Ok(FamilySpec::birch(p, g))
            }
            "kloosterman" => {
                let p = self.get_u64("p", 0)?;
                let d = self.get_u64("d", 1)?;
                Ok(FamilySpec::kloosterman(p, d))
            }
            "hyper-kloosterman-twist" => {
                let p = self.get_u64("p", 0)?;
                let r = self.get_u64("r", 3)? as u32;
                Ok(FamilySpec::hyper_kloosterman_twist(p, r))
            }
            "extremal" => {
                let m = self.get_u64("m", 0)?;
                Ok(FamilySpec::extremal(m))
            }
            other => Err(format!(
                "unknown family {other:?} (expected birch, kloosterman, hyper-kloosterman-twist or extremal)"
            )),
        }
    }

    fn sample_mode(&self) -> Result<SampleMode, String> {
        if self.get_bool("exhaustive") {
            Ok(SampleMode::Exhaustive)
        } else {
            let count = self.get_u64("sample", 1000)?;
            Ok(SampleMode::Subsample { count, seed: self.seed })
        }
    }
}

const KNOWN_KEYS: &[&str] = &[
    "family", "p", "m", "d", "r", "g", "exhaustive", "sample", "per-member", "h-max",
    "alpha-grid", "theta-grid", "oracle", "tol", "s-values", "laplace-m", "epsilons",
    "samples", "h-trunc", "mx-samples", "audit", "interval-lens", "max-len", "k",
    "grid-j", "v", "stdout", "u-cut",
];

/// All violations at once; an empty list means the configuration is runnable.
pub fn validate(config: &ExperimentConfig) -> Vec<String> {
    let mut diags = Vec::new();
    let needs_family = matches!(config.command, Command::Scan | Command::Audit);
    if needs_family {
        match config.family_spec() {
            Err(e) => diags.push(e),
            Ok(spec) => {
                // FamilySpec::validate stops at the first violation; re-check
                // the independent constraints so everything surfaces at once.
                use pvlab::families::FamilyKind;
                if !matches!(spec.kind, FamilyKind::Extremal) && !is_prime(spec.m) {
                    diags.push(format!("p = {} is not prime", spec.m));
                }
                match spec.kind {
                    FamilyKind::Kloosterman { d } if d % 2 == 0 || d == 0 => {
                        diags.push(format!("d must be odd and positive, got {d}"));
                    }
                    FamilyKind::HyperKloostermanTwist { r } if r < 3 || r % 2 == 0 || r > 9 => {
                        diags.push(format!("twist order r must be odd in 3..=9, got {r}"));
                    }
                    _ => {}
                }
                if let Err(e) = spec.validate() {
                    let msg = e.to_string();
                    if !diags.iter().any(|d| d.contains(&msg) || msg.contains(d.as_str())) {
                        diags.push(msg);
                    }
                }
            }
        }
        if let Err(e) = config.sample_mode() {
            diags.push(e);
        }
    }
    match config.command {
        Command::Gmax => match config.get_u64("h-max", 9) {
            Err(e) => diags.push(e),
            Ok(h) if h == 0 || h > 64 => diags.push("h-max must be in 1..=64".into()),
            _ => {}
        },
        Command::RandomModel => {
            match config.get_u64("r", 1) {
                Err(e) => diags.push(e),
                Ok(r) if !(1..=3).contains(&r) => {
                    diags.push(format!("sampler rank r must be in 1..=3, got {r}"))
                }
                _ => {}
            }
            if let Err(e) = config.get_list_f64("epsilons") {
                diags.push(e);
            }
        }
        Command::Constants => {
            match config.get_u64("r", 1) {
                Err(e) => diags.push(e),
                Ok(r) if !(1..=3).contains(&r) => {
                    diags.push(format!("model rank r must be in 1..=3, got {r}"))
                }
                _ => {}
            }
            let m = config.get_u64("laplace-m", 1_000_003).unwrap_or(0);
            if let Ok(Some(svals)) = config.get_list_f64("s-values") {
                let cap = (m as f64).powf(1.0 / 3.0);
                for s in svals {
                    if s < 2.0 || s > cap {
                        diags.push(format!(
                            "s = {s} outside the admissible range 2 <= s <= m^(1/3) = {cap:.3}"
                        ));
                    }
                }
            }
        }
        Command::Extremal => match config.get_u64("m", 0) {
            Err(e) => diags.push(e),
            Ok(m) => {
                if let Err(e) = FamilySpec::extremal(m).validate() {
                    diags.push(e.to_string());
                }
            }
        },
        Command::Audit => {
            match config.get("audit") {
                None => diags.push("audit command needs --audit <kind>".into()),
                Some(kind)
                    if ![
                        "joint-moments",
                        "short-sum",
                        "max-short",
                        "tail-moment",
                        "coarse-grid",
                    ]
                    .contains(&kind) =>
                {
                    diags.push(format!("unknown audit kind {kind:?}"))
                }
                _ => {}
            }
            if config.get("audit") == Some("short-sum") {
                if let Ok(spec) = config.family_spec() {
                    if !matches!(spec.kind, pvlab::families::FamilyKind::Kloosterman { .. }) {
                        diags.push("short-sum audit runs on the kloosterman family".into());
                    }
                }
            }
        }
        Command::Scan => {}
    }
    diags
}

/// Parses command-line arguments: `<command> [--key value | --flag]...`
/// with `--config FILE` merged first (explicit flags win).
pub fn parse_args(args: &[String]) -> Result<ExperimentConfig, CliError> {
    let mut diags = Vec::new();
    if args.is_empty() {
        return Err(CliError::Config(vec![usage()]));
    }
    let Some(command) = Command::parse(&args[0]) else {
        return Err(CliError::Config(vec![
            format!("unknown command {:?}", args[0]),
            usage(),
        ]));
    };
    let mut config = ExperimentConfig::new(command);
    let mut overrides: Vec<(String, String)> = Vec::new();
    let mut i = 1;
    const BOOL_FLAGS: &[&str] = &["exhaustive", "oracle", "per-member", "stdout"];
    while i < args.len() {
        let arg = &args[i];
        let Some(key) = arg.strip_prefix("--") else {
            diags.push(format!("unexpected positional argument {arg:?}"));
            i += 1;
            continue;
        };
        if BOOL_FLAGS.contains(&key) {
            overrides.push((key.to_string(), "true".to_string()));
            i += 1;
            continue;
        }
        let Some(value) = args.get(i + 1) else {
            diags.push(format!("--{key} needs a value"));
            break;
        };
        i += 2;
        match key {
            "config" => match fs::read_to_string(value) {
                Ok(text) => match ExperimentConfig::from_key_values(&text) {
                    Ok(file_config) => {
                        if file_config.command != command {
                            diags.push(format!(
                                "config file says command={} but the command line says {}",
                                file_config.command.name(),
                                command.name()
                            ));
                        }
                        config.format = file_config.format;
                        config.seed = file_config.seed;
                        config.workers = file_config.workers;
                        config.output = file_config.output;
                        config.values = file_config.values;
                    }
                    Err(CliError::Config(inner)) => diags.extend(inner),
                    Err(e) => return Err(e),
                },
                Err(e) => diags.push(format!("cannot read config file {value:?}: {e}")),
            },
            "format" => match value.as_str() {
                "csv" => config.format = Format::Csv,
                "json" => config.format = Format::Json,
                _ => diags.push(format!("unknown format {value:?}")),
            },
            "seed" => match value.parse() {
                Ok(s) => config.seed = s,
                Err(_) => diags.push(format!("seed must be an integer, got {value:?}")),
            },
            "workers" => match value.parse() {
                Ok(w) => config.workers = Some(w),
                Err(_) => diags.push(format!("workers must be an integer, got {value:?}")),
            },
            "output" => config.output = Some(PathBuf::from(value)),
            _ if KNOWN_KEYS.contains(&key) => overrides.push((key.to_string(), value.clone())),
            _ => diags.push(format!("unknown flag --{key}")),
        }
    }
    for (k, v) in overrides {
        config.values.insert(k, v);
    }
    if !diags.is_empty() {
        return Err(CliError::Config(diags));
    }
    Ok(config)
}

pub fn usage() -> String {
    "usage: pvlab <scan|gmax|random-model|constants|extremal|audit> [--key value]... \
     [--config FILE] [--seed N] [--workers N] [--output PATH] [--format csv|json]"
        .to_string()
}

fn init_workers(config: &ExperimentConfig) {
    // flag > environment > default. The pool is process-global; results are
    // worker-count independent by construction, so a second init is a no-op.
    let workers = config.workers.or_else(|| {
        std::env::var("PVLAB_WORKERS").ok().and_then(|v| v.parse().ok())
    });
    if let Some(w) = workers {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(w).build_global();
    }
}

/// A rendered artifact: metadata lines (all starting with '#') and the data
/// body. Reruns with the same configuration reproduce `data` byte for byte.
#[derive(Clone, Debug)]
pub struct Artifact {
    pub meta: String,
    pub data: String,
}

impl Artifact {
    pub fn full_text(&self) -> String {
        format!("{}{}", self.meta, self.data)
    }
}

/// Runs a validated configuration and renders the artifact.
pub fn run(config: &ExperimentConfig) -> Result<Artifact, CliError> {
    let diags = validate(config);
    if !diags.is_empty() {
        return Err(CliError::Config(diags));
    }
    init_workers(config);
    let start = Instant::now();
    let data = match config.command {
        Command::Gmax => run_gmax(config)?,
        Command::Scan => run_scan(config)?,
        Command::RandomModel => run_random_model(config)?,
        Command::Constants => run_constants(config)?,
        Command::Extremal => run_extremal(config)?,
        Command::Audit => run_audit(config)?,
    };
    let mut meta = String::new();
    meta.push_str(&format!("# pvlab {} {}\n", VERSION, config.command.name()));
    for line in config.to_key_values().lines() {
        meta.push_str(&format!("# config: {line}\n"));
    }
    meta.push_str(&format!("# wall-time-ms: {}\n", start.elapsed().as_millis()));
    Ok(Artifact { meta, data })
}

/// Executes and writes to the configured destination. With `--output` the
/// artifact goes to that file; `--stdout` additionally (or, without an
/// output path, by default) streams it to standard output, which carries
/// data only — diagnostics go to stderr.
pub fn run_and_write(config: &ExperimentConfig) -> Result<(), CliError> {
    let artifact = run(config)?;
    let to_stdout = config.output.is_none() || config.get_bool("stdout");
    if let Some(path) = &config.output {
        fs::write(path, artifact.full_text()).map_err(|e| CliError::Io(e.to_string()))?;
    }
    if to_stdout {
        let mut out = std::io::stdout().lock();
        out.write_all(artifact.full_text().as_bytes())
            .map_err(|e| CliError::Io(e.to_string()))?;
    }
    Ok(())
}

fn fmt_f(x: f64) -> String {
    if x == x.trunc() && x.abs() < 1e15 {
        format!("{x}")
    } else {
        format!("{x:.12e}")
    }
}

fn run_gmax(config: &ExperimentConfig) -> Result<String, CliError> {
    let h_max = config.get_u64("h-max", 9).map_err(one_diag)?;
    let oracle = config.get_bool("oracle");
    let alpha_grid = config.get_u64("alpha-grid", 4096).map_err(one_diag)? as usize;
    let theta_grid = config.get_u64("theta-grid", 4096).map_err(one_diag)? as usize;
    let mut out = String::from("H,exact,asymptotic,bruteforce,gap\n");
    for h in 1..=h_max {
        let exact = g_exact(h);
        let asym = g_asymptotic(h);
        let bf = if oracle {
            let grids = alpha_grid.max(4 * h as usize);
            let res = g_bruteforce(h, grids, theta_grid.max(4 * h as usize));
            fmt_f(res.bruteforce.unwrap())
        } else {
            String::new()
        };
        out.push_str(&format!(
            "{h},{},{},{bf},{}\n",
            fmt_f(exact),
            fmt_f(asym),
            fmt_f(exact - asym)
        ));
    }
    Ok(out)
}

fn run_scan(config: &ExperimentConfig) -> Result<String, CliError> {
    let spec = config.family_spec().map_err(one_diag)?;
    let mode = config.sample_mode().map_err(one_diag)?;
    let ctx = FamilyContext::new(spec.clone()).map_err(numeric("family"))?;
    let scan = scan_family(&ctx, mode);
    if config.get_bool("per-member") {
        let mut out = String::from("family,m,index,a,b,max_over_sqrt_m,argmax_frac,psi\n");
        for member in &scan.members {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                spec.label(),
                spec.m,
                member.index,
                member.a,
                member.b,
                fmt_f(member.norm_max),
                fmt_f(member.argmax_frac),
                fmt_f(member.psi)
            ));
        }
        return Ok(out);
    }
    let mut out = String::from("family,m,V,phi,psi_plus,psi_minus,count\n");
    for v in standard_v_grid() {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            spec.label(),
            spec.m,
            fmt_f(v),
            fmt_f(scan.max_tail.phi_at(v)),
            fmt_f(scan.psi_tail.phi_at(v)),
            fmt_f(scan.psi_tail.minus_at(v)),
            scan.max_tail.count()
        ));
    }
    if let Ok(fit) = loglog_slope(&scan.max_tail, &standard_v_grid()) {
        out.push_str(&format!(
            "# loglog-slope: {} stderr {} points {} window {}..{}{}\n",
            fmt_f(fit.slope),
            fmt_f(fit.stderr),
            fit.points_used,
            fmt_f(fit.v_window.0),
            fmt_f(fit.v_window.1),
            if fit.narrow_window {
                " (narrow window: slope is diagnostic only)"
            } else {
                ""
            }
        ));
    }
    Ok(out)
}

fn run_random_model(config: &ExperimentConfig) -> Result<String, CliError> {
    let r = config.get_u64("r", 1).map_err(one_diag)? as u32;
    if let Some(epsilons) = config.get_list_f64("epsilons").map_err(one_diag)? {
        let samples = config.get_u64("samples", 10_000_000).map_err(one_diag)?;
        let report = trace_lower_bound_probe(r, &epsilons, samples, config.seed)
            .map_err(numeric("trace-probe"))?;
        let mut out = String::from("epsilon,p_hat,stderr,hits\n");
        for pt in &report.points {
            out.push_str(&format!(
                "{},{},{},{}\n",
                fmt_f(pt.epsilon),
                fmt_f(pt.p_hat),
                fmt_f(pt.stderr),
                pt.hits
            ));
        }
        out.push_str(&format!(
            "# fitted-slope: {} stderr {} (theory: r(2r+1)/2 = {})\n",
            fmt_f(report.slope),
            fmt_f(report.slope_stderr),
            fmt_f(r as f64 * (2.0 * r as f64 + 1.0) / 2.0)
        ));
        return Ok(out);
    }
    // M_X sample file: one realization per line
    let count = config.get_u64("mx-samples", 1000).map_err(one_diag)?;
    let h_trunc = config.get_u64("h-trunc", 512).map_err(one_diag)? as usize;
    let alpha_grid = (8 * h_trunc).next_power_of_two();
    let sampler = TraceSampler::new(r, config.seed).map_err(numeric("trace-sampler"))?;
    let values: Vec<f64> = {
        use rayon::prelude::*;
        (0..count)
            .into_par_iter()
            .map(|i| sample_m_x(&sampler, h_trunc, alpha_grid, i).value)
            .collect()
    };
    let mut out = String::new();
    for v in values {
        out.push_str(&fmt_f(v));
        out.push('\n');
    }
    Ok(out)
}

fn run_constants(config: &ExperimentConfig) -> Result<String, CliError> {
    let r = config.get_u64("r", 1).map_err(one_diag)? as u32;
    let tol = config.get_f64("tol", 1e-6).map_err(one_diag)?;
    let consts = pvlab::constants::a0_b0(r, tol);
    if let Some(svals) = config.get_list_f64("s-values").map_err(one_diag)? {
        let m = config.get_u64("laplace-m", 1_000_003).map_err(one_diag)?;
        let mut out = String::from("s,m,logl_exact,logl_asymptotic,residual\n");
        for s in svals {
            let exact = pvlab::constants::laplace_log_product(s, m, r);
            let asym = pvlab::constants::laplace_asymptotic(s, &consts);
            out.push_str(&format!(
                "{},{m},{},{},{}\n",
                fmt_f(s),
                fmt_f(exact),
                fmt_f(asym),
                fmt_f(exact - asym)
            ));
        }
        out.push_str(&format!(
            "# constants: A0 {} B0 {} f-integral {}\n",
            fmt_f(consts.a0),
            fmt_f(consts.b0),
            fmt_f(consts.f_integral)
        ));
        return Ok(out);
    }
    match config.format {
        Format::Json => Ok(format!(
            "{{\"r\":{},\"N\":{},\"f_integral\":{},\"f_integral_error\":{},\"A0\":{},\"B0\":{},\"B\":{}}}\n",
            consts.r, consts.n, consts.f_integral, consts.f_integral_error, consts.a0, consts.b0, consts.b
        )),
        Format::Csv => {
            let mut out = String::from("r,N,f_integral,f_integral_error,A0,B0,B\n");
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                consts.r,
                fmt_f(consts.n),
                fmt_f(consts.f_integral),
                fmt_f(consts.f_integral_error),
                fmt_f(consts.a0),
                fmt_f(consts.b0),
                fmt_f(consts.b)
            ));
            Ok(out)
        }
    }
}

fn run_extremal(config: &ExperimentConfig) -> Result<String, CliError> {
    let m = config.get_u64("m", 101).map_err(one_diag)?;
    let fam = build_extremal_family(m).map_err(numeric("extremal-build"))?;
    let mut out = String::from("h,alpha,sign\n");
    for h in fam.h_min()..=fam.h_max() {
        let alpha = fam.alpha(h);
        out.push_str(&format!(
            "{h},{alpha:#x},{}\n",
            if h >= 1 { 1 } else { -1 }
        ));
    }
    let phi = extremal_function(&fam, 1).map_err(numeric("extremal-function"))?;
    let profile = prefix_profile(&phi);
    let half = profile.prefix(m as usize / 2).norm() / (m as f64).sqrt();
    out.push_str(&format!(
        "# field-degree: {}\n# modulus-poly: {:#x}\n# half-period-sum: {} vs log(m)/pi = {}\n",
        fam.field().degree(),
        fam.field().modulus_bits(),
        fmt_f(half),
        fmt_f((m as f64).ln() / std::f64::consts::PI)
    ));
    Ok(out)
}

fn reports_to_json(reports: &[AuditReport]) -> String {
    let mut out = String::from("[");
    for (i, r) in reports.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        out.push_str(&format!(
            "{{\"assumption\":{},\"measured\":{},\"bound\":{},\"constant\":{},\"pass\":{},\"notes\":{}}}",
            json_string(&r.assumption),
            r.measured,
            r.bound,
            r.constant,
            r.pass,
            json_string(&r.notes)
        ));
    }
    out.push_str("]\n");
    out
}

fn run_audit(config: &ExperimentConfig) -> Result<String, CliError> {
    let kind = config.get("audit").unwrap_or("").to_string();
    let spec = config.family_spec().map_err(one_diag)?;
    let mode = config.sample_mode().map_err(one_diag)?;
    let (csv, reports): (String, Vec<AuditReport>) = match kind.as_str() {
        "joint-moments" => {
            let ctx = FamilyContext::new(spec.clone()).map_err(numeric("family"))?;
            let tuples: Vec<Vec<i64>> =
                vec![vec![1], vec![2], vec![1, 1], vec![2, 2], vec![1, 2], vec![1, 2, 3]];
            if let Some(fam) = ctx.extremal() {
                let (rows, budget) = extremal_joint_moments(fam, &tuples);
                let mut out = String::from("tuple,empirical,model,deviation,budget\n");
                let mut worst = 0.0f64;
                for row in &rows {
                    worst = worst.max(row.scaled_deviation);
                    out.push_str(&format!(
                        "\"{:?}\",{},{},{},{}\n",
                        row.tuple,
                        fmt_f(row.empirical),
                        fmt_f(row.model),
                        fmt_f(row.scaled_deviation),
                        fmt_f(budget)
                    ));
                }
                let report = AuditReport {
                    assumption: "joint-moments-extremal".into(),
                    measured: worst,
                    bound: 2.0 * budget,
                    constant: 2.0,
                    pass: worst <= 2.0 * budget,
                    notes: format!("{} tuples over the full field", rows.len()),
                };
                (out, vec![report])
            } else {
                let (rows, report) = joint_moment_audit(&ctx, &tuples, mode, 50.0);
                let mut out = String::from("tuple,empirical,model,scaled_deviation\n");
                for row in rows {
                    out.push_str(&format!(
                        "\"{:?}\",{},{},{}\n",
                        row.tuple,
                        fmt_f(row.empirical),
                        fmt_f(row.model),
                        fmt_f(row.scaled_deviation)
                    ));
                }
                out.push_str(&format!("# {report}\n"));
                (out, vec![report])
            }
        }
        "short-sum" => {
            let d = config.get_u64("d", 1).map_err(one_diag)?;
            let lens = config
                .get_list_u64("interval-lens")
                .map_err(one_diag)?
                .unwrap_or_else(|| vec![20, 100]);
            let mut out =
                String::from("interval_len,normalized_m4,bound,full_m4,count_over_p2,pass\n");
            let mut reports = Vec::new();
            for l in lens {
                let rep = short_sum_moment_audit(spec.m, d, l);
                out.push_str(&format!(
                    "{l},{},{},{},{},{}\n",
                    fmt_f(rep.normalized),
                    fmt_f(rep.bound),
                    fmt_f(rep.full_m4),
                    fmt_f(rep.count_over_p2),
                    rep.pass
                ));
                reports.push(AuditReport {
                    assumption: "short-sums-fourth-moment".into(),
                    measured: rep.normalized,
                    bound: rep.bound,
                    constant: 4.0 * d as f64,
                    pass: rep.pass,
                    notes: format!(
                        "|I| = {l}; dual-route gap {:.3e}",
                        (rep.full_m4 - rep.count_over_p2).abs()
                    ),
                });
            }
            (out, reports)
        }
        "max-short" => {
            let ctx = FamilyContext::new(spec).map_err(numeric("family"))?;
            let max_len = config.get_u64("max-len", 45).map_err(one_diag)? as usize;
            let rep = max_short_sum_audit(&ctx, max_len, 4, mode);
            let csv = format!(
                "max_len,moment,shape,ratio,members\n{},{},{},{},{}\n",
                rep.max_len,
                fmt_f(rep.moment),
                fmt_f(rep.shape),
                fmt_f(rep.ratio),
                rep.members
            );
            let report = AuditReport {
                assumption: "max-short-sums".into(),
                measured: rep.moment,
                bound: rep.shape,
                constant: rep.ratio,
                pass: rep.ratio.is_finite(),
                notes: format!("L = {}, {} members; the ratio is the calibrated constant", rep.max_len, rep.members),
            };
            (csv, vec![report])
        }
        "tail-moment" => {
            let ctx = FamilyContext::new(spec).map_err(numeric("family"))?;
            let k = config.get_u64("k", 1).map_err(one_diag)? as u32;
            let grid = config.get_u64("grid-j", 64).map_err(one_diag)? as usize;
            let rep = tail_moment_audit(&ctx, k, grid, mode);
            let csv = format!(
                "k,y_used,theory_y,surrogate,grid,moment,reference,ratio\n{},{},{},{},{},{},{},{}\n",
                rep.k,
                rep.y_used,
                rep.theory_y,
                rep.surrogate_regime,
                rep.grid_count,
                fmt_f(rep.moment),
                fmt_f(rep.reference),
                fmt_f(rep.ratio)
            );
            let report = AuditReport {
                assumption: "tail-moments".into(),
                measured: rep.moment,
                bound: rep.reference,
                constant: rep.ratio,
                pass: rep.moment.is_finite(),
                notes: if rep.surrogate_regime {
                    format!(
                        "surrogate cutoff y = {} (the asymptotic regime needs y = {} > m/4)",
                        rep.y_used, rep.theory_y
                    )
                } else {
                    String::new()
                },
            };
            (csv, vec![report])
        }
        "coarse-grid" => {
            let ctx = FamilyContext::new(spec.clone()).map_err(numeric("family"))?;
            let delta = 1.0 / 6.0;
            let default_j = (spec.m as f64).powf(0.5 - delta / 5.0) as u64;
            let j = config.get_u64("grid-j", default_j).map_err(one_diag)? as usize;
            let rep = coarse_grid_audit(&ctx, j, mode);
            let csv = format!(
                "grid_j,exceedance,allowed,threshold,max_gap,members,pass\n{},{},{},{},{},{},{}\n",
                rep.grid_count,
                fmt_f(rep.exceedance),
                fmt_f(rep.allowed),
                fmt_f(rep.threshold),
                fmt_f(rep.max_gap),
                rep.members,
                rep.pass
            );
            let report = AuditReport {
                assumption: "coarse-grid-reduction".into(),
                measured: rep.exceedance,
                bound: rep.allowed,
                constant: 3.0,
                pass: rep.pass,
                notes: format!("J = {}, max gap {:.3} vs threshold {:.3}", rep.grid_count, rep.max_gap, rep.threshold),
            };
            (csv, vec![report])
        }
        other => return Err(CliError::Config(vec![format!("unknown audit kind {other:?}")])),
    };
    Ok(match config.format {
        Format::Csv => csv,
        Format::Json => reports_to_json(&reports),
    })
}

fn one_diag(e: String) -> CliError {
    CliError::Config(vec![e])
}

fn numeric<E: fmt::Display>(audit: &'static str) -> impl Fn(E) -> CliError {
    move |e| CliError::Numeric {
        audit: audit.to_string(),
        message: e.to_string(),
    }
}
