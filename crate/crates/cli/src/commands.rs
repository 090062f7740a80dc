//! Argument grammar and subcommand dispatch.

use crate::output::{parse_grid, parse_theta, to_csv, to_json, Format, Sink};
use cev_spectral::arbitrage::{arbitrage_report, HarmonicUp};
use cev_spectral::cev_spec::{
    cev_poly_eigenfunction, cev_psi_eigenfunction, cev_spectrum, nonnegative_sector_count,
    CevEigenfunction, CevError,
};
use cev_spectral::laguerre_spec::{
    laguerre_spectrum, Extension, LaguerreError, SpectrumWindow,
};
use cev_spectral::mc_sim::{
    absorption_probability, doob_law_check, martingale_defect, simulate, McError, Measure,
    Scheme, SimConfig,
};
use cev_spectral::params::{classify_regime, derive_params, ModelParams, ParamsError};
use cev_spectral::sl_core::{apply_fp, cev_weight, SlError};
use cev_spectral::specfun::{
    kummer_phi, laguerre, log_gamma, tricomi_psi, weyl_m, KummerParams, SpecFunError,
};
use clap::{Parser, Subcommand};
use serde::Serialize;

#[derive(Parser)]
#[command(
    name = "cev-spectral",
    about = "Spectral analysis and Monte Carlo validation for the CEV diffusion",
    version
)]
pub struct Cli {
    /// JSON config file with keys {"mu","sigma","gamma","r","x0"}; explicit
    /// flags win over config values.
    #[arg(long, global = true)]
    pub config: Option<std::path::PathBuf>,

    /// Drift mu > 0.
    #[arg(long, global = true)]
    pub mu: Option<f64>,

    /// Volatility sigma > 0.
    #[arg(long, global = true)]
    pub sigma: Option<f64>,

    /// Elasticity gamma >= 0.
    #[arg(long, global = true)]
    pub gamma: Option<f64>,

    /// Risk-free rate r >= 0 (default 0).
    #[arg(long, global = true)]
    pub r: Option<f64>,

    /// Initial price x0 > 0 (default 1).
    #[arg(long, global = true)]
    pub x0: Option<f64>,

    /// Output format for record-style subcommands.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,

    /// Write output to this path instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<std::path::PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Eigenvalues of the CEV Fokker-Planck operator.
    Spectrum {
        /// Self-adjoint extension: the literal `inf` or a real number.
        #[arg(long, default_value = "inf", allow_hyphen_values = true)]
        theta: String,
        /// Number of eigenvalues, from the top of the spectrum.
        #[arg(long, default_value_t = 6)]
        count: usize,
    },
    /// Eigenfunction value, derivative and operator residual on a grid (CSV).
    Eigenfunction {
        /// Polynomial level of the theta = infinity branch.
        #[arg(long, conflicts_with = "lambda")]
        n: Option<usize>,
        /// Laguerre eigenvalue Lambda of the Psi branch.
        #[arg(long, allow_hyphen_values = true)]
        lambda: Option<f64>,
        /// Scale constant of the Psi branch (c > 0 for gamma < 1, c < 0 for
        /// gamma > 2 to make the branch non-negative).
        #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
        c: f64,
        /// Evaluation grid lo:hi:steps.
        #[arg(long, default_value = "0.05:20:200")]
        grid: String,
    },
    /// Regime, endpoint classification and arbitrage mechanism (JSON).
    Classify,
    /// Sturm-Liouville weight w_gamma on a grid (CSV: x, w_gamma).
    Weight {
        #[arg(long, default_value = "0.1:5:100")]
        grid: String,
    },
    /// Positive harmonic function and Doob drift add-on
    /// (CSV: x, h, h_prime, drift_addon).
    Doob {
        #[arg(long, default_value = "0.1:10:100")]
        grid: String,
    },
    /// Spectrum of the generalized Laguerre operator itself (JSON).
    LaguerreSpectrum {
        /// Laguerre parameter a.
        #[arg(long, allow_hyphen_values = true)]
        a: f64,
        /// Extension: `inf` or a real number.
        #[arg(long, default_value = "inf", allow_hyphen_values = true)]
        theta: String,
        /// Lambda window lo:hi (overrides --count).
        #[arg(long, allow_hyphen_values = true)]
        window: Option<String>,
        #[arg(long, default_value_t = 6)]
        count: usize,
    },
    /// Monte Carlo ensemble of CEV paths.
    Simulate {
        #[command(flatten)]
        mc: McArgs,
    },
    /// Martingale defect x0 - E[e^{-rT} X_T] under the risk-neutral measure.
    MartingaleDefect {
        #[command(flatten)]
        mc: McArgs,
    },
    /// Absorption probability P(zeta <= t).
    Absorption {
        #[command(flatten)]
        mc: McArgs,
        /// Absorption horizon t (defaults to the simulation horizon).
        #[arg(long)]
        t: Option<f64>,
    },
    /// Doob-transform law identity check (weighted two-sample KS).
    DoobCheck {
        #[command(flatten)]
        mc: McArgs,
        /// Also run the deliberately misweighted negative control.
        #[arg(long)]
        negative_control: bool,
    },
    /// Data files behind the weight-function and regime figures.
    FigureData {
        /// Which figure: `weights` or `regime-chart`.
        which: String,
        /// Output directory.
        #[arg(long, default_value = ".")]
        out_dir: std::path::PathBuf,
    },
    /// Point evaluation of the special-function kernel (debugging).
    #[command(hide = true)]
    SpecfunEval {
        /// One of: loggamma, laguerre, phi, psi, weylm.
        #[arg(long = "fn", value_name = "NAME")]
        function: String,
        /// Comma-separated parameters: loggamma: x; laguerre: n,a;
        /// phi/psi: lambda,b; weylm: a,lambda.
        #[arg(long, allow_hyphen_values = true)]
        params: String,
        #[arg(long, default_value_t = 0.0)]
        y: f64,
    },
}

#[derive(clap::Args)]
pub struct McArgs {
    /// Number of paths.
    #[arg(long, default_value_t = 100_000)]
    pub paths: usize,
    /// Time step.
    #[arg(long, default_value_t = 1e-3)]
    pub dt: f64,
    /// Horizon T.
    #[arg(long = "T", default_value_t = 1.0)]
    pub t_horizon: f64,
    /// Random seed.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Simulation measure.
    #[arg(long, value_enum, default_value_t = MeasureArg::RiskNeutral)]
    pub measure: MeasureArg,
    /// Discretization scheme.
    #[arg(long, value_enum, default_value_t = SchemeArg::Euler)]
    pub scheme: SchemeArg,
    /// Antithetic pairing of paths.
    #[arg(long)]
    pub antithetic: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum MeasureArg {
    Physical,
    RiskNeutral,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SchemeArg {
    Euler,
    Milstein,
}

impl McArgs {
    fn config(&self) -> SimConfig {
        SimConfig {
            n_paths: self.paths,
            dt: self.dt,
            horizon: self.t_horizon,
            scheme: match self.scheme {
                SchemeArg::Euler => Scheme::EulerMaruyamaAbsorbed,
                SchemeArg::Milstein => Scheme::MilsteinAbsorbed,
            },
            seed: self.seed,
            measure: match self.measure {
                MeasureArg::Physical => Measure::Physical,
                MeasureArg::RiskNeutral => Measure::RiskNeutral,
            },
            antithetic: self.antithetic,
        }
    }
}

/// Error kinds aligned with the exit-code contract.
#[derive(Debug)]
pub enum CliError {
    /// Exit code 2.
    Validation(String),
    /// Exit code 3.
    Numerical(String),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Validation(_) => "validation",
            CliError::Numerical(_) => "numerical",
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Validation(m) | CliError::Numerical(m) => m,
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<ParamsError> for CliError {
    fn from(e: ParamsError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<SpecFunError> for CliError {
    fn from(e: SpecFunError) -> Self {
        match e {
            SpecFunError::NoConvergence(_) => CliError::Numerical(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<SlError> for CliError {
    fn from(e: SlError) -> Self {
        match e {
            SlError::Invalid(_) => CliError::Validation(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<LaguerreError> for CliError {
    fn from(e: LaguerreError) -> Self {
        match e {
            LaguerreError::NoConvergence(_) => CliError::Numerical(e.to_string()),
            LaguerreError::SpecFun(inner) => inner.into(),
            LaguerreError::Quadrature(inner) => inner.into(),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<CevError> for CliError {
    fn from(e: CevError) -> Self {
        match e {
            CevError::NonConvergentTail { .. } => CliError::Numerical(e.to_string()),
            CevError::Laguerre(inner) => inner.into(),
            CevError::SpecFun(inner) => inner.into(),
            CevError::Quadrature(inner) => inner.into(),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<McError> for CliError {
    fn from(e: McError) -> Self {
        match e {
            McError::MissingIncrements => CliError::Numerical(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<cev_spectral::arbitrage::ArbitrageError> for CliError {
    fn from(e: cev_spectral::arbitrage::ArbitrageError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Numerical(format!("io: {e}"))
    }
}

fn resolve_params(cli: &Cli) -> Result<ModelParams, CliError> {
    #[derive(serde::Deserialize, Default)]
    struct PartialConfig {
        mu: Option<f64>,
        sigma: Option<f64>,
        gamma: Option<f64>,
        r: Option<f64>,
        x0: Option<f64>,
    }
    let file: PartialConfig = match &cli.config {
        Some(path) => {
            let raw = std::fs::read_to_string(path)
                .map_err(|e| CliError::Validation(format!("config {}: {e}", path.display())))?;
            serde_json::from_str(&raw)
                .map_err(|e| CliError::Validation(format!("config {}: {e}", path.display())))?
        }
        None => PartialConfig::default(),
    };
    let need = |flag: Option<f64>, cfg: Option<f64>, name: &str| -> Result<f64, CliError> {
        flag.or(cfg)
            .ok_or_else(|| CliError::Validation(format!("missing required parameter --{name}")))
    };
    let mu = need(cli.mu, file.mu, "mu")?;
    let sigma = need(cli.sigma, file.sigma, "sigma")?;
    let gamma = need(cli.gamma, file.gamma, "gamma")?;
    let r = cli.r.or(file.r).unwrap_or(0.0);
    let x0 = cli.x0.or(file.x0).unwrap_or(1.0);
    ModelParams::new(mu, sigma, gamma, r, x0).map_err(Into::into)
}

#[derive(Serialize)]
struct ThetaEcho {
    infinite: bool,
    value: Option<f64>,
}

impl From<Extension> for ThetaEcho {
    fn from(e: Extension) -> Self {
        match e {
            Extension::Infinity => ThetaEcho { infinite: true, value: None },
            Extension::Theta(t) => ThetaEcho { infinite: false, value: Some(t) },
        }
    }
}

#[derive(Serialize)]
struct SpectrumOut {
    subcommand: &'static str,
    params: ModelParams,
    theta: ThetaEcho,
    eigenvalues: Vec<f64>,
    laguerre_eigenvalues: Vec<f64>,
    indices: Vec<Option<usize>>,
    positive_count: usize,
    nonnegative_count: usize,
    nonnegative_sector_bound: Option<usize>,
}

#[derive(Serialize)]
struct ClassifyOut {
    subcommand: &'static str,
    params: ModelParams,
    derived: cev_spectral::params::DerivedParams,
    regime: cev_spectral::params::Regime,
    arbitrage: cev_spectral::arbitrage::RegimeReport,
    positive_sector_count: Option<usize>,
    /// gamma = 2 only: the origin is limit point when 2 sigma^2 > mu.
    bs_origin_limit_point: Option<bool>,
}

#[derive(Serialize)]
struct LaguerreOut {
    subcommand: &'static str,
    a: f64,
    theta: ThetaEcho,
    eigenvalues: Vec<f64>,
    sources: Vec<cev_spectral::laguerre_spec::SpectralSource>,
    indices: Vec<Option<usize>>,
    poles_in_window: Vec<f64>,
}

#[derive(Serialize)]
struct EstimateOut {
    subcommand: &'static str,
    params: ModelParams,
    config: SimConfig,
    estimate: f64,
    std_error: f64,
    ci_level: f64,
    n_paths: usize,
    diagnostics: EstimateDiagnostics,
}

#[derive(Serialize, Default)]
struct EstimateDiagnostics {
    half_width: Option<f64>,
    contains_zero: Option<bool>,
    absorbed_fraction: Option<f64>,
    clamp_fraction: Option<f64>,
    mean_z_terminal: Option<f64>,
    exact_zero_regime: Option<bool>,
    t: Option<f64>,
}

#[derive(Serialize)]
struct DoobCheckOut {
    subcommand: &'static str,
    params: ModelParams,
    config: SimConfig,
    ks_statistic: f64,
    threshold: f64,
    pass: bool,
    n_a_effective: f64,
    n_b_effective: f64,
    negative_control: Option<NegativeControlOut>,
}

#[derive(Serialize)]
struct NegativeControlOut {
    ks_statistic: f64,
    threshold: f64,
    pass: bool,
}

#[derive(Serialize)]
struct SpecfunOut {
    subcommand: &'static str,
    function: String,
    params: Vec<f64>,
    y: f64,
    value: f64,
}

#[derive(Serialize)]
struct RegimeChartRecord {
    gamma: f64,
    band: cev_spectral::params::Band,
    endpoint_zero: cev_spectral::params::EndpointClass,
    endpoint_infinity: cev_spectral::params::EndpointClass,
    a: Option<f64>,
    nu: Option<f64>,
    delta: Option<f64>,
    pontryagin_index: Option<u32>,
    attainable_zero: bool,
    mechanism: cev_spectral::arbitrage::Mechanism,
    forward_mode_visibility: Option<cev_spectral::arbitrage::ForwardModeVisibility>,
    positive_sector_count: Option<usize>,
    integrable_forward_modes: bool,
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    let sink = Sink::new(cli.out.clone());
    match &cli.command {
        Command::Spectrum { theta, count } => {
            let m = resolve_params(&cli)?;
            let ext = parse_theta(theta).map_err(CliError::Validation)?;
            let points = cev_spectrum(&m, ext, SpectrumWindow::Count(*count))?;
            let out = SpectrumOut {
                subcommand: "spectrum",
                params: m,
                theta: ext.into(),
                eigenvalues: points.iter().map(|p| p.lambda).collect(),
                laguerre_eigenvalues: points.iter().map(|p| p.laguerre_lambda).collect(),
                indices: points.iter().map(|p| p.index).collect(),
                positive_count: points.iter().filter(|p| p.positive).count(),
                nonnegative_count: points.iter().filter(|p| p.lambda >= -1e-14).count(),
                nonnegative_sector_bound: nonnegative_sector_count(m.gamma),
            };
            match cli.format {
                Format::Json => sink.write(&to_json(&out))?,
                Format::Csv => {
                    let rows: Vec<Vec<f64>> = points
                        .iter()
                        .map(|p| {
                            vec![
                                p.index.map(|n| n as f64).unwrap_or(-1.0),
                                p.lambda,
                                p.laguerre_lambda,
                                p.positive as u8 as f64,
                            ]
                        })
                        .collect();
                    sink.write(&to_csv(&m, &["index", "lambda", "laguerre_lambda", "positive"], &rows))?;
                }
            }
        }
        Command::Eigenfunction { n, lambda, c, grid } => {
            let m = resolve_params(&cli)?;
            let xs = parse_grid(grid).map_err(CliError::Validation)?;
            let f: CevEigenfunction = match (n, lambda) {
                (Some(n), None) => cev_poly_eigenfunction(&m, *n)?,
                (None, Some(l)) => cev_psi_eigenfunction(&m, *l, *c)?,
                _ => {
                    return Err(CliError::Validation(
                        "exactly one of --n or --lambda is required".into(),
                    ))
                }
            };
            let mut rows = Vec::with_capacity(xs.len());
            for &x in &xs {
                let v = f.eval(x)?;
                let residual = apply_fp(&m, x, v) - f.lambda * v.value;
                rows.push(vec![x, v.value, v.d1, residual]);
            }
            sink.write(&to_csv(&m, &["x", "p", "p_prime", "residual"], &rows))?;
        }
        Command::Classify => {
            let m = resolve_params(&cli)?;
            let regime = classify_regime(m.gamma)?;
            let derived = derive_params(&m)?;
            let out = ClassifyOut {
                subcommand: "classify",
                params: m,
                derived,
                regime,
                arbitrage: arbitrage_report(&m)?,
                positive_sector_count: nonnegative_sector_count(m.gamma),
                bs_origin_limit_point: m
                    .is_black_scholes()
                    .then_some(2.0 * m.sigma * m.sigma > m.mu),
            };
            sink.write(&to_json(&out))?;
        }
        Command::Weight { grid } => {
            let m = resolve_params(&cli)?;
            let d = derive_params(&m)?;
            let xs = parse_grid(grid).map_err(CliError::Validation)?;
            let rows: Vec<Vec<f64>> =
                xs.iter().map(|&x| vec![x, cev_weight(&d, m.gamma, x)]).collect();
            sink.write(&to_csv(&m, &["x", "w_gamma"], &rows))?;
        }
        Command::Doob { grid } => {
            let m = resolve_params(&cli)?;
            let h = HarmonicUp::new(&m)?;
            let xs = parse_grid(grid).map_err(CliError::Validation)?;
            let mut rows = Vec::with_capacity(xs.len());
            for &x in &xs {
                rows.push(vec![x, h.h(x)?, h.h_prime(x), h.drift_addon(x)?]);
            }
            sink.write(&to_csv(&m, &["x", "h", "h_prime", "drift_addon"], &rows))?;
        }
        Command::LaguerreSpectrum { a, theta, window, count } => {
            let ext = parse_theta(theta).map_err(CliError::Validation)?;
            let win = match window {
                Some(spec) => {
                    let parts: Vec<&str> = spec.split(':').collect();
                    if parts.len() != 2 {
                        return Err(CliError::Validation(format!(
                            "window must be lo:hi, got {spec}"
                        )));
                    }
                    let lo: f64 = parts[0]
                        .parse()
                        .map_err(|_| CliError::Validation(format!("bad window lo {}", parts[0])))?;
                    let hi: f64 = parts[1]
                        .parse()
                        .map_err(|_| CliError::Validation(format!("bad window hi {}", parts[1])))?;
                    SpectrumWindow::Range { lo, hi }
                }
                None => SpectrumWindow::Count(*count),
            };
            let spec = laguerre_spectrum(*a, ext, win)?;
            let out = LaguerreOut {
                subcommand: "laguerre-spectrum",
                a: *a,
                theta: ext.into(),
                eigenvalues: spec.points.iter().map(|p| p.value).collect(),
                sources: spec.points.iter().map(|p| p.source).collect(),
                indices: spec.points.iter().map(|p| p.index).collect(),
                poles_in_window: spec.poles_in_window,
            };
            sink.write(&to_json(&out))?;
        }
        Command::Simulate { mc } => {
            let m = resolve_params(&cli)?;
            let cfg = mc.config();
            let ensemble = simulate(&m, &cfg)?;
            match cli.format {
                Format::Json => {
                    let n = ensemble.terminal.len();
                    let mean = ensemble.terminal.iter().sum::<f64>() / n as f64;
                    let var = ensemble
                        .terminal
                        .iter()
                        .map(|x| (x - mean) * (x - mean))
                        .sum::<f64>()
                        / (n - 1).max(1) as f64;
                    let mean_z = ensemble.z_terminal.iter().sum::<f64>() / n as f64;
                    let out = EstimateOut {
                        subcommand: "simulate",
                        params: m,
                        config: cfg,
                        estimate: mean,
                        std_error: (var / n as f64).sqrt(),
                        ci_level: 0.99,
                        n_paths: n,
                        diagnostics: EstimateDiagnostics {
                            absorbed_fraction: Some(ensemble.absorbed_fraction()),
                            clamp_fraction: Some(ensemble.clamp_fraction()),
                            mean_z_terminal: Some(mean_z),
                            ..Default::default()
                        },
                    };
                    sink.write(&to_json(&out))?;
                }
                Format::Csv => {
                    let rows: Vec<Vec<f64>> = ensemble
                        .terminal
                        .iter()
                        .enumerate()
                        .map(|(i, &x)| {
                            vec![
                                i as f64,
                                x,
                                ensemble.z_terminal[i],
                                ensemble.absorption_time[i].unwrap_or(-1.0),
                            ]
                        })
                        .collect();
                    sink.write(&to_csv(
                        &m,
                        &["path", "terminal", "z_terminal", "absorption_time_or_neg1"],
                        &rows,
                    ))?;
                }
            }
        }
        Command::MartingaleDefect { mc } => {
            let m = resolve_params(&cli)?;
            let mut cfg = mc.config();
            cfg.measure = Measure::RiskNeutral;
            let est = martingale_defect(&m, &cfg)?;
            let out = EstimateOut {
                subcommand: "martingale-defect",
                params: m,
                config: cfg,
                estimate: est.point,
                std_error: est.std_error,
                ci_level: est.level,
                n_paths: est.n_effective,
                diagnostics: EstimateDiagnostics {
                    half_width: Some(est.half_width()),
                    contains_zero: Some(est.contains(0.0)),
                    ..Default::default()
                },
            };
            sink.write(&to_json(&out))?;
        }
        Command::Absorption { mc, t } => {
            let m = resolve_params(&cli)?;
            let cfg = mc.config();
            let horizon = t.unwrap_or(cfg.horizon);
            let est = absorption_probability(&m, &cfg, horizon)?;
            let out = EstimateOut {
                subcommand: "absorption",
                params: m,
                config: cfg,
                estimate: est.estimate.point,
                std_error: est.estimate.std_error,
                ci_level: est.estimate.level,
                n_paths: est.estimate.n_effective,
                diagnostics: EstimateDiagnostics {
                    exact_zero_regime: Some(est.exact_zero_regime),
                    t: Some(horizon),
                    ..Default::default()
                },
            };
            sink.write(&to_json(&out))?;
        }
        Command::DoobCheck { mc, negative_control } => {
            let m = resolve_params(&cli)?;
            let cfg = mc.config();
            let check = doob_law_check(&m, &cfg, false)?;
            let control = if *negative_control {
                let c = doob_law_check(&m, &cfg, true)?;
                Some(NegativeControlOut {
                    ks_statistic: c.ks_statistic,
                    threshold: c.threshold,
                    pass: c.pass,
                })
            } else {
                None
            };
            let out = DoobCheckOut {
                subcommand: "doob-check",
                params: m,
                config: cfg,
                ks_statistic: check.ks_statistic,
                threshold: check.threshold,
                pass: check.pass,
                n_a_effective: check.n_a_effective,
                n_b_effective: check.n_b_effective,
                negative_control: control,
            };
            sink.write(&to_json(&out))?;
        }
        Command::FigureData { which, out_dir } => match which.as_str() {
            "weights" => {
                std::fs::create_dir_all(out_dir)?;
                for &g in &[0.5, 1.0, 1.5, 1.8, 2.5, 3.0, 3.5, 4.0] {
                    let m = ModelParams::new(1.0, 1.0, g, 0.0, 1.0)?;
                    let d = derive_params(&m)?;
                    let xs = parse_grid("0.05:5:200").map_err(CliError::Validation)?;
                    let rows: Vec<Vec<f64>> =
                        xs.iter().map(|&x| vec![x, cev_weight(&d, g, x)]).collect();
                    let path = out_dir.join(format!("weight_gamma_{g}.csv"));
                    std::fs::write(path, to_csv(&m, &["x", "w_gamma"], &rows))?;
                }
            }
            "regime-chart" => {
                std::fs::create_dir_all(out_dir)?;
                let mut records = Vec::new();
                for k in 0..=78 {
                    let g = 0.1 + 0.05 * k as f64;
                    let g = (g * 100.0).round() / 100.0;
                    let m = ModelParams::new(1.0, 1.0, g, 0.0, 1.0)?;
                    let regime = classify_regime(g)?;
                    let d = derive_params(&m)?;
                    let rep = arbitrage_report(&m)?;
                    records.push(RegimeChartRecord {
                        gamma: g,
                        band: regime.band,
                        endpoint_zero: regime.endpoint_zero,
                        endpoint_infinity: regime.endpoint_infinity,
                        a: d.a().ok(),
                        nu: d.nu().ok(),
                        delta: d.delta().ok(),
                        pontryagin_index: regime.pontryagin_index,
                        attainable_zero: rep.attainable_zero,
                        mechanism: rep.mechanism,
                        forward_mode_visibility: rep.forward_mode_visibility,
                        positive_sector_count: nonnegative_sector_count(g),
                        integrable_forward_modes: g < 1.0 && g > 0.0,
                    });
                }
                std::fs::write(out_dir.join("regime_chart.json"), to_json(&records))?;
            }
            other => {
                return Err(CliError::Validation(format!(
                    "unknown figure `{other}`; expected weights or regime-chart"
                )))
            }
        },
        Command::SpecfunEval { function, params, y } => {
            let nums: Vec<f64> = params
                .split(',')
                .filter(|s| !s.is_empty())
                .map(|s| s.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| CliError::Validation(format!("bad --params: {e}")))?;
            let arg = |i: usize| -> Result<f64, CliError> {
                nums.get(i).copied().ok_or_else(|| {
                    CliError::Validation(format!("{function} needs at least {} params", i + 1))
                })
            };
            let value = match function.as_str() {
                "loggamma" => log_gamma(arg(0)?)?.ln_abs,
                "laguerre" => laguerre(arg(0)? as usize, arg(1)?, *y),
                "phi" => kummer_phi(KummerParams::new(arg(0)?, arg(1)?, *y))?,
                "psi" => tricomi_psi(KummerParams::new(arg(0)?, arg(1)?, *y))?,
                "weylm" => weyl_m(arg(0)?, arg(1)?)?,
                other => {
                    return Err(CliError::Validation(format!("unknown function `{other}`")))
                }
            };
            let out = SpecfunOut {
                subcommand: "specfun-eval",
                function: function.clone(),
                params: nums,
                y: *y,
                value,
            };
            sink.write(&to_json(&out))?;
        }
    }
    Ok(())
}
