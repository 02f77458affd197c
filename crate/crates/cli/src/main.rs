//! `keyrate`: command-line front end for the key-rate vs interaction-rate
//! toolkit. Every command echoes its configuration into the output so a
//! result file is reproducible on its own; progress goes to stderr and
//! stdout carries data only.
//!
//! Exit codes: 0 success, 2 domain or parse error, 3 a convergence warning
//! was raised and `--allow-warn` was not given.

mod output;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use keyrate_core::conjecture::{
    e85_sweep, equality_point_audit, surface, surface_to_matrix, sweep_with_progress,
    ConjectureReport, GapEvaluator, SurfaceField, SweepParams,
};
use keyrate_core::correlation::{maximal_correlation, stationarity_residuals};
use keyrate_core::dist::{connected_components, JointDist, ParamFamily};
use keyrate_core::envelope::{omega_r, sigma_r, EnvelopeConfig, Rounds};
use keyrate_core::error::Error;
use keyrate_core::info::mutual_information;
use keyrate_core::rates::{
    converse_bound, default_slope_grid, gaussian_kbib, kbib, mimk_limit_route, mimk_sigma_route,
    rate_region_boundary, tyagi_check, RateConfig, RateRegionBoundary, DEFAULT_LIMIT_SLOPES,
};

use output::{emit, file_header, fmt_f64, obj, J};

const LN2: f64 = std::f64::consts::LN_2;

#[derive(Parser)]
#[command(
    name = "keyrate",
    version,
    about = "Key-rate vs interaction-rate computations for two-terminal secret key generation"
)]
struct Cli {
    /// Worker threads (default: available parallelism). Results do not
    /// depend on the thread count.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Exit 0 even when an envelope run stops on its pass budget.
    #[arg(long, global = true)]
    allow_warn: bool,

    /// Display entropic quantities in bits instead of nats.
    #[arg(long, global = true)]
    bits: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyKind {
    /// Fully supported binary chart with a symmetric-channel kernel.
    Bsc,
    /// Binary chart with the (0,0) cell identically zero.
    Support3,
}

#[derive(Clone, Copy, ValueEnum)]
enum Functional {
    Omega,
    Sigma,
}

#[derive(Clone, Copy, ValueEnum, PartialEq)]
enum DataFormat {
    Csv,
    Gnuplot,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Inequality {
    /// Four-parameter dominance inequality on the chart square.
    Conj2,
    /// Reduced three-parameter inequality for near-uniform noise.
    E85,
}

#[derive(Args, Clone, Copy)]
struct FamilyArgs {
    #[arg(long, value_enum, default_value = "bsc")]
    family: FamilyKind,

    /// Crossover probability of the kernel (bsc family only).
    #[arg(long, default_value_t = 0.11)]
    epsilon: f64,

    /// Chart coordinates f,g of the base distribution.
    #[arg(long, value_parser = parse_pair, default_value = "0.5,0.5")]
    base: (f64, f64),
}

impl FamilyArgs {
    fn family(&self) -> ParamFamily {
        match self.family {
            FamilyKind::Bsc => ParamFamily::BscKernel {
                epsilon: self.epsilon,
            },
            FamilyKind::Support3 => ParamFamily::SupportThree,
        }
    }

    fn config_json(&self) -> J {
        obj(vec![
            (
                "family",
                J::Str(
                    match self.family {
                        FamilyKind::Bsc => "bsc",
                        FamilyKind::Support3 => "support3",
                    }
                    .into(),
                ),
            ),
            ("epsilon", J::Num(self.epsilon)),
            (
                "base",
                J::Arr(vec![J::Num(self.base.0), J::Num(self.base.1)]),
            ),
        ])
    }
}

#[derive(Args, Clone, Copy)]
struct GridArgs {
    /// Grid points per chart axis (odd, at least 33).
    #[arg(long, default_value_t = 201)]
    grid_n: usize,

    /// Sup-norm tolerance of the envelope fixed point.
    #[arg(long, default_value_t = 1e-8)]
    sup_norm_tol: f64,

    /// Pass budget for infinite-round envelopes.
    #[arg(long, default_value_t = 500)]
    max_passes: usize,

    /// Bracket width for threshold bisection.
    #[arg(long, default_value_t = 1e-4)]
    bisect_tol: f64,
}

impl GridArgs {
    fn rate_config(&self, base: (f64, f64)) -> RateConfig {
        RateConfig {
            envelope: self.envelope_config(),
            base,
            bisect_tol: self.bisect_tol,
            ..RateConfig::default()
        }
    }

    fn envelope_config(&self) -> EnvelopeConfig {
        EnvelopeConfig {
            grid_n: self.grid_n,
            sup_norm_tol: self.sup_norm_tol,
            max_passes: self.max_passes,
        }
    }

    fn config_json(&self) -> J {
        obj(vec![
            ("grid_n", J::Int(self.grid_n as i64)),
            ("sup_norm_tol", J::Num(self.sup_norm_tol)),
            ("max_passes", J::Int(self.max_passes as i64)),
            ("bisect_tol", J::Num(self.bisect_tol)),
        ])
    }
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err("expected two comma-separated numbers".into());
    }
    let f = parts[0].trim().parse::<f64>().map_err(|e| e.to_string())?;
    let g = parts[1].trim().parse::<f64>().map_err(|e| e.to_string())?;
    Ok((f, g))
}

fn parse_rounds(s: &str) -> Result<Rounds, String> {
    s.parse()
}

fn parse_range(s: &str) -> Result<(f64, f64), String> {
    parse_pair(s).and_then(|(lo, hi)| {
        if hi > lo {
            Ok((lo, hi))
        } else {
            Err("range upper end must exceed the lower end".into())
        }
    })
}

fn rounds_json(r: Rounds) -> J {
    match r {
        Rounds::Finite(k) => J::Int(k as i64),
        Rounds::Infinite => J::Str("inf".into()),
    }
}

#[derive(Subcommand)]
enum Command {
    /// Entropies, mutual information, maximal correlation, and connectivity
    /// of a distribution file.
    Info {
        /// JSON file with {"matrix": [[..]], "labels_x": [..], "labels_y": [..]}.
        #[arg(long)]
        dist: PathBuf,
    },

    /// Envelope surface of omega^s or sigma after r alternating passes,
    /// plus the scalar at the base point.
    Envelope {
        #[command(flatten)]
        fam: FamilyArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, value_enum)]
        functional: Functional,
        /// Slope for the omega functional.
        #[arg(long)]
        s: Option<f64>,
        #[arg(long, value_parser = parse_rounds, default_value = "inf")]
        rounds: Rounds,
        /// Surface file; only the base-point summary is printed without it.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: DataFormat,
    },

    /// Achievable (total rate, key rate) boundary over a slope grid.
    Region {
        #[command(flatten)]
        fam: FamilyArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, value_parser = parse_rounds, default_value = "inf")]
        rounds: Rounds,
        /// Densify the slope grid around this threshold.
        #[arg(long)]
        hint: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: DataFormat,
    },

    /// Key bits per interaction bit from the threshold bisection, or the
    /// Gaussian closed form.
    Kbib {
        #[command(flatten)]
        fam: FamilyArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, value_parser = parse_rounds, default_value = "inf")]
        rounds: Rounds,
        /// Use the Gaussian closed form with this correlation instead of an
        /// envelope run.
        #[arg(long)]
        gaussian_rho: Option<f64>,
    },

    /// Minimum interaction rate for the maximum key rate, by the sigma
    /// route and the vanishing-slope route, with an agreement flag.
    Mimk {
        #[command(flatten)]
        fam: FamilyArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, value_parser = parse_rounds, default_value = "inf")]
        rounds: Rounds,
    },

    /// One-way-optimality check of the base distribution (both
    /// orientations against the interactive envelope).
    Tyagi {
        #[command(flatten)]
        fam: FamilyArgs,
        #[command(flatten)]
        grid: GridArgs,
    },

    /// Blocklength-free upper bound on key bits per communication bit.
    ConverseBound {
        /// Key alphabet size, in nats.
        #[arg(long)]
        log_k: f64,
        /// Communication alphabet size, in nats.
        #[arg(long)]
        log_w: f64,
        /// Total-variation secrecy-and-agreement error.
        #[arg(long)]
        delta: f64,
        /// Slope bound of the region, in (0,1).
        #[arg(long)]
        s: f64,
    },

    /// Grid verification sweep of the dominance inequality (or the reduced
    /// inequality) with the offset-grid convention.
    Conjecture {
        #[arg(long, default_value_t = 0.01)]
        step: f64,
        /// Run the full-resolution step 0.001 (long; progress on stderr).
        #[arg(long)]
        paper_scale: bool,
        #[arg(long, value_enum, default_value = "conj2")]
        inequality: Inequality,
        #[arg(long, value_parser = parse_range)]
        f_range: Option<(f64, f64)>,
        #[arg(long, value_parser = parse_range)]
        g_range: Option<(f64, f64)>,
        #[arg(long, value_parser = parse_range)]
        e_range: Option<(f64, f64)>,
        #[arg(long, value_parser = parse_range)]
        a_range: Option<(f64, f64)>,
        /// Also audit value and tangency at the four equality points of
        /// this alpha,epsilon pair.
        #[arg(long, value_parser = parse_pair)]
        audit: Option<(f64, f64)>,
        #[arg(long)]
        out: Option<PathBuf>,
    },

    /// Run a suite of commands from a file (one invocation per line, `#`
    /// comments allowed); the file is echoed verbatim into the output.
    Batch {
        #[arg(long)]
        config: PathBuf,
    },

    /// Surface files of omega_0^s, chi, and their gap over the chart square.
    Surfaces {
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = 0.11)]
        epsilon: f64,
        #[arg(long, default_value_t = 101)]
        grid_n: usize,
        #[arg(long, default_value = "surface")]
        out_prefix: String,
    },
}

struct Outcome {
    stdout: String,
    warnings: Vec<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("error: could not configure the thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    match run(&cli) {
        Ok(outcome) => {
            println!("{}", outcome.stdout);
            for w in &outcome.warnings {
                eprintln!("warning: {w}");
            }
            if !outcome.warnings.is_empty() && !cli.allow_warn {
                ExitCode::from(3)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn scale(bits: bool) -> (f64, &'static str) {
    if bits {
        (LN2, "bits")
    } else {
        (1.0, "nats")
    }
}

fn write_data_file(
    path: &PathBuf,
    config_json: &str,
    body: &str,
    comment: char,
) -> Result<(), Error> {
    let text = format!("{}{}", file_header(comment, config_json), body);
    fs::write(path, text).map_err(|e| Error::Domain(format!("writing {}: {e}", path.display())))
}

fn run(cli: &Cli) -> Result<Outcome, Error> {
    let (unit_div, unit) = scale(cli.bits);
    match &cli.command {
        Command::Info { dist } => {
            let text = fs::read_to_string(dist)
                .map_err(|e| Error::Domain(format!("reading {}: {e}", dist.display())))?;
            let (joint, labels_x, labels_y) = JointDist::from_json(&text)?;
            let rho = maximal_correlation(&joint)?;
            let comps = connected_components(&joint);
            let stationarity = stationarity_residuals(&joint).ok();
            let config = obj(vec![
                ("dist", J::Str(dist.display().to_string())),
                ("unit", J::Str(unit.into())),
            ]);
            let mut results = vec![
                (
                    "labels_x",
                    J::Arr(labels_x.into_iter().map(J::Str).collect()),
                ),
                (
                    "labels_y",
                    J::Arr(labels_y.into_iter().map(J::Str).collect()),
                ),
                (
                    "h_x",
                    J::Num(keyrate_core::entropy(joint.marginal_x())? / unit_div),
                ),
                (
                    "h_y",
                    J::Num(keyrate_core::entropy(joint.marginal_y())? / unit_div),
                ),
                ("h_xy", J::Num(joint.joint_entropy() / unit_div)),
                (
                    "h_x_given_y",
                    J::Num(joint.cond_entropy_x_given_y() / unit_div),
                ),
                (
                    "h_y_given_x",
                    J::Num(joint.cond_entropy_y_given_x() / unit_div),
                ),
                (
                    "mutual_information",
                    J::Num(mutual_information(&joint) / unit_div),
                ),
                ("maximal_correlation", J::Num(rho)),
                ("indecomposable", J::Bool(comps.is_indecomposable)),
                ("components", J::Int(comps.count as i64)),
            ];
            if let Some(st) = stationarity {
                results.push(("stationarity_residual_max", J::Num(st.max_residual())));
            }
            Ok(Outcome {
                stdout: emit("info", config, obj(results)),
                warnings: vec![],
            })
        }

        Command::Envelope {
            fam,
            grid,
            functional,
            s,
            rounds,
            out,
            format,
        } => {
            let family = fam.family();
            let cfg = grid.envelope_config();
            let (name, run) = match functional {
                Functional::Omega => {
                    let s =
                        s.ok_or_else(|| Error::Domain("the omega functional needs --s".into()))?;
                    ("omega", omega_r(s, family, *rounds, &cfg)?)
                }
                Functional::Sigma => ("sigma", sigma_r(family, *rounds, &cfg)?),
            };
            let config = obj(vec![
                ("functional", J::Str(name.into())),
                ("s", s.map(J::Num).unwrap_or(J::Str("-".into()))),
                ("rounds", rounds_json(*rounds)),
                ("family", fam.config_json()),
                ("grid", grid.config_json()),
                ("unit", J::Str(unit.into())),
            ]);
            let config_text = config.render();
            let base_value = run.grid.value_at(fam.base.0, fam.base.1)?;
            let mut warnings = Vec::new();
            if let Some(w) = run.warning() {
                warnings.push(w);
            }
            if let Some(path) = out {
                let body = match format {
                    DataFormat::Gnuplot => run.grid.to_gnuplot_matrix(),
                    _ => run.grid.to_csv(),
                };
                write_data_file(path, &config_text, &body, '#')?;
            }
            let results = obj(vec![
                (
                    "value_at_base",
                    base_value
                        .map(|v| J::Num(v / unit_div))
                        .unwrap_or(J::Str("-inf".into())),
                ),
                ("passes_used", J::Int(run.passes_used as i64)),
                ("converged", J::Bool(run.converged)),
                ("last_delta", J::Num(run.last_delta)),
                (
                    "singular_cells",
                    J::Int(run.grid.singular_cells.len() as i64),
                ),
            ]);
            Ok(Outcome {
                stdout: emit("envelope", config, results),
                warnings,
            })
        }

        Command::Region {
            fam,
            grid,
            rounds,
            hint,
            out,
            format,
        } => {
            let cfg = grid.rate_config(fam.base);
            let slopes = default_slope_grid(*hint);
            let boundary = rate_region_boundary(fam.family(), *rounds, &slopes, &cfg)?;
            let config = obj(vec![
                ("rounds", rounds_json(*rounds)),
                ("family", fam.config_json()),
                ("grid", grid.config_json()),
                ("slopes", J::Int(slopes.len() as i64)),
                ("hint", hint.map(J::Num).unwrap_or(J::Str("-".into()))),
                ("unit", J::Str(unit.into())),
            ]);
            let config_text = config.render();
            let mut warnings = Vec::new();
            if let Some(w) = &boundary.warning {
                warnings.push(w.clone());
            }
            if let Some(gap) = boundary.coarse_warning {
                warnings.push(format!(
                    "slope grid is coarse: adjacent supporting lines disagree by {gap:.3e}"
                ));
            }
            let body = boundary_body(&boundary, *format, unit_div);
            let stdout = if let Some(path) = out {
                let comment = if *format == DataFormat::Json {
                    '\0'
                } else {
                    '#'
                };
                if comment == '\0' {
                    fs::write(path, &body)
                        .map_err(|e| Error::Domain(format!("writing {}: {e}", path.display())))?;
                } else {
                    write_data_file(path, &config_text, &body, '#')?;
                }
                emit(
                    "region",
                    config,
                    obj(vec![
                        ("points", J::Int(boundary.points.len() as i64)),
                        ("out", J::Str(path.display().to_string())),
                    ]),
                )
            } else {
                body
            };
            Ok(Outcome { stdout, warnings })
        }

        Command::Kbib {
            fam,
            grid,
            rounds,
            gaussian_rho,
        } => {
            let config = obj(vec![
                ("rounds", rounds_json(*rounds)),
                ("family", fam.config_json()),
                ("grid", grid.config_json()),
                (
                    "gaussian_rho",
                    gaussian_rho.map(J::Num).unwrap_or(J::Str("-".into())),
                ),
            ]);
            if let Some(rho) = gaussian_rho {
                let gamma = gaussian_kbib(*rho)?;
                return Ok(Outcome {
                    stdout: emit(
                        "kbib",
                        config,
                        obj(vec![
                            ("gamma", J::Num(gamma)),
                            ("s_star", J::Num(rho * rho)),
                            ("route", J::Str("gaussian-closed-form".into())),
                        ]),
                    ),
                    warnings: vec![],
                });
            }
            let cfg = grid.rate_config(fam.base);
            let result = kbib(fam.family(), *rounds, &cfg)?;
            let warnings = result.threshold.warning.iter().cloned().collect();
            Ok(Outcome {
                stdout: emit(
                    "kbib",
                    config,
                    obj(vec![
                        ("gamma", J::Num(result.gamma)),
                        ("s_star", J::Num(result.threshold.s_star)),
                        (
                            "bracket",
                            J::Arr(vec![
                                J::Num(result.threshold.bracket.0),
                                J::Num(result.threshold.bracket.1),
                            ]),
                        ),
                        ("iterations", J::Int(result.threshold.iterations as i64)),
                        ("route", J::Str("envelope-bisection".into())),
                    ]),
                ),
                warnings,
            })
        }

        Command::Mimk { fam, grid, rounds } => {
            let cfg = grid.rate_config(fam.base);
            let family = fam.family();
            let sigma = mimk_sigma_route(family, *rounds, &cfg)?;
            let limit = mimk_limit_route(family, *rounds, &DEFAULT_LIMIT_SLOPES, &cfg)?;
            let agree = (sigma.value - limit.value).abs() <= 1e-2;
            let mut warnings: Vec<String> = sigma.warning.iter().cloned().collect();
            warnings.extend(limit.warning.iter().cloned());
            warnings.extend(limit.extrapolation_warning.iter().cloned());
            let config = obj(vec![
                ("rounds", rounds_json(*rounds)),
                ("family", fam.config_json()),
                ("grid", grid.config_json()),
                ("unit", J::Str(unit.into())),
            ]);
            let results = obj(vec![
                ("sigma_route", J::Num(sigma.value / unit_div)),
                ("limit_route", J::Num(limit.value / unit_div)),
                ("agree_within_1e-2", J::Bool(agree)),
                ("sigma_at_base", J::Num(sigma.sigma_at_base / unit_div)),
                (
                    "limit_sequence",
                    J::Arr(
                        limit
                            .sequence
                            .iter()
                            .map(|&(s, v)| J::Arr(vec![J::Num(s), J::Num(v / unit_div)]))
                            .collect(),
                    ),
                ),
            ]);
            Ok(Outcome {
                stdout: emit("mimk", config, results),
                warnings,
            })
        }

        Command::Tyagi { fam, grid } => {
            let cfg = grid.rate_config(fam.base);
            let report = tyagi_check(fam.family(), &cfg)?;
            let warnings = report.warning.iter().cloned().collect();
            let config = obj(vec![
                ("family", fam.config_json()),
                ("grid", grid.config_json()),
                ("unit", J::Str(unit.into())),
            ]);
            let results = obj(vec![
                ("sigma1", J::Num(report.sigma1 / unit_div)),
                ("sigma3", J::Num(report.sigma3 / unit_div)),
                ("sigma_inf", J::Num(report.sigma_inf / unit_div)),
                (
                    "sigma1_transposed",
                    J::Num(report.sigma1_transposed / unit_div),
                ),
                ("i1", J::Num(report.i1 / unit_div)),
                ("i1_transposed", J::Num(report.i1_transposed / unit_div)),
                ("i_inf", J::Num(report.i_inf / unit_div)),
                ("gap", J::Num(report.gap / unit_div)),
                (
                    "verdict",
                    J::Str(
                        if report.one_way_optimal {
                            "one-way-optimal"
                        } else {
                            "interaction-helps"
                        }
                        .into(),
                    ),
                ),
            ]);
            Ok(Outcome {
                stdout: emit("tyagi", config, results),
                warnings,
            })
        }

        Command::ConverseBound {
            log_k,
            log_w,
            delta,
            s,
        } => {
            let bound = converse_bound(*log_k, *log_w, *delta, *s)?;
            let config = obj(vec![
                ("log_k", J::Num(*log_k)),
                ("log_w", J::Num(*log_w)),
                ("delta", J::Num(*delta)),
                ("s", J::Num(*s)),
            ]);
            Ok(Outcome {
                stdout: emit(
                    "converse-bound",
                    config,
                    obj(vec![
                        ("ratio_bound", J::Num(bound.ratio_bound)),
                        ("max_log_k", J::Num(bound.max_log_k)),
                        ("asymptote", J::Num(s / (1.0 - s))),
                    ]),
                ),
                warnings: vec![],
            })
        }

        Command::Conjecture {
            step,
            paper_scale,
            inequality,
            f_range,
            g_range,
            e_range,
            a_range,
            audit,
            out,
        } => {
            let step = if *paper_scale { 0.001 } else { *step };
            let config = obj(vec![
                ("step", J::Num(step)),
                ("paper_scale", J::Bool(*paper_scale)),
                (
                    "inequality",
                    J::Str(
                        match inequality {
                            Inequality::Conj2 => "conj2",
                            Inequality::E85 => "e85",
                        }
                        .into(),
                    ),
                ),
            ]);
            let stdout = match inequality {
                Inequality::Conj2 => {
                    let mut params = SweepParams::full(step);
                    if let Some(r) = f_range {
                        params.f_range = *r;
                    }
                    if let Some(r) = g_range {
                        params.g_range = *r;
                    }
                    if let Some(r) = e_range {
                        params.e_range = *r;
                    }
                    if let Some(r) = a_range {
                        params.a_range = *r;
                    }
                    let progress = |done: u64, total: u64| {
                        let pct = done * 100 / total.max(1);
                        let prev = (done.saturating_sub(1)) * 100 / total.max(1);
                        if pct != prev {
                            eprintln!("progress: {pct}% ({done}/{total} cells)");
                        }
                    };
                    let report = sweep_with_progress(
                        &params,
                        if *paper_scale { Some(&progress) } else { None },
                    )?;
                    // timing goes to stderr so identical configurations give
                    // byte-identical stdout
                    eprintln!(
                        "swept {} cells in {:.2} s",
                        report.cells_scanned, report.wall_time_secs
                    );
                    let audit_json = match audit {
                        Some((a, e)) => {
                            let audit = equality_point_audit(*a, *e)?;
                            obj(vec![
                                ("alpha", J::Num(*a)),
                                ("epsilon", J::Num(*e)),
                                ("max_abs_gap", J::Num(audit.max_abs_gap)),
                                ("max_abs_gradient", J::Num(audit.max_abs_gradient)),
                            ])
                        }
                        None => J::Str("-".into()),
                    };
                    emit(
                        "conjecture",
                        config,
                        obj(vec![
                            ("report", conjecture_report_json(&report)),
                            ("equality_audit", audit_json),
                        ]),
                    )
                }
                Inequality::E85 => {
                    let report = e85_sweep(step)?;
                    eprintln!(
                        "swept {} cells in {:.2} s",
                        report.cells_scanned, report.wall_time_secs
                    );
                    emit(
                        "conjecture",
                        config,
                        obj(vec![
                            ("step", J::Num(report.step)),
                            ("min_slack", J::Num(report.min_slack)),
                            (
                                "argmin",
                                J::Arr(vec![
                                    J::Num(report.argmin.0),
                                    J::Num(report.argmin.1),
                                    J::Num(report.argmin.2),
                                ]),
                            ),
                            ("negative_count", J::Int(report.negative_count as i64)),
                            ("cells_scanned", J::Int(report.cells_scanned as i64)),
                        ]),
                    )
                }
            };
            if let Some(path) = out {
                fs::write(path, &stdout)
                    .map_err(|e| Error::Domain(format!("writing {}: {e}", path.display())))?;
            }
            Ok(Outcome {
                stdout,
                warnings: vec![],
            })
        }

        Command::Batch { config } => {
            let text = fs::read_to_string(config)
                .map_err(|e| Error::Domain(format!("reading {}: {e}", config.display())))?;
            let header = emit(
                "batch",
                obj(vec![
                    ("file", J::Str(config.display().to_string())),
                    ("contents", J::Str(text.clone())),
                ]),
                obj(vec![]),
            );
            let mut outputs = vec![header];
            let mut warnings = Vec::new();
            for (lineno, raw) in text.lines().enumerate() {
                let line = raw.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let sub =
                    Cli::try_parse_from(std::iter::once("keyrate").chain(line.split_whitespace()))
                        .map_err(|e| Error::Domain(format!("batch line {}: {e}", lineno + 1)))?;
                if matches!(sub.command, Command::Batch { .. }) {
                    return Err(Error::Domain(format!(
                        "batch line {}: nested batch is not supported",
                        lineno + 1
                    )));
                }
                let outcome = run(&sub)?;
                outputs.push(outcome.stdout);
                warnings.extend(outcome.warnings);
            }
            Ok(Outcome {
                stdout: outputs.join("\n"),
                warnings,
            })
        }

        Command::Surfaces {
            alpha,
            epsilon,
            grid_n,
            out_prefix,
        } => {
            let eval = GapEvaluator::new(*alpha, *epsilon)?;
            let config = obj(vec![
                ("alpha", J::Num(*alpha)),
                ("epsilon", J::Num(*epsilon)),
                ("grid_n", J::Int(*grid_n as i64)),
                ("s", J::Num(eval.s)),
                ("c", J::Num(eval.c)),
            ]);
            let config_text = config.render();
            let mut files = Vec::new();
            for (field, tag) in [
                (SurfaceField::Omega0, "omega0"),
                (SurfaceField::Chi, "chi"),
                (SurfaceField::Gap, "gap"),
            ] {
                let data = surface(field, *alpha, *epsilon, *grid_n)?;
                let path = PathBuf::from(format!("{out_prefix}_{tag}.dat"));
                write_data_file(&path, &config_text, &surface_to_matrix(&data), '#')?;
                files.push(J::Str(path.display().to_string()));
            }
            Ok(Outcome {
                stdout: emit("surfaces", config, obj(vec![("files", J::Arr(files))])),
                warnings: vec![],
            })
        }
    }
}

fn conjecture_report_json(report: &ConjectureReport) -> J {
    obj(vec![
        ("step", J::Num(report.step)),
        ("min_gap", J::Num(report.min_gap)),
        (
            "argmin",
            J::Arr(vec![
                J::Num(report.argmin.0),
                J::Num(report.argmin.1),
                J::Num(report.argmin.2),
                J::Num(report.argmin.3),
            ]),
        ),
        ("negative_count", J::Int(report.negative_count as i64)),
        ("cells_scanned", J::Int(report.cells_scanned as i64)),
        ("roundoff_budget", J::Num(report.roundoff_budget)),
    ])
}

fn boundary_body(boundary: &RateRegionBoundary, format: DataFormat, unit_div: f64) -> String {
    match format {
        DataFormat::Csv => {
            let mut out = String::from("s,S,R\n");
            for p in &boundary.points {
                out.push_str(&format!(
                    "{},{},{}\n",
                    fmt_f64(p.slope),
                    fmt_f64(p.total_rate / unit_div),
                    fmt_f64(p.key_rate / unit_div)
                ));
            }
            out
        }
        DataFormat::Gnuplot => {
            let mut out = String::from("# S R s\n");
            for p in &boundary.points {
                out.push_str(&format!(
                    "{} {} {}\n",
                    fmt_f64(p.total_rate / unit_div),
                    fmt_f64(p.key_rate / unit_div),
                    fmt_f64(p.slope)
                ));
            }
            out
        }
        DataFormat::Json => J::Arr(
            boundary
                .points
                .iter()
                .map(|p| {
                    obj(vec![
                        ("s", J::Num(p.slope)),
                        ("S", J::Num(p.total_rate / unit_div)),
                        ("R", J::Num(p.key_rate / unit_div)),
                    ])
                })
                .collect(),
        )
        .render(),
    }
}
