//! specband: spectra, equilibrium measures, recurrence coefficients and
//! eigenvalue statistics from the command line. Every run writes its
//! resolved parameters next to its outputs, so runs re-execute exactly.

mod config;
mod output;

use clap::{Args, Parser, Subcommand};
use config::{PotentialSpec, RunConfig};
use num_complex::Complex64;
use output::{num, Format, OutDir};
use serde_json::json;
use specband::equilibrium::{self, SolverParams};
use specband::orthopoly;
use specband::potential::BandSet;
use specband::riemann;
use specband::rmt::{self, McParams, TestFunction};
use specband::verify::{self, Suite};
use specband::{jacobi, Error, Potential};
use std::path::PathBuf;
use std::process::ExitCode;

const EXIT_VALIDATION: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Parser)]
#[command(name = "specband", version, about = "Band spectra, equilibrium measures and eigenvalue statistics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// JSON config file; explicit flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Monte Carlo seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Concurrent worker threads for chain sampling (0 = one per chain).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output format for the primary table (csv or json).
    #[arg(long, global = true, default_value = "csv")]
    format: String,
    /// Square-case polynomial v as a JSON list (ascending, leading +-1).
    #[arg(long)]
    v: Option<String>,
    /// General polynomial V as a JSON list (ascending).
    #[arg(long = "V")]
    v_upper: Option<String>,
    /// Amplitude g.
    #[arg(long)]
    g: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Band set of a square-case potential.
    Bands(Common),
    /// Equilibrium measure: external field, or fixed support via --support.
    Equilibrium {
        #[command(flatten)]
        common: Common,
        /// Fixed support edges as a JSON list [a1, b1, a2, b2, ...].
        #[arg(long)]
        support: Option<String>,
        #[arg(long)]
        grid: Option<usize>,
        /// Domain half-width for the external-field problem.
        #[arg(long)]
        half_width: Option<f64>,
        #[arg(long)]
        residual_tol: Option<f64>,
        #[arg(long)]
        max_iterations: Option<usize>,
    },
    /// Recurrence coefficients of the varying-weight orthonormal polynomials.
    Recurrence {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        l_max: Option<usize>,
    },
    /// Integrated density of states of the periodic square-case operator.
    Ids {
        #[command(flatten)]
        common: Common,
        /// Truncation size.
        #[arg(long)]
        section: Option<usize>,
        #[arg(long)]
        lambda_min: Option<f64>,
        #[arg(long)]
        lambda_max: Option<f64>,
        #[arg(long)]
        lambda_points: Option<usize>,
    },
    /// Hill discriminant of a periodic operator (coefficients or potential).
    Hill {
        #[command(flatten)]
        common: Common,
        /// Off-diagonal entries r_1..r_p as a JSON list.
        #[arg(long)]
        r: Option<String>,
        /// Diagonal entries s_1..s_p as a JSON list.
        #[arg(long)]
        s: Option<String>,
    },
    /// Lyapunov exponent profile of the periodic square-case operator.
    Lyapunov {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        lambda_min: Option<f64>,
        #[arg(long)]
        lambda_max: Option<f64>,
        #[arg(long)]
        lambda_points: Option<usize>,
    },
    /// Period matrix, frequencies and Robin constant of a band set.
    Surface {
        #[command(flatten)]
        common: Common,
        /// Band edges as a JSON list (defaults to the potential's bands).
        #[arg(long)]
        edges: Option<String>,
        #[arg(long)]
        surface_points: Option<usize>,
    },
    /// Fit the theta-ratio coefficient orbit against recurrence windows.
    ThetaFit {
        #[command(flatten)]
        common: Common,
        /// Weight parameter for the recurrence window targets.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        k_window: Option<usize>,
    },
    /// Sample the eigenvalue log-gas.
    Mc {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        chains: Option<usize>,
        #[arg(long)]
        sweeps: Option<usize>,
        #[arg(long)]
        burn_in: Option<usize>,
        #[arg(long)]
        thin: Option<usize>,
    },
    /// Fredholm gap probability with a Monte Carlo crosscheck.
    Gap {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n: Option<usize>,
        /// Interval as a JSON pair [lo, hi].
        #[arg(long)]
        interval: Option<String>,
        #[arg(long)]
        quad_order: Option<usize>,
        #[arg(long)]
        sweeps: Option<usize>,
        #[arg(long)]
        chains: Option<usize>,
        #[arg(long)]
        burn_in: Option<usize>,
    },
    /// Covariance of resolvent statistics across matrix sizes.
    Covariance {
        #[command(flatten)]
        common: Common,
        /// Matrix sizes as a JSON list.
        #[arg(long)]
        n_list: Option<String>,
        /// Test functions are the resolvents at +- i * z_im.
        #[arg(long)]
        z_im: Option<f64>,
        #[arg(long)]
        sweeps: Option<usize>,
        #[arg(long)]
        chains: Option<usize>,
        #[arg(long)]
        burn_in: Option<usize>,
    },
    /// Run the acceptance checks.
    VerifyAll {
        #[command(flatten)]
        common: Common,
        /// quick or full.
        #[arg(long, default_value = "quick")]
        suite: String,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_VALIDATION)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_NUMERICAL)
        }
    }
}

enum Failure {
    Validation(String),
    Numerical(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_validation() {
            Failure::Validation(e.to_string())
        } else {
            Failure::Numerical(e.to_string())
        }
    }
}

impl From<String> for Failure {
    fn from(s: String) -> Self {
        Failure::Validation(s)
    }
}

fn parse_list(name: &str, text: &str) -> Result<Vec<f64>, Failure> {
    serde_json::from_str(text)
        .map_err(|e| Failure::Validation(format!("cannot parse {name} as a JSON list: {e}")))
}

/// Assemble the effective config: file values overlaid by explicit flags.
fn resolve(common: &Common, mut flags: RunConfig, subcommand: &str) -> Result<RunConfig, Failure> {
    if let Some(v) = &common.v {
        let coeffs = parse_list("--v", v)?;
        flags.potential = Some(PotentialSpec::square_from_parts(
            coeffs,
            common.g.unwrap_or(1.0),
        ));
    } else if let Some(vu) = &common.v_upper {
        let coeffs = parse_list("--V", vu)?;
        flags.potential = Some(PotentialSpec {
            kind: "poly".into(),
            v: None,
            v_upper: Some(coeffs),
            g: common.g.unwrap_or(1.0),
        });
    } else if let Some(g) = common.g {
        // Amplitude override of a config-supplied potential.
        flags.potential = flags.potential.map(|mut p| {
            p.g = g;
            p
        });
    }
    flags.seed = common.seed;
    flags.workers = common.workers.or_else(|| {
        std::env::var("SPECBAND_WORKERS")
            .ok()
            .and_then(|s| s.parse().ok())
    });

    let base = match &common.config {
        Some(path) => {
            let cfg = RunConfig::load(path).map_err(Failure::Validation)?;
            if let Some(sub) = &cfg.subcommand {
                if sub != subcommand {
                    return Err(Failure::Validation(format!(
                        "config was resolved for subcommand {sub:?}, not {subcommand:?}"
                    )));
                }
            }
            cfg
        }
        None => RunConfig::default(),
    };
    let mut resolved = base.merged_with(flags);
    resolved.subcommand = Some(subcommand.to_string());
    // Amplitude flag also overrides a config potential when both are given.
    if let (Some(g), Some(p)) = (common.g, resolved.potential.as_mut()) {
        p.g = g;
    }
    Ok(resolved)
}

fn need_potential(cfg: &RunConfig) -> Result<Potential, Failure> {
    let spec = cfg
        .potential
        .as_ref()
        .ok_or_else(|| Failure::Validation("a potential is required (--v/--V/--g or config)".into()))?;
    Ok(spec.build()?)
}

fn write_resolved(dir: &OutDir, cfg: &RunConfig) -> Result<(), Failure> {
    let value = serde_json::to_value(cfg).map_err(|e| Failure::Validation(e.to_string()))?;
    dir.write_json("resolved-config.json", &value)?;
    Ok(())
}

fn mc_params(cfg: &RunConfig) -> McParams {
    let d = McParams::default();
    McParams {
        chains: cfg.chains.unwrap_or(d.chains),
        sweeps: cfg.sweeps.unwrap_or(d.sweeps),
        burn_in: cfg.burn_in.unwrap_or(d.burn_in),
        thin: cfg.thin.unwrap_or(d.thin),
        seed: cfg.seed.unwrap_or(d.seed),
        workers: cfg.workers.unwrap_or(0),
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Bands(common) => {
            let cfg = resolve(&common, RunConfig::default(), "bands")?;
            let dir = OutDir::create(&common.out)?;
            let pot = need_potential(&cfg)?;
            let bands = pot.bands()?;
            write_resolved(&dir, &cfg)?;
            dir.write_table(
                Format::parse(&common.format)?,
                "bands",
                None,
                "band,a,b",
                (0..bands.q()).map(|l| {
                    let (a, b) = bands.band(l);
                    format!("{l},{},{}", num(a), num(b))
                }),
            )?;
            let edges: Vec<String> = bands.edges().iter().map(|e| format!("{e:.6}")).collect();
            println!("bands: q={} edges=[{}]", bands.q(), edges.join(", "));
            Ok(())
        }

        Command::Equilibrium {
            common,
            support,
            grid,
            half_width,
            residual_tol,
            max_iterations,
        } => {
            let mut flags = RunConfig {
                grid,
                half_width,
                residual_tol,
                max_iterations,
                ..Default::default()
            };
            if let Some(s) = &support {
                flags.fixed_support = Some(parse_list("--support", s)?);
            }
            let cfg = resolve(&common, flags, "equilibrium")?;
            let dir = OutDir::create(&common.out)?;
            write_resolved(&dir, &cfg)?;
            let params = SolverParams {
                max_iterations: cfg.max_iterations.unwrap_or(20_000),
                residual_tol: cfg.residual_tol.unwrap_or(5e-3),
            };
            let result = match &cfg.fixed_support {
                Some(edges) => {
                    let bands = BandSet::new(edges.clone())?;
                    equilibrium::minimize_fixed_support(&bands, cfg.grid.unwrap_or(400), &params)?
                }
                None => {
                    let pot = need_potential(&cfg)?;
                    equilibrium::minimize_external_field(
                        &pot,
                        cfg.half_width.unwrap_or(3.5),
                        cfg.grid.unwrap_or(2000),
                        &params,
                    )?
                }
            };
            dir.write_table(
                Format::parse(&common.format)?,
                "measure",
                None,
                "node,weight",
                result
                    .measure
                    .nodes
                    .iter()
                    .zip(&result.measure.weights)
                    .map(|(x, w)| format!("{},{}", num(*x), num(*w))),
            )?;
            dir.write_json(
                "equilibrium.json",
                &json!({
                    "support_edges": result.support.edges(),
                    "lagrange_constant": result.lagrange_constant,
                    "el_residual_sup": result.el_residual_sup,
                    "el_slack_min": result.el_slack_min,
                    "iterations": result.iterations,
                    "converged": result.converged,
                }),
            )?;
            println!(
                "equilibrium: q={} l={:.6} residual={:.2e} iterations={} converged={}",
                result.support.q(),
                result.lagrange_constant,
                result.el_residual_sup,
                result.iterations,
                result.converged
            );
            if !result.converged {
                return Err(Failure::Numerical(
                    Error::NoConvergence {
                        op: "equilibrium.minimize",
                        iterations: result.iterations,
                        residual: result.el_residual_sup,
                    }
                    .to_string(),
                ));
            }
            Ok(())
        }

        Command::Recurrence { common, n, l_max } => {
            let flags = RunConfig { n, l_max, ..Default::default() };
            let cfg = resolve(&common, flags, "recurrence")?;
            let dir = OutDir::create(&common.out)?;
            write_resolved(&dir, &cfg)?;
            let pot = need_potential(&cfg)?;
            let n = cfg.n.unwrap_or(40);
            let l_max = cfg.l_max.unwrap_or(n + 10);
            let rule = orthopoly::auto_rule(&pot, n, l_max + 1, 24)?;
            let table = orthopoly::stieltjes_recurrence(&pot, n, l_max, &rule)?;
            let spec = cfg.potential.as_ref().unwrap();
            let comment = format!(
                "potential kind={} coeffs={:?} g={} n={} L={} nodes={}",
                spec.kind,
                spec.v.as_ref().or(spec.v_upper.as_ref()).unwrap(),
                pot.amplitude(),
                n,
                rule.truncation,
                rule.len()
            );
            dir.write_table(
                Format::parse(&common.format)?,
                "recurrence",
                Some(&comment),
                "l,r,s",
                (0..table.r.len()).map(|l| format!("{l},{},{}", num(table.r[l]), num(table.s[l]))),
            )?;
            println!(
                "recurrence: n={n} l_max={l_max} r_n={:.8} nodes={}",
                table.r[n.min(table.r.len() - 1)],
                rule.len()
            );
            Ok(())
        }

        Command::Ids {
            common,
            section,
            lambda_min,
            lambda_max,
            lambda_points,
        } => {
            let flags = RunConfig {
                section,
                lambda_min,
                lambda_max,
                lambda_points,
                ..Default::default()
            };
            let cfg = resolve(&common, flags, "ids")?;
            let dir = OutDir::create(&common.out)?;
            write_resolved(&dir, &cfg)?;
            let pot = need_potential(&cfg)?;
            let bands = pot.bands()?;
            let op = jacobi::periodic_from_square(&pot)?;
            let m = cfg.section.unwrap_or(2000);
            let lo = cfg.lambda_min.unwrap_or(bands.min_edge() - 0.5);
            let hi = cfg.lambda_max.unwrap_or(bands.max_edge() + 0.5);
            let pts = cfg.lambda_points.unwrap_or(1000);
            let grid: Vec<f64> = (0..pts)
                .map(|i| lo + (hi - lo) * i as f64 / (pts - 1).max(1) as f64)
                .collect();
            let est = jacobi::ids_estimate(&op, m, &grid);
            let mut sup = 0.0f64;
            let rows: Vec<String> = grid
                .iter()
                .zip(&est)
                .map(|(&x, &k)| {
                    let (_, nu) = pot.tail_functions(x).unwrap_or((f64::NAN, f64::NAN));
                    sup = sup.max((k - nu).abs());
                    format!("{},{},{}", num(x), num(k), num(nu))
                })
                .collect();
            dir.write_table(
                Format::parse(&common.format)?,
                "ids",
                None,
                "lambda,counting_tail,nu_tail",
                rows.into_iter(),
            )?;
            println!("ids: m={m} points={pts} sup|k_m - nu|={sup:.3e}");
            Ok(())
        }

        Command::Hill { common, r, s } => {
            let cfg = resolve(
                &common,
                RunConfig {
                    coefficients_r: r.as_deref().map(|t| parse_list("--r", t)).transpose()?,
                    coefficients_s: s.as_deref().map(|t| parse_list("--s", t)).transpose()?,
                    ..Default::default()
                },
                "hill",
            )?;
            let dir = OutDir::create(&common.out)?;
            write_resolved(&dir, &cfg)?;
            let op = match (&cfg.coefficients_r, &cfg.coefficients_s) {
                (Some(r), s) => jacobi::JacobiOperator::periodic(
                    r.clone(),
                    s.clone().unwrap_or_else(|| vec![0.0; r.len()]),
                )?,
                _ => jacobi::periodic_from_square(&need_potential(&cfg)?)?,
            };
            let hill = jacobi::hill_discriminant(&op)?;
            dir.write_json(
                "hill.json",
                &json!({
                    "coefficients": hill.coeffs,
                    "band_edges": hill.bands.edges(),
                }),
            )?;
            println!(
                "hill: degree={} bands={} coeffs={:?}",
                hill.coeffs.len() - 1,
                hill.bands.q(),
                hill.coeffs
            );
            Ok(())
        }

        Command::Lyapunov {
            common,
            lambda_min,
            lambda_max,
            lambda_points,
        } => {
            let flags = RunConfig {
                lambda_min,
                lambda_max,
                lambda_points,
                ..Default::default()
            };
            let cfg = resolve(&common, flags, "lyapunov")?;
            let dir = OutDir::create(&common.out)?;
            write_resolved(&dir, &cfg)?;
            let pot = need_potential(&cfg)?;
            let bands = pot.bands()?;
            let op = jacobi::periodic_from_square(&pot)?;
            let lo = cfg.lambda_min.unwrap_or(bands.min_edge() - 1.0);
            let hi = cfg.lambda_max.unwrap_or(bands.max_edge() + 1.0);
            let pts = cfg.lambda_points.unwrap_or(801);
            dir.write_table(
                Format::parse(&common.format)?,
                "lyapunov",
                None,
                "lambda,gamma",
                (0..pts).map(|i| {
                    let x = lo + (hi - lo) * i as f64 / (pts - 1).max(1) as f64;
                    format!("{},{}", num(x), num(jacobi::lyapunov_exponent(&op, x, 0)))
                }),
            )?;
            println!("lyapunov: wrote {pts} samples on [{lo:.3}, {hi:.3}]");
            Ok(())
        }

        Command::Surface {
            common,
            edges,
            surface_points,
        } => {
            let cfg = resolve(
                &common,
                RunConfig {
                    fixed_support: edges.as_deref().map(|t| parse_list("--edges", t)).transpose()?,
                    surface_points,
                    ..Default::default()
                },
                "surface",
            )?;
            let dir = OutDir::create(&common.out)?;
            write_resolved(&dir, &cfg)?;
            let bands = match &cfg.fixed_support {
                Some(e) => BandSet::new(e.clone())?,
                None => need_potential(&cfg)?.bands()?,
            };
            let surface = riemann::surface_from_bands(&bands, cfg.surface_points.unwrap_or(96))?;
            let g = surface.genus;
            let tau_re: Vec<f64> = surface.tau.iter().map(|t| t.re).collect();
            let tau_im: Vec<f64> = surface.tau.iter().map(|t| t.im).collect();
            dir.write_json(
                "surface.json",
                &json!({
                    "edges": bands.edges(),
                    "genus": g,
                    "tau_re_rowwise": tau_re,
                    "tau_im_rowwise": tau_im,
                    "frequencies": surface.u_freq,
                    "u_inf": surface.u_inf,
                    "l_sigma": surface.l_sigma,
                    "im_tau_min_eig": surface.im_tau_min_eig,
                    "lattice_relation_distance": riemann::rie_relation_check(&surface),
                }),
            )?;
            println!(
                "surface: genus={} l_sigma={:.8} relation_dist={:.2e}",
                g,
                surface.l_sigma,
                riemann::rie_relation_check(&surface)
            );
            Ok(())
        }

        Command::ThetaFit { common, n, k_window } => {
            let cfg = resolve(&common, RunConfig { n, k_window, ..Default::default() }, "theta-fit")?;
            let dir = OutDir::create(&common.out)?;
            write_resolved(&dir, &cfg)?;
            let pot = need_potential(&cfg)?;
            let bands = pot.bands()?;
            let surface = riemann::surface_from_bands(&bands, cfg.surface_points.unwrap_or(96))?;
            let n = cfg.n.unwrap_or(60);
            let k_window = cfg.k_window.unwrap_or(3);
            let rule = orthopoly::auto_rule(&pot, n, n + k_window + 1, 24)?;
            let table = orthopoly::stieltjes_recurrence(&pot, n, n + k_window, &rule)?;
            let targets: Vec<f64> = (0..=k_window)
                .map(|k| table.r[n + k] * table.r[n + k])
                .collect();
            let (shift, residual) = riemann::shift_equivalence_fit(&surface, &targets)?;
            let orbit: Vec<(usize, f64)> = (0..=k_window)
                .map(|k| {
                    let x: Vec<f64> = shift
                        .iter()
                        .zip(&surface.u_freq)
                        .map(|(s, u)| s + k as f64 * u)
                        .collect();
                    (k, riemann::coefficient_map_r(&surface, &x).unwrap_or(f64::NAN))
                })
                .collect();
            dir.write_json(
                "thetafit.json",
                &json!({
                    "shift": shift,
                    "residual": residual,
                    "targets_squared": targets,
                    "n": n,
                }),
            )?;
            dir.write_table(
                Format::parse(&common.format)?,
                "orbit",
                None,
                "k,theta_value,target_squared",
                orbit
                    .iter()
                    .map(|(k, v)| format!("{k},{},{}", num(*v), num(targets[*k]))),
            )?;
            println!("theta-fit: n={n} residual={residual:.3e} shift={shift:?}");
            Ok(())
        }

        Command::Mc {
            common,
            n,
            chains,
            sweeps,
            burn_in,
            thin,
        } => {
            let flags = RunConfig {
                n,
                chains,
                sweeps,
                burn_in,
                thin,
                ..Default::default()
            };
            let cfg = resolve(&common, flags, "mc")?;
            let dir = OutDir::create(&common.out)?;
            write_resolved(&dir, &cfg)?;
            let pot = need_potential(&cfg)?;
            let n = cfg.n.unwrap_or(64);
            let params = mc_params(&cfg);
            let sample = rmt::sample_loggas(&pot, n, &params)?;
            // Binary rows of sorted eigenvalues, little-endian f64.
            let mut bytes = Vec::with_capacity(sample.retained() * n * 8);
            for chain in &sample.chains {
                for cfg_row in chain {
                    for &x in cfg_row {
                        bytes.extend_from_slice(&x.to_le_bytes());
                    }
                }
            }
            dir.write_bytes("eigenvalues.bin", &bytes)?;
            dir.write_json(
                "mc_meta.json",
                &json!({
                    "n": n,
                    "chains": params.chains,
                    "sweeps": params.sweeps,
                    "burn_in": params.burn_in,
                    "thin": params.thin,
                    "seed": params.seed,
                    "acceptance": sample.acceptance,
                    "retained": sample.retained(),
                }),
            )?;
            let stat = rmt::linear_statistic(&sample, &TestFunction::Polynomial(vec![0.0, 0.0, 1.0]));
            dir.write_table(
                Format::parse(&common.format)?,
                "stats",
                None,
                "statistic,mean,std_error,tau_int",
                std::iter::once(format!(
                    "second_moment,{},{},{}",
                    num(stat.mean.re),
                    num(stat.std_error),
                    num(stat.tau_int)
                )),
            )?;
            println!(
                "mc: n={n} retained={} acceptance={:.2} second_moment={:.5}+-{:.5}",
                sample.retained(),
                sample.acceptance,
                stat.mean.re,
                stat.std_error
            );
            Ok(())
        }

        Command::Gap {
            common,
            n,
            interval,
            quad_order,
            sweeps,
            chains,
            burn_in,
        } => {
            let mut flags = RunConfig {
                n,
                quad_order,
                sweeps,
                chains,
                burn_in,
                ..Default::default()
            };
            if let Some(t) = &interval {
                let v = parse_list("--interval", t)?;
                if v.len() != 2 {
                    return Err(Failure::Validation("--interval needs [lo, hi]".into()));
                }
                flags.interval = Some((v[0], v[1]));
            }
            let cfg = resolve(&common, flags, "gap")?;
            let dir = OutDir::create(&common.out)?;
            write_resolved(&dir, &cfg)?;
            let pot = need_potential(&cfg)?;
            let n = cfg.n.unwrap_or(8);
            let interval = cfg.interval.unwrap_or((-0.25, 0.25));
            let rule = orthopoly::auto_rule(&pot, n, n + 1, 24)?;
            let table = orthopoly::stieltjes_recurrence(&pot, n, n, &rule)?;
            let fredholm =
                rmt::gap_probability(&pot, &table, n, interval, cfg.quad_order.unwrap_or(48))?;
            let params = mc_params(&cfg);
            let sample = rmt::sample_loggas(&pot, n, &params)?;
            let (freq, se) = rmt::empty_interval_frequency(&sample, interval);
            dir.write_json(
                "gap.json",
                &json!({
                    "interval": [interval.0, interval.1],
                    "fredholm": fredholm.value,
                    "clamped": fredholm.clamped,
                    "mc_frequency": freq,
                    "mc_std_error": se,
                    "retained": sample.retained(),
                }),
            )?;
            println!(
                "gap: fredholm={:.6} mc={:.6}+-{:.6} ({} configs)",
                fredholm.value,
                freq,
                se,
                sample.retained()
            );
            Ok(())
        }

        Command::Covariance {
            common,
            n_list,
            z_im,
            sweeps,
            chains,
            burn_in,
        } => {
            let mut flags = RunConfig {
                z_im,
                sweeps,
                chains,
                burn_in,
                ..Default::default()
            };
            if let Some(t) = &n_list {
                let v = parse_list("--n-list", t)?;
                flags.n_list = Some(v.iter().map(|&x| x as usize).collect());
            }
            let cfg = resolve(&common, flags, "covariance")?;
            let dir = OutDir::create(&common.out)?;
            write_resolved(&dir, &cfg)?;
            let pot = need_potential(&cfg)?;
            let zi = cfg.z_im.unwrap_or(2.0);
            let phi1 = TestFunction::Resolvent { z: Complex64::new(0.0, zi) };
            let phi2 = TestFunction::Resolvent { z: Complex64::new(0.0, -zi) };
            let n_list = cfg.n_list.clone().unwrap_or_else(|| vec![16, 32]);
            let params = mc_params(&cfg);
            let est = rmt::covariance_scaling(&pot, &phi1, &phi2, &n_list, &params)?;
            dir.write_table(
                Format::parse(&common.format)?,
                "covariance",
                None,
                "n,cov_re,cov_im,std_error,n2_cov_re,n2_cov_im",
                est.iter().map(|e| {
                    format!(
                        "{},{},{},{},{},{}",
                        e.n,
                        num(e.cov.re),
                        num(e.cov.im),
                        num(e.std_error),
                        num(e.n2_cov.re),
                        num(e.n2_cov.im)
                    )
                }),
            )?;
            let summary: Vec<String> = est
                .iter()
                .map(|e| format!("n={}: n^2 cov = {:.4}", e.n, e.n2_cov.re))
                .collect();
            println!("covariance: {}", summary.join("; "));
            Ok(())
        }

        Command::VerifyAll { common, suite } => {
            let cfg = resolve(
                &common,
                RunConfig { suite: Some(suite.clone()), ..Default::default() },
                "verify-all",
            )?;
            let dir = OutDir::create(&common.out)?;
            write_resolved(&dir, &cfg)?;
            let suite = match cfg.suite.as_deref() {
                Some("full") => Suite::Full,
                Some("quick") | None => Suite::Quick,
                Some(other) => {
                    return Err(Failure::Validation(format!("unknown suite {other:?}")))
                }
            };
            let results = verify::run_all(suite);
            let mut all_pass = true;
            for r in &results {
                all_pass &= r.passed;
                println!(
                    "{} {:<24} {} ({:.1}s)",
                    if r.passed { "PASS" } else { "FAIL" },
                    r.name,
                    r.detail,
                    r.seconds
                );
            }
            dir.write_table(
                Format::parse(&common.format)?,
                "verify",
                None,
                "check,passed,seconds,detail",
                results.iter().map(|r| {
                    format!("{},{},{},\"{}\"", r.name, r.passed, num(r.seconds), r.detail)
                }),
            )?;
            if all_pass {
                Ok(())
            } else {
                Err(Failure::Numerical("verification suite failed".into()))
            }
        }
    }
}
