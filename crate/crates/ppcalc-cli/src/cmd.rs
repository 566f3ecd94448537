//! Command implementations: each builds the model from merged config,
//! runs the analysis, and emits a JSON report plus CSV plot data.

use crate::args::*;
use crate::io::{self, Report};
use crate::{merge, CliError};
use ppcalc::base::BaseMeasure;
use ppcalc::eppf::{self, EppfSpec};
use ppcalc::levy::{LevyIntensity, LocationFn, SeedRecord};
use ppcalc::levycox::{self, IntensityModel, Kernel, StepFn};
use ppcalc::moments;
use ppcalc::ntr::{self, HazardPrior, HazardMeasure, TimeDistribution};
use ppcalc::numeric::stats;
use ppcalc::partition::{enumerate_partitions, Partition};
use ppcalc::pk::{self, PkSpec};
use ppcalc::scaled::{self, ScaledLawSpec};
use ppcalc::transforms::{self, TransformRequest};
use ppcalc::verify;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use std::collections::HashMap;
use std::sync::Arc;
use std::time::Instant;

fn eppf_spec(family: &str, alpha: Option<f64>, theta: Option<f64>) -> Result<EppfSpec, CliError> {
    match family {
        "ewens" => EppfSpec::ewens(theta.ok_or_else(|| miss("theta"))?).map_err(CliError::Compute),
        "pd" => EppfSpec::two_param(
            alpha.ok_or_else(|| miss("alpha"))?,
            theta.ok_or_else(|| miss("theta"))?,
        )
        .map_err(CliError::Compute),
        other => Err(CliError::Config(format!(
            "unknown partition family `{other}` (expected ewens or pd)"
        ))),
    }
}

fn miss(name: &str) -> CliError {
    CliError::Config(format!("missing required parameter `{name}`"))
}

fn parse_pair(s: &str, what: &str) -> Result<(f64, f64), CliError> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err(CliError::Config(format!("{what}: expected `lo,hi`")));
    }
    let lo = parts[0].trim().parse().map_err(|e| {
        CliError::Config(format!("{what}: bad lower bound: {e}"))
    })?;
    let hi = parts[1].trim().parse().map_err(|e| {
        CliError::Config(format!("{what}: bad upper bound: {e}"))
    })?;
    Ok((lo, hi))
}

pub fn run_eppf(a: EppfArgs, cfg: &Value, seed: u64, out_dir: &str) -> Result<(), CliError> {
    let family = merge::string(a.family, cfg, "family").unwrap_or_else(|| "ewens".into());
    let alpha = merge::number(a.alpha, cfg, "alpha");
    let theta = merge::number(a.theta, cfg, "theta");
    let n = merge::integer(a.n, cfg, "n").unwrap_or(4);
    let spec = eppf_spec(&family, alpha, theta)?;
    let mut rows = Vec::new();
    let mut total = 0.0f64;
    for p in enumerate_partitions(n).map_err(CliError::Compute)? {
        let prob = eppf::eppf_eval(&spec, &p);
        total += prob;
        rows.push(vec![p.to_string(), format!("{prob:.17e}")]);
    }
    io::write_csv(out_dir, "eppf_table.csv", &["partition", "probability"], &rows)?;
    let report = Report::new(
        "eppf",
        seed,
        json!({"family": family, "alpha": alpha, "theta": theta, "n": n}),
        json!({"partitions": rows.len(), "probability_sum": total}),
    );
    let path = io::write_report(out_dir, &report)?;
    println!(
        "eppf: {} partitions of {n}, probabilities sum to {total:.12}; report at {}",
        rows.len(),
        path.display()
    );
    Ok(())
}

pub fn run_sample_partition(
    a: SampleArgs,
    cfg: &Value,
    seed: u64,
    out_dir: &str,
) -> Result<(), CliError> {
    let family = merge::string(a.family, cfg, "family").unwrap_or_else(|| "ewens".into());
    let alpha = merge::number(a.alpha, cfg, "alpha");
    let theta = merge::number(a.theta, cfg, "theta");
    let n = merge::integer(a.n, cfg, "n").unwrap_or(4);
    let draws = merge::integer(a.draws, cfg, "draws").unwrap_or(10_000);
    let spec = eppf_spec(&family, alpha, theta)?;
    let batch = eppf::sample_crp_batch(&spec, n, draws, seed);
    let mut counts: HashMap<Partition, u64> = HashMap::new();
    for p in batch {
        *counts.entry(p).or_insert(0) += 1;
    }
    let mut rows = Vec::new();
    let mut chi_square = Value::Null;
    if n <= 8 {
        let all: Vec<Partition> = enumerate_partitions(n).map_err(CliError::Compute)?.collect();
        let probs: Vec<f64> = all.iter().map(|p| eppf::eppf_eval(&spec, p)).collect();
        let observed: Vec<u64> = all.iter().map(|p| *counts.get(p).unwrap_or(&0)).collect();
        for (i, p) in all.iter().enumerate() {
            rows.push(vec![
                p.to_string(),
                observed[i].to_string(),
                format!("{:.17e}", probs[i]),
            ]);
        }
        let stat = stats::chi_square_statistic(&observed, &probs);
        let crit = stats::chi_square_critical(all.len() - 1, 0.001);
        chi_square = json!({"statistic": stat, "critical_0_001": crit, "rejected": stat >= crit});
    } else {
        let mut sorted: Vec<(Partition, u64)> = counts.into_iter().collect();
        sorted.sort_by(|a, b| a.0.cmp(&b.0));
        for (p, c) in sorted {
            rows.push(vec![p.to_string(), c.to_string(), String::new()]);
        }
    }
    io::write_csv(
        out_dir,
        "partition_counts.csv",
        &["partition", "count", "exact_probability"],
        &rows,
    )?;
    let report = Report::new(
        "sample-partition",
        seed,
        json!({"family": family, "alpha": alpha, "theta": theta, "n": n, "draws": draws}),
        json!({"distinct_partitions": rows.len(), "chi_square": chi_square}),
    );
    let path = io::write_report(out_dir, &report)?;
    println!(
        "sample-partition: {draws} draws over {} distinct partitions; report at {}",
        rows.len(),
        path.display()
    );
    Ok(())
}

fn intensity_from(
    family: &str,
    mass: f64,
    alpha: Option<f64>,
    b: Option<f64>,
    support: (f64, f64),
) -> Result<LevyIntensity, CliError> {
    let base = BaseMeasure::uniform(support.0, support.1, mass).map_err(CliError::Compute)?;
    match family {
        "gamma" => LevyIntensity::gamma_process(base).map_err(CliError::Compute),
        "gg" => LevyIntensity::generalized_gamma(
            alpha.ok_or_else(|| miss("alpha"))?,
            b.unwrap_or(1.0),
            base,
        )
        .map_err(CliError::Compute),
        "beta" => LevyIntensity::beta_process(
            ppcalc::levy::CFunction::Constant(b.unwrap_or(1.0)),
            base,
        )
        .map_err(CliError::Compute),
        "poisson" => LevyIntensity::unit_jumps(1.0, base).map_err(CliError::Compute),
        other => Err(CliError::Config(format!(
            "unknown intensity family `{other}` (expected gamma, gg, beta or poisson)"
        ))),
    }
}

pub fn run_moments(a: MomentsArgs, cfg: &Value, seed: u64, out_dir: &str) -> Result<(), CliError> {
    let family = merge::string(a.family, cfg, "family").unwrap_or_else(|| "gamma".into());
    let mass = merge::number(a.mass, cfg, "mass").unwrap_or(1.0);
    let alpha = merge::number(a.alpha, cfg, "alpha");
    let b = merge::number(a.b, cfg, "b");
    let order = merge::integer(a.order, cfg, "order").unwrap_or(4);
    let region = merge::string(a.region, cfg, "region");
    let li = intensity_from(&family, mass, alpha, b, (0.0, 1.0))?;
    let reg = match &region {
        None => moments::Region::All,
        Some(s) => {
            let (lo, hi) = parse_pair(s, "region")?;
            moments::Region::Interval { lo, hi }
        }
    };
    let mut rows = Vec::new();
    for k in 1..=order {
        let v = moments::measure_moment(&li, reg, k).map_err(CliError::Compute)?;
        rows.push(vec![k.to_string(), format!("{v:.17e}")]);
    }
    io::write_csv(out_dir, "moments.csv", &["order", "moment"], &rows)?;
    let report = Report::new(
        "moments",
        seed,
        json!({"family": family, "mass": mass, "alpha": alpha, "b": b,
               "order": order, "region": region}),
        json!({"moments": rows.iter().map(|r| r[1].clone()).collect::<Vec<_>>()}),
    );
    let path = io::write_report(out_dir, &report)?;
    println!("moments: orders 1..={order} written; report at {}", path.display());
    Ok(())
}

pub fn run_fit_intensity(
    a: FitIntensityArgs,
    cfg: &Value,
    seed: u64,
    out_dir: &str,
) -> Result<(), CliError> {
    let prior_family = merge::string(a.prior, cfg, "prior").unwrap_or_else(|| "gamma".into());
    let mass = merge::number(a.mass, cfg, "mass").unwrap_or(1.0);
    let alpha = merge::number(a.alpha, cfg, "alpha");
    let b = merge::number(a.b, cfg, "b");
    let data_path = merge::string(a.data, cfg, "data").ok_or_else(|| miss("data"))?;
    let xs = io::read_events(&data_path)?;
    let t_max = xs.iter().cloned().fold(0.0f64, f64::max);
    let default_window = format!("0,{}", t_max * 1.25);
    let window = parse_pair(
        &merge::string(a.window, cfg, "window").unwrap_or(default_window),
        "window",
    )?;
    let base = parse_pair(
        &merge::string(a.base, cfg, "base").unwrap_or(format!("0,{}", window.1)),
        "base",
    )?;
    let kernel_name = merge::string(a.kernel, cfg, "kernel").unwrap_or_else(|| "uniform".into());
    let kp = merge::number(a.kernel_param, cfg, "kernel_param").unwrap_or(1.0);
    let kernel = match kernel_name.as_str() {
        "uniform" => Kernel::UniformWindow { width: kp },
        "exponential" => Kernel::OneSidedExp { rate: kp },
        "gaussian" => Kernel::Gaussian { sigma: kp },
        "indicator" => Kernel::Indicator { half_width: kp },
        other => {
            return Err(CliError::Config(format!(
                "unknown kernel `{other}` (expected uniform, exponential, gaussian or indicator)"
            )))
        }
    };
    let draws = merge::integer(a.draws, cfg, "draws").unwrap_or(0);
    let eps = merge::number(a.eps, cfg, "eps").unwrap_or(1e-4);
    let grid_points = merge::integer(a.grid_points, cfg, "grid_points").unwrap_or(20);
    let prior = intensity_from(&prior_family, mass, alpha, b, base)?;
    let model = IntensityModel::new(
        kernel,
        prior,
        StepFn::constant(1.0, window.0, window.1),
        window,
    )
    .map_err(CliError::Compute)?;
    let fitted = model.fit(&xs).map_err(CliError::Compute)?;
    let grid: Vec<f64> = (1..=grid_points)
        .map(|i| window.0 + (window.1 - window.0) * i as f64 / (grid_points + 1) as f64)
        .collect();
    let exact_path = xs.len() <= 8;
    let mut rows = Vec::new();
    let fit = if draws > 0 {
        Some(levycox::fit_posterior(&fitted, draws, eps, seed).map_err(CliError::Compute)?)
    } else {
        None
    };
    for &t in &grid {
        let mut row = vec![format!("{t:.8}")];
        if exact_path {
            let exact = levycox::posterior_intensity_mean(&fitted, t).map_err(CliError::Compute)?;
            row.push(format!("{exact:.12e}"));
        } else {
            row.push(String::new());
        }
        if let Some(fit) = &fit {
            let (mc, se) = levycox::weighted_posterior_mean(&fit.draws, &|d| {
                d.intensity_at(&model.kernel, t)
            })
            .map_err(CliError::Compute)?;
            row.push(format!("{mc:.12e}"));
            row.push(format!("{se:.6e}"));
        } else {
            row.push(String::new());
            row.push(String::new());
        }
        rows.push(row);
    }
    io::write_csv(
        out_dir,
        "intensity_curve.csv",
        &["t", "posterior_mean_exact", "posterior_mean_mc", "mc_stderr"],
        &rows,
    )?;
    let (marginal, marginal_se) = if exact_path {
        (
            levycox::marginal_likelihood(&fitted).map_err(CliError::Compute)?,
            0.0,
        )
    } else {
        levycox::marginal_likelihood_wcr(&fitted, draws.max(10_000), seed)
            .map_err(CliError::Compute)?
    };
    let failures = fit.as_ref().map(|f| f.failures.len()).unwrap_or(0);
    let report = Report::new(
        "fit-intensity",
        seed,
        json!({"prior": prior_family, "mass": mass, "alpha": alpha, "b": b,
               "kernel": kernel_name, "kernel_param": kp, "window": window,
               "data": data_path, "n_events": xs.len(), "draws": draws,
               "eps": eps}),
        json!({"marginal_likelihood": marginal,
               "marginal_stderr": marginal_se,
               "exact_path": exact_path,
               "draw_failures": failures,
               "truncation_eps": eps}),
    );
    let path = io::write_report(out_dir, &report)?;
    println!(
        "fit-intensity: {} events, marginal likelihood {marginal:.6e}; report at {}",
        xs.len(),
        path.display()
    );
    Ok(())
}

pub fn run_fit_survival(
    a: FitSurvivalArgs,
    cfg: &Value,
    seed: u64,
    out_dir: &str,
) -> Result<(), CliError> {
    let data_path = merge::string(a.data, cfg, "data").ok_or_else(|| miss("data"))?;
    let ds = io::read_survival(&data_path)?;
    let dirichlet = a.dirichlet || merge::boolean(cfg, "dirichlet");
    let theta = merge::number(a.theta, cfg, "theta");
    let f0_spec = merge::string(a.f0, cfg, "f0").unwrap_or_else(|| "exponential,1.0".into());
    let f0 = parse_time_distribution(&f0_spec)?;
    let prior_name;
    let prior = if dirichlet {
        prior_name = "dirichlet".to_string();
        HazardPrior::dirichlet(theta.ok_or_else(|| miss("theta"))?, f0)
            .map_err(CliError::Compute)?
    } else {
        prior_name = merge::string(a.prior, cfg, "prior").unwrap_or_else(|| "beta".into());
        if prior_name != "beta" {
            return Err(CliError::Config(format!(
                "unknown survival prior `{prior_name}` (expected beta or --dirichlet)"
            )));
        }
        let c = merge::number(a.c, cfg, "c").unwrap_or(1.0);
        let t_max = ds
            .records()
            .iter()
            .map(|r| r.time)
            .fold(0.0f64, f64::max);
        let rate = merge::number(a.a0_rate, cfg, "a0_rate").unwrap_or(0.5);
        let horizon = merge::number(a.a0_horizon, cfg, "a0_horizon").unwrap_or(t_max * 2.0);
        HazardPrior::beta(
            ppcalc::levy::CFunction::Constant(c),
            HazardMeasure::Bounded { rate, horizon },
        )
        .map_err(CliError::Compute)?
    };
    let draws = merge::integer(a.draws, cfg, "draws").unwrap_or(0);
    let eps = merge::number(a.eps, cfg, "eps").unwrap_or(1e-4);
    let grid_points = merge::integer(a.grid_points, cfg, "grid_points").unwrap_or(20);
    let t_max = ds
        .records()
        .iter()
        .map(|r| r.time)
        .fold(0.0f64, f64::max);
    let grid: Vec<f64> = (1..=grid_points)
        .map(|i| t_max * 1.2 * i as f64 / grid_points as f64)
        .collect();
    let mc = if draws > 0 {
        Some(
            ntr::mean_posterior_survival(&prior, &ds, eps, &grid, draws, seed)
                .map_err(CliError::Compute)?,
        )
    } else {
        None
    };
    let mut rows = Vec::new();
    for (k, &t) in grid.iter().enumerate() {
        let exact = ntr::posterior_survival_mean(&prior, &ds, t).map_err(CliError::Compute)?;
        let mut row = vec![format!("{t:.8}"), format!("{exact:.12e}")];
        if let Some((means, ses)) = &mc {
            row.push(format!("{:.12e}", means[k]));
            row.push(format!("{:.6e}", ses[k]));
        } else {
            row.push(String::new());
            row.push(String::new());
        }
        rows.push(row);
    }
    io::write_csv(
        out_dir,
        "survival_curve.csv",
        &["t", "posterior_mean", "mc_mean", "mc_stderr"],
        &rows,
    )?;
    let post = ntr::posterior_hazard(&prior, &ds);
    let jumps: Vec<Value> = post
        .jumps
        .iter()
        .map(|j| {
            json!({"time": j.time, "mult": j.mult, "beta_a": j.beta_a, "beta_b": j.beta_b,
                   "mark": j.mark})
        })
        .collect();
    let report = Report::new(
        "fit-survival",
        seed,
        json!({"prior": prior_name, "dirichlet": dirichlet, "theta": theta,
               "f0": f0_spec, "data": data_path,
               "n_events": ds.n_events(), "n_censored": ds.n_censored(),
               "draws": draws, "eps": eps}),
        json!({"jumps": jumps, "grid_points": grid_points,
               "truncation_eps": eps, "mc_draws": draws}),
    );
    let path = io::write_report(out_dir, &report)?;
    println!(
        "fit-survival: {} events / {} censored, {} posterior jumps; report at {}",
        ds.n_events(),
        ds.n_censored(),
        post.jumps.len(),
        path.display()
    );
    Ok(())
}

fn parse_time_distribution(s: &str) -> Result<TimeDistribution, CliError> {
    let parts: Vec<&str> = s.split(',').map(|p| p.trim()).collect();
    match parts.as_slice() {
        ["exponential", rate] => Ok(TimeDistribution::Exponential {
            rate: rate
                .parse()
                .map_err(|e| CliError::Config(format!("f0 rate: {e}")))?,
        }),
        ["uniform", a, b] => Ok(TimeDistribution::Uniform {
            a: a.parse()
                .map_err(|e| CliError::Config(format!("f0 a: {e}")))?,
            b: b.parse()
                .map_err(|e| CliError::Config(format!("f0 b: {e}")))?,
        }),
        _ => Err(CliError::Config(format!(
            "bad f0 `{s}` (expected `exponential,RATE` or `uniform,A,B`)"
        ))),
    }
}

pub fn run_transform(
    a: TransformArgs,
    cfg: &Value,
    seed: u64,
    out_dir: &str,
) -> Result<(), CliError> {
    let alpha = merge::number(a.alpha, cfg, "alpha").unwrap_or(0.5);
    let theta = merge::number(a.theta, cfg, "theta").unwrap_or(0.5);
    let z = merge::number(a.z, cfg, "z").unwrap_or(1.0);
    let f_spec = merge::string(a.f, cfg, "f").unwrap_or_else(|| "indicator,0,0.5".into());
    let draws = merge::integer(a.draws, cfg, "draws").unwrap_or(5000);
    let f: LocationFn = {
        let parts: Vec<&str> = f_spec.split(',').map(|p| p.trim()).collect();
        match parts.as_slice() {
            ["indicator", lo, hi] => {
                let lo: f64 = lo
                    .parse()
                    .map_err(|e| CliError::Config(format!("f lo: {e}")))?;
                let hi: f64 = hi
                    .parse()
                    .map_err(|e| CliError::Config(format!("f hi: {e}")))?;
                Arc::new(move |y: f64| if y >= lo && y < hi { 1.0 } else { 0.0 })
            }
            ["linear"] => Arc::new(|y: f64| y),
            _ => {
                return Err(CliError::Config(format!(
                    "bad functional `{f_spec}` (expected `indicator,LO,HI` or `linear`)"
                )))
            }
        }
    };
    let base = BaseMeasure::uniform(0.0, 1.0, 1.0).map_err(CliError::Compute)?;
    let closed = transforms::pd_stieltjes_closed_form(alpha, theta, &base, &[(f.clone(), z)])
        .map_err(CliError::Compute)?;
    let mass_base = BaseMeasure::uniform(0.0, 1.0, alpha).map_err(CliError::Compute)?;
    let spec = ScaledLawSpec::new(
        LevyIntensity::stable(alpha, mass_base).map_err(CliError::Compute)?,
        theta,
        0,
    )
    .map_err(CliError::Compute)?;
    let req = TransformRequest::new(spec, vec![(f.clone(), z)]).map_err(CliError::Compute)?;
    let mixing = transforms::stieltjes_via_mixing(&req).map_err(CliError::Compute)?;
    let (mc, mc_se) = if draws > 0 {
        let samples: Vec<_> = (0..draws)
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(i as u64);
                scaled::pd_inverse_levy_sample(
                    alpha,
                    theta,
                    &base,
                    400,
                    &mut rng,
                    SeedRecord {
                        seed,
                        stream: i as u64,
                    },
                )
            })
            .collect::<Result<Vec<_>, _>>()
            .map_err(CliError::Compute)?;
        let (m, se) = transforms::mc_transform_estimate(&samples, &[(f, z)], theta)
            .map_err(CliError::Compute)?;
        (Some(m), Some(se))
    } else {
        (None, None)
    };
    let rows = vec![
        vec!["closed_form".into(), format!("{closed:.12e}"), String::new()],
        vec!["mixing_quadrature".into(), format!("{mixing:.12e}"), String::new()],
        vec![
            "monte_carlo".into(),
            mc.map(|v| format!("{v:.12e}")).unwrap_or_default(),
            mc_se.map(|v| format!("{v:.6e}")).unwrap_or_default(),
        ],
    ];
    io::write_csv(out_dir, "transform.csv", &["method", "value", "stderr"], &rows)?;
    let report = Report::new(
        "transform",
        seed,
        json!({"alpha": alpha, "theta": theta, "f": f_spec, "z": z, "draws": draws}),
        json!({"closed_form": closed, "mixing_quadrature": mixing,
               "monte_carlo": mc, "mc_stderr": mc_se}),
    );
    let path = io::write_report(out_dir, &report)?;
    println!(
        "transform: closed {closed:.8}, mixing {mixing:.8}{}; report at {}",
        mc.map(|v| format!(", mc {v:.8}")).unwrap_or_default(),
        path.display()
    );
    Ok(())
}

pub fn run_pk(a: PkArgs, cfg: &Value, seed: u64, out_dir: &str) -> Result<(), CliError> {
    let family = merge::string(a.family, cfg, "family").unwrap_or_else(|| "gamma".into());
    let mass = merge::number(a.mass, cfg, "mass").unwrap_or(1.0);
    let b = merge::number(a.b, cfg, "b").unwrap_or(1.0);
    let n = merge::integer(a.n, cfg, "n").unwrap_or(3);
    let base = BaseMeasure::uniform(0.0, 1.0, mass).map_err(CliError::Compute)?;
    let li = match family.as_str() {
        "gamma" => LevyIntensity::gamma_process(base).map_err(CliError::Compute)?,
        "ig" => LevyIntensity::generalized_gamma(0.5, b, base).map_err(CliError::Compute)?,
        other => {
            return Err(CliError::Config(format!(
                "unknown pk family `{other}` (expected gamma or ig)"
            )))
        }
    };
    let spec = PkSpec::new(li, None).map_err(CliError::Compute)?;
    let mut rows = Vec::new();
    let mut total = 0.0f64;
    for p in enumerate_partitions(n).map_err(CliError::Compute)? {
        let v = pk::pk_eppf(&spec, &p).map_err(CliError::Compute)?;
        total += v.value;
        rows.push(vec![
            p.to_string(),
            format!("{:.12e}", v.value),
            v.qmc_stderr.map(|e| format!("{e:.3e}")).unwrap_or_default(),
        ]);
    }
    io::write_csv(
        out_dir,
        "pk_eppf_table.csv",
        &["partition", "probability", "qmc_stderr"],
        &rows,
    )?;
    let report = Report::new(
        "pk",
        seed,
        json!({"family": family, "mass": mass, "b": b, "n": n}),
        json!({"partitions": rows.len(), "probability_sum": total}),
    );
    let path = io::write_report(out_dir, &report)?;
    println!(
        "pk: {} partitions, probabilities sum to {total:.8}; report at {}",
        rows.len(),
        path.display()
    );
    Ok(())
}

pub fn run_verify(seed: u64, out_dir: &str) -> Result<bool, CliError> {
    let start = Instant::now();
    let results = verify::run_all(seed).map_err(CliError::Compute)?;
    let mut all = true;
    for r in &results {
        println!(
            "criterion {:>2} [{}] {}",
            r.id,
            if r.passed { "PASS" } else { "FAIL" },
            r.name
        );
        for c in &r.checks {
            println!(
                "    {} {}: {}",
                if c.passed { "ok  " } else { "FAIL" },
                c.name,
                c.detail
            );
        }
        all &= r.passed;
    }
    println!("total runtime: {:.1} s", start.elapsed().as_secs_f64());
    // the deterministic body plus a separate timestamp field
    #[derive(serde::Serialize)]
    struct VerifyReport {
        timestamp: u64,
        body: Value,
    }
    let body: Value = serde_json::from_str(&verify::report_json(seed, &results))
        .map_err(|e| CliError::Config(format!("verify report: {e}")))?;
    let wrapped = VerifyReport {
        timestamp: std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        body,
    };
    std::fs::create_dir_all(out_dir).map_err(CliError::Io)?;
    let path = std::path::Path::new(out_dir).join("verify_report.json");
    std::fs::write(
        &path,
        serde_json::to_string_pretty(&wrapped)
            .map_err(|e| CliError::Config(format!("verify report: {e}")))?,
    )
    .map_err(CliError::Io)?;
    println!("report at {}", path.display());
    Ok(all)
}
