use std::path::PathBuf;

use clap::ValueEnum;
use finblock::channel_bounds::{
    dephasing_inner_exact, dephasing_order2, dephasing_order3, dephasing_outer_exact,
    depolarizing_outer, ea_dephasing_order2, erasure_exact_boundary, erasure_order3,
    inner_order2_from, min_uses_to_exceed_ci, sweep, BoundPoint, ChannelFamily, Method,
};
use finblock::entropy::{coherent_info_at, ChannelCoherentInfo};
use finblock::qcore::{DensityOperator, PauliChannel};
use serde::Serialize;

use crate::error::CliError;
use crate::output::{csv, RunManifest};
use crate::svg::{self, Marker, Series};

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChannelArg {
    Dephasing,
    Erasure,
    Depolarizing,
}

#[derive(clap::Args, Debug)]
pub struct BoundsArgs {
    #[arg(value_enum)]
    channel: ChannelArg,
    /// Dephasing probability.
    #[arg(long)]
    gamma: Option<f64>,
    /// Erasure probability.
    #[arg(long)]
    beta: Option<f64>,
    /// Depolarizing probability.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    eps: f64,
    /// Blocklengths: `a:b`, `a:b:step` or a comma-separated list.
    #[arg(long, default_value = "1:2000")]
    n: String,
    /// Comma-separated methods; run with an unknown method to list the supported ones.
    #[arg(long, value_delimiter = ',')]
    methods: Vec<String>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    svg: Option<PathBuf>,
    #[arg(long)]
    log_x: bool,
}

const DEPHASING_METHODS: &[&str] = &[
    "exact-outer",
    "exact-inner",
    "order3",
    "order2",
    "ea-order2",
];
const ERASURE_METHODS: &[&str] = &["exact", "order3"];
const DEPOLARIZING_METHODS: &[&str] = &[
    "exact-outer",
    "order3-outer",
    "order2-outer",
    "order2-inner",
];

fn supported(channel: ChannelArg) -> &'static [&'static str] {
    match channel {
        ChannelArg::Dephasing => DEPHASING_METHODS,
        ChannelArg::Erasure => ERASURE_METHODS,
        ChannelArg::Depolarizing => DEPOLARIZING_METHODS,
    }
}

pub fn parse_ns(text: &str) -> Result<Vec<u64>, CliError> {
    let bad = || CliError::BadArgs(format!("cannot parse blocklengths {text:?}"));
    let num = |s: &str| s.trim().parse::<u64>().map_err(|_| bad());
    let ns: Vec<u64> = if text.contains(':') {
        let parts: Vec<&str> = text.split(':').collect();
        let (a, b, step) = match parts.as_slice() {
            [a, b] => (num(a)?, num(b)?, 1),
            [a, b, s] => (num(a)?, num(b)?, num(s)?),
            _ => return Err(bad()),
        };
        if step == 0 || a > b {
            return Err(bad());
        }
        (a..=b).step_by(step as usize).collect()
    } else {
        text.split(',').map(num).collect::<Result<_, _>>()?
    };
    if ns.is_empty() || ns.contains(&0) {
        return Err(CliError::BadArgs("blocklengths must be at least 1".into()));
    }
    let mut ns = ns;
    ns.sort_unstable();
    ns.dedup();
    Ok(ns)
}

fn channel_param(a: &BoundsArgs) -> Result<f64, CliError> {
    let (wanted, value, others) = match a.channel {
        ChannelArg::Dephasing => ("--gamma", a.gamma, [a.beta, a.alpha]),
        ChannelArg::Erasure => ("--beta", a.beta, [a.gamma, a.alpha]),
        ChannelArg::Depolarizing => ("--alpha", a.alpha, [a.gamma, a.beta]),
    };
    if others.iter().any(Option::is_some) {
        return Err(CliError::BadArgs(format!(
            "only {wanted} applies to this channel"
        )));
    }
    let p = value.ok_or_else(|| CliError::BadArgs(format!("{wanted} is required")))?;
    if !(0.0..=1.0).contains(&p) {
        return Err(CliError::BadArgs(format!(
            "{wanted} must lie in [0, 1], got {p}"
        )));
    }
    Ok(p)
}

fn depolarizing_inner_info(alpha: f64) -> Result<ChannelCoherentInfo, CliError> {
    // covariant channel: the maximally mixed input is optimal
    let ch = PauliChannel::depolarizing(alpha)?.to_channel();
    let rho = DensityOperator::maximally_mixed(2)?;
    let pair = coherent_info_at(&ch, &rho)?;
    Ok(ChannelCoherentInfo {
        value: pair.d,
        maximizers: vec![rho],
        variance_below_half: pair.v,
        variance_above_half: pair.v,
        converged: true,
    })
}

fn evaluate(
    channel: ChannelArg,
    method: &str,
    p: f64,
    eps: f64,
    ns: &[u64],
) -> Result<Vec<BoundPoint>, CliError> {
    let points = match (channel, method) {
        (ChannelArg::Dephasing, "exact-outer") => sweep(ns, |n| dephasing_outer_exact(n, eps, p)),
        (ChannelArg::Dephasing, "exact-inner") => sweep(ns, |n| dephasing_inner_exact(n, eps, p)),
        (ChannelArg::Dephasing, "order3") => sweep(ns, |n| dephasing_order3(n, eps, p)),
        (ChannelArg::Dephasing, "order2") => sweep(ns, |n| dephasing_order2(n, eps, p)),
        (ChannelArg::Dephasing, "ea-order2") => sweep(ns, |n| ea_dephasing_order2(n, eps, p)),
        (ChannelArg::Erasure, "exact") => sweep(ns, |n| erasure_exact_boundary(n, eps, p)),
        (ChannelArg::Erasure, "order3") => sweep(ns, |n| erasure_order3(n, eps, p)),
        (ChannelArg::Depolarizing, "exact-outer") => {
            sweep(ns, |n| depolarizing_outer(n, eps, p, Method::Exact))
        }
        (ChannelArg::Depolarizing, "order3-outer") => {
            sweep(ns, |n| depolarizing_outer(n, eps, p, Method::Order3))
        }
        (ChannelArg::Depolarizing, "order2-outer") => {
            sweep(ns, |n| depolarizing_outer(n, eps, p, Method::Order2))
        }
        (ChannelArg::Depolarizing, "order2-inner") => {
            let info = depolarizing_inner_info(p)?;
            sweep(ns, |n| {
                inner_order2_from(&info, ChannelFamily::Depolarizing, p, n, eps)
            })
        }
        _ => {
            return Err(CliError::BadArgs(format!(
                "method {method:?} is not available for {channel:?}; supported: {}",
                supported(channel).join(", ")
            )))
        }
    };
    Ok(points?)
}

#[derive(Serialize)]
struct BoundsConfig<'a> {
    channel: ChannelArg,
    param: f64,
    eps: f64,
    n: &'a [u64],
    methods: &'a [String],
    svg: bool,
    log_x: bool,
}

/// N₀ markers for depolarizing figures: crossings of the outer curves with `I_c`.
fn n0_markers(methods: &[String], alpha: f64, eps: f64) -> Result<Vec<Marker>, CliError> {
    let mut markers = Vec::new();
    for (name, method) in [
        ("order2-outer", Method::Order2),
        ("exact-outer", Method::Exact),
    ] {
        if methods.iter().any(|m| m == name) {
            let n0 = min_uses_to_exceed_ci(alpha, eps, method)?;
            markers.push(Marker {
                x: n0 as f64,
                label: format!("N0 = {n0}"),
            });
        }
    }
    Ok(markers)
}

pub fn compute(a: &BoundsArgs) -> Result<(Vec<BoundPoint>, Vec<String>), CliError> {
    let p = channel_param(a)?;
    if !(a.eps > 0.0 && a.eps < 1.0) {
        return Err(CliError::BadArgs(format!(
            "--eps must lie in (0, 1), got {}",
            a.eps
        )));
    }
    if a.methods.is_empty() {
        return Err(CliError::BadArgs(format!(
            "--methods is required; supported: {}",
            supported(a.channel).join(", ")
        )));
    }
    let mut methods: Vec<String> = Vec::new();
    for m in &a.methods {
        let m = m.trim().to_string();
        if !supported(a.channel).contains(&m.as_str()) {
            return Err(CliError::BadArgs(format!(
                "method {m:?} is not available for {:?}; supported: {}",
                a.channel,
                supported(a.channel).join(", ")
            )));
        }
        if !methods.contains(&m) {
            methods.push(m);
        }
    }
    let ns = parse_ns(&a.n)?;
    let mut points = Vec::new();
    for m in &methods {
        points.extend(evaluate(a.channel, m, p, a.eps, &ns)?);
    }
    points.sort_by_cached_key(|p| {
        (
            p.channel.to_string(),
            p.method.to_string(),
            p.kind.to_string(),
            p.n,
        )
    });
    Ok((points, methods))
}

pub fn run(a: &BoundsArgs, argv: &[String]) -> Result<(), CliError> {
    let (points, methods) = compute(a)?;
    let p = channel_param(a)?;
    std::fs::write(&a.out, csv(&points))?;
    let mut outputs = vec![a.out.as_path()];
    let mut markers = Vec::new();
    if a.channel == ChannelArg::Depolarizing {
        markers = n0_markers(&methods, p, a.eps)?;
        for m in &markers {
            println!("{}", m.label);
        }
    }
    if let Some(path) = &a.svg {
        let series = Series::group(&points);
        let title = format!("{:?}, parameter {p}, eps {}", a.channel, a.eps).to_lowercase();
        std::fs::write(path, svg::plot(&title, &series, &markers, a.log_x))?;
        outputs.push(path.as_path());
    }
    let ns = parse_ns(&a.n)?;
    let config = BoundsConfig {
        channel: a.channel,
        param: p,
        eps: a.eps,
        n: &ns,
        methods: &methods,
        svg: a.svg.is_some(),
        log_x: a.log_x,
    };
    let manifest = RunManifest::new(argv, &config, None, &outputs);
    manifest.write(&crate::manifest_path(&a.out))?;
    println!("wrote {} rows to {}", points.len(), a.out.display());
    Ok(())
}
