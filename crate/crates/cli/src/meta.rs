use std::path::{Path, PathBuf};

use finblock::metaconverse::{f_primal, verify_slackness};
use finblock::qcore::linalg::{CMatrix, C64};
use finblock::qcore::{BipartiteOperator, Channel};
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::output::RunManifest;

const RESIDUAL_TOL: f64 = 1e-6;

#[derive(clap::Args, Debug)]
pub struct MetaArgs {
    /// JSON file `{dimIn, dimOut, choi: [[[re, im], ...], ...]}`.
    #[arg(long)]
    channel: PathBuf,
    #[arg(long)]
    eps: f64,
    /// Optional JSON report.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Deserialize, Debug)]
#[serde(rename_all = "camelCase")]
pub struct ChoiFile {
    pub dim_in: usize,
    pub dim_out: usize,
    pub choi: Vec<Vec<[f64; 2]>>,
}

#[derive(Serialize, Debug)]
struct Report {
    eps: f64,
    f: f64,
    neg_log2_f: f64,
    gap: f64,
    residuals: [f64; 8],
    slackness_satisfied: bool,
    iterations: usize,
}

pub fn load_channel(path: &Path) -> Result<Channel, CliError> {
    let text = std::fs::read_to_string(path)?;
    let file: ChoiFile = serde_json::from_str(&text)?;
    let d = file.dim_in * file.dim_out;
    if file.choi.len() != d || file.choi.iter().any(|r| r.len() != d) {
        return Err(CliError::BadArgs(format!(
            "choi must be a {d}x{d} matrix for dimIn = {}, dimOut = {}",
            file.dim_in, file.dim_out
        )));
    }
    let m = CMatrix::from_fn(d, d, |i, j| {
        C64::new(file.choi[i][j][0], file.choi[i][j][1])
    });
    Ok(Channel::from_choi(BipartiteOperator::new(
        m,
        file.dim_in,
        file.dim_out,
    )?)?)
}

pub fn run(a: &MetaArgs, argv: &[String]) -> Result<(), CliError> {
    let ch = load_channel(&a.channel)?;
    let cert = f_primal(&ch, a.eps)?;
    let slack = verify_slackness(&cert, RESIDUAL_TOL);
    println!("f = {:.12e}", cert.f_value);
    println!("-log2 f = {:.12}", cert.outer_bound_bits);
    println!("duality gap = {:.3e}", cert.gap);
    for (i, r) in slack.residuals.iter().enumerate() {
        println!("residual {} = {r:.3e}", i + 1);
    }
    if let Some(out) = &a.out {
        let report = Report {
            eps: a.eps,
            f: cert.f_value,
            neg_log2_f: cert.outer_bound_bits,
            gap: cert.gap,
            residuals: slack.residuals,
            slackness_satisfied: slack.satisfied,
            iterations: cert.iterations,
        };
        let mut json = serde_json::to_string_pretty(&report)?;
        json.push('\n');
        std::fs::write(out, json)?;
        let config = (std::fs::read_to_string(&a.channel)?, a.eps);
        RunManifest::new(argv, &config, None, &[out.as_path()])
            .write(&crate::manifest_path(out))?;
    }
    if !slack.satisfied {
        return Err(CliError::Numeric(format!(
            "complementary slackness residuals exceed {RESIDUAL_TOL:e}"
        )));
    }
    Ok(())
}
