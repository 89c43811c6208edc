use std::fmt::Write as _;
use std::path::Path;

use finblock::channel_bounds::BoundPoint;
use serde::Serialize;
use sha2::{Digest, Sha256};

/// `%.{digits}g`-style formatting.
pub fn fmt_sig(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan"
        } else if x > 0.0 {
            "inf"
        } else {
            "-inf"
        }
        .into();
    }
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -5 || exp >= digits as i32 {
        return format!("{}e{exp}", trim_zeros(mantissa));
    }
    let decimals = (digits as i32 - 1 - exp).max(0) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub const CSV_HEADER: &str = "channel,param,n,eps,kind,method,R";

pub fn csv(points: &[BoundPoint]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for p in points {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            p.channel,
            fmt_sig(p.param, 12),
            p.n,
            fmt_sig(p.eps, 12),
            p.kind,
            p.method,
            fmt_sig(p.rate, 12)
        );
    }
    s
}

#[derive(Serialize, Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub command_line: Vec<String>,
    pub config_hash: String,
    pub seed: Option<u64>,
    pub version: String,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new<C: Serialize>(
        command_line: &[String],
        config: &C,
        seed: Option<u64>,
        outputs: &[&Path],
    ) -> Self {
        let canonical = serde_json::to_vec(config).expect("config serializes");
        let digest = Sha256::digest(&canonical);
        Self {
            command_line: command_line.to_vec(),
            config_hash: digest.iter().map(|b| format!("{b:02x}")).collect(),
            seed,
            version: env!("CARGO_PKG_VERSION").into(),
            outputs: outputs.iter().map(|p| p.display().to_string()).collect(),
        }
    }

    pub fn write(&self, path: &Path) -> std::io::Result<()> {
        let mut json = serde_json::to_string_pretty(self).expect("manifest serializes");
        json.push('\n');
        std::fs::write(path, json)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digits() {
        assert_eq!(fmt_sig(0.1, 12), "0.1");
        assert_eq!(fmt_sig(1.0 / 3.0, 12), "0.333333333333");
        assert_eq!(fmt_sig(2000.0, 12), "2000");
        assert_eq!(fmt_sig(-0.5310204, 3), "-0.531");
        assert_eq!(fmt_sig(1.5e-7, 12), "1.5e-7");
        assert_eq!(fmt_sig(123456789012345.0, 12), "1.23456789012e14");
        assert_eq!(fmt_sig(0.0, 12), "0");
        assert_eq!(fmt_sig(f64::NAN, 12), "nan");
    }

    #[test]
    fn hash_depends_on_config_only() {
        let a = RunManifest::new(&["x".into()], &(1, 2.5), None, &[]);
        let b = RunManifest::new(&["y".into()], &(1, 2.5), None, &[]);
        let c = RunManifest::new(&["x".into()], &(1, 2.6), None, &[]);
        assert_eq!(a.config_hash, b.config_hash);
        assert_ne!(a.config_hash, c.config_hash);
        assert_eq!(a.config_hash.len(), 64);
    }
}
