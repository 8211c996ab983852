//! Command-line coefficient-pair specs:
//! `elliptic:R=0.3`, `hyperbolic-canonical:k=2,eps=0.05`,
//! `constant:nu=0.15,mu_re=0,mu_im=0.1`, or `db:<orbit-id>` (sampled pairs
//! from the orbit database).

use anyhow::{anyhow, bail, Result};
use num_complex::Complex64;
use std::collections::BTreeMap;
use vortech::reeb::PeriodicPair;

pub fn parse_pair(spec: &str, db: Option<&crate::db::Database>) -> Result<PeriodicPair> {
    let (kind, rest) = spec.split_once(':').unwrap_or((spec, ""));
    let params: BTreeMap<&str, &str> = rest
        .split(',')
        .filter(|p| !p.is_empty())
        .filter_map(|p| p.split_once('='))
        .collect();
    let get = |key: &str| -> Result<f64> {
        params
            .get(key)
            .ok_or_else(|| anyhow!("pair spec {spec:?} is missing {key}"))?
            .parse::<f64>()
            .map_err(|e| anyhow!("pair spec {spec:?}: {e}"))
    };
    match kind {
        "elliptic" => Ok(PeriodicPair::canonical_elliptic(get("R")?)),
        "hyperbolic-canonical" => {
            let k = get("k")? as i64;
            Ok(PeriodicPair::canonical_hyperbolic(k, get("eps")?))
        }
        "constant" => {
            let nu = get("nu")?;
            let mu = Complex64::new(
                get("mu_re").unwrap_or(0.0),
                get("mu_im").unwrap_or(0.0),
            );
            Ok(PeriodicPair::constant(nu, mu))
        }
        "db" => {
            let id = rest;
            let db = db.ok_or_else(|| anyhow!("pair spec db:{id} requires --db"))?;
            db.pairs
                .get(id)
                .cloned()
                .ok_or_else(|| anyhow!("orbit {id} has no sampled pair in the database"))
        }
        other => bail!("unknown pair spec kind {other:?}"),
    }
}

/// Parse "re,im;re,im;…" into complex numbers.
pub fn parse_complex_list(s: &str) -> Result<Vec<Complex64>> {
    let mut out = Vec::new();
    for part in s.split(';').filter(|p| !p.trim().is_empty()) {
        let (re, im) = part
            .split_once(',')
            .ok_or_else(|| anyhow!("expected re,im in {part:?}"))?;
        out.push(Complex64::new(re.trim().parse()?, im.trim().parse()?));
    }
    Ok(out)
}
