//! Orbit database schema (version-tagged JSON) and count tables.
//!
//! Actions are serialized as decimal strings so exact values survive a
//! round trip; class vectors are plain integers.

use anyhow::{anyhow, bail, Context, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;
use vortech::ech::{CountTable, Generator, OrbitClass, OrbitCollection, OrbitRecord, OrbitSet};
use vortech::reeb::{classify, OrbitKind, PeriodicPair};

pub const SCHEMA_VERSION: u64 = 1;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DbFile {
    pub version: u64,
    pub orbits: Vec<DbOrbit>,
    #[serde(rename = "L", default, skip_serializing_if = "Option::is_none")]
    pub action_bound: Option<serde_json::Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<Vec<i64>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DbOrbit {
    pub id: String,
    /// Decimal string or number.
    pub action: serde_json::Value,
    pub pair: DbPair,
    #[serde(default)]
    pub homology: Vec<i64>,
    #[serde(default = "default_n_max")]
    pub n_max: u32,
}

fn default_n_max() -> u32 {
    1
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DbPair {
    Samples {
        nu_samples: Vec<f64>,
        mu_re_samples: Vec<f64>,
        mu_im_samples: Vec<f64>,
    },
    Declared {
        kind: String,
        #[serde(rename = "R", default, skip_serializing_if = "Option::is_none")]
        rotation: Option<f64>,
        #[serde(rename = "k", default, skip_serializing_if = "Option::is_none")]
        rotation_k: Option<i64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        positive: Option<bool>,
    },
}

/// A loaded database: validated records plus the raw per-orbit pairs where
/// samples were supplied.
pub struct Database {
    pub collection: OrbitCollection,
    pub pairs: BTreeMap<String, PeriodicPair>,
    pub action_bound: Option<f64>,
    pub gamma: Option<Vec<i64>>,
}

fn parse_decimal(v: &serde_json::Value, what: &str) -> Result<f64> {
    match v {
        serde_json::Value::Number(n) => n.as_f64().ok_or_else(|| anyhow!("{what}: bad number")),
        serde_json::Value::String(s) => s.parse::<f64>().with_context(|| format!("{what}: bad decimal string")),
        _ => bail!("{what}: expected number or decimal string"),
    }
}

pub fn load_database(path: &Path) -> Result<Database> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let file: DbFile = serde_json::from_str(&text).map_err(|e| {
        anyhow!("parse error at line {}, column {}: {e}", e.line(), e.column())
    })?;
    if file.version != SCHEMA_VERSION {
        bail!("unknown schema version {} (expected {SCHEMA_VERSION})", file.version);
    }
    let mut records = Vec::new();
    let mut pairs = BTreeMap::new();
    for orbit in &file.orbits {
        let action = parse_decimal(&orbit.action, &format!("orbit {}: action", orbit.id))?;
        let class = match &orbit.pair {
            DbPair::Samples { nu_samples, mu_re_samples, mu_im_samples } => {
                if nu_samples.len() != mu_re_samples.len()
                    || nu_samples.len() != mu_im_samples.len()
                {
                    bail!("orbit {}: pair sample arrays must have equal length", orbit.id);
                }
                let mu: Vec<Complex64> = mu_re_samples
                    .iter()
                    .zip(mu_im_samples)
                    .map(|(&re, &im)| Complex64::new(re, im))
                    .collect();
                let pair = PeriodicPair::from_samples(nu_samples.clone(), mu)
                    .map_err(|e| anyhow!("orbit {}: {e}", orbit.id))?;
                let c = classify(&pair);
                let class = match c.kind {
                    OrbitKind::Elliptic => OrbitClass::Elliptic { rotation: c.rotation_r.unwrap() },
                    OrbitKind::Hyperbolic => {
                        OrbitClass::Hyperbolic { rotation_k: c.rotation_k.unwrap() }
                    }
                    OrbitKind::Degenerate => {
                        bail!("orbit {}: pair classifies as degenerate", orbit.id)
                    }
                };
                pairs.insert(orbit.id.clone(), pair);
                class
            }
            DbPair::Declared { kind, rotation, rotation_k, positive } => match kind.as_str() {
                "el" => OrbitClass::Elliptic {
                    rotation: rotation
                        .ok_or_else(|| anyhow!("orbit {}: elliptic needs R", orbit.id))?,
                },
                "hyp" => {
                    let k = rotation_k
                        .ok_or_else(|| anyhow!("orbit {}: hyperbolic needs k", orbit.id))?;
                    if let Some(p) = positive {
                        if *p != (k % 2 == 0) {
                            bail!(
                                "orbit {}: positive flag inconsistent with k = {k}",
                                orbit.id
                            );
                        }
                    }
                    OrbitClass::Hyperbolic { rotation_k: k }
                }
                other => bail!("orbit {}: unknown pair kind {other:?}", orbit.id),
            },
        };
        if matches!(class, OrbitClass::Hyperbolic { .. }) && orbit.n_max > 1 {
            bail!("orbit {}: hyperbolic multiplicity must be 1 (n_max = {})", orbit.id, orbit.n_max);
        }
        records.push(OrbitRecord {
            id: orbit.id.clone(),
            action,
            class,
            homology_class: orbit.homology.clone(),
            n_max: orbit.n_max,
        });
    }
    let collection = OrbitCollection::new(records).map_err(|e| anyhow!("{e}"))?;
    let action_bound = match &file.action_bound {
        Some(v) => Some(parse_decimal(v, "L")?),
        None => None,
    };
    Ok(Database { collection, pairs, action_bound, gamma: file.gamma })
}

pub fn save_database(db: &DbFile, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(db)?;
    std::fs::write(path, text)?;
    Ok(())
}

/// Parse an id-multiset string "a:1,b:2" into an orbit set.
pub fn parse_orbit_set(s: &str, db: &OrbitCollection) -> Result<OrbitSet> {
    let mut pairs = Vec::new();
    for part in s.split(',').filter(|p| !p.trim().is_empty()) {
        let (id, mult) = match part.split_once(':') {
            Some((id, m)) => (id.trim().to_string(), m.trim().parse::<u32>()?),
            None => (part.trim().to_string(), 1),
        };
        pairs.push((id, mult));
    }
    OrbitSet::new(pairs, db).map_err(|e| anyhow!("{e}"))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CountFile {
    pub counts: Vec<CountEntry>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CountEntry {
    pub from: String,
    pub to: String,
    pub sigma: i64,
}

/// Resolve a count file against a generator list (id-multiset strings must
/// match the canonical display form of the generators' orbit sets).
pub fn resolve_counts(
    file: &CountFile,
    gens: &[Generator],
    db: &OrbitCollection,
) -> Result<CountTable> {
    let mut index = BTreeMap::new();
    for (i, g) in gens.iter().enumerate() {
        index.insert(g.orbit_set.to_string(), i);
    }
    let mut table = CountTable::default();
    for e in &file.counts {
        let from = parse_orbit_set(&e.from, db)?.to_string();
        let to = parse_orbit_set(&e.to, db)?.to_string();
        let fi = *index
            .get(&from)
            .ok_or_else(|| anyhow!("count references unknown generator {from}"))?;
        let ti = *index
            .get(&to)
            .ok_or_else(|| anyhow!("count references unknown generator {to}"))?;
        // σ(Θ', Θ): "from" is the source Θ, "to" the target Θ'
        table.insert(ti, fi, e.sigma);
    }
    Ok(table)
}
