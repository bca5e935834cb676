//! On-disk cache of class group tables and basis elements.
//!
//! A cached document is advisory: on load every entry is re-checked against a freshly
//! computed class group, and any mismatch causes a full recomputation.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::basis::{
    check_element, compute_l, exponent_candidates, is_in_l0, special_four_element, BasisElement,
    Category, Exponent, Generators, ThirdShape,
};
use crate::classgroup::ClassGroupTable;
use crate::decompose::ideal_valuations;
use crate::error::{Error, Result};
use crate::quadfield::PrimeIdeal;
use crate::triples::Triple;

pub const CACHE_VERSION: &str = "1";
pub const CACHE_ENV: &str = "ALMOST_PYTH_CACHE";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructureEntry {
    pub gen: [i64; 3],
    pub order: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PillarEntry {
    pub p: u64,
    pub root: u64,
    pub conj: bool,
    pub h: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BasisEntry {
    pub p: u64,
    pub triple: Value,
    pub category: String,
    pub exps: Vec<Exponent>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheDocument {
    pub version: String,
    pub m: u64,
    pub disc: i64,
    pub bound: u64,
    pub forms: Vec<[i64; 3]>,
    pub structure: Vec<StructureEntry>,
    pub pillars: Vec<PillarEntry>,
    pub basis: Vec<BasisEntry>,
    pub special: Option<Value>,
}

fn category_name(c: Category) -> String {
    match c {
        Category::L0 => "L0".into(),
        Category::Pillar(j) => format!("pillar:{j}"),
        Category::Composite => "composite".into(),
    }
}

fn parse_category(s: &str) -> Option<Category> {
    match s {
        "L0" => Some(Category::L0),
        "composite" => Some(Category::Composite),
        _ => s
            .strip_prefix("pillar:")?
            .parse()
            .ok()
            .map(Category::Pillar),
    }
}

impl CacheDocument {
    /// Document for the class group part of `table` and the basis up to `bound`.
    pub fn build(gens: &Generators, bound: u64) -> Result<CacheDocument> {
        let table = gens.table();
        let basis = gens.basis(bound)?;
        Ok(CacheDocument {
            version: CACHE_VERSION.into(),
            m: table.modulus().m(),
            disc: table.modulus().disc(),
            bound,
            basis: basis
                .elements
                .iter()
                .map(|e| BasisEntry {
                    p: e.p,
                    triple: e.triple.to_json(),
                    category: category_name(e.category),
                    exps: e.exps.clone(),
                })
                .collect(),
            special: basis.special.map(|s| s.to_json()),
            ..CacheDocument::skeleton(table)
        })
    }

    fn skeleton(table: &ClassGroupTable) -> CacheDocument {
        CacheDocument {
            version: CACHE_VERSION.into(),
            m: table.modulus().m(),
            disc: table.modulus().disc(),
            bound: 0,
            forms: table.forms().iter().map(|f| f.to_array()).collect(),
            structure: table
                .structure()
                .into_iter()
                .map(|(f, order)| StructureEntry {
                    gen: f.to_array(),
                    order,
                })
                .collect(),
            pillars: table
                .pillars()
                .iter()
                .map(|pl| PillarEntry {
                    p: pl.p(),
                    root: pl.root,
                    conj: pl.ideal.conj,
                    h: pl.h,
                })
                .collect(),
            basis: Vec::new(),
            special: None,
        }
    }

    /// Sorted keys, no insignificant whitespace.
    pub fn to_canonical_json(&self) -> String {
        canonical_json(&serde_json::to_value(self).expect("serializable"))
    }

    /// Re-check the document against `table`; returns the verified basis elements.
    pub fn validate(&self, table: &ClassGroupTable) -> Result<Vec<BasisElement>> {
        let fresh = CacheDocument::skeleton(table);
        let bad = |what: &str| Error::Cache(format!("{what} does not match recomputation"));
        if self.version != fresh.version || self.m != fresh.m || self.disc != fresh.disc {
            return Err(bad("header"));
        }
        if self.forms != fresh.forms {
            return Err(bad("form list"));
        }
        if self.structure != fresh.structure {
            return Err(bad("structure"));
        }
        if self.pillars != fresh.pillars {
            return Err(bad("pillars"));
        }
        let modulus = table.modulus();
        let special = special_four_element(modulus);
        let cached_special = self
            .special
            .as_ref()
            .map(|v| Triple::from_json(self.m, v))
            .transpose()?;
        if cached_special != special {
            return Err(bad("special element"));
        }
        let expected_primes: Vec<u64> = compute_l(modulus, self.bound)
            .into_iter()
            .filter(|&p| !(special.is_some() && p == 2))
            .collect();
        if self.basis.iter().map(|e| e.p).collect::<Vec<_>>() != expected_primes {
            return Err(bad("basis prime list"));
        }
        self.basis
            .iter()
            .map(|entry| verify_entry(table, entry))
            .collect()
    }

    pub fn load(path: &Path) -> Result<CacheDocument> {
        let text = fs::read_to_string(path).map_err(|e| Error::Cache(e.to_string()))?;
        serde_json::from_str(&text).map_err(|e| Error::Cache(e.to_string()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(|e| Error::Cache(e.to_string()))?;
        }
        let tmp = path.with_extension("json.tmp");
        fs::write(&tmp, self.to_canonical_json()).map_err(|e| Error::Cache(e.to_string()))?;
        fs::rename(&tmp, path).map_err(|e| Error::Cache(e.to_string()))
    }
}

/// A cached generator is accepted when its category matches the table and the
/// primitive element attached to it factors as the square of the expected ideal.
fn verify_entry(table: &ClassGroupTable, entry: &BasisEntry) -> Result<BasisElement> {
    let modulus = table.modulus();
    let bad = || Error::Cache(format!("basis entry for {} failed verification", entry.p));
    let triple = Triple::from_json(modulus.m(), &entry.triple)?;
    let category = parse_category(&entry.category).ok_or_else(bad)?;
    let mut ideal: Vec<(PrimeIdeal, u32)> = Vec::new();
    let mut shape: Vec<(u64, u32)> = Vec::new();
    match category {
        Category::L0 => {
            if !entry.exps.is_empty() || !is_in_l0(table, entry.p) {
                return Err(bad());
            }
            ideal.push((PrimeIdeal::lifted(entry.p), 2));
            shape.push((entry.p, 1));
        }
        Category::Pillar(j) => {
            let pl = table.pillars().get(j).ok_or_else(bad)?;
            if pl.p() != entry.p || !entry.exps.is_empty() {
                return Err(bad());
            }
            ideal.push((pl.ideal, 2 * pl.h as u32));
            shape.push((entry.p, pl.h as u32));
        }
        Category::Composite => {
            if !exponent_candidates(table, entry.p)?.contains(&entry.exps) {
                return Err(bad());
            }
            ideal.push((PrimeIdeal::lifted(entry.p), 2));
            shape.push((entry.p, 1));
            for e in entry.exps.iter().filter(|e| e.a > 0) {
                let pl = table.pillars().get(e.j).ok_or_else(bad)?;
                let q = if e.conj {
                    pl.ideal.conjugate()
                } else {
                    pl.ideal
                };
                ideal.push((q, 2 * e.a as u32));
                shape.push((pl.p(), e.a as u32));
            }
        }
    }
    // the stored entries are positive, so the generator is a - b sqrt(-m) or its conjugate
    let want: BTreeMap<PrimeIdeal, u32> = ideal.into_iter().collect();
    if ideal_valuations(modulus, &triple)? != want
        && ideal_valuations(modulus, &triple.negate())? != want
    {
        return Err(bad());
    }
    let third_shape = ThirdShape::from_factors(triple.c(), shape).map_err(|_| bad())?;
    let element = BasisElement {
        p: entry.p,
        triple,
        category,
        exps: entry.exps.clone(),
        third_shape,
    };
    if !check_element(modulus, &element) {
        return Err(bad());
    }
    Ok(element)
}

/// Canonical JSON text: object keys sorted, compact separators.
pub fn canonical_json(v: &Value) -> String {
    // serde_json's default map is ordered by key
    serde_json::to_string(v).expect("serializable")
}

/// `$ALMOST_PYTH_CACHE`, else `$XDG_CACHE_HOME/almost-pyth`, else `~/.cache/almost-pyth`.
pub fn default_cache_dir() -> Option<PathBuf> {
    if let Some(dir) = std::env::var_os(CACHE_ENV).filter(|s| !s.is_empty()) {
        return Some(PathBuf::from(dir));
    }
    if let Some(dir) = std::env::var_os("XDG_CACHE_HOME").filter(|s| !s.is_empty()) {
        return Some(PathBuf::from(dir).join("almost-pyth"));
    }
    std::env::var_os("HOME").map(|h| PathBuf::from(h).join(".cache").join("almost-pyth"))
}

pub fn cache_path(dir: &Path, table: &ClassGroupTable) -> PathBuf {
    dir.join(format!(
        "m{}_{}.json",
        table.modulus().m(),
        table.config().key()
    ))
}

/// Seed `gens` from a verified cache document; returns its bound when usable.
pub fn load_cached(gens: &Generators, dir: &Path) -> Option<u64> {
    let doc = CacheDocument::load(&cache_path(dir, gens.table())).ok()?;
    let elements = doc.validate(gens.table()).ok()?;
    gens.preload(elements);
    Some(doc.bound)
}

/// Like [`load_cached`], then rewrite the document when it is missing, fails
/// verification or does not cover `bound`. Write failures are ignored.
pub fn sync_cache(gens: &Generators, dir: &Path, bound: u64) -> Result<bool> {
    let cached = load_cached(gens, dir);
    let covered = cached.unwrap_or(0);
    if cached.is_none() || covered < bound {
        let doc = CacheDocument::build(gens, bound.max(covered))?;
        let _ = doc.save(&cache_path(dir, gens.table()));
    }
    Ok(cached.is_some())
}
