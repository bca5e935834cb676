//! Command-line interface.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use num_bigint::BigInt;
use serde_json::{json, Value};

use crate::basis::{compute_l, compute_l0, Category, Generators};
use crate::cache::{canonical_json, default_cache_dir, load_cached, sync_cache};
use crate::classgroup::{ClassGroupTable, CyclicDecomposition, QuotientConfig};
use crate::decompose::{decompose, recombine};
use crate::error::{Error, Result};
use crate::quadfield::{Modulus, PrimeIdeal};
use crate::triples::Triple;

#[derive(Debug, Parser)]
#[command(
    name = "almost-pyth",
    version,
    about = "Free basis of the group of solutions of a^2 + m b^2 = c^2"
)]
pub struct Cli {
    /// Emit canonical JSON instead of a table.
    #[arg(long, global = true)]
    pub json: bool,
    /// Directory for cached class groups and bases.
    #[arg(long, global = true, value_name = "DIR")]
    pub cache_dir: Option<PathBuf>,
    /// Do not read or write the cache.
    #[arg(long, global = true)]
    pub no_cache: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct FieldArgs {
    /// Square-free modulus m > 3.
    #[arg(short = 'm', long = "m")]
    pub m: u64,
    /// Pillar prime ideals generating Cl(K)/E, e.g. `--pillar 5,41` or `--pillar 3'` for the conjugate.
    #[arg(long = "pillar", value_name = "P", value_delimiter = ',')]
    pub pillar: Vec<String>,
    /// Decompose Cl(K)/E into cyclic groups of prime power order.
    #[arg(long)]
    pub primary: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Class group, 2-torsion, quotient Cl(K)/E and pillar primes.
    Classgroup {
        #[command(flatten)]
        field: FieldArgs,
    },
    /// Basis elements beta(p) for p in L up to the bound.
    Generators {
        #[command(flatten)]
        field: FieldArgs,
        #[arg(long)]
        bound: u64,
    },
    /// The basis element beta(p).
    Beta {
        #[command(flatten)]
        field: FieldArgs,
        p: u64,
    },
    /// Coefficients of a triple over the basis (always JSON).
    Decompose {
        #[command(flatten)]
        field: FieldArgs,
        #[arg(long)]
        bound: Option<u64>,
        #[arg(allow_hyphen_values = true)]
        a: String,
        #[arg(allow_hyphen_values = true)]
        b: String,
        #[arg(allow_hyphen_values = true)]
        c: String,
    },
    /// Check the published worked examples.
    VerifyPaper {
        /// Only fixtures for this modulus.
        #[arg(short = 'm', long = "m")]
        m: Option<u64>,
    },
}

/// `5`, `p=5`, `5'` or `5c` (conjugate ideal).
pub fn parse_pillar(s: &str) -> Result<PrimeIdeal> {
    let s = s.trim();
    let s = s.strip_prefix("p=").unwrap_or(s);
    let (digits, conj) = match s.strip_suffix('\'').or_else(|| s.strip_suffix('c')) {
        Some(d) => (d, true),
        None => (s, false),
    };
    let p: u64 = digits
        .parse()
        .map_err(|_| Error::Parse(format!("bad pillar {s:?}")))?;
    let ideal = PrimeIdeal::lifted(p);
    Ok(if conj { ideal.conjugate() } else { ideal })
}

fn quotient_config(field: &FieldArgs) -> Result<QuotientConfig> {
    let decomposition = if field.primary {
        CyclicDecomposition::Primary
    } else {
        CyclicDecomposition::InvariantFactors
    };
    let pillars = if field.pillar.is_empty() {
        None
    } else {
        Some(
            field
                .pillar
                .iter()
                .map(|s| parse_pillar(s))
                .collect::<Result<Vec<_>>>()?,
        )
    };
    Ok(QuotientConfig {
        pillars,
        decomposition,
    })
}

fn table_for(field: &FieldArgs) -> Result<ClassGroupTable> {
    ClassGroupTable::new(Modulus::new(field.m)?, &quotient_config(field)?)
}

/// Exit status for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::ModulusTooSmall(_)
        | Error::NotSquareFree(_)
        | Error::BoundTooSmall
        | Error::InvalidPillars(_)
        | Error::Parse(_) => 2,
        Error::NotASolution { .. } => 3,
        Error::VerificationFailed => 4,
        _ => 1,
    }
}

fn cyclic_label(orders: &[u64]) -> String {
    if orders.is_empty() {
        return "C1".into();
    }
    orders
        .iter()
        .map(|h| format!("C{h}"))
        .collect::<Vec<_>>()
        .join(" x ")
}

fn pillar_label(ideal: PrimeIdeal) -> String {
    format!("{}{}", ideal.p, if ideal.conj { "'" } else { "" })
}

fn classgroup_report(table: &ClassGroupTable, as_json: bool) -> String {
    let m = table.modulus();
    if as_json {
        let v = json!({
            "m": m.m(),
            "disc": m.disc(),
            "h": table.class_number(),
            "structure": table.structure().iter().map(|(f, h)| json!({"gen": f.to_array(), "order": h})).collect::<Vec<_>>(),
            "e_order": table.two_torsion().len(),
            "two_torsion": table.two_torsion().iter().map(|f| f.to_array()).collect::<Vec<_>>(),
            "quotient": table.quotient_orders(),
            "pillars": table.pillars().iter().map(|pl| json!({"p": pl.p(), "root": pl.root, "conj": pl.ideal.conj, "h": pl.h})).collect::<Vec<_>>(),
        });
        return canonical_json(&v);
    }
    let mut out = String::new();
    out += &format!("m = {}\n", m.m());
    out += &format!("disc = {}\n", m.disc());
    out += &format!("h = {}\n", table.class_number());
    out += &format!("Cl(K) = {}\n", cyclic_label(&table.structure_orders()));
    for (f, h) in table.structure() {
        out += &format!("  generator {f} of order {h}\n");
    }
    out += &format!("|E| = {}\n", table.two_torsion().len());
    out += &format!("Cl(K)/E = {}\n", cyclic_label(&table.quotient_orders()));
    let pillars: Vec<String> = table
        .pillars()
        .iter()
        .map(|pl| format!("{} (h={})", pillar_label(pl.ideal), pl.h))
        .collect();
    out += &format!(
        "pillars = {}\n",
        if pillars.is_empty() {
            "none".to_string()
        } else {
            pillars.join(", ")
        }
    );
    out
}

fn category_label(table: &ClassGroupTable, c: Category) -> String {
    match c {
        Category::Pillar(j) => format!("pillar {}", pillar_label(table.pillars()[j].ideal)),
        other => other.to_string(),
    }
}

fn element_json(table: &ClassGroupTable, e: &crate::basis::BasisElement) -> Value {
    json!({
        "p": e.p,
        "triple": e.triple.to_json(),
        "category": category_label(table, e.category),
        "exps": e.exps.iter().map(|x| json!({"j": x.j, "a": x.a, "conj": x.conj})).collect::<Vec<_>>(),
        "c": e.third_shape.to_string(),
    })
}

fn element_line(table: &ClassGroupTable, e: &crate::basis::BasisElement) -> String {
    let mut line = format!(
        "beta({}) = {}  {}  c = {}",
        e.p,
        e.triple,
        category_label(table, e.category),
        e.third_shape
    );
    let used: Vec<String> = e
        .exps
        .iter()
        .filter(|x| x.a > 0)
        .map(|x| {
            let ideal = table.pillars()[x.j].ideal;
            let ideal = if x.conj { ideal.conjugate() } else { ideal };
            format!("{}^{}", ideal, x.a)
        })
        .collect();
    if !used.is_empty() {
        line += &format!("  via {}", used.join("*"));
    }
    line
}

struct Ctx {
    json: bool,
    cache_dir: Option<PathBuf>,
}

impl Ctx {
    fn generators(&self, table: ClassGroupTable, bound: Option<u64>) -> Result<Generators> {
        let gens = Generators::new(table);
        if let Some(dir) = &self.cache_dir {
            match bound {
                Some(b) => {
                    sync_cache(&gens, dir, b)?;
                }
                None => {
                    load_cached(&gens, dir);
                }
            }
        }
        Ok(gens)
    }
}

fn run_command(cli: Cli) -> Result<(String, i32)> {
    let cache_dir = if cli.no_cache {
        None
    } else {
        cli.cache_dir.clone().or_else(default_cache_dir)
    };
    let ctx = Ctx {
        json: cli.json,
        cache_dir,
    };
    match cli.command {
        Command::Classgroup { field } => Ok((classgroup_report(&table_for(&field)?, ctx.json), 0)),
        Command::Generators { field, bound } => {
            if bound < 2 {
                return Err(Error::BoundTooSmall);
            }
            let table = table_for(&field)?;
            let gens = ctx.generators(table, Some(bound))?;
            let basis = gens.basis(bound)?;
            let table = gens.table();
            if ctx.json {
                let v = json!({
                    "m": field.m,
                    "bound": bound,
                    "basis": basis.elements.iter().map(|e| element_json(table, e)).collect::<Vec<_>>(),
                    "special": basis.special.as_ref().map(|s| s.to_json()),
                });
                return Ok((canonical_json(&v), 0));
            }
            let mut out = String::new();
            if let Some(s) = &basis.special {
                out += &format!("special = {s}\n");
            }
            for e in &basis.elements {
                out += &element_line(table, e);
                out.push('\n');
            }
            Ok((out, 0))
        }
        Command::Beta { field, p } => {
            let gens = ctx.generators(table_for(&field)?, None)?;
            let e = gens.beta(p)?;
            if ctx.json {
                return Ok((canonical_json(&element_json(gens.table(), &e)), 0));
            }
            Ok((element_line(gens.table(), &e) + "\n", 0))
        }
        Command::Decompose {
            field,
            bound,
            a,
            b,
            c,
        } => {
            if bound.is_some_and(|b| b < 2) {
                return Err(Error::BoundTooSmall);
            }
            let modulus = Modulus::new(field.m)?;
            let parse = |s: &str| -> Result<BigInt> {
                s.trim()
                    .parse()
                    .map_err(|_| Error::Parse(format!("not an integer: {s:?}")))
            };
            let t = Triple::normalize(modulus.m(), parse(&a)?, parse(&b)?, parse(&c)?)?;
            let gens = ctx.generators(table_for(&field)?, None)?;
            let d = decompose(&gens, &t, bound)?;
            Ok((canonical_json(&d.to_json()), 0))
        }
        Command::VerifyPaper { m } => {
            let results = verify_fixtures(&ctx, m);
            let all = results.iter().all(|r| r.pass);
            let out = if ctx.json {
                canonical_json(&json!({
                    "fixtures": results.iter().map(|r| json!({"m": r.m, "name": r.name, "pass": r.pass, "detail": r.detail})).collect::<Vec<_>>(),
                    "pass": all,
                }))
            } else {
                let mut out = String::new();
                for r in &results {
                    out += &format!(
                        "{} m={} {}{}\n",
                        if r.pass { "PASS" } else { "FAIL" },
                        r.m,
                        r.name,
                        if r.pass {
                            String::new()
                        } else {
                            format!(": {}", r.detail)
                        }
                    );
                }
                out += &format!(
                    "{}/{} fixtures passed\n",
                    results.iter().filter(|r| r.pass).count(),
                    results.len()
                );
                out
            };
            Ok((out, if all { 0 } else { 4 }))
        }
    }
}

/// Parse `args`, run, print, and return the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run_command(cli) {
        Ok((out, code)) => {
            let mut stdout = std::io::stdout().lock();
            let _ = stdout.write_all(out.as_bytes());
            if !out.ends_with('\n') {
                let _ = stdout.write_all(b"\n");
            }
            code
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub struct FixtureResult {
    pub m: u64,
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

type Check = Box<dyn Fn(&Ctx) -> Result<std::result::Result<(), String>>>;

fn expect_eq<T: PartialEq + std::fmt::Debug>(got: T, want: T) -> std::result::Result<(), String> {
    if got == want {
        Ok(())
    } else {
        Err(format!("got {got:?}, expected {want:?}"))
    }
}

fn pillar_table(m: u64, pillars: &[u64]) -> Result<ClassGroupTable> {
    ClassGroupTable::new(
        Modulus::new(m)?,
        &QuotientConfig::with_pillars(pillars.iter().map(|&p| PrimeIdeal::lifted(p)).collect()),
    )
}

fn betas(m: u64, pillars: &'static [u64], cases: &'static [(u64, [i64; 3])]) -> Check {
    Box::new(move |ctx: &Ctx| {
        let table = if pillars.is_empty() {
            ClassGroupTable::new(Modulus::new(m)?, &QuotientConfig::default())?
        } else {
            pillar_table(m, pillars)?
        };
        let bound = cases.iter().map(|c| c.0).max().unwrap_or(2);
        let gens = ctx.generators(table, Some(bound))?;
        for &(p, [a, b, c]) in cases {
            let got = gens.beta(p)?.triple;
            let want = Triple::normalize(m, a, b, c)?;
            if got != want {
                return Ok(Err(format!("beta({p}) = {got}, expected {want}")));
            }
        }
        Ok(Ok(()))
    })
}

fn fixtures() -> Vec<(u64, &'static str, Check)> {
    vec![
        (
            35,
            "Cl(K) = C2",
            Box::new(|_: &Ctx| {
                let t = ClassGroupTable::new(Modulus::new(35)?, &QuotientConfig::default())?;
                Ok(expect_eq(t.structure_orders(), vec![2]))
            }),
        ),
        (
            35,
            "L = L0 up to 151",
            Box::new(|_: &Ctx| {
                let t = ClassGroupTable::new(Modulus::new(35)?, &QuotientConfig::default())?;
                let want = vec![
                    3, 11, 13, 17, 29, 47, 71, 73, 79, 83, 97, 103, 109, 149, 151,
                ];
                if let Err(e) = expect_eq(compute_l(t.modulus(), 151), want.clone()) {
                    return Ok(Err(e));
                }
                Ok(expect_eq(compute_l0(&t, 151), want))
            }),
        ),
        (
            35,
            "generators with c = p",
            betas(
                35,
                &[],
                &[
                    (71, [1, 12, 71]),
                    (73, [17, 12, 73]),
                    (83, [43, 12, 83]),
                    (149, [131, 12, 149]),
                ],
            ),
        ),
        (
            35,
            "generators with c = 2p",
            betas(
                35,
                &[],
                &[
                    (3, [1, 1, 6]),
                    (11, [13, 3, 22]),
                    (13, [19, 3, 26]),
                    (17, [29, 3, 34]),
                    (29, [23, 9, 58]),
                    (47, [31, 15, 94]),
                    (79, [157, 3, 158]),
                ],
            ),
        ),
        (
            23,
            "Cl(K) = C3, |E| = 1",
            Box::new(|_: &Ctx| {
                let t = ClassGroupTable::new(Modulus::new(23)?, &QuotientConfig::default())?;
                Ok(expect_eq(
                    (t.structure_orders(), t.two_torsion().len()),
                    (vec![3], 1),
                ))
            }),
        ),
        (
            23,
            "L up to 197",
            Box::new(|_: &Ctx| {
                let m = Modulus::new(23)?;
                Ok(expect_eq(
                    compute_l(&m, 197),
                    vec![
                        2, 3, 13, 29, 31, 41, 47, 59, 71, 73, 101, 127, 131, 139, 151, 163, 167,
                        173, 179, 193, 197,
                    ],
                ))
            }),
        ),
        (
            23,
            "L0 up to 180",
            Box::new(|_: &Ctx| {
                let t = ClassGroupTable::new(Modulus::new(23)?, &QuotientConfig::default())?;
                Ok(expect_eq(compute_l0(&t, 180), vec![59, 101, 167, 173]))
            }),
        ),
        (
            23,
            "beta on L0",
            betas(
                23,
                &[2],
                &[
                    (59, [13, 12, 59]),
                    (101, [83, 12, 101]),
                    (167, [121, 24, 167]),
                    (173, [11, 36, 173]),
                ],
            ),
        ),
        (
            23,
            "beta with pillar over 2",
            betas(
                23,
                &[2],
                &[
                    (2, [7, 3, 16]),
                    (3, [11, 1, 12]),
                    (13, [29, 9, 52]),
                    (29, [91, 15, 116]),
                ],
            ),
        ),
        (
            23,
            "beta with pillar over 3",
            betas(
                23,
                &[3],
                &[
                    (3, [19, 4, 27]),
                    (2, [11, 1, 12]),
                    (13, [7, 8, 39]),
                    (29, [41, 16, 87]),
                ],
            ),
        ),
        (
            974,
            "Cl(K) = C12 x C3, Cl(K)/E = C6 x C3",
            Box::new(|_: &Ctx| {
                let t = pillar_table(974, &[5, 41])?;
                Ok(expect_eq(
                    (t.structure_orders(), t.quotient_orders()),
                    (vec![12, 3], vec![6, 3]),
                ))
            }),
        ),
        (
            974,
            "L up to 163",
            Box::new(|_: &Ctx| {
                let m = Modulus::new(974)?;
                Ok(expect_eq(
                    compute_l(&m, 163),
                    vec![
                        3, 5, 11, 13, 31, 37, 41, 43, 59, 71, 73, 89, 97, 101, 103, 109, 127, 131,
                        137, 149, 163,
                    ],
                ))
            }),
        ),
        (
            974,
            "L0 up to 983",
            Box::new(|_: &Ctx| {
                let t = pillar_table(974, &[5, 41])?;
                Ok(expect_eq(compute_l0(&t, 983), vec![937, 983]))
            }),
        ),
        (
            974,
            "beta values",
            betas(
                974,
                &[5, 41],
                &[
                    (41, [61129, 1020, 68921]),
                    (5, [14651, 174, 15625]),
                    (3, [359, 16, 615]),
                    (37, [3167, 108, 4625]),
                    (937, [37, 30, 937]),
                    (983, [965, 6, 983]),
                ],
            ),
        ),
        (
            974,
            "[4141,66,4625] + [14651,174,15625] = [3167,108,4625]",
            Box::new(|_: &Ctx| {
                let x = Triple::normalize(974, 4141, 66, 4625)?;
                let y = Triple::normalize(974, 14651, 174, 15625)?;
                Ok(expect_eq(
                    x.add(&y)?,
                    Triple::normalize(974, 3167, 108, 4625)?,
                ))
            }),
        ),
        (
            974,
            "decompose [4141,66,4625]",
            Box::new(|ctx: &Ctx| {
                let gens = ctx.generators(pillar_table(974, &[5, 41])?, None)?;
                let t = Triple::normalize(974, 4141, 66, 4625)?;
                let d = decompose(&gens, &t, None)?;
                if let Err(e) = expect_eq(d.terms.clone(), vec![(5, -1), (37, 1)]) {
                    return Ok(Err(e));
                }
                Ok(expect_eq(recombine(&gens, &d.terms, d.special_coeff)?, t))
            }),
        ),
    ]
}

fn verify_fixtures(ctx: &Ctx, only: Option<u64>) -> Vec<FixtureResult> {
    fixtures()
        .into_iter()
        .filter(|(m, _, _)| only.is_none_or(|o| o == *m))
        .map(|(m, name, check)| {
            let (pass, detail) = match check(ctx) {
                Ok(Ok(())) => (true, String::new()),
                Ok(Err(d)) => (false, d),
                Err(e) => (false, e.to_string()),
            };
            FixtureResult {
                m,
                name: name.to_string(),
                pass,
                detail,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pillar_syntax() {
        assert_eq!(parse_pillar("5").unwrap(), PrimeIdeal::lifted(5));
        assert_eq!(parse_pillar("p=2").unwrap(), PrimeIdeal::lifted(2));
        assert_eq!(
            parse_pillar("41'").unwrap(),
            PrimeIdeal::lifted(41).conjugate()
        );
        assert_eq!(
            parse_pillar("41c").unwrap(),
            PrimeIdeal::lifted(41).conjugate()
        );
        assert!(parse_pillar("x").is_err());
    }

    #[test]
    fn fixtures_pass_without_cache() {
        let ctx = Ctx {
            json: false,
            cache_dir: None,
        };
        for r in verify_fixtures(&ctx, None) {
            assert!(r.pass, "m={} {}: {}", r.m, r.name, r.detail);
        }
        assert!(verify_fixtures(&ctx, Some(35)).iter().all(|r| r.m == 35));
    }
}
