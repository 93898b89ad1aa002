//! `vertexlab`: command-line access to the products, verification suites
//! and root-system tools of vertexlab-core.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage or input error.

use std::collections::BTreeSet;
use std::fs;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use vertexlab_core::bfc::{self, CMono, CliffordFockState};
use vertexlab_core::conformal::{self, Presentation};
use vertexlab_core::fock::Vertex;
use vertexlab_core::lattice::{det, Point};
use vertexlab_core::roots::{self, ReconstructInput, RootSystem};
use vertexlab_core::{exec, Exec, LatticeContext, Scalar};

#[derive(Parser)]
#[command(name = "vertexlab", version, about = "Exact computations in lattice vertex algebras and conformal algebras")]
struct Cli {
    /// Print JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
    /// Seed for randomized sample selection.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Run batch sweeps sequentially.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Inspect a lattice file.
    Lattice {
        #[command(subcommand)]
        cmd: LatticeCmd,
    },
    /// Compute u ∟n v in V_Λ.
    Product {
        #[arg(long)]
        lattice: String,
        #[arg(long, allow_hyphen_values = true)]
        left: String,
        #[arg(long, allow_hyphen_values = true)]
        n: i64,
        #[arg(long, allow_hyphen_values = true)]
        right: String,
    },
    /// Verification suites.
    Verify {
        #[command(subcommand)]
        cmd: VerifyCmd,
    },
    /// Boson–fermion checks.
    Bfc {
        #[command(subcommand)]
        cmd: BfcCmd,
    },
    /// Weights of the charge-i component, or of a W₊-orbit.
    Weights(WeightsArgs),
    /// Root systems.
    Roots {
        #[command(subcommand)]
        cmd: RootsCmd,
    },
    /// Build a finite semi-positive root system from quotient data.
    Reconstruct {
        #[arg(long)]
        input: String,
    },
}

#[derive(Subcommand)]
enum LatticeCmd {
    Check {
        #[arg(long)]
        lattice: String,
    },
}

#[derive(Subcommand)]
enum VerifyCmd {
    /// Conformal axioms C1–C5 of a builtin or JSON presentation.
    Axioms {
        #[arg(long, conflicts_with = "presentation")]
        algebra: Option<String>,
        #[arg(long)]
        presentation: Option<String>,
        #[arg(long, default_value_t = 6)]
        max_gen: usize,
        #[arg(long, default_value_t = 12)]
        max_n: i64,
    },
    /// Compare a presentation with its realization in a lattice vertex algebra.
    Embedding {
        name: String,
        #[arg(long, default_value_t = 3)]
        max_gen: usize,
        #[arg(long, default_value_t = 10)]
        max_n: i64,
    },
    /// Quasisymmetry and Jacobi identity on random homogeneous triples.
    Identities {
        #[arg(long)]
        lattice: String,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        /// Maximal conformal degree of the sampled states.
        #[arg(long, default_value_t = 5)]
        max_degree: i64,
        /// Label coordinates range over −r..=r.
        #[arg(long, default_value_t = 1)]
        label_range: i64,
        /// Skip triples whose identity terms exceed this conformal degree.
        #[arg(long, default_value_t = 12)]
        max_output_degree: i64,
    },
}

#[derive(Subcommand)]
enum BfcCmd {
    /// ê-bracket relations and the boson–fermion transport of p_m(n).
    Verify {
        #[arg(long, default_value_t = 4)]
        max_m: i64,
        #[arg(long, default_value_t = 4)]
        max_n: i64,
        #[arg(long, default_value_t = 6)]
        cap: i64,
        /// Index range −r..r for the bracket relations.
        #[arg(long, default_value_t = 3)]
        range: i64,
    },
}

#[derive(Args)]
struct WeightsArgs {
    #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
    charge: i64,
    #[arg(long, default_value_t = 3)]
    degree: u32,
    /// γ₋₁ modes of a monomial whose W₊-orbit is wanted, e.g. "-1,-2".
    #[arg(long, allow_hyphen_values = true)]
    minus: Option<String>,
    /// γ₁ modes of that monomial.
    #[arg(long, allow_hyphen_values = true)]
    plus: Option<String>,
    #[arg(long, default_value_t = 5)]
    cap: i64,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    lattice: String,
    /// Generator such as "1,0"; repeatable.
    #[arg(long = "gen", allow_hyphen_values = true)]
    gens: Vec<String>,
    /// JSON file with a list of generators.
    #[arg(long)]
    gens_file: Option<String>,
}

#[derive(Subcommand)]
enum RootsCmd {
    /// Close a generating set under partial sums.
    Close {
        #[command(flatten)]
        g: GenArgs,
        #[arg(long, default_value_t = roots::DEFAULT_MAX_NORM)]
        max_norm: i64,
        #[arg(long, default_value_t = roots::DEFAULT_MAX_ITER)]
        max_iter: usize,
        /// Materialize periodic roots with |k| ≤ window in text output.
        #[arg(long, default_value_t = 2)]
        window: i64,
    },
    /// Classify a rank-1 norm, a rank-2 Gram or a finite root set.
    Classify {
        #[arg(long, conflicts_with_all = ["lattice", "roots"])]
        norm: Option<i64>,
        #[arg(long)]
        lattice: Option<String>,
        /// JSON list of roots; without it a rank-2 lattice is classified by its Gram.
        #[arg(long)]
        roots: Option<String>,
    },
    /// Support of the conformal algebra generated by v_{±γ}.
    Support {
        #[command(flatten)]
        g: GenArgs,
        /// Degree cap (conformal weight).
        #[arg(long, default_value_t = 8)]
        cap: i64,
        /// Bound on radical coordinates for semi-positive lattices.
        #[arg(long)]
        window: Option<i64>,
    },
    /// Indecomposability and δ+α checks for a semi-positive closure.
    Ears {
        #[command(flatten)]
        g: GenArgs,
        #[arg(long, default_value_t = 5)]
        window: i64,
    },
}

enum Fail {
    Usage(String),
    Verify(Value),
}

impl From<vertexlab_core::Error> for Fail {
    fn from(e: vertexlab_core::Error) -> Self {
        Fail::Usage(e.to_string())
    }
}

type Out = Result<(Value, String), Fail>;

fn read(path: &str) -> Result<String, Fail> {
    fs::read_to_string(path).map_err(|e| Fail::Usage(format!("{path}: {e}")))
}

fn load_lattice(path: &str) -> Result<LatticeContext, Fail> {
    Ok(LatticeContext::from_json(&read(path)?)?)
}

fn parse_point(s: &str) -> Result<Point, Fail> {
    s.trim()
        .trim_start_matches('[')
        .trim_end_matches(']')
        .split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| t.trim().parse::<i64>().map_err(|_| Fail::Usage(format!("bad integer `{t}` in `{s}`"))))
        .collect()
}

fn load_points(path: &str) -> Result<Vec<Point>, Fail> {
    let v: Value = serde_json::from_str(&read(path)?).map_err(|e| Fail::Usage(format!("{path}: {e}")))?;
    let list = v.get("roots").cloned().unwrap_or(v);
    serde_json::from_value(list).map_err(|e| Fail::Usage(format!("{path}: expected a list of integer vectors: {e}")))
}

fn gens_of(g: &GenArgs) -> Result<(LatticeContext, Vec<Point>), Fail> {
    let lat = load_lattice(&g.lattice)?;
    let mut gens = g.gens.iter().map(|s| parse_point(s)).collect::<Result<Vec<_>, _>>()?;
    if let Some(f) = &g.gens_file {
        gens.extend(load_points(f)?);
    }
    if gens.is_empty() {
        return Err(Fail::Usage("no generators given (use --gen or --gens-file)".into()));
    }
    for x in &gens {
        lat.check_rank(x)?;
    }
    Ok((lat, gens))
}

fn verdict(name: &str, violations: Vec<Value>, text_ok: String) -> Out {
    if violations.is_empty() {
        Ok((json!({ "check": name, "pass": true }), text_ok))
    } else {
        Err(Fail::Verify(json!({ "check": name, "pass": false, "violations": violations })))
    }
}

fn presentation(algebra: &Option<String>, file: &Option<String>) -> Result<Presentation, Fail> {
    match (algebra, file) {
        (Some(a), _) => Ok(conformal::builtin(a)?),
        (None, Some(f)) => Ok(conformal::from_json(&read(f)?)?),
        (None, None) => Err(Fail::Usage("give --algebra or --presentation".into())),
    }
}

fn show_points<'a>(it: impl IntoIterator<Item = &'a Point>) -> String {
    it.into_iter().map(|p| format!("{p:?}")).collect::<Vec<_>>().join(" ")
}

fn root_text(rs: &RootSystem, window: i64) -> String {
    let mut s = format!("status: {}\n", rs.status);
    let p = rs.periods();
    if !p.is_empty() {
        s += &format!("periods: {}\n", show_points(&p));
    }
    let w = rs.window(window);
    s += &format!("roots ({}): {}", w.len(), show_points(&w));
    if let Some(x) = &rs.witness {
        s += &format!("\nwitness: {x}");
    }
    s
}

fn run(cli: &Cli) -> Out {
    let exec = if cli.sequential { Exec::Sequential } else { Exec::best() };
    match &cli.cmd {
        Cmd::Lattice { cmd: LatticeCmd::Check { lattice } } => {
            let l = load_lattice(lattice)?;
            let g: Vec<Vec<Scalar>> = l.gram().iter().map(|r| r.iter().map(|&x| Scalar::from_integer(x.into())).collect()).collect();
            let d = det(g);
            let def = serde_json::to_value(l.definiteness()).unwrap();
            let v = json!({
                "rank": l.rank(), "gram": l.gram(), "det": d.to_string(),
                "definiteness": def, "radical": l.radical(), "quotient_gram": l.quotient_gram(),
            });
            let t = format!(
                "rank {}\ndet {}\n{}\nradical: {}",
                l.rank(),
                d,
                def.as_str().unwrap_or_default(),
                show_points(&l.radical())
            );
            Ok((v, t))
        }
        Cmd::Product { lattice, left, n, right } => {
            let v = Vertex::new(load_lattice(lattice)?);
            let (a, b) = (v.parse(left)?, v.parse(right)?);
            let r = v.product(&a, *n, &b)?;
            Ok((json!({ "result": r.to_string() }), r.to_string()))
        }
        Cmd::Verify { cmd } => match cmd {
            VerifyCmd::Axioms { algebra, presentation: file, max_gen, max_n } => {
                let p = presentation(algebra, file)?;
                let v = p.axioms_check(*max_gen, *max_n, exec);
                let vs = v.iter().map(|x| serde_json::to_value(x).unwrap()).collect();
                verdict("axioms", vs, format!("{}: axioms C1-C5 hold (generators ≤ {max_gen}, n ≤ {max_n})", p.name))
            }
            VerifyCmd::Embedding { name, max_gen, max_n } => {
                let e = conformal::embedding(name)?;
                let v = e.verify(*max_gen, *max_n, exec);
                let vs = v.iter().map(|x| serde_json::to_value(x).unwrap()).collect();
                verdict("embedding", vs, format!("{name}: all products agree with the lattice realization"))
            }
            VerifyCmd::Identities { lattice, samples, max_degree, label_range, max_output_degree } => {
                let l = load_lattice(lattice)?;
                let r = *label_range;
                let labels: Vec<Point> = (0..l.rank()).fold(vec![vec![]], |acc, _| {
                    acc.into_iter().flat_map(|p: Point| (-r..=r).map(move |x| [p.clone(), vec![x]].concat())).collect()
                });
                let v = Vertex::new(l);
                let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
                let mut bad = Vec::new();
                let (mut done, mut tries, mut skipped) = (0, 0, 0);
                while done < *samples && tries < 100 * samples {
                    tries += 1;
                    let d: Vec<i64> = (0..3).map(|_| rng.gen_range(0..=2 * max_degree)).collect();
                    let x = v.random_homogeneous(&mut rng, &labels, d[0], 2);
                    let y = v.random_homogeneous(&mut rng, &labels, d[1], 2);
                    let w = v.random_homogeneous(&mut rng, &labels, d[2], 2);
                    let (Some(x), Some(y), Some(w)) = (x, y, w) else { continue };
                    let m = rng.gen_range(-3..=3);
                    let n = rng.gen_range(-3..=3);
                    let out2 = d.iter().sum::<i64>() - 2 * (m + n) - 4;
                    if out2 > 2 * max_output_degree {
                        skipped += 1;
                        continue;
                    }
                    if !v.check_qs(&x, &y, n) {
                        bad.push(json!({ "identity": "quasisymmetry", "u": x.to_string(), "v": y.to_string(), "n": n }));
                    }
                    if !v.check_jacobi(&x, &y, &w, m, n) {
                        bad.push(json!({ "identity": "jacobi", "u": x.to_string(), "v": y.to_string(), "w": w.to_string(), "m": m, "n": n }));
                    }
                    done += 1;
                }
                verdict("identities", bad, format!("{done} random triples pass, {skipped} skipped (seed {})", cli.seed))
            }
        },
        Cmd::Bfc { cmd: BfcCmd::Verify { max_m, max_n, cap, range } } => {
            let mut bad: Vec<Value> =
                bfc::ehat_bracket_check(*cap, *range, exec).into_iter().map(|x| serde_json::to_value(x).unwrap()).collect();
            let mut bf = bfc::BosonFermion::new();
            for m in 0..=*max_m {
                for n in -*max_n..=*max_n {
                    for mono in bf.check(m, n, *cap)? {
                        bad.push(json!({ "m": m, "n": n, "state": mono.to_string() }));
                    }
                }
            }
            verdict("bfc", bad, format!("brackets and transport agree (degree ≤ {cap}, m ≤ {max_m}, |n| ≤ {max_n})"))
        }
        Cmd::Weights(w) => weights(w),
        Cmd::Roots { cmd } => roots_cmd(cmd, exec),
        Cmd::Reconstruct { input } => {
            let inp: ReconstructInput =
                serde_json::from_str(&read(input)?).map_err(|e| Fail::Usage(format!("{input}: {e}")))?;
            match roots::reconstruct_finite(&inp) {
                Ok(rs) => Ok((serde_json::from_str(&rs.to_json()).unwrap(), root_text(&rs, 0))),
                Err(vertexlab_core::Error::Constraint(w)) => {
                    Err(Fail::Verify(json!({ "check": "reconstruct", "pass": false, "witness": w })))
                }
                Err(e) => Err(e.into()),
            }
        }
    }
}

fn modes(s: &Option<String>) -> Result<Vec<i64>, Fail> {
    s.as_deref().map_or(Ok(vec![]), parse_point)
}

fn weights(w: &WeightsArgs) -> Out {
    if w.minus.is_some() || w.plus.is_some() {
        let m = CMono::new(modes(&w.minus)?, modes(&w.plus)?)?;
        if m.deg2() > 2 * w.cap + m.charge() * m.charge() {
            return Err(Fail::Usage(format!("{m} lies above the degree cap {}", w.cap)));
        }
        let got = bfc::wplus_span(&CliffordFockState::mono(m.clone()), w.cap)?;
        let want = bfc::wplus_expected(m.charge(), m.weight().length(), w.cap);
        let list: Vec<String> = got.iter().map(|x| x.to_string()).collect();
        let v = json!({ "state": m.to_string(), "length": m.weight().length(), "weights": list, "matches_prediction": got == want });
        let t = format!("{} weights in W+ {m} (cap {}):\n{}", got.len(), w.cap, list.join("\n"));
        return if got == want { Ok((v, t)) } else { Err(Fail::Verify(v)) };
    }
    let pred = bfc::weights_of_degree(w.charge, w.degree);
    let en = bfc::enumerate_weights(w.charge, w.degree as i64);
    let agree = pred.iter().cloned().collect::<BTreeSet<_>>() == en.keys().cloned().collect::<BTreeSet<_>>();
    let list: Vec<String> = pred.iter().map(|x| x.to_string()).collect();
    let v = json!({ "charge": w.charge, "degree": w.degree, "weights": list, "enumeration_agrees": agree });
    let t = format!("{} weights of charge {} at degree {}:\n{}", list.len(), w.charge, w.degree, list.join("\n"));
    if agree {
        Ok((v, t))
    } else {
        Err(Fail::Verify(v))
    }
}

fn roots_cmd(cmd: &RootsCmd, exec: Exec) -> Out {
    match cmd {
        RootsCmd::Close { g, max_norm, max_iter, window } => {
            let (lat, gens) = gens_of(g)?;
            let rs = roots::close(&gens, &lat, *max_norm, *max_iter)?;
            Ok((serde_json::from_str(&rs.to_json()).unwrap(), root_text(&rs, *window)))
        }
        RootsCmd::Classify { norm: Some(n), .. } => {
            let r = roots::classify_rank1(*n)?;
            let label = r.label.as_ref().map(|l| l.to_string());
            let t = format!("{}: {}", label.clone().unwrap_or_else(|| "unbounded".into()), r.algebra);
            Ok((json!({ "norm": n, "label": label, "algebra": r.algebra }), t))
        }
        RootsCmd::Classify { lattice: Some(l), roots: None, .. } => {
            let lat = load_lattice(l)?;
            let c = roots::classify_rank2(lat.gram())?;
            Ok((json!({ "case": c.to_string() }), c.to_string()))
        }
        RootsCmd::Classify { lattice: Some(l), roots: Some(r), .. } => {
            let lat = load_lattice(l)?;
            let set: BTreeSet<Point> = load_points(r)?.into_iter().collect();
            let c = roots::classify_posdef(&set, &lat)?;
            let v = serde_json::to_value(&c).unwrap();
            if c.accepted() {
                Ok((json!({ "label": c.summary(), "components": v["components"] }), c.summary()))
            } else {
                Err(Fail::Verify(json!({ "check": "classify", "pass": false, "components": v["components"] })))
            }
        }
        RootsCmd::Classify { .. } => Err(Fail::Usage("give --norm, or --lattice with optional --roots".into())),
        RootsCmd::Support { g, cap, window } => {
            let (lat, gens) = gens_of(g)?;
            let r = match window {
                Some(w) => roots::support_closure_windowed(&gens, &lat, 2 * cap, *w, exec)?,
                None => roots::support_closure(&gens, &lat, 2 * cap, exec)?,
            };
            let dims: Vec<Value> = r
                .dims
                .iter()
                .map(|(l, m)| {
                    let by: Vec<Value> = m.iter().map(|(d2, n)| json!({ "degree": Scalar::new((*d2).into(), 2.into()).to_string(), "dim": n })).collect();
                    json!({ "label": l, "dims": by })
                })
                .collect();
            let t = format!("labels ({}): {}\ngenerators: {}", r.labels.len(), show_points(&r.labels), r.generators);
            Ok((json!({ "labels": r.labels, "components": dims, "generators": r.generators }), t))
        }
        RootsCmd::Ears { g, window } => {
            let (lat, gens) = gens_of(g)?;
            let rs = roots::close(&gens, &lat, roots::DEFAULT_MAX_NORM, roots::DEFAULT_MAX_ITER)?;
            let r = roots::check_ears(&rs, *window)?;
            let v = serde_json::to_value(&r).unwrap();
            let t = format!(
                "indecomposability: {}\nδ+α property: {}{}",
                if r.indec { "holds" } else { "fails" },
                if r.shift_closed { "holds" } else { "fails" },
                if r.spd_applicable { "" } else { " (not predicted: short roots present)" }
            );
            if r.consistent() {
                Ok((v, t))
            } else {
                Err(Fail::Verify(v))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = std::env::var("VERTEXLAB_THREADS").ok().and_then(|s| s.parse().ok()) {
        exec::set_threads(n);
    }
    match run(&cli) {
        Ok((v, t)) => {
            if cli.json {
                println!("{v}");
            } else {
                println!("{t}");
            }
            ExitCode::SUCCESS
        }
        Err(Fail::Verify(v)) => {
            if cli.json {
                println!("{v}");
            } else {
                println!("FAIL\n{}", serde_json::to_string_pretty(&v).unwrap());
            }
            ExitCode::from(1)
        }
        Err(Fail::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}
