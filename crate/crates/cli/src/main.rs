use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use quleq::authsim::{self, GSpec, SharedKey, Transcript};
use quleq::eqslat::{self, CnfHK, Solve};
use quleq::genset::{self, GenPlan, Mode, SynthConfig};
use quleq::lattice::TableLattice;
use quleq::latterm::{EvalContext, LatTerm};
use quleq::poset::{build_poset, compute_params, parse_poset_spec, Poset};
use quleq::quolattice::{count_quo, DEFAULT_QUO_MAX_N};
use quleq::report;
use quleq::Error;

#[derive(Parser)]
#[command(name = "quleq", version, about = "Quasiorder lattices of finite posets: generating sets, equations, authentication")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct Global {
    /// Seed for every randomized step; required by randomized commands.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Element cap for closures and enumerations.
    #[arg(long, global = true, default_value_t = 2_000_000)]
    budget_elems: usize,
    /// Wall-clock cap in seconds for searches.
    #[arg(long, global = true)]
    budget_secs: Option<f64>,
    /// Write the structured report (or the produced artifact) here.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Print the structured report instead of the summary.
    #[arg(long, global = true)]
    json: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build posets and compute their parameters.
    #[command(subcommand)]
    Poset(PosetCmd),
    /// Enumerate quasiorder lattices.
    #[command(subcommand)]
    Quo(QuoCmd),
    /// Synthesize and verify generating sets.
    #[command(subcommand)]
    Gen(GenCmd),
    /// Boolean generating sets.
    #[command(subcommand)]
    Bool(BoolCmd),
    /// Evaluate lattice terms.
    #[command(subcommand)]
    Term(TermCmd),
    /// Lattice equation systems and the CNF reduction.
    #[command(subcommand)]
    Eqs(EqsCmd),
    /// Challenge-response authentication.
    #[command(subcommand)]
    Auth(AuthCmd),
    /// Bound tables.
    #[command(subcommand)]
    Report(ReportCmd),
}

#[derive(Subcommand)]
enum PosetCmd {
    /// Build a poset file from cover pairs like `0-1,1-2`.
    Build {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value = "")]
        covers: String,
        #[arg(long, value_delimiter = ',')]
        labels: Option<Vec<String>>,
    },
    /// Component parameters, selectors and bounds.
    Params {
        #[arg(long)]
        poset: String,
    },
}

#[derive(Subcommand)]
enum QuoCmd {
    /// Count the quasiorders of an n-element set.
    Enum {
        #[arg(long)]
        n: usize,
        /// Largest n accepted.
        #[arg(long, default_value_t = DEFAULT_QUO_MAX_N)]
        max_n: usize,
    },
}

#[derive(Clone, Copy, ValueEnum, PartialEq, Eq)]
enum VerifyKind {
    None,
    Certs,
    Full,
}

#[derive(Subcommand)]
enum GenCmd {
    /// Build E and its certificates.
    Synth {
        #[arg(long)]
        poset: String,
        #[arg(long)]
        mode: Option<String>,
        #[arg(long, value_enum, default_value = "certs")]
        verify: VerifyKind,
    },
    /// Re-check a saved plan against its poset.
    Verify {
        #[arg(long)]
        poset: String,
        #[arg(long)]
        plan: PathBuf,
        #[arg(long)]
        full: bool,
    },
    /// Print the witness terms of a saved plan.
    Certs {
        #[arg(long)]
        plan: PathBuf,
    },
}

#[derive(Subcommand)]
enum BoolCmd {
    /// The Boolean generators of the powerset of [m].
    Gens {
        #[arg(long)]
        m: usize,
    },
}

#[derive(Subcommand)]
enum TermCmd {
    /// Evaluate a term in a table lattice (`n5`, `m3`, `quo2`, `chainK`).
    Eval {
        #[arg(long)]
        term: String,
        #[arg(long)]
        lattice: String,
        /// Element labels for x_base, x_(base+1), ..
        #[arg(long, value_delimiter = ',', default_value = "")]
        vars: Vec<String>,
        #[arg(long, default_value_t = 1, allow_hyphen_values = true)]
        base: i64,
    },
}

#[derive(Subcommand)]
enum EqsCmd {
    /// Reduce a CNF file to a four-equation system.
    Reduce {
        #[arg(long)]
        cnf: PathBuf,
        #[arg(long)]
        lattice: String,
        #[arg(long)]
        a0: String,
        #[arg(long)]
        a1: String,
    },
    /// Solve an equation file by exhaustive search.
    Solve {
        #[arg(long)]
        system: PathBuf,
        #[arg(long)]
        lattice: String,
    },
    /// Compare SAT of a CNF with solvability of its reduction.
    Check {
        #[arg(long)]
        cnf: PathBuf,
        #[arg(long)]
        lattice: String,
        #[arg(long)]
        a0: String,
        #[arg(long)]
        a1: String,
    },
}

#[derive(Subcommand)]
enum AuthCmd {
    /// Shared key: E of a verified plan plus random padding.
    Keygen {
        #[arg(long)]
        poset: String,
        #[arg(long, default_value_t = 0)]
        pad: usize,
        #[arg(long, default_value_t = authsim::DEFAULT_B)]
        b: usize,
        #[arg(long, default_value_t = authsim::DEFAULT_DEPTH)]
        depth: usize,
        #[arg(long, default_value_t = 0)]
        constants: usize,
        /// `identity` or `perm:<seed>`.
        #[arg(long, default_value = "identity")]
        g: String,
    },
    /// Genuine, tampered and replayed sessions.
    Demo {
        #[arg(long)]
        key: PathBuf,
        #[arg(long, default_value_t = 10)]
        sessions: u64,
    },
    /// Prover and verifier on two threads exchanging wire lines.
    ServeLoopback {
        #[arg(long)]
        key: PathBuf,
        #[arg(long, default_value_t = 3)]
        sessions: u64,
        /// Directory for one transcript file per session.
        #[arg(long)]
        transcripts: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum ReportCmd {
    /// Bound formulas for antichains, chains and Y-posets.
    Corollary {
        #[arg(long, default_value_t = 3)]
        ncedge: u64,
    },
    /// Parameters of the two figure posets.
    Figures,
}

/// What a command produces: a summary for people and a report for tools.
struct Outcome {
    summary: String,
    report: Value,
    /// Verification failed.
    failed: bool,
}

impl Outcome {
    fn ok(summary: String, report: Value) -> Self {
        Outcome { summary, report, failed: false }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Verification(_) => 2,
        Error::Budget(_) => 3,
        _ => 4,
    }
}

fn need_seed(g: &Global) -> Result<u64, Error> {
    g.seed.ok_or_else(|| Error::Precondition("this command is randomized; pass --seed".into()))
}

fn read(path: &Path) -> Result<String, Error> {
    Ok(fs::read_to_string(path)?)
}

fn load_poset(spec: &str) -> Result<Poset, Error> {
    if Path::new(spec).is_file() {
        Poset::from_json(&read(Path::new(spec))?)
    } else {
        parse_poset_spec(spec)
    }
}

fn lattice_value(lat: &TableLattice, label: &str) -> Result<usize, Error> {
    lat.lookup(label).ok_or_else(|| Error::Precondition(format!("`{label}` is not an element of {}", lat.name())))
}

fn parse_covers(s: &str) -> Result<Vec<(usize, usize)>, Error> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            let (a, b) = t.split_once('-').ok_or_else(|| Error::Precondition(format!("cover `{t}` is not `a-b`")))?;
            let num = |x: &str| x.trim().parse().map_err(|_| Error::Precondition(format!("bad id in `{t}`")));
            Ok((num(a)?, num(b)?))
        })
        .collect()
}

fn run(cli: &Cli) -> Result<Outcome, Error> {
    let g = &cli.global;
    match &cli.cmd {
        Cmd::Poset(PosetCmd::Build { n, covers, labels }) => {
            let mut p = build_poset(&parse_covers(covers)?, *n)?;
            if let Some(l) = labels {
                p = p.with_labels(l.clone())?;
            }
            let report: Value = serde_json::from_str(&p.to_json())?;
            Ok(Outcome::ok(format!("poset with {} elements and {} covers", p.n(), p.covers().len()), report))
        }
        Cmd::Poset(PosetCmd::Params { poset }) => {
            let p = load_poset(poset)?;
            let pp = compute_params(&p)?;
            let (a, b) = genset::bounds(&pp);
            let sel = pp.selectors.as_ref().map(|s| [s[0].comp, s[1].comp]);
            let report = json!({
                "n": p.n(), "ncs": pp.ncs, "ncmp": pp.ncmp, "ncedge": pp.ncedge, "ncextr": pp.ncextr,
                "is_forest": pp.is_forest, "is_chain": p.is_chain(), "selectors": sel,
                "ntp1": pp.ntp1(), "ntp2": pp.ntp2(), "ncorr": pp.ncorr(),
                "f": genset::f_card(pp.ncmp as u64).ok(), "lasp_ncedge": genset::lasp(pp.ncedge as u64),
                "bound_a": a, "bound_b": b,
            });
            let summary = format!(
                "n={} ncs={} ncmp={} ncedge={} ncextr={} forest={} ncorr={:?} bound A={:?} B={:?}",
                p.n(),
                pp.ncs,
                pp.ncmp,
                pp.ncedge,
                pp.ncextr,
                pp.is_forest,
                pp.ncorr(),
                a,
                b
            );
            Ok(Outcome::ok(summary, report))
        }
        Cmd::Quo(QuoCmd::Enum { n, max_n }) => {
            let count = count_quo(*n, *max_n)?;
            Ok(Outcome::ok(format!("|Quo({n})| = {count}"), json!({ "n": n, "count": count })))
        }
        Cmd::Gen(GenCmd::Synth { poset, mode, verify }) => {
            let seed = need_seed(g)?;
            let p = load_poset(poset)?;
            let cfg = SynthConfig {
                mode: mode.as_deref().map(str::parse::<Mode>).transpose()?,
                seed,
                search_secs: g.budget_secs.or(Some(20.0)),
                ..SynthConfig::default()
            };
            let plan = if *verify == VerifyKind::None {
                genset::synthesize_unchecked(&p, &cfg)?
            } else {
                genset::synthesize(&p, &cfg)?
            };
            let mut report = json!({
                "mode": plan.mode.to_string(), "size": plan.e.len(), "bound": plan.bound,
                "bound_a": plan.bound_a, "bound_b": plan.bound_b, "within_bound": plan.within_bound(),
                "warnings": plan.warnings,
                "verification": match verify { VerifyKind::None => "none", VerifyKind::Certs => "certificates", VerifyKind::Full => "full-closure" },
                "certificates": plan.certificates.len(),
            });
            let mut summary = format!(
                "mode {}: |E| = {} (bound {}; A = {:?}, B = {:?}), {} certificates checked",
                plan.mode,
                plan.e.len(),
                plan.bound,
                plan.bound_a,
                plan.bound_b,
                plan.certificates.len()
            );
            let mut failed = false;
            if *verify == VerifyKind::Full {
                let fc = genset::verify_full(&p, &plan, g.budget_elems)?;
                report["closure"] = json!({ "quleq_size": fc.quleq_size, "closure_size": fc.closure_size, "generated": fc.generated });
                summary += &format!("\nfull closure: {} of {} elements, generated = {}", fc.closure_size, fc.quleq_size, fc.generated);
                failed = !fc.generated;
            }
            for w in &plan.warnings {
                summary += &format!("\nwarning: {w}");
            }
            if let Some(out) = &g.out {
                fs::write(out, plan.to_json())?;
                summary += &format!("\nplan written to {}", out.display());
            }
            Ok(Outcome { summary, report, failed })
        }
        Cmd::Gen(GenCmd::Verify { poset, plan, full }) => {
            let p = load_poset(poset)?;
            let plan = GenPlan::from_json(&read(plan)?)?;
            genset::verify_certificates(&p, &plan)?;
            let mut report = json!({ "certificates": plan.certificates.len(), "ok": true });
            let mut summary = format!("{} certificates match the closed form", plan.certificates.len());
            let mut failed = false;
            if *full {
                let fc = genset::verify_full(&p, &plan, g.budget_elems)?;
                report["closure"] = json!({ "quleq_size": fc.quleq_size, "closure_size": fc.closure_size, "generated": fc.generated });
                summary += &format!("\nfull closure: {} of {} elements, generated = {}", fc.closure_size, fc.quleq_size, fc.generated);
                failed = !fc.generated;
            }
            Ok(Outcome { summary, report, failed })
        }
        Cmd::Gen(GenCmd::Certs { plan }) => {
            let plan = GenPlan::from_json(&read(plan)?)?;
            let lines: Vec<String> = plan.certificates.iter().map(|((a, b), t)| format!("{a},{b}: {t}")).collect();
            let report = json!(plan.certificates.iter().map(|((a, b), t)| (format!("{a},{b}"), Value::String(t.to_string()))).collect::<serde_json::Map<_, _>>());
            Ok(Outcome::ok(lines.join("\n"), report))
        }
        Cmd::Bool(BoolCmd::Gens { m }) => {
            let g0 = genset::boolean_generators(*m);
            let bs = genset::sperner_assignment(*m);
            let summary = g0.iter().enumerate().map(|(j, x)| format!("X{} = {:?}", j + 1, x)).collect::<Vec<_>>().join("\n");
            Ok(Outcome::ok(
                format!("s({m}) = {}\n{summary}", g0.len()),
                json!({ "m": m, "lasp": g0.len(), "generators": g0, "assignment": bs }),
            ))
        }
        Cmd::Term(TermCmd::Eval { term, lattice, vars, base }) => {
            let lat = TableLattice::by_name(lattice)?;
            let t: LatTerm = term.parse()?;
            let vals = vars.iter().filter(|v| !v.is_empty()).map(|v| lattice_value(&lat, v)).collect::<Result<Vec<_>, _>>()?;
            let v = t.eval(&EvalContext::new(&lat, &vals).with_base(*base))?;
            Ok(Outcome::ok(lat.label(v).to_string(), json!({ "term": t.to_string(), "value": lat.label(v) })))
        }
        Cmd::Eqs(EqsCmd::Reduce { cnf, lattice, a0, a1 }) => {
            let h = CnfHK::parse(&read(cnf)?)?;
            let lat = TableLattice::by_name(lattice)?;
            let sys = eqslat::reduce_cnfhk(&h, &lat, lattice_value(&lat, a0)?, lattice_value(&lat, a1)?)?;
            let text = eqslat::system_to_text(&sys, &lat);
            if let Some(out) = &g.out {
                fs::write(out, &text)?;
            }
            Ok(Outcome::ok(text.trim_end().to_string(), json!({ "k": sys.k, "b": sys.b(), "nodes": sys.size() })))
        }
        Cmd::Eqs(EqsCmd::Solve { system, lattice }) => {
            let lat = TableLattice::by_name(lattice)?;
            let sys = eqslat::parse_system(&read(system)?, &lat)?;
            let domain: Vec<usize> = lat.elements().collect();
            match eqslat::solve_brute(&lat, &domain, &sys, g.budget_elems as u128)? {
                Solve::Solved(w) => {
                    let labels: Vec<&str> = w.iter().map(|&x| lat.label(x)).collect();
                    let named: Vec<String> =
                        labels.iter().enumerate().map(|(i, l)| format!("x{}={l}", sys.base + i as i64)).collect();
                    Ok(Outcome::ok(format!("solvable: {}", named.join(" ")), json!({ "solvable": true, "solution": labels })))
                }
                Solve::Unsolvable => Ok(Outcome::ok("unsolvable".into(), json!({ "solvable": false }))),
            }
        }
        Cmd::Eqs(EqsCmd::Check { cnf, lattice, a0, a1 }) => {
            let h = CnfHK::parse(&read(cnf)?)?;
            let lat = TableLattice::by_name(lattice)?;
            let (a0, a1) = (lattice_value(&lat, a0)?, lattice_value(&lat, a1)?);
            let sys = eqslat::reduce_cnfhk(&h, &lat, a0, a1)?;
            let sat = eqslat::sat_brute(&h)?;
            let domain: Vec<usize> = lat.elements().collect();
            let solved = eqslat::solve_brute(&lat, &domain, &sys, g.budget_elems as u128)?;
            let lifted_ok = match &sat {
                Some(gv) => sys.check(&lat, &eqslat::lift_solution(gv, a0, a1))?,
                None => true,
            };
            let agree = sat.is_some() == matches!(solved, Solve::Solved(_)) && lifted_ok;
            let summary = format!(
                "sat = {}, reduced system solvable = {}, lifted witness ok = {lifted_ok}, agree = {agree}",
                sat.is_some(),
                matches!(solved, Solve::Solved(_))
            );
            if !agree {
                return Err(Error::Verification(summary));
            }
            Ok(Outcome::ok(summary, json!({ "sat": sat.is_some(), "solvable": matches!(solved, Solve::Solved(_)), "agree": agree })))
        }
        Cmd::Auth(AuthCmd::Keygen { poset, pad, b, depth, constants, g: gspec }) => {
            let seed = need_seed(g)?;
            let p = load_poset(poset)?;
            let cfg = SynthConfig { seed, search_secs: g.budget_secs.or(Some(20.0)), ..SynthConfig::default() };
            let plan = genset::synthesize(&p, &cfg)?;
            let mut key = authsim::keygen(p.order(), &plan, *pad, seed);
            key.b = *b;
            key.depth = *depth;
            key.n_constants = *constants;
            key.g = match gspec.split_once(':') {
                None if gspec == "identity" => GSpec::Identity,
                Some(("perm", s)) => GSpec::BytePermutation {
                    seed: s.parse().map_err(|_| Error::Precondition(format!("bad permutation seed `{s}`")))?,
                },
                _ => return Err(Error::Precondition(format!("unknown g `{gspec}`"))),
            };
            let text = key.to_json();
            if let Some(out) = &g.out {
                fs::write(out, &text)?;
            }
            Ok(Outcome::ok(
                format!("key with k = {} ({} generating), b = {}", key.k(), key.generating, key.b),
                serde_json::from_str(&text)?,
            ))
        }
        Cmd::Auth(AuthCmd::Demo { key, sessions }) => {
            let seed = need_seed(g)?;
            let key = SharedKey::from_json(&read(key)?)?;
            let (mut genuine, mut tampered, mut replayed) = (0, 0, 0);
            for s in 0..*sessions {
                let cs = seed.wrapping_add(2 * s);
                let t = authsim::run_session(&key, &key, s, cs)?;
                genuine += t.verdict().is_some_and(|v| v.accepted()) as u64;
                let ch = authsim::challenge(&key, cs);
                let mut r = authsim::respond(&key, &ch)?;
                let byte = (s as usize) % r.parts[0].len();
                r.parts[0][byte] ^= 1 << (s % 8);
                tampered += !authsim::verify(&key, &ch, &r).accepted() as u64;
                replayed += !authsim::replay_response(&key, &t, s, cs + 1)?.accepted() as u64;
            }
            let report = json!({ "sessions": sessions, "genuine_accepted": genuine, "tampered_rejected": tampered, "replays_rejected": replayed });
            let failed = genuine != *sessions || tampered != *sessions || replayed != *sessions;
            Ok(Outcome {
                summary: format!(
                    "{sessions} sessions: {genuine} genuine accepted, {tampered} tampered rejected, {replayed} replays rejected"
                ),
                report,
                failed,
            })
        }
        Cmd::Auth(AuthCmd::ServeLoopback { key, sessions, transcripts }) => {
            let seed = need_seed(g)?;
            let key = SharedKey::from_json(&read(key)?)?;
            let ts: Vec<Transcript> = authsim::serve_loopback(&key, *sessions, seed)?;
            if let Some(dir) = transcripts {
                fs::create_dir_all(dir)?;
                for (i, t) in ts.iter().enumerate() {
                    fs::write(dir.join(format!("session{i}.jsonl")), t.dump())?;
                }
            }
            let accepted = ts.iter().filter(|t| t.verdict().is_some_and(|v| v.accepted())).count();
            let wire: String = ts.iter().map(Transcript::dump).collect();
            Ok(Outcome {
                summary: format!("{wire}{accepted} of {sessions} sessions accepted"),
                report: json!({ "sessions": sessions, "accepted": accepted }),
                failed: accepted as u64 != *sessions,
            })
        }
        Cmd::Report(ReportCmd::Corollary { ncedge }) => {
            let mut rows = report::corollary_rows(*ncedge);
            rows.extend(report::y_rows_searched()?);
            Ok(Outcome::ok(report::corollary_table(*ncedge)?.trim_end().to_string(), serde_json::to_value(&rows)?))
        }
        Cmd::Report(ReportCmd::Figures) => {
            let rs = report::figure_reports()?;
            let summary = rs
                .iter()
                .map(|r| {
                    format!(
                        "{}: n={} ncmp={} ncs={} strips={} ncedge={} threads={} ncextr={} ntp={}/{} ncorr={} f={} lasp={} A={:?} B={:?}\n  {}",
                        r.name, r.n, r.ncmp, r.ncs, r.strips, r.ncedge, r.threads, r.ncextr, r.ntp1, r.ntp2, r.ncorr, r.f, r.lasp,
                        r.bound_a, r.bound_b, r.note
                    )
                })
                .collect::<Vec<_>>()
                .join("\n");
            Ok(Outcome::ok(summary, serde_json::to_value(&rs)?))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(o) => {
            if cli.global.json {
                println!("{}", serde_json::to_string_pretty(&o.report).unwrap());
            } else {
                println!("{}", o.summary);
            }
            if let (Some(out), false) = (&cli.global.out, writes_artifact(&cli.cmd)) {
                if let Err(e) = fs::write(out, serde_json::to_string_pretty(&o.report).unwrap()) {
                    eprintln!("error: {e}");
                    return ExitCode::from(4);
                }
            }
            if o.failed {
                eprintln!("verification failed");
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            let kind = match exit_code(&e) {
                2 => "verification failed",
                3 => "budget refused",
                _ => "bad input",
            };
            eprintln!("{kind}: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

/// Commands whose `--out` receives the artifact rather than the report.
fn writes_artifact(cmd: &Cmd) -> bool {
    matches!(cmd, Cmd::Gen(GenCmd::Synth { .. }) | Cmd::Eqs(EqsCmd::Reduce { .. }) | Cmd::Auth(AuthCmd::Keygen { .. }))
}
