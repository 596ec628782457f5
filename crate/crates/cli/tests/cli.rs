use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn quleq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_quleq")).args(args).output().expect("run quleq")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", stdout(o)))
}

#[test]
fn quo_enum_counts() {
    let o = quleq(&["quo", "enum", "--n", "4", "--json"]);
    assert!(o.status.success());
    assert_eq!(json(&o)["count"], 355);
}

#[test]
fn quo_enum_refuses_large_n() {
    let o = quleq(&["quo", "enum", "--n", "9"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn randomized_commands_need_a_seed() {
    let o = quleq(&["gen", "synth", "--poset", "antichain3"]);
    assert_eq!(o.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--seed"));
}

#[test]
fn bad_poset_spec_is_bad_input() {
    let o = quleq(&["poset", "params", "--poset", "pentagon7"]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn poset_build_then_params() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("y.json");
    let o = quleq(&["poset", "build", "--n", "4", "--covers", "0-1,1-2,1-3", "--out", file.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = quleq(&["poset", "params", "--poset", file.to_str().unwrap(), "--json"]);
    let v = json(&o);
    assert_eq!(v["ncmp"], 1);
    assert_eq!(v["ncedge"], 3);
}

#[test]
fn cycle_is_rejected() {
    let o = quleq(&["poset", "build", "--n", "2", "--covers", "0-1,1-0"]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn synth_verify_and_certs_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let plan = dir.path().join("plan.json");
    let plan_s = plan.to_str().unwrap();
    let o = quleq(&["gen", "synth", "--poset", "antichain5", "--seed", "1", "--verify", "full", "--out", plan_s]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("6942 of 6942"));

    let o = quleq(&["gen", "verify", "--poset", "antichain5", "--plan", plan_s, "--json"]);
    assert!(o.status.success());
    assert_eq!(json(&o)["ok"], true);

    let o = quleq(&["gen", "certs", "--plan", plan_s, "--json"]);
    assert_eq!(json(&o).as_object().unwrap().len(), 20);
}

#[test]
fn tampered_plan_fails_verification() {
    let dir = tempfile::tempdir().unwrap();
    let plan = dir.path().join("plan.json");
    let plan_s = plan.to_str().unwrap();
    assert!(quleq(&["gen", "synth", "--poset", "antichain4", "--seed", "2", "--out", plan_s]).status.success());
    let mut v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&plan).unwrap()).unwrap();
    let certs = v["certificates"].as_object_mut().unwrap();
    let (k0, k1) = {
        let mut keys = certs.keys();
        (keys.next().unwrap().clone(), keys.next().unwrap().clone())
    };
    let t1 = certs[&k1].clone();
    certs.insert(k0, t1);
    fs::write(&plan, v.to_string()).unwrap();
    let o = quleq(&["gen", "verify", "--poset", "antichain4", "--plan", plan_s]);
    assert_eq!(o.status.code(), Some(2), "{}", stdout(&o));
}

#[test]
fn synth_is_deterministic_in_the_seed() {
    let a = quleq(&["gen", "synth", "--poset", "antichain4", "--seed", "7", "--json"]);
    let b = quleq(&["gen", "synth", "--poset", "antichain4", "--seed", "7", "--json"]);
    assert_eq!(stdout(&a), stdout(&b));
}

#[test]
fn term_eval_in_n5() {
    let o = quleq(&["term", "eval", "--term", "x1 v (x2 ^ x3)", "--lattice", "n5", "--vars", "a,b,c"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout(&o).trim(), "a");
}

#[test]
fn bool_gens_size() {
    let o = quleq(&["bool", "gens", "--m", "1000", "--json"]);
    assert_eq!(json(&o)["lasp"], 13);
}

#[test]
fn eqs_reduce_solve_check() {
    let dir = tempfile::tempdir().unwrap();
    let cnf = dir.path().join("h.cnf");
    fs::write(&cnf, "m 3\nP 1 2 3\nN 1 2\nN 2 3\nN 1 3\n").unwrap();
    let sys = dir.path().join("sys.txt");
    let (cnf_s, sys_s) = (cnf.to_str().unwrap(), sys.to_str().unwrap());
    let o = quleq(&["eqs", "reduce", "--cnf", cnf_s, "--lattice", "m3", "--a0", "0", "--a1", "a", "--out", sys_s]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = quleq(&["eqs", "solve", "--system", sys_s, "--lattice", "m3", "--json"]);
    assert_eq!(json(&o)["solvable"], true);
    let o = quleq(&["eqs", "check", "--cnf", cnf_s, "--lattice", "chain3", "--a0", "0", "--a1", "1"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("agree = true"));
}

#[test]
fn unsatisfiable_cnf_gives_unsolvable_system() {
    let dir = tempfile::tempdir().unwrap();
    let cnf = dir.path().join("h.cnf");
    // every triple needs a true variable, every pair forbids two
    fs::write(&cnf, "m 4\nP 1 2 3\nP 1 2 4\nP 1 3 4\nP 2 3 4\nN 1 2\nN 1 3\nN 1 4\nN 2 3\nN 2 4\nN 3 4\n").unwrap();
    let o = quleq(&["eqs", "check", "--cnf", cnf.to_str().unwrap(), "--lattice", "n5", "--a0", "a", "--a1", "b", "--json"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&o);
    assert_eq!(v["sat"], false);
    assert_eq!(v["solvable"], false);
}

#[test]
fn auth_keygen_demo_and_loopback() {
    let dir = tempfile::tempdir().unwrap();
    let key = dir.path().join("key.json");
    let key_s = key.to_str().unwrap();
    let o = quleq(&["auth", "keygen", "--poset", "antichain3", "--seed", "4", "--pad", "1", "--g", "perm:9", "--out", key_s]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = quleq(&["auth", "demo", "--key", key_s, "--seed", "3", "--sessions", "12", "--json"]);
    assert!(o.status.success());
    let v = json(&o);
    assert_eq!(v["genuine_accepted"], 12);
    assert_eq!(v["tampered_rejected"], 12);
    assert_eq!(v["replays_rejected"], 12);

    let tdir = dir.path().join("transcripts");
    let o = quleq(&["auth", "serve-loopback", "--key", key_s, "--seed", "5", "--sessions", "2", "--transcripts", tdir.to_str().unwrap()]);
    assert!(o.status.success());
    let text = fs::read_to_string(Path::new(&tdir).join("session1.jsonl")).unwrap();
    assert_eq!(text.lines().count(), 4);
    assert!(text.lines().last().unwrap().contains("accept"));
}

#[test]
fn report_commands() {
    let o = quleq(&["report", "corollary"]);
    assert!(stdout(&o).contains("chains of length 10^20"));
    let o = quleq(&["report", "figures", "--json"]);
    let v = json(&o);
    assert_eq!(v[0]["bound_b"], 22);
    assert_eq!(v[1]["bound_b"], 12);
}
