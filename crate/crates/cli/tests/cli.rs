use std::fs;

use gaptopk_cli::main_with;
use gaptopk_cli::run::RunOutput;
use proptest::prelude::*;

fn invoke(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("gaptopk").chain(args.iter().copied());
    let code = main_with(argv, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

#[test]
fn ingest_counts_items() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("two.dat");
    fs::write(&path, "a b\na").unwrap();
    let (code, out, _) = invoke(&["ingest", "--input", path.to_str().unwrap()]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["records"], 2);
    assert_eq!(v["unique_items"], 2);
    assert_eq!(v["top_items"], serde_json::json!([["a", 2], ["b", 1]]));
}

#[test]
fn run_on_a_dataset_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.dat");
    let (code, _, _) = invoke(&[
        "synth",
        "--output",
        path.to_str().unwrap(),
        "--items",
        "40",
        "--records",
        "3000",
    ]);
    assert_eq!(code, 0);
    let (code, out, err) = invoke(&[
        "run",
        "--dataset",
        path.to_str().unwrap(),
        "--k",
        "3",
        "--seed",
        "1",
    ]);
    assert_eq!(code, 0, "{err}");
    let res: RunOutput = serde_json::from_str(&out).unwrap();
    assert_eq!(res.indices.len(), 3);
    assert!(res.indices.iter().all(|&i| (1..=40).contains(&i)));
}

#[test]
fn exit_codes() {
    // usage errors
    assert_eq!(invoke(&["run", "--queries", "3,2,1", "--k", "2"]).0, 1);
    assert_eq!(
        invoke(&["run", "--queries", "3,2,1", "--k", "1", "--eps", "0.1"]).0,
        1
    );
    assert_eq!(
        invoke(&["run", "--queries", "3,2,1", "--k", "1", "--gamma", "3/10"]).0,
        1
    );
    assert_eq!(invoke(&["run", "--k", "1"]).0, 1);
    assert_eq!(invoke(&["frobnicate"]).0, 1);
    assert_eq!(invoke(&["verify", "quick"]).0, 1);
    // I/O
    let (code, _, err) = invoke(&["run", "--input", "/nonexistent/x.dat", "--k", "1"]);
    assert_eq!(code, 3);
    assert!(err.contains("/nonexistent/x.dat"));
    // help is not an error
    assert_eq!(invoke(&["--help"]).0, 0);
}

#[test]
fn malformed_file_names_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.dat");
    fs::write(&path, "a b\nc\n\nd\n").unwrap();
    let (code, _, err) = invoke(&["ingest", "--input", path.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(err.contains(":3:"), "{err}");
    fs::write(&path, "").unwrap();
    assert_eq!(invoke(&["ingest", "--input", path.to_str().unwrap()]).0, 1);
}

#[test]
fn verify_lemmas_passes() {
    let (code, out, _) = invoke(&["verify", "lemmas"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["suite"], "lemmas");
    assert_eq!(v["pass"], true);
    assert!(v["checks"].as_array().unwrap().len() >= 5);
}

#[test]
fn bench_json_has_every_cell() {
    let (code, out, err) = invoke(&[
        "bench", "--zipf", "300", "--k", "5,10", "--trials", "3", "--format", "json",
    ]);
    assert_eq!(code, 0, "{err}");
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 6);
    assert_eq!(
        invoke(&["bench", "--zipf", "300", "--k", "5", "--trials", "0"]).0,
        1
    );
}

#[test]
fn gaps_are_exact_strings() {
    let (_, out, _) = invoke(&[
        "run",
        "--queries",
        "7,5,5,2,0",
        "--k",
        "2",
        "--gamma",
        "1/4",
        "--refine-factor",
        "3",
        "--seed",
        "9",
    ]);
    let res: RunOutput = serde_json::from_str(&out).unwrap();
    assert_eq!(res.gamma_star, "1/4");
    for g in &res.gaps {
        assert!(g.ends_with("/4"), "{g}");
        gaptopk_cli::run::gap_units(g, 4).unwrap();
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn prune_flag_does_not_change_output(
        counts in prop::collection::vec(0u32..20, 4..30),
        seed in any::<u64>(),
        k in 1usize..3,
    ) {
        let list: Vec<String> = counts.iter().map(u32::to_string).collect();
        let list = list.join(",");
        let seed = seed.to_string();
        let k = k.to_string();
        let base = ["run", "--queries", &list, "--k", &k, "--seed", &seed];
        let (c1, a, _) = invoke(&base);
        let mut off = base.to_vec();
        off.push("--no-prune");
        let (c2, b, _) = invoke(&off);
        prop_assert_eq!(c1, 0);
        prop_assert_eq!(c2, 0);
        let a: RunOutput = serde_json::from_str(&a).unwrap();
        let b: RunOutput = serde_json::from_str(&b).unwrap();
        prop_assert_eq!(&a.indices, &b.indices);
        prop_assert_eq!(&a.gaps, &b.gaps);
        prop_assert_eq!(a.refine_levels, b.refine_levels);
    }

    #[test]
    fn json_round_trips(seed in any::<u64>(), variant in prop::sample::select(vec!["secure", "rounded-reference", "ideal-baseline"])) {
        let seed = seed.to_string();
        let (code, out, _) = invoke(&["run", "--queries", "9,4,4,1,0", "--k", "2", "--seed", &seed, "--variant", variant]);
        prop_assert_eq!(code, 0);
        let parsed: RunOutput = serde_json::from_str(&out).unwrap();
        let again = serde_json::to_string_pretty(&parsed).unwrap();
        let reparsed: RunOutput = serde_json::from_str(&again).unwrap();
        prop_assert_eq!(parsed, reparsed);
    }
}
