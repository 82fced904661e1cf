//! CLI contract: exit codes (0 success, 1 verification failure, 2 usage or
//! parse error), hex I/O framing, schema-validated JSON output, and
//! determinism given (flags, seed, input).

use std::process::{Command, Output};

fn procnet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_procnet"))
        .args(args)
        .output()
        .expect("spawn procnet")
}

fn procnet_stdin(args: &[&str], stdin: &str) -> Output {
    use std::io::Write;
    use std::process::Stdio;
    let mut child = Command::new(env!("CARGO_BIN_EXE_procnet"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("spawn procnet");
    child
        .stdin
        .as_mut()
        .unwrap()
        .write_all(stdin.as_bytes())
        .unwrap();
    child.wait_with_output().expect("wait procnet")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn schema(name: &str) -> jsonschema::Validator {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../schemas/");
    let text = std::fs::read_to_string(format!("{path}{name}")).expect("schema file");
    jsonschema::validator_for(&serde_json::from_str(&text).unwrap()).expect("valid schema")
}

const KEY: &str = "2BD6459F82C5B300952C49104881FF48";

#[test]
fn encrypt_reference_standard_vector() {
    let out = procnet(&["encrypt", "--key", KEY, "EA024714AD5C4D84"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), "DF1F9B251C0BF45F\n");
}

#[test]
fn encrypt_design_matches_reference_output() {
    let blocks = ["EA024714AD5C4D84", "0000000000000000", "FFFFFFFFFFFFFFFF"];
    let mut args = vec!["encrypt", "--key", KEY];
    args.extend(blocks);
    let reference = procnet(&args);
    for design in ["d1", "d2", "d3", "d4"] {
        let mut args = vec!["encrypt", "--key", KEY, "--design", design];
        args.extend(blocks);
        let out = procnet(&args);
        assert_eq!(out.status.code(), Some(0), "{design}: {}", stderr(&out));
        assert_eq!(stdout(&out), stdout(&reference), "{design} output differs");
    }
}

#[test]
fn encrypt_design_and_reference_byte_identical_on_random_file() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
    let mut text = String::from("# random workload\n");
    for _ in 0..24 {
        text.push_str(&format!("{:016X}\n", rng.gen::<u64>()));
    }
    let dir = std::env::temp_dir().join("procnet-cli-rand");
    std::fs::create_dir_all(&dir).unwrap();
    let input = dir.join("blocks.txt");
    std::fs::write(&input, text).unwrap();
    let run = |design: &str| {
        let out = procnet(&[
            "encrypt",
            "--key",
            KEY,
            "--design",
            design,
            "--input",
            input.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0), "{design}: {}", stderr(&out));
        out.stdout
    };
    assert_eq!(run("ref"), run("d1"));
}

#[test]
fn encrypt_empty_input_empty_output() {
    let out = procnet_stdin(&["encrypt", "--key", KEY], "");
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), "");
}

#[test]
fn encrypt_reads_files_with_comments() {
    let dir = std::env::temp_dir().join("procnet-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let input = dir.join("blocks.txt");
    std::fs::write(&input, "# two blocks\nEA024714AD5C4D84  0000000000000000 # inline\n")
        .unwrap();
    let output = dir.join("out.txt");
    let out = procnet(&[
        "encrypt",
        "--key",
        KEY,
        "--input",
        input.to_str().unwrap(),
        "--output",
        output.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let written = std::fs::read_to_string(&output).unwrap();
    assert_eq!(written.lines().count(), 2);
    assert!(written.starts_with("DF1F9B251C0BF45F"));
}

#[test]
fn encrypt_malformed_hex_exits_2_with_position() {
    let out = procnet_stdin(&["encrypt", "--key", KEY], "EA024714AD5C4D84\nnot-hex-here-word\n");
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert!(err.contains("line 2"), "missing line info: {err}");
    assert!(err.contains("column 1"), "missing column info: {err}");
}

#[test]
fn encrypt_short_block_exits_2() {
    let out = procnet_stdin(&["encrypt", "--key", KEY], "ABCD\n");
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("16 hex digits"));
}

#[test]
fn encrypt_missing_key_exits_2() {
    let out = procnet(&["encrypt", "EA024714AD5C4D84"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn encrypt_bad_key_exits_2() {
    let out = procnet(&["encrypt", "--key", "123", "EA024714AD5C4D84"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("32 hex digits"));
}

#[test]
fn keys_zero_key_shows_forced_subkeys() {
    let out = procnet(&["keys", "--key", &"0".repeat(32)]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("pack 1 (rounds 1-2):"));
    // kL11 = 0000, kL12 = 89AB under the zero key.
    assert!(text.contains("kL1 odd:  0000 89AB"), "got:\n{text}");
}

#[test]
fn keys_json_validates_and_matches_reference() {
    let out = procnet(&["keys", "--key", KEY, "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let validator = schema("keyschedule.schema.json");
    assert!(
        validator.validate(&v).is_ok(),
        "schema violation: {:?}",
        validator.iter_errors(&v).map(|e| e.to_string()).collect::<Vec<_>>()
    );
    let ks = procnet::kasumi_ref::key_schedule(0x2BD6459F82C5B300952C49104881FF48);
    assert_eq!(
        v["packs"][0][0][0].as_str().unwrap(),
        procnet::words::hex16(ks.packs[0].kl_odd[0])
    );
}

#[test]
fn verify_healthy_exits_0_and_reports_seed() {
    let out = procnet(&["verify", "--trials", "25", "--seed", "3"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("seed=3"), "seed missing from header: {text}");
    assert!(text.contains("ok: 25 trials"));
}

#[test]
fn verify_single_trial_runs() {
    let out = procnet(&["verify", "--trials", "1"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("ok: 1 trials"));
}

#[test]
fn bench_json_validates_and_orders_designs() {
    let out = procnet(&["bench", "--blocks", "8", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let validator = schema("bench_report.schema.json");
    assert!(
        validator.validate(&v).is_ok(),
        "schema violation: {:?}",
        validator.iter_errors(&v).map(|e| e.to_string()).collect::<Vec<_>>()
    );
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 4);
    let bpe = |name: &str| -> f64 {
        rows.iter()
            .find(|r| r["design"] == name)
            .unwrap()["blocks_per_epoch"]
            .as_f64()
            .unwrap()
    };
    assert!(bpe("d1") > bpe("d2"));
    assert!(bpe("d3") > bpe("d4"));
}

#[test]
fn bench_is_deterministic_for_a_seed() {
    let a = procnet(&["bench", "--blocks", "4", "--seed", "11", "--designs", "d3,d4"]);
    let b = procnet(&["bench", "--blocks", "4", "--seed", "11", "--designs", "d3,d4"]);
    assert_eq!(stdout(&a), stdout(&b));
    assert_eq!(a.status.code(), Some(0));
}

#[test]
fn dump_net_emits_graph_json() {
    for net in ["keyschedule", "d4"] {
        let out = procnet(&["dump-net", "--network", net]);
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
        let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
        assert!(v["processes"].as_array().unwrap().len() > 3);
        assert!(v["channels"].as_array().unwrap().len() > 3);
    }
}

#[test]
fn unknown_design_exits_2() {
    let out = procnet(&["encrypt", "--key", KEY, "--design", "d9", "EA024714AD5C4D84"]);
    assert_eq!(out.status.code(), Some(2));
}
