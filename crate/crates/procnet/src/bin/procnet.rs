//! Command-line front end: encryption through the reference or any design
//! network, key-schedule inspection, cross-design verification, benchmark
//! comparison and network structure dumps.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage or parse error.

use std::io::Read;
use std::process::ExitCode;
use std::str::FromStr;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use procnet::kasumi_net::{
    build_design_with, build_keyschedule_network, ciphertexts, BuildOpts, DesignId,
};
use procnet::kasumi_ref::{self, KeySchedule, SBoxes};
use procnet::perf;
use procnet::runtime::RunConfig;
use procnet::words::{hex16, hex64, Word128, Word64};

#[derive(Parser)]
#[command(name = "procnet", version, about = "KASUMI process-network workbench")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Engine {
    /// Sequential reference implementation.
    Ref,
    /// Pipelined network, fine-grained F-blocks.
    D1,
    /// Stream network, fine-grained F-blocks.
    D2,
    /// Pipelined network, atomic F-blocks.
    D3,
    /// Stream network, atomic F-blocks.
    D4,
}

impl Engine {
    fn design(self) -> Option<DesignId> {
        match self {
            Engine::Ref => None,
            Engine::D1 => Some(DesignId::D1Pipelined),
            Engine::D2 => Some(DesignId::D2Stream),
            Engine::D3 => Some(DesignId::D3PipelinedCoarse),
            Engine::D4 => Some(DesignId::D4StreamCoarse),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Hex,
    Json,
    Text,
}

#[derive(Subcommand)]
enum Cmd {
    /// Encrypt whitespace-separated 16-hex-digit blocks.
    Encrypt(EncryptArgs),
    /// Print the key schedule: 4 packs of 6 subkey groups.
    Keys(KeysArgs),
    /// Check all four designs against the reference on random pairs.
    Verify(VerifyArgs),
    /// Compare the designs' communication costs on one workload.
    Bench(BenchArgs),
    /// Dump a network graph as JSON.
    DumpNet(DumpArgs),
}

#[derive(Args)]
struct EncryptArgs {
    /// 128-bit key, 32 hex digits.
    #[arg(long)]
    key: String,
    /// Engine to encrypt with.
    #[arg(long, value_enum, default_value = "ref")]
    design: Engine,
    /// Read blocks from this file instead of the command line / stdin.
    /// `#` starts a comment.
    #[arg(long)]
    input: Option<std::path::PathBuf>,
    /// Write ciphertext lines here instead of stdout.
    #[arg(long)]
    output: Option<std::path::PathBuf>,
    /// Scheduler seed for the network engines.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Plaintext blocks as 16-hex-digit tokens.
    blocks: Vec<String>,
}

#[derive(Args)]
struct KeysArgs {
    /// 128-bit key, 32 hex digits.
    #[arg(long)]
    key: String,
    #[arg(long, value_enum, default_value = "hex")]
    format: Format,
}

#[derive(Args)]
struct VerifyArgs {
    /// Number of random (key, block) pairs.
    #[arg(long, default_value_t = 100)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Test hook: swap two S7 entries in the network designs' tables.
    #[arg(long, hide = true, number_of_values = 2, value_names = ["I", "J"])]
    inject_s7_fault: Option<Vec<usize>>,
}

#[derive(Args)]
struct BenchArgs {
    /// 128-bit key, 32 hex digits.
    #[arg(long, default_value = "2BD6459F82C5B300952C49104881FF48")]
    key: String,
    /// Workload size in blocks.
    #[arg(long, default_value_t = 16)]
    blocks: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Designs to compare.
    #[arg(long, value_delimiter = ',', default_values = ["d1", "d2", "d3", "d4"])]
    designs: Vec<String>,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

#[derive(Args)]
struct DumpArgs {
    /// `d1`..`d4` or `keyschedule`.
    #[arg(long, default_value = "d1")]
    network: String,
}

// Usage / parse failures exit 2; verification failures exit 1.
enum Failure {
    Usage(String),
    Verification(String),
}

impl Failure {
    fn usage(msg: impl Into<String>) -> Failure {
        Failure::Usage(msg.into())
    }
}

fn parse_key(s: &str) -> Result<Word128, Failure> {
    if s.len() != 32 {
        return Err(Failure::usage(format!(
            "key must be exactly 32 hex digits, got {}",
            s.len()
        )));
    }
    Word128::from_str_radix(s, 16)
        .map_err(|_| Failure::usage(format!("key is not valid hex: {s:?}")))
}

/// Parse whitespace-separated 16-hex-digit blocks; `#` comments run to end
/// of line. Errors carry 1-based line and column of the offending token.
fn parse_blocks(text: &str) -> Result<Vec<Word64>, Failure> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(i) => &raw[..i],
            None => raw,
        };
        let mut col = 1usize;
        for tok in line.split_whitespace() {
            col = line[col - 1..]
                .find(tok)
                .map(|off| col + off)
                .unwrap_or(col);
            let fail = |why: &str| {
                Failure::usage(format!(
                    "line {}, column {col}: {why}: {tok:?}",
                    lineno + 1
                ))
            };
            if tok.len() != 16 {
                return Err(fail("block must be 16 hex digits"));
            }
            let block =
                Word64::from_str_radix(tok, 16).map_err(|_| fail("invalid hex digits"))?;
            out.push(block);
            col += tok.len();
        }
    }
    Ok(out)
}

fn cmd_encrypt(a: EncryptArgs) -> Result<(), Failure> {
    let key = parse_key(&a.key)?;
    let text = if let Some(path) = &a.input {
        std::fs::read_to_string(path)
            .map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))?
    } else if !a.blocks.is_empty() {
        a.blocks.join(" ")
    } else {
        let mut buf = String::new();
        std::io::stdin()
            .read_to_string(&mut buf)
            .map_err(|e| Failure::usage(format!("cannot read stdin: {e}")))?;
        buf
    };
    let blocks = parse_blocks(&text)?;

    let cts: Vec<Word64> = match a.design.design() {
        None => blocks
            .iter()
            .map(|b| kasumi_ref::kasumi_encrypt(*b, key))
            .collect(),
        Some(d) => {
            let net = build_design_with(d, &BuildOpts::default())
                .map_err(|e| Failure::usage(e.to_string()))?;
            let outcome = net
                .run_blocks(key, &blocks, &RunConfig::cooperative(a.seed))
                .map_err(|e| Failure::usage(e.to_string()))?;
            ciphertexts(&outcome)
        }
    };

    let mut rendered = String::new();
    for ct in cts {
        rendered.push_str(&hex64(ct));
        rendered.push('\n');
    }
    match &a.output {
        Some(path) => std::fs::write(path, rendered)
            .map_err(|e| Failure::usage(format!("cannot write {}: {e}", path.display())))?,
        None => print!("{rendered}"),
    }
    Ok(())
}

fn schedule_json(ks: &KeySchedule) -> serde_json::Value {
    json!(ks
        .packs
        .iter()
        .map(|p| {
            vec![
                p.kl_odd.iter().map(|k| hex16(*k)).collect::<Vec<_>>(),
                p.ko_odd.iter().map(|k| hex16(*k)).collect(),
                p.ki_odd.iter().map(|k| hex16(*k)).collect(),
                p.kl_even.iter().map(|k| hex16(*k)).collect(),
                p.ko_even.iter().map(|k| hex16(*k)).collect(),
                p.ki_even.iter().map(|k| hex16(*k)).collect(),
            ]
        })
        .collect::<Vec<_>>())
}

fn cmd_keys(a: KeysArgs) -> Result<(), Failure> {
    let key = parse_key(&a.key)?;
    let ks = kasumi_ref::key_schedule(key);
    match a.format {
        Format::Json => println!(
            "{}",
            serde_json::to_string_pretty(&json!({ "packs": schedule_json(&ks) })).unwrap()
        ),
        _ => {
            for (i, p) in ks.packs.iter().enumerate() {
                let rounds = (2 * i + 1, 2 * i + 2);
                println!("pack {} (rounds {}-{}):", i + 1, rounds.0, rounds.1);
                let row = |label: &str, ks: &[u16]| {
                    let hex: Vec<String> = ks.iter().map(|k| hex16(*k)).collect();
                    println!("  {label:<9} {}", hex.join(" "));
                };
                row(&format!("kL{} odd:", rounds.0), &p.kl_odd);
                row(&format!("kO{} odd:", rounds.0), &p.ko_odd);
                row(&format!("kI{} odd:", rounds.0), &p.ki_odd);
                row(&format!("kL{} even:", rounds.1), &p.kl_even);
                row(&format!("kO{} even:", rounds.1), &p.ko_even);
                row(&format!("kI{} even:", rounds.1), &p.ki_even);
            }
        }
    }
    Ok(())
}

fn cmd_verify(a: VerifyArgs) -> Result<(), Failure> {
    if a.trials < 1 {
        return Err(Failure::usage("trials must be at least 1"));
    }
    let sboxes = match &a.inject_s7_fault {
        None => SBoxes::standard(),
        Some(ij) => SBoxes::with_s7_swap(ij[0], ij[1]),
    };
    let opts = BuildOpts {
        sboxes: Arc::new(sboxes),
        ..Default::default()
    };
    println!("# verify: trials={} seed={}", a.trials, a.seed);
    let nets: Vec<_> = DesignId::ALL
        .iter()
        .map(|d| build_design_with(*d, &opts).map_err(|e| Failure::usage(e.to_string())))
        .collect::<Result<_, _>>()?;

    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    for trial in 0..a.trials {
        let key: Word128 = rng.gen();
        let block: Word64 = rng.gen();
        let expected = kasumi_ref::kasumi_encrypt(block, key);
        for net in &nets {
            let outcome = net
                .run_blocks(key, &[block], &RunConfig::cooperative(a.seed))
                .map_err(|e| Failure::usage(e.to_string()))?;
            let got = ciphertexts(&outcome)[0];
            if got != expected {
                return Err(Failure::Verification(format!(
                    "counterexample at trial {trial}: design={} key={:032X} block={} expected={} got={}",
                    net.design,
                    key,
                    hex64(block),
                    hex64(expected),
                    hex64(got)
                )));
            }
        }
    }
    println!("ok: {} trials, 4 designs agree with the reference", a.trials);
    Ok(())
}

fn cmd_bench(a: BenchArgs) -> Result<(), Failure> {
    let key = parse_key(&a.key)?;
    if a.blocks < 1 {
        return Err(Failure::usage("blocks must be at least 1"));
    }
    let designs: Vec<DesignId> = a
        .designs
        .iter()
        .map(|s| DesignId::from_str(s).map_err(Failure::usage))
        .collect::<Result<_, _>>()?;
    if designs.len() < 2 {
        return Err(Failure::usage("bench compares at least two designs"));
    }
    let cmp = perf::compare(&designs, key, a.blocks, a.seed)
        .map_err(|e| Failure::usage(e.to_string()))?;
    match a.format {
        Format::Json => println!("{}", serde_json::to_string_pretty(&cmp.to_json()).unwrap()),
        _ => {
            println!("# bench: blocks={} seed={}", a.blocks, a.seed);
            print!("{}", cmp.render_text());
        }
    }
    Ok(())
}

fn cmd_dump(a: DumpArgs) -> Result<(), Failure> {
    let dump = if a.network == "keyschedule" {
        build_keyschedule_network()
            .map_err(|e| Failure::usage(e.to_string()))?
            .dump_json()
    } else {
        let d = DesignId::from_str(&a.network).map_err(Failure::usage)?;
        build_design_with(d, &BuildOpts::default())
            .map_err(|e| Failure::usage(e.to_string()))?
            .network
            .dump_json()
    };
    println!("{}", serde_json::to_string_pretty(&dump).unwrap());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Cmd::Encrypt(a) => cmd_encrypt(a),
        Cmd::Keys(a) => cmd_keys(a),
        Cmd::Verify(a) => cmd_verify(a),
        Cmd::Bench(a) => cmd_bench(a),
        Cmd::DumpNet(a) => cmd_dump(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification(msg)) => {
            eprintln!("FAIL {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
