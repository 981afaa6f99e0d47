//! Decoder command suite run against the built binary in a scrubbed
//! environment: no variables beyond the key, an empty working directory, no
//! provider flags and no bridge.

#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use permusteg::codec::encode;
use permusteg::keystream::{Keystream, SecretKey};
use permusteg::lab::{sample_covertext, trial_rng};
use permusteg::provider::{FixedProvider, FixedTable};
use permusteg::sampler::SamplingFunction;

pub const MESSAGE: &str = "1011001110001011";

pub struct Inputs {
    _dir: tempfile::TempDir,
    pub key_file: PathBuf,
    pub key_hex: String,
    pub tokens: PathBuf,
    pub token_bits: PathBuf,
    pub framed_tokens: PathBuf,
    pub covertext: PathBuf,
    pub malformed: PathBuf,
    pub out_of_range: PathBuf,
}

fn token_file(tokens: &[u32]) -> String {
    tokens.iter().map(|t| format!("{t}\n")).collect()
}

/// Stegotexts and covertexts produced in-process on the balanced 4-token
/// model at pe = 0.01.
pub fn prepare() -> Inputs {
    let dir = tempfile::tempdir().unwrap();
    let key = SecretKey::from_test_seed(2024);
    let p = FixedProvider::new(FixedTable::balanced(4), 1.0).unwrap();
    let sf = SamplingFunction::default_cos();
    let bits: Vec<u8> = MESSAGE.bytes().map(|c| c - b'0').collect();
    let (tokens, trace) = encode(
        &p,
        &mut Keystream::new(key.clone()),
        &sf,
        0.01,
        &bits,
        &[],
        100_000,
    )
    .unwrap();
    let mut framed = (0..16)
        .rev()
        .map(|i| ((bits.len() >> i) & 1) as u8)
        .collect::<Vec<_>>();
    framed.extend(&bits);
    let (framed_tokens, _) = encode(
        &p,
        &mut Keystream::new(key.clone()),
        &sf,
        0.01,
        &framed,
        &[],
        100_000,
    )
    .unwrap();
    let cover = sample_covertext(&p, 500, &[], &mut trial_rng(99, 0)).unwrap();

    let path = |name: &str| dir.path().join(name);
    let key_file = path("key.hex");
    key.write_file(&key_file).unwrap();
    let write = |name: &str, text: String| {
        std::fs::write(path(name), text).unwrap();
        path(name)
    };
    Inputs {
        key_file,
        key_hex: key.to_hex(),
        tokens: write("stego.txt", token_file(&tokens)),
        token_bits: write("stego.bits", format!("{}\n", trace.token_bits)),
        framed_tokens: write("framed.txt", token_file(&framed_tokens)),
        covertext: write("cover.txt", token_file(&cover)),
        malformed: write("bad.txt", "0\n3\nthree\n".into()),
        out_of_range: write("range.txt", "0\n4\n".into()),
        _dir: dir,
    }
}

fn decode(bin: &str, cwd: &Path, env_key: Option<&str>, args: &[&str]) -> Output {
    let mut cmd = Command::new(bin);
    cmd.env_clear().current_dir(cwd).arg("decode").args(args);
    if let Some(k) = env_key {
        cmd.env("PERMUSTEG_KEY", k);
    }
    cmd.output().unwrap()
}

fn expect(out: &Output, code: i32, stdout: Option<&str>) -> Result<(), String> {
    if out.status.code() != Some(code) {
        return Err(format!(
            "exit {:?}, wanted {code}; stderr: {}",
            out.status.code(),
            String::from_utf8_lossy(&out.stderr).trim()
        ));
    }
    if let Some(want) = stdout {
        let got = String::from_utf8_lossy(&out.stdout);
        if got != want {
            return Err(format!("stdout {got:?}, wanted {want:?}"));
        }
    }
    Ok(())
}

/// Every decode case with its outcome, run against the tool at `bin`.
pub fn decode_suite(bin: &str) -> Vec<(&'static str, Result<(), String>)> {
    let inputs = prepare();
    let cwd = tempfile::tempdir().unwrap();
    let cwd = cwd.path();
    let s = |p: &PathBuf| p.to_str().unwrap().to_string();
    let key = s(&inputs.key_file);
    let msg_line = format!("{MESSAGE}\n");
    let hex_line = format!(
        "{}\n",
        MESSAGE
            .as_bytes()
            .chunks(8)
            .map(|c| format!(
                "{:02x}",
                u8::from_str_radix(std::str::from_utf8(c).unwrap(), 2).unwrap()
            ))
            .collect::<String>()
    );
    let truncated = format!("{}\n", &MESSAGE[..MESSAGE.len() - 4]);

    let mut results = Vec::new();
    let mut case = |name, r| results.push((name, r));

    let out = decode(
        bin,
        cwd,
        None,
        &[
            "--key-file",
            &key,
            "--input",
            &s(&inputs.tokens),
            "--vocab-size",
            "4",
        ],
    );
    case("token file round trip", expect(&out, 0, Some(&msg_line)));
    case(
        "verdict on stderr",
        if String::from_utf8_lossy(&out.stderr).contains("H₁")
            || String::from_utf8_lossy(&out.stderr).contains("H₀")
        {
            Ok(())
        } else {
            Err(String::from_utf8_lossy(&out.stderr).into_owned())
        },
    );
    let out = decode(
        bin,
        cwd,
        None,
        &[
            "--key-file",
            &key,
            "--bits",
            &s(&inputs.token_bits),
            "--vocab-size",
            "4",
        ],
    );
    case("raw token bits", expect(&out, 0, Some(&msg_line)));
    let out = decode(
        bin,
        cwd,
        Some(&inputs.key_hex),
        &["--input", &s(&inputs.tokens), "--vocab-size", "4"],
    );
    case("key from environment", expect(&out, 0, Some(&msg_line)));
    let out = decode(
        bin,
        cwd,
        None,
        &[
            "--key-file",
            &key,
            "--input",
            &s(&inputs.tokens),
            "--vocab-size",
            "4",
            "--truncate-tail",
            "4",
        ],
    );
    case("truncate tail", expect(&out, 0, Some(&truncated)));
    let out = decode(
        bin,
        cwd,
        None,
        &[
            "--key-file",
            &key,
            "--input",
            &s(&inputs.tokens),
            "--vocab-size",
            "4",
            "--hex",
        ],
    );
    case("hex output", expect(&out, 0, Some(&hex_line)));
    let out = decode(
        bin,
        cwd,
        None,
        &[
            "--key-file",
            &key,
            "--input",
            &s(&inputs.framed_tokens),
            "--vocab-size",
            "4",
            "--frame",
            "length16",
        ],
    );
    case("length16 frame", expect(&out, 0, Some(&msg_line)));
    let out = decode(
        bin,
        cwd,
        None,
        &[
            "--key-file",
            &key,
            "--input",
            &s(&inputs.covertext),
            "--vocab-size",
            "4",
        ],
    );
    case(
        "covertext yields nothing",
        expect(&out, 0, Some("\n")).and_then(|_| {
            if String::from_utf8_lossy(&out.stderr).contains("H∅") {
                Ok(())
            } else {
                Err("verdict is not H∅".into())
            }
        }),
    );
    let out = decode(
        bin,
        cwd,
        None,
        &[
            "--key-file",
            &key,
            "--input",
            &s(&inputs.malformed),
            "--vocab-size",
            "4",
        ],
    );
    case("malformed token file", expect(&out, 2, None));
    let out = decode(
        bin,
        cwd,
        None,
        &[
            "--key-file",
            &key,
            "--input",
            &s(&inputs.out_of_range),
            "--vocab-size",
            "4",
        ],
    );
    case("token out of range", expect(&out, 2, None));
    let out = decode(
        bin,
        cwd,
        None,
        &["--key-file", &key, "--input", &s(&inputs.tokens)],
    );
    case("token file needs vocabulary size", expect(&out, 2, None));
    let out = decode(
        bin,
        cwd,
        None,
        &["--input", &s(&inputs.tokens), "--vocab-size", "4"],
    );
    case("missing key", expect(&out, 2, None));
    let out = decode(
        bin,
        cwd,
        None,
        &[
            "--key-file",
            &key,
            "--input",
            &s(&inputs.tokens),
            "--vocab-size",
            "4",
            "--provider",
            "fixed:balanced4",
        ],
    );
    case("provider flag rejected", expect(&out, 2, None));
    let leftover = std::fs::read_dir(cwd).unwrap().count();
    case(
        "nothing written to the working directory",
        if leftover == 0 {
            Ok(())
        } else {
            Err(format!("{leftover} entries"))
        },
    );
    results
}
