//! Batch driver: `plancheck <command> --config <path> [--set key=value ...]
//! [--out <dir>]`. The `PLANCHECK_SEED` environment variable overrides the
//! configured seed.

use plancheck::config::{parse_config, RunConfig};
use plancheck::runner::{dispatch, EXIT_ERROR};

fn usage() -> ! {
    eprintln!(
        "usage: plancheck <command> [--config <path>] [--set key=value ...] [--out <dir>]\n\
         commands: frenet decompose overlap cover verify-we verify-cone verify-lp2\n\
         \x20         verify-kakeya verify-br verify-ls scaling extremal bghs mu-scan"
    );
    std::process::exit(EXIT_ERROR);
}

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let mut command: Option<String> = None;
    let mut config_path: Option<String> = None;
    let mut sets: Vec<(String, String)> = Vec::new();
    let mut out: Option<String> = None;
    let mut it = args.into_iter();
    while let Some(arg) = it.next() {
        match arg.as_str() {
            "--config" => config_path = it.next(),
            "--out" => out = it.next(),
            "--set" => {
                let Some(kv) = it.next() else { usage() };
                let Some((k, v)) = kv.split_once('=') else {
                    eprintln!("--set expects key=value, got `{kv}`");
                    std::process::exit(EXIT_ERROR);
                };
                sets.push((k.trim().to_string(), v.trim().to_string()));
            }
            "--help" | "-h" => usage(),
            other if command.is_none() && !other.starts_with('-') => {
                command = Some(other.to_string());
            }
            other => {
                eprintln!("unexpected argument `{other}`");
                usage();
            }
        }
    }

    let mut cfg: RunConfig = match config_path {
        Some(path) => match std::fs::read_to_string(&path) {
            Ok(text) => match parse_config(&text) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("config error: {e}");
                    std::process::exit(EXIT_ERROR);
                }
            },
            Err(e) => {
                eprintln!("cannot read config `{path}`: {e}");
                std::process::exit(EXIT_ERROR);
            }
        },
        None => RunConfig::default(),
    };
    if let Some(cmd) = command {
        cfg.command = cmd;
    }
    for (k, v) in sets {
        if let Err(e) = cfg.set(&k, &v) {
            eprintln!("--set error: {e}");
            std::process::exit(EXIT_ERROR);
        }
    }
    if let Some(dir) = out {
        cfg.out = dir;
    }
    if let Ok(seed) = std::env::var("PLANCHECK_SEED") {
        if let Err(e) = cfg.set("seed", &seed) {
            eprintln!("PLANCHECK_SEED error: {e}");
            std::process::exit(EXIT_ERROR);
        }
    }
    if cfg.command.is_empty() {
        usage();
    }

    match dispatch(&cfg) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(EXIT_ERROR);
        }
    }
}
