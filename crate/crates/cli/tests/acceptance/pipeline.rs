use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use talkpoints_cli::stages::sha256_hex;
use talkpoints_cli::{build_gateway, Filters, Pipeline};
use talkpoints_core::prompts;

use crate::fixtures::fixture_config;
use crate::{ensure, Check};

fn checksums(root: &Path) -> Result<BTreeMap<String, String>, String> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for e in fs::read_dir(&dir).map_err(|e| e.to_string())? {
            let p = e.map_err(|e| e.to_string())?.path();
            if p.is_dir() {
                if p.file_name().is_some_and(|n| n != "cache") {
                    stack.push(p);
                }
            } else {
                let bytes = fs::read(&p).map_err(|e| e.to_string())?;
                let rel = p.strip_prefix(root).map_err(|e| e.to_string())?.to_string_lossy().into_owned();
                out.insert(rel, sha256_hex(&bytes));
            }
        }
    }
    Ok(out)
}

fn run_binary(out: &Path) -> Result<(), String> {
    let config = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/pipeline.toml");
    let o = Command::new(env!("CARGO_BIN_EXE_talkpoints"))
        .args(["run", "all", "--backend", "mock", "--seed", "7", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(out)
        .output()
        .map_err(|e| e.to_string())?;
    ensure!(o.status.success(), "exit {}: {}", o.status, String::from_utf8_lossy(&o.stderr));
    Ok(())
}

pub fn determinism() -> Check {
    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    run_binary(a.path())?;
    run_binary(b.path())?;
    let (x, y) = (checksums(a.path())?, checksums(b.path())?);
    ensure!(x.len() > 15, "only {} artifacts", x.len());
    let keys: Vec<&String> = x.keys().collect();
    ensure!(keys == y.keys().collect::<Vec<_>>(), "artifact sets differ");
    let differing: Vec<&String> = x.iter().filter(|(k, v)| y[*k] != **v).map(|(k, _)| k).collect();
    ensure!(differing.is_empty(), "differing artifacts: {differing:?}");
    Ok(format!("{} artifacts byte-identical", x.len()))
}

pub fn placeholder_hygiene() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = fixture_config(dir.path());
    let gw = build_gateway(&cfg, true).map_err(|e| e.to_string())?;
    let p = Pipeline::with_gateway(cfg, Filters::default(), gw);
    p.run_all().map_err(|e| format!("{e:#}"))?;
    let recorded = p.gateway.take_prompts();
    let classify: Vec<_> = recorded.iter().filter(|r| r.template_id.starts_with("classify_viewpoints")).collect();
    ensure!(classify.len() > 100, "only {} classification prompts", classify.len());
    for r in &classify {
        for name in ["SUMMARY1", "SUMMARY2", "ARTICLE"] {
            let s = prompts::section(&r.rendered_prompt, name)
                .ok_or_else(|| format!("{} lacks {name}", r.template_id))?
                .to_lowercase();
            ensure!(!s.contains("left") && !s.contains("right"), "{} {name} names a side", r.template_id);
        }
    }
    Ok(format!("{} classification prompts scanned", classify.len()))
}
