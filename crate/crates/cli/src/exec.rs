//! Stance provider backed by an external process.
//!
//! The command reads one JSON object `{"source": .., "response": ..}` per line
//! on standard input and answers each with one line
//! `{"support": p, "oppose": p, "neutral": p}` on standard output, in order.

use std::io::{BufRead, BufReader, Write};
use std::process::{Command, Stdio};

use anyhow::{anyhow, bail, Context};
use serde::Deserialize;

use stancegraph::stance::{StanceQuery, StanceScore, TableProvider};

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Reply {
    support: f64,
    oppose: f64,
    neutral: f64,
}

pub fn exec_scores(command: &str, queries: &[StanceQuery]) -> anyhow::Result<Vec<StanceScore>> {
    let mut child = Command::new("sh")
        .arg("-c")
        .arg(command)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::inherit())
        .spawn()
        .with_context(|| format!("starting stance provider `{command}`"))?;
    let mut stdin = child.stdin.take().expect("piped stdin");
    let lines: Vec<String> =
        queries.iter().map(|q| serde_json::json!({ "source": q.source, "response": q.response }).to_string()).collect();
    // feed input concurrently so a provider that answers as it reads cannot deadlock
    let writer = std::thread::spawn(move || -> std::io::Result<()> {
        let mut w = std::io::BufWriter::new(&mut stdin);
        for l in lines {
            writeln!(w, "{l}")?;
        }
        w.flush()
    });
    let stdout = child.stdout.take().expect("piped stdout");
    let mut scores = Vec::with_capacity(queries.len());
    for (i, line) in BufReader::new(stdout).lines().enumerate() {
        let line = line.context("reading stance provider output")?;
        if scores.len() == queries.len() {
            bail!("stance provider produced more than {} answers", queries.len());
        }
        let r: Reply = serde_json::from_str(&line).with_context(|| format!("stance provider answer {}", i + 1))?;
        let s = StanceScore::new(r.support, r.oppose, r.neutral)
            .map_err(|e| anyhow!("stance provider answer {}: {e}", i + 1))?;
        scores.push(s);
    }
    let write_result = writer.join().map_err(|_| anyhow!("stance provider writer panicked"))?;
    let status = child.wait().context("waiting for stance provider")?;
    if !status.success() {
        bail!("stance provider exited with {status}");
    }
    write_result.context("writing to stance provider")?;
    if scores.len() != queries.len() {
        bail!("stance provider answered {} of {} queries", scores.len(), queries.len());
    }
    Ok(scores)
}

/// Ask the process about every query and serve the answers as a provider.
pub fn exec_provider(command: &str, queries: &[StanceQuery]) -> anyhow::Result<TableProvider> {
    let scores = exec_scores(command, queries)?;
    let mut table = TableProvider::new();
    for (q, s) in queries.iter().zip(scores) {
        table.insert(q.source.clone(), q.response.clone(), s);
    }
    Ok(table)
}
