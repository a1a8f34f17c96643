//! Run artifacts: the manifest with content hashes, CSV emitters, and
//! gnuplot scripts. Output bytes are deterministic for a fixed config and
//! seed; only the manifest carries a timestamp.

use crate::config::RunConfig;
use crate::error::Result;
use crate::verify::EstimateReport;
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::path::PathBuf;

#[derive(Serialize)]
pub struct ArtifactEntry {
    pub name: String,
    pub sha256: String,
}

#[derive(Serialize)]
pub struct Manifest {
    pub command: String,
    pub config: RunConfig,
    pub artifacts: Vec<ArtifactEntry>,
    pub unix_timestamp: u64,
}

pub struct RunWriter {
    pub dir: PathBuf,
    pub config: RunConfig,
    artifacts: Vec<ArtifactEntry>,
}

impl RunWriter {
    pub fn new(config: &RunConfig) -> Result<RunWriter> {
        let dir = PathBuf::from(&config.out);
        std::fs::create_dir_all(&dir)?;
        Ok(RunWriter { dir, config: config.clone(), artifacts: Vec::new() })
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.dir.join(name);
        std::fs::write(&path, bytes)?;
        let mut hasher = Sha256::new();
        hasher.update(bytes);
        let digest = hasher.finalize();
        self.artifacts.push(ArtifactEntry {
            name: name.to_string(),
            sha256: format!("{digest:x}"),
        });
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf> {
        let text = serde_json::to_string_pretty(value)
            .map_err(|e| crate::error::Error::Parse(e.to_string()))?;
        self.write(name, text.as_bytes())
    }

    /// Ladder CSV: R, lhs, rhs, ratio, seed.
    pub fn write_ladder_csv(&mut self, name: &str, reports: &[EstimateReport]) -> Result<PathBuf> {
        let mut out = String::from("R,lhs,rhs,ratio,seed\n");
        for r in reports {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.r,
                r.lhs,
                r.rhs,
                r.ratio,
                r.seed.map(|s| s.to_string()).unwrap_or_default()
            ));
        }
        self.write(name, out.as_bytes())
    }

    /// A log-log ratio plot script for a ladder CSV.
    pub fn write_plot_script(&mut self, name: &str, csv: &str, title: &str) -> Result<PathBuf> {
        let text = format!(
            "set datafile separator ','\n\
             set logscale xy 2\n\
             set xlabel 'R'\n\
             set ylabel 'ratio'\n\
             set title '{title}'\n\
             set key off\n\
             set term pngcairo size 800,600\n\
             set output '{title}.png'\n\
             plot '{csv}' using 1:4 skip 1 with linespoints\n"
        );
        self.write(name, text.as_bytes())
    }

    /// Finalize: write the manifest listing every artifact with its hash.
    pub fn finish(mut self, command: &str) -> Result<PathBuf> {
        let manifest = Manifest {
            command: command.to_string(),
            config: self.config.clone(),
            artifacts: std::mem::take(&mut self.artifacts),
            unix_timestamp: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        };
        let text = serde_json::to_string_pretty(&manifest)
            .map_err(|e| crate::error::Error::Parse(e.to_string()))?;
        let path = self.dir.join("manifest.json");
        std::fs::write(&path, text)?;
        Ok(path)
    }
}

/// CSV schema shared by the decomposition and family dumps:
/// id, per-tuple scales and signs, then axis bounds.
pub fn hollow_csv(d: &crate::hollow::HollowDecomposition) -> String {
    let nm1 = d.n - 1;
    let mut head = String::from("tuple_id");
    for i in 1..=nm1 {
        head.push_str(&format!(",delta_{i}"));
    }
    for i in 1..=nm1 {
        head.push_str(&format!(",nu_{i}"));
    }
    for i in 1..=nm1 {
        head.push_str(&format!(",axis_{i}_lo,axis_{i}_hi"));
    }
    head.push('\n');
    let mut out = head;
    for (id, piece) in d.pieces.iter().enumerate() {
        let mut line = format!("{id}");
        for dl in &piece.tuple.deltas {
            line.push_str(&format!(",{}", dl.value()));
        }
        for nu in &piece.tuple.nus {
            line.push_str(&format!(",{nu}"));
        }
        for iv in &piece.intervals {
            line.push_str(&format!(",{},{}", iv.lo.value(), iv.hi.value()));
        }
        line.push('\n');
        out.push_str(&line);
    }
    out
}

/// Block family dump: block_id, t_theta, per-axis caps.
pub fn family_csv(fam: &crate::cover::BlockFamily) -> String {
    let n = fam.curve.dim;
    let mut out = String::from("block_id,t_theta,sign");
    for i in 1..=n {
        out.push_str(&format!(",cap_{i}"));
    }
    out.push('\n');
    for (id, b) in fam.blocks.iter().enumerate() {
        let mut line = format!("{id},{},{}", b.t_lo, b.sign);
        for c in &b.caps {
            line.push_str(&format!(",{c}"));
        }
        line.push('\n');
        out.push_str(&line);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scale::Scale;

    #[test]
    fn artifacts_are_hashed_and_listed() {
        let mut cfg = RunConfig::default();
        let dir = std::env::temp_dir().join("plancheck_report_test");
        let _ = std::fs::remove_dir_all(&dir);
        cfg.out = dir.to_string_lossy().into_owned();
        let mut w = RunWriter::new(&cfg).unwrap();
        w.write("a.csv", b"x,y\n1,2\n").unwrap();
        let manifest_path = w.finish("test").unwrap();
        let manifest: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(manifest_path).unwrap()).unwrap();
        let arts = manifest["artifacts"].as_array().unwrap();
        assert_eq!(arts.len(), 1);
        assert_eq!(arts[0]["name"], "a.csv");
        assert_eq!(arts[0]["sha256"].as_str().unwrap().len(), 64);
    }

    #[test]
    fn hollow_csv_is_deterministic() {
        let d = crate::hollow::hollow_decompose(3, Scale::pow2(10)).unwrap();
        let a = hollow_csv(&d);
        let b = hollow_csv(&crate::hollow::hollow_decompose(3, Scale::pow2(10)).unwrap());
        assert_eq!(a, b);
        assert!(a.starts_with("tuple_id,delta_1,delta_2,nu_1,nu_2,axis_1_lo"));
    }
}
