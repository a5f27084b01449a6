use std::fs;
use std::path::PathBuf;

use tempfile::TempDir;

use bpp_core::harness::{NetworkDataset, RankingDataset};
use bpp_core::ising::Graph;
use bpp_core::payments::{load_reports, Assignment};
use bpp_core::uniqueness::PaymentFunction;
use bpp_core::{Error, Signal};

fn file(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p
}

fn parse_line(e: Error) -> u64 {
    match e {
        Error::Parse { line, .. } => line,
        other => panic!("expected a parse error, got {other}"),
    }
}

#[test]
fn rankings_with_header_and_comments() {
    let dir = TempDir::new().unwrap();
    let p = file(&dir, "r.csv", "agent,i0,i1,i2\n# first voter\n7,2,0,1\n9,0,1,2\n");
    let ds = RankingDataset::load(&p).unwrap();
    assert_eq!(ds.agents(), &[7, 9]);
    assert_eq!(ds.n_items(), 3);
    assert_eq!(ds.rankings()[0].compare(2, 1), Signal::Pos);
    // round trip
    let again = file(&dir, "again.csv", &ds.to_csv());
    assert_eq!(RankingDataset::load(&again).unwrap(), ds);
}

#[test]
fn ranking_errors_carry_line_numbers() {
    let dir = TempDir::new().unwrap();
    let p = file(&dir, "dup.csv", "0,0,1,2\n1,0,1,1\n");
    let e = RankingDataset::load(&p).unwrap_err();
    assert!(e.to_string().contains("item 1 repeated"), "{e}");
    assert_eq!(parse_line(e), 2);
    let p = file(&dir, "ragged.csv", "0,0,1,2\n1,0,1\n");
    assert_eq!(parse_line(RankingDataset::load(&p).unwrap_err()), 2);
    let p = file(&dir, "agents.csv", "0,0,1\n0,1,0\n");
    assert!(RankingDataset::load(&p).unwrap_err().is_validation());
}

#[test]
fn graph_loader() {
    let dir = TempDir::new().unwrap();
    let p = file(&dir, "g.csv", "u,v\n0,1\n1,0\n1,2\n");
    let g = Graph::load(&p, None).unwrap();
    assert_eq!(g.edges(), &[(0, 1), (1, 2)]);
    assert_eq!(Graph::load(&p, Some(5)).unwrap().n(), 5);
    let p = file(&dir, "loop.csv", "0,1\n2,2\n");
    assert!(Graph::load(&p, None).unwrap_err().is_validation());
    let missing = dir.path().join("nope.csv");
    assert!(!Graph::load(&missing, None).unwrap_err().is_validation());
}

#[test]
fn network_labels_encodings() {
    let dir = TempDir::new().unwrap();
    let g = file(&dir, "g.csv", "0,1\n1,2\n2,3\n");
    let l = file(&dir, "l.csv", "0,1\n1,0\n2,0\n3,1\n");
    let ds = NetworkDataset::load(&g, &l).unwrap();
    assert!(ds.labels_remapped);
    assert_eq!(ds.labels(), &[Signal::Pos, Signal::Neg, Signal::Neg, Signal::Pos]);
    assert_eq!(ds.prior(), 0.5);

    let mixed = file(&dir, "mixed.csv", "0,1\n1,0\n2,-1\n3,1\n");
    assert!(NetworkDataset::load(&g, &mixed).unwrap_err().is_validation());
    let gap = file(&dir, "gap.csv", "0,1\n1,-1\n3,1\n");
    assert!(NetworkDataset::load(&g, &gap).unwrap_err().to_string().contains("no label for node 2"));
}

#[test]
fn reports_assignment_and_payment_files() {
    let dir = TempDir::new().unwrap();
    let r = file(&dir, "r.csv", "agent_id,report\n0,-1\n1,1\n");
    let reports = load_reports(&r).unwrap();
    assert_eq!(reports[&0], Signal::Neg);
    let dup = file(&dir, "dup.csv", "0,1\n0,-1\n");
    assert_eq!(parse_line(load_reports(&dup).unwrap_err()), 2);

    let a = file(&dir, "a.csv", "0,0,1\n1,2,1\n");
    assert_eq!(Assignment::load(&a).unwrap().get(1), Some((2, 1)));

    let u = file(&dir, "u.csv", "# bpp\n0,2,-2,0,\n0,-2,2,0\n");
    assert_eq!(PaymentFunction::load(&u).unwrap(), PaymentFunction::bpp());
    let short = file(&dir, "short.csv", "0,2,-2\n");
    assert!(PaymentFunction::load(&short).unwrap_err().is_validation());
}
