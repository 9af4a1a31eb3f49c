use std::fs;

use padic_sssi::experiment::{run_scenario, ExperimentConfig, OutputFormat, Scenario};
use padic_sssi::export::{read_binary, Dump};

fn small(scenario: Scenario) -> ExperimentConfig {
    let mut cfg = ExperimentConfig {
        scenario: Some(scenario),
        seed: Some(9),
        ..Default::default()
    };
    match scenario {
        Scenario::Equivalence | Scenario::HeavyTail => {
            cfg.kmax = Some(10);
            cfg.horizon = Some(4096);
            cfg.seeds = Some(4);
            cfg.k_list = Some(vec![0, 2, 4]);
        }
        Scenario::IdentitySuite => cfg.seeds = Some(500),
        Scenario::FieldDemo => {
            cfg.side = Some(16);
            cfg.kmax = Some(6);
            cfg.reach = Some(8);
            cfg.seeds = Some(500);
            cfg.k_list = Some(vec![0, 1, 2, 3]);
        }
        Scenario::HierarchyDemo => {}
    }
    cfg
}

#[test]
fn every_scenario_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    for sc in Scenario::ALL {
        let mut cfg = small(sc);
        cfg.formats = Some(vec![OutputFormat::Json, OutputFormat::Csv, OutputFormat::Bin]);
        let resolved = cfg.resolve().unwrap();
        let a = dir.path().join(format!("{sc}-a"));
        let b = dir.path().join(format!("{sc}-b"));
        let wa = run_scenario(&resolved).unwrap().write(&a).unwrap();
        let wb = run_scenario(&resolved).unwrap().write(&b).unwrap();
        assert_eq!(wa.len(), wb.len());
        assert!(wa.iter().any(|p| p.extension().unwrap() == "csv"), "{sc}");
        for (x, y) in wa.iter().zip(&wb) {
            assert_eq!(x.file_name(), y.file_name());
            assert_eq!(fs::read(x).unwrap(), fs::read(y).unwrap(), "{sc}: {:?}", x.file_name());
        }
    }
}

#[test]
fn summary_embeds_resolved_config() {
    let resolved = small(Scenario::FieldDemo).resolve().unwrap();
    let outcome = run_scenario(&resolved).unwrap();
    let summary = outcome.summary();
    assert_eq!(summary["version"], padic_sssi::VERSION);
    let back: padic_sssi::experiment::ResolvedConfig = serde_json::from_value(summary["config"].clone()).unwrap();
    assert_eq!(back, resolved);
    assert!(outcome.all_checks_pass(), "{:?}", outcome.checks);
}

#[test]
fn field_dump_roundtrips() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(Scenario::FieldDemo);
    cfg.formats = Some(vec![OutputFormat::Bin]);
    let resolved = cfg.resolve().unwrap();
    let written = run_scenario(&resolved).unwrap().write(dir.path()).unwrap();
    assert_eq!(written.len(), 1);
    match read_binary(fs::File::open(&written[0]).unwrap()).unwrap() {
        Dump::Field(f) => {
            assert_eq!((f.dim(), f.side), (2, 16));
            assert_eq!(f.values[0], 0.0);
        }
        other => panic!("unexpected dump {other:?}"),
    }
}

#[test]
fn heavy_tail_records_substitution() {
    let resolved = small(Scenario::HeavyTail).resolve().unwrap();
    let outcome = run_scenario(&resolved).unwrap();
    assert!(outcome.notes.iter().any(|n| n.contains("proxy alpha = 1.25")));
    assert_eq!(outcome.results["choice"]["substituted"], true);
    let csv = String::from_utf8(outcome.tables[0].to_csv().unwrap()).unwrap();
    assert!(csv.starts_with("seed_index,K,tau,weyl_tail_bound,weyl_headline,besicovitch_headline,omega\n"));
    assert_eq!(csv.lines().count(), 1 + 4 * 3);
}

#[test]
fn equivalence_compares_two_laws() {
    let resolved = small(Scenario::Equivalence).resolve().unwrap();
    let outcome = run_scenario(&resolved).unwrap();
    let csv = String::from_utf8(outcome.tables[0].to_csv().unwrap()).unwrap();
    assert!(csv.lines().any(|l| l.starts_with("base,")));
    assert!(csv.lines().any(|l| l.starts_with("pareto,")));
    assert!(outcome.checks.iter().any(|c| c.name == "bohr-gap-within-stride" && c.passed));
}

#[test]
fn unmatched_sublattice_tracks_truncation() {
    use padic_sssi::identity::{sublattice_law_test, Truncation};
    use padic_sssi::tree::truncation_tail_bound;
    use padic_sssi::{IncrementLaw, TreeSpec};
    // with many levels the unmatched discrepancy is below the tail bound and the test passes too
    let spec = TreeSpec::new(2, 0.7, 16, IncrementLaw::Gaussian { sigma: 1.0 }, 3).unwrap();
    assert!(truncation_tail_bound(&spec).unwrap() < 2e-3);
    let m = sublattice_law_test(&spec, 1, 2, 3, 4000, Truncation::Matched).unwrap();
    let u = sublattice_law_test(&spec, 1, 2, 3, 4000, Truncation::Unmatched).unwrap();
    assert!(m.passed && u.passed);
    // with a shallow tree the unmatched mode sees the extra levels
    let shallow = TreeSpec::new(2, 0.3, 2, IncrementLaw::Rademacher, 3).unwrap();
    let u = sublattice_law_test(&shallow, 0, 2, 1, 4000, Truncation::Unmatched).unwrap();
    let m = sublattice_law_test(&shallow, 0, 2, 1, 4000, Truncation::Matched).unwrap();
    assert!(!u.passed);
    assert!(m.passed);
}
