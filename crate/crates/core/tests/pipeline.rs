mod common;

use std::path::Path;

use profile_forge::corpus::Snapshot;
use profile_forge::graph::ProfileGraph;
use profile_forge::pipeline::{run_profile, slug, write_outputs, PipelineConfig};
use profile_forge::synth;

fn config() -> PipelineConfig {
    PipelineConfig::load(common::fixtures().join("config.toml")).unwrap()
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

#[test]
fn repeated_runs_are_byte_identical_and_match_goldens() {
    let config = config();
    let golden = common::fixtures().join("golden/graphs");
    for dir in common::snapshot_dirs() {
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let (ga, ma) = write_outputs(&run_profile(&config, &dir).unwrap(), a.path()).unwrap();
        let (gb, mb) = write_outputs(&run_profile(&config, &dir).unwrap(), b.path()).unwrap();
        assert_eq!(read(&ga), read(&gb));
        assert_eq!(read(&ma), read(&mb));
        let name = ga.file_name().unwrap();
        assert_eq!(read(&ga), read(&golden.join(name)), "{}", dir.display());
        assert_eq!(read(&ma), read(&golden.join(mb.file_name().unwrap())), "{}", dir.display());
    }
}

#[test]
fn golden_graphs_satisfy_invariants() {
    for dir in common::snapshot_dirs() {
        let snap = Snapshot::load(&dir).unwrap();
        let path = common::fixtures().join(format!("golden/graphs/{}.graph.json", slug(&snap.target.canonical_name)));
        let g = ProfileGraph::from_json(&read(&path)).unwrap();
        assert_eq!(g.target.name, snap.target.canonical_name);
        assert_eq!(g.nodes.len(), g.edges.len() + 1);
        let mentions: usize = g.edges.iter().map(|e| e.weight).sum();
        assert_eq!(g.target_node().weight, mentions);
    }
}

#[test]
fn hand_fixture_profile_contents() {
    let run = run_profile(&config(), &common::fixtures().join("snapshots/elena-marchetti")).unwrap();
    let g = &run.graph;
    let types_of = |name: &str| {
        let node = g.nodes.iter().find(|n| n.name == name).unwrap_or_else(|| panic!("no node {name}"));
        let edge = g.edges.iter().find(|e| e.target == node.id).unwrap();
        edge.types.iter().map(|t| t.as_str().to_string()).collect::<Vec<_>>()
    };
    assert_eq!(types_of("University of Zurich"), ["education"]);
    assert_eq!(types_of("Alpine Research Institute"), ["employment"]);
    assert_eq!(types_of("Marco Bellini"), ["publications"]);
    assert_eq!(types_of("Sofia Brandt"), ["publications"]);
    assert_eq!(run.manifest.counts.pages_relevant, 5);
    assert_eq!(g.nodes.len(), 11);
}

#[test]
fn missing_model_reports_failed_stage_with_partial_manifest() {
    let mut config = config();
    config.models.relations = "models/absent.json".into();
    let Err(err) = run_profile(&config, &common::fixtures().join("snapshots/elena-marchetti")) else { panic!("run succeeded") };
    assert_eq!(err.stage, "relations");
    assert_eq!(err.manifest.completed_stages, ["load", "relevance", "extraction"]);
}

#[test]
fn generated_snapshot_roundtrips_through_disk() {
    let dir = tempfile::tempdir().unwrap();
    let s = synth::scholar_snapshot(42);
    s.write(dir.path()).unwrap();
    let loaded = Snapshot::load(dir.path()).unwrap();
    let expected = s.to_snapshot();
    assert_eq!(loaded.target.canonical_name, s.target);
    assert_eq!(loaded.homepage_ids, expected.homepage_ids);
    assert_eq!(loaded.wikipedia_ids, expected.wikipedia_ids);
    assert_eq!(loaded.pages.len(), 10);
    for (a, b) in loaded.pages.iter().zip(&expected.pages) {
        assert_eq!((&a.page_id, &a.url, a.rank, &a.raw_html, a.label), (&b.page_id, &b.url, b.rank, &b.raw_html, b.label));
    }
}

#[test]
fn config_rejects_unknown_keys() {
    assert!(PipelineConfig::parse("seed = 1\nbogus = 2\n[models]\nrelevance = \"a\"\nrelations = \"b\"\n", ".").is_err());
}
