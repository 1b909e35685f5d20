//! Acceptance checks, one PASS/FAIL line per criterion. Runs without the
//! libtest harness so the lines print in order; exits non-zero on any FAIL.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use profile_forge::corpus::{Label, Snapshot};
use profile_forge::extraction::{novelty_analysis, EntityMention, EntityType, GazetteerTagger, NoveltyCounts, SourceKind};
use profile_forge::features::{FeatureVector, SchemaConfig, BODY_NAME_COUNT};
use profile_forge::graph::{
    apply_filter, build_graph, edge_id, node_id, temporal_bucket, GraphFilter, GraphNode, GraphTarget, MergedGraph,
    ProfileGraph, RelationEdge, TypedMention, FORMAT_VERSION,
};
use profile_forge::learners::{
    cross_validate, information_gain_ranking, logistic_loss_and_gradient, stratified_folds, Bootstrap, Dataset,
    EvalReport, LearnerSpec,
};
use profile_forge::pipeline::{harvest_mentions, run_profile, write_outputs, PipelineConfig};
use profile_forge::relations::{
    balanced_dataset, build_relation_schema, cross_validate_relations, distant_label, CvDocument, RelationScheme,
    RelationType,
};
use profile_forge::relevance::{classify_pages, self_train_scale_up, train_relevance};
use profile_forge::rng::SplitMix64;
use profile_forge::service::{handle, ProfileStore};
use profile_forge::synth::{self, RelevanceCorpusSpec};
use profile_forge::text::StopWords;

type Check = Result<String, String>;

/// Number, name, time limit, check.
type Criterion = (u8, &'static str, Duration, fn() -> Check);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok { Ok(()) } else { Err(msg()) }
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

// ---------------------------------------------------------------- learners

fn brute_entropy(labels: &[usize]) -> f64 {
    let mut counts = BTreeMap::new();
    for &l in labels {
        *counts.entry(l).or_insert(0usize) += 1;
    }
    let n = labels.len() as f64;
    counts.values().map(|&c| c as f64 / n).map(|p| -p * p.log2()).sum()
}

fn dataset(rows: &[Vec<f64>], labels: &[usize], n_classes: usize) -> Dataset {
    let names: Vec<String> = (0..rows[0].len()).map(|j| format!("f{j}")).collect();
    let label_names: Vec<String> = (0..n_classes).map(|c| format!("c{c}")).collect();
    let mut d = Dataset::new(names.clone(), label_names);
    for (row, &y) in rows.iter().zip(labels) {
        let fv: FeatureVector = names.iter().cloned().zip(row.iter().copied()).collect();
        d.push_index(fv, y);
    }
    d
}

fn learner_oracles() -> Check {
    let mut rng = SplitMix64::new(2024);

    // Information gain on 8-row binary tables.
    for _ in 0..300 {
        let n_classes = 2 + rng.below(2);
        let rows: Vec<Vec<f64>> = (0..8).map(|_| (0..3).map(|_| rng.below(2) as f64).collect()).collect();
        let labels: Vec<usize> = (0..8).map(|_| rng.below(n_classes)).collect();
        let ranking: BTreeMap<String, f64> =
            information_gain_ranking(&dataset(&rows, &labels, n_classes)).map_err(|e| e.to_string())?.into_iter().collect();
        let h = brute_entropy(&labels);
        for j in 0..3 {
            let mut cond = 0.0;
            for v in [0.0, 1.0] {
                let part: Vec<usize> = (0..8).filter(|&i| rows[i][j] == v).map(|i| labels[i]).collect();
                if !part.is_empty() {
                    cond += part.len() as f64 / 8.0 * brute_entropy(&part);
                }
            }
            let got = ranking[&format!("f{j}")];
            ensure(close(got, h - cond, 1e-9), || format!("info gain f{j}: {got} vs {}", h - cond))?;
        }
    }

    // Multinomial naive Bayes posteriors by direct products.
    for _ in 0..200 {
        let (n, width, k) = (6 + rng.below(5), 2 + rng.below(3), 2);
        let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..width).map(|_| rng.below(4) as f64).collect()).collect();
        let mut labels: Vec<usize> = (0..n).map(|_| rng.below(k)).collect();
        labels[0] = 0;
        labels[1] = 1;
        let model = LearnerSpec::NaiveBayes.fit(&dataset(&rows, &labels, k), 0).map_err(|e| e.to_string())?;
        let query: Vec<f64> = (0..width).map(|_| rng.below(3) as f64).collect();
        let mut joint = Vec::new();
        for c in 0..k {
            let members: Vec<&Vec<f64>> = rows.iter().zip(&labels).filter(|(_, &y)| y == c).map(|(r, _)| r).collect();
            let prior = members.len() as f64 / n as f64;
            let totals: Vec<f64> = (0..width).map(|j| members.iter().map(|r| r[j]).sum()).collect();
            let denom: f64 = totals.iter().sum::<f64>() + width as f64;
            let mut p = prior;
            for j in 0..width {
                p *= ((totals[j] + 1.0) / denom).powf(query[j]);
            }
            joint.push(p);
        }
        let z: f64 = joint.iter().sum();
        let fv: FeatureVector = (0..width).map(|j| (format!("f{j}"), query[j])).collect();
        let got = model.proba(&fv);
        for c in 0..k {
            ensure(close(got[c], joint[c] / z, 1e-9), || format!("naive Bayes posterior {} vs {}", got[c], joint[c] / z))?;
        }
    }

    // Logistic gradient against central differences.
    for _ in 0..100 {
        let (n, width) = (5 + rng.below(10), 1 + rng.below(5));
        let x: Vec<Vec<f64>> = (0..n).map(|_| (0..width).map(|_| rng.next_f64() * 4.0 - 2.0).collect()).collect();
        let t: Vec<f64> = (0..n).map(|_| rng.below(2) as f64).collect();
        let w: Vec<f64> = (0..width).map(|_| rng.next_f64() * 2.0 - 1.0).collect();
        let (b, l2, h) = (rng.next_f64() - 0.5, 0.01, 1e-6);
        let (_, grad, grad_b) = logistic_loss_and_gradient(&x, &t, &w, b, l2);
        let rel = |analytic: f64, numeric: f64| (analytic - numeric).abs() / numeric.abs().max(1e-6);
        for j in 0..width {
            let (mut up, mut down) = (w.clone(), w.clone());
            up[j] += h;
            down[j] -= h;
            let fd = (logistic_loss_and_gradient(&x, &t, &up, b, l2).0 - logistic_loss_and_gradient(&x, &t, &down, b, l2).0) / (2.0 * h);
            ensure(rel(grad[j], fd) <= 1e-4, || format!("logistic dw[{j}] {} vs {fd}", grad[j]))?;
        }
        let fd_b = (logistic_loss_and_gradient(&x, &t, &w, b + h, l2).0 - logistic_loss_and_gradient(&x, &t, &w, b - h, l2).0) / (2.0 * h);
        ensure(rel(grad_b, fd_b) <= 1e-4, || format!("logistic db {grad_b} vs {fd_b}"))?;
    }

    // kNN against sorting every training point by distance.
    for _ in 0..300 {
        let n = 3 + rng.below(8);
        let k = 1 + rng.below(n.min(5));
        let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..2).map(|_| rng.below(5) as f64).collect()).collect();
        let labels: Vec<usize> = (0..n).map(|i| if i < 2 { i } else { rng.below(2) }).collect();
        let model = LearnerSpec::KNearest { k }.fit(&dataset(&rows, &labels, 2), 0).map_err(|e| e.to_string())?;
        let q = [rng.below(5) as f64, rng.below(5) as f64];
        let mut order: Vec<(f64, usize)> =
            rows.iter().enumerate().map(|(i, r)| ((r[0] - q[0]).powi(2) + (r[1] - q[1]).powi(2), i)).collect();
        order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut votes = [0.0; 2];
        for &(_, i) in &order[..k] {
            votes[labels[i]] += 1.0 / k as f64;
        }
        let fv: FeatureVector = [("f0", q[0]), ("f1", q[1])].into_iter().collect();
        let got = model.proba(&fv);
        ensure(close(got[0], votes[0], 1e-12) && close(got[1], votes[1], 1e-12), || format!("kNN votes {got:?} vs {votes:?}"))?;
    }

    // Bagging over identity samples reproduces its base learner.
    for base in [LearnerSpec::DecisionTree { max_depth: 5, min_leaf: 1 }, LearnerSpec::NaiveBayes, LearnerSpec::logistic_regression(), LearnerSpec::KNearest { k: 3 }] {
        let rows: Vec<Vec<f64>> = (0..20).map(|_| (0..3).map(|_| rng.below(4) as f64).collect()).collect();
        let labels: Vec<usize> = rows.iter().map(|r| usize::from(r[0] + rng.below(2) as f64 > 2.0)).collect();
        let data = dataset(&rows, &labels, 2);
        let single = base.fit(&data, 5).map_err(|e| e.to_string())?;
        let bagged = LearnerSpec::Bagging { n_estimators: 7, base: Box::new(base.clone()) }
            .fit_with(&data, 5, Bootstrap::Identity)
            .map_err(|e| e.to_string())?;
        for _ in 0..50 {
            let fv: FeatureVector = (0..3).map(|j| (format!("f{j}"), rng.below(4) as f64)).collect();
            ensure(single.predict(&fv) == bagged.predict(&fv), || format!("identity bagging differs from {base:?}"))?;
        }
    }
    Ok("info gain, NB, LR gradient, kNN, identity bagging".into())
}

fn cv_laws() -> Check {
    let mut rng = SplitMix64::new(5);
    let label_sets: Vec<Vec<usize>> = vec![
        (0..100).map(|i| usize::from(i >= 50)).collect(),
        (0..100).map(|i| if i < 60 { 0 } else if i < 87 { 1 } else { 2 }).collect(),
        (0..100).map(|_| rng.below(4)).collect(),
    ];
    for labels in &label_sets {
        let n_classes = labels.iter().max().unwrap() + 1;
        for k in [2, 5, 10] {
            for seed in 0..5 {
                let folds = stratified_folds(labels, k, seed).map_err(|e| e.to_string())?;
                let mut seen = vec![0usize; labels.len()];
                for f in &folds {
                    for &i in f {
                        seen[i] += 1;
                    }
                }
                ensure(seen.iter().all(|&c| c == 1), || format!("k={k}: folds not a partition"))?;
                let sizes: Vec<usize> = folds.iter().map(Vec::len).collect();
                ensure(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1, || format!("k={k}: sizes {sizes:?}"))?;
                for c in 0..n_classes {
                    let per: Vec<usize> = folds.iter().map(|f| f.iter().filter(|&&i| labels[i] == c).count()).collect();
                    ensure(per.iter().max().unwrap() - per.iter().min().unwrap() <= 1, || format!("k={k} class {c}: {per:?}"))?;
                }
            }
        }
    }
    Ok("folds 2/5/10 over 100 rows".into())
}

// ---------------------------------------------------------------- relevance

fn relevance_data(snaps: &[Snapshot]) -> Result<Dataset, String> {
    let schema = train_relevance(snaps, &LearnerSpec::NaiveBayes, 0, SchemaConfig::default()).map_err(|e| e.to_string())?.schema;
    profile_forge::relevance::labeled_dataset(snaps, &schema).map_err(|e| e.to_string())
}

fn relevance_cv() -> Check {
    let snaps: Vec<Snapshot> = synth::relevance_corpus(RelevanceCorpusSpec::default()).iter().map(|s| s.to_snapshot()).collect();
    let data = relevance_data(&snaps)?;
    ensure(data.len() == 60, || format!("{} pages", data.len()))?;
    let mut parts = Vec::new();
    for (name, spec, min) in [
        ("bagging", LearnerSpec::bagging(), 0.95),
        ("logistic", LearnerSpec::logistic_regression(), 0.90),
        ("tree", LearnerSpec::decision_tree(), 0.90),
    ] {
        let f1 = cross_validate(&data, 10, &spec, 1).map_err(|e| e.to_string())?.macro_f1;
        ensure(f1 >= min, || format!("{name} macro F1 {f1:.4} < {min}"))?;
        parts.push(format!("{name} F1={f1:.3}"));
    }
    let ranking = information_gain_ranking(&data).map_err(|e| e.to_string())?;
    let pos = ranking.iter().position(|(n, _)| n == BODY_NAME_COUNT);
    ensure(pos.is_some_and(|p| p < 3), || format!("{BODY_NAME_COUNT} ranked {pos:?}"))?;
    parts.push(format!("{BODY_NAME_COUNT} rank {}", pos.unwrap() + 1));
    Ok(parts.join(", "))
}

fn held_out_f1(model: &profile_forge::relevance::RelevanceModel, snaps: &[Snapshot]) -> Result<f64, String> {
    let (mut actual, mut predicted) = (Vec::new(), Vec::new());
    for s in snaps {
        for v in classify_pages(model, s).map_err(|e| e.to_string())? {
            let truth = s.pages.iter().find(|p| p.page_id == v.page_id).and_then(|p| p.label).unwrap();
            actual.push(usize::from(truth == Label::Irrelevant));
            predicted.push(usize::from(v.label == Label::Irrelevant));
        }
    }
    let labels = ["relevant".to_string(), "irrelevant".to_string()];
    Ok(EvalReport::from_predictions(&labels, &actual, &predicted).macro_f1)
}

fn self_training() -> Check {
    let gen = |entities, seed| -> Vec<Snapshot> {
        synth::relevance_corpus(RelevanceCorpusSpec { entities, seed, ..Default::default() }).iter().map(|s| s.to_snapshot()).collect()
    };
    let labeled = gen(3, 101);
    let unlabeled: Vec<Snapshot> = synth::relevance_corpus(RelevanceCorpusSpec { entities: 6, seed: 202, ..Default::default() })
        .iter()
        .map(|s| s.unlabeled().to_snapshot())
        .collect();
    let held_out = gen(6, 303);
    let spec = LearnerSpec::bagging();
    let seed_model = train_relevance(&labeled, &spec, 7, SchemaConfig::default()).map_err(|e| e.to_string())?;
    let (scaled, report) = self_train_scale_up(&seed_model, &labeled, &unlabeled, &spec, 7, 0.0).map_err(|e| e.to_string())?;
    let auto = report.assigned_relevant + report.assigned_irrelevant;
    ensure(auto == 60, || format!("{auto} pages auto-labeled"))?;
    let (before, after) = (held_out_f1(&seed_model, &held_out)?, held_out_f1(&scaled, &held_out)?);
    ensure(after >= before - 0.02, || format!("held-out F1 dropped {before:.4} -> {after:.4}"))?;
    Ok(format!("30 seed + {auto} auto-labeled, held-out F1 {before:.3} -> {after:.3}"))
}

// ---------------------------------------------------------------- extraction

fn counts_ordered(c: &NoveltyCounts) -> bool {
    c.not_on_homepage_but_on_wikipedia <= c.not_on_homepage && c.not_on_homepage <= c.total_entities
}

fn novelty() -> Check {
    let fx = common::fixtures();
    let config = PipelineConfig::load(fx.join("config.toml")).map_err(|e| e.to_string())?;
    let tagger = config.tagger().map_err(|e| format!("{e:?}"))?;
    let snap = Snapshot::load(fx.join("snapshots/elena-marchetti")).map_err(|e| e.to_string())?;
    let relevant: Vec<&str> =
        snap.pages.iter().filter(|p| p.label == Some(Label::Relevant)).map(|p| p.page_id.as_str()).collect();
    let report = novelty_analysis(&harvest_mentions(&snap, relevant, &tagger), &snap.homepage_ids, &snap.wikipedia_ids);
    let o = &report.overall;
    ensure((o.total_entities, o.not_on_homepage, o.not_on_homepage_but_on_wikipedia) == (10, 7, 3), || {
        format!("fixture #E={} #NH={} #NHW={}", o.total_entities, o.not_on_homepage, o.not_on_homepage_but_on_wikipedia)
    })?;

    let tagger = GazetteerTagger::parse_tsv(&synth::scholar_gazetteer(), "generated").map_err(|e| e.to_string())?;
    let mut rng = SplitMix64::new(77);
    for i in 0..1000 {
        let mut s = synth::scholar_snapshot(i).to_snapshot();
        let ids: Vec<String> = s.pages.iter().map(|p| p.page_id.clone()).collect();
        let pick = |rng: &mut SplitMix64| -> BTreeSet<String> { ids.iter().filter(|_| rng.below(3) == 0).cloned().collect() };
        let pages = pick(&mut rng);
        s.homepage_ids = pick(&mut rng);
        s.wikipedia_ids = pick(&mut rng);
        let mentions = harvest_mentions(&s, pages.iter().map(String::as_str), &tagger);
        let r = novelty_analysis(&mentions, &s.homepage_ids, &s.wikipedia_ids);
        ensure(counts_ordered(&r.overall) && r.per_type.values().all(counts_ordered), || format!("generation {i}: {:?}", r.overall))?;
        let per_type_total: usize = r.per_type.values().map(|c| c.total_entities).sum();
        ensure(per_type_total == r.overall.total_entities, || format!("generation {i}: per-type totals"))?;
    }
    Ok("fixture 10/7/3, ordering over 1000 generations".into())
}

fn distant_supervision() -> Check {
    let fx = common::fixtures();
    let config = PipelineConfig::load(fx.join("config.toml")).map_err(|e| e.to_string())?;
    let tagger = config.tagger().map_err(|e| format!("{e:?}"))?;
    let snap = Snapshot::load(fx.join("snapshots/elena-marchetti")).map_err(|e| e.to_string())?;
    let cv = CvDocument::load(fx.join("snapshots/elena-marchetti/cv.json")).map_err(|e| e.to_string())?;
    let relevant: Vec<&str> =
        snap.pages.iter().filter(|p| p.label == Some(Label::Relevant)).map(|p| p.page_id.as_str()).collect();
    let mentions = harvest_mentions(&snap, relevant, &tagger);
    let scheme = RelationScheme::scholar();
    let labels = distant_label(&cv, &mentions, &scheme);
    let label_of = |name: &str| -> BTreeSet<String> {
        labels.iter().filter(|(m, _)| m.entity.name() == name).map(|(_, r)| r.as_str().to_string()).collect()
    };
    ensure(label_of("University of Zurich") == BTreeSet::from(["education".into()]), || {
        format!("University of Zurich -> {:?}", label_of("University of Zurich"))
    })?;
    ensure(label_of("Marco Bellini") == BTreeSet::from(["publications".into()]), || {
        format!("Marco Bellini -> {:?}", label_of("Marco Bellini"))
    })?;

    let instances = synth::relation_instances(9, 40);
    let schema = build_relation_schema(instances.iter().map(|i| &i.context));
    let mut rng = SplitMix64::new(3);
    for ty in scheme.trained_types() {
        let data = balanced_dataset(&instances, ty, &schema, &mut rng).map_err(|e| e.to_string())?;
        let counts = data.class_counts();
        ensure(counts[0] == counts[1], || format!("{ty}: {counts:?} not balanced"))?;
    }
    let reports = cross_validate_relations(&instances, &scheme, &LearnerSpec::logistic_regression(), 10, 4).map_err(|e| e.to_string())?;
    let mut parts = Vec::new();
    for (ty, r) in &reports {
        let f1 = r.class("positive").map_or(0.0, |c| c.f1);
        ensure(f1 >= 0.95, || format!("{ty}: F1 {f1:.4}"))?;
        parts.push(format!("{ty} {f1:.3}"));
    }
    Ok(format!("fixture labels ok; per-type F1 {}", parts.join(", ")))
}

// ---------------------------------------------------------------- graph

fn random_graph(rng: &mut SplitMix64) -> Result<(ProfileGraph, usize), String> {
    let names = ["Ada Lang", "Ben Roy", "Acme Corp", "Oslo", "Cara Dunn", "Institute of Things", "Lyon"];
    let types = [EntityType::Person, EntityType::Person, EntityType::Organization, EntityType::Location, EntityType::Person, EntityType::Organization, EntityType::Location];
    let relations = ["education", "employment", "publications", "other"];
    let n = 1 + rng.below(30);
    let mut mentions = Vec::new();
    for i in 0..n {
        let e = rng.below(names.len());
        let entity = profile_forge::extraction::EntityRef::new(names[e].split(' ').map(String::from).collect(), types[e]).map_err(|e| e.to_string())?;
        let mut rel = BTreeSet::from([RelationType::new(relations[rng.below(4)])]);
        if rng.below(4) == 0 {
            rel.insert(RelationType::new(relations[rng.below(4)]));
        }
        mentions.push(TypedMention {
            mention: EntityMention {
                entity,
                page_id: format!("p{}", rng.below(5)),
                span: (i * 10, i * 10 + 2),
                context_before: vec!["met".into()],
                context_after: vec!["in".into(), "town".into()],
                source_kind: if rng.below(3) == 0 { SourceKind::Homepage } else { SourceKind::OtherRelevant },
                years: (0..rng.below(3)).map(|_| 1995 + rng.below(30) as i32).collect(),
            },
            types: rel,
        });
    }
    let other = RelationType::new("other");
    let g = build_graph("Zed Target", &mentions, Some(&other), &StopWords::default()).map_err(|e| e.to_string())?;
    Ok((g, n))
}

fn random_filter(rng: &mut SplitMix64) -> GraphFilter {
    let mut f = GraphFilter::default();
    if rng.below(2) == 0 {
        let all = ["education", "employment", "publications", "other"];
        f.relation_types = Some(all.iter().filter(|_| rng.below(2) == 0).map(|r| RelationType::new(r)).collect());
    }
    if rng.below(2) == 0 {
        f.entity_types = Some(EntityType::ALL.iter().copied().filter(|_| rng.below(2) == 0).collect());
    }
    if rng.below(3) == 0 {
        f.sources = Some([SourceKind::Homepage, SourceKind::OtherRelevant].into_iter().filter(|_| rng.below(2) == 0).collect());
    }
    if rng.below(2) == 0 {
        f.top_k = Some(1 + rng.below(6));
    }
    if rng.below(2) == 0 {
        let lo = 1995 + rng.below(30) as i32;
        f.year_range = Some((lo, lo + rng.below(10) as i32));
    }
    f
}

fn node_ids(g: &ProfileGraph) -> BTreeSet<&str> {
    g.nodes.iter().map(|n| n.id.as_str()).collect()
}

/// Star graphs whose union is the undirected graph on `n` nodes with `edges`.
fn stars(n: usize, edges: &[(usize, usize)]) -> Vec<ProfileGraph> {
    let name = |i: usize| format!("N{i}");
    let id = |i: usize| node_id(&name(i), EntityType::Person);
    let node = |i: usize| GraphNode {
        id: id(i),
        name: name(i),
        entity_type: EntityType::Person,
        weight: 1,
        bucket: None,
        sources: BTreeSet::new(),
    };
    (0..n)
        .map(|u| {
            let leaves: Vec<usize> = edges.iter().filter(|e| e.0 == u).map(|e| e.1).collect();
            ProfileGraph {
                format_version: FORMAT_VERSION,
                target: GraphTarget { id: id(u), name: name(u) },
                nodes: std::iter::once(u).chain(leaves.iter().copied()).map(node).collect(),
                edges: leaves
                    .iter()
                    .map(|&v| RelationEdge {
                        id: edge_id(&id(u), &id(v)),
                        source: id(u),
                        target: id(v),
                        types: BTreeSet::from([RelationType::new("other")]),
                        weight: 1,
                        years: BTreeSet::new(),
                        cloud: vec![],
                        snippets: vec!["x".into()],
                        sources: BTreeSet::new(),
                    })
                    .collect(),
            }
        })
        .collect()
}

/// Every simple path from `s` to `t`, as node sequences excluding `s`.
fn simple_paths(adj: &[Vec<usize>], s: usize, t: usize) -> Vec<Vec<usize>> {
    fn go(adj: &[Vec<usize>], u: usize, t: usize, seen: &mut Vec<bool>, path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if u == t {
            out.push(path.clone());
            return;
        }
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                path.push(v);
                go(adj, v, t, seen, path, out);
                path.pop();
                seen[v] = false;
            }
        }
    }
    let mut seen = vec![false; adj.len()];
    seen[s] = true;
    let mut out = Vec::new();
    go(adj, s, t, &mut seen, &mut Vec::new(), &mut out);
    out
}

fn connected(n: usize, adj: &[Vec<usize>]) -> bool {
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(u) = stack.pop() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                stack.push(v);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

fn path_minimality() -> Result<usize, String> {
    let mut graphs = 0;
    for n in 1..=6usize {
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
        for mask in 0u32..(1 << pairs.len()) {
            let edges: Vec<(usize, usize)> = pairs.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &e)| e).collect();
            let mut adj = vec![Vec::new(); n];
            for &(u, v) in &edges {
                adj[u].push(v);
                adj[v].push(u);
            }
            if !connected(n, &adj) {
                continue;
            }
            graphs += 1;
            let profiles = stars(n, &edges);
            let merged = MergedGraph::new(&profiles);
            let ids: Vec<String> = (0..n).map(|i| node_id(&format!("N{i}"), EntityType::Person)).collect();
            for s in 0..n {
                for t in 0..n {
                    let all = simple_paths(&adj, s, t);
                    let best = all.iter().map(Vec::len).min().unwrap();
                    let smallest = all.iter().filter(|p| p.len() == best).min().unwrap();
                    let got = merged.find_path(&ids[s], &ids[t], 6).map_err(|e| e.to_string())?.ok_or("no path")?;
                    let got_nodes: Vec<usize> = got.iter().map(|st| ids.iter().position(|i| *i == st.node.id).unwrap()).collect();
                    ensure(got_nodes == *smallest, || format!("n={n} mask={mask} {s}->{t}: {got_nodes:?} vs {smallest:?}"))?;
                    let mut prev = s;
                    for (step, &v) in got.iter().zip(&got_nodes) {
                        let (a, b) = (prev.min(v), prev.max(v));
                        ensure(step.edge == edge_id(&ids[a], &ids[b]), || format!("n={n} mask={mask}: wrong edge id"))?;
                        prev = v;
                    }
                    if best > 0 {
                        let short = merged.find_path(&ids[s], &ids[t], best - 1).map_err(|e| e.to_string())?;
                        ensure(short.is_none(), || format!("n={n} mask={mask}: path under max_hops"))?;
                    }
                }
            }
        }
    }
    Ok(graphs)
}

fn graph_laws() -> Check {
    let mut rng = SplitMix64::new(31);
    for _ in 0..2000 {
        let (g, n) = random_graph(&mut rng)?;
        let edge_sum: usize = g.edges.iter().map(|e| e.weight).sum();
        ensure(edge_sum == n && g.target_node().weight == n, || format!("weights {edge_sum} / {} vs {n} mentions", g.target_node().weight))?;
        for e in &g.edges {
            ensure(g.node(&e.target).is_some_and(|l| l.weight == e.weight), || "leaf weight differs from edge weight".into())?;
        }
        let f = random_filter(&mut rng);
        let once = apply_filter(&g, &f);
        ensure(apply_filter(&once, &f) == once, || format!("filter not idempotent: {f:?}"))?;
        ensure(once.validate().is_ok(), || "filtered graph malformed".into())?;
        if let Some(k) = f.top_k {
            ensure(once.nodes.len() <= k + 1, || format!("top-{k} kept {} nodes", once.nodes.len()))?;
        }
        let mut stricter = f.clone();
        stricter.top_k = None;
        let loose = apply_filter(&g, &stricter);
        if let Some(types) = &stricter.entity_types {
            let mut fewer = types.clone();
            if let Some(first) = fewer.iter().next().copied() {
                fewer.remove(&first);
            }
            stricter.entity_types = Some(fewer);
        } else {
            stricter.entity_types = Some(BTreeSet::from([EntityType::Person]));
        }
        let tight = apply_filter(&g, &stricter);
        ensure(node_ids(&tight).is_subset(&node_ids(&loose)), || "narrower filter added nodes".into())?;
        ensure(node_ids(&loose).is_subset(&node_ids(&g)), || "filter added nodes".into())?;
        ensure(node_ids(&once).is_subset(&node_ids(&loose)), || "top-k added nodes".into())?;
    }
    let mut last = 0;
    for year in 1900..=2099 {
        let b = temporal_bucket(year);
        ensure(b <= 4 && b >= last, || format!("bucket {b} for {year}"))?;
        last = b;
    }
    ensure(temporal_bucket(1900) == 0 && temporal_bucket(2099) == 4, || "bucket ends".into())?;
    let graphs = path_minimality()?;
    Ok(format!("2000 random graphs, buckets 1900-2099, paths on {graphs} connected graphs"))
}

// ---------------------------------------------------------------- pipeline and service

fn determinism() -> Check {
    let fx = common::fixtures();
    let config = PipelineConfig::load(fx.join("config.toml")).map_err(|e| e.to_string())?;
    let target = fx.join("snapshots/elena-marchetti");
    let mut outputs = Vec::new();
    for _ in 0..2 {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let run = run_profile(&config, &target).map_err(|e| e.to_string())?;
        let (g, m) = write_outputs(&run, dir.path()).map_err(|e| e.to_string())?;
        outputs.push((std::fs::read(g).unwrap(), std::fs::read(m).unwrap()));
    }
    ensure(outputs[0] == outputs[1], || "runs differ".into())?;
    let golden = fx.join("golden/graphs");
    ensure(outputs[0].0 == std::fs::read(golden.join("elena-marchetti.graph.json")).unwrap(), || "graph differs from golden".into())?;
    ensure(outputs[0].1 == std::fs::read(golden.join("elena-marchetti.manifest.json")).unwrap(), || "manifest differs from golden".into())?;
    Ok("two runs byte-identical and equal to goldens".into())
}

fn service() -> Check {
    let fx = common::fixtures();
    let store = ProfileStore::load(fx.join("golden/graphs")).map_err(|e| e.to_string())?;
    let before = store.hash();
    let index = std::fs::read_to_string(fx.join("golden/service/index.tsv")).map_err(|e| e.to_string())?;
    let cases: Vec<Vec<&str>> = index.lines().filter(|l| !l.starts_with('#') && !l.is_empty()).map(|l| l.split('\t').collect()).collect();
    for c in &cases {
        let r = handle(&store, c[1], c[2], c[3]);
        let golden = std::fs::read_to_string(fx.join(format!("golden/service/{}.json", c[0]))).map_err(|e| e.to_string())?;
        ensure(r.status.to_string() == c[4] && r.body == golden, || format!("{}: status {} body match {}", c[0], r.status, r.body == golden))?;
    }
    let mut rng = SplitMix64::new(1000);
    for _ in 0..1000 {
        let c = &cases[rng.below(cases.len())];
        handle(&store, c[1], c[2], c[3]);
    }
    ensure(store.hash() == before, || "store hash changed".into())?;
    Ok(format!("{} endpoints match goldens, store hash stable over 1000 requests", cases.len()))
}

fn main() {
    let criteria: [Criterion; 9] = [
        (1, "learner oracles", Duration::from_secs(5), learner_oracles),
        (2, "cross-validation laws", Duration::from_secs(1), cv_laws),
        (3, "relevance on synthetic corpus", Duration::from_secs(30), relevance_cv),
        (4, "self-training scale-up", Duration::from_secs(60), self_training),
        (5, "novelty analysis", Duration::from_secs(5), novelty),
        (6, "distant supervision", Duration::from_secs(60), distant_supervision),
        (7, "graph laws", Duration::from_secs(30), graph_laws),
        (8, "pipeline determinism", Duration::from_secs(60), determinism),
        (9, "service goldens", Duration::from_secs(60), service),
    ];
    let mut failed = 0;
    for (n, name, limit, check) in criteria {
        let start = Instant::now();
        let result = check();
        let took = start.elapsed();
        let result = result.and_then(|detail| {
            if took <= limit { Ok(detail) } else { Err(format!("took {:.2}s, limit {}s", took.as_secs_f64(), limit.as_secs())) }
        });
        match result {
            Ok(detail) => println!("PASS {n} {name} ({:.2}s): {detail}", took.as_secs_f64()),
            Err(why) => {
                failed += 1;
                println!("FAIL {n} {name} ({:.2}s): {why}", took.as_secs_f64());
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
