//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
//! failure. Run with `cargo test --test acceptance`.

mod common;

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use axum::body::{to_bytes, Body};
use axum::http::{Method, Request};
use igkit::pipeline::MANIFEST;
use igkit::run_pipeline;
use igkit::serve::{router, AppState};
use igkit_core::classifier::{
    classify_statement, LegalActModel, StatementModel, StatementType, TrainConfig,
};
use igkit_core::conllu::{parse_conllu, DepTree};
use igkit_core::eval::{component_prf, merge_labels, MergedLabel};
use igkit_core::graph::{
    build_hypergraph, EntityHypergraph, EntityKind, EntityLexicon, Hyperedge, HyperedgeUnit, Vertex,
};
use igkit_core::metrics::{
    all_closeness, metrics_report, visibility, MetricsConfig, VisibilityWeights,
};
use igkit_core::splitter::expand;
use igkit_core::store::CorpusStore;
use igkit_core::tagger::{IgLabel, TaggedStatement, Tagger};
use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use tower::ServiceExt;

type Outcome = Result<(), String>;
type Criterion = (&'static str, &'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($fmt)+));
        }
    };
}

fn tree(name: &str) -> DepTree {
    let text = fs::read_to_string(common::data(&format!("fixtures/{name}.conllu"))).unwrap();
    parse_conllu(&text).unwrap().remove(0)
}

fn labelled(st: &TaggedStatement) -> Vec<(String, IgLabel)> {
    st.tree
        .tokens()
        .iter()
        .zip(&st.labels)
        .map(|(t, &l)| (t.surface.clone(), l))
        .collect()
}

fn expect_labels(st: &TaggedStatement, expected: &[(&str, IgLabel)]) -> Outcome {
    let got = labelled(st);
    ensure!(
        got.len() == expected.len(),
        "{} tokens, expected {}",
        got.len(),
        expected.len()
    );
    for ((w, l), (ew, el)) in got.iter().zip(expected) {
        ensure!(w == ew && l == el, "{w}/{l} where {ew}/{el} expected");
    }
    Ok(())
}

fn employee_trace() -> Outcome {
    use IgLabel::*;
    let start = Instant::now();
    let st = Tagger::default().tag_constitutive(&tree("employee"));
    let elapsed = start.elapsed();
    expect_labels(
        &st,
        &[
            ("The", E),
            ("employee", E),
            ("is", F),
            ("unable", P),
            ("to", Ctx),
            ("work", Ctx),
            (".", None),
        ],
    )?;
    ensure!(elapsed.as_secs_f64() < 1.0, "took {elapsed:?}");
    Ok(())
}

fn request_trace() -> Outcome {
    use IgLabel::*;
    let st = Tagger::default().tag_regulative(&tree("request"));
    let words = |l: IgLabel| st.words_with(l).join(" ");
    ensure!(words(A) == "the State Party", "A = {:?}", words(A));
    ensure!(words(D) == "may", "D = {:?}", words(D));
    ensure!(words(I) == "submit", "I = {:?}", words(I));
    ensure!(words(BDir) == "a request", "B-dir = {:?}", words(BDir));
    ensure!(
        words(BInd) == "to the Committee",
        "B-ind = {:?}",
        words(BInd)
    );
    ensure!(
        words(BProp) == "for financial assistance",
        "B-prop = {:?}",
        words(BProp)
    );
    ensure!(
        words(Ctx) == "Once a year through an online form",
        "CTX = {:?}",
        words(Ctx)
    );
    Ok(())
}

fn expansion() -> Outcome {
    use IgLabel::*;
    let st = Tagger::default().tag_regulative(&tree("programmes"));
    let atomics = expand(&st);
    ensure!(atomics.len() == 18, "{} atomic statements", atomics.len());
    let text = |a: &igkit_core::splitter::AtomicStatement, l: IgLabel| {
        a.spans_with(l).map(|s| s.text()).collect::<Vec<_>>()
    };
    let first = &atomics[0];
    let mut seen = BTreeSet::new();
    for a in &atomics {
        ensure!(text(a, A) == text(first, A), "{}: attribute differs", a.id);
        ensure!(text(a, D) == text(first, D), "{}: deontic differs", a.id);
        let ctx = text(a, Ctx);
        ensure!(ctx.len() == 4, "{}: {} context spans", a.id, ctx.len());
        ensure!(ctx == text(first, Ctx), "{}: context differs", a.id);
        let key = (
            text(a, I).join(" "),
            text(a, BDir).join(" "),
            text(a, BProp).join(" "),
        );
        seen.insert(key);
    }
    // Brute-force product: aims x objects x distributed adjectives.
    let mut oracle = BTreeSet::new();
    for aim in ["select", "promote"] {
        for obj in ["programmes", "projects", "activities"] {
            for adj in ["national", "subregional", "regional"] {
                oracle.insert((aim.to_string(), obj.to_string(), adj.to_string()));
            }
        }
    }
    ensure!(
        seen == oracle,
        "combinations differ from the product: {seen:?}"
    );
    Ok(())
}

fn visibility_suite() -> Outcome {
    let w = VisibilityWeights::default();
    let counts = |pairs: &[(u8, u64)]| pairs.iter().copied().collect::<BTreeMap<u8, u64>>();
    let v = visibility(&counts(&[(6, 2), (4, 1)]), 10, &w).map_err(|e| e.to_string())?;
    ensure!(v == Ratio::new(8, 5), "fixture value {v}");
    ensure!(v == Ratio::new(16, 10), "1.6 as a ratio");

    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..200 {
        let n: BTreeMap<u8, u64> = (1..=6).map(|c| (c, rng.gen_range(0..20))).collect();
        let m: BTreeMap<u8, u64> = (1..=6).map(|c| (c, rng.gen_range(0..20))).collect();
        let sum: BTreeMap<u8, u64> = (1..=6).map(|c| (c, n[&c] + m[&c])).collect();
        let total = rng.gen_range(1..50);
        let lhs = visibility(&sum, total, &w).unwrap();
        let rhs = visibility(&n, total, &w).unwrap() + visibility(&m, total, &w).unwrap();
        ensure!(lhs == rhs, "linearity fails for {n:?} + {m:?}");
    }

    let lexicon = EntityLexicon::load(common::data("lexicon_2003_convention.json")).unwrap();
    let st = Tagger::default()
        .tag_regulative(&tree("request"))
        .with_id("r");
    let atomics = expand(&st);
    let h = build_hypergraph(&atomics, &lexicon, HyperedgeUnit::Atomic);
    let report = metrics_report(&h, &atomics, &lexicon, &MetricsConfig::default()).unwrap();
    for absent in ["Community", "Group"] {
        let row = report.row(absent).ok_or(format!("no {absent} row"))?;
        ensure!(
            row.visibility_exact == "0" && row.visibility == 0.0,
            "{absent}: {}",
            row.visibility_exact
        );
    }
    Ok(())
}

fn hypergraph(n: usize, edges: Vec<Vec<usize>>) -> EntityHypergraph {
    EntityHypergraph::new(
        (0..n)
            .map(|i| Vertex {
                name: format!("v{i}"),
                kind: EntityKind::Actor,
            })
            .collect(),
        edges
            .into_iter()
            .enumerate()
            .map(|(i, members)| Hyperedge {
                statement: format!("e{i:02}"),
                members,
            })
            .collect(),
    )
    .unwrap()
}

/// BFS over the clique expansion, then the reachable-set closeness.
fn bfs_oracle(h: &EntityHypergraph) -> Vec<f64> {
    let n = h.vertices().len();
    let mut adj = vec![BTreeSet::new(); n];
    for e in h.edges() {
        for &a in &e.members {
            for &b in &e.members {
                if a != b {
                    adj[a].insert(b);
                }
            }
        }
    }
    (0..n)
        .map(|v| {
            let mut dist = vec![usize::MAX; n];
            dist[v] = 0;
            let mut q = VecDeque::from([v]);
            while let Some(u) = q.pop_front() {
                for &w in &adj[u] {
                    if dist[w] == usize::MAX {
                        dist[w] = dist[u] + 1;
                        q.push_back(w);
                    }
                }
            }
            let reach: Vec<usize> = dist
                .iter()
                .copied()
                .filter(|&d| d != 0 && d != usize::MAX)
                .collect();
            if n < 2 || reach.is_empty() {
                return 0.0;
            }
            let r = reach.len() as f64;
            r / (n - 1) as f64 * r / reach.iter().sum::<usize>() as f64
        })
        .collect()
}

fn centrality_suite() -> Outcome {
    let iso = all_closeness(&hypergraph(3, vec![vec![0, 1]]), 1).unwrap();
    ensure!(iso[2] == 0.0, "isolated vertex {}", iso[2]);
    let pair = all_closeness(&hypergraph(2, vec![vec![0, 1]]), 1).unwrap();
    ensure!(pair == [1.0, 1.0], "shared edge {pair:?}");
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for g in 0..10 {
        let edges = (0..rng.gen_range(1..=7))
            .map(|_| {
                let k = rng.gen_range(1..=4);
                (0..k).map(|_| rng.gen_range(0..8)).collect()
            })
            .collect();
        let h = hypergraph(8, edges);
        let got = all_closeness(&h, 1).unwrap();
        for (v, (a, b)) in got.iter().zip(bfs_oracle(&h)).enumerate() {
            ensure!((a - b).abs() <= 1e-12, "graph {g} vertex {v}: {a} vs {b}");
        }
    }
    Ok(())
}

fn flat_statement(id: &str, labels: &[IgLabel]) -> TaggedStatement {
    let conllu: String = (1..=labels.len())
        .map(|i| {
            let (head, rel) = if i == 1 { (0, "root") } else { (1, "dep") };
            format!("{i}\tw{i}\tw{i}\tX\t_\t_\t{head}\t{rel}\t_\t_\n")
        })
        .collect();
    TaggedStatement {
        id: id.into(),
        tree: parse_conllu(&conllu).unwrap().remove(0),
        stype: StatementType::Regulative,
        labels: labels.to_vec(),
        provenance: vec![None; labels.len()],
        flags: Default::default(),
    }
}

fn evaluator() -> Outcome {
    use IgLabel::*;
    let gold = [
        flat_statement("s1", &[A, A, D, I, BDir, BDir, BProp, Ctx, Ctx, None]),
        flat_statement("s2", &[AProp, A, D, I, BInd, BInd, Ctx, Ctx, Ctx, None]),
    ];
    let pred = [
        flat_statement("s1", &[A, None, D, I, BDir, Ctx, BProp, Ctx, A, None]),
        flat_statement("s2", &[A, A, D, D, BInd, BDir, Ctx, None, Ctx, I]),
    ];
    let layer = Some(StatementType::Regulative);

    let same = component_prf(&gold, &gold, layer).map_err(|e| e.to_string())?;
    let l = &same.layers[0];
    ensure!(
        l.rows
            .iter()
            .all(|r| r.scores.f1 == 1.0 && r.scores.precision == 1.0 && r.scores.recall == 1.0),
        "pred = gold is not all 1.0"
    );
    ensure!(l.overall.f1 == 1.0, "overall {:?}", l.overall);

    // Hand count over the 20 tokens after merging.
    let hand: BTreeMap<MergedLabel, (u64, u64, u64)> = [
        (MergedLabel::A, (3, 1, 1)),
        (MergedLabel::D, (2, 1, 0)),
        (MergedLabel::I, (1, 1, 1)),
        (MergedLabel::B, (4, 0, 1)),
        (MergedLabel::Ctx, (3, 1, 2)),
    ]
    .into();
    let report = component_prf(&pred, &gold, layer).map_err(|e| e.to_string())?;
    let l = &report.layers[0];
    ensure!(l.tokens == 20, "{} tokens", l.tokens);
    for r in &l.rows {
        let want = hand[&r.component];
        ensure!(
            (r.tp, r.fp, r.fn_) == want,
            "{}: {:?} vs {want:?}",
            r.component.name(),
            (r.tp, r.fp, r.fn_)
        );
        let p = want.0 as f64 / (want.0 + want.1) as f64;
        let rc = want.0 as f64 / (want.0 + want.2) as f64;
        ensure!(
            r.scores.precision == p && r.scores.recall == rc,
            "{} scores",
            r.component.name()
        );
    }
    let macro_p = (0.75 + 2.0 / 3.0 + 0.5 + 1.0 + 0.75) / 5.0;
    let macro_r = (0.75 + 1.0 + 0.5 + 0.8 + 0.6) / 5.0;
    ensure!(
        (l.overall.precision - macro_p).abs() < 1e-12,
        "macro precision {}",
        l.overall.precision
    );
    ensure!(
        (l.overall.recall - macro_r).abs() < 1e-12,
        "macro recall {}",
        l.overall.recall
    );

    let all = [
        A, AProp, I, D, BDir, BInd, BProp, Ctx, E, EProp, F, M, P, PProp, None,
    ];
    let once = merge_labels(&all);
    ensure!(merge_labels(&once) == once, "merging is not idempotent");
    ensure!(merge_labels(&[AProp]) == [A], "A-prop does not merge to A");

    let table = report.to_table();
    let lines: Vec<&str> = table.lines().collect();
    let header: Vec<&str> = lines[0].split_whitespace().collect();
    ensure!(
        header == ["Layer", "Component", "F1", "Precision", "Recall"],
        "header {header:?}"
    );
    let names: Vec<&str> = lines[1..]
        .iter()
        .map(|l| l.split_whitespace().nth(1).unwrap())
        .collect();
    ensure!(names.len() == 6 && names[5] == "Overall", "rows {names:?}");
    Ok(())
}

fn classifier() -> Outcome {
    let (texts, labels) =
        igkit::inputs::statement_examples(&common::fixtures().join("train_statements.jsonl"))
            .map_err(|e| e.to_string())?;
    ensure!(texts.len() == 20, "{} training statements", texts.len());
    let texts: Vec<&str> = texts.iter().map(String::as_str).collect();
    let cfg = TrainConfig::statement_type(11);
    let a = StatementModel::train(&texts, &labels, &cfg).map_err(|e| e.to_string())?;
    let b = StatementModel::train(&texts, &labels, &cfg).map_err(|e| e.to_string())?;
    ensure!(a == b, "two runs give different models");
    let probe = [
        "The Committee shall adopt the report .",
        "The Fund is a body .",
        "",
        "heritage",
    ];
    for p in probe {
        let (x, y) = (classify_statement(p, &a), classify_statement(p, &b));
        ensure!(x == y, "probe {p:?} differs");
    }
    for (t, l) in texts.iter().zip(&labels) {
        ensure!(
            classify_statement(t, &a).stype == *l,
            "training statement {t:?} misclassified"
        );
    }
    ensure!(
        a.model().tfidf().k() == 70,
        "statement k = {}",
        a.model().tfidf().k()
    );
    ensure!(
        a.model().forest().n_features() == 70,
        "forest width {}",
        a.model().forest().n_features()
    );

    let legal: Vec<bool> = labels
        .iter()
        .map(|l| *l == StatementType::Regulative)
        .collect();
    let m = LegalActModel::train(&texts, &legal, &TrainConfig::legal_act(11))
        .map_err(|e| e.to_string())?;
    ensure!(
        m.model().tfidf().k() == 80,
        "legal-act k = {}",
        m.model().tfidf().k()
    );
    ensure!(
        m.model().forest().n_features() == 80,
        "forest width {}",
        m.model().forest().n_features()
    );
    Ok(())
}

fn determinism() -> Outcome {
    let start = Instant::now();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    run_pipeline(&common::fixture_config(a.path()), None).map_err(|e| e.to_string())?;
    run_pipeline(&common::fixture_config(b.path()), None).map_err(|e| e.to_string())?;
    let ma = fs::read(a.path().join("out").join(MANIFEST)).unwrap();
    let mb = fs::read(b.path().join("out").join(MANIFEST)).unwrap();
    ensure!(ma == mb, "manifests differ");
    let elapsed = start.elapsed();
    ensure!(elapsed.as_secs_f64() < 30.0, "took {elapsed:?}");
    Ok(())
}

async fn call(app: &axum::Router, method: Method, uri: &str, body: Option<Value>) -> Value {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json");
    let body = body.map_or_else(Body::empty, |b| Body::from(b.to_string()));
    let resp = app.clone().oneshot(req.body(body).unwrap()).await.unwrap();
    let bytes = to_bytes(resp.into_body(), usize::MAX).await.unwrap();
    serde_json::from_slice(&bytes).unwrap()
}

fn review_app(dir: &std::path::Path) -> axum::Router {
    let cfg = common::review_config(dir);
    run_pipeline(&cfg, None).unwrap();
    let state = AppState::new(
        CorpusStore::open(cfg.store_root()).unwrap(),
        EntityLexicon::load(common::data("lexicon_2003_convention.json")).unwrap(),
        MetricsConfig::default(),
        HyperedgeUnit::Atomic,
    );
    router(Arc::new(state), None)
}

fn scatter_value(points: &Value, entity: &str) -> f64 {
    points
        .as_array()
        .unwrap()
        .iter()
        .find(|p| p["entity"] == entity)
        .unwrap()["visibility"]
        .as_f64()
        .unwrap()
}

fn review_loop() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let app = review_app(dir.path());
    let rt = tokio::runtime::Runtime::new().unwrap();
    rt.block_on(async {
        let committee = "Intergovernmental Committee";
        let before = call(&app, Method::GET, "/api/metrics/scatter", None).await;
        let stmts = call(
            &app,
            Method::GET,
            "/api/documents/convention/statements",
            None,
        )
        .await;
        let mut labels: Vec<String> =
            serde_json::from_value(stmts[0]["statement"]["labels"].clone()).unwrap();
        for l in &mut labels[13..16] {
            *l = "B-dir".into();
        }
        let view = call(
            &app,
            Method::PUT,
            "/api/statements/convention.s1/labels",
            Some(json!({ "labels": labels })),
        )
        .await;
        ensure!(
            view["review_status"] == "expert-corrected",
            "status {}",
            view["review_status"]
        );
        call(&app, Method::POST, "/api/metrics/recompute", None).await;
        let after = call(&app, Method::GET, "/api/metrics/scatter", None).await;
        // One mention moves from weight 4 to weight 5 over N = 3 statements.
        let delta = scatter_value(&after, committee) - scatter_value(&before, committee);
        ensure!((delta - 1.0 / 3.0).abs() < 1e-12, "delta {delta}");
        Ok(())
    })
}

fn scatter_points() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let app = review_app(dir.path());
    let rt = tokio::runtime::Runtime::new().unwrap();
    let points = rt.block_on(call(&app, Method::GET, "/api/metrics/scatter", None));
    let points = points.as_array().unwrap();
    ensure!(points.len() == 16, "{} points", points.len());
    let actors = points.iter().filter(|p| p["kind"] == "actor").count();
    ensure!(actors > 0 && actors < 16, "{actors} actors");
    Ok(())
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        (
            "primary",
            "constitutive rule trace (employee sentence)",
            employee_trace,
        ),
        (
            "primary",
            "regulative rule trace (request sentence)",
            request_trace,
        ),
        ("primary", "expansion to 18 atomic statements", expansion),
        ("primary", "visibility formula suite", visibility_suite),
        ("primary", "closeness centrality suite", centrality_suite),
        ("primary", "evaluator", evaluator),
        ("primary", "classifier properties", classifier),
        ("primary", "end-to-end determinism", determinism),
        ("secondary", "review loop visibility delta", review_loop),
        ("secondary", "scatter of 16 points", scatter_points),
    ];
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (tier, name, f)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(()) => println!("PASS [{}] {tier}: {name}", i + 1),
            Err(e) => {
                failed += 1;
                println!("FAIL [{}] {tier}: {name}: {e}", i + 1);
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
