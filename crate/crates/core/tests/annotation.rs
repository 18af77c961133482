use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use editkit_core::annotation::{
    aggregate, percentages, router, Choice, CreateStudy, Judgment, NoMajority, Study, StudyStore, SystemOutputs,
    Verdict, VerdictCounts,
};
use editkit_core::Error;
use proptest::prelude::*;
use serde_json::{json, Value};
use tower::ServiceExt;

const SYS1: &str = "editor-large";
const SYS2: &str = "baseline-xxl";

fn out1(i: usize) -> String {
    format!("first output {i}")
}

fn out2(i: usize) -> String {
    format!("second output {i}")
}

fn request(n: usize, seed: u64) -> CreateStudy {
    let ids = (0..n).map(|i| format!("q{i:03}"));
    CreateStudy {
        inputs: ids.clone().enumerate().map(|(i, id)| (id, format!("Fix the grammar: input {i}"))).collect(),
        system_1: SystemOutputs {
            name: SYS1.into(),
            outputs: ids.clone().enumerate().map(|(i, id)| (id, out1(i))).collect(),
        },
        system_2: SystemOutputs {
            name: SYS2.into(),
            outputs: ids.enumerate().map(|(i, id)| (id, out2(i))).collect(),
        },
        annotations_per_item: 3,
        annotators: 3,
        seed,
        no_majority: NoMajority::Tie,
    }
}

async fn call(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value, String) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.map(|b| Body::from(b.to_string())).unwrap_or_else(Body::empty))
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = axum::body::to_bytes(resp.into_body(), usize::MAX).await.unwrap();
    let raw = String::from_utf8(bytes.to_vec()).unwrap();
    (status, serde_json::from_str(&raw).unwrap_or(Value::Null), raw)
}

/// The three votes, as verdicts, for item `i` of the 32/5/2/11 study.
fn planned_votes(i: usize) -> [Verdict; 3] {
    use Verdict::*;
    match i {
        0..=31 if i % 2 == 0 => [System1, System1, System1],
        0..=31 => [System1, System2, System1],
        32..=36 => [System2, System2, Tie],
        // no strict majority, resolved to tie
        37 => [System1, System2, Neither],
        38 => [Tie, Tie, Neither],
        _ => [Neither, Neither, System2],
    }
}

/// The button an annotator presses to express `v` for the item as shown.
fn choice_for(item: &Value, v: Verdict) -> Choice {
    let i: usize = item["item_id"].as_str().unwrap()[1..].parse().unwrap();
    let a = item["output_a"].as_str().unwrap();
    match v {
        Verdict::System1 if a == out1(i) => Choice::A,
        Verdict::System1 => Choice::B,
        Verdict::System2 if a == out2(i) => Choice::A,
        Verdict::System2 => Choice::B,
        Verdict::Tie => Choice::Tie,
        Verdict::Neither => Choice::Neither,
    }
}

fn scan_for_identities(raw: &str) {
    for needle in [SYS1, SYS2, "system_1", "system_2", "a_is_system", "System1"] {
        assert!(!raw.contains(needle), "payload leaks `{needle}`: {raw}");
    }
}

#[tokio::test]
async fn fifty_item_study_end_to_end() {
    let app = router(Arc::new(StudyStore::in_memory()));
    let (status, created, raw) = call(&app, "POST", "/studies", Some(serde_json::to_value(request(50, 11)).unwrap())).await;
    assert_eq!(status, StatusCode::CREATED);
    scan_for_identities(&raw);
    assert_eq!(created["items"], 50);
    let id = created["study_id"].as_str().unwrap().to_string();
    let tokens: Vec<String> = serde_json::from_value(created["annotator_tokens"].clone()).unwrap();
    assert_eq!(tokens.len(), 3);

    let (status, _, _) = call(&app, "GET", &format!("/studies/{id}/results"), None).await;
    assert_eq!(status, StatusCode::CONFLICT);

    for (k, token) in tokens.iter().enumerate() {
        let mut served = 0;
        loop {
            let (status, next, raw) = call(&app, "GET", &format!("/studies/{id}/next?annotator={token}"), None).await;
            assert_eq!(status, StatusCode::OK);
            scan_for_identities(&raw);
            if next["done"] == true {
                break;
            }
            let item = &next["item"];
            let i: usize = item["item_id"].as_str().unwrap()[1..].parse().unwrap();
            let choice = choice_for(item, planned_votes(i)[k]);
            let body = json!({"item_id": item["item_id"], "annotator": token, "choice": choice});
            let (status, _, raw) = call(&app, "POST", &format!("/studies/{id}/judgments"), Some(body.clone())).await;
            assert_eq!(status, StatusCode::CREATED);
            scan_for_identities(&raw);
            let (status, err, _) = call(&app, "POST", &format!("/studies/{id}/judgments"), Some(body)).await;
            assert_eq!(status, StatusCode::CONFLICT, "duplicate accepted");
            assert!(err["error"].as_str().unwrap().contains("already judged"));
            served += 1;
        }
        assert_eq!(served, 50);
    }

    let (status, result, _) = call(&app, "GET", &format!("/studies/{id}/results"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(result["counts"], json!({"system_1": 32, "system_2": 5, "tie": 2, "neither": 11}));
    assert_eq!(
        result["percentages"],
        json!({"system_1": 64.0, "system_2": 10.0, "tie": 4.0, "neither": 22.0})
    );
    assert_eq!(result["system_1"], SYS1);
}

#[tokio::test]
async fn http_errors() {
    let app = router(Arc::new(StudyStore::in_memory()));
    let (_, created, _) = call(&app, "POST", "/studies", Some(serde_json::to_value(request(4, 1)).unwrap())).await;
    let id = created["study_id"].as_str().unwrap().to_string();
    let token = created["annotator_tokens"][0].as_str().unwrap().to_string();

    let (s, _, _) = call(&app, "GET", "/studies/nope/next?annotator=x", None).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    let (s, _, _) = call(&app, "GET", &format!("/studies/{id}/next?annotator=stranger"), None).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    let bad = json!({"item_id": "q000", "annotator": token, "choice": "both"});
    let (s, _, _) = call(&app, "POST", &format!("/studies/{id}/judgments"), Some(bad)).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    let unknown = json!({"item_id": "q999", "annotator": token, "choice": "A"});
    let (s, _, _) = call(&app, "POST", &format!("/studies/{id}/judgments"), Some(unknown)).await;
    assert_eq!(s, StatusCode::NOT_FOUND);

    let mut mismatched = request(4, 1);
    mismatched.system_2.outputs.remove("q002");
    let (s, err, _) = call(&app, "POST", "/studies", Some(serde_json::to_value(mismatched).unwrap())).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert!(err["error"].as_str().unwrap().contains("q002"));

    let (s, err, _) = call(&app, "GET", &format!("/studies/{id}/results"), None).await;
    assert_eq!(s, StatusCode::CONFLICT);
    assert!(err["error"].as_str().unwrap().contains("q003"));
}

#[test]
fn coverage_mismatch_is_typed() {
    let mut req = request(5, 0);
    req.system_1.outputs.insert("extra".into(), "x".into());
    let err = Study::new("s".into(), vec!["a".into(), "b".into(), "c".into()], req).unwrap_err();
    assert!(matches!(err, Error::CoverageMismatch(_)));
}

#[test]
fn full_items_are_not_served_or_accepted() {
    let store = StudyStore::in_memory();
    let mut req = request(2, 3);
    req.annotators = 4;
    let created = store.create(req).unwrap();
    let id = &created.study_id;
    let t = &created.annotator_tokens;
    for token in &t[..3] {
        store
            .submit(id, Judgment { item_id: "q000".into(), annotator: token.clone(), choice: Choice::Tie, timestamp_ms: 0 })
            .unwrap();
    }
    for _ in 0..3 {
        assert_eq!(store.next_item(id, &t[3]).unwrap().unwrap().item_id, "q001");
    }
    let err = store
        .submit(id, Judgment { item_id: "q000".into(), annotator: t[3].clone(), choice: Choice::A, timestamp_ms: 0 })
        .unwrap_err();
    assert!(matches!(err, Error::ItemFull(_)));
    // the first annotator has one item left
    assert_eq!(store.next_item(id, &t[0]).unwrap().unwrap().item_id, "q001");
    store
        .submit(id, Judgment { item_id: "q001".into(), annotator: t[0].clone(), choice: Choice::A, timestamp_ms: 0 })
        .unwrap();
    assert_eq!(store.next_item(id, &t[0]).unwrap(), None);
}

#[test]
fn assignment_is_seeded_and_fair() {
    let tokens = vec!["a".to_string(), "b".into(), "c".into()];
    let s1 = Study::new("x".into(), tokens.clone(), request(2000, 5)).unwrap();
    let s2 = Study::new("y".into(), tokens.clone(), request(2000, 5)).unwrap();
    let s3 = Study::new("z".into(), tokens, request(2000, 6)).unwrap();
    let flags = |s: &Study| s.items.iter().map(|i| i.a_is_system_1).collect::<Vec<_>>();
    assert_eq!(flags(&s1), flags(&s2));
    assert_ne!(flags(&s1), flags(&s3));
    let share = flags(&s1).iter().filter(|&&f| f).count() as f64 / 2000.0;
    // five standard deviations of a fair coin over 2000 draws
    assert!((share - 0.5).abs() < 5.0 * (0.25f64 / 2000.0).sqrt(), "{share}");
}

fn judgments_by_text(study: &Study, prefer_first: impl Fn(usize) -> Option<bool>) -> Vec<Judgment> {
    let mut out = Vec::new();
    for (i, item) in study.items.iter().enumerate() {
        for (k, a) in study.annotators.iter().enumerate() {
            let choice = match prefer_first(i * 3 + k) {
                Some(true) if item.output_a == out1(i) => Choice::A,
                Some(true) => Choice::B,
                Some(false) if item.output_a == out2(i) => Choice::A,
                Some(false) => Choice::B,
                None if k % 2 == 0 => Choice::Tie,
                None => Choice::Neither,
            };
            out.push(Judgment { item_id: item.item_id.clone(), annotator: a.clone(), choice, timestamp_ms: 0 });
        }
    }
    out
}

#[test]
fn swapping_systems_mirrors_percentages() {
    let tokens = vec!["a".to_string(), "b".into(), "c".into()];
    let pref = |n: usize| match n % 7 {
        0 | 1 | 2 => Some(true),
        3 | 4 => Some(false),
        _ => None,
    };
    let fwd = Study::new("f".into(), tokens.clone(), request(40, 9)).unwrap();
    let mut swapped_req = request(40, 9);
    std::mem::swap(&mut swapped_req.system_1, &mut swapped_req.system_2);
    let rev = Study::new("r".into(), tokens, swapped_req).unwrap();
    let a = aggregate(&fwd, &judgments_by_text(&fwd, pref)).unwrap();
    let b = aggregate(&rev, &judgments_by_text(&rev, pref)).unwrap();
    assert_eq!(a.counts.system_1, b.counts.system_2);
    assert_eq!(a.counts.system_2, b.counts.system_1);
    assert_eq!((a.counts.tie, a.counts.neither), (b.counts.tie, b.counts.neither));
    assert_eq!(a.percentages.system_1, b.percentages.system_2);
}

#[test]
fn judgments_survive_restart() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("studies.jsonl");
    let (id, tokens) = {
        let store = StudyStore::open(&path).unwrap();
        let c = store.create(request(3, 2)).unwrap();
        for item in ["q000", "q001"] {
            store
                .submit(&c.study_id, Judgment { item_id: item.into(), annotator: c.annotator_tokens[0].clone(), choice: Choice::A, timestamp_ms: 0 })
                .unwrap();
        }
        (c.study_id, c.annotator_tokens)
    };
    // simulate a crash mid-write
    let mut raw = std::fs::read_to_string(&path).unwrap();
    raw.push_str("{\"event\":\"judgment\",\"study_id\":");
    std::fs::write(&path, raw).unwrap();

    let store = StudyStore::open(&path).unwrap();
    assert_eq!(store.judgments(&id).unwrap().len(), 2);
    assert_eq!(store.next_item(&id, &tokens[0]).unwrap().unwrap().item_id, "q002");
    let dup = Judgment { item_id: "q000".into(), annotator: tokens[0].clone(), choice: Choice::B, timestamp_ms: 0 };
    assert!(matches!(store.submit(&id, dup), Err(Error::DuplicateJudgment { .. })));
    store
        .submit(&id, Judgment { item_id: "q002".into(), annotator: tokens[0].clone(), choice: Choice::B, timestamp_ms: 0 })
        .unwrap();
    drop(store);
    let again = StudyStore::open(&path).unwrap();
    assert_eq!(again.judgments(&id).unwrap().len(), 3);
    assert_eq!(again.next_item(&id, &tokens[0]).unwrap(), None);
}

#[test]
fn corrupt_log_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("studies.jsonl");
    std::fs::write(&path, "not json\n{}\n").unwrap();
    assert!(matches!(StudyStore::open(&path), Err(Error::Format { line: 1, .. })));
}

proptest! {
    #[test]
    fn percentages_always_sum_to_100(c in prop::array::uniform4(0usize..500)) {
        prop_assume!(c.iter().sum::<usize>() > 0);
        let counts = VerdictCounts { system_1: c[0], system_2: c[1], tie: c[2], neither: c[3] };
        let p = percentages(&counts);
        prop_assert!((p.sum() - 100.0).abs() < 1e-9);
        let n = c.iter().sum::<usize>() as f64;
        for (got, k) in [p.system_1, p.system_2, p.tie, p.neither].into_iter().zip(c) {
            prop_assert!((got - 100.0 * k as f64 / n).abs() <= 0.01 + 1e-9);
        }
    }

    #[test]
    fn majority_matches_counting(votes in prop::collection::vec(0u8..4, 1..6)) {
        let all = [Verdict::System1, Verdict::System2, Verdict::Tie, Verdict::Neither];
        let v: Vec<Verdict> = votes.iter().map(|&i| all[i as usize]).collect();
        let got = editkit_core::annotation::majority(&v, NoMajority::Tie);
        let winner = all.iter().find(|x| 2 * v.iter().filter(|y| y == x).count() > v.len());
        prop_assert_eq!(got, winner.copied().unwrap_or(Verdict::Tie));
    }
}
