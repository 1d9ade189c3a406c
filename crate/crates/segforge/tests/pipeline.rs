mod common;

use std::sync::Arc;

use segforge::gateway::{Gateway, Script, ScriptEntry, ScriptedBackend};
use segforge::pipeline::{Pipeline, PipelineError, Templates};
use segforge_core::{MeasureKind, SegmentationKind};

fn pipeline(gw: &Gateway) -> Pipeline<'_> {
    Pipeline::new(gw, vec![MeasureKind::Revenue, MeasureKind::ProfitOrLoss, MeasureKind::Assets], vec![MeasureKind::Revenue], 5)
}

/// The Apple script with the classification answer replaced.
fn apple_gateway(classify: &str) -> Gateway {
    let text = std::fs::read_to_string(common::fixtures().join("scripts/apple.jsonl")).unwrap();
    let question = Templates::builtin().get("classify").to_string();
    let entries: Vec<ScriptEntry> = Script::parse_jsonl(&text, "apple")
        .unwrap()
        .into_iter()
        .map(|mut e| {
            if e.question == question {
                e.response = classify.to_string();
            }
            e
        })
        .collect();
    Gateway::new(Arc::new(ScriptedBackend::new(Script::from_entries(entries).unwrap())), 5)
}

#[test]
fn query_counts_follow_segment_shape() {
    let tmp = tempfile::tempdir().unwrap();
    let client = common::edgar(tmp.path());
    // classify + general fields + segment list + S*M measures + S nested
    // probes + two queries per parent with nested components.
    for (cik, segments, with_nested, want) in [(320193, 5, 0, 39), (796343, 3, 1, 33)] {
        let gw = common::scripted_gateway();
        let b = pipeline(&gw).run_document(&common::fetch(&client, cik, 2024)).unwrap();
        assert_eq!(b.reportable.len(), segments);
        assert_eq!(b.nested_flags.values().filter(|f| **f).count(), with_nested);
        assert_eq!(1 + 17 + 1 + segments * 3 + segments + with_nested * 2, want);
        assert_eq!(gw.transcript().len(), want, "cik {cik}");
    }
}

#[test]
fn single_unit_firm_skips_segment_stages() {
    let tmp = tempfile::tempdir().unwrap();
    let client = common::edgar(tmp.path());
    let gw = apple_gateway("No");
    let b = pipeline(&gw).run_document(&common::fetch(&client, 320193, 2024)).unwrap();
    assert_eq!(b.classification.kind, SegmentationKind::SingleUnit);
    assert!(b.reportable.is_empty() && b.nested.is_empty() && b.nested_flags.is_empty());
    assert_eq!(b.general_fields.len(), 17);
    assert_eq!(gw.transcript().len(), 18);
}

#[test]
fn unusable_classification_fails_after_one_retry() {
    let tmp = tempfile::tempdir().unwrap();
    let client = common::edgar(tmp.path());
    let gw = apple_gateway("maybe");
    let err = pipeline(&gw).run_document(&common::fetch(&client, 320193, 2024)).unwrap_err();
    assert!(matches!(err, PipelineError::Validation { .. }), "{err}");
    let asked: Vec<String> = gw.transcript().into_iter().map(|t| t.request_id).collect();
    assert_eq!(asked, ["320193_2024/classify", "320193_2024/classify/retry"]);
}

#[test]
fn repeated_runs_produce_identical_bundles() {
    let tmp = tempfile::tempdir().unwrap();
    let client = common::edgar(tmp.path());
    let doc = common::fetch(&client, 796343, 2024);
    let run = || {
        let gw = common::scripted_gateway();
        serde_json::to_string(&pipeline(&gw).run_document(&doc).unwrap()).unwrap()
    };
    assert_eq!(run(), run());
}
