mod common;

use std::collections::{BTreeMap, HashMap};

use common::*;
use proptest::prelude::*;
use rand::seq::IndexedRandom;
use rand::Rng;
use udatext::eval::*;

fn random_case(seed: u64, n: usize, k: usize) -> (Vec<PredRanking>, HashMap<String, String>, Vec<String>) {
    let mut r = rng(seed);
    let classes = names(k);
    let mut gold = HashMap::new();
    let rankings = (0..n)
        .map(|i| {
            let id = format!("d{i}");
            gold.insert(id.clone(), classes[r.random_range(0..k)].clone());
            let scores: Vec<f64> = (0..k).map(|_| (r.random_range(0..4) as f64) / 4.0).collect();
            PredRanking::from_scores(id, &classes, &scores).unwrap()
        })
        .collect();
    (rankings, gold, classes)
}

#[test]
fn report_json_has_the_documented_fields() {
    let (rankings, gold, classes) = random_case(1, 40, 6);
    let report = EvalReport::build(&rankings, &gold, &classes, &[1, 3, 5]).unwrap();
    let v: serde_json::Value = serde_json::from_str(&report.to_json()).unwrap();
    for key in ["accuracy", "acc_at", "macro", "micro", "per_class"] {
        assert!(v.get(key).is_some(), "{key}");
    }
    for k in ["1", "3", "5"] {
        assert!(v["acc_at"][k].is_number());
    }
    for k in ["precision", "recall", "f1"] {
        assert!(v["macro"][k].is_number());
    }
    assert_eq!(v["per_class"].as_array().unwrap().len(), 6);
    assert_eq!(report.acc_at["1"], report.accuracy);
    assert_eq!(report.micro.f1, report.accuracy);
}

#[test]
fn perfect_rankings_score_one_everywhere() {
    let classes = names(4);
    let mut gold = HashMap::new();
    let rankings: Vec<PredRanking> = (0..12)
        .map(|i| {
            let y = i % 4;
            gold.insert(format!("d{i}"), classes[y].clone());
            let scores: Vec<f64> = (0..4).map(|c| if c == y { 1.0 } else { 0.0 }).collect();
            PredRanking::from_scores(format!("d{i}"), &classes, &scores).unwrap()
        })
        .collect();
    let report = EvalReport::build(&rankings, &gold, &classes, &[1, 3, 5]).unwrap();
    assert!(report.acc_at.values().all(|&v| v == 1.0));
    assert_eq!((report.macro_avg.precision, report.macro_avg.recall, report.macro_avg.f1), (1.0, 1.0, 1.0));
    assert!(report.per_class.iter().all(|m| m.f1 == 1.0 && m.support == 3));
}

#[test]
fn comparison_csv_and_svg_share_row_order() {
    let mut r = rng(3);
    let mut model = BTreeMap::new();
    let mut csv = String::from("class,human_accuracy,audited_count\n");
    for c in names(12) {
        let h: f64 = r.random();
        model.insert(c.clone(), r.random::<f64>());
        csv.push_str(&format!("{c},{h},{}\n", r.random_range(1..100)));
    }
    let rows = comparison_report(&model, &HumanAudit::from_csv(&csv).unwrap()).unwrap();
    assert!(rows.windows(2).all(|w| w[0].model_acc >= w[1].model_acc));
    let svg = rows_to_svg(&rows);
    assert!(svg.contains(r#"viewBox="0 0 800 280""#));
    let positions: Vec<usize> = rows.iter().map(|row| svg.find(&format!(">{}<", row.class)).unwrap()).collect();
    assert!(positions.windows(2).all(|w| w[0] < w[1]));
    assert_eq!(rows_from_csv(&rows_to_csv(&rows)).unwrap(), rows);
    assert_eq!(summary_line(&rows), format!("{} of 12 classes have higher human than model accuracy", human_wins(&rows)));
}

proptest! {
    #[test]
    fn accuracy_at_k_is_nondecreasing(seed in 0u64..10_000, k in 2usize..9) {
        let (rankings, gold, _) = random_case(seed, 30, k);
        let mut prev = 0.0;
        for top in 1..=k {
            let acc = accuracy_at_k(&rankings, &gold, top).unwrap();
            prop_assert!(acc >= prev);
            prev = acc;
        }
        prop_assert_eq!(prev, 1.0);
    }

    #[test]
    fn micro_and_macro_follow_the_confusion_matrix(seed in 0u64..10_000, k in 2usize..7) {
        let mut r = rng(seed);
        let classes = names(k);
        let mut gold = HashMap::new();
        let mut preds = HashMap::new();
        for i in 0..40 {
            gold.insert(format!("d{i}"), classes.choose(&mut r).unwrap().clone());
            preds.insert(format!("d{i}"), classes.choose(&mut r).unwrap().clone());
        }
        let m = per_class_metrics(&preds, &gold, &classes).unwrap();
        let trace: usize = (0..k).map(|i| m.confusion[i][i]).sum();
        prop_assert_eq!(m.accuracy, trace as f64 / 40.0);
        let mean_f1 = m.per_class.iter().map(|c| c.f1).sum::<f64>() / k as f64;
        prop_assert!((m.macro_avg.f1 - mean_f1).abs() <= 1e-12);
        for c in &m.per_class {
            let expected = if c.precision + c.recall > 0.0 { 2.0 * c.precision * c.recall / (c.precision + c.recall) } else { 0.0 };
            prop_assert!((c.f1 - expected).abs() <= 1e-15);
        }
    }

    #[test]
    fn comparison_csv_round_trips(values in proptest::collection::vec((0.0f64..=1.0, 0.0f64..=1.0), 1..20)) {
        let mut model = BTreeMap::new();
        let mut audit = HumanAudit::default();
        for (i, (h, m)) in values.iter().enumerate() {
            model.insert(format!("class {i}"), *m);
            audit.accuracy.insert(format!("class {i}"), *h);
        }
        let rows = comparison_report(&model, &audit).unwrap();
        prop_assert_eq!(rows_from_csv(&rows_to_csv(&rows)).unwrap(), rows);
    }
}
