//! Evaluation: top-k accuracy, per-class precision/recall/F1 and the
//! human-versus-model comparison report (CSV and SVG dumbbell chart).

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io;

/// Classes of one document ordered by descending score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredRanking {
    pub id: String,
    pub ranked: Vec<(String, f64)>,
}

impl PredRanking {
    /// Rank `classes` by `scores`; equal scores keep class-index order.
    pub fn from_scores(id: impl Into<String>, classes: &[String], scores: &[f64]) -> Result<Self> {
        if classes.len() != scores.len() {
            return Err(Error::DimensionMismatch {
                expected: classes.len(),
                got: scores.len(),
            });
        }
        if let Some(bad) = scores.iter().find(|s| !s.is_finite()) {
            return Err(Error::NonFinite(format!("class score {bad}")));
        }
        let mut order: Vec<usize> = (0..classes.len()).collect();
        order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
        Ok(PredRanking {
            id: id.into(),
            ranked: order.into_iter().map(|i| (classes[i].clone(), scores[i])).collect(),
        })
    }

    pub fn top(&self, k: usize) -> &[(String, f64)] {
        &self.ranked[..k.min(self.ranked.len())]
    }

    pub fn best(&self) -> Option<&str> {
        self.ranked.first().map(|(c, _)| c.as_str())
    }
}

fn gold_of<'a>(gold: &'a HashMap<String, String>, id: &str) -> Result<&'a str> {
    gold.get(id)
        .map(String::as_str)
        .ok_or_else(|| Error::MissingGold(id.to_string()))
}

/// Fraction of rankings whose gold class is among the top `k`.
pub fn accuracy_at_k(rankings: &[PredRanking], gold: &HashMap<String, String>, k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidConfig("k must be at least 1".into()));
    }
    let mut hits = 0usize;
    for r in rankings {
        let g = gold_of(gold, &r.id)?;
        if r.top(k).iter().any(|(c, _)| c == g) {
            hits += 1;
        }
    }
    Ok(hits as f64 / rankings.len().max(1) as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub class: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Averages {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationMetrics {
    pub per_class: Vec<ClassMetrics>,
    pub macro_avg: Averages,
    pub accuracy: f64,
    /// `confusion[gold][pred]`, indexed like `per_class`.
    pub confusion: Vec<Vec<usize>>,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn f1(p: f64, r: f64) -> f64 {
    if p + r > 0.0 {
        2.0 * p * r / (p + r)
    } else {
        0.0
    }
}

/// Confusion-matrix metrics. Any ratio with a zero denominator is 0.
pub fn per_class_metrics(
    preds: &HashMap<String, String>,
    gold: &HashMap<String, String>,
    classes: &[String],
) -> Result<ClassificationMetrics> {
    let index: HashMap<&str, usize> = classes.iter().enumerate().map(|(i, c)| (c.as_str(), i)).collect();
    let lookup = |c: &str| index.get(c).copied().ok_or_else(|| Error::UnknownClass(c.to_string()));
    let k = classes.len();
    let mut confusion = vec![vec![0usize; k]; k];
    let mut ids: Vec<&String> = preds.keys().collect();
    ids.sort();
    for id in ids {
        let p = lookup(&preds[id])?;
        let g = lookup(gold_of(gold, id)?)?;
        confusion[g][p] += 1;
    }
    if let Some(id) = gold.keys().find(|id| !preds.contains_key(*id)) {
        return Err(Error::Invalid(format!("no prediction for {id:?}")));
    }

    let n: usize = confusion.iter().flatten().sum();
    let correct: usize = (0..k).map(|i| confusion[i][i]).sum();
    let per_class: Vec<ClassMetrics> = (0..k)
        .map(|c| {
            let tp = confusion[c][c];
            let predicted: usize = confusion.iter().map(|row| row[c]).sum();
            let support: usize = confusion[c].iter().sum();
            let (precision, recall) = (ratio(tp, predicted), ratio(tp, support));
            ClassMetrics {
                class: classes[c].clone(),
                precision,
                recall,
                f1: f1(precision, recall),
                support,
            }
        })
        .collect();
    let mean = |f: fn(&ClassMetrics) -> f64| per_class.iter().map(f).sum::<f64>() / k.max(1) as f64;
    let macro_avg = Averages {
        precision: mean(|m| m.precision),
        recall: mean(|m| m.recall),
        f1: mean(|m| m.f1),
    };
    Ok(ClassificationMetrics {
        per_class,
        macro_avg,
        accuracy: ratio(correct, n),
        confusion,
    })
}

/// The report written by `evaluate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub accuracy: f64,
    pub acc_at: BTreeMap<String, f64>,
    #[serde(rename = "macro")]
    pub macro_avg: Averages,
    /// Micro-averaged P/R/F1; for single-label predictions all three equal accuracy.
    pub micro: Averages,
    pub per_class: Vec<ClassMetrics>,
}

impl EvalReport {
    pub fn build(
        rankings: &[PredRanking],
        gold: &HashMap<String, String>,
        classes: &[String],
        ks: &[usize],
    ) -> Result<Self> {
        let mut preds = HashMap::new();
        for r in rankings {
            let best = r
                .best()
                .ok_or_else(|| Error::Invalid(format!("empty ranking for {:?}", r.id)))?;
            preds.insert(r.id.clone(), best.to_string());
        }
        let m = per_class_metrics(&preds, gold, classes)?;
        let mut acc_at = BTreeMap::new();
        for &k in ks {
            acc_at.insert(k.to_string(), accuracy_at_k(rankings, gold, k)?);
        }
        let micro = micro_averages(&m.confusion);
        Ok(EvalReport {
            accuracy: m.accuracy,
            acc_at,
            macro_avg: m.macro_avg,
            micro,
            per_class: m.per_class,
        })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

fn micro_averages(confusion: &[Vec<usize>]) -> Averages {
    let tp: usize = (0..confusion.len()).map(|i| confusion[i][i]).sum();
    let n: usize = confusion.iter().flatten().sum();
    // a wrong prediction is one false positive and one false negative, so
    // micro precision, recall and F1 all reduce to accuracy
    let p = ratio(tp, n);
    Averages {
        precision: p,
        recall: p,
        f1: p,
    }
}

/// Per-class accuracy of human annotators from a data audit.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct HumanAudit {
    pub accuracy: BTreeMap<String, f64>,
    pub audited: BTreeMap<String, u64>,
}

#[derive(Debug, Deserialize)]
struct AuditRecord {
    class: String,
    human_accuracy: f64,
    audited_count: u64,
}

impl HumanAudit {
    /// Parse CSV with header `class,human_accuracy,audited_count`.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        let mut audit = HumanAudit::default();
        for (i, rec) in reader.deserialize::<AuditRecord>().enumerate() {
            let line = i + 2;
            let rec = rec.map_err(|e| Error::parse("audit csv", line, e))?;
            if !(0.0..=1.0).contains(&rec.human_accuracy) {
                return Err(Error::parse(
                    "audit csv",
                    line,
                    format!("human_accuracy {} outside [0, 1]", rec.human_accuracy),
                ));
            }
            if audit.accuracy.insert(rec.class.clone(), rec.human_accuracy).is_some() {
                return Err(Error::parse("audit csv", line, format!("duplicate class {:?}", rec.class)));
            }
            audit.audited.insert(rec.class, rec.audited_count);
        }
        Ok(audit)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_csv(&io::read_to_string(path)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub class: String,
    pub human_acc: f64,
    pub model_acc: f64,
    pub delta: f64,
}

/// One row per class, sorted by model accuracy descending (class name
/// ascending on ties).
pub fn comparison_report(model: &BTreeMap<String, f64>, audit: &HumanAudit) -> Result<Vec<ComparisonRow>> {
    let m: BTreeSet<&String> = model.keys().collect();
    let h: BTreeSet<&String> = audit.accuracy.keys().collect();
    if m != h {
        return Err(Error::ClassMismatch {
            only_model: m.difference(&h).map(|s| s.to_string()).collect(),
            only_audit: h.difference(&m).map(|s| s.to_string()).collect(),
        });
    }
    let mut rows: Vec<ComparisonRow> = model
        .iter()
        .map(|(class, &model_acc)| {
            let human_acc = audit.accuracy[class];
            ComparisonRow {
                class: class.clone(),
                human_acc,
                model_acc,
                delta: model_acc - human_acc,
            }
        })
        .collect();
    rows.sort_by(|a, b| b.model_acc.total_cmp(&a.model_acc));
    Ok(rows)
}

/// Per-class model accuracy (recall) from evaluation metrics.
pub fn model_class_accuracy(per_class: &[ClassMetrics]) -> BTreeMap<String, f64> {
    per_class.iter().map(|m| (m.class.clone(), m.recall)).collect()
}

pub fn rows_to_csv(rows: &[ComparisonRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("row serializes");
    }
    if rows.is_empty() {
        w.write_record(["class", "human_acc", "model_acc", "delta"])
            .expect("header serializes");
    }
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("csv is utf-8")
}

pub fn rows_from_csv(text: &str) -> Result<Vec<ComparisonRow>> {
    csv::Reader::from_reader(text.as_bytes())
        .deserialize()
        .enumerate()
        .map(|(i, r)| r.map_err(|e| Error::parse("comparison csv", i + 2, e)))
        .collect()
}

/// Number of classes where humans beat the model.
pub fn human_wins(rows: &[ComparisonRow]) -> usize {
    rows.iter().filter(|r| r.delta < 0.0).count()
}

pub fn summary_line(rows: &[ComparisonRow]) -> String {
    format!(
        "{} of {} classes have higher human than model accuracy",
        human_wins(rows),
        rows.len()
    )
}

const HUMAN_COLOR: &str = "#d62728";
const MODEL_COLOR: &str = "#1f77b4";

fn escape_xml(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

/// Dumbbell chart: one horizontal segment per row from the human marker
/// (red) to the model marker (blue), in row order.
pub fn rows_to_svg(rows: &[ComparisonRow]) -> String {
    let height = 20 * rows.len() + 40;
    let (x0, x1) = (220.0, 780.0);
    let x = |v: f64| x0 + (x1 - x0) * v.clamp(0.0, 1.0);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 800 {height}" width="800" height="{height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(
        s,
        r#"<line x1="{x0}" y1="20" x2="{x1}" y2="20" stroke="gray"/><text x="{x0}" y="14" text-anchor="middle">0</text><text x="{x1}" y="14" text-anchor="middle">1</text>"#
    );
    for (i, r) in rows.iter().enumerate() {
        let y = 20 * i + 35;
        let (h, m) = (x(r.human_acc), x(r.model_acc));
        let _ = writeln!(
            s,
            r#"<g class="row"><text x="10" y="{}">{}</text><line x1="{h:.2}" y1="{y}" x2="{m:.2}" y2="{y}" stroke="gray" stroke-width="2"/><circle class="human" cx="{h:.2}" cy="{y}" r="5" fill="{HUMAN_COLOR}"/><circle class="model" cx="{m:.2}" cy="{y}" r="5" fill="{MODEL_COLOR}"/></g>"#,
            y + 4,
            escape_xml(&r.class)
        );
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map(pairs: &[(&str, &str)]) -> HashMap<String, String> {
        pairs.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect()
    }

    fn ranking(id: &str, classes: &[&str]) -> PredRanking {
        let n = classes.len();
        PredRanking {
            id: id.into(),
            ranked: classes.iter().enumerate().map(|(i, c)| (c.to_string(), (n - i) as f64)).collect(),
        }
    }

    #[test]
    fn hand_enumerated_top_k() {
        let gold = map(&[("1", "A"), ("2", "B"), ("3", "C")]);
        let r = vec![
            ranking("1", &["A", "B", "C", "D"]),
            ranking("2", &["C", "B", "A", "D"]),
            ranking("3", &["A", "B", "D", "C"]),
        ];
        assert!((accuracy_at_k(&r, &gold, 1).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!((accuracy_at_k(&r, &gold, 3).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(accuracy_at_k(&r, &gold, 4).unwrap(), 1.0);
        assert!(accuracy_at_k(&r, &map(&[("1", "A")]), 1).is_err());
        assert!(accuracy_at_k(&r, &gold, 0).is_err());
    }

    #[test]
    fn ranking_ties_follow_class_index() {
        let classes: Vec<String> = ["x", "y", "z"].map(String::from).to_vec();
        let r = PredRanking::from_scores("d", &classes, &[0.2, 0.4, 0.4]).unwrap();
        let order: Vec<&str> = r.ranked.iter().map(|(c, _)| c.as_str()).collect();
        assert_eq!(order, ["y", "z", "x"]);
        assert!(PredRanking::from_scores("d", &classes, &[0.2, f64::NAN, 0.4]).is_err());
    }

    #[test]
    fn hand_computed_confusion() {
        let gold = map(&[("1", "A"), ("2", "A"), ("3", "B"), ("4", "B")]);
        let pred = map(&[("1", "A"), ("2", "B"), ("3", "B"), ("4", "B")]);
        let classes = vec!["A".to_string(), "B".to_string()];
        let m = per_class_metrics(&pred, &gold, &classes).unwrap();
        let close = |a: f64, b: f64| (a - b).abs() < 1e-6;
        assert_eq!((m.per_class[0].precision, m.per_class[0].recall), (1.0, 0.5));
        assert!(close(m.per_class[0].f1, 0.666667));
        assert!(close(m.per_class[1].precision, 0.666667));
        assert_eq!(m.per_class[1].recall, 1.0);
        assert!(close(m.per_class[1].f1, 0.8));
        assert_eq!(m.accuracy, 0.75);
        assert!(close(m.macro_avg.f1, 0.733333));
        assert_eq!(m.confusion, [[1, 1], [0, 2]]);
    }

    #[test]
    fn never_predicted_class_scores_zero() {
        let gold = map(&[("1", "A"), ("2", "B")]);
        let pred = map(&[("1", "A"), ("2", "A")]);
        let classes = vec!["A".to_string(), "B".to_string()];
        let m = per_class_metrics(&pred, &gold, &classes).unwrap();
        assert_eq!((m.per_class[1].precision, m.per_class[1].f1), (0.0, 0.0));
        assert!(per_class_metrics(&map(&[("1", "Q"), ("2", "A")]), &gold, &classes).is_err());
    }

    #[test]
    fn comparison_rows_and_mismatch() {
        let audit = HumanAudit::from_csv("class,human_accuracy,audited_count\nA,0.5,10\nB,0.9,4\n").unwrap();
        let model: BTreeMap<String, f64> = [("A".to_string(), 0.8), ("B".to_string(), 0.9)].into();
        let rows = comparison_report(&model, &audit).unwrap();
        assert_eq!(rows[0].class, "B");
        assert_eq!(rows[0].delta, 0.0);
        assert_eq!(rows[1].class, "A");
        assert!((rows[1].delta - 0.3).abs() < 1e-12);

        let csv = rows_to_csv(&rows);
        assert!(csv.starts_with("class,human_acc,model_acc,delta\n"));
        assert_eq!(rows_from_csv(&csv).unwrap(), rows);

        let svg = rows_to_svg(&rows);
        assert!(svg.contains(r#"viewBox="0 0 800 80""#));
        assert_eq!(svg.matches(HUMAN_COLOR).count(), 2);

        let short: BTreeMap<String, f64> = [("A".to_string(), 0.8), ("C".to_string(), 0.1)].into();
        match comparison_report(&short, &audit) {
            Err(Error::ClassMismatch { only_model, only_audit }) => {
                assert_eq!((only_model, only_audit), (vec!["C".to_string()], vec!["B".to_string()]));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn audit_rejects_out_of_range() {
        assert!(HumanAudit::from_csv("class,human_accuracy,audited_count\nA,1.5,10\n").is_err());
        assert!(HumanAudit::from_csv("class,human_accuracy,audited_count\nA,0.5,1\nA,0.4,2\n").is_err());
    }
}
