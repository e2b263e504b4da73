//! Top-k accuracy, per-class metrics and the human-vs-model comparison
//! report (CSV and dumbbell SVG).
//!
//! cargo run --example eval_report

use std::collections::HashMap;

use udatext::eval::{
    comparison_report, model_class_accuracy, rows_to_csv, rows_to_svg, summary_line, EvalReport, HumanAudit, PredRanking,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let classes: Vec<String> = ["billing", "delivery", "account"].map(String::from).to_vec();
    let cases = [
        ("t1", "billing", [0.7, 0.2, 0.1]),
        ("t2", "billing", [0.3, 0.5, 0.2]),
        ("t3", "delivery", [0.1, 0.8, 0.1]),
        ("t4", "delivery", [0.2, 0.3, 0.5]),
        ("t5", "account", [0.1, 0.1, 0.8]),
        ("t6", "account", [0.6, 0.1, 0.3]),
    ];
    let mut gold = HashMap::new();
    let mut rankings = Vec::new();
    for (id, label, scores) in cases {
        gold.insert(id.to_string(), label.to_string());
        rankings.push(PredRanking::from_scores(id, &classes, &scores)?);
    }

    let report = EvalReport::build(&rankings, &gold, &classes, &[1, 2, 3])?;
    println!("{}", report.to_json());

    let audit = HumanAudit::from_csv("class,human_accuracy,audited_count\nbilling,0.9,40\ndelivery,0.4,25\naccount,0.7,30\n")?;
    let rows = comparison_report(&model_class_accuracy(&report.per_class), &audit)?;
    print!("\n{}", rows_to_csv(&rows));
    println!("{}", summary_line(&rows));

    let dir = tempfile::tempdir()?;
    let svg = dir.path().join("comparison.svg");
    std::fs::write(&svg, rows_to_svg(&rows))?;
    println!("dumbbell chart: {} bytes", std::fs::metadata(&svg)?.len());
    Ok(())
}
