//! Text, CSV and SVG report emission. Scores are percentages with two decimals.

use std::fmt::Write;

use super::compare::ComparisonReport;
use super::config::{ExperimentConfig, Scenario};
use super::scenario::{LearningCurve, Prepared};
use crate::corpus::{DistributionTable, TemporalCorpus};
use crate::evalmetrics::EvalResult;

fn pct(x: f64) -> String {
    format!("{:.2}", 100.0 * x)
}

/// `strategy,step,seed,P,R,F1`, one row per seed per step.
pub fn curve_csv(curve: &LearningCurve) -> String {
    let mut out = String::from("strategy,step,seed,P,R,F1\n");
    for step in &curve.steps {
        for s in &step.per_seed {
            let e = &s.eval;
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                curve.strategy,
                step.step,
                s.seed,
                pct(e.precision()),
                pct(e.recall()),
                pct(e.f1())
            );
        }
    }
    out
}

/// `strategy,seed,step,instance_id`, the batch selected at each step.
pub fn selections_csv(curve: &LearningCurve) -> String {
    let mut out = String::from("strategy,seed,step,instance_id\n");
    for step in &curve.steps {
        for s in &step.per_seed {
            for id in &s.selected {
                let _ = writeln!(out, "{},{},{},{}", curve.strategy, s.seed, step.step, id);
            }
        }
    }
    out
}

/// Resolved config plus derived run facts. The non-comment lines parse back
/// into the same [`ExperimentConfig`].
pub fn run_manifest(cfg: &ExperimentConfig, prep: &Prepared, corpus: &TemporalCorpus, curves: &[LearningCurve]) -> String {
    let mut out = String::from("# resolved experiment configuration\n");
    out.push_str(&cfg.to_kv_text());
    let years: Vec<String> = prep.train_years.iter().map(i32::to_string).collect();
    let _ = writeln!(out, "# corpus instances: {}", corpus.len());
    let _ = writeln!(out, "# training years: {}", years.join(","));
    let _ = writeln!(out, "# resolved eval year: {}", prep.eval_year);
    let _ = writeln!(out, "# dev / test instances: {} / {}", prep.dev.len(), prep.test.len());
    let _ = writeln!(out, "# retrain mode: {} (warm start at every step)", cfg.retrain_mode);
    match cfg.scenario {
        Scenario::One => {
            let _ = writeln!(out, "# scenario 1 trend past table: {}", cfg.s1_past);
        }
        Scenario::Two => {
            let _ = writeln!(out, "# scenario 2 trend tables: past = {}, recent = {}", cfg.s2_past, cfg.s2_recent);
        }
    }
    for c in curves {
        let means: Vec<String> = c.mean_f1().into_iter().map(pct).collect();
        let _ = writeln!(out, "# mean F1 ({}): {}", c.strategy, means.join(" "));
    }
    out
}

/// `instance_id,year,score` with six decimals.
pub fn scores_csv(rows: impl IntoIterator<Item = (u64, i32, f64)>) -> String {
    let mut out = String::from("instance_id,year,score\n");
    for (id, year, score) in rows {
        let _ = writeln!(out, "{id},{year},{score:.6}");
    }
    out
}

fn mean_eval_row(label: &str, evals: &[&EvalResult], types: &[&str], out: &mut String) {
    let n = evals.len() as f64;
    let mut cells = Vec::new();
    for ty in types {
        let c: Vec<_> = evals.iter().map(|e| e.type_counts(ty)).collect();
        cells.push(c.iter().map(|c| c.precision()).sum::<f64>() / n);
        cells.push(c.iter().map(|c| c.recall()).sum::<f64>() / n);
        cells.push(c.iter().map(|c| c.f1()).sum::<f64>() / n);
    }
    cells.push(evals.iter().map(|e| e.precision()).sum::<f64>() / n);
    cells.push(evals.iter().map(|e| e.recall()).sum::<f64>() / n);
    cells.push(evals.iter().map(|e| e.f1()).sum::<f64>() / n);
    let _ = write!(out, "{label:<10}");
    for c in cells {
        let _ = write!(out, "{:>11}", pct(c));
    }
    out.push('\n');
}

/// Per-type and overall P/R/F1 for both selections, averaged over seeds.
pub fn comparison_table(report: &ComparisonReport) -> String {
    let mut types: Vec<&str> = report
        .seeds
        .iter()
        .flat_map(|s| s.random.eval.per_type.keys().chain(s.trend.eval.per_type.keys()))
        .map(|t| t.as_str())
        .collect();
    types.sort_unstable();
    types.dedup();
    let mut out = format!(
        "sample size {}, eval year {}, mean over {} seeds\n{:<10}",
        report.sample_size,
        report.eval_year,
        report.seeds.len(),
        "data"
    );
    for ty in types.iter().copied().chain(["overall"]) {
        for m in ["P", "R", "F1"] {
            let _ = write!(out, "{:>11}", format!("{ty}-{m}"));
        }
    }
    out.push('\n');
    let random: Vec<&EvalResult> = report.seeds.iter().map(|s| &s.random.eval).collect();
    let trend: Vec<&EvalResult> = report.seeds.iter().map(|s| &s.trend.eval).collect();
    mean_eval_row("random", &random, &types, &mut out);
    mean_eval_row("trending", &trend, &types, &mut out);
    out
}

/// Span and token counts of both selections, averaged over seeds, plus the
/// per-seed entity-token totals.
pub fn distribution_table(report: &ComparisonReport) -> String {
    let mut out = String::new();
    let mean = |f: &dyn Fn(&DistributionTable) -> usize, random: bool| -> f64 {
        report
            .seeds
            .iter()
            .map(|s| f(if random { &s.random.distribution } else { &s.trend.distribution }) as f64)
            .sum::<f64>()
            / report.seeds.len() as f64
    };
    let _ = writeln!(
        out,
        "{:<8}{:>16}{:>16}{:>16}{:>16}",
        "type", "random-entity", "random-token", "trend-entity", "trend-token"
    );
    let Some(first) = report.seeds.first() else {
        return out;
    };
    for (ty, _) in &first.random.distribution.rows {
        let name = ty.as_str();
        let _ = writeln!(
            out,
            "{:<8}{:>16.1}{:>16.1}{:>16.1}{:>16.1}",
            name,
            mean(&|d| d.get(name).entities, true),
            mean(&|d| d.get(name).tokens, true),
            mean(&|d| d.get(name).entities, false),
            mean(&|d| d.get(name).tokens, false),
        );
    }
    let _ = writeln!(
        out,
        "{:<8}{:>16.1}{:>16.1}{:>16.1}{:>16.1}",
        "Total",
        mean(&|d| d.total.entities, true),
        mean(&|d| d.total.tokens, true),
        mean(&|d| d.total.entities, false),
        mean(&|d| d.total.tokens, false),
    );
    out.push_str("\nseed,random_entity_tokens,trend_entity_tokens\n");
    for s in &report.seeds {
        let _ = writeln!(out, "{},{},{}", s.seed, s.random.entity_tokens(), s.trend.entity_tokens());
    }
    out
}

/// `strategy,seed,P,R,F1` for the comparison runs.
pub fn comparison_csv(report: &ComparisonReport) -> String {
    let mut out = String::from("strategy,seed,P,R,F1\n");
    for s in &report.seeds {
        for (name, o) in [("random", &s.random), ("trend", &s.trend)] {
            let e = &o.eval;
            let _ = writeln!(out, "{name},{},{},{},{}", s.seed, pct(e.precision()), pct(e.recall()), pct(e.f1()));
        }
    }
    out
}

const COLORS: [&str; 4] = ["#d62728", "#1f77b4", "#2ca02c", "#9467bd"];

/// Line chart of mean F1 per step, one line per curve.
pub fn svg_chart(curves: &[LearningCurve], title: &str) -> String {
    let (w, h) = (640.0, 400.0);
    let (left, right, top, bottom) = (60.0, 130.0, 40.0, 50.0);
    let (pw, ph) = (w - left - right, h - top - bottom);
    let steps = curves.iter().map(|c| c.steps.len()).max().unwrap_or(0).max(1);
    let values: Vec<f64> = curves.iter().flat_map(|c| c.mean_f1()).map(|f| 100.0 * f).collect();
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = if lo.is_finite() {
        let pad = ((hi - lo) * 0.1).max(1.0);
        (((lo - pad) / 5.0).floor() * 5.0, ((hi + pad) / 5.0).ceil() * 5.0)
    } else {
        (0.0, 100.0)
    };
    let x = |i: usize| left + if steps == 1 { pw / 2.0 } else { pw * i as f64 / (steps - 1) as f64 };
    let y = |v: f64| top + ph * (1.0 - (v - lo) / (hi - lo));

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="14">{}</text>"#, left + pw / 2.0, escape(title));
    let _ = writeln!(
        s,
        r#"<path d="M{left},{top} V{} H{}" fill="none" stroke="black"/>"#,
        top + ph,
        left + pw
    );
    let mut tick = lo;
    while tick <= hi + 1e-9 {
        let ty = y(tick);
        let _ = writeln!(
            s,
            r##"<line x1="{left}" y1="{ty:.1}" x2="{}" y2="{ty:.1}" stroke="#ddd"/><text x="{}" y="{:.1}" text-anchor="end">{tick:.0}</text>"##,
            left + pw,
            left - 6.0,
            ty + 4.0
        );
        tick += ((hi - lo) / 5.0).max(1.0);
    }
    for i in 0..steps {
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{}" text-anchor="middle">{}</text>"#,
            x(i),
            top + ph + 18.0,
            i + 1
        );
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">step</text>"#, left + pw / 2.0, h - 10.0);
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">mean F1</text>"#,
        top + ph / 2.0,
        top + ph / 2.0
    );
    for (ci, c) in curves.iter().enumerate() {
        let color = COLORS[ci % COLORS.len()];
        let pts: Vec<String> = c
            .mean_f1()
            .iter()
            .enumerate()
            .map(|(i, &f)| format!("{:.1},{:.1}", x(i), y(100.0 * f)))
            .collect();
        let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#, pts.join(" "));
        for p in &pts {
            let (px, py) = p.split_once(',').expect("formatted as x,y");
            let _ = writeln!(s, r#"<circle cx="{px}" cy="{py}" r="3" fill="{color}"/>"#);
        }
        let ly = top + 10.0 + 18.0 * ci as f64;
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#,
            left + pw + 10.0,
            left + pw + 30.0,
            left + pw + 36.0,
            ly + 4.0,
            c.strategy
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
