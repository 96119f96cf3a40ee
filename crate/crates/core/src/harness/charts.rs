//! Grouped bar charts of testing accuracy and F1, one SVG per extractor.
//!
//! Every `<rect>` in the output is a data bar, two per classification row.
//! Axes are lines and the legend uses circles.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::experiment::{ClassRow, ExperimentReport};
use crate::error::{Error, Result};

const BAR_WIDTH: f64 = 14.0;
const BAR_GAP: f64 = 2.0;
const GROUP_GAP: f64 = 18.0;
const SECTION_GAP: f64 = 30.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 60.0;
const PLOT_HEIGHT: f64 = 240.0;
const BOTTOM: f64 = 90.0;
const ACCURACY_COLOR: &str = "#4c72b0";
const F1_COLOR: &str = "#dd8452";

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Renders the rows of one extractor. Rows are grouped by classifier in
/// the order they appear.
pub fn render_chart_svg(extractor: &str, rows: &[ClassRow]) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::InvalidDataset(format!("no classification rows for {extractor}")));
    }
    let group_width = 2.0 * BAR_WIDTH + BAR_GAP;
    let mut sections: Vec<(&str, Vec<&ClassRow>)> = Vec::new();
    for r in rows {
        match sections.iter_mut().find(|(c, _)| *c == r.classifier.label()) {
            Some((_, v)) => v.push(r),
            None => sections.push((r.classifier.label(), vec![r])),
        }
    }
    let plot_width: f64 = sections
        .iter()
        .map(|(_, v)| v.len() as f64 * (group_width + GROUP_GAP))
        .sum::<f64>()
        + SECTION_GAP * (sections.len() - 1) as f64;
    let width = LEFT + plot_width + RIGHT;
    let height = TOP + PLOT_HEIGHT + BOTTOM;
    let base = TOP + PLOT_HEIGHT;
    let y_of = |v: f64| base - v.clamp(0.0, 1.0) * PLOT_HEIGHT;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="20" text-anchor="middle" font-size="14">Testing accuracy and F1: {} features</text>"#,
        width / 2.0,
        escape(extractor)
    );
    for (i, (name, color)) in [("Accuracy", ACCURACY_COLOR), ("F1 score", F1_COLOR)].iter().enumerate() {
        let x = LEFT + i as f64 * 90.0;
        let _ = writeln!(s, r#"<circle cx="{x}" cy="38" r="5" fill="{color}"/>"#);
        let _ = writeln!(s, r#"<text x="{}" y="42">{name}</text>"#, x + 9.0);
    }
    for tick in 0..=4 {
        let v = tick as f64 / 4.0;
        let y = y_of(v);
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT}" y1="{y}" x2="{}" y2="{y}" stroke="#ddd"/>"##,
            LEFT + plot_width
        );
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{v:.2}</text>"#, LEFT - 6.0, y + 4.0);
    }
    let _ = writeln!(s, r#"<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{base}" stroke="black"/>"#);
    let _ = writeln!(
        s,
        r#"<line x1="{LEFT}" y1="{base}" x2="{}" y2="{base}" stroke="black"/>"#,
        LEFT + plot_width
    );

    let mut x = LEFT + GROUP_GAP / 2.0;
    for (section, section_rows) in &sections {
        let start = x;
        for r in section_rows {
            for (k, (v, color)) in [(r.accuracy, ACCURACY_COLOR), (r.f1, F1_COLOR)].iter().enumerate() {
                let bx = x + k as f64 * (BAR_WIDTH + BAR_GAP);
                let y = y_of(*v);
                let _ = writeln!(
                    s,
                    r#"<rect x="{bx}" y="{y}" width="{BAR_WIDTH}" height="{}" fill="{color}"><title>{} {}: {v}</title></rect>"#,
                    base - y,
                    escape(r.representation.label()),
                    if k == 0 { "accuracy" } else { "F1" },
                );
            }
            let cx = x + group_width / 2.0;
            let _ = writeln!(
                s,
                r#"<text x="{cx}" y="{}" text-anchor="end" transform="rotate(-35 {cx} {})">{}</text>"#,
                base + 14.0,
                base + 14.0,
                escape(r.representation.label())
            );
            x += group_width + GROUP_GAP;
        }
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="middle" font-weight="bold">{}</text>"#,
            (start + x - GROUP_GAP) / 2.0,
            height - 12.0,
            escape(section)
        );
        x += SECTION_GAP;
    }
    s.push_str("</svg>\n");
    Ok(s)
}

/// Writes `chart_<extractor>.svg` for each extractor in `report`, in order
/// of first appearance.
pub fn emit_charts(report: &ExperimentReport, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    if report.class_rows.is_empty() {
        return Err(Error::InvalidDataset("report has no classification rows".into()));
    }
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut extractors: Vec<&str> = Vec::new();
    for r in &report.class_rows {
        if !extractors.contains(&r.extractor.as_str()) {
            extractors.push(&r.extractor);
        }
    }
    extractors
        .into_iter()
        .map(|name| {
            let rows: Vec<ClassRow> = report
                .class_rows
                .iter()
                .filter(|r| r.extractor == name)
                .cloned()
                .collect();
            let path = dir.join(format!("chart_{name}.svg"));
            fs::write(&path, render_chart_svg(name, &rows)?).map_err(|e| Error::io(&path, e))?;
            Ok(path)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::Confusion;
    use crate::harness::{ClassifierKind, Representation};

    fn row(extractor: &str, classifier: ClassifierKind, rep: Representation, acc: f64) -> ClassRow {
        ClassRow {
            extractor: extractor.into(),
            classifier,
            representation: rep,
            accuracy: acc,
            f1: acc / 2.0,
            confusion: Confusion::default(),
        }
    }

    #[test]
    fn two_rects_per_row() {
        let rows: Vec<ClassRow> = Representation::ALL
            .iter()
            .flat_map(|&r| {
                [ClassifierKind::DecisionTree, ClassifierKind::RandomForest]
                    .map(|c| row("handcrafted", c, r, 0.7))
            })
            .collect();
        let svg = render_chart_svg("handcrafted", &rows).unwrap();
        assert_eq!(svg.matches("<rect").count(), 2 * rows.len());
        assert!(svg.contains("Random Forest"));
        assert!(svg.starts_with("<svg"));
    }

    #[test]
    fn labels_are_escaped() {
        let svg = render_chart_svg("a<b", &[row("a<b", ClassifierKind::DecisionTree, Representation::Msb4, 1.0)])
            .unwrap();
        assert!(svg.contains("a&lt;b"));
        assert!(!svg.contains("a<b"));
    }

    #[test]
    fn empty_rows_are_rejected() {
        assert!(render_chart_svg("x", &[]).is_err());
    }
}
