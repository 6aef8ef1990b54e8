//! Hand-written SVG rendering of a customer pyramid.

use std::fmt::Write;

use crate::pyramid::{PyramidClass, PyramidReport};

const WIDTH: f64 = 480.0;
const TIER_HEIGHT: f64 = 70.0;
const MARGIN: f64 = 20.0;

fn fill(class: PyramidClass) -> &'static str {
    match class {
        PyramidClass::Platinum => "#d9dde3",
        PyramidClass::Gold => "#e8c262",
        PyramidClass::Iron => "#9aa1a8",
        PyramidClass::Lead => "#5d646b",
    }
}

/// Four stacked trapezoids, Platinum on top, each labelled with its class
/// and share of customers. Output depends only on the report.
pub fn render_pyramid_svg(report: &PyramidReport) -> String {
    let tiers = PyramidClass::ALL.len() as f64;
    let height = tiers * TIER_HEIGHT + 2.0 * MARGIN + 24.0;
    let apex_x = WIDTH / 2.0;
    let base = WIDTH - 2.0 * MARGIN;
    let top = MARGIN + 24.0;
    let half_width_at = |y: f64| (y - top) / (tiers * TIER_HEIGHT) * base / 2.0;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" viewBox="0 0 {WIDTH} {height}">"#
    );
    let _ = writeln!(
        s,
        r#"  <text x="{apex_x}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="14">{}</text>"#,
        MARGIN + 4.0,
        escape(&report.cohort_name)
    );
    for (i, cluster) in report.by_class().into_iter().enumerate() {
        let y0 = top + i as f64 * TIER_HEIGHT;
        let y1 = y0 + TIER_HEIGHT;
        let (w0, w1) = (half_width_at(y0), half_width_at(y1));
        let _ = writeln!(
            s,
            r##"  <polygon points="{:.2},{y0:.2} {:.2},{y0:.2} {:.2},{y1:.2} {:.2},{y1:.2}" fill="{}" stroke="#333333" stroke-width="1"/>"##,
            apex_x - w0,
            apex_x + w0,
            apex_x + w1,
            apex_x - w1,
            fill(cluster.class_label)
        );
        let _ = writeln!(
            s,
            r#"  <text x="{apex_x}" y="{:.2}" text-anchor="middle" font-family="sans-serif" font-size="12">{} {:.2}%</text>"#,
            y0 + TIER_HEIGHT * 0.65,
            cluster.class_label,
            cluster.percent
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}
