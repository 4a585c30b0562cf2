//! Static SVG charts rendered from trace CSV data: completion time on top
//! (with the maximum-completion line in red), per-slot public cost below.

use crate::csv::TraceRow;

const WIDTH: f64 = 960.0;
const PANEL_HEIGHT: f64 = 260.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 30.0;
const MARGIN_TOP: f64 = 40.0;
const PANEL_GAP: f64 = 60.0;

fn color_for(policy: &str) -> &'static str {
    match policy {
        "dsr" => "#1f77b4",
        "optimal" => "#2ca02c",
        "mea" => "#ff7f0e",
        "none" => "#7f7f7f",
        _ => "#9467bd",
    }
}

struct Panel {
    top: f64,
    y_max: f64,
}

impl Panel {
    fn x(&self, slot: usize, slots: usize) -> f64 {
        let span = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
        MARGIN_LEFT + span * slot as f64 / (slots.max(2) - 1) as f64
    }

    fn y(&self, value: f64) -> f64 {
        self.top + PANEL_HEIGHT - PANEL_HEIGHT * (value / self.y_max).min(1.0)
    }
}

fn polyline(points: &[(f64, f64)], color: &str) -> String {
    if points.is_empty() {
        return String::new();
    }
    let coords: Vec<String> = points
        .iter()
        .map(|(x, y)| format!("{x:.2},{y:.2}"))
        .collect();
    format!(
        "  <polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
        coords.join(" ")
    )
}

fn axes(out: &mut String, panel: &Panel, title: &str, unit: &str) {
    let bottom = panel.top + PANEL_HEIGHT;
    out.push_str(&format!(
        "  <line x1=\"{MARGIN_LEFT}\" y1=\"{bottom}\" x2=\"{:.2}\" y2=\"{bottom}\" stroke=\"#333\"/>\n",
        WIDTH - MARGIN_RIGHT
    ));
    out.push_str(&format!(
        "  <line x1=\"{MARGIN_LEFT}\" y1=\"{:.2}\" x2=\"{MARGIN_LEFT}\" y2=\"{bottom}\" stroke=\"#333\"/>\n",
        panel.top
    ));
    out.push_str(&format!(
        "  <text x=\"{MARGIN_LEFT}\" y=\"{:.2}\" font-size=\"14\" fill=\"#333\">{title}</text>\n",
        panel.top - 10.0
    ));
    for i in 0..=4 {
        let value = panel.y_max * i as f64 / 4.0;
        let y = panel.y(value);
        out.push_str(&format!(
            "  <text x=\"{:.2}\" y=\"{:.2}\" font-size=\"10\" fill=\"#666\" text-anchor=\"end\">{value:.2}{unit}</text>\n",
            MARGIN_LEFT - 6.0,
            y + 3.0
        ));
        out.push_str(&format!(
            "  <line x1=\"{MARGIN_LEFT}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" stroke=\"#eee\"/>\n",
            WIDTH - MARGIN_RIGHT
        ));
    }
}

/// Renders the two-panel chart for any number of policy traces.
pub fn render_chart(max_completion_s: f64, series: &[(String, Vec<TraceRow>)]) -> String {
    let slots = series.iter().map(|(_, rows)| rows.len()).max().unwrap_or(0);
    let max_finite_completion = series
        .iter()
        .flat_map(|(_, rows)| rows.iter().filter_map(|r| r.completion_s))
        .fold(0.0_f64, f64::max);
    let max_cost = series
        .iter()
        .flat_map(|(_, rows)| rows.iter().map(|r| r.public_cost))
        .fold(0.0_f64, f64::max);

    let completion_panel = Panel {
        top: MARGIN_TOP,
        y_max: (max_finite_completion.max(max_completion_s) * 1.15).max(1.0),
    };
    let cost_panel = Panel {
        top: MARGIN_TOP + PANEL_HEIGHT + PANEL_GAP,
        y_max: max_cost.max(1.0) * 1.15,
    };
    let height = cost_panel.top + PANEL_HEIGHT + 40.0;

    let mut out = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{height}\" viewBox=\"0 0 {WIDTH} {height}\">\n  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    );
    axes(&mut out, &completion_panel, "Completion time", " s");
    axes(&mut out, &cost_panel, "Public cost per slot", "");

    // Maximum allowed completion time.
    let y_limit = completion_panel.y(max_completion_s);
    out.push_str(&format!(
        "  <line x1=\"{MARGIN_LEFT}\" y1=\"{y_limit:.2}\" x2=\"{:.2}\" y2=\"{y_limit:.2}\" stroke=\"red\" stroke-dasharray=\"6,3\" stroke-width=\"1.5\"/>\n",
        WIDTH - MARGIN_RIGHT
    ));
    out.push_str(&format!(
        "  <text x=\"{:.2}\" y=\"{:.2}\" font-size=\"10\" fill=\"red\" text-anchor=\"end\">max completion</text>\n",
        WIDTH - MARGIN_RIGHT,
        y_limit - 4.0
    ));

    for (index, (policy, rows)) in series.iter().enumerate() {
        let color = color_for(policy);
        // Completion line, broken at saturated slots.
        let mut segment: Vec<(f64, f64)> = Vec::new();
        for row in rows {
            match row.completion_s {
                Some(v) => {
                    segment.push((completion_panel.x(row.slot, slots), completion_panel.y(v)))
                }
                None => {
                    out.push_str(&polyline(&segment, color));
                    segment.clear();
                }
            }
        }
        out.push_str(&polyline(&segment, color));
        let cost_points: Vec<(f64, f64)> = rows
            .iter()
            .map(|r| (cost_panel.x(r.slot, slots), cost_panel.y(r.public_cost)))
            .collect();
        out.push_str(&polyline(&cost_points, color));
        // Legend.
        let lx = MARGIN_LEFT + 120.0 * index as f64;
        out.push_str(&format!(
            "  <rect x=\"{lx:.2}\" y=\"{:.2}\" width=\"12\" height=\"12\" fill=\"{color}\"/>\n",
            height - 26.0
        ));
        out.push_str(&format!(
            "  <text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\" fill=\"#333\">{policy}</text>\n",
            lx + 16.0,
            height - 16.0
        ));
    }
    out.push_str("</svg>\n");
    out
}
