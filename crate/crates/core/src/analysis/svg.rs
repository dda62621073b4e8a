//! Minimal deterministic SVG charts. Coordinates are printed with two
//! decimals so identical inputs give identical bytes.

use std::fmt::Write;

const W: f64 = 720.0;
const H: f64 = 360.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 36.0;
const BOTTOM: f64 = 90.0;
const PALETTE: [&str; 6] = ["#3b6ea5", "#c8553d", "#5b8c5a", "#8e6c8a", "#d4a373", "#4d4d4d"];

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn header(title: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">"#);
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{:.2}" y="20" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, esc(title));
    s
}

struct Scale {
    lo: f64,
    hi: f64,
}

impl Scale {
    fn new(values: impl Iterator<Item = f64>) -> Self {
        let (mut lo, mut hi) = (0.0f64, 0.0f64);
        for v in values.filter(|v| v.is_finite()) {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if hi - lo < 1e-12 {
            hi = lo + 1.0;
        }
        Scale { lo, hi }
    }

    fn y(&self, v: f64) -> f64 {
        let plot = H - TOP - BOTTOM;
        TOP + plot * (1.0 - (v - self.lo) / (self.hi - self.lo))
    }

    fn axis(&self, s: &mut String) {
        for i in 0..=4 {
            let v = self.lo + (self.hi - self.lo) * i as f64 / 4.0;
            let y = self.y(v);
            let _ = writeln!(s, r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#dddddd"/>"##, W - RIGHT);
            let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{v:.2}</text>"#, LEFT - 6.0, y + 4.0);
        }
        let _ = writeln!(s, r##"<line x1="{LEFT}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#333333"/>"##, self.y(0.0), W - RIGHT, self.y(0.0));
    }
}

/// One bar per category with an optional error interval. Missing values
/// leave a gap with the category label still shown.
pub fn bar_chart(title: &str, bars: &[(String, Option<f64>, Option<(f64, f64)>)]) -> String {
    let mut s = header(title);
    let scale = Scale::new(bars.iter().flat_map(|(_, v, ci)| [v.unwrap_or(0.0), ci.map_or(0.0, |c| c.0), ci.map_or(0.0, |c| c.1)]));
    scale.axis(&mut s);
    let n = bars.len().max(1) as f64;
    let slot = (W - LEFT - RIGHT) / n;
    for (i, (label, v, ci)) in bars.iter().enumerate() {
        let x = LEFT + slot * i as f64;
        let cx = x + slot / 2.0;
        if let Some(v) = v.filter(|v| v.is_finite()) {
            let (y0, y1) = (scale.y(0.0), scale.y(v));
            let _ = writeln!(
                s,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                x + slot * 0.15,
                y0.min(y1),
                slot * 0.7,
                (y0 - y1).abs(),
                PALETTE[0]
            );
        }
        if let Some((lo, hi)) = ci {
            let _ = writeln!(s, r#"<line x1="{cx:.2}" y1="{:.2}" x2="{cx:.2}" y2="{:.2}" stroke="black"/>"#, scale.y(*lo), scale.y(*hi));
        }
        let ty = H - BOTTOM + 12.0;
        let _ = writeln!(s, r#"<text x="{cx:.2}" y="{ty:.2}" text-anchor="end" transform="rotate(-60 {cx:.2} {ty:.2})">{}</text>"#, esc(label));
    }
    s.push_str("</svg>\n");
    s
}

/// Grouped bars: one group per category, one bar per series.
pub fn grouped_bar_chart(title: &str, categories: &[String], series: &[(String, Vec<f64>)]) -> String {
    let mut s = header(title);
    let scale = Scale::new(series.iter().flat_map(|(_, v)| v.iter().copied()));
    scale.axis(&mut s);
    let n = categories.len().max(1) as f64;
    let slot = (W - LEFT - RIGHT) / n;
    let k = series.len().max(1) as f64;
    for (i, cat) in categories.iter().enumerate() {
        let x = LEFT + slot * i as f64;
        for (j, (_, values)) in series.iter().enumerate() {
            let Some(&v) = values.get(i) else { continue };
            let (y0, y1) = (scale.y(0.0), scale.y(v));
            let bw = slot * 0.8 / k;
            let _ = writeln!(
                s,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                x + slot * 0.1 + bw * j as f64,
                y0.min(y1),
                bw,
                (y0 - y1).abs(),
                PALETTE[j % PALETTE.len()]
            );
        }
        let cx = x + slot / 2.0;
        let ty = H - BOTTOM + 12.0;
        let _ = writeln!(s, r#"<text x="{cx:.2}" y="{ty:.2}" text-anchor="end" transform="rotate(-60 {cx:.2} {ty:.2})">{}</text>"#, esc(cat));
    }
    legend(&mut s, series.iter().map(|(n, _)| n.as_str()));
    s.push_str("</svg>\n");
    s
}

/// Polylines over a shared numeric x axis.
pub fn line_chart(title: &str, x_label: &str, series: &[(String, Vec<(f64, f64)>)]) -> String {
    let mut s = header(title);
    let scale = Scale::new(series.iter().flat_map(|(_, pts)| pts.iter().map(|p| p.1)));
    scale.axis(&mut s);
    let (mut xlo, mut xhi) = (f64::INFINITY, f64::NEG_INFINITY);
    for (_, pts) in series {
        for p in pts {
            xlo = xlo.min(p.0);
            xhi = xhi.max(p.0);
        }
    }
    if !xlo.is_finite() {
        (xlo, xhi) = (0.0, 1.0);
    }
    if xhi - xlo < 1e-12 {
        xhi = xlo + 1.0;
    }
    let px = |x: f64| LEFT + (W - LEFT - RIGHT) * (x - xlo) / (xhi - xlo);
    for (j, (_, pts)) in series.iter().enumerate() {
        let path: Vec<String> = pts.iter().filter(|p| p.1.is_finite()).map(|p| format!("{:.2},{:.2}", px(p.0), scale.y(p.1))).collect();
        let _ = writeln!(s, r#"<polyline fill="none" stroke="{}" stroke-width="2" points="{}"/>"#, PALETTE[j % PALETTE.len()], path.join(" "));
    }
    let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, W / 2.0, H - BOTTOM + 24.0, esc(x_label));
    let _ = writeln!(s, r#"<text x="{LEFT}" y="{:.2}">{xlo}</text>"#, H - BOTTOM + 14.0);
    let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{xhi}</text>"#, W - RIGHT, H - BOTTOM + 14.0);
    legend(&mut s, series.iter().map(|(n, _)| n.as_str()));
    s.push_str("</svg>\n");
    s
}

fn legend<'a>(s: &mut String, names: impl Iterator<Item = &'a str>) {
    for (j, name) in names.enumerate() {
        let x = LEFT + 150.0 * j as f64;
        let y = H - 14.0;
        let _ = writeln!(s, r#"<rect x="{x:.2}" y="{:.2}" width="10" height="10" fill="{}"/>"#, y - 9.0, PALETTE[j % PALETTE.len()]);
        let _ = writeln!(s, r#"<text x="{:.2}" y="{y:.2}">{}</text>"#, x + 14.0, esc(name));
    }
}
