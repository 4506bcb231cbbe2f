//! SVG figure of `F` and the limit cycles in the Liénard plane.

use std::fmt::Write;

use lienard::cycles::{LimitCycle, Stability};
use lienard::dynamics::OrbitTrace;
use lienard::LienardSystem;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN: f64 = 48.0;
const CURVE_SAMPLES: usize = 801;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

struct Frame {
    xr: f64,
    yr: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        MARGIN + (x + self.xr) / (2.0 * self.xr) * (WIDTH - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - MARGIN - (y + self.yr) / (2.0 * self.yr) * (HEIGHT - 2.0 * MARGIN)
    }
}

/// Spacing of roughly five ticks over `[0, r]`.
fn tick_step(r: f64) -> f64 {
    let raw = r / 2.5;
    let mag = 10f64.powf(raw.log10().floor());
    [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag)
}

fn polyline(frame: &Frame, points: impl Iterator<Item = (f64, f64)>) -> String {
    let mut d = String::new();
    for (i, (x, y)) in points.enumerate() {
        let _ = write!(
            d,
            "{}{:.2},{:.2} ",
            if i == 0 { "M" } else { "L" },
            frame.px(x),
            frame.py(y)
        );
    }
    d.trim_end().to_string()
}

pub fn render(system: &LienardSystem, cycles: &[(LimitCycle, OrbitTrace)]) -> String {
    let zeros = system.curve.positive_zeros().unwrap_or_default();
    let cycle_x = cycles
        .iter()
        .flat_map(|(_, t)| t.samples.iter().map(|s| s.x.abs()))
        .fold(0.0, f64::max);
    let xr = 1.15 * cycle_x.max(1.2 * zeros.last().copied().unwrap_or(0.0)).max(0.5);
    let xs: Vec<f64> = (0..CURVE_SAMPLES)
        .map(|i| -xr + 2.0 * xr * i as f64 / (CURVE_SAMPLES - 1) as f64)
        .collect();
    let cycle_y = cycles
        .iter()
        .flat_map(|(_, t)| t.samples.iter().map(|s| s.y.abs()))
        .fold(0.0, f64::max);
    let f_max = xs.iter().map(|&x| system.curve.eval(x).abs()).fold(0.0, f64::max);
    // A steep tail would flatten the cycles; let it run off the frame instead.
    let yr = 1.15
        * if cycle_y > 0.0 {
            cycle_y.max(f_max.min(2.0 * cycle_y))
        } else {
            f_max.max(0.5)
        };
    let frame = Frame { xr, yr };

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<clipPath id="plot-area"><rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}"/></clipPath>"#,
        WIDTH - 2.0 * MARGIN,
        HEIGHT - 2.0 * MARGIN
    );

    let (x0, y0) = (frame.px(0.0), frame.py(0.0));
    let _ = writeln!(s, r##"<g class="axes" stroke="#444" stroke-width="1">"##);
    let _ = writeln!(
        s,
        r#"<line class="axis" x1="{MARGIN}" y1="{y0:.2}" x2="{:.2}" y2="{y0:.2}"/>"#,
        WIDTH - MARGIN
    );
    let _ = writeln!(
        s,
        r#"<line class="axis" x1="{x0:.2}" y1="{MARGIN}" x2="{x0:.2}" y2="{:.2}"/>"#,
        HEIGHT - MARGIN
    );
    let _ = writeln!(s, "</g>");
    let _ = writeln!(s, r##"<g class="ticks" fill="#444">"##);
    let dx = tick_step(xr);
    let mut k = -(xr / dx).floor();
    while k * dx <= xr {
        let v = k * dx;
        if k != 0.0 {
            let _ = writeln!(
                s,
                r##"<line x1="{p:.2}" y1="{a:.2}" x2="{p:.2}" y2="{b:.2}" stroke="#444"/><text x="{p:.2}" y="{t:.2}" text-anchor="middle">{v}</text>"##,
                p = frame.px(v),
                a = y0 - 3.0,
                b = y0 + 3.0,
                t = y0 + 14.0,
                v = round_label(v)
            );
        }
        k += 1.0;
    }
    let dy = tick_step(yr);
    let mut k = -(yr / dy).floor();
    while k * dy <= yr {
        let v = k * dy;
        if k != 0.0 {
            let _ = writeln!(
                s,
                r##"<line x1="{a:.2}" y1="{p:.2}" x2="{b:.2}" y2="{p:.2}" stroke="#444"/><text x="{t:.2}" y="{q:.2}" text-anchor="end">{v}</text>"##,
                p = frame.py(v),
                q = frame.py(v) + 4.0,
                a = x0 - 3.0,
                b = x0 + 3.0,
                t = x0 - 5.0,
                v = round_label(v)
            );
        }
        k += 1.0;
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}">x</text>"#,
        WIDTH - MARGIN + 6.0,
        y0 + 4.0
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">y</text>"#,
        x0,
        MARGIN - 8.0
    );
    let _ = writeln!(s, "</g>");

    let f = polyline(&frame, xs.iter().map(|&x| (x, system.curve.eval(x))));
    let _ = writeln!(
        s,
        r##"<path class="f-curve" d="{f}" fill="none" stroke="#000" stroke-width="1.5" clip-path="url(#plot-area)"/>"##
    );
    for (i, (c, trace)) in cycles.iter().enumerate() {
        let d = polyline(&frame, trace.samples.iter().map(|p| (p.x, p.y)));
        let dash = if c.stability == Stability::Stable {
            ""
        } else {
            r#" stroke-dasharray="6 3""#
        };
        let _ = writeln!(
            s,
            r#"<path class="cycle" data-index="{}" data-y0="{}" d="{d} Z" fill="none" stroke="{}" stroke-width="1.5"{dash} clip-path="url(#plot-area)"/>"#,
            c.index,
            c.y0,
            PALETTE[i % PALETTE.len()]
        );
    }

    let _ = writeln!(s, r#"<g class="legend">"#);
    let (lx, mut ly) = (MARGIN + 8.0, MARGIN + 10.0);
    let _ = writeln!(
        s,
        r##"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="#000" stroke-width="1.5"/><text x="{}" y="{}">y = F(x)</text>"##,
        lx + 20.0,
        lx + 26.0,
        ly + 4.0
    );
    for (i, (c, _)) in cycles.iter().enumerate() {
        ly += 16.0;
        let dash = if c.stability == Stability::Stable {
            ""
        } else {
            r#" stroke-dasharray="6 3""#
        };
        let _ = writeln!(
            s,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{}" stroke-width="1.5"{dash}/><text x="{}" y="{}">cycle {} ({}), y0 = {:.6}</text>"#,
            lx + 20.0,
            PALETTE[i % PALETTE.len()],
            lx + 26.0,
            ly + 4.0,
            c.index,
            format!("{:?}", c.stability).to_lowercase(),
            c.y0
        );
    }
    let _ = writeln!(s, "</g>");
    s.push_str("</svg>\n");
    s
}

fn round_label(v: f64) -> String {
    let r = (v * 1e6).round() / 1e6;
    format!("{r}")
}
