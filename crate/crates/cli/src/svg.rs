use std::fmt::Write as _;

use finblock::channel_bounds::BoundPoint;

use crate::output::fmt_sig;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const COLORS: &[&str] = &[
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf",
];

pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

impl Series {
    /// One series per (channel, method, kind), in first-seen order.
    pub fn group(points: &[BoundPoint]) -> Vec<Series> {
        let mut out: Vec<Series> = Vec::new();
        for p in points {
            let label = format!("{} {} {}", p.channel, p.method, p.kind);
            match out.iter_mut().find(|s| s.label == label) {
                Some(s) => s.points.push((p.n as f64, p.rate)),
                None => out.push(Series {
                    label,
                    points: vec![(p.n as f64, p.rate)],
                }),
            }
        }
        out
    }
}

pub struct Marker {
    pub x: f64,
    pub label: String,
}

fn nice_step(span: f64, target: usize) -> f64 {
    let raw = span / target as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let f = raw / mag;
    let nice = if f < 1.5 {
        1.0
    } else if f < 3.0 {
        2.0
    } else if f < 7.0 {
        5.0
    } else {
        10.0
    };
    nice * mag
}

fn linear_ticks(lo: f64, hi: f64) -> Vec<f64> {
    let step = nice_step(hi - lo, 6);
    let mut t = (lo / step).ceil() * step;
    let mut ticks = Vec::new();
    while t <= hi + 1e-9 * step {
        ticks.push(if t.abs() < 1e-12 * step { 0.0 } else { t });
        t += step;
    }
    ticks
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Self-contained line plot of rate against blocklength.
pub fn plot(title: &str, series: &[Series], markers: &[Marker], log_x: bool) -> String {
    let xs = series.iter().flat_map(|s| s.points.iter().map(|p| p.0));
    let ys = series
        .iter()
        .flat_map(|s| s.points.iter().map(|p| p.1))
        .filter(|y| y.is_finite());
    let (mut x_lo, mut x_hi) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| {
        (a.min(x), b.max(x))
    });
    let (y_min, y_max) = ys.fold((0.0f64, f64::NEG_INFINITY), |(a, b), y| {
        (a.min(y), b.max(y))
    });
    if !x_lo.is_finite() {
        (x_lo, x_hi) = (1.0, 10.0);
    }
    if x_hi <= x_lo {
        x_hi = x_lo + 1.0;
    }
    // negative second-order rates at tiny n are clipped rather than stretching the axis
    let y_lo = if y_max > 0.0 { 0.0 } else { y_min };
    let y_hi = if y_max.is_finite() && y_max > y_lo {
        y_max + 0.05 * (y_max - y_lo)
    } else {
        y_lo + 1.0
    };
    let fx = |x: f64| {
        let t = if log_x {
            (x.log10() - x_lo.log10()) / (x_hi.log10() - x_lo.log10())
        } else {
            (x - x_lo) / (x_hi - x_lo)
        };
        LEFT + t * (WIDTH - LEFT - RIGHT)
    };
    let fy = |y: f64| HEIGHT - BOTTOM - (y - y_lo) / (y_hi - y_lo) * (HEIGHT - TOP - BOTTOM);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        s,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        s,
        r#"<defs><clipPath id="plot"><rect x="{LEFT}" y="{TOP}" width="{}" height="{}"/></clipPath></defs>"#,
        WIDTH - LEFT - RIGHT,
        HEIGHT - TOP - BOTTOM
    );
    let _ = writeln!(
        s,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
        (LEFT + WIDTH - RIGHT) / 2.0,
        escape(title)
    );
    let (x0, x1, y0, y1) = (LEFT, WIDTH - RIGHT, HEIGHT - BOTTOM, TOP);
    let _ = writeln!(
        s,
        r#"<rect x="{x0}" y="{y1}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        x1 - x0,
        y0 - y1
    );

    let x_ticks: Vec<f64> = if log_x {
        let (a, b) = (x_lo.log10().floor() as i32, x_hi.log10().ceil() as i32);
        (a..=b)
            .map(|k| 10f64.powi(k))
            .filter(|&t| t >= x_lo && t <= x_hi)
            .collect()
    } else {
        linear_ticks(x_lo, x_hi)
    };
    for t in x_ticks {
        let x = fx(t);
        let _ = writeln!(
            s,
            r#"<line x1="{x:.2}" y1="{y0}" x2="{x:.2}" y2="{}" stroke="black"/>"#,
            y0 + 5.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{x:.2}" y="{}" text-anchor="middle">{}</text>"#,
            y0 + 18.0,
            fmt_sig(t, 6)
        );
    }
    for t in linear_ticks(y_lo, y_hi) {
        let y = fy(t);
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{y:.2}" x2="{x0}" y2="{y:.2}" stroke="black"/>"#,
            x0 - 5.0
        );
        let _ = writeln!(
            s,
            r##"<line x1="{x0}" y1="{y:.2}" x2="{x1}" y2="{y:.2}" stroke="#dddddd"/>"##
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#,
            x0 - 8.0,
            y + 4.0,
            fmt_sig(t, 6)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">number of channel uses, n</text>"#,
        (x0 + x1) / 2.0,
        HEIGHT - 15.0
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{0}" text-anchor="middle" transform="rotate(-90 18 {0})">rate, R</text>"#,
        (y0 + y1) / 2.0
    );

    for (i, ser) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let pts: Vec<String> = ser
            .points
            .iter()
            .filter(|p| p.1.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", fx(x), fy(y)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline clip-path="url(#plot)" fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            pts.join(" ")
        );
        let ly = TOP + 10.0 + 18.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#,
            x1 + 10.0,
            x1 + 30.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}">{}</text>"#,
            x1 + 35.0,
            ly + 4.0,
            escape(&ser.label)
        );
    }
    for m in markers {
        if m.x < x_lo || m.x > x_hi {
            continue;
        }
        let x = fx(m.x);
        let _ = writeln!(
            s,
            r#"<line x1="{x:.2}" y1="{y0}" x2="{x:.2}" y2="{y1}" stroke="gray" stroke-dasharray="4 3"/>"#
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{}">{}</text>"#,
            x + 4.0,
            y1 + 14.0,
            escape(&m.label)
        );
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ticks_cover_range() {
        let t = linear_ticks(0.0, 2000.0);
        assert_eq!(t.first(), Some(&0.0));
        assert_eq!(t.last(), Some(&2000.0));
        assert!(linear_ticks(0.0, 0.93).len() >= 4);
    }

    #[test]
    fn plot_has_axes_and_series() {
        let series = vec![Series {
            label: "a <b>".into(),
            points: vec![(1.0, 0.1), (10.0, 0.4), (100.0, 0.5)],
        }];
        let m = [Marker {
            x: 20.0,
            label: "N0 = 20".into(),
        }];
        let out = plot("t", &series, &m, true);
        assert!(out.starts_with("<svg"));
        assert!(out.contains("number of channel uses, n"));
        assert!(out.contains("rate, R"));
        assert!(out.contains("a &lt;b&gt;"));
        assert!(out.contains("N0 = 20"));
        assert_eq!(out.matches("<polyline").count(), 1);
    }
}
