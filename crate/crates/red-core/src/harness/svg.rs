//! Minimal deterministic SVG line charts; no plotting dependencies.

/// One chart series: a polyline plus an optional shaded band.
#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    /// Optional (x, lo, hi) band, drawn at 15% opacity under the line.
    pub band: Option<Vec<(f64, f64, f64)>>,
}

const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
];

const W: f64 = 720.0;
const H: f64 = 440.0;
const ML: f64 = 64.0;
const MR: f64 = 20.0;
const MT: f64 = 40.0;
const MB: f64 = 48.0;

fn fmt(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    let a = v.abs();
    if (0.001..100_000.0).contains(&a) {
        let s = format!("{v:.3}");
        let s = s.trim_end_matches('0').trim_end_matches('.');
        s.to_string()
    } else {
        format!("{v:.2e}")
    }
}

/// Render a line chart. Output depends only on the inputs.
pub fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let mut xs: Vec<f64> = Vec::new();
    let mut ys: Vec<f64> = Vec::new();
    for s in series {
        for &(x, y) in &s.points {
            xs.push(x);
            ys.push(y);
        }
        if let Some(band) = &s.band {
            for &(x, lo, hi) in band {
                xs.push(x);
                ys.push(lo);
                ys.push(hi);
            }
        }
    }
    let (mut x0, mut x1) = bounds(&xs);
    let (mut y0, mut y1) = bounds(&ys);
    if x0 == x1 {
        x0 -= 1.0;
        x1 += 1.0;
    }
    if y0 == y1 {
        y0 -= 1.0;
        y1 += 1.0;
    }
    let pad = 0.04 * (y1 - y0);
    y0 -= pad;
    y1 += pad;

    let sx = |x: f64| ML + (x - x0) / (x1 - x0) * (W - ML - MR);
    let sy = |y: f64| H - MB - (y - y0) / (y1 - y0) * (H - MT - MB);

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" \
         viewBox=\"0 0 {W} {H}\" font-family=\"sans-serif\" font-size=\"12\">\n"
    ));
    svg.push_str(&format!(
        "<rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n\
         <text x=\"{:.1}\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">{}</text>\n",
        ML + (W - ML - MR) / 2.0,
        escape(title)
    ));

    // Axes and ticks.
    svg.push_str(&format!(
        "<line x1=\"{ML}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"#333\"/>\n\
         <line x1=\"{ML}\" y1=\"{MT}\" x2=\"{ML}\" y2=\"{:.1}\" stroke=\"#333\"/>\n",
        H - MB,
        W - MR,
        H - MB,
        H - MB
    ));
    for i in 0..=4 {
        let fx = x0 + (x1 - x0) * i as f64 / 4.0;
        let fy = y0 + (y1 - y0) * i as f64 / 4.0;
        svg.push_str(&format!(
            "<line x1=\"{:.1}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"#333\"/>\n\
             <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>\n",
            sx(fx),
            H - MB,
            sx(fx),
            H - MB + 5.0,
            sx(fx),
            H - MB + 18.0,
            fmt(fx)
        ));
        svg.push_str(&format!(
            "<line x1=\"{:.1}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"#333\"/>\n\
             <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{}</text>\n",
            ML - 5.0,
            sy(fy),
            ML,
            sy(fy),
            ML - 8.0,
            sy(fy) + 4.0,
            fmt(fy)
        ));
        svg.push_str(&format!(
            "<line x1=\"{ML}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"#eee\"/>\n",
            sy(fy),
            W - MR,
            sy(fy)
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>\n\
         <text x=\"16\" y=\"{:.1}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {:.1})\">{}</text>\n",
        ML + (W - ML - MR) / 2.0,
        H - 10.0,
        escape(x_label),
        MT + (H - MT - MB) / 2.0,
        MT + (H - MT - MB) / 2.0,
        escape(y_label)
    ));

    for (si, s) in series.iter().enumerate() {
        let color = PALETTE[si % PALETTE.len()];
        if let Some(band) = &s.band {
            if band.len() > 1 {
                let mut d = String::from("<polygon points=\"");
                for &(x, _, hi) in band {
                    d.push_str(&format!("{:.1},{:.1} ", sx(x), sy(hi)));
                }
                for &(x, lo, _) in band.iter().rev() {
                    d.push_str(&format!("{:.1},{:.1} ", sx(x), sy(lo)));
                }
                d.push_str(&format!("\" fill=\"{color}\" fill-opacity=\"0.15\" stroke=\"none\"/>\n"));
                svg.push_str(&d);
            }
        }
        if s.points.len() == 1 {
            let (x, y) = s.points[0];
            svg.push_str(&format!(
                "<circle cx=\"{:.1}\" cy=\"{:.1}\" r=\"3\" fill=\"{color}\"/>\n",
                sx(x),
                sy(y)
            ));
        } else if !s.points.is_empty() {
            let mut d = String::from("<polyline points=\"");
            for &(x, y) in &s.points {
                d.push_str(&format!("{:.1},{:.1} ", sx(x), sy(y)));
            }
            d.push_str(&format!(
                "\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.8\"/>\n"
            ));
            svg.push_str(&d);
        }
        // Legend entry.
        let ly = MT + 6.0 + 16.0 * si as f64;
        svg.push_str(&format!(
            "<rect x=\"{:.1}\" y=\"{:.1}\" width=\"10\" height=\"10\" fill=\"{color}\"/>\n\
             <text x=\"{:.1}\" y=\"{:.1}\">{}</text>\n",
            W - MR - 150.0,
            ly,
            W - MR - 135.0,
            ly + 9.0,
            escape(&s.label)
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

fn bounds(vals: &[f64]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in vals {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() || !hi.is_finite() {
        (0.0, 1.0)
    } else {
        (lo, hi)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chart_is_deterministic_and_has_one_polyline_per_series() {
        let series = vec![
            Series {
                label: "a".into(),
                points: vec![(0.0, 0.1), (1.0, 0.4), (2.0, 0.5)],
                band: Some(vec![(0.0, 0.0, 0.2), (1.0, 0.3, 0.5), (2.0, 0.4, 0.6)]),
            },
            Series {
                label: "b".into(),
                points: vec![(0.0, 0.2), (2.0, 0.3)],
                band: None,
            },
        ];
        let a = line_chart("t", "x", "y", &series);
        let b = line_chart("t", "x", "y", &series);
        assert_eq!(a, b);
        assert_eq!(a.matches("<polyline").count(), 2);
        assert_eq!(a.matches("<polygon").count(), 1);
    }

    #[test]
    fn single_point_renders_a_marker() {
        let series = vec![Series {
            label: "p".into(),
            points: vec![(1.0, 1.0)],
            band: None,
        }];
        let svg = line_chart("t", "x", "y", &series);
        assert!(svg.contains("<circle"));
    }
}
