//! Static SVG figures.

use std::fmt::Write as _;

const W: f64 = 640.0;
const H: f64 = 420.0;
const PAD: f64 = 56.0;

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn fit(xs: impl Iterator<Item = f64> + Clone, ys: impl Iterator<Item = f64> + Clone) -> Self {
        let range = |v: &mut dyn Iterator<Item = f64>| {
            let (lo, hi) = v.filter(|x| x.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
            if lo.is_finite() && hi > lo { (lo, hi) } else if lo.is_finite() { (lo - 0.5, lo + 0.5) } else { (0.0, 1.0) }
        };
        Self { x: range(&mut xs.clone()), y: range(&mut ys.clone()) }
    }

    fn px(&self, x: f64) -> f64 {
        PAD + (x - self.x.0) / (self.x.1 - self.x.0) * (W - 2.0 * PAD)
    }

    fn py(&self, y: f64) -> f64 {
        H - PAD - (y - self.y.0) / (self.y.1 - self.y.0) * (H - 2.0 * PAD)
    }

    fn axes(&self, s: &mut String, title: &str, xlabel: &str, ylabel: &str) {
        let _ = write!(
            s,
            r##"<rect x="{PAD}" y="{PAD}" width="{}" height="{}" fill="none" stroke="#444"/>"##,
            W - 2.0 * PAD,
            H - 2.0 * PAD
        );
        let _ = write!(s, r#"<text x="{}" y="28" text-anchor="middle" font-size="15">{}</text>"#, W / 2.0, escape(title));
        let _ = write!(s, r#"<text x="{}" y="{}" text-anchor="middle" font-size="12">{}</text>"#, W / 2.0, H - 14.0, escape(xlabel));
        let _ = write!(
            s,
            r#"<text x="16" y="{}" text-anchor="middle" font-size="12" transform="rotate(-90 16 {})">{}</text>"#,
            H / 2.0,
            H / 2.0,
            escape(ylabel)
        );
        for (v, anchor, x, y) in [
            (self.x.0, "start", PAD, H - PAD + 16.0),
            (self.x.1, "end", W - PAD, H - PAD + 16.0),
            (self.y.0, "end", PAD - 4.0, H - PAD),
            (self.y.1, "end", PAD - 4.0, PAD + 10.0),
        ] {
            let _ = write!(s, r#"<text x="{x}" y="{y}" text-anchor="{anchor}" font-size="11">{v:.3}</text>"#);
        }
    }
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn open() -> String {
    format!(r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif">"#)
}

/// One polyline per path over the shared abscissa `xs`.
pub fn series_paths(title: &str, xs: &[f64], paths: &[Vec<f64>]) -> String {
    let frame = Frame::fit(xs.iter().copied(), paths.iter().flatten().copied());
    let mut s = open();
    frame.axes(&mut s, title, "scaled time s", "J");
    for (i, p) in paths.iter().enumerate() {
        let hue = (i * 47) % 360;
        let pts: Vec<String> = xs.iter().zip(p).map(|(&x, &y)| format!("{:.2},{:.2}", frame.px(x), frame.py(y))).collect();
        let _ = write!(s, r#"<polyline fill="none" stroke="hsl({hue},60%,45%)" stroke-width="1.2" points="{}"/>"#, pts.join(" "));
        if xs.len() == 1 {
            let _ = write!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="2" fill="hsl({hue},60%,45%)"/>"#, frame.px(xs[0]), frame.py(p[0]));
        }
    }
    s.push_str("</svg>\n");
    s
}

/// Quantiles of `sample` against matching quantiles of `reference`.
pub fn qq(title: &str, sample: &[f64], reference: &[f64]) -> String {
    let mut a = sample.to_vec();
    let mut b = reference.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let k = a.len().min(200);
    let pick = |v: &[f64], p: f64| v[((p * (v.len() - 1) as f64).round() as usize).min(v.len() - 1)];
    // the extreme 1% is dropped so heavy tails do not flatten the body
    let pairs: Vec<(f64, f64)> =
        (0..k).map(|i| 0.01 + 0.98 * (i as f64 + 0.5) / k as f64).map(|p| (pick(&b, p), pick(&a, p))).collect();
    let both = pairs.iter().flat_map(|&(x, y)| [x, y]);
    let frame = Frame::fit(both.clone(), both);
    let mut s = open();
    frame.axes(&mut s, title, "reference quantile", "sample quantile");
    let (lo, hi) = (frame.x.0.max(frame.y.0), frame.x.1.min(frame.y.1));
    let _ = write!(
        s,
        r##"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#999" stroke-dasharray="4 3"/>"##,
        frame.px(lo),
        frame.py(lo),
        frame.px(hi),
        frame.py(hi)
    );
    for (x, y) in pairs {
        let _ = write!(s, r##"<circle cx="{:.2}" cy="{:.2}" r="2.2" fill="#1f5fa8"/>"##, frame.px(x), frame.py(y));
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn figures_are_well_formed() {
        let s = series_paths("paths", &[0.0, 1.0], &[vec![0.1, 0.3], vec![-0.2, 0.0]]);
        assert!(s.starts_with("<svg") && s.trim_end().ends_with("</svg>"));
        assert_eq!(s.matches("<polyline").count(), 2);
        let sample: Vec<f64> = (0..100).map(f64::from).collect();
        let q = qq("qq", &sample, &sample);
        assert_eq!(q.matches("<circle").count(), 100);
    }
}
