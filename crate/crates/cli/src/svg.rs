//! Eigenvalue scatter plots as standalone SVG.
//!
//! The output is a pure function of its inputs: coordinates are printed with
//! fixed precision and nothing time-dependent is written. Run metadata goes
//! into a `<metadata>` element ahead of the drawing.

use std::fmt::Write;

use weyl_lab_core::experiments::{Region, Shape};
use weyl_lab_core::Complex64;

const PLOT_SIZE: f64 = 560.0;
const PAD_LEFT: f64 = 64.0;
const PAD_RIGHT: f64 = 24.0;
const PAD_TOP: f64 = 24.0;
const PAD_BOTTOM: f64 = 52.0;
const MARKER_RADIUS: f64 = 1.6;

/// Axis-aligned window in the complex plane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Viewport {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl Viewport {
    /// `[re_min, re_max, im_min, im_max]` widened by `margin` times each extent.
    pub fn around(bounds: [f64; 4], margin: f64) -> Self {
        let [a, b, c, d] = bounds;
        let (dw, dh) = (margin * (b - a), margin * (d - c));
        Self {
            re_min: a - dw,
            re_max: b + dw,
            im_min: c - dh,
            im_max: d + dh,
        }
    }

    fn scale(&self) -> f64 {
        PLOT_SIZE / (self.re_max - self.re_min).max(self.im_max - self.im_min)
    }

    fn width(&self) -> f64 {
        (self.re_max - self.re_min) * self.scale()
    }

    fn height(&self) -> f64 {
        (self.im_max - self.im_min) * self.scale()
    }

    fn px(&self, w: Complex64) -> (f64, f64) {
        let s = self.scale();
        (
            PAD_LEFT + (w.re - self.re_min) * s,
            PAD_TOP + (self.im_max - w.im) * s,
        )
    }
}

/// Tick positions at a 1-2-5 step giving roughly five intervals.
fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let raw = (hi - lo) / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|&s| s >= raw)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn label(x: f64) -> String {
    let s = format!("{:.2}", x);
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.to_string()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

pub fn scatter(
    points: &[Complex64],
    view: Viewport,
    overlay: Option<&Region>,
    metadata: &str,
) -> String {
    let (w, h) = (view.width(), view.height());
    let total_w = PAD_LEFT + w + PAD_RIGHT;
    let total_h = PAD_TOP + h + PAD_BOTTOM;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{total_w:.0}" height="{total_h:.0}" viewBox="0 0 {total_w:.2} {total_h:.2}">"#
    );
    let _ = writeln!(s, "<metadata>{}</metadata>", escape(metadata));
    let _ = writeln!(
        s,
        r#"<defs><clipPath id="plot"><rect x="{PAD_LEFT:.2}" y="{PAD_TOP:.2}" width="{w:.2}" height="{h:.2}"/></clipPath></defs>"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);

    let _ = writeln!(s, r##"<g stroke="#ddd" stroke-width="0.5">"##);
    let mut tick_labels = String::new();
    for x in ticks(view.re_min, view.re_max) {
        let (px, _) = view.px(Complex64::new(x, view.im_min));
        let _ = writeln!(
            s,
            r#"<line x1="{px:.2}" y1="{PAD_TOP:.2}" x2="{px:.2}" y2="{:.2}"/>"#,
            PAD_TOP + h
        );
        let _ = writeln!(
            tick_labels,
            r#"<text x="{px:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            PAD_TOP + h + 16.0,
            label(x)
        );
    }
    for y in ticks(view.im_min, view.im_max) {
        let (_, py) = view.px(Complex64::new(view.re_min, y));
        let _ = writeln!(
            s,
            r#"<line x1="{PAD_LEFT:.2}" y1="{py:.2}" x2="{:.2}" y2="{py:.2}"/>"#,
            PAD_LEFT + w
        );
        let _ = writeln!(
            tick_labels,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            PAD_LEFT - 6.0,
            py + 4.0,
            label(y)
        );
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(
        s,
        r#"<rect x="{PAD_LEFT:.2}" y="{PAD_TOP:.2}" width="{w:.2}" height="{h:.2}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(s, r#"<g font-family="sans-serif" font-size="11">"#);
    s.push_str(&tick_labels);
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">Re</text>"#,
        PAD_LEFT + w / 2.0,
        total_h - 12.0
    );
    let _ = writeln!(
        s,
        r#"<text x="14" y="{:.2}" text-anchor="middle" transform="rotate(-90 14 {:.2})">Im</text>"#,
        PAD_TOP + h / 2.0,
        PAD_TOP + h / 2.0
    );
    let _ = writeln!(s, "</g>");

    if let Some(region) = overlay {
        let style = r##"fill="none" stroke="#d62728" stroke-width="1.2""##;
        match region.shape {
            Shape::Rect {
                re_min,
                re_max,
                im_min,
                im_max,
            } => {
                let (x0, y0) = view.px(Complex64::new(re_min, im_max));
                let (x1, y1) = view.px(Complex64::new(re_max, im_min));
                let _ = writeln!(
                    s,
                    r#"<rect clip-path="url(#plot)" x="{x0:.2}" y="{y0:.2}" width="{:.2}" height="{:.2}" {style}/>"#,
                    x1 - x0,
                    y1 - y0
                );
            }
            Shape::Disc { center, radius } => {
                let (cx, cy) = view.px(center);
                let _ = writeln!(
                    s,
                    r#"<circle clip-path="url(#plot)" cx="{cx:.2}" cy="{cy:.2}" r="{:.2}" {style}/>"#,
                    radius * view.scale()
                );
            }
        }
    }

    let _ = writeln!(s, r#"<g clip-path="url(#plot)" fill="black">"#);
    for &z in points {
        let (x, y) = view.px(z);
        let _ = writeln!(
            s,
            r#"<circle cx="{x:.2}" cy="{y:.2}" r="{MARKER_RADIUS}"/>"#
        );
    }
    let _ = writeln!(s, "</g>");
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn viewport_margin_and_mapping() {
        let v = Viewport::around([-1.0, 1.0, -1.0, 1.0], 0.1);
        assert_eq!((v.re_min, v.re_max), (-1.2, 1.2));
        let (x, y) = v.px(Complex64::new(-1.2, 1.2));
        assert_eq!((x, y), (PAD_LEFT, PAD_TOP));
        let (x, y) = v.px(Complex64::new(1.2, -1.2));
        assert!((x - PAD_LEFT - PLOT_SIZE).abs() < 1e-9 && (y - PAD_TOP - PLOT_SIZE).abs() < 1e-9);
    }

    #[test]
    fn ticks_are_round() {
        assert_eq!(ticks(-1.2, 1.2), vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        assert_eq!(label(-0.0), "0");
        assert_eq!(label(0.5), "0.5");
    }

    #[test]
    fn one_marker_per_point_and_deterministic() {
        let pts: Vec<Complex64> = (0..7)
            .map(|k| Complex64::new(k as f64 / 10.0, -0.3))
            .collect();
        let v = Viewport::around([-1.0, 1.0, -1.0, 1.0], 0.1);
        let region = Region::rect((-0.5, 0.5), (-0.5, 0.5), 0.1).unwrap();
        let a = scatter(&pts, v, Some(&region), "{\"N\":7}");
        assert_eq!(a, scatter(&pts, v, Some(&region), "{\"N\":7}"));
        assert_eq!(a.matches("r=\"1.6\"").count(), 7);
        assert!(a.contains("stroke=\"#d62728\""));
        assert!(a.starts_with("<svg") && a.ends_with("</svg>\n"));
    }
}
