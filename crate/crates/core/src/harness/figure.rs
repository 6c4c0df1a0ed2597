use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::PolarImage;
use crate::io::write_text;
use crate::sampler::CredibleBand;

const SIZE: f64 = 500.0;

fn to_canvas(omega: f64, r: f64) -> (f64, f64) {
    ((0.5 + r * omega.cos()) * SIZE, (0.5 - r * omega.sin()) * SIZE)
}

fn points_attr(points: &[(f64, f64)]) -> String {
    let mut s = String::new();
    for (i, (x, y)) in points.iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        let _ = write!(s, "{x:.2},{y:.2}");
    }
    s
}

/// Closed curve on the canvas: `n + 1` vertices.
fn closed_curve(grid: &[f64], radii: &[f64]) -> Vec<(f64, f64)> {
    let mut pts: Vec<_> = grid.iter().zip(radii).map(|(&w, &r)| to_canvas(w, r)).collect();
    pts.push(pts[0]);
    pts
}

/// Upper edge forward, lower edge backward, then the first vertex again.
pub fn band_polygon(band: &CredibleBand) -> Vec<(f64, f64)> {
    let mut pts: Vec<_> = band.grid.iter().zip(band.upper()).map(|(&w, r)| to_canvas(w, r)).collect();
    let lower: Vec<_> = band.grid.iter().zip(band.lower()).map(|(&w, r)| to_canvas(w, r)).collect();
    pts.extend(lower.into_iter().rev());
    pts.push(pts[0]);
    pts
}

/// SVG with pixels shaded by intensity, the band in gray, the truth dotted
/// black and the estimate solid red.
pub fn figure_svg(image: &PolarImage, grid: &[f64], truth: &[f64], estimate: &[f64], band: Option<&CredibleBand>) -> Result<String> {
    if grid.is_empty() || truth.len() != grid.len() || estimate.len() != grid.len() {
        return Err(Error::InvalidParameter("truth and estimate must share a non-empty grid".into()));
    }
    if let Some(b) = band {
        if b.grid.len() != grid.len() {
            return Err(Error::InvalidParameter("band grid differs from curve grid".into()));
        }
    }
    let ys = image.intensities();
    let lo = ys.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ys.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    let cell = SIZE / (image.len().max(1) as f64).sqrt();

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#);
    let _ = writeln!(s, r#"<rect width="{SIZE}" height="{SIZE}" fill="white"/>"#);
    s.push_str("<g id=\"pixels\">\n");
    for p in &image.observations {
        let (x, y) = to_canvas(p.omega, p.r);
        let shade = (255.0 * (1.0 - (p.y - lo) / span)).round() as u8;
        let _ = writeln!(s, r#"<circle cx="{x:.2}" cy="{y:.2}" r="{:.2}" fill="rgb({shade},{shade},{shade})"/>"#, cell * 0.5);
    }
    s.push_str("</g>\n");
    if let Some(b) = band {
        let _ = writeln!(s, r#"<polygon id="band" points="{}" fill="gray" fill-opacity="0.5" fill-rule="evenodd" stroke="none"/>"#, points_attr(&band_polygon(b)));
    }
    let _ = writeln!(
        s,
        r#"<polyline id="truth" points="{}" fill="none" stroke="black" stroke-width="2" stroke-dasharray="2,3"/>"#,
        points_attr(&closed_curve(grid, truth))
    );
    let _ = writeln!(s, r#"<polyline id="estimate" points="{}" fill="none" stroke="red" stroke-width="2"/>"#, points_attr(&closed_curve(grid, estimate)));
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn render_figure(
    image: &PolarImage,
    grid: &[f64],
    truth: &[f64],
    estimate: &[f64],
    band: Option<&CredibleBand>,
    path: &Path,
) -> Result<()> {
    write_text(path, &figure_svg(image, grid, truth, estimate, band)?)
}
