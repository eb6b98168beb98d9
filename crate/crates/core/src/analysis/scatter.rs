use std::fmt::Write as _;
use std::path::Path;

use super::tsne::Projection2D;
use crate::{Error, Result};

const LABEL_COLORS: [&str; 2] = ["#7b3294", "#1b9e77"];
const UNLABELED_COLOR: &str = "#4d4d4d";
const SIZE: f64 = 480.0;
const MARGIN: f64 = 40.0;

pub fn write_scatter_csv(proj: &Projection2D, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    let map = |e: csv::Error| Error::Format(format!("{}: {e}", path.display()));
    w.write_record(["subject_id", "x", "y", "label"]).map_err(map)?;
    for i in 0..proj.coords.rows() {
        let label = proj.labels.as_ref().map(|l| l[i].to_string()).unwrap_or_default();
        w.write_record([
            proj.ids[i].clone(),
            format!("{:.8e}", proj.coords.get(i, 0)),
            format!("{:.8e}", proj.coords.get(i, 1)),
            label,
        ])
        .map_err(map)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads `(subject_id, x, y, label)` rows back.
pub fn read_scatter_csv(path: &Path) -> Result<Vec<(String, f64, f64, Option<u8>)>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| Error::Format(e.to_string()))?;
        let num = |k: usize| -> Result<f64> {
            rec[k].parse().map_err(|_| Error::Value(format!("bad coordinate '{}'", &rec[k])))
        };
        let label = match &rec[3] {
            "" => None,
            s => Some(s.parse().map_err(|_| Error::Value(format!("bad label '{s}'")))?),
        };
        out.push((rec[0].to_string(), num(1)?, num(2)?, label));
    }
    Ok(out)
}

/// Self-contained SVG scatter: label 0 purple, label 1 green, grey when unlabeled.
pub fn render_svg(proj: &Projection2D, title: &str) -> String {
    let n = proj.coords.rows();
    let (mut xmin, mut xmax, mut ymin, mut ymax) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..n {
        let (x, y) = (proj.coords.get(i, 0), proj.coords.get(i, 1));
        xmin = xmin.min(x);
        xmax = xmax.max(x);
        ymin = ymin.min(y);
        ymax = ymax.max(y);
    }
    let span = |lo: f64, hi: f64| if hi > lo { hi - lo } else { 1.0 };
    let inner = SIZE - 2.0 * MARGIN;
    let sx = |x: f64| MARGIN + (x - xmin) / span(xmin, xmax) * inner;
    let sy = |y: f64| SIZE - MARGIN - (y - ymin) / span(ymin, ymax) * inner;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" text-anchor="middle" font-family="sans-serif" font-size="14">{}</text>"#,
        SIZE / 2.0,
        escape(title)
    );
    let (lo, hi) = (MARGIN, SIZE - MARGIN);
    let _ = writeln!(s, r#"<line x1="{lo}" y1="{hi}" x2="{hi}" y2="{hi}" stroke="black"/>"#);
    let _ = writeln!(s, r#"<line x1="{lo}" y1="{lo}" x2="{lo}" y2="{hi}" stroke="black"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle" font-family="sans-serif" font-size="11">t-SNE 1</text>"#,
        SIZE / 2.0,
        SIZE - 12.0
    );
    let _ = writeln!(
        s,
        r#"<text x="14" y="{}" text-anchor="middle" font-family="sans-serif" font-size="11" transform="rotate(-90 14 {})">t-SNE 2</text>"#,
        SIZE / 2.0,
        SIZE / 2.0
    );
    for i in 0..n {
        let color = match &proj.labels {
            Some(l) => LABEL_COLORS[usize::from(l[i] == 1)],
            None => UNLABELED_COLOR,
        };
        let _ = writeln!(
            s,
            r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="{color}" fill-opacity="0.8"/>"#,
            sx(proj.coords.get(i, 0)),
            sy(proj.coords.get(i, 1))
        );
    }
    if proj.labels.is_some() {
        for (k, (color, name)) in LABEL_COLORS.iter().zip(["label 0 (non-risk)", "label 1 (at-risk)"]).enumerate() {
            let y = MARGIN + 14.0 * k as f64;
            let _ = writeln!(s, r#"<circle cx="{}" cy="{y}" r="4" fill="{color}"/>"#, SIZE - 150.0);
            let _ = writeln!(
                s,
                r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11">{name}</text>"#,
                SIZE - 140.0,
                y + 4.0
            );
        }
    }
    s.push_str("</svg>\n");
    s
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Writes `<stem>.csv` and `<stem>.svg` into `dir`.
pub fn export_scatter(proj: &Projection2D, dir: &Path, stem: &str, title: &str) -> Result<()> {
    if proj.ids.len() != proj.coords.rows() || proj.labels.as_ref().is_some_and(|l| l.len() != proj.ids.len()) {
        return Err(Error::Shape("ids/labels do not match the projection".into()));
    }
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_scatter_csv(proj, &dir.join(format!("{stem}.csv")))?;
    let svg = dir.join(format!("{stem}.svg"));
    std::fs::write(&svg, render_svg(proj, title)).map_err(|e| Error::io(&svg, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Matrix;

    fn proj(labels: Option<Vec<u8>>) -> Projection2D {
        Projection2D {
            coords: Matrix::from_rows(&[vec![0.1, -2.5], vec![1.0 / 3.0, 7.0], vec![-4.0e-5, 1e6]]).unwrap(),
            ids: vec!["a".into(), "b".into(), "c".into()],
            labels,
            kl_trace: vec![0.5],
            perplexity: 1.0,
        }
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = proj(Some(vec![0, 1, 1]));
        export_scatter(&p, dir.path(), "raw", "Raw").unwrap();
        let text = std::fs::read_to_string(dir.path().join("raw.csv")).unwrap();
        assert_eq!(text.lines().count(), 4);
        assert!(text.starts_with("subject_id,x,y,label\n"));
        let rows = read_scatter_csv(&dir.path().join("raw.csv")).unwrap();
        for (i, (id, x, y, l)) in rows.iter().enumerate() {
            assert_eq!(id, &p.ids[i]);
            assert!((x - p.coords.get(i, 0)).abs() <= 1e-8 * p.coords.get(i, 0).abs());
            assert!((y - p.coords.get(i, 1)).abs() <= 1e-8 * p.coords.get(i, 1).abs());
            assert_eq!(*l, Some(p.labels.as_ref().unwrap()[i]));
        }
        let svg = std::fs::read_to_string(dir.path().join("raw.svg")).unwrap();
        assert!(svg.contains(LABEL_COLORS[0]) && svg.contains(LABEL_COLORS[1]));
    }

    #[test]
    fn unlabeled_points_use_one_color() {
        let dir = tempfile::tempdir().unwrap();
        export_scatter(&proj(None), dir.path(), "p", "Pre-logit").unwrap();
        let rows = read_scatter_csv(&dir.path().join("p.csv")).unwrap();
        assert!(rows.iter().all(|r| r.3.is_none()));
        let svg = std::fs::read_to_string(dir.path().join("p.svg")).unwrap();
        assert!(!svg.contains(LABEL_COLORS[0]) && !svg.contains(LABEL_COLORS[1]));
        assert_eq!(svg.matches("<circle").count(), 3);
    }
}
