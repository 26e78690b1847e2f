//! Serialization: vertex CSV, the 16-row legacy layout, an exact
//! transform archive, and SVG rendering with window culling.
//!
//! Every writer is byte-deterministic for a given cluster and options,
//! independent of thread count.

use std::fmt::Write as _;
use std::io::{Read, Write};

use rayon::prelude::*;
use serde::Deserialize;

use crate::cluster::{Cluster, KeyAnchor};
use crate::coords::{CycNum, Isometry, SQRT3};
use crate::error::{Error, Result};
use crate::prototile::{prototile, KEY_VERTEX_INDEX};

pub const TRANSFORMS_FORMAT: &str = "tile11.transforms";
pub const TRANSFORMS_VERSION: u32 = 1;

/// Axis-aligned window in plane units.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Window {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Window {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Window> {
        if !(x0.is_finite() && y0.is_finite() && x1.is_finite() && y1.is_finite()) {
            return Err(Error::Precondition(
                "window coordinates must be finite".into(),
            ));
        }
        if x1 <= x0 || y1 <= y0 {
            return Err(Error::Precondition(
                "window must have positive width and height".into(),
            ));
        }
        Ok(Window { x0, y0, x1, y1 })
    }

    /// Euclidean distance from a point to the rectangle (0 inside).
    fn distance_to(&self, x: f64, y: f64) -> f64 {
        let dx = (self.x0 - x).max(0.0).max(x - self.x1);
        let dy = (self.y0 - y).max(0.0).max(y - self.y1);
        (dx * dx + dy * dy).sqrt()
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.x0 && x <= self.x1 && y >= self.y0 && y <= self.y1
    }
}

#[derive(Clone, Debug)]
pub struct RenderOptions {
    pub window: Option<Window>,
    pub stroke_width: f64,
    pub show_keypoints: bool,
    /// Decimal digits for floats. The default 17 writes the shortest
    /// representation that round-trips a double exactly.
    pub precision: u8,
    /// Refusal threshold on tiles to be rendered, after culling.
    pub max_tiles: u64,
}

impl Default for RenderOptions {
    fn default() -> RenderOptions {
        RenderOptions {
            window: None,
            stroke_width: 0.05,
            show_keypoints: false,
            precision: 17,
            max_tiles: 2_147_679,
        }
    }
}

fn push_float(buf: &mut String, v: f64, precision: u8) {
    if precision >= 17 {
        let _ = write!(buf, "{v}");
    } else {
        let _ = write!(buf, "{:.*}", precision as usize, v);
    }
}

/// Streams per-tile text in tile order: tiles are formatted in parallel
/// chunks, then written sequentially, so bytes never depend on timing.
fn write_batched<W, F>(c: &Cluster, out: &mut W, per_tile: F) -> Result<()>
where
    W: Write,
    F: Fn(&mut String, usize, &[CycNum; 14]) -> Result<()> + Sync,
{
    const CHUNK: usize = 512;
    const SUPER: usize = 64 * CHUNK;
    let n = c.tiles().len();
    let mut start = 0;
    while start < n {
        let end = (start + SUPER).min(n);
        let ranges: Vec<(usize, usize)> = (start..end)
            .step_by(CHUNK)
            .map(|a| (a, (a + CHUNK).min(end)))
            .collect();
        let chunks: Vec<Result<String>> = ranges
            .par_iter()
            .map(|&(a, b)| {
                let mut buf = String::with_capacity((b - a) * 720);
                for i in a..b {
                    let poly = c.tile_vertices(i)?;
                    per_tile(&mut buf, i, &poly)?;
                }
                Ok(buf)
            })
            .collect();
        for chunk in chunks {
            out.write_all(chunk?.as_bytes())?;
        }
        start = end;
    }
    Ok(())
}

/// One `tile,vertex,x,y` row per placed vertex, tiles and vertices
/// 1-based, ordered by (tile, vertex).
pub fn export_csv<W: Write>(c: &Cluster, opts: &RenderOptions, out: &mut W) -> Result<()> {
    out.write_all(b"tile,vertex,x,y\n")?;
    let precision = opts.precision;
    write_batched(c, out, |buf, i, poly| {
        for (vi, p) in poly.iter().enumerate() {
            let (x, y) = p.to_xy();
            let _ = write!(buf, "{},{},", i + 1, vi + 1);
            push_float(buf, x, precision);
            buf.push(',');
            push_float(buf, y, precision);
            buf.push('\n');
        }
        Ok(())
    })
}

/// The flat reference layout: per tile, vertices 1..14, the closure
/// copy of vertex 1, then a literal `NaN,NaN` separator line.
pub fn export_legacy_rows<W: Write>(c: &Cluster, opts: &RenderOptions, out: &mut W) -> Result<()> {
    let precision = opts.precision;
    write_batched(c, out, |buf, _i, poly| {
        for vi in 0..15 {
            let (x, y) = poly[vi % 14].to_xy();
            push_float(buf, x, precision);
            buf.push(',');
            push_float(buf, y, precision);
            buf.push('\n');
        }
        buf.push_str("NaN,NaN\n");
        Ok(())
    })
}

/// Exact archive: a JSON document carrying every transform as
/// `[reflect, rot, a, b, c, d]` plus the key anchors. Loading it back
/// reproduces the cluster bit for bit.
pub fn export_transforms<W: Write>(c: &Cluster, iteration: Option<u32>, out: &mut W) -> Result<()> {
    let mut buf = String::with_capacity(1 << 16);
    buf.push_str("{\n\"format\":\"");
    buf.push_str(TRANSFORMS_FORMAT);
    let _ = write!(buf, "\",\n\"version\":{TRANSFORMS_VERSION},\n");
    if let Some(n) = iteration {
        let _ = writeln!(buf, "\"iteration\":{n},");
    }
    let _ = write!(buf, "\"tile_count\":{},\n\"tiles\":[", c.tiles().len());
    for (i, t) in c.tiles().iter().enumerate() {
        if i > 0 {
            buf.push(',');
        }
        let _ = write!(
            buf,
            "\n[{},{},{},{},{},{}]",
            t.reflect as u8, t.rot, t.trans.a, t.trans.b, t.trans.c, t.trans.d
        );
        if buf.len() >= 1 << 16 {
            out.write_all(buf.as_bytes())?;
            buf.clear();
        }
    }
    buf.push_str("\n],\n\"keys\":");
    match c.keys() {
        Some(keys) => {
            buf.push('[');
            for (i, k) in keys.iter().enumerate() {
                if i > 0 {
                    buf.push(',');
                }
                let _ = write!(buf, "[{},{},{}]", k.label, k.tile_ordinal, k.vertex_index);
            }
            buf.push(']');
        }
        None => buf.push_str("null"),
    }
    buf.push_str("\n}\n");
    out.write_all(buf.as_bytes())?;
    Ok(())
}

#[derive(Deserialize)]
struct TransformDoc {
    format: String,
    version: u32,
    #[serde(default)]
    iteration: Option<u32>,
    tile_count: u64,
    tiles: Vec<[i64; 6]>,
    #[serde(default)]
    keys: Option<Vec<[u64; 3]>>,
}

/// Reads a transform archive back into a cluster.
pub fn load_transforms<R: Read>(reader: R) -> Result<(Cluster, Option<u32>)> {
    let doc: TransformDoc = serde_json::from_reader(reader)?;
    if doc.format != TRANSFORMS_FORMAT {
        return Err(Error::Malformed(format!("unknown format {:?}", doc.format)));
    }
    if doc.version != TRANSFORMS_VERSION {
        return Err(Error::Malformed(format!(
            "unsupported version {}",
            doc.version
        )));
    }
    if doc.tile_count != doc.tiles.len() as u64 {
        return Err(Error::Malformed(format!(
            "tile_count {} disagrees with {} tiles",
            doc.tile_count,
            doc.tiles.len()
        )));
    }
    let mut tiles = Vec::with_capacity(doc.tiles.len());
    for (i, t) in doc.tiles.iter().enumerate() {
        let [reflect, rot, a, b, c, d] = *t;
        if !(reflect == 0 || reflect == 1) || !(0..12).contains(&rot) {
            return Err(Error::Malformed(format!("tile {}: bad transform", i + 1)));
        }
        tiles.push(Isometry::new(
            reflect == 1,
            rot as i32,
            CycNum::new(a, b, c, d),
        ));
    }
    let keys = match doc.keys {
        None => None,
        Some(raw) => {
            if raw.len() != 4 {
                return Err(Error::Malformed(format!("{} keys, need 4", raw.len())));
            }
            let mut anchors = [KeyAnchor {
                label: 1,
                tile_ordinal: 1,
                vertex_index: 4,
            }; 4];
            for (slot, k) in anchors.iter_mut().zip(&raw) {
                let [label, tile, vertex] = *k;
                *slot = KeyAnchor {
                    label: u8::try_from(label)
                        .map_err(|_| Error::Malformed("key label out of range".into()))?,
                    tile_ordinal: u32::try_from(tile)
                        .map_err(|_| Error::Malformed("key tile out of range".into()))?,
                    vertex_index: u8::try_from(vertex)
                        .map_err(|_| Error::Malformed("key vertex out of range".into()))?,
                };
            }
            Some(anchors)
        }
    };
    Ok((Cluster::new(tiles, keys)?, doc.iteration))
}

/// Cosine/sine of `k * 30` degrees, exact at the f64 level.
const COS: [f64; 12] = [
    1.0,
    SQRT3 / 2.0,
    0.5,
    0.0,
    -0.5,
    -SQRT3 / 2.0,
    -1.0,
    -SQRT3 / 2.0,
    -0.5,
    0.0,
    0.5,
    SQRT3 / 2.0,
];
const SIN: [f64; 12] = [
    0.0,
    0.5,
    SQRT3 / 2.0,
    1.0,
    SQRT3 / 2.0,
    0.5,
    0.0,
    -0.5,
    -SQRT3 / 2.0,
    -1.0,
    -SQRT3 / 2.0,
    -0.5,
];

fn float_apply(iso: &Isometry, x: f64, y: f64) -> (f64, f64) {
    let x = if iso.reflect { -x } else { x };
    let (cos, sin) = (COS[iso.rot as usize], SIN[iso.rot as usize]);
    let (tx, ty) = iso.trans.to_xy();
    (cos * x - sin * y + tx, sin * x + cos * y + ty)
}

/// SVG 1.1 rendering: one closed black path per tile, no fill, with
/// the y axis flipped so the plane's orientation is preserved on
/// screen. Tiles wholly outside the window are culled by a
/// bounding-circle test; the guard refuses oversized renders.
pub fn render_svg<W: Write>(c: &Cluster, opts: &RenderOptions, out: &mut W) -> Result<()> {
    if let Some(w) = &opts.window {
        Window::new(w.x0, w.y0, w.x1, w.y1)?;
    }
    let n = c.tiles().len();
    let ((pcx, pcy), radius) = prototile().bounding_disc();
    let kept: Vec<u32> = match &opts.window {
        None => (0..n as u32).collect(),
        Some(win) => (0..n)
            .into_par_iter()
            .filter_map(|i| {
                let (cx, cy) = float_apply(&c.tiles()[i], pcx, pcy);
                (win.distance_to(cx, cy) <= radius + 1e-9).then_some(i as u32)
            })
            .collect(),
    };
    if kept.len() as u64 > opts.max_tiles {
        return Err(Error::RenderGuardExceeded {
            tiles: kept.len() as u64,
            limit: opts.max_tiles,
        });
    }

    let bbox = kept
        .par_iter()
        .map(|&i| -> Result<[f64; 4]> {
            let poly = c.tile_vertices(i as usize)?;
            let mut b = [
                f64::INFINITY,
                f64::INFINITY,
                f64::NEG_INFINITY,
                f64::NEG_INFINITY,
            ];
            for p in &poly {
                let (x, y) = p.to_xy();
                b = [b[0].min(x), b[1].min(y), b[2].max(x), b[3].max(y)];
            }
            Ok(b)
        })
        .try_reduce(
            || {
                [
                    f64::INFINITY,
                    f64::INFINITY,
                    f64::NEG_INFINITY,
                    f64::NEG_INFINITY,
                ]
            },
            |a, b| {
                Ok([
                    a[0].min(b[0]),
                    a[1].min(b[1]),
                    a[2].max(b[2]),
                    a[3].max(b[3]),
                ])
            },
        )?;
    let bbox = if kept.is_empty() {
        [0.0, 0.0, 1.0, 1.0]
    } else {
        bbox
    };

    let precision = opts.precision;
    let margin = opts.stroke_width;
    let mut head = String::new();
    head.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    head.push_str("<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" viewBox=\"");
    // The paint group flips y, so the viewBox starts at -max_y.
    push_float(&mut head, bbox[0] - margin, precision);
    head.push(' ');
    push_float(&mut head, -bbox[3] - margin, precision);
    head.push(' ');
    push_float(&mut head, bbox[2] - bbox[0] + 2.0 * margin, precision);
    head.push(' ');
    push_float(&mut head, bbox[3] - bbox[1] + 2.0 * margin, precision);
    head.push_str("\">\n<g fill=\"none\" stroke=\"#000\" stroke-width=\"");
    push_float(&mut head, opts.stroke_width, precision);
    head.push_str("\" transform=\"matrix(1 0 0 -1 0 0)\">\n");
    out.write_all(head.as_bytes())?;

    const CHUNK: usize = 512;
    let ranges: Vec<&[u32]> = kept.chunks(CHUNK).collect();
    for batch in ranges.chunks(64) {
        let parts: Vec<Result<String>> = batch
            .par_iter()
            .map(|chunk| {
                let mut buf = String::with_capacity(chunk.len() * 640);
                for &i in *chunk {
                    let poly = c.tile_vertices(i as usize)?;
                    buf.push_str("<path d=\"");
                    for (vi, p) in poly.iter().enumerate() {
                        let (x, y) = p.to_xy();
                        buf.push(if vi == 0 { 'M' } else { 'L' });
                        push_float(&mut buf, x, precision);
                        buf.push(' ');
                        push_float(&mut buf, y, precision);
                    }
                    buf.push_str("Z\"/>\n");
                }
                Ok(buf)
            })
            .collect();
        for part in parts {
            out.write_all(part?.as_bytes())?;
        }
    }
    out.write_all(b"</g>\n")?;

    if opts.show_keypoints {
        // Red: the four key vertices of every rendered tile (the
        // candidate pool). Blue: the anchors the cluster carries.
        let mut buf = String::new();
        buf.push_str("<g stroke=\"none\" transform=\"matrix(1 0 0 -1 0 0)\">\n");
        let key_vertices: Vec<CycNum> = KEY_VERTEX_INDEX
            .iter()
            .map(|&vi| prototile().vertex(vi))
            .collect();
        for &i in &kept {
            let iso = &c.tiles()[i as usize];
            for v in &key_vertices {
                let (x, y) = iso.apply(v)?.to_xy();
                buf.push_str("<circle cx=\"");
                push_float(&mut buf, x, precision);
                buf.push_str("\" cy=\"");
                push_float(&mut buf, y, precision);
                buf.push_str("\" r=\"");
                push_float(&mut buf, opts.stroke_width * 1.5, precision);
                buf.push_str("\" fill=\"#c00\"/>\n");
            }
        }
        if c.keys().is_some() {
            for label in 1..=4 {
                let (x, y) = c.key_point(label)?.to_xy();
                buf.push_str("<circle cx=\"");
                push_float(&mut buf, x, precision);
                buf.push_str("\" cy=\"");
                push_float(&mut buf, y, precision);
                buf.push_str("\" r=\"");
                push_float(&mut buf, opts.stroke_width * 2.5, precision);
                buf.push_str("\" fill=\"#00c\"/>\n");
            }
        }
        buf.push_str("</g>\n");
        out.write_all(buf.as_bytes())?;
    }
    out.write_all(b"</svg>\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prototile::{seed_m0, seed_s0};
    use crate::substitution::run;

    fn csv_string(c: &Cluster) -> String {
        let mut out = Vec::new();
        export_csv(c, &RenderOptions::default(), &mut out).unwrap();
        String::from_utf8(out).unwrap()
    }

    #[test]
    fn csv_rows_and_values() {
        let text = csv_string(&seed_s0());
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 15);
        assert_eq!(lines[0], "tile,vertex,x,y");
        assert_eq!(lines[2], "1,2,0,1");

        let empty = Cluster::new(Vec::new(), None).unwrap();
        assert_eq!(csv_string(&empty), "tile,vertex,x,y\n");

        let s1 = run(1).unwrap();
        assert_eq!(csv_string(&s1).lines().count(), 1 + 9 * 14);
    }

    #[test]
    fn csv_respects_precision() {
        let mut out = Vec::new();
        let opts = RenderOptions {
            precision: 3,
            ..RenderOptions::default()
        };
        export_csv(&seed_s0(), &opts, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.lines().nth(2).unwrap() == "1,2,0.000,1.000");
    }

    #[test]
    fn legacy_rows_layout() {
        let mut out = Vec::new();
        export_legacy_rows(&seed_s0(), &RenderOptions::default(), &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 16);
        assert_eq!(lines[14], lines[0]);
        assert_eq!(lines[15], "NaN,NaN");

        let s2 = run(2).unwrap();
        let mut out = Vec::new();
        export_legacy_rows(&s2, &RenderOptions::default(), &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.lines().count(), 71 * 16);
    }

    #[test]
    fn legacy_rows_locate_keys() {
        // Key 1 of the first generation sits on line 38 of its layout.
        let s1 = run(1).unwrap();
        assert_eq!(s1.legacy_key_rows().unwrap()[0], 38);
        let mut out = Vec::new();
        export_legacy_rows(&s1, &RenderOptions::default(), &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let line = text.lines().nth(37).unwrap();
        let (x, y) = s1.key_point(1).unwrap().to_xy();
        let mut want = String::new();
        push_float(&mut want, x, 17);
        want.push(',');
        push_float(&mut want, y, 17);
        assert_eq!(line, want);
    }

    #[test]
    fn transforms_round_trip() {
        let m0 = seed_m0();
        let mut out = Vec::new();
        export_transforms(&m0, None, &mut out).unwrap();
        let text = String::from_utf8(out.clone()).unwrap();
        assert!(text.contains("[0,11,0,1,0,-2]"), "{text}");
        let (back, iteration) = load_transforms(out.as_slice()).unwrap();
        assert_eq!(back, m0);
        assert_eq!(iteration, None);

        let s3 = run(3).unwrap();
        let mut out = Vec::new();
        export_transforms(&s3, Some(3), &mut out).unwrap();
        let (back, iteration) = load_transforms(out.as_slice()).unwrap();
        assert_eq!(back.tiles().len(), 559);
        assert_eq!(back, s3);
        assert_eq!(iteration, Some(3));
    }

    #[test]
    fn malformed_documents_are_rejected() {
        assert!(matches!(
            load_transforms(
                br#"{"format":"other","version":1,"tile_count":0,"tiles":[]}"#.as_slice()
            ),
            Err(Error::Malformed(_))
        ));
        assert!(matches!(
            load_transforms(
                br#"{"format":"tile11.transforms","version":9,"tile_count":0,"tiles":[]}"#
                    .as_slice()
            ),
            Err(Error::Malformed(_))
        ));
        assert!(matches!(
            load_transforms(
                br#"{"format":"tile11.transforms","version":1,"tile_count":2,"tiles":[[0,0,0,0,0,0]]}"#
                    .as_slice()
            ),
            Err(Error::Malformed(_))
        ));
        assert!(matches!(
            load_transforms(
                br#"{"format":"tile11.transforms","version":1,"tile_count":1,"tiles":[[2,0,0,0,0,0]]}"#
                    .as_slice()
            ),
            Err(Error::Malformed(_))
        ));
        assert!(load_transforms(b"not json".as_slice()).is_err());
    }

    #[test]
    fn svg_seed_and_counts() {
        let mut out = Vec::new();
        render_svg(&seed_s0(), &RenderOptions::default(), &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.matches("<path").count(), 1);
        let d_start = text.find("d=\"M").unwrap();
        let d_end = text[d_start..].find("Z\"").unwrap() + d_start;
        let d = &text[d_start..d_end];
        assert_eq!(d.matches('L').count(), 13);

        let s2 = run(2).unwrap();
        let mut out = Vec::new();
        render_svg(&s2, &RenderOptions::default(), &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.matches("<path").count(), 71);
    }

    #[test]
    fn svg_window_culls_conservatively() {
        let s2 = run(2).unwrap();
        let window = Window::new(0.0, 0.0, 2.0, 2.0).unwrap();
        let opts = RenderOptions {
            window: Some(window),
            ..RenderOptions::default()
        };
        let mut out = Vec::new();
        render_svg(&s2, &opts, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let rendered = text.matches("<path").count();
        assert!(rendered < 71 && rendered > 0, "rendered {rendered}");

        // Every tile with a vertex inside the window must be rendered.
        let mut must_render = 0;
        for i in 0..s2.tiles().len() {
            let poly = s2.tile_vertices(i).unwrap();
            if poly.iter().any(|p| {
                let (x, y) = p.to_xy();
                window.contains(x, y)
            }) {
                must_render += 1;
            }
        }
        assert!(rendered >= must_render);
    }

    #[test]
    fn svg_guard_and_keypoints() {
        let s1 = run(1).unwrap();
        let opts = RenderOptions {
            max_tiles: 5,
            ..RenderOptions::default()
        };
        assert!(matches!(
            render_svg(&s1, &opts, &mut Vec::new()),
            Err(Error::RenderGuardExceeded { tiles: 9, limit: 5 })
        ));

        let opts = RenderOptions {
            show_keypoints: true,
            ..RenderOptions::default()
        };
        let mut out = Vec::new();
        render_svg(&s1, &opts, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.matches("#c00").count(), 9 * 4);
        assert_eq!(text.matches("#00c").count(), 4);
    }

    #[test]
    fn exports_are_deterministic() {
        let s2 = run(2).unwrap();
        let opts = RenderOptions::default();
        let mut a = Vec::new();
        let mut b = Vec::new();
        export_csv(&s2, &opts, &mut a).unwrap();
        export_csv(&s2, &opts, &mut b).unwrap();
        assert_eq!(a, b);
        let mut a = Vec::new();
        let mut b = Vec::new();
        render_svg(&s2, &opts, &mut a).unwrap();
        render_svg(&s2, &opts, &mut b).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn bad_windows_are_rejected() {
        assert!(Window::new(0.0, 0.0, 0.0, 1.0).is_err());
        assert!(Window::new(0.0, 0.0, -1.0, 1.0).is_err());
        assert!(Window::new(f64::NAN, 0.0, 1.0, 1.0).is_err());
    }
}
