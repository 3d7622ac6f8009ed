//! Output files: JSON-lines traces, CSV dumps, JSON summaries and contour
//! plots. Numbers are written with `.` as decimal separator and no
//! time-dependent content, so identical runs give identical files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use maeigen::{ConvexDomain, GridFunction, IterationTrace, Point};
use serde_json::Value;

use crate::CliError;

/// Ten level colors, coolest for the lowest level.
pub const PALETTE: [&str; 10] = [
    "#313695", "#4575b4", "#74add1", "#abd9e9", "#e0f3f8", "#fee090", "#fdae61", "#f46d43", "#d73027", "#a50026",
];

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

pub fn prepare_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| io_error(dir, e))
}

fn write(path: &Path, text: &str) -> Result<PathBuf, CliError> {
    fs::write(path, text).map_err(|e| io_error(path, e))?;
    Ok(path.to_path_buf())
}

/// 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_trace(path: &Path, trace: &IterationTrace) -> Result<PathBuf, CliError> {
    let mut text = String::new();
    for r in &trace.records {
        text.push_str(&serde_json::to_string(r).expect("trace records serialize"));
        text.push('\n');
    }
    write(path, &text)
}

/// One row per interior node: `x,u` in 1D, `x,y,u` in 2D.
pub fn write_solution(path: &Path, u: &GridFunction) -> Result<PathBuf, CliError> {
    let grid = u.grid();
    let mut text = String::from(if grid.dim() == 1 { "x,u\n" } else { "x,y,u\n" });
    for (p, v) in grid.nodes().iter().zip(u.values()) {
        if grid.dim() == 1 {
            let _ = writeln!(text, "{},{}", num(p[0]), num(*v));
        } else {
            let _ = writeln!(text, "{},{},{}", num(p[0]), num(p[1]), num(*v));
        }
    }
    write(path, &text)
}

/// Reads back a solution file as `(point, value)` rows.
pub fn read_solution(path: &Path) -> Result<Vec<(Point, f64)>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    let mut lines = text.lines();
    let cols = match lines.next() {
        Some("x,u") => 2,
        Some("x,y,u") => 3,
        other => return Err(CliError::Usage(format!("{}: unexpected header {other:?}", path.display()))),
    };
    lines
        .map(|line| {
            let f: Vec<f64> = line
                .split(',')
                .map(|w| w.parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| CliError::Usage(format!("{}: bad row '{line}': {e}", path.display())))?;
            match (cols, f.as_slice()) {
                (2, [x, u]) => Ok(([*x, 0.0], *u)),
                (3, [x, y, u]) => Ok(([*x, *y], *u)),
                _ => Err(CliError::Usage(format!("{}: bad row '{line}'", path.display()))),
            }
        })
        .collect()
}

pub fn write_csv(path: &Path, header: &str, rows: &[Vec<String>]) -> Result<PathBuf, CliError> {
    let mut text = format!("{header}\n");
    for row in rows {
        text.push_str(&row.join(","));
        text.push('\n');
    }
    write(path, &text)
}

pub fn write_json(path: &Path, value: &Value) -> Result<PathBuf, CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("summary serializes");
    text.push('\n');
    write(path, &text)
}

/// Ten equispaced levels strictly between the extreme values of `u`.
pub fn levels(u: &GridFunction) -> Vec<f64> {
    let (lo, hi) = u.values().iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let (lo, hi) = (lo.min(0.0), hi.max(0.0));
    (1..=10).map(|i| lo + (hi - lo) * i as f64 / 11.0).collect()
}

pub fn write_contour(path: &Path, u: &GridFunction) -> Result<PathBuf, CliError> {
    let svg = if u.grid().dim() == 1 { profile_svg(u) } else { contour_svg(u) };
    write(path, &svg)
}

const SIZE: f64 = 480.0;
const MARGIN: f64 = 20.0;

struct Frame {
    lo: Point,
    scale: f64,
}

impl Frame {
    fn new(lo: Point, hi: Point) -> Self {
        let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(1e-300);
        Self { lo, scale: (SIZE - 2.0 * MARGIN) / span }
    }

    fn map(&self, p: Point) -> (f64, f64) {
        (MARGIN + (p[0] - self.lo[0]) * self.scale, SIZE - MARGIN - (p[1] - self.lo[1]) * self.scale)
    }
}

fn svg_header() -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SIZE}\" height=\"{SIZE}\" viewBox=\"0 0 {SIZE} {SIZE}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    )
}

fn outline(domain: &ConvexDomain, frame: &Frame) -> String {
    match domain {
        ConvexDomain::Disc { center, radius } => {
            let (cx, cy) = frame.map(*center);
            format!(
                "<circle cx=\"{cx:.3}\" cy=\"{cy:.3}\" r=\"{:.3}\" fill=\"none\" stroke=\"black\"/>\n",
                radius * frame.scale
            )
        }
        ConvexDomain::Rect { lo, hi } => {
            let (x0, y0) = frame.map([lo[0], hi[1]]);
            format!(
                "<rect x=\"{x0:.3}\" y=\"{y0:.3}\" width=\"{:.3}\" height=\"{:.3}\" fill=\"none\" stroke=\"black\"/>\n",
                (hi[0] - lo[0]) * frame.scale,
                (hi[1] - lo[1]) * frame.scale
            )
        }
        ConvexDomain::Polygon { vertices } => {
            let pts: Vec<String> = vertices
                .iter()
                .map(|&v| {
                    let (x, y) = frame.map(v);
                    format!("{x:.3},{y:.3}")
                })
                .collect();
            format!("<polygon points=\"{}\" fill=\"none\" stroke=\"black\"/>\n", pts.join(" "))
        }
        ConvexDomain::Interval { .. } => String::new(),
    }
}

/// Marching squares on the lattice; lattice points outside the grid take the
/// boundary value 0.
fn contour_svg(u: &GridFunction) -> String {
    let grid = u.grid();
    let h = grid.h();
    let origin = grid.lattice_origin();
    let [nx, ny] = grid.lattice_extent();
    let value = |i: i64, j: i64| grid.node_at(i, j).map_or(0.0, |n| u.values()[n]);
    let pos = |i: f64, j: f64| [origin[0] + i * h, origin[1] + j * h];
    let (lo, hi) = grid.domain().bounding_box();
    let frame = Frame::new(lo, hi);
    let mut svg = svg_header();
    for (level, color) in levels(u).iter().zip(PALETTE) {
        let mut d = String::new();
        for j in -1..ny as i64 {
            for i in -1..nx as i64 {
                let c = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)];
                let v: Vec<f64> = c.iter().map(|&(a, b)| value(a, b)).collect();
                let mut cuts = Vec::with_capacity(4);
                for e in 0..4 {
                    let (a, b) = (e, (e + 1) % 4);
                    if (v[a] < *level) != (v[b] < *level) {
                        let t = (level - v[a]) / (v[b] - v[a]);
                        let (ia, ja) = (c[a].0 as f64, c[a].1 as f64);
                        let (ib, jb) = (c[b].0 as f64, c[b].1 as f64);
                        cuts.push(pos(ia + t * (ib - ia), ja + t * (jb - ja)));
                    }
                }
                let segments: Vec<(Point, Point)> = match cuts.len() {
                    2 => vec![(cuts[0], cuts[1])],
                    4 => {
                        // saddle: decide by the cell average
                        let mean = v.iter().sum::<f64>() / 4.0;
                        if (mean < *level) == (v[0] < *level) {
                            vec![(cuts[0], cuts[3]), (cuts[1], cuts[2])]
                        } else {
                            vec![(cuts[0], cuts[1]), (cuts[2], cuts[3])]
                        }
                    }
                    _ => Vec::new(),
                };
                for (a, b) in segments {
                    let (ax, ay) = frame.map(a);
                    let (bx, by) = frame.map(b);
                    let _ = write!(d, "M{ax:.3} {ay:.3}L{bx:.3} {by:.3}");
                }
            }
        }
        let _ = writeln!(svg, "<path d=\"{d}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.2\"/>");
    }
    svg.push_str(&outline(grid.domain(), &frame));
    svg.push_str("</svg>\n");
    svg
}

/// Graph of a 1D solution with its levels as horizontal lines.
fn profile_svg(u: &GridFunction) -> String {
    let grid = u.grid();
    let (lo, hi) = grid.domain().bounding_box();
    let levels = levels(u);
    let bottom = levels[0] - (levels[1] - levels[0]);
    let height = (0.0 - bottom).max(1e-300);
    let width = hi[0] - lo[0];
    let map = |x: f64, v: f64| {
        (MARGIN + (x - lo[0]) / width * (SIZE - 2.0 * MARGIN), MARGIN + (0.0 - v) / height * (SIZE - 2.0 * MARGIN))
    };
    let mut svg = svg_header();
    for (level, color) in levels.iter().zip(PALETTE) {
        let (x0, y) = map(lo[0], *level);
        let (x1, _) = map(hi[0], *level);
        let _ = writeln!(svg, "<line x1=\"{x0:.3}\" y1=\"{y:.3}\" x2=\"{x1:.3}\" y2=\"{y:.3}\" stroke=\"{color}\" stroke-dasharray=\"4 3\"/>");
    }
    let mut pts = vec![map(lo[0], 0.0)];
    pts.extend(grid.nodes().iter().zip(u.values()).map(|(p, v)| map(p[0], *v)));
    pts.push(map(hi[0], 0.0));
    let list: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.3},{y:.3}")).collect();
    let _ = writeln!(svg, "<polyline points=\"{}\" fill=\"none\" stroke=\"black\" stroke-width=\"1.5\"/>", list.join(" "));
    svg.push_str("</svg>\n");
    svg
}
