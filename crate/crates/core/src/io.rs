//! Text formats: instance files and `x,y[,group]` point tables.
//!
//! Instance file:
//!
//! ```text
//! # format=spinforge-v1
//! # N=<vertices> M=<edges>
//! # chimera=<rows>x<cols>          (optional)
//! # mask=<v>,<v>,...               (optional)
//! # planted_gs_energy=<E>          (optional)
//! # planted=<+/- string>           (optional)
//! # loop=<weight>:<violated|->:<v>,<v>,...   (optional, repeated)
//! i j J                            (M lines, ascending (i, j))
//! ```
//!
//! Zero couplings are written, so the body always lists every edge of the
//! topology. Unknown `#` lines are ignored.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::instance::{Energy, IsingInstance, Loop, PlantedData, SpinConfig};
use crate::topology::Topology;

pub const FORMAT_TAG: &str = "spinforge-v1";

pub fn write_instance(inst: &IsingInstance) -> String {
    let topo = inst.topology();
    let mut out = format!("# format={FORMAT_TAG}\n# N={} M={}\n", topo.n_vertices(), topo.n_edges());
    if let Some(shape) = topo.chimera_shape() {
        let _ = writeln!(out, "# chimera={}x{}", shape.rows, shape.cols);
    }
    if !topo.mask().is_empty() {
        let ids: Vec<String> = topo.mask().iter().map(usize::to_string).collect();
        let _ = writeln!(out, "# mask={}", ids.join(","));
    }
    if let Some(p) = inst.planted() {
        let _ = writeln!(out, "# planted_gs_energy={}", p.gs_energy);
        let _ = writeln!(out, "# planted={}", p.solution);
        for l in &p.loops {
            let cycle: Vec<String> = l.cycle.iter().map(usize::to_string).collect();
            let violated = l.violated.map_or_else(|| "-".to_string(), |v| v.to_string());
            let _ = writeln!(out, "# loop={}:{}:{}", l.weight, violated, cycle.join(","));
        }
    }
    for (&(i, j), &c) in topo.edges().iter().zip(inst.couplings()) {
        let _ = writeln!(out, "{i} {j} {c}");
    }
    out
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        msg: msg.into(),
    }
}

fn parse_num<T: std::str::FromStr>(line: usize, what: &str, s: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| parse_err(line, format!("bad {what} `{s}`")))
}

fn parse_loop(line: usize, s: &str) -> Result<Loop> {
    let mut parts = s.splitn(3, ':');
    let (Some(w), Some(v), Some(c)) = (parts.next(), parts.next(), parts.next()) else {
        return Err(parse_err(line, format!("bad loop `{s}`")));
    };
    Ok(Loop {
        weight: parse_num(line, "loop weight", w)?,
        violated: if v == "-" {
            None
        } else {
            Some(parse_num(line, "violated position", v)?)
        },
        cycle: c
            .split(',')
            .map(|x| parse_num(line, "loop vertex", x))
            .collect::<Result<_>>()?,
    })
}

pub fn read_instance(text: &str) -> Result<IsingInstance> {
    let mut format_ok = false;
    let mut dims: Option<(usize, usize)> = None;
    let mut chimera: Option<(usize, usize)> = None;
    let mut mask = BTreeSet::new();
    let mut gs_energy: Option<Energy> = None;
    let mut solution: Option<SpinConfig> = None;
    let mut loops = Vec::new();
    let mut body: Vec<(usize, usize, i64)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let l = raw.trim();
        if l.is_empty() {
            continue;
        }
        if let Some(header) = l.strip_prefix('#') {
            let header = header.trim();
            if let Some(v) = header.strip_prefix("format=") {
                if v.trim() != FORMAT_TAG {
                    return Err(parse_err(line, format!("unsupported format `{v}`")));
                }
                format_ok = true;
            } else if header.starts_with("N=") {
                let mut n = None;
                let mut m = None;
                for tok in header.split_whitespace() {
                    if let Some(v) = tok.strip_prefix("N=") {
                        n = Some(parse_num(line, "N", v)?);
                    } else if let Some(v) = tok.strip_prefix("M=") {
                        m = Some(parse_num(line, "M", v)?);
                    }
                }
                match (n, m) {
                    (Some(n), Some(m)) => dims = Some((n, m)),
                    _ => return Err(parse_err(line, "expected `N=<n> M=<m>`")),
                }
            } else if let Some(v) = header.strip_prefix("chimera=") {
                let (r, c) = v
                    .split_once('x')
                    .ok_or_else(|| parse_err(line, format!("bad chimera shape `{v}`")))?;
                chimera = Some((parse_num(line, "rows", r)?, parse_num(line, "cols", c)?));
            } else if let Some(v) = header.strip_prefix("mask=") {
                for id in v.split(',').filter(|s| !s.trim().is_empty()) {
                    mask.insert(parse_num(line, "masked vertex", id)?);
                }
            } else if let Some(v) = header.strip_prefix("planted_gs_energy=") {
                gs_energy = Some(parse_num(line, "ground-state energy", v)?);
            } else if let Some(v) = header.strip_prefix("planted=") {
                solution = Some(SpinConfig::from_pm_string(v.trim()).map_err(|e| parse_err(line, e.to_string()))?);
            } else if let Some(v) = header.strip_prefix("loop=") {
                loops.push(parse_loop(line, v)?);
            }
            continue;
        }
        let mut it = l.split_whitespace();
        match (it.next(), it.next(), it.next(), it.next()) {
            (Some(i), Some(j), Some(c), None) => body.push((
                parse_num(line, "vertex", i)?,
                parse_num(line, "vertex", j)?,
                parse_num(line, "coupling", c)?,
            )),
            _ => return Err(parse_err(line, format!("expected `i j J`, got `{l}`"))),
        }
    }
    if !format_ok {
        return Err(parse_err(0, format!("missing `# format={FORMAT_TAG}` header")));
    }
    let (n, m) = dims.ok_or_else(|| parse_err(0, "missing `# N=<n> M=<m>` header"))?;
    if body.len() != m {
        return Err(parse_err(0, format!("header says M={m} but {} coupling lines follow", body.len())));
    }
    if body.windows(2).any(|w| (w[0].0, w[0].1) >= (w[1].0, w[1].1)) {
        return Err(parse_err(0, "coupling lines are not in ascending (i, j) order"));
    }
    let topology = match chimera {
        Some((r, c)) => {
            let t = Topology::chimera(r, c)?.apply_mask(&mask)?;
            let listed: Vec<(usize, usize)> = body.iter().map(|&(i, j, _)| (i, j)).collect();
            if t.n_vertices() != n || t.edges() != listed.as_slice() {
                return Err(parse_err(0, format!("edge list does not match chimera {r}x{c}")));
            }
            t
        }
        None => Topology::from_edges(n, body.iter().map(|&(i, j, _)| (i, j)))?.apply_mask(&mask)?,
    };
    if topology.n_edges() != m {
        return Err(parse_err(0, "masked vertices carry couplings"));
    }
    let topology = Arc::new(topology);
    let couplings: Vec<i64> = body.iter().map(|&(_, _, c)| c).collect();
    let inst = match (solution, gs_energy) {
        (None, None) if loops.is_empty() => IsingInstance::new(topology, couplings)?,
        (Some(solution), Some(gs_energy)) if !loops.is_empty() => {
            let inst = IsingInstance::assemble_planted(topology, solution, loops)?;
            if inst.couplings() != couplings.as_slice() {
                return Err(parse_err(0, "couplings disagree with the listed loops"));
            }
            if inst.planted().map(|p| p.gs_energy) != Some(gs_energy) {
                return Err(parse_err(0, "planted_gs_energy disagrees with the listed loops"));
            }
            inst
        }
        (Some(solution), Some(gs_energy)) => {
            if solution.len() != n {
                return Err(parse_err(0, "planted string has the wrong length"));
            }
            IsingInstance::new(topology, couplings)?.with_planted(Some(PlantedData {
                solution,
                loops,
                gs_energy,
            }))
        }
        _ => {
            return Err(parse_err(
                0,
                "planted data needs both `planted=` and `planted_gs_energy=`",
            ))
        }
    };
    Ok(inst)
}

pub fn save_instance(path: &Path, inst: &IsingInstance) -> Result<()> {
    std::fs::write(path, write_instance(inst))?;
    Ok(())
}

pub fn load_instance(path: &Path) -> Result<IsingInstance> {
    read_instance(&std::fs::read_to_string(path)?)
}

/// A row of a point table: `x`, `y` and an optional integer group label.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
    pub group: Option<u32>,
}

/// Reads `x,y[,group]` rows; a first line that does not parse as numbers is
/// treated as a header. Empty group cells mean "unlabeled".
pub fn read_points(text: &str) -> Result<Vec<Point>> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let l = raw.trim();
        if l.is_empty() || l.starts_with('#') {
            continue;
        }
        let cells: Vec<&str> = l.split(',').map(str::trim).collect();
        let parsed = (|| -> Result<Point> {
            if cells.len() < 2 || cells.len() > 3 {
                return Err(parse_err(line, format!("expected 2 or 3 columns, got `{l}`")));
            }
            Ok(Point {
                x: parse_num(line, "x", cells[0])?,
                y: parse_num(line, "y", cells[1])?,
                group: match cells.get(2) {
                    Some(g) if !g.is_empty() => Some(parse_num(line, "group", g)?),
                    _ => None,
                },
            })
        })();
        match parsed {
            Ok(p) => out.push(p),
            Err(_) if out.is_empty() && idx == first_content_line(text) => continue,
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

fn first_content_line(text: &str) -> usize {
    text.lines()
        .position(|l| !l.trim().is_empty() && !l.trim().starts_with('#'))
        .unwrap_or(0)
}

pub fn write_points(points: &[Point]) -> String {
    let mut out = String::from("x,y,group\n");
    for p in points {
        let g = p.group.map_or_else(String::new, |g| g.to_string());
        let _ = writeln!(out, "{},{},{}", p.x, p.y, g);
    }
    out
}
