//! OBJ snapshots of structured surfaces.
//!
//! Vertices are node images in ambient chart coordinates (all `n`
//! components, shortest round-trip formatting) in global node order: row-major
//! per chart, north chart first. Faces are grid quads split into two
//! triangles; on spheres only quads touching a chart's authoritative disk are
//! written. A comment header carries what is needed to rebuild the grid.

use std::io::{self, BufRead, Write};
use std::sync::Arc;

use thiserror::Error;

use crate::ambient::AmbientManifold;
use crate::linalg::{self, Vector};

use super::chart::{ChartedSurface, GridError, Topology};
use super::immersion::ImmersionField;
use super::SurfaceError;

const MAGIC: &str = "# willmore-snapshot v1";

#[derive(Debug, Error)]
pub enum ObjError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("missing header field `{0}`")]
    MissingHeader(&'static str),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Surface(#[from] SurfaceError),
}

/// Header and vertex data of a snapshot.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub t: f64,
    pub step: usize,
    /// Constant factor of the ambient metric the snapshot was taken in.
    pub metric_scale: f64,
    pub surface: Arc<ChartedSurface>,
    pub dim: usize,
    pub points: Vec<Vector>,
}

impl Snapshot {
    /// Attach an ambient to obtain an immersion.
    pub fn into_field(self, ambient: Arc<AmbientManifold>) -> Result<ImmersionField, SurfaceError> {
        if ambient.dim() != self.dim {
            return Err(SurfaceError::DimensionMismatch { node: 0 });
        }
        ImmersionField::new(self.surface, ambient, self.points)
    }
}

pub fn write_obj<W: Write>(
    out: &mut W,
    field: &ImmersionField,
    t: f64,
    step: usize,
) -> io::Result<()> {
    let s = field.surface();
    let n = field.dim();
    writeln!(out, "{MAGIC}")?;
    writeln!(out, "# t {t}")?;
    writeln!(out, "# step {step}")?;
    writeln!(out, "# metric_scale {}", field.ambient().scale())?;
    writeln!(out, "# dim {n}")?;
    match s.topology() {
        Topology::Torus => {
            let c = &s.charts()[0];
            writeln!(out, "# topology torus")?;
            writeln!(out, "# grid {} {}", c.nu, c.nv)?;
        }
        Topology::Sphere => {
            writeln!(out, "# topology sphere")?;
            writeln!(out, "# grid {}", s.charts()[0].nu)?;
            writeln!(out, "# extent {}", s.extent())?;
        }
    }
    for p in field.points() {
        write!(out, "v")?;
        for x in &p[..n] {
            write!(out, " {x}")?;
        }
        writeln!(out)?;
    }
    for chart in s.charts() {
        let periodic = chart.is_periodic();
        let (iu, iv) = if periodic {
            (chart.nu, chart.nv)
        } else {
            (chart.nu - 1, chart.nv - 1)
        };
        for i in 0..iu {
            for j in 0..iv {
                let i1 = (i + 1) % chart.nu;
                let j1 = (j + 1) % chart.nv;
                let q = [
                    chart.index(i, j),
                    chart.index(i1, j),
                    chart.index(i1, j1),
                    chart.index(i, j1),
                ];
                if !periodic && !q.iter().any(|&k| s.is_authoritative(k)) {
                    continue;
                }
                // OBJ indices are one-based
                writeln!(out, "f {} {} {}", q[0] + 1, q[1] + 1, q[2] + 1)?;
                writeln!(out, "f {} {} {}", q[0] + 1, q[2] + 1, q[3] + 1)?;
            }
        }
    }
    Ok(())
}

pub fn read_obj<R: BufRead>(input: R) -> Result<Snapshot, ObjError> {
    let mut t = None;
    let mut step = 0usize;
    let mut metric_scale = 1.0;
    let mut dim = None;
    let mut topology = None;
    let mut grid: Vec<usize> = Vec::new();
    let mut extent = None;
    let mut points = Vec::new();
    let parse_f = |s: &str, line: usize| -> Result<f64, ObjError> {
        s.parse::<f64>().map_err(|e| ObjError::Parse {
            line,
            msg: format!("bad number `{s}`: {e}"),
        })
    };
    for (ln, line) in input.lines().enumerate() {
        let line = line?;
        let lno = ln + 1;
        let mut it = line.split_whitespace();
        match it.next() {
            Some("#") => {
                let key = it.next().unwrap_or("");
                let rest: Vec<&str> = it.collect();
                let first = rest.first().copied().unwrap_or("");
                match key {
                    "t" => t = Some(parse_f(first, lno)?),
                    "step" => {
                        step = first.parse().map_err(|_| ObjError::Parse {
                            line: lno,
                            msg: "bad step".into(),
                        })?
                    }
                    "metric_scale" => metric_scale = parse_f(first, lno)?,
                    "dim" => {
                        dim = Some(first.parse::<usize>().map_err(|_| ObjError::Parse {
                            line: lno,
                            msg: "bad dim".into(),
                        })?)
                    }
                    "topology" => {
                        topology = Some(match first {
                            "torus" => Topology::Torus,
                            "sphere" => Topology::Sphere,
                            other => {
                                return Err(ObjError::Parse {
                                    line: lno,
                                    msg: format!("unknown topology `{other}`"),
                                })
                            }
                        })
                    }
                    "grid" => {
                        grid = rest
                            .iter()
                            .map(|v| v.parse::<usize>())
                            .collect::<Result<_, _>>()
                            .map_err(|_| ObjError::Parse {
                                line: lno,
                                msg: "bad grid".into(),
                            })?
                    }
                    "extent" => extent = Some(parse_f(first, lno)?),
                    _ => {}
                }
            }
            Some("v") => {
                let coords: Vec<f64> = it.map(|v| parse_f(v, lno)).collect::<Result<_, _>>()?;
                if coords.is_empty() || coords.len() > linalg::MAX_DIM {
                    return Err(ObjError::Parse {
                        line: lno,
                        msg: format!("vertex with {} coordinates", coords.len()),
                    });
                }
                points.push(linalg::from_slice(&coords));
            }
            _ => {}
        }
    }
    let t = t.ok_or(ObjError::MissingHeader("t"))?;
    let dim = dim.ok_or(ObjError::MissingHeader("dim"))?;
    let topology = topology.ok_or(ObjError::MissingHeader("topology"))?;
    let surface = match topology {
        Topology::Torus => {
            if grid.len() != 2 {
                return Err(ObjError::MissingHeader("grid"));
            }
            ChartedSurface::torus(grid[0], grid[1])?
        }
        Topology::Sphere => {
            if grid.len() != 1 {
                return Err(ObjError::MissingHeader("grid"));
            }
            let l = extent.ok_or(ObjError::MissingHeader("extent"))?;
            ChartedSurface::sphere_with_extent(grid[0], l)?
        }
    };
    if points.len() != surface.len() {
        return Err(SurfaceError::SizeMismatch {
            expected: surface.len(),
            got: points.len(),
        }
        .into());
    }
    Ok(Snapshot {
        t,
        step,
        metric_scale,
        surface: Arc::new(surface),
        dim,
        points,
    })
}
