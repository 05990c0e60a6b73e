//! Grid-function CSV serialization.
//!
//! Header rows carry the grid kind, dimension, extents and spacing, then
//! one sample per line. Values use shortest round-trip formatting, so a
//! write/read cycle is bit-exact.

use std::io::{BufRead, Write};

use super::{BoxGrid, Grid, GridFunction, RadialGrid};
use crate::error::{Error, Result};

fn join<T: std::fmt::Display>(items: impl IntoIterator<Item = T>) -> String {
    items
        .into_iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

/// Write a grid function as CSV (LF line endings, `.` decimals).
pub fn write_grid_function<W: Write>(u: &GridFunction, mut w: W) -> std::io::Result<()> {
    match u.grid() {
        Grid::Radial(g) => {
            writeln!(w, "kind,radial")?;
            writeln!(w, "dimension,{}", g.dim())?;
            writeln!(w, "points,{}", g.len())?;
            writeln!(w, "extent,{}", g.r_max())?;
            writeln!(w, "spacing,{}", g.dr())?;
            writeln!(w, "monotone,{}", u.monotone())?;
            writeln!(w, "r,weight,value")?;
            for ((r, wt), v) in g.radii().iter().zip(g.weights()).zip(u.values()) {
                writeln!(w, "{r},{wt},{v}")?;
            }
        }
        Grid::Box(g) => {
            writeln!(w, "kind,box")?;
            writeln!(w, "dimension,{}", g.dim())?;
            writeln!(w, "points,{}", join(g.points().iter()))?;
            writeln!(
                w,
                "extent,{}",
                join((0..g.dim()).map(|a| g.half_extent(a)))
            )?;
            writeln!(w, "spacing,{}", join(g.spacing().iter()))?;
            writeln!(w, "monotone,{}", u.monotone())?;
            let coords = join((1..=g.dim()).map(|a| format!("x{a}")));
            writeln!(w, "{coords},value")?;
            for (flat, v) in u.values().iter().enumerate() {
                let idx = g.unflatten(flat);
                let xs = join(
                    idx.iter()
                        .enumerate()
                        .map(|(axis, &k)| g.coord(axis, k)),
                );
                writeln!(w, "{xs},{v}")?;
            }
        }
    }
    Ok(())
}

fn bad(details: impl Into<String>) -> Error {
    Error::GridCsv { details: details.into() }
}

fn header_row<'a>(line: &'a str, key: &str) -> Result<&'a str> {
    let (k, rest) = line
        .split_once(',')
        .ok_or_else(|| bad(format!("expected `{key},…`, got `{line}`")))?;
    if k != key {
        return Err(bad(format!("expected header row `{key}`, got `{k}`")));
    }
    Ok(rest)
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| bad(format!("invalid number `{s}`")))
}

fn parse_usize(s: &str) -> Result<usize> {
    s.trim()
        .parse::<usize>()
        .map_err(|_| bad(format!("invalid integer `{s}`")))
}

/// Read a grid function written by [`write_grid_function`].
pub fn read_grid_function<R: BufRead>(r: R) -> Result<GridFunction> {
    let mut lines = r.lines();
    let mut next = || -> Result<String> {
        lines
            .next()
            .ok_or_else(|| bad("unexpected end of file"))?
            .map_err(|e| bad(format!("read error: {e}")))
    };

    let kind_line = next()?;
    let kind = header_row(&kind_line, "kind")?.trim().to_string();
    let dim_line = next()?;
    let dim = parse_usize(header_row(&dim_line, "dimension")?)?;
    let points_line = next()?;
    let points_raw = header_row(&points_line, "points")?.to_string();
    let _extent_line = next()?; // extents are derivable; spacing is authoritative
    let spacing_line = next()?;
    let spacing_raw = header_row(&spacing_line, "spacing")?.to_string();
    let mono_line = next()?;
    let monotone = header_row(&mono_line, "monotone")?.trim() == "true";
    let _column_header = next()?;

    match kind.as_str() {
        "radial" => {
            let n = parse_usize(&points_raw)?;
            let mut radii = Vec::with_capacity(n);
            let mut weights = Vec::with_capacity(n);
            let mut values = Vec::with_capacity(n);
            for _ in 0..n {
                let line = next()?;
                let mut parts = line.split(',');
                let mut field = || {
                    parts
                        .next()
                        .ok_or_else(|| bad(format!("bad sample line `{line}`")))
                };
                radii.push(parse_f64(field()?)?);
                weights.push(parse_f64(field()?)?);
                values.push(parse_f64(field()?)?);
            }
            let grid = RadialGrid::with_weights(dim, radii, weights);
            let mut out = GridFunction::new(Grid::Radial(grid), values)?;
            if monotone {
                out.set_monotone(true);
            }
            Ok(out)
        }
        "box" => {
            let points: Vec<usize> = points_raw
                .split(',')
                .map(parse_usize)
                .collect::<Result<_>>()?;
            let spacing: Vec<f64> = spacing_raw
                .split(',')
                .map(parse_f64)
                .collect::<Result<_>>()?;
            if points.len() != dim || spacing.len() != dim {
                return Err(bad("points/spacing arity does not match dimension"));
            }
            let grid = BoxGrid::with_spacing(points, spacing);
            let n = grid.len();
            let mut values = Vec::with_capacity(n);
            for _ in 0..n {
                let line = next()?;
                let v = line
                    .rsplit_once(',')
                    .ok_or_else(|| bad(format!("bad sample line `{line}`")))?
                    .1;
                values.push(parse_f64(v)?);
            }
            GridFunction::new(Grid::Box(grid), values)
        }
        other => Err(bad(format!("unknown grid kind `{other}`"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{BoxGrid, GridFunction, RadialGrid};

    #[test]
    fn radial_roundtrip_is_bit_exact() {
        let g = RadialGrid::uniform(3, 17.5, 257);
        let u = GridFunction::from_radial_profile(g, |r| (r * 13.7).sin() / (1.0 + r)).unwrap();
        let mut buf = Vec::new();
        write_grid_function(&u, &mut buf).unwrap();
        let back = read_grid_function(&buf[..]).unwrap();
        assert_eq!(u.values(), back.values());
        assert_eq!(u.grid(), back.grid());
    }

    #[test]
    fn box_roundtrip_is_bit_exact() {
        let g = BoxGrid::symmetric(2, 3.0, 16).dilated(1.7);
        let u = GridFunction::from_box_profile(g, |x| x[0] * 0.1 + (x[1] * 2.3).cos()).unwrap();
        let mut buf = Vec::new();
        write_grid_function(&u, &mut buf).unwrap();
        let back = read_grid_function(&buf[..]).unwrap();
        assert_eq!(u.values(), back.values());
        assert_eq!(u.grid(), back.grid());
    }

    #[test]
    fn malformed_header_is_reported() {
        let err = read_grid_function("kond,radial\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::GridCsv { .. }));
    }
}
