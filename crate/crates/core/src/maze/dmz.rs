//! `DMZ1` text grid format.
//!
//! ```text
//! DMZ1 <width> <height> <seed> <style>
//! <height lines of <width> characters, '#' wall, '.' open>
//! ```
//!
//! Every line, including the last, ends in `\n`.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use super::grid::{MazeGrid, MazeStyle};
use crate::error::{Error, Result};

const MAGIC: &str = "DMZ1";

pub fn to_string(grid: &MazeGrid) -> String {
    let mut out = format!(
        "{MAGIC} {} {} {} {}\n",
        grid.width(),
        grid.height(),
        grid.seed(),
        grid.style()
    );
    for row in grid.walls().chunks(grid.width()) {
        out.extend(row.iter().map(|w| if *w { '#' } else { '.' }));
        out.push('\n');
    }
    out
}

pub fn parse(text: &str) -> Result<MazeGrid> {
    let bad = |r: String| Error::format("DMZ1", r);
    let mut lines = text.split_terminator('\n');
    let header = lines.next().ok_or_else(|| bad("empty input".into()))?;
    let fields: Vec<&str> = header.split(' ').collect();
    if fields.len() != 5 || fields[0] != MAGIC {
        return Err(bad(format!("bad header `{header}`")));
    }
    let num = |s: &str, what: &str| s.parse::<u64>().map_err(|_| bad(format!("bad {what} `{s}`")));
    let width = num(fields[1], "width")? as usize;
    let height = num(fields[2], "height")? as usize;
    let seed = num(fields[3], "seed")?;
    let style: MazeStyle = fields[4].parse()?;
    if fields[4] != style.name() {
        return Err(bad(format!("non-canonical style `{}`", fields[4])));
    }
    let mut walls = Vec::with_capacity(width * height);
    for row in 0..height {
        let line = lines.next().ok_or_else(|| bad(format!("missing row {row}")))?;
        if line.len() != width {
            return Err(bad(format!("row {row} has {} cells, expected {width}", line.len())));
        }
        for ch in line.chars() {
            walls.push(match ch {
                '#' => true,
                '.' => false,
                other => return Err(bad(format!("unexpected character `{other}`"))),
            });
        }
    }
    if lines.next().is_some() || !text.ends_with('\n') {
        return Err(bad("trailing data or missing final newline".into()));
    }
    MazeGrid::from_walls(width, height, seed, style, walls)
}

pub fn write<W: Write>(grid: &MazeGrid, mut w: W) -> Result<()> {
    w.write_all(to_string(grid).as_bytes())?;
    Ok(())
}

pub fn read<R: Read>(mut r: R) -> Result<MazeGrid> {
    let mut text = String::new();
    r.read_to_string(&mut text)?;
    parse(&text)
}

pub fn save(grid: &MazeGrid, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, to_string(grid))?;
    Ok(())
}

pub fn load(path: impl AsRef<Path>) -> Result<MazeGrid> {
    parse(&fs::read_to_string(path)?)
}
