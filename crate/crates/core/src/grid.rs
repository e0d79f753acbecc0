//! Square binary grids: the occupancy map and the exploration mask.
//!
//! Both are stored row-major as one byte per cell. [`GridMap`] marks occupied
//! cells with 1, [`Mask`] marks explored cells with 1. They share the
//! [`Grid`] storage but are distinct types so that a mask can never be passed
//! where a map is expected.

use std::fmt;
use std::ops::{Deref, DerefMut};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// A cell coordinate. Ordering is row-major, which is the tie-break order
/// used throughout the planner.
#[derive(
    Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize, Default,
)]
pub struct Cell {
    pub row: usize,
    pub col: usize,
}

impl Cell {
    pub const fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }

    pub fn manhattan(self, other: Cell) -> usize {
        self.row.abs_diff(other.row) + self.col.abs_diff(other.col)
    }

    pub fn dist_sq(self, other: Cell) -> usize {
        let dr = self.row.abs_diff(other.row);
        let dc = self.col.abs_diff(other.col);
        dr * dr + dc * dc
    }

    pub fn is_adjacent4(self, other: Cell) -> bool {
        self.manhattan(other) == 1
    }

    /// Offsets this cell by `(dr, dc)`, returning `None` outside `[0, size)²`.
    pub fn offset(self, dr: isize, dc: isize, size: usize) -> Option<Cell> {
        let r = self.row as isize + dr;
        let c = self.col as isize + dc;
        if r < 0 || c < 0 || r >= size as isize || c >= size as isize {
            None
        } else {
            Some(Cell::new(r as usize, c as usize))
        }
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.row, self.col)
    }
}

const NEIGHBORS4: [(isize, isize); 4] = [(-1, 0), (0, -1), (0, 1), (1, 0)];

/// L×L grid of {0, 1} values.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Grid {
    size: usize,
    cells: Vec<u8>,
}

impl Grid {
    pub fn zeros(size: usize) -> Self {
        Self {
            size,
            cells: vec![0; size * size],
        }
    }

    pub fn ones(size: usize) -> Self {
        Self {
            size,
            cells: vec![1; size * size],
        }
    }

    pub fn from_cells(size: usize, cells: Vec<u8>) -> Result<Self> {
        if size == 0 {
            return Err(Error::Contract("grid size must be positive".into()));
        }
        if cells.len() != size * size {
            return Err(Error::Contract(format!(
                "expected {} cells for a {size}x{size} grid, got {}",
                size * size,
                cells.len()
            )));
        }
        if let Some(bad) = cells.iter().find(|&&v| v > 1) {
            return Err(Error::Contract(format!("grid cell value {bad} is not 0 or 1")));
        }
        Ok(Self { size, cells })
    }

    /// Parses rows of `0`/`1` characters, one string per row.
    pub fn from_rows<S: AsRef<str>>(rows: &[S]) -> Result<Self> {
        let size = rows.len();
        let mut cells = Vec::with_capacity(size * size);
        for (r, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != size {
                return Err(Error::format(
                    "grid",
                    format!("row {r} has {} characters, expected {size}", row.len()),
                ));
            }
            for ch in row.bytes() {
                match ch {
                    b'0' => cells.push(0),
                    b'1' => cells.push(1),
                    other => {
                        return Err(Error::format(
                            "grid",
                            format!("unexpected character {:?} in row {r}", other as char),
                        ))
                    }
                }
            }
        }
        Self::from_cells(size, cells)
    }

    #[inline]
    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn cells(&self) -> &[u8] {
        &self.cells
    }

    #[inline]
    pub fn index(&self, cell: Cell) -> usize {
        cell.row * self.size + cell.col
    }

    #[inline]
    pub fn cell_at(&self, index: usize) -> Cell {
        Cell::new(index / self.size, index % self.size)
    }

    #[inline]
    pub fn in_bounds(&self, cell: Cell) -> bool {
        cell.row < self.size && cell.col < self.size
    }

    #[inline]
    pub fn get(&self, cell: Cell) -> bool {
        self.cells[self.index(cell)] != 0
    }

    #[inline]
    pub fn get_idx(&self, index: usize) -> bool {
        self.cells[index] != 0
    }

    /// Value at a signed coordinate; out-of-bounds reads return `outside`.
    #[inline]
    pub fn get_or(&self, row: isize, col: isize, outside: bool) -> bool {
        if row < 0 || col < 0 || row >= self.size as isize || col >= self.size as isize {
            outside
        } else {
            self.cells[row as usize * self.size + col as usize] != 0
        }
    }

    #[inline]
    pub fn set(&mut self, cell: Cell, value: bool) {
        let i = self.index(cell);
        self.cells[i] = value as u8;
    }

    #[inline]
    pub fn set_idx(&mut self, index: usize, value: bool) {
        self.cells[index] = value as u8;
    }

    pub fn count_ones(&self) -> usize {
        self.cells.iter().map(|&v| v as usize).sum()
    }

    pub fn iter_cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.cells.len()).map(|i| self.cell_at(i))
    }

    /// In-bounds 4-neighbors in row-major order.
    pub fn neighbors4(&self, cell: Cell) -> impl Iterator<Item = Cell> + '_ {
        NEIGHBORS4
            .iter()
            .filter_map(move |&(dr, dc)| cell.offset(dr, dc, self.size))
    }

    /// In-bounds 8-neighbors in row-major order.
    pub fn neighbors8(&self, cell: Cell) -> impl Iterator<Item = Cell> + '_ {
        (-1isize..=1)
            .flat_map(|dr| (-1isize..=1).map(move |dc| (dr, dc)))
            .filter(|&(dr, dc)| dr != 0 || dc != 0)
            .filter_map(move |(dr, dc)| cell.offset(dr, dc, self.size))
    }

    pub fn check_same_size(&self, other: &Grid, what: &str) -> Result<()> {
        if self.size != other.size {
            return Err(Error::Contract(format!(
                "{what}: grid sizes differ ({} vs {})",
                self.size, other.size
            )));
        }
        Ok(())
    }

    pub fn to_rows(&self) -> Vec<String> {
        self.cells
            .chunks(self.size)
            .map(|row| row.iter().map(|&v| if v != 0 { '1' } else { '0' }).collect())
            .collect()
    }
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Grid {}x{}", self.size, self.size)?;
        for row in self.to_rows() {
            writeln!(f, "  {row}")?;
        }
        Ok(())
    }
}

macro_rules! grid_newtype {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Clone, PartialEq, Eq, Hash, Debug)]
        pub struct $name(Grid);

        impl $name {
            pub fn new(size: usize) -> Self {
                Self(Grid::zeros(size))
            }

            pub fn from_grid(grid: Grid) -> Self {
                Self(grid)
            }

            pub fn from_rows<S: AsRef<str>>(rows: &[S]) -> Result<Self> {
                Grid::from_rows(rows).map(Self)
            }

            pub fn grid(&self) -> &Grid {
                &self.0
            }

            pub fn into_grid(self) -> Grid {
                self.0
            }
        }

        impl Deref for $name {
            type Target = Grid;
            fn deref(&self) -> &Grid {
                &self.0
            }
        }

        impl DerefMut for $name {
            fn deref_mut(&mut self) -> &mut Grid {
                &mut self.0
            }
        }
    };
}

grid_newtype!(
    /// Occupancy grid: 1 = occupied.
    GridMap
);

grid_newtype!(
    /// Exploration grid: 1 = explored. Environment updates only ever set cells.
    Mask
);

impl GridMap {
    #[inline]
    pub fn is_free(&self, cell: Cell) -> bool {
        !self.get(cell)
    }

    pub fn occupied_fraction(&self) -> f64 {
        self.count_ones() as f64 / (self.size() * self.size()) as f64
    }

    /// What an agent holding `mask` knows about this map: occupied cells it has
    /// explored, everything else free.
    pub fn known_view(&self, mask: &Mask) -> GridMap {
        let cells = self
            .cells()
            .iter()
            .zip(mask.cells())
            .map(|(&occ, &seen)| occ & seen)
            .collect();
        GridMap(Grid {
            size: self.size(),
            cells,
        })
    }

    /// Hex SHA-256 of the size and cell contents. Stable across platforms.
    pub fn content_hash(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update((self.size() as u64).to_le_bytes());
        hasher.update(self.cells());
        hasher
            .finalize()
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

impl Mask {
    #[inline]
    pub fn is_explored(&self, cell: Cell) -> bool {
        self.get(cell)
    }

    /// Cell-wise OR with `other`.
    pub fn merge(&mut self, other: &Mask) -> Result<()> {
        self.check_same_size(other, "mask merge")?;
        for (a, &b) in self.0.cells.iter_mut().zip(other.cells()) {
            *a |= b;
        }
        Ok(())
    }

    /// True when every explored cell of `other` is explored here too.
    pub fn is_superset_of(&self, other: &Mask) -> bool {
        self.size() == other.size()
            && self
                .cells()
                .iter()
                .zip(other.cells())
                .all(|(&a, &b)| a >= b)
    }
}

/// First line of a map file.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MapHeader {
    pub size: usize,
    pub density: f64,
    pub seed: u64,
}

/// Renders the text map format: `L density seed`, then L rows of `0`/`1`.
pub fn map_to_text(map: &GridMap, header: &MapHeader) -> String {
    let mut out = format!("{} {} {}\n", map.size(), header.density, header.seed);
    for row in map.to_rows() {
        out.push_str(&row);
        out.push('\n');
    }
    out
}

pub fn map_from_text(text: &str) -> Result<(GridMap, MapHeader)> {
    let mut lines = text.lines();
    let head = lines
        .next()
        .ok_or_else(|| Error::format("map file", "empty input"))?;
    let fields: Vec<&str> = head.split_whitespace().collect();
    if fields.len() != 3 {
        return Err(Error::format(
            "map file",
            format!("header must be `L density seed`, got {head:?}"),
        ));
    }
    let parse_err = |what: &str| Error::format("map file", format!("bad {what} in header {head:?}"));
    let size: usize = fields[0].parse().map_err(|_| parse_err("size"))?;
    let density: f64 = fields[1].parse().map_err(|_| parse_err("density"))?;
    let seed: u64 = fields[2].parse().map_err(|_| parse_err("seed"))?;
    let rows: Vec<&str> = lines.take_while(|l| !l.is_empty()).collect();
    if rows.len() != size {
        return Err(Error::format(
            "map file",
            format!("header says {size} rows, found {}", rows.len()),
        ));
    }
    let map = GridMap::from_rows(&rows)?;
    Ok((map, MapHeader { size, density, seed }))
}

pub fn write_map_file(path: &Path, map: &GridMap, header: &MapHeader) -> Result<()> {
    std::fs::write(path, map_to_text(map, header)).map_err(|e| Error::io(path, e))
}

pub fn read_map_file(path: &Path) -> Result<(GridMap, MapHeader)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    map_from_text(&text)
}
