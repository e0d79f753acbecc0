//! Replays a trace on its map and writes one plain PPM frame per planning step.

use std::fmt::Write as _;
use std::fs;

use anyhow::{Context, Result};
use frontier_lab::env::Sensor;
use frontier_lab::grid::read_map_file;
use frontier_lab::planner::TraceFile;
use frontier_lab::{Cell, Error, GridMap, Mask};
use serde_json::json;

use crate::commands::{prepare_out, write_manifest};
use crate::RenderArgs;

type Rgb = [u8; 3];

const OCCUPIED: Rgb = [255, 255, 255];
const UNEXPLORED: Rgb = [0, 0, 0];
const EXPLORED: Rgb = [0, 160, 0];
const AGENT: Rgb = [0, 0, 255];

fn pixel(map: &GridMap, mask: &Mask, agent: Cell, cell: Cell) -> Rgb {
    if cell == agent {
        AGENT
    } else if map.get(cell) {
        OCCUPIED
    } else if mask.get(cell) {
        EXPLORED
    } else {
        UNEXPLORED
    }
}

pub(crate) fn frame_ppm(map: &GridMap, mask: &Mask, agent: Cell, scale: usize) -> String {
    let side = map.size() * scale;
    let mut out = format!("P3\n{side} {side}\n255\n");
    for y in 0..side {
        for x in 0..side {
            let [r, g, b] = pixel(map, mask, agent, Cell::new(y / scale, x / scale));
            let _ = write!(out, "{r} {g} {b}");
            out.push(if x + 1 == side { '\n' } else { ' ' });
        }
    }
    out
}

pub fn render(a: &RenderArgs) -> Result<()> {
    if a.scale == 0 {
        return Err(Error::Config("--scale must be >= 1".into()).into());
    }
    let trace = TraceFile::read(&a.trace)?;
    let (map, _) = read_map_file(&a.map_file)?;
    if map.content_hash() != trace.header.map_hash {
        return Err(Error::Config(format!(
            "{} does not match the trace's map (hash {})",
            a.map_file.display(),
            trace.header.map_hash
        ))
        .into());
    }
    let sensor = Sensor::new(trace.header.sensor);
    let mut mask = Mask::new(map.size());
    let mut agent = trace.header.start;
    sensor.scan_into(&map, &mut mask, agent);

    prepare_out(&a.out)?;
    let write_frame = |i: usize, mask: &Mask, agent: Cell| -> Result<()> {
        let path = a.out.join(format!("frame_{i:05}.ppm"));
        fs::write(&path, frame_ppm(&map, mask, agent, a.scale)).with_context(|| format!("writing {}", path.display()))
    };
    write_frame(0, &mask, agent)?;
    for (i, step) in trace.steps.iter().enumerate() {
        for &next in &step.moves {
            agent = next;
            sensor.scan_into(&map, &mut mask, agent);
        }
        write_frame(i + 1, &mask, agent)?;
    }
    write_manifest(
        &a.out,
        &json!({
            "command": "render",
            "trace": a.trace,
            "map_file": a.map_file,
            "map_hash": trace.header.map_hash,
            "scale": a.scale,
            "frames": trace.steps.len() + 1,
        }),
    )
}
