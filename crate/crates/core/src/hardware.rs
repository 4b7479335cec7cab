//! Platform model: a mesh of crossbar tiles with spike buffers, the
//! interconnect, energy parameters, and the actor execution-time model.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io;

pub type TileId = usize;

/// Energy to generate one spike on a crossbar, in pJ.
pub const DYNAPSE_E_SPIKE_PJ: f64 = 50.0;
/// Energy to route one spike across one mesh hop, in pJ.
pub const DYNAPSE_E_ROUTE_PJ: f64 = 147.0;
/// Link bandwidth in events per second.
pub const DYNAPSE_BANDWIDTH: f64 = 1.8e9;
/// Default buffer depth per crossbar row, in tokens.
pub const BUFFER_TOKENS_PER_ROW: u64 = 64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tile {
    pub id: TileId,
    pub crossbar_n: usize,
    pub in_buffer: u64,
    pub out_buffer: u64,
    pub coord: (u32, u32),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeshLink {
    pub a: TileId,
    pub b: TileId,
    pub bandwidth: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyModel {
    pub e_spike_pj: f64,
    pub e_route_pj: f64,
}

/// Actor execution time as a function of crossbar occupancy:
/// `base + per_input_row * rows + per_spike * internal_spikes`, at least 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecTimeModel {
    pub base: u64,
    pub per_input_row: u64,
    pub per_spike: u64,
}

impl Default for ExecTimeModel {
    fn default() -> Self {
        ExecTimeModel {
            base: 100,
            per_input_row: 1,
            per_spike: 0,
        }
    }
}

impl ExecTimeModel {
    pub fn exec_time(&self, rows: usize, internal_spikes: u64) -> Result<u64> {
        let t = (rows as u64)
            .checked_mul(self.per_input_row)
            .and_then(|r| internal_spikes.checked_mul(self.per_spike).and_then(|s| r.checked_add(s)))
            .and_then(|v| v.checked_add(self.base))
            .ok_or(Error::Overflow("execution time"))?;
        Ok(t.max(1))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "HardwareFile", into = "HardwareFile")]
pub struct HardwareGraph {
    tiles: Vec<Tile>,
    links: Vec<MeshLink>,
    energy: EnergyModel,
}

impl HardwareGraph {
    pub fn new(tiles: Vec<Tile>, links: Vec<MeshLink>, energy: EnergyModel) -> Result<Self> {
        let hw = HardwareGraph { tiles, links, energy };
        hw.validate()?;
        Ok(hw)
    }

    fn validate(&self) -> Result<()> {
        if self.tiles.is_empty() {
            return Err(Error::invalid("hardware", "at least one tile is required"));
        }
        let mut coords = BTreeSet::new();
        for (i, t) in self.tiles.iter().enumerate() {
            if t.id != i {
                return Err(Error::invalid("hardware", format!("tile at position {i} has id {}", t.id)));
            }
            if t.crossbar_n < 2 {
                return Err(Error::invalid("hardware", format!("tile {i} has crossbar dimension {}", t.crossbar_n)));
            }
            if t.in_buffer == 0 || t.out_buffer == 0 {
                return Err(Error::invalid("hardware", format!("tile {i} has an empty buffer")));
            }
            if !coords.insert(t.coord) {
                return Err(Error::invalid("hardware", format!("duplicate mesh coordinate {:?}", t.coord)));
            }
        }
        for l in &self.links {
            if l.a >= self.tiles.len() || l.b >= self.tiles.len() || l.a == l.b {
                return Err(Error::invalid("hardware", format!("link {}-{} is not between two tiles", l.a, l.b)));
            }
            if !(l.bandwidth.is_finite() && l.bandwidth > 0.0) {
                return Err(Error::invalid("hardware", format!("link {}-{} bandwidth must be positive", l.a, l.b)));
            }
        }
        for (name, v) in [("e_spike_pj", self.energy.e_spike_pj), ("e_route_pj", self.energy.e_route_pj)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid("hardware", format!("{name} must be a non-negative number")));
            }
        }
        Ok(())
    }

    pub fn tiles(&self) -> &[Tile] {
        &self.tiles
    }

    pub fn links(&self) -> &[MeshLink] {
        &self.links
    }

    pub fn energy(&self) -> EnergyModel {
        self.energy
    }

    pub fn num_tiles(&self) -> usize {
        self.tiles.len()
    }

    /// Smallest crossbar on the platform; clusters sized to it fit any tile.
    pub fn min_crossbar(&self) -> usize {
        self.tiles.iter().map(|t| t.crossbar_n).min().unwrap_or(0)
    }

    /// Hop count under XY routing, i.e. Manhattan distance on the mesh.
    pub fn hops(&self, a: TileId, b: TileId) -> u64 {
        let (p, q) = (self.tiles[a].coord, self.tiles[b].coord);
        u64::from(p.0.abs_diff(q.0)) + u64::from(p.1.abs_diff(q.1))
    }

    /// Tiles visited by an XY-routed packet from `a` to `b`, both included.
    /// Coordinates without a tile are skipped.
    pub fn xy_route(&self, a: TileId, b: TileId) -> Vec<(u32, u32)> {
        let (mut x, mut y) = self.tiles[a].coord;
        let (tx, ty) = self.tiles[b].coord;
        let mut path = vec![(x, y)];
        while x != tx {
            x = if x < tx { x + 1 } else { x - 1 };
            path.push((x, y));
        }
        while y != ty {
            y = if y < ty { y + 1 } else { y - 1 };
            path.push((x, y));
        }
        path
    }

    pub fn tile_at(&self, coord: (u32, u32)) -> Option<TileId> {
        self.tiles.iter().position(|t| t.coord == coord)
    }

    /// Bandwidth of the link between two adjacent coordinates, if any.
    pub fn link_bandwidth(&self, a: TileId, b: TileId) -> Option<f64> {
        self.links
            .iter()
            .find(|l| (l.a, l.b) == (a, b) || (l.b, l.a) == (a, b))
            .map(|l| l.bandwidth)
    }

    /// Copy with every buffer scaled by `factor`.
    pub fn with_buffer_scale(&self, factor: u64) -> Result<Self> {
        let mut hw = self.clone();
        for t in &mut hw.tiles {
            t.in_buffer = t.in_buffer.checked_mul(factor).ok_or(Error::Overflow("buffer size"))?;
            t.out_buffer = t.out_buffer.checked_mul(factor).ok_or(Error::Overflow("buffer size"))?;
        }
        hw.validate()?;
        Ok(hw)
    }

    /// Copy with every buffer set to `tokens`.
    pub fn with_buffers(&self, tokens: u64) -> Result<Self> {
        let mut hw = self.clone();
        for t in &mut hw.tiles {
            t.in_buffer = tokens;
            t.out_buffer = tokens;
        }
        hw.validate()?;
        Ok(hw)
    }
}

/// DYNAP-SE-like mesh with the published energy figures. Tiles are numbered
/// row-major; links join horizontal and vertical neighbours.
pub fn dynapse_preset(mesh_w: u32, mesh_h: u32, crossbar_n: usize) -> Result<HardwareGraph> {
    if mesh_w == 0 || mesh_h == 0 {
        return Err(Error::invalid("hardware", "mesh dimensions must be at least 1x1"));
    }
    let buffer = BUFFER_TOKENS_PER_ROW
        .checked_mul(crossbar_n as u64)
        .ok_or(Error::Overflow("buffer size"))?;
    let idx = |x: u32, y: u32| (y * mesh_w + x) as usize;
    let mut tiles = Vec::new();
    let mut links = Vec::new();
    for y in 0..mesh_h {
        for x in 0..mesh_w {
            tiles.push(Tile {
                id: idx(x, y),
                crossbar_n,
                in_buffer: buffer,
                out_buffer: buffer,
                coord: (x, y),
            });
            if x + 1 < mesh_w {
                links.push(MeshLink {
                    a: idx(x, y),
                    b: idx(x + 1, y),
                    bandwidth: DYNAPSE_BANDWIDTH,
                });
            }
            if y + 1 < mesh_h {
                links.push(MeshLink {
                    a: idx(x, y),
                    b: idx(x, y + 1),
                    bandwidth: DYNAPSE_BANDWIDTH,
                });
            }
        }
    }
    HardwareGraph::new(
        tiles,
        links,
        EnergyModel {
            e_spike_pj: DYNAPSE_E_SPIKE_PJ,
            e_route_pj: DYNAPSE_E_ROUTE_PJ,
        },
    )
}

/// On-disk hardware schema. Buffers are read as signed integers so that
/// negative sizes produce a validation error instead of a parse error.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HardwareFile {
    pub tiles: Vec<TileFile>,
    #[serde(default)]
    pub links: Vec<MeshLink>,
    pub energy: EnergyModel,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TileFile {
    pub id: TileId,
    pub crossbar_n: usize,
    pub in_buffer: i64,
    pub out_buffer: i64,
    pub coord: (u32, u32),
}

impl TryFrom<HardwareFile> for HardwareGraph {
    type Error = Error;

    fn try_from(f: HardwareFile) -> Result<Self> {
        let buf = |v: i64, id: TileId| {
            u64::try_from(v)
                .ok()
                .filter(|&b| b >= 1)
                .ok_or_else(|| Error::invalid("hardware", format!("tile {id} buffer size {v} must be at least 1")))
        };
        let tiles = f
            .tiles
            .into_iter()
            .map(|t| {
                Ok(Tile {
                    id: t.id,
                    crossbar_n: t.crossbar_n,
                    in_buffer: buf(t.in_buffer, t.id)?,
                    out_buffer: buf(t.out_buffer, t.id)?,
                    coord: t.coord,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        HardwareGraph::new(tiles, f.links, f.energy)
    }
}

impl From<HardwareGraph> for HardwareFile {
    fn from(h: HardwareGraph) -> Self {
        HardwareFile {
            tiles: h
                .tiles
                .into_iter()
                .map(|t| TileFile {
                    id: t.id,
                    crossbar_n: t.crossbar_n,
                    in_buffer: t.in_buffer as i64,
                    out_buffer: t.out_buffer as i64,
                    coord: t.coord,
                })
                .collect(),
            links: h.links,
            energy: h.energy,
        }
    }
}

pub fn load_hardware(path: &Path) -> Result<HardwareGraph> {
    io::read_json(path)
}

pub fn parse_hardware(text: &str) -> Result<HardwareGraph> {
    io::from_json_str(Path::new("<memory>"), text)
}

pub fn save_hardware(path: &Path, hw: &HardwareGraph) -> Result<()> {
    io::write_json(path, hw)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_mesh_preset() {
        let hw = dynapse_preset(32, 32, 128).unwrap();
        assert_eq!(hw.num_tiles(), 1024);
        assert!(hw.tiles().iter().all(|t| t.crossbar_n == 128));
        assert_eq!(hw.links().len(), 2 * 32 * 31);
        assert_eq!(hw.energy().e_spike_pj, 50.0);
        assert_eq!(hw.energy().e_route_pj, 147.0);
    }

    #[test]
    fn single_tile_has_no_links() {
        let hw = dynapse_preset(1, 1, 128).unwrap();
        assert_eq!(hw.num_tiles(), 1);
        assert!(hw.links().is_empty());
    }

    #[test]
    fn two_by_two_corners_are_two_hops_apart() {
        let hw = dynapse_preset(2, 2, 256).unwrap();
        assert_eq!(hw.num_tiles(), 4);
        assert_eq!(hw.links().len(), 4);
        assert_eq!(hw.hops(0, 3), 2);
        assert_eq!(hw.hops(1, 2), 2);
        assert_eq!(hw.xy_route(0, 3), vec![(0, 0), (1, 0), (1, 1)]);
    }

    #[test]
    fn preset_round_trips_through_json() {
        let hw = dynapse_preset(3, 2, 64).unwrap();
        let text = serde_json::to_string(&hw).unwrap();
        assert_eq!(parse_hardware(&text).unwrap(), hw);
    }

    #[test]
    fn negative_buffer_is_a_validation_error() {
        let mut v: serde_json::Value = serde_json::to_value(dynapse_preset(1, 1, 4).unwrap()).unwrap();
        v["tiles"][0]["in_buffer"] = serde_json::json!(-3);
        let err = parse_hardware(&v.to_string()).unwrap_err();
        assert!(err.to_string().contains("buffer size -3"), "{err}");
    }

    #[test]
    fn heterogeneous_tiles_are_accepted() {
        let mut v: serde_json::Value = serde_json::to_value(dynapse_preset(2, 1, 16).unwrap()).unwrap();
        v["tiles"][1]["crossbar_n"] = serde_json::json!(64);
        let hw = parse_hardware(&v.to_string()).unwrap();
        assert_eq!(hw.min_crossbar(), 16);
        v["tiles"][1]["crossbar_n"] = serde_json::json!(1);
        assert!(parse_hardware(&v.to_string()).is_err());
    }

    #[test]
    fn default_exec_model() {
        let m = ExecTimeModel::default();
        assert_eq!(m.exec_time(28, 1000).unwrap(), 128);
        let zero = ExecTimeModel {
            base: 0,
            per_input_row: 0,
            per_spike: 0,
        };
        assert_eq!(zero.exec_time(5, 5).unwrap(), 1);
    }
}
