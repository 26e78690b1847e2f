//! Clusters: ordered placed tiles plus the four labeled key anchors
//! that the substitution step steers by.

use crate::coords::{CycNum, Isometry};
use crate::error::{Error, Result};
use crate::prototile::{prototile, KEY_VERTEX_INDEX};

/// A labeled key vertex, addressed structurally as (tile, vertex) so it
/// survives placement without coordinate bookkeeping.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct KeyAnchor {
    /// Key label, 1..=4.
    pub label: u8,
    /// 1-based index into the cluster's tile sequence.
    pub tile_ordinal: u32,
    /// 1-based prototile vertex index; always one of 4, 6, 8, 14.
    pub vertex_index: u8,
}

impl KeyAnchor {
    /// Row of this anchor in the flat 16-rows-per-tile layout.
    pub fn legacy_row(&self) -> u64 {
        16 * (self.tile_ordinal as u64 - 1) + self.vertex_index as u64
    }
}

/// One entry of the 16-rows-per-tile layout: vertices 1..15 (15 repeats
/// vertex 1 for closure), then a separator row.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LegacyRowEntry {
    Point {
        tile_ordinal: u32,
        vertex_index: u8,
        point: CycNum,
    },
    Separator {
        tile_ordinal: u32,
    },
}

/// An ordered patch of placed tiles. Keys are either absent (Mystic
/// clusters) or exactly four anchors ordered by label.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cluster {
    tiles: Vec<Isometry>,
    keys: Option<[KeyAnchor; 4]>,
}

impl Cluster {
    /// Builds a cluster, validating key anchors against the tile count.
    /// Chirality and distinctness are deliberately not enforced here so
    /// that the verifier can be exercised on malformed inputs.
    pub fn new(tiles: Vec<Isometry>, keys: Option<[KeyAnchor; 4]>) -> Result<Cluster> {
        if let Some(keys) = &keys {
            for (i, anchor) in keys.iter().enumerate() {
                if anchor.label as usize != i + 1 {
                    return Err(Error::InvalidCluster(format!(
                        "key {} carries label {}",
                        i + 1,
                        anchor.label
                    )));
                }
                if !KEY_VERTEX_INDEX.contains(&anchor.vertex_index) {
                    return Err(Error::InvalidCluster(format!(
                        "key {} anchors vertex {}, not a key vertex",
                        anchor.label, anchor.vertex_index
                    )));
                }
                let t = anchor.tile_ordinal;
                if t == 0 || t as usize > tiles.len() {
                    return Err(Error::InvalidCluster(format!(
                        "key {} anchors tile {} of {}",
                        anchor.label,
                        t,
                        tiles.len()
                    )));
                }
            }
        }
        Ok(Cluster { tiles, keys })
    }

    pub fn tiles(&self) -> &[Isometry] {
        &self.tiles
    }

    pub fn keys(&self) -> Option<&[KeyAnchor; 4]> {
        self.keys.as_ref()
    }

    pub(crate) fn into_parts(self) -> (Vec<Isometry>, Option<[KeyAnchor; 4]>) {
        (self.tiles, self.keys)
    }

    pub fn without_keys(mut self) -> Cluster {
        self.keys = None;
        self
    }

    /// The placed position of the key vertex with the given label.
    pub fn key_point(&self, label: u8) -> Result<CycNum> {
        let keys = self.keys.as_ref().ok_or(Error::NoKeys)?;
        if !(1..=4).contains(&label) {
            return Err(Error::Precondition(format!(
                "key label {label} not in 1..=4"
            )));
        }
        let anchor = &keys[label as usize - 1];
        let vertex = prototile().vertex(anchor.vertex_index);
        self.tiles[anchor.tile_ordinal as usize - 1].apply(&vertex)
    }

    /// Legacy rows of the four keys, ordered by label.
    pub fn legacy_key_rows(&self) -> Result<[u64; 4]> {
        let keys = self.keys.as_ref().ok_or(Error::NoKeys)?;
        Ok(keys.each_ref().map(KeyAnchor::legacy_row))
    }

    /// All 14 vertices of one tile (0-based index), placed.
    pub fn tile_vertices(&self, index: usize) -> Result<[CycNum; 14]> {
        let iso = self
            .tiles
            .get(index)
            .ok_or_else(|| Error::Precondition(format!("tile index {index} out of range")))?;
        let mut out = [CycNum::ZERO; 14];
        for (slot, v) in out.iter_mut().zip(prototile().vertices()) {
            *slot = iso.apply(v)?;
        }
        Ok(out)
    }

    /// Applies `outer` in front of every tile transform; keys carry over
    /// positionally.
    pub fn transformed(&self, outer: &Isometry) -> Result<Cluster> {
        let mut tiles = Vec::with_capacity(self.tiles.len());
        for t in &self.tiles {
            tiles.push(outer.compose(t)?);
        }
        Ok(Cluster {
            tiles,
            keys: self.keys,
        })
    }

    /// Carries the point `about` to `to` with a rotation by `k * 30`
    /// degrees, moving the whole cluster rigidly.
    pub fn place(&self, about: &CycNum, k: i32, to: &CycNum) -> Result<Cluster> {
        self.transformed(&Isometry::pivot(about, k, to)?)
    }

    /// Mirror image across the imaginary axis.
    pub fn mirrored(&self) -> Result<Cluster> {
        self.transformed(&Isometry::MIRROR)
    }

    /// Concatenates parts in order. The result carries no keys; the
    /// substitution step assigns them explicitly.
    pub fn concat(parts: &[Cluster]) -> Result<Cluster> {
        let mut reflect: Option<bool> = None;
        let total = parts.iter().map(|p| p.tiles.len()).sum();
        let mut tiles = Vec::with_capacity(total);
        for part in parts {
            for t in &part.tiles {
                if *reflect.get_or_insert(t.reflect) != t.reflect {
                    return Err(Error::MixedChirality);
                }
                tiles.push(*t);
            }
        }
        Ok(Cluster { tiles, keys: None })
    }

    /// Number of rows in the 16-rows-per-tile layout.
    pub fn legacy_row_count(&self) -> u64 {
        16 * self.tiles.len() as u64
    }

    /// Resolves a 1-based row of the legacy layout.
    pub fn legacy_row(&self, row: u64) -> Result<LegacyRowEntry> {
        if row == 0 || row > self.legacy_row_count() {
            return Err(Error::Precondition(format!(
                "legacy row {row} out of 1..={}",
                self.legacy_row_count()
            )));
        }
        let tile_ordinal = ((row - 1) / 16) as u32 + 1;
        let offset = ((row - 1) % 16) as u8 + 1;
        if offset == 16 {
            return Ok(LegacyRowEntry::Separator { tile_ordinal });
        }
        let vertex = prototile().vertex(offset);
        let point = self.tiles[tile_ordinal as usize - 1].apply(&vertex)?;
        Ok(LegacyRowEntry::Point {
            tile_ordinal,
            vertex_index: offset,
            point,
        })
    }
}
