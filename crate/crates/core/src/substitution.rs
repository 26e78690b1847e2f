//! The iteration engine: per-generation schedules, the eight-cell
//! Specter assembly and seven-cell Mystic assembly, key carryover, and
//! the tile-count recurrence.

use crate::cluster::{Cluster, KeyAnchor};
use crate::coords::{CycNum, Isometry};
use crate::error::{Error, Result};
use crate::prototile::{prototile, seed_m0, seed_s0};

/// Where the Mystic's copy of the role-C anchor sits.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MysticAnchor {
    /// Iteration 1: one tile past the anchor's tile (the rotated seed
    /// copy), same vertex.
    NextTile,
    /// Iteration >= 2: the anchor's tile minus the generation-(N-2)
    /// Specter count, same vertex.
    PriorGenerationOffset,
}

/// Fixed data driving one substitution step.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IterationSchedule {
    /// Rotation indices (multiples of 30 degrees) for cells 1..7.
    pub angles: [i8; 7],
    /// Key labels filling the anchor roles (A, B, C, D).
    pub roles: [u8; 4],
    /// For each next-generation label 1..4: (cell number, label inside
    /// that cell) of the anchor it inherits.
    pub key_sources: [(u8, u8); 4],
    pub mystic_anchor: MysticAnchor,
}

/// The schedule for iteration `n`. Iterations 2 and up share one
/// schedule; that the shared rule reproduces the explicit iteration-2
/// anchor rows is asserted in tests rather than assumed.
pub fn schedule(n: u32) -> Result<IterationSchedule> {
    match n {
        0 => Err(Error::BadIteration(0)),
        1 => Ok(IterationSchedule {
            angles: [5, 3, 3, 1, -1, -1, -3],
            roles: [1, 2, 3, 4],
            key_sources: [(1, 2), (4, 1), (6, 2), (7, 1)],
            mystic_anchor: MysticAnchor::NextTile,
        }),
        _ => Ok(IterationSchedule {
            angles: [4, 2, 2, 0, -2, -2, -4],
            roles: [2, 3, 4, 1],
            key_sources: [(1, 3), (4, 2), (6, 3), (7, 2)],
            mystic_anchor: MysticAnchor::PriorGenerationOffset,
        }),
    }
}

/// Expected tile counts per generation, indexed 0 (seeds) through the
/// requested maximum.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CountTable {
    pub n_s: Vec<u128>,
    pub n_m: Vec<u128>,
}

/// Evaluates the recurrence nS(n) = nM(n-1) + 7 nS(n-1),
/// nM(n) = nM(n-1) + 6 nS(n-1) from the seed counts 1 and 2.
pub fn predict_counts(max_n: u32) -> Result<CountTable> {
    let mut n_s = Vec::with_capacity(max_n as usize + 1);
    let mut n_m = Vec::with_capacity(max_n as usize + 1);
    n_s.push(1u128);
    n_m.push(2u128);
    for _ in 1..=max_n {
        let (s, m) = (*n_s.last().unwrap(), *n_m.last().unwrap());
        let next_s = s
            .checked_mul(7)
            .and_then(|t| t.checked_add(m))
            .ok_or(Error::Overflow("count"))?;
        let next_m = s
            .checked_mul(6)
            .and_then(|t| t.checked_add(m))
            .ok_or(Error::Overflow("count"))?;
        n_s.push(next_s);
        n_m.push(next_m);
    }
    Ok(CountTable { n_s, n_m })
}

/// Bookkeeping captured by one step, in the flat-row vocabulary used by
/// the reference vectors.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StepTrace {
    pub n: u32,
    /// Legacy rows of the incoming keys in role order (A, B, C, D).
    pub s_ind_rows: [u64; 4],
    /// Mystic-side rows: four at iteration 1, three afterwards.
    pub m_ind_rows: Vec<u64>,
    /// The row actually read: the Mystic copy of the role-C anchor.
    pub m_anchor_row: u64,
    /// 1-based positions of the four kept anchors among the 28 carried
    /// key rows of the assembled Specter.
    pub source_positions: [u32; 4],
    /// Labels those anchors carried before relabeling to 1..4.
    pub inherited_labels: [u8; 4],
    pub new_key_rows: [u64; 4],
    pub tiles_s: u64,
    pub tiles_m: u64,
}

/// Which role point each cell pivots about: C B C B B C B.
const ABOUT_ROLE: [usize; 7] = [2, 1, 2, 1, 1, 2, 1];
/// Which role point of the previous cell each of cells 2..7 lands on:
/// D A D D A D.
const CHAIN_ROLE: [usize; 6] = [3, 0, 3, 3, 0, 3];

/// One substitution step: consumes generation N-1, returns generation N.
pub fn step(s: Cluster, m: Cluster, n: u32) -> Result<(Cluster, Cluster)> {
    let (s, m, _) = step_traced(s, m, n)?;
    Ok((s, m))
}

/// As [`step`], also returning the row-level trace.
pub fn step_traced(s: Cluster, m: Cluster, n: u32) -> Result<(Cluster, Cluster, StepTrace)> {
    step_inner(s, m, n).map_err(|e| e.at_iteration(n))
}

fn step_inner(s: Cluster, m: Cluster, n: u32) -> Result<(Cluster, Cluster, StepTrace)> {
    let sched = schedule(n)?;
    let s = s.mirrored()?;
    let m = m.mirrored()?;
    let keys = *s.keys().ok_or(Error::NoKeys)?;

    let role_anchors = sched.roles.map(|label| keys[label as usize - 1]);
    let mut role_points = [CycNum::ZERO; 4];
    for (slot, label) in role_points.iter_mut().zip(sched.roles) {
        *slot = s.key_point(label)?;
    }

    // Locate the Mystic's copy of the role-C anchor.
    let c_anchor = role_anchors[2];
    let m_tile = match sched.mystic_anchor {
        MysticAnchor::NextTile => c_anchor.tile_ordinal as u64 + 1,
        MysticAnchor::PriorGenerationOffset => {
            let prior = predict_counts(n - 2)?.n_s[(n - 2) as usize] as u64;
            (c_anchor.tile_ordinal as u64)
                .checked_sub(prior)
                .filter(|&t| t >= 1)
                .ok_or_else(|| {
                    Error::Internal(format!(
                        "mystic anchor offset underflows: tile {} minus {}",
                        c_anchor.tile_ordinal, prior
                    ))
                })?
        }
    };
    if m_tile as usize > m.tiles().len() {
        return Err(Error::Internal(format!(
            "mystic anchor tile {} outside cluster of {}",
            m_tile,
            m.tiles().len()
        )));
    }
    let m_anchor_row = 16 * (m_tile - 1) + c_anchor.vertex_index as u64;
    let anchor_vertex = prototile().vertex(c_anchor.vertex_index);
    let m_anchor = m.tiles()[m_tile as usize - 1].apply(&anchor_vertex)?;

    // Resolve the seven placements; each lands on a key point of the
    // previous one, so the chain is exact by construction.
    let mut pivots = [Isometry::IDENTITY; 7];
    pivots[0] = Isometry::pivot(
        &role_points[ABOUT_ROLE[0]],
        sched.angles[0] as i32,
        &m_anchor,
    )?;
    for i in 1..7 {
        let target = pivots[i - 1].apply(&role_points[CHAIN_ROLE[i - 1]])?;
        pivots[i] = Isometry::pivot(&role_points[ABOUT_ROLE[i]], sched.angles[i] as i32, &target)?;
    }

    // Assemble the Specter: the Mystic, then seven placed Specter
    // copies. Built flat to keep the peak at two generations of tiles.
    let n_s_prev = s.tiles().len();
    let n_m_prev = m.tiles().len();
    let total_s = n_m_prev + 7 * n_s_prev;
    let total_m = n_m_prev + 6 * n_s_prev;
    let (m_tiles, _) = m.into_parts();
    let mut out_s: Vec<Isometry> = Vec::with_capacity(total_s);
    out_s.extend(m_tiles);
    for p in &pivots {
        for t in s.tiles() {
            out_s.push(p.compose(t)?);
        }
    }

    // The Mystic drops cell 3 and carries no keys.
    let mut out_m: Vec<Isometry> = Vec::with_capacity(total_m);
    out_m.extend_from_slice(&out_s[..n_m_prev + 2 * n_s_prev]);
    out_m.extend_from_slice(&out_s[n_m_prev + 3 * n_s_prev..]);

    // Next-generation keys, picked per key_sources and relabeled 1..4.
    let mut new_keys = [keys[0]; 4];
    let mut source_positions = [0u32; 4];
    for (i, &(cell, within)) in sched.key_sources.iter().enumerate() {
        let src = keys[within as usize - 1];
        let offset = n_m_prev as u64 + (cell as u64 - 1) * n_s_prev as u64;
        let ordinal = offset + src.tile_ordinal as u64;
        new_keys[i] = KeyAnchor {
            label: i as u8 + 1,
            tile_ordinal: u32::try_from(ordinal).map_err(|_| Error::Overflow("tile ordinal"))?,
            vertex_index: src.vertex_index,
        };
        source_positions[i] = (cell as u32 - 1) * 4 + within as u32;
    }

    let m_ind_rows = match sched.mystic_anchor {
        MysticAnchor::NextTile => role_anchors.iter().map(|a| a.legacy_row() + 16).collect(),
        MysticAnchor::PriorGenerationOffset => {
            let shift = c_anchor.legacy_row() - m_anchor_row;
            role_anchors[..3]
                .iter()
                .map(|a| {
                    a.legacy_row().checked_sub(shift).ok_or_else(|| {
                        Error::Internal(format!(
                            "mystic row for anchor at row {} underflows by {shift}",
                            a.legacy_row()
                        ))
                    })
                })
                .collect::<Result<Vec<u64>>>()?
        }
    };
    let trace = StepTrace {
        n,
        s_ind_rows: role_anchors.map(|a| a.legacy_row()),
        m_ind_rows,
        m_anchor_row,
        source_positions,
        inherited_labels: sched.key_sources.map(|(_, within)| within),
        new_key_rows: new_keys.each_ref().map(KeyAnchor::legacy_row),
        tiles_s: total_s as u64,
        tiles_m: total_m as u64,
    };

    let out_s = Cluster::new(out_s, Some(new_keys))?;
    let out_m = Cluster::new(out_m, None)?;
    Ok((out_s, out_m, trace))
}

/// Runs `max_n` substitution steps from the seeds and returns the
/// Specter cluster.
pub fn run(max_n: u32) -> Result<Cluster> {
    Ok(run_traced_guarded(max_n, None)?.0)
}

/// As [`run`], refusing before allocation if the predicted tile count
/// exceeds `max_tiles`.
pub fn run_guarded(max_n: u32, max_tiles: Option<u64>) -> Result<Cluster> {
    Ok(run_traced_guarded(max_n, max_tiles)?.0)
}

/// As [`run`], also returning one trace per step.
pub fn run_traced(max_n: u32) -> Result<(Cluster, Vec<StepTrace>)> {
    run_traced_guarded(max_n, None)
}

pub fn run_traced_guarded(max_n: u32, max_tiles: Option<u64>) -> Result<(Cluster, Vec<StepTrace>)> {
    let counts = predict_counts(max_n)?;
    if let Some(limit) = max_tiles {
        let requested = counts.n_s[max_n as usize];
        if requested > limit as u128 {
            return Err(Error::GuardExceeded { requested, limit });
        }
    }
    let mut s = seed_s0();
    let mut m = seed_m0();
    let mut traces = Vec::with_capacity(max_n as usize);
    for n in 1..=max_n {
        let (next_s, next_m, trace) = step_traced(s, m, n)?;
        if next_s.tiles().len() as u128 != counts.n_s[n as usize]
            || next_m.tiles().len() as u128 != counts.n_m[n as usize]
        {
            return Err(Error::Internal(format!(
                "iteration {n} produced {}/{} tiles, recurrence predicts {}/{}",
                next_s.tiles().len(),
                next_m.tiles().len(),
                counts.n_s[n as usize],
                counts.n_m[n as usize],
            )));
        }
        s = next_s;
        m = next_m;
        traces.push(trace);
    }
    Ok((s, traces))
}
