//! Structural verification: proves a cluster is an edge-to-edge tiling
//! by congruent, uniformly-chiral copies of the prototile.
//!
//! The verdict rests on exact data only. Edge pairing, Euler counting
//! and area conservation all use the integer quadruples; floats appear
//! solely in reported residuals.

use rayon::prelude::*;
use serde::Serialize;

use crate::cluster::Cluster;
use crate::coords::CycNum;
use crate::error::{Error, Result};
use crate::prototile::{tile_area, DIRECTION_WORD, SIGNED_AREA_X4};
use crate::substitution::CountTable;

/// How [`area_check`] accumulates tile areas.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AreaMode {
    #[default]
    Exact,
    Float,
}

/// Which checks [`full_report`] runs. Euler needs the edge survey and
/// runs it even when `edges` alone is off.
#[derive(Clone, Copy, Debug)]
pub struct CheckSet {
    pub congruence: bool,
    pub chirality: bool,
    pub edges: bool,
    pub euler: bool,
    pub area: bool,
    pub duplicates: bool,
}

impl Default for CheckSet {
    fn default() -> CheckSet {
        CheckSet {
            congruence: true,
            chirality: true,
            edges: true,
            euler: true,
            area: true,
            duplicates: true,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct VerifyOptions {
    pub area_mode: AreaMode,
    /// Pass count for the sharded edge/vertex survey; `None` picks one
    /// pass for small clusters and eight for multi-million-tile ones.
    pub shard_passes: Option<usize>,
    pub checks: CheckSet,
}

#[derive(Clone, Debug, Serialize)]
pub struct ChiralityReport {
    pub uniform: bool,
    /// The shared reflect flag; `None` for an empty cluster.
    pub reflected: Option<bool>,
    /// 1-based ordinals of tiles disagreeing with tile 1.
    pub violations: Vec<u32>,
}

/// An edge whose slot counts break the once-or-twice-opposed rule.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct EdgeViolation {
    pub a: [i64; 4],
    pub b: [i64; 4],
    pub forward: u64,
    pub reverse: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct EdgeMatchReport {
    pub interior: u64,
    pub boundary: u64,
    pub violations: Vec<EdgeViolation>,
}

#[derive(Clone, Debug, Serialize)]
pub struct AreaReport {
    pub mode: AreaMode,
    /// Relative residual |sum of tile areas - tiles * area| / expected.
    pub residual: f64,
    /// Ordinals of tiles whose signed area disagrees with their
    /// chirality (base winding is clockwise, so unreflected means
    /// negative).
    pub sign_violations: Vec<u32>,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub tiles: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected_tiles: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub count_matches: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected_reflected: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chirality: Option<ChiralityReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub congruence_failures: Option<Vec<u32>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub interior_edges: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub boundary_edges: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub edge_violations: Option<Vec<EdgeViolation>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vertices: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub edges: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub euler: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub area: Option<AreaReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub duplicate_tiles: Option<Vec<[u32; 2]>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub key_rows: Option<[u64; 4]>,
    pub pass: bool,
}

/// Matches a 14-gon against the prototile's direction word. Returns
/// `(reflected, k)` when the polygon is the prototile mirrored
/// (optionally) and rotated by `k * 30` degrees; the pair is unique
/// because the word is not self-similar under the mirror relation.
pub fn polygon_congruence(poly: &[CycNum; 14]) -> Option<(bool, u8)> {
    let mut dirs = [0i32; 14];
    for i in 0..14 {
        let e = poly[(i + 1) % 14].checked_sub(&poly[i]).ok()?;
        dirs[i] = direction_index(&e)?;
    }
    let w = DIRECTION_WORD.map(|x| x as i32);
    let k = (dirs[0] - w[0]).rem_euclid(12);
    if (0..14).all(|i| dirs[i] == (w[i] + k).rem_euclid(12)) {
        return Some((false, k as u8));
    }
    let k = (dirs[0] - (6 - w[0])).rem_euclid(12);
    if (0..14).all(|i| dirs[i] == (6 - w[i] + k).rem_euclid(12)) {
        return Some((true, k as u8));
    }
    None
}

fn direction_index(e: &CycNum) -> Option<i32> {
    (0..12).find(|&k| *e == CycNum::zeta(k))
}

/// 1-based ordinals of tiles whose materialized polygon is not a rigid
/// image of the prototile.
pub fn check_congruence(c: &Cluster) -> Result<Vec<u32>> {
    let mut failures: Vec<u32> = (0..c.tiles().len())
        .into_par_iter()
        .map(|i| -> Result<Option<u32>> {
            let poly = c.tile_vertices(i)?;
            Ok(match polygon_congruence(&poly) {
                Some(_) => None,
                None => Some(i as u32 + 1),
            })
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    failures.sort_unstable();
    Ok(failures)
}

pub fn check_chirality(c: &Cluster) -> ChiralityReport {
    let Some(first) = c.tiles().first() else {
        return ChiralityReport {
            uniform: true,
            reflected: None,
            violations: Vec::new(),
        };
    };
    let violations: Vec<u32> = c
        .tiles()
        .iter()
        .enumerate()
        .filter(|(_, t)| t.reflect != first.reflect)
        .map(|(i, _)| i as u32 + 1)
        .collect();
    ChiralityReport {
        uniform: violations.is_empty(),
        reflected: violations.is_empty().then_some(first.reflect),
        violations,
    }
}

/// Duplicate placements as 1-based ordinal pairs, each pair adjacent in
/// transform order.
pub fn duplicate_transforms(c: &Cluster) -> Vec<[u32; 2]> {
    let tiles = c.tiles();
    let mut order: Vec<u32> = (0..tiles.len() as u32).collect();
    order.par_sort_unstable_by(|&i, &j| {
        tiles[i as usize]
            .cmp(&tiles[j as usize])
            .then_with(|| i.cmp(&j))
    });
    let mut dups = Vec::new();
    for pair in order.windows(2) {
        if tiles[pair[0] as usize] == tiles[pair[1] as usize] {
            dups.push([pair[0] + 1, pair[1] + 1]);
        }
    }
    dups.sort_unstable();
    dups
}

fn pack_point(p: &CycNum) -> Result<[i32; 4]> {
    let narrow = |v: i64| i32::try_from(v).map_err(|_| Error::Overflow("survey key"));
    Ok([narrow(p.a)?, narrow(p.b)?, narrow(p.c)?, narrow(p.d)?])
}

fn mix(words: &[i32]) -> u64 {
    let mut h: u64 = 0x243F_6A88_85A3_08D3;
    for &w in words {
        h ^= w as u32 as u64;
        h = h.wrapping_mul(0x9E37_79B9_7F4A_7C15);
        h ^= h >> 29;
    }
    h ^ (h >> 32)
}

struct Survey {
    interior: u64,
    boundary: u64,
    violations: Vec<EdgeViolation>,
    distinct_edges: u64,
    distinct_vertices: u64,
}

fn auto_passes(tiles: usize) -> usize {
    if tiles > 3_000_000 {
        8
    } else {
        1
    }
}

/// Multi-pass sort-based tally of edge and vertex incidences. Each pass
/// keeps only keys hashing into its shard, so peak memory is bounded by
/// the shard size; results do not depend on pass count or thread count.
fn survey(c: &Cluster, passes: usize) -> Result<Survey> {
    let n = c.tiles().len();
    let passes = passes.max(1) as u64;
    let mut out = Survey {
        interior: 0,
        boundary: 0,
        violations: Vec::new(),
        distinct_edges: 0,
        distinct_vertices: 0,
    };

    for pass in 0..passes {
        let mut edges: Vec<([i32; 8], bool)> = (0..n)
            .into_par_iter()
            .try_fold(Vec::new, |mut acc, i| -> Result<Vec<([i32; 8], bool)>> {
                let poly = c.tile_vertices(i)?;
                let mut packed = [[0i32; 4]; 14];
                for (slot, p) in packed.iter_mut().zip(&poly) {
                    *slot = pack_point(p)?;
                }
                for j in 0..14 {
                    let (p, q) = (packed[j], packed[(j + 1) % 14]);
                    let (lo, hi, forward) = if p <= q { (p, q, true) } else { (q, p, false) };
                    let mut key = [0i32; 8];
                    key[..4].copy_from_slice(&lo);
                    key[4..].copy_from_slice(&hi);
                    if passes == 1 || mix(&key) % passes == pass {
                        acc.push((key, forward));
                    }
                }
                Ok(acc)
            })
            .try_reduce(Vec::new, |mut a, mut b| -> Result<Vec<([i32; 8], bool)>> {
                a.append(&mut b);
                Ok(a)
            })?;
        edges.par_sort_unstable();

        let mut idx = 0;
        while idx < edges.len() {
            let key = edges[idx].0;
            let mut forward = 0u64;
            let mut reverse = 0u64;
            while idx < edges.len() && edges[idx].0 == key {
                if edges[idx].1 {
                    forward += 1;
                } else {
                    reverse += 1;
                }
                idx += 1;
            }
            out.distinct_edges += 1;
            match (forward, reverse) {
                (1, 0) | (0, 1) => out.boundary += 1,
                (1, 1) => out.interior += 1,
                _ => out.violations.push(EdgeViolation {
                    a: [key[0] as i64, key[1] as i64, key[2] as i64, key[3] as i64],
                    b: [key[4] as i64, key[5] as i64, key[6] as i64, key[7] as i64],
                    forward,
                    reverse,
                }),
            }
        }
    }

    for pass in 0..passes {
        let mut verts: Vec<[i32; 4]> = (0..n)
            .into_par_iter()
            .try_fold(Vec::new, |mut acc, i| -> Result<Vec<[i32; 4]>> {
                let poly = c.tile_vertices(i)?;
                for p in &poly {
                    let key = pack_point(p)?;
                    if passes == 1 || mix(&key) % passes == pass {
                        acc.push(key);
                    }
                }
                Ok(acc)
            })
            .try_reduce(Vec::new, |mut a, mut b| -> Result<Vec<[i32; 4]>> {
                a.append(&mut b);
                Ok(a)
            })?;
        verts.par_sort_unstable();
        verts.dedup();
        out.distinct_vertices += verts.len() as u64;
    }

    out.violations.sort_unstable();
    Ok(out)
}

/// Classifies every undirected unit edge: once is boundary, twice in
/// opposite directions is interior, anything else is a violation.
pub fn edge_match(c: &Cluster) -> Result<EdgeMatchReport> {
    let s = survey(c, auto_passes(c.tiles().len()))?;
    Ok(EdgeMatchReport {
        interior: s.interior,
        boundary: s.boundary,
        violations: s.violations,
    })
}

/// Euler characteristic V - E + F of the patch; 1 for a simply
/// connected patch without holes. Requires clean edge matching.
pub fn euler(c: &Cluster) -> Result<i64> {
    let s = survey(c, auto_passes(c.tiles().len()))?;
    if !s.violations.is_empty() {
        return Err(Error::Precondition(
            "euler characteristic needs clean edge matching".into(),
        ));
    }
    Ok(s.distinct_vertices as i64 - s.distinct_edges as i64 + c.tiles().len() as i64)
}

/// Signed 4-area of one materialized tile as an `(r, s)` pair meaning
/// `r + s*sqrt(3)`.
fn tile_area_x4(poly: &[CycNum; 14]) -> Result<(i64, i64)> {
    let (mut r, mut s) = (0i64, 0i64);
    for j in 0..14 {
        let prod = poly[j].conj()?.checked_mul(&poly[(j + 1) % 14])?;
        r = prod
            .b
            .checked_add(prod.d.checked_mul(2).ok_or(Error::Overflow("area"))?)
            .and_then(|t| t.checked_add(r))
            .ok_or(Error::Overflow("area"))?;
        s = s.checked_add(prod.c).ok_or(Error::Overflow("area"))?;
    }
    Ok((r, s))
}

fn pair_sign(r: i64, s: i64) -> i32 {
    match (r.signum(), s.signum()) {
        (0, 0) => 0,
        (a, b) if a >= 0 && b >= 0 => 1,
        (a, b) if a <= 0 && b <= 0 => -1,
        (a, _) => {
            let r2 = (r.unsigned_abs() as u128).pow(2);
            let s2 = (s.unsigned_abs() as u128).pow(2) * 3;
            if r2 == s2 {
                0
            } else if (r2 > s2) == (a > 0) {
                1
            } else {
                -1
            }
        }
    }
}

/// Conservation of area: the summed magnitudes of per-tile shoelace
/// areas must equal tiles * (3 + 3*sqrt(3)), and every tile's sign must
/// match its chirality.
pub fn area_check(c: &Cluster, mode: AreaMode) -> Result<AreaReport> {
    let n = c.tiles().len();
    let expected_sign = |reflected: bool| if reflected { 1 } else { -1 };

    let mut sign_violations: Vec<u32>;
    let residual = match mode {
        AreaMode::Exact => {
            let (sum_r, sum_s, viols) = (0..n)
                .into_par_iter()
                .try_fold(
                    || (0i128, 0i128, Vec::new()),
                    |(mut r, mut s, mut v), i| -> Result<(i128, i128, Vec<u32>)> {
                        let poly = c.tile_vertices(i)?;
                        let (tr, ts) = tile_area_x4(&poly)?;
                        if pair_sign(tr, ts) != expected_sign(c.tiles()[i].reflect) {
                            v.push(i as u32 + 1);
                        }
                        // Accumulate magnitudes; sign uniformity is
                        // reported separately.
                        let flip = if pair_sign(tr, ts) < 0 { -1i128 } else { 1 };
                        r += flip * tr as i128;
                        s += flip * ts as i128;
                        Ok((r, s, v))
                    },
                )
                .try_reduce(
                    || (0i128, 0i128, Vec::new()),
                    |(r1, s1, mut v1), (r2, s2, mut v2)| {
                        v1.append(&mut v2);
                        Ok((r1 + r2, s1 + s2, v1))
                    },
                )?;
            sign_violations = viols;
            // Expected 4-area magnitude is tiles * (12 + 12*sqrt(3)).
            let er = SIGNED_AREA_X4.0.unsigned_abs() as i128 * n as i128;
            let es = SIGNED_AREA_X4.1.unsigned_abs() as i128 * n as i128;
            let (dr, ds) = (sum_r - er, sum_s - es);
            let num = (dr as f64 + crate::coords::SQRT3 * ds as f64).abs();
            let den = er as f64 + crate::coords::SQRT3 * es as f64;
            if den == 0.0 {
                0.0
            } else {
                num / den
            }
        }
        AreaMode::Float => {
            sign_violations = Vec::new();
            let mut total = 0.0f64;
            for i in 0..n {
                let poly = c.tile_vertices(i)?;
                let mut acc = 0.0f64;
                for j in 0..14 {
                    let (x1, y1) = poly[j].to_xy();
                    let (x2, y2) = poly[(j + 1) % 14].to_xy();
                    acc += x1 * y2 - x2 * y1;
                }
                let signed = acc / 2.0;
                let sign = if signed < 0.0 { -1 } else { 1 };
                if sign != expected_sign(c.tiles()[i].reflect) {
                    sign_violations.push(i as u32 + 1);
                }
                total += signed.abs();
            }
            let expected = n as f64 * tile_area().to_f64();
            if expected == 0.0 {
                0.0
            } else {
                (total - expected).abs() / expected
            }
        }
    };
    sign_violations.sort_unstable();
    Ok(AreaReport {
        mode,
        residual,
        sign_violations,
    })
}

/// Runs the selected checks and aggregates the verdict. `expected`
/// supplies the tile-count prediction for generation `n`.
pub fn full_report(
    c: &Cluster,
    expected: &CountTable,
    n: u32,
    opts: &VerifyOptions,
) -> Result<VerifyReport> {
    let idx = n as usize;
    if idx >= expected.n_s.len() {
        return Err(Error::Precondition(format!(
            "count table covers 0..={}, asked for {n}",
            expected.n_s.len().saturating_sub(1)
        )));
    }
    let tiles = c.tiles().len() as u64;
    let expected_tiles = u64::try_from(expected.n_s[idx]).map_err(|_| Error::Overflow("count"))?;
    let count_matches = tiles == expected_tiles;
    let expected_reflected = n % 2 == 1;
    let mut pass = count_matches;

    let checks = &opts.checks;
    let chirality = checks.chirality.then(|| check_chirality(c));
    if let Some(ch) = &chirality {
        pass &= ch.uniform && (tiles == 0 || ch.reflected == Some(expected_reflected));
    }

    let congruence_failures = if checks.congruence {
        let f = check_congruence(c)?;
        pass &= f.is_empty();
        Some(f)
    } else {
        None
    };

    let mut interior_edges = None;
    let mut boundary_edges = None;
    let mut edge_violations = None;
    let mut vertices = None;
    let mut edges = None;
    let mut euler_out = None;
    if checks.edges || checks.euler {
        let passes = opts
            .shard_passes
            .unwrap_or_else(|| auto_passes(c.tiles().len()));
        let s = survey(c, passes)?;
        let clean = s.violations.is_empty();
        pass &= clean;
        pass &= 2 * s.interior + s.boundary + slot_excess(&s.violations) == 14 * tiles;
        interior_edges = Some(s.interior);
        boundary_edges = Some(s.boundary);
        vertices = Some(s.distinct_vertices);
        edges = Some(s.distinct_edges);
        edge_violations = Some(s.violations);
        // With violations present, V - E + F is meaningless; the failed
        // edge check already fails the report.
        if checks.euler && clean {
            let e = s.distinct_vertices as i64 - s.distinct_edges as i64 + tiles as i64;
            pass &= e == 1;
            euler_out = Some(e);
        }
    }

    let area = if checks.area {
        let a = area_check(c, opts.area_mode)?;
        let tol = match opts.area_mode {
            AreaMode::Exact => 0.0,
            AreaMode::Float => 1e-9,
        };
        pass &= a.residual <= tol && a.sign_violations.is_empty();
        Some(a)
    } else {
        None
    };

    let duplicate_tiles = if checks.duplicates {
        let d = duplicate_transforms(c);
        pass &= d.is_empty();
        Some(d)
    } else {
        None
    };

    Ok(VerifyReport {
        tiles,
        expected_tiles: Some(expected_tiles),
        count_matches: Some(count_matches),
        expected_reflected: Some(expected_reflected),
        chirality,
        congruence_failures,
        interior_edges,
        boundary_edges,
        edge_violations,
        vertices,
        edges,
        euler: euler_out,
        area,
        duplicate_tiles,
        key_rows: c.legacy_key_rows().ok(),
        pass,
    })
}

fn slot_excess(violations: &[EdgeViolation]) -> u64 {
    violations.iter().map(|v| v.forward + v.reverse).sum()
}
