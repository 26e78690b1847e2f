//! The Tile(1,1) polygon and the two seed clusters.

use std::sync::OnceLock;

use crate::cluster::{Cluster, KeyAnchor};
use crate::coords::{CycNum, Isometry, QuadReal};

/// Edge direction exponents: edge `i` is the unit vector `z^{w[i]}`.
/// The fourteen edges traverse the boundary clockwise and sum to zero.
pub const DIRECTION_WORD: [u8; 14] = [3, 1, 4, 2, 11, 9, 0, 10, 7, 9, 6, 8, 5, 3];

/// Vertex indices (1-based) of the four key vertices, by label 1..4.
pub const KEY_VERTEX_INDEX: [u8; 4] = [4, 6, 8, 14];

/// Four times the signed shoelace area of the base polygon, as a pair
/// `(r, s)` meaning `r + s*sqrt(3)`. Negative because the vertex order
/// runs clockwise; reflected placements flip the sign.
pub const SIGNED_AREA_X4: (i64, i64) = (-12, -12);

/// The 14-gon itself. Vertices are derived from [`DIRECTION_WORD`] by
/// prefix sums, with `V1` at the origin and implicit closure `V15 = V1`.
#[derive(Debug)]
pub struct Prototile {
    vertices: [CycNum; 14],
}

static PROTOTILE: OnceLock<Prototile> = OnceLock::new();

pub fn prototile() -> &'static Prototile {
    PROTOTILE.get_or_init(|| {
        let mut vertices = [CycNum::ZERO; 14];
        let mut pos = CycNum::ZERO;
        for (i, &w) in DIRECTION_WORD.iter().enumerate() {
            vertices[i] = pos;
            pos = pos
                .checked_add(&CycNum::zeta(w as i32))
                .expect("prototile coordinates are tiny");
        }
        debug_assert_eq!(pos, CycNum::ZERO);
        Prototile { vertices }
    })
}

impl Prototile {
    pub fn vertices(&self) -> &[CycNum; 14] {
        &self.vertices
    }

    /// Vertex by 1-based index; 15 wraps to the closure copy of `V1`.
    pub fn vertex(&self, index: u8) -> CycNum {
        debug_assert!((1..=15).contains(&index));
        self.vertices[(index as usize - 1) % 14]
    }

    /// Vertex index (1-based) of the key vertex with the given label.
    pub fn key_vertex(label: u8) -> Option<u8> {
        (1..=4)
            .contains(&label)
            .then(|| KEY_VERTEX_INDEX[label as usize - 1])
    }

    /// Center and radius of a disc containing the tile, in floats.
    /// Conservative uses (window culling) should pad the radius.
    pub fn bounding_disc(&self) -> ((f64, f64), f64) {
        let (mut cx, mut cy) = (0.0, 0.0);
        for v in &self.vertices {
            let (x, y) = v.to_xy();
            cx += x;
            cy += y;
        }
        cx /= 14.0;
        cy /= 14.0;
        let mut r2: f64 = 0.0;
        for v in &self.vertices {
            let (x, y) = v.to_xy();
            r2 = r2.max((x - cx).powi(2) + (y - cy).powi(2));
        }
        ((cx, cy), r2.sqrt())
    }
}

/// The tile's area, `3 + 3*sqrt(3)`, as an exact quadratic real.
pub fn tile_area() -> QuadReal {
    QuadReal::new(6, 6)
}

/// The generation-0 Specter: one identity tile carrying the four key
/// anchors.
pub fn seed_s0() -> Cluster {
    let keys = [1u8, 2, 3, 4].map(|label| KeyAnchor {
        label,
        tile_ordinal: 1,
        vertex_index: KEY_VERTEX_INDEX[label as usize - 1],
    });
    Cluster::new(vec![Isometry::IDENTITY], Some(keys)).expect("seed cluster is valid")
}

/// The generation-0 Mystic: the identity tile plus a copy rotated by
/// -30 degrees and shifted to `(sqrt(3)/2, -3/2)`; carries no keys.
pub fn seed_m0() -> Cluster {
    let second = Isometry::new(false, 11, CycNum::new(0, 1, 0, -2));
    Cluster::new(vec![Isometry::IDENTITY, second], None).expect("seed cluster is valid")
}
