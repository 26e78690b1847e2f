//! Exact generation, verification and export of Tile(1,1) monotile
//! tilings.
//!
//! The engine grows patches by an iterated substitution: each step
//! mirrors the current Specter and Mystic clusters, then assembles the
//! next Specter from one Mystic and seven placed Specter copies (the
//! next Mystic drops one of the seven). All geometry lives in the ring
//! of integer combinations of twelfth roots of unity, so placements,
//! edge matching and areas are exact; floats appear only at the export
//! boundary.

pub mod cluster;
pub mod coords;
pub mod error;
pub mod export;
pub mod prototile;
pub mod substitution;
pub mod verify;

pub use cluster::{Cluster, KeyAnchor, LegacyRowEntry};
pub use coords::{CycNum, Isometry, QuadReal, SQRT3};
pub use error::{Error, Result};
pub use export::{
    export_csv, export_legacy_rows, export_transforms, load_transforms, render_svg, RenderOptions,
    Window, TRANSFORMS_FORMAT, TRANSFORMS_VERSION,
};
pub use prototile::{
    prototile, seed_m0, seed_s0, tile_area, Prototile, DIRECTION_WORD, KEY_VERTEX_INDEX,
};
pub use substitution::{
    predict_counts, run, run_guarded, run_traced, run_traced_guarded, schedule, step, step_traced,
    CountTable, IterationSchedule, MysticAnchor, StepTrace,
};
pub use verify::{
    area_check, check_chirality, check_congruence, duplicate_transforms, edge_match, euler,
    full_report, polygon_congruence, AreaMode, AreaReport, CheckSet, ChiralityReport,
    EdgeMatchReport, EdgeViolation, VerifyOptions, VerifyReport,
};
