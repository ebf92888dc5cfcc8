//! Seam sequences and the seam-driven UV pipeline.
//!
//! A seam is a set of 3D segments. Sequences are oriented and sorted in yzx
//! order and flattened to six quantized coordinates per segment. On a mesh,
//! segment endpoints snap to vertices, shortest edge paths join them, the
//! mesh is cut along those paths, and every disk-shaped chart is flattened
//! and scored by its conformal energy.

mod chart;
mod cut;
mod sequence;
mod structural;

pub use chart::{
    extract_charts, face_distortion, flatten_all, flatten_chart, parse_uv_obj, triangle_energy, write_uv_obj, Chart,
    Distortion, Uv,
};
pub use cut::{cut_mesh, geodesic_connect, seam_paths, snap_to_mesh, CutReport, Snapped};
pub use sequence::{
    decode_seam, encode_seam, order_seams, parse_seam_text, ratio_of, read_seam_records, seam_ratio,
    write_seam_records, write_seam_text, RatioBand, SeamRatio, SeamRecord, SeamSegment, SeamSequence,
    SEAM_RATIO_BAND,
};
pub use structural::{
    allocate_edge_points, edge_samples, sample_structural, StructuralSamples, EDGE_POINTS, VERTEX_POINTS,
};
