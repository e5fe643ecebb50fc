//! Surface groups in PO(2,1) with a marked geodesic: construction, normalization,
//! collar estimates and Dirichlet polygons.

mod builder;
mod collar;
mod dirichlet;
mod group;
mod normalize;

pub use builder::{
    commutator, genus2_group, hnn_split, holed_torus, holed_torus_trace, octagon_group,
    MAX_BOUNDARY_LENGTH,
};
pub use collar::{
    axis_image_distance, axis_image_distance_lift, collar_bound, collar_check, collar_slack,
    collar_threshold_constant, collar_threshold_length, cross_ratio, geodesic_distance,
    CollarReport, CollarWitness, DEDUP_GRID,
};
pub use dirichlet::{
    dirichlet_polygon, lemma_configuration, two_side_check, DirichletPolygon, DirichletSide,
    LemmaConfiguration, PolygonStatus,
};
pub use group::{
    attracting_fixed_point, off_diagonal, projective_real_point, repelling_fixed_point, represent,
    Decomposition, Generator, MarkedGroup, RELATION_TOL,
};
pub use normalize::{normalize_axis, normalize_generic};
