//! Bending deformations: the planar bend, the elementary bend of the Heisenberg
//! boundary, the deformed groups and their limit sets.

mod elementary;
mod group;
mod limit;
mod planar;

pub use elementary::elementary_bend_boundary;
pub use group::{
    bend_group, default_zeta, required_zeta, BendStep, BentGroup, Token, BENT_RELATION_LIMIT,
};
pub use limit::{
    equivariant_boundary_map, equivariant_image, limit_set, BoundaryAction, LimitSample, LimitSet,
    LimitSetOptions, DEDUP_RESOLUTION, DEFAULT_MAX_SAMPLES,
};
pub use planar::{
    arg, finite_difference_distortion, planar_bend, planar_bend_inverse, planar_distortion,
    BendingParams, Distortion,
};
