//! Binary-mask and histogram operations on single slices.

mod components;
mod distance;
mod histogram;
mod hull;
mod morphology;
mod threshold;

pub use components::{
    components_touching, connected_components, fill_holes, holes, inner_component,
    largest_component, Components,
};
pub use distance::{
    boundary_pixels, edt_squared, signed_distance, truncated_outside_distance, TruncatedDistance,
};
pub use histogram::{bin_of, histogram_match, match_values, Histogram, BINS};
pub use hull::{convex_hull, convex_hull_mask};
pub use morphology::{
    dilate_disk, erode_by_circumscribed_fraction, erode_disk, min_enclosing_circle, Circle,
    Erosion,
};
pub use threshold::{above_threshold, otsu_from_histogram, otsu_threshold, otsu_threshold_values};
