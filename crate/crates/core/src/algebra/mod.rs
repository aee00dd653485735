//! Set algebra over a database: projection, de-projection, propagation
//! along all paths, inference through common lesser collections, product
//! (bottom) collections and aggregates.

mod ops;
mod paths;
mod product;
mod set;

pub use ops::{
    count, deproject, deproject_union, infer, intersect_deprojections, project, project_union,
    star_deproject, star_project, sum, Inference, Via, INDEPENDENT_WARNING,
};
pub use paths::{common_lesser_collections, enumerate_up_paths, propagation_paths, PropagationPath, Segment};
pub use product::{
    make_product, product_deproject, product_project, product_star_deproject, product_star_project, Factor,
    ProductCollection, ProductSet,
};
pub use set::{Domain, ElementSet, PrimitiveDomain};
