//! Exact samplers and verifiers for uniformly random simple triangulations and
//! simple quadrangulations of the sphere, built on blossoming-tree bijections.
//!
//! The pipeline: sample a conditioned Galton-Watson tree, attach stems to get a
//! blossoming tree, root it at a balanced corner, close it into a rooted simple
//! map carrying a minimal orientation and corner labels, then measure distance
//! and scaling statistics (label sandwiches, leftmost paths, winding numbers,
//! two-point bounds, contour/label processes).

pub mod batch;
pub mod blossoming;
pub mod closure;
pub mod geodesics;
pub mod planar_map;
pub mod plane_tree;
pub mod rng;
pub mod snake;
