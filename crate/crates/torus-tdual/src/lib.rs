pub mod lattice;
pub mod mat;
pub mod forms;
pub mod numeric;
pub mod bundles;
pub mod pushforward;
pub mod spgen;
pub mod tdual;
pub mod semiflat;
pub mod holo_shadow;
pub mod cli;
