//! Kernel density surfaces over building locations and their hotspots.

mod geojson;
mod hotspot;
mod kde;

pub use geojson::hotspots_geojson;
pub use hotspot::{components, hotspots, HotspotPolygon, Hotspots};
pub use kde::{kde, silverman_bandwidth, DensitySurface, GridSpec, KdeOptions};
