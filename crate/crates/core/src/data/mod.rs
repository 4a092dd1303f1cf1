//! Domain model and ingestion: buildings, events, block groups and heating
//! seasons.

mod events;
mod load;
mod rates;
mod season;
mod types;

pub use events::{attach_events, AttachReport};
pub use load::{
    load_block_groups, load_buildings, load_events, write_block_groups, write_buildings,
    write_events, write_rejections, ColumnMap, Event, LoadOptions, Loaded, Rejection,
    UnknownPolicy, BUILDING_COLUMNS,
};
pub use rates::{block_group_rates, per_capita_rate, write_rates, BlockGroupRate};
pub use season::{parse_timestamp, season_of, HeatingSeason};
pub use types::{
    BasementCode, BlockGroupProfile, BoilerType, BuildingRecord, Categorical, Demographic,
    FeatureVector, OwnershipType, ProximityCode, NUMERIC_FEATURES,
};
