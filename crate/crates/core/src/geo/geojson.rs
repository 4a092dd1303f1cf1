use serde_json::{json, Map, Value};

use super::hotspot::Hotspots;

/// Hotspot polygons as a GeoJSON `FeatureCollection` in the input planar
/// coordinates. `properties` is copied onto every feature.
pub fn hotspots_geojson(h: &Hotspots, properties: &Map<String, Value>) -> Value {
    let features: Vec<Value> = h
        .polygons
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let mut props = properties.clone();
            props.insert("id".into(), json!(i));
            props.insert("quantile".into(), json!(h.quantile));
            props.insert("threshold_density".into(), json!(h.threshold));
            props.insert("cell_count".into(), json!(p.cell_count));
            props.insert("peak_density".into(), json!(p.peak_density));
            let mut rings = vec![p.exterior.clone()];
            rings.extend(p.holes.iter().cloned());
            json!({
                "type": "Feature",
                "geometry": { "type": "Polygon", "coordinates": rings },
                "properties": props,
            })
        })
        .collect();
    json!({ "type": "FeatureCollection", "features": features })
}
