//! `.layout.json` files: `{"aperture": [wy, wz], "elements": [[y, z], ...], "meta": {...}}`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::Result;
use crate::geometry::{Aperture, Element, ElementLayout};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LayoutDoc {
    aperture: [f64; 2],
    elements: Vec<[f64; 2]>,
    #[serde(default)]
    meta: Map<String, Value>,
}

pub fn layout_to_json(layout: &ElementLayout, meta: Map<String, Value>) -> String {
    let doc = LayoutDoc {
        aperture: [layout.aperture().width_y, layout.aperture().height_z],
        elements: layout.elements().iter().map(|e| [e.y, e.z]).collect(),
        meta,
    };
    serde_json::to_string_pretty(&doc).expect("layout documents always serialize")
}

/// Parses and validates a layout document, returning the metadata alongside.
pub fn parse_layout(text: &str) -> Result<(ElementLayout, Map<String, Value>)> {
    let doc: LayoutDoc = serde_json::from_str(text)?;
    let aperture = Aperture::new(doc.aperture[0], doc.aperture[1])?;
    let elements = doc.elements.iter().map(|&[y, z]| Element::new(y, z)).collect();
    Ok((ElementLayout::new(aperture, elements)?, doc.meta))
}

pub fn write_layout_file(path: &Path, layout: &ElementLayout, meta: Map<String, Value>) -> Result<()> {
    let mut text = layout_to_json(layout, meta);
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn read_layout_file(path: &Path) -> Result<(ElementLayout, Map<String, Value>)> {
    parse_layout(&fs::read_to_string(path)?)
}
