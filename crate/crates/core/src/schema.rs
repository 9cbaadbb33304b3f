//! Mapping from segmentation class IDs to the categories the depth prior
//! cares about.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Location, Result};
use crate::raster::{Category, CategoryMap, LabelMap};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassEntry {
    pub id: u16,
    pub name: String,
    pub category: Category,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelSchema {
    classes: BTreeMap<u16, ClassEntry>,
}

#[derive(Serialize, Deserialize)]
struct SchemaDoc {
    classes: Vec<RawClass>,
}

#[derive(Serialize, Deserialize)]
struct RawClass {
    id: i64,
    name: String,
    category: String,
}

// Cityscapes trainId table.
const CITYSCAPES_TRAIN_IDS: &[(u16, &str, Category)] = &[
    (0, "road", Category::Road),
    (1, "sidewalk", Category::Flat),
    (2, "building", Category::Vertical),
    (3, "wall", Category::Vertical),
    (4, "fence", Category::Vertical),
    (5, "pole", Category::Vertical),
    (6, "traffic light", Category::Vertical),
    (7, "traffic sign", Category::Vertical),
    (8, "vegetation", Category::Vertical),
    (9, "terrain", Category::Flat),
    (10, "sky", Category::Sky),
    (11, "person", Category::Vertical),
    (12, "rider", Category::Vertical),
    (13, "car", Category::Vertical),
    (14, "truck", Category::Vertical),
    (15, "bus", Category::Vertical),
    (16, "train", Category::Vertical),
    (17, "motorcycle", Category::Vertical),
    (18, "bicycle", Category::Vertical),
    (255, "unlabeled", Category::Ignore),
];

// Cityscapes full labelId table.
const CITYSCAPES_LABEL_IDS: &[(u16, &str, Category)] = &[
    (0, "unlabeled", Category::Ignore),
    (1, "ego vehicle", Category::Ignore),
    (2, "rectification border", Category::Ignore),
    (3, "out of roi", Category::Ignore),
    (4, "static", Category::Ignore),
    (5, "dynamic", Category::Ignore),
    (6, "ground", Category::Ignore),
    (7, "road", Category::Road),
    (8, "sidewalk", Category::Flat),
    (9, "parking", Category::Flat),
    (10, "rail track", Category::Flat),
    (11, "building", Category::Vertical),
    (12, "wall", Category::Vertical),
    (13, "fence", Category::Vertical),
    (14, "guard rail", Category::Ignore),
    (15, "bridge", Category::Ignore),
    (16, "tunnel", Category::Ignore),
    (17, "pole", Category::Vertical),
    (18, "polegroup", Category::Ignore),
    (19, "traffic light", Category::Vertical),
    (20, "traffic sign", Category::Vertical),
    (21, "vegetation", Category::Vertical),
    (22, "terrain", Category::Flat),
    (23, "sky", Category::Sky),
    (24, "person", Category::Vertical),
    (25, "rider", Category::Vertical),
    (26, "car", Category::Vertical),
    (27, "truck", Category::Vertical),
    (28, "bus", Category::Vertical),
    (29, "caravan", Category::Ignore),
    (30, "trailer", Category::Ignore),
    (31, "train", Category::Vertical),
    (32, "motorcycle", Category::Vertical),
    (33, "bicycle", Category::Vertical),
];

/// Result of categorizing a label map.
#[derive(Debug, Clone, PartialEq)]
pub struct Categorized {
    pub categories: CategoryMap,
    /// Pixels whose class ID was not declared by the schema.
    pub unknown_pixels: usize,
}

impl LabelSchema {
    pub fn new(entries: impl IntoIterator<Item = ClassEntry>) -> Result<Self> {
        let mut classes = BTreeMap::new();
        for e in entries {
            let id = e.id;
            if classes.insert(id, e).is_some() {
                return Err(Error::invalid(format!("class id {id} declared twice")));
            }
        }
        Ok(LabelSchema { classes })
    }

    fn from_table(table: &[(u16, &str, Category)]) -> Self {
        LabelSchema {
            classes: table
                .iter()
                .map(|&(id, name, category)| {
                    (
                        id,
                        ClassEntry {
                            id,
                            name: name.to_string(),
                            category,
                        },
                    )
                })
                .collect(),
        }
    }

    /// Cityscapes trainIds (0..=18, 255 unlabeled).
    pub fn cityscapes() -> Self {
        Self::from_table(CITYSCAPES_TRAIN_IDS)
    }

    /// Cityscapes full labelIds (0..=33), including parking and rail track.
    pub fn cityscapes_label_ids() -> Self {
        Self::from_table(CITYSCAPES_LABEL_IDS)
    }

    /// Category of `id`; undeclared IDs are `None`.
    pub fn category(&self, id: u16) -> Option<Category> {
        self.classes.get(&id).map(|e| e.category)
    }

    pub fn classes(&self) -> impl Iterator<Item = &ClassEntry> {
        self.classes.values()
    }

    /// First declared ID with the given category.
    pub fn id_for(&self, category: Category) -> Option<u16> {
        self.classes
            .values()
            .find(|e| e.category == category)
            .map(|e| e.id)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: SchemaDoc = serde_json::from_str(text).map_err(|e| {
            Error::parse(Location::Line(e.line()), format!("label schema: {e}"))
        })?;
        let mut entries = Vec::with_capacity(doc.classes.len());
        for (i, c) in doc.classes.into_iter().enumerate() {
            let id = u16::try_from(c.id).map_err(|_| {
                Error::parse(
                    Location::Path(format!("classes[{i}].id")),
                    format!("class id {} outside 0..=65535", c.id),
                )
            })?;
            let category = Category::parse(&c.category).ok_or_else(|| {
                Error::parse(
                    Location::Path(format!("classes[{i}].category")),
                    format!("unknown category {:?}", c.category),
                )
            })?;
            entries.push(ClassEntry {
                id,
                name: c.name,
                category,
            });
        }
        Self::new(entries).map_err(|e| Error::parse(Location::Path("classes".into()), e.to_string()))
    }

    pub fn to_json(&self) -> String {
        let doc = SchemaDoc {
            classes: self
                .classes
                .values()
                .map(|e| RawClass {
                    id: e.id as i64,
                    name: e.name.clone(),
                    category: serde_json::to_value(e.category)
                        .ok()
                        .and_then(|v| v.as_str().map(str::to_string))
                        .unwrap_or_default(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&doc).expect("schema serializes")
    }
}

impl Default for LabelSchema {
    fn default() -> Self {
        Self::cityscapes()
    }
}

/// Maps every pixel's class ID to its category. Undeclared IDs become
/// [`Category::Ignore`] and are counted.
pub fn categorize(mask: &LabelMap, schema: &LabelSchema) -> Categorized {
    let mut unknown_pixels = 0;
    let categories = mask.map(|&id| match schema.category(id) {
        Some(c) => c,
        None => {
            unknown_pixels += 1;
            Category::Ignore
        }
    });
    Categorized {
        categories,
        unknown_pixels,
    }
}
