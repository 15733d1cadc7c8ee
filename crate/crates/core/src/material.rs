//! Per-plane material labels from a per-pixel material label image.
//!
//! The segmentation network is not part of this crate: its output arrives as
//! an 8-bit grayscale PNG whose pixel values index [`MaterialLabel`]
//! (0 = unknown, 1 = wood, 2 = carpet, 3 = concrete, 4 = paper, 5 = metal,
//! 6 = glass). Each plane owns a pixel mask and gets the label that wins a
//! thresholded majority vote over the mask.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scene::PlaneId;

/// Surface category of a detected plane.
///
/// Declaration order is the tie-break order of the majority vote.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize,
)]
#[serde(rename_all = "lowercase")]
pub enum MaterialLabel {
    Wood,
    Carpet,
    Concrete,
    Paper,
    Metal,
    Glass,
    #[default]
    Unknown,
}

impl MaterialLabel {
    pub const ALL: [MaterialLabel; 7] = [
        MaterialLabel::Wood,
        MaterialLabel::Carpet,
        MaterialLabel::Concrete,
        MaterialLabel::Paper,
        MaterialLabel::Metal,
        MaterialLabel::Glass,
        MaterialLabel::Unknown,
    ];

    /// Decodes a label-image pixel value.
    pub fn from_pixel(value: u8) -> Option<MaterialLabel> {
        Some(match value {
            0 => MaterialLabel::Unknown,
            1 => MaterialLabel::Wood,
            2 => MaterialLabel::Carpet,
            3 => MaterialLabel::Concrete,
            4 => MaterialLabel::Paper,
            5 => MaterialLabel::Metal,
            6 => MaterialLabel::Glass,
            _ => return None,
        })
    }

    pub fn to_pixel(self) -> u8 {
        match self {
            MaterialLabel::Unknown => 0,
            MaterialLabel::Wood => 1,
            MaterialLabel::Carpet => 2,
            MaterialLabel::Concrete => 3,
            MaterialLabel::Paper => 4,
            MaterialLabel::Metal => 5,
            MaterialLabel::Glass => 6,
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

/// Noun phrase used when describing a surface in event text.
pub fn material_name(label: MaterialLabel) -> &'static str {
    match label {
        MaterialLabel::Wood => "wood",
        MaterialLabel::Carpet => "carpet",
        MaterialLabel::Concrete => "concrete",
        MaterialLabel::Paper => "paper",
        MaterialLabel::Metal => "metal",
        MaterialLabel::Glass => "glass",
        MaterialLabel::Unknown => "unknown surface",
    }
}

impl fmt::Display for MaterialLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(material_name(*self))
    }
}

#[derive(Debug, Error)]
pub enum MaterialError {
    #[error("mask pixel ({x}, {y}) of plane `{plane}` is outside the {width}x{height} label image")]
    OutOfBounds {
        plane: PlaneId,
        x: u32,
        y: u32,
        width: u32,
        height: u32,
    },
    #[error("label image pixel value {value} at ({x}, {y}) does not map to a material")]
    InvalidPixel { value: u8, x: u32, y: u32 },
    #[error("label image must be non-empty and hold width*height labels")]
    BadDimensions,
    #[error("cannot read label image: {0}")]
    Image(#[from] image::ImageError),
}

/// Row-major grid of material labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelImage {
    width: u32,
    height: u32,
    labels: Vec<MaterialLabel>,
}

impl LabelImage {
    pub fn new(width: u32, height: u32, labels: Vec<MaterialLabel>) -> Result<Self, MaterialError> {
        if width == 0 || height == 0 || labels.len() as u64 != width as u64 * height as u64 {
            return Err(MaterialError::BadDimensions);
        }
        Ok(Self {
            width,
            height,
            labels,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn labels(&self) -> &[MaterialLabel] {
        &self.labels
    }

    pub fn get(&self, x: u32, y: u32) -> Option<MaterialLabel> {
        if x < self.width && y < self.height {
            Some(self.labels[(y as usize) * self.width as usize + x as usize])
        } else {
            None
        }
    }

    /// Reads an 8-bit grayscale PNG. Other color types are converted to luma
    /// first, so only exact label values survive.
    pub fn load_png(path: impl AsRef<Path>) -> Result<Self, MaterialError> {
        let img = image::open(path)?.into_luma8();
        let (width, height) = img.dimensions();
        let mut labels = Vec::with_capacity((width * height) as usize);
        for (x, y, px) in img.enumerate_pixels() {
            let value = px.0[0];
            labels.push(
                MaterialLabel::from_pixel(value).ok_or(MaterialError::InvalidPixel { value, x, y })?,
            );
        }
        Self::new(width, height, labels)
    }

    pub fn save_png(&self, path: impl AsRef<Path>) -> Result<(), MaterialError> {
        let raw: Vec<u8> = self.labels.iter().map(|l| l.to_pixel()).collect();
        let img = image::GrayImage::from_raw(self.width, self.height, raw)
            .ok_or(MaterialError::BadDimensions)?;
        img.save_with_format(path, image::ImageFormat::Png)?;
        Ok(())
    }
}

/// Pixels of the label image that belong to one plane.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlaneMask {
    pub plane_id: PlaneId,
    pub pixels: BTreeSet<(u32, u32)>,
}

impl PlaneMask {
    pub fn new(plane_id: PlaneId, pixels: impl IntoIterator<Item = (u32, u32)>) -> Self {
        Self {
            plane_id,
            pixels: pixels.into_iter().collect(),
        }
    }
}

/// Majority label for a bag of per-label pixel counts, indexed by
/// declaration order of [`MaterialLabel`].
///
/// Unknown wins when the mask is empty, when Unknown pixels make up at least
/// half of the mask, or when the best known label holds less than 30% of the
/// known pixels.
pub fn vote(counts: &[usize; 7]) -> MaterialLabel {
    let total: usize = counts.iter().sum();
    let unknown = counts[MaterialLabel::Unknown.index()];
    if total == 0 || unknown * 2 >= total {
        return MaterialLabel::Unknown;
    }
    let known = total - unknown;
    let mut best = MaterialLabel::Wood;
    for label in &MaterialLabel::ALL[..6] {
        // strict comparison keeps the earliest label on ties
        if counts[label.index()] > counts[best.index()] {
            best = *label;
        }
    }
    if counts[best.index()] * 10 < known * 3 {
        return MaterialLabel::Unknown;
    }
    best
}

/// Assigns each masked plane its majority material label.
pub fn assign_plane_materials(
    image: &LabelImage,
    masks: &[PlaneMask],
) -> Result<BTreeMap<PlaneId, MaterialLabel>, MaterialError> {
    let mut out = BTreeMap::new();
    for mask in masks {
        let mut counts = [0usize; 7];
        for &(x, y) in &mask.pixels {
            let label = image.get(x, y).ok_or_else(|| MaterialError::OutOfBounds {
                plane: mask.plane_id.clone(),
                x,
                y,
                width: image.width,
                height: image.height,
            })?;
            counts[label.index()] += 1;
        }
        out.insert(mask.plane_id.clone(), vote(&counts));
    }
    Ok(out)
}
