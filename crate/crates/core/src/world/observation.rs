use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Depth value meaning "nothing within range".
pub const DEPTH_NO_HIT: u16 = u16::MAX;

/// Which planes an observation carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ChannelType {
    #[serde(rename = "DEPTH_ONLY")]
    DepthOnly,
    #[serde(rename = "RGB_ONLY")]
    RgbOnly,
    #[serde(rename = "RGBD")]
    Rgbd,
}

impl ChannelType {
    pub fn has_depth(&self) -> bool {
        matches!(self, ChannelType::DepthOnly | ChannelType::Rgbd)
    }

    pub fn has_rgb(&self) -> bool {
        matches!(self, ChannelType::RgbOnly | ChannelType::Rgbd)
    }

    /// Channel count as seen by array-based RL code: 1, 3 or 4.
    pub fn channel_count(&self) -> u32 {
        match self {
            ChannelType::DepthOnly => 1,
            ChannelType::RgbOnly => 3,
            ChannelType::Rgbd => 4,
        }
    }

    /// Byte length of the wire blob for a `width x height` frame.
    pub fn blob_len(&self, width: u32, height: u32) -> usize {
        let pixels = width as usize * height as usize;
        let mut n = 0;
        if self.has_depth() {
            n += pixels * 2;
        }
        if self.has_rgb() {
            n += pixels * 3;
        }
        n
    }
}

impl fmt::Display for ChannelType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ChannelType::DepthOnly => "DEPTH_ONLY",
            ChannelType::RgbOnly => "RGB_ONLY",
            ChannelType::Rgbd => "RGBD",
        })
    }
}

impl FromStr for ChannelType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "depth" | "depth_only" | "depthonly" => Ok(ChannelType::DepthOnly),
            "rgb" | "rgb_only" | "rgbonly" => Ok(ChannelType::RgbOnly),
            "rgbd" => Ok(ChannelType::Rgbd),
            _ => Err(format!(
                "unknown channel type '{s}' (expected depth, rgb or rgbd)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("observation planes do not match {channel_type} at {width}x{height}")]
pub struct PlaneMismatch {
    pub channel_type: ChannelType,
    pub width: u32,
    pub height: u32,
}

/// One camera frame. Depth is millimeters, row-major; RGB is interleaved
/// 8-bit triples, row-major. Planes not selected by the channel type are absent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Observation {
    channel_type: ChannelType,
    width: u32,
    height: u32,
    depth: Option<Vec<u16>>,
    rgb: Option<Vec<u8>>,
}

impl Observation {
    pub fn new(
        channel_type: ChannelType,
        width: u32,
        height: u32,
        depth: Option<Vec<u16>>,
        rgb: Option<Vec<u8>>,
    ) -> Result<Self, PlaneMismatch> {
        let pixels = width as usize * height as usize;
        let depth_ok = match (&depth, channel_type.has_depth()) {
            (Some(d), true) => d.len() == pixels,
            (None, false) => true,
            _ => false,
        };
        let rgb_ok = match (&rgb, channel_type.has_rgb()) {
            (Some(c), true) => c.len() == pixels * 3,
            (None, false) => true,
            _ => false,
        };
        if !(depth_ok && rgb_ok) {
            return Err(PlaneMismatch {
                channel_type,
                width,
                height,
            });
        }
        Ok(Self {
            channel_type,
            width,
            height,
            depth,
            rgb,
        })
    }

    pub fn channel_type(&self) -> ChannelType {
        self.channel_type
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    /// `(height, width, channels)`.
    pub fn shape(&self) -> [u32; 3] {
        [self.height, self.width, self.channel_type.channel_count()]
    }

    pub fn depth(&self) -> Option<&[u16]> {
        self.depth.as_deref()
    }

    pub fn rgb(&self) -> Option<&[u8]> {
        self.rgb.as_deref()
    }

    pub fn depth_at(&self, col: u32, row: u32) -> Option<u16> {
        self.depth
            .as_ref()
            .map(|d| d[(row * self.width + col) as usize])
    }

    pub fn rgb_at(&self, col: u32, row: u32) -> Option<[u8; 3]> {
        self.rgb.as_ref().map(|c| {
            let i = 3 * (row * self.width + col) as usize;
            [c[i], c[i + 1], c[i + 2]]
        })
    }

    /// Wire blob: little-endian depth plane, then the RGB plane.
    pub fn to_blob(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.channel_type.blob_len(self.width, self.height));
        if let Some(d) = &self.depth {
            for v in d {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        if let Some(c) = &self.rgb {
            out.extend_from_slice(c);
        }
        out
    }

    /// Inverse of [`Observation::to_blob`]. Returns `None` if the blob length
    /// disagrees with the declared layout.
    pub fn from_blob(
        channel_type: ChannelType,
        width: u32,
        height: u32,
        blob: &[u8],
    ) -> Option<Self> {
        if blob.len() != channel_type.blob_len(width, height) {
            return None;
        }
        let pixels = width as usize * height as usize;
        let mut rest = blob;
        let depth = channel_type.has_depth().then(|| {
            let (plane, tail) = rest.split_at(pixels * 2);
            rest = tail;
            plane
                .chunks_exact(2)
                .map(|b| u16::from_le_bytes([b[0], b[1]]))
                .collect()
        });
        let rgb = channel_type.has_rgb().then(|| rest.to_vec());
        Observation::new(channel_type, width, height, depth, rgb).ok()
    }
}
