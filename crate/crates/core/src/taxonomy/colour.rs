//! Per-device colours.
//!
//! The first twelve devices get hues on a 30° wheel, later ones step by the
//! golden angle (137.508°). Hues are kept in integer millidegrees so that
//! equality is exact at three decimal places. Red is reserved for the
//! identifiable-data marker, so any hue in [350°, 10°) is moved along in
//! 15° steps until it leaves that band.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

const FULL_TURN: u64 = 360_000;
const WHEEL_STEP: u64 = 30_000;
const GOLDEN_STEP: u64 = 137_508;
const WHEEL_SLOTS: u64 = 12;

const RED_LOW: u64 = 10_000;
const RED_HIGH: u64 = 350_000;
const RED_SHIFT: u64 = 15_000;

pub const SATURATION_PERCENT: u8 = 80;
pub const LIGHTNESS_PERCENT: u8 = 50;

/// Generator hue for a registration index, before red exclusion.
pub fn palette_hue_millidegrees(index: u64) -> u64 {
    if index < WHEEL_SLOTS {
        index * WHEEL_STEP
    } else {
        // (i * 137508) mod 360000 == (i mod 360000) * 137508 mod 360000
        (index % FULL_TURN) * GOLDEN_STEP % FULL_TURN
    }
}

pub fn colour_for_index(index: u64) -> Colour {
    let mut hue = palette_hue_millidegrees(index);
    // one step from [350, 355) only reaches [5, 10), so a second is needed
    while !(RED_LOW..RED_HIGH).contains(&hue) {
        hue = (hue + RED_SHIFT) % FULL_TURN;
    }
    Colour {
        hue_millidegrees: hue as u32,
    }
}

/// HSL colour with fixed saturation and lightness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Colour {
    hue_millidegrees: u32,
}

impl Colour {
    pub fn hue(&self) -> f64 {
        f64::from(self.hue_millidegrees) / 1000.0
    }

    pub fn hue_millidegrees(&self) -> u32 {
        self.hue_millidegrees
    }

    pub fn saturation(&self) -> u8 {
        SATURATION_PERCENT
    }

    pub fn lightness(&self) -> u8 {
        LIGHTNESS_PERCENT
    }

    /// Standard HSL to RGB, evaluated in integers (channels round half up).
    pub fn to_rgb(&self) -> Rgb {
        const SECTOR: i64 = 60_000;
        let s = i64::from(SATURATION_PERCENT);
        let l = i64::from(LIGHTNESS_PERCENT);
        // all quantities below are scaled by 100 * SECTOR
        let chroma = (100 - (2 * l - 100).abs()) * s / 100 * SECTOR;
        let hue = i64::from(self.hue_millidegrees);
        let within = hue % (2 * SECTOR);
        let x = chroma / SECTOR * (SECTOR - (within - SECTOR).abs());
        let (r, g, b) = match hue / SECTOR {
            0 => (chroma, x, 0),
            1 => (x, chroma, 0),
            2 => (0, chroma, x),
            3 => (0, x, chroma),
            4 => (x, 0, chroma),
            _ => (chroma, 0, x),
        };
        let m = l * SECTOR - chroma / 2;
        let denominator = 100 * SECTOR;
        let channel = |v: i64| ((2 * (v + m) * 255 + denominator) / (2 * denominator)).clamp(0, 255) as u8;
        Rgb([channel(r), channel(g), channel(b)])
    }
}

impl Serialize for Colour {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Wire {
            hue: f64,
            saturation: u8,
            lightness: u8,
            hex: Rgb,
        }
        Wire {
            hue: self.hue(),
            saturation: self.saturation(),
            lightness: self.lightness(),
            hex: self.to_rgb(),
        }
        .serialize(serializer)
    }
}

/// An sRGB triplet, written as `#rrggbb`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Rgb(pub [u8; 3]);

impl Rgb {
    pub fn parse_hex(text: &str) -> Option<Rgb> {
        let digits = text.strip_prefix('#')?;
        if digits.len() != 6 || !digits.bytes().all(|b| b.is_ascii_hexdigit()) {
            return None;
        }
        let byte = |i: usize| u8::from_str_radix(&digits[i..i + 2], 16).ok();
        Some(Rgb([byte(0)?, byte(2)?, byte(4)?]))
    }
}

impl fmt::Display for Rgb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [r, g, b] = self.0;
        write!(f, "#{r:02x}{g:02x}{b:02x}")
    }
}

impl Serialize for Rgb {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Rgb {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Rgb::parse_hex(&s)
            .ok_or_else(|| serde::de::Error::custom(format!("invalid hex colour {s:?}")))
    }
}
