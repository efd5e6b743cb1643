//! Technique identifiers, their parameter distributions, and per-job seed
//! derivation.
//!
//! Every random decision in a run comes from a [`RandomStream`] whose seed is
//! derived from `(master seed, source index, technique, replicate)`. Each job
//! owns two streams: the *parameter* stream, from which [`sample_params`]
//! draws the concrete technique parameters, and the *content* stream
//! ([`content_seed`]) consumed by the operation itself (noise values, erase
//! rectangles, crop offsets). Keeping them apart means a manifest row's
//! recorded parameters plus its seed are enough to replay the output.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde_json::Value;

use crate::advanced::{EraseFill, EraseParams, PatchShuffleParams, DEFAULT_PAIRING_CROP};
use crate::error::{Error, Result};
use crate::noise::{SaltPepperParams, DEFAULT_VARIABILITY};
use crate::photometric::{BlurKind, Channel};
use crate::rng::{splitmix64_mix, splitmix64_next, RandomStream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Technique {
    Rotate,
    Shift,
    Shear,
    Zoom,
    Flip,
    Brightness,
    NoiseGaussian,
    NoiseSaltPepper,
    Erase,
    PatchShuffle,
    SamplePairing,
    ChannelIsolate,
    Blur,
    Sharpen,
}

impl Technique {
    pub const ALL: [Technique; 14] = [
        Technique::Rotate,
        Technique::Shift,
        Technique::Shear,
        Technique::Zoom,
        Technique::Flip,
        Technique::Brightness,
        Technique::NoiseGaussian,
        Technique::NoiseSaltPepper,
        Technique::Erase,
        Technique::PatchShuffle,
        Technique::SamplePairing,
        Technique::ChannelIsolate,
        Technique::Blur,
        Technique::Sharpen,
    ];

    /// The seven techniques selected by `--techniques all`.
    pub const CORE_SEVEN: [Technique; 7] = [
        Technique::Rotate,
        Technique::Shift,
        Technique::Shear,
        Technique::Zoom,
        Technique::Flip,
        Technique::Brightness,
        Technique::NoiseGaussian,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Technique::Rotate => "rotate",
            Technique::Shift => "shift",
            Technique::Shear => "shear",
            Technique::Zoom => "zoom",
            Technique::Flip => "flip",
            Technique::Brightness => "brightness",
            Technique::NoiseGaussian => "noise-gaussian",
            Technique::NoiseSaltPepper => "noise-sp",
            Technique::Erase => "erase",
            Technique::PatchShuffle => "patch-shuffle",
            Technique::SamplePairing => "sample-pairing",
            Technique::ChannelIsolate => "channel-isolate",
            Technique::Blur => "blur",
            Technique::Sharpen => "sharpen",
        }
    }

    /// Stable 16-bit code mixed into job seeds. Never renumber.
    pub fn code(self) -> u16 {
        match self {
            Technique::Rotate => 1,
            Technique::Shift => 2,
            Technique::Shear => 3,
            Technique::Zoom => 4,
            Technique::Flip => 5,
            Technique::Brightness => 6,
            Technique::NoiseGaussian => 7,
            Technique::NoiseSaltPepper => 8,
            Technique::Erase => 9,
            Technique::PatchShuffle => 10,
            Technique::SamplePairing => 11,
            Technique::ChannelIsolate => 12,
            Technique::Blur => 13,
            Technique::Sharpen => 14,
        }
    }

    /// Output file-name prefix.
    pub fn prefix(self) -> &'static str {
        match self {
            Technique::Rotate => "Rotated_img",
            Technique::Shift => "Shifted_img",
            Technique::Shear => "Sheared_img",
            Technique::Zoom => "Zoomed_img",
            Technique::Flip => "Flipped_img",
            Technique::Brightness => "Brightness_Changed_img",
            Technique::NoiseGaussian => "Noise_injected_img",
            Technique::NoiseSaltPepper => "Noise_sp_img",
            Technique::Erase => "Erase_img",
            Technique::PatchShuffle => "Patch_shuffle_img",
            Technique::SamplePairing => "Sample_pairing_img",
            Technique::ChannelIsolate => "Channel_isolate_img",
            Technique::Blur => "Blur_img",
            Technique::Sharpen => "Sharpen_img",
        }
    }

    /// Outputs per source image when not overridden.
    pub fn default_multiplicity(self) -> u32 {
        match self {
            Technique::Rotate => 7,
            Technique::Shift => 4,
            Technique::Shear => 3,
            Technique::Zoom => 4,
            Technique::Flip => 4,
            Technique::Brightness => 5,
            Technique::NoiseGaussian => 5,
            _ => 1,
        }
    }
}

impl fmt::Display for Technique {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Technique {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "noise" {
            return Ok(Technique::NoiseGaussian);
        }
        Technique::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown technique '{s}'")))
    }
}

/// Parses a comma-separated technique list; `all` expands to the core seven.
pub fn parse_technique_list(list: &str) -> Result<Vec<Technique>> {
    let mut out: Vec<Technique> = Vec::new();
    for token in list.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let expanded = if token == "all" {
            Technique::CORE_SEVEN.to_vec()
        } else {
            vec![token.parse()?]
        };
        for t in expanded {
            if !out.contains(&t) {
                out.push(t);
            }
        }
    }
    if out.is_empty() {
        return Err(Error::invalid("technique list is empty"));
    }
    Ok(out)
}

/// Seed for job `(source_index, technique, replicate)` under `master`.
///
/// Two SplitMix64 steps: the first from `master ^ source_index`, the second
/// from that output xor `(code << 48) | replicate`.
pub fn derive_seed(master: u64, source_index: u64, technique: Technique, replicate: u64) -> u64 {
    derive_seed_with_code(master, source_index, technique.code(), replicate)
}

pub fn derive_seed_with_code(master: u64, source_index: u64, code: u16, replicate: u64) -> u64 {
    let words = [
        source_index,
        ((code as u64) << 48) | (replicate & 0xffff_ffff_ffff),
    ];
    let mut h = master;
    for w in words {
        let mut state = h ^ w;
        h = splitmix64_next(&mut state);
    }
    h
}

/// Code reserved for the oversampling stream.
pub const BALANCE_CODE: u16 = 0xffff;

const CONTENT_SALT: u64 = 0x636f_6e74_656e_7473;

/// Seed of the content stream belonging to a job seed.
pub fn content_seed(job_seed: u64) -> u64 {
    splitmix64_mix(job_seed ^ CONTENT_SALT)
}

/// Closed real interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Range {
    pub lo: f64,
    pub hi: f64,
}

impl Range {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::invalid(format!("invalid range [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi })
    }

    const fn of(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    fn sample(&self, rng: &mut RandomStream) -> f64 {
        rng.uniform(self.lo, self.hi)
    }

    fn within(&self, lo: f64, hi: f64) -> bool {
        self.lo >= lo && self.hi <= hi
    }
}

/// Distribution bounds, one variant per technique.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bounds {
    Rotate { degrees: Range },
    Shift { dx_frac: Range, dy_frac: Range },
    Shear { degrees: Range },
    Zoom { factor: Range, isotropic: bool },
    Flip { p_horizontal: f64, p_vertical: f64 },
    Brightness { factor: Range },
    NoiseGaussian { variability: f64 },
    NoiseSaltPepper { amount: Range, salt_ratio: f64 },
    Erase(EraseParams),
    PatchShuffle(PatchShuffleParams),
    SamplePairing { crop: usize },
    ChannelIsolate,
    Blur(BlurKind),
    Sharpen,
}

impl Bounds {
    pub fn default_for(t: Technique) -> Self {
        match t {
            Technique::Rotate => Bounds::Rotate {
                degrees: Range::of(-180.0, 180.0),
            },
            Technique::Shift => Bounds::Shift {
                dx_frac: Range::of(-0.2, 0.2),
                dy_frac: Range::of(-0.2, 0.2),
            },
            Technique::Shear => Bounds::Shear {
                degrees: Range::of(-45.0, 45.0),
            },
            Technique::Zoom => Bounds::Zoom {
                factor: Range::of(0.5, 1.5),
                isotropic: false,
            },
            Technique::Flip => Bounds::Flip {
                p_horizontal: 0.5,
                p_vertical: 0.5,
            },
            Technique::Brightness => Bounds::Brightness {
                factor: Range::of(0.2, 2.1),
            },
            Technique::NoiseGaussian => Bounds::NoiseGaussian {
                variability: DEFAULT_VARIABILITY,
            },
            Technique::NoiseSaltPepper => Bounds::NoiseSaltPepper {
                amount: Range::of(0.01, 0.1),
                salt_ratio: 0.5,
            },
            Technique::Erase => Bounds::Erase(EraseParams::default()),
            Technique::PatchShuffle => Bounds::PatchShuffle(PatchShuffleParams::default()),
            Technique::SamplePairing => Bounds::SamplePairing {
                crop: DEFAULT_PAIRING_CROP,
            },
            Technique::ChannelIsolate => Bounds::ChannelIsolate,
            Technique::Blur => Bounds::Blur(BlurKind::default()),
            Technique::Sharpen => Bounds::Sharpen,
        }
    }

    pub fn technique(&self) -> Technique {
        match self {
            Bounds::Rotate { .. } => Technique::Rotate,
            Bounds::Shift { .. } => Technique::Shift,
            Bounds::Shear { .. } => Technique::Shear,
            Bounds::Zoom { .. } => Technique::Zoom,
            Bounds::Flip { .. } => Technique::Flip,
            Bounds::Brightness { .. } => Technique::Brightness,
            Bounds::NoiseGaussian { .. } => Technique::NoiseGaussian,
            Bounds::NoiseSaltPepper { .. } => Technique::NoiseSaltPepper,
            Bounds::Erase(_) => Technique::Erase,
            Bounds::PatchShuffle(_) => Technique::PatchShuffle,
            Bounds::SamplePairing { .. } => Technique::SamplePairing,
            Bounds::ChannelIsolate => Technique::ChannelIsolate,
            Bounds::Blur(_) => Technique::Blur,
            Bounds::Sharpen => Technique::Sharpen,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |p: f64| (0.0..=1.0).contains(&p);
        let ok = match *self {
            Bounds::Rotate { degrees } => Range::new(degrees.lo, degrees.hi).is_ok(),
            Bounds::Shift { dx_frac, dy_frac } => {
                dx_frac.within(-1.0, 1.0) && dy_frac.within(-1.0, 1.0)
            }
            Bounds::Shear { degrees } => degrees.lo > -90.0 && degrees.hi < 90.0,
            Bounds::Zoom { factor, .. } => factor.lo > 0.0 && factor.hi.is_finite(),
            Bounds::Flip {
                p_horizontal,
                p_vertical,
            } => unit(p_horizontal) && unit(p_vertical),
            Bounds::Brightness { factor } => factor.lo >= 0.0 && factor.hi.is_finite(),
            Bounds::NoiseGaussian { variability } => variability >= 0.0 && variability.is_finite(),
            Bounds::NoiseSaltPepper { amount, salt_ratio } => {
                amount.within(0.0, 1.0) && unit(salt_ratio)
            }
            Bounds::Erase(p) => p.validate().is_ok(),
            Bounds::PatchShuffle(p) => PatchShuffleParams::new(p.n, p.p).is_ok(),
            Bounds::SamplePairing { crop } => crop >= 1,
            Bounds::ChannelIsolate | Bounds::Blur(_) | Bounds::Sharpen => true,
        };
        let ranges_ordered = match *self {
            Bounds::Rotate { degrees: r }
            | Bounds::Shear { degrees: r }
            | Bounds::Zoom { factor: r, .. }
            | Bounds::Brightness { factor: r }
            | Bounds::NoiseSaltPepper { amount: r, .. } => Range::new(r.lo, r.hi).is_ok(),
            Bounds::Shift { dx_frac, dy_frac } => {
                Range::new(dx_frac.lo, dx_frac.hi).is_ok()
                    && Range::new(dy_frac.lo, dy_frac.hi).is_ok()
            }
            _ => true,
        };
        if ok && ranges_ordered {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "bounds outside the legal domain of {}: {self:?}",
                self.technique()
            )))
        }
    }
}

/// A technique, its parameter distribution and the number of outputs per
/// source image.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TechniqueSpec {
    technique: Technique,
    multiplicity: u32,
    bounds: Bounds,
}

impl TechniqueSpec {
    pub fn new(technique: Technique) -> Self {
        Self {
            technique,
            multiplicity: technique.default_multiplicity(),
            bounds: Bounds::default_for(technique),
        }
    }

    pub fn with_multiplicity(mut self, multiplicity: u32) -> Result<Self> {
        if multiplicity == 0 {
            return Err(Error::invalid(format!(
                "multiplicity for {} must be at least 1",
                self.technique
            )));
        }
        self.multiplicity = multiplicity;
        Ok(self)
    }

    pub fn with_bounds(mut self, bounds: Bounds) -> Result<Self> {
        if bounds.technique() != self.technique {
            return Err(Error::invalid(format!(
                "bounds for {} given to {}",
                bounds.technique(),
                self.technique
            )));
        }
        bounds.validate()?;
        self.bounds = bounds;
        Ok(self)
    }

    /// Forces zoom to draw a single factor for both axes.
    pub fn isotropic_zoom(self) -> Self {
        match self.bounds {
            Bounds::Zoom { factor, .. } => Self {
                bounds: Bounds::Zoom {
                    factor,
                    isotropic: true,
                },
                ..self
            },
            _ => self,
        }
    }

    pub fn technique(&self) -> Technique {
        self.technique
    }

    pub fn multiplicity(&self) -> u32 {
        self.multiplicity
    }

    pub fn bounds(&self) -> &Bounds {
        &self.bounds
    }
}

/// Concrete parameters of one augmentation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TechniqueParams {
    Rotate { degrees: f64 },
    Shift { dx_frac: f64, dy_frac: f64 },
    Shear { degrees: f64 },
    Zoom { fx: f64, fy: f64 },
    Flip { horizontal: bool, vertical: bool },
    Brightness { factor: f64 },
    NoiseGaussian { variability: f64 },
    NoiseSaltPepper(SaltPepperParams),
    Erase(EraseParams),
    PatchShuffle(PatchShuffleParams),
    SamplePairing { crop: usize },
    ChannelIsolate { channel: Channel },
    Blur { kernel: BlurKind },
    Sharpen,
}

/// Draws concrete parameters from `spec`'s distribution.
pub fn sample_params(spec: &TechniqueSpec, rng: &mut RandomStream) -> TechniqueParams {
    match *spec.bounds() {
        Bounds::Rotate { degrees } => TechniqueParams::Rotate {
            degrees: degrees.sample(rng),
        },
        Bounds::Shift { dx_frac, dy_frac } => {
            let dx_frac = dx_frac.sample(rng);
            let dy_frac = dy_frac.sample(rng);
            TechniqueParams::Shift { dx_frac, dy_frac }
        }
        Bounds::Shear { degrees } => TechniqueParams::Shear {
            degrees: degrees.sample(rng),
        },
        Bounds::Zoom { factor, isotropic } => {
            let fx = factor.sample(rng);
            let fy = if isotropic { fx } else { factor.sample(rng) };
            TechniqueParams::Zoom { fx, fy }
        }
        Bounds::Flip {
            p_horizontal,
            p_vertical,
        } => {
            let horizontal = rng.bernoulli(p_horizontal);
            let vertical = rng.bernoulli(p_vertical);
            TechniqueParams::Flip {
                horizontal,
                vertical,
            }
        }
        Bounds::Brightness { factor } => TechniqueParams::Brightness {
            factor: factor.sample(rng),
        },
        Bounds::NoiseGaussian { variability } => TechniqueParams::NoiseGaussian { variability },
        Bounds::NoiseSaltPepper { amount, salt_ratio } => {
            TechniqueParams::NoiseSaltPepper(SaltPepperParams {
                amount: amount.sample(rng),
                salt_ratio,
            })
        }
        Bounds::Erase(p) => TechniqueParams::Erase(p),
        Bounds::PatchShuffle(p) => TechniqueParams::PatchShuffle(p),
        Bounds::SamplePairing { crop } => TechniqueParams::SamplePairing { crop },
        Bounds::ChannelIsolate => TechniqueParams::ChannelIsolate {
            channel: Channel::ALL[rng.below(3) as usize],
        },
        Bounds::Blur(kernel) => TechniqueParams::Blur { kernel },
        Bounds::Sharpen => TechniqueParams::Sharpen,
    }
}

pub type ParamMap = BTreeMap<String, Value>;

impl TechniqueParams {
    pub fn technique(&self) -> Technique {
        match self {
            TechniqueParams::Rotate { .. } => Technique::Rotate,
            TechniqueParams::Shift { .. } => Technique::Shift,
            TechniqueParams::Shear { .. } => Technique::Shear,
            TechniqueParams::Zoom { .. } => Technique::Zoom,
            TechniqueParams::Flip { .. } => Technique::Flip,
            TechniqueParams::Brightness { .. } => Technique::Brightness,
            TechniqueParams::NoiseGaussian { .. } => Technique::NoiseGaussian,
            TechniqueParams::NoiseSaltPepper(_) => Technique::NoiseSaltPepper,
            TechniqueParams::Erase(_) => Technique::Erase,
            TechniqueParams::PatchShuffle(_) => Technique::PatchShuffle,
            TechniqueParams::SamplePairing { .. } => Technique::SamplePairing,
            TechniqueParams::ChannelIsolate { .. } => Technique::ChannelIsolate,
            TechniqueParams::Blur { .. } => Technique::Blur,
            TechniqueParams::Sharpen => Technique::Sharpen,
        }
    }

    /// Flat key/value form recorded in the manifest.
    pub fn to_map(&self) -> ParamMap {
        let mut m = ParamMap::new();
        let mut put = |k: &str, v: Value| {
            m.insert(k.to_string(), v);
        };
        match *self {
            TechniqueParams::Rotate { degrees } | TechniqueParams::Shear { degrees } => {
                put("degrees", degrees.into())
            }
            TechniqueParams::Shift { dx_frac, dy_frac } => {
                put("dx_frac", dx_frac.into());
                put("dy_frac", dy_frac.into());
            }
            TechniqueParams::Zoom { fx, fy } => {
                put("fx", fx.into());
                put("fy", fy.into());
            }
            TechniqueParams::Flip {
                horizontal,
                vertical,
            } => {
                put("horizontal", horizontal.into());
                put("vertical", vertical.into());
            }
            TechniqueParams::Brightness { factor } => put("factor", factor.into()),
            TechniqueParams::NoiseGaussian { variability } => {
                put("variability", variability.into())
            }
            TechniqueParams::NoiseSaltPepper(p) => {
                put("amount", p.amount.into());
                put("salt_ratio", p.salt_ratio.into());
            }
            TechniqueParams::Erase(p) => {
                put("area_lo", p.area_lo.into());
                put("area_hi", p.area_hi.into());
                put("aspect_lo", p.aspect_lo.into());
                put("aspect_hi", p.aspect_hi.into());
                put("fill", p.fill.name().into());
                if let EraseFill::Constant(v) = p.fill {
                    put("cval", v.into());
                }
            }
            TechniqueParams::PatchShuffle(p) => {
                put("n", p.n.into());
                put("p", p.p.into());
            }
            TechniqueParams::SamplePairing { crop } => put("crop", crop.into()),
            TechniqueParams::ChannelIsolate { channel } => put("channel", channel.name().into()),
            TechniqueParams::Blur { kernel } => put("kernel", kernel.name().into()),
            TechniqueParams::Sharpen => {}
        }
        m
    }

    /// Rebuilds parameters from a manifest map. Unknown extra keys are
    /// ignored; missing or mistyped keys are errors.
    pub fn from_map(technique: Technique, m: &ParamMap) -> Result<Self> {
        let num = |k: &str| {
            m.get(k)
                .and_then(Value::as_f64)
                .ok_or_else(|| Error::invalid(format!("{technique}: missing numeric param '{k}'")))
        };
        let uint = |k: &str| {
            m.get(k)
                .and_then(Value::as_u64)
                .ok_or_else(|| Error::invalid(format!("{technique}: missing integer param '{k}'")))
        };
        let flag = |k: &str| {
            m.get(k)
                .and_then(Value::as_bool)
                .ok_or_else(|| Error::invalid(format!("{technique}: missing boolean param '{k}'")))
        };
        let text = |k: &str| {
            m.get(k)
                .and_then(Value::as_str)
                .ok_or_else(|| Error::invalid(format!("{technique}: missing string param '{k}'")))
        };
        Ok(match technique {
            Technique::Rotate => TechniqueParams::Rotate {
                degrees: num("degrees")?,
            },
            Technique::Shift => TechniqueParams::Shift {
                dx_frac: num("dx_frac")?,
                dy_frac: num("dy_frac")?,
            },
            Technique::Shear => TechniqueParams::Shear {
                degrees: num("degrees")?,
            },
            Technique::Zoom => TechniqueParams::Zoom {
                fx: num("fx")?,
                fy: num("fy")?,
            },
            Technique::Flip => TechniqueParams::Flip {
                horizontal: flag("horizontal")?,
                vertical: flag("vertical")?,
            },
            Technique::Brightness => TechniqueParams::Brightness {
                factor: num("factor")?,
            },
            Technique::NoiseGaussian => TechniqueParams::NoiseGaussian {
                variability: num("variability")?,
            },
            Technique::NoiseSaltPepper => TechniqueParams::NoiseSaltPepper(SaltPepperParams::new(
                num("amount")?,
                num("salt_ratio")?,
            )?),
            Technique::Erase => {
                let fill = match text("fill")? {
                    "random" => EraseFill::Random,
                    "mean" => EraseFill::Mean,
                    "constant" => EraseFill::Constant(
                        u8::try_from(uint("cval")?)
                            .map_err(|_| Error::invalid("erase: cval out of range"))?,
                    ),
                    other => return Err(Error::invalid(format!("erase: unknown fill '{other}'"))),
                };
                let p = EraseParams {
                    area_lo: num("area_lo")?,
                    area_hi: num("area_hi")?,
                    aspect_lo: num("aspect_lo")?,
                    aspect_hi: num("aspect_hi")?,
                    fill,
                };
                p.validate()?;
                TechniqueParams::Erase(p)
            }
            Technique::PatchShuffle => TechniqueParams::PatchShuffle(PatchShuffleParams::new(
                uint("n")? as usize,
                num("p")?,
            )?),
            Technique::SamplePairing => TechniqueParams::SamplePairing {
                crop: uint("crop")? as usize,
            },
            Technique::ChannelIsolate => TechniqueParams::ChannelIsolate {
                channel: text("channel")?.parse()?,
            },
            Technique::Blur => TechniqueParams::Blur {
                kernel: text("kernel")?.parse()?,
            },
            Technique::Sharpen => TechniqueParams::Sharpen,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn names_round_trip_and_alias() {
        for t in Technique::ALL {
            assert_eq!(t.name().parse::<Technique>().unwrap(), t);
        }
        assert_eq!(
            "noise".parse::<Technique>().unwrap(),
            Technique::NoiseGaussian
        );
        let err = "rotata".parse::<Technique>().unwrap_err().to_string();
        assert!(err.contains("rotata"));
    }

    #[test]
    fn codes_are_unique() {
        let mut codes: Vec<u16> = Technique::ALL.iter().map(|t| t.code()).collect();
        codes.sort();
        codes.dedup();
        assert_eq!(codes.len(), Technique::ALL.len());
        assert!(!codes.contains(&BALANCE_CODE));
    }

    #[test]
    fn technique_list_expansion() {
        assert_eq!(
            parse_technique_list("all").unwrap(),
            Technique::CORE_SEVEN.to_vec()
        );
        assert_eq!(
            parse_technique_list("rotate, erase,rotate").unwrap(),
            vec![Technique::Rotate, Technique::Erase]
        );
        assert!(parse_technique_list("").is_err());
        assert!(parse_technique_list("rotate,bogus").is_err());
    }

    #[test]
    fn default_multiplicities_sum_to_32() {
        let total: u32 = Technique::CORE_SEVEN
            .iter()
            .map(|t| t.default_multiplicity())
            .sum();
        assert_eq!(total, 32);
    }

    #[test]
    fn derive_seed_separates_replicates() {
        let mut master = RandomStream::new(0xfeed);
        for _ in 0..1_000_000 {
            let m = master.next_u64();
            assert_ne!(
                derive_seed(m, 0, Technique::Rotate, 0),
                derive_seed(m, 0, Technique::Rotate, 1)
            );
        }
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let spec = TechniqueSpec::new(Technique::Shear);
        assert!(spec.with_multiplicity(0).is_err());
        let bad = Bounds::Shear {
            degrees: Range {
                lo: -95.0,
                hi: 10.0,
            },
        };
        assert!(spec.with_bounds(bad).is_err());
        let mismatched = Bounds::default_for(Technique::Rotate);
        assert!(spec.with_bounds(mismatched).is_err());
        let reversed = Bounds::Brightness {
            factor: Range { lo: 2.0, hi: 1.0 },
        };
        assert!(TechniqueSpec::new(Technique::Brightness)
            .with_bounds(reversed)
            .is_err());
    }

    #[test]
    fn degenerate_range_is_exact() {
        let spec = TechniqueSpec::new(Technique::Brightness)
            .with_bounds(Bounds::Brightness {
                factor: Range::new(1.0, 1.0).unwrap(),
            })
            .unwrap();
        let mut rng = RandomStream::new(1);
        for _ in 0..100 {
            assert_eq!(
                sample_params(&spec, &mut rng),
                TechniqueParams::Brightness { factor: 1.0 }
            );
        }
    }

    #[test]
    fn isotropic_zoom_draws_one_factor() {
        let spec = TechniqueSpec::new(Technique::Zoom).isotropic_zoom();
        let mut rng = RandomStream::new(2);
        for _ in 0..100 {
            match sample_params(&spec, &mut rng) {
                TechniqueParams::Zoom { fx, fy } => assert_eq!(fx, fy),
                other => panic!("unexpected {other:?}"),
            }
        }
    }

    #[test]
    fn every_technique_map_round_trips() {
        let mut rng = RandomStream::new(3);
        for t in Technique::ALL {
            let p = sample_params(&TechniqueSpec::new(t), &mut rng);
            let m = p.to_map();
            let json = serde_json::to_string(&m).unwrap();
            let back: ParamMap = serde_json::from_str(&json).unwrap();
            assert_eq!(TechniqueParams::from_map(t, &back).unwrap(), p, "{t}");
        }
        let constant_erase = TechniqueParams::Erase(EraseParams {
            fill: EraseFill::Constant(17),
            ..EraseParams::default()
        });
        assert_eq!(
            TechniqueParams::from_map(Technique::Erase, &constant_erase.to_map()).unwrap(),
            constant_erase
        );
        assert!(TechniqueParams::from_map(Technique::Rotate, &ParamMap::new()).is_err());
    }

    proptest! {
        #[test]
        fn sampled_params_stay_in_bounds(seed in any::<u64>()) {
            let mut rng = RandomStream::new(seed);
            for t in Technique::ALL {
                let spec = TechniqueSpec::new(t);
                match sample_params(&spec, &mut rng) {
                    TechniqueParams::Rotate { degrees } => prop_assert!((-180.0..=180.0).contains(&degrees)),
                    TechniqueParams::Shift { dx_frac, dy_frac } => {
                        prop_assert!((-0.2..=0.2).contains(&dx_frac));
                        prop_assert!((-0.2..=0.2).contains(&dy_frac));
                    }
                    TechniqueParams::Shear { degrees } => prop_assert!((-45.0..=45.0).contains(&degrees)),
                    TechniqueParams::Zoom { fx, fy } => {
                        prop_assert!((0.5..=1.5).contains(&fx));
                        prop_assert!((0.5..=1.5).contains(&fy));
                    }
                    TechniqueParams::Brightness { factor } => prop_assert!((0.2..=2.1).contains(&factor)),
                    TechniqueParams::NoiseGaussian { variability } => prop_assert_eq!(variability, 50.0),
                    TechniqueParams::NoiseSaltPepper(p) => {
                        prop_assert!((0.01..=0.1).contains(&p.amount));
                        prop_assert_eq!(p.salt_ratio, 0.5);
                    }
                    TechniqueParams::PatchShuffle(p) => prop_assert_eq!((p.n, p.p), (2, 0.05)),
                    TechniqueParams::SamplePairing { crop } => prop_assert_eq!(crop, 224),
                    _ => {}
                }
            }
        }
    }
}
