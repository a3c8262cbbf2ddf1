//! Parsers for flag values that are not plain numbers.

use anyhow::{bail, Context, Result};
use weyl_lab_core::experiments::SymbolSpec;
use weyl_lab_core::{Complex64, Symbol};

/// `rect:re_min,re_max,im_min,im_max` or `disc:re,im,radius`; the margin
/// is supplied separately.
#[derive(Clone, Debug, PartialEq)]
pub enum RegionArg {
    Rect([f64; 4]),
    Disc([f64; 3]),
}

pub fn parse_region(s: &str) -> Result<RegionArg, String> {
    let (kind, rest) = s
        .split_once(':')
        .ok_or_else(|| format!("expected rect:... or disc:..., got {s:?}"))?;
    let nums: Vec<f64> = rest
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}")))
        .collect::<Result<_, _>>()?;
    match (kind, nums.as_slice()) {
        ("rect", &[a, b, c, d]) => Ok(RegionArg::Rect([a, b, c, d])),
        ("disc", &[x, y, r]) => Ok(RegionArg::Disc([x, y, r])),
        _ => Err(format!("rect takes 4 numbers and disc takes 3, got {s:?}")),
    }
}

/// `a+bi`, `a-bi`, `bi` or `a`.
pub fn parse_complex(s: &str) -> Result<Complex64, String> {
    s.trim()
        .parse::<Complex64>()
        .map_err(|e| format!("{s:?} is not a complex number: {e}"))
}

/// A symbol flag: built-in name, inline JSON document, or `@path` to one.
pub fn parse_symbol(s: &str) -> Result<SymbolSpec> {
    let doc = if let Some(path) = s.strip_prefix('@') {
        Some(std::fs::read_to_string(path).with_context(|| format!("reading symbol file {path}"))?)
    } else if s.trim_start().starts_with('{') {
        Some(s.to_string())
    } else {
        None
    };
    match doc {
        Some(text) => Ok(SymbolSpec::Inline(Symbol::from_json(&text)?)),
        None if s.is_empty() => bail!("empty symbol name"),
        None => Ok(SymbolSpec::Name(s.to_string())),
    }
}
