//! Pipeline identity: software package, smoothing kernel, motion regressors
//! and HRF derivatives.
//!
//! The canonical text form is `software,fwhm,motion,hrf` (e.g. `fsl,8,0,0`).
//! Parsing also accepts the hyphenated spelling `spm-5-0-0` and whitespace
//! around the separators.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Software {
    Fsl,
    Spm,
}

impl Software {
    pub const ALL: [Software; 2] = [Software::Fsl, Software::Spm];

    pub fn as_str(self) -> &'static str {
        match self {
            Software::Fsl => "fsl",
            Software::Spm => "spm",
        }
    }
}

pub const FWHM_MM: [u8; 2] = [5, 8];
pub const MOTION_REGRESSORS: [u8; 3] = [0, 6, 24];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PipelineId {
    software: Software,
    fwhm_mm: u8,
    n_motion: u8,
    hrf_deriv: bool,
}

impl PipelineId {
    pub fn new(software: Software, fwhm_mm: u8, n_motion: u8, hrf_deriv: bool) -> Result<Self> {
        if !FWHM_MM.contains(&fwhm_mm) || !MOTION_REGRESSORS.contains(&n_motion) {
            return Err(Error::BadPipelineId(alloc::format!(
                "{},{},{},{}",
                software.as_str(),
                fwhm_mm,
                n_motion,
                u8::from(hrf_deriv)
            )));
        }
        Ok(Self {
            software,
            fwhm_mm,
            n_motion,
            hrf_deriv,
        })
    }

    pub fn software(&self) -> Software {
        self.software
    }

    pub fn fwhm_mm(&self) -> u8 {
        self.fwhm_mm
    }

    pub fn n_motion(&self) -> u8 {
        self.n_motion
    }

    pub fn hrf_deriv(&self) -> bool {
        self.hrf_deriv
    }

    /// All 24 pipelines in canonical (sorted) order.
    pub fn all() -> Vec<PipelineId> {
        let mut out = Vec::with_capacity(24);
        for software in Software::ALL {
            for fwhm in FWHM_MM {
                for motion in MOTION_REGRESSORS {
                    for hrf in [false, true] {
                        out.push(PipelineId {
                            software,
                            fwhm_mm: fwhm,
                            n_motion: motion,
                            hrf_deriv: hrf,
                        });
                    }
                }
            }
        }
        out.sort();
        out
    }

    /// Hyphenated spelling, e.g. `spm-5-0-0`.
    pub fn hyphenated(&self) -> String {
        self.to_string().replace(',', "-")
    }
}

impl fmt::Display for PipelineId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{},{},{},{}",
            self.software.as_str(),
            self.fwhm_mm,
            self.n_motion,
            u8::from(self.hrf_deriv)
        )
    }
}

// Canonical order is the lexicographic order of the canonical strings, so
// `fsl,5,24,0` sorts before `fsl,5,6,0`.
impl Ord for PipelineId {
    fn cmp(&self, other: &Self) -> Ordering {
        self.to_string().cmp(&other.to_string())
    }
}

impl PartialOrd for PipelineId {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl FromStr for PipelineId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_pipeline_id(s)
    }
}

pub fn parse_pipeline_id(s: &str) -> Result<PipelineId> {
    let bad = || Error::BadPipelineId(s.into());
    let sep = if s.contains(',') {
        ','
    } else if s.contains('-') {
        '-'
    } else {
        return Err(bad());
    };
    let parts: Vec<&str> = s.split(sep).map(str::trim).collect();
    let [software, fwhm, motion, hrf] = parts[..] else {
        return Err(bad());
    };
    // the hyphenated form is a single token; whitespace only around commas
    if sep == '-' && s.trim() != s {
        return Err(bad());
    }
    let software = match software {
        "fsl" => Software::Fsl,
        "spm" => Software::Spm,
        _ => return Err(bad()),
    };
    let number = |t: &str| -> Result<u8> {
        if t.is_empty() || !t.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        t.parse::<u8>().map_err(|_| bad())
    };
    let fwhm = number(fwhm)?;
    let motion = number(motion)?;
    let hrf = match hrf {
        "0" => false,
        "1" => true,
        _ => return Err(bad()),
    };
    PipelineId::new(software, fwhm, motion, hrf).map_err(|_| bad())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_paper_spellings() {
        let p = parse_pipeline_id("fsl,8,0,0").unwrap();
        assert_eq!(p.software(), Software::Fsl);
        assert_eq!((p.fwhm_mm(), p.n_motion(), p.hrf_deriv()), (8, 0, false));
        let q = parse_pipeline_id("spm-5-0-0").unwrap();
        assert_eq!(q.to_string(), "spm,5,0,0");
        assert_eq!(q.hyphenated(), "spm-5-0-0");
        assert_eq!(parse_pipeline_id(" fsl , 5 , 24 , 1 ").unwrap().to_string(), "fsl,5,24,1");
    }

    #[test]
    fn rejects_out_of_enum_values() {
        for s in [
            "fsl,7,0,0",
            "afni,8,0,0",
            "fsl,8,12,0",
            "fsl,8,0,2",
            "fsl,8,0",
            "fsl,8,0,0,0",
            "fsl 8 0 0",
            "",
            "fsl,+8,0,0",
            "fsl-8,0-0",
            "FSL,8,0,0",
        ] {
            assert!(
                matches!(parse_pipeline_id(s), Err(Error::BadPipelineId(_))),
                "accepted {s:?}"
            );
        }
    }

    #[test]
    fn all_pipelines_round_trip_in_both_spellings() {
        let all = PipelineId::all();
        assert_eq!(all.len(), 24);
        for p in &all {
            assert_eq!(parse_pipeline_id(&p.to_string()).unwrap(), *p);
            assert_eq!(parse_pipeline_id(&p.hyphenated()).unwrap(), *p);
        }
        let strings: Vec<String> = all.iter().map(|p| p.to_string()).collect();
        let mut sorted = strings.clone();
        sorted.sort();
        assert_eq!(strings, sorted);
    }
}
