//! Plain-text round trip for weight and Young families.
//!
//! One family per document: a `family` tag plus that family's parameters,
//! tabulated nodes as plain decimal arrays (TOML syntax).  Floats are
//! written in shortest round-trip form, so saving and reloading reproduces
//! the exact same rule; parsing goes through the public constructors and
//! re-validates every invariant.

use serde::{Deserialize, Serialize};

use crate::psi::fenchel::ConvexTable;
use crate::psi::{PsiFunction, PsiRule, YoungFunction, YoungRule};
use crate::{Error, Result};

#[derive(Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
enum WeightDoc {
    PowerPole {
        a: f64,
        b: f64,
        lower: f64,
        upper: f64,
    },
    Power {
        beta: f64,
        lower: f64,
        upper: f64,
    },
    Degenerate {
        r: f64,
        value: f64,
    },
    Constant {
        value: f64,
        lower: f64,
        upper: f64,
    },
    Tabulated {
        p: Vec<f64>,
        log_value: Vec<f64>,
    },
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
enum YoungDoc {
    Power {
        q: f64,
    },
    ExpPower {
        m: f64,
    },
    ExpMu {
        u: Vec<f64>,
        mu: Vec<f64>,
    },
    Tabulated {
        u: Vec<f64>,
        value: Vec<f64>,
    },
    QuadSpliced {
        coeff: f64,
        splice: f64,
        profile_p: Vec<f64>,
        profile_value: Vec<f64>,
    },
}

/// Serializes a weight to its text document.
pub fn psi_to_text(psi: &PsiFunction) -> Result<String> {
    let (lower, upper) = psi.support();
    let doc = match psi.rule() {
        PsiRule::PowerPole { a, b } => WeightDoc::PowerPole {
            a: *a,
            b: *b,
            lower,
            upper,
        },
        PsiRule::Power { beta } => WeightDoc::Power {
            beta: *beta,
            lower,
            upper,
        },
        PsiRule::Degenerate { r, value } => WeightDoc::Degenerate {
            r: *r,
            value: *value,
        },
        PsiRule::Constant { value } => WeightDoc::Constant {
            value: *value,
            lower,
            upper,
        },
        PsiRule::Tabulated { p, log_value } => WeightDoc::Tabulated {
            p: p.clone(),
            log_value: log_value.clone(),
        },
    };
    toml::to_string(&doc).map_err(|e| Error::Parse(e.to_string()))
}

/// Parses a weight document, re-validating through the constructors.
pub fn psi_from_text(text: &str) -> Result<PsiFunction> {
    let doc: WeightDoc = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    match doc {
        WeightDoc::PowerPole { a, b, lower, upper } => PsiFunction::power_pole(a, b, lower, upper),
        WeightDoc::Power { beta, lower, upper } => PsiFunction::power(beta, lower, upper),
        WeightDoc::Degenerate { r, value } => PsiFunction::degenerate_scaled(r, value),
        WeightDoc::Constant {
            value,
            lower,
            upper,
        } => PsiFunction::constant(value, lower, upper),
        WeightDoc::Tabulated { p, log_value } => PsiFunction::tabulated_log(p, log_value),
    }
}

/// Serializes a Young function to its text document.
pub fn young_to_text(phi: &YoungFunction) -> Result<String> {
    let doc = match phi.rule() {
        YoungRule::Power { q } => YoungDoc::Power { q: *q },
        YoungRule::ExpPower { m } => YoungDoc::ExpPower { m: *m },
        YoungRule::ExpMu { mu } => YoungDoc::ExpMu {
            u: mu.abscissae().to_vec(),
            mu: mu.values().to_vec(),
        },
        YoungRule::Tabulated { u, value } => YoungDoc::Tabulated {
            u: u.clone(),
            value: value.clone(),
        },
        YoungRule::QuadSpliced {
            coeff,
            splice,
            profile,
        } => YoungDoc::QuadSpliced {
            coeff: *coeff,
            splice: *splice,
            profile_p: profile.abscissae().to_vec(),
            profile_value: profile.values().to_vec(),
        },
    };
    toml::to_string(&doc).map_err(|e| Error::Parse(e.to_string()))
}

/// Parses a Young function document, re-validating through the
/// constructors.
pub fn young_from_text(text: &str) -> Result<YoungFunction> {
    let doc: YoungDoc = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    match doc {
        YoungDoc::Power { q } => YoungFunction::power(q),
        YoungDoc::ExpPower { m } => YoungFunction::exp_power(m),
        YoungDoc::ExpMu { u, mu } => YoungFunction::exp_mu(u, mu),
        YoungDoc::Tabulated { u, value } => YoungFunction::tabulated(u, value),
        YoungDoc::QuadSpliced {
            coeff,
            splice,
            profile_p,
            profile_value,
        } => {
            let profile = ConvexTable::new(profile_p, profile_value)?;
            YoungFunction::from_spliced_parts(coeff, splice, profile)
        }
    }
}
