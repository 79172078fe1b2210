use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classifier::StatementType;

/// Institutional Grammar component assigned to one token.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum IgLabel {
    /// Attribute.
    A,
    #[serde(rename = "A-prop")]
    AProp,
    /// Aim.
    I,
    /// Deontic.
    D,
    #[serde(rename = "B-dir")]
    BDir,
    #[serde(rename = "B-ind")]
    BInd,
    #[serde(rename = "B-prop")]
    BProp,
    #[serde(rename = "CTX")]
    Ctx,
    /// Constituted entity.
    E,
    #[serde(rename = "E-prop")]
    EProp,
    /// Constitutive function.
    F,
    /// Modal.
    M,
    /// Constituting properties.
    P,
    #[serde(rename = "P-prop")]
    PProp,
    #[serde(rename = "NONE")]
    None,
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("unknown IG label {0:?}")]
pub struct UnknownLabel(pub String);

const REGULATIVE: [IgLabel; 9] = [
    IgLabel::A,
    IgLabel::AProp,
    IgLabel::I,
    IgLabel::D,
    IgLabel::BDir,
    IgLabel::BInd,
    IgLabel::BProp,
    IgLabel::Ctx,
    IgLabel::None,
];

const CONSTITUTIVE: [IgLabel; 8] = [
    IgLabel::E,
    IgLabel::EProp,
    IgLabel::F,
    IgLabel::M,
    IgLabel::P,
    IgLabel::PProp,
    IgLabel::Ctx,
    IgLabel::None,
];

impl IgLabel {
    pub const ALL: [IgLabel; 15] = [
        IgLabel::A,
        IgLabel::AProp,
        IgLabel::I,
        IgLabel::D,
        IgLabel::BDir,
        IgLabel::BInd,
        IgLabel::BProp,
        IgLabel::Ctx,
        IgLabel::E,
        IgLabel::EProp,
        IgLabel::F,
        IgLabel::M,
        IgLabel::P,
        IgLabel::PProp,
        IgLabel::None,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            IgLabel::A => "A",
            IgLabel::AProp => "A-prop",
            IgLabel::I => "I",
            IgLabel::D => "D",
            IgLabel::BDir => "B-dir",
            IgLabel::BInd => "B-ind",
            IgLabel::BProp => "B-prop",
            IgLabel::Ctx => "CTX",
            IgLabel::E => "E",
            IgLabel::EProp => "E-prop",
            IgLabel::F => "F",
            IgLabel::M => "M",
            IgLabel::P => "P",
            IgLabel::PProp => "P-prop",
            IgLabel::None => "NONE",
        }
    }

    /// Labels legal in statements of the given type.
    pub fn vocabulary(stype: StatementType) -> &'static [IgLabel] {
        match stype {
            StatementType::Regulative => &REGULATIVE,
            StatementType::Constitutive => &CONSTITUTIVE,
        }
    }

    pub fn allowed_in(self, stype: StatementType) -> bool {
        Self::vocabulary(stype).contains(&self)
    }

    /// The property variant of a head label, if it has one.
    pub fn prop_variant(self) -> Option<IgLabel> {
        match self {
            IgLabel::A => Some(IgLabel::AProp),
            IgLabel::BDir | IgLabel::BInd => Some(IgLabel::BProp),
            IgLabel::E => Some(IgLabel::EProp),
            IgLabel::P => Some(IgLabel::PProp),
            _ => None,
        }
    }

    pub fn is_prop(self) -> bool {
        matches!(
            self,
            IgLabel::AProp | IgLabel::BProp | IgLabel::EProp | IgLabel::PProp
        )
    }

    pub fn is_none(self) -> bool {
        self == IgLabel::None
    }
}

impl fmt::Display for IgLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for IgLabel {
    type Err = UnknownLabel;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        IgLabel::ALL
            .into_iter()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| UnknownLabel(s.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for l in IgLabel::ALL {
            assert_eq!(l.as_str().parse::<IgLabel>().unwrap(), l);
            let json = serde_json::to_string(&l).unwrap();
            assert_eq!(json, format!("\"{}\"", l.as_str()));
        }
        assert!("B".parse::<IgLabel>().is_err());
    }

    #[test]
    fn vocabularies_share_only_ctx_and_none() {
        let shared: Vec<_> = IgLabel::vocabulary(StatementType::Regulative)
            .iter()
            .filter(|l| l.allowed_in(StatementType::Constitutive))
            .collect();
        assert_eq!(shared, [&IgLabel::Ctx, &IgLabel::None]);
    }
}
