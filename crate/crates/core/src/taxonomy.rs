use std::fmt;

use serde::Serialize;

/// Forward-iteration class of a self-map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum ForwardClass {
    #[serde(rename = "elliptic")]
    Elliptic,
    #[serde(rename = "hyperbolic")]
    Hyperbolic,
    /// Non-zero step, finite height.
    #[serde(rename = "parabolic-Ia")]
    ParabolicIa,
    /// Non-zero step, infinite height.
    #[serde(rename = "parabolic-Ib")]
    ParabolicIb,
    /// Zero step, finite height.
    #[serde(rename = "parabolic-IIa")]
    ParabolicIIa,
    /// Zero step, infinite height.
    #[serde(rename = "parabolic-IIb")]
    ParabolicIIb,
    /// Parabolic, but the step or height discriminator did not separate.
    #[serde(rename = "parabolic-unknown")]
    ParabolicUnknown,
    #[serde(rename = "unknown")]
    Unknown,
}

impl ForwardClass {
    pub fn as_str(self) -> &'static str {
        match self {
            ForwardClass::Elliptic => "elliptic",
            ForwardClass::Hyperbolic => "hyperbolic",
            ForwardClass::ParabolicIa => "parabolic-Ia",
            ForwardClass::ParabolicIb => "parabolic-Ib",
            ForwardClass::ParabolicIIa => "parabolic-IIa",
            ForwardClass::ParabolicIIb => "parabolic-IIb",
            ForwardClass::ParabolicUnknown => "parabolic-unknown",
            ForwardClass::Unknown => "unknown",
        }
    }

    pub fn is_parabolic(self) -> bool {
        matches!(
            self,
            ForwardClass::ParabolicIa
                | ForwardClass::ParabolicIb
                | ForwardClass::ParabolicIIa
                | ForwardClass::ParabolicIIb
                | ForwardClass::ParabolicUnknown
        )
    }

    /// Type I: non-zero forward step.
    pub fn is_type_one(self) -> bool {
        matches!(self, ForwardClass::ParabolicIa | ForwardClass::ParabolicIb)
    }
}

impl fmt::Display for ForwardClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Backward-iteration class: existence and height of bounded-step
/// backward sequences tending to the Denjoy-Wolff point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum BisbsClass {
    #[serde(rename = "empty")]
    Empty,
    #[serde(rename = "non-zero-height")]
    NonZeroHeight,
    #[serde(rename = "zero-height")]
    ZeroHeight,
    #[serde(rename = "unknown")]
    Unknown,
}

impl BisbsClass {
    pub fn as_str(self) -> &'static str {
        match self {
            BisbsClass::Empty => "empty",
            BisbsClass::NonZeroHeight => "non-zero-height",
            BisbsClass::ZeroHeight => "zero-height",
            BisbsClass::Unknown => "unknown",
        }
    }

    /// Short suffix used in combined labels such as `Ia1`.
    pub fn suffix(self) -> &'static str {
        match self {
            BisbsClass::Empty => "∅",
            BisbsClass::NonZeroHeight => "1",
            BisbsClass::ZeroHeight => "2",
            BisbsClass::Unknown => "?",
        }
    }
}

impl fmt::Display for BisbsClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Combined forward x backward label, e.g. parabolic-IIb with a zero-height
/// backward sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Label {
    pub forward: ForwardClass,
    pub bisbs: BisbsClass,
}

impl Label {
    pub const fn new(forward: ForwardClass, bisbs: BisbsClass) -> Self {
        Self { forward, bisbs }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let fwd = self
            .forward
            .as_str()
            .strip_prefix("parabolic-")
            .unwrap_or(self.forward.as_str());
        write!(f, "{fwd}{}", self.bisbs.suffix())
    }
}
