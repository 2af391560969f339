//! Stall duration categories and the 21-slot stalling mode table.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Stall length class. Each class admits a fixed set of durations in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DurationCategory {
    Short,
    Medium,
    Long,
    ExtraLong,
}

impl DurationCategory {
    pub const ALL: [DurationCategory; 4] = [
        DurationCategory::Short,
        DurationCategory::Medium,
        DurationCategory::Long,
        DurationCategory::ExtraLong,
    ];

    pub fn durations(self) -> &'static [f64] {
        match self {
            DurationCategory::Short => &[0.5, 1.0],
            DurationCategory::Medium => &[1.5, 2.0, 2.5],
            DurationCategory::Long => &[3.0, 3.5, 4.0, 4.5],
            DurationCategory::ExtraLong => &[5.0, 5.5, 6.0],
        }
    }

    pub fn admits(self, seconds: f64) -> bool {
        self.durations().iter().any(|d| (d - seconds).abs() < 1e-9)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DurationCategory::Short => "short",
            DurationCategory::Medium => "medium",
            DurationCategory::Long => "long",
            DurationCategory::ExtraLong => "extra_long",
        }
    }
}

impl fmt::Display for DurationCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Stalling mode label. `A*` modes have one stall, `B*` two, `C*` three.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ModeId {
    A1,
    A2,
    A3,
    A4,
    B1,
    B2,
    B3,
    B4,
    B5,
    B6,
    B7,
    B8,
    C1,
    C2,
    C3,
    C4,
    C5,
}

impl ModeId {
    pub const ALL: [ModeId; 17] = [
        ModeId::A1,
        ModeId::A2,
        ModeId::A3,
        ModeId::A4,
        ModeId::B1,
        ModeId::B2,
        ModeId::B3,
        ModeId::B4,
        ModeId::B5,
        ModeId::B6,
        ModeId::B7,
        ModeId::B8,
        ModeId::C1,
        ModeId::C2,
        ModeId::C3,
        ModeId::C4,
        ModeId::C5,
    ];

    /// Multiset of stall categories, in non-decreasing order.
    pub fn composition(self) -> &'static [DurationCategory] {
        use DurationCategory::{ExtraLong as E, Long as L, Medium as M, Short as S};
        match self {
            ModeId::A1 => &[S],
            ModeId::A2 => &[M],
            ModeId::A3 => &[L],
            ModeId::A4 => &[E],
            ModeId::B1 => &[S, S],
            ModeId::B2 => &[S, M],
            ModeId::B3 => &[S, L],
            ModeId::B4 => &[S, E],
            ModeId::B5 => &[M, M],
            ModeId::B6 => &[M, L],
            ModeId::B7 => &[M, E],
            ModeId::B8 => &[L, L],
            ModeId::C1 => &[S, S, S],
            ModeId::C2 => &[S, S, M],
            ModeId::C3 => &[S, S, L],
            ModeId::C4 => &[S, L, L],
            ModeId::C5 => &[S, M, L],
        }
    }

    pub fn stall_count(self) -> usize {
        self.composition().len()
    }

    pub fn as_str(self) -> &'static str {
        const NAMES: [&str; 17] = [
            "A1", "A2", "A3", "A4", "B1", "B2", "B3", "B4", "B5", "B6", "B7", "B8", "C1", "C2",
            "C3", "C4", "C5",
        ];
        NAMES[self as usize]
    }
}

impl fmt::Display for ModeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModeId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModeId::ALL
            .into_iter()
            .find(|m| m.as_str() == s.trim())
            .ok_or_else(|| Error::invalid(format!("unknown stall mode {s:?}")))
    }
}

/// One of the 21 slots of the mode table. The single-stall modes occupy two
/// slots each (`replica` 1 and 2).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StallModeTemplate {
    /// 1-based position in the table.
    pub slot: usize,
    pub mode: ModeId,
    pub replica: u8,
}

impl StallModeTemplate {
    pub fn categories(&self) -> &'static [DurationCategory] {
        self.mode.composition()
    }

    pub fn label(&self) -> String {
        format!("m{:02}-{}", self.slot, self.mode)
    }
}

pub const MODE_SLOTS: usize = 21;

pub fn enumerate_stall_modes() -> Vec<StallModeTemplate> {
    let mut out = Vec::with_capacity(MODE_SLOTS);
    for mode in [ModeId::A1, ModeId::A2, ModeId::A3, ModeId::A4] {
        for replica in 1..=2 {
            out.push((mode, replica));
        }
    }
    out.extend(ModeId::ALL[4..].iter().map(|&m| (m, 1)));
    out.into_iter()
        .enumerate()
        .map(|(i, (mode, replica))| StallModeTemplate {
            slot: i + 1,
            mode,
            replica,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use DurationCategory::*;

    #[test]
    fn table_has_21_slots() {
        let modes = enumerate_stall_modes();
        assert_eq!(modes.len(), 21);
        assert_eq!(
            modes.iter().filter(|m| m.mode.stall_count() == 1).count(),
            8
        );
        assert_eq!(
            modes.iter().filter(|m| m.mode.stall_count() == 2).count(),
            8
        );
        assert_eq!(
            modes.iter().filter(|m| m.mode.stall_count() == 3).count(),
            5
        );
        assert_eq!(modes, enumerate_stall_modes());
    }

    #[test]
    fn compositions() {
        assert_eq!(ModeId::B6.composition(), &[Medium, Long]);
        assert_eq!(ModeId::C5.composition(), &[Short, Medium, Long]);
        assert_eq!(ModeId::B3.composition(), &[Short, Long]);
        assert_eq!(ModeId::C4.composition(), &[Short, Long, Long]);
    }

    #[test]
    fn labels_round_trip() {
        for m in ModeId::ALL {
            assert_eq!(m.as_str().parse::<ModeId>().unwrap(), m);
        }
        assert!("A5".parse::<ModeId>().is_err());
    }

    #[test]
    fn category_values() {
        assert!(Short.admits(0.5));
        assert!(!Short.admits(1.5));
        assert!(ExtraLong.admits(6.0));
        assert_eq!(Long.durations().len(), 4);
    }
}
