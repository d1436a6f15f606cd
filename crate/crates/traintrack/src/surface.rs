//! Topological type of the ambient surface.

use serde::{Deserialize, Serialize};

/// Orientable surface of genus `g` with `p` punctures.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Surface {
    pub genus: u32,
    pub punctures: u32,
}

impl Surface {
    pub fn new(genus: u32, punctures: u32) -> Self {
        Surface { genus, punctures }
    }

    /// The complexity parameter 3g + p - 4 governing the effective constants.
    pub fn complexity(&self) -> i64 {
        3 * self.genus as i64 + self.punctures as i64 - 4
    }

    /// Surfaces with no essential simple closed curves are rejected outright.
    pub fn supports_tracks(&self) -> bool {
        !(self.genus == 0 && self.punctures <= 3)
    }

    pub fn euler_characteristic(&self) -> i64 {
        2 - 2 * self.genus as i64 - self.punctures as i64
    }

    /// Branch count bound 18g + 6p - 18 for any train track on this surface.
    pub fn max_branches(&self) -> i64 {
        18 * self.genus as i64 + 6 * self.punctures as i64 - 18
    }

    /// Switch count bound 12g + 4p - 12.
    pub fn max_switches(&self) -> i64 {
        12 * self.genus as i64 + 4 * self.punctures as i64 - 12
    }
}

impl std::fmt::Display for Surface {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "S_{{{},{}}}", self.genus, self.punctures)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complexity_values() {
        assert_eq!(Surface::new(2, 0).complexity(), 2);
        assert_eq!(Surface::new(1, 1).complexity(), 0);
        assert_eq!(Surface::new(0, 4).complexity(), 0);
        assert_eq!(Surface::new(1, 0).complexity(), -1);
    }

    #[test]
    fn excluded_surfaces() {
        for p in 0..=3 {
            assert!(!Surface::new(0, p).supports_tracks());
        }
        assert!(Surface::new(0, 4).supports_tracks());
        assert!(Surface::new(1, 0).supports_tracks());
    }

    #[test]
    fn count_bounds() {
        let s = Surface::new(2, 0);
        assert_eq!(s.max_branches(), 18);
        assert_eq!(s.max_switches(), 12);
        assert_eq!(Surface::new(1, 1).max_branches(), 6);
    }
}
