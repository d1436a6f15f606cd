//! Canonical example tracks used across the test corpus and the CLI docs.
//!
//! The constructors here are the source of truth for the checked-in fixture
//! files; `solve_decorations` searches for region decorations making a given
//! combinatorial structure a valid track on a given surface.

use std::collections::BTreeMap;

use crate::surface::Surface;
use crate::track::{
    Branch, BranchEnd, BranchId, GermClass, RegionDecoration, SwitchId, SwitchSpec, TrainTrack,
};

pub fn end(switch: u32, germ: GermClass, slot: usize) -> BranchEnd {
    BranchEnd {
        switch: SwitchId(switch),
        germ,
        slot,
    }
}

pub fn branch(id: u32, a: BranchEnd, b: BranchEnd) -> Branch {
    Branch {
        id: BranchId(id),
        ends: [a, b],
    }
}

pub fn switch(id: u32, incoming: usize, outgoing: usize) -> SwitchSpec {
    SwitchSpec {
        id: SwitchId(id),
        incoming,
        outgoing,
    }
}

/// Searches small decorations (genus <= 3 per region) that make the structure
/// a valid track on `surface`. Returns the lexicographically least solution.
pub fn solve_decorations(
    surface: Surface,
    switches: Vec<SwitchSpec>,
    branches: Vec<Branch>,
) -> Option<TrainTrack> {
    let bare = TrainTrack::from_parts(surface, switches.clone(), branches.clone(), BTreeMap::new())
        .ok()?;
    let regions = bare.regions();
    let n = regions.len();
    let chi_target = surface.euler_characteristic()
        - (bare.n_switches() as i64 - bare.n_branches() as i64);
    let p_target = surface.punctures;

    // enumerate (genus, punctures) per region, lexicographically
    let mut choice = vec![(0u32, 0u32); n];
    fn rec(
        i: usize,
        choice: &mut Vec<(u32, u32)>,
        regions: &[crate::track::Region],
        chi_target: i64,
        p_left: u32,
    ) -> bool {
        if i == regions.len() {
            return chi_target == 0 && p_left == 0;
        }
        for g in 0..=3u32 {
            for p in 0..=p_left {
                let chi = 1 - 2 * g as i64 - p as i64;
                // region admissibility: 2chi - V < 0
                if 2 * chi - regions[i].cusp_count as i64 >= 0 {
                    continue;
                }
                // remaining regions can lower chi arbitrarily but not raise above 1 each
                let rest = regions.len() - i - 1;
                if chi_target - chi > rest as i64 {
                    continue;
                }
                choice[i] = (g, p);
                if rec(i + 1, choice, regions, chi_target - chi, p_left - p) {
                    return true;
                }
            }
        }
        false
    }
    if !rec(0, &mut choice, &regions, chi_target, p_target) {
        return None;
    }
    let decorations: BTreeMap<usize, RegionDecoration> = choice
        .into_iter()
        .enumerate()
        .map(|(i, (genus, punctures))| (i, RegionDecoration { genus, punctures }))
        .collect();
    let t = TrainTrack::from_parts(surface, switches, branches, decorations).ok()?;
    t.is_valid().then_some(t)
}

/// Smallest legal track: a simple closed curve separating a genus-2 surface
/// into two genus-1 pieces. One bivalent switch, one branch.
pub fn circle() -> TrainTrack {
    let switches = vec![switch(0, 1, 1)];
    let branches = vec![branch(0, end(0, GermClass::In, 0), end(0, GermClass::Out, 0))];
    let mut decorations = BTreeMap::new();
    decorations.insert(0, RegionDecoration { genus: 1, punctures: 0 });
    decorations.insert(1, RegionDecoration { genus: 1, punctures: 0 });
    TrainTrack::from_parts(Surface::new(2, 0), switches, branches, decorations).unwrap()
}

/// Standard maximal generic track on the once-punctured torus: two trivalent
/// switches, three branches, complement a once-punctured bigon.
pub fn s11_standard() -> TrainTrack {
    let switches = vec![switch(0, 1, 2), switch(1, 2, 1)];
    let branches = vec![
        branch(0, end(1, GermClass::Out, 0), end(0, GermClass::In, 0)),
        branch(1, end(0, GermClass::Out, 0), end(1, GermClass::In, 1)),
        branch(2, end(0, GermClass::Out, 1), end(1, GermClass::In, 0)),
    ];
    let mut decorations = BTreeMap::new();
    decorations.insert(0, RegionDecoration { genus: 0, punctures: 1 });
    TrainTrack::from_parts(Surface::new(1, 1), switches, branches, decorations).unwrap()
}

/// Two oriented circles joined by a one-way connector; the switch conditions
/// force weight zero on the connector, so the track is non-recurrent.
pub fn nonrecurrent_barbell() -> TrainTrack {
    let switches = vec![switch(0, 1, 2), switch(1, 2, 1)];
    let branches = vec![
        branch(0, end(0, GermClass::Out, 0), end(0, GermClass::In, 0)),
        branch(1, end(0, GermClass::Out, 1), end(1, GermClass::In, 1)),
        branch(2, end(1, GermClass::Out, 0), end(1, GermClass::In, 0)),
    ];
    for surf in [Surface::new(2, 0), Surface::new(1, 2), Surface::new(2, 1), Surface::new(3, 0)] {
        if let Some(t) = solve_decorations(surf, switches.clone(), branches.clone()) {
            return t;
        }
    }
    panic!("barbell admits no decoration on the candidate surfaces");
}

/// Theta graph with one reversed germ, forcing the weight of the third branch
/// to vanish. Non-recurrent with a single invisible branch.
pub fn nonrecurrent_flipped_theta() -> TrainTrack {
    // s0: in {e0}, out {e1, e2}; s1: in {e1}, out {e0, e2}
    let switches = vec![switch(0, 1, 2), switch(1, 1, 2)];
    let branches = vec![
        branch(0, end(1, GermClass::Out, 0), end(0, GermClass::In, 0)),
        branch(1, end(0, GermClass::Out, 0), end(1, GermClass::In, 0)),
        branch(2, end(0, GermClass::Out, 1), end(1, GermClass::Out, 1)),
    ];
    for surf in [
        Surface::new(2, 0),
        Surface::new(1, 2),
        Surface::new(2, 1),
        Surface::new(1, 1),
        Surface::new(3, 0),
    ] {
        if let Some(t) = solve_decorations(surf, switches.clone(), branches.clone()) {
            return t;
        }
    }
    panic!("flipped theta admits no decoration on the candidate surfaces");
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn named_fixtures_validate() {
        assert!(circle().is_valid());
        assert!(s11_standard().is_valid());
        assert!(nonrecurrent_barbell().is_valid());
        assert!(nonrecurrent_flipped_theta().is_valid());
    }
}
