use alloc::vec::Vec;

use super::sweep::{Direction, SweepTable, TrackPoint, Tracks};

/// Cost changes smaller than this are not counted as strict.
pub const STRICTNESS_MARGIN: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParadoxKind {
    /// Adding resources makes every user worse off.
    Braess,
    /// More cooperation lowers the cooperating user's own cost.
    Cooperation,
}

impl ParadoxKind {
    pub fn label(self) -> &'static str {
        match self {
            Self::Braess => "braess",
            Self::Cooperation => "cooperation",
        }
    }
}

/// A maximal run of strictly ordered costs along one branch.
#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub track: usize,
    /// Parameter range covered, low end first.
    pub interval: (f64, f64),
    /// Grid points in the order the parameter is read.
    pub points: Vec<TrackPoint>,
    /// Raw cost of every user at each point.
    pub costs: Vec<Vec<f64>>,
    /// Last minus first cost, per user.
    pub delta: Vec<f64>,
    /// The run starts at the parent of a newly appearing branch.
    pub via_birth: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParadoxReport {
    pub kind: ParadoxKind,
    /// Direction of the parameter the costs were read along.
    pub direction: Direction,
    pub witnesses: Vec<Witness>,
    /// Some grid point has at least two equilibria.
    pub multiplicity_in_sweep: bool,
    /// A cooperation paradox was found although no grid point has several
    /// equilibria, contrary to the expectation that it needs multiplicity.
    pub discrepancy: bool,
}

impl ParadoxReport {
    pub fn is_empty(&self) -> bool {
        self.witnesses.is_empty()
    }
}

fn runs(
    table: &SweepTable,
    tracks: &Tracks,
    with_parents: bool,
    step: impl Fn(&[f64], &[f64]) -> bool,
) -> Vec<Witness> {
    let mut out = Vec::new();
    for track in &tracks.tracks {
        let mut seq: Vec<TrackPoint> = Vec::new();
        let born = with_parents && track.parent.is_some();
        if born {
            seq.extend(track.parent);
        }
        seq.extend(track.points.iter().copied());
        let costs: Vec<Vec<f64>> =
            seq.iter().map(|&p| table.cluster(p).map(|e| e.costs.raw.clone()).unwrap_or_default()).collect();
        let mut k = 0;
        while k + 1 < seq.len() {
            if !step(&costs[k], &costs[k + 1]) {
                k += 1;
                continue;
            }
            let first = k;
            while k + 1 < seq.len() && step(&costs[k], &costs[k + 1]) {
                k += 1;
            }
            let a = table.rows[seq[first].row].value;
            let b = table.rows[seq[k].row].value;
            out.push(Witness {
                track: track.id,
                interval: (a.min(b), a.max(b)),
                points: seq[first..=k].to_vec(),
                costs: costs[first..=k].to_vec(),
                delta: costs[k].iter().zip(&costs[first]).map(|(x, y)| x - y).collect(),
                via_birth: born && first == 0,
            });
        }
    }
    out
}

/// Runs along which every user's raw cost strictly rises while resources
/// grow. `more_resources` says which way the swept parameter adds resources.
/// Branches are followed in that direction; a branch that appears without a
/// continuation is linked to its nearest predecessor, so an equilibrium that
/// only exists once resources are added is compared with the one it
/// replaces.
pub fn detect_braess(table: &SweepTable, more_resources: Direction) -> ParadoxReport {
    let tracks = Tracks::build(&table.rows, more_resources == Direction::Decreasing);
    let witnesses =
        runs(table, &tracks, true, |a, b| !a.is_empty() && a.iter().zip(b).all(|(x, y)| *y > *x + STRICTNESS_MARGIN));
    ParadoxReport {
        kind: ParadoxKind::Braess,
        direction: more_resources,
        witnesses,
        multiplicity_in_sweep: table.max_clusters() >= 2,
        discrepancy: false,
    }
}

/// Runs along continued branches where the raw cost of `user` strictly
/// falls as the degree of cooperation rises.
pub fn detect_cooperation_paradox(table: &SweepTable, user: usize) -> ParadoxReport {
    let witnesses = runs(table, &table.tracks, false, |a, b| {
        a.len() > user && b.len() > user && b[user] < a[user] - STRICTNESS_MARGIN
    });
    let multiplicity_in_sweep = table.max_clusters() >= 2;
    ParadoxReport {
        kind: ParadoxKind::Cooperation,
        direction: Direction::Increasing,
        discrepancy: !witnesses.is_empty() && !multiplicity_in_sweep,
        witnesses,
        multiplicity_in_sweep,
    }
}
