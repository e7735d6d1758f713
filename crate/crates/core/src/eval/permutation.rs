//! Blade-tip permutations and the optimal tip assignment.

use serde::{Deserialize, Serialize};

pub type Point2 = [f64; 2];

/// One of the six orderings of the three blade tips.
///
/// Numbered 1..=6 in the fixed order identity, (2 1 3), (3 2 1), (1 3 2),
/// (2 3 1), (3 1 2). Applying permutation `π` to predictions gives
/// `(P p̂)_i = p̂_{π(i)}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub struct TipPermutation(u8);

const MAPPINGS: [[usize; 3]; 6] = [
    [0, 1, 2],
    [1, 0, 2],
    [2, 1, 0],
    [0, 2, 1],
    [1, 2, 0],
    [2, 0, 1],
];

impl TipPermutation {
    pub const IDENTITY: TipPermutation = TipPermutation(1);

    pub const ALL: [TipPermutation; 6] = [
        TipPermutation(1),
        TipPermutation(2),
        TipPermutation(3),
        TipPermutation(4),
        TipPermutation(5),
        TipPermutation(6),
    ];

    /// Permutation by its 1-based number.
    pub fn from_number(n: u8) -> Option<Self> {
        (1..=6).contains(&n).then_some(TipPermutation(n))
    }

    pub fn number(self) -> u8 {
        self.0
    }

    /// Zero-based source index for each output slot.
    pub fn mapping(self) -> [usize; 3] {
        MAPPINGS[usize::from(self.0 - 1)]
    }

    /// 0/1 matrix with `P[i][π(i)] = 1`.
    pub fn matrix(self) -> [[u8; 3]; 3] {
        let mut m = [[0u8; 3]; 3];
        for (row, &col) in self.mapping().iter().enumerate() {
            m[row][col] = 1;
        }
        m
    }

    pub fn apply<T: Copy>(self, items: [T; 3]) -> [T; 3] {
        self.mapping().map(|src| items[src])
    }

    pub fn inverse(self) -> Self {
        let map = self.mapping();
        let mut inv = [0usize; 3];
        for (i, &src) in map.iter().enumerate() {
            inv[src] = i;
        }
        let idx = MAPPINGS.iter().position(|m| *m == inv).expect("group is closed");
        TipPermutation(idx as u8 + 1)
    }
}

impl From<TipPermutation> for u8 {
    fn from(p: TipPermutation) -> u8 {
        p.0
    }
}

impl TryFrom<u8> for TipPermutation {
    type Error = String;

    fn try_from(n: u8) -> Result<Self, String> {
        TipPermutation::from_number(n).ok_or_else(|| format!("permutation number {n} not in 1..=6"))
    }
}

/// Per-tip Euclidean distances `‖p̂_i − p_i‖`.
pub fn tip_distances(pred: &[Point2; 3], gt: &[Point2; 3]) -> [f64; 3] {
    std::array::from_fn(|i| (pred[i][0] - gt[i][0]).hypot(pred[i][1] - gt[i][1]))
}

fn squared_cost(pred: &[Point2; 3], gt: &[Point2; 3], p: TipPermutation, mask: [bool; 3]) -> f64 {
    let map = p.mapping();
    let mut sum = 0.0;
    for i in 0..3 {
        if mask[i] {
            let dx = pred[map[i]][0] - gt[i][0];
            let dy = pred[map[i]][1] - gt[i][1];
            sum += dx * dx + dy * dy;
        }
    }
    sum
}

/// Sum of squared tip distances after applying `p` to the predictions.
pub fn permutation_cost(pred: &[Point2; 3], gt: &[Point2; 3], p: TipPermutation) -> f64 {
    squared_cost(pred, gt, p, [true; 3])
}

/// Permutation minimizing the summed squared tip distance; ties go to the
/// lowest permutation number. Returns the permuted predictions too.
pub fn optimal_tip_permutation(pred: &[Point2; 3], gt: &[Point2; 3]) -> (TipPermutation, [Point2; 3]) {
    optimal_tip_permutation_masked(pred, gt, [true; 3])
}

/// As [`optimal_tip_permutation`], summing only over ground-truth tips with
/// `mask[i]` set.
pub fn optimal_tip_permutation_masked(
    pred: &[Point2; 3],
    gt: &[Point2; 3],
    mask: [bool; 3],
) -> (TipPermutation, [Point2; 3]) {
    let mut best = TipPermutation::IDENTITY;
    let mut best_cost = squared_cost(pred, gt, best, mask);
    for &p in &TipPermutation::ALL[1..] {
        let cost = squared_cost(pred, gt, p, mask);
        if cost < best_cost {
            best = p;
            best_cost = cost;
        }
    }
    (best, best.apply(*pred))
}
