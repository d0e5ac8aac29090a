//! Sequentialization of simultaneous goto-argument assignment.
//!
//! All code segments share one argument frame, so a goto writes its
//! arguments over the parameters it may still be reading. A [`MoveSet`]
//! states the simultaneous assignment; [`sequentialize`] orders it into a
//! [`CopyPlan`], breaking each dependency cycle with one temporary.

use std::fmt;

use crate::sema::WORD;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SlotKind {
    /// A word range of the shared frame; `id` is the word offset.
    Param,
    Local,
    Temp,
    Constant,
    /// A value computed from an argument expression; read-only.
    Expression,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Slot {
    pub id: u32,
    /// Bytes; a multiple of the word size.
    pub width: u64,
    pub kind: SlotKind,
}

impl Slot {
    pub fn param(word: u32, width: u64) -> Slot {
        Slot { id: word, width, kind: SlotKind::Param }
    }

    pub fn new(kind: SlotKind, id: u32, width: u64) -> Slot {
        Slot { id, width, kind }
    }

    pub fn is_writable(&self) -> bool {
        matches!(self.kind, SlotKind::Param | SlotKind::Local | SlotKind::Temp)
    }

    /// Storage region and byte range, for writable slots.
    fn extent(&self) -> Option<(SlotKind, u32, u64, u64)> {
        match self.kind {
            SlotKind::Param => {
                let start = self.id as u64 * WORD;
                Some((SlotKind::Param, 0, start, start + self.width))
            }
            SlotKind::Local | SlotKind::Temp => Some((self.kind, self.id, 0, self.width)),
            SlotKind::Constant | SlotKind::Expression => None,
        }
    }

    pub fn overlaps(&self, other: &Slot) -> bool {
        match (self.extent(), other.extent()) {
            (Some((ka, ia, sa, ea)), Some((kb, ib, sb, eb))) => ka == kb && ia == ib && sa < eb && sb < ea,
            _ => false,
        }
    }

    fn same_storage(&self, other: &Slot) -> bool {
        self.extent().is_some() && self.extent() == other.extent()
    }
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = match self.kind {
            SlotKind::Param => "p",
            SlotKind::Local => "l",
            SlotKind::Temp => "t",
            SlotKind::Constant => "c",
            SlotKind::Expression => "e",
        };
        write!(f, "{p}{}", self.id)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Move {
    pub dst: Slot,
    pub src: Slot,
}

/// Simultaneous assignment: every source is read in the pre-state.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MoveSet {
    pub moves: Vec<Move>,
}

impl MoveSet {
    /// Destinations must be writable and pairwise non-overlapping.
    pub fn is_well_formed(&self) -> bool {
        self.moves.iter().enumerate().all(|(i, a)| {
            a.dst.is_writable() && self.moves[i + 1..].iter().all(|b| !a.dst.overlaps(&b.dst))
        })
    }

    /// Number of pairs (dst of one move, src of a different move) sharing storage.
    pub fn overlapping_pairs(&self) -> usize {
        let mut n = 0;
        for (i, a) in self.moves.iter().enumerate() {
            for (j, b) in self.moves.iter().enumerate() {
                if i != j && a.dst.overlaps(&b.src) {
                    n += 1;
                }
            }
        }
        n
    }
}

/// Sequential copies equivalent to a [`MoveSet`].
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CopyPlan {
    /// `(dst, src)` in execution order.
    pub steps: Vec<(Slot, Slot)>,
    pub temps_used: usize,
    pub temp_bytes: u64,
}

impl CopyPlan {
    /// One `dst<-src` line per step.
    pub fn dump(&self) -> String {
        self.steps.iter().map(|(d, s)| format!("{d}<-{s}\n")).collect()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ParacopyMode {
    /// Temporaries only where a cycle or partial overlap forces one.
    #[default]
    Min,
    /// Stage every frame or expression source through a temporary.
    Naive,
}

impl std::str::FromStr for ParacopyMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "min" => Ok(ParacopyMode::Min),
            "naive" => Ok(ParacopyMode::Naive),
            _ => Err(format!("unknown paracopy mode `{s}` (expected min or naive)")),
        }
    }
}

/// `(copies, temp_bytes)`.
pub fn plan_cost(plan: &CopyPlan) -> (usize, u64) {
    (plan.steps.len(), plan.temp_bytes)
}

struct Planner {
    plan: CopyPlan,
}

impl Planner {
    fn temp_for(&mut self, src: Slot) -> Slot {
        let t = Slot::new(SlotKind::Temp, self.plan.temps_used as u32, src.width);
        self.plan.temps_used += 1;
        self.plan.temp_bytes += src.width;
        self.plan.steps.push((t, src));
        t
    }
}

pub fn sequentialize_with(ms: &MoveSet, mode: ParacopyMode) -> CopyPlan {
    match mode {
        ParacopyMode::Min => sequentialize(ms),
        ParacopyMode::Naive => sequentialize_naive(ms),
    }
}

/// Orders `ms` so that sequential execution equals simultaneous semantics.
/// Acyclic dependencies need no temporaries; each cycle of length k costs
/// one temporary and k + 1 copies.
pub fn sequentialize(ms: &MoveSet) -> CopyPlan {
    debug_assert!(ms.is_well_formed());
    let mut p = Planner { plan: CopyPlan::default() };
    let mut pending: Vec<Move> = ms.moves.iter().copied().filter(|m| !m.dst.same_storage(&m.src)).collect();

    // Argument expressions are evaluated before any destination is written.
    for m in pending.iter_mut() {
        if m.src.kind == SlotKind::Expression {
            m.src = p.temp_for(m.src);
        }
    }
    // A source only partly covered by some destination cannot join a
    // clean cycle; save it up front.
    let dsts: Vec<Slot> = pending.iter().map(|m| m.dst).collect();
    for m in pending.iter_mut() {
        let partial = dsts.iter().any(|d| *d != m.dst && d.overlaps(&m.src) && !d.same_storage(&m.src));
        if partial {
            m.src = p.temp_for(m.src);
        }
    }

    while !pending.is_empty() {
        let ready = (0..pending.len()).find(|&i| {
            pending.iter().enumerate().all(|(j, o)| j == i || !pending[i].dst.overlaps(&o.src))
        });
        if let Some(i) = ready {
            let m = pending.remove(i);
            p.plan.steps.push((m.dst, m.src));
            continue;
        }
        // Every pending destination is still read by another move. Walk
        // the "is read by" edges until a move repeats; it lies on a cycle.
        let mut seen = vec![false; pending.len()];
        let mut at = 0;
        while !seen[at] {
            seen[at] = true;
            let dst = pending[at].dst;
            at = (0..pending.len())
                .find(|&j| j != at && dst.overlaps(&pending[j].src))
                .expect("stuck move set without a reader");
        }
        let saved = pending[at].dst;
        let t = p.temp_for(saved);
        for m in pending.iter_mut() {
            if m.src.same_storage(&saved) {
                m.src = t;
            }
        }
    }
    p.plan
}

/// Baseline: every frame or expression source goes through its own
/// temporary before any destination is written.
pub fn sequentialize_naive(ms: &MoveSet) -> CopyPlan {
    let mut p = Planner { plan: CopyPlan::default() };
    let staged: Vec<Move> = ms
        .moves
        .iter()
        .map(|m| {
            let clobbered = ms.moves.iter().any(|o| o.dst.overlaps(&m.src));
            match m.src.kind {
                SlotKind::Param | SlotKind::Expression => Move { dst: m.dst, src: p.temp_for(m.src) },
                SlotKind::Local if clobbered => Move { dst: m.dst, src: p.temp_for(m.src) },
                _ => *m,
            }
        })
        .collect();
    p.plan.steps.extend(staged.iter().map(|m| (m.dst, m.src)));
    p.plan
}

/// Number of non-trivial cycles when `ms` is a permutation of equal-width
/// parameter slots. Independent of [`sequentialize`]; used to check it.
pub fn permutation_cycles(ms: &MoveSet) -> usize {
    use std::collections::HashMap;
    let next: HashMap<u32, u32> = ms
        .moves
        .iter()
        .filter(|m| m.src.kind == SlotKind::Param && m.dst.kind == SlotKind::Param)
        .map(|m| (m.src.id, m.dst.id))
        .collect();
    let mut visited = std::collections::HashSet::new();
    let mut cycles = 0;
    let mut starts: Vec<u32> = next.keys().copied().collect();
    starts.sort_unstable();
    for s in starts {
        if visited.contains(&s) {
            continue;
        }
        let mut path = Vec::new();
        let mut cur = s;
        while let Some(&n) = next.get(&cur) {
            if !visited.insert(cur) {
                break;
            }
            path.push(cur);
            cur = n;
        }
        if cur == s && path.len() > 1 {
            cycles += 1;
        }
    }
    cycles
}
