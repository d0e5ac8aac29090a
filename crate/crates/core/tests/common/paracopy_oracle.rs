//! Byte-level store used to check copy plans against simultaneous
//! assignment. Shares nothing with the planner beyond the slot types.

use std::collections::HashMap;

use cbc_core::paracopy::{CopyPlan, Move, MoveSet, Slot, SlotKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const WORD: u64 = 8;
pub const FRAME_WORDS: u32 = 12;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Store {
    frame: Vec<u8>,
    locals: HashMap<u32, Vec<u8>>,
    temps: HashMap<u32, Vec<u8>>,
}

fn pure_bytes(tag: u8, id: u32, width: u64) -> Vec<u8> {
    (0..width).map(|b| tag ^ (id as u8).wrapping_mul(31) ^ (b as u8).wrapping_mul(7)).collect()
}

impl Store {
    pub fn random(rng: &mut impl Rng) -> Store {
        let frame = (0..FRAME_WORDS as u64 * WORD + 64).map(|_| rng.gen()).collect();
        let locals = (0..8).map(|i| (i, (0..64).map(|_| rng.gen()).collect())).collect();
        Store { frame, locals, temps: HashMap::new() }
    }

    pub fn read(&self, s: &Slot) -> Vec<u8> {
        let w = s.width as usize;
        match s.kind {
            SlotKind::Param => {
                let at = s.id as usize * WORD as usize;
                self.frame[at..at + w].to_vec()
            }
            SlotKind::Local => self.locals[&s.id][..w].to_vec(),
            SlotKind::Temp => self.temps.get(&s.id).expect("temp read before write")[..w].to_vec(),
            SlotKind::Constant => pure_bytes(0xC3, s.id, s.width),
            SlotKind::Expression => pure_bytes(0x5A, s.id, s.width),
        }
    }

    pub fn write(&mut self, s: &Slot, bytes: &[u8]) {
        let w = s.width as usize;
        match s.kind {
            SlotKind::Param => {
                let at = s.id as usize * WORD as usize;
                self.frame[at..at + w].copy_from_slice(bytes);
            }
            SlotKind::Local => self.locals.get_mut(&s.id).unwrap()[..w].copy_from_slice(bytes),
            SlotKind::Temp => {
                self.temps.insert(s.id, bytes.to_vec());
            }
            SlotKind::Constant | SlotKind::Expression => panic!("write to read-only slot {s:?}"),
        }
    }

    /// Frame and locals only; temporaries are scratch.
    pub fn observable(&self) -> (Vec<u8>, Vec<(u32, Vec<u8>)>) {
        let mut locals: Vec<_> = self.locals.iter().map(|(k, v)| (*k, v.clone())).collect();
        locals.sort();
        (self.frame.clone(), locals)
    }
}

pub fn run_simultaneous(ms: &MoveSet, store: &mut Store) {
    let values: Vec<Vec<u8>> = ms.moves.iter().map(|m| store.read(&m.src)).collect();
    for (m, v) in ms.moves.iter().zip(values) {
        store.write(&m.dst, &v);
    }
}

pub fn run_plan(plan: &CopyPlan, store: &mut Store) {
    for (dst, src) in &plan.steps {
        assert_eq!(dst.width, src.width, "width mismatch in step {dst}<-{src}");
        let v = store.read(src);
        store.write(dst, &v);
    }
}

/// Random move set over at most `FRAME_WORDS` frame words with mixed
/// widths. With `permutation_only`, every slot is one word and the moves
/// form a permutation of a subset of the frame.
pub fn random_moveset(rng: &mut impl Rng, permutation_only: bool) -> MoveSet {
    let mut moves = Vec::new();
    if permutation_only {
        let n = rng.gen_range(0..=FRAME_WORDS);
        let mut ids: Vec<u32> = (0..n).collect();
        for i in (1..ids.len()).rev() {
            let j = rng.gen_range(0..=i);
            ids.swap(i, j);
        }
        for (d, s) in ids.iter().enumerate() {
            moves.push(Move { dst: Slot::param(d as u32, WORD), src: Slot::param(*s, WORD) });
        }
        return MoveSet { moves };
    }
    // Carve destinations out of the frame without overlap.
    let mut word = 0;
    while word < FRAME_WORDS {
        let words = rng.gen_range(1..=3u32).min(FRAME_WORDS - word);
        if rng.gen_bool(0.75) {
            let width = words as u64 * WORD;
            let dst = Slot::param(word, width);
            let src = match rng.gen_range(0..10) {
                0..=5 => {
                    let start = rng.gen_range(0..=FRAME_WORDS - words);
                    Slot::param(start, width)
                }
                6 => Slot::new(SlotKind::Local, rng.gen_range(0..8), width),
                7 => Slot::new(SlotKind::Constant, rng.gen_range(0..4), width),
                _ => Slot::new(SlotKind::Expression, rng.gen_range(0..4), width),
            };
            moves.push(Move { dst, src });
        }
        word += words;
    }
    // Occasionally write a local that some move reads.
    if rng.gen_bool(0.3) {
        let id = rng.gen_range(0..8);
        let src = Slot::param(rng.gen_range(0..FRAME_WORDS), WORD);
        moves.push(Move { dst: Slot::new(SlotKind::Local, id, WORD), src });
    }
    for i in (1..moves.len()).rev() {
        let j = rng.gen_range(0..=i);
        moves.swap(i, j);
    }
    MoveSet { moves }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Cycle count by repeated removal of acyclic moves, then counting the
/// connected rings that remain.
pub fn independent_cycle_count(ms: &MoveSet) -> usize {
    let mut edges: Vec<(u32, u32)> =
        ms.moves.iter().filter(|m| m.src != m.dst).map(|m| (m.src.id, m.dst.id)).collect();
    loop {
        let before = edges.len();
        let srcs: Vec<u32> = edges.iter().map(|e| e.0).collect();
        edges.retain(|(_, d)| srcs.contains(d));
        let dsts: Vec<u32> = edges.iter().map(|e| e.1).collect();
        edges.retain(|(s, _)| dsts.contains(s));
        if edges.len() == before {
            break;
        }
    }
    let mut rings = 0;
    while let Some((s0, mut d)) = edges.pop() {
        while d != s0 {
            let i = edges.iter().position(|e| e.0 == d).unwrap();
            d = edges.remove(i).1;
        }
        rings += 1;
    }
    rings
}
