use std::collections::{HashMap, VecDeque};
use std::sync::Arc;

use super::block::{Block, BlockId};
use super::tx::Millis;

/// Orphans buffered while waiting for a parent; overflow drops the oldest.
pub const ORPHAN_BUFFER_LIMIT: usize = 64;

/// Result of offering a block to the store.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InsertOutcome {
    /// Connected to the tree (possibly together with buffered orphans).
    /// Carries the canonical tip after insertion.
    Connected { tip: BlockId, tip_changed: bool },
    /// Parent unknown; buffered until it arrives.
    Orphaned,
    /// Already stored (or already buffered).
    Duplicate,
    /// Structurally invalid: difficulty outside {1, 2} or bad height.
    Rejected,
}

/// Block tree with per-block cumulative score and deterministic fork choice.
///
/// Score is the sum of difficulties from genesis. The canonical tip is the
/// tip with maximal score; ties break by earliest local arrival, then by
/// smallest block id, so the choice is a pure function of the tree and the
/// arrival log regardless of insertion order.
#[derive(Debug, Clone)]
pub struct ChainStore {
    blocks: HashMap<BlockId, Arc<Block>>,
    children: HashMap<BlockId, Vec<BlockId>>,
    score: HashMap<BlockId, u64>,
    arrival: HashMap<BlockId, Millis>,
    tips: Vec<BlockId>,
    canonical: BlockId,
    genesis: BlockId,
    orphans: VecDeque<(Arc<Block>, Millis)>,
}

impl ChainStore {
    pub fn new(genesis: Arc<Block>) -> Self {
        let gid = genesis.id;
        let mut blocks = HashMap::new();
        blocks.insert(gid, genesis);
        let mut score = HashMap::new();
        score.insert(gid, 0);
        let mut arrival = HashMap::new();
        arrival.insert(gid, 0);
        ChainStore {
            blocks,
            children: HashMap::new(),
            score,
            arrival,
            tips: vec![gid],
            canonical: gid,
            genesis: gid,
            orphans: VecDeque::new(),
        }
    }

    pub fn genesis(&self) -> BlockId {
        self.genesis
    }

    pub fn contains(&self, id: BlockId) -> bool {
        self.blocks.contains_key(&id)
    }

    pub fn block(&self, id: BlockId) -> Option<&Arc<Block>> {
        self.blocks.get(&id)
    }

    pub fn score_of(&self, id: BlockId) -> Option<u64> {
        self.score.get(&id).copied()
    }

    pub fn arrival_of(&self, id: BlockId) -> Option<Millis> {
        self.arrival.get(&id).copied()
    }

    /// Canonical tip under the fork-choice rule.
    pub fn tip(&self) -> BlockId {
        self.canonical
    }

    pub fn tip_block(&self) -> &Arc<Block> {
        &self.blocks[&self.canonical]
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    /// Every stored block, canonical or not.
    pub fn all_blocks(&self) -> impl Iterator<Item = &Arc<Block>> {
        self.blocks.values()
    }

    /// Offer a block. Structural admission only (difficulty in {1,2},
    /// height = parent height + 1); consensus-level verification is the
    /// caller's business and happens before this.
    pub fn insert_block(&mut self, block: Arc<Block>, arrival: Millis) -> InsertOutcome {
        if self.blocks.contains_key(&block.id)
            || self.orphans.iter().any(|(b, _)| b.id == block.id)
        {
            return InsertOutcome::Duplicate;
        }
        if block.difficulty() != 1 && block.difficulty() != 2 {
            return InsertOutcome::Rejected;
        }
        if !self.blocks.contains_key(&block.header.parent) {
            if self.orphans.len() >= ORPHAN_BUFFER_LIMIT {
                self.orphans.pop_front();
            }
            self.orphans.push_back((block, arrival));
            return InsertOutcome::Orphaned;
        }
        let old_tip = self.canonical;
        if !self.connect(block, arrival) {
            return InsertOutcome::Rejected;
        }
        self.drain_orphans();
        self.canonical = self.fork_choice();
        InsertOutcome::Connected {
            tip: self.canonical,
            tip_changed: self.canonical != old_tip,
        }
    }

    fn connect(&mut self, block: Arc<Block>, arrival: Millis) -> bool {
        let parent = &self.blocks[&block.header.parent];
        if block.number() != parent.number() + 1 {
            return false;
        }
        let parent_id = parent.id;
        let parent_score = self.score[&parent_id];
        let id = block.id;
        self.score.insert(id, parent_score + block.difficulty());
        self.arrival.insert(id, arrival);
        self.blocks.insert(id, block);
        self.children.entry(parent_id).or_default().push(id);
        self.tips.retain(|t| *t != parent_id);
        self.tips.push(id);
        true
    }

    fn drain_orphans(&mut self) {
        loop {
            let mut connected_any = false;
            let mut rest = VecDeque::new();
            while let Some((orphan, at)) = self.orphans.pop_front() {
                if self.blocks.contains_key(&orphan.id) {
                    continue;
                }
                if self.blocks.contains_key(&orphan.header.parent) {
                    if self.connect(orphan, at) {
                        connected_any = true;
                    }
                } else {
                    rest.push_back((orphan, at));
                }
            }
            self.orphans = rest;
            if !connected_any {
                break;
            }
        }
    }

    /// Highest cumulative score wins; ties break by (earliest arrival,
    /// smallest id). Deterministic given the tree and arrival log.
    pub fn fork_choice(&self) -> BlockId {
        let mut best: Option<(u64, Millis, BlockId)> = None;
        for &t in &self.tips {
            let key = (self.score[&t], self.arrival[&t], t);
            best = Some(match best {
                None => key,
                Some(cur) => {
                    // higher score, else earlier arrival, else smaller id
                    if key.0 > cur.0
                        || (key.0 == cur.0 && key.1 < cur.1)
                        || (key.0 == cur.0 && key.1 == cur.1 && key.2 < cur.2)
                    {
                        key
                    } else {
                        cur
                    }
                }
            });
        }
        best.map(|(_, _, id)| id).unwrap_or(self.genesis)
    }

    /// Genesis-to-tip path of the canonical chain.
    pub fn canonical_chain(&self) -> Vec<Arc<Block>> {
        self.chain_to(self.canonical)
    }

    fn chain_to(&self, tip: BlockId) -> Vec<Arc<Block>> {
        let mut out = Vec::new();
        let mut cur = tip;
        loop {
            let b = self.blocks[&cur].clone();
            let parent = b.header.parent;
            let number = b.number();
            out.push(b);
            if number == 0 {
                break;
            }
            cur = parent;
        }
        out.reverse();
        out
    }

    /// Canonical blocks at least `depth` behind the tip, in height order.
    /// These are the run's confirmed (stabilized) blocks.
    pub fn confirmed_blocks(&self, depth: u64) -> Vec<Arc<Block>> {
        let tip_number = self.blocks[&self.canonical].number();
        if tip_number < depth {
            return Vec::new();
        }
        let cut = tip_number - depth;
        self.canonical_chain()
            .into_iter()
            .filter(|b| b.number() <= cut)
            .collect()
    }

    /// Blocks popped from / pushed onto the canonical chain when the tip
    /// moves from `old` to `new`, each ordered tip-down / ancestor-up.
    pub fn reorg_path(&self, old: BlockId, new: BlockId) -> (Vec<Arc<Block>>, Vec<Arc<Block>>) {
        let mut popped = Vec::new();
        let mut pushed = Vec::new();
        let mut a = old;
        let mut b = new;
        while self.blocks[&a].number() > self.blocks[&b].number() {
            popped.push(self.blocks[&a].clone());
            a = self.blocks[&a].header.parent;
        }
        while self.blocks[&b].number() > self.blocks[&a].number() {
            pushed.push(self.blocks[&b].clone());
            b = self.blocks[&b].header.parent;
        }
        while a != b {
            popped.push(self.blocks[&a].clone());
            pushed.push(self.blocks[&b].clone());
            a = self.blocks[&a].header.parent;
            b = self.blocks[&b].header.parent;
        }
        pushed.reverse();
        (popped, pushed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::block::{build_block, genesis_block, SealExtra};
    use crate::chain::tx::NodeId;

    fn child(parent: &Block, sealer: u32, diff: u64, ts: Millis) -> Arc<Block> {
        build_block(parent, NodeId(sealer), diff, ts, Vec::new(), SealExtra::None)
    }

    #[test]
    fn single_chain_scores_accumulate() {
        let g = genesis_block();
        let mut store = ChainStore::new(g.clone());
        let b1 = child(&g, 1, 2, 3000);
        match store.insert_block(b1.clone(), 3100) {
            InsertOutcome::Connected { tip, .. } => assert_eq!(tip, b1.id),
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(store.score_of(b1.id), Some(2));
    }

    #[test]
    fn higher_difficulty_child_wins() {
        let g = genesis_block();
        let mut store = ChainStore::new(g.clone());
        let heavy = child(&g, 1, 2, 3000);
        let light = child(&g, 2, 1, 3000);
        store.insert_block(light.clone(), 3050);
        store.insert_block(heavy.clone(), 3200);
        // The leader's score-2 block outranks the earlier-arrived score-1 one.
        assert_eq!(store.tip(), heavy.id);
    }

    #[test]
    fn equal_difficulty_tie_breaks_by_arrival_then_id_order_independent() {
        let g = genesis_block();
        let a = child(&g, 1, 1, 3000);
        let b = child(&g, 2, 1, 3000);
        // Same arrival log, both insertion orders: the answer must match.
        let run = |first: &Arc<Block>, second: &Arc<Block>| {
            let mut store = ChainStore::new(g.clone());
            store.insert_block(first.clone(), 3050);
            store.insert_block(second.clone(), 3050);
            store.tip()
        };
        let t1 = run(&a, &b);
        let t2 = run(&b, &a);
        assert_eq!(t1, t2);
        assert_eq!(t1, a.id.min(b.id));

        // Distinct arrivals: first arrival wins regardless of insertion.
        let run_at = |first: (&Arc<Block>, Millis), second: (&Arc<Block>, Millis)| {
            let mut store = ChainStore::new(g.clone());
            store.insert_block(first.0.clone(), first.1);
            store.insert_block(second.0.clone(), second.1);
            store.tip()
        };
        assert_eq!(run_at((&a, 3040), (&b, 3060)), a.id);
        assert_eq!(run_at((&b, 3060), (&a, 3040)), a.id);
    }

    #[test]
    fn scores_six_vs_five() {
        let g = genesis_block();
        let mut store = ChainStore::new(g.clone());
        // Branch A: 2 + 2 + 2 = 6. Branch B: 2 + 2 + 1 = 5.
        let a1 = child(&g, 1, 2, 3000);
        let a2 = child(&a1, 2, 2, 6000);
        let a3 = child(&a2, 3, 2, 9000);
        let b1 = child(&g, 4, 2, 3000);
        let b2 = child(&b1, 5, 2, 6000);
        let b3 = child(&b2, 6, 1, 9000);
        for (b, at) in [(&b1, 1), (&b2, 2), (&b3, 3), (&a1, 4), (&a2, 5), (&a3, 6)] {
            store.insert_block(b.clone(), at);
        }
        assert_eq!(store.score_of(a3.id), Some(6));
        assert_eq!(store.score_of(b3.id), Some(5));
        assert_eq!(store.tip(), a3.id);
    }

    #[test]
    fn orphan_buffered_until_parent_arrives() {
        let g = genesis_block();
        let mut store = ChainStore::new(g.clone());
        let b1 = child(&g, 1, 2, 3000);
        let b2 = child(&b1, 2, 2, 6000);
        assert_eq!(store.insert_block(b2.clone(), 6100), InsertOutcome::Orphaned);
        assert!(!store.contains(b2.id));
        match store.insert_block(b1.clone(), 6200) {
            InsertOutcome::Connected { tip, .. } => assert_eq!(tip, b2.id),
            other => panic!("unexpected {other:?}"),
        }
        assert!(store.contains(b2.id));
        assert_eq!(store.score_of(b2.id), Some(4));
    }

    #[test]
    fn orphan_buffer_bounded() {
        let g = genesis_block();
        let mut store = ChainStore::new(g.clone());
        let hidden = child(&g, 1, 2, 3000);
        let mut parent = hidden.clone();
        let mut orphans = Vec::new();
        for i in 0..(ORPHAN_BUFFER_LIMIT + 1) {
            let b = child(&parent, 2, 2, 6000 + i as u64);
            store.insert_block(b.clone(), 6000 + i as u64);
            orphans.push(b.clone());
            parent = b;
        }
        // The oldest orphan was dropped, so connecting the hidden parent
        // recovers only a suffix-free prefix of nothing: the first orphan is
        // gone and the rest stay disconnected.
        store.insert_block(hidden.clone(), 9000);
        assert!(store.contains(hidden.id));
        assert!(!store.contains(orphans[0].id));
    }

    #[test]
    fn rejects_bad_difficulty_and_bad_height() {
        let g = genesis_block();
        let mut store = ChainStore::new(g.clone());
        let bad_diff = child(&g, 1, 0, 3000);
        assert_eq!(store.insert_block(bad_diff, 100), InsertOutcome::Rejected);
        let bad_diff3 = child(&g, 1, 3, 3000);
        assert_eq!(store.insert_block(bad_diff3, 100), InsertOutcome::Rejected);
    }

    #[test]
    fn confirmed_blocks_cut() {
        let g = genesis_block();
        let mut store = ChainStore::new(g.clone());
        let mut parent = g.clone();
        for i in 1..=10u64 {
            let b = child(&parent, (i % 3) as u32, 2, 3000 * i);
            store.insert_block(b.clone(), 3000 * i);
            parent = b;
        }
        // Tip at height 10, depth 6: heights 0..=4.
        let confirmed = store.confirmed_blocks(6);
        let heights: Vec<_> = confirmed.iter().map(|b| b.number()).collect();
        assert_eq!(heights, vec![0, 1, 2, 3, 4]);

        // Chain shorter than the depth: empty.
        let mut short = ChainStore::new(g.clone());
        let mut p = g.clone();
        for i in 1..=3u64 {
            let b = child(&p, 0, 2, 3000 * i);
            short.insert_block(b.clone(), 3000 * i);
            p = b;
        }
        assert!(short.confirmed_blocks(6).is_empty());
    }

    #[test]
    fn reorg_above_cut_preserves_confirmed_prefix() {
        let g = genesis_block();
        let mut store = ChainStore::new(g.clone());
        let mut parent = g.clone();
        let mut trunk = Vec::new();
        for i in 1..=8u64 {
            let b = child(&parent, (i % 3) as u32, 2, 3000 * i);
            store.insert_block(b.clone(), 3000 * i);
            trunk.push(b.clone());
            parent = b;
        }
        let before = store.confirmed_blocks(4);
        // Fork at height 7 (two blocks above the cut) that outgrows the old
        // tip: heights 7' and 8' with an extra 9'.
        let f7 = child(&trunk[5], 1, 1, 21_500);
        let f8 = child(&f7, 2, 2, 24_500);
        let f9 = child(&f8, 0, 2, 27_500);
        store.insert_block(f7.clone(), 21_600);
        store.insert_block(f8.clone(), 24_600);
        store.insert_block(f9.clone(), 27_600);
        assert_eq!(store.tip(), f9.id);
        let after = store.confirmed_blocks(4);
        let ids = |v: &[Arc<Block>]| v.iter().map(|b| b.id).collect::<Vec<_>>();
        // Previously reported blocks below the cut never change.
        assert!(ids(&after).starts_with(&ids(&before)));
    }

    #[test]
    fn reorg_path_pops_and_pushes() {
        let g = genesis_block();
        let mut store = ChainStore::new(g.clone());
        let a1 = child(&g, 1, 2, 3000);
        let b1 = child(&g, 2, 1, 3000);
        let b2 = child(&b1, 3, 2, 6000);
        store.insert_block(a1.clone(), 3100);
        store.insert_block(b1.clone(), 3200);
        store.insert_block(b2.clone(), 6100);
        let (popped, pushed) = store.reorg_path(a1.id, b2.id);
        assert_eq!(popped.iter().map(|b| b.id).collect::<Vec<_>>(), vec![a1.id]);
        assert_eq!(
            pushed.iter().map(|b| b.id).collect::<Vec<_>>(),
            vec![b1.id, b2.id]
        );
    }
}
