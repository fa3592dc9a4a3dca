use std::cmp::Ordering;

use crate::distance::squared_l2;
use crate::hnsw::layer_cap;

use super::{Entry, HsigIndex};

impl HsigIndex {
    /// Checks every structural invariant and returns the violations found
    /// (empty when the index is consistent).
    pub fn validate(&self) -> Vec<String> {
        let mut errs = Vec::new();
        let n = self.len();
        let s = self.segments();
        let m = self.params.max_degree;

        if self.segment.len() != n || self.levels.len() != n || self.nodes.len() != n {
            errs.push(format!(
                "length mismatch: {n} objects, {} segment ids, {} levels, {} node lists",
                self.segment.len(),
                self.levels.len(),
                self.nodes.len()
            ));
            return errs;
        }
        if self.view.len() != n {
            errs.push(format!("cardinality view holds {} values, expected {n}", self.view.len()));
        }

        for id in 0..n as u32 {
            let seg = self.segment[id as usize] as usize;
            if seg != self.boundaries.segment_of(self.store.attribute(id)) {
                errs.push(format!("node {id}: stored segment {seg} disagrees with its attribute"));
            }
            let level = self.levels[id as usize] as usize;
            if self.nodes[id as usize].len() != level + 1 {
                errs.push(format!("node {id}: {} layers for level {level}", self.nodes[id as usize].len()));
                continue;
            }
            for (layer, node) in self.nodes[id as usize].iter().enumerate() {
                let at = |msg: String| format!("node {id} layer {layer}: {msg}");
                if node.ends.len() != s {
                    errs.push(at(format!("{} chunks, expected {s}", node.ends.len())));
                    continue;
                }
                if node.ends.windows(2).any(|w| w[0] > w[1]) || *node.ends.last().unwrap() as usize != node.slots.len() {
                    errs.push(at("chunk offsets are inconsistent".into()));
                    continue;
                }
                if node.mask.len() != node.slots.len() {
                    errs.push(at(format!("bitmap has {} bits for {} slots", node.mask.len(), node.slots.len())));
                }
                if node.mask.count_ones() > m {
                    errs.push(at(format!("{} global edges exceed M = {m}", node.mask.count_ones())));
                }
                for j in 0..s {
                    let chunk = node.chunk(j);
                    if chunk.len() > layer_cap(m, layer) {
                        errs.push(at(format!("chunk {j} has {} entries", chunk.len())));
                    }
                    if chunk.windows(2).any(|w| w[0] > w[1]) {
                        errs.push(at(format!("chunk {j} is not sorted")));
                    }
                    for (k, slot) in chunk.iter().enumerate() {
                        let t = slot.id;
                        if t as usize >= n || t == id {
                            errs.push(at(format!("chunk {j} has invalid target {t}")));
                            continue;
                        }
                        if chunk[..k].iter().any(|x| x.id == t) {
                            errs.push(at(format!("chunk {j} repeats target {t}")));
                        }
                        if self.segment[t as usize] as usize != j {
                            errs.push(at(format!("chunk {j} holds {t} from segment {}", self.segment[t as usize])));
                        }
                        if (self.levels[t as usize] as usize) < layer {
                            errs.push(at(format!("target {t} is absent from this layer")));
                        }
                        let d = squared_l2(self.store.vector(id), self.store.vector(t));
                        if (d - slot.dist).abs() > 1e-4 * d.max(1.0) {
                            errs.push(at(format!("stored distance to {t} is stale")));
                        }
                    }
                }
            }
        }

        for (j, entry) in self.entries.iter().enumerate() {
            let members = (0..n as u32).filter(|&i| self.segment[i as usize] as usize == j);
            let best = members.map(|i| Entry { id: i, level: self.levels[i as usize] as usize }).fold(None, |acc: Option<Entry>, e| match acc {
                Some(a) if a.level >= e.level => Some(a),
                _ => Some(e),
            });
            match (entry, best) {
                (None, None) => {}
                (Some(e), Some(b)) if e.level == b.level && e.level == self.levels.get(e.id as usize).map_or(usize::MAX, |&l| l as usize) && self.segment[e.id as usize] as usize == j => {}
                _ => errs.push(format!("segment {j}: entry {entry:?} is not a top-level member")),
            }
        }

        let top = self.levels.iter().max().map(|&l| l as usize + 1).unwrap_or(0);
        if self.heads.len() != top {
            errs.push(format!("{} skip-list layers, expected {top}", self.heads.len()));
        }
        for (layer, &head) in self.heads.iter().enumerate() {
            let expected = self.levels.iter().filter(|&&l| l as usize >= layer).count();
            let mut seen = 0usize;
            let mut prev: Option<u32> = None;
            let mut cur = head;
            while let Some(id) = cur {
                if id as usize >= n || (self.levels[id as usize] as usize) < layer {
                    errs.push(format!("skip list {layer}: node {id} does not belong"));
                    break;
                }
                if let Some(p) = prev {
                    if self.key_cmp(p, id) != Ordering::Less {
                        errs.push(format!("skip list {layer}: {p} before {id} is out of order"));
                        break;
                    }
                }
                seen += 1;
                if seen > expected {
                    errs.push(format!("skip list {layer}: longer than {expected}"));
                    break;
                }
                prev = Some(id);
                cur = self.nodes[id as usize][layer].next;
            }
            if seen != expected {
                errs.push(format!("skip list {layer}: {seen} nodes, expected {expected}"));
            }
        }
        errs
    }
}
