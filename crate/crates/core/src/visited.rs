use std::cell::RefCell;

/// Epoch-tagged visited marks, reused across queries on the same thread so a
/// search never pays an O(n) clear.
#[derive(Default)]
pub(crate) struct Visited {
    marks: Vec<u16>,
    epoch: u16,
}

impl Visited {
    fn reset(&mut self, n: usize) {
        if self.marks.len() < n {
            self.marks.resize(n, 0);
        }
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.marks.iter_mut().for_each(|m| *m = 0);
            self.epoch = 1;
        }
    }

    /// Marks `id`; returns false if it was already marked this epoch.
    #[inline]
    pub(crate) fn insert(&mut self, id: u32) -> bool {
        let slot = &mut self.marks[id as usize];
        if *slot == self.epoch {
            false
        } else {
            *slot = self.epoch;
            true
        }
    }
}

thread_local! {
    static POOL: RefCell<Visited> = RefCell::new(Visited::default());
}

/// Runs `f` with a cleared visited set covering ids `0..n`.
pub(crate) fn with_visited<R>(n: usize, f: impl FnOnce(&mut Visited) -> R) -> R {
    // Taking the set out of the cell keeps nested calls safe: they get a fresh one.
    let mut visited = POOL.with(|p| std::mem::take(&mut *p.borrow_mut()));
    visited.reset(n);
    let out = f(&mut visited);
    POOL.with(|p| *p.borrow_mut() = visited);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn marks_are_cleared_between_uses() {
        with_visited(4, |v| {
            assert!(v.insert(2));
            assert!(!v.insert(2));
        });
        with_visited(8, |v| {
            assert!(v.insert(2));
            assert!(v.insert(7));
        });
    }

    #[test]
    fn epoch_wraparound_resets() {
        for _ in 0..70_000 {
            with_visited(3, |v| assert!(v.insert(1)));
        }
    }
}
