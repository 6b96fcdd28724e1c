//! Least-recently-used cache of kernel matrix rows under a byte budget.

use std::collections::BTreeMap;

pub struct RowCache {
    rows: Vec<Option<Box<[f64]>>>,
    stamps: Vec<u64>,
    by_stamp: BTreeMap<u64, usize>,
    clock: u64,
    row_bytes: usize,
    capacity: usize,
    hits: u64,
    misses: u64,
}

impl RowCache {
    /// At least two rows are always kept, whatever the budget.
    pub fn new(n_rows: usize, row_len: usize, budget_bytes: usize) -> Self {
        let row_bytes = (row_len * std::mem::size_of::<f64>()).max(1);
        RowCache {
            rows: vec![None; n_rows],
            stamps: vec![0; n_rows],
            by_stamp: BTreeMap::new(),
            clock: 0,
            row_bytes,
            capacity: (budget_bytes / row_bytes).max(2),
            hits: 0,
            misses: 0,
        }
    }

    pub fn capacity_rows(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.by_stamp.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_stamp.is_empty()
    }

    pub fn bytes_used(&self) -> usize {
        self.len() * self.row_bytes
    }

    pub fn hits_misses(&self) -> (u64, u64) {
        (self.hits, self.misses)
    }

    pub fn contains(&self, i: usize) -> bool {
        self.rows[i].is_some()
    }

    /// Row `i`, computed by `fill` on a miss.
    pub fn get_or_fill(&mut self, i: usize, fill: impl FnOnce(&mut [f64])) -> &[f64] {
        self.clock += 1;
        if self.rows[i].is_some() {
            self.hits += 1;
            self.by_stamp.remove(&self.stamps[i]);
        } else {
            self.misses += 1;
            let mut buf = if self.by_stamp.len() >= self.capacity {
                let (_, victim) = self.by_stamp.pop_first().expect("cache is non-empty");
                self.rows[victim].take().expect("evicted row is present")
            } else {
                vec![0.0; self.row_bytes / std::mem::size_of::<f64>()].into_boxed_slice()
            };
            fill(&mut buf);
            self.rows[i] = Some(buf);
        }
        self.stamps[i] = self.clock;
        self.by_stamp.insert(self.clock, i);
        self.rows[i].as_deref().unwrap()
    }
}
