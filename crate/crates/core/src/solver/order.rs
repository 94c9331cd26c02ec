//! Activity-ordered variable heap (VSIDS) with lowest-index tie-break.

use alloc::vec;
use alloc::vec::Vec;

const ABSENT: usize = usize::MAX;

#[derive(Clone, Debug)]
pub struct VarOrder {
    activity: Vec<f64>,
    heap: Vec<u32>,
    /// Heap position per variable, `ABSENT` when not in the heap.
    pos: Vec<usize>,
    inc: f64,
    decay: f64,
}

impl VarOrder {
    pub fn new(num_vars: u32, decay: f64) -> VarOrder {
        let mut order = VarOrder {
            activity: vec![0.0; num_vars as usize + 1],
            heap: Vec::with_capacity(num_vars as usize),
            pos: vec![ABSENT; num_vars as usize + 1],
            inc: 1.0,
            decay,
        };
        for v in 1..=num_vars {
            order.insert(v);
        }
        order
    }

    pub fn activity(&self, var: u32) -> f64 {
        self.activity[var as usize]
    }

    fn before(&self, a: u32, b: u32) -> bool {
        let (x, y) = (self.activity[a as usize], self.activity[b as usize]);
        x > y || (x == y && a < b)
    }

    pub fn contains(&self, var: u32) -> bool {
        self.pos[var as usize] != ABSENT
    }

    pub fn insert(&mut self, var: u32) {
        if self.contains(var) {
            return;
        }
        self.pos[var as usize] = self.heap.len();
        self.heap.push(var);
        self.sift_up(self.heap.len() - 1);
    }

    /// Removes and returns the variable with the highest activity.
    pub fn pop(&mut self) -> Option<u32> {
        let top = *self.heap.first()?;
        let last = self.heap.pop().expect("non-empty");
        self.pos[top as usize] = ABSENT;
        if !self.heap.is_empty() {
            self.heap[0] = last;
            self.pos[last as usize] = 0;
            self.sift_down(0);
        }
        Some(top)
    }

    pub fn bump(&mut self, var: u32) {
        let a = &mut self.activity[var as usize];
        *a += self.inc;
        if *a > 1e100 {
            for a in self.activity.iter_mut() {
                *a *= 1e-100;
            }
            self.inc *= 1e-100;
        }
        if self.contains(var) {
            self.sift_up(self.pos[var as usize]);
        }
    }

    pub fn decay(&mut self) {
        self.inc /= self.decay;
    }

    fn sift_up(&mut self, mut i: usize) {
        let v = self.heap[i];
        while i > 0 {
            let parent = (i - 1) / 2;
            let p = self.heap[parent];
            if !self.before(v, p) {
                break;
            }
            self.heap[i] = p;
            self.pos[p as usize] = i;
            i = parent;
        }
        self.heap[i] = v;
        self.pos[v as usize] = i;
    }

    fn sift_down(&mut self, mut i: usize) {
        let v = self.heap[i];
        let n = self.heap.len();
        loop {
            let l = 2 * i + 1;
            if l >= n {
                break;
            }
            let r = l + 1;
            let child = if r < n && self.before(self.heap[r], self.heap[l]) {
                r
            } else {
                l
            };
            if !self.before(self.heap[child], v) {
                break;
            }
            self.heap[i] = self.heap[child];
            self.pos[self.heap[i] as usize] = i;
            i = child;
        }
        self.heap[i] = v;
        self.pos[v as usize] = i;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ties_break_by_lowest_index() {
        let mut o = VarOrder::new(5, 0.95);
        assert_eq!(o.pop(), Some(1));
        assert_eq!(o.pop(), Some(2));
        o.insert(1);
        assert_eq!(o.pop(), Some(1));
    }

    #[test]
    fn bumped_variable_comes_first() {
        let mut o = VarOrder::new(6, 0.95);
        o.bump(5);
        o.decay();
        o.bump(3);
        assert_eq!(o.pop(), Some(3));
        assert_eq!(o.pop(), Some(5));
        assert_eq!(o.pop(), Some(1));
    }

    #[test]
    fn drains_in_activity_order() {
        let mut o = VarOrder::new(50, 0.9);
        for v in (1..=50).rev() {
            for _ in 0..(v % 7) {
                o.bump(v);
            }
            o.decay();
        }
        let mut last = f64::INFINITY;
        while let Some(v) = o.pop() {
            assert!(o.activity(v) <= last);
            last = o.activity(v);
        }
    }
}
